//! Metrics aggregation: fold receive summaries, schedule reports and sweep
//! CSVs into one machine-readable export.

use crate::RxSummary;
use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use usdr_core::pipeline::ScheduleReport;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BerPoint {
    pub waveform: String,
    pub snr_db: f64,
    pub ber: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ser: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorCounters {
    pub frames_failed: usize,
    pub packets_missing: usize,
    pub schedule_misses: usize,
}

/// The export document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsExport {
    pub schema_version: String,
    pub frames_ok: usize,
    pub corrected_bits: usize,
    pub throughput_bytes_per_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evm_db: Option<f64>,
    pub ber_points: Vec<BerPoint>,
    pub error_counters: ErrorCounters,
}

impl Default for MetricsExport {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            frames_ok: 0,
            corrected_bits: 0,
            throughput_bytes_per_s: 0.0,
            evm_db: None,
            ber_points: Vec::new(),
            error_counters: ErrorCounters::default(),
        }
    }
}

/// Aggregate run artifacts. Any of the inputs may be absent.
pub fn export_metrics(
    rx_summaries: &[RxSummary],
    schedule: Option<&ScheduleReport>,
    sweep_csv: Option<&str>,
) -> Result<MetricsExport> {
    let mut export = MetricsExport::default();
    let mut bytes = 0usize;
    let mut seconds = 0.0f64;
    for s in rx_summaries {
        export.frames_ok += s.frames_ok;
        export.corrected_bits += s.corrected_bits;
        export.error_counters.frames_failed += s.frames_failed;
        export.error_counters.packets_missing += s.missing_seqs.len();
        bytes += s.bytes_out;
        seconds += s.signal_duration_s;
        if let Some(evm) = s.evm_db {
            // keep the worst EVM observed across runs
            export.evm_db = Some(export.evm_db.map_or(evm, |e: f64| e.max(evm)));
        }
    }
    if seconds > 0.0 {
        export.throughput_bytes_per_s = bytes as f64 / seconds;
    }
    if let Some(report) = schedule {
        export.error_counters.schedule_misses = report.miss_count;
    }
    if let Some(csv) = sweep_csv {
        export.ber_points = parse_sweep_csv(csv)?;
    }
    Ok(export)
}

fn parse_sweep_csv(csv: &str) -> Result<Vec<BerPoint>> {
    let mut points = Vec::new();
    for (i, line) in csv.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue; // header
        }
        let fields: Vec<&str> = line.split(',').collect();
        anyhow::ensure!(fields.len() == 6, "sweep CSV line {i} has {} fields", fields.len());
        let parse = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>().with_context(|| format!("bad {what} on line {i}: {s:?}"))
        };
        points.push(BerPoint {
            waveform: fields[0].to_string(),
            snr_db: parse(fields[1], "snr_db")?,
            ber: parse(fields[4], "ber")?,
            ser: if fields[5].is_empty() {
                None
            } else {
                Some(parse(fields[5], "ser")?)
            },
        });
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use usdr_core::pipeline::{ScheduleReport, StageRecord};

    fn summary(ok: usize, failed: usize, missing: Vec<u32>) -> RxSummary {
        RxSummary {
            waveform: "ook".into(),
            frames_ok: ok,
            frames_failed: failed,
            missing_seqs: missing,
            bytes_out: 1000,
            signal_duration_s: 2.0,
            ..RxSummary::default()
        }
    }

    #[test]
    fn clean_run_zero_counters() {
        let export = export_metrics(&[summary(5, 0, vec![])], None, None).unwrap();
        assert_eq!(export.schema_version, "1");
        assert_eq!(export.error_counters.frames_failed, 0);
        assert_eq!(export.error_counters.packets_missing, 0);
        assert_eq!(export.error_counters.schedule_misses, 0);
        assert_eq!(export.frames_ok, 5);
        assert!((export.throughput_bytes_per_s - 500.0).abs() < 1e-12);
    }

    #[test]
    fn schedule_misses_surface() {
        let report = ScheduleReport {
            records: (0..3)
                .map(|cycle| StageRecord {
                    stage_id: "slow".into(),
                    cycle,
                    start_ts: cycle as f64,
                    end_ts: cycle as f64 + 0.5,
                    deadline_met: false,
                })
                .collect(),
            miss_count: 3,
        };
        let export = export_metrics(&[], Some(&report), None).unwrap();
        assert_eq!(export.error_counters.schedule_misses, 3);
    }

    #[test]
    fn sweep_rows_parse() {
        let csv = "waveform,snr_db,trials,bit_errors,ber,ser\n\
                   lora,-12,4,100,0.05,0.2\n\
                   ofdm,10,4,7,0.001,\n";
        let export = export_metrics(&[], None, Some(csv)).unwrap();
        assert_eq!(export.ber_points.len(), 2);
        assert_eq!(export.ber_points[0].ser, Some(0.2));
        assert_eq!(export.ber_points[1].ser, None);
        assert_eq!(export.ber_points[1].ber, 0.001);
    }

    #[test]
    fn schema_version_always_present() {
        let json = serde_json::to_string(&export_metrics(&[], None, None).unwrap()).unwrap();
        assert!(json.contains("\"schema_version\":\"1\""));
    }
}
