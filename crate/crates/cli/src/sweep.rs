//! BER/SER sweep harness: trials of each modem through the seeded AWGN
//! channel per SNR point, reported as CSV.
//!
//! LoRa rows measure the bare CSS modem (time-aligned symbols, Gray-mapped
//! words) so the symbol error rate is meaningful; the full codec chain is
//! exercised by the loopback suites. OFDM and OOK rows run their complete
//! packet paths.

use anyhow::{Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use usdr_core::channel::{apply_channel, ChannelModel};
use usdr_core::lora::{gray_map, CssModem, LoRaConfig};
use usdr_core::ofdm::{OfdmConfig, OfdmModem};
use usdr_core::ook::{ook_demodulate, ook_modulate, OokConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Waveform {
    Lora,
    Ofdm,
    Ook,
}

impl Waveform {
    pub fn name(self) -> &'static str {
        match self {
            Waveform::Lora => "lora",
            Waveform::Ofdm => "ofdm",
            Waveform::Ook => "ook",
        }
    }
}

fn default_trials() -> usize {
    20
}

/// Sweep description, loaded from `--spec`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    pub waveform: Waveform,
    /// Waveform config blob (LoRaConfig / OfdmConfig / OokConfig); null for
    /// the defaults.
    #[serde(default)]
    pub config: Value,
    pub snr_points_db: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials_per_point: usize,
    #[serde(default)]
    pub seed: u64,
    /// Replace the AWGN channel with the identity (BER floor check).
    #[serde(default)]
    pub noise_disabled: bool,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        anyhow::ensure!(self.trials_per_point >= 1, "trials_per_point must be >= 1");
        anyhow::ensure!(!self.snr_points_db.is_empty(), "snr list must be nonempty");
        Ok(())
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub waveform: &'static str,
    pub snr_db: f64,
    pub trials: usize,
    pub bit_errors: u64,
    pub ber: f64,
    pub ser: Option<f64>,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

fn trial_seed(base: u64, point: usize, trial: usize) -> u64 {
    splitmix64(base ^ splitmix64(point as u64 ^ splitmix64(trial as u64)))
}

fn channel_for(spec: &SweepSpec, snr_db: f64, seed: u64) -> ChannelModel {
    if spec.noise_disabled {
        ChannelModel::ideal()
    } else {
        ChannelModel::awgn(snr_db, seed)
    }
}

const LORA_SYMBOLS_PER_TRIAL: usize = 64;
const OOK_BITS_PER_TRIAL: usize = 1024;
const OFDM_BLOCKS_PER_TRIAL: usize = 8;

/// Run the sweep and return the rows.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    match spec.waveform {
        Waveform::Lora => sweep_lora(spec),
        Waveform::Ofdm => sweep_ofdm(spec),
        Waveform::Ook => sweep_ook(spec),
    }
}

fn parse_config<T: serde::de::DeserializeOwned + Default>(value: &Value) -> Result<T> {
    if value.is_null() {
        Ok(T::default())
    } else {
        serde_json::from_value(value.clone()).context("bad waveform config in sweep spec")
    }
}

fn sweep_lora(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let config: LoRaConfig = if spec.config.is_null() {
        LoRaConfig::new(7, 125_000.0, 1)?
    } else {
        serde_json::from_value(spec.config.clone()).context("bad LoRa config in sweep spec")?
    };
    let modem = CssModem::new(config.clone())?;
    let m = config.chips() as u16;
    let bits_per_symbol = config.sf as u64;
    let mut rows = Vec::new();
    for (pi, &snr_db) in spec.snr_points_db.iter().enumerate() {
        let mut bit_errors = 0u64;
        let mut symbol_errors = 0u64;
        let mut symbols_total = 0u64;
        for trial in 0..spec.trials_per_point {
            let seed = trial_seed(spec.seed, pi, trial);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let symbols: Vec<u16> =
                (0..LORA_SYMBOLS_PER_TRIAL).map(|_| rng.random_range(0..m)).collect();
            let frame = modem.modulate_symbols(&symbols)?;
            let rx = apply_channel(&frame, &channel_for(spec, snr_db, seed))?;
            let n = modem.samples_per_symbol();
            for (k, &tx_sym) in symbols.iter().enumerate() {
                let (hat, _) = modem.demodulate(&rx.samples[k * n..(k + 1) * n])?;
                symbol_errors += (hat != tx_sym) as u64;
                let tx_word = gray_map(tx_sym, config.sf, false)?;
                let rx_word = gray_map(hat, config.sf, false)?;
                bit_errors += (tx_word ^ rx_word).count_ones() as u64;
            }
            symbols_total += symbols.len() as u64;
        }
        rows.push(SweepRow {
            waveform: "lora",
            snr_db,
            trials: spec.trials_per_point,
            bit_errors,
            ber: bit_errors as f64 / (symbols_total * bits_per_symbol) as f64,
            ser: Some(symbol_errors as f64 / symbols_total as f64),
        });
    }
    Ok(rows)
}

fn sweep_ofdm(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let config: OfdmConfig = if spec.config.is_null() {
        OfdmConfig::new(64, 20, 16)?
    } else {
        serde_json::from_value(spec.config.clone()).context("bad OFDM config in sweep spec")?
    };
    let modem = OfdmModem::new(config.clone())?;
    let bits_per_trial = config.bits_per_block() * OFDM_BLOCKS_PER_TRIAL;
    let mut rows = Vec::new();
    for (pi, &snr_db) in spec.snr_points_db.iter().enumerate() {
        let mut bit_errors = 0u64;
        let mut bits_total = 0u64;
        for trial in 0..spec.trials_per_point {
            let seed = trial_seed(spec.seed, pi, trial);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let bits: Vec<u8> = (0..bits_per_trial).map(|_| rng.random_range(0..2)).collect();
            let packet = modem.encode_packet(&bits)?;
            let frame = packet.to_frame(1.0);
            let rx = apply_channel(&frame, &channel_for(spec, snr_db, seed))?;
            let decoded = modem.decode_packet(&rx.samples)?;
            for (k, &tx_bit) in bits.iter().enumerate() {
                let rx_bit = decoded.bits.get(k).copied().unwrap_or(tx_bit ^ 1);
                bit_errors += (rx_bit != tx_bit) as u64;
            }
            bits_total += bits.len() as u64;
        }
        rows.push(SweepRow {
            waveform: "ofdm",
            snr_db,
            trials: spec.trials_per_point,
            bit_errors,
            ber: bit_errors as f64 / bits_total as f64,
            ser: None,
        });
    }
    Ok(rows)
}

fn sweep_ook(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let config: OokConfig = parse_config(&spec.config)?;
    let mut rows = Vec::new();
    for (pi, &snr_db) in spec.snr_points_db.iter().enumerate() {
        let mut bit_errors = 0u64;
        let mut bits_total = 0u64;
        for trial in 0..spec.trials_per_point {
            let seed = trial_seed(spec.seed, pi, trial);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let bits: Vec<u8> = (0..OOK_BITS_PER_TRIAL).map(|_| rng.random_range(0..2)).collect();
            let frame = ook_modulate(&bits, &config)?;
            let rx = apply_channel(&frame, &channel_for(spec, snr_db, seed))?;
            let hat = ook_demodulate(&rx, &config)?;
            bit_errors += bits
                .iter()
                .zip(hat.iter())
                .filter(|(a, b)| a != b)
                .count() as u64;
            bits_total += bits.len() as u64;
        }
        rows.push(SweepRow {
            waveform: "ook",
            snr_db,
            trials: spec.trials_per_point,
            bit_errors,
            ber: bit_errors as f64 / bits_total as f64,
            ser: None,
        });
    }
    Ok(rows)
}

/// Render rows as the sweep CSV (header + one line per SNR point).
pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut csv = String::from("waveform,snr_db,trials,bit_errors,ber,ser\n");
    for r in rows {
        let ser = r.ser.map(|s| s.to_string()).unwrap_or_default();
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.waveform, r.snr_db, r.trials, r.bit_errors, r.ber, ser
        ));
    }
    csv
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(waveform: Waveform, snrs: &[f64], noise_disabled: bool) -> SweepSpec {
        SweepSpec {
            waveform,
            config: Value::Null,
            snr_points_db: snrs.to_vec(),
            trials_per_point: 4,
            seed: 11,
            noise_disabled,
        }
    }

    #[test]
    fn noise_disabled_floor_is_zero() {
        for waveform in [Waveform::Lora, Waveform::Ofdm, Waveform::Ook] {
            let rows = run_sweep(&spec(waveform, &[10.0], true)).unwrap();
            assert_eq!(rows[0].bit_errors, 0, "{waveform:?}");
            assert_eq!(rows[0].ber, 0.0);
            if waveform == Waveform::Lora {
                assert_eq!(rows[0].ser, Some(0.0));
            }
        }
    }

    #[test]
    fn rerun_is_identical() {
        let s = spec(Waveform::Ook, &[8.0, 4.0], false);
        let a = to_csv(&run_sweep(&s).unwrap());
        let b = to_csv(&run_sweep(&s).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn lora_ser_improves_with_sf() {
        // same harsh SNR, SF 7 vs 9: higher spreading factor never does worse
        let mut s7 = spec(Waveform::Lora, &[-12.0], false);
        s7.config = serde_json::to_value(LoRaConfig::new(7, 125_000.0, 1).unwrap()).unwrap();
        let mut s9 = s7.clone();
        s9.config = serde_json::to_value(LoRaConfig::new(9, 125_000.0, 1).unwrap()).unwrap();
        let ser7 = run_sweep(&s7).unwrap()[0].ser.unwrap();
        let ser9 = run_sweep(&s9).unwrap()[0].ser.unwrap();
        assert!(ser9 <= ser7, "ser9 {ser9} > ser7 {ser7}");
        assert!(ser7 > 0.0);
    }

    #[test]
    fn csv_shape() {
        let rows = run_sweep(&spec(Waveform::Ofdm, &[25.0], false)).unwrap();
        let csv = to_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "waveform,snr_db,trials,bit_errors,ber,ser");
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields.len(), 6);
        assert_eq!(fields[0], "ofdm");
        assert_eq!(fields[5], ""); // no SER column for OFDM
    }

    #[test]
    fn spec_validation() {
        let mut s = spec(Waveform::Ook, &[], false);
        assert!(run_sweep(&s).is_err());
        s.snr_points_db = vec![1.0];
        s.trials_per_point = 0;
        assert!(run_sweep(&s).is_err());
    }
}
