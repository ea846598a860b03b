//! Command implementations behind the `usdr` binary.
//!
//! Exit-code contract: 0 ok, 2 usage/input error, 3 partial or degraded
//! output. Usage problems are raised as [`UsageError`] so `main` can map
//! them; partial outcomes come back as [`Outcome::Partial`].

use crate::endpoint::{read_frame, write_frame, Endpoint};
use crate::gateway::{run_gateway, GatewayConfig};
use crate::monitor::export_metrics;
use crate::stages::make_stage;
use crate::sweep::{run_sweep, to_csv, SweepSpec, Waveform};
use crate::RxSummary;
use anyhow::{Context, Result};
use clap::Args;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;
use usdr_core::channel::{apply_channel, ChannelModel};
use usdr_core::iq::{bits_to_bytes, bytes_to_bits, BitBuffer, BitOrder, IqFrame};
use usdr_core::lora::{payload_symbol_count, FrameCodec, LoRaConfig, HEADER_SYMBOLS};
use usdr_core::ofdm::{OfdmConfig, OfdmModem};
use usdr_core::ook::{
    depacketize, ook_demodulate, ook_modulate, packetize, parse_packets, OokConfig, MAX_PAYLOAD,
};
use usdr_core::pipeline::{
    plan_schedule, profile_stage, run_pipeline, ScheduleReport, StageProfile, TimingTable,
};

/// Problems with the invocation or its inputs; mapped to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

/// Command result for `main` to map to an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    /// Output was written but is incomplete or degraded (exit 3).
    Partial,
}

fn read_input(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| usage(format!("cannot read input {}: {e}", path.display())))
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    let raw = fs::read(path).map_err(|e| usage(format!("cannot read {what} {}: {e}", path.display())))?;
    serde_json::from_slice(&raw).map_err(|e| usage(format!("bad {what} {}: {e}", path.display())))
}

fn load_channel(args_channel: &Option<PathBuf>, seed: Option<u64>) -> Result<Option<ChannelModel>> {
    let Some(path) = args_channel else {
        return Ok(None);
    };
    let mut model: ChannelModel = load_json(path, "channel model")?;
    if let Some(seed) = seed {
        model.seed = seed;
    }
    Ok(Some(model))
}

fn maybe_apply_channel(frame: IqFrame, model: &Option<ChannelModel>) -> Result<IqFrame> {
    match model {
        Some(m) => Ok(apply_channel(&frame, m)?),
        None => Ok(frame),
    }
}

#[derive(Debug, Args)]
pub struct TxArgs {
    /// Waveform config JSON (defaults per waveform when omitted).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Channel model JSON applied to the modulated signal.
    #[arg(long)]
    pub channel: Option<PathBuf>,
    /// Payload file to transmit.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Sink: a .iq path or udp://host:port.
    #[arg(long)]
    pub out: String,
    /// Seed override for the channel model and the UDP stream id.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sample rate written to file sidecars for rate-agnostic waveforms.
    #[arg(long, default_value_t = 1_000_000.0)]
    pub sample_rate: f64,
    /// Packet payload cap for the OOK packetizer.
    #[arg(long, default_value_t = MAX_PAYLOAD)]
    pub max_payload: usize,
}

#[derive(Debug, Args)]
pub struct RxArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Channel model JSON applied to the received signal before decoding.
    #[arg(long)]
    pub channel: Option<PathBuf>,
    /// Source: a .iq path or udp://host:port to listen on.
    #[arg(long = "in")]
    pub input: String,
    /// Recovered payload file.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the JSON status summary here (it always prints to stdout).
    #[arg(long)]
    pub status: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overall UDP receive timeout in seconds.
    #[arg(long, default_value_t = 10.0)]
    pub timeout_s: f64,
}

fn lora_config(path: &Option<PathBuf>) -> Result<LoRaConfig> {
    match path {
        Some(p) => {
            let c: LoRaConfig = load_json(p, "LoRa config")?;
            c.validate().map_err(|e| usage(e.to_string()))?;
            Ok(c)
        }
        None => Ok(LoRaConfig::new(7, 125_000.0, 1)?),
    }
}

fn ofdm_config(path: &Option<PathBuf>) -> Result<OfdmConfig> {
    match path {
        Some(p) => {
            let c: OfdmConfig = load_json(p, "OFDM config")?;
            c.validate().map_err(|e| usage(e.to_string()))?;
            Ok(c)
        }
        None => Ok(OfdmConfig::new(64, 20, 16)?),
    }
}

fn ook_config(path: &Option<PathBuf>) -> Result<OokConfig> {
    match path {
        Some(p) => {
            let c: OokConfig = load_json(p, "OOK config")?;
            c.validate().map_err(|e| usage(e.to_string()))?;
            Ok(c)
        }
        None => Ok(OokConfig::default()),
    }
}

/// Encode and transmit one input file.
pub fn cmd_tx(waveform: Waveform, args: &TxArgs) -> Result<Outcome> {
    let payload = read_input(&args.input)?;
    let channel = load_channel(&args.channel, args.seed)?;
    let frame = match waveform {
        Waveform::Lora => {
            let codec = FrameCodec::new(lora_config(&args.config)?)?;
            let mut samples = Vec::new();
            let mut rate = 0.0;
            for chunk in payload.chunks(255) {
                let frame = codec.encode(chunk)?;
                rate = frame.sample_rate_hz;
                samples.extend(frame.samples);
            }
            if samples.is_empty() {
                return Err(usage("empty input: nothing to transmit"));
            }
            IqFrame::new(samples, rate)
        }
        Waveform::Ofdm => {
            let modem = OfdmModem::new(ofdm_config(&args.config)?)?;
            let bits = bytes_to_bits(&payload, BitOrder::MsbFirst);
            modem.encode_packet(&bits.bits)?.to_frame(args.sample_rate)
        }
        Waveform::Ook => {
            let config = ook_config(&args.config)?;
            let packets = packetize(&payload, args.max_payload)?;
            let wire: Vec<u8> = packets.iter().flat_map(|p| p.to_bytes()).collect();
            if wire.is_empty() {
                return Err(usage("empty input: nothing to transmit"));
            }
            let bits = bytes_to_bits(&wire, BitOrder::MsbFirst);
            let mut frame = ook_modulate(&bits.bits, &config)?;
            frame.sample_rate_hz = args.sample_rate;
            frame
        }
    };
    let frame = maybe_apply_channel(frame, &channel)?;
    let stream_id = args.seed.unwrap_or(0) as u32;
    write_frame(&frame, &Endpoint::parse(&args.out), stream_id)?;
    Ok(Outcome::Ok)
}

/// Receive, decode, and write one output file plus its JSON summary.
pub fn cmd_rx(waveform: Waveform, args: &RxArgs) -> Result<Outcome> {
    let endpoint = Endpoint::parse(&args.input);
    let (frame, missing_frags) = read_frame(&endpoint, Duration::from_secs_f64(args.timeout_s))?;
    let frame = maybe_apply_channel(frame, &load_channel(&args.channel, args.seed)?)?;
    let mut summary = RxSummary {
        waveform: waveform.name().to_string(),
        signal_duration_s: frame.len() as f64 / frame.sample_rate_hz,
        ..RxSummary::default()
    };
    let bytes = match waveform {
        Waveform::Lora => rx_lora(&frame, &args.config, &mut summary)?,
        Waveform::Ofdm => rx_ofdm(&frame, &args.config, &mut summary)?,
        Waveform::Ook => rx_ook(&frame, &args.config, &mut summary)?,
    };
    summary.bytes_out = bytes.len();
    fs::write(&args.out, &bytes).with_context(|| format!("write {}", args.out.display()))?;
    let json = serde_json::to_string_pretty(&summary)?;
    println!("{json}");
    if let Some(path) = &args.status {
        fs::write(path, &json)?;
    }
    if summary.degraded() || !missing_frags.is_empty() {
        return Ok(Outcome::Partial);
    }
    Ok(Outcome::Ok)
}

fn rx_lora(frame: &IqFrame, config: &Option<PathBuf>, summary: &mut RxSummary) -> Result<Vec<u8>> {
    let config = lora_config(config)?;
    let codec = FrameCodec::new(config.clone())?;
    let n = config.samples_per_symbol();
    let mut bytes = Vec::new();
    let mut cursor = 0usize;
    while cursor + config.preamble_len_samples() <= frame.samples.len() {
        let window = IqFrame::new(frame.samples[cursor..].to_vec(), frame.sample_rate_hz);
        let result = codec.decode(&window)?;
        if !result.status.found {
            break;
        }
        summary.preambles_found += 1;
        summary.offsets.push(cursor + result.status.offset_samples);
        summary.corrected_bits += result.status.corrected_bits;
        let mut advance = result.status.offset_samples + config.preamble_len_samples();
        if result.status.ok() {
            summary.frames_ok += 1;
            let body_syms = if config.explicit_header { HEADER_SYMBOLS } else { 0 }
                + payload_symbol_count(
                    result.payload.len(),
                    config.payload_crc,
                    config.cr,
                    config.payload_sf_eff(),
                );
            advance += body_syms * n;
            bytes.extend(result.payload);
        } else {
            summary.frames_failed += 1;
        }
        cursor += advance.max(n);
    }
    Ok(bytes)
}

fn rx_ofdm(frame: &IqFrame, config: &Option<PathBuf>, summary: &mut RxSummary) -> Result<Vec<u8>> {
    let config = ofdm_config(config)?;
    let modem = OfdmModem::new(config.clone())?;
    // tolerate a truncated capture (partial UDP stream) by trimming to
    // whole blocks
    let usable = frame.samples.len() - frame.samples.len() % config.block_len();
    if usable < frame.samples.len() {
        summary.frames_failed += 1;
    }
    if usable == 0 {
        return Ok(Vec::new());
    }
    let decoded = modem.decode_packet(&frame.samples[..usable])?;
    summary.evm_db = Some(decoded.evm_db);
    summary.frames_ok += 1;
    summary.preambles_found += 1;
    let take = decoded.bits.len() / 8 * 8;
    let buf = BitBuffer {
        bits: decoded.bits[..take].to_vec(),
        bit_order: BitOrder::MsbFirst,
    };
    Ok(bits_to_bytes(&buf)?)
}

fn rx_ook(frame: &IqFrame, config: &Option<PathBuf>, summary: &mut RxSummary) -> Result<Vec<u8>> {
    let config = ook_config(config)?;
    let usable = frame.samples.len() - frame.samples.len() % config.sps;
    if usable == 0 {
        return Ok(Vec::new());
    }
    let trimmed = IqFrame::new(frame.samples[..usable].to_vec(), frame.sample_rate_hz);
    let bits = ook_demodulate(&trimmed, &config)?;
    let take = bits.len() / 8 * 8;
    let buf = BitBuffer {
        bits: bits[..take].to_vec(),
        bit_order: BitOrder::MsbFirst,
    };
    let wire = bits_to_bytes(&buf)?;
    let packets = parse_packets(&wire);
    summary.preambles_found = packets.len();
    let (bytes, missing) = depacketize(&packets);
    summary.frames_ok = packets.iter().filter(|p| p.crc_ok()).count();
    summary.frames_failed = missing.len();
    summary.missing_seqs = missing;
    Ok(bytes)
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Sweep spec JSON.
    #[arg(long)]
    pub spec: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<Outcome> {
    let spec: SweepSpec = load_json(&args.spec, "sweep spec")?;
    let rows = run_sweep(&spec)?;
    let csv = to_csv(&rows);
    fs::write(&args.out, &csv).with_context(|| format!("write {}", args.out.display()))?;
    print!("{csv}");
    Ok(Outcome::Ok)
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    /// Stage ids to profile (default: the whole registry).
    #[arg(long, value_delimiter = ',')]
    pub stages: Vec<String>,
    #[arg(long, default_value_t = 5)]
    pub runs: usize,
    /// Output profiles JSON.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_pipeline_profile(args: &ProfileArgs) -> Result<Outcome> {
    let ids: Vec<String> = if args.stages.is_empty() {
        crate::stages::STAGE_IDS.iter().map(|s| s.to_string()).collect()
    } else {
        args.stages.clone()
    };
    let mut profiles = Vec::new();
    for id in &ids {
        let mut stage = make_stage(id).map_err(|e| usage(e.to_string()))?;
        let profile = profile_stage(id, move || (stage.work)(0), args.runs)?;
        println!(
            "{id}: median {:.3} ms, p95 {:.3} ms over {} runs",
            profile.median_runtime_s * 1e3,
            profile.p95_runtime_s * 1e3,
            profile.runs
        );
        profiles.push(profile);
    }
    fs::write(&args.out, serde_json::to_vec_pretty(&profiles)?)?;
    Ok(Outcome::Ok)
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Profiles JSON from `pipeline profile`.
    #[arg(long)]
    pub profiles: PathBuf,
    #[arg(long)]
    pub period_ms: f64,
    #[arg(long, default_value_t = 1.2)]
    pub budget_factor: f64,
    /// Dependency edges, repeatable: --dep producer>consumer.
    #[arg(long = "dep")]
    pub deps: Vec<String>,
    /// Output timing table JSON.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_pipeline_plan(args: &PlanArgs) -> Result<Outcome> {
    let profiles: Vec<StageProfile> = load_json(&args.profiles, "profiles")?;
    let mut deps = Vec::new();
    for d in &args.deps {
        let (from, to) = d
            .split_once('>')
            .ok_or_else(|| usage(format!("bad --dep {d:?}, expected from>to")))?;
        deps.push((from.trim().to_string(), to.trim().to_string()));
    }
    let table = plan_schedule(&profiles, &deps, args.period_ms / 1e3, args.budget_factor)?;
    for e in &table.entries {
        println!(
            "{}: action_time {:.3} ms, budget {:.3} ms, period {:.3} ms",
            e.stage_id,
            e.action_time_s * 1e3,
            e.budget_s * 1e3,
            e.action_period_s * 1e3
        );
    }
    fs::write(&args.out, serde_json::to_vec_pretty(&table)?)?;
    Ok(Outcome::Ok)
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Timing table JSON from `pipeline plan`.
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long)]
    pub cycles: u64,
    /// Output schedule report JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn cmd_pipeline_run(args: &RunArgs) -> Result<Outcome> {
    let table: TimingTable = load_json(&args.table, "timing table")?;
    let mut stages = Vec::new();
    for entry in &table.entries {
        stages.push(make_stage(&entry.stage_id).map_err(|e| usage(e.to_string()))?);
    }
    let report = run_pipeline(stages, &table, args.cycles)?;
    print_report_summary(&report, &table);
    if let Some(path) = &args.out {
        fs::write(path, serde_json::to_vec_pretty(&report)?)?;
    }
    Ok(Outcome::Ok)
}

fn print_report_summary(report: &ScheduleReport, table: &TimingTable) {
    for entry in &table.entries {
        let misses = report.misses_for(&entry.stage_id);
        let runs = report
            .records
            .iter()
            .filter(|r| r.stage_id == entry.stage_id)
            .count();
        println!("{}: {} releases, {} deadline misses", entry.stage_id, runs, misses);
    }
    println!("total deadline misses: {}", report.miss_count);
}

#[derive(Debug, Args)]
pub struct GatewayArgs {
    #[arg(long, default_value_t = 3)]
    pub nodes: usize,
    #[arg(long, default_value_t = 30.0)]
    pub duration_s: f64,
    /// Emission interval bounds in milliseconds (paper cadence 2000..5000;
    /// shrink for quick runs).
    #[arg(long, default_value_t = 2000)]
    pub interval_min_ms: u64,
    #[arg(long, default_value_t = 5000)]
    pub interval_max_ms: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Append decoded records to this JSON-lines log.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn cmd_demo_gateway(args: &GatewayArgs) -> Result<Outcome> {
    let mut config = GatewayConfig::new(args.nodes, args.duration_s, args.seed)
        .map_err(|e| usage(e.to_string()))?;
    config.interval_min_ms = args.interval_min_ms;
    config.interval_max_ms = args.interval_max_ms;
    let outcome = run_gateway(&config)?;
    println!("{:>8}  {:>4}  {:<14} {:>10}", "time[s]", "node", "sensor", "value");
    let mut log = String::new();
    for event in &outcome.events {
        println!(
            "{:>8.3}  {:>4}  {:<14} {:>10.3}",
            event.time_s,
            event.record.node_id,
            format!("{:?}", event.record.sensor_kind),
            event.record.value
        );
        log.push_str(&serde_json::to_string(event)?);
        log.push('\n');
    }
    println!(
        "emitted {} frames, decoded {}, lost {} to collisions",
        outcome.emitted, outcome.decoded, outcome.collided
    );
    if let Some(path) = &args.out {
        fs::write(path, log)?;
    }
    Ok(Outcome::Ok)
}

#[derive(Debug, Args)]
pub struct MonitorArgs {
    /// Receive status JSON files (repeatable).
    #[arg(long = "rx-status")]
    pub rx_status: Vec<PathBuf>,
    /// Schedule report JSON from `pipeline run`.
    #[arg(long)]
    pub schedule_report: Option<PathBuf>,
    /// Sweep CSV from `usdr sweep`.
    #[arg(long)]
    pub sweep_csv: Option<PathBuf>,
    /// Output metrics JSON.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_monitor_export(args: &MonitorArgs) -> Result<Outcome> {
    let mut summaries = Vec::new();
    for path in &args.rx_status {
        summaries.push(load_json::<RxSummary>(path, "rx status")?);
    }
    let report: Option<ScheduleReport> = match &args.schedule_report {
        Some(p) => Some(load_json(p, "schedule report")?),
        None => None,
    };
    let csv = match &args.sweep_csv {
        Some(p) => Some(
            fs::read_to_string(p)
                .map_err(|e| usage(format!("cannot read sweep csv {}: {e}", p.display())))?,
        ),
        None => None,
    };
    let export = export_metrics(&summaries, report.as_ref(), csv.as_deref())?;
    let json = serde_json::to_string_pretty(&export)?;
    fs::write(&args.out, &json)?;
    println!("{json}");
    Ok(Outcome::Ok)
}
