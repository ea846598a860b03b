//! End-to-end tests of the `usdr` binary: file and UDP round trips, status
//! summaries, exit codes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::net::UdpSocket;
use std::path::Path;
use std::process::{Command, Output};
use usdr::RxSummary;

fn usdr() -> Command {
    Command::new(env!("CARGO_BIN_EXE_usdr"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn usdr");
    assert!(
        out.status.success(),
        "usdr failed ({:?}): stdout={} stderr={}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn random_file(path: &Path, len: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<u8> = (0..len).map(|_| rng.random()).collect();
    std::fs::write(path, data).unwrap();
}

fn summary_from(out: &Output) -> RxSummary {
    serde_json::from_slice(&out.stdout).expect("rx summary JSON on stdout")
}

#[test]
fn ook_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("payload.bin");
    let capture = dir.path().join("capture.iq");
    let output = dir.path().join("recovered.bin");
    random_file(&input, 10_240, 1);

    run_ok(usdr()
        .args(["ook", "tx", "--in"])
        .arg(&input)
        .arg("--out")
        .arg(&capture));
    let out = run_ok(usdr()
        .args(["ook", "rx", "--in"])
        .arg(&capture)
        .arg("--out")
        .arg(&output));

    assert_eq!(
        std::fs::read(&input).unwrap(),
        std::fs::read(&output).unwrap()
    );
    let summary = summary_from(&out);
    assert_eq!(summary.waveform, "ook");
    assert!(summary.frames_ok >= 1);
    assert!(summary.missing_seqs.is_empty());
}

#[test]
fn lora_file_round_trip_multiframe() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("payload.bin");
    let capture = dir.path().join("capture.iq");
    let output = dir.path().join("recovered.bin");
    // three frames: 255 + 255 + 90
    random_file(&input, 600, 2);

    run_ok(usdr()
        .args(["lora", "tx", "--in"])
        .arg(&input)
        .arg("--out")
        .arg(&capture));
    let out = run_ok(usdr()
        .args(["lora", "rx", "--in"])
        .arg(&capture)
        .arg("--out")
        .arg(&output));

    assert_eq!(
        std::fs::read(&input).unwrap(),
        std::fs::read(&output).unwrap()
    );
    let summary = summary_from(&out);
    assert_eq!(summary.frames_ok, 3);
    assert_eq!(summary.preambles_found, 3);
    assert_eq!(summary.offsets.len(), 3);
}

#[test]
fn lora_tx_frame_length_arithmetic() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("payload.bin");
    let capture = dir.path().join("capture.iq");
    random_file(&input, 10, 3);

    run_ok(usdr()
        .args(["lora", "tx", "--in"])
        .arg(&input)
        .arg("--out")
        .arg(&capture));
    // default config: SF7, CR1, explicit header, payload CRC, n_pre 8
    // preamble 12.25 syms + 8 header syms + ceil(2*(10+2)/7)*5 payload syms
    let payload_syms = (2.0 * (10.0 + 2.0) / 7.0_f64).ceil() as usize * 5;
    let expected_samples = ((12.25 + 8.0 + payload_syms as f64) * 128.0) as usize;
    let bytes = std::fs::read(&capture).unwrap();
    assert_eq!(bytes.len(), expected_samples * 4); // 2 int16 words per sample
}

#[test]
fn ofdm_file_round_trip_reports_evm() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("payload.bin");
    let capture = dir.path().join("capture.iq");
    let output = dir.path().join("recovered.bin");
    random_file(&input, 2_048, 4);

    run_ok(usdr()
        .args(["ofdm", "tx", "--in"])
        .arg(&input)
        .arg("--out")
        .arg(&capture));
    let out = run_ok(usdr()
        .args(["ofdm", "rx", "--in"])
        .arg(&capture)
        .arg("--out")
        .arg(&output));

    assert_eq!(
        std::fs::read(&input).unwrap(),
        std::fs::read(&output).unwrap()
    );
    let summary = summary_from(&out);
    assert!(summary.evm_db.is_some(), "ofdm summary must report evm_db");
    assert!(summary.evm_db.unwrap() < -30.0);
}

#[test]
fn missing_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = usdr()
        .args(["ook", "tx", "--in"])
        .arg(dir.path().join("nope.bin"))
        .arg("--out")
        .arg(dir.path().join("x.iq"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn corrupted_ook_capture_exits_3_with_missing_seqs() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("payload.bin");
    let capture = dir.path().join("capture.iq");
    let output = dir.path().join("recovered.bin");
    random_file(&input, 4_000, 5);

    let config = dir.path().join("ook.json");
    std::fs::write(&config, r#"{"sps":2,"high_level":1.0,"mode":"unipolar"}"#).unwrap();
    run_ok(usdr()
        .args(["ook", "tx", "--max-payload", "997", "--config"])
        .arg(&config)
        .arg("--in")
        .arg(&input)
        .arg("--out")
        .arg(&capture));

    // stomp on the middle of the capture: a run of zero samples erases bits
    // inside one packet
    let mut bytes = std::fs::read(&capture).unwrap();
    let mid = bytes.len() / 2;
    for b in &mut bytes[mid..mid + 256] {
        *b = 0;
    }
    std::fs::write(&capture, &bytes).unwrap();

    let out = usdr()
        .args(["ook", "rx", "--config"])
        .arg(&config)
        .arg("--in")
        .arg(&capture)
        .arg("--out")
        .arg(&output)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "degraded output must exit 3");
    let summary = summary_from(&out);
    assert!(!summary.missing_seqs.is_empty());
}

#[test]
fn lora_rx_noise_only_reports_zero_frames() {
    let dir = tempfile::tempdir().unwrap();
    let capture = dir.path().join("noise.iq");
    let output = dir.path().join("out.bin");
    // seeded noise, quantized like a real capture
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let samples: Vec<num_complex::Complex64> = (0..8192)
        .map(|_| num_complex::Complex64::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)))
        .collect();
    let frame = usdr_core::iq::IqFrame::new(samples, 125_000.0);
    usdr_core::iq::write_iq_file(&frame, &capture, 1.0).unwrap();

    let out = run_ok(usdr()
        .args(["lora", "rx", "--in"])
        .arg(&capture)
        .arg("--out")
        .arg(&output));
    let summary = summary_from(&out);
    assert_eq!(summary.frames_ok, 0);
    assert_eq!(summary.preambles_found, 0);
    assert_eq!(summary.bytes_out, 0);
}

#[test]
fn udp_end_to_end_ook() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("payload.bin");
    let output = dir.path().join("recovered.bin");
    random_file(&input, 20_000, 7);

    let port = UdpSocket::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let endpoint = format!("udp://127.0.0.1:{port}");

    let mut rx = usdr()
        .args(["ook", "rx", "--in", &endpoint, "--timeout-s", "20", "--out"])
        .arg(&output)
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    std::thread::sleep(std::time::Duration::from_millis(300));
    run_ok(usdr()
        .args(["ook", "tx", "--in"])
        .arg(&input)
        .arg("--out")
        .arg(&endpoint));
    let status = rx.wait().unwrap();
    assert!(status.success(), "rx exited {:?}", status.code());
    assert_eq!(
        std::fs::read(&input).unwrap(),
        std::fs::read(&output).unwrap()
    );
}

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    let csv = dir.path().join("out.csv");
    std::fs::write(
        &spec,
        r#"{"waveform":"ook","snr_points_db":[12.0,6.0],"trials_per_point":3,"seed":9}"#,
    )
    .unwrap();
    run_ok(usdr().args(["sweep", "--spec"]).arg(&spec).arg("--out").arg(&csv));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("waveform,snr_db,trials,bit_errors,ber,ser\n"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn pipeline_profile_plan_run_chain() {
    let dir = tempfile::tempdir().unwrap();
    let profiles = dir.path().join("profiles.json");
    let table = dir.path().join("table.json");
    let report = dir.path().join("report.json");

    run_ok(usdr()
        .args(["pipeline", "profile", "--stages", "ook_mod,ook_demod", "--runs", "3", "--out"])
        .arg(&profiles));
    run_ok(usdr()
        .args(["pipeline", "plan", "--period-ms", "500", "--dep", "ook_mod>ook_demod", "--profiles"])
        .arg(&profiles)
        .arg("--out")
        .arg(&table));
    let out = run_ok(usdr()
        .args(["pipeline", "run", "--cycles", "3", "--table"])
        .arg(&table)
        .arg("--out")
        .arg(&report));
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(text.contains("total deadline misses"));
    let parsed: usdr_core::pipeline::ScheduleReport =
        serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(parsed.records.len(), 6);
}

#[test]
fn demo_gateway_writes_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.jsonl");
    let out = run_ok(usdr().args([
        "demo",
        "lora-gateway",
        "--nodes",
        "2",
        "--duration-s",
        "10",
        "--interval-min-ms",
        "100",
        "--interval-max-ms",
        "700",
        "--seed",
        "5",
        "--out",
    ])
    .arg(&log));
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(text.contains("emitted"));
    let log_text = std::fs::read_to_string(&log).unwrap();
    assert!(!log_text.is_empty());
    for line in log_text.lines() {
        let event: usdr::gateway::GatewayEvent = serde_json::from_str(line).unwrap();
        assert!(matches!(
            event.record.sensor_kind,
            usdr::telemetry::SensorKind::TempHumidity
                | usdr::telemetry::SensorKind::Pir
                | usdr::telemetry::SensorKind::Ultrasonic
        ));
    }
}

#[test]
fn monitor_export_aggregates() {
    let dir = tempfile::tempdir().unwrap();
    // produce an rx status via a quick ook loopback
    let input = dir.path().join("p.bin");
    let capture = dir.path().join("c.iq");
    let output = dir.path().join("r.bin");
    let status = dir.path().join("status.json");
    let metrics = dir.path().join("metrics.json");
    random_file(&input, 1_000, 8);
    run_ok(usdr().args(["ook", "tx", "--in"]).arg(&input).arg("--out").arg(&capture));
    run_ok(usdr()
        .args(["ook", "rx", "--in"])
        .arg(&capture)
        .arg("--out")
        .arg(&output)
        .arg("--status")
        .arg(&status));
    run_ok(usdr()
        .args(["monitor", "export", "--rx-status"])
        .arg(&status)
        .arg("--out")
        .arg(&metrics));
    let export: usdr::monitor::MetricsExport =
        serde_json::from_slice(&std::fs::read(&metrics).unwrap()).unwrap();
    assert_eq!(export.schema_version, "1");
    assert_eq!(export.error_counters.frames_failed, 0);
    assert_eq!(export.error_counters.packets_missing, 0);
    assert!(export.throughput_bytes_per_s > 0.0);
}
