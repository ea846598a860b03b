//! Library side of the `usdr` command-line harness: UDP loopback transport,
//! sweep and demo engines, metrics export, and the built-in pipeline stage
//! registry. The binary in `main.rs` is a thin clap dispatcher over these.

pub mod commands;
pub mod endpoint;
pub mod gateway;
pub mod monitor;
pub mod stages;
pub mod sweep;
pub mod telemetry;
pub mod transport;

use serde::{Deserialize, Serialize};

/// Receive-side summary emitted as JSON on stdout (and optionally to a
/// file). Contains no wall-clock values so reruns are byte-identical.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RxSummary {
    pub waveform: String,
    /// Frames (LoRa) or packets (OOK/OFDM) recovered intact.
    pub frames_ok: usize,
    pub frames_failed: usize,
    pub preambles_found: usize,
    pub corrected_bits: usize,
    pub missing_seqs: Vec<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evm_db: Option<f64>,
    /// LoRa frame start offsets, in samples.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub offsets: Vec<usize>,
    pub bytes_out: usize,
    /// Signal time represented by the capture (samples / sample rate).
    pub signal_duration_s: f64,
}

impl RxSummary {
    pub fn throughput_bytes_per_s(&self) -> f64 {
        if self.signal_duration_s > 0.0 {
            self.bytes_out as f64 / self.signal_duration_s
        } else {
            0.0
        }
    }

    pub fn degraded(&self) -> bool {
        self.frames_failed > 0 || !self.missing_seqs.is_empty()
    }
}
