//! Sample-stream sources and sinks: `.iq` files or `udp://host:port`
//! endpoints carrying the same little-endian int16 interleaved payload.

use crate::transport;
use anyhow::{Context, Result};
use std::path::PathBuf;
use std::time::Duration;
use usdr_core::iq::{dequantize_i16, quantize_i16, read_iq_file, write_iq_file, IqFrame};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    File(PathBuf),
    Udp(String),
}

impl Endpoint {
    pub fn parse(s: &str) -> Self {
        match s.strip_prefix("udp://") {
            Some(addr) => Endpoint::Udp(addr.to_string()),
            None => Endpoint::File(PathBuf::from(s)),
        }
    }
}

/// Full scale for quantization: unity unless the frame swings wider.
fn full_scale_for(frame: &IqFrame) -> f64 {
    frame.peak().max(1.0)
}

/// Write a frame to its sink. Files get the JSON sidecar; UDP streams carry
/// the raw int16 payload (the receiver assumes full scale 1.0, which every
/// demodulator here tolerates as a flat gain).
pub fn write_frame(frame: &IqFrame, endpoint: &Endpoint, stream_id: u32) -> Result<()> {
    match endpoint {
        Endpoint::File(path) => {
            write_iq_file(frame, path, full_scale_for(frame))
                .with_context(|| format!("write {}", path.display()))?;
            Ok(())
        }
        Endpoint::Udp(dest) => {
            let words = quantize_i16(frame, full_scale_for(frame))?;
            let mut bytes = Vec::with_capacity(words.len() * 2);
            for w in words {
                bytes.extend_from_slice(&w.to_le_bytes());
            }
            transport::send_stream(dest, stream_id, &bytes)
        }
    }
}

/// Read a frame from its source. Returns the frame and any missing UDP
/// fragment indices (always empty for files).
pub fn read_frame(endpoint: &Endpoint, udp_timeout: Duration) -> Result<(IqFrame, Vec<u32>)> {
    match endpoint {
        Endpoint::File(path) => {
            let frame =
                read_iq_file(path).with_context(|| format!("read {}", path.display()))?;
            Ok((frame, Vec::new()))
        }
        Endpoint::Udp(listen) => {
            let outcome = transport::recv_stream(listen, udp_timeout)?;
            let words: Vec<i16> = outcome
                .data
                .chunks_exact(2)
                .map(|b| i16::from_le_bytes([b[0], b[1]]))
                .collect();
            let frame = dequantize_i16(&words, 1.0, 1.0)?;
            Ok((frame, outcome.missing_frags))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn parse_endpoints() {
        assert_eq!(
            Endpoint::parse("udp://127.0.0.1:9"),
            Endpoint::Udp("127.0.0.1:9".into())
        );
        assert_eq!(
            Endpoint::parse("out/capture.iq"),
            Endpoint::File(PathBuf::from("out/capture.iq"))
        );
    }

    #[test]
    fn file_round_trip_via_endpoint() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.iq");
        let frame = IqFrame::new(
            vec![Complex64::new(0.5, -0.25), Complex64::new(-1.5, 2.0)],
            48_000.0,
        );
        write_frame(&frame, &Endpoint::File(path.clone()), 0).unwrap();
        let (back, missing) = read_frame(
            &Endpoint::File(path),
            Duration::from_secs(1),
        )
        .unwrap();
        assert!(missing.is_empty());
        assert_eq!(back.sample_rate_hz, 48_000.0);
        // peak 2.0 sets the full scale; round trip stays within one LSB of it
        for (a, b) in frame.samples.iter().zip(back.samples.iter()) {
            assert!((a.re - b.re).abs() <= 2.0 / 32767.0 + 1e-12);
            assert!((a.im - b.im).abs() <= 2.0 / 32767.0 + 1e-12);
        }
    }
}
