//! Deterministic, seedable channel impairments: identity, AWGN, flat complex
//! gain, FIR inter-symbol interference, and an optical intensity clamp.
//!
//! Noise power is referenced to the measured mean power of the input frame so
//! `snr_db` means the same thing for every waveform. Identical
//! (model, seed, frame) triples always produce identical output; the noise
//! generator is ChaCha8 seeded from the model.

use crate::iq::IqFrame;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("undefined SNR on zero-power signal")]
    ZeroPowerSignal,
    #[error("snr_db must be finite (or +inf to disable noise)")]
    NonFiniteSnr,
    #[error("fir taps must be non-empty with a nonzero leading tap")]
    BadFirTaps,
    #[error("empty frame for FIR channel")]
    EmptyFirInput,
}

/// The impairment applied by [`apply_channel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelKind {
    /// Identity on samples.
    Ideal,
    /// Circular complex Gaussian noise at the given SNR relative to the
    /// frame's mean power. `snr_db = +inf` disables the noise entirely.
    Awgn { snr_db: f64 },
    /// Per-sample multiplication by a fixed complex gain.
    FlatGain { gain: Complex64 },
    /// Convolution with real taps (same-length output, zero pre-history).
    FirIsi { taps: Vec<f64> },
    /// Optical intensity link: keeps the real part, clamps negatives to 0.
    Intensity,
}

/// A channel description plus the seed for its randomness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    #[serde(flatten)]
    pub kind: ChannelKind,
    #[serde(default)]
    pub seed: u64,
}

impl ChannelModel {
    pub fn ideal() -> Self {
        Self {
            kind: ChannelKind::Ideal,
            seed: 0,
        }
    }

    pub fn awgn(snr_db: f64, seed: u64) -> Self {
        Self {
            kind: ChannelKind::Awgn { snr_db },
            seed,
        }
    }
}

/// Pass a frame through the channel.
pub fn apply_channel(frame: &IqFrame, model: &ChannelModel) -> Result<IqFrame, ChannelError> {
    match &model.kind {
        ChannelKind::Ideal => Ok(frame.clone()),
        ChannelKind::Awgn { snr_db } => apply_awgn(frame, *snr_db, model.seed),
        ChannelKind::FlatGain { gain } => Ok(IqFrame::new(
            frame.samples.iter().map(|s| s * gain).collect(),
            frame.sample_rate_hz,
        )),
        ChannelKind::FirIsi { taps } => apply_fir(frame, taps),
        ChannelKind::Intensity => Ok(IqFrame::new(
            frame
                .samples
                .iter()
                .map(|s| Complex64::new(s.re.max(0.0), 0.0))
                .collect(),
            frame.sample_rate_hz,
        )),
    }
}

fn apply_awgn(frame: &IqFrame, snr_db: f64, seed: u64) -> Result<IqFrame, ChannelError> {
    if snr_db == f64::INFINITY {
        return Ok(frame.clone());
    }
    if !snr_db.is_finite() {
        return Err(ChannelError::NonFiniteSnr);
    }
    let signal_power = frame.mean_power();
    if signal_power <= 0.0 {
        return Err(ChannelError::ZeroPowerSignal);
    }
    // Per-sample complex noise variance; each component carries half.
    let noise_var = signal_power / 10f64.powf(snr_db / 10.0);
    let sigma = (noise_var / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = frame
        .samples
        .iter()
        .map(|s| {
            let nr: f64 = StandardNormal.sample(&mut rng);
            let ni: f64 = StandardNormal.sample(&mut rng);
            s + Complex64::new(nr * sigma, ni * sigma)
        })
        .collect();
    Ok(IqFrame::new(samples, frame.sample_rate_hz))
}

fn apply_fir(frame: &IqFrame, taps: &[f64]) -> Result<IqFrame, ChannelError> {
    if taps.is_empty() || taps[0] == 0.0 {
        return Err(ChannelError::BadFirTaps);
    }
    if frame.is_empty() {
        return Err(ChannelError::EmptyFirInput);
    }
    let x = &frame.samples;
    let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
    for (n, out) in y.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, &t) in taps.iter().enumerate() {
            if n >= k {
                acc += x[n - k] * t;
            }
        }
        *out = acc;
    }
    Ok(IqFrame::new(y, frame.sample_rate_hz))
}

/// Prepend `offset_samples` zeros; the frame grows by the offset.
pub fn apply_timing_offset(frame: &IqFrame, offset_samples: usize) -> IqFrame {
    let mut samples = vec![Complex64::new(0.0, 0.0); offset_samples];
    samples.extend_from_slice(&frame.samples);
    IqFrame::new(samples, frame.sample_rate_hz)
}
