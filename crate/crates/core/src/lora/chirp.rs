//! Chirp spread spectrum modulation and FFT-dechirp demodulation.
//!
//! A symbol s in [0, M) is a unit-envelope chirp whose instantaneous
//! frequency starts at s*B/M - B/2, sweeps at slope B^2/M, and wraps once
//! past +B/2; symbol 0 is the base upchirp. Demodulation decimates to one
//! sample per chip, multiplies by the conjugate base upchirp and takes the
//! M-point DFT: the tone lands in bin s.

use super::{LoRaConfig, LoraError};
use crate::iq::IqFrame;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Chirp modulator/demodulator with cached base chirps and FFT plan.
pub struct CssModem {
    config: LoRaConfig,
    /// Base upchirp on the oversampled grid (M * oversample samples).
    upchirp: Vec<Complex64>,
    /// Base upchirp on the chip grid (M samples), conjugated during dechirp.
    upchirp_chip: Vec<Complex64>,
    fft: Arc<dyn Fft<f64>>,
}

impl CssModem {
    pub fn new(config: LoRaConfig) -> Result<Self, LoraError> {
        config.validate()?;
        let m = config.chips();
        let upchirp = chirp_samples(0, m, config.oversample);
        let upchirp_chip = chirp_samples(0, m, 1);
        let fft = FftPlanner::new().plan_fft_forward(m);
        Ok(Self {
            config,
            upchirp,
            upchirp_chip,
            fft,
        })
    }

    pub fn config(&self) -> &LoRaConfig {
        &self.config
    }

    pub fn samples_per_symbol(&self) -> usize {
        self.config.samples_per_symbol()
    }

    /// The conjugate of the base upchirp, as used by the demodulator.
    pub fn base_downchirp(&self) -> Vec<Complex64> {
        self.upchirp.iter().map(|s| s.conj()).collect()
    }

    /// One symbol period of the chirp for `symbol`.
    pub fn modulate(&self, symbol: u16) -> Result<IqFrame, LoraError> {
        let m = self.config.chips();
        if symbol as usize >= m {
            return Err(LoraError::SymbolOutOfRange(symbol));
        }
        let samples = if symbol == 0 {
            self.upchirp.clone()
        } else {
            chirp_samples(symbol as usize, m, self.config.oversample)
        };
        Ok(IqFrame::new(samples, self.config.sample_rate_hz()))
    }

    /// Concatenated chirps for a symbol sequence.
    pub fn modulate_symbols(&self, symbols: &[u16]) -> Result<IqFrame, LoraError> {
        let n = self.samples_per_symbol();
        let mut samples = Vec::with_capacity(symbols.len() * n);
        for &s in symbols {
            samples.extend_from_slice(&self.modulate(s)?.samples);
        }
        Ok(IqFrame::new(samples, self.config.sample_rate_hz()))
    }

    /// Demodulate one time-aligned symbol period: returns the winning bin
    /// and its magnitude. Ties break toward the smallest index.
    pub fn demodulate(&self, samples: &[Complex64]) -> Result<(u16, f64), LoraError> {
        let expected = self.samples_per_symbol();
        if samples.len() != expected {
            return Err(LoraError::SymbolFrameLength {
                expected,
                got: samples.len(),
            });
        }
        let spectrum = self.dechirp(samples);
        let (mut best_bin, mut best_mag) = (0usize, 0.0f64);
        for (bin, v) in spectrum.iter().enumerate() {
            let mag = v.norm();
            if mag > best_mag {
                best_mag = mag;
                best_bin = bin;
            }
        }
        Ok((best_bin as u16, best_mag))
    }

    /// Dechirped spectrum of one symbol-length window (any alignment).
    /// Used by preamble detection.
    pub(crate) fn dechirp(&self, window: &[Complex64]) -> Vec<Complex64> {
        let os = self.config.oversample;
        let mut buf: Vec<Complex64> = self
            .upchirp_chip
            .iter()
            .enumerate()
            .map(|(k, up)| window[k * os] * up.conj())
            .collect();
        self.fft.process(&mut buf);
        buf
    }

    /// Preamble: n_pre upchirps, 2 more upchirps, 2 downchirps and a quarter
    /// downchirp — (n_pre + 4.25) symbols in total.
    pub fn build_preamble(&self) -> IqFrame {
        let n = self.samples_per_symbol();
        let down = self.base_downchirp();
        let mut samples = Vec::with_capacity(self.config.preamble_len_samples());
        for _ in 0..self.config.n_pre + 2 {
            samples.extend_from_slice(&self.upchirp);
        }
        for _ in 0..2 {
            samples.extend_from_slice(&down);
        }
        samples.extend_from_slice(&down[..n / 4]);
        IqFrame::new(samples, self.config.sample_rate_hz())
    }
}

/// Raw chirp synthesis for symbol `s` with M chips at the given oversample.
fn chirp_samples(s: usize, m: usize, oversample: usize) -> Vec<Complex64> {
    let n_samples = m * oversample;
    let mf = m as f64;
    let sf = s as f64;
    let wrap_at = mf - sf;
    (0..n_samples)
        .map(|n| {
            let u = n as f64 / oversample as f64;
            let mut cycles = (sf / mf - 0.5) * u + u * u / (2.0 * mf);
            if u >= wrap_at {
                // instantaneous frequency wraps from +B/2 back to -B/2
                cycles -= u - wrap_at;
            }
            Complex64::from_polar(1.0, std::f64::consts::TAU * cycles)
        })
        .collect()
}
