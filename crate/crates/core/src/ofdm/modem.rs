//! Hermitian-symmetric OFDM block synthesis and recovery.
//!
//! Frequency layout per block: bin 0 = 0 (DC null), bins 1..=P carry
//! symbols, bins P+1..N-1 are the zero pad, bin N = 0, and bins
//! N+1..n_fft-1 mirror conj(bins 1..N-1) so the inverse transform is real.
//! Time layout: last cp_len samples copied in front, DC bias added,
//! negatives clipped (intensity drive).

use super::pilot::{search_pilot, PilotPlan};
use super::qam::qam_map;
use super::{OfdmConfig, OfdmError};
use crate::iq::IqFrame;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Pilot search defaults used by [`OfdmModem::new`].
pub(crate) const DEFAULT_PILOT_BUDGET: u64 = 256;
pub(crate) const DEFAULT_PILOT_SEED: u64 = 0x0FD7;

/// Build the n_fft frequency bins for exactly P symbols.
pub fn hermitian_frame(data: &[Complex64], config: &OfdmConfig) -> Result<Vec<Complex64>, OfdmError> {
    if data.len() != config.p {
        return Err(OfdmError::SymbolCount {
            expected: config.p,
            got: data.len(),
        });
    }
    let n_fft = config.n_fft;
    let n = config.half_bins();
    let mut bins = vec![Complex64::new(0.0, 0.0); n_fft];
    bins[1..=config.p].copy_from_slice(data);
    for k in 1..n {
        bins[n_fft - k] = bins[k].conj();
    }
    Ok(bins)
}

/// A transmitted packet: pilot blocks then data blocks, each a real
/// nonnegative time series of n_fft + cp_len samples.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmPacket {
    pub blocks: Vec<Vec<f64>>,
    pub n_pilot: usize,
}

impl OfdmPacket {
    pub fn n_data_blocks(&self) -> usize {
        self.blocks.len() - self.n_pilot
    }

    /// Flatten to samples.
    pub fn samples(&self) -> Vec<f64> {
        self.blocks.iter().flatten().copied().collect()
    }

    /// As a complex frame (intensity in I, Q = 0) for channels and files.
    pub fn to_frame(&self, sample_rate_hz: f64) -> IqFrame {
        IqFrame::new(
            self.blocks
                .iter()
                .flatten()
                .map(|&x| Complex64::new(x, 0.0))
                .collect(),
            sample_rate_hz,
        )
    }
}

/// OFDM modulator/demodulator with cached transforms and pilot plan.
pub struct OfdmModem {
    config: OfdmConfig,
    pilot: PilotPlan,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl OfdmModem {
    /// Modem with a pilot found by the default-budget seeded search.
    pub fn new(config: OfdmConfig) -> Result<Self, OfdmError> {
        let pilot = search_pilot(&config, DEFAULT_PILOT_BUDGET, DEFAULT_PILOT_SEED)?;
        Self::with_pilot(config, pilot)
    }

    pub fn with_pilot(config: OfdmConfig, pilot: PilotPlan) -> Result<Self, OfdmError> {
        config.validate()?;
        if pilot.pilot_sequence.len() != config.p {
            return Err(OfdmError::SymbolCount {
                expected: config.p,
                got: pilot.pilot_sequence.len(),
            });
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            fft: planner.plan_fft_forward(config.n_fft),
            ifft: planner.plan_fft_inverse(config.n_fft),
            config,
            pilot,
        })
    }

    pub fn config(&self) -> &OfdmConfig {
        &self.config
    }

    pub fn pilot(&self) -> &PilotPlan {
        &self.pilot
    }

    /// Complex pre-bias time block (no CP); imag stays at rounding level by
    /// Hermitian construction.
    pub fn synthesize_block(&self, data: &[Complex64]) -> Result<Vec<Complex64>, OfdmError> {
        let mut bins = hermitian_frame(data, &self.config)?;
        self.ifft.process(&mut bins);
        let scale = 1.0 / self.config.n_fft as f64;
        for b in bins.iter_mut() {
            *b *= scale;
        }
        Ok(bins)
    }

    fn intensity_block(&self, data: &[Complex64]) -> Result<Vec<f64>, OfdmError> {
        let time = self.synthesize_block(data)?;
        let n_fft = self.config.n_fft;
        let cp = self.config.cp_len;
        let mut block = Vec::with_capacity(n_fft + cp);
        block.extend(time[n_fft - cp..].iter().map(|c| c.re));
        block.extend(time.iter().map(|c| c.re));
        for x in block.iter_mut() {
            *x = (*x + self.config.dc_bias).max(0.0);
        }
        Ok(block)
    }

    /// Modulate data blocks (P symbols each), prepending the pilot blocks.
    pub fn modulate(&self, data_blocks: &[Vec<Complex64>]) -> Result<OfdmPacket, OfdmError> {
        let n_pilot = self.config.n_pilot_symbols;
        let mut blocks = Vec::with_capacity(n_pilot + data_blocks.len());
        for _ in 0..n_pilot {
            blocks.push(self.intensity_block(&self.pilot.pilot_sequence)?);
        }
        for data in data_blocks {
            blocks.push(self.intensity_block(data)?);
        }
        Ok(OfdmPacket { blocks, n_pilot })
    }

    /// Strip CPs, transform, keep bins 1..=P. The first n_pilot_symbols
    /// blocks land in the pilot output.
    #[allow(clippy::type_complexity)]
    pub fn demodulate(
        &self,
        samples: &[Complex64],
    ) -> Result<(Vec<Vec<Complex64>>, Vec<Vec<Complex64>>), OfdmError> {
        let block_len = self.config.block_len();
        if samples.is_empty() || !samples.len().is_multiple_of(block_len) {
            return Err(OfdmError::PacketFraming);
        }
        let n_blocks = samples.len() / block_len;
        let mut pilots = Vec::new();
        let mut datas = Vec::new();
        for b in 0..n_blocks {
            let start = b * block_len + self.config.cp_len;
            let mut bins: Vec<Complex64> = samples[start..start + self.config.n_fft].to_vec();
            self.fft.process(&mut bins);
            let kept = bins[1..=self.config.p].to_vec();
            if b < self.config.n_pilot_symbols {
                pilots.push(kept);
            } else {
                datas.push(kept);
            }
        }
        Ok((pilots, datas))
    }
}

/// Pre-bias RMS of one block carrying seeded random bits; the conventional
/// bias reference.
pub(crate) fn reference_rms(config: &OfdmConfig) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0xDC0F);
    let bits: Vec<u8> = (0..config.bits_per_block())
        .map(|_| rng.random_range(0..2u8))
        .collect();
    let data = qam_map(&bits, config.qam_order).expect("aligned by construction");
    let mut cfg = config.clone();
    cfg.dc_bias = 0.0;
    let modem = OfdmModem::with_pilot(
        cfg.clone(),
        PilotPlan {
            pilot_sequence: data.clone(),
            papr_db: 0.0,
        },
    )
    .expect("validated");
    let block = modem.synthesize_block(&data).expect("sized");
    (block.iter().map(|c| c.re * c.re).sum::<f64>() / block.len() as f64).sqrt()
}
