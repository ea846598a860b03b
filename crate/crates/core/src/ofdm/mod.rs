//! DC-biased optical OFDM modem: Gray-labeled QAM, minimum-PAPR pilot
//! search, Hermitian-symmetric IFFT framing, cyclic prefix, DC bias with
//! intensity clipping, and pilot-based one-tap equalization.

mod equalize;
mod modem;
mod packet;
mod pilot;
mod qam;

pub use equalize::{equalize, estimate_channel, ChannelEstimate};
pub use modem::{hermitian_frame, OfdmModem, OfdmPacket};
pub use packet::OfdmDecode;
pub use pilot::{papr, pilot_waveform, search_pilot, PilotPlan, QPSK_ALPHABET};
pub use qam::{bits_per_symbol, constellation, qam_demap, qam_map};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OfdmError {
    #[error("invalid OFDM config: {0}")]
    Config(String),
    #[error("unsupported QAM order: {0}")]
    QamOrder(u32),
    #[error("bit count {0} not divisible by bits per symbol {1}")]
    RaggedBits(usize, usize),
    #[error("wrong symbol count: expected {expected}, got {got}")]
    SymbolCount { expected: usize, got: usize },
    #[error("packet framing error")]
    PacketFraming,
    #[error("channel estimation failed")]
    EstimationFailed,
    #[error("papr of empty or all-zero signal")]
    DegenerateSignal,
}

fn default_n_pilot() -> usize {
    1
}

/// Static modem parameters. N = n_fft/2 bins sit below Nyquist; `p` of them
/// carry symbols and the remaining N-p-1 stay zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfdmConfig {
    /// FFT size, a power of two.
    pub n_fft: usize,
    /// Occupied data subcarriers (bins 1..=p).
    pub p: usize,
    /// Cyclic prefix length in samples.
    pub cp_len: usize,
    /// Square QAM order: 4, 16, 64 or 256.
    pub qam_order: u32,
    /// DC bias added after the IFFT; negatives are then clipped to zero.
    pub dc_bias: f64,
    /// Leading pilot OFDM symbols per packet.
    #[serde(default = "default_n_pilot")]
    pub n_pilot_symbols: usize,
}

impl OfdmConfig {
    /// Config with the conventional defaults: CP of n_fft/8, one pilot
    /// symbol, and a DC bias of 3x the reference pre-bias RMS.
    pub fn new(n_fft: usize, p: usize, qam_order: u32) -> Result<Self, OfdmError> {
        let mut config = Self {
            n_fft,
            p,
            cp_len: n_fft / 8,
            qam_order,
            dc_bias: 0.0,
            n_pilot_symbols: 1,
        };
        config.validate()?;
        config.dc_bias = 3.0 * config.reference_rms();
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), OfdmError> {
        if !self.n_fft.is_power_of_two() || self.n_fft < 4 {
            return Err(OfdmError::Config(format!(
                "n_fft must be a power of two >= 4, got {}",
                self.n_fft
            )));
        }
        let n = self.n_fft / 2;
        if self.p == 0 || self.p + 1 > n {
            return Err(OfdmError::Config(format!(
                "p must be in 1..={}, got {}",
                n - 1,
                self.p
            )));
        }
        if self.cp_len >= self.n_fft {
            return Err(OfdmError::Config(format!(
                "cp_len must be < n_fft, got {}",
                self.cp_len
            )));
        }
        qam::bits_per_symbol(self.qam_order)?;
        if !(self.dc_bias >= 0.0) || !self.dc_bias.is_finite() {
            return Err(OfdmError::Config("dc_bias must be nonnegative".into()));
        }
        Ok(())
    }

    /// Half FFT size: the DC-to-Nyquist bin count.
    pub fn half_bins(&self) -> usize {
        self.n_fft / 2
    }

    /// Zero-padded bins between the data and the Nyquist bin.
    pub fn zero_pad_bins(&self) -> usize {
        self.half_bins() - self.p - 1
    }

    pub fn block_len(&self) -> usize {
        self.n_fft + self.cp_len
    }

    pub fn bits_per_block(&self) -> usize {
        // validated orders only
        qam::bits_per_symbol(self.qam_order).expect("validated") * self.p
    }

    /// Pre-bias RMS of a fixed seeded reference data symbol; the default DC
    /// bias is three times this.
    pub fn reference_rms(&self) -> f64 {
        modem::reference_rms(self)
    }
}
