//! Built-in pipeline stage registry: representative DSP work units for
//! `usdr pipeline profile|run`, each self-contained with canned input.

use anyhow::{bail, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use usdr_core::pipeline::{PipelineStage, StageError};
use usdr_core::lora::{CssModem, LoRaConfig};
use usdr_core::ofdm::{OfdmConfig, OfdmModem};
use usdr_core::ook::{ook_demodulate, ook_modulate, OokConfig};

pub const STAGE_IDS: [&str; 6] = [
    "lora_mod",
    "lora_demod",
    "ofdm_mod",
    "ofdm_demod",
    "ook_mod",
    "ook_demod",
];

fn err(e: impl std::fmt::Display) -> StageError {
    StageError(e.to_string())
}

/// Build one executable stage by id.
pub fn make_stage(id: &str) -> Result<PipelineStage> {
    let work: Box<dyn FnMut(u64) -> Result<(), StageError> + Send> = match id {
        "lora_mod" => {
            let modem = CssModem::new(LoRaConfig::new(7, 125_000.0, 1)?)?;
            let symbols: Vec<u16> = (0..32u16).map(|k| (k * 37) % 128).collect();
            Box::new(move |_| {
                modem.modulate_symbols(&symbols).map(|_| ()).map_err(err)
            })
        }
        "lora_demod" => {
            let modem = CssModem::new(LoRaConfig::new(7, 125_000.0, 1)?)?;
            let symbols: Vec<u16> = (0..32u16).map(|k| (k * 37) % 128).collect();
            let frame = modem.modulate_symbols(&symbols)?;
            let n = modem.samples_per_symbol();
            Box::new(move |_| {
                for k in 0..32 {
                    modem
                        .demodulate(&frame.samples[k * n..(k + 1) * n])
                        .map_err(err)?;
                }
                Ok(())
            })
        }
        "ofdm_mod" => {
            let modem = OfdmModem::new(OfdmConfig::new(64, 20, 16)?)?;
            let bits = canned_bits(1024, 0x0FD);
            Box::new(move |_| modem.encode_packet(&bits).map(|_| ()).map_err(err))
        }
        "ofdm_demod" => {
            let modem = OfdmModem::new(OfdmConfig::new(64, 20, 16)?)?;
            let packet = modem.encode_packet(&canned_bits(1024, 0x0FD))?;
            let samples = packet.to_frame(1.0).samples;
            Box::new(move |_| modem.decode_packet(&samples).map(|_| ()).map_err(err))
        }
        "ook_mod" => {
            let config = OokConfig::default();
            let bits = canned_bits(4096, 0x00C);
            Box::new(move |_| ook_modulate(&bits, &config).map(|_| ()).map_err(err))
        }
        "ook_demod" => {
            let config = OokConfig::default();
            let frame = ook_modulate(&canned_bits(4096, 0x00C), &config)?;
            Box::new(move |_| ook_demodulate(&frame, &config).map(|_| ()).map_err(err))
        }
        other => bail!("unknown stage id {other:?} (known: {STAGE_IDS:?})"),
    };
    Ok(PipelineStage {
        id: id.to_string(),
        work,
    })
}

fn canned_bits(n: usize, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(0..2)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_stage_runs() {
        for id in STAGE_IDS {
            let mut stage = make_stage(id).unwrap();
            (stage.work)(0).unwrap_or_else(|e| panic!("{id}: {e}"));
        }
    }

    #[test]
    fn unknown_stage_rejected() {
        assert!(make_stage("warp_drive").is_err());
    }
}
