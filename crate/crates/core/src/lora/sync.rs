//! Preamble detection: coarse strided search against the base upchirp, then
//! fine alignment by requiring two consecutive symbol windows to dechirp to
//! bin 0.
//!
//! A run of identical upchirps is periodic in the symbol length, so any
//! symbol-length window inside the run dechirps to a single tone whose bin
//! encodes the window's misalignment. Consecutive windows agreeing on a
//! strong bin give the start modulo one symbol; scanning candidate starts
//! forward pins the first full upchirp, which is the frame offset.

use super::chirp::CssModem;
use num_complex::Complex64;

/// Result of a preamble search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PreambleDetection {
    /// Sample index where the preamble begins (valid only when `found`).
    pub offset_samples: usize,
    pub found: bool,
}

const NOT_FOUND: PreambleDetection = PreambleDetection {
    offset_samples: 0,
    found: false,
};

#[derive(Clone, Copy)]
struct WindowStat {
    bin: u16,
    mag: f64,
    median: f64,
}

fn window_stat(modem: &CssModem, window: &[Complex64]) -> WindowStat {
    let spectrum = modem.dechirp(window);
    let mut mags: Vec<f64> = spectrum.iter().map(|v| v.norm()).collect();
    let (mut bin, mut mag) = (0u16, 0.0f64);
    for (k, &m) in mags.iter().enumerate() {
        if m > mag {
            mag = m;
            bin = k as u16;
        }
    }
    let mid = mags.len() / 2;
    let (_, median, _) = mags.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    WindowStat {
        bin,
        mag,
        median: *median,
    }
}

fn qualifies(stat: &WindowStat, threshold: f64) -> bool {
    stat.mag > 0.0 && stat.mag >= threshold * stat.median
}

/// Search for the preamble and return the offset of its first sample.
///
/// Absence is reported through `found = false`, never as an error.
pub fn detect_preamble(modem: &CssModem, samples: &[Complex64]) -> PreambleDetection {
    let n = modem.samples_per_symbol();
    let config = modem.config();
    let threshold = config.sync_mag_threshold;
    let os = config.oversample;
    if samples.len() < config.preamble_len_samples() {
        return NOT_FOUND;
    }

    let n_windows = samples.len() / n;
    let mut stats: Vec<Option<WindowStat>> = vec![None; n_windows];
    let mut stat_at = |w: usize| -> WindowStat {
        *stats[w].get_or_insert_with(|| window_stat(modem, &samples[w * n..w * n + n]))
    };

    for w in 0..n_windows.saturating_sub(1) {
        let a = stat_at(w);
        if !qualifies(&a, threshold) {
            continue;
        }
        let b = stat_at(w + 1);
        if !qualifies(&b, threshold) || a.bin != b.bin {
            continue;
        }
        // Window starts are multiples of n, so the start-of-run estimate
        // modulo one symbol is just -bin*os.
        let rho = (n - (a.bin as usize * os) % n) % n;
        if let Some(offset) = fine_scan(modem, samples, rho, threshold) {
            return PreambleDetection {
                offset_samples: offset,
                found: true,
            };
        }
    }
    NOT_FOUND
}

/// Walk candidate starts rho, rho+n, ... and accept the first where two
/// consecutive windows are aligned upchirps. Sub-chip alignment at
/// oversample > 1 is refined over +/-(os-1) samples.
fn fine_scan(
    modem: &CssModem,
    samples: &[Complex64],
    rho: usize,
    threshold: f64,
) -> Option<usize> {
    let n = modem.samples_per_symbol();
    let os = modem.config().oversample as isize;
    let mut base = rho as isize;
    while (base as usize) + 2 * n <= samples.len() {
        let mut best: Option<(usize, f64)> = None;
        for delta in -(os - 1)..=(os - 1) {
            let start = base + delta;
            if start < 0 || (start as usize) + 2 * n > samples.len() {
                continue;
            }
            let start = start as usize;
            let first = window_stat(modem, &samples[start..start + n]);
            if first.bin != 0 || !qualifies(&first, threshold) {
                continue;
            }
            let second = window_stat(modem, &samples[start + n..start + 2 * n]);
            if second.bin != 0 || !qualifies(&second, threshold) {
                continue;
            }
            let score = first.mag + second.mag;
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((start, score));
            }
        }
        if let Some((start, _)) = best {
            return Some(start);
        }
        base += n as isize;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{apply_channel, apply_timing_offset, ChannelModel};
    use crate::iq::IqFrame;
    use crate::lora::LoRaConfig;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn modem(oversample: usize) -> CssModem {
        let mut config = LoRaConfig::new(7, 125_000.0, 1).unwrap();
        config.oversample = oversample;
        CssModem::new(config).unwrap()
    }

    fn test_signal(modem: &CssModem) -> IqFrame {
        let mut frame = modem.build_preamble();
        let payload = modem.modulate_symbols(&[3, 77, 12, 99]).unwrap();
        frame.samples.extend_from_slice(&payload.samples);
        frame
    }

    #[test]
    fn clean_offset_zero() {
        let m = modem(1);
        let frame = test_signal(&m);
        let det = detect_preamble(&m, &frame.samples);
        assert!(det.found);
        assert_eq!(det.offset_samples, 0);
    }

    #[test]
    fn clean_injected_offsets_recovered() {
        let m = modem(1);
        let frame = test_signal(&m);
        for offset in [0usize, 1, 17, 37, 100, 512] {
            let shifted = apply_timing_offset(&frame, offset);
            let det = detect_preamble(&m, &shifted.samples);
            assert!(det.found, "offset {offset}");
            assert_eq!(det.offset_samples, offset);
        }
    }

    #[test]
    fn noisy_offset_recovered() {
        let m = modem(1);
        let frame = test_signal(&m);
        for (k, offset) in [0usize, 1, 17, 37, 512].into_iter().enumerate() {
            let shifted = apply_timing_offset(&frame, offset);
            let noisy = apply_channel(&shifted, &ChannelModel::awgn(10.0, k as u64)).unwrap();
            let det = detect_preamble(&m, &noisy.samples);
            assert!(det.found, "offset {offset}");
            assert_eq!(det.offset_samples, offset, "offset {offset}");
        }
    }

    #[test]
    fn oversampled_offsets_recovered() {
        for os in [2usize, 4] {
            let m = modem(os);
            let frame = test_signal(&m);
            for offset in [0usize, 1, 17, 37] {
                let shifted = apply_timing_offset(&frame, offset);
                let det = detect_preamble(&m, &shifted.samples);
                assert!(det.found, "os {os} offset {offset}");
                assert_eq!(det.offset_samples, offset, "os {os} offset {offset}");
            }
        }
    }

    #[test]
    fn pure_noise_not_found() {
        let m = modem(1);
        for seed in 0..5u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let samples: Vec<Complex64> = (0..4096)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let det = detect_preamble(&m, &samples);
            assert!(!det.found, "seed {seed}");
        }
    }

    #[test]
    fn too_short_frame_not_found() {
        let m = modem(1);
        let frame = m.build_preamble();
        let det = detect_preamble(&m, &frame.samples[..frame.len() / 2]);
        assert!(!det.found);
    }
}
