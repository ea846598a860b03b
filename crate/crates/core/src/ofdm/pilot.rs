//! Minimum-PAPR pilot selection over a per-bin QPSK alphabet, exhaustive
//! when the space fits the candidate budget and seeded-random otherwise.
//!
//! PAPR is evaluated on the pre-bias, CP-free real time block: the quantity
//! that bounds the drive swing before intensity biasing.

use super::modem::hermitian_frame;
use super::{OfdmConfig, OfdmError};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

/// Constant-magnitude per-bin alphabet: (+-1 +- j)/sqrt(2).
pub const QPSK_ALPHABET: [Complex64; 4] = [
    Complex64::new(std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
    Complex64::new(-std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
    Complex64::new(-std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2),
    Complex64::new(std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2),
];

/// A chosen pilot sequence and the PAPR of its modulated time signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PilotPlan {
    pub pilot_sequence: Vec<Complex64>,
    pub papr_db: f64,
}

/// Peak-to-average power ratio, 10 log10(max|x|^2 / mean|x|^2).
pub fn papr(signal: &[f64]) -> Result<f64, OfdmError> {
    if signal.is_empty() {
        return Err(OfdmError::DegenerateSignal);
    }
    let peak = signal.iter().map(|x| x * x).fold(0.0, f64::max);
    let mean = signal.iter().map(|x| x * x).sum::<f64>() / signal.len() as f64;
    if mean == 0.0 {
        return Err(OfdmError::DegenerateSignal);
    }
    Ok(10.0 * (peak / mean).log10())
}

/// The pre-bias, CP-free real waveform of one pilot candidate.
pub fn pilot_waveform(config: &OfdmConfig, sequence: &[Complex64]) -> Result<Vec<f64>, OfdmError> {
    let mut bins = hermitian_frame(sequence, config)?;
    FftPlanner::new()
        .plan_fft_inverse(config.n_fft)
        .process(&mut bins);
    let scale = 1.0 / config.n_fft as f64;
    Ok(bins.iter().map(|c| c.re * scale).collect())
}

/// Traverse pilot candidates and keep the minimum-PAPR one.
///
/// Exhaustive when 4^P fits the budget; otherwise `candidate_budget`
/// sequential draws from a ChaCha8 stream, so a larger budget with the same
/// seed evaluates a superset of candidates.
pub fn search_pilot(
    config: &OfdmConfig,
    candidate_budget: u64,
    seed: u64,
) -> Result<PilotPlan, OfdmError> {
    config.validate()?;
    if candidate_budget == 0 {
        return Err(OfdmError::Config("candidate budget must be >= 1".into()));
    }
    let p = config.p;
    let exhaustive_size = if p < 32 { Some(1u64 << (2 * p)) } else { None };
    let ifft = FftPlanner::new().plan_fft_inverse(config.n_fft);
    let scale = 1.0 / config.n_fft as f64;
    let evaluate = |sequence: &[Complex64]| -> Result<f64, OfdmError> {
        let mut bins = hermitian_frame(sequence, config)?;
        ifft.process(&mut bins);
        let time: Vec<f64> = bins.iter().map(|c| c.re * scale).collect();
        papr(&time)
    };

    let mut best: Option<(Vec<Complex64>, f64)> = None;
    let mut consider = |seq: Vec<Complex64>, papr_db: f64| {
        if best.as_ref().is_none_or(|(_, b)| papr_db < *b) {
            best = Some((seq, papr_db));
        }
    };

    match exhaustive_size {
        Some(total) if total <= candidate_budget => {
            for index in 0..total {
                let seq: Vec<Complex64> = (0..p)
                    .map(|k| QPSK_ALPHABET[((index >> (2 * k)) & 3) as usize])
                    .collect();
                let papr_db = evaluate(&seq)?;
                consider(seq, papr_db);
            }
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..candidate_budget {
                let seq: Vec<Complex64> = (0..p)
                    .map(|_| QPSK_ALPHABET[rng.random_range(0..4usize)])
                    .collect();
                let papr_db = evaluate(&seq)?;
                consider(seq, papr_db);
            }
        }
    }
    let (pilot_sequence, papr_db) = best.expect("budget >= 1 evaluated");
    Ok(PilotPlan {
        pilot_sequence,
        papr_db,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_signal_zero_db() {
        assert!(papr(&[0.7; 100]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn impulse_closed_form() {
        for len in [4usize, 64, 1000] {
            let mut signal = vec![0.0; len];
            signal[len / 2] = 1.0;
            let expected = 10.0 * (len as f64).log10();
            assert!((papr(&signal).unwrap() - expected).abs() < 1e-12, "len {len}");
        }
    }

    #[test]
    fn papr_matches_direct_two_pass() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let signal: Vec<f64> = (0..500).map(|_| rng.random_range(-2.0..2.0)).collect();
        let peak = signal.iter().fold(0.0f64, |m, &x| m.max(x * x));
        let mean = signal.iter().map(|x| x * x).sum::<f64>() / signal.len() as f64;
        let direct = 10.0 * (peak / mean).log10();
        assert!((papr(&signal).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn degenerate_signals_rejected() {
        assert!(matches!(papr(&[]), Err(OfdmError::DegenerateSignal)));
        assert!(matches!(papr(&[0.0; 5]), Err(OfdmError::DegenerateSignal)));
    }

    #[test]
    fn exhaustive_matches_brute_force_p2() {
        let cfg = OfdmConfig::new(16, 2, 4).unwrap();
        let plan = search_pilot(&cfg, 16, 0).unwrap();
        // brute force over all 16 candidates, written independently
        let mut best = f64::INFINITY;
        for a in 0..4usize {
            for b in 0..4usize {
                let seq = vec![QPSK_ALPHABET[a], QPSK_ALPHABET[b]];
                let wave = pilot_waveform(&cfg, &seq).unwrap();
                best = best.min(papr(&wave).unwrap());
            }
        }
        assert!((plan.papr_db - best).abs() < 1e-12);
    }

    #[test]
    fn plan_papr_is_self_consistent() {
        let cfg = OfdmConfig::new(64, 20, 16).unwrap();
        let plan = search_pilot(&cfg, 100, 42).unwrap();
        let wave = pilot_waveform(&cfg, &plan.pilot_sequence).unwrap();
        assert_eq!(plan.papr_db, papr(&wave).unwrap());
    }

    #[test]
    fn larger_budget_never_worse() {
        let cfg = OfdmConfig::new(64, 20, 16).unwrap();
        let mut last = f64::INFINITY;
        for budget in [10u64, 50, 200, 800] {
            let plan = search_pilot(&cfg, budget, 7).unwrap();
            assert!(plan.papr_db <= last + 1e-12, "budget {budget}");
            last = plan.papr_db;
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = OfdmConfig::new(64, 20, 16).unwrap();
        let a = search_pilot(&cfg, 64, 3).unwrap();
        let b = search_pilot(&cfg, 64, 3).unwrap();
        assert_eq!(a, b);
    }
}
