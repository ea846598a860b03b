//! Square QAM mapping with per-axis Gray labels, normalized to unit average
//! energy. Demapping is minimum-distance hard decision.
//!
//! A symbol's bits split evenly: first half selects the I level, second half
//! the Q level, each MSB-first. Level index k (Gray-decoded) sits at
//! amplitude (L-1) - 2k, so all-zero bits land in the first quadrant:
//! 4-QAM "00" is (1+j)/sqrt(2).

use super::OfdmError;
use num_complex::Complex64;

/// log2 of the constellation order; only square orders are supported.
pub fn bits_per_symbol(qam_order: u32) -> Result<usize, OfdmError> {
    match qam_order {
        4 => Ok(2),
        16 => Ok(4),
        64 => Ok(6),
        256 => Ok(8),
        other => Err(OfdmError::QamOrder(other)),
    }
}

fn side(qam_order: u32) -> u32 {
    (qam_order as f64).sqrt() as u32
}

/// 1/sqrt(mean energy) of the unnormalized grid, 2(L^2-1)/3.
fn scale(qam_order: u32) -> f64 {
    let l = side(qam_order) as f64;
    (3.0 / (2.0 * (l * l - 1.0))).sqrt()
}

#[inline]
fn gray(k: u32) -> u32 {
    k ^ (k >> 1)
}

#[inline]
fn gray_inverse(mut g: u32) -> u32 {
    let mut shift = 1;
    while shift < 32 {
        g ^= g >> shift;
        shift <<= 1;
    }
    g
}

fn axis_amplitude(bits: &[u8], qam_order: u32) -> f64 {
    let g = bits.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32);
    let k = gray_inverse(g);
    (side(qam_order) - 1) as f64 - 2.0 * k as f64
}

fn axis_bits(amplitude: f64, qam_order: u32, out: &mut Vec<u8>) {
    let l = side(qam_order);
    let k_est = ((l - 1) as f64 - amplitude) / 2.0;
    let k = (k_est.round().max(0.0) as u32).min(l - 1);
    let g = gray(k);
    let h = (l as f64).log2() as usize;
    for i in (0..h).rev() {
        out.push(((g >> i) & 1) as u8);
    }
}

/// Bits (0/1, length divisible by log2(order)) to constellation symbols.
pub fn qam_map(bits: &[u8], qam_order: u32) -> Result<Vec<Complex64>, OfdmError> {
    let b = bits_per_symbol(qam_order)?;
    if !bits.len().is_multiple_of(b) {
        return Err(OfdmError::RaggedBits(bits.len(), b));
    }
    let s = scale(qam_order);
    Ok(bits
        .chunks_exact(b)
        .map(|chunk| {
            let (i_bits, q_bits) = chunk.split_at(b / 2);
            Complex64::new(
                axis_amplitude(i_bits, qam_order) * s,
                axis_amplitude(q_bits, qam_order) * s,
            )
        })
        .collect())
}

/// Hard-decision demap back to bits.
pub fn qam_demap(symbols: &[Complex64], qam_order: u32) -> Result<Vec<u8>, OfdmError> {
    let b = bits_per_symbol(qam_order)?;
    let s = scale(qam_order);
    let mut bits = Vec::with_capacity(symbols.len() * b);
    for sym in symbols {
        axis_bits(sym.re / s, qam_order, &mut bits);
        axis_bits(sym.im / s, qam_order, &mut bits);
    }
    Ok(bits)
}

/// All constellation points in bit-pattern order (for tests and docs).
pub fn constellation(qam_order: u32) -> Result<Vec<Complex64>, OfdmError> {
    let b = bits_per_symbol(qam_order)?;
    (0..qam_order)
        .map(|v| {
            let bits: Vec<u8> = (0..b).rev().map(|i| ((v >> i) & 1) as u8).collect();
            Ok(qam_map(&bits, qam_order)?[0])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_qam_first_quadrant() {
        let syms = qam_map(&[0, 0], 4).unwrap();
        let expected = Complex64::new(1.0, 1.0) / 2f64.sqrt();
        assert!((syms[0] - expected).norm() < 1e-15);
    }

    #[test]
    fn unit_average_energy_all_orders() {
        for order in [4u32, 16, 64, 256] {
            let points = constellation(order).unwrap();
            assert_eq!(points.len(), order as usize);
            let mean: f64 =
                points.iter().map(|p| p.norm_sqr()).sum::<f64>() / order as f64;
            assert!((mean - 1.0).abs() < 1e-12, "order {order}: {mean}");
        }
    }

    #[test]
    fn demap_inverts_map_exhaustively() {
        for order in [4u32, 16, 64, 256] {
            let b = bits_per_symbol(order).unwrap();
            for v in 0..order {
                let bits: Vec<u8> = (0..b).rev().map(|i| ((v >> i) & 1) as u8).collect();
                let syms = qam_map(&bits, order).unwrap();
                assert_eq!(qam_demap(&syms, order).unwrap(), bits, "order {order} v {v}");
            }
        }
    }

    #[test]
    fn neighboring_levels_differ_one_bit() {
        // Gray labeling along each axis.
        for order in [16u32, 64] {
            let l = side(order);
            for k in 0..l - 1 {
                assert_eq!((gray(k) ^ gray(k + 1)).count_ones(), 1);
            }
        }
    }

    #[test]
    fn demap_is_nearest_point() {
        // A perturbed symbol within half the level spacing decodes unchanged.
        let s = scale(16);
        let bits = [1u8, 0, 1, 1];
        let sym = qam_map(&bits, 16).unwrap()[0];
        let jitter = Complex64::new(0.9 * s, -0.9 * s);
        assert_eq!(qam_demap(&[sym + jitter], 16).unwrap(), bits);
    }

    #[test]
    fn ragged_and_bad_order_rejected() {
        assert!(matches!(qam_map(&[0, 1, 0], 16), Err(OfdmError::RaggedBits(3, 4))));
        assert!(matches!(qam_map(&[0, 1], 8), Err(OfdmError::QamOrder(8))));
    }
}
