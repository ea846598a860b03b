//! Diagonal interleaver: spreads each codeword across all 4+cr transmitted
//! symbols so that one wrong demodulated symbol damages at most one bit of
//! any codeword.
//!
//! With codeword matrix D (sf_eff rows of 4+cr-bit codewords, bit j = the
//! 2^j place), transmitted symbol j carries sf_eff bits, where bit i (i = 0
//! being the MSB) is bit j of codeword (i - j - 1) mod sf_eff.

use super::LoraError;

/// A block of sf_eff codewords awaiting interleaving: one codeword per row,
/// each 4+cr bits wide.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodewordMatrix {
    pub codewords: Vec<u8>,
    pub sf_eff: usize,
    pub cr: u8,
}

impl CodewordMatrix {
    pub fn new(codewords: Vec<u8>, sf_eff: usize, cr: u8) -> Result<Self, LoraError> {
        if cr > 4 {
            return Err(LoraError::CodingRate(cr));
        }
        if codewords.len() != sf_eff || sf_eff < 4 {
            return Err(LoraError::InterleaverShape);
        }
        let width = 4 + cr as usize;
        if codewords.iter().any(|&cw| (cw as u32) >> width != 0) {
            return Err(LoraError::InterleaverShape);
        }
        Ok(Self {
            codewords,
            sf_eff,
            cr,
        })
    }

    pub fn columns(&self) -> usize {
        4 + self.cr as usize
    }
}

/// Produce the 4+cr channel words (sf_eff bits each) for one matrix.
pub fn interleave(matrix: &CodewordMatrix) -> Result<Vec<u16>, LoraError> {
    let sf_eff = matrix.sf_eff;
    let mut words = Vec::with_capacity(matrix.columns());
    for j in 0..matrix.columns() {
        let mut word: u16 = 0;
        for i in 0..sf_eff {
            let row = (i as isize - j as isize - 1).rem_euclid(sf_eff as isize) as usize;
            let bit = (matrix.codewords[row] >> j) & 1;
            word = (word << 1) | bit as u16;
        }
        words.push(word);
    }
    Ok(words)
}

/// Invert [`interleave`]: rebuild the codeword matrix from 4+cr words.
pub fn deinterleave(words: &[u16], sf_eff: usize, cr: u8) -> Result<CodewordMatrix, LoraError> {
    if cr > 4 {
        return Err(LoraError::CodingRate(cr));
    }
    let columns = 4 + cr as usize;
    if words.len() != columns || !(4..=16).contains(&sf_eff) {
        return Err(LoraError::InterleaverShape);
    }
    if words.iter().any(|&w| (w as u32) >> sf_eff != 0) {
        return Err(LoraError::InterleaverShape);
    }
    let mut codewords = vec![0u8; sf_eff];
    for (j, &word) in words.iter().enumerate() {
        for (row, cw) in codewords.iter_mut().enumerate() {
            let i = (row + j + 1) % sf_eff;
            let bit = (word >> (sf_eff - 1 - i)) & 1;
            *cw |= (bit as u8) << j;
        }
    }
    CodewordMatrix::new(codewords, sf_eff, cr)
}
