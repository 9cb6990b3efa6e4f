use serde::Serialize;

use crate::protocol::ProtocolError;
use crate::qsim::{Basis, BasisString};

/// Repetition code from `password_bits`-bit passwords to `n` bases. Bit `j`
/// of the password fills block `j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PasswordCode {
    pub password_bits: usize,
    pub n: usize,
}

impl PasswordCode {
    pub fn block(&self) -> usize {
        self.n / self.password_bits
    }

    pub fn size(&self) -> usize {
        1usize << self.password_bits
    }

    /// Errors corrected anywhere in the word.
    pub fn radius(&self) -> usize {
        (self.block() - 1) / 2
    }

    /// `radius / n`.
    pub fn delta(&self) -> f64 {
        self.radius() as f64 / self.n as f64
    }

    /// `log2 |W| / n`.
    pub fn nu(&self) -> f64 {
        self.password_bits as f64 / self.n as f64
    }

    pub fn min_distance(&self) -> usize {
        self.block()
    }

    pub fn encode(&self, w: usize) -> Result<BasisString, ProtocolError> {
        if w >= self.size() {
            return Err(ProtocolError::Argument(format!("password {w} outside a {}-bit space", self.password_bits)));
        }
        let b = self.block();
        Ok((0..self.n).map(|i| Basis::from_bit(((w >> (i / b)) & 1) as u8)).collect())
    }

    /// Majority per block, ties toward `+`.
    pub fn decode(&self, word: &BasisString) -> Result<usize, ProtocolError> {
        if word.len() != self.n {
            return Err(ProtocolError::Argument(format!("word has {} symbols, code length is {}", word.len(), self.n)));
        }
        let b = self.block();
        let mut w = 0usize;
        for j in 0..self.password_bits {
            let ones = (j * b..(j + 1) * b).filter(|&i| word.get(i) == Basis::Times).count();
            if 2 * ones > b {
                w |= 1 << j;
            }
        }
        Ok(w)
    }
}

pub fn repetition_code(password_bits: usize, n: usize) -> Result<PasswordCode, ProtocolError> {
    if password_bits == 0 || password_bits >= usize::BITS as usize || n == 0 || !n.is_multiple_of(password_bits) {
        return Err(ProtocolError::Config(format!("{password_bits} password bits do not divide n = {n}")));
    }
    Ok(PasswordCode { password_bits, n })
}
