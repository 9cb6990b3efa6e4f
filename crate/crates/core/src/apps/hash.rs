use rand::Rng;
use serde::Serialize;

use crate::commit::wire::{put_u32, Reader};
use crate::protocol::{codec, ProtocolError};
use crate::qsim::BitString;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Family {
    /// Hashes strings of the positions.
    F,
    /// Hashes passwords.
    G,
}

/// Binary Toeplitz matrix plus offset. Entry `(i, j)` is
/// `diag[i - j + cols - 1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HashSeed {
    pub family: Family,
    pub rows: usize,
    pub cols: usize,
    pub diag: BitString,
    pub offset: BitString,
}

impl HashSeed {
    pub fn new(
        family: Family,
        rows: usize,
        cols: usize,
        diag: BitString,
        offset: BitString,
    ) -> Result<Self, ProtocolError> {
        let want = (rows + cols).saturating_sub(1);
        if diag.len() != want || offset.len() != rows {
            return Err(ProtocolError::Argument(format!(
                "a {rows}x{cols} seed needs {want} diagonal bits and {rows} offset bits"
            )));
        }
        Ok(Self { family, rows, cols, diag, offset })
    }

    pub fn random<R: Rng + ?Sized>(family: Family, rows: usize, cols: usize, rng: &mut R) -> Self {
        let diag = BitString::random((rows + cols).saturating_sub(1), rng);
        let offset = BitString::random(rows, rng);
        Self { family, rows, cols, diag, offset }
    }

    /// Identity matrix, zero offset.
    pub fn identity(family: Family, n: usize) -> Self {
        let mut diag = BitString::zeros((2 * n).saturating_sub(1));
        if n > 0 {
            diag.set(n - 1, 1);
        }
        Self { family, rows: n, cols: n, diag, offset: BitString::zeros(n) }
    }

    pub fn entry(&self, i: usize, j: usize) -> u8 {
        self.diag.get(i + self.cols - 1 - j)
    }

    pub fn write(&self, out: &mut Vec<u8>) {
        out.push(match self.family {
            Family::F => 0,
            Family::G => 1,
        });
        put_u32(out, self.rows as u32);
        put_u32(out, self.cols as u32);
        codec::put_bits(out, &self.diag);
        codec::put_bits(out, &self.offset);
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Self, ProtocolError> {
        let family = match r.u8()? {
            0 => Family::F,
            1 => Family::G,
            other => return Err(ProtocolError::Decode(format!("unknown hash family {other}"))),
        };
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        let diag = codec::read_bits(r)?;
        let offset = codec::read_bits(r)?;
        Self::new(family, rows, cols, diag, offset).map_err(|e| ProtocolError::Decode(e.to_string()))
    }
}

/// `T input + offset` over GF(2).
pub fn toeplitz_hash(seed: &HashSeed, input: &BitString) -> Result<BitString, ProtocolError> {
    if input.len() != seed.cols {
        return Err(ProtocolError::Argument(format!("input has {} bits, seed expects {}", input.len(), seed.cols)));
    }
    let ones: Vec<usize> = (0..input.len()).filter(|&j| input.get(j) == 1).collect();
    Ok((0..seed.rows).map(|i| ones.iter().fold(seed.offset.get(i), |acc, &j| acc ^ seed.entry(i, j))).collect())
}
