//! Little-endian, length-prefixed encoding shared by keys and commitments.

use super::lwe::{Ciphertext, Commitment, Randomness};
use super::CommitError;

pub fn put_u32(out: &mut Vec<u8>, x: u32) {
    out.extend_from_slice(&x.to_le_bytes());
}

pub fn put_u32s(out: &mut Vec<u8>, xs: &[u32]) {
    put_u32(out, xs.len() as u32);
    for &x in xs {
        put_u32(out, x);
    }
}

pub fn put_bytes(out: &mut Vec<u8>, bytes: &[u8]) {
    put_u32(out, bytes.len() as u32);
    out.extend_from_slice(bytes);
}

pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], CommitError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| CommitError::Decode(format!("truncated input at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8, CommitError> {
        Ok(self.take(1)?[0])
    }

    pub fn u64(&mut self) -> Result<u64, CommitError> {
        let b = self.take(8)?;
        let mut w = [0u8; 8];
        w.copy_from_slice(b);
        Ok(u64::from_le_bytes(w))
    }

    pub fn u32(&mut self) -> Result<u32, CommitError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub fn u32s(&mut self) -> Result<Vec<u32>, CommitError> {
        let n = self.u32()? as usize;
        if n > self.remaining() / 4 {
            return Err(CommitError::Decode("length prefix exceeds input".into()));
        }
        (0..n).map(|_| self.u32()).collect()
    }

    pub fn bytes(&mut self) -> Result<&'a [u8], CommitError> {
        let n = self.u32()? as usize;
        self.take(n)
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn is_done(&self) -> bool {
        self.pos == self.buf.len()
    }

    pub fn finish(&self) -> Result<(), CommitError> {
        if self.is_done() {
            Ok(())
        } else {
            Err(CommitError::Decode(format!("{} trailing bytes", self.remaining())))
        }
    }
}

impl Ciphertext {
    pub fn write(&self, out: &mut Vec<u8>) {
        put_u32s(out, &self.u);
        put_u32(out, self.c);
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Self, CommitError> {
        Ok(Self { u: r.u32s()?, c: r.u32()? })
    }
}

impl Commitment {
    pub fn write(&self, out: &mut Vec<u8>) {
        put_u32(out, self.ciphertexts.len() as u32);
        for ct in &self.ciphertexts {
            ct.write(out);
        }
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Self, CommitError> {
        let n = r.u32()? as usize;
        if n > r.remaining() / 8 {
            return Err(CommitError::Decode("ciphertext count exceeds input".into()));
        }
        Ok(Self { ciphertexts: (0..n).map(|_| Ciphertext::read(r)).collect::<Result<_, _>>()? })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write(&mut out);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CommitError> {
        let mut r = Reader::new(bytes);
        let c = Self::read(&mut r)?;
        r.finish()?;
        Ok(c)
    }
}

impl Randomness {
    pub fn write(&self, out: &mut Vec<u8>) {
        put_u32(out, self.len as u32);
        out.extend_from_slice(&self.bytes);
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Self, CommitError> {
        let len = r.u32()? as usize;
        let bytes = r.take(len.div_ceil(8))?.to_vec();
        Ok(Self { len, bytes })
    }
}
