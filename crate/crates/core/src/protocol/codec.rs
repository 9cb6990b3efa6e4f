//! Payload encodings shared by the BB84-type protocols.

use super::ProtocolError;
use crate::commit::wire::{put_u32, Reader};
use crate::qsim::{BasisString, BitString};

pub fn put_bits(out: &mut Vec<u8>, bits: &BitString) {
    put_u32(out, bits.len() as u32);
    out.extend_from_slice(&bits.pack());
}

pub fn read_bits(r: &mut Reader<'_>) -> Result<BitString, ProtocolError> {
    let len = r.u32()? as usize;
    let bytes = r.take(len.div_ceil(8))?;
    BitString::unpack(bytes, len).ok_or_else(|| ProtocolError::Decode("malformed bit string".into()))
}

pub fn put_bases(out: &mut Vec<u8>, bases: &BasisString) {
    put_u32(out, bases.len() as u32);
    out.extend_from_slice(&bases.pack());
}

pub fn read_bases(r: &mut Reader<'_>) -> Result<BasisString, ProtocolError> {
    let len = r.u32()? as usize;
    let bytes = r.take(len.div_ceil(8))?;
    BasisString::unpack(bytes, len).ok_or_else(|| ProtocolError::Decode("malformed basis string".into()))
}

pub fn put_indices(out: &mut Vec<u8>, indices: &[usize]) {
    put_u32(out, indices.len() as u32);
    for &i in indices {
        put_u32(out, i as u32);
    }
}

pub fn read_indices(r: &mut Reader<'_>) -> Result<Vec<usize>, ProtocolError> {
    Ok(r.u32s()?.into_iter().map(|i| i as usize).collect())
}

pub fn encode_bits(bits: &BitString) -> Vec<u8> {
    let mut out = Vec::new();
    put_bits(&mut out, bits);
    out
}

pub fn decode_bits(payload: &[u8]) -> Result<BitString, ProtocolError> {
    let mut r = Reader::new(payload);
    let bits = read_bits(&mut r)?;
    r.finish()?;
    Ok(bits)
}

pub fn encode_u32(x: u32) -> Vec<u8> {
    x.to_le_bytes().to_vec()
}

pub fn decode_u32(payload: &[u8]) -> Result<u32, ProtocolError> {
    let mut r = Reader::new(payload);
    let x = r.u32()?;
    r.finish()?;
    Ok(x)
}
