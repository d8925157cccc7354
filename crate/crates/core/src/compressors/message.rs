//! Bit-exact client messages.
//!
//! Wire layout: `[tag: u8][params][headers: f32 LE][payload]`. Params are
//! `d: u32` followed by `k: u32, q: f32` for dithering or `tau: u32` for the
//! PermK family. `bit_count` covers headers and payload only. Dithering
//! headers are charged 31 bits since the norm is nonnegative.

use num_bigint::BigUint;

use super::{radix_payload_bits, CompressorKind, NormIndex};
use crate::error::{invalid, Error, Result};
use crate::numkit::BitBuffer;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum SchemeTag {
    Identity = 0,
    Iq = 1,
    Cq = 2,
    StdDither = 3,
    NatDither = 4,
    Ternary = 5,
    PermK = 6,
    PermKCq = 7,
}

impl SchemeTag {
    pub fn of(kind: CompressorKind) -> Result<Self> {
        Ok(match kind {
            CompressorKind::Identity => SchemeTag::Identity,
            CompressorKind::Iq => SchemeTag::Iq,
            CompressorKind::Cq => SchemeTag::Cq,
            CompressorKind::StdDither { .. } => SchemeTag::StdDither,
            CompressorKind::NatDither { .. } => SchemeTag::NatDither,
            CompressorKind::Ternary => SchemeTag::Ternary,
            CompressorKind::PermK { .. } => SchemeTag::PermK,
            CompressorKind::PermKCq { .. } => SchemeTag::PermKCq,
            CompressorKind::DriveReference => {
                return Err(Error::Unsupported("drive has no wire encoding".into()))
            }
        })
    }

    fn from_u8(tag: u8) -> Result<Self> {
        Ok(match tag {
            0 => SchemeTag::Identity,
            1 => SchemeTag::Iq,
            2 => SchemeTag::Cq,
            3 => SchemeTag::StdDither,
            4 => SchemeTag::NatDither,
            5 => SchemeTag::Ternary,
            6 => SchemeTag::PermK,
            7 => SchemeTag::PermKCq,
            other => return Err(invalid(format!("unknown scheme tag {other}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Payload<T> {
    Empty,
    /// One sign bit per transmitted coordinate.
    Bits(BitBuffer),
    /// Dithering symbols in `0..2k+1`, packed as one radix-`(2k+1)` integer.
    Symbols(BitBuffer),
    /// Raw coordinates at native precision, charged 32 bits each.
    Values(Vec<T>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompressedMessage<T> {
    pub kind: CompressorKind,
    pub dim: usize,
    pub headers: Vec<f32>,
    pub payload: Payload<T>,
    /// Coordinates carried by a sparse payload, ascending. Derived from
    /// shared randomness on both ends, so it is never transmitted.
    pub support: Option<Vec<u32>>,
    pub bit_count: u64,
}

fn dither_params(kind: CompressorKind) -> Option<(u32, bool)> {
    match kind {
        CompressorKind::StdDither { k, .. } => Some((k, false)),
        CompressorKind::NatDither { k, .. } => Some((k, true)),
        CompressorKind::Ternary => Some((1, false)),
        _ => None,
    }
}

/// Packs symbols `s_j ∈ 0..radix` as `Σ s_j radix^j` in exactly
/// `⌈len·log₂ radix⌉` bits.
pub(crate) fn pack_symbols(symbols: &[u8], radix: u32) -> BitBuffer {
    let bits = radix_payload_bits(radix, symbols.len()) as usize;
    let value = BigUint::from_radix_le(symbols, radix).expect("symbols below radix");
    BitBuffer::from_bytes(value.to_bytes_le(), bits)
}

pub(crate) fn unpack_symbols(buf: &BitBuffer, radix: u32, len: usize) -> Result<Vec<u8>> {
    let value = BigUint::from_bytes_le(buf.as_bytes());
    let mut digits = value.to_radix_le(radix);
    if digits.len() > len {
        if digits[len..].iter().any(|&d| d != 0) {
            return Err(invalid("symbol payload exceeds its declared length"));
        }
    }
    digits.resize(len, 0);
    Ok(digits)
}

impl<T: Scalar> CompressedMessage<T> {
    /// Number of coordinates carried by the payload.
    fn carried(&self) -> usize {
        match self.kind {
            CompressorKind::PermK { tau } | CompressorKind::PermKCq { tau } => self.dim / tau,
            _ => self.dim,
        }
    }

    /// Recomputes the cost of headers plus payload.
    pub fn measured_bits(&self) -> u64 {
        let header_bits: u64 = if dither_params(self.kind).is_some() { 31 } else { 32 };
        let payload = match &self.payload {
            Payload::Empty => 0,
            Payload::Bits(b) | Payload::Symbols(b) => b.len() as u64,
            Payload::Values(v) => 32 * v.len() as u64,
        };
        header_bits * self.headers.len() as u64 + payload
    }

    /// Reconstructs the compressed vector.
    pub fn decode(&self) -> Result<Vec<T>> {
        let d = self.dim;
        let carried = self.carried();
        let mut out = vec![T::zero(); d];
        let place = |out: &mut Vec<T>, values: Vec<T>| -> Result<()> {
            match &self.support {
                None if values.len() == d => {
                    *out = values;
                    Ok(())
                }
                Some(support) if support.len() == values.len() => {
                    for (&j, v) in support.iter().zip(values) {
                        *out.get_mut(j as usize).ok_or_else(|| invalid("support index out of range"))? = v;
                    }
                    Ok(())
                }
                _ => Err(invalid("payload length does not match dimension or support")),
            }
        };
        match (&self.payload, self.kind) {
            (Payload::Values(v), CompressorKind::Identity | CompressorKind::PermK { .. }) => {
                place(&mut out, v.clone())?;
            }
            (Payload::Bits(bits), CompressorKind::Iq | CompressorKind::Cq | CompressorKind::PermKCq { .. }) => {
                let r = *self.headers.first().ok_or_else(|| invalid("missing norm header"))?;
                if bits.len() != carried {
                    return Err(invalid("sign payload has the wrong length"));
                }
                let values = if r == 0.0 {
                    vec![T::zero(); carried]
                } else {
                    let r = T::of(r as f64);
                    bits.iter().map(|b| if b { r } else { -r }).collect()
                };
                place(&mut out, values)?;
            }
            (Payload::Empty, kind) if dither_params(kind).is_some() => {
                if self.headers.first().copied() != Some(0.0) {
                    return Err(invalid("empty dithering payload requires a zero header"));
                }
            }
            (Payload::Symbols(buf), kind) if dither_params(kind).is_some() => {
                let (k, natural) = dither_params(kind).expect("checked");
                let norm = *self.headers.first().ok_or_else(|| invalid("missing norm header"))? as f64;
                let levels = super::dither_levels(k, natural);
                let symbols = unpack_symbols(buf, 2 * k + 1, d)?;
                for (o, &s) in out.iter_mut().zip(&symbols) {
                    let s = s as u32;
                    let (mag, sign) = if s == 0 {
                        (0, 1.0)
                    } else if s <= k {
                        (s, 1.0)
                    } else {
                        (s - k, -1.0)
                    };
                    *o = T::of(sign * norm * levels[(k - mag) as usize]);
                }
            }
            _ => return Err(invalid(format!("payload does not match scheme {}", self.kind))),
        }
        Ok(out)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = vec![SchemeTag::of(self.kind)? as u8];
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        match self.kind {
            CompressorKind::StdDither { q, k } | CompressorKind::NatDither { q, k } => {
                out.extend_from_slice(&k.to_le_bytes());
                out.extend_from_slice(&(q.as_f64() as f32).to_le_bytes());
            }
            CompressorKind::PermK { tau } | CompressorKind::PermKCq { tau } => {
                out.extend_from_slice(&(tau as u32).to_le_bytes());
            }
            _ => {}
        }
        for h in &self.headers {
            out.extend_from_slice(&h.to_le_bytes());
        }
        match &self.payload {
            Payload::Empty => {}
            Payload::Bits(b) | Payload::Symbols(b) => out.extend_from_slice(b.as_bytes()),
            Payload::Values(v) => v.iter().for_each(|x| x.write_le(&mut out)),
        }
        Ok(out)
    }

    /// Parses a message. `support` is the receiver's copy of the shared
    /// sparsity pattern, required for the PermK family.
    pub fn from_bytes(bytes: &[u8], support: Option<Vec<u32>>) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0 };
        let tag = SchemeTag::from_u8(cur.take(1)?[0])?;
        let dim = cur.u32()? as usize;
        if dim == 0 {
            return Err(invalid("message dimension is zero"));
        }
        let kind = match tag {
            SchemeTag::Identity => CompressorKind::Identity,
            SchemeTag::Iq => CompressorKind::Iq,
            SchemeTag::Cq => CompressorKind::Cq,
            SchemeTag::Ternary => CompressorKind::Ternary,
            SchemeTag::StdDither | SchemeTag::NatDither => {
                let k = cur.u32()?;
                let q = NormIndex::from_f64(cur.f32()? as f64)?;
                if k == 0 || k > 127 {
                    return Err(invalid("dithering level count out of range"));
                }
                if tag == SchemeTag::StdDither {
                    CompressorKind::StdDither { q, k }
                } else {
                    CompressorKind::NatDither { q, k }
                }
            }
            SchemeTag::PermK | SchemeTag::PermKCq => {
                let tau = cur.u32()? as usize;
                if tau == 0 || dim % tau != 0 {
                    return Err(invalid("tau must divide the dimension"));
                }
                if tag == SchemeTag::PermK {
                    CompressorKind::PermK { tau }
                } else {
                    CompressorKind::PermKCq { tau }
                }
            }
        };
        let carried = match kind {
            CompressorKind::PermK { tau } | CompressorKind::PermKCq { tau } => dim / tau,
            _ => dim,
        };
        let (headers, payload) = match kind {
            CompressorKind::Identity | CompressorKind::PermK { .. } => {
                let raw = cur.take(carried * T::BYTES)?;
                (vec![], Payload::Values(raw.chunks_exact(T::BYTES).map(T::read_le).collect()))
            }
            CompressorKind::Iq | CompressorKind::Cq | CompressorKind::PermKCq { .. } => {
                let h = cur.f32()?;
                let raw = cur.take(carried.div_ceil(8))?;
                (vec![h], Payload::Bits(BitBuffer::from_bytes(raw.to_vec(), carried)))
            }
            _ => {
                let (k, _) = dither_params(kind).expect("dithering kind");
                let h = cur.f32()?;
                if h == 0.0 {
                    (vec![h], Payload::Empty)
                } else {
                    let bits = radix_payload_bits(2 * k + 1, dim) as usize;
                    let raw = cur.take(bits.div_ceil(8))?;
                    (vec![h], Payload::Symbols(BitBuffer::from_bytes(raw.to_vec(), bits)))
                }
            }
        };
        if cur.pos != bytes.len() {
            return Err(invalid("trailing bytes after message"));
        }
        if matches!(kind, CompressorKind::PermK { .. } | CompressorKind::PermKCq { .. }) {
            match &support {
                Some(s) if s.len() == carried => {}
                _ => return Err(invalid("sparse message needs a support of d/tau coordinates")),
            }
        }
        let mut msg = Self { kind, dim, headers, payload, support, bit_count: 0 };
        msg.bit_count = msg.measured_bits();
        Ok(msg)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, count: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(count).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| invalid("message truncated"))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn symbols_round_trip_at_exact_length() {
        let symbols: Vec<u8> = (0..100).map(|i| (i * 7 % 5) as u8).collect();
        let buf = pack_symbols(&symbols, 5);
        assert_eq!(buf.len() as u64, radix_payload_bits(5, 100));
        assert_eq!(unpack_symbols(&buf, 5, 100).unwrap(), symbols);
        let top = vec![4u8; 100];
        assert_eq!(unpack_symbols(&pack_symbols(&top, 5), 5, 100).unwrap(), top);
    }

    #[test]
    fn rejects_garbage() {
        assert!(CompressedMessage::<f64>::from_bytes(&[], None).is_err());
        assert!(CompressedMessage::<f64>::from_bytes(&[9, 1, 0, 0, 0], None).is_err());
        // Identity with d = 1 needs 8 value bytes.
        assert!(CompressedMessage::<f64>::from_bytes(&[0, 1, 0, 0, 0, 1, 2], None).is_err());
    }

    proptest! {
        #[test]
        fn symbol_packing_round_trips(symbols in proptest::collection::vec(0u8..9, 0..300)) {
            let buf = pack_symbols(&symbols, 9);
            prop_assert_eq!(unpack_symbols(&buf, 9, symbols.len()).unwrap(), symbols);
        }
    }
}
