//! One communication round: draw the shared and private randomness, then
//! compress every client.
//!
//! Stream layout under the round stream: `[BLOCKS]` for the PermK block
//! structure (row then column permutation), `[SHARED]` for one permutation
//! per coordinate drawn for `j = 0..d` in order, and `[CLIENT, i]` for the
//! uniforms of client `i` in the order of the coordinates it transmits.

use rayon::prelude::*;

use super::dither::dither_with;
use super::message::{CompressedMessage, Payload};
use super::quantize::{header_round_up, rounds_up};
use super::{BlockAssignment, CompressorKind, CompressorSpec};
use crate::error::{invalid, Error, Result};
use crate::numkit::{labels, BitBuffer, RandomStream};
use crate::scalar::{all_finite, norm_sq, Scalar};

#[derive(Clone, Debug)]
pub struct RoundRandomness {
    group: usize,
    /// `perms[j * group + slot]`: stratum of the client at `slot` for coordinate `j`.
    perms: Vec<u32>,
    uniforms: Vec<Vec<f64>>,
    blocks: Option<BlockAssignment>,
}

impl RoundRandomness {
    pub fn draw(spec: &CompressorSpec, rng: &RandomStream) -> Result<Self> {
        let (n, d) = (spec.n(), spec.d());
        let blocks = match spec.kind() {
            CompressorKind::PermK { tau } | CompressorKind::PermKCq { tau } if tau > 1 => {
                Some(BlockAssignment::draw(n, d, tau, &mut rng.child(labels::BLOCKS))?)
            }
            _ => None,
        };
        let (group, per_client) = match spec.kind() {
            CompressorKind::Identity | CompressorKind::PermK { .. } => (1, 0),
            CompressorKind::Cq => (n, d),
            CompressorKind::PermKCq { tau } => (n / tau, d / tau),
            CompressorKind::DriveReference => {
                return Err(Error::Unsupported("drive has no implementation".into()))
            }
            _ => (1, d),
        };
        let mut perms = Vec::new();
        if group > 1 {
            let mut shared = rng.child(labels::SHARED);
            perms.reserve(d * group);
            for _ in 0..d {
                let start = perms.len();
                perms.extend(0..group as u32);
                shared.shuffle(&mut perms[start..]);
            }
        }
        let clients = rng.child(labels::CLIENT);
        let uniforms = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut s = clients.child(i as u64);
                (0..per_client).map(|_| s.uniform()).collect()
            })
            .collect();
        Ok(Self { group, perms, uniforms, blocks })
    }

    pub fn group_size(&self) -> usize {
        self.group
    }

    /// Strata of coordinate `j`, indexed by slot. Empty for uncorrelated schemes.
    pub fn permutation(&self, coord: usize) -> &[u32] {
        if self.group > 1 {
            &self.perms[coord * self.group..(coord + 1) * self.group]
        } else {
            &[]
        }
    }

    #[inline]
    fn stratum(&self, coord: usize, slot: usize) -> usize {
        if self.group > 1 {
            self.perms[coord * self.group + slot] as usize
        } else {
            0
        }
    }

    pub fn uniforms(&self, client: usize) -> &[f64] {
        &self.uniforms[client]
    }

    pub fn blocks(&self) -> Option<&BlockAssignment> {
        self.blocks.as_ref()
    }
}

#[derive(Clone, Debug)]
pub struct RoundOutput<T> {
    pub messages: Vec<CompressedMessage<T>>,
    pub decoded: Vec<Vec<T>>,
}

impl<T: Scalar> RoundOutput<T> {
    /// Server-side average of the decoded vectors.
    pub fn mean(&self) -> Vec<T> {
        crate::scalar::mean_vector(&self.decoded)
    }

    pub fn total_bits(&self) -> u64 {
        self.messages.iter().map(|m| m.bit_count).sum()
    }
}

pub fn compress_round<T: Scalar>(spec: &CompressorSpec, inputs: &[Vec<T>], rng: &RandomStream) -> Result<RoundOutput<T>> {
    check_inputs(spec, inputs)?;
    let randomness = RoundRandomness::draw(spec, rng)?;
    compress_with(spec, inputs, &randomness)
}

fn check_inputs<T: Scalar>(spec: &CompressorSpec, inputs: &[Vec<T>]) -> Result<()> {
    if inputs.len() != spec.n() {
        return Err(invalid(format!("expected {} client vectors, got {}", spec.n(), inputs.len())));
    }
    for (i, a) in inputs.iter().enumerate() {
        if a.len() != spec.d() {
            return Err(invalid(format!("client {i}: expected dimension {}, got {}", spec.d(), a.len())));
        }
        if !all_finite(a) {
            return Err(invalid(format!("client {i}: input is not finite")));
        }
    }
    Ok(())
}

/// Two-point sign code of `values` on `[-R, R]`; `strata(t)` gives the
/// client's stratum for the `t`-th transmitted coordinate.
fn sign_code<T: Scalar>(
    values: impl Iterator<Item = T>,
    norm: f32,
    group: usize,
    strata: impl Fn(usize) -> usize,
    uniforms: &[f64],
) -> BitBuffer {
    let mut bits = BitBuffer::with_capacity(uniforms.len());
    let r = norm as f64;
    for (t, a) in values.enumerate() {
        let bit = if r == 0.0 {
            false
        } else {
            let y = ((a.as_f64() + r) / (2.0 * r)).clamp(0.0, 1.0);
            rounds_up(y, strata(t), group, uniforms[t])
        };
        bits.push(bit);
    }
    bits
}

fn compress_client<T: Scalar>(
    spec: &CompressorSpec,
    client: usize,
    a: &[T],
    rnd: &RoundRandomness,
) -> Result<CompressedMessage<T>> {
    let kind = spec.kind();
    let dim = spec.d();
    let uniforms = rnd.uniforms(client);
    let mut msg = match kind {
        CompressorKind::Identity => CompressedMessage {
            kind,
            dim,
            headers: vec![],
            payload: Payload::Values(a.to_vec()),
            support: None,
            bit_count: 0,
        },
        CompressorKind::Iq | CompressorKind::Cq => {
            let norm = header_round_up(norm_sq(a).as_f64().sqrt())?;
            let bits = if kind == CompressorKind::Cq {
                sign_code(a.iter().copied(), norm, rnd.group, |j| rnd.stratum(j, client), uniforms)
            } else {
                sign_code(a.iter().copied(), norm, 1, |_| 0, uniforms)
            };
            CompressedMessage { kind, dim, headers: vec![norm], payload: Payload::Bits(bits), support: None, bit_count: 0 }
        }
        CompressorKind::PermK { tau } | CompressorKind::PermKCq { tau } => {
            let support: Vec<u32> = match rnd.blocks() {
                Some(b) => b.support(client).to_vec(),
                None => (0..dim as u32).collect(),
            };
            let t = T::of(tau as f64);
            let scaled: Vec<T> = support.iter().map(|&j| t * a[j as usize]).collect();
            if matches!(kind, CompressorKind::PermK { .. }) {
                CompressedMessage { kind, dim, headers: vec![], payload: Payload::Values(scaled), support: Some(support), bit_count: 0 }
            } else {
                let norm = header_round_up(norm_sq(&scaled).as_f64().sqrt())?;
                let slot = rnd.blocks().map_or(client, |b| b.slot_of_client(client));
                let g = rnd.group;
                let bits = sign_code(
                    scaled.iter().copied(),
                    norm,
                    g,
                    |t| rnd.stratum(support[t] as usize, slot),
                    uniforms,
                );
                CompressedMessage { kind, dim, headers: vec![norm], payload: Payload::Bits(bits), support: Some(support), bit_count: 0 }
            }
        }
        CompressorKind::StdDither { .. } | CompressorKind::NatDither { .. } | CompressorKind::Ternary => {
            return dither_with(a, kind, uniforms)
        }
        CompressorKind::DriveReference => return Err(Error::Unsupported("drive has no implementation".into())),
    };
    msg.bit_count = msg.measured_bits();
    Ok(msg)
}

/// Compresses every client with pre-drawn randomness.
pub fn compress_with<T: Scalar>(
    spec: &CompressorSpec,
    inputs: &[Vec<T>],
    randomness: &RoundRandomness,
) -> Result<RoundOutput<T>> {
    check_inputs(spec, inputs)?;
    let results: Vec<Result<(CompressedMessage<T>, Vec<T>)>> = inputs
        .par_iter()
        .enumerate()
        .map(|(i, a)| {
            let msg = compress_client(spec, i, a, randomness)?;
            let decoded = msg.decode()?;
            Ok((msg, decoded))
        })
        .collect();
    let mut messages = Vec::with_capacity(inputs.len());
    let mut decoded = Vec::with_capacity(inputs.len());
    for r in results {
        let (m, v) = r?;
        messages.push(m);
        decoded.push(v);
    }
    Ok(RoundOutput { messages, decoded })
}
