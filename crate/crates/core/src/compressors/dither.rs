//! Standard and natural dithering.
//!
//! `D(a)_j = ‖a‖_q · sign(a_j) · ξ(|a_j| / ‖a‖_q)` where `ξ(y)` rounds `y` to
//! one of its two neighbouring levels, upwards with probability
//! `(y − lower) / (upper − lower)`.

use super::message::{pack_symbols, CompressedMessage, Payload};
use super::quantize::header_round_up;
use super::{CompressorKind, NormIndex};
use crate::error::{invalid, Result};
use crate::numkit::RandomStream;
use crate::scalar::{all_finite, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DitherMode {
    /// Levels `(k − u) / k`.
    Standard,
    /// Levels `2^{−u}` for `u < k`, then `0`.
    Natural,
}

/// Levels in descending order, `levels[0] = 1`, `levels[k] = 0`.
pub fn dither_levels(k: u32, natural: bool) -> Vec<f64> {
    let k = k as usize;
    (0..=k)
        .map(|u| {
            if u == k {
                0.0
            } else if natural {
                0.5f64.powi(u as i32)
            } else {
                (k - u) as f64 / k as f64
            }
        })
        .collect()
}

/// Index into `levels` of the randomized rounding of `y ∈ [0, 1]`.
pub(crate) fn round_level(y: f64, levels: &[f64], u: f64) -> usize {
    // First level at or below y.
    let m = levels.partition_point(|&l| l > y);
    if m == 0 {
        return 0;
    }
    let (upper, lower) = (levels[m - 1], levels[m]);
    if y == lower {
        return m;
    }
    if u < (y - lower) / (upper - lower) {
        m - 1
    } else {
        m
    }
}

pub(crate) fn dither_with<T: Scalar>(a: &[T], kind: CompressorKind, uniforms: &[f64]) -> Result<CompressedMessage<T>> {
    let (q, k, natural) = match kind {
        CompressorKind::StdDither { q, k } => (q, k, false),
        CompressorKind::NatDither { q, k } => (q, k, true),
        CompressorKind::Ternary => (NormIndex::Infinity, 1, false),
        other => return Err(invalid(format!("{other} is not a dithering scheme"))),
    };
    if !all_finite(a) {
        return Err(invalid("dithering input must be finite"));
    }
    if uniforms.len() != a.len() {
        return Err(invalid("need one uniform per coordinate"));
    }
    let values: Vec<f64> = a.iter().map(|x| x.as_f64()).collect();
    let norm = header_round_up(q.norm(&values))?;
    let dim = a.len();
    if norm == 0.0 {
        return Ok(CompressedMessage { kind, dim, headers: vec![0.0], payload: Payload::Empty, support: None, bit_count: 31 });
    }
    let levels = dither_levels(k, natural);
    let n = norm as f64;
    let symbols: Vec<u8> = values
        .iter()
        .zip(uniforms)
        .map(|(&x, &u)| {
            let y = (x.abs() / n).min(1.0);
            let mag = k - round_level(y, &levels, u) as u32;
            match mag {
                0 => 0,
                m if x > 0.0 => m as u8,
                m => (k + m) as u8,
            }
        })
        .collect();
    let mut msg = CompressedMessage {
        kind,
        dim,
        headers: vec![norm],
        payload: Payload::Symbols(pack_symbols(&symbols, 2 * k + 1)),
        support: None,
        bit_count: 0,
    };
    msg.bit_count = msg.measured_bits();
    Ok(msg)
}

/// Dithers one vector, drawing one uniform per coordinate from `rng`.
pub fn dither<T: Scalar>(
    a: &[T],
    q: NormIndex,
    k: u32,
    mode: DitherMode,
    rng: &mut RandomStream,
) -> Result<(Vec<T>, CompressedMessage<T>)> {
    if k == 0 || k > 127 {
        return Err(invalid("dithering needs 1 <= k <= 127"));
    }
    NormIndex::from_f64(q.as_f64())?;
    let kind = match mode {
        DitherMode::Standard => CompressorKind::StdDither { q, k },
        DitherMode::Natural => CompressorKind::NatDither { q, k },
    };
    let uniforms: Vec<f64> = (0..a.len()).map(|_| rng.uniform()).collect();
    let msg = dither_with(a, kind, &uniforms)?;
    Ok((msg.decode()?, msg))
}
