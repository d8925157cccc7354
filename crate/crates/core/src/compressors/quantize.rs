//! Two-point quantizers on a range `[l, r]`: independent (each client rounds
//! with its own uniform) and correlated (clients share a permutation of the
//! `n` strata of `[0, 1)`, so their rounding errors cancel in the mean).

use crate::error::{invalid, Result};
use crate::numkit::RandomStream;
use crate::scalar::Scalar;

/// Decides `1{(rank + u) / group < y}` without forming the sum, so the
/// integer case `group * y ∈ ℕ` is exact: client ranks below `⌊group·y⌋`
/// always round up, the rank equal to it rounds up with probability equal to
/// the fractional part, and the rest round down.
#[inline]
pub(crate) fn rounds_up(y: f64, rank: usize, group: usize, u: f64) -> bool {
    // y ∈ [0, 1], so truncation is the floor.
    let t = y * group as f64;
    let whole = t as usize;
    let frac = t - whole as f64;
    rank < whole || (rank == whole && u < frac)
}

fn check_range<T: Scalar>(values: &[T], l: T, r: T) -> Result<()> {
    if !(l.is_finite() && r.is_finite()) || l > r {
        return Err(invalid("quantizer range must satisfy l <= r, both finite"));
    }
    if values.iter().any(|&a| !(a >= l && a <= r)) {
        return Err(invalid("quantizer input outside [l, r]"));
    }
    Ok(())
}

/// Correlated scalar quantization of one value per client.
///
/// `perm[i]` is client `i`'s stratum and `uniforms[i]` its offset inside the
/// stratum, scaled to `[0, 1)`. Returns values in `{l, r}`; `l == r` returns
/// `l` for every client.
pub fn cq_scalar<T: Scalar>(values: &[T], l: T, r: T, perm: &[usize], uniforms: &[f64]) -> Result<Vec<T>> {
    check_range(values, l, r)?;
    let n = values.len();
    if perm.len() != n || uniforms.len() != n {
        return Err(invalid("need one stratum and one uniform per client"));
    }
    if l == r {
        return Ok(vec![l; n]);
    }
    let width = r - l;
    Ok(values
        .iter()
        .zip(perm.iter().zip(uniforms))
        .map(|(&a, (&rank, &u))| {
            let y = ((a - l) / width).as_f64();
            if rounds_up(y, rank, n, u) {
                r
            } else {
                l
            }
        })
        .collect())
}

/// [`cq_scalar`] drawing the permutation and offsets from `rng`.
pub fn cq_scalar_sampled<T: Scalar>(values: &[T], l: T, r: T, rng: &mut RandomStream) -> Result<Vec<T>> {
    let mut perm: Vec<usize> = (0..values.len()).collect();
    rng.shuffle(&mut perm);
    let uniforms: Vec<f64> = (0..values.len()).map(|_| rng.uniform()).collect();
    cq_scalar(values, l, r, &perm, &uniforms)
}

/// Independent two-point rounding: `r` with probability `(a - l) / (r - l)`.
pub fn iq_scalar<T: Scalar>(a: T, l: T, r: T, u: f64) -> Result<T> {
    check_range(&[a], l, r)?;
    if l == r {
        return Ok(l);
    }
    let y = ((a - l) / (r - l)).as_f64();
    Ok(if rounds_up(y, 0, 1, u) { r } else { l })
}

/// `(n a - ⌊n a⌋)(⌊n a⌋ + 1 - n a)` for `a` normalised to `[0, 1]`: the exact
/// squared error of the sum of `n` correlated quantizers of a common value.
pub fn cq_error_constant(n: usize, y: f64) -> f64 {
    let t = n as f64 * y;
    let frac = t - t.floor();
    frac * (1.0 - frac)
}

/// Next `f32` at or above `x`; the transmitted norm header. Rounding up keeps
/// every coordinate inside `[-R, R]`, so quantizers stay exactly unbiased.
pub fn header_round_up(x: f64) -> Result<f32> {
    if !x.is_finite() || x < 0.0 {
        return Err(invalid(format!("norm header {x} is not a finite nonnegative value")));
    }
    let mut h = x as f32;
    if (h as f64) < x {
        h = h.next_up();
    }
    if !h.is_finite() {
        return Err(invalid(format!("norm {x} overflows a 32-bit header")));
    }
    Ok(h)
}
