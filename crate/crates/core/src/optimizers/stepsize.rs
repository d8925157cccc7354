use crate::combinatorial::WeightedABSpec;
use crate::compressors::ABConstants;
use crate::error::{invalid, Result};
use crate::problems::SmoothnessProfile;

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("p = {p} must lie in (0, 1]")))
    }
}

/// `1 / (L₋ + √((1−p)/p · ((A−B)L₊² + B L±²)))`.
pub fn stepsize_from_constants(l_minus: f64, l_plus: f64, l_pm: f64, a: f64, b: f64, p: f64) -> Result<f64> {
    check_p(p)?;
    if !(l_minus > 0.0) || l_plus < 0.0 || l_pm < 0.0 || a < 0.0 || b < 0.0 {
        return Err(invalid("smoothness constants must be nonnegative with L- > 0"));
    }
    let spread = ((a - b) * l_plus * l_plus + b * l_pm * l_pm).max(0.0);
    Ok(1.0 / (l_minus + ((1.0 - p) / p * spread).sqrt()))
}

/// Per-client compressors with AB constants, unweighted smoothness.
pub fn theoretical_stepsize(profile: &SmoothnessProfile, ab: &ABConstants, p: f64) -> Result<f64> {
    stepsize_from_constants(profile.l_minus, profile.l_plus, profile.l_pm, ab.a, ab.b, p)
}

/// Weighted AB constants; the profile must carry the same weights.
pub fn theoretical_stepsize_weighted(profile: &SmoothnessProfile, ab: &WeightedABSpec, p: f64) -> Result<f64> {
    match (&profile.weights, profile.l_plus_w, profile.l_pm_w) {
        (Some(w), Some(lp), Some(lpm)) if w.len() == ab.weights.len() => {
            if w.iter().zip(&ab.weights).any(|(x, y)| (x - y).abs() > 1e-12) {
                return Err(invalid("profile weights differ from the compressor weights"));
            }
            stepsize_from_constants(profile.l_minus, lp, lpm, ab.a, ab.b, p)
        }
        _ => Err(invalid("profile has no weighted constants for these weights")),
    }
}

/// `1 / (L₋ + L_avg √((1−p)/p · (ω+1)))` for importance sampling with
/// `qᵢ ∝ Lᵢ` composed with a scheme in `U(ω)`.
pub fn theorem3_stepsize(l_minus: f64, l_avg: f64, omega: f64, p: f64) -> Result<f64> {
    check_p(p)?;
    if !(l_minus > 0.0) || l_avg < 0.0 || omega < 0.0 {
        return Err(invalid("need L- > 0, L_avg >= 0, omega >= 0"));
    }
    Ok(1.0 / (l_minus + l_avg * ((1.0 - p) / p * (omega + 1.0)).sqrt()))
}

/// `1/(√a + b)`, which satisfies `aγ² + bγ ≤ 1`.
pub fn lemma2_stepsize(a: f64, b: f64) -> Result<f64> {
    if !(a >= 0.0 && b >= 0.0) || a + b == 0.0 {
        return Err(invalid("need a, b >= 0, not both zero"));
    }
    Ok(1.0 / (a.sqrt() + b))
}
