//! Closed-form communication complexity of MARINA and its optimisation over
//! the full-gradient probability `p`.
//!
//! `C(p) = (2Δ⁰/ε²)(32dp + α(1−p))(L₋ + √((1−p)/p ((A−B)L₊² + B L±²)))`
//! counts bits per client to reach `E‖∇f(x̂)‖² ≤ ε²`. The improvement
//! factor `C(p*)/C_GD` with `C_GD = (2Δ⁰/ε²) L₋ 32d` is free of `Δ⁰` and
//! `ε`, and of `L` once `L₋ = L₊` and `L± = 0`.

use std::io::Write;

use rayon::prelude::*;

use crate::compressors::{ab_constants, bits_per_client, CompressorKind, CompressorSpec};
use crate::error::{invalid, Result};

pub const P_MIN: f64 = 1e-8;
pub const GRID_POINTS: usize = 10_000;
const GOLDEN_REL_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexityInputs {
    pub d: usize,
    pub n: usize,
    pub delta0: f64,
    pub eps: f64,
    pub l_minus: f64,
    pub l_plus: f64,
    pub l_pm: f64,
    pub a: f64,
    pub b: f64,
    /// Expected bits a client sends in a compressed round.
    pub alpha: f64,
}

impl ComplexityInputs {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.delta0, self.eps, self.l_minus, self.alpha];
        let nonneg = [self.l_plus, self.l_pm, self.a, self.b];
        if self.d == 0 || self.n == 0 {
            return Err(invalid("d and n must be positive"));
        }
        if positive.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(invalid("delta0, eps, L-, alpha must be positive and finite"));
        }
        if nonneg.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(invalid("L+, L+-, A, B must be nonnegative and finite"));
        }
        if self.a < self.b {
            return Err(invalid("AB constants need A >= B"));
        }
        Ok(())
    }

    /// Unit `Δ⁰`, `ε` and `L₋ = L₊ = 1`, `L± = 0`, with the scheme's
    /// tabulated constants and exact compressed-round cost.
    pub fn for_scheme(kind: CompressorKind, d: usize, n: usize) -> Result<Self> {
        let spec = CompressorSpec::new(kind, n, d)?;
        let ab = ab_constants(&spec)?;
        let inputs = Self {
            d,
            n,
            delta0: 1.0,
            eps: 1.0,
            l_minus: 1.0,
            l_plus: 1.0,
            l_pm: 0.0,
            a: ab.a,
            b: ab.b,
            alpha: bits_per_client(&spec, true) as f64,
        };
        inputs.validate()?;
        Ok(inputs)
    }

    fn prefactor(&self) -> f64 {
        2.0 * self.delta0 / (self.eps * self.eps)
    }

    fn variance_term(&self) -> f64 {
        (self.a - self.b) * self.l_plus * self.l_plus + self.b * self.l_pm * self.l_pm
    }

    fn eval(&self, p: f64) -> f64 {
        let d = self.d as f64;
        let cost = 32.0 * d * p + self.alpha * (1.0 - p);
        let rate = self.l_minus + ((1.0 - p) / p * self.variance_term()).sqrt();
        self.prefactor() * cost * rate
    }
}

/// Bits per client, `C(p)`.
pub fn complexity(inputs: &ComplexityInputs, p: f64) -> Result<f64> {
    inputs.validate()?;
    if !(p > 0.0 && p <= 1.0) {
        return Err(invalid(format!("p must lie in (0, 1], got {p}")));
    }
    Ok(inputs.eval(p))
}

/// `C_GD = (2Δ⁰/ε²) L₋ 32d`, which is `C(1)`.
pub fn gd_complexity(inputs: &ComplexityInputs) -> Result<f64> {
    inputs.validate()?;
    Ok(inputs.prefactor() * inputs.l_minus * 32.0 * inputs.d as f64)
}

/// `10⁴` log-spaced points on `[P_MIN, 1]`, both ends included.
pub fn p_grid() -> Vec<f64> {
    let lo = P_MIN.ln();
    let step = -lo / (GRID_POINTS - 1) as f64;
    let mut grid: Vec<f64> = (0..GRID_POINTS).map(|i| (lo + step * i as f64).exp()).collect();
    grid[0] = P_MIN;
    grid[GRID_POINTS - 1] = 1.0;
    grid
}

/// Minimiser of `C` over `[P_MIN, 1]`: grid search then golden-section
/// refinement in `ln p` around the best grid point. `C(p*)` never exceeds the
/// best grid value.
pub fn optimal_p(inputs: &ComplexityInputs) -> Result<f64> {
    inputs.validate()?;
    let grid = p_grid();
    let values: Vec<f64> = grid.iter().map(|&p| inputs.eval(p)).collect();
    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("nonempty grid");
    let lo = grid[best.saturating_sub(1)].ln();
    let hi = grid[(best + 1).min(GRID_POINTS - 1)].ln();
    let f = |t: f64| inputs.eval(t.exp().min(1.0));
    let t = golden_section(f, lo, hi);
    let p = t.exp().min(1.0);
    Ok(if inputs.eval(p) <= values[best] { p } else { grid[best] })
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (fc - fd).abs() <= GOLDEN_REL_TOL * fc.abs().min(fd.abs()) && (b - a) < 1e-9 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        if b - a <= f64::EPSILON * b.abs().max(1.0) {
            break;
        }
    }
    if fc < fd {
        c
    } else {
        d
    }
}

/// `C(p*)/C_GD`.
pub fn improvement_factor(inputs: &ComplexityInputs) -> Result<f64> {
    let p = optimal_p(inputs)?;
    Ok(complexity(inputs, p)? / gd_complexity(inputs)?)
}

/// `C_ind/C_cor = (1 + √((1−p)/p · d/(4n))) / (1 + √((1−p)/p · d/(4n²)))`.
pub fn complexity_ratio_cq_iq(d: usize, n: usize, p: f64) -> Result<f64> {
    if d == 0 || n == 0 {
        return Err(invalid("d and n must be positive"));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(invalid(format!("p must lie in (0, 1], got {p}")));
    }
    let (d, n) = (d as f64, n as f64);
    let r = (1.0 - p) / p;
    Ok((1.0 + (r * d / (4.0 * n)).sqrt()) / (1.0 + (r * d / (4.0 * n * n)).sqrt()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanePoint {
    pub d: usize,
    pub n: usize,
    pub log2_speedup: f64,
}

/// `{2^lo, …, 2^hi}`.
pub fn powers_of_two(lo: u32, hi: u32) -> Vec<usize> {
    (lo..=hi).map(|k| 1usize << k).collect()
}

/// `log₂(1/IF)` for every `(d, n)`, row-major in `ds`.
pub fn dn_plane(ds: &[usize], ns: &[usize], kind: CompressorKind) -> Result<Vec<PlanePoint>> {
    let rows: Vec<Result<Vec<PlanePoint>>> = ds
        .par_iter()
        .map(|&d| {
            ns.iter()
                .map(|&n| {
                    let inputs = ComplexityInputs::for_scheme(kind, d, n)?;
                    let f = improvement_factor(&inputs)?;
                    Ok(PlanePoint { d, n, log2_speedup: -f.log2() })
                })
                .collect()
        })
        .collect();
    Ok(rows.into_iter().collect::<Result<Vec<_>>>()?.concat())
}

/// Pointwise `a − b` of two planes over the same grid.
pub fn plane_difference(a: &[PlanePoint], b: &[PlanePoint]) -> Result<Vec<PlanePoint>> {
    if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| (x.d, x.n) != (y.d, y.n)) {
        return Err(invalid("planes must share one grid"));
    }
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| PlanePoint { d: x.d, n: x.n, log2_speedup: x.log2_speedup - y.log2_speedup })
        .collect())
}

pub fn write_plane_csv<W: Write>(out: W, points: &[PlanePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["d", "n", "log2_speedup"])?;
    for p in points {
        w.write_record([p.d.to_string(), p.n.to_string(), format!("{:.12e}", p.log2_speedup)])?;
    }
    w.flush()?;
    Ok(())
}

/// Look up one cell.
pub fn plane_value(points: &[PlanePoint], d: usize, n: usize) -> Option<f64> {
    points.iter().find(|p| p.d == d && p.n == n).map(|p| p.log2_speedup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn manual(a: f64, d: usize, n: usize, alpha: f64) -> ComplexityInputs {
        ComplexityInputs { d, n, delta0: 1.0, eps: 1.0, l_minus: 1.0, l_plus: 1.0, l_pm: 0.0, a, b: 0.0, alpha }
    }

    #[test]
    fn p_one_is_gd() {
        let mut c = ComplexityInputs::for_scheme(CompressorKind::Cq, 64, 8).unwrap();
        c.delta0 = 3.0;
        c.eps = 0.5;
        c.l_minus = 2.0;
        c.l_plus = 2.5;
        let expected = 2.0 * 3.0 / 0.25 * 2.0 * 32.0 * 64.0;
        assert!((complexity(&c, 1.0).unwrap() - expected).abs() < 1e-9 * expected);
        assert_eq!(gd_complexity(&c).unwrap(), expected);
        assert!(complexity(&c, 0.0).is_err());
        assert!(complexity(&c, 1.5).is_err());
    }

    #[test]
    fn zero_variance_prefers_the_smallest_p() {
        let c = manual(0.0, 1024, 4, 1056.0);
        assert_eq!(optimal_p(&c).unwrap(), P_MIN);
    }

    #[test]
    fn large_n_equals_d_limits() {
        let n = 1 << 20;
        let iq = improvement_factor(&ComplexityInputs::for_scheme(CompressorKind::Iq, n, n).unwrap()).unwrap();
        let cq = improvement_factor(&ComplexityInputs::for_scheme(CompressorKind::Cq, n, n).unwrap()).unwrap();
        assert!((iq / 0.2277 - 1.0).abs() < 0.05, "{iq}");
        assert!((cq / 0.03125 - 1.0).abs() < 0.05, "{cq}");
        assert!((iq / cq / 7.29 - 1.0).abs() < 0.05, "{}", iq / cq);
    }

    #[test]
    fn iq_limit_of_optimal_p() {
        let n = 1 << 20;
        let p = optimal_p(&ComplexityInputs::for_scheme(CompressorKind::Iq, n, n).unwrap()).unwrap();
        assert!((p - 0.02105).abs() < 0.001, "{p}");
    }

    #[test]
    fn cq_optimal_p_matches_asymptotic_formula() {
        let n = 1 << 16;
        let c = ComplexityInputs::for_scheme(CompressorKind::Cq, n, n).unwrap();
        let a = (32.0 + n as f64) / (32.0 * n as f64);
        let b = 1.0 / (4.0 * n as f64);
        let approx = (a / (2.0 * (1.0 - a))).powf(2.0 / 3.0) * b.powf(1.0 / 3.0);
        let p = optimal_p(&c).unwrap();
        assert!((p / approx - 1.0).abs() < 0.05, "{p} vs {approx}");
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(complexity_ratio_cq_iq(64, 4, 1.0).unwrap(), 1.0);
        assert!((complexity_ratio_cq_iq(64, 4, 0.5).unwrap() - 1.5).abs() < 1e-15);
        assert!(complexity_ratio_cq_iq(64, 4, 0.0).is_err());
    }

    #[test]
    fn csv_header_and_difference() {
        let ds = powers_of_two(4, 6);
        let ns = powers_of_two(2, 3);
        let cq = dn_plane(&ds, &ns, CompressorKind::Cq).unwrap();
        let iq = dn_plane(&ds, &ns, CompressorKind::Iq).unwrap();
        let diff = plane_difference(&cq, &iq).unwrap();
        assert!(diff.iter().all(|p| p.log2_speedup >= -1e-12));
        let mut buf = Vec::new();
        write_plane_csv(&mut buf, &diff).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("d,n,log2_speedup\n16,4,"));
        assert_eq!(text.lines().count(), 1 + 6);
    }

    #[test]
    fn improvement_factor_is_a_fraction() {
        for kind in [CompressorKind::Iq, CompressorKind::Cq] {
            for (d, n) in [(16, 16), (1024, 4), (4, 1024)] {
                let f = improvement_factor(&ComplexityInputs::for_scheme(kind, d, n).unwrap()).unwrap();
                assert!(f > 0.0 && f <= 1.0, "{kind} {d} {n} {f}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn optimum_beats_every_grid_point(a in 0.0f64..100.0, d in 1usize..4096, alpha_frac in 0.01f64..1.0) {
            let c = manual(a, d, 1, alpha_frac * 32.0 * d as f64);
            let p = optimal_p(&c).unwrap();
            let best = complexity(&c, p).unwrap();
            for q in p_grid().into_iter().step_by(97) {
                prop_assert!(best <= complexity(&c, q).unwrap() * (1.0 + 1e-12));
            }
        }

        #[test]
        fn cq_never_worse_than_iq(d in 1usize..1_000_000, n in 1usize..100_000, p in 1e-6f64..=1.0) {
            prop_assert!(complexity_ratio_cq_iq(d, n, p).unwrap() >= 1.0);
        }

        #[test]
        fn pointwise_monotone(dk in 2u32..16, nk in 1u32..12, p in 1e-6f64..=1.0) {
            let (d, n) = (1usize << dk, 1usize << nk);
            let cq = complexity(&ComplexityInputs::for_scheme(CompressorKind::Cq, d, n).unwrap(), p).unwrap();
            let iq = complexity(&ComplexityInputs::for_scheme(CompressorKind::Iq, d, n).unwrap(), p).unwrap();
            prop_assert!(cq <= iq);
        }
    }
}
