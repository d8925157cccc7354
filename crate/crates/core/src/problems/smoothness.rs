use super::{ClientMatrix, ProblemInstance, QuadraticProblem};
use crate::error::{invalid, Error, Result};
use crate::numkit::SymmetricMatrix;
use crate::scalar::Scalar;

/// Smoothness constants of a quadratic problem:
/// `L₋ = ‖Ā‖`, `L₊² = λ_max((1/n) Σ Aᵢ²)`, `L±² = λ_max((1/n) Σ Aᵢ² − Ā²)`,
/// `Lᵢ = ‖Aᵢ‖`. Weighted variants replace `(1/n) Σ` by `(1/n) Σ 1/(n wᵢ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothnessProfile {
    pub l_minus: f64,
    pub l_plus: f64,
    pub l_pm: f64,
    pub l_i: Vec<f64>,
    pub l_avg: f64,
    pub weights: Option<Vec<f64>>,
    pub l_plus_w: Option<f64>,
    pub l_pm_w: Option<f64>,
}

impl SmoothnessProfile {
    /// `(L₊,w, L±,w)` when weights were given, else `(L₊, L±)`.
    pub fn weighted_or_plain(&self) -> (f64, f64) {
        (self.l_plus_w.unwrap_or(self.l_plus), self.l_pm_w.unwrap_or(self.l_pm))
    }
}

/// `(√λ_max(Σ Aᵢ²/(n² wᵢ)), √λ_max(Σ wᵢ (Aᵢ/(n wᵢ) − Ā)²))`. The second
/// sum equals `Σ Aᵢ²/(n² wᵢ) − Ā²` but is PSD term by term, so the
/// homogeneous case gives exactly zero instead of cancellation noise.
fn plus_and_pm<T: Scalar>(p: &QuadraticProblem<T>, mean: &ClientMatrix<T>, weights: &[f64]) -> Result<(f64, f64)> {
    let n = p.matrices().len() as f64;
    let d = mean.dim();
    let mut second = SymmetricMatrix::zeros(d);
    let mut spread = SymmetricMatrix::zeros(d);
    for (a, &w) in p.matrices().iter().zip(weights) {
        a.add_square_to(&mut second, T::of(1.0 / (n * n * w)));
        let dev = ClientMatrix::linear_combination(&[(a, T::of(1.0 / (n * w))), (mean, -T::one())])?;
        dev.add_square_to(&mut spread, T::of(w));
    }
    let l_plus = second.max_eigenvalue()?.as_f64().max(0.0).sqrt();
    let l_pm = spread.max_eigenvalue()?.as_f64().max(0.0).sqrt();
    Ok((l_plus, l_pm))
}

pub fn smoothness_profile<T: Scalar>(problem: &ProblemInstance<T>, weights: Option<&[f64]>) -> Result<SmoothnessProfile> {
    match problem {
        ProblemInstance::Quadratic(q) => q.smoothness(weights),
        ProblemInstance::Logistic(_) => Err(Error::Unsupported(
            "smoothness constants are only computed for quadratic problems".into(),
        )),
    }
}

impl<T: Scalar> QuadraticProblem<T> {
    pub fn smoothness(&self, weights: Option<&[f64]>) -> Result<SmoothnessProfile> {
        let n = self.matrices().len();
        let mean = self.mean_matrix()?;
        let l_minus = mean.spectral_norm()?.as_f64();
        let l_i = self
            .matrices()
            .iter()
            .map(|m| m.spectral_norm().map(|v| v.as_f64()))
            .collect::<Result<Vec<_>>>()?;
        let l_avg = l_i.iter().sum::<f64>() / n as f64;
        let uniform = vec![1.0 / n as f64; n];
        let (l_plus, l_pm) = plus_and_pm(self, &mean, &uniform)?;
        let (l_plus_w, l_pm_w) = match weights {
            None => (None, None),
            Some(w) => {
                if w.len() != n || w.iter().any(|&x| !(x > 0.0)) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                    return Err(invalid("weights must be n positive reals summing to 1"));
                }
                let (a, b) = plus_and_pm(self, &mean, w)?;
                (Some(a), Some(b))
            }
        };
        Ok(SmoothnessProfile {
            l_minus,
            l_plus,
            l_pm,
            l_i,
            l_avg,
            weights: weights.map(<[f64]>::to_vec),
            l_plus_w,
            l_pm_w,
        })
    }
}
