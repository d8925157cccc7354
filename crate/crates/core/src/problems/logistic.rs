use super::Problem;
use crate::error::{invalid, Result};
use crate::numkit::SymmetricMatrix;
use crate::scalar::Scalar;

/// Sparse feature vector with 0-based ascending indices.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseRow<T> {
    pub indices: Vec<u32>,
    pub values: Vec<T>,
}

impl<T: Scalar> SparseRow<T> {
    #[inline]
    pub fn dot(&self, x: &[T]) -> T {
        self.indices
            .iter()
            .zip(&self.values)
            .fold(T::zero(), |acc, (&j, &v)| acc + v * x[j as usize])
    }
}

/// One client's data: rows with labels in `{−1, +1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Shard<T> {
    pub rows: Vec<SparseRow<T>>,
    pub labels: Vec<T>,
}

impl<T: Scalar> Shard<T> {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// `fᵢ(x) = (1/mᵢ) Σ log(1 + exp(−y aᵀx)) + λ Σⱼ xⱼ² / (1 + xⱼ²)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LogisticProblem<T> {
    shards: Vec<Shard<T>>,
    lambda: T,
    x0: Vec<T>,
}

/// `log(1 + eᶻ)` without overflow.
fn softplus<T: Scalar>(z: T) -> T {
    z.max(T::zero()) + (-z.abs()).exp().ln_1p()
}

fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

impl<T: Scalar> LogisticProblem<T> {
    /// Starts at `x⁰ = 0` unless `x0` is given.
    pub fn new(shards: Vec<Shard<T>>, d: usize, lambda: f64, x0: Option<Vec<T>>) -> Result<Self> {
        if shards.is_empty() || d == 0 {
            return Err(invalid("logistic problem needs at least one shard and d >= 1"));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid("regularization must be positive"));
        }
        for (i, s) in shards.iter().enumerate() {
            if s.is_empty() || s.rows.len() != s.labels.len() {
                return Err(invalid(format!("shard {i} is empty or has mismatched labels")));
            }
            if s.labels.iter().any(|&y| y != T::one() && y != -T::one()) {
                return Err(invalid(format!("shard {i} has labels outside {{-1, +1}}")));
            }
            for r in &s.rows {
                if r.indices.len() != r.values.len()
                    || r.indices.iter().any(|&j| j as usize >= d)
                    || r.indices.windows(2).any(|w| w[0] >= w[1])
                {
                    return Err(invalid(format!("shard {i} has a malformed sparse row")));
                }
            }
        }
        let x0 = x0.unwrap_or_else(|| vec![T::zero(); d]);
        if x0.len() != d {
            return Err(invalid("starting point has the wrong dimension"));
        }
        Ok(Self { shards, lambda: T::of(lambda), x0 })
    }

    pub fn shards(&self) -> &[Shard<T>] {
        &self.shards
    }

    pub fn lambda(&self) -> f64 {
        self.lambda.as_f64()
    }

    /// Upper bound on the smoothness of `f`:
    /// `λ_max((1/n) Σᵢ XᵢᵀXᵢ / (4mᵢ)) + 2λ`.
    pub fn smoothness_upper_bound(&self) -> Result<f64> {
        let d = self.x0.len();
        if d > 4096 {
            return Err(invalid("dense smoothness bound is limited to d <= 4096"));
        }
        let n = self.shards.len() as f64;
        let mut gram = vec![0.0f64; d * d];
        for s in &self.shards {
            let w = 1.0 / (4.0 * s.len() as f64 * n);
            for r in &s.rows {
                for (&j, &u) in r.indices.iter().zip(&r.values) {
                    for (&k, &v) in r.indices.iter().zip(&r.values) {
                        gram[j as usize * d + k as usize] += w * (u.as_f64() * v.as_f64());
                    }
                }
            }
        }
        let m = SymmetricMatrix::new(d, gram)?;
        Ok(m.max_eigenvalue()? + 2.0 * self.lambda())
    }
}

impl<T: Scalar> Problem<T> for LogisticProblem<T> {
    fn n(&self) -> usize {
        self.shards.len()
    }

    fn d(&self) -> usize {
        self.x0.len()
    }

    fn x0(&self) -> &[T] {
        &self.x0
    }

    fn client_value_unchecked(&self, i: usize, x: &[T]) -> T {
        let s = &self.shards[i];
        let data = s
            .rows
            .iter()
            .zip(&s.labels)
            .fold(T::zero(), |acc, (r, &y)| acc + softplus(-y * r.dot(x)));
        let reg = x.iter().fold(T::zero(), |acc, &v| acc + v * v / (T::one() + v * v));
        data / T::of(s.len() as f64) + self.lambda * reg
    }

    fn client_gradient_into(&self, i: usize, x: &[T], out: &mut [T]) {
        let s = &self.shards[i];
        let two = T::of(2.0);
        for (o, &v) in out.iter_mut().zip(x) {
            let q = T::one() + v * v;
            *o = self.lambda * two * v / (q * q);
        }
        let inv_m = T::one() / T::of(s.len() as f64);
        for (r, &y) in s.rows.iter().zip(&s.labels) {
            let coef = -y * sigmoid(-y * r.dot(x)) * inv_m;
            for (&j, &v) in r.indices.iter().zip(&r.values) {
                out[j as usize] = out[j as usize] + coef * v;
            }
        }
    }
}
