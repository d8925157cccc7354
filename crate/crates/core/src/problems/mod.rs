//! Problem instances: synthetic quadratics, nonconvex logistic regression,
//! LibSVM ingestion and smoothness constants.

mod libsvm;
mod logistic;
mod quadratic;
mod smoothness;

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

pub use libsvm::{load_libsvm, parse_libsvm, shard, shard_sizes, LabeledDataset};
pub use logistic::{LogisticProblem, Shard, SparseRow};
pub use quadratic::{generate_quadratic_li, generate_quadratic_lpm, ClientMatrix, QuadraticProblem};
pub use smoothness::{smoothness_profile, SmoothnessProfile};

/// `f(x) = (1/n) Σ fᵢ(x)` with per-client gradient oracles.
pub trait Problem<T: Scalar>: Sync {
    fn n(&self) -> usize;

    fn d(&self) -> usize;

    fn x0(&self) -> &[T];

    /// `fᵢ(x)`; `x` has length `d`.
    fn client_value_unchecked(&self, i: usize, x: &[T]) -> T;

    /// Writes `∇fᵢ(x)` into `out`; both have length `d`.
    fn client_gradient_into(&self, i: usize, x: &[T], out: &mut [T]);

    fn gradient(&self, i: usize, x: &[T]) -> Result<Vec<T>> {
        self.check(x)?;
        if i >= self.n() {
            return Err(invalid(format!("client {i} out of range 0..{}", self.n())));
        }
        let mut out = vec![T::zero(); self.d()];
        self.client_gradient_into(i, x, &mut out);
        Ok(out)
    }

    /// All client gradients, evaluated in parallel.
    fn client_gradients(&self, x: &[T]) -> Result<Vec<Vec<T>>> {
        self.check(x)?;
        Ok((0..self.n())
            .into_par_iter()
            .map(|i| {
                let mut out = vec![T::zero(); self.d()];
                self.client_gradient_into(i, x, &mut out);
                out
            })
            .collect())
    }

    /// `(1/n) Σ ∇fᵢ(x)`, summed in client order.
    fn full_gradient(&self, x: &[T]) -> Result<Vec<T>> {
        Ok(crate::scalar::mean_vector(&self.client_gradients(x)?))
    }

    fn value(&self, x: &[T]) -> Result<T> {
        self.check(x)?;
        let total = (0..self.n()).fold(T::zero(), |acc, i| acc + self.client_value_unchecked(i, x));
        Ok(total / T::of(self.n() as f64))
    }

    fn check(&self, x: &[T]) -> Result<()> {
        if x.len() != self.d() {
            return Err(invalid(format!("expected a point of dimension {}, got {}", self.d(), x.len())));
        }
        Ok(())
    }
}

/// Either problem family behind one type.
#[derive(Clone, Debug)]
pub enum ProblemInstance<T> {
    Quadratic(QuadraticProblem<T>),
    Logistic(LogisticProblem<T>),
}

impl<T: Scalar> Problem<T> for ProblemInstance<T> {
    fn n(&self) -> usize {
        match self {
            ProblemInstance::Quadratic(p) => p.n(),
            ProblemInstance::Logistic(p) => p.n(),
        }
    }

    fn d(&self) -> usize {
        match self {
            ProblemInstance::Quadratic(p) => p.d(),
            ProblemInstance::Logistic(p) => p.d(),
        }
    }

    fn x0(&self) -> &[T] {
        match self {
            ProblemInstance::Quadratic(p) => p.x0(),
            ProblemInstance::Logistic(p) => p.x0(),
        }
    }

    fn client_value_unchecked(&self, i: usize, x: &[T]) -> T {
        match self {
            ProblemInstance::Quadratic(p) => p.client_value_unchecked(i, x),
            ProblemInstance::Logistic(p) => p.client_value_unchecked(i, x),
        }
    }

    fn client_gradient_into(&self, i: usize, x: &[T], out: &mut [T]) {
        match self {
            ProblemInstance::Quadratic(p) => p.client_gradient_into(i, x, out),
            ProblemInstance::Logistic(p) => p.client_gradient_into(i, x, out),
        }
    }
}
