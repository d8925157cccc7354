//! Dense and tridiagonal symmetric matrices with exact-arithmetic-grade
//! eigenvalue routines (Householder reduction followed by implicit QL).

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// Dense symmetric matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrix<T> {
    dim: usize,
    entries: Vec<T>,
}

impl<T: Scalar> SymmetricMatrix<T> {
    /// Validates shape and exact symmetry.
    pub fn new(dim: usize, entries: Vec<T>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(invalid(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                entries.len()
            )));
        }
        for i in 0..dim {
            for j in 0..i {
                if entries[i * dim + j] != entries[j * dim + i] {
                    return Err(invalid(format!("matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { dim, entries })
    }

    /// Builds from the upper triangle of `f(i, j)`, mirrored.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut entries = vec![T::zero(); dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                entries[i * dim + j] = v;
                entries[j * dim + i] = v;
            }
        }
        Self { dim, entries }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(invalid("rows must form a square matrix"));
        }
        Self::new(dim, rows.concat())
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![T::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    /// Adds `weight * value` at `(i, j)` and, off the diagonal, at `(j, i)`.
    #[inline]
    pub(crate) fn add_symmetric(&mut self, i: usize, j: usize, value: T) {
        self.entries[i * self.dim + j] = self.entries[i * self.dim + j] + value;
        if i != j {
            self.entries[j * self.dim + i] = self.entries[j * self.dim + i] + value;
        }
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        self.entries
            .chunks_exact(self.dim)
            .map(|row| crate::scalar::dot(row, x))
            .collect()
    }

    /// `self + weight * other`.
    pub fn add_scaled(&self, other: &Self, weight: T) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(&a, &b)| a + weight * b)
                .collect(),
        }
    }

    pub fn scaled(&self, weight: T) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|&a| a * weight).collect(),
        }
    }

    /// `self · self`, which is symmetric for symmetric `self`.
    pub fn square(&self) -> Self {
        let d = self.dim;
        Self::from_fn(d, |i, j| {
            let mut acc = T::zero();
            for k in 0..d {
                acc = acc + self.get(i, k) * self.get(k, j);
            }
            acc
        })
    }

    pub fn eigenvalues(&self) -> Result<Vec<T>> {
        symmetric_eigenvalues(self)
    }

    pub fn spectral_norm(&self) -> Result<T> {
        self.eigenvalues().map(|ev| spectral_radius(&ev))
    }

    pub fn min_eigenvalue(&self) -> Result<T> {
        self.eigenvalues().map(|ev| ev.first().copied().unwrap_or_else(T::zero))
    }

    pub fn max_eigenvalue(&self) -> Result<T> {
        self.eigenvalues().map(|ev| ev.last().copied().unwrap_or_else(T::zero))
    }

    /// Solves `self · x = rhs` by Cholesky; the matrix must be positive definite.
    pub fn solve(&self, rhs: &[T]) -> Result<Vec<T>> {
        let n = self.dim;
        if rhs.len() != n {
            return Err(invalid("right-hand side has the wrong dimension"));
        }
        let mut l = vec![T::zero(); n * n];
        for j in 0..n {
            let mut diag = self.get(j, j);
            for k in 0..j {
                diag = diag - l[j * n + k] * l[j * n + k];
            }
            if !(diag > T::zero()) {
                return Err(invalid("matrix is not positive definite"));
            }
            let diag = diag.sqrt();
            l[j * n + j] = diag;
            for i in (j + 1)..n {
                let mut v = self.get(i, j);
                for k in 0..j {
                    v = v - l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = v / diag;
            }
        }
        let mut y = rhs.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] = y[i] - l[i * n + k] * y[k];
            }
            y[i] = y[i] / l[i * n + i];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                y[i] = y[i] - l[k * n + i] * y[k];
            }
            y[i] = y[i] / l[i * n + i];
        }
        Ok(y)
    }
}

/// Symmetric tridiagonal matrix: `diag` has length d, `off` length d-1.
#[derive(Clone, Debug, PartialEq)]
pub struct Tridiagonal<T> {
    pub diag: Vec<T>,
    pub off: Vec<T>,
}

impl<T: Scalar> Tridiagonal<T> {
    pub fn new(diag: Vec<T>, off: Vec<T>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(invalid(format!(
                "tridiagonal needs d diagonal and d-1 off-diagonal entries, got {} and {}",
                diag.len(),
                off.len()
            )));
        }
        Ok(Self { diag, off })
    }

    /// `scale * tridiag(-1, 2, -1)`.
    pub fn second_difference(dim: usize, scale: T) -> Self {
        Self {
            diag: vec![scale * T::of(2.0); dim],
            off: vec![-scale; dim.saturating_sub(1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        if i == j {
            self.diag[i]
        } else if i + 1 == j {
            self.off[i]
        } else if j + 1 == i {
            self.off[j]
        } else {
            T::zero()
        }
    }

    pub fn shift_diagonal(&mut self, shift: T) {
        self.diag.iter_mut().for_each(|v| *v = *v + shift);
    }

    /// Sums `diag·x[i]`, then the lower, then the upper neighbour.
    pub fn matvec_into(&self, x: &[T], out: &mut [T]) {
        let d = self.dim();
        let (x, out) = (&x[..d], &mut out[..d]);
        if d == 1 {
            out[0] = self.diag[0] * x[0];
            return;
        }
        out[0] = self.diag[0] * x[0] + self.off[0] * x[1];
        for i in 1..d - 1 {
            out[i] = self.diag[i] * x[i] + self.off[i - 1] * x[i - 1] + self.off[i] * x[i + 1];
        }
        out[d - 1] = self.diag[d - 1] * x[d - 1] + self.off[d - 2] * x[d - 2];
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim()];
        self.matvec_into(x, &mut out);
        out
    }

    pub fn to_dense(&self) -> SymmetricMatrix<T> {
        SymmetricMatrix::from_fn(self.dim(), |i, j| self.get(i, j))
    }

    /// Accumulates `weight * self²` into `acc` (a pentadiagonal update).
    pub fn add_square_to(&self, acc: &mut SymmetricMatrix<T>, weight: T) {
        let d = self.dim();
        for i in 0..d {
            for j in i..(i + 3).min(d) {
                let lo = i.saturating_sub(1).max(j.saturating_sub(1));
                let hi = (i + 1).min(j + 1).min(d - 1);
                let mut s = T::zero();
                for k in lo..=hi {
                    s = s + self.get(i, k) * self.get(k, j);
                }
                acc.add_symmetric(i, j, weight * s);
            }
        }
    }

    pub fn eigenvalues(&self) -> Result<Vec<T>> {
        check_finite(&self.diag)?;
        check_finite(&self.off)?;
        let mut d = self.diag.clone();
        let mut e = self.off.clone();
        e.push(T::zero());
        implicit_ql(&mut d, &mut e)?;
        d.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
        Ok(d)
    }

    pub fn spectral_norm(&self) -> Result<T> {
        self.eigenvalues().map(|ev| spectral_radius(&ev))
    }

    pub fn min_eigenvalue(&self) -> Result<T> {
        self.eigenvalues().map(|ev| ev[0])
    }

    pub fn max_eigenvalue(&self) -> Result<T> {
        self.eigenvalues().map(|ev| ev[ev.len() - 1])
    }

    /// Thomas algorithm; stable for positive definite matrices.
    pub fn solve(&self, rhs: &[T]) -> Result<Vec<T>> {
        let d = self.dim();
        if rhs.len() != d {
            return Err(invalid("right-hand side has the wrong dimension"));
        }
        let mut c = vec![T::zero(); d];
        let mut y = vec![T::zero(); d];
        for i in 0..d {
            let (sub, prev_c, prev_y) = if i > 0 { (self.off[i - 1], c[i - 1], y[i - 1]) } else { (T::zero(), T::zero(), T::zero()) };
            let denom = self.diag[i] - sub * prev_c;
            if denom == T::zero() || !denom.is_finite() {
                return Err(invalid("singular tridiagonal system"));
            }
            if i + 1 < d {
                c[i] = self.off[i] / denom;
            }
            y[i] = (rhs[i] - sub * prev_y) / denom;
        }
        for i in (0..d.saturating_sub(1)).rev() {
            y[i] = y[i] - c[i] * y[i + 1];
        }
        Ok(y)
    }
}

fn spectral_radius<T: Scalar>(sorted: &[T]) -> T {
    match (sorted.first(), sorted.last()) {
        (Some(&lo), Some(&hi)) => lo.abs().max(hi.abs()),
        _ => T::zero(),
    }
}

fn check_finite<T: Scalar>(values: &[T]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(invalid("matrix has non-finite entries"))
    }
}

/// All eigenvalues of a dense symmetric matrix, ascending.
pub fn symmetric_eigenvalues<T: Scalar>(m: &SymmetricMatrix<T>) -> Result<Vec<T>> {
    check_finite(&m.entries)?;
    let n = m.dim;
    if n == 0 {
        return Ok(Vec::new());
    }
    let (mut d, mut e) = householder_tridiagonalize(m);
    implicit_ql(&mut d, &mut e)?;
    d.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    Ok(d)
}

/// Reduces to tridiagonal form by Householder reflections. Returns the
/// diagonal and the coupling `e[i]` between `i` and `i + 1` (last entry 0).
fn householder_tridiagonalize<T: Scalar>(m: &SymmetricMatrix<T>) -> (Vec<T>, Vec<T>) {
    let n = m.dim;
    let mut a = m.entries.clone();
    let mut diag = vec![T::zero(); n];
    let mut off = vec![T::zero(); n];
    let mut v = vec![T::zero(); n];
    let mut p = vec![T::zero(); n];

    for k in 0..n.saturating_sub(1) {
        let len = n - k - 1;
        let col = |a: &[T], i: usize| a[(k + 1 + i) * n + k];
        let scale = (0..len).fold(T::zero(), |s, i| s + col(&a, i).abs());
        diag[k] = a[k * n + k];
        if scale == T::zero() {
            off[k] = T::zero();
            continue;
        }
        let mut sigma = T::zero();
        for i in 0..len {
            v[i] = col(&a, i) / scale;
            sigma = sigma + v[i] * v[i];
        }
        let norm = sigma.sqrt();
        let alpha = if v[0] >= T::zero() { -norm } else { norm };
        off[k] = alpha * scale;
        v[0] = v[0] - alpha;
        let vtv = crate::scalar::dot(&v[..len], &v[..len]);
        if vtv == T::zero() {
            continue;
        }
        let beta = T::of(2.0) / vtv;

        // p = beta * S v on the trailing block S.
        let base = k + 1;
        for i in 0..len {
            let row = &a[(base + i) * n + base..(base + i) * n + base + len];
            p[i] = beta * crate::scalar::dot(row, &v[..len]);
        }
        let kappa = beta * T::of(0.5) * crate::scalar::dot(&v[..len], &p[..len]);
        for i in 0..len {
            p[i] = p[i] - kappa * v[i];
        }
        // S -= v p^T + p v^T
        for i in 0..len {
            let (vi, pi) = (v[i], p[i]);
            let row = &mut a[(base + i) * n + base..(base + i) * n + base + len];
            for j in 0..len {
                row[j] = row[j] - vi * p[j] - pi * v[j];
            }
        }
    }
    diag[n - 1] = a[(n - 1) * n + (n - 1)];
    off[n - 1] = T::zero();
    (diag, off)
}

#[inline]
fn with_sign<T: Scalar>(magnitude: T, sign_of: T) -> T {
    if sign_of >= T::zero() {
        magnitude.abs()
    } else {
        -magnitude.abs()
    }
}

/// Implicit QL iteration on a symmetric tridiagonal matrix, in place.
fn implicit_ql<T: Scalar>(d: &mut [T], e: &mut [T]) -> Result<()> {
    let n = d.len();
    let two = T::of(2.0);
    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > 64 {
                return Err(Error::Unsupported(
                    "tridiagonal QL iteration did not converge".into(),
                ));
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + with_sign(r, g));
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] = d[i + 1] - p;
                    e[m] = T::zero();
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] = d[l] - p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::RandomStream;
    use proptest::prelude::*;

    fn m2(a: f64, b: f64, c: f64) -> SymmetricMatrix<f64> {
        SymmetricMatrix::from_rows(&[vec![a, b], vec![b, c]]).unwrap()
    }

    #[test]
    fn small_examples() {
        let id = SymmetricMatrix::<f64>::identity(2);
        assert_eq!(id.spectral_norm().unwrap(), 1.0);
        assert_eq!(id.min_eigenvalue().unwrap(), 1.0);

        let m = m2(2.0, -1.0, 2.0);
        assert!((m.spectral_norm().unwrap() - 3.0).abs() < 1e-14);
        assert!((m.min_eigenvalue().unwrap() - 1.0).abs() < 1e-14);

        let z = SymmetricMatrix::<f64>::zeros(2);
        assert_eq!(z.spectral_norm().unwrap(), 0.0);
        assert_eq!(z.min_eigenvalue().unwrap(), 0.0);
    }

    #[test]
    fn negative_dominant_eigenvalue() {
        let m = m2(-5.0, 0.0, 1.0);
        assert_eq!(m.spectral_norm().unwrap(), 5.0);
        assert_eq!(m.min_eigenvalue().unwrap(), -5.0);
    }

    #[test]
    fn rejects_asymmetric_and_nonfinite() {
        assert!(SymmetricMatrix::new(2, vec![1.0, 2.0, 3.0, 4.0]).is_err());
        let m = m2(f64::NAN, 0.0, 1.0);
        assert!(m.spectral_norm().is_err());
        assert!(m.min_eigenvalue().is_err());
    }

    #[test]
    fn second_difference_closed_form() {
        // Eigenvalues of tridiag(-1, 2, -1) are 2 - 2 cos(k pi / (d + 1)).
        for d in [1usize, 2, 7, 64, 300] {
            let t = Tridiagonal::<f64>::second_difference(d, 1.0);
            let dense = t.to_dense().eigenvalues().unwrap();
            let banded = t.eigenvalues().unwrap();
            for k in 1..=d {
                let exact =
                    2.0 - 2.0 * (k as f64 * std::f64::consts::PI / (d as f64 + 1.0)).cos();
                assert!((dense[k - 1] - exact).abs() < 1e-12, "d={d} k={k}");
                assert!((banded[k - 1] - exact).abs() < 1e-12, "d={d} k={k}");
            }
        }
    }

    #[test]
    fn tridiagonal_square_matches_dense() {
        let t = Tridiagonal::new(vec![1.0, -2.0, 3.0, 0.5], vec![0.25, 4.0, -1.5]).unwrap();
        let mut acc = SymmetricMatrix::zeros(4);
        t.add_square_to(&mut acc, 2.0);
        let expected = t.to_dense().square().scaled(2.0);
        assert_eq!(acc, expected);
    }

    fn random_symmetric(d: usize, seed: u64) -> SymmetricMatrix<f64> {
        let mut rng = RandomStream::new(seed);
        SymmetricMatrix::from_fn(d, |_, _| rng.normal())
    }

    #[test]
    fn trace_and_frobenius_identities() {
        for (d, seed) in [(3, 1), (17, 2), (80, 3)] {
            let m = random_symmetric(d, seed);
            let ev = m.eigenvalues().unwrap();
            let trace: f64 = (0..d).map(|i| m.get(i, i)).sum();
            let frob: f64 = m.entries().iter().map(|x| x * x).sum();
            let sum: f64 = ev.iter().sum();
            let sum_sq: f64 = ev.iter().map(|x| x * x).sum();
            assert!((sum - trace).abs() < 1e-10 * frob.sqrt() * d as f64);
            assert!((sum_sq - frob).abs() < 1e-10 * frob);
        }
    }

    #[test]
    fn f32_eigenvalues() {
        let m = SymmetricMatrix::<f32>::from_rows(&[vec![2.0, -1.0], vec![-1.0, 2.0]]).unwrap();
        assert!((m.spectral_norm().unwrap() - 3.0).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn spectral_norm_bounds_rayleigh_quotient(seed in any::<u64>(), d in 1usize..12) {
            let m = random_symmetric(d, seed);
            let norm = m.spectral_norm().unwrap();
            let mut rng = RandomStream::new(seed ^ 0xabcdef);
            for _ in 0..10 {
                let v: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
                let vv = crate::scalar::dot(&v, &v);
                let q = crate::scalar::dot(&v, &m.matvec(&v)).abs() / vv;
                prop_assert!(norm >= q * (1.0 - 1e-12));
            }
        }
    }
}
