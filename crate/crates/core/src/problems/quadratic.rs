use super::Problem;
use crate::error::{invalid, Result};
use crate::numkit::{labels, RandomStream, SymmetricMatrix, Tridiagonal};
use crate::scalar::{dot, Scalar};

/// A client's Hessian. The generators only produce tridiagonal matrices,
/// which keeps `n = 3072, d = 1024` instances small.
#[derive(Clone, Debug, PartialEq)]
pub enum ClientMatrix<T> {
    Dense(SymmetricMatrix<T>),
    Tridiagonal(Tridiagonal<T>),
}

impl<T: Scalar> ClientMatrix<T> {
    pub fn dim(&self) -> usize {
        match self {
            ClientMatrix::Dense(m) => m.dim(),
            ClientMatrix::Tridiagonal(m) => m.dim(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        match self {
            ClientMatrix::Dense(m) => m.get(i, j),
            ClientMatrix::Tridiagonal(m) => m.get(i, j),
        }
    }

    pub fn matvec_into(&self, x: &[T], out: &mut [T]) {
        match self {
            ClientMatrix::Dense(m) => {
                let d = m.dim();
                for (i, o) in out.iter_mut().enumerate() {
                    *o = dot(&m.entries()[i * d..(i + 1) * d], x);
                }
            }
            ClientMatrix::Tridiagonal(m) => m.matvec_into(x, out),
        }
    }

    pub fn to_dense(&self) -> SymmetricMatrix<T> {
        match self {
            ClientMatrix::Dense(m) => m.clone(),
            ClientMatrix::Tridiagonal(m) => m.to_dense(),
        }
    }

    /// `Σ wᵢ Mᵢ`, tridiagonal when every term is.
    pub fn linear_combination(terms: &[(&ClientMatrix<T>, T)]) -> Result<ClientMatrix<T>> {
        let d = terms.first().ok_or_else(|| invalid("empty combination"))?.0.dim();
        if terms.iter().any(|(m, _)| m.dim() != d) {
            return Err(invalid("matrices of different dimensions"));
        }
        if terms.iter().all(|(m, _)| matches!(m, ClientMatrix::Tridiagonal(_))) {
            let mut diag = vec![T::zero(); d];
            let mut off = vec![T::zero(); d - 1];
            for (m, w) in terms {
                if let ClientMatrix::Tridiagonal(t) = m {
                    diag.iter_mut().zip(&t.diag).for_each(|(a, &b)| *a = *a + *w * b);
                    off.iter_mut().zip(&t.off).for_each(|(a, &b)| *a = *a + *w * b);
                }
            }
            return Ok(ClientMatrix::Tridiagonal(Tridiagonal::new(diag, off)?));
        }
        let mut acc = SymmetricMatrix::zeros(d);
        for (m, w) in terms {
            acc = acc.add_scaled(&m.to_dense(), *w);
        }
        Ok(ClientMatrix::Dense(acc))
    }

    /// Accumulates `weight · M²` into a dense matrix.
    pub fn add_square_to(&self, acc: &mut SymmetricMatrix<T>, weight: T) {
        match self {
            ClientMatrix::Tridiagonal(t) => t.add_square_to(acc, weight),
            ClientMatrix::Dense(m) => *acc = acc.add_scaled(&m.square(), weight),
        }
    }

    pub fn eigenvalues(&self) -> Result<Vec<T>> {
        match self {
            ClientMatrix::Dense(m) => m.eigenvalues(),
            ClientMatrix::Tridiagonal(m) => m.eigenvalues(),
        }
    }

    pub fn spectral_norm(&self) -> Result<T> {
        match self {
            ClientMatrix::Dense(m) => m.spectral_norm(),
            ClientMatrix::Tridiagonal(m) => m.spectral_norm(),
        }
    }

    pub fn min_eigenvalue(&self) -> Result<T> {
        match self {
            ClientMatrix::Dense(m) => m.min_eigenvalue(),
            ClientMatrix::Tridiagonal(m) => m.min_eigenvalue(),
        }
    }

    pub fn solve(&self, rhs: &[T]) -> Result<Vec<T>> {
        match self {
            ClientMatrix::Dense(m) => m.solve(rhs),
            ClientMatrix::Tridiagonal(m) => m.solve(rhs),
        }
    }

    fn shift_diagonal(&mut self, shift: T) {
        match self {
            ClientMatrix::Dense(m) => *m = m.add_scaled(&SymmetricMatrix::identity(m.dim()), shift),
            ClientMatrix::Tridiagonal(m) => m.shift_diagonal(shift),
        }
    }
}

/// `fᵢ(x) = ½ xᵀAᵢx − bᵢᵀx`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticProblem<T> {
    matrices: Vec<ClientMatrix<T>>,
    b: Vec<Vec<T>>,
    x0: Vec<T>,
}

impl<T: Scalar> QuadraticProblem<T> {
    pub fn new(matrices: Vec<ClientMatrix<T>>, b: Vec<Vec<T>>, x0: Vec<T>) -> Result<Self> {
        let d = x0.len();
        if matrices.is_empty() || d == 0 {
            return Err(invalid("quadratic problem needs n >= 1 clients and d >= 1"));
        }
        if matrices.len() != b.len() {
            return Err(invalid("one linear term per client"));
        }
        if matrices.iter().any(|m| m.dim() != d) || b.iter().any(|v| v.len() != d) {
            return Err(invalid("all matrices and vectors must have dimension d"));
        }
        Ok(Self { matrices, b, x0 })
    }

    pub fn matrices(&self) -> &[ClientMatrix<T>] {
        &self.matrices
    }

    pub fn linear_terms(&self) -> &[Vec<T>] {
        &self.b
    }

    /// `Ā = (1/n) Σ Aᵢ`.
    pub fn mean_matrix(&self) -> Result<ClientMatrix<T>> {
        let w = T::of(1.0 / self.matrices.len() as f64);
        let terms: Vec<_> = self.matrices.iter().map(|m| (m, w)).collect();
        ClientMatrix::linear_combination(&terms)
    }

    pub fn mean_linear_term(&self) -> Vec<T> {
        crate::scalar::mean_vector(&self.b)
    }

    /// `x* = Ā⁻¹ b̄`; requires `Ā ≻ 0`.
    pub fn minimizer(&self) -> Result<Vec<T>> {
        self.mean_matrix()?.solve(&self.mean_linear_term())
    }

    /// `f* = −½ b̄ᵀx*`.
    pub fn optimal_value(&self) -> Result<T> {
        let x = self.minimizer()?;
        Ok(-T::of(0.5) * dot(&self.mean_linear_term(), &x))
    }

    /// Same problem with each `bᵢ` replaced.
    pub fn with_linear_terms(&self, b: Vec<Vec<T>>) -> Result<Self> {
        Self::new(self.matrices.clone(), b, self.x0.clone())
    }
}

impl<T: Scalar> Problem<T> for QuadraticProblem<T> {
    fn n(&self) -> usize {
        self.matrices.len()
    }

    fn d(&self) -> usize {
        self.x0.len()
    }

    fn x0(&self) -> &[T] {
        &self.x0
    }

    fn client_value_unchecked(&self, i: usize, x: &[T]) -> T {
        let mut ax = vec![T::zero(); x.len()];
        self.matrices[i].matvec_into(x, &mut ax);
        T::of(0.5) * dot(x, &ax) - dot(&self.b[i], x)
    }

    fn client_gradient_into(&self, i: usize, x: &[T], out: &mut [T]) {
        self.matrices[i].matvec_into(x, out);
        out.iter_mut().zip(&self.b[i]).for_each(|(o, &b)| *o = *o - b);
    }
}

fn start_point<T: Scalar>(d: usize) -> Vec<T> {
    let mut x0 = vec![T::zero(); d];
    x0[0] = T::of((d as f64).sqrt());
    x0
}

fn e1<T: Scalar>(d: usize, first: f64) -> Vec<T> {
    let mut v = vec![T::zero(); d];
    v[0] = T::of(first);
    v
}

/// Quadratic task with Hessian variance controlled by the noise scale `s`.
///
/// Client `i` draws `ξˢ, ξᵇ ~ N(0, 1)` from `[PROBLEM, i]`; `νˢ = 1 + sξˢ`,
/// `νᵇ = sξᵇ`, `Aᵢ = (νˢ/4)·tridiag(−1, 2, −1)`, `bᵢ = (νˢ/4)(−1 + νᵇ) e₁`.
/// All `Aᵢ` are then shifted so that `λ_min(Ā) = λ`.
pub fn generate_quadratic_lpm<T: Scalar>(
    n: usize,
    d: usize,
    lambda: f64,
    s: f64,
    rng: &RandomStream,
) -> Result<QuadraticProblem<T>> {
    if n == 0 || d == 0 || !(lambda > 0.0) || !(s >= 0.0) {
        return Err(invalid("need n, d >= 1, lambda > 0, s >= 0"));
    }
    let base = rng.child(labels::PROBLEM);
    let mut matrices = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for i in 0..n {
        let mut r = base.child(i as u64);
        let nu_s = 1.0 + s * r.normal();
        let nu_b = s * r.normal();
        matrices.push(ClientMatrix::Tridiagonal(Tridiagonal::second_difference(d, T::of(nu_s / 4.0))));
        b.push(e1(d, nu_s / 4.0 * (-1.0 + nu_b)));
    }
    let mut problem = QuadraticProblem::new(matrices, b, start_point(d))?;
    let shift = T::of(lambda) - problem.mean_matrix()?.min_eigenvalue()?;
    problem.matrices.iter_mut().for_each(|m| m.shift_diagonal(shift));
    Ok(problem)
}

/// Quadratic task with per-client smoothness spread by `s`.
///
/// `νˢ = 1 + sξˢ` with `ξˢ ~ Exp(1)`, `νᵇ = sξᵇ` with `ξᵇ ~ N(0, 1)`,
/// `Aᵢ = (νˢ/4)·tridiag(−1, 2, −1)`, `bᵢ = (−1 + νᵇ) e₁`. No shift.
pub fn generate_quadratic_li<T: Scalar>(n: usize, d: usize, s: f64, rng: &RandomStream) -> Result<QuadraticProblem<T>> {
    if n == 0 || d == 0 || !(s >= 0.0) {
        return Err(invalid("need n, d >= 1, s >= 0"));
    }
    let base = rng.child(labels::PROBLEM);
    let mut matrices = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for i in 0..n {
        let mut r = base.child(i as u64);
        let nu_s = 1.0 + s * r.exponential();
        let nu_b = s * r.normal();
        matrices.push(ClientMatrix::Tridiagonal(Tridiagonal::second_difference(d, T::of(nu_s / 4.0))));
        b.push(e1(d, -1.0 + nu_b));
    }
    QuadraticProblem::new(matrices, b, start_point(d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_pins_the_bottom_of_the_spectrum() {
        for (n, d) in [(1, 1), (3, 5), (8, 64)] {
            let p: QuadraticProblem<f64> = generate_quadratic_lpm(n, d, 0.001, 0.0, &RandomStream::new(1)).unwrap();
            let lmin = p.mean_matrix().unwrap().min_eigenvalue().unwrap();
            assert!((lmin - 0.001).abs() < 1e-8, "n={n} d={d} lmin={lmin}");
            assert!(p.matrices().iter().all(|m| m == &p.matrices()[0]));
        }
        let noisy: QuadraticProblem<f64> = generate_quadratic_lpm(8, 16, 0.01, 1.0, &RandomStream::new(2)).unwrap();
        let lmin = noisy.mean_matrix().unwrap().min_eigenvalue().unwrap();
        assert!((lmin - 0.01).abs() < 1e-8);
    }

    #[test]
    fn li_generator_shapes() {
        let p: QuadraticProblem<f64> = generate_quadratic_li(4, 9, 10.0, &RandomStream::new(3)).unwrap();
        assert_eq!(p.x0()[0], 3.0);
        assert!(p.x0()[1..].iter().all(|&x| x == 0.0));
        assert!(p.linear_terms().iter().all(|b| b[1..].iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn gradient_vanishes_at_the_solution() {
        // A = tridiag(-1,2,-1) scaled, b = A·1 so x* = 1.
        let a = ClientMatrix::Tridiagonal(Tridiagonal::second_difference(4, 0.5f64));
        let ones = vec![1.0; 4];
        let mut b = vec![0.0; 4];
        a.matvec_into(&ones, &mut b);
        let p = QuadraticProblem::new(vec![a.clone(), a], vec![b.clone(), b], vec![0.0; 4]).unwrap();
        assert!(p.full_gradient(&ones).unwrap().iter().all(|&g| g.abs() < 1e-15));
        assert!(p.gradient(0, &[1.0]).is_err());
        assert!(p.gradient(5, &ones).is_err());
    }

    #[test]
    fn dense_and_tridiagonal_agree() {
        let t = Tridiagonal::new(vec![2.0f64, 3.0, 1.0], vec![-1.0, 0.5]).unwrap();
        let tri = ClientMatrix::Tridiagonal(t.clone());
        let dense = ClientMatrix::Dense(t.to_dense());
        let x = [0.3, -1.2, 2.0];
        let (mut u, mut v) = ([0.0; 3], [0.0; 3]);
        tri.matvec_into(&x, &mut u);
        dense.matvec_into(&x, &mut v);
        assert_eq!(u, v);
        let combo = ClientMatrix::linear_combination(&[(&tri, 0.5), (&dense, 0.5)]).unwrap();
        assert!(matches!(combo, ClientMatrix::Dense(_)));
        assert_eq!(combo.to_dense(), t.to_dense());
    }

    #[test]
    fn minimizer_zeroes_the_gradient() {
        let p: QuadraticProblem<f64> = generate_quadratic_lpm(3, 32, 0.01, 0.5, &RandomStream::new(4)).unwrap();
        let x = p.minimizer().unwrap();
        let g = p.full_gradient(&x).unwrap();
        assert!(crate::scalar::norm(&g) < 1e-10);
        let fstar = p.optimal_value().unwrap();
        assert!((p.value(&x).unwrap() - fstar).abs() < 1e-10);
        let dense = QuadraticProblem::new(
            p.matrices().iter().map(|m| ClientMatrix::Dense(m.to_dense())).collect(),
            p.linear_terms().to_vec(),
            p.x0().to_vec(),
        )
        .unwrap();
        for (a, b) in dense.minimizer().unwrap().iter().zip(&x) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn generators_are_deterministic() {
        let a: QuadraticProblem<f64> = generate_quadratic_lpm(5, 6, 0.1, 0.5, &RandomStream::new(9)).unwrap();
        let b: QuadraticProblem<f64> = generate_quadratic_lpm(5, 6, 0.1, 0.5, &RandomStream::new(9)).unwrap();
        assert_eq!(a, b);
    }
}
