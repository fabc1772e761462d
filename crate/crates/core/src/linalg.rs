//! Dense complex linear algebra for small Hilbert spaces.
//!
//! Everything here works on `d x d` operators with `d` in the single digits:
//! the generalized Gell-Mann basis of `su(d)`, a Jacobi eigensolver for
//! Hermitian matrices, and the parametrized unitary `exp(-i p . sigma)`.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Complex = Complex64;

const ZERO: Complex = Complex::new(0.0, 0.0);
const ONE: Complex = Complex::new(1.0, 0.0);

/// Inputs whose Hermitian defect exceeds this are rejected by [`hermitian_eig`].
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Off-diagonal Frobenius norm (relative to `max(1, ||H||_F)`) at which Jacobi stops.
pub const EIG_TOL: f64 = 1e-14;

pub const MAX_JACOBI_SWEEPS: usize = 100;

/// Square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            data: vec![ZERO; dim * dim],
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        Ok(m)
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex) -> Result<Self> {
        check_dim(dim)?;
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: Vec<Vec<Complex>>) -> Result<Self> {
        let dim = rows.len();
        check_dim(dim)?;
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(Self { dim, data })
    }

    pub fn diagonal(entries: &[Complex]) -> Result<Self> {
        let mut m = Self::zeros(entries.len())?;
        for (i, &z) in entries.iter().enumerate() {
            m[(i, i)] = z;
        }
        Ok(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex] {
        &self.data
    }

    pub fn dagger(&self) -> Self {
        let n = self.dim;
        let mut data = vec![ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        Self { dim: n, data }
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        same_dim(self.dim, rhs.dim)?;
        let n = self.dim;
        let mut data = vec![ZERO; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        Ok(Self { dim: n, data })
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        same_dim(self.dim, state.dim())?;
        let n = self.dim;
        let amps = (0..n)
            .map(|i| {
                self.data[i * n..(i + 1) * n]
                    .iter()
                    .zip(&state.amps)
                    .map(|(a, s)| a * s)
                    .sum()
            })
            .collect();
        Ok(StateVector { amps })
    }

    pub fn scale(&self, factor: Complex) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        same_dim(self.dim, rhs.dim)?;
        Ok(Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        same_dim(self.dim, rhs.dim)?;
        Ok(Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn trace(&self) -> Complex {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn determinant_2x2(&self) -> Option<Complex> {
        (self.dim == 2).then(|| self[(0, 0)] * self[(1, 1)] - self[(0, 1)] * self[(1, 0)])
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max |U - V|` entrywise.
    pub fn max_abs_diff(&self, rhs: &Self) -> Result<f64> {
        same_dim(self.dim, rhs.dim)?;
        Ok(self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// `max |H - H^dagger|` entrywise.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `max |U^dagger U - I|` entrywise.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut acc = ZERO;
                for k in 0..n {
                    acc += self[(k, i)].conj() * self[(k, j)];
                }
                if i == j {
                    acc -= ONE;
                }
                worst = worst.max(acc.norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    fn off_diagonal_norm(&self) -> f64 {
        let n = self.dim;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    acc += self[(i, j)].norm_sqr();
                }
            }
        }
        acc.sqrt()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex {
        &mut self.data[i * self.dim + j]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Pure state in `C^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex>,
}

impl StateVector {
    pub fn new(amps: Vec<Complex>) -> Result<Self> {
        check_dim(amps.len())?;
        Ok(Self { amps })
    }

    /// Computational basis state `|k>`.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        check_dim(dim)?;
        if k >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: k + 1,
            });
        }
        let mut amps = vec![ZERO; dim];
        amps[k] = ONE;
        Ok(Self { amps })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::NumericFailure(format!(
                "cannot normalize state with norm {n}"
            )));
        }
        for z in &mut self.amps {
            *z /= n;
        }
        Ok(())
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    pub fn scale(&self, factor: Complex) -> Self {
        Self {
            amps: self.amps.iter().map(|z| z * factor).collect(),
        }
    }

    /// `<self|other>`
    pub fn inner(&self, other: &Self) -> Result<Complex> {
        same_dim(self.dim(), other.dim())?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

/// Real parameter vector of length `d^2 - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector(Vec<f64>);

impl ParameterVector {
    pub fn new(components: Vec<f64>) -> Self {
        Self(components)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim * dim - 1])
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    fn check_for_dim(&self, dim: usize) -> Result<()> {
        let expected = dim * dim - 1;
        if self.0.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: self.0.len(),
            });
        }
        Ok(())
    }
}

impl From<Vec<f64>> for ParameterVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// `|<a|b>|^2`
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

/// Generalized Gell-Mann matrices spanning `su(d)`.
///
/// Order: symmetric `|j><k| + |k><j|` for `j < k` (lexicographic), then
/// antisymmetric `-i|j><k| + i|k><j|` in the same order, then the diagonal
/// generators for `l = 1..d-1`. Normalized so that `Tr(s_a s_b) = 2 delta_ab`;
/// for `d = 2` this is `(sigma_x, sigma_y, sigma_z)`.
pub fn gell_mann_generators(dim: usize) -> Result<Vec<ComplexMatrix>> {
    check_dim(dim)?;
    let pairs: Vec<(usize, usize)> = (0..dim)
        .flat_map(|j| ((j + 1)..dim).map(move |k| (j, k)))
        .collect();
    let mut out = Vec::with_capacity(dim * dim - 1);
    for &(j, k) in &pairs {
        let mut m = ComplexMatrix::zeros(dim)?;
        m[(j, k)] = ONE;
        m[(k, j)] = ONE;
        out.push(m);
    }
    for &(j, k) in &pairs {
        let mut m = ComplexMatrix::zeros(dim)?;
        m[(j, k)] = Complex::new(0.0, -1.0);
        m[(k, j)] = Complex::new(0.0, 1.0);
        out.push(m);
    }
    for l in 1..dim {
        let lf = l as f64;
        let norm = (2.0 / (lf * (lf + 1.0))).sqrt();
        let mut m = ComplexMatrix::zeros(dim)?;
        for mm in 0..l {
            m[(mm, mm)] = Complex::new(norm, 0.0);
        }
        m[(l, l)] = Complex::new(-lf * norm, 0.0);
        out.push(m);
    }
    Ok(out)
}

/// Eigen-decomposition `H = V diag(values) V^dagger`, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let v = &self.vectors;
        let n = v.dim();
        ComplexMatrix::from_fn(n, |i, j| {
            (0..n)
                .map(|k| v[(i, k)] * self.values[k] * v[(j, k)].conj())
                .sum()
        })
        .expect("dimension already validated")
    }

    /// `V f(Lambda) V^dagger` for a scalar function applied to each eigenvalue.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> Complex) -> ComplexMatrix {
        let v = &self.vectors;
        let n = v.dim();
        let fl: Vec<Complex> = self.values.iter().map(|&x| f(x)).collect();
        ComplexMatrix::from_fn(n, |i, j| {
            (0..n).map(|k| v[(i, k)] * fl[k] * v[(j, k)].conj()).sum()
        })
        .expect("dimension already validated")
    }
}

/// Cyclic complex Jacobi eigensolver.
///
/// Each rotation first removes the phase of the pivot `h_pq` and then applies
/// the real symmetric Jacobi rotation, so the accumulated transform stays
/// unitary. Stops once the off-diagonal Frobenius norm falls below
/// `EIG_TOL * max(1, ||H||_F)`; fails after `MAX_JACOBI_SWEEPS` sweeps.
pub fn hermitian_eig(h: &ComplexMatrix) -> Result<HermitianEigen> {
    let defect = h.hermitian_defect();
    if !(defect <= HERMITIAN_TOL) {
        return Err(Error::NotHermitian(defect));
    }
    let n = h.dim();
    // work on the exactly-Hermitian part
    let mut a = ComplexMatrix::from_fn(n, |i, j| {
        if i == j {
            Complex::new(h[(i, i)].re, 0.0)
        } else {
            (h[(i, j)] + h[(j, i)].conj()) * 0.5
        }
    })?;
    let mut v = ComplexMatrix::identity(n)?;
    let threshold = EIG_TOL * a.frobenius_norm().max(1.0);

    let mut converged = false;
    for _ in 0..MAX_JACOBI_SWEEPS {
        if a.off_diagonal_norm() <= threshold {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                jacobi_rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged && a.off_diagonal_norm() > threshold {
        return Err(Error::NumericFailure(format!(
            "Jacobi eigensolver did not converge in {MAX_JACOBI_SWEEPS} sweeps"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&k| a[(k, k)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, |i, j| v[(i, order[j])])?;
    Ok(HermitianEigen { values, vectors })
}

fn jacobi_rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let g = apq.norm();
    if g == 0.0 {
        return;
    }
    let phase = apq / g;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let tau = (aqq - app) / (2.0 * g);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // G = diag(1, conj(phase)) * [[c, s], [-s, c]] acting on columns (p, q)
    let g00 = Complex::new(c, 0.0);
    let g01 = Complex::new(s, 0.0);
    let g10 = -phase.conj() * s;
    let g11 = phase.conj() * c;

    let n = a.dim();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * g00 + akq * g10;
        a[(k, q)] = akp * g01 + akq * g11;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = g00.conj() * apk + g10.conj() * aqk;
        a[(q, k)] = g01.conj() * apk + g11.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = Complex::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex::new(a[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * g00 + vkq * g10;
        v[(k, q)] = vkp * g01 + vkq * g11;
    }
}

/// Cached generator basis for one dimension.
#[derive(Debug, Clone)]
pub struct GeneratorBasis {
    dim: usize,
    generators: Vec<ComplexMatrix>,
}

impl GeneratorBasis {
    pub fn new(dim: usize) -> Result<Self> {
        Ok(Self {
            dim,
            generators: gell_mann_generators(dim)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[ComplexMatrix] {
        &self.generators
    }

    /// `H = sum_k p_k sigma_k`
    pub fn hamiltonian(&self, params: &ParameterVector) -> Result<ComplexMatrix> {
        params.check_for_dim(self.dim)?;
        let mut h = ComplexMatrix::zeros(self.dim)?;
        for (&pk, gen) in params.components().iter().zip(&self.generators) {
            for (dst, src) in h.data.iter_mut().zip(&gen.data) {
                *dst += src * pk;
            }
        }
        Ok(h)
    }

    /// `exp(-i H)` through the eigendecomposition of `H`.
    pub fn unitary(&self, params: &ParameterVector) -> Result<ComplexMatrix> {
        let eig = hermitian_eig(&self.hamiltonian(params)?)?;
        Ok(eig.map_spectrum(|lambda| Complex::new(0.0, -lambda).exp()))
    }
}

/// `exp(-i sum_k p_k sigma_k)` for the Gell-Mann basis of dimension `dim`.
pub fn unitary_from_params(params: &ParameterVector, dim: usize) -> Result<ComplexMatrix> {
    GeneratorBasis::new(dim)?.unitary(params)
}

/// `cos(theta) I - i sin(theta) (n . sigma)` with `theta = ||p||`, `n = p / ||p||`.
pub fn su2_closed_form(params: &ParameterVector) -> Result<ComplexMatrix> {
    params.check_for_dim(2)?;
    let p = params.components();
    let theta = params.norm();
    let (sin, cos) = theta.sin_cos();
    // sin(theta) * n = sinc(theta) * p, well defined at theta = 0
    let sinc = if theta == 0.0 { 1.0 } else { sin / theta };
    let (x, y, z) = (sinc * p[0], sinc * p[1], sinc * p[2]);
    ComplexMatrix::from_rows(vec![
        vec![Complex::new(cos, -z), Complex::new(-y, -x)],
        vec![Complex::new(y, -x), Complex::new(cos, z)],
    ])
}

/// `(sigma_x, sigma_y, sigma_z)`
pub fn pauli() -> [ComplexMatrix; 3] {
    let i = Complex::new(0.0, 1.0);
    [
        ComplexMatrix::from_rows(vec![vec![ZERO, ONE], vec![ONE, ZERO]]).unwrap(),
        ComplexMatrix::from_rows(vec![vec![ZERO, -i], vec![i, ZERO]]).unwrap(),
        ComplexMatrix::from_rows(vec![vec![ONE, ZERO], vec![ZERO, -ONE]]).unwrap(),
    ]
}

pub fn hadamard() -> ComplexMatrix {
    let h = Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    ComplexMatrix::from_rows(vec![vec![h, h], vec![h, -h]]).unwrap()
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        Err(Error::InvalidDimension(dim))
    } else {
        Ok(())
    }
}

fn same_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        Err(Error::DimensionMismatch { expected, found })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn random_params(rng: &mut impl Rng, dim: usize) -> ParameterVector {
        (0..dim * dim - 1)
            .map(|_| rng.random_range(-PI..PI))
            .collect::<Vec<_>>()
            .into()
    }

    #[test]
    fn su2_generators_are_paulis() {
        let g = gell_mann_generators(2).unwrap();
        assert_eq!(g.len(), 3);
        for (a, b) in g.iter().zip(pauli().iter()) {
            assert_eq!(a, b);
        }
        for s in &g {
            assert_eq!(s.trace(), ZERO);
            assert_eq!(s.matmul(s).unwrap().trace(), c(2.0, 0.0));
        }
    }

    #[test]
    fn su3_generators_trace_orthonormal() {
        let g = gell_mann_generators(3).unwrap();
        assert_eq!(g.len(), 8);
        for (a, ga) in g.iter().enumerate() {
            assert!(ga.hermitian_defect() == 0.0);
            for (b, gb) in g.iter().enumerate() {
                let tr = ga.matmul(gb).unwrap().trace();
                let want = if a == b { 2.0 } else { 0.0 };
                assert!((tr - c(want, 0.0)).norm() < 1e-13, "({a},{b}) -> {tr}");
            }
        }
    }

    #[test]
    fn generators_reject_small_dimension() {
        assert_eq!(
            gell_mann_generators(1).unwrap_err(),
            Error::InvalidDimension(1)
        );
        assert!(gell_mann_generators(0).is_err());
    }

    #[test]
    fn zero_params_give_identity() {
        for d in 2..=4 {
            let u = unitary_from_params(&ParameterVector::zeros(d), d).unwrap();
            assert!(
                u.max_abs_diff(&ComplexMatrix::identity(d).unwrap())
                    .unwrap()
                    < 1e-15
            );
        }
    }

    #[test]
    fn hadamard_parameters_give_minus_i_hadamard() {
        let p = ParameterVector::new(vec![
            FRAC_PI_2 * FRAC_1_SQRT_2,
            0.0,
            FRAC_PI_2 * FRAC_1_SQRT_2,
        ]);
        let want = hadamard().scale(c(0.0, -1.0));
        let u = unitary_from_params(&p, 2).unwrap();
        assert!(u.max_abs_diff(&want).unwrap() < 1e-12);
        let v = su2_closed_form(&p).unwrap();
        assert!(v.max_abs_diff(&want).unwrap() < 1e-12);
    }

    #[test]
    fn su2_closed_form_special_angles() {
        let minus_i = ComplexMatrix::identity(2).unwrap().scale(c(-1.0, 0.0));
        let u = su2_closed_form(&vec![PI, 0.0, 0.0].into()).unwrap();
        assert!(u.max_abs_diff(&minus_i).unwrap() < 1e-15);
        let id = su2_closed_form(&ParameterVector::zeros(2)).unwrap();
        assert_eq!(id, ComplexMatrix::identity(2).unwrap());
        assert!(su2_closed_form(&vec![1.0, 2.0].into()).is_err());
    }

    #[test]
    fn random_unitaries_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in 2..=4 {
            for _ in 0..200 {
                let u = unitary_from_params(&random_params(&mut rng, d), d).unwrap();
                assert!(
                    u.unitarity_defect() <= 1e-12,
                    "d={d}: {}",
                    u.unitarity_defect()
                );
            }
        }
    }

    #[test]
    fn closed_form_matches_eigen_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let basis = GeneratorBasis::new(2).unwrap();
        for _ in 0..1000 {
            let p = random_params(&mut rng, 2);
            let a = basis.unitary(&p).unwrap();
            let b = su2_closed_form(&p).unwrap();
            assert!(a.max_abs_diff(&b).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn eig_of_diagonal_and_pauli() {
        let h = ComplexMatrix::diagonal(&[c(1.0, 0.0), c(2.0, 0.0)]).unwrap();
        let e = hermitian_eig(&h).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0]);
        assert_eq!(e.vectors, ComplexMatrix::identity(2).unwrap());

        let e = hermitian_eig(&pauli()[0]).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-15);
        assert!((e.values[1] - 1.0).abs() < 1e-15);

        // descending diagonal gets sorted
        let h = ComplexMatrix::diagonal(&[c(3.0, 0.0), c(-1.0, 0.0), c(0.5, 0.0)]).unwrap();
        assert_eq!(hermitian_eig(&h).unwrap().values, vec![-1.0, 0.5, 3.0]);
    }

    #[test]
    fn su2_spectrum_is_plus_minus_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let basis = GeneratorBasis::new(2).unwrap();
        for _ in 0..500 {
            let p = random_params(&mut rng, 2);
            let e = hermitian_eig(&basis.hamiltonian(&p).unwrap()).unwrap();
            assert!((e.values[0] + p.norm()).abs() < 1e-12);
            assert!((e.values[1] - p.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn eig_reconstructs_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in 2..=6 {
            for _ in 0..100 {
                let mut h = ComplexMatrix::zeros(d).unwrap();
                for i in 0..d {
                    h[(i, i)] = c(rng.random_range(-5.0..5.0), 0.0);
                    for j in (i + 1)..d {
                        let z = c(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
                        h[(i, j)] = z;
                        h[(j, i)] = z.conj();
                    }
                }
                let e = hermitian_eig(&h).unwrap();
                assert!(e.reconstruct().max_abs_diff(&h).unwrap() <= 1e-10);
                assert!(e.vectors.unitarity_defect() <= 1e-10);
                assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }

    #[test]
    fn eig_handles_degenerate_spectrum() {
        let h = ComplexMatrix::identity(4).unwrap().scale(c(2.5, 0.0));
        let e = hermitian_eig(&h).unwrap();
        assert!(e.values.iter().all(|&x| x == 2.5));
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = ComplexMatrix::from_rows(vec![vec![ONE, ONE], vec![ZERO, ONE]]).unwrap();
        assert!(matches!(hermitian_eig(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn fidelity_basics() {
        let zero = StateVector::basis(2, 0).unwrap();
        let one = StateVector::basis(2, 1).unwrap();
        let plus = StateVector::new(vec![c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)]).unwrap();
        assert_eq!(fidelity(&zero, &zero).unwrap(), 1.0);
        assert_eq!(fidelity(&zero, &one).unwrap(), 0.0);
        assert!((fidelity(&zero, &plus).unwrap() - 0.5).abs() < 1e-15);
        assert!(fidelity(&zero, &StateVector::basis(3, 0).unwrap()).is_err());
    }

    #[test]
    fn fidelity_ignores_global_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let a = StateVector::new(vec![
                c(rng.random(), rng.random()),
                c(rng.random(), rng.random()),
            ])
            .unwrap()
            .normalized()
            .unwrap();
            let b = StateVector::new(vec![
                c(rng.random(), rng.random()),
                c(rng.random(), rng.random()),
            ])
            .unwrap()
            .normalized()
            .unwrap();
            let phase = Complex::from_polar(1.0, rng.random_range(-PI..PI));
            let f0 = fidelity(&a, &b).unwrap();
            let f1 = fidelity(&a.scale(phase), &b).unwrap();
            assert!((f0 - f1).abs() < 1e-15);
        }
    }

    #[test]
    fn apply_and_matmul() {
        let zero = StateVector::basis(2, 0).unwrap();
        let one = StateVector::basis(2, 1).unwrap();
        let x = &pauli()[0];
        assert_eq!(x.apply(&zero).unwrap(), one);
        assert_eq!(
            ComplexMatrix::identity(2).unwrap().apply(&one).unwrap(),
            one
        );

        let u =
            unitary_from_params(&vec![0.3, -1.2, 2.0, 0.1, 0.0, -0.4, 1.1, 0.9].into(), 3).unwrap();
        let prod = u.matmul(&u.dagger()).unwrap();
        assert!(
            prod.max_abs_diff(&ComplexMatrix::identity(3).unwrap())
                .unwrap()
                < 1e-12
        );
        let s = StateVector::new(vec![c(0.6, 0.0), c(0.0, 0.8), ZERO]).unwrap();
        assert!((u.apply(&s).unwrap().norm() - 1.0).abs() < 1e-12);
        assert!(u.apply(&zero).is_err());
        assert!(u.matmul(x).is_err());
    }

    #[test]
    fn normalize_sets_unit_norm() {
        let mut s = StateVector::new(vec![c(3.0, 1.0), c(-2.0, 0.5), c(0.1, 7.0)]).unwrap();
        s.normalize().unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-12);
        let mut z = StateVector::new(vec![ZERO, ZERO]).unwrap();
        assert!(z.normalize().is_err());
    }
}
