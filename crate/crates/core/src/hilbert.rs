//! Finite-dimensional complex linear algebra: kets, operators, Hermitian and
//! unitary wrappers, the operator norm, spectral exponentials and Kronecker
//! products.
//!
//! Tensor products use the row-major index convention `(n, k) -> n * dim_b + k`
//! everywhere in the crate.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Default absolute tolerance on unit-scale quantities.
pub const DEFAULT_EPS: f64 = 1e-9;

/// Environment variable that overrides [`DEFAULT_EPS`] for the CLI.
pub const EPS_ENV_VAR: &str = "QWORLDS_EPS";

/// Reads the tolerance override from the environment, falling back to
/// [`DEFAULT_EPS`] when unset.
pub fn eps_from_env() -> Result<f64> {
    match std::env::var(EPS_ENV_VAR) {
        Err(_) => Ok(DEFAULT_EPS),
        Ok(raw) => {
            let eps: f64 = raw
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParameter { name: EPS_ENV_VAR, reason: format!("not a number: {raw:?}") })?;
            if !(eps.is_finite() && eps > 0.0) {
                return Err(Error::InvalidParameter {
                    name: EPS_ENV_VAR,
                    reason: format!("must be positive and finite, got {eps}"),
                });
            }
            Ok(eps)
        }
    }
}

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// A vector of probability amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket(DVector<C64>);

impl Ket {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::Empty("ket"));
        }
        if amplitudes.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("ket"));
        }
        Ok(Ket(DVector::from_vec(amplitudes)))
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&x| c(x, 0.0)).collect())
    }

    /// The `n`-th standard basis vector of `C^dim`.
    pub fn basis_vector(dim: usize, n: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::IndexOutOfRange { index: n, dim });
        }
        let mut v = DVector::zeros(dim);
        v[n] = c(1.0, 0.0);
        Ok(Ket(v))
    }

    pub(crate) fn from_vector(v: DVector<C64>) -> Self {
        Ket(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        self.0.as_slice()
    }

    pub fn as_vector(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn scale(&self, alpha: C64) -> Ket {
        Ket(&self.0 * alpha)
    }

    pub fn normalized(&self) -> Result<Ket> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::NotNormalized { norm: 0.0 });
        }
        Ok(Ket(&self.0 / c(n, 0.0)))
    }

    /// Euclidean distance `‖self − other‖`.
    pub fn distance(&self, other: &Ket) -> Result<f64> {
        check_dims(self.dim(), other.dim())?;
        Ok((&self.0 - &other.0).norm())
    }

    /// Outer product `|self⟩⟨other|`.
    pub fn outer(&self, other: &Ket) -> Operator {
        Operator(&self.0 * other.0.adjoint())
    }

    pub fn is_normalized(&self, eps: f64) -> bool {
        (self.norm() - 1.0).abs() <= eps
    }
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// `⟨a|b⟩`: conjugate-linear in `a`, linear in `b`.
pub fn inner(a: &Ket, b: &Ket) -> Result<C64> {
    check_dims(a.dim(), b.dim())?;
    Ok(a.0.dotc(&b.0))
}

/// A square complex matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator(DMatrix<C64>);

impl Operator {
    /// Builds an operator from row-major entries.
    pub fn from_rows(dim: usize, entries: &[C64]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Empty("operator"));
        }
        check_dims(dim * dim, entries.len())?;
        Self::from_matrix(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn from_real_rows(dim: usize, entries: &[f64]) -> Result<Self> {
        let z: Vec<C64> = entries.iter().map(|&x| c(x, 0.0)).collect();
        Self::from_rows(dim, &z)
    }

    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
        }
        if m.nrows() == 0 {
            return Err(Error::Empty("operator"));
        }
        if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("operator"));
        }
        Ok(Operator(m))
    }

    pub fn identity(dim: usize) -> Self {
        Operator(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Operator(DMatrix::zeros(dim, dim))
    }

    pub fn diagonal(values: &[C64]) -> Self {
        Operator(DMatrix::from_diagonal(&DVector::from_column_slice(values)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn as_matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn adjoint(&self) -> Operator {
        Operator(self.0.adjoint())
    }

    pub fn mul(&self, other: &Operator) -> Result<Operator> {
        check_dims(self.dim(), other.dim())?;
        Ok(Operator(&self.0 * &other.0))
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        check_dims(self.dim(), other.dim())?;
        Ok(Operator(&self.0 + &other.0))
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator> {
        check_dims(self.dim(), other.dim())?;
        Ok(Operator(&self.0 - &other.0))
    }

    pub fn scale(&self, alpha: C64) -> Operator {
        Operator(&self.0 * alpha)
    }

    pub fn apply(&self, v: &Ket) -> Result<Ket> {
        check_dims(self.dim(), v.dim())?;
        Ok(Ket(&self.0 * &v.0))
    }

    /// `⟨a|self|b⟩`.
    pub fn sandwich(&self, a: &Ket, b: &Ket) -> Result<C64> {
        inner(a, &self.apply(b)?)
    }

    /// `self·other − other·self`.
    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Operator) -> Result<f64> {
        check_dims(self.dim(), other.dim())?;
        Ok((&self.0 - &other.0).iter().map(|z| z.norm()).fold(0.0, f64::max))
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self − self†`.
    pub fn hermiticity_deviation(&self) -> f64 {
        (&self.0 - self.0.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self†·self − I`.
    pub fn unitarity_deviation(&self) -> f64 {
        let n = self.dim();
        (self.0.adjoint() * &self.0 - DMatrix::<C64>::identity(n, n)).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// An operator equal to its conjugate transpose within tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator(Operator);

impl HermitianOperator {
    pub fn new(op: Operator, eps: f64) -> Result<Self> {
        let deviation = op.hermiticity_deviation();
        if deviation > eps {
            return Err(Error::NotHermitian { deviation });
        }
        // Symmetrize so downstream eigensolvers see an exactly Hermitian matrix.
        let m = op.as_matrix();
        let sym = (m + m.adjoint()) * c(0.5, 0.0);
        Ok(HermitianOperator(Operator(sym)))
    }

    pub fn from_real_rows(dim: usize, entries: &[f64]) -> Result<Self> {
        Self::new(Operator::from_real_rows(dim, entries)?, DEFAULT_EPS)
    }

    pub fn operator(&self) -> &Operator {
        &self.0
    }

    pub fn into_operator(self) -> Operator {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    /// Eigenvalues (ascending) and matching orthonormal eigenvectors as
    /// matrix columns.
    pub fn eigh(&self) -> Result<(Vec<f64>, DMatrix<C64>)> {
        eigh_matrix(self.0.as_matrix())
    }
}

/// An operator whose adjoint is its inverse within tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryOperator(Operator);

impl UnitaryOperator {
    pub fn new(op: Operator, eps: f64) -> Result<Self> {
        let deviation = op.unitarity_deviation();
        if deviation > eps {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(UnitaryOperator(op))
    }

    pub fn operator(&self) -> &Operator {
        &self.0
    }

    pub fn into_operator(self) -> Operator {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn apply(&self, v: &Ket) -> Result<Ket> {
        self.0.apply(v)
    }
}

/// Hermitian eigendecomposition with eigenvalues sorted ascending.
pub(crate) fn eigh_matrix(m: &DMatrix<C64>) -> Result<(Vec<f64>, DMatrix<C64>)> {
    let n = m.nrows();
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0).ok_or(Error::Eigensolver)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    Ok((values, vectors))
}

/// Largest singular value, computed as the square root of the top eigenvalue
/// of `M†M`.
pub fn operator_norm(m: &Operator) -> Result<f64> {
    let gram = m.as_matrix().adjoint() * m.as_matrix();
    let (values, _) = eigh_matrix(&gram)?;
    let top = values.last().copied().unwrap_or(0.0);
    Ok(top.max(0.0).sqrt())
}

/// `exp(i·t·A)` via the spectral decomposition of `A`.
pub fn mat_exp_hermitian(a: &HermitianOperator, t: f64) -> Result<UnitaryOperator> {
    if !t.is_finite() {
        return Err(Error::InvalidParameter { name: "t", reason: "must be finite".into() });
    }
    let (values, vectors) = a.eigh()?;
    let phases: Vec<C64> = values.iter().map(|&l| C64::from_polar(1.0, t * l)).collect();
    let d = DMatrix::from_diagonal(&DVector::from_vec(phases));
    let u = &vectors * d * vectors.adjoint();
    // Unitary by construction; the eigensolver's orthonormality error is
    // far below the default tolerance.
    Ok(UnitaryOperator(Operator(u)))
}

/// Kronecker product `M ⊗ N`.
pub fn tensor_op(m: &Operator, n: &Operator) -> Operator {
    Operator(m.0.kronecker(&n.0))
}

/// Kronecker product `a ⊗ b`.
pub fn tensor_ket(a: &Ket, b: &Ket) -> Ket {
    Ket(a.0.kronecker(&b.0))
}

pub fn sigma_x() -> HermitianOperator {
    HermitianOperator(Operator(DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])))
}

pub fn sigma_y() -> HermitianOperator {
    HermitianOperator(Operator(DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])))
}

pub fn sigma_z() -> HermitianOperator {
    HermitianOperator(Operator(DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])))
}

pub(crate) fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn gaussian_matrix(dim: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    DMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(re, im)
    })
}

/// A seeded random Hermitian matrix `(G + G†)/2` with complex Gaussian `G`.
pub fn random_hermitian(dim: usize, seed: u64) -> Result<HermitianOperator> {
    if dim == 0 {
        return Err(Error::Empty("operator"));
    }
    let g = gaussian_matrix(dim, &mut seeded_rng(seed));
    let h = (&g + g.adjoint()) * c(0.5, 0.0);
    Ok(HermitianOperator(Operator(h)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn e(dim: usize, n: usize) -> Ket {
        Ket::basis_vector(dim, n).unwrap()
    }

    #[test]
    fn inner_examples() {
        assert_eq!(inner(&e(2, 0), &e(2, 0)).unwrap(), c(1.0, 0.0));
        assert_eq!(inner(&e(2, 0), &e(2, 1)).unwrap(), c(0.0, 0.0));
        let plus = Ket::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        let v = inner(&e(2, 0), &plus).unwrap();
        assert!((v - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn inner_is_conjugate_linear_in_first_argument() {
        let a = Ket::new(vec![c(0.0, 1.0), c(0.0, 0.0)]).unwrap();
        let b = e(2, 0);
        assert_eq!(inner(&a, &b).unwrap(), c(0.0, -1.0));
        assert_eq!(inner(&b, &a).unwrap(), c(0.0, 1.0));
    }

    #[test]
    fn inner_dimension_mismatch() {
        assert!(matches!(inner(&e(2, 0), &e(3, 0)), Err(Error::DimensionMismatch { expected: 2, found: 3 })));
    }

    #[test]
    fn operator_norm_examples() {
        assert!((operator_norm(&Operator::identity(3)).unwrap() - 1.0).abs() < 1e-12);
        assert!((operator_norm(sigma_x().operator()).unwrap() - 1.0).abs() < 1e-12);
        let m = Operator::from_real_rows(2, &[0.0, 2.0, 0.0, 0.0]).unwrap();
        assert!((operator_norm(&m).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn non_finite_operator_rejected() {
        assert_eq!(Operator::from_real_rows(2, &[0.0, f64::NAN, 0.0, 0.0]), Err(Error::NonFinite("operator")));
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = Operator::from_real_rows(2, &[0.0, 2.0, 0.0, 0.0]).unwrap();
        assert!(matches!(HermitianOperator::new(m, DEFAULT_EPS), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn exp_examples() {
        let zero = HermitianOperator::new(Operator::zeros(3), DEFAULT_EPS).unwrap();
        let u = mat_exp_hermitian(&zero, 1.7).unwrap();
        assert!(u.operator().max_abs_diff(&Operator::identity(3)).unwrap() < 1e-14);

        let z = sigma_z();
        let u = mat_exp_hermitian(&z, PI).unwrap();
        let minus_i = Operator::identity(2).scale(c(-1.0, 0.0));
        assert!(u.operator().max_abs_diff(&minus_i).unwrap() < 1e-12);

        let u = mat_exp_hermitian(&random_hermitian(4, 3).unwrap(), 0.0).unwrap();
        assert!(u.operator().max_abs_diff(&Operator::identity(4)).unwrap() < 1e-12);
    }

    #[test]
    fn exp_sigma_x_closed_form() {
        // exp(iθσx) = cos θ·I + i sin θ·σx
        let theta = 0.37;
        let u = mat_exp_hermitian(&sigma_x(), theta).unwrap();
        let expected = Operator::identity(2)
            .scale(c(theta.cos(), 0.0))
            .add(&sigma_x().operator().scale(c(0.0, theta.sin())))
            .unwrap();
        assert!(u.operator().max_abs_diff(&expected).unwrap() < 1e-12);
    }

    #[test]
    fn tensor_examples() {
        let i4 = tensor_op(&Operator::identity(2), &Operator::identity(2));
        assert_eq!(i4, Operator::identity(4));

        let k = tensor_ket(&e(2, 0), &e(2, 1));
        assert_eq!(k, e(4, 1));

        let zz = tensor_op(sigma_z().operator(), sigma_z().operator());
        let expected = Operator::diagonal(&[c(1.0, 0.0), c(-1.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(zz, expected);
    }

    #[test]
    fn random_hermitian_is_deterministic() {
        assert_eq!(random_hermitian(3, 11).unwrap(), random_hermitian(3, 11).unwrap());
        assert_ne!(random_hermitian(3, 11).unwrap(), random_hermitian(3, 12).unwrap());
    }

    #[test]
    fn eps_env_parsing() {
        // Only the parsing path; the variable is not set in the test process.
        if std::env::var(EPS_ENV_VAR).is_err() {
            assert_eq!(eps_from_env().unwrap(), DEFAULT_EPS);
        }
    }
}
