//! Worlds: ordered orthonormal bases, their identification up to per-vector
//! phases, evolution under a Hermitian generator and product-form worlds of
//! bipartite systems.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    self, c, inner, mat_exp_hermitian, tensor_ket, HermitianOperator, Ket, Operator, C64, DEFAULT_EPS,
};

/// An ordered orthonormal basis of `C^dim`, `dim >= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    basis: Vec<Ket>,
}

/// Largest entrywise deviation of the Gram matrix of `basis` from identity.
pub fn gram_deviation(basis: &[Ket]) -> f64 {
    let mut worst: f64 = 0.0;
    for (j, a) in basis.iter().enumerate() {
        for (k, b) in basis.iter().enumerate() {
            let g = a.as_vector().dotc(b.as_vector());
            let target = if j == k { 1.0 } else { 0.0 };
            worst = worst.max((g - c(target, 0.0)).norm());
        }
    }
    worst
}

/// Checks that `basis` is a complete orthonormal set within `eps`.
pub fn validate_world(basis: Vec<Ket>, eps: f64) -> Result<World> {
    let first = basis.first().ok_or(Error::Empty("basis"))?;
    let dim = first.dim();
    if let Some(bad) = basis.iter().find(|k| k.dim() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, found: bad.dim() });
    }
    if dim < 2 {
        return Err(Error::DimensionTooSmall(dim));
    }
    if basis.len() > dim {
        // More than dim vectors can never be orthonormal.
        return Err(Error::NotOrthonormal { deviation: gram_deviation(&basis) });
    }
    let deviation = gram_deviation(&basis);
    if deviation > eps {
        return Err(Error::NotOrthonormal { deviation });
    }
    if basis.len() < dim {
        return Err(Error::IncompleteBasis { count: basis.len(), dim });
    }
    Ok(World { basis })
}

impl World {
    /// Validates with the default tolerance.
    pub fn new(basis: Vec<Ket>) -> Result<Self> {
        validate_world(basis, DEFAULT_EPS)
    }

    /// The computational basis of `C^dim`.
    pub fn standard(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        let basis = (0..dim).map(|n| Ket::basis_vector(dim, n)).collect::<Result<_>>()?;
        Ok(World { basis })
    }

    /// `{(1,1)/√2, (1,−1)/√2}`.
    pub fn hadamard() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        World { basis: vec![Ket::from_real(&[s, s]).expect("finite"), Ket::from_real(&[s, -s]).expect("finite")] }
    }

    /// Discrete Fourier basis `e_n[j] = exp(2πi·jn/dim)/√dim`; equals the
    /// Hadamard world for `dim = 2`.
    pub fn fourier(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        let scale = 1.0 / (dim as f64).sqrt();
        let basis = (0..dim)
            .map(|n| {
                let amps = (0..dim)
                    .map(|j| {
                        let angle = 2.0 * std::f64::consts::PI * ((j * n) % dim) as f64 / dim as f64;
                        C64::from_polar(scale, angle)
                    })
                    .collect();
                Ket::new(amps)
            })
            .collect::<Result<_>>()?;
        Ok(World { basis })
    }

    /// The world whose vectors are the columns of `u`.
    pub fn from_columns(u: &Operator, eps: f64) -> Result<Self> {
        let m = u.as_matrix();
        let basis = (0..m.ncols()).map(|j| Ket::new(m.column(j).iter().copied().collect())).collect::<Result<_>>()?;
        validate_world(basis, eps)
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Ket] {
        &self.basis
    }

    pub fn vector(&self, n: usize) -> Result<&Ket> {
        self.basis.get(n).ok_or(Error::IndexOutOfRange { index: n, dim: self.dim() })
    }

    /// Matrix with the basis vectors as columns; unitary.
    pub fn matrix(&self) -> DMatrix<C64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |r, col| self.basis[col].amplitudes()[r])
    }

    /// Matrix elements `⟨e_j|M|e_k⟩` of `m` in this world.
    pub fn matrix_elements(&self, m: &Operator) -> Result<DMatrix<C64>> {
        if m.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: m.dim() });
        }
        let v = self.matrix();
        Ok(v.adjoint() * m.as_matrix() * v)
    }

    pub fn gram_deviation(&self) -> f64 {
        gram_deviation(&self.basis)
    }

    /// Applies a unitary to every basis vector.
    pub fn transform(&self, u: &hilbert::UnitaryOperator, eps: f64) -> Result<World> {
        let basis = self.basis.iter().map(|e| u.apply(e)).collect::<Result<_>>()?;
        validate_world(basis, eps)
    }
}

/// Identification of worlds up to a unit-modulus phase on each basis vector,
/// index by index.
pub fn worlds_equal(w: &World, w2: &World, eps: f64) -> Result<bool> {
    Ok(world_distance(w, w2)? <= eps)
}

/// `max_n min_α ‖e_n − α e'_n‖`; zero exactly for phase-identified worlds.
pub fn world_distance(w: &World, w2: &World) -> Result<f64> {
    if w.dim() != w2.dim() {
        return Err(Error::DimensionMismatch { expected: w.dim(), found: w2.dim() });
    }
    let mut worst: f64 = 0.0;
    for (e, e2) in w.basis.iter().zip(&w2.basis) {
        worst = worst.max(phase_aligned_distance(e, e2)?);
    }
    Ok(worst)
}

/// `min_α ‖e − α e'‖` over unit-modulus α, with α the phase of `⟨e'|e⟩`.
fn phase_aligned_distance(e: &Ket, e2: &Ket) -> Result<f64> {
    let overlap = inner(e2, e)?;
    let alpha = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { c(1.0, 0.0) };
    e.distance(&e2.scale(alpha))
}

/// Like [`worlds_equal`] but allows the basis vectors to be reordered.
/// Not used by any world-relative semantics.
pub fn worlds_equal_up_to_permutation(w: &World, w2: &World, eps: f64) -> Result<bool> {
    if w.dim() != w2.dim() {
        return Err(Error::DimensionMismatch { expected: w.dim(), found: w2.dim() });
    }
    let mut used = vec![false; w2.dim()];
    'outer: for e in &w.basis {
        for (k, e2) in w2.basis.iter().enumerate() {
            if !used[k] && phase_aligned_distance(e, e2)? <= eps {
                used[k] = true;
                continue 'outer;
            }
        }
        return Ok(false);
    }
    Ok(true)
}

/// Hermitian generator `A` of the world flow `W_t = exp(itA)·W`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionGenerator {
    a: HermitianOperator,
}

impl EvolutionGenerator {
    pub fn new(a: HermitianOperator) -> Self {
        EvolutionGenerator { a }
    }

    pub fn operator(&self) -> &HermitianOperator {
        &self.a
    }
}

pub fn evolve_world(w: &World, gen: &EvolutionGenerator, t: f64) -> Result<World> {
    if gen.a.dim() != w.dim() {
        return Err(Error::DimensionMismatch { expected: w.dim(), found: gen.a.dim() });
    }
    let u = mat_exp_hermitian(&gen.a, t)?;
    w.transform(&u, DEFAULT_EPS)
}

/// A world of a bipartite system built from one world per factor.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductWorld {
    pub world_a: World,
    pub world_b: World,
    pub combined: World,
}

impl ProductWorld {
    pub fn dims(&self) -> (usize, usize) {
        (self.world_a.dim(), self.world_b.dim())
    }
}

/// Basis `e^A_n ⊗ e^B_k` at combined index `n·dim_B + k`.
pub fn product_world(wa: &World, wb: &World) -> ProductWorld {
    let basis = wa.basis.iter().flat_map(|a| wb.basis.iter().map(move |b| tensor_ket(a, b))).collect();
    ProductWorld { world_a: wa.clone(), world_b: wb.clone(), combined: World { basis } }
}

/// Singular values (descending) of `v` reshaped row-major to `dim_a × dim_b`.
pub fn schmidt_coefficients(v: &Ket, dim_a: usize, dim_b: usize) -> Result<Vec<f64>> {
    if dim_a * dim_b != v.dim() {
        return Err(Error::DimensionMismatch { expected: v.dim(), found: dim_a * dim_b });
    }
    let m = DMatrix::from_row_slice(dim_a, dim_b, v.amplitudes());
    let mut s: Vec<f64> = m.svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// True iff every basis vector has Schmidt rank one (second singular value
/// at most `tol`).
pub fn is_product_world(w: &World, dim_a: usize, dim_b: usize, tol: f64) -> Result<bool> {
    if dim_a == 0 || dim_b == 0 || dim_a * dim_b != w.dim() {
        return Err(Error::DimensionMismatch { expected: w.dim(), found: dim_a * dim_b });
    }
    for e in &w.basis {
        let s = schmidt_coefficients(e, dim_a, dim_b)?;
        if s.get(1).copied().unwrap_or(0.0) > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Default Schmidt-rank tolerance for [`is_product_world`].
pub const PRODUCT_TOL: f64 = 1e-8;

/// Orthonormalizes the columns of a seeded complex Gaussian matrix with two
/// passes of modified Gram–Schmidt.
pub fn random_world(dim: usize, seed: u64) -> Result<World> {
    if dim < 2 {
        return Err(Error::DimensionTooSmall(dim));
    }
    let g = hilbert::gaussian_matrix(dim, &mut hilbert::seeded_rng(seed));
    let mut cols: Vec<nalgebra::DVector<C64>> = (0..dim).map(|j| g.column(j).into_owned()).collect();
    for j in 0..dim {
        for _pass in 0..2 {
            for k in 0..j {
                let proj = cols[k].dotc(&cols[j]);
                let qk = cols[k].clone();
                cols[j] -= qk * proj;
            }
        }
        let n = cols[j].norm();
        cols[j] /= c(n, 0.0);
    }
    let basis = cols.into_iter().map(Ket::from_vector).collect();
    validate_world(basis, DEFAULT_EPS)
}

/// Text document form of a world: `dim` plus one row of `[re, im]` pairs per
/// basis vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldDocument {
    pub dim: usize,
    pub basis: Vec<Vec<[f64; 2]>>,
}

impl From<&World> for WorldDocument {
    fn from(w: &World) -> Self {
        WorldDocument {
            dim: w.dim(),
            basis: w.basis.iter().map(|k| k.amplitudes().iter().map(|z| [z.re, z.im]).collect()).collect(),
        }
    }
}

impl WorldDocument {
    pub fn into_world(self, eps: f64) -> Result<World> {
        let basis: Vec<Ket> = self
            .basis
            .into_iter()
            .map(|row| Ket::new(row.into_iter().map(|[re, im]| c(re, im)).collect()))
            .collect::<Result<_>>()?;
        if let Some(first) = basis.first() {
            if first.dim() != self.dim {
                return Err(Error::DimensionMismatch { expected: self.dim, found: first.dim() });
            }
        }
        validate_world(basis, eps)
    }
}

impl World {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&WorldDocument::from(self)).expect("world serializes")
    }

    pub fn from_json(text: &str, eps: f64) -> Result<World> {
        let doc: WorldDocument = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        doc.into_world(eps)
    }
}
