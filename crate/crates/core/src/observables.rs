//! Observables relative to a world: self-adjoint operators diagonal in the
//! world's basis, stored as the world plus the eigenvalue list.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{c, HermitianOperator, Operator, C64, DEFAULT_EPS};
use crate::worlds::{worlds_equal, ProductWorld, World};

/// Default off-diagonal tolerance for [`is_diagonal_in`].
pub const DIAGONAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalObservable {
    world: Arc<World>,
    eigenvalues: Vec<f64>,
}

impl DiagonalObservable {
    pub fn new(world: Arc<World>, eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.len() != world.dim() {
            return Err(Error::DimensionMismatch { expected: world.dim(), found: eigenvalues.len() });
        }
        if eigenvalues.iter().any(|l| !l.is_finite()) {
            return Err(Error::NonFinite("eigenvalues"));
        }
        Ok(DiagonalObservable { world, eigenvalues })
    }

    pub fn world(&self) -> &Arc<World> {
        &self.world
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// `Σ_n λ_n |e_n⟩⟨e_n|`.
pub fn materialize(obs: &DiagonalObservable) -> HermitianOperator {
    let v = obs.world.matrix();
    let d: Vec<C64> = obs.eigenvalues.iter().map(|&l| c(l, 0.0)).collect();
    let m = &v * Operator::diagonal(&d).as_matrix() * v.adjoint();
    let op = Operator::from_matrix(m).expect("finite square matrix");
    HermitianOperator::new(op, f64::INFINITY).expect("symmetrized")
}

/// Returns `⟨e_n|M|e_n⟩` when every off-diagonal element `⟨e_j|M|e_k⟩` has
/// modulus at most `tol`.
pub fn is_diagonal_in(m: &HermitianOperator, w: &World, tol: f64) -> Result<Option<Vec<f64>>> {
    let elems = w.matrix_elements(m.operator())?;
    let n = w.dim();
    for j in 0..n {
        for k in 0..n {
            if j != k && elems[(j, k)].norm() > tol {
                return Ok(None);
            }
        }
    }
    Ok(Some((0..n).map(|j| elems[(j, j)].re).collect()))
}

/// Like [`is_diagonal_in`] for an operator not yet known to be Hermitian.
pub fn is_diagonal_in_operator(m: &Operator, w: &World, tol: f64) -> Result<Option<Vec<f64>>> {
    let h = HermitianOperator::new(m.clone(), DEFAULT_EPS)?;
    is_diagonal_in(&h, w, tol)
}

/// `O_A ⊗ O_B` as an observable of the combined product world, with
/// eigenvalue `λ^A_n·λ^B_k` at index `n·dim_B + k`.
pub fn tensor_observable(
    oa: &DiagonalObservable,
    ob: &DiagonalObservable,
    pw: &ProductWorld,
) -> Result<DiagonalObservable> {
    if oa.dim() != pw.world_a.dim() || !worlds_equal(&oa.world, &pw.world_a, DEFAULT_EPS)? {
        return Err(Error::WorldMismatch);
    }
    if ob.dim() != pw.world_b.dim() || !worlds_equal(&ob.world, &pw.world_b, DEFAULT_EPS)? {
        return Err(Error::WorldMismatch);
    }
    let eigenvalues = oa.eigenvalues.iter().flat_map(|&a| ob.eigenvalues.iter().map(move |&b| a * b)).collect();
    DiagonalObservable::new(Arc::new(pw.combined.clone()), eigenvalues)
}

/// Text document form: a reference to a world file plus eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableDocument {
    pub world: String,
    pub eigenvalues: Vec<f64>,
}

impl ObservableDocument {
    /// Resolves the world reference through `load` and builds the observable.
    pub fn resolve<F>(self, load: F) -> Result<DiagonalObservable>
    where
        F: FnOnce(&str) -> Result<World>,
    {
        let world = load(&self.world)?;
        DiagonalObservable::new(Arc::new(world), self.eigenvalues)
    }
}
