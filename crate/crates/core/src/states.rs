//! States on the diagonal algebra of a world and the Born rule across worlds.
//!
//! The only way a state changes world is [`markov_update`]; there is no
//! projection or renormalization step anywhere in this module.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::DEFAULT_EPS;
use crate::observables::DiagonalObservable;
use crate::worlds::{worlds_equal, World};

/// Probability weights over the basis vectors of a world.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalState {
    world: Arc<World>,
    weights: Vec<f64>,
}

impl DiagonalState {
    pub fn new(world: Arc<World>, weights: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(world, weights, DEFAULT_EPS)
    }

    pub fn with_tolerance(world: Arc<World>, weights: Vec<f64>, eps: f64) -> Result<Self> {
        if weights.len() != world.dim() {
            return Err(Error::DimensionMismatch { expected: world.dim(), found: weights.len() });
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidWeights(format!("weight {w} is not a nonnegative number")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > eps {
            return Err(Error::InvalidWeights(format!("weights sum to {total}, not 1")));
        }
        Ok(DiagonalState { world, weights })
    }

    pub fn uniform(world: Arc<World>) -> Self {
        let n = world.dim();
        DiagonalState { world, weights: vec![1.0 / n as f64; n] }
    }

    pub fn world(&self) -> &Arc<World> {
        &self.world
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Index of the point mass, if the state is one.
    pub fn pure_index(&self) -> Option<usize> {
        let mut found = None;
        for (n, &p) in self.weights.iter().enumerate() {
            if p == 1.0 {
                found = Some(n);
            } else if p != 0.0 {
                return None;
            }
        }
        found
    }

    pub fn is_pure(&self) -> bool {
        self.pure_index().is_some()
    }
}

/// The vector state `ω_n`: point mass at `n`.
pub fn vector_state(w: Arc<World>, n: usize) -> Result<DiagonalState> {
    let dim = w.dim();
    if n >= dim {
        return Err(Error::IndexOutOfRange { index: n, dim });
    }
    let mut weights = vec![0.0; dim];
    weights[n] = 1.0;
    Ok(DiagonalState { world: w, weights })
}

fn same_world(a: &Arc<World>, b: &Arc<World>) -> Result<bool> {
    Ok(Arc::ptr_eq(a, b) || worlds_equal(a, b, DEFAULT_EPS)?)
}

/// `Σ_n p_n λ_n`; the observable must be relative to the state's world.
pub fn expectation_same_world(s: &DiagonalState, obs: &DiagonalObservable) -> Result<f64> {
    if s.dim() != obs.dim() || !same_world(&s.world, obs.world())? {
        return Err(Error::WorldMismatch);
    }
    Ok(s.weights.iter().zip(obs.eigenvalues()).map(|(p, l)| p * l).sum())
}

/// `T[n][k] = |⟨e_n|e'_k⟩|²`; doubly stochastic.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix(DMatrix<f64>);

impl TransitionMatrix {
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn entry(&self, n: usize, k: usize) -> f64 {
        self.0[(n, k)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.0.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    /// Largest deviation of any row or column sum from 1.
    pub fn stochasticity_deviation(&self) -> f64 {
        let rows = self.0.row_iter().map(|r| (r.sum() - 1.0).abs());
        let cols = self.0.column_iter().map(|col| (col.sum() - 1.0).abs());
        rows.chain(cols).fold(0.0, f64::max)
    }

    pub fn is_doubly_stochastic(&self, eps: f64) -> bool {
        self.0.iter().all(|&t| (-eps..=1.0 + eps).contains(&t)) && self.stochasticity_deviation() <= eps
    }

    /// Row vector `pᵀT`.
    pub fn propagate(&self, p: &[f64]) -> Result<Vec<f64>> {
        if p.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: p.len() });
        }
        Ok((0..self.dim()).map(|k| p.iter().enumerate().map(|(n, pn)| pn * self.0[(n, k)]).sum()).collect())
    }
}

pub fn transition_matrix(w: &World, w2: &World) -> Result<TransitionMatrix> {
    if w.dim() != w2.dim() {
        return Err(Error::DimensionMismatch { expected: w.dim(), found: w2.dim() });
    }
    let overlaps = w.matrix().adjoint() * w2.matrix();
    Ok(TransitionMatrix(overlaps.map(|z| z.norm_sqr())))
}

/// Expectation of an observable of any world in a state of any (equal
/// dimension) world: `Σ_n p_n Σ_k T[n][k] λ_k`.
pub fn born_expectation(s: &DiagonalState, obs: &DiagonalObservable) -> Result<f64> {
    if s.dim() != obs.dim() {
        return Err(Error::DimensionMismatch { expected: s.dim(), found: obs.dim() });
    }
    if same_world(&s.world, obs.world())? {
        return expectation_same_world(s, obs);
    }
    let t = transition_matrix(&s.world, obs.world())?;
    let q = t.propagate(&s.weights)?;
    Ok(q.iter().zip(obs.eigenvalues()).map(|(q, l)| q * l).sum())
}

/// Probability of each basis vector of `w2` (equivalently, of each eigenvalue
/// of an observable relative to `w2`).
pub fn outcome_distribution(s: &DiagonalState, w2: &World) -> Result<Vec<f64>> {
    if s.dim() != w2.dim() {
        return Err(Error::DimensionMismatch { expected: s.dim(), found: w2.dim() });
    }
    transition_matrix(&s.world, w2)?.propagate(&s.weights)
}

/// The observer's state after the system is moved into `w2`.
pub fn markov_update(s: &DiagonalState, w2: Arc<World>) -> Result<DiagonalState> {
    let weights = outcome_distribution(s, &w2)?;
    Ok(DiagonalState { world: w2, weights })
}

/// Text document form: a reference to a world file plus weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateDocument {
    pub world: String,
    pub weights: Vec<f64>,
}

impl StateDocument {
    pub fn resolve<F>(self, load: F) -> Result<DiagonalState>
    where
        F: FnOnce(&str) -> Result<World>,
    {
        let world = load(&self.world)?;
        DiagonalState::new(Arc::new(world), self.weights)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{sigma_x, Ket};
    use crate::observables::materialize;
    use crate::worlds::random_world;

    fn arc(w: World) -> Arc<World> {
        Arc::new(w)
    }

    fn std2() -> Arc<World> {
        arc(World::standard(2).unwrap())
    }

    #[test]
    fn vector_state_examples() {
        let w = arc(random_world(3, 1).unwrap());
        let s = vector_state(w.clone(), 0).unwrap();
        assert_eq!(s.weights(), &[1.0, 0.0, 0.0]);
        assert!(s.is_pure());
        assert_eq!(s.pure_index(), Some(0));
        let obs = DiagonalObservable::new(std2(), vec![5.0, 7.0]).unwrap();
        let s1 = vector_state(obs.world().clone(), 1).unwrap();
        assert_eq!(expectation_same_world(&s1, &obs).unwrap(), 7.0);
        assert!(matches!(vector_state(w, 3), Err(Error::IndexOutOfRange { index: 3, dim: 3 })));
    }

    #[test]
    fn state_validation() {
        assert!(DiagonalState::new(std2(), vec![0.5, 0.6]).is_err());
        assert!(DiagonalState::new(std2(), vec![1.5, -0.5]).is_err());
        assert!(DiagonalState::new(std2(), vec![1.0]).is_err());
        assert!(!DiagonalState::new(std2(), vec![0.5, 0.5]).unwrap().is_pure());
    }

    #[test]
    fn same_world_expectations() {
        let w = std2();
        let obs = DiagonalObservable::new(w.clone(), vec![1.0, -1.0]).unwrap();
        assert_eq!(expectation_same_world(&DiagonalState::uniform(w.clone()), &obs).unwrap(), 0.0);
        let obs = DiagonalObservable::new(w.clone(), vec![2.0, 4.0]).unwrap();
        let s = DiagonalState::new(w, vec![0.25, 0.75]).unwrap();
        assert_eq!(expectation_same_world(&s, &obs).unwrap(), 3.5);
    }

    #[test]
    fn cross_world_expectation_requires_born_rule() {
        let s = vector_state(std2(), 0).unwrap();
        let obs = DiagonalObservable::new(arc(World::hadamard()), vec![1.0, -1.0]).unwrap();
        assert_eq!(expectation_same_world(&s, &obs), Err(Error::WorldMismatch));
        assert!(born_expectation(&s, &obs).unwrap().abs() < 1e-15);
    }

    #[test]
    fn transition_matrix_examples() {
        let w = random_world(4, 8).unwrap();
        let t = transition_matrix(&w, &w).unwrap();
        for n in 0..4 {
            for k in 0..4 {
                let expected = if n == k { 1.0 } else { 0.0 };
                assert!((t.entry(n, k) - expected).abs() < 1e-12);
            }
        }
        let t = transition_matrix(&World::standard(2).unwrap(), &World::hadamard()).unwrap();
        for v in t.as_matrix().iter() {
            assert!((v - 0.5).abs() < 1e-15);
        }
        let t = transition_matrix(&random_world(5, 1).unwrap(), &random_world(5, 2).unwrap()).unwrap();
        assert!(t.is_doubly_stochastic(1e-9));
        assert!(transition_matrix(&w, &World::hadamard()).is_err());
    }

    #[test]
    fn born_expectation_examples() {
        let had = arc(World::hadamard());
        let x = DiagonalObservable::new(had.clone(), vec![1.0, -1.0]).unwrap();
        let plus = vector_state(had.clone(), 0).unwrap();
        assert_eq!(born_expectation(&plus, &x).unwrap(), 1.0);

        // Same world via a distinct allocation still takes the exact path.
        let s = DiagonalState::new(arc(World::hadamard()), vec![0.3, 0.7]).unwrap();
        assert_eq!(born_expectation(&s, &x).unwrap(), expectation_same_world(&s, &x).unwrap());

        let s = vector_state(std2(), 0).unwrap();
        let e0 = Ket::basis_vector(2, 0).unwrap();
        let sandwich = materialize(&x).operator().sandwich(&e0, &e0).unwrap().re;
        assert!((born_expectation(&s, &x).unwrap() - sandwich).abs() < 1e-15);
        assert!((sigma_x().operator().sandwich(&e0, &e0).unwrap().re).abs() < 1e-15);
    }

    #[test]
    fn outcome_distribution_examples() {
        let s = vector_state(std2(), 0).unwrap();
        let q = outcome_distribution(&s, &World::hadamard()).unwrap();
        assert!((q[0] - 0.5).abs() < 1e-15 && (q[1] - 0.5).abs() < 1e-15);

        let w = arc(random_world(3, 4).unwrap());
        let s = DiagonalState::new(w.clone(), vec![0.2, 0.3, 0.5]).unwrap();
        let q = outcome_distribution(&s, &w).unwrap();
        for (a, b) in q.iter().zip(s.weights()) {
            assert!((a - b).abs() < 1e-12);
        }

        let u = DiagonalState::uniform(w);
        let q = outcome_distribution(&u, &random_world(3, 9).unwrap()).unwrap();
        for v in q {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn markov_examples() {
        let w = arc(random_world(3, 2).unwrap());
        let s = DiagonalState::new(w.clone(), vec![0.1, 0.2, 0.7]).unwrap();
        let twice = markov_update(&markov_update(&s, w.clone()).unwrap(), w).unwrap();
        for (a, b) in twice.weights().iter().zip(s.weights()) {
            assert!((a - b).abs() < 1e-12);
        }

        let s = vector_state(std2(), 0).unwrap();
        let via_h = markov_update(&s, arc(World::hadamard())).unwrap();
        let back = markov_update(&via_h, std2()).unwrap();
        assert!((back.weights()[0] - 0.5).abs() < 1e-15);
        assert!((back.weights()[1] - 0.5).abs() < 1e-15);
        assert!(!back.is_pure());
    }

    #[test]
    fn markov_dimension_mismatch() {
        let s = vector_state(std2(), 0).unwrap();
        assert!(matches!(markov_update(&s, arc(World::standard(3).unwrap())), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn state_document_round_trip() {
        let doc = StateDocument { world: "w.json".into(), weights: vec![0.25, 0.75] };
        let text = serde_json::to_string(&doc).unwrap();
        let s = serde_json::from_str::<StateDocument>(&text).unwrap().resolve(|_| World::standard(2)).unwrap();
        assert_eq!(s.weights(), &[0.25, 0.75]);
    }
}
