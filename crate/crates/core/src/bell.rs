//! The two-qubit CHSH experiment: Bell states, the quantum CHSH value, the
//! deterministic-assignment bound and the four product worlds in which the
//! CHSH correlation observables are respectively diagonal.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{c, sigma_x, sigma_y, sigma_z, tensor_op, HermitianOperator, Ket, C64, DEFAULT_EPS};
use crate::observables::{is_diagonal_in, tensor_observable, DiagonalObservable, DIAGONAL_TOL};
use crate::worlds::{product_world, ProductWorld, World};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn pauli(self) -> HermitianOperator {
        match self {
            Axis::X => sigma_x(),
            Axis::Y => sigma_y(),
            Axis::Z => sigma_z(),
        }
    }
}

/// Eigenbasis of a Pauli operator, spin up (eigenvalue +1) first.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinDirectionBasis {
    pub axis: Axis,
    pub basis: World,
}

impl SpinDirectionBasis {
    pub fn new(axis: Axis) -> Self {
        let s = FRAC_1_SQRT_2;
        let ket = |a: C64, b: C64| Ket::new(vec![a, b]).expect("finite");
        let basis = match axis {
            Axis::X => vec![ket(c(s, 0.0), c(s, 0.0)), ket(c(s, 0.0), c(-s, 0.0))],
            Axis::Y => vec![ket(c(s, 0.0), c(0.0, s)), ket(c(s, 0.0), c(0.0, -s))],
            Axis::Z => vec![ket(c(1.0, 0.0), c(0.0, 0.0)), ket(c(0.0, 0.0), c(1.0, 0.0))],
        };
        SpinDirectionBasis { axis, basis: World::new(basis).expect("Pauli eigenbases are orthonormal") }
    }

    /// The Pauli observable for this axis, relative to its own eigenbasis.
    pub fn spin_observable(&self) -> DiagonalObservable {
        DiagonalObservable::new(Arc::new(self.basis.clone()), vec![1.0, -1.0]).expect("two eigenvalues")
    }
}

/// `(|00⟩ + e^{i·phase}|11⟩)/√2`.
pub fn bell_state(phase: f64) -> Ket {
    let s = FRAC_1_SQRT_2;
    let zero = c(0.0, 0.0);
    Ket::new(vec![c(s, 0.0), zero, zero, C64::from_polar(s, phase)]).expect("finite")
}

/// The four Bell states `Φ⁺, Φ⁻, Ψ⁺, Ψ⁻` as a world of the two-qubit space.
/// It is not a product world.
pub fn bell_basis() -> World {
    let s = FRAC_1_SQRT_2;
    World::new(vec![
        Ket::from_real(&[s, 0.0, 0.0, s]).expect("finite"),
        Ket::from_real(&[s, 0.0, 0.0, -s]).expect("finite"),
        Ket::from_real(&[0.0, s, s, 0.0]).expect("finite"),
        Ket::from_real(&[0.0, s, -s, 0.0]).expect("finite"),
    ])
    .expect("Bell states are orthonormal")
}

/// The CHSH terms in order `xx, xy, yx, yy` with their signs.
pub const CHSH_TERMS: [(Axis, Axis, f64); 4] =
    [(Axis::X, Axis::X, 1.0), (Axis::X, Axis::Y, 1.0), (Axis::Y, Axis::X, 1.0), (Axis::Y, Axis::Y, -1.0)];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChshReport {
    pub quantum_value: f64,
    pub classical_bound: f64,
    /// `⟨σ^A_a σ^B_b⟩` for `ab = xx, xy, yx, yy`, unsigned.
    pub per_term_expectations: [f64; 4],
    pub violated: bool,
}

/// Sandwiches `psi` with each tensor Pauli term and forms the signed sum.
pub fn chsh_value(psi: &Ket) -> Result<ChshReport> {
    if psi.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: psi.dim() });
    }
    if !psi.is_normalized(DEFAULT_EPS) {
        return Err(Error::NotNormalized { norm: psi.norm() });
    }
    let mut terms = [0.0; 4];
    let mut value = 0.0;
    for (slot, (a, b, sign)) in terms.iter_mut().zip(CHSH_TERMS) {
        let op = tensor_op(a.pauli().operator(), b.pauli().operator());
        *slot = op.sandwich(psi, psi)?.re;
        value += sign * *slot;
    }
    let classical_bound = classical_chsh_bound();
    Ok(ChshReport {
        quantum_value: value,
        classical_bound,
        per_term_expectations: terms,
        violated: value > classical_bound + DEFAULT_EPS,
    })
}

/// The signed CHSH sum for each of the 16 assignments `v ∈ {±1}⁴` of
/// `(v(σ^A_x), v(σ^A_y), v(σ^B_x), v(σ^B_y))`.
pub fn classical_chsh_values() -> Vec<i32> {
    let mut out = Vec::with_capacity(16);
    for bits in 0..16u32 {
        let v = |k: u32| if bits >> k & 1 == 0 { 1 } else { -1 };
        let (ax, ay, bx, by) = (v(0), v(1), v(2), v(3));
        out.push(ax * bx + ax * by + ay * bx - ay * by);
    }
    out
}

/// Maximum of the signed sum over all deterministic assignments.
pub fn classical_chsh_bound() -> f64 {
    classical_chsh_values().into_iter().max().expect("16 assignments") as f64
}

/// Product worlds `x⊗x, x⊗y, y⊗x, y⊗y`.
pub fn four_worlds() -> [ProductWorld; 4] {
    CHSH_TERMS.map(|(a, b, _)| product_world(&SpinDirectionBasis::new(a).basis, &SpinDirectionBasis::new(b).basis))
}

/// The four CHSH correlation observables, each relative to its own world
/// from [`four_worlds`].
pub fn chsh_term_observables() -> Result<[DiagonalObservable; 4]> {
    let worlds = four_worlds();
    let mut out = Vec::with_capacity(4);
    for ((a, b, _), pw) in CHSH_TERMS.into_iter().zip(worlds.iter()) {
        let oa = SpinDirectionBasis::new(a).spin_observable();
        let ob = SpinDirectionBasis::new(b).spin_observable();
        out.push(tensor_observable(&oa, &ob, pw)?);
    }
    Ok(out.try_into().expect("four terms"))
}

/// `table[term][world]`: whether CHSH term `term` is diagonal in world
/// `world` of [`four_worlds`].
pub fn diagonality_table() -> Result<[[bool; 4]; 4]> {
    let worlds = four_worlds();
    let mut table = [[false; 4]; 4];
    for (t, (a, b, _)) in CHSH_TERMS.into_iter().enumerate() {
        let op = HermitianOperator::new(tensor_op(a.pauli().operator(), b.pauli().operator()), DEFAULT_EPS)?;
        for (w, pw) in worlds.iter().enumerate() {
            table[t][w] = is_diagonal_in(&op, &pw.combined, DIAGONAL_TOL)?.is_some();
        }
    }
    Ok(table)
}
