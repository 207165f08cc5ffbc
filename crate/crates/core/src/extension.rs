//! Upper and lower envelopes of the extensions of a diagonal-algebra state to
//! a Hermitian operator outside the algebra:
//!
//! ```text
//! upper = inf_λ  Σ p_n λ_n + ‖Σ λ_n |e_n⟩⟨e_n| − O′‖
//! lower = sup_λ  Σ p_n λ_n − ‖Σ λ_n |e_n⟩⟨e_n| − O′‖
//! ```
//!
//! Every extension value of the state lies in `[lower, upper]`; the two
//! coincide when the extension is unique (pure states). The infimum is in
//! general not attained, so λ is restricted to the box `[−R, R]^dim`, which
//! biases the envelopes by `O(1/R)`.
//!
//! Both problems are convex in λ and are solved by a deep-cut ellipsoid
//! method. Each objective cut also yields a lower bound on the minimum, so the
//! solver certifies how far its answer can be from the box optimum.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{c, eigh_matrix, operator_norm, HermitianOperator, Operator, C64};
use crate::states::DiagonalState;

pub const DEFAULT_BOX_RADIUS: f64 = 1e3;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_GAP_TOL: f64 = 1e-5;
pub const DEFAULT_MAX_ITER: usize = 50_000;

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeProblem {
    state: DiagonalState,
    target: HermitianOperator,
    box_radius: f64,
    tol: f64,
    gap_tol: f64,
    max_iter: usize,
    /// `⟨e_j|O′|e_k⟩` in the state's world.
    target_elements: DMatrix<C64>,
}

impl EnvelopeProblem {
    pub fn new(state: DiagonalState, target: HermitianOperator) -> Result<Self> {
        Self::with_options(state, target, DEFAULT_BOX_RADIUS, DEFAULT_TOL)
    }

    pub fn with_options(state: DiagonalState, target: HermitianOperator, box_radius: f64, tol: f64) -> Result<Self> {
        if target.dim() != state.dim() {
            return Err(Error::DimensionMismatch { expected: state.dim(), found: target.dim() });
        }
        if !(box_radius.is_finite() && box_radius > 0.0) {
            return Err(Error::InvalidParameter { name: "box", reason: format!("must be positive, got {box_radius}") });
        }
        if !(tol.is_finite() && tol > 0.0) {
            return Err(Error::InvalidParameter { name: "tol", reason: format!("must be positive, got {tol}") });
        }
        let target_elements = state.world().matrix_elements(target.operator())?;
        Ok(EnvelopeProblem {
            state,
            target,
            box_radius,
            tol,
            gap_tol: 10.0 * tol,
            max_iter: DEFAULT_MAX_ITER,
            target_elements,
        })
    }

    pub fn gap_tol(mut self, gap_tol: f64) -> Result<Self> {
        if !(gap_tol.is_finite() && gap_tol >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "gap-tol",
                reason: format!("must be nonnegative, got {gap_tol}"),
            });
        }
        self.gap_tol = gap_tol;
        Ok(self)
    }

    pub fn max_iter(mut self, max_iter: usize) -> Result<Self> {
        if max_iter == 0 {
            return Err(Error::InvalidParameter { name: "max-iter", reason: "must be positive".into() });
        }
        self.max_iter = max_iter;
        Ok(self)
    }

    pub fn state(&self) -> &DiagonalState {
        &self.state
    }

    pub fn target(&self) -> &HermitianOperator {
        &self.target
    }

    pub fn box_radius(&self) -> f64 {
        self.box_radius
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn dim(&self) -> usize {
        self.state.dim()
    }

    /// `O(1/R)` allowance for the box truncation when deciding whether the
    /// envelopes have met: `2‖O′‖²/R`.
    pub fn truncation_allowance(&self) -> Result<f64> {
        let norm = operator_norm(self.target.operator())?;
        Ok(2.0 * norm * norm / self.box_radius)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeResult {
    pub upper: f64,
    pub lower: f64,
    pub gap: f64,
    pub arg_upper: Vec<f64>,
    pub arg_lower: Vec<f64>,
    /// Certified lower bound on the box-constrained infimum.
    pub upper_floor: f64,
    /// Certified upper bound on the box-constrained supremum.
    pub lower_ceiling: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl EnvelopeResult {
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            let gap = (self.upper - self.upper_floor).max(self.lower_ceiling - self.lower);
            Err(Error::NonConvergence { iterations: self.iterations, gap })
        }
    }
}

fn check_len(p: &EnvelopeProblem, lambda: &[f64]) -> Result<()> {
    if lambda.len() != p.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), found: lambda.len() });
    }
    if lambda.iter().any(|l| !l.is_finite()) {
        return Err(Error::NonFinite("lambda"));
    }
    Ok(())
}

/// `‖Σ λ_n |e_n⟩⟨e_n| − O′‖`, built from the world's projectors.
fn residual_norm(p: &EnvelopeProblem, lambda: &[f64]) -> Result<f64> {
    let v = p.state.world().matrix();
    let d: Vec<C64> = lambda.iter().map(|&l| c(l, 0.0)).collect();
    let diag = Operator::from_matrix(&v * Operator::diagonal(&d).as_matrix() * v.adjoint())?;
    operator_norm(&diag.sub(p.target.operator())?)
}

fn expectation(p: &EnvelopeProblem, lambda: &[f64]) -> f64 {
    p.state.weights().iter().zip(lambda).map(|(w, l)| w * l).sum()
}

/// `Σ p_n λ_n + ‖Σ λ_n |e_n⟩⟨e_n| − O′‖`.
pub fn objective_upper(p: &EnvelopeProblem, lambda: &[f64]) -> Result<f64> {
    check_len(p, lambda)?;
    Ok(expectation(p, lambda) + residual_norm(p, lambda)?)
}

/// `Σ p_n λ_n − ‖Σ λ_n |e_n⟩⟨e_n| − O′‖`.
pub fn objective_lower(p: &EnvelopeProblem, lambda: &[f64]) -> Result<f64> {
    check_len(p, lambda)?;
    Ok(expectation(p, lambda) - residual_norm(p, lambda)?)
}

/// `f(λ) = p·λ + ‖diag(λ) − M‖` with `M` in world coordinates, and one
/// subgradient: `p_i + s·|v_i|²` for the eigenpair `(μ, v)` of largest `|μ|`,
/// `s = sign(μ)`.
struct Envelope<'a> {
    weights: &'a [f64],
    target: DMatrix<C64>,
}

impl Envelope<'_> {
    fn eval(&self, lambda: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        let n = lambda.len();
        let mut a = -self.target.clone();
        for i in 0..n {
            a[(i, i)] += c(lambda[i], 0.0);
        }
        let (values, vectors) = eigh_matrix(&a)?;
        let (lo, hi) = (values[0], values[n - 1]);
        let (mu, col) = if hi.abs() >= lo.abs() { (hi, n - 1) } else { (lo, 0) };
        let sign = if mu >= 0.0 { 1.0 } else { -1.0 };
        let value = self.weights.iter().zip(lambda.iter()).map(|(w, l)| w * l).sum::<f64>() + mu.abs();
        let grad = DVector::from_fn(n, |i, _| self.weights[i] + sign * vectors[(i, col)].norm_sqr());
        Ok((value, grad))
    }
}

struct Minimum {
    arg: Vec<f64>,
    value: f64,
    floor: f64,
    iterations: usize,
    converged: bool,
}

/// Deep-cut ellipsoid minimization of a convex `f` over `[−r, r]^n`, `n >= 2`.
///
/// The ellipsoid `{x + B·u : ‖u‖ ≤ 1}` is kept through its factor `B`
/// (`P = B·Bᵀ`); updating `P` directly loses the thin directions to roundoff
/// once the ellipsoid stretches along a ray of minimizers.
fn ellipsoid_minimize(f: &Envelope<'_>, n: usize, r: f64, tol: f64, max_iter: usize) -> Result<Minimum> {
    const MAX_DEPTH: f64 = 0.9;
    let nf = n as f64;
    let mut x = DVector::<f64>::zeros(n);
    // Ball of radius r·√n around the origin contains the box.
    let mut b = DMatrix::<f64>::identity(n, n) * (r * nf.sqrt());

    let (f0, _) = f.eval(&x)?;
    let mut best_x = x.clone();
    let mut best = f0;
    let mut floor = f64::NEG_INFINITY;
    let mut iterations = 0;

    while iterations < max_iter && best - floor > tol {
        iterations += 1;

        let (g, excess) = match (0..n).find(|&i| x[i].abs() > r) {
            Some(i) => {
                let mut g = DVector::zeros(n);
                g[i] = x[i].signum();
                (g, x[i].abs() - r)
            }
            None => {
                let (value, g) = f.eval(&x)?;
                let width = (b.transpose() * &g).norm();
                floor = floor.max(value - width);
                if value < best {
                    best = value;
                    best_x = x.clone();
                }
                (g, value - best)
            }
        };
        if best - floor <= tol {
            break;
        }

        let bg = b.transpose() * &g;
        let width = bg.norm();
        if !(width.is_finite() && width > 0.0) {
            break;
        }
        let h = bg / width;
        let alpha = (excess / width).clamp(0.0, MAX_DEPTH);
        let bh = &b * &h;
        x -= &bh * ((1.0 + nf * alpha) / (nf + 1.0));
        // P⁺ = s·(P − β·(Ph̃)(Ph̃)ᵀ) becomes B⁺ = √s·B·(I − (1 − √(1−β))·h·hᵀ).
        let beta = 2.0 * (1.0 + nf * alpha) / ((nf + 1.0) * (1.0 + alpha));
        let scale = (nf * nf * (1.0 - alpha * alpha) / (nf * nf - 1.0)).sqrt();
        let shrink = 1.0 - (1.0 - beta).max(0.0).sqrt();
        b = (&b - bh * h.transpose() * shrink) * scale;
    }

    Ok(Minimum {
        arg: best_x.iter().copied().collect(),
        value: best,
        floor,
        iterations,
        converged: best - floor <= tol,
    })
}

/// Solves both envelopes over the box `[−R, R]^dim`.
///
/// A budget exhausted before the tolerance is certified is reported through
/// `converged = false` with the best values found; see
/// [`EnvelopeResult::require_converged`].
pub fn solve_envelopes(p: &EnvelopeProblem) -> Result<EnvelopeResult> {
    let n = p.dim();
    let weights = p.state.weights();
    let up = Envelope { weights, target: p.target_elements.clone() };
    let upper = ellipsoid_minimize(&up, n, p.box_radius, p.tol, p.max_iter)?;

    // sup_μ p·μ − ‖D(μ) − M‖ = −inf_ν p·ν + ‖D(ν) + M‖ with ν = −μ.
    let down = Envelope { weights, target: -p.target_elements.clone() };
    let lower = ellipsoid_minimize(&down, n, p.box_radius, p.tol, p.max_iter)?;

    Ok(EnvelopeResult {
        upper: upper.value,
        lower: -lower.value,
        gap: upper.value + lower.value,
        arg_upper: upper.arg,
        arg_lower: lower.arg.iter().map(|v| -v).collect(),
        upper_floor: upper.floor,
        lower_ceiling: -lower.floor,
        iterations: upper.iterations + lower.iterations,
        converged: upper.converged && lower.converged,
    })
}

/// The midpoint of the envelopes when they meet, i.e. when the state has a
/// single extension to `O′`.
///
/// "Meet" means `gap ≤ gap_tol + 2‖O′‖²/R`: the second term absorbs the box
/// truncation, which keeps even a pure state's envelopes apart by `O(1/R)`.
pub fn unique_extension_value(p: &EnvelopeProblem) -> Result<Option<f64>> {
    let r = solve_envelopes(p)?.require_converged()?;
    let threshold = p.gap_tol + p.truncation_allowance()?;
    Ok((r.gap <= threshold).then_some(0.5 * (r.upper + r.lower)))
}

/// Text document form of a problem. The state and target are given inline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeProblemDocument {
    pub world: crate::worlds::WorldDocument,
    pub weights: Vec<f64>,
    /// Row-major `[re, im]` entries of `O′`.
    pub target: Vec<Vec<[f64; 2]>>,
    pub box_radius: f64,
    pub tol: f64,
    #[serde(default)]
    pub gap_tol: Option<f64>,
    #[serde(default)]
    pub max_iter: Option<usize>,
}

impl EnvelopeProblemDocument {
    pub fn from_problem(p: &EnvelopeProblem) -> Self {
        let m = p.target.operator();
        EnvelopeProblemDocument {
            world: p.state.world().as_ref().into(),
            weights: p.state.weights().to_vec(),
            target: (0..m.dim())
                .map(|r| (0..m.dim()).map(|col| [m.entry(r, col).re, m.entry(r, col).im]).collect())
                .collect(),
            box_radius: p.box_radius,
            tol: p.tol,
            gap_tol: Some(p.gap_tol),
            max_iter: Some(p.max_iter),
        }
    }

    pub fn into_problem(self, eps: f64) -> Result<EnvelopeProblem> {
        let world = std::sync::Arc::new(self.world.into_world(eps)?);
        let state = DiagonalState::with_tolerance(world, self.weights, eps)?;
        let dim = self.target.len();
        let entries: Vec<C64> =
            self.target.into_iter().flat_map(|row| row.into_iter().map(|[re, im]| c(re, im))).collect();
        let target = HermitianOperator::new(Operator::from_rows(dim, &entries)?, eps)?;
        let mut p = EnvelopeProblem::with_options(state, target, self.box_radius, self.tol)?;
        if let Some(g) = self.gap_tol {
            p = p.gap_tol(g)?;
        }
        if let Some(m) = self.max_iter {
            p = p.max_iter(m)?;
        }
        Ok(p)
    }
}
