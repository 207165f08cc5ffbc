#![allow(dead_code)]

use std::path::PathBuf;
use std::process::{Command, Output};

use qworlds::extension::EnvelopeProblem;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub fn qworlds(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qworlds")).args(args).output().expect("qworlds binary runs")
}

/// Largest |eigenvalue| of the 2x2 Hermitian matrix `[[a, b], [b̄, d]]`.
pub fn norm_2x2(a: f64, d: f64, b_abs: f64) -> f64 {
    let mid = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b_abs * b_abs).sqrt();
    mid.abs() + rad
}

/// Brute-force upper and lower envelopes of a dimension-2 problem over the
/// box `[-R, R]²` on a grid of spacing `step`, in closed form.
pub fn grid_envelopes_2x2(p: &EnvelopeProblem, step: f64) -> (f64, f64) {
    let w = p.state().world();
    let m = w.matrix_elements(p.target().operator()).unwrap();
    let (a, d, b) = (m[(0, 0)].re, m[(1, 1)].re, m[(0, 1)].norm());
    let weights = p.state().weights();
    let r = p.box_radius();
    let n = (2.0 * r / step).round() as usize;
    let (mut upper, mut lower) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..=n {
        let l0 = -r + i as f64 * step;
        for j in 0..=n {
            let l1 = -r + j as f64 * step;
            let lin = weights[0] * l0 + weights[1] * l1;
            upper = upper.min(lin + norm_2x2(l0 - a, l1 - d, b));
            lower = lower.max(lin - norm_2x2(l0 - a, l1 - d, b));
        }
    }
    (upper, lower)
}

/// Extreme values of `tr(ρM)` over density matrices with diagonal `p` in a
/// dimension-2 world: `p·diag M ± 2√(p₀p₁)|M₀₁|`.
pub fn closed_form_2x2(p: &EnvelopeProblem) -> (f64, f64) {
    let m = p.state().world().matrix_elements(p.target().operator()).unwrap();
    let w = p.state().weights();
    let centre = w[0] * m[(0, 0)].re + w[1] * m[(1, 1)].re;
    let spread = 2.0 * (w[0] * w[1]).sqrt() * m[(0, 1)].norm();
    (centre + spread, centre - spread)
}
