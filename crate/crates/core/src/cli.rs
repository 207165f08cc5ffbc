//! Experiment configuration and line-delimited output records for the
//! `qworlds` binary.
//!
//! Every subcommand's flags and the keys of a config file are the same
//! kebab-case names. A run produces one JSON record per line:
//!
//! ```text
//! {"command":"chsh","inputs_digest":"…","outputs":{…},"timing":null}
//! ```
//!
//! Floats are written with 17 significant digits. `timing` is `null` unless
//! timing was requested, so records are byte-identical across runs.

use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::banach::{
    annihilates_compact, banach_limit, parse_list, shift, topo_state_expectation, AlmostConvergentSequence,
    SequenceObservable, Tail,
};
use crate::bell::{self, bell_state, chsh_value, classical_chsh_bound, SpinDirectionBasis};
use crate::error::Error;
use crate::extension::{
    objective_upper, solve_envelopes, unique_extension_value, EnvelopeProblem, EnvelopeProblemDocument,
    DEFAULT_BOX_RADIUS, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use crate::hilbert::{self, random_hermitian, sigma_x, sigma_y, sigma_z, HermitianOperator, Operator, C64};
use crate::observables::{is_diagonal_in, materialize, DiagonalObservable, DIAGONAL_TOL};
use crate::states::{
    born_expectation, markov_update, outcome_distribution, transition_matrix, vector_state, DiagonalState,
};
use crate::worlds::{
    evolve_world, is_product_world, random_world, world_distance, worlds_equal, EvolutionGenerator, World, PRODUCT_TOL,
};

/// Tolerance for the world-flow check reported by `evolve`.
const FLOW_TOL: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(name = "qworlds", version, about = "Worlds-as-bases quantum mechanics experiments")]
pub struct Cli {
    /// Fill the `timing` field of each record with wall-clock milliseconds.
    /// Records are then no longer byte-reproducible.
    #[arg(long, global = true)]
    pub timing: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve a world under a seeded random Hermitian generator.
    Evolve(EvolveArgs),
    /// Born-rule expectation of an observable of one world in a state of another.
    Born(BornArgs),
    /// Move a state through a chain of worlds.
    Markov(MarkovArgs),
    /// CHSH value of the phase-θ Bell state.
    Chsh(ChshArgs),
    /// Upper/lower extension envelopes of a diagonal state.
    Extend(ExtendArgs),
    /// Banach limit of an almost-convergent sequence.
    Banach(BanachArgs),
    /// Run the experiment(s) described in a TOML config file.
    Run(RunArgs),
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct EvolveArgs {
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Seed of the random Hermitian generator.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Initial world: standard, hadamard, fourier, bell, random:SEED, pauli:x|y|z, file:PATH.
    #[arg(long, default_value = "standard")]
    pub world: String,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub time: f64,
    /// The flow check compares evolving by `split` then `time − split` with a
    /// single evolution by `time`.
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub split: f64,
}

impl Default for EvolveArgs {
    fn default() -> Self {
        EvolveArgs { dim: 2, seed: 0, world: "standard".into(), time: 1.0, split: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct BornArgs {
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// pure:N, uniform or weights:P0,P1,...
    #[arg(long, default_value = "pure:0")]
    pub state: String,
    #[arg(long, default_value = "standard")]
    pub state_world: String,
    #[arg(long, default_value = "hadamard")]
    pub obs_world: String,
    /// Comma-separated eigenvalues; defaults to 1,-1,1,-1,...
    #[arg(long, allow_hyphen_values = true)]
    pub eigenvalues: Option<String>,
}

impl Default for BornArgs {
    fn default() -> Self {
        BornArgs {
            dim: 2,
            state: "pure:0".into(),
            state_world: "standard".into(),
            obs_world: "hadamard".into(),
            eigenvalues: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct MarkovArgs {
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value = "pure:0")]
    pub state: String,
    #[arg(long, default_value = "standard")]
    pub world: String,
    /// Comma-separated worlds visited in order.
    #[arg(long, value_delimiter = ',', default_value = "hadamard,standard")]
    pub chain: Vec<String>,
}

impl Default for MarkovArgs {
    fn default() -> Self {
        MarkovArgs {
            dim: 2,
            state: "pure:0".into(),
            world: "standard".into(),
            chain: vec!["hadamard".into(), "standard".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct ChshArgs {
    #[arg(long, default_value_t = FRAC_PI_4, allow_hyphen_values = true)]
    pub phase: f64,
}

impl Default for ChshArgs {
    fn default() -> Self {
        ChshArgs { phase: FRAC_PI_4 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct ExtendArgs {
    #[arg(long)]
    pub dim: Option<usize>,
    /// pure:N, uniform or weights:P0,P1,...
    #[arg(long)]
    pub state: Option<String>,
    /// World of the state (defaults to standard).
    #[arg(long)]
    pub world: Option<String>,
    /// sigma_x, sigma_y, sigma_z, random (seeded), diagonal:L0,L1,... (in
    /// the state's world) or file:PATH (JSON rows of [re, im]).
    #[arg(long)]
    pub target: Option<String>,
    /// Problem document (JSON); replaces dim, state, world, target, box, tol,
    /// gap-tol and max-iter.
    #[arg(long)]
    pub problem: Option<PathBuf>,
    #[arg(long = "box", allow_hyphen_values = true)]
    #[serde(rename = "box")]
    pub box_radius: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub tol: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub gap_tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct BanachArgs {
    /// Comma-separated prefix values.
    #[arg(long, default_value = "", allow_hyphen_values = true)]
    pub prefix: String,
    /// periodic:V1,V2,... or convergent:C
    #[arg(long, default_value = "convergent:0", allow_hyphen_values = true)]
    pub tail: String,
    /// Number of shifts applied before re-evaluating.
    #[arg(long, default_value_t = 1)]
    pub shifts: usize,
    /// Number of leading terms echoed in the record.
    #[arg(long, default_value_t = 8)]
    pub terms: usize,
}

impl Default for BanachArgs {
    fn default() -> Self {
        BanachArgs { prefix: String::new(), tail: "convergent:0".into(), shifts: 1, terms: 8 }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// TOML file with `command = "..."` plus keys, or `[[experiment]]` tables.
    #[arg(long)]
    pub config: PathBuf,
}

/// One experiment: a command plus its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum ExperimentConfig {
    Evolve(EvolveArgs),
    Born(BornArgs),
    Markov(MarkovArgs),
    Chsh(ChshArgs),
    Extend(ExtendArgs),
    Banach(BanachArgs),
}

impl ExperimentConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentConfig::Evolve(_) => "evolve",
            ExperimentConfig::Born(_) => "born",
            ExperimentConfig::Markov(_) => "markov",
            ExperimentConfig::Chsh(_) => "chsh",
            ExperimentConfig::Extend(_) => "extend",
            ExperimentConfig::Banach(_) => "banach",
        }
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let hash = Sha256::digest(canonical.as_bytes());
        hex::encode(&hash[..8])
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Batch {
    experiment: Vec<ExperimentConfig>,
}

/// Parses a TOML config: either a single experiment or `[[experiment]]`
/// tables.
pub fn parse_config(text: &str) -> Result<Vec<ExperimentConfig>, CliError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::config("config", e.message()))?;
    if table.contains_key("experiment") {
        let batch: Batch = table.try_into().map_err(|e: toml::de::Error| CliError::from_serde(e.message()))?;
        Ok(batch.experiment)
    } else {
        let one: ExperimentConfig = table.try_into().map_err(|e: toml::de::Error| CliError::from_serde(e.message()))?;
        Ok(vec![one])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Invalid configuration; exit status 2.
    Config { key: String, message: String },
    /// Numerical failure while running; exit status 1.
    Numeric(Error),
}

impl CliError {
    fn config(key: &str, message: impl fmt::Display) -> Self {
        CliError::Config { key: key.to_string(), message: message.to_string() }
    }

    fn from_serde(message: &str) -> Self {
        // serde names the key in backticks: "unknown field `foo`, expected ...".
        let key = message.split('`').nth(1).unwrap_or("config").to_string();
        CliError::Config { key, message: message.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Numeric(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config { key, message } => write!(f, "config error in `{key}`: {message}"),
            CliError::Numeric(e) => write!(f, "numerical failure: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

trait ConfigContext<T> {
    fn key(self, key: &str) -> Result<T, CliError>;
}

impl<T> ConfigContext<T> for Result<T, Error> {
    fn key(self, key: &str) -> Result<T, CliError> {
        self.map_err(|e| CliError::config(key, e))
    }
}

fn numeric<T>(r: Result<T, Error>) -> Result<T, CliError> {
    r.map_err(CliError::Numeric)
}

/// Runtime settings shared by all experiments of an invocation.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub eps: f64,
    /// Directory against which relative `file:` paths are resolved.
    pub base_dir: PathBuf,
    pub timing: bool,
}

impl Default for RunContext {
    fn default() -> Self {
        RunContext { eps: hilbert::DEFAULT_EPS, base_dir: PathBuf::from("."), timing: false }
    }
}

impl RunContext {
    fn resolve(&self, path: &str) -> PathBuf {
        let p = Path::new(path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn read(&self, key: &str, path: &str) -> Result<String, CliError> {
        std::fs::read_to_string(self.resolve(path)).map_err(|e| CliError::config(key, format!("{path}: {e}")))
    }

    /// Parses a world spec; `dim` is checked against the world's dimension.
    pub fn world(&self, key: &str, spec: &str, dim: usize) -> Result<World, CliError> {
        let (kind, arg) = match spec.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (spec, None),
        };
        let world = match (kind, arg) {
            ("standard", None) => World::standard(dim).key(key)?,
            ("hadamard", None) => {
                if dim != 2 {
                    return Err(CliError::config(key, format!("hadamard world needs dim 2, got {dim}")));
                }
                World::hadamard()
            }
            ("fourier", None) => World::fourier(dim).key(key)?,
            ("bell", None) => bell::bell_basis(),
            ("pauli", Some(axis)) => {
                let axis = match axis {
                    "x" => bell::Axis::X,
                    "y" => bell::Axis::Y,
                    "z" => bell::Axis::Z,
                    other => return Err(CliError::config(key, format!("unknown Pauli axis {other:?}"))),
                };
                SpinDirectionBasis::new(axis).basis
            }
            ("random", Some(seed)) => {
                let seed: u64 = seed.parse().map_err(|_| CliError::config(key, format!("bad seed {seed:?}")))?;
                random_world(dim, seed).key(key)?
            }
            ("file", Some(path)) => World::from_json(&self.read(key, path)?, self.eps).key(key)?,
            _ => return Err(CliError::config(key, format!("unknown world spec {spec:?}"))),
        };
        if world.dim() != dim {
            return Err(CliError::config(key, format!("world has dim {}, expected {dim}", world.dim())));
        }
        Ok(world)
    }

    pub fn state(&self, key: &str, spec: &str, world: Arc<World>) -> Result<DiagonalState, CliError> {
        match spec.split_once(':') {
            Some(("pure", n)) => {
                let n: usize = n.parse().map_err(|_| CliError::config(key, format!("bad index {n:?}")))?;
                vector_state(world, n).key(key)
            }
            Some(("weights", list)) => {
                let weights = parse_list(list).key(key)?;
                DiagonalState::with_tolerance(world, weights, self.eps).key(key)
            }
            None if spec == "uniform" => Ok(DiagonalState::uniform(world)),
            _ => Err(CliError::config(key, format!("unknown state spec {spec:?}"))),
        }
    }
}

fn check_dim(dim: usize) -> Result<(), CliError> {
    if dim < 2 {
        return Err(CliError::config("dim", format!("must be at least 2, got {dim}")));
    }
    Ok(())
}

fn check_finite(key: &str, v: f64) -> Result<(), CliError> {
    if !v.is_finite() {
        return Err(CliError::config(key, "must be finite"));
    }
    Ok(())
}

fn basis_rows(w: &World) -> Value {
    Value::Array(
        w.basis().iter().map(|k| Value::Array(k.amplitudes().iter().map(|z| json!([z.re, z.im])).collect())).collect(),
    )
}

fn complex_rows(op: &Operator) -> Value {
    Value::Array(
        (0..op.dim())
            .map(|r| Value::Array((0..op.dim()).map(|c| json!([op.entry(r, c).re, op.entry(r, c).im])).collect()))
            .collect(),
    )
}

/// Outputs of one experiment. `failure` carries a numerical failure that
/// still produced a record (e.g. an exhausted solver budget).
pub struct Outcome {
    pub outputs: Value,
    pub failure: Option<Error>,
}

impl From<Value> for Outcome {
    fn from(outputs: Value) -> Self {
        Outcome { outputs, failure: None }
    }
}

fn run_evolve(ctx: &RunContext, a: &EvolveArgs) -> Result<Outcome, CliError> {
    check_dim(a.dim)?;
    check_finite("time", a.time)?;
    check_finite("split", a.split)?;
    let w = ctx.world("world", &a.world, a.dim)?;
    let gen = EvolutionGenerator::new(random_hermitian(a.dim, a.seed).key("seed")?);

    let evolved = numeric(evolve_world(&w, &gen, a.time))?;
    let first = numeric(evolve_world(&w, &gen, a.split))?;
    let composed = numeric(evolve_world(&first, &gen, a.time - a.split))?;
    let flow_deviation = numeric(world_distance(&composed, &evolved))?;
    let back = numeric(evolve_world(&evolved, &gen, -a.time))?;
    Ok(json!({
        "dim": a.dim,
        "time": a.time,
        "gram_deviation": evolved.gram_deviation(),
        "flow_deviation": flow_deviation,
        "flow_holds": flow_deviation <= FLOW_TOL,
        "returns_to_initial": numeric(worlds_equal(&back, &w, FLOW_TOL))?,
        "basis": basis_rows(&evolved),
    })
    .into())
}

fn default_eigenvalues(dim: usize) -> Vec<f64> {
    (0..dim).map(|n| if n % 2 == 0 { 1.0 } else { -1.0 }).collect()
}

fn run_born(ctx: &RunContext, a: &BornArgs) -> Result<Outcome, CliError> {
    check_dim(a.dim)?;
    let sw = Arc::new(ctx.world("state-world", &a.state_world, a.dim)?);
    let ow = Arc::new(ctx.world("obs-world", &a.obs_world, a.dim)?);
    let s = ctx.state("state", &a.state, sw.clone())?;
    let eigenvalues = match &a.eigenvalues {
        Some(list) => parse_list(list).key("eigenvalues")?,
        None => default_eigenvalues(a.dim),
    };
    let obs = DiagonalObservable::new(ow.clone(), eigenvalues).key("eigenvalues")?;

    let expectation = numeric(born_expectation(&s, &obs))?;
    let t = numeric(transition_matrix(&sw, &ow))?;
    let distribution = numeric(outcome_distribution(&s, &ow))?;
    let m = materialize(&obs);
    let sandwich = match s.pure_index() {
        Some(n) => {
            let e = numeric(sw.vector(n))?;
            Some(numeric(m.operator().sandwich(e, e))?.re)
        }
        None => None,
    };
    let diagonal_in_obs_world = numeric(is_diagonal_in(&m, &ow, DIAGONAL_TOL))?.is_some();
    let diagonal_in_state_world = numeric(is_diagonal_in(&m, &sw, DIAGONAL_TOL))?.is_some();
    Ok(json!({
        "expectation": expectation,
        "sandwich": sandwich,
        "distribution": distribution,
        "transition_matrix": t.rows(),
        "stochasticity_deviation": t.stochasticity_deviation(),
        "observable_diagonal_in_obs_world": diagonal_in_obs_world,
        "observable_diagonal_in_state_world": diagonal_in_state_world,
    })
    .into())
}

fn run_markov(ctx: &RunContext, a: &MarkovArgs) -> Result<Outcome, CliError> {
    check_dim(a.dim)?;
    if a.chain.is_empty() {
        return Err(CliError::config("chain", "must name at least one world"));
    }
    let w0 = Arc::new(ctx.world("world", &a.world, a.dim)?);
    let chain =
        a.chain.iter().map(|spec| ctx.world("chain", spec, a.dim).map(Arc::new)).collect::<Result<Vec<_>, _>>()?;
    let s0 = ctx.state("state", &a.state, w0.clone())?;

    let mut steps = Vec::with_capacity(chain.len());
    let mut s = s0.clone();
    // Independent route: multiply the row vector through the transition
    // matrices of the chain.
    let mut product = s0.weights().to_vec();
    let mut prev = w0;
    for (spec, w) in a.chain.iter().zip(&chain) {
        s = numeric(markov_update(&s, w.clone()))?;
        product = numeric(numeric(transition_matrix(&prev, w))?.propagate(&product))?;
        prev = w.clone();
        steps.push(json!({ "world": spec, "weights": s.weights() }));
    }
    let deviation = s.weights().iter().zip(&product).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(json!({
        "initial_weights": s0.weights(),
        "steps": steps,
        "final_weights": s.weights(),
        "final_is_pure": s.is_pure(),
        "chain_product_deviation": deviation,
    })
    .into())
}

fn run_chsh(a: &ChshArgs) -> Result<Outcome, CliError> {
    check_finite("phase", a.phase)?;
    let report = numeric(chsh_value(&bell_state(a.phase)))?;
    let table = numeric(bell::diagonality_table())?;
    let term_eigenvalues: Vec<Vec<f64>> =
        numeric(bell::chsh_term_observables())?.iter().map(|o| o.eigenvalues().to_vec()).collect();
    let worlds = bell::four_worlds();
    let product =
        worlds.iter().map(|pw| is_product_world(&pw.combined, 2, 2, PRODUCT_TOL)).collect::<Result<Vec<_>, _>>();
    Ok(json!({
        "phase": a.phase,
        "quantum_value": report.quantum_value,
        "classical_bound": report.classical_bound,
        "per_term_expectations": report.per_term_expectations,
        "violated": report.violated,
        "closed_form": 2.0 * (a.phase.cos() + a.phase.sin()),
        "classical_enumeration_max": classical_chsh_bound(),
        "term_diagonal_in_world": table,
        "term_eigenvalues": term_eigenvalues,
        "worlds_are_product": numeric(product)?,
    })
    .into())
}

fn build_target(ctx: &RunContext, spec: &str, seed: u64, world: &World) -> Result<HermitianOperator, CliError> {
    let dim = world.dim();
    let pauli = |op: HermitianOperator| {
        if dim == 2 {
            Ok(op)
        } else {
            Err(CliError::config("target", format!("{spec} needs dim 2, got {dim}")))
        }
    };
    match spec.split_once(':') {
        None => match spec {
            "sigma_x" => pauli(sigma_x()),
            "sigma_y" => pauli(sigma_y()),
            "sigma_z" => pauli(sigma_z()),
            "random" => random_hermitian(dim, seed).key("target"),
            _ => Err(CliError::config("target", format!("unknown target {spec:?}"))),
        },
        Some(("diagonal", list)) => {
            let ev = parse_list(list).key("target")?;
            let obs = DiagonalObservable::new(Arc::new(world.clone()), ev).key("target")?;
            Ok(materialize(&obs))
        }
        Some(("file", path)) => {
            let text = ctx.read("target", path)?;
            let rows: Vec<Vec<[f64; 2]>> =
                serde_json::from_str(&text).map_err(|e| CliError::config("target", format!("{path}: {e}")))?;
            let entries: Vec<C64> = rows.iter().flat_map(|r| r.iter().map(|&[re, im]| C64::new(re, im))).collect();
            let op = Operator::from_rows(rows.len(), &entries).key("target")?;
            HermitianOperator::new(op, ctx.eps).key("target")
        }
        _ => Err(CliError::config("target", format!("unknown target {spec:?}"))),
    }
}

fn extend_problem(ctx: &RunContext, a: &ExtendArgs) -> Result<EnvelopeProblem, CliError> {
    if let Some(path) = &a.problem {
        let clash = [
            ("dim", a.dim.is_some()),
            ("state", a.state.is_some()),
            ("world", a.world.is_some()),
            ("target", a.target.is_some()),
            ("box", a.box_radius.is_some()),
            ("tol", a.tol.is_some()),
            ("gap-tol", a.gap_tol.is_some()),
            ("max-iter", a.max_iter.is_some()),
        ];
        if let Some((key, _)) = clash.iter().find(|(_, set)| *set) {
            return Err(CliError::config(key, "cannot be combined with `problem`"));
        }
        let text = ctx.read("problem", &path.to_string_lossy())?;
        let doc: EnvelopeProblemDocument = serde_json::from_str(&text).map_err(|e| CliError::config("problem", e))?;
        return doc.into_problem(ctx.eps).key("problem");
    }

    let dim = a.dim.unwrap_or(2);
    check_dim(dim)?;
    let world = Arc::new(ctx.world("world", a.world.as_deref().unwrap_or("standard"), dim)?);
    let state = ctx.state("state", a.state.as_deref().unwrap_or("pure:0"), world.clone())?;
    let target = build_target(ctx, a.target.as_deref().unwrap_or("sigma_x"), a.seed, &world)?;
    let box_radius = a.box_radius.unwrap_or(DEFAULT_BOX_RADIUS);
    let tol = a.tol.unwrap_or(DEFAULT_TOL);
    let mut p = EnvelopeProblem::with_options(state, target, box_radius, tol).map_err(|e| match e {
        Error::InvalidParameter { name, reason } => CliError::config(name, reason),
        other => CliError::config("target", other),
    })?;
    if let Some(g) = a.gap_tol {
        p = p.gap_tol(g).key("gap-tol")?;
    }
    p = p.max_iter(a.max_iter.unwrap_or(DEFAULT_MAX_ITER)).key("max-iter")?;
    Ok(p)
}

fn run_extend(ctx: &RunContext, a: &ExtendArgs) -> Result<Outcome, CliError> {
    let p = extend_problem(ctx, a)?;
    let r = numeric(solve_envelopes(&p))?;
    let unique = if r.converged { numeric(unique_extension_value(&p))? } else { None };
    let sandwich = match p.state().pure_index() {
        Some(n) => {
            let e = numeric(p.state().world().vector(n))?;
            Some(numeric(p.target().operator().sandwich(e, e))?.re)
        }
        None => None,
    };
    let zero = vec![0.0; p.dim()];
    let failure = (!r.converged).then(|| r.clone().require_converged().unwrap_err());
    Ok(Outcome {
        outputs: json!({
            "dim": p.dim(),
            "weights": p.state().weights(),
            "target": complex_rows(p.target().operator()),
            "box": p.box_radius(),
            "tol": p.tol(),
            "upper": r.upper,
            "lower": r.lower,
            "gap": r.gap,
            "arg_upper": r.arg_upper,
            "arg_lower": r.arg_lower,
            "upper_floor": r.upper_floor,
            "lower_ceiling": r.lower_ceiling,
            "iterations": r.iterations,
            "converged": r.converged,
            "unique_value": unique,
            "sandwich": sandwich,
            "objective_at_zero": numeric(objective_upper(&p, &zero))?,
        }),
        failure,
    })
}

fn run_banach(a: &BanachArgs) -> Result<Outcome, CliError> {
    let prefix = parse_list(&a.prefix).key("prefix")?;
    let tail: Tail = a.tail.parse().key("tail")?;
    let x = AlmostConvergentSequence::new(prefix, tail).key("prefix")?;
    let mut shifted = x.clone();
    for _ in 0..a.shifts {
        shifted = shift(&shifted);
    }
    let obs = SequenceObservable::new("W", x.clone());
    Ok(json!({
        "value": banach_limit(&x),
        "shifted_value": banach_limit(&shifted),
        "shifts": a.shifts,
        "state_expectation": topo_state_expectation(&obs),
        "annihilates_compact": annihilates_compact(&obs),
        "terms": x.terms(a.terms),
        "sequence": x,
    })
    .into())
}

/// Runs one experiment.
pub fn execute(ctx: &RunContext, config: &ExperimentConfig) -> Result<Outcome, CliError> {
    match config {
        ExperimentConfig::Evolve(a) => run_evolve(ctx, a),
        ExperimentConfig::Born(a) => run_born(ctx, a),
        ExperimentConfig::Markov(a) => run_markov(ctx, a),
        ExperimentConfig::Chsh(a) => run_chsh(a),
        ExperimentConfig::Extend(a) => run_extend(ctx, a),
        ExperimentConfig::Banach(a) => run_banach(a),
    }
}

/// Executes an experiment and renders its record line (without newline).
pub fn run_record(ctx: &RunContext, config: &ExperimentConfig) -> Result<(String, Option<Error>), CliError> {
    let start = Instant::now();
    let outcome = execute(ctx, config)?;
    let timing = if ctx.timing { json!({ "elapsed_ms": start.elapsed().as_secs_f64() * 1e3 }) } else { Value::Null };
    let record = json!({
        "command": config.name(),
        "inputs_digest": config.digest(),
        "outputs": outcome.outputs,
        "timing": timing,
    });
    Ok((format_record(&record), outcome.failure))
}

/// Runs a batch in parallel and writes the records in input order. Returns
/// the process exit status.
pub fn run_batch<W: Write>(ctx: &RunContext, configs: &[ExperimentConfig], out: &mut W, err: &mut dyn Write) -> i32 {
    let results: Vec<_> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs.iter().map(|c| scope.spawn(move || run_record(ctx, c))).collect();
        handles.into_iter().map(|h| h.join().expect("experiment thread panicked")).collect()
    });
    let mut status = 0;
    for result in results {
        match result {
            Ok((line, failure)) => {
                let _ = writeln!(out, "{line}");
                if let Some(e) = failure {
                    let _ = writeln!(err, "qworlds: numerical failure: {e}");
                    status = status.max(1);
                }
            }
            Err(e) => {
                let _ = writeln!(err, "qworlds: {e}");
                status = status.max(e.exit_code());
            }
        }
    }
    status
}

/// Entry point used by the binary; returns the exit status.
pub fn main_with(cli: Cli) -> i32 {
    let mut stdout = io::stdout().lock();
    let mut stderr = io::stderr();
    let eps = match hilbert::eps_from_env() {
        Ok(eps) => eps,
        Err(e) => {
            let _ = writeln!(stderr, "qworlds: {}", CliError::config(hilbert::EPS_ENV_VAR, e));
            return 2;
        }
    };
    let mut ctx = RunContext { eps, base_dir: PathBuf::from("."), timing: cli.timing };
    let configs = match cli.command {
        Command::Evolve(a) => vec![ExperimentConfig::Evolve(a)],
        Command::Born(a) => vec![ExperimentConfig::Born(a)],
        Command::Markov(a) => vec![ExperimentConfig::Markov(a)],
        Command::Chsh(a) => vec![ExperimentConfig::Chsh(a)],
        Command::Extend(a) => vec![ExperimentConfig::Extend(a)],
        Command::Banach(a) => vec![ExperimentConfig::Banach(a)],
        Command::Run(r) => {
            let text = match std::fs::read_to_string(&r.config) {
                Ok(t) => t,
                Err(e) => {
                    let _ = writeln!(
                        stderr,
                        "qworlds: {}",
                        CliError::config("config", format!("{}: {e}", r.config.display()))
                    );
                    return 2;
                }
            };
            if let Some(dir) = r.config.parent() {
                ctx.base_dir = dir.to_path_buf();
            }
            match parse_config(&text) {
                Ok(c) => c,
                Err(e) => {
                    let _ = writeln!(stderr, "qworlds: {e}");
                    return 2;
                }
            }
        }
    };
    run_batch(&ctx, &configs, &mut stdout, &mut stderr)
}

/// Which library operations each command exercises.
pub const COMMAND_OPERATIONS: &[(&str, &[&str])] = &[
    ("evolve", &["mat_exp_hermitian", "evolve_world", "validate_world", "worlds_equal", "inner", "random_world"]),
    (
        "born",
        &[
            "vector_state",
            "expectation_same_world",
            "transition_matrix",
            "born_expectation",
            "outcome_distribution",
            "materialize",
            "is_diagonal_in",
        ],
    ),
    ("markov", &["markov_update", "transition_matrix", "outcome_distribution"]),
    (
        "chsh",
        &[
            "bell_state",
            "chsh_value",
            "classical_chsh_bound",
            "four_worlds",
            "product_world",
            "is_product_world",
            "tensor_op",
            "tensor_ket",
            "tensor_observable",
            "is_diagonal_in",
        ],
    ),
    ("extend", &["objective_upper", "solve_envelopes", "unique_extension_value", "operator_norm"]),
    ("banach", &["banach_limit", "shift", "topo_state_expectation", "annihilates_compact"]),
];

/// JSON with every float written as 17 significant digits.
pub fn format_record(value: &Value) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SignificantDigits);
    value.serialize(&mut ser).expect("in-memory serialization");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

struct SignificantDigits;

impl serde_json::ser::Formatter for SignificantDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}
