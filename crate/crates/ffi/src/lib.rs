//! C ABI for qworlds.
//!
//! Worlds are opaque handles created by `qw_world_*` constructors and
//! released with `qw_world_free`. Every fallible function returns a
//! `QwStatus`; on failure `qw_last_error` describes the error for the
//! calling thread. Matrices cross the boundary row-major, complex entries
//! as separate real and imaginary arrays.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, UnwindSafe};
use std::ptr;
use std::slice;
use std::sync::Arc;

use qworlds::banach::{banach_limit, AlmostConvergentSequence, Tail};
use qworlds::bell::{bell_state, chsh_value};
use qworlds::extension::{solve_envelopes, EnvelopeProblem};
use qworlds::hilbert::{HermitianOperator, Operator, C64, DEFAULT_EPS};
use qworlds::observables::DiagonalObservable;
use qworlds::states::{born_expectation, transition_matrix, DiagonalState};
use qworlds::worlds::{random_world, World};
use qworlds::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NotOrthonormal = 4,
    InvalidState = 5,
    NonConvergence = 6,
    NumericFailure = 7,
    Parse = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Opaque world handle.
pub struct QwWorld(Arc<World>);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QwChshReport {
    pub quantum_value: f64,
    pub classical_bound: f64,
    /// `xx, xy, yx, yy`, unsigned.
    pub per_term_expectations: [f64; 4],
    pub violated: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QwEnvelopeResult {
    pub upper: f64,
    pub lower: f64,
    pub gap: f64,
    pub upper_floor: f64,
    pub lower_ceiling: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QwTailKind {
    Periodic = 0,
    Convergent = 1,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> QwStatus {
    match e {
        Error::DimensionMismatch { .. } | Error::WorldMismatch | Error::NotSquare { .. } => QwStatus::DimensionMismatch,
        Error::NotOrthonormal { .. } | Error::IncompleteBasis { .. } => QwStatus::NotOrthonormal,
        Error::InvalidWeights(_) | Error::NotNormalized { .. } => QwStatus::InvalidState,
        Error::NonConvergence { .. } => QwStatus::NonConvergence,
        Error::Eigensolver => QwStatus::NumericFailure,
        Error::Parse(_) => QwStatus::Parse,
        _ => QwStatus::InvalidArgument,
    }
}

fn fail(e: Error) -> QwStatus {
    let status = status_of(&e);
    set_error(e.to_string());
    status
}

fn null(what: &str) -> QwStatus {
    set_error(format!("null pointer: {what}"));
    QwStatus::NullPointer
}

fn guard<F: FnOnce() -> QwStatus + UnwindSafe>(f: F) -> QwStatus {
    catch_unwind(f).unwrap_or_else(|_| {
        set_error("internal panic".into());
        QwStatus::Panic
    })
}

unsafe fn world_ref<'a>(w: *const QwWorld) -> Option<&'a Arc<World>> {
    w.as_ref().map(|w| &w.0)
}

unsafe fn slice_or_empty<'a, T>(p: *const T, len: usize) -> Option<&'a [T]> {
    if len == 0 {
        Some(&[])
    } else if p.is_null() {
        None
    } else {
        Some(slice::from_raw_parts(p, len))
    }
}

unsafe fn emit_world(w: World, out: *mut *mut QwWorld) -> QwStatus {
    *out = Box::into_raw(Box::new(QwWorld(Arc::new(w))));
    QwStatus::Ok
}

/// Message for the last failure on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qw_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// The standard basis of dimension `dim`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qw_world_standard(dim: usize, out: *mut *mut QwWorld) -> QwStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        match World::standard(dim) {
            Ok(w) => emit_world(w, out),
            Err(e) => fail(e),
        }
    })
}

/// A seeded random world.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qw_world_random(dim: usize, seed: u64, out: *mut *mut QwWorld) -> QwStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        match random_world(dim, seed) {
            Ok(w) => emit_world(w, out),
            Err(e) => fail(e),
        }
    })
}

/// Parses a world document `{"dim": d, "basis": [[[re, im], ...], ...]}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qw_world_from_json(json: *const c_char, out: *mut *mut QwWorld) -> QwStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return null("json/out");
        }
        let Ok(text) = CStr::from_ptr(json).to_str() else {
            set_error("world document is not UTF-8".into());
            return QwStatus::Parse;
        };
        match World::from_json(text, DEFAULT_EPS) {
            Ok(w) => emit_world(w, out),
            Err(e) => fail(e),
        }
    })
}

/// Serializes a world; release the string with `qw_string_free`.
///
/// # Safety
/// `world` must come from a `qw_world_*` constructor and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn qw_world_to_json(world: *const QwWorld, out: *mut *mut c_char) -> QwStatus {
    guard(|| {
        let (Some(w), false) = (world_ref(world), out.is_null()) else {
            return null("world/out");
        };
        *out = CString::new(w.to_json()).expect("JSON has no NUL").into_raw();
        QwStatus::Ok
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn qw_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Dimension of a world, or 0 for NULL.
///
/// # Safety
/// `world` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qw_world_dim(world: *const QwWorld) -> usize {
    world_ref(world).map_or(0, |w| w.dim())
}

/// # Safety
/// `world` must be NULL or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn qw_world_free(world: *mut QwWorld) {
    if !world.is_null() {
        drop(Box::from_raw(world));
    }
}

/// CHSH report for the Bell state `(|00⟩ + e^{i·phase}|11⟩)/√2`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qw_chsh(phase: f64, out: *mut QwChshReport) -> QwStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        if !phase.is_finite() {
            set_error("phase must be finite".into());
            return QwStatus::InvalidArgument;
        }
        match chsh_value(&bell_state(phase)) {
            Ok(r) => {
                *out = QwChshReport {
                    quantum_value: r.quantum_value,
                    classical_bound: r.classical_bound,
                    per_term_expectations: r.per_term_expectations,
                    violated: r.violated,
                };
                QwStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Expectation of the observable with `eigenvalues` in `obs_world` in the
/// state with `weights` on `state_world`.
///
/// # Safety
/// Arrays must hold `dim` elements; handles must be live.
#[no_mangle]
pub unsafe extern "C" fn qw_born_expectation(
    state_world: *const QwWorld,
    weights: *const f64,
    obs_world: *const QwWorld,
    eigenvalues: *const f64,
    dim: usize,
    out: *mut f64,
) -> QwStatus {
    guard(|| {
        let (Some(sw), Some(ow)) = (world_ref(state_world), world_ref(obs_world)) else {
            return null("world");
        };
        let (Some(p), Some(ev)) = (slice_or_empty(weights, dim), slice_or_empty(eigenvalues, dim)) else {
            return null("weights/eigenvalues");
        };
        if out.is_null() {
            return null("out");
        }
        let run = || {
            let s = DiagonalState::with_tolerance(sw.clone(), p.to_vec(), DEFAULT_EPS)?;
            let obs = DiagonalObservable::new(ow.clone(), ev.to_vec())?;
            born_expectation(&s, &obs)
        };
        match run() {
            Ok(v) => {
                *out = v;
                QwStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Writes `T[n][k] = |⟨e_n|e'_k⟩|²` row-major into `buf`, which must hold
/// `dim²` values.
///
/// # Safety
/// Handles must be live and `buf` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn qw_transition_matrix(
    world: *const QwWorld,
    world2: *const QwWorld,
    buf: *mut f64,
    len: usize,
) -> QwStatus {
    guard(|| {
        let (Some(w), Some(w2)) = (world_ref(world), world_ref(world2)) else {
            return null("world");
        };
        if buf.is_null() {
            return null("buf");
        }
        let t = match transition_matrix(w, w2) {
            Ok(t) => t,
            Err(e) => return fail(e),
        };
        let n = t.dim();
        if len < n * n {
            set_error(format!("buffer holds {len} values, need {}", n * n));
            return QwStatus::BufferTooSmall;
        }
        let out = slice::from_raw_parts_mut(buf, n * n);
        for (r, row) in t.rows().iter().enumerate() {
            out[r * n..(r + 1) * n].copy_from_slice(row);
        }
        QwStatus::Ok
    })
}

/// Upper and lower extension envelopes of the state with `weights` on
/// `world` at the Hermitian target `re + i·im` (row-major, `dim²` each).
/// Returns `NON_CONVERGENCE` with `out` filled when the budget runs out.
///
/// # Safety
/// Arrays must hold the stated number of values; the handle must be live.
#[no_mangle]
pub unsafe extern "C" fn qw_solve_envelopes(
    world: *const QwWorld,
    weights: *const f64,
    target_re: *const f64,
    target_im: *const f64,
    dim: usize,
    box_radius: f64,
    tol: f64,
    max_iter: usize,
    out: *mut QwEnvelopeResult,
) -> QwStatus {
    guard(|| {
        let Some(w) = world_ref(world) else {
            return null("world");
        };
        let (Some(p), Some(re), Some(im)) =
            (slice_or_empty(weights, dim), slice_or_empty(target_re, dim * dim), slice_or_empty(target_im, dim * dim))
        else {
            return null("weights/target");
        };
        if out.is_null() {
            return null("out");
        }
        let run = || {
            let s = DiagonalState::with_tolerance(w.clone(), p.to_vec(), DEFAULT_EPS)?;
            let entries: Vec<C64> = re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)).collect();
            let target = HermitianOperator::new(Operator::from_rows(dim, &entries)?, DEFAULT_EPS)?;
            let problem = EnvelopeProblem::with_options(s, target, box_radius, tol)?.max_iter(max_iter)?;
            solve_envelopes(&problem)
        };
        match run() {
            Ok(r) => {
                *out = QwEnvelopeResult {
                    upper: r.upper,
                    lower: r.lower,
                    gap: r.gap,
                    upper_floor: r.upper_floor,
                    lower_ceiling: r.lower_ceiling,
                    iterations: r.iterations,
                    converged: r.converged,
                };
                match r.require_converged() {
                    Ok(_) => QwStatus::Ok,
                    Err(e) => fail(e),
                }
            }
            Err(e) => fail(e),
        }
    })
}

/// Banach limit of `prefix` followed by a periodic tail (`tail` holds the
/// period) or a convergent tail (`tail[0]` is the limit).
///
/// # Safety
/// Arrays must hold the stated number of values.
#[no_mangle]
pub unsafe extern "C" fn qw_banach_limit(
    prefix: *const f64,
    prefix_len: usize,
    kind: QwTailKind,
    tail: *const f64,
    tail_len: usize,
    out: *mut f64,
) -> QwStatus {
    guard(|| {
        let (Some(prefix), Some(tail)) = (slice_or_empty(prefix, prefix_len), slice_or_empty(tail, tail_len)) else {
            return null("prefix/tail");
        };
        if out.is_null() {
            return null("out");
        }
        let tail = match kind {
            QwTailKind::Periodic => Tail::Periodic { values: tail.to_vec() },
            QwTailKind::Convergent => match tail {
                [limit] => Tail::Convergent { limit: *limit },
                _ => {
                    set_error(format!("convergent tail takes one value, got {}", tail.len()));
                    return QwStatus::InvalidArgument;
                }
            },
        };
        match AlmostConvergentSequence::new(prefix.to_vec(), tail) {
            Ok(x) => {
                *out = banach_limit(&x);
                QwStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}
