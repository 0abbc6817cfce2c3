//! C ABI over the dirguess library.
//!
//! Every function returns a [`DgStatus`]. Results go through out-pointers.
//! On failure the message is kept per thread and can be read with
//! [`dg_last_error`]. Handles are opaque and must be released with the
//! matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use dirguess::abstention::optimal_plan;
use dirguess::game::{run_game, GameConfig, MeasurementSource};
use dirguess::hilbert::InputStateSpec;
use dirguess::povm::{build_abstention_povm, exact_game_value, AbstentionParams, Povm, ScoreKind};
use dirguess::tomography::run_repetitions;
use dirguess::walk::{extract_povm, load_reference_program};
use dirguess::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Infeasible = 3,
    Untabulated = 4,
    Numerical = 5,
    Io = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DgScoreKind {
    Fidelity = 0,
    Likelihood = 1,
}

impl From<DgScoreKind> for ScoreKind {
    fn from(k: DgScoreKind) -> Self {
        match k {
            DgScoreKind::Fidelity => ScoreKind::Fidelity,
            DgScoreKind::Likelihood => ScoreKind::MaxLikelihood,
        }
    }
}

/// Opaque measurement handle.
pub struct DgPovm {
    inner: Povm,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DgGameResult {
    pub s_hat: f64,
    pub std_error: f64,
    pub q_bar_hat: f64,
    pub n_accepted: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DgPlan {
    pub lambda_bar_0: f64,
    pub lambda_bar_1: f64,
    pub q_bar: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> DgStatus {
    match e {
        Error::ConstraintInfeasible(_) | Error::OptimumUnreachable(_) | Error::AlwaysAbstains | Error::NoAccepted => {
            DgStatus::Infeasible
        }
        Error::Untabulated { .. } => DgStatus::Untabulated,
        Error::NotHermitian
        | Error::NotPsd(_)
        | Error::Incomplete(_)
        | Error::Leak(_)
        | Error::OutsideSupport(_)
        | Error::BadProbabilities(_) => DgStatus::Numerical,
        Error::Io(_) => DgStatus::Io,
        _ => DgStatus::InvalidArgument,
    }
}

fn guard<F: FnOnce() -> Result<(), DgStatus>>(f: F) -> DgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DgStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside dirguess".into());
            DgStatus::Panic
        }
    }
}

fn lift<T>(r: dirguess::Result<T>) -> Result<T, DgStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn out<'a, T>(p: *mut T) -> Result<&'a mut T, DgStatus> {
    // SAFETY: callers pass either null or a valid, writable pointer.
    unsafe { p.as_mut() }.ok_or_else(|| {
        set_error("null output pointer".into());
        DgStatus::NullPointer
    })
}

fn handle<'a>(p: *const DgPovm) -> Result<&'a DgPovm, DgStatus> {
    // SAFETY: non-null handles come from this library and are still live.
    unsafe { p.as_ref() }.ok_or_else(|| {
        set_error("null handle".into());
        DgStatus::NullPointer
    })
}

fn boxed(p: Povm) -> *mut DgPovm {
    Box::into_raw(Box::new(DgPovm { inner: p }))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dg_version() -> *const c_char {
    static V: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => c"",
    };
    V.as_ptr()
}

/// Copies the last error message of this thread into `buf` (truncated,
/// always NUL-terminated). Returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn dg_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Builds the five-outcome abstention POVM for (λ̄₀, λ̄₁).
#[no_mangle]
pub extern "C" fn dg_povm_abstention(lambda_bar_0: f64, lambda_bar_1: f64, out_povm: *mut *mut DgPovm) -> DgStatus {
    guard(|| {
        let o = out(out_povm)?;
        let p = lift(AbstentionParams::new(lambda_bar_0, lambda_bar_1).and_then(|a| build_abstention_povm(&a)))?;
        *o = boxed(p);
        Ok(())
    })
}

/// POVM realized by the reference walk program of a tabulated row.
#[no_mangle]
pub extern "C" fn dg_povm_from_walk(kind: DgScoreKind, c0: f64, out_povm: *mut *mut DgPovm) -> DgStatus {
    guard(|| {
        let o = out(out_povm)?;
        let p = lift(load_reference_program(kind.into(), c0).and_then(|w| extract_povm(&w)))?;
        *o = boxed(p);
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `povm` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dg_povm_free(povm: *mut DgPovm) {
    if !povm.is_null() {
        drop(Box::from_raw(povm));
    }
}

#[no_mangle]
pub extern "C" fn dg_povm_len(povm: *const DgPovm, out_len: *mut usize) -> DgStatus {
    guard(|| {
        let p = handle(povm)?;
        *out(out_len)? = p.inner.len();
        Ok(())
    })
}

/// Writes element `index` row-major into 16 real and 16 imaginary parts.
///
/// # Safety
/// `re` and `im` must each point to 16 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dg_povm_element(povm: *const DgPovm, index: usize, re: *mut f64, im: *mut f64) -> DgStatus {
    guard(|| {
        let p = handle(povm)?;
        if re.is_null() || im.is_null() {
            set_error("null output buffer".into());
            return Err(DgStatus::NullPointer);
        }
        let e = p.inner.elements().get(index).ok_or_else(|| {
            set_error(format!("element {index} out of range"));
            DgStatus::InvalidArgument
        })?;
        for i in 0..4 {
            for j in 0..4 {
                *re.add(4 * i + j) = e[(i, j)].re;
                *im.add(4 * i + j) = e[(i, j)].im;
            }
        }
        Ok(())
    })
}

/// Exact conditional score and acceptance rate for ψ⁺-family inputs.
#[no_mangle]
pub extern "C" fn dg_exact_game_value(
    povm: *const DgPovm,
    kind: DgScoreKind,
    c0: f64,
    out_score: *mut f64,
    out_q_bar: *mut f64,
) -> DgStatus {
    guard(|| {
        let p = handle(povm)?;
        let (s, q) = (out(out_score)?, out(out_q_bar)?);
        let v = lift(InputStateSpec::psi_plus(c0).and_then(|spec| exact_game_value(&p.inner, &spec, kind.into())))?;
        *s = v.s_av;
        *q = v.q_bar;
        Ok(())
    })
}

/// Maximal-acceptance optimal plan; `constrained` fixes λ̄₁ = 1.
#[no_mangle]
pub extern "C" fn dg_optimal_plan(kind: DgScoreKind, c0: f64, constrained: bool, out_plan: *mut DgPlan) -> DgStatus {
    guard(|| {
        let o = out(out_plan)?;
        let p = lift(optimal_plan(kind.into(), c0, constrained))?;
        *o = DgPlan { lambda_bar_0: p.lambda_bar_0, lambda_bar_1: p.lambda_bar_1, q_bar: p.q_bar };
        Ok(())
    })
}

/// Monte Carlo game against the ideal POVM of (λ̄₀, λ̄₁).
#[no_mangle]
pub extern "C" fn dg_run_game(
    kind: DgScoreKind,
    c0: f64,
    lambda_bar_0: f64,
    lambda_bar_1: f64,
    trials: u64,
    seed: u64,
    out_result: *mut DgGameResult,
) -> DgStatus {
    guard(|| {
        let o = out(out_result)?;
        let kind: ScoreKind = kind.into();
        let params = lift(AbstentionParams::new(lambda_bar_0, lambda_bar_1))?;
        let plan = lift(dirguess::abstention::rescaled(c0, &params))?;
        let mut cfg = GameConfig::new(kind, c0, Some(plan), trials, seed);
        cfg.measurement_source = MeasurementSource::Ideal;
        let r = lift(run_game(&cfg))?;
        *o = DgGameResult { s_hat: r.s_hat, std_error: r.stderr, q_bar_hat: r.q_bar_hat, n_accepted: r.n_accepted };
        Ok(())
    })
}

/// Mean and standard deviation of the overall reconstruction fidelity over
/// seeded repetitions of simulated tomography of `povm`.
#[no_mangle]
pub extern "C" fn dg_tomography(
    povm: *const DgPovm,
    shots: u64,
    repetitions: usize,
    seed: u64,
    out_mean: *mut f64,
    out_std: *mut f64,
) -> DgStatus {
    guard(|| {
        let p = handle(povm)?;
        let (m, s) = (out(out_mean)?, out(out_std)?);
        let r = lift(run_repetitions(&p.inner, shots, repetitions, seed))?;
        *m = r.mean_overall_fidelity;
        *s = r.std_overall_fidelity;
        Ok(())
    })
}
