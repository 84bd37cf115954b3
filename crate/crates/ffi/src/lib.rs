//! C interface to `ldl-core`.
//!
//! Every fallible function returns an [`LdlStatus`]; on failure the message is
//! available from [`ldl_last_error_message`] on the same thread. Objects are
//! opaque handles released with their `_free` function. Strings returned by
//! the library are released with [`ldl_string_free`]. Indices are 0-based.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ldl_core::cli::{membership_report, MembershipOptions};
use ldl_core::inequality::eval_eq5;
use ldl_core::io;
use ldl_core::model::{DetectionBounds, PostselectedCorrelation, Scenario};
use ldl_core::quantum::hardy_correlation;
use ldl_core::schemes::{ldl_to_mdl, mdl_nonlocality_condition, MdlParams};
use ldl_core::vertices;
use ldl_core::LdlError;

/// Result of a library call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LdlStatus {
    Ok = 0,
    InvalidInput = 1,
    Parse = 2,
    ScenarioMismatch = 3,
    ZeroEfficiency = 4,
    InconsistentEfficiencies = 5,
    SizeOverflow = 6,
    SignallingInput = 7,
    ZeroEtaMin = 8,
    DegenerateTau = 9,
    NoFeasibleSample = 10,
    Io = 11,
    /// A required pointer argument was null.
    NullPointer = 12,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 13,
    /// The library panicked; this is a bug.
    Internal = 14,
}

impl From<&LdlError> for LdlStatus {
    fn from(e: &LdlError) -> Self {
        match e {
            LdlError::InvalidInput(_) => LdlStatus::InvalidInput,
            LdlError::Parse(_) => LdlStatus::Parse,
            LdlError::ScenarioMismatch(_) => LdlStatus::ScenarioMismatch,
            LdlError::ZeroEfficiency { .. } => LdlStatus::ZeroEfficiency,
            LdlError::InconsistentEfficiencies { .. } => LdlStatus::InconsistentEfficiencies,
            LdlError::SizeOverflow { .. } => LdlStatus::SizeOverflow,
            LdlError::SignallingInput { .. } => LdlStatus::SignallingInput,
            LdlError::ZeroEtaMin => LdlStatus::ZeroEtaMin,
            LdlError::DegenerateTau(_) => LdlStatus::DegenerateTau,
            LdlError::NoFeasibleSample => LdlStatus::NoFeasibleSample,
            LdlError::Io(_) => LdlStatus::Io,
        }
    }
}

/// A postselected correlation with floating-point entries.
pub struct LdlCorrelation {
    inner: PostselectedCorrelation<f64>,
}

/// Outcome of a membership check.
pub struct LdlMembership {
    member: bool,
    json: CString,
}

/// Result of evaluating the two-party LDL inequality.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct LdlEq5Result {
    /// Left-hand side; violated when positive beyond the tolerance.
    pub lhs: f64,
    pub violated: bool,
}

/// MDL parameters obtained from LDL bounds.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct LdlMdlResult {
    pub l: f64,
    pub h: f64,
    /// Set when a value had to be clamped into [0, 1].
    pub clamped: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Failure {
    Core(LdlError),
    Status(LdlStatus, String),
}

impl From<LdlError> for Failure {
    fn from(e: LdlError) -> Self {
        Failure::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LdlStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LdlStatus::Ok,
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            LdlStatus::from(&e)
        }
        Ok(Err(Failure::Status(s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal error".into());
            LdlStatus::Internal
        }
    }
}

fn null(name: &str) -> Failure {
    Failure::Status(LdlStatus::NullPointer, format!("{name} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Status(LdlStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(name))
}

fn to_c_string(s: String) -> CString {
    CString::new(s).expect("JSON output has no interior nul")
}

/// Message of the last failed call on this thread, or null after a success.
/// Valid until the next library call on this thread.
#[no_mangle]
pub extern "C" fn ldl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ldl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a correlation document. Full tables are postselected.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ldl_correlation_from_json(json: *const c_char, out: *mut *mut LdlCorrelation) -> LdlStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        let out = out_arg(out, "out")?;
        let table = io::parse_table(text)?;
        let inner = match table.kind {
            io::Kind::Postselected => table.postselected::<f64>()?,
            io::Kind::Full => ldl_core::model::postselect(&table.full::<f64>()?)?.0,
        };
        *out = Box::into_raw(Box::new(LdlCorrelation { inner }));
        Ok(())
    })
}

/// Hardy correlation for `tau` in (0, 1).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ldl_hardy_correlation(tau: f64, out: *mut *mut LdlCorrelation) -> LdlStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let inner = hardy_correlation(tau)?;
        *out = Box::into_raw(Box::new(LdlCorrelation { inner }));
        Ok(())
    })
}

/// Releases a correlation. Null is ignored.
///
/// # Safety
/// `c` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ldl_correlation_free(c: *mut LdlCorrelation) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Number of parties of a correlation.
///
/// # Safety
/// `c` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn ldl_correlation_parties(c: *const LdlCorrelation) -> usize {
    c.as_ref().map_or(0, |c| c.inner.scenario().n_parties())
}

/// `P(a|x)` with one input and one outcome per party, `n` parties.
///
/// # Safety
/// `x` and `a` must point to `n` values and `value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ldl_correlation_get(
    c: *const LdlCorrelation,
    x: *const usize,
    a: *const usize,
    n: usize,
    value: *mut f64,
) -> LdlStatus {
    guard(|| {
        let c = c.as_ref().ok_or_else(|| null("correlation"))?;
        if x.is_null() || a.is_null() {
            return Err(null("x or a"));
        }
        let value = out_arg(value, "value")?;
        let x = std::slice::from_raw_parts(x, n);
        let a = std::slice::from_raw_parts(a, n);
        *value = *c.inner.get(x, a)?;
        Ok(())
    })
}

/// Serializes a correlation to JSON. Free the result with [`ldl_string_free`].
///
/// # Safety
/// `c` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ldl_correlation_to_json(c: *const LdlCorrelation, out: *mut *mut c_char) -> LdlStatus {
    guard(|| {
        let c = c.as_ref().ok_or_else(|| null("correlation"))?;
        let out = out_arg(out, "out")?;
        *out = to_c_string(io::to_pretty(&io::postselected_to_value(&c.inner))).into_raw();
        Ok(())
    })
}

/// Evaluates the two-party binary LDL inequality at the given bounds.
/// A negative `tol` selects the default.
///
/// # Safety
/// `c` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ldl_eval_eq5(
    c: *const LdlCorrelation,
    eta_min: f64,
    eta_max: f64,
    tol: f64,
    out: *mut LdlEq5Result,
) -> LdlStatus {
    guard(|| {
        let c = c.as_ref().ok_or_else(|| null("correlation"))?;
        let out = out_arg(out, "out")?;
        let tol = if tol < 0.0 { ldl_core::inequality::default_tol::<f64>() } else { tol };
        let r = eval_eq5(&c.inner, &eta_min, &eta_max, tol)?;
        *out = LdlEq5Result { lhs: r.lhs, violated: r.violated };
        Ok(())
    })
}

/// Decides membership from JSON documents, as `ldl membership` does.
/// `effs_json` may be null for full targets. Exact inputs are solved in
/// rational arithmetic, as is everything when `exact` is nonzero.
///
/// # Safety
/// String arguments must be nul-terminated (or null where allowed) and `out`
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ldl_membership_check(
    target_json: *const c_char,
    effs_json: *const c_char,
    bounds_json: *const c_char,
    tol: f64,
    exact: c_int,
    out: *mut *mut LdlMembership,
) -> LdlStatus {
    guard(|| {
        let target = str_arg(target_json, "target_json")?;
        let effs = if effs_json.is_null() { None } else { Some(str_arg(effs_json, "effs_json")?) };
        let bounds = str_arg(bounds_json, "bounds_json")?;
        let out = out_arg(out, "out")?;
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(LdlError::InvalidInput(format!("tol must be positive, got {tol}")).into());
        }
        let opts = MembershipOptions { tol, exact: exact != 0, ..MembershipOptions::default() };
        let report = membership_report(target, effs, bounds, &opts)?;
        let member = report["member"].as_bool().unwrap_or(false);
        *out = Box::into_raw(Box::new(LdlMembership { member, json: to_c_string(io::to_pretty(&report)) }));
        Ok(())
    })
}

/// Whether the target is a member.
///
/// # Safety
/// `m` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn ldl_membership_is_member(m: *const LdlMembership) -> bool {
    m.as_ref().is_some_and(|m| m.member)
}

/// Verdict JSON with witness or certificate, owned by the handle.
///
/// # Safety
/// `m` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn ldl_membership_json(m: *const LdlMembership) -> *const c_char {
    m.as_ref().map_or(ptr::null(), |m| m.json.as_ptr())
}

/// Releases a membership result. Null is ignored.
///
/// # Safety
/// `m` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ldl_membership_free(m: *mut LdlMembership) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Maps MDL parameters `(l, h)` through LDL bounds.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ldl_to_mdl_params(
    l: f64,
    h: f64,
    n_inputs: usize,
    eta_min: f64,
    eta_max: f64,
    joint: bool,
    out: *mut LdlMdlResult,
) -> LdlStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let params = MdlParams::new(l, h, n_inputs)?;
        let m = ldl_to_mdl(&params, &eta_min, &eta_max, joint)?;
        *out = LdlMdlResult { l: *m.params.l(), h: *m.params.h(), clamped: m.clamped };
        Ok(())
    })
}

/// Whether the MDL nonlocality condition holds for the mapped parameters.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ldl_mdl_condition(
    eta_min: f64,
    eta_max: f64,
    n_inputs: usize,
    l: f64,
    h: f64,
    out: *mut bool,
) -> LdlStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = mdl_nonlocality_condition(&eta_min, &eta_max, n_inputs, &l, &h)?;
        Ok(())
    })
}

/// Number of LDL vertices for `n` parties with the given input and outcome
/// counts and per-party bounds `[eta_min[i], eta_max[i]]`.
///
/// # Safety
/// The four arrays must hold `n` values and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ldl_vertex_count(
    inputs: *const usize,
    outcomes: *const usize,
    eta_min: *const f64,
    eta_max: *const f64,
    n: usize,
    out: *mut u64,
) -> LdlStatus {
    guard(|| {
        if inputs.is_null() || outcomes.is_null() || eta_min.is_null() || eta_max.is_null() {
            return Err(null("array argument"));
        }
        let out = out_arg(out, "out")?;
        let scenario = Scenario::new(
            std::slice::from_raw_parts(inputs, n).to_vec(),
            std::slice::from_raw_parts(outcomes, n).to_vec(),
        )?;
        let lo = std::slice::from_raw_parts(eta_min, n);
        let hi = std::slice::from_raw_parts(eta_max, n);
        let bounds = DetectionBounds::new(lo.iter().copied().zip(hi.iter().copied()).collect())?;
        bounds.check_scenario(&scenario)?;
        let count = vertices::ldl_vertex_count(&scenario, &bounds)
            .and_then(|c| u64::try_from(c).ok())
            .ok_or(LdlError::SizeOverflow { count: u128::MAX, cap: u64::MAX as u128 })?;
        *out = count;
        Ok(())
    })
}
