//! C ABI over `qfp-core`.
//!
//! Every function returns a [`QfpStatus`]; results come back through out
//! pointers. Transfer matrices are opaque handles created by
//! `qfp_transfer_canonical` / `qfp_transfer_general` and released with
//! `qfp_transfer_free`. After a non-zero status,
//! `qfp_last_error_message` copies a description of the failure for the
//! calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_int};
use std::panic::{catch_unwind, AssertUnwindSafe};

use qfp_core::design::{dft_target, optimize_hadamard};
use qfp_core::metrics::{hadamard, GateMetrics};
use qfp_core::probe::{reconstruct_against, simulate, uniform_phase_grid, NoiseModel, ProbeConfig};
use qfp_core::specfun;
use qfp_core::transfer::{build_transfer, DriveSign, GateParams, ModulatorSpec, ShaperSpec, TransferMatrix};
use qfp_core::Error;

/// Result code of every exported function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QfpStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Specification = 3,
    Dimension = 4,
    UndefinedMetric = 5,
    Bracket = 6,
    Degenerate = 7,
    Config = 8,
    Panic = 9,
}

/// Opaque transfer-matrix handle.
pub struct QfpTransfer(TransferMatrix);

/// Gate metrics. Ratios are NaN unless the device has two inputs.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QfpMetrics {
    pub fidelity: f64,
    pub p: f64,
    pub p_tilde: f64,
    pub eta: f64,
    pub r_01: f64,
    pub r_10: f64,
    pub t_00: f64,
    pub t_11: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QfpOptimum {
    pub theta: f64,
    pub fidelity: f64,
    pub p_tilde: f64,
    /// Non-zero when the objective was flat over the bracket.
    pub flat_objective: c_int,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct QfpProbeSettings {
    pub replicates: usize,
    pub loss: f64,
    pub sigma: f64,
    pub correlated_sigma: f64,
    /// Number of equally spaced phase settings over one turn.
    pub phase_points: usize,
    pub phi_i: f64,
    pub seed: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QfpProbeResult {
    /// `γ00, γ01, γ10, γ11`.
    pub gamma: [f64; 4],
    pub phi_11: f64,
    pub phi_i_fit: f64,
    pub fidelity: f64,
    pub fidelity_err: f64,
    pub p_tilde: f64,
    pub p_tilde_err: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(message: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
}

fn status_of(err: &Error) -> QfpStatus {
    match err {
        Error::Domain(_) => QfpStatus::Domain,
        Error::Specification(_) => QfpStatus::Specification,
        Error::Dimension(_) => QfpStatus::Dimension,
        Error::UndefinedMetric(_) => QfpStatus::UndefinedMetric,
        Error::Bracket(_) => QfpStatus::Bracket,
        Error::Degenerate(_) => QfpStatus::Degenerate,
        Error::Config { .. } => QfpStatus::Config,
    }
}

enum Fail {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> QfpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QfpStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer passed for `{what}`"));
            QfpStatus::NullPointer
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            QfpStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(ptr: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    ptr.as_mut().ok_or(Fail::Null(what))
}

unsafe fn handle<'a>(ptr: *const QfpTransfer) -> Result<&'a TransferMatrix, Fail> {
    ptr.as_ref().map(|h| &h.0).ok_or(Fail::Null("handle"))
}

/// Copies the calling thread's last error message, NUL-terminated, into
/// `buf` (truncating to `len - 1` bytes) and returns the full message
/// length in bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn qfp_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// `J_order(theta)`.
///
/// # Safety
/// `value` must be a valid pointer to a `double`.
#[no_mangle]
pub unsafe extern "C" fn qfp_bessel_j(order: i64, theta: f64, value: *mut f64) -> QfpStatus {
    guard(|| {
        *out(value, "value")? = specfun::bessel_j(order, theta)?;
        Ok(())
    })
}

/// Smallest sideband order `K` whose Bessel tail falls below `tail_tol`.
///
/// # Safety
/// `order` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qfp_truncation_order(theta: f64, tail_tol: f64, order: *mut usize) -> QfpStatus {
    guard(|| {
        *out(order, "order")? = specfun::truncation_order(theta, tail_tol)?;
        Ok(())
    })
}

/// Builds the out-of-phase step-shaper device `(B, α, θ)` over `n_inputs`
/// computational bins.
///
/// # Safety
/// `handle` must be a valid pointer; on success it receives a handle owned
/// by the caller.
#[no_mangle]
pub unsafe extern "C" fn qfp_transfer_canonical(
    channels: usize,
    alpha: f64,
    theta: f64,
    n_inputs: usize,
    tail_tol: f64,
    handle: *mut *mut QfpTransfer,
) -> QfpStatus {
    guard(|| {
        let slot = out(handle, "handle")?;
        let v = GateParams::new(channels, alpha, theta).transfer_with_tol(n_inputs, tail_tol)?;
        *slot = Box::into_raw(Box::new(QfpTransfer(v)));
        Ok(())
    })
}

/// Builds a general modulator/shaper/modulator device. `sign1`, `sign2`
/// are `+1` or `-1`; `amplitudes` and `phases` hold `channels` values for
/// channels `-B/2 + 1 ..= B/2`.
///
/// # Safety
/// `amplitudes` and `phases` must point to `channels` doubles; `handle`
/// must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qfp_transfer_general(
    theta1: f64,
    sign1: c_int,
    theta2: f64,
    sign2: c_int,
    channels: usize,
    amplitudes: *const f64,
    phases: *const f64,
    n_inputs: usize,
    tail_tol: f64,
    handle: *mut *mut QfpTransfer,
) -> QfpStatus {
    guard(|| {
        let slot = out(handle, "handle")?;
        if amplitudes.is_null() {
            return Err(Fail::Null("amplitudes"));
        }
        if phases.is_null() {
            return Err(Fail::Null("phases"));
        }
        let a = std::slice::from_raw_parts(amplitudes, channels).to_vec();
        let p = std::slice::from_raw_parts(phases, channels).to_vec();
        let sign = |s: c_int| DriveSign::from_i8(s.clamp(-2, 2) as i8);
        let first = ModulatorSpec::new(theta1, sign(sign1)?)?;
        let second = ModulatorSpec::new(theta2, sign(sign2)?)?;
        let v = build_transfer(&first, &ShaperSpec::new(channels, a, p)?, &second, n_inputs, tail_tol)?;
        *slot = Box::into_raw(Box::new(QfpTransfer(v)));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `handle` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qfp_transfer_free(handle: *mut QfpTransfer) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Inclusive output-bin window `[m_min, m_max]` and input count.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qfp_transfer_shape(
    handle: *const QfpTransfer,
    m_min: *mut i64,
    m_max: *mut i64,
    n_inputs: *mut usize,
) -> QfpStatus {
    guard(|| {
        let v = self::handle(handle)?;
        let (lo, hi) = v.output_window();
        *out(m_min, "m_min")? = lo;
        *out(m_max, "m_max")? = hi;
        *out(n_inputs, "n_inputs")? = v.n_inputs();
        Ok(())
    })
}

/// `V_mn`; zero outside the output window.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qfp_transfer_entry(
    handle: *const QfpTransfer,
    m: i64,
    n: usize,
    re: *mut f64,
    im: *mut f64,
) -> QfpStatus {
    guard(|| {
        let v = self::handle(handle)?;
        if n >= v.n_inputs() {
            return Err(Error::Dimension(format!("input {n} out of range (N = {})", v.n_inputs())).into());
        }
        let z = v.entry(m, n);
        *out(re, "re")? = z.re;
        *out(im, "im")? = z.im;
        Ok(())
    })
}

/// Metrics against the N-point DFT target (Hadamard for N = 2).
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qfp_transfer_metrics(handle: *const QfpTransfer, metrics: *mut QfpMetrics) -> QfpStatus {
    guard(|| {
        let v = self::handle(handle)?;
        let slot = out(metrics, "metrics")?;
        let m = GateMetrics::evaluate(v, &dft_target(v.n_inputs()))?;
        let (r_01, r_10, t_00, t_11) = match m.ratios() {
            Ok(r) => (r.r_01, r.r_10, r.t_00, r.t_11),
            Err(_) => (f64::NAN, f64::NAN, f64::NAN, f64::NAN),
        };
        *slot = QfpMetrics {
            fidelity: m.fidelity,
            p: m.p,
            p_tilde: m.p_tilde,
            eta: m.eta,
            r_01,
            r_10,
            t_00,
            t_11,
        };
        Ok(())
    })
}

/// Fidelity-optimal θ on `[theta_lo, theta_hi]` for the `(B, α)` device.
///
/// # Safety
/// `result` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qfp_optimize_hadamard(
    channels: usize,
    alpha: f64,
    theta_lo: f64,
    theta_hi: f64,
    result: *mut QfpOptimum,
) -> QfpStatus {
    guard(|| {
        let slot = out(result, "result")?;
        let r = optimize_hadamard(channels, alpha, (theta_lo, theta_hi))?;
        *slot = QfpOptimum {
            theta: r.theta,
            fidelity: r.metrics.fidelity,
            p_tilde: r.metrics.p_tilde,
            flat_objective: r.flat_objective as c_int,
        };
        Ok(())
    })
}

/// Fills `settings` with the library defaults.
///
/// # Safety
/// `settings` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qfp_probe_default_settings(settings: *mut QfpProbeSettings) -> QfpStatus {
    guard(|| {
        let d = ProbeConfig::default();
        *out(settings, "settings")? = QfpProbeSettings {
            replicates: d.replicates,
            loss: d.loss,
            sigma: d.noise.sigma,
            correlated_sigma: d.noise.correlated_sigma,
            phase_points: d.phase_grid.len(),
            phi_i: d.phi_i,
            seed: d.seed,
        };
        Ok(())
    })
}

/// Simulates single- and dual-line probing of a two-input device and
/// reconstructs it against the Hadamard target.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qfp_probe_run(
    handle: *const QfpTransfer,
    settings: *const QfpProbeSettings,
    result: *mut QfpProbeResult,
) -> QfpStatus {
    guard(|| {
        let v = self::handle(handle)?;
        let s = settings.as_ref().ok_or(Fail::Null("settings"))?;
        let slot = out(result, "result")?;
        let cfg = ProbeConfig {
            replicates: s.replicates,
            loss: s.loss,
            noise: NoiseModel {
                sigma: s.sigma,
                correlated_sigma: s.correlated_sigma,
            },
            phase_grid: uniform_phase_grid(s.phase_points),
            phi_i: s.phi_i,
            seed: s.seed,
        };
        let r = reconstruct_against(&simulate(v, &cfg)?, &hadamard())?;
        let g = r.gamma();
        *slot = QfpProbeResult {
            gamma: [g[0][0], g[0][1], g[1][0], g[1][1]],
            phi_11: r.phi_11(),
            phi_i_fit: r.phi_i_fit,
            fidelity: r.fidelity,
            fidelity_err: r.fidelity_err,
            p_tilde: r.p_tilde,
            p_tilde_err: r.p_tilde_err,
        };
        Ok(())
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qfp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
