//! C ABI over `losdof`.
//!
//! Objects are opaque handles created by `*_new`/`*_sample` functions and
//! released with the matching `*_free`. Every fallible call returns a
//! [`LosdofStatus`]; on failure the message is available from
//! [`losdof_last_error_message`] on the same thread. Panics are caught at
//! the boundary and reported as [`LosdofStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use losdof::channel::{build_g_matrix, build_los_matrix, build_phase_factored, normalize_los};
use losdof::fredholm::{fredholm_table, FredholmTable, TableOptions};
use losdof::model::{sample_network, ClusterParams};
use losdof::montecarlo::fredholm_identity_check;
use losdof::spectra::{effective_dof, gram_eigenvalues, log_det_capacity, Spectrum};
use losdof::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LosdofStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    IndexOutOfRange = 3,
    DimensionMismatch = 4,
    NoConvergence = 5,
    NumericalCheck = 6,
    InsufficientData = 7,
    BufferTooSmall = 8,
    Panic = 99,
}

/// Which Gram matrix a sampled spectrum belongs to.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LosdofMatrix {
    /// `nP·HH*` for the line-of-sight channel.
    LosNormalized = 0,
    /// `GG*` for the sinc-phase kernel matrix.
    Kernel = 1,
    /// `H̃H̃*` for the quadratic-phase approximation.
    PhaseFactored = 2,
}

/// Cluster geometry: nodes per cluster, area, distance, wavelength.
pub struct LosdofScenario(ClusterParams);

/// Gram eigenvalues of one random instance, descending.
pub struct LosdofSpectrum(Spectrum);

/// Sinc-kernel eigenvalues, traces and Fredholm coefficients.
pub struct LosdofFredholmTable(FredholmTable);

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_last_error(msg: &str) {
    LAST_ERROR.with(|e| {
        let mut buf = e.borrow_mut();
        buf.clear();
        buf.extend(msg.bytes().filter(|&b| b != 0));
    });
}

fn status_of(err: &Error) -> LosdofStatus {
    match err {
        Error::InvalidParameter(_) | Error::KindMismatch { .. } => LosdofStatus::InvalidParameter,
        Error::IndexOutOfRange { .. } => LosdofStatus::IndexOutOfRange,
        Error::DimensionMismatch(_) => LosdofStatus::DimensionMismatch,
        Error::NoConvergence { .. } => LosdofStatus::NoConvergence,
        Error::InconsistentSpectrum { .. } | Error::DiscretizationTooCoarse { .. } | Error::DecayViolation(_) => {
            LosdofStatus::NumericalCheck
        }
        Error::InsufficientData(_) => LosdofStatus::InsufficientData,
    }
}

fn fail(status: LosdofStatus, msg: &str) -> LosdofStatus {
    set_last_error(msg);
    status
}

/// Runs `f`, translating errors and panics into status codes.
fn guard<F>(f: F) -> LosdofStatus
where
    F: FnOnce() -> Result<(), LosdofStatus>,
{
    set_last_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LosdofStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(LosdofStatus::Panic, "panic inside losdof"),
    }
}

fn check(err: Error) -> LosdofStatus {
    fail(status_of(&err), &err.to_string())
}

unsafe fn get<'a, T>(p: *const T) -> Result<&'a T, LosdofStatus> {
    p.as_ref().ok_or_else(|| fail(LosdofStatus::NullPointer, "null handle"))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), LosdofStatus> {
    if out.is_null() {
        return Err(fail(LosdofStatus::NullPointer, "null output pointer"));
    }
    out.write(value);
    Ok(())
}

/// Copies `values` into `buf`; fails without writing if `len` is too small.
unsafe fn copy_out(values: &[f64], buf: *mut f64, len: usize) -> Result<(), LosdofStatus> {
    if buf.is_null() {
        return Err(fail(LosdofStatus::NullPointer, "null buffer"));
    }
    if len < values.len() {
        return Err(fail(LosdofStatus::BufferTooSmall, &format!("buffer holds {len}, need {}", values.len())));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    Ok(())
}

/// Library name and version, NUL-terminated, static storage.
#[no_mangle]
pub extern "C" fn losdof_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!("losdof ", env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// Length in bytes of the last error message on this thread, excluding the
/// terminator.
#[no_mangle]
pub extern "C" fn losdof_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().len())
}

/// Copies the last error message into `buf` (NUL-terminated, truncated to
/// `len - 1` bytes). Returns the number of bytes written before the NUL.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null.
#[no_mangle]
pub unsafe extern "C" fn losdof_last_error_message(buf: *mut c_char, len: usize) -> usize {
    if buf.is_null() || len == 0 {
        return 0;
    }
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let n = msg.len().min(len - 1);
        ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
        *buf.add(n) = 0;
        n
    })
}

/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn losdof_scenario_new(
    n: usize,
    area_a: f64,
    dist_d: f64,
    lambda: f64,
    out: *mut *mut LosdofScenario,
) -> LosdofStatus {
    guard(|| {
        let params = ClusterParams::new(n, area_a, dist_d, lambda).map_err(check)?;
        put(out, Box::into_raw(Box::new(LosdofScenario(params))))
    })
}

/// # Safety
/// `scenario` must come from [`losdof_scenario_new`] and not be used
/// afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn losdof_scenario_free(scenario: *mut LosdofScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Spectral parameter `m = A / (λ d)` and per-node power `P`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn losdof_scenario_derived(
    scenario: *const LosdofScenario,
    m: *mut f64,
    p: *mut f64,
) -> LosdofStatus {
    guard(|| {
        let derived = get(scenario)?.0.derive().map_err(check)?;
        put(m, derived.m)?;
        put(p, derived.p)
    })
}

/// Whether `√A ≤ d ≤ A/λ`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn losdof_scenario_in_regime(scenario: *const LosdofScenario, out: *mut bool) -> LosdofStatus {
    guard(|| put(out, get(scenario)?.0.in_regime()))
}

/// Samples node positions with `seed` and computes the Gram spectrum of the
/// chosen matrix.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn losdof_spectrum_sample(
    scenario: *const LosdofScenario,
    seed: u64,
    matrix: LosdofMatrix,
    out: *mut *mut LosdofSpectrum,
) -> LosdofStatus {
    guard(|| {
        let params = get(scenario)?.0;
        let spectrum = (|| {
            let derived = params.derive()?;
            let pos = sample_network(&params, seed)?;
            let m = match matrix {
                LosdofMatrix::LosNormalized => normalize_los(&build_los_matrix(&pos, &params)?, &derived, params.n)?,
                LosdofMatrix::Kernel => build_g_matrix(&pos, derived.m)?,
                LosdofMatrix::PhaseFactored => build_phase_factored(&pos, &params)?.0,
            };
            gram_eigenvalues(&m)
        })()
        .map_err(check)?;
        put(out, Box::into_raw(Box::new(LosdofSpectrum(spectrum))))
    })
}

/// # Safety
/// `spectrum` must come from [`losdof_spectrum_sample`] and not be used
/// afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn losdof_spectrum_free(spectrum: *mut LosdofSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn losdof_spectrum_len(spectrum: *const LosdofSpectrum, out: *mut usize) -> LosdofStatus {
    guard(|| put(out, get(spectrum)?.0.len()))
}

/// Copies the eigenvalues, descending, into `buf[0..len]`.
///
/// # Safety
/// `buf` must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn losdof_spectrum_eigenvalues(
    spectrum: *const LosdofSpectrum,
    buf: *mut f64,
    len: usize,
) -> LosdofStatus {
    guard(|| copy_out(&get(spectrum)?.0.eigenvalues, buf, len))
}

/// `Σ ln(1 + λ_k)` in nats.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn losdof_spectrum_log_det(spectrum: *const LosdofSpectrum, out: *mut f64) -> LosdofStatus {
    guard(|| {
        let value = log_det_capacity(&get(spectrum)?.0).map_err(check)?;
        put(out, value)
    })
}

/// Number of eigenvalues at or above `threshold`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn losdof_spectrum_effective_dof(
    spectrum: *const LosdofSpectrum,
    threshold: f64,
    out: *mut usize,
) -> LosdofStatus {
    guard(|| put(out, effective_dof(&get(spectrum)?.0, threshold)))
}

/// Builds the table for bandwidth `m` with `d_0..d_{k_max}` and
/// `A_1..A_{max(k_max, 1)}`. `quadrature_n = 0` selects the default rule.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn losdof_fredholm_table_new(
    m: f64,
    quadrature_n: usize,
    k_max: usize,
    out: *mut *mut LosdofFredholmTable,
) -> LosdofStatus {
    guard(|| {
        let defaults = TableOptions::for_bandwidth(m.max(0.0));
        let options = TableOptions {
            quadrature_n: if quadrature_n == 0 { defaults.quadrature_n } else { quadrature_n },
            p_max: k_max.max(1),
            k_max,
        };
        let table = fredholm_table(m, options).map_err(check)?;
        put(out, Box::into_raw(Box::new(LosdofFredholmTable(table))))
    })
}

/// # Safety
/// `table` must come from [`losdof_fredholm_table_new`] and not be used
/// afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn losdof_fredholm_table_free(table: *mut LosdofFredholmTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Number of operator eigenvalue estimates (the quadrature size).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn losdof_fredholm_mu_len(table: *const LosdofFredholmTable, out: *mut usize) -> LosdofStatus {
    guard(|| put(out, get(table)?.0.mu.len()))
}

/// Copies the operator eigenvalues, descending.
///
/// # Safety
/// `buf` must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn losdof_fredholm_mu(table: *const LosdofFredholmTable, buf: *mut f64, len: usize) -> LosdofStatus {
    guard(|| copy_out(&get(table)?.0.mu, buf, len))
}

/// Iterated trace `A_p`, `p ≥ 1`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn losdof_fredholm_trace(table: *const LosdofFredholmTable, p: usize, out: *mut f64) -> LosdofStatus {
    guard(|| {
        let traces = &get(table)?.0.traces;
        let value = p.checked_sub(1).and_then(|i| traces.get(i)).copied();
        let value = value.ok_or_else(|| check(Error::IndexOutOfRange { index: p, len: traces.len() + 1 }))?;
        put(out, value)
    })
}

/// Fredholm coefficient `d_k`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn losdof_fredholm_dk(table: *const LosdofFredholmTable, k: usize, out: *mut f64) -> LosdofStatus {
    guard(|| {
        let dk = &get(table)?.0.dk;
        let value = dk.get(k).copied().ok_or_else(|| check(Error::IndexOutOfRange { index: k, len: dk.len() }))?;
        put(out, value)
    })
}

/// `E[det(G_k G_k*)] = (k!)² m^{-k} d_k`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn losdof_fredholm_expected_subdeterminant(
    table: *const LosdofFredholmTable,
    k: usize,
    out: *mut f64,
) -> LosdofStatus {
    guard(|| {
        let t = &get(table)?.0;
        let value = t
            .expected_subdeterminant(k)
            .ok_or_else(|| check(Error::IndexOutOfRange { index: k, len: t.dk.len() }))?;
        put(out, value)
    })
}

/// Fitted decay `μ_k ≤ exp(-δ (k - c m))`. Fails with
/// `LOSDOF_STATUS_INSUFFICIENT_DATA` when the spectrum had no usable tail.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn losdof_fredholm_decay(
    table: *const LosdofFredholmTable,
    c: *mut f64,
    delta: *mut f64,
) -> LosdofStatus {
    guard(|| {
        let fit = get(table)?
            .0
            .decay
            .ok_or_else(|| check(Error::InsufficientData("no decay fit for this table".into())))?;
        put(c, fit.c)?;
        put(delta, fit.delta)
    })
}

/// Monte Carlo check of the subdeterminant identity at order `k`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn losdof_identity_check(
    table: *const LosdofFredholmTable,
    k: usize,
    trials: usize,
    seed: u64,
    mean: *mut f64,
    std_error: *mut f64,
    z_score: *mut f64,
) -> LosdofStatus {
    guard(|| {
        let report = fredholm_identity_check(k, trials, seed, &get(table)?.0).map_err(check)?;
        put(mean, report.mc.mean)?;
        put(std_error, report.mc.std_error)?;
        put(z_score, report.z_score)
    })
}
