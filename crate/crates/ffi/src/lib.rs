//! C interface to the fps-sft library.
//!
//! Spectra and reports are opaque handles owned by the caller and released
//! with their `_free` function. Every fallible call returns an [`FpsStatus`];
//! on failure the message is available from [`fps_last_error_message`] on the
//! same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fps_sft::oracle::{generate, Algorithm, GeneratorSpec, Placement};
use fps_sft::{CubeShape, Error, FpsSftConfig, RecoveryReport, SparseSpectrum, SyntheticSource, Termination};
use num_complex::Complex64;

/// Result codes shared by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FpsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Unsupported = 4,
    OutOfRange = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FpsAlgorithm {
    Fps = 0,
    Baseline = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FpsTermination {
    ResidualClean = 0,
    Stall = 1,
    MaxIterations = 2,
}

/// Opaque sparse spectrum.
pub struct FpsSpectrum(SparseSpectrum);

/// Opaque recovery report.
pub struct FpsReport(RecoveryReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = CString::new(text).ok());
}

fn status_of(err: &Error) -> FpsStatus {
    match err {
        Error::Parse { .. } | Error::Pgm { .. } => FpsStatus::Parse,
        Error::Unsupported(_) => FpsStatus::Unsupported,
        Error::IndexOutOfRange { .. } => FpsStatus::OutOfRange,
        _ => FpsStatus::InvalidArgument,
    }
}

struct Failure(FpsStatus, String);

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        Failure(status_of(&err), err.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(FpsStatus::NullPointer, format!("{what} is null"))
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> FpsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            FpsStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            FpsStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(data: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure(FpsStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Copies the last error message into `buf` (NUL-terminated, truncated to
/// `len`) and returns the full message length, or 0 when there is none.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn fps_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| match slot.borrow().as_ref() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// Creates an empty spectrum on the grid `dims[0] x ... x dims[ndim-1]`.
///
/// # Safety
/// `dims` must point to `ndim` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fps_spectrum_new(dims: *const usize, ndim: usize, out: *mut *mut FpsSpectrum) -> FpsStatus {
    guard(|| {
        let shape = CubeShape::new(slice(dims, ndim, "dims")?.to_vec())?;
        write_out(out, FpsSpectrum(SparseSpectrum::new(shape)))
    })
}

/// # Safety
/// `spectrum` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fps_spectrum_free(spectrum: *mut FpsSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

/// Sets the amplitude at `freq`; a zero amplitude removes the entry.
///
/// # Safety
/// `spectrum` must be a live handle and `freq` must point to `ndim` values.
#[no_mangle]
pub unsafe extern "C" fn fps_spectrum_insert(
    spectrum: *mut FpsSpectrum,
    freq: *const usize,
    ndim: usize,
    re: f64,
    im: f64,
) -> FpsStatus {
    guard(|| {
        let spectrum = spectrum.as_mut().ok_or_else(|| null("spectrum"))?;
        let freq = slice(freq, ndim, "freq")?.to_vec();
        spectrum.0.insert(freq, Complex64::new(re, im))?;
        Ok(())
    })
}

/// Number of stored frequencies, or 0 for a null handle.
///
/// # Safety
/// `spectrum` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fps_spectrum_len(spectrum: *const FpsSpectrum) -> usize {
    spectrum.as_ref().map_or(0, |s| s.0.len())
}

/// Number of grid dimensions, or 0 for a null handle.
///
/// # Safety
/// `spectrum` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fps_spectrum_ndim(spectrum: *const FpsSpectrum) -> usize {
    spectrum.as_ref().map_or(0, |s| s.0.shape().ndim())
}

/// Reads entry `index` in lexicographic frequency order.
///
/// # Safety
/// `spectrum` must be a live handle, `freq` must have room for `ndim`
/// values, and `re`/`im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fps_spectrum_get(
    spectrum: *const FpsSpectrum,
    index: usize,
    freq: *mut usize,
    ndim: usize,
    re: *mut f64,
    im: *mut f64,
) -> FpsStatus {
    guard(|| {
        let spectrum = spectrum.as_ref().ok_or_else(|| null("spectrum"))?;
        if freq.is_null() || re.is_null() || im.is_null() {
            return Err(null("output pointer"));
        }
        let d = spectrum.0.shape().ndim();
        if ndim != d {
            return Err(Failure(
                FpsStatus::InvalidArgument,
                format!("buffer holds {ndim} coordinates, spectrum has {d}"),
            ));
        }
        let (m, a) = spectrum.0.iter().nth(index).ok_or_else(|| {
            Failure(
                FpsStatus::OutOfRange,
                format!("entry {index} of a spectrum with {} entries", spectrum.0.len()),
            )
        })?;
        ptr::copy_nonoverlapping(m.as_slice().as_ptr(), freq, d);
        *re = a.re;
        *im = a.im;
        Ok(())
    })
}

/// Parses the text spectrum format.
///
/// # Safety
/// `input` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fps_spectrum_parse(input: *const c_char, out: *mut *mut FpsSpectrum) -> FpsStatus {
    guard(|| {
        let spectrum = SparseSpectrum::parse_text(text(input, "text")?)?;
        write_out(out, FpsSpectrum(spectrum))
    })
}

/// Renders the spectrum in the text format. Release with [`fps_string_free`].
/// Returns null for a null handle.
///
/// # Safety
/// `spectrum` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fps_spectrum_to_text(spectrum: *const FpsSpectrum) -> *mut c_char {
    spectrum
        .as_ref()
        .and_then(|s| CString::new(s.0.to_text()).ok())
        .map_or(ptr::null_mut(), CString::into_raw)
}

/// # Safety
/// `s` must be null or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fps_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Draws a random `k`-sparse spectrum. `placement` is `"uniform"`,
/// `"clustered9"` or `"clustered25"`.
///
/// # Safety
/// `dims` must point to `ndim` values, `placement` must be a NUL-terminated
/// string, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fps_generate(
    dims: *const usize,
    ndim: usize,
    k: usize,
    placement: *const c_char,
    seed: u64,
    out: *mut *mut FpsSpectrum,
) -> FpsStatus {
    guard(|| {
        let shape = CubeShape::new(slice(dims, ndim, "dims")?.to_vec())?;
        let placement: Placement = text(placement, "placement")?.parse()?;
        let (truth, _) = generate(&GeneratorSpec::new(shape, k, placement, seed))?;
        write_out(out, FpsSpectrum(truth))
    })
}

/// Recovers `spectrum` by sampling the signal it defines. A zero
/// `max_iterations` selects the default budget.
///
/// # Safety
/// `spectrum` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fps_recover(
    spectrum: *const FpsSpectrum,
    algorithm: FpsAlgorithm,
    seed: u64,
    max_iterations: usize,
    out: *mut *mut FpsReport,
) -> FpsStatus {
    guard(|| {
        let spectrum = spectrum.as_ref().ok_or_else(|| null("spectrum"))?;
        let mut config = FpsSftConfig::default().with_seed(seed);
        if max_iterations > 0 {
            config = config.with_max_iterations(max_iterations);
        }
        let algo = match algorithm {
            FpsAlgorithm::Fps => Algorithm::Fps,
            FpsAlgorithm::Baseline => Algorithm::Baseline,
        };
        let report = algo.run(&SyntheticSource::new(spectrum.0.clone()), &config)?;
        write_out(out, FpsReport(report))
    })
}

/// # Safety
/// `report` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fps_report_free(report: *mut FpsReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fps_report_iterations(report: *const FpsReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.iterations_run)
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fps_report_samples_used(report: *const FpsReport) -> u64 {
    report.as_ref().map_or(0, |r| r.0.samples_used)
}

/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fps_report_termination(report: *const FpsReport, out: *mut FpsTermination) -> FpsStatus {
    guard(|| {
        let report = report.as_ref().ok_or_else(|| null("report"))?;
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        *out = match report.0.terminated_by {
            Termination::ResidualClean => FpsTermination::ResidualClean,
            Termination::Stall => FpsTermination::Stall,
            Termination::MaxIterations => FpsTermination::MaxIterations,
        };
        Ok(())
    })
}

/// Copies the recovered spectrum into a new handle.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fps_report_recovered(report: *const FpsReport, out: *mut *mut FpsSpectrum) -> FpsStatus {
    guard(|| {
        let report = report.as_ref().ok_or_else(|| null("report"))?;
        write_out(out, FpsSpectrum(report.0.recovered.clone()))
    })
}

/// Nonzero when `recovered` equals `truth` within relative tolerance `rel_tol`.
///
/// # Safety
/// Both handles must be null or live.
#[no_mangle]
pub unsafe extern "C" fn fps_spectrum_matches(
    recovered: *const FpsSpectrum,
    truth: *const FpsSpectrum,
    rel_tol: f64,
) -> i32 {
    match (recovered.as_ref(), truth.as_ref()) {
        (Some(a), Some(b)) => i32::from(a.0.matches(&b.0, rel_tol)),
        _ => 0,
    }
}
