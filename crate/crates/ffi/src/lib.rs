//! C ABI for `specsmooth`.
//!
//! Spectra and refinement traces cross the boundary as opaque handles that
//! the caller releases with the matching `*_free` function. Every fallible
//! call returns an [`SsStatus`]; on failure a description is available from
//! [`ss_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use specsmooth::refine::RefinementTrace;
use specsmooth::{
    Boundary, ChannelRange, Error, KernelName, PhantomMode, RefinementConfig, SelectionRule, Spectrum, SpectrumFormat,
};

/// Opaque spectrum handle.
pub struct SsSpectrum(Spectrum);

/// Opaque refinement trace handle.
pub struct SsTrace(RefinementTrace);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Range = 5,
    Numeric = 6,
    BufferTooSmall = 7,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsBasisMode {
    PhantomExtended = 0,
    Strict = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsSelectionRule {
    GlobalMin = 0,
    FirstLocalMin = 1,
    Fixed = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsKernel {
    Wavg3 = 0,
    Wavg5 = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsBoundary {
    Mirror = 0,
    Clamp = 1,
}

/// B-spline smoothing options. Obtain defaults from
/// [`ss_smooth_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SsSmoothConfig {
    pub basis: SsBasisMode,
    pub min_spacing: f64,
    pub max_levels: u32,
    pub rule: SsSelectionRule,
    /// Level used when `rule` is `Fixed`.
    pub fixed_level: u32,
    /// When false the whole spectrum is smoothed and the range is ignored.
    pub use_range: bool,
    /// First and last index (not channel label) of the smoothed range.
    pub range_start: usize,
    pub range_end: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SsLevelRecord {
    pub level: u32,
    pub knot_count: usize,
    pub spacing: f64,
    pub rss: f64,
    pub has_epsilon: bool,
    /// Zero when `has_epsilon` is false (the last level).
    pub epsilon: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SsPeak {
    pub centroid: f64,
    pub fwhm: f64,
    pub height: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

struct Failure(SsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = status_of(&e);
        Failure(status, e.to_string())
    }
}

fn status_of(e: &Error) -> SsStatus {
    match e {
        Error::Io { .. } => SsStatus::Io,
        Error::Format { .. } => SsStatus::Format,
        Error::InvalidRange { .. }
        | Error::Index { .. }
        | Error::OutOfRange { .. }
        | Error::RangeMismatch { .. }
        | Error::RangeTooNarrow { .. }
        | Error::LengthMismatch { .. } => SsStatus::Range,
        Error::RankDeficient { .. } | Error::SpacingTooFine { .. } | Error::NoPeak { .. } => SsStatus::Numeric,
        Error::Level { source, .. } => status_of(source),
        _ => SsStatus::InvalidArgument,
    }
}

fn null(what: &str) -> Failure {
    Failure(SsStatus::NullPointer, format!("{what} is null"))
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> SsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => SsStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("internal panic".to_string());
            SsStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(SsStatus::InvalidArgument, "path is not valid UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message for the most recent failure on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ss_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |m| m.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ss_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Cardinal cubic B-spline.
#[no_mangle]
pub extern "C" fn ss_phi(x: f64) -> f64 {
    specsmooth::phi(x)
}

/// Copies `len` counts into a new spectrum. Counts must be finite and
/// non-negative, with at least 16 channels.
///
/// # Safety
/// `counts` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_spectrum_new(counts: *const f64, len: usize, out: *mut *mut SsSpectrum) -> SsStatus {
    guard(|| {
        if counts.is_null() {
            return Err(null("counts"));
        }
        let values = std::slice::from_raw_parts(counts, len).to_vec();
        emit(out, SsSpectrum(Spectrum::new(values)?))
    })
}

/// Loads a spectrum file; `.csv` files use the `channel,count` format,
/// anything else is read as one count per line.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_spectrum_load(path: *const c_char, out: *mut *mut SsSpectrum) -> SsStatus {
    guard(|| {
        let path = path_arg(path)?;
        let format = SpectrumFormat::from_path(&path);
        emit(out, SsSpectrum(specsmooth::load_spectrum(&path, format)?))
    })
}

/// Writes `channel,count` CSV.
///
/// # Safety
/// `spectrum` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ss_spectrum_save(spectrum: *const SsSpectrum, path: *const c_char) -> SsStatus {
    guard(|| {
        let spectrum = borrow(spectrum, "spectrum")?;
        let path = path_arg(path)?;
        specsmooth::save_spectrum(&spectrum.0, &path)?;
        Ok(())
    })
}

/// Number of channels, or 0 for a NULL handle.
///
/// # Safety
/// `spectrum` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ss_spectrum_len(spectrum: *const SsSpectrum) -> usize {
    spectrum.as_ref().map_or(0, |s| s.0.len())
}

/// Copies the counts into `buffer`, which must hold at least
/// `ss_spectrum_len` values.
///
/// # Safety
/// `spectrum` must be a live handle; `buffer` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn ss_spectrum_copy_counts(
    spectrum: *const SsSpectrum,
    buffer: *mut f64,
    capacity: usize,
) -> SsStatus {
    guard(|| {
        let counts = borrow(spectrum, "spectrum")?.0.counts();
        if buffer.is_null() {
            return Err(null("buffer"));
        }
        if capacity < counts.len() {
            return Err(Failure(
                SsStatus::BufferTooSmall,
                format!("buffer holds {capacity} values, spectrum has {}", counts.len()),
            ));
        }
        ptr::copy_nonoverlapping(counts.as_ptr(), buffer, counts.len());
        Ok(())
    })
}

/// # Safety
/// `spectrum` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ss_spectrum_free(spectrum: *mut SsSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

#[no_mangle]
pub extern "C" fn ss_smooth_config_default() -> SsSmoothConfig {
    let d = RefinementConfig::default();
    SsSmoothConfig {
        basis: SsBasisMode::PhantomExtended,
        min_spacing: d.min_spacing,
        max_levels: d.max_levels,
        rule: SsSelectionRule::GlobalMin,
        fixed_level: 0,
        use_range: false,
        range_start: 0,
        range_end: 0,
    }
}

fn refinement_config(c: &SsSmoothConfig) -> RefinementConfig {
    RefinementConfig {
        mode: match c.basis {
            SsBasisMode::PhantomExtended => PhantomMode::PhantomExtended,
            SsBasisMode::Strict => PhantomMode::PaperStrict,
        },
        min_spacing: c.min_spacing,
        max_levels: c.max_levels,
        rule: match c.rule {
            SsSelectionRule::GlobalMin => SelectionRule::GlobalMin,
            SsSelectionRule::FirstLocalMin => SelectionRule::FirstLocalMin,
            SsSelectionRule::Fixed => SelectionRule::Fixed(c.fixed_level),
        },
    }
}

/// Multi-level B-spline smoothing. `config` may be NULL for defaults.
/// `out_trace` may be NULL when the trace is not wanted.
///
/// # Safety
/// Handles must be live; output pointers writable.
#[no_mangle]
pub unsafe extern "C" fn ss_smooth_bspline(
    spectrum: *const SsSpectrum,
    config: *const SsSmoothConfig,
    out_spectrum: *mut *mut SsSpectrum,
    out_trace: *mut *mut SsTrace,
) -> SsStatus {
    guard(|| {
        let spectrum = &borrow(spectrum, "spectrum")?.0;
        let config = config.as_ref().copied().unwrap_or_else(|| ss_smooth_config_default());
        let range = if config.use_range {
            ChannelRange::new(config.range_start, config.range_end)?
        } else {
            spectrum.full_range()
        };
        if out_spectrum.is_null() {
            return Err(null("output spectrum pointer"));
        }
        let (smoothed, trace) = specsmooth::smooth(spectrum, range, &refinement_config(&config))?;
        emit(out_spectrum, SsSpectrum(smoothed))?;
        if !out_trace.is_null() {
            emit(out_trace, SsTrace(trace))?;
        }
        Ok(())
    })
}

/// Iterated weighted-mean smoothing with a built-in kernel.
///
/// # Safety
/// `spectrum` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ss_convolve_smooth(
    spectrum: *const SsSpectrum,
    kernel: SsKernel,
    iterations: u32,
    boundary: SsBoundary,
    out: *mut *mut SsSpectrum,
) -> SsStatus {
    guard(|| {
        let spectrum = &borrow(spectrum, "spectrum")?.0;
        let kernel = match kernel {
            SsKernel::Wavg3 => KernelName::Wavg3,
            SsKernel::Wavg5 => KernelName::Wavg5,
        }
        .kernel();
        let boundary = match boundary {
            SsBoundary::Mirror => Boundary::Mirror,
            SsBoundary::Clamp => Boundary::Clamp,
        };
        emit(
            out,
            SsSpectrum(specsmooth::convolve_smooth(spectrum, &kernel, iterations, boundary)?),
        )
    })
}

/// Number of refinement levels in the trace, or 0 for a NULL handle.
///
/// # Safety
/// `trace` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ss_trace_level_count(trace: *const SsTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.records().len())
}

/// Selected level, or 0 if none was selected or the handle is NULL.
///
/// # Safety
/// `trace` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ss_trace_selected_level(trace: *const SsTrace) -> u32 {
    trace.as_ref().and_then(|t| t.0.selected_level()).unwrap_or(0)
}

/// Copies the record at zero-based `index` (level `index + 1`).
///
/// # Safety
/// `trace` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ss_trace_record(trace: *const SsTrace, index: usize, out: *mut SsLevelRecord) -> SsStatus {
    guard(|| {
        let records = borrow(trace, "trace")?.0.records();
        let r = records.get(index).ok_or_else(|| {
            Failure(
                SsStatus::Range,
                format!("record index {index} out of range (0..{})", records.len()),
            )
        })?;
        if out.is_null() {
            return Err(null("output record"));
        }
        *out = SsLevelRecord {
            level: r.level,
            knot_count: r.knot_count,
            spacing: r.spacing,
            rss: r.rss,
            has_epsilon: r.epsilon.is_some(),
            epsilon: r.epsilon.unwrap_or(0.0),
        };
        Ok(())
    })
}

/// # Safety
/// `trace` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ss_trace_free(trace: *mut SsTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Synthetic benchmark spectrum pair (noiseless truth and Poisson sample).
/// Either output may be NULL.
///
/// # Safety
/// Non-NULL output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_synth_benchmark(
    channels: usize,
    seed: u64,
    out_truth: *mut *mut SsSpectrum,
    out_noisy: *mut *mut SsSpectrum,
) -> SsStatus {
    guard(|| {
        let synth = specsmooth::synth::generate_benchmark(channels, seed)?;
        if !out_truth.is_null() {
            emit(out_truth, SsSpectrum(synth.truth))?;
        }
        if !out_noisy.is_null() {
            emit(out_noisy, SsSpectrum(synth.noisy))?;
        }
        Ok(())
    })
}

/// Root-mean-square difference over all channels.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ss_rmse(a: *const SsSpectrum, b: *const SsSpectrum, out: *mut f64) -> SsStatus {
    guard(|| {
        let (a, b) = (&borrow(a, "first spectrum")?.0, &borrow(b, "second spectrum")?.0);
        if out.is_null() {
            return Err(null("output value"));
        }
        *out = specsmooth::rmse(a, b, a.full_range())?;
        Ok(())
    })
}

/// Centroid, FWHM and height of the highest peak between indices
/// `start` and `end` inclusive.
///
/// # Safety
/// `spectrum` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ss_measure_peak(
    spectrum: *const SsSpectrum,
    start: usize,
    end: usize,
    out: *mut SsPeak,
) -> SsStatus {
    guard(|| {
        let spectrum = &borrow(spectrum, "spectrum")?.0;
        let m = specsmooth::measure_peak(spectrum, ChannelRange::new(start, end)?)?;
        if out.is_null() {
            return Err(null("output peak"));
        }
        *out = SsPeak {
            centroid: m.centroid,
            fwhm: m.fwhm,
            height: m.height,
        };
        Ok(())
    })
}
