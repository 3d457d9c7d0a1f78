//! C ABI over the berrymorph engine.
//!
//! Every fallible call returns a [`BmStatus`]; on failure the message is
//! available from [`bm_last_error`] on the same thread until the next call.
//! Handles are opaque and owned by the caller until passed to their `_free`
//! function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use berrymorph::architecture::{analyze_cluster, ArchitectureConfig};
use berrymorph::berry_filter::{run_filter_pipeline, FilterConfig, FilterOutcome, ReferenceSpec};
use berrymorph::mask_io::{decode_rle, load_mask_file, parse_mask_file, MaskFile, RleMask};
use berrymorph::stats::repeatability;
use berrymorph::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Io = 4,
    /// Input was well formed but too small or degenerate for the request.
    Data = 5,
    OutOfRange = 6,
    NotFound = 7,
    Internal = 8,
    Panic = 9,
}

/// Parsed mask file.
pub struct BmMaskFile(MaskFile);

/// Output of the berry filter for one mask file.
pub struct BmFilterResult(FilterOutcome);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BmFilterCounts {
    pub input: usize,
    pub removed_multi: usize,
    pub removed_metric: usize,
    pub removed_efd_pca: usize,
    pub kept: usize,
}

/// Pixel-unit geometry of one kept berry.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BmBerryMetrics {
    pub area: f64,
    pub perimeter: f64,
    pub length: f64,
    pub width: f64,
    pub aspect_ratio: f64,
    pub circularity: f64,
    pub centroid_x: f64,
    pub centroid_y: f64,
}

/// Cluster descriptors in mm when a scale is known, otherwise pixels.
/// `ecdf` is valid only when `has_ecdf` is nonzero.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BmClusterSummary {
    pub berry_count: usize,
    pub compactness: f64,
    pub berry_area: f64,
    pub cluster_area: f64,
    pub cluster_length: f64,
    pub cluster_width: f64,
    pub cluster_perimeter: f64,
    pub cluster_aspect: f64,
    pub scale: f64,
    pub has_ecdf: u8,
    /// x25, x50, x75, y25, y50, y75.
    pub ecdf: [f64; 6],
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BmRepeatability {
    pub var_g: f64,
    pub var_e: f64,
    pub repeatability: f64,
    pub n_groups: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> BmStatus {
    match e {
        Error::InvalidArgument(_) | Error::Config(_) => BmStatus::InvalidArgument,
        Error::MalformedRle(_) | Error::Parse { .. } | Error::Validation { .. } | Error::Json(_) | Error::Csv(_) => {
            BmStatus::Parse
        }
        Error::Io(_) | Error::Image(_) => BmStatus::Io,
        Error::EmptyMask
        | Error::DimensionMismatch(_)
        | Error::Degenerate(_)
        | Error::InsufficientData(_)
        | Error::Calibration(_) => BmStatus::Data,
        _ => BmStatus::Internal,
    }
}

struct Failure(BmStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> BmStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BmStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal panic: {msg}"));
            BmStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(BmStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(BmStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn bm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next library call on the same thread.
#[no_mangle]
pub extern "C" fn bm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn bm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses mask-file JSON.
///
/// # Safety
/// `json` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn bm_mask_file_parse(json: *const c_char, out: *mut *mut BmMaskFile) -> BmStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let text = str_arg(json, "json")?;
        let file = parse_mask_file(text, Path::new("<memory>"))?;
        *out = Box::into_raw(Box::new(BmMaskFile(file)));
        Ok(())
    })
}

/// Loads a mask file from disk.
///
/// # Safety
/// `path` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn bm_mask_file_load(path: *const c_char, out: *mut *mut BmMaskFile) -> BmStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let file = load_mask_file(Path::new(str_arg(path, "path")?))?;
        *out = Box::into_raw(Box::new(BmMaskFile(file)));
        Ok(())
    })
}

/// Number of mask records.
///
/// # Safety
/// `file` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn bm_mask_file_len(file: *const BmMaskFile, out: *mut usize) -> BmStatus {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(file, "file")?.0.masks.len();
        Ok(())
    })
}

/// # Safety
/// `file` comes from this library and is not used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn bm_mask_file_free(file: *mut BmMaskFile) {
    if !file.is_null() {
        drop(Box::from_raw(file));
    }
}

/// Decodes column-major COCO run lengths into a row-major 0/1 buffer of
/// `height * width` bytes.
///
/// # Safety
/// `counts` holds `n_counts` values; `buf` holds `buf_len` bytes.
#[no_mangle]
pub unsafe extern "C" fn bm_rle_decode(
    counts: *const u32,
    n_counts: usize,
    height: usize,
    width: usize,
    buf: *mut u8,
    buf_len: usize,
) -> BmStatus {
    guard(|| {
        if counts.is_null() && n_counts > 0 {
            return Err(null("counts"));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        let need = height
            .checked_mul(width)
            .ok_or_else(|| Failure(BmStatus::InvalidArgument, "height * width overflows".to_string()))?;
        if buf_len < need {
            return Err(Failure(BmStatus::OutOfRange, format!("buffer holds {buf_len} bytes, need {need}")));
        }
        let counts = if n_counts == 0 { &[][..] } else { std::slice::from_raw_parts(counts, n_counts) };
        let grid = decode_rle(&RleMask {
            height,
            width,
            counts: counts.to_vec(),
        })?;
        let out = std::slice::from_raw_parts_mut(buf, need);
        for r in 0..height {
            for c in 0..width {
                out[r * width + c] = u8::from(grid.get(r, c));
            }
        }
        Ok(())
    })
}

/// Runs the berry filter. `config_json` may be null for defaults; otherwise
/// it is a JSON object of filter settings. A nonzero `detect_reference`
/// looks for the scale reference with default settings.
///
/// # Safety
/// `file` is a live handle; `config_json` is null or NUL-terminated; `out`
/// is writable.
#[no_mangle]
pub unsafe extern "C" fn bm_filter_run(
    file: *const BmMaskFile,
    config_json: *const c_char,
    detect_reference: u8,
    out: *mut *mut BmFilterResult,
) -> BmStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let file = ref_arg(file, "file")?;
        let cfg: FilterConfig = if config_json.is_null() {
            FilterConfig::default()
        } else {
            serde_json::from_str(str_arg(config_json, "config_json")?)
                .map_err(|e| Failure(BmStatus::InvalidArgument, format!("filter config: {e}")))?
        };
        let reference = (detect_reference != 0).then(ReferenceSpec::default);
        let outcome = run_filter_pipeline(&file.0, &cfg, reference.as_ref())?;
        *out = Box::into_raw(Box::new(BmFilterResult(outcome)));
        Ok(())
    })
}

/// # Safety
/// `res` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn bm_filter_counts(res: *const BmFilterResult, out: *mut BmFilterCounts) -> BmStatus {
    guard(|| {
        let r = &ref_arg(res, "res")?.0.report;
        *out_arg(out, "out")? = BmFilterCounts {
            input: r.input,
            removed_multi: r.removed_multi,
            removed_metric: r.removed_metric,
            removed_efd_pca: r.removed_efd_pca,
            kept: r.kept,
        };
        Ok(())
    })
}

/// Metrics of the `index`-th kept berry.
///
/// # Safety
/// `res` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn bm_filter_berry(res: *const BmFilterResult, index: usize, out: *mut BmBerryMetrics) -> BmStatus {
    guard(|| {
        let res = ref_arg(res, "res")?;
        let out = out_arg(out, "out")?;
        let b = res.0.berries.get(index).ok_or_else(|| {
            Failure(BmStatus::OutOfRange, format!("berry {index} of {}", res.0.berries.len()))
        })?;
        let m = b.metrics;
        *out = BmBerryMetrics {
            area: m.area,
            perimeter: m.perimeter,
            length: m.length,
            width: m.width,
            aspect_ratio: m.aspect_ratio,
            circularity: m.circularity,
            centroid_x: m.centroid.0,
            centroid_y: m.centroid.1,
        };
        Ok(())
    })
}

/// Scale from the detected reference; `NotFound` when none was detected.
///
/// # Safety
/// `res` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn bm_filter_mm_per_px(res: *const BmFilterResult, out: *mut f64) -> BmStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let cal = ref_arg(res, "res")?.0.calibration.as_ref();
        *out = cal
            .ok_or_else(|| Failure(BmStatus::NotFound, "no reference detected".to_string()))?
            .mm_per_px;
        Ok(())
    })
}

/// Filter report (counts, dispositions, warnings) as JSON. Free the string
/// with [`bm_string_free`].
///
/// # Safety
/// `res` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn bm_filter_report_json(res: *const BmFilterResult, out: *mut *mut c_char) -> BmStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let text = serde_json::to_string(&ref_arg(res, "res")?.0.report).map_err(Error::from)?;
        *out = CString::new(text)
            .map_err(|e| Failure(BmStatus::Internal, e.to_string()))?
            .into_raw();
        Ok(())
    })
}

/// Cluster architecture of the kept berries. `mm_per_px <= 0` uses the
/// detected reference if any, otherwise pixels. `concavity <= 0` uses the
/// default.
///
/// # Safety
/// `res` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn bm_cluster_summary(
    res: *const BmFilterResult,
    mm_per_px: f64,
    concavity: f64,
    out: *mut BmClusterSummary,
) -> BmStatus {
    guard(|| {
        let res = &ref_arg(res, "res")?.0;
        let out = out_arg(out, "out")?;
        let scale = if mm_per_px > 0.0 {
            Some(mm_per_px)
        } else {
            res.calibration.as_ref().map(|c| c.mm_per_px)
        };
        let mut cfg = ArchitectureConfig::default();
        if concavity > 0.0 {
            cfg.concavity = concavity;
        }
        let a = analyze_cluster(&res.berries, scale, &cfg)?;
        *out = BmClusterSummary {
            berry_count: a.berry_count,
            compactness: a.compactness,
            berry_area: a.berry_area,
            cluster_area: a.cluster_area,
            cluster_length: a.cluster_length,
            cluster_width: a.cluster_width,
            cluster_perimeter: a.cluster_perimeter,
            cluster_aspect: a.cluster_aspect,
            scale: a.scale,
            has_ecdf: u8::from(a.ecdf_desc.is_some()),
            ecdf: a.ecdf_desc.unwrap_or([0.0; 6]),
        };
        Ok(())
    })
}

/// Repeatability of `values` grouped by the integer genotype ids in `groups`.
///
/// # Safety
/// `values` and `groups` each hold `n` elements; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn bm_repeatability(
    values: *const f64,
    groups: *const u32,
    n: usize,
    out: *mut BmRepeatability,
) -> BmStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if n > 0 && (values.is_null() || groups.is_null()) {
            return Err(null("values or groups"));
        }
        let (v, g) = if n == 0 {
            (&[][..], &[][..])
        } else {
            (std::slice::from_raw_parts(values, n), std::slice::from_raw_parts(groups, n))
        };
        let labels: Vec<String> = g.iter().map(|x| x.to_string()).collect();
        let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
        let r = repeatability(v, &refs)?;
        *out = BmRepeatability {
            var_g: r.var_g,
            var_e: r.var_e,
            repeatability: r.repeatability,
            n_groups: r.n_groups,
        };
        Ok(())
    })
}

/// # Safety
/// `res` comes from this library and is not used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn bm_filter_result_free(res: *mut BmFilterResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panics_become_status() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, BmStatus::Panic);
        let msg = unsafe { CStr::from_ptr(bm_last_error()) }.to_str().unwrap();
        assert!(msg.contains("boom"));
        assert_eq!(guard(|| Ok(())), BmStatus::Ok);
        assert!(bm_last_error().is_null());
    }

    #[test]
    fn error_classes_map_to_status() {
        assert_eq!(status_of(&Error::Config("x".into())), BmStatus::InvalidArgument);
        assert_eq!(status_of(&Error::MalformedRle("x".into())), BmStatus::Parse);
        assert_eq!(status_of(&Error::EmptyMask), BmStatus::Data);
        assert_eq!(status_of(&Error::Io(std::io::Error::other("x"))), BmStatus::Io);
    }
}
