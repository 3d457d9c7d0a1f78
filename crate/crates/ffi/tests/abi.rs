use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use berrymorph::mask_io::write_mask_file;
use berrymorph::synth::{gen_scene_2d, SceneSpec};
use berrymorph_ffi::*;

fn last_error() -> String {
    let p = bm_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn scene_json(seed: u64) -> (CString, usize) {
    let spec = SceneSpec {
        berry_count: 40,
        seed,
        ..SceneSpec::default()
    };
    let s = gen_scene_2d(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("scene.json");
    write_mask_file(&p, &s.mask_file).unwrap();
    (CString::new(std::fs::read_to_string(p).unwrap()).unwrap(), s.mask_file.masks.len())
}

#[test]
fn filter_and_summarise_through_the_abi() {
    let (json, n) = scene_json(3);
    unsafe {
        let mut file = ptr::null_mut();
        assert_eq!(bm_mask_file_parse(json.as_ptr(), &mut file), BmStatus::Ok);
        let mut len = 0;
        assert_eq!(bm_mask_file_len(file, &mut len), BmStatus::Ok);
        assert_eq!(len, n);

        let mut res = ptr::null_mut();
        assert_eq!(bm_filter_run(file, ptr::null(), 1, &mut res), BmStatus::Ok);
        let mut counts = BmFilterCounts::default();
        assert_eq!(bm_filter_counts(res, &mut counts), BmStatus::Ok);
        assert_eq!(counts.kept, 40);
        assert_eq!(
            counts.removed_multi + counts.removed_metric + counts.removed_efd_pca + counts.kept,
            counts.input
        );

        let mut m = BmBerryMetrics::default();
        assert_eq!(bm_filter_berry(res, 0, &mut m), BmStatus::Ok);
        assert!(m.area > 0.0 && m.circularity > 0.9);
        assert_eq!(bm_filter_berry(res, 40, &mut m), BmStatus::OutOfRange);
        assert!(last_error().contains("40"));

        let mut scale = 0.0;
        assert_eq!(bm_filter_mm_per_px(res, &mut scale), BmStatus::Ok);
        assert!(scale > 0.0);

        let mut summary = BmClusterSummary::default();
        assert_eq!(bm_cluster_summary(res, 0.0, 0.0, &mut summary), BmStatus::Ok);
        assert_eq!(summary.berry_count, 40);
        assert_eq!(summary.has_ecdf, 1);
        assert!(summary.compactness > 0.0 && summary.compactness <= 1.0);
        assert!((summary.scale - scale).abs() < 1e-12);

        let mut report = ptr::null_mut();
        assert_eq!(bm_filter_report_json(res, &mut report), BmStatus::Ok);
        let text = CStr::from_ptr(report).to_str().unwrap();
        assert!(text.contains("\"kept\":40"));
        bm_string_free(report);

        bm_filter_result_free(res);
        bm_mask_file_free(file);
    }
}

#[test]
fn errors_are_reported_not_raised() {
    unsafe {
        let mut file = ptr::null_mut();
        let bad = CString::new("{\"image_id\": 1}").unwrap();
        assert_eq!(bm_mask_file_parse(bad.as_ptr(), &mut file), BmStatus::Parse);
        assert!(file.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(bm_mask_file_parse(ptr::null(), &mut file), BmStatus::NullPointer);
        assert_eq!(bm_mask_file_len(ptr::null(), ptr::null_mut()), BmStatus::NullPointer);

        let missing = CString::new("/nonexistent/masks.json").unwrap();
        assert_ne!(bm_mask_file_load(missing.as_ptr(), &mut file), BmStatus::Ok);

        let (json, _) = scene_json(1);
        assert_eq!(bm_mask_file_parse(json.as_ptr(), &mut file), BmStatus::Ok);
        let mut res = ptr::null_mut();
        let cfg = CString::new("{\"pca_rounds\": 0}").unwrap();
        assert_eq!(bm_filter_run(file, cfg.as_ptr(), 0, &mut res), BmStatus::InvalidArgument);
        let cfg = CString::new("{\"no_such_field\": 1}").unwrap();
        assert_eq!(bm_filter_run(file, cfg.as_ptr(), 0, &mut res), BmStatus::InvalidArgument);
        assert!(res.is_null());
        assert_eq!(bm_filter_run(file, ptr::null(), 0, &mut res), BmStatus::Ok);
        let mut scale = 0.0;
        assert_eq!(bm_filter_mm_per_px(res, &mut scale), BmStatus::NotFound);
        bm_filter_result_free(res);
        bm_mask_file_free(file);
        bm_mask_file_free(ptr::null_mut());
        bm_filter_result_free(ptr::null_mut());
        bm_string_free(ptr::null_mut());
    }
}

#[test]
fn rle_decode_matches_column_major_runs() {
    // 3x2 image, column-major: [0,1,1 | 1,0,0]
    let counts = [1u32, 3, 2];
    let mut buf = [9u8; 6];
    unsafe {
        assert_eq!(bm_rle_decode(counts.as_ptr(), 3, 3, 2, buf.as_mut_ptr(), 6), BmStatus::Ok);
        assert_eq!(buf, [0, 1, 1, 0, 1, 0]);
        assert_eq!(bm_rle_decode(counts.as_ptr(), 3, 3, 2, buf.as_mut_ptr(), 5), BmStatus::OutOfRange);
        let short = [1u32, 2];
        assert_eq!(bm_rle_decode(short.as_ptr(), 2, 3, 2, buf.as_mut_ptr(), 6), BmStatus::Parse);
    }
}

#[test]
fn repeatability_through_the_abi() {
    let values = [1.0, 1.1, 0.9, 5.0, 5.2, 4.8, 9.0, 9.1, 8.9];
    let groups = [0u32, 0, 0, 1, 1, 1, 2, 2, 2];
    let mut out = BmRepeatability::default();
    unsafe {
        assert_eq!(bm_repeatability(values.as_ptr(), groups.as_ptr(), 9, &mut out), BmStatus::Ok);
        assert_eq!(out.n_groups, 3);
        assert!(out.repeatability > 0.99 && out.repeatability <= 1.0);
        assert_eq!(bm_repeatability(values.as_ptr(), groups.as_ptr(), 0, &mut out), BmStatus::Data);
    }
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(bm_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let header = format!("{dir}/include/berrymorph.h");
    let body = std::fs::read_to_string(&header).unwrap();
    for name in ["bm_filter_run", "bm_cluster_summary", "bm_last_error", "BM_STATUS_PANIC", "typedef struct BmMaskFile BmMaskFile"] {
        assert!(body.contains(name), "{name} missing from header");
    }
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"berrymorph.h\"\nint main(void) { BmFilterCounts c; BmStatus s = bm_filter_counts(NULL, &c); return s == BM_STATUS_NULL_POINTER ? 0 : 1; }\n",
    )
    .unwrap();
    for (cc, lang) in [("cc", "c"), ("c++", "c++")] {
        let out = Command::new(cc)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang, "-I", &format!("{dir}/include")])
            .arg(&src)
            .output()
            .expect("C compiler on PATH");
        assert!(out.status.success(), "{cc}: {}", String::from_utf8_lossy(&out.stderr));
    }
}
