use std::ffi::{CStr, CString};
use std::ptr;

use dtud_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(dtud_last_error()) }.to_string_lossy().into_owned()
}

fn training_csv(dir: &std::path::Path) -> CString {
    let path = dir.join("train.csv");
    let mut text = String::from("x,y,label\n");
    for i in 0..20 {
        let x = i as f64 * 0.5;
        let label = if x <= 4.0 { "g" } else { "p" };
        text.push_str(&format!("{x},{},{label}\n", (i % 3) as f64));
    }
    std::fs::write(&path, text).unwrap();
    CString::new(path.to_str().unwrap()).unwrap()
}

#[test]
fn train_classify_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = training_csv(dir.path());
    unsafe {
        let mut ds = ptr::null_mut();
        assert_eq!(dtud_dataset_load(path.as_ptr(), 0.0, &mut ds), DtudStatus::Ok);
        assert_eq!(dtud_dataset_len(ds), 20);

        let mut tree = ptr::null_mut();
        assert_eq!(dtud_tree_build(ds, 4, 10, &mut tree), DtudStatus::Ok);
        assert_eq!(dtud_tree_n_attributes(tree), 2);
        assert_eq!(dtud_tree_n_labels(tree), 2);
        let name = dtud_tree_label(tree, 0);
        assert_eq!(CStr::from_ptr(name).to_str().unwrap(), "g");
        dtud_string_free(name);
        assert!(dtud_tree_label(tree, 2).is_null());

        let mut lp = [0.0; 2];
        assert_eq!(dtud_tree_classify(tree, [1.0, 1.0].as_ptr(), 2, 0.0, lp.as_mut_ptr(), 2), DtudStatus::Ok);
        assert_eq!(lp, [1.0, 0.0]);
        assert_eq!(dtud_tree_classify(tree, [8.0, 1.0].as_ptr(), 2, 0.0, lp.as_mut_ptr(), 2), DtudStatus::Ok);
        assert_eq!(lp, [0.0, 1.0]);
        assert_eq!(
            dtud_tree_classify(tree, [8.0, 1.0].as_ptr(), 2, 0.0, lp.as_mut_ptr(), 3),
            DtudStatus::InvalidParameter
        );
        assert_eq!(
            dtud_tree_classify(tree, [8.0].as_ptr(), 1, 0.0, lp.as_mut_ptr(), 2),
            DtudStatus::Schema
        );

        let mut json = ptr::null_mut();
        assert_eq!(dtud_tree_to_json(tree, &mut json), DtudStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(dtud_tree_from_json(json, &mut back), DtudStatus::Ok);
        let mut json2 = ptr::null_mut();
        assert_eq!(dtud_tree_to_json(back, &mut json2), DtudStatus::Ok);
        assert_eq!(CStr::from_ptr(json), CStr::from_ptr(json2));

        dtud_string_free(json);
        dtud_string_free(json2);
        dtud_tree_free(back);
        dtud_tree_free(tree);
        dtud_dataset_free(ds);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let missing = CString::new("/nonexistent/dir/file.csv").unwrap();
        let mut ds = ptr::null_mut();
        assert_eq!(dtud_dataset_load(missing.as_ptr(), 0.0, &mut ds), DtudStatus::Io);
        assert!(last_error().contains("/nonexistent/dir/file.csv"));
        assert!(ds.is_null());

        assert_eq!(dtud_dataset_load(ptr::null(), 0.0, &mut ds), DtudStatus::NullPointer);
        assert_eq!(dtud_dataset_load(missing.as_ptr(), 0.0, ptr::null_mut()), DtudStatus::NullPointer);

        let bad = CString::new("{\"attributes\":").unwrap();
        let mut tree = ptr::null_mut();
        assert_eq!(dtud_tree_from_json(bad.as_ptr(), &mut tree), DtudStatus::Format);
        assert!(!last_error().is_empty());

        // null handles are tolerated by the free functions and accessors
        dtud_tree_free(ptr::null_mut());
        dtud_dataset_free(ptr::null_mut());
        dtud_morph_free(ptr::null_mut());
        dtud_string_free(ptr::null_mut());
        assert_eq!(dtud_tree_n_labels(ptr::null()), 0);
        assert!(dtud_morph_condition(ptr::null()).is_nan());
    }
}

#[test]
fn morph_translation() {
    let original = [
        0.0, 0.0, 0.0, 10.0, 0.0, 0.0, 0.0, 10.0, 0.0, 0.0, 0.0, 10.0, 10.0, 10.0, 10.0,
    ];
    let displaced: Vec<f64> = original
        .chunks(3)
        .flat_map(|p| [p[0] + 1.0, p[1] - 2.0, p[2] + 0.5])
        .collect();
    unsafe {
        let mut map = ptr::null_mut();
        assert_eq!(dtud_morph_fit(original.as_ptr(), displaced.as_ptr(), 5, 0.0, &mut map), DtudStatus::Ok);
        assert!(dtud_morph_condition(map).is_finite());
        let mut nodes = [3.0, 4.0, 5.0, -1.0, 20.0, 7.0];
        let src = nodes;
        assert_eq!(dtud_morph_apply(map, src.as_ptr(), 2, nodes.as_mut_ptr()), DtudStatus::Ok);
        let want = [4.0, 2.0, 5.5, 0.0, 18.0, 7.5];
        for (a, b) in nodes.iter().zip(want) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        dtud_morph_free(map);

        let mut dup = ptr::null_mut();
        let same = [0.0; 12];
        assert_eq!(dtud_morph_fit(same.as_ptr(), same.as_ptr(), 4, 0.0, &mut dup), DtudStatus::InvalidParameter);
        assert!(dup.is_null());
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/dtud.h")).unwrap();
    for f in [
        "dtud_last_error",
        "dtud_version",
        "dtud_string_free",
        "dtud_dataset_load",
        "dtud_dataset_free",
        "dtud_tree_build",
        "dtud_tree_from_json",
        "dtud_tree_to_json",
        "dtud_tree_classify",
        "dtud_tree_free",
        "dtud_morph_fit",
        "dtud_morph_apply",
        "dtud_morph_free",
    ] {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
    assert!(header.contains("typedef struct DtudTree DtudTree;"));
    assert!(header.contains("DTUD_STATUS_OK = 0"));
    let v = unsafe { CStr::from_ptr(dtud_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/dtud.h");
    let Ok(status) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", header])
        .status()
    else {
        eprintln!("no C compiler on PATH; skipping");
        return;
    };
    assert!(status.success());
}
