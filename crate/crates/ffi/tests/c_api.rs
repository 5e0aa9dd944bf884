use std::ffi::{CStr, CString};
use std::ptr;

use lpegn_ffi::*;

fn last_error() -> String {
    let p = lpegn_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn basis_round_trip() {
    unsafe {
        let mut b = ptr::null_mut();
        assert_eq!(lpegn_basis_new(2, 2, 5, ptr::null(), 0, &mut b), LpegnStatus::Ok);
        assert_eq!(lpegn_basis_len(b), 15);
        let (mut rows, mut cols) = (0, 0);
        assert_eq!(lpegn_basis_shape(b, &mut rows, &mut cols), LpegnStatus::Ok);
        assert_eq!((rows, cols), (25, 25));
        let mut buf = vec![0.0; 625];
        assert_eq!(lpegn_basis_tensor(b, 0, buf.as_mut_ptr(), buf.len()), LpegnStatus::Ok);
        assert!(buf.iter().any(|&v| v != 0.0));
        assert_eq!(lpegn_basis_tensor(b, 0, buf.as_mut_ptr(), 10), LpegnStatus::BufferTooSmall);
        assert_eq!(lpegn_basis_tensor(b, 15, buf.as_mut_ptr(), buf.len()), LpegnStatus::InvalidArgument);
        lpegn_basis_free(b);

        let drop = [4usize];
        assert_eq!(lpegn_basis_new(1, 1, 5, drop.as_ptr(), 1, &mut b), LpegnStatus::Ok);
        assert_eq!(lpegn_basis_len(b), 5);
        lpegn_basis_free(b);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut b = ptr::null_mut();
        let all = [0usize, 1];
        assert_eq!(lpegn_basis_new(1, 1, 2, all.as_ptr(), 2, &mut b), LpegnStatus::Degenerate);
        assert!(last_error().contains("degenerate"));
        assert_eq!(lpegn_basis_new(1, 1, 2, ptr::null(), 0, ptr::null_mut()), LpegnStatus::NullPointer);
        assert_eq!(lpegn_basis_len(ptr::null()), 0);
        let path = CString::new("/nonexistent/model.json").unwrap();
        let mut m = ptr::null_mut();
        assert_eq!(lpegn_model_load(path.as_ptr(), &mut m), LpegnStatus::Io);
        assert!(m.is_null());
    }
}

#[test]
fn model_logits_and_checkpoint() {
    use lpegn::graph::{FeatureEncoding, NodeFeatures};
    use lpegn::layers::ModelConfig;

    let enc = FeatureEncoding {
        node: NodeFeatures::Labels { classes: 2 },
        edge_classes: 0,
    };
    let mut cfg = ModelConfig::lpegn(enc, 3, &[1, 2], 4, 1, 1).unwrap();
    cfg.share_bucket_weights = true;
    let json = CString::new(serde_json::to_string(&cfg).unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("m.json").to_str().unwrap()).unwrap();
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(lpegn_model_from_config(json.as_ptr(), &mut m), LpegnStatus::Ok);
        assert_eq!(lpegn_model_num_classes(m), 3);

        let ids = [10usize, 20, 30, 40];
        let edges = [10usize, 20, 20, 30, 30, 10, 30, 40];
        let labels = [0usize, 1, 0, 1];
        let mut g = ptr::null_mut();
        assert_eq!(lpegn_graph_new(ids.as_ptr(), 4, edges.as_ptr(), 4, labels.as_ptr(), &mut g), LpegnStatus::Ok);
        assert_eq!(lpegn_graph_num_nodes(g), 4);
        assert_eq!(lpegn_graph_num_edges(g), 4);

        let mut a = [0.0; 3];
        assert_eq!(lpegn_model_logits(m, g, a.as_mut_ptr(), 3), LpegnStatus::Ok);
        assert_eq!(lpegn_model_save(m, path.as_ptr()), LpegnStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(lpegn_model_load(path.as_ptr(), &mut back), LpegnStatus::Ok);
        let mut b = [0.0; 3];
        assert_eq!(lpegn_model_logits(back, g, b.as_mut_ptr(), 3), LpegnStatus::Ok);
        assert_eq!(a, b);

        let bad = [10usize, 99];
        let mut h = ptr::null_mut();
        assert_eq!(lpegn_graph_new(ids.as_ptr(), 4, bad.as_ptr(), 1, ptr::null(), &mut h), LpegnStatus::InvalidArgument);

        lpegn_graph_free(g);
        lpegn_model_free(m);
        lpegn_model_free(back);
    }
}

#[test]
fn header_declares_the_api() {
    let header = include_str!("../include/lpegn.h");
    for f in [
        "lpegn_last_error",
        "lpegn_version",
        "lpegn_basis_new",
        "lpegn_basis_tensor",
        "lpegn_basis_free",
        "lpegn_graph_new",
        "lpegn_graph_free",
        "lpegn_model_from_config",
        "lpegn_model_load",
        "lpegn_model_save",
        "lpegn_model_logits",
        "lpegn_model_free",
    ] {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
    assert!(header.contains("typedef struct LpegnModel LpegnModel;"));
    let v = unsafe { CStr::from_ptr(lpegn_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"lpegn.h\"\nint main(void) {\n  LpegnBasis *b = 0;\n  size_t d[1] = {0};\n  \
         LpegnStatus s = lpegn_basis_new(1, 1, 3, d, 0, &b);\n  lpegn_basis_free(b);\n  return s == LPEGN_STATUS_OK ? 0 : 1;\n}\n",
    )
    .unwrap();
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let status = std::process::Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I", include])
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| std::process::Command::new(c).arg("--version").output().is_ok())
        .ok_or(())
}
