use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use circgcn_ffi::*;

fn last_error() -> String {
    let p = cg_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn small_spec() -> CgSynthSpec {
    CgSynthSpec {
        n_circ: 30,
        n_disease: 6,
        seq_len: 40,
        ..cg_synth_spec_default()
    }
}

fn fast_config() -> CgConfig {
    CgConfig {
        epochs: 20,
        hidden_dim: 8,
        ..cg_config_default()
    }
}

#[test]
fn synth_cross_validate_predict_free() {
    let mut ds: *mut CgDataset = ptr::null_mut();
    let spec = small_spec();
    unsafe {
        assert_eq!(cg_dataset_synth(&spec, &mut ds), CgStatus::Ok);
        assert_eq!(cg_dataset_n_circ(ds), 30);
        assert_eq!(cg_dataset_n_disease(ds), 6);

        let cfg = fast_config();
        let mut avg = CgMetrics::default();
        let mut sd = CgMetrics::default();
        assert_eq!(cg_cross_validate(ds, &cfg, &mut avg, &mut sd), CgStatus::Ok);
        assert!((0.0..=1.0).contains(&avg.accuracy));
        assert!(sd.accuracy >= 0.0);
        if avg.auc_defined {
            assert!((0.0..=1.0).contains(&avg.auc));
        }

        let mut again = CgMetrics::default();
        assert_eq!(
            cg_cross_validate(ds, &cfg, &mut again, ptr::null_mut()),
            CgStatus::Ok
        );
        assert_eq!(again.accuracy, avg.accuracy);
        assert_eq!(again.auc.to_bits(), avg.auc.to_bits());

        let mut scores = vec![0.0; 30 * 6];
        let mut written = 0usize;
        let st = cg_predict(ds, &cfg, scores.as_mut_ptr(), scores.len(), &mut written);
        assert_eq!(st, CgStatus::Ok);
        assert_eq!(written, 180);
        assert!(scores.iter().all(|&s| s > 0.0 && s < 1.0));

        let mut tiny = [0.0; 4];
        let st = cg_predict(ds, &cfg, tiny.as_mut_ptr(), tiny.len(), &mut written);
        assert_eq!(st, CgStatus::BufferSize);
        assert_eq!(written, 180);
        assert!(last_error().contains("180"));

        cg_dataset_free(ds);
        cg_dataset_free(ptr::null_mut());
    }
}

#[test]
fn load_from_files_and_report_errors() {
    let dir = tempfile::tempdir().unwrap();
    let assoc = dir.path().join("a.csv");
    std::fs::write(&assoc, "circRNA,disease\nc1,d1\nc2,d1\nc2,d2\n").unwrap();
    let fasta = dir.path().join("s.fa");
    std::fs::write(&fasta, ">c1\nACGT\n>c2\nACGA\n").unwrap();
    let a = CString::new(assoc.to_str().unwrap()).unwrap();
    let f = CString::new(fasta.to_str().unwrap()).unwrap();
    let mut ds: *mut CgDataset = ptr::null_mut();
    unsafe {
        assert_eq!(
            cg_dataset_load(a.as_ptr(), f.as_ptr(), &mut ds),
            CgStatus::Ok
        );
        assert_eq!(cg_dataset_n_circ(ds), 2);
        assert_eq!(cg_dataset_n_disease(ds), 2);
        cg_dataset_free(ds);

        ds = ptr::null_mut();
        assert_eq!(
            cg_dataset_load(a.as_ptr(), ptr::null(), &mut ds),
            CgStatus::Ok
        );
        cg_dataset_free(ds);

        let missing = CString::new(dir.path().join("nope.csv").to_str().unwrap()).unwrap();
        assert_eq!(
            cg_dataset_load(missing.as_ptr(), ptr::null(), &mut ds),
            CgStatus::Io
        );
        assert!(last_error().contains("nope.csv"));

        std::fs::write(&fasta, ">c1\nACXT\n").unwrap();
        assert_eq!(
            cg_dataset_load(a.as_ptr(), f.as_ptr(), &mut ds),
            CgStatus::Data
        );
        assert!(last_error().contains(":2"));

        assert_eq!(
            cg_dataset_load(ptr::null(), ptr::null(), &mut ds),
            CgStatus::NullArgument
        );
    }
}

#[test]
fn invalid_config_is_usage_error() {
    let mut ds: *mut CgDataset = ptr::null_mut();
    let spec = small_spec();
    unsafe {
        assert_eq!(cg_dataset_synth(&spec, &mut ds), CgStatus::Ok);
        let cfg = CgConfig {
            k: 1,
            ..fast_config()
        };
        let mut avg = CgMetrics::default();
        assert_eq!(
            cg_cross_validate(ds, &cfg, &mut avg, ptr::null_mut()),
            CgStatus::Usage
        );
        let cfg = CgConfig {
            n_diseases: 99,
            ..fast_config()
        };
        assert_eq!(
            cg_cross_validate(ds, &cfg, &mut avg, ptr::null_mut()),
            CgStatus::Usage
        );
        cg_dataset_free(ds);
    }
    let bad = CgSynthSpec {
        n_blocks: 0,
        ..small_spec()
    };
    unsafe {
        assert_eq!(cg_dataset_synth(&bad, &mut ds), CgStatus::Usage);
    }
}

#[test]
fn scalar_helpers() {
    unsafe {
        assert_eq!(
            cg_nw_score(b"AC".as_ptr(), 2, b"AC".as_ptr(), 2, 1, -1, -1),
            2
        );
        assert_eq!(
            cg_nw_score(ptr::null(), 0, b"ACG".as_ptr(), 3, 1, -1, -1),
            -3
        );
        let scores = [0.9, 0.1, 0.5, 0.5];
        let labels = [1u8, 0, 1, 0];
        let mut out = 0.0;
        assert_eq!(
            cg_auc(scores.as_ptr(), labels.as_ptr(), 4, &mut out),
            CgStatus::Ok
        );
        assert_eq!(out, 0.875);
        let same = [1u8; 4];
        assert_eq!(
            cg_auc(scores.as_ptr(), same.as_ptr(), 4, &mut out),
            CgStatus::Data
        );
    }
    let v = unsafe { CStr::from_ptr(cg_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let header = std::fs::read_to_string(include.join("circgcn.h")).unwrap();
    for name in [
        "cg_dataset_load",
        "cg_cross_validate",
        "cg_predict",
        "cg_last_error",
        "CG_STATUS_OK",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"circgcn.h\"\n\
         int main(void) {\n\
           CgConfig c = cg_config_default();\n\
           CgDataset *ds = NULL;\n\
           CgSynthSpec s = cg_synth_spec_default();\n\
           if (cg_dataset_synth(&s, &ds) != CG_STATUS_OK) return 1;\n\
           CgMetrics m;\n\
           CgStatus st = cg_cross_validate(ds, &c, &m, NULL);\n\
           cg_dataset_free(ds);\n\
           return st == CG_STATUS_OK ? 0 : 1;\n\
         }\n",
    )
    .unwrap();
    let Ok(status) = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .status()
    else {
        eprintln!("no C compiler found; header syntax not checked");
        return;
    };
    assert!(status.success());
}
