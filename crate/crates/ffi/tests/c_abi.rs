use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use plaqed_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    unsafe {
        plaqed_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn cluster(name: &str) -> *mut PlaqedCluster {
    let name = CString::new(name).unwrap();
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { plaqed_cluster_new(name.as_ptr(), &mut c) }, PlaqedStatus::Ok);
    c
}

#[test]
fn cluster_lifecycle_and_coverings() {
    for (name, n, count) in [("16", 16, 6), ("20", 20, 4)] {
        let c = cluster(name);
        let mut sites = 0;
        let mut cov = 0;
        unsafe {
            assert_eq!(plaqed_cluster_n_sites(c, &mut sites), PlaqedStatus::Ok);
            assert_eq!(plaqed_count_coverings(c, &mut cov), PlaqedStatus::Ok);
            plaqed_cluster_free(c);
        }
        assert_eq!((sites, cov), (n, count));
    }
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { plaqed_cluster_from_vectors(2, 2, -2, 2, &mut c) }, PlaqedStatus::Ok);
    let mut sites = 0;
    unsafe {
        plaqed_cluster_n_sites(c, &mut sites);
        plaqed_cluster_free(c);
        plaqed_cluster_free(ptr::null_mut());
    }
    assert_eq!(sites, 8);
}

#[test]
fn energies_match_core() {
    let c = cluster("16");
    let k = CString::new("0,0").unwrap();
    let mut e = [0.0; 2];
    let s = unsafe { plaqed_lowest_energies(c, 1.0, 0.0, 0.0, 0, k.as_ptr(), 2, e.as_mut_ptr()) };
    assert_eq!(s, PlaqedStatus::Ok, "{}", last_error());
    // nearest-neighbor Heisenberg model on the 4 x 4 torus
    assert!((e[0] + 11.228483208428854).abs() < 1e-9, "{e:?}");
    let mut plain = [0.0; 1];
    let s = unsafe { plaqed_lowest_energies(c, 1.0, 0.0, 0.0, 0, ptr::null(), 1, plain.as_mut_ptr()) };
    assert_eq!(s, PlaqedStatus::Ok);
    assert!((plain[0] - e[0]).abs() < 1e-9);
    unsafe { plaqed_cluster_free(c) };
}

#[test]
fn errors_are_reported() {
    let bad = CString::new("17").unwrap();
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { plaqed_cluster_new(bad.as_ptr(), &mut c) }, PlaqedStatus::InvalidCluster);
    assert!(c.is_null());
    assert!(last_error().contains("17"));
    assert_eq!(unsafe { plaqed_cluster_new(ptr::null(), &mut c) }, PlaqedStatus::NullPointer);
    assert_eq!(unsafe { plaqed_cluster_from_vectors(1, 0, 2, 0, &mut c) }, PlaqedStatus::InvalidCluster);

    let c = cluster("16");
    let k = CString::new("pi/3,0").unwrap();
    let mut e = [0.0; 1];
    let s = unsafe { plaqed_lowest_energies(c, 1.0, 0.0, 0.0, 0, k.as_ptr(), 1, e.as_mut_ptr()) };
    assert_eq!(s, PlaqedStatus::InvalidArgument);
    let s = unsafe { plaqed_lowest_energies(c, 1.0, 2.0, 0.0, 0, ptr::null(), 1, e.as_mut_ptr()) };
    assert_eq!(s, PlaqedStatus::InvalidArgument);
    assert!(!last_error().is_empty());
    let s = unsafe { plaqed_lowest_energies(c, 1.0, 0.0, 0.0, 32, ptr::null(), 1, e.as_mut_ptr()) };
    assert_eq!(s, PlaqedStatus::InvalidArgument);
    // the fully polarized sector has a single state
    let mut two = [0.0; 2];
    let s = unsafe { plaqed_lowest_energies(c, 1.0, 0.0, 0.0, 16, ptr::null(), 2, two.as_mut_ptr()) };
    assert_eq!(s, PlaqedStatus::BufferTooSmall);
    let s = unsafe { plaqed_lowest_energies(ptr::null(), 1.0, 0.0, 0.0, 0, ptr::null(), 1, e.as_mut_ptr()) };
    assert_eq!(s, PlaqedStatus::NullPointer);
    unsafe { plaqed_cluster_free(c) };
    let v = unsafe { CStr::from_ptr(plaqed_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

/// Compile and run a C program against the generated header and the static
/// library. Skipped when no C compiler is around.
#[test]
fn header_compiles_and_links() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include").join("plaqed.h");
    assert!(header.exists(), "header not generated");
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().and_then(|p| p.parent()).unwrap().to_path_buf();
    let lib = lib_dir.join("libplaqed_ffi.a");
    if Command::new("cc").arg("--version").output().is_err() || !lib.exists() {
        eprintln!("skipping: no cc or {} missing", lib.display());
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "plaqed.h"
int main(void) {
    PlaqedCluster *c = NULL;
    size_t n = 0;
    if (plaqed_cluster_new("20", &c) != PLAQED_STATUS_OK) return 1;
    if (plaqed_count_coverings(c, &n) != PLAQED_STATUS_OK) return 2;
    plaqed_cluster_free(c);
    if (plaqed_cluster_new("nope", &c) != PLAQED_STATUS_INVALID_CLUSTER) return 3;
    char msg[128];
    plaqed_last_error_message(msg, sizeof msg);
    printf("%zu %s\n", n, msg);
    return n == 4 ? 0 : 4;
}
"#,
    )
    .unwrap();
    let bin = tmp.path().join("smoke");
    let out = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "{:?}", run);
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("4 "));
}
