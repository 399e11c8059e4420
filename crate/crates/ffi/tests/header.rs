//! Checks the generated header and, when a C compiler is available, builds
//! and runs a small C client against the shared library.

use std::path::{Path, PathBuf};
use std::process::Command;

fn header_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include")
}

const EXPORTS: &[&str] = &[
    "ss_last_error_message",
    "ss_version",
    "ss_phi",
    "ss_spectrum_new",
    "ss_spectrum_load",
    "ss_spectrum_save",
    "ss_spectrum_len",
    "ss_spectrum_copy_counts",
    "ss_spectrum_free",
    "ss_smooth_config_default",
    "ss_smooth_bspline",
    "ss_convolve_smooth",
    "ss_trace_level_count",
    "ss_trace_selected_level",
    "ss_trace_record",
    "ss_trace_free",
    "ss_synth_benchmark",
    "ss_rmse",
    "ss_measure_peak",
];

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(header_dir().join("specsmooth.h")).unwrap();
    assert!(header.contains("#ifndef SPECSMOOTH_H"));
    assert!(header.contains("typedef struct SsSpectrum SsSpectrum;"));
    assert!(header.contains("typedef struct SsTrace SsTrace;"));
    assert!(header.contains("SS_STATUS_OK = 0"));
    for name in EXPORTS {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
}

const CLIENT: &str = r#"
#include <stdio.h>
#include "specsmooth.h"

int main(void) {
    double counts[64];
    for (int i = 0; i < 64; i++) counts[i] = 100.0 + (i == 32 ? 400.0 : 0.0);
    SsSpectrum *s = NULL, *out = NULL;
    SsTrace *trace = NULL;
    if (ss_spectrum_new(counts, 64, &s) != SS_STATUS_OK) return 1;
    SsSmoothConfig cfg = ss_smooth_config_default();
    if (ss_smooth_bspline(s, &cfg, &out, &trace) != SS_STATUS_OK) return 2;
    if (ss_spectrum_len(out) != 64) return 3;
    if (ss_trace_selected_level(trace) == 0) return 4;
    if (ss_spectrum_new(counts, 3, &s) != SS_STATUS_INVALID_ARGUMENT) return 5;
    if (ss_last_error_message() == NULL) return 6;
    printf("levels=%zu selected=%u\n", ss_trace_level_count(trace), ss_trace_selected_level(trace));
    ss_trace_free(trace);
    ss_spectrum_free(out);
    ss_spectrum_free(s);
    return 0;
}
"#;

fn have_cc() -> bool {
    Command::new("cc")
        .arg("--version")
        .output()
        .is_ok_and(|o| o.status.success())
}

// target/<profile>/deps/<test binary> -> target/<profile>
fn library_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_client_compiles_links_and_runs() {
    if !have_cc() {
        eprintln!("no C compiler found, skipping");
        return;
    }
    let lib_dir = library_dir();
    let shared = lib_dir.join(format!(
        "{}specsmooth_ffi{}",
        std::env::consts::DLL_PREFIX,
        std::env::consts::DLL_SUFFIX
    ));
    let dir = tempfile::tempdir().unwrap();
    let source = dir.path().join("client.c");
    std::fs::write(&source, CLIENT).unwrap();

    let syntax = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header_dir())
        .arg(&source)
        .output()
        .unwrap();
    assert!(syntax.status.success(), "{}", String::from_utf8_lossy(&syntax.stderr));

    if !shared.exists() {
        eprintln!("{} not built, skipping link step", shared.display());
        return;
    }
    let binary = dir.path().join("client");
    let build = Command::new("cc")
        .args(["-std=c99", "-I"])
        .arg(header_dir())
        .arg(&source)
        .arg("-o")
        .arg(&binary)
        .arg(format!("-L{}", lib_dir.display()))
        .arg(format!("-Wl,-rpath,{}", lib_dir.display()))
        .arg("-lspecsmooth_ffi")
        .output()
        .unwrap();
    assert!(build.status.success(), "{}", String::from_utf8_lossy(&build.stderr));
    let run = Command::new(&binary).output().unwrap();
    assert!(run.status.success(), "client exited with {:?}", run.status.code());
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("levels="));
}
