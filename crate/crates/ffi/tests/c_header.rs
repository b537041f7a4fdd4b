//! Compiles a C program against the generated header and the shared
//! library, then runs it.

use std::path::{Path, PathBuf};
use std::process::Command;

fn target_dir() -> PathBuf {
    // tests run from <target>/<profile>/deps/<name>-<hash>
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/masrest.h")).unwrap();
    for f in [
        "masrest_system_new",
        "masrest_system_from_project",
        "masrest_system_free",
        "masrest_spawn_agent",
        "masrest_kill_agent",
        "masrest_send_message",
        "masrest_run_until_quiescent",
        "masrest_request",
        "masrest_string_free",
        "masrest_last_error",
        "masrest_status_name",
    ] {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
    assert!(header.contains("typedef struct MasrestSystem MasrestSystem;"));
}

#[test]
fn c_program_links_and_runs() {
    let lib_dir = target_dir();
    let so = lib_dir.join(if cfg!(target_os = "macos") { "libmasrest_ffi.dylib" } else { "libmasrest_ffi.so" });
    if cfg!(windows) || !so.exists() {
        eprintln!("shared library not at {}; skipping C build", so.display());
        return;
    }
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping C build");
        return;
    };
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let out = tempfile_path("masrest_smoke");
    let status = Command::new(cc)
        .arg(manifest.join("tests/smoke.c"))
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg("-L")
        .arg(&lib_dir)
        .arg("-lmasrest_ffi")
        .arg("-o")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let run = Command::new(&out).env("LD_LIBRARY_PATH", &lib_dir).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "ok");
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .ok_or(())
}

fn tempfile_path(stem: &str) -> PathBuf {
    std::env::temp_dir().join(format!("{stem}_{}", std::process::id()))
}
