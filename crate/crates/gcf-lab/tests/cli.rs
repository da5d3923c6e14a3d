//! End-to-end tests of the `gcf` binary: exit codes, artifact layout, and
//! byte-level determinism of repeated runs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn gcf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gcf"))
        .args(args)
        .output()
        .expect("spawning gcf")
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    if dir.exists() {
        fs::remove_dir_all(&dir).unwrap();
    }
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process terminated by signal")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Short capped run used wherever the tests need real artifacts quickly.
const SMALL_RUN: &str = "n = 1\nalpha = 1.0\nresolution = 64\nbody = random-trig\n\
                         amp = 0.03\nseed = 9\nmax_steps = 400\nstop_ratio = 0\n\
                         record_every = 100\nsnapshot_every = 200\n";

#[test]
fn identical_runs_emit_identical_bytes() {
    let base = scratch("det");
    let cfg = base.join("run.cfg");
    fs::write(&cfg, SMALL_RUN).unwrap();

    let mut artifacts: Vec<Vec<(String, Vec<u8>)>> = Vec::new();
    for sub in ["a", "b"] {
        let dir = base.join(sub);
        let out = gcf(&[
            "flow",
            "--config",
            cfg.to_str().unwrap(),
            "--out-dir",
            dir.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));

        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(&dir)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort_by(|x, y| x.0.cmp(&y.0));
        artifacts.push(files);
    }

    let names: Vec<&str> = artifacts[0].iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(
        names,
        ["run.json", "series.csv", "snapshot_000200.json", "snapshot_000400.json"]
    );
    for ((name_a, bytes_a), (name_b, bytes_b)) in artifacts[0].iter().zip(&artifacts[1]) {
        assert_eq!(name_a, name_b);
        assert_eq!(bytes_a, bytes_b, "{name_a} differs between identical runs");
    }
}

#[test]
fn emitted_snapshots_round_trip_through_the_loader() {
    let dir = scratch("snap");
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, SMALL_RUN).unwrap();
    let out = gcf(&[
        "flow",
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));

    let text = fs::read_to_string(dir.join("snapshot_000400.json")).unwrap();
    let snap = gcf_lab::emit::load_snapshot(&text).unwrap();
    assert_eq!(snap.n, 1);
    assert_eq!(snap.shape, vec![64]);
    assert_eq!(snap.offsets, vec![0.0]);
    assert_eq!(snap.h.len(), 64);
    assert!(snap.h.iter().all(|v| v.is_finite() && *v > 0.0));
    assert_eq!(snap.step, Some(400));
    assert!(snap.time.unwrap() > 0.0);
    assert_eq!(snap.alpha.unwrap(), 1.0);
}

#[test]
fn unknown_config_key_exits_one_with_line_context() {
    let dir = scratch("badkey");
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, "alpha = 1.0\nalpah = 2.0\n").unwrap();
    let out = gcf(&["flow", "--config", cfg.to_str().unwrap(), "--out-dir", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let msg = stderr(&out);
    assert!(msg.contains("unknown key 'alpah'"), "{msg}");
    assert!(msg.contains(":2"), "missing line number: {msg}");
}

#[test]
fn out_of_range_flag_exits_one_naming_the_flag() {
    let dir = scratch("badflag");
    let out = gcf(&["flow", "--alpha", "0", "--out-dir", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let msg = stderr(&out);
    assert!(msg.contains("--alpha"), "{msg}");
    assert!(msg.contains("positive"), "{msg}");
}

#[test]
fn body_dimension_mismatch_exits_one() {
    let dir = scratch("badbody");
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, "n = 2\nbody = ellipse\nresolution = 16\nmax_steps = 1\n").unwrap();
    let out = gcf(&["flow", "--config", cfg.to_str().unwrap(), "--out-dir", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("needs n = 1"), "{}", stderr(&out));
}

#[test]
fn unknown_verify_case_exits_one() {
    let dir = scratch("badcase");
    let out = gcf(&["verify", "--case", "nonsense", "--out-dir", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("nonsense"), "{}", stderr(&out));
}

#[test]
fn open_shrinker_orbit_exits_one() {
    let dir = scratch("open");
    // Inside the uniqueness range only h0 = 1 closes; 1.3 must come back open.
    let out = gcf(&["shrinker", "--alpha", "1.5", "--out-dir", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&gcf(&["--help"])), 0);
    assert_eq!(code(&gcf(&["--version"])), 0);
    assert_eq!(code(&gcf(&["flow", "--help"])), 0);
}

#[test]
fn missing_subcommand_exits_one() {
    assert_eq!(code(&gcf(&[])), 1);
}
