//! End-to-end tests of the installed binary: argument handling, exit codes,
//! config diagnostics, and deterministic file emission.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bookflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bookflow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

const SMALL_CAP: &str = "\
scenario = small_cap
grid.s_min = -6.0
grid.s_max = 6.0
grid.n_cells = 120
init.kind = parabolic_cap
init.c = 1.0
init.center = 0.0
init.t0 = 1.0
t_end = 1.2
output.times = 1.1, 1.2
";

#[test]
fn run_emits_byte_identical_files_across_repeats() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cap.cfg");
    fs::write(&cfg, SMALL_CAP).unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");

    for out in [&out_a, &out_b] {
        let run = bookflow(&[
            "run",
            cfg.to_str().unwrap(),
            "--quiet",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(run.status.success(), "run failed: {}", stderr(&run));
    }

    let mut names: Vec<String> = fs::read_dir(&out_a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert!(names.contains(&"touch.csv".to_string()));
    assert!(names.contains(&"snapshot_1.2.csv".to_string()));
    for name in &names {
        let a = fs::read(out_a.join(name)).unwrap();
        let b = fs::read(out_b.join(name)).unwrap();
        if name == "manifest.txt" {
            // Only the wall-clock line may differ between repeats.
            let strip = |bytes: &[u8]| {
                String::from_utf8_lossy(bytes)
                    .lines()
                    .filter(|l| !l.starts_with("wall_clock_s"))
                    .collect::<Vec<_>>()
                    .join("\n")
            };
            assert_eq!(strip(&a), strip(&b), "{name} differs beyond wall clock");
        } else {
            assert_eq!(a, b, "{name} is not byte-identical");
        }
    }
}

#[test]
fn manifest_lists_exactly_the_emitted_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cap.cfg");
    fs::write(&cfg, SMALL_CAP).unwrap();
    let out = dir.path().join("out");
    let run = bookflow(&[
        "run",
        cfg.to_str().unwrap(),
        "--quiet",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", stderr(&run));

    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    let mut listed: Vec<String> = manifest
        .lines()
        .skip_while(|l| *l != "files:")
        .skip(1)
        .take_while(|l| l.starts_with("  "))
        .map(|l| l.trim().split(':').next().unwrap().to_string())
        .collect();
    listed.sort();

    let mut on_disk: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    on_disk.sort();

    assert_eq!(listed, on_disk, "manifest and directory disagree");
    assert!(
        listed.contains(&"manifest.txt".to_string()),
        "manifest must list itself"
    );
}

#[test]
fn emitted_numbers_are_never_nan_or_infinite() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cap.cfg");
    fs::write(&cfg, SMALL_CAP).unwrap();
    let out = dir.path().join("out");
    let run = bookflow(&[
        "run",
        cfg.to_str().unwrap(),
        "--quiet",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", stderr(&run));
    for entry in fs::read_dir(&out).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap().to_lowercase();
        assert!(!text.contains("nan"), "{path:?} contains nan");
        assert!(!text.contains("inf"), "{path:?} contains inf");
    }
}

#[test]
fn validate_reports_every_problem_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(
        &cfg,
        "scenario = broken\n\
         grid.s_min = 0\n\
         grid.s_max = fast\n\
         grid.n_cells = 100\n\
         init.kind = uniform\n\
         init.depth = -1\n\
         init.cutoff = 2.0\n\
         t_end = 1.0\n\
         grid.wibble = 3\n",
    )
    .unwrap();
    let run = bookflow(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(1));
    let err = stderr(&run);
    assert!(err.contains("line 3"), "missing line for bad float: {err}");
    assert!(
        err.contains("line 6"),
        "missing line for negative depth: {err}"
    );
    assert!(
        err.contains("line 9"),
        "missing line for unknown key: {err}"
    );
    assert!(err.contains("unknown key"), "{err}");
}

#[test]
fn validate_accepts_every_builtin_scenario() {
    for name in ["fig5_unlimited", "fig6_limited", "barenblatt_golden"] {
        let run = bookflow(&["validate", name]);
        assert_eq!(run.status.code(), Some(0), "{name}: {}", stderr(&run));
        assert!(stdout(&run).contains(name));
    }
}

#[test]
fn unknown_scenario_names_list_the_builtins() {
    let run = bookflow(&["run", "no_such_scenario"]);
    assert_eq!(run.status.code(), Some(1));
    let err = stderr(&run);
    assert!(err.contains("fig5_unlimited"), "{err}");
    assert!(err.contains("barenblatt_golden"), "{err}");
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    let bad = bookflow(&["frobnicate"]);
    assert_eq!(bad.status.code(), Some(1));
    let help = bookflow(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(stdout(&help).contains("similarity"));
}

#[test]
fn similarity_sweep_records_failures_without_aborting() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let run = bookflow(&[
        "similarity",
        "--gamma",
        "0,-0.5,1",
        "--quiet",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(0), "{}", stderr(&run));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], "gamma,v_inf,s_peak,residual,status");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].ends_with(",ok"));
    assert!(lines[2].starts_with("-0.5,,,,failed:"), "{}", lines[2]);
    assert!(lines[3].ends_with(",ok"));
    assert!(out.join("gamma_0.csv").exists());
    assert!(out.join("gamma_1.csv").exists());
    assert!(!out.join("gamma_-0.5.csv").exists());
}

#[test]
fn similarity_with_no_gammas_writes_an_empty_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let run = bookflow(&["similarity", "--quiet", "--out", out.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(0), "{}", stderr(&run));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.trim(), "gamma,v_inf,s_peak,residual,status");
}

#[test]
fn numerical_blowup_exits_two_and_keeps_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("hot.cfg");
    // A depth this large overflows the squared-depth flux on the first step.
    fs::write(
        &cfg,
        "scenario = hot\n\
         grid.s_min = 0.0\n\
         grid.s_max = 1.0\n\
         grid.n_cells = 50\n\
         init.kind = uniform\n\
         init.depth = 1.0e200\n\
         init.cutoff = 0.0\n\
         t_end = 1.0\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let run = bookflow(&[
        "run",
        cfg.to_str().unwrap(),
        "--quiet",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(2), "{}", stderr(&run));
    assert!(stderr(&run).contains("blow-up"), "{}", stderr(&run));
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("status:"), "{manifest}");
    assert!(out.join("touch.csv").exists(), "partial series kept");
}

#[test]
fn golden_runs_a_selected_check() {
    let run = bookflow(&["golden", "--only", "7"]);
    assert_eq!(run.status.code(), Some(0), "{}", stderr(&run));
    let text = stdout(&run);
    assert!(text.contains("PASS  7"), "{text}");
    let bad = bookflow(&["golden", "--only", "99"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn run_resolves_relative_table_paths_against_the_config_directory() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("book.csv");
    fs::write(&table, "S,h\n0.0,0.0\n1.0,1.0\n2.0,1.0\n3.0,0.0\n").unwrap();
    let cfg = dir.path().join("tab.cfg");
    fs::write(
        &cfg,
        "scenario = tab\n\
         grid.s_min = 0.0\n\
         grid.s_max = 3.0\n\
         grid.n_cells = 60\n\
         init.kind = tabulated\n\
         init.file = book.csv\n\
         t_end = 0.05\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    // Invoke from a different working directory to prove resolution is
    // against the config file, not the process cwd.
    let run = Command::new(env!("CARGO_BIN_EXE_bookflow"))
        .current_dir(Path::new("/"))
        .args([
            "run",
            cfg.to_str().unwrap(),
            "--quiet",
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .expect("binary runs");
    assert_eq!(run.status.code(), Some(0), "{}", stderr(&run));
    assert!(out.join("touch.csv").exists());
}
