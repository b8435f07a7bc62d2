// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ethopipe_core::synth::{write_fixture, Fixture};

fn ethopipe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ethopipe")).args(args).output().expect("spawn ethopipe")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn fixture(dir: &Path) -> Fixture {
    write_fixture(&dir.join("fx"), 7).expect("fixture")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn classify_happy_path() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = fixture(tmp.path());
    let examples = tmp.path().join("examples");
    let model = tmp.path().join("model.txt");
    let timeline = tmp.path().join("timeline.csv");
    let events = tmp.path().join("events.csv");

    let out = ethopipe(&[
        "gen-examples", "--frames", p(&fx.frames), "--masks", p(&fx.masks), "--ethogram", p(&fx.ethogram),
        "--out", p(&examples), "--stride", "5",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = ethopipe(&["train-baseline", "--examples", p(&examples), "--out", p(&model), "--iterations", "300"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = ethopipe(&[
        "classify", "--frames", p(&fx.frames), "--masks", p(&fx.masks), "--model", p(&model), "--out", p(&timeline),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let text = fs::read_to_string(&timeline).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header[0], "time_s");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    // 200 frames, window 45, stride 5
    assert_eq!(rows.len(), 32);
    assert!((rows[0][0] - 44.0 / 24.0).abs() < 1e-9);
    for r in &rows {
        assert!((r[1..].iter().sum::<f64>() - 1.0).abs() < 1e-6);
    }

    let out = ethopipe(&["eval-ethogram", "--timeline", p(&timeline), "--gt", p(&fx.ethogram), "--out", p(&events)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(fs::read_to_string(&events).unwrap().lines().count() > 1);
}

#[test]
fn unknown_subcommand_exits_one_with_usage() {
    let out = ethopipe(&["frobnicate"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("Usage"));
}

#[test]
fn help_and_version_everywhere() {
    for sub in [
        "ingest", "augment", "gen-examples", "detect-eval", "train-baseline", "classify", "eval-ethogram",
        "bench-scaling",
    ] {
        let out = ethopipe(&[sub, "--help"]);
        assert_eq!(code(&out), 0, "{sub} --help");
        assert!(String::from_utf8_lossy(&out.stdout).contains("Usage"), "{sub} --help");
        let out = ethopipe(&[sub, "--version"]);
        assert_eq!(code(&out), 0, "{sub} --version");
        assert!(String::from_utf8_lossy(&out.stdout).contains(env!("CARGO_PKG_VERSION")), "{sub} --version");
    }
    assert_eq!(code(&ethopipe(&["--version"])), 0);
}

#[test]
fn flag_overrides_config_and_is_logged() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = fixture(tmp.path());
    let cfg = tmp.path().join("run.conf");
    fs::write(
        &cfg,
        format!("# run settings\nframes = {}\nmasks = {}\nethogram = {}\nwindow = 45\n", p(&fx.frames), p(&fx.masks), p(&fx.ethogram)),
    )
    .unwrap();
    let examples = tmp.path().join("examples");
    let out = ethopipe(&["--config", p(&cfg), "gen-examples", "--out", p(&examples), "--window", "30", "--stride", "30"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let log = stderr(&out);
    assert!(log.contains("overrides config value") && log.contains("window"), "{log}");
    let manifest = fs::read_to_string(examples.join("manifest.csv")).unwrap();
    // starts 0, 30, 60 inside RH (frames 0..96), 120 and 150 inside RG; 90 straddles
    assert_eq!(manifest.lines().count() - 1, 5);
    let frames = fs::read_dir(examples.join("anim_0")).unwrap().count();
    assert_eq!(frames, 30 * 2);
}

#[test]
fn unknown_config_key_reports_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.conf");
    fs::write(&cfg, "window = 45\n\n# comment\nwindw = 30\n").unwrap();
    let out = ethopipe(&["--config", p(&cfg), "bench-scaling", "--workers", "1"]);
    assert_eq!(code(&out), 1);
    let err = stderr(&out);
    assert!(err.contains(":4:") && err.contains("windw"), "{err}");

    fs::write(&cfg, "window = 45\nwindow = 30\n").unwrap();
    let out = ethopipe(&["--config", p(&cfg), "bench-scaling", "--workers", "1"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains(":2:"));
}

#[test]
fn invalid_values_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ethopipe(&["bench-scaling", "--workers", "2,4", "--out", p(&tmp.path().join("b.csv"))]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    let out = ethopipe(&["classify", "--window", "many"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn io_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ethopipe(&["ingest", "--annotations", p(&tmp.path().join("missing.json")), "--out", p(&tmp.path().join("o.json"))]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    let out = ethopipe(&["--config", p(&tmp.path().join("missing.conf")), "ingest"]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn augment_is_seed_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = fixture(tmp.path());
    let run = |seed: &str, name: &str| {
        let out_dir = tmp.path().join(name);
        let out = ethopipe(&[
            "--seed", seed, "augment", "--dataset", p(&fx.annotations), "--out", p(&out_dir), "--multiplier", "1",
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        fs::read_to_string(out_dir.join("provenance.csv")).unwrap()
    };
    let a = run("3", "a");
    let b = run("3", "b");
    let c = run("4", "c");
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.lines().count(), 1 + 200);
}
