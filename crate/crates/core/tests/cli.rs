use std::path::Path;

use shadowtouch::harness::cli::{run, SEED_ENV};
use shadowtouch::harness::{truth_events, truth_labels};
use shadowtouch::synthkit::io::parse_trace;
use shadowtouch::touchfsm::{format_events, format_labels};

fn cli(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut full = vec!["shadowtouch"];
    full.extend_from_slice(args);
    let code = run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn kv(path: &Path, key: &str) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .unwrap_or_else(|| panic!("{key} missing from {}", path.display()))
        .to_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn config_prints_and_reloads() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text, _) = cli(&["config", "--seed", "11"]);
    assert_eq!(code, 0);
    assert!(text.contains("seed = 11"));
    let file = dir.path().join("cfg.txt");
    std::fs::write(&file, &text).unwrap();
    let (code, again, _) = cli(&["config", "--seed", "11", "--config", path_str(&file)]);
    assert_eq!(code, 0);
    assert_eq!(again, text);
}

#[test]
fn config_errors_exit_two_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("cfg.txt");
    std::fs::write(&file, "# comment\nseed = 3\nlight.q = 1\n").unwrap();
    let (code, _, err) = cli(&["config", "--seed", "1", "--config", path_str(&file)]);
    assert_eq!(code, 2);
    assert!(err.contains("line 3"), "{err}");

    std::fs::write(&file, "touch.t_up_mm = 0.5\n").unwrap();
    assert_eq!(cli(&["config", "--seed", "1", "--config", path_str(&file)]).0, 2);
    assert_eq!(cli(&["config", "--config", "/nonexistent/cfg.txt"]).0, 2);
    assert_eq!(cli(&["synth", "--seed", "1", "--count", "2"]).0, 2);
    assert_eq!(cli(&["sweep", "--seed", "1", "--heights", "3,2"]).0, 2);
    assert_eq!(cli(&["frobnicate"]).0, 2);
}

#[test]
fn data_errors_exit_three_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.txt");
    std::fs::write(&trace, "0 1 0 0 0 1\nnot a record\n").unwrap();
    let out = dir.path().join("frames");
    let (code, _, err) = cli(&["render", "--seed", "1", "--trace", path_str(&trace), "--out", path_str(&out)]);
    assert_eq!(code, 3);
    assert!(err.contains("line 2") && err.contains("t.txt"), "{err}");
    assert_eq!(cli(&["sense", "--seed", "1", "--frames", "/nonexistent/frames"]).0, 3);
}

#[test]
fn synth_render_sense_chain() {
    let dir = tempfile::tempdir().unwrap();
    let traces = dir.path().join("traces");
    assert_eq!(cli(&["synth", "--seed", "4", "--count", "3", "--out", path_str(&traces)]).0, 0);
    let first = traces.join("trace_0000.txt");
    let parsed = parse_trace(&std::fs::read_to_string(&first).unwrap()).unwrap();
    assert!(parsed.header("expected").is_some());

    let frames = dir.path().join("frames");
    let (code, _, err) = cli(&["render", "--seed", "4", "--trace", path_str(&first), "--out", path_str(&frames)]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(std::fs::read_dir(&frames).unwrap().count(), parsed.records.len());

    let (code, obs, _) = cli(&["sense", "--seed", "4", "--frames", path_str(&frames)]);
    assert_eq!(code, 0);
    assert!(!obs.trim().is_empty());
}

#[test]
fn eval_of_ground_truth_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    let (code, _, err) =
        cli(&["pipeline", "--seed", "2", "--count", "3", "--dump-frames", "0", "--out", path_str(&run_dir)]);
    assert_eq!(code, 0, "{err}");
    for entry in std::fs::read_dir(run_dir.join("traces")).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap();
        let trace = parse_trace(&std::fs::read_to_string(&path).unwrap()).unwrap();
        std::fs::write(run_dir.join("labels").join(name), format_labels(&truth_labels(&trace.records))).unwrap();
        std::fs::write(run_dir.join("events").join(name), format_events(&truth_events(&trace.records))).unwrap();
    }
    let report = dir.path().join("report");
    let args = ["eval", "--seed", "2", "--pred", path_str(&run_dir), "--out", path_str(&report)];
    assert_eq!(cli(&args).0, 0);
    let kv_file = report.join("report.kv");
    assert_eq!(kv(&kv_file, "frame_accuracy"), "1.000000");
    assert_eq!(kv(&kv_file, "event_f1"), "1.000000");
    assert_eq!(kv(&kv_file, "data"), "synthetic");
}

#[test]
fn eval_ignores_the_seed_and_rates_follow_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    assert_eq!(cli(&["pipeline", "--seed", "5", "--count", "3", "--dump-frames", "0", "--out", path_str(&run_dir)]).0, 0);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(cli(&["eval", "--seed", "1", "--pred", path_str(&run_dir), "--out", path_str(&a)]).0, 0);
    assert_eq!(cli(&["eval", "--seed", "999", "--pred", path_str(&run_dir), "--out", path_str(&b)]).0, 0);
    let ka = std::fs::read_to_string(a.join("report.kv")).unwrap();
    assert_eq!(ka, std::fs::read_to_string(b.join("report.kv")).unwrap());
    // the eval report matches the one the pipeline wrote
    assert_eq!(ka, std::fs::read_to_string(run_dir.join("report.kv")).unwrap());

    let f = a.join("report.kv");
    let n = |k: &str| kv(&f, k).parse::<f64>().unwrap();
    let (tp, fp, fn_, tn) = (n("frame_tp"), n("frame_fp"), n("frame_fn"), n("frame_tn"));
    assert_eq!(n("frame_labels"), tp + fp + fn_ + tn);
    assert!((n("frame_accuracy") - (tp + tn) / (tp + fp + fn_ + tn)).abs() < 1e-6);
    let p = if tp + fp == 0.0 { 1.0 } else { tp / (tp + fp) };
    let r = if tp + fn_ == 0.0 { 1.0 } else { tp / (tp + fn_) };
    assert!((n("precision") - p).abs() < 1e-6);
    assert!((n("recall") - r).abs() < 1e-6);
    assert!((n("f1") - 2.0 * p * r / (p + r)).abs() < 1e-6);
    assert_eq!(n("traces"), 3.0);
}

#[test]
fn seed_precedence() {
    // the only test that touches the environment variable
    std::env::set_var(SEED_ENV, "21");
    let (_, from_env, _) = cli(&["config"]);
    let (_, from_flag, _) = cli(&["config", "--seed", "8"]);
    std::env::set_var(SEED_ENV, "twenty");
    let (bad, _, _) = cli(&["config"]);
    std::env::remove_var(SEED_ENV);
    assert!(from_env.contains("seed = 21"));
    assert!(from_flag.contains("seed = 8"));
    assert_eq!(bad, 2);
}

#[test]
fn small_sweep_writes_labeled_report() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "sweep", "--seed", "3", "--method", "shadow", "--heights", "1,3", "--traces", "4", "--frames", "4", "--out",
        path_str(dir.path()),
    ];
    let (code, text, _) = cli(&args);
    assert_eq!(code, 0);
    assert!(text.contains("synthetic surrogate"));
    assert_eq!(kv(&dir.path().join("sweep.kv"), "data"), "synthetic");
}
