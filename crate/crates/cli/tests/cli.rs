use std::path::Path;
use std::process::{Command, Output};

use d2dsched_cli::output::{read_csv, CompareRow, PerTtiRow, SummaryRow, SweepRow};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_d2dsched"));
    c.env_remove("D2DSCHED_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn d2dsched")
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const MINIMAL: &str = "num_subchannels = 1\nnum_cues = 1\nnum_pairs = 0\nttis = 10\n";
const SMALL: &str = "name = \"small\"\nnum_subchannels = 3\nnum_cues = 2\nnum_pairs = 2\nttis = 20\n";

#[test]
fn minimal_run_has_one_cue_row() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "c.toml", MINIMAL);
    let out = d.path().join("out");
    ok(&run(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]));
    let summary: Vec<SummaryRow> = read_csv(&out.join("summary.csv")).unwrap();
    assert_eq!(summary.len(), 1);
    assert_eq!(summary[0].tier, "cue");
    assert!(summary[0].mean_rate_bps > 0.0);
    assert!(out.join("manifest.toml").exists());
    let per_tti: Vec<PerTtiRow> = read_csv(&out.join("per_tti.csv")).unwrap();
    assert_eq!(per_tti.len(), 10);
}

#[test]
fn unknown_key_is_rejected_by_name_and_line() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "c.toml", "num_cues = 1\n\n[scheduling]\nwindoww = 3\n");
    let out = run(&["run", "--config", &cfg, "--out", d.path().join("o").to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("windoww") && err.contains("line 4"), "{err}");
}

#[test]
fn reruns_and_manifest_replays_are_byte_identical() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "c.toml", SMALL);
    let (a, b, c) = (d.path().join("a"), d.path().join("b"), d.path().join("c"));
    for dir in [&a, &b] {
        ok(&run(&["run", "--config", &cfg, "--seeds", "3", "--set", "scheduling.max_iterations=2", "--out", dir.to_str().unwrap()]));
    }
    let manifest = a.join("manifest.toml");
    ok(&run(&["run", "--manifest", manifest.to_str().unwrap(), "--out", c.to_str().unwrap()]));
    for f in ["per_tti.csv", "tti_stats.csv", "summary.csv"] {
        let x = std::fs::read(a.join(f)).unwrap();
        assert_eq!(x, std::fs::read(b.join(f)).unwrap(), "{f}");
        assert_eq!(x, std::fs::read(c.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn summary_matches_per_tti_data() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "c.toml", SMALL);
    let out = d.path().join("o");
    ok(&run(&["run", "--config", &cfg, "--seeds", "2", "--out", out.to_str().unwrap()]));
    let per_tti: Vec<PerTtiRow> = read_csv(&out.join("per_tti.csv")).unwrap();
    let summary: Vec<SummaryRow> = read_csv(&out.join("summary.csv")).unwrap();
    assert_eq!(summary.len(), 2 * 4);
    for s in &summary {
        let rates: Vec<f64> = per_tti
            .iter()
            .filter(|r| r.seed == s.seed && r.tier == s.tier && r.user_id == s.user_id)
            .map(|r| r.rate_bps)
            .collect();
        assert_eq!(rates.len(), 20);
        let mean = rates.iter().sum::<f64>() / 20.0;
        assert!((mean - s.mean_rate_bps).abs() <= 1e-9 * mean.max(1.0));
    }
    for seed_tier in summary.chunks(2) {
        let logsum: f64 = seed_tier.iter().map(|s| s.mean_rate_bps.ln()).sum();
        assert!((logsum - seed_tier[0].logsum_tier).abs() < 1e-9);
    }
}

#[test]
fn seed_from_environment() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "c.toml", MINIMAL);
    let out = d.path().join("o");
    let status = bin().env("D2DSCHED_SEED", "77").args(["run", "--config", &cfg, "--out", out.to_str().unwrap()]).output().unwrap();
    ok(&status);
    let summary: Vec<SummaryRow> = read_csv(&out.join("summary.csv")).unwrap();
    assert_eq!(summary[0].seed, 77);
}

#[test]
fn compare_ratios_never_exceed_one() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "c.toml", "num_subchannels = 3\nnum_cues = 2\nnum_pairs = 2\nttis = 5\n");
    let out = d.path().join("o");
    let o = run(&["compare", "--config", &cfg, "--seeds", "3", "--out", out.to_str().unwrap()]);
    ok(&o);
    let rows: Vec<CompareRow> = read_csv(&out.join("compare.csv")).unwrap();
    assert_eq!(rows.len(), 15);
    assert!(rows.iter().all(|r| r.ratio <= 1.0 + 1e-9 && r.dominated));
    assert!(String::from_utf8_lossy(&o.stdout).contains("median_ratio"));
}

#[test]
fn compare_refuses_large_instances() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&["compare", "--set", "num_subchannels=25", "--set", "num_cues=3", "--set", "num_pairs=3", "--out", d.path().to_str().unwrap()]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("complexity estimate"), "{err}");
}

#[test]
fn sweep_writes_long_format() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "c.toml", SMALL);
    let out = d.path().join("o");
    ok(&run(&["sweep", "--config", &cfg, "--axis", "m", "--values", "1", "--out", out.to_str().unwrap()]));
    let rows: Vec<SweepRow> = read_csv(&out.join("sweep.csv")).unwrap();
    assert!(rows.iter().all(|r| r.axis == "m" && r.axis_value == 1.0 && r.seed == 1));
    assert_eq!(rows.len(), 7);

    let out2 = d.path().join("o2");
    ok(&run(&["sweep", "--config", &cfg, "--axis", "n_d", "--values", "1,3", "--seeds", "2", "--out", out2.to_str().unwrap()]));
    let rows: Vec<SweepRow> = read_csv(&out2.join("sweep.csv")).unwrap();
    assert_eq!(rows.len(), 2 * 2 * 7);
    let replay = d.path().join("o3");
    ok(&run(&["run", "--manifest", out2.join("manifest.toml").to_str().unwrap(), "--out", replay.to_str().unwrap()]));
    assert_eq!(std::fs::read(out2.join("sweep.csv")).unwrap(), std::fs::read(replay.join("sweep.csv")).unwrap());

    let o = run(&["sweep", "--config", &cfg, "--axis", "n_d", "--values", "", "--out", out.to_str().unwrap()]);
    assert!(!o.status.success());
}

#[test]
fn complexity_table_on_stdout() {
    let o = run(&["complexity", "--n-c", "5", "--n-d", "3", "-k", "3"]);
    ok(&o);
    let text = String::from_utf8_lossy(&o.stdout);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[4], "512");
    let o = run(&["complexity", "--n-c", "0", "--n-d", "3", "-k", "3"]);
    assert!(!o.status.success());
}
