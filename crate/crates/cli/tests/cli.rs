use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use msft_cli::{RunConfig, RunManifest};

fn msft(dir: &Path, args: &[&str]) -> Output {
    let cache = dir.join("cache");
    let out = dir.join("out");
    Command::new(env!("CARGO_BIN_EXE_msft"))
        .args(args)
        .arg("--set")
        .arg(format!("paths.kernel_cache={}", cache.display()))
        .arg("--output")
        .arg(&out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SMALL: &[&str] = &[
    "--set", "lattice.extent=3",
    "--set", "dynamics.n_equil=200",
    "--set", "dynamics.n_prod=2000",
    "--set", "dynamics.checkpoint_every=500",
    "--set", "measure.block_len=100",
];

fn with(base: &[&'static str], extra: &[&'static str]) -> Vec<&'static str> {
    base.iter().chain(extra).copied().collect()
}

#[test]
fn kernel_builds_then_reuses_cache() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["kernel", "--set", "lattice.extent=3", "--set", "kernel.kind=A"];
    let first = msft(tmp.path(), &args);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    assert!(stdout(&first).contains("positive definite: yes"));
    assert!(stdout(&first).contains("(built)"));
    let files: Vec<_> = fs::read_dir(tmp.path().join("cache")).unwrap().collect();
    assert_eq!(files.len(), 4);
    let second = msft(tmp.path(), &args);
    assert!(stdout(&second).contains("(reused)"));
    // a corrupted cache entry is rebuilt, not trusted
    let victim = fs::read_dir(tmp.path().join("cache"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().is_some_and(|e| e == "msftk"))
        .unwrap();
    let mut bytes = fs::read(&victim).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 1;
    fs::write(&victim, bytes).unwrap();
    assert!(stdout(&msft(tmp.path(), &args)).contains("(built)"));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = msft(tmp.path(), &["kernel", "--set", "kernel.alpha=-1"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(!tmp.path().join("cache").exists(), "validation must precede any work");
    assert_eq!(msft(tmp.path(), &["kernel", "--set", "kernel.colour=red"]).status.code(), Some(2));
    let indefinite = msft(
        tmp.path(),
        &["kernel", "--set", "lattice.extent=3", "--set", "kernel.kind=A", "--set", "kernel.momentum_mode=integer"],
    );
    assert_eq!(indefinite.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&indefinite.stderr).contains("Cholesky failed at index"));
    let big_step = msft(tmp.path(), &with(&["simulate", "--set", "dynamics.dlambda=50"], SMALL));
    assert_eq!(big_step.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&big_step.stderr).contains("reduce dlambda"));
}

#[test]
fn simulate_writes_normalized_cuts_and_valid_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let o = msft(tmp.path(), &with(&["simulate"], SMALL));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = tmp.path().join("out");
    for cut in ["cut_t.csv", "cut_x.csv"] {
        let text = fs::read_to_string(out.join(cut)).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n,re,im,re_err,im_err");
        assert_eq!(lines.len(), 4);
        let zero: Vec<f64> = lines[2].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(zero, vec![0.0, 1.0, 0.0, 0.0, 0.0]);
    }
    let m = RunManifest::read(&out.join("manifest-simulate.json")).unwrap();
    assert!(m.complete);
    assert_eq!(m.drift.as_ref().unwrap().samples, 2000);
    assert!(m.verify(&out).unwrap().is_empty());
    assert!(m.artifacts.iter().any(|a| a.path == "center_row.csv"));
    // the recorded config reproduces the run
    let cfg = RunConfig::parse(&m.config).unwrap();
    assert_eq!(cfg.extent, 3);
    assert_eq!(cfg.to_text(), m.config);

    let meas = msft(tmp.path(), &with(&["measure"], SMALL));
    assert!(meas.status.success());
    let mm = RunManifest::read(&out.join("manifest-measure.json")).unwrap();
    assert!(mm.results.contains_key("gram_rank"));
    // measure reproduces the cuts written by simulate
    assert!(m.verify(&out).unwrap().is_empty());

    let sampled = msft(tmp.path(), &with(&["algebra", "--set", "algebra.source=sampled", "--set", "algebra.j_max=3"], SMALL));
    assert!(sampled.status.success(), "{}", String::from_utf8_lossy(&sampled.stderr));
}

#[test]
fn resume_is_bit_exact() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(msft(a.path(), &with(&["simulate"], SMALL)).status.success());
    let part = msft(b.path(), &with(&["simulate", "--stop-after", "1234"], SMALL));
    assert!(part.status.success());
    let pm = RunManifest::read(&b.path().join("out/manifest-simulate.json")).unwrap();
    assert!(!pm.complete);
    assert!(!b.path().join("out/accumulator.msfta").exists());
    assert!(msft(b.path(), &with(&["simulate", "--resume"], SMALL)).status.success());
    for f in ["accumulator.msfta", "final_state.msfts", "checkpoint.msftc", "cut_t.csv", "cut_x.csv", "center_row.csv"] {
        assert_eq!(
            fs::read(a.path().join("out").join(f)).unwrap(),
            fs::read(b.path().join("out").join(f)).unwrap(),
            "{f} differs"
        );
    }
    // a checkpoint from another configuration is refused
    let other = msft(b.path(), &with(&["simulate", "--resume", "--set", "model.beta=2"], SMALL));
    assert_eq!(other.status.code(), Some(2));
}

#[test]
fn oracle_modes() {
    let tmp = tempfile::tempdir().unwrap();
    let free = with(SMALL, &["--set", "oracle.samples=20000"]);
    let o = msft(tmp.path(), &with(&["oracle"], &free));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(tmp.path().join("out/comparison.csv")).unwrap();
    assert!(csv.contains("no dynamics data"));
    // center row plus the two probe-site rows
    assert_eq!(csv.lines().count(), 1 + 3 * 81);
    let m = RunManifest::read(&tmp.path().join("out/manifest-oracle.json")).unwrap();
    assert!(m.results["ensemble_vs_exact_within_3se"].as_f64().unwrap() >= 0.99);

    let mismatch = msft(tmp.path(), &with(&["oracle", "--set", "model.kappa2=1"], &free));
    assert_eq!(mismatch.status.code(), Some(2));
    let metro = msft(
        tmp.path(),
        &with(&["oracle", "--mode", "metropolis", "--set", "model.kappa2=1", "--set", "oracle.samples=2000"], SMALL),
    );
    assert!(metro.status.success(), "{}", String::from_utf8_lossy(&metro.stderr));
    let mm = RunManifest::read(&tmp.path().join("out/manifest-oracle.json")).unwrap();
    assert!(mm.acceptance.is_some());
}

#[test]
fn algebra_and_causality_extent5() {
    let tmp = tempfile::tempdir().unwrap();
    let base = ["--set", "lattice.extent=5", "--set", "kernel.kind=A"];
    let alg = msft(tmp.path(), &with(&["algebra"], &base));
    assert!(alg.status.success(), "{}", String::from_utf8_lossy(&alg.stderr));
    let m = RunManifest::read(&tmp.path().join("out/manifest-algebra.json")).unwrap();
    assert!(m.results["algebra_max_deviation"].as_f64().unwrap() < 1e-10);
    assert_eq!(m.results["gram_rank"], 3);
    let summary = fs::read_to_string(tmp.path().join("out/causality_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);

    let loose = msft(tmp.path(), &with(&["causality", "--set", "algebra.causality_threshold=1"], &base));
    assert!(loose.status.success());
    let strict = msft(tmp.path(), &with(&["causality", "--set", "algebra.causality_threshold=1e6"], &base));
    assert_eq!(strict.status.code(), Some(4));
}

#[test]
fn printed_config_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let o = msft(tmp.path(), &["config", "--set", "kernel.alpha=1/27", "--set", "model.kappa2=1"]);
    assert!(o.status.success());
    let cfg = RunConfig::parse(&stdout(&o)).unwrap();
    assert_eq!(cfg.alpha, 1.0 / 27.0);
    assert_eq!(cfg.kappa2, 1.0);
    assert_eq!(cfg.to_text(), stdout(&o));
}
