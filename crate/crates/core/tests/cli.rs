use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dmcmc::harness::experiments::{AblationCell, MixingSummary};
use dmcmc::harness::{cmd_ablation, cmd_mixing, resolve, ExperimentConfig, RunManifest};
use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dmcmc"))
}

fn run(args: &[&str], cwd: &Path) -> Output {
    bin().args(args).current_dir(cwd).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, cfg: &Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_vec_pretty(cfg).unwrap()).unwrap();
    p
}

fn small_mixing() -> Value {
    json!({
        "mixture": {"generate": {"modes": 6, "dim": 3, "box_size": 1.0, "min_separation": 0.4, "seed": 5}},
        "schedule": {"sigma_min": 0.01, "sigma_max": 50.0, "m": 200},
        "sampler": {"algo": "dlg", "eta": 0.05, "n_skip": 2, "n_den": 6, "n_chains": 3, "samples_per_chain": 40, "start_mode": 0},
        "baselines": [{"algo": "langevin", "eta": 0.0001, "n_chains": 3, "samples_per_chain": 50, "start_mode": 0}],
        "diagnostics": {"ground_truth_samples": 300},
        "seed": 11
    })
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn shipped_configs_validate() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&configs).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "json") {
            let o = run(&["validate-config", "--config", p.to_str().unwrap()], &configs);
            assert!(o.status.success(), "{}: {}", p.display(), String::from_utf8_lossy(&o.stderr));
            assert!(String::from_utf8_lossy(&o.stdout).starts_with("config ok"));
            seen += 1;
        }
    }
    assert!(seen >= 4);
}

#[test]
fn invalid_config_lists_problems_and_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_mixing();
    cfg["sampler"]["n_chains"] = json!(0);
    cfg["schedule"]["m"] = json!(1);
    cfg["benchmark"] = json!({"integrators": []});
    let path = write_config(tmp.path(), "bad.json", &cfg);
    let out = tmp.path().join("out");
    let o = run(&["mixing", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()], tmp.path());
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    for needle in ["n_chains", "integrators", "m "] {
        assert!(err.contains(needle), "missing {needle:?} in {err}");
    }
    assert!(!out.exists());
    let v = run(&["validate-config", "--config", path.to_str().unwrap()], tmp.path());
    assert!(!v.status.success());
}

#[test]
fn mixing_is_reproducible_and_thread_independent() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(tmp.path(), "mix.json", &small_mixing());
    let p = path.to_str().unwrap();
    for (dir, threads) in [("a", "1"), ("b", "1"), ("c", "3")] {
        let o = run(&["mixing", "--config", p, "--out", dir, "--threads", threads], tmp.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = files(&tmp.path().join("a"));
    assert!(a.len() >= 8);
    assert_eq!(a, files(&tmp.path().join("b")));
    assert_eq!(a, files(&tmp.path().join("c")));

    // A different seed changes the samples.
    let o = run(&["mixing", "--config", p, "--out", "d", "--seed", "12"], tmp.path());
    assert!(o.status.success());
    let d = files(&tmp.path().join("d"));
    let sample = |fs: &[(String, Vec<u8>)]| fs.iter().find(|f| f.0 == "samples_dlg.csv").unwrap().1.clone();
    assert_ne!(sample(&a), sample(&d));

    // Nothing lands outside the output directories.
    let mut top: Vec<String> = fs::read_dir(tmp.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    top.sort();
    assert_eq!(top, ["a", "b", "c", "d", "mix.json"]);
}

#[test]
fn csv_headers_match_manifest_schemas() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(tmp.path(), "mix.json", &small_mixing());
    let o = run(&["mixing", "--config", path.to_str().unwrap(), "--out", "o"], tmp.path());
    assert!(o.status.success());
    let m = RunManifest::load(&tmp.path().join("o/manifest.json")).unwrap();
    assert!(!m.schemas.is_empty());
    for name in m.outputs.iter().filter(|n| n.ends_with(".csv")) {
        let text = fs::read_to_string(tmp.path().join("o").join(name)).unwrap();
        let header = text.lines().next().unwrap();
        let expected = match name.split('_').next().unwrap() {
            "coverage" => "step,modes_covered",
            "autocorr" => "lag,value",
            "classes" => "mode,count,expected",
            "samples" => "chain,index,sigma_index,x0,x1,x2",
            other => panic!("unexpected output {other}"),
        };
        assert_eq!(header, expected, "{name}");
    }
}

fn resolved(cfg: Value, out: &Path) -> ExperimentConfig {
    let cfg: ExperimentConfig = serde_json::from_value(cfg).unwrap();
    resolve(cfg, None, Some(out.to_path_buf())).unwrap()
}

#[test]
fn singleton_ablation_reproduces_the_mixing_run() {
    let tmp = tempfile::tempdir().unwrap();
    let mut base = small_mixing();
    base["baselines"] = json!([]);
    let mix = cmd_mixing(&resolved(base.clone(), &tmp.path().join("mix"))).unwrap();
    let runs: Vec<MixingSummary> = serde_json::from_value(mix.diagnostics["runs"].clone()).unwrap();

    base["ablation"] = json!({"etas": [0.05], "nden_fracs": [0.75], "nfes": [8]});
    let abl = cmd_ablation(&resolved(base, &tmp.path().join("abl"))).unwrap();
    let cells: Vec<AblationCell> = serde_json::from_value(abl.diagnostics["cells"].clone()).unwrap();
    assert_eq!(cells.len(), 1);
    assert_eq!((cells[0].n_skip, cells[0].n_den), (2, 6));
    assert_eq!(cells[0].fgd.to_bits(), runs[0].fgd.unwrap().to_bits());
    assert_eq!(cells[0].ledger, mix.ledgers["dlg"]);
}

#[test]
fn ablation_covers_the_full_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_mixing();
    cfg["sampler"]["samples_per_chain"] = json!(15);
    cfg["ablation"] = json!({"kappas": [0.5, 2.0], "nden_fracs": [0.2, 0.5, 0.8], "nfes": [5, 10]});
    let path = write_config(tmp.path(), "abl.json", &cfg);
    let o = run(&["ablation", "--config", path.to_str().unwrap(), "--out", "o"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(tmp.path().join("o/ablation.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("eta,nden_frac,nfe,fgd"));
    assert_eq!(lines.count(), 12);
    let m = RunManifest::load(&tmp.path().join("o/manifest.json")).unwrap();
    let cells: Vec<AblationCell> = serde_json::from_value(m.diagnostics["cells"].clone()).unwrap();
    for c in &cells {
        assert_eq!(c.n_skip + c.n_den, c.nfe);
        assert!(c.n_skip >= 1 && c.n_den >= 1);
    }
}

#[test]
fn ablation_requires_its_block() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(tmp.path(), "mix.json", &small_mixing());
    let o = run(&["ablation", "--config", path.to_str().unwrap(), "--out", "o"], tmp.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("ablation"));
}
