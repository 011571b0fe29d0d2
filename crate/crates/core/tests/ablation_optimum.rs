use dmcmc::harness::experiments::AblationCell;
use dmcmc::harness::{cmd_ablation, resolve, ExperimentConfig};
use serde_json::json;

/// At a fixed budget of 20 NFE, the best split between Langevin steps and
/// denoising sits strictly inside the feasible range: `n_den = 1` leaves the
/// integrator too short, `n_skip = 1` gives up the block-minimum selection.
#[test]
fn fgd_optimum_is_interior_at_twenty_nfe() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg: ExperimentConfig = serde_json::from_value(json!({
        "mixture": {"generate": {"modes": 50, "dim": 16, "box_size": 1.0, "min_separation": 0.8, "seed": 1}},
        "schedule": {"sigma_min": 0.01, "sigma_max": 50.0, "m": 200},
        "sampler": {"algo": "dlg", "eta": 1.0, "n_chains": 10, "samples_per_chain": 600, "start_mode": 0},
        "integrator": {"name": "reverse_diffusion"},
        "diagnostics": {"ground_truth_samples": 20000},
        "ablation": {"etas": [1.0], "nden_fracs": [0.05, 0.3, 0.5, 0.7, 0.9, 0.95], "nfes": [20]},
        "seed": 0
    }))
    .unwrap();
    let cfg = resolve(cfg, None, Some(tmp.path().to_path_buf())).unwrap();
    let m = cmd_ablation(&cfg).unwrap();
    let cells: Vec<AblationCell> = serde_json::from_value(m.diagnostics["cells"].clone()).unwrap();
    assert_eq!(cells.first().map(|c| c.n_den), Some(1));
    assert_eq!(cells.last().map(|c| c.n_skip), Some(1));
    let best = cells
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.fgd.total_cmp(&b.1.fgd))
        .map(|(i, _)| i)
        .unwrap();
    let fgd: Vec<f64> = cells.iter().map(|c| c.fgd).collect();
    assert!(best > 0 && best < cells.len() - 1, "argmin at {best}: {fgd:?}");
}
