"""Smoke test for the dmcmc_py extension.

Build and install first:  maturin develop --release -m crates/python/Cargo.toml
Then run:                 python python/smoke_test.py
"""

import json
import math
import tempfile
from pathlib import Path

import dmcmc_py as dm


def main():
    mix = dm.GaussianMixture.benchmark(modes=8, dim=4, box_size=1.0, min_separation=0.3, seed=2)
    assert mix.n_modes == 8 and mix.dim == 4
    assert abs(sum(mix.weights) - 1.0) < 1e-12

    # Score against a central difference of the log-density.
    x, sigma, h = [0.3, 0.1, -0.2, 0.5], 0.4, 1e-5
    s = mix.score(x, sigma)
    for i in range(4):
        up, dn = list(x), list(x)
        up[i] += h
        dn[i] -= h
        fd = (mix.log_density(up, sigma) - mix.log_density(dn, sigma)) / (2 * h)
        assert abs(fd - s[i]) < 1e-5 * max(1.0, abs(s[i])), (i, fd, s[i])

    post = mix.sigma_posterior(mix.means[0], m=100)
    assert len(post) == 100 and abs(sum(post) - 1.0) < 1e-10

    out = dm.dlg_sample(mix, eta=0.05, n_skip=2, n_den=6, n_chains=2,
                        samples_per_chain=50, m=200, start_mode=0, seed=7)
    assert len(out["samples"]) == 100 == len(out["chains"])
    ledger = out["ledger"]
    assert ledger["samples"] == 100
    assert math.isclose(out["nfe_per_sample"],
                        (ledger["init"] + ledger["langevin"] + ledger["denoise"]) / 100)
    again = dm.dlg_sample(mix, eta=0.05, n_skip=2, n_den=6, n_chains=2,
                          samples_per_chain=50, m=200, start_mode=0, seed=7)
    assert again["samples"] == out["samples"]
    covered = dm.mode_coverage(out["samples"], mix)
    assert 1 <= covered <= 8

    xf, nfe = dm.integrate(dm.GaussianMixture([[0.0]], [1.0]), [2.0], 1.0, 0.1,
                           integrator="karras_det", nfe_budget=399)
    assert nfe == 399 and abs(xf[0] - 2 * math.sqrt(1.01 / 2)) < 1e-5

    assert dm.frechet_gaussian_distance(out["samples"], out["samples"]) < 1e-9
    assert math.isclose(dm.eta_from_kappa(0.5, 4), 1.0)

    with tempfile.TemporaryDirectory() as tmp:
        cfg = {
            "mixture": {"inline": json.loads(mix.to_json())},
            "schedule": {"sigma_min": 0.01, "sigma_max": 50.0, "m": 100},
            "sampler": {"algo": "dlg", "eta": 0.05, "n_chains": 2, "samples_per_chain": 30, "start_mode": 0},
            "seed": 1,
        }
        path = Path(tmp) / "cfg.json"
        path.write_text(json.dumps(cfg))
        manifest = json.loads(dm.run_experiment("mixing", str(path), out=str(Path(tmp) / "run")))
        assert manifest["command"] == "mixing"
        assert (Path(tmp) / "run" / "coverage_dlg.csv").exists()

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
