//! Python bindings: mixtures, the DLG sampler, integrators, diagnostics and
//! the experiment commands.

use std::collections::HashMap;
use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use dmcmc::classifier::ExactPosterior;
use dmcmc::harness::{self, ExperimentConfig};
use dmcmc::samplers::{dlg_run, ChainStart, InitConfig};
use dmcmc::score::ZeroNoise;
use dmcmc::{
    BenchmarkMixture, DlgConfig, IntegratorConfig, IntegratorName, IntegratorRun, Mode, NoiseGrid,
    SigmaUpdateMode, StepSize, VeSchedule,
};

fn err(e: dmcmc::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_integrator(name: &str) -> PyResult<IntegratorName> {
    serde_json::from_value(serde_json::Value::String(name.to_string()))
        .map_err(|_| PyValueError::new_err(format!("unknown integrator {name:?}")))
}

/// Mixture of isotropic Gaussians (point masses when base variance is 0).
#[pyclass(name = "GaussianMixture", frozen)]
struct PyMixture {
    inner: dmcmc::GaussianMixture,
}

#[pymethods]
impl PyMixture {
    #[new]
    #[pyo3(signature = (means, base_variances=None, weights=None))]
    fn new(means: Vec<Vec<f64>>, base_variances: Option<Vec<f64>>, weights: Option<Vec<f64>>) -> PyResult<Self> {
        let k = means.len();
        let dim = means.first().map_or(0, Vec::len);
        let var = base_variances.unwrap_or_else(|| vec![0.0; k]);
        let w = weights.unwrap_or_else(|| vec![1.0; k]);
        if var.len() != k || w.len() != k {
            return Err(PyValueError::new_err("base_variances and weights must match the number of means"));
        }
        let modes = means
            .into_iter()
            .zip(var.into_iter().zip(w))
            .map(|(mean, (base_variance, weight))| Mode { mean, base_variance, weight })
            .collect();
        Ok(Self { inner: dmcmc::GaussianMixture::new(dim, modes).map_err(err)? })
    }

    /// Loads the mixture JSON format `{dim, modes: [{mean, base_variance, weight}]}`.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: dmcmc::GaussianMixture::load(&path).map_err(err)? })
    }

    /// Well-separated point-mass mixture in `[0, box_size]^dim`.
    #[staticmethod]
    #[pyo3(signature = (modes, dim, box_size, min_separation, seed=0))]
    fn benchmark(modes: usize, dim: usize, box_size: f64, min_separation: f64, seed: u64) -> PyResult<Self> {
        let spec = BenchmarkMixture { modes, dim, box_size, min_separation, weight_jitter: 0.0, seed };
        Ok(Self { inner: spec.generate().map_err(err)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn n_modes(&self) -> usize {
        self.inner.n_modes()
    }

    #[getter]
    fn means(&self) -> Vec<Vec<f64>> {
        self.inner.means().map(<[f64]>::to_vec).collect()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights().to_vec()
    }

    fn log_density(&self, x: Vec<f64>, sigma: f64) -> PyResult<f64> {
        self.inner.log_density(&x, sigma).map_err(err)
    }

    fn score(&self, x: Vec<f64>, sigma: f64) -> PyResult<Vec<f64>> {
        Ok(self.inner.smoothed_score(&x, sigma).map_err(err)?.score)
    }

    /// Posterior over the levels of a geometric grid, given `x`.
    #[pyo3(signature = (x, sigma_min=0.01, sigma_max=50.0, m=1000))]
    fn sigma_posterior(&self, x: Vec<f64>, sigma_min: f64, sigma_max: f64, m: usize) -> PyResult<Vec<f64>> {
        let grid = NoiseGrid::new(sigma_min, sigma_max, m).map_err(err)?;
        self.inner.sigma_posterior(&x, &grid).map_err(err)
    }

    /// `n` draws from the target convolved with `N(0, sigma²I)`.
    #[pyo3(signature = (n, sigma=0.0, seed=0))]
    fn sample(&self, n: usize, sigma: f64, seed: u64) -> PyResult<Vec<Vec<f64>>> {
        let mut rng = dmcmc::rng::stream(seed, dmcmc::rng::Purpose::GroundTruth, 0);
        (0..n).map(|_| self.inner.sample_smoothed(sigma, &mut rng).map_err(err)).collect()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner.to_file_data()).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!("GaussianMixture(n_modes={}, dim={})", self.inner.n_modes(), self.inner.dim())
    }
}

/// Runs DLG with the exact noise-level posterior. Returns a dict with the
/// samples (chain-major), their chain ids, and the NFE ledger.
#[pyfunction]
#[pyo3(signature = (
    mixture, eta, n_skip=1, n_den=20, n_chains=10, samples_per_chain=500,
    integrator="reverse_diffusion", sigma_min=0.01, sigma_max=50.0, m=1000,
    start_mode=None, sampled_sigma=false, seed=0
))]
#[allow(clippy::too_many_arguments)]
fn dlg_sample(
    py: Python<'_>,
    mixture: &PyMixture,
    eta: f64,
    n_skip: usize,
    n_den: usize,
    n_chains: usize,
    samples_per_chain: usize,
    integrator: &str,
    sigma_min: f64,
    sigma_max: f64,
    m: usize,
    start_mode: Option<usize>,
    sampled_sigma: bool,
    seed: u64,
) -> PyResult<HashMap<String, Py<PyAny>>> {
    let mix = &mixture.inner;
    let grid = NoiseGrid::new(sigma_min, sigma_max, m).map_err(err)?;
    let sched = VeSchedule::from_grid(&grid).map_err(err)?;
    let integ = IntegratorConfig::new(parse_integrator(integrator)?);
    let start = match start_mode {
        Some(k) if k < mix.n_modes() => ChainStart::At(mix.mean(k).to_vec()),
        Some(k) => return Err(PyValueError::new_err(format!("start_mode {k} out of range"))),
        None => ChainStart::FromNoise,
    };
    let cfg = DlgConfig {
        step: StepSize::Eta(eta),
        n_skip,
        n_den,
        sigma_update: if sampled_sigma { SigmaUpdateMode::Sampled } else { SigmaUpdateMode::Argmax },
        n_chains,
        samples_per_chain,
        init: InitConfig::default(),
        start,
    };
    let out = py
        .detach(|| {
            let post = ExactPosterior::new(mix, grid);
            dlg_run(mix, &post, &sched, &integ, &cfg, seed)
        })
        .map_err(err)?;
    let chains: Vec<usize> = out
        .chains
        .iter()
        .flat_map(|c| std::iter::repeat_n(c.chain, c.emissions.len()))
        .collect();
    let l = out.ledger;
    let ledger: HashMap<&str, u64> = [("init", l.init), ("langevin", l.langevin), ("denoise", l.denoise), ("samples", l.samples)]
        .into_iter()
        .collect();
    let mut d: HashMap<String, Py<PyAny>> = HashMap::new();
    d.insert("samples".into(), out.samples().into_pyobject(py)?.into_any().unbind());
    d.insert("chains".into(), chains.into_pyobject(py)?.into_any().unbind());
    d.insert("ledger".into(), ledger.into_pyobject(py)?.into_any().unbind());
    d.insert("nfe_per_sample".into(), l.per_sample().into_pyobject(py)?.into_any().unbind());
    Ok(d)
}

/// Integrates one point from `sigma_start` to `sigma_end` with noise
/// switched off. Returns `(x_final, nfe)`.
#[pyfunction]
#[pyo3(signature = (mixture, x0, sigma_start, sigma_end, integrator="karras_det", nfe_budget=32, sigma_min=0.01, sigma_max=50.0))]
#[allow(clippy::too_many_arguments)]
fn integrate(
    mixture: &PyMixture,
    x0: Vec<f64>,
    sigma_start: f64,
    sigma_end: f64,
    integrator: &str,
    nfe_budget: usize,
    sigma_min: f64,
    sigma_max: f64,
) -> PyResult<(Vec<f64>, u64)> {
    let sched = VeSchedule::new(sigma_min, sigma_max).map_err(err)?;
    let integ = IntegratorConfig::new(parse_integrator(integrator)?);
    let r = integ
        .integrate_with_budget(&IntegratorRun::new(&x0, sigma_start, sigma_end), nfe_budget, &mixture.inner, &sched, &mut ZeroNoise)
        .map_err(err)?;
    Ok((r.x_final, r.nfe))
}

#[pyfunction]
fn eta_from_kappa(kappa: f64, dim: usize) -> PyResult<f64> {
    dmcmc::samplers::eta_from_kappa(kappa, dim).map_err(err)
}

#[pyfunction]
fn frechet_gaussian_distance(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> PyResult<f64> {
    dmcmc::diagnostics::frechet_gaussian_distance(&a, &b).map_err(err)
}

/// Number of modes hit within `threshold_multiple · σ_min · √d`.
#[pyfunction]
#[pyo3(signature = (samples, mixture, threshold_multiple=3.0, sigma_min=0.01))]
fn mode_coverage(samples: Vec<Vec<f64>>, mixture: &PyMixture, threshold_multiple: f64, sigma_min: f64) -> PyResult<usize> {
    Ok(dmcmc::diagnostics::mode_coverage(&samples, &mixture.inner, threshold_multiple, sigma_min)
        .map_err(err)?
        .covered)
}

/// Runs a CLI subcommand from a config file and returns the manifest JSON.
#[pyfunction]
#[pyo3(signature = (command, config, seed=None, out=None))]
fn run_experiment(py: Python<'_>, command: &str, config: PathBuf, seed: Option<u64>, out: Option<PathBuf>) -> PyResult<String> {
    let cmd = match command {
        "mixing" => harness::cmd_mixing,
        "benchmark-integrators" => harness::cmd_benchmark_integrators,
        "ablation" => harness::cmd_ablation,
        "train-classifier" => harness::cmd_train_classifier,
        other => return Err(PyValueError::new_err(format!("unknown command {other:?}"))),
    };
    let manifest = py
        .detach(|| {
            let cfg = harness::resolve(ExperimentConfig::load(&config)?, seed, out)?;
            cmd(&cfg)
        })
        .map_err(err)?;
    serde_json::to_string(&manifest).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn dmcmc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMixture>()?;
    m.add_function(wrap_pyfunction!(dlg_sample, m)?)?;
    m.add_function(wrap_pyfunction!(integrate, m)?)?;
    m.add_function(wrap_pyfunction!(eta_from_kappa, m)?)?;
    m.add_function(wrap_pyfunction!(frechet_gaussian_distance, m)?)?;
    m.add_function(wrap_pyfunction!(mode_coverage, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
