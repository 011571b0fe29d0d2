//! The CLI subcommands as library functions. Each takes a resolved config,
//! writes into its output directory only, and returns the manifest.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bench::{convergence_order, gaussian_terminal_error};
use super::config::{Algo, ClassifierBlock, ClassifierKind, ExperimentConfig, MixtureSource, SamplerBlock};
use super::manifest::{RunManifest, RunWriter};
use super::output::schema;
use super::render::scatter_png;
use crate::classifier::{
    make_training_set, FeatureMap, NoiseClassifier, NoiseLevelPredictor, TrainOptions, TrainReport,
};
use crate::diagnostics::{
    chi_square_class_fit, class_autocorrelation, decorrelation_lag, frechet_gaussian_distance, mode_coverage,
    NfeLedger,
};
use crate::error::{Error, Result};
use crate::integrators::{IntegratorConfig, IntegratorName, IntegratorRun};
use crate::mog::{GaussianMixture, MixtureFile};
use crate::rng::{child_seed, stream, Purpose};
use crate::samplers::{ald_run, argmax, dlg_run, plain_langevin_run, SamplerOutput};
use crate::ve::{tweedie_denoise, NoiseGrid, VeSchedule};
use crate::ExactPosterior;

/// Applies CLI overrides, validates, and pins everything a re-run needs: the
/// seed, a mixture read from disk (inlined verbatim), absolute paths.
pub fn resolve(mut cfg: ExperimentConfig, seed: Option<u64>, out: Option<PathBuf>) -> Result<ExperimentConfig> {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.output_dir = Some(o);
    }
    cfg.validate()?;
    if let MixtureSource::File(p) = &cfg.mixture {
        let raw: MixtureFile = serde_json::from_str(&std::fs::read_to_string(p)?)?;
        cfg.mixture = MixtureSource::Inline(raw);
    }
    if let Some(p) = &cfg.classifier.path {
        cfg.classifier.path = Some(std::path::absolute(p)?);
    }
    if let Some(p) = &cfg.output_dir {
        cfg.output_dir = Some(std::path::absolute(p)?);
    }
    Ok(cfg)
}

fn output_dir(cfg: &ExperimentConfig) -> Result<PathBuf> {
    cfg.output_dir
        .clone()
        .ok_or_else(|| Error::Config(vec!["output_dir is required (set it in the config or pass --out)".into()]))
}

struct Setup {
    mix: GaussianMixture,
    grid: NoiseGrid,
    sched: VeSchedule,
}

fn setup(cfg: &ExperimentConfig) -> Result<Setup> {
    cfg.validate()?;
    let mix = cfg.mixture()?;
    let grid = cfg.schedule.grid()?;
    let sched = VeSchedule::from_grid(&grid)?;
    Ok(Setup { mix, grid, sched })
}

/// `n` exact draws from the target on stream `(seed, GroundTruth, index)`.
pub fn ground_truth(mix: &GaussianMixture, n: usize, seed: u64, index: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = stream(seed, Purpose::GroundTruth, index);
    (0..n).map(|_| mix.sample_smoothed(0.0, &mut rng)).collect()
}

/// Fraction of `inputs` on which two predictors' argmax levels are within
/// `k` grid indices.
pub fn argmax_agreement(
    a: &dyn NoiseLevelPredictor,
    b: &dyn NoiseLevelPredictor,
    inputs: &[Vec<f64>],
    k: usize,
) -> Result<f64> {
    if inputs.is_empty() {
        return Err(Error::EmptyInput("no inputs to compare".into()));
    }
    let hits = inputs
        .par_iter()
        .map(|x| Ok(usize::from(argmax(&a.predict(x)?).abs_diff(argmax(&b.predict(x)?)) <= k)))
        .collect::<Result<Vec<_>>>()?;
    Ok(hits.iter().sum::<usize>() as f64 / inputs.len() as f64)
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainedClassifier {
    #[serde(skip)]
    pub classifier: NoiseClassifier,
    pub report: TrainReport,
    /// Held-out agreement with the exact posterior's argmax within ±2 levels.
    pub exact_agreement: f64,
    pub held_out_size: usize,
}

/// Trains a classifier on corrupted draws from the mixture. Data, feature
/// codebook and minibatch order each use their own stream.
pub fn train_classifier(
    mix: &GaussianMixture,
    grid: &NoiseGrid,
    block: &ClassifierBlock,
    seed: u64,
) -> Result<TrainedClassifier> {
    let mut data_rng = stream(seed, Purpose::ClassifierData, 0);
    let train = make_training_set(mix, grid, block.n_per_level, block.weighting, &mut data_rng)?;
    let mut held_rng = stream(seed, Purpose::HeldOut, 0);
    let held = make_training_set(mix, grid, block.held_out_per_level, block.weighting, &mut held_rng)?;
    let mut feat_rng = stream(seed, Purpose::ClassifierFeatures, 0);
    let fmap = FeatureMap::from_mixture(mix, grid, block.max_codebook, block.max_projected_dim, &mut feat_rng)?;
    let mut classifier = NoiseClassifier::new(fmap, grid, &train.inputs)?;
    let opts = TrainOptions {
        epochs: block.epochs,
        learning_rate: block.learning_rate,
        batch_size: block.batch_size,
        seed: child_seed(seed, Purpose::ClassifierTraining, 0),
        k: 2,
    };
    let report = classifier.train(&train, &held, opts)?;
    let exact = ExactPosterior::new(mix, grid.clone());
    let exact_agreement = argmax_agreement(&classifier, &exact, &held.inputs, 2)?;
    Ok(TrainedClassifier {
        classifier,
        report,
        exact_agreement,
        held_out_size: held.len(),
    })
}

enum Predictor<'a> {
    Exact(ExactPosterior<'a>),
    Trained(Box<NoiseClassifier>),
}

impl Predictor<'_> {
    fn as_dyn(&self) -> &dyn NoiseLevelPredictor {
        match self {
            Predictor::Exact(p) => p,
            Predictor::Trained(c) => c.as_ref(),
        }
    }
}

fn build_predictor<'a>(cfg: &ExperimentConfig, s: &'a Setup, w: &mut RunWriter) -> Result<Predictor<'a>> {
    match (cfg.classifier.kind, &cfg.classifier.path) {
        (ClassifierKind::Exact, _) => Ok(Predictor::Exact(ExactPosterior::new(&s.mix, s.grid.clone()))),
        (ClassifierKind::Trained, Some(path)) => {
            let c = NoiseClassifier::load(path)?;
            if c.schedule != cfg.schedule {
                return Err(Error::InvalidInput(format!(
                    "classifier at {} was trained on a different noise schedule",
                    path.display()
                )));
            }
            if c.feature_map.dim != s.mix.dim() {
                return Err(Error::InvalidInput("classifier dimension does not match the mixture".into()));
            }
            Ok(Predictor::Trained(Box::new(c)))
        }
        (ClassifierKind::Trained, None) => {
            let t = w.timed("train_classifier", || train_classifier(&s.mix, &s.grid, &cfg.classifier, cfg.seed))?;
            w.diagnostic("classifier", &t)?;
            Ok(Predictor::Trained(Box::new(t.classifier)))
        }
    }
}

fn run_block(
    block: &SamplerBlock,
    cfg: &ExperimentConfig,
    s: &Setup,
    predictor: &dyn NoiseLevelPredictor,
) -> Result<SamplerOutput> {
    match block.algo {
        Algo::Dlg => dlg_run(&s.mix, predictor, &s.sched, &cfg.integrator, &block.dlg_config(&s.mix)?, cfg.seed),
        Algo::Langevin => plain_langevin_run(&s.mix, &block.langevin_config(&s.mix, &cfg.schedule)?, cfg.seed),
        Algo::Ald => ald_run(&s.mix, &block.ald_grid(&cfg.schedule)?, &block.ald_config(&s.mix)?, cfg.seed),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixingSummary {
    pub label: String,
    pub algo: String,
    pub n_samples: usize,
    pub n_modes: usize,
    pub modes_covered: usize,
    /// Pooled sample count at which every mode had been hit.
    pub full_coverage_at: Option<usize>,
    pub unassigned: usize,
    pub chi_square: Option<f64>,
    pub chi_square_dof: usize,
    pub fgd: Option<f64>,
    pub fgd_reference: Option<f64>,
    pub decorrelation_lag: Option<usize>,
    pub nfe_per_sample: f64,
    pub nfe_per_sample_excluding_init: f64,
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn chain_autocorrelation(out: &SamplerOutput, mix: &GaussianMixture, cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    let mut acfs = Vec::new();
    for c in &out.chains {
        if c.emissions.is_empty() {
            continue;
        }
        let classes: Vec<usize> = c.emissions.iter().map(|e| mix.nearest_mode(&e.x).0).collect();
        acfs.push(class_autocorrelation(&classes, cfg.diagnostics.max_lag, cfg.diagnostics.autocorr)?);
    }
    let len = acfs.iter().map(Vec::len).min().unwrap_or(0);
    Ok((0..len)
        .map(|lag| acfs.iter().map(|a| a[lag]).sum::<f64>() / acfs.len() as f64)
        .collect())
}

fn write_run_outputs(
    label: &str,
    block: &SamplerBlock,
    out: &SamplerOutput,
    cfg: &ExperimentConfig,
    s: &Setup,
    truth: &(Vec<Vec<f64>>, Vec<Vec<f64>>),
    w: &mut RunWriter,
) -> Result<MixingSummary> {
    let pooled = out.interleaved();
    let assign = mode_coverage(&pooled, &s.mix, cfg.diagnostics.threshold_multiple, cfg.schedule.sigma_min)?;
    let n_modes = s.mix.n_modes();
    let rows: Vec<Vec<String>> = assign
        .coverage_curve
        .iter()
        .enumerate()
        .map(|(i, c)| vec![(i + 1).to_string(), c.to_string()])
        .collect();
    w.csv(&format!("coverage_{label}.csv"), schema::COVERAGE, &rows)?;

    let counts = assign.class_counts(n_modes);
    let assigned: u64 = counts.iter().sum();
    let rows: Vec<Vec<String>> = counts
        .iter()
        .zip(s.mix.weights())
        .enumerate()
        .map(|(k, (c, wk))| vec![k.to_string(), c.to_string(), fmt(assigned as f64 * wk)])
        .collect();
    w.csv(&format!("classes_{label}.csv"), schema::CLASSES, &rows)?;

    let acf = chain_autocorrelation(out, &s.mix, cfg)?;
    let rows: Vec<Vec<String>> = acf.iter().enumerate().map(|(l, v)| vec![l.to_string(), fmt(*v)]).collect();
    w.csv(&format!("autocorr_{label}.csv"), schema::AUTOCORR, &rows)?;

    let d = s.mix.dim();
    let mut header: Vec<String> = vec!["chain".into(), "index".into(), "sigma_index".into()];
    header.extend((0..d).map(|j| format!("x{j}")));
    let header_ref: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut rows = Vec::with_capacity(out.n_samples());
    for c in &out.chains {
        for (i, e) in c.emissions.iter().enumerate() {
            let mut r = vec![c.chain.to_string(), i.to_string(), e.sigma_index.to_string()];
            r.extend(e.x.iter().map(|v| fmt(*v)));
            rows.push(r);
        }
    }
    w.csv(&format!("samples_{label}.csv"), (schema::SAMPLES, &header_ref), &rows)?;

    if d == 2 && cfg.diagnostics.render {
        let name = format!("scatter_{label}.png");
        let traj: Vec<&[f64]> = out
            .chains
            .first()
            .map(|c| c.emissions.iter().take(40).map(|e| e.x.as_slice()).collect())
            .unwrap_or_default();
        scatter_png(&w.dir().join(&name), &s.mix, &pooled, &traj)?;
        w.register(&name, "scatter/v1");
    }

    let (chi, dof) = match chi_square_class_fit(&counts, s.mix.weights()) {
        Ok((c, d)) => (Some(c), d),
        Err(_) => (None, n_modes.saturating_sub(1)),
    };
    let (fgd, fgd_ref) = if pooled.len() >= 2 {
        (
            Some(frechet_gaussian_distance(&pooled, &truth.0.iter().map(Vec::as_slice).collect::<Vec<_>>())?),
            Some(frechet_gaussian_distance(&truth.1, &truth.0)?),
        )
    } else {
        (None, None)
    };
    Ok(MixingSummary {
        label: label.to_string(),
        algo: block.algo.as_str().to_string(),
        n_samples: pooled.len(),
        n_modes,
        modes_covered: assign.covered,
        full_coverage_at: assign.coverage_curve.iter().position(|&c| c == n_modes).map(|i| i + 1),
        unassigned: assign.unassigned,
        chi_square: chi,
        chi_square_dof: dof,
        fgd,
        fgd_reference: fgd_ref,
        decorrelation_lag: decorrelation_lag(&acf, out.chains.first().map_or(0, |c| c.emissions.len())),
        nfe_per_sample: out.ledger.per_sample(),
        nfe_per_sample_excluding_init: out.ledger.per_sample_excluding_init(),
    })
}

fn truth_pair(cfg: &ExperimentConfig, mix: &GaussianMixture, n_samples: usize) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let n = cfg.diagnostics.ground_truth_samples.unwrap_or(n_samples).max(2);
    Ok((ground_truth(mix, n, cfg.seed, 0)?, ground_truth(mix, n, cfg.seed, 1)?))
}

/// Runs the primary sampler and every baseline on the same mixture and seed.
pub fn cmd_mixing(cfg: &ExperimentConfig) -> Result<RunManifest> {
    let s = setup(cfg)?;
    cfg.sampler()?;
    let dir = output_dir(cfg)?;
    let mut w = RunWriter::new("mixing", cfg, dir);
    let predictor = build_predictor(cfg, &s, &mut w)?;
    let mut blocks = vec![cfg.sampler()?.clone()];
    blocks.extend(cfg.baselines.iter().cloned());
    let mut summaries = Vec::new();
    for block in &blocks {
        let label = block.label();
        let out = w.timed(&format!("run_{label}"), || run_block(block, cfg, &s, predictor.as_dyn()))?;
        let truth = truth_pair(cfg, &s.mix, out.n_samples())?;
        summaries.push(write_run_outputs(&label, block, &out, cfg, &s, &truth, &mut w)?);
        w.ledger(&label, out.ledger);
    }
    w.diagnostic("runs", &summaries)?;
    w.finish()
}

#[derive(Debug, Clone, Serialize)]
struct OrderFit {
    integrator: String,
    sigma_start: f64,
    steps: Vec<usize>,
    order: f64,
}

#[derive(Debug, Clone, Serialize)]
struct IntervalCheck {
    integrator: String,
    nfe_budget: usize,
    error_low_start: f64,
    error_high_start: f64,
    low_start_wins: bool,
}

/// Steps used for the Richardson fits.
pub const ORDER_STEPS: [usize; 5] = [16, 32, 64, 128, 256];

/// Error-vs-NFE on the Gaussian oracle and FGD-vs-NFE on the mixture, for
/// every integrator, budget and starting level.
pub fn cmd_benchmark_integrators(cfg: &ExperimentConfig) -> Result<RunManifest> {
    let s = setup(cfg)?;
    let dir = output_dir(cfg)?;
    let b = cfg.benchmark.clone().unwrap_or_default();
    let mut w = RunWriter::new("benchmark-integrators", cfg, dir);
    let sigma_min = cfg.schedule.sigma_min;
    let variants = |name: IntegratorName| -> Vec<(IntegratorConfig, usize)> {
        let base = IntegratorConfig { name, ..cfg.integrator };
        if name == IntegratorName::Rk45 {
            b.rk45_tolerances
                .iter()
                .map(|&t| (IntegratorConfig { rtol: t, atol: t, ..base }, 0))
                .collect()
        } else {
            b.budgets.iter().map(|&n| (base, n)).collect()
        }
    };

    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let mut orders = Vec::new();
    w.timed("gaussian", || {
        for &name in &b.integrators {
            for &sigma_start in &b.sigma_starts {
                for (ic, budget) in variants(name) {
                    let cell = gaussian_terminal_error(&ic, budget, sigma_start, sigma_min, b.gaussian_s, &s.sched)?;
                    rows.push(vec![name.as_str().to_string(), fmt(sigma_start), cell.nfe.to_string(), fmt(cell.error)]);
                }
            }
            if name.is_fixed_step() {
                let ic = IntegratorConfig { name, ..cfg.integrator };
                let lo = b.sigma_starts.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = b.sigma_starts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if lo < hi {
                    for &budget in &b.budgets {
                        let el = gaussian_terminal_error(&ic, budget, lo, sigma_min, b.gaussian_s, &s.sched)?.error;
                        let eh = gaussian_terminal_error(&ic, budget, hi, sigma_min, b.gaussian_s, &s.sched)?.error;
                        checks.push(IntervalCheck {
                            integrator: name.as_str().into(),
                            nfe_budget: budget,
                            error_low_start: el,
                            error_high_start: eh,
                            low_start_wins: el < eh,
                        });
                    }
                }
                for &sigma_start in &b.sigma_starts {
                    orders.push(OrderFit {
                        integrator: name.as_str().into(),
                        sigma_start,
                        steps: ORDER_STEPS.to_vec(),
                        order: convergence_order(&ic, &ORDER_STEPS, sigma_start, sigma_min, b.gaussian_s, &s.sched)?,
                    });
                }
            }
        }
        Ok(())
    })?;
    w.csv("bench_gaussian.csv", schema::BENCH_GAUSSIAN, &rows)?;
    w.diagnostic("interval_checks", &checks)?;
    w.diagnostic("orders", &orders)?;

    if b.mog_samples > 0 {
        let truth = ground_truth(&s.mix, b.mog_samples, cfg.seed, 0)?;
        let mut rows = Vec::new();
        w.timed("mog", || {
            for (si, &sigma_start) in b.sigma_starts.iter().enumerate() {
                // Shared across integrators: same start points, same noise.
                let mut rng = stream(cfg.seed, Purpose::Benchmark, si as u64);
                let starts: Vec<Vec<f64>> = (0..b.mog_samples)
                    .map(|_| s.mix.sample_smoothed(sigma_start, &mut rng))
                    .collect::<Result<_>>()?;
                for &name in &b.integrators {
                    for (ic, budget) in variants(name) {
                        let (fgd, nfe) = mog_cell(&ic, budget, sigma_start, &starts, &truth, &s, cfg.seed)?;
                        rows.push(vec![name.as_str().to_string(), fmt(sigma_start), fmt(nfe), fmt(fgd)]);
                    }
                }
            }
            Ok(())
        })?;
        w.csv("bench_mog.csv", schema::BENCH_MOG, &rows)?;
    }
    w.finish()
}

/// Denoises every start point from `sigma_start` to `σ_min`, applies
/// Tweedie, and returns the FGD to `truth` and the mean NFE per sample.
fn mog_cell(
    ic: &IntegratorConfig,
    budget: usize,
    sigma_start: f64,
    starts: &[Vec<f64>],
    truth: &[Vec<f64>],
    s: &Setup,
    seed: u64,
) -> Result<(f64, f64)> {
    let sigma_min = s.sched.sigma_min();
    let results = starts
        .par_iter()
        .enumerate()
        .map(|(k, x0)| {
            let mut rng = stream(seed, Purpose::Benchmark, (1 << 32) + k as u64);
            let r = ic.integrate_with_budget(&IntegratorRun::new(x0, sigma_start, sigma_min), budget, &s.mix, &s.sched, &mut rng)?;
            Ok((tweedie_denoise(&s.mix, &r.x_final, sigma_min)?, r.nfe + 1))
        })
        .collect::<Result<Vec<_>>>()?;
    let nfe = results.iter().map(|r| r.1).sum::<u64>() as f64 / results.len() as f64;
    let xs: Vec<Vec<f64>> = results.into_iter().map(|r| r.0).collect();
    Ok((frechet_gaussian_distance(&xs, truth)?, nfe))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationCell {
    pub step: f64,
    pub eta: f64,
    /// Configured fraction; `n_den` is its rounding.
    pub nden_frac: f64,
    pub n_skip: usize,
    pub n_den: usize,
    pub nfe: usize,
    pub measured_nfe_per_sample: f64,
    pub fgd: f64,
    pub ledger: NfeLedger,
}

fn argmin_by<'a>(cells: impl Iterator<Item = &'a AblationCell>) -> Option<&'a AblationCell> {
    cells.min_by(|a, b| a.fgd.total_cmp(&b.fgd))
}

/// Splits a per-sample budget `n` into `(n_skip, n_den)` with
/// `n_den ≈ frac · n` and both parts at least 1.
pub fn split_budget(n: usize, frac: f64) -> (usize, usize) {
    let n_den = ((frac * n as f64).round() as usize).clamp(1, n - 1);
    (n - n_den, n_den)
}

/// DLG over the step-size × `n_den/n` × NFE grid. Every cell uses the
/// master seed, so cells share random numbers and a singleton grid matches
/// the mixing run.
pub fn cmd_ablation(cfg: &ExperimentConfig) -> Result<RunManifest> {
    let s = setup(cfg)?;
    let dir = output_dir(cfg)?;
    let a = cfg
        .ablation
        .clone()
        .ok_or_else(|| Error::Config(vec!["ablation block is required".into()]))?;
    let sampler = cfg.sampler()?;
    if sampler.algo != Algo::Dlg {
        return Err(Error::Config(vec!["ablation sweeps the dlg sampler; set sampler.algo = dlg".into()]));
    }
    let mut w = RunWriter::new("ablation", cfg, dir);
    let predictor = build_predictor(cfg, &s, &mut w)?;
    let (steps, kappa) = match (&a.etas, &a.kappas) {
        (Some(e), _) => (e.clone(), false),
        (_, Some(k)) => (k.clone(), true),
        _ => unreachable!("validated"),
    };
    let d = s.mix.dim();
    let mut cells = Vec::new();
    let mut truth: Option<Vec<Vec<f64>>> = None;
    w.timed("sweep", || {
        for &step in &steps {
            for &frac in &a.nden_fracs {
                for &n in &a.nfes {
                    let (n_skip, n_den) = split_budget(n, frac);
                    let block = SamplerBlock {
                        eta: (!kappa).then_some(step),
                        kappa: kappa.then_some(step),
                        n_skip,
                        n_den,
                        ..sampler.clone()
                    };
                    let dlg = block.dlg_config(&s.mix)?;
                    let out = dlg_run(&s.mix, predictor.as_dyn(), &s.sched, &cfg.integrator, &dlg, cfg.seed)?;
                    let pooled = out.interleaved();
                    if truth.is_none() {
                        let n = cfg.diagnostics.ground_truth_samples.unwrap_or(pooled.len()).max(2);
                        truth = Some(ground_truth(&s.mix, n, cfg.seed, 0)?);
                    }
                    let t = truth.as_ref().expect("set above");
                    let fgd = frechet_gaussian_distance(&pooled, &t.iter().map(Vec::as_slice).collect::<Vec<_>>())?;
                    cells.push(AblationCell {
                        step,
                        eta: dlg.step.eta(d)?,
                        nden_frac: frac,
                        n_skip,
                        n_den,
                        nfe: n,
                        measured_nfe_per_sample: out.ledger.per_sample_excluding_init(),
                        fgd,
                        ledger: out.ledger,
                    });
                }
            }
        }
        Ok(())
    })?;
    let rows: Vec<Vec<String>> = cells
        .iter()
        .map(|c| vec![fmt(c.eta), fmt(c.nden_frac), c.nfe.to_string(), fmt(c.fgd)])
        .collect();
    w.csv("ablation.csv", schema::ABLATION, &rows)?;

    #[derive(Serialize)]
    struct Optimum<'a> {
        panel: &'static str,
        value: f64,
        best: &'a AblationCell,
    }
    let mut optima = Vec::new();
    for &n in &a.nfes {
        if let Some(best) = argmin_by(cells.iter().filter(|c| c.nfe == n)) {
            optima.push(Optimum { panel: "nfe", value: n as f64, best });
        }
    }
    for &step in &steps {
        if let Some(best) = argmin_by(cells.iter().filter(|c| c.step == step)) {
            optima.push(Optimum { panel: if kappa { "kappa" } else { "eta" }, value: step, best });
        }
    }
    for &frac in &a.nden_fracs {
        if let Some(best) = argmin_by(cells.iter().filter(|c| c.nden_frac == frac)) {
            optima.push(Optimum { panel: "nden_frac", value: frac, best });
        }
    }
    w.diagnostic("optima", &optima)?;
    w.diagnostic("overall_optimum", argmin_by(cells.iter()))?;
    w.diagnostic("cells", &cells)?;
    let mut total = NfeLedger::default();
    for c in &cells {
        total.merge(&c.ledger);
    }
    w.ledger("sweep", total);
    w.finish()
}

/// Trains the noise-level classifier and saves it as `classifier.json`.
pub fn cmd_train_classifier(cfg: &ExperimentConfig) -> Result<RunManifest> {
    let s = setup(cfg)?;
    let dir = output_dir(cfg)?;
    let mut w = RunWriter::new("train-classifier", cfg, dir);
    let t = w.timed("train", || train_classifier(&s.mix, &s.grid, &cfg.classifier, cfg.seed))?;
    let path = w.dir().join("classifier.json");
    t.classifier.save(&path)?;
    w.register("classifier.json", crate::classifier::FEATURE_MAP_VERSION);
    w.diagnostic("classifier", &t)?;
    w.finish()
}
