//! Experiment configuration: one JSON document with a block per module.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifier::LevelWeighting;
use crate::diagnostics::AutocorrMode;
use crate::error::{Error, Result};
use crate::integrators::{IntegratorConfig, IntegratorName};
use crate::mog::{BenchmarkMixture, GaussianMixture, MixtureFile};
use crate::samplers::{
    AldConfig, ChainStart, DlgConfig, InitConfig, PlainLangevinConfig, SigmaUpdateMode, StepSize,
};
use crate::ve::{NoiseGrid, ScheduleSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixtureSource {
    /// Path to a mixture JSON file, relative to the config file.
    File(PathBuf),
    Generate(BenchmarkMixture),
    Inline(MixtureFile),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algo {
    #[default]
    Dlg,
    Ald,
    Langevin,
}

impl Algo {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algo::Dlg => "dlg",
            Algo::Ald => "ald",
            Algo::Langevin => "langevin",
        }
    }
}

fn one() -> usize {
    1
}
fn default_n_den() -> usize {
    20
}
fn default_chains() -> usize {
    10
}
fn default_samples() -> usize {
    500
}

/// Sampler block. Fields that do not apply to `algo` are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerBlock {
    #[serde(default)]
    pub algo: Algo,
    /// Output file suffix; defaults to the algorithm name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default = "one")]
    pub n_skip: usize,
    #[serde(default = "default_n_den")]
    pub n_den: usize,
    #[serde(default)]
    pub sigma_update: SigmaUpdateMode,
    #[serde(default = "default_chains")]
    pub n_chains: usize,
    /// Emitted samples per chain (ALD: sweeps per chain).
    #[serde(default = "default_samples")]
    pub samples_per_chain: usize,
    #[serde(default)]
    pub init: InitConfig,
    /// Zero-based mode index every chain starts at; absent means the
    /// algorithm's own initialization.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_mode: Option<usize>,
    /// Langevin: iterations between emitted samples.
    #[serde(default = "one")]
    pub emit_every: usize,
    /// Langevin: noise level the chain runs at (default `σ_min`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// ALD: Langevin iterations per level.
    #[serde(default = "one")]
    pub iters_per_level: usize,
    /// ALD: number of geometric levels (default: the schedule's `m`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
}

impl Default for SamplerBlock {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all sampler fields have defaults")
    }
}

impl SamplerBlock {
    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.algo.as_str().to_string())
    }

    fn step(&self) -> Option<StepSize> {
        match (self.eta, self.kappa) {
            (Some(e), None) => Some(StepSize::Eta(e)),
            (None, Some(k)) => Some(StepSize::Kappa(k)),
            _ => None,
        }
    }

    pub fn violations(&self, prefix: &str, n_modes: usize) -> Vec<String> {
        let mut out = Vec::new();
        match (self.eta, self.kappa) {
            (Some(_), Some(_)) => out.push(format!("{prefix}: set exactly one of eta and kappa, not both")),
            (None, None) => out.push(format!("{prefix}: one of eta or kappa is required")),
            (Some(e), None) if !(e.is_finite() && e > 0.0) => out.push(format!("{prefix}.eta must be > 0, got {e}")),
            (None, Some(k)) if !(k.is_finite() && k > 0.0) => out.push(format!("{prefix}.kappa must be > 0, got {k}")),
            _ => {}
        }
        let mut counts = vec![("n_chains", self.n_chains), ("samples_per_chain", self.samples_per_chain)];
        match self.algo {
            Algo::Dlg => counts.extend([("n_skip", self.n_skip), ("n_den", self.n_den)]),
            Algo::Langevin => counts.push(("emit_every", self.emit_every)),
            Algo::Ald => counts.push(("iters_per_level", self.iters_per_level)),
        }
        for (name, v) in counts {
            if v == 0 {
                out.push(format!("{prefix}.{name} must be >= 1"));
            }
        }
        if !(self.init.noise_var.is_finite() && self.init.noise_var >= 0.0) {
            out.push(format!("{prefix}.init.noise_var must be >= 0"));
        }
        if let Some(k) = self.start_mode {
            if k >= n_modes {
                out.push(format!("{prefix}.start_mode {k} is out of range for {n_modes} modes"));
            }
        }
        if let Some(s) = self.sigma {
            if !(s.is_finite() && s > 0.0) {
                out.push(format!("{prefix}.sigma must be > 0, got {s}"));
            }
        }
        if self.levels == Some(0) {
            out.push(format!("{prefix}.levels must be >= 1"));
        }
        out
    }

    fn start(&self, mix: &GaussianMixture) -> ChainStart {
        match self.start_mode {
            Some(k) => ChainStart::At(mix.mean(k).to_vec()),
            None => ChainStart::FromNoise,
        }
    }

    pub fn dlg_config(&self, mix: &GaussianMixture) -> Result<DlgConfig> {
        Ok(DlgConfig {
            step: self.step().ok_or_else(|| Error::Config(vec!["sampler step size".into()]))?,
            n_skip: self.n_skip,
            n_den: self.n_den,
            sigma_update: self.sigma_update,
            n_chains: self.n_chains,
            samples_per_chain: self.samples_per_chain,
            init: self.init,
            start: self.start(mix),
        })
    }

    pub fn langevin_config(&self, mix: &GaussianMixture, schedule: &ScheduleSpec) -> Result<PlainLangevinConfig> {
        Ok(PlainLangevinConfig {
            step: self.step().ok_or_else(|| Error::Config(vec!["sampler step size".into()]))?,
            sigma: self.sigma.unwrap_or(schedule.sigma_min),
            n_chains: self.n_chains,
            n_steps: self.samples_per_chain * self.emit_every,
            emit_every: self.emit_every,
            start: self.start(mix),
        })
    }

    pub fn ald_config(&self, mix: &GaussianMixture) -> Result<AldConfig> {
        Ok(AldConfig {
            step: self.step().ok_or_else(|| Error::Config(vec!["sampler step size".into()]))?,
            iters_per_level: self.iters_per_level,
            n_chains: self.n_chains,
            sweeps: self.samples_per_chain,
            start: self.start(mix),
        })
    }

    pub fn ald_grid(&self, schedule: &ScheduleSpec) -> Result<NoiseGrid> {
        match self.levels {
            Some(1) => NoiseGrid::single(schedule.sigma_min),
            Some(m) => NoiseGrid::new(schedule.sigma_min, schedule.sigma_max, m),
            None => schedule.grid(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    /// Exact Bayes posterior of the mixture.
    #[default]
    Exact,
    Trained,
}

fn d_n_per_level() -> usize {
    200
}
fn d_held_out() -> usize {
    50
}
fn d_epochs() -> usize {
    200
}
fn d_lr() -> f64 {
    0.5
}
fn d_batch() -> usize {
    64
}
fn d_codebook() -> usize {
    64
}
fn d_projected() -> usize {
    32
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierBlock {
    #[serde(default)]
    pub kind: ClassifierKind,
    /// Load a trained classifier instead of training one in the run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default = "d_n_per_level")]
    pub n_per_level: usize,
    #[serde(default = "d_held_out")]
    pub held_out_per_level: usize,
    #[serde(default = "d_epochs")]
    pub epochs: usize,
    #[serde(default = "d_lr")]
    pub learning_rate: f64,
    #[serde(default = "d_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub weighting: LevelWeighting,
    #[serde(default = "d_codebook")]
    pub max_codebook: usize,
    #[serde(default = "d_projected")]
    pub max_projected_dim: usize,
}

impl Default for ClassifierBlock {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all classifier fields have defaults")
    }
}

impl ClassifierBlock {
    fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, v) in [
            ("n_per_level", self.n_per_level),
            ("held_out_per_level", self.held_out_per_level),
            ("batch_size", self.batch_size),
            ("max_codebook", self.max_codebook),
            ("max_projected_dim", self.max_projected_dim),
        ] {
            if v == 0 {
                out.push(format!("classifier.{name} must be >= 1"));
            }
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            out.push(format!("classifier.learning_rate must be > 0, got {}", self.learning_rate));
        }
        out
    }
}

fn d_threshold() -> f64 {
    3.0
}
fn d_max_lag() -> usize {
    50
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsBlock {
    #[serde(default = "d_threshold")]
    pub threshold_multiple: f64,
    #[serde(default = "d_max_lag")]
    pub max_lag: usize,
    #[serde(default)]
    pub autocorr: AutocorrMode,
    /// Size of each ground-truth reference set (default: the sample count).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth_samples: Option<usize>,
    /// Write raster scatter plots for 2-D targets.
    #[serde(default = "yes")]
    pub render: bool,
}

impl Default for DiagnosticsBlock {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all diagnostics fields have defaults")
    }
}

fn d_budgets() -> Vec<usize> {
    vec![8, 16, 32, 64]
}
fn d_sigma_starts() -> Vec<f64> {
    vec![0.5, 50.0]
}
fn d_s() -> f64 {
    1.0
}
fn d_tols() -> Vec<f64> {
    vec![1e-3, 1e-4, 1e-5, 1e-6]
}
fn d_mog_samples() -> usize {
    1000
}
fn d_integrators() -> Vec<IntegratorName> {
    IntegratorName::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkBlock {
    #[serde(default = "d_integrators")]
    pub integrators: Vec<IntegratorName>,
    /// NFE budgets for fixed-step integrators.
    #[serde(default = "d_budgets")]
    pub budgets: Vec<usize>,
    #[serde(default = "d_sigma_starts")]
    pub sigma_starts: Vec<f64>,
    /// Standard deviation of the Gaussian oracle target.
    #[serde(default = "d_s")]
    pub gaussian_s: f64,
    /// Tolerances swept for RK45 (used for both rtol and atol).
    #[serde(default = "d_tols")]
    pub rk45_tolerances: Vec<f64>,
    /// Samples per cell of the mixture FGD sweep; 0 skips it.
    #[serde(default = "d_mog_samples")]
    pub mog_samples: usize,
}

impl Default for BenchmarkBlock {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all benchmark fields have defaults")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub etas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappas: Option<Vec<f64>>,
    /// Fractions `n_den / n` of the per-sample budget spent on denoising.
    pub nden_fracs: Vec<f64>,
    /// Per-sample NFE budgets `n = n_skip + n_den`.
    pub nfes: Vec<usize>,
}

fn d_integrator() -> IntegratorConfig {
    IntegratorConfig::new(IntegratorName::ReverseDiffusion)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mixture: MixtureSource,
    #[serde(default)]
    pub schedule: ScheduleSpec,
    /// Required by the mixing and ablation commands.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SamplerBlock>,
    /// Extra samplers run next to `sampler` by the mixing study.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub baselines: Vec<SamplerBlock>,
    #[serde(default = "d_integrator")]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub classifier: ClassifierBlock,
    #[serde(default)]
    pub diagnostics: DiagnosticsBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benchmark: Option<BenchmarkBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ablation: Option<AblationBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    /// Reads a config file. A run manifest is accepted too, in which case its
    /// config snapshot is used. Relative paths resolve against the file's
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        let value = match value.get("config") {
            Some(cfg) if value.get("artifact_version").is_some() => cfg.clone(),
            _ => value,
        };
        let mut cfg: ExperimentConfig = serde_json::from_value(value)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let MixtureSource::File(p) = &mut cfg.mixture {
            rebase(p);
        }
        if let Some(p) = &mut cfg.classifier.path {
            rebase(p);
        }
        if let Some(p) = &mut cfg.output_dir {
            rebase(p);
        }
        Ok(cfg)
    }

    pub fn mixture(&self) -> Result<GaussianMixture> {
        match &self.mixture {
            MixtureSource::File(p) => GaussianMixture::load(p),
            MixtureSource::Generate(g) => g.generate(),
            MixtureSource::Inline(f) => GaussianMixture::from_file_data(f.clone()),
        }
    }

    /// Every violated field, across all blocks.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let n_modes = match self.mixture() {
            Ok(m) => m.n_modes(),
            Err(e) => {
                out.push(format!("mixture: {e}"));
                usize::MAX
            }
        };
        out.extend(self.schedule.violations());
        let mut labels = BTreeSet::new();
        if let Some(b) = &self.sampler {
            out.extend(b.violations("sampler", n_modes));
            labels.insert(b.label());
        }
        for (i, b) in self.baselines.iter().enumerate() {
            out.extend(b.violations(&format!("baselines[{i}]"), n_modes));
            if !labels.insert(b.label()) {
                out.push(format!("baselines[{i}]: duplicate label {}", b.label()));
            }
        }
        for l in &labels {
            if l.is_empty() || !l.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                out.push(format!("label {l:?} may only use letters, digits, '_' and '-'"));
            }
        }
        out.extend(self.integrator.violations("integrator"));
        out.extend(self.classifier.violations());
        if self.classifier.kind == ClassifierKind::Exact && self.classifier.path.is_some() {
            out.push("classifier.path is only used with kind = trained".into());
        }
        if !(self.diagnostics.threshold_multiple.is_finite() && self.diagnostics.threshold_multiple > 0.0) {
            out.push("diagnostics.threshold_multiple must be > 0".into());
        }
        if self.diagnostics.ground_truth_samples.is_some_and(|n| n < 2) {
            out.push("diagnostics.ground_truth_samples must be >= 2".into());
        }
        if let Some(b) = &self.benchmark {
            if b.integrators.is_empty() {
                out.push("benchmark.integrators must not be empty".into());
            }
            if b.budgets.is_empty() || b.budgets.contains(&0) {
                out.push("benchmark.budgets must be a non-empty list of positive counts".into());
            }
            if b.sigma_starts.is_empty() {
                out.push("benchmark.sigma_starts must not be empty".into());
            }
            for s in &b.sigma_starts {
                if !(*s > self.schedule.sigma_min && *s <= self.schedule.sigma_max) {
                    out.push(format!(
                        "benchmark.sigma_starts entry {s} must lie in (sigma_min, sigma_max]"
                    ));
                }
            }
            if !(b.gaussian_s.is_finite() && b.gaussian_s > 0.0) {
                out.push("benchmark.gaussian_s must be > 0".into());
            }
            if b.rk45_tolerances.iter().any(|t| !(*t > 0.0)) {
                out.push("benchmark.rk45_tolerances must be > 0".into());
            }
            if b.mog_samples == 1 {
                out.push("benchmark.mog_samples must be 0 or >= 2".into());
            }
        }
        if let Some(a) = &self.ablation {
            match (&a.etas, &a.kappas) {
                (Some(_), Some(_)) => out.push("ablation: set exactly one of etas and kappas".into()),
                (None, None) => out.push("ablation: one of etas or kappas is required".into()),
                (Some(v), None) | (None, Some(v)) => {
                    if v.is_empty() || v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                        out.push("ablation step sizes must be a non-empty list of positive values".into());
                    }
                }
            }
            if a.nden_fracs.is_empty() || a.nden_fracs.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
                out.push("ablation.nden_fracs must be a non-empty list in (0, 1)".into());
            }
            if a.nfes.is_empty() || a.nfes.iter().any(|n| *n < 2) {
                out.push("ablation.nfes must be a non-empty list of budgets >= 2".into());
            }
        }
        out
    }

    pub fn sampler(&self) -> Result<&SamplerBlock> {
        self.sampler
            .as_ref()
            .ok_or_else(|| Error::Config(vec!["sampler block is required for this command".into()]))
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> serde_json::Value {
        serde_json::json!({
            "mixture": {"generate": {"modes": 5, "dim": 2, "box_size": 10.0, "min_separation": 1.0, "seed": 1}},
            "sampler": {"eta": 0.5},
        })
    }

    #[test]
    fn defaults_validate() {
        let cfg: ExperimentConfig = serde_json::from_value(base()).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.schedule, ScheduleSpec::default());
        assert_eq!(cfg.sampler.unwrap().init, InitConfig::default());
    }

    #[test]
    fn every_violation_is_listed() {
        let mut v = base();
        v["sampler"] = serde_json::json!({"eta": 0.5, "kappa": 0.1, "n_chains": 0, "n_den": 0});
        v["schedule"] = serde_json::json!({"sigma_min": 0.01, "sigma_max": 50.0, "m": 1});
        let cfg: ExperimentConfig = serde_json::from_value(v).unwrap();
        let errs = cfg.violations();
        assert_eq!(errs.len(), 4, "{errs:?}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut v = base();
        v["sampler"]["etaa"] = serde_json::json!(1.0);
        assert!(serde_json::from_value::<ExperimentConfig>(v).is_err());
    }
}
