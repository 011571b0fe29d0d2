use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::NoiseLevelPredictor;
use crate::error::{Error, Result};
use crate::integrators::{IntegratorConfig, IntegratorRun};
use crate::rng::{stream, Purpose};
use crate::score::{NoiseSource, ScoreModel};
use crate::ve::{tweedie_denoise, VeSchedule};

use super::{
    langevin_step, sigma_update, ChainOutput, ChainState, Emission, SamplerOutput, SigmaUpdateMode,
    StepSize,
};

fn default_init_nfe() -> usize {
    37
}
fn default_init_noise_var() -> f64 {
    0.25
}
fn default_init_gibbs() -> usize {
    20
}

/// Chain initialization recipe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitConfig {
    /// Score evaluations spent integrating pure noise down to `σ_min`.
    #[serde(default = "default_init_nfe")]
    pub integrator_nfe: usize,
    /// Variance of the Gaussian perturbation added after integration.
    #[serde(default = "default_init_noise_var")]
    pub noise_var: f64,
    /// Langevin–Gibbs iterations run before the first block.
    #[serde(default = "default_init_gibbs")]
    pub gibbs_iters: usize,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            integrator_nfe: default_init_nfe(),
            noise_var: default_init_noise_var(),
            gibbs_iters: default_init_gibbs(),
        }
    }
}

/// Where chains begin.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum ChainStart {
    /// Integrate a draw of `N(0, σ_max² I)` and perturb it.
    #[default]
    FromNoise,
    /// Every chain starts at this point; only the Gibbs warm-up of
    /// [`InitConfig`] applies.
    At(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DlgConfig {
    pub step: StepSize,
    pub n_skip: usize,
    /// Integrator budget used to denoise one emitted iterate.
    pub n_den: usize,
    pub sigma_update: SigmaUpdateMode,
    pub n_chains: usize,
    pub samples_per_chain: usize,
    pub init: InitConfig,
    pub start: ChainStart,
}

impl DlgConfig {
    pub fn violations(&self, prefix: &str) -> Vec<String> {
        let mut out = Vec::new();
        match self.step {
            StepSize::Eta(e) if !(e.is_finite() && e > 0.0) => {
                out.push(format!("{prefix}.eta must be > 0, got {e}"))
            }
            StepSize::Kappa(k) if !(k.is_finite() && k > 0.0) => {
                out.push(format!("{prefix}.kappa must be > 0, got {k}"))
            }
            _ => {}
        }
        for (name, v) in [
            ("n_skip", self.n_skip),
            ("n_den", self.n_den),
            ("n_chains", self.n_chains),
            ("samples_per_chain", self.samples_per_chain),
        ] {
            if v == 0 {
                out.push(format!("{prefix}.{name} must be >= 1"));
            }
        }
        if !(self.init.noise_var.is_finite() && self.init.noise_var >= 0.0) {
            out.push(format!("{prefix}.init.noise_var must be >= 0"));
        }
        out
    }
}

fn add_noise(x: &mut [f64], var: f64, noise: &mut dyn NoiseSource) {
    if var > 0.0 {
        let mut eps = vec![0.0; x.len()];
        noise.fill_standard_normal(&mut eps);
        let sd = var.sqrt();
        for (xi, e) in x.iter_mut().zip(&eps) {
            *xi += sd * e;
        }
    }
}

struct Ctx<'a> {
    score: &'a dyn ScoreModel,
    predictor: &'a dyn NoiseLevelPredictor,
    sched: &'a VeSchedule,
    integrator: &'a IntegratorConfig,
    cfg: &'a DlgConfig,
    eta: f64,
}

impl Ctx<'_> {
    fn gibbs<R: Rng>(&self, st: &mut ChainState, rng: &mut R) -> Result<()> {
        langevin_step(st, self.score, self.predictor.grid(), self.eta, rng)?;
        sigma_update(st, self.predictor, self.cfg.sigma_update, rng)
    }

    fn run_chain(&self, chain: usize, master_seed: u64) -> Result<ChainOutput> {
        let cfg = self.cfg;
        let grid = self.predictor.grid();
        let sigma_min = self.sched.sigma_min();
        let mut rng = stream(master_seed, Purpose::DlgChain, chain as u64);
        let mut out = ChainOutput {
            chain,
            ..Default::default()
        };

        let x = match &cfg.start {
            ChainStart::At(p) => p.clone(),
            ChainStart::FromNoise => {
                let dim = self.score.dim();
                let mut x0 = vec![0.0; dim];
                add_noise(&mut x0, grid.sigma_max().powi(2), &mut rng);
                let mut x = if cfg.init.integrator_nfe > 0 {
                    let run = IntegratorRun::new(&x0, grid.sigma_max(), sigma_min);
                    let r = self
                        .integrator
                        .integrate_with_budget(&run, cfg.init.integrator_nfe, self.score, self.sched, &mut rng)
                        .map_err(|e| e.in_context(&format!("dlg chain {chain} init")))?;
                    out.ledger.init += r.nfe;
                    r.x_final
                } else {
                    x0
                };
                add_noise(&mut x, cfg.init.noise_var, &mut rng);
                x
            }
        };
        let mut st = ChainState::new(chain, x, 0);
        sigma_update(&mut st, self.predictor, cfg.sigma_update, &mut rng)?;
        for _ in 0..cfg.init.gibbs_iters {
            self.gibbs(&mut st, &mut rng)?;
        }
        out.ledger.init += st.nfe_so_far;
        st.nfe_so_far = out.ledger.init;

        for block in 0..cfg.samples_per_chain {
            let before = st.nfe_so_far;
            let mut best: Option<(usize, u64, Vec<f64>)> = None;
            for _ in 0..cfg.n_skip {
                self.gibbs(&mut st, &mut rng)?;
                out.sigma_trace.push(st.sigma_index);
                if best.as_ref().is_none_or(|b| st.sigma_index < b.0) {
                    best = Some((st.sigma_index, st.step, st.x.clone()));
                }
            }
            let langevin = st.nfe_so_far - before;
            out.ledger.langevin += langevin;

            let (idx, step, mut y) = best.expect("n_skip >= 1");
            let tau = grid.level(idx);
            let mut den = 0;
            if tau > sigma_min {
                let run = IntegratorRun::new(&y, tau, sigma_min);
                let r = self
                    .integrator
                    .integrate_with_budget(&run, cfg.n_den, self.score, self.sched, &mut rng)
                    .map_err(|e| e.in_context(&format!("dlg chain {chain} block {block}")))?;
                den += r.nfe;
                y = r.x_final;
            }
            y = tweedie_denoise(self.score, &y, sigma_min)?;
            den += 1;
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence {
                    context: format!("dlg chain {chain} denoise"),
                    step,
                });
            }
            out.ledger.denoise += den;
            st.nfe_so_far += den;
            out.emissions.push(Emission {
                x: y,
                sigma_index: idx,
                step,
                nfe: langevin + den,
            });
        }
        out.ledger.samples = out.emissions.len() as u64;
        Ok(out)
    }
}

/// Runs `cfg.n_chains` independent DLG chains. Chain `c` draws from the
/// stream `(master_seed, DlgChain, c)`, so results do not depend on thread
/// count or scheduling.
pub fn dlg_run(
    score: &dyn ScoreModel,
    predictor: &dyn NoiseLevelPredictor,
    sched: &VeSchedule,
    integrator: &IntegratorConfig,
    cfg: &DlgConfig,
    master_seed: u64,
) -> Result<SamplerOutput> {
    let violations = cfg.violations("sampler");
    if !violations.is_empty() {
        return Err(Error::Config(violations));
    }
    let grid = predictor.grid();
    if grid.sigma_min() < sched.sigma_min() || grid.sigma_max() > sched.sigma_max() {
        return Err(Error::InvalidInput("noise grid lies outside the schedule range".into()));
    }
    if let ChainStart::At(p) = &cfg.start {
        if p.len() != score.dim() {
            return Err(Error::InvalidInput("start point has the wrong dimension".into()));
        }
    }
    let ctx = Ctx {
        score,
        predictor,
        sched,
        integrator,
        cfg,
        eta: cfg.step.eta(score.dim())?,
    };
    let chains = (0..cfg.n_chains)
        .into_par_iter()
        .map(|c| ctx.run_chain(c, master_seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(SamplerOutput::from_chains(chains))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::ExactPosterior;
    use crate::integrators::IntegratorName;
    use crate::mog::GaussianMixture;
    use crate::score::CountingScore;
    use crate::ve::NoiseGrid;

    fn setup() -> (GaussianMixture, NoiseGrid, VeSchedule) {
        let mix = GaussianMixture::point_masses(vec![vec![1.0, 0.0, 0.0], vec![-1.0, 0.0, 0.5]]).unwrap();
        let grid = NoiseGrid::new(0.01, 50.0, 100).unwrap();
        let sched = VeSchedule::from_grid(&grid).unwrap();
        (mix, grid, sched)
    }

    fn cfg(n_skip: usize, n_den: usize, samples: usize) -> DlgConfig {
        DlgConfig {
            step: StepSize::Eta(0.05),
            n_skip,
            n_den,
            sigma_update: SigmaUpdateMode::Argmax,
            n_chains: 2,
            samples_per_chain: samples,
            init: InitConfig::default(),
            start: ChainStart::FromNoise,
        }
    }

    #[test]
    fn ledger_reconciles_with_counter() {
        let (mix, grid, sched) = setup();
        let counted = CountingScore::new(&mix);
        let post = ExactPosterior::new(&mix, grid);
        let integ = IntegratorConfig::new(IntegratorName::KarrasDet);
        let out = dlg_run(&counted, &post, &sched, &integ, &cfg(3, 5, 40), 9).unwrap();
        let l = &out.ledger;
        assert_eq!(l.total(), counted.calls());
        assert_eq!(l.samples, 80);
        let per_chain: u64 = out
            .chains
            .iter()
            .map(|c| c.emissions.iter().map(|e| e.nfe).sum::<u64>())
            .sum();
        assert_eq!(per_chain + l.init, l.total());
    }

    #[test]
    fn n_skip_one_emits_every_iterate() {
        let (mix, grid, sched) = setup();
        let post = ExactPosterior::new(&mix, grid);
        let integ = IntegratorConfig::new(IntegratorName::ReverseDiffusion);
        let out = dlg_run(&mix, &post, &sched, &integ, &cfg(1, 4, 25), 1).unwrap();
        for c in &out.chains {
            assert_eq!(c.emissions.len(), c.sigma_trace.len());
        }
    }

    #[test]
    fn block_selection_takes_earliest_minimum() {
        let (mix, grid, sched) = setup();
        let post = ExactPosterior::new(&mix, grid);
        let integ = IntegratorConfig::new(IntegratorName::ProbFlowEuler);
        let n_skip = 5;
        let out = dlg_run(&mix, &post, &sched, &integ, &cfg(n_skip, 3, 30), 4).unwrap();
        for c in &out.chains {
            let first_step = c.emissions[0].step - c.sigma_trace[..n_skip]
                .iter()
                .position(|&i| i == c.emissions[0].sigma_index)
                .unwrap() as u64;
            for (b, e) in c.emissions.iter().enumerate() {
                let block = &c.sigma_trace[b * n_skip..(b + 1) * n_skip];
                let min = *block.iter().min().unwrap();
                let pos = block.iter().position(|&i| i == min).unwrap();
                assert_eq!(e.sigma_index, min);
                assert_eq!(e.step, first_step + (b * n_skip + pos) as u64);
            }
        }
    }

    #[test]
    fn same_seed_same_output() {
        let (mix, grid, sched) = setup();
        let post = ExactPosterior::new(&mix, grid);
        let integ = IntegratorConfig::new(IntegratorName::KarrasStoch);
        let a = dlg_run(&mix, &post, &sched, &integ, &cfg(2, 5, 10), 3).unwrap();
        let b = dlg_run(&mix, &post, &sched, &integ, &cfg(2, 5, 10), 3).unwrap();
        assert_eq!(a, b);
        let c = dlg_run(&mix, &post, &sched, &integ, &cfg(2, 5, 10), 4).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_counts_are_rejected() {
        let (mix, grid, sched) = setup();
        let post = ExactPosterior::new(&mix, grid);
        let integ = IntegratorConfig::new(IntegratorName::KarrasDet);
        let mut c = cfg(0, 0, 5);
        c.n_chains = 0;
        match dlg_run(&mix, &post, &sched, &integ, &c, 0).unwrap_err() {
            Error::Config(v) => assert_eq!(v.len(), 3),
            other => panic!("unexpected {other}"),
        }
    }
}
