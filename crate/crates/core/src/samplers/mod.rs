//! Markov-chain samplers on the noise-augmented space.
//!
//! [`dlg_run`] alternates a Langevin move in `x` at the current noise level
//! with a classifier-driven redraw of the level, then denoises the
//! lowest-noise iterate of every block. [`plain_langevin_run`] and
//! [`ald_run`] are the single-level and annealed baselines; all three count
//! score evaluations the same way.

mod baselines;
mod dlg;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use baselines::{ald_run, plain_langevin_run, AldConfig, PlainLangevinConfig};
pub use dlg::{dlg_run, ChainStart, DlgConfig, InitConfig};

use crate::classifier::NoiseLevelPredictor;
use crate::diagnostics::NfeLedger;
use crate::error::{Error, Result};
use crate::score::{NoiseSource, ScoreModel};
use crate::ve::NoiseGrid;

/// Position `(x, σ)` of one chain on the product space.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub chain: usize,
    pub x: Vec<f64>,
    /// Zero-based index into the noise grid.
    pub sigma_index: usize,
    pub step: u64,
    pub nfe_so_far: u64,
}

impl ChainState {
    pub fn new(chain: usize, x: Vec<f64>, sigma_index: usize) -> Self {
        Self {
            chain,
            x,
            sigma_index,
            step: 0,
            nfe_so_far: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaUpdateMode {
    #[default]
    Argmax,
    Sampled,
}

/// Langevin step size, given either directly or as displacement per
/// dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSize {
    Eta(f64),
    Kappa(f64),
}

impl StepSize {
    pub fn eta(&self, dim: usize) -> Result<f64> {
        match *self {
            StepSize::Eta(eta) if eta.is_finite() && eta >= 0.0 => Ok(eta),
            StepSize::Eta(eta) => Err(Error::InvalidInput(format!("eta must be >= 0, got {eta}"))),
            StepSize::Kappa(kappa) => eta_from_kappa(kappa, dim),
        }
    }
}

/// `η = √d · κ`.
pub fn eta_from_kappa(kappa: f64, dim: usize) -> Result<f64> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::InvalidInput(format!("kappa must be > 0, got {kappa}")));
    }
    if dim == 0 {
        return Err(Error::InvalidInput("dimension must be >= 1".into()));
    }
    Ok((dim as f64).sqrt() * kappa)
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// `x ← x + (η/2)·s(x, τ) + √η·ε` at the chain's current level.
pub fn langevin_step(
    state: &mut ChainState,
    score: &dyn ScoreModel,
    grid: &NoiseGrid,
    eta: f64,
    noise: &mut dyn NoiseSource,
) -> Result<()> {
    let sigma = grid.level(state.sigma_index);
    let mut s = vec![0.0; state.x.len()];
    score.score_into(&state.x, sigma, &mut s)?;
    state.nfe_so_far += 1;
    let mut eps = vec![0.0; state.x.len()];
    noise.fill_standard_normal(&mut eps);
    let (half, amp) = (0.5 * eta, eta.sqrt());
    for ((xi, si), ei) in state.x.iter_mut().zip(&s).zip(&eps) {
        *xi += half * si + amp * ei;
    }
    if state.x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence {
            context: format!("langevin chain {}", state.chain),
            step: state.step,
        });
    }
    state.step += 1;
    Ok(())
}

fn check_probability_vector(p: &[f64], m: usize) -> Result<()> {
    if p.len() != m {
        return Err(Error::ContractViolation(format!(
            "noise-level predictor returned {} entries for a grid of {m}",
            p.len()
        )));
    }
    if p.iter().any(|v| !v.is_finite() || *v < -1e-12) {
        return Err(Error::ContractViolation(
            "noise-level predictor returned negative or non-finite probabilities".into(),
        ));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::ContractViolation(format!(
            "noise-level probabilities sum to {total}"
        )));
    }
    Ok(())
}

/// Redraws the noise level from `q(σ | x)`. Never counts toward NFE.
pub fn sigma_update<R: Rng + ?Sized>(
    state: &mut ChainState,
    predictor: &dyn NoiseLevelPredictor,
    mode: SigmaUpdateMode,
    rng: &mut R,
) -> Result<()> {
    let p = predictor.predict(&state.x)?;
    check_probability_vector(&p, predictor.grid().len())?;
    state.sigma_index = match mode {
        SigmaUpdateMode::Argmax => argmax(&p),
        SigmaUpdateMode::Sampled => {
            let u: f64 = rng.random::<f64>() * p.iter().sum::<f64>();
            let mut acc = 0.0;
            let mut pick = argmax(&p);
            for (i, v) in p.iter().enumerate() {
                acc += v;
                if u < acc {
                    pick = i;
                    break;
                }
            }
            pick
        }
    };
    Ok(())
}

/// One denoised output of a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Emission {
    pub x: Vec<f64>,
    /// Grid index of the iterate that was denoised.
    pub sigma_index: usize,
    /// Chain step at which that iterate was produced.
    pub step: u64,
    /// Score evaluations charged to this sample, initialization excluded.
    pub nfe: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChainOutput {
    pub chain: usize,
    pub emissions: Vec<Emission>,
    /// Grid index after every sigma update, initialization excluded.
    pub sigma_trace: Vec<usize>,
    pub ledger: NfeLedger,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SamplerOutput {
    pub chains: Vec<ChainOutput>,
    pub ledger: NfeLedger,
}

impl SamplerOutput {
    pub(crate) fn from_chains(chains: Vec<ChainOutput>) -> Self {
        let mut ledger = NfeLedger::default();
        for c in &chains {
            ledger.merge(&c.ledger);
        }
        Self { chains, ledger }
    }

    pub fn n_samples(&self) -> usize {
        self.chains.iter().map(|c| c.emissions.len()).sum()
    }

    /// Samples pooled by chain length: the `i`-th sample of every chain comes
    /// before the `(i+1)`-th of any chain.
    pub fn interleaved(&self) -> Vec<&[f64]> {
        let longest = self.chains.iter().map(|c| c.emissions.len()).max().unwrap_or(0);
        let mut out = Vec::with_capacity(self.n_samples());
        for i in 0..longest {
            for c in &self.chains {
                if let Some(e) = c.emissions.get(i) {
                    out.push(e.x.as_slice());
                }
            }
        }
        out
    }

    pub fn samples(&self) -> Vec<Vec<f64>> {
        self.chains
            .iter()
            .flat_map(|c| c.emissions.iter().map(|e| e.x.clone()))
            .collect()
    }
}
