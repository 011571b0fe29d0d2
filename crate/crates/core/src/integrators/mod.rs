//! Reverse-S/ODE integrators for the VE process.
//!
//! Every integrator runs in the noise level `σ` rather than in time: the
//! probability-flow ODE becomes `dx/dσ = -σ ∇log p̂(x | σ)` and the reverse SDE
//! injects variance `d[σ²]` per step. All of them start from an arbitrary
//! `σ_start` and stop at `σ_end ≥ σ_min`; the final hop to zero noise is a
//! separate Tweedie step.

mod fixed;
mod karras;
mod rk45;

use serde::{Deserialize, Serialize};

pub use fixed::{euler_maruyama, prob_flow_euler, reverse_diffusion};
pub use karras::{karras_det, karras_ladder, karras_stoch};
pub use rk45::{rk45, Rk45Options};

use crate::error::{Error, Result};
use crate::score::{NoiseSource, ScoreModel};
use crate::ve::VeSchedule;

/// Start point and noise interval of one denoising request.
#[derive(Debug, Clone, Copy)]
pub struct IntegratorRun<'a> {
    pub x0: &'a [f64],
    pub sigma_start: f64,
    pub sigma_end: f64,
}

impl<'a> IntegratorRun<'a> {
    pub fn new(x0: &'a [f64], sigma_start: f64, sigma_end: f64) -> Self {
        Self { x0, sigma_start, sigma_end }
    }

    pub(crate) fn validate(&self, sched: &VeSchedule) -> Result<()> {
        let tol = 1e-12 * sched.sigma_max();
        if !(self.sigma_start.is_finite() && self.sigma_end.is_finite()) {
            return Err(Error::InvalidInput("integration bounds must be finite".into()));
        }
        if self.sigma_start > sched.sigma_max() + tol {
            return Err(Error::Domain(format!(
                "sigma_start {} exceeds sigma_max {}",
                self.sigma_start,
                sched.sigma_max()
            )));
        }
        if self.sigma_end < sched.sigma_min() - tol {
            return Err(Error::Domain(format!(
                "sigma_end {} is below sigma_min {}",
                self.sigma_end,
                sched.sigma_min()
            )));
        }
        if self.sigma_start < self.sigma_end {
            return Err(Error::Domain(format!(
                "sigma_start {} must not be below sigma_end {}",
                self.sigma_start, self.sigma_end
            )));
        }
        crate::error::ensure_finite(self.x0, "x0")
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.sigma_start == self.sigma_end
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorResult {
    pub x_final: Vec<f64>,
    /// Score evaluations actually performed, rejected adaptive steps included.
    pub nfe: u64,
    pub steps: u64,
}

impl IntegratorResult {
    pub(crate) fn unchanged(x0: &[f64]) -> Self {
        Self {
            x_final: x0.to_vec(),
            nfe: 0,
            steps: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorName {
    EulerMaruyama,
    ReverseDiffusion,
    ProbFlowEuler,
    Rk45,
    KarrasDet,
    KarrasStoch,
}

impl IntegratorName {
    pub const ALL: [IntegratorName; 6] = [
        IntegratorName::EulerMaruyama,
        IntegratorName::ReverseDiffusion,
        IntegratorName::ProbFlowEuler,
        IntegratorName::Rk45,
        IntegratorName::KarrasDet,
        IntegratorName::KarrasStoch,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            IntegratorName::EulerMaruyama => "euler_maruyama",
            IntegratorName::ReverseDiffusion => "reverse_diffusion",
            IntegratorName::ProbFlowEuler => "prob_flow_euler",
            IntegratorName::Rk45 => "rk45",
            IntegratorName::KarrasDet => "karras_det",
            IntegratorName::KarrasStoch => "karras_stoch",
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(
            self,
            IntegratorName::EulerMaruyama | IntegratorName::ReverseDiffusion | IntegratorName::KarrasStoch
        )
    }

    pub fn is_fixed_step(&self) -> bool {
        !matches!(self, IntegratorName::Rk45)
    }
}

fn default_rtol() -> f64 {
    1e-5
}
fn default_rho() -> f64 {
    7.0
}
fn default_s_noise() -> f64 {
    1.0
}

/// Integrator block `{name, steps | rtol/atol, rho, churn, s_noise}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub name: IntegratorName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_rtol")]
    pub atol: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default)]
    pub churn: f64,
    #[serde(default = "default_s_noise")]
    pub s_noise: f64,
}

impl IntegratorConfig {
    pub fn new(name: IntegratorName) -> Self {
        Self {
            name,
            steps: None,
            rtol: default_rtol(),
            atol: default_rtol(),
            rho: default_rho(),
            churn: 0.0,
            s_noise: default_s_noise(),
        }
    }

    pub fn violations(&self, prefix: &str) -> Vec<String> {
        let mut out = Vec::new();
        if self.steps == Some(0) {
            out.push(format!("{prefix}.steps must be >= 1"));
        }
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            out.push(format!("{prefix}.rtol and {prefix}.atol must be > 0"));
        }
        if !(self.rho.is_finite() && self.rho > 0.0) {
            out.push(format!("{prefix}.rho must be > 0, got {}", self.rho));
        }
        if !(self.churn.is_finite() && self.churn >= 0.0) {
            out.push(format!("{prefix}.churn must be >= 0, got {}", self.churn));
        }
        if !(self.s_noise.is_finite() && self.s_noise >= 0.0) {
            out.push(format!("{prefix}.s_noise must be >= 0, got {}", self.s_noise));
        }
        out
    }

    /// Step count that spends at most `nfe_budget` score evaluations.
    ///
    /// Heun-based Karras samplers cost `2n - 1` for `n` steps; every other
    /// fixed-step method costs one evaluation per step.
    pub fn steps_for_budget(&self, nfe_budget: usize) -> usize {
        match self.name {
            IntegratorName::KarrasDet | IntegratorName::KarrasStoch => nfe_budget.div_ceil(2),
            _ => nfe_budget,
        }
        .max(1)
    }

    /// Integrates with an explicit NFE budget (ignored by RK45, which is
    /// tolerance-driven).
    pub fn integrate_with_budget(
        &self,
        run: &IntegratorRun<'_>,
        nfe_budget: usize,
        score: &dyn ScoreModel,
        sched: &VeSchedule,
        noise: &mut dyn NoiseSource,
    ) -> Result<IntegratorResult> {
        let steps = self.steps_for_budget(nfe_budget);
        self.integrate_steps(run, steps, score, sched, noise)
    }

    /// Integrates with the configured `steps` (or tolerances for RK45).
    pub fn integrate(
        &self,
        run: &IntegratorRun<'_>,
        score: &dyn ScoreModel,
        sched: &VeSchedule,
        noise: &mut dyn NoiseSource,
    ) -> Result<IntegratorResult> {
        let steps = match (self.name, self.steps) {
            (IntegratorName::Rk45, _) => 1,
            (_, Some(n)) => n,
            (_, None) => {
                return Err(Error::InvalidInput(format!(
                    "integrator {} needs a step count",
                    self.name.as_str()
                )))
            }
        };
        self.integrate_steps(run, steps, score, sched, noise)
    }

    fn integrate_steps(
        &self,
        run: &IntegratorRun<'_>,
        steps: usize,
        score: &dyn ScoreModel,
        sched: &VeSchedule,
        noise: &mut dyn NoiseSource,
    ) -> Result<IntegratorResult> {
        match self.name {
            IntegratorName::EulerMaruyama => euler_maruyama(run, steps, score, sched, noise),
            IntegratorName::ReverseDiffusion => reverse_diffusion(run, steps, score, sched, noise),
            IntegratorName::ProbFlowEuler => prob_flow_euler(run, steps, score, sched),
            IntegratorName::Rk45 => rk45(
                run,
                score,
                sched,
                Rk45Options {
                    rtol: self.rtol,
                    atol: self.atol,
                    ..Rk45Options::default()
                },
            ),
            IntegratorName::KarrasDet => karras_det(run, steps, score, sched, self.rho),
            IntegratorName::KarrasStoch => {
                karras_stoch(run, steps, score, sched, self.rho, self.churn, self.s_noise, noise)
            }
        }
    }
}

pub(crate) fn check_finite(x: &[f64], integrator: &str, step: u64) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Divergence {
            context: integrator.to_string(),
            step,
        })
    }
}
