//! Variance-exploding diffusion machinery.
//!
//! `σ(t) = σ_min (σ_max/σ_min)^t` on `t ∈ [0, 1]`, so `g²(t) = d[σ²]/dt =
//! 2σ²(t) ln(σ_max/σ_min)`. The discretized noise axis is the geometric grid
//! `τ_m = σ(m/(M-1))` with prior weights `∝ 1/τ_m`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::score::ScoreModel;

/// Schedule block `{sigma_min, sigma_max, m}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpec {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub m: usize,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        Self {
            sigma_min: 0.01,
            sigma_max: 50.0,
            m: 1000,
        }
    }
}

impl ScheduleSpec {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.sigma_min.is_finite() && self.sigma_min > 0.0) {
            out.push(format!("schedule.sigma_min must be > 0, got {}", self.sigma_min));
        }
        if !(self.sigma_max.is_finite() && self.sigma_max > self.sigma_min) {
            out.push(format!(
                "schedule.sigma_max must exceed sigma_min, got {}",
                self.sigma_max
            ));
        }
        if self.m < 2 {
            out.push(format!("schedule.m must be >= 2, got {}", self.m));
        }
        out
    }

    pub fn grid(&self) -> Result<NoiseGrid> {
        NoiseGrid::new(self.sigma_min, self.sigma_max, self.m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseGrid {
    sigma_min: f64,
    sigma_max: f64,
    levels: Vec<f64>,
    prior: Vec<f64>,
    log_prior: Vec<f64>,
}

impl NoiseGrid {
    pub fn new(sigma_min: f64, sigma_max: f64, m: usize) -> Result<Self> {
        let spec = ScheduleSpec { sigma_min, sigma_max, m };
        let violations = spec.violations();
        if !violations.is_empty() {
            return Err(Error::InvalidInput(violations.join("; ")));
        }
        let ratio = sigma_max / sigma_min;
        let mut levels: Vec<f64> = (0..m)
            .map(|i| sigma_min * ratio.powf(i as f64 / (m - 1) as f64))
            .collect();
        levels[0] = sigma_min;
        levels[m - 1] = sigma_max;
        Ok(Self::from_levels(sigma_min, sigma_max, levels))
    }

    /// Degenerate one-level grid.
    pub fn single(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidInput(format!("sigma must be > 0, got {sigma}")));
        }
        Ok(Self::from_levels(sigma, sigma, vec![sigma]))
    }

    fn from_levels(sigma_min: f64, sigma_max: f64, levels: Vec<f64>) -> Self {
        let total: f64 = levels.iter().map(|t| 1.0 / t).sum();
        let prior: Vec<f64> = levels.iter().map(|t| (1.0 / t) / total).collect();
        let log_prior = prior.iter().map(|p| p.ln()).collect();
        Self {
            sigma_min,
            sigma_max,
            levels,
            prior,
            log_prior,
        }
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn level(&self, index: usize) -> f64 {
        self.levels[index]
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn log_prior(&self) -> &[f64] {
        &self.log_prior
    }

    pub fn spec(&self) -> ScheduleSpec {
        ScheduleSpec {
            sigma_min: self.sigma_min,
            sigma_max: self.sigma_max,
            m: self.len(),
        }
    }

    /// Index of the level nearest to `sigma` in log space.
    pub fn nearest_index(&self, sigma: f64) -> usize {
        let target = sigma.ln();
        let mut best = (0, f64::INFINITY);
        for (i, t) in self.levels.iter().enumerate() {
            let d = (t.ln() - target).abs();
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VeSchedule {
    sigma_min: f64,
    sigma_max: f64,
    log_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftMode {
    Sde,
    Ode,
}

impl VeSchedule {
    pub fn new(sigma_min: f64, sigma_max: f64) -> Result<Self> {
        if !(sigma_min.is_finite() && sigma_min > 0.0 && sigma_max.is_finite() && sigma_max > sigma_min) {
            return Err(Error::InvalidInput(format!(
                "need 0 < sigma_min < sigma_max, got ({sigma_min}, {sigma_max})"
            )));
        }
        Ok(Self {
            sigma_min,
            sigma_max,
            log_ratio: (sigma_max / sigma_min).ln(),
        })
    }

    pub fn from_grid(grid: &NoiseGrid) -> Result<Self> {
        Self::new(grid.sigma_min(), grid.sigma_max())
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    pub fn sigma_of_t(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("t must lie in [0, 1], got {t}")));
        }
        Ok(if t == 0.0 {
            self.sigma_min
        } else if t == 1.0 {
            self.sigma_max
        } else {
            self.sigma_min * (t * self.log_ratio).exp()
        })
    }

    pub fn t_of_sigma(&self, sigma: f64) -> Result<f64> {
        if !(self.sigma_min..=self.sigma_max).contains(&sigma) {
            return Err(Error::Domain(format!(
                "sigma must lie in [{}, {}], got {sigma}",
                self.sigma_min, self.sigma_max
            )));
        }
        Ok((sigma / self.sigma_min).ln() / self.log_ratio)
    }

    /// `g²(t) = d[σ²(t)]/dt`.
    pub fn g2(&self, t: f64) -> Result<f64> {
        let s = self.sigma_of_t(t)?;
        Ok(2.0 * s * s * self.log_ratio)
    }

    /// `dσ/dt`.
    pub fn sigma_dot(&self, t: f64) -> Result<f64> {
        Ok(self.sigma_of_t(t)? * self.log_ratio)
    }

    /// Time-domain reverse-S/ODE coefficients at `(x, t)`.
    ///
    /// Returns the drift vector and scalar diffusion. With `f ≡ 0` the SDE
    /// drift is `-g² ∇log p_t` with diffusion `g`; the ODE drift is half that
    /// with zero diffusion.
    pub fn reverse_drift(
        &self,
        score: &dyn ScoreModel,
        x: &[f64],
        t: f64,
        mode: DriftMode,
    ) -> Result<(Vec<f64>, f64)> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::Domain(format!("t must lie in (0, 1], got {t}")));
        }
        let sigma = self.sigma_of_t(t)?;
        let g2 = self.g2(t)?;
        let s = score.score(x, sigma)?;
        let (coef, diffusion) = match mode {
            DriftMode::Sde => (-g2, g2.sqrt()),
            DriftMode::Ode => (-0.5 * g2, 0.0),
        };
        Ok((s.into_iter().map(|v| coef * v).collect(), diffusion))
    }
}

/// Exact probability-flow solution for the target `N(0, s²I)`:
/// `x(σ₁) = x₀ √((s² + σ₁²)/(s² + σ₀²))`.
pub fn gaussian_ode_solution(s: f64, x0: &[f64], sigma0: f64, sigma1: f64) -> Vec<f64> {
    let factor = ((s * s + sigma1 * sigma1) / (s * s + sigma0 * sigma0)).sqrt();
    x0.iter().map(|v| v * factor).collect()
}

/// Posterior-mean denoiser `x + σ² ∇log p̂(x | σ)`.
pub fn tweedie_denoise(score: &dyn ScoreModel, x: &[f64], sigma: f64) -> Result<Vec<f64>> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::Domain(format!("sigma must be > 0, got {sigma}")));
    }
    let s = score.score(x, sigma)?;
    let s2 = sigma * sigma;
    Ok(x.iter().zip(s).map(|(xi, si)| xi + s2 * si).collect())
}
