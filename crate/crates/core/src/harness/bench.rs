//! Integrator accuracy on the Gaussian target `N(0, s²)`.
//!
//! With a linear score every integrator here is a linear map of the start
//! point and the injected noise, `x_end = A·x0 + Σ B_i ε_i` (RK45 is only
//! piecewise linear through its step control, but it injects no noise). The
//! terminal error is therefore exact, with no Monte Carlo:
//!
//! * noise-free methods: `|A / A* − 1|` with `A* = √((s²+σ_end²)/(s²+σ_start²))`
//!   the flow map of the probability-flow ODE;
//! * stochastic methods: `|Var(x_end) / (s²+σ_end²) − 1|` with
//!   `Var(x_end) = A²(s²+σ_start²) + Σ B_i²`.

use crate::error::{Error, Result};
use crate::integrators::{IntegratorConfig, IntegratorRun};
use crate::mog::GaussianMixture;
use crate::score::ScriptedNoise;
use crate::ve::VeSchedule;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianCell {
    pub error: f64,
    pub nfe: u64,
}

/// Terminal error after `steps` steps (ignored by RK45).
pub fn gaussian_error_at_steps(
    integrator: &IntegratorConfig,
    steps: usize,
    sigma_start: f64,
    sigma_end: f64,
    s: f64,
    sched: &VeSchedule,
) -> Result<GaussianCell> {
    let target = GaussianMixture::isotropic_gaussian(1, s)?;
    let cfg = IntegratorConfig {
        steps: Some(steps),
        ..*integrator
    };
    let (v0, v1) = (s * s + sigma_start * sigma_start, s * s + sigma_end * sigma_end);
    // Start one standard deviation out so the tolerance-driven solver sees
    // the same relative scale as a typical sample.
    let start = [v0.sqrt()];
    let mut probe = ScriptedNoise::new(Vec::new());
    let base = cfg.integrate(&IntegratorRun::new(&start, sigma_start, sigma_end), &target, sched, &mut probe)?;
    let a = base.x_final[0] / start[0];
    let draws = probe.consumed();
    let error = if draws == 0 {
        (a / (v1 / v0).sqrt() - 1.0).abs()
    } else {
        let zero = [0.0];
        let mut var = a * a * v0;
        for i in 0..draws {
            let mut e = vec![0.0; draws];
            e[i] = 1.0;
            let r = cfg.integrate(
                &IntegratorRun::new(&zero, sigma_start, sigma_end),
                &target,
                sched,
                &mut ScriptedNoise::new(e),
            )?;
            var += r.x_final[0] * r.x_final[0];
        }
        (var / v1 - 1.0).abs()
    };
    if !error.is_finite() {
        return Err(Error::Divergence {
            context: format!("gaussian benchmark ({})", integrator.name.as_str()),
            step: base.steps,
        });
    }
    Ok(GaussianCell { error, nfe: base.nfe })
}

/// Terminal error at an NFE budget, using the integrator's budget-to-steps
/// mapping.
pub fn gaussian_terminal_error(
    integrator: &IntegratorConfig,
    nfe_budget: usize,
    sigma_start: f64,
    sigma_end: f64,
    s: f64,
    sched: &VeSchedule,
) -> Result<GaussianCell> {
    let steps = integrator.steps_for_budget(nfe_budget);
    gaussian_error_at_steps(integrator, steps, sigma_start, sigma_end, s, sched)
}

/// Least-squares slope of `−ln(error)` against `ln(steps)`.
pub fn convergence_order(
    integrator: &IntegratorConfig,
    steps: &[usize],
    sigma_start: f64,
    sigma_end: f64,
    s: f64,
    sched: &VeSchedule,
) -> Result<f64> {
    if steps.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: steps.len() });
    }
    let mut pts = Vec::with_capacity(steps.len());
    for &n in steps {
        let e = gaussian_error_at_steps(integrator, n, sigma_start, sigma_end, s, sched)?.error;
        if e <= 0.0 {
            return Err(Error::Domain(format!("zero error at {n} steps; cannot fit an order")));
        }
        pts.push(((n as f64).ln(), e.ln()));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(-sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrators::IntegratorName;
    use crate::score::ZeroNoise;
    use rand::SeedableRng;

    fn sched() -> VeSchedule {
        VeSchedule::new(0.01, 50.0).unwrap()
    }

    #[test]
    fn linear_decomposition_matches_monte_carlo() {
        let cfg = IntegratorConfig::new(IntegratorName::ReverseDiffusion);
        let exact = gaussian_error_at_steps(&cfg, 20, 2.0, 0.01, 1.0, &sched()).unwrap();
        let target = GaussianMixture::isotropic_gaussian(1, 1.0).unwrap();
        let run_cfg = IntegratorConfig { steps: Some(20), ..cfg };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 40_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let x0 = [target.sample_smoothed(2.0, &mut rng).unwrap()[0]];
            let r = run_cfg
                .integrate(&IntegratorRun::new(&x0, 2.0, 0.01), &target, &sched(), &mut rng)
                .unwrap();
            acc += r.x_final[0] * r.x_final[0];
        }
        let mc = (acc / n as f64 / (1.0 + 1e-4) - 1.0).abs();
        // Monte Carlo standard error on a variance ratio is about √(2/n).
        assert!((mc - exact.error).abs() < 4.0 * (2.0 / n as f64).sqrt(), "mc={mc} exact={}", exact.error);
    }

    #[test]
    fn noise_free_error_is_the_flow_map_mismatch() {
        let cfg = IntegratorConfig::new(IntegratorName::ProbFlowEuler);
        let cell = gaussian_error_at_steps(&cfg, 10, 1.0, 0.01, 1.0, &sched()).unwrap();
        let target = GaussianMixture::isotropic_gaussian(1, 1.0).unwrap();
        let run_cfg = IntegratorConfig { steps: Some(10), ..cfg };
        let r = run_cfg
            .integrate(&IntegratorRun::new(&[3.0], 1.0, 0.01), &target, &sched(), &mut ZeroNoise)
            .unwrap();
        let want = 3.0 * ((1.0f64 + 1e-4) / 2.0).sqrt();
        assert!(((r.x_final[0] / want - 1.0).abs() - cell.error).abs() < 1e-12);
        assert_eq!(cell.nfe, 10);
    }

    #[test]
    fn order_needs_two_points() {
        let cfg = IntegratorConfig::new(IntegratorName::KarrasDet);
        assert!(convergence_order(&cfg, &[8], 50.0, 0.01, 1.0, &sched()).is_err());
    }
}
