//! Heun samplers on the ρ-warped σ ladder.
//!
//! `n` steps walk the `n + 1` points
//! `σ_i = (σ_start^{1/ρ} + (i/n)(σ_end^{1/ρ} − σ_start^{1/ρ}))^ρ`. The first
//! `n − 1` steps are Heun (two evaluations); the last one into `σ_end` is plain
//! Euler, so a run costs `2n − 1` score evaluations.

use crate::error::Result;
use crate::score::{NoiseSource, ScoreModel};
use crate::ve::VeSchedule;

use super::{check_finite, IntegratorResult, IntegratorRun};

pub fn karras_ladder(sigma_start: f64, sigma_end: f64, steps: usize, rho: f64) -> Vec<f64> {
    let inv = 1.0 / rho;
    let (a, b) = (sigma_start.powf(inv), sigma_end.powf(inv));
    let mut out: Vec<f64> = (0..=steps)
        .map(|i| (a + (i as f64 / steps as f64) * (b - a)).powf(rho))
        .collect();
    out[0] = sigma_start;
    out[steps] = sigma_end;
    out
}

pub fn karras_det(
    run: &IntegratorRun<'_>,
    steps: usize,
    score: &dyn ScoreModel,
    sched: &VeSchedule,
    rho: f64,
) -> Result<IntegratorResult> {
    heun(run, steps, score, sched, rho, 0.0, 1.0, None, "karras_det")
}

#[allow(clippy::too_many_arguments)]
pub fn karras_stoch(
    run: &IntegratorRun<'_>,
    steps: usize,
    score: &dyn ScoreModel,
    sched: &VeSchedule,
    rho: f64,
    churn: f64,
    s_noise: f64,
    noise: &mut dyn NoiseSource,
) -> Result<IntegratorResult> {
    heun(run, steps, score, sched, rho, churn, s_noise, Some(noise), "karras_stoch")
}

#[allow(clippy::too_many_arguments)]
fn heun(
    run: &IntegratorRun<'_>,
    steps: usize,
    score: &dyn ScoreModel,
    sched: &VeSchedule,
    rho: f64,
    churn: f64,
    s_noise: f64,
    mut noise: Option<&mut dyn NoiseSource>,
    name: &str,
) -> Result<IntegratorResult> {
    run.validate(sched)?;
    if run.is_empty() || steps == 0 {
        return Ok(IntegratorResult::unchanged(run.x0));
    }
    let ladder = karras_ladder(run.sigma_start, run.sigma_end, steps, rho);
    let gamma = (churn / steps as f64).min(std::f64::consts::SQRT_2 - 1.0);
    let dim = run.x0.len();
    let mut x = run.x0.to_vec();
    let mut s = vec![0.0; dim];
    let mut d = vec![0.0; dim];
    let mut x_euler = vec![0.0; dim];
    let mut eps = vec![0.0; dim];
    let mut nfe = 0;

    for (i, w) in ladder.windows(2).enumerate() {
        let (sigma, sigma_next) = (w[0], w[1]);
        let mut sigma_hat = sigma;
        if gamma > 0.0 {
            if let Some(noise) = noise.as_deref_mut() {
                sigma_hat = sigma * (1.0 + gamma);
                let amp = (sigma_hat * sigma_hat - sigma * sigma).sqrt() * s_noise;
                noise.fill_standard_normal(&mut eps);
                for (xi, ei) in x.iter_mut().zip(&eps) {
                    *xi += amp * ei;
                }
            }
        }

        score.score_into(&x, sigma_hat, &mut s)?;
        nfe += 1;
        let h = sigma_next - sigma_hat;
        for ((di, si), (xe, xi)) in d.iter_mut().zip(&s).zip(x_euler.iter_mut().zip(&x)) {
            *di = -sigma_hat * si;
            *xe = xi + h * *di;
        }

        if i + 1 < steps {
            score.score_into(&x_euler, sigma_next, &mut s)?;
            nfe += 1;
            for ((xi, di), si) in x.iter_mut().zip(&d).zip(&s) {
                let d2 = -sigma_next * si;
                *xi += h * 0.5 * (di + d2);
            }
        } else {
            x.copy_from_slice(&x_euler);
        }
        check_finite(&x, name, i as u64)?;
    }

    Ok(IntegratorResult {
        x_final: x,
        nfe,
        steps: steps as u64,
    })
}
