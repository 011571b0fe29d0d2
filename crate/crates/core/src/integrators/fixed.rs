use crate::error::Result;
use crate::score::{CountingScore, NoiseSource, ScoreModel};
use crate::ve::{DriftMode, VeSchedule};

use super::{check_finite, IntegratorResult, IntegratorRun};

fn uniform_ladder(start: f64, end: f64, steps: usize) -> Vec<f64> {
    let mut out: Vec<f64> = (0..=steps)
        .map(|i| start + (end - start) * i as f64 / steps as f64)
        .collect();
    out[steps] = end;
    out
}

fn geometric_ladder(start: f64, end: f64, steps: usize) -> Vec<f64> {
    let ratio = end / start;
    let mut out: Vec<f64> = (0..=steps)
        .map(|i| start * ratio.powf(i as f64 / steps as f64))
        .collect();
    out[steps] = end;
    out
}

/// Euler–Maruyama on the time-domain reverse SDE with `n` steps uniform in σ.
///
/// Each σ-step `Δσ` maps to `Δt = Δσ / σ̇(t)`; the update is
/// `x ← x + drift·Δt + g·√|Δt|·ε`.
pub fn euler_maruyama(
    run: &IntegratorRun<'_>,
    steps: usize,
    score: &dyn ScoreModel,
    sched: &VeSchedule,
    noise: &mut dyn NoiseSource,
) -> Result<IntegratorResult> {
    run.validate(sched)?;
    if run.is_empty() || steps == 0 {
        return Ok(IntegratorResult::unchanged(run.x0));
    }
    let counted = CountingScore::new(score);
    let ladder = uniform_ladder(run.sigma_start, run.sigma_end, steps);
    let mut x = run.x0.to_vec();
    let mut eps = vec![0.0; x.len()];
    for (i, w) in ladder.windows(2).enumerate() {
        let t = sched.t_of_sigma(w[0].clamp(sched.sigma_min(), sched.sigma_max()))?;
        let dt = (w[1] - w[0]) / sched.sigma_dot(t)?;
        let (drift, g) = sched.reverse_drift(&counted, &x, t, DriftMode::Sde)?;
        noise.fill_standard_normal(&mut eps);
        let amp = g * dt.abs().sqrt();
        for ((xi, di), ei) in x.iter_mut().zip(&drift).zip(&eps) {
            *xi += di * dt + amp * ei;
        }
        check_finite(&x, "euler_maruyama", i as u64)?;
    }
    Ok(IntegratorResult {
        x_final: x,
        nfe: counted.calls(),
        steps: steps as u64,
    })
}

/// Ancestral predictor over a geometric σ ladder:
/// `x ← x + (σ_i² − σ_{i+1}²)·s(x, σ_i) + √(σ_i² − σ_{i+1}²)·ε`.
pub fn reverse_diffusion(
    run: &IntegratorRun<'_>,
    steps: usize,
    score: &dyn ScoreModel,
    sched: &VeSchedule,
    noise: &mut dyn NoiseSource,
) -> Result<IntegratorResult> {
    run.validate(sched)?;
    if run.is_empty() || steps == 0 {
        return Ok(IntegratorResult::unchanged(run.x0));
    }
    let ladder = geometric_ladder(run.sigma_start, run.sigma_end, steps);
    let mut x = run.x0.to_vec();
    let mut s = vec![0.0; x.len()];
    let mut eps = vec![0.0; x.len()];
    let mut nfe = 0;
    for (i, w) in ladder.windows(2).enumerate() {
        let var = w[0] * w[0] - w[1] * w[1];
        score.score_into(&x, w[0], &mut s)?;
        nfe += 1;
        noise.fill_standard_normal(&mut eps);
        let amp = var.sqrt();
        for ((xi, si), ei) in x.iter_mut().zip(&s).zip(&eps) {
            *xi += var * si + amp * ei;
        }
        check_finite(&x, "reverse_diffusion", i as u64)?;
    }
    Ok(IntegratorResult {
        x_final: x,
        nfe,
        steps: steps as u64,
    })
}

/// Explicit Euler on `dx/dσ = -σ·s(x, σ)` with uniform σ steps.
pub fn prob_flow_euler(
    run: &IntegratorRun<'_>,
    steps: usize,
    score: &dyn ScoreModel,
    sched: &VeSchedule,
) -> Result<IntegratorResult> {
    run.validate(sched)?;
    if run.is_empty() || steps == 0 {
        return Ok(IntegratorResult::unchanged(run.x0));
    }
    let ladder = uniform_ladder(run.sigma_start, run.sigma_end, steps);
    let mut x = run.x0.to_vec();
    let mut s = vec![0.0; x.len()];
    let mut nfe = 0;
    for (i, w) in ladder.windows(2).enumerate() {
        score.score_into(&x, w[0], &mut s)?;
        nfe += 1;
        let h = w[1] - w[0];
        for (xi, si) in x.iter_mut().zip(&s) {
            *xi += h * (-w[0] * si);
        }
        check_finite(&x, "prob_flow_euler", i as u64)?;
    }
    Ok(IntegratorResult {
        x_final: x,
        nfe,
        steps: steps as u64,
    })
}
