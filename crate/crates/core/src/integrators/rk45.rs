//! Dormand–Prince 5(4) with adaptive step control on the probability-flow ODE
//! `dx/dσ = -σ·s(x, σ)`, integrated from `σ_start` down to `σ_end`.

use crate::error::{Error, Result};
use crate::score::{CountingScore, ScoreModel};
use crate::ve::VeSchedule;

use super::{check_finite, IntegratorResult, IntegratorRun};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rk45Options {
    pub rtol: f64,
    pub atol: f64,
    pub safety: f64,
    pub min_factor: f64,
    pub max_factor: f64,
    pub max_consecutive_rejections: u64,
}

impl Default for Rk45Options {
    fn default() -> Self {
        Self {
            rtol: 1e-5,
            atol: 1e-5,
            safety: 0.9,
            min_factor: 0.2,
            max_factor: 10.0,
            max_consecutive_rejections: 100_000,
        }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// 5th-order weights minus embedded 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct Field<'a> {
    score: &'a dyn ScoreModel,
    buf: Vec<f64>,
}

impl Field<'_> {
    fn eval(&mut self, sigma: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.score.score_into(x, sigma, &mut self.buf)?;
        for (o, s) in out.iter_mut().zip(&self.buf) {
            *o = -sigma * s;
        }
        Ok(())
    }
}

fn rms_norm(v: &[f64], scale: &[f64]) -> f64 {
    (v.iter().zip(scale).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}

pub fn rk45(
    run: &IntegratorRun<'_>,
    score: &dyn ScoreModel,
    sched: &VeSchedule,
    opts: Rk45Options,
) -> Result<IntegratorResult> {
    run.validate(sched)?;
    if run.is_empty() {
        return Ok(IntegratorResult::unchanged(run.x0));
    }
    let counted = CountingScore::new(score);
    let dim = run.x0.len();
    let mut field = Field {
        score: &counted,
        buf: vec![0.0; dim],
    };
    let (s0, s1) = (run.sigma_start, run.sigma_end);
    let span = s0 - s1;
    let mut sigma = s0;
    let mut x = run.x0.to_vec();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; dim]; 7];
    field.eval(sigma, &x, &mut k[0])?;

    // Initial step size (Hairer, Nørsett & Wanner, II.4).
    let scale: Vec<f64> = x.iter().map(|v| opts.atol + opts.rtol * v.abs()).collect();
    let d0 = rms_norm(&x, &scale);
    let d1 = rms_norm(&k[0], &scale);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 }.min(span);
    let probe: Vec<f64> = x.iter().zip(&k[0]).map(|(xi, fi)| xi - h0 * fi).collect();
    let mut f1 = vec![0.0; dim];
    field.eval(sigma - h0, &probe, &mut f1)?;
    let diff: Vec<f64> = f1.iter().zip(&k[0]).map(|(a, b)| a - b).collect();
    let d2 = rms_norm(&diff, &scale) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 5.0)
    };
    let mut h = (100.0 * h0).min(h1).min(span);

    let mut stage = vec![0.0; dim];
    let mut x_new = vec![0.0; dim];
    let mut err = vec![0.0; dim];
    let mut accepted = 0u64;
    let mut rejections = 0u64;

    while sigma > s1 {
        let last = sigma - h <= s1 || (sigma - h - s1) < 1e-12 * span;
        if last {
            h = sigma - s1;
        }
        // Stepping in decreasing σ: the signed step is -h.
        for s in 1..7 {
            for j in 0..dim {
                let mut acc = x[j];
                for (r, a) in A[s][..s].iter().enumerate() {
                    acc -= h * a * k[r][j];
                }
                stage[j] = acc;
            }
            field.eval(sigma - C[s] * h, &stage, &mut k[s])?;
        }
        // Stage 7 was evaluated at the 5th-order solution.
        x_new.copy_from_slice(&stage);
        for j in 0..dim {
            err[j] = -h * (0..7).map(|r| E[r] * k[r][j]).sum::<f64>();
        }
        let sc: Vec<f64> = x
            .iter()
            .zip(&x_new)
            .map(|(a, b)| opts.atol + opts.rtol * a.abs().max(b.abs()))
            .collect();
        let err_norm = rms_norm(&err, &sc);

        if err_norm <= 1.0 && err_norm.is_finite() {
            sigma = if last { s1 } else { sigma - h };
            std::mem::swap(&mut x, &mut x_new);
            let (first, rest) = k.split_at_mut(1);
            first[0].copy_from_slice(&rest[5]);
            accepted += 1;
            rejections = 0;
            check_finite(&x, "rk45", accepted)?;
            let factor = if err_norm == 0.0 {
                opts.max_factor
            } else {
                (opts.safety * err_norm.powf(-0.2)).clamp(opts.min_factor, opts.max_factor)
            };
            h = (h * factor).min(sigma - s1).max(0.0);
            if sigma > s1 && h <= 0.0 {
                h = sigma - s1;
            }
        } else {
            rejections += 1;
            if rejections > opts.max_consecutive_rejections {
                return Err(Error::StalledSolver { rejections, sigma });
            }
            let factor = if err_norm.is_finite() {
                (opts.safety * err_norm.powf(-0.2)).clamp(opts.min_factor, 1.0)
            } else {
                opts.min_factor
            };
            h *= factor;
            if h <= f64::EPSILON * sigma.abs() {
                return Err(Error::StalledSolver { rejections, sigma });
            }
        }
    }

    Ok(IntegratorResult {
        x_final: x,
        nfe: counted.calls(),
        steps: accepted,
    })
}
