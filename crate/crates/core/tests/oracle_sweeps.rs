//! Gaussian-target sweeps checked against a closed form written out here,
//! independent of the harness's benchmark code.

use dmcmc::integrators::IntegratorName;
use dmcmc::score::{ScriptedNoise, ZeroNoise};
use dmcmc::{GaussianMixture, IntegratorConfig, IntegratorRun, VeSchedule};

const S: f64 = 1.0;
const SIGMA_MIN: f64 = 0.01;

fn sched() -> VeSchedule {
    VeSchedule::new(SIGMA_MIN, 50.0).unwrap()
}

/// Terminal error on N(0, S²) in one dimension.
///
/// The update is linear in `(x0, ξ_1, ξ_2, ...)`, so the terminal variance
/// follows from the response to `x0` alone plus the response to each unit
/// noise draw alone.
fn terminal_error(name: IntegratorName, steps: usize, sigma_start: f64) -> (f64, u64) {
    let target = GaussianMixture::isotropic_gaussian(1, S).unwrap();
    let integ = IntegratorConfig { steps: Some(steps), ..IntegratorConfig::new(name) };
    let v0 = S * S + sigma_start * sigma_start;
    let v_end = S * S + SIGMA_MIN * SIGMA_MIN;
    let x0 = [v0.sqrt()];
    let run = IntegratorRun::new(&x0, sigma_start, SIGMA_MIN);
    let base = integ.integrate(&run, &target, &sched(), &mut ZeroNoise).unwrap();
    let a = base.x_final[0] / x0[0];
    if !name.is_stochastic() {
        return ((a / (v_end / v0).sqrt() - 1.0).abs(), base.nfe);
    }
    let zero = [0.0];
    let zrun = IntegratorRun::new(&zero, sigma_start, SIGMA_MIN);
    let mut probe = ScriptedNoise::new(vec![]);
    integ.integrate(&zrun, &target, &sched(), &mut probe).unwrap();
    let draws = probe.consumed();
    let mut var = a * a * v0;
    for i in 0..draws {
        let mut script = vec![0.0; draws];
        script[i] = 1.0;
        let r = integ.integrate(&zrun, &target, &sched(), &mut ScriptedNoise::new(script)).unwrap();
        var += r.x_final[0].powi(2);
    }
    ((var / v_end - 1.0).abs(), base.nfe)
}

fn slope(steps: &[usize], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = steps.iter().map(|n| (*n as f64).ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    -num / den
}

#[test]
fn shorter_interval_wins_at_equal_steps() {
    for name in [
        IntegratorName::EulerMaruyama,
        IntegratorName::ReverseDiffusion,
        IntegratorName::ProbFlowEuler,
        IntegratorName::KarrasDet,
        IntegratorName::KarrasStoch,
    ] {
        for steps in [4, 8, 16, 32] {
            let (near, n_near) = terminal_error(name, steps, 0.5);
            let (far, n_far) = terminal_error(name, steps, 50.0);
            assert_eq!(n_near, n_far);
            assert!(near < far, "{}: {near} vs {far} at {steps} steps", name.as_str());
        }
    }
}

#[test]
fn observed_orders() {
    let steps = [16, 32, 64, 128, 256];
    let order = |name| {
        let errs: Vec<f64> = steps.iter().map(|n| terminal_error(name, *n, 0.5).0).collect();
        slope(&steps, &errs)
    };
    let euler = order(IntegratorName::ProbFlowEuler);
    let heun = order(IntegratorName::KarrasDet);
    assert!((euler - 1.0).abs() <= 0.2, "euler order {euler}");
    assert!((heun - 2.0).abs() <= 0.3, "heun order {heun}");
}

#[test]
fn karras_det_matches_closed_form_point() {
    // x(σ) = x0 √((S² + σ²)/(S² + σ0²)); at S = 1, x0 = 2, σ 1 → 0.1 this is 2√(1.01/2).
    let target = GaussianMixture::isotropic_gaussian(1, S).unwrap();
    let integ = IntegratorConfig { steps: Some(1000), ..IntegratorConfig::new(IntegratorName::KarrasDet) };
    let r = integ
        .integrate(&IntegratorRun::new(&[2.0], 1.0, 0.1), &target, &sched(), &mut ZeroNoise)
        .unwrap();
    assert!((r.x_final[0] - 1.421_267_040_355_189).abs() < 1e-6, "{}", r.x_final[0]);
}
