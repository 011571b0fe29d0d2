use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};
use crate::score::ScoreModel;
use crate::ve::{tweedie_denoise, NoiseGrid};

use super::{langevin_step, ChainOutput, ChainStart, ChainState, Emission, SamplerOutput, StepSize};

/// Langevin dynamics at one fixed noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct PlainLangevinConfig {
    pub step: StepSize,
    pub sigma: f64,
    pub n_chains: usize,
    pub n_steps: usize,
    /// Every `emit_every`-th iterate is Tweedie-denoised and emitted.
    pub emit_every: usize,
    pub start: ChainStart,
}

/// Annealed Langevin dynamics: `iters_per_level` steps at every grid level
/// from the top down, with `η_i = η·τ_i²/τ_1²`, then a Tweedie step.
#[derive(Debug, Clone, PartialEq)]
pub struct AldConfig {
    /// Step size at the smallest level.
    pub step: StepSize,
    pub iters_per_level: usize,
    pub n_chains: usize,
    /// Full sweeps (emitted samples) per chain.
    pub sweeps: usize,
    pub start: ChainStart,
}

fn start_point<R: Rng>(start: &ChainStart, dim: usize, sd: f64, rng: &mut R) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    match start {
        ChainStart::At(p) => p.clone(),
        ChainStart::FromNoise => (0..dim)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                sd * z
            })
            .collect(),
    }
}

fn check_counts(pairs: &[(&str, usize)]) -> Result<()> {
    let bad: Vec<String> = pairs
        .iter()
        .filter(|(_, v)| *v == 0)
        .map(|(n, _)| format!("sampler.{n} must be >= 1"))
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(bad))
    }
}

fn check_start(start: &ChainStart, dim: usize) -> Result<()> {
    match start {
        ChainStart::At(p) if p.len() != dim => {
            Err(Error::InvalidInput("start point has the wrong dimension".into()))
        }
        _ => Ok(()),
    }
}

/// Emits one Tweedie-denoised copy of the current iterate.
fn emit(
    st: &mut ChainState,
    out: &mut ChainOutput,
    score: &dyn ScoreModel,
    sigma: f64,
    langevin: u64,
) -> Result<()> {
    let y = tweedie_denoise(score, &st.x, sigma)?;
    st.nfe_so_far += 1;
    out.ledger.langevin += langevin;
    out.ledger.denoise += 1;
    out.emissions.push(Emission {
        x: y,
        sigma_index: st.sigma_index,
        step: st.step,
        nfe: langevin + 1,
    });
    Ok(())
}

/// Chains use the stream `(master_seed, LangevinChain, c)`.
pub fn plain_langevin_run(
    score: &dyn ScoreModel,
    cfg: &PlainLangevinConfig,
    master_seed: u64,
) -> Result<SamplerOutput> {
    check_counts(&[
        ("n_chains", cfg.n_chains),
        ("n_steps", cfg.n_steps),
        ("emit_every", cfg.emit_every),
    ])?;
    check_start(&cfg.start, score.dim())?;
    let grid = NoiseGrid::single(cfg.sigma)?;
    let eta = cfg.step.eta(score.dim())?;
    let chains = (0..cfg.n_chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(master_seed, Purpose::LangevinChain, c as u64);
            let x = start_point(&cfg.start, score.dim(), 1.0, &mut rng);
            let mut st = ChainState::new(c, x, 0);
            let mut out = ChainOutput {
                chain: c,
                ..Default::default()
            };
            let mut last = 0;
            for i in 1..=cfg.n_steps {
                langevin_step(&mut st, score, &grid, eta, &mut rng)?;
                out.sigma_trace.push(0);
                if i % cfg.emit_every == 0 {
                    let spent = st.nfe_so_far - last;
                    emit(&mut st, &mut out, score, cfg.sigma, spent)?;
                    last = st.nfe_so_far;
                }
            }
            out.ledger.samples = out.emissions.len() as u64;
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SamplerOutput::from_chains(chains))
}

/// Chains use the same streams as [`plain_langevin_run`], so a one-level
/// grid reproduces it exactly.
pub fn ald_run(
    score: &dyn ScoreModel,
    grid: &NoiseGrid,
    cfg: &AldConfig,
    master_seed: u64,
) -> Result<SamplerOutput> {
    check_counts(&[
        ("n_chains", cfg.n_chains),
        ("iters_per_level", cfg.iters_per_level),
        ("sweeps", cfg.sweeps),
    ])?;
    check_start(&cfg.start, score.dim())?;
    let eta = cfg.step.eta(score.dim())?;
    let base = grid.level(0);
    let chains = (0..cfg.n_chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(master_seed, Purpose::LangevinChain, c as u64);
            let x = start_point(&cfg.start, score.dim(), grid.sigma_max(), &mut rng);
            let mut st = ChainState::new(c, x, grid.len() - 1);
            let mut out = ChainOutput {
                chain: c,
                ..Default::default()
            };
            let mut last = 0;
            for _ in 0..cfg.sweeps {
                for level in (0..grid.len()).rev() {
                    st.sigma_index = level;
                    let eta_i = eta * (grid.level(level) / base).powi(2);
                    for _ in 0..cfg.iters_per_level {
                        langevin_step(&mut st, score, grid, eta_i, &mut rng)?;
                        out.sigma_trace.push(level);
                    }
                }
                let spent = st.nfe_so_far - last;
                emit(&mut st, &mut out, score, base, spent)?;
                last = st.nfe_so_far;
            }
            out.ledger.samples = out.emissions.len() as u64;
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SamplerOutput::from_chains(chains))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mog::GaussianMixture;
    use crate::score::CountingScore;

    fn far_mixture() -> GaussianMixture {
        let mut a = vec![0.0; 4];
        let mut b = vec![0.0; 4];
        a[0] = 3.0;
        b[0] = -3.0;
        GaussianMixture::point_masses(vec![a, b]).unwrap()
    }

    #[test]
    fn single_level_ald_is_plain_langevin() {
        let mix = far_mixture();
        let sigma = 0.2;
        let start = ChainStart::At(mix.mean(0).to_vec());
        let ald = ald_run(
            &mix,
            &NoiseGrid::single(sigma).unwrap(),
            &AldConfig {
                step: StepSize::Eta(0.01),
                iters_per_level: 5,
                n_chains: 2,
                sweeps: 8,
                start: start.clone(),
            },
            3,
        )
        .unwrap();
        let plain = plain_langevin_run(
            &mix,
            &PlainLangevinConfig {
                step: StepSize::Eta(0.01),
                sigma,
                n_chains: 2,
                n_steps: 40,
                emit_every: 5,
                start,
            },
            3,
        )
        .unwrap();
        assert_eq!(ald, plain);
    }

    #[test]
    fn plain_langevin_stays_in_its_mode() {
        let mix = far_mixture();
        let out = plain_langevin_run(
            &mix,
            &PlainLangevinConfig {
                step: StepSize::Eta(1e-4),
                sigma: 0.01,
                n_chains: 4,
                n_steps: 10_000,
                emit_every: 10,
                start: ChainStart::At(mix.mean(0).to_vec()),
            },
            0,
        )
        .unwrap();
        assert!(out.samples().iter().all(|x| mix.nearest_mode(x).0 == 0));
    }

    #[test]
    fn ald_visits_both_modes() {
        let mix = far_mixture();
        let grid = NoiseGrid::new(0.01, 10.0, 30).unwrap();
        let out = ald_run(
            &mix,
            &grid,
            &AldConfig {
                step: StepSize::Eta(2e-5),
                iters_per_level: 10,
                n_chains: 4,
                sweeps: 10,
                start: ChainStart::At(mix.mean(0).to_vec()),
            },
            0,
        )
        .unwrap();
        let mut seen = [false; 2];
        for x in out.samples() {
            seen[mix.nearest_mode(&x).0] = true;
        }
        assert!(seen[0] && seen[1]);
    }

    #[test]
    fn ledgers_match_counters() {
        let mix = far_mixture();
        let counted = CountingScore::new(&mix);
        let grid = NoiseGrid::new(0.01, 10.0, 6).unwrap();
        let cfg = AldConfig {
            step: StepSize::Eta(1e-4),
            iters_per_level: 3,
            n_chains: 3,
            sweeps: 4,
            start: ChainStart::FromNoise,
        };
        let out = ald_run(&counted, &grid, &cfg, 1).unwrap();
        assert_eq!(out.ledger.total(), counted.calls());
        assert_eq!(out.ledger.total(), 3 * 4 * (6 * 3 + 1));
    }
}
