//! Closed-form isotropic Gaussian mixtures.
//!
//! A [`GaussianMixture`] stands in for a trained noise-conditional score
//! network: smoothing mode `k` with the kernel `N(0, σ²I)` gives
//! `N(μ_k, (v_k + σ²) I)`, so densities, scores and noise-level posteriors of
//! the smoothed target are all exact. `v_k = 0` encodes a point mass.

use std::path::Path;

use rand::Rng;
use rand_distr::weighted::WeightedIndex;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::score::ScoreModel;
use crate::ve::NoiseGrid;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub mean: Vec<f64>,
    pub base_variance: f64,
    pub weight: f64,
}

/// On-disk mixture definition: `{dim, modes: [{mean, base_variance, weight}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureFile {
    pub dim: usize,
    pub modes: Vec<Mode>,
}

#[derive(Debug, Clone)]
pub struct GaussianMixture {
    dim: usize,
    /// Row-major `K × dim`.
    means: Vec<f64>,
    base_variances: Vec<f64>,
    weights: Vec<f64>,
    log_weights: Vec<f64>,
}

/// Smoothed log-density, score and mode responsibilities at one `(x, σ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedEval {
    pub log_density: f64,
    pub score: Vec<f64>,
    pub responsibilities: Vec<f64>,
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

impl GaussianMixture {
    /// Builds a mixture, normalizing the weights to sum to one.
    pub fn new(dim: usize, modes: Vec<Mode>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("mixture dimension must be positive".into()));
        }
        if modes.is_empty() {
            return Err(Error::InvalidInput("mixture needs at least one mode".into()));
        }
        let mut means = Vec::with_capacity(modes.len() * dim);
        let mut base_variances = Vec::with_capacity(modes.len());
        let mut weights = Vec::with_capacity(modes.len());
        for (k, mode) in modes.iter().enumerate() {
            if mode.mean.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "mode {k} has length {} but dim is {dim}",
                    mode.mean.len()
                )));
            }
            ensure_finite(&mode.mean, &format!("mean of mode {k}"))?;
            if !(mode.base_variance.is_finite() && mode.base_variance >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "mode {k} base_variance must be finite and >= 0, got {}",
                    mode.base_variance
                )));
            }
            if !(mode.weight.is_finite() && mode.weight > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "mode {k} weight must be finite and > 0, got {}",
                    mode.weight
                )));
            }
            means.extend_from_slice(&mode.mean);
            base_variances.push(mode.base_variance);
            weights.push(mode.weight);
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        let log_weights = weights.iter().map(|w| w.ln()).collect();
        Ok(Self {
            dim,
            means,
            base_variances,
            weights,
            log_weights,
        })
    }

    /// Equal-weight mixture of point masses.
    pub fn point_masses(means: Vec<Vec<f64>>) -> Result<Self> {
        let dim = means.first().map(Vec::len).unwrap_or(0);
        let modes = means
            .into_iter()
            .map(|mean| Mode {
                mean,
                base_variance: 0.0,
                weight: 1.0,
            })
            .collect();
        Self::new(dim, modes)
    }

    /// `N(0, s² I)` in `dim` dimensions.
    pub fn isotropic_gaussian(dim: usize, s: f64) -> Result<Self> {
        Self::new(
            dim,
            vec![Mode {
                mean: vec![0.0; dim],
                base_variance: s * s,
                weight: 1.0,
            }],
        )
    }

    pub fn from_file_data(file: MixtureFile) -> Result<Self> {
        Self::new(file.dim, file.modes)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: MixtureFile = serde_json::from_str(&text)?;
        Self::from_file_data(file)
    }

    pub fn to_file_data(&self) -> MixtureFile {
        MixtureFile {
            dim: self.dim,
            modes: (0..self.n_modes())
                .map(|k| Mode {
                    mean: self.mean(k).to_vec(),
                    base_variance: self.base_variances[k],
                    weight: self.weights[k],
                })
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_modes(&self) -> usize {
        self.weights.len()
    }

    pub fn mean(&self, k: usize) -> &[f64] {
        &self.means[k * self.dim..(k + 1) * self.dim]
    }

    pub fn means(&self) -> impl Iterator<Item = &[f64]> {
        self.means.chunks_exact(self.dim)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn base_variance(&self, k: usize) -> f64 {
        self.base_variances[k]
    }

    /// Mixture with every mode's variance increased by `extra`, i.e. the
    /// target pre-smoothed at noise level `√extra`.
    pub fn smoothed_by(&self, extra_variance: f64) -> Self {
        let mut out = self.clone();
        out.base_variances.iter_mut().for_each(|v| *v += extra_variance);
        out
    }

    /// Minimum pairwise distance between mode means.
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for a in 0..self.n_modes() {
            for b in a + 1..self.n_modes() {
                best = best.min(sq_dist(self.mean(a), self.mean(b)).sqrt());
            }
        }
        best
    }

    fn check_point(&self, x: &[f64], sigma: f64) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "x has length {} but mixture dim is {}",
                x.len(),
                self.dim
            )));
        }
        ensure_finite(x, "x")?;
        if !sigma.is_finite() {
            return Err(Error::InvalidInput(format!("sigma must be finite, got {sigma}")));
        }
        if sigma <= 0.0 {
            return Err(Error::Domain(format!("sigma must be > 0, got {sigma}")));
        }
        Ok(())
    }

    /// Per-mode log joint `log w_k + log N(x; μ_k, (v_k + σ²) I)`.
    fn component_log_joint(&self, x: &[f64], sigma: f64, out: &mut [f64]) {
        let d = self.dim as f64;
        let s2 = sigma * sigma;
        for (k, slot) in out.iter_mut().enumerate() {
            let var = self.base_variances[k] + s2;
            let r2 = sq_dist(x, self.mean(k));
            *slot = self.log_weights[k] - 0.5 * d * (LN_2PI + var.ln()) - 0.5 * r2 / var;
        }
    }

    /// Log-density of the smoothed mixture `p̂(x | σ)`.
    pub fn log_density(&self, x: &[f64], sigma: f64) -> Result<f64> {
        self.check_point(x, sigma)?;
        let mut logs = vec![0.0; self.n_modes()];
        self.component_log_joint(x, sigma, &mut logs);
        Ok(log_sum_exp(&logs))
    }

    pub fn smoothed_score(&self, x: &[f64], sigma: f64) -> Result<SmoothedEval> {
        self.check_point(x, sigma)?;
        let mut resp = vec![0.0; self.n_modes()];
        self.component_log_joint(x, sigma, &mut resp);
        let log_density = log_sum_exp(&resp);
        resp.iter_mut().for_each(|l| *l = (*l - log_density).exp());
        let mut score = vec![0.0; self.dim];
        self.accumulate_score(x, sigma, &resp, &mut score);
        Ok(SmoothedEval {
            log_density,
            score,
            responsibilities: resp,
        })
    }

    fn accumulate_score(&self, x: &[f64], sigma: f64, resp: &[f64], score: &mut [f64]) {
        score.fill(0.0);
        let s2 = sigma * sigma;
        for (k, &g) in resp.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let c = g / (self.base_variances[k] + s2);
            for ((s, m), xi) in score.iter_mut().zip(self.mean(k)).zip(x) {
                *s += c * (m - xi);
            }
        }
    }

    /// Draws `k ~ w`, then `x ~ N(μ_k, (v_k + σ²) I)`.
    pub fn sample_smoothed<R: Rng + ?Sized>(&self, sigma: f64, rng: &mut R) -> Result<Vec<f64>> {
        Ok(self.sample_smoothed_labeled(sigma, rng)?.1)
    }

    /// Like [`sample_smoothed`](Self::sample_smoothed) but also returns the drawn mode.
    pub fn sample_smoothed_labeled<R: Rng + ?Sized>(
        &self,
        sigma: f64,
        rng: &mut R,
    ) -> Result<(usize, Vec<f64>)> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::Domain(format!("sigma must be finite and >= 0, got {sigma}")));
        }
        let k = if self.n_modes() == 1 {
            0
        } else {
            WeightedIndex::new(&self.weights)
                .map_err(|e| Error::Internal(e.to_string()))?
                .sample(rng)
        };
        let var = self.base_variances[k] + sigma * sigma;
        let mean = self.mean(k);
        if var == 0.0 {
            return Ok((k, mean.to_vec()));
        }
        let sd = var.sqrt();
        let x = mean
            .iter()
            .map(|m| {
                let z: f64 = StandardNormal.sample(rng);
                m + sd * z
            })
            .collect();
        Ok((k, x))
    }

    /// Exact noise-level posterior over the grid,
    /// `p̂(τ_m | x) ∝ p̂(x | τ_m) · p̂(τ_m)`.
    pub fn sigma_posterior(&self, x: &[f64], grid: &NoiseGrid) -> Result<Vec<f64>> {
        self.check_point(x, grid.sigma_min())?;
        let d = self.dim as f64;
        let r2: Vec<f64> = self.means().map(|m| sq_dist(x, m)).collect();
        let shared_var = self.base_variances.iter().all(|v| *v == self.base_variances[0]);
        let mut logs = Vec::with_capacity(grid.len());
        if shared_var {
            // Modes by distance: once even the heaviest weight cannot lift a
            // mode within 40 nats of the running maximum, neither can any
            // farther one, so the sum stops there.
            let mut order: Vec<usize> = (0..self.n_modes()).collect();
            order.sort_by(|a, b| r2[*a].total_cmp(&r2[*b]));
            let max_log_w = self.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for (tau, log_prior) in grid.levels().iter().zip(grid.log_prior()) {
                let var = self.base_variances[0] + tau * tau;
                let half_inv = 0.5 / var;
                let (mut best, mut acc) = (f64::NEG_INFINITY, 0.0);
                for &k in &order {
                    if max_log_w - r2[k] * half_inv < best - 40.0 {
                        break;
                    }
                    let t = self.log_weights[k] - r2[k] * half_inv;
                    if t > best {
                        acc = acc * (best - t).exp() + 1.0;
                        best = t;
                    } else {
                        acc += (t - best).exp();
                    }
                }
                logs.push(best + acc.ln() - 0.5 * d * (LN_2PI + var.ln()) + log_prior);
            }
        } else {
            let mut scratch = vec![0.0; self.n_modes()];
            for (tau, log_prior) in grid.levels().iter().zip(grid.log_prior()) {
                let s2 = tau * tau;
                for (k, slot) in scratch.iter_mut().enumerate() {
                    let var = self.base_variances[k] + s2;
                    *slot = self.log_weights[k] - 0.5 * d * (LN_2PI + var.ln()) - 0.5 * r2[k] / var;
                }
                logs.push(log_sum_exp(&scratch) + log_prior);
            }
        }
        let norm = log_sum_exp(&logs);
        if !norm.is_finite() {
            return Err(Error::Internal(
                "noise-level posterior has no finite mass".into(),
            ));
        }
        Ok(logs.into_iter().map(|l| (l - norm).exp()).collect())
    }

    /// Index of the nearest mode mean and the Euclidean distance to it.
    pub fn nearest_mode(&self, x: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (k, mean) in self.means().enumerate() {
            let d2 = sq_dist(x, mean);
            if d2 < best.1 {
                best = (k, d2);
            }
        }
        (best.0, best.1.sqrt())
    }
}

impl ScoreModel for GaussianMixture {
    fn dim(&self) -> usize {
        self.dim
    }

    fn score_into(&self, x: &[f64], sigma: f64, out: &mut [f64]) -> Result<()> {
        self.check_point(x, sigma)?;
        let mut resp = vec![0.0; self.n_modes()];
        self.component_log_joint(x, sigma, &mut resp);
        let norm = log_sum_exp(&resp);
        resp.iter_mut().for_each(|l| *l = (*l - norm).exp());
        self.accumulate_score(x, sigma, &resp, out);
        Ok(())
    }
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Synthetic well-separated point-mass mixture used by the experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkMixture {
    pub modes: usize,
    pub dim: usize,
    /// Modes are drawn uniformly from `[0, box_size]^dim`.
    pub box_size: f64,
    /// Minimum pairwise distance enforced by rejection.
    pub min_separation: f64,
    /// Weights are `1 + weight_jitter·u` with `u ~ U(-1, 1)`, then normalized.
    #[serde(default)]
    pub weight_jitter: f64,
    pub seed: u64,
}

impl BenchmarkMixture {
    pub fn generate(&self) -> Result<GaussianMixture> {
        use rand::SeedableRng;
        if self.modes == 0 || self.dim == 0 {
            return Err(Error::InvalidInput("benchmark mixture needs modes >= 1 and dim >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.weight_jitter) {
            return Err(Error::InvalidInput("weight_jitter must lie in [0, 1)".into()));
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(self.seed);
        let mut means: Vec<Vec<f64>> = Vec::with_capacity(self.modes);
        let mut attempts = 0usize;
        while means.len() < self.modes {
            attempts += 1;
            if attempts > 1_000_000 {
                return Err(Error::InvalidInput(format!(
                    "could not place {} modes with separation {} in box {}",
                    self.modes, self.min_separation, self.box_size
                )));
            }
            let candidate: Vec<f64> = (0..self.dim)
                .map(|_| rng.random::<f64>() * self.box_size)
                .collect();
            let sep2 = self.min_separation * self.min_separation;
            if means.iter().all(|m| sq_dist(m, &candidate) >= sep2) {
                means.push(candidate);
            }
        }
        let modes = means
            .into_iter()
            .map(|mean| Mode {
                mean,
                base_variance: 0.0,
                weight: 1.0 + self.weight_jitter * (2.0 * rng.random::<f64>() - 1.0),
            })
            .collect();
        GaussianMixture::new(self.dim, modes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_mode() -> GaussianMixture {
        GaussianMixture::point_masses(vec![vec![3.0, 0.0], vec![-3.0, 0.0]]).unwrap()
    }

    #[test]
    fn single_mode_score_and_density() {
        let mix = GaussianMixture::point_masses(vec![vec![0.0, 0.0]]).unwrap();
        let ev = mix.smoothed_score(&[2.0, 0.0], 1.0).unwrap();
        assert_eq!(ev.score, vec![-2.0, 0.0]);
        let expected = -LN_2PI - 2.0;
        assert!((ev.log_density - expected).abs() < 1e-14);
    }

    #[test]
    fn symmetric_two_mode_density_matches_direct_sum() {
        let mix = two_mode();
        let ev = mix.smoothed_score(&[0.0, 0.0], 1.0).unwrap();
        assert!(ev.score.iter().all(|s| s.abs() < 1e-15));
        // Direct summation: 0.5·N((0,0);(±3,0),I) each.
        let direct: f64 = [3.0f64, -3.0]
            .iter()
            .map(|m| 0.5 * (-(m * m) / 2.0).exp() / (2.0 * std::f64::consts::PI))
            .sum();
        assert!((ev.log_density - direct.ln()).abs() < 1e-12);
        assert!((ev.log_density - (-4.5 - LN_2PI)).abs() < 1e-12);
    }

    #[test]
    fn isolated_mode_responsibility_is_one_hot() {
        let mix = GaussianMixture::point_masses(vec![
            vec![0.0, 0.0],
            vec![100.0, 0.0],
            vec![0.0, 100.0],
        ])
        .unwrap();
        let ev = mix.smoothed_score(&[100.0, 0.0], 1.0).unwrap();
        assert!((ev.responsibilities[1] - 1.0).abs() < 1e-6);
        assert!(ev.responsibilities[0] < 1e-6 && ev.responsibilities[2] < 1e-6);
        let total: f64 = ev.responsibilities.iter().sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mix = two_mode();
        assert!(matches!(mix.smoothed_score(&[0.0, 0.0], 0.0), Err(Error::Domain(_))));
        assert!(matches!(mix.smoothed_score(&[0.0, 0.0], -1.0), Err(Error::Domain(_))));
        assert!(matches!(
            mix.smoothed_score(&[f64::NAN, 0.0], 1.0),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            mix.smoothed_score(&[0.0, 0.0], f64::INFINITY),
            Err(Error::InvalidInput(_))
        ));
        assert!(mix.smoothed_score(&[0.0], 1.0).is_err());
        assert!(GaussianMixture::new(2, vec![]).is_err());
        assert!(GaussianMixture::new(
            1,
            vec![Mode { mean: vec![0.0], base_variance: -1.0, weight: 1.0 }]
        )
        .is_err());
    }

    #[test]
    fn weights_are_normalized() {
        let mix = GaussianMixture::new(
            1,
            vec![
                Mode { mean: vec![0.0], base_variance: 0.0, weight: 3.0 },
                Mode { mean: vec![1.0], base_variance: 0.0, weight: 7.0 },
            ],
        )
        .unwrap();
        assert!((mix.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((mix.weights()[0] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn point_mass_sample_at_zero_sigma_is_a_stored_mean() {
        let mix = two_mode();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let x = mix.sample_smoothed(0.0, &mut rng).unwrap();
            assert!(mix.means().any(|m| m == x.as_slice()));
        }
    }

    #[test]
    fn mode_frequencies_follow_weights() {
        let mix = GaussianMixture::new(
            1,
            vec![
                Mode { mean: vec![0.0], base_variance: 0.0, weight: 0.3 },
                Mode { mean: vec![1.0], base_variance: 0.0, weight: 0.7 },
            ],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| mix.sample_smoothed(0.0, &mut rng).unwrap()[0] == 0.0)
            .count();
        let p = hits as f64 / n as f64;
        let se = (0.3f64 * 0.7 / n as f64).sqrt();
        assert!((p - 0.3).abs() < 3.0 * se, "p={p}");
    }

    #[test]
    fn smoothed_sample_mean_is_near_zero() {
        let mix = GaussianMixture::point_masses(vec![vec![0.0, 0.0]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mut acc = [0.0; 2];
        for _ in 0..n {
            let x = mix.sample_smoothed(2.0, &mut rng).unwrap();
            acc[0] += x[0];
            acc[1] += x[1];
        }
        let norm = ((acc[0] / n as f64).powi(2) + (acc[1] / n as f64).powi(2)).sqrt();
        assert!(norm < 0.03, "norm={norm}");
    }

    #[test]
    fn posterior_at_point_mode_peaks_at_smallest_level() {
        let mix = two_mode();
        let grid = NoiseGrid::new(0.01, 50.0, 100).unwrap();
        let post = mix.sigma_posterior(&[3.0, 0.0], &grid).unwrap();
        let argmax = crate::samplers::argmax(&post);
        assert_eq!(argmax, 0);
        assert!((post.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn shared_variance_posterior_matches_full_sum() {
        let bench = BenchmarkMixture { modes: 30, dim: 5, box_size: 1.0, min_separation: 0.1, weight_jitter: 0.5, seed: 4 };
        let grid = NoiseGrid::new(0.01, 50.0, 80).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for shared in [0.0, 0.02] {
            let mix = bench.generate().unwrap().smoothed_by(shared);
            for m in [0, 20, 50, 79] {
                let x = mix.sample_smoothed(grid.level(m), &mut rng).unwrap();
                let post = mix.sigma_posterior(&x, &grid).unwrap();
                let logs: Vec<f64> = grid
                    .levels()
                    .iter()
                    .zip(grid.prior())
                    .map(|(tau, prior)| {
                        let dens: f64 = (0..mix.n_modes())
                            .map(|k| {
                                let var = mix.base_variance(k) + tau * tau;
                                let r2: f64 = x.iter().zip(mix.mean(k)).map(|(a, b)| (a - b).powi(2)).sum();
                                mix.weights()[k] * (-0.5 * r2 / var).exp() / (2.0 * PI * var).powf(2.5)
                            })
                            .sum();
                        dens * prior
                    })
                    .collect();
                let z: f64 = logs.iter().sum();
                for (p, q) in post.iter().zip(&logs) {
                    assert!((p - q / z).abs() < 1e-12, "{p} vs {}", q / z);
                }
            }
        }
    }

    #[test]
    fn posterior_recovers_corruption_level() {
        // The level estimate scatters by about 1/√(2d) in log σ; with M = 100
        // a ±2-index window spans ±0.17, so d = 128 keeps it above 2.5 sd.
        let d = 128;
        let mut far = vec![0.0; d];
        far[0] = 1e4;
        let mix = GaussianMixture::point_masses(vec![vec![0.0; d], far]).unwrap();
        let grid = NoiseGrid::new(0.01, 50.0, 100).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let trials = 1000;
        let mut ok = 0;
        for t in 0..trials {
            let m = t % grid.len();
            let x = mix.sample_smoothed(grid.level(m), &mut rng).unwrap();
            let post = mix.sigma_posterior(&x, &grid).unwrap();
            let am = crate::samplers::argmax(&post);
            if am.abs_diff(m) <= 2 {
                ok += 1;
            }
        }
        assert!(ok as f64 / trials as f64 > 0.95, "ok={ok}");
    }

    #[test]
    fn json_round_trip() {
        let mix = two_mode();
        let text = serde_json::to_string(&mix.to_file_data()).unwrap();
        let back: MixtureFile = serde_json::from_str(&text).unwrap();
        let again = GaussianMixture::from_file_data(back).unwrap();
        assert_eq!(again.to_file_data(), mix.to_file_data());
    }

    #[test]
    fn benchmark_mixture_respects_separation() {
        let spec = BenchmarkMixture {
            modes: 50,
            dim: 16,
            box_size: 1.0,
            min_separation: 0.8,
            weight_jitter: 0.5,
            seed: 5,
        };
        let mix = spec.generate().unwrap();
        assert_eq!(mix.n_modes(), 50);
        assert!(mix.min_separation() >= 0.8);
        assert_eq!(spec.generate().unwrap().to_file_data(), mix.to_file_data());
    }
}
