//! Noise-level prediction `q(σ | x)` over a [`NoiseGrid`].
//!
//! Two interchangeable predictors implement [`NoiseLevelPredictor`]: the exact
//! Bayes posterior of a [`GaussianMixture`], and a trainable softmax-linear
//! [`NoiseClassifier`] over a fixed feature map. Predictor evaluations are
//! never counted as NFE.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mog::{sq_dist, GaussianMixture};
use crate::samplers::argmax;
use crate::ve::{NoiseGrid, ScheduleSpec};

pub const FEATURE_MAP_VERSION: &str = "fmap-v1";
pub const N_FEATURES: usize = 16;
const N_BUMPS: usize = 8;
const FLOOR: f64 = 1e-12;

pub trait NoiseLevelPredictor: Sync {
    fn grid(&self) -> &NoiseGrid;

    /// Probability vector over the grid levels.
    fn predict(&self, x: &[f64]) -> Result<Vec<f64>>;
}

/// The exact noise-level posterior of an analytic mixture.
#[derive(Debug, Clone)]
pub struct ExactPosterior<'a> {
    mixture: &'a GaussianMixture,
    grid: NoiseGrid,
}

impl<'a> ExactPosterior<'a> {
    pub fn new(mixture: &'a GaussianMixture, grid: NoiseGrid) -> Self {
        Self { mixture, grid }
    }
}

impl NoiseLevelPredictor for ExactPosterior<'_> {
    fn grid(&self) -> &NoiseGrid {
        &self.grid
    }

    fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.mixture.sigma_posterior(x, &self.grid)
    }
}

/// How training levels are distributed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LevelWeighting {
    /// Level frequencies follow the grid prior `∝ 1/τ_m`.
    #[default]
    Prior,
    Uniform,
}

#[derive(Debug, Clone, Default)]
pub struct LabeledSet {
    pub inputs: Vec<Vec<f64>>,
    /// Zero-based grid indices.
    pub labels: Vec<usize>,
}

impl LabeledSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Splits `total` into integer counts proportional to `weights`
/// (largest-remainder rounding).
fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let short = total - counts.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        counts[i] += 1;
    }
    counts
}

/// Draws `n_per_level · M` corrupted samples `x ~ p̂(· | τ_m)` labeled `m`.
pub fn make_training_set<R: Rng + ?Sized>(
    mix: &GaussianMixture,
    grid: &NoiseGrid,
    n_per_level: usize,
    weighting: LevelWeighting,
    rng: &mut R,
) -> Result<LabeledSet> {
    let counts = match weighting {
        LevelWeighting::Uniform => vec![n_per_level; grid.len()],
        LevelWeighting::Prior => apportion(n_per_level * grid.len(), grid.prior()),
    };
    let mut set = LabeledSet::default();
    for (m, &count) in counts.iter().enumerate() {
        for _ in 0..count {
            set.inputs.push(mix.sample_smoothed(grid.level(m), rng)?);
            set.labels.push(m);
        }
    }
    Ok(set)
}

/// Mode-agnostic summary statistics of `x` that carry noise-level
/// information. The codebook is a set of reference points (mixture means);
/// every statistic is symmetric in the codebook order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMap {
    pub version: String,
    pub dim: usize,
    /// Optional `k × dim` row-major projection applied before codebook
    /// distances.
    pub projection: Option<Vec<f64>>,
    pub projected_dim: usize,
    /// Codebook entries, already projected.
    pub codebook: Vec<Vec<f64>>,
    pub centroid: Vec<f64>,
    pub bump_centers: Vec<f64>,
    pub bump_width: f64,
}

impl FeatureMap {
    /// Builds the map from the mixture means. At most `max_codebook` means are
    /// kept (a seeded random subset); dimensions above `max_projected_dim`
    /// are reduced by a seeded Gaussian random projection.
    pub fn from_mixture<R: Rng + ?Sized>(
        mix: &GaussianMixture,
        grid: &NoiseGrid,
        max_codebook: usize,
        max_projected_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let dim = mix.dim();
        if max_codebook == 0 || max_projected_dim == 0 {
            return Err(Error::InvalidInput("codebook and projection sizes must be positive".into()));
        }
        let mut idx: Vec<usize> = (0..mix.n_modes()).collect();
        if idx.len() > max_codebook {
            idx.shuffle(rng);
            idx.truncate(max_codebook);
            idx.sort_unstable();
        }
        let (projection, projected_dim) = if dim > max_projected_dim {
            let k = max_projected_dim;
            let scale = 1.0 / (k as f64).sqrt();
            let p: Vec<f64> = (0..k * dim)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    z * scale
                })
                .collect();
            (Some(p), k)
        } else {
            (None, dim)
        };
        let mut centroid = vec![0.0; dim];
        for mean in mix.means() {
            for (c, m) in centroid.iter_mut().zip(mean) {
                *c += m / mix.n_modes() as f64;
            }
        }
        let mut map = Self {
            version: FEATURE_MAP_VERSION.to_string(),
            dim,
            projection,
            projected_dim,
            codebook: Vec::new(),
            centroid,
            bump_centers: Vec::new(),
            bump_width: 1.0,
        };
        map.codebook = idx.iter().map(|&k| map.project(mix.mean(k))).collect();
        let (lo, hi) = (2.0 * grid.sigma_min().ln(), 2.0 * grid.sigma_max().ln());
        map.bump_centers = (0..N_BUMPS)
            .map(|j| lo + (hi - lo) * j as f64 / (N_BUMPS - 1) as f64)
            .collect();
        map.bump_width = (hi - lo).max(1e-9) / (N_BUMPS - 1) as f64;
        Ok(map)
    }

    fn project(&self, x: &[f64]) -> Vec<f64> {
        match &self.projection {
            None => x.to_vec(),
            Some(p) => p
                .chunks_exact(self.dim)
                .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
                .collect(),
        }
    }

    pub fn features(&self, x: &[f64]) -> Result<[f64; N_FEATURES]> {
        if x.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "feature map expects dim {}, got {}",
                self.dim,
                x.len()
            )));
        }
        crate::error::ensure_finite(x, "x")?;
        let d = self.dim as f64;
        let px = self.project(x);
        let pd = self.projected_dim as f64;
        let (mut r1, mut r2) = (f64::INFINITY, f64::INFINITY);
        for c in &self.codebook {
            let r = sq_dist(&px, c);
            if r < r1 {
                r2 = r1;
                r1 = r;
            } else if r < r2 {
                r2 = r;
            }
        }
        if !r2.is_finite() {
            r2 = r1;
        }
        let near = (r1 / pd + FLOOR).ln();
        let second = (r2 / pd + FLOOR).ln();
        let norm = (sq_dist(x, &self.centroid) / d + FLOOR).ln();
        let diff = if self.dim > 1 {
            let e: f64 = x.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
            (e / (d - 1.0) + FLOOR).ln()
        } else {
            norm
        };
        let mut f = [0.0; N_FEATURES];
        f[..8].copy_from_slice(&[
            near,
            second,
            norm,
            diff,
            near * near,
            norm * norm,
            near * norm,
            diff * diff,
        ]);
        let w2 = 2.0 * self.bump_width * self.bump_width;
        for (slot, c) in f[8..].iter_mut().zip(&self.bump_centers) {
            *slot = (-(near - c).powi(2) / w2).exp();
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: usize,
    /// Full-training-set cross-entropy after each epoch.
    pub loss_history: Vec<f64>,
    pub final_cross_entropy: f64,
    pub top1_accuracy: f64,
    pub within_k_accuracy: f64,
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Tolerance `k` for the within-±k accuracy.
    pub k: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            epochs: 200,
            learning_rate: 0.5,
            batch_size: 64,
            seed: 0,
            k: 2,
        }
    }
}

/// Softmax-linear noise-level classifier `softmax(Wᵀ φ(x) + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseClassifier {
    #[serde(rename = "version")]
    pub feature_map_version: String,
    #[serde(rename = "grid")]
    pub schedule: ScheduleSpec,
    pub feature_map: FeatureMap,
    pub feature_mean: Vec<f64>,
    pub feature_std: Vec<f64>,
    /// Row-major `N_FEATURES × M`.
    #[serde(rename = "W")]
    pub weights: Vec<f64>,
    #[serde(rename = "b")]
    pub bias: Vec<f64>,
    #[serde(skip)]
    grid: Option<NoiseGrid>,
}

impl NoiseClassifier {
    /// Zero-initialized classifier whose feature standardization is fitted to
    /// `reference` inputs.
    pub fn new(feature_map: FeatureMap, grid: &NoiseGrid, reference: &[Vec<f64>]) -> Result<Self> {
        let m = grid.len();
        let mut mean = [0.0; N_FEATURES];
        let mut sq = [0.0; N_FEATURES];
        for x in reference {
            let f = feature_map.features(x)?;
            for j in 0..N_FEATURES {
                mean[j] += f[j];
                sq[j] += f[j] * f[j];
            }
        }
        let n = reference.len().max(1) as f64;
        let std: Vec<f64> = (0..N_FEATURES)
            .map(|j| {
                mean[j] /= n;
                let var = sq[j] / n - mean[j] * mean[j];
                if var > 1e-12 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self {
            feature_map_version: FEATURE_MAP_VERSION.to_string(),
            schedule: grid.spec(),
            feature_map,
            feature_mean: mean.to_vec(),
            feature_std: std,
            weights: vec![0.0; N_FEATURES * m],
            bias: vec![0.0; m],
            grid: Some(grid.clone()),
        })
    }

    pub fn n_levels(&self) -> usize {
        self.bias.len()
    }

    fn standardized(&self, x: &[f64]) -> Result<[f64; N_FEATURES]> {
        let mut f = self.feature_map.features(x)?;
        for j in 0..N_FEATURES {
            f[j] = (f[j] - self.feature_mean[j]) / self.feature_std[j];
        }
        Ok(f)
    }

    fn logits(&self, f: &[f64; N_FEATURES], out: &mut [f64]) {
        let m = self.n_levels();
        out.copy_from_slice(&self.bias);
        for (j, fj) in f.iter().enumerate() {
            let row = &self.weights[j * m..(j + 1) * m];
            for (o, w) in out.iter_mut().zip(row) {
                *o += fj * w;
            }
        }
    }

    fn softmax_in_place(v: &mut [f64]) {
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for x in v.iter_mut() {
            *x = (*x - max).exp();
            total += *x;
        }
        v.iter_mut().for_each(|x| *x /= total);
    }

    /// Mean cross-entropy over a labeled set.
    pub fn cross_entropy(&self, set: &LabeledSet) -> Result<f64> {
        let mut logits = vec![0.0; self.n_levels()];
        let mut total = 0.0;
        for (x, &y) in set.inputs.iter().zip(&set.labels) {
            let f = self.standardized(x)?;
            self.logits(&f, &mut logits);
            let lse = crate::mog::log_sum_exp(&logits);
            total += lse - logits[y];
        }
        Ok(total / set.len().max(1) as f64)
    }

    /// Mini-batch gradient descent on the cross-entropy (equivalently,
    /// gradient ascent on the mean log-likelihood). `held_out` feeds the
    /// accuracy figures of the report.
    pub fn train(
        &mut self,
        set: &LabeledSet,
        held_out: &LabeledSet,
        opts: TrainOptions,
    ) -> Result<TrainReport> {
        use rand::SeedableRng;
        let m = self.n_levels();
        if let Some(&bad) = set.labels.iter().find(|&&y| y >= m) {
            return Err(Error::InvalidInput(format!("label {bad} outside grid of {m} levels")));
        }
        if opts.batch_size == 0 {
            return Err(Error::InvalidInput("batch_size must be positive".into()));
        }
        let feats: Vec<[f64; N_FEATURES]> = set
            .inputs
            .iter()
            .map(|x| self.standardized(x))
            .collect::<Result<_>>()?;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
        let mut order: Vec<usize> = (0..set.len()).collect();
        let mut probs = vec![0.0; m];
        let mut grad_w = vec![0.0; N_FEATURES * m];
        let mut grad_b = vec![0.0; m];
        let mut history = Vec::with_capacity(opts.epochs);

        for epoch in 0..opts.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(opts.batch_size) {
                grad_w.fill(0.0);
                grad_b.fill(0.0);
                for &i in batch {
                    self.logits(&feats[i], &mut probs);
                    Self::softmax_in_place(&mut probs);
                    probs[set.labels[i]] -= 1.0;
                    for (j, fj) in feats[i].iter().enumerate() {
                        let row = &mut grad_w[j * m..(j + 1) * m];
                        for (g, p) in row.iter_mut().zip(&probs) {
                            *g += fj * p;
                        }
                    }
                    for (g, p) in grad_b.iter_mut().zip(&probs) {
                        *g += p;
                    }
                }
                let step = opts.learning_rate / batch.len() as f64;
                for (w, g) in self.weights.iter_mut().zip(&grad_w) {
                    *w -= step * g;
                }
                for (b, g) in self.bias.iter_mut().zip(&grad_b) {
                    *b -= step * g;
                }
            }
            let loss = self.cross_entropy(set)?;
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch, loss });
            }
            history.push(loss);
        }

        let final_ce = match history.last() {
            Some(l) => *l,
            None => self.cross_entropy(set)?,
        };
        let (top1, within) = self.accuracy(held_out, opts.k)?;
        Ok(TrainReport {
            epochs: opts.epochs,
            loss_history: history,
            final_cross_entropy: final_ce,
            top1_accuracy: top1,
            within_k_accuracy: within,
            k: opts.k,
        })
    }

    /// Top-1 and within-±k accuracy against the labels of `set`.
    pub fn accuracy(&self, set: &LabeledSet, k: usize) -> Result<(f64, f64)> {
        if set.is_empty() {
            return Ok((0.0, 0.0));
        }
        let (mut top1, mut within) = (0usize, 0usize);
        for (x, &y) in set.inputs.iter().zip(&set.labels) {
            let am = argmax(&self.predict(x)?);
            top1 += usize::from(am == y);
            within += usize::from(am.abs_diff(y) <= k);
        }
        let n = set.len() as f64;
        Ok((top1 as f64 / n, within as f64 / n))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        crate::harness::output::write_atomic(path, text.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut c: NoiseClassifier = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if c.feature_map_version != FEATURE_MAP_VERSION {
            return Err(Error::InvalidInput(format!(
                "classifier feature map version {} is not supported (expected {FEATURE_MAP_VERSION})",
                c.feature_map_version
            )));
        }
        let m = c.schedule.m;
        if c.bias.len() != m || c.weights.len() != N_FEATURES * m {
            return Err(Error::InvalidInput("classifier weight shapes do not match its grid".into()));
        }
        c.grid = Some(c.schedule.grid()?);
        Ok(c)
    }
}

impl NoiseLevelPredictor for NoiseClassifier {
    fn grid(&self) -> &NoiseGrid {
        self.grid.as_ref().expect("classifier grid is set at construction or load")
    }

    fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        let f = self.standardized(x)?;
        let mut out = vec![0.0; self.n_levels()];
        self.logits(&f, &mut out);
        Self::softmax_in_place(&mut out);
        Ok(out)
    }
}
