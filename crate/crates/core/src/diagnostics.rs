//! Sample-quality statistics: mode coverage, class autocorrelation and fit,
//! Fréchet distance between moment-matched Gaussians, and NFE accounting.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mog::GaussianMixture;

/// Score evaluations by phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NfeLedger {
    pub init: u64,
    pub langevin: u64,
    pub denoise: u64,
    pub samples: u64,
}

impl NfeLedger {
    pub fn total(&self) -> u64 {
        self.init + self.langevin + self.denoise
    }

    pub fn merge(&mut self, other: &NfeLedger) {
        self.init += other.init;
        self.langevin += other.langevin;
        self.denoise += other.denoise;
        self.samples += other.samples;
    }

    /// Average NFE per sample with initialization charged to the samples.
    pub fn per_sample(&self) -> f64 {
        self.total() as f64 / self.samples.max(1) as f64
    }

    /// Average NFE per sample with initialization excluded.
    pub fn per_sample_excluding_init(&self) -> f64 {
        (self.langevin + self.denoise) as f64 / self.samples.max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeAssignment {
    pub nearest: Vec<usize>,
    pub distances: Vec<f64>,
    pub threshold: f64,
    /// `coverage_curve[i]`: distinct modes hit by the first `i + 1` samples.
    pub coverage_curve: Vec<usize>,
    pub covered: usize,
    pub unassigned: usize,
}

impl ModeAssignment {
    /// Mode index of every assigned sample, in order; unassigned samples are
    /// skipped.
    pub fn classes(&self) -> Vec<usize> {
        self.nearest
            .iter()
            .zip(&self.distances)
            .filter(|(_, d)| **d <= self.threshold)
            .map(|(k, _)| *k)
            .collect()
    }

    pub fn class_counts(&self, n_modes: usize) -> Vec<u64> {
        let mut counts = vec![0; n_modes];
        for k in self.classes() {
            counts[k] += 1;
        }
        counts
    }
}

/// Assigns every sample to its nearest mode. A sample counts toward coverage
/// only within `threshold_multiple · σ_min · √d` of that mode.
pub fn mode_coverage<S: AsRef<[f64]>>(
    samples: &[S],
    mix: &GaussianMixture,
    threshold_multiple: f64,
    sigma_min: f64,
) -> Result<ModeAssignment> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("no samples to assign".into()));
    }
    if !(threshold_multiple > 0.0 && sigma_min > 0.0) {
        return Err(Error::InvalidInput("threshold multiple and sigma_min must be > 0".into()));
    }
    let threshold = threshold_multiple * sigma_min * (mix.dim() as f64).sqrt();
    let mut seen = vec![false; mix.n_modes()];
    let mut covered = 0;
    let mut out = ModeAssignment {
        nearest: Vec::with_capacity(samples.len()),
        distances: Vec::with_capacity(samples.len()),
        threshold,
        coverage_curve: Vec::with_capacity(samples.len()),
        covered: 0,
        unassigned: 0,
    };
    for s in samples {
        let s = s.as_ref();
        if s.len() != mix.dim() {
            return Err(Error::InvalidInput("sample dimension does not match mixture".into()));
        }
        let (k, d) = mix.nearest_mode(s);
        if d <= threshold {
            if !seen[k] {
                seen[k] = true;
                covered += 1;
            }
        } else {
            out.unassigned += 1;
        }
        out.nearest.push(k);
        out.distances.push(d);
        out.coverage_curve.push(covered);
    }
    out.covered = covered;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutocorrMode {
    /// One-hot indicators pooled over classes before normalizing.
    #[default]
    Pooled,
    /// Per-class autocorrelations averaged over classes that vary.
    PerClass,
}

/// Sample autocorrelation of a class sequence at lags `0..=max_lag`,
/// computed on one-hot indicators. Lag 0 is 1; a constant sequence has
/// autocorrelation 1 at every lag.
pub fn class_autocorrelation(classes: &[usize], max_lag: usize, mode: AutocorrMode) -> Result<Vec<f64>> {
    let n = classes.len();
    if n == 0 {
        return Err(Error::EmptyInput("empty class sequence".into()));
    }
    let max_lag = max_lag.min(n - 1);
    let k = classes.iter().max().map_or(0, |m| m + 1);
    let mut freq = vec![0.0; k];
    for &c in classes {
        freq[c] += 1.0 / n as f64;
    }
    match mode {
        AutocorrMode::Pooled => {
            // Σ_k (1[a=k] − p_k)(1[b=k] − p_k) = 1[a=b] − p_a − p_b + Σ p².
            let sum_p2: f64 = freq.iter().map(|p| p * p).sum();
            let cross = |a: usize, b: usize| {
                f64::from(u8::from(a == b)) - freq[a] - freq[b] + sum_p2
            };
            let var: f64 = classes.iter().map(|&c| cross(c, c)).sum();
            if var <= 1e-12 {
                return Ok(vec![1.0; max_lag + 1]);
            }
            Ok((0..=max_lag)
                .map(|lag| {
                    let c: f64 = (0..n - lag).map(|t| cross(classes[t], classes[t + lag])).sum();
                    c / var
                })
                .collect())
        }
        AutocorrMode::PerClass => {
            let mut acc = vec![0.0; max_lag + 1];
            let mut used = 0usize;
            for (class, &p) in freq.iter().enumerate() {
                if p <= 0.0 || p >= 1.0 {
                    continue;
                }
                let a: Vec<f64> = classes
                    .iter()
                    .map(|&c| f64::from(u8::from(c == class)) - p)
                    .collect();
                let var: f64 = a.iter().map(|v| v * v).sum();
                for (lag, slot) in acc.iter_mut().enumerate() {
                    let c: f64 = (0..n - lag).map(|t| a[t] * a[t + lag]).sum();
                    *slot += c / var;
                }
                used += 1;
            }
            if used == 0 {
                return Ok(vec![1.0; max_lag + 1]);
            }
            Ok(acc.into_iter().map(|v| v / used as f64).collect())
        }
    }
}

/// First lag whose autocorrelation magnitude drops below the white-noise band
/// `3/√n`, if any.
pub fn decorrelation_lag(acf: &[f64], n: usize) -> Option<usize> {
    let band = 3.0 / (n as f64).sqrt();
    acf.iter().skip(1).position(|v| v.abs() < band).map(|i| i + 1)
}

/// Pearson chi-square statistic of observed counts against expected
/// proportions, with `K − 1` degrees of freedom.
pub fn chi_square_class_fit(counts: &[u64], weights: &[f64]) -> Result<(f64, usize)> {
    if counts.len() != weights.len() || counts.is_empty() {
        return Err(Error::InvalidInput("counts and weights must be non-empty and equally long".into()));
    }
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(Error::EmptyInput("no counts".into()));
    }
    let total_w: f64 = weights.iter().sum();
    let mut stat = 0.0;
    for (&c, &w) in counts.iter().zip(weights) {
        let expected = n as f64 * w / total_w;
        if expected <= 0.0 {
            return Err(Error::InvalidInput("expected count must be positive".into()));
        }
        stat += (c as f64 - expected).powi(2) / expected;
    }
    Ok((stat, counts.len() - 1))
}

fn moments<S: AsRef<[f64]>>(samples: &[S]) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let d = samples[0].as_ref().len();
    let mut mean = DVector::zeros(d);
    for s in samples {
        let s = s.as_ref();
        if s.len() != d {
            return Err(Error::InvalidInput("samples have inconsistent dimensions".into()));
        }
        mean += DVector::from_column_slice(s);
    }
    mean /= n as f64;
    let mut cov = DMatrix::zeros(d, d);
    for s in samples {
        let c = DVector::from_column_slice(s.as_ref()) - &mean;
        cov.ger(1.0, &c, &c, 1.0);
    }
    cov /= (n - 1) as f64;
    Ok((mean, cov))
}

fn psd_sqrt(m: DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m);
    let vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceMode {
    /// Full covariance up to 64 dimensions, diagonal above.
    #[default]
    Auto,
    Full,
    Diagonal,
}

/// `‖μ_a − μ_b‖² + tr(Σ_a + Σ_b − 2(Σ_a^{1/2} Σ_b Σ_a^{1/2})^{1/2})`.
pub fn frechet_gaussian_distance<S: AsRef<[f64]>>(a: &[S], b: &[S]) -> Result<f64> {
    frechet_gaussian_distance_with(a, b, CovarianceMode::Auto)
}

pub fn frechet_gaussian_distance_with<S: AsRef<[f64]>>(
    a: &[S],
    b: &[S],
    mode: CovarianceMode,
) -> Result<f64> {
    let (mu_a, cov_a) = moments(a)?;
    let (mu_b, cov_b) = moments(b)?;
    if mu_a.len() != mu_b.len() {
        return Err(Error::InvalidInput("sample sets have different dimensions".into()));
    }
    let mean_term = (&mu_a - &mu_b).norm_squared();
    let diagonal = match mode {
        CovarianceMode::Auto => mu_a.len() > 64,
        CovarianceMode::Full => false,
        CovarianceMode::Diagonal => true,
    };
    let cov_term = if diagonal {
        cov_a
            .diagonal()
            .iter()
            .zip(cov_b.diagonal().iter())
            .map(|(x, y)| {
                let (x, y) = (x.max(0.0), y.max(0.0));
                x + y - 2.0 * (x * y).sqrt()
            })
            .sum()
    } else {
        let root_a = psd_sqrt(cov_a.clone());
        let inner = &root_a * &cov_b * &root_a;
        let inner = (&inner + inner.transpose()) * 0.5;
        let cross: f64 = SymmetricEigen::new(inner)
            .eigenvalues
            .iter()
            .map(|v| v.max(0.0).sqrt())
            .sum();
        cov_a.trace() + cov_b.trace() - 2.0 * cross
    };
    Ok((mean_term + cov_term).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gauss(n: usize, d: usize, shift: f64, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| {
                (0..d)
                    .map(|j| {
                        let z: f64 = StandardNormal.sample(rng);
                        z + if j == 0 { shift } else { 0.0 }
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn coverage_of_exact_modes() {
        let mix = GaussianMixture::point_masses(vec![vec![0.0, 0.0], vec![5.0, 0.0], vec![0.0, 5.0]]).unwrap();
        let samples: Vec<Vec<f64>> = mix.means().map(|m| m.to_vec()).collect();
        let a = mode_coverage(&samples, &mix, 3.0, 0.01).unwrap();
        assert_eq!(a.covered, 3);
        assert_eq!(a.unassigned, 0);
        assert_eq!(a.coverage_curve, vec![1, 2, 3]);

        let same = vec![vec![5.0, 0.0]; 4];
        let b = mode_coverage(&same, &mix, 3.0, 0.01).unwrap();
        assert_eq!(b.covered, 1);

        let far = vec![vec![2.5, 2.5]];
        let c = mode_coverage(&far, &mix, 3.0, 0.01).unwrap();
        assert_eq!((c.covered, c.unassigned), (0, 1));
        assert!(mode_coverage::<Vec<f64>>(&[], &mix, 3.0, 0.01).is_err());
    }

    #[test]
    fn constant_sequence_autocorrelation_is_one() {
        for mode in [AutocorrMode::Pooled, AutocorrMode::PerClass] {
            let acf = class_autocorrelation(&[3; 50], 5, mode).unwrap();
            assert_eq!(acf, vec![1.0; 6]);
        }
    }

    #[test]
    fn white_noise_stays_in_band() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 10_000;
        let seq: Vec<usize> = (0..n).map(|_| rng.random_range(0..10)).collect();
        for mode in [AutocorrMode::Pooled, AutocorrMode::PerClass] {
            let acf = class_autocorrelation(&seq, 100, mode).unwrap();
            assert!((acf[0] - 1.0).abs() < 1e-12);
            let band = 3.0 / (n as f64).sqrt();
            let inside = acf[1..].iter().filter(|v| v.abs() < band).count();
            assert!(inside as f64 >= 0.95 * 100.0, "inside={inside}");
        }
    }

    #[test]
    fn pooled_matches_direct_indicator_sum() {
        let seq = [0, 1, 1, 2, 0, 0, 2, 1, 0, 2, 2, 1];
        let acf = class_autocorrelation(&seq, 4, AutocorrMode::Pooled).unwrap();
        let n = seq.len();
        let p: Vec<f64> = (0..3).map(|k| seq.iter().filter(|&&c| c == k).count() as f64 / n as f64).collect();
        let ind = |t: usize, k: usize| f64::from(u8::from(seq[t] == k)) - p[k];
        let var: f64 = (0..n).flat_map(|t| (0..3).map(move |k| (t, k))).map(|(t, k)| ind(t, k).powi(2)).sum();
        for lag in 0..=4 {
            let c: f64 = (0..n - lag)
                .flat_map(|t| (0..3).map(move |k| (t, k)))
                .map(|(t, k)| ind(t, k) * ind(t + lag, k))
                .sum();
            assert!((acf[lag] - c / var).abs() < 1e-12);
        }
    }

    #[test]
    fn chi_square_cases() {
        let (s, dof) = chi_square_class_fit(&[20, 30, 50], &[0.2, 0.3, 0.5]).unwrap();
        assert!(s.abs() < 1e-12);
        assert_eq!(dof, 2);
        let k = 50;
        let n = 10_000u64;
        let mut counts = vec![0; k];
        counts[0] = n;
        let (s, _) = chi_square_class_fit(&counts, &vec![1.0; k]).unwrap();
        assert!((s - n as f64 * (k - 1) as f64).abs() < 1e-6);

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut counts = vec![0u64; k];
        for _ in 0..n {
            counts[rng.random_range(0..k)] += 1;
        }
        let (s, dof) = chi_square_class_fit(&counts, &vec![1.0; k]).unwrap();
        let band = 4.0 * (2.0 * dof as f64).sqrt();
        assert!((s - dof as f64).abs() <= band, "s={s}");
    }

    #[test]
    fn fgd_identity_symmetry_and_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = gauss(500, 4, 0.0, &mut rng);
        let b = gauss(500, 4, 0.5, &mut rng);
        let same = frechet_gaussian_distance(&a, &a).unwrap();
        assert!(same < 1e-8, "same={same}");
        let ab = frechet_gaussian_distance(&a, &b).unwrap();
        let ba = frechet_gaussian_distance(&b, &a).unwrap();
        assert!((ab - ba).abs() < 1e-8);

        let x = gauss(100_000, 3, 0.0, &mut rng);
        let y = gauss(100_000, 3, 2.0, &mut rng);
        let d = frechet_gaussian_distance(&x, &y).unwrap();
        assert!((d - 4.0).abs() < 0.2, "d={d}");
        assert!(matches!(
            frechet_gaussian_distance(&x[..1], &y[..1]),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn fgd_matches_closed_form_for_diagonal_covariances() {
        // N(0, diag(a²)) vs N(0, diag(b²)): Σ (a − b)².
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (sa, sb) = ([1.0, 2.0], [3.0, 0.5]);
        let draw = |s: [f64; 2], rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
            (0..200_000)
                .map(|_| {
                    s.iter()
                        .map(|v| {
                            let z: f64 = StandardNormal.sample(rng);
                            v * z
                        })
                        .collect()
                })
                .collect()
        };
        let a = draw(sa, &mut rng);
        let b = draw(sb, &mut rng);
        let want: f64 = sa.iter().zip(&sb).map(|(x, y)| (x - y) * (x - y)).sum();
        let full = frechet_gaussian_distance_with(&a, &b, CovarianceMode::Full).unwrap();
        let diag = frechet_gaussian_distance_with(&a, &b, CovarianceMode::Diagonal).unwrap();
        assert!((full - want).abs() < 0.1, "full={full}");
        assert!((diag - want).abs() < 0.1, "diag={diag}");
    }

    #[test]
    fn ledger_totals() {
        let mut l = NfeLedger {
            init: 40,
            langevin: 100,
            denoise: 900,
            samples: 100,
        };
        assert_eq!(l.total(), 1040);
        assert!((l.per_sample() - 10.4).abs() < 1e-12);
        assert!((l.per_sample_excluding_init() - 10.0).abs() < 1e-12);
        l.merge(&l.clone());
        assert_eq!(l.samples, 200);
    }
}
