//! Noise-conditional score functions and the noise sources fed to stochastic
//! updates.
//!
//! Every sampler and integrator in the crate is written against
//! [`ScoreModel`], so the analytic mixture oracle, a Gaussian closed form or a
//! caller-supplied closure are interchangeable. One call to
//! [`ScoreModel::score_into`] is one function evaluation (NFE).

use std::sync::atomic::{AtomicU64, Ordering};

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;

pub trait ScoreModel: Sync {
    fn dim(&self) -> usize;

    /// Writes `∇ₓ log p̂(x | σ)` into `out`.
    fn score_into(&self, x: &[f64], sigma: f64, out: &mut [f64]) -> Result<()>;

    fn score(&self, x: &[f64], sigma: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; x.len()];
        self.score_into(x, sigma, &mut out)?;
        Ok(out)
    }
}

impl<S: ScoreModel + ?Sized> ScoreModel for &S {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn score_into(&self, x: &[f64], sigma: f64, out: &mut [f64]) -> Result<()> {
        (**self).score_into(x, sigma, out)
    }
}

/// Adapts a closure `(x, sigma, out) -> Result<()>` into a [`ScoreModel`].
pub struct FnScore<F> {
    dim: usize,
    f: F,
}

impl<F> FnScore<F>
where
    F: Fn(&[f64], f64, &mut [f64]) -> Result<()> + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> ScoreModel for FnScore<F>
where
    F: Fn(&[f64], f64, &mut [f64]) -> Result<()> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn score_into(&self, x: &[f64], sigma: f64, out: &mut [f64]) -> Result<()> {
        (self.f)(x, sigma, out)
    }
}

/// Score field that is identically zero.
#[derive(Debug, Clone, Copy)]
pub struct ZeroScore(pub usize);

impl ScoreModel for ZeroScore {
    fn dim(&self) -> usize {
        self.0
    }

    fn score_into(&self, _x: &[f64], _sigma: f64, out: &mut [f64]) -> Result<()> {
        out.fill(0.0);
        Ok(())
    }
}

/// Instrumenting wrapper that counts every score evaluation, independent of
/// the counters the integrators and samplers keep themselves.
pub struct CountingScore<S> {
    inner: S,
    calls: AtomicU64,
}

impl<S: ScoreModel> CountingScore<S> {
    pub fn new(inner: S) -> Self {
        Self {
            inner,
            calls: AtomicU64::new(0),
        }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.calls.store(0, Ordering::Relaxed);
    }

    pub fn inner(&self) -> &S {
        &self.inner
    }
}

impl<S: ScoreModel> ScoreModel for CountingScore<S> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn score_into(&self, x: &[f64], sigma: f64, out: &mut [f64]) -> Result<()> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.score_into(x, sigma, out)
    }
}

/// Source of i.i.d. standard normal draws.
///
/// Blanket-implemented for every RNG; tests substitute deterministic stubs to
/// audit the exact noise injected by each update.
pub trait NoiseSource {
    fn fill_standard_normal(&mut self, out: &mut [f64]);
}

impl<R: RngCore + ?Sized> NoiseSource for R {
    fn fill_standard_normal(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = StandardNormal.sample(self);
        }
    }
}

/// Noise source that always returns zero.
#[derive(Debug, Default, Clone, Copy)]
pub struct ZeroNoise;

impl NoiseSource for ZeroNoise {
    fn fill_standard_normal(&mut self, out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// Replays a fixed sequence of draws, then zeros once it runs out.
#[derive(Debug, Default, Clone)]
pub struct ScriptedNoise {
    draws: Vec<f64>,
    cursor: usize,
}

impl ScriptedNoise {
    pub fn new(draws: Vec<f64>) -> Self {
        Self { draws, cursor: 0 }
    }

    /// Number of scalar draws requested so far.
    pub fn consumed(&self) -> usize {
        self.cursor
    }
}

impl NoiseSource for ScriptedNoise {
    fn fill_standard_normal(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = self.draws.get(self.cursor).copied().unwrap_or(0.0);
            self.cursor += 1;
        }
    }
}
