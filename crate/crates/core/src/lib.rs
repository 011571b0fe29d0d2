//! Denoising Markov chain Monte Carlo on analytic Gaussian-mixture targets.
//!
//! The crate pairs a closed-form mixture score oracle with the
//! variance-exploding diffusion machinery, six reverse-S/ODE integrators,
//! Langevin baselines and the Denoising Langevin Gibbs sampler, a trainable
//! noise-level classifier, sample diagnostics and an experiment harness.

pub mod classifier;
pub mod diagnostics;
mod error;
pub mod harness;
pub mod integrators;
pub mod mog;
pub mod rng;
pub mod samplers;
pub mod score;
pub mod ve;

pub use classifier::{ExactPosterior, NoiseClassifier, NoiseLevelPredictor};
pub use diagnostics::NfeLedger;
pub use error::{Error, Result};
pub use integrators::{IntegratorConfig, IntegratorName, IntegratorResult, IntegratorRun};
pub use mog::{BenchmarkMixture, GaussianMixture, Mode, MixtureFile};
pub use samplers::{ChainState, DlgConfig, SamplerOutput, SigmaUpdateMode, StepSize};
pub use score::{CountingScore, NoiseSource, ScoreModel};
pub use ve::{NoiseGrid, ScheduleSpec, VeSchedule};
