//! Expectation-maximization training of modification parameters.
//!
//! Training treats each phrase's structure as hidden: the E-step computes the
//! posterior over the phrase's bracketings, the M-step renormalizes expected
//! pair counts. Large corpora are split into chunks that are trained
//! independently, smoothed, and merged by averaging.

mod chunks;
mod params;
mod train;

pub use chunks::{split_corpus, Chunk, CorpusChunks};
pub use params::{
    merge, smooth, ParamTable, StructProbs, PAIR_MASS_TOLERANCE, STRUCT_MASS_TOLERANCE,
};
pub use train::{
    em_step, expected_counts, initial_params, log_likelihood, posterior, train_chunk,
    train_from, ExpectedCounts, TrainOutcome,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How pair probabilities are initialized before the first E-step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMode {
    /// Seeded uniform(0.5, 1.5) draw per co-occurring pair, normalized.
    #[default]
    Random,
    /// Equal mass on every co-occurring pair.
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Stop once the total log-likelihood gain of an update is below this.
    pub likelihood_threshold: f64,
    pub max_iterations: usize,
    pub chunk_size_bytes: usize,
    /// Fraction of seen pairs dropped when smoothing.
    pub drop_fraction: f64,
    /// Keep structure probabilities fixed and uniform.
    pub uniform_structures: bool,
    pub init: InitMode,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            likelihood_threshold: 2.0,
            max_iterations: 100,
            chunk_size_bytes: 4_000_000,
            drop_fraction: 0.5,
            uniform_structures: true,
            init: InitMode::Random,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.likelihood_threshold.is_nan() || self.likelihood_threshold <= 0.0 {
            return Err(Error::Config("likelihood threshold must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.drop_fraction) {
            return Err(Error::Config("drop fraction must be in [0, 1)".into()));
        }
        if self.chunk_size_bytes == 0 {
            return Err(Error::Config("chunk size must be positive".into()));
        }
        Ok(())
    }
}
