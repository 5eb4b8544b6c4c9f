//! Domain adaptation under covariate shift by rejection sampling.
//!
//! Given labeled draws from a source distribution and unlabeled draws from
//! a target distribution on the integers, the pipeline estimates both
//! distributions, rejection-samples source data so it looks like target
//! data, and runs empirical risk minimization on what survives. The crate
//! also checks the error-transfer bounds the method rests on, in exact
//! rational arithmetic, and simulates a lower-bound instance where learning
//! without shift needs a number of samples linear in the support size.

pub mod distributions;
pub mod error;
pub mod estimation;
pub mod exact;
pub mod hardness;
pub mod harness;
pub mod hypotheses;
pub mod oracles;
pub mod rejection;
pub mod seeding;

pub use distributions::{l1_distance, weight_ratio, DiscretePmf, Point};
pub use error::{Error, Result};
pub use hypotheses::{Hypothesis, HypothesisClass};
pub use oracles::SampleOracle;
pub use rejection::{run_da_pipeline, DaRunReport, PipelineParams};
