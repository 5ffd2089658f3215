//! Lambda tuning, intrinsic hypothesis tests, corpus attributes and
//! alpha-shifting corpus synthesis.

pub mod attributes;
pub mod gold;
pub mod stats;
pub mod synth;
pub mod tune;

pub use attributes::{alpha_b1, compute_attributes, AttributeReport};
pub use gold::{build_gold_pairs, test_h1, GoldPairs, H1Report};
pub use stats::{paired_ttest, TTestResult};
pub use synth::{synthesize_alpha, synthesize_alpha_with, Direction, SynthesisConfig, SynthesisResult};
pub use tune::{default_grid, tune_lambda, TuneResult};
