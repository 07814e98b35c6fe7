//! Deterministic experiment driver: analytic test functions, a synthetic
//! two-class dataset, a hand-differentiated MLP, and optimizer comparisons.
//!
//! Every output is a pure function of its arguments and seed.

mod bench;
mod gradcheck;
mod mlp;
mod synthetic;
mod testfns;
mod train;

pub use bench::{bench_function, default_start, tune_lr, Trajectory, ROSENBROCK_LR_GRID};
pub use gradcheck::{run_grad_check, GradCheckReport, GradCheckTarget, GRAD_CHECK_TOLERANCE};
pub use mlp::{Mlp, HIDDEN_UNITS};
pub use synthetic::{make_synthetic, Dataset, SyntheticSpec};
pub use testfns::TestFunction;
pub use train::{train_toy, EpochRecord, TrainHistory, TrainSummary, TARGET_ACCURACY};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent stream for `purpose` derived from a run seed.
pub(crate) fn rng_for(seed: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose);
    rng
}
