//! Numerical core for the AWDR optimization lab.
//!
//! Everything in this crate is a pure function of its inputs or of
//! explicitly owned state, and builds without `std` (an allocator is
//! required). The companion `awdr-lab` crate adds file formats, reports and
//! the command-line front end.
//!
//! * [`optim`]: RMSProp, AdamW and the linearly scheduled blend of the two.
//! * [`detloss`]: IoU, CIoU, distribution focal loss, BCE and the weighted
//!   detection objective, with analytic gradients and a finite-difference
//!   checker.
//! * [`netblocks`]: reference math for convolution, pooling, attention,
//!   feature fusion, the decoupled head and compound scaling.
//! * [`metrics`]: binary classification scores.
//! * [`harness`]: deterministic benchmarks and toy training runs.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod detloss;
pub mod error;
pub mod harness;
pub mod math;
pub mod metrics;
pub mod netblocks;
pub mod optim;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::Tensor;
