//! Resource theory of contextuality: scenarios, boxes, noncontextual wirings
//! and the relative entropy of contextuality.
//!
//! The crate is `no_std` with `alloc`. Indices of buttons and lights are
//! 0-based everywhere.

#![cfg_attr(not(any(feature = "std", test)), no_std)]
#![allow(clippy::result_large_err, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod behavior;
pub mod bits;
pub mod cycle;
pub mod lp;
pub mod measures;
pub mod ncpolytope;
pub mod report;
pub mod sample;
pub mod scenario;
pub mod wiring;

pub use behavior::{behaviors_close, Behavior, BehaviorError, BlackBox, NdReport};
pub use bits::{Bits, BitsError};
pub use ncpolytope::{
    enumerate_strategies, is_noncontextual, mix, strategy_behavior, DeterministicStrategy, NcBox,
    NcCertificate, NcError, NcVerdict,
};
pub use report::{Rule, ValidationReport, Violation};
pub use scenario::{dominates, Scenario, ScenarioError};
