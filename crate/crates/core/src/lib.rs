//! Budget-constrained auction mechanisms and executable property checks.
//!
//! * [`clinching`]: adaptive clinching auction for one divisible item.
//! * [`hetero`]: heterogeneous items with qualities, reduced to a single item.
//! * [`bridge`]: divisible outcomes to and from lotteries over indivisible outcomes.
//! * [`checkers`]: IR, NPT, Pareto optimality, monotonicity, payment identity, IC.
//! * [`demos`]: certificate arithmetic for the two impossibility constructions.

pub mod bridge;
pub mod checkers;
pub mod clinching;
pub mod demos;
pub mod error;
pub mod hetero;
pub mod model;

pub use error::{AuctionError, Result};
pub use model::{
    aggregate_quality, utility, validate_allocation, AgentType, Allocation, AllocationViolation,
    MultiDimInstance, Outcome, SingleDimInstance, SingleItemInstance, Utility, Valuation, Valuations,
};
