//! Online generalized load balancing and vector scheduling.
//!
//! Each round a job arrives as a non-negative matrix whose column `j` is the
//! load vector added if option `j` is chosen. The greedy algorithm picks the
//! option minimizing the approximator at the resulting load.

mod brute;
mod greedy;
mod instance;

pub use brute::{brute_force_opt, DEFAULT_BRUTE_CAP};
pub use greedy::{
    greedy_step, run_greedy, run_vector_scheduling, LbRunConfig, OptMode, PhaseRecord,
    RoundRecord, RunTrace, DEFAULT_THETA,
};
pub use instance::{JobMatrix, LbInstance};
