//! Bandits with vector costs and bandits with knapsacks over a monotone norm.

mod benchmark;
mod exp3;
mod instance;
mod run;

pub use benchmark::{
    benchmark_fixed_bvc, benchmark_fixed_bwk, project_simplex, Benchmark, GRID_MAX_ACTIONS,
    GRID_RESOLUTION, SUBGRADIENT_ITERS,
};
pub use exp3::{exp3_sample, exp3_update, Exp3State};
pub use instance::{BanditInstance, BanditRound};
pub use run::{bvc_run, bwk_run, BanditTrace, BwkOptions};
