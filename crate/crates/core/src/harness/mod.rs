//! Instance generation, experiment orchestration and result files.

mod experiment;
mod generate;
mod io;

pub use experiment::{
    ratio, read_config, run_check, run_experiment, Check, ExperimentConfig, ExperimentOutput,
    Problem, Seeds, Summary, Tolerances, DEFAULT_SMOOTH_LAMBDA, DEFAULT_SMOOTH_MU,
};
pub use generate::{generate, Family, Generated, GeneratorSpec, MAX_GENERATED_ENTRIES};
pub use io::{cell, read_bandit_instance, read_lb_instance, write_atomic, write_json, CsvTable};
