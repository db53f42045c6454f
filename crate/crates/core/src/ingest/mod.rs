//! Model files, distribution files and benchmark generators.

pub mod bench;
mod parse;
mod write;

pub use bench::{generate, generate_named, BenchName, Benchmark, BenchmarkSpec, REWARD_NAME};
pub use parse::{
    parse_dtmc, parse_dtmc_str, parse_labels, parse_mdp, parse_mdp_str, ModelFiles, ParseOptions,
    INIT_LABEL,
};
pub use write::{
    action_rewards_file, distribution_csv, distribution_json, dtmc_transitions, labels_file,
    mdp_transitions, parse_distribution_csv, read_distribution, state_rewards_file, write_distribution,
    write_dtmc, write_mdp, DistFormat, DistTable,
};
