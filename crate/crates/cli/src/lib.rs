//! Scenario runner behind the `warpbench` binary.
//!
//! Exit codes: 0 pass, 2 hypothesis not met, 3 assertion failed, 4 config
//! error (including I/O errors on the config or output directory).

pub mod config;
pub mod report;
pub mod scenario;

pub use config::{Command, ConfigFile, Overrides, Scenario};
pub use report::Report;
pub use scenario::run_scenario;

/// Runs `s` on a pool of `threads` workers.
pub fn run_with_threads(s: &Scenario, threads: usize) -> Report {
    match rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build() {
        Ok(pool) => pool.install(|| run_scenario(s)),
        Err(_) => run_scenario(s),
    }
}
