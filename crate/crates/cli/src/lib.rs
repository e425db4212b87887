//! Scenario runner for the coupled Kerr resonator simulator: JSON configs,
//! built-in presets and CSV/JSON emission with a checksummed manifest.

pub mod config;
pub mod error;
pub mod format;
pub mod presets;
pub mod run;

pub use config::{parse_config, parse_scenarios, Resolved, ScenarioConfig, Selector};
pub use error::{CliError, CliResult};
pub use run::{run_all, run_scenario, verify_manifest, RunManifest};

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "BLOCKADE_THREADS";

/// Size the global thread pool from [`THREADS_ENV`] when it is set.
pub fn init_threads() -> CliResult<Option<usize>> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV}: expected a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("{THREADS_ENV}: {e}")))?;
    Ok(Some(n))
}
