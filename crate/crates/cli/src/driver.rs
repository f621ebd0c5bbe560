//! Orchestration of runs, scenario executions, parameter sweeps, and the
//! convergence ladder, with all file output funneled through one place.

use crate::config::{ConfigError, RunConfig, RunMode};
use crate::output;
use nsch_core::scenarios::{run_scenario, scenario_by_name, scenario_convergence};
use nsch_core::{
    averages, make_initial, run, DiagnosticsRecord, Grid, ScenarioOutcome, Sink, State,
};
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub enum DriverError {
    /// Usage or configuration problem (exit code 2).
    Config(String),
    /// Scientific failure: solver abort or failed assertion (exit code 1).
    Scientific(String),
}

impl fmt::Display for DriverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DriverError::Config(m) => write!(f, "configuration error: {m}"),
            DriverError::Scientific(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for DriverError {}

impl From<ConfigError> for DriverError {
    fn from(e: ConfigError) -> Self {
        DriverError::Config(e.to_string())
    }
}

pub fn exit_code(e: &DriverError) -> i32 {
    match e {
        DriverError::Config(_) => 2,
        DriverError::Scientific(_) => 1,
    }
}

fn io_err(e: std::io::Error) -> DriverError {
    DriverError::Scientific(format!("i/o failure: {e}"))
}

/// Execute one simulation described by `cfg`, writing the echoed config,
/// the diagnostics time series, and any requested snapshots into
/// `cfg.directory`. Returns the directory written.
pub fn execute_single_run(cfg: &RunConfig) -> Result<PathBuf, DriverError> {
    let dir = PathBuf::from(&cfg.directory);
    std::fs::create_dir_all(&dir).map_err(io_err)?;
    std::fs::write(dir.join("config.echo"), cfg.render()).map_err(io_err)?;

    let grid = Grid::new(cfg.length, cfg.cells, cfg.bc)
        .map_err(|e| DriverError::Config(e.to_string()))?;
    let spec = cfg.initial.to_spec()?;
    let state0 =
        make_initial(&grid, &spec).map_err(|e| DriverError::Config(e.to_string()))?;
    averages(&state0, &grid).map_err(|e| DriverError::Config(e.to_string()))?;

    let mut records: Vec<DiagnosticsRecord> = Vec::new();
    let mut pending: Vec<f64> = cfg.snapshot_times.clone();
    pending.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut snapshot_idx = 0usize;
    let mut snapshot_err: Option<std::io::Error> = None;
    {
        let params = cfg.params;
        let grid_ref = &grid;
        let dir_ref = &dir;
        let records_ref = &mut records;
        let pending_ref = &mut pending;
        let idx_ref = &mut snapshot_idx;
        let err_ref = &mut snapshot_err;
        let mut sinks: Vec<Sink> = vec![Box::new(move |state: &State, rec| {
            records_ref.push(*rec);
            while let Some(&t) = pending_ref.first() {
                if state.time + 1e-15 < t {
                    break;
                }
                pending_ref.remove(0);
                let path = dir_ref.join(format!("snapshot_{}.csv", *idx_ref));
                if let Err(e) = output::write_snapshot(state, &params, grid_ref, &path) {
                    err_ref.get_or_insert(e);
                }
                *idx_ref += 1;
            }
        })];

        let result = run(
            &state0,
            &cfg.params,
            &grid,
            &cfg.controls(),
            cfg.t_end,
            cfg.record_every,
            &mut sinks,
        );
        drop(sinks);

        match result {
            Ok(_) => {}
            Err(failure) => {
                let post_mortem = dir.join("abort_snapshot.csv");
                let _ = output::write_snapshot(&failure.snapshot, &cfg.params, &grid, &post_mortem);
                return Err(DriverError::Scientific(format!(
                    "run aborted: {} (post-mortem snapshot: {})",
                    failure.error,
                    post_mortem.display()
                )));
            }
        }

        output::write_timeseries(&records, &dir.join("timeseries.csv")).map_err(io_err)?;
    }
    if let Some(e) = snapshot_err {
        return Err(io_err(e));
    }
    Ok(dir)
}

/// Execute a named scenario; print one line per assertion and write the
/// summary file into `out_dir` when given. Errors with `Scientific` when an
/// assertion fails.
pub fn execute_scenario(
    name: &str,
    out_dir: Option<&Path>,
) -> Result<ScenarioOutcome, DriverError> {
    let scenario = scenario_by_name(name).ok_or_else(|| {
        DriverError::Config(format!(
            "unknown scenario `{name}`; available: {}",
            nsch_core::SCENARIO_NAMES.join(", ")
        ))
    })?;
    let outcome =
        run_scenario(&scenario).map_err(|e| DriverError::Scientific(e.to_string()))?;
    print!("{}", output::render_summary(&outcome));
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(io_err)?;
        output::write_summary(&outcome, &dir.join(format!("{name}.summary"))).map_err(io_err)?;
    }
    if !outcome.passed() {
        return Err(DriverError::Scientific(format!(
            "scenario `{name}`: {} of {} assertions failed",
            outcome.assertions.iter().filter(|a| !a.pass).count(),
            outcome.assertions.len()
        )));
    }
    Ok(outcome)
}

/// Apply one `section.key = value` override used by sweeps.
fn apply_override(cfg: &mut RunConfig, key: &str, value: f64) -> Result<(), DriverError> {
    match key {
        "params.nu" => cfg.params.nu = value,
        "params.epsilon" => cfg.params.epsilon = value,
        "params.a" => cfg.params.a = value,
        "params.gamma" => cfg.params.gamma = value,
        "params.lambda" => cfg.params.lambda = value,
        "controls.dt_max" => cfg.dt_max = value,
        "controls.cfl" => cfg.cfl = value,
        "initial.chi_bar" => cfg.initial.chi_bar = value,
        "initial.amplitude" => cfg.initial.amplitude = value,
        "run.t_end" => cfg.t_end = value,
        other => {
            return Err(DriverError::Config(format!(
                "sweep key `{other}` is not sweepable"
            )))
        }
    }
    Ok(())
}

/// Worker-pool size: the optional environment variable `NSCH_WORKERS`;
/// absence means one worker.
pub fn worker_count() -> usize {
    std::env::var("NSCH_WORKERS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
}

/// Fan a configuration out over a parameter list; each run writes to its own
/// subdirectory. Runs execute on a small worker pool with no shared state.
pub fn execute_sweep(cfg: &RunConfig) -> Result<Vec<PathBuf>, DriverError> {
    let (key, values) = match &cfg.mode {
        RunMode::Sweep { key, values } if !values.is_empty() => (key.clone(), values.clone()),
        RunMode::Sweep { .. } => {
            return Err(DriverError::Config(
                "sweep mode needs mode.sweep_key and non-empty mode.sweep_values".into(),
            ))
        }
        _ => {
            return Err(DriverError::Config(
                "config must set mode.kind = sweep for the sweep subcommand".into(),
            ))
        }
    };

    let mut variants = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        let mut sub = cfg.clone();
        apply_override(&mut sub, &key, v)?;
        sub.mode = RunMode::Run;
        sub.directory = format!("{}/sweep_{i}_{}", cfg.directory, key.replace('.', "_"));
        variants.push(sub);
    }

    let workers = worker_count().min(variants.len());
    let mut results: Vec<Option<Result<PathBuf, DriverError>>> =
        (0..variants.len()).map(|_| None).collect();
    if workers <= 1 {
        for (slot, sub) in results.iter_mut().zip(&variants) {
            *slot = Some(execute_single_run(sub));
        }
    } else {
        let next = std::sync::atomic::AtomicUsize::new(0);
        let slots = std::sync::Mutex::new(&mut results);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                    if i >= variants.len() {
                        break;
                    }
                    let r = execute_single_run(&variants[i]);
                    slots.lock().unwrap()[i] = Some(r);
                });
            }
        });
    }

    results
        .into_iter()
        .map(|r| r.expect("every sweep slot filled"))
        .collect()
}

/// Run the mesh-refinement ladder and print the observed orders.
pub fn execute_convergence() -> Result<ScenarioOutcome, DriverError> {
    let scenario = scenario_convergence();
    let outcome =
        run_scenario(&scenario).map_err(|e| DriverError::Scientific(e.to_string()))?;
    print!("{}", output::render_summary(&outcome));
    if !outcome.passed() {
        return Err(DriverError::Scientific(
            "convergence ladder below the required order".into(),
        ));
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn small_run_config(dir: &Path) -> RunConfig {
        let text = format!(
            "grid.cells = 64\nrun.t_end = 0.01\ninitial.kind = perturbed\n\
             initial.chi_bar = 0.8\ninitial.chi_modes = 1:0.01:0\n\
             output.directory = {}\noutput.record_every = 5\n\
             output.snapshot_times = 0.005\n",
            dir.display()
        );
        parse_config(&text).unwrap()
    }

    #[test]
    fn single_run_writes_expected_files() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = small_run_config(&tmp.path().join("out"));
        let dir = execute_single_run(&cfg).unwrap();
        assert!(dir.join("config.echo").exists());
        assert!(dir.join("timeseries.csv").exists());
        assert!(dir.join("snapshot_0.csv").exists());
        let ts = std::fs::read_to_string(dir.join("timeseries.csv")).unwrap();
        assert!(ts.lines().count() > 2);
        // echoed config re-parses to the same configuration
        let echoed = std::fs::read_to_string(dir.join("config.echo")).unwrap();
        assert_eq!(parse_config(&echoed).unwrap(), cfg);
    }

    #[test]
    fn repeated_runs_are_byte_identical() {
        let tmp = tempfile::tempdir().unwrap();
        let mut bytes = Vec::new();
        for sub in ["a", "b"] {
            let mut cfg = small_run_config(&tmp.path().join(sub));
            cfg.initial.kind = "noise".into();
            cfg.initial.chi_bar = 0.0;
            execute_single_run(&cfg).unwrap();
            bytes.push(
                std::fs::read(tmp.path().join(sub).join("timeseries.csv")).unwrap(),
            );
        }
        assert_eq!(bytes[0], bytes[1]);
    }

    #[test]
    fn sweep_fans_out() {
        let tmp = tempfile::tempdir().unwrap();
        let text = format!(
            "grid.cells = 64\nrun.t_end = 0.002\n\
             output.directory = {}\nmode.kind = sweep\n\
             mode.sweep_key = params.epsilon\nmode.sweep_values = 0.1, 0.2\n",
            tmp.path().join("sweep").display()
        );
        let cfg = parse_config(&text).unwrap();
        let dirs = execute_sweep(&cfg).unwrap();
        assert_eq!(dirs.len(), 2);
        for d in &dirs {
            assert!(d.join("timeseries.csv").exists());
        }
        let e0 = std::fs::read_to_string(dirs[0].join("config.echo")).unwrap();
        assert!(e0.contains("params.epsilon = 0.1"));
        let e1 = std::fs::read_to_string(dirs[1].join("config.echo")).unwrap();
        assert!(e1.contains("params.epsilon = 0.2"));
    }

    #[test]
    fn unknown_scenario_is_config_error() {
        let err = execute_scenario("nope", None).unwrap_err();
        assert_eq!(exit_code(&err), 2);
    }

    #[test]
    fn vacuum_abort_writes_post_mortem() {
        let tmp = tempfile::tempdir().unwrap();
        let text = format!(
            "grid.cells = 64\nrun.t_end = 1\ncontrols.rho_floor = 0.9999\n\
             initial.kind = perturbed\ninitial.rho_modes = 1:0.5:0\n\
             initial.u_modes = 1:1.0:0\ninitial.chi_bar = 0.8\n\
             output.directory = {}\n",
            tmp.path().join("boom").display()
        );
        let cfg = parse_config(&text).unwrap();
        let err = execute_single_run(&cfg).unwrap_err();
        assert_eq!(exit_code(&err), 1, "expected scientific failure, got {err}");
        assert!(tmp.path().join("boom").join("abort_snapshot.csv").exists());
    }
}
