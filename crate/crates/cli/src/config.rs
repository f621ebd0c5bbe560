//! Run configuration: a line-oriented `section.key = value` format with `#`
//! comments. Unknown keys are rejected, duplicates are errors citing both
//! lines, and every default is made explicit when the configuration is
//! echoed back.

use nsch_core::{BcMode, InitialSpec, Mode, Params, StepControls};
use std::collections::HashMap;
use std::fmt;

#[derive(Debug)]
pub enum ConfigError {
    /// Syntax problem at a line.
    Parse { line: usize, message: String },
    /// A key appeared twice.
    Duplicate { key: String, first: usize, second: usize },
    /// A value failed validation.
    Invalid { key: String, message: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse { line, message } => {
                write!(f, "parse error at line {line}: {message}")
            }
            ConfigError::Duplicate { key, first, second } => {
                write!(f, "duplicate key `{key}` at lines {first} and {second}")
            }
            ConfigError::Invalid { key, message } => {
                write!(f, "invalid value for `{key}`: {message}")
            }
        }
    }
}

impl std::error::Error for ConfigError {}

/// What a `run` invocation executes.
#[derive(Debug, Clone, PartialEq)]
pub enum RunMode {
    Run,
    Scenario(String),
    Sweep { key: String, values: Vec<f64> },
    Convergence,
}

/// Initial-condition block of the configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialConfig {
    pub kind: String,
    pub rho_bar: f64,
    pub u_bar: f64,
    pub chi_bar: f64,
    pub rho_modes: Vec<Mode>,
    pub u_modes: Vec<Mode>,
    pub chi_modes: Vec<Mode>,
    pub amplitude: f64,
    pub seed: u64,
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig {
            kind: "constant".into(),
            rho_bar: 1.0,
            u_bar: 0.0,
            chi_bar: 0.8,
            rho_modes: Vec::new(),
            u_modes: Vec::new(),
            chi_modes: Vec::new(),
            amplitude: 1e-4,
            seed: 42,
        }
    }
}

impl InitialConfig {
    pub fn to_spec(&self) -> Result<InitialSpec, ConfigError> {
        match self.kind.as_str() {
            "constant" => Ok(InitialSpec::Constant {
                rho: self.rho_bar,
                u: self.u_bar,
                chi: self.chi_bar,
            }),
            "perturbed" => Ok(InitialSpec::Perturbed {
                rho: self.rho_bar,
                u: self.u_bar,
                chi: self.chi_bar,
                rho_modes: self.rho_modes.clone(),
                u_modes: self.u_modes.clone(),
                chi_modes: self.chi_modes.clone(),
            }),
            "noise" => Ok(InitialSpec::SeededNoise {
                rho: self.rho_bar,
                u: self.u_bar,
                chi: self.chi_bar,
                amplitude: self.amplitude,
                seed: self.seed,
            }),
            "phase_split" => Ok(InitialSpec::PhaseSplit {
                rho: self.rho_bar,
                u: self.u_bar,
            }),
            other => Err(ConfigError::Invalid {
                key: "initial.kind".into(),
                message: format!(
                    "must be constant, perturbed, noise, or phase_split, got `{other}`"
                ),
            }),
        }
    }
}

/// Fully-resolved run configuration; every field has a documented default.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub length: f64,
    pub cells: usize,
    pub bc: BcMode,
    pub params: Params,
    pub dt_max: f64,
    pub cfl: f64,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub rho_floor: f64,
    pub t_end: f64,
    pub initial: InitialConfig,
    pub directory: String,
    pub record_every: usize,
    pub snapshot_times: Vec<f64>,
    pub mode: RunMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            length: 1.0,
            cells: 256,
            bc: BcMode::Periodic,
            params: Params::default(),
            dt_max: 1e-3,
            cfl: 0.5,
            picard_tol: 1e-10,
            picard_max: 50,
            rho_floor: 1e-6,
            t_end: 1.0,
            initial: InitialConfig::default(),
            directory: "out".into(),
            record_every: 10,
            snapshot_times: Vec::new(),
            mode: RunMode::Run,
        }
    }
}

impl RunConfig {
    pub fn controls(&self) -> StepControls {
        StepControls {
            dt: self.dt_max,
            cfl: self.cfl,
            picard_max: self.picard_max,
            picard_tol: self.picard_tol,
            rho_floor: self.rho_floor,
        }
    }

    /// Canonical echo with every default explicit; re-parsing it reproduces
    /// this configuration exactly.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let modes = |ms: &[Mode]| {
            ms.iter()
                .map(|m| format!("{}:{}:{}", m.index, m.amplitude, m.phase))
                .collect::<Vec<_>>()
                .join(", ")
        };
        s.push_str(&format!("grid.length = {}\n", self.length));
        s.push_str(&format!("grid.cells = {}\n", self.cells));
        s.push_str(&format!(
            "grid.bc = {}\n",
            match self.bc {
                BcMode::Periodic => "periodic",
                BcMode::Mixed => "mixed",
            }
        ));
        s.push_str(&format!("params.nu = {}\n", self.params.nu));
        s.push_str(&format!("params.epsilon = {}\n", self.params.epsilon));
        s.push_str(&format!("params.a = {}\n", self.params.a));
        s.push_str(&format!("params.gamma = {}\n", self.params.gamma));
        s.push_str(&format!("params.lambda = {}\n", self.params.lambda));
        s.push_str(&format!("controls.dt_max = {}\n", self.dt_max));
        s.push_str(&format!("controls.cfl = {}\n", self.cfl));
        s.push_str(&format!("controls.picard_tol = {}\n", self.picard_tol));
        s.push_str(&format!("controls.picard_max = {}\n", self.picard_max));
        s.push_str(&format!("controls.rho_floor = {}\n", self.rho_floor));
        s.push_str(&format!("run.t_end = {}\n", self.t_end));
        s.push_str(&format!("initial.kind = {}\n", self.initial.kind));
        s.push_str(&format!("initial.rho_bar = {}\n", self.initial.rho_bar));
        s.push_str(&format!("initial.u_bar = {}\n", self.initial.u_bar));
        s.push_str(&format!("initial.chi_bar = {}\n", self.initial.chi_bar));
        if !self.initial.rho_modes.is_empty() {
            s.push_str(&format!("initial.rho_modes = {}\n", modes(&self.initial.rho_modes)));
        }
        if !self.initial.u_modes.is_empty() {
            s.push_str(&format!("initial.u_modes = {}\n", modes(&self.initial.u_modes)));
        }
        if !self.initial.chi_modes.is_empty() {
            s.push_str(&format!("initial.chi_modes = {}\n", modes(&self.initial.chi_modes)));
        }
        s.push_str(&format!("initial.amplitude = {}\n", self.initial.amplitude));
        s.push_str(&format!("initial.seed = {}\n", self.initial.seed));
        s.push_str(&format!("output.directory = {}\n", self.directory));
        s.push_str(&format!("output.record_every = {}\n", self.record_every));
        if !self.snapshot_times.is_empty() {
            let times = self
                .snapshot_times
                .iter()
                .map(|t| t.to_string())
                .collect::<Vec<_>>()
                .join(", ");
            s.push_str(&format!("output.snapshot_times = {times}\n"));
        }
        match &self.mode {
            RunMode::Run => s.push_str("mode.kind = run\n"),
            RunMode::Scenario(name) => {
                s.push_str("mode.kind = scenario\n");
                s.push_str(&format!("mode.scenario = {name}\n"));
            }
            RunMode::Sweep { key, values } => {
                s.push_str("mode.kind = sweep\n");
                s.push_str(&format!("mode.sweep_key = {key}\n"));
                let vals =
                    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ");
                s.push_str(&format!("mode.sweep_values = {vals}\n"));
            }
            RunMode::Convergence => s.push_str("mode.kind = convergence\n"),
        }
        s
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigError> {
    v.parse().map_err(|_| ConfigError::Invalid {
        key: key.into(),
        message: format!("expected a number, got `{v}`"),
    })
}

fn parse_usize(key: &str, v: &str) -> Result<usize, ConfigError> {
    v.parse().map_err(|_| ConfigError::Invalid {
        key: key.into(),
        message: format!("expected a non-negative integer, got `{v}`"),
    })
}

fn parse_modes(key: &str, v: &str) -> Result<Vec<Mode>, ConfigError> {
    let mut out = Vec::new();
    for part in v.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let fields: Vec<&str> = part.split(':').collect();
        if fields.len() != 3 {
            return Err(ConfigError::Invalid {
                key: key.into(),
                message: format!("mode entries are index:amplitude:phase, got `{part}`"),
            });
        }
        let index = parse_usize(key, fields[0].trim())?;
        let amplitude = parse_f64(key, fields[1].trim())?;
        let phase = parse_f64(key, fields[2].trim())?;
        out.push(Mode::new(index, amplitude, phase));
    }
    Ok(out)
}

fn parse_f64_list(key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    v.split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| parse_f64(key, s))
        .collect()
}

/// Parse a configuration document and validate every field.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut entries: Vec<(usize, String, String)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
            line: lineno,
            message: format!("expected `section.key = value`, got `{line}`"),
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if !key.contains('.') {
            return Err(ConfigError::Parse {
                line: lineno,
                message: format!("key `{key}` is missing its section prefix"),
            });
        }
        if let Some(&first) = seen.get(&key) {
            return Err(ConfigError::Duplicate { key, first, second: lineno });
        }
        seen.insert(key.clone(), lineno);
        entries.push((lineno, key, value));
    }

    let mut cfg = RunConfig::default();
    let mut mode_kind = String::from("run");
    let mut sweep_key = String::new();
    let mut sweep_values: Vec<f64> = Vec::new();
    let mut scenario_name = String::new();

    for (lineno, key, v) in &entries {
        match key.as_str() {
            "grid.length" => cfg.length = parse_f64(key, v)?,
            "grid.cells" => cfg.cells = parse_usize(key, v)?,
            "grid.bc" => {
                cfg.bc = match v.as_str() {
                    "periodic" => BcMode::Periodic,
                    "mixed" => BcMode::Mixed,
                    other => {
                        return Err(ConfigError::Invalid {
                            key: key.clone(),
                            message: format!("must be periodic or mixed, got `{other}`"),
                        })
                    }
                }
            }
            "params.nu" => cfg.params.nu = parse_f64(key, v)?,
            "params.epsilon" => cfg.params.epsilon = parse_f64(key, v)?,
            "params.a" => cfg.params.a = parse_f64(key, v)?,
            "params.gamma" => cfg.params.gamma = parse_f64(key, v)?,
            "params.lambda" => cfg.params.lambda = parse_f64(key, v)?,
            "controls.dt_max" => cfg.dt_max = parse_f64(key, v)?,
            "controls.cfl" => cfg.cfl = parse_f64(key, v)?,
            "controls.picard_tol" => cfg.picard_tol = parse_f64(key, v)?,
            "controls.picard_max" => cfg.picard_max = parse_usize(key, v)?,
            "controls.rho_floor" => cfg.rho_floor = parse_f64(key, v)?,
            "run.t_end" => cfg.t_end = parse_f64(key, v)?,
            "initial.kind" => cfg.initial.kind = v.clone(),
            "initial.rho_bar" => cfg.initial.rho_bar = parse_f64(key, v)?,
            "initial.u_bar" => cfg.initial.u_bar = parse_f64(key, v)?,
            "initial.chi_bar" => cfg.initial.chi_bar = parse_f64(key, v)?,
            "initial.rho_modes" => cfg.initial.rho_modes = parse_modes(key, v)?,
            "initial.u_modes" => cfg.initial.u_modes = parse_modes(key, v)?,
            "initial.chi_modes" => cfg.initial.chi_modes = parse_modes(key, v)?,
            "initial.amplitude" => cfg.initial.amplitude = parse_f64(key, v)?,
            "initial.seed" => {
                cfg.initial.seed = v.parse().map_err(|_| ConfigError::Invalid {
                    key: key.clone(),
                    message: format!("expected an unsigned integer, got `{v}`"),
                })?
            }
            "output.directory" => cfg.directory = v.clone(),
            "output.record_every" => cfg.record_every = parse_usize(key, v)?,
            "output.snapshot_times" => cfg.snapshot_times = parse_f64_list(key, v)?,
            "mode.kind" => mode_kind = v.clone(),
            "mode.scenario" => scenario_name = v.clone(),
            "mode.sweep_key" => sweep_key = v.clone(),
            "mode.sweep_values" => sweep_values = parse_f64_list(key, v)?,
            other => {
                return Err(ConfigError::Parse {
                    line: *lineno,
                    message: format!("unknown key `{other}`"),
                })
            }
        }
    }

    cfg.mode = match mode_kind.as_str() {
        "run" => RunMode::Run,
        "scenario" => RunMode::Scenario(scenario_name),
        "sweep" => RunMode::Sweep { key: sweep_key, values: sweep_values },
        "convergence" => RunMode::Convergence,
        other => {
            return Err(ConfigError::Invalid {
                key: "mode.kind".into(),
                message: format!(
                    "must be run, scenario, sweep, or convergence, got `{other}`"
                ),
            })
        }
    };

    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig) -> Result<(), ConfigError> {
    let bad = |key: &str, message: String| {
        Err(ConfigError::Invalid { key: key.into(), message })
    };
    if !(cfg.length > 0.0) {
        return bad("grid.length", "must be > 0".into());
    }
    if cfg.cells < 8 {
        return bad("grid.cells", format!("must be >= 8, got {}", cfg.cells));
    }
    if !(cfg.params.nu > 0.0) {
        return bad("params.nu", "must be > 0".into());
    }
    if !(cfg.params.epsilon > 0.0) {
        return bad("params.epsilon", "must be > 0".into());
    }
    if !(cfg.params.a > 0.0) {
        return bad("params.a", "must be > 0".into());
    }
    if !(cfg.params.gamma >= 1.0) {
        return bad("params.gamma", format!("gamma must be >= 1, got {}", cfg.params.gamma));
    }
    if !(cfg.params.lambda > 0.0 && cfg.params.lambda < 1.0) {
        return bad("params.lambda", "must lie in (0,1)".into());
    }
    if !(cfg.dt_max > 0.0) {
        return bad("controls.dt_max", "must be > 0".into());
    }
    if !(cfg.cfl > 0.0 && cfg.cfl <= 1.0) {
        return bad("controls.cfl", "must lie in (0,1]".into());
    }
    if !(cfg.picard_tol > 0.0) {
        return bad("controls.picard_tol", "must be > 0".into());
    }
    if cfg.picard_max == 0 {
        return bad("controls.picard_max", "must be >= 1".into());
    }
    if !(cfg.rho_floor > 0.0) {
        return bad("controls.rho_floor", "must be > 0".into());
    }
    if !(cfg.t_end >= 0.0) {
        return bad("run.t_end", "must be >= 0".into());
    }
    if cfg.record_every == 0 {
        return bad("output.record_every", "must be >= 1".into());
    }
    cfg.initial.to_spec().map(|_| ())
}
