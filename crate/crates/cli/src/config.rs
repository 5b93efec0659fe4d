use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Deserialize;
use weakkam_core::{Potential, QuadConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Profile,
    Sweep,
    Flows,
    Separatrix,
    Ndim,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Command::Profile => "profile",
            Command::Sweep => "sweep",
            Command::Flows => "flows",
            Command::Separatrix => "separatrix",
            Command::Ndim => "ndim",
        };
        f.write_str(s)
    }
}

/// Contents of the JSON config file. Every field is optional here; the
/// command decides what it needs.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: Option<Potential>,
    pub command: Option<Command>,
    pub k_list: Option<Vec<u64>>,
    pub action: Option<f64>,
    /// Limit energy `c(Ĩ)`, an alternative to `action`.
    pub energy: Option<f64>,
    #[serde(rename = "R")]
    pub big_r: Option<f64>,
    /// Limit energy `c(R)`, an alternative to `R`.
    #[serde(rename = "R_energy")]
    pub big_r_energy: Option<f64>,
    pub r: Option<f64>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub grid: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub max_subdivisions: Option<usize>,
    pub phi0: Option<f64>,
    pub n: Option<usize>,
    pub extra_actions: Option<Vec<f64>>,
    pub trajectory_k: Option<u64>,
}

/// Command-line overrides. Flags win over the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON config file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Potential as inline JSON, e.g. '{"kind":"pendulum"}'
    #[arg(long)]
    pub potential: Option<String>,
    /// Orders k (comma separated or repeated)
    #[arg(long = "k", value_delimiter = ',')]
    pub k_list: Vec<u64>,
    #[arg(long)]
    pub action: Option<f64>,
    #[arg(long)]
    pub energy: Option<f64>,
    #[arg(long = "R")]
    pub big_r: Option<f64>,
    #[arg(long = "R-energy")]
    pub big_r_energy: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long = "t-end")]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub grid: Option<usize>,
    /// Output directory
    #[arg(long = "out")]
    pub out_dir: Option<PathBuf>,
    #[arg(long = "rel-tol")]
    pub rel_tol: Option<f64>,
    #[arg(long = "abs-tol")]
    pub abs_tol: Option<f64>,
    #[arg(long = "max-subdivisions")]
    pub max_subdivisions: Option<usize>,
    #[arg(long)]
    pub phi0: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long = "extra-actions", value_delimiter = ',', allow_hyphen_values = true)]
    pub extra_actions: Vec<f64>,
    #[arg(long = "trajectory-k")]
    pub trajectory_k: Option<u64>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

fn json_error(source: &str, e: serde_json::Error) -> ConfigError {
    invalid(format!("{source}:{}:{}: {e}", e.line(), e.column()))
}

pub fn parse_config(text: &str, source: &str) -> Result<RunConfig, ConfigError> {
    serde_json::from_str(text).map_err(|e| json_error(source, e))
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text, &path.display().to_string())
}

/// Where the action (or `R`) comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActionSpec {
    Action(f64),
    Energy(f64),
}

/// A validated job.
#[derive(Debug, Clone)]
pub struct Job {
    pub command: Command,
    pub potential: Potential,
    pub k_list: Vec<u64>,
    pub action: Option<ActionSpec>,
    pub big_r: Option<ActionSpec>,
    pub r: f64,
    pub t_end: Option<f64>,
    pub dt: f64,
    pub grid: usize,
    pub out_dir: PathBuf,
    pub quad: QuadConfig,
    pub phi0: f64,
    pub n: usize,
    pub extra_actions: Option<Vec<f64>>,
    pub trajectory_k: Option<u64>,
}

pub const DEFAULT_R_OFFSET: f64 = 0.5;
pub const DEFAULT_DT: f64 = 1e-2;
pub const DEFAULT_GRID: usize = 256;
pub const MIN_GRID: usize = 16;
pub const DEFAULT_N: usize = 3;
pub const SEPARATRIX_MAX_K: u64 = 100_000;

fn pick_action(action: Option<f64>, energy: Option<f64>, name: &str) -> Result<Option<ActionSpec>, ConfigError> {
    match (action, energy) {
        (Some(_), Some(_)) => Err(invalid(format!("give either {name} or its energy, not both"))),
        (Some(a), None) => Ok(Some(ActionSpec::Action(a))),
        (None, Some(c)) => Ok(Some(ActionSpec::Energy(c))),
        (None, None) => Ok(None),
    }
}

fn positive(v: Option<f64>, name: &str) -> Result<(), ConfigError> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(invalid(format!("{name} must be positive, got {x}"))),
        _ => Ok(()),
    }
}

/// Merges `file` and `flags` (flags first) and checks what `command` needs.
pub fn resolve(command: Command, file: RunConfig, flags: Overrides) -> Result<Job, ConfigError> {
    if let Some(c) = file.command {
        if c != command {
            return Err(invalid(format!("config is for `{c}` but `{command}` was requested")));
        }
    }
    let potential = match flags.potential {
        Some(text) => serde_json::from_str(&text).map_err(|e| json_error("--potential", e))?,
        None => file.potential.unwrap_or_else(Potential::pendulum),
    };
    let k_list = if flags.k_list.is_empty() {
        file.k_list.unwrap_or_default()
    } else {
        flags.k_list
    };
    // a flag for one form of a quantity replaces either form from the file
    let (action, energy) = if flags.action.is_some() || flags.energy.is_some() {
        (flags.action, flags.energy)
    } else {
        (file.action, file.energy)
    };
    let (big_r, big_r_energy) = if flags.big_r.is_some() || flags.big_r_energy.is_some() {
        (flags.big_r, flags.big_r_energy)
    } else {
        (file.big_r, file.big_r_energy)
    };
    let extra_actions = if flags.extra_actions.is_empty() {
        file.extra_actions
    } else {
        Some(flags.extra_actions)
    };

    let mut quad = QuadConfig::default();
    if let Some(v) = flags.rel_tol.or(file.rel_tol) {
        quad.rel_tol = v;
    }
    if let Some(v) = flags.abs_tol.or(file.abs_tol) {
        quad.abs_tol = v;
    }
    if let Some(v) = flags.max_subdivisions.or(file.max_subdivisions) {
        quad.max_subdivisions = v;
    }
    quad.validate()
        .map_err(|e| invalid(format!("quadrature settings: {e}")))?;

    let job = Job {
        command,
        potential,
        k_list,
        action: pick_action(action, energy, "action")?,
        big_r: pick_action(big_r, big_r_energy, "R")?,
        r: flags.r.or(file.r).unwrap_or(DEFAULT_R_OFFSET),
        t_end: flags.t_end.or(file.t_end),
        dt: flags.dt.or(file.dt).unwrap_or(DEFAULT_DT),
        grid: flags.grid.or(file.grid).unwrap_or(DEFAULT_GRID),
        out_dir: flags.out_dir.or(file.out_dir).unwrap_or_else(|| PathBuf::from(".")),
        quad,
        phi0: flags.phi0.or(file.phi0).unwrap_or(0.0),
        n: flags.n.or(file.n).unwrap_or(DEFAULT_N),
        extra_actions,
        trajectory_k: flags.trajectory_k.or(file.trajectory_k),
    };
    job.validate()?;
    Ok(job)
}

impl Job {
    fn validate(&self) -> Result<(), ConfigError> {
        if let Some(&bad) = self.k_list.iter().find(|&&k| k == 0) {
            return Err(invalid(format!("k_list entries must be at least 1, got {bad}")));
        }
        if self.grid < MIN_GRID {
            return Err(invalid(format!("grid must be at least {MIN_GRID}, got {}", self.grid)));
        }
        positive(Some(self.r), "r")?;
        positive(Some(self.dt), "dt")?;
        positive(self.t_end, "t_end")?;
        if !self.phi0.is_finite() {
            return Err(invalid("phi0 must be finite"));
        }
        for spec in [self.action, self.big_r].into_iter().flatten() {
            let v = match spec {
                ActionSpec::Action(a) => a,
                ActionSpec::Energy(c) => c,
            };
            if !v.is_finite() {
                return Err(invalid("actions and energies must be finite"));
            }
        }
        if let Some(ActionSpec::Energy(c)) = self.action {
            if c <= self.potential.max() {
                return Err(invalid(format!(
                    "energy {c} does not exceed max f = {}; give an action instead",
                    self.potential.max()
                )));
            }
        }
        if let Some(ActionSpec::Energy(c)) = self.big_r {
            if c <= self.potential.max() {
                return Err(invalid(format!(
                    "R_energy {c} does not exceed max f = {}",
                    self.potential.max()
                )));
            }
        }

        let need_k = |cmd: &str| -> Result<(), ConfigError> {
            if self.k_list.is_empty() {
                Err(invalid(format!("{cmd} needs a non-empty k_list")))
            } else {
                Ok(())
            }
        };
        let single_k = |cmd: &str| -> Result<(), ConfigError> {
            if self.k_list.len() != 1 {
                Err(invalid(format!("{cmd} needs exactly one k, got {}", self.k_list.len())))
            } else {
                Ok(())
            }
        };
        let need_action = |cmd: &str| -> Result<(), ConfigError> {
            if self.action.is_none() {
                Err(invalid(format!("{cmd} needs action or energy")))
            } else {
                Ok(())
            }
        };
        let need_r = |cmd: &str| -> Result<(), ConfigError> {
            if self.big_r.is_none() {
                Err(invalid(format!("{cmd} needs R or R_energy")))
            } else {
                Ok(())
            }
        };
        match self.command {
            Command::Profile => {
                single_k("profile")?;
                need_action("profile")?;
            }
            Command::Sweep => {
                need_k("sweep")?;
                need_action("sweep")?;
                need_r("sweep")?;
            }
            Command::Flows => {
                single_k("flows")?;
                need_action("flows")?;
                if self.t_end.is_none() {
                    return Err(invalid("flows needs t_end"));
                }
            }
            Command::Separatrix => {
                need_k("separatrix")?;
                if let Some(&k) = self.k_list.iter().find(|&&k| k > SEPARATRIX_MAX_K) {
                    return Err(invalid(format!(
                        "separatrix runs are capped at k = {SEPARATRIX_MAX_K}, got {k}"
                    )));
                }
                if let Some(k) = self.trajectory_k {
                    if k == 0 || k > SEPARATRIX_MAX_K {
                        return Err(invalid(format!(
                            "trajectory_k must lie in 1..={SEPARATRIX_MAX_K}, got {k}"
                        )));
                    }
                }
            }
            Command::Ndim => {
                single_k("ndim")?;
                need_action("ndim")?;
                need_r("ndim")?;
                if self.n < 2 {
                    return Err(invalid(format!("n must be at least 2, got {}", self.n)));
                }
                if let Some(extra) = &self.extra_actions {
                    if extra.len() != self.n - 1 {
                        return Err(invalid(format!(
                            "extra_actions needs {} entries, got {}",
                            self.n - 1,
                            extra.len()
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sweep_file() -> RunConfig {
        parse_config(
            r#"{"potential": {"kind": "pendulum"}, "k_list": [100, 1000], "energy": 2.0, "R_energy": 3.0}"#,
            "t",
        )
        .unwrap()
    }

    #[test]
    fn flags_override_file() {
        let flags = Overrides {
            k_list: vec![7],
            action: Some(1.5),
            ..Default::default()
        };
        let job = resolve(Command::Sweep, sweep_file(), flags).unwrap();
        assert_eq!(job.k_list, vec![7]);
        assert_eq!(job.action, Some(ActionSpec::Action(1.5)));
        assert_eq!(job.big_r, Some(ActionSpec::Energy(3.0)));
        assert_eq!(job.r, DEFAULT_R_OFFSET);
    }

    #[test]
    fn parse_error_has_line() {
        let err = parse_config("{\n  \"k_list\": [1,\n  oops]\n}", "cfg.json").unwrap_err();
        assert!(err.0.starts_with("cfg.json:3:"), "{}", err.0);
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(parse_config(r#"{"kk": 1}"#, "t").is_err());
    }

    #[test]
    fn validation_failures() {
        let mut file = sweep_file();
        file.k_list = Some(vec![0]);
        assert!(resolve(Command::Sweep, file, Overrides::default()).is_err());

        let mut file = sweep_file();
        file.grid = Some(8);
        assert!(resolve(Command::Sweep, file, Overrides::default()).is_err());

        // profile wants exactly one k
        assert!(resolve(Command::Profile, sweep_file(), Overrides::default()).is_err());

        let mut file = sweep_file();
        file.action = Some(1.0);
        assert!(resolve(Command::Sweep, file, Overrides::default()).is_err());

        let mut file = sweep_file();
        file.energy = Some(0.5);
        assert!(resolve(Command::Sweep, file, Overrides::default()).is_err());

        let mut file = sweep_file();
        file.command = Some(Command::Flows);
        assert!(resolve(Command::Sweep, file, Overrides::default()).is_err());

        let mut file = sweep_file();
        file.k_list = Some(vec![1_000_000]);
        assert!(resolve(Command::Separatrix, file, Overrides::default()).is_err());
    }

    #[test]
    fn bad_tolerance_rejected() {
        let flags = Overrides {
            rel_tol: Some(-1.0),
            ..Default::default()
        };
        assert!(resolve(Command::Sweep, sweep_file(), flags).is_err());
    }
}
