//! Run configuration: built-in defaults, overridden by a flat TOML file,
//! overridden by command-line flags.
//!
//! Every setting has one dotted key (`pressure.gamma`, `evolve.t_final`,
//! ...). The file may spell keys flat (`"pressure.gamma" = 1.4`) or as
//! tables (`[pressure]` then `gamma = 1.4`); both flatten to the same key.
//! Command-line flags are turned into the same key/value pairs and applied
//! last.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use boundstab_core::evans::EvansOptions;
use boundstab_core::spectrum::SpectrumOptions;
use boundstab_core::steady::{FlowParams, SteadyOptions};
use boundstab_core::thermo::PressureLaw;
use toml::Value;

use crate::CliError;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "BOUNDSTAB_OUT_DIR";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub nu: Option<f64>,
    pub rho0: Option<f64>,
    pub u0: Option<f64>,
    pub u1: Option<f64>,
    pub pressure_kind: String,
    pub kappa: f64,
    pub gamma: f64,
    pub steady_cells: usize,
    pub tol_bc: f64,
    pub tol_flux: f64,
    pub max_step_stiffness: f64,
    pub radius: f64,
    pub delta: f64,
    pub contour_nodes: usize,
    pub big_lambda_factor: f64,
    pub oracle_cells: Vec<usize>,
    pub evolve_eps: f64,
    pub evolve_mode: u32,
    pub evolve_t_final: f64,
    pub evolve_dt: Option<f64>,
    pub evolve_cells: usize,
    pub evolve_cfl: f64,
    pub evolve_stride: usize,
    pub evolve_tail: f64,
    pub evolve_floor: f64,
    pub sweep_nu: String,
    pub sweep_rho0: String,
    pub sweep_u0: String,
    pub sweep_u1: String,
    pub sweep_steps: usize,
    pub jobs: usize,
    pub out_dir: Option<PathBuf>,
    pub verbosity: u8,
}

impl Default for RunConfig {
    fn default() -> Self {
        let steady = SteadyOptions::default();
        let spectrum = SpectrumOptions::default();
        RunConfig {
            nu: None,
            rho0: None,
            u0: None,
            u1: None,
            pressure_kind: "gamma".into(),
            kappa: 1.0,
            gamma: 1.4,
            steady_cells: steady.cells,
            tol_bc: steady.tol_bc,
            tol_flux: steady.tol_flux,
            max_step_stiffness: steady.max_step_stiffness,
            radius: spectrum.radius,
            delta: spectrum.shift,
            contour_nodes: spectrum.initial_nodes,
            big_lambda_factor: spectrum.evans.big_lambda_factor,
            oracle_cells: Vec::new(),
            evolve_eps: 0.01,
            evolve_mode: 1,
            evolve_t_final: 20.0,
            evolve_dt: None,
            evolve_cells: 1024,
            evolve_cfl: 0.25,
            evolve_stride: 100,
            evolve_tail: 0.5,
            evolve_floor: 1e-12,
            sweep_nu: "0.1:10".into(),
            sweep_rho0: "1:10".into(),
            sweep_u0: "1:10".into(),
            sweep_u1: "1:10".into(),
            sweep_steps: 4,
            jobs: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            out_dir: std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from),
            verbosity: 0,
        }
    }
}

/// All keys accepted in config files, in documentation order.
pub const KEYS: &[&str] = &[
    "nu",
    "rho0",
    "u0",
    "u1",
    "pressure.kind",
    "pressure.kappa",
    "pressure.gamma",
    "steady.cells",
    "steady.tol_bc",
    "steady.tol_flux",
    "steady.max_step_stiffness",
    "contour.radius",
    "contour.delta",
    "contour.nodes",
    "evans.big_lambda_factor",
    "oracle.cells",
    "evolve.eps",
    "evolve.mode",
    "evolve.t_final",
    "evolve.dt",
    "evolve.cells",
    "evolve.cfl",
    "evolve.stride",
    "evolve.tail",
    "evolve.floor",
    "sweep.nu_range",
    "sweep.rho0_range",
    "sweep.u0_range",
    "sweep.u1_range",
    "sweep.steps",
    "jobs",
    "output.dir",
    "verbosity",
];

fn bad(key: &str, expected: &str, value: &Value) -> CliError {
    CliError::Usage(format!("config key `{key}`: expected {expected}, got {value}"))
}

fn number(key: &str, value: &Value) -> Result<f64, CliError> {
    match value {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        Value::String(s) => s.trim().parse().map_err(|_| bad(key, "a number", value)),
        _ => Err(bad(key, "a number", value)),
    }
}

fn positive(key: &str, value: &Value) -> Result<f64, CliError> {
    let v = number(key, value)?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(bad(key, "a positive number", value))
    }
}

fn non_negative(key: &str, value: &Value) -> Result<f64, CliError> {
    let v = number(key, value)?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(bad(key, "a non-negative number", value))
    }
}

fn count(key: &str, value: &Value) -> Result<usize, CliError> {
    let n = match value {
        Value::Integer(i) if *i >= 1 => Some(*i as usize),
        Value::String(s) => s.trim().parse::<usize>().ok().filter(|n| *n >= 1),
        _ => None,
    };
    n.ok_or_else(|| bad(key, "a positive integer", value))
}

fn string(key: &str, value: &Value) -> Result<String, CliError> {
    match value {
        Value::String(s) => Ok(s.clone()),
        _ => Err(bad(key, "a string", value)),
    }
}

fn counts(key: &str, value: &Value) -> Result<Vec<usize>, CliError> {
    match value {
        Value::Array(items) => items.iter().map(|v| count(key, v)).collect(),
        Value::String(s) => {
            s.split(',').filter(|p| !p.trim().is_empty()).map(|p| count(key, &Value::String(p.into()))).collect()
        }
        other => Ok(vec![count(key, other)?]),
    }
}

impl RunConfig {
    /// Applies one key. Unknown keys and ill-typed values are usage errors
    /// naming the key.
    pub fn set(&mut self, key: &str, value: &Value) -> Result<(), CliError> {
        match key {
            "nu" => self.nu = Some(positive(key, value)?),
            "rho0" => self.rho0 = Some(positive(key, value)?),
            "u0" => self.u0 = Some(positive(key, value)?),
            "u1" => self.u1 = Some(positive(key, value)?),
            "pressure.kind" => {
                let kind = string(key, value)?;
                if kind != "gamma" && kind != "log" {
                    return Err(bad(key, "\"gamma\" or \"log\"", value));
                }
                self.pressure_kind = kind;
            }
            "pressure.kappa" => self.kappa = positive(key, value)?,
            "pressure.gamma" => self.gamma = positive(key, value)?,
            "steady.cells" => self.steady_cells = count(key, value)?,
            "steady.tol_bc" => self.tol_bc = positive(key, value)?,
            "steady.tol_flux" => self.tol_flux = positive(key, value)?,
            "steady.max_step_stiffness" => self.max_step_stiffness = positive(key, value)?,
            "contour.radius" => self.radius = positive(key, value)?,
            "contour.delta" => self.delta = non_negative(key, value)?,
            "contour.nodes" => self.contour_nodes = count(key, value)?,
            "evans.big_lambda_factor" => self.big_lambda_factor = positive(key, value)?,
            "oracle.cells" => self.oracle_cells = counts(key, value)?,
            "evolve.eps" => self.evolve_eps = non_negative(key, value)?,
            "evolve.mode" => self.evolve_mode = count(key, value)? as u32,
            "evolve.t_final" => self.evolve_t_final = non_negative(key, value)?,
            "evolve.dt" => self.evolve_dt = Some(positive(key, value)?),
            "evolve.cells" => self.evolve_cells = count(key, value)?,
            "evolve.cfl" => self.evolve_cfl = positive(key, value)?,
            "evolve.stride" => self.evolve_stride = count(key, value)?,
            "evolve.tail" => {
                let v = positive(key, value)?;
                if v > 1.0 {
                    return Err(bad(key, "a fraction in (0, 1]", value));
                }
                self.evolve_tail = v;
            }
            "evolve.floor" => self.evolve_floor = non_negative(key, value)?,
            "sweep.nu_range" => self.sweep_nu = string(key, value)?,
            "sweep.rho0_range" => self.sweep_rho0 = string(key, value)?,
            "sweep.u0_range" => self.sweep_u0 = string(key, value)?,
            "sweep.u1_range" => self.sweep_u1 = string(key, value)?,
            "sweep.steps" => self.sweep_steps = count(key, value)?,
            "jobs" => self.jobs = count(key, value)?,
            "output.dir" => self.out_dir = Some(PathBuf::from(string(key, value)?)),
            "verbosity" => {
                self.verbosity = count(key, value).map(|v| v.min(255) as u8).or_else(|_| match value {
                    Value::Integer(0) => Ok(0),
                    _ => Err(bad(key, "a non-negative integer", value)),
                })?
            }
            _ => return Err(CliError::Usage(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Reads a config file and applies its keys in sorted order.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
        self.apply_str(&text)
    }

    pub fn apply_str(&mut self, text: &str) -> Result<(), CliError> {
        let table: toml::Table = text.parse().map_err(|e| CliError::Usage(format!("malformed config file: {e}")))?;
        let mut flat = BTreeMap::new();
        flatten("", &table, &mut flat);
        for (key, value) in &flat {
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn law(&self) -> Result<PressureLaw, CliError> {
        let law = match self.pressure_kind.as_str() {
            "log" => PressureLaw::logarithmic(self.kappa),
            _ => PressureLaw::gamma(self.kappa, self.gamma),
        };
        law.map_err(|e| CliError::Usage(e.to_string()))
    }

    /// Flow parameters; each missing value is a usage error.
    pub fn flow(&self) -> Result<FlowParams, CliError> {
        let need = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| CliError::Usage(format!("missing `{key}` (flag --{key} or config key `{key}`)")))
        };
        FlowParams::new(need(self.nu, "nu")?, need(self.rho0, "rho0")?, need(self.u0, "u0")?, need(self.u1, "u1")?)
            .map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn steady_options(&self) -> SteadyOptions {
        SteadyOptions {
            cells: self.steady_cells,
            tol_bc: self.tol_bc,
            tol_flux: self.tol_flux,
            max_step_stiffness: self.max_step_stiffness,
            ..SteadyOptions::default()
        }
    }

    pub fn spectrum_options(&self) -> SpectrumOptions {
        SpectrumOptions {
            radius: self.radius,
            shift: self.delta,
            initial_nodes: self.contour_nodes,
            evans: EvansOptions { big_lambda_factor: self.big_lambda_factor, ..EvansOptions::default() },
            ..SpectrumOptions::default()
        }
    }

    /// Where an artifact goes: an explicit path (relative paths resolve
    /// against the output directory when one is set), else the default
    /// name inside the output directory, else nowhere (stdout).
    pub fn artifact_path(&self, explicit: Option<&Path>, default_name: &str) -> Option<PathBuf> {
        match (explicit, &self.out_dir) {
            (Some(p), Some(dir)) if p.is_relative() => Some(dir.join(p)),
            (Some(p), _) => Some(p.to_path_buf()),
            (None, Some(dir)) => Some(dir.join(default_name)),
            (None, None) => None,
        }
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}
