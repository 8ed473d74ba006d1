//! Command-line front end.
//!
//! Each subcommand produces at most one CSV artifact and one JSON report.
//! The artifact goes to `--out`, else to its default name inside the output
//! directory (`--out-dir`, `output.dir` or `BOUNDSTAB_OUT_DIR`), else to
//! stdout. The report goes to stdout, or to stderr when stdout already
//! carries the artifact.
//!
//! Exit codes: 0 success, 1 inconclusive or failed computation, 2 usage.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use boundstab_core::diagnostics::{cond2_check, default_weight_delta, goodman_weights, Cond2Verdict, DiagnosticsError};
use boundstab_core::evans::{evans, stability_index};
use boundstab_core::evolve::{evolve, fit_decay, perturb, EvolveOptions};
use boundstab_core::spectrum::{
    build_contour, locate_roots, matrix_winding_oracle, spectral_abscissa, winding_number, Abscissa, AbscissaOptions,
    Root, RootBox, RootOptions, SpectrumOptions, SpectrumReport,
};
use boundstab_core::steady::{classify, solve_steady};
use boundstab_core::{Complex64, PressureLaw, SteadyError, SteadyProfile, Verdict};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use toml::Value;

use crate::config::RunConfig;
use crate::exec::RayonExecutor;
use crate::formats::{self, FormatError};
use crate::sweep::{self, SweepPlan};
use crate::{CliError, SCHEMA_VERSION};

#[derive(Parser, Debug)]
#[command(name = "boundstab", version, about = "Steady inflow/outflow gas profiles and their stability")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve for the steady profile and write it as CSV.
    Steady {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flow: FlowArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the Evans function at one point, or the stability index.
    Evans {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        source: ProfileArgs,
        #[arg(long, allow_hyphen_values = true, conflicts_with = "index")]
        lambda_re: Option<f64>,
        #[arg(long, allow_hyphen_values = true, conflicts_with = "index")]
        lambda_im: Option<f64>,
        /// Print `index,sign_zero,sign_infinity` instead.
        #[arg(long)]
        index: bool,
        #[arg(long)]
        big_lambda_factor: Option<f64>,
    },
    /// Sample the Evans function along the half-disk contour.
    Contour {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        source: ProfileArgs,
        #[command(flatten)]
        contour: ContourArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count, locate or bound eigenvalues.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        source: ProfileArgs,
        #[command(flatten)]
        contour: ContourArgs,
        /// Locate roots in the bounding box of the half-disk.
        #[arg(long)]
        locate: bool,
        /// Locate roots in `re_min:re_max:im_min:im_max`.
        #[arg(long = "box", allow_hyphen_values = true)]
        bbox: Option<String>,
        /// Compute the rightmost eigenvalue real part.
        #[arg(long)]
        abscissa: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the perturbed nonlinear flow and record perturbation norms.
    Evolve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        source: ProfileArgs,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        mode: Option<usize>,
        #[arg(long = "T")]
        t_final: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        /// Cells of the time-stepping grid.
        #[arg(long)]
        cells: Option<usize>,
        #[arg(long)]
        cfl: Option<f64>,
        #[arg(long)]
        stride: Option<usize>,
        /// Fit exponential decay to the L2 history.
        #[arg(long)]
        fit: bool,
        /// Fraction of the history used by the fit.
        #[arg(long)]
        tail: Option<f64>,
        #[arg(long)]
        floor: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verdicts over a log-spaced parameter grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        law: LawArgs,
        #[command(flatten)]
        contour: ContourArgs,
        #[arg(long)]
        nu_range: Option<String>,
        #[arg(long)]
        rho0_range: Option<String>,
        #[arg(long)]
        u0_range: Option<String>,
        #[arg(long)]
        u1_range: Option<String>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pressure-law condition and weight diagnostics.
    Check {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        source: ProfileArgs,
        #[arg(long)]
        cond2: bool,
        #[arg(long)]
        weights: bool,
        /// Weight parameter; defaults to 0.1 * min u.
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Flat TOML config file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Args, Debug)]
struct LawArgs {
    /// Pressure law: `gamma` or `log`.
    #[arg(long)]
    pressure: Option<String>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    /// Minimum steady grid cells.
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    tol_bc: Option<f64>,
    #[arg(long)]
    tol_flux: Option<f64>,
}

#[derive(Args, Debug)]
struct FlowArgs {
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    rho0: Option<f64>,
    #[arg(long)]
    u0: Option<f64>,
    #[arg(long)]
    u1: Option<f64>,
    #[command(flatten)]
    law: LawArgs,
}

#[derive(Args, Debug)]
struct ProfileArgs {
    /// Profile CSV; otherwise the profile is solved from the flow flags.
    #[arg(long)]
    profile: Option<PathBuf>,
    #[command(flatten)]
    flow: FlowArgs,
}

#[derive(Args, Debug)]
struct ContourArgs {
    /// Contour radius.
    #[arg(long = "M", visible_alias = "radius")]
    radius: Option<f64>,
    /// Left shift of the straight edge.
    #[arg(long)]
    delta: Option<f64>,
    /// Initial contour nodes.
    #[arg(long)]
    contour_nodes: Option<usize>,
    /// Also count with the matrix determinant on N cells (repeatable).
    #[arg(long = "oracle", value_name = "N")]
    oracle: Vec<usize>,
    /// Repeat the count at twice the radius and compare.
    #[arg(long)]
    verify_radius: bool,
}

/// Command-line values as config keys, applied after the config file.
#[derive(Default)]
struct Overrides(Vec<(&'static str, Value)>);

impl Overrides {
    fn f(&mut self, key: &'static str, v: Option<f64>) {
        if let Some(v) = v {
            self.0.push((key, Value::Float(v)));
        }
    }
    fn n(&mut self, key: &'static str, v: Option<usize>) {
        if let Some(v) = v {
            self.0.push((key, Value::Integer(v.min(i64::MAX as usize) as i64)));
        }
    }
    fn s(&mut self, key: &'static str, v: &Option<String>) {
        if let Some(v) = v {
            self.0.push((key, Value::String(v.clone())));
        }
    }
    fn common(&mut self, c: &Common) {
        self.n("jobs", c.jobs);
        if let Some(dir) = &c.out_dir {
            self.0.push(("output.dir", Value::String(dir.to_string_lossy().into_owned())));
        }
        if c.verbose > 0 {
            self.0.push(("verbosity", Value::Integer(c.verbose as i64)));
        }
    }
    fn law(&mut self, l: &LawArgs) {
        self.s("pressure.kind", &l.pressure);
        self.f("pressure.gamma", l.gamma);
        self.f("pressure.kappa", l.kappa);
        self.n("steady.cells", l.nodes);
        self.f("steady.tol_bc", l.tol_bc);
        self.f("steady.tol_flux", l.tol_flux);
    }
    fn flow(&mut self, f: &FlowArgs) {
        self.f("nu", f.nu);
        self.f("rho0", f.rho0);
        self.f("u0", f.u0);
        self.f("u1", f.u1);
        self.law(&f.law);
    }
    fn contour(&mut self, c: &ContourArgs) {
        self.f("contour.radius", c.radius);
        self.f("contour.delta", c.delta);
        self.n("contour.nodes", c.contour_nodes);
        if !c.oracle.is_empty() {
            let cells = c.oracle.iter().map(|&n| Value::Integer(n.min(i64::MAX as usize) as i64)).collect();
            self.0.push(("oracle.cells", Value::Array(cells)));
        }
    }
}

fn load_config(common: &Common, overrides: Overrides) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &common.config {
        cfg.apply_file(path)?;
    }
    for (key, value) in &overrides.0 {
        cfg.set(key, value)?;
    }
    Ok(cfg)
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// exit code. Nothing is written outside `out`, `err` and artifact files.
pub fn run_with<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    2
                }
            };
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "boundstab: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let mut ov = Overrides::default();
    match command {
        Command::Steady { common, flow, out: path } => {
            ov.common(&common);
            ov.flow(&flow);
            let cfg = load_config(&common, ov)?;
            cmd_steady(&cfg, path.as_deref(), out, err)
        }
        Command::Evans { common, source, lambda_re, lambda_im, index, big_lambda_factor } => {
            ov.common(&common);
            ov.flow(&source.flow);
            ov.f("evans.big_lambda_factor", big_lambda_factor);
            let cfg = load_config(&common, ov)?;
            let profile = load_profile(&cfg, source.profile.as_deref(), err)?;
            if index {
                cmd_index(&cfg, &profile, out, err)
            } else {
                cmd_evans(&cfg, &profile, Complex64::new(lambda_re.unwrap_or(0.0), lambda_im.unwrap_or(0.0)), out)
            }
        }
        Command::Contour { common, source, contour, out: path } => {
            ov.common(&common);
            ov.flow(&source.flow);
            ov.contour(&contour);
            let cfg = load_config(&common, ov)?;
            let profile = load_profile(&cfg, source.profile.as_deref(), err)?;
            cmd_contour(&cfg, &profile, contour.verify_radius, path.as_deref(), out, err)
        }
        Command::Spectrum { common, source, contour, locate, bbox, abscissa, out: path } => {
            ov.common(&common);
            ov.flow(&source.flow);
            ov.contour(&contour);
            let cfg = load_config(&common, ov)?;
            let bx = bbox.as_deref().map(parse_box).transpose()?;
            let profile = load_profile(&cfg, source.profile.as_deref(), err)?;
            let mode =
                SpectrumMode { locate: locate || bx.is_some(), bx, abscissa, verify_radius: contour.verify_radius };
            cmd_spectrum(&cfg, &profile, &mode, path.as_deref(), out, err)
        }
        Command::Evolve { common, source, eps, mode, t_final, dt, cells, cfl, stride, fit, tail, floor, out: path } => {
            ov.common(&common);
            ov.flow(&source.flow);
            ov.f("evolve.eps", eps);
            ov.n("evolve.mode", mode);
            ov.f("evolve.t_final", t_final);
            ov.f("evolve.dt", dt);
            ov.n("evolve.cells", cells);
            ov.f("evolve.cfl", cfl);
            ov.n("evolve.stride", stride);
            ov.f("evolve.tail", tail);
            ov.f("evolve.floor", floor);
            let cfg = load_config(&common, ov)?;
            let profile = load_profile(&cfg, source.profile.as_deref(), err)?;
            cmd_evolve(&cfg, &profile, fit, path.as_deref(), out, err)
        }
        Command::Sweep { common, law, contour, nu_range, rho0_range, u0_range, u1_range, steps, out: path } => {
            ov.common(&common);
            ov.law(&law);
            ov.contour(&contour);
            ov.s("sweep.nu_range", &nu_range);
            ov.s("sweep.rho0_range", &rho0_range);
            ov.s("sweep.u0_range", &u0_range);
            ov.s("sweep.u1_range", &u1_range);
            ov.n("sweep.steps", steps);
            let cfg = load_config(&common, ov)?;
            cmd_sweep(&cfg, path.as_deref(), out, err)
        }
        Command::Check { common, source, cond2, weights, delta, out: path } => {
            ov.common(&common);
            ov.flow(&source.flow);
            let cfg = load_config(&common, ov)?;
            let profile = load_profile(&cfg, source.profile.as_deref(), err)?;
            let (cond2, weights) = if cond2 || weights { (cond2, weights) } else { (true, true) };
            cmd_check(&cfg, &profile, cond2, weights, delta, path.as_deref(), out)
        }
    }
}

fn steady_error(e: SteadyError) -> CliError {
    match e {
        SteadyError::InvalidParam { .. } | SteadyError::UnsupportedBoundary(_) | SteadyError::GridTooSmall(_) => {
            CliError::Usage(e.to_string())
        }
        other => CliError::Failure(format!("steady solve failed: {other}")),
    }
}

fn load_profile(cfg: &RunConfig, path: Option<&Path>, err: &mut dyn Write) -> Result<SteadyProfile, CliError> {
    match path {
        Some(path) => {
            let file = File::open(path)
                .map_err(|e| CliError::Usage(format!("cannot open profile {}: {e}", path.display())))?;
            formats::read_profile(BufReader::new(file))
                .map_err(|e| CliError::Usage(format!("cannot read profile {}: {e}", path.display())))
        }
        None => {
            let profile = solve_steady(&cfg.flow()?, &cfg.law()?, &cfg.steady_options()).map_err(steady_error)?;
            if cfg.verbosity > 0 {
                writeln!(err, "steady: b = {:?}, cells = {}", profile.b(), profile.cells())?;
            }
            Ok(profile)
        }
    }
}

fn format_error(e: FormatError) -> CliError {
    match e {
        FormatError::Io(io) => CliError::Io(io),
        other => CliError::Failure(other.to_string()),
    }
}

/// Writes an artifact to its resolved path, or to `out` when there is none.
/// Returns the path written, if any.
fn emit(
    cfg: &RunConfig,
    explicit: Option<&Path>,
    default_name: &str,
    out: &mut dyn Write,
    write: impl FnOnce(&mut dyn Write) -> Result<(), FormatError>,
) -> Result<Option<PathBuf>, CliError> {
    match cfg.artifact_path(explicit, default_name) {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            let mut file = BufWriter::new(File::create(&path)?);
            write(&mut file).map_err(format_error)?;
            file.flush()?;
            Ok(Some(path))
        }
        None => {
            write(out).map_err(format_error)?;
            Ok(None)
        }
    }
}

/// The report goes to stdout unless the artifact already went there.
fn report<T: Serialize>(
    value: &T,
    artifact: &Option<PathBuf>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let written = if artifact.is_some() { formats::write_json(out, value) } else { formats::write_json(err, value) };
    written.map_err(format_error)
}

#[derive(Serialize)]
struct ProfileSummary {
    nu: f64,
    rho0: f64,
    u0: f64,
    u1: f64,
    law: &'static str,
    kappa: f64,
    gamma: Option<f64>,
    b: f64,
    m: f64,
    cells: usize,
}

impl ProfileSummary {
    fn of(p: &SteadyProfile) -> Self {
        let (kappa, gamma) = match *p.law() {
            PressureLaw::Gamma { kappa, gamma } => (kappa, Some(gamma)),
            PressureLaw::Logarithmic { kappa } => (kappa, None),
        };
        let f = p.params();
        ProfileSummary {
            nu: f.nu,
            rho0: f.rho0,
            u0: f.u0,
            u1: f.u1,
            law: p.law().kind(),
            kappa,
            gamma,
            b: p.b(),
            m: p.m(),
            cells: p.cells(),
        }
    }
}

#[derive(Serialize)]
struct SteadyReport {
    schema_version: u32,
    command: &'static str,
    profile: ProfileSummary,
    class: &'static str,
    outflow_defect: f64,
    flux_defect: f64,
    max_slope: f64,
}

fn cmd_steady(cfg: &RunConfig, path: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let profile = load_profile(cfg, None, err)?;
    let class = classify(&profile).map_err(steady_error)?;
    let artifact = emit(cfg, path, "profile.csv", out, |w| formats::write_profile(w, &profile))?;
    let summary = SteadyReport {
        schema_version: SCHEMA_VERSION,
        command: "steady",
        profile: ProfileSummary::of(&profile),
        class: class.label(),
        outflow_defect: profile.outflow_defect(),
        flux_defect: profile.flux_defect(),
        max_slope: profile.slope_amplitude(),
    };
    report(&summary, &artifact, out, err)?;
    Ok(0)
}

fn cmd_evans(
    cfg: &RunConfig,
    profile: &SteadyProfile,
    lambda: Complex64,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let e = evans(lambda, profile, &cfg.spectrum_options().evans).map_err(|e| CliError::Failure(e.to_string()))?;
    writeln!(out, "re,im,log_scale")?;
    writeln!(
        out,
        "{},{},{}",
        formats::float(e.d_scaled.re),
        formats::float(e.d_scaled.im),
        formats::float(e.log_scale)
    )?;
    Ok(0)
}

fn cmd_index(
    cfg: &RunConfig,
    profile: &SteadyProfile,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, CliError> {
    let ix = stability_index(profile, &cfg.spectrum_options().evans).map_err(|e| CliError::Failure(e.to_string()))?;
    writeln!(out, "index,sign_zero,sign_infinity")?;
    writeln!(out, "{},{},{}", ix.index, ix.sign_zero, ix.sign_infinity)?;
    if !ix.consistent {
        writeln!(err, "warning: sign of D at infinity differs across lambda_big/4, lambda_big, 4 lambda_big")?;
    }
    if ix.index < 0 {
        writeln!(
            err,
            "STABILITY INDEX IS -1: an odd number of eigenvalues with Re >= 0, or a numerical failure (log D(0) = {:?}, lambda_big = {:?})",
            ix.log_d_zero, ix.lambda_big
        )?;
        return Ok(1);
    }
    Ok(0)
}

#[derive(Serialize)]
struct OracleReport {
    cells: usize,
    winding: Option<i64>,
    verdict: &'static str,
    reason: Option<String>,
    agrees: bool,
}

#[derive(Serialize)]
struct RadiusCheck {
    radius: f64,
    winding: Option<i64>,
    agrees: bool,
}

#[derive(Serialize)]
struct CountReport {
    schema_version: u32,
    command: &'static str,
    profile: ProfileSummary,
    radius: f64,
    delta: f64,
    nodes: usize,
    winding: Option<i64>,
    verdict: &'static str,
    reason: Option<String>,
    min_abs_on_contour: f64,
    verify_radius: Option<RadiusCheck>,
    oracle: Vec<OracleReport>,
}

fn reason_of(v: &Verdict) -> Option<String> {
    match v {
        Verdict::Inconclusive(r) => Some(r.to_string()),
        _ => None,
    }
}

/// Counts on the configured half-disk, with the optional radius check and
/// matrix oracles folded into the verdict.
fn count(
    cfg: &RunConfig,
    profile: &SteadyProfile,
    verify_radius: bool,
    exec: &RayonExecutor,
    command: &'static str,
) -> Result<(SpectrumReport, CountReport), CliError> {
    let opts = cfg.spectrum_options();
    let contour =
        build_contour(opts.radius, opts.shift, opts.initial_nodes).map_err(|e| CliError::Usage(e.to_string()))?;
    let rep = winding_number(profile, &contour, &opts, exec);
    let mut verdict = rep.verdict.label();
    let mut reason = reason_of(&rep.verdict);
    let check = if verify_radius {
        let wide = build_contour(2.0 * opts.radius, opts.shift, opts.initial_nodes)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        let w = winding_number(profile, &wide, &opts, exec).winding;
        let agrees = w.is_some() && w == rep.winding;
        if !agrees && reason.is_none() {
            verdict = "Inconclusive";
            reason = Some(format!(
                "winding {:?} at radius {:?} but {:?} at {:?}",
                rep.winding,
                opts.radius,
                w,
                2.0 * opts.radius
            ));
        }
        Some(RadiusCheck { radius: 2.0 * opts.radius, winding: w, agrees })
    } else {
        None
    };
    let mut oracle = Vec::new();
    for &cells in &cfg.oracle_cells {
        let r = matrix_winding_oracle(profile, &contour, cells, &opts.winding, exec)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        let agrees = r.winding.is_some() && r.winding == rep.winding;
        if !agrees && reason.is_none() {
            verdict = "Inconclusive";
            reason = Some(format!(
                "matrix oracle on {cells} cells gives winding {:?}, Evans gives {:?}",
                r.winding, rep.winding
            ));
        }
        oracle.push(OracleReport {
            cells,
            winding: r.winding,
            verdict: r.verdict.label(),
            reason: reason_of(&r.verdict),
            agrees,
        });
    }
    let summary = CountReport {
        schema_version: SCHEMA_VERSION,
        command,
        profile: ProfileSummary::of(profile),
        radius: opts.radius,
        delta: opts.shift,
        nodes: rep.samples.len(),
        winding: rep.winding,
        verdict,
        reason,
        min_abs_on_contour: rep.min_abs_on_contour,
        verify_radius: check,
        oracle,
    };
    Ok((rep, summary))
}

fn executor(cfg: &RunConfig) -> Result<RayonExecutor, CliError> {
    RayonExecutor::new(cfg.jobs).map_err(|e| CliError::Failure(format!("cannot start worker pool: {e}")))
}

fn cmd_contour(
    cfg: &RunConfig,
    profile: &SteadyProfile,
    verify_radius: bool,
    path: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, CliError> {
    let exec = executor(cfg)?;
    let (rep, summary) = count(cfg, profile, verify_radius, &exec, "contour")?;
    let artifact = emit(cfg, path, "contour.csv", out, |w| formats::write_contour(w, &rep.samples))?;
    report(&summary, &artifact, out, err)?;
    Ok(if summary.verdict == "Inconclusive" { 1 } else { 0 })
}

#[derive(Serialize)]
struct RootReport {
    re: f64,
    im: f64,
    residual: f64,
    multiplicity: usize,
}

impl RootReport {
    fn of(r: &Root) -> Self {
        RootReport { re: r.lambda.re, im: r.lambda.im, residual: r.residual, multiplicity: r.multiplicity }
    }
}

#[derive(Serialize)]
struct BoxReport {
    re_min: f64,
    re_max: f64,
    im_min: f64,
    im_max: f64,
    winding: Option<i64>,
    unresolved: Vec<String>,
}

#[derive(Serialize)]
struct AbscissaReport {
    /// `located` or `below`.
    kind: &'static str,
    value: f64,
    roots: Vec<RootReport>,
}

#[derive(Serialize)]
struct SpectrumJson {
    #[serde(flatten)]
    count: CountReport,
    #[serde(rename = "box")]
    bx: Option<BoxReport>,
    roots: Vec<RootReport>,
    abscissa: Option<AbscissaReport>,
}

struct SpectrumMode {
    locate: bool,
    bx: Option<RootBox>,
    abscissa: bool,
    verify_radius: bool,
}

fn parse_box(text: &str) -> Result<RootBox, CliError> {
    let bad = |why: String| CliError::Usage(format!("--box `{text}`: {why}"));
    let parts: Result<Vec<f64>, _> = text.split(':').map(|p| p.trim().parse::<f64>()).collect();
    match parts.as_deref() {
        Ok(&[a, b, c, d]) => RootBox::new(a, b, c, d).map_err(|e| bad(e.to_string())),
        _ => Err(bad("expected re_min:re_max:im_min:im_max".into())),
    }
}

fn cmd_spectrum(
    cfg: &RunConfig,
    profile: &SteadyProfile,
    mode: &SpectrumMode,
    path: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, CliError> {
    let exec = executor(cfg)?;
    let opts: SpectrumOptions = cfg.spectrum_options();
    let (_, mut count) = count(cfg, profile, mode.verify_radius, &exec, "spectrum")?;
    let mut roots = Vec::new();
    let mut bx_report = None;
    if mode.locate {
        let bx = match mode.bx {
            Some(bx) => bx,
            None => RootBox::new(-opts.shift, opts.radius, -opts.radius, opts.radius)
                .map_err(|e| CliError::Usage(e.to_string()))?,
        };
        let search = locate_roots(profile, &bx, &opts, &RootOptions::default(), &exec);
        let unresolved: Vec<String> = search
            .inconclusive
            .iter()
            .map(|(b, r)| format!("[{:?}, {:?}] x [{:?}, {:?}]: {r}", b.re_min, b.re_max, b.im_min, b.im_max))
            .collect();
        if (search.winding.is_none() || !unresolved.is_empty()) && count.reason.is_none() {
            count.verdict = "Inconclusive";
            count.reason = Some("root location left unresolved boxes".into());
        }
        roots = search.roots.iter().map(RootReport::of).collect();
        bx_report = Some(BoxReport {
            re_min: bx.re_min,
            re_max: bx.re_max,
            im_min: bx.im_min,
            im_max: bx.im_max,
            winding: search.winding,
            unresolved,
        });
    }
    let mut abscissa = None;
    if mode.abscissa {
        let aopts = AbscissaOptions { spectrum: opts, ..AbscissaOptions::default() };
        match spectral_abscissa(profile, &aopts, &exec) {
            Ok(Abscissa::Located { value, roots }) => {
                abscissa =
                    Some(AbscissaReport { kind: "located", value, roots: roots.iter().map(RootReport::of).collect() })
            }
            Ok(Abscissa::Below { bound }) => {
                abscissa = Some(AbscissaReport { kind: "below", value: -bound, roots: Vec::new() })
            }
            Err(e) => {
                if count.reason.is_none() {
                    count.verdict = "Inconclusive";
                    count.reason = Some(format!("abscissa: {e}"));
                }
            }
        }
    }
    let inconclusive = count.verdict == "Inconclusive";
    let json = SpectrumJson { count, bx: bx_report, roots, abscissa };
    emit(cfg, path, "spectrum.json", out, |w| formats::write_json(w, &json))?;
    if inconclusive {
        writeln!(err, "spectrum: inconclusive")?;
    }
    Ok(if inconclusive { 1 } else { 0 })
}

#[derive(Serialize)]
struct FitReport {
    theta: f64,
    c: f64,
    window: [f64; 2],
    residual: f64,
    samples: usize,
}

#[derive(Serialize)]
struct EvolveReport {
    schema_version: u32,
    command: &'static str,
    profile: ProfileSummary,
    eps: f64,
    mode: u32,
    cells: usize,
    t_final: f64,
    samples: usize,
    initial_l2: f64,
    final_l2: f64,
    fit: Option<FitReport>,
    fit_error: Option<String>,
}

fn cmd_evolve(
    cfg: &RunConfig,
    profile: &SteadyProfile,
    fit: bool,
    path: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, CliError> {
    let evolve_error = |e: boundstab_core::EvolveError| match e {
        boundstab_core::EvolveError::BlowUp { .. } => CliError::Failure(e.to_string()),
        other => CliError::Usage(other.to_string()),
    };
    let initial = perturb(profile, cfg.evolve_eps, cfg.evolve_mode, cfg.evolve_cells).map_err(evolve_error)?;
    let opts = EvolveOptions {
        t_final: cfg.evolve_t_final,
        dt: cfg.evolve_dt,
        cfl: cfg.evolve_cfl,
        stride: cfg.evolve_stride,
    };
    let history = evolve(&initial, profile, &opts).map_err(evolve_error)?;
    let artifact = emit(cfg, path, "norms.csv", out, |w| formats::write_norms(w, &history))?;
    let (mut fit_report, mut fit_error) = (None, None);
    if fit {
        let l2: Vec<(f64, f64)> = history.iter().map(|s| (s.t, s.l2)).collect();
        match fit_decay(&l2, cfg.evolve_tail, cfg.evolve_floor) {
            Ok(f) => {
                fit_report = Some(FitReport {
                    theta: f.theta,
                    c: f.c,
                    window: [f.window.0, f.window.1],
                    residual: f.residual,
                    samples: f.samples,
                })
            }
            Err(e) => fit_error = Some(e.to_string()),
        }
    }
    let summary = EvolveReport {
        schema_version: SCHEMA_VERSION,
        command: "evolve",
        profile: ProfileSummary::of(profile),
        eps: cfg.evolve_eps,
        mode: cfg.evolve_mode,
        cells: initial.cells(),
        t_final: cfg.evolve_t_final,
        samples: history.len(),
        initial_l2: history.first().map_or(0.0, |s| s.l2),
        final_l2: history.last().map_or(0.0, |s| s.l2),
        fit: fit_report,
        fit_error,
    };
    // With --fit the report is appended to stdout after the norms.
    if fit && artifact.is_none() {
        formats::write_json(&mut *out, &summary).map_err(format_error)?;
    } else {
        report(&summary, &artifact, out, err)?;
    }
    Ok(if summary.fit_error.is_some() { 1 } else { 0 })
}

#[derive(Serialize)]
struct SweepReport {
    schema_version: u32,
    command: &'static str,
    tuples: usize,
    stable: usize,
    nonstable: usize,
    inconclusive: usize,
    steady_failures: usize,
    index_negative: usize,
    oracle_cells: Vec<usize>,
    oracle_disagreements: usize,
}

fn cmd_sweep(cfg: &RunConfig, path: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let plan = SweepPlan {
        nu: sweep::parse_range("sweep.nu_range", &cfg.sweep_nu)?,
        rho0: sweep::parse_range("sweep.rho0_range", &cfg.sweep_rho0)?,
        u0: sweep::parse_range("sweep.u0_range", &cfg.sweep_u0)?,
        u1: sweep::parse_range("sweep.u1_range", &cfg.sweep_u1)?,
        steps: cfg.sweep_steps,
        law: cfg.law()?,
        steady: cfg.steady_options(),
        spectrum: cfg.spectrum_options(),
        oracle_cells: cfg.oracle_cells.clone(),
    };
    if let Some(&n) = plan.oracle_cells.iter().find(|&&n| n < 32) {
        return Err(CliError::Usage(format!("oracle grid needs at least 32 cells, got {n}")));
    }
    let verbose = cfg.verbosity > 0;
    let rows = sweep::run_sweep(&plan, cfg.jobs, &|row| {
        if verbose {
            let t = row.tuple;
            eprintln!("sweep: nu={:?} rho0={:?} u0={:?} u1={:?} -> {}", t.nu, t.rho0, t.u0, t.u1, row.verdict);
        }
    })?;
    let artifact = emit(cfg, path, "sweep.csv", out, |w| sweep::write_sweep(w, &plan.oracle_cells, &rows))?;
    let by = |label: &str| rows.iter().filter(|r| r.verdict == label).count();
    let summary = SweepReport {
        schema_version: SCHEMA_VERSION,
        command: "sweep",
        tuples: rows.len(),
        stable: by("SpectrallyStable"),
        nonstable: by("NonstableEigenvalues"),
        inconclusive: by("Inconclusive"),
        steady_failures: by("SteadyFailure"),
        index_negative: rows.iter().filter(|r| r.index == Some(-1)).count(),
        oracle_cells: plan.oracle_cells.clone(),
        oracle_disagreements: rows.iter().filter(|r| r.winding.is_some() && !r.oracle_agrees()).count(),
    };
    report(&summary, &artifact, out, err)?;
    let failed = summary.inconclusive + summary.steady_failures + summary.index_negative + summary.oracle_disagreements;
    Ok(if failed > 0 { 1 } else { 0 })
}

#[derive(Serialize)]
struct Cond2Report {
    /// `Satisfied`, `Violated` or `NotApplicable`.
    verdict: &'static str,
    clause: Option<&'static str>,
    node: Option<usize>,
    x: Option<f64>,
    note: &'static str,
}

#[derive(Serialize)]
struct WeightsReport {
    delta: f64,
    weights_positive: bool,
    quantity_negative: bool,
    failure_node: Option<usize>,
    phi1_min: f64,
    phi2_min: f64,
    quantity_max: f64,
    note: &'static str,
}

#[derive(Serialize)]
struct CheckReport {
    schema_version: u32,
    command: &'static str,
    profile: ProfileSummary,
    class: &'static str,
    cond2: Option<Cond2Report>,
    weights: Option<WeightsReport>,
}

fn min(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

fn cmd_check(
    cfg: &RunConfig,
    profile: &SteadyProfile,
    cond2: bool,
    weights: bool,
    delta: Option<f64>,
    path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let class = classify(profile).map_err(steady_error)?;
    let cond2 = if cond2 {
        let note = "the density clause is checked as signed rho_x < rho/4, not |rho_x|";
        Some(match cond2_check(profile) {
            Ok(Cond2Verdict::Satisfied) => {
                Cond2Report { verdict: "Satisfied", clause: None, node: None, x: None, note }
            }
            Ok(Cond2Verdict::Violated { node, clause }) => Cond2Report {
                verdict: "Violated",
                clause: Some(clause.label()),
                node: Some(node),
                x: Some(profile.x()[node]),
                note,
            },
            Err(DiagnosticsError::ConstantProfile) => {
                Cond2Report { verdict: "NotApplicable", clause: None, node: None, x: None, note }
            }
            Err(e) => return Err(CliError::Failure(e.to_string())),
        })
    } else {
        None
    };
    let weights = if weights {
        let delta = delta.unwrap_or_else(|| default_weight_delta(profile));
        let w = goodman_weights(profile, delta).map_err(|e| CliError::Usage(e.to_string()))?;
        Some(WeightsReport {
            delta,
            weights_positive: w.weights_positive,
            quantity_negative: w.quantity_negative,
            failure_node: w.failure_node,
            phi1_min: min(&w.weights.phi1),
            phi2_min: min(&w.weights.phi2),
            quantity_max: w.quantity.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            note: "with u phi1' = 3 u_x phi1 - delta u the quantity equals -delta u / 2 exactly",
        })
    } else {
        None
    };
    let json = CheckReport {
        schema_version: SCHEMA_VERSION,
        command: "check",
        profile: ProfileSummary::of(profile),
        class: class.label(),
        cond2,
        weights,
    };
    emit(cfg, path, "check.json", out, |w| formats::write_json(w, &json))?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run_with(std::iter::once("boundstab").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(&[]).0, 2);
        assert_eq!(run(&["bogus"]).0, 2);
        assert_eq!(run(&["steady", "--nu", "1"]).0, 2);
        assert_eq!(run(&["steady", "--nu", "-1", "--rho0", "2", "--u0", "1", "--u1", "1"]).0, 2);
        assert_eq!(run(&["spectrum", "--box", "1:0:0:1", "--nu", "1", "--rho0", "2", "--u0", "1", "--u1", "1"]).0, 2);
        let (code, out, _) = run(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("steady"));
    }

    #[test]
    fn box_parsing() {
        let bx = parse_box("0:10:-10:10").unwrap();
        assert_eq!((bx.re_min, bx.re_max, bx.im_min, bx.im_max), (0.0, 10.0, -10.0, 10.0));
        assert!(parse_box("0:1:2").is_err());
        assert!(parse_box("0:x:2:3").is_err());
    }

    #[test]
    fn evans_prints_scaled_value() {
        let (code, out, _) = run(&[
            "evans",
            "--nu",
            "1",
            "--rho0",
            "2",
            "--u0",
            "1.5",
            "--u1",
            "1.5",
            "--lambda-re",
            "0",
            "--lambda-im",
            "0",
        ]);
        assert_eq!(code, 0);
        let mut lines = out.lines();
        assert_eq!(lines.next(), Some("re,im,log_scale"));
        let v: Vec<f64> = lines.next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(v[1], 0.0);
        assert!(v[0] > 0.0);
    }
}
