//! Steady solutions `(rho_hat, u_hat)` of the inflow/outflow problem.
//!
//! A steady state carries a constant momentum flux `m = rho0 * u0`, and the
//! density solves the scalar ODE
//!
//! ```text
//! nu * m * rho_x = b * rho^2 - m^2 * rho - rho^2 * P(rho),   rho(0) = rho0,
//! ```
//!
//! where `b` is the unknown integration constant of the momentum equation.
//! [`solve_steady`] finds the `b` for which `rho(1) = m / u1` by RK4 shooting.

use alloc::vec::Vec;

use thiserror::Error;

use crate::math::{floor, sqrt};
use crate::thermo::{PressureLaw, ThermoError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SteadyError {
    #[error("flow parameter {name} must be positive and finite, got {value}")]
    InvalidParam { name: &'static str, value: f64 },
    #[error("unsupported boundary data: {0}")]
    UnsupportedBoundary(&'static str),
    #[error("grid needs at least 2 cells, got {0}")]
    GridTooSmall(usize),
    #[error("b = {b} is outside the domain of phi: density left [floor, ceiling] at x = {x}")]
    OutsideDomain { b: f64, x: f64, high: bool },
    #[error("shooting on b did not converge; last bracket [{lo}, {hi}], best residual {residual}")]
    NonConvergence { lo: f64, hi: f64, residual: f64 },
    #[error("sample point {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("u_x changes sign across the profile (min {min}, max {max})")]
    MixedSlope { min: f64, max: f64 },
    #[error("profile invariant violated: {0}")]
    Invariant(&'static str),
    #[error(transparent)]
    Thermo(#[from] ThermoError),
}

/// Viscosity and canonical boundary data: `rho(0) = rho0`, `u(0) = u0`,
/// `u(1) = u1`, all strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowParams {
    pub nu: f64,
    pub rho0: f64,
    pub u0: f64,
    pub u1: f64,
}

impl FlowParams {
    pub fn new(nu: f64, rho0: f64, u0: f64, u1: f64) -> Result<Self, SteadyError> {
        let p = FlowParams { nu, rho0, u0, u1 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SteadyError> {
        for (name, value) in [("nu", self.nu), ("rho0", self.rho0), ("u0", self.u0), ("u1", self.u1)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(SteadyError::InvalidParam { name, value });
            }
        }
        Ok(())
    }

    /// Momentum flux `m = rho0 * u0`.
    #[inline]
    pub fn momentum(&self) -> f64 {
        self.rho0 * self.u0
    }

    /// Density the outflow velocity forces at `x = 1`.
    #[inline]
    pub fn outflow_density(&self) -> f64 {
        self.momentum() / self.u1
    }

    /// The value of `b` for which the constant state `rho0` solves the ODE.
    #[inline]
    pub fn b_equilibrium(&self, law: &PressureLaw) -> f64 {
        self.rho0 * self.u0 * self.u0 + law.p(self.rho0)
    }
}

/// Which end of the interval carries the density boundary condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensitySide {
    Left,
    Right,
}

/// Boundary data as posed by the user, before orientation is normalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryData {
    pub density_side: DensitySide,
    pub rho: f64,
    /// Velocity at `x = 0`.
    pub u_left: f64,
    /// Velocity at `x = 1`.
    pub u_right: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Canonical,
    /// Physical data is recovered by `x -> 1 - x`, `u -> -u`.
    Reflected,
}

/// Maps boundary data onto the canonical inflow-at-zero problem.
///
/// Flow from right to left with the density given at `x = 1` is the mirror
/// image of the canonical problem. Velocities of mixed sign cannot carry a
/// constant momentum flux, and zero velocities only admit trivial states.
pub fn normalize_bc(raw: &BoundaryData, nu: f64) -> Result<(FlowParams, Orientation), SteadyError> {
    let BoundaryData { density_side, rho, u_left, u_right } = *raw;
    if u_left == 0.0 || u_right == 0.0 {
        return Err(SteadyError::UnsupportedBoundary("characteristic (zero velocity) boundary"));
    }
    if (u_left > 0.0) != (u_right > 0.0) {
        return Err(SteadyError::UnsupportedBoundary("boundary velocities of opposite sign"));
    }
    match (density_side, u_left > 0.0) {
        (DensitySide::Left, true) => Ok((FlowParams::new(nu, rho, u_left, u_right)?, Orientation::Canonical)),
        (DensitySide::Right, false) => Ok((FlowParams::new(nu, rho, -u_right, -u_left)?, Orientation::Reflected)),
        (DensitySide::Left, false) => {
            Err(SteadyError::UnsupportedBoundary("density prescribed at an outflow boundary (x = 0)"))
        }
        (DensitySide::Right, true) => {
            Err(SteadyError::UnsupportedBoundary("density prescribed at an outflow boundary (x = 1)"))
        }
    }
}

/// Right-hand side of the steady density ODE for a fixed `b`.
#[derive(Debug, Clone, Copy)]
pub struct DensityOde {
    pub law: PressureLaw,
    pub nu: f64,
    pub m: f64,
    pub b: f64,
}

impl DensityOde {
    pub fn new(params: &FlowParams, law: &PressureLaw, b: f64) -> Self {
        DensityOde { law: *law, nu: params.nu, m: params.momentum(), b }
    }

    /// `rho_x` as a function of `rho`.
    #[inline]
    pub fn rhs(&self, rho: f64) -> f64 {
        rho * (self.b * rho - self.m * self.m - rho * self.law.p(rho)) / (self.nu * self.m)
    }

    /// `d(rho_x)/d(rho)`, the local stiffness of the ODE.
    #[inline]
    pub fn jacobian(&self, rho: f64) -> f64 {
        let p = self.law.p(rho);
        (2.0 * self.b * rho - self.m * self.m - 2.0 * rho * p - rho * rho * self.law.dp(rho)) / (self.nu * self.m)
    }
}

/// Tunables for [`solve_steady`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyOptions {
    /// Number of grid cells (the grid has `cells + 1` nodes). Acts as a
    /// minimum: stiff profiles are refined until `h * stiffness <= max_step_stiffness`.
    pub cells: usize,
    pub max_cells: usize,
    pub max_step_stiffness: f64,
    pub tol_bc: f64,
    pub tol_flux: f64,
    pub max_evals: usize,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        SteadyOptions {
            cells: 2048,
            max_cells: 1 << 20,
            max_step_stiffness: 0.02,
            tol_bc: 1e-10,
            tol_flux: 1e-8,
            max_evals: 400,
        }
    }
}

const FLOOR_FACTOR: f64 = 1e-8;
const CEILING_FACTOR: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sweep {
    /// From `x = 0` with `rho(0) = rho0`.
    Forward,
    /// From `x = 1` with `rho(1) = m / u1`.
    Backward,
}

/// RK4 on the uniform grid. Returns node values ordered by increasing `x`.
fn shoot(ode: &DensityOde, params: &FlowParams, cells: usize, sweep: Sweep) -> Result<Vec<f64>, SteadyError> {
    let h = 1.0 / cells as f64;
    let floor_rho = FLOOR_FACTOR * params.rho0;
    let ceiling_rho = CEILING_FACTOR * params.rho0;
    let (start, dx) = match sweep {
        Sweep::Forward => (params.rho0, h),
        Sweep::Backward => (params.outflow_density(), -h),
    };
    let mut rho = Vec::with_capacity(cells + 1);
    rho.push(start);
    let mut y = start;
    for i in 0..cells {
        let k1 = ode.rhs(y);
        let k2 = ode.rhs(y + 0.5 * dx * k1);
        let k3 = ode.rhs(y + 0.5 * dx * k2);
        let k4 = ode.rhs(y + dx * k3);
        y += dx / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !(y > floor_rho && y < ceiling_rho) {
            let step = (i + 1) as f64 * h;
            let x = if sweep == Sweep::Forward { step } else { 1.0 - step };
            return Err(SteadyError::OutsideDomain { b: ode.b, x, high: !(y <= floor_rho) });
        }
        rho.push(y);
    }
    if sweep == Sweep::Backward {
        rho.reverse();
    }
    Ok(rho)
}

/// Integrates the density ODE from `rho(0) = rho0` for a given `b`.
///
/// Fails with [`SteadyError::OutsideDomain`] at the first node where the
/// density leaves `(1e-8 rho0, 1e8 rho0)`.
pub fn integrate_density_ode(
    b: f64,
    params: &FlowParams,
    law: &PressureLaw,
    cells: usize,
) -> Result<Vec<f64>, SteadyError> {
    params.validate()?;
    if cells < 2 {
        return Err(SteadyError::GridTooSmall(cells));
    }
    shoot(&DensityOde::new(params, law, b), params, cells, Sweep::Forward)
}

/// Shooting residual `rho(1) - m / u1`; increasing in `b` on its domain.
pub fn phi(b: f64, params: &FlowParams, law: &PressureLaw, cells: usize) -> Result<f64, SteadyError> {
    let rho = integrate_density_ode(b, params, law, cells)?;
    Ok(rho[cells] - params.outflow_density())
}

/// Residual of a shot, oriented so that it increases with `b`. Escaping the
/// admissible density range is reported as a signed infinity.
fn residual(ode: &DensityOde, params: &FlowParams, cells: usize, sweep: Sweep) -> f64 {
    match (shoot(ode, params, cells, sweep), sweep) {
        (Ok(rho), Sweep::Forward) => rho[cells] - params.outflow_density(),
        (Ok(rho), Sweep::Backward) => params.rho0 - rho[0],
        (Err(SteadyError::OutsideDomain { high, .. }), Sweep::Forward) => {
            if high {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            }
        }
        // Backward, a large b drives the density down towards x = 0.
        (Err(SteadyError::OutsideDomain { high, .. }), Sweep::Backward) => {
            if high {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            }
        }
        (Err(_), _) => f64::NAN,
    }
}

struct RootSearch<'a> {
    params: &'a FlowParams,
    law: &'a PressureLaw,
    cells: usize,
    sweep: Sweep,
    tol: f64,
    evals: usize,
    max_evals: usize,
    best: (f64, f64),
}

impl<'a> RootSearch<'a> {
    fn new(
        params: &'a FlowParams,
        law: &'a PressureLaw,
        cells: usize,
        sweep: Sweep,
        opts: &SteadyOptions,
        b0: f64,
    ) -> Self {
        RootSearch {
            params,
            law,
            cells,
            sweep,
            tol: opts.tol_bc,
            evals: 0,
            max_evals: opts.max_evals,
            best: (b0, f64::INFINITY),
        }
    }

    fn eval(&mut self, b: f64) -> f64 {
        self.evals += 1;
        let g = residual(&DensityOde::new(self.params, self.law, b), self.params, self.cells, self.sweep);
        if g.abs() < self.best.1.abs() {
            self.best = (b, g);
        }
        g
    }

    fn exhausted(&self) -> bool {
        self.evals >= self.max_evals
    }

    fn fd_slope(&mut self, b: f64, g: f64) -> Option<f64> {
        let db = 1e-7 * b.abs().max(1.0);
        let g2 = self.eval(b + db);
        let slope = (g2 - g) / db;
        (slope.is_finite() && slope > 0.0).then_some(slope)
    }

    /// Plain Newton from `b`; `None` once it leaves the domain or stalls.
    fn newton(&mut self, mut b: f64, iters: usize) -> Option<f64> {
        let mut g = self.eval(b);
        for _ in 0..iters {
            if !g.is_finite() {
                return None;
            }
            if g.abs() <= self.tol {
                return Some(b);
            }
            let slope = self.fd_slope(b, g)?;
            let next = b - g / slope;
            let g_next = self.eval(next);
            if !(g_next.abs() < g.abs()) {
                return None;
            }
            b = next;
            g = g_next;
        }
        (g.abs() <= self.tol).then_some(b)
    }

    /// Finds `lo < hi` with `g(lo) < 0 < g(hi)` by doubling steps away from `b0`.
    fn bracket(&mut self, b0: f64, g0: f64, first_step: f64) -> Option<(f64, f64, f64, f64)> {
        let mut step = first_step * b0.abs().max(1.0);
        let downward = g0 > 0.0;
        let (mut near, mut g_near) = (b0, g0);
        while !self.exhausted() {
            let b = if downward { b0 - step } else { b0 + step };
            let g = self.eval(b);
            if g.is_nan() {
                return None;
            }
            if (g > 0.0) != downward || g == 0.0 {
                return Some(if downward { (b, near, g, g_near) } else { (near, b, g_near, g) });
            }
            near = b;
            g_near = g;
            step *= 2.0;
        }
        None
    }

    /// Bisection safeguarded Newton inside a bracket.
    fn hybrid(
        &mut self,
        mut lo: f64,
        mut hi: f64,
        mut g_lo: f64,
        mut g_hi: f64,
        prime_width: f64,
    ) -> Result<f64, SteadyError> {
        // Pure bisection until the bracket is narrow (priming for small viscosity).
        while hi - lo > prime_width * lo.abs().max(hi.abs()).max(1.0) && !self.exhausted() {
            let mid = 0.5 * (lo + hi);
            let g = self.eval(mid);
            if g.abs() <= self.tol {
                return Ok(mid);
            }
            if g < 0.0 {
                (lo, g_lo) = (mid, g)
            } else {
                (hi, g_hi) = (mid, g)
            }
        }
        let mut b = if g_lo.is_finite() && (!g_hi.is_finite() || g_lo.abs() < g_hi.abs()) {
            lo
        } else if g_hi.is_finite() {
            hi
        } else {
            0.5 * (lo + hi)
        };
        let mut g = if b == lo {
            g_lo
        } else if b == hi {
            g_hi
        } else {
            self.eval(b)
        };
        while !self.exhausted() {
            if g.abs() <= self.tol {
                return Ok(b);
            }
            if g.is_finite() {
                if g < 0.0 {
                    (lo, g_lo) = (b, g)
                } else {
                    (hi, g_hi) = (b, g)
                }
            }
            if hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
                break;
            }
            let newton = if g.is_finite() { self.fd_slope(b, g).map(|s| b - g / s) } else { None };
            b = match newton {
                Some(n) if n > lo && n < hi => n,
                _ => 0.5 * (lo + hi),
            };
            g = self.eval(b);
        }
        let _ = (g_lo, g_hi);
        Err(SteadyError::NonConvergence { lo, hi, residual: self.best.1 })
    }

    fn solve(&mut self, b0: f64, first_step: f64, newton_first: bool) -> Result<f64, SteadyError> {
        if newton_first {
            if let Some(b) = self.newton(b0, 12) {
                return Ok(b);
            }
        }
        let g0 = self.eval(b0);
        if g0.abs() <= self.tol {
            return Ok(b0);
        }
        if g0.is_nan() {
            return Err(SteadyError::NonConvergence { lo: b0, hi: b0, residual: g0 });
        }
        let (lo, hi, g_lo, g_hi) = self.bracket(b0, g0, first_step).ok_or(SteadyError::NonConvergence {
            lo: b0,
            hi: b0,
            residual: self.best.1,
        })?;
        let prime = if newton_first { 1e-2 } else { 1e-6 };
        self.hybrid(lo, hi, g_lo, g_hi, prime)
    }
}

fn find_b(
    params: &FlowParams,
    law: &PressureLaw,
    cells: usize,
    opts: &SteadyOptions,
    warm: Option<(f64, Sweep)>,
) -> Result<(f64, Sweep), SteadyError> {
    let b0 = params.b_equilibrium(law);
    let newton_first = params.nu > 1.0;
    let mut last_err = None;
    // A root from a coarser grid only moves by the discretization error.
    if let Some((b, sweep)) = warm {
        let mut search = RootSearch::new(params, law, cells, sweep, opts, b);
        if let Ok(found) = search.solve(b, 1e-8, false) {
            return Ok((found, sweep));
        }
    }
    // Forward shooting is the natural direction; when the profile is
    // dominated by a supersonic layer the forward map is too ill-conditioned
    // to hit the boundary tolerance and the backward shot is well posed.
    for sweep in [Sweep::Forward, Sweep::Backward] {
        let mut search = RootSearch::new(params, law, cells, sweep, opts, b0);
        match search.solve(b0, 1e-2, newton_first) {
            Ok(b) => return Ok((b, sweep)),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap())
}

/// Whether `u_hat` increases, decreases or stays constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlopeClass {
    Constant,
    /// `u_x > 0`.
    PositiveSlope,
    /// `u_x < 0`.
    NegativeSlope,
}

impl SlopeClass {
    /// Display label: "compressive" for `u_x > 0`, "expansive" for `u_x < 0`.
    ///
    /// The figure captions of the source material use the opposite words;
    /// all logic keys off the sign, never the label.
    pub fn label(&self) -> &'static str {
        match self {
            SlopeClass::Constant => "constant",
            SlopeClass::PositiveSlope => "compressive",
            SlopeClass::NegativeSlope => "expansive",
        }
    }
}

/// Profile values at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub rho: f64,
    pub u: f64,
    pub rho_x: f64,
    pub u_x: f64,
}

/// A discretized steady solution on the uniform grid `x_i = i / cells`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyProfile {
    params: FlowParams,
    law: PressureLaw,
    b: f64,
    m: f64,
    x: Vec<f64>,
    rho: Vec<f64>,
    u: Vec<f64>,
    rho_x: Vec<f64>,
    u_x: Vec<f64>,
    tol_flux: f64,
}

impl SteadyProfile {
    /// Builds a profile from node densities; every other array is derived
    /// from `rho`, `b` and the ODE, so two profiles built from identical
    /// inputs are bit-identical.
    pub fn from_parts(params: FlowParams, law: PressureLaw, b: f64, rho: Vec<f64>) -> Result<Self, SteadyError> {
        params.validate()?;
        if rho.len() < 3 {
            return Err(SteadyError::GridTooSmall(rho.len().saturating_sub(1)));
        }
        if rho.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(SteadyError::Invariant("density must be positive and finite"));
        }
        let cells = rho.len() - 1;
        let constant = params.u0 == params.u1;
        if constant && b == params.b_equilibrium(&law) && rho.iter().all(|&r| r == params.rho0) {
            return Ok(Self::constant(params, law, cells));
        }
        let m = params.momentum();
        let ode = DensityOde::new(&params, &law, b);
        let x = (0..=cells).map(|i| i as f64 / cells as f64).collect();
        let rho_x: Vec<f64> =
            if constant { alloc::vec![0.0; cells + 1] } else { rho.iter().map(|&r| ode.rhs(r)).collect() };
        let u = rho.iter().map(|&r| m / r).collect();
        let u_x = rho.iter().zip(&rho_x).map(|(&r, &rx)| -m * rx / (r * r)).collect();
        Ok(SteadyProfile { params, law, b, m, x, rho, u, rho_x, u_x, tol_flux: SteadyOptions::default().tol_flux })
    }

    /// Tolerance used by [`classify`] and the invariant checks.
    pub fn with_tol_flux(mut self, tol_flux: f64) -> Self {
        self.tol_flux = tol_flux;
        self
    }

    fn constant(params: FlowParams, law: PressureLaw, cells: usize) -> Self {
        let b = params.b_equilibrium(&law);
        let m = params.momentum();
        SteadyProfile {
            params,
            law,
            b,
            m,
            x: (0..=cells).map(|i| i as f64 / cells as f64).collect(),
            rho: alloc::vec![params.rho0; cells + 1],
            u: alloc::vec![params.u0; cells + 1],
            rho_x: alloc::vec![0.0; cells + 1],
            u_x: alloc::vec![0.0; cells + 1],
            tol_flux: SteadyOptions::default().tol_flux,
        }
    }

    pub fn params(&self) -> &FlowParams {
        &self.params
    }
    pub fn law(&self) -> &PressureLaw {
        &self.law
    }
    /// Integration constant of the momentum equation.
    pub fn b(&self) -> f64 {
        self.b
    }
    /// Momentum flux `rho0 * u0`.
    pub fn m(&self) -> f64 {
        self.m
    }
    pub fn cells(&self) -> usize {
        self.rho.len() - 1
    }
    pub fn x(&self) -> &[f64] {
        &self.x
    }
    pub fn rho(&self) -> &[f64] {
        &self.rho
    }
    pub fn u(&self) -> &[f64] {
        &self.u
    }
    pub fn rho_x(&self) -> &[f64] {
        &self.rho_x
    }
    pub fn u_x(&self) -> &[f64] {
        &self.u_x
    }
    pub fn tol_flux(&self) -> f64 {
        self.tol_flux
    }
    pub fn is_constant(&self) -> bool {
        self.params.u0 == self.params.u1
    }

    pub fn ode(&self) -> DensityOde {
        DensityOde::new(&self.params, &self.law, self.b)
    }

    pub fn rho_range(&self) -> (f64, f64) {
        self.rho.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| (lo.min(r), hi.max(r)))
    }

    pub fn u_range(&self) -> (f64, f64) {
        self.u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| (lo.min(r), hi.max(r)))
    }

    /// `max(|rho_x|_inf, |u_x|_inf)`.
    pub fn slope_amplitude(&self) -> f64 {
        self.rho_x.iter().chain(&self.u_x).fold(0.0, |a, v| a.max(v.abs()))
    }

    /// `max_i |rho_i u_i - m|`.
    pub fn flux_defect(&self) -> f64 {
        self.rho.iter().zip(&self.u).fold(0.0, |a, (r, u)| a.max((r * u - self.m).abs()))
    }

    /// `|rho(1) - m / u1|`.
    pub fn outflow_defect(&self) -> f64 {
        (self.rho[self.cells()] - self.params.outflow_density()).abs()
    }

    /// Largest `|d(rho_x)/d(rho)|` over the nodes.
    pub fn stiffness(&self) -> f64 {
        if self.is_constant() {
            return 0.0;
        }
        let ode = self.ode();
        self.rho.iter().fold(0.0, |a, &r| a.max(ode.jacobian(r).abs()))
    }

    /// Quintic Hermite interpolation of the density using the first and
    /// second derivatives given by the ODE at the nodes; the remaining fields follow from the ODE and
    /// `rho u = m`. Node positions return the stored values exactly.
    pub fn sample(&self, x: f64) -> Result<ProfilePoint, SteadyError> {
        if !(0.0..=1.0).contains(&x) {
            return Err(SteadyError::OutOfRange(x));
        }
        Ok(self.sample_unchecked(x))
    }

    #[inline]
    pub(crate) fn sample_unchecked(&self, x: f64) -> ProfilePoint {
        let cells = self.cells();
        let s = x * cells as f64;
        let i = (floor(s) as usize).min(cells - 1);
        let t = s - i as f64;
        if t == 0.0 {
            return self.node(i);
        }
        if t == 1.0 {
            return self.node(i + 1);
        }
        if self.is_constant() {
            return ProfilePoint { rho: self.params.rho0, u: self.params.u0, rho_x: 0.0, u_x: 0.0 };
        }
        let h = 1.0 / cells as f64;
        let ode = self.ode();
        let (y0, y1) = (self.rho[i], self.rho[i + 1]);
        let (d0, d1) = (self.rho_x[i] * h, self.rho_x[i + 1] * h);
        // Second derivatives from the ODE: rho_xx = f'(rho) f(rho).
        let (c0, c1) = (ode.jacobian(y0) * d0 * h, ode.jacobian(y1) * d1 * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        let t5 = t4 * t;
        let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
        let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
        let h2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
        let k2 = 0.5 * (t3 - 2.0 * t4 + t5);
        let k1 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
        let k0 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
        let rho = h0 * y0 + h1 * d0 + h2 * c0 + k2 * c1 + k1 * d1 + k0 * y1;
        let rho_x = ode.rhs(rho);
        ProfilePoint { rho, u: self.m / rho, rho_x, u_x: -self.m * rho_x / (rho * rho) }
    }

    #[inline]
    pub fn node(&self, i: usize) -> ProfilePoint {
        ProfilePoint { rho: self.rho[i], u: self.u[i], rho_x: self.rho_x[i], u_x: self.u_x[i] }
    }

    /// Checks the invariants every solved profile must satisfy.
    pub fn check_invariants(&self, tol_bc: f64) -> Result<(), SteadyError> {
        if self.rho.iter().chain(&self.u).any(|v| !(*v > 0.0)) {
            return Err(SteadyError::Invariant("rho and u must be positive"));
        }
        if self.flux_defect() > self.tol_flux {
            return Err(SteadyError::Invariant("momentum flux is not constant"));
        }
        if self.rho[0] != self.params.rho0 {
            return Err(SteadyError::Invariant("rho(0) differs from rho0"));
        }
        if self.outflow_defect() > tol_bc {
            return Err(SteadyError::Invariant("rho(1) misses m / u1"));
        }
        classify(self)?;
        Ok(())
    }

    /// Node arrays in physical orientation. For [`Orientation::Reflected`]
    /// the grid is traversed backwards and the velocity negated.
    pub fn physical(&self, orientation: Orientation) -> PhysicalProfile {
        match orientation {
            Orientation::Canonical => PhysicalProfile {
                x: self.x.clone(),
                rho: self.rho.clone(),
                u: self.u.clone(),
                rho_x: self.rho_x.clone(),
                u_x: self.u_x.clone(),
            },
            Orientation::Reflected => {
                let rev = |v: &[f64], sign: f64| v.iter().rev().map(|a| sign * a).collect::<Vec<f64>>();
                PhysicalProfile {
                    x: self.x.clone(),
                    rho: rev(&self.rho, 1.0),
                    u: rev(&self.u, -1.0),
                    // d/dx f(1 - x) = -f'(1 - x); the velocity picks up a second sign.
                    rho_x: rev(&self.rho_x, -1.0),
                    u_x: rev(&self.u_x, 1.0),
                }
            }
        }
    }
}

/// Profile arrays in the user's orientation (see [`normalize_bc`]).
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalProfile {
    pub x: Vec<f64>,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub rho_x: Vec<f64>,
    pub u_x: Vec<f64>,
}

/// Computes the unique steady solution by shooting on `b`.
///
/// Newton iteration on `phi` with a one-sided finite-difference slope starts
/// from `b0 = rho0 u0^2 + P(rho0)`. If it leaves the domain of `phi` or
/// stalls, or when `nu <= 1`, a bracket is grown geometrically from `b0` and
/// bisection primes a safeguarded Newton iteration. Stiff profiles are
/// recomputed on finer grids.
pub fn solve_steady(
    params: &FlowParams,
    law: &PressureLaw,
    opts: &SteadyOptions,
) -> Result<SteadyProfile, SteadyError> {
    params.validate()?;
    if opts.cells < 2 {
        return Err(SteadyError::GridTooSmall(opts.cells));
    }
    if params.u0 == params.u1 {
        return Ok(SteadyProfile::constant(*params, *law, opts.cells).with_tol_flux(opts.tol_flux));
    }
    // The ODE at b0 gives a first estimate of the stiffness at both ends.
    let ode0 = DensityOde::new(params, law, params.b_equilibrium(law));
    let k0 = ode0.jacobian(params.rho0).abs().max(ode0.jacobian(params.outflow_density()).abs());
    let mut cells = opts.cells;
    let mut warm = None;
    while k0 / (cells as f64) > opts.max_step_stiffness && cells < opts.max_cells {
        cells *= 2;
    }
    cells = cells.min(opts.max_cells).max(opts.cells);
    loop {
        let (b, sweep) = match find_b(params, law, cells, opts, warm) {
            Ok(found) => found,
            // RK4 itself may be unstable on a coarse grid.
            Err(_) if cells < opts.max_cells => {
                cells = (cells * 4).min(opts.max_cells);
                continue;
            }
            Err(e) => return Err(e),
        };
        let ode = DensityOde::new(params, law, b);
        let mut rho = shoot(&ode, params, cells, sweep)?;
        rho[0] = params.rho0;
        let mut profile = SteadyProfile::from_parts(*params, *law, b, rho)?;
        profile.tol_flux = opts.tol_flux;
        let stiffness = profile.stiffness();
        if stiffness / cells as f64 <= opts.max_step_stiffness || cells >= opts.max_cells {
            let (lo, hi) = profile.rho_range();
            law.check_monotone(lo, hi, 32)?;
            profile.check_invariants(opts.tol_bc)?;
            return Ok(profile);
        }
        warm = Some((b, sweep));
        while stiffness / (cells as f64) > opts.max_step_stiffness && cells < opts.max_cells {
            cells *= 2;
        }
        cells = cells.min(opts.max_cells);
    }
}

/// Classifies the sign of `u_x`. Values within `tol_flux` of zero (rounding
/// noise where the profile sits on an equilibrium of the ODE) are compatible
/// with either sign.
pub fn classify(profile: &SteadyProfile) -> Result<SlopeClass, SteadyError> {
    let (min, max) = profile.u_x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let tol = profile.tol_flux;
    match (max > tol, min < -tol) {
        (false, false) => Ok(SlopeClass::Constant),
        (true, false) => Ok(SlopeClass::PositiveSlope),
        (false, true) => Ok(SlopeClass::NegativeSlope),
        (true, true) => Err(SteadyError::MixedSlope { min, max }),
    }
}

/// Sound speed `sqrt(P'(rho))`.
#[inline]
pub fn sound_speed(law: &PressureLaw, rho: f64) -> f64 {
    sqrt(law.dp(rho))
}
