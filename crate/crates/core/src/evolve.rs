//! Time-dependent solver for the nonlinear equations
//!
//! ```text
//! rho_t + (rho u)_x = 0
//! (rho u)_t + (rho u^2 + P(rho))_x = nu u_xx
//! ```
//!
//! on a uniform grid. Continuity is advanced by a conservative first-order
//! upwind flux, momentum in velocity form with explicit upwind convection,
//! a centered pressure gradient, and backward-Euler viscosity (one
//! tridiagonal solve per step). The viscous solve is written for the
//! increment of `u`, so a constant state produces identically zero updates.
//!
//! Perturbation norms are measured against a companion run of the
//! unperturbed sampled profile stepped in lockstep; this removes the
//! scheme's steady truncation residual from the histories exactly.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use thiserror::Error;

use crate::diagnostics::sobolev_norm;
use crate::math::{ceil, exp, ln, round, sin, sqrt};
use crate::steady::SteadyProfile;
use crate::thermo::PressureLaw;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvolveError {
    #[error("density became non-positive at node {node}, t = {t}")]
    BlowUp { t: f64, node: usize },
    #[error("perturbation amplitude {eps} exceeds 0.1 * min rho = {limit}")]
    AmplitudeTooLarge { eps: f64, limit: f64 },
    #[error("invalid evolve parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("grid needs at least 4 cells, got {0}")]
    GridTooSmall(usize),
    #[error("state and reference grids differ ({0} vs {1} nodes)")]
    GridMismatch(usize, usize),
    #[error("only {available} samples above the floor in the fit window, need {needed}")]
    DecayedBelowFloor { available: usize, needed: usize },
}

/// Density and velocity on `cells + 1` uniform nodes of `[0, 1]` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct GasState {
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub t: f64,
}

impl GasState {
    pub fn new(rho: Vec<f64>, u: Vec<f64>, t: f64) -> Result<Self, EvolveError> {
        if rho.len() != u.len() {
            return Err(EvolveError::GridMismatch(rho.len(), u.len()));
        }
        if rho.len() < 5 {
            return Err(EvolveError::GridTooSmall(rho.len().saturating_sub(1)));
        }
        if let Some(node) = rho.iter().position(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(EvolveError::BlowUp { t, node });
        }
        Ok(GasState { rho, u, t })
    }

    /// The steady profile sampled on `cells + 1` nodes at `t = 0`.
    pub fn from_profile(profile: &SteadyProfile, cells: usize) -> Result<Self, EvolveError> {
        if cells < 4 {
            return Err(EvolveError::GridTooSmall(cells));
        }
        let p = profile.params();
        let mut rho = Vec::with_capacity(cells + 1);
        let mut u = Vec::with_capacity(cells + 1);
        for i in 0..=cells {
            let pt = profile.sample_unchecked(if i == cells { 1.0 } else { i as f64 / cells as f64 });
            rho.push(pt.rho);
            u.push(pt.u);
        }
        rho[0] = p.rho0;
        u[0] = p.u0;
        u[cells] = p.u1;
        GasState::new(rho, u, 0.0)
    }

    pub fn cells(&self) -> usize {
        self.rho.len() - 1
    }

    pub fn h(&self) -> f64 {
        1.0 / self.cells() as f64
    }

    pub fn x(&self) -> Vec<f64> {
        let n = self.cells();
        (0..=n).map(|i| i as f64 / n as f64).collect()
    }

    /// `max(|u| + sqrt(P'(rho)))` over the grid.
    pub fn max_wave_speed(&self, law: &PressureLaw) -> f64 {
        self.rho.iter().zip(&self.u).map(|(r, u)| u.abs() + sqrt(law.dp(*r))).fold(0.0, f64::max)
    }

    /// Time step `cfl * h / max wave speed`.
    pub fn cfl_step(&self, law: &PressureLaw, cfl: f64) -> f64 {
        cfl * self.h() / self.max_wave_speed(law)
    }
}

/// Smooth bump supported in `[0.25, 0.75]` with `k` sign changes of the
/// oscillating factor, scaled to unit sup-norm.
pub fn bump(x: f64, k: u32) -> f64 {
    bump_raw(x, k) / bump_sup(k)
}

fn bump_raw(x: f64, k: u32) -> f64 {
    if !(x > 0.25 && x < 0.75) {
        return 0.0;
    }
    let s = (x - 0.25) / 0.5;
    let w = 4.0 * s * (1.0 - s);
    let w2 = w * w;
    let w4 = w2 * w2;
    w4 * w4 * sin(k as f64 * PI * s)
}

fn bump_sup(k: u32) -> f64 {
    // Dense sampling, then golden-section polish around the best sample.
    let n = 1 << 14;
    let f = |x: f64| bump_raw(x, k).abs();
    let (mut best, mut arg) = (0.0, 0.5);
    for i in 0..=n {
        let x = 0.25 + 0.5 * i as f64 / n as f64;
        let v = f(x);
        if v > best {
            best = v;
            arg = x;
        }
    }
    let g = 0.5 * (sqrt(5.0) - 1.0);
    let (mut a, mut b) = (arg - 0.5 / n as f64, arg + 0.5 / n as f64);
    for _ in 0..60 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best.max(f(0.5 * (a + b)))
}

/// Steady profile plus `eps * bump_k` in both density and velocity.
pub fn perturb(profile: &SteadyProfile, eps: f64, k: u32, cells: usize) -> Result<GasState, EvolveError> {
    if k < 1 {
        return Err(EvolveError::InvalidParameter { name: "mode", value: k as f64 });
    }
    let limit = 0.1 * profile.rho_range().0;
    if !(eps.abs() <= limit) {
        return Err(EvolveError::AmplitudeTooLarge { eps, limit });
    }
    let mut state = GasState::from_profile(profile, cells)?;
    if eps != 0.0 {
        let norm = bump_sup(k);
        for i in 0..=cells {
            let b = eps * bump_raw(i as f64 / cells as f64, k) / norm;
            state.rho[i] += b;
            state.u[i] += b;
        }
    }
    Ok(state)
}

/// Scratch buffers reused between steps.
#[derive(Debug, Clone, Default)]
pub struct StepWorkspace {
    rho: Vec<f64>,
    rhs: Vec<f64>,
    p: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

/// Advances `state` by `dt` in place.
pub fn step_in_place(
    state: &mut GasState,
    dt: f64,
    law: &PressureLaw,
    nu: f64,
    ws: &mut StepWorkspace,
) -> Result<(), EvolveError> {
    let n = state.cells();
    let h = state.h();
    let (rho, u) = (&state.rho, &mut state.u);
    ws.rho.clear();
    ws.rho.extend_from_slice(rho);
    let new_rho = &mut ws.rho;
    // Continuity: upwind flux through interfaces i + 1/2.
    let flux = |i: usize| {
        let a = 0.5 * (u[i] + u[i + 1]);
        if a >= 0.0 {
            a * rho[i]
        } else {
            a * rho[i + 1]
        }
    };
    let mut left = flux(0);
    for i in 1..n {
        let right = flux(i);
        new_rho[i] = rho[i] - dt / h * (right - left);
        left = right;
    }
    new_rho[n] = new_rho[n - 1];
    if let Some(node) = new_rho.iter().position(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(EvolveError::BlowUp { t: state.t + dt, node });
    }
    // Momentum increment: (1 - dt nu/rho D2) du = dt (-conv - P_x/rho + nu/rho D2 u).
    ws.rhs.resize(n + 1, 0.0);
    ws.diag.resize(n + 1, 0.0);
    ws.upper.resize(n + 1, 0.0);
    ws.p.clear();
    ws.p.extend(rho.iter().map(|r| law.p(*r)));
    let inv_h2 = 1.0 / (h * h);
    for i in 1..n {
        let conv = if u[i] >= 0.0 { u[i] * (u[i] - u[i - 1]) / h } else { u[i] * (u[i + 1] - u[i]) / h };
        let px = (ws.p[i + 1] - ws.p[i - 1]) / (2.0 * h * rho[i]);
        let kappa = nu / new_rho[i];
        let visc = kappa * (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_h2;
        ws.rhs[i] = dt * (visc - conv - px);
        ws.diag[i] = 1.0 + 2.0 * dt * kappa * inv_h2;
        ws.upper[i] = -dt * kappa * inv_h2;
    }
    // Thomas algorithm; the sub-diagonal equals the super-diagonal row-wise
    // and the boundary increments are zero.
    let (diag, upper, rhs) = (&mut ws.diag, &ws.upper, &mut ws.rhs);
    for i in 2..n {
        let w = upper[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for i in (1..n - 1).rev() {
        rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
    }
    for i in 1..n {
        u[i] += rhs[i];
    }
    core::mem::swap(&mut state.rho, &mut ws.rho);
    state.t += dt;
    Ok(())
}

/// One time step; boundary values are carried over from `state`.
pub fn step(state: &GasState, dt: f64, law: &PressureLaw, nu: f64) -> Result<GasState, EvolveError> {
    let mut next = state.clone();
    step_in_place(&mut next, dt, law, nu, &mut StepWorkspace::default())?;
    Ok(next)
}

/// Perturbation norms at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSample {
    pub t: f64,
    pub l2: f64,
    pub h1: f64,
    /// `sqrt(|drho|_{H^2}^2 + |du|_{H^3}^2)`.
    pub h2h3: f64,
}

/// Norms of `(state - reference)`.
pub fn perturbation_norms(state: &GasState, reference: &GasState) -> NormSample {
    let h = state.h();
    let dr: Vec<f64> = state.rho.iter().zip(&reference.rho).map(|(a, b)| a - b).collect();
    let du: Vec<f64> = state.u.iter().zip(&reference.u).map(|(a, b)| a - b).collect();
    let n = |f: &[f64], k| sobolev_norm(f, h, k);
    let hyp = |a: f64, b: f64| sqrt(a * a + b * b);
    NormSample {
        t: state.t,
        l2: hyp(n(&dr, 0), n(&du, 0)),
        h1: hyp(n(&dr, 1), n(&du, 1)),
        h2h3: hyp(n(&dr, 2), n(&du, 3)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub t_final: f64,
    /// Fixed time step; `None` picks `cfl * h / max wave speed` at `t = 0`.
    pub dt: Option<f64>,
    pub cfl: f64,
    /// Record norms every `stride` steps.
    pub stride: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions { t_final: 20.0, dt: None, cfl: 0.25, stride: 100 }
    }
}

/// Steps `initial` and the sampled `profile` together up to `t_final` and
/// records perturbation norms at `t = 0`, every `stride` steps, and at the
/// end.
pub fn evolve(
    initial: &GasState,
    profile: &SteadyProfile,
    opts: &EvolveOptions,
) -> Result<Vec<NormSample>, EvolveError> {
    let law = *profile.law();
    let nu = profile.params().nu;
    let mut reference = GasState::from_profile(profile, initial.cells())?;
    let mut state = initial.clone();
    let dt_target = match opts.dt {
        Some(dt) => dt,
        None => state.cfl_step(&law, opts.cfl).min(reference.cfl_step(&law, opts.cfl)),
    };
    if !(dt_target > 0.0 && dt_target.is_finite()) {
        return Err(EvolveError::InvalidParameter { name: "dt", value: dt_target });
    }
    if !(opts.t_final >= 0.0 && opts.t_final.is_finite()) {
        return Err(EvolveError::InvalidParameter { name: "T", value: opts.t_final });
    }
    let steps = ceil(opts.t_final / dt_target) as usize;
    let dt = if steps > 0 { opts.t_final / steps as f64 } else { 0.0 };
    let stride = opts.stride.max(1);
    let mut history = vec![perturbation_norms(&state, &reference)];
    let mut ws = StepWorkspace::default();
    for k in 1..=steps {
        step_in_place(&mut state, dt, &law, nu, &mut ws)?;
        step_in_place(&mut reference, dt, &law, nu, &mut ws)?;
        // Both runs share the same time grid; assign exactly.
        let t = k as f64 * dt;
        state.t = t;
        reference.t = t;
        if k % stride == 0 || k == steps {
            history.push(perturbation_norms(&state, &reference));
        }
    }
    Ok(history)
}

/// Least-squares exponential fit `norm ~ c exp(-theta t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub theta: f64,
    pub c: f64,
    pub window: (f64, f64),
    /// Root-mean-square misfit of `ln(norm)`.
    pub residual: f64,
    pub samples: usize,
}

/// Fits `ln(norm)` linearly in `t` over the last `tail_fraction` of the
/// samples that lie above `floor`. Samples after the first one at or below
/// the floor are dropped (the window shrinks to the resolved part).
pub fn fit_decay(history: &[(f64, f64)], tail_fraction: f64, floor: f64) -> Result<DecayFit, EvolveError> {
    const NEEDED: usize = 10;
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(EvolveError::InvalidParameter { name: "tail_fraction", value: tail_fraction });
    }
    let resolved = history.iter().position(|&(_, v)| !(v > floor && v.is_finite())).unwrap_or(history.len());
    let usable = &history[..resolved];
    let take = (round(tail_fraction * usable.len() as f64) as usize).min(usable.len());
    let window = &usable[usable.len() - take..];
    if window.len() < NEEDED {
        return Err(EvolveError::DecayedBelowFloor { available: window.len(), needed: NEEDED });
    }
    let n = window.len() as f64;
    let mean_t = window.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = window.iter().map(|p| ln(p.1)).sum::<f64>() / n;
    let sxx: f64 = window.iter().map(|p| (p.0 - mean_t) * (p.0 - mean_t)).sum();
    let sxy: f64 = window.iter().map(|p| (p.0 - mean_t) * (ln(p.1) - mean_y)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = mean_y - slope * mean_t;
    let sse: f64 = window
        .iter()
        .map(|p| {
            let r = ln(p.1) - intercept - slope * p.0;
            r * r
        })
        .sum();
    Ok(DecayFit {
        theta: -slope,
        c: exp(intercept),
        window: (window[0].0, window[window.len() - 1].0),
        residual: sqrt(sse / n),
        samples: window.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steady::{solve_steady, FlowParams, SteadyOptions};

    const LAW: PressureLaw = PressureLaw::DIATOMIC;

    fn profile(nu: f64, rho0: f64, u0: f64, u1: f64) -> SteadyProfile {
        solve_steady(&FlowParams::new(nu, rho0, u0, u1).unwrap(), &LAW, &SteadyOptions::default()).unwrap()
    }

    #[test]
    fn bump_has_unit_sup_and_compact_support() {
        for k in 1..5 {
            let n = 1 << 12;
            let sup = (0..=n).map(|i| bump(i as f64 / n as f64, k).abs()).fold(0.0, f64::max);
            assert!(sup <= 1.0 + 1e-12 && sup > 0.999, "k={k}: {sup}");
            assert_eq!(bump(0.1, k), 0.0);
            assert_eq!(bump(0.25, k), 0.0);
            assert_eq!(bump(0.9, k), 0.0);
        }
    }

    #[test]
    fn zero_amplitude_is_the_sampled_profile() {
        let prof = profile(1.0, 2.0, 1.5, 1.0);
        assert_eq!(perturb(&prof, 0.0, 1, 64).unwrap(), GasState::from_profile(&prof, 64).unwrap());
        assert!(perturb(&prof, 0.5, 1, 64).is_err());
        assert!(perturb(&prof, 0.01, 0, 64).is_err());
    }

    #[test]
    fn perturbation_leaves_boundary_region_untouched() {
        let prof = profile(1.0, 2.0, 1.5, 1.0);
        let a = perturb(&prof, 0.01, 3, 256).unwrap();
        let b = GasState::from_profile(&prof, 256).unwrap();
        for i in (0..64).chain(193..=256) {
            assert_eq!(a.rho[i], b.rho[i]);
            assert_eq!(a.u[i], b.u[i]);
        }
        // (rho u)_x at x = 0 is the unperturbed flux derivative.
        let flux = |s: &GasState, i: usize| s.rho[i] * s.u[i];
        assert_eq!(flux(&a, 1) - flux(&a, 0), flux(&b, 1) - flux(&b, 0));
    }

    #[test]
    fn constant_state_is_preserved_exactly() {
        let prof = profile(0.7, 2.0, 1.5, 1.5);
        let s0 = GasState::from_profile(&prof, 64).unwrap();
        let dt = s0.cfl_step(&LAW, 0.25);
        let mut s = s0.clone();
        for _ in 0..200 {
            s = step(&s, dt, &LAW, 0.7).unwrap();
        }
        assert_eq!(s.rho, s0.rho);
        assert_eq!(s.u, s0.u);
    }

    #[test]
    fn boundary_values_hold_after_each_step() {
        let prof = profile(1.0, 2.0, 1.5, 1.0);
        let mut s = perturb(&prof, 0.01, 2, 128).unwrap();
        let dt = s.cfl_step(&LAW, 0.25);
        for _ in 0..50 {
            s = step(&s, dt, &LAW, 1.0).unwrap();
            assert_eq!(s.rho[0], 2.0);
            assert_eq!(s.u[0], 1.5);
            assert_eq!(s.u[128], 1.0);
            assert_eq!(s.rho[128], s.rho[127]);
        }
    }

    #[test]
    fn sampled_steady_state_has_small_residual() {
        let prof = profile(1.0, 2.0, 1.5, 1.0);
        let residual = |cells: usize| {
            let s = GasState::from_profile(&prof, cells).unwrap();
            let dt = s.cfl_step(&LAW, 0.25);
            let next = step(&s, dt, &LAW, 1.0).unwrap();
            // The outflow node is a copy of its neighbour; judge the interior.
            let change = next.rho[..cells].iter().zip(&s.rho).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            change / dt
        };
        let (r1, r2) = (residual(128), residual(256));
        assert!(r1 < 0.2 && r2 < 0.6 * r1, "{r1} {r2}");
    }

    #[test]
    fn zero_perturbation_history_is_zero() {
        let prof = profile(1.0, 2.0, 1.5, 1.0);
        let init = perturb(&prof, 0.0, 1, 64).unwrap();
        let hist = evolve(&init, &prof, &EvolveOptions { t_final: 0.5, stride: 10, ..Default::default() }).unwrap();
        assert!(hist.len() > 2);
        assert!(hist.iter().all(|s| s.l2 == 0.0 && s.h1 == 0.0 && s.h2h3 == 0.0));
        assert_eq!(hist.last().unwrap().t, 0.5);
    }

    #[test]
    fn fit_recovers_exact_exponential() {
        let hist: Vec<_> = (0..100).map(|i| (0.1 * i as f64, 3.0 * exp(-0.7 * 0.1 * i as f64))).collect();
        let fit = fit_decay(&hist, 0.5, 0.0).unwrap();
        assert!((fit.theta - 0.7).abs() < 1e-12);
        assert!((fit.c - 3.0).abs() < 1e-10);
        assert!(fit.residual < 1e-12);
        let flat: Vec<_> = (0..20).map(|i| (i as f64, 2.5)).collect();
        assert_eq!(fit_decay(&flat, 1.0, 0.0).unwrap().theta, 0.0);
    }

    #[test]
    fn fit_drops_samples_at_floor() {
        let mut hist: Vec<_> = (0..40).map(|i| (i as f64, exp(-0.5 * i as f64))).collect();
        hist.extend((40..60).map(|i| (i as f64, 1e-20)));
        let fit = fit_decay(&hist, 0.5, 1e-15).unwrap();
        assert!((fit.theta - 0.5).abs() < 1e-12);
        assert!(fit.window.1 < 40.0);
        assert!(fit_decay(&hist[..12], 0.5, 0.0).is_err());
    }
}
