//! Evans function of the linearized eigenvalue problem.
//!
//! For a spectral parameter `lambda` the perturbation `(r, v)` solves
//!
//! ```text
//! r_x    = -(lambda r + (rho v)_x + u_x r) / u
//! nu v_xx = lambda rho v + (rho u v)_x + P''(rho) rho_x r + P'(rho) r_x + u_x (u r + rho v)
//! ```
//!
//! with `r(0) = v(0) = 0`, `v_x(0) = 1`, and `D(lambda) = v(1)`. Zeros of `D`
//! are exactly the eigenvalues. The system is integrated with classical RK4
//! as a first-order system in `(r, v, w = v_x)`; the state is renormalized by
//! a positive real whenever it grows or shrinks past `e^10`, and the
//! accumulated logarithm is carried alongside. Positive rescaling leaves the
//! argument of `v(1)` and the zero set untouched.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use thiserror::Error;

use crate::math::{ceil, exp, ln, sqrt};
use crate::spectrum::{ContourMap, ScaledValue};
use crate::steady::{ProfilePoint, SteadyProfile};
use crate::thermo::PressureLaw;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvansError {
    #[error("Evans integration produced a non-finite state at step {step} of {steps} (lambda = {lambda})")]
    NumericalFailure { lambda: Complex64, step: usize, steps: usize },
    #[error("stability index is -1 (sign D(0) = {sign_zero}, sign D(+inf) = {sign_infinity})")]
    IndexViolation { sign_zero: i8, sign_infinity: i8 },
}

/// `(r, v, w)` with `w = v_x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvansState {
    pub r: Complex64,
    pub v: Complex64,
    pub w: Complex64,
}

impl EvansState {
    /// Shooting data at `x = 0`.
    pub const INITIAL: EvansState =
        EvansState { r: Complex64::new(0.0, 0.0), v: Complex64::new(0.0, 0.0), w: Complex64::new(1.0, 0.0) };

    #[inline]
    fn axpy(&self, a: f64, d: &EvansState) -> EvansState {
        EvansState { r: self.r + d.r * a, v: self.v + d.v * a, w: self.w + d.w * a }
    }

    #[inline]
    fn max_abs(&self) -> f64 {
        self.r.norm().max(self.v.norm()).max(self.w.norm())
    }

    #[inline]
    fn scale(&mut self, s: f64) {
        self.r *= s;
        self.v *= s;
        self.w *= s;
    }
}

/// `D(lambda) = d_scaled * exp(log_scale)` with `|d_scaled| <= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvansEvaluation {
    pub lambda: Complex64,
    pub d_scaled: Complex64,
    pub log_scale: f64,
    pub steps: usize,
}

impl EvansEvaluation {
    /// `D(lambda)` as a plain complex number; overflows for large `log_scale`.
    pub fn value(&self) -> Complex64 {
        self.d_scaled * exp(self.log_scale)
    }

    pub fn scaled(&self) -> ScaledValue {
        ScaledValue { mantissa: self.d_scaled, log_scale: self.log_scale }
    }
}

/// Derivative of the Evans state at a profile point, written out term by
/// term. [`EvansSystem`] uses a precomputed coefficient form of the same
/// expression.
pub fn rhs_at(pt: &ProfilePoint, law: &PressureLaw, nu: f64, m: f64, lambda: Complex64, s: &EvansState) -> EvansState {
    let ProfilePoint { rho, u, rho_x, u_x } = *pt;
    let r_x = -(s.r * lambda + s.v * rho_x + s.w * rho + s.r * u_x) / u;
    let rhs =
        s.v * lambda * rho + s.w * m + s.r * (law.d2p(rho) * rho_x) + r_x * law.dp(rho) + (s.r * u + s.v * rho) * u_x;
    EvansState { r: r_x, v: s.w, w: rhs / nu }
}

/// Derivative of the Evans state at position `x` of `profile`.
pub fn evans_rhs(x: f64, state: &EvansState, lambda: Complex64, profile: &SteadyProfile) -> EvansState {
    let pt = profile.sample_unchecked(x.clamp(0.0, 1.0));
    rhs_at(&pt, profile.law(), profile.params().nu, profile.m(), lambda, state)
}

/// Step-count rule and rescaling threshold for Evans integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvansOptions {
    pub min_steps: usize,
    pub max_steps: usize,
    /// Target `h * rate` for the oscillatory/growing modes.
    pub accuracy_step: f64,
    /// Target `h * rate` for the strongly damped transport mode.
    pub damping_step: f64,
    /// Natural log of the magnitude that triggers renormalization.
    pub rescale_log: f64,
    /// `lambda_big = big_lambda_factor * nu` for the sign at `+infinity`.
    pub big_lambda_factor: f64,
}

impl Default for EvansOptions {
    fn default() -> Self {
        EvansOptions {
            min_steps: 4096,
            max_steps: 1 << 24,
            accuracy_step: 0.01,
            damping_step: 0.5,
            rescale_log: 10.0,
            big_lambda_factor: 1e4,
        }
    }
}

impl EvansOptions {
    /// RK4 step count for spectral parameters of modulus up to `lambda_abs`.
    ///
    /// Grows with `sqrt(|lambda| / nu)` (boundary-layer/oscillation scale)
    /// and with the profile's own rates `(m + P' rho / u) / nu`; the damped
    /// transport rate `|lambda| / u` only needs RK4 stability.
    pub fn steps_for(&self, profile: &SteadyProfile, lambda_abs: f64) -> usize {
        let nu = profile.params().nu;
        let m = profile.m();
        let law = profile.law();
        let mut accurate: f64 = 0.0;
        let mut damped: f64 = 0.0;
        let stride = (profile.cells() / 4096).max(1);
        let mut i = 0;
        while i <= profile.cells() {
            let p = profile.node(i);
            let a = (m + law.dp(p.rho) * p.rho / p.u) / nu + sqrt(lambda_abs * p.rho / nu) + p.u_x.abs() / p.u;
            accurate = accurate.max(a);
            damped = damped.max((lambda_abs + p.u_x.abs()) / p.u);
            i += stride;
        }
        let n = ceil(accurate / self.accuracy_step).max(ceil(damped / self.damping_step)) as usize;
        n.clamp(self.min_steps, self.max_steps)
    }
}

/// Linear-system coefficients at one abscissa: `Y' = (A + lambda B) Y`.
#[derive(Debug, Clone, Copy)]
struct Coeffs {
    inv_u: f64,
    rr: f64,
    rv: f64,
    rw: f64,
    wr0: f64,
    wr1: f64,
    wv0: f64,
    wv1: f64,
    ww: f64,
}

impl Coeffs {
    fn new(p: &ProfilePoint, law: &PressureLaw, nu: f64, m: f64) -> Self {
        let ProfilePoint { rho, u, rho_x, u_x } = *p;
        let dp = law.dp(rho);
        Coeffs {
            inv_u: 1.0 / u,
            rr: -u_x / u,
            rv: -rho_x / u,
            rw: -rho / u,
            wr0: (law.d2p(rho) * rho_x + u_x * u - dp * u_x / u) / nu,
            wr1: -dp / (u * nu),
            wv0: (u_x * rho - dp * rho_x / u) / nu,
            wv1: rho / nu,
            ww: (m - dp * rho / u) / nu,
        }
    }

    #[inline]
    fn apply(&self, lambda: Complex64, s: &EvansState) -> EvansState {
        let r_x = s.r * (self.rr - lambda * self.inv_u) + s.v * self.rv + s.w * self.rw;
        let w_x = s.r * (lambda * self.wr1 + self.wr0) + s.v * (lambda * self.wv1 + self.wv0) + s.w * self.ww;
        EvansState { r: r_x, v: s.w, w: w_x }
    }
}

/// Evans function of one profile at a fixed RK4 resolution.
///
/// Profile coefficients at every RK4 stage abscissa are tabulated once, so
/// evaluating many `lambda` (a contour) only costs the integration itself.
/// Immutable and `Sync`: evaluations may run concurrently.
#[derive(Debug, Clone)]
pub struct EvansSystem {
    steps: usize,
    coeffs: Vec<Coeffs>,
    rescale_log: f64,
}

impl EvansSystem {
    pub fn new(profile: &SteadyProfile, steps: usize, opts: &EvansOptions) -> Self {
        let steps = steps.max(1);
        let nu = profile.params().nu;
        let m = profile.m();
        let law = profile.law();
        let coeffs = (0..=2 * steps)
            .map(|j| {
                let x = if j == 2 * steps { 1.0 } else { j as f64 / (2 * steps) as f64 };
                Coeffs::new(&profile.sample_unchecked(x), law, nu, m)
            })
            .collect();
        EvansSystem { steps, coeffs, rescale_log: opts.rescale_log }
    }

    /// A system resolved for every `|lambda| <= radius`.
    pub fn for_radius(profile: &SteadyProfile, radius: f64, opts: &EvansOptions) -> Self {
        EvansSystem::new(profile, opts.steps_for(profile, radius), opts)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn evaluate(&self, lambda: Complex64) -> Result<EvansEvaluation, EvansError> {
        self.evaluate_from(lambda, EvansState::INITIAL)
    }

    /// Integrates from an arbitrary initial state (used for linearity checks).
    pub fn evaluate_from(&self, lambda: Complex64, init: EvansState) -> Result<EvansEvaluation, EvansError> {
        let h = 1.0 / self.steps as f64;
        let hi = exp(self.rescale_log);
        let lo = exp(-self.rescale_log);
        let mut y = init;
        let mut log_scale = 0.0;
        for i in 0..self.steps {
            let c0 = &self.coeffs[2 * i];
            let c1 = &self.coeffs[2 * i + 1];
            let c2 = &self.coeffs[2 * i + 2];
            let k1 = c0.apply(lambda, &y);
            let k2 = c1.apply(lambda, &y.axpy(0.5 * h, &k1));
            let k3 = c1.apply(lambda, &y.axpy(0.5 * h, &k2));
            let k4 = c2.apply(lambda, &y.axpy(h, &k3));
            y.r += (k1.r + (k2.r + k3.r) * 2.0 + k4.r) * (h / 6.0);
            y.v += (k1.v + (k2.v + k3.v) * 2.0 + k4.v) * (h / 6.0);
            y.w += (k1.w + (k2.w + k3.w) * 2.0 + k4.w) * (h / 6.0);
            let size = y.max_abs();
            if !size.is_finite() {
                return Err(EvansError::NumericalFailure { lambda, step: i, steps: self.steps });
            }
            if size > hi || (size < lo && size > 0.0) {
                y.scale(1.0 / size);
                log_scale += ln(size);
            }
        }
        let size = y.max_abs();
        if !(size > 0.0 && size.is_finite()) {
            return Err(EvansError::NumericalFailure { lambda, step: self.steps, steps: self.steps });
        }
        Ok(EvansEvaluation { lambda, d_scaled: y.v / size, log_scale: log_scale + ln(size), steps: self.steps })
    }
}

impl ContourMap for EvansSystem {
    type Error = EvansError;

    fn eval(&self, z: Complex64) -> Result<ScaledValue, EvansError> {
        self.evaluate(z).map(|e| e.scaled())
    }
}

/// `D(lambda)` with the step count chosen by `opts` for this `lambda`.
pub fn evans(lambda: Complex64, profile: &SteadyProfile, opts: &EvansOptions) -> Result<EvansEvaluation, EvansError> {
    EvansSystem::new(profile, opts.steps_for(profile, lambda.norm()), opts).evaluate(lambda)
}

/// A positive real stored through its logarithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositiveValue {
    pub log_value: f64,
}

impl PositiveValue {
    pub fn value(&self) -> f64 {
        exp(self.log_value)
    }
}

/// `D(0)` from the explicit solution of the `lambda = 0` problem:
///
/// ```text
/// v(1) = int_0^1 exp( (1/nu) int_y^1 (rho u - P'(rho) rho / u) dz ) dy.
/// ```
///
/// The inner integral is accumulated once as an antiderivative, so the cost
/// is linear in the number of cells. Grid resolution follows the profile and
/// the exponent's rate.
pub fn evans_at_zero_quadrature(profile: &SteadyProfile) -> PositiveValue {
    let rate = zero_rate_max(profile);
    let cells = profile.cells().max(ceil(rate / 0.01) as usize).min(1 << 22);
    evans_at_zero_quadrature_with(profile, cells)
}

fn zero_rate(profile: &SteadyProfile, p: &ProfilePoint) -> f64 {
    (profile.m() - profile.law().dp(p.rho) * p.rho / p.u) / profile.params().nu
}

fn zero_rate_max(profile: &SteadyProfile) -> f64 {
    (0..=profile.cells()).map(|i| zero_rate(profile, &profile.node(i)).abs()).fold(0.0, f64::max)
}

/// [`evans_at_zero_quadrature`] on an explicit number of cells (composite
/// Simpson with a midpoint per cell, fourth order).
pub fn evans_at_zero_quadrature_with(profile: &SteadyProfile, cells: usize) -> PositiveValue {
    let cells = cells.max(2);
    let h = 1.0 / cells as f64;
    let c = |x: f64| zero_rate(profile, &profile.sample_unchecked(x));
    let node_c: Vec<f64> = (0..=cells).map(|i| c(if i == cells { 1.0 } else { i as f64 * h })).collect();
    let mid_c: Vec<f64> = (0..cells).map(|i| c((i as f64 + 0.5) * h)).collect();
    // Tail integral J(y) = int_y^1 c, accumulated from x = 1 with
    // compensated summation so J stays accurate where it is small.
    let mut node_j = vec![0.0; cells + 1];
    let (mut acc, mut comp) = (0.0f64, 0.0f64);
    for i in (0..cells).rev() {
        let term = h / 6.0 * (node_c[i] + 4.0 * mid_c[i] + node_c[i + 1]);
        let t = acc + term;
        comp += if acc.abs() >= term.abs() { (acc - t) + term } else { (term - t) + acc };
        acc = t;
        node_j[i] = acc + comp;
    }
    let mid_j: Vec<f64> =
        (0..cells).map(|i| 0.5 * (node_j[i] + node_j[i + 1]) - h * (node_c[i] - node_c[i + 1]) / 8.0).collect();
    let peak = node_j.iter().chain(&mid_j).copied().fold(f64::NEG_INFINITY, f64::max);
    let g = |j: f64| exp(j - peak);
    let mut sum = 0.0;
    for i in 0..cells {
        sum += g(node_j[i]) + 4.0 * g(mid_j[i]) + g(node_j[i + 1]);
    }
    PositiveValue { log_value: peak + ln(sum * h / 6.0) }
}

/// Result of the stability-index sign test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityIndex {
    /// `sign D(0) * sign D(+inf)`.
    pub index: i8,
    pub sign_zero: i8,
    pub sign_infinity: i8,
    /// Whether `lambda_big / 4`, `lambda_big` and `4 lambda_big` agree.
    pub consistent: bool,
    pub lambda_big: f64,
    pub log_d_zero: f64,
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Computes `sign D(0) * sign D(+inf)`. `D(0)` comes from the quadrature,
/// `D(+inf)` from shooting at real `lambda_big = factor * nu` (and at a
/// quarter and four times that value to confirm the asymptotic regime).
pub fn stability_index(profile: &SteadyProfile, opts: &EvansOptions) -> Result<StabilityIndex, EvansError> {
    let d0 = evans_at_zero_quadrature(profile);
    let lambda_big = opts.big_lambda_factor * profile.params().nu;
    let mut signs = [0i8; 3];
    for (slot, factor) in signs.iter_mut().zip([0.25, 1.0, 4.0]) {
        let e = evans(Complex64::new(lambda_big * factor, 0.0), profile, opts)?;
        *slot = sign(e.d_scaled.re);
    }
    let sign_zero = 1;
    let sign_infinity = signs[1];
    Ok(StabilityIndex {
        index: sign_zero * sign_infinity,
        sign_zero,
        sign_infinity,
        consistent: signs[0] == signs[1] && signs[1] == signs[2],
        lambda_big,
        log_d_zero: d0.log_value,
    })
}
