//! Discrete norms, interpolation-inequality self-checks, the pressure-law
//! condition classifier, and Goodman-type weights.

use alloc::vec::Vec;

use thiserror::Error;

use crate::math::sqrt;
use crate::steady::{classify, SlopeClass, SteadyError, SteadyProfile};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticsError {
    #[error("norm of order {order} needs at least {needed} nodes, got {nodes}")]
    TooFewNodes { order: usize, needed: usize, nodes: usize },
    #[error("order {0} is not supported (expected 0..=3)")]
    UnsupportedOrder(usize),
    #[error("field must vanish at x = 0, got {0}")]
    NonzeroAtOrigin(f64),
    #[error("condition check does not apply to a constant profile")]
    ConstantProfile,
    #[error("delta must be positive, got {0}")]
    InvalidDelta(f64),
    #[error(transparent)]
    Steady(#[from] SteadyError),
}

/// Values on the uniform grid `x_i = i h`, `h = 1 / (len - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteField {
    pub values: Vec<f64>,
}

impl DiscreteField {
    pub fn new(values: Vec<f64>) -> Self {
        DiscreteField { values }
    }

    pub fn from_fn(cells: usize, f: impl Fn(f64) -> f64) -> Self {
        DiscreteField { values: (0..=cells).map(|i| f(i as f64 / cells as f64)).collect() }
    }

    pub fn cells(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    pub fn h(&self) -> f64 {
        1.0 / self.cells() as f64
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Second-order first derivative: centered inside, one-sided at the ends.
pub fn derivative(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut d = Vec::with_capacity(n);
    d.push((-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h));
    for i in 1..n - 1 {
        d.push((f[i + 1] - f[i - 1]) / (2.0 * h));
    }
    d.push((3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h));
    d
}

/// Trapezoidal `L^2` norm.
pub fn l2(f: &[f64], h: f64) -> f64 {
    let n = f.len();
    let inner: f64 = f[1..n - 1].iter().map(|v| v * v).sum();
    sqrt(h * (inner + 0.5 * (f[0] * f[0] + f[n - 1] * f[n - 1])))
}

/// `sqrt(sum_{j <= k} |D^j f|_2^2)` with repeated [`derivative`]; needs at
/// least 3 nodes when `k > 0`.
pub fn sobolev_norm(f: &[f64], h: f64, k: usize) -> f64 {
    let mut total = 0.0;
    let mut d = f.to_vec();
    for j in 0..=k {
        if j > 0 {
            d = derivative(&d, h);
        }
        let v = l2(&d, h);
        total += v * v;
    }
    sqrt(total)
}

/// `|f|_{H^k}` of a field, `k` in `0..=3`.
pub fn norm(field: &DiscreteField, k: usize) -> Result<f64, DiagnosticsError> {
    if k > 3 {
        return Err(DiagnosticsError::UnsupportedOrder(k));
    }
    let needed = [2, 3, 3, 4][k];
    if field.values.len() < needed {
        return Err(DiagnosticsError::TooFewNodes { order: k, needed, nodes: field.values.len() });
    }
    Ok(sobolev_norm(&field.values, field.h(), k))
}

/// Discretization slack `1 + 10 h` for the inequality checks.
pub fn slack(field: &DiscreteField) -> f64 {
    1.0 + 10.0 * field.h()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareCheck {
    pub holds: bool,
    /// `|f|_2 / |f_x|_2`, defined as 0 for the zero field.
    pub ratio: f64,
}

/// `|f|_2 <= 2 |f_x|_2` for a field with `f(0) = 0`.
pub fn check_poincare(field: &DiscreteField) -> Result<PoincareCheck, DiagnosticsError> {
    if field.values.len() < 4 {
        return Err(DiagnosticsError::TooFewNodes { order: 1, needed: 4, nodes: field.values.len() });
    }
    let f0 = field.values[0];
    if f0.abs() > 1e-12 * field.sup().max(1e-300) {
        return Err(DiagnosticsError::NonzeroAtOrigin(f0));
    }
    let h = field.h();
    let a = l2(&field.values, h);
    let b = l2(&derivative(&field.values, h), h);
    let ratio = if a == 0.0 { 0.0 } else { a / b };
    Ok(PoincareCheck { holds: ratio <= 2.0 * slack(field), ratio })
}

/// Constant of the derivative interpolation bound
/// `|v_x|_2^2 <= C |v|_2^2 + C |v|_2 |v_xx|_2`.
///
/// Integrating by parts, `|v_x|^2 <= 2 |v|_inf |v_x|_inf + |v| |v_xx|`.
/// Bounding both sup norms with `|g|_inf <= |g| + sqrt(2 |g| |g_x|)` and
/// absorbing every `|v_x|` power into the left side with Young's inequality
/// gives `|v_x|^2 <= 6936 |v|^2 + 2 (33 + sqrt 2) |v| |v_xx|`; the larger
/// coefficient serves for both terms.
pub const INTERPOLATION_CONSTANT: f64 = 6936.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterpolationCheck {
    /// `|f|_inf <= |f|_2 + sqrt(2 |f|_2 |f_x|_2)`.
    pub sup_bound_holds: bool,
    pub sup_lhs: f64,
    pub sup_rhs: f64,
    /// `|f_x|_2^2 <= C |f|_2^2 + C |f|_2 |f_xx|_2`.
    pub derivative_bound_holds: bool,
    pub derivative_lhs: f64,
    pub derivative_rhs: f64,
}

pub fn check_linf_interp(field: &DiscreteField) -> Result<InterpolationCheck, DiagnosticsError> {
    if field.values.len() < 4 {
        return Err(DiagnosticsError::TooFewNodes { order: 2, needed: 4, nodes: field.values.len() });
    }
    let h = field.h();
    let d1 = derivative(&field.values, h);
    let d2 = derivative(&d1, h);
    let (a, b, c) = (l2(&field.values, h), l2(&d1, h), l2(&d2, h));
    let s = slack(field);
    let sup_lhs = field.sup();
    let sup_rhs = a + sqrt(2.0 * a * b);
    let derivative_lhs = b * b;
    let derivative_rhs = INTERPOLATION_CONSTANT * (a * a + a * c);
    Ok(InterpolationCheck {
        sup_bound_holds: sup_lhs <= s * sup_rhs,
        sup_lhs,
        sup_rhs,
        derivative_bound_holds: derivative_lhs <= s * derivative_rhs,
        derivative_lhs,
        derivative_rhs,
    })
}

/// Cubic B-spline with uniform knots and the given control coefficients,
/// sampled on `cells + 1` nodes. Smooth test fields for the checks above.
pub fn bspline_field(control: &[f64], cells: usize) -> DiscreteField {
    assert!(control.len() >= 4, "need at least 4 control coefficients");
    let pieces = (control.len() - 3) as f64;
    DiscreteField::from_fn(cells, |x| {
        let t = x * pieces;
        let j = (t as usize).min(control.len() - 4);
        let s = t - j as f64;
        let s2 = s * s;
        let s3 = s2 * s;
        let w0 = (1.0 - s) * (1.0 - s) * (1.0 - s) / 6.0;
        let w1 = (3.0 * s3 - 6.0 * s2 + 4.0) / 6.0;
        let w2 = (-3.0 * s3 + 3.0 * s2 + 3.0 * s + 1.0) / 6.0;
        let w3 = s3 / 6.0;
        w0 * control[j] + w1 * control[j + 1] + w2 * control[j + 2] + w3 * control[j + 3]
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cond2Clause {
    /// `P''(rho) > 0` where `u_x > 0`.
    PositiveCurvature,
    /// `P''(rho) / P'(rho) < 2 / rho` where `u_x < 0`.
    CurvatureRatio,
    /// `rho_x < rho / 4` where `u_x < 0`.
    DensitySlope,
}

impl Cond2Clause {
    pub fn label(&self) -> &'static str {
        match self {
            Cond2Clause::PositiveCurvature => "P''>0",
            Cond2Clause::CurvatureRatio => "P''/P'<2/rho",
            Cond2Clause::DensitySlope => "rho_x<rho/4",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cond2Verdict {
    Satisfied,
    Violated { node: usize, clause: Cond2Clause },
}

/// Sign condition on the pressure law along a non-constant profile:
/// `P'' > 0` when the velocity increases; `P''/P' < 2/rho` and
/// `rho_x < rho/4` (literal, signed) when it decreases.
pub fn cond2_check(profile: &SteadyProfile) -> Result<Cond2Verdict, DiagnosticsError> {
    let class = classify(profile)?;
    let law = profile.law();
    for i in 0..=profile.cells() {
        let p = profile.node(i);
        match class {
            SlopeClass::Constant => return Err(DiagnosticsError::ConstantProfile),
            SlopeClass::PositiveSlope => {
                if !(law.d2p(p.rho) > 0.0) {
                    return Ok(Cond2Verdict::Violated { node: i, clause: Cond2Clause::PositiveCurvature });
                }
            }
            SlopeClass::NegativeSlope => {
                if !(law.d2p(p.rho) / law.dp(p.rho) < 2.0 / p.rho) {
                    return Ok(Cond2Verdict::Violated { node: i, clause: Cond2Clause::CurvatureRatio });
                }
                if !(p.rho_x < p.rho / 4.0) {
                    return Ok(Cond2Verdict::Violated { node: i, clause: Cond2Clause::DensitySlope });
                }
            }
        }
    }
    if class == SlopeClass::Constant {
        return Err(DiagnosticsError::ConstantProfile);
    }
    Ok(Cond2Verdict::Satisfied)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightPair {
    pub phi1: Vec<f64>,
    pub phi2: Vec<f64>,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightReport {
    pub weights: WeightPair,
    /// `(1/2)(u phi1)_x - 2 u_x phi1` at every node, with the derivative
    /// taken by second-order differences of the computed product.
    pub quantity: Vec<f64>,
    pub quantity_negative: bool,
    pub weights_positive: bool,
    /// First node where `phi1 <= 0`.
    pub failure_node: Option<usize>,
}

/// Default `delta = 0.1 * min u`.
pub fn default_weight_delta(profile: &SteadyProfile) -> f64 {
    0.1 * profile.u_range().0
}

/// Integrates `u phi1' = 3 u_x phi1 - delta u`, `phi1(0) = 1` with RK4 on the
/// profile grid and sets `phi2 = phi1 / P'(rho)`.
pub fn goodman_weights(profile: &SteadyProfile, delta: f64) -> Result<WeightReport, DiagnosticsError> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(DiagnosticsError::InvalidDelta(delta));
    }
    let n = profile.cells();
    let h = 1.0 / n as f64;
    let rate = |x: f64| {
        let p = profile.sample_unchecked(x.clamp(0.0, 1.0));
        3.0 * p.u_x / p.u
    };
    let mut phi1 = Vec::with_capacity(n + 1);
    phi1.push(1.0);
    let mut y: f64 = 1.0;
    for i in 0..n {
        let x = i as f64 * h;
        let (a0, am, a1) = (rate(x), rate(x + 0.5 * h), rate(if i + 1 == n { 1.0 } else { x + h }));
        let k1 = a0 * y - delta;
        let k2 = am * (y + 0.5 * h * k1) - delta;
        let k3 = am * (y + 0.5 * h * k2) - delta;
        let k4 = a1 * (y + h * k3) - delta;
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        phi1.push(y);
    }
    let law = profile.law();
    let phi2: Vec<f64> = phi1.iter().zip(profile.rho()).map(|(f, r)| f / law.dp(*r)).collect();
    let product: Vec<f64> = phi1.iter().zip(profile.u()).map(|(f, u)| f * u).collect();
    let dproduct = derivative(&product, h);
    let quantity: Vec<f64> = (0..=n).map(|i| 0.5 * dproduct[i] - 2.0 * profile.u_x()[i] * phi1[i]).collect();
    let failure_node = phi1.iter().position(|f| !(*f > 0.0));
    Ok(WeightReport {
        quantity_negative: quantity.iter().all(|q| *q < 0.0),
        weights_positive: failure_node.is_none() && phi2.iter().all(|f| *f > 0.0),
        failure_node,
        quantity,
        weights: WeightPair { phi1, phi2, delta },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{powf, sin};
    use crate::steady::{solve_steady, FlowParams, SteadyOptions};
    use crate::thermo::PressureLaw;
    use core::f64::consts::PI;

    fn profile(nu: f64, rho0: f64, u0: f64, u1: f64, law: PressureLaw) -> SteadyProfile {
        solve_steady(&FlowParams::new(nu, rho0, u0, u1).unwrap(), &law, &SteadyOptions::default()).unwrap()
    }

    #[test]
    fn norms_of_simple_fields() {
        let c = DiscreteField::from_fn(64, |_| -2.5);
        assert!((norm(&c, 0).unwrap() - 2.5).abs() < 1e-14);
        let s = DiscreteField::from_fn(1024, |x| sin(PI * x));
        assert!((norm(&s, 0).unwrap() - sqrt(0.5)).abs() < 1e-4);
        assert!((norm(&s, 1).unwrap() - sqrt(0.5 + PI * PI / 2.0)).abs() < 1e-3);
        assert!(norm(&DiscreteField::new(alloc::vec![1.0, 2.0, 3.0]), 3).is_err());
        assert!(norm(&s, 4).is_err());
    }

    #[test]
    fn poincare_examples() {
        let lin = check_poincare(&DiscreteField::from_fn(1024, |x| x)).unwrap();
        assert!(lin.holds && (lin.ratio - 1.0 / sqrt(3.0)).abs() < 1e-5);
        let zero = check_poincare(&DiscreteField::from_fn(16, |_| 0.0)).unwrap();
        assert_eq!(zero, PoincareCheck { holds: true, ratio: 0.0 });
        let s = check_poincare(&DiscreteField::from_fn(1024, |x| sin(PI * x / 2.0))).unwrap();
        assert!(s.holds && (s.ratio - 2.0 / PI).abs() < 1e-5);
        assert!(check_poincare(&DiscreteField::from_fn(16, |x| 1.0 + x)).is_err());
    }

    #[test]
    fn interpolation_examples() {
        let c = check_linf_interp(&DiscreteField::from_fn(64, |_| 3.0)).unwrap();
        assert!(c.sup_bound_holds && (c.sup_lhs - 3.0).abs() < 1e-14 && (c.sup_rhs - 3.0).abs() < 1e-12);
        let lin = DiscreteField::from_fn(1024, |x| x);
        let h = lin.h();
        let (a, b) = (l2(&lin.values, h), l2(&derivative(&lin.values, h), h));
        assert!(lin.sup() <= sqrt(2.0 * a * b));
        assert!((sqrt(2.0 * a * b) - sqrt(2.0 / sqrt(3.0))).abs() < 1e-5);
        let r = check_linf_interp(&lin).unwrap();
        assert!(r.sup_bound_holds && r.derivative_bound_holds);
    }

    #[test]
    fn bspline_reproduces_constants_and_lines() {
        let c = bspline_field(&[2.0; 7], 100);
        assert!(c.values.iter().all(|v| (v - 2.0).abs() < 1e-14));
        // Control points on a line give the line back.
        let ctrl: Vec<f64> = (0..8).map(|j| j as f64 - 1.0).collect();
        let f = bspline_field(&ctrl, 50);
        for (i, v) in f.values.iter().enumerate() {
            assert!((v - 5.0 * i as f64 / 50.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cond2_on_gamma_law_profiles() {
        let up = profile(1.0, 3.0, 2.0, 3.0, PressureLaw::DIATOMIC);
        assert_eq!(cond2_check(&up).unwrap(), Cond2Verdict::Satisfied);
        let log_up = profile(1.0, 3.0, 2.0, 3.0, PressureLaw::logarithmic(1.0).unwrap());
        assert_eq!(
            cond2_check(&log_up).unwrap(),
            Cond2Verdict::Violated { node: 0, clause: Cond2Clause::PositiveCurvature }
        );
        let down = profile(1.0, 2.0, 1.5, 1.0, PressureLaw::DIATOMIC);
        assert!(!matches!(
            cond2_check(&down).unwrap(),
            Cond2Verdict::Violated { clause: Cond2Clause::CurvatureRatio, .. }
        ));
        let flat = profile(1.0, 2.0, 1.5, 1.5, PressureLaw::DIATOMIC);
        assert_eq!(cond2_check(&flat), Err(DiagnosticsError::ConstantProfile));
    }

    #[test]
    fn weights_on_constant_profile() {
        let flat = profile(1.0, 2.0, 1.5, 1.5, PressureLaw::DIATOMIC);
        let rep = goodman_weights(&flat, 0.3).unwrap();
        for (i, f) in rep.weights.phi1.iter().enumerate() {
            assert!((f - (1.0 - 0.3 * flat.x()[i])).abs() < 1e-12);
        }
        assert!(rep.quantity.iter().all(|q| (q + 0.3 * 1.5 / 2.0).abs() < 1e-10));
        assert!(rep.quantity_negative && rep.weights_positive);
        let bad = goodman_weights(&flat, 1.5).unwrap();
        assert!(!bad.weights_positive);
        assert!(bad.failure_node.is_some());
        assert!(goodman_weights(&flat, 0.0).is_err());
    }

    #[test]
    fn weights_match_closed_form() {
        let prof = profile(1.0, 3.0, 2.0, 3.0, PressureLaw::DIATOMIC);
        let delta = 0.1;
        let rep = goodman_weights(&prof, delta).unwrap();
        // phi1 = (u/u0)^3 (1 - delta int_0^x (u0/u)^3), integrated independently.
        let u0 = 2.0;
        let n = prof.cells();
        let h = 1.0 / n as f64;
        let mut integral = 0.0;
        for i in 0..=n {
            if i > 0 {
                let a = powf(u0 / prof.u()[i - 1], 3.0);
                let m = powf(u0 / prof.sample(((i as f64) - 0.5) * h).unwrap().u, 3.0);
                let b = powf(u0 / prof.u()[i], 3.0);
                integral += h / 6.0 * (a + 4.0 * m + b);
            }
            let exact = powf(prof.u()[i] / u0, 3.0) * (1.0 - delta * integral);
            assert!((rep.weights.phi1[i] - exact).abs() < 1e-9, "node {i}");
            let law = prof.law();
            assert_eq!(rep.weights.phi2[i], rep.weights.phi1[i] / law.dp(prof.rho()[i]));
            // The quantity reduces to -delta u / 2 (one-sided differences at the ends).
            let tol = if i == 0 || i == n { 1e-3 } else { 1e-4 };
            assert!((rep.quantity[i] + delta * prof.u()[i] / 2.0).abs() < tol, "node {i}: {}", rep.quantity[i]);
        }
    }
}
