//! Pressure laws `rho -> P(rho)`.
//!
//! Every other module only needs `P`, `P'` and `P''`, so a law is a small
//! `Copy` value with three evaluation methods. The unchecked methods are used
//! in hot loops where the density is already known to be positive; [`eval`]
//! is the checked entry point.

use core::fmt;

use thiserror::Error;

use crate::math::{ln, powf};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ThermoError {
    #[error("density must be positive, got {0}")]
    NonPositiveDensity(f64),
    #[error("derivative order {0} is not supported (expected 0, 1 or 2)")]
    UnsupportedOrder(u8),
    #[error("invalid pressure-law parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("P'(rho) = {dp} is not positive at rho = {rho}")]
    NotMonotone { rho: f64, dp: f64 },
}

/// A smooth pressure law with `P' > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PressureLaw {
    /// `P(rho) = kappa * rho^gamma` with `kappa > 0`, `gamma > 1`.
    Gamma { kappa: f64, gamma: f64 },
    /// `P(rho) = kappa * ln(rho)`; increasing but concave (`P'' < 0`).
    Logarithmic { kappa: f64 },
}

impl PressureLaw {
    /// The diatomic law `P(rho) = rho^1.4`.
    pub const DIATOMIC: PressureLaw = PressureLaw::Gamma { kappa: 1.0, gamma: 1.4 };

    pub fn gamma(kappa: f64, gamma: f64) -> Result<Self, ThermoError> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(ThermoError::InvalidParameter { name: "kappa", value: kappa });
        }
        if !(gamma > 1.0 && gamma.is_finite()) {
            return Err(ThermoError::InvalidParameter { name: "gamma", value: gamma });
        }
        Ok(PressureLaw::Gamma { kappa, gamma })
    }

    pub fn logarithmic(kappa: f64) -> Result<Self, ThermoError> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(ThermoError::InvalidParameter { name: "kappa", value: kappa });
        }
        Ok(PressureLaw::Logarithmic { kappa })
    }

    /// Short name used in config files and CSV headers.
    pub fn kind(&self) -> &'static str {
        match self {
            PressureLaw::Gamma { .. } => "gamma",
            PressureLaw::Logarithmic { .. } => "log",
        }
    }

    #[inline]
    pub fn p(&self, rho: f64) -> f64 {
        match *self {
            PressureLaw::Gamma { kappa, gamma } => kappa * powf(rho, gamma),
            PressureLaw::Logarithmic { kappa } => kappa * ln(rho),
        }
    }

    #[inline]
    pub fn dp(&self, rho: f64) -> f64 {
        match *self {
            PressureLaw::Gamma { kappa, gamma } => kappa * gamma * powf(rho, gamma - 1.0),
            PressureLaw::Logarithmic { kappa } => kappa / rho,
        }
    }

    #[inline]
    pub fn d2p(&self, rho: f64) -> f64 {
        match *self {
            PressureLaw::Gamma { kappa, gamma } => kappa * gamma * (gamma - 1.0) * powf(rho, gamma - 2.0),
            PressureLaw::Logarithmic { kappa } => -kappa / (rho * rho),
        }
    }

    /// Checks `P' > 0` on `samples` log-spaced densities spanning `[lo, hi]`.
    ///
    /// General laws cannot be verified symbolically, so callers run this on
    /// the density range a computation actually visits.
    pub fn check_monotone(&self, lo: f64, hi: f64, samples: usize) -> Result<(), ThermoError> {
        if !(lo > 0.0) {
            return Err(ThermoError::NonPositiveDensity(lo));
        }
        let samples = samples.max(2);
        let ratio = ln(hi / lo);
        for i in 0..samples {
            let rho = lo * crate::math::exp(ratio * i as f64 / (samples - 1) as f64);
            let dp = self.dp(rho);
            if !(dp > 0.0) {
                return Err(ThermoError::NotMonotone { rho, dp });
            }
        }
        Ok(())
    }
}

impl fmt::Display for PressureLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PressureLaw::Gamma { kappa, gamma } => write!(f, "P(rho) = {kappa} rho^{gamma}"),
            PressureLaw::Logarithmic { kappa } => write!(f, "P(rho) = {kappa} ln(rho)"),
        }
    }
}

/// Evaluates `P`, `P'` or `P''` at `rho` depending on `order`.
pub fn eval(law: &PressureLaw, rho: f64, order: u8) -> Result<f64, ThermoError> {
    if !(rho > 0.0) {
        return Err(ThermoError::NonPositiveDensity(rho));
    }
    match order {
        0 => Ok(law.p(rho)),
        1 => Ok(law.dp(rho)),
        2 => Ok(law.d2p(rho)),
        other => Err(ThermoError::UnsupportedOrder(other)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LAW: PressureLaw = PressureLaw::DIATOMIC;

    #[test]
    fn unit_density_values() {
        assert_eq!(eval(&LAW, 1.0, 0).unwrap(), 1.0);
        assert!((eval(&LAW, 1.0, 1).unwrap() - 1.4).abs() < 1e-15);
    }

    #[test]
    fn two_to_the_one_point_four() {
        // Nearest double to 2^1.4, from a 50-digit evaluation.
        let expected = 2.6390158215457884;
        let got = eval(&LAW, 2.0, 0).unwrap();
        assert!((got - expected).abs() <= 2.0 * f64::EPSILON * expected, "{got}");
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(eval(&LAW, 0.0, 0), Err(ThermoError::NonPositiveDensity(0.0)));
        assert_eq!(eval(&LAW, -1.0, 1), Err(ThermoError::NonPositiveDensity(-1.0)));
        assert_eq!(eval(&LAW, 1.0, 3), Err(ThermoError::UnsupportedOrder(3)));
        assert!(PressureLaw::gamma(1.0, 1.0).is_err());
        assert!(PressureLaw::gamma(0.0, 1.4).is_err());
        assert!(PressureLaw::logarithmic(-2.0).is_err());
    }

    fn observed_order(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, x: f64) -> f64 {
        let err = |h: f64| ((f(x + h) - f(x - h)) / (2.0 * h) - df(x)).abs();
        let (e1, e2) = (err(1e-2), err(5e-3));
        ln(e1 / e2) / ln(2.0)
    }

    #[test]
    fn finite_difference_orders() {
        for law in [LAW, PressureLaw::gamma(2.5, 1.67).unwrap(), PressureLaw::logarithmic(3.0).unwrap()] {
            for x in [0.5, 1.0, 3.0, 7.5] {
                let p1 = observed_order(|r| law.p(r), |r| law.dp(r), x);
                let p2 = observed_order(|r| law.dp(r), |r| law.d2p(r), x);
                assert!(p1 >= 1.9 && p2 >= 1.9, "{law}: x={x} orders {p1} {p2}");
            }
        }
    }

    #[test]
    fn monotonicity_check() {
        LAW.check_monotone(1e-3, 1e3, 64).unwrap();
        PressureLaw::logarithmic(1.0).unwrap().check_monotone(0.1, 10.0, 16).unwrap();
        assert!(LAW.check_monotone(0.0, 1.0, 4).is_err());
    }
}
