//! Finite-difference determinant oracle.
//!
//! The linearized operator acting on `(r, v)` is discretized on `N + 1`
//! uniform nodes with unknowns interleaved as `(r_0, v_0, r_1, v_1, ...)`:
//!
//! ```text
//! lambda r + (rho v + u r)_x                                        = 0   (nodes 1..=N)
//! lambda rho v - nu v_xx + (m v + P' r)_x + u_x (u r + rho v)       = 0   (nodes 1..N-1)
//! ```
//!
//! Centered differences are used in the interior and the one-sided
//! second-order stencil at `x = 1`. The rows for `r_0`, `v_0` and `v_N`
//! are replaced by the boundary conditions. `det(lambda S - L)` is then a
//! polynomial in `lambda` whose zeros approximate the eigenvalues.

use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use super::{
    report_from_outcome, winding_with, Contour, ContourMap, Executor, ScaledValue, SpectrumError, SpectrumReport,
    WindingOptions,
};
use crate::band::BandMatrix;
use crate::steady::SteadyProfile;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularPencil {
    pub lambda: Complex64,
}

impl fmt::Display for SingularPencil {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "pencil matrix is singular at {} and at a perturbed point", self.lambda)
    }
}

/// `lambda -> det(lambda S_h - L_h)` for one profile and grid.
#[derive(Debug, Clone)]
pub struct MatrixPencil {
    cells: usize,
    h: f64,
    nu: f64,
    m: f64,
    rho: Vec<f64>,
    u: Vec<f64>,
    u_x: Vec<f64>,
    dp: Vec<f64>,
    perturbation: f64,
}

const KL: usize = 4;
const KU: usize = 3;

impl MatrixPencil {
    pub fn new(profile: &SteadyProfile, cells: usize) -> Result<Self, SpectrumError> {
        if cells < 32 {
            return Err(SpectrumError::GridTooSmall(cells));
        }
        let h = 1.0 / cells as f64;
        let pts: Vec<_> =
            (0..=cells).map(|i| profile.sample_unchecked(if i == cells { 1.0 } else { i as f64 * h })).collect();
        let law = profile.law();
        Ok(MatrixPencil {
            cells,
            h,
            nu: profile.params().nu,
            m: profile.m(),
            rho: pts.iter().map(|p| p.rho).collect(),
            u: pts.iter().map(|p| p.u).collect(),
            u_x: pts.iter().map(|p| p.u_x).collect(),
            dp: pts.iter().map(|p| law.dp(p.rho)).collect(),
            perturbation: 1e-10,
        })
    }

    /// Size of the step taken off a node where the matrix is singular.
    pub fn with_perturbation(mut self, perturbation: f64) -> Self {
        self.perturbation = perturbation;
        self
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub(crate) fn assemble(&self, lambda: Complex64) -> BandMatrix {
        let n = self.cells;
        let (h, nu, m) = (self.h, self.nu, self.m);
        let c = |x: f64| Complex64::new(x, 0.0);
        let r = |i: usize| 2 * i;
        let v = |i: usize| 2 * i + 1;
        let mut a = BandMatrix::zeros(2 * (n + 1), KL, KU);
        a.set(r(0), r(0), c(1.0));
        a.set(v(0), v(0), c(1.0));
        a.set(v(n), v(n), c(1.0));
        let dd = 1.0 / (2.0 * h);
        for i in 1..n {
            // Continuity rows: lambda r_i + D(rho v + u r).
            a.set(r(i), r(i), lambda);
            a.set(r(i), r(i + 1), c(self.u[i + 1] * dd));
            a.set(r(i), v(i + 1), c(self.rho[i + 1] * dd));
            a.set(r(i), r(i - 1), c(-self.u[i - 1] * dd));
            a.set(r(i), v(i - 1), c(-self.rho[i - 1] * dd));
            // Momentum rows.
            let diff = nu / (h * h);
            a.set(v(i), v(i), lambda * self.rho[i] + 2.0 * diff + self.u_x[i] * self.rho[i]);
            a.set(v(i), v(i + 1), c(-diff + m * dd));
            a.set(v(i), v(i - 1), c(-diff - m * dd));
            a.set(v(i), r(i), c(self.u_x[i] * self.u[i]));
            a.set(v(i), r(i + 1), c(self.dp[i + 1] * dd));
            a.set(v(i), r(i - 1), c(-self.dp[i - 1] * dd));
        }
        // Continuity at the outflow: (3 g_N - 4 g_{N-1} + g_{N-2}) / 2h.
        a.set(r(n), r(n), lambda + 3.0 * self.u[n] * dd);
        a.set(r(n), v(n), c(3.0 * self.rho[n] * dd));
        a.set(r(n), r(n - 1), c(-4.0 * self.u[n - 1] * dd));
        a.set(r(n), v(n - 1), c(-4.0 * self.rho[n - 1] * dd));
        a.set(r(n), r(n - 2), c(self.u[n - 2] * dd));
        a.set(r(n), v(n - 2), c(self.rho[n - 2] * dd));
        a
    }

    fn determinant(&self, lambda: Complex64) -> Option<ScaledValue> {
        self.assemble(lambda).determinant().ok().map(|d| ScaledValue { mantissa: d.phase, log_scale: d.log_abs })
    }
}

impl ContourMap for MatrixPencil {
    type Error = SingularPencil;

    fn eval(&self, lambda: Complex64) -> Result<ScaledValue, SingularPencil> {
        if let Some(d) = self.determinant(lambda) {
            return Ok(d);
        }
        // Move along the circle through lambda, which is the contour
        // direction on arcs.
        let dir = if lambda.norm() > 0.0 {
            Complex64::new(0.0, 1.0) * lambda / lambda.norm()
        } else {
            Complex64::new(0.0, 1.0)
        };
        self.determinant(lambda + dir * self.perturbation).ok_or(SingularPencil { lambda })
    }
}

/// Winding of `det(lambda S_h - L_h)` along `contour` on `cells` cells.
pub fn matrix_winding_oracle<E: Executor>(
    profile: &SteadyProfile,
    contour: &Contour,
    cells: usize,
    opts: &WindingOptions,
    exec: &E,
) -> Result<SpectrumReport, SpectrumError> {
    let pencil = MatrixPencil::new(profile, cells)?.with_perturbation(1e-10 * contour.max_modulus());
    Ok(report_from_outcome(winding_with(&pencil, contour, exec, opts)))
}
