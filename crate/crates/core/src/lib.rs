//! Steady inflow/outflow solutions of the 1D isentropic compressible
//! Navier-Stokes equations on `[0, 1]` and their stability.
//!
//! The crate is `no_std` (it needs `alloc`) and performs no IO. It covers:
//!
//! - [`thermo`]: pressure laws `P(rho)` with first and second derivatives.
//! - [`steady`]: the steady profile, found by RK4 shooting on the momentum
//!   integration constant `b`.
//! - [`evans`]: the Evans function `D(lambda) = v(1)` of the linearized
//!   eigenvalue problem, with overflow-safe rescaling, plus the closed-form
//!   quadrature for `D(0)` and the stability-index sign test.
//! - [`spectrum`]: winding numbers over semicircular contours, root location
//!   by argument-principle quadrisection, and an independent finite-difference
//!   determinant oracle.
//! - [`evolve`]: a semi-implicit upwind time stepper for the nonlinear
//!   equations together with exponential decay fitting.
//! - [`diagnostics`]: discrete Sobolev norms, interpolation-inequality checks,
//!   the pressure-law condition classifier and Goodman-type weights.
//!
//! Everything that needs threads or files lives in the `boundstab` crate.
//! The optional `std` feature only swaps `libm` for the platform math
//! library, which is several times faster for `powf`.
#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod diagnostics;
pub mod evans;
pub mod evolve;
pub mod spectrum;
pub mod steady;
pub mod thermo;

mod band;
mod math;

pub use num_complex::Complex64;

pub use evans::{EvansError, EvansEvaluation, EvansOptions, EvansState, EvansSystem, StabilityIndex};
pub use evolve::{DecayFit, EvolveError, GasState, NormSample};
pub use spectrum::{Contour, ContourMap, Executor, Sequential, SpectrumReport, Verdict};
pub use steady::{FlowParams, SlopeClass, SteadyError, SteadyOptions, SteadyProfile};
pub use thermo::{PressureLaw, ThermoError};
