//! Counting and locating eigenvalues with the argument principle.
//!
//! Any analytic map `z -> f(z)` that can report its value in scaled form
//! implements [`ContourMap`]; the Evans system and the finite-difference
//! pencil determinant ([`oracle`]) are the two used here. The winding driver
//! samples a closed [`Contour`], inserts midpoints until every argument step
//! is below `pi/2`, and sums the steps. Batches of evaluations are handed to
//! an [`Executor`], so the same code runs sequentially or on a thread pool.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::evans::{EvansError, EvansOptions, EvansSystem};
use crate::math::{asin, cos, exp, floor, ln, round, sin, sqrt};
use crate::steady::SteadyProfile;

pub mod oracle;
mod roots;

pub use oracle::{matrix_winding_oracle, MatrixPencil};
pub use roots::{
    locate_roots, locate_roots_with, spectral_abscissa, Abscissa, AbscissaOptions, Root, RootBox, RootOptions,
    RootSearch,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectrumError {
    #[error("invalid contour: {0}")]
    InvalidContour(String),
    #[error("matrix oracle needs at least 32 cells, got {0}")]
    GridTooSmall(usize),
    #[error("{0}")]
    Evans(#[from] EvansError),
    #[error("profile is not spectrally stable on the standard contour: {0}")]
    NotStable(String),
}

/// `mantissa * exp(log_scale)`, the overflow-safe form of an analytic value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledValue {
    pub mantissa: Complex64,
    pub log_scale: f64,
}

impl ScaledValue {
    /// `ln |value|`; `-inf` for an exact zero.
    pub fn log_abs(&self) -> f64 {
        self.log_scale + ln(self.mantissa.norm())
    }

    pub fn arg(&self) -> f64 {
        self.mantissa.arg()
    }
}

/// An analytic function sampled along contours.
pub trait ContourMap: Sync {
    type Error: fmt::Display;
    fn eval(&self, z: Complex64) -> Result<ScaledValue, Self::Error>;
}

impl<T: ContourMap> ContourMap for &T {
    type Error = T::Error;
    fn eval(&self, z: Complex64) -> Result<ScaledValue, Self::Error> {
        (**self).eval(z)
    }
}

/// Runs `f(0), ..., f(n - 1)` and returns the results in index order.
pub trait Executor: Sync {
    fn map<T: Send, F: Fn(usize) -> T + Sync>(&self, n: usize, f: F) -> Vec<T>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T: Send, F: Fn(usize) -> T + Sync>(&self, n: usize, f: F) -> Vec<T> {
        (0..n).map(f).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContourShape {
    /// Arc of `|z| = radius` in `Re z >= -shift`, closed by the segment on
    /// `Re z = -shift`.
    HalfDisk {
        radius: f64,
        shift: f64,
    },
    Rectangle {
        re_min: f64,
        re_max: f64,
        im_min: f64,
        im_max: f64,
    },
}

/// A closed curve sampled at increasing arc-length parameters in
/// `[0, length)`, traversed counterclockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    shape: ContourShape,
    params: Vec<f64>,
}

impl Contour {
    pub fn half_disk(radius: f64, shift: f64, nodes: usize) -> Result<Self, SpectrumError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(SpectrumError::InvalidContour(format!("radius must be positive, got {radius}")));
        }
        if !(shift >= 0.0 && shift < radius) {
            return Err(SpectrumError::InvalidContour(format!("shift must lie in [0, radius), got {shift}")));
        }
        Contour::uniform(ContourShape::HalfDisk { radius, shift }, nodes)
    }

    pub fn rectangle(re_min: f64, re_max: f64, im_min: f64, im_max: f64, nodes: usize) -> Result<Self, SpectrumError> {
        let ok = [re_min, re_max, im_min, im_max].iter().all(|v| v.is_finite()) && re_min < re_max && im_min < im_max;
        if !ok {
            return Err(SpectrumError::InvalidContour(format!(
                "rectangle [{re_min}, {re_max}] x [{im_min}, {im_max}] is empty"
            )));
        }
        Contour::uniform(ContourShape::Rectangle { re_min, re_max, im_min, im_max }, nodes)
    }

    fn uniform(shape: ContourShape, nodes: usize) -> Result<Self, SpectrumError> {
        if nodes < 4 {
            return Err(SpectrumError::InvalidContour(format!("need at least 4 nodes, got {nodes}")));
        }
        let mut c = Contour { shape, params: Vec::new() };
        let len = c.length();
        c.params = (0..nodes).map(|k| len * k as f64 / nodes as f64).collect();
        Ok(c)
    }

    pub fn shape(&self) -> ContourShape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Largest `|z|` on the curve.
    pub fn max_modulus(&self) -> f64 {
        match self.shape {
            ContourShape::HalfDisk { radius, .. } => radius,
            ContourShape::Rectangle { re_min, re_max, im_min, im_max } => {
                let re = re_min.abs().max(re_max.abs());
                let im = im_min.abs().max(im_max.abs());
                sqrt(re * re + im * im)
            }
        }
    }

    fn half_disk_geometry(radius: f64, shift: f64) -> (f64, f64, f64) {
        let corner = PI / 2.0 + asin(shift / radius);
        let arc = 2.0 * radius * corner;
        let half_height = sqrt(radius * radius - shift * shift);
        (corner, arc, half_height)
    }

    pub fn length(&self) -> f64 {
        match self.shape {
            ContourShape::HalfDisk { radius, shift } => {
                let (_, arc, half_height) = Contour::half_disk_geometry(radius, shift);
                arc + 2.0 * half_height
            }
            ContourShape::Rectangle { re_min, re_max, im_min, im_max } => 2.0 * ((re_max - re_min) + (im_max - im_min)),
        }
    }

    /// Point at arc length `s` (taken modulo the length).
    pub fn point_at(&self, s: f64) -> Complex64 {
        let len = self.length();
        let s = s - len * floor(s / len);
        match self.shape {
            ContourShape::HalfDisk { radius, shift } => {
                let (corner, arc, half_height) = Contour::half_disk_geometry(radius, shift);
                if s < arc {
                    let theta = -corner + s / radius;
                    Complex64::new(radius * cos(theta), radius * sin(theta))
                } else {
                    Complex64::new(-shift, half_height - (s - arc))
                }
            }
            ContourShape::Rectangle { re_min, re_max, im_min, im_max } => {
                let (w, h) = (re_max - re_min, im_max - im_min);
                if s < w {
                    Complex64::new(re_min + s, im_min)
                } else if s < w + h {
                    Complex64::new(re_max, im_min + (s - w))
                } else if s < 2.0 * w + h {
                    Complex64::new(re_max - (s - w - h), im_max)
                } else {
                    Complex64::new(re_min, im_max - (s - 2.0 * w - h))
                }
            }
        }
    }

    pub fn nodes(&self) -> Vec<Complex64> {
        self.params.iter().map(|&s| self.point_at(s)).collect()
    }

    /// Unit tangent (direction of travel) at arc length `s`.
    pub fn tangent_at(&self, s: f64) -> Complex64 {
        let eps = 1e-7 * self.length();
        let d = self.point_at(s + eps) - self.point_at(s - eps);
        d / d.norm()
    }
}

/// Initial half-disk contour of radius `m` whose straight edge sits on
/// `Re z = -delta`, with `n0` nodes spread uniformly in arc length.
pub fn build_contour(m: f64, delta: f64, n0: usize) -> Result<Contour, SpectrumError> {
    Contour::half_disk(m, delta, n0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindingOptions {
    /// Uniform midpoint insertion runs until at least this many nodes exist.
    pub min_nodes: usize,
    pub max_nodes: usize,
    /// Largest accepted argument change between neighbouring nodes.
    pub max_arg_step: f64,
    /// Largest accepted change of `ln |f|` between neighbouring nodes. The
    /// argument and log-modulus of an analytic map vary at the same rate, so
    /// this guards the argument rule against aliasing on coarse samples.
    pub max_log_step: f64,
    /// A node whose `|f|` falls below this fraction of both neighbours'
    /// magnitudes is treated as lying on a zero.
    pub magnitude_floor: f64,
    /// Smallest node spacing, relative to the contour length; an edge that
    /// still needs refinement below it straddles a zero.
    pub min_spacing: f64,
}

impl Default for WindingOptions {
    fn default() -> Self {
        WindingOptions {
            min_nodes: 64,
            max_nodes: 1 << 14,
            max_arg_step: PI / 2.0,
            max_log_step: 1.0,
            magnitude_floor: 1e-12,
            min_spacing: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InconclusiveReason {
    /// The map failed to evaluate at a node.
    EvaluationFailed { lambda: Complex64, message: String },
    /// `|f|` at a node is negligible next to its neighbours.
    NearZero { lambda: Complex64, relative: f64 },
    /// Refinement wanted more than `max_nodes` nodes.
    RefinementBudget { nodes: usize },
    /// Accumulated argument is not a multiple of `2 pi`.
    NonInteger { total_arg: f64 },
    /// Negative winding of an analytic map.
    Negative { winding: i64 },
    /// Odd winding where the stability index forces an even count.
    OddParity { winding: i64 },
    /// Sub-box windings do not add up to the parent's.
    InconsistentSubdivision { parent: i64, children: i64 },
}

impl fmt::Display for InconclusiveReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InconclusiveReason::EvaluationFailed { lambda, message } => {
                write!(f, "evaluation failed at {lambda}: {message}")
            }
            InconclusiveReason::NearZero { lambda, relative } => {
                write!(f, "|D| relative magnitude {relative:e} at {lambda}: possible eigenvalue on the contour")
            }
            InconclusiveReason::RefinementBudget { nodes } => write!(f, "refinement budget of {nodes} nodes exhausted"),
            InconclusiveReason::NonInteger { total_arg } => {
                write!(f, "accumulated argument {total_arg} is not a multiple of 2 pi")
            }
            InconclusiveReason::Negative { winding } => write!(f, "negative winding {winding}"),
            InconclusiveReason::OddParity { winding } => {
                write!(f, "odd winding {winding} contradicts the stability index parity")
            }
            InconclusiveReason::InconsistentSubdivision { parent, children } => {
                write!(f, "sub-box windings sum to {children}, parent has {parent}")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourSample {
    pub lambda: Complex64,
    pub value: ScaledValue,
}

/// Everything the winding driver produced for one contour.
#[derive(Debug, Clone, PartialEq)]
pub struct WindingOutcome {
    /// The contour with all inserted nodes.
    pub contour: Contour,
    pub samples: Vec<ContourSample>,
    pub total_arg: f64,
    /// `min |f| / max |f|` over the nodes.
    pub min_relative_magnitude: f64,
    pub winding: Result<i64, InconclusiveReason>,
}

fn arg_step(a: &ScaledValue, b: &ScaledValue) -> f64 {
    (b.mantissa / a.mantissa).arg()
}

/// Winding number of `map` along `contour` with adaptive refinement.
pub fn winding_with<M: ContourMap, E: Executor>(
    map: &M,
    contour: &Contour,
    exec: &E,
    opts: &WindingOptions,
) -> WindingOutcome {
    let mut contour = contour.clone();
    let mut params = core::mem::take(&mut contour.params);
    let len = contour.length();
    let evaluate = |ps: &[f64]| -> Vec<(Complex64, Result<ScaledValue, String>)> {
        exec.map(ps.len(), |j| {
            let z = contour.point_at(ps[j]);
            (z, map.eval(z).map_err(|e| format!("{e}")))
        })
    };
    let mut values = evaluate(&params);
    let fail = |contour: Contour, samples: Vec<ContourSample>, reason: InconclusiveReason| WindingOutcome {
        contour,
        samples,
        total_arg: f64::NAN,
        min_relative_magnitude: f64::NAN,
        winding: Err(reason),
    };
    loop {
        if let Some((z, Err(message))) = values.iter().find(|v| v.1.is_err()).cloned() {
            contour.params = params;
            return fail(contour, Vec::new(), InconclusiveReason::EvaluationFailed { lambda: z, message });
        }
        let vals: Vec<ScaledValue> = values.iter().map(|v| *v.1.as_ref().unwrap()).collect();
        let n = vals.len();
        if let Some(i) = vals.iter().position(|v| !(v.mantissa.norm() > 0.0)) {
            let lambda = values[i].0;
            contour.params = params;
            return fail(contour, Vec::new(), InconclusiveReason::NearZero { lambda, relative: 0.0 });
        }
        let mut inserts = Vec::new();
        for i in 0..n {
            let j = (i + 1) % n;
            let coarse = n < opts.min_nodes
                || arg_step(&vals[i], &vals[j]).abs() >= opts.max_arg_step
                || (vals[j].log_abs() - vals[i].log_abs()).abs() >= opts.max_log_step;
            if coarse {
                let hi = if j == 0 { len } else { params[j] };
                if hi - params[i] < opts.min_spacing * len {
                    let (a, b) = (vals[i].log_abs(), vals[j].log_abs());
                    let lambda = contour.point_at(0.5 * (params[i] + hi));
                    contour.params = params;
                    return fail(
                        contour,
                        Vec::new(),
                        InconclusiveReason::NearZero { lambda, relative: exp(a.min(b) - a.max(b)) },
                    );
                }
                inserts.push((i, 0.5 * (params[i] + hi)));
            }
        }
        if inserts.is_empty() {
            break;
        }
        if n + inserts.len() > opts.max_nodes {
            contour.params = params;
            return fail(contour, Vec::new(), InconclusiveReason::RefinementBudget { nodes: opts.max_nodes });
        }
        let new_params: Vec<f64> = inserts.iter().map(|p| p.1).collect();
        let new_values = evaluate(&new_params);
        let mut merged_p = Vec::with_capacity(n + inserts.len());
        let mut merged_v = Vec::with_capacity(n + inserts.len());
        let mut next = inserts.iter().zip(new_values).peekable();
        for (i, (p, v)) in params.iter().zip(values).enumerate() {
            merged_p.push(*p);
            merged_v.push(v);
            if let Some(((k, s), nv)) = next.peek() {
                if *k == i {
                    merged_p.push(*s);
                    merged_v.push(nv.clone());
                    next.next();
                }
            }
        }
        params = merged_p;
        values = merged_v;
    }

    let samples: Vec<ContourSample> =
        values.iter().map(|(z, v)| ContourSample { lambda: *z, value: *v.as_ref().unwrap() }).collect();
    contour.params = params;
    let n = samples.len();
    let logs: Vec<f64> = samples.iter().map(|s| s.value.log_abs()).collect();
    let max_log = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_log = logs.iter().cloned().fold(f64::INFINITY, f64::min);
    let min_relative_magnitude = exp(min_log - max_log);
    for i in 0..n {
        let neighbour = logs[(i + n - 1) % n].max(logs[(i + 1) % n]);
        let relative = exp(logs[i] - neighbour);
        if relative < opts.magnitude_floor {
            let lambda = samples[i].lambda;
            return WindingOutcome {
                contour,
                samples,
                total_arg: f64::NAN,
                min_relative_magnitude,
                winding: Err(InconclusiveReason::NearZero { lambda, relative }),
            };
        }
    }
    let total_arg: f64 = (0..n).map(|i| arg_step(&samples[i].value, &samples[(i + 1) % n].value)).sum();
    let turns = total_arg / (2.0 * PI);
    let winding = round(turns);
    let winding = if (total_arg - 2.0 * PI * winding).abs() < 1e-3 {
        Ok(winding as i64)
    } else {
        Err(InconclusiveReason::NonInteger { total_arg })
    };
    WindingOutcome { contour, samples, total_arg, min_relative_magnitude, winding }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    SpectrallyStable,
    NonstableEigenvalues(usize),
    Inconclusive(InconclusiveReason),
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::SpectrallyStable => "SpectrallyStable",
            Verdict::NonstableEigenvalues(_) => "NonstableEigenvalues",
            Verdict::Inconclusive(_) => "Inconclusive",
        }
    }

    pub fn is_stable(&self) -> bool {
        matches!(self, Verdict::SpectrallyStable)
    }
}

/// Result of counting (and optionally locating) eigenvalues on a contour.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub contour: Contour,
    pub samples: Vec<ContourSample>,
    /// `None` when the count could not be established.
    pub winding: Option<i64>,
    pub min_abs_on_contour: f64,
    pub roots: Vec<Root>,
    pub verdict: Verdict,
}

/// Contour, Evans, and refinement settings for spectrum computations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumOptions {
    pub radius: f64,
    pub shift: f64,
    pub initial_nodes: usize,
    pub winding: WindingOptions,
    pub evans: EvansOptions,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions {
            radius: 10.0,
            shift: 0.0,
            initial_nodes: 128,
            winding: WindingOptions::default(),
            evans: EvansOptions::default(),
        }
    }
}

impl SpectrumOptions {
    pub fn contour(&self) -> Result<Contour, SpectrumError> {
        build_contour(self.radius, self.shift, self.initial_nodes)
    }
}

/// Turns a raw winding outcome into a report. The parity rule applies to
/// half-disks through the origin, which enclose exactly the eigenvalues
/// with `Re >= 0` counted by the stability index.
pub fn report_from_outcome(outcome: WindingOutcome) -> SpectrumReport {
    let parity_applies = matches!(outcome.contour.shape(), ContourShape::HalfDisk { shift, .. } if shift == 0.0);
    let verdict = match &outcome.winding {
        Err(reason) => Verdict::Inconclusive(reason.clone()),
        Ok(w) if *w < 0 => Verdict::Inconclusive(InconclusiveReason::Negative { winding: *w }),
        Ok(w) if parity_applies && w % 2 != 0 => Verdict::Inconclusive(InconclusiveReason::OddParity { winding: *w }),
        Ok(0) => Verdict::SpectrallyStable,
        Ok(w) => Verdict::NonstableEigenvalues(*w as usize),
    };
    SpectrumReport {
        winding: outcome.winding.as_ref().ok().copied(),
        min_abs_on_contour: outcome.min_relative_magnitude,
        contour: outcome.contour,
        samples: outcome.samples,
        roots: Vec::new(),
        verdict,
    }
}

/// Winding number of the Evans function of `profile` along `contour`.
pub fn winding_number<E: Executor>(
    profile: &SteadyProfile,
    contour: &Contour,
    opts: &SpectrumOptions,
    exec: &E,
) -> SpectrumReport {
    let system = EvansSystem::for_radius(profile, contour.max_modulus(), &opts.evans);
    report_from_outcome(winding_with(&system, contour, exec, &opts.winding))
}

/// [`winding_number`] on the default contour described by `opts`.
pub fn count_unstable<E: Executor>(
    profile: &SteadyProfile,
    opts: &SpectrumOptions,
    exec: &E,
) -> Result<SpectrumReport, SpectrumError> {
    Ok(winding_number(profile, &opts.contour()?, opts, exec))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `(z - a)(z - b)...` in scaled form.
    struct Poly(Vec<Complex64>);

    impl ContourMap for Poly {
        type Error = &'static str;
        fn eval(&self, z: Complex64) -> Result<ScaledValue, &'static str> {
            let v = self.0.iter().fold(Complex64::new(1.0, 0.0), |acc, r| acc * (z - r));
            Ok(ScaledValue { mantissa: v, log_scale: 0.0 })
        }
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn half_disk_nodes_lie_on_the_curve() {
        let contour = build_contour(10.0, 0.0, 16).unwrap();
        assert_eq!(contour.len(), 16);
        for z in contour.nodes() {
            let on_arc = (z.norm() - 10.0).abs() < 1e-12 && z.re >= -1e-12;
            let on_axis = z.re.abs() < 1e-12 && z.im.abs() <= 10.0 + 1e-12;
            assert!(on_arc || on_axis, "{z}");
        }
        let shifted = build_contour(10.0, 0.05, 64).unwrap();
        let edge: Vec<_> = shifted.nodes().into_iter().filter(|z| z.norm() < 9.99).collect();
        assert!(!edge.is_empty());
        assert!(edge.iter().all(|z| (z.re + 0.05).abs() < 1e-12));
        assert!(build_contour(1.0, 0.0, 4).is_ok());
        assert!(build_contour(1.0, 0.0, 3).is_err());
        assert!(build_contour(-1.0, 0.0, 16).is_err());
        assert!(build_contour(1.0, 1.0, 16).is_err());
    }

    #[test]
    fn contour_is_counterclockwise_and_closed() {
        for contour in [build_contour(3.0, 0.5, 200).unwrap(), Contour::rectangle(-1.0, 2.0, -0.5, 3.0, 200).unwrap()] {
            let z = contour.nodes();
            let n = z.len();
            let area: f64 =
                (0..n).map(|i| z[i].re * z[(i + 1) % n].im - z[(i + 1) % n].re * z[i].im).sum::<f64>() / 2.0;
            assert!(area > 0.0);
            assert!((contour.point_at(contour.length()) - z[0]).norm() < 1e-12);
            assert!(z.windows(2).all(|w| (w[1] - w[0]).norm() > 0.0));
        }
    }

    #[test]
    fn counts_polynomial_zeros() {
        let poly = Poly(alloc::vec![c(1.0, 2.0), c(1.0, -2.0), c(-3.0, 0.0), c(2.0, 0.5), c(20.0, 0.0)]);
        let contour = build_contour(10.0, 0.0, 4).unwrap();
        let out = winding_with(&poly, &contour, &Sequential, &WindingOptions::default());
        assert_eq!(out.winding, Ok(3));
        let n = out.samples.len();
        for i in 0..n {
            assert!(arg_step(&out.samples[i].value, &out.samples[(i + 1) % n].value).abs() < PI / 2.0);
        }
        let shifted = build_contour(10.0, 3.5, 16).unwrap();
        assert_eq!(winding_with(&poly, &shifted, &Sequential, &WindingOptions::default()).winding, Ok(4));
    }

    #[test]
    fn zero_on_a_node_is_inconclusive() {
        let poly = Poly(alloc::vec![c(0.0, 0.0)]);
        let out = winding_with(&poly, &build_contour(1.0, 0.0, 16).unwrap(), &Sequential, &WindingOptions::default());
        assert!(matches!(out.winding, Err(InconclusiveReason::NearZero { .. })));
    }

    #[test]
    fn zero_on_an_edge_is_inconclusive() {
        let poly = Poly(alloc::vec![c(0.0, 0.3)]);
        let out = winding_with(&poly, &build_contour(1.0, 0.0, 16).unwrap(), &Sequential, &WindingOptions::default());
        assert!(matches!(out.winding, Err(InconclusiveReason::NearZero { .. })), "{:?}", out.winding);
        // Just inside the contour the zero is resolved and counted.
        let poly = Poly(alloc::vec![c(1e-9, 0.3)]);
        let out = winding_with(&poly, &build_contour(1.0, 0.0, 16).unwrap(), &Sequential, &WindingOptions::default());
        assert_eq!(out.winding, Ok(1));
    }

    #[test]
    fn scaled_values_do_not_overflow() {
        struct Huge;
        impl ContourMap for Huge {
            type Error = &'static str;
            fn eval(&self, z: Complex64) -> Result<ScaledValue, &'static str> {
                // exp(5 z + 800) * (z - 0.5); exp(800) alone overflows.
                let m = Complex64::new(0.0, 5.0 * z.im).exp() * (z - 0.5);
                Ok(ScaledValue { mantissa: m, log_scale: 5.0 * z.re + 800.0 })
            }
        }
        let out = winding_with(&Huge, &build_contour(1.0, 0.0, 16).unwrap(), &Sequential, &WindingOptions::default());
        assert_eq!(out.winding, Ok(1));
    }

    #[test]
    fn odd_winding_on_standard_contour_is_flagged() {
        let poly = Poly(alloc::vec![c(1.0, 0.0)]);
        let report = report_from_outcome(winding_with(
            &poly,
            &build_contour(10.0, 0.0, 32).unwrap(),
            &Sequential,
            &WindingOptions::default(),
        ));
        assert!(matches!(report.verdict, Verdict::Inconclusive(InconclusiveReason::OddParity { winding: 1 })));
    }
}
