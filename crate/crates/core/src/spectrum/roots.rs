//! Root location by rectangle quadrisection and the spectral abscissa.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::{
    build_contour, winding_with, Contour, ContourMap, Executor, InconclusiveReason, ScaledValue, SpectrumError,
    SpectrumOptions, WindingOptions,
};
use crate::evans::EvansSystem;
use crate::math::{exp, sqrt};
use crate::steady::SteadyProfile;

/// Closed rectangle `[re_min, re_max] x [im_min, im_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootBox {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl RootBox {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self, SpectrumError> {
        Contour::rectangle(re_min, re_max, im_min, im_max, 4)?;
        Ok(RootBox { re_min, re_max, im_min, im_max })
    }

    /// Mirror image across the real axis.
    pub fn conj(&self) -> RootBox {
        RootBox { im_min: -self.im_max, im_max: -self.im_min, ..*self }
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    pub fn diameter(&self) -> f64 {
        let (w, h) = (self.re_max - self.re_min, self.im_max - self.im_min);
        sqrt(w * w + h * h)
    }

    pub fn contains(&self, z: Complex64, margin: f64) -> bool {
        z.re >= self.re_min - margin
            && z.re <= self.re_max + margin
            && z.im >= self.im_min - margin
            && z.im <= self.im_max + margin
    }

    fn contour(&self, nodes: usize) -> Contour {
        Contour::rectangle(self.re_min, self.re_max, self.im_min, self.im_max, nodes).expect("non-empty box")
    }

    /// Four children split slightly off-centre, so that symmetric features
    /// (real roots, conjugate pairs) do not land on the new edges.
    fn split(&self) -> [RootBox; 4] {
        let re = self.re_min + 0.5037 * (self.re_max - self.re_min);
        let im = self.im_min + 0.4961 * (self.im_max - self.im_min);
        [
            RootBox { re_max: re, im_max: im, ..*self },
            RootBox { re_min: re, im_max: im, ..*self },
            RootBox { re_max: re, im_min: im, ..*self },
            RootBox { re_min: re, im_min: im, ..*self },
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub lambda: Complex64,
    /// `|D(lambda)|` relative to the largest `|D|` on the enclosing box.
    pub residual: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootSearch {
    /// Winding of the outer box, `None` if it could not be computed.
    pub winding: Option<i64>,
    /// Sorted by decreasing real part, then increasing imaginary part.
    pub roots: Vec<Root>,
    /// Sub-boxes abandoned without a reliable count.
    pub inconclusive: Vec<(RootBox, InconclusiveReason)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOptions {
    /// Initial nodes on every box boundary.
    pub box_nodes: usize,
    /// Boxes smaller than this are reported as a root without secant polish.
    pub tol_root: f64,
    pub max_depth: usize,
    pub secant_iterations: usize,
    pub winding: WindingOptions,
}

impl Default for RootOptions {
    fn default() -> Self {
        RootOptions {
            box_nodes: 32,
            tol_root: 1e-8,
            max_depth: 48,
            secant_iterations: 60,
            winding: WindingOptions::default(),
        }
    }
}

fn combine(a: &ScaledValue, b: &ScaledValue) -> (Complex64, Complex64) {
    let l = a.log_scale.max(b.log_scale);
    (a.mantissa * exp(a.log_scale - l), b.mantissa * exp(b.log_scale - l))
}

/// Secant iteration from the box centre. Returns the converged point, if
/// any, without checking where it landed.
fn secant<M: ContourMap>(map: &M, bx: &RootBox, iterations: usize) -> Option<(Complex64, ScaledValue)> {
    let mut z0 = bx.center();
    let step = 0.05 * bx.diameter();
    let mut z1 = z0 + Complex64::new(step * 0.6, step * 0.8);
    let mut f0 = map.eval(z0).ok()?;
    let mut f1 = map.eval(z1).ok()?;
    for _ in 0..iterations {
        let (a, b) = combine(&f0, &f1);
        let denom = b - a;
        if !(denom.norm() > 0.0) {
            return None;
        }
        let z2 = z1 - b * (z1 - z0) / denom;
        if !(z2.re.is_finite() && z2.im.is_finite()) {
            return None;
        }
        let f2 = map.eval(z2).ok()?;
        let moved = (z2 - z1).norm();
        z0 = z1;
        f0 = f1;
        z1 = z2;
        f1 = f2;
        if moved <= 1e-13 * z1.norm().max(1.0) || f1.mantissa.norm() == 0.0 {
            return Some((z1, f1));
        }
        if (z1 - bx.center()).norm() > 4.0 * bx.diameter() {
            return None;
        }
    }
    None
}

fn box_winding<M: ContourMap, E: Executor>(
    map: &M,
    bx: &RootBox,
    exec: &E,
    opts: &RootOptions,
) -> (Result<i64, InconclusiveReason>, f64) {
    let out = winding_with(map, &bx.contour(opts.box_nodes), exec, &opts.winding);
    let max_log = out.samples.iter().map(|s| s.value.log_abs()).fold(f64::NEG_INFINITY, f64::max);
    (out.winding, max_log)
}

/// Zeros of `map` inside `bx` by recursive quadrisection with secant polish.
pub fn locate_roots_with<M: ContourMap, E: Executor>(
    map: &M,
    bx: &RootBox,
    exec: &E,
    opts: &RootOptions,
) -> RootSearch {
    let mut roots = Vec::new();
    let mut inconclusive = Vec::new();
    let (top, top_log) = box_winding(map, bx, exec, opts);
    let winding = match top {
        Ok(w) => w,
        Err(reason) => {
            inconclusive.push((*bx, reason));
            return RootSearch { winding: None, roots, inconclusive };
        }
    };
    let mut stack = alloc::vec![(*bx, winding, top_log, 0usize)];
    while let Some((b, w, max_log, depth)) = stack.pop() {
        if w <= 0 {
            if w < 0 {
                inconclusive.push((b, InconclusiveReason::Negative { winding: w }));
            }
            continue;
        }
        if w == 1 {
            if let Some((z, f)) = secant(map, &b, opts.secant_iterations) {
                if b.contains(z, 1e-9 * b.diameter()) {
                    roots.push(Root { lambda: z, residual: exp(f.log_abs() - max_log), multiplicity: 1 });
                    continue;
                }
            }
        }
        if b.diameter() < opts.tol_root || depth >= opts.max_depth {
            let z = b.center();
            let residual = map.eval(z).map(|f| exp(f.log_abs() - max_log)).unwrap_or(f64::NAN);
            roots.push(Root { lambda: z, residual, multiplicity: w as usize });
            continue;
        }
        let children = b.split();
        let mut results = Vec::with_capacity(4);
        let mut failed = None;
        for c in &children {
            match box_winding(map, c, exec, opts) {
                (Ok(cw), l) => results.push((*c, cw, l)),
                (Err(reason), _) => {
                    failed = Some(reason);
                    break;
                }
            }
        }
        if let Some(reason) = failed {
            inconclusive.push((b, reason));
            continue;
        }
        let sum: i64 = results.iter().map(|r| r.1).sum();
        if sum != w {
            inconclusive.push((b, InconclusiveReason::InconsistentSubdivision { parent: w, children: sum }));
            continue;
        }
        for (c, cw, l) in results.into_iter().rev() {
            stack.push((c, cw, l, depth + 1));
        }
    }
    roots.sort_by(|a, b| {
        b.lambda
            .re
            .partial_cmp(&a.lambda.re)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(a.lambda.im.partial_cmp(&b.lambda.im).unwrap_or(core::cmp::Ordering::Equal))
    });
    RootSearch { winding: Some(winding), roots, inconclusive }
}

/// Eigenvalues of `profile` inside `bx` via the Evans function.
pub fn locate_roots<E: Executor>(
    profile: &SteadyProfile,
    bx: &RootBox,
    spectrum: &SpectrumOptions,
    opts: &RootOptions,
    exec: &E,
) -> RootSearch {
    let radius = bx.contour(4).max_modulus();
    let system = EvansSystem::for_radius(profile, radius, &spectrum.evans);
    locate_roots_with(&system, bx, exec, opts)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbscissaOptions {
    pub spectrum: SpectrumOptions,
    pub roots: RootOptions,
    /// First trial shift of the straight edge.
    pub initial_shift: f64,
    /// Deepest shift tried; defaults to `0.9 * radius` when `None`.
    pub max_shift: Option<f64>,
    /// Bisection steps on the shift once an eigenvalue is enclosed.
    pub depth: usize,
}

impl Default for AbscissaOptions {
    fn default() -> Self {
        AbscissaOptions {
            spectrum: SpectrumOptions::default(),
            roots: RootOptions::default(),
            initial_shift: 0.05,
            max_shift: None,
            depth: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Abscissa {
    /// Rightmost located eigenvalue(s); `value` is their real part.
    Located { value: f64, roots: Vec<Root> },
    /// No eigenvalue with `Re >= -bound` inside the radius.
    Below { bound: f64 },
}

impl Abscissa {
    /// The abscissa, or the sentinel `-bound`.
    pub fn value(&self) -> f64 {
        match self {
            Abscissa::Located { value, .. } => *value,
            Abscissa::Below { bound } => -*bound,
        }
    }
}

/// Rightmost eigenvalue real part of a spectrally stable profile.
///
/// The straight edge of the half-disk is pushed left (doubling, then
/// bisection) until the enclosed count becomes positive, and the roots in
/// the final thin band are located and polished.
pub fn spectral_abscissa<E: Executor>(
    profile: &SteadyProfile,
    opts: &AbscissaOptions,
    exec: &E,
) -> Result<Abscissa, SpectrumError> {
    let sp = &opts.spectrum;
    let radius = sp.radius;
    let max_shift = opts.max_shift.unwrap_or(0.9 * radius).min(0.999 * radius);
    let system = EvansSystem::for_radius(profile, radius, &sp.evans);
    let count = |shift: f64| -> Result<i64, SpectrumError> {
        let contour = build_contour(radius, shift, sp.initial_nodes)?;
        winding_with(&system, &contour, exec, &sp.winding)
            .winding
            .map_err(|r| SpectrumError::NotStable(format!("shift {shift}: {r}")))
    };
    let w0 = count(0.0)?;
    if w0 != 0 {
        return Err(SpectrumError::NotStable(format!("{w0} eigenvalues with Re >= 0")));
    }
    let mut lo = 0.0;
    let mut hi = opts.initial_shift.min(max_shift);
    loop {
        if count(hi)? > 0 {
            break;
        }
        if hi >= max_shift {
            return Ok(Abscissa::Below { bound: max_shift });
        }
        lo = hi;
        hi = (2.0 * hi).min(max_shift);
    }
    for _ in 0..opts.depth {
        let mid = 0.5 * (lo + hi);
        if count(mid)? > 0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let pad = 0.25 * (hi - lo);
    let half_height = sqrt(radius * radius - hi * hi);
    let band = RootBox::new(-hi - pad, -lo + pad, -half_height, half_height)?;
    let found = locate_roots_with(&system, &band, exec, &opts.roots);
    let roots: Vec<Root> = found.roots.into_iter().filter(|r| r.lambda.re >= -hi - pad).collect();
    let value = roots.iter().map(|r| r.lambda.re).fold(f64::NEG_INFINITY, f64::max);
    if value.is_finite() {
        Ok(Abscissa::Located { value, roots })
    } else {
        Ok(Abscissa::Located { value: -0.5 * (lo + hi), roots })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::Sequential;

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
    fn finds_simple_roots() {
        let zeros = alloc::vec![c(-1.0, 2.0), c(-1.0, -2.0), c(-0.3, 0.0), c(0.5, 0.7), c(4.0, 0.0)];
        let poly = Poly(zeros.clone());
        let bx = RootBox::new(-2.0, 1.0, -3.0, 3.0).unwrap();
        let found = locate_roots_with(&poly, &bx, &Sequential, &RootOptions::default());
        assert_eq!(found.winding, Some(4));
        assert!(found.inconclusive.is_empty());
        assert_eq!(found.roots.len(), 4);
        for z in &zeros[..4] {
            assert!(found.roots.iter().any(|r| (r.lambda - z).norm() < 1e-10), "{z} missing: {:?}", found.roots);
        }
        assert!(found.roots[0].lambda.re > 0.4);
    }

    #[test]
    fn double_root_reported_with_multiplicity() {
        let poly = Poly(alloc::vec![c(0.2, 0.1), c(0.2, 0.1)]);
        let found = locate_roots_with(
            &poly,
            &RootBox::new(-1.0, 1.0, -1.0, 1.0).unwrap(),
            &Sequential,
            &RootOptions::default(),
        );
        let total: usize = found.roots.iter().map(|r| r.multiplicity).sum();
        assert_eq!(total, 2);
        assert!(found.roots.iter().all(|r| (r.lambda - c(0.2, 0.1)).norm() < 1e-6));
    }

    #[test]
    fn empty_box_gives_no_roots() {
        let poly = Poly(alloc::vec![c(5.0, 5.0)]);
        let found = locate_roots_with(
            &poly,
            &RootBox::new(-1.0, 1.0, -1.0, 1.0).unwrap(),
            &Sequential,
            &RootOptions::default(),
        );
        assert_eq!(found.winding, Some(0));
        assert!(found.roots.is_empty());
    }

    #[test]
    fn box_validation() {
        assert!(RootBox::new(1.0, 0.0, 0.0, 1.0).is_err());
        let b = RootBox::new(0.0, 1.0, 0.5, 2.0).unwrap();
        assert_eq!(b.conj(), RootBox::new(0.0, 1.0, -2.0, -0.5).unwrap());
    }
}
