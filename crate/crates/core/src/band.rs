//! Determinant of a banded complex matrix by LU with partial pivoting.
//!
//! Only the determinant is needed, so multipliers are discarded and the
//! elimination runs over a sliding dense window of `kl + 1` rows by
//! `kl + ku + 1` columns (the fill-in bound of partial pivoting).

// Row/column index loops read closer to the textbook elimination.
#![allow(clippy::needless_range_loop)]

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::math::ln;

/// Rows of a band matrix; row `i` stores columns `i - kl ..= i + ku`.
pub(crate) struct BandMatrix {
    pub n: usize,
    pub kl: usize,
    pub ku: usize,
    data: Vec<Complex64>,
}

/// `det = phase * exp(log_abs)`, `|phase| = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Determinant {
    pub phase: Complex64,
    pub log_abs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Singular {
    pub column: usize,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        BandMatrix { n, kl, ku, data: vec![Complex64::new(0.0, 0.0); n * (kl + ku + 1)] }
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku && j < self.n, "({i}, {j}) outside band");
        i * (self.kl + self.ku + 1) + (j + self.kl - i)
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        let k = self.offset(i, j);
        self.data[k] = v;
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> Complex64 {
        if j + self.kl < i || j > i + self.ku || j >= self.n {
            return Complex64::new(0.0, 0.0);
        }
        self.data[self.offset(i, j)]
    }

    pub fn determinant(&self) -> Result<Determinant, Singular> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let width = kl + ku + 1;
        let rows = kl + 1;
        // window[r][c] is entry (k + r, k + c) of the partially reduced matrix.
        let mut window: Vec<Vec<Complex64>> = (0..rows)
            .map(|r| (0..width).map(|c| if r < n { self.get(r, c) } else { Complex64::new(0.0, 0.0) }).collect())
            .collect();
        let mut phase = Complex64::new(1.0, 0.0);
        let mut log_abs = 0.0;
        for k in 0..n {
            let active = rows.min(n - k);
            let mut p = 0;
            let mut best = window[0][0].norm();
            for r in 1..active {
                let v = window[r][0].norm();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > 0.0) || !best.is_finite() {
                return Err(Singular { column: k });
            }
            if p != 0 {
                window.swap(0, p);
                phase = -phase;
            }
            let pivot = window[0][0];
            log_abs += ln(best);
            phase *= pivot / best;
            let (head, tail) = window.split_at_mut(1);
            let pivot_row = &head[0];
            for row in tail.iter_mut().take(active - 1) {
                let mult = row[0] / pivot;
                if mult.re == 0.0 && mult.im == 0.0 {
                    continue;
                }
                for c in 1..width {
                    row[c] -= mult * pivot_row[c];
                }
            }
            // Slide: drop the pivot row and column k, bring in row k + rows.
            let mut recycled = window.remove(0);
            for row in window.iter_mut() {
                row.rotate_left(1);
                row[width - 1] = Complex64::new(0.0, 0.0);
            }
            let next = k + rows;
            for (c, slot) in recycled.iter_mut().enumerate() {
                *slot = if next < n { self.get(next, k + 1 + c) } else { Complex64::new(0.0, 0.0) };
            }
            window.push(recycled);
            phase /= phase.norm();
        }
        Ok(Determinant { phase, log_abs })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::exp;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Dense Gaussian elimination with partial pivoting, the reference path.
    fn dense_det(a: &mut [Vec<Complex64>]) -> Complex64 {
        let n = a.len();
        let mut det = c(1.0, 0.0);
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[i][k].norm().partial_cmp(&a[j][k].norm()).unwrap()).unwrap();
            if p != k {
                a.swap(p, k);
                det = -det;
            }
            det *= a[k][k];
            for i in k + 1..n {
                let m = a[i][k] / a[k][k];
                for j in k..n {
                    let t = a[k][j];
                    a[i][j] -= m * t;
                }
            }
        }
        det
    }

    #[test]
    fn matches_dense_elimination() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for (n, kl, ku) in [(1, 0, 0), (5, 1, 1), (12, 4, 3), (30, 2, 5), (9, 8, 8)] {
            let mut band = BandMatrix::zeros(n, kl, ku);
            let mut dense = vec![vec![c(0.0, 0.0); n]; n];
            for i in 0..n {
                for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                    // Small diagonal entries force pivoting.
                    let v = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * if i == j { 0.01 } else { 1.0 };
                    band.set(i, j, v);
                    dense[i][j] = v;
                }
            }
            let d = band.determinant().unwrap();
            let expected = dense_det(&mut dense);
            let got = d.phase * exp(d.log_abs);
            assert!((got - expected).norm() <= 1e-10 * expected.norm(), "n={n}: {got} vs {expected}");
        }
    }

    #[test]
    fn detects_singularity() {
        let mut band = BandMatrix::zeros(3, 1, 1);
        band.set(0, 0, c(1.0, 0.0));
        band.set(1, 0, c(2.0, 0.0));
        band.set(2, 2, c(1.0, 0.0));
        assert!(band.determinant().is_err());
    }
}
