//! The potential kernel `a` of simple random walk on `Z²`, normalized by
//! `a(0) = 0` and `(Pa)(x) − a(x) = 1_{x=0}`.
//!
//! Values with `|x| <= R0` come from the one-dimensional integral
//! `a(x) = (2/π) ∫_0^π (1 − cos(x₁θ) e^{−|x₂| t(θ)}) / sinh t(θ) dθ`,
//! `cosh t = 2 − cos θ`, evaluated by composite Gauss–Legendre quadrature.
//! Beyond `R0` the expansion `g log|x| + c0 + c4 cos(4φ)/|x|²` is used.

use crate::lattice::Point;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::io::{self, Write};
use std::sync::OnceLock;

/// `g = 2/π`.
pub const G: f64 = 2.0 / PI;

/// Constant term of the expansion, fit on `R0/2 <= |x| <= R0` with `R0 = 200`
/// by least squares against the exact table.
pub const C0: f64 = 1.029_373_705_654_358;

/// Coefficient of `cos(4φ)/|x|²`, fit jointly with [`C0`].
pub const C4: f64 = -0.053_054_647_760_345_22;

/// Default exact-table radius.
pub const DEFAULT_R0: usize = 200;

const GL_ORDER: usize = 20;

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm1) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn gl_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GL_ORDER))
}

/// Direct quadrature of the integral representation.
pub fn potential_integral(x: Point) -> f64 {
    let x1 = x[0].unsigned_abs() as f64;
    let x2 = x[1].unsigned_abs() as f64;
    if x1 == 0.0 && x2 == 0.0 {
        return 0.0;
    }
    let (nodes, weights) = gl_rule();
    let panels = 4 + ((x1 + x2) / 2.0).ceil() as usize;
    let h = PI / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let a = p as f64 * h;
        for (z, w) in nodes.iter().zip(weights) {
            let theta = a + 0.5 * h * (z + 1.0);
            let s = (0.5 * theta).sin();
            // sinh t = 2 sin(θ/2) sqrt(1 + sin²(θ/2))
            let sinh_t = 2.0 * s * (1.0 + s * s).sqrt();
            let t = sinh_t.asinh();
            let c = (x1 * theta).cos();
            let sx = (0.5 * x1 * theta).sin();
            let num = 2.0 * sx * sx - c * (-x2 * t).exp_m1();
            sum += w * num / sinh_t;
        }
    }
    G * sum * 0.5 * h
}

/// `g log|x| + c0 + c4 cos(4φ)/|x|²`.
pub fn potential_asymptotic(x: Point) -> f64 {
    let (a, b) = (x[0] as f64, x[1] as f64);
    let r2 = a * a + b * b;
    if r2 == 0.0 {
        return 0.0;
    }
    // cos 4φ = (a⁴ − 6a²b² + b⁴)/r⁴
    let cos4 = (a * a * a * a - 6.0 * a * a * b * b + b * b * b * b) / (r2 * r2);
    0.5 * G * r2.ln() + C0 + C4 * cos4 / r2
}

/// Exact table on `|x| <= R0` plus the asymptotic expansion beyond.
pub struct PotentialKernel {
    r0: usize,
    table: Vec<f64>,
}

#[inline]
fn octant(x: Point) -> (usize, usize) {
    let a = x[0].unsigned_abs() as usize;
    let b = x[1].unsigned_abs() as usize;
    if a >= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[inline]
fn slot(a: usize, b: usize) -> usize {
    a * (a + 1) / 2 + b
}

impl PotentialKernel {
    pub fn new(r0: usize) -> PotentialKernel {
        let n = slot(r0, r0) + 1;
        let lim = (r0 * r0) as u64;
        let table: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                // Invert slot(a, b) = i.
                let a = ((((8 * i + 1) as f64).sqrt() - 1.0) / 2.0).floor() as usize;
                let a = if slot(a + 1, 0) <= i { a + 1 } else if slot(a, 0) > i { a - 1 } else { a };
                let b = i - slot(a, 0);
                if (a * a + b * b) as u64 <= lim {
                    potential_integral([a as i32, b as i32])
                } else {
                    f64::NAN
                }
            })
            .collect();
        PotentialKernel { r0, table }
    }

    pub fn r0(&self) -> usize {
        self.r0
    }

    #[inline]
    pub fn in_table(&self, x: Point) -> bool {
        let (a, b) = octant(x);
        a <= self.r0 && ((a * a + b * b) as u64) <= (self.r0 * self.r0) as u64
    }

    #[inline]
    pub fn eval(&self, x: Point) -> f64 {
        if self.in_table(x) {
            let (a, b) = octant(x);
            self.table[slot(a, b)]
        } else {
            potential_asymptotic(x)
        }
    }

    /// Least-squares fit of `(c0, c4)` against the table on `lo <= |x| <= hi`.
    pub fn fit_constants(&self, lo: f64, hi: f64) -> (f64, f64) {
        let (mut s11, mut s12, mut s22, mut t1, mut t2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for a in 0..=self.r0 {
            for b in 0..=a {
                let r2 = (a * a + b * b) as f64;
                let r = r2.sqrt();
                if r < lo || r > hi || !self.in_table([a as i32, b as i32]) {
                    continue;
                }
                let (af, bf) = (a as f64, b as f64);
                let f = (af.powi(4) - 6.0 * af * af * bf * bf + bf.powi(4)) / (r2 * r2 * r2);
                let y = self.table[slot(a, b)] - 0.5 * G * r2.ln();
                // Weight by orbit size so the fit is over Z², not the octant.
                let w = if b == 0 || a == b { 4.0 } else { 8.0 };
                s11 += w;
                s12 += w * f;
                s22 += w * f * f;
                t1 += w * y;
                t2 += w * y * f;
            }
        }
        let det = s11 * s22 - s12 * s12;
        ((t1 * s22 - t2 * s12) / det, (s11 * t2 - s12 * t1) / det)
    }

    /// Largest `|table − asymptotic|` on `lo <= |x| <= R0`.
    pub fn overlap_error(&self, lo: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..=self.r0 {
            for b in 0..=a {
                let x = [a as i32, b as i32];
                if norm2(x) >= lo * lo && self.in_table(x) {
                    worst = worst.max((self.eval(x) - potential_asymptotic(x)).abs());
                }
            }
        }
        worst
    }

    /// CSV dump `x1,x2,a` of the table octant `0 <= x2 <= x1`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x1,x2,a")?;
        for a in 0..=self.r0 {
            for b in 0..=a {
                if self.in_table([a as i32, b as i32]) {
                    writeln!(out, "{a},{b},{:.17e}", self.table[slot(a, b)])?;
                }
            }
        }
        Ok(())
    }
}

fn norm2(x: Point) -> f64 {
    let (a, b) = (x[0] as f64, x[1] as f64);
    a * a + b * b
}

/// Process-wide kernel with `R0 = 200`, built on first use.
pub fn kernel() -> &'static PotentialKernel {
    static K: OnceLock<PotentialKernel> = OnceLock::new();
    K.get_or_init(|| PotentialKernel::new(DEFAULT_R0))
}

/// `a(x)`.
#[inline]
pub fn potential_kernel(x: Point) -> f64 {
    kernel().eval(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(GL_ORDER);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let m: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(38)).sum();
        assert!((m - 2.0 / 39.0).abs() < 1e-14);
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(potential_integral([0, 0]), 0.0);
        assert!((potential_integral([1, 0]) - 1.0).abs() < 1e-13);
        assert!((potential_integral([1, 1]) - 4.0 / PI).abs() < 1e-13);
        // a(2,0) = 4 − 8/π
        assert!((potential_integral([2, 0]) - (4.0 - 8.0 / PI)).abs() < 1e-13);
    }

    #[test]
    fn harmonic_off_origin() {
        for x in [[0, 0], [1, 0], [3, 2], [17, -5], [40, 40], [120, 75]] {
            let mean: f64 = crate::lattice::NEIGHBORS
                .iter()
                .map(|d| potential_integral(crate::lattice::add(x, *d)))
                .sum::<f64>()
                / 4.0;
            let lap = mean - potential_integral(x);
            let expect = if x == [0, 0] { 1.0 } else { 0.0 };
            assert!((lap - expect).abs() < 1e-12, "{x:?}: {lap}");
        }
    }
}
