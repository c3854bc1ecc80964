//! Gauss-Legendre rules, a doubly graded composite rule on [0, 1], and
//! compensated summation.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Points per cell of the composite rule.
pub const GAUSS_POINTS: usize = 20;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(z) and its derivative
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn base_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GAUSS_POINTS))
}

/// Integrate `g` over `[lo, hi]` with the 20-point rule.
pub fn gauss_cell(g: &mut impl FnMut(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let (nodes, weights) = base_rule();
    let c = 0.5 * (lo + hi);
    let r = 0.5 * (hi - lo);
    let mut acc = Neumaier::default();
    for (z, w) in nodes.iter().zip(weights) {
        acc.add(w * g(c + r * z));
    }
    acc.sum() * r
}

/// Cell boundaries of the graded mesh on [0, 1] at refinement `level`.
///
/// Geometric grading with ratio 1/2 toward both endpoints to depth `4·2^level`,
/// and `2^level` uniform panels on [1/4, 3/4].
pub fn graded_mesh(level: u32) -> Vec<f64> {
    let depth = 4usize << level;
    let panels = 1usize << level;
    let mut pts = Vec::with_capacity(2 * depth + panels + 3);
    pts.push(0.0);
    for k in (1..=depth).rev() {
        pts.push(0.5 * 0.5f64.powi(k as i32));
    }
    for p in 1..panels {
        pts.push(0.25 + 0.5 * p as f64 / panels as f64);
    }
    for k in 1..=depth {
        pts.push(1.0 - 0.5 * 0.5f64.powi(k as i32));
    }
    pts.push(1.0);
    pts
}

/// Composite Gauss rule over a graded mesh of [0, 1].
pub fn graded_fixed(g: &mut impl FnMut(f64) -> f64, level: u32) -> f64 {
    let pts = graded_mesh(level);
    let mut acc = Neumaier::default();
    for w in pts.windows(2) {
        acc.add(gauss_cell(g, w[0], w[1]));
    }
    acc.sum()
}

/// Smallest and largest refinement level tried by [`graded_adaptive`].
pub const MIN_LEVEL: u32 = 1;
pub const MAX_LEVEL: u32 = 7;

/// Integrate over [0, 1], doubling the grading depth until successive
/// estimates agree to `tol`. Returns the estimate and the level reached.
pub fn graded_adaptive(g: &mut impl FnMut(f64) -> f64, tol: f64) -> Result<(f64, u32)> {
    let mut prev = graded_fixed(g, MIN_LEVEL);
    for level in MIN_LEVEL + 1..=MAX_LEVEL {
        let cur = graded_fixed(g, level);
        if !cur.is_finite() {
            return Err(Error::NonFinite);
        }
        if (cur - prev).abs() <= tol {
            return Ok((cur, level));
        }
        prev = cur;
    }
    Err(Error::NonConvergence {
        prev,
        last: graded_fixed(g, MAX_LEVEL),
    })
}

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn sum(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum in iteration order.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = Neumaier::default();
    for v in values {
        acc.add(v);
    }
    acc.sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rule_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(GAUSS_POINTS);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // exact up to degree 39
        let moment: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(38)).sum();
        assert!((moment - 2.0 / 39.0).abs() < 1e-14);
        let odd: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(37)).sum();
        assert!(odd.abs() < 1e-15);
    }

    #[test]
    fn small_rules() {
        let (x, w) = gauss_legendre(1);
        assert_eq!(x, vec![0.0]);
        assert!((w[0] - 2.0).abs() < 1e-15);
        let (x, _) = gauss_legendre(2);
        assert!((x[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn graded_rule_handles_endpoint_singularities() {
        // ∫ v^{-1/2} dv = 2 and ∫ (1-v)^{0.1} dv = 1/1.1
        let (a, _) = graded_adaptive(&mut |v: f64| v.powf(-0.5), 1e-12).unwrap();
        assert!((a - 2.0).abs() < 1e-10, "{a}");
        let (b, _) = graded_adaptive(&mut |v: f64| (1.0 - v).powf(0.1), 1e-12).unwrap();
        assert!((b - 1.0 / 1.1).abs() < 1e-12, "{b}");
    }

    #[test]
    fn mesh_is_monotone() {
        let m = graded_mesh(3);
        assert!(m.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(m[0], 0.0);
        assert_eq!(*m.last().unwrap(), 1.0);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(neumaier_sum(v), 2.0);
    }
}
