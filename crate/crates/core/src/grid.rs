//! Uniform radial grid and the quadrature / finite-difference stencils built on it.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Order of the Gregory end correction used by every composite quadrature.
pub const GREGORY_ORDER: usize = 6;

const GREGORY: [f64; 8] = [
    1.0 / 12.0,
    1.0 / 24.0,
    19.0 / 720.0,
    3.0 / 160.0,
    863.0 / 60480.0,
    275.0 / 24192.0,
    33953.0 / 3628800.0,
    8183.0 / 1036800.0,
];

/// Uniform grid r_j = j*h, j = 0..=n, on [0, r_max].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialGrid {
    r_max: f64,
    n: usize,
    h: f64,
}

impl RadialGrid {
    pub fn new(r_max: f64, n: usize) -> Result<Self> {
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::Grid(format!("r_max must be positive, got {r_max}")));
        }
        if n < 16 {
            return Err(Error::Grid(format!("need at least 16 intervals, got {n}")));
        }
        Ok(Self { r_max, n, h: r_max / n as f64 })
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Number of intervals; there are n + 1 nodes.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn r(&self, j: usize) -> f64 {
        j as f64 * self.h
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n).map(move |j| self.r(j))
    }

    /// Same extent, twice as many intervals.
    pub fn refined(&self) -> Self {
        Self { r_max: self.r_max, n: 2 * self.n, h: self.h / 2.0 }
    }

    /// Composite weights over all nodes (left end Gregory-corrected).
    pub fn weights(&self) -> Vec<f64> {
        gregory_weights(self.n, self.h)
    }

    /// Composite quadrature of sampled values over [0, r_max].
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        self.weights().iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

/// Trapezoid weights on m intervals of width h with Gregory corrections of
/// order `GREGORY_ORDER` at the left end.
pub fn gregory_weights(m: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; m + 1];
    w[0] = 0.5 * h;
    w[m] = if m == 0 { 0.0 } else { 0.5 * h };
    let order = GREGORY_ORDER.min(m.saturating_sub(1));
    // Left correction: sum_k (-1)^{k+1} G_k Delta^k f_0.
    for k in 1..=order {
        let g = if k % 2 == 1 { GREGORY[k - 1] } else { -GREGORY[k - 1] };
        // Delta^k f_0 = sum_i (-1)^{k-i} C(k,i) f_i
        let mut binom = 1.0;
        for i in 0..=k {
            let s = if (k - i) % 2 == 0 { 1.0 } else { -1.0 };
            w[i] += h * g * s * binom;
            binom = binom * (k - i) as f64 / (i + 1) as f64;
        }
    }
    w
}

/// Fornberg finite-difference weights for derivative order `deriv` at `x0`
/// from the given abscissae.
pub fn fd_weights(x0: f64, xs: &[f64], deriv: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; deriv + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(deriv);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[deriv]).collect()
}

/// Weights w_i with sum_i w_i x_i^k = integral of x^(k+a) over [lo, hi],
/// k = 0..xs.len()-1; i.e. product integration against x^a of the
/// interpolating polynomial through the abscissae.
pub fn moment_weights(xs: &[f64], lo: f64, hi: f64, a: f64) -> Vec<f64> {
    let m = xs.len();
    let v = DMatrix::from_fn(m, m, |k, i| xs[i].powi(k as i32));
    let rhs = DVector::from_fn(m, |k, _| {
        let e = k as f64 + a + 1.0;
        (hi.powf(e) - lo.powf(e)) / e
    });
    let sol = v.lu().solve(&rhs).expect("distinct abscissae");
    sol.iter().copied().collect()
}

/// Second-derivative stencil at node j using only nodes 0..=last, 4th order.
pub(crate) fn second_derivative_stencil(j: usize, last: usize, h: f64) -> (usize, Vec<f64>) {
    let start = if j < 2 {
        0
    } else if j + 2 > last {
        last - 5
    } else {
        j - 2
    };
    let width = if j < 2 || j + 2 > last { 6 } else { 5 };
    let xs: Vec<f64> = (start..start + width).map(|i| i as f64).collect();
    let w = fd_weights(j as f64, &xs, 2).into_iter().map(|c| c / (h * h)).collect();
    (start, w)
}

/// First-derivative stencil at node j, 4th order, within nodes 0..=last.
pub(crate) fn first_derivative_stencil(j: usize, last: usize, h: f64) -> (usize, Vec<f64>) {
    let start = if j < 2 {
        0
    } else if j + 2 > last {
        last - 4
    } else {
        j - 2
    };
    let xs: Vec<f64> = (start..start + 5).map(|i| i as f64).collect();
    let w = fd_weights(j as f64, &xs, 1).into_iter().map(|c| c / h).collect();
    (start, w)
}

/// Cumulative integral C_k = int_0^{r_k} g(r) dr at every node, using a
/// six-point Lagrange rule on each interval.
pub fn cumulative_integral(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len() - 1;
    assert!(n >= 6, "cumulative integral needs at least six intervals");
    let mut out = vec![0.0; n + 1];
    let mut cache: Vec<(usize, Vec<f64>)> = Vec::new();
    for k in 1..=n {
        // interval [k-1, k]; stencil nodes start..start+6
        let start = (k as isize - 3).clamp(0, n as isize - 5) as usize;
        let offset = k - 1 - start;
        let w = match cache.iter().find(|(o, _)| *o == offset) {
            Some((_, w)) => w.clone(),
            None => {
                let xs: Vec<f64> = (0..6).map(|i| i as f64).collect();
                let w = moment_weights(&xs, offset as f64, offset as f64 + 1.0, 0.0);
                cache.push((offset, w.clone()));
                w
            }
        };
        let piece: f64 = (0..6).map(|i| w[i] * values[start + i]).sum();
        out[k] = out[k - 1] + h * piece;
    }
    out
}

/// Lagrange-extrapolate samples at x = 1, 2, ..., m (in units of h) to x = 0.
pub(crate) fn extrapolate_to_zero(samples: &[f64]) -> f64 {
    let m = samples.len();
    let mut total = 0.0;
    for (i, &y) in samples.iter().enumerate() {
        let xi = (i + 1) as f64;
        let mut l = 1.0;
        for j in 0..m {
            if j != i {
                let xj = (j + 1) as f64;
                l *= (0.0 - xj) / (xi - xj);
            }
        }
        total += l * y;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_invariants() {
        let g = RadialGrid::new(10.0, 100).unwrap();
        assert_eq!(g.h(), 0.1);
        assert_eq!(g.r(0), 0.0);
        assert_eq!(g.len(), 101);
        assert!(RadialGrid::new(10.0, 15).is_err());
        assert!(RadialGrid::new(-1.0, 100).is_err());
    }

    #[test]
    fn gregory_weights_are_positive_and_exact_for_polynomials() {
        let g = RadialGrid::new(8.0, 320).unwrap();
        let w = g.weights();
        assert!(w.iter().all(|&x| x > 0.0));
        for p in 0..7 {
            let vals: Vec<f64> = g.nodes().map(|r| r.powi(p) * (-(r * r)).exp()).collect();
            let approx = g.integrate(&vals);
            let reference = gauss_moment(p as i32);
            assert!((approx - reference).abs() < 1e-9, "p = {p}: {approx} vs {reference}");
        }
    }

    // int_0^inf r^p e^{-r^2} dr = Gamma((p+1)/2)/2
    fn gauss_moment(p: i32) -> f64 {
        let half_gamma = |m: i32| -> f64 {
            // Gamma(m/2)
            if m % 2 == 0 {
                (1..m / 2).map(|k| k as f64).product()
            } else {
                let mut g = std::f64::consts::PI.sqrt();
                let mut x = 0.5;
                while x < m as f64 / 2.0 - 0.25 {
                    g *= x;
                    x += 1.0;
                }
                g
            }
        };
        half_gamma(p + 1) / 2.0
    }

    #[test]
    fn fornberg_reproduces_classical_stencils() {
        let w = fd_weights(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0], 2);
        let expect = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-13);
        }
        let w = fd_weights(1.0, &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0], 2);
        let expect = [10.0, -15.0, -4.0, 14.0, -6.0, 1.0];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b / 12.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cumulative_integral_of_smooth_function() {
        let g = RadialGrid::new(4.0, 200).unwrap();
        let vals: Vec<f64> = g.nodes().map(|r| r.cos()).collect();
        let c = cumulative_integral(&vals, g.h());
        for (j, r) in g.nodes().enumerate() {
            assert!((c[j] - r.sin()).abs() < 1e-11);
        }
    }

    #[test]
    fn moment_weights_integrate_singular_weight() {
        // int_0^1 x^{-1/2} (1 + x) dx = 2 + 2/3
        let xs: Vec<f64> = (0..5).map(|i| i as f64 / 4.0).collect();
        let w = moment_weights(&xs, 0.0, 1.0, -0.5);
        let v: f64 = xs.iter().zip(&w).map(|(x, w)| w * (1.0 + x)).sum();
        assert!((v - 8.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn extrapolation_is_exact_for_polynomials() {
        let s: Vec<f64> = (1..=4).map(|x| 2.0 + 3.0 * x as f64 - (x as f64).powi(3)).collect();
        assert!((extrapolate_to_zero(&s) - 2.0).abs() < 1e-12);
    }
}
