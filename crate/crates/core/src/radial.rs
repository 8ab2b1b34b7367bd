//! Green function, norms, radial convolution and the regular/singular split.

use crate::error::{Error, Result, Warned, Warning};
use crate::field::{PlainRadialField, ReducedField};
use crate::grid::{gregory_weights, moment_weights, cumulative_integral, RadialGrid};
use crate::point::PointInteraction;
use num_complex::Complex64;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// G_lambda(r) = e^{-sqrt(lambda) r} / (4 pi r).
pub fn evaluate_green(lambda: f64, r: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    if !(r > 0.0) {
        return Err(Error::Domain(format!("r must be positive, got {r}")));
    }
    Ok(green_reduced(lambda, r) / r)
}

/// Reduced profile r G_lambda(r) = e^{-sqrt(lambda) r} / (4 pi), finite at r = 0.
pub fn green_reduced(lambda: f64, r: f64) -> f64 {
    (-lambda.sqrt() * r).exp() / (4.0 * PI)
}

pub fn green_field(grid: RadialGrid, lambda: f64) -> ReducedField {
    ReducedField::from_reduced_fn(grid, |r| Complex64::new(green_reduced(lambda, r), 0.0))
}

/// |f(0)| below this fraction of max|f| counts as a regular field.
const ORIGIN_TOL: f64 = 1e-13;

pub(crate) fn has_singular_part(f: &ReducedField) -> bool {
    let max = f.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
    f.origin_value().norm() > ORIGIN_TOL * max
}

/// int_0^r_max g(r) r^a dr for smooth g and a > -1: product integration on
/// the first six intervals, Gregory-corrected composite rule beyond.
pub(crate) fn integrate_with_power_weight(grid: &RadialGrid, g: &[f64], a: f64) -> f64 {
    const K: usize = 6;
    let h = grid.h();
    let xs: Vec<f64> = (0..=K).map(|i| i as f64).collect();
    let w0 = moment_weights(&xs, 0.0, K as f64, a);
    let scale = h.powf(a + 1.0);
    let head: f64 = (0..=K).map(|i| w0[i] * g[i]).sum::<f64>() * scale;
    let tail_w = gregory_weights(grid.n() - K, h);
    let tail: f64 = (K..=grid.n())
        .map(|j| tail_w[j - K] * g[j] * grid.r(j).powf(a))
        .sum();
    head + tail
}

/// L^p(R^3) norm (4 pi int |f|^p r^{2-p} dr)^{1/p}; p = infinity allowed.
pub fn lp_norm(psi: &ReducedField, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Range(format!("p must be >= 1, got {p}")));
    }
    if psi.is_identically_zero() {
        return Ok(0.0);
    }
    let grid = *psi.grid();
    let singular = has_singular_part(psi);
    if p.is_infinite() {
        if singular {
            return Err(Error::Divergent("1/|x| singularity is unbounded".into()));
        }
        return Ok(psi.psi_values().iter().map(|v| v.norm()).fold(0.0, f64::max));
    }
    if singular && p >= 3.0 {
        return Err(Error::Divergent(format!(
            "1/|x| singularity is not in L^{p} near the origin"
        )));
    }
    let integral = if (p - 2.0).abs() < 1e-15 {
        let vals: Vec<f64> = psi.values().iter().map(|v| v.norm_sqr()).collect();
        grid.integrate(&vals)
    } else if singular {
        let g: Vec<f64> = psi.values().iter().map(|v| v.norm().powf(p)).collect();
        integrate_with_power_weight(&grid, &g, 2.0 - p)
    } else {
        let q = psi.psi_values();
        let vals: Vec<f64> = q
            .iter()
            .enumerate()
            .map(|(j, v)| v.norm().powf(p) * grid.r(j).powi(2))
            .collect();
        grid.integrate(&vals)
    };
    Ok((4.0 * PI * integral.max(0.0)).powf(1.0 / p))
}

/// Labels for cached potential norms.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub enum NormKey {
    WeakLorentz { q: f64 },
    Sobolev { s: f64, p: f64 },
}

impl NormKey {
    pub fn label(&self) -> String {
        match self {
            NormKey::WeakLorentz { q } => format!("L^{{{q},inf}}"),
            NormKey::Sobolev { s, p } => format!("W^{{{s},{p}}}"),
        }
    }
}

/// Real radial interaction profile w(r).
#[derive(Debug, Clone)]
pub struct Potential {
    profile: PlainRadialField,
    cached_norms: BTreeMap<String, f64>,
    kernel: OnceLock<Vec<f64>>,
}

impl Potential {
    pub fn new(profile: PlainRadialField) -> Result<Self> {
        if !profile.is_real() {
            return Err(Error::Domain("interaction potential must be real".into()));
        }
        Ok(Self { profile, cached_norms: BTreeMap::new(), kernel: OnceLock::new() })
    }

    pub fn from_fn(grid: RadialGrid, w: impl Fn(f64) -> f64) -> Self {
        Self::new(PlainRadialField::from_fn(grid, w)).expect("real samples")
    }

    pub fn zero(grid: RadialGrid) -> Self {
        Self::from_fn(grid, |_| 0.0)
    }

    /// amplitude * e^{-r^2 / width^2}
    pub fn gaussian(grid: RadialGrid, width: f64, amplitude: f64) -> Self {
        Self::from_fn(grid, |r| amplitude * (-(r / width).powi(2)).exp())
    }

    /// Indicator of the closed ball of the given radius.
    pub fn ball_indicator(grid: RadialGrid, radius: f64) -> Self {
        let eps = 1e-9 * grid.h();
        Self::from_fn(grid, |r| if r <= radius + eps { 1.0 } else { 0.0 })
    }

    /// r^{-gamma} on (0, cutoff], zero beyond; the origin sample uses r = h/2.
    pub fn inverse_power(grid: RadialGrid, gamma: f64, cutoff: f64) -> Self {
        let h = grid.h();
        let eps = 1e-9 * h;
        Self::from_fn(grid, |r| {
            if r > cutoff + eps {
                0.0
            } else {
                r.max(0.5 * h).powf(-gamma)
            }
        })
    }

    /// G_lambda used as a potential; the origin sample uses r = h/2.
    pub fn green(grid: RadialGrid, lambda: f64) -> Self {
        let h = grid.h();
        Self::from_fn(grid, |r| green_reduced(lambda, r) / r.max(0.5 * h))
    }

    pub fn grid(&self) -> &RadialGrid {
        self.profile.grid()
    }

    pub fn profile(&self) -> &PlainRadialField {
        &self.profile
    }

    pub fn values(&self) -> Vec<f64> {
        self.profile.real_parts()
    }

    pub fn is_zero(&self) -> bool {
        self.profile.values().iter().all(|v| v.re == 0.0)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.profile.values().iter().all(|v| v.re >= 0.0)
    }

    /// w + eps * v on the same grid.
    pub fn perturbed(&self, eps: f64, v: &Potential) -> Result<Self> {
        if self.grid() != v.grid() {
            return Err(Error::GridMismatch);
        }
        let vals = self.values().iter().zip(v.values()).map(|(a, b)| a + eps * b).collect();
        Self::new(PlainRadialField::from_real(*self.grid(), vals)?)
    }

    pub fn cached_norms(&self) -> &BTreeMap<String, f64> {
        &self.cached_norms
    }

    pub fn record_norm(&mut self, key: NormKey, value: f64) {
        self.cached_norms.insert(key.label(), value);
    }

    /// Cumulative integral A(r) = int_0^r t w(t) dt at nodes 0..=2n, constant beyond r_max.
    pub(crate) fn kernel(&self) -> &[f64] {
        self.kernel.get_or_init(|| moment_kernel(&self.values(), self.grid()))
    }
}

pub(crate) fn edge_ratio(vals: &[f64]) -> f64 {
    let max = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    let start = (0.9 * (vals.len() - 1) as f64) as usize;
    vals[start..].iter().map(|v| v.abs()).fold(0.0, f64::max) / max
}

pub(crate) const EDGE_TOL: f64 = 1e-8;

fn moment_kernel(w: &[f64], grid: &RadialGrid) -> Vec<f64> {
    let tw: Vec<f64> = w.iter().enumerate().map(|(j, v)| grid.r(j) * v).collect();
    let mut a = cumulative_integral(&tw, grid.h());
    let last = *a.last().unwrap();
    a.resize(2 * grid.n() + 1, last);
    a
}

/// sup_t t * |{|w| >= t}|^{1/q} over sample thresholds t = |w(r_j)|.
pub fn lorentz_weak_norm(w: &Potential, q: f64) -> Result<f64> {
    if !(q > 1.0) {
        return Err(Error::Range(format!("q must exceed 1, got {q}")));
    }
    let grid = *w.grid();
    let a: Vec<f64> = w.values().iter().map(|v| v.abs()).collect();
    let max = a.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(0.0);
    }
    if a[grid.n()] > 1e-12 * max {
        return Ok(f64::INFINITY);
    }
    let h = grid.h();
    let mut best = 0.0f64;
    for &t in a.iter().filter(|&&t| t > 0.0) {
        let mut measure = 0.0;
        for i in 0..grid.n() {
            let (lo_v, hi_v) = (a[i], a[i + 1]);
            let r0 = grid.r(i);
            let (lo, hi) = if lo_v >= t && hi_v >= t {
                (r0, r0 + h)
            } else if lo_v < t && hi_v < t {
                continue;
            } else {
                let x = r0 + (t - lo_v) / (hi_v - lo_v) * h;
                if hi_v >= t {
                    (x, r0 + h)
                } else {
                    (r0, x)
                }
            };
            measure += 4.0 * PI / 3.0 * (hi.powi(3) - lo.powi(3));
        }
        best = best.max(t * measure.powf(1.0 / q));
    }
    Ok(best)
}

/// (w*g)(r_j) from the cumulative kernel A of w and samples of s*g(s)*weight:
/// (2 pi / r) sum_i c_i [A(r+s_i) - A(|r-s_i|)].
fn convolve_with_kernel(a: &[f64], sg: &[f64], grid: &RadialGrid) -> Vec<f64> {
    let n = grid.n();
    let mut out = vec![0.0; n + 1];
    for j in 1..=n {
        let mut acc = 0.0;
        for i in 0..=n {
            let d = if i > j { i - j } else { j - i };
            acc += sg[i] * (a[i + j] - a[d]);
        }
        out[j] = 2.0 * PI / grid.r(j) * acc;
    }
    out
}

fn convolve_real(w: &[f64], g: &[f64], grid: &RadialGrid) -> Vec<f64> {
    let weights = grid.weights();
    let a = moment_kernel(w, grid);
    let sg: Vec<f64> = (0..=grid.n()).map(|i| weights[i] * grid.r(i) * g[i]).collect();
    let mut out = convolve_with_kernel(&a, &sg, grid);
    out[0] = 4.0 * PI
        * (0..=grid.n())
            .map(|i| weights[i] * grid.r(i).powi(2) * g[i] * w[i])
            .sum::<f64>();
    out
}

/// Radial convolution (w*g)(|x|) = int w(|x-y|) g(|y|) dy, symmetrized so that
/// radial_convolve(w, g) == radial_convolve(g, w) exactly.
pub fn radial_convolve(w: &PlainRadialField, g: &PlainRadialField) -> Result<Warned<PlainRadialField>> {
    if w.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = *w.grid();
    let parts = |f: &PlainRadialField| -> (Vec<f64>, Vec<f64>) {
        (
            f.values().iter().map(|v| v.re).collect(),
            f.values().iter().map(|v| v.im).collect(),
        )
    };
    let (wr, wi) = parts(w);
    let (gr, gi) = parts(g);
    let sym = |x: &[f64], y: &[f64]| -> Vec<f64> {
        let a = convolve_real(x, y, &grid);
        let b = convolve_real(y, x, &grid);
        a.iter().zip(&b).map(|(p, q)| 0.5 * (p + q)).collect()
    };
    let rr = sym(&wr, &gr);
    let mut values: Vec<Complex64> = rr.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let complex = wi.iter().chain(&gi).any(|&v| v != 0.0);
    if complex {
        let ii = sym(&wi, &gi);
        let ri = sym(&wr, &gi);
        let ir = sym(&wi, &gr);
        for j in 0..values.len() {
            values[j] = Complex64::new(rr[j] - ii[j], ri[j] + ir[j]);
        }
    }
    let mut warnings = Vec::new();
    let edge = edge_ratio(&wr).max(edge_ratio(&wi)).max(edge_ratio(&gr)).max(edge_ratio(&gi));
    if edge > EDGE_TOL {
        warnings.push(Warning::Truncation { relative_edge_value: edge });
    }
    Ok(Warned { value: PlainRadialField::new(grid, values)?, warnings })
}

/// w * rho for a reduced density rho = f1 conj(f2) (so the 3D density is rho / r^2),
/// evaluated with the kernel B(r,s)/s, which stays finite as s -> 0.
pub(crate) fn convolve_reduced_density(w: &Potential, density: &[f64]) -> Vec<f64> {
    let grid = w.grid();
    let n = grid.n();
    let a = w.kernel();
    let wv = w.values();
    let weights = grid.weights();
    let mut out = vec![0.0; n + 1];
    let c: Vec<f64> = (0..=n).map(|i| weights[i] * density[i]).collect();
    let inv_s: Vec<f64> = (0..=n).map(|i| if i == 0 { 0.0 } else { 1.0 / grid.r(i) }).collect();
    for j in 1..=n {
        let r = grid.r(j);
        let mut acc = c[0] * 2.0 * r * wv[j];
        for i in 1..=n {
            let d = if i > j { i - j } else { j - i };
            acc += c[i] * (a[i + j] - a[d]) * inv_s[i];
        }
        out[j] = 2.0 * PI / r * acc;
    }
    out[0] = 4.0 * PI * (0..=n).map(|i| c[i] * wv[i]).sum::<f64>();
    out
}

/// psi = phi_lambda + kappa G_lambda with phi_lambda regular at the origin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecomposedState {
    pub phi: ReducedField,
    pub kappa: Complex64,
    pub lambda: f64,
}

impl DecomposedState {
    pub fn new(phi: ReducedField, kappa: Complex64, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
        }
        let scale = phi.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
        if phi.origin_value().norm() > 1e-12 * scale.max(1e-300) {
            return Err(Error::Domain("regular part must vanish at the origin".into()));
        }
        Ok(Self { phi, kappa, lambda })
    }

    /// phi_lambda(0) (the 3D value), extrapolated from f_phi(r)/r.
    pub fn phi_at_origin(&self) -> Complex64 {
        self.phi.quotient_at_origin(self.phi.values())
    }
}

pub fn decompose(psi: &ReducedField, lambda: f64) -> Result<DecomposedState> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    let f0 = psi.origin_value();
    let kappa = f0 * (4.0 * PI);
    let grid = *psi.grid();
    let mut phi = psi.clone();
    for (j, v) in phi.values_mut().iter_mut().enumerate() {
        *v -= kappa * green_reduced(lambda, grid.r(j));
    }
    phi.values_mut()[0] = Complex64::new(0.0, 0.0);
    Ok(DecomposedState { phi, kappa, lambda })
}

pub fn recompose(state: &DecomposedState) -> ReducedField {
    let grid = *state.phi.grid();
    let mut out = state.phi.clone();
    for (j, v) in out.values_mut().iter_mut().enumerate() {
        *v += state.kappa * green_reduced(state.lambda, grid.r(j));
    }
    out.values_mut()[grid.n()] = Complex64::new(0.0, 0.0);
    out
}

/// Relative residual of the charge link kappa (alpha + sqrt(lambda)/(4 pi)) = phi(0);
/// at the Friedrichs end the link is kappa = 0. The mismatch is measured against
/// the sizes of both sides and of sup |phi(r)/r|.
pub fn charge_link_residual(state: &DecomposedState, op: PointInteraction) -> f64 {
    let phi0 = state.phi_at_origin();
    let grid = state.phi.grid();
    let floor = (1..=grid.n())
            .map(|j| state.phi.values()[j].norm() / grid.r(j))
            .fold(0.0, f64::max);
    match op.alpha() {
        None => {
            let d = state.kappa.norm() + phi0.norm() + floor;
            if d == 0.0 {
                0.0
            } else {
                state.kappa.norm() / d
            }
        }
        Some(alpha) => {
            let c = alpha + state.lambda.sqrt() / (4.0 * PI);
            let lhs = state.kappa * c;
            let scale =
                state.kappa.norm() * (alpha.abs() + state.lambda.sqrt() / (4.0 * PI)) + phi0.norm() + floor;
            if scale == 0.0 {
                0.0
            } else {
                (lhs - phi0).norm() / scale
            }
        }
    }
}

/// Builds phi + kappa G_lambda with kappa fixed by the charge link for alpha.
pub fn domain_element(phi: &ReducedField, op: PointInteraction, lambda: f64) -> Result<ReducedField> {
    let phi_state = DecomposedState::new(phi.clone(), Complex64::new(0.0, 0.0), lambda)?;
    let phi0 = phi_state.phi_at_origin();
    let kappa = match op.alpha() {
        None => Complex64::new(0.0, 0.0),
        Some(alpha) => {
            let c = alpha + lambda.sqrt() / (4.0 * PI);
            if c == 0.0 {
                return Err(Error::Domain("charge link degenerate at this lambda".into()));
            }
            phi0 / c
        }
    };
    Ok(recompose(&DecomposedState { phi: phi.clone(), kappa, lambda }))
}
