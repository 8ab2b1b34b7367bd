//! The linear flow e^{it Delta_alpha} and dispersive / Strichartz experiments.

use crate::error::{Error, Result, Warned, Warning};
use crate::field::ReducedField;
use crate::radial::lp_norm;
use crate::spectral::RobinTransform;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

/// Boundary mass fraction above which an evolved field counts as aliased.
pub const ALIASING_FRACTION: f64 = 0.01;

/// e^{it Delta_alpha} psi: each spectral slot picks up e^{-i E time}.
pub fn evolve_linear(psi: &ReducedField, t: &RobinTransform, time: f64) -> Result<Warned<ReducedField>> {
    let out = t.apply_multiplier(psi, |e| Complex64::from_polar(1.0, -e * time))?;
    let mut warnings = Vec::new();
    let fraction = out.boundary_mass_fraction();
    if fraction > ALIASING_FRACTION {
        warnings.push(Warning::BoundaryMass { fraction });
    }
    Ok(Warned { value: out, warnings })
}

/// Strichartz pair with 2/q = 3(1/2 - 1/r), r in [2, 3).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdmissiblePair {
    pub r: f64,
    /// q = 4r / (3(r - 2)); infinite at r = 2.
    pub q: f64,
}

pub fn admissible_pair(r: f64) -> Result<AdmissiblePair> {
    if !(2.0..3.0).contains(&r) {
        return Err(Error::Range(format!("admissible r must lie in [2, 3), got {r}")));
    }
    let q = if r == 2.0 { f64::INFINITY } else { 4.0 * r / (3.0 * (r - 2.0)) };
    let lhs = if q.is_infinite() { 0.0 } else { 2.0 / q };
    debug_assert!((lhs - 3.0 * (0.5 - 1.0 / r)).abs() < 1e-12);
    Ok(AdmissiblePair { r, q })
}

/// Target decay exponent -3(1/2 - 1/r) of ||u(t)||_{L^r}.
pub fn decay_exponent(r: f64) -> f64 {
    -3.0 * (0.5 - 1.0 / r)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub r: f64,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub slope: f64,
    pub target: f64,
    /// Largest mass fraction in the outer tenth of the box over the sweep.
    pub boundary_fraction: f64,
    pub passed: bool,
}

/// Least-squares slope of y against x.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Evolves psi0 to each sample time, records ||u(t)||_{L^r} and fits the log-log slope.
pub fn dispersive_decay_experiment(
    psi0: &ReducedField,
    t: &RobinTransform,
    r: f64,
    times: &[f64],
) -> Result<DecayReport> {
    admissible_pair(r)?;
    if times.len() < 2 {
        return Err(Error::Range("need at least two sample times".into()));
    }
    if times[0] <= 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Range("sample times must be positive and strictly increasing".into()));
    }
    let samples: Vec<Result<(f64, f64)>> = times
        .par_iter()
        .map(|&time| {
            let u = evolve_linear(psi0, t, time)?.value;
            Ok((lp_norm(&u, r)?, u.boundary_mass_fraction()))
        })
        .collect();
    let mut norms = Vec::with_capacity(times.len());
    let mut boundary_fraction = 0.0f64;
    for (time, s) in times.iter().zip(samples) {
        let (norm, fraction) = s?;
        if fraction > ALIASING_FRACTION {
            return Err(Error::Window(*time));
        }
        boundary_fraction = boundary_fraction.max(fraction);
        norms.push(norm);
    }
    let lx: Vec<f64> = times.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = norms.iter().map(|x| x.ln()).collect();
    let slope = fit_slope(&lx, &ly);
    let target = decay_exponent(r);
    let passed = if target == 0.0 {
        slope.abs() <= 0.01
    } else {
        (slope - target).abs() <= 0.05 * target.abs()
    };
    Ok(DecayReport { r, times: times.to_vec(), norms, slope, target, boundary_fraction, passed })
}

/// (int ||u(t)||_{L^r}^q dt)^{1/q} by the trapezoid rule over the sample times;
/// the supremum when q is infinite.
pub fn strichartz_norm(times: &[f64], states: &[ReducedField], q: f64, r: f64) -> Result<f64> {
    if times.len() != states.len() || times.is_empty() {
        return Err(Error::Range("need one state per sample time".into()));
    }
    if !(q >= 1.0) {
        return Err(Error::Range(format!("q must be at least 1, got {q}")));
    }
    let norms: Vec<f64> = states.iter().map(|u| lp_norm(u, r)).collect::<Result<_>>()?;
    if q.is_infinite() {
        return Ok(norms.iter().cloned().fold(0.0, f64::max));
    }
    let mut acc = 0.0;
    for i in 1..times.len() {
        let dt = (times[i] - times[i - 1]).abs();
        acc += 0.5 * dt * (norms[i].powf(q) + norms[i - 1].powf(q));
    }
    Ok(acc.powf(1.0 / q))
}
