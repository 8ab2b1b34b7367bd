//! The point-interaction Laplacian -Delta_alpha on the radial sector.

use crate::error::{Error, Result, Warned, Warning};
use crate::field::ReducedField;
use crate::grid::{first_derivative_stencil, second_derivative_stencil, RadialGrid};
use crate::radial::{charge_link_residual, decompose, DecomposedState};
use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

/// Coupling of the contact interaction: a finite alpha or the Friedrichs end alpha = +inf.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PointInteraction {
    Finite(f64),
    Friedrichs,
}

/// Scattering length a = -1/(4 pi alpha).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ScatteringLength {
    Finite(f64),
    /// alpha = 0: zero-energy resonance.
    Infinite,
    /// Friedrichs end.
    Zero,
}

impl PointInteraction {
    pub const FRIEDRICHS: PointInteraction = PointInteraction::Friedrichs;

    pub fn finite(alpha: f64) -> Self {
        assert!(alpha.is_finite(), "use PointInteraction::Friedrichs for alpha = inf");
        PointInteraction::Finite(alpha)
    }

    pub fn alpha(&self) -> Option<f64> {
        match *self {
            PointInteraction::Finite(a) => Some(a),
            PointInteraction::Friedrichs => None,
        }
    }

    /// Robin coefficient beta in f'(0) = beta f(0).
    pub fn robin_beta(&self) -> Option<f64> {
        self.alpha().map(|a| 4.0 * PI * a)
    }

    pub fn scattering_length(&self) -> ScatteringLength {
        match *self {
            PointInteraction::Friedrichs => ScatteringLength::Zero,
            PointInteraction::Finite(a) if a == 0.0 => ScatteringLength::Infinite,
            PointInteraction::Finite(a) => ScatteringLength::Finite(-1.0 / (4.0 * PI * a)),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            PointInteraction::Finite(a) => format!("{a}"),
            PointInteraction::Friedrichs => "friedrichs".into(),
        }
    }
}

/// Spectrum of -Delta_alpha: [0, inf) plus -(4 pi alpha)^2 when alpha < 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumSummary {
    pub essential: (f64, f64),
    pub point: Option<f64>,
    pub eigenfunction: Option<ReducedField>,
}

pub fn spectrum(op: PointInteraction, grid: &RadialGrid) -> SpectrumSummary {
    match op.alpha() {
        Some(a) if a < 0.0 => {
            let k = 4.0 * PI * a.abs();
            let ef = ReducedField::from_reduced_fn(*grid, |r| Complex64::new((-k * r).exp(), 0.0));
            SpectrumSummary {
                essential: (0.0, f64::INFINITY),
                point: Some(-k * k),
                eigenfunction: Some(ef),
            }
        }
        _ => SpectrumSummary { essential: (0.0, f64::INFINITY), point: None, eigenfunction: None },
    }
}

fn derivative(values: &[Complex64], grid: &RadialGrid) -> Vec<Complex64> {
    let n = grid.n();
    (0..=n)
        .map(|j| {
            let (start, w) = first_derivative_stencil(j, n, grid.h());
            w.iter().enumerate().map(|(i, c)| values[start + i] * *c).sum()
        })
        .collect()
}

fn second_derivative(values: &[Complex64], grid: &RadialGrid) -> Vec<Complex64> {
    let n = grid.n();
    (0..=n)
        .map(|j| {
            let (start, w) = second_derivative_stencil(j, n, grid.h());
            w.iter().enumerate().map(|(i, c)| values[start + i] * *c).sum()
        })
        .collect()
}

/// Dirichlet energy ||grad phi||^2 = 4 pi int |f_phi'|^2 dr of a regular part.
pub fn dirichlet_energy(phi: &ReducedField) -> f64 {
    let d = derivative(phi.values(), phi.grid());
    let vals: Vec<f64> = d.iter().map(|v| v.norm_sqr()).collect();
    4.0 * PI * phi.grid().integrate(&vals)
}

/// (-Delta_alpha)[u] via the decomposition at shift lambda.
pub fn quadratic_form(state: &DecomposedState, op: PointInteraction) -> Result<f64> {
    let lambda = state.lambda;
    let grad = dirichlet_energy(&state.phi);
    let phi_mass = state.phi.mass();
    let psi_mass = crate::radial::recompose(state).mass();
    match op.alpha() {
        None => {
            let scale = state.phi.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
            if state.kappa.norm() > 1e-10 * scale.max(1e-300) {
                return Err(Error::Domain(
                    "the Friedrichs form domain has no singular component".into(),
                ));
            }
            Ok(grad)
        }
        Some(alpha) => {
            let c = alpha + lambda.sqrt() / (4.0 * PI);
            Ok(-lambda * psi_mass + grad + lambda * phi_mass + c * state.kappa.norm_sqr())
        }
    }
}

/// Default relative tolerance for the charge-link check in `apply_operator`.
pub const DOMAIN_TOL: f64 = 1e-6;

/// Reduced form of -Delta_alpha psi = (-Delta + lambda) phi_lambda - lambda psi,
/// by fourth-order finite differences.
pub fn apply_operator(psi: &ReducedField, op: PointInteraction, lambda: f64) -> Result<ReducedField> {
    apply_operator_with_tol(psi, op, lambda, DOMAIN_TOL)
}

pub fn apply_operator_with_tol(
    psi: &ReducedField,
    op: PointInteraction,
    lambda: f64,
    tol: f64,
) -> Result<ReducedField> {
    let state = decompose(psi, lambda)?;
    let residual = charge_link_residual(&state, op);
    if residual > tol {
        return Err(Error::DomainViolation { residual });
    }
    let grid = *psi.grid();
    let fpp = second_derivative(state.phi.values(), &grid);
    let mut out: Vec<Complex64> = (0..=grid.n())
        .map(|j| -fpp[j] + state.phi.values()[j] * lambda - psi.values()[j] * lambda)
        .collect();
    out[grid.n()] = Complex64::new(0.0, 0.0);
    ReducedField::new(grid, out)
}

/// Fit of f(r) ~ c (1 - r/a) near the origin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BethePeierlsFit {
    pub c: Complex64,
    /// 1/a; zero at the resonance.
    pub inverse_a: f64,
    pub a: f64,
    pub normalized_residual: f64,
    /// |c| negligible: the field is regular and the condition is vacuous.
    pub degenerate: bool,
    /// Deviation of the fitted a from -1/(4 pi alpha), relative; absolute in 1/a at alpha = 0.
    pub deviation: f64,
}

/// Least-squares fit of f on the first twelve interior nodes to a cubic
/// c0 + c1 r + c2 r^2 + c3 r^3; c = c0 and 1/a = -c1/c0.
pub fn bethe_peierls_residual(psi: &ReducedField, op: PointInteraction) -> BethePeierlsFit {
    let grid = psi.grid();
    let nodes = 12usize.min(grid.n());
    let mut ata = Matrix4::<f64>::zeros();
    let mut atb_re = Vector4::<f64>::zeros();
    let mut atb_im = Vector4::<f64>::zeros();
    let row = |j: usize| {
        let r = grid.r(j) / grid.h();
        Vector4::new(1.0, r, r * r, r * r * r)
    };
    for j in 1..=nodes {
        let x = row(j);
        ata += x * x.transpose();
        atb_re += x * psi.values()[j].re;
        atb_im += x * psi.values()[j].im;
    }
    let chol = ata.cholesky().expect("normal matrix is positive definite");
    let x_re = chol.solve(&atb_re);
    let x_im = chol.solve(&atb_im);
    let c0 = Complex64::new(x_re[0], x_im[0]);
    let c1 = Complex64::new(x_re[1], x_im[1]) / grid.h();
    let mut ss = 0.0;
    for j in 1..=nodes {
        let x = row(j);
        let fit = Complex64::new(x.dot(&x_re), x.dot(&x_im));
        ss += (psi.values()[j] - fit).norm_sqr();
    }
    let rms = (ss / nodes as f64).sqrt();
    let scale = psi.values()[..=nodes].iter().map(|v| v.norm()).fold(0.0, f64::max);
    let degenerate = c0.norm() <= 1e-4 * scale.max(1e-300);
    let inverse_a = if degenerate { f64::NAN } else { -(c1 / c0).re };
    let a = if degenerate || inverse_a == 0.0 { f64::INFINITY } else { 1.0 / inverse_a };
    let deviation = match op.alpha() {
        _ if degenerate => f64::NAN,
        Some(alpha) if alpha != 0.0 => {
            let target = -1.0 / (4.0 * PI * alpha);
            (a - target).abs() / target.abs()
        }
        Some(_) => inverse_a.abs(),
        None => c0.norm() / scale.max(1e-300),
    };
    BethePeierlsFit {
        c: c0,
        inverse_a,
        a,
        normalized_residual: if degenerate { f64::NAN } else { rms / c0.norm() },
        degenerate,
        deviation,
    }
}

/// Fit of I(R) = int_{|p|<R} psi_hat(p) dp to d (R + e/d).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TmsFit {
    pub slope: f64,
    pub intercept: f64,
    /// intercept/slope, to be compared with 2 pi^2 alpha.
    pub ratio: f64,
    pub target: f64,
    /// |ratio - target| / max(|target|, 1).
    pub deviation: f64,
    /// Slope negligible: regular field, condition vacuous.
    pub vacuous: bool,
    pub samples: Vec<(f64, f64)>,
}

/// I(R) = (2 pi)^{-3/2} 16 pi^2 int_0^inf f(r) (sin Rr - Rr cos Rr) / r^2 dr.
pub fn ball_integral_of_fourier_transform(psi: &ReducedField, big_r: f64) -> f64 {
    let grid = psi.grid();
    let vals: Vec<f64> = grid
        .nodes()
        .zip(psi.values())
        .map(|(r, f)| {
            let x = big_r * r;
            let k = if x < 1e-3 {
                big_r * big_r * big_r * r * (1.0 / 3.0 - x * x / 30.0)
            } else {
                (x.sin() - x * x.cos()) / (r * r)
            };
            f.re * k
        })
        .collect();
    (2.0 * PI).powf(-1.5) * 16.0 * PI * PI * grid.integrate(&vals)
}

pub fn tms_residual(psi: &ReducedField, op: PointInteraction, r_list: &[f64]) -> Result<Warned<TmsFit>> {
    if r_list.len() < 2 {
        return Err(Error::Range("need at least two radii".into()));
    }
    let h = psi.grid().h();
    let mut warnings = Vec::new();
    let worst = r_list.iter().cloned().fold(0.0, f64::max) * h;
    if worst > 1.0 {
        warnings.push(Warning::OscillatoryQuadrature { r_times_h: worst });
    }
    let samples: Vec<(f64, f64)> =
        r_list.iter().map(|&r| (r, ball_integral_of_fourier_transform(psi, r))).collect();
    let m = samples.len() as f64;
    let mx = samples.iter().map(|s| s.0).sum::<f64>() / m;
    let my = samples.iter().map(|s| s.1).sum::<f64>() / m;
    let sxx: f64 = samples.iter().map(|s| (s.0 - mx).powi(2)).sum();
    let sxy: f64 = samples.iter().map(|s| (s.0 - mx) * (s.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let reference = (2.0 * PI).powf(-1.5) * 4.0 * PI;
    let scale = psi.values().iter().map(|v| v.norm()).fold(0.0, f64::max) * 4.0 * PI * reference;
    let vacuous = slope.abs() <= 1e-6 * scale.max(1e-300);
    let target = match op.alpha() {
        Some(a) => 2.0 * PI * PI * a,
        None => f64::INFINITY,
    };
    let ratio = intercept / slope;
    let deviation = if vacuous || target.is_infinite() {
        f64::NAN
    } else {
        (ratio - target).abs() / target.abs().max(1.0)
    };
    Ok(Warned {
        value: TmsFit { slope, intercept, ratio, target, deviation, vacuous, samples },
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::{domain_element, green_field};

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn spectrum_facts() {
        let g = RadialGrid::new(10.0, 100).unwrap();
        assert!(spectrum(PointInteraction::finite(0.0), &g).point.is_none());
        assert!(spectrum(PointInteraction::FRIEDRICHS, &g).point.is_none());
        let s = spectrum(PointInteraction::finite(-1.0 / (4.0 * PI)), &g);
        assert!((s.point.unwrap() + 1.0).abs() < 1e-14);
        let s = spectrum(PointInteraction::finite(-1.0), &g);
        assert!((s.point.unwrap() + 16.0 * PI * PI).abs() < 1e-10);
    }

    #[test]
    fn scattering_length_markers() {
        assert_eq!(PointInteraction::finite(0.0).scattering_length(), ScatteringLength::Infinite);
        assert_eq!(
            PointInteraction::finite(1.0 / (4.0 * PI)).scattering_length(),
            ScatteringLength::Finite(-1.0)
        );
    }

    #[test]
    fn quadratic_form_of_green_function() {
        let g = RadialGrid::new(40.0, 4000).unwrap();
        let psi = green_field(g, 1.0);
        let op = PointInteraction::finite(0.0);
        let q1 = quadratic_form(&decompose(&psi, 1.0).unwrap(), op).unwrap();
        assert!((q1 - 1.0 / (8.0 * PI)).abs() * 8.0 * PI < 1e-6);
        let q4 = quadratic_form(&decompose(&psi, 4.0).unwrap(), op).unwrap();
        assert!((q1 - q4).abs() < 1e-6);
        assert!(quadratic_form(&decompose(&psi, 1.0).unwrap(), PointInteraction::FRIEDRICHS).is_err());
    }

    #[test]
    fn regular_sector_is_dirichlet_energy() {
        let g = RadialGrid::new(10.0, 1000).unwrap();
        let psi = ReducedField::from_radial_fn(g, |r| re((-r * r).exp()));
        // ||grad e^{-r^2}||^2 = 4 pi int 4 r^4 e^{-2r^2} = 3 (pi/2)^{3/2}
        let exact = 3.0 * (PI / 2.0).powf(1.5);
        for op in [PointInteraction::finite(0.7), PointInteraction::FRIEDRICHS] {
            let q = quadratic_form(&decompose(&psi, 1.0).unwrap(), op).unwrap();
            assert!((q - exact).abs() < 1e-6 * exact, "{q} vs {exact}");
        }
    }

    fn robin_compatible(g: RadialGrid, beta: f64) -> ReducedField {
        // f = -g' - beta g with g = r e^{-r^2}
        ReducedField::from_reduced_fn(g, |r| {
            let e = (-r * r).exp();
            re(-(1.0 - 2.0 * r * r) * e - beta * r * e)
        })
    }

    #[test]
    fn operator_on_robin_compatible_data() {
        let g = RadialGrid::new(10.0, 1000).unwrap();
        let op = PointInteraction::finite(1.0);
        let beta = op.robin_beta().unwrap();
        let psi = robin_compatible(g, beta);
        let hf = apply_operator(&psi, op, 1.0).unwrap();
        // -f'' analytically
        let exact = ReducedField::from_reduced_fn(g, |r| {
            let e = (-r * r).exp();
            // g = r e^{-r^2}; g' = (1-2r^2)e, g'' = (4r^3 - 6r) e, g''' = (-8r^4 + 24 r^2 - 6) e
            let gpp = (4.0 * r.powi(3) - 6.0 * r) * e;
            let gppp = (-8.0 * r.powi(4) + 24.0 * r * r - 6.0) * e;
            re(gppp + beta * gpp)
        });
        assert!(hf.relative_distance(&exact) < 1e-6, "{}", hf.relative_distance(&exact));
        let h4 = apply_operator(&psi, op, 4.0).unwrap();
        assert!(h4.relative_distance(&exact) < 1e-6);
    }

    #[test]
    fn operator_rejects_non_domain_fields() {
        let g = RadialGrid::new(10.0, 400).unwrap();
        let psi = ReducedField::from_radial_fn(g, |r| re((-r * r).exp()));
        assert!(matches!(
            apply_operator(&psi, PointInteraction::finite(1.0), 1.0),
            Err(Error::DomainViolation { .. })
        ));
    }

    #[test]
    fn operator_away_from_origin_is_free_laplacian() {
        let g = RadialGrid::new(12.0, 1200).unwrap();
        let psi = ReducedField::from_reduced_fn(g, |r| re((-(r - 5.0).powi(2)).exp()));
        let out = apply_operator(&psi, PointInteraction::finite(2.0), 1.0).unwrap();
        let exact = ReducedField::from_reduced_fn(g, |r| {
            let x = r - 5.0;
            re(-(4.0 * x * x - 2.0) * (-x * x).exp())
        });
        assert!(out.relative_distance(&exact) < 1e-6);
    }

    #[test]
    fn bound_state_eigenpair() {
        let g = RadialGrid::new(30.0, 3000).unwrap();
        let op = PointInteraction::finite(-1.0 / (4.0 * PI));
        let ef = spectrum(op, &g).eigenfunction.unwrap();
        for lambda in [1.0, 2.0, 4.0] {
            let out = apply_operator(&ef, op, lambda).unwrap();
            let target = ef.scale(re(-1.0));
            assert!(out.relative_distance(&target) < 1e-6, "lambda {lambda}: {}", out.relative_distance(&target));
        }
    }

    #[test]
    fn bethe_peierls_fits() {
        let g = RadialGrid::new(10.0, 1000).unwrap();
        let phi = ReducedField::from_radial_fn(g, |r| re((-r * r).exp()));
        let op = PointInteraction::finite(1.0 / (4.0 * PI));
        let psi = domain_element(&phi, op, 1.0).unwrap();
        let fit = bethe_peierls_residual(&psi, op);
        assert!(!fit.degenerate);
        assert!((fit.a + 1.0).abs() < 0.01, "a = {}", fit.a);
        let reg = bethe_peierls_residual(&phi, op);
        assert!(reg.degenerate);
        let op0 = PointInteraction::finite(0.0);
        let psi0 = domain_element(&phi, op0, 1.0).unwrap();
        let fit0 = bethe_peierls_residual(&psi0, op0);
        assert!(fit0.inverse_a.abs() < 1e-3, "1/a = {}", fit0.inverse_a);
        let green = green_field(g, 1.0);
        let fg = bethe_peierls_residual(&green, op0);
        assert!((fg.inverse_a - 1.0).abs() < 1e-3);
    }

    #[test]
    fn tms_slope_of_green_function() {
        let g = RadialGrid::new(20.0, 4000).unwrap();
        let psi = green_field(g, 1.0);
        let radii: Vec<f64> = (0..8).map(|i| 20.0 + 10.0 * i as f64).collect();
        let fit = tms_residual(&psi, PointInteraction::finite(0.0), &radii).unwrap();
        assert!(fit.warnings.is_empty());
        let d = 4.0 * PI * (2.0 * PI).powf(-1.5);
        assert!((fit.value.slope - d).abs() / d < 0.02);
    }

    #[test]
    fn tms_ratio_on_domain_element() {
        let g = RadialGrid::new(20.0, 4000).unwrap();
        let phi = ReducedField::from_radial_fn(g, |r| re((-r * r).exp()));
        let op = PointInteraction::finite(1.0);
        let psi = domain_element(&phi, op, 1.0).unwrap();
        let radii: Vec<f64> = (0..8).map(|i| 20.0 + 10.0 * i as f64).collect();
        let fit = tms_residual(&psi, op, &radii).unwrap().value;
        assert!(fit.deviation < 0.05, "{fit:?}");
        let reg = tms_residual(&phi, op, &radii).unwrap().value;
        assert!(reg.vacuous);
    }

    #[test]
    fn form_matches_operator_pairing() {
        let g = RadialGrid::new(10.0, 1000).unwrap();
        let op = PointInteraction::finite(0.3);
        let phi = ReducedField::from_reduced_fn(g, |r| Complex64::new(r, 0.5 * r * r) * (-r * r).exp());
        let psi = domain_element(&phi, op, 1.0).unwrap();
        let q = quadratic_form(&decompose(&psi, 1.0).unwrap(), op).unwrap();
        let hpsi = apply_operator(&psi, op, 1.0).unwrap();
        let pairing = 4.0 * PI * psi.inner_half_line(&hpsi).re;
        assert!((q - pairing).abs() < 1e-6 * (1.0 + q.abs()), "{q} vs {pairing}");
    }
}
