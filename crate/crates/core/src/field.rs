//! Sampled radial fields.

use crate::error::{Error, Result};
use crate::grid::{extrapolate_to_zero, RadialGrid};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

/// Reduced profile f(r) = r*psi(r) of a radial 3D function psi.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReducedField {
    grid: RadialGrid,
    values: Vec<Complex64>,
}

impl ReducedField {
    /// Takes samples at every node; the sample at r_max is forced to zero.
    pub fn new(grid: RadialGrid, mut values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Grid(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Domain("non-finite sample".into()));
        }
        values[grid.n()] = Complex64::new(0.0, 0.0);
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: RadialGrid) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    /// Samples the reduced profile f(r).
    pub fn from_reduced_fn(grid: RadialGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let mut values: Vec<Complex64> = grid.nodes().map(f).collect();
        values[grid.n()] = Complex64::new(0.0, 0.0);
        Self { grid, values }
    }

    /// Samples a regular 3D radial function psi(r); f(r) = r*psi(r).
    pub fn from_radial_fn(grid: RadialGrid, psi: impl Fn(f64) -> Complex64) -> Self {
        Self::from_reduced_fn(grid, |r| psi(r) * r)
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Coefficient of the 1/|x| singularity, lim_{r->0} r*psi(r).
    pub fn origin_value(&self) -> Complex64 {
        self.values[0]
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|v| v * c)
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    fn zip(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid, values })
    }

    /// Half-line inner product int_0^r_max conj(f) g dr.
    pub fn inner_half_line(&self, other: &Self) -> Complex64 {
        let w = self.grid.weights();
        self.values
            .iter()
            .zip(&other.values)
            .zip(&w)
            .map(|((a, b), w)| a.conj() * b * *w)
            .sum()
    }

    /// ||f||_{L^2(0, r_max)}; equals ||psi||_{L^2(R^3)} / sqrt(4 pi).
    pub fn norm_half_line(&self) -> f64 {
        self.inner_half_line(self).re.max(0.0).sqrt()
    }

    /// Mass ||psi||_2^2 in R^3.
    pub fn mass(&self) -> f64 {
        4.0 * PI * self.inner_half_line(self).re
    }

    /// Relative half-line L^2 distance ||self - other|| / ||other||.
    pub fn relative_distance(&self, other: &Self) -> f64 {
        let d = self.sub(other).expect("same grid").norm_half_line();
        let n = other.norm_half_line();
        if n == 0.0 {
            d
        } else {
            d / n
        }
    }

    /// psi(r_j) for r_j > 0; psi(0) by polynomial extrapolation of f(r)/r
    /// when f(0) = 0, infinite otherwise.
    pub fn psi_values(&self) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = Vec::with_capacity(self.values.len());
        let origin = if self.values[0].norm() > 0.0 {
            Complex64::new(f64::INFINITY, 0.0)
        } else {
            self.quotient_at_origin(&self.values)
        };
        out.push(origin);
        for j in 1..self.values.len() {
            out.push(self.values[j] / self.grid.r(j));
        }
        out
    }

    /// Limit of values(r)/r at r = 0 extrapolated from six interior nodes;
    /// only meaningful when values vanish at the origin.
    pub(crate) fn quotient_at_origin(&self, values: &[Complex64]) -> Complex64 {
        let m = 6.min(self.grid.n() - 1);
        let re: Vec<f64> = (1..=m).map(|j| values[j].re / self.grid.r(j)).collect();
        let im: Vec<f64> = (1..=m).map(|j| values[j].im / self.grid.r(j)).collect();
        Complex64::new(extrapolate_to_zero(&re), extrapolate_to_zero(&im))
    }

    /// Fraction of the mass in the outer tenth of the box.
    pub fn boundary_mass_fraction(&self) -> f64 {
        let total = self.inner_half_line(self).re;
        if total <= 0.0 {
            return 0.0;
        }
        let start = (0.9 * self.grid.n() as f64).floor() as usize;
        let h = self.grid.h();
        let outer: f64 = self.values[start..].iter().map(|v| v.norm_sqr() * h).sum();
        outer / total
    }

    pub fn is_identically_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }
}

/// Samples g(r_j) of a bounded radial function (potentials and w*|u|^2).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlainRadialField {
    grid: RadialGrid,
    values: Vec<Complex64>,
}

impl PlainRadialField {
    pub fn new(grid: RadialGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Grid(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Domain("non-finite sample".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_real(grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        Self::new(grid, values.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
    }

    pub fn from_fn(grid: RadialGrid, g: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().map(|r| Complex64::new(g(r), 0.0)).collect();
        Self { grid, values }
    }

    pub fn zeros(grid: RadialGrid) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn truncation_contract_zeroes_last_sample() {
        let g = RadialGrid::new(5.0, 50).unwrap();
        let f = ReducedField::from_reduced_fn(g, |_| c(1.0));
        assert_eq!(f.values()[50], c(0.0));
        assert_eq!(f.origin_value(), c(1.0));
    }

    #[test]
    fn mass_of_gaussian() {
        // ||e^{-r^2}||^2 = 4 pi int r^2 e^{-2 r^2} = (pi/2)^{3/2}
        let g = RadialGrid::new(8.0, 400).unwrap();
        let f = ReducedField::from_radial_fn(g, |r| c((-r * r).exp()));
        let exact = (PI / 2.0).powf(1.5);
        assert!((f.mass() - exact).abs() < 1e-10);
    }

    #[test]
    fn psi_values_extrapolate_regular_origin() {
        let g = RadialGrid::new(5.0, 200).unwrap();
        let f = ReducedField::from_radial_fn(g, |r| c((-r * r).exp()));
        let p = f.psi_values();
        assert!((p[0].re - 1.0).abs() < 1e-7);
        let s = ReducedField::from_reduced_fn(g, |r| c((-r).exp()));
        assert!(s.psi_values()[0].re.is_infinite());
    }

    #[test]
    fn mismatched_grids_rejected() {
        let a = ReducedField::zeros(RadialGrid::new(5.0, 50).unwrap());
        let b = ReducedField::zeros(RadialGrid::new(5.0, 60).unwrap());
        assert_eq!(a.add(&b), Err(Error::GridMismatch));
    }
}
