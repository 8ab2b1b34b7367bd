use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("field lies outside the operator domain (charge-link residual {residual:.3e})")]
    DomainViolation { residual: f64 },
    #[error("integral diverges: {0}")]
    Divergent(String),
    #[error("resolution contract violated: k_max*h = {0:.3} > 1")]
    Resolution(f64),
    #[error("transform completeness defect {defect:.3e} exceeds tolerance {tol:.3e}")]
    Completeness { defect: f64, tol: f64 },
    #[error("multiplier singular at k = 0 for s = {0}")]
    SmallKSingularity(f64),
    #[error("transition regularity s = {0} is excluded")]
    TransitionRegularity(f64),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("Picard map is not contracting (ratios {0:?})")]
    NonContraction(Vec<f64>),
    #[error("Picard iteration cap {0} reached without convergence")]
    IterationCap(usize),
    #[error("field left the grid during the sweep at t = {0}")]
    Window(f64),
    #[error("negative coupling is not supported for time evolution")]
    NegativeCoupling,
}

pub type Result<T> = std::result::Result<T, Error>;

/// Non-fatal diagnostics attached to computed values.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub enum Warning {
    /// Kernel or density is non-negligible where the convolution needs values beyond r_max.
    Truncation { relative_edge_value: f64 },
    /// Spectral mass beyond 0.9 k_max (fraction of the total).
    Aliasing { tail_fraction: f64 },
    /// Spatial mass in the outer tenth of the box (fraction of the total).
    BoundaryMass { fraction: f64 },
    /// R*h exceeds the oscillatory-quadrature resolution bound.
    OscillatoryQuadrature { r_times_h: f64 },
}

/// A value together with the warnings produced while computing it.
#[derive(Debug, Clone)]
pub struct Warned<T> {
    pub value: T,
    pub warnings: Vec<Warning>,
}

impl<T> Warned<T> {
    pub fn clean(value: T) -> Self {
        Self { value, warnings: Vec::new() }
    }

    pub fn into_value(self) -> T {
        self.value
    }
}

pub(crate) fn is_transition(s: f64) -> bool {
    (s - 0.5).abs() < 1e-12 || (s - 1.5).abs() < 1e-12
}
