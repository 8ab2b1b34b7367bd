//! Radial Hartree dynamics with a contact interaction at the origin.
//!
//! States are radial functions psi on R^3 stored through the reduced profile
//! f(r) = r psi(r). The point-interaction Laplacian -Delta_alpha becomes
//! -d^2/dr^2 on the half-line with the Robin condition f'(0) = 4 pi alpha f(0),
//! which is diagonalized by [`spectral::RobinTransform`].

pub mod error;
pub mod field;
pub mod grid;
pub mod point;
pub mod radial;
pub mod spectral;
pub mod propagator;
pub mod hartree;
pub mod solver;
pub mod verify;

pub use error::{Error, Result, Warned, Warning};
pub use field::{PlainRadialField, ReducedField};
pub use grid::RadialGrid;
pub use point::PointInteraction;
pub use radial::{DecomposedState, Potential};
pub use spectral::{RobinTransform, SpectralField};
