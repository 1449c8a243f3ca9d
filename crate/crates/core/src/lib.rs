//! Numerical dynamics of holomorphic correspondences on the Riemann sphere.

pub mod algebra;
pub mod cli;
pub mod correspondence;
pub mod dynamics;
pub mod error;
pub mod measures;
pub mod periodic;
pub mod policy;
pub mod sphere;

pub use error::{Error, Result};
pub use policy::NumericPolicy;
pub use sphere::{Chart, SpherePoint, SphereRotation};
