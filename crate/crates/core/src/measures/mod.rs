//! Point-cloud measures and diagnostics: pairings, distances, invariance
//! residuals, convergence rates, mixing correlations and density images.

mod cloud;
mod diagnostics;
mod dictionary;
mod render;

pub use cloud::{neumaier_sum, Atom, CloudMeta, PointCloudMeasure};
pub use diagnostics::{
    dual_lip_distance, invariance_residual, linear_fit, mixing_correlation, moment_distance, pair, rate_fit,
    LinearFit, MixingSeries, RateOptions, RateReport,
};
pub use dictionary::{Basis, TestDictionary, TestFunction, MAX_DEGREE};
pub use render::{render_density, Raster, MAX_RESOLUTION};
