use serde::{Deserialize, Serialize};

/// Every numerical tolerance used by the library. Threaded explicitly
/// through calls; there is no global default state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericPolicy {
    /// Relative residual accepted for a polished root.
    pub tol_root: f64,
    /// Chordal radius under which simple roots merge into a multiple root.
    pub tol_cluster: f64,
    /// Leading coefficients below this fraction of the largest one count as zero.
    pub tol_lead: f64,
    /// Relative singular-value threshold for approximate GCD rank decisions.
    pub tol_rank: f64,
    /// Minimum singular-value gap before a GCD is flagged ill-conditioned.
    pub min_rank_gap: f64,
    /// Chordal distance counting as a return in periodicity detection.
    pub tol_periodic: f64,
    /// Band around |multiplier| = 1 classified as neutral.
    pub tol_neutral: f64,
    /// Largest projected degree accepted by `iterate`.
    pub iterate_cap: usize,
    /// Masking radius near ramification is `mask_factor / R` chart units.
    pub mask_factor: f64,
    /// Largest masked node fraction accepted by the oneform pullback.
    pub max_mask_fraction: f64,
    /// Iteration cap of the eigenvalue solver.
    pub max_eigen_iters: usize,
}

impl Default for NumericPolicy {
    fn default() -> Self {
        Self {
            tol_root: 1e-10,
            tol_cluster: 1e-7,
            tol_lead: 1e-14,
            tol_rank: 1e-9,
            min_rank_gap: 1e3,
            tol_periodic: 1e-6,
            tol_neutral: 0.05,
            iterate_cap: 4096,
            mask_factor: 10.0,
            max_mask_fraction: 0.2,
            max_eigen_iters: 500,
        }
    }
}
