//! Transport of measures and fields along a correspondence: backward and
//! forward orbit clouds, the transfer operator on functions and the
//! pullback of one-forms with its norm.

pub mod grid;
mod operator;
pub mod rng;
mod transport;

pub use grid::{FieldKind, Grid, GridField};
pub use operator::{
    oneform_pullback, operator_norm_estimate, transfer_apply, Direction, NormEstimate, PullbackPlan, NORM_BASIS_DEGREE,
};
pub use transport::{backward_cloud, backward_transport, forward_cloud, pullback_dirac, pullback_form};
