//! Reflection maps: the half-line Skorokhod map, oblique reflection in the orthant and the
//! level-by-level soft fluid solver built on top of it.

pub mod reflection;
pub mod routing;
pub mod vmvsm;

pub use reflection::{complementarity_sum, ormt, ormt_lipschitz_check, ormt_monotonicity_check, ormt_nonanticipation_check, sm1d, OrthantReflection};
pub use routing::RoutingMatrix;
pub use vmvsm::{vmvsm_solve, vmvsp_residuals, VmvsmDiagnostics, VmvsmSolution, VmvspResiduals};
