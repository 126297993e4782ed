//! Grid paths, step-2 lifts and rough integration.

mod chen;
mod field;
mod holder;
mod integral;
mod lift;
mod path;

pub use chen::{chen_defect_max, ChenReport};
pub use field::{FourierPhase, TestField, VectorField};
pub use holder::{grr_bound, holder_norm_area, holder_norm_path, GrrConfig, GrrReport, HolderMode, HolderNorm, PairwiseTensor, ZeroPairwise};
pub use integral::{check_regularity, dyadic_convergence_profile, ito_strat_defect, rough_integral};
pub use lift::{LiftScheme, Step2RoughPath};
pub use path::GridPath;
