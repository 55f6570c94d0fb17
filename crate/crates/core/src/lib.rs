//! Numerical verification engine for hypersurfaces of non-flat pseudo-Riemannian
//! space forms.
//!
//! The crate computes the full extrinsic geometry of parametrized immersions
//! (fundamental forms, unit normal, shape operator, mean curvature), checks the
//! PMCV conditions `A(∇H) = -(n/2)εH∇H` and `ΔH + εH tr A² = λH`, evaluates the
//! closed-form classification data for isoparametric two-curvature hypersurfaces,
//! and constructs verified instances of the standard type II / type III example
//! families by integrating their moving-frame ODEs.

pub mod analysis;
pub mod catalog;
pub mod geometry;
pub mod jets;
pub mod linalg;

pub use analysis::{FullReport, PmcvReport, TwoCurvatureData};
pub use geometry::{ExtrinsicData, Immersion, SpaceForm};
pub use jets::Jet;
pub use linalg::{FormTag, MetricMatrix, ShapeSpectrum, Signature};

/// Default tolerance for double-precision residual and rank decisions.
pub const DEFAULT_TOL: f64 = 1e-8;
