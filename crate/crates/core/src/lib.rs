//! Large margin nearest neighbor metric learning with feasibility-based
//! triplet weighting.
//!
//! The crate learns a Mahalanobis metric `D_M(x, y) = (x − y)ᵀ M (x − y)`
//! for kNN classification. Plain LMNN (`sp`, `mp` modes) weights every
//! target pair equally; the feasibility-based variant (`fb`) weights each
//! pair by how large the feasible region of its margin constraints is,
//! measured from the spectrum of the rank-two matrix
//! `(x_i − x_j)(x_i − x_j)ᵀ − (x_i − x_l)(x_i − x_l)ᵀ`.
//!
//! ```
//! use fblmnn::dataset::{gen_zebra, ZebraParams};
//! use fblmnn::solver::{fit, Mode, SolverConfig};
//!
//! let params = ZebraParams { stripes: 4, points_per_stripe: 20, ..Default::default() };
//! let data = gen_zebra(&params, 7).unwrap();
//! let cfg = SolverConfig { passes: 2, max_iterations: 50, ..SolverConfig::for_mode(Mode::Fb) };
//! let report = fit(&data, &cfg).unwrap();
//! assert_eq!(report.metric.dim(), 2);
//! ```

pub mod cli;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod feasibility;
pub mod linalg;
pub mod manifest;
pub mod metric;
pub mod neighborhood;
pub mod solver;

pub use dataset::{LabelColumn, LabeledDataset};
pub use error::{Error, Result};
pub use linalg::SymMatrix;
pub use metric::Metric;
pub use neighborhood::{ImpostorMode, NeighborhoodPlan, Triplet};
pub use solver::{fit, Mode, SolveReport, SolverConfig};
