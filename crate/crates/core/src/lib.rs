//! Orthogonal rational functions on the unit circle and the non-stationary
//! Gaussian processes they describe.

// `!(x < tol)` guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod config;
pub mod error;
pub mod fixtures;
pub mod linalg;
pub mod measure;
pub mod moments;
pub mod orf;
pub mod predict;
pub mod vgp;

pub use basis::{BasisSystem, PointSequence, SystemId, TriangularMatrix};
pub use config::RunConfig;
pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector};
pub use measure::{Atom, CircleMeasure, Density};
pub use moments::{GtMatrix, MomentSequence, PickReport};
pub use num_complex::Complex64 as C64;
pub use orf::{LaurentOrdering, LaurentOrfFamily, OrfFamily};
pub use predict::{PredictionKind, PredictorReport};
pub use vgp::{FilterSpec, SamplePaths};
