//! Lineage-based hierarchical B-spline spaces.
//!
//! A hierarchical space is identified by its *lineage*, the finite set of
//! refined multilevel B-splines. Everything else (candidate sets, generator,
//! active cells, gaps) is derived from it with exact lattice arithmetic.
//!
//! Module layout:
//!
//! * [`index_algebra`]: index functions `M`, `D`, `L`, `R` and lattice boxes.
//! * [`mesh`]: n-adic cells.
//! * [`bspline_space`]: multilevel B-splines, masks, ancestry and overlap boxes.
//! * [`hierarchy`]: lineages, generators, absorbing test, gaps.
//! * [`refinement`]: the refinement algorithms and complexity constants.
//! * [`oracle`]: exact rank tests and exhaustive searches.
//! * [`driver`]: adaptive loops, sampling and verification.

pub mod bspline_space;
pub mod driver;
pub mod error;
pub mod hierarchy;
pub mod index_algebra;
pub mod linalg;
pub mod mesh;
pub mod oracle;
pub mod refinement;

/// Exact rational numbers used by evaluation and the oracle.
pub type Rational = num_rational::BigRational;

pub use bspline_space::{Family, SplineBox, SplineRef, SplineSet, SubdivisionMask};
pub use error::{Error, Result};
pub use hierarchy::{ActiveCellSet, GeneratorView, Lineage};
pub use index_algebra::{LatticeBox, MultiIndex, SpaceConfig};
pub use mesh::{CellBox, CellRef};
pub use refinement::RefinementReport;
