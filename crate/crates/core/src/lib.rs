//! Topological invariants of labeled point clouds, computed subset-by-subset.
//!
//! The library covers the full pipeline: pairwise geometry and subset
//! sampling, Vietoris-Rips / Čech filtrations truncated at a skeleton
//! dimension, persistence diagrams and Euler curves, metrics between the
//! resulting invariants (bottleneck, Wasserstein, persistence images),
//! exact reconstruction of the underlying distance matrix from subset
//! invariants, quasi-isometry certificates for labeled alignments, and a
//! stochastic optimizer that aligns a noisy cloud to a reference by
//! descending a persistence-based loss.
//!
//! All numeric code is generic over the scalar type through [`Scalar`];
//! `f64` aliases for the main types live at the crate root.

pub mod align;
pub mod casestudy;
pub mod distributed;
pub mod error;
pub mod filtration;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod persistence;
pub mod reconstruction;

mod matching;
mod minball;
mod util;

use std::fmt;

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub use error::{Error, Result};

/// Scalar type usable throughout the library: `f32`, `f64`, or anything
/// float-like that can round-trip through the primitive conversions.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + fmt::Debug + fmt::Display + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + fmt::Debug + fmt::Display + Send + Sync + 'static
{
}

/// Converts an `f64` constant into the working scalar type.
///
/// Panics only if the target type cannot represent any finite `f64`,
/// which no implementor of [`Scalar`] in practice exhibits.
pub(crate) fn sc<F: Scalar>(x: f64) -> F {
    F::from_f64(x).expect("scalar type must convert from f64")
}

/// Converts a count into the working scalar type.
pub(crate) fn sc_usize<F: Scalar>(x: usize) -> F {
    F::from_usize(x).expect("scalar type must convert from usize")
}

pub type PointCloudF64 = geometry::PointCloud<f64>;
pub type DistanceMatrixF64 = geometry::DistanceMatrix<f64>;
pub type FilteredComplexF64 = filtration::FilteredComplex<f64>;
pub type PersistenceDiagramF64 = persistence::PersistenceDiagram<f64>;
pub type EulerCurveF64 = persistence::EulerCurve<f64>;
pub type DistributedInvariantF64 = distributed::DistributedInvariant<f64>;
