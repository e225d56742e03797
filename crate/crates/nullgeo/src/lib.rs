//! Numerical verification of integral identities and inequalities satisfied by
//! codimension-two spacelike surfaces in static spherically symmetric spacetimes.
//!
//! The library builds warped-product background geometries (Minkowski,
//! Schwarzschild, anti-de Sitter, de Sitter), evaluates graph surfaces over the
//! round sphere together with their exact second-order jets, assembles the full
//! extrinsic apparatus of a codimension-two surface (null frames, shears,
//! torsion one-form), and integrates the resulting identity residuals and
//! inequality functionals on Gauss-Legendre product grids.
//!
//! Entry points:
//! * [`spacetimes::Spacetime`] — ambient geometry and connection,
//! * [`surfaces`] — the surface DSL, hyper-dual jets, and the surface catalog,
//! * [`sphere_grid`] — grids, quadrature, and discrete differential operators,
//! * [`extrinsic`] — pointwise frame data for one surface point,
//! * [`fields`] — whole-surface pipelines (torsion gauge fixing included),
//! * [`curvature`] — mixed higher-order curvature polynomials and Newton tensors,
//! * [`functionals`] — the identity/inequality checks themselves,
//! * [`cli`] — config-driven runner used by the `nullgeo` binary and the C API.

pub mod curvature;
pub mod error;
pub mod euclid;
pub mod extrinsic;
pub mod fields;
pub mod functionals;
pub mod scalar;
pub mod spacetimes;
pub mod sphere_grid;
pub mod surfaces;

pub use error::Error;

/// Crate version string reported by `nullgeo version` and the C API.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
