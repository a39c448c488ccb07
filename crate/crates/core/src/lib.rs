//! Geodesic flowers on model Riemannian manifolds with cusp-like ends.
//!
//! The crate is organized bottom-up:
//!
//! - [`manifold`]: analytic model surfaces (round sphere, flat torus, cusp
//!   surfaces of revolution, a 3-dimensional warped product) described by
//!   charts, metric tensors and Christoffel symbols.
//! - [`geodesics`]: fixed-step geodesic integration, the exponential map and
//!   two-point shooting for short minimizing geodesics.
//! - [`nets`]: piecewise-geodesic curves, flowers, cages, the cage collapse
//!   onto a base vertex and the stationarity measurement.
//! - [`shortening`]: the flower shortening flow (per-edge Birkhoff process,
//!   vertex balancing, small-flower contraction).
//! - [`slicing`]: level sets of the radial coordinate in the ends and the
//!   co-area budget.
//! - [`bounds`]: the edge and length budgets a geodesic flower is certified
//!   against.
//! - [`experiment`] and [`report`]: the config-driven runner behind the
//!   `flowerbed` binary and its CSV/JSON/SVG emitters.

pub mod bounds;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod geodesics;
pub mod manifold;
pub mod nets;
pub mod quadrature;
pub mod report;
pub mod shortening;
pub mod slicing;

pub use error::{Error, Result};
pub use exec::Exec;
pub use manifold::{ChartPoint, ModelKind, ModelManifold, Region, TangentVec, Vec2, WarpKind};
pub use nets::{Cage, Flower, PolyCurve, StationarityCertificate};
pub use shortening::{FlowConfig, FlowOutcome, FlowTrace};
