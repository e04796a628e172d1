//! Exact zero level sets of ReLU networks.
//!
//! The [`engine`] walks the network's linear regions depth first, splitting
//! convex cells along neuron planes and folding each layer into a per-cell
//! affine map, until the output is affine inside every cell and its zero set
//! can be cut out exactly. A Marching Cubes baseline ([`mc`]), triangulation
//! ([`tessellate`]) and surface metrics ([`metrics`]) complete the toolkit.

pub mod affine;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod mc;
pub mod mesh;
pub mod metrics;
pub mod net;
pub mod tessellate;

pub use engine::{extract, EngineConfig, Extraction, SurfacePatch, TraversalStats};
pub use error::{Error, Result};
pub use geometry::{Aabb, Tolerances};
pub use mesh::{PolyMesh, TriMesh};
pub use net::{Activation, Layer, Network};
