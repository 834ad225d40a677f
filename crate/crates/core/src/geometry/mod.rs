//! Lattice triangulations, region decompositions and exact bond geometry.

pub mod clip;
pub mod coarse;
pub mod field;
pub mod mesh;
pub mod neighbourhood;
pub mod region;

pub use coarse::{
    lattice_gradient_norm, piecewise_lp_norm, CoarseField, CoarseMesh, PointwiseNorm,
};
pub use field::P0TensorField;
pub use mesh::{AtomisticMesh, EdgeId, Element, ElementId, ElementKind};
pub use neighbourhood::{oscillation, Neighbourhoods};
pub use region::{Bond, CouplingGeometry, Region, RegionDecomposition};
