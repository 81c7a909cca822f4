//! Computational toolkit for homeomorphisms of closed hyperbolic surfaces
//! isotopic to the identity: explicit equivariant lifts to the Poincaré disk,
//! filling curve systems, homological rotation sets and the exact arithmetic
//! that realizes rational rotation vectors by periodic orbits.

pub mod curves;
pub mod dynamics;
pub mod error;
pub mod group;
pub mod hyperbolic;
pub mod lp;
pub mod realization;
pub mod ribbon;
pub mod rotation;

pub use error::{Error, Result};
pub use group::{abelianize, FundamentalDomain, GroupWord, HomologyClass, Letter, SurfaceGroup};
pub use hyperbolic::{
    dist, BoundaryPoint, DiskPoint, FermiCoords, Geodesic, GeodesicFrame, Isometry, IsometryKind,
};
pub use curves::{filling_check, CurveClass, FillingReport, Intersection};
pub use dynamics::{build_map, zoo, LiftedMap, MapSpec, ShearSpec, TorusMapSpec, TorusProfile, ZooEntry};
pub use realization::{ExtremalDatum, PeriodicPointResult, RealizationCertificate};
pub use rotation::{Basepoint, CellDynamics, RotationConfig, RotationSetEstimate, TorusMap};
