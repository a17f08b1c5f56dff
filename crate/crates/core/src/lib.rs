//! Exact closest-point queries against triangle meshes using precomputed
//! Voronoi interception tables.

pub mod augment;
pub mod bench;
pub mod bvh;
mod delaunay;
pub mod error;
pub mod geometry;
pub mod index_file;
pub mod interception;
pub mod mesh;
pub mod meshgen;
pub mod nns;
pub mod oracle;
pub mod predicates;
pub mod query;
pub mod voronoi;

pub use error::{Error, Result};
pub use geometry::{Aabb, Point3, Sphere, Triangle3};
pub use mesh::TriangleMesh;
pub use query::{Engine, EngineConfig, QueryResult};
