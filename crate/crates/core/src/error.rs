use std::io;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("degenerate triangle (zero area)")]
    DegenerateTriangle,
    #[error("tetrahedron vertices are coplanar")]
    CoplanarTetrahedron,
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("io error reading mesh: {0}")]
    Io(#[from] io::Error),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported mesh format: {0}")]
    UnsupportedFormat(String),
    #[error("face {face} references vertex {index} but the mesh has {count} vertices")]
    IndexOutOfRange { face: usize, index: usize, count: usize },
    #[error("mesh has no faces")]
    Empty,
    #[error("all {0} faces are degenerate")]
    AllDegenerate(usize),
    #[error("strict mode: {0}")]
    Strict(String),
}

#[derive(Debug, Error)]
pub enum VoronoiError {
    #[error("need at least 4 non-coplanar sites, got {0}")]
    TooFewSites(usize),
    #[error("all sites are coplanar")]
    Coplanar,
    #[error("duplicate site position at index {0}")]
    DuplicateSite(usize),
    #[error("site {0} lies outside the sentinel hull")]
    OutsideHull(usize),
    #[error("sentinel guarantee violated: reach {reach} >= sentinel clearance {clearance}")]
    SentinelGuarantee { reach: f64, clearance: f64 },
    #[error("point location failed for site {0}")]
    LocateFailed(usize),
    #[error("site {0} is not a real (non-sentinel) site")]
    NotRealSite(usize),
}

#[derive(Debug, Error)]
pub enum IndexFileError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported or truncated index: version {0:?}")]
    Version(Option<u32>),
    #[error("checksum mismatch (index file is corrupt)")]
    Checksum,
    #[error("mesh hash mismatch: index was built for a different mesh")]
    MeshMismatch,
    #[error("malformed index: {0}")]
    Malformed(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Voronoi(#[from] VoronoiError),
    #[error(transparent)]
    IndexFile(#[from] IndexFileError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("empty site set")]
    EmptySiteSet,
    #[error("oracle: {0}")]
    Oracle(String),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
