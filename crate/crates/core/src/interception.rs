//! Relaxed interception tables: for every proxy site, the faces that can be
//! closest to some query point inside the site's Voronoi cell.
//!
//! A mesh-vertex site `v` lies on the surface, so for `q` in its cell the
//! closest face meets `B(q, |q - v|)`. The union of those balls over the
//! cell equals the union over the cell's corners `u` of `B(u, |u - v|)`,
//! which is what gets enumerated. An auxiliary site `s` is off the surface;
//! its table uses a single ball around `s` that contains the corner balls
//! taken with respect to its projection onto the mesh.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bvh::{Bvh, UnionScratch};
use crate::error::Result;
use crate::geometry::{Point3, Sphere};
use crate::voronoi::{SiteKind, SiteSet, VoronoiComplex};

/// Relative radius inflation applied to every interference ball, absorbing
/// rounding in the computed cell corners.
pub const RADIUS_REL_SLACK: f64 = 1e-9;

/// Absolute radius inflation: `slack = ABS_SLACK * mesh diagonal`.
pub const ABS_SLACK: f64 = 1e-9;

fn inflate(r: f64, abs_slack: f64) -> f64 {
    r * (1.0 + RADIUS_REL_SLACK) + abs_slack
}

/// Faces meeting any corner ball `B(u, |u - v|)`, sorted.
pub fn build_vertex_site_table(
    v: Point3,
    corners: &[Point3],
    bvh: &Bvh,
    scratch: &mut UnionScratch,
    abs_slack: f64,
) -> Vec<u32> {
    let balls: Vec<Sphere> = corners.iter().map(|&u| Sphere::new(u, inflate(u.distance(v), abs_slack))).collect();
    bvh.sphere_union(&balls, scratch)
}

/// `max_u (|s - u| + |u - reference|)` over the cell corners.
pub fn aux_radius(s: Point3, reference: Point3, corners: &[Point3]) -> f64 {
    corners.iter().map(|&u| s.distance(u) + u.distance(reference)).fold(0.0, f64::max)
}

/// Faces meeting the ball around an off-surface site, sorted.
pub fn build_aux_site_table(s: Point3, reference: Point3, corners: &[Point3], bvh: &Bvh, abs_slack: f64) -> Vec<u32> {
    bvh.sphere_query(&Sphere::new(s, inflate(aux_radius(s, reference, corners), abs_slack)))
}

/// Per-site candidate face lists; sentinel sites have empty lists.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InterceptionIndex {
    tables: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableStats {
    pub max: usize,
    pub avg: f64,
    /// Mean candidates visited per query (before bounding-sphere pruning).
    pub queried_avg: Option<f64>,
    /// Mean exact point-triangle evaluations per query (after pruning).
    pub exact_avg: Option<f64>,
}

/// Aggregate query counters fed into [`table_stats`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct QueryLog {
    pub queries: u64,
    pub candidates: u64,
    pub exact: u64,
}

impl InterceptionIndex {
    pub fn from_tables(tables: Vec<Vec<u32>>) -> Self {
        InterceptionIndex { tables }
    }

    pub fn table(&self, site: usize) -> &[u32] {
        &self.tables[site]
    }

    pub fn tables(&self) -> &[Vec<u32>] {
        &self.tables
    }

    pub fn site_count(&self) -> usize {
        self.tables.len()
    }

    pub fn total_entries(&self) -> usize {
        self.tables.iter().map(Vec::len).sum()
    }

    pub fn max_len(&self) -> usize {
        self.tables.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Builds the tables of all non-sentinel sites in parallel.
pub fn build_all_tables(vc: &VoronoiComplex, ss: &SiteSet, bvh: &Bvh, mesh_diagonal: f64) -> Result<InterceptionIndex> {
    let abs_slack = ABS_SLACK * mesh_diagonal;
    let tables = ss
        .sites()
        .par_iter()
        .enumerate()
        .map_init(UnionScratch::default, |scratch, (i, site)| -> Result<Vec<u32>> {
            let mut t = match site.kind {
                SiteKind::Sentinel => Vec::new(),
                SiteKind::MeshVertex(_) => {
                    build_vertex_site_table(site.position, &vc.cell_corners(i)?, bvh, scratch, abs_slack)
                }
                SiteKind::Auxiliary { reference } => {
                    build_aux_site_table(site.position, reference, &vc.cell_corners(i)?, bvh, abs_slack)
                }
            };
            t.shrink_to_fit();
            Ok(t)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(InterceptionIndex { tables })
}

/// Max and mean list length over non-sentinel sites, plus per-query
/// averages when a query log is supplied.
pub fn table_stats(index: &InterceptionIndex, ss: &SiteSet, log: Option<&QueryLog>) -> TableStats {
    let lens: Vec<usize> = ss
        .sites()
        .iter()
        .zip(index.tables())
        .filter(|(s, _)| !s.is_sentinel())
        .map(|(_, t)| t.len())
        .collect();
    let max = lens.iter().copied().max().unwrap_or(0);
    let avg = if lens.is_empty() { 0.0 } else { lens.iter().sum::<usize>() as f64 / lens.len() as f64 };
    let per_query = |x: u64, n: u64| if n == 0 { 0.0 } else { x as f64 / n as f64 };
    TableStats {
        max,
        avg,
        queried_avg: log.map(|l| per_query(l.candidates, l.queries)),
        exact_avg: log.map(|l| per_query(l.exact, l.queries)),
    }
}
