//! Ring-based site augmentation: find grid cells crowded with Voronoi
//! vertices and break the cluster up with a center site plus a ring of
//! auxiliary sites around it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bvh::Bvh;
use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::mesh::{mesh_stats, TriangleMesh};
use crate::voronoi::{build_delaunay, SiteSet, VoronoiComplex};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentationConfig {
    /// Grid cell size as a multiple of the mean edge length.
    pub alpha: f64,
    /// Voronoi vertices per grid cell at which a cell is flagged.
    pub k: usize,
    /// Ring radius as a multiple of the grid cell size.
    pub rho: f64,
    pub max_rounds: usize,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        AugmentationConfig { alpha: 1.0, k: 1000, rho: 0.75, max_rounds: 3 }
    }
}

impl AugmentationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.k < 1 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::Config(format!("rho must be positive, got {}", self.rho)));
        }
        if self.max_rounds < 1 {
            return Err(Error::Config("max_rounds must be at least 1".into()));
        }
        Ok(())
    }
}

pub type GridCell = [i64; 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseCell {
    pub cell: GridCell,
    pub count: usize,
    pub center: Point3,
}

/// Counts points per cubic grid cell of side `tau` anchored at `origin`.
pub fn grid_density_map(points: &[Point3], tau: f64, origin: Point3) -> BTreeMap<GridCell, usize> {
    assert!(tau > 0.0, "grid cell size must be positive");
    let mut map = BTreeMap::new();
    for &p in points {
        let c = (p - origin) / tau;
        *map.entry([c.x.floor() as i64, c.y.floor() as i64, c.z.floor() as i64]).or_insert(0) += 1;
    }
    map
}

/// Cells holding at least `k` points, most crowded first (ties by cell).
pub fn flag_dense_cells(map: &BTreeMap<GridCell, usize>, k: usize, tau: f64, origin: Point3) -> Vec<DenseCell> {
    let mut out: Vec<DenseCell> = map
        .iter()
        .filter(|(_, &n)| n >= k)
        .map(|(&cell, &count)| DenseCell {
            cell,
            count,
            center: origin
                + Point3::new(cell[0] as f64 + 0.5, cell[1] as f64 + 0.5, cell[2] as f64 + 0.5) * tau,
        })
        .collect();
    out.sort_by(|a, b| b.count.cmp(&a.count).then(a.cell.cmp(&b.cell)));
    out
}

/// Unit directions of the ring: 6 axis directions, then the 8 cube diagonals.
pub fn ring_pattern() -> [Point3; 14] {
    let mut dirs = [Point3::ZERO; 14];
    for a in 0..3 {
        let mut e = [0.0; 3];
        e[a] = 1.0;
        dirs[2 * a] = Point3::from_array(e);
        dirs[2 * a + 1] = -Point3::from_array(e);
    }
    let s = 1.0 / 3f64.sqrt();
    for i in 0..8 {
        dirs[6 + i] = Point3::new(
            if i & 1 == 0 { s } else { -s },
            if i & 2 == 0 { s } else { -s },
            if i & 4 == 0 { s } else { -s },
        );
    }
    dirs
}

/// Center site plus the 14 ring sites at `radius`, each paired with its
/// projection onto the mesh.
pub fn make_auxiliary_cluster(cell: &DenseCell, radius: f64, bvh: &Bvh) -> Vec<(Point3, Point3)> {
    std::iter::once(cell.center)
        .chain(ring_pattern().iter().map(|&d| cell.center + d * radius))
        .map(|p| (p, bvh.closest_point(p).closest))
        .collect()
}

#[derive(Debug, Clone)]
pub struct AugmentOutcome {
    pub sites: SiteSet,
    /// Delaunay complex of the final site set.
    pub complex: VoronoiComplex,
    /// Density analyses performed.
    pub rounds: usize,
    pub inserted: usize,
    pub tau: f64,
}

pub fn grid_size(mesh: &TriangleMesh, cfg: &AugmentationConfig) -> f64 {
    cfg.alpha * mesh_stats(mesh).mean_edge_length
}

/// Runs density analysis and cluster insertion for up to `max_rounds`
/// rounds, rebuilding the Delaunay complex after each insertion.
pub fn augment_sites(ss: SiteSet, mesh: &TriangleMesh, bvh: &Bvh, cfg: &AugmentationConfig) -> Result<AugmentOutcome> {
    let complex = build_delaunay(&ss)?;
    augment_from_complex(ss, complex, mesh, bvh, cfg)
}

/// [`augment_sites`] starting from an already built complex of `ss`.
pub fn augment_from_complex(
    ss: SiteSet,
    complex: VoronoiComplex,
    mesh: &TriangleMesh,
    bvh: &Bvh,
    cfg: &AugmentationConfig,
) -> Result<AugmentOutcome> {
    cfg.validate()?;
    let tau = grid_size(mesh, cfg);
    let domain = ss.domain();
    let mut ss = ss;
    let mut complex = complex;
    let mut rounds = 0;
    let mut inserted = 0;
    let mut accepted: Vec<Point3> = Vec::new();
    let min_sep2 = (tau / 4.0) * (tau / 4.0);
    while rounds < cfg.max_rounds {
        rounds += 1;
        let vertices = complex.voronoi_vertices_in(&domain);
        let flagged = flag_dense_cells(&grid_density_map(&vertices, tau, domain.min), cfg.k, tau, domain.min);
        let mut added = 0;
        for cell in &flagged {
            for (p, reference) in make_auxiliary_cluster(cell, cfg.rho * tau, bvh) {
                if accepted.iter().any(|a| a.distance_squared(p) < min_sep2) {
                    continue;
                }
                if ss.add_auxiliary(p, reference)? {
                    accepted.push(p);
                    added += 1;
                }
            }
        }
        if added == 0 {
            break;
        }
        inserted += added;
        complex = build_delaunay(&ss)?;
    }
    Ok(AugmentOutcome { sites: ss, complex, rounds, inserted, tau })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshgen;
    use crate::voronoi::{make_bounded_site_set, query_domain, SiteKind};

    #[test]
    fn identical_points_share_a_cell() {
        let m = grid_density_map(&[Point3::splat(0.3); 5], 1.0, Point3::ZERO);
        assert_eq!(m.len(), 1);
        assert_eq!(*m.values().next().unwrap(), 5);
    }

    #[test]
    fn far_points_are_separate() {
        let pts: Vec<_> = (0..4).map(|i| Point3::new(10.0 * i as f64, 0.0, 0.0)).collect();
        let m = grid_density_map(&pts, 1.0, Point3::splat(-0.5));
        assert_eq!(m.len(), 4);
        assert!(m.values().all(|&c| c == 1));
    }

    #[test]
    fn flag_threshold_is_inclusive() {
        let mut m = BTreeMap::new();
        m.insert([0, 0, 0], 3);
        m.insert([1, 0, 0], 5);
        m.insert([2, 0, 0], 9);
        assert!(flag_dense_cells(&m, 10, 1.0, Point3::ZERO).is_empty());
        let f = flag_dense_cells(&m, 9, 1.0, Point3::ZERO);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].cell, [2, 0, 0]);
        assert_eq!(f[0].center, Point3::new(2.5, 0.5, 0.5));
        let f = flag_dense_cells(&m, 4, 1.0, Point3::ZERO);
        assert_eq!(f.iter().map(|c| c.count).collect::<Vec<_>>(), vec![9, 5]);
    }

    #[test]
    fn ring_directions() {
        let r = ring_pattern();
        assert!(r.iter().all(|d| (d.norm() - 1.0).abs() < 1e-15));
        let s = 1.0 / 3f64.sqrt();
        assert!(r.contains(&Point3::new(0.0, -1.0, 0.0)));
        assert!(r.contains(&Point3::new(-s, s, -s)));
        let mut keys: Vec<_> = r.iter().map(|d| d.bits()).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), 14);
    }

    #[test]
    fn cluster_references_are_projections() {
        let m = meshgen::icosphere(2);
        let bvh = Bvh::build(&m);
        let cell = DenseCell { cell: [0, 0, 0], count: 100, center: Point3::new(0.1, -0.2, 0.05) };
        let c = make_auxiliary_cluster(&cell, 0.3, &bvh);
        assert_eq!(c.len(), 15);
        for (p, r) in c {
            let want = (0..m.face_count())
                .map(|f| m.triangle(f).closest_point(p).distance(p))
                .fold(f64::INFINITY, f64::min);
            assert!((p.distance(r) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn config_validation() {
        assert!(AugmentationConfig::default().validate().is_ok());
        for bad in [
            AugmentationConfig { alpha: 0.0, ..Default::default() },
            AugmentationConfig { k: 0, ..Default::default() },
            AugmentationConfig { rho: -1.0, ..Default::default() },
            AugmentationConfig { max_rounds: 0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn saturating_config_terminates() {
        let m = meshgen::icosphere(1);
        let bvh = Bvh::build(&m);
        let ss = make_bounded_site_set(m.vertices(), query_domain(&m.aabb())).unwrap();
        let cfg = AugmentationConfig { k: 1, max_rounds: 2, ..Default::default() };
        let out = augment_sites(ss, &m, &bvh, &cfg).unwrap();
        assert_eq!(out.rounds, 2);
        assert!(out.inserted > 0);
        // overlapping clusters respect the separation rule
        let aux: Vec<Point3> = out
            .sites
            .sites()
            .iter()
            .filter(|s| matches!(s.kind, SiteKind::Auxiliary { .. }))
            .map(|s| s.position)
            .collect();
        for (i, a) in aux.iter().enumerate() {
            for b in &aux[i + 1..] {
                assert!(a.distance(*b) >= out.tau / 4.0);
            }
        }
    }

    #[test]
    fn sphere_center_cell_dominates() {
        let m = meshgen::icosphere(3);
        let ss = make_bounded_site_set(m.vertices(), query_domain(&m.aabb())).unwrap();
        let vc = build_delaunay(&ss).unwrap();
        let tau = grid_size(&m, &AugmentationConfig::default());
        let map = grid_density_map(&vc.voronoi_vertices_in(&ss.domain()), tau, ss.domain().min);
        let c = ss.domain().center() - ss.domain().min;
        let center = [(c.x / tau).floor() as i64, (c.y / tau).floor() as i64, (c.z / tau).floor() as i64];
        let center_count = map.get(&center).copied().unwrap_or(0);
        let other = map.iter().filter(|(k, _)| **k != center).map(|(_, &v)| v).max().unwrap_or(0);
        assert!(center_count > 10 * other, "center {center_count} vs {other}");
        let flagged = flag_dense_cells(&map, AugmentationConfig::default().k, tau, ss.domain().min);
        assert_eq!(flagged[0].cell, center);
    }
}
