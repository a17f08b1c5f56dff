//! Proxy sites, their sentinel-bounded Delaunay tetrahedralization, and
//! Voronoi cell corners.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::delaunay::{tetrahedralize, NONE};
use crate::error::VoronoiError;
use crate::geometry::{circumcenter_unchecked, Aabb, Point3};
use crate::predicates::{orient3d, Sign};

/// Scale of the query domain relative to the mesh bounding box.
pub const DOMAIN_SCALE: f64 = 10.0;
/// Scale of the sentinel cube relative to the query domain.
pub const SENTINEL_SCALE: f64 = 4.0;
/// Bounding-box axes thinner than this fraction of the longest axis are
/// widened before the domain is derived (flat meshes would otherwise give
/// a flat domain and a degenerate sentinel cube).
pub const MIN_AXIS_FRACTION: f64 = 0.1;
/// Relative tolerance (times the domain diagonal) for merging cell corners.
pub const CORNER_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SiteKind {
    MeshVertex(u32),
    Auxiliary { reference: Point3 },
    Sentinel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub position: Point3,
    pub kind: SiteKind,
}

impl Site {
    pub fn is_sentinel(&self) -> bool {
        matches!(self.kind, SiteKind::Sentinel)
    }
}

/// Query domain for a mesh bounding box: the box scaled 10x about its
/// center, after widening axes thinner than `MIN_AXIS_FRACTION` of the
/// longest one.
pub fn query_domain(mesh_box: &Aabb) -> Aabb {
    let e = mesh_box.extent();
    let longest = e.x.max(e.y).max(e.z);
    let floor = longest * MIN_AXIS_FRACTION;
    let half = Point3::new(e.x.max(floor), e.y.max(floor), e.z.max(floor)) * 0.5;
    let c = mesh_box.center();
    Aabb::new(c - half, c + half).scaled(DOMAIN_SCALE)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteSet {
    sites: Vec<Site>,
    domain: Aabb,
}

impl SiteSet {
    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn domain(&self) -> Aabb {
        self.domain
    }

    pub fn positions(&self) -> Vec<Point3> {
        self.sites.iter().map(|s| s.position).collect()
    }

    pub fn auxiliary_count(&self) -> usize {
        self.sites.iter().filter(|s| matches!(s.kind, SiteKind::Auxiliary { .. })).count()
    }

    pub fn sentinel_box(&self) -> Aabb {
        self.domain.scaled(SENTINEL_SCALE)
    }

    /// Appends an auxiliary site. Returns `Ok(false)` when a site already
    /// occupies exactly that position.
    pub fn add_auxiliary(&mut self, position: Point3, reference: Point3) -> Result<bool, VoronoiError> {
        if !strictly_inside(&self.sentinel_box(), position) {
            return Err(VoronoiError::OutsideHull(self.sites.len()));
        }
        let bits = position.bits();
        if self.sites.iter().any(|s| s.position.bits() == bits) {
            return Ok(false);
        }
        self.sites.push(Site { position, kind: SiteKind::Auxiliary { reference } });
        Ok(true)
    }

    /// Reassembles a site set (e.g. when loading an index), re-checking
    /// the structural invariants.
    pub fn from_parts(sites: Vec<Site>, domain: Aabb) -> Result<SiteSet, VoronoiError> {
        let sentinels = sites.iter().filter(|s| s.is_sentinel()).count();
        if sentinels != 8 {
            return Err(VoronoiError::TooFewSites(sites.len() - sentinels));
        }
        let ss = SiteSet { sites, domain };
        ss.check()?;
        Ok(ss)
    }

    fn check(&self) -> Result<(), VoronoiError> {
        let e = self.domain.extent();
        if !(e.x > 0.0 && e.y > 0.0 && e.z > 0.0) {
            return Err(VoronoiError::TooFewSites(self.sites.iter().filter(|s| !s.is_sentinel()).count()));
        }
        let hull = self.sentinel_box();
        let mut seen = HashSet::with_capacity(self.sites.len());
        for (i, s) in self.sites.iter().enumerate() {
            if !seen.insert(s.position.bits()) {
                return Err(VoronoiError::DuplicateSite(i));
            }
            if !s.is_sentinel() && !strictly_inside(&hull, s.position) {
                return Err(VoronoiError::OutsideHull(i));
            }
        }
        self.check_sentinel_guarantee()
    }

    /// Every point of D is closer to some real site than to any sentinel:
    /// checked through the real site `r0` nearest D's center, since
    /// `d(q, r0) <= max_corner |c - r0|` for all q in D.
    fn check_sentinel_guarantee(&self) -> Result<(), VoronoiError> {
        let c = self.domain.center();
        let r0 = self
            .sites
            .iter()
            .filter(|s| !s.is_sentinel())
            .map(|s| s.position)
            .min_by(|a, b| a.distance_squared(c).total_cmp(&b.distance_squared(c)))
            .ok_or(VoronoiError::TooFewSites(0))?;
        let reach = self.domain.max_distance_squared_to(r0).sqrt();
        let clearance = self
            .sites
            .iter()
            .filter(|s| s.is_sentinel())
            .map(|s| self.domain.distance_squared_to(s.position).sqrt())
            .fold(f64::INFINITY, f64::min);
        if reach < clearance {
            Ok(())
        } else {
            Err(VoronoiError::SentinelGuarantee { reach, clearance })
        }
    }
}

fn strictly_inside(b: &Aabb, p: Point3) -> bool {
    p.x > b.min.x && p.x < b.max.x && p.y > b.min.y && p.y < b.max.y && p.z > b.min.z && p.z < b.max.z
}

/// Mesh vertices followed by 8 sentinels at the corners of `domain`
/// scaled 4x about its center.
pub fn make_bounded_site_set(mesh_vertices: &[Point3], domain: Aabb) -> Result<SiteSet, VoronoiError> {
    let mut sites: Vec<Site> = mesh_vertices
        .iter()
        .enumerate()
        .map(|(i, &p)| Site { position: p, kind: SiteKind::MeshVertex(i as u32) })
        .collect();
    if sites.is_empty() {
        return Err(VoronoiError::TooFewSites(0));
    }
    for corner in domain.scaled(SENTINEL_SCALE).corners() {
        sites.push(Site { position: corner, kind: SiteKind::Sentinel });
    }
    let ss = SiteSet { sites, domain };
    ss.check()?;
    Ok(ss)
}

/// Delaunay tetrahedralization of a site set plus the derived Voronoi data.
#[derive(Debug, Clone)]
pub struct VoronoiComplex {
    positions: Vec<Point3>,
    sentinel: Vec<bool>,
    tets: Vec<[u32; 4]>,
    neighbors: Vec<[u32; 4]>,
    circumcenters: Vec<Point3>,
    tet_offsets: Vec<u32>,
    site_tets: Vec<u32>,
    adj_offsets: Vec<u32>,
    adj: Vec<u32>,
    eps: f64,
}

pub fn build_delaunay(ss: &SiteSet) -> Result<VoronoiComplex, VoronoiError> {
    let positions = ss.positions();
    if positions.len() < 5 {
        return Err(VoronoiError::TooFewSites(positions.len()));
    }
    let sentinel: Vec<bool> = ss.sites().iter().map(Site::is_sentinel).collect();
    let hull: Vec<u32> = (0..positions.len() as u32).filter(|&i| sentinel[i as usize]).collect();
    let order: Vec<u32> = (0..positions.len() as u32).filter(|&i| !sentinel[i as usize]).collect();
    let t = tetrahedralize(&positions, &hull, &order)?;
    Ok(VoronoiComplex::assemble(positions, sentinel, t.tets, t.neighbors, ss.domain().diagonal() * CORNER_EPS))
}

fn csr(n: usize, pairs: impl Iterator<Item = (u32, u32)> + Clone) -> (Vec<u32>, Vec<u32>) {
    let mut offsets = vec![0u32; n + 1];
    for (a, _) in pairs.clone() {
        offsets[a as usize + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let mut fill = offsets.clone();
    let mut data = vec![0u32; offsets[n] as usize];
    for (a, b) in pairs {
        data[fill[a as usize] as usize] = b;
        fill[a as usize] += 1;
    }
    (offsets, data)
}

impl VoronoiComplex {
    fn assemble(
        positions: Vec<Point3>,
        sentinel: Vec<bool>,
        tets: Vec<[u32; 4]>,
        neighbors: Vec<[u32; 4]>,
        eps: f64,
    ) -> VoronoiComplex {
        let circumcenters = tets
            .iter()
            .map(|t| {
                let [a, b, c, d] = t.map(|i| positions[i as usize]);
                circumcenter_unchecked(a, b, c, d)
            })
            .collect();
        let n = positions.len();
        let (tet_offsets, site_tets) =
            csr(n, tets.iter().enumerate().flat_map(|(ti, t)| t.iter().map(move |&v| (v, ti as u32))));
        let mut edges: Vec<(u32, u32)> = tets
            .iter()
            .flat_map(|t| {
                let mut e = Vec::with_capacity(12);
                for i in 0..4 {
                    for j in 0..4 {
                        if i != j {
                            e.push((t[i], t[j]));
                        }
                    }
                }
                e
            })
            .collect();
        edges.sort_unstable();
        edges.dedup();
        let (adj_offsets, adj) = csr(n, edges.iter().copied());
        VoronoiComplex { positions, sentinel, tets, neighbors, circumcenters, tet_offsets, site_tets, adj_offsets, adj, eps }
    }

    pub fn site_count(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[Point3] {
        &self.positions
    }

    pub fn is_sentinel(&self, site: usize) -> bool {
        self.sentinel[site]
    }

    /// Delaunay tetras as positively oriented site-id quadruples.
    pub fn tets(&self) -> &[[u32; 4]] {
        &self.tets
    }

    /// `tet_neighbors()[t][i]` is the tetra across the face opposite
    /// vertex `i`, or `u32::MAX` on the sentinel hull.
    pub fn tet_neighbors(&self) -> &[[u32; 4]] {
        &self.neighbors
    }

    pub fn circumcenters(&self) -> &[Point3] {
        &self.circumcenters
    }

    pub fn incident_tets(&self, site: usize) -> &[u32] {
        &self.site_tets[self.tet_offsets[site] as usize..self.tet_offsets[site + 1] as usize]
    }

    /// Sites sharing a Delaunay edge with `site`, ascending.
    pub fn site_neighbors(&self, site: usize) -> &[u32] {
        &self.adj[self.adj_offsets[site] as usize..self.adj_offsets[site + 1] as usize]
    }

    /// Corners of the (sentinel-bounded) Voronoi cell of a real site:
    /// circumcenters of its incident tetras, merged within a small tolerance.
    pub fn cell_corners(&self, site: usize) -> Result<Vec<Point3>, VoronoiError> {
        if site >= self.positions.len() || self.sentinel[site] {
            return Err(VoronoiError::NotRealSite(site));
        }
        let mut pts: Vec<Point3> = self.incident_tets(site).iter().map(|&t| self.circumcenters[t as usize]).collect();
        assert!(!pts.is_empty(), "site {site} has no incident tetra");
        pts.sort_unstable_by(|a, b| a.x.total_cmp(&b.x));
        let mut kept: Vec<Point3> = Vec::with_capacity(pts.len());
        let eps2 = self.eps * self.eps;
        for p in pts {
            let dup = kept.iter().rev().take_while(|k| k.x >= p.x - self.eps).any(|k| k.distance_squared(p) <= eps2);
            if !dup {
                kept.push(p);
            }
        }
        Ok(kept)
    }

    /// Circumcenters inside `b`, with exact duplicates removed.
    ///
    /// Nearly coincident circumcenters are kept apart: a cluster of
    /// thousands of almost-identical Voronoi vertices is exactly the
    /// signal the density analysis looks for.
    pub fn voronoi_vertices_in(&self, b: &Aabb) -> Vec<Point3> {
        let mut v: Vec<Point3> = self.circumcenters.iter().copied().filter(|&c| b.contains(c)).collect();
        v.sort_unstable_by_key(|p| p.bits());
        v.dedup_by_key(|p| p.bits());
        v
    }

    /// Structural self-check: every tetra
    /// is positively oriented and adjacency is symmetric.
    pub fn check_topology(&self) -> bool {
        self.tets.iter().all(|t| {
            let [a, b, c, d] = t.map(|i| self.positions[i as usize]);
            orient3d(a, b, c, d) == Sign::Positive
        }) && self.neighbors.iter().enumerate().all(|(i, n)| {
            n.iter().all(|&o| o == NONE || self.neighbors[o as usize].contains(&(i as u32)))
        })
    }
}
