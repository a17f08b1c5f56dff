//! Brute-force ground truth: exhaustive closest-face scans, sampled exact
//! (compact) tables, and a randomized check of the vertex sphere union.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Point3};
use crate::mesh::TriangleMesh;
use crate::predicates::{orient3d, Sign};
use crate::query::QueryResult;
use crate::voronoi::{SiteSet, VoronoiComplex};

/// Linear scan over every face; ties go to the lowest face id.
pub fn brute_force_closest(mesh: &TriangleMesh, q: Point3) -> QueryResult {
    let mut best_d2 = f64::INFINITY;
    let mut best_face = u32::MAX;
    let mut closest = q;
    for f in 0..mesh.face_count() {
        let c = mesh.triangle(f).closest_point(q);
        let d2 = q.distance_squared(c);
        if d2 < best_d2 {
            best_d2 = d2;
            best_face = f as u32;
            closest = c;
        }
    }
    let n = mesh.face_count() as u32;
    QueryResult {
        distance: best_d2.sqrt(),
        closest,
        face: best_face,
        site: u32::MAX,
        candidates_visited: n,
        exact_evaluations: n,
        pruned: 0,
        fallback: false,
    }
}

fn nearest_site_linear(positions: &[Point3], q: Point3) -> usize {
    let mut best = 0;
    let mut best_d2 = f64::INFINITY;
    for (i, p) in positions.iter().enumerate() {
        let d2 = q.distance_squared(*p);
        if d2 < best_d2 {
            best_d2 = d2;
            best = i;
        }
    }
    best
}

/// Attempts per requested sample before giving up on a cell.
pub const SAMPLE_RETRY_FACTOR: usize = 5000;

/// Under-approximation of the exact closest-face set of `site`'s cell
/// within the query domain: rejection-samples the bounding box of the
/// cell corners (clipped to the domain) and collects brute-force closest
/// faces of the accepted points.
///
/// Candidates are pre-filtered against the site's Delaunay neighbors, and
/// every accepted sample is confirmed against all sites by linear scan.
pub fn sampled_compact_table(
    mesh: &TriangleMesh,
    ss: &SiteSet,
    vc: &VoronoiComplex,
    site: usize,
    n_samples: usize,
    seed: u64,
) -> Result<BTreeSet<u32>> {
    let corners = vc.cell_corners(site)?;
    let d = ss.domain();
    let b = Aabb::from_points(corners.iter().copied());
    let b = Aabb::new(b.min.max(d.min), b.max.min(d.max));
    if b.is_empty() {
        return Err(Error::Oracle(format!("cell of site {site} does not meet the query domain")));
    }
    let positions = vc.positions();
    let v = positions[site];
    let nbrs = vc.site_neighbors(site);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed ^ (site as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut out = BTreeSet::new();
    let mut accepted = 0;
    let mut tries = 0;
    let cap = n_samples.max(1) * SAMPLE_RETRY_FACTOR;
    while accepted < n_samples {
        if tries == cap {
            if accepted == 0 {
                return Err(Error::Oracle(format!("no samples accepted in the cell of site {site}")));
            }
            break;
        }
        tries += 1;
        let q = Point3::new(
            rng.gen_range(b.min.x..=b.max.x),
            rng.gen_range(b.min.y..=b.max.y),
            rng.gen_range(b.min.z..=b.max.z),
        );
        let dv = q.distance_squared(v);
        if nbrs.iter().any(|&n| q.distance_squared(positions[n as usize]) < dv) {
            continue;
        }
        if nearest_site_linear(positions, q) != site {
            continue;
        }
        accepted += 1;
        out.insert(brute_force_closest(mesh, q).face);
    }
    Ok(out)
}

/// Points of `pts` that are not inside (or on) a tetrahedron spanned by
/// four others, i.e. the vertices of their convex hull for points in
/// general position.
pub fn hull_vertices(pts: &[Point3]) -> Vec<Point3> {
    let n = pts.len();
    if n <= 4 {
        return pts.to_vec();
    }
    let inside = |p: Point3, t: [Point3; 4]| -> bool {
        let o = orient3d(t[0], t[1], t[2], t[3]);
        if o == Sign::Zero {
            return false;
        }
        (0..4).all(|i| {
            let mut s = t;
            s[i] = p;
            let so = orient3d(s[0], s[1], s[2], s[3]);
            so == o || so == Sign::Zero
        })
    };
    (0..n)
        .filter(|&i| {
            let others: Vec<Point3> = (0..n).filter(|&j| j != i).map(|j| pts[j]).collect();
            let m = others.len();
            for a in 0..m {
                for b in a + 1..m {
                    for c in b + 1..m {
                        for d in c + 1..m {
                            if inside(pts[i], [others[a], others[b], others[c], others[d]]) {
                                return false;
                            }
                        }
                    }
                }
            }
            true
        })
        .map(|i| pts[i])
        .collect()
}

/// Tolerance for the ball-membership test, relative to the problem scale.
pub const UNION_EPS: f64 = 1e-12;

/// One trial of the sphere-union identity: `x` a random convex combination
/// of `verts`, `p` a random point of `B(x, |x - v|)`; returns whether some
/// vertex ball `B(u, |u - v|)` contains `p`.
pub fn sphere_union_trial(verts: &[Point3], v: Point3, rng: &mut impl Rng) -> bool {
    // Dirichlet(1, ..., 1) weights
    let w: Vec<f64> = verts.iter().map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = w.iter().sum();
    let x = verts.iter().zip(&w).fold(Point3::ZERO, |acc, (&u, &wi)| acc + u * (wi / total));
    let r = x.distance(v);
    let dir = loop {
        let d = Point3::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
        let l = d.norm();
        if l > 1e-3 && l <= 1.0 {
            break d / l;
        }
    };
    let p = x + dir * (r * rng.gen::<f64>().cbrt());
    let scale = verts.iter().map(|u| u.distance(v)).fold(r, f64::max).max(1.0);
    verts.iter().any(|&u| p.distance(u) <= u.distance(v) + UNION_EPS * scale)
}

/// Runs `trials` random polytopes (4 to 12 random points, reduced to
/// their hull vertices) and returns the number of violations.
pub fn verify_sphere_union(trials: usize, seed: u64) -> usize {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut violations = 0;
    for _ in 0..trials {
        let n = rng.gen_range(4..=12);
        let pts: Vec<Point3> = (0..n)
            .map(|_| Point3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let verts = hull_vertices(&pts);
        let v = Point3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        if !sphere_union_trial(&verts, v, &mut rng) {
            violations += 1;
        }
    }
    violations
}
