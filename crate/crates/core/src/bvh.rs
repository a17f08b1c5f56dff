//! Axis-aligned bounding volume hierarchy over mesh triangles.
//!
//! Serves two masters: closed-ball sphere enumeration (the interference
//! backend for table construction) and exact closest-point queries (the
//! fallback path and the projection used for auxiliary sites).

use crate::geometry::{Aabb, Point3, Sphere, Triangle3};
use crate::mesh::TriangleMesh;

pub const DEFAULT_LEAF_SIZE: usize = 4;
const MAX_DEPTH: usize = 64;
const SAH_BINS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitStrategy {
    /// Median of centroids along the longest axis.
    #[default]
    Median,
    /// Binned surface-area heuristic.
    Sah,
}

#[derive(Debug, Clone, Copy)]
pub struct BvhOptions {
    pub leaf_size: usize,
    pub split: SplitStrategy,
}

impl Default for BvhOptions {
    fn default() -> Self {
        Self {
            leaf_size: DEFAULT_LEAF_SIZE,
            split: SplitStrategy::Median,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    aabb: Aabb,
    /// Range into `order` covered by this subtree.
    start: u32,
    end: u32,
    /// Index of the left child; the right child follows it. 0 for leaves.
    left: u32,
}

impl Node {
    #[inline]
    fn is_leaf(&self) -> bool {
        self.left == 0
    }
}

/// Closest-point answer from the BVH, the oracle, or the table engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestHit {
    pub distance: f64,
    pub closest: Point3,
    pub face: u32,
}

#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<Node>,
    /// Face ids in leaf order.
    order: Vec<u32>,
    /// Triangles in leaf order.
    tris: Vec<Triangle3>,
    /// Bounding spheres of `tris`, for cheap accept/reject in ball queries.
    bounds: Vec<Sphere>,
    leaf_size: usize,
    face_count: usize,
}

/// Reusable scratch state for [`Bvh::sphere_union`].
#[derive(Debug, Default)]
pub struct UnionScratch {
    /// Ball indices still active at each pending node, stored as segments.
    active: Vec<u32>,
    /// (node, segment start, segment end)
    stack: Vec<(u32, u32, u32)>,
    hits: Vec<u32>,
}

impl Bvh {
    pub fn build(mesh: &TriangleMesh) -> Bvh {
        Self::build_with(mesh, BvhOptions::default())
    }

    pub fn build_with(mesh: &TriangleMesh, opts: BvhOptions) -> Bvh {
        let n = mesh.face_count();
        assert!(n > 0, "BVH over an empty mesh");
        let leaf_size = opts.leaf_size.max(1);
        let tri: Vec<Triangle3> = (0..n).map(|f| mesh.triangle(f)).collect();
        let boxes: Vec<Aabb> = tri.iter().map(|t| t.aabb()).collect();
        let cents: Vec<Point3> = tri.iter().map(|t| t.centroid()).collect();
        let mut order: Vec<u32> = (0..n as u32).collect();
        let mut nodes = vec![Node {
            aabb: Aabb::empty(),
            start: 0,
            end: n as u32,
            left: 0,
        }];
        // (node index, depth)
        let mut work = vec![(0usize, 0usize)];
        while let Some((ni, depth)) = work.pop() {
            let (s, e) = (nodes[ni].start as usize, nodes[ni].end as usize);
            let mut bb = Aabb::empty();
            let mut cb = Aabb::empty();
            for &f in &order[s..e] {
                bb = bb.union(&boxes[f as usize]);
                cb.grow(cents[f as usize]);
            }
            nodes[ni].aabb = bb;
            if e - s <= leaf_size {
                continue;
            }
            let use_sah = opts.split == SplitStrategy::Sah && depth + 16 < MAX_DEPTH;
            let mid = if use_sah {
                sah_partition(&mut order[s..e], &boxes, &cents, &cb).map(|m| s + m)
            } else {
                None
            }
            .unwrap_or_else(|| {
                let axis = cb.longest_axis();
                let m = (e - s) / 2;
                order[s..e].select_nth_unstable_by(m, |&a, &b| {
                    cents[a as usize][axis]
                        .total_cmp(&cents[b as usize][axis])
                        .then(a.cmp(&b))
                });
                s + m
            });
            let left = nodes.len();
            nodes.push(Node { aabb: Aabb::empty(), start: s as u32, end: mid as u32, left: 0 });
            nodes.push(Node { aabb: Aabb::empty(), start: mid as u32, end: e as u32, left: 0 });
            nodes[ni].left = left as u32;
            work.push((left + 1, depth + 1));
            work.push((left, depth + 1));
        }
        let tris = order.iter().map(|&f| tri[f as usize]).collect();
        let bounds = order.iter().map(|&f| mesh.spheres()[f as usize]).collect();
        Bvh {
            nodes,
            order,
            tris,
            bounds,
            leaf_size,
            face_count: n,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_size(&self) -> usize {
        self.leaf_size
    }

    pub fn face_count(&self) -> usize {
        self.face_count
    }

    pub fn depth(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(0usize, 1usize)];
        while let Some((i, d)) = stack.pop() {
            best = best.max(d);
            let n = &self.nodes[i];
            if !n.is_leaf() {
                stack.push((n.left as usize, d + 1));
                stack.push((n.left as usize + 1, d + 1));
            }
        }
        best
    }

    /// Closed-ball test for the triangle at leaf position `k`. The bounding
    /// sphere settles clear cases; a relative margin keeps those decisions
    /// consistent with the exact closest-point test.
    #[inline]
    fn ball_touches(&self, k: usize, s: &Sphere, r2: f64) -> bool {
        let b = &self.bounds[k];
        let dc = s.center.distance(b.center);
        let margin = 1e-12 * (dc + s.radius + b.radius);
        if dc - b.radius > s.radius + margin {
            return false;
        }
        if dc + b.radius < s.radius - margin {
            return true;
        }
        let t = &self.tris[k];
        s.center.distance_squared(t.closest_point(s.center)) <= r2
    }

    /// All faces within the closed ball, sorted by id.
    pub fn sphere_query(&self, s: &Sphere) -> Vec<u32> {
        let r2 = s.radius * s.radius;
        let mut out = Vec::new();
        let mut stack = vec![0u32];
        while let Some(i) = stack.pop() {
            let n = &self.nodes[i as usize];
            if n.aabb.distance_squared_to(s.center) > r2 {
                continue;
            }
            if n.is_leaf() {
                for k in n.start..n.end {
                    if self.ball_touches(k as usize, s, r2) {
                        out.push(self.order[k as usize]);
                    }
                }
            } else {
                stack.push(n.left);
                stack.push(n.left + 1);
            }
        }
        out.sort_unstable();
        out
    }

    /// Union of closed-ball queries, sorted by id.
    ///
    /// One traversal serves all balls: each node carries the subset of
    /// balls that reach its box, so nodes and triangles are visited at most
    /// once however much the balls overlap. A subtree whose box lies inside
    /// one ball is emitted without per-triangle tests.
    pub fn sphere_union(&self, spheres: &[Sphere], scratch: &mut UnionScratch) -> Vec<u32> {
        scratch.active.clear();
        scratch.stack.clear();
        scratch.hits.clear();
        let root = &self.nodes[0];
        for (i, s) in spheres.iter().enumerate() {
            if root.aabb.distance_squared_to(s.center) <= s.radius * s.radius {
                scratch.active.push(i as u32);
            }
        }
        if !scratch.active.is_empty() {
            scratch.stack.push((0, 0, scratch.active.len() as u32));
        }
        while let Some((ni, lo, hi)) = scratch.stack.pop() {
            let n = &self.nodes[ni as usize];
            let covered = (lo..hi).any(|j| {
                let s = &spheres[scratch.active[j as usize] as usize];
                n.aabb.max_distance_squared_to(s.center) <= s.radius * s.radius
            });
            if covered {
                scratch.hits.extend_from_slice(&self.order[n.start as usize..n.end as usize]);
                continue;
            }
            if n.is_leaf() {
                for k in n.start..n.end {
                    let hit = (lo..hi).any(|j| {
                        let s = &spheres[scratch.active[j as usize] as usize];
                        self.ball_touches(k as usize, s, s.radius * s.radius)
                    });
                    if hit {
                        scratch.hits.push(self.order[k as usize]);
                    }
                }
                continue;
            }
            for child in [n.left + 1, n.left] {
                let b = &self.nodes[child as usize].aabb;
                let start = scratch.active.len() as u32;
                for j in lo..hi {
                    let si = scratch.active[j as usize];
                    let s = &spheres[si as usize];
                    if b.distance_squared_to(s.center) <= s.radius * s.radius {
                        scratch.active.push(si);
                    }
                }
                let end = scratch.active.len() as u32;
                if end > start {
                    scratch.stack.push((child, start, end));
                }
            }
        }
        let mut out = scratch.hits.clone();
        out.sort_unstable();
        out
    }

    /// Exact closest point on the mesh; ties go to the lowest face id.
    pub fn closest_point(&self, q: Point3) -> ClosestHit {
        let mut best_d2 = f64::INFINITY;
        let mut best = ClosestHit {
            distance: f64::INFINITY,
            closest: q,
            face: u32::MAX,
        };
        let mut stack: Vec<(u32, f64)> = Vec::with_capacity(64);
        stack.push((0, self.nodes[0].aabb.distance_squared_to(q)));
        while let Some((i, lb)) = stack.pop() {
            if lb > best_d2 {
                continue;
            }
            let n = &self.nodes[i as usize];
            if n.is_leaf() {
                for k in n.start..n.end {
                    let t = &self.tris[k as usize];
                    let c = t.closest_point(q);
                    let d2 = q.distance_squared(c);
                    let f = self.order[k as usize];
                    if d2 < best_d2 || (d2 == best_d2 && f < best.face) {
                        best_d2 = d2;
                        best.closest = c;
                        best.face = f;
                    }
                }
            } else {
                let (l, r) = (n.left, n.left + 1);
                let dl = self.nodes[l as usize].aabb.distance_squared_to(q);
                let dr = self.nodes[r as usize].aabb.distance_squared_to(q);
                // nearer child on top of the stack
                if dl <= dr {
                    stack.push((r, dr));
                    stack.push((l, dl));
                } else {
                    stack.push((l, dl));
                    stack.push((r, dr));
                }
            }
        }
        best.distance = best_d2.sqrt();
        best
    }

    #[cfg(test)]
    fn audit(&self) -> Result<(), String> {
        let mut seen = vec![0u32; self.face_count];
        for (i, n) in self.nodes.iter().enumerate() {
            for k in n.start..n.end {
                if !n.aabb.contains_box(&self.tris[k as usize].aabb()) {
                    return Err(format!("node {i} does not contain face {}", self.order[k as usize]));
                }
            }
            if n.is_leaf() {
                for k in n.start..n.end {
                    seen[self.order[k as usize] as usize] += 1;
                }
            } else {
                let (l, r) = (&self.nodes[n.left as usize], &self.nodes[n.left as usize + 1]);
                if l.start != n.start || l.end != r.start || r.end != n.end {
                    return Err(format!("node {i} children do not partition its range"));
                }
            }
        }
        if seen.iter().any(|&c| c != 1) {
            return Err("face not in exactly one leaf".into());
        }
        Ok(())
    }
}

/// Binned SAH split of `ids`; returns the split offset or `None` when no
/// bin boundary separates the centroids.
fn sah_partition(ids: &mut [u32], boxes: &[Aabb], cents: &[Point3], cb: &Aabb) -> Option<usize> {
    let mut best: Option<(f64, usize, f64)> = None;
    for axis in 0..3 {
        let lo = cb.min[axis];
        let ext = cb.max[axis] - lo;
        if !(ext > 0.0) {
            continue;
        }
        let bin_of = |c: f64| (((c - lo) / ext * SAH_BINS as f64) as usize).min(SAH_BINS - 1);
        let mut bins = [(Aabb::empty(), 0usize); SAH_BINS];
        for &f in ids.iter() {
            let b = bin_of(cents[f as usize][axis]);
            bins[b].0 = bins[b].0.union(&boxes[f as usize]);
            bins[b].1 += 1;
        }
        for split in 1..SAH_BINS {
            let (mut lb, mut ln) = (Aabb::empty(), 0);
            let (mut rb, mut rn) = (Aabb::empty(), 0);
            for (b, &(bb, c)) in bins.iter().enumerate() {
                if b < split {
                    lb = lb.union(&bb);
                    ln += c;
                } else {
                    rb = rb.union(&bb);
                    rn += c;
                }
            }
            if ln == 0 || rn == 0 {
                continue;
            }
            let cost = lb.surface_area() * ln as f64 + rb.surface_area() * rn as f64;
            if best.is_none_or(|(c, _, _)| cost < c) {
                let boundary = lo + ext * split as f64 / SAH_BINS as f64;
                best = Some((cost, axis, boundary));
            }
        }
    }
    let (_, axis, boundary) = best?;
    let bin_lo = cb.min[axis];
    let ext = cb.max[axis] - bin_lo;
    let bin_of = |c: f64| (((c - bin_lo) / ext * SAH_BINS as f64) as usize).min(SAH_BINS - 1);
    let split_bin = bin_of(boundary).max(1);
    // stable partition keeps the result deterministic
    let (mut left, mut right): (Vec<u32>, Vec<u32>) =
        ids.iter().partition(|&&f| bin_of(cents[f as usize][axis]) < split_bin);
    if left.is_empty() || right.is_empty() {
        return None;
    }
    let m = left.len();
    left.append(&mut right);
    ids.copy_from_slice(&left);
    Some(m)
}
