//! Exact nearest-site search. Ties go to the lowest site id.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Point3};
use crate::voronoi::VoronoiComplex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum NnsStrategy {
    #[default]
    KdTree,
    DelaunayWalk,
}

#[inline]
fn better(d2: f64, id: u32, best_d2: f64, best: u32) -> bool {
    d2 < best_d2 || (d2 == best_d2 && id < best)
}

/// Median-split kd-tree stored implicitly: the node of range `[lo, hi)`
/// sits at `mid = (lo + hi) / 2`, children cover `[lo, mid)` and `(mid, hi)`.
/// Each node keeps the bounding box of its range for pruning.
#[derive(Debug, Clone)]
pub struct KdTree {
    pts: Vec<Point3>,
    ids: Vec<u32>,
    axis: Vec<u8>,
    bounds: Vec<Aabb>,
}

impl KdTree {
    pub fn build(points: &[Point3]) -> KdTree {
        let mut ids: Vec<u32> = (0..points.len() as u32).collect();
        let mut axis = vec![0u8; points.len()];
        let mut bounds = vec![Aabb::empty(); points.len()];
        let mut stack = vec![(0usize, points.len())];
        while let Some((lo, hi)) = stack.pop() {
            if hi <= lo {
                continue;
            }
            let mut bmin = Point3::splat(f64::INFINITY);
            let mut bmax = Point3::splat(f64::NEG_INFINITY);
            for &i in &ids[lo..hi] {
                bmin = bmin.min(points[i as usize]);
                bmax = bmax.max(points[i as usize]);
            }
            let e = bmax - bmin;
            let a = if e.x >= e.y && e.x >= e.z { 0 } else if e.y >= e.z { 1 } else { 2 };
            let mid = (lo + hi) / 2;
            ids[lo..hi].select_nth_unstable_by(mid - lo, |&p, &q| {
                points[p as usize][a].total_cmp(&points[q as usize][a]).then(p.cmp(&q))
            });
            axis[mid] = a as u8;
            bounds[mid] = Aabb::new(bmin, bmax);
            stack.push((lo, mid));
            stack.push((mid + 1, hi));
        }
        let pts = ids.iter().map(|&i| points[i as usize]).collect();
        KdTree { pts, ids, axis, bounds }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn nearest(&self, q: Point3) -> u32 {
        let mut best = u32::MAX;
        let mut best_d2 = f64::INFINITY;
        let mut stack: Vec<(usize, usize, f64)> = Vec::with_capacity(64);
        if !self.ids.is_empty() {
            stack.push((0, self.ids.len(), 0.0));
        }
        while let Some((lo, hi, box_d2)) = stack.pop() {
            if box_d2 > best_d2 {
                continue;
            }
            let mid = (lo + hi) / 2;
            let p = self.pts[mid];
            let d2 = q.distance_squared(p);
            if better(d2, self.ids[mid], best_d2, best) {
                best_d2 = d2;
                best = self.ids[mid];
            }
            let a = self.axis[mid] as usize;
            let (near, far) = if q[a] < p[a] { ((lo, mid), (mid + 1, hi)) } else { ((mid + 1, hi), (lo, mid)) };
            for (l, h) in [far, near] {
                if h > l {
                    let d = self.bounds[(l + h) / 2].distance_squared_to(q);
                    if d <= best_d2 {
                        stack.push((l, h, d));
                    }
                }
            }
        }
        best
    }
}

/// Greedy descent over the Delaunay graph of the sites.
#[derive(Debug, Clone)]
pub struct DelaunayWalk {
    pts: Vec<Point3>,
    offsets: Vec<u32>,
    adj: Vec<u32>,
}

impl DelaunayWalk {
    pub fn build(vc: &VoronoiComplex) -> DelaunayWalk {
        let n = vc.site_count();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut adj = Vec::new();
        offsets.push(0);
        for s in 0..n {
            adj.extend_from_slice(vc.site_neighbors(s));
            offsets.push(adj.len() as u32);
        }
        DelaunayWalk { pts: vc.positions().to_vec(), offsets, adj }
    }

    fn neighbors(&self, s: u32) -> &[u32] {
        &self.adj[self.offsets[s as usize] as usize..self.offsets[s as usize + 1] as usize]
    }

    /// Nearest site, starting the descent at `start`.
    pub fn nearest_from(&self, q: Point3, start: u32) -> u32 {
        let mut cur = start;
        let mut cur_d2 = q.distance_squared(self.pts[cur as usize]);
        loop {
            let mut next = cur;
            let mut next_d2 = cur_d2;
            for &n in self.neighbors(cur) {
                let d2 = q.distance_squared(self.pts[n as usize]);
                if d2 < next_d2 {
                    next = n;
                    next_d2 = d2;
                }
            }
            if next == cur {
                break;
            }
            cur = next;
            cur_d2 = next_d2;
        }
        // sites tied at the minimum lie on one empty sphere around q and
        // are connected through Delaunay edges
        let mut best = cur;
        let mut stack = vec![cur];
        let mut seen = vec![cur];
        while let Some(s) = stack.pop() {
            for &n in self.neighbors(s) {
                if !seen.contains(&n) && q.distance_squared(self.pts[n as usize]) == cur_d2 {
                    seen.push(n);
                    stack.push(n);
                    best = best.min(n);
                }
            }
        }
        best
    }
}

#[derive(Debug, Clone)]
pub enum NearestSiteIndex {
    KdTree(KdTree),
    DelaunayWalk(DelaunayWalk),
}

impl NearestSiteIndex {
    /// `vc` is required for the walk strategy.
    pub fn build(points: &[Point3], strategy: NnsStrategy, vc: Option<&VoronoiComplex>) -> Result<NearestSiteIndex> {
        if points.is_empty() {
            return Err(Error::EmptySiteSet);
        }
        Ok(match strategy {
            NnsStrategy::KdTree => NearestSiteIndex::KdTree(KdTree::build(points)),
            NnsStrategy::DelaunayWalk => {
                let vc = vc.ok_or_else(|| Error::Config("the walk strategy needs a Delaunay complex".into()))?;
                NearestSiteIndex::DelaunayWalk(DelaunayWalk::build(vc))
            }
        })
    }

    pub fn strategy(&self) -> NnsStrategy {
        match self {
            NearestSiteIndex::KdTree(_) => NnsStrategy::KdTree,
            NearestSiteIndex::DelaunayWalk(_) => NnsStrategy::DelaunayWalk,
        }
    }

    /// Nearest site. `hint` is the walk's warm-start site and is updated
    /// to the answer; the kd-tree ignores it.
    pub fn nearest(&self, q: Point3, hint: &mut u32) -> u32 {
        let s = match self {
            NearestSiteIndex::KdTree(t) => t.nearest(q),
            NearestSiteIndex::DelaunayWalk(w) => w.nearest_from(q, *hint),
        };
        *hint = s;
        s
    }
}
