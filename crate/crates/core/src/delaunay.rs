//! Incremental Bowyer-Watson tetrahedralization.
//!
//! The eight sentinel sites form the convex hull of every site set this
//! crate builds, so they are triangulated first (by brute force, using the
//! same perturbed predicate as the incremental phase) and every later site
//! is inserted strictly inside the hull. No infinite vertex is needed.

use std::collections::HashMap;

use crate::error::VoronoiError;
use crate::geometry::Point3;
use crate::predicates::{in_sphere, orient3d, Sign};

pub(crate) const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Tet {
    v: [u32; 4],
    /// `n[i]` is the neighbor across the face opposite `v[i]`.
    n: [u32; 4],
    alive: bool,
}

/// Finished tetrahedralization: positively oriented tetras with adjacency.
#[derive(Debug, Clone)]
pub(crate) struct Tetrahedralization {
    pub tets: Vec<[u32; 4]>,
    pub neighbors: Vec<[u32; 4]>,
}

struct Builder<'a> {
    pts: &'a [Point3],
    tets: Vec<Tet>,
    free: Vec<u32>,
    /// Per-tet visit stamps for the cavity search.
    stamp: Vec<u32>,
    in_cavity: Vec<bool>,
    epoch: u32,
    last: u32,
    rng: u64,
    cavity: Vec<u32>,
    boundary: Vec<(u32, usize, u32)>,
    edge_link: HashMap<(u32, u32), (u32, usize)>,
}

impl<'a> Builder<'a> {
    fn next_rand(&mut self) -> u64 {
        // xorshift64*, deterministic per build
        self.rng ^= self.rng >> 12;
        self.rng ^= self.rng << 25;
        self.rng ^= self.rng >> 27;
        self.rng.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    #[inline]
    fn p(&self, i: u32) -> Point3 {
        self.pts[i as usize]
    }

    fn alloc(&mut self, t: Tet) -> u32 {
        if let Some(i) = self.free.pop() {
            self.tets[i as usize] = t;
            i
        } else {
            self.tets.push(t);
            self.stamp.push(0);
            self.in_cavity.push(false);
            (self.tets.len() - 1) as u32
        }
    }

    /// `p` relative to face `i` of tet `t`: negative when beyond the face.
    #[inline]
    fn face_side(&self, t: u32, i: usize, p: Point3) -> Sign {
        let v = self.tets[t as usize].v;
        let mut q = [self.p(v[0]), self.p(v[1]), self.p(v[2]), self.p(v[3])];
        q[i] = p;
        orient3d(q[0], q[1], q[2], q[3])
    }

    #[inline]
    fn conflicts(&self, t: u32, pi: u32) -> bool {
        let v = self.tets[t as usize].v;
        let pts = [self.p(v[0]), self.p(v[1]), self.p(v[2]), self.p(v[3]), self.p(pi)];
        let ids = [v[0] as usize, v[1] as usize, v[2] as usize, v[3] as usize, pi as usize];
        in_sphere(pts, ids) == Sign::Positive
    }

    /// Remembering stochastic walk to a tet whose closure contains `p`.
    fn locate(&mut self, p: Point3, site: u32) -> Result<u32, VoronoiError> {
        let mut t = self.last;
        let mut prev = NONE;
        let cap = 4 * self.tets.len() + 64;
        for _ in 0..cap {
            let off = (self.next_rand() % 4) as usize;
            let mut moved = false;
            for k in 0..4 {
                let i = (off + k) % 4;
                let nb = self.tets[t as usize].n[i];
                if nb == prev {
                    continue;
                }
                if self.face_side(t, i, p) == Sign::Negative {
                    if nb == NONE {
                        return Err(VoronoiError::OutsideHull(site as usize));
                    }
                    prev = t;
                    t = nb;
                    moved = true;
                    break;
                }
            }
            if !moved {
                // the skipped face may still separate us from p
                if prev != NONE {
                    let back = self.tets[t as usize].n.iter().position(|&x| x == prev).unwrap();
                    if self.face_side(t, back, p) == Sign::Negative {
                        prev = NONE;
                        continue;
                    }
                }
                return Ok(t);
            }
        }
        // walk cycled (should not happen on a Delaunay mesh); scan instead
        (0..self.tets.len() as u32)
            .find(|&t| self.tets[t as usize].alive && (0..4).all(|i| self.face_side(t, i, p) != Sign::Negative))
            .ok_or(VoronoiError::LocateFailed(site as usize))
    }

    fn insert(&mut self, pi: u32) -> Result<(), VoronoiError> {
        let p = self.p(pi);
        let start = self.locate(p, pi)?;
        if !self.conflicts(start, pi) {
            return Err(VoronoiError::LocateFailed(pi as usize));
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        let epoch = self.epoch;
        self.cavity.clear();
        self.boundary.clear();
        self.stamp[start as usize] = epoch;
        self.in_cavity[start as usize] = true;
        self.cavity.push(start);
        let mut head = 0;
        while head < self.cavity.len() {
            let t = self.cavity[head];
            head += 1;
            for i in 0..4 {
                let nb = self.tets[t as usize].n[i];
                if nb == NONE {
                    self.boundary.push((t, i, nb));
                    continue;
                }
                if self.stamp[nb as usize] != epoch {
                    self.stamp[nb as usize] = epoch;
                    let c = self.conflicts(nb, pi);
                    self.in_cavity[nb as usize] = c;
                    if c {
                        self.cavity.push(nb);
                        continue;
                    }
                }
                if !self.in_cavity[nb as usize] {
                    self.boundary.push((t, i, nb));
                }
            }
        }

        self.edge_link.clear();
        let boundary = std::mem::take(&mut self.boundary);
        let mut new_tets = Vec::with_capacity(boundary.len());
        for &(t, i, nb) in &boundary {
            let mut v = self.tets[t as usize].v;
            v[i] = pi;
            let mut n = [NONE; 4];
            n[i] = nb;
            let nt = self.alloc(Tet { v, n, alive: true });
            debug_assert_eq!(
                orient3d(self.p(v[0]), self.p(v[1]), self.p(v[2]), self.p(v[3])),
                Sign::Positive
            );
            if nb != NONE {
                let slot = self.tets[nb as usize].n.iter().position(|&x| x == t).unwrap();
                self.tets[nb as usize].n[slot] = nt;
            }
            for j in 0..4 {
                if j == i {
                    continue;
                }
                let mut e = [0u32; 2];
                let mut k = 0;
                for (m, &vm) in v.iter().enumerate() {
                    if m != i && m != j {
                        e[k] = vm;
                        k += 1;
                    }
                }
                let key = (e[0].min(e[1]), e[0].max(e[1]));
                if let Some((other, oj)) = self.edge_link.remove(&key) {
                    self.tets[nt as usize].n[j] = other;
                    self.tets[other as usize].n[oj] = nt;
                } else {
                    self.edge_link.insert(key, (nt, j));
                }
            }
            new_tets.push(nt);
        }
        debug_assert!(self.edge_link.is_empty(), "cavity boundary is not closed");
        self.boundary = boundary;
        // free only after linking so slots are not reused mid-update
        for k in 0..self.cavity.len() {
            let t = self.cavity[k];
            self.tets[t as usize].alive = false;
            self.in_cavity[t as usize] = false;
            self.free.push(t);
        }
        self.last = new_tets[0];
        Ok(())
    }
}

/// Brute-force perturbed-Delaunay tetrahedralization of a handful of points.
fn brute_force_tets(pts: &[Point3], ids: &[u32]) -> Vec<[u32; 4]> {
    let n = ids.len();
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                for d in c + 1..n {
                    let mut t = [ids[a], ids[b], ids[c], ids[d]];
                    let o = orient3d(pts[t[0] as usize], pts[t[1] as usize], pts[t[2] as usize], pts[t[3] as usize]);
                    match o {
                        Sign::Zero => continue,
                        Sign::Negative => t.swap(2, 3),
                        Sign::Positive => {}
                    }
                    let empty = ids.iter().filter(|e| !t.contains(e)).all(|&e| {
                        let q = [pts[t[0] as usize], pts[t[1] as usize], pts[t[2] as usize], pts[t[3] as usize], pts[e as usize]];
                        in_sphere(q, [t[0] as usize, t[1] as usize, t[2] as usize, t[3] as usize, e as usize]) != Sign::Positive
                    });
                    if empty {
                        out.push(t);
                    }
                }
            }
        }
    }
    out
}

/// Tetrahedralizes `pts`. `hull` lists the sites spanning the convex hull
/// (the sentinels); `order` lists every other site in insertion order.
pub(crate) fn tetrahedralize(pts: &[Point3], hull: &[u32], order: &[u32]) -> Result<Tetrahedralization, VoronoiError> {
    let init = brute_force_tets(pts, hull);
    if init.is_empty() {
        return Err(VoronoiError::Coplanar);
    }
    let mut b = Builder {
        pts,
        tets: Vec::with_capacity(7 * pts.len()),
        free: Vec::new(),
        stamp: Vec::new(),
        in_cavity: Vec::new(),
        epoch: 0,
        last: 0,
        rng: 0x9E37_79B9_7F4A_7C15,
        cavity: Vec::new(),
        boundary: Vec::new(),
        edge_link: HashMap::new(),
    };
    let mut faces: HashMap<[u32; 3], (u32, usize)> = HashMap::new();
    for v in init {
        let t = b.alloc(Tet { v, n: [NONE; 4], alive: true });
        for i in 0..4 {
            let mut key = [0u32; 3];
            let mut k = 0;
            for (m, &vm) in v.iter().enumerate() {
                if m != i {
                    key[k] = vm;
                    k += 1;
                }
            }
            key.sort_unstable();
            if let Some((o, oi)) = faces.remove(&key) {
                b.tets[t as usize].n[i] = o;
                b.tets[o as usize].n[oi] = t;
            } else {
                faces.insert(key, (t, i));
            }
        }
    }
    for &s in order {
        b.insert(s)?;
    }

    let mut remap = vec![NONE; b.tets.len()];
    let mut tets = Vec::new();
    for (i, t) in b.tets.iter().enumerate() {
        if t.alive {
            remap[i] = tets.len() as u32;
            tets.push(t.v);
        }
    }
    let neighbors = b
        .tets
        .iter()
        .filter(|t| t.alive)
        .map(|t| t.n.map(|x| if x == NONE { NONE } else { remap[x as usize] }))
        .collect();
    Ok(Tetrahedralization { tets, neighbors })
}
