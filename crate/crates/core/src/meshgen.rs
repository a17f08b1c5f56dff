//! Procedural benchmark meshes: single triangle, tetrahedron, icospheres
//! and a lumpy organic blob.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::geometry::Point3;
use crate::mesh::TriangleMesh;

pub fn single_triangle() -> TriangleMesh {
    TriangleMesh::from_parts(
        vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        ],
        vec![[0, 1, 2]],
    )
}

/// Regular tetrahedron surface with the given edge length, outward winding.
pub fn regular_tetrahedron(edge: f64) -> TriangleMesh {
    let s = edge / (2.0 * 2f64.sqrt());
    let v = vec![
        Point3::new(s, s, s),
        Point3::new(s, -s, -s),
        Point3::new(-s, s, -s),
        Point3::new(-s, -s, s),
    ];
    TriangleMesh::from_parts(v, vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])
}

/// Axis-aligned cube surface `[lo, hi]^3`, 12 triangles.
pub fn cube(lo: f64, hi: f64) -> TriangleMesh {
    let v: Vec<Point3> = (0..8)
        .map(|i| {
            Point3::new(
                if i & 1 == 0 { lo } else { hi },
                if i & 2 == 0 { lo } else { hi },
                if i & 4 == 0 { lo } else { hi },
            )
        })
        .collect();
    let quads = [[0, 2, 3, 1], [4, 5, 7, 6], [0, 1, 5, 4], [2, 6, 7, 3], [0, 4, 6, 2], [1, 3, 7, 5]];
    let faces = quads
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect();
    TriangleMesh::from_parts(v, faces)
}

/// Unit icosphere by repeated 4-to-1 subdivision of an icosahedron:
/// `20 * 4^level` faces, `10 * 4^level + 2` vertices.
pub fn icosphere(level: u32) -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Point3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Point3::new(x, y, z).normalized())
    .collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut mid: HashMap<(u32, u32), u32> = HashMap::new();
        let mut midpoint = |a: u32, b: u32, verts: &mut Vec<Point3>| -> u32 {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                let p = ((verts[a as usize] + verts[b as usize]) * 0.5).normalized();
                verts.push(p);
                (verts.len() - 1) as u32
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    TriangleMesh::from_parts(verts, faces)
}

/// Closed, irregular "potato" surface.
///
/// A cube-sphere grid with `n x n` quads per side, pushed radially by
/// random lobes of varying width plus two octaves of ripples, with every
/// vertex jittered along the surface so that no local configuration stays
/// regular. The surface is star-shaped, hence closed and embedded. Yields
/// `12 * n^2` faces.
pub fn organic_blob(n: usize, seed: u64) -> TriangleMesh {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let unit = |rng: &mut Xoshiro256PlusPlus| loop {
        let p = Point3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let l = p.norm();
        if l > 0.1 && l <= 1.0 {
            break p / l;
        }
    };
    let lobes: Vec<(Point3, f64, f64)> =
        (0..14).map(|_| (unit(&mut rng), rng.gen_range(0.1..0.5), rng.gen_range(3.0..14.0))).collect();
    let ripples: Vec<(Point3, f64, f64)> =
        (0..6).map(|i| (unit(&mut rng), if i < 3 { 5.0 } else { 9.0 }, rng.gen_range(0.0..6.3))).collect();
    let radius = |d: Point3| -> f64 {
        let mut r = 1.0;
        for &(c, amp, sharp) in &lobes {
            r += amp * (sharp * (d.dot(c) - 1.0)).exp();
        }
        let ripple: f64 = ripples.iter().map(|&(a, f, ph)| (f * d.dot(a) + ph).sin()).sum();
        r * (1.0 + 0.02 * ripple)
    };

    // shared cube-grid vertices, keyed by integer lattice coordinates
    let mut index: HashMap<(i64, i64, i64), u32> = HashMap::new();
    let mut lattice: Vec<(i64, i64, i64)> = Vec::new();
    let mut faces = Vec::with_capacity(12 * n * n);
    let n_i = n as i64;
    let mut id = |k: (i64, i64, i64)| -> u32 {
        *index.entry(k).or_insert_with(|| {
            lattice.push(k);
            (lattice.len() - 1) as u32
        })
    };
    // each face: (fixed axis, sign)
    for axis in 0..3 {
        for &side in &[-n_i, n_i] {
            for i in 0..n_i {
                for j in 0..n_i {
                    let at = |u: i64, v: i64| -> (i64, i64, i64) {
                        let (a, b) = (-n_i + 2 * u, -n_i + 2 * v);
                        match axis {
                            0 => (side, a, b),
                            1 => (b, side, a),
                            _ => (a, b, side),
                        }
                    };
                    let q = [id(at(i, j)), id(at(i + 1, j)), id(at(i + 1, j + 1)), id(at(i, j + 1))];
                    let (q0, q1, q2, q3) = if side > 0 { (q[0], q[1], q[2], q[3]) } else { (q[0], q[3], q[2], q[1]) };
                    // alternate diagonals to avoid a directional bias
                    if (i + j) % 2 == 0 {
                        faces.push([q0, q1, q2]);
                        faces.push([q0, q2, q3]);
                    } else {
                        faces.push([q0, q1, q3]);
                        faces.push([q1, q2, q3]);
                    }
                }
            }
        }
    }
    let h = 1.0 / n as f64;
    let verts: Vec<Point3> = lattice
        .iter()
        .map(|&(x, y, z)| {
            let cube = Point3::new(x as f64, y as f64, z as f64) / n as f64;
            let jitter = Point3::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)) * h;
            let d = (cube + jitter).normalized();
            d * radius(d)
        })
        .collect();
    TriangleMesh::from_parts(verts, faces)
}
