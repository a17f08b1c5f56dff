//! Scalar geometric primitives shared by every stage of the pipeline.

use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;
use crate::predicates::{orient3d, Sign};

/// A point (or vector) in model space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ZERO: Point3 = Point3 { x: 0.0, y: 0.0, z: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn splat(v: f64) -> Self {
        Self::new(v, v, v)
    }

    #[inline]
    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    #[inline]
    pub fn distance_squared(self, o: Self) -> f64 {
        (self - o).norm_squared()
    }

    #[inline]
    pub fn distance(self, o: Self) -> f64 {
        self.distance_squared(o).sqrt()
    }

    #[inline]
    pub fn min(self, o: Self) -> Self {
        Self::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    #[inline]
    pub fn max(self, o: Self) -> Self {
        Self::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn normalized(self) -> Self {
        self / self.norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    /// Bit pattern of the coordinates, used for exact-equality hashing.
    pub fn bits(self) -> [u64; 3] {
        // normalize -0.0 so that exact-equal points hash equal
        let b = |v: f64| if v == 0.0 { 0u64 } else { v.to_bits() };
        [b(self.x), b(self.y), b(self.z)]
    }
}

impl Index<usize> for Point3 {
    type Output = f64;

    #[inline]
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("axis index {i} out of range"),
        }
    }
}

impl Add for Point3 {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Point3 {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Sub for Point3 {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Self;
    #[inline]
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Point3 {
    type Output = Self;
    #[inline]
    fn div(self, s: f64) -> Self {
        Self::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Point3 {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

/// Axis-aligned box. An "empty" box has `min > max` on every axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub fn empty() -> Self {
        Self {
            min: Point3::splat(f64::INFINITY),
            max: Point3::splat(f64::NEG_INFINITY),
        }
    }

    pub fn new(min: Point3, max: Point3) -> Self {
        Self { min, max }
    }

    pub fn from_points<I: IntoIterator<Item = Point3>>(points: I) -> Self {
        let mut b = Self::empty();
        for p in points {
            b.grow(p);
        }
        b
    }

    #[inline]
    pub fn grow(&mut self, p: Point3) {
        self.min = self.min.min(p);
        self.max = self.max.max(p);
    }

    pub fn union(&self, o: &Aabb) -> Aabb {
        Aabb::new(self.min.min(o.min), self.max.max(o.max))
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x || self.min.y > self.max.y || self.min.z > self.max.z
    }

    pub fn center(&self) -> Point3 {
        (self.min + self.max) * 0.5
    }

    pub fn extent(&self) -> Point3 {
        self.max - self.min
    }

    pub fn diagonal(&self) -> f64 {
        self.extent().norm()
    }

    pub fn longest_axis(&self) -> usize {
        let e = self.extent();
        if e.x >= e.y && e.x >= e.z {
            0
        } else if e.y >= e.z {
            1
        } else {
            2
        }
    }

    pub fn surface_area(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let e = self.extent();
        2.0 * (e.x * e.y + e.y * e.z + e.z * e.x)
    }

    /// Box scaled by `factor` about its center.
    pub fn scaled(&self, factor: f64) -> Aabb {
        let c = self.center();
        let h = self.extent() * (0.5 * factor);
        Aabb::new(c - h, c + h)
    }

    pub fn corners(&self) -> [Point3; 8] {
        let (a, b) = (self.min, self.max);
        [
            Point3::new(a.x, a.y, a.z),
            Point3::new(b.x, a.y, a.z),
            Point3::new(a.x, b.y, a.z),
            Point3::new(b.x, b.y, a.z),
            Point3::new(a.x, a.y, b.z),
            Point3::new(b.x, a.y, b.z),
            Point3::new(a.x, b.y, b.z),
            Point3::new(b.x, b.y, b.z),
        ]
    }

    #[inline]
    pub fn contains(&self, p: Point3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }

    pub fn contains_box(&self, o: &Aabb) -> bool {
        self.contains(o.min) && self.contains(o.max)
    }

    /// Squared distance from `p` to the closest point of the box (0 inside).
    #[inline]
    pub fn distance_squared_to(&self, p: Point3) -> f64 {
        let dx = (self.min.x - p.x).max(0.0).max(p.x - self.max.x);
        let dy = (self.min.y - p.y).max(0.0).max(p.y - self.max.y);
        let dz = (self.min.z - p.z).max(0.0).max(p.z - self.max.z);
        dx * dx + dy * dy + dz * dz
    }

    /// Squared distance from `p` to the farthest corner of the box.
    #[inline]
    pub fn max_distance_squared_to(&self, p: Point3) -> f64 {
        let dx = (p.x - self.min.x).abs().max((self.max.x - p.x).abs());
        let dy = (p.y - self.min.y).abs().max((self.max.y - p.y).abs());
        let dz = (p.z - self.min.z).abs().max((self.max.z - p.z).abs());
        dx * dx + dy * dy + dz * dz
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sphere {
    pub center: Point3,
    pub radius: f64,
}

impl Sphere {
    pub fn new(center: Point3, radius: f64) -> Self {
        Self { center, radius }
    }

    #[inline]
    pub fn contains(&self, p: Point3) -> bool {
        self.center.distance_squared(p) <= self.radius * self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle3 {
    pub a: Point3,
    pub b: Point3,
    pub c: Point3,
}

impl Triangle3 {
    pub fn new(a: Point3, b: Point3, c: Point3) -> Self {
        Self { a, b, c }
    }

    pub fn area(&self) -> f64 {
        0.5 * (self.b - self.a).cross(self.c - self.a).norm()
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points([self.a, self.b, self.c])
    }

    pub fn centroid(&self) -> Point3 {
        (self.a + self.b + self.c) / 3.0
    }

    pub fn longest_edge_squared(&self) -> f64 {
        self.a
            .distance_squared(self.b)
            .max(self.b.distance_squared(self.c))
            .max(self.c.distance_squared(self.a))
    }

    /// Degenerate when the area vanishes relative to the longest edge.
    pub fn is_degenerate(&self) -> bool {
        let l2 = self.longest_edge_squared();
        if !(l2 > 0.0) || !l2.is_finite() {
            return true;
        }
        let twice_area = (self.b - self.a).cross(self.c - self.a).norm();
        twice_area <= DEGENERATE_AREA_RATIO * l2
    }

    fn check(&self) -> Result<(), GeometryError> {
        if self.is_degenerate() {
            Err(GeometryError::DegenerateTriangle)
        } else {
            Ok(())
        }
    }

    /// Closest point on the triangle to `p`, without a degeneracy check.
    ///
    /// Voronoi-region classification over the three vertices, three edges
    /// and the face interior.
    #[inline]
    pub fn closest_point(&self, p: Point3) -> Point3 {
        let (a, b, c) = (self.a, self.b, self.c);
        let ab = b - a;
        let ac = c - a;
        let ap = p - a;
        let d1 = ab.dot(ap);
        let d2 = ac.dot(ap);
        if d1 <= 0.0 && d2 <= 0.0 {
            return a;
        }
        let bp = p - b;
        let d3 = ab.dot(bp);
        let d4 = ac.dot(bp);
        if d3 >= 0.0 && d4 <= d3 {
            return b;
        }
        let vc = d1 * d4 - d3 * d2;
        if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
            let v = d1 / (d1 - d3);
            return a + ab * v;
        }
        let cp = p - c;
        let d5 = ab.dot(cp);
        let d6 = ac.dot(cp);
        if d6 >= 0.0 && d5 <= d6 {
            return c;
        }
        let vb = d5 * d2 - d1 * d6;
        if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
            let w = d2 / (d2 - d6);
            return a + ac * w;
        }
        let va = d3 * d6 - d5 * d4;
        if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
            let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
            return b + (c - b) * w;
        }
        let denom = 1.0 / (va + vb + vc);
        let v = vb * denom;
        let w = vc * denom;
        a + ab * v + ac * w
    }
}

/// Twice the area over the squared longest edge below which a triangle is
/// treated as degenerate.
pub const DEGENERATE_AREA_RATIO: f64 = 1e-14;

/// Exact Euclidean distance from `q` to triangle `t` and the closest point.
pub fn point_triangle_distance(q: Point3, t: &Triangle3) -> Result<(f64, Point3), GeometryError> {
    t.check()?;
    let c = t.closest_point(q);
    Ok((q.distance(c), c))
}

/// Closed-ball interference test: the ball touches or overlaps the triangle.
pub fn sphere_triangle_intersect(s: &Sphere, t: &Triangle3) -> Result<bool, GeometryError> {
    let (d, _) = point_triangle_distance(s.center, t)?;
    Ok(d <= s.radius)
}

/// Center of the sphere through four non-coplanar points.
pub fn tetra_circumcenter(
    p0: Point3,
    p1: Point3,
    p2: Point3,
    p3: Point3,
) -> Result<Point3, GeometryError> {
    if orient3d(p0, p1, p2, p3) == Sign::Zero {
        return Err(GeometryError::CoplanarTetrahedron);
    }
    let c = circumcenter_unchecked(p0, p1, p2, p3);
    if c.is_finite() {
        Ok(c)
    } else {
        Err(GeometryError::CoplanarTetrahedron)
    }
}

/// Circumcenter without the coplanarity check; non-finite for flat input.
#[inline]
pub(crate) fn circumcenter_unchecked(p0: Point3, p1: Point3, p2: Point3, p3: Point3) -> Point3 {
    let b = p1 - p0;
    let c = p2 - p0;
    let d = p3 - p0;
    let det = b.dot(c.cross(d));
    let num = c.cross(d) * b.norm_squared() + d.cross(b) * c.norm_squared() + b.cross(c) * d.norm_squared();
    p0 + num / (2.0 * det)
}

/// Minimal enclosing sphere of a triangle's three vertices.
///
/// Acute triangles get their circumsphere; right and obtuse triangles get
/// the diametral sphere of the longest edge.
pub fn triangle_bounding_sphere(t: &Triangle3) -> Result<Sphere, GeometryError> {
    t.check()?;
    Ok(min_sphere_of_triangle(t))
}

pub(crate) fn min_sphere_of_triangle(t: &Triangle3) -> Sphere {
    let (a, b, c) = (t.a, t.b, t.c);
    // the vertex opposite a non-acute angle decides the diametral edge
    let candidates = [(a, b, c), (b, c, a), (c, a, b)];
    for (apex, p, q) in candidates {
        if (p - apex).dot(q - apex) <= 0.0 {
            return enclose(t, (p + q) * 0.5);
        }
    }
    let ab = b - a;
    let ac = c - a;
    let n = ab.cross(ac);
    let center = a + (n.cross(ab) * ac.norm_squared() + ac.cross(n) * ab.norm_squared()) / (2.0 * n.norm_squared());
    enclose(t, center)
}

/// Sphere at `center` grown to cover all three vertices after rounding.
fn enclose(t: &Triangle3, center: Point3) -> Sphere {
    let r = center
        .distance(t.a)
        .max(center.distance(t.b))
        .max(center.distance(t.c));
    Sphere::new(center, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn unit_tri() -> Triangle3 {
        Triangle3::new(
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        )
    }

    fn rand_point(rng: &mut impl Rng, s: f64) -> Point3 {
        Point3::new(rng.gen_range(-s..s), rng.gen_range(-s..s), rng.gen_range(-s..s))
    }

    #[test]
    fn distance_over_vertex() {
        let (d, c) = point_triangle_distance(Point3::new(0.0, 0.0, 1.0), &unit_tri()).unwrap();
        assert_eq!(d, 1.0);
        assert_eq!(c, Point3::ZERO);
    }

    #[test]
    fn distance_over_face_interior() {
        let (d, c) = point_triangle_distance(Point3::new(0.25, 0.25, 2.0), &unit_tri()).unwrap();
        assert_eq!(d, 2.0);
        assert_eq!(c, Point3::new(0.25, 0.25, 0.0));
    }

    #[test]
    fn distance_to_hypotenuse() {
        let (d, c) = point_triangle_distance(Point3::new(2.0, 2.0, 0.0), &unit_tri()).unwrap();
        assert!((d - 1.5 * 2f64.sqrt()).abs() < 1e-15);
        assert!(c.distance(Point3::new(0.5, 0.5, 0.0)) < 1e-15);
    }

    #[test]
    fn degenerate_triangle_rejected() {
        let t = Triangle3::new(Point3::ZERO, Point3::new(1.0, 0.0, 0.0), Point3::new(2.0, 0.0, 0.0));
        assert_eq!(
            point_triangle_distance(Point3::ZERO, &t),
            Err(GeometryError::DegenerateTriangle)
        );
        assert!(triangle_bounding_sphere(&t).is_err());
        assert!(sphere_triangle_intersect(&Sphere::new(Point3::ZERO, 1.0), &t).is_err());
    }

    #[test]
    fn sphere_tangent_contact_is_closed() {
        let t = unit_tri();
        let c = Point3::new(0.0, 0.0, 1.0);
        assert!(sphere_triangle_intersect(&Sphere::new(c, 1.0), &t).unwrap());
        assert!(!sphere_triangle_intersect(&Sphere::new(c, 0.999), &t).unwrap());
    }

    /// Dense barycentric sampling, refined around the best sample.
    fn sampled_min_distance(q: Point3, t: &Triangle3) -> f64 {
        let n = 60;
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..=n {
            for j in 0..=(n - i) {
                let (u, v) = (i as f64 / n as f64, j as f64 / n as f64);
                let p = t.a + (t.b - t.a) * u + (t.c - t.a) * v;
                let d = q.distance(p);
                if d < best.0 {
                    best = (d, u, v);
                }
            }
        }
        let mut step = 1.0 / n as f64;
        for _ in 0..40 {
            let (_, u0, v0) = best;
            for du in [-1.0, 0.0, 1.0] {
                for dv in [-1.0, 0.0, 1.0] {
                    let u = (u0 + du * step).max(0.0);
                    let v = (v0 + dv * step).max(0.0);
                    if u + v > 1.0 {
                        continue;
                    }
                    let p = t.a + (t.b - t.a) * u + (t.c - t.a) * v;
                    let d = q.distance(p);
                    if d < best.0 {
                        best = (d, u, v);
                    }
                }
            }
            step *= 0.5;
        }
        best.0
    }

    #[test]
    fn sphere_triangle_agrees_with_sampling_oracle() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(7);
        let mut checked = 0;
        while checked < 1000 {
            let t = Triangle3::new(rand_point(&mut rng, 1.0), rand_point(&mut rng, 1.0), rand_point(&mut rng, 1.0));
            if t.is_degenerate() {
                continue;
            }
            let s = Sphere::new(rand_point(&mut rng, 2.0), rng.gen_range(0.0..1.5));
            let sampled = sampled_min_distance(s.center, &t);
            // skip razor-thin contacts the sampler cannot resolve
            if (sampled - s.radius).abs() < 1e-7 {
                continue;
            }
            let expect = sampled <= s.radius;
            assert_eq!(sphere_triangle_intersect(&s, &t).unwrap(), expect, "{s:?} {t:?}");
            checked += 1;
        }
    }

    #[test]
    fn circumcenter_examples() {
        let c = tetra_circumcenter(
            Point3::new(1.0, 1.0, 1.0),
            Point3::new(1.0, -1.0, -1.0),
            Point3::new(-1.0, 1.0, -1.0),
            Point3::new(-1.0, -1.0, 1.0),
        )
        .unwrap();
        assert!(c.norm() < 1e-15);
        let c = tetra_circumcenter(
            Point3::ZERO,
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
        )
        .unwrap();
        assert!(c.distance(Point3::splat(0.5)) < 1e-15);
    }

    #[test]
    fn circumcenter_of_coplanar_is_error() {
        let r = tetra_circumcenter(
            Point3::ZERO,
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
        );
        assert_eq!(r, Err(GeometryError::CoplanarTetrahedron));
    }

    #[test]
    fn random_circumcenters_are_equidistant() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(11);
        for _ in 0..2000 {
            let p: Vec<Point3> = (0..4).map(|_| rand_point(&mut rng, 1.0)).collect();
            let diam = (0..4)
                .flat_map(|i| (0..4).map(move |j| (i, j)))
                .map(|(i, j)| p[i].distance(p[j]))
                .fold(0.0, f64::max);
            // well-shaped tetras only; slivers are checked through the Delaunay audit
            let vol = (p[1] - p[0]).dot((p[2] - p[0]).cross(p[3] - p[0])).abs();
            if vol < 1e-3 * diam.powi(3) {
                continue;
            }
            let c = tetra_circumcenter(p[0], p[1], p[2], p[3]).unwrap();
            let d: Vec<f64> = p.iter().map(|q| q.distance(c)).collect();
            let spread = d.iter().cloned().fold(f64::MIN, f64::max) - d.iter().cloned().fold(f64::MAX, f64::min);
            assert!(spread < 1e-9 * diam, "spread {spread}");
        }
    }

    #[test]
    fn bounding_sphere_examples() {
        let s = triangle_bounding_sphere(&unit_tri()).unwrap();
        assert!(s.center.distance(Point3::new(0.5, 0.5, 0.0)) < 1e-15);
        assert!((s.radius - 2f64.sqrt() / 2.0).abs() < 1e-15);

        let obtuse = Triangle3::new(Point3::ZERO, Point3::new(4.0, 0.0, 0.0), Point3::new(2.0, 0.1, 0.0));
        let s = triangle_bounding_sphere(&obtuse).unwrap();
        assert_eq!(s.center, Point3::new(2.0, 0.0, 0.0));
        assert_eq!(s.radius, 2.0);
    }

    /// Exhaustive 3-point miniball: the smallest of the three diametral
    /// spheres that cover the third point, else the circumsphere.
    fn miniball_radius(t: &Triangle3) -> f64 {
        let pts = [t.a, t.b, t.c];
        let mut best = f64::INFINITY;
        for i in 0..3 {
            let (p, q, o) = (pts[i], pts[(i + 1) % 3], pts[(i + 2) % 3]);
            let c = (p + q) * 0.5;
            let r = p.distance(q) * 0.5;
            if c.distance(o) <= r * (1.0 + 1e-12) {
                best = best.min(r);
            }
        }
        if best.is_finite() {
            return best;
        }
        // circumradius from side lengths
        let (a, b, c) = (t.b.distance(t.c), t.c.distance(t.a), t.a.distance(t.b));
        a * b * c / (4.0 * t.area())
    }

    #[test]
    fn bounding_sphere_is_minimal_and_covering() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
        for _ in 0..5000 {
            let t = Triangle3::new(rand_point(&mut rng, 1.0), rand_point(&mut rng, 1.0), rand_point(&mut rng, 1.0));
            if t.is_degenerate() {
                continue;
            }
            let s = triangle_bounding_sphere(&t).unwrap();
            for v in [t.a, t.b, t.c] {
                assert!(v.distance(s.center) <= s.radius * (1.0 + 1e-12));
            }
            let r = miniball_radius(&t);
            assert!((s.radius - r).abs() <= 1e-9 * r, "{} vs {}", s.radius, r);
        }
    }

    proptest::proptest! {
        #[test]
        fn distance_never_exceeds_vertex_distance(
            q in proptest::array::uniform3(-5.0f64..5.0),
            a in proptest::array::uniform3(-1.0f64..1.0),
            b in proptest::array::uniform3(-1.0f64..1.0),
            c in proptest::array::uniform3(-1.0f64..1.0),
        ) {
            let t = Triangle3::new(Point3::from_array(a), Point3::from_array(b), Point3::from_array(c));
            proptest::prop_assume!(!t.is_degenerate());
            let q = Point3::from_array(q);
            let (d, cp) = point_triangle_distance(q, &t).unwrap();
            let vmin = q.distance(t.a).min(q.distance(t.b)).min(q.distance(t.c));
            proptest::prop_assert!(d <= vmin * (1.0 + 1e-12));
            proptest::prop_assert!((d - q.distance(cp)).abs() <= 1e-15 * (1.0 + d));
            let s = Sphere::new(q, d);
            proptest::prop_assert!(sphere_triangle_intersect(&s, &t).unwrap());
        }
    }
}
