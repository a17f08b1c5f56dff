//! Orientation and insphere predicates.
//!
//! Signs are exact (adaptive-precision evaluation). Exactly cospherical
//! configurations are resolved by a symbolic perturbation that orders the
//! points by their site index, so the Delaunay builder never sees a zero.

use robust::Coord3D;

use crate::geometry::Point3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    #[inline]
    pub fn of(v: f64) -> Sign {
        if v > 0.0 {
            Sign::Positive
        } else if v < 0.0 {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }

    pub fn as_i32(self) -> i32 {
        match self {
            Sign::Negative => -1,
            Sign::Zero => 0,
            Sign::Positive => 1,
        }
    }
}

#[inline]
fn c3(p: Point3) -> Coord3D<f64> {
    Coord3D { x: p.x, y: p.y, z: p.z }
}

/// Sign of `det[p1 - p0, p2 - p0, p3 - p0]`: positive when `p3` lies on
/// the side of plane `(p0, p1, p2)` that sees it counter-clockwise.
#[inline]
pub fn orient3d(p0: Point3, p1: Point3, p2: Point3, p3: Point3) -> Sign {
    // robust uses the opposite handedness
    Sign::of(-robust::orient3d(c3(p0), c3(p1), c3(p2), c3(p3)))
}

/// Unperturbed insphere sign. For a positively oriented `(p0..p3)` the
/// result is positive when `p4` is strictly inside the circumsphere.
/// Swapping any two arguments flips the sign.
#[inline]
pub fn in_sphere_exact(p0: Point3, p1: Point3, p2: Point3, p3: Point3, p4: Point3) -> Sign {
    Sign::of(-robust::insphere(c3(p0), c3(p1), c3(p2), c3(p3), c3(p4)))
}

/// Insphere with index-ordered symbolic tie-breaking.
///
/// `pts[0..4]` must be positively oriented. Points with a larger index are
/// perturbed more strongly; the result is never `Zero` for distinct points.
pub fn in_sphere(pts: [Point3; 5], ids: [usize; 5]) -> Sign {
    let [p0, p1, p2, p3, p] = pts;
    let s = in_sphere_exact(p0, p1, p2, p3, p);
    if s != Sign::Zero {
        return s;
    }
    let mut order = [0usize, 1, 2, 3, 4];
    order.sort_unstable_by_key(|&i| ids[i]);
    // the two most perturbed points decide (leading and second monomial)
    for &i in order.iter().rev().take(2) {
        let o = match i {
            4 => return Sign::Negative,
            3 => orient3d(p0, p1, p2, p),
            2 => orient3d(p0, p1, p, p3),
            1 => orient3d(p0, p, p2, p3),
            _ => orient3d(p, p1, p2, p3),
        };
        if o != Sign::Zero {
            return o;
        }
    }
    debug_assert!(false, "insphere perturbation did not resolve");
    Sign::Negative
}
