//! Exact geometric predicates for the Delaunay construction, wrapping the
//! adaptive-precision routines from the `robust` crate behind this crate's
//! orientation convention (positive = positive scalar-triple-product
//! volume, as in [`crate::geometry::signed_volume`]).
//!
//! Floating-point filters run first; uncertain signs escalate to exact
//! evaluation inside `robust`.

use robust::{Coord, Coord3D};

use crate::Point3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    fn of(v: f64) -> Sign {
        if v > 0.0 {
            Sign::Positive
        } else if v < 0.0 {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }
}

fn c3(p: Point3) -> Coord3D<f64> {
    Coord3D {
        x: p.x,
        y: p.y,
        z: p.z,
    }
}

/// Exact sign of the signed volume of `(a, b, c, d)`.
///
/// `Positive` matches `signed_volume > 0` for the unit corner tet
/// (0,0,0),(1,0,0),(0,1,0),(0,0,1); the underlying Shewchuk determinant uses
/// the opposite convention, hence the negation.
pub fn orientation(a: Point3, b: Point3, c: Point3, d: Point3) -> Sign {
    Sign::of(-robust::orient3d(c3(a), c3(b), c3(c), c3(d)))
}

/// Exact position of `e` relative to the circumsphere of the positively
/// oriented tet `(a, b, c, d)`: `Positive` means strictly inside.
pub fn in_sphere(a: Point3, b: Point3, c: Point3, d: Point3, e: Point3) -> Sign {
    debug_assert_ne!(orientation(a, b, c, d), Sign::Negative);
    // `robust::insphere` expects its positive orientation, which is the
    // mirror of ours; swapping two vertices flips it back.
    Sign::of(robust::insphere(c3(b), c3(a), c3(c), c3(d), c3(e)))
}

/// Exact position of `p` relative to the circumcircle of the triangle
/// `(a, b, c)`, all four points coplanar: `Positive` means strictly inside.
///
/// The points are projected onto the dominant axis plane of the triangle
/// normal; the projected orientation is normalized before the incircle test.
pub fn in_circle_coplanar(a: Point3, b: Point3, c: Point3, p: Point3) -> Sign {
    let n = (b - a).cross(c - a);
    let (nx, ny, nz) = (n.x.abs(), n.y.abs(), n.z.abs());
    let proj: fn(Point3) -> Coord<f64> = if nx >= ny && nx >= nz {
        |q| Coord { x: q.y, y: q.z }
    } else if ny >= nx && ny >= nz {
        |q| Coord { x: q.z, y: q.x }
    } else {
        |q| Coord { x: q.x, y: q.y }
    };
    let (pa, pb, pc, pp) = (proj(a), proj(b), proj(c), proj(p));
    let orient = robust::orient2d(pa, pb, pc);
    if orient > 0.0 {
        Sign::of(robust::incircle(pa, pb, pc, pp))
    } else if orient < 0.0 {
        Sign::of(robust::incircle(pb, pa, pc, pp))
    } else {
        Sign::Zero
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orientation_matches_volume_convention() {
        let a = Point3::new(0.0, 0.0, 0.0);
        let b = Point3::new(1.0, 0.0, 0.0);
        let c = Point3::new(0.0, 1.0, 0.0);
        let d = Point3::new(0.0, 0.0, 1.0);
        assert_eq!(orientation(a, b, c, d), Sign::Positive);
        assert_eq!(orientation(a, c, b, d), Sign::Negative);
        let coplanar = Point3::new(0.25, 0.25, 0.0);
        assert_eq!(orientation(a, b, c, coplanar), Sign::Zero);
    }

    #[test]
    fn insphere_convention() {
        let a = Point3::new(0.0, 0.0, 0.0);
        let b = Point3::new(1.0, 0.0, 0.0);
        let c = Point3::new(0.0, 1.0, 0.0);
        let d = Point3::new(0.0, 0.0, 1.0);
        assert_eq!(
            in_sphere(a, b, c, d, Point3::new(0.25, 0.25, 0.25)),
            Sign::Positive
        );
        assert_eq!(
            in_sphere(a, b, c, d, Point3::new(5.0, 5.0, 5.0)),
            Sign::Negative
        );
        // The corner tet's circumsphere passes through the opposite cube
        // corner (1,1,1): an exact tie.
        assert_eq!(
            in_sphere(a, b, c, d, Point3::new(1.0, 1.0, 1.0)),
            Sign::Zero
        );
    }

    #[test]
    fn coplanar_incircle() {
        let a = Point3::new(0.0, 0.0, 2.0);
        let b = Point3::new(1.0, 0.0, 2.0);
        let c = Point3::new(0.0, 1.0, 2.0);
        assert_eq!(
            in_circle_coplanar(a, b, c, Point3::new(0.4, 0.4, 2.0)),
            Sign::Positive
        );
        assert_eq!(
            in_circle_coplanar(a, b, c, Point3::new(3.0, 3.0, 2.0)),
            Sign::Negative
        );
        // (1,1) lies exactly on the circumcircle of the right triangle.
        assert_eq!(
            in_circle_coplanar(a, b, c, Point3::new(1.0, 1.0, 2.0)),
            Sign::Zero
        );
        // Reversing the triangle orientation must not change the answer.
        assert_eq!(
            in_circle_coplanar(b, a, c, Point3::new(0.4, 0.4, 2.0)),
            Sign::Positive
        );
    }
}
