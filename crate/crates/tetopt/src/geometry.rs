//! Pure geometric kernels: signed volumes, face areas, the opposite-face
//! cross-product vector, dihedral angles and small 3x3 matrix helpers.
//!
//! Everything here is stateless and generic over the scalar type.

use crate::error::Error;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Point3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Point3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn origin() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_vec(self) -> Vec3<T> {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn distance(self, other: Self) -> T {
        (self - other).norm()
    }

    pub fn midpoint(self, other: Self) -> Self {
        let half = T::of(0.5);
        Self::new(
            (self.x + other.x) * half,
            (self.y + other.y) * half,
            (self.z + other.z) * half,
        )
    }
}

impl<T: Real> Vec3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Self) -> Self {
        Self::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm_squared(self) -> T {
        self.dot(self)
    }

    pub fn norm(self) -> T {
        self.norm_squared().sqrt()
    }

    pub fn scale(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl<T: Real> std::ops::Sub for Point3<T> {
    type Output = Vec3<T>;
    fn sub(self, rhs: Self) -> Vec3<T> {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl<T: Real> std::ops::Add<Vec3<T>> for Point3<T> {
    type Output = Point3<T>;
    fn add(self, rhs: Vec3<T>) -> Point3<T> {
        Point3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl<T: Real> std::ops::Sub<Vec3<T>> for Point3<T> {
    type Output = Point3<T>;
    fn sub(self, rhs: Vec3<T>) -> Point3<T> {
        Point3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl<T: Real> std::ops::Add for Vec3<T> {
    type Output = Vec3<T>;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl<T: Real> std::ops::Sub for Vec3<T> {
    type Output = Vec3<T>;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl<T: Real> std::ops::Neg for Vec3<T> {
    type Output = Vec3<T>;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

/// A tetrahedron given by four corner positions. `p0` plays the role of the
/// cavity center when the tet is extracted from a one-ring cell.
#[derive(Clone, Copy, Debug)]
pub struct TetGeom<T> {
    pub p0: Point3<T>,
    pub p1: Point3<T>,
    pub p2: Point3<T>,
    pub p3: Point3<T>,
}

impl<T: Real> TetGeom<T> {
    pub fn new(p0: Point3<T>, p1: Point3<T>, p2: Point3<T>, p3: Point3<T>) -> Self {
        Self { p0, p1, p2, p3 }
    }

    pub fn points(&self) -> [Point3<T>; 4] {
        [self.p0, self.p1, self.p2, self.p3]
    }
}

/// Signed volume of a tetrahedron via the scalar triple product:
/// `V = (1/6) (p1 - p0) . ((p2 - p0) x (p3 - p0))`.
///
/// Positive for positively oriented tets, antisymmetric under swapping any
/// two vertices. The unit corner tet (0,0,0),(1,0,0),(0,1,0),(0,0,1) has
/// volume +1/6.
pub fn signed_volume<T: Real>(t: &TetGeom<T>) -> T {
    signed_volume_pts(t.p0, t.p1, t.p2, t.p3)
}

pub fn signed_volume_pts<T: Real>(
    p0: Point3<T>,
    p1: Point3<T>,
    p2: Point3<T>,
    p3: Point3<T>,
) -> T {
    let a = p1 - p0;
    let b = p2 - p0;
    let c = p3 - p0;
    a.dot(b.cross(c)) / T::of(6.0)
}

/// Positivity constraint value `f = 6 * signed_volume`. The per-cell
/// constraint `f > 0` keeps a cavity free of inverted elements.
pub fn constraint_value<T: Real>(t: &TetGeom<T>) -> T {
    let a = t.p1 - t.p0;
    let b = t.p2 - t.p0;
    let c = t.p3 - t.p0;
    a.dot(b.cross(c))
}

/// The opposite-face vector `s = (v_mj - v_ml) x (v_mk - v_ml)`.
///
/// Its half-norm is the area of the triangle (v_mj, v_mk, v_ml); it spans
/// the gradient and Hessian of the squared-volume energy.
pub fn opposite_face_vector<T: Real>(
    v_mj: Point3<T>,
    v_mk: Point3<T>,
    v_ml: Point3<T>,
) -> Vec3<T> {
    (v_mj - v_ml).cross(v_mk - v_ml)
}

/// Area of the triangle opposite the cavity center, `|s| / 2`.
///
/// Fails with [`Error::DegenerateFace`] when the area vanishes relative to
/// the triangle's own bounding-box scale, which would make the adaptive
/// weight `1/A` unusable.
pub fn opposite_face_area<T: Real>(
    v_mj: Point3<T>,
    v_mk: Point3<T>,
    v_ml: Point3<T>,
) -> Result<T, Error> {
    let area = opposite_face_vector(v_mj, v_mk, v_ml).norm() * T::of(0.5);
    let diag = triple_bbox_diag(v_mj, v_mk, v_ml);
    if area <= T::of(1e-14) * diag * diag {
        return Err(Error::DegenerateFace);
    }
    Ok(area)
}

fn triple_bbox_diag<T: Real>(a: Point3<T>, b: Point3<T>, c: Point3<T>) -> T {
    let min = Point3::new(
        a.x.min(b.x).min(c.x),
        a.y.min(b.y).min(c.y),
        a.z.min(b.z).min(c.z),
    );
    let max = Point3::new(
        a.x.max(b.x).max(c.x),
        a.y.max(b.y).max(c.y),
        a.z.max(b.z).max(c.z),
    );
    (max - min).norm()
}

/// Local vertex pairs for the six edges of a tet, together with the two
/// opposite vertices. Edge k of `TET_EDGES` is opposite edge 5-k.
pub const TET_EDGES: [[usize; 4]; 6] = [
    [0, 1, 2, 3],
    [0, 2, 1, 3],
    [0, 3, 1, 2],
    [1, 2, 0, 3],
    [1, 3, 0, 2],
    [2, 3, 0, 1],
];

/// Interior dihedral angles (degrees) along the six edges of a positively
/// oriented tet, in `TET_EDGES` order.
///
/// Uses atan2 of the face-normal cross and dot products, which stays
/// accurate near 0 and 180 degrees where slivers live.
pub fn dihedral_angles<T: Real>(t: &TetGeom<T>) -> Result<[T; 6], Error> {
    if signed_volume(t) <= T::zero() {
        return Err(Error::DegenerateTet);
    }
    Ok(dihedral_angles_unchecked(t))
}

/// Same as [`dihedral_angles`] without the orientation check; used by
/// remesh gates that evaluate candidate configurations of either sign.
pub fn dihedral_angles_unchecked<T: Real>(t: &TetGeom<T>) -> [T; 6] {
    let p = t.points();
    let mut out = [T::zero(); 6];
    for (i, e) in TET_EDGES.iter().enumerate() {
        let a = p[e[0]];
        let b = p[e[1]];
        let c = p[e[2]];
        let d = p[e[3]];
        let axis = b - a;
        let n1 = axis.cross(c - a);
        let n2 = axis.cross(d - a);
        let sin = n1.cross(n2).norm();
        let cos = n1.dot(n2);
        out[i] = sin.atan2(cos).to_degrees();
    }
    out
}

/// Minimum dihedral angle (degrees) of a tet, ignoring orientation.
pub fn min_dihedral<T: Real>(t: &TetGeom<T>) -> T {
    let angles = dihedral_angles_unchecked(t);
    angles.iter().fold(T::infinity(), |m, &a| m.min(a))
}

/// Column-major 3x3 matrix over the kernel scalar.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3<T> {
    /// Columns of the matrix.
    pub col: [Vec3<T>; 3],
}

impl<T: Real> Mat3<T> {
    pub fn zero() -> Self {
        Self {
            col: [Vec3::zero(); 3],
        }
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        m.col[0].x = T::one();
        m.col[1].y = T::one();
        m.col[2].z = T::one();
        m
    }

    pub fn from_columns(c0: Vec3<T>, c1: Vec3<T>, c2: Vec3<T>) -> Self {
        Self { col: [c0, c1, c2] }
    }

    pub fn get(&self, row: usize, colu: usize) -> T {
        let c = self.col[colu];
        match row {
            0 => c.x,
            1 => c.y,
            _ => c.z,
        }
    }

    pub fn set(&mut self, row: usize, colu: usize, v: T) {
        let c = &mut self.col[colu];
        match row {
            0 => c.x = v,
            1 => c.y = v,
            _ => c.z = v,
        }
    }

    /// Rank-one update `self += w * (v v^T)`.
    pub fn add_outer(&mut self, v: Vec3<T>, w: T) {
        let s = v.scale(w);
        self.col[0] = self.col[0] + s.scale(v.x);
        self.col[1] = self.col[1] + s.scale(v.y);
        self.col[2] = self.col[2] + s.scale(v.z);
    }

    pub fn mul_vec(&self, v: Vec3<T>) -> Vec3<T> {
        self.col[0].scale(v.x) + self.col[1].scale(v.y) + self.col[2].scale(v.z)
    }

    pub fn mul_mat(&self, other: &Mat3<T>) -> Mat3<T> {
        Mat3::from_columns(
            self.mul_vec(other.col[0]),
            self.mul_vec(other.col[1]),
            self.mul_vec(other.col[2]),
        )
    }

    pub fn scale(&self, s: T) -> Mat3<T> {
        Mat3::from_columns(self.col[0].scale(s), self.col[1].scale(s), self.col[2].scale(s))
    }

    pub fn trace(&self) -> T {
        self.col[0].x + self.col[1].y + self.col[2].z
    }

    pub fn determinant(&self) -> T {
        self.col[0].dot(self.col[1].cross(self.col[2]))
    }

    pub fn frobenius_norm(&self) -> T {
        (self.col[0].norm_squared() + self.col[1].norm_squared() + self.col[2].norm_squared())
            .sqrt()
    }

    pub fn inverse(&self) -> Option<Mat3<T>> {
        let det = self.determinant();
        if det == T::zero() || !det.is_finite() {
            return None;
        }
        let [a, b, c] = self.col;
        // Rows of the inverse are the scaled cross products of the columns.
        let r0 = b.cross(c).scale(T::one() / det);
        let r1 = c.cross(a).scale(T::one() / det);
        let r2 = a.cross(b).scale(T::one() / det);
        Some(Mat3::from_columns(
            Vec3::new(r0.x, r1.x, r2.x),
            Vec3::new(r0.y, r1.y, r2.y),
            Vec3::new(r0.z, r1.z, r2.z),
        ))
    }

    /// Cholesky solve of `self * x = rhs` for a symmetric positive definite
    /// matrix. Returns `None` when a pivot is not strictly positive.
    pub fn cholesky_solve(&self, rhs: Vec3<T>) -> Option<Vec3<T>> {
        let a00 = self.get(0, 0);
        let a10 = self.get(1, 0);
        let a20 = self.get(2, 0);
        let a11 = self.get(1, 1);
        let a21 = self.get(2, 1);
        let a22 = self.get(2, 2);

        if a00 <= T::zero() {
            return None;
        }
        let l00 = a00.sqrt();
        let l10 = a10 / l00;
        let l20 = a20 / l00;
        let d1 = a11 - l10 * l10;
        if d1 <= T::zero() {
            return None;
        }
        let l11 = d1.sqrt();
        let l21 = (a21 - l20 * l10) / l11;
        let d2 = a22 - l20 * l20 - l21 * l21;
        if d2 <= T::zero() {
            return None;
        }
        let l22 = d2.sqrt();

        // Forward substitution L y = rhs.
        let y0 = rhs.x / l00;
        let y1 = (rhs.y - l10 * y0) / l11;
        let y2 = (rhs.z - l20 * y0 - l21 * y1) / l22;
        // Back substitution L^T x = y.
        let x2 = y2 / l22;
        let x1 = (y1 - l21 * x2) / l11;
        let x0 = (y0 - l10 * x1 - l20 * x2) / l00;
        let x = Vec3::new(x0, x1, x2);
        if x.is_finite() {
            Some(x)
        } else {
            None
        }
    }

    /// Eigenvalues of a symmetric matrix, ascending. Analytic (trigonometric)
    /// formula; only the lower triangle is read.
    pub fn sym_eigenvalues(&self) -> [T; 3] {
        let a00 = self.get(0, 0);
        let a11 = self.get(1, 1);
        let a22 = self.get(2, 2);
        let a10 = self.get(1, 0);
        let a20 = self.get(2, 0);
        let a21 = self.get(2, 1);

        let p1 = a10 * a10 + a20 * a20 + a21 * a21;
        if p1 == T::zero() {
            let mut e = [a00, a11, a22];
            e.sort_by(|a, b| a.partial_cmp(b).unwrap());
            return e;
        }
        let three = T::of(3.0);
        let q = (a00 + a11 + a22) / three;
        let p2 = (a00 - q) * (a00 - q)
            + (a11 - q) * (a11 - q)
            + (a22 - q) * (a22 - q)
            + T::of(2.0) * p1;
        let p = (p2 / T::of(6.0)).sqrt();
        let mut b = *self;
        b.set(0, 0, a00 - q);
        b.set(1, 1, a11 - q);
        b.set(2, 2, a22 - q);
        // Symmetrize the upper triangle before taking the determinant.
        b.set(0, 1, a10);
        b.set(0, 2, a20);
        b.set(1, 2, a21);
        let r = (b.determinant() / (p * p * p)) * T::of(0.5);
        let r = r.max(-T::one()).min(T::one());
        let phi = r.acos() / three;
        let two = T::of(2.0);
        let e_hi = q + two * p * phi.cos();
        let e_lo = q + two * p * (phi + two * T::PI() / three).cos();
        let e_mid = three * q - e_hi - e_lo;
        [e_lo, e_mid, e_hi]
    }
}

/// Axis-aligned bounding box of a point set; `diag` is its diagonal length.
pub fn bbox_diag<T: Real>(points: impl IntoIterator<Item = Point3<T>>) -> T {
    let mut min = Point3::new(T::infinity(), T::infinity(), T::infinity());
    let mut max = Point3::new(-T::infinity(), -T::infinity(), -T::infinity());
    let mut any = false;
    for p in points {
        any = true;
        min.x = min.x.min(p.x);
        min.y = min.y.min(p.y);
        min.z = min.z.min(p.z);
        max.x = max.x.max(p.x);
        max.y = max.y.max(p.y);
        max.z = max.z.max(p.z);
    }
    if !any {
        return T::zero();
    }
    (max - min).norm()
}
