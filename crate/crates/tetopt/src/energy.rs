//! The weighted squared-volume energy of one vertex cavity: value, gradient,
//! Hessian and feasibility, under a constant or geometry-adaptive weighting.
//!
//! For a cavity cell with opposite triple `(v_mj, v_mk, v_ml)` and
//! `s_m = (v_mj - v_ml) x (v_mk - v_ml)`, the cell volume as a function of
//! the center `v` is `V_m(v) = (v - v_ml) . s_m / 6`, so
//!
//! ```text
//! E(v) = sum_m rho_m V_m(v)^2
//! g(v) = sum_m (1/3) rho_m V_m(v) s_m
//! H    = (1/18) sum_m rho_m s_m (x) s_m      (constant in v)
//! ```
//!
//! The energy is an exact quadratic in `v` with positive semi-definite
//! Hessian; the feasible set `{f_m = 6 V_m > 0}` is an open convex
//! intersection of half-spaces.

use crate::error::Error;
use crate::geometry::{bbox_diag, opposite_face_area, Mat3, Point3, Vec3};
use crate::mesh::{OneRing, TetMesh};
use crate::scalar::Real;

/// Weighting of cavity cells: `Constant` targets uniform volumes,
/// `InverseOppositeArea` targets uniform heights and hence dihedral angles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightScheme {
    Constant,
    InverseOppositeArea,
}

#[derive(Clone, Copy, Debug)]
struct Cell<T> {
    anchor: Point3<T>,
    s: Vec3<T>,
    rho: T,
}

/// Frozen per-solve view of one cavity: cached weights and face vectors.
/// Weights depend only on the opposite triples, never on the center.
#[derive(Clone, Debug)]
pub struct CavityState<T> {
    center: Point3<T>,
    cells: Vec<Cell<T>>,
    /// Strict positivity margin for the constraints, scaled by the cavity
    /// bounding box (units of 6 x volume).
    feas_eps: T,
    /// Cavity bounding-box diagonal, kept for step-length heuristics.
    diag: T,
}

impl<T: Real> CavityState<T> {
    /// Builds the cavity from raw opposite-face triples ordered so that
    /// `(center, triple)` has positive signed volume.
    pub fn from_triples(
        center: Point3<T>,
        triples: &[[Point3<T>; 3]],
        scheme: WeightScheme,
    ) -> Result<Self, Error> {
        let mut cells = Vec::with_capacity(triples.len());
        let mut all_points: Vec<Point3<T>> = vec![center];
        for t in triples {
            all_points.extend_from_slice(t);
            // Positive orientation of (center, j, k, l) corresponds to the
            // cell volume (v - l) . ((k - l) x (j - l)) / 6; swapping the
            // first two entries puts the triple in the order expected by the
            // cross product below.
            let (v_mj, v_mk, v_ml) = (t[1], t[0], t[2]);
            let s = (v_mj - v_ml).cross(v_mk - v_ml);
            if s.norm_squared() == T::zero() {
                return Err(Error::DegenerateFace);
            }
            let rho = match scheme {
                WeightScheme::Constant => T::one(),
                WeightScheme::InverseOppositeArea => {
                    let area = opposite_face_area(v_mj, v_mk, v_ml)?;
                    T::one() / area
                }
            };
            cells.push(Cell {
                anchor: v_ml,
                s,
                rho,
            });
        }
        let diag = bbox_diag(all_points);
        let feas_eps = T::of(1e-14) * diag * diag * diag;
        Ok(Self {
            center,
            cells,
            feas_eps,
            diag,
        })
    }

    /// Builds the cavity for a mesh one-ring under the given scheme. The
    /// feasibility margin is tied to the mesh bounding box, so every cavity
    /// in the mesh agrees on what counts as strictly positive.
    pub fn from_ring(mesh: &TetMesh, ring: &OneRing, scheme: WeightScheme) -> Result<Self, Error>
    where
        T: Real,
    {
        let center64 = mesh.position(ring.center);
        let conv = |p: crate::Point3| Point3::new(T::of(p.x), T::of(p.y), T::of(p.z));
        let triples: Vec<[Point3<T>; 3]> = ring
            .cells
            .iter()
            .map(|c| c.triple.map(|v| conv(mesh.position(v))))
            .collect();
        let mut state = Self::from_triples(conv(center64), &triples, scheme)?;
        let d = T::of(mesh.bbox_diag());
        state.feas_eps = T::of(1e-14) * d * d * d;
        Ok(state)
    }

    pub fn center(&self) -> Point3<T> {
        self.center
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn diag(&self) -> T {
        self.diag
    }

    /// Strict positivity margin used by [`Self::is_feasible`].
    pub fn feas_eps(&self) -> T {
        self.feas_eps
    }

    pub fn weights(&self) -> Vec<T> {
        self.cells.iter().map(|c| c.rho).collect()
    }

    /// Volume of cell `m` as a function of the center position.
    pub fn cell_volume(&self, m: usize, v: Point3<T>) -> T {
        let c = &self.cells[m];
        (v - c.anchor).dot(c.s) / T::of(6.0)
    }

    /// `E(v) = sum rho_m V_m(v)^2`.
    pub fn energy(&self, v: Point3<T>) -> T {
        let six = T::of(6.0);
        self.cells.iter().fold(T::zero(), |acc, c| {
            let vol = (v - c.anchor).dot(c.s) / six;
            acc + c.rho * vol * vol
        })
    }

    /// `g(v) = sum (1/3) rho_m V_m(v) s_m`.
    pub fn gradient(&self, v: Point3<T>) -> Vec3<T> {
        let six = T::of(6.0);
        let third = T::one() / T::of(3.0);
        self.cells.iter().fold(Vec3::zero(), |acc, c| {
            let vol = (v - c.anchor).dot(c.s) / six;
            acc + c.s.scale(third * c.rho * vol)
        })
    }

    /// `H = (1/18) sum rho_m s_m (x) s_m`; independent of the center
    /// position because the energy is quadratic.
    pub fn hessian(&self) -> Mat3<T> {
        let mut h = Mat3::zero();
        let w = T::one() / T::of(18.0);
        for c in &self.cells {
            h.add_outer(c.s, c.rho * w);
        }
        h
    }

    /// True iff every constraint `f_m(v) = 6 V_m(v)` clears the strict
    /// positivity margin.
    pub fn is_feasible(&self, v: Point3<T>) -> bool {
        self.cells
            .iter()
            .all(|c| (v - c.anchor).dot(c.s) > self.feas_eps)
    }
}
