//! Per-vertex solver: Newton steps on the convex cavity energy with a
//! backtracking line search that never leaves the feasible region.
//!
//! The energy is an exact quadratic, so with a nonsingular Hessian the first
//! full Newton step lands on the unconstrained minimizer; the line search
//! only shrinks steps that would invert a cell.

use thiserror::Error;

use crate::energy::{CavityState, WeightScheme};
use crate::error::Error as MeshError;
use crate::geometry::{Point3, Vec3};
use crate::mesh::TetMesh;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug)]
pub struct SolverConfig {
    /// Energy-change tolerance, relative to the cavity's initial energy.
    pub eps_energy: f64,
    /// Initial line-search step.
    pub alpha0: f64,
    /// Backtracking factor.
    pub shrink: f64,
    /// Sufficient-decrease constant.
    pub armijo_c: f64,
    /// Smallest step tried before giving up.
    pub alpha_min: f64,
    pub max_newton_iters: usize,
    /// Relative ridge added to a numerically singular Hessian.
    pub regularization: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eps_energy: 1e-10,
            alpha0: 1.0,
            shrink: 0.8,
            armijo_c: 0.01,
            alpha_min: 1e-12,
            max_newton_iters: 30,
            regularization: 1e-12,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), MeshError> {
        let ok = self.shrink > 0.0
            && self.shrink < 1.0
            && self.armijo_c > 0.0
            && self.armijo_c < 1.0
            && self.alpha_min > 0.0
            && self.eps_energy > 0.0
            && self.alpha0 > 0.0
            && self.max_newton_iters >= 1;
        if ok {
            Ok(())
        } else {
            Err(MeshError::InvalidConfig(
                "line-search parameters out of range".into(),
            ))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Converged,
    StepTooSmall,
    IterCap,
}

#[derive(Clone, Debug)]
pub struct SolveOutcome<T> {
    pub position: Point3<T>,
    pub energy: T,
    pub iterations: usize,
    pub termination: Termination,
    pub energy_trace: Vec<T>,
}

/// The line search was asked to start from an infeasible position.
#[derive(Error, Debug, Clone, Copy, PartialEq, Eq)]
#[error("line search started outside the feasible region")]
pub struct InfeasibleStart;

/// Newton direction `d = -(H + lambda I)^{-1} g`, with the ridge applied
/// only when the Hessian is numerically singular (condition estimate above
/// 1e12). Returns the zero direction at a stationary point.
pub fn newton_step<T: Real>(
    state: &CavityState<T>,
    v: Point3<T>,
    cfg: &SolverConfig,
) -> Vec3<T> {
    let g = state.gradient(v);
    if g.norm() == T::zero() {
        return Vec3::zero();
    }
    let h = state.hessian();
    let eig = h.sym_eigenvalues();
    let well_conditioned =
        eig[0] > T::zero() && eig[2] / eig[0] <= T::of(1e12) && eig[2].is_finite();
    let solve_with = |lambda: T| -> Option<Vec3<T>> {
        let mut m = h;
        if lambda > T::zero() {
            for k in 0..3 {
                m.set(k, k, m.get(k, k) + lambda);
            }
        }
        let d = m.cholesky_solve(-g)?;
        // One step of iterative refinement tightens the residual enough for
        // the quadratic-exactness guarantee.
        let r = -g - m.mul_vec(d);
        let dd = m.cholesky_solve(r)?;
        Some(d + dd)
    };
    let d = if well_conditioned {
        solve_with(T::zero())
    } else {
        let mut lambda = T::of(1e-12).max(T::of(cfg.regularization)) * h.trace() / T::of(3.0);
        let mut found = None;
        for _ in 0..40 {
            if let Some(d) = solve_with(lambda) {
                found = Some(d);
                break;
            }
            lambda = lambda * T::of(10.0);
        }
        found
    };
    match d {
        Some(d) if d.is_finite() && d.dot(g) <= T::zero() => d,
        // Fall back to scaled steepest descent if the factorization failed.
        _ => -g.scale(T::of(3.0) / h.trace().max(T::of(1e-300))),
    }
}

/// Backtracking line search along `d` from `v`: returns the largest step in
/// `{alpha0 * shrink^k}` that keeps every cell strictly positive and
/// satisfies the sufficient-decrease condition, or zero when no step above
/// `alpha_min` qualifies.
pub fn line_search<T: Real>(
    state: &CavityState<T>,
    v: Point3<T>,
    d: Vec3<T>,
    cfg: &SolverConfig,
) -> Result<T, InfeasibleStart> {
    if !state.is_feasible(v) {
        return Err(InfeasibleStart);
    }
    let alpha0 = T::of(cfg.alpha0);
    if d.norm() == T::zero() {
        return Ok(alpha0);
    }
    let e0 = state.energy(v);
    let gd = state.gradient(v).dot(d);
    let c = T::of(cfg.armijo_c);
    let shrink = T::of(cfg.shrink);
    let alpha_min = T::of(cfg.alpha_min);
    let mut alpha = alpha0;
    while alpha >= alpha_min {
        let cand = v + d.scale(alpha);
        if state.is_feasible(cand) && state.energy(cand) <= e0 + c * alpha * gd {
            return Ok(alpha);
        }
        alpha = alpha * shrink;
    }
    Ok(T::zero())
}

/// Minimizes the cavity energy from `start`. The energy trace is
/// nonincreasing and every iterate is feasible.
pub fn solve_cavity<T: Real>(
    state: &CavityState<T>,
    start: Point3<T>,
    cfg: &SolverConfig,
) -> Result<SolveOutcome<T>, InfeasibleStart> {
    if !state.is_feasible(start) {
        return Err(InfeasibleStart);
    }
    let mut pos = start;
    let mut energy = state.energy(pos);
    let mut trace = vec![energy];
    let eps = T::of(cfg.eps_energy) * energy.max(T::of(f64::MIN_POSITIVE));
    let mut termination = Termination::IterCap;
    let mut iterations = 0;
    for _ in 0..cfg.max_newton_iters {
        let d = newton_step(state, pos, cfg);
        if d.norm() == T::zero() {
            termination = Termination::Converged;
            break;
        }
        let alpha = line_search(state, pos, d, cfg)?;
        if alpha == T::zero() {
            termination = Termination::StepTooSmall;
            break;
        }
        iterations += 1;
        pos = pos + d.scale(alpha);
        let next = state.energy(pos);
        trace.push(next);
        let done = (next - energy).abs() <= eps;
        energy = next;
        if done {
            termination = Termination::Converged;
            break;
        }
    }
    Ok(SolveOutcome {
        position: pos,
        energy,
        iterations,
        termination,
        energy_trace: trace,
    })
}

/// Solves the cavity of one interior mesh vertex in place: freezes the
/// weights, runs the Newton loop and writes the final position back.
pub fn solve_vertex(
    mesh: &mut TetMesh,
    v: usize,
    scheme: WeightScheme,
    cfg: &SolverConfig,
) -> Result<SolveOutcome<f64>, MeshError> {
    let ring = mesh.one_ring(v)?;
    let cavity = CavityState::<f64>::from_ring(mesh, &ring, scheme)?;
    let outcome = solve_cavity(&cavity, mesh.position(v), cfg)
        .map_err(|InfeasibleStart| MeshError::InfeasibleStart(v))?;
    mesh.set_position(v, outcome.position);
    debug_assert!(
        ring.cells
            .iter()
            .all(|c| crate::geometry::signed_volume(&mesh.tet_geom(c.tet)) > 0.0),
        "cavity must stay positive after a solve"
    );
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type P = Point3<f64>;

    fn octa_cavity() -> CavityState<f64> {
        let triples = samples::octahedron_ring_triples();
        CavityState::from_triples(P::new(0.0, 0.0, 0.0), &triples, WeightScheme::Constant).unwrap()
    }

    #[test]
    fn zero_direction_at_stationary_point() {
        let cav = octa_cavity();
        let d = newton_step(&cav, P::new(0.0, 0.0, 0.0), &SolverConfig::default());
        assert_eq!(d.norm(), 0.0);
    }

    #[test]
    fn one_newton_step_hits_quadratic_minimizer() {
        let cav = octa_cavity();
        let cfg = SolverConfig::default();
        let v = P::new(0.1, 0.0, 0.0);
        let d = newton_step(&cav, v, &cfg);
        assert!(d.x < 0.0, "direction points back toward the origin");
        let landed = v + d;
        // The symmetric cavity's minimizer is the origin; one exact Newton
        // step on a quadratic reaches it.
        assert!(landed.to_vec().norm() < 1e-12, "{landed:?}");
    }

    #[test]
    fn rank_deficient_hessian_is_regularized() {
        let triples = samples::parallel_plane_cavity();
        let cav =
            CavityState::from_triples(P::new(0.0, 0.0, 0.0), &triples, WeightScheme::Constant)
                .unwrap();
        let cfg = SolverConfig::default();
        let v = P::new(0.0, 0.0, 0.3);
        let g = cav.gradient(v);
        assert!(g.norm() > 0.0);
        let d = newton_step(&cav, v, &cfg);
        assert!(d.is_finite());
        assert!(d.dot(g) < 0.0);
    }

    #[test]
    fn line_search_zero_direction_returns_alpha0() {
        let cav = octa_cavity();
        let cfg = SolverConfig::default();
        let v = P::new(0.2, 0.0, 0.0);
        let a = line_search(&cav, v, Vec3::zero(), &cfg).unwrap();
        assert_eq!(a, cfg.alpha0);
        assert_eq!(cav.energy(v), cav.energy(v + Vec3::zero().scale(a)));
    }

    #[test]
    fn line_search_keeps_cells_positive() {
        let cav = octa_cavity();
        let cfg = SolverConfig::default();
        let v = P::new(0.5, 0.0, 0.0);
        let d = newton_step(&cav, v, &cfg);
        let a = line_search(&cav, v, d, &cfg).unwrap();
        assert!(a > 0.0);
        let landed = v + d.scale(a);
        for m in 0..cav.cell_count() {
            assert!(cav.cell_volume(m, landed) > 0.0, "cell {m} stayed positive");
        }
    }

    #[test]
    fn line_search_shrinks_past_inverting_step() {
        // Start near the +x face of the octahedron and aim at a point that
        // leaves the cavity at full step but re-enters at 0.8 of it, with a
        // slightly lower energy so the decrease condition holds.
        let cav = octa_cavity();
        let cfg = SolverConfig::default();
        let v = P::new(0.92, 0.0, 0.0);
        let target = P::new(0.0, 0.9, 0.0);
        let d = (target - v).scale(1.0 / cfg.shrink);
        assert!(cav.gradient(v).dot(d) < 0.0, "descent direction");
        assert!(!cav.is_feasible(v + d));
        let a = line_search(&cav, v, d, &cfg).unwrap();
        assert!((a - cfg.alpha0 * cfg.shrink).abs() < 1e-15, "alpha {a}");
    }

    #[test]
    fn line_search_rejects_infeasible_start() {
        let cav = octa_cavity();
        let cfg = SolverConfig::default();
        let r = line_search(&cav, P::new(2.0, 0.0, 0.0), Vec3::new(-1.0, 0.0, 0.0), &cfg);
        assert_eq!(r, Err(InfeasibleStart));
    }

    #[test]
    fn line_search_gives_up_below_alpha_min() {
        // Start within a hair of the +x+y+z face plane and walk a descent
        // direction that exits through that face faster than the ladder can
        // shrink: every alpha above alpha_min is infeasible.
        let triples = samples::octahedron_ring_triples();
        let face = triples
            .iter()
            .find(|t| t.iter().all(|p| p.x + p.y + p.z > 0.99))
            .copied()
            .unwrap();
        let cav = octa_cavity();
        let cfg = SolverConfig::default();
        // f(v) = (v - anchor) . s for the found face; place v so that f is
        // only half a margin above the strict feasibility threshold.
        let (v_mj, v_mk, v_ml) = (face[1], face[0], face[2]);
        let s = (v_mj - v_ml).cross(v_mk - v_ml);
        let eps = cav.feas_eps();
        let q = P::new(0.9, 0.05, 0.05);
        let f_q = (q - v_ml).dot(s);
        let v = q + s.scale((1.5 * eps - f_q) / s.norm_squared());
        assert!(cav.is_feasible(v));
        let d = Vec3::new(-1.0, 0.7, 0.8);
        assert!(cav.gradient(v).dot(d) < 0.0, "descent direction");
        assert!(d.dot(s) < 0.0, "direction exits through the face");
        let a = line_search(&cav, v, d, &cfg).unwrap();
        assert_eq!(a, 0.0);
    }

    #[test]
    fn octahedron_solve_converges_to_center() {
        for scheme in [WeightScheme::Constant, WeightScheme::InverseOppositeArea] {
            let mut mesh = samples::octahedron_mesh();
            mesh.set_position(0, P::new(0.2, 0.1, -0.05));
            let out = solve_vertex(&mut mesh, 0, scheme, &SolverConfig::default()).unwrap();
            assert_eq!(out.termination, Termination::Converged);
            assert!(
                mesh.position(0).to_vec().norm() < 1e-8,
                "{:?}",
                mesh.position(0)
            );
            mesh.validate().unwrap();
        }
    }

    #[test]
    fn solve_rejects_boundary_vertex_and_infeasible_start() {
        let mut mesh = samples::octahedron_mesh();
        let r = solve_vertex(&mut mesh, 1, WeightScheme::Constant, &SolverConfig::default());
        assert!(matches!(r, Err(MeshError::BoundaryVertex(1))));

        let triples = samples::octahedron_ring_triples();
        let cav =
            CavityState::from_triples(P::new(0.0, 0.0, 0.0), &triples, WeightScheme::Constant)
                .unwrap();
        let r = solve_cavity(&cav, P::new(3.0, 0.0, 0.0), &SolverConfig::default());
        assert_eq!(r.unwrap_err(), InfeasibleStart);
    }

    #[test]
    fn energy_trace_monotone_and_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let triples = samples::random_cavity(&mut rng);
            for scheme in [WeightScheme::Constant, WeightScheme::InverseOppositeArea] {
                let cav =
                    CavityState::from_triples(P::new(0.0, 0.0, 0.0), &triples, scheme).unwrap();
                let start = P::new(
                    rng.gen_range(-0.15..0.15),
                    rng.gen_range(-0.15..0.15),
                    rng.gen_range(-0.15..0.15),
                );
                if !cav.is_feasible(start) {
                    continue;
                }
                let out = solve_cavity(&cav, start, &SolverConfig::default()).unwrap();
                for w in out.energy_trace.windows(2) {
                    assert!(w[1] <= w[0] + 1e-12);
                }
                assert!(cav.is_feasible(out.position));
            }
        }
    }

    #[test]
    fn minimizer_unique_across_starts() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..50 {
            let triples = samples::random_cavity(&mut rng);
            let cav =
                CavityState::from_triples(P::new(0.0, 0.0, 0.0), &triples, WeightScheme::Constant)
                    .unwrap();
            let eig = cav.hessian().sym_eigenvalues();
            if eig[0] <= 1e-9 * eig[2] {
                continue; // rank-deficient cavities excluded
            }
            let mut finals = Vec::new();
            let mut tries = 0;
            while finals.len() < 5 && tries < 200 {
                tries += 1;
                let start = P::new(
                    rng.gen_range(-0.4..0.4),
                    rng.gen_range(-0.4..0.4),
                    rng.gen_range(-0.4..0.4),
                );
                if !cav.is_feasible(start) {
                    continue;
                }
                let out = solve_cavity(&cav, start, &SolverConfig::default()).unwrap();
                finals.push(out.position);
            }
            assert_eq!(finals.len(), 5);
            for pair in finals.windows(2) {
                assert!((pair[0] - pair[1]).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn five_cell_cavity_minimizer_matches_grid_oracle() {
        // Oracle: dense grid scan over the feasible box, then Nelder-Mead
        // refinement on the cavity energy; fully independent of the Newton
        // path.
        let triples = samples::five_cell_cavity();
        let cav =
            CavityState::from_triples(P::new(0.0, 0.0, 0.0), &triples, WeightScheme::Constant)
                .unwrap();
        let out = solve_cavity(&cav, P::new(0.0, 0.0, 0.0), &SolverConfig::default()).unwrap();

        let n = 101;
        let lo = -1.5;
        let hi = 1.5;
        let mut best = (f64::INFINITY, P::new(0.0, 0.0, 0.0));
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let p = P::new(
                        lo + (hi - lo) * i as f64 / (n - 1) as f64,
                        lo + (hi - lo) * j as f64 / (n - 1) as f64,
                        lo + (hi - lo) * k as f64 / (n - 1) as f64,
                    );
                    if !cav.is_feasible(p) {
                        continue;
                    }
                    let e = cav.energy(p);
                    if e < best.0 {
                        best = (e, p);
                    }
                }
            }
        }
        let refined = nelder_mead(&cav, best.1, 0.02, 4000);
        assert!(
            (out.position - refined).norm() < 1e-3,
            "solver {:?} vs oracle {refined:?}",
            out.position
        );
        assert!(out.energy <= best.0 + 1e-12);
    }

    fn nelder_mead(cav: &CavityState<f64>, start: P, scale: f64, iters: usize) -> P {
        let f = |p: P| {
            if cav.is_feasible(p) {
                cav.energy(p)
            } else {
                f64::INFINITY
            }
        };
        let mut simplex = vec![
            start,
            P::new(start.x + scale, start.y, start.z),
            P::new(start.x, start.y + scale, start.z),
            P::new(start.x, start.y, start.z + scale),
        ];
        for _ in 0..iters {
            simplex.sort_by(|a, b| f(*a).partial_cmp(&f(*b)).unwrap());
            let centroid = P::new(
                (simplex[0].x + simplex[1].x + simplex[2].x) / 3.0,
                (simplex[0].y + simplex[1].y + simplex[2].y) / 3.0,
                (simplex[0].z + simplex[1].z + simplex[2].z) / 3.0,
            );
            let worst = simplex[3];
            let refl = centroid + (centroid - worst);
            if f(refl) < f(simplex[2]) {
                simplex[3] = if f(refl) < f(simplex[0]) {
                    let exp = centroid + (centroid - worst).scale(2.0);
                    if f(exp) < f(refl) {
                        exp
                    } else {
                        refl
                    }
                } else {
                    refl
                };
            } else {
                let contr = centroid + (worst - centroid).scale(0.5);
                if f(contr) < f(worst) {
                    simplex[3] = contr;
                } else {
                    for i in 1..4 {
                        simplex[i] = simplex[0].midpoint(simplex[i]);
                    }
                }
            }
        }
        simplex.sort_by(|a, b| f(*a).partial_cmp(&f(*b)).unwrap());
        simplex[0]
    }
}
