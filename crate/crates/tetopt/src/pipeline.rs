//! The optimization driver: per-stage outer loops that interleave sizing
//! passes, flip passes and sequential per-vertex Newton solves, watched by a
//! dihedral-angle convergence monitor.
//!
//! A full run executes the volume-oriented stage (constant weights) and then
//! the angle-oriented stage (inverse opposite-area weights).

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::energy::WeightScheme;
use crate::error::Error;
use crate::geometry::opposite_face_vector;
use crate::mesh::{OpKind, OpRecord, OperationLog, TetMesh, FACE_ORDER};
use crate::quality::{build_report, dihedral_stats, QualityReport};
use crate::remesh::{improvement_pass, sizing_pass, SizingRule};
use crate::solver::{solve_vertex, SolverConfig, Termination};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    Volume,
    Angle,
}

impl Stage {
    pub fn scheme(self) -> WeightScheme {
        match self {
            Stage::Volume => WeightScheme::Constant,
            Stage::Angle => WeightScheme::InverseOppositeArea,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PipelineConfig {
    pub target_edge: f64,
    /// Outer-loop tolerance on the change of the average minimum dihedral
    /// angle, in degrees.
    pub eps_theta: f64,
    pub max_outer_iters: usize,
    /// Tets with a dihedral below this angle are offered to the flip pass.
    pub angle_focus: f64,
    pub solver: SolverConfig,
    pub volume_stage: bool,
    pub angle_stage: bool,
    pub seed: u64,
}

impl PipelineConfig {
    pub fn new(target_edge: f64) -> Self {
        Self {
            target_edge,
            eps_theta: 0.01,
            max_outer_iters: 100,
            angle_focus: 40.0,
            solver: SolverConfig::default(),
            volume_stage: true,
            angle_stage: true,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.target_edge <= 0.0 || self.eps_theta <= 0.0 || self.max_outer_iters < 1 {
            return Err(Error::InvalidConfig(
                "target edge, eps-theta and max iterations must be positive".into(),
            ));
        }
        self.solver.validate()
    }
}

/// One outer iteration of a stage as recorded in the run trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub stage: Stage,
    pub outer_iter: usize,
    /// Global stage energy before the vertex sweep (after sizing/flips).
    pub energy_pre_sweep: f64,
    /// Global stage energy after the vertex sweep.
    pub total_energy: f64,
    pub theta_min: f64,
    pub theta_min_avg: f64,
    pub tet_count: usize,
    pub splits: usize,
    pub collapses: usize,
    pub flips23: usize,
    pub edge_removals: usize,
    pub solves: usize,
    pub solve_skips: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTrace {
    pub stage: Stage,
    pub iterations: Vec<IterationRecord>,
    pub converged_by_tolerance: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub stages: Vec<StageTrace>,
    /// Wall time is informational only and excluded from serialized reports
    /// so identical runs produce byte-identical output.
    #[serde(skip)]
    pub wall_time_s: f64,
}

/// Global stage energy, recomputed from scratch: the sum over live tets of
/// `rho * V^2`. For the angle stage the per-tet weight is the mean of the
/// four per-face inverse areas (the per-vertex cavity weights have no single
/// per-tet value).
pub fn global_energy(mesh: &TetMesh, scheme: WeightScheme) -> f64 {
    let mut total = 0.0;
    for t in mesh.live_tets() {
        let g = mesh.tet_geom(t);
        let v = crate::geometry::signed_volume(&g);
        let rho = match scheme {
            WeightScheme::Constant => 1.0,
            WeightScheme::InverseOppositeArea => {
                let p = g.points();
                let mut sum = 0.0;
                for f in FACE_ORDER {
                    let area = opposite_face_vector(p[f[0]], p[f[1]], p[f[2]]).norm() / 2.0;
                    sum += 1.0 / area;
                }
                sum / 4.0
            }
        };
        total += rho * v * v;
    }
    total
}

/// Runs one stage to convergence: repeats sizing, connectivity improvement
/// and a sequential per-vertex solve sweep until the average minimum
/// dihedral angle settles within `eps_theta` or the iteration cap is hit.
pub fn squared_volume_minimizing(
    mesh: &mut TetMesh,
    stage: Stage,
    cfg: &PipelineConfig,
    log: &mut OperationLog,
) -> Result<StageTrace, Error> {
    cfg.validate()?;
    let scheme = stage.scheme();
    let rule = SizingRule::new(cfg.target_edge);
    let initial_boundary = {
        let mut b: Vec<[usize; 3]> = mesh.boundary_faces().iter().copied().collect();
        b.sort_unstable();
        b
    };
    let mut prev_theta = dihedral_stats(mesh)?.theta_min_avg;
    let mut iterations = Vec::new();
    let mut converged = false;

    for outer_iter in 1..=cfg.max_outer_iters {
        let sizing = sizing_pass(mesh, &rule, log);
        let flips = improvement_pass(mesh, cfg.angle_focus, log);

        let energy_pre_sweep = global_energy(mesh, scheme);
        let mut solves = 0;
        let mut solve_skips = 0;
        let vertices: Vec<usize> = mesh.interior_vertices().collect();
        for v in vertices {
            match solve_vertex(mesh, v, scheme, &cfg.solver) {
                Ok(outcome) => {
                    solves += 1;
                    if outcome.termination == Termination::StepTooSmall {
                        log.push(OpRecord {
                            kind: OpKind::VertexSolve,
                            involved: vec![v],
                            accepted: true,
                            reason: "line search exhausted".into(),
                            min_dihedral_before: f64::NAN,
                            min_dihedral_after: f64::NAN,
                            volume_before: f64::NAN,
                            volume_after: f64::NAN,
                        });
                    }
                }
                Err(Error::DegenerateFace) => {
                    // An adaptive weight is undefined on this cavity; skip
                    // the vertex and let the connectivity passes repair it.
                    solve_skips += 1;
                    log.push(OpRecord {
                        kind: OpKind::VertexSolve,
                        involved: vec![v],
                        accepted: false,
                        reason: Error::DegenerateFace.to_string(),
                        min_dihedral_before: f64::NAN,
                        min_dihedral_after: f64::NAN,
                        volume_before: f64::NAN,
                        volume_after: f64::NAN,
                    });
                }
                Err(e) => return Err(e),
            }
        }

        mesh.validate()?;
        let boundary_now = {
            let mut b: Vec<[usize; 3]> = mesh.boundary_faces().iter().copied().collect();
            b.sort_unstable();
            b
        };
        if boundary_now != initial_boundary {
            return Err(Error::ValidationFailure(
                "boundary face set changed during optimization".into(),
            ));
        }

        let stats = dihedral_stats(mesh)?;
        iterations.push(IterationRecord {
            stage,
            outer_iter,
            energy_pre_sweep,
            total_energy: global_energy(mesh, scheme),
            theta_min: stats.theta_min,
            theta_min_avg: stats.theta_min_avg,
            tet_count: mesh.tet_count_alive(),
            splits: sizing.splits,
            collapses: sizing.collapses,
            flips23: flips.flips23,
            edge_removals: flips.edge_removals,
            solves,
            solve_skips,
        });
        if (stats.theta_min_avg - prev_theta).abs() <= cfg.eps_theta {
            converged = true;
            break;
        }
        prev_theta = stats.theta_min_avg;
    }

    Ok(StageTrace {
        stage,
        iterations,
        converged_by_tolerance: converged,
    })
}

pub struct PipelineOutput {
    pub mesh: TetMesh,
    pub report: QualityReport,
    pub trace: RunTrace,
    pub log: OperationLog,
}

/// Full run: volume-oriented stage, then angle-oriented stage, then the
/// quality report. Stages can be toggled off individually.
pub fn run_pipeline(mut mesh: TetMesh, cfg: &PipelineConfig) -> Result<PipelineOutput, Error> {
    cfg.validate()?;
    mesh.validate()?;
    let start = Instant::now();
    let mut log = OperationLog::default();
    let mut trace = RunTrace::default();
    if cfg.volume_stage {
        let st = squared_volume_minimizing(&mut mesh, Stage::Volume, cfg, &mut log)?;
        trace.stages.push(st);
    }
    if cfg.angle_stage {
        let st = squared_volume_minimizing(&mut mesh, Stage::Angle, cfg, &mut log)?;
        trace.stages.push(st);
    }
    trace.wall_time_s = start.elapsed().as_secs_f64();
    let report = build_report(&mesh)?;
    Ok(PipelineOutput {
        mesh,
        report,
        trace,
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn stationary_fixture_terminates_immediately() {
        let mut mesh = samples::octahedron_mesh();
        let before: Vec<crate::Point3> = mesh.live_vertices().map(|v| mesh.position(v)).collect();
        let cfg = PipelineConfig::new(1.0);
        let mut log = OperationLog::default();
        let st = squared_volume_minimizing(&mut mesh, Stage::Volume, &cfg, &mut log).unwrap();
        assert!(st.converged_by_tolerance);
        assert!(st.iterations.len() <= 2, "{}", st.iterations.len());
        let after: Vec<crate::Point3> = mesh.live_vertices().map(|v| mesh.position(v)).collect();
        for (b, a) in before.iter().zip(&after) {
            assert!((*b - *a).norm() < 1e-12, "no vertex moved");
        }
    }

    #[test]
    fn perturbed_cube_energy_monotone_within_sweeps() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mesh = samples::perturbed_cube_mesh(4, 0.04, &mut rng);
        let mut cfg = PipelineConfig::new(0.25);
        cfg.max_outer_iters = 12;
        let out = run_pipeline(mesh, &cfg).unwrap();
        let volume_stage = &out.trace.stages[0];
        for it in &volume_stage.iterations {
            // The sweep never raises the constant-weight global energy.
            assert!(
                it.total_energy <= it.energy_pre_sweep * (1.0 + 1e-12),
                "iter {}: {} > {}",
                it.outer_iter,
                it.total_energy,
                it.energy_pre_sweep
            );
        }
        out.mesh.validate().unwrap();
    }

    #[test]
    fn cube_volume_uniformity_improves() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mesh = samples::perturbed_cube_mesh(4, 0.05, &mut rng);
        let before = build_report(&mesh).unwrap();
        let mut cfg = PipelineConfig::new(0.25);
        cfg.angle_stage = false;
        cfg.max_outer_iters = 30;
        let out = run_pipeline(mesh, &cfg).unwrap();
        let cv_before = before.volume_std / before.volume_mean;
        let cv_after = out.report.volume_std / out.report.volume_mean;
        assert!(
            cv_after < cv_before,
            "volume spread must shrink: {cv_after} vs {cv_before}"
        );
    }

    #[test]
    fn stage_toggles_respected() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mesh = samples::perturbed_cube_mesh(3, 0.03, &mut rng);
        let mut cfg = PipelineConfig::new(1.0 / 3.0);
        cfg.max_outer_iters = 3;
        cfg.volume_stage = false;
        let out = run_pipeline(mesh.clone(), &cfg).unwrap();
        assert_eq!(out.trace.stages.len(), 1);
        assert_eq!(out.trace.stages[0].stage, Stage::Angle);

        cfg.volume_stage = true;
        cfg.angle_stage = false;
        let out = run_pipeline(mesh, &cfg).unwrap();
        assert_eq!(out.trace.stages.len(), 1);
        assert_eq!(out.trace.stages[0].stage, Stage::Volume);
    }

    #[test]
    fn invalid_config_rejected() {
        let mesh = samples::octahedron_mesh();
        let mut cfg = PipelineConfig::new(0.5);
        cfg.eps_theta = 0.0;
        assert!(matches!(
            run_pipeline(mesh, &cfg),
            Err(Error::InvalidConfig(_))
        ));
    }
}
