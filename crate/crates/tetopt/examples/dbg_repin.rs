use rand::SeedableRng;
use tetopt::mesh::OperationLog;
use tetopt::pipeline::{run_pipeline, squared_volume_minimizing, PipelineConfig, Stage};
use tetopt::quality::build_report;
use tetopt::samples;
use tetopt::seedgen::{ball_seed, DomainSpec};

fn cv(r: &tetopt::quality::QualityReport) -> f64 { r.volume_std / r.volume_mean }

fn main() {
    // Criterion 6 arms under current code.
    for t in [0.3, 0.2, 0.1] {
        let mut mesh = ball_seed(&DomainSpec::ball(1.0, t), 0).unwrap();
        let seed_cv = cv(&build_report(&mesh).unwrap());
        let cfg = PipelineConfig::new(t);
        let mut log = OperationLog::default();
        let st = squared_volume_minimizing(&mut mesh, Stage::Volume, &cfg, &mut log).unwrap();
        println!("stage1 t={t}: seed {seed_cv:.4} -> CV {:.4} ({} iters conv {})",
            cv(&build_report(&mesh).unwrap()), st.iterations.len(), st.converged_by_tolerance);
    }
    // Criterion 7 arms at two candidate scales.
    for t in [0.15, 0.2] {
        let seed = ball_seed(&DomainSpec::ball(1.0, t), 0).unwrap();
        let arm = |v: bool, a: bool| {
            let mut cfg = PipelineConfig::new(t);
            cfg.volume_stage = v;
            cfg.angle_stage = a;
            let out = run_pipeline(seed.clone(), &cfg).unwrap();
            (out.report.bad_fraction_percent, cv(&out.report))
        };
        let f = arm(true, true);
        let a = arm(false, true);
        let v = arm(true, false);
        println!("ablate t={t}: full P {:.4} CV {:.4} | angle P {:.4} CV {:.4} | volume P {:.4} CV {:.4}",
            f.0, f.1, a.0, a.1, v.0, v.1);
    }
    // Criterion 10 cube fixture scan.
    for t in [0.2, 0.22, 0.25, 0.28] {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1010);
        let mesh = samples::perturbed_cube_mesh(4, 0.04, &mut rng);
        let out = run_pipeline(mesh, &PipelineConfig::new(t)).unwrap();
        let info: Vec<String> = out.trace.stages.iter()
            .map(|s| format!("{:?} {} conv={}", s.stage, s.iterations.len(), s.converged_by_tolerance))
            .collect();
        println!("cube t={t}: {}", info.join(", "));
    }
}
