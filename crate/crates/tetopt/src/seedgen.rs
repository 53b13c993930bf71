//! Seed meshes for convex analytic domains: a structured cube decomposition
//! and a ball meshed as the Delaunay tetrahedralization of a body-centered
//! cubic interior lattice plus quasi-uniform sphere samples.

use crate::delaunay::delaunay_points;
use crate::error::Error;
use crate::mesh::TetMesh;
use crate::Point3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DomainShape {
    Cube { side: f64 },
    Ball { radius: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DomainSpec {
    pub shape: DomainShape,
    pub target_edge: f64,
}

impl DomainSpec {
    pub fn cube(side: f64, target_edge: f64) -> Self {
        Self {
            shape: DomainShape::Cube { side },
            target_edge,
        }
    }

    pub fn ball(radius: f64, target_edge: f64) -> Self {
        Self {
            shape: DomainShape::Ball { radius },
            target_edge,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let extent = match self.shape {
            DomainShape::Cube { side } => side,
            DomainShape::Ball { radius } => 2.0 * radius,
        };
        if extent <= 0.0 || self.target_edge <= 0.0 || self.target_edge >= extent {
            return Err(Error::InvalidConfig(
                "target edge must be positive and smaller than the domain".into(),
            ));
        }
        Ok(())
    }
}

/// Structured cube seed: a grid of cells of size close to the target edge,
/// each cut into six tets along its main diagonal.
pub fn cube_seed(spec: &DomainSpec) -> Result<TetMesh, Error> {
    spec.validate()?;
    let DomainShape::Cube { side } = spec.shape else {
        return Err(Error::InvalidConfig("cube_seed expects a cube domain".into()));
    };
    let n = (side / spec.target_edge).round() as usize;
    if n < 2 {
        return Err(Error::ResolutionTooCoarse);
    }
    let stride = n + 1;
    let idx = |i: usize, j: usize, k: usize| (i * stride + j) * stride + k;
    let mut pts = Vec::with_capacity(stride * stride * stride);
    for i in 0..stride {
        for j in 0..stride {
            for k in 0..stride {
                pts.push(Point3::new(
                    side * i as f64 / n as f64,
                    side * j as f64 / n as f64,
                    side * k as f64 / n as f64,
                ));
            }
        }
    }
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut tets = Vec::with_capacity(n * n * n * 6);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for perm in PERMS {
                    let mut c = [i, j, k];
                    let mut quad = [idx(c[0], c[1], c[2]); 4];
                    for (step, &axis) in perm.iter().enumerate() {
                        c[axis] += 1;
                        quad[step + 1] = idx(c[0], c[1], c[2]);
                    }
                    tets.push(quad);
                }
            }
        }
    }
    TetMesh::from_parts(pts, tets)
}

/// Quasi-uniform unit-sphere directions (Fibonacci lattice), scaled to `r`.
fn fibonacci_sphere(n: usize, r: f64) -> Vec<Point3> {
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let phi = std::f64::consts::TAU * (i as f64 / golden).fract();
            Point3::new(r * rho * phi.cos(), r * rho * phi.sin(), r * z)
        })
        .collect()
}

/// Fraction of the target edge kept clear between the outermost interior
/// lattice shell and the sphere surface.
const BALL_SURFACE_MARGIN: f64 = 0.7;

/// Point set for the ball seed: surface samples at spacing close to `t` and
/// an interior BCC lattice with nearest-neighbor distance `t`.
pub fn ball_seed_points(radius: f64, target_edge: f64) -> Vec<Point3> {
    let t = target_edge;
    // Hexagonal packing area per sample is (sqrt(3)/2) s^2.
    let n_surface =
        ((8.0 * std::f64::consts::PI * radius * radius) / (3f64.sqrt() * t * t)).ceil() as usize;
    let mut pts = fibonacci_sphere(n_surface.max(12), radius);

    // BCC lattice constant for nearest-neighbor distance t.
    let a = 2.0 * t / 3f64.sqrt();
    let keep = radius - BALL_SURFACE_MARGIN * t;
    let m = (radius / a).ceil() as i64 + 1;
    for i in -m..=m {
        for j in -m..=m {
            for k in -m..=m {
                for off in [0.0, 0.5] {
                    let p = Point3::new(
                        (i as f64 + off) * a,
                        (j as f64 + off) * a,
                        (k as f64 + off) * a,
                    );
                    if p.to_vec().norm() <= keep {
                        pts.push(p);
                    }
                }
            }
        }
    }
    pts
}

/// Ball seed: Delaunay tetrahedralization of surface plus interior samples.
/// All hull vertices lie exactly on the sphere.
pub fn ball_seed(spec: &DomainSpec, seed: u64) -> Result<TetMesh, Error> {
    spec.validate()?;
    let DomainShape::Ball { radius } = spec.shape else {
        return Err(Error::InvalidConfig("ball_seed expects a ball domain".into()));
    };
    let pts = ball_seed_points(radius, spec.target_edge);
    delaunay_points(&pts, seed)
}

/// Seed mesh for any supported domain.
pub fn seed_mesh(spec: &DomainSpec, seed: u64) -> Result<TetMesh, Error> {
    match spec.shape {
        DomainShape::Cube { .. } => cube_seed(spec),
        DomainShape::Ball { .. } => ball_seed(spec, seed),
    }
}
