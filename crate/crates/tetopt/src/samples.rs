//! Small reference meshes and cavity fixtures shared by tests and examples.

use rand::Rng;

use crate::geometry::signed_volume_pts;
use crate::mesh::TetMesh;
use crate::Point3;

/// Octahedron split into 8 tets around a center vertex at the origin with
/// apex neighbors on the coordinate axes. The center is the only interior
/// vertex; its one-ring has 8 cells with equilateral opposite faces.
pub fn octahedron_mesh() -> TetMesh {
    let pts = vec![
        Point3::new(0.0, 0.0, 0.0),
        Point3::new(1.0, 0.0, 0.0),
        Point3::new(-1.0, 0.0, 0.0),
        Point3::new(0.0, 1.0, 0.0),
        Point3::new(0.0, -1.0, 0.0),
        Point3::new(0.0, 0.0, 1.0),
        Point3::new(0.0, 0.0, -1.0),
    ];
    let mut tets = Vec::new();
    for &x in &[1usize, 2] {
        for &y in &[3usize, 4] {
            for &z in &[5usize, 6] {
                tets.push([0, x, y, z]);
            }
        }
    }
    TetMesh::from_parts(pts, tets).expect("octahedron fixture is valid")
}

/// Unit cube split into an `n^3` grid of cells, each cut into 6 tets along
/// the main diagonal (Freudenthal/Kuhn decomposition).
pub fn cube_grid_mesh(n: usize) -> TetMesh {
    assert!(n >= 1);
    let stride = n + 1;
    let idx = |i: usize, j: usize, k: usize| (i * stride + j) * stride + k;
    let mut pts = Vec::with_capacity(stride * stride * stride);
    for i in 0..stride {
        for j in 0..stride {
            for k in 0..stride {
                pts.push(Point3::new(
                    i as f64 / n as f64,
                    j as f64 / n as f64,
                    k as f64 / n as f64,
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
    TetMesh::from_parts(pts, tets).expect("cube grid fixture is valid")
}

/// Cube grid with interior vertices displaced by a deterministic jitter;
/// useful as a non-optimal but valid optimization input.
pub fn perturbed_cube_mesh(n: usize, amplitude: f64, rng: &mut impl Rng) -> TetMesh {
    let mut mesh = cube_grid_mesh(n);
    let interior: Vec<usize> = mesh.interior_vertices().collect();
    for v in interior {
        let p = mesh.position(v);
        let q = Point3::new(
            p.x + rng.gen_range(-amplitude..amplitude),
            p.y + rng.gen_range(-amplitude..amplitude),
            p.z + rng.gen_range(-amplitude..amplitude),
        );
        mesh.set_position(v, q);
        // Keep the fixture valid: back off if the jitter inverted something.
        let bad = mesh
            .vertex_star(v)
            .iter()
            .any(|&t| crate::geometry::signed_volume(&mesh.tet_geom(t)) <= 0.0);
        if bad {
            mesh.set_position(v, p);
        }
    }
    mesh.validate().expect("perturbed cube fixture is valid");
    mesh
}

/// The octahedron one-ring as raw opposite-face triples, each ordered so
/// that `(origin, triple)` has positive signed volume.
pub fn octahedron_ring_triples() -> Vec<[Point3; 3]> {
    let mesh = octahedron_mesh();
    let ring = mesh.one_ring(0).unwrap();
    ring.cells
        .iter()
        .map(|c| c.triple.map(|v| mesh.position(v)))
        .collect()
}

/// Base directions and faces of the octahedron link, used by the random
/// cavity generator.
const OCT_DIRS: [[f64; 3]; 6] = [
    [1.0, 0.0, 0.0],
    [-1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, -1.0, 0.0],
    [0.0, 0.0, 1.0],
    [0.0, 0.0, -1.0],
];

const OCT_FACES: [[usize; 3]; 8] = [
    [0, 2, 4],
    [2, 1, 4],
    [1, 3, 4],
    [3, 0, 4],
    [2, 0, 5],
    [1, 2, 5],
    [3, 1, 5],
    [0, 3, 5],
];

/// A random star-shaped cavity around the origin: a perturbed octahedron
/// link. Triples come out ordered positively with respect to the origin and
/// the feasible region has nonempty interior.
pub fn random_cavity(rng: &mut impl Rng) -> Vec<[Point3; 3]> {
    loop {
        let verts: Vec<Point3> = OCT_DIRS
            .iter()
            .map(|d| {
                let r = rng.gen_range(0.75..1.35);
                Point3::new(
                    d[0] * r + rng.gen_range(-0.22..0.22),
                    d[1] * r + rng.gen_range(-0.22..0.22),
                    d[2] * r + rng.gen_range(-0.22..0.22),
                )
            })
            .collect();
        let origin = Point3::new(0.0, 0.0, 0.0);
        let triples: Vec<[Point3; 3]> = OCT_FACES
            .iter()
            .map(|f| [verts[f[0]], verts[f[1]], verts[f[2]]])
            .collect();
        // Require comfortably positive volumes so the origin is strictly
        // feasible and the Hessian is far from singular.
        let ok = triples
            .iter()
            .all(|t| signed_volume_pts(origin, t[0], t[1], t[2]) > 3e-3);
        if ok {
            return triples;
        }
    }
}

/// An asymmetric five-cell cavity with frozen coordinates: five faces of a
/// perturbed octahedron link. Its energy Hessian is nonsingular and the
/// unconstrained minimizer lies strictly inside the feasible region, well
/// away from the origin.
pub fn five_cell_cavity() -> Vec<[Point3; 3]> {
    let px = Point3::new(1.30, 0.12, -0.08);
    let nx = Point3::new(-0.85, 0.20, 0.15);
    let py = Point3::new(-0.10, 1.10, 0.22);
    let ny = Point3::new(0.15, -0.95, -0.12);
    let pz = Point3::new(0.05, -0.18, 1.25);
    let nz = Point3::new(-0.22, 0.08, -0.90);
    let origin = Point3::new(0.0, 0.0, 0.0);
    let faces = [
        [px, py, pz],
        [py, nx, pz],
        [nx, ny, pz],
        [ny, px, nz],
        [nx, ny, nz],
    ];
    faces
        .iter()
        .map(|f| {
            let mut t = *f;
            if signed_volume_pts(origin, t[0], t[1], t[2]) < 0.0 {
                t.swap(0, 1);
            }
            debug_assert!(signed_volume_pts(origin, t[0], t[1], t[2]) > 0.0);
            t
        })
        .collect()
}

/// A cavity whose opposite faces all lie in horizontal planes, so every
/// `s_m` is parallel to the z axis and the Hessian has rank one.
pub fn parallel_plane_cavity() -> Vec<[Point3; 3]> {
    let up = [
        Point3::new(1.0, 0.0, 1.0),
        Point3::new(0.0, 1.0, 1.0),
        Point3::new(-0.7, -0.6, 1.0),
    ];
    let down = [
        Point3::new(0.9, 0.1, -2.0),
        Point3::new(-0.8, 0.5, -2.0),
        Point3::new(0.1, -0.9, -2.0),
    ];
    let origin = Point3::new(0.0, 0.0, 0.0);
    [up, down]
        .into_iter()
        .map(|mut t| {
            if signed_volume_pts(origin, t[0], t[1], t[2]) < 0.0 {
                t.swap(0, 1);
            }
            t
        })
        .collect()
}

/// Two tets sharing an interior face, one of them pressed flat against it:
/// a sliver pair whose shared-face removal (2-to-3 flip) raises the minimum
/// dihedral angle from under 10 to over 40 degrees.
pub fn sliver_pair_mesh() -> TetMesh {
    let pts = vec![
        Point3::new(-0.540397, 0.935190, 0.0),
        Point3::new(-0.047766, -0.598991, 0.0),
        Point3::new(0.716799, 0.391068, 0.0),
        Point3::new(0.125680, 0.343647, 0.067717),
        Point3::new(0.131272, 0.351674, -0.327451),
    ];
    let tets = vec![[0, 1, 2, 3], [0, 2, 1, 4]];
    TetMesh::from_parts(pts, tets).expect("sliver fixture is valid")
}

/// The symmetric triangular bipyramid: two tets over an equilateral face
/// with apexes on the face's perpendicular axis.
pub fn bipyramid_mesh(apex_height: f64) -> TetMesh {
    let s3 = 3f64.sqrt();
    let pts = vec![
        Point3::new(1.0, 0.0, 0.0),
        Point3::new(-0.5, s3 / 2.0, 0.0),
        Point3::new(-0.5, -s3 / 2.0, 0.0),
        Point3::new(0.0, 0.0, apex_height),
        Point3::new(0.0, 0.0, -apex_height),
    ];
    let tets = vec![[0, 1, 2, 3], [0, 2, 1, 4]];
    TetMesh::from_parts(pts, tets).expect("bipyramid fixture is valid")
}

/// A standalone edge star: `n` tets around the interior edge (0, 1), with a
/// jittered link ring. Used by the edge-removal tests.
pub fn ring_star_mesh(n: usize, rng: &mut impl Rng) -> TetMesh {
    assert!(n >= 3);
    loop {
        let za = rng.gen_range(0.6..1.1);
        let zb = -rng.gen_range(0.6..1.1);
        let mut pts = vec![Point3::new(0.0, 0.0, za), Point3::new(0.0, 0.0, zb)];
        let mut angles: Vec<f64> = (0..n)
            .map(|i| {
                let base = i as f64 / n as f64 * std::f64::consts::TAU;
                base + rng.gen_range(-0.25..0.25) / n as f64 * std::f64::consts::TAU
            })
            .collect();
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for &t in &angles {
            let r = rng.gen_range(0.75..1.3);
            pts.push(Point3::new(
                r * t.cos(),
                r * t.sin(),
                rng.gen_range(-0.15..0.15),
            ));
        }
        let mut tets = Vec::with_capacity(n);
        for i in 0..n {
            let w0 = 2 + i;
            let w1 = 2 + (i + 1) % n;
            tets.push([0, 1, w0, w1]);
        }
        let positive = tets.iter().all(|&[a, b, c, d]| {
            signed_volume_pts(pts[a], pts[b], pts[c], pts[d]).abs() > 1e-3
        });
        if !positive {
            continue;
        }
        if let Ok(mesh) = TetMesh::from_parts(pts, tets) {
            if mesh.validate().is_ok() {
                return mesh;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn fixtures_validate() {
        octahedron_mesh().validate().unwrap();
        cube_grid_mesh(2).validate().unwrap();
        sliver_pair_mesh().validate().unwrap();
        bipyramid_mesh(0.8).validate().unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for n in 3..=7 {
            ring_star_mesh(n, &mut rng).validate().unwrap();
        }
    }

    #[test]
    fn cube_grid_counts() {
        let m = cube_grid_mesh(2);
        assert_eq!(m.tet_count_alive(), 48);
        assert_eq!(m.vertex_count_alive(), 27);
        assert_eq!(m.interior_vertices().count(), 1);
    }
}
