//! Mesh quality metrics: dihedral angle statistics, edge ratio, condition
//! number, equiangle skewness, bad-element fraction, and the serializable
//! quality report with angle and volume histograms.
//!
//! All aggregates are full scans over the live tets; nothing is updated
//! incrementally.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::geometry::{dihedral_angles, signed_volume};
use crate::mesh::TetMesh;
use crate::{Mat3, Vec3};

pub const ANGLE_BINS: usize = 60;
pub const VOLUME_BINS: usize = 50;
/// Tets with a dihedral below this are counted as bad elements.
pub const BAD_ANGLE_DEG: f64 = 30.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DihedralStats {
    pub theta_min: f64,
    pub theta_min_avg: f64,
    pub theta_max: f64,
    pub theta_max_avg: f64,
}

/// Per-mesh quality summary in the shape of the usual comparison tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub tet_count: usize,
    pub theta_min: f64,
    pub theta_min_avg: f64,
    pub theta_max: f64,
    pub theta_max_avg: f64,
    pub cond_avg: f64,
    pub cond_max: f64,
    pub edge_ratio_avg: f64,
    pub edge_ratio_max: f64,
    pub skew_avg: f64,
    pub skew_max: f64,
    pub bad_fraction_percent: f64,
    pub volume_mean: f64,
    pub volume_std: f64,
    /// Counts of all dihedral angles (six per tet) over [0, 180] degrees.
    pub angle_histogram: Vec<u64>,
    /// Counts of tet volumes over [0, 3 * volume_mean]; overflow lands in
    /// the last bin.
    pub volume_histogram: Vec<u64>,
}

fn per_tet_dihedrals(mesh: &TetMesh) -> Result<Vec<[f64; 6]>, Error> {
    let mut out = Vec::with_capacity(mesh.tet_count_alive());
    for t in mesh.live_tets() {
        out.push(dihedral_angles(&mesh.tet_geom(t))?);
    }
    if out.is_empty() {
        return Err(Error::EmptyMesh);
    }
    Ok(out)
}

/// Extremes and per-tet-extreme averages of the dihedral angles.
pub fn dihedral_stats(mesh: &TetMesh) -> Result<DihedralStats, Error> {
    let per_tet = per_tet_dihedrals(mesh)?;
    let n = per_tet.len() as f64;
    let mut stats = DihedralStats {
        theta_min: f64::INFINITY,
        theta_min_avg: 0.0,
        theta_max: f64::NEG_INFINITY,
        theta_max_avg: 0.0,
    };
    for angles in &per_tet {
        let lo = angles.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = angles.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        stats.theta_min = stats.theta_min.min(lo);
        stats.theta_max = stats.theta_max.max(hi);
        stats.theta_min_avg += lo;
        stats.theta_max_avg += hi;
    }
    // The averages lie between the extremes by construction; clamp away the
    // last-ulp summation error so the invariant holds exactly.
    stats.theta_min_avg = (stats.theta_min_avg / n).max(stats.theta_min);
    stats.theta_max_avg = (stats.theta_max_avg / n).min(stats.theta_max);
    Ok(stats)
}

/// Longest-to-shortest edge ratio per tet, averaged and maximized.
pub fn edge_ratio(mesh: &TetMesh) -> Result<(f64, f64), Error> {
    let mut sum = 0.0;
    let mut max = f64::NEG_INFINITY;
    let mut n = 0usize;
    for t in mesh.live_tets() {
        let p = mesh.tet_geom(t).points();
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for i in 0..4 {
            for j in (i + 1)..4 {
                let len = p[i].distance(p[j]);
                lo = lo.min(len);
                hi = hi.max(len);
            }
        }
        if lo <= 0.0 {
            return Err(Error::DegenerateTet);
        }
        let r = hi / lo;
        sum += r;
        max = max.max(r);
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyMesh);
    }
    Ok((sum / n as f64, max))
}

/// Edge matrix of the unit regular tetrahedron, used as the reference shape
/// for the condition number.
fn regular_reference() -> Mat3 {
    Mat3::from_columns(
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(0.5, 3f64.sqrt() / 2.0, 0.0),
        Vec3::new(0.5, 3f64.sqrt() / 6.0, (2f64 / 3.0).sqrt()),
    )
}

fn tet_condition(mesh: &TetMesh, t: usize) -> Result<f64, Error> {
    let g = mesh.tet_geom(t);
    let a = Mat3::from_columns(g.p1 - g.p0, g.p2 - g.p0, g.p3 - g.p0);
    let w_inv = regular_reference().inverse().expect("reference is regular");
    let s = a.mul_mat(&w_inv);
    let s_inv = s.inverse().ok_or(Error::DegenerateTet)?;
    Ok(s.frobenius_norm() * s_inv.frobenius_norm() / 3.0)
}

/// Frobenius condition number of the map from the regular reference tet,
/// averaged and maximized; 1 is optimal.
pub fn condition_number(mesh: &TetMesh) -> Result<(f64, f64), Error> {
    let mut sum = 0.0;
    let mut max = f64::NEG_INFINITY;
    let mut n = 0usize;
    for t in mesh.live_tets() {
        let c = tet_condition(mesh, t)?;
        sum += c;
        max = max.max(c);
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyMesh);
    }
    Ok((sum / n as f64, max))
}

fn tet_skewness(mesh: &TetMesh, t: usize) -> Result<f64, Error> {
    let p = mesh.tet_geom(t).points();
    let mut worst: f64 = 0.0;
    for f in crate::mesh::FACE_ORDER {
        let (a, b, c) = (p[f[0]], p[f[1]], p[f[2]]);
        // Three corner angles of the face triangle.
        for (apex, u, v) in [(a, b, c), (b, c, a), (c, a, b)] {
            let e1 = u - apex;
            let e2 = v - apex;
            let cross = e1.cross(e2).norm();
            if cross == 0.0 && e1.dot(e2) == 0.0 {
                return Err(Error::DegenerateFace);
            }
            let theta = cross.atan2(e1.dot(e2)).to_degrees();
            let skew = ((theta - 60.0) / 120.0).max((60.0 - theta) / 60.0);
            worst = worst.max(skew);
        }
    }
    Ok(worst)
}

/// Equiangle skewness over the 12 face angles against the 60-degree
/// equilateral reference, averaged and maximized; 0 is optimal.
pub fn equiangle_skewness(mesh: &TetMesh) -> Result<(f64, f64), Error> {
    let mut sum = 0.0;
    let mut max = f64::NEG_INFINITY;
    let mut n = 0usize;
    for t in mesh.live_tets() {
        let s = tet_skewness(mesh, t)?;
        sum += s;
        max = max.max(s);
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyMesh);
    }
    Ok((sum / n as f64, max))
}

/// Percentage of tets whose minimum dihedral angle is below 30 degrees.
pub fn bad_element_fraction(mesh: &TetMesh) -> Result<f64, Error> {
    let per_tet = per_tet_dihedrals(mesh)?;
    let bad = per_tet
        .iter()
        .filter(|a| a.iter().copied().fold(f64::INFINITY, f64::min) < BAD_ANGLE_DEG)
        .count();
    Ok(100.0 * bad as f64 / per_tet.len() as f64)
}

/// Populates the full report: all metrics plus angle and volume histograms.
pub fn build_report(mesh: &TetMesh) -> Result<QualityReport, Error> {
    let per_tet = per_tet_dihedrals(mesh)?;
    let n = per_tet.len();
    let stats = dihedral_stats(mesh)?;
    let (cond_avg, cond_max) = condition_number(mesh)?;
    let (edge_ratio_avg, edge_ratio_max) = edge_ratio(mesh)?;
    let (skew_avg, skew_max) = equiangle_skewness(mesh)?;
    let bad_fraction_percent = bad_element_fraction(mesh)?;

    let volumes: Vec<f64> = mesh
        .live_tets()
        .map(|t| signed_volume(&mesh.tet_geom(t)))
        .collect();
    let volume_mean = volumes.iter().sum::<f64>() / n as f64;
    let volume_std = (volumes
        .iter()
        .map(|v| (v - volume_mean) * (v - volume_mean))
        .sum::<f64>()
        / n as f64)
        .sqrt();

    let mut angle_histogram = vec![0u64; ANGLE_BINS];
    for angles in &per_tet {
        for &a in angles {
            let bin = ((a / 180.0) * ANGLE_BINS as f64).floor() as usize;
            angle_histogram[bin.min(ANGLE_BINS - 1)] += 1;
        }
    }
    let mut volume_histogram = vec![0u64; VOLUME_BINS];
    let v_span = 3.0 * volume_mean;
    for &v in &volumes {
        let bin = if v_span > 0.0 {
            ((v / v_span) * VOLUME_BINS as f64).floor() as usize
        } else {
            0
        };
        volume_histogram[bin.min(VOLUME_BINS - 1)] += 1;
    }

    Ok(QualityReport {
        tet_count: n,
        theta_min: stats.theta_min,
        theta_min_avg: stats.theta_min_avg,
        theta_max: stats.theta_max,
        theta_max_avg: stats.theta_max_avg,
        cond_avg,
        cond_max,
        edge_ratio_avg,
        edge_ratio_max,
        skew_avg,
        skew_max,
        bad_fraction_percent,
        volume_mean,
        volume_std,
        angle_histogram,
        volume_histogram,
    })
}
