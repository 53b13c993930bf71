//! Local connectivity updates: 2-to-3 and 3-to-2 flips, n-to-m edge removal,
//! edge split and collapse.
//!
//! Every operation validates its candidate elements before touching the
//! mesh, so a rejection leaves the mesh bytes identical. Flips conserve the
//! enclosed volume exactly (same cavity, retiled); split conserves it by
//! construction; collapse only retriangulates the local cavity and never
//! touches boundary faces.

use std::collections::HashSet;

use thiserror::Error;

use crate::geometry::{min_dihedral, signed_volume_pts, TetGeom};
use crate::mesh::{EdgeKey, OpKind, OpRecord, OperationLog, TetMesh, FACE_ORDER};
use crate::Point3;

/// Target edge length and the split/collapse hysteresis factors.
#[derive(Clone, Copy, Debug)]
pub struct SizingRule {
    pub target_edge: f64,
}

impl SizingRule {
    pub const SPLIT_FACTOR: f64 = 4.0 / 3.0;
    pub const COLLAPSE_FACTOR: f64 = 4.0 / 5.0;

    pub fn new(target_edge: f64) -> Self {
        assert!(target_edge > 0.0);
        Self { target_edge }
    }

    /// Edges longer than this are split.
    pub fn split_threshold(&self) -> f64 {
        Self::SPLIT_FACTOR * self.target_edge
    }

    /// Edges shorter than this are collapsed.
    pub fn collapse_threshold(&self) -> f64 {
        Self::COLLAPSE_FACTOR * self.target_edge
    }
}

/// Why an operation was not applied. Individual rejections are logged and
/// never abort a pass.
#[derive(Error, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reject {
    #[error("target face lies on the boundary")]
    BoundaryFace,
    #[error("target edge lies on the boundary")]
    BoundaryEdge,
    #[error("configuration is geometrically invalid")]
    GeometricallyInvalid,
    #[error("operation would not improve the minimum dihedral angle")]
    QualityRejected,
    #[error("edge star has the wrong number of tets")]
    WrongStarSize,
    #[error("edge star exceeds the supported size")]
    StarTooLarge,
    #[error("operation would invert a tet")]
    WouldInvert,
    #[error("collapse would create an over-long edge")]
    WouldExceedLength,
    #[error("both endpoints lie on the boundary")]
    BothBoundary,
    #[error("endpoint links violate the collapse condition")]
    LinkViolation,
    #[error("target element no longer exists")]
    MissingTarget,
}

/// Whether an operation must strictly raise the cavity's minimum dihedral
/// angle or merely keep all tets positive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QualityGate {
    StrictImprove,
    PositivityOnly,
}

/// Description of an applied connectivity change.
#[derive(Clone, Debug)]
pub struct FlipProposal {
    pub kind: OpKind,
    pub removed: Vec<usize>,
    pub added: Vec<usize>,
    pub min_dihedral_before: f64,
    pub min_dihedral_after: f64,
    pub volume_before: f64,
    pub volume_after: f64,
}

fn cavity_min_dihedral(mesh: &TetMesh, tets: &[usize]) -> f64 {
    tets.iter()
        .map(|&t| min_dihedral(&mesh.tet_geom(t)))
        .fold(f64::INFINITY, f64::min)
}

fn candidate_min_dihedral(mesh: &TetMesh, tets: &[[usize; 4]]) -> f64 {
    tets.iter()
        .map(|q| {
            min_dihedral(&TetGeom::new(
                mesh.position(q[0]),
                mesh.position(q[1]),
                mesh.position(q[2]),
                mesh.position(q[3]),
            ))
        })
        .fold(f64::INFINITY, f64::min)
}

fn tet_volume_ids(mesh: &TetMesh, q: [usize; 4]) -> f64 {
    signed_volume_pts(
        mesh.position(q[0]),
        mesh.position(q[1]),
        mesh.position(q[2]),
        mesh.position(q[3]),
    )
}

fn degeneracy_eps(mesh: &TetMesh) -> f64 {
    let d = mesh.bbox_diag();
    1e-14 * d * d * d
}

/// Replaces the two tets sharing an interior face by three tets around the
/// apex-to-apex edge. Applied only when the new tets are positive and, under
/// [`QualityGate::StrictImprove`], the cavity's minimum dihedral strictly
/// rises.
pub fn flip23(
    mesh: &mut TetMesh,
    face: [usize; 3],
    gate: QualityGate,
) -> Result<FlipProposal, Reject> {
    if mesh.is_boundary_face(face) {
        return Err(Reject::BoundaryFace);
    }
    let owners: Vec<usize> = mesh
        .vertex_star(face[0])
        .into_iter()
        .filter(|&t| face.iter().all(|v| mesh.tet(t).contains(v)))
        .collect();
    let [t1, t2] = owners.as_slice() else {
        return Err(Reject::MissingTarget);
    };
    let (t1, t2) = (*t1, *t2);
    let apex_of = |t: usize| -> usize {
        mesh.tet(t)
            .iter()
            .position(|v| !face.contains(v))
            .expect("face owner has an apex")
    };
    let k1 = apex_of(t1);
    let a = mesh.tet(t1)[k1];
    let e = mesh.tet(t2)[apex_of(t2)];
    // The face opposite the apex in t1 is oriented outward, i.e. toward t2.
    let [p, q, r] = FACE_ORDER[k1].map(|i| mesh.tet(t1)[i]);
    let new_tets = [[a, e, p, q], [a, e, q, r], [a, e, r, p]];
    let eps = degeneracy_eps(mesh);
    // All three positive iff the segment a-e pierces the face interior.
    if new_tets.iter().any(|&t| tet_volume_ids(mesh, t) <= eps) {
        return Err(Reject::GeometricallyInvalid);
    }
    let before = cavity_min_dihedral(mesh, &[t1, t2]);
    let after = candidate_min_dihedral(mesh, &new_tets);
    if gate == QualityGate::StrictImprove && after <= before {
        return Err(Reject::QualityRejected);
    }
    let volume_before = tet_volume_ids(mesh, mesh.tet(t1)) + tet_volume_ids(mesh, mesh.tet(t2));
    let volume_after: f64 = new_tets.iter().map(|&t| tet_volume_ids(mesh, t)).sum();
    if (volume_after - volume_before).abs() > 1e-12 * volume_before.max(eps) {
        return Err(Reject::GeometricallyInvalid);
    }
    let added = mesh
        .replace_tets(&[t1, t2], &new_tets)
        .map_err(|_| Reject::GeometricallyInvalid)?;
    Ok(FlipProposal {
        kind: OpKind::Flip23,
        removed: vec![t1, t2],
        added,
        min_dihedral_before: before,
        min_dihedral_after: after,
        volume_before,
        volume_after,
    })
}

/// Replaces the three tets around an interior 3-star edge by two tets
/// sharing the link triangle.
pub fn flip32(mesh: &mut TetMesh, edge: EdgeKey, gate: QualityGate) -> Result<FlipProposal, Reject> {
    let star = mesh.edge_star(edge).map_err(|_| Reject::MissingTarget)?;
    if !star.closed || star.tets.len() != 3 {
        return Err(Reject::WrongStarSize);
    }
    let plan = plan_edge_removal(mesh, edge)?;
    apply_edge_removal(mesh, plan, gate, OpKind::Flip32)
}

/// A scored retetrahedralization for removing an interior edge: the best
/// ring triangulation by max-min dihedral.
#[derive(Clone, Debug)]
pub struct EdgeRemovalPlan {
    pub edge: EdgeKey,
    pub star: Vec<usize>,
    pub ring: Vec<usize>,
    /// Ring-index triangles of the chosen triangulation.
    pub triangles: Vec<[usize; 3]>,
    pub new_tets: Vec<[usize; 4]>,
    pub min_dihedral_before: f64,
    pub min_dihedral_after: f64,
}

/// Enumerates all triangulations of the polygon `0..n` (as index triples
/// over the closing edge `(0, n-1)`).
pub fn ring_triangulations(n: usize) -> Vec<Vec<[usize; 3]>> {
    fn rec(i: usize, j: usize) -> Vec<Vec<[usize; 3]>> {
        if j - i < 2 {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for k in (i + 1)..j {
            for left in rec(i, k) {
                for right in rec(k, j) {
                    let mut tri = vec![[i, k, j]];
                    tri.extend_from_slice(&left);
                    tri.extend_from_slice(&right);
                    out.push(tri);
                }
            }
        }
        out
    }
    rec(0, n - 1)
}

/// Builds the two tets replacing one ring triangle, oriented consistently
/// with the rotational direction of the star walk.
fn ring_triangle_tets(
    a: usize,
    b: usize,
    ring: &[usize],
    tri: [usize; 3],
    ring_positive: bool,
) -> [[usize; 4]; 2] {
    let [i, k, j] = tri;
    let (w0, w1, w2) = (ring[i], ring[k], ring[j]);
    if ring_positive {
        [[a, w0, w1, w2], [b, w0, w2, w1]]
    } else {
        [[a, w0, w2, w1], [b, w0, w1, w2]]
    }
}

/// Scores every triangulation of the edge's link ring and returns the best
/// valid candidate, without touching the mesh.
pub fn plan_edge_removal(mesh: &TetMesh, edge: EdgeKey) -> Result<EdgeRemovalPlan, Reject> {
    let (a, b) = edge.endpoints();
    if mesh.is_boundary_edge(edge) {
        return Err(Reject::BoundaryEdge);
    }
    let star = mesh.edge_star(edge).map_err(|_| Reject::MissingTarget)?;
    if !star.closed || star.tets.len() < 3 {
        return Err(Reject::WrongStarSize);
    }
    let n = star.tets.len();
    if n > 7 {
        return Err(Reject::StarTooLarge);
    }
    let ring = star.link.clone();
    // Chirality of the walk order relative to the directed edge a -> b.
    let ring_positive = signed_volume_pts(
        mesh.position(a),
        mesh.position(b),
        mesh.position(ring[0]),
        mesh.position(ring[1]),
    ) > 0.0;
    let eps = degeneracy_eps(mesh);
    let before = cavity_min_dihedral(mesh, &star.tets);
    let volume_before: f64 = star
        .tets
        .iter()
        .map(|&t| tet_volume_ids(mesh, mesh.tet(t)))
        .sum();

    let mut best: Option<(f64, Vec<[usize; 3]>, Vec<[usize; 4]>)> = None;
    'cand: for triangulation in ring_triangulations(n) {
        let mut tets = Vec::with_capacity(2 * (n - 2));
        for &tri in &triangulation {
            let pair = ring_triangle_tets(a, b, &ring, tri, ring_positive);
            for t in pair {
                if tet_volume_ids(mesh, t) <= eps {
                    continue 'cand;
                }
                tets.push(t);
            }
        }
        let volume_after: f64 = tets.iter().map(|&t| tet_volume_ids(mesh, t)).sum();
        if (volume_after - volume_before).abs() > 1e-12 * volume_before.max(eps) {
            continue;
        }
        let score = candidate_min_dihedral(mesh, &tets);
        if best.as_ref().map_or(true, |(s, _, _)| score > *s) {
            best = Some((score, triangulation, tets));
        }
    }
    let (score, triangles, new_tets) = best.ok_or(Reject::GeometricallyInvalid)?;
    Ok(EdgeRemovalPlan {
        edge,
        star: star.tets,
        ring,
        triangles,
        new_tets,
        min_dihedral_before: before,
        min_dihedral_after: score,
    })
}

fn apply_edge_removal(
    mesh: &mut TetMesh,
    plan: EdgeRemovalPlan,
    gate: QualityGate,
    kind: OpKind,
) -> Result<FlipProposal, Reject> {
    if gate == QualityGate::StrictImprove && plan.min_dihedral_after <= plan.min_dihedral_before {
        return Err(Reject::QualityRejected);
    }
    let volume_before: f64 = plan
        .star
        .iter()
        .map(|&t| tet_volume_ids(mesh, mesh.tet(t)))
        .sum();
    let volume_after: f64 = plan
        .new_tets
        .iter()
        .map(|&t| tet_volume_ids(mesh, t))
        .sum();
    let added = mesh
        .replace_tets(&plan.star, &plan.new_tets)
        .map_err(|_| Reject::GeometricallyInvalid)?;
    Ok(FlipProposal {
        kind,
        removed: plan.star,
        added,
        min_dihedral_before: plan.min_dihedral_before,
        min_dihedral_after: plan.min_dihedral_after,
        volume_before,
        volume_after,
    })
}

/// Removes an interior edge with a 3..=7 tet star by retiling its link ring
/// with the best triangulation (max-min dihedral), composing the flips of
/// the equivalent 2-3/3-2 sequence in one atomic step.
pub fn remove_edge_nm(
    mesh: &mut TetMesh,
    edge: EdgeKey,
    gate: QualityGate,
) -> Result<FlipProposal, Reject> {
    let plan = plan_edge_removal(mesh, edge)?;
    let kind = if plan.ring.len() == 3 {
        OpKind::Flip32
    } else {
        OpKind::EdgeRemoval
    };
    apply_edge_removal(mesh, plan, gate, kind)
}

/// Splits an interior over-long edge at its midpoint; every star tet is
/// replaced by two, conserving volume exactly.
pub fn split_edge(
    mesh: &mut TetMesh,
    edge: EdgeKey,
    _rule: &SizingRule,
) -> Result<FlipProposal, Reject> {
    let (c, d) = edge.endpoints();
    if mesh.is_boundary_edge(edge) || !(mesh.is_interior(c) || mesh.is_interior(d)) {
        return Err(Reject::BoundaryEdge);
    }
    let star = mesh.edge_star(edge).map_err(|_| Reject::MissingTarget)?;
    debug_assert!(star.closed, "non-boundary edges have closed stars");
    let mid = mesh.position(c).midpoint(mesh.position(d));
    let mut new_tets = Vec::with_capacity(star.tets.len() * 2);
    let mid_id = mesh.push_vertex(mid, crate::mesh::VertexKind::Interior);
    for &t in &star.tets {
        let tet = mesh.tet(t);
        let half_c = tet.map(|v| if v == c { mid_id } else { v });
        let half_d = tet.map(|v| if v == d { mid_id } else { v });
        new_tets.push(half_c);
        new_tets.push(half_d);
    }
    let eps = degeneracy_eps(mesh);
    if new_tets.iter().any(|&t| tet_volume_ids(mesh, t) <= eps) {
        mesh.kill_vertex(mid_id);
        return Err(Reject::WouldInvert);
    }
    let before = cavity_min_dihedral(mesh, &star.tets);
    let volume_before: f64 = star
        .tets
        .iter()
        .map(|&t| tet_volume_ids(mesh, mesh.tet(t)))
        .sum();
    let volume_after: f64 = new_tets.iter().map(|&t| tet_volume_ids(mesh, t)).sum();
    let after = candidate_min_dihedral(mesh, &new_tets);
    let added = mesh
        .replace_tets(&star.tets, &new_tets)
        .map_err(|_| Reject::GeometricallyInvalid)?;
    Ok(FlipProposal {
        kind: OpKind::Split,
        removed: star.tets,
        added,
        min_dihedral_before: before,
        min_dihedral_after: after,
        volume_before,
        volume_after,
    })
}

/// Link triangles of a vertex: the faces opposite `v` in its star tets.
fn link_edges_of_vertex(mesh: &TetMesh, v: usize) -> HashSet<EdgeKey> {
    let mut out = HashSet::new();
    for t in mesh.vertex_star(v) {
        let tet = mesh.tet(t);
        let others: Vec<usize> = tet.iter().copied().filter(|&u| u != v).collect();
        out.insert(EdgeKey::new(others[0], others[1]));
        out.insert(EdgeKey::new(others[0], others[2]));
        out.insert(EdgeKey::new(others[1], others[2]));
    }
    out
}

fn link_vertices_of_vertex(mesh: &TetMesh, v: usize) -> HashSet<usize> {
    let mut out = HashSet::new();
    for t in mesh.vertex_star(v) {
        for &u in &mesh.tet(t) {
            if u != v {
                out.insert(u);
            }
        }
    }
    out
}

/// Collapses an interior under-short edge. The Interior endpoint merges into
/// the other endpoint; two Interior endpoints merge at the midpoint. The
/// boundary face set is never touched.
pub fn collapse_edge(
    mesh: &mut TetMesh,
    edge: EdgeKey,
    rule: &SizingRule,
) -> Result<FlipProposal, Reject> {
    let (c, d) = edge.endpoints();
    let (c_int, d_int) = (mesh.is_interior(c), mesh.is_interior(d));
    if !c_int && !d_int {
        return Err(Reject::BothBoundary);
    }
    // Keep the boundary endpoint; for two interior endpoints keep the lower
    // index and move it to the midpoint.
    let (keep, remove, target) = match (c_int, d_int) {
        (true, true) => (c, d, mesh.position(c).midpoint(mesh.position(d))),
        (true, false) => (d, c, mesh.position(d)),
        (false, true) => (c, d, mesh.position(c)),
        (false, false) => unreachable!(),
    };

    let star = mesh.edge_star(edge).map_err(|_| Reject::MissingTarget)?;
    let ring_verts: HashSet<usize> = star.link.iter().copied().collect();
    // Link condition: shared link vertices and shared link edges must both
    // coincide with the edge's ring; otherwise the collapse would create
    // duplicate or non-manifold elements.
    let shared_verts: HashSet<usize> = link_vertices_of_vertex(mesh, keep)
        .intersection(&link_vertices_of_vertex(mesh, remove))
        .copied()
        .collect();
    if shared_verts != ring_verts {
        return Err(Reject::LinkViolation);
    }
    let ring_edges: HashSet<EdgeKey> = if star.closed {
        (0..star.link.len())
            .map(|i| EdgeKey::new(star.link[i], star.link[(i + 1) % star.link.len()]))
            .collect()
    } else {
        star.link
            .windows(2)
            .map(|w| EdgeKey::new(w[0], w[1]))
            .collect()
    };
    let shared_edges: HashSet<EdgeKey> = link_edges_of_vertex(mesh, keep)
        .intersection(&link_edges_of_vertex(mesh, remove))
        .copied()
        .collect();
    if shared_edges != ring_edges {
        return Err(Reject::LinkViolation);
    }

    // No resulting edge may exceed the split threshold.
    let neighbors: HashSet<usize> = link_vertices_of_vertex(mesh, keep)
        .union(&link_vertices_of_vertex(mesh, remove))
        .copied()
        .filter(|&v| v != keep && v != remove)
        .collect();
    let mut sorted_neighbors: Vec<usize> = neighbors.into_iter().collect();
    sorted_neighbors.sort_unstable();
    let max_len = rule.split_threshold();
    for v in sorted_neighbors {
        if target.distance(mesh.position(v)) > max_len {
            return Err(Reject::WouldExceedLength);
        }
    }

    // Geometric validity of every surviving tet around the merged vertex.
    let dead_star: Vec<usize> = mesh.vertex_star(remove);
    let keep_star: Vec<usize> = mesh.vertex_star(keep);
    let eps = degeneracy_eps(mesh);
    let pos_of = |v: usize| -> Point3 {
        if v == keep || v == remove {
            target
        } else {
            mesh.position(v)
        }
    };
    let mut rewired: Vec<[usize; 4]> = Vec::new();
    for &t in &dead_star {
        let tet = mesh.tet(t);
        if tet.contains(&keep) {
            continue; // star of the edge itself disappears
        }
        let new_tet = tet.map(|v| if v == remove { keep } else { v });
        rewired.push(new_tet);
    }
    let candidate_ok = |q: [usize; 4]| -> bool {
        signed_volume_pts(pos_of(q[0]), pos_of(q[1]), pos_of(q[2]), pos_of(q[3])) > eps
    };
    if !rewired.iter().all(|&q| candidate_ok(q)) {
        return Err(Reject::WouldInvert);
    }
    for &t in &keep_star {
        let tet = mesh.tet(t);
        if tet.contains(&remove) {
            continue;
        }
        if !candidate_ok(tet) {
            return Err(Reject::WouldInvert);
        }
    }

    let affected: Vec<usize> = {
        let mut v: Vec<usize> = dead_star.iter().chain(keep_star.iter()).copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let before = cavity_min_dihedral(mesh, &affected);
    let volume_before = mesh.enclosed_volume();
    mesh.set_position(keep, target);
    let added = mesh
        .replace_tets(&dead_star, &rewired)
        .map_err(|_| Reject::GeometricallyInvalid)?;
    mesh.kill_vertex(remove);
    let mut after_tets: Vec<usize> = added.clone();
    after_tets.extend(
        keep_star
            .iter()
            .copied()
            .filter(|&t| mesh.is_tet_alive(t)),
    );
    let after = cavity_min_dihedral(mesh, &after_tets);
    Ok(FlipProposal {
        kind: OpKind::Collapse,
        removed: dead_star,
        added,
        min_dihedral_before: before,
        min_dihedral_after: after,
        volume_before,
        volume_after: mesh.enclosed_volume(),
    })
}

/// Counters for one remeshing pass.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PassSummary {
    pub attempted: usize,
    pub accepted: usize,
    pub splits: usize,
    pub collapses: usize,
    pub flips23: usize,
    pub edge_removals: usize,
}

fn log_op(
    log: &mut OperationLog,
    kind: OpKind,
    involved: &[usize],
    outcome: &Result<FlipProposal, Reject>,
) {
    match outcome {
        Ok(p) => log.push(OpRecord {
            kind: p.kind,
            involved: involved.to_vec(),
            accepted: true,
            reason: String::new(),
            min_dihedral_before: p.min_dihedral_before,
            min_dihedral_after: p.min_dihedral_after,
            volume_before: p.volume_before,
            volume_after: p.volume_after,
        }),
        Err(r) => log.push(OpRecord {
            kind,
            involved: involved.to_vec(),
            accepted: false,
            reason: r.to_string(),
            min_dihedral_before: f64::NAN,
            min_dihedral_after: f64::NAN,
            volume_before: f64::NAN,
            volume_after: f64::NAN,
        }),
    }
}

/// Visits every tet whose minimum dihedral is below `angle_focus` (ascending
/// index, re-queued at most once) and tries shared-face flips, then edge
/// removals, accepting only strict improvements of the cavity minimum.
pub fn improvement_pass(
    mesh: &mut TetMesh,
    angle_focus: f64,
    log: &mut OperationLog,
) -> PassSummary {
    let mut summary = PassSummary::default();
    let mut visits: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
    // Offenders are processed in ascending tet index and re-queued at most
    // once per pass.
    for round in 0..2 {
        let mut offenders: Vec<usize> = mesh
            .live_tets()
            .filter(|&t| min_dihedral(&mesh.tet_geom(t)) < angle_focus)
            .filter(|t| visits.get(t).copied().unwrap_or(0) <= round)
            .collect();
        offenders.sort_unstable();
        let mut any = false;
        for t in offenders {
            if !mesh.is_tet_alive(t) {
                continue;
            }
            if min_dihedral(&mesh.tet_geom(t)) >= angle_focus {
                continue;
            }
            *visits.entry(t).or_insert(0) += 1;
            if try_improve_tet(mesh, t, log, &mut summary) {
                any = true;
            }
        }
        if !any {
            break;
        }
    }
    summary
}

fn try_improve_tet(
    mesh: &mut TetMesh,
    t: usize,
    log: &mut OperationLog,
    summary: &mut PassSummary,
) -> bool {
    let tet = mesh.tet(t);
    for k in 0..4 {
        let face = FACE_ORDER[k].map(|i| tet[i]);
        if mesh.is_boundary_face(face) {
            continue;
        }
        summary.attempted += 1;
        let r = flip23(mesh, face, QualityGate::StrictImprove);
        log_op(log, OpKind::Flip23, &face, &r);
        if r.is_ok() {
            summary.accepted += 1;
            summary.flips23 += 1;
            return true;
        }
    }
    for i in 0..4 {
        for j in (i + 1)..4 {
            let edge = EdgeKey::new(tet[i], tet[j]);
            if mesh.is_boundary_edge(edge) {
                continue;
            }
            summary.attempted += 1;
            let r = remove_edge_nm(mesh, edge, QualityGate::StrictImprove);
            let (a, b) = edge.endpoints();
            log_op(log, OpKind::EdgeRemoval, &[a, b], &r);
            if r.is_ok() {
                summary.accepted += 1;
                summary.edge_removals += 1;
                return true;
            }
        }
    }
    false
}

fn edge_exists(mesh: &TetMesh, e: EdgeKey) -> bool {
    let (a, b) = e.endpoints();
    mesh.is_vertex_alive(a)
        && mesh.is_vertex_alive(b)
        && mesh
            .vertex_star(a)
            .iter()
            .any(|&t| mesh.tet(t).contains(&b))
}

/// Splits every over-long interior edge and collapses every under-short one,
/// sweeping until a sweep accepts nothing. The final sweep leaves a logged
/// rejection for every offender that could not be fixed.
pub fn sizing_pass(mesh: &mut TetMesh, rule: &SizingRule, log: &mut OperationLog) -> PassSummary {
    let mut summary = PassSummary::default();
    let hi = rule.split_threshold();
    let lo = rule.collapse_threshold();
    for _sweep in 0..50 {
        let mut accepted_this_sweep = 0;
        for e in mesh.edges() {
            if !edge_exists(mesh, e) {
                continue;
            }
            let (a, b) = e.endpoints();
            let len = mesh.position(a).distance(mesh.position(b));
            if len > hi {
                summary.attempted += 1;
                let r = split_edge(mesh, e, rule);
                log_op(log, OpKind::Split, &[a, b], &r);
                if r.is_ok() {
                    summary.accepted += 1;
                    summary.splits += 1;
                    accepted_this_sweep += 1;
                }
            } else if len < lo {
                summary.attempted += 1;
                let r = collapse_edge(mesh, e, rule);
                log_op(log, OpKind::Collapse, &[a, b], &r);
                if r.is_ok() {
                    summary.accepted += 1;
                    summary.collapses += 1;
                    accepted_this_sweep += 1;
                }
            }
        }
        if accepted_this_sweep == 0 {
            break;
        }
    }
    summary
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn flip23_symmetric_bipyramid() {
        let mut mesh = samples::bipyramid_mesh(0.8);
        let before = mesh.enclosed_volume();
        let p = flip23(&mut mesh, [0, 1, 2], QualityGate::PositivityOnly).unwrap();
        assert_eq!(p.added.len(), 3);
        assert_eq!(mesh.tet_count_alive(), 3);
        assert!((mesh.enclosed_volume() - before).abs() <= 1e-12 * before);
        mesh.validate().unwrap();
        // The new interior edge joins the two apexes.
        assert!(mesh
            .edge_star(EdgeKey::new(3, 4))
            .map(|s| s.closed && s.tets.len() == 3)
            .unwrap_or(false));
    }

    #[test]
    fn flip23_rejects_boundary_and_missed_face() {
        let mut mesh = samples::bipyramid_mesh(0.8);
        let r = flip23(&mut mesh, [0, 1, 3], QualityGate::PositivityOnly);
        assert_eq!(r.unwrap_err(), Reject::BoundaryFace);

        // Apexes displaced sideways: the apex-to-apex segment misses the
        // shared face, so one of the candidate tets would invert.
        let pts = vec![
            crate::Point3::new(0.0, 0.0, 0.0),
            crate::Point3::new(1.0, 0.0, 0.0),
            crate::Point3::new(0.0, 1.0, 0.0),
            crate::Point3::new(2.0, 2.0, 1.0),
            crate::Point3::new(2.0, 2.0, -1.0),
        ];
        let mut mesh = crate::TetMesh::from_parts(pts, vec![[0, 1, 2, 3], [0, 2, 1, 4]]).unwrap();
        let hash = mesh.topology_hash();
        let r = flip23(&mut mesh, [0, 1, 2], QualityGate::PositivityOnly);
        assert_eq!(r.unwrap_err(), Reject::GeometricallyInvalid);
        assert_eq!(mesh.topology_hash(), hash, "rejection leaves mesh intact");
    }

    #[test]
    fn flip23_improves_sliver_pair() {
        let mut mesh = samples::sliver_pair_mesh();
        let before = cavity_min_dihedral(&mesh, &[0, 1]);
        assert!(before < 10.0, "fixture starts as a sliver pair: {before}");
        let p = flip23(&mut mesh, [0, 1, 2], QualityGate::StrictImprove).unwrap();
        assert!(p.min_dihedral_after > 40.0, "{}", p.min_dihedral_after);
        // Exhaustive oracle: recompute both cavity minima from raw dihedrals.
        let after_oracle = p
            .added
            .iter()
            .map(|&t| {
                crate::geometry::dihedral_angles(&mesh.tet_geom(t))
                    .unwrap()
                    .into_iter()
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min);
        assert!((after_oracle - p.min_dihedral_after).abs() < 1e-9);
        assert!((p.min_dihedral_before - before).abs() < 1e-9);
        mesh.validate().unwrap();
    }

    #[test]
    fn flip32_restores_bipyramid() {
        let mut mesh = samples::bipyramid_mesh(0.8);
        let original: HashSet<[usize; 4]> = mesh.live_tets().map(|t| {
            let mut q = mesh.tet(t);
            q.sort_unstable();
            q
        }).collect();
        flip23(&mut mesh, [0, 1, 2], QualityGate::PositivityOnly).unwrap();
        let p = flip32(&mut mesh, EdgeKey::new(3, 4), QualityGate::PositivityOnly).unwrap();
        assert_eq!(p.added.len(), 2);
        let restored: HashSet<[usize; 4]> = mesh.live_tets().map(|t| {
            let mut q = mesh.tet(t);
            q.sort_unstable();
            q
        }).collect();
        assert_eq!(original, restored, "round trip restores the element set");
        mesh.validate().unwrap();
    }

    #[test]
    fn flip32_wrong_star_size() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut mesh = samples::ring_star_mesh(4, &mut rng);
        let r = flip32(&mut mesh, EdgeKey::new(0, 1), QualityGate::PositivityOnly);
        assert_eq!(r.unwrap_err(), Reject::WrongStarSize);
    }

    #[test]
    fn flip32_rejects_overlapping_star() {
        // A combinatorially valid 3-star whose wedges overlap: the middle
        // ring vertex sits inside the other two tets' span, so the removal
        // cannot conserve volume.
        let pts = vec![
            crate::Point3::new(0.0, 0.0, 1.0),
            crate::Point3::new(0.0, 0.0, -1.0),
            crate::Point3::new(1.0, 0.0, 0.0),
            crate::Point3::new(-0.5, 0.9, 0.0),
            crate::Point3::new(0.6, -0.2, 0.0),
        ];
        let tets = vec![[0, 1, 2, 3], [0, 1, 3, 4], [0, 1, 4, 2]];
        let mut mesh = crate::TetMesh::from_parts(pts, tets).unwrap();
        let hash = mesh.topology_hash();
        let r = flip32(&mut mesh, EdgeKey::new(0, 1), QualityGate::PositivityOnly);
        assert_eq!(r.unwrap_err(), Reject::GeometricallyInvalid);
        assert_eq!(mesh.topology_hash(), hash);
    }

    #[test]
    fn remove_edge_four_star() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut mesh = samples::ring_star_mesh(4, &mut rng);
        let before = mesh.enclosed_volume();
        let p = remove_edge_nm(&mut mesh, EdgeKey::new(0, 1), QualityGate::PositivityOnly).unwrap();
        assert_eq!(p.added.len(), 4, "n = 4 produces m = 4 tets");
        assert!((mesh.enclosed_volume() - before).abs() <= 1e-12 * before);
        assert!(!edge_exists(&mesh, EdgeKey::new(0, 1)));
        mesh.validate().unwrap();
    }

    #[test]
    fn remove_edge_reduces_to_flip32_for_three_star() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let mesh0 = samples::ring_star_mesh(3, &mut rng);
        let mut m1 = mesh0.clone();
        let mut m2 = mesh0.clone();
        let p1 = remove_edge_nm(&mut m1, EdgeKey::new(0, 1), QualityGate::PositivityOnly).unwrap();
        let p2 = flip32(&mut m2, EdgeKey::new(0, 1), QualityGate::PositivityOnly).unwrap();
        assert_eq!(p1.kind, OpKind::Flip32);
        let set = |m: &crate::TetMesh| -> HashSet<[usize; 4]> {
            m.live_tets().map(|t| {
                let mut q = m.tet(t);
                q.sort_unstable();
                q
            }).collect()
        };
        assert_eq!(set(&m1), set(&m2));
        assert_eq!(p1.min_dihedral_after, p2.min_dihedral_after);
    }

    #[test]
    fn remove_edge_star_too_large() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let mut mesh = samples::ring_star_mesh(8, &mut rng);
        let r = remove_edge_nm(&mut mesh, EdgeKey::new(0, 1), QualityGate::PositivityOnly);
        assert_eq!(r.unwrap_err(), Reject::StarTooLarge);
    }

    // Independent oracle: enumerate ring triangulations with a different
    // recursion (anchored on the first polygon edge instead of the closing
    // one), score each candidate from raw dihedrals, maximize.
    fn brute_force_best(mesh: &crate::TetMesh, edge: EdgeKey) -> f64 {
        let (a, b) = edge.endpoints();
        let star = mesh.edge_star(edge).unwrap();
        let ring = star.link.clone();
        let n = ring.len();
        fn tris(poly: &[usize]) -> Vec<Vec<[usize; 3]>> {
            if poly.len() < 3 {
                return vec![Vec::new()];
            }
            let mut out = Vec::new();
            // The polygon edge (poly[0], poly[1]) belongs to exactly one
            // triangle (poly[0], poly[1], poly[k]); the chord splits the
            // polygon into two smaller ones.
            for k in 2..poly.len() {
                let tri = [poly[0], poly[1], poly[k]];
                let left: Vec<usize> = poly[1..=k].to_vec();
                let mut right: Vec<usize> = poly[k..].to_vec();
                right.push(poly[0]);
                for l in tris(&left) {
                    for r in tris(&right) {
                        let mut t = vec![tri];
                        t.extend(l.iter().copied());
                        t.extend(r.iter().copied());
                        out.push(t);
                    }
                }
            }
            out
        }
        let ring_positive = signed_volume_pts(
            mesh.position(a),
            mesh.position(b),
            mesh.position(ring[0]),
            mesh.position(ring[1]),
        ) > 0.0;
        let mut best = f64::NEG_INFINITY;
        let mut seen = HashSet::new();
        'outer: for cand in tris(&(0..n).collect::<Vec<_>>()) {
            let mut key: Vec<[usize; 3]> = cand
                .iter()
                .map(|t| {
                    let mut s = *t;
                    s.sort_unstable();
                    s
                })
                .collect();
            key.sort_unstable();
            if !seen.insert(key) {
                continue;
            }
            let mut score = f64::INFINITY;
            for tri in &cand {
                let pair = ring_triangle_tets(a, b, &ring, *tri, ring_positive);
                for q in pair {
                    let vol = tet_volume_ids(mesh, q);
                    if vol <= 0.0 {
                        continue 'outer;
                    }
                    let g = TetGeom::new(
                        mesh.position(q[0]),
                        mesh.position(q[1]),
                        mesh.position(q[2]),
                        mesh.position(q[3]),
                    );
                    score = score.min(
                        crate::geometry::dihedral_angles(&g)
                            .unwrap()
                            .into_iter()
                            .fold(f64::INFINITY, f64::min),
                    );
                }
            }
            best = best.max(score);
        }
        best
    }

    #[test]
    fn edge_removal_matches_exhaustive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        for n in [4usize, 5] {
            for _ in 0..50 {
                let mesh = samples::ring_star_mesh(n, &mut rng);
                let plan = plan_edge_removal(&mesh, EdgeKey::new(0, 1));
                let brute = brute_force_best(&mesh, EdgeKey::new(0, 1));
                match plan {
                    Ok(p) => {
                        assert!(
                            (p.min_dihedral_after - brute).abs() < 1e-9,
                            "n={n}: plan {} vs brute {brute}",
                            p.min_dihedral_after
                        );
                    }
                    Err(Reject::GeometricallyInvalid) => {
                        assert!(brute == f64::NEG_INFINITY);
                    }
                    Err(e) => panic!("unexpected rejection {e:?}"),
                }
            }
        }
    }

    #[test]
    fn catalan_counts() {
        assert_eq!(ring_triangulations(3).len(), 1);
        assert_eq!(ring_triangulations(4).len(), 2);
        assert_eq!(ring_triangulations(5).len(), 5);
        assert_eq!(ring_triangulations(6).len(), 14);
        assert_eq!(ring_triangulations(7).len(), 42);
    }

    #[test]
    fn split_interior_edge() {
        let mut mesh = samples::octahedron_mesh();
        let rule = SizingRule::new(0.5);
        let before_vol = mesh.enclosed_volume();
        let before_tets = mesh.tet_count_alive();
        let star_size = mesh.edge_star(EdgeKey::new(0, 1)).unwrap().tets.len();
        let p = split_edge(&mut mesh, EdgeKey::new(0, 1), &rule).unwrap();
        assert_eq!(p.added.len(), 2 * star_size);
        assert_eq!(mesh.tet_count_alive(), before_tets + star_size);
        assert!((mesh.enclosed_volume() - before_vol).abs() <= 1e-12 * before_vol);
        let mid = mesh.live_vertices().last().unwrap();
        assert!(mesh.is_interior(mid));
        // The halves have half the original length.
        assert!((mesh.position(mid).distance(mesh.position(0)) - 0.5).abs() < 1e-15);
        assert!((mesh.position(mid).distance(mesh.position(1)) - 0.5).abs() < 1e-15);
        mesh.validate().unwrap();
    }

    #[test]
    fn split_rejects_boundary_edge() {
        let mut mesh = samples::octahedron_mesh();
        let hash = mesh.topology_hash();
        let r = split_edge(&mut mesh, EdgeKey::new(1, 3), &SizingRule::new(0.5));
        assert_eq!(r.unwrap_err(), Reject::BoundaryEdge);
        assert_eq!(mesh.topology_hash(), hash);
    }

    #[test]
    fn collapse_short_interior_edge() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut mesh = samples::perturbed_cube_mesh(4, 0.02, &mut rng);
        // Make one interior edge short by nudging two adjacent interior
        // vertices together.
        let interior: Vec<usize> = mesh.interior_vertices().collect();
        let (mut c, mut d) = (usize::MAX, usize::MAX);
        'outer: for &u in &interior {
            for &v in &interior {
                if u < v && edge_exists(&mesh, EdgeKey::new(u, v)) {
                    c = u;
                    d = v;
                    break 'outer;
                }
            }
        }
        let (pc, pd) = (mesh.position(c), mesh.position(d));
        let axis = pd - pc;
        mesh.set_position(c, pc + axis.scale(0.45));
        mesh.set_position(d, pc + axis.scale(0.55));
        mesh.validate().unwrap();

        let boundary_before: Vec<[usize; 3]> = {
            let mut f: Vec<[usize; 3]> = mesh.boundary_faces().iter().copied().collect();
            f.sort_unstable();
            f
        };
        let rule = SizingRule::new(0.5);
        assert!(mesh.position(c).distance(mesh.position(d)) < rule.collapse_threshold());
        let star_cd = mesh.edge_star(EdgeKey::new(c, d)).unwrap().tets.len();
        let tets_before = mesh.tet_count_alive();
        let p = collapse_edge(&mut mesh, EdgeKey::new(c, d), &rule).unwrap();
        assert_eq!(p.kind, OpKind::Collapse);
        assert_eq!(mesh.tet_count_alive(), tets_before - star_cd);
        assert!(!mesh.is_vertex_alive(d.max(c)) || !mesh.is_vertex_alive(d.min(c)));
        mesh.validate().unwrap();
        // Boundary untouched.
        let boundary_after: Vec<[usize; 3]> = {
            let mut f: Vec<[usize; 3]> = mesh.boundary_faces().iter().copied().collect();
            f.sort_unstable();
            f
        };
        assert_eq!(boundary_before, boundary_after);
        // Brute-force incidence: no tet references the dead vertex.
        let dead = if mesh.is_vertex_alive(c) { d } else { c };
        for t in mesh.live_tets() {
            assert!(!mesh.tet(t).contains(&dead));
        }
    }

    #[test]
    fn collapse_rejects_both_boundary() {
        let mut mesh = samples::octahedron_mesh();
        let r = collapse_edge(&mut mesh, EdgeKey::new(1, 3), &SizingRule::new(10.0));
        assert_eq!(r.unwrap_err(), Reject::BothBoundary);
    }

    #[test]
    fn collapse_rejects_overlong_result() {
        // Octahedron with the center pulled next to the +x apex: the edge
        // (center, +x) is short, but merging at the midpoint would leave
        // edges to the far apexes longer than the split threshold.
        let mut mesh = samples::octahedron_mesh();
        mesh.set_position(0, crate::Point3::new(0.9, 0.0, 0.0));
        mesh.validate().unwrap();
        let hash = mesh.topology_hash();
        let rule = SizingRule::new(0.5);
        let len = mesh.position(0).distance(mesh.position(1));
        assert!(len < rule.collapse_threshold());
        let r = collapse_edge(&mut mesh, EdgeKey::new(0, 1), &rule);
        assert_eq!(r.unwrap_err(), Reject::WouldExceedLength);
        assert_eq!(mesh.topology_hash(), hash);
    }

    #[test]
    fn improvement_pass_noop_on_good_mesh() {
        let mut mesh = samples::cube_grid_mesh(2);
        let worst = mesh
            .live_tets()
            .map(|t| min_dihedral(&mesh.tet_geom(t)))
            .fold(f64::INFINITY, f64::min);
        assert!(worst >= 40.0, "Freudenthal tets are no worse than 45 deg");
        let mut log = OperationLog::default();
        let s = improvement_pass(&mut mesh, 40.0, &mut log);
        assert_eq!(s.attempted, 0);
        assert!(log.is_empty());
    }

    #[test]
    fn improvement_pass_fixes_sliver() {
        let mut mesh = samples::sliver_pair_mesh();
        let before = mesh
            .live_tets()
            .map(|t| min_dihedral(&mesh.tet_geom(t)))
            .fold(f64::INFINITY, f64::min);
        let mut log = OperationLog::default();
        let s = improvement_pass(&mut mesh, 40.0, &mut log);
        assert!(s.accepted >= 1);
        let after = mesh
            .live_tets()
            .map(|t| min_dihedral(&mesh.tet_geom(t)))
            .fold(f64::INFINITY, f64::min);
        assert!(after > before, "{after} > {before}");
        // Gate soundness: every accepted record strictly improved its cavity.
        for rec in log.records().iter().filter(|r| r.accepted) {
            assert!(rec.min_dihedral_after > rec.min_dihedral_before);
        }
        mesh.validate().unwrap();
    }

    #[test]
    fn sizing_pass_logs_boundary_rejections() {
        // Octahedron ring edges are boundary and longer than 4/3 t for
        // t = 1; the pass must leave a logged rejection for each.
        let mut mesh = samples::octahedron_mesh();
        let rule = SizingRule::new(1.0);
        let mut log = OperationLog::default();
        let s = sizing_pass(&mut mesh, &rule, &mut log);
        assert_eq!(s.accepted, 0);
        let rejected: Vec<_> = log
            .records()
            .iter()
            .filter(|r| !r.accepted && r.kind == OpKind::Split)
            .collect();
        // Every over-long edge is a boundary ring edge with a log entry.
        for e in mesh.edges() {
            let (a, b) = e.endpoints();
            let len = mesh.position(a).distance(mesh.position(b));
            if len > rule.split_threshold() {
                assert!(rejected
                    .iter()
                    .any(|r| r.involved == vec![a, b] || r.involved == vec![b, a]));
            }
        }
        mesh.validate().unwrap();
    }

    #[test]
    fn sizing_pass_splits_coarse_cube() {
        let mut mesh = samples::cube_grid_mesh(2);
        let rule = SizingRule::new(0.3);
        let mut log = OperationLog::default();
        let before = mesh.enclosed_volume();
        let s = sizing_pass(&mut mesh, &rule, &mut log);
        assert!(s.splits > 0);
        assert!((mesh.enclosed_volume() - before).abs() <= 1e-9 * before);
        mesh.validate().unwrap();
        // Post-pass audit: every remaining offender has a logged rejection.
        for e in mesh.edges() {
            let (a, b) = e.endpoints();
            let len = mesh.position(a).distance(mesh.position(b));
            if len > rule.split_threshold() || len < rule.collapse_threshold() {
                let logged = log
                    .records()
                    .iter()
                    .any(|r| !r.accepted && (r.involved == vec![a, b] || r.involved == vec![b, a]));
                assert!(logged, "offending edge ({a}, {b}) of length {len} unlogged");
            }
        }
    }
}
