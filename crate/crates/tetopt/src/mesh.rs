//! Mesh data model: indexed vertices and tetrahedra with tet-to-tet
//! adjacency, cavity queries and global validity checks.
//!
//! All mutation funnels through [`TetMesh::replace_tets`], which keeps the
//! adjacency and incidence maps consistent. Deleted elements are tombstoned;
//! indices stay stable within a run and are compacted only on output.

use std::collections::{HashMap, HashSet};

use crate::error::Error;
use crate::geometry::{bbox_diag, signed_volume_pts, TetGeom};
use crate::Point3;

/// Whether a vertex lies on the boundary surface or strictly inside.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VertexKind {
    Interior,
    Boundary,
}

/// For a positively oriented tet `(v0, v1, v2, v3)`, `FACE_ORDER[k]` lists
/// the face opposite local vertex `k`, ordered so its normal points outward
/// (equivalently: `(v_k, face)` is again positively oriented).
pub const FACE_ORDER: [[usize; 3]; 4] = [[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]];

/// Canonical unordered vertex pair identifying an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeKey {
    a: usize,
    b: usize,
}

impl EdgeKey {
    pub fn new(u: usize, v: usize) -> Self {
        assert_ne!(u, v, "edge endpoints must differ");
        if u < v {
            Self { a: u, b: v }
        } else {
            Self { a: v, b: u }
        }
    }

    pub fn endpoints(&self) -> (usize, usize) {
        (self.a, self.b)
    }
}

/// The cavity of an interior vertex: its incident tets, each paired with the
/// opposite-face triple ordered so the tet `(center, triple)` has positive
/// signed volume.
#[derive(Clone, Debug)]
pub struct OneRing {
    pub center: usize,
    pub cells: Vec<RingCell>,
}

#[derive(Clone, Copy, Debug)]
pub struct RingCell {
    pub tet: usize,
    pub triple: [usize; 3],
}

/// Tets around an edge in rotational order. `link` holds the ring vertices;
/// for a closed star `link.len() == tets.len()` and tet `i` contains
/// `link[i]` and `link[(i + 1) % n]`; an open star has one extra link vertex.
#[derive(Clone, Debug)]
pub struct EdgeStar {
    pub tets: Vec<usize>,
    pub link: Vec<usize>,
    pub closed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpKind {
    Flip23,
    Flip32,
    EdgeRemoval,
    Split,
    Collapse,
    VertexSolve,
}

/// One record per attempted operation; the log is append-only within a run.
#[derive(Clone, Debug)]
pub struct OpRecord {
    pub kind: OpKind,
    pub involved: Vec<usize>,
    pub accepted: bool,
    pub reason: String,
    pub min_dihedral_before: f64,
    pub min_dihedral_after: f64,
    /// Cavity volume before and after an accepted operation; NaN for
    /// rejections and vertex solves.
    pub volume_before: f64,
    pub volume_after: f64,
}

#[derive(Clone, Debug, Default)]
pub struct OperationLog {
    records: Vec<OpRecord>,
}

impl OperationLog {
    pub fn push(&mut self, rec: OpRecord) {
        self.records.push(rec);
    }

    pub fn records(&self) -> &[OpRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct TetMesh {
    positions: Vec<Point3>,
    vertex_kind: Vec<VertexKind>,
    vertex_alive: Vec<bool>,
    tets: Vec<[usize; 4]>,
    tet_alive: Vec<bool>,
    neighbors: Vec<[Option<usize>; 4]>,
    incident_tet: Vec<Option<usize>>,
    boundary_faces: HashSet<[usize; 3]>,
    boundary_edges: HashSet<EdgeKey>,
    bbox_diag: f64,
}

fn sorted3(mut f: [usize; 3]) -> [usize; 3] {
    f.sort_unstable();
    f
}

impl TetMesh {
    /// Builds a mesh from raw vertex positions and tet index quadruples.
    ///
    /// Tets with negative signed volume get two vertices swapped; tets with
    /// near-zero volume (relative to the bounding-box scale) are an error.
    pub fn from_parts(positions: Vec<Point3>, mut tets: Vec<[usize; 4]>) -> Result<Self, Error> {
        for (i, p) in positions.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::ValidationFailure(format!(
                    "vertex {i} has non-finite coordinates"
                )));
            }
        }
        let diag = bbox_diag(positions.iter().copied());
        let vol_eps = 1e-14 * diag * diag * diag;
        for (i, tet) in tets.iter_mut().enumerate() {
            for &v in tet.iter() {
                if v >= positions.len() {
                    return Err(Error::ValidationFailure(format!(
                        "tet {i} references missing vertex {v}"
                    )));
                }
            }
            let v = signed_volume_pts(
                positions[tet[0]],
                positions[tet[1]],
                positions[tet[2]],
                positions[tet[3]],
            );
            if v.abs() <= vol_eps {
                return Err(Error::ZeroVolumeTet(i));
            }
            if v < 0.0 {
                tet.swap(1, 2);
            }
        }
        let n_verts = positions.len();
        let n_tets = tets.len();
        let mut mesh = Self {
            positions,
            vertex_kind: vec![VertexKind::Interior; n_verts],
            vertex_alive: vec![true; n_verts],
            tets,
            tet_alive: vec![true; n_tets],
            neighbors: vec![[None; 4]; n_tets],
            incident_tet: vec![None; n_verts],
            boundary_faces: HashSet::new(),
            boundary_edges: HashSet::new(),
            bbox_diag: diag,
        };
        mesh.build_adjacency()?;
        Ok(mesh)
    }

    /// Populates neighbors, incident tets, boundary faces and vertex flags
    /// from the tet list. A vertex is Boundary iff it lies on a face shared
    /// by exactly one tet.
    pub fn build_adjacency(&mut self) -> Result<(), Error> {
        let mut face_map: HashMap<[usize; 3], Vec<(usize, usize)>> = HashMap::new();
        for (t, tet) in self.tets.iter().enumerate() {
            if !self.tet_alive[t] {
                continue;
            }
            for k in 0..4 {
                let f = FACE_ORDER[k].map(|i| tet[i]);
                face_map.entry(sorted3(f)).or_default().push((t, k));
            }
        }

        self.neighbors = vec![[None; 4]; self.tets.len()];
        self.boundary_faces.clear();
        self.boundary_edges.clear();
        for (face, owners) in &face_map {
            match owners.as_slice() {
                [(t, k)] => {
                    self.neighbors[*t][*k] = None;
                    self.boundary_faces.insert(*face);
                    self.boundary_edges.insert(EdgeKey::new(face[0], face[1]));
                    self.boundary_edges.insert(EdgeKey::new(face[0], face[2]));
                    self.boundary_edges.insert(EdgeKey::new(face[1], face[2]));
                }
                [(t1, k1), (t2, k2)] => {
                    self.neighbors[*t1][*k1] = Some(*t2);
                    self.neighbors[*t2][*k2] = Some(*t1);
                }
                _ => return Err(Error::NonManifoldFace(face[0], face[1], face[2])),
            }
        }

        self.incident_tet = vec![None; self.positions.len()];
        for (t, tet) in self.tets.iter().enumerate() {
            if !self.tet_alive[t] {
                continue;
            }
            for &v in tet {
                let slot = &mut self.incident_tet[v];
                // Keep the lowest incident tet index for determinism.
                if slot.map_or(true, |cur| t < cur) {
                    *slot = Some(t);
                }
            }
        }
        for v in 0..self.positions.len() {
            if self.vertex_alive[v] && self.incident_tet[v].is_none() {
                return Err(Error::DanglingVertex(v));
            }
        }

        for kind in self.vertex_kind.iter_mut() {
            *kind = VertexKind::Interior;
        }
        for face in &self.boundary_faces {
            for &v in face {
                self.vertex_kind[v] = VertexKind::Boundary;
            }
        }
        Ok(())
    }

    pub fn vertex_count_alive(&self) -> usize {
        self.vertex_alive.iter().filter(|a| **a).count()
    }

    pub fn tet_count_alive(&self) -> usize {
        self.tet_alive.iter().filter(|a| **a).count()
    }

    pub fn position(&self, v: usize) -> Point3 {
        self.positions[v]
    }

    pub fn set_position(&mut self, v: usize, p: Point3) {
        debug_assert!(p.is_finite());
        self.positions[v] = p;
    }

    pub fn kind(&self, v: usize) -> VertexKind {
        self.vertex_kind[v]
    }

    pub fn is_interior(&self, v: usize) -> bool {
        self.vertex_kind[v] == VertexKind::Interior
    }

    pub fn is_vertex_alive(&self, v: usize) -> bool {
        self.vertex_alive[v]
    }

    pub fn is_tet_alive(&self, t: usize) -> bool {
        self.tet_alive[t]
    }

    pub fn tet(&self, t: usize) -> [usize; 4] {
        self.tets[t]
    }

    pub fn neighbor(&self, t: usize, k: usize) -> Option<usize> {
        self.neighbors[t][k]
    }

    pub fn tet_geom(&self, t: usize) -> TetGeom<f64> {
        let [a, b, c, d] = self.tets[t];
        TetGeom::new(
            self.positions[a],
            self.positions[b],
            self.positions[c],
            self.positions[d],
        )
    }

    pub fn bbox_diag(&self) -> f64 {
        self.bbox_diag
    }

    pub fn live_tets(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.tets.len()).filter(move |&t| self.tet_alive[t])
    }

    pub fn live_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.positions.len()).filter(move |&v| self.vertex_alive[v])
    }

    pub fn interior_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        self.live_vertices()
            .filter(move |&v| self.vertex_kind[v] == VertexKind::Interior)
    }

    pub fn boundary_faces(&self) -> &HashSet<[usize; 3]> {
        &self.boundary_faces
    }

    pub fn is_boundary_face(&self, f: [usize; 3]) -> bool {
        self.boundary_faces.contains(&sorted3(f))
    }

    pub fn is_boundary_edge(&self, e: EdgeKey) -> bool {
        self.boundary_edges.contains(&e)
    }

    /// All edges of live tets, deduplicated and sorted.
    pub fn edges(&self) -> Vec<EdgeKey> {
        let mut out: Vec<EdgeKey> = Vec::with_capacity(self.tets.len() * 3);
        for t in self.live_tets() {
            let tet = self.tets[t];
            for i in 0..4 {
                for j in (i + 1)..4 {
                    out.push(EdgeKey::new(tet[i], tet[j]));
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Tets incident to a vertex, walked through the adjacency from its
    /// cached incident tet.
    pub fn vertex_star(&self, v: usize) -> Vec<usize> {
        // Stars are small; a linear visited list beats hashing here.
        let Some(start) = self.incident_tet[v] else {
            return Vec::new();
        };
        let mut visited: Vec<usize> = Vec::with_capacity(32);
        visited.push(start);
        let mut cursor = 0;
        while cursor < visited.len() {
            let t = visited[cursor];
            cursor += 1;
            for k in 0..4 {
                if let Some(nb) = self.neighbors[t][k] {
                    if self.tets[nb].contains(&v) && !visited.contains(&nb) {
                        visited.push(nb);
                    }
                }
            }
        }
        visited.sort_unstable();
        visited
    }

    /// The one-ring cavity of an interior vertex. Each cell's triple is
    /// ordered so that `(v, triple)` has positive signed volume in the
    /// current positions.
    pub fn one_ring(&self, v: usize) -> Result<OneRing, Error> {
        if self.vertex_kind[v] != VertexKind::Interior {
            return Err(Error::BoundaryVertex(v));
        }
        let mut cells = Vec::new();
        for t in self.vertex_star(v) {
            let tet = self.tets[t];
            let local = tet.iter().position(|&u| u == v).expect("star tet contains v");
            let triple = FACE_ORDER[local].map(|i| tet[i]);
            cells.push(RingCell { tet: t, triple });
        }
        Ok(OneRing { center: v, cells })
    }

    /// Tets around an edge in rotational order, via adjacency walk.
    pub fn edge_star(&self, e: EdgeKey) -> Result<EdgeStar, Error> {
        let (a, b) = e.endpoints();
        let star_a = self.vertex_star(a);
        let start = star_a
            .iter()
            .copied()
            .find(|&t| self.tets[t].contains(&b))
            .ok_or(Error::NoSuchEdge(a, b))?;

        let others = |t: usize| -> [usize; 2] {
            let mut it = self.tets[t].iter().copied().filter(|&v| v != a && v != b);
            [it.next().unwrap(), it.next().unwrap()]
        };
        // Entering tet `t` via link vertex `entry`, the exit face is
        // (a, b, w) with w the other link vertex; it lies opposite `entry`.
        let step = |t: usize, entry: usize| -> (Option<usize>, usize) {
            let [x, y] = others(t);
            let w = if x == entry { y } else { x };
            let local_entry = self.tets[t].iter().position(|&v| v == entry).unwrap();
            (self.neighbors[t][local_entry], w)
        };
        // Walks from `start` entering via `entry`; the link list has one
        // more element than the tet list (the two open ends), or closes on
        // itself with `links[n] == links[0]`.
        let walk = |entry: usize| -> (Vec<usize>, Vec<usize>, bool) {
            let mut tets = vec![start];
            let mut links = vec![entry];
            let mut cur = start;
            let mut ent = entry;
            loop {
                let (next, w) = step(cur, ent);
                links.push(w);
                match next {
                    Some(n) if n == start => return (tets, links, true),
                    Some(n) => {
                        tets.push(n);
                        cur = n;
                        ent = w;
                    }
                    None => return (tets, links, false),
                }
            }
        };

        let [x0, y0] = others(start);
        let (entry_fwd, entry_bwd) = if x0 < y0 { (x0, y0) } else { (y0, x0) };
        let (fwd_tets, mut fwd_links, closed) = walk(entry_fwd);
        if closed {
            fwd_links.pop();
            return Ok(EdgeStar {
                tets: fwd_tets,
                link: fwd_links,
                closed: true,
            });
        }
        let (bwd_tets, bwd_links, back_closed) = walk(entry_bwd);
        debug_assert!(!back_closed);
        // Chain the reversed backward walk onto the forward walk; `start`
        // appears once, at the seam.
        let mut tets: Vec<usize> = bwd_tets[1..].iter().rev().copied().collect();
        tets.extend(fwd_tets);
        let mut link: Vec<usize> = bwd_links[1..].iter().rev().copied().collect();
        link.extend(fwd_links[1..].iter().copied());
        debug_assert_eq!(link.len(), tets.len() + 1);
        Ok(EdgeStar {
            tets,
            link,
            closed: false,
        })
    }

    /// Sum of signed tet volumes over the live mesh.
    pub fn enclosed_volume(&self) -> f64 {
        self.live_tets()
            .map(|t| {
                let [a, b, c, d] = self.tets[t];
                signed_volume_pts(
                    self.positions[a],
                    self.positions[b],
                    self.positions[c],
                    self.positions[d],
                )
            })
            .sum()
    }

    /// Boundary faces with outward orientation, derived from owner tets.
    pub fn boundary_faces_oriented(&self) -> Vec<[usize; 3]> {
        let mut out = Vec::with_capacity(self.boundary_faces.len());
        for t in self.live_tets() {
            for k in 0..4 {
                if self.neighbors[t][k].is_none() {
                    out.push(FACE_ORDER[k].map(|i| self.tets[t][i]));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Replaces `dead` tets by `new_tets`, patching adjacency and incidence
    /// locally. The caller has already checked that the new tets are valid
    /// (positive volume) and tile the same cavity.
    pub fn replace_tets(
        &mut self,
        dead: &[usize],
        new_tets: &[[usize; 4]],
    ) -> Result<Vec<usize>, Error> {
        let dead_set: HashSet<usize> = dead.iter().copied().collect();

        // Faces on the rim of the cavity, mapped to the outside neighbor.
        let mut rim: HashMap<[usize; 3], Option<(usize, usize)>> = HashMap::new();
        // Fallback incidence for vertices of dead tets: a live outside tet.
        let mut stash: HashMap<usize, usize> = HashMap::new();
        for &d in dead {
            debug_assert!(self.tet_alive[d]);
            for k in 0..4 {
                let face = FACE_ORDER[k].map(|i| self.tets[d][i]);
                let key = sorted3(face);
                match self.neighbors[d][k] {
                    Some(nb) if dead_set.contains(&nb) => {}
                    Some(nb) => {
                        let back = (0..4)
                            .find(|&j| self.neighbors[nb][j] == Some(d))
                            .expect("adjacency symmetric");
                        rim.insert(key, Some((nb, back)));
                        for &v in &face {
                            stash.entry(v).or_insert(nb);
                        }
                    }
                    None => {
                        rim.insert(key, None);
                    }
                }
            }
        }

        let dead_vertices: Vec<usize> = {
            let mut vs: Vec<usize> = dead.iter().flat_map(|&d| self.tets[d]).collect();
            vs.sort_unstable();
            vs.dedup();
            vs
        };

        for &d in dead {
            self.tet_alive[d] = false;
        }

        let mut ids = Vec::with_capacity(new_tets.len());
        for tet in new_tets {
            let id = self.tets.len();
            self.tets.push(*tet);
            self.tet_alive.push(true);
            self.neighbors.push([None; 4]);
            ids.push(id);
        }

        // Pair faces among the new tets and against the rim.
        let mut open: HashMap<[usize; 3], (usize, usize)> = HashMap::new();
        for &id in &ids {
            for k in 0..4 {
                let face = sorted3(FACE_ORDER[k].map(|i| self.tets[id][i]));
                if let Some((other, ok)) = open.remove(&face) {
                    self.neighbors[id][k] = Some(other);
                    self.neighbors[other][ok] = Some(id);
                } else {
                    open.insert(face, (id, k));
                }
            }
        }
        for (face, (id, k)) in open {
            match rim.get(&face) {
                Some(Some((nb, back))) => {
                    self.neighbors[id][k] = Some(*nb);
                    self.neighbors[*nb][*back] = Some(id);
                }
                Some(None) => {
                    self.neighbors[id][k] = None;
                    debug_assert!(self.boundary_faces.contains(&face));
                }
                None => {
                    return Err(Error::ValidationFailure(format!(
                        "replacement face {face:?} does not close the cavity"
                    )));
                }
            }
        }

        for &id in &ids {
            for &v in &self.tets[id] {
                let slot = &mut self.incident_tet[v];
                match *slot {
                    Some(cur) if self.tet_alive[cur] && cur < id => {}
                    _ => *slot = Some(id),
                }
            }
        }
        for v in dead_vertices {
            if !self.vertex_alive[v] {
                continue;
            }
            let ok = self.incident_tet[v].map_or(false, |t| self.tet_alive[t]);
            if !ok {
                // A vertex with no surviving tet is being removed by the
                // caller (edge collapse); anything else is caught by
                // validate().
                self.incident_tet[v] = stash.get(&v).copied();
            }
        }
        Ok(ids)
    }

    /// Adds a vertex (used by edge split); returns its index.
    pub fn push_vertex(&mut self, p: Point3, kind: VertexKind) -> usize {
        debug_assert!(p.is_finite());
        self.positions.push(p);
        self.vertex_kind.push(kind);
        self.vertex_alive.push(true);
        self.incident_tet.push(None);
        self.positions.len() - 1
    }

    /// Tombstones a vertex (used by edge collapse).
    pub fn kill_vertex(&mut self, v: usize) {
        self.vertex_alive[v] = false;
        self.incident_tet[v] = None;
    }

    /// Full validity check: positive volumes, symmetric adjacency, face
    /// multiplicity, boundary manifoldness, incidence and flags.
    pub fn validate(&self) -> Result<(), Error> {
        let mut face_map: HashMap<[usize; 3], usize> = HashMap::new();
        let mut vert_seen = vec![false; self.positions.len()];
        if self.live_tets().next().is_none() {
            return Err(Error::EmptyMesh);
        }
        for t in self.live_tets() {
            let tet = self.tets[t];
            for i in 0..4 {
                for j in (i + 1)..4 {
                    if tet[i] == tet[j] {
                        return Err(Error::ValidationFailure(format!(
                            "tet {t} repeats vertex {}",
                            tet[i]
                        )));
                    }
                }
                if !self.vertex_alive[tet[i]] {
                    return Err(Error::ValidationFailure(format!(
                        "tet {t} references dead vertex {}",
                        tet[i]
                    )));
                }
                vert_seen[tet[i]] = true;
            }
            let vol = signed_volume_pts(
                self.positions[tet[0]],
                self.positions[tet[1]],
                self.positions[tet[2]],
                self.positions[tet[3]],
            );
            if vol <= 0.0 {
                return Err(Error::ValidationFailure(format!(
                    "tet {t} has nonpositive volume {vol}"
                )));
            }
            for k in 0..4 {
                let face = sorted3(FACE_ORDER[k].map(|i| tet[i]));
                *face_map.entry(face).or_insert(0) += 1;
                match self.neighbors[t][k] {
                    Some(nb) => {
                        if !self.tet_alive[nb] {
                            return Err(Error::ValidationFailure(format!(
                                "tet {t} points to dead neighbor {nb}"
                            )));
                        }
                        let back = (0..4).any(|j| self.neighbors[nb][j] == Some(t));
                        if !back {
                            return Err(Error::ValidationFailure(format!(
                                "adjacency not symmetric between {t} and {nb}"
                            )));
                        }
                    }
                    None => {
                        if !self.boundary_faces.contains(&face) {
                            return Err(Error::ValidationFailure(format!(
                                "face {face:?} has no neighbor but is not a boundary face"
                            )));
                        }
                    }
                }
            }
        }
        let mut boundary_now: Vec<[usize; 3]> = Vec::new();
        for (face, count) in &face_map {
            match count {
                1 => boundary_now.push(*face),
                2 => {}
                _ => return Err(Error::NonManifoldFace(face[0], face[1], face[2])),
            }
        }
        if boundary_now.len() != self.boundary_faces.len()
            || boundary_now.iter().any(|f| !self.boundary_faces.contains(f))
        {
            return Err(Error::ValidationFailure(
                "boundary face set drifted from face multiplicity".into(),
            ));
        }
        // Every boundary edge in exactly two boundary faces.
        let mut edge_count: HashMap<EdgeKey, usize> = HashMap::new();
        for f in &boundary_now {
            for (i, j) in [(0, 1), (0, 2), (1, 2)] {
                *edge_count.entry(EdgeKey::new(f[i], f[j])).or_insert(0) += 1;
            }
        }
        for (e, c) in &edge_count {
            if *c != 2 {
                let (a, b) = e.endpoints();
                return Err(Error::ValidationFailure(format!(
                    "boundary edge ({a}, {b}) lies in {c} boundary faces"
                )));
            }
        }
        for v in 0..self.positions.len() {
            if !self.vertex_alive[v] {
                continue;
            }
            if !vert_seen[v] {
                return Err(Error::DanglingVertex(v));
            }
            match self.incident_tet[v] {
                Some(t) if self.tet_alive[t] && self.tets[t].contains(&v) => {}
                _ => {
                    return Err(Error::ValidationFailure(format!(
                        "incident tet of vertex {v} is stale"
                    )))
                }
            }
            let on_boundary = FACE_ORDER.len() > 0
                && self
                    .boundary_faces
                    .iter()
                    .any(|f| f.contains(&v));
            let flagged = self.vertex_kind[v] == VertexKind::Boundary;
            if on_boundary != flagged {
                return Err(Error::ValidationFailure(format!(
                    "vertex {v} boundary flag inconsistent"
                )));
            }
        }
        Ok(())
    }

    /// Deterministic fingerprint of positions and connectivity; used to
    /// check that rejected operations leave the mesh untouched.
    pub fn topology_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut mix = |x: u64| {
            h ^= x;
            h = h.wrapping_mul(0x100000001b3);
        };
        for v in self.live_vertices() {
            mix(v as u64);
            let p = self.positions[v];
            mix(p.x.to_bits());
            mix(p.y.to_bits());
            mix(p.z.to_bits());
        }
        for t in self.live_tets() {
            mix(t as u64);
            for &v in &self.tets[t] {
                mix(v as u64);
            }
        }
        let mut faces: Vec<[usize; 3]> = self.boundary_faces.iter().copied().collect();
        faces.sort_unstable();
        for f in faces {
            for v in f {
                mix(v as u64);
            }
        }
        h
    }

    /// Compacts tombstoned elements away, returning positions, tets and
    /// sorted boundary triangles with fresh contiguous indices.
    pub fn compact(&self) -> (Vec<Point3>, Vec<[usize; 4]>, Vec<[usize; 3]>) {
        let mut remap = vec![usize::MAX; self.positions.len()];
        let mut positions = Vec::with_capacity(self.vertex_count_alive());
        for v in self.live_vertices() {
            remap[v] = positions.len();
            positions.push(self.positions[v]);
        }
        let tets: Vec<[usize; 4]> = self
            .live_tets()
            .map(|t| self.tets[t].map(|v| remap[v]))
            .collect();
        let mut tris: Vec<[usize; 3]> = self
            .boundary_faces_oriented()
            .iter()
            .map(|f| f.map(|v| remap[v]))
            .collect();
        tris.sort_unstable();
        (positions, tets, tris)
    }
}
