//! Incremental Delaunay tetrahedralization of a point set via Bowyer-Watson
//! insertion with ghost tets.
//!
//! The convex hull is closed symbolically by ghost tets `(f0, f1, f2, GHOST)`
//! carrying an outward-oriented hull face, so hull coverage is exact and no
//! oversized bounding tet is needed. All sign decisions go through the exact
//! predicates in [`crate::predicates`]; cospherical ties (sign zero) are
//! treated as non-conflicts, which keeps every circumsphere empty in its
//! strict interior.

use std::collections::HashMap;

use crate::error::Error;
use crate::mesh::{TetMesh, FACE_ORDER};
use crate::predicates::{in_circle_coplanar, in_sphere, orientation, Sign};
use crate::Point3;

const GHOST: usize = usize::MAX;

struct Builder {
    points: Vec<Point3>,
    tets: Vec<[usize; 4]>,
    alive: Vec<bool>,
    neighbors: Vec<[usize; 4]>,
    hint: usize,
}

fn face_key(mut f: [usize; 3]) -> [usize; 3] {
    f.sort_unstable();
    f
}

fn face_of(tet: [usize; 4], slot: usize) -> [usize; 3] {
    let mut out = [0usize; 3];
    let mut w = 0;
    for (i, &v) in tet.iter().enumerate() {
        if i != slot {
            out[w] = v;
            w += 1;
        }
    }
    out
}

impl Builder {
    fn is_ghost(&self, t: usize) -> bool {
        self.tets[t][3] == GHOST
    }

    fn conflict(&self, t: usize, p: Point3) -> bool {
        let [a, b, c, d] = self.tets[t];
        if d == GHOST {
            let (pa, pb, pc) = (self.points[a], self.points[b], self.points[c]);
            match orientation(pa, pb, pc, p) {
                Sign::Positive => true,
                Sign::Zero => in_circle_coplanar(pa, pb, pc, p) == Sign::Positive,
                Sign::Negative => false,
            }
        } else {
            in_sphere(
                self.points[a],
                self.points[b],
                self.points[c],
                self.points[d],
                p,
            ) == Sign::Positive
        }
    }

    /// Visibility walk from the hint toward `p`, returning a tet in conflict.
    fn locate(&self, p: Point3) -> Result<usize, Error> {
        let mut cur = if self.alive[self.hint] {
            self.hint
        } else {
            (0..self.tets.len())
                .find(|&t| self.alive[t] && !self.is_ghost(t))
                .ok_or(Error::DegenerateInput)?
        };
        let cap = 4 * self.tets.len() + 64;
        for _ in 0..cap {
            if self.is_ghost(cur) {
                // A ghost reached through a strict visibility step is in
                // conflict by construction.
                if self.conflict(cur, p) {
                    return Ok(cur);
                }
                cur = self.neighbors[cur][3];
                continue;
            }
            let tet = self.tets[cur];
            let mut stepped = false;
            for k in 0..4 {
                let f = FACE_ORDER[k].map(|i| tet[i]);
                if orientation(self.points[f[0]], self.points[f[1]], self.points[f[2]], p)
                    == Sign::Positive
                {
                    cur = self.neighbors[cur][k];
                    stepped = true;
                    break;
                }
            }
            if !stepped {
                // p lies in this closed tet.
                if self.conflict(cur, p) {
                    return Ok(cur);
                }
                break;
            }
        }
        // Deterministic fallback: scan for any conflicting tet.
        (0..self.tets.len())
            .find(|&t| self.alive[t] && self.conflict(t, p))
            .ok_or(Error::DegenerateInput)
    }

    fn insert(&mut self, pid: usize) -> Result<(), Error> {
        let p = self.points[pid];
        let seed = self.locate(p)?;

        // Grow the conflict region; record rim faces from the survivor side.
        let mut region: Vec<usize> = vec![seed];
        let mut in_region = vec![false; self.tets.len()];
        in_region[seed] = true;
        let mut stack = vec![seed];
        let mut rim: Vec<(usize, usize)> = Vec::new();
        while let Some(t) = stack.pop() {
            for k in 0..4 {
                let nb = self.neighbors[t][k];
                if in_region[nb] {
                    continue;
                }
                if self.conflict(nb, p) {
                    in_region[nb] = true;
                    region.push(nb);
                    stack.push(nb);
                } else {
                    let back = (0..4)
                        .find(|&j| self.neighbors[nb][j] == t)
                        .expect("adjacency symmetric");
                    rim.push((nb, back));
                }
            }
        }

        for &t in &region {
            self.alive[t] = false;
        }

        let mut created: Vec<usize> = Vec::with_capacity(rim.len());
        let mut open: HashMap<[usize; 3], (usize, usize)> = HashMap::new();
        for &(nb, j) in &rim {
            let tet = self.tets[nb];
            let (new_tet, rim_slot) = if self.is_ghost(nb) {
                let [f0, f1, f2, _] = tet;
                if j == 3 {
                    // Shared face is the hull face itself; the new real tet
                    // sees it reversed.
                    ([f0, f2, f1, pid], 3)
                } else {
                    // Shared side face: the new hull face traverses the
                    // shared edge opposite to the survivor's direction.
                    let (u, v) = match j {
                        0 => (f1, f2),
                        1 => (f2, f0),
                        _ => (f0, f1),
                    };
                    ([v, u, pid, GHOST], 2)
                }
            } else {
                let f = FACE_ORDER[j].map(|i| tet[i]);
                ([f[0], f[1], f[2], pid], 3)
            };
            let id = self.tets.len();
            self.tets.push(new_tet);
            self.alive.push(true);
            self.neighbors.push([usize::MAX; 4]);
            in_region.push(false);
            created.push(id);
            // Wire the rim face both ways.
            self.neighbors[id][rim_slot] = nb;
            self.neighbors[nb][j] = id;
            // Remaining faces pair up within the new shell.
            for slot in 0..4 {
                if slot == rim_slot {
                    continue;
                }
                let key = face_key(face_of(new_tet, slot));
                if let Some((other, oslot)) = open.remove(&key) {
                    self.neighbors[id][slot] = other;
                    self.neighbors[other][oslot] = id;
                } else {
                    open.insert(key, (id, slot));
                }
            }
        }
        if !open.is_empty() {
            return Err(Error::ValidationFailure(
                "insertion shell did not close".into(),
            ));
        }
        if let Some(&real) = created.iter().find(|&&t| !self.is_ghost(t)) {
            self.hint = real;
        }
        Ok(())
    }
}

/// Delaunay tetrahedralization of the convex hull of `points`.
///
/// Every returned tet's circumsphere is empty of input points in its strict
/// interior. Insertion order is a seeded random permutation; the result is
/// deterministic for a fixed seed.
pub fn delaunay_points(points: &[Point3], seed: u64) -> Result<TetMesh, Error> {
    if points.len() < 4 {
        return Err(Error::DegenerateInput);
    }
    for p in points {
        if !p.is_finite() {
            return Err(Error::DegenerateInput);
        }
    }
    // Exact duplicates are rejected up front.
    {
        let mut sorted: Vec<usize> = (0..points.len()).collect();
        sorted.sort_by(|&i, &j| {
            let (a, b) = (points[i], points[j]);
            (a.x, a.y, a.z)
                .partial_cmp(&(b.x, b.y, b.z))
                .expect("finite coordinates")
        });
        for w in sorted.windows(2) {
            if points[w[0]] == points[w[1]] {
                return Err(Error::DuplicatePoints);
            }
        }
    }

    let order = {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.shuffle(&mut rng);
        order
    };

    // First four affinely independent points of the shuffled order.
    let mut init: Option<[usize; 4]> = None;
    'search: for i2 in 2..order.len() {
        for i3 in (i2 + 1)..order.len() {
            let quad = [order[0], order[1], order[i2], order[i3]];
            if orientation(
                points[quad[0]],
                points[quad[1]],
                points[quad[2]],
                points[quad[3]],
            ) != Sign::Zero
            {
                init = Some(quad);
                // Move the chosen pair to the front of the remainder.
                break 'search;
            }
        }
    }
    let init = init.ok_or(Error::DegenerateInput)?;
    let mut first = init;
    if orientation(
        points[first[0]],
        points[first[1]],
        points[first[2]],
        points[first[3]],
    ) == Sign::Negative
    {
        first.swap(1, 2);
    }

    let mut b = Builder {
        points: points.to_vec(),
        tets: vec![first],
        alive: vec![true],
        neighbors: vec![[usize::MAX; 4]],
        hint: 0,
    };
    // Close the initial tet with four ghosts and wire all faces.
    let mut open: HashMap<[usize; 3], (usize, usize)> = HashMap::new();
    for slot in 0..4 {
        let f = FACE_ORDER[slot].map(|i| first[i]);
        let id = b.tets.len();
        b.tets.push([f[0], f[1], f[2], GHOST]);
        b.alive.push(true);
        b.neighbors.push([usize::MAX; 4]);
        b.neighbors[0][slot] = id;
        b.neighbors[id][3] = 0;
        for gslot in 0..3 {
            let key = face_key(face_of(b.tets[id], gslot));
            if let Some((other, oslot)) = open.remove(&key) {
                b.neighbors[id][gslot] = other;
                b.neighbors[other][oslot] = id;
            } else {
                open.insert(key, (id, gslot));
            }
        }
    }
    debug_assert!(open.is_empty());

    for &pid in &order {
        if init.contains(&pid) {
            continue;
        }
        b.insert(pid)?;
    }

    let real: Vec<[usize; 4]> = b
        .tets
        .iter()
        .zip(&b.alive)
        .filter(|(t, &a)| a && t[3] != GHOST)
        .map(|(t, _)| *t)
        .collect();
    TetMesh::from_parts(points.to_vec(), real)
}
