//! Coarsening of linear triangulations of implicit surfaces by edge collapse.

use std::collections::HashSet;

use super::builders::newton_project;
use super::{LevelSet, Point, SurfaceMesh};
use crate::error::{Error, Result};

/// Edges shorter than this fraction of the target length are collapsed.
const COLLAPSE_BELOW: f64 = 0.75;
/// Collapses may not create edges longer than this fraction of the target length.
const MAX_EDGE: f64 = 1.5;
/// Minimum cosine between a face normal before and after a vertex move.
const MIN_NORMAL_COS: f64 = 0.5;
/// Minimum shape quality `4 sqrt(3) area / sum(edge^2)` of a new face.
const MIN_QUALITY: f64 = 0.15;
const MAX_PASSES: usize = 40;
const SMOOTHING_SWEEPS: usize = 8;

struct Work {
    pos: Vec<Point>,
    faces: Vec<[usize; 3]>,
    face_alive: Vec<bool>,
    vert_alive: Vec<bool>,
    vert_faces: Vec<Vec<usize>>,
}

fn normal(a: &Point, b: &Point, c: &Point) -> Point {
    (b - a).cross(&(c - a))
}

fn quality(a: &Point, b: &Point, c: &Point) -> f64 {
    let area2 = normal(a, b, c).norm();
    let l2 = (b - a).norm_squared() + (c - b).norm_squared() + (a - c).norm_squared();
    if l2 > 0.0 {
        2.0 * 3f64.sqrt() * area2 / l2
    } else {
        0.0
    }
}

impl Work {
    fn faces_of(&self, v: usize) -> Vec<usize> {
        self.vert_faces[v].iter().copied().filter(|&f| self.face_alive[f]).collect()
    }

    fn neighbours(&self, v: usize) -> HashSet<usize> {
        let mut out = HashSet::new();
        for f in self.faces_of(v) {
            out.extend(self.faces[f].iter().copied().filter(|&w| w != v));
        }
        out
    }

    /// Checks that moving the vertices `movers` to `p` keeps every face in `faces` (other
    /// than `skip`) oriented and well shaped.
    fn move_ok(&self, faces: &[usize], movers: &[usize], p: &Point, skip: &[usize]) -> bool {
        faces.iter().filter(|f| !skip.contains(f)).all(|&f| {
            let old = self.faces[f].map(|v| self.pos[v]);
            let new = self.faces[f].map(|v| if movers.contains(&v) { *p } else { self.pos[v] });
            let n0 = normal(&old[0], &old[1], &old[2]);
            let n1 = normal(&new[0], &new[1], &new[2]);
            n0.dot(&n1) > MIN_NORMAL_COS * n0.norm() * n1.norm()
                && quality(&new[0], &new[1], &new[2]) >= MIN_QUALITY.min(quality(&old[0], &old[1], &old[2]))
        })
    }

    fn try_collapse(&mut self, ls: &dyn LevelSet, a: usize, b: usize, target: f64) -> bool {
        if !self.vert_alive[a] || !self.vert_alive[b] {
            return false;
        }
        if (self.pos[a] - self.pos[b]).norm() >= COLLAPSE_BELOW * target {
            return false;
        }
        let fa = self.faces_of(a);
        let fb = self.faces_of(b);
        let shared: Vec<usize> = fa.iter().copied().filter(|f| fb.contains(f)).collect();
        if shared.len() != 2 {
            return false;
        }
        let opposite: Vec<usize> = shared
            .iter()
            .map(|&f| self.faces[f].into_iter().find(|&v| v != a && v != b).unwrap())
            .collect();
        let na = self.neighbours(a);
        let nb = self.neighbours(b);
        let common: HashSet<usize> = na.intersection(&nb).copied().collect();
        if common.len() != 2 || !opposite.iter().all(|v| common.contains(v)) {
            return false;
        }
        if opposite.iter().any(|&v| self.faces_of(v).len() <= 3) || na.len() + nb.len() < 7 {
            return false;
        }
        let Ok(p) = newton_project(ls, 0.5 * (self.pos[a] + self.pos[b]), a) else {
            return false;
        };
        if na.union(&nb).any(|&v| v != a && v != b && (self.pos[v] - p).norm() > MAX_EDGE * target) {
            return false;
        }
        let mut ring = fa.clone();
        ring.extend(fb.iter().copied().filter(|f| !fa.contains(f)));
        if !self.move_ok(&ring, &[a, b], &p, &shared) {
            return false;
        }
        self.pos[a] = p;
        for &f in &fb {
            for v in self.faces[f].iter_mut() {
                if *v == b {
                    *v = a;
                }
            }
        }
        for &f in &shared {
            self.face_alive[f] = false;
        }
        self.vert_alive[b] = false;
        self.vert_faces[a] = ring.into_iter().filter(|f| !shared.contains(f)).collect();
        true
    }

    fn smooth(&mut self, ls: &dyn LevelSet) {
        for v in 0..self.pos.len() {
            if !self.vert_alive[v] {
                continue;
            }
            let nbrs = self.neighbours(v);
            let centroid = nbrs.iter().map(|&w| self.pos[w]).sum::<Point>() / nbrs.len() as f64;
            let g = ls.gradient(&self.pos[v]);
            let nrm = g / g.norm();
            let d = centroid - self.pos[v];
            let Ok(p) = newton_project(ls, self.pos[v] + d - nrm * nrm.dot(&d), v) else {
                continue;
            };
            if self.move_ok(&self.faces_of(v), &[v], &p, &[]) {
                self.pos[v] = p;
            }
        }
    }
}

/// Coarsens a linear mesh whose vertices lie on `{phi = 0}` towards edge length `target`.
/// Collapsed edges are replaced by their projected midpoint; collapses that would change
/// the topology, flip a face or create a sliver are skipped. A few sweeps of tangential
/// Laplacian smoothing with reprojection follow.
pub fn coarsen(mesh: &SurfaceMesh, ls: &dyn LevelSet, target: f64) -> Result<SurfaceMesh> {
    if mesh.degree() != 1 {
        return Err(Error::InvalidMesh("coarsening needs a linear mesh".into()));
    }
    if !(target > 0.0) {
        return Err(Error::InvalidMesh(format!("target edge length must be positive, got {target}")));
    }
    let n = mesh.num_nodes();
    let faces: Vec<[usize; 3]> = (0..mesh.num_elements())
        .map(|e| {
            let el = mesh.element(e);
            [el[0], el[1], el[2]]
        })
        .collect();
    let mut vert_faces = vec![Vec::new(); n];
    for (f, face) in faces.iter().enumerate() {
        for &v in face {
            vert_faces[v].push(f);
        }
    }
    let mut w = Work {
        pos: mesh.nodes().to_vec(),
        face_alive: vec![true; faces.len()],
        faces,
        vert_alive: vec![true; n],
        vert_faces,
    };

    for _ in 0..MAX_PASSES {
        let mut edges: Vec<(f64, usize, usize)> = Vec::new();
        for (f, face) in w.faces.iter().enumerate() {
            if !w.face_alive[f] {
                continue;
            }
            for i in 0..3 {
                let (a, b) = (face[i], face[(i + 1) % 3]);
                let len = (w.pos[a] - w.pos[b]).norm();
                if a < b && len < COLLAPSE_BELOW * target {
                    edges.push((len, a, b));
                }
            }
        }
        edges.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        let mut collapsed = 0;
        for (_, a, b) in edges {
            if w.try_collapse(ls, a, b, target) {
                collapsed += 1;
            }
        }
        w.smooth(ls);
        if collapsed == 0 {
            break;
        }
    }
    for _ in 0..SMOOTHING_SWEEPS {
        w.smooth(ls);
    }

    let mut index = vec![usize::MAX; n];
    let mut nodes = Vec::new();
    for v in 0..n {
        if w.vert_alive[v] {
            index[v] = nodes.len();
            nodes.push(w.pos[v]);
        }
    }
    let elements = w
        .faces
        .iter()
        .zip(&w.face_alive)
        .filter(|(_, &alive)| alive)
        .map(|(f, _)| f.iter().map(|&v| index[v]).collect())
        .collect();
    SurfaceMesh::new(1, nodes, elements)
}
