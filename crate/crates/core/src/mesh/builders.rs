use std::collections::HashMap;

use nalgebra::Vector3;

use super::levelset::{LevelSet, Shape};
use super::reference::ReferenceElement;
use super::{coarsen, Point, SurfaceMesh};
use crate::error::{Error, Result};

const PROJECTION_TOL: f64 = 1e-12;
const PROJECTION_MAX_ITER: usize = 50;
/// Target edge length of the coarsened genus-5 base mesh.
const GENUS5_EDGE: f64 = 0.115;

/// Regular icosahedron inscribed in the sphere of the given radius, outward oriented.
pub fn icosahedron(radius: f64) -> SurfaceMesh {
    let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let mut raw = Vec::with_capacity(12);
    for s1 in [-1.0, 1.0] {
        for s2 in [-1.0, 1.0] {
            raw.push(Point::new(0.0, s1, s2 * phi));
            raw.push(Point::new(s1, s2 * phi, 0.0));
            raw.push(Point::new(s2 * phi, 0.0, s1));
        }
    }
    // Edge length of the raw icosahedron is 2.
    let is_edge = |a: usize, b: usize| ((raw[a] - raw[b]).norm() - 2.0).abs() < 1e-9;
    let mut faces = Vec::with_capacity(20);
    for a in 0..12 {
        for b in a + 1..12 {
            for c in b + 1..12 {
                if is_edge(a, b) && is_edge(b, c) && is_edge(a, c) {
                    let n = (raw[b] - raw[a]).cross(&(raw[c] - raw[a]));
                    let centroid = raw[a] + raw[b] + raw[c];
                    if n.dot(&centroid) > 0.0 {
                        faces.push(vec![a, b, c]);
                    } else {
                        faces.push(vec![a, c, b]);
                    }
                }
            }
        }
    }
    let nodes = raw.iter().map(|p| p * (radius / p.norm())).collect();
    SurfaceMesh::new(1, nodes, faces).expect("icosahedron is a valid closed mesh")
}

/// Split every triangle of a linear mesh into four; new midpoints are passed through `place`.
pub fn refine_uniform(
    mesh: &SurfaceMesh,
    place: impl Fn(Point) -> Result<Point>,
) -> Result<SurfaceMesh> {
    if mesh.degree() != 1 {
        return Err(Error::Unsupported("uniform refinement of curved meshes".into()));
    }
    let mut nodes = mesh.nodes().to_vec();
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut faces = Vec::with_capacity(4 * mesh.num_elements());
    for el in mesh.topology().elements() {
        let mut mid = |a: usize, b: usize| -> Result<usize> {
            let key = (a.min(b), a.max(b));
            if let Some(&m) = midpoint.get(&key) {
                return Ok(m);
            }
            let p = place(0.5 * (nodes[a] + nodes[b]))?;
            nodes.push(p);
            midpoint.insert(key, nodes.len() - 1);
            Ok(nodes.len() - 1)
        };
        let (a, b, c) = (el[0], el[1], el[2]);
        let ab = mid(a, b)?;
        let bc = mid(b, c)?;
        let ca = mid(c, a)?;
        faces.push(vec![a, ab, ca]);
        faces.push(vec![ab, b, bc]);
        faces.push(vec![ca, bc, c]);
        faces.push(vec![ab, bc, ca]);
    }
    SurfaceMesh::new(1, nodes, faces)
}

/// Raise a linear mesh to degree `k`. New edge and interior nodes are placed at their
/// position on the flat triangle and then passed through `place`.
pub fn elevate_degree_with(
    mesh: &SurfaceMesh,
    k: usize,
    place: impl Fn(usize, Point) -> Result<Point>,
) -> Result<SurfaceMesh> {
    if mesh.degree() != 1 {
        return Err(Error::Unsupported(format!(
            "degree elevation expects a linear mesh, got degree {}",
            mesh.degree()
        )));
    }
    if k == 1 {
        return Ok(mesh.clone());
    }
    let reference = ReferenceElement::new(k);
    let mut nodes = mesh.nodes().to_vec();
    // (lo, hi) -> edge nodes ordered from lo to hi
    let mut edge_nodes: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    let mut elements = Vec::with_capacity(mesh.num_elements());
    for el in mesh.topology().elements() {
        let v = [el[0], el[1], el[2]];
        let mut local = v.to_vec();
        for (i, j) in [(0, 1), (1, 2), (2, 0)] {
            let (a, b) = (v[i], v[j]);
            let key = (a.min(b), a.max(b));
            if !edge_nodes.contains_key(&key) {
                let (p, q) = (nodes[key.0], nodes[key.1]);
                let mut ids = Vec::with_capacity(k - 1);
                for m in 1..k {
                    let t = m as f64 / k as f64;
                    let id = nodes.len();
                    nodes.push(place(id, p + (q - p) * t)?);
                    ids.push(id);
                }
                edge_nodes.insert(key, ids);
            }
            let ids = &edge_nodes[&key];
            if a < b {
                local.extend(ids.iter().copied());
            } else {
                local.extend(ids.iter().rev().copied());
            }
        }
        for l in reference.interior_nodes() {
            let [a0, a1, a2] = reference.multi_indices()[l];
            let p = (nodes[v[0]] * a0 as f64 + nodes[v[1]] * a1 as f64 + nodes[v[2]] * a2 as f64)
                / k as f64;
            let id = nodes.len();
            nodes.push(place(id, p)?);
            local.push(id);
        }
        elements.push(local);
    }
    SurfaceMesh::new(k, nodes, elements)
}

/// Raise a linear mesh to degree `k`, optionally projecting the new nodes onto a level set.
pub fn elevate_degree(
    mesh: &SurfaceMesh,
    k: usize,
    levelset: Option<&dyn LevelSet>,
) -> Result<SurfaceMesh> {
    match levelset {
        Some(ls) => elevate_degree_with(mesh, k, |id, p| newton_project(ls, p, id)),
        None => elevate_degree_with(mesh, k, |_, p| Ok(p)),
    }
}

/// Icosahedron-based sphere: `refinement` uniform subdivisions, then degree elevation,
/// with every node radially projected onto the sphere.
pub fn builtin_sphere(radius: f64, refinement: usize, k: usize) -> Result<SurfaceMesh> {
    if !(radius > 0.0) {
        return Err(Error::InvalidMesh(format!("sphere radius must be positive, got {radius}")));
    }
    let radial = |p: Point| Ok(p / p.norm());
    let mut mesh = icosahedron(1.0);
    for _ in 0..refinement {
        mesh = refine_uniform(&mesh, radial)?;
    }
    let mesh = elevate_degree_with(&mesh, k, |_, p| radial(p))?;
    Ok(mesh.scaled(radius))
}

/// Newton iteration `x <- x - phi grad phi / |grad phi|^2` until `|phi| <= 1e-12`.
pub(super) fn newton_project(ls: &dyn LevelSet, mut p: Point, node: usize) -> Result<Point> {
    let mut value = ls.value(&p);
    for _ in 0..PROJECTION_MAX_ITER {
        if value.abs() <= PROJECTION_TOL {
            return Ok(p);
        }
        let g = ls.gradient(&p);
        let g2 = g.norm_squared();
        if g2 < 1e-24 {
            break;
        }
        p -= g * (value / g2);
        value = ls.value(&p);
    }
    if value.abs() <= PROJECTION_TOL {
        Ok(p)
    } else {
        Err(Error::Projection {
            node,
            residual: value.abs(),
        })
    }
}

/// Project every node of a mesh onto `{phi = 0}`.
pub fn project_to_levelset(mesh: &SurfaceMesh, ls: &dyn LevelSet) -> Result<SurfaceMesh> {
    let nodes = mesh
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &p)| newton_project(ls, p, i))
        .collect::<Result<Vec<_>>>()?;
    mesh.with_nodes(nodes)
}

/// Degree-`k` mesh of an implicit surface from a base mesh lying near it. Linear base
/// meshes have their vertices projected and are then elevated with projected new nodes.
pub fn builtin_implicit(
    ls: &dyn LevelSet,
    base: &SurfaceMesh,
    k: usize,
) -> Result<SurfaceMesh> {
    let projected = project_to_levelset(base, ls)?;
    if base.degree() == k {
        return Ok(projected);
    }
    elevate_degree(&projected, k, Some(ls))
}

/// Linear triangulation of `{phi = 0}` inside the box `[lo, hi]` by marching tetrahedra on
/// an `n x n x n` grid of cubes, each split into six tetrahedra around its main diagonal.
/// Output triangles are oriented with normals pointing towards `phi > 0`.
pub fn marching_tetrahedra(
    ls: &dyn LevelSet,
    lo: Point,
    hi: Point,
    n: usize,
) -> Result<SurfaceMesh> {
    let m = n + 1;
    let step = (hi - lo) / n as f64;
    let grid_point = |i: usize, j: usize, k: usize| {
        lo + Vector3::new(i as f64 * step.x, j as f64 * step.y, k as f64 * step.z)
    };
    let gid = |i: usize, j: usize, k: usize| i + m * (j + m * k);
    let mut values = vec![0.0; m * m * m];
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                values[gid(i, j, k)] = ls.value(&grid_point(i, j, k));
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
    let mut nodes: Vec<Point> = Vec::new();
    let mut edge_point: HashMap<(usize, usize), usize> = HashMap::new();
    let mut faces: Vec<Vec<usize>> = Vec::new();

    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                for perm in PERMS {
                    let mut corner = [i, j, k];
                    let mut tet = [(0usize, Point::zeros()); 4];
                    tet[0] = (gid(i, j, k), grid_point(i, j, k));
                    for (s, &axis) in perm.iter().enumerate() {
                        corner[axis] += 1;
                        let [a, b, c] = corner;
                        tet[s + 1] = (gid(a, b, c), grid_point(a, b, c));
                    }
                    let inside: Vec<usize> =
                        (0..4).filter(|&v| values[tet[v].0] < 0.0).collect();
                    let outside: Vec<usize> =
                        (0..4).filter(|&v| values[tet[v].0] >= 0.0).collect();
                    if inside.is_empty() || outside.is_empty() {
                        continue;
                    }
                    let mut cut = |a: usize, b: usize| -> usize {
                        let (ga, gb) = (tet[a].0, tet[b].0);
                        let key = (ga.min(gb), ga.max(gb));
                        *edge_point.entry(key).or_insert_with(|| {
                            let (fa, fb) = (values[ga], values[gb]);
                            // Keep cut points away from grid vertices; projection follows.
                            let t = (fa / (fa - fb)).clamp(0.05, 0.95);
                            nodes.push(tet[a].1 + (tet[b].1 - tet[a].1) * t);
                            nodes.len() - 1
                        })
                    };
                    let mut tris: Vec<[usize; 3]> = Vec::new();
                    match (inside.len(), outside.len()) {
                        (1, 3) => {
                            let s = inside[0];
                            tris.push([cut(s, outside[0]), cut(s, outside[1]), cut(s, outside[2])]);
                        }
                        (3, 1) => {
                            let s = outside[0];
                            tris.push([cut(inside[0], s), cut(inside[1], s), cut(inside[2], s)]);
                        }
                        _ => {
                            let (a, b) = (inside[0], inside[1]);
                            let (c, d) = (outside[0], outside[1]);
                            let (ac, ad, bd, bc) = (cut(a, c), cut(a, d), cut(b, d), cut(b, c));
                            tris.push([ac, ad, bd]);
                            tris.push([ac, bd, bc]);
                        }
                    }
                    let centroid = |vs: &[usize]| {
                        vs.iter().map(|&v| tet[v].1).sum::<Point>() / vs.len() as f64
                    };
                    let dir = centroid(&outside) - centroid(&inside);
                    for t in tris {
                        let n = (nodes[t[1]] - nodes[t[0]]).cross(&(nodes[t[2]] - nodes[t[0]]));
                        if n.dot(&dir) >= 0.0 {
                            faces.push(t.to_vec());
                        } else {
                            faces.push(vec![t[0], t[2], t[1]]);
                        }
                    }
                }
            }
        }
    }
    SurfaceMesh::new(1, nodes, faces)
}

/// Degree-`k` mesh of a built-in shape. `refinement` controls resolution the same way for
/// every shape (each increment roughly halves the mesh width).
pub fn shape_mesh(shape: &Shape, refinement: usize, k: usize) -> Result<SurfaceMesh> {
    match *shape {
        Shape::Sphere { radius } => builtin_sphere(radius, refinement, k),
        Shape::Ellipsoid { a, b, c } => {
            let unit = builtin_sphere(1.0, refinement, k)?;
            let nodes = unit
                .nodes()
                .iter()
                .map(|p| Point::new(a * p.x, b * p.y, c * p.z))
                .collect();
            unit.with_nodes(nodes)
        }
        Shape::Dumbbell => {
            let mut base = icosahedron(1.0);
            for _ in 0..refinement {
                base = refine_uniform(&base, |p| Ok(p / p.norm()))?;
            }
            let squeezed = base
                .nodes()
                .iter()
                .map(|p| Point::new(0.85 * p.x, 0.85 * p.y, 1.02 * p.z))
                .collect();
            builtin_implicit(shape, &base.with_nodes(squeezed)?, k)
        }
        Shape::Genus5 => {
            let extent = Point::new(1.6, 1.6, 1.6);
            // Offset breaks the grid symmetry so no grid vertex lies on the surface.
            let shift = Point::new(0.0123, 0.0071, 0.0047);
            let fine = marching_tetrahedra(shape, -extent + shift, extent + shift, 48)?;
            let fine = project_to_levelset(&fine, shape)?;
            let mut base = coarsen(&fine, shape, GENUS5_EDGE)?;
            for _ in 0..refinement {
                base = refine_uniform(&base, |p| newton_project(shape, p, 0))?;
            }
            builtin_implicit(shape, &base, k)
        }
    }
}
