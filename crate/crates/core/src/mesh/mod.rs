//! Curved isoparametric surface triangulations.
//!
//! A [`SurfaceMesh`] is a shared, immutable [`Topology`] plus one position per node.
//! Evolving a surface only replaces the node positions; the connectivity is shared
//! between all time levels through an `Arc`.

mod builders;
mod coarsen;
mod io;
pub mod levelset;
pub mod quadrature;
pub mod reference;

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::Vector3;

use crate::error::{Error, Result};
pub use builders::{
    builtin_implicit, builtin_sphere, elevate_degree, elevate_degree_with, icosahedron,
    marching_tetrahedra, project_to_levelset, refine_uniform, shape_mesh,
};
pub use coarsen::coarsen;
pub use io::{export_vtk, import_off, parse_off, read_vtk_points, NodalField};
pub use levelset::{LevelSet, Shape};
pub use quadrature::QuadratureRule;
pub use reference::{BasisTable, ReferenceElement};

pub type Point = Vector3<f64>;

/// Element connectivity of a closed degree-`k` triangulation.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    degree: usize,
    num_nodes: usize,
    nodes_per_element: usize,
    elements: Vec<usize>,
}

impl Topology {
    /// Builds and validates a topology: node indices in range and distinct per element,
    /// every node referenced, every edge shared by exactly two elements traversing it in
    /// opposite directions with matching edge nodes.
    pub fn new(degree: usize, num_nodes: usize, elements: Vec<Vec<usize>>) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidMesh("degree must be positive".into()));
        }
        let nloc = ReferenceElement::nodes_per_element(degree);
        let mut flat = Vec::with_capacity(elements.len() * nloc);
        for (e, el) in elements.iter().enumerate() {
            if el.len() != nloc {
                return Err(Error::InvalidMesh(format!(
                    "element {e} has {} nodes, expected {nloc}",
                    el.len()
                )));
            }
            flat.extend_from_slice(el);
        }
        let topo = Self {
            degree,
            num_nodes,
            nodes_per_element: nloc,
            elements: flat,
        };
        topo.validate()?;
        Ok(topo)
    }

    /// Connectivity of an open patch (for element-level computations): indices are
    /// checked but the closed-surface invariants are not.
    pub fn open_patch(degree: usize, num_nodes: usize, elements: Vec<Vec<usize>>) -> Result<Self> {
        let nloc = ReferenceElement::nodes_per_element(degree.max(1));
        let mut flat = Vec::with_capacity(elements.len() * nloc);
        for (e, el) in elements.iter().enumerate() {
            if degree == 0 || el.len() != nloc || el.iter().any(|&i| i >= num_nodes) {
                return Err(Error::InvalidMesh(format!("patch element {e} is malformed")));
            }
            flat.extend_from_slice(el);
        }
        Ok(Self {
            degree,
            num_nodes,
            nodes_per_element: nloc,
            elements: flat,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len() / self.nodes_per_element
    }

    pub fn nodes_per_element(&self) -> usize {
        self.nodes_per_element
    }

    pub fn element(&self, e: usize) -> &[usize] {
        &self.elements[e * self.nodes_per_element..(e + 1) * self.nodes_per_element]
    }

    pub fn elements(&self) -> impl Iterator<Item = &[usize]> {
        self.elements.chunks_exact(self.nodes_per_element)
    }

    /// Undirected vertex-to-vertex edges `(a, b)` with `a < b`, in first-seen order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut seen = HashMap::new();
        let mut out = Vec::new();
        for el in self.elements() {
            for (i, j) in [(0, 1), (1, 2), (2, 0)] {
                let key = (el[i].min(el[j]), el[i].max(el[j]));
                if seen.insert(key, ()).is_none() {
                    out.push(key);
                }
            }
        }
        out
    }

    /// Vertex nodes (corners of some element).
    pub fn vertex_nodes(&self) -> Vec<usize> {
        let mut is_vertex = vec![false; self.num_nodes];
        for el in self.elements() {
            for &v in &el[..3] {
                is_vertex[v] = true;
            }
        }
        (0..self.num_nodes).filter(|&i| is_vertex[i]).collect()
    }

    /// V - E + F over the vertex skeleton.
    pub fn euler_characteristic(&self) -> i64 {
        let v = self.vertex_nodes().len() as i64;
        let e = self.edges().len() as i64;
        let f = self.num_elements() as i64;
        v - e + f
    }

    pub fn validate(&self) -> Result<()> {
        let reference = ReferenceElement::new(self.degree);
        let mut referenced = vec![false; self.num_nodes];
        for (e, el) in self.elements().enumerate() {
            for (a, &i) in el.iter().enumerate() {
                if i >= self.num_nodes {
                    return Err(Error::InvalidMesh(format!(
                        "element {e} references node {i} but the mesh has {} nodes",
                        self.num_nodes
                    )));
                }
                if el[..a].contains(&i) {
                    return Err(Error::InvalidMesh(format!(
                        "element {e} repeats node {i}"
                    )));
                }
                referenced[i] = true;
            }
        }
        if let Some(i) = referenced.iter().position(|r| !r) {
            return Err(Error::InvalidMesh(format!("node {i} is not referenced")));
        }

        // directed edge (from, to) -> (element, interior edge nodes from -> to)
        let mut directed: HashMap<(usize, usize), (usize, Vec<usize>)> = HashMap::new();
        let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
        for (e, el) in self.elements().enumerate() {
            for (edge, (i, j)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
                let (a, b) = (el[i], el[j]);
                let inner: Vec<usize> = reference.edge_nodes(edge).map(|l| el[l]).collect();
                *counts.entry((a.min(b), a.max(b))).or_default() += 1;
                if directed.insert((a, b), (e, inner)).is_some() {
                    return Err(Error::InvalidMesh(format!(
                        "edge ({a}, {b}) is traversed twice in the same direction (element {e}); \
                         orientation is inconsistent"
                    )));
                }
            }
        }
        let mut keys: Vec<_> = counts.keys().copied().collect();
        keys.sort_unstable();
        for (id, key) in keys.iter().enumerate() {
            let count = counts[key];
            if count != 2 {
                return Err(Error::NonManifoldEdge {
                    edge: id,
                    a: key.0,
                    b: key.1,
                    count,
                });
            }
            let (a, b) = *key;
            let (_, fwd) = &directed[&(a, b)];
            let (e2, bwd) = directed.get(&(b, a)).ok_or_else(|| {
                Error::InvalidMesh(format!(
                    "edge ({a}, {b}) is traversed in the same direction by both elements"
                ))
            })?;
            if fwd.iter().rev().ne(bwd.iter()) {
                return Err(Error::InvalidMesh(format!(
                    "edge ({a}, {b}): interior edge nodes of element {e2} do not match its neighbour"
                )));
            }
        }
        Ok(())
    }
}

/// A degree-`k` curved surface triangulation `Gamma_h[x]`.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    topology: Arc<Topology>,
    nodes: Vec<Point>,
}

impl SurfaceMesh {
    pub fn new(degree: usize, nodes: Vec<Point>, elements: Vec<Vec<usize>>) -> Result<Self> {
        let topology = Topology::new(degree, nodes.len(), elements)?;
        Ok(Self {
            topology: Arc::new(topology),
            nodes,
        })
    }

    pub fn from_topology(topology: Arc<Topology>, nodes: Vec<Point>) -> Result<Self> {
        if nodes.len() != topology.num_nodes() {
            return Err(Error::DimensionMismatch {
                expected: topology.num_nodes(),
                got: nodes.len(),
            });
        }
        Ok(Self { topology, nodes })
    }

    /// A single element (or any open patch) for element-level computations.
    pub fn open_patch(degree: usize, nodes: Vec<Point>, elements: Vec<Vec<usize>>) -> Result<Self> {
        let topology = Topology::open_patch(degree, nodes.len(), elements)?;
        Ok(Self {
            topology: Arc::new(topology),
            nodes,
        })
    }

    /// Same connectivity, new node positions.
    pub fn with_nodes(&self, nodes: Vec<Point>) -> Result<Self> {
        Self::from_topology(self.topology.clone(), nodes)
    }

    pub fn topology(&self) -> &Arc<Topology> {
        &self.topology
    }

    pub fn degree(&self) -> usize {
        self.topology.degree()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.topology.num_elements()
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn element(&self, e: usize) -> &[usize] {
        self.topology.element(e)
    }

    /// Maximum over elements of the largest vertex-to-vertex distance.
    pub fn mesh_width(&self) -> f64 {
        mesh_width(&self.topology, &self.nodes)
    }

    /// Scaled copy (all node positions multiplied by `s`).
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            topology: self.topology.clone(),
            nodes: self.nodes.iter().map(|p| p * s).collect(),
        }
    }
}

pub fn mesh_width(topology: &Topology, nodes: &[Point]) -> f64 {
    topology
        .elements()
        .map(|el| {
            let [a, b, c] = [nodes[el[0]], nodes[el[1]], nodes[el[2]]];
            (a - b).norm().max((b - c).norm()).max((c - a).norm())
        })
        .fold(0.0, f64::max)
}

/// Flatten node positions into a component-major vector `(x_1..x_N, y_1..y_N, z_1..z_N)`.
pub fn flatten_nodes(nodes: &[Point]) -> Vec<f64> {
    let n = nodes.len();
    let mut out = vec![0.0; 3 * n];
    for (j, p) in nodes.iter().enumerate() {
        for c in 0..3 {
            out[c * n + j] = p[c];
        }
    }
    out
}

/// Inverse of [`flatten_nodes`].
pub fn unflatten_nodes(x: &[f64]) -> Vec<Point> {
    let n = x.len() / 3;
    (0..n)
        .map(|j| Point::new(x[j], x[n + j], x[2 * n + j]))
        .collect()
}
