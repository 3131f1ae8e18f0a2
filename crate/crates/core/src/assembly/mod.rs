//! Finite element assembly on `Gamma_h[x]`: mass and stiffness matrices, the
//! solution-dependent mass matrix `M(x,u)` and the nonlinear load vectors `f(x,u)`, `g(x,u)`.
//!
//! Element contributions are computed in parallel and scattered in element order, so the
//! result does not depend on the number of threads.

mod geometry;
mod sparse;

use std::sync::Arc;

use rayon::prelude::*;

pub use geometry::{element_geometry, PointGeometry};
pub use sparse::{SparseSpd, SparsityPattern};

use crate::error::{Error, Result};
use crate::flow::FlowLaw;
use crate::mesh::{BasisTable, Point, QuadratureRule, ReferenceElement, SurfaceMesh, Topology};

/// Nodal vector field in component-major layout: component `l` occupies
/// `data[l*N .. (l+1)*N]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldVector {
    n: usize,
    components: usize,
    data: Vec<f64>,
}

impl FieldVector {
    pub fn zeros(n: usize, components: usize) -> Self {
        Self {
            n,
            components,
            data: vec![0.0; n * components],
        }
    }

    pub fn from_data(n: usize, components: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * components {
            return Err(Error::DimensionMismatch {
                expected: n * components,
                got: data.len(),
            });
        }
        Ok(Self {
            n,
            components,
            data,
        })
    }

    /// `(x_1..x_N, y_1..y_N, z_1..z_N)` from per-node vectors.
    pub fn from_points(points: &[Point]) -> Self {
        let mut f = Self::zeros(points.len(), 3);
        for (j, p) in points.iter().enumerate() {
            f.set_vector(j, 0, p);
        }
        f
    }

    /// `u = (nu, V)` with four components.
    pub fn from_normal_and_scalar(normals: &[Point], values: &[f64]) -> Result<Self> {
        if normals.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: normals.len(),
                got: values.len(),
            });
        }
        let mut f = Self::zeros(normals.len(), 4);
        for (j, p) in normals.iter().enumerate() {
            f.set_vector(j, 0, p);
        }
        f.component_mut(3).copy_from_slice(values);
        Ok(f)
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn num_components(&self) -> usize {
        self.components
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn component(&self, l: usize) -> &[f64] {
        &self.data[l * self.n..(l + 1) * self.n]
    }

    pub fn component_mut(&mut self, l: usize) -> &mut [f64] {
        &mut self.data[l * self.n..(l + 1) * self.n]
    }

    pub fn get(&self, node: usize, l: usize) -> f64 {
        self.data[l * self.n + node]
    }

    pub fn set(&mut self, node: usize, l: usize, value: f64) {
        self.data[l * self.n + node] = value;
    }

    /// Components `first..first+3` at `node` as a 3-vector.
    pub fn vector(&self, node: usize, first: usize) -> Point {
        Point::new(
            self.get(node, first),
            self.get(node, first + 1),
            self.get(node, first + 2),
        )
    }

    pub fn set_vector(&mut self, node: usize, first: usize, p: &Point) {
        for c in 0..3 {
            self.set(node, first + c, p[c]);
        }
    }

    pub fn to_points(&self) -> Vec<Point> {
        (0..self.n).map(|j| self.vector(j, 0)).collect()
    }

    /// `a * self + b * other`
    pub fn axpby(&self, a: f64, other: &FieldVector, b: f64) -> FieldVector {
        FieldVector {
            n: self.n,
            components: self.components,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        }
    }
}

/// Which discrete Sobolev norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    /// `w^T M w`, the L2 norm.
    M,
    /// `w^T A w`, the H1 seminorm.
    A,
    /// `w^T (M + A) w`, the H1 norm.
    K,
}

/// Discrete norm of a (possibly vector-valued) nodal field, applied block by block.
pub fn discrete_norm(w: &[f64], which: Norm, mass: &SparseSpd, stiffness: &SparseSpd) -> Result<f64> {
    let n = mass.dim();
    if stiffness.dim() != n || n == 0 || w.len() % n != 0 {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: w.len(),
        });
    }
    let mut sq = 0.0;
    for block in w.chunks_exact(n) {
        sq += match which {
            Norm::M => mass.quadratic_form(block),
            Norm::A => stiffness.quadratic_form(block),
            Norm::K => mass.quadratic_form(block) + stiffness.quadratic_form(block),
        };
    }
    Ok(sq.max(0.0).sqrt())
}

/// Dense element matrices (row-major `nb x nb`) and vectors (component-major `c x nb`)
/// of one element.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LocalSystem {
    pub nodes: Vec<usize>,
    pub mass: Vec<f64>,
    pub stiffness: Vec<f64>,
    pub weighted_mass: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

/// Everything one time step needs, assembled in a single pass.
#[derive(Debug, Clone)]
pub struct SystemMatrices {
    pub mass: SparseSpd,
    pub stiffness: SparseSpd,
    pub weighted_mass: SparseSpd,
    pub f: FieldVector,
    pub g: FieldVector,
}

#[derive(Debug, Clone, Copy, Default)]
struct Wants {
    mass: bool,
    stiffness: bool,
    weighted: bool,
    f: bool,
    g: bool,
}

/// Degree-`k` Lagrange space on a fixed topology, reusable for any node positions.
#[derive(Debug, Clone)]
pub struct FeSpace {
    topology: Arc<Topology>,
    reference: ReferenceElement,
    rule: QuadratureRule,
    table: BasisTable,
    pattern: Arc<SparsityPattern>,
    scatter: Vec<usize>,
}

impl FeSpace {
    /// Space with the default quadrature rule (exact to degree `2k+2`).
    pub fn new(topology: Arc<Topology>) -> Self {
        let rule = QuadratureRule::for_degree(topology.degree());
        Self::with_rule(topology, rule)
    }

    pub fn with_rule(topology: Arc<Topology>, rule: QuadratureRule) -> Self {
        let reference = ReferenceElement::new(topology.degree());
        let table = reference.tabulate(&rule);
        let pattern = Arc::new(SparsityPattern::from_topology(&topology));
        let nb = reference.num_basis();
        let mut scatter = Vec::with_capacity(topology.num_elements() * nb * nb);
        for el in topology.elements() {
            for &a in el {
                for &b in el {
                    scatter.push(pattern.offset(a, b).expect("element pair in pattern"));
                }
            }
        }
        Self {
            topology,
            reference,
            rule,
            table,
            pattern,
            scatter,
        }
    }

    pub fn topology(&self) -> &Arc<Topology> {
        &self.topology
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn reference(&self) -> &ReferenceElement {
        &self.reference
    }

    pub fn num_nodes(&self) -> usize {
        self.topology.num_nodes()
    }

    fn check_nodes(&self, nodes: &[Point]) -> Result<()> {
        if nodes.len() != self.num_nodes() {
            return Err(Error::DimensionMismatch {
                expected: self.num_nodes(),
                got: nodes.len(),
            });
        }
        Ok(())
    }

    fn check_u(&self, u: &FieldVector) -> Result<()> {
        if u.num_nodes() != self.num_nodes() || u.num_components() != 4 {
            return Err(Error::DimensionMismatch {
                expected: 4 * self.num_nodes(),
                got: u.as_slice().len(),
            });
        }
        Ok(())
    }

    /// Nodal values `V'(H_j)` with `H_j = V^{-1}(V_j)`.
    fn nodal_v_prime(&self, u: &FieldVector, flow: &FlowLaw) -> Result<Vec<f64>> {
        u.component(3)
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                let vp = flow.v_prime(flow.invert(v));
                let w = 1.0 / vp;
                if w.is_finite() && w > 0.0 {
                    Ok(vp)
                } else {
                    Err(Error::InvalidState {
                        node: j,
                        reason: format!("mass weight 1/V'(H) = {w} from V = {v}"),
                    })
                }
            })
            .collect()
    }

    fn local(
        &self,
        e: usize,
        nodes: &[Point],
        u: Option<&FieldVector>,
        v_prime: Option<&[f64]>,
        wants: Wants,
    ) -> Result<LocalSystem> {
        let el = self.topology.element(e);
        let nb = el.len();
        let coords: Vec<Point> = el.iter().map(|&i| nodes[i]).collect();
        let mut out = LocalSystem {
            nodes: el.to_vec(),
            ..Default::default()
        };
        if wants.mass {
            out.mass = vec![0.0; nb * nb];
        }
        if wants.stiffness {
            out.stiffness = vec![0.0; nb * nb];
        }
        if wants.weighted {
            out.weighted_mass = vec![0.0; nb * nb];
        }
        if wants.f {
            out.f = vec![0.0; 4 * nb];
        }
        if wants.g {
            out.g = vec![0.0; 3 * nb];
        }
        let nonlinear = wants.f || wants.g;
        let mut tg = vec![Point::zeros(); nb];
        let mut phi_phi = vec![0.0; nb * nb];

        for q in 0..self.rule.len() {
            let values = self.table.values_at(q);
            let grads = self.table.grads_at(q);
            let pg = geometry::point_geometry(e, &coords, values, grads)?;
            let wq = self.rule.weights[q] * pg.area_factor;
            for (t, g) in tg.iter_mut().zip(grads) {
                *t = pg.tangential_gradient(*g);
            }
            if wants.mass || wants.weighted {
                for i in 0..nb {
                    for j in i..nb {
                        phi_phi[i * nb + j] = values[i] * values[j];
                    }
                }
            }
            if wants.mass {
                for i in 0..nb {
                    for j in i..nb {
                        out.mass[i * nb + j] += wq * phi_phi[i * nb + j];
                    }
                }
            }
            if wants.stiffness {
                for i in 0..nb {
                    for j in i..nb {
                        out.stiffness[i * nb + j] += wq * tg[i].dot(&tg[j]);
                    }
                }
            }
            if wants.weighted {
                let vp = v_prime.expect("weighted mass needs nodal V'");
                let vp_h: f64 = el.iter().zip(values).map(|(&i, &p)| vp[i] * p).sum();
                if !(vp_h > 0.0) {
                    return Err(Error::InvalidState {
                        node: el[0],
                        reason: format!("interpolated V' = {vp_h} at a quadrature point of element {e}"),
                    });
                }
                let w = wq / vp_h;
                for i in 0..nb {
                    for j in i..nb {
                        out.weighted_mass[i * nb + j] += w * phi_phi[i * nb + j];
                    }
                }
            }
            if nonlinear {
                let u = u.expect("nonlinear terms need u");
                let mut nu = [0.0; 3];
                let mut grad_nu = [Point::zeros(); 3];
                let mut v = 0.0;
                let mut grad_v = Point::zeros();
                for (a, &i) in el.iter().enumerate() {
                    for l in 0..3 {
                        let c = u.get(i, l);
                        nu[l] += c * values[a];
                        grad_nu[l] += tg[a] * c;
                    }
                    let c = u.get(i, 3);
                    v += c * values[a];
                    grad_v += tg[a] * c;
                }
                let a2: f64 = grad_nu.iter().map(|g| g.norm_squared()).sum();
                if wants.f {
                    for j in 0..nb {
                        let s = wq * a2 * values[j];
                        for l in 0..3 {
                            out.f[l * nb + j] += s * nu[l];
                        }
                        out.f[3 * nb + j] += s * v;
                    }
                }
                if wants.g {
                    for l in 0..3 {
                        let grad_prod = grad_nu[l] * v + grad_v * nu[l];
                        for j in 0..nb {
                            out.g[l * nb + j] -= wq * (v * nu[l] * values[j] + grad_prod.dot(&tg[j]));
                        }
                    }
                }
            }
        }
        for m in [&mut out.mass, &mut out.stiffness, &mut out.weighted_mass] {
            if !m.is_empty() {
                for i in 0..nb {
                    for j in 0..i {
                        m[i * nb + j] = m[j * nb + i];
                    }
                }
            }
        }
        Ok(out)
    }

    fn assemble(
        &self,
        nodes: &[Point],
        u: Option<&FieldVector>,
        flow: Option<&FlowLaw>,
        wants: Wants,
    ) -> Result<(Vec<SparseSpd>, Option<FieldVector>, Option<FieldVector>)> {
        self.check_nodes(nodes)?;
        if let Some(u) = u {
            self.check_u(u)?;
        }
        let v_prime = match (wants.weighted, u, flow) {
            (true, Some(u), Some(flow)) => Some(self.nodal_v_prime(u, flow)?),
            _ => None,
        };
        let locals: Vec<LocalSystem> = (0..self.topology.num_elements())
            .into_par_iter()
            .map(|e| self.local(e, nodes, u, v_prime.as_deref(), wants))
            .collect::<Result<_>>()?;

        let n = self.num_nodes();
        let nb = self.reference.num_basis();
        let mut mats = Vec::new();
        let selectors: [(bool, fn(&LocalSystem) -> &[f64]); 3] = [
            (wants.mass, |l| &l.mass),
            (wants.stiffness, |l| &l.stiffness),
            (wants.weighted, |l| &l.weighted_mass),
        ];
        for (wanted, pick) in selectors {
            if !wanted {
                continue;
            }
            let mut m = SparseSpd::zeros(self.pattern.clone());
            let vals = m.values_mut();
            for (e, local) in locals.iter().enumerate() {
                let offsets = &self.scatter[e * nb * nb..(e + 1) * nb * nb];
                for (&k, &v) in offsets.iter().zip(pick(local)) {
                    vals[k] += v;
                }
            }
            mats.push(m);
        }
        let gather = |comps: usize, pick: fn(&LocalSystem) -> &[f64]| {
            let mut out = FieldVector::zeros(n, comps);
            for local in &locals {
                let data = pick(local);
                for l in 0..comps {
                    for (a, &i) in local.nodes.iter().enumerate() {
                        out.data[l * n + i] += data[l * nb + a];
                    }
                }
            }
            out
        };
        let f = wants.f.then(|| gather(4, |l| &l.f));
        let g = wants.g.then(|| gather(3, |l| &l.g));
        Ok((mats, f, g))
    }

    /// `M(x)_{ij} = int phi_i phi_j`
    pub fn assemble_mass(&self, nodes: &[Point]) -> Result<SparseSpd> {
        let wants = Wants {
            mass: true,
            ..Default::default()
        };
        Ok(self.assemble(nodes, None, None, wants)?.0.remove(0))
    }

    /// `A(x)_{ij} = int grad phi_i . grad phi_j`
    pub fn assemble_stiffness(&self, nodes: &[Point]) -> Result<SparseSpd> {
        let wants = Wants {
            stiffness: true,
            ..Default::default()
        };
        Ok(self.assemble(nodes, None, None, wants)?.0.remove(0))
    }

    /// `(M(x), A(x))` in one pass.
    pub fn assemble_mass_stiffness(&self, nodes: &[Point]) -> Result<(SparseSpd, SparseSpd)> {
        let wants = Wants {
            mass: true,
            stiffness: true,
            ..Default::default()
        };
        let mut mats = self.assemble(nodes, None, None, wants)?.0;
        let a = mats.pop().expect("stiffness");
        let m = mats.pop().expect("mass");
        Ok((m, a))
    }

    /// `M(x,u)_{ij} = int phi_i phi_j / V'_h` where `V'_h` interpolates `V'(V^{-1}(V_j))`.
    pub fn assemble_weighted_mass(&self, nodes: &[Point], u: &FieldVector, flow: &FlowLaw) -> Result<SparseSpd> {
        let wants = Wants {
            weighted: true,
            ..Default::default()
        };
        Ok(self.assemble(nodes, Some(u), Some(flow), wants)?.0.remove(0))
    }

    /// `f = (f1, f2)`: `int |A_h|^2 (nu_h)_l phi_j` and `int |A_h|^2 V_h phi_j`.
    pub fn assemble_f(&self, nodes: &[Point], u: &FieldVector) -> Result<FieldVector> {
        let wants = Wants {
            f: true,
            ..Default::default()
        };
        Ok(self.assemble(nodes, Some(u), None, wants)?.1.expect("f"))
    }

    /// `g_l = -int V_h (nu_h)_l phi_j - int grad(V_h (nu_h)_l) . grad phi_j`
    pub fn assemble_g(&self, nodes: &[Point], u: &FieldVector) -> Result<FieldVector> {
        let wants = Wants {
            g: true,
            ..Default::default()
        };
        Ok(self.assemble(nodes, Some(u), None, wants)?.2.expect("g"))
    }

    /// `M`, `A`, `M(x,u)`, `f` and `g` in one pass over the elements.
    pub fn assemble_system(&self, nodes: &[Point], u: &FieldVector, flow: &FlowLaw) -> Result<SystemMatrices> {
        let wants = Wants {
            mass: true,
            stiffness: true,
            weighted: true,
            f: true,
            g: true,
        };
        let (mut mats, f, g) = self.assemble(nodes, Some(u), Some(flow), wants)?;
        let weighted_mass = mats.pop().expect("weighted mass");
        let stiffness = mats.pop().expect("stiffness");
        let mass = mats.pop().expect("mass");
        Ok(SystemMatrices {
            mass,
            stiffness,
            weighted_mass,
            f: f.expect("f"),
            g: g.expect("g"),
        })
    }

    /// Dense local matrices and vectors of one element.
    pub fn local_system(&self, nodes: &[Point], element: usize, u: &FieldVector, flow: &FlowLaw) -> Result<LocalSystem> {
        self.check_nodes(nodes)?;
        self.check_u(u)?;
        let vp = self.nodal_v_prime(u, flow)?;
        let wants = Wants {
            mass: true,
            stiffness: true,
            weighted: true,
            f: true,
            g: true,
        };
        self.local(element, nodes, Some(u), Some(&vp), wants)
    }

    /// `(H_h, |A_h|^2)` at every quadrature point of every element, with `H_h` the
    /// interpolant of the nodal values `h`.
    pub fn curvature_samples(&self, nodes: &[Point], u: &FieldVector, h: &[f64]) -> Result<Vec<(f64, f64)>> {
        self.check_nodes(nodes)?;
        self.check_u(u)?;
        let per_element: Vec<Vec<(f64, f64)>> = (0..self.topology.num_elements())
            .into_par_iter()
            .map(|e| {
                let el = self.topology.element(e);
                let coords: Vec<Point> = el.iter().map(|&i| nodes[i]).collect();
                (0..self.rule.len())
                    .map(|q| {
                        let values = self.table.values_at(q);
                        let grads = self.table.grads_at(q);
                        let pg = geometry::point_geometry(e, &coords, values, grads)?;
                        let mut grad_nu = [Point::zeros(); 3];
                        let mut hq = 0.0;
                        for (a, &i) in el.iter().enumerate() {
                            let t = pg.tangential_gradient(grads[a]);
                            for (l, gl) in grad_nu.iter_mut().enumerate() {
                                *gl += t * u.get(i, l);
                            }
                            hq += h[i] * values[a];
                        }
                        Ok((hq, grad_nu.iter().map(|g| g.norm_squared()).sum()))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        Ok(per_element.into_iter().flatten().collect())
    }
}

pub fn assemble_mass(mesh: &SurfaceMesh) -> Result<SparseSpd> {
    FeSpace::new(mesh.topology().clone()).assemble_mass(mesh.nodes())
}

pub fn assemble_stiffness(mesh: &SurfaceMesh) -> Result<SparseSpd> {
    FeSpace::new(mesh.topology().clone()).assemble_stiffness(mesh.nodes())
}

pub fn assemble_weighted_mass(mesh: &SurfaceMesh, u: &FieldVector, flow: &FlowLaw) -> Result<SparseSpd> {
    FeSpace::new(mesh.topology().clone()).assemble_weighted_mass(mesh.nodes(), u, flow)
}

pub fn assemble_f(mesh: &SurfaceMesh, u: &FieldVector) -> Result<FieldVector> {
    FeSpace::new(mesh.topology().clone()).assemble_f(mesh.nodes(), u)
}

pub fn assemble_g(mesh: &SurfaceMesh, u: &FieldVector) -> Result<FieldVector> {
    FeSpace::new(mesh.topology().clone()).assemble_g(mesh.nodes(), u)
}
