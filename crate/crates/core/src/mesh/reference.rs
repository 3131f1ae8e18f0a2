//! Lagrange elements of arbitrary degree on the reference triangle.
//!
//! Local node ordering, used everywhere in the crate:
//!
//! 1. the three vertices `(0,0)`, `(1,0)`, `(0,1)`;
//! 2. the `k-1` interior nodes of each edge, for the edges `0->1`, `1->2`, `2->0`
//!    in that order, each listed from the first vertex of the edge towards the second;
//! 3. the interior nodes, row by row (increasing `eta`, then increasing `xi`).
//!
//! For `k = 2` this is the usual `v0 v1 v2 m01 m12 m20` layout (VTK quadratic triangle).

use super::quadrature::QuadratureRule;

/// Barycentric multi-index `(a0, a1, a2)` with `a0 + a1 + a2 = k`; the node sits at
/// `xi = a1 / k`, `eta = a2 / k`.
pub type MultiIndex = [usize; 3];

#[derive(Debug, Clone)]
pub struct ReferenceElement {
    degree: usize,
    nodes: Vec<MultiIndex>,
}

/// Basis values and reference gradients tabulated at the points of a quadrature rule.
#[derive(Debug, Clone)]
pub struct BasisTable {
    pub num_points: usize,
    pub num_basis: usize,
    /// `values[q * num_basis + i]`
    pub values: Vec<f64>,
    /// `grads[q * num_basis + i] = [d/dxi, d/deta]`
    pub grads: Vec<[f64; 2]>,
}

impl BasisTable {
    pub fn values_at(&self, q: usize) -> &[f64] {
        &self.values[q * self.num_basis..(q + 1) * self.num_basis]
    }

    pub fn grads_at(&self, q: usize) -> &[[f64; 2]] {
        &self.grads[q * self.num_basis..(q + 1) * self.num_basis]
    }
}

impl ReferenceElement {
    pub fn new(degree: usize) -> Self {
        assert!(degree >= 1, "element degree must be positive");
        let k = degree;
        let mut nodes = vec![[k, 0, 0], [0, k, 0], [0, 0, k]];
        // edge 0 -> 1
        nodes.extend((1..k).map(|m| [k - m, m, 0]));
        // edge 1 -> 2
        nodes.extend((1..k).map(|m| [0, k - m, m]));
        // edge 2 -> 0
        nodes.extend((1..k).map(|m| [m, 0, k - m]));
        for a2 in 1..k {
            for a1 in 1..k {
                if a1 + a2 < k {
                    nodes.push([k - a1 - a2, a1, a2]);
                }
            }
        }
        debug_assert_eq!(nodes.len(), Self::nodes_per_element(k));
        Self { degree, nodes }
    }

    pub fn nodes_per_element(degree: usize) -> usize {
        (degree + 1) * (degree + 2) / 2
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn num_basis(&self) -> usize {
        self.nodes.len()
    }

    pub fn multi_indices(&self) -> &[MultiIndex] {
        &self.nodes
    }

    /// Reference coordinates `(xi, eta)` of local node `i`.
    pub fn node_coords(&self, i: usize) -> [f64; 2] {
        let k = self.degree as f64;
        let [_, a1, a2] = self.nodes[i];
        [a1 as f64 / k, a2 as f64 / k]
    }

    /// Local indices of the interior nodes on edge `e` (0: 0->1, 1: 1->2, 2: 2->0).
    pub fn edge_nodes(&self, e: usize) -> std::ops::Range<usize> {
        let n = self.degree - 1;
        3 + e * n..3 + (e + 1) * n
    }

    pub fn interior_nodes(&self) -> std::ops::Range<usize> {
        3 + 3 * (self.degree - 1)..self.nodes.len()
    }

    pub fn eval(&self, xi: f64, eta: f64, values: &mut [f64]) {
        let lambda = [1.0 - xi - eta, xi, eta];
        for (v, idx) in values.iter_mut().zip(&self.nodes) {
            *v = (0..3)
                .map(|c| self.factor(idx[c], lambda[c]).0)
                .product();
        }
    }

    pub fn eval_grad(&self, xi: f64, eta: f64, grads: &mut [[f64; 2]]) {
        let lambda = [1.0 - xi - eta, xi, eta];
        // d lambda / d(xi, eta)
        const DL: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
        for (g, idx) in grads.iter_mut().zip(&self.nodes) {
            let f: [(f64, f64); 3] = std::array::from_fn(|c| self.factor(idx[c], lambda[c]));
            let dphi_dlambda = [
                f[0].1 * f[1].0 * f[2].0,
                f[0].0 * f[1].1 * f[2].0,
                f[0].0 * f[1].0 * f[2].1,
            ];
            *g = [0.0, 0.0];
            for c in 0..3 {
                g[0] += dphi_dlambda[c] * DL[c][0];
                g[1] += dphi_dlambda[c] * DL[c][1];
            }
        }
    }

    /// `P_a(l) = prod_{m<a} (k l - m) / (m + 1)` and its derivative.
    fn factor(&self, a: usize, l: f64) -> (f64, f64) {
        let k = self.degree as f64;
        let mut value = 1.0;
        let mut deriv = 0.0;
        for m in 0..a {
            let term = (k * l - m as f64) / (m as f64 + 1.0);
            let dterm = k / (m as f64 + 1.0);
            deriv = deriv * term + value * dterm;
            value *= term;
        }
        (value, deriv)
    }

    pub fn tabulate(&self, rule: &QuadratureRule) -> BasisTable {
        let nb = self.num_basis();
        let nq = rule.len();
        let mut values = vec![0.0; nq * nb];
        let mut grads = vec![[0.0; 2]; nq * nb];
        for (q, p) in rule.points.iter().enumerate() {
            self.eval(p[1], p[2], &mut values[q * nb..(q + 1) * nb]);
            self.eval_grad(p[1], p[2], &mut grads[q * nb..(q + 1) * nb]);
        }
        BasisTable {
            num_points: nq,
            num_basis: nb,
            values,
            grads,
        }
    }
}
