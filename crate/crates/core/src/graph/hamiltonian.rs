//! Finite-difference Hamiltonian on a metric graph.
//!
//! Built from the discrete energy form
//! `sum_bonds alpha |psi_b - psi_a|^2 / h - i beta/2 (conj(psi_a) psi_b - conj(psi_b) psi_a)`
//! with vertex values `psi_mu = kappa_mu phi` and a lumped vertex mass
//! `sum |kappa_mu|^2 h_mu / 2`. The matrix is `M^{-1/2} A M^{-1/2}`; its vectors
//! are `M^{1/2} psi`. Stationarity in `phi` is the weighted flux condition.

use faer::Mat;
use num_complex::Complex64 as C64;

use super::{EdgeEnd, MetricGraph, VertexCondition};
use crate::error::{Error, Result};
use crate::operators::{Discretization, OperatorMatrix, Provenance};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Resolution {
    /// The same number of intervals on every finite edge.
    Intervals(usize),
    /// Target spacing; each edge gets `round(length / h)` intervals.
    Spacing(f64),
}

/// Node `k` of an edge is `coefficient * y[dof]`, or pinned to zero.
pub type NodeValue = Option<(usize, C64)>;

#[derive(Clone, Debug, PartialEq)]
pub struct EdgeNodes {
    pub spacing: f64,
    /// values at `x = k h`, `k = 0..=n`, in the edge's own coordinate
    pub nodes: Vec<NodeValue>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphLayout {
    pub edges: Vec<EdgeNodes>,
    pub vertex_dof: Vec<Option<usize>>,
    pub mass: Vec<f64>,
    /// length used for truncated infinite edges
    pub truncation: f64,
}

impl GraphLayout {
    pub fn dimension(&self) -> usize {
        self.mass.len()
    }

    /// Physical value `psi` at node `k` of `edge` from a matrix-basis vector.
    pub fn value(&self, y: &[C64], edge: usize, k: usize) -> C64 {
        match self.edges[edge].nodes[k] {
            Some((dof, c)) => c * y[dof] / self.mass[dof].sqrt(),
            None => C64::new(0.0, 0.0),
        }
    }

    /// Samples `f(edge, x)` on every node; vertex values are taken from the
    /// first incident edge end and divided by its weight.
    pub fn sample(&self, f: &dyn Fn(usize, f64) -> C64) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.dimension()];
        let mut set = vec![false; self.dimension()];
        for (e, en) in self.edges.iter().enumerate() {
            for (k, node) in en.nodes.iter().enumerate() {
                if let Some((dof, c)) = *node {
                    if !set[dof] {
                        y[dof] = f(e, k as f64 * en.spacing) / c * self.mass[dof].sqrt();
                        set[dof] = true;
                    }
                }
            }
        }
        y
    }

    /// `sum m |psi|^2`, the norm the matrix basis carries as `sum |y|^2`.
    pub fn norm_sqr(&self, y: &[C64]) -> f64 {
        y.iter().map(|z| z.norm_sqr()).sum()
    }
}

fn intervals(length: f64, resolution: Resolution) -> usize {
    match resolution {
        Resolution::Intervals(n) => n.max(2),
        Resolution::Spacing(h) => ((length / h).round() as usize).max(2),
    }
}

/// Finite edges are discretized as given; infinite edges are cut at
/// `truncation` with a Dirichlet cap. Vertices with `Dirichlet` conditions pin
/// their edge ends to zero.
pub fn graph_hamiltonian(
    graph: &MetricGraph,
    resolution: Resolution,
    truncation: f64,
) -> Result<OperatorMatrix> {
    graph.validate()?;
    if !(truncation > 0.0) {
        return Err(Error::InvalidGraph(format!(
            "truncation length must be positive, got {truncation}"
        )));
    }
    let mut dim = 0usize;
    let mut mass = Vec::new();
    let vertex_dof: Vec<Option<usize>> = graph
        .vertices
        .iter()
        .map(|c| match c {
            VertexCondition::Dirichlet => None,
            _ => {
                dim += 1;
                mass.push(0.0);
                Some(dim - 1)
            }
        })
        .collect();

    let mut edges = Vec::with_capacity(graph.edges.len());
    for edge in &graph.edges {
        let length = if edge.is_infinite() {
            truncation
        } else {
            edge.length
        };
        let n = intervals(length, resolution);
        let h = length / n as f64;
        let mut nodes: Vec<NodeValue> = Vec::with_capacity(n + 1);
        nodes.push(None);
        for _ in 1..n {
            nodes.push(Some((dim, C64::new(1.0, 0.0))));
            mass.push(h);
            dim += 1;
        }
        nodes.push(None);
        edges.push(EdgeNodes { spacing: h, nodes });
    }
    for v in 0..graph.vertices.len() {
        let Some(dof) = vertex_dof[v] else { continue };
        for ((e, end), kappa) in graph.incident(v).into_iter().zip(graph.weights(v)) {
            let en = &mut edges[e];
            let k = match end {
                EdgeEnd::Start => 0,
                EdgeEnd::End => en.nodes.len() - 1,
            };
            en.nodes[k] = Some((dof, kappa));
            mass[dof] += 0.5 * kappa.norm_sqr() * en.spacing;
        }
    }
    if let Some(v) = vertex_dof
        .iter()
        .enumerate()
        .find_map(|(v, d)| d.filter(|&d| mass[d] == 0.0).map(|_| v))
    {
        return Err(Error::InvalidGraph(format!("vertex {v} has zero mass")));
    }

    let mut a = Mat::<C64>::zeros(dim, dim);
    for (edge, en) in graph.edges.iter().zip(&edges) {
        let h = en.spacing;
        for w in en.nodes.windows(2) {
            let stiff = edge.alpha / h;
            if let Some((i, ci)) = w[0] {
                a[(i, i)] += ci.norm_sqr() * stiff;
            }
            if let Some((j, cj)) = w[1] {
                a[(j, j)] += cj.norm_sqr() * stiff;
            }
            if let (Some((i, ci)), Some((j, cj))) = (w[0], w[1]) {
                let off =
                    ci.conj() * cj * (C64::new(-stiff, 0.0) + C64::new(0.0, -0.5 * edge.beta));
                a[(i, j)] += off;
                a[(j, i)] += off.conj();
            }
        }
    }
    let scale: Vec<f64> = mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    let h = Mat::<C64>::from_fn(dim, dim, |i, j| a[(i, j)] * (scale[i] * scale[j]));
    let layout = GraphLayout {
        edges,
        vertex_dof,
        mass,
        truncation,
    };
    Ok(OperatorMatrix::new(
        h,
        Provenance::Graph,
        Discretization::Graph(layout),
    ))
}

/// One-sided first-derivative weights of order 6 and 2, node 0 at the end.
const ONE_SIDED_6: [f64; 7] = [
    49.0 / 20.0,
    -6.0,
    15.0 / 2.0,
    -20.0 / 3.0,
    15.0 / 4.0,
    -6.0 / 5.0,
    1.0 / 6.0,
];
const ONE_SIDED_2: [f64; 3] = [1.5, -2.0, 0.5];

/// `sum_mu alpha_mu conj(kappa_mu) dpsi_mu/dx_in` at `vertex`, inward
/// derivatives by one-sided differences. At a Dirichlet vertex the weight is 1.
pub fn node_flux(y: &[C64], vertex: usize, graph: &MetricGraph, layout: &GraphLayout) -> C64 {
    let mut flux = C64::new(0.0, 0.0);
    for ((e, end), kappa) in graph
        .incident(vertex)
        .into_iter()
        .zip(graph.weights(vertex))
    {
        let en = &layout.edges[e];
        let n = en.nodes.len() - 1;
        let weights: &[f64] = if n >= ONE_SIDED_6.len() {
            &ONE_SIDED_6
        } else {
            &ONE_SIDED_2
        };
        // samples walking from the vertex into the edge, against the inward coordinate
        let mut d = C64::new(0.0, 0.0);
        for (j, &w) in weights.iter().enumerate() {
            let k = match end {
                EdgeEnd::End => n - j,
                EdgeEnd::Start => j,
            };
            d += layout.value(y, e, k) * w;
        }
        flux += kappa.conj() * graph.edges[e].alpha * d / en.spacing;
    }
    flux
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;

    #[test]
    fn degree_two_vertex_reproduces_interval_stencil() {
        let g = MetricGraph::chain(&[0.5, 0.5], VertexCondition::Kirchhoff).unwrap();
        let h = graph_hamiltonian(&g, Resolution::Intervals(4), 1.0).unwrap();
        assert_eq!(h.dimension(), 7);
        let step = 0.125f64;
        // vertex row: 2/h^2 on the diagonal, -1/h^2 to its two neighbours
        let Discretization::Graph(lay) = &h.discretization else {
            panic!()
        };
        let v = lay.vertex_dof[1].unwrap();
        assert!((h.data[(v, v)].re - 2.0 / (step * step)).abs() < 1e-9);
        let off: f64 = (0..7).filter(|&j| j != v).map(|j| h.data[(v, j)].re).sum();
        assert!((off + 2.0 / (step * step)).abs() < 1e-9);
    }

    #[test]
    fn weighted_vertex_is_hermitian() {
        let edges = vec![
            Edge::finite(1, 0, 1.0).with_coefficients(1.0, 1.0),
            Edge::finite(2, 0, 1.3).with_coefficients(0.7, -0.25),
        ];
        let g = MetricGraph::new(
            vec![
                VertexCondition::Weighted(vec![C64::new(1.0, 0.0), C64::new(0.0, 2.0)]),
                VertexCondition::Dirichlet,
                VertexCondition::Dirichlet,
            ],
            edges,
        )
        .unwrap();
        let h = graph_hamiltonian(&g, Resolution::Spacing(0.01), 1.0).unwrap();
        assert!(h.hermiticity_defect() <= 1e-12 * h.max_abs());
    }

    #[test]
    fn sampled_linear_state_has_flux() {
        let g = MetricGraph::star(3, 1.0);
        let op = graph_hamiltonian(&g, Resolution::Intervals(50), 1.0).unwrap();
        let Discretization::Graph(lay) = &op.discretization else {
            panic!()
        };
        let y = lay.sample(&|_, x| C64::new(x, 0.0));
        assert!((node_flux(&y, 0, &g, lay) - C64::new(3.0, 0.0)).norm() < 1e-10);
        // each tip sees the inward derivative -1 of psi = x
        assert!((node_flux(&y, 1, &g, lay) + C64::new(1.0, 0.0)).norm() < 1e-10);
    }
}
