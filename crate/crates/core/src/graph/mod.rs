//! Metric graphs: wires with per-edge kinetic coefficients joined at vertices.
//!
//! Edge coordinates run from `start` to `end`. Derivatives at a vertex are
//! taken along the inward coordinate, which increases toward the vertex.

mod file;
mod hamiltonian;
mod secular;

pub use file::{parse_graph, GRAPH_FILE_VERSION};
pub use hamiltonian::{graph_hamiltonian, node_flux, GraphLayout, Resolution};
pub use secular::star_secular_spectrum;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Tolerance on `|sum beta |kappa|^2|` for weighted vertices.
pub const WEIGHT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum VertexCondition {
    /// Continuity plus vanishing inward flux.
    Kirchhoff,
    /// `psi_mu = kappa_mu phi` and `sum alpha_mu conj(kappa_mu) dpsi_mu = 0`,
    /// one weight per incident edge end in [`MetricGraph::incident`] order.
    Weighted(Vec<C64>),
    /// `psi = 0`; used for wire tips.
    Dirichlet,
}

/// An edge with `length = f64::INFINITY` is a line with at least one open end.
#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub start: Option<usize>,
    pub end: Option<usize>,
    pub length: f64,
    /// coefficient of `p^2`
    pub alpha: f64,
    /// coefficient of `p`
    pub beta: f64,
}

impl Edge {
    pub fn finite(start: usize, end: usize, length: f64) -> Edge {
        Edge {
            start: Some(start),
            end: Some(end),
            length,
            alpha: 1.0,
            beta: 0.0,
        }
    }

    /// Half-line whose coordinate comes in from infinity and ends at `vertex`.
    pub fn half_line_into(vertex: usize) -> Edge {
        Edge {
            start: None,
            end: Some(vertex),
            length: f64::INFINITY,
            alpha: 1.0,
            beta: 0.0,
        }
    }

    pub fn with_coefficients(mut self, alpha: f64, beta: f64) -> Edge {
        self.alpha = alpha;
        self.beta = beta;
        self
    }

    pub fn open_ends(&self) -> usize {
        self.start.is_none() as usize + self.end.is_none() as usize
    }

    pub fn is_infinite(&self) -> bool {
        self.length.is_infinite()
    }
}

/// Which end of an edge touches a vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeEnd {
    Start,
    End,
}

impl EdgeEnd {
    /// Sign converting the edge coordinate into the inward one.
    pub fn inward_sign(self) -> f64 {
        match self {
            EdgeEnd::Start => -1.0,
            EdgeEnd::End => 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricGraph {
    pub vertices: Vec<VertexCondition>,
    pub edges: Vec<Edge>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConditionCount {
    pub node_conditions: usize,
    pub infinity_conditions: usize,
    pub total: usize,
    pub disposable_constants: usize,
}

impl MetricGraph {
    pub fn new(vertices: Vec<VertexCondition>, edges: Vec<Edge>) -> Result<MetricGraph> {
        let g = MetricGraph { vertices, edges };
        g.validate()?;
        Ok(g)
    }

    /// Edge ends attached to `vertex`, ordered by edge index, start before end.
    pub fn incident(&self, vertex: usize) -> Vec<(usize, EdgeEnd)> {
        let mut out = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            if e.start == Some(vertex) {
                out.push((i, EdgeEnd::Start));
            }
            if e.end == Some(vertex) {
                out.push((i, EdgeEnd::End));
            }
        }
        out
    }

    pub fn degree(&self, vertex: usize) -> usize {
        self.incident(vertex).len()
    }

    /// Weight of each incident edge end.
    pub fn weights(&self, vertex: usize) -> Vec<C64> {
        let deg = self.degree(vertex);
        match &self.vertices[vertex] {
            VertexCondition::Weighted(k) => k.clone(),
            _ => vec![C64::new(1.0, 0.0); deg],
        }
    }

    /// `sum beta_mu |kappa_mu|^2` with `beta` in the inward frame.
    pub fn weight_sum(&self, vertex: usize) -> f64 {
        self.incident(vertex)
            .iter()
            .zip(self.weights(vertex))
            .map(|(&(e, end), k)| end.inward_sign() * self.edges[e].beta * k.norm_sqr())
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        for (i, e) in self.edges.iter().enumerate() {
            for v in [e.start, e.end].into_iter().flatten() {
                if v >= nv {
                    return Err(Error::InvalidGraph(format!(
                        "edge {i} refers to missing vertex {v}"
                    )));
                }
            }
            if e.is_infinite() {
                if e.open_ends() == 0 {
                    return Err(Error::InvalidGraph(format!(
                        "infinite edge {i} has no open end"
                    )));
                }
            } else if !(e.length > 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "edge {i} has non-positive length {}",
                    e.length
                )));
            } else if e.open_ends() > 0 {
                return Err(Error::InvalidGraph(format!(
                    "finite edge {i} has a dangling end"
                )));
            }
            if !(e.alpha > 0.0) || !e.beta.is_finite() {
                return Err(Error::InvalidGraph(format!(
                    "edge {i} needs alpha > 0 and finite beta"
                )));
            }
        }
        for (v, cond) in self.vertices.iter().enumerate() {
            let deg = self.degree(v);
            if deg == 0 {
                return Err(Error::InvalidGraph(format!(
                    "vertex {v} has no incident edges"
                )));
            }
            match cond {
                VertexCondition::Weighted(k) if k.len() != deg => {
                    return Err(Error::InvalidGraph(format!(
                        "vertex {v} has degree {deg} but {} weights",
                        k.len()
                    )));
                }
                VertexCondition::Weighted(k) if k.iter().all(|z| z.norm() == 0.0) => {
                    return Err(Error::InvalidGraph(format!(
                        "vertex {v} has all weights zero"
                    )));
                }
                VertexCondition::Dirichlet => continue,
                _ => {}
            }
            let s = self.weight_sum(v);
            if s.abs() > WEIGHT_TOLERANCE {
                return Err(Error::WeightConstraint {
                    vertex: v,
                    value: s,
                });
            }
        }
        Ok(())
    }

    /// Matching conditions against free constants of the edge-wise general
    /// solutions: every edge end at a vertex carries one condition, every open
    /// end one normalizability condition, every line two constants.
    pub fn count_conditions(&self) -> Result<ConditionCount> {
        self.validate()?;
        let node_conditions: usize = (0..self.vertices.len()).map(|v| self.degree(v)).sum();
        let infinity_conditions: usize = self.edges.iter().map(Edge::open_ends).sum();
        Ok(ConditionCount {
            node_conditions,
            infinity_conditions,
            total: node_conditions + infinity_conditions,
            disposable_constants: 2 * self.edges.len(),
        })
    }

    /// Two internal Kirchhoff vertices joined by one edge, two half-lines on each.
    pub fn compton(internal_length: f64) -> MetricGraph {
        let edges = vec![
            Edge::half_line_into(0),
            Edge::half_line_into(0),
            Edge::finite(0, 1, internal_length),
            Edge::half_line_into(1),
            Edge::half_line_into(1),
        ];
        MetricGraph::new(vec![VertexCondition::Kirchhoff; 2], edges)
            .expect("library graph is valid")
    }

    /// Four Kirchhoff vertices on a square loop, one half-line each.
    pub fn box_graph(side: f64) -> MetricGraph {
        let mut edges: Vec<Edge> = (0..4).map(|v| Edge::finite(v, (v + 1) % 4, side)).collect();
        edges.extend((0..4).map(Edge::half_line_into));
        MetricGraph::new(vec![VertexCondition::Kirchhoff; 4], edges)
            .expect("library graph is valid")
    }

    /// Equilateral star: Kirchhoff center (vertex 0), Dirichlet tips, coordinates
    /// running from each tip into the center.
    pub fn star(edge_count: usize, length: f64) -> MetricGraph {
        let mut vertices = vec![VertexCondition::Kirchhoff];
        vertices.extend((0..edge_count).map(|_| VertexCondition::Dirichlet));
        let edges = (0..edge_count)
            .map(|i| Edge::finite(i + 1, 0, length))
            .collect();
        MetricGraph::new(vertices, edges).expect("library graph is valid")
    }

    /// Chain of finite edges through degree-2 vertices with Dirichlet ends.
    pub fn chain(lengths: &[f64], inner: VertexCondition) -> Result<MetricGraph> {
        let n = lengths.len();
        let mut vertices = vec![VertexCondition::Dirichlet];
        vertices.extend((1..n).map(|_| inner.clone()));
        vertices.push(VertexCondition::Dirichlet);
        let edges = lengths
            .iter()
            .enumerate()
            .map(|(i, &l)| Edge::finite(i, i + 1, l))
            .collect();
        MetricGraph::new(vertices, edges)
    }

    /// A single infinite line with no vertices.
    pub fn free_line() -> MetricGraph {
        let e = Edge {
            start: None,
            end: None,
            length: f64::INFINITY,
            alpha: 1.0,
            beta: 0.0,
        };
        MetricGraph::new(vec![], vec![e]).expect("library graph is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn library_counts() {
        let c = MetricGraph::compton(1.0).count_conditions().unwrap();
        assert_eq!(
            (
                c.node_conditions,
                c.infinity_conditions,
                c.total,
                c.disposable_constants
            ),
            (6, 4, 10, 10)
        );
        let b = MetricGraph::box_graph(1.0).count_conditions().unwrap();
        assert_eq!(
            (
                b.node_conditions,
                b.infinity_conditions,
                b.total,
                b.disposable_constants
            ),
            (12, 4, 16, 16)
        );
        let l = MetricGraph::free_line().count_conditions().unwrap();
        assert_eq!(
            (
                l.node_conditions,
                l.infinity_conditions,
                l.disposable_constants
            ),
            (0, 2, 2)
        );
    }

    #[test]
    fn dangling_edge_rejected() {
        let e = Edge {
            start: Some(0),
            end: None,
            length: 1.0,
            alpha: 1.0,
            beta: 0.0,
        };
        assert!(matches!(
            MetricGraph::new(vec![VertexCondition::Kirchhoff], vec![e]),
            Err(Error::InvalidGraph(_))
        ));
    }

    #[test]
    fn weight_constraint_enforced() {
        let edges = vec![
            Edge::finite(1, 0, 1.0).with_coefficients(1.0, 1.0),
            Edge::finite(2, 0, 1.0).with_coefficients(1.0, -0.25),
        ];
        let ok = vec![
            VertexCondition::Weighted(vec![C64::new(1.0, 0.0), C64::new(0.0, 2.0)]),
            VertexCondition::Dirichlet,
            VertexCondition::Dirichlet,
        ];
        assert!(MetricGraph::new(ok, edges.clone()).is_ok());
        let bad = vec![
            VertexCondition::Weighted(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]),
            VertexCondition::Dirichlet,
            VertexCondition::Dirichlet,
        ];
        match MetricGraph::new(bad, edges) {
            Err(Error::WeightConstraint { vertex: 0, value }) => {
                assert!((value - 0.75).abs() < 1e-15)
            }
            other => panic!("{other:?}"),
        }
    }
}
