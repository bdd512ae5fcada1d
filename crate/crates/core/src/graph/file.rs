//! Versioned TOML description of a metric graph.
//!
//! ```toml
//! version = 1
//!
//! [[vertex]]
//! condition = "kirchhoff"        # or "weighted" / "dirichlet"
//! kappa = [1.0, 2.0]             # weighted only, one per incident edge end
//! kappa_im = [0.0, 0.5]          # optional imaginary parts
//!
//! [[edge]]
//! start = 0                      # omit for an open end
//! end = 1
//! length = 1.0                   # omit for an infinite line
//! alpha = 1.0
//! beta = 0.0
//! ```

use num_complex::Complex64 as C64;
use serde::Deserialize;

use super::{Edge, MetricGraph, VertexCondition};
use crate::error::{Error, Result};

pub const GRAPH_FILE_VERSION: u32 = 1;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    version: u32,
    #[serde(default)]
    vertex: Vec<VertexEntry>,
    #[serde(default)]
    edge: Vec<EdgeEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VertexEntry {
    condition: String,
    kappa: Option<Vec<f64>>,
    kappa_im: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeEntry {
    start: Option<usize>,
    end: Option<usize>,
    length: Option<f64>,
    #[serde(default = "one")]
    alpha: f64,
    #[serde(default)]
    beta: f64,
}

fn one() -> f64 {
    1.0
}

pub fn parse_graph(text: &str) -> Result<MetricGraph> {
    let file: GraphFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if file.version != GRAPH_FILE_VERSION {
        return Err(Error::Parse(format!(
            "graph file version {} is not supported (expected {GRAPH_FILE_VERSION})",
            file.version
        )));
    }
    let vertices = file
        .vertex
        .into_iter()
        .enumerate()
        .map(|(i, v)| match v.condition.as_str() {
            "kirchhoff" => Ok(VertexCondition::Kirchhoff),
            "dirichlet" => Ok(VertexCondition::Dirichlet),
            "weighted" => {
                let re = v
                    .kappa
                    .ok_or_else(|| Error::Parse(format!("vertex[{i}].kappa is required")))?;
                let im = v.kappa_im.unwrap_or_else(|| vec![0.0; re.len()]);
                if im.len() != re.len() {
                    return Err(Error::Parse(format!(
                        "vertex[{i}].kappa_im length differs from kappa"
                    )));
                }
                Ok(VertexCondition::Weighted(
                    re.into_iter()
                        .zip(im)
                        .map(|(a, b)| C64::new(a, b))
                        .collect(),
                ))
            }
            other => Err(Error::Parse(format!(
                "vertex[{i}].condition: unknown value {other:?}"
            ))),
        })
        .collect::<Result<Vec<_>>>()?;
    let edges = file
        .edge
        .into_iter()
        .map(|e| Edge {
            start: e.start,
            end: e.end,
            length: e.length.unwrap_or(f64::INFINITY),
            alpha: e.alpha,
            beta: e.beta,
        })
        .collect();
    MetricGraph::new(vertices, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_compton_graph() {
        let text = r#"
            version = 1
            [[vertex]]
            condition = "kirchhoff"
            [[vertex]]
            condition = "kirchhoff"
            [[edge]]
            end = 0
            [[edge]]
            end = 0
            [[edge]]
            start = 0
            end = 1
            length = 2.0
            [[edge]]
            end = 1
            [[edge]]
            end = 1
        "#;
        let g = parse_graph(text).unwrap();
        assert_eq!(g, MetricGraph::compton(2.0));
    }

    #[test]
    fn rejects_wrong_version_and_fields() {
        assert!(parse_graph("version = 2").is_err());
        assert!(parse_graph("version = 1\n[[vertex]]\ncondition = \"kirchoff\"\n").is_err());
        assert!(parse_graph("version = 1\nbogus = 3\n").is_err());
    }
}
