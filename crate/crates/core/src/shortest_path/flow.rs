use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use super::graph::{signed_shortest_path, Graph};
use crate::error::{invalid, Result};
use crate::geometry::{all_finite, min_norm_projection, Point};

/// Conservation tolerance for a valid unit flow.
pub const CONSERVATION_TOL: f64 = 1e-7;

/// Unit source-destination flows on a graph: the convex hull of path
/// indicator vectors.
#[derive(Clone, Debug)]
pub struct FlowPolytope {
    graph: Graph,
    diameter: f64,
    max_iter: Option<usize>,
}

impl FlowPolytope {
    pub fn new(graph: Graph) -> Self {
        // Two paths differ in at most |p| + |q| coordinates, each by 1.
        let diameter = if graph.is_acyclic() {
            (2.0 * graph.max_path_edges() as f64).sqrt()
        } else {
            (graph.edge_count() as f64).sqrt()
        };
        Self {
            graph,
            diameter,
            max_iter: None,
        }
    }

    /// Overrides the projection iteration cap (default `10 |E| / tol`).
    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = Some(max_iter);
        self
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn dim(&self) -> usize {
        self.graph.edge_count()
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Bounds and conservation, each within `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.dim() || !all_finite(x) {
            return false;
        }
        if x.iter().any(|v| *v < -tol || *v > 1.0 + tol) {
            return false;
        }
        let g = &self.graph;
        (0..g.node_count()).all(|v| {
            let net = net_outflow(g, x, v);
            (net - supply(g, v)).abs() <= tol
        })
    }

    /// Indicator of a path minimizing `<c, x>`.
    pub fn linear_minimizer(&self, c: &[f64]) -> Point {
        let path =
            signed_shortest_path(&self.graph, c).expect("destination is reachable by construction");
        self.graph.indicator(&path)
    }

    pub fn project(&self, y: &[f64], tol: f64) -> Result<Point> {
        let cap = self
            .max_iter
            .unwrap_or_else(|| (10.0 * self.dim() as f64 / tol).min(1e7) as usize);
        min_norm_projection(y, |c| self.linear_minimizer(c), tol, cap.max(1)).map(|p| p.point)
    }
}

fn supply(g: &Graph, v: usize) -> f64 {
    if v == g.source() {
        1.0
    } else if v == g.dest() {
        -1.0
    } else {
        0.0
    }
}

fn net_outflow(g: &Graph, x: &[f64], v: usize) -> f64 {
    let out: f64 = g.out_edges(v).iter().map(|&e| x[e]).sum();
    let inc: f64 = g.in_edges(v).iter().map(|&e| x[e]).sum();
    out - inc
}

/// Splits a unit flow into weighted source-destination paths.
///
/// Repeatedly follows the largest residual edge out of each node from the
/// source to the destination and subtracts the bottleneck along the way. The
/// bottleneck edge is zeroed each time, so at most `|E|` paths come out.
pub fn flow_decompose(graph: &Graph, x: &[f64], tol: f64) -> Result<Vec<(Vec<usize>, f64)>> {
    if x.len() != graph.edge_count() || !all_finite(x) {
        return invalid("flow must have one finite value per edge");
    }
    if x.iter().any(|v| *v < -tol) {
        return invalid("flow has negative entries");
    }
    let cons_tol = tol.max(CONSERVATION_TOL);
    for v in 0..graph.node_count() {
        if (net_outflow(graph, x, v) - supply(graph, v)).abs() > cons_tol {
            return invalid(format!("flow conservation violated at node {v}"));
        }
    }
    let mut residual: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
    let mut paths = Vec::new();
    let out_of_source =
        |r: &[f64]| -> f64 { graph.out_edges(graph.source()).iter().map(|&e| r[e]).sum() };

    while out_of_source(&residual) > tol {
        if paths.len() >= graph.edge_count() {
            return invalid("flow does not decompose into at most |E| paths");
        }
        let mut path = Vec::new();
        let mut at = graph.source();
        while at != graph.dest() {
            let best = graph
                .out_edges(at)
                .iter()
                .copied()
                .filter(|&e| residual[e] > 0.0)
                .fold(None, |acc: Option<usize>, e| match acc {
                    Some(b) if residual[b] >= residual[e] => Some(b),
                    _ => Some(e),
                });
            let Some(e) = best else {
                return invalid(format!("residual flow dead-ends at node {at}"));
            };
            if path.len() > graph.node_count() {
                return invalid("residual flow contains a cycle");
            }
            path.push(e);
            at = graph.edges()[e].head;
        }
        let (arg, bottleneck) =
            path.iter()
                .map(|&e| (e, residual[e]))
                .fold(
                    (path[0], f64::INFINITY),
                    |a, c| if c.1 < a.1 { c } else { a },
                );
        for &e in &path {
            residual[e] = (residual[e] - bottleneck).max(0.0);
        }
        residual[arg] = 0.0;
        paths.push((path, bottleneck));
    }
    Ok(paths)
}

/// Draws one path with probability equal to its weight.
pub fn sample_route<R: Rng + ?Sized>(
    decomposition: &[(Vec<usize>, f64)],
    rng: &mut R,
) -> Result<Vec<usize>> {
    if decomposition.is_empty() {
        return invalid("empty decomposition");
    }
    let total: f64 = decomposition.iter().map(|(_, w)| w).sum();
    if (total - 1.0).abs() > 1e-7 {
        return invalid(format!("path weights sum to {total}, expected 1"));
    }
    let dist = WeightedIndex::new(decomposition.iter().map(|(_, w)| *w))
        .map_err(|e| crate::error::Error::InvalidInput(e.to_string()))?;
    Ok(decomposition[dist.sample(rng)].0.clone())
}
