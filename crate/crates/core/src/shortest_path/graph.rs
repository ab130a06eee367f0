use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    /// Base latency in ms.
    pub latency: f64,
    /// Base bandwidth in Mbps.
    pub bandwidth: f64,
}

/// Directed graph with a designated source and destination.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    source: usize,
    dest: usize,
    /// Outgoing edge indices per node, ascending.
    out: Vec<Vec<usize>>,
    /// Incoming edge indices per node, ascending.
    inc: Vec<Vec<usize>>,
    /// A topological order when the graph is acyclic.
    topo: Option<Vec<usize>>,
}

impl Graph {
    pub fn new(n: usize, edges: Vec<Edge>, source: usize, dest: usize) -> Result<Self> {
        if source >= n || dest >= n {
            return invalid("source and destination must be nodes of the graph");
        }
        if source == dest {
            return invalid("source and destination must differ");
        }
        let mut out = vec![Vec::new(); n];
        let mut inc = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            if e.tail >= n || e.head >= n || e.tail == e.head {
                return invalid(format!("edge {i} has invalid endpoints"));
            }
            if !(e.latency > 0.0 && e.latency.is_finite())
                || !(e.bandwidth > 0.0 && e.bandwidth.is_finite())
            {
                return invalid(format!(
                    "edge {i} needs positive finite latency and bandwidth"
                ));
            }
            out[e.tail].push(i);
            inc[e.head].push(i);
        }
        let topo = topological_order(n, &edges, &out);
        let g = Self {
            n,
            edges,
            source,
            dest,
            out,
            inc,
            topo,
        };
        if !g.reachable_from_source()[dest] {
            return Err(Error::NoPath);
        }
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn dest(&self) -> usize {
        self.dest
    }

    pub fn out_edges(&self, v: usize) -> &[usize] {
        &self.out[v]
    }

    pub fn in_edges(&self, v: usize) -> &[usize] {
        &self.inc[v]
    }

    pub fn topological_order(&self) -> Option<&[usize]> {
        self.topo.as_deref()
    }

    pub fn is_acyclic(&self) -> bool {
        self.topo.is_some()
    }

    pub fn base_latencies(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.latency).collect()
    }

    pub fn base_bandwidths(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.bandwidth).collect()
    }

    fn reachable_from_source(&self) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        let mut stack = vec![self.source];
        seen[self.source] = true;
        while let Some(u) = stack.pop() {
            for &e in &self.out[u] {
                let v = self.edges[e].head;
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }

    /// Edge indicator vector of a path.
    pub fn indicator(&self, path: &[usize]) -> Vec<f64> {
        let mut x = vec![0.0; self.edges.len()];
        for &e in path {
            x[e] += 1.0;
        }
        x
    }

    /// Whether `path` is a walk from source to destination.
    pub fn is_st_path(&self, path: &[usize]) -> bool {
        let mut at = self.source;
        for &e in path {
            match self.edges.get(e) {
                Some(edge) if edge.tail == at => at = edge.head,
                _ => return false,
            }
        }
        at == self.dest && !path.is_empty()
    }

    /// Minimum-weight source-destination path for arbitrary finite weights on
    /// an acyclic graph, by dynamic programming over the topological order.
    /// Ties go to the smallest edge index at each step.
    pub fn dag_shortest_path(&self, weights: &[f64]) -> Result<Vec<usize>> {
        self.dag_extreme_path(weights, false)
    }

    /// Maximum-weight source-destination path on an acyclic graph.
    pub fn dag_longest_path(&self, weights: &[f64]) -> Result<Vec<usize>> {
        self.dag_extreme_path(weights, true)
    }

    fn dag_extreme_path(&self, weights: &[f64], maximize: bool) -> Result<Vec<usize>> {
        let Some(topo) = &self.topo else {
            return invalid("graph has a cycle");
        };
        if weights.len() != self.edges.len() {
            return invalid("one weight per edge required");
        }
        let sign = if maximize { -1.0 } else { 1.0 };
        let mut dist = vec![f64::INFINITY; self.n];
        let mut next = vec![usize::MAX; self.n];
        dist[self.dest] = 0.0;
        for &u in topo.iter().rev() {
            if u == self.dest {
                continue;
            }
            for &e in &self.out[u] {
                let v = self.edges[e].head;
                if dist[v].is_finite() {
                    let cand = sign * weights[e] + dist[v];
                    if cand < dist[u] {
                        dist[u] = cand;
                        next[u] = e;
                    }
                }
            }
        }
        self.follow(&next)
    }

    /// Source-destination path maximizing its smallest edge weight, on an
    /// acyclic graph. Returns the path and that bottleneck value.
    pub fn dag_widest_path(&self, weights: &[f64]) -> Result<(Vec<usize>, f64)> {
        let Some(topo) = &self.topo else {
            return invalid("graph has a cycle");
        };
        if weights.len() != self.edges.len() {
            return invalid("one weight per edge required");
        }
        let mut width = vec![f64::NEG_INFINITY; self.n];
        let mut next = vec![usize::MAX; self.n];
        width[self.dest] = f64::INFINITY;
        for &u in topo.iter().rev() {
            if u == self.dest {
                continue;
            }
            for &e in &self.out[u] {
                let cand = weights[e].min(width[self.edges[e].head]);
                if cand > width[u] {
                    width[u] = cand;
                    next[u] = e;
                }
            }
        }
        let path = self.follow(&next)?;
        Ok((path, width[self.source]))
    }

    fn follow(&self, next: &[usize]) -> Result<Vec<usize>> {
        let mut path = Vec::new();
        let mut at = self.source;
        while at != self.dest {
            let e = next[at];
            if e == usize::MAX || path.len() > self.n {
                return Err(Error::NoPath);
            }
            path.push(e);
            at = self.edges[e].head;
        }
        Ok(path)
    }

    /// Longest source-destination path measured in edges, or an upper bound
    /// (`n - 1`) for graphs with cycles.
    pub fn max_path_edges(&self) -> usize {
        if self.topo.is_some() {
            let ones = vec![1.0; self.edges.len()];
            self.dag_longest_path(&ones)
                .map(|p| p.len())
                .unwrap_or(self.n - 1)
        } else {
            self.n - 1
        }
    }
}

fn topological_order(n: usize, edges: &[Edge], out: &[Vec<usize>]) -> Option<Vec<usize>> {
    let mut indeg = vec![0usize; n];
    for e in edges {
        indeg[e.head] += 1;
    }
    let mut ready: Vec<usize> = (0..n).rev().filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(u) = ready.pop() {
        order.push(u);
        for &e in &out[u] {
            let v = edges[e].head;
            indeg[v] -= 1;
            if indeg[v] == 0 {
                ready.push(v);
            }
        }
    }
    (order.len() == n).then_some(order)
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Minimum-weight source-destination path for strictly positive weights.
///
/// Distances to the destination are computed on the reversed graph; the path
/// is then read forwards, taking at each node the smallest-index edge that
/// attains the distance. That yields the lexicographically smallest edge
/// sequence among the shortest paths.
pub fn dijkstra(graph: &Graph, weights: &[f64]) -> Result<Vec<usize>> {
    if weights.len() != graph.edge_count() {
        return invalid("one weight per edge required");
    }
    if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
        return invalid("dijkstra needs strictly positive finite weights");
    }
    let mut dist = vec![f64::INFINITY; graph.n];
    let mut heap = BinaryHeap::new();
    dist[graph.dest] = 0.0;
    heap.push(Entry(0.0, graph.dest));
    while let Some(Entry(d, v)) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &e in &graph.inc[v] {
            let u = graph.edges[e].tail;
            let cand = weights[e] + d;
            if cand < dist[u] {
                dist[u] = cand;
                heap.push(Entry(cand, u));
            }
        }
    }
    if !dist[graph.source].is_finite() {
        return Err(Error::NoPath);
    }
    let mut next = vec![usize::MAX; graph.n];
    for u in 0..graph.n {
        let mut best = f64::INFINITY;
        for &e in &graph.out[u] {
            let cand = weights[e] + dist[graph.edges[e].head];
            if cand < best {
                best = cand;
                next[u] = e;
            }
        }
    }
    graph.follow(&next)
}

/// Minimum path for weights of any sign. Exact on acyclic graphs; on graphs
/// with cycles the weights are shifted to be positive first, which favors
/// paths with fewer edges.
pub fn signed_shortest_path(graph: &Graph, weights: &[f64]) -> Result<Vec<usize>> {
    if graph.is_acyclic() {
        return graph.dag_shortest_path(weights);
    }
    let lo = weights.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = weights.iter().fold(1.0_f64, |m, w| m.max(w.abs()));
    let shifted: Vec<f64> = weights.iter().map(|w| w - lo + 1e-9 * scale).collect();
    dijkstra(graph, &shifted)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge(tail: usize, head: usize) -> Edge {
        Edge {
            tail,
            head,
            latency: 1.0,
            bandwidth: 1.0,
        }
    }

    fn path_weight(path: &[usize], w: &[f64]) -> f64 {
        path.iter().map(|&e| w[e]).sum()
    }

    #[test]
    fn single_edge() {
        let g = Graph::new(2, vec![edge(0, 1)], 0, 1).unwrap();
        assert_eq!(dijkstra(&g, &[5.0]).unwrap(), vec![0]);
    }

    #[test]
    fn parallel_edges_pick_cheaper() {
        let g = Graph::new(2, vec![edge(0, 1), edge(0, 1)], 0, 1).unwrap();
        assert_eq!(dijkstra(&g, &[3.0, 2.0]).unwrap(), vec![1]);
        assert_eq!(dijkstra(&g, &[2.0, 2.0]).unwrap(), vec![0]);
    }

    #[test]
    fn triangle_prefers_two_hops() {
        // s=0, a=1, d=2
        let g = Graph::new(3, vec![edge(0, 1), edge(1, 2), edge(0, 2)], 0, 2).unwrap();
        let w = [1.0, 1.0, 3.0];
        let p = dijkstra(&g, &w).unwrap();
        assert_eq!(p, vec![0, 1]);
        assert_eq!(path_weight(&p, &w), 2.0);
    }

    #[test]
    fn rejects_bad_weights_and_unreachable() {
        let g = Graph::new(2, vec![edge(0, 1)], 0, 1).unwrap();
        assert!(matches!(dijkstra(&g, &[0.0]), Err(Error::InvalidInput(_))));
        assert!(matches!(dijkstra(&g, &[-1.0]), Err(Error::InvalidInput(_))));
        assert!(matches!(
            Graph::new(3, vec![edge(0, 1)], 0, 2),
            Err(Error::NoPath)
        ));
    }

    #[test]
    fn dag_path_handles_negative_weights() {
        let g = Graph::new(3, vec![edge(0, 1), edge(1, 2), edge(0, 2)], 0, 2).unwrap();
        assert_eq!(g.dag_shortest_path(&[-1.0, 0.5, -0.2]).unwrap(), vec![0, 1]);
        assert_eq!(g.dag_shortest_path(&[1.0, 0.5, -0.2]).unwrap(), vec![2]);
        assert_eq!(g.dag_longest_path(&[1.0, 1.0, 1.0]).unwrap(), vec![0, 1]);
        assert_eq!(g.max_path_edges(), 2);
    }

    #[test]
    fn cyclic_graph_falls_back_to_shifted_weights() {
        // 0 -> 1 -> 2, 1 -> 0 closes a cycle.
        let g = Graph::new(3, vec![edge(0, 1), edge(1, 2), edge(1, 0)], 0, 2).unwrap();
        assert!(!g.is_acyclic());
        assert_eq!(
            signed_shortest_path(&g, &[-1.0, -1.0, -5.0]).unwrap(),
            vec![0, 1]
        );
    }

    #[test]
    fn dijkstra_matches_exhaustive_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        // Complete DAG on 6 nodes.
        let mut edges = Vec::new();
        for i in 0..6 {
            for j in (i + 1)..6 {
                edges.push(edge(i, j));
            }
        }
        let g = Graph::new(6, edges, 0, 5).unwrap();
        for _ in 0..50 {
            let w: Vec<f64> = (0..g.edge_count())
                .map(|_| rng.random_range(0.1..5.0))
                .collect();
            let best = enumerate_paths(&g)
                .into_iter()
                .map(|p| path_weight(&p, &w))
                .fold(f64::INFINITY, f64::min);
            let p = dijkstra(&g, &w).unwrap();
            assert!(g.is_st_path(&p));
            assert!((path_weight(&p, &w) - best).abs() < 1e-12);
            let q = g.dag_shortest_path(&w).unwrap();
            assert!((path_weight(&q, &w) - best).abs() < 1e-12);
        }
    }

    #[test]
    fn widest_path_matches_exhaustive_enumeration() {
        let inst = crate::shortest_path::generate_instance(
            4,
            &crate::shortest_path::GeneratorParams {
                n: 7,
                m: 14,
                horizon: 1,
                ..Default::default()
            },
        )
        .unwrap();
        let g = &inst.graph;
        let bw = g.base_bandwidths();
        let bottleneck = |p: &[usize]| p.iter().map(|&e| bw[e]).fold(f64::INFINITY, f64::min);
        let best = enumerate_paths(g)
            .iter()
            .map(|p| bottleneck(p))
            .fold(0.0, f64::max);
        let (path, width) = g.dag_widest_path(&bw).unwrap();
        assert!(g.is_st_path(&path));
        assert_eq!(width, best);
        assert_eq!(bottleneck(&path), best);
    }

    pub(crate) fn enumerate_paths(g: &Graph) -> Vec<Vec<usize>> {
        fn rec(g: &Graph, at: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if at == g.dest() {
                out.push(cur.clone());
                return;
            }
            for &e in g.out_edges(at) {
                cur.push(e);
                rec(g, g.edges()[e].head, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(g, g.source(), &mut Vec::new(), &mut out);
        out
    }
}
