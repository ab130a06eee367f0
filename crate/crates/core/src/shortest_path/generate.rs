use std::collections::HashSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::graph::{Edge, Graph};
use crate::error::{invalid, Error, Result};
use crate::geometry::{dot, norm, Affine, Oracle};

/// One round of the routing game.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundFunctions {
    pub latency_scale: Vec<f64>,
    pub bandwidth_scale: Vec<f64>,
    /// Base latency times `latency_scale`, per edge.
    pub latency: Vec<f64>,
    /// Base bandwidth times `bandwidth_scale`, per edge.
    pub bandwidth: Vec<f64>,
    /// Bandwidth floor.
    pub beta: f64,
}

impl RoundFunctions {
    pub fn from_scales(
        graph: &Graph,
        latency_scale: Vec<f64>,
        bandwidth_scale: Vec<f64>,
        beta: f64,
    ) -> Self {
        let latency = graph
            .edges()
            .iter()
            .zip(&latency_scale)
            .map(|(e, s)| e.latency * s)
            .collect();
        let bandwidth = graph
            .edges()
            .iter()
            .zip(&bandwidth_scale)
            .map(|(e, s)| e.bandwidth * s)
            .collect();
        Self {
            latency_scale,
            bandwidth_scale,
            latency,
            bandwidth,
            beta,
        }
    }

    /// `<latency, x>`
    pub fn cost(&self) -> Oracle {
        Arc::new(Affine::new(self.latency.clone(), 0.0))
    }

    /// `beta - <bandwidth, x>`
    pub fn constraint(&self) -> Oracle {
        Arc::new(Affine::new(
            self.bandwidth.iter().map(|b| -b).collect(),
            self.beta,
        ))
    }

    /// Largest gradient norm of either function.
    pub fn lipschitz(&self) -> f64 {
        norm(&self.latency).max(norm(&self.bandwidth))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorParams {
    pub n: usize,
    pub m: usize,
    pub horizon: usize,
    /// Per-round multiplicative range for latencies.
    pub latency_scale: [f64; 2],
    /// Per-round multiplicative range for bandwidths.
    pub bandwidth_scale: [f64; 2],
    /// Log-uniform range of base latencies (ms).
    pub latency_range: [f64; 2],
    /// Log-uniform range of base bandwidths (Mbps).
    pub bandwidth_range: [f64; 2],
    /// Bandwidth floor as a fraction `rho` of the reference bandwidth chosen
    /// by `floor`.
    pub rho: f64,
    pub floor: FloorRule,
}

/// Reference bandwidth that `rho` scales into the floor.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FloorRule {
    /// Bottleneck of the widest base path.
    #[default]
    Bottleneck,
    /// Largest total base bandwidth of any path. Much tighter: the floor
    /// binds for most routes.
    PathTotal,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            n: 50,
            m: 200,
            horizon: 1600,
            latency_scale: [0.5, 1.5],
            bandwidth_scale: [0.8, 1.2],
            latency_range: [1.0, 100.0],
            bandwidth_range: [10.0, 1000.0],
            rho: 0.8,
            floor: FloorRule::Bottleneck,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub graph: Graph,
    pub rounds: Vec<RoundFunctions>,
}

impl Instance {
    /// `max_t max(||latency_t||, ||bandwidth_t||)`
    pub fn lipschitz(&self) -> f64 {
        self.rounds
            .iter()
            .map(|r| r.lipschitz())
            .fold(0.0, f64::max)
    }
}

fn check_range(name: &str, r: [f64; 2]) -> Result<()> {
    if !(r[0] > 0.0 && r[0] <= r[1] && r[1].is_finite()) {
        return invalid(format!("{name} must be a positive interval, got {r:?}"));
    }
    Ok(())
}

/// Builds a hub-centered random DAG and its per-round functions.
///
/// Nodes get a random topological order with the source first and the
/// destination last. Every other node is joined to a hub in the middle of the
/// order, so source -> hub -> destination always exists; the remaining
/// `m - (n - 1)` edges join random unordered pairs, oriented along the order.
pub fn generate_instance(seed: u64, params: &GeneratorParams) -> Result<Instance> {
    let GeneratorParams { n, m, horizon, .. } = *params;
    if n < 2 {
        return invalid("need at least two nodes");
    }
    if m < n - 1 {
        return invalid(format!("need m >= n - 1 edges, got m = {m}, n = {n}"));
    }
    if m > n * (n - 1) / 2 {
        return invalid(format!(
            "at most n(n-1)/2 = {} edges fit in a DAG",
            n * (n - 1) / 2
        ));
    }
    if horizon < 1 {
        return invalid("horizon must be >= 1");
    }
    check_range("latency_scale", params.latency_scale)?;
    check_range("bandwidth_scale", params.bandwidth_scale)?;
    check_range("latency_range", params.latency_range)?;
    check_range("bandwidth_range", params.bandwidth_range)?;
    if !(params.rho > 0.0 && params.rho.is_finite()) {
        return invalid("rho must be positive");
    }

    let mut last = None;
    for attempt in 0..100u64 {
        let sub = seed.wrapping_add(attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        match try_generate(sub, params) {
            Ok(inst) => return Ok(inst),
            Err(Error::NoPath) => last = Some(attempt),
            Err(e) => return Err(e),
        }
    }
    Err(Error::Generation(format!(
        "destination unreachable after {} attempts",
        last.map_or(0, |a| a + 1)
    )))
}

fn log_uniform(rng: &mut ChaCha8Rng, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        return r[0];
    }
    rng.random_range(r[0].ln()..r[1].ln()).exp()
}

fn uniform(rng: &mut ChaCha8Rng, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        return r[0];
    }
    rng.random_range(r[0]..r[1])
}

fn try_generate(seed: u64, p: &GeneratorParams) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = p.n;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let source = order[0];
    let dest = order[n - 1];
    let hub_pos = n / 2;

    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(p.m);
    let mut taken = HashSet::with_capacity(p.m);
    for pos in 0..n {
        if pos != hub_pos {
            let pair = (pos.min(hub_pos), pos.max(hub_pos));
            taken.insert(pair);
            pairs.push(pair);
        }
    }
    let extra = p.m - pairs.len();
    let free = n * (n - 1) / 2 - pairs.len();
    if extra > 0 && 4 * extra > free {
        let mut pool: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .filter(|pair| !taken.contains(pair))
            .collect();
        pool.shuffle(&mut rng);
        pairs.extend(pool.into_iter().take(extra));
    } else {
        while pairs.len() < p.m {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            if i == j {
                continue;
            }
            let pair = (i.min(j), i.max(j));
            if taken.insert(pair) {
                pairs.push(pair);
            }
        }
    }
    pairs.shuffle(&mut rng);

    let edges: Vec<Edge> = pairs
        .into_iter()
        .map(|(i, j)| Edge {
            tail: order[i],
            head: order[j],
            latency: log_uniform(&mut rng, p.latency_range),
            bandwidth: log_uniform(&mut rng, p.bandwidth_range),
        })
        .collect();
    let graph = Graph::new(n, edges, source, dest)?;

    let mut rounds = Vec::with_capacity(p.horizon);
    for _ in 0..p.horizon {
        let ls: Vec<f64> = (0..p.m)
            .map(|_| uniform(&mut rng, p.latency_scale))
            .collect();
        let bs: Vec<f64> = (0..p.m)
            .map(|_| uniform(&mut rng, p.bandwidth_scale))
            .collect();
        rounds.push(RoundFunctions::from_scales(&graph, ls, bs, 0.0));
    }

    // Floor: a fraction of the reference bandwidth, lowered if the reference
    // path's total bandwidth would miss it in some round so a feasible point
    // always exists.
    let base_bw = graph.base_bandwidths();
    let (reference, value) = match p.floor {
        FloorRule::Bottleneck => graph.dag_widest_path(&base_bw)?,
        FloorRule::PathTotal => {
            let path = graph.dag_longest_path(&base_bw)?;
            let total = path.iter().map(|&e| base_bw[e]).sum();
            (path, total)
        }
    };
    let indicator = graph.indicator(&reference);
    let mut beta = p.rho * value;
    for r in &rounds {
        beta = beta.min(dot(&r.bandwidth, &indicator));
    }
    for r in &mut rounds {
        r.beta = beta;
    }
    Ok(Instance { graph, rounds })
}
