//! Plain-text instance files.
//!
//! `graph.txt`: header `n m s d`, then one edge per line as
//! `tail head base_latency base_bandwidth`.
//!
//! `rounds.txt`: header `T m`, then one round per line as `beta` followed by
//! `m` latency scale factors and `m` bandwidth scale factors.
//!
//! Floats are written in shortest round-trip form, so a reload rebuilds the
//! instance bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::generate::{Instance, RoundFunctions};
use super::graph::{Edge, Graph};
use crate::error::{Error, Result};

pub const GRAPH_FILE: &str = "graph.txt";
pub const ROUNDS_FILE: &str = "rounds.txt";

pub fn graph_to_string(g: &Graph) -> String {
    let mut s = format!(
        "{} {} {} {}\n",
        g.node_count(),
        g.edge_count(),
        g.source(),
        g.dest()
    );
    for e in g.edges() {
        let _ = writeln!(s, "{} {} {} {}", e.tail, e.head, e.latency, e.bandwidth);
    }
    s
}

pub fn rounds_to_string(rounds: &[RoundFunctions], m: usize) -> String {
    let mut s = format!("{} {}\n", rounds.len(), m);
    for r in rounds {
        let _ = write!(s, "{}", r.beta);
        for v in r.latency_scale.iter().chain(&r.bandwidth_scale) {
            let _ = write!(s, " {v}");
        }
        s.push('\n');
    }
    s
}

fn parse<T: std::str::FromStr>(tok: Option<&str>, what: &str, line: usize) -> Result<T> {
    tok.ok_or_else(|| Error::Parse(format!("line {line}: missing {what}")))?
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: bad {what}")))
}

pub fn parse_graph(text: &str) -> Result<Graph> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (i, header) = lines
        .next()
        .ok_or_else(|| Error::Parse("empty graph file".into()))?;
    let mut tok = header.split_whitespace();
    let n: usize = parse(tok.next(), "n", i + 1)?;
    let m: usize = parse(tok.next(), "m", i + 1)?;
    let s: usize = parse(tok.next(), "s", i + 1)?;
    let d: usize = parse(tok.next(), "d", i + 1)?;
    let mut edges = Vec::with_capacity(m);
    for (i, line) in lines {
        let mut tok = line.split_whitespace();
        edges.push(Edge {
            tail: parse(tok.next(), "tail", i + 1)?,
            head: parse(tok.next(), "head", i + 1)?,
            latency: parse(tok.next(), "latency", i + 1)?,
            bandwidth: parse(tok.next(), "bandwidth", i + 1)?,
        });
    }
    if edges.len() != m {
        return Err(Error::Parse(format!(
            "header says {m} edges, found {}",
            edges.len()
        )));
    }
    Graph::new(n, edges, s, d)
}

pub fn parse_rounds(text: &str, graph: &Graph) -> Result<Vec<RoundFunctions>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (i, header) = lines
        .next()
        .ok_or_else(|| Error::Parse("empty rounds file".into()))?;
    let mut tok = header.split_whitespace();
    let t: usize = parse(tok.next(), "T", i + 1)?;
    let m: usize = parse(tok.next(), "m", i + 1)?;
    if m != graph.edge_count() {
        return Err(Error::Parse(format!(
            "rounds file has m = {m}, graph has {}",
            graph.edge_count()
        )));
    }
    let mut rounds = Vec::with_capacity(t);
    for (i, line) in lines {
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::Parse(format!("line {}: bad number", i + 1)))
            })
            .collect::<Result<_>>()?;
        if vals.len() != 1 + 2 * m {
            return Err(Error::Parse(format!(
                "line {}: expected {} values",
                i + 1,
                1 + 2 * m
            )));
        }
        rounds.push(RoundFunctions::from_scales(
            graph,
            vals[1..=m].to_vec(),
            vals[m + 1..].to_vec(),
            vals[0],
        ));
    }
    if rounds.len() != t {
        return Err(Error::Parse(format!(
            "header says {t} rounds, found {}",
            rounds.len()
        )));
    }
    Ok(rounds)
}

pub fn write_instance(dir: &Path, inst: &Instance) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(GRAPH_FILE), graph_to_string(&inst.graph))?;
    fs::write(
        dir.join(ROUNDS_FILE),
        rounds_to_string(&inst.rounds, inst.graph.edge_count()),
    )?;
    Ok(())
}

pub fn read_instance(dir: &Path) -> Result<Instance> {
    let graph = parse_graph(&fs::read_to_string(dir.join(GRAPH_FILE))?)?;
    let rounds = parse_rounds(&fs::read_to_string(dir.join(ROUNDS_FILE))?, &graph)?;
    Ok(Instance { graph, rounds })
}
