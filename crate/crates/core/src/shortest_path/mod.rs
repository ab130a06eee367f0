//! Online routing with a long-term bandwidth requirement.
//!
//! Each round the learner picks a fractional unit flow from source to
//! destination, pays the latency `<tau_t, x>` and must keep
//! `beta - <l_t, x> <= 0` on average. A fractional flow is turned into a
//! single route by decomposing it into paths and sampling one.

mod flow;
mod generate;
mod graph;
pub mod io;

pub use flow::{flow_decompose, sample_route, FlowPolytope, CONSERVATION_TOL};
pub use generate::{generate_instance, FloorRule, GeneratorParams, Instance, RoundFunctions};
pub use graph::{dijkstra, signed_shortest_path, Edge, Graph};
