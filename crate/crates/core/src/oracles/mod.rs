//! Exact ground truth at desk scale: brute-force MAP, vertex enumeration,
//! the subsystem constant `K`, and classical algorithms for shortest paths,
//! perfect matchings and min-cost flows.

mod classical;
mod map;
mod polytope;

pub use classical::{dijkstra, flow_oracle, matching_oracle, FlowResult, MatchingResult, PathResult, ORACLE_NODE_CAP};
pub use map::{brute_force_map, MapResult, MAP_VAR_CAP};
pub use polytope::{enumerate_vertices, lemma1_constant, EnumCaps, PolyRow, PolytopeDescription, Relation, VertexSet};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{what} = {value} exceeds the oracle cap {cap}")]
    CapExceeded { what: &'static str, value: usize, cap: usize },
    #[error("sink is unreachable from the source")]
    Unreachable,
    #[error("graph has no perfect matching")]
    NoPerfectMatching,
    #[error("demands cannot be routed within the capacities")]
    InfeasibleDemand,
    #[error("instance kind does not fit this oracle")]
    WrongKind,
}
