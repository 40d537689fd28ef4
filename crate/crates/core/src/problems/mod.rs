//! Graphical models for eight combinatorial problems and the maps from their
//! MAP assignments back to solutions of the original LPs.

mod construct;
pub mod generate;
mod lp;
mod recover;

pub use construct::build_gm;
pub use lp::original_lp;
pub use recover::{recover, recover_assignment, recover_primal_vertex_cover, RecoverError, RecoveredSolution};

use crate::factor_graph::{FactorGraph, GraphError, VarId};
use crate::rational::{from_f64, int, Rational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProblemKind {
    ShortestPath,
    PerfectMatching,
    PerfectMatchingOddCycles,
    VertexCoverDual,
    EdgeCover,
    Tsp2Factor,
    CyclePacking,
    NetworkFlow,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 8] = [
        ProblemKind::ShortestPath,
        ProblemKind::PerfectMatching,
        ProblemKind::PerfectMatchingOddCycles,
        ProblemKind::VertexCoverDual,
        ProblemKind::EdgeCover,
        ProblemKind::Tsp2Factor,
        ProblemKind::CyclePacking,
        ProblemKind::NetworkFlow,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::ShortestPath => "shortest-path",
            ProblemKind::PerfectMatching => "perfect-matching",
            ProblemKind::PerfectMatchingOddCycles => "matching-odd-cycles",
            ProblemKind::VertexCoverDual => "vertex-cover-dual",
            ProblemKind::EdgeCover => "edge-cover",
            ProblemKind::Tsp2Factor => "tsp",
            ProblemKind::CyclePacking => "cycle-packing",
            ProblemKind::NetworkFlow => "network-flow",
        }
    }

    pub fn directed(self) -> bool {
        matches!(self, ProblemKind::ShortestPath | ProblemKind::NetworkFlow)
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ProblemKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown problem kind {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
    pub directed: bool,
}

impl Edge {
    pub fn new(u: usize, v: usize, weight: f64, directed: bool) -> Self {
        Edge { u, v, weight, directed }
    }

    pub fn touches(&self, x: usize) -> bool {
        self.u == x || self.v == x
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Params {
    None,
    ShortestPath { source: usize, sink: usize },
    /// Vertex-disjoint odd cycles, each listed in cycle order.
    OddCycles { cycles: Vec<Vec<usize>> },
    VertexCover { budgets: Vec<u32> },
    Flow { demands: Vec<i64>, capacities: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub kind: ProblemKind,
    pub num_nodes: usize,
    pub edges: Vec<Edge>,
    pub params: Params,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("edge {0} has an endpoint out of range")]
    BadEndpoint(usize),
    #[error("edge {0} is a self-loop")]
    SelfLoop(usize),
    #[error("edge {edge} should be {}", if *.directed { "directed" } else { "undirected" })]
    Orientation { edge: usize, directed: bool },
    #[error("weight of edge {0} is not finite")]
    BadWeight(usize),
    #[error("weight of edge {0} is negative")]
    NegativeWeight(usize),
    #[error("parameters do not match the problem kind")]
    WrongParams,
    #[error("parameter list has length {got}, expected {expected}")]
    ParamLength { expected: usize, got: usize },
    #[error("source and sink must be distinct vertices in range")]
    BadTerminals,
    #[error("vertex {0} is isolated")]
    IsolatedVertex(usize),
    #[error("terminal {0} has no usable edge")]
    DegenerateVertex(usize),
    #[error("vertex {0} has degree below two")]
    VertexDegreeTooSmall(usize),
    #[error("odd cycles share vertex {0}")]
    NonDisjointCycles(usize),
    #[error("cycle {0} has even length or fewer than three vertices")]
    EvenCycle(usize),
    #[error("cycle {cycle} uses the missing edge {u}-{v}")]
    MissingCycleEdge { cycle: usize, u: usize, v: usize },
    #[error("demands sum to {0}, not zero")]
    UnbalancedDemand(i64),
    #[error("capacity of edge {0} is zero")]
    ZeroCapacity(usize),
    #[error("vertex {0} cannot satisfy its local constraint")]
    InfeasibleVertex(usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl ProblemInstance {
    pub fn validate(&self) -> Result<(), ProblemError> {
        let n = self.num_nodes;
        let directed = self.kind.directed();
        for (k, e) in self.edges.iter().enumerate() {
            if e.u >= n || e.v >= n {
                return Err(ProblemError::BadEndpoint(k));
            }
            if e.u == e.v {
                return Err(ProblemError::SelfLoop(k));
            }
            if e.directed != directed {
                return Err(ProblemError::Orientation { edge: k, directed });
            }
            if !e.weight.is_finite() {
                return Err(ProblemError::BadWeight(k));
            }
            let signed_ok = matches!(self.kind, ProblemKind::VertexCoverDual);
            if e.weight < 0.0 && !signed_ok {
                return Err(ProblemError::NegativeWeight(k));
            }
        }
        match (&self.kind, &self.params) {
            (ProblemKind::ShortestPath, Params::ShortestPath { source, sink }) => {
                if source == sink || *source >= n || *sink >= n {
                    return Err(ProblemError::BadTerminals);
                }
            }
            (ProblemKind::PerfectMatchingOddCycles, Params::OddCycles { cycles }) => {
                let mut seen = vec![false; n];
                for (c, cycle) in cycles.iter().enumerate() {
                    if cycle.len() < 3 || cycle.len() % 2 == 0 {
                        return Err(ProblemError::EvenCycle(c));
                    }
                    for &u in cycle {
                        if u >= n {
                            return Err(ProblemError::BadTerminals);
                        }
                        if seen[u] {
                            return Err(ProblemError::NonDisjointCycles(u));
                        }
                        seen[u] = true;
                    }
                    for k in 0..cycle.len() {
                        let (a, b) = (cycle[k], cycle[(k + 1) % cycle.len()]);
                        if self.find_edge(a, b).is_none() {
                            return Err(ProblemError::MissingCycleEdge { cycle: c, u: a, v: b });
                        }
                    }
                }
            }
            (ProblemKind::VertexCoverDual, Params::VertexCover { budgets }) => {
                if budgets.len() != n {
                    return Err(ProblemError::ParamLength { expected: n, got: budgets.len() });
                }
            }
            (ProblemKind::NetworkFlow, Params::Flow { demands, capacities }) => {
                if demands.len() != n {
                    return Err(ProblemError::ParamLength { expected: n, got: demands.len() });
                }
                if capacities.len() != self.edges.len() {
                    return Err(ProblemError::ParamLength {
                        expected: self.edges.len(),
                        got: capacities.len(),
                    });
                }
                if let Some(k) = capacities.iter().position(|&c| c == 0) {
                    return Err(ProblemError::ZeroCapacity(k));
                }
                let total: i64 = demands.iter().sum();
                if total != 0 {
                    return Err(ProblemError::UnbalancedDemand(total));
                }
            }
            (
                ProblemKind::PerfectMatching
                | ProblemKind::EdgeCover
                | ProblemKind::Tsp2Factor
                | ProblemKind::CyclePacking,
                Params::None,
            ) => {}
            _ => return Err(ProblemError::WrongParams),
        }
        Ok(())
    }

    /// First edge joining `a` and `b` in either direction.
    pub fn find_edge(&self, a: usize, b: usize) -> Option<usize> {
        self.edges
            .iter()
            .position(|e| (e.u == a && e.v == b) || (e.u == b && e.v == a))
    }

    /// Undirected degree of every vertex.
    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.num_nodes];
        for e in &self.edges {
            d[e.u] += 1;
            d[e.v] += 1;
        }
        d
    }

    /// Exact per-edge objective coefficients of the original LP: the edge
    /// weights, or 1 per edge for the vertex-cover dual.
    pub fn objective_weights(&self) -> Vec<Rational> {
        match self.kind {
            ProblemKind::VertexCoverDual => vec![int(1); self.edges.len()],
            _ => self.edges.iter().map(|e| from_f64(e.weight)).collect(),
        }
    }

    pub fn odd_cycles(&self) -> &[Vec<usize>] {
        match &self.params {
            Params::OddCycles { cycles } => cycles,
            _ => &[],
        }
    }
}

/// Where a GM variable comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarOrigin {
    /// Copy `copy` of original edge `edge`.
    Edge { edge: usize, copy: usize },
    /// Auxiliary vertex variable `y_v`.
    Vertex { vertex: usize },
    /// Edge between cycle vertex `vertex` and the blossom vertex of cycle `cycle`.
    Blossom { cycle: usize, vertex: usize },
}

/// How GM values fold back to original edge values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recovery {
    None,
    /// `x_e = (sum of copies) / 2`.
    HalfIntegral { copies: usize },
    /// `flow_e = sum of copies`.
    CapacitySum,
    /// Cycle edges from blossom variables by the signed parity formula.
    BlossomUnfold,
}

#[derive(Debug, Clone)]
pub struct GmBundle {
    pub instance: ProblemInstance,
    pub graph: FactorGraph,
    pub var_map: Vec<VarOrigin>,
    pub recovery: Recovery,
    /// GM variables of every original edge (empty for pruned or unfolded edges).
    pub edge_vars: Vec<Vec<VarId>>,
}

impl GmBundle {
    pub fn kind(&self) -> ProblemKind {
        self.instance.kind
    }

    /// GM weights in the reporting sense, as exact rationals of the stored floats.
    pub fn exact_weights(&self) -> Vec<Rational> {
        self.graph.reporting_weights().into_iter().map(from_f64).collect()
    }

    /// Adds i.i.d. uniform noise from `(0, magnitude]` to every GM weight
    /// (reporting sense). A zero magnitude returns the bundle unchanged.
    pub fn with_noise(&self, seed: u64, magnitude: f64) -> Result<GmBundle, GraphError> {
        if magnitude == 0.0 {
            return Ok(self.clone());
        }
        let noise = noise_vector(self.graph.num_vars(), seed, magnitude);
        let stored: Vec<f64> = match self.graph.sense() {
            crate::factor_graph::Sense::Minimize => {
                self.graph.weights().iter().zip(&noise).map(|(w, z)| w + z).collect()
            }
            crate::factor_graph::Sense::Maximize => {
                self.graph.weights().iter().zip(&noise).map(|(w, z)| w - z).collect()
            }
        };
        let mut out = self.clone();
        out.graph = self.graph.with_weights(stored)?;
        Ok(out)
    }
}

/// `n` draws from `(0, magnitude]`, reproducible from `seed`.
pub fn noise_vector(n: usize, seed: u64, magnitude: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| magnitude * (1.0 - rng.gen::<f64>())).collect()
}

/// `1e-3` times the smallest positive gap between distinct edge weights;
/// falls back to the smallest positive weight, then to `1e-3`.
pub fn default_noise_magnitude(instance: &ProblemInstance) -> f64 {
    let mut w: Vec<f64> = instance.edges.iter().map(|e| e.weight).collect();
    w.sort_by(f64::total_cmp);
    w.dedup();
    let gap = w.windows(2).map(|p| p[1] - p[0]).fold(f64::INFINITY, f64::min);
    let smallest = w.iter().copied().filter(|&x| x > 0.0).fold(f64::INFINITY, f64::min);
    if gap.is_finite() {
        1e-3 * gap
    } else if smallest.is_finite() {
        1e-3 * smallest
    } else {
        1e-3
    }
}
