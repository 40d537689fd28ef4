//! Random instances with small integer weights, reproducible from a seed.
//!
//! Every generator first plants a structure that makes the instance feasible
//! (an s-t path, a perfect matching, a Hamiltonian cycle, ...) and then adds
//! random extra edges up to the requested count.

use super::{Edge, Params, ProblemInstance, ProblemKind};
use crate::factor_graph::{build_graph, Factor, FactorGraph, GraphError, Sense, VarId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenParams {
    pub nodes: usize,
    /// Target edge count; planted edges may exceed it, the complete graph caps it.
    pub edges: usize,
    pub max_weight: u32,
    pub max_capacity: u32,
    pub max_budget: u32,
    pub shape: Shape,
}

/// Graph skeleton. `Random` plants a feasible structure and adds random
/// edges; the fixed shapes ignore `nodes`/`edges` where they define their own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Shape {
    #[default]
    Random,
    /// `nodes`-cycle (directed `0 -> 1 -> ... -> 0` for directed kinds).
    Cycle,
    /// Source, `layers` layers of `width` nodes, sink; consecutive layers are
    /// completely connected. Node count is `layers * width + 2`.
    Layered { layers: usize, width: usize },
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            nodes: 6,
            edges: 9,
            max_weight: 9,
            max_capacity: 2,
            max_budget: 1,
            shape: Shape::Random,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("{0}")]
    BadSize(String),
}

struct Edges {
    directed: bool,
    seen: HashSet<(usize, usize)>,
    list: Vec<(usize, usize)>,
}

impl Edges {
    fn new(directed: bool) -> Self {
        Edges { directed, seen: HashSet::new(), list: Vec::new() }
    }

    fn key(&self, u: usize, v: usize) -> (usize, usize) {
        if self.directed {
            (u, v)
        } else {
            (u.min(v), u.max(v))
        }
    }

    fn add(&mut self, u: usize, v: usize) -> bool {
        if u == v || !self.seen.insert(self.key(u, v)) {
            return false;
        }
        self.list.push((u, v));
        true
    }

    fn fill(&mut self, n: usize, target: usize, rng: &mut ChaCha8Rng) {
        let mut free: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| (0..n).map(move |v| (u, v)))
            .filter(|&(u, v)| u != v && (self.directed || u < v))
            .filter(|&(u, v)| !self.seen.contains(&self.key(u, v)))
            .collect();
        free.shuffle(rng);
        for (u, v) in free {
            if self.list.len() >= target {
                break;
            }
            self.add(u, v);
        }
    }
}

fn weights(list: &[(usize, usize)], directed: bool, max_w: u32, rng: &mut ChaCha8Rng) -> Vec<Edge> {
    list.iter()
        .map(|&(u, v)| Edge::new(u, v, rng.gen_range(1..=max_w.max(1)) as f64, directed))
        .collect()
}

fn need(cond: bool, msg: &str) -> Result<(), GenError> {
    if cond {
        Ok(())
    } else {
        Err(GenError::BadSize(msg.to_string()))
    }
}

/// Random instance of `kind`.
pub fn generate(kind: ProblemKind, p: &GenParams, seed: u64) -> Result<ProblemInstance, GenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if p.shape != Shape::Random {
        return shaped(kind, p, &mut rng);
    }
    let n = p.nodes;
    let directed = kind.directed();
    let mut e = Edges::new(directed);
    let mut params = Params::None;
    match kind {
        ProblemKind::ShortestPath | ProblemKind::NetworkFlow => {
            need(n >= 2, "need at least two nodes")?;
            let t = n - 1;
            let mut middle: Vec<usize> = (1..n - 1).collect();
            middle.shuffle(&mut rng);
            let hops = rng.gen_range(0..=middle.len());
            let mut path = vec![0];
            path.extend(&middle[..hops]);
            path.push(t);
            for w in path.windows(2) {
                e.add(w[0], w[1]);
            }
            e.fill(n, p.edges, &mut rng);
            params = path_params(kind, n, e.list.len(), path.len() - 1, p, &mut rng);
        }
        ProblemKind::PerfectMatching => {
            need(n >= 2 && n.is_multiple_of(2), "perfect matching needs an even node count")?;
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            for pair in order.chunks(2) {
                e.add(pair[0], pair[1]);
            }
            e.fill(n, p.edges, &mut rng);
        }
        ProblemKind::PerfectMatchingOddCycles => {
            need(n >= 4 && n.is_multiple_of(2), "need an even node count of at least four")?;
            let max_len = if n > 5 { 5 } else { 3 };
            let len = if max_len == 5 && rng.gen_bool(0.5) { 5 } else { 3 };
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let cycle: Vec<usize> = order[..len].to_vec();
            for k in 0..len {
                e.add(cycle[k], cycle[(k + 1) % len]);
            }
            // planted matching: cycle[0] leaves the cycle, the rest pair along it
            let rest = &order[len..];
            e.add(cycle[0], rest[0]);
            for pair in rest[1..].chunks(2) {
                e.add(pair[0], pair[1]);
            }
            e.fill(n, p.edges, &mut rng);
            params = Params::OddCycles { cycles: vec![cycle] };
        }
        ProblemKind::VertexCoverDual => {
            need(n >= 2, "need at least two nodes")?;
            e.fill(n, p.edges.max(1), &mut rng);
            let budgets = (0..n).map(|_| rng.gen_range(0..=p.max_budget)).collect();
            params = Params::VertexCover { budgets };
        }
        ProblemKind::EdgeCover => {
            need(n >= 2, "need at least two nodes")?;
            let mut covered = vec![false; n];
            for v in 0..n {
                if !covered[v] {
                    let mut u = rng.gen_range(0..n - 1);
                    if u >= v {
                        u += 1;
                    }
                    e.add(v, u);
                    covered[v] = true;
                    covered[u] = true;
                }
            }
            e.fill(n, p.edges, &mut rng);
        }
        ProblemKind::Tsp2Factor => {
            need(n >= 3, "need at least three nodes")?;
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            for k in 0..n {
                e.add(order[k], order[(k + 1) % n]);
            }
            e.fill(n, p.edges, &mut rng);
        }
        ProblemKind::CyclePacking => {
            need(n >= 2, "need at least two nodes")?;
            e.fill(n, p.edges.max(1), &mut rng);
        }
    }
    Ok(finish(kind, n, &e.list, params, p, &mut rng))
}

fn finish(
    kind: ProblemKind,
    n: usize,
    list: &[(usize, usize)],
    params: Params,
    p: &GenParams,
    rng: &mut ChaCha8Rng,
) -> ProblemInstance {
    let edges = if kind == ProblemKind::VertexCoverDual {
        list.iter().map(|&(u, v)| Edge::new(u, v, 1.0, false)).collect()
    } else {
        weights(list, kind.directed(), p.max_weight, rng)
    };
    ProblemInstance { kind, num_nodes: n, edges, params }
}

/// Source `0`, sink `n - 1`; the first `planted` edges form an s-t path.
fn path_params(kind: ProblemKind, n: usize, m: usize, planted: usize, p: &GenParams, rng: &mut ChaCha8Rng) -> Params {
    if kind == ProblemKind::ShortestPath {
        return Params::ShortestPath { source: 0, sink: n - 1 };
    }
    let caps: Vec<u32> = (0..m).map(|_| rng.gen_range(1..=p.max_capacity.max(1))).collect();
    let bottleneck = caps[..planted].iter().copied().min().unwrap_or(1);
    let units = rng.gen_range(1..=bottleneck) as i64;
    let mut demands = vec![0i64; n];
    demands[0] = units;
    demands[n - 1] = -units;
    Params::Flow { demands, capacities: caps }
}

fn shaped(kind: ProblemKind, p: &GenParams, rng: &mut ChaCha8Rng) -> Result<ProblemInstance, GenError> {
    let mut e = Edges::new(kind.directed());
    let (n, planted) = match p.shape {
        Shape::Random => unreachable!("handled by generate"),
        Shape::Cycle => {
            let n = p.nodes;
            need(n >= 3, "a cycle needs at least three nodes")?;
            for k in 0..n {
                e.add(k, (k + 1) % n);
            }
            (n, n - 1)
        }
        Shape::Layered { layers, width } => {
            need(layers >= 1 && width >= 1, "need at least one layer of width one")?;
            let n = layers * width + 2;
            let layer = |l: usize| (0..width).map(move |k| 1 + l * width + k);
            // the first edges trace 0 -> 1 -> (1 + width) -> ... -> sink
            let mut spine = vec![0];
            spine.extend((0..layers).map(|l| 1 + l * width));
            spine.push(n - 1);
            for w in spine.windows(2) {
                e.add(w[0], w[1]);
            }
            for v in layer(0) {
                e.add(0, v);
            }
            for l in 1..layers {
                for u in layer(l - 1) {
                    for v in layer(l) {
                        e.add(u, v);
                    }
                }
            }
            for u in layer(layers - 1) {
                e.add(u, n - 1);
            }
            (n, spine.len() - 1)
        }
    };
    let params = match kind {
        ProblemKind::ShortestPath | ProblemKind::NetworkFlow => path_params(kind, n, e.list.len(), planted, p, rng),
        ProblemKind::VertexCoverDual => Params::VertexCover {
            budgets: (0..n).map(|_| rng.gen_range(0..=p.max_budget)).collect(),
        },
        ProblemKind::PerfectMatchingOddCycles => {
            return Err(GenError::BadSize("odd-cycle instances only come from the random shape".into()))
        }
        _ => Params::None,
    };
    Ok(finish(kind, n, &e.list, params, p, rng))
}

/// Random factor graph whose variable/factor incidence graph is a tree with
/// `num_vars` variables: each new factor hangs off one existing variable and
/// introduces one to three fresh ones. Weights are uniform in `[-5, 5]`.
///
/// Factors are degree constraints that never force every variable of their
/// scope, but the graph may still be globally infeasible.
pub fn random_tree_graph(num_vars: usize, seed: u64) -> Result<FactorGraph, GraphError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut factors = Vec::new();
    let mut count = 1;
    while count < num_vars {
        let fresh = rng.gen_range(1..=3.min(num_vars - count));
        let mut scope = vec![VarId(rng.gen_range(0..count))];
        scope.extend((count..count + fresh).map(VarId));
        count += fresh;
        let len = scope.len() as i64;
        let d = rng.gen_range(1..len);
        factors.push(match rng.gen_range(0..4) {
            0 => Factor::degree_eq(scope, d),
            1 => Factor::degree_le(scope, d),
            2 => Factor::degree_ge(scope, d),
            _ => {
                let signs: Vec<i8> = (0..scope.len()).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
                let demand = signs.iter().filter(|&&s| s > 0).count() as i64 - rng.gen_range(0..len);
                Factor::signed_conservation(scope, signs, demand.clamp(-len + 1, len - 1))
            }
        });
    }
    let weights = (0..num_vars).map(|_| rng.gen_range(-5.0..=5.0)).collect();
    build_graph(num_vars, weights, Sense::Minimize, factors)
}
