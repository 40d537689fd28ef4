use super::OracleError;
use crate::problems::{Params, ProblemInstance, ProblemKind};
use crate::rational::{from_f64, int, Rational};
use num_traits::Zero;

/// Node cap for the enumerative matching oracle and the flow oracle.
pub const ORACLE_NODE_CAP: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathResult {
    pub nodes: Vec<usize>,
    pub edges: Vec<usize>,
    pub cost: Rational,
    /// Another shortest path exists.
    pub tie: bool,
}

/// Exact Dijkstra from the source; among shortest paths the lexicographically
/// smallest node sequence (then edge id) is returned.
pub fn dijkstra(instance: &ProblemInstance) -> Result<PathResult, OracleError> {
    let Params::ShortestPath { source, sink } = instance.params else {
        return Err(OracleError::WrongKind);
    };
    let n = instance.num_nodes;
    let w: Vec<Rational> = instance.edges.iter().map(|e| from_f64(e.weight)).collect();
    let mut dist: Vec<Option<Rational>> = vec![None; n];
    let mut done = vec![false; n];
    dist[source] = Some(Rational::zero());
    loop {
        let next = (0..n)
            .filter(|&v| !done[v] && dist[v].is_some())
            .min_by(|&a, &b| dist[a].cmp(&dist[b]).then(a.cmp(&b)));
        let Some(u) = next else { break };
        done[u] = true;
        let du = dist[u].clone().unwrap();
        for (k, e) in instance.edges.iter().enumerate() {
            if e.u == u {
                let cand = &du + &w[k];
                if dist[e.v].as_ref().is_none_or(|d| cand < *d) {
                    dist[e.v] = Some(cand);
                }
            }
        }
    }
    let cost = dist[sink].clone().ok_or(OracleError::Unreachable)?;
    // tight edges, ordered by head then id
    let mut tight: Vec<usize> = (0..instance.edges.len())
        .filter(|&k| {
            let e = &instance.edges[k];
            matches!((&dist[e.u], &dist[e.v]), (Some(a), Some(b)) if a + &w[k] == *b)
        })
        .collect();
    tight.sort_by_key(|&k| (instance.edges[k].v, k));
    let mut found: Vec<Vec<usize>> = Vec::new();
    let mut on_path = vec![false; n];
    on_path[source] = true;
    tight_paths(instance, &tight, source, sink, &mut on_path, &mut Vec::new(), &mut found);
    let edges = found.first().cloned().ok_or(OracleError::Unreachable)?;
    let mut nodes = vec![source];
    nodes.extend(edges.iter().map(|&k| instance.edges[k].v));
    Ok(PathResult { nodes, edges, cost, tie: found.len() > 1 })
}

fn tight_paths(
    inst: &ProblemInstance,
    tight: &[usize],
    at: usize,
    sink: usize,
    on_path: &mut [bool],
    stack: &mut Vec<usize>,
    found: &mut Vec<Vec<usize>>,
) {
    if found.len() >= 2 {
        return;
    }
    if at == sink {
        found.push(stack.clone());
        return;
    }
    for &k in tight {
        let e = &inst.edges[k];
        if e.u == at && !on_path[e.v] {
            on_path[e.v] = true;
            stack.push(k);
            tight_paths(inst, tight, e.v, sink, on_path, stack, found);
            stack.pop();
            on_path[e.v] = false;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchingResult {
    /// Every maximum-weight perfect matching, as sorted edge ids.
    pub matchings: Vec<Vec<usize>>,
    pub value: Rational,
}

/// Exhaustive maximum-weight perfect matching with exact ties.
pub fn matching_oracle(instance: &ProblemInstance) -> Result<MatchingResult, OracleError> {
    if !matches!(
        instance.kind,
        ProblemKind::PerfectMatching | ProblemKind::PerfectMatchingOddCycles
    ) {
        return Err(OracleError::WrongKind);
    }
    let n = instance.num_nodes;
    if n > ORACLE_NODE_CAP {
        return Err(OracleError::CapExceeded { what: "nodes", value: n, cap: ORACLE_NODE_CAP });
    }
    let w = instance.objective_weights();
    let mut best: Option<(Rational, Vec<Vec<usize>>)> = None;
    let mut matched = vec![false; n];
    let mut chosen = Vec::new();
    enumerate_matchings(instance, &w, &mut matched, &mut chosen, &mut best);
    let (value, mut matchings) = best.ok_or(OracleError::NoPerfectMatching)?;
    for m in &mut matchings {
        m.sort();
    }
    matchings.sort();
    Ok(MatchingResult { matchings, value })
}

fn enumerate_matchings(
    inst: &ProblemInstance,
    w: &[Rational],
    matched: &mut [bool],
    chosen: &mut Vec<usize>,
    best: &mut Option<(Rational, Vec<Vec<usize>>)>,
) {
    let Some(v) = matched.iter().position(|m| !m) else {
        let value = chosen.iter().fold(Rational::zero(), |a, &k| a + &w[k]);
        match best {
            Some((b, list)) if *b == value => list.push(chosen.clone()),
            Some((b, _)) if *b > value => {}
            _ => *best = Some((value, vec![chosen.clone()])),
        }
        return;
    };
    for (k, e) in inst.edges.iter().enumerate() {
        if !e.touches(v) {
            continue;
        }
        let u = if e.u == v { e.v } else { e.u };
        if matched[u] {
            continue;
        }
        matched[u] = true;
        matched[v] = true;
        chosen.push(k);
        enumerate_matchings(inst, w, matched, chosen, best);
        chosen.pop();
        matched[u] = false;
        matched[v] = false;
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowResult {
    pub flow: Vec<i64>,
    pub cost: Rational,
}

struct Arc {
    to: usize,
    cap: i64,
    cost: Rational,
    rev: usize,
}

/// Min-cost integral flow by successive shortest paths (Bellman-Ford on the
/// residual graph, exact costs).
pub fn flow_oracle(instance: &ProblemInstance) -> Result<FlowResult, OracleError> {
    let Params::Flow { demands, capacities } = &instance.params else {
        return Err(OracleError::WrongKind);
    };
    let n = instance.num_nodes;
    if n > ORACLE_NODE_CAP {
        return Err(OracleError::CapExceeded { what: "nodes", value: n, cap: ORACLE_NODE_CAP });
    }
    let (src, dst) = (n, n + 1);
    let mut g: Vec<Vec<Arc>> = (0..n + 2).map(|_| Vec::new()).collect();
    let add = |g: &mut Vec<Vec<Arc>>, u: usize, v: usize, cap: i64, cost: Rational| {
        let (ru, rv) = (g[v].len(), g[u].len());
        g[u].push(Arc { to: v, cap, cost: cost.clone(), rev: ru });
        g[v].push(Arc { to: u, cap: 0, cost: -cost, rev: rv });
        (u, rv)
    };
    let handles: Vec<(usize, usize)> = instance
        .edges
        .iter()
        .zip(capacities)
        .map(|(e, &c)| add(&mut g, e.u, e.v, c as i64, from_f64(e.weight)))
        .collect();
    let mut required = 0i64;
    for (v, &d) in demands.iter().enumerate() {
        if d > 0 {
            add(&mut g, src, v, d, int(0));
            required += d;
        } else if d < 0 {
            add(&mut g, v, dst, -d, int(0));
        }
    }
    let mut sent = 0i64;
    while sent < required {
        let mut dist: Vec<Option<Rational>> = vec![None; n + 2];
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; n + 2];
        dist[src] = Some(Rational::zero());
        for _ in 0..n + 2 {
            let mut changed = false;
            for u in 0..n + 2 {
                let Some(du) = dist[u].clone() else { continue };
                for (a, arc) in g[u].iter().enumerate() {
                    if arc.cap == 0 {
                        continue;
                    }
                    let cand = &du + &arc.cost;
                    if dist[arc.to].as_ref().is_none_or(|d| cand < *d) {
                        dist[arc.to] = Some(cand);
                        prev[arc.to] = Some((u, a));
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if dist[dst].is_none() {
            return Err(OracleError::InfeasibleDemand);
        }
        let mut push = required - sent;
        let mut v = dst;
        while let Some((u, a)) = prev[v] {
            push = push.min(g[u][a].cap);
            v = u;
        }
        let mut v = dst;
        while let Some((u, a)) = prev[v] {
            g[u][a].cap -= push;
            let (to, rev) = (g[u][a].to, g[u][a].rev);
            g[to][rev].cap += push;
            v = u;
        }
        sent += push;
    }
    let flow: Vec<i64> = handles
        .iter()
        .zip(capacities)
        .map(|(&(u, a), &c)| c as i64 - g[u][a].cap)
        .collect();
    let cost = flow
        .iter()
        .zip(&instance.edges)
        .fold(Rational::zero(), |acc, (&f, e)| acc + from_f64(e.weight) * int(f));
    Ok(FlowResult { flow, cost })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::Edge;

    fn sp(n: usize, edges: &[(usize, usize, f64)], s: usize, t: usize) -> ProblemInstance {
        ProblemInstance {
            kind: ProblemKind::ShortestPath,
            num_nodes: n,
            edges: edges.iter().map(|&(u, v, w)| Edge::new(u, v, w, true)).collect(),
            params: Params::ShortestPath { source: s, sink: t },
        }
    }

    fn pm(n: usize, edges: &[(usize, usize, f64)]) -> ProblemInstance {
        ProblemInstance {
            kind: ProblemKind::PerfectMatching,
            num_nodes: n,
            edges: edges.iter().map(|&(u, v, w)| Edge::new(u, v, w, false)).collect(),
            params: Params::None,
        }
    }

    fn flow(n: usize, edges: &[(usize, usize, f64)], caps: Vec<u32>, demands: Vec<i64>) -> ProblemInstance {
        ProblemInstance {
            kind: ProblemKind::NetworkFlow,
            num_nodes: n,
            edges: edges.iter().map(|&(u, v, w)| Edge::new(u, v, w, true)).collect(),
            params: Params::Flow { demands, capacities: caps },
        }
    }

    #[test]
    fn three_node_shortest_path() {
        let r = dijkstra(&sp(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 3.0)], 0, 2)).unwrap();
        assert_eq!(r.nodes, vec![0, 1, 2]);
        assert_eq!(r.cost, int(2));
        assert!(!r.tie);
    }

    #[test]
    fn single_edge_and_unreachable() {
        let r = dijkstra(&sp(2, &[(0, 1, 5.0)], 0, 1)).unwrap();
        assert_eq!(r.edges, vec![0]);
        assert_eq!(dijkstra(&sp(3, &[(0, 1, 5.0)], 0, 2)).unwrap_err(), OracleError::Unreachable);
    }

    #[test]
    fn equal_paths_tie() {
        let r = dijkstra(&sp(4, &[(0, 1, 1.0), (1, 3, 1.0), (0, 2, 1.0), (2, 3, 1.0)], 0, 3)).unwrap();
        assert!(r.tie);
        assert_eq!(r.nodes, vec![0, 1, 3]);
    }

    #[test]
    fn four_cycle_matching() {
        let r = matching_oracle(&pm(4, &[(0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.0), (3, 0, 2.0)])).unwrap();
        assert_eq!(r.matchings, vec![vec![1, 3]]);
        assert_eq!(r.value, int(4));
    }

    #[test]
    fn odd_graph_has_no_perfect_matching() {
        let r = matching_oracle(&pm(3, &[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]));
        assert_eq!(r.unwrap_err(), OracleError::NoPerfectMatching);
    }

    #[test]
    fn k4_uniform_three_way_tie() {
        let e: Vec<(usize, usize, f64)> = vec![(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0), (1, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0)];
        assert_eq!(matching_oracle(&pm(4, &e)).unwrap().matchings.len(), 3);
    }

    #[test]
    fn diamond_flow_takes_cheap_path() {
        let inst = flow(4, &[(0, 1, 1.0), (1, 3, 0.5), (0, 2, 3.0), (2, 3, 0.0)], vec![1; 4], vec![1, 0, 0, -1]);
        let r = flow_oracle(&inst).unwrap();
        assert_eq!(r.flow, vec![1, 1, 0, 0]);
        assert_eq!(r.cost, Rational::new(3.into(), 2.into()));
    }

    #[test]
    fn zero_and_excess_demand() {
        let r = flow_oracle(&flow(2, &[(0, 1, 1.0)], vec![1], vec![0, 0])).unwrap();
        assert_eq!((r.flow, r.cost), (vec![0], int(0)));
        let r = flow_oracle(&flow(2, &[(0, 1, 1.0)], vec![1], vec![2, -2]));
        assert_eq!(r.unwrap_err(), OracleError::InfeasibleDemand);
    }
}
