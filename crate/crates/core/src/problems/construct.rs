use super::{GmBundle, Params, ProblemError, ProblemInstance, ProblemKind, Recovery, VarOrigin};
use crate::factor_graph::{build_graph_with_pins, cycle_vertex_edge_distance, Factor, Sense, VarId};

#[derive(Default)]
struct Builder {
    weights: Vec<f64>,
    var_map: Vec<VarOrigin>,
    factors: Vec<Factor>,
    pins: Vec<(VarId, u8)>,
    edge_vars: Vec<Vec<VarId>>,
}

impl Builder {
    fn new(num_edges: usize) -> Self {
        Builder {
            edge_vars: vec![Vec::new(); num_edges],
            ..Builder::default()
        }
    }

    fn var(&mut self, origin: VarOrigin, weight: f64) -> VarId {
        let id = VarId(self.weights.len());
        self.weights.push(weight);
        self.var_map.push(origin);
        if let VarOrigin::Edge { edge, .. } = origin {
            self.edge_vars[edge].push(id);
        }
        id
    }

    /// Adds the vertex constraint `factor`. Scopes of size one become pins
    /// (or vanish when both values are allowed); empty scopes must already hold.
    fn vertex(&mut self, vertex: usize, factor: Factor) -> Result<(), ProblemError> {
        match factor.len() {
            0 => {
                if factor.eval(&[]).unwrap_or(false) {
                    Ok(())
                } else {
                    Err(ProblemError::InfeasibleVertex(vertex))
                }
            }
            1 => {
                let ok0 = factor.eval(&[0]).unwrap_or(false);
                let ok1 = factor.eval(&[1]).unwrap_or(false);
                let var = factor.scope()[0];
                match (ok0, ok1) {
                    (true, true) => {}
                    (true, false) => self.pins.push((var, 0)),
                    (false, true) => self.pins.push((var, 1)),
                    (false, false) => return Err(ProblemError::InfeasibleVertex(vertex)),
                }
                Ok(())
            }
            _ => {
                self.factors.push(factor);
                Ok(())
            }
        }
    }

    fn finish(self, instance: &ProblemInstance, sense: Sense, recovery: Recovery) -> Result<GmBundle, ProblemError> {
        let graph = build_graph_with_pins(self.weights.len(), self.weights, sense, self.factors, self.pins)?;
        Ok(GmBundle {
            instance: instance.clone(),
            graph,
            var_map: self.var_map,
            recovery,
            edge_vars: self.edge_vars,
        })
    }
}

/// Builds the graphical model of an instance after validating it.
pub fn build_gm(instance: &ProblemInstance) -> Result<GmBundle, ProblemError> {
    instance.validate()?;
    match instance.kind {
        ProblemKind::ShortestPath => shortest_path(instance),
        ProblemKind::PerfectMatching => perfect_matching(instance),
        ProblemKind::PerfectMatchingOddCycles => matching_odd_cycles(instance),
        ProblemKind::VertexCoverDual => vertex_cover_dual(instance),
        ProblemKind::EdgeCover => edge_cover(instance),
        ProblemKind::Tsp2Factor => tsp(instance),
        ProblemKind::CyclePacking => cycle_packing(instance),
        ProblemKind::NetworkFlow => network_flow(instance),
    }
}

/// Removes non-terminal vertices of degree below two until none is left;
/// returns which edges survive.
fn prune_dangling(instance: &ProblemInstance, keep: &[usize]) -> Vec<bool> {
    let n = instance.num_nodes;
    let mut alive_v = vec![true; n];
    let mut alive_e = vec![true; instance.edges.len()];
    loop {
        let mut deg = vec![0usize; n];
        for (k, e) in instance.edges.iter().enumerate() {
            if alive_e[k] {
                deg[e.u] += 1;
                deg[e.v] += 1;
            }
        }
        let drop: Vec<usize> = (0..n)
            .filter(|&v| alive_v[v] && !keep.contains(&v) && deg[v] < 2)
            .collect();
        if drop.is_empty() {
            return alive_e;
        }
        for v in drop {
            alive_v[v] = false;
            for (k, e) in instance.edges.iter().enumerate() {
                if e.touches(v) {
                    alive_e[k] = false;
                }
            }
        }
    }
}

fn shortest_path(instance: &ProblemInstance) -> Result<GmBundle, ProblemError> {
    let Params::ShortestPath { source, sink } = instance.params else {
        return Err(ProblemError::WrongParams);
    };
    let alive = prune_dangling(instance, &[source, sink]);
    for t in [source, sink] {
        let usable = instance.edges.iter().enumerate().any(|(k, e)| alive[k] && e.touches(t));
        if !usable {
            return Err(ProblemError::DegenerateVertex(t));
        }
    }
    let mut b = Builder::new(instance.edges.len());
    let vars: Vec<Option<VarId>> = instance
        .edges
        .iter()
        .enumerate()
        .map(|(k, e)| alive[k].then(|| b.var(VarOrigin::Edge { edge: k, copy: 0 }, e.weight)))
        .collect();
    for v in 0..instance.num_nodes {
        let mut scope = Vec::new();
        let mut signs = Vec::new();
        for (k, e) in instance.edges.iter().enumerate() {
            let Some(x) = vars[k] else { continue };
            if e.u == v {
                scope.push(x);
                signs.push(1);
            } else if e.v == v {
                scope.push(x);
                signs.push(-1);
            }
        }
        let alive_vertex = !scope.is_empty() || v == source || v == sink;
        if !alive_vertex {
            continue;
        }
        let demand = if v == source {
            1
        } else if v == sink {
            -1
        } else {
            0
        };
        b.vertex(v, Factor::signed_conservation(scope, signs, demand))?;
    }
    b.finish(instance, Sense::Minimize, Recovery::None)
}

/// `copies` variables per edge, each with the edge's weight (or `weight_of`).
fn duplicate(b: &mut Builder, instance: &ProblemInstance, copies: impl Fn(usize) -> usize, weight_of: impl Fn(usize) -> f64) {
    for k in 0..instance.edges.len() {
        for c in 0..copies(k) {
            b.var(VarOrigin::Edge { edge: k, copy: c }, weight_of(k));
        }
    }
}

fn incident_copies(b: &Builder, instance: &ProblemInstance, v: usize) -> Vec<VarId> {
    instance
        .edges
        .iter()
        .enumerate()
        .filter(|(_, e)| e.touches(v))
        .flat_map(|(k, _)| b.edge_vars[k].iter().copied())
        .collect()
}

fn perfect_matching(instance: &ProblemInstance) -> Result<GmBundle, ProblemError> {
    let mut b = Builder::new(instance.edges.len());
    duplicate(&mut b, instance, |_| 2, |k| instance.edges[k].weight);
    for v in 0..instance.num_nodes {
        let scope = incident_copies(&b, instance, v);
        if scope.is_empty() {
            return Err(ProblemError::IsolatedVertex(v));
        }
        b.vertex(v, Factor::degree_eq(scope, 2))?;
    }
    b.finish(instance, Sense::Maximize, Recovery::HalfIntegral { copies: 2 })
}

/// Cycle edge `k` of `cycle` joins `cycle[k]` and `cycle[k + 1]`.
pub(crate) fn cycle_edges(instance: &ProblemInstance, cycle: &[usize]) -> Vec<usize> {
    (0..cycle.len())
        .map(|k| {
            instance
                .find_edge(cycle[k], cycle[(k + 1) % cycle.len()])
                .expect("validated cycle edge")
        })
        .collect()
}

/// `1/2 * sum_k (-1)^{d(u, k)} w_k` over the cycle edges `k`.
pub(crate) fn blossom_weight(weights: &[f64], u: usize) -> f64 {
    let len = weights.len();
    0.5 * (0..len)
        .map(|k| {
            if cycle_vertex_edge_distance(len, u, k).is_multiple_of(2) {
                weights[k]
            } else {
                -weights[k]
            }
        })
        .sum::<f64>()
}

fn matching_odd_cycles(instance: &ProblemInstance) -> Result<GmBundle, ProblemError> {
    let cycles = instance.odd_cycles();
    let mut on_cycle = vec![false; instance.edges.len()];
    let mut blossom_of = vec![None; instance.num_nodes];
    let per_cycle: Vec<Vec<usize>> = cycles.iter().map(|c| cycle_edges(instance, c)).collect();
    for edges in &per_cycle {
        for &k in edges {
            on_cycle[k] = true;
        }
    }
    let mut b = Builder::new(instance.edges.len());
    for (k, e) in instance.edges.iter().enumerate() {
        if !on_cycle[k] {
            b.var(VarOrigin::Edge { edge: k, copy: 0 }, e.weight);
        }
    }
    let mut blossom_scopes = Vec::new();
    for (c, cycle) in cycles.iter().enumerate() {
        let w: Vec<f64> = per_cycle[c].iter().map(|&k| instance.edges[k].weight).collect();
        let scope: Vec<VarId> = cycle
            .iter()
            .enumerate()
            .map(|(pos, &u)| {
                let id = b.var(VarOrigin::Blossom { cycle: c, vertex: u }, blossom_weight(&w, pos));
                blossom_of[u] = Some(id);
                id
            })
            .collect();
        blossom_scopes.push(scope);
    }
    for v in 0..instance.num_nodes {
        let mut scope = incident_copies(&b, instance, v);
        scope.extend(blossom_of[v]);
        if scope.is_empty() {
            return Err(ProblemError::IsolatedVertex(v));
        }
        b.vertex(v, Factor::degree_eq(scope, 1))?;
    }
    for scope in blossom_scopes {
        b.factors.push(Factor::odd_cycle_blossom(scope));
    }
    b.finish(instance, Sense::Maximize, Recovery::BlossomUnfold)
}

fn vertex_cover_dual(instance: &ProblemInstance) -> Result<GmBundle, ProblemError> {
    let Params::VertexCover { budgets } = &instance.params else {
        return Err(ProblemError::WrongParams);
    };
    let b_max = budgets.iter().copied().max().unwrap_or(0) as usize;
    let copies = 2 * b_max;
    let mut b = Builder::new(instance.edges.len());
    duplicate(&mut b, instance, |_| copies, |_| 1.0);
    for v in 0..instance.num_nodes {
        let scope = incident_copies(&b, instance, v);
        b.vertex(v, Factor::degree_le(scope, 2 * budgets[v] as i64))?;
    }
    b.finish(instance, Sense::Maximize, Recovery::HalfIntegral { copies })
}

fn edge_cover(instance: &ProblemInstance) -> Result<GmBundle, ProblemError> {
    let mut b = Builder::new(instance.edges.len());
    duplicate(&mut b, instance, |_| 2, |k| instance.edges[k].weight);
    for v in 0..instance.num_nodes {
        let scope = incident_copies(&b, instance, v);
        if scope.is_empty() {
            return Err(ProblemError::IsolatedVertex(v));
        }
        b.vertex(v, Factor::degree_ge(scope, 2))?;
    }
    b.finish(instance, Sense::Minimize, Recovery::HalfIntegral { copies: 2 })
}

fn tsp(instance: &ProblemInstance) -> Result<GmBundle, ProblemError> {
    let degrees = instance.degrees();
    if let Some(v) = (0..instance.num_nodes).find(|&v| degrees[v] < 2) {
        return Err(ProblemError::VertexDegreeTooSmall(v));
    }
    let mut b = Builder::new(instance.edges.len());
    duplicate(&mut b, instance, |_| 1, |k| instance.edges[k].weight);
    for v in 0..instance.num_nodes {
        let scope = incident_copies(&b, instance, v);
        b.vertex(v, Factor::degree_eq(scope, 2))?;
    }
    b.finish(instance, Sense::Minimize, Recovery::None)
}

fn cycle_packing(instance: &ProblemInstance) -> Result<GmBundle, ProblemError> {
    let mut b = Builder::new(instance.edges.len());
    duplicate(&mut b, instance, |_| 1, |k| instance.edges[k].weight);
    let y: Vec<VarId> = (0..instance.num_nodes)
        .map(|v| b.var(VarOrigin::Vertex { vertex: v }, 0.0))
        .collect();
    for v in 0..instance.num_nodes {
        let mut scope = incident_copies(&b, instance, v);
        let mut coeffs = vec![1; scope.len()];
        scope.push(y[v]);
        coeffs.push(-2);
        let row = crate::factor_graph::LinearRow::new(coeffs, 0);
        b.vertex(v, Factor::new(scope, vec![row], Vec::new()))?;
    }
    b.finish(instance, Sense::Maximize, Recovery::None)
}

fn network_flow(instance: &ProblemInstance) -> Result<GmBundle, ProblemError> {
    let Params::Flow { demands, capacities } = &instance.params else {
        return Err(ProblemError::WrongParams);
    };
    let mut b = Builder::new(instance.edges.len());
    duplicate(&mut b, instance, |k| capacities[k] as usize, |k| instance.edges[k].weight);
    for (v, &demand) in demands.iter().enumerate() {
        let mut scope = Vec::new();
        let mut signs = Vec::new();
        for (k, e) in instance.edges.iter().enumerate() {
            let sign = if e.u == v {
                1
            } else if e.v == v {
                -1
            } else {
                continue;
            };
            for &x in &b.edge_vars[k] {
                scope.push(x);
                signs.push(sign);
            }
        }
        b.vertex(v, Factor::signed_conservation(scope, signs, demand))?;
    }
    b.finish(instance, Sense::Minimize, Recovery::CapacitySum)
}
