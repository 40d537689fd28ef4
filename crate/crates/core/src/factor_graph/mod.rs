//! Binary graphical models whose non-variable factors are indicators of
//! local integer linear systems.
//!
//! The joint weight of an assignment `x` is `exp(-w . x)` times the product of
//! factor indicators, so MAP inference is `minimize w . x` subject to every
//! factor. Maximisation problems are stored with negated weights.

mod factor;
mod marginal;

pub use factor::{
    cycle_vertex_edge_distance, cyclic_runs_even, Factor, Hint, LinearRow, EXHAUSTIVE_SCOPE_CAP,
    GENERIC_SCOPE_CAP,
};

use crate::ext_real::ExtReal;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FactorId(pub usize);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

impl fmt::Display for FactorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("expected {expected} weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("weight of {0} is not finite")]
    NonFiniteWeight(VarId),
    #[error("factor {0} has no feasible local assignment")]
    InfeasibleFactor(FactorId),
    #[error("factor {0} has a scope smaller than two")]
    ScopeTooSmall(FactorId),
    #[error("factor {factor} references {var}, which is out of range")]
    BadReference { factor: FactorId, var: VarId },
    #[error("factor {factor} lists {var} twice")]
    DuplicateInScope { factor: FactorId, var: VarId },
    #[error("a row of factor {0} does not match its scope length")]
    RowLength(FactorId),
    #[error("generic factor {factor} has scope {size}, above the enumeration cap")]
    GenericScopeTooLarge { factor: FactorId, size: usize },
    #[error("hint of factor {0} disagrees with its rows")]
    HintMismatch(FactorId),
    #[error("expected a local assignment of length {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("pin on {0} is out of range")]
    BadPin(VarId),
}

/// A 0/1 assignment to every variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment(pub Vec<u8>);

impl Assignment {
    pub fn zeros(n: usize) -> Self {
        Assignment(vec![0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, var: VarId) -> u8 {
        self.0[var.0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    Factor(FactorId),
    /// A variable fixed by a unary hard constraint has the other value.
    Pin(VarId),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GlobalEval {
    /// Objective `w . x` in the graph's reporting sense.
    Feasible(f64),
    Infeasible(Violation),
}

/// Immutable factor graph. Variables may additionally carry a unary hard
/// constraint (a pin), which is part of the variable factor rather than a
/// member of `F`.
#[derive(Debug, Clone)]
pub struct FactorGraph {
    weights: Vec<f64>,
    sense: Sense,
    factors: Vec<Factor>,
    pins: Vec<Option<u8>>,
    adjacency: Vec<Vec<FactorId>>,
    // directed (variable, factor) pairs, numbered factor by factor
    edge_offsets: Vec<usize>,
    var_edges: Vec<Vec<usize>>,
}

impl FactorGraph {
    pub fn num_vars(&self) -> usize {
        self.weights.len()
    }

    pub fn num_factors(&self) -> usize {
        self.factors.len()
    }

    /// Stored (minimisation) weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weights in the reporting sense.
    pub fn reporting_weights(&self) -> Vec<f64> {
        match self.sense {
            Sense::Minimize => self.weights.clone(),
            Sense::Maximize => self.weights.iter().map(|w| -w).collect(),
        }
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn factor(&self, id: FactorId) -> &Factor {
        &self.factors[id.0]
    }

    pub fn pins(&self) -> &[Option<u8>] {
        &self.pins
    }

    /// `F_i`, in increasing factor order.
    pub fn var_factors(&self, var: VarId) -> &[FactorId] {
        &self.adjacency[var.0]
    }

    pub fn num_edges(&self) -> usize {
        *self.edge_offsets.last().unwrap_or(&0)
    }

    /// Index of the directed pair (scope position `pos` of `factor`).
    pub fn edge_index(&self, factor: FactorId, pos: usize) -> usize {
        self.edge_offsets[factor.0] + pos
    }

    pub fn factor_edges(&self, factor: FactorId) -> std::ops::Range<usize> {
        self.edge_offsets[factor.0]..self.edge_offsets[factor.0 + 1]
    }

    /// Edge indices of variable `var`, aligned with `var_factors(var)`.
    pub fn var_edges(&self, var: VarId) -> &[usize] {
        &self.var_edges[var.0]
    }

    /// Largest absolute stored weight (0 for an empty graph).
    pub fn max_abs_weight(&self) -> f64 {
        self.weights.iter().fold(0.0, |m, w| m.max(w.abs()))
    }

    /// Replaces the stored weights, keeping the structure. Used by noise injection.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self, GraphError> {
        check_weights(self.num_vars(), &weights)?;
        let mut g = self.clone();
        g.weights = weights;
        Ok(g)
    }

    /// Checks every factor hint against its rows (scopes up to the exhaustive cap).
    pub fn verify_hints(&self) -> Result<(), GraphError> {
        for (k, f) in self.factors.iter().enumerate() {
            if f.hint_agrees() == Some(false) {
                return Err(GraphError::HintMismatch(FactorId(k)));
            }
        }
        Ok(())
    }

    pub fn local_assignment(&self, factor: FactorId, assignment: &Assignment) -> Vec<u8> {
        self.factors[factor.0]
            .scope
            .iter()
            .map(|v| assignment.0[v.0])
            .collect()
    }

    /// Objective in the reporting sense, ignoring feasibility.
    pub fn objective(&self, assignment: &Assignment) -> f64 {
        self.reporting_weights()
            .iter()
            .zip(&assignment.0)
            .filter(|(_, &x)| x == 1)
            .map(|(w, _)| w)
            .sum()
    }
}

fn check_weights(n: usize, weights: &[f64]) -> Result<(), GraphError> {
    if weights.len() != n {
        return Err(GraphError::WeightCount {
            expected: n,
            got: weights.len(),
        });
    }
    if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
        return Err(GraphError::NonFiniteWeight(VarId(i)));
    }
    Ok(())
}

/// Builds a graph without pins. With `Maximize`, stored weights are the negated input.
pub fn build_graph(
    num_vars: usize,
    weights: Vec<f64>,
    sense: Sense,
    factors: Vec<Factor>,
) -> Result<FactorGraph, GraphError> {
    build_graph_with_pins(num_vars, weights, sense, factors, Vec::new())
}

/// Builds a graph; `pins` lists unary hard constraints `x_var = value`.
pub fn build_graph_with_pins(
    num_vars: usize,
    weights: Vec<f64>,
    sense: Sense,
    mut factors: Vec<Factor>,
    pins: Vec<(VarId, u8)>,
) -> Result<FactorGraph, GraphError> {
    check_weights(num_vars, &weights)?;
    let weights: Vec<f64> = match sense {
        Sense::Minimize => weights,
        Sense::Maximize => weights.into_iter().map(|w| -w).collect(),
    };
    let mut adjacency = vec![Vec::new(); num_vars];
    let mut var_edges = vec![Vec::new(); num_vars];
    let mut edge_offsets = Vec::with_capacity(factors.len() + 1);
    let mut next_edge = 0;
    for (k, f) in factors.iter_mut().enumerate() {
        let id = FactorId(k);
        if f.scope.len() < 2 {
            return Err(GraphError::ScopeTooSmall(id));
        }
        let mut seen = std::collections::HashSet::new();
        for &v in &f.scope {
            if v.0 >= num_vars {
                return Err(GraphError::BadReference { factor: id, var: v });
            }
            if !seen.insert(v) {
                return Err(GraphError::DuplicateInScope { factor: id, var: v });
            }
        }
        if f.eq_rows.iter().chain(&f.ineq_rows).any(|r| r.coeffs.len() != f.scope.len()) {
            return Err(GraphError::RowLength(id));
        }
        if let Hint::SignedConservation { signs, .. } = &f.hint {
            if signs.len() != f.scope.len() {
                return Err(GraphError::RowLength(id));
            }
        }
        match f.locally_feasible() {
            Ok(true) => {}
            Ok(false) => return Err(GraphError::InfeasibleFactor(id)),
            Err(size) => return Err(GraphError::GenericScopeTooLarge { factor: id, size }),
        }
        if cfg!(debug_assertions) && f.hint_agrees() == Some(false) {
            return Err(GraphError::HintMismatch(id));
        }
        f.cache_feasible();
        edge_offsets.push(next_edge);
        for &v in &f.scope {
            adjacency[v.0].push(id);
            var_edges[v.0].push(next_edge);
            next_edge += 1;
        }
    }
    edge_offsets.push(next_edge);
    let mut pin_values = vec![None; num_vars];
    for (v, value) in pins {
        if v.0 >= num_vars || value > 1 {
            return Err(GraphError::BadPin(v));
        }
        pin_values[v.0] = Some(value);
    }
    Ok(FactorGraph {
        weights,
        sense,
        factors,
        pins: pin_values,
        adjacency,
        edge_offsets,
        var_edges,
    })
}

/// Indicator value of one factor on a local assignment.
pub fn eval_factor(factor: &Factor, local: &[u8]) -> Result<bool, GraphError> {
    factor.eval(local)
}

/// Checks every pin and factor; reports the reporting-sense objective when feasible.
pub fn eval_global(graph: &FactorGraph, assignment: &Assignment) -> Result<GlobalEval, GraphError> {
    if assignment.len() != graph.num_vars() {
        return Err(GraphError::LengthMismatch {
            expected: graph.num_vars(),
            got: assignment.len(),
        });
    }
    for (i, pin) in graph.pins.iter().enumerate() {
        if let Some(p) = pin {
            if assignment.0[i] != *p {
                return Ok(GlobalEval::Infeasible(Violation::Pin(VarId(i))));
            }
        }
    }
    for k in 0..graph.num_factors() {
        let id = FactorId(k);
        let local = graph.local_assignment(id, assignment);
        if !graph.factors[k].eval_rows(&local) {
            return Ok(GlobalEval::Infeasible(Violation::Factor(id)));
        }
    }
    Ok(GlobalEval::Feasible(graph.objective(assignment)))
}

/// Max over feasible local assignments with `z_pin = value` of the sum of the
/// incoming log-ratios that are switched on (excluding the pinned position).
pub fn factor_max_marginal(factor: &Factor, pin: usize, value: u8, incoming: &[ExtReal]) -> ExtReal {
    factor.max_marginal(pin, value, incoming)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_var() -> FactorGraph {
        build_graph(
            2,
            vec![1.0, 3.0],
            Sense::Minimize,
            vec![Factor::degree_eq(vec![VarId(0), VarId(1)], 1)],
        )
        .unwrap()
    }

    #[test]
    fn minimal_graph_adjacency() {
        let g = two_var();
        assert_eq!(g.var_factors(VarId(0)), &[FactorId(0)]);
        assert_eq!(g.var_factors(VarId(1)), &[FactorId(0)]);
        assert_eq!(g.num_edges(), 2);
    }

    #[test]
    fn unsatisfiable_factor_rejected() {
        let f = Factor::new(
            vec![VarId(0), VarId(1)],
            vec![LinearRow::new(vec![1, 1], 3)],
            vec![],
        );
        let err = build_graph(2, vec![0.0; 2], Sense::Minimize, vec![f]).unwrap_err();
        assert_eq!(err, GraphError::InfeasibleFactor(FactorId(0)));
    }

    #[test]
    fn scope_and_reference_errors() {
        let f = Factor::degree_eq(vec![VarId(0)], 1);
        assert_eq!(
            build_graph(1, vec![0.0], Sense::Minimize, vec![f]).unwrap_err(),
            GraphError::ScopeTooSmall(FactorId(0))
        );
        let f = Factor::degree_eq(vec![VarId(0), VarId(5)], 1);
        assert!(matches!(
            build_graph(2, vec![0.0; 2], Sense::Minimize, vec![f]).unwrap_err(),
            GraphError::BadReference { .. }
        ));
        assert!(matches!(
            build_graph(2, vec![0.0, f64::NAN], Sense::Minimize, vec![]).unwrap_err(),
            GraphError::NonFiniteWeight(VarId(1))
        ));
    }

    #[test]
    fn triangle_matching_builds_despite_global_infeasibility() {
        let e = |a, b| vec![VarId(a), VarId(b)];
        let factors = vec![
            Factor::degree_eq(e(0, 2), 1),
            Factor::degree_eq(e(0, 1), 1),
            Factor::degree_eq(e(1, 2), 1),
        ];
        let g = build_graph(3, vec![1.0; 3], Sense::Maximize, factors).unwrap();
        assert_eq!(g.weights(), &[-1.0, -1.0, -1.0]);
        let feasible = (0u32..8).any(|m| {
            let a = Assignment((0..3).map(|k| (m >> k & 1) as u8).collect());
            matches!(eval_global(&g, &a).unwrap(), GlobalEval::Feasible(_))
        });
        assert!(!feasible);
    }

    #[test]
    fn global_evaluation() {
        let g = two_var();
        assert_eq!(eval_global(&g, &Assignment(vec![1, 0])).unwrap(), GlobalEval::Feasible(1.0));
        assert_eq!(
            eval_global(&g, &Assignment(vec![1, 1])).unwrap(),
            GlobalEval::Infeasible(Violation::Factor(FactorId(0)))
        );
        assert!(eval_global(&g, &Assignment(vec![1])).is_err());
    }

    #[test]
    fn all_zero_on_upper_bounds_is_feasible() {
        let factors = vec![
            Factor::degree_le(vec![VarId(0), VarId(1)], 1),
            Factor::degree_le(vec![VarId(1), VarId(2)], 1),
        ];
        let g = build_graph(3, vec![2.0, -1.0, 4.0], Sense::Minimize, factors).unwrap();
        assert_eq!(eval_global(&g, &Assignment::zeros(3)).unwrap(), GlobalEval::Feasible(0.0));
    }

    #[test]
    fn pins_are_checked() {
        let g = build_graph_with_pins(
            2,
            vec![1.0, 1.0],
            Sense::Minimize,
            vec![Factor::degree_le(vec![VarId(0), VarId(1)], 2)],
            vec![(VarId(1), 1)],
        )
        .unwrap();
        assert_eq!(
            eval_global(&g, &Assignment(vec![1, 0])).unwrap(),
            GlobalEval::Infeasible(Violation::Pin(VarId(1)))
        );
    }
}
