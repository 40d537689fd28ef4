use super::construct::cycle_edges;
use super::{GmBundle, Params, ProblemInstance, Recovery, VarOrigin};
use crate::bp_engine::Decision;
use crate::factor_graph::{cycle_vertex_edge_distance, eval_global, Assignment, GlobalEval, VarId, Violation};
use crate::rational::{dot, half, int, Rational};
use num_bigint::BigInt;
use num_traits::Zero;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoveredSolution {
    /// One value per original edge.
    pub values: Vec<Rational>,
    /// Auxiliary per-vertex values (cycle packing), empty otherwise.
    pub aux: Vec<Rational>,
    /// Objective of `values` under the original (unperturbed) weights.
    pub objective: Rational,
}

impl RecoveredSolution {
    pub fn is_integral(&self) -> bool {
        self.values.iter().chain(&self.aux).all(|v| v.is_integer())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecoverError {
    #[error("{} variables are undecided", .0.len())]
    UndecidedVariables(Vec<VarId>),
    #[error("decoded assignment violates {0:?}")]
    InfeasibleDecode(Violation),
    #[error("assignment has the wrong length")]
    LengthMismatch,
    #[error("tight vertices do not cover edge {0}")]
    NotACover(usize),
}

/// Folds a `?`-free, feasible decision back onto the original edges.
pub fn recover(bundle: &GmBundle, decision: &Decision) -> Result<RecoveredSolution, RecoverError> {
    let assignment = decision
        .to_assignment()
        .ok_or_else(|| RecoverError::UndecidedVariables(decision.undecided()))?;
    recover_assignment(bundle, &assignment)
}

pub fn recover_assignment(bundle: &GmBundle, x: &Assignment) -> Result<RecoveredSolution, RecoverError> {
    match eval_global(&bundle.graph, x) {
        Ok(GlobalEval::Feasible(_)) => {}
        Ok(GlobalEval::Infeasible(v)) => return Err(RecoverError::InfeasibleDecode(v)),
        Err(_) => return Err(RecoverError::LengthMismatch),
    }
    let inst = &bundle.instance;
    let bit = |v: &VarId| int(x.get(*v) as i64);
    let summed: Vec<Rational> = bundle
        .edge_vars
        .iter()
        .map(|vars| vars.iter().map(bit).fold(Rational::zero(), |a, b| a + b))
        .collect();
    let values = match bundle.recovery {
        Recovery::None | Recovery::CapacitySum => summed,
        Recovery::HalfIntegral { .. } => summed.into_iter().map(|s| s * half()).collect(),
        Recovery::BlossomUnfold => unfold(bundle, x, summed),
    };
    let aux = bundle
        .var_map
        .iter()
        .enumerate()
        .filter(|(_, o)| matches!(o, VarOrigin::Vertex { .. }))
        .map(|(i, _)| int(x.0[i] as i64))
        .collect();
    let objective = dot(&inst.objective_weights(), &values);
    Ok(RecoveredSolution { values, aux, objective })
}

/// Cycle edge values `x_e = 1/2 * sum_u (-1)^{d(u, e)} y_u`.
fn unfold(bundle: &GmBundle, x: &Assignment, mut values: Vec<Rational>) -> Vec<Rational> {
    let inst = &bundle.instance;
    for (c, cycle) in inst.odd_cycles().iter().enumerate() {
        let y: Vec<i64> = cycle
            .iter()
            .map(|&u| {
                let i = bundle
                    .var_map
                    .iter()
                    .position(|o| *o == VarOrigin::Blossom { cycle: c, vertex: u })
                    .expect("blossom variable");
                x.0[i] as i64
            })
            .collect();
        let len = cycle.len();
        for (k, e) in cycle_edges(inst, cycle).into_iter().enumerate() {
            let s: i64 = (0..len)
                .map(|u| if cycle_vertex_edge_distance(len, u, k).is_multiple_of(2) { y[u] } else { -y[u] })
                .sum();
            values[e] = Rational::new(BigInt::from(s), BigInt::from(2));
        }
    }
    values
}

/// Vertex cover from a dual edge solution by complementary slackness: start
/// from the vertices whose budget is tight, then drop tight vertices (largest
/// index first) while the rest still covers every edge.
pub fn recover_primal_vertex_cover(
    instance: &ProblemInstance,
    dual: &RecoveredSolution,
) -> Result<Vec<usize>, RecoverError> {
    let Params::VertexCover { budgets } = &instance.params else {
        return Err(RecoverError::LengthMismatch);
    };
    let n = instance.num_nodes;
    let mut load = vec![Rational::zero(); n];
    for (e, x) in instance.edges.iter().zip(&dual.values) {
        load[e.u] += x;
        load[e.v] += x;
    }
    let mut chosen: Vec<bool> = (0..n).map(|v| load[v] == int(budgets[v] as i64)).collect();
    let uncovered = |chosen: &[bool]| instance.edges.iter().position(|e| !chosen[e.u] && !chosen[e.v]);
    if let Some(e) = uncovered(&chosen) {
        return Err(RecoverError::NotACover(e));
    }
    for v in (0..n).rev() {
        if chosen[v] {
            chosen[v] = false;
            if uncovered(&chosen).is_some() {
                chosen[v] = true;
            }
        }
    }
    Ok((0..n).filter(|&v| chosen[v]).collect())
}
