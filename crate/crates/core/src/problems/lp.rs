use super::construct::cycle_edges;
use super::{Params, ProblemError, ProblemInstance, ProblemKind};
use crate::factor_graph::Sense;
use crate::oracles::{PolyRow, PolytopeDescription};
use crate::rational::int;

/// The LP over original edge values (and `y_v` for cycle packing) that the
/// graphical model of `instance` relaxes, with exact unperturbed weights.
pub fn original_lp(instance: &ProblemInstance) -> Result<PolytopeDescription, ProblemError> {
    instance.validate()?;
    let m = instance.edges.len();
    let n = instance.num_nodes;
    let incidence = |v: usize, signed: bool| -> Vec<i64> {
        instance
            .edges
            .iter()
            .map(|e| {
                if e.u == v {
                    1
                } else if e.v == v {
                    if signed {
                        -1
                    } else {
                        1
                    }
                } else {
                    0
                }
            })
            .collect()
    };
    let weights = instance.objective_weights();
    let mut rows = Vec::new();
    let (upper, objective, sense) = match (&instance.kind, &instance.params) {
        (ProblemKind::ShortestPath, Params::ShortestPath { source, sink }) => {
            for v in 0..n {
                let d = if v == *source {
                    1
                } else if v == *sink {
                    -1
                } else {
                    0
                };
                rows.push(PolyRow::eq(incidence(v, true), d));
            }
            (vec![1; m], weights, Sense::Minimize)
        }
        (ProblemKind::PerfectMatching, _) => {
            rows.extend((0..n).map(|v| PolyRow::eq(incidence(v, false), 1)));
            (vec![1; m], weights, Sense::Maximize)
        }
        (ProblemKind::PerfectMatchingOddCycles, Params::OddCycles { cycles }) => {
            rows.extend((0..n).map(|v| PolyRow::eq(incidence(v, false), 1)));
            for cycle in cycles {
                let mut c = vec![0; m];
                for k in cycle_edges(instance, cycle) {
                    c[k] = -1;
                }
                rows.push(PolyRow::ge(c, -((cycle.len() as i64 - 1) / 2)));
            }
            (vec![1; m], weights, Sense::Maximize)
        }
        (ProblemKind::VertexCoverDual, Params::VertexCover { budgets }) => {
            for v in 0..n {
                let c: Vec<i64> = incidence(v, false).into_iter().map(|x| -x).collect();
                rows.push(PolyRow::ge(c, -(budgets[v] as i64)));
            }
            let b_max = budgets.iter().copied().max().unwrap_or(0) as i64;
            (vec![b_max; m], weights, Sense::Maximize)
        }
        (ProblemKind::EdgeCover, _) => {
            rows.extend((0..n).map(|v| PolyRow::ge(incidence(v, false), 1)));
            (vec![1; m], weights, Sense::Minimize)
        }
        (ProblemKind::Tsp2Factor, _) => {
            rows.extend((0..n).map(|v| PolyRow::eq(incidence(v, false), 2)));
            (vec![1; m], weights, Sense::Minimize)
        }
        (ProblemKind::CyclePacking, _) => {
            for v in 0..n {
                let mut c = incidence(v, false);
                c.extend((0..n).map(|u| if u == v { -2 } else { 0 }));
                rows.push(PolyRow::eq(c, 0));
            }
            let mut objective = weights;
            objective.extend((0..n).map(|_| int(0)));
            (vec![1; m + n], objective, Sense::Maximize)
        }
        (ProblemKind::NetworkFlow, Params::Flow { demands, capacities }) => {
            for (v, &d) in demands.iter().enumerate() {
                rows.push(PolyRow::eq(incidence(v, true), d));
            }
            let upper = capacities.iter().map(|&c| c as i64).collect();
            (upper, weights, Sense::Minimize)
        }
        _ => return Err(ProblemError::WrongParams),
    };
    // vertices without incident edges give all-zero rows; keep only meaningful ones
    rows.retain(|r| r.coeffs.iter().any(|&c| c != 0) || !trivially_true(r));
    Ok(PolytopeDescription::with_box(rows, &upper, objective, sense))
}

fn trivially_true(r: &PolyRow) -> bool {
    match r.relation {
        crate::oracles::Relation::Eq => r.rhs == 0,
        crate::oracles::Relation::Ge => r.rhs <= 0,
    }
}
