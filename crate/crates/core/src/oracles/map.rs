use super::OracleError;
use crate::factor_graph::{Assignment, FactorGraph};
use crate::rational::{from_f64, Rational};
use num_traits::Zero;

/// Largest number of variables `brute_force_map` enumerates.
pub const MAP_VAR_CAP: usize = 25;

#[derive(Debug, Clone, PartialEq)]
pub enum MapResult {
    /// Optimal assignment and its objective in the reporting sense.
    Unique { assignment: Assignment, value: Rational },
    Tied { assignments: Vec<Assignment>, value: Rational },
    Infeasible,
}

impl MapResult {
    pub fn value(&self) -> Option<&Rational> {
        match self {
            MapResult::Unique { value, .. } | MapResult::Tied { value, .. } => Some(value),
            MapResult::Infeasible => None,
        }
    }

    pub fn optima(&self) -> Vec<&Assignment> {
        match self {
            MapResult::Unique { assignment, .. } => vec![assignment],
            MapResult::Tied { assignments, .. } => assignments.iter().collect(),
            MapResult::Infeasible => Vec::new(),
        }
    }
}

struct Search<'a> {
    graph: &'a FactorGraph,
    /// factors whose last scope variable (in index order) is `i`
    closing: Vec<Vec<usize>>,
    x: Vec<u8>,
    best: f64,
    slack: f64,
    candidates: Vec<(f64, Vec<u8>)>,
}

impl Search<'_> {
    fn factor_ok(&self, k: usize) -> bool {
        let f = &self.graph.factors()[k];
        let local: Vec<u8> = f.scope().iter().map(|v| self.x[v.0]).collect();
        f.eval(&local).unwrap_or(false)
    }

    fn go(&mut self, i: usize, partial: f64) {
        let n = self.graph.num_vars();
        if i == n {
            if partial <= self.best + self.slack {
                self.best = self.best.min(partial);
                self.candidates.push((partial, self.x.clone()));
            }
            return;
        }
        for value in [0u8, 1] {
            if let Some(p) = self.graph.pins()[i] {
                if p != value {
                    continue;
                }
            }
            self.x[i] = value;
            if self.closing[i].clone().into_iter().all(|k| self.factor_ok(k)) {
                let w = if value == 1 { self.graph.weights()[i] } else { 0.0 };
                self.go(i + 1, partial + w);
            }
        }
        self.x[i] = 0;
    }
}

/// Exhaustive MAP over `{0,1}^n`, with ties decided in exact arithmetic.
pub fn brute_force_map(graph: &FactorGraph) -> Result<MapResult, OracleError> {
    let n = graph.num_vars();
    if n > MAP_VAR_CAP {
        return Err(OracleError::CapExceeded {
            what: "variables",
            value: n,
            cap: MAP_VAR_CAP,
        });
    }
    let mut closing = vec![Vec::new(); n];
    for (k, f) in graph.factors().iter().enumerate() {
        let last = f.scope().iter().map(|v| v.0).max().expect("non-empty scope");
        closing[last].push(k);
    }
    let scale: f64 = graph.weights().iter().map(|w| w.abs()).sum();
    let mut search = Search {
        graph,
        closing,
        x: vec![0; n],
        best: f64::INFINITY,
        // float sums are only used to discard clearly worse assignments
        slack: 1e-7 * (1.0 + scale),
        candidates: Vec::new(),
    };
    search.go(0, 0.0);
    let best = search.best;
    let slack = search.slack;
    let exact_w: Vec<Rational> = graph.weights().iter().map(|&w| from_f64(w)).collect();
    let mut scored: Vec<(Rational, Vec<u8>)> = search
        .candidates
        .into_iter()
        .filter(|(v, _)| *v <= best + slack)
        .map(|(_, x)| {
            let v = x
                .iter()
                .zip(&exact_w)
                .filter(|(&b, _)| b == 1)
                .fold(Rational::zero(), |acc, (_, w)| acc + w);
            (v, x)
        })
        .collect();
    let Some(min) = scored.iter().map(|(v, _)| v.clone()).min() else {
        return Ok(MapResult::Infeasible);
    };
    scored.retain(|(v, _)| *v == min);
    scored.sort_by(|a, b| a.1.cmp(&b.1));
    let value = match graph.sense() {
        crate::factor_graph::Sense::Minimize => min,
        crate::factor_graph::Sense::Maximize => -min,
    };
    let mut assignments: Vec<Assignment> = scored.into_iter().map(|(_, x)| Assignment(x)).collect();
    if assignments.len() == 1 {
        Ok(MapResult::Unique {
            assignment: assignments.pop().unwrap(),
            value,
        })
    } else {
        Ok(MapResult::Tied { assignments, value })
    }
}
