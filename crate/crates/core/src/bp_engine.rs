//! Synchronous max-product in log-ratio form.
//!
//! Each directed pair `(i, alpha)` carries `lambda = log m(1) - log m(0)`. One
//! step recomputes every factor-to-variable ratio from the current state and
//! then every variable-to-factor ratio
//! `lambda'_{i->a} = -w_i + sum_{b in F_i, b != a} [M_{b->i}(1) - M_{b->i}(0)]`.

use crate::ext_real::ExtReal;
use crate::factor_graph::{Assignment, FactorGraph, FactorId, VarId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::VecDeque;
use std::fmt;
use thiserror::Error;

/// Longest message period recognised by the drift test in [`run`].
pub const MAX_DRIFT_PERIOD: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct MessageState {
    /// Indexed by the graph's edge numbering.
    pub lambda: Vec<ExtReal>,
    pub iteration: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefVector {
    pub delta: Vec<ExtReal>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symbol {
    Zero,
    One,
    Undecided,
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Symbol::Zero => '0',
            Symbol::One => '1',
            Symbol::Undecided => '?',
        };
        write!(f, "{c}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Decision {
    pub values: Vec<Symbol>,
}

impl Decision {
    pub fn undecided(&self) -> Vec<VarId> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == Symbol::Undecided)
            .map(|(i, _)| VarId(i))
            .collect()
    }

    /// The 0/1 assignment, or `None` when some entry is `?`.
    pub fn to_assignment(&self) -> Option<Assignment> {
        self.values
            .iter()
            .map(|s| match s {
                Symbol::Zero => Some(0),
                Symbol::One => Some(1),
                Symbol::Undecided => None,
            })
            .collect::<Option<Vec<u8>>>()
            .map(Assignment)
    }

    pub fn from_assignment(a: &Assignment) -> Self {
        Decision {
            values: a
                .0
                .iter()
                .map(|&x| if x == 1 { Symbol::One } else { Symbol::Zero })
                .collect(),
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.values {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitMode {
    Uniform,
    RandomSeeded { seed: u64, range: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BpConfig {
    pub max_iters: usize,
    pub residual_tol: f64,
    /// Absolute tie tolerance; `None` means `1e-9 * max|w|`.
    pub tie_tol: Option<f64>,
    pub stable_window: usize,
    pub init: InitMode,
    pub record_trace: bool,
    /// Evaluate the update map with rayon. Results are identical to the serial path.
    pub parallel: bool,
}

impl Default for BpConfig {
    fn default() -> Self {
        BpConfig {
            max_iters: 1000,
            residual_tol: 1e-9,
            tie_tol: None,
            stable_window: 5,
            init: InitMode::Uniform,
            record_trace: false,
            parallel: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BpError {
    #[error("max_iters must be at least 1")]
    ZeroIterations,
    #[error("stable_window must be at least 1")]
    ZeroWindow,
    #[error("tolerances must be finite and non-negative")]
    BadTolerance,
    #[error("init range must be finite and non-negative")]
    BadInitRange,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BpResult {
    pub decision: Decision,
    pub beliefs: BeliefVector,
    pub iterations_run: usize,
    pub converged: bool,
    pub final_residual: f64,
    pub belief_trace: Option<Vec<BeliefVector>>,
}

pub fn init_messages(graph: &FactorGraph, init: InitMode) -> MessageState {
    let m = graph.num_edges();
    let lambda = match init {
        InitMode::Uniform | InitMode::RandomSeeded { range: 0.0, .. } => vec![ExtReal::ZERO; m],
        InitMode::RandomSeeded { seed, range } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..m)
                .map(|_| ExtReal::Finite(rng.gen_range(-range..=range)))
                .collect()
        }
    };
    MessageState { lambda, iteration: 0 }
}

/// Factor-to-variable log-ratios `M_{a->i}(1) - M_{a->i}(0)`, one per edge.
pub fn factor_messages(graph: &FactorGraph, state: &MessageState, parallel: bool) -> Vec<ExtReal> {
    assert_eq!(state.lambda.len(), graph.num_edges(), "state does not match the graph");
    let one = |k: usize| {
        let edges = graph.factor_edges(FactorId(k));
        graph.factors()[k].outgoing_log_ratios(&state.lambda[edges])
    };
    let per_factor: Vec<Vec<ExtReal>> = if parallel {
        (0..graph.num_factors()).into_par_iter().map(one).collect()
    } else {
        (0..graph.num_factors()).map(one).collect()
    };
    per_factor.into_iter().flatten().collect()
}

fn unary(graph: &FactorGraph, i: usize) -> ExtReal {
    let w = ExtReal::Finite(-graph.weights()[i]);
    match graph.pins()[i] {
        None => w,
        Some(1) => w + ExtReal::PosInf,
        Some(_) => w + ExtReal::NegInf,
    }
}

fn variable_update(graph: &FactorGraph, d: &[ExtReal], i: usize, out: &mut [(usize, ExtReal)]) {
    let edges = graph.var_edges(VarId(i));
    let base = unary(graph, i);
    for (j, &e) in edges.iter().enumerate() {
        let mut acc = base;
        for (l, &other) in edges.iter().enumerate() {
            if l != j {
                acc += d[other];
            }
        }
        out[j] = (e, acc);
    }
}

/// One synchronous update; returns the new state and the max message change.
pub fn bp_step(graph: &FactorGraph, state: &MessageState) -> (MessageState, f64) {
    step_with(graph, state, false)
}

/// Same as [`bp_step`] with the update map evaluated in parallel.
pub fn bp_step_parallel(graph: &FactorGraph, state: &MessageState) -> (MessageState, f64) {
    step_with(graph, state, true)
}

fn step_with(graph: &FactorGraph, state: &MessageState, parallel: bool) -> (MessageState, f64) {
    let d = factor_messages(graph, state, parallel);
    let mut lambda = vec![ExtReal::ZERO; graph.num_edges()];
    let per_var = |i: usize| {
        let mut buf = vec![(0, ExtReal::ZERO); graph.var_edges(VarId(i)).len()];
        variable_update(graph, &d, i, &mut buf);
        buf
    };
    let updates: Vec<Vec<(usize, ExtReal)>> = if parallel {
        (0..graph.num_vars()).into_par_iter().map(per_var).collect()
    } else {
        (0..graph.num_vars()).map(per_var).collect()
    };
    for (e, v) in updates.into_iter().flatten() {
        lambda[e] = v;
    }
    let residual = lambda
        .iter()
        .zip(&state.lambda)
        .fold(0.0f64, |r, (a, b)| r.max(a.distance(*b)));
    (
        MessageState {
            lambda,
            iteration: state.iteration + 1,
        },
        residual,
    )
}

fn beliefs_from(graph: &FactorGraph, d: &[ExtReal]) -> BeliefVector {
    let delta = (0..graph.num_vars())
        .map(|i| {
            graph
                .var_edges(VarId(i))
                .iter()
                .fold(unary(graph, i), |acc, &e| acc + d[e])
        })
        .collect();
    BeliefVector { delta }
}

/// `delta_i = -w_i + sum_{a in F_i} [M_{a->i}(1) - M_{a->i}(0)]`.
pub fn beliefs(graph: &FactorGraph, state: &MessageState) -> BeliefVector {
    beliefs_from(graph, &factor_messages(graph, state, false))
}

pub fn decode(beliefs: &BeliefVector, tie_tol: f64) -> Decision {
    let values = beliefs
        .delta
        .iter()
        .map(|&d| {
            if d > ExtReal::Finite(tie_tol) {
                Symbol::One
            } else if d < ExtReal::Finite(-tie_tol) {
                Symbol::Zero
            } else {
                Symbol::Undecided
            }
        })
        .collect();
    Decision { values }
}

pub fn default_tie_tol(graph: &FactorGraph) -> f64 {
    1e-9 * graph.max_abs_weight()
}

/// True when the last `p` increments repeat the `p` before them, i.e. every
/// message moves by the same amount over each period.
fn affine_periodic(history: &VecDeque<Vec<ExtReal>>, p: usize, tol: f64) -> bool {
    let n = history.len();
    if n < 2 * p + 1 {
        return false;
    }
    let (a, b, c) = (&history[n - 1], &history[n - 1 - p], &history[n - 1 - 2 * p]);
    a.iter().zip(b).zip(c).all(|((&x, &y), &z)| match (x, y, z) {
        (ExtReal::Finite(x), ExtReal::Finite(y), ExtReal::Finite(z)) => {
            ((x - y) - (y - z)).abs() <= tol * (1.0 + x.abs())
        }
        _ => x == y && y == z,
    })
}

/// Runs synchronous updates until the decode has been stable for
/// `stable_window` iterations and the messages have settled, or `max_iters`.
///
/// Messages count as settled when the residual is below `residual_tol`, or
/// when they drift affinely with a period of at most [`MAX_DRIFT_PERIOD`] for
/// the whole window (log-ratios on loopy graphs typically grow linearly
/// without changing the decode).
pub fn run(graph: &FactorGraph, config: &BpConfig) -> Result<BpResult, BpError> {
    if config.max_iters == 0 {
        return Err(BpError::ZeroIterations);
    }
    if config.stable_window == 0 {
        return Err(BpError::ZeroWindow);
    }
    let tie_tol = config.tie_tol.unwrap_or_else(|| default_tie_tol(graph));
    if !(config.residual_tol >= 0.0 && tie_tol >= 0.0 && tie_tol.is_finite()) {
        return Err(BpError::BadTolerance);
    }
    if let InitMode::RandomSeeded { range, .. } = config.init {
        if !(range >= 0.0 && range.is_finite()) {
            return Err(BpError::BadInitRange);
        }
    }
    let mut state = init_messages(graph, config.init);
    let mut history: VecDeque<Vec<ExtReal>> = VecDeque::with_capacity(2 * MAX_DRIFT_PERIOD + 2);
    history.push_back(state.lambda.clone());
    let mut trace = config.record_trace.then(Vec::new);
    let mut prev: Option<Decision> = None;
    let mut stable = 0usize;
    let mut settled = 0usize;
    let mut residual = f64::INFINITY;
    let mut last_beliefs = BeliefVector { delta: Vec::new() };
    let mut converged = false;

    while state.iteration < config.max_iters {
        let (next, r) = step_with(graph, &state, config.parallel);
        state = next;
        residual = r;
        if history.len() == 2 * MAX_DRIFT_PERIOD + 1 {
            history.pop_front();
        }
        history.push_back(state.lambda.clone());

        let b = beliefs_from(graph, &factor_messages(graph, &state, config.parallel));
        let decision = decode(&b, tie_tol);
        stable = if prev.as_ref() == Some(&decision) { stable + 1 } else { 1 };
        prev = Some(decision);
        if let Some(t) = trace.as_mut() {
            t.push(b.clone());
        }
        last_beliefs = b;

        let quiet = residual < config.residual_tol
            || (1..=MAX_DRIFT_PERIOD).any(|p| affine_periodic(&history, p, config.residual_tol));
        settled = if quiet { settled + 1 } else { 0 };
        if stable >= config.stable_window && settled >= config.stable_window {
            converged = true;
            break;
        }
    }

    Ok(BpResult {
        decision: prev.expect("at least one iteration"),
        beliefs: last_beliefs,
        iterations_run: state.iteration,
        converged,
        final_residual: residual,
        belief_trace: trace,
    })
}
