//! Max-product belief propagation as a solver for LP relaxations of
//! combinatorial optimisation problems, together with exact checkers for the
//! conditions under which it is guaranteed to converge to the LP optimum.
//!
//! * [`factor_graph`]: binary graphical models with linear-constraint factors.
//! * [`bp_engine`]: synchronous log-domain max-product.
//! * [`problems`]: graphical models for shortest path, matching, covers, TSP,
//!   cycle packing and min-cost flow.
//! * [`checkers`]: verdicts for the uniqueness, degree and local-swap conditions.
//! * [`oracles`]: brute force, exact vertex enumeration and classical algorithms.

#![allow(clippy::needless_range_loop)]

pub mod bp_engine;
pub mod checkers;
pub mod ext_real;
pub mod factor_graph;
pub mod oracles;
pub mod problems;
pub mod rational;

pub use bp_engine::{BpConfig, BpResult, Decision, InitMode, Symbol};
pub use ext_real::ExtReal;
pub use factor_graph::{Assignment, Factor, FactorGraph, FactorId, Sense, VarId};
pub use problems::{GmBundle, ProblemInstance, ProblemKind};
