//! Machine-readable run reports. Field order is fixed, so two runs of the
//! same command differ only in `wall_time_ms`.

use serde::Serialize;
use std::fmt::Write;

pub const REPORT_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: String,
    pub instance: InstanceSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bp: Option<BpSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solution: Option<SolutionRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conditions: Option<ConditionsRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<ComparisonRecord>,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceSummary {
    pub kind: String,
    pub num_nodes: usize,
    pub num_edges: usize,
    pub gm_variables: usize,
    pub gm_factors: usize,
    pub noise_seed: u64,
    pub noise_magnitude: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BpSummary {
    /// One of `0`, `1`, `?` per GM variable.
    pub decision: String,
    pub undecided: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
    /// `None` when the last residual was infinite.
    pub final_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionRecord {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recovered: Option<Recovered>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recovered {
    /// Exact per-edge values as `p/q` strings.
    pub values: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub aux: Vec<String>,
    pub objective: Objective,
    pub integral: bool,
    /// Primal vertex cover read off the dual solution (vertex-cover dual only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vertex_cover: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Objective {
    pub exact: String,
    pub approx: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Holds,
    Fails,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Verdict {
    pub fn holds() -> Self {
        Verdict { status: Status::Holds, detail: None }
    }

    pub fn new(status: Status, detail: impl Into<String>) -> Self {
        Verdict { status, detail: Some(detail.into()) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum C3Point {
    /// The unique integral LP optimum.
    LpOptimum,
    /// The unique brute-force MAP assignment, used when C1 is not established.
    Map,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionsRecord {
    pub c1: Verdict,
    pub c2: Verdict,
    /// Exhaustive search.
    pub c3: Verdict,
    /// Constructive partner choices, checked independently of `c3`.
    pub c3_witness: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c3_point: Option<C3Point>,
    pub all_hold: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompareVerdict {
    Match,
    Mismatch,
    OracleUnavailable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRecord {
    pub verdict: CompareVerdict,
    pub oracle: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<String>,
    /// GM positions where the decode differs from the unique optimum.
    pub differing: Vec<usize>,
    /// GM positions on which the tied optima disagree.
    pub oracle_tied: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classical: Option<ClassicalRecord>,
    /// Mismatch on an instance where all three conditions hold.
    pub contradicts_theorem: bool,
}

/// Informational cross-check of the recovered objective (unperturbed
/// weights) against a classical algorithm on the original instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalRecord {
    pub oracle: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agrees: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn status_word(s: Status) -> &'static str {
    match s {
        Status::Holds => "holds",
        Status::Fails => "FAILS",
        Status::Unknown => "unknown",
    }
}

fn verdict_line(out: &mut String, name: &str, v: &Verdict) {
    let _ = write!(out, "  {name:<10} {}", status_word(v.status));
    if let Some(d) = &v.detail {
        let _ = write!(out, " ({d})");
    }
    out.push('\n');
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("reports always serialize")
    }

    pub fn render_human(&self) -> String {
        let mut out = String::new();
        let i = &self.instance;
        let _ = writeln!(
            out,
            "{} {}: {} nodes, {} edges -> {} GM variables, {} factors (noise {} seed {})",
            self.command, i.kind, i.num_nodes, i.num_edges, i.gm_variables, i.gm_factors, i.noise_magnitude, i.noise_seed
        );
        if let Some(bp) = &self.bp {
            let residual = bp.final_residual.map_or("inf".to_string(), |r| format!("{r:.3e}"));
            let _ = writeln!(
                out,
                "bp: {} after {} iterations (residual {residual})",
                if bp.converged { "converged" } else { "not converged" },
                bp.iterations
            );
            let _ = writeln!(out, "decision: {}", bp.decision);
        }
        if let Some(s) = &self.solution {
            match (&s.recovered, &s.error) {
                (Some(r), _) => {
                    let _ = writeln!(out, "objective: {} (~{})", r.objective.exact, r.objective.approx);
                    let _ = writeln!(out, "edge values: [{}]", r.values.join(", "));
                    if !r.aux.is_empty() {
                        let _ = writeln!(out, "vertex values: [{}]", r.aux.join(", "));
                    }
                    if let Some(cover) = &r.vertex_cover {
                        let _ = writeln!(out, "vertex cover: {cover:?}");
                    }
                }
                (None, Some(e)) => {
                    let _ = writeln!(out, "no solution: {e}");
                }
                (None, None) => {}
            }
        }
        if let Some(c) = &self.conditions {
            out.push_str("conditions:\n");
            verdict_line(&mut out, "C1", &c.c1);
            verdict_line(&mut out, "C2", &c.c2);
            verdict_line(&mut out, "C3", &c.c3);
            verdict_line(&mut out, "C3 witness", &c.c3_witness);
        }
        if let Some(c) = &self.comparison {
            let word = match c.verdict {
                CompareVerdict::Match => "match",
                CompareVerdict::Mismatch => "MISMATCH",
                CompareVerdict::OracleUnavailable => "oracle unavailable",
            };
            let _ = write!(out, "comparison vs {}: {word}", c.oracle);
            if let Some(d) = &c.details {
                let _ = write!(out, " ({d})");
            }
            out.push('\n');
            if let Some(k) = &c.classical {
                let _ = write!(out, "  {}:", k.oracle);
                if let Some(v) = &k.value {
                    let _ = write!(out, " value {v}");
                }
                if let Some(a) = k.agrees {
                    let _ = write!(out, ", {}", if a { "agrees" } else { "differs" });
                }
                if let Some(n) = &k.note {
                    let _ = write!(out, " ({n})");
                }
                out.push('\n');
            }
            if c.contradicts_theorem {
                out.push_str("  all conditions hold, so this mismatch contradicts the convergence theorem\n");
            }
        }
        out
    }
}
