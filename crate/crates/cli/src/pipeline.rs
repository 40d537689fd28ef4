//! The work behind each subcommand, independent of argument parsing and
//! output formatting.

use crate::instance_file::{format_decimal, FileError, InstanceFile};
use crate::report::*;
use bplp_core::bp_engine::{run, BpError};
use bplp_core::checkers::{
    check_all, check_c3_generic, check_c3_witness, C1Verdict, C2Verdict, C3Verdict, ConditionReport, C3_SCOPE_CAP,
};
use bplp_core::factor_graph::GraphError;
use bplp_core::oracles::{brute_force_map, dijkstra, flow_oracle, matching_oracle, EnumCaps, MapResult, OracleError};
use bplp_core::problems::generate::{generate, GenError, GenParams};
use bplp_core::problems::{
    build_gm, default_noise_magnitude, recover, recover_primal_vertex_cover, ProblemError, RecoveredSolution,
};
use bplp_core::rational::{display, to_f64, Rational};
use bplp_core::{Assignment, BpConfig, BpResult, GmBundle, ProblemInstance, ProblemKind, Symbol};
use rayon::prelude::*;
use serde::Serialize;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    File(#[from] FileError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Bp(#[from] BpError),
    #[error(transparent)]
    Generate(#[from] GenError),
}

/// A parsed instance with its (noised) graphical model.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub instance: ProblemInstance,
    pub bundle: GmBundle,
    pub noise_seed: u64,
    pub noise_magnitude: f64,
}

/// Builds the model for `file`; `noise` overrides the file's magnitude.
pub fn prepare(file: &InstanceFile, noise: Option<f64>) -> Result<Prepared, PipelineError> {
    let instance = file.to_instance()?;
    let magnitude = match noise {
        Some(m) => m,
        None => file.noise_magnitude()?,
    };
    if !(magnitude >= 0.0 && magnitude.is_finite()) {
        return Err(FileError::NoiseMagnitude(format_decimal(magnitude)).into());
    }
    let bundle = build_gm(&instance)?.with_noise(file.noise.seed, magnitude)?;
    Ok(Prepared { instance, bundle, noise_seed: file.noise.seed, noise_magnitude: magnitude })
}

/// A generated instance file; the noise magnitude defaults to a thousandth
/// of the smallest gap between distinct weights.
pub fn gen(kind: ProblemKind, params: &GenParams, seed: u64, noise: Option<f64>) -> Result<InstanceFile, PipelineError> {
    let instance = generate(kind, params, seed)?;
    let magnitude = noise.unwrap_or_else(|| default_noise_magnitude(&instance));
    Ok(InstanceFile::from_instance(&instance, seed, magnitude))
}

fn summary(p: &Prepared) -> InstanceSummary {
    InstanceSummary {
        kind: p.instance.kind.name().to_string(),
        num_nodes: p.instance.num_nodes,
        num_edges: p.instance.edges.len(),
        gm_variables: p.bundle.graph.num_vars(),
        gm_factors: p.bundle.graph.num_factors(),
        noise_seed: p.noise_seed,
        noise_magnitude: format_decimal(p.noise_magnitude),
    }
}

fn report(command: &str, p: &Prepared) -> RunReport {
    RunReport {
        schema_version: REPORT_SCHEMA,
        command: command.to_string(),
        instance: summary(p),
        bp: None,
        solution: None,
        conditions: None,
        comparison: None,
        wall_time_ms: 0.0,
    }
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn bp_summary(r: &BpResult) -> BpSummary {
    BpSummary {
        decision: r.decision.to_string(),
        undecided: r.decision.undecided().iter().map(|v| v.0).collect(),
        iterations: r.iterations_run,
        converged: r.converged,
        final_residual: r.final_residual.is_finite().then_some(r.final_residual),
    }
}

fn solution_record(p: &Prepared, r: &BpResult) -> (SolutionRecord, Option<RecoveredSolution>) {
    match recover(&p.bundle, &r.decision) {
        Ok(sol) => {
            let vertex_cover = (p.instance.kind == ProblemKind::VertexCoverDual)
                .then(|| recover_primal_vertex_cover(&p.instance, &sol).ok())
                .flatten();
            let rec = Recovered {
                values: sol.values.iter().map(display).collect(),
                aux: sol.aux.iter().map(display).collect(),
                objective: Objective { exact: display(&sol.objective), approx: to_f64(&sol.objective) },
                integral: sol.is_integral(),
                vertex_cover,
            };
            (SolutionRecord { recovered: Some(rec), error: None }, Some(sol))
        }
        Err(e) => (SolutionRecord { recovered: None, error: Some(e.to_string()) }, None),
    }
}

pub fn solve(p: &Prepared, config: &BpConfig) -> Result<RunReport, PipelineError> {
    let start = Instant::now();
    let r = run(&p.bundle.graph, config)?;
    let mut out = report("solve", p);
    out.bp = Some(bp_summary(&r));
    out.solution = Some(solution_record(p, &r).0);
    out.wall_time_ms = elapsed_ms(start);
    Ok(out)
}

fn c1_verdict(v: &C1Verdict) -> Verdict {
    let point = |x: &[Rational]| x.iter().map(display).collect::<Vec<_>>().join(" ");
    match v {
        C1Verdict::Holds(_) => Verdict::holds(),
        C1Verdict::FailsNonUnique(a, b) => {
            Verdict::new(Status::Fails, format!("optimum not unique: [{}] and [{}]", point(a), point(b)))
        }
        C1Verdict::FailsFractional(x) => Verdict::new(Status::Fails, format!("fractional optimum [{}]", point(x))),
        C1Verdict::FailsInfeasible => Verdict::new(Status::Fails, "relaxation is infeasible"),
        C1Verdict::Unknown(why) => Verdict::new(Status::Unknown, why.clone()),
    }
}

fn c2_verdict(v: &C2Verdict) -> Verdict {
    match v {
        C2Verdict::Holds => Verdict::holds(),
        C2Verdict::Fails(vars) => {
            let ids: Vec<usize> = vars.iter().map(|v| v.0).collect();
            Verdict::new(Status::Fails, format!("variables in three or more factors: {ids:?}"))
        }
    }
}

fn c3_verdict(v: &C3Verdict) -> Verdict {
    match v {
        C3Verdict::Holds => Verdict::holds(),
        C3Verdict::Fails(c) => Verdict::new(
            Status::Fails,
            format!("factor {} local {:?} flip position {}", c.factor, c.local, c.flip),
        ),
        C3Verdict::Unknown(why) => Verdict::new(Status::Unknown, why.clone()),
    }
}

/// Condition verdicts plus the brute-force MAP (when within its cap), which
/// doubles as the C3 evaluation point if C1 cannot supply one.
pub fn conditions(p: &Prepared) -> (ConditionsRecord, ConditionReport, Result<MapResult, OracleError>) {
    let report = check_all(&p.bundle, EnumCaps::default());
    let map = brute_force_map(&p.bundle.graph);
    let (point, c3, witness) = match (report.x_star(), &map) {
        (Some(x), _) => (Some(C3Point::LpOptimum), report.c3.clone(), check_c3_witness(&p.bundle, &x, C3_SCOPE_CAP)),
        (None, Ok(MapResult::Unique { assignment, .. })) => (
            Some(C3Point::Map),
            check_c3_generic(&p.bundle.graph, assignment, C3_SCOPE_CAP),
            check_c3_witness(&p.bundle, assignment, C3_SCOPE_CAP),
        ),
        _ => (None, report.c3.clone(), report.c3.clone()),
    };
    let record = ConditionsRecord {
        c1: c1_verdict(&report.c1),
        c2: c2_verdict(&report.c2),
        c3: c3_verdict(&c3),
        c3_witness: c3_verdict(&witness),
        c3_point: point,
        all_hold: report.all_hold(),
    };
    (record, report, map)
}

pub fn check(p: &Prepared) -> RunReport {
    let start = Instant::now();
    let mut out = report("check", p);
    out.conditions = Some(conditions(p).0);
    out.wall_time_ms = elapsed_ms(start);
    out
}

fn differing(decode: &[Symbol], x: &Assignment) -> Vec<usize> {
    decode
        .iter()
        .zip(&x.0)
        .enumerate()
        .filter(|(_, (s, &v))| **s != if v == 1 { Symbol::One } else { Symbol::Zero })
        .map(|(i, _)| i)
        .collect()
}

fn classical(p: &Prepared, sol: Option<&RecoveredSolution>) -> Option<ClassicalRecord> {
    let (name, value) = match p.instance.kind {
        ProblemKind::ShortestPath => ("dijkstra", dijkstra(&p.instance).map(|r| r.cost)),
        ProblemKind::PerfectMatching | ProblemKind::PerfectMatchingOddCycles => ("matching", matching_oracle(&p.instance).map(|r| r.value)),
        ProblemKind::NetworkFlow => ("min-cost-flow", flow_oracle(&p.instance).map(|r| r.cost)),
        _ => return None,
    };
    let mut rec = ClassicalRecord { oracle: name.to_string(), value: None, agrees: None, note: None };
    match value {
        Ok(v) => {
            rec.agrees = sol.map(|s| s.objective == v);
            rec.value = Some(display(&v));
            if p.noise_magnitude > 0.0 {
                rec.note = Some("recovered objective uses unperturbed weights".into());
            }
        }
        Err(e) => rec.note = Some(e.to_string()),
    }
    Some(rec)
}

pub fn compare(p: &Prepared, config: &BpConfig) -> Result<RunReport, PipelineError> {
    let start = Instant::now();
    let r = run(&p.bundle.graph, config)?;
    let (solution, sol) = solution_record(p, &r);
    let (conds, _, map) = conditions(p);
    let decode = &r.decision.values;
    let mut cmp = ComparisonRecord {
        verdict: CompareVerdict::OracleUnavailable,
        oracle: "brute-force-map".into(),
        details: None,
        differing: Vec::new(),
        oracle_tied: Vec::new(),
        classical: classical(p, sol.as_ref()),
        contradicts_theorem: false,
    };
    match map {
        Err(e) => cmp.details = Some(e.to_string()),
        Ok(MapResult::Infeasible) => cmp.details = Some("the model has no feasible assignment".into()),
        Ok(MapResult::Unique { assignment, .. }) => {
            cmp.differing = differing(decode, &assignment);
            if cmp.differing.is_empty() {
                cmp.verdict = CompareVerdict::Match;
            } else {
                cmp.verdict = CompareVerdict::Mismatch;
                cmp.details = Some(format!("decode differs from the unique optimum at {} positions", cmp.differing.len()));
            }
        }
        Ok(MapResult::Tied { assignments, .. }) => {
            let first = &assignments[0];
            cmp.oracle_tied = (0..first.len()).filter(|&i| assignments.iter().any(|a| a.0[i] != first.0[i])).collect();
            let undecided = r.decision.undecided().len();
            if assignments.iter().any(|a| differing(decode, a).is_empty()) {
                cmp.verdict = CompareVerdict::Match;
                cmp.details = Some(format!("decode is one of {} tied optima", assignments.len()));
            } else {
                cmp.verdict = CompareVerdict::Mismatch;
                cmp.details = Some(format!(
                    "{} tied optima disagree at {} positions; decode leaves {undecided} undecided",
                    assignments.len(),
                    cmp.oracle_tied.len()
                ));
            }
        }
    }
    cmp.contradicts_theorem = cmp.verdict == CompareVerdict::Mismatch && conds.all_hold;
    let mut out = report("compare", p);
    out.bp = Some(bp_summary(&r));
    out.solution = Some(solution);
    out.conditions = Some(conds);
    out.comparison = Some(cmp);
    out.wall_time_ms = elapsed_ms(start);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRecord {
    pub index: usize,
    pub seed: u64,
    pub verdict: CompareVerdict,
    pub conditions_hold: bool,
    pub c1: Status,
    pub iterations: usize,
    pub converged: bool,
    pub contradicts_theorem: bool,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchSummary {
    pub kind: String,
    pub count: usize,
    pub conditions_hold: usize,
    pub holding_matches: usize,
    /// Share of condition-holding instances where BP matched the oracle.
    pub pass_rate: Option<f64>,
    pub matches: usize,
    pub oracle_unavailable: usize,
    pub c1_failures: usize,
    pub c1_unknown: usize,
    pub contradictions: usize,
    pub mean_iterations: Option<f64>,
    pub mean_wall_time_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOutcome {
    pub records: Vec<BenchRecord>,
    pub summary: BenchSummary,
}

/// `count` generated instances with seeds `seed, seed + 1, ...`, each noised
/// with its own seed and compared; instances run in parallel but results
/// keep their index order.
pub fn bench(
    kind: ProblemKind,
    count: usize,
    params: &GenParams,
    seed: u64,
    noise: Option<f64>,
    config: &BpConfig,
) -> Result<BenchOutcome, PipelineError> {
    let records = (0..count)
        .into_par_iter()
        .map(|index| {
            let s = seed.wrapping_add(index as u64);
            let file = gen(kind, params, s, noise)?;
            let p = prepare(&file, None)?;
            let rep = compare(&p, config)?;
            let cmp = rep.comparison.expect("compare fills the comparison");
            let conds = rep.conditions.expect("compare fills the conditions");
            let bp = rep.bp.expect("compare fills the bp summary");
            Ok(BenchRecord {
                index,
                seed: s,
                verdict: cmp.verdict,
                conditions_hold: conds.all_hold,
                c1: conds.c1.status,
                iterations: bp.iterations,
                converged: bp.converged,
                contradicts_theorem: cmp.contradicts_theorem,
                wall_time_ms: rep.wall_time_ms,
            })
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;
    let n = records.len();
    let holding: Vec<&BenchRecord> = records.iter().filter(|r| r.conditions_hold).collect();
    let holding_matches = holding.iter().filter(|r| r.verdict == CompareVerdict::Match).count();
    let mean = |f: &dyn Fn(&BenchRecord) -> f64| (n > 0).then(|| records.iter().map(f).sum::<f64>() / n as f64);
    let summary = BenchSummary {
        kind: kind.name().to_string(),
        count: n,
        conditions_hold: holding.len(),
        holding_matches,
        pass_rate: (!holding.is_empty()).then(|| holding_matches as f64 / holding.len() as f64),
        matches: records.iter().filter(|r| r.verdict == CompareVerdict::Match).count(),
        oracle_unavailable: records.iter().filter(|r| r.verdict == CompareVerdict::OracleUnavailable).count(),
        c1_failures: records.iter().filter(|r| r.c1 == Status::Fails).count(),
        c1_unknown: records.iter().filter(|r| r.c1 == Status::Unknown).count(),
        contradictions: records.iter().filter(|r| r.contradicts_theorem).count(),
        mean_iterations: mean(&|r| r.iterations as f64),
        mean_wall_time_ms: mean(&|r| r.wall_time_ms),
    };
    Ok(BenchOutcome { records, summary })
}

impl BenchSummary {
    pub fn render_human(&self) -> String {
        let pct = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{:.1}%", 100.0 * v));
        let num = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v:.1}"));
        format!(
            "bench {}: {} instances, {} with all conditions holding, pass rate {} on those\n\
             matches {} / {}, oracle unavailable {}, C1 failed {}, C1 unknown {}\n\
             mean iterations {}, mean wall time {} ms, theorem contradictions {}\n",
            self.kind,
            self.count,
            self.conditions_hold,
            pct(self.pass_rate),
            self.matches,
            self.count,
            self.oracle_unavailable,
            self.c1_failures,
            self.c1_unknown,
            num(self.mean_iterations),
            num(self.mean_wall_time_ms),
            self.contradictions
        )
    }
}
