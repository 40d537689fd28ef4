//! End-to-end acceptance run: one line per criterion, nonzero exit if any fails.

use bplp_cli::instance_file::InstanceFile;
use bplp_cli::pipeline::{compare, gen, prepare};
use bplp_core::bp_engine::run;
use bplp_core::checkers::check_all;
use bplp_core::factor_graph::{eval_global, Factor, GlobalEval, LinearRow};
use bplp_core::oracles::{
    brute_force_map, dijkstra, enumerate_vertices, flow_oracle, lemma1_constant, matching_oracle, EnumCaps, MapResult,
    PolyRow, PolytopeDescription,
};
use bplp_core::problems::generate::{generate, random_tree_graph, GenParams};
use bplp_core::problems::{build_gm, original_lp, recover, recover_assignment, GmBundle, Recovery};
use bplp_core::rational::{half, int, Rational};
use bplp_core::{Assignment, BpConfig, ExtReal, InitMode, ProblemKind, Sense, VarId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::process::{Command, ExitCode};
use std::time::Instant;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn caps() -> EnumCaps {
    EnumCaps::default()
}

fn long_run() -> BpConfig {
    BpConfig { max_iters: 100_000, ..BpConfig::default() }
}

/// Sizes that keep every relaxation inside the enumeration caps.
fn small(kind: ProblemKind) -> GenParams {
    let (nodes, edges) = match kind {
        ProblemKind::ShortestPath => (5, 7),
        ProblemKind::NetworkFlow => (5, 6),
        ProblemKind::Tsp2Factor => (5, 8),
        _ => (4, 5),
    };
    GenParams { nodes, edges, max_budget: 1, ..GenParams::default() }
}

/// Noise whose total stays below the unit gap between integer objectives.
fn noised(base: &GmBundle, seed: u64) -> GmBundle {
    base.with_noise(seed, 0.5 / base.graph.num_vars() as f64).unwrap()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn theorem_end_to_end() -> Outcome {
    let mut lines = Vec::new();
    for kind in ProblemKind::ALL {
        let (mut drawn, mut holding, mut seed) = (0, 0, 0u64);
        while drawn < 100 {
            assert!(seed < 1000, "{kind}: too few instances within caps");
            let inst = generate(kind, &small(kind), seed).unwrap();
            let b = noised(&build_gm(&inst).unwrap(), seed);
            seed += 1;
            let report = check_all(&b, caps());
            if matches!(report.c1, bplp_core::checkers::C1Verdict::Unknown(_)) {
                continue;
            }
            drawn += 1;
            let Some(x_star) = report.x_star().filter(|_| report.all_hold()) else { continue };
            holding += 1;
            let tag = || format!("{kind} seed {}", seed - 1);
            let r = run(&b.graph, &long_run()).unwrap();
            ensure(r.converged, || format!("{}: no convergence", tag()))?;
            ensure(r.decision.to_assignment().as_ref() == Some(&x_star), || format!("{}: decode is not x*", tag()))?;
            let map = brute_force_map(&b.graph).unwrap();
            ensure(matches!(&map, MapResult::Unique { assignment, .. } if *assignment == x_star), || {
                format!("{}: MAP is not x*", tag())
            })?;
            let sol = recover(&b, &r.decision).unwrap();
            let lp = enumerate_vertices(&original_lp(&inst).unwrap(), caps()).unwrap();
            ensure(lp.optimum.as_ref() == Some(&sol.objective), || format!("{}: objective is not the LP optimum", tag()))?;
            let classical = match kind {
                ProblemKind::ShortestPath => Some(dijkstra(&inst).unwrap().cost),
                ProblemKind::PerfectMatching | ProblemKind::PerfectMatchingOddCycles => {
                    Some(matching_oracle(&inst).unwrap().value)
                }
                ProblemKind::NetworkFlow => Some(flow_oracle(&inst).unwrap().cost),
                _ => None,
            };
            if let Some(v) = classical {
                ensure(v == sol.objective, || format!("{}: classical oracle disagrees", tag()))?;
            }
        }
        lines.push(format!("{}={holding}/{drawn}", kind.name()));
    }
    Ok(format!("BP matched x* on every holding instance ({})", lines.join(" ")))
}

fn tree_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut done, mut skipped) = (0, 0);
    while done < 200 {
        let n = rng.gen_range(2..=20);
        let seed = rng.gen();
        let g = random_tree_graph(n, seed).unwrap();
        let MapResult::Unique { assignment, .. } = brute_force_map(&g).unwrap() else {
            skipped += 1;
            continue;
        };
        let r = run(&g, &BpConfig::default()).unwrap();
        ensure(r.decision.undecided().is_empty(), || format!("n={n} seed {seed}: undecided entries"))?;
        ensure(r.decision.to_assignment() == Some(assignment), || format!("n={n} seed {seed}: decode is not the MAP"))?;
        done += 1;
    }
    Ok(format!("200 trees decoded exactly ({skipped} tied draws skipped)"))
}

fn unique_fixed_point() -> Outcome {
    let mut done = 0;
    for kind in ProblemKind::ALL {
        // at most seven per kind so all eight kinds contribute
        let mut here = 0;
        for seed in 0..40 {
            if done == 50 || here == 7 {
                break;
            }
            let b = noised(&build_gm(&generate(kind, &small(kind), seed).unwrap()).unwrap(), seed);
            if !check_all(&b, caps()).all_hold() {
                continue;
            }
            let base = run(&b.graph, &long_run()).unwrap().decision;
            for init_seed in 0..10 {
                let config = BpConfig { init: InitMode::RandomSeeded { seed: init_seed, range: 10.0 }, ..long_run() };
                let d = run(&b.graph, &config).unwrap().decision;
                ensure(d == base, || format!("{kind} seed {seed} init {init_seed}: decode differs"))?;
            }
            here += 1;
            done += 1;
        }
    }
    ensure(done == 50, || format!("only {done} holding instances"))?;
    Ok("50 instances decode identically from uniform and 10 random inits".into())
}

fn half_integrality() -> Outcome {
    let allowed = [int(0), half(), int(1)];
    let mut vertices = 0;
    for kind in [ProblemKind::PerfectMatching, ProblemKind::EdgeCover] {
        for seed in 0..25 {
            let inst = generate(kind, &GenParams { nodes: 6, edges: 9, ..GenParams::default() }, seed).unwrap();
            let poly = original_lp(&inst).unwrap();
            ensure(poly.dim <= 10 && poly.rows.len() <= 24, || format!("{kind} seed {seed}: over caps"))?;
            let vs = enumerate_vertices(&poly, caps()).map_err(|e| e.to_string())?;
            for v in &vs.vertices {
                ensure(v.iter().all(|x| allowed.contains(x)), || format!("{kind} seed {seed}: vertex {v:?}"))?;
            }
            vertices += vs.vertices.len();
        }
    }
    Ok(format!("50 polytopes, {vertices} vertices, all in {{0, 1/2, 1}}"))
}

fn duplication_equivalence() -> Outcome {
    let kinds = [
        (ProblemKind::PerfectMatching, GenParams { nodes: 6, edges: 8, ..GenParams::default() }),
        (ProblemKind::EdgeCover, GenParams { nodes: 5, edges: 7, ..GenParams::default() }),
        (ProblemKind::VertexCoverDual, GenParams { nodes: 5, edges: 5, max_budget: 2, ..GenParams::default() }),
        (ProblemKind::NetworkFlow, GenParams { nodes: 5, edges: 6, max_capacity: 3, ..GenParams::default() }),
    ];
    let mut done = 0;
    for (kind, p) in kinds {
        let (mut here, mut seed) = (0, 0);
        while here < 13 && done < 50 {
            let inst = generate(kind, &p, seed).unwrap();
            seed += 1;
            let b = build_gm(&inst).unwrap();
            let Ok(lp) = enumerate_vertices(&original_lp(&inst).unwrap(), caps()) else { continue };
            let Ok(map) = brute_force_map(&b.graph) else { continue };
            let fold = match b.recovery {
                Recovery::HalfIntegral { .. } => int(2),
                _ => int(1),
            };
            ensure(map.value().cloned() == lp.optimum.clone().map(|v| v * &fold), || format!("{kind} seed {}", seed - 1))?;
            for x in map.optima() {
                let rec = recover_assignment(&b, x).unwrap();
                ensure(Some(&rec.objective) == lp.optimum.as_ref(), || format!("{kind} seed {}: recovery", seed - 1))?;
            }
            here += 1;
            done += 1;
        }
    }
    ensure(done == 50, || format!("only {done} instances within caps"))?;
    Ok("50 duplicated optima equal the original LP optimum".into())
}

fn odd_cycle_transform() -> Outcome {
    let (mut feasible, mut holding) = (0, 0);
    for seed in 0..20 {
        let inst = generate(ProblemKind::PerfectMatchingOddCycles, &small(ProblemKind::PerfectMatchingOddCycles), seed).unwrap();
        ensure(inst.odd_cycles().len() == 1, || format!("seed {seed}: expected one odd cycle"))?;
        let base = build_gm(&inst).unwrap();
        let weights = base.exact_weights();
        let w_edges = inst.objective_weights();
        let n = base.graph.num_vars();
        for m in 0u32..1 << n {
            let y = Assignment((0..n).map(|k| (m >> k & 1) as u8).collect());
            if !matches!(eval_global(&base.graph, &y), Ok(GlobalEval::Feasible(_))) {
                continue;
            }
            feasible += 1;
            let rec = recover_assignment(&base, &y).unwrap();
            let gm: Rational = weights.iter().zip(&y.0).filter(|(_, &v)| v == 1).map(|(w, _)| w.clone()).sum();
            let edges: Rational = w_edges.iter().zip(&rec.values).map(|(w, x)| w * x).sum();
            ensure(gm == edges, || format!("seed {seed}: objective changed under unfolding"))?;
        }
        let b = noised(&base, seed);
        if check_all(&b, caps()).all_hold() {
            holding += 1;
            let r = run(&b.graph, &long_run()).unwrap();
            let sol = recover(&b, &r.decision).map_err(|e| format!("seed {seed}: {e}"))?;
            ensure(sol.objective == matching_oracle(&inst).unwrap().value, || format!("seed {seed}: BP vs matching"))?;
        }
    }
    Ok(format!("20 instances, {feasible} feasible points preserve the objective; BP matched on {holding} holding"))
}

fn random_factor(rng: &mut ChaCha8Rng) -> Factor {
    let n = rng.gen_range(2..=12);
    let scope: Vec<VarId> = (0..n).map(VarId).collect();
    match rng.gen_range(0..6) {
        0 => Factor::degree_eq(scope, rng.gen_range(0..=n as i64)),
        1 => Factor::degree_le(scope, rng.gen_range(0..=n as i64)),
        2 => Factor::degree_ge(scope, rng.gen_range(0..=n as i64)),
        3 => {
            let signs = (0..n).map(|_| if rng.gen() { 1 } else { -1 }).collect();
            Factor::signed_conservation(scope, signs, rng.gen_range(-(n as i64)..=n as i64))
        }
        4 => {
            let odd = [3, 5, 7, 9, 11];
            let k = *odd.choose(rng).unwrap();
            Factor::odd_cycle_blossom((0..k).map(VarId).collect())
        }
        _ => {
            let (n_eq, n_ineq) = (rng.gen_bool(0.3) as usize, rng.gen_range(0..=2));
            let mut row = || LinearRow::new((0..n).map(|_| rng.gen_range(-2..=2)).collect(), rng.gen_range(-2..=3));
            let eq = (0..n_eq).map(|_| row()).collect();
            let ineq = (0..n_ineq).map(|_| row()).collect();
            Factor::new(scope, eq, ineq)
        }
    }
}

fn specialized_vs_generic() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let close = |a: ExtReal, b: ExtReal| match (a, b) {
        (ExtReal::Finite(x), ExtReal::Finite(y)) => (x - y).abs() <= 1e-12 * (1.0 + x.abs().max(y.abs())),
        _ => a == b,
    };
    for k in 0..10_000 {
        let f = random_factor(&mut rng);
        let lambda: Vec<ExtReal> = (0..f.len())
            .map(|_| match rng.gen_range(0..10) {
                0 => ExtReal::PosInf,
                1 => ExtReal::NegInf,
                _ => ExtReal::Finite(rng.gen_range(-10.0..10.0)),
            })
            .collect();
        let pin = rng.gen_range(0..f.len());
        for c in 0..=1 {
            let (fast, slow) = (f.max_marginal(pin, c, &lambda), f.generic_max_marginal(pin, c, &lambda));
            ensure(close(fast, slow), || format!("factor {k} ({:?}) pin {pin} c {c}: {fast} vs {slow}", f.hint()))?;
        }
    }
    Ok("10000 factors agree within 1e-12".into())
}

fn random_polytope(rng: &mut ChaCha8Rng) -> PolytopeDescription {
    let dim = rng.gen_range(1..=4);
    let rows = (0..rng.gen_range(0..=4))
        .map(|_| {
            let c: Vec<i64> = (0..dim).map(|_| rng.gen_range(-2..=2)).collect();
            let r = rng.gen_range(-2..=2);
            if rng.gen_bool(0.3) {
                PolyRow::eq(c, r)
            } else {
                PolyRow::ge(c, r)
            }
        })
        .collect();
    let obj = (0..dim).map(|_| int(rng.gen_range(-3..=3))).collect();
    PolytopeDescription::with_box(rows, &vec![1; dim], obj, Sense::Maximize)
}

fn midpoint_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut checked = 0;
    for k in 0..50 {
        let p = random_polytope(&mut rng);
        let vs = enumerate_vertices(&p, caps()).map_err(|e| e.to_string())?;
        for v in &vs.vertices {
            ensure(p.contains(v), || format!("polytope {k}: vertex outside"))?;
            for (a, x) in vs.vertices.iter().enumerate() {
                for y in &vs.vertices[a + 1..] {
                    let mid: Vec<Rational> = x.iter().zip(y).map(|(s, t)| (s + t) * half()).collect();
                    ensure(&mid != v, || format!("polytope {k}: {v:?} is a midpoint"))?;
                }
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} vertices of 50 polytopes, none a midpoint"))
}

fn lemma_constant() -> Outcome {
    let k1 = lemma1_constant(&PolytopeDescription::unit_box(1), caps()).map_err(|e| e.to_string())?;
    let k2 = lemma1_constant(&PolytopeDescription::unit_box(2), caps()).map_err(|e| e.to_string())?;
    ensure(k1 == Some(int(1)) && k2 == Some(int(2)), || format!("box constants {k1:?} {k2:?}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for k in 0..20 {
        let p = random_polytope(&mut rng);
        let base = lemma1_constant(&p, caps()).map_err(|e| e.to_string())?;
        let mut perm: Vec<usize> = (0..p.dim).collect();
        perm.shuffle(&mut rng);
        let mut rows: Vec<PolyRow> = p
            .rows
            .iter()
            .map(|r| PolyRow { coeffs: perm.iter().map(|&j| r.coeffs[j]).collect(), ..r.clone() })
            .collect();
        rows.shuffle(&mut rng);
        let dup = rng.gen_range(0..rows.len());
        rows.push(rows[dup].clone());
        let objective = perm.iter().map(|&j| p.objective[j].clone()).collect();
        let q = PolytopeDescription { rows, objective, ..p };
        if caps().check(&q).is_err() {
            continue;
        }
        let moved = lemma1_constant(&q, caps()).map_err(|e| e.to_string())?;
        ensure(moved == base, || format!("polytope {k}: {base:?} became {moved:?}"))?;
    }
    Ok("K = 1 and 2 on the boxes; 20 polytopes invariant".into())
}

fn determinism_and_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for kind in ProblemKind::ALL {
        let mut done = 0;
        while done < 1000 {
            let nodes = rng.gen_range(2..=8);
            let params = GenParams { nodes, edges: nodes + rng.gen_range(0..=8), ..GenParams::default() };
            let Ok(file) = gen(kind, &params, rng.gen(), None) else { continue };
            let text = file.to_json();
            let back = InstanceFile::parse(&text).map_err(|e| format!("{kind}: {e}"))?;
            ensure(back == file && back.to_json() == text, || format!("{kind}: file changed on round trip"))?;
            ensure(back.to_instance().unwrap() == file.to_instance().unwrap(), || format!("{kind}: instance changed"))?;
            done += 1;
        }
    }
    let strip = |mut r: bplp_cli::report::RunReport| {
        r.wall_time_ms = 0.0;
        r.to_json()
    };
    for kind in ProblemKind::ALL {
        let p = prepare(&gen(kind, &small(kind), 1, None).unwrap(), None).unwrap();
        let a = strip(compare(&p, &BpConfig::default()).unwrap());
        let b = strip(compare(&p, &BpConfig::default()).unwrap());
        ensure(a == b, || format!("{kind}: reports differ"))?;
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("sp.json");
    std::fs::write(&path, gen(ProblemKind::ShortestPath, &small(ProblemKind::ShortestPath), 3, None).unwrap().to_json())
        .map_err(|e| e.to_string())?;
    let cli = || {
        let o = Command::new(env!("CARGO_BIN_EXE_bplp"))
            .args(["compare", path.to_str().unwrap(), "--format", "structured"])
            .env_remove("BPLP_CONFIG")
            .output()
            .unwrap();
        let text = String::from_utf8(o.stdout).unwrap();
        let cut = text.find("\"wall_time_ms\"").unwrap_or(text.len());
        text[..cut].to_string()
    };
    ensure(cli() == cli(), || "binary reports differ".into())?;
    Ok("8000 files round-trip; reports identical modulo wall time".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("theorem end-to-end", theorem_end_to_end),
        ("tree exactness", tree_exactness),
        ("unique fixed point", unique_fixed_point),
        ("half-integrality", half_integrality),
        ("duplication equivalence", duplication_equivalence),
        ("odd-cycle transform", odd_cycle_transform),
        ("specialized vs generic", specialized_vs_generic),
        ("midpoint soundness", midpoint_soundness),
        ("lemma constant", lemma_constant),
        ("determinism and round trip", determinism_and_round_trip),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("criterion {:>2} {name}: PASS ({secs:.1}s) {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({secs:.1}s) {msg}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
