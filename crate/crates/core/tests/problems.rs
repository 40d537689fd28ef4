use bplp_core::checkers::{check_c2, C2Verdict};
use bplp_core::factor_graph::{eval_global, GlobalEval};
use bplp_core::oracles::{brute_force_map, enumerate_vertices, EnumCaps};
use bplp_core::problems::generate::{generate, GenParams};
use bplp_core::problems::{build_gm, original_lp, recover_assignment, Recovery};
use bplp_core::rational::{half, int, Rational};
use bplp_core::{Assignment, ProblemKind};
use num_traits::{One, Zero};

fn params(nodes: usize, edges: usize) -> GenParams {
    GenParams { nodes, edges, ..GenParams::default() }
}

#[test]
fn duplicated_optimum_folds_to_lp_optimum() {
    let cases = [
        (ProblemKind::PerfectMatching, params(6, 8)),
        (ProblemKind::EdgeCover, params(6, 8)),
        (ProblemKind::VertexCoverDual, GenParams { max_budget: 2, ..params(5, 5) }),
        (ProblemKind::NetworkFlow, GenParams { max_capacity: 3, ..params(5, 6) }),
    ];
    let mut checked = 0;
    for (kind, p) in cases {
        for seed in 0..40 {
            let inst = generate(kind, &p, seed).unwrap();
            let b = build_gm(&inst).unwrap();
            let Ok(lp) = enumerate_vertices(&original_lp(&inst).unwrap(), EnumCaps::default()) else { continue };
            if b.graph.num_vars() > 25 {
                continue;
            }
            let map = brute_force_map(&b.graph).unwrap();
            // half-integral recoveries halve the copy sum whatever the copy count
            let fold = match b.recovery {
                Recovery::HalfIntegral { .. } => int(2),
                _ => int(1),
            };
            assert_eq!(map.value().cloned(), lp.optimum.clone().map(|v| v * &fold), "{kind} seed {seed}");
            for x in map.optima() {
                assert_eq!(Some(recover_assignment(&b, x).unwrap().objective), lp.optimum, "{kind} seed {seed}");
            }
            checked += 1;
        }
    }
    assert!(checked >= 100, "only {checked} instances within caps");
}

#[test]
fn matching_and_edge_cover_vertices_are_half_integral() {
    let allowed = [Rational::zero(), half(), Rational::one()];
    for kind in [ProblemKind::PerfectMatching, ProblemKind::EdgeCover] {
        for seed in 0..25 {
            let inst = generate(kind, &params(6, 9), seed).unwrap();
            let vs = enumerate_vertices(&original_lp(&inst).unwrap(), EnumCaps::default()).unwrap();
            assert!(!vs.vertices.is_empty());
            for v in &vs.vertices {
                assert!(v.iter().all(|x| allowed.contains(x)), "{kind} seed {seed}: {v:?}");
            }
        }
    }
}

fn all_assignments(n: usize) -> impl Iterator<Item = Assignment> {
    (0u32..1 << n).map(move |m| Assignment((0..n).map(|k| (m >> k & 1) as u8).collect()))
}

#[test]
fn blossom_unfolding_preserves_objective() {
    let mut feasible = 0;
    for seed in 0..20 {
        let inst = generate(ProblemKind::PerfectMatchingOddCycles, &params(6, 8), seed).unwrap();
        let b = build_gm(&inst).unwrap();
        let weights = b.exact_weights();
        let w_edges = inst.objective_weights();
        for y in all_assignments(b.graph.num_vars()) {
            if !matches!(eval_global(&b.graph, &y), Ok(GlobalEval::Feasible(_))) {
                continue;
            }
            feasible += 1;
            let rec = recover_assignment(&b, &y).unwrap();
            let gm_value: Rational = weights.iter().zip(&y.0).filter(|(_, &v)| v == 1).map(|(w, _)| w.clone()).sum();
            let edge_value: Rational = w_edges.iter().zip(&rec.values).map(|(w, x)| w * x).sum();
            assert_eq!(gm_value, edge_value, "seed {seed}");
            // unfolded points satisfy the original LP, blossom row included
            assert!(original_lp(&inst).unwrap().contains(&rec.values), "seed {seed}");
        }
    }
    assert!(feasible > 20);
}

#[test]
fn every_bundle_has_variables_in_at_most_two_factors() {
    for kind in ProblemKind::ALL {
        let p = match kind {
            ProblemKind::PerfectMatchingOddCycles | ProblemKind::PerfectMatching => params(8, 14),
            _ => params(8, 16),
        };
        for seed in 0..20 {
            let b = build_gm(&generate(kind, &p, seed).unwrap()).unwrap();
            assert_eq!(check_c2(&b.graph), C2Verdict::Holds, "{kind} seed {seed}");
        }
    }
}

#[test]
fn recovered_optima_satisfy_the_original_lp() {
    for kind in ProblemKind::ALL {
        for seed in 0..15 {
            let n = if matches!(kind, ProblemKind::PerfectMatching | ProblemKind::PerfectMatchingOddCycles) { 6 } else { 5 };
            let inst = generate(kind, &params(n, 7), seed).unwrap();
            let b = build_gm(&inst).unwrap();
            let lp = original_lp(&inst).unwrap();
            for x in brute_force_map(&b.graph).unwrap().optima() {
                let rec = recover_assignment(&b, x).unwrap();
                let point: Vec<Rational> = rec.values.iter().chain(&rec.aux).cloned().collect();
                assert!(lp.contains(&point), "{kind} seed {seed}");
            }
        }
    }
}
