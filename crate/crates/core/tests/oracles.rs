use bplp_core::oracles::{
    brute_force_map, dijkstra, enumerate_vertices, flow_oracle, lemma1_constant, matching_oracle, EnumCaps, PolyRow,
    PolytopeDescription,
};
use bplp_core::problems::generate::{generate, GenParams};
use bplp_core::problems::{build_gm, original_lp, Edge, Params, ProblemInstance};
use bplp_core::rational::{half, int, Rational};
use bplp_core::{ProblemKind, Sense};
use num_traits::{One, Zero};
use proptest::prelude::*;

fn caps() -> EnumCaps {
    EnumCaps::default()
}

fn lp_optimum(inst: &ProblemInstance) -> Option<Rational> {
    enumerate_vertices(&original_lp(inst).unwrap(), caps()).unwrap().optimum
}

fn random_polytope() -> impl Strategy<Value = PolytopeDescription> {
    (1usize..=4).prop_flat_map(|dim| {
        let row = (prop::collection::vec(-2i64..=2, dim), -2i64..=2, prop::bool::ANY);
        (
            Just(dim),
            prop::collection::vec(row, 0..=4),
            prop::collection::vec(-3i64..=3, dim),
        )
            .prop_map(|(dim, rows, obj)| {
                let rows = rows
                    .into_iter()
                    .map(|(c, r, eq)| if eq { PolyRow::eq(c, r) } else { PolyRow::ge(c, r) })
                    .collect();
                PolytopeDescription::with_box(rows, &vec![1; dim], obj.into_iter().map(int).collect(), Sense::Maximize)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vertices_are_not_midpoints(p in random_polytope()) {
        let vs = enumerate_vertices(&p, caps()).unwrap();
        for v in &vs.vertices {
            prop_assert!(p.contains(v));
            for (a, x) in vs.vertices.iter().enumerate() {
                for y in &vs.vertices[a + 1..] {
                    let mid: Vec<Rational> = x.iter().zip(y).map(|(s, t)| (s + t) * half()).collect();
                    prop_assert_ne!(&mid, v);
                }
            }
        }
    }

    #[test]
    fn lemma_constant_ignores_row_order_and_copies(p in random_polytope(), shift in any::<prop::sample::Index>()) {
        let k = lemma1_constant(&p, caps()).unwrap();
        let mut rows = p.rows.clone();
        let r = shift.index(rows.len());
        rows.rotate_left(r);
        rows.push(rows[0].clone());
        let q = PolytopeDescription { rows, ..p.clone() };
        prop_assume!(caps().check(&q).is_ok());
        prop_assert_eq!(lemma1_constant(&q, caps()).unwrap(), k);
    }
}

#[test]
fn map_agrees_with_integral_lp_optimum() {
    let p = GenParams { nodes: 4, edges: 5, ..GenParams::default() };
    let mut compared = 0;
    for kind in ProblemKind::ALL {
        for seed in 0..15 {
            let b = build_gm(&generate(kind, &p, seed).unwrap()).unwrap();
            let poly = PolytopeDescription::from_graph(&b.graph, b.exact_weights());
            let Ok(vs) = enumerate_vertices(&poly, caps()) else { continue };
            let integral = vs.optimal_vertices().any(|v| v.iter().all(|x| x.is_zero() || x.is_one()));
            if integral {
                compared += 1;
                assert_eq!(brute_force_map(&b.graph).unwrap().value(), vs.optimum.as_ref(), "{kind} seed {seed}");
            }
        }
    }
    assert!(compared > 40, "only {compared} comparisons");
}

#[test]
fn dijkstra_matches_path_lp() {
    let p = GenParams { nodes: 6, edges: 9, ..GenParams::default() };
    for seed in 0..30 {
        let inst = generate(ProblemKind::ShortestPath, &p, seed).unwrap();
        assert_eq!(Some(dijkstra(&inst).unwrap().cost), lp_optimum(&inst), "seed {seed}");
    }
}

#[test]
fn flow_oracle_matches_flow_lp() {
    let p = GenParams { nodes: 5, edges: 7, max_capacity: 2, ..GenParams::default() };
    for seed in 0..30 {
        let inst = generate(ProblemKind::NetworkFlow, &p, seed).unwrap();
        assert_eq!(Some(flow_oracle(&inst).unwrap().cost), lp_optimum(&inst), "seed {seed}");
    }
}

#[test]
fn matching_oracle_matches_bipartite_lp() {
    // bipartite graphs have integral matching polytopes
    for seed in 0..30u64 {
        let mut edges = Vec::new();
        for a in 0..3 {
            for b in 3..6 {
                if a + 3 == b || (seed >> (a * 3 + b - 3)) & 1 == 1 {
                    edges.push(Edge::new(a, b, ((seed as usize * 7 + a * 5 + b * 3) % 9 + 1) as f64, false));
                }
            }
        }
        let inst = ProblemInstance { kind: ProblemKind::PerfectMatching, num_nodes: 6, edges, params: Params::None };
        if original_lp(&inst).unwrap().dim > 10 {
            continue;
        }
        assert_eq!(Some(matching_oracle(&inst).unwrap().value), lp_optimum(&inst), "seed {seed}");
    }
}

#[test]
fn matching_oracle_never_beats_the_lp() {
    let p = GenParams { nodes: 6, edges: 8, ..GenParams::default() };
    for seed in 0..30 {
        let inst = generate(ProblemKind::PerfectMatching, &p, seed).unwrap();
        let vs = enumerate_vertices(&original_lp(&inst).unwrap(), caps()).unwrap();
        let m = matching_oracle(&inst).unwrap().value;
        let lp = vs.optimum.clone().unwrap();
        assert!(m <= lp);
        if vs.optimal_vertices().all(|v| v.iter().all(|x| x.is_zero() || x.is_one())) {
            assert_eq!(m, lp, "seed {seed}");
        }
    }
}

#[test]
fn box_constants() {
    assert_eq!(lemma1_constant(&PolytopeDescription::unit_box(1), caps()).unwrap(), Some(int(1)));
    assert_eq!(lemma1_constant(&PolytopeDescription::unit_box(2), caps()).unwrap(), Some(int(2)));
}
