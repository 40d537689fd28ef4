use bplp_core::factor_graph::{Factor, Hint, LinearRow};
use bplp_core::{ExtReal, VarId};
use proptest::prelude::*;

fn scope(n: usize) -> Vec<VarId> {
    (0..n).map(VarId).collect()
}

fn hinted_factor() -> impl Strategy<Value = Factor> {
    let degree = (2usize..=12).prop_flat_map(|n| (Just(n), 0..=n as i64, 0u8..3)).prop_map(|(n, d, k)| match k {
        0 => Factor::degree_eq(scope(n), d),
        1 => Factor::degree_le(scope(n), d),
        _ => Factor::degree_ge(scope(n), d),
    });
    let signed = (2usize..=12)
        .prop_flat_map(|n| (prop::collection::vec(prop::bool::ANY, n), -(n as i64)..=n as i64))
        .prop_map(|(signs, demand)| {
            let signs: Vec<i8> = signs.into_iter().map(|s| if s { 1 } else { -1 }).collect();
            Factor::signed_conservation(scope(signs.len()), signs, demand)
        });
    let blossom = prop::sample::select(vec![3usize, 5, 7, 9, 11]).prop_map(|n| Factor::odd_cycle_blossom(scope(n)));
    let generic = (2usize..=8)
        .prop_flat_map(|n| {
            let row = (prop::collection::vec(-2i64..=2, n), -2i64..=3);
            (Just(n), prop::collection::vec(row.clone(), 0..=1), prop::collection::vec(row, 0..=2))
        })
        .prop_map(|(n, eq, ineq)| {
            let rows = |v: Vec<(Vec<i64>, i64)>| v.into_iter().map(|(c, r)| LinearRow::new(c, r)).collect();
            Factor::new(scope(n), rows(eq), rows(ineq))
        });
    prop_oneof![degree, signed, blossom, generic]
}

fn incoming(n: usize) -> impl Strategy<Value = Vec<ExtReal>> {
    let entry = prop_oneof![
        8 => (-10.0f64..10.0).prop_map(ExtReal::Finite),
        1 => Just(ExtReal::PosInf),
        1 => Just(ExtReal::NegInf),
    ];
    prop::collection::vec(entry, n)
}

fn factor_with_messages() -> impl Strategy<Value = (Factor, Vec<ExtReal>)> {
    hinted_factor().prop_flat_map(|f| {
        let n = f.len();
        (Just(f), incoming(n))
    })
}

fn close(a: ExtReal, b: ExtReal) -> bool {
    match (a, b) {
        (ExtReal::Finite(x), ExtReal::Finite(y)) => (x - y).abs() <= 1e-12 * (1.0 + x.abs().max(y.abs())),
        _ => a == b,
    }
}

/// Best completion over all feasible local assignments, ignoring the value at `pin`.
fn unconstrained(f: &Factor, pin: usize, lambda: &[ExtReal]) -> ExtReal {
    let n = f.len();
    let mut best = ExtReal::NegInf;
    for mask in 0u32..1 << n {
        let local: Vec<u8> = (0..n).map(|k| (mask >> k & 1) as u8).collect();
        if !f.eval(&local).unwrap() {
            continue;
        }
        let mut total = Some(0.0);
        for (j, &l) in lambda.iter().enumerate() {
            if j == pin {
                continue;
            }
            total = match (l, local[j]) {
                (ExtReal::PosInf, 0) | (ExtReal::NegInf, 1) => None,
                (ExtReal::Finite(x), 1) => total.map(|t| t + x),
                _ => total,
            };
        }
        if let Some(t) = total {
            best = best.max(ExtReal::Finite(t));
        }
    }
    best
}

proptest! {
    #[test]
    fn hints_agree_with_rows(f in hinted_factor()) {
        prop_assert_eq!(f.hint_agrees(), Some(true));
    }

    #[test]
    fn specialized_matches_generic((f, lambda) in factor_with_messages()) {
        for pin in 0..f.len() {
            for c in 0..=1 {
                let fast = f.max_marginal(pin, c, &lambda);
                let slow = f.generic_max_marginal(pin, c, &lambda);
                prop_assert!(close(fast, slow), "pin {} c {} hint {:?}: {} vs {}", pin, c, f.hint(), fast, slow);
            }
        }
    }

    #[test]
    fn max_over_slices_is_unconstrained((f, lambda) in factor_with_messages()) {
        for pin in 0..f.len() {
            let sliced = f.max_marginal(pin, 0, &lambda).max(f.max_marginal(pin, 1, &lambda));
            prop_assert!(close(sliced, unconstrained(&f, pin, &lambda)));
        }
    }

    #[test]
    fn outgoing_ratios_are_marginal_differences((f, lambda) in factor_with_messages()) {
        let out = f.outgoing_log_ratios(&lambda);
        for (pin, &d) in out.iter().enumerate() {
            let one = f.generic_max_marginal(pin, 1, &lambda);
            let zero = f.generic_max_marginal(pin, 0, &lambda);
            match (one, zero) {
                (ExtReal::Finite(a), ExtReal::Finite(b)) => prop_assert!(close(d, ExtReal::Finite(a - b))),
                (ExtReal::NegInf, ExtReal::Finite(_)) => prop_assert_eq!(d, ExtReal::NegInf),
                (ExtReal::Finite(_), ExtReal::NegInf) => prop_assert_eq!(d, ExtReal::PosInf),
                _ => {}
            }
        }
    }
}

#[test]
fn wide_hinted_factors_agree_exhaustively() {
    let n = 20;
    let signs: Vec<i8> = (0..n).map(|k| if k % 3 == 0 { -1 } else { 1 }).collect();
    for f in [
        Factor::degree_eq(scope(n), 2),
        Factor::degree_le(scope(n), 7),
        Factor::degree_ge(scope(n), 13),
        Factor::signed_conservation(scope(n), signs, 4),
        Factor::odd_cycle_blossom(scope(19)),
    ] {
        assert_eq!(f.hint_agrees(), Some(true), "{:?}", f.hint());
    }
    assert_eq!(Factor::degree_eq(scope(21), 1).hint_agrees(), None);
}

#[test]
fn blossom_rows_describe_even_runs() {
    let f = Factor::odd_cycle_blossom(scope(5));
    assert_eq!(*f.hint(), Hint::OddCycleBlossom);
    let accepted: Vec<u32> = f.feasible_masks();
    // empty, five adjacent pairs, five pairs of pairs leaving one vertex out
    assert_eq!(accepted.len(), 11);
}
