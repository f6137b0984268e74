use dimwitness::classical::{classical_bound, strategy_value};
use dimwitness::witness::{chsh_witness, Behavior, Outcome, Scenario, Witness};
use dimwitness::{Rational64, WitnessQ};
use proptest::prelude::*;

/// Best value over every map from preparations to response vectors that
/// uses at most `d` distinct vectors, each scored as a 0/1 behavior.
fn brute_force(witness: &WitnessQ, d: usize) -> Rational64 {
    let scenario = witness.scenario();
    let (n, m) = (scenario.n_preparations(), scenario.n_measurements());
    let mut best: Option<Rational64> = None;
    for joint in 0..1u64 << (n * m) {
        let vectors: Vec<u64> = (0..n).map(|x| (joint >> (x * m)) & ((1 << m) - 1)).collect();
        let mut distinct = vectors.clone();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() > d {
            continue;
        }
        let plus = scenario
            .pairs()
            .map(|(x, y)| {
                let bit = (vectors[x - 1] >> (y - 1)) & 1;
                Rational64::from_integer(bit as i64)
            })
            .collect();
        let value = witness.evaluate(&Behavior::from_plus(scenario, plus).unwrap()).unwrap();
        if best.is_none_or(|b| value > b) {
            best = Some(value);
        }
    }
    best.unwrap()
}

fn witness_strategy() -> impl Strategy<Value = WitnessQ> {
    (1usize..=4, 1usize..=3)
        .prop_flat_map(|(n, m)| {
            let k = n * m;
            (Just((n, m)), prop::collection::vec(-12i64..=12, k), prop::collection::vec(-12i64..=12, k))
        })
        .prop_map(|((n, m), kp, km)| {
            let q = |v: Vec<i64>| v.into_iter().map(|a| Rational64::new(a, 4)).collect();
            Witness::new("random", Scenario::new(n, m).unwrap(), q(kp), q(km)).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matches_exhaustive_oracle(w in witness_strategy(), d in 1usize..=5) {
        let result = classical_bound(&w, d).unwrap();
        prop_assert_eq!(result.bound, brute_force(&w, d));
        prop_assert_eq!(strategy_value(&w, &result.optimal_strategy).unwrap(), result.bound);
        prop_assert!(result.optimal_strategy.distinct_used() <= d);
    }

    #[test]
    fn nondecreasing_in_dimension(w in witness_strategy()) {
        let values: Vec<_> = (1..=5).map(|d| classical_bound(&w, d).unwrap().bound).collect();
        prop_assert!(values.windows(2).all(|p| p[0] <= p[1]));
    }

    #[test]
    fn float_and_exact_agree(w in witness_strategy(), d in 1usize..=4) {
        let exact = classical_bound(&w, d).unwrap().bound;
        let as_f64 = |v: &Rational64| *v.numer() as f64 / *v.denom() as f64;
        let scenario = w.scenario();
        let k = |s| scenario.pairs().map(|(x, y)| as_f64(&w.coefficient(x, y, s))).collect();
        let wf = Witness::new("random", scenario, k(Outcome::Plus), k(Outcome::Minus)).unwrap();
        let float = classical_bound(&wf, d).unwrap().bound;
        prop_assert!((float - as_f64(&exact)).abs() < 1e-12);
    }
}

#[test]
fn chsh_matches_oracle_exactly() {
    let w: WitnessQ = chsh_witness();
    for (d, expected) in [(1, 0), (2, 4), (3, 6), (4, 8)] {
        assert_eq!(classical_bound(&w, d).unwrap().bound, Rational64::from_integer(expected));
        assert_eq!(brute_force(&w, d), Rational64::from_integer(expected));
    }
}
