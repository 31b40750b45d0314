//! Property tests for the algebra layer: encoding bijectivity, isotopy
//! closure, fold equivalence, and cache round-trips on randomized tables.

use proptest::prelude::*;

use iterq_core::algebra::catalog::random;
use iterq_core::algebra::{
    all_permutations, apply_isotopy, coordinate_action, eval_iterated, multiply_tuples, pi_product,
    Isotopy, Permutation, TupleCode,
};
use iterq_core::transition::{build_transition, TransitionBudget, TransitionMatrix};

fn perm_from_seed(n: usize, seed: u64) -> Permutation {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut image: Vec<u8> = (0..n as u8).collect();
    image.shuffle(&mut rng);
    Permutation::new(image).unwrap()
}

proptest! {
    #[test]
    fn tuple_codes_round_trip(n in 5usize..=8, digits in proptest::collection::vec(0u64..8, 5..=8)) {
        let digits: Vec<u8> = digits.iter().take(n).map(|&d| (d % n as u64) as u8).collect();
        prop_assume!(digits.len() == n);
        let t = TupleCode::new(digits.clone()).unwrap();
        let back = TupleCode::from_code(n, t.code());
        prop_assert_eq!(back.digits(), &digits[..]);
    }

    #[test]
    fn isotopies_preserve_the_latin_property(n in 2usize..=5, table_seed: u64, a: u64, b: u64, c: u64) {
        let g = random(n, table_seed).unwrap();
        let iso = Isotopy::new(
            perm_from_seed(n, a),
            perm_from_seed(n, b),
            perm_from_seed(n, c),
        ).unwrap();
        // Construction re-validates rows and columns; an invalid result
        // would surface as an error here.
        let h = apply_isotopy(&g, &iso).unwrap();
        let back = apply_isotopy(&h, &iso.inverse()).unwrap();
        prop_assert_eq!(g, back);
    }

    #[test]
    fn iterated_evaluation_is_the_left_fold(n in 1usize..=5, table_seed: u64, xs in proptest::collection::vec(0u64..5, 1..=9)) {
        let g = random(n, table_seed).unwrap();
        let xs: Vec<u8> = xs.iter().map(|&x| (x % n as u64) as u8).collect();
        prop_assert_eq!(eval_iterated(&g, &xs).unwrap(), pi_product(&g, &xs).unwrap());
    }

    #[test]
    fn entrywise_products_by_distinct_permutations_differ(n in 2usize..=4, table_seed: u64, u_code in 0u64..256) {
        let g = random(n, table_seed).unwrap();
        let u = TupleCode::from_code(n, u_code % (n as u64).pow(n as u32));
        let perms = all_permutations(n);
        let mut seen = std::collections::HashSet::new();
        for w in &perms {
            let v = multiply_tuples(&g, &u, &w.as_tuple()).unwrap();
            prop_assert!(seen.insert(v.code()), "two permutations hit one type");
        }
    }

    #[test]
    fn coordinate_actions_compose(n in 2usize..=6, v_code: u64, a: u64, b: u64) {
        let v = TupleCode::from_code(n, v_code % (n as u64).pow(n as u32));
        let p = perm_from_seed(n, a);
        let q = perm_from_seed(n, b);
        // (V^p)^q = V^(p . q) with the image convention of coordinate_action.
        let lhs = coordinate_action(&coordinate_action(&v, &p).unwrap(), &q).unwrap();
        let rhs = coordinate_action(&v, &p.compose(&q)).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn transition_cache_round_trips(n in 1usize..=3, table_seed: u64) {
        let g = random(n, table_seed).unwrap();
        let t = build_transition(&g, &TransitionBudget::default()).unwrap();
        let mut buf = Vec::new();
        t.write_cache(&mut buf).unwrap();
        let back = TransitionMatrix::read_cache(&mut buf.as_slice(), n).unwrap();
        for u in 0..t.tuple_count() as u64 {
            for v in 0..t.tuple_count() as u64 {
                prop_assert_eq!(t.entry(u, v), back.entry(u, v));
            }
        }
    }
}

#[test]
fn exhaustive_isotopy_closure_at_order_three() {
    let g = iterq_core::algebra::catalog::cyclic(3);
    let perms = all_permutations(3);
    for a in &perms {
        for b in &perms {
            for c in &perms {
                let iso = Isotopy::new(a.clone(), b.clone(), c.clone()).unwrap();
                apply_isotopy(&g, &iso).expect("isotopes stay latin");
            }
        }
    }
}
