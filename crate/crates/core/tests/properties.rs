use lsl_core::combinatorics::{all_subsets, order_leq, SubsetIndex};
use lsl_core::lagrangian::{
    arnold_coords, frame_from_arnold, frame_from_unitary, j_map, unitary_from_frame,
};
use lsl_core::matrix::{cayley, inverse_cayley, max_abs, unitary_eig};
use lsl_core::morse::{
    classify_stable, classify_unstable, flow, flow_limit, stratum_sample, Direction, FlowSpec,
};
use lsl_core::ring::{basis_class, cup, pairing};
use lsl_core::sampling::{random_hermitian, random_unitary, rng_for};
use lsl_core::spectral::{det_winding, maslov_index, random_loop, UnitaryLoop};
use proptest::prelude::*;

fn subset(n: usize, bits: u64) -> SubsetIndex {
    SubsetIndex::from_bits(n, bits & ((1 << n) - 1)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn order_is_a_partial_order(n in 1usize..=6, a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
        let (x, y, z) = (subset(n, a), subset(n, b), subset(n, c));
        prop_assert!(order_leq(&x, &x).unwrap());
        if order_leq(&x, &y).unwrap() && order_leq(&y, &x).unwrap() {
            prop_assert_eq!(x, y);
        }
        if order_leq(&x, &y).unwrap() && order_leq(&y, &z).unwrap() {
            prop_assert!(order_leq(&x, &z).unwrap());
        }
        if x != y && order_leq(&x, &y).unwrap() {
            prop_assert!(x.weight() > y.weight());
        }
    }

    #[test]
    fn cayley_roundtrip(n in 1usize..=5, seed in any::<u64>()) {
        let a = random_hermitian(&mut rng_for(seed, 0), n, 3.0);
        let back = inverse_cayley(&cayley(&a)).unwrap();
        prop_assert!(max_abs(&(back.as_matrix() - a.as_matrix())) < 1e-9);
    }

    #[test]
    fn frames_roundtrip(n in 1usize..=5, seed in any::<u64>()) {
        let s = random_unitary(&mut rng_for(seed, 1), n);
        let f = frame_from_unitary(&s);
        let back = unitary_from_frame(&f).unwrap();
        prop_assert!(max_abs(&(back.as_matrix() - s.as_matrix())) < 1e-10);
        let neg = unitary_from_frame(&j_map(&f)).unwrap();
        prop_assert!(max_abs(&(neg.as_matrix() + s.as_matrix())) < 1e-10);
    }

    #[test]
    fn arnold_roundtrip(n in 1usize..=4, bits in any::<u64>(), seed in any::<u64>()) {
        let i = subset(n, bits);
        let t = random_hermitian(&mut rng_for(seed, 2), n, 2.0);
        let back = arnold_coords(&frame_from_arnold(i, &t).unwrap(), i).unwrap();
        prop_assert!(max_abs(&(back.as_matrix() - t.as_matrix())) < 1e-8);
    }

    #[test]
    fn flow_is_a_group_action(n in 1usize..=4, seed in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let spec = FlowSpec::default_for(n);
        let s = random_unitary(&mut rng_for(seed, 3), n);
        let two = flow(&flow(&s, a, &spec).unwrap(), b, &spec).unwrap();
        let one = flow(&s, a + b, &spec).unwrap();
        prop_assert!(max_abs(&(two.as_matrix() - one.as_matrix())) < 1e-8);
        let eig = unitary_eig(&one);
        prop_assert!(eig.phases.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn stratum_samples_flow_to_their_stratum(n in 1usize..=4, bits in any::<u64>(), seed in any::<u64>()) {
        let i = subset(n, bits);
        let spec = FlowSpec::default_for(n);
        let s = stratum_sample(&mut rng_for(seed, 4), i);
        prop_assert_eq!(classify_unstable(&s).unwrap(), i);
        prop_assert_eq!(flow_limit(&s, &spec, Direction::Backward).unwrap(), i);
        prop_assert_eq!(flow_limit(&s, &spec, Direction::Forward).unwrap(), classify_stable(&s).unwrap());
    }

    #[test]
    fn pairing_is_graded_antisymmetric(n in 1usize..=6, bits in any::<u64>()) {
        let i = subset(n, bits);
        let (x, y) = (basis_class(i), basis_class(i.complement()));
        let sign = if (i.weight() * i.complement().weight()).is_multiple_of(2) { 1 } else { -1 };
        prop_assert_eq!(pairing(&x, &y).unwrap(), sign * pairing(&y, &x).unwrap());
        let top = cup(&x, &y).unwrap();
        prop_assert_eq!(top.coefficient(&SubsetIndex::full(n).unwrap()), pairing(&x, &y).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn crossings_survive_refinement(n in 1usize..=3, seed in any::<u64>()) {
        let (coarse, wind) = random_loop(&mut rng_for(seed, 5), n, 400).unwrap();
        let (fine, _) = random_loop(&mut rng_for(seed, 5), n, 800).unwrap();
        prop_assert_eq!(maslov_index(&coarse).unwrap(), wind);
        prop_assert_eq!(maslov_index(&fine).unwrap(), wind);
        prop_assert_eq!(det_winding(&fine).unwrap(), wind);
    }
}

#[test]
fn loops_round_trip_through_json() {
    let (lp, wind) = random_loop(&mut rng_for(9, 6), 2, 300).unwrap();
    let text = serde_json::to_string(&lp).unwrap();
    let back: UnitaryLoop = serde_json::from_str(&text).unwrap();
    assert_eq!(maslov_index(&back).unwrap(), wind);
}

#[test]
fn every_critical_point_is_fixed_by_flow() {
    for n in 1..=4 {
        let spec = FlowSpec::default_for(n);
        for i in all_subsets(n).unwrap() {
            let s = lsl_core::morse::critical_unitary(i);
            assert!(max_abs(&(flow(&s, 3.0, &spec).unwrap().into_inner() - s.as_matrix())) < 1e-12);
        }
    }
}
