use nalgebra::DVector;
use proptest::prelude::*;

use rds_core::rng;
use rds_core::sphere_analysis::{cm_projected_plusminus_exact, global_upper_bound};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn bound_chain(n in 3usize..16, seed in any::<u64>()) {
        let x = rng::unit_vector(&mut rng::stream(seed), n);
        let r = cm_projected_plusminus_exact(&x).unwrap();
        prop_assert!(r.lower_bound <= r.cm + 1e-9);
        prop_assert!(r.cm <= r.upper_bound + 1e-9);
        prop_assert!(r.upper_bound <= global_upper_bound(n) + 1e-9);
    }

    #[test]
    fn signed_permutation_invariance(n in 3usize..12, seed in any::<u64>(), perm_seed in any::<u64>()) {
        let mut r = rng::stream(seed);
        let x = rng::unit_vector(&mut r, n);
        let mut p = rng::stream(perm_seed);
        let mut idx: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(idx.as_mut_slice(), &mut p);
        let signs: Vec<f64> = (0..n).map(|_| if rand::Rng::random::<bool>(&mut p) { 1.0 } else { -1.0 }).collect();
        let y = DVector::from_fn(n, |i, _| signs[i] * x[idx[i]]);
        let a = cm_projected_plusminus_exact(&x).unwrap().cm;
        let b = cm_projected_plusminus_exact(&y).unwrap().cm;
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn sparse_points_respect_the_bounds(n in 3usize..12, k in 1usize..12, seed in any::<u64>()) {
        let k = k.min(n);
        let mut r = rng::stream(seed);
        let head = rng::unit_vector(&mut r, k);
        let x = DVector::from_fn(n, |i, _| if i < k { head[i] } else { 0.0 });
        let res = cm_projected_plusminus_exact(&x).unwrap();
        prop_assert!(res.support_size <= k);
        prop_assert!(res.lower_bound <= res.cm + 1e-9 && res.cm <= res.upper_bound + 1e-9);
    }
}
