mod common;

use common::{gaussian_cloud, pad_zeros, scale};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use repgeo::geometry::{compute_neighbors, rank_of, DuplicatePolicy};
use repgeo::ingest::tensor::{decode, encode, Tensor};
use repgeo::profile::training_phase_split;
use repgeo::{estimate_id_2nn, information_imbalance, relative_ii_difference, PointCloud};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ranks_are_a_permutation(n in 3usize..40, dim in 1usize..6, seed in any::<u64>()) {
        let c = gaussian_cloud(n, dim, seed);
        let table = compute_neighbors(&c, n - 1, DuplicatePolicy::Keep).unwrap();
        for i in 0..n {
            let mut ranks: Vec<usize> = (0..n).filter(|&j| j != i).map(|j| rank_of(&c, i, j).unwrap().rank).collect();
            for j in (0..n).filter(|&j| j != i) {
                prop_assert_eq!(table.rank_of(i, j).unwrap().rank, rank_of(&c, i, j).unwrap().rank);
            }
            ranks.sort_unstable();
            prop_assert_eq!(ranks, (1..n).collect::<Vec<_>>());
            let d: Vec<f64> = table.neighbors(i).iter().map(|nb| nb.distance).collect();
            prop_assert!(d.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(table.neighbors(i).iter().all(|nb| nb.index != i));
        }
    }

    #[test]
    fn relabeling_is_equivariant(n in 3usize..60, dim in 1usize..5, seed in any::<u64>()) {
        let c = gaussian_cloud(n, dim, seed);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed));
        // row p of the permuted cloud is row perm[p] of the original
        let ids: Vec<u64> = perm.iter().map(|&p| c.point_ids()[p]).collect();
        let data = perm.iter().flat_map(|&p| c.row(p).to_vec()).collect();
        let permuted = PointCloud::with_ids(data, dim, ids).unwrap();
        let k = (n - 1).min(5);
        let t = compute_neighbors(&c, k, DuplicatePolicy::Keep).unwrap();
        let tp = compute_neighbors(&permuted, k, DuplicatePolicy::Keep).unwrap();
        for p in 0..n {
            let mapped: Vec<(usize, f64)> = tp.neighbors(p).iter().map(|nb| (perm[nb.index], nb.distance)).collect();
            let orig: Vec<(usize, f64)> = t.neighbors(perm[p]).iter().map(|nb| (nb.index, nb.distance)).collect();
            prop_assert_eq!(mapped, orig);
        }
        // the log sum runs in point order, so only rounding may differ
        if let (Ok(x), Ok(y)) = (estimate_id_2nn(&c, 0.0), estimate_id_2nn(&permuted, 0.0)) {
            prop_assert!(((x.id - y.id) / x.id).abs() < 1e-12);
        }
    }

    #[test]
    fn imbalance_bounds_and_self(n in 3usize..80, seed in any::<u64>()) {
        let a = gaussian_cloud(n, 3, seed);
        let b = gaussian_cloud(n, 2, seed.wrapping_add(1));
        let r = information_imbalance(&a, &b).unwrap();
        let nf = n as f64;
        for v in [r.delta_ab, r.delta_ba] {
            prop_assert!(v >= 2.0 / nf && v <= 2.0 * (nf - 1.0) / nf);
        }
        let s = information_imbalance(&a, &a).unwrap();
        prop_assert_eq!(s.delta_ab, 2.0 / nf);
        prop_assert_eq!(s.delta_ba, 2.0 / nf);
    }

    #[test]
    fn estimators_ignore_power_of_two_scale_and_zero_padding(
        n in 10usize..80, seed in any::<u64>(), exp in -20i32..20, extra in 1usize..20,
    ) {
        let a = gaussian_cloud(n, 4, seed);
        let b = gaussian_cloud(n, 3, !seed);
        let c = 2f64.powi(exp);
        let id = estimate_id_2nn(&a, 0.0).unwrap();
        prop_assert_eq!(estimate_id_2nn(&scale(&a, c), 0.0).unwrap(), id);
        prop_assert_eq!(estimate_id_2nn(&pad_zeros(&a, extra), 0.0).unwrap(), id);
        let r = information_imbalance(&a, &b).unwrap();
        prop_assert_eq!(information_imbalance(&scale(&a, c), &pad_zeros(&b, extra)).unwrap(), r);
    }

    #[test]
    fn relative_difference_is_antisymmetric(ab in 1e-4f64..2.0, ba in 1e-4f64..2.0) {
        let v = relative_ii_difference(ab, ba).unwrap();
        prop_assert_eq!(v, -relative_ii_difference(ba, ab).unwrap());
        prop_assert!((-2.0..=2.0).contains(&v));
    }

    #[test]
    fn tensor_round_trip_is_bitwise(
        rows in 1usize..8, cols in 1usize..8,
        raw in prop::collection::vec(any::<f32>().prop_filter("finite", |v| v.is_finite()), 64),
    ) {
        let data = raw[..rows * cols].to_vec();
        let t = Tensor::matrix(rows, cols, data).unwrap();
        let mut buf = Vec::new();
        encode(&t, &mut buf).unwrap();
        let back = decode(&buf[..]).unwrap();
        prop_assert_eq!(back.dims(), t.dims());
        let bits = |x: &Tensor| x.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back), bits(&t));
    }

    #[test]
    fn phase_split_is_negation_invariant(values in prop::collection::vec(-100i32..100, 0..25)) {
        let series: Vec<(u32, f64)> = values.iter().enumerate().map(|(i, &v)| (i as u32, v as f64)).collect();
        let negated: Vec<(u32, f64)> = series.iter().map(|&(e, v)| (e, -v)).collect();
        prop_assert_eq!(training_phase_split(&series), training_phase_split(&negated));
    }
}
