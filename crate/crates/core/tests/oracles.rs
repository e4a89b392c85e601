mod common;

use common::{gaussian_cloud, naive_distances, naive_imbalance, naive_order, naive_ranks};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use repgeo::geometry::{compute_neighbors, rank_of, DuplicatePolicy};
use repgeo::id::estimate_id_decimated;
use repgeo::synth::{generate, sample_intrinsic, ManifoldKind, ManifoldSpec, Synthetic};
use repgeo::{estimate_id_2nn, information_imbalance, PointCloud};

fn single(spec: &ManifoldSpec) -> PointCloud {
    match generate(spec).unwrap() {
        Synthetic::Single(c) => c,
        Synthetic::Pair(..) => unreachable!(),
    }
}

fn spec(kind: ManifoldKind, d: usize, ambient: usize, n: usize, seed: u64) -> ManifoldSpec {
    ManifoldSpec { kind, intrinsic_dim: d, ambient_dim: ambient, n, noise: 0.0, seed }
}

#[test]
fn neighbor_table_matches_all_pairs_sort() {
    let c = gaussian_cloud(200, 7, 11);
    let dist = naive_distances(&c);
    let order = naive_order(&dist);
    for k in [1, 2, 15, 199] {
        let t = compute_neighbors(&c, k, DuplicatePolicy::Keep).unwrap();
        for i in 0..c.len() {
            let got: Vec<usize> = t.neighbors(i).iter().map(|nb| nb.index).collect();
            assert_eq!(got, order[i][..k], "point {i}, k {k}");
            for nb in t.neighbors(i) {
                let want = dist[i][nb.index];
                assert!((nb.distance - want).abs() <= 1e-12 * want);
            }
        }
    }
}

#[test]
fn rank_of_matches_full_sort() {
    let c = gaussian_cloud(100, 5, 12);
    let ranks = naive_ranks(&naive_order(&naive_distances(&c)));
    let table = compute_neighbors(&c, 99, DuplicatePolicy::Keep).unwrap();
    for (i, row) in ranks.iter().enumerate() {
        for j in (0..100).filter(|&j| j != i) {
            assert_eq!(rank_of(&c, i, j).unwrap().rank, row[j]);
            assert_eq!(table.rank_of(i, j).unwrap().rank, row[j]);
        }
        let nn = table.neighbors(i)[0].index;
        assert_eq!(rank_of(&c, i, nn).unwrap().rank, 1);
    }
}

#[test]
fn imbalance_matches_double_loop_with_ties() {
    // integer lattice coordinates produce many equal distances
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut coords: Vec<f64> = (0..120).flat_map(|i| [(i % 11) as f64, (i / 11) as f64]).collect();
    let a = PointCloud::new(coords.clone(), 2).unwrap();
    coords.chunks_exact_mut(2).for_each(|p| p[1] = (p[1] * 3.0) % 5.0);
    let b_rows: Vec<f64> = coords.clone();
    let b = PointCloud::new(b_rows, 2).unwrap();
    let r = information_imbalance(&a, &b).unwrap();
    assert_eq!(r.delta_ab, naive_imbalance(&a, &b));
    assert_eq!(r.delta_ba, naive_imbalance(&b, &a));

    let mut rows: Vec<usize> = (0..120).collect();
    rows.shuffle(&mut rng);
    let shuffled = PointCloud::new(rows.iter().flat_map(|&r| a.row(r).to_vec()).collect(), 2).unwrap();
    let r = information_imbalance(&a, &shuffled).unwrap();
    assert_eq!(r.delta_ab, naive_imbalance(&a, &shuffled));
    assert_eq!(r.delta_ba, naive_imbalance(&shuffled, &a));
}

#[test]
fn sin_pair_against_oracle() {
    let s = ManifoldSpec { kind: ManifoldKind::SinPair, intrinsic_dim: 1, ambient_dim: 1, n: 1000, noise: 0.0, seed: 0 };
    let Synthetic::Pair(x, y) = generate(&s).unwrap() else { unreachable!() };
    let r = information_imbalance(&x, &y).unwrap();
    assert_eq!(r.delta_ab, naive_imbalance(&x, &y));
    assert_eq!(r.delta_ba, naive_imbalance(&y, &x));
    // x pins down sin x; sin x leaves four candidate branches of x
    assert!(r.delta_ab < 0.02, "{}", r.delta_ab);
    assert!(r.delta_ba > 0.6, "{}", r.delta_ba);
}

#[test]
fn shuffled_rows_are_uninformative() {
    let a = gaussian_cloud(5000, 4, 14);
    let mut rows: Vec<usize> = (0..5000).collect();
    rows.shuffle(&mut ChaCha8Rng::seed_from_u64(15));
    let b = PointCloud::new(rows.iter().flat_map(|&r| a.row(r).to_vec()).collect(), 4).unwrap();
    let r = information_imbalance(&a, &b).unwrap();
    assert!((r.delta_ab - 1.0).abs() <= 0.05, "{}", r.delta_ab);
    assert!((r.delta_ba - 1.0).abs() <= 0.05, "{}", r.delta_ba);
}

#[test]
fn non_injective_map_loses_information() {
    // b = |a| folds each coordinate; a determines b but not the reverse
    let mut wins = 0;
    for seed in 0..10 {
        let a = gaussian_cloud(400, 2, 100 + seed);
        let b = a.map_rows(2, |s, d| d.iter_mut().zip(s).for_each(|(o, x)| *o = x.abs())).unwrap();
        let r = information_imbalance(&a, &b).unwrap();
        if r.delta_ab <= r.delta_ba {
            wins += 1;
        }
    }
    assert!(wins > 5, "{wins}/10");
}

#[test]
fn hypersphere_id() {
    let c = single(&spec(ManifoldKind::Hypersphere, 9, 50, 5000, 21));
    let id = estimate_id_2nn(&c, 0.0).unwrap().id;
    assert!((id - 9.0).abs() <= 0.15 * 9.0, "{id}");
}

#[test]
fn planar_square_in_100_dims() {
    let ids: Vec<f64> = (0..5)
        .map(|seed| estimate_id_2nn(&single(&spec(ManifoldKind::Hypercube, 2, 100, 5000, seed)), 0.0).unwrap().id)
        .collect();
    for id in &ids {
        assert!((1.8..=2.2).contains(id), "{ids:?}");
    }
}

#[test]
fn decimated_hypercube_is_stable() {
    let c = single(&spec(ManifoldKind::Hypercube, 5, 20, 5000, 31));
    let points = estimate_id_decimated(&c, &[0.25, 0.5, 1.0], &[1, 2, 3], 0.0).unwrap();
    for p in &points {
        assert!((p.mean_id - 5.0).abs() <= 0.15 * 5.0, "fraction {}: {}", p.fraction, p.mean_id);
        assert_eq!(p.estimates.len(), 3);
    }
    assert_eq!(points[2].n_points, 5000);
    assert_eq!(points[2].std_id, 0.0);
    assert_eq!(points[0].n_points, 1250);
}

#[test]
fn estimates_grow_with_cube_dimension() {
    let mean_id = |d: usize| {
        (0..2)
            .map(|seed| estimate_id_2nn(&single(&spec(ManifoldKind::Hypercube, d, 100, 5000, 40 + seed)), 0.0).unwrap().id)
            .sum::<f64>()
            / 2.0
    };
    let ids: Vec<f64> = [1, 2, 4, 8].into_iter().map(mean_id).collect();
    assert!(ids.windows(2).all(|w| w[0] < w[1]), "{ids:?}");
}

#[test]
fn embedding_preserves_id() {
    for kind in [ManifoldKind::Hypercube, ManifoldKind::Gaussian, ManifoldKind::Hypersphere] {
        let s = spec(kind, 3, 40, 1500, 50);
        let flat = estimate_id_2nn(&sample_intrinsic(&s).unwrap(), 0.0).unwrap().id;
        let embedded = estimate_id_2nn(&single(&s), 0.0).unwrap().id;
        assert!(((flat - embedded) / flat).abs() < 1e-9, "{kind:?}: {flat} vs {embedded}");
    }
}

#[test]
fn noise_inflates_low_dimensional_estimates() {
    let mut s = spec(ManifoldKind::Hypercube, 2, 30, 2000, 60);
    let clean = estimate_id_2nn(&single(&s), 0.0).unwrap().id;
    s.noise = 0.05;
    let noisy = estimate_id_2nn(&single(&s), 0.0).unwrap().id;
    assert!(noisy > clean + 1.0, "{clean} -> {noisy}");
}
