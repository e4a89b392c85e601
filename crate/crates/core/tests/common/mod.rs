//! Brute-force reference implementations, written straight from the definitions
//! and sharing no code with the library's distance or ranking paths.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use repgeo::PointCloud;

pub fn naive_distances(c: &PointCloud) -> Vec<Vec<f64>> {
    let n = c.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut s = 0.0;
                    for (a, b) in c.row(i).iter().zip(c.row(j)) {
                        s += (a - b) * (a - b);
                    }
                    s.sqrt()
                })
                .collect()
        })
        .collect()
}

/// `order[i]` lists all `j != i` sorted by (distance, index).
pub fn naive_order(dist: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = dist.len();
    (0..n)
        .map(|i| {
            let mut js: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            js.sort_by(|&a, &b| dist[i][a].partial_cmp(&dist[i][b]).unwrap().then(a.cmp(&b)));
            js
        })
        .collect()
}

/// `ranks[i][j]`: 1-based position of `j` in `order[i]` (0 on the diagonal).
pub fn naive_ranks(order: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = order.len();
    let mut ranks = vec![vec![0; n]; n];
    for (i, js) in order.iter().enumerate() {
        for (pos, &j) in js.iter().enumerate() {
            ranks[i][j] = pos + 1;
        }
    }
    ranks
}

/// Double loop over all (i, j) pairs exactly as the formula is written:
/// sum r_B(i, j) over pairs with r_A(i, j) = 1, times 2 / N^2.
pub fn naive_imbalance(a: &PointCloud, b: &PointCloud) -> f64 {
    let n = a.len();
    let ra = naive_ranks(&naive_order(&naive_distances(a)));
    let rb = naive_ranks(&naive_order(&naive_distances(b)));
    let mut sum: u64 = 0;
    for i in 0..n {
        for j in 0..n {
            if i != j && ra[i][j] == 1 {
                sum += rb[i][j] as u64;
            }
        }
    }
    2.0 * sum as f64 / (n as f64 * n as f64)
}

pub fn gaussian_cloud(n: usize, dim: usize, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n * dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    PointCloud::new(data, dim).unwrap()
}

/// Random rotation + translation applied to every row.
pub fn random_isometry(c: &PointCloud, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = c.dim();
    let q = repgeo::synth::random_isometry(d, d, &mut rng);
    let shift: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
    c.map_rows(d, |src, dst| {
        for (r, out) in dst.iter_mut().enumerate() {
            *out = shift[r] + (0..d).map(|s| q[(r, s)] * src[s]).sum::<f64>();
        }
    })
    .unwrap()
}

pub fn pad_zeros(c: &PointCloud, extra: usize) -> PointCloud {
    let d = c.dim();
    c.map_rows(d + extra, |src, dst| {
        dst[..d].copy_from_slice(src);
    })
    .unwrap()
}

pub fn scale(c: &PointCloud, factor: f64) -> PointCloud {
    c.map_rows(c.dim(), |src, dst| {
        for (o, x) in dst.iter_mut().zip(src) {
            *o = x * factor;
        }
    })
    .unwrap()
}
