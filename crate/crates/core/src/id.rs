//! Two-nearest-neighbor (2NN) intrinsic dimension.
//!
//! For each point the ratio `mu = r2 / r1` of its second- to first-neighbor
//! distance is formed; the estimate is `n / sum(ln mu)`. Points whose first
//! neighbor sits at distance zero carry no information and are dropped from
//! both the sum and the count.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::EstimateError;
use crate::geometry::{compute_neighbors, DuplicatePolicy, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdEstimate {
    pub id: f64,
    /// Points whose `ln mu` entered the sum.
    pub n_used: usize,
    /// Points with a zero first-neighbor distance plus the trimmed tail.
    pub n_discarded: usize,
    pub discard_fraction: f64,
}

/// Neighbor-distance ratio `r2 / r1` per point, `None` where `r1 == 0`.
pub fn neighbor_ratios(cloud: &PointCloud) -> Result<Vec<Option<f64>>, EstimateError> {
    let table = compute_neighbors(cloud, 2, DuplicatePolicy::Keep)?;
    Ok((0..cloud.len())
        .map(|i| {
            let nb = table.neighbors(i);
            let (r1, r2) = (nb[0].distance, nb[1].distance);
            (r1 > 0.0).then(|| r2 / r1)
        })
        .collect())
}

/// 2NN estimate. `discard_fraction > 0` drops the `ceil(f * n)` largest ratios
/// before summing; `0` is the plain estimator.
pub fn estimate_id_2nn(cloud: &PointCloud, discard_fraction: f64) -> Result<IdEstimate, EstimateError> {
    if !(0.0..1.0).contains(&discard_fraction) {
        return Err(EstimateError::InvalidDiscardFraction(discard_fraction));
    }
    let ratios = neighbor_ratios(cloud)?;
    id_from_ratios(&ratios, discard_fraction)
}

fn id_from_ratios(ratios: &[Option<f64>], discard_fraction: f64) -> Result<IdEstimate, EstimateError> {
    let total = ratios.len();
    let valid: Vec<(usize, f64)> =
        ratios.iter().enumerate().filter_map(|(i, m)| m.map(|m| (i, m))).collect();
    if valid.len() < 3 {
        return Err(EstimateError::DegenerateCloud { retained: valid.len() });
    }

    let mut keep = vec![true; total];
    let n_trim = (discard_fraction * valid.len() as f64).ceil() as usize;
    if n_trim > 0 {
        let mut order = valid.clone();
        order.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for &(i, _) in order.iter().take(n_trim) {
            keep[i] = false;
        }
    }

    let mut n_used = 0usize;
    let mut log_sum = 0.0f64;
    for &(i, mu) in &valid {
        if keep[i] {
            n_used += 1;
            log_sum += mu.ln();
        }
    }
    if n_used < 3 {
        return Err(EstimateError::DegenerateCloud { retained: n_used });
    }
    if log_sum == 0.0 {
        return Err(EstimateError::ZeroSum);
    }
    Ok(IdEstimate {
        id: n_used as f64 / log_sum,
        n_used,
        n_discarded: total - n_used,
        discard_fraction,
    })
}

/// ID statistics over random subsamples of one size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecimationPoint {
    pub fraction: f64,
    pub n_points: usize,
    pub mean_id: f64,
    /// Sample standard deviation across seeds; zero for a single seed.
    pub std_id: f64,
    pub estimates: Vec<IdEstimate>,
}

/// Re-estimates the ID on subsamples of `fraction * N` points drawn without
/// replacement, once per seed. Used to check scale stability of an estimate.
pub fn estimate_id_decimated(
    cloud: &PointCloud,
    fractions: &[f64],
    seeds: &[u64],
    discard_fraction: f64,
) -> Result<Vec<DecimationPoint>, EstimateError> {
    if seeds.is_empty() {
        return Err(EstimateError::NoSeeds);
    }
    let n = cloud.len();
    let mut out = Vec::with_capacity(fractions.len());
    for &fraction in fractions {
        let m = (fraction * n as f64).floor();
        if !(fraction > 0.0 && fraction <= 1.0) || m < 3.0 {
            return Err(EstimateError::InvalidFraction { fraction, n });
        }
        let m = m as usize;
        let mut estimates = Vec::with_capacity(seeds.len());
        for &seed in seeds {
            let sub = if m == n {
                cloud.clone()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut rows = index::sample(&mut rng, n, m).into_vec();
                rows.sort_unstable();
                cloud.select(&rows)?
            };
            estimates.push(estimate_id_2nn(&sub, discard_fraction)?);
        }
        let k = estimates.len() as f64;
        let mean_id = estimates.iter().map(|e| e.id).sum::<f64>() / k;
        let std_id = if estimates.len() > 1 {
            (estimates.iter().map(|e| (e.id - mean_id).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
        } else {
            0.0
        };
        out.push(DecimationPoint { fraction, n_points: m, mean_id, std_id, estimates });
    }
    Ok(out)
}
