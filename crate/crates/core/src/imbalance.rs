//! Information imbalance between two representations of the same samples.
//!
//! `delta(A -> B) = 2 / N^2 * sum_i rank_B(i, nn_A(i))`, where `nn_A(i)` is the
//! nearest neighbor of `i` in space A and `rank_B` is its 1-based distance rank
//! from `i` in space B. Small values mean A predicts B's neighborhoods well.

use serde::Serialize;

use crate::error::EstimateError;
use crate::geometry::{map_distance_row_pairs, nearest_in_row, rank_in_row, PointCloud};

/// Both directions of the imbalance between spaces A and B.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImbalanceResult {
    /// delta(A -> B)
    pub delta_ab: f64,
    /// delta(B -> A)
    pub delta_ba: f64,
    pub n: usize,
}

/// `2 * rank_sum / N^2`, evaluated in exactly this order.
pub fn imbalance_from_rank_sum(rank_sum: u64, n: usize) -> f64 {
    2.0 * rank_sum as f64 / (n as f64 * n as f64)
}

/// Computes delta(A -> B) and delta(B -> A) in one streaming pass over both clouds.
///
/// The clouds must hold the same point ids in the same order.
pub fn information_imbalance(a: &PointCloud, b: &PointCloud) -> Result<ImbalanceResult, EstimateError> {
    if a.point_ids() != b.point_ids() {
        return Err(EstimateError::SampleMismatch);
    }
    let n = a.len();
    if n < 3 {
        return Err(EstimateError::DegenerateCloud { retained: n });
    }
    let ranks = map_distance_row_pairs(a, b, |i, row_a, row_b| {
        let nn_a = nearest_in_row(i, row_a);
        let nn_b = nearest_in_row(i, row_b);
        (rank_in_row(i, nn_a, row_b) as u64, rank_in_row(i, nn_b, row_a) as u64)
    });
    let (sum_ab, sum_ba) = ranks.iter().fold((0u64, 0u64), |(x, y), &(p, q)| (x + p, y + q));

    let (lo, hi) = (n as u64, (n as u64) * (n as u64 - 1));
    assert!((lo..=hi).contains(&sum_ab) && (lo..=hi).contains(&sum_ba));

    Ok(ImbalanceResult {
        delta_ab: imbalance_from_rank_sum(sum_ab, n),
        delta_ba: imbalance_from_rank_sum(sum_ba, n),
        n,
    })
}

/// `2 (ab - ba) / (ab + ba)`. Positive when B is the more informative space.
pub fn relative_ii_difference(delta_ab: f64, delta_ba: f64) -> Result<f64, EstimateError> {
    let total = delta_ab + delta_ba;
    if total == 0.0 {
        return Err(EstimateError::DivisionByZero);
    }
    Ok(2.0 * (delta_ab - delta_ba) / total)
}
