//! Exact Euclidean neighbor and rank computation over dense point clouds.
//!
//! Everything here is brute force: distances are evaluated for every pair,
//! in double precision, and ties between equal distances are always broken by
//! ascending point index. Rows are processed in fixed-size blocks that run in
//! parallel; every row's result depends only on that row, so output is
//! identical for any thread count.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::ops::Range;

use rayon::prelude::*;
use thiserror::Error;

/// Rows per block in the streaming distance pass.
const ROW_BLOCK: usize = 32;

const LANES: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("a point cloud needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("point dimension must be positive")]
    ZeroDimension,
    #[error("data length {len} is not a multiple of the dimension {dim}")]
    RaggedData { len: usize, dim: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("{ids} point ids supplied for {rows} rows")]
    IdCountMismatch { ids: usize, rows: usize },
    #[error("duplicate point id {0}")]
    DuplicateId(u64),
    #[error("neighborhood depth {k} is invalid for {n} points")]
    InvalidDepth { k: usize, n: usize },
    #[error("rows {first} and {second} are bitwise identical")]
    DuplicateRowsDetected { first: usize, second: usize },
    #[error("index pair ({i}, {j}) is invalid for {n} points")]
    OutOfRange { i: usize, j: usize, n: usize },
    #[error("point {j} is not among the {k} stored neighbors of point {i}")]
    BeyondDepth { i: usize, j: usize, k: usize },
}

/// One representation space: N points in D dimensions, stored row-major.
///
/// Point ids identify samples across representations (layers, epochs,
/// architectures); two clouds with equal ids describe the same inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    data: Vec<f64>,
    dim: usize,
    point_ids: Vec<u64>,
}

impl PointCloud {
    /// Builds a cloud whose point ids are `0..N`.
    pub fn new(data: Vec<f64>, dim: usize) -> Result<Self, GeometryError> {
        if dim == 0 {
            return Err(GeometryError::ZeroDimension);
        }
        let ids = (0..(data.len() / dim) as u64).collect();
        Self::with_ids(data, dim, ids)
    }

    pub fn with_ids(data: Vec<f64>, dim: usize, point_ids: Vec<u64>) -> Result<Self, GeometryError> {
        if dim == 0 {
            return Err(GeometryError::ZeroDimension);
        }
        if !data.len().is_multiple_of(dim) {
            return Err(GeometryError::RaggedData { len: data.len(), dim });
        }
        let rows = data.len() / dim;
        if point_ids.len() != rows {
            return Err(GeometryError::IdCountMismatch { ids: point_ids.len(), rows });
        }
        if rows < 3 {
            return Err(GeometryError::TooFewPoints(rows));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite { row: pos / dim, col: pos % dim });
        }
        let mut seen = HashSet::with_capacity(rows);
        for &id in &point_ids {
            if !seen.insert(id) {
                return Err(GeometryError::DuplicateId(id));
            }
        }
        Ok(Self { data, dim, point_ids })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, GeometryError> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(GeometryError::RaggedData { len: row.len(), dim });
            }
            data.extend_from_slice(row);
        }
        Self::new(data, dim)
    }

    pub fn len(&self) -> usize {
        self.point_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.point_ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point_ids(&self) -> &[u64] {
        &self.point_ids
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// Keeps the given rows (in the given order) together with their ids.
    pub fn select(&self, rows: &[usize]) -> Result<Self, GeometryError> {
        let mut data = Vec::with_capacity(rows.len() * self.dim);
        let mut ids = Vec::with_capacity(rows.len());
        for &r in rows {
            if r >= self.len() {
                return Err(GeometryError::OutOfRange { i: r, j: r, n: self.len() });
            }
            data.extend_from_slice(self.row(r));
            ids.push(self.point_ids[r]);
        }
        Self::with_ids(data, self.dim, ids)
    }

    /// Applies `f` to every row, producing a cloud of dimension `dim` with the same ids.
    pub fn map_rows<F>(&self, dim: usize, mut f: F) -> Result<Self, GeometryError>
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        let mut data = vec![0.0; self.len() * dim];
        if dim > 0 {
            for (src, dst) in self.rows().zip(data.chunks_exact_mut(dim)) {
                f(src, dst);
            }
        }
        Self::with_ids(data, dim, self.point_ids.clone())
    }
}

/// Squared Euclidean distance with a fixed eight-lane accumulation order.
///
/// Element `c` always lands in lane `c % 8`, so the result is symmetric in its
/// arguments and unchanged when all-zero columns are appended.
#[inline]
pub fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; LANES];
    let mut ca = a.chunks_exact(LANES);
    let mut cb = b.chunks_exact(LANES);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for l in 0..LANES {
            let d = x[l] - y[l];
            acc[l] += d * d;
        }
    }
    for (l, (x, y)) in ca.remainder().iter().zip(cb.remainder()).enumerate() {
        let d = x - y;
        acc[l] += d * d;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]))
}

/// Total order on (squared distance, index): the tie-break used everywhere.
#[inline]
pub(crate) fn closer(d_a: f64, idx_a: usize, d_b: f64, idx_b: usize) -> Ordering {
    d_a.total_cmp(&d_b).then(idx_a.cmp(&idx_b))
}

fn distance_block(cloud: &PointCloud, rows: Range<usize>, out: &mut Vec<f64>) {
    let n = cloud.len();
    out.clear();
    out.resize(rows.len() * n, 0.0);
    for j in 0..n {
        let xj = cloud.row(j);
        for (b, i) in rows.clone().enumerate() {
            out[b * n + j] = squared_euclidean(cloud.row(i), xj);
        }
    }
}

fn block_starts(n: usize) -> Vec<usize> {
    (0..n).step_by(ROW_BLOCK).collect()
}

/// Calls `f(i, row)` for every point, where `row[j]` is the squared distance
/// from `i` to `j` (`row[i] == 0`). Results come back in point order.
pub(crate) fn map_distance_rows<T, F>(cloud: &PointCloud, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &[f64]) -> T + Sync,
{
    let n = cloud.len();
    block_starts(n)
        .into_par_iter()
        .flat_map_iter(|start| {
            let end = (start + ROW_BLOCK).min(n);
            let mut buf = Vec::new();
            distance_block(cloud, start..end, &mut buf);
            (start..end)
                .map(|i| f(i, &buf[(i - start) * n..(i - start + 1) * n]))
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Like [`map_distance_rows`] over two aligned clouds at once.
pub(crate) fn map_distance_row_pairs<T, F>(a: &PointCloud, b: &PointCloud, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &[f64], &[f64]) -> T + Sync,
{
    let n = a.len();
    assert_eq!(n, b.len());
    block_starts(n)
        .into_par_iter()
        .flat_map_iter(|start| {
            let end = (start + ROW_BLOCK).min(n);
            let (mut buf_a, mut buf_b) = (Vec::new(), Vec::new());
            distance_block(a, start..end, &mut buf_a);
            distance_block(b, start..end, &mut buf_b);
            (start..end)
                .map(|i| {
                    let r = (i - start) * n..(i - start + 1) * n;
                    f(i, &buf_a[r.clone()], &buf_b[r])
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Index of the nearest neighbor of `i` given its squared-distance row.
#[inline]
pub(crate) fn nearest_in_row(i: usize, row: &[f64]) -> usize {
    let mut best = usize::MAX;
    let mut best_d = f64::INFINITY;
    for (j, &d) in row.iter().enumerate() {
        if j == i {
            continue;
        }
        // strict comparison keeps the lowest index among equal distances
        if best == usize::MAX || d < best_d {
            best = j;
            best_d = d;
        }
    }
    best
}

/// 1-based rank of `j` among all other points in `i`'s squared-distance row.
#[inline]
pub(crate) fn rank_in_row(i: usize, j: usize, row: &[f64]) -> usize {
    let dj = row[j];
    let mut rank = 1;
    for (k, &d) in row.iter().enumerate() {
        if k == i || k == j {
            continue;
        }
        if d < dj || (d == dj && k < j) {
            rank += 1;
        }
    }
    rank
}

/// What to do with bitwise-identical rows when building neighbor tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DuplicatePolicy {
    /// Keep duplicates; they sit at distance zero and are ordered by index.
    #[default]
    Keep,
    /// Fail with [`GeometryError::DuplicateRowsDetected`].
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

/// The `k` nearest neighbors of every point, self excluded, closest first.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborTable {
    k: usize,
    entries: Vec<Neighbor>,
}

/// A 1-based distance rank of `target` as seen from `source`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankQuery {
    pub source: usize,
    pub target: usize,
    pub rank: usize,
}

impl NeighborTable {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.entries.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[Neighbor] {
        &self.entries[i * self.k..(i + 1) * self.k]
    }

    /// Rank lookup; only answers for targets stored in the table.
    pub fn rank_of(&self, i: usize, j: usize) -> Result<RankQuery, GeometryError> {
        let n = self.len();
        if i >= n || j >= n || i == j {
            return Err(GeometryError::OutOfRange { i, j, n });
        }
        self.neighbors(i)
            .iter()
            .position(|nb| nb.index == j)
            .map(|p| RankQuery { source: i, target: j, rank: p + 1 })
            .ok_or(GeometryError::BeyondDepth { i, j, k: self.k })
    }
}

/// Exact k-nearest-neighbor table by blocked all-pairs search.
pub fn compute_neighbors(
    cloud: &PointCloud,
    k: usize,
    duplicates: DuplicatePolicy,
) -> Result<NeighborTable, GeometryError> {
    let n = cloud.len();
    if k == 0 || k > n - 1 {
        return Err(GeometryError::InvalidDepth { k, n });
    }
    let rows = map_distance_rows(cloud, |i, row| {
        if duplicates == DuplicatePolicy::Reject {
            for (j, &d) in row.iter().enumerate().skip(i + 1) {
                if d == 0.0 && rows_identical(cloud.row(i), cloud.row(j)) {
                    return Err(GeometryError::DuplicateRowsDetected { first: i, second: j });
                }
            }
        }
        let mut cand: Vec<(f64, usize)> = row
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(j, &d)| (d, j))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| closer(a.0, a.1, b.0, b.1);
        if k < cand.len() {
            cand.select_nth_unstable_by(k - 1, cmp);
            cand.truncate(k);
        }
        cand.sort_unstable_by(cmp);
        Ok(cand
            .into_iter()
            .map(|(d, j)| Neighbor { index: j, distance: d.sqrt() })
            .collect::<Vec<_>>())
    });
    let mut entries = Vec::with_capacity(n * k);
    for row in rows {
        entries.extend(row?);
    }
    Ok(NeighborTable { k, entries })
}

fn rows_identical(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Rank of `j` in the full distance ordering from `i`, computed directly from the cloud.
pub fn rank_of(cloud: &PointCloud, i: usize, j: usize) -> Result<RankQuery, GeometryError> {
    let n = cloud.len();
    if i >= n || j >= n || i == j {
        return Err(GeometryError::OutOfRange { i, j, n });
    }
    let xi = cloud.row(i);
    let row: Vec<f64> = cloud.rows().map(|xk| squared_euclidean(xi, xk)).collect();
    Ok(RankQuery { source: i, target: j, rank: rank_in_row(i, j, &row) })
}
