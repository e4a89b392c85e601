//! Point clouds with known intrinsic dimension.
//!
//! Points are drawn in their intrinsic coordinates, mapped into the ambient
//! space by a random isometry (orthonormal columns from the QR factorization
//! of a Gaussian matrix), then perturbed by isotropic Gaussian noise. Each
//! stage draws from its own ChaCha stream of the same seed.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, PointCloud};

const POINT_STREAM: u64 = 0;
const EMBED_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid manifold spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldKind {
    /// Uniform on `[0, 1]^d`.
    Hypercube,
    /// Uniform on the unit sphere `S^d`, which lives in `d + 1` coordinates.
    Hypersphere,
    /// Standard normal in `d` coordinates.
    Gaussian,
    /// `x` uniform on `[0, 4 pi]` and `y = sin(x)`, as two aligned clouds.
    SinPair,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManifoldSpec {
    pub kind: ManifoldKind,
    pub intrinsic_dim: usize,
    pub ambient_dim: usize,
    pub n: usize,
    pub noise: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Synthetic {
    Single(PointCloud),
    /// `(x, sin x)` for [`ManifoldKind::SinPair`].
    Pair(PointCloud, PointCloud),
}

impl ManifoldSpec {
    /// Coordinates needed before embedding.
    pub fn source_dim(&self) -> usize {
        match self.kind {
            ManifoldKind::Hypersphere => self.intrinsic_dim + 1,
            _ => self.intrinsic_dim,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidSpec(m));
        if self.intrinsic_dim == 0 {
            return bad("intrinsic dimension must be positive".into());
        }
        if self.kind == ManifoldKind::SinPair && self.intrinsic_dim != 1 {
            return bad("sin_pair has intrinsic dimension 1".into());
        }
        if self.ambient_dim < self.source_dim() {
            return bad(format!(
                "ambient dimension {} is below the {} coordinates the manifold needs",
                self.ambient_dim,
                self.source_dim()
            ));
        }
        if self.n < 3 {
            return bad(format!("need at least 3 points, got {}", self.n));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad(format!("noise must be finite and non-negative, got {}", self.noise));
        }
        Ok(())
    }
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Points in intrinsic coordinates (before embedding and noise).
///
/// For `SinPair` this returns the `x` values; see [`generate`] for the pair.
pub fn sample_intrinsic(spec: &ManifoldSpec) -> Result<PointCloud, SynthError> {
    spec.validate()?;
    let mut r = rng(spec.seed, POINT_STREAM);
    let dim = spec.source_dim();
    let mut data = Vec::with_capacity(spec.n * dim);
    match spec.kind {
        ManifoldKind::Hypercube => {
            let u = Uniform::new(0.0, 1.0).expect("valid range");
            data.extend((0..spec.n * dim).map(|_| u.sample(&mut r)));
        }
        ManifoldKind::Gaussian => {
            data.extend((0..spec.n * dim).map(|_| r.sample::<f64, _>(StandardNormal)));
        }
        ManifoldKind::Hypersphere => {
            for _ in 0..spec.n {
                loop {
                    let v: Vec<f64> = (0..dim).map(|_| r.sample(StandardNormal)).collect();
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if norm > 1e-12 {
                        data.extend(v.iter().map(|x| x / norm));
                        break;
                    }
                }
            }
        }
        ManifoldKind::SinPair => {
            let u = Uniform::new_inclusive(0.0, 4.0 * PI).expect("valid range");
            data.extend((0..spec.n).map(|_| u.sample(&mut r)));
        }
    }
    Ok(PointCloud::new(data, dim)?)
}

/// `ambient x source` matrix with orthonormal columns, Haar-distributed.
pub fn random_isometry<R: Rng>(source_dim: usize, ambient_dim: usize, rng: &mut R) -> DMatrix<f64> {
    assert!(source_dim <= ambient_dim);
    let g = DMatrix::from_fn(ambient_dim, source_dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..source_dim {
        if r[(c, c)] < 0.0 {
            q.column_mut(c).neg_mut();
        }
    }
    q
}

fn embed(cloud: &PointCloud, map: &DMatrix<f64>) -> Result<PointCloud, GeometryError> {
    let ambient = map.nrows();
    cloud.map_rows(ambient, |src, dst| {
        for (a, out) in dst.iter_mut().enumerate() {
            *out = src.iter().enumerate().map(|(s, x)| map[(a, s)] * x).sum();
        }
    })
}

fn add_noise<R: Rng>(cloud: PointCloud, sigma: f64, rng: &mut R) -> Result<PointCloud, GeometryError> {
    if sigma == 0.0 {
        return Ok(cloud);
    }
    cloud.map_rows(cloud.dim(), |src, dst| {
        for (o, x) in dst.iter_mut().zip(src) {
            *o = x + sigma * rng.sample::<f64, _>(StandardNormal);
        }
    })
}

/// Deterministic per seed: the same spec always yields bitwise-identical clouds.
pub fn generate(spec: &ManifoldSpec) -> Result<Synthetic, SynthError> {
    let base = sample_intrinsic(spec)?;
    let mut embed_rng = rng(spec.seed, EMBED_STREAM);
    let mut noise_rng = rng(spec.seed, NOISE_STREAM);
    let mut finish = |cloud: &PointCloud| -> Result<PointCloud, SynthError> {
        let map = random_isometry(cloud.dim(), spec.ambient_dim, &mut embed_rng);
        Ok(add_noise(embed(cloud, &map)?, spec.noise, &mut noise_rng)?)
    };
    match spec.kind {
        ManifoldKind::SinPair => {
            let y = base.map_rows(1, |src, dst| dst[0] = src[0].sin())?;
            let x = finish(&base)?;
            let y = finish(&y)?;
            Ok(Synthetic::Pair(x, y))
        }
        _ => Ok(Synthetic::Single(finish(&base)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: ManifoldKind, d: usize, ambient: usize) -> ManifoldSpec {
        ManifoldSpec { kind, intrinsic_dim: d, ambient_dim: ambient, n: 50, noise: 0.0, seed: 3 }
    }

    #[test]
    fn isometry_has_orthonormal_columns() {
        let q = random_isometry(4, 30, &mut rng(9, 0));
        let gram = q.transpose() * &q;
        for i in 0..4 {
            for j in 0..4 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - target).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shapes_and_ranges() {
        let Synthetic::Single(c) = generate(&spec(ManifoldKind::Hypersphere, 3, 10)).unwrap() else {
            panic!()
        };
        assert_eq!((c.len(), c.dim()), (50, 10));
        for row in c.rows() {
            let norm: f64 = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
        let base = sample_intrinsic(&spec(ManifoldKind::Hypercube, 2, 5)).unwrap();
        assert!(base.data().iter().all(|&v| (0.0..1.0).contains(&v)));
        let Synthetic::Pair(x, y) = generate(&spec(ManifoldKind::SinPair, 1, 1)).unwrap() else {
            panic!()
        };
        assert_eq!(x.point_ids(), y.point_ids());
        for (a, b) in x.rows().zip(y.rows()) {
            // a 1-d isometry is +-1
            assert!((b[0].abs() - a[0].sin().abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_specs() {
        let mut s = spec(ManifoldKind::SinPair, 2, 3);
        assert!(matches!(generate(&s), Err(SynthError::InvalidSpec(_))));
        s = spec(ManifoldKind::Hypersphere, 3, 3);
        assert!(matches!(generate(&s), Err(SynthError::InvalidSpec(_))));
        s = spec(ManifoldKind::Hypercube, 2, 3);
        s.n = 2;
        assert!(matches!(generate(&s), Err(SynthError::InvalidSpec(_))));
        s.n = 10;
        s.noise = -1.0;
        assert!(matches!(generate(&s), Err(SynthError::InvalidSpec(_))));
        s = spec(ManifoldKind::Gaussian, 0, 3);
        assert!(matches!(generate(&s), Err(SynthError::InvalidSpec(_))));
    }

    #[test]
    fn same_seed_same_bits() {
        let mut s = spec(ManifoldKind::Gaussian, 3, 8);
        s.noise = 0.1;
        assert_eq!(generate(&s).unwrap(), generate(&s).unwrap());
        s.seed += 1;
        let a = generate(&spec(ManifoldKind::Gaussian, 3, 8)).unwrap();
        assert_ne!(generate(&s).unwrap(), a);
    }
}
