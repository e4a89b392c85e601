//! Run manifests: which tensor file holds which (layer, epoch) representation.
//!
//! A manifest is a JSON document next to its tensor files:
//!
//! ```json
//! {
//!   "dataset": "cifar10",
//!   "bottleneck_size": 64,
//!   "layers": [{"index": 0, "name": "input", "dim": 3072}, ...],
//!   "epochs": [0, 10, 30],
//!   "point_ids": [17, 42, ...],
//!   "files": [{"layer": 0, "epoch": 0, "path": "l00_e0000.rga"}, ...],
//!   "loss_log": "loss.csv"
//! }
//! ```
//!
//! Paths are relative to the manifest's directory. Epoch 0 is the untrained network.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::losslog::{read_loss_log, write_loss_log, LossLog, LossLogError};
use super::tensor::{read_header, read_tensor, write_tensor, Tensor, TensorError};
use crate::geometry::{GeometryError, PointCloud};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const LAYER_COUNT: usize = 11;
pub const INPUT_LAYER: usize = 0;
pub const BOTTLENECK_LAYER: usize = 5;
pub const OUTPUT_LAYER: usize = 10;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("malformed manifest: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("layer list not contiguous: position {position} holds layer {found}")]
    NonContiguousLayers { position: usize, found: usize },
    #[error("expected {LAYER_COUNT} layers, found {0}")]
    LayerCount(usize),
    #[error("epochs must be non-empty and strictly increasing")]
    BadEpochs,
    #[error("need at least 3 point ids, found {0}")]
    TooFewPoints(usize),
    #[error("duplicate point id {0}")]
    DuplicatePointId(u64),
    #[error("no file for layer {layer} at epoch {epoch}")]
    MissingDump { layer: usize, epoch: u32 },
    #[error("more than one file for layer {layer} at epoch {epoch}")]
    DuplicateDump { layer: usize, epoch: u32 },
    #[error("layer {0} is not part of the run")]
    UnknownLayer(usize),
    #[error("epoch {0} is not part of the run")]
    UnknownEpoch(u32),
    #[error("runs hold different samples")]
    SampleMismatch,
    #[error("cannot subsample {requested} of {available} points (minimum 3)")]
    SubsampleSize { requested: usize, available: usize },
    #[error("{path}: {source}")]
    Tensor { path: PathBuf, source: TensorError },
    #[error("loss log: {0}")]
    LossLog(#[from] LossLogError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerDescriptor {
    pub index: usize,
    pub name: String,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DumpFile {
    pub layer: usize,
    pub epoch: u32,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub dataset: String,
    pub bottleneck_size: usize,
    pub layers: Vec<LayerDescriptor>,
    pub epochs: Vec<u32>,
    pub point_ids: Vec<u64>,
    pub files: Vec<DumpFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_log: Option<String>,
}

impl RunManifest {
    /// Checks everything that does not need the filesystem.
    pub fn validate_structure(&self) -> Result<(), ManifestError> {
        for (position, layer) in self.layers.iter().enumerate() {
            if layer.index != position {
                return Err(ManifestError::NonContiguousLayers { position, found: layer.index });
            }
        }
        if self.layers.len() != LAYER_COUNT {
            return Err(ManifestError::LayerCount(self.layers.len()));
        }
        let bottleneck = &self.layers[BOTTLENECK_LAYER];
        if bottleneck.dim != self.bottleneck_size {
            return Err(ManifestError::ShapeMismatch(format!(
                "bottleneck layer has dim {} but bottleneck_size is {}",
                bottleneck.dim, self.bottleneck_size
            )));
        }
        if self.epochs.is_empty() || self.epochs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ManifestError::BadEpochs);
        }
        if self.point_ids.len() < 3 {
            return Err(ManifestError::TooFewPoints(self.point_ids.len()));
        }
        let mut seen = HashSet::new();
        for &id in &self.point_ids {
            if !seen.insert(id) {
                return Err(ManifestError::DuplicatePointId(id));
            }
        }
        let mut dumps = HashSet::new();
        for f in &self.files {
            if f.layer >= self.layers.len() {
                return Err(ManifestError::UnknownLayer(f.layer));
            }
            if !self.epochs.contains(&f.epoch) {
                return Err(ManifestError::UnknownEpoch(f.epoch));
            }
            if !dumps.insert((f.layer, f.epoch)) {
                return Err(ManifestError::DuplicateDump { layer: f.layer, epoch: f.epoch });
            }
        }
        for &epoch in &self.epochs {
            for layer in 0..self.layers.len() {
                if !dumps.contains(&(layer, epoch)) {
                    return Err(ManifestError::MissingDump { layer, epoch });
                }
            }
        }
        Ok(())
    }

    pub fn file_for(&self, layer: usize, epoch: u32) -> Option<&str> {
        self.files
            .iter()
            .find(|f| f.layer == layer && f.epoch == epoch)
            .map(|f| f.path.as_str())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ManifestError> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|source| ManifestError::Io { path: path.to_owned(), source })
    }
}

/// Anything that can hand out aligned per-layer clouds for a set of epochs.
pub trait LayerSource {
    fn bottleneck_size(&self) -> usize;
    fn layer_count(&self) -> usize;
    fn epochs(&self) -> &[u32];
    fn point_ids(&self) -> &[u64];
    fn cloud(&self, layer: usize, epoch: u32) -> Result<PointCloud, ManifestError>;

    fn last_epoch(&self) -> u32 {
        *self.epochs().last().expect("runs hold at least one epoch")
    }
}

/// A validated run on disk. Tensors are read only when a cloud is requested.
#[derive(Debug, Clone)]
pub struct Run {
    manifest: RunManifest,
    manifest_path: PathBuf,
    root: PathBuf,
    /// Row indices of the current view into every tensor, ascending.
    rows: Option<Vec<usize>>,
    point_ids: Vec<u64>,
}

fn resolve_manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_owned()
    }
}

/// Loads a manifest (or a directory holding `manifest.json`) and validates
/// every invariant eagerly, including tensor headers and the loss log.
pub fn load_run(path: impl AsRef<Path>) -> Result<Run, ManifestError> {
    let manifest_path = resolve_manifest_path(path.as_ref());
    if !manifest_path.is_file() {
        return Err(ManifestError::MissingFile(manifest_path));
    }
    let text = fs::read_to_string(&manifest_path)
        .map_err(|source| ManifestError::Io { path: manifest_path.clone(), source })?;
    let manifest: RunManifest = serde_json::from_str(&text)?;
    manifest.validate_structure()?;
    let root = manifest_path.parent().map(Path::to_owned).unwrap_or_default();

    let n = manifest.point_ids.len() as u64;
    for f in &manifest.files {
        let path = root.join(&f.path);
        if !path.is_file() {
            return Err(ManifestError::MissingFile(path));
        }
        let header =
            read_header(&path).map_err(|source| ManifestError::Tensor { path: path.clone(), source })?;
        let expected = [n, manifest.layers[f.layer].dim as u64];
        if header.dims != expected {
            return Err(ManifestError::ShapeMismatch(format!(
                "{} has dims {:?}, expected {:?} for layer {}",
                path.display(),
                header.dims,
                expected,
                f.layer
            )));
        }
    }
    if let Some(log) = &manifest.loss_log {
        let path = root.join(log);
        if !path.is_file() {
            return Err(ManifestError::MissingFile(path));
        }
        read_loss_log(&path)?;
    }

    let point_ids = manifest.point_ids.clone();
    Ok(Run { manifest, manifest_path, root, rows: None, point_ids })
}

/// `n` distinct row indices out of `available`, ascending, fixed by `seed`.
/// Panics if `n > available`.
pub fn sample_rows(available: usize, n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks = index::sample(&mut rng, available, n).into_vec();
    picks.sort_unstable();
    picks
}

impl Run {
    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    pub fn manifest_path(&self) -> &Path {
        &self.manifest_path
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn n(&self) -> usize {
        self.point_ids.len()
    }

    /// Row indices (into the dumped tensors) of the current view.
    pub fn selected_rows(&self) -> Option<&[usize]> {
        self.rows.as_deref()
    }

    /// Keeps the same `n` randomly chosen samples across every layer and epoch.
    pub fn subsample(&self, n: usize, seed: u64) -> Result<Run, ManifestError> {
        let available = self.n();
        if n < 3 || n > available {
            return Err(ManifestError::SubsampleSize { requested: n, available });
        }
        let picks = sample_rows(available, n, seed);
        let rows: Vec<usize> = match &self.rows {
            Some(current) => picks.iter().map(|&p| current[p]).collect(),
            None => picks.clone(),
        };
        let point_ids = picks.iter().map(|&p| self.point_ids[p]).collect();
        Ok(Run { rows: Some(rows), point_ids, ..self.clone() })
    }

    pub fn loss_log(&self) -> Result<Option<LossLog>, ManifestError> {
        match &self.manifest.loss_log {
            Some(p) => Ok(Some(read_loss_log(self.root.join(p))?)),
            None => Ok(None),
        }
    }
}

impl LayerSource for Run {
    fn bottleneck_size(&self) -> usize {
        self.manifest.bottleneck_size
    }

    fn layer_count(&self) -> usize {
        self.manifest.layers.len()
    }

    fn epochs(&self) -> &[u32] {
        &self.manifest.epochs
    }

    fn point_ids(&self) -> &[u64] {
        &self.point_ids
    }

    fn cloud(&self, layer: usize, epoch: u32) -> Result<PointCloud, ManifestError> {
        if layer >= self.layer_count() {
            return Err(ManifestError::UnknownLayer(layer));
        }
        let rel = self.manifest.file_for(layer, epoch).ok_or(ManifestError::UnknownEpoch(epoch))?;
        let path = self.root.join(rel);
        let tensor = read_tensor(&path).map_err(|source| ManifestError::Tensor { path: path.clone(), source })?;
        let cloud = tensor
            .to_cloud(self.manifest.point_ids.clone())
            .map_err(|source| ManifestError::Tensor { path, source })?;
        match &self.rows {
            Some(rows) => Ok(cloud.select(rows)?),
            None => Ok(cloud),
        }
    }
}

/// Clouds held in memory, indexed by epoch then layer.
#[derive(Debug, Clone, PartialEq)]
pub struct InMemoryRun {
    bottleneck_size: usize,
    epochs: Vec<u32>,
    clouds: BTreeMap<u32, Vec<PointCloud>>,
    point_ids: Vec<u64>,
}

impl InMemoryRun {
    /// Every epoch must carry the same number of layers and every cloud the same point ids.
    pub fn new(bottleneck_size: usize, per_epoch: Vec<(u32, Vec<PointCloud>)>) -> Result<Self, ManifestError> {
        let epochs: Vec<u32> = per_epoch.iter().map(|(e, _)| *e).collect();
        if epochs.is_empty() || epochs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ManifestError::BadEpochs);
        }
        let layers = per_epoch[0].1.len();
        let point_ids = per_epoch[0]
            .1
            .first()
            .ok_or(ManifestError::LayerCount(0))?
            .point_ids()
            .to_vec();
        for (_, clouds) in &per_epoch {
            if clouds.len() != layers {
                return Err(ManifestError::LayerCount(clouds.len()));
            }
            if clouds.iter().any(|c| c.point_ids() != point_ids.as_slice()) {
                return Err(ManifestError::SampleMismatch);
            }
        }
        Ok(Self { bottleneck_size, epochs, clouds: per_epoch.into_iter().collect(), point_ids })
    }

    /// Writes tensors, the loss log and a manifest into `dir`, returning the manifest.
    pub fn save(
        &self,
        dir: impl AsRef<Path>,
        dataset: &str,
        layer_names: &[&str],
        loss_log: Option<&LossLog>,
    ) -> Result<RunManifest, ManifestError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|source| ManifestError::Io { path: dir.to_owned(), source })?;
        let first = &self.clouds[&self.epochs[0]];
        let layers = first
            .iter()
            .enumerate()
            .map(|(index, c)| LayerDescriptor {
                index,
                name: layer_names.get(index).map_or_else(|| format!("layer{index}"), |s| s.to_string()),
                dim: c.dim(),
            })
            .collect();
        let mut files = Vec::new();
        for (&epoch, clouds) in &self.clouds {
            for (layer, cloud) in clouds.iter().enumerate() {
                let name = format!("l{layer:02}_e{epoch:04}.rga");
                let path = dir.join(&name);
                write_tensor(&path, &Tensor::from_cloud(cloud))
                    .map_err(|source| ManifestError::Tensor { path, source })?;
                files.push(DumpFile { layer, epoch, path: name });
            }
        }
        let loss_name = match loss_log {
            Some(log) => {
                write_loss_log(dir.join("loss.csv"), log)?;
                Some("loss.csv".to_string())
            }
            None => None,
        };
        let manifest = RunManifest {
            dataset: dataset.to_string(),
            bottleneck_size: self.bottleneck_size,
            layers,
            epochs: self.epochs.clone(),
            point_ids: self.point_ids.clone(),
            files,
            loss_log: loss_name,
        };
        manifest.save(dir.join(MANIFEST_FILE))?;
        Ok(manifest)
    }
}

impl LayerSource for InMemoryRun {
    fn bottleneck_size(&self) -> usize {
        self.bottleneck_size
    }

    fn layer_count(&self) -> usize {
        self.clouds[&self.epochs[0]].len()
    }

    fn epochs(&self) -> &[u32] {
        &self.epochs
    }

    fn point_ids(&self) -> &[u64] {
        &self.point_ids
    }

    fn cloud(&self, layer: usize, epoch: u32) -> Result<PointCloud, ManifestError> {
        let clouds = self.clouds.get(&epoch).ok_or(ManifestError::UnknownEpoch(epoch))?;
        clouds.get(layer).cloned().ok_or(ManifestError::UnknownLayer(layer))
    }
}
