//! Activation dumps on disk: tensor files, run manifests and loss logs.

pub mod losslog;
pub mod manifest;
pub mod tensor;

pub use losslog::{read_loss_log, write_loss_log, LossLog, LossLogError, LossRecord};
pub use manifest::{
    load_run, sample_rows, DumpFile, InMemoryRun, LayerDescriptor, LayerSource, ManifestError, Run, RunManifest,
    BOTTLENECK_LAYER, INPUT_LAYER, LAYER_COUNT, MANIFEST_FILE, OUTPUT_LAYER,
};
pub use tensor::{read_header, read_tensor, write_tensor, Tensor, TensorError, TensorHeader};
