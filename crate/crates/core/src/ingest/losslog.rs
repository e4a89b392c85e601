//! Per-epoch test-set losses, stored as CSV with header `epoch,recon,kl,elbo`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const HEADER: [&str; 4] = ["epoch", "recon", "kl", "elbo"];

#[derive(Debug, Error)]
pub enum LossLogError {
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("header must be `epoch,recon,kl,elbo`, found `{0}`")]
    BadHeader(String),
    #[error("epoch {epoch} does not follow epoch {previous}")]
    NonIncreasingEpochs { previous: u32, epoch: u32 },
    #[error("non-finite loss at epoch {0}")]
    NonFinite(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub epoch: u32,
    pub recon: f64,
    pub kl: f64,
    pub elbo: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct LossLog {
    records: Vec<LossRecord>,
}

impl LossLog {
    pub fn new(records: Vec<LossRecord>) -> Result<Self, LossLogError> {
        for w in records.windows(2) {
            if w[1].epoch <= w[0].epoch {
                return Err(LossLogError::NonIncreasingEpochs { previous: w[0].epoch, epoch: w[1].epoch });
            }
        }
        if let Some(r) = records
            .iter()
            .find(|r| !(r.recon.is_finite() && r.kl.is_finite() && r.elbo.is_finite()))
        {
            return Err(LossLogError::NonFinite(r.epoch));
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[LossRecord] {
        &self.records
    }

    pub fn kl_series(&self) -> Vec<(u32, f64)> {
        self.records.iter().map(|r| (r.epoch, r.kl)).collect()
    }

    pub fn recon_series(&self) -> Vec<(u32, f64)> {
        self.records.iter().map(|r| (r.epoch, r.recon)).collect()
    }
}

pub fn read_loss_log(path: impl AsRef<Path>) -> Result<LossLog, LossLogError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header = rdr.headers()?.clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(LossLogError::BadHeader(header.iter().collect::<Vec<_>>().join(",")));
    }
    let records = rdr.deserialize().collect::<Result<Vec<LossRecord>, _>>()?;
    LossLog::new(records)
}

pub fn write_loss_log(path: impl AsRef<Path>, log: &LossLog) -> Result<(), LossLogError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in &log.records {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
