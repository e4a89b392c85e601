//! Minimal binary tensor container shared with the training harness.
//!
//! Layout, all integers little-endian:
//!
//! | bytes         | content                               |
//! |---------------|---------------------------------------|
//! | 4             | magic `RGA1`                          |
//! | 1             | dtype code (`0` = f32)                |
//! | 1             | ndim                                  |
//! | 8 * ndim      | dims as u64                           |
//! | prod(dims)*4  | row-major f32 payload                 |

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::geometry::{GeometryError, PointCloud};

pub const MAGIC: [u8; 4] = *b"RGA1";
pub const DTYPE_F32: u8 = 0;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic {0:?}, expected \"RGA1\"")]
    BadMagic([u8; 4]),
    #[error("unsupported dtype code {0}")]
    UnsupportedDtype(u8),
    #[error("file ends inside the header")]
    TruncatedHeader,
    #[error("payload truncated: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: u64, found: u64 },
    #[error("{0} unexpected bytes after the payload")]
    TrailingBytes(u64),
    #[error("dims {0:?} overflow the addressable size")]
    ShapeOverflow(Vec<u64>),
    #[error("data length {len} does not match dims {dims:?}")]
    LengthMismatch { len: usize, dims: Vec<u64> },
    #[error("non-finite value at flat index {0}")]
    NonFinite(usize),
    #[error("expected a 2-d matrix, found {0} dims")]
    NotAMatrix(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Dims of a tensor file, read without touching the payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorHeader {
    pub dtype: u8,
    pub dims: Vec<u64>,
}

impl TensorHeader {
    pub fn header_len(&self) -> u64 {
        6 + 8 * self.dims.len() as u64
    }

    pub fn element_count(&self) -> Result<u64, TensorError> {
        self.dims
            .iter()
            .try_fold(1u64, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| TensorError::ShapeOverflow(self.dims.clone()))
    }

    pub fn payload_len(&self) -> Result<u64, TensorError> {
        self.element_count()?
            .checked_mul(4)
            .ok_or_else(|| TensorError::ShapeOverflow(self.dims.clone()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<u64>,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(dims: Vec<u64>, data: Vec<f32>) -> Result<Self, TensorError> {
        let header = TensorHeader { dtype: DTYPE_F32, dims };
        if header.element_count()? != data.len() as u64 || header.dims.len() > u8::MAX as usize {
            return Err(TensorError::LengthMismatch { len: data.len(), dims: header.dims });
        }
        Ok(Self { dims: header.dims, data })
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self, TensorError> {
        Self::new(vec![rows as u64, cols as u64], data)
    }

    /// Narrows a point cloud to single precision.
    pub fn from_cloud(cloud: &PointCloud) -> Self {
        let data = cloud.data().iter().map(|&v| v as f32).collect();
        Self { dims: vec![cloud.len() as u64, cloud.dim() as u64], data }
    }

    pub fn dims(&self) -> &[u64] {
        &self.dims
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Widens a 2-d tensor to a double-precision cloud with the given ids.
    pub fn to_cloud(&self, point_ids: Vec<u64>) -> Result<PointCloud, TensorError> {
        if self.dims.len() != 2 {
            return Err(TensorError::NotAMatrix(self.dims.len()));
        }
        let data = self.data.iter().map(|&v| f64::from(v)).collect();
        Ok(PointCloud::with_ids(data, self.dims[1] as usize, point_ids)?)
    }
}

pub fn encode<W: Write>(tensor: &Tensor, mut w: W) -> Result<(), TensorError> {
    if let Some(pos) = tensor.data.iter().position(|v| !v.is_finite()) {
        return Err(TensorError::NonFinite(pos));
    }
    w.write_all(&MAGIC)?;
    w.write_all(&[DTYPE_F32, tensor.dims.len() as u8])?;
    for d in &tensor.dims {
        w.write_all(&d.to_le_bytes())?;
    }
    for v in &tensor.data {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_exact_or<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<(), TensorError> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => TensorError::TruncatedHeader,
        _ => TensorError::Io(e),
    })
}

pub fn decode_header<R: Read>(r: &mut R) -> Result<TensorHeader, TensorError> {
    let mut magic = [0u8; 4];
    read_exact_or(r, &mut magic)?;
    if magic != MAGIC {
        return Err(TensorError::BadMagic(magic));
    }
    let mut meta = [0u8; 2];
    read_exact_or(r, &mut meta)?;
    if meta[0] != DTYPE_F32 {
        return Err(TensorError::UnsupportedDtype(meta[0]));
    }
    let mut dims = Vec::with_capacity(meta[1] as usize);
    for _ in 0..meta[1] {
        let mut d = [0u8; 8];
        read_exact_or(r, &mut d)?;
        dims.push(u64::from_le_bytes(d));
    }
    Ok(TensorHeader { dtype: meta[0], dims })
}

pub fn decode<R: Read>(mut r: R) -> Result<Tensor, TensorError> {
    let header = decode_header(&mut r)?;
    let expected = header.payload_len()?;
    let mut payload = Vec::new();
    // one byte past the payload is enough to detect trailing garbage
    let found = r.by_ref().take(expected + 1).read_to_end(&mut payload)? as u64;
    if found < expected {
        return Err(TensorError::TruncatedPayload { expected, found });
    }
    if found > expected {
        let mut rest = Vec::new();
        let extra = 1 + r.read_to_end(&mut rest)? as u64;
        return Err(TensorError::TrailingBytes(extra));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(Tensor { dims: header.dims, data })
}

pub fn write_tensor(path: impl AsRef<Path>, tensor: &Tensor) -> Result<(), TensorError> {
    let file = File::create(path)?;
    encode(tensor, BufWriter::new(file))
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor, TensorError> {
    decode(BufReader::new(File::open(path)?))
}

/// Reads the header and checks the file length against it.
pub fn read_header(path: impl AsRef<Path>) -> Result<TensorHeader, TensorError> {
    let file = File::open(path)?;
    let size = file.metadata()?.len();
    let header = decode_header(&mut BufReader::new(file))?;
    let expected = header.payload_len()?;
    let found = size.saturating_sub(header.header_len());
    if found < expected {
        return Err(TensorError::TruncatedPayload { expected, found });
    }
    if found > expected {
        return Err(TensorError::TrailingBytes(found - expected));
    }
    Ok(header)
}
