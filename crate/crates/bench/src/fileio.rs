//! Binary dataset files.
//!
//! Layout: an 8-byte little-endian record count `n`, then `n` sorted keys
//! of 4 or 8 bytes each, little-endian. TIDs are not stored; loading assigns
//! each record its position. The key width is inferred from the file size.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use sortidx_core::{DatasetError, Key, KeyWidth, SortedDataset};

const HEADER: usize = 8;

#[derive(Debug, thiserror::Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("truncated at offset {offset}: expected {expected} bytes")]
    Truncated { offset: usize, expected: u128 },
    #[error("count mismatch at offset 0: header says {n} keys but the file holds {body} bytes of keys")]
    CountMismatch { n: u64, body: usize },
    #[error("{error} (offset {offset})")]
    Invalid { error: DatasetError, offset: usize },
}

pub fn encode(data: &SortedDataset) -> Vec<u8> {
    let width = data.width().bytes();
    let mut out = Vec::with_capacity(HEADER + data.len() * width);
    out.extend_from_slice(&(data.len() as u64).to_le_bytes());
    for key in data.keys() {
        out.extend_from_slice(&key.to_le_bytes()[..width]);
    }
    out
}

/// Parses a dataset image. An empty dataset is reported as 64-bit.
pub fn decode(buf: &[u8]) -> Result<SortedDataset, FileError> {
    let Some(header) = buf.get(..HEADER) else {
        return Err(FileError::Truncated { offset: buf.len(), expected: HEADER as u128 });
    };
    let n = u64::from_le_bytes(header.try_into().unwrap());
    let body = buf.len() - HEADER;
    let (wide, narrow, have) = (n as u128 * 8, n as u128 * 4, body as u128);
    let width = if have == wide {
        KeyWidth::W64
    } else if have == narrow {
        KeyWidth::W32
    } else if have < narrow {
        return Err(FileError::Truncated { offset: buf.len(), expected: HEADER as u128 + narrow });
    } else {
        return Err(FileError::CountMismatch { n, body });
    };
    let step = width.bytes();
    let keys = buf[HEADER..].chunks_exact(step).map(|c| {
        let mut raw = [0u8; 8];
        raw[..step].copy_from_slice(c);
        Key::from_le_bytes(raw)
    });
    SortedDataset::from_keys(keys, width).map_err(|error| {
        let index = match error {
            DatasetError::Unsorted { index } | DatasetError::KeyOutOfRange { index, .. } => index,
        };
        FileError::Invalid { error, offset: HEADER + index * step }
    })
}

pub fn write_file(data: &SortedDataset, path: impl AsRef<Path>) -> Result<(), FileError> {
    let path = path.as_ref();
    let io_err = |source| FileError::Io { path: path.display().to_string(), source };
    let file = fs::File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    w.write_all(&encode(data)).map_err(io_err)?;
    w.flush().map_err(io_err)
}

pub fn read_file(path: impl AsRef<Path>) -> Result<SortedDataset, FileError> {
    let path = path.as_ref();
    let buf = fs::read(path).map_err(|source| FileError::Io { path: path.display().to_string(), source })?;
    decode(&buf)
}
