//! "AGBD v1" density-map files.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "AGBD"
//! 4       1     version (1)
//! 5       3     reserved, zero
//! 8       4     width,  u32 little-endian
//! 12      4     height, u32 little-endian
//! 16      4*w*h pixel values, f32 little-endian, row-major, top-left origin
//! ```

use std::path::Path;

use crate::density::DensityMap;
use crate::error::{Error, Result};
use crate::raster::Raster;

pub const MAGIC: [u8; 4] = *b"AGBD";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 16;

fn format_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Format {
        offset: offset as u64,
        message: message.into(),
    }
}

/// Serializes the map, rounding each value to f32.
pub fn encode(map: &DensityMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * map.values().len());
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&[0, 0, 0]);
    out.extend_from_slice(&map.width().to_le_bytes());
    out.extend_from_slice(&map.height().to_le_bytes());
    for &v in map.values() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<DensityMap> {
    for (i, &m) in MAGIC.iter().enumerate() {
        match bytes.get(i) {
            None => return Err(format_err(bytes.len(), "truncated magic")),
            Some(&b) if b != m => {
                return Err(format_err(i, format!("bad magic byte 0x{b:02x}, expected 0x{m:02x}")))
            }
            Some(_) => {}
        }
    }
    if bytes.len() < HEADER_LEN {
        return Err(format_err(
            bytes.len(),
            format!("truncated header: {} of {HEADER_LEN} bytes", bytes.len()),
        ));
    }
    if bytes[4] != VERSION {
        return Err(format_err(4, format!("unsupported version {}", bytes[4])));
    }
    if let Some(i) = (5..8).find(|&i| bytes[i] != 0) {
        return Err(format_err(i, "reserved byte is not zero"));
    }
    let read_u32 = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let (width, height) = (read_u32(8), read_u32(12));
    if width == 0 {
        return Err(format_err(8, "width is zero"));
    }
    if height == 0 {
        return Err(format_err(12, "height is zero"));
    }
    let payload = width as u64 * height as u64 * 4;
    let expected = HEADER_LEN as u64 + payload;
    let actual = bytes.len() as u64;
    if actual < expected {
        return Err(format_err(
            bytes.len(),
            format!("truncated pixel data: {width}x{height} needs {expected} bytes, file has {actual}"),
        ));
    }
    if actual > expected {
        return Err(format_err(
            expected as usize,
            format!("{} trailing bytes after pixel data", actual - expected),
        ));
    }
    let mut values = Vec::with_capacity((width as usize) * (height as usize));
    for (i, chunk) in bytes[HEADER_LEN..].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !(v.is_finite() && v >= 0.0) {
            return Err(format_err(
                HEADER_LEN + 4 * i,
                format!("pixel value {v} is negative or non-finite"),
            ));
        }
        values.push(v as f64);
    }
    DensityMap::new(Raster::from_vec(width, height, values)?)
}

pub fn write_file(path: impl AsRef<Path>, map: &DensityMap) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode(map)).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: impl AsRef<Path>) -> Result<DensityMap> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}
