//! Row-major rasters with a top-left origin.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Raster<T> {
    width: u32,
    height: u32,
    data: Vec<T>,
}

impl<T> Raster<T> {
    pub fn from_vec(width: u32, height: u32, data: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::DimensionMismatch(format!(
                "raster dimensions must be positive, got {width}x{height}"
            )));
        }
        let expected = width as usize * height as usize;
        if data.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "{width}x{height} raster needs {expected} values, got {}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn index_of(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    pub fn get(&self, x: u32, y: u32) -> &T {
        &self.data[self.index_of(x, y)]
    }

    pub fn set(&mut self, x: u32, y: u32, value: T) {
        let i = self.index_of(x, y);
        self.data[i] = value;
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, T> {
        self.data.chunks_exact(self.width as usize)
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Raster<U> {
        Raster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<T: Clone> Raster<T> {
    pub fn filled(width: u32, height: u32, value: T) -> Result<Self> {
        Self::from_vec(width, height, vec![value; width as usize * height as usize])
    }

    /// Mirror about the vertical axis (columns reversed).
    pub fn flip_horizontal(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for row in self.rows() {
            data.extend(row.iter().rev().cloned());
        }
        Self {
            width: self.width,
            height: self.height,
            data,
        }
    }
}

/// Per-pixel tree index; 0 is background.
pub type InstanceMap = Raster<u32>;

/// Normalized depth in `[0, 1]`; background pixels hold 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap(Raster<f64>);

impl DepthMap {
    pub fn new(raster: Raster<f64>) -> Result<Self> {
        if let Some(i) = raster
            .as_slice()
            .iter()
            .position(|v| !(0.0..=1.0).contains(v))
        {
            return Err(Error::InvalidArgument(format!(
                "depth value {} at index {i} is outside [0, 1]",
                raster.as_slice()[i]
            )));
        }
        Ok(Self(raster))
    }

    pub fn raster(&self) -> &Raster<f64> {
        &self.0
    }

    pub fn width(&self) -> u32 {
        self.0.width()
    }

    pub fn height(&self) -> u32 {
        self.0.height()
    }

    pub fn values(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn flip_horizontal(&self) -> Self {
        Self(self.0.flip_horizontal())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_dimensions() {
        assert!(Raster::from_vec(0, 3, Vec::<u8>::new()).is_err());
        assert!(Raster::from_vec(2, 2, vec![0u8; 3]).is_err());
    }

    #[test]
    fn flip_reverses_columns() {
        let r = Raster::from_vec(3, 2, vec![1, 2, 3, 4, 5, 6]).unwrap();
        assert_eq!(r.flip_horizontal().as_slice(), &[3, 2, 1, 6, 5, 4]);
        assert_eq!(r.flip_horizontal().flip_horizontal(), r);
    }
}
