//! Instance-segmentation PNGs.
//!
//! Two encodings are accepted, chosen by the PNG's bit depth:
//! 16-bit grayscale stores tree indices directly; 8-bit RGB(A) stores one
//! colour per tree and needs a [`ColorIndexTable`] sidecar
//! (`<stem>.colors.csv`, columns `r,g,b,index`, index 0 = background).

use std::collections::HashMap;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, ImageFormat, Luma, Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::raster::{InstanceMap, Raster};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ColorIndexTable {
    by_color: HashMap<[u8; 3], u32>,
    by_index: HashMap<u32, [u8; 3]>,
}

impl ColorIndexTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare_background(&mut self, color: [u8; 3]) -> Result<()> {
        if let Some(&idx) = self.by_color.get(&color) {
            if idx != 0 {
                return Err(Error::ColorTable(format!(
                    "color {color:?} already maps to index {idx}"
                )));
            }
        }
        self.by_color.insert(color, 0);
        self.by_index.entry(0).or_insert(color);
        Ok(())
    }

    pub fn insert(&mut self, color: [u8; 3], index: u32) -> Result<()> {
        if index == 0 {
            return self.declare_background(color);
        }
        if let Some(&prev) = self.by_color.get(&color) {
            return Err(Error::ColorTable(format!(
                "color {color:?} listed twice (indices {prev} and {index})"
            )));
        }
        if let Some(prev) = self.by_index.get(&index) {
            return Err(Error::ColorTable(format!(
                "index {index} assigned to both {prev:?} and {color:?}"
            )));
        }
        self.by_color.insert(color, index);
        self.by_index.insert(index, color);
        Ok(())
    }

    pub fn lookup(&self, color: [u8; 3]) -> Option<u32> {
        self.by_color.get(&color).copied()
    }

    pub fn color_of(&self, index: u32) -> Option<[u8; 3]> {
        self.by_index.get(&index).copied()
    }

    pub fn len(&self) -> usize {
        self.by_color.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_color.is_empty()
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = rdr
            .headers()
            .map_err(|e| Error::ColorTable(e.to_string()))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["r", "g", "b", "index"] {
            return Err(Error::ColorTable("header must be `r,g,b,index`".into()));
        }
        let mut table = Self::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::ColorTable(e.to_string()))?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let field = |i: usize| rec.get(i).unwrap_or("");
            let channel = |i: usize| {
                field(i).parse::<u8>().map_err(|_| {
                    Error::ColorTable(format!("line {line}: bad channel value `{}`", field(i)))
                })
            };
            let color = [channel(0)?, channel(1)?, channel(2)?];
            let index = field(3).parse::<u32>().map_err(|_| {
                Error::ColorTable(format!("line {line}: bad index `{}`", field(3)))
            })?;
            table
                .insert(color, index)
                .map_err(|e| Error::ColorTable(format!("line {line}: {e}")))?;
        }
        Ok(table)
    }

    /// Rows sorted by index, then colour.
    pub fn to_csv(&self) -> String {
        let mut rows: Vec<_> = self.by_color.iter().map(|(c, &i)| (i, *c)).collect();
        rows.sort();
        let mut out = String::from("r,g,b,index\n");
        for (i, [r, g, b]) in rows {
            out.push_str(&format!("{r},{g},{b},{i}\n"));
        }
        out
    }
}

/// `dir/scene.png` -> `dir/scene.colors.csv`
pub fn sidecar_path(png_path: &Path) -> PathBuf {
    png_path.with_extension("colors.csv")
}

pub fn decode_instance_map(png_bytes: &[u8], table: Option<&ColorIndexTable>) -> Result<InstanceMap> {
    let img = image::load_from_memory_with_format(png_bytes, ImageFormat::Png)?;
    match img {
        DynamicImage::ImageLuma16(buf) => {
            let (w, h) = buf.dimensions();
            Raster::from_vec(w, h, buf.into_raw().into_iter().map(u32::from).collect())
        }
        DynamicImage::ImageRgb8(buf) => decode_colors(&buf, table),
        DynamicImage::ImageRgba8(_) => decode_colors(&img.to_rgb8(), table),
        other => Err(Error::InvalidArgument(format!(
            "instance maps must be 16-bit grayscale or 8-bit RGB PNGs, got {:?}",
            other.color()
        ))),
    }
}

fn decode_colors(buf: &RgbImage, table: Option<&ColorIndexTable>) -> Result<InstanceMap> {
    let table = table.ok_or_else(|| {
        Error::ColorTable("8-bit RGB instance map needs a color table".into())
    })?;
    let (w, h) = buf.dimensions();
    let mut out = Vec::with_capacity(w as usize * h as usize);
    for (x, y, px) in buf.enumerate_pixels() {
        let [r, g, b] = px.0;
        let idx = table
            .lookup(px.0)
            .ok_or(Error::UnknownInstanceColor { r, g, b, x, y })?;
        out.push(idx);
    }
    Raster::from_vec(w, h, out)
}

/// Reads an instance PNG, loading the colour sidecar when the PNG is RGB.
pub fn read_instance_map(path: impl AsRef<Path>) -> Result<InstanceMap> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    match decode_instance_map(&bytes, None) {
        Err(Error::ColorTable(_)) => {
            let sidecar = sidecar_path(path);
            let text = std::fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
            decode_instance_map(&bytes, Some(&ColorIndexTable::from_csv(&text)?))
        }
        other => other,
    }
}

pub fn encode_png(img: &DynamicImage) -> Result<Vec<u8>> {
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png)?;
    Ok(out.into_inner())
}

pub fn encode_instance_map_gray16(map: &InstanceMap) -> Result<Vec<u8>> {
    let mut px = Vec::with_capacity(map.len());
    for &idx in map.as_slice() {
        let v = u16::try_from(idx).map_err(|_| {
            Error::InvalidArgument(format!("index {idx} does not fit a 16-bit PNG"))
        })?;
        px.push(v);
    }
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(map.width(), map.height(), px).expect("dimensions match");
    encode_png(&DynamicImage::ImageLuma16(buf))
}

pub fn encode_instance_map_rgb(map: &InstanceMap, table: &ColorIndexTable) -> Result<Vec<u8>> {
    let mut img = RgbImage::new(map.width(), map.height());
    for (px, &idx) in img.pixels_mut().zip(map.as_slice()) {
        let color = table.color_of(idx).ok_or_else(|| {
            Error::ColorTable(format!("no color for index {idx}"))
        })?;
        *px = Rgb(color);
    }
    encode_png(&DynamicImage::ImageRgb8(img))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn table() -> ColorIndexTable {
        let mut t = ColorIndexTable::new();
        t.declare_background([0, 0, 0]).unwrap();
        t.insert([255, 0, 0], 1).unwrap();
        t
    }

    #[test]
    fn background_only_image() {
        let img = RgbImage::new(5, 4);
        let bytes = encode_png(&DynamicImage::ImageRgb8(img)).unwrap();
        let m = decode_instance_map(&bytes, Some(&table())).unwrap();
        assert_eq!(m.dims(), (5, 4));
        assert!(m.as_slice().iter().all(|&v| v == 0));
    }

    #[test]
    fn red_mask() {
        let img = RgbImage::from_fn(6, 6, |x, y| {
            if x > y { Rgb([255, 0, 0]) } else { Rgb([0, 0, 0]) }
        });
        let bytes = encode_png(&DynamicImage::ImageRgb8(img)).unwrap();
        let m = decode_instance_map(&bytes, Some(&table())).unwrap();
        for y in 0..6 {
            for x in 0..6 {
                assert_eq!(*m.get(x, y), u32::from(x > y));
            }
        }
    }

    #[test]
    fn unknown_color_reports_position() {
        let mut img = RgbImage::new(4, 3);
        img.put_pixel(2, 1, Rgb([1, 2, 3]));
        let bytes = encode_png(&DynamicImage::ImageRgb8(img)).unwrap();
        match decode_instance_map(&bytes, Some(&table())) {
            Err(Error::UnknownInstanceColor { r, g, b, x, y }) => {
                assert_eq!(([r, g, b], x, y), ([1, 2, 3], 2, 1))
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(decode_instance_map(&bytes, None), Err(Error::ColorTable(_))));
    }

    #[test]
    fn random_painted_image_matches_pixel_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut t = ColorIndexTable::new();
        t.declare_background([10, 10, 10]).unwrap();
        let mut palette = vec![[10u8, 10, 10]];
        for idx in 1..=12u32 {
            let c = [idx as u8 * 20, 255 - idx as u8 * 7, (idx * 13) as u8];
            t.insert(c, idx).unwrap();
            palette.push(c);
        }
        let img = RgbImage::from_fn(37, 29, |_, _| Rgb(palette[rng.random_range(0..palette.len())]));
        let bytes = encode_png(&DynamicImage::ImageRgb8(img.clone())).unwrap();
        let m = decode_instance_map(&bytes, Some(&t)).unwrap();
        for y in 0..29 {
            for x in 0..37 {
                let c = img.get_pixel(x, y).0;
                let expected = palette.iter().position(|p| *p == c).unwrap() as u32;
                assert_eq!(*m.get(x, y), expected);
            }
        }
        // RGB re-encoding through the table reproduces the same indices
        let again = decode_instance_map(&encode_instance_map_rgb(&m, &t).unwrap(), Some(&t)).unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn gray16_round_trip_and_range() {
        let m = Raster::from_vec(3, 2, vec![0, 1, 300, 65535, 7, 0]).unwrap();
        let bytes = encode_instance_map_gray16(&m).unwrap();
        assert_eq!(decode_instance_map(&bytes, None).unwrap(), m);
        let too_big = Raster::from_vec(1, 1, vec![70_000]).unwrap();
        assert!(encode_instance_map_gray16(&too_big).is_err());
    }

    #[test]
    fn table_is_injective() {
        let mut t = table();
        assert!(t.insert([255, 0, 0], 2).is_err());
        assert!(t.insert([0, 255, 0], 1).is_err());
        assert!(t.insert([0, 0, 0], 5).is_err());
        let csv = t.to_csv();
        assert_eq!(ColorIndexTable::from_csv(&csv).unwrap(), t);
        assert!(ColorIndexTable::from_csv("r,g,b,index\n1,2,3,4\n1,2,3,5\n").is_err());
        assert!(ColorIndexTable::from_csv("r,g,b,index\n300,2,3,4\n").is_err());
        assert!(ColorIndexTable::from_csv("red,g,b,index\n").is_err());
    }

    #[test]
    fn sidecar_naming() {
        assert_eq!(
            sidecar_path(Path::new("a/b/scene_01.png")),
            PathBuf::from("a/b/scene_01.colors.csv")
        );
    }
}
