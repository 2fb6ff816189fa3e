//! AGB density maps: every pixel of a kept tree holds
//! `AGB_i / (A_p * A_i)`, so the map sums to the scene biomass in kg/m^2.

use image::{Rgb, RgbImage};

use crate::allometry::AllometricModel;
use crate::error::{Error, Result};
use crate::raster::{DepthMap, InstanceMap, Raster};
use crate::scene::{pixel_areas, plot_area_with_min, PlotArea, SceneMetadata, DEFAULT_MIN_PLOT_AREA_M2};

pub const DEFAULT_MIN_AREA_FRACTION: f64 = 0.02;

/// Non-negative, finite per-pixel density in kg/m^2, with its cached sum.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMap {
    raster: Raster<f64>,
    total: f64,
}

impl DensityMap {
    pub fn new(raster: Raster<f64>) -> Result<Self> {
        if let Some(i) = raster
            .as_slice()
            .iter()
            .position(|v| !(v.is_finite() && *v >= 0.0))
        {
            return Err(Error::InvalidArgument(format!(
                "density value {} at index {i} is negative or non-finite",
                raster.as_slice()[i]
            )));
        }
        let total = raster.as_slice().iter().sum();
        Ok(Self { raster, total })
    }

    pub fn zeros(width: u32, height: u32) -> Result<Self> {
        Self::new(Raster::filled(width, height, 0.0)?)
    }

    pub fn from_vec(width: u32, height: u32, values: Vec<f64>) -> Result<Self> {
        Self::new(Raster::from_vec(width, height, values)?)
    }

    pub fn width(&self) -> u32 {
        self.raster.width()
    }

    pub fn height(&self) -> u32 {
        self.raster.height()
    }

    pub fn values(&self) -> &[f64] {
        self.raster.as_slice()
    }

    pub fn raster(&self) -> &Raster<f64> {
        &self.raster
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn max(&self) -> f64 {
        self.values().iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityOptions {
    /// Trees covering fewer than this fraction of the image's pixels are dropped.
    pub min_area_fraction: f64,
    pub min_plot_area_m2: f64,
}

impl Default for DensityOptions {
    fn default() -> Self {
        Self {
            min_area_fraction: DEFAULT_MIN_AREA_FRACTION,
            min_plot_area_m2: DEFAULT_MIN_PLOT_AREA_M2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeContribution {
    pub id: u32,
    pub agb_kg: f64,
    pub pixels: u64,
    /// Value written to each of the tree's pixels; 0 for filtered trees.
    pub pixel_density: f64,
    pub kept: bool,
}

#[derive(Debug, Clone)]
pub struct DensityBuild {
    pub map: DensityMap,
    pub plot: PlotArea,
    /// One entry per tree visible in the instance map, in id order.
    pub contributions: Vec<TreeContribution>,
}

pub fn build_density_map(
    scene: &SceneMetadata,
    instance_map: &InstanceMap,
    model: &AllometricModel,
    min_area_fraction: f64,
) -> Result<DensityMap> {
    let opts = DensityOptions {
        min_area_fraction,
        ..DensityOptions::default()
    };
    build_density_map_with(scene, instance_map, model, &opts).map(|b| b.map)
}

pub fn build_density_map_with(
    scene: &SceneMetadata,
    instance_map: &InstanceMap,
    model: &AllometricModel,
    opts: &DensityOptions,
) -> Result<DensityBuild> {
    if !(opts.min_area_fraction.is_finite() && opts.min_area_fraction >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "min_area_fraction must be a non-negative number, got {}",
            opts.min_area_fraction
        )));
    }
    if instance_map.dims() != (scene.image_width_px, scene.image_height_px) {
        return Err(Error::InconsistentScene(format!(
            "instance map is {}x{} but scene `{}` declares {}x{}",
            instance_map.width(),
            instance_map.height(),
            scene.scene_id,
            scene.image_width_px,
            scene.image_height_px
        )));
    }
    // All trees of the scene define the plot, including ones filtered below.
    let plot = plot_area_with_min(&scene.trees, opts.min_plot_area_m2)?;
    let areas = pixel_areas(instance_map);
    let min_pixels = opts.min_area_fraction * instance_map.len() as f64;

    let mut contributions = Vec::with_capacity(areas.len());
    for (id, pixels) in areas.iter() {
        let tree = scene.tree(id).ok_or_else(|| {
            Error::InconsistentScene(format!(
                "instance index {id} has no tree in scene `{}`",
                scene.scene_id
            ))
        })?;
        let agb_kg = tree.agb_kg(model)?;
        let kept = pixels as f64 >= min_pixels;
        let pixel_density = if kept {
            agb_kg / (plot.area_m2 * pixels as f64)
        } else {
            0.0
        };
        contributions.push(TreeContribution {
            id,
            agb_kg,
            pixels,
            pixel_density,
            kept,
        });
    }

    let lookup = |idx: u32| -> f64 {
        if idx == 0 {
            return 0.0;
        }
        contributions
            .binary_search_by_key(&idx, |c| c.id)
            .map(|i| contributions[i].pixel_density)
            .unwrap_or(0.0)
    };
    let raster = instance_map.map(|&idx| lookup(idx));
    Ok(DensityBuild {
        map: DensityMap::new(raster)?,
        plot,
        contributions,
    })
}

/// Scene biomass in kg/m^2: the sum over all pixels.
pub fn integrate(map: &DensityMap) -> f64 {
    map.values().iter().sum()
}

/// Mirror about the vertical axis. Integrals are unchanged.
pub trait FlipHorizontal {
    fn flip_horizontal(&self) -> Self;
}

impl<T: Clone> FlipHorizontal for Raster<T> {
    fn flip_horizontal(&self) -> Self {
        Raster::flip_horizontal(self)
    }
}

impl FlipHorizontal for DensityMap {
    fn flip_horizontal(&self) -> Self {
        Self {
            raster: self.raster.flip_horizontal(),
            total: self.total,
        }
    }
}

impl FlipHorizontal for DepthMap {
    fn flip_horizontal(&self) -> Self {
        DepthMap::flip_horizontal(self)
    }
}

impl FlipHorizontal for RgbImage {
    fn flip_horizontal(&self) -> Self {
        image::imageops::flip_horizontal(self)
    }
}

pub fn flip_horizontal<R: FlipHorizontal>(raster: &R) -> R {
    raster.flip_horizontal()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Colormap {
    /// blue -> green -> yellow -> red
    #[default]
    Spectral,
    Grayscale,
}

impl std::str::FromStr for Colormap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "spectral" => Ok(Colormap::Spectral),
            "grayscale" | "greyscale" | "gray" => Ok(Colormap::Grayscale),
            _ => Err(Error::InvalidArgument(format!("unknown colormap `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisualizationConfig {
    pub gamma: f64,
    pub colormap: Colormap,
}

impl VisualizationConfig {
    pub fn new(gamma: f64, colormap: Colormap) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        Ok(Self { gamma, colormap })
    }
}

impl Default for VisualizationConfig {
    fn default() -> Self {
        Self {
            gamma: 0.4,
            colormap: Colormap::Spectral,
        }
    }
}

const SPECTRAL_STOPS: [[f64; 3]; 4] = [
    [0.0, 0.0, 255.0],
    [0.0, 255.0, 0.0],
    [255.0, 255.0, 0.0],
    [255.0, 0.0, 0.0],
];

fn spectral(t: f64) -> Rgb<u8> {
    let scaled = t.clamp(0.0, 1.0) * (SPECTRAL_STOPS.len() - 1) as f64;
    let seg = (scaled.floor() as usize).min(SPECTRAL_STOPS.len() - 2);
    let frac = scaled - seg as f64;
    let (a, b) = (SPECTRAL_STOPS[seg], SPECTRAL_STOPS[seg + 1]);
    let c = |k: usize| (a[k] + (b[k] - a[k]) * frac).round() as u8;
    Rgb([c(0), c(1), c(2)])
}

/// Render a map normalized by its maximum and gamma-corrected.
pub fn visualize(map: &DensityMap, cfg: &VisualizationConfig) -> RgbImage {
    let max = map.max();
    let mut img = RgbImage::new(map.width(), map.height());
    for (px, &v) in img.pixels_mut().zip(map.values()) {
        let t = if max > 0.0 { (v / max).powf(cfg.gamma) } else { 0.0 };
        *px = match cfg.colormap {
            Colormap::Spectral => spectral(t),
            Colormap::Grayscale => {
                let l = (t * 255.0).round() as u8;
                Rgb([l, l, l])
            }
        };
    }
    img
}
