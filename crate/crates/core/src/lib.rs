//! Aboveground-biomass (AGB) density maps.
//!
//! A density map assigns every pixel of a visible tree the value
//! `AGB_i / (A_p * A_i)`: the tree's allometric biomass divided by the plot
//! area (m^2) and by the tree's pixel count. Summing the map yields the
//! scene biomass in kg/m^2. The crate builds such maps from instance
//! segmentations and scene metadata, reads and writes them, generates
//! synthetic scenes with exact ground truth, and evaluates predictions.

pub mod agbd;
pub mod allometry;
pub mod dataset;
pub mod density;
pub mod error;
pub mod eval;
pub mod pipeline;
pub mod raster;
pub mod scene;
pub mod synth;

pub use allometry::{density_for_species, tree_agb, AllometricModel, SpeciesClass, WoodDensity};
pub use density::{
    build_density_map, build_density_map_with, flip_horizontal, integrate, visualize, Colormap,
    DensityMap, DensityOptions, VisualizationConfig,
};
pub use error::{Error, Result};
pub use raster::{DepthMap, InstanceMap, Raster};
pub use scene::{pixel_areas, plot_area, PixelAreaTable, PlotArea, SceneMetadata, TreeRecord};
