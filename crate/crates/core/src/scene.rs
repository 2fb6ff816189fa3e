//! Scene metadata: trees with their ground positions, plot area, and
//! per-tree visible pixel counts.

use std::collections::{BTreeMap, HashSet};

use crate::allometry::{AllometricModel, SpeciesClass};
use crate::error::{Error, Result};
use crate::raster::InstanceMap;

/// Plots smaller than this (m^2) are rejected as degenerate.
pub const DEFAULT_MIN_PLOT_AREA_M2: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TreeRecord {
    pub id: u32,
    pub species: SpeciesClass,
    pub dbh_cm: f64,
    pub height_m: f64,
    pub canopy_diameter_m: f64,
    pub ground_x_m: f64,
    pub ground_y_m: f64,
}

impl TreeRecord {
    pub fn validate(&self) -> Result<()> {
        let invalid = |field, value| Error::InvalidAttribute {
            field,
            value,
            tree_id: Some(self.id),
        };
        if self.id == 0 {
            return Err(invalid("id", 0.0));
        }
        if !(self.dbh_cm.is_finite() && self.dbh_cm > 0.0) {
            return Err(invalid("dbh_cm", self.dbh_cm));
        }
        if !(self.height_m.is_finite() && self.height_m > 0.0) {
            return Err(invalid("height_m", self.height_m));
        }
        if !(self.canopy_diameter_m.is_finite() && self.canopy_diameter_m >= 0.0) {
            return Err(invalid("canopy_diameter_m", self.canopy_diameter_m));
        }
        if !self.ground_x_m.is_finite() {
            return Err(invalid("ground_x_m", self.ground_x_m));
        }
        if !self.ground_y_m.is_finite() {
            return Err(invalid("ground_y_m", self.ground_y_m));
        }
        Ok(())
    }

    /// Biomass of this tree in kg.
    pub fn agb_kg(&self, model: &AllometricModel) -> Result<f64> {
        model
            .tree_agb(self.species.wood_density(), self.dbh_cm, self.height_m)
            .map_err(|e| match e {
                Error::InvalidAttribute { field, value, .. } => Error::InvalidAttribute {
                    field,
                    value,
                    tree_id: Some(self.id),
                },
                other => other,
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneMetadata {
    pub scene_id: String,
    pub image_width_px: u32,
    pub image_height_px: u32,
    pub trees: Vec<TreeRecord>,
}

impl SceneMetadata {
    pub fn new(
        scene_id: impl Into<String>,
        image_width_px: u32,
        image_height_px: u32,
        trees: Vec<TreeRecord>,
    ) -> Result<Self> {
        let scene = Self {
            scene_id: scene_id.into(),
            image_width_px,
            image_height_px,
            trees,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        if self.image_width_px == 0 || self.image_height_px == 0 {
            return Err(Error::Metadata(format!(
                "scene `{}`: image dimensions must be positive",
                self.scene_id
            )));
        }
        if self.trees.is_empty() {
            return Err(Error::EmptyScene);
        }
        let mut seen = HashSet::with_capacity(self.trees.len());
        for tree in &self.trees {
            tree.validate()?;
            if !seen.insert(tree.id) {
                return Err(Error::Metadata(format!(
                    "scene `{}`: duplicate tree id {}",
                    self.scene_id, tree.id
                )));
            }
        }
        Ok(())
    }

    pub fn tree(&self, id: u32) -> Option<&TreeRecord> {
        self.trees.iter().find(|t| t.id == id)
    }

    pub fn image_pixels(&self) -> u64 {
        self.image_width_px as u64 * self.image_height_px as u64
    }
}

/// Axis-aligned ground bounding box of a set of trees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotArea {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
    pub area_m2: f64,
}

pub fn plot_area(trees: &[TreeRecord]) -> Result<PlotArea> {
    plot_area_with_min(trees, DEFAULT_MIN_PLOT_AREA_M2)
}

/// Bounding box over all tree ground positions. Boxes with zero area or an
/// area below `min_area_m2` are rejected.
pub fn plot_area_with_min(trees: &[TreeRecord], min_area_m2: f64) -> Result<PlotArea> {
    let first = trees.first().ok_or(Error::EmptyScene)?;
    let mut plot = PlotArea {
        min_x: first.ground_x_m,
        min_y: first.ground_y_m,
        max_x: first.ground_x_m,
        max_y: first.ground_y_m,
        area_m2: 0.0,
    };
    for t in &trees[1..] {
        plot.min_x = plot.min_x.min(t.ground_x_m);
        plot.min_y = plot.min_y.min(t.ground_y_m);
        plot.max_x = plot.max_x.max(t.ground_x_m);
        plot.max_y = plot.max_y.max(t.ground_y_m);
    }
    plot.area_m2 = (plot.max_x - plot.min_x) * (plot.max_y - plot.min_y);
    if plot.area_m2.is_nan() || plot.area_m2 <= 0.0 || plot.area_m2 < min_area_m2 {
        return Err(Error::DegeneratePlot {
            area_m2: plot.area_m2,
            min_area_m2,
        });
    }
    Ok(plot)
}

/// Visible pixel count per tree id. Ids not present count as zero.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PixelAreaTable(BTreeMap<u32, u64>);

impl PixelAreaTable {
    pub fn get(&self, id: u32) -> u64 {
        self.0.get(&id).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.0.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, u64)> + '_ {
        self.0.iter().map(|(&id, &n)| (id, n))
    }
}

pub fn pixel_areas(instance_map: &InstanceMap) -> PixelAreaTable {
    let mut counts = BTreeMap::new();
    for &idx in instance_map.as_slice() {
        if idx != 0 {
            *counts.entry(idx).or_insert(0u64) += 1;
        }
    }
    PixelAreaTable(counts)
}

#[cfg(test)]
pub(crate) fn tree_at(id: u32, x: f64, y: f64) -> TreeRecord {
    TreeRecord {
        id,
        species: SpeciesClass::Birch,
        dbh_cm: 20.0,
        height_m: 12.0,
        canopy_diameter_m: 4.0,
        ground_x_m: x,
        ground_y_m: y,
    }
}
