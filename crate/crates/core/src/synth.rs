//! Procedural forest scenes and a pinhole renderer that turns them into
//! instance and depth maps with exact ground truth.
//!
//! World frame: x/y span the (flat) ground plane, z points up. Trees are
//! camera-facing billboards: a trunk rectangle `DBH` wide and `H` tall, and
//! a canopy ellipse `canopy_diameter` wide spanning the top half of the tree.

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::allometry::SpeciesClass;
use crate::error::{Error, Result};
use crate::raster::{DepthMap, InstanceMap, Raster};
use crate::scene::{SceneMetadata, TreeRecord};

/// Trees closer than this to the image plane are not rendered.
pub const NEAR_PLANE_M: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub n_trees: u32,
    /// (width along x, depth along y)
    pub plot_extent_m: (f64, f64),
    pub dbh_range_cm: (f64, f64),
    pub height_range_m: (f64, f64),
    pub canopy_range_m: (f64, f64),
    /// Probability that a tree is Birch (otherwise Broadleaf).
    pub species_mix: f64,
    pub image_width_px: u32,
    pub image_height_px: u32,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            n_trees: 12,
            plot_extent_m: (20.0, 20.0),
            dbh_range_cm: (10.0, 50.0),
            height_range_m: (6.0, 25.0),
            canopy_range_m: (2.0, 8.0),
            species_mix: 0.5,
            image_width_px: 224,
            image_height_px: 224,
            seed: 0,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.n_trees == 0 {
            return bad("n_trees must be positive".into());
        }
        if self.image_width_px == 0 || self.image_height_px == 0 {
            return bad("image dimensions must be positive".into());
        }
        let (w, d) = self.plot_extent_m;
        if !(w.is_finite() && d.is_finite() && w >= 0.0 && d >= 0.0) {
            return bad(format!("plot extent must be non-negative, got ({w}, {d})"));
        }
        for (name, (lo, hi), allow_zero) in [
            ("dbh_range_cm", self.dbh_range_cm, false),
            ("height_range_m", self.height_range_m, false),
            ("canopy_range_m", self.canopy_range_m, true),
        ] {
            let lower_ok = if allow_zero { lo >= 0.0 } else { lo > 0.0 };
            if !(lo.is_finite() && hi.is_finite() && lower_ok && lo <= hi) {
                return bad(format!("{name} must be a non-empty interval with a valid lower bound, got [{lo}, {hi}]"));
            }
        }
        if !(0.0..=1.0).contains(&self.species_mix) {
            return bad(format!("species_mix must lie in [0, 1], got {}", self.species_mix));
        }
        Ok(())
    }
}

pub fn generate_scene(params: &SynthParams, scene_id: impl Into<String>) -> Result<SceneMetadata> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let uniform = |rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)| {
        if lo == hi {
            lo
        } else {
            rng.random_range(lo..=hi)
        }
    };
    let trees = (1..=params.n_trees)
        .map(|id| {
            let species = if rng.random_bool(params.species_mix) {
                SpeciesClass::Birch
            } else {
                SpeciesClass::Broadleaf
            };
            TreeRecord {
                id,
                species,
                dbh_cm: uniform(&mut rng, params.dbh_range_cm),
                height_m: uniform(&mut rng, params.height_range_m),
                canopy_diameter_m: uniform(&mut rng, params.canopy_range_m),
                ground_x_m: uniform(&mut rng, (0.0, params.plot_extent_m.0)),
                ground_y_m: uniform(&mut rng, (0.0, params.plot_extent_m.1)),
            }
        })
        .collect();
    SceneMetadata::new(scene_id, params.image_width_px, params.image_height_px, trees)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    /// (x, y, z) in metres; z is height above ground.
    pub position: [f64; 3],
    /// Heading in the ground plane, radians from the +x axis.
    pub yaw: f64,
    pub focal_px: f64,
    pub image_width_px: u32,
    pub image_height_px: u32,
}

impl Camera {
    pub fn validate(&self) -> Result<()> {
        if !(self.focal_px.is_finite() && self.focal_px > 0.0) {
            return Err(Error::InvalidArgument(format!("focal_px must be positive, got {}", self.focal_px)));
        }
        if self.position[2].is_nan() || self.position[2] <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "camera height must be positive, got {}",
                self.position[2]
            )));
        }
        if self.image_width_px == 0 || self.image_height_px == 0 {
            return Err(Error::InvalidArgument("image dimensions must be positive".into()));
        }
        Ok(())
    }

    /// Eye-level camera just outside the plot, looking along +y through
    /// its middle with a 90 degree horizontal field of view.
    pub fn facing_plot(params: &SynthParams) -> Self {
        Self {
            position: [params.plot_extent_m.0 / 2.0, -2.0, 1.6],
            yaw: std::f64::consts::FRAC_PI_2,
            focal_px: params.image_width_px as f64 / 2.0,
            image_width_px: params.image_width_px,
            image_height_px: params.image_height_px,
        }
    }

    fn forward(&self) -> [f64; 2] {
        [self.yaw.cos(), self.yaw.sin()]
    }

    /// Camera-space (lateral, depth) of a ground point; lateral is positive
    /// to the right of the optical axis.
    pub fn ground_to_camera(&self, x: f64, y: f64) -> (f64, f64) {
        let [fx, fy] = self.forward();
        let (dx, dy) = (x - self.position[0], y - self.position[1]);
        (dx * fy - dy * fx, dx * fx + dy * fy)
    }

    fn principal_point(&self) -> (f64, f64) {
        (self.image_width_px as f64 / 2.0, self.image_height_px as f64 / 2.0)
    }
}

/// Billboard silhouette test in tree-local coordinates: `lateral` metres
/// from the trunk axis, `z` metres above ground.
pub fn silhouette_contains(tree: &TreeRecord, lateral: f64, z: f64) -> bool {
    let h = tree.height_m;
    let half_trunk = tree.dbh_cm / 200.0;
    if lateral.abs() <= half_trunk && (0.0..=h).contains(&z) {
        return true;
    }
    let a = tree.canopy_diameter_m / 2.0;
    if a <= 0.0 {
        return false;
    }
    let b = 0.25 * h;
    let (u, v) = (lateral / a, (z - 0.75 * h) / b);
    u * u + v * v <= 1.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rendering {
    pub instance: InstanceMap,
    pub depth: DepthMap,
}

/// Nearest tree wins at every pixel (ties broken by the smaller id). Depth
/// is camera-space forward distance divided by the image's maximum rendered
/// depth; background pixels are 1.
pub fn render_instance_map(scene: &SceneMetadata, camera: &Camera) -> Result<Rendering> {
    camera.validate()?;
    let (w, h) = (camera.image_width_px, camera.image_height_px);
    let (cx, cy) = camera.principal_point();
    let f = camera.focal_px;
    let cam_z = camera.position[2];
    let mut index = Raster::filled(w, h, 0u32)?;
    let mut zbuf = Raster::filled(w, h, f64::INFINITY)?;

    for tree in &scene.trees {
        let (lateral, depth) = camera.ground_to_camera(tree.ground_x_m, tree.ground_y_m);
        if depth <= NEAR_PLANE_M {
            continue;
        }
        let scale = f / depth;
        let half_w = (tree.dbh_cm / 200.0).max(tree.canopy_diameter_m / 2.0);
        let u_lo = cx + (lateral - half_w) * scale;
        let u_hi = cx + (lateral + half_w) * scale;
        let v_lo = cy - (tree.height_m - cam_z) * scale;
        let v_hi = cy + cam_z * scale;
        let Some((x0, x1)) = pixel_span(u_lo, u_hi, w) else { continue };
        let Some((y0, y1)) = pixel_span(v_lo, v_hi, h) else { continue };
        for y in y0..=y1 {
            let z = cam_z - ((y as f64 + 0.5 - cy) / f) * depth;
            for x in x0..=x1 {
                let s = ((x as f64 + 0.5 - cx) / f) * depth - lateral;
                if !silhouette_contains(tree, s, z) {
                    continue;
                }
                let i = index.index_of(x, y);
                let cur = zbuf.as_slice()[i];
                if depth < cur || (depth == cur && tree.id < index.as_slice()[i]) {
                    zbuf.as_mut_slice()[i] = depth;
                    index.as_mut_slice()[i] = tree.id;
                }
            }
        }
    }

    let max_depth = zbuf
        .as_slice()
        .iter()
        .copied()
        .filter(|d| d.is_finite())
        .fold(0.0, f64::max);
    let depth = zbuf.map(|&d| if d.is_finite() { d / max_depth } else { 1.0 });
    Ok(Rendering {
        instance: index,
        depth: DepthMap::new(depth)?,
    })
}

/// Pixel indices whose centres may fall in `[lo, hi]`, padded by one pixel
/// and clamped to the image.
fn pixel_span(lo: f64, hi: f64, n: u32) -> Option<(u32, u32)> {
    let a = (lo - 1.0).floor().max(0.0);
    let b = (hi + 1.0).ceil().min(n as f64 - 1.0);
    (a <= b).then_some((a as u32, b as u32))
}

/// Flat-shaded placeholder RGB: sky above the horizon, grass below, one
/// shade of green per tree.
pub fn render_rgb(scene: &SceneMetadata, camera: &Camera, instance: &InstanceMap) -> RgbImage {
    let horizon = camera.image_height_px as f64 / 2.0;
    RgbImage::from_fn(instance.width(), instance.height(), |x, y| {
        let idx = *instance.get(x, y);
        if idx == 0 {
            return if (y as f64 + 0.5) < horizon {
                Rgb([150, 190, 230])
            } else {
                Rgb([110, 140, 70])
            };
        }
        let tint = (idx.wrapping_mul(37) % 80) as u8;
        match scene.tree(idx).map(|t| t.species) {
            Some(SpeciesClass::Birch) => Rgb([90 + tint / 2, 170 + tint / 2, 60]),
            _ => Rgb([30 + tint / 2, 100 + tint, 30]),
        }
    })
}
