//! File-level operations behind the `agbmap` subcommands.

use std::path::{Component, Path, PathBuf};

use image::{DynamicImage, ImageBuffer, Luma};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use tracing::{info, warn};

use crate::agbd;
use crate::allometry::AllometricModel;
use crate::dataset::instance::{encode_instance_map_gray16, encode_png, read_instance_map};
use crate::dataset::manifest::{
    assign_splits, filter_samples, read_manifest, write_manifest, SampleRecord, Split,
    DEFAULT_MAX_TOTAL_AGB,
};
use crate::dataset::metadata::{read_scene_metadata, write_scene_metadata};
use crate::density::{
    build_density_map_with, integrate, visualize, DensityMap, DensityOptions, VisualizationConfig,
};
use crate::error::{Error, Result};
use crate::eval::{median_baseline, PredictionPair};
use crate::raster::DepthMap;
use crate::synth::{generate_scene, render_instance_map, render_rgb, Camera, SynthParams};

pub const MANIFEST_FILE: &str = "manifest.csv";
pub const DROPPED_FILE: &str = "dropped.csv";

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn absolute(path: &Path) -> Result<PathBuf> {
    std::path::absolute(path).map_err(|e| Error::io(path, e))
}

/// `path` expressed relative to directory `base` (both made absolute
/// lexically). Falls back to the absolute path when no relative form exists.
pub fn relative_to(path: &Path, base: &Path) -> Result<PathBuf> {
    let path = normalize(&absolute(path)?);
    let base = normalize(&absolute(base)?);
    let (pc, bc): (Vec<_>, Vec<_>) = (path.components().collect(), base.components().collect());
    if pc.first() != bc.first() {
        return Ok(path);
    }
    let common = pc.iter().zip(&bc).take_while(|(a, b)| a == b).count();
    let mut rel = PathBuf::new();
    for _ in common..bc.len() {
        rel.push("..");
    }
    for c in &pc[common..] {
        rel.push(c.as_os_str());
    }
    Ok(rel)
}

fn normalize(path: &Path) -> PathBuf {
    let mut out = PathBuf::new();
    for c in path.components() {
        match c {
            Component::CurDir => {}
            Component::ParentDir => {
                out.pop();
            }
            other => out.push(other.as_os_str()),
        }
    }
    out
}

/// Maps a sample id to a safe file stem.
pub fn file_stem_for(sample_id: &str) -> String {
    sample_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect()
}

fn depth_png(depth: &DepthMap) -> Result<Vec<u8>> {
    let px: Vec<u16> = depth
        .values()
        .iter()
        .map(|d| (d * u16::MAX as f64).round() as u16)
        .collect();
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(depth.width(), depth.height(), px).expect("dimensions match");
    encode_png(&DynamicImage::ImageLuma16(buf))
}

/// Writes the map and returns it as stored (values rounded to f32), so
/// cached totals agree with what `integrate` reports for the file.
fn write_map(path: &Path, map: &DensityMap) -> Result<DensityMap> {
    let bytes = agbd::encode(map);
    write_bytes(path, &bytes)?;
    agbd::decode(&bytes)
}

fn worker_pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers == 0 {
        return Err(Error::InvalidArgument("worker count must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))
}

#[derive(Debug, Clone)]
pub struct SynthCorpusOptions {
    pub n_scenes: usize,
    /// Template for every scene; its `seed` is replaced per scene.
    pub params: SynthParams,
    pub seed: u64,
    pub density: DensityOptions,
    pub workers: usize,
}

/// Writes a synthetic corpus (metadata, RGB, instance, depth and AGBD files
/// plus `manifest.csv`) into `out_dir`. Scenes whose plot is degenerate are
/// kept in the manifest without a density map.
pub fn synth_corpus(opts: &SynthCorpusOptions, out_dir: &Path) -> Result<Vec<SampleRecord>> {
    if opts.n_scenes == 0 {
        return Err(Error::InvalidArgument("n_scenes must be positive".into()));
    }
    opts.params.validate()?;
    create_dir(out_dir)?;
    let mut seeder = ChaCha8Rng::seed_from_u64(opts.seed);
    let seeds: Vec<u64> = (0..opts.n_scenes).map(|_| seeder.random()).collect();
    let model = AllometricModel::default();

    let build = |(i, &scene_seed): (usize, &u64)| -> Result<SampleRecord> {
        let id = format!("scene_{i:05}");
        let params = SynthParams {
            seed: scene_seed,
            ..opts.params.clone()
        };
        let scene = generate_scene(&params, id.clone())?;
        let camera = Camera::facing_plot(&params);
        let rendering = render_instance_map(&scene, &camera)?;

        let mut rec = SampleRecord::new(
            id.clone(),
            format!("{id}_rgb.png"),
            format!("{id}_instance.png"),
            format!("{id}.toml"),
        );
        rec.depth_path = Some(format!("{id}_depth.png").into());
        write_scene_metadata(out_dir.join(&rec.metadata_path), &scene)?;
        let rgb = render_rgb(&scene, &camera, &rendering.instance);
        write_bytes(&out_dir.join(&rec.rgb_path), &encode_png(&DynamicImage::ImageRgb8(rgb))?)?;
        write_bytes(
            &out_dir.join(&rec.instance_map_path),
            &encode_instance_map_gray16(&rendering.instance)?,
        )?;
        write_bytes(&out_dir.join(format!("{id}_depth.png")), &depth_png(&rendering.depth)?)?;

        match build_density_map_with(&scene, &rendering.instance, &model, &opts.density) {
            Ok(built) => {
                let path = PathBuf::from(format!("{id}.agbd"));
                let stored = write_map(&out_dir.join(&path), &built.map)?;
                rec.density_map_path = Some(path);
                rec.total_agb = Some(integrate(&stored));
            }
            Err(e @ Error::DegeneratePlot { .. }) => warn!(sample = %id, "no density map: {e}"),
            Err(e) => return Err(e),
        }
        Ok(rec)
    };

    let records = worker_pool(opts.workers)?
        .install(|| seeds.par_iter().enumerate().map(build).collect::<Result<Vec<_>>>())?;
    write_manifest(out_dir.join(MANIFEST_FILE), &records)?;
    info!(scenes = records.len(), dir = %out_dir.display(), "synthetic corpus written");
    Ok(records)
}

#[derive(Debug, Clone, Copy)]
pub struct GenMapsOptions {
    pub density: DensityOptions,
    pub max_total_agb: f64,
    pub workers: usize,
}

impl Default for GenMapsOptions {
    fn default() -> Self {
        Self {
            density: DensityOptions::default(),
            max_total_agb: DEFAULT_MAX_TOTAL_AGB,
            workers: 1,
        }
    }
}

#[derive(Debug, Default)]
pub struct GenMapsOutcome {
    pub kept: Vec<SampleRecord>,
    /// (sample id, reason) for samples excluded by the pipeline's filters.
    pub dropped: Vec<(String, String)>,
    /// (sample id, diagnostic) for samples whose inputs could not be used.
    pub failed: Vec<(String, String)>,
}

enum MapResult {
    Kept(SampleRecord),
    Dropped(String, String),
    Failed(String, String),
}

/// Builds density maps for every manifest row and writes them, plus an
/// updated `manifest.csv` and `dropped.csv`, into `out_dir`.
///
/// Per-sample failures do not stop the run; they are reported in the outcome.
pub fn gen_maps(manifest_path: &Path, out_dir: &Path, opts: &GenMapsOptions) -> Result<GenMapsOutcome> {
    let records = read_manifest(manifest_path)?;
    if records.is_empty() {
        return Err(Error::EmptyInput("manifest has no rows"));
    }
    create_dir(out_dir)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let model = AllometricModel::default();

    let process = |rec: &SampleRecord| -> MapResult {
        let id = rec.sample_id.clone();
        let result = (|| -> Result<std::result::Result<SampleRecord, String>> {
            let scene = read_scene_metadata(base.join(&rec.metadata_path))?;
            let instance = read_instance_map(base.join(&rec.instance_map_path))?;
            let built = match build_density_map_with(&scene, &instance, &model, &opts.density) {
                Ok(b) => b,
                Err(e @ Error::DegeneratePlot { .. }) => return Ok(Err(e.to_string())),
                Err(e) => return Err(e),
            };
            let encoded = agbd::encode(&built.map);
            let total = integrate(&agbd::decode(&encoded)?);
            let filtered = SampleRecord {
                total_agb: Some(total),
                ..rec.clone()
            };
            let (mut kept, dropped) = filter_samples(vec![filtered], opts.max_total_agb)?;
            if let Some(d) = dropped.into_iter().next() {
                return Ok(Err(d.reason));
            }
            let mut out = kept.pop().expect("one sample in, one out");
            let map_path = out_dir.join(format!("{}.agbd", file_stem_for(&id)));
            write_bytes(&map_path, &encoded)?;
            let rebase = |p: &Path| relative_to(&base.join(p), out_dir);
            out.rgb_path = rebase(&rec.rgb_path)?;
            out.instance_map_path = rebase(&rec.instance_map_path)?;
            out.metadata_path = rebase(&rec.metadata_path)?;
            out.depth_path = rec.depth_path.as_deref().map(rebase).transpose()?;
            out.density_map_path = Some(relative_to(&map_path, out_dir)?);
            Ok(Ok(out))
        })();
        match result {
            Ok(Ok(r)) => MapResult::Kept(r),
            Ok(Err(reason)) => MapResult::Dropped(id, reason),
            Err(e) => MapResult::Failed(id, e.to_string()),
        }
    };

    let results: Vec<MapResult> =
        worker_pool(opts.workers)?.install(|| records.par_iter().map(process).collect());

    let mut outcome = GenMapsOutcome::default();
    for r in results {
        match r {
            MapResult::Kept(rec) => outcome.kept.push(rec),
            MapResult::Dropped(id, reason) => {
                warn!(sample = %id, "dropped: {reason}");
                outcome.dropped.push((id, reason));
            }
            MapResult::Failed(id, msg) => {
                tracing::error!(sample = %id, "failed: {msg}");
                outcome.failed.push((id, msg));
            }
        }
    }
    write_manifest(out_dir.join(MANIFEST_FILE), &outcome.kept)?;
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["sample_id", "reason"]).expect("in-memory write");
    for (id, reason) in &outcome.dropped {
        wtr.write_record([id, reason]).expect("in-memory write");
    }
    write_bytes(&out_dir.join(DROPPED_FILE), &wtr.into_inner().expect("in-memory flush"))?;
    info!(
        kept = outcome.kept.len(),
        dropped = outcome.dropped.len(),
        failed = outcome.failed.len(),
        "density maps generated"
    );
    Ok(outcome)
}

pub fn integrate_file(path: &Path) -> Result<f64> {
    agbd::read_file(path).map(|m| integrate(&m))
}

/// Assigns the split column and writes the manifest to `output`.
pub fn split_manifest(manifest_path: &Path, output: &Path, train_fraction: f64, seed: u64) -> Result<Vec<SampleRecord>> {
    let mut records = read_manifest(manifest_path)?;
    if records.is_empty() {
        return Err(Error::EmptyInput("manifest has no rows"));
    }
    assign_splits(&mut records, train_fraction, seed)?;
    if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
        let from = manifest_path.parent().unwrap_or(Path::new("."));
        if absolute(dir)? != absolute(from)? {
            for r in &mut records {
                let rebase = |p: &Path| relative_to(&from.join(p), dir);
                r.rgb_path = rebase(&r.rgb_path)?;
                r.instance_map_path = rebase(&r.instance_map_path)?;
                r.metadata_path = rebase(&r.metadata_path)?;
                r.depth_path = r.depth_path.as_deref().map(rebase).transpose()?;
                r.density_map_path = r.density_map_path.as_deref().map(rebase).transpose()?;
            }
        }
    }
    write_manifest(output, &records)?;
    Ok(records)
}

/// Median-of-train predictions for every test row.
pub fn baseline_predictions(records: &[SampleRecord]) -> Result<Vec<PredictionPair>> {
    let total = |r: &SampleRecord| r.total_agb.ok_or_else(|| Error::MissingTotal(r.sample_id.clone()));
    let train: Vec<f64> = records
        .iter()
        .filter(|r| r.split == Split::Train)
        .map(total)
        .collect::<Result<_>>()?;
    if train.is_empty() {
        return Err(Error::EmptyInput("manifest has no train rows"));
    }
    let model = median_baseline(&train)?;
    records
        .iter()
        .filter(|r| r.split == Split::Test)
        .map(|r| Ok(PredictionPair::new(r.sample_id.clone(), model.predict(), total(r)?)))
        .collect()
}

pub fn visualize_file(map_path: &Path, cfg: &VisualizationConfig, out_png: &Path) -> Result<()> {
    let map = agbd::read_file(map_path)?;
    let img = visualize(&map, cfg);
    write_bytes(out_png, &encode_png(&DynamicImage::ImageRgb8(img))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_paths() {
        assert_eq!(
            relative_to(Path::new("/a/b/c.png"), Path::new("/a/d")).unwrap(),
            PathBuf::from("../b/c.png")
        );
        assert_eq!(
            relative_to(Path::new("/a/b/./x/../c.png"), Path::new("/a/b")).unwrap(),
            PathBuf::from("c.png")
        );
    }

    #[test]
    fn stems_are_sanitized() {
        assert_eq!(file_stem_for("site 3/img#2.v1"), "site_3_img_2.v1");
    }

    #[test]
    fn baseline_needs_train_rows() {
        let mut r = SampleRecord::new("a", "a.png", "a_i.png", "a.toml");
        r.total_agb = Some(3.0);
        r.split = Split::Test;
        assert!(matches!(baseline_predictions(&[r.clone()]), Err(Error::EmptyInput(_))));
        let mut t = r.clone();
        t.sample_id = "b".into();
        t.split = Split::Train;
        t.total_agb = Some(7.0);
        let preds = baseline_predictions(&[r, t]).unwrap();
        assert_eq!(preds, vec![PredictionPair::new("a", 7.0, 3.0)]);
    }
}
