//! Sample manifests, train/test splitting and the total-AGB filter.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const MANIFEST_HEADER: [&str; 8] = [
    "sample_id",
    "rgb_path",
    "instance_map_path",
    "metadata_path",
    "depth_path",
    "density_map_path",
    "split",
    "total_agb",
];

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.8;
pub const DEFAULT_MAX_TOTAL_AGB: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Split {
    Train,
    Test,
    #[default]
    Unassigned,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
            Split::Unassigned => "",
        })
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            "" | "unassigned" => Ok(Split::Unassigned),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

/// One manifest row. Relative paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub sample_id: String,
    pub rgb_path: PathBuf,
    pub instance_map_path: PathBuf,
    pub metadata_path: PathBuf,
    pub depth_path: Option<PathBuf>,
    pub density_map_path: Option<PathBuf>,
    pub split: Split,
    pub total_agb: Option<f64>,
}

impl SampleRecord {
    pub fn new(
        sample_id: impl Into<String>,
        rgb_path: impl Into<PathBuf>,
        instance_map_path: impl Into<PathBuf>,
        metadata_path: impl Into<PathBuf>,
    ) -> Self {
        Self {
            sample_id: sample_id.into(),
            rgb_path: rgb_path.into(),
            instance_map_path: instance_map_path.into(),
            metadata_path: metadata_path.into(),
            depth_path: None,
            density_map_path: None,
            split: Split::Unassigned,
            total_agb: None,
        }
    }
}

fn path_str(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

pub fn parse_manifest(text: &str) -> Result<Vec<SampleRecord>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| Error::Manifest {
        line: 1,
        message: e.to_string(),
    })?;
    if header.iter().collect::<Vec<_>>() != MANIFEST_HEADER {
        return Err(Error::Manifest {
            line: 1,
            message: format!("header must be `{}`", MANIFEST_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Manifest {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let err = |message: String| Error::Manifest { line, message };
        let required = |i: usize| -> Result<&str> {
            let v = rec[i].trim();
            if v.is_empty() {
                Err(err(format!("empty `{}`", MANIFEST_HEADER[i])))
            } else {
                Ok(v)
            }
        };
        let optional = |i: usize| {
            let v = rec[i].trim();
            (!v.is_empty()).then(|| PathBuf::from(v))
        };
        let total_agb = match rec[7].trim() {
            "" => None,
            s => {
                let v: f64 = s
                    .parse()
                    .map_err(|_| err(format!("bad total_agb `{s}`")))?;
                if !(v.is_finite() && v >= 0.0) {
                    return Err(err(format!("total_agb must be finite and >= 0, got {v}")));
                }
                Some(v)
            }
        };
        out.push(SampleRecord {
            sample_id: required(0)?.to_owned(),
            rgb_path: required(1)?.into(),
            instance_map_path: required(2)?.into(),
            metadata_path: required(3)?.into(),
            depth_path: optional(4),
            density_map_path: optional(5),
            split: rec[6].parse().map_err(err)?,
            total_agb,
        });
    }
    Ok(out)
}

pub fn serialize_manifest(records: &[SampleRecord]) -> String {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(MANIFEST_HEADER).expect("in-memory write");
    for r in records {
        let opt = |p: &Option<PathBuf>| p.as_deref().map(path_str).unwrap_or_default();
        wtr.write_record([
            r.sample_id.clone(),
            path_str(&r.rgb_path),
            path_str(&r.instance_map_path),
            path_str(&r.metadata_path),
            opt(&r.depth_path),
            opt(&r.density_map_path),
            r.split.to_string(),
            r.total_agb.map(|v| v.to_string()).unwrap_or_default(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<SampleRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(&text)
}

pub fn write_manifest(path: impl AsRef<Path>, records: &[SampleRecord]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, serialize_manifest(records)).map_err(|e| Error::io(path, e))
}

/// Indices of the train and test parts, each in ascending order.
///
/// The indices are shuffled with a ChaCha8 permutation seeded by `seed`,
/// and the first `round(train_fraction * n)` become the training set.
pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n == 0 {
        return Err(Error::EmptyInput("no samples to split"));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction must lie strictly between 0 and 1, got {train_fraction}"
        )));
    }
    let n_train = (train_fraction * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (train, test) = order.split_at(n_train);
    let (mut train, mut test) = (train.to_vec(), test.to_vec());
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Partition `samples` into (train, test), preserving input order in both.
pub fn split_dataset<T: Clone>(samples: &[T], train_fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    let (train, test) = split_indices(samples.len(), train_fraction, seed)?;
    Ok((
        train.iter().map(|&i| samples[i].clone()).collect(),
        test.iter().map(|&i| samples[i].clone()).collect(),
    ))
}

/// Sets the `split` column of every record in place.
pub fn assign_splits(records: &mut [SampleRecord], train_fraction: f64, seed: u64) -> Result<()> {
    let (train, test) = split_indices(records.len(), train_fraction, seed)?;
    for i in train {
        records[i].split = Split::Train;
    }
    for i in test {
        records[i].split = Split::Test;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DroppedSample {
    pub sample: SampleRecord,
    pub reason: String,
}

/// Keeps samples whose cached total AGB is at most `max_total_agb`.
pub fn filter_samples(
    samples: Vec<SampleRecord>,
    max_total_agb: f64,
) -> Result<(Vec<SampleRecord>, Vec<DroppedSample>)> {
    if max_total_agb.is_nan() {
        return Err(Error::InvalidArgument("max_total_agb is NaN".into()));
    }
    if let Some(s) = samples.iter().find(|s| s.total_agb.is_none()) {
        return Err(Error::MissingTotal(s.sample_id.clone()));
    }
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for s in samples {
        let total = s.total_agb.expect("checked above");
        if total <= max_total_agb {
            kept.push(s);
        } else {
            dropped.push(DroppedSample {
                reason: format!("total AGB {total} kg/m^2 exceeds {max_total_agb} kg/m^2"),
                sample: s,
            });
        }
    }
    Ok((kept, dropped))
}
