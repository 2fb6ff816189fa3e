#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn agbmap() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_agbmap"));
    cmd.env_remove("AGBMAP_WORKERS").env_remove("RUST_LOG");
    cmd
}

pub fn run(args: &[&str]) -> Output {
    agbmap().args(args).output().expect("spawn agbmap")
}

pub fn run_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "agbmap {args:?} failed ({:?}): {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Parses `path,total` lines printed by `agbmap integrate`.
pub fn parse_integrals(stdout: &str) -> Vec<(PathBuf, f64)> {
    stdout
        .lines()
        .map(|l| {
            let (path, v) = l.rsplit_once(',').unwrap();
            (PathBuf::from(path), v.parse().unwrap())
        })
        .collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        ((a - b) / b).abs()
    }
}

/// Scene AGB computed from the metadata side only: tree attributes from the
/// TOML document, pixel counts from the raw PNG, plot from a min/max scan.
pub fn metadata_side_total(metadata: &Path, instance_png: &Path, min_area_fraction: f64) -> f64 {
    let doc: toml::Table = std::fs::read_to_string(metadata).unwrap().parse().unwrap();
    let img = image::open(instance_png).unwrap().into_luma16();
    let total_px = (img.width() * img.height()) as f64;
    let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
    for px in img.pixels() {
        if px[0] != 0 {
            *counts.entry(px[0] as u32).or_default() += 1;
        }
    }
    let trees = doc["trees"].as_array().unwrap();
    let num = |t: &toml::Value, k: &str| t[k].as_float().unwrap();
    let xs: Vec<f64> = trees.iter().map(|t| num(t, "ground_x_m")).collect();
    let ys: Vec<f64> = trees.iter().map(|t| num(t, "ground_y_m")).collect();
    let span = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        s[s.len() - 1] - s[0]
    };
    let plot = span(&xs) * span(&ys);
    let mut sum = 0.0;
    for t in trees {
        let id = t["id"].as_integer().unwrap() as u32;
        let a = *counts.get(&id).unwrap_or(&0) as f64;
        if a == 0.0 || a < min_area_fraction * total_px {
            continue;
        }
        let rho = match t["species"].as_str().unwrap() {
            "birch" => 0.65,
            "broadleaf" => 0.55,
            other => panic!("unexpected species {other}"),
        };
        let d = num(t, "dbh_cm");
        let agb = 0.0673 * (rho * d * d * num(t, "height_m")).powf(0.967);
        sum += agb / plot;
    }
    sum
}

/// All regular files under `dir`, keyed by relative path.
pub fn dir_contents(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_file() {
            out.insert(path.strip_prefix(dir).unwrap().to_owned(), std::fs::read(&path).unwrap());
        }
    }
    out
}

pub fn manifest_rows(path: &Path) -> Vec<BTreeMap<String, String>> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let headers = rdr.headers().unwrap().clone();
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            headers.iter().map(str::to_owned).zip(r.iter().map(str::to_owned)).collect()
        })
        .collect()
}

pub fn write_manifest_rows(path: &Path, n: usize) {
    let mut text = String::from(
        "sample_id,rgb_path,instance_map_path,metadata_path,depth_path,density_map_path,split,total_agb\n",
    );
    for i in 0..n {
        text.push_str(&format!("s{i:05},s{i}.png,s{i}_inst.png,s{i}.toml,,,,{}\n", (i % 37) as f64 * 0.5));
    }
    std::fs::write(path, text).unwrap();
}
