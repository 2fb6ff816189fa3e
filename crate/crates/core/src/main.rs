use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tracing_subscriber::EnvFilter;

use agb_density::dataset::manifest::{read_manifest, DEFAULT_MAX_TOTAL_AGB, DEFAULT_TRAIN_FRACTION};
use agb_density::density::{Colormap, DensityOptions, VisualizationConfig, DEFAULT_MIN_AREA_FRACTION};
use agb_density::eval::{evaluate, read_predictions, serialize_predictions, EvalOptions, DEFAULT_PRUNE_FRACTION};
use agb_density::pipeline::{self, GenMapsOptions, SynthCorpusOptions};
use agb_density::scene::DEFAULT_MIN_PLOT_AREA_M2;
use agb_density::synth::SynthParams;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "agbmap", version, about = "Aboveground-biomass density maps: build, integrate, split, evaluate")]
struct Cli {
    /// More log output (-v debug, -vv trace).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    /// Only log errors.
    #[arg(short, long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Workers {
    /// Worker threads for per-image processing.
    #[arg(long, env = "AGBMAP_WORKERS", default_value_t = 1)]
    workers: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build AGBD density maps for every manifest row.
    GenMaps {
        manifest: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Trees below this fraction of the image's pixels are discarded.
        #[arg(long, default_value_t = DEFAULT_MIN_AREA_FRACTION)]
        min_area_fraction: f64,
        /// Samples whose total AGB (kg/m^2) exceeds this are dropped.
        #[arg(long, default_value_t = DEFAULT_MAX_TOTAL_AGB)]
        max_total_agb: f64,
        /// Plots smaller than this (m^2) are rejected as degenerate.
        #[arg(long, default_value_t = DEFAULT_MIN_PLOT_AREA_M2)]
        min_plot_area: f64,
        #[command(flatten)]
        workers: Workers,
    },
    /// Print `path,total_agb` for each AGBD file.
    Integrate {
        #[arg(required = true)]
        maps: Vec<PathBuf>,
    },
    /// Assign train/test splits to a manifest.
    Split {
        manifest: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TRAIN_FRACTION)]
        train_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output manifest (defaults to rewriting the input).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Generate a synthetic corpus with exact ground truth.
    Synth {
        #[arg(long, default_value_t = 10)]
        n_scenes: usize,
        #[arg(long, default_value_t = 12)]
        n_trees: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 224)]
        width: u32,
        #[arg(long, default_value_t = 224)]
        height: u32,
        /// Plot extent along x and y, in metres.
        #[arg(long, default_value_t = 20.0)]
        plot_size: f64,
        #[arg(long, default_value_t = DEFAULT_MIN_AREA_FRACTION)]
        min_area_fraction: f64,
        #[command(flatten)]
        workers: Workers,
    },
    /// Error and rank statistics for a predictions CSV.
    Eval {
        predictions: PathBuf,
        /// Aggregate per location_id before summarizing.
        #[arg(long)]
        per_id: bool,
        /// Spearman rank correlation, plain and pruned.
        #[arg(long)]
        spearman: bool,
        /// Fraction of worst samples pruned for the second correlation.
        #[arg(long, default_value_t = DEFAULT_PRUNE_FRACTION)]
        prune: f64,
        /// Report CSV path.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Median-of-train baseline predictions for the test rows.
    Baseline {
        manifest: PathBuf,
        /// Predictions CSV path (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Render an AGBD map as a PNG.
    Visualize {
        map: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 0.4)]
        gamma: f64,
        /// `spectral` or `grayscale`.
        #[arg(long, default_value = "spectral")]
        colormap: String,
    },
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<agb_density::Error> for Failure {
    fn from(e: agb_density::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn check_fraction(name: &str, v: f64, lo_inclusive: bool) -> Result<(), Failure> {
    let ok = v < 1.0 && if lo_inclusive { v >= 0.0 } else { v > 0.0 };
    if ok {
        Ok(())
    } else {
        Err(usage(format!("--{name} out of range: {v}")))
    }
}

fn check_workers(w: &Workers) -> Result<usize, Failure> {
    if w.workers == 0 {
        Err(usage("--workers must be at least 1"))
    } else {
        Ok(w.workers)
    }
}

fn write_out(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::GenMaps {
            manifest,
            out_dir,
            min_area_fraction,
            max_total_agb,
            min_plot_area,
            workers,
        } => {
            check_fraction("min-area-fraction", min_area_fraction, true)?;
            if max_total_agb.is_nan() || max_total_agb < 0.0 {
                return Err(usage("--max-total-agb must be >= 0"));
            }
            let opts = GenMapsOptions {
                density: DensityOptions {
                    min_area_fraction,
                    min_plot_area_m2: min_plot_area,
                },
                max_total_agb,
                workers: check_workers(&workers)?,
            };
            let outcome = pipeline::gen_maps(&manifest, &out_dir, &opts)?;
            if !outcome.failed.is_empty() {
                for (id, msg) in &outcome.failed {
                    eprintln!("error: {id}: {msg}");
                }
                return Err(Failure::Data(format!(
                    "{} of {} samples failed",
                    outcome.failed.len(),
                    outcome.failed.len() + outcome.kept.len() + outcome.dropped.len()
                )));
            }
            Ok(())
        }
        Command::Integrate { maps } => {
            let mut failed = 0;
            for path in &maps {
                match pipeline::integrate_file(path) {
                    Ok(total) => println!("{},{}", path.display(), total),
                    Err(e) => {
                        eprintln!("error: {}: {e}", path.display());
                        failed += 1;
                    }
                }
            }
            if failed > 0 {
                return Err(Failure::Data(format!("{failed} of {} files unreadable", maps.len())));
            }
            Ok(())
        }
        Command::Split {
            manifest,
            train_fraction,
            seed,
            output,
        } => {
            check_fraction("train-fraction", train_fraction, false)?;
            let out = output.unwrap_or_else(|| manifest.clone());
            let records = pipeline::split_manifest(&manifest, &out, train_fraction, seed)?;
            let train = records
                .iter()
                .filter(|r| r.split == agb_density::dataset::Split::Train)
                .count();
            tracing::info!(train, test = records.len() - train, "split written to {}", out.display());
            Ok(())
        }
        Command::Synth {
            n_scenes,
            n_trees,
            seed,
            out_dir,
            width,
            height,
            plot_size,
            min_area_fraction,
            workers,
        } => {
            if n_scenes == 0 || n_trees == 0 {
                return Err(usage("--n-scenes and --n-trees must be positive"));
            }
            check_fraction("min-area-fraction", min_area_fraction, true)?;
            let params = SynthParams {
                n_trees,
                plot_extent_m: (plot_size, plot_size),
                image_width_px: width,
                image_height_px: height,
                ..SynthParams::default()
            };
            params.validate().map_err(|e| usage(e.to_string()))?;
            let opts = SynthCorpusOptions {
                n_scenes,
                params,
                seed,
                density: DensityOptions {
                    min_area_fraction,
                    ..DensityOptions::default()
                },
                workers: check_workers(&workers)?,
            };
            pipeline::synth_corpus(&opts, &out_dir)?;
            Ok(())
        }
        Command::Eval {
            predictions,
            per_id,
            spearman,
            prune,
            output,
        } => {
            check_fraction("prune", prune, true)?;
            let pairs = read_predictions(&predictions)?;
            let report = evaluate(
                &pairs,
                &EvalOptions {
                    per_id,
                    spearman,
                    prune: Some(prune),
                },
            )?;
            print!("{}", report.to_table());
            for (stat, why) in &report.undefined {
                eprintln!("warning: {stat} is undefined: {why}");
            }
            if let Some(out) = output {
                write_out(&out, &report.to_csv())?;
            }
            Ok(())
        }
        Command::Baseline { manifest, output } => {
            let records = read_manifest(&manifest)?;
            let preds = pipeline::baseline_predictions(&records)?;
            let text = serialize_predictions(&preds);
            match output {
                Some(out) => write_out(&out, &text)?,
                None => print!("{text}"),
            }
            Ok(())
        }
        Command::Visualize {
            map,
            output,
            gamma,
            colormap,
        } => {
            let colormap: Colormap = colormap.parse().map_err(|e: agb_density::Error| usage(e.to_string()))?;
            let cfg = VisualizationConfig::new(gamma, colormap).map_err(|e| usage(e.to_string()))?;
            pipeline::visualize_file(&map, &cfg, &output)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => "error",
        (false, 0) => "info",
        (false, 1) => "debug",
        _ => "trace",
    };
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(level)))
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .with_target(false)
        .init();

    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_DATA)
        }
    }
}
