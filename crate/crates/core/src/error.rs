use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid attribute `{field}` = {value}{}", tree_suffix(*.tree_id))]
    InvalidAttribute {
        field: &'static str,
        value: f64,
        tree_id: Option<u32>,
    },

    #[error("scene has no trees")]
    EmptyScene,

    #[error("degenerate plot: area {area_m2} m^2 is below the minimum of {min_area_m2} m^2")]
    DegeneratePlot { area_m2: f64, min_area_m2: f64 },

    #[error("inconsistent scene: {0}")]
    InconsistentScene(String),

    #[error("unknown instance color ({r}, {g}, {b}) at pixel (x={x}, y={y})")]
    UnknownInstanceColor {
        r: u8,
        g: u8,
        b: u8,
        x: u32,
        y: u32,
    },

    #[error("color table: {0}")]
    ColorTable(String),

    #[error("AGBD format error at byte offset {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("scene metadata: {0}")]
    Metadata(String),

    #[error("manifest line {line}: {message}")]
    Manifest { line: u64, message: String },

    #[error("predictions line {line}: {message}")]
    Predictions { line: u64, message: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("sample `{0}` has no cached total_agb; run gen-maps first")]
    MissingTotal(String),

    #[error("sample `{0}` has no location_id")]
    MissingLocation(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("image: {0}")]
    Image(#[from] image::ImageError),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn tree_suffix(id: Option<u32>) -> String {
    match id {
        Some(id) => format!(" on tree {id}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
