//! Training loss and evaluation statistics for scene-level AGB predictions.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::density::{integrate, DensityMap};
use crate::error::{Error, Result};
use crate::raster::DepthMap;

pub const DEFAULT_PRUNE_FRACTION: f64 = 0.2;

/// Weights of the total-AGB and depth terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub alpha1: f64,
    pub alpha2: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            alpha1: 1e-5,
            alpha2: 1.0,
        }
    }
}

fn mean_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

/// `mean|pred - gt| + alpha1 * |sum(pred) - sum(gt)| + alpha2 * mean|D - D_gt|`.
///
/// The map terms are per-pixel means; the total-AGB term compares integrals.
pub fn loss(
    pred: &DensityMap,
    gt: &DensityMap,
    pred_depth: Option<&DepthMap>,
    gt_depth: Option<&DepthMap>,
    cfg: &LossConfig,
) -> Result<f64> {
    if !(cfg.alpha1 >= 0.0 && cfg.alpha2 >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "loss weights must be non-negative, got alpha1={} alpha2={}",
            cfg.alpha1, cfg.alpha2
        )));
    }
    let dims = |w: u32, h: u32| format!("{w}x{h}");
    if (pred.width(), pred.height()) != (gt.width(), gt.height()) {
        return Err(Error::DimensionMismatch(format!(
            "predicted map {} vs ground truth {}",
            dims(pred.width(), pred.height()),
            dims(gt.width(), gt.height())
        )));
    }
    let mut total = mean_abs_diff(pred.values(), gt.values())
        + cfg.alpha1 * (integrate(pred) - integrate(gt)).abs();
    match (pred_depth, gt_depth) {
        (None, None) => {}
        (Some(pd), Some(gd)) => {
            if (pd.width(), pd.height()) != (gd.width(), gd.height()) {
                return Err(Error::DimensionMismatch(format!(
                    "predicted depth {} vs ground truth {}",
                    dims(pd.width(), pd.height()),
                    dims(gd.width(), gd.height())
                )));
            }
            total += cfg.alpha2 * mean_abs_diff(pd.values(), gd.values());
        }
        _ => {
            return Err(Error::InvalidArgument(
                "depth maps must be given for both prediction and ground truth, or neither".into(),
            ))
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionPair {
    pub sample_id: String,
    pub location_id: Option<String>,
    pub predicted_agb: f64,
    pub true_agb: f64,
}

impl PredictionPair {
    pub fn new(sample_id: impl Into<String>, predicted_agb: f64, true_agb: f64) -> Self {
        Self {
            sample_id: sample_id.into(),
            location_id: None,
            predicted_agb,
            true_agb,
        }
    }

    pub fn at(mut self, location_id: impl Into<String>) -> Self {
        self.location_id = Some(location_id.into());
        self
    }

    pub fn abs_error(&self) -> f64 {
        (self.predicted_agb - self.true_agb).abs()
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("predicted_agb", self.predicted_agb), ("true_agb", self.true_agb)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "sample `{}`: {name} must be finite and >= 0, got {v}",
                    self.sample_id
                )));
            }
        }
        Ok(())
    }
}

/// Mean, median and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorStats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub std: f64,
}

impl ErrorStats {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("no values to summarize"));
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        Ok(Self {
            n,
            mean,
            median: median(values),
            std: var.sqrt(),
        })
    }
}

/// Midpoint of the two central values for even lengths. `values` must be
/// non-empty.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn validated(pairs: &[PredictionPair]) -> Result<()> {
    pairs.iter().try_for_each(PredictionPair::validate)
}

pub fn abs_error_stats(pairs: &[PredictionPair]) -> Result<ErrorStats> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("no prediction pairs"));
    }
    validated(pairs)?;
    let errors: Vec<f64> = pairs.iter().map(PredictionPair::abs_error).collect();
    ErrorStats::of(&errors)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerIdStats {
    /// (location id, mean absolute error over its samples), sorted by id.
    pub per_id: Vec<(String, f64)>,
    /// Statistics over the per-id means.
    pub summary: ErrorStats,
}

pub fn per_id_aggregate(pairs: &[PredictionPair]) -> Result<PerIdStats> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("no prediction pairs"));
    }
    validated(pairs)?;
    let mut groups: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for p in pairs {
        let id = p
            .location_id
            .as_deref()
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::MissingLocation(p.sample_id.clone()))?;
        let g = groups.entry(id).or_insert((0.0, 0));
        g.0 += p.abs_error();
        g.1 += 1;
    }
    let per_id: Vec<(String, f64)> = groups
        .into_iter()
        .map(|(id, (sum, n))| (id.to_owned(), sum / n as f64))
        .collect();
    let means: Vec<f64> = per_id.iter().map(|(_, m)| *m).collect();
    Ok(PerIdStats {
        summary: ErrorStats::of(&means)?,
        per_id,
    })
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j (0-based) hold ranks i+1..=j
        let rank = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma).powi(2);
        vb += (y - mb).powi(2);
    }
    if va == 0.0 || vb == 0.0 {
        return None;
    }
    Some((cov / (va.sqrt() * vb.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman rank correlation between predicted and true AGB.
pub fn spearman(pairs: &[PredictionPair]) -> Result<f64> {
    if pairs.len() < 2 {
        return Err(Error::UndefinedCorrelation(format!(
            "need at least 2 samples, got {}",
            pairs.len()
        )));
    }
    validated(pairs)?;
    let pred: Vec<f64> = pairs.iter().map(|p| p.predicted_agb).collect();
    let truth: Vec<f64> = pairs.iter().map(|p| p.true_agb).collect();
    pearson(&average_ranks(&pred), &average_ranks(&truth)).ok_or_else(|| {
        Error::UndefinedCorrelation("zero rank variance (all predicted or all true values tied)".into())
    })
}

/// Number of pairs removed for a prune fraction: `ceil(fraction * n)`.
pub fn prune_count(n: usize, prune_fraction: f64) -> usize {
    // absorb representation error such as 0.2 * 15 = 3.0000000000000004
    let raw = prune_fraction * n as f64;
    let k = (raw - raw.abs() * 1e-12).ceil();
    (k.max(0.0) as usize).min(n)
}

/// Drops the `ceil(prune_fraction * n)` pairs with the largest absolute
/// error (later pairs go first among equal errors), then ranks the rest.
pub fn pruned_spearman(pairs: &[PredictionPair], prune_fraction: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&prune_fraction) {
        return Err(Error::InvalidArgument(format!(
            "prune fraction must lie in [0, 1), got {prune_fraction}"
        )));
    }
    validated(pairs)?;
    let drop = prune_count(pairs.len(), prune_fraction);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&a, &b| pairs[a].abs_error().total_cmp(&pairs[b].abs_error()).then(a.cmp(&b)));
    let mut keep = order[..pairs.len() - drop].to_vec();
    keep.sort_unstable();
    if keep.len() < 2 {
        return Err(Error::UndefinedCorrelation(format!(
            "only {} samples left after pruning {drop} of {}",
            keep.len(),
            pairs.len()
        )));
    }
    let survivors: Vec<PredictionPair> = keep.iter().map(|&i| pairs[i].clone()).collect();
    spearman(&survivors)
}

/// Constant predictor returning the median training-set total AGB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedianBaseline {
    value: f64,
}

impl MedianBaseline {
    pub fn fit(train_totals: &[f64]) -> Result<Self> {
        if train_totals.is_empty() {
            return Err(Error::EmptyInput("no training totals for the median baseline"));
        }
        if let Some(v) = train_totals.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite training total {v}")));
        }
        Ok(Self {
            value: median(train_totals),
        })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn predict(&self) -> f64 {
        self.value
    }
}

pub fn median_baseline(train_totals: &[f64]) -> Result<MedianBaseline> {
    MedianBaseline::fit(train_totals)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub per_id: bool,
    pub spearman: bool,
    /// Fraction of worst pairs pruned before the second rank correlation.
    pub prune: Option<f64>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            per_id: false,
            spearman: false,
            prune: Some(DEFAULT_PRUNE_FRACTION),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub all: ErrorStats,
    pub per_id: Option<PerIdStats>,
    pub spearman_rho: Option<f64>,
    pub pruned_spearman_rho: Option<f64>,
    pub prune_fraction: Option<f64>,
    /// Statistics that were requested but are undefined for this input.
    pub undefined: Vec<(String, String)>,
}

pub fn evaluate(pairs: &[PredictionPair], opts: &EvalOptions) -> Result<EvalReport> {
    let all = abs_error_stats(pairs)?;
    let per_id = opts.per_id.then(|| per_id_aggregate(pairs)).transpose()?;
    let mut report = EvalReport {
        all,
        per_id,
        spearman_rho: None,
        pruned_spearman_rho: None,
        prune_fraction: None,
        undefined: Vec::new(),
    };
    if opts.spearman {
        match spearman(pairs) {
            Ok(r) => report.spearman_rho = Some(r),
            Err(Error::UndefinedCorrelation(why)) => report.undefined.push(("spearman_rho".into(), why)),
            Err(e) => return Err(e),
        }
        if let Some(f) = opts.prune {
            report.prune_fraction = Some(f);
            match pruned_spearman(pairs, f) {
                Ok(r) => report.pruned_spearman_rho = Some(r),
                Err(Error::UndefinedCorrelation(why)) => {
                    report.undefined.push(("pruned_spearman_rho".into(), why))
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(report)
}

impl EvalReport {
    /// `section,statistic,value` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("section,statistic,value\n");
        let mut row = |section: &str, stat: &str, value: String| {
            let _ = writeln!(out, "{section},{stat},{value}");
        };
        let stats = |row: &mut dyn FnMut(&str, &str, String), section: &str, s: &ErrorStats| {
            row(section, "n", s.n.to_string());
            row(section, "mean_abs_err", s.mean.to_string());
            row(section, "median_abs_err", s.median.to_string());
            row(section, "std_abs_err", s.std.to_string());
        };
        stats(&mut row, "all_samples", &self.all);
        if let Some(p) = &self.per_id {
            stats(&mut row, "per_id", &p.summary);
        }
        if let Some(r) = self.spearman_rho {
            row("rank", "spearman_rho", r.to_string());
        }
        if let Some(r) = self.pruned_spearman_rho {
            row("rank", "pruned_spearman_rho", r.to_string());
        }
        if let Some(f) = self.prune_fraction {
            row("rank", "prune_fraction", f.to_string());
        }
        for (stat, _) in &self.undefined {
            row("rank", stat, "undefined".into());
        }
        if let Some(p) = &self.per_id {
            for (id, m) in &p.per_id {
                row("location", &csv_field(id), m.to_string());
            }
        }
        out
    }

    /// Human-readable table with per-ID and all-sample blocks side by side.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Absolute error (kg/m^2)");
        let header = |out: &mut String| {
            let _ = writeln!(out, "{:<14}{:>10}{:>10}{:>10}{:>8}", "", "Mean", "Median", "Std", "N");
        };
        header(&mut out);
        let line = |out: &mut String, name: &str, s: &ErrorStats| {
            let _ = writeln!(
                out,
                "{:<14}{:>10.3}{:>10.3}{:>10.3}{:>8}",
                name, s.mean, s.median, s.std, s.n
            );
        };
        if let Some(p) = &self.per_id {
            line(&mut out, "Per-ID", &p.summary);
        }
        line(&mut out, "All-samples", &self.all);
        if let Some(r) = self.spearman_rho {
            let _ = writeln!(out, "Spearman rho: {r:.4}");
        }
        if let (Some(r), Some(f)) = (self.pruned_spearman_rho, self.prune_fraction) {
            let _ = writeln!(out, "Spearman rho after pruning worst {:.0}%: {r:.4}", f * 100.0);
        }
        for (stat, why) in &self.undefined {
            let _ = writeln!(out, "{stat}: undefined ({why})");
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

pub const PREDICTIONS_HEADER: [&str; 4] = ["sample_id", "location_id", "predicted_agb", "true_agb"];

pub fn parse_predictions(text: &str) -> Result<Vec<PredictionPair>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| Error::Predictions {
        line: 1,
        message: e.to_string(),
    })?;
    if header.iter().collect::<Vec<_>>() != PREDICTIONS_HEADER {
        return Err(Error::Predictions {
            line: 1,
            message: format!("header must be `{}`", PREDICTIONS_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Predictions {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let err = |message: String| Error::Predictions { line, message };
        let number = |i: usize| -> Result<f64> {
            let v: f64 = rec[i]
                .parse()
                .map_err(|_| err(format!("bad {} `{}`", PREDICTIONS_HEADER[i], &rec[i])))?;
            if !(v.is_finite() && v >= 0.0) {
                return Err(err(format!("{} must be finite and >= 0, got {v}", PREDICTIONS_HEADER[i])));
            }
            Ok(v)
        };
        if rec[0].is_empty() {
            return Err(err("empty sample_id".into()));
        }
        out.push(PredictionPair {
            sample_id: rec[0].to_owned(),
            location_id: (!rec[1].is_empty()).then(|| rec[1].to_owned()),
            predicted_agb: number(2)?,
            true_agb: number(3)?,
        });
    }
    Ok(out)
}

pub fn serialize_predictions(pairs: &[PredictionPair]) -> String {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(PREDICTIONS_HEADER).expect("in-memory write");
    for p in pairs {
        wtr.write_record([
            p.sample_id.clone(),
            p.location_id.clone().unwrap_or_default(),
            p.predicted_agb.to_string(),
            p.true_agb.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictionPair>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_predictions(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Raster;

    fn pairs_from_errors(errors: &[f64]) -> Vec<PredictionPair> {
        errors
            .iter()
            .enumerate()
            .map(|(i, e)| PredictionPair::new(i.to_string(), 10.0 + e, 10.0))
            .collect()
    }

    #[test]
    fn loss_identity_and_closed_form() {
        let a = DensityMap::from_vec(3, 2, vec![0.1, 0.0, 0.3, 0.2, 0.5, 0.0]).unwrap();
        assert_eq!(loss(&a, &a, None, None, &LossConfig::default()).unwrap(), 0.0);

        let gt = DensityMap::zeros(16, 8).unwrap();
        let v = 0.375;
        let pred = DensityMap::new(Raster::filled(16, 8, v).unwrap()).unwrap();
        let l = loss(&pred, &gt, None, None, &LossConfig::default()).unwrap();
        let expected = v + 1e-5 * 128.0 * v;
        assert!((l - expected).abs() <= 1e-9 * expected);
    }

    #[test]
    fn loss_depth_term_and_errors() {
        let a = DensityMap::zeros(2, 2).unwrap();
        let d0 = DepthMap::new(Raster::filled(2, 2, 0.5).unwrap()).unwrap();
        let d1 = DepthMap::new(Raster::from_vec(2, 2, vec![0.5, 1.0, 0.0, 0.5]).unwrap()).unwrap();
        let l = loss(&a, &a, Some(&d1), Some(&d0), &LossConfig::default()).unwrap();
        assert!((l - 0.25).abs() < 1e-15);
        let cfg = LossConfig { alpha1: 0.0, alpha2: 2.0 };
        assert!((loss(&a, &a, Some(&d1), Some(&d0), &cfg).unwrap() - 0.5).abs() < 1e-15);
        assert!(loss(&a, &a, Some(&d1), None, &cfg).is_err());
        let b = DensityMap::zeros(2, 3).unwrap();
        assert!(matches!(loss(&a, &b, None, None, &cfg), Err(Error::DimensionMismatch(_))));
        let small = DepthMap::new(Raster::filled(1, 1, 0.5).unwrap()).unwrap();
        assert!(loss(&a, &a, Some(&d1), Some(&small), &cfg).is_err());
    }

    #[test]
    fn stats_examples() {
        let exact = pairs_from_errors(&[0.0, 0.0, 0.0]);
        let s = abs_error_stats(&exact).unwrap();
        assert_eq!((s.mean, s.median, s.std), (0.0, 0.0, 0.0));
        let s = abs_error_stats(&pairs_from_errors(&[1.0, 2.0, 9.0])).unwrap();
        assert_eq!((s.mean, s.median), (4.0, 2.0));
        assert!(abs_error_stats(&[]).is_err());
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn per_id_examples() {
        let one = vec![
            PredictionPair::new("a", 2.0, 0.0).at("p1"),
            PredictionPair::new("b", 0.0, 4.0).at("p1"),
        ];
        let r = per_id_aggregate(&one).unwrap();
        assert_eq!(r.per_id, vec![("p1".to_string(), 3.0)]);

        let two = vec![
            PredictionPair::new("a", 1.0, 0.0).at("x"),
            PredictionPair::new("b", 5.0, 2.0).at("y"),
        ];
        let r = per_id_aggregate(&two).unwrap();
        assert_eq!(r.summary.mean, 2.0);
        assert_eq!(r.summary.std, 1.0);
        let missing = vec![PredictionPair::new("a", 1.0, 0.0)];
        assert!(matches!(per_id_aggregate(&missing), Err(Error::MissingLocation(_))));
    }

    #[test]
    fn spearman_perfect_and_undefined() {
        let inc: Vec<_> = (0..6).map(|i| PredictionPair::new(i.to_string(), i as f64, 2.0 * i as f64)).collect();
        assert_eq!(spearman(&inc).unwrap(), 1.0);
        let dec: Vec<_> = (0..6).map(|i| PredictionPair::new(i.to_string(), 10.0 - i as f64, i as f64)).collect();
        assert_eq!(spearman(&dec).unwrap(), -1.0);
        assert!(spearman(&inc[..1]).is_err());
        let flat: Vec<_> = (0..4).map(|i| PredictionPair::new(i.to_string(), 1.0, i as f64)).collect();
        assert!(matches!(spearman(&flat), Err(Error::UndefinedCorrelation(_))));
    }

    #[test]
    fn tied_ranks() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn pruning() {
        let mut p: Vec<_> = (0..10).map(|i| PredictionPair::new(i.to_string(), i as f64, i as f64)).collect();
        p[3].predicted_agb = 100.0;
        assert!(spearman(&p).unwrap() < 1.0);
        assert_eq!(pruned_spearman(&p, 0.2).unwrap(), 1.0);
        assert_eq!(pruned_spearman(&p, 0.0).unwrap(), spearman(&p).unwrap());
        assert_eq!(prune_count(15, 0.2), 3);
        assert_eq!(prune_count(11, 0.2), 3);
        assert_eq!(prune_count(10, 0.0), 0);
        assert!(pruned_spearman(&p[..2], 0.2).is_err());
        assert!(pruned_spearman(&p, 1.0).is_err());
    }

    #[test]
    fn median_baseline_examples() {
        let b = median_baseline(&[1.0, 5.0, 9.0]).unwrap();
        assert_eq!(b.predict(), 5.0);
        let train = [2.0, 7.0, 3.0, 11.0, 4.0];
        let b = median_baseline(&train).unwrap();
        let pairs: Vec<_> = train.iter().map(|&t| PredictionPair::new("s", b.predict(), t)).collect();
        let devs: Vec<f64> = train.iter().map(|t| (t - median(&train)).abs()).collect();
        assert_eq!(abs_error_stats(&pairs).unwrap().median, median(&devs));
        assert!(median_baseline(&[]).is_err());
    }

    #[test]
    fn predictions_csv() {
        let text = "sample_id,location_id,predicted_agb,true_agb\na,,1.5,2\nb,loc 7,0,3.25\n";
        let p = parse_predictions(text).unwrap();
        assert_eq!(p[0].location_id, None);
        assert_eq!(p[1].location_id.as_deref(), Some("loc 7"));
        assert_eq!(parse_predictions(&serialize_predictions(&p)).unwrap(), p);
        match parse_predictions("sample_id,location_id,predicted_agb,true_agb\na,,1,2\nb,,x,2\n") {
            Err(Error::Predictions { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_predictions("sample_id,location_id,predicted_agb,true_agb\na,,-1,2\n").is_err());
        assert!(parse_predictions("id,pred\n").is_err());
    }

    #[test]
    fn report_handles_undefined_rho() {
        let perfect: Vec<_> = (0..4).map(|i| PredictionPair::new(i.to_string(), 2.0, 2.0)).collect();
        let r = evaluate(&perfect, &EvalOptions { spearman: true, ..EvalOptions::default() }).unwrap();
        assert_eq!(r.all.mean, 0.0);
        assert!(r.spearman_rho.is_none());
        assert_eq!(r.undefined.len(), 2);
        assert!(r.to_table().contains("undefined"));
        assert!(r.to_csv().contains("rank,spearman_rho,undefined"));
    }
}
