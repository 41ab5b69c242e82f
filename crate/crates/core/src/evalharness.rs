//! Train/test experiments and accuracy reports.
//!
//! An experiment splits a manifest per subject, fits the eigenspace on the training
//! half, builds the gallery and then recognizes every test image in each requested
//! mode. A test counts as correct when the predicted subject equals the true one.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::dataset_io::{self, ManifestEntry};
use crate::eigenface::{fit_eigenmodel, DEFAULT_K};
use crate::error::{Error, Result};
use crate::geometry::delaunay;
use crate::recognizer::{
    build_gallery, recognize_coords, MatchMode, TrainingSample, DEFAULT_DT_DIVISOR,
};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub manifest_path: PathBuf,
    pub train_variants: usize,
    pub k: usize,
    pub modes: Vec<MatchMode>,
    pub dt_divisor: f64,
    /// Column label for DT rows (e.g. "68"); defaults to the gallery's landmark count.
    pub landmark_scheme_label: Option<String>,
    /// Directory holding this scheme's landmark files. Each manifest landmark path is
    /// replaced by the file of the same name inside it.
    pub landmark_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(manifest_path: impl Into<PathBuf>, train_variants: usize) -> Self {
        ExperimentConfig {
            manifest_path: manifest_path.into(),
            train_variants,
            k: DEFAULT_K,
            modes: vec![MatchMode::PcaOnly, MatchMode::DtPca],
            dt_divisor: DEFAULT_DT_DIVISOR,
            landmark_scheme_label: None,
            landmark_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.train_variants < 1 {
            return bad("train variants must be at least 1".into());
        }
        if self.k < 1 {
            return bad("k must be at least 1".into());
        }
        if !(self.dt_divisor > 0.0) {
            return bad(format!("dt divisor must be positive, got {}", self.dt_divisor));
        }
        if self.modes.is_empty() {
            return bad("at least one mode is required".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyRow {
    pub train_count: usize,
    pub test_count: usize,
    pub mode: MatchMode,
    /// Landmark scheme label for DT rows; `None` for PCA-only rows.
    pub scheme: Option<String>,
    pub correct: usize,
    pub total: usize,
    /// `100 · correct / total`, half-up rounded to one decimal.
    pub percent: f64,
}

impl AccuracyRow {
    pub fn new(
        train_count: usize,
        test_count: usize,
        mode: MatchMode,
        scheme: Option<String>,
        correct: usize,
        total: usize,
    ) -> Result<Self> {
        Ok(AccuracyRow {
            train_count,
            test_count,
            mode,
            scheme,
            correct,
            total,
            percent: accuracy(correct, total)?,
        })
    }

    /// Unrounded fraction of correct matches.
    pub fn ratio(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }

    fn key(&self) -> (usize, usize, MatchMode, Option<&str>) {
        (
            self.train_count,
            self.test_count,
            self.mode,
            self.scheme.as_deref(),
        )
    }

    fn percent_text(&self) -> String {
        let tenths = percent_tenths(self.correct, self.total);
        format!("{}.{}", tenths / 10, tenths % 10)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AccuracyTable {
    pub rows: Vec<AccuracyRow>,
}

impl AccuracyTable {
    /// Adds a row unless one with the same (split, mode, scheme) already exists.
    pub fn push(&mut self, row: AccuracyRow) {
        if !self.rows.iter().any(|r| r.key() == row.key()) {
            self.rows.push(row);
        }
    }

    pub fn merge(&mut self, other: AccuracyTable) {
        other.rows.into_iter().for_each(|r| self.push(r));
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

fn percent_tenths(correct: usize, total: usize) -> u64 {
    let (c, t) = (correct as u64, total as u64);
    // round-half-up of 1000·c/t in integers
    (2000 * c + t) / (2 * t)
}

/// Percent correct, half-up rounded to one decimal place.
pub fn accuracy(correct: usize, total: usize) -> Result<f64> {
    if total == 0 {
        return Err(Error::InvalidArgument("accuracy of an empty test set".into()));
    }
    if correct > total {
        return Err(Error::InvalidArgument(format!(
            "correct count {correct} exceeds total {total}"
        )));
    }
    Ok(percent_tenths(correct, total) as f64 / 10.0)
}

fn resolve_landmark_path(entry: &ManifestEntry, landmark_dir: Option<&Path>) -> Result<PathBuf> {
    if entry.landmark_path.as_os_str().is_empty() {
        return Err(Error::MissingLandmarks(format!(
            "{}: manifest row has no landmark file",
            entry.image_path.display()
        )));
    }
    Ok(match (landmark_dir, entry.landmark_path.file_name()) {
        (Some(dir), Some(name)) => dir.join(name),
        _ => entry.landmark_path.clone(),
    })
}

/// Loads images (and optionally landmarks) for manifest entries, preserving order.
/// Every image must share the first image's dimensions.
pub fn load_samples(
    entries: &[ManifestEntry],
    with_landmarks: bool,
    landmark_dir: Option<&Path>,
) -> Result<Vec<TrainingSample>> {
    let samples = entries
        .par_iter()
        .map(|e| {
            let image = dataset_io::load_image(&e.image_path)?;
            let landmarks = if with_landmarks {
                Some(dataset_io::load_landmarks(resolve_landmark_path(
                    e,
                    landmark_dir,
                )?)?)
            } else {
                None
            };
            Ok(TrainingSample {
                image,
                landmarks,
                subject_id: e.subject_id.clone(),
                variant: e.variant.clone(),
                source_path: e.image_path.display().to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    if let Some(first) = samples.first() {
        if let Some(odd) = samples.iter().find(|s| !s.image.same_shape(&first.image)) {
            return Err(Error::Pgm {
                path: odd.source_path.clone().into(),
                detail: format!(
                    "dimensions {}x{} differ from {}x{} of {}",
                    odd.image.width(),
                    odd.image.height(),
                    first.image.width(),
                    first.image.height(),
                    first.source_path
                ),
            });
        }
    }
    Ok(samples)
}

/// Fits on `train`, recognizes every `test` sample in each mode and tallies
/// subject-level accuracy.
pub fn evaluate(
    train: &[TrainingSample],
    test: &[TrainingSample],
    k: usize,
    modes: &[MatchMode],
    dt_divisor: f64,
    scheme_label: Option<&str>,
) -> Result<AccuracyTable> {
    if test.is_empty() {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    let images: Vec<_> = train.iter().map(|s| s.image.clone()).collect();
    let model = fit_eigenmodel(&images, k)?;
    let gallery = build_gallery(&model, train)?;
    let needs_dt = modes.contains(&MatchMode::DtPca);
    if needs_dt && !gallery.supports_dt() {
        return Err(Error::MissingLandmarks(
            "training samples carry no landmarks".into(),
        ));
    }

    // predicted subjects per test sample, one slot per mode
    let predictions: Vec<Vec<String>> = test
        .par_iter()
        .map(|s| {
            let coords = model.project(&s.image)?;
            let test_ra = if needs_dt {
                let lm = s.landmarks.as_ref().ok_or_else(|| {
                    Error::MissingLandmarks(format!("{}: no landmarks", s.source_path))
                })?;
                let expected = gallery.scheme.unwrap_or_default();
                if lm.scheme() != expected {
                    return Err(Error::SchemeMismatch {
                        expected,
                        found: lm.scheme(),
                    });
                }
                Some(delaunay(lm)?.average_relative_area())
            } else {
                None
            };
            modes
                .iter()
                .map(|&mode| {
                    recognize_coords(&gallery, &coords, test_ra, mode, dt_divisor)
                        .map(|r| r.best.subject)
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let label = scheme_label
        .map(str::to_string)
        .or_else(|| gallery.scheme.map(|s| s.to_string()));
    let mut table = AccuracyTable::default();
    for (m, &mode) in modes.iter().enumerate() {
        let correct = test
            .iter()
            .zip(&predictions)
            .filter(|(s, p)| p[m] == s.subject_id)
            .count();
        let scheme = match mode {
            MatchMode::PcaOnly => None,
            MatchMode::DtPca => label.clone(),
        };
        table.push(AccuracyRow::new(
            train.len(),
            test.len(),
            mode,
            scheme,
            correct,
            test.len(),
        )?);
    }
    Ok(table)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<AccuracyTable> {
    config.validate()?;
    let manifest = dataset_io::load_manifest(&config.manifest_path)?;
    let (train, test) = dataset_io::split_dataset(&manifest, config.train_variants)?;
    let with_landmarks = config.modes.contains(&MatchMode::DtPca);
    let dir = config.landmark_dir.as_deref();
    let train = load_samples(&train.entries, with_landmarks, dir)?;
    let test = load_samples(&test.entries, with_landmarks, dir)?;
    evaluate(
        &train,
        &test,
        config.k,
        &config.modes,
        config.dt_divisor,
        config.landmark_scheme_label.as_deref(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::InvalidArgument(format!(
                "unknown report format {other:?}, expected text or csv"
            ))),
        }
    }
}

pub const CSV_HEADER: &str = "split,mode,scheme,correct,total,percent";

fn split_label(train: usize, test: usize) -> String {
    format!("Train – {train} Test – {test}")
}

fn render_text(table: &AccuracyTable) -> String {
    let mut splits: Vec<(usize, usize)> = Vec::new();
    let mut schemes: Vec<&str> = Vec::new();
    let mut seen = HashSet::new();
    for r in &table.rows {
        if !splits.contains(&(r.train_count, r.test_count)) {
            splits.push((r.train_count, r.test_count));
        }
        if let (MatchMode::DtPca, Some(s)) = (r.mode, r.scheme.as_deref()) {
            if seen.insert(s) {
                schemes.push(s);
            }
        }
    }
    let has_pca = table.rows.iter().any(|r| r.mode == MatchMode::PcaOnly);

    let mut header = vec!["Split".to_string()];
    if has_pca {
        header.push("Traditional PCA".into());
    }
    header.extend(schemes.iter().map(|s| format!("{s}-L")));

    let cell = |split: (usize, usize), mode: MatchMode, scheme: Option<&str>| {
        table
            .rows
            .iter()
            .find(|r| {
                (r.train_count, r.test_count) == split
                    && r.mode == mode
                    && (mode == MatchMode::PcaOnly || r.scheme.as_deref() == scheme)
            })
            .map_or_else(|| "-".to_string(), |r| format!("{} %", r.percent_text()))
    };
    let mut grid = vec![header];
    for &split in &splits {
        let mut line = vec![split_label(split.0, split.1)];
        if has_pca {
            line.push(cell(split, MatchMode::PcaOnly, None));
        }
        for s in &schemes {
            line.push(cell(split, MatchMode::DtPca, Some(s)));
        }
        grid.push(line);
    }

    let widths: Vec<usize> = (0..grid[0].len())
        .map(|c| grid.iter().map(|l| l[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for line in &grid {
        let cells: Vec<String> = line
            .iter()
            .zip(&widths)
            .map(|(text, &w)| format!("{text:<w$}"))
            .collect();
        out.push_str(cells.join(" | ").trim_end());
        out.push('\n');
    }
    out
}

fn render_csv(table: &AccuracyTable) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &table.rows {
        let _ = writeln!(
            out,
            "{}/{},{},{},{},{},{}",
            r.train_count,
            r.test_count,
            r.mode,
            r.scheme.as_deref().unwrap_or(""),
            r.correct,
            r.total,
            r.percent_text()
        );
    }
    out
}

pub fn render_report(table: &AccuracyTable, format: ReportFormat) -> Result<String> {
    if table.is_empty() {
        return Err(Error::Empty("accuracy table has no rows"));
    }
    Ok(match format {
        ReportFormat::Text => render_text(table),
        ReportFormat::Csv => render_csv(table),
    })
}

pub fn emit_report(table: &AccuracyTable, format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    let text = render_report(table, format)?;
    crate::write_atomic(path.as_ref(), text.as_bytes())
}
