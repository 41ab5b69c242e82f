//! Image, landmark and manifest ingestion plus the deterministic train/test split.
//!
//! Images are 8-bit grayscale PGM (binary `P5` or ASCII `P2`, maxval 255). Pixels are
//! stored row-major as `raw / 255.0`. Landmark files are headerless CSV with one `x,y`
//! pair per line. Manifests are CSV with the header
//! `image_path,subject_id,variant,landmark_path`.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::Point;

/// A grayscale image flattened row-major, intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageVector {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ImageVector {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: format!("{} values for {width}x{height}", width * height),
                found: values.len().to_string(),
            });
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!(
                "pixel intensity {v} outside [0, 1]"
            )));
        }
        Ok(ImageVector {
            width,
            height,
            values,
        })
    }

    /// Builds an image from raw 8-bit pixels, dividing each by 255.
    pub fn from_bytes(width: usize, height: usize, pixels: &[u8]) -> Result<Self> {
        let values = pixels.iter().map(|&p| f64::from(p) / 255.0).collect();
        Self::new(width, height, values)
    }

    /// Unchecked constructor for internal results (means, reconstructions) that may
    /// leave `[0, 1]`.
    pub(crate) fn from_raw(width: usize, height: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), width * height);
        ImageVector {
            width,
            height,
            values,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn same_shape(&self, other: &ImageVector) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Quantizes back to 8-bit, clamping to `[0, 1]` first.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.values
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect()
    }
}

/// An ordered set of 2D facial landmarks.
///
/// Construction guarantees at least three points, no exact duplicates, and that the
/// points are not all collinear.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet {
    points: Vec<Point>,
}

impl LandmarkSet {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::TooFewPoints(points.len()));
        }
        if let Some(p) = points.iter().find(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite landmark ({}, {})",
                p.x, p.y
            )));
        }

        for i in 0..points.len() {
            for j in i + 1..points.len() {
                if points[i] == points[j] {
                    return Err(Error::DuplicatePoint {
                        first: i,
                        second: j,
                    });
                }
            }
        }

        let (a, b) = (points[0], points[1]);
        if points[2..]
            .iter()
            .all(|&c| crate::geometry::orient2d(a, b, c) == 0.0)
        {
            return Err(Error::Collinear);
        }
        Ok(LandmarkSet { points })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Landmark scheme label: the number of points (68, 79, 194, ...).
    pub fn scheme(&self) -> usize {
        self.points.len()
    }
}

/// One row of a dataset manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub image_path: PathBuf,
    pub subject_id: String,
    pub variant: String,
    /// Empty when the dataset carries no landmarks.
    pub landmark_path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

pub const MANIFEST_HEADER: &str = "image_path,subject_id,variant,landmark_path";

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        let manifest = DatasetManifest { entries };
        manifest.validate()?;
        Ok(manifest)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert((e.subject_id.as_str(), e.variant.as_str())) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate (subject, variant) pair ({}, {})",
                    e.subject_id, e.variant
                )));
            }
        }
        self.variants_per_subject().map(|_| ())
    }

    /// Subject ids in order of first appearance.
    pub fn subjects(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.entries
            .iter()
            .filter(|e| seen.insert(e.subject_id.as_str()))
            .map(|e| e.subject_id.as_str())
            .collect()
    }

    /// Common variant count per subject; errors when subjects are ragged.
    pub fn variants_per_subject(&self) -> Result<usize> {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for e in &self.entries {
            *counts.entry(e.subject_id.as_str()).or_default() += 1;
        }
        let subjects = self.subjects();
        let Some(first) = subjects.first() else {
            return Ok(0);
        };
        let expected = counts[first];
        for s in &subjects {
            if counts[s] != expected {
                return Err(Error::InvalidArgument(format!(
                    "ragged subjects: {first} has {expected} variants but {s} has {}",
                    counts[s]
                )));
            }
        }
        Ok(expected)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Header tokenizer for PNM: whitespace separated, `#` starts a comment.
struct PnmCursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> PnmCursor<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.data.len() {
            match self.data[self.pos] {
                b'#' => {
                    while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Option<&'a [u8]> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.data.len() && !self.data[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.data[start..self.pos])
    }

    fn number(&mut self, what: &str) -> std::result::Result<usize, String> {
        let tok = self
            .token()
            .ok_or_else(|| format!("truncated header: missing {what}"))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format!("invalid {what} {:?}", String::from_utf8_lossy(tok)))
    }
}

/// Decodes an in-memory PGM. Errors carry no path; see [`load_image`].
pub fn decode_pgm(data: &[u8]) -> std::result::Result<ImageVector, String> {
    let mut cur = PnmCursor { data, pos: 0 };
    let binary = match cur.token() {
        Some(b"P5") => true,
        Some(b"P2") => false,
        Some(other) => {
            return Err(format!(
                "unsupported magic number {:?}",
                String::from_utf8_lossy(other)
            ))
        }
        None => return Err("empty file".into()),
    };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if maxval != 255 {
        return Err(format!("maxval {maxval} unsupported, expected 255"));
    }
    if width == 0 || height == 0 {
        return Err(format!("zero dimension {width}x{height}"));
    }
    let count = width
        .checked_mul(height)
        .ok_or_else(|| "dimensions overflow".to_string())?;

    let pixels: Vec<u8> = if binary {
        // exactly one whitespace byte separates maxval from the raster
        let start = cur.pos + 1;
        let end = start + count;
        if cur.pos >= data.len() || end > data.len() {
            return Err(format!(
                "truncated pixel data: expected {count} bytes, found {}",
                data.len().saturating_sub(start)
            ));
        }
        data[start..end].to_vec()
    } else {
        let mut px = Vec::with_capacity(count);
        for i in 0..count {
            let tok = cur.token().ok_or_else(|| {
                format!("truncated pixel data: expected {count} values, found {i}")
            })?;
            let v: u32 = std::str::from_utf8(tok)
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| format!("invalid pixel {:?}", String::from_utf8_lossy(tok)))?;
            if v > 255 {
                return Err(format!("pixel value {v} exceeds maxval 255"));
            }
            px.push(v as u8);
        }
        px
    };
    ImageVector::from_bytes(width, height, &pixels).map_err(|e| e.to_string())
}

/// Encodes an image as binary PGM (`P5`, maxval 255).
pub fn encode_pgm(image: &ImageVector) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend(image.to_bytes());
    out
}

pub fn load_image(path: impl AsRef<Path>) -> Result<ImageVector> {
    let path = path.as_ref();
    let data = read_file(path)?;
    decode_pgm(&data).map_err(|detail| Error::Pgm {
        path: path.to_path_buf(),
        detail,
    })
}

pub fn save_image(image: &ImageVector, path: impl AsRef<Path>) -> Result<()> {
    crate::write_atomic(path.as_ref(), &encode_pgm(image))
}

/// Parses landmark CSV text (one `x,y` per line, LF or CRLF, no header).
pub fn parse_landmarks(text: &str) -> std::result::Result<Vec<Point>, String> {
    let mut points = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let (Some(x), Some(y), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(format!("line {}: expected `x,y`, got {line:?}", lineno + 1));
        };
        let parse = |s: &str| -> std::result::Result<f64, String> {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("line {}: invalid coordinate {s:?}", lineno + 1))
        };
        points.push(Point::new(parse(x)?, parse(y)?));
    }
    Ok(points)
}

pub fn load_landmarks(path: impl AsRef<Path>) -> Result<LandmarkSet> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let wrap = |detail: String| Error::LandmarkFile {
        path: path.to_path_buf(),
        detail,
    };
    let points = parse_landmarks(&text).map_err(wrap)?;
    LandmarkSet::new(points).map_err(|e| wrap(e.to_string()))
}

pub fn parse_manifest(text: &str) -> std::result::Result<DatasetManifest, String> {
    let mut lines = text.lines().map(|l| l.trim_end_matches('\r'));
    match lines.next() {
        Some(h) if h.trim() == MANIFEST_HEADER => {}
        Some(h) => return Err(format!("expected header `{MANIFEST_HEADER}`, got {h:?}")),
        None => return Err("empty manifest".into()),
    }
    let mut entries = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(format!(
                "line {}: expected 4 fields, found {}",
                i + 2,
                fields.len()
            ));
        }
        if fields[0].is_empty() || fields[1].is_empty() || fields[2].is_empty() {
            return Err(format!("line {}: empty required field", i + 2));
        }
        entries.push(ManifestEntry {
            image_path: PathBuf::from(fields[0]),
            subject_id: fields[1].to_string(),
            variant: fields[2].to_string(),
            landmark_path: PathBuf::from(fields[3]),
        });
    }
    DatasetManifest::new(entries).map_err(|e| e.to_string())
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = read_text(path)?;
    parse_manifest(&text).map_err(|detail| Error::Manifest {
        path: path.to_path_buf(),
        detail,
    })
}

pub fn render_manifest(manifest: &DatasetManifest) -> String {
    let mut out = String::from(MANIFEST_HEADER);
    out.push('\n');
    for e in &manifest.entries {
        out.push_str(&format!(
            "{},{},{},{}\n",
            e.image_path.display(),
            e.subject_id,
            e.variant,
            e.landmark_path.display()
        ));
    }
    out
}

/// Splits per subject: the first `train_variants_per_subject` entries (manifest order)
/// train, the rest test.
pub fn split_dataset(
    manifest: &DatasetManifest,
    train_variants_per_subject: usize,
) -> Result<(DatasetManifest, DatasetManifest)> {
    let per_subject = manifest.variants_per_subject()?;
    if train_variants_per_subject < 1 || train_variants_per_subject >= per_subject {
        return Err(Error::InvalidArgument(format!(
            "train variants per subject must be in [1, {}), got {train_variants_per_subject}",
            per_subject
        )));
    }
    let mut taken: HashMap<&str, usize> = HashMap::new();
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for e in &manifest.entries {
        let n = taken.entry(e.subject_id.as_str()).or_default();
        if *n < train_variants_per_subject {
            train.push(e.clone());
        } else {
            test.push(e.clone());
        }
        *n += 1;
    }
    Ok((
        DatasetManifest { entries: train },
        DatasetManifest { entries: test },
    ))
}
