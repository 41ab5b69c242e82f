//! Match gallery and fused scoring.
//!
//! Every training image becomes a [`GalleryEntry`] holding its eigenspace coordinates
//! and, when landmarks are available, the average relative area of its landmark mesh.
//! A probe is scored against each entry as
//!
//! ```text
//! ED = ‖coords(probe) − coords(entry)‖
//! D  = |RA_avg(probe) − RA_avg(entry)|
//! RV = ED + D / dt_divisor
//! ```
//!
//! and the entry with the smallest RV wins (smallest ED in PCA-only mode). Ties go to
//! the lowest gallery index.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset_io::{ImageVector, LandmarkSet};
use crate::eigenface::{eigen_distance, EigenCoords, EigenModel, ModelRecord};
use crate::error::{Error, Result};
use crate::geometry::delaunay;

/// Divisor applied to the landmark-area difference before it is added to ED.
pub const DEFAULT_DT_DIVISOR: f64 = 0.001;

pub const GALLERY_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    /// Eigenface distance only.
    PcaOnly,
    /// Eigenface distance fused with the landmark-mesh area difference.
    DtPca,
}

impl MatchMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MatchMode::PcaOnly => "pca_only",
            MatchMode::DtPca => "dt_pca",
        }
    }
}

impl fmt::Display for MatchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MatchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pca_only" | "pca-only" => Ok(MatchMode::PcaOnly),
            "dt_pca" | "dt-pca" => Ok(MatchMode::DtPca),
            other => Err(Error::InvalidArgument(format!(
                "unknown mode {other:?}, expected pca-only or dt-pca"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GalleryEntry {
    pub subject_id: String,
    pub variant: String,
    pub coords: EigenCoords,
    /// Average relative area of the entry's landmark mesh; `None` for PCA-only
    /// galleries.
    pub ra_avg: Option<f64>,
    pub source_path: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Gallery {
    /// Landmark count shared by every entry, `None` when built without landmarks.
    pub scheme: Option<usize>,
    pub entries: Vec<GalleryEntry>,
}

impl Gallery {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn supports_dt(&self) -> bool {
        self.scheme.is_some() && self.entries.iter().all(|e| e.ra_avg.is_some())
    }
}

/// One training image as handed to [`build_gallery`].
#[derive(Debug, Clone)]
pub struct TrainingSample {
    pub image: ImageVector,
    pub landmarks: Option<LandmarkSet>,
    pub subject_id: String,
    pub variant: String,
    pub source_path: String,
}

/// Projects every sample and, when landmarks are present, records its mesh
/// descriptor. Either all samples carry landmarks of one scheme or none do.
pub fn build_gallery(model: &EigenModel, train: &[TrainingSample]) -> Result<Gallery> {
    if train.is_empty() {
        return Err(Error::Empty("gallery needs at least one training sample"));
    }
    let with_landmarks = train.iter().filter(|s| s.landmarks.is_some()).count();
    if with_landmarks != 0 && with_landmarks != train.len() {
        return Err(Error::MissingLandmarks(format!(
            "{} of {} training samples lack landmarks",
            train.len() - with_landmarks,
            train.len()
        )));
    }
    let scheme = train[0].landmarks.as_ref().map(LandmarkSet::scheme);

    let entries = train
        .iter()
        .map(|s| {
            let ra_avg = match (&s.landmarks, scheme) {
                (Some(lm), Some(expected)) => {
                    if lm.scheme() != expected {
                        return Err(Error::SchemeMismatch {
                            expected,
                            found: lm.scheme(),
                        });
                    }
                    Some(delaunay(lm)?.average_relative_area())
                }
                _ => None,
            };
            Ok(GalleryEntry {
                subject_id: s.subject_id.clone(),
                variant: s.variant.clone(),
                coords: model.project(&s.image)?,
                ra_avg,
                source_path: s.source_path.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Gallery { scheme, entries })
}

/// `|tt_avg − tn_avg|`, the landmark-area difference between probe and entry.
pub fn dt_difference(tt_avg: f64, tn_avg: f64) -> f64 {
    ((tt_avg - tn_avg) * (tt_avg - tn_avg)).sqrt()
}

pub fn fused_score(ed: f64, d: f64, dt_divisor: f64) -> Result<f64> {
    if !(dt_divisor > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "dt divisor must be positive, got {dt_divisor}"
        )));
    }
    if ed < 0.0 || d < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "distances must be non-negative, got ed={ed} d={d}"
        )));
    }
    Ok(ed + d / dt_divisor)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntryScore {
    pub ed: f64,
    pub d: f64,
    pub rv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestMatch {
    pub index: usize,
    pub subject: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchReport {
    pub best: BestMatch,
    pub mode: MatchMode,
    pub dt_divisor: f64,
    pub scores: Vec<EntryScore>,
}

impl MatchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serialization cannot fail")
    }
}

/// Scores a probe against every gallery entry and returns the lowest-RV entry.
///
/// In PCA-only mode the landmarks are ignored, `D` is 0 and `RV == ED`.
pub fn recognize(
    gallery: &Gallery,
    model: &EigenModel,
    test_image: &ImageVector,
    test_landmarks: Option<&LandmarkSet>,
    mode: MatchMode,
    dt_divisor: f64,
) -> Result<MatchReport> {
    let test_ra = match mode {
        MatchMode::PcaOnly => None,
        MatchMode::DtPca => {
            let lm = test_landmarks
                .ok_or_else(|| Error::MissingLandmarks("no probe landmarks given".into()))?;
            let expected = gallery.scheme.filter(|_| gallery.supports_dt()).ok_or_else(|| {
                Error::MissingLandmarks("gallery was built without landmarks".into())
            })?;
            if lm.scheme() != expected {
                return Err(Error::SchemeMismatch {
                    expected,
                    found: lm.scheme(),
                });
            }
            Some(delaunay(lm)?.average_relative_area())
        }
    };
    let coords = model.project(test_image)?;
    recognize_coords(gallery, &coords, test_ra, mode, dt_divisor)
}

/// Scoring step of [`recognize`] for a probe already reduced to eigenspace
/// coordinates and (in DT mode) its average relative area.
pub fn recognize_coords(
    gallery: &Gallery,
    coords: &EigenCoords,
    test_ra: Option<f64>,
    mode: MatchMode,
    dt_divisor: f64,
) -> Result<MatchReport> {
    if gallery.is_empty() {
        return Err(Error::Empty("gallery has no entries"));
    }
    if !(dt_divisor > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "dt divisor must be positive, got {dt_divisor}"
        )));
    }
    let scores = gallery
        .entries
        .iter()
        .map(|entry| {
            let ed = eigen_distance(coords, &entry.coords)?;
            let d = match mode {
                MatchMode::PcaOnly => 0.0,
                MatchMode::DtPca => {
                    let tt = test_ra.ok_or_else(|| {
                        Error::MissingLandmarks("no probe mesh descriptor".into())
                    })?;
                    let tn = entry.ra_avg.ok_or_else(|| {
                        Error::MissingLandmarks(format!(
                            "gallery entry {} has no mesh descriptor",
                            entry.source_path
                        ))
                    })?;
                    dt_difference(tt, tn)
                }
            };
            Ok(EntryScore {
                ed,
                d,
                rv: fused_score(ed, d, dt_divisor)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let key = |s: &EntryScore| match mode {
        MatchMode::PcaOnly => s.ed,
        MatchMode::DtPca => s.rv,
    };
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if key(s) < key(&scores[best]) {
            best = i;
        }
    }
    Ok(MatchReport {
        best: BestMatch {
            index: best,
            subject: gallery.entries[best].subject_id.clone(),
        },
        mode,
        dt_divisor,
        scores,
    })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryRecord {
    subject: String,
    variant: String,
    ra_avg: Option<f64>,
    coords: EigenCoords,
    source: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GalleryFile {
    format_version: u32,
    model: ModelRecord,
    scheme: Option<usize>,
    entries: Vec<EntryRecord>,
}

pub fn gallery_to_json(gallery: &Gallery, model: &EigenModel) -> String {
    let file = GalleryFile {
        format_version: GALLERY_FORMAT_VERSION,
        model: model.to_record(),
        scheme: gallery.scheme,
        entries: gallery
            .entries
            .iter()
            .map(|e| EntryRecord {
                subject: e.subject_id.clone(),
                variant: e.variant.clone(),
                ra_avg: e.ra_avg,
                coords: e.coords.clone(),
                source: e.source_path.clone(),
            })
            .collect(),
    };
    serde_json::to_string(&file).expect("gallery serialization cannot fail")
}

pub fn gallery_from_json(text: &str) -> Result<(Gallery, EigenModel)> {
    #[derive(Deserialize)]
    struct VersionProbe {
        format_version: Option<u32>,
    }
    let probe: VersionProbe =
        serde_json::from_str(text).map_err(|e| Error::Gallery(e.to_string()))?;
    match probe.format_version {
        Some(GALLERY_FORMAT_VERSION) => {}
        Some(v) => {
            return Err(Error::Gallery(format!(
                "unsupported format_version {v}, expected {GALLERY_FORMAT_VERSION}"
            )))
        }
        None => return Err(Error::Gallery("missing format_version".into())),
    }
    let file: GalleryFile =
        serde_json::from_str(text).map_err(|e| Error::Gallery(e.to_string()))?;
    let model = EigenModel::from_record(file.model)?;

    let mut entries = Vec::with_capacity(file.entries.len());
    for (i, e) in file.entries.into_iter().enumerate() {
        if e.coords.len() != model.k() {
            return Err(Error::Gallery(format!(
                "entry {i} has {} coordinates but the model declares k={}",
                e.coords.len(),
                model.k()
            )));
        }
        match (file.scheme, e.ra_avg) {
            (Some(_), Some(r)) if r > 0.0 && r <= 1.0 => {}
            (None, None) => {}
            (Some(_), r) => {
                return Err(Error::Gallery(format!(
                    "entry {i} has ra_avg {r:?}, expected a value in (0, 1]"
                )))
            }
            (None, Some(_)) => {
                return Err(Error::Gallery(format!(
                    "entry {i} has ra_avg but the gallery declares no scheme"
                )))
            }
        }
        entries.push(GalleryEntry {
            subject_id: e.subject,
            variant: e.variant,
            coords: e.coords,
            ra_avg: e.ra_avg,
            source_path: e.source,
        });
    }
    if entries.is_empty() {
        return Err(Error::Gallery("no entries".into()));
    }
    Ok((
        Gallery {
            scheme: file.scheme,
            entries,
        },
        model,
    ))
}

/// Writes `{"format_version":1,"model":{..},"scheme":..,"entries":[..]}` atomically.
pub fn save_gallery(gallery: &Gallery, model: &EigenModel, path: impl AsRef<Path>) -> Result<()> {
    crate::write_atomic(path.as_ref(), gallery_to_json(gallery, model).as_bytes())
}

pub fn load_gallery(path: impl AsRef<Path>) -> Result<(Gallery, EigenModel)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    gallery_from_json(&text)
}
