//! Face recognition that fuses eigenface matching with a Delaunay landmark-mesh
//! descriptor.
//!
//! The pipeline has two independent views of a face:
//!
//! - **Appearance**: grayscale images are mean-centred and projected onto the top-k
//!   eigenfaces ([`eigenface`]). Matching distance is the Euclidean distance `ED`
//!   between eigenspace coordinates.
//! - **Shape**: the facial landmarks are Delaunay-triangulated ([`geometry`]). Every
//!   triangle area is divided by the largest one and the mean of those ratios, the
//!   average relative area, summarises the mesh as one scalar.
//!
//! [`recognizer`] fuses both into `RV = ED + |ΔRA_avg| / divisor` (divisor `0.001` by
//! default) and picks the gallery entry with the smallest score. [`evalharness`]
//! runs whole train/test experiments and renders accuracy tables.

pub mod dataset_io;
pub mod error;
pub mod eigenface;
pub mod evalharness;
pub mod geometry;
pub mod recognizer;

use std::io::Write;
use std::path::Path;

pub use dataset_io::{
    load_image, load_landmarks, load_manifest, split_dataset, DatasetManifest, ImageVector,
    LandmarkSet, ManifestEntry,
};
pub use eigenface::{fit_eigenmodel, EigenCoords, EigenModel, DEFAULT_K};
pub use error::{Category, Error, Result};
pub use evalharness::{AccuracyTable, ExperimentConfig, ReportFormat};
pub use geometry::{delaunay, in_circumcircle, CirclePosition, Point, Triangle, Triangulation};
pub use recognizer::{
    build_gallery, load_gallery, recognize, save_gallery, Gallery, GalleryEntry, MatchMode,
    MatchReport, TrainingSample, DEFAULT_DT_DIVISOR,
};

/// Writes `bytes` to a temporary file next to `path` and renames it into place, so a
/// failed write never leaves a partial file behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
