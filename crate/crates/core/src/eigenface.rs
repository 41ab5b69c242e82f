//! Eigenface model: mean face, top-k eigenvectors of the centred training images, and
//! projection into / reconstruction from eigenspace.
//!
//! Training sets are tiny next to the pixel count (around a hundred images of 77760
//! pixels), so the eigenvectors come from the `n x n` Gram matrix of the centred rows
//! (the snapshot method) and are lifted back to pixel space. For a centred data matrix
//! `X` with SVD `U Σ Vᵀ`, the Gram matrix `X Xᵀ` has eigenpairs `(σ², u)` and the pixel
//! space eigenfaces are `Xᵀ u / σ`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::dataset_io::ImageVector;
use crate::error::{Error, Result};

/// Number of retained components when the caller does not choose one.
pub const DEFAULT_K: usize = 25;

/// Gram eigenvalues below this fraction of the largest are treated as zero.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenModel {
    width: usize,
    height: usize,
    requested_k: usize,
    mean: Vec<f64>,
    eigenvalues: Vec<f64>,
    eigenvectors: Vec<Vec<f64>>,
}

/// Coordinates of one image in eigenspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EigenCoords(pub Vec<f64>);

impl EigenCoords {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_shapes(images: &[ImageVector], width: usize, height: usize) -> Result<()> {
    for img in images {
        if img.width() != width || img.height() != height {
            return Err(Error::DimensionMismatch {
                expected: format!("{width}x{height}"),
                found: format!("{}x{}", img.width(), img.height()),
            });
        }
    }
    Ok(())
}

pub fn mean_image(images: &[ImageVector]) -> Result<ImageVector> {
    let first = images
        .first()
        .ok_or(Error::Empty("mean_image needs at least one image"))?;
    check_shapes(images, first.width(), first.height())?;
    let mut sum = vec![0.0; first.len()];
    for img in images {
        for (s, v) in sum.iter_mut().zip(img.values()) {
            *s += v;
        }
    }
    let n = images.len() as f64;
    sum.iter_mut().for_each(|s| *s /= n);
    Ok(ImageVector::from_raw(first.width(), first.height(), sum))
}

fn centered_rows(images: &[ImageVector], mean: &ImageVector) -> Result<Vec<Vec<f64>>> {
    check_shapes(images, mean.width(), mean.height())?;
    Ok(images
        .iter()
        .map(|img| {
            img.values()
                .iter()
                .zip(mean.values())
                .map(|(v, m)| v - m)
                .collect()
        })
        .collect())
}

/// Row `i` is `images[i] - mean`.
pub fn center_images(images: &[ImageVector], mean: &ImageVector) -> Result<DMatrix<f64>> {
    let rows = centered_rows(images, mean)?;
    Ok(DMatrix::from_row_iterator(
        rows.len(),
        mean.len(),
        rows.into_iter().flatten(),
    ))
}

/// Flips `v` so its largest-magnitude entry is positive. Entries within a relative
/// 1e-9 of the maximum count as tied and the first of them decides.
fn canonicalize_sign(v: &mut [f64]) {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(lead) = v.iter().find(|x| x.abs() >= max * (1.0 - 1e-9)) {
        if *lead < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Fits the eigenspace of `images`, keeping `min(k, rank)` components.
///
/// Eigenvalues are reported as `σ² / (n - 1)`, i.e. sample-covariance eigenvalues.
pub fn fit_eigenmodel(images: &[ImageVector], k: usize) -> Result<EigenModel> {
    if images.len() < 2 {
        return Err(Error::TooFewImages(images.len()));
    }
    if k < 1 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let mean = mean_image(images)?;
    let rows = centered_rows(images, &mean)?;
    let n = rows.len();
    if rows.iter().all(|r| r.iter().all(|&v| v == 0.0)) {
        return Err(Error::ZeroVariance);
    }

    let mut gram = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let g = dot(&rows[i], &rows[j]);
            gram[(i, j)] = g;
            gram[(j, i)] = g;
        }
    }
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let largest = eig.eigenvalues[order[0]];
    if !(largest > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let rank = order
        .iter()
        .take_while(|&&i| eig.eigenvalues[i] > largest * RANK_TOLERANCE)
        .count();
    let keep = k.min(rank);

    let d = mean.len();
    let mut eigenvectors: Vec<Vec<f64>> = Vec::with_capacity(keep);
    let mut eigenvalues = Vec::with_capacity(keep);
    for &col in order.iter().take(keep) {
        let lambda = eig.eigenvalues[col];
        let weights = eig.eigenvectors.column(col);
        let mut u = vec![0.0; d];
        for (row, w) in rows.iter().zip(weights.iter()) {
            for (ui, x) in u.iter_mut().zip(row) {
                *ui += w * x;
            }
        }
        // re-orthogonalize against the earlier components (twice is enough)
        for _ in 0..2 {
            for prev in &eigenvectors {
                let c = dot(&u, prev);
                u.iter_mut().zip(prev).for_each(|(ui, p)| *ui -= c * p);
            }
        }
        let norm = dot(&u, &u).sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroVariance);
        }
        u.iter_mut().for_each(|x| *x /= norm);
        canonicalize_sign(&mut u);
        eigenvectors.push(u);
        eigenvalues.push(lambda / (n - 1) as f64);
    }

    Ok(EigenModel {
        width: mean.width(),
        height: mean.height(),
        requested_k: k,
        mean: mean.into_values(),
        eigenvalues,
        eigenvectors,
    })
}

pub fn eigen_distance(a: &EigenCoords, b: &EigenCoords) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} coordinates", a.len()),
            found: b.len().to_string(),
        });
    }
    Ok(a.0
        .iter()
        .zip(&b.0)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt())
}

impl EigenModel {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Retained component count.
    pub fn k(&self) -> usize {
        self.eigenvectors.len()
    }

    /// The component count asked for at fit time, before clamping to the rank.
    pub fn requested_k(&self) -> usize {
        self.requested_k
    }

    pub fn was_clamped(&self) -> bool {
        self.k() < self.requested_k
    }

    pub fn mean(&self) -> ImageVector {
        ImageVector::from_raw(self.width, self.height, self.mean.clone())
    }

    pub fn mean_values(&self) -> &[f64] {
        &self.mean
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &[Vec<f64>] {
        &self.eigenvectors
    }

    fn check_image(&self, image: &ImageVector) -> Result<()> {
        check_shapes(std::slice::from_ref(image), self.width, self.height)
    }

    pub fn project(&self, image: &ImageVector) -> Result<EigenCoords> {
        self.check_image(image)?;
        let centered: Vec<f64> = image
            .values()
            .iter()
            .zip(&self.mean)
            .map(|(v, m)| v - m)
            .collect();
        Ok(EigenCoords(
            self.eigenvectors
                .iter()
                .map(|u| dot(u, &centered))
                .collect(),
        ))
    }

    /// `mean + Σ coords[j] · eigenvector[j]`, unclamped.
    pub fn reconstruct(&self, coords: &EigenCoords) -> Result<ImageVector> {
        if coords.len() != self.k() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} coordinates", self.k()),
                found: coords.len().to_string(),
            });
        }
        let mut out = self.mean.clone();
        for (c, u) in coords.0.iter().zip(&self.eigenvectors) {
            out.iter_mut().zip(u).for_each(|(o, x)| *o += c * x);
        }
        Ok(ImageVector::from_raw(self.width, self.height, out))
    }

    /// A copy keeping only the leading `k` components.
    pub fn truncated(&self, k: usize) -> EigenModel {
        let k = k.min(self.k());
        EigenModel {
            eigenvalues: self.eigenvalues[..k].to_vec(),
            eigenvectors: self.eigenvectors[..k].to_vec(),
            ..self.clone()
        }
    }

    pub(crate) fn to_record(&self) -> ModelRecord {
        ModelRecord {
            width: self.width,
            height: self.height,
            k: self.k(),
            requested_k: self.requested_k,
            mean: self.mean.clone(),
            eigenvalues: self.eigenvalues.clone(),
            eigenvectors: self.eigenvectors.clone(),
        }
    }

    pub(crate) fn from_record(r: ModelRecord) -> Result<Self> {
        let bad = |m: String| Err(Error::Model(m));
        let d = r.width * r.height;
        if d == 0 {
            return bad(format!("zero dimension {}x{}", r.width, r.height));
        }
        if r.mean.len() != d {
            return bad(format!("mean has {} values, expected {d}", r.mean.len()));
        }
        if r.eigenvalues.len() != r.k || r.eigenvectors.len() != r.k {
            return bad(format!(
                "declared k={} but found {} eigenvalues and {} eigenvectors",
                r.k,
                r.eigenvalues.len(),
                r.eigenvectors.len()
            ));
        }
        if let Some(v) = r.eigenvectors.iter().find(|v| v.len() != d) {
            return bad(format!("eigenvector has {} values, expected {d}", v.len()));
        }
        if r.requested_k < r.k {
            return bad(format!(
                "requested_k {} is below k {}",
                r.requested_k, r.k
            ));
        }
        let all_finite = r
            .mean
            .iter()
            .chain(&r.eigenvalues)
            .chain(r.eigenvectors.iter().flatten())
            .all(|v| v.is_finite());
        if !all_finite {
            return bad("non-finite value".into());
        }
        Ok(EigenModel {
            width: r.width,
            height: r.height,
            requested_k: r.requested_k,
            mean: r.mean,
            eigenvalues: r.eigenvalues,
            eigenvectors: r.eigenvectors,
        })
    }

    /// JSON: `{"width","height","k","requested_k","mean","eigenvalues","eigenvectors"}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_record()).expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let record: ModelRecord =
            serde_json::from_str(text).map_err(|e| Error::Model(e.to_string()))?;
        Self::from_record(record)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct ModelRecord {
    width: usize,
    height: usize,
    k: usize,
    requested_k: usize,
    mean: Vec<f64>,
    eigenvalues: Vec<f64>,
    eigenvectors: Vec<Vec<f64>>,
}
