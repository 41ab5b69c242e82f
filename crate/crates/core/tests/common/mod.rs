//! Test-only oracles and fixtures. Nothing here calls into the implementation paths it
//! is used to check.
#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use dtface::dataset_io::{encode_pgm, render_manifest, DatasetManifest, ManifestEntry};
use dtface::{ImageVector, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_points(rng: &mut impl Rng, n: usize, extent: f64) -> Vec<Point> {
    (0..n)
        .map(|_| Point::new(rng.random_range(0.0..extent), rng.random_range(0.0..extent)))
        .collect()
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Circumcenter and squared radius via the explicit perpendicular-bisector formula.
pub fn circumcircle(a: Point, b: Point, c: Point) -> (Point, f64) {
    let d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
    let a2 = a.x * a.x + a.y * a.y;
    let b2 = b.x * b.x + b.y * b.y;
    let c2 = c.x * c.x + c.y * c.y;
    let ux = (a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / d;
    let uy = (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / d;
    let r2 = (a.x - ux).powi(2) + (a.y - uy).powi(2);
    (Point::new(ux, uy), r2)
}

/// No three points within `margin` (relative) of collinear and no four within
/// `margin` of cocircular.
pub fn in_general_position(pts: &[Point], margin: f64) -> bool {
    let n = pts.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let (a, b, c) = (pts[i], pts[j], pts[k]);
                let scale = ((b.x - a.x).hypot(b.y - a.y)) * ((c.x - a.x).hypot(c.y - a.y));
                if cross(a, b, c).abs() <= margin * scale {
                    return false;
                }
                let (center, r2) = circumcircle(a, b, c);
                for (l, p) in pts.iter().enumerate() {
                    if l == i || l == j || l == k {
                        continue;
                    }
                    let d2 = (p.x - center.x).powi(2) + (p.y - center.y).powi(2);
                    if (d2 - r2).abs() <= margin * r2 {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// O(n⁴) Delaunay oracle: every triple whose circumcircle is empty of other points.
/// Valid only in general position.
pub fn brute_force_delaunay(pts: &[Point]) -> Vec<[usize; 3]> {
    let n = pts.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if cross(pts[i], pts[j], pts[k]) == 0.0 {
                    continue;
                }
                let (center, r2) = circumcircle(pts[i], pts[j], pts[k]);
                let empty = pts.iter().enumerate().all(|(l, p)| {
                    l == i
                        || l == j
                        || l == k
                        || (p.x - center.x).powi(2) + (p.y - center.y).powi(2) >= r2
                });
                if empty {
                    out.push([i, j, k]);
                }
            }
        }
    }
    out
}

/// Andrew's monotone chain; returns hull vertex indices counter-clockwise, strict
/// turns only.
pub fn convex_hull(pts: &[Point]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    idx.sort_by(|&a, &b| {
        pts[a]
            .x
            .total_cmp(&pts[b].x)
            .then(pts[a].y.total_cmp(&pts[b].y))
    });
    let mut hull: Vec<usize> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &usize>> = if pass == 0 {
            Box::new(idx.iter())
        } else {
            Box::new(idx.iter().rev())
        };
        for &i in iter {
            while hull.len() >= start + 2
                && cross(pts[hull[hull.len() - 2]], pts[hull[hull.len() - 1]], pts[i]) <= 0.0
            {
                hull.pop();
            }
            hull.push(i);
        }
        hull.pop();
    }
    hull
}

pub fn shoelace(poly: &[Point]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a.x * b.y - b.x * a.y
        })
        .sum::<f64>()
        .abs()
        / 2.0
}

pub fn apply_similarity(
    pts: &[Point],
    angle: f64,
    scale: f64,
    shift: (f64, f64),
    reflect: bool,
) -> Vec<Point> {
    let (s, c) = angle.sin_cos();
    pts.iter()
        .map(|p| {
            let x = if reflect { -p.x } else { p.x };
            Point::new(
                scale * (c * x - s * p.y) + shift.0,
                scale * (s * x + c * p.y) + shift.1,
            )
        })
        .collect()
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix (row-major `d x d`).
/// Returns eigenpairs sorted by descending eigenvalue.
pub fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> Vec<(f64, Vec<f64>)> {
    let d = a.len();
    let mut v = vec![vec![0.0; d]; d];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..d)
            .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..d)
        .map(|j| (a[j][j], v.iter().map(|row| row[j]).collect()))
        .collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    pairs
}

/// Pixel-space PCA oracle: top-`k` eigenvectors of the d×d sample covariance.
pub fn covariance_pca(images: &[Vec<f64>], k: usize) -> (Vec<f64>, Vec<(f64, Vec<f64>)>) {
    let n = images.len();
    let d = images[0].len();
    let mean: Vec<f64> = (0..d)
        .map(|j| images.iter().map(|x| x[j]).sum::<f64>() / n as f64)
        .collect();
    let mut cov = vec![vec![0.0; d]; d];
    for x in images {
        for i in 0..d {
            for j in 0..d {
                cov[i][j] += (x[i] - mean[i]) * (x[j] - mean[j]) / (n - 1) as f64;
            }
        }
    }
    let mut pairs = jacobi_eigen(cov);
    pairs.truncate(k);
    (mean, pairs)
}

pub fn oracle_project(mean: &[f64], pairs: &[(f64, Vec<f64>)], x: &[f64]) -> Vec<f64> {
    pairs
        .iter()
        .map(|(_, u)| u.iter().zip(x).zip(mean).map(|((u, x), m)| u * (x - m)).sum())
        .collect()
}

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

pub fn random_images(rng: &mut impl Rng, n: usize, width: usize, height: usize) -> Vec<ImageVector> {
    (0..n)
        .map(|_| {
            let px: Vec<u8> = (0..width * height).map(|_| rng.random()).collect();
            ImageVector::from_bytes(width, height, &px).unwrap()
        })
        .collect()
}

/// Layout of a synthetic face dataset written to disk.
pub struct SyntheticDataset {
    pub root: PathBuf,
    pub manifest_path: PathBuf,
    pub manifest: DatasetManifest,
    pub subjects: usize,
    pub variants: usize,
}

pub const VARIANTS: [&str; 9] = [
    "normal",
    "happy",
    "sad",
    "sleepy",
    "surprised",
    "wink",
    "glasses",
    "leftlight",
    "rightlight",
];

/// Writes a deterministic `subjects x variants` face-like dataset: each subject has a
/// distinct smooth intensity pattern and landmark layout; variants add lighting
/// gradients, noise and landmark jitter. Landmark files for every entry in
/// `schemes` go to `root/lm<scheme>/`; the manifest points at the first scheme.
pub fn write_synthetic_dataset(
    root: &Path,
    subjects: usize,
    variants: usize,
    width: usize,
    height: usize,
    schemes: &[usize],
    seed: u64,
) -> SyntheticDataset {
    let mut rng = rng(seed);
    fs::create_dir_all(root.join("img")).unwrap();
    for s in schemes {
        fs::create_dir_all(root.join(format!("lm{s}"))).unwrap();
    }
    let mut entries = Vec::new();
    for s in 0..subjects {
        // subject appearance: a few gaussian blobs
        let blobs: Vec<(f64, f64, f64, f64)> = (0..6)
            .map(|_| {
                (
                    rng.random_range(0.0..width as f64),
                    rng.random_range(0.0..height as f64),
                    rng.random_range(0.05..0.25) * width as f64,
                    rng.random_range(-0.35..0.35),
                )
            })
            .collect();
        let layouts: Vec<Vec<Point>> = schemes
            .iter()
            .map(|&m| {
                (0..m)
                    .map(|_| {
                        Point::new(
                            rng.random_range(0.15..0.85) * width as f64,
                            rng.random_range(0.1..0.9) * height as f64,
                        )
                    })
                    .collect()
            })
            .collect();
        for v in 0..variants {
            let light = rng.random_range(-0.08..0.08);
            let mut px = Vec::with_capacity(width * height);
            for y in 0..height {
                for x in 0..width {
                    let mut val = 0.5 + light * (x as f64 / width as f64 - 0.5);
                    for &(bx, by, r, amp) in &blobs {
                        let d2 = (x as f64 - bx).powi(2) + (y as f64 - by).powi(2);
                        val += amp * (-d2 / (2.0 * r * r)).exp();
                    }
                    val += rng.random_range(-0.03..0.03);
                    px.push((val.clamp(0.0, 1.0) * 255.0).round() as u8);
                }
            }
            let stem = format!("s{s:02}_{}", VARIANTS.get(v).copied().unwrap_or("extra"));
            let image = ImageVector::from_bytes(width, height, &px).unwrap();
            let image_path = root.join("img").join(format!("{stem}.pgm"));
            fs::write(&image_path, encode_pgm(&image)).unwrap();

            for (layout, &m) in layouts.iter().zip(schemes) {
                let text: String = layout
                    .iter()
                    .map(|p| {
                        format!(
                            "{:.3},{:.3}\n",
                            p.x + rng.random_range(-0.6..0.6),
                            p.y + rng.random_range(-0.6..0.6)
                        )
                    })
                    .collect();
                fs::write(root.join(format!("lm{m}")).join(format!("{stem}.csv")), text)
                    .unwrap();
            }
            entries.push(ManifestEntry {
                image_path,
                subject_id: format!("s{s:02}"),
                variant: VARIANTS.get(v).copied().unwrap_or("extra").to_string(),
                landmark_path: root
                    .join(format!("lm{}", schemes.first().copied().unwrap_or(68)))
                    .join(format!("{stem}.csv")),
            });
        }
    }
    let manifest = DatasetManifest::new(entries).unwrap();
    let manifest_path = root.join("manifest.csv");
    fs::write(&manifest_path, render_manifest(&manifest)).unwrap();
    SyntheticDataset {
        root: root.to_path_buf(),
        manifest_path,
        manifest,
        subjects,
        variants,
    }
}
