//! Delaunay triangulation of landmark sets and the triangle-area descriptor chain
//! (edge lengths, Heron areas, relative areas, average relative area).
//!
//! The mesh is built incrementally (Bowyer–Watson). Instead of a finite super-triangle
//! the hull is closed with ghost triangles sharing a vertex at infinity, so points near
//! the hull never lose triangles. Orientation and in-circle signs come from adaptive
//! exact predicates, which makes the output a true Delaunay triangulation for any
//! input in general position.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::dataset_io::LandmarkSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point { x, y }
    }
}

fn coord(p: Point) -> robust::Coord<f64> {
    robust::Coord { x: p.x, y: p.y }
}

/// Exact-sign orientation: positive when `a, b, c` turn counter-clockwise, zero when
/// collinear. The magnitude is only approximate.
pub fn orient2d(a: Point, b: Point, c: Point) -> f64 {
    robust::orient2d(coord(a), coord(b), coord(c))
}

/// Exact-sign in-circle test for a counter-clockwise `a, b, c`: positive when `p` is
/// strictly inside the circumcircle.
fn incircle_exact(a: Point, b: Point, c: Point, p: Point) -> f64 {
    robust::incircle(coord(a), coord(b), coord(c), coord(p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CirclePosition {
    Inside,
    On,
    Outside,
}

/// Relative threshold below which the lifted determinant counts as zero.
pub const INCIRCLE_TOLERANCE: f64 = 1e-12;

/// Classifies `p` against the circumcircle of triangle `abc`, independent of the
/// triangle's orientation.
///
/// The lifted 3x3 determinant is evaluated in `f64`; it reports [`CirclePosition::On`]
/// when its magnitude is within [`INCIRCLE_TOLERANCE`] of the permanent (the sum of
/// absolute term magnitudes). Rounding error is orders of magnitude below that band,
/// so any `Inside`/`Outside` answer has the correct sign.
pub fn in_circumcircle(a: Point, b: Point, c: Point, p: Point) -> Result<CirclePosition> {
    let orient = orient2d(a, b, c);
    if orient == 0.0 {
        return Err(Error::Collinear);
    }
    let (adx, ady) = (a.x - p.x, a.y - p.y);
    let (bdx, bdy) = (b.x - p.x, b.y - p.y);
    let (cdx, cdy) = (c.x - p.x, c.y - p.y);
    let alift = adx * adx + ady * ady;
    let blift = bdx * bdx + bdy * bdy;
    let clift = cdx * cdx + cdy * cdy;
    let bc = bdx * cdy - cdx * bdy;
    let ca = cdx * ady - adx * cdy;
    let ab = adx * bdy - bdx * ady;
    let det = alift * bc + blift * ca + clift * ab;
    let permanent = alift * ((bdx * cdy).abs() + (cdx * bdy).abs())
        + blift * ((cdx * ady).abs() + (adx * cdy).abs())
        + clift * ((adx * bdy).abs() + (bdx * ady).abs());

    if det.abs() <= INCIRCLE_TOLERANCE * permanent {
        return Ok(CirclePosition::On);
    }
    let inside = (det > 0.0) == (orient > 0.0);
    Ok(if inside {
        CirclePosition::Inside
    } else {
        CirclePosition::Outside
    })
}

pub fn edge_length(p: Point, q: Point) -> f64 {
    ((p.x - q.x).powi(2) + (p.y - q.y).powi(2)).sqrt()
}

/// Heron's formula from three edge lengths.
///
/// The radicand `S(S-l1)(S-l2)(S-l3)` is evaluated in the factored, sorted form
/// `(a+(b+c))(c-(a-b))(c+(a-b))(a+(b-c)) / 16` with `a >= b >= c`, which is the same
/// polynomial but keeps needle-shaped triangles accurate. A slightly negative radicand
/// clamps to zero; one below `-1e-9 * S^4` is a triangle-inequality violation.
pub fn triangle_area(l1: f64, l2: f64, l3: f64) -> Result<f64> {
    for l in [l1, l2, l3] {
        if !l.is_finite() || l < 0.0 {
            return Err(Error::InvalidArgument(format!("invalid edge length {l}")));
        }
    }
    let mut e = [l1, l2, l3];
    e.sort_by(|x, y| y.total_cmp(x));
    let [a, b, c] = e;
    let s = (a + b + c) / 2.0;
    let radicand = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c)) / 16.0;
    if radicand < 0.0 {
        if radicand < -1e-9 * s.powi(4) {
            return Err(Error::TriangleInequality(l1, l2, l3));
        }
        return Ok(0.0);
    }
    Ok(radicand.sqrt())
}

/// Each area divided by the largest one.
pub fn relative_areas(areas: &[f64]) -> Result<Vec<f64>> {
    if areas.is_empty() {
        return Err(Error::Empty("relative_areas needs at least one area"));
    }
    if let Some(a) = areas.iter().find(|a| !a.is_finite() || **a < 0.0) {
        return Err(Error::InvalidArgument(format!("invalid area {a}")));
    }
    let max = areas.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Err(Error::ZeroAreas);
    }
    Ok(areas.iter().map(|a| a / max).collect())
}

/// Arithmetic mean over all triangles.
pub fn average_relative_area(relative_areas: &[f64]) -> Result<f64> {
    if relative_areas.is_empty() {
        return Err(Error::Empty("average_relative_area needs at least one value"));
    }
    Ok(relative_areas.iter().sum::<f64>() / relative_areas.len() as f64)
}

/// Three distinct point indices in ascending order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Triangle {
    vertices: [usize; 3],
}

impl Triangle {
    pub fn new(a: usize, b: usize, c: usize) -> Self {
        let mut vertices = [a, b, c];
        vertices.sort_unstable();
        debug_assert!(vertices[0] != vertices[1] && vertices[1] != vertices[2]);
        Triangle { vertices }
    }

    pub fn vertices(&self) -> [usize; 3] {
        self.vertices
    }

    pub fn edges(&self) -> [(usize, usize); 3] {
        let [a, b, c] = self.vertices;
        [(a, b), (a, c), (b, c)]
    }
}

/// A Delaunay mesh over a landmark set together with its area statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Triangulation {
    #[serde(serialize_with = "serialize_points")]
    points: Vec<Point>,
    triangles: Vec<Triangle>,
    areas: Vec<f64>,
    relative_areas: Vec<f64>,
    average_relative_area: f64,
}

fn serialize_points<S: serde::Serializer>(
    points: &[Point],
    ser: S,
) -> std::result::Result<S::Ok, S::Error> {
    ser.collect_seq(points.iter().map(|p| [p.x, p.y]))
}

impl Triangulation {
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Triangles in canonical order (sorted by their ascending vertex triple).
    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn relative_areas(&self) -> &[f64] {
        &self.relative_areas
    }

    pub fn average_relative_area(&self) -> f64 {
        self.average_relative_area
    }

    /// Unique undirected edges, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<_> = self
            .triangles
            .iter()
            .flat_map(|t| t.edges())
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        edges.sort_unstable();
        edges
    }

    /// Mesh as JSON: `{"points","triangles","areas","relative_areas","average_relative_area"}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("mesh serialization cannot fail")
    }
}

const GHOST: usize = usize::MAX;

/// Incremental Bowyer–Watson state. Real triangles are counter-clockwise. A ghost
/// triangle `[a, b, GHOST]` stands for the unbounded region beyond hull edge `a -> b`,
/// which lies to the left of that directed edge.
struct Builder<'a> {
    pts: &'a [Point],
    tris: Vec<[usize; 3]>,
}

impl<'a> Builder<'a> {
    fn seed(pts: &'a [Point]) -> Result<Self> {
        let (a, b) = (0, 1);
        let c = (2..pts.len())
            .find(|&i| orient2d(pts[a], pts[b], pts[i]) != 0.0)
            .ok_or(Error::Collinear)?;
        let (b, c) = if orient2d(pts[a], pts[b], pts[c]) > 0.0 {
            (b, c)
        } else {
            (c, b)
        };
        Ok(Builder {
            pts,
            tris: vec![
                [a, b, c],
                [b, a, GHOST],
                [c, b, GHOST],
                [a, c, GHOST],
            ],
        })
    }

    fn conflicts(&self, tri: &[usize; 3], p: Point) -> bool {
        let pts = self.pts;
        if tri[2] == GHOST {
            let (a, b) = (pts[tri[0]], pts[tri[1]]);
            let o = orient2d(a, b, p);
            if o != 0.0 {
                return o > 0.0;
            }
            // on the hull line: conflicts only inside the open segment
            let before_b = (p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y) > 0.0;
            let after_a = (p.x - b.x) * (a.x - b.x) + (p.y - b.y) * (a.y - b.y) > 0.0;
            before_b && after_a
        } else {
            incircle_exact(pts[tri[0]], pts[tri[1]], pts[tri[2]], p) > 0.0
        }
    }

    fn insert(&mut self, index: usize) {
        let p = self.pts[index];
        let (cavity, keep): (Vec<[usize; 3]>, Vec<[usize; 3]>) =
            self.tris.iter().partition(|t| self.conflicts(t, p));
        debug_assert!(!cavity.is_empty(), "point {index} conflicts with nothing");

        let directed: HashSet<(usize, usize)> = cavity
            .iter()
            .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])])
            .collect();
        self.tris = keep;
        for t in &cavity {
            for (u, v) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                if directed.contains(&(v, u)) {
                    continue;
                }
                let tri = if v == GHOST {
                    [index, u, GHOST]
                } else if u == GHOST {
                    [v, index, GHOST]
                } else {
                    [u, v, index]
                };
                self.tris.push(tri);
            }
        }
    }

    /// Resolves exactly cocircular quads deterministically: the shared diagonal must
    /// touch the smallest vertex index of the quad.
    fn canonicalize_cocircular(&mut self) {
        self.tris.retain(|t| t[2] != GHOST);
        let max_flips = 4 * self.tris.len() * self.tris.len() + 16;
        let mut flips = 0;
        'restart: while flips < max_flips {
            let owner: HashMap<(usize, usize), usize> = self
                .tris
                .iter()
                .enumerate()
                .flat_map(|(i, t)| [((t[0], t[1]), i), ((t[1], t[2]), i), ((t[2], t[0]), i)])
                .collect();
            for ti in 0..self.tris.len() {
                let t = self.tris[ti];
                for k in 0..3 {
                    let (u, v, w) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
                    let Some(&si) = owner.get(&(v, u)) else {
                        continue;
                    };
                    let s = self.tris[si];
                    let x = s.iter().copied().find(|&i| i != u && i != v).unwrap();
                    let pts = self.pts;
                    if incircle_exact(pts[u], pts[v], pts[w], pts[x]) != 0.0 {
                        continue;
                    }
                    if u.min(v) < w.min(x) {
                        continue;
                    }
                    self.tris[ti] = [w, u, x];
                    self.tris[si] = [x, v, w];
                    flips += 1;
                    continue 'restart;
                }
            }
            break;
        }
    }
}

/// Delaunay triangulation of a landmark set, with the area chain populated.
///
/// Exactly cocircular configurations admit several valid meshes; the choice is fixed
/// by flipping each such quad so its diagonal touches the quad's smallest index.
pub fn delaunay(landmarks: &LandmarkSet) -> Result<Triangulation> {
    triangulate_points(landmarks.points())
}

pub(crate) fn triangulate_points(points: &[Point]) -> Result<Triangulation> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints(points.len()));
    }
    let mut builder = Builder::seed(points)?;
    let seeded: Vec<usize> = builder.tris[0].to_vec();
    for i in 0..points.len() {
        if !seeded.contains(&i) {
            builder.insert(i);
        }
    }
    builder.canonicalize_cocircular();

    let mut triangles: Vec<Triangle> = builder
        .tris
        .iter()
        .map(|t| Triangle::new(t[0], t[1], t[2]))
        .collect();
    triangles.sort_unstable();

    let areas = triangles
        .iter()
        .map(|t| {
            let [a, b, c] = t.vertices().map(|i| points[i]);
            triangle_area(edge_length(a, b), edge_length(b, c), edge_length(c, a))
        })
        .collect::<Result<Vec<_>>>()?;
    let relative = relative_areas(&areas)?;
    let average = average_relative_area(&relative)?;

    Ok(Triangulation {
        points: points.to_vec(),
        triangles,
        areas,
        relative_areas: relative,
        average_relative_area: average,
    })
}
