//! Python bindings: `import dtface_py`.
//!
//! Images cross the boundary as `Image` objects, landmark sets as lists of `(x, y)`
//! tuples. Errors raise `DataError`, `NumericError` or `ValueError` (bad arguments).

use dtface::evalharness::{render_report, run_experiment};
use dtface::{geometry, recognizer, Category, CirclePosition, MatchMode, Point};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(dtface_py, DataError, PyException, "Malformed or inconsistent input data.");
create_exception!(dtface_py, NumericError, PyException, "Numerically degenerate input.");

fn to_py(err: dtface::Error) -> PyErr {
    let msg = err.to_string();
    match err.category() {
        Category::Usage => PyValueError::new_err(msg),
        Category::Data => DataError::new_err(msg),
        Category::Numeric => NumericError::new_err(msg),
    }
}

fn points(pts: &[(f64, f64)]) -> Vec<Point> {
    pts.iter().copied().map(Point::from).collect()
}

fn landmark_set(pts: Vec<(f64, f64)>) -> PyResult<dtface::LandmarkSet> {
    dtface::LandmarkSet::new(points(&pts)).map_err(to_py)
}

fn parse_mode(mode: &str) -> PyResult<MatchMode> {
    mode.parse().map_err(to_py)
}

/// Grayscale image with values in [0, 1], row-major.
#[pyclass(name = "Image", module = "dtface_py", frozen, from_py_object)]
#[derive(Clone)]
struct PyImage(dtface::ImageVector);

#[pymethods]
impl PyImage {
    #[new]
    fn new(width: usize, height: usize, values: Vec<f64>) -> PyResult<Self> {
        dtface::ImageVector::new(width, height, values)
            .map(PyImage)
            .map_err(to_py)
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.0.values().to_vec()
    }

    fn save(&self, path: &str) -> PyResult<()> {
        dtface::dataset_io::save_image(&self.0, path).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Image({}x{})", self.0.width(), self.0.height())
    }
}

/// Delaunay mesh of a landmark set with its area descriptors.
#[pyclass(name = "Mesh", module = "dtface_py", frozen)]
struct PyMesh(dtface::Triangulation);

#[pymethods]
impl PyMesh {
    #[getter]
    fn points(&self) -> Vec<(f64, f64)> {
        self.0.points().iter().map(|p| (p.x, p.y)).collect()
    }

    #[getter]
    fn triangles(&self) -> Vec<[usize; 3]> {
        self.0.triangles().iter().map(|t| t.vertices()).collect()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize)> {
        self.0.edges()
    }

    #[getter]
    fn areas(&self) -> Vec<f64> {
        self.0.areas().to_vec()
    }

    #[getter]
    fn relative_areas(&self) -> Vec<f64> {
        self.0.relative_areas().to_vec()
    }

    #[getter]
    fn average_relative_area(&self) -> f64 {
        self.0.average_relative_area()
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    fn __repr__(&self) -> String {
        format!(
            "Mesh(points={}, triangles={}, average_relative_area={})",
            self.0.points().len(),
            self.0.triangles().len(),
            self.0.average_relative_area()
        )
    }
}

#[pyclass(name = "EigenModel", module = "dtface_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyEigenModel(dtface::EigenModel);

#[pymethods]
impl PyEigenModel {
    /// Fits the top-`k` eigenfaces; `k` is clamped to the rank of the data.
    #[staticmethod]
    #[pyo3(signature = (images, k = dtface::DEFAULT_K))]
    fn fit(images: Vec<PyImage>, k: usize) -> PyResult<Self> {
        let images: Vec<_> = images.into_iter().map(|i| i.0).collect();
        dtface::fit_eigenmodel(&images, k)
            .map(PyEigenModel)
            .map_err(to_py)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        dtface::EigenModel::from_json(text)
            .map(PyEigenModel)
            .map_err(to_py)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[getter]
    fn k(&self) -> usize {
        self.0.k()
    }

    #[getter]
    fn requested_k(&self) -> usize {
        self.0.requested_k()
    }

    #[getter]
    fn eigenvalues(&self) -> Vec<f64> {
        self.0.eigenvalues().to_vec()
    }

    #[getter]
    fn eigenvectors(&self) -> Vec<Vec<f64>> {
        self.0.eigenvectors().to_vec()
    }

    #[getter]
    fn mean(&self) -> PyImage {
        PyImage(self.0.mean())
    }

    fn project(&self, image: &PyImage) -> PyResult<Vec<f64>> {
        self.0.project(&image.0).map(|c| c.0).map_err(to_py)
    }

    fn reconstruct(&self, coords: Vec<f64>) -> PyResult<PyImage> {
        self.0
            .reconstruct(&dtface::EigenCoords(coords))
            .map(PyImage)
            .map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "EigenModel(k={}, pixels={})",
            self.0.k(),
            self.0.mean_values().len()
        )
    }
}

/// Stored training set: eigenspace coordinates plus, optionally, mesh descriptors.
#[pyclass(name = "Gallery", module = "dtface_py", frozen)]
struct PyGallery {
    gallery: dtface::Gallery,
    model: dtface::EigenModel,
}

#[pymethods]
impl PyGallery {
    /// `samples` holds `(image, subject_id, variant, landmarks_or_None)` tuples.
    #[staticmethod]
    #[allow(clippy::type_complexity)]
    fn build(
        model: &PyEigenModel,
        samples: Vec<(PyImage, String, String, Option<Vec<(f64, f64)>>)>,
    ) -> PyResult<Self> {
        let samples = samples
            .into_iter()
            .map(|(image, subject_id, variant, landmarks)| {
                Ok(dtface::TrainingSample {
                    image: image.0,
                    landmarks: landmarks.map(landmark_set).transpose()?,
                    source_path: format!("{subject_id}/{variant}"),
                    subject_id,
                    variant,
                })
            })
            .collect::<PyResult<Vec<_>>>()?;
        let gallery = dtface::build_gallery(&model.0, &samples).map_err(to_py)?;
        Ok(PyGallery {
            gallery,
            model: model.0.clone(),
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let (gallery, model) = dtface::load_gallery(path).map_err(to_py)?;
        Ok(PyGallery { gallery, model })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        dtface::save_gallery(&self.gallery, &self.model, path).map_err(to_py)
    }

    fn to_json(&self) -> String {
        recognizer::gallery_to_json(&self.gallery, &self.model)
    }

    #[getter]
    fn model(&self) -> PyEigenModel {
        PyEigenModel(self.model.clone())
    }

    #[getter]
    fn scheme(&self) -> Option<usize> {
        self.gallery.scheme
    }

    #[getter]
    fn subjects(&self) -> Vec<String> {
        self.gallery
            .entries
            .iter()
            .map(|e| e.subject_id.clone())
            .collect()
    }

    /// Returns a dict with `best` (`index`, `subject`), `mode`, `dt_divisor` and
    /// per-entry `scores` (`ed`, `d`, `rv`).
    #[pyo3(signature = (image, landmarks = None, mode = "dt-pca", dt_divisor = dtface::DEFAULT_DT_DIVISOR))]
    fn recognize<'py>(
        &self,
        py: Python<'py>,
        image: &PyImage,
        landmarks: Option<Vec<(f64, f64)>>,
        mode: &str,
        dt_divisor: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let mode = parse_mode(mode)?;
        let landmarks = match mode {
            MatchMode::DtPca => landmarks.map(landmark_set).transpose()?,
            MatchMode::PcaOnly => None,
        };
        let report = dtface::recognize(
            &self.gallery,
            &self.model,
            &image.0,
            landmarks.as_ref(),
            mode,
            dt_divisor,
        )
        .map_err(to_py)?;

        let best = PyDict::new(py);
        best.set_item("index", report.best.index)?;
        best.set_item("subject", &report.best.subject)?;
        let scores = report
            .scores
            .iter()
            .map(|s| {
                let d = PyDict::new(py);
                d.set_item("ed", s.ed)?;
                d.set_item("d", s.d)?;
                d.set_item("rv", s.rv)?;
                Ok(d)
            })
            .collect::<PyResult<Vec<_>>>()?;
        let out = PyDict::new(py);
        out.set_item("best", best)?;
        out.set_item("mode", report.mode.as_str())?;
        out.set_item("dt_divisor", report.dt_divisor)?;
        out.set_item("scores", scores)?;
        Ok(out)
    }

    fn __len__(&self) -> usize {
        self.gallery.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Gallery(entries={}, k={}, scheme={:?})",
            self.gallery.len(),
            self.model.k(),
            self.gallery.scheme
        )
    }
}

#[pyfunction]
fn load_image(path: &str) -> PyResult<PyImage> {
    dtface::load_image(path).map(PyImage).map_err(to_py)
}

#[pyfunction]
fn load_landmarks(path: &str) -> PyResult<Vec<(f64, f64)>> {
    let set = dtface::load_landmarks(path).map_err(to_py)?;
    Ok(set.points().iter().map(|p| (p.x, p.y)).collect())
}

#[pyfunction]
fn triangulate(points: Vec<(f64, f64)>) -> PyResult<PyMesh> {
    let set = landmark_set(points)?;
    dtface::delaunay(&set).map(PyMesh).map_err(to_py)
}

/// `"inside"`, `"on"` or `"outside"` the circle through `a`, `b`, `c`.
#[pyfunction]
fn in_circumcircle(a: (f64, f64), b: (f64, f64), c: (f64, f64), p: (f64, f64)) -> PyResult<&'static str> {
    let pos = dtface::in_circumcircle(a.into(), b.into(), c.into(), p.into()).map_err(to_py)?;
    Ok(match pos {
        CirclePosition::Inside => "inside",
        CirclePosition::On => "on",
        CirclePosition::Outside => "outside",
    })
}

#[pyfunction]
fn edge_length(p: (f64, f64), q: (f64, f64)) -> f64 {
    geometry::edge_length(p.into(), q.into())
}

#[pyfunction]
fn triangle_area(l1: f64, l2: f64, l3: f64) -> PyResult<f64> {
    geometry::triangle_area(l1, l2, l3).map_err(to_py)
}

#[pyfunction]
fn relative_areas(areas: Vec<f64>) -> PyResult<Vec<f64>> {
    geometry::relative_areas(&areas).map_err(to_py)
}

#[pyfunction]
fn average_relative_area(relative_areas: Vec<f64>) -> PyResult<f64> {
    geometry::average_relative_area(&relative_areas).map_err(to_py)
}

#[pyfunction]
fn dt_difference(tt_avg: f64, tn_avg: f64) -> f64 {
    recognizer::dt_difference(tt_avg, tn_avg)
}

#[pyfunction]
#[pyo3(signature = (ed, d, dt_divisor = dtface::DEFAULT_DT_DIVISOR))]
fn fused_score(ed: f64, d: f64, dt_divisor: f64) -> PyResult<f64> {
    recognizer::fused_score(ed, d, dt_divisor).map_err(to_py)
}

#[pyfunction]
fn accuracy(correct: usize, total: usize) -> PyResult<f64> {
    dtface::evalharness::accuracy(correct, total).map_err(to_py)
}

/// Runs one train/test split from a manifest and returns the rendered report.
#[pyfunction]
#[pyo3(signature = (
    manifest,
    train_variants,
    modes = vec!["pca-only".to_string(), "dt-pca".to_string()],
    k = dtface::DEFAULT_K,
    dt_divisor = dtface::DEFAULT_DT_DIVISOR,
    report = "text",
))]
fn evaluate(
    manifest: &str,
    train_variants: usize,
    modes: Vec<String>,
    k: usize,
    dt_divisor: f64,
    report: &str,
) -> PyResult<String> {
    let mut config = dtface::ExperimentConfig::new(manifest, train_variants);
    config.modes = modes.iter().map(|m| parse_mode(m)).collect::<PyResult<_>>()?;
    config.k = k;
    config.dt_divisor = dt_divisor;
    let format = report.parse().map_err(to_py)?;
    let table = run_experiment(&config).map_err(to_py)?;
    render_report(&table, format).map_err(to_py)
}

#[pymodule]
fn dtface_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("DataError", m.py().get_type::<DataError>())?;
    m.add("NumericError", m.py().get_type::<NumericError>())?;
    m.add_class::<PyImage>()?;
    m.add_class::<PyMesh>()?;
    m.add_class::<PyEigenModel>()?;
    m.add_class::<PyGallery>()?;
    m.add_function(wrap_pyfunction!(load_image, m)?)?;
    m.add_function(wrap_pyfunction!(load_landmarks, m)?)?;
    m.add_function(wrap_pyfunction!(triangulate, m)?)?;
    m.add_function(wrap_pyfunction!(in_circumcircle, m)?)?;
    m.add_function(wrap_pyfunction!(edge_length, m)?)?;
    m.add_function(wrap_pyfunction!(triangle_area, m)?)?;
    m.add_function(wrap_pyfunction!(relative_areas, m)?)?;
    m.add_function(wrap_pyfunction!(average_relative_area, m)?)?;
    m.add_function(wrap_pyfunction!(dt_difference, m)?)?;
    m.add_function(wrap_pyfunction!(fused_score, m)?)?;
    m.add_function(wrap_pyfunction!(accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    Ok(())
}
