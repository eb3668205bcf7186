//! Python bindings for the segmentation and tracking pipeline.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use tofseg::cluster::{cluster, ClipRange, DescriptorWeighting, Measure, Region, Segmentation};
use tofseg::eval::{segmentation_iou, tracking_metrics};
use tofseg::frame::{load_sequence, store_sequence, Frame};
use tofseg::homogeneity::{self, MergeParams};
use tofseg::oracle::cluster_oracle;
use tofseg::synth::{make_scenario, read_ground_truth, scenario_names, write_ground_truth, GroundTruthFrame};
use tofseg::tracker::{self, RunOptions, TrackLog, TrackerParams};

fn err(e: tofseg::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_measure(s: &str) -> PyResult<Measure> {
    match s {
        "fused" => Ok(Measure::Fused),
        "baseline" => Ok(Measure::Baseline),
        _ => Err(PyValueError::new_err("measure must be 'fused' or 'baseline'")),
    }
}

#[pyclass(name = "Frame")]
#[derive(Clone)]
struct PyFrame {
    inner: Frame,
}

#[pymethods]
impl PyFrame {
    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn frame_index(&self) -> u32 {
        self.inner.frame_index
    }

    fn distance(&self) -> Vec<f64> {
        self.inner.distance.clone()
    }

    fn intensity(&self) -> Vec<f64> {
        self.inner.intensity.clone()
    }
}

#[pyclass(name = "Region")]
#[derive(Clone)]
struct PyRegion {
    inner: Region,
}

#[pymethods]
impl PyRegion {
    #[getter]
    fn id(&self) -> u32 {
        self.inner.id
    }

    #[getter]
    fn pixel_count(&self) -> u32 {
        self.inner.pixel_count
    }

    #[getter]
    fn mean_z(&self) -> f64 {
        self.inner.mean_z
    }

    #[getter]
    fn mean_d(&self) -> f64 {
        self.inner.mean_d
    }

    #[getter]
    fn mean_phi(&self) -> f64 {
        self.inner.mean_phi
    }

    #[getter]
    fn centroid(&self) -> (f64, f64, f64) {
        let c = self.inner.centroid;
        (c.x, c.y, c.z)
    }

    #[getter]
    fn neighbors(&self) -> Vec<u32> {
        self.inner.neighbors.clone()
    }
}

#[pyclass(name = "Segmentation")]
#[derive(Clone)]
struct PySegmentation {
    inner: Segmentation,
}

#[pymethods]
impl PySegmentation {
    #[getter]
    fn width(&self) -> usize {
        self.inner.width
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height
    }

    fn labels(&self) -> Vec<u32> {
        self.inner.labels.clone()
    }

    fn canonical_labels(&self) -> Vec<u32> {
        self.inner.canonical_labels()
    }

    fn regions(&self) -> Vec<PyRegion> {
        self.inner.regions.iter().map(|r| PyRegion { inner: r.clone() }).collect()
    }
}

struct GtHolder(Vec<GroundTruthFrame>);

#[pyclass(name = "GroundTruth")]
struct PyGroundTruth {
    frames: GtHolder,
}

#[pymethods]
impl PyGroundTruth {
    fn __len__(&self) -> usize {
        self.frames.0.len()
    }

    fn labels(&self, frame: usize) -> PyResult<Vec<u16>> {
        self.frames
            .0
            .get(frame)
            .map(|g| g.labels.clone())
            .ok_or_else(|| PyValueError::new_err(format!("no frame {frame}")))
    }

    fn objects<'py>(&self, py: Python<'py>, frame: usize) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let g = self
            .frames
            .0
            .get(frame)
            .ok_or_else(|| PyValueError::new_err(format!("no frame {frame}")))?;
        g.objects
            .iter()
            .map(|o| {
                let d = PyDict::new_bound(py);
                d.set_item("identity", o.identity)?;
                d.set_item("pixel_count", o.pixel_count)?;
                d.set_item("centroid", (o.centroid.x, o.centroid.y, o.centroid.z))?;
                d.set_item("mean_d", o.mean_d)?;
                Ok(d)
            })
            .collect()
    }
}

#[pyfunction]
fn phi(d: f64, intensity: f64) -> PyResult<f64> {
    homogeneity::phi(d, intensity).map_err(err)
}

#[pyfunction]
fn scenarios() -> Vec<String> {
    scenario_names().iter().map(|s| s.to_string()).collect()
}

#[pyfunction]
#[pyo3(signature = (name, seed = 1))]
fn synth(name: &str, seed: u64) -> PyResult<(Vec<PyFrame>, PyGroundTruth)> {
    let (frames, gts) = make_scenario(name, seed).map_err(err)?;
    Ok((
        frames.into_iter().map(|f| PyFrame { inner: f }).collect(),
        PyGroundTruth { frames: GtHolder(gts) },
    ))
}

#[pyfunction]
#[pyo3(signature = (name, seed, out_dir))]
fn synth_to_dir(name: &str, seed: u64, out_dir: &str) -> PyResult<usize> {
    let (frames, gts) = make_scenario(name, seed).map_err(err)?;
    std::fs::create_dir_all(out_dir).map_err(|e| err(e.into()))?;
    store_sequence(&frames, std::path::Path::new(out_dir).join("seq.ris")).map_err(err)?;
    let k = frames[0].intrinsics;
    write_ground_truth(out_dir, k.width as usize, k.height as usize, &gts).map_err(err)?;
    Ok(frames.len())
}

#[pyfunction]
fn load_frames(path: &str) -> PyResult<Vec<PyFrame>> {
    Ok(load_sequence(path).map_err(err)?.into_iter().map(|f| PyFrame { inner: f }).collect())
}

#[pyfunction]
#[pyo3(signature = (frame, workers = 1, measure = "fused"))]
fn segment(frame: &PyFrame, workers: usize, measure: &str) -> PyResult<PySegmentation> {
    let seg = cluster(
        &frame.inner,
        &ClipRange::unbounded(),
        &MergeParams::default(),
        parse_measure(measure)?,
        DescriptorWeighting::Area,
        workers,
    )
    .map_err(err)?;
    Ok(PySegmentation { inner: seg })
}

#[pyfunction]
#[pyo3(signature = (frame, measure = "fused"))]
fn segment_oracle(frame: &PyFrame, measure: &str) -> PyResult<PySegmentation> {
    let seg = cluster_oracle(
        &frame.inner,
        &ClipRange::unbounded(),
        &MergeParams::default(),
        parse_measure(measure)?,
        DescriptorWeighting::Area,
    )
    .map_err(err)?;
    Ok(PySegmentation { inner: seg })
}

#[pyfunction]
#[pyo3(signature = (frames, workers = 1, log_path = None))]
fn track<'py>(py: Python<'py>, frames: Vec<PyFrame>, workers: usize, log_path: Option<&str>) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let frames: Vec<Frame> = frames.into_iter().map(|f| f.inner).collect();
    let opts = RunOptions {
        measure: Measure::Fused,
        weighting: DescriptorWeighting::Area,
        workers,
        behind_literal: false,
    };
    let log = tracker::run(&frames, &MergeParams::default(), &TrackerParams::default(), &opts).map_err(err)?;
    if let Some(path) = log_path {
        log.save(path).map_err(err)?;
    }
    log.records
        .iter()
        .map(|r| {
            let d = PyDict::new_bound(py);
            d.set_item("frame", r.frame_index)?;
            d.set_item("phase", &r.phase)?;
            d.set_item("event", r.kind.tag())?;
            for (i, h) in r.hands.iter().enumerate() {
                let hd = PyDict::new_bound(py);
                hd.set_item("visible", h.visible)?;
                hd.set_item("region", h.id)?;
                hd.set_item("phi", h.phi)?;
                hd.set_item("pos", (h.pos.x, h.pos.y, h.pos.z))?;
                hd.set_item("mean_d", h.mean_d)?;
                d.set_item(format!("hand{}", i + 1), hd)?;
            }
            Ok(d)
        })
        .collect()
}

#[pyfunction]
#[pyo3(signature = (log_path, gt_dir, size_min = 200))]
fn evaluate<'py>(py: Python<'py>, log_path: &str, gt_dir: &str, size_min: u32) -> PyResult<Bound<'py, PyDict>> {
    let log = TrackLog::load(log_path).map_err(err)?;
    let gts = read_ground_truth(gt_dir).map_err(err)?;
    let score = tracking_metrics(&log, &gts, size_min).map_err(err)?;
    let d = PyDict::new_bound(py);
    d.set_item("id_swaps", score.id_swaps)?;
    d.set_item("lost_frames", score.lost_frames)?;
    d.set_item("reacquire_latency", score.reacquire_latency)?;
    d.set_item("init_success", score.init_success)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (seg, gt, frame, size_min = 200))]
fn score_segmentation<'py>(
    py: Python<'py>,
    seg: &PySegmentation,
    gt: &PyGroundTruth,
    frame: usize,
    size_min: u32,
) -> PyResult<Bound<'py, PyDict>> {
    let g = gt
        .frames
        .0
        .get(frame)
        .ok_or_else(|| PyValueError::new_err(format!("no frame {frame}")))?;
    let score = segmentation_iou(&seg.inner, g, size_min).map_err(err)?;
    let d = PyDict::new_bound(py);
    d.set_item("cluster_count", score.cluster_count)?;
    for o in &score.objects {
        let od = PyDict::new_bound(py);
        od.set_item("region", o.region_id)?;
        od.set_item("iou", o.iou)?;
        d.set_item(format!("object{}", o.identity), od)?;
    }
    Ok(d)
}

#[pymodule]
fn tofseg_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFrame>()?;
    m.add_class::<PyRegion>()?;
    m.add_class::<PySegmentation>()?;
    m.add_class::<PyGroundTruth>()?;
    m.add_function(wrap_pyfunction!(phi, m)?)?;
    m.add_function(wrap_pyfunction!(scenarios, m)?)?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(synth_to_dir, m)?)?;
    m.add_function(wrap_pyfunction!(load_frames, m)?)?;
    m.add_function(wrap_pyfunction!(segment, m)?)?;
    m.add_function(wrap_pyfunction!(segment_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(track, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(score_segmentation, m)?)?;
    Ok(())
}
