//! Python bindings: `import varopt_py`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyBytes;
use varopt::stats::{self, Selector};
use varopt::{wire, Implementation, RandomSource};

fn err(e: varopt::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn selector(keys: Option<Vec<String>>, prefix: Option<String>) -> PyResult<Selector> {
    match (keys, prefix) {
        (Some(_), Some(_)) => Err(PyValueError::new_err("pass keys or prefix, not both")),
        (Some(k), None) => Ok(Selector::keys(k)),
        (None, Some(p)) => Ok(Selector::Prefix(p)),
        (None, None) => Ok(Selector::All),
    }
}

/// A fixed-capacity weighted sample. Entries are `(key, original, adjusted)`.
#[pyclass(name = "Sample", module = "varopt_py", frozen, from_py_object)]
#[derive(Clone)]
struct PySample {
    inner: varopt::Sample,
}

#[pymethods]
impl PySample {
    #[getter]
    fn entries(&self) -> Vec<(String, f64, f64)> {
        self.inner
            .entries
            .iter()
            .map(|e| (e.key.clone(), e.original_weight, e.adjusted_weight))
            .collect()
    }

    #[getter]
    fn capacity(&self) -> usize {
        self.inner.capacity
    }

    #[getter]
    fn threshold(&self) -> f64 {
        self.inner.threshold
    }

    #[getter]
    fn total_weight_seen(&self) -> f64 {
        self.inner.total_weight_seen
    }

    #[getter]
    fn items_seen(&self) -> u64 {
        self.inner.items_seen
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __contains__(&self, key: &str) -> bool {
        self.inner.get(key).is_some()
    }

    /// Adjusted weight of `key`, or 0 if it was not sampled.
    fn adjusted_weight(&self, key: &str) -> f64 {
        self.inner.get(key).map_or(0.0, |e| e.adjusted_weight)
    }

    /// Unbiased estimate of the total weight of the selected keys
    /// (all keys when neither `keys` nor `prefix` is given).
    #[pyo3(signature = (keys=None, prefix=None))]
    fn estimate(&self, keys: Option<Vec<String>>, prefix: Option<String>) -> PyResult<f64> {
        Ok(stats::subset_estimate(&self.inner, &selector(keys, prefix)?))
    }

    #[pyo3(signature = (delta, keys=None, prefix=None))]
    fn confidence_interval(
        &self,
        delta: f64,
        keys: Option<Vec<String>>,
        prefix: Option<String>,
    ) -> PyResult<(f64, f64)> {
        stats::confidence_interval(&self.inner, &selector(keys, prefix)?, delta).map_err(err)
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(err)
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyBytes>> {
        let bytes = wire::serialize_sample(&self.inner).map_err(err)?;
        Ok(PyBytes::new(py, &bytes))
    }

    fn to_text(&self) -> PyResult<String> {
        wire::to_text(&self.inner).map_err(err)
    }

    /// Decodes either the binary or the text encoding.
    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        Ok(Self {
            inner: wire::decode(data).map_err(err)?,
        })
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!(
            "Sample(len={}, capacity={}, threshold={}, total_weight_seen={})",
            self.inner.len(),
            self.inner.capacity,
            self.inner.threshold,
            self.inner.total_weight_seen
        )
    }
}

/// Streaming reservoir of capacity `k`. Uses the same seed derivation as
/// `varopt sample --seed`, so equal seeds give equal samples.
#[pyclass(name = "Reservoir", module = "varopt_py")]
struct PyReservoir {
    inner: varopt::Reservoir,
    rng: RandomSource,
}

#[pymethods]
impl PyReservoir {
    #[new]
    #[pyo3(signature = (k, implementation="tree", seed=0))]
    fn new(k: usize, implementation: &str, seed: u64) -> PyResult<Self> {
        let imp: Implementation = implementation.parse().map_err(err)?;
        Ok(Self {
            inner: varopt::Reservoir::new(k, imp).map_err(err)?,
            rng: RandomSource::derived(seed, "sample"),
        })
    }

    fn push(&mut self, key: String, weight: f64) -> PyResult<()> {
        self.inner.push(key, weight, &mut self.rng).map_err(err)
    }

    /// Pushes every `(key, weight)` pair of an iterable.
    fn extend(&mut self, items: &Bound<'_, PyAny>) -> PyResult<()> {
        for item in items.try_iter()? {
            let (key, weight): (String, f64) = item?.extract()?;
            self.push(key, weight)?;
        }
        Ok(())
    }

    fn sample(&self) -> PySample {
        PySample {
            inner: self.inner.sample(),
        }
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn capacity(&self) -> usize {
        self.inner.capacity()
    }

    #[getter]
    fn threshold(&self) -> f64 {
        self.inner.threshold()
    }

    #[getter]
    fn total_weight(&self) -> f64 {
        self.inner.total_weight()
    }

    #[getter]
    fn items_seen(&self) -> u64 {
        self.inner.items_seen()
    }

    /// Share of post-fill inserts handled by the constant-time case.
    #[getter]
    fn simple_fraction(&self) -> f64 {
        self.inner.stats().simple_fraction()
    }
}

/// Merges samples of disjoint streams into one sample of size `k`.
#[pyfunction]
#[pyo3(signature = (samples, k, seed=0))]
fn merge(samples: Vec<PySample>, k: usize, seed: u64) -> PyResult<PySample> {
    let inner: Vec<varopt::Sample> = samples.into_iter().map(|s| s.inner).collect();
    let mut rng = RandomSource::derived(seed, "merge");
    Ok(PySample {
        inner: varopt::merge(&inner, k, &mut rng).map_err(err)?,
    })
}

#[pyfunction]
fn ipps_threshold(weights: Vec<f64>, k: usize) -> PyResult<f64> {
    varopt::ipps_threshold(&weights, k).map_err(err)
}

/// Sum of per-item variances of a variance-optimal sample of size `k`.
#[pyfunction]
fn sigma_v(weights: Vec<f64>, k: usize) -> PyResult<f64> {
    stats::sigma_v_analytic(&weights, k).map_err(err)
}

#[pyfunction]
fn serialize(sample: &PySample) -> PyResult<Vec<u8>> {
    wire::serialize_sample(&sample.inner).map_err(err)
}

#[pyfunction]
fn deserialize(data: &[u8]) -> PyResult<PySample> {
    PySample::from_bytes(data)
}

#[pymodule]
pub fn varopt_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySample>()?;
    m.add_class::<PyReservoir>()?;
    m.add_function(wrap_pyfunction!(merge, m)?)?;
    m.add_function(wrap_pyfunction!(ipps_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_v, m)?)?;
    m.add_function(wrap_pyfunction!(serialize, m)?)?;
    m.add_function(wrap_pyfunction!(deserialize, m)?)?;
    Ok(())
}
