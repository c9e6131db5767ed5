//! Python bindings: field arithmetic, exact analytics (as `fractions.Fraction`),
//! code construction and lifting, storage instances and verification suites.

use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyBytes;
use regen::analytics::{self, Rational};
use regen::gf::{self, Gf256};
use regen::harness::{self, BaseCode};
use regen::lift::{self, LiftVariant};
use regen::model::{self, Coverage, RegeneratingCode, StorageInstance};

fn value_error(e: regen::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Accepts `int`, `Fraction`, `str` ("p/q" or decimal) or `float`.
fn to_rational(obj: &Bound<'_, PyAny>) -> PyResult<Rational> {
    let text = obj.str()?.to_string();
    analytics::parse_rational(&text).map_err(value_error)
}

fn fraction<'py>(py: Python<'py>, r: &Rational) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?.getattr("Fraction")?.call1((r.to_string(),))
}

fn json_value<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.getattr("loads")?.call1((text,))
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("value serializes")
}

#[pyfunction]
fn gf_add(a: u8, b: u8) -> u8 {
    gf::gf_add(Gf256(a), Gf256(b)).0
}

#[pyfunction]
fn gf_mul(a: u8, b: u8) -> u8 {
    gf::gf_mul(Gf256(a), Gf256(b)).0
}

#[pyfunction]
fn gf_inv(a: u8) -> PyResult<u8> {
    gf::gf_inv(Gf256(a)).map(|v| v.0).map_err(value_error)
}

#[pyfunction]
fn functional_capacity<'py>(
    py: Python<'py>,
    k: u64,
    d: u64,
    alpha: &Bound<'py, PyAny>,
    gamma: &Bound<'py, PyAny>,
) -> PyResult<Bound<'py, PyAny>> {
    let c = analytics::functional_capacity(k, d, &to_rational(alpha)?, &to_rational(gamma)?).map_err(value_error)?;
    fraction(py, &c)
}

fn point<'py>(py: Python<'py>, p: regen::Result<(Rational, Rational)>) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>)> {
    let (a, g) = p.map_err(value_error)?;
    Ok((fraction(py, &a)?, fraction(py, &g)?))
}

/// `(alpha, gamma)` at the MSR point for a file of size `file_size`.
#[pyfunction]
fn msr_point<'py>(py: Python<'py>, k: u64, d: u64, file_size: &Bound<'py, PyAny>) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>)> {
    point(py, analytics::msr_point(k, d, &to_rational(file_size)?))
}

/// `(alpha, gamma)` at the MBR point for a file of size `file_size`.
#[pyfunction]
fn mbr_point<'py>(py: Python<'py>, k: u64, d: u64, file_size: &Bound<'py, PyAny>) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>)> {
    point(py, analytics::mbr_point(k, d, &to_rational(file_size)?))
}

/// `(gamma, bound)` reached by lifting an MSR code at index `i`.
#[pyfunction]
fn exact_lower_bound<'py>(
    py: Python<'py>,
    n: u64,
    k: u64,
    d: u64,
    alpha: &Bound<'py, PyAny>,
    i: u64,
) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>)> {
    point(py, analytics::exact_lower_bound(n, k, d, &to_rational(alpha)?, i))
}

#[pyfunction]
fn single_parity_ratio(py: Python<'_>, n: u64, i: u64) -> PyResult<Bound<'_, PyAny>> {
    fraction(py, &analytics::single_parity_ratio(n, i).map_err(value_error)?)
}

#[pyfunction]
fn large_n_ratio_approx(py: Python<'_>, i: u64) -> PyResult<Bound<'_, PyAny>> {
    fraction(py, &analytics::large_n_ratio_approx(i).map_err(value_error)?)
}

/// CSV of the capacity, bound and interpolation curves at `(n, n-1, n-1)`.
#[pyfunction]
#[pyo3(signature = (n = 51))]
fn tradeoff_csv(n: u64) -> PyResult<String> {
    let rows = analytics::tradeoff_dataset(n).map_err(value_error)?;
    Ok(analytics::tradeoff_csv(&rows))
}

/// Asymptotic report as a dict; rational fields are "p/q" strings.
#[pyfunction]
fn asymptotic_ratio<'py>(py: Python<'py>, n: u64, k: u64, d: u64, m: u64, s: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
    let r = analytics::asymptotic_ratio(n, k, d, m, &to_rational(s)?).map_err(value_error)?;
    json_value(py, &to_json(&r))
}

#[pyfunction]
fn scenarios() -> Vec<&'static str> {
    harness::SCENARIOS.iter().map(|s| s.name).collect()
}

/// Runs a registered scenario and returns the suite result as a dict.
#[pyfunction]
#[pyo3(signature = (name, seed = harness::DEFAULT_SEED))]
fn run_scenario<'py>(py: Python<'py>, name: &str, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let r = harness::run_construction_suite(name, seed).map_err(value_error)?;
    json_value(py, &r.to_json())
}

/// Per-helper bandwidth audit of one failed node in a registered scenario.
#[pyfunction]
#[pyo3(signature = (name, failed, seed = harness::DEFAULT_SEED))]
fn audit_scenario<'py>(py: Python<'py>, name: &str, failed: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let a = harness::audit_scenario(name, failed, seed).map_err(value_error)?;
    json_value(py, &a.to_json())
}

/// A regenerating code: a base code or a chain of lifts of one.
#[pyclass(name = "Code", frozen)]
struct PyCode {
    inner: Arc<dyn RegeneratingCode>,
}

#[pymethods]
impl PyCode {
    /// The (3,2,2) code storing x, y and x+y.
    #[staticmethod]
    fn toy() -> Self {
        PyCode { inner: Arc::new(regen::codes::toy()) }
    }

    /// MDS-based MSR code with `d = k`.
    #[staticmethod]
    #[pyo3(signature = (n, k, alpha = 1))]
    fn msr(n: usize, k: usize, alpha: usize) -> PyResult<Self> {
        let code = regen::codes::MdsMsrCode::new(n, k, alpha).map_err(value_error)?;
        Ok(PyCode { inner: Arc::new(code) })
    }

    /// Repair-by-transfer MBR code with `d = n - 1`.
    #[staticmethod]
    fn mbr(n: usize, k: usize) -> PyResult<Self> {
        let code = regen::codes::RbtMbrCode::new(n, k).map_err(value_error)?;
        Ok(PyCode { inner: Arc::new(code) })
    }

    /// Parses "toy", "msr:N,K" or "mbr:N,K".
    #[staticmethod]
    fn parse(spec: &str) -> PyResult<Self> {
        let base: BaseCode = spec.parse().map_err(value_error)?;
        Ok(PyCode { inner: base.build().map_err(value_error)? })
    }

    /// Lifts the code `times` times with the "cyclic" or "perm" variant.
    #[pyo3(signature = (variant = "cyclic", times = 1))]
    fn lift(&self, variant: &str, times: usize) -> PyResult<Self> {
        let variant: LiftVariant = variant.parse().map_err(value_error)?;
        let inner = lift::iterated_lift(self.inner.clone(), times, variant).map_err(value_error)?;
        Ok(PyCode { inner })
    }

    #[getter]
    fn code_id(&self) -> String {
        self.inner.code_id()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.params().n
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.params().k
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.params().d
    }

    #[getter]
    fn gamma(&self) -> usize {
        self.inner.params().gamma
    }

    #[getter]
    fn file_size(&self) -> usize {
        self.inner.params().file_size
    }

    #[getter]
    fn alpha(&self) -> Vec<usize> {
        self.inner.params().alpha_per_node.clone()
    }

    #[getter]
    fn lift_chain(&self) -> Vec<String> {
        self.inner.lift_chain().iter().map(ToString::to_string).collect()
    }

    /// Full parameter record as a dict.
    fn params<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_value(py, &to_json(self.inner.params()))
    }

    /// Encodes `data` (exactly `file_size` bytes) onto the nodes.
    fn store(&self, data: &[u8]) -> PyResult<PyInstance> {
        let instance = self.inner.store(&gf::symbols(data)).map_err(value_error)?;
        Ok(PyInstance { code: self.inner.clone(), instance })
    }

    /// Stores a seeded random file.
    #[pyo3(signature = (seed = harness::DEFAULT_SEED))]
    fn store_random(&self, seed: u64) -> PyResult<PyInstance> {
        let file = harness::random_file(self.inner.params().file_size, seed);
        let instance = self.inner.store(&file).map_err(value_error)?;
        Ok(PyInstance { code: self.inner.clone(), instance })
    }

    fn __repr__(&self) -> String {
        format!("Code({}, {})", self.inner.code_id(), self.inner.params())
    }
}

/// A file encoded over the nodes of a code.
#[pyclass(name = "Instance")]
struct PyInstance {
    code: Arc<dyn RegeneratingCode>,
    instance: StorageInstance,
}

#[pymethods]
impl PyInstance {
    #[getter]
    fn file<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &gf::bytes(&self.instance.file))
    }

    /// Contents of every node, node 1 first.
    #[getter]
    fn nodes<'py>(&self, py: Python<'py>) -> Vec<Bound<'py, PyBytes>> {
        self.instance.nodes.iter().map(|n| PyBytes::new(py, &gf::bytes(n))).collect()
    }

    /// Contents of node `j` (1-based).
    fn node<'py>(&self, py: Python<'py>, j: usize) -> PyResult<Bound<'py, PyBytes>> {
        self.instance.params.check_node(j).map_err(value_error)?;
        Ok(PyBytes::new(py, &gf::bytes(self.instance.node(j))))
    }

    /// Decodes the file from the listed nodes.
    fn reconstruct<'py>(&self, py: Python<'py>, nodes: Vec<usize>) -> PyResult<Bound<'py, PyBytes>> {
        let file = model::reconstruct_from(self.code.as_ref(), &self.instance, &nodes).map_err(value_error)?;
        Ok(PyBytes::new(py, &gf::bytes(&file)))
    }

    /// Rebuilds node `failed` from `helpers`. Returns the rebuilt content and
    /// the number of symbols each helper sent.
    fn repair<'py>(
        &self,
        py: Python<'py>,
        failed: usize,
        helpers: Vec<usize>,
    ) -> PyResult<(Bound<'py, PyBytes>, std::collections::BTreeMap<usize, usize>)> {
        let trace = model::repair_node(self.code.as_ref(), &self.instance, failed, &helpers).map_err(value_error)?;
        Ok((PyBytes::new(py, &gf::bytes(&trace.rebuilt)), trace.sent))
    }

    /// Flips the bits of `mask` in one stored symbol.
    #[pyo3(signature = (node, offset, mask = 1))]
    fn corrupt(&mut self, node: usize, offset: usize, mask: u8) -> PyResult<()> {
        self.instance.corrupt(node, offset, mask).map_err(value_error)
    }

    /// Checks reconstruction and exact repair. With `limit`, at most that many
    /// subsets are sampled per check.
    #[pyo3(signature = (limit = None, seed = harness::DEFAULT_SEED))]
    fn verify<'py>(&self, py: Python<'py>, limit: Option<usize>, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        let coverage = limit.map_or(Coverage::Exhaustive, |limit| Coverage::Capped { limit, seed });
        let report = model::verify_all(self.code.as_ref(), &self.instance, coverage);
        json_value(py, &to_json(&report.summary()))
    }
}

#[pymodule]
fn pyregen(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCode>()?;
    m.add_class::<PyInstance>()?;
    m.add_function(wrap_pyfunction!(gf_add, m)?)?;
    m.add_function(wrap_pyfunction!(gf_mul, m)?)?;
    m.add_function(wrap_pyfunction!(gf_inv, m)?)?;
    m.add_function(wrap_pyfunction!(functional_capacity, m)?)?;
    m.add_function(wrap_pyfunction!(msr_point, m)?)?;
    m.add_function(wrap_pyfunction!(mbr_point, m)?)?;
    m.add_function(wrap_pyfunction!(exact_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(single_parity_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(large_n_ratio_approx, m)?)?;
    m.add_function(wrap_pyfunction!(tradeoff_csv, m)?)?;
    m.add_function(wrap_pyfunction!(asymptotic_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(scenarios, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(audit_scenario, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_wrappers() {
        assert_eq!(gf_mul(0x02, 0x80), 0x1D);
        assert_eq!(gf_add(9, 9), 0);
        assert_eq!(gf_mul(0x53, gf_inv(0x53).unwrap()), 1);
    }

    #[test]
    fn scenario_names_are_exposed() {
        assert!(scenarios().contains(&"toy-perm-433"));
    }
}
