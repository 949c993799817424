use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;

use netindex::galois::FieldSpec;
use netindex::index::{compute_mu, validate_index_instance, RawIndexInstance};
use netindex::indexcode::{rate_report, RawLinearIndexCode};
use netindex::instances::{builtin_instance, builtin_matroid, check_multilinear_representation, non_pappus_functions, BuiltinInstance, NonPappusLines};
use netindex::netcode::{validate_linear_code, RawLinearNetworkCode};
use netindex::network::{validate_network, RawNetwork};
use netindex::reduction::{lift_linear_code, lower_index_code, reduce_instance};
use netindex::solver::{self, MatroidSpec, RandomNetworkParams, RawMatroidSpec, SearchConfig, SearchReport};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn from_json<T: serde::de::DeserializeOwned>(text: &str) -> PyResult<T> {
    serde_json::from_str(text).map_err(value_error)
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(value_error)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_field(spec: &str) -> PyResult<FieldSpec> {
    spec.parse().map_err(value_error)
}

/// Finite field GF(p^d), written as "p", "p,d" or "p,d,c0:c1:..:cd".
#[pyclass(frozen, module = "netindex")]
struct Field {
    inner: FieldSpec,
}

#[pymethods]
impl Field {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        Ok(Field { inner: parse_field(spec)? })
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order()
    }

    #[getter]
    fn characteristic(&self) -> u32 {
        self.inner.characteristic()
    }

    fn __repr__(&self) -> String {
        format!("Field({:?})", self.inner)
    }
}

/// Validated acyclic network with one message per input edge.
#[pyclass(frozen, module = "netindex")]
struct Network {
    inner: netindex::network::NetworkInstance,
}

#[pymethods]
impl Network {
    #[staticmethod]
    #[pyo3(signature = (text, strict = false))]
    fn from_json(text: &str, strict: bool) -> PyResult<Self> {
        let raw: RawNetwork = from_json(text)?;
        Ok(Network { inner: validate_network(&raw, strict).map_err(value_error)? })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner.to_raw()).expect("serializable")
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    /// Edge ids in canonical order.
    fn edge_ids(&self) -> Vec<u64> {
        (0..self.inner.m()).map(|i| self.inner.edge_id(i)).collect()
    }

    /// The reduced index instance and the reduction map as a dict.
    fn reduce<'py>(&self, py: Python<'py>) -> PyResult<(IndexInstance, Bound<'py, PyAny>)> {
        let (inst, map) = reduce_instance(&self.inner);
        Ok((IndexInstance { inner: inst }, to_py(py, &map)?))
    }

    fn __repr__(&self) -> String {
        format!("Network(k={}, m={}, d={})", self.inner.k(), self.inner.m(), self.inner.d())
    }
}

/// Index coding instance: messages and (wants, has) clients.
#[pyclass(frozen, module = "netindex")]
struct IndexInstance {
    inner: netindex::index::IndexInstance,
}

#[pymethods]
impl IndexInstance {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let raw: RawIndexInstance = from_json(text)?;
        Ok(IndexInstance { inner: validate_index_instance(&raw).map_err(value_error)? })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner.to_raw()).expect("serializable")
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    /// Clients as 1-based `(wants, has)` pairs.
    fn clients(&self) -> Vec<(usize, Vec<usize>)> {
        self.inner.clients().iter().map(|c| (c.wants + 1, c.has.iter().map(|h| h + 1).collect())).collect()
    }

    fn mu(&self) -> usize {
        compute_mu(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("IndexInstance(k={}, clients={})", self.inner.k(), self.inner.clients().len())
    }
}

/// Linear network code: one coefficient matrix per edge.
#[pyclass(frozen, module = "netindex")]
struct NetworkCode {
    inner: netindex::netcode::LinearNetworkCode,
}

#[pymethods]
impl NetworkCode {
    #[staticmethod]
    fn from_json(network: &Network, text: &str) -> PyResult<Self> {
        let raw: RawLinearNetworkCode = from_json(text)?;
        let inner = netindex::netcode::LinearNetworkCode::from_raw(&network.inner, &raw).map_err(value_error)?;
        Ok(NetworkCode { inner })
    }

    fn to_json(&self, network: &Network) -> String {
        serde_json::to_string(&self.inner.to_raw(&network.inner)).expect("serializable")
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    /// Raises ValueError naming the violated condition.
    fn validate(&self, network: &Network) -> PyResult<()> {
        validate_linear_code(&network.inner, &self.inner).map(|_| ()).map_err(value_error)
    }

    /// Values carried by every edge for the message vector `x`.
    fn evaluate(&self, x: Vec<u8>) -> PyResult<Vec<Vec<u32>>> {
        let values = self.inner.evaluate(&x).map_err(value_error)?;
        Ok(values.into_iter().map(|v| v.into_iter().map(u32::from).collect()).collect())
    }
}

/// Linear index code `Z -> Z G`.
#[pyclass(frozen, module = "netindex")]
struct IndexCode {
    inner: netindex::indexcode::LinearIndexCode,
}

#[pymethods]
impl IndexCode {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let raw: RawLinearIndexCode = from_json(text)?;
        Ok(IndexCode { inner: netindex::indexcode::LinearIndexCode::from_raw(&raw).map_err(value_error)? })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner.to_raw()).expect("serializable")
    }

    #[getter]
    fn l(&self) -> usize {
        self.inner.to_raw().l
    }

    /// Rate report as a dict; raises ValueError if a client cannot decode.
    fn validate<'py>(&self, py: Python<'py>, instance: &IndexInstance) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &rate_report(&self.inner, &instance.inner).map_err(value_error)?)
    }
}

fn config(budget_nodes: Option<u64>, workers: usize, symmetry: bool, l_max: Option<usize>) -> PyResult<SearchConfig> {
    let mut c = SearchConfig { workers, symmetry, l_max, ..Default::default() };
    if let Some(b) = budget_nodes {
        c.budget_nodes = b;
    }
    c.check().map_err(value_error)?;
    Ok(c)
}

fn report<'py, T>(py: Python<'py>, r: &SearchReport<T>, result: Option<Bound<'py, PyAny>>) -> PyResult<Bound<'py, PyAny>> {
    let d = pyo3::types::PyDict::new(py);
    d.set_item("outcome", to_py(py, &r.outcome)?)?;
    d.set_item("nodes", r.nodes)?;
    d.set_item("elapsed_ms", r.elapsed_ms)?;
    d.set_item("result", result)?;
    Ok(d.into_any())
}

#[pyfunction]
fn lift(network: &Network, code: &NetworkCode) -> PyResult<IndexCode> {
    Ok(IndexCode { inner: lift_linear_code(&network.inner, &code.inner).map_err(value_error)? })
}

#[pyfunction]
fn lower(network: &Network, code: &IndexCode) -> PyResult<NetworkCode> {
    Ok(NetworkCode { inner: lower_index_code(&network.inner, &code.inner).map_err(value_error)? })
}

/// Scalar linear network code search; `result` is a NetworkCode or None.
#[pyfunction]
#[pyo3(signature = (network, field, budget_nodes = None, workers = 1, symmetry = true))]
fn search_netcode<'py>(
    py: Python<'py>,
    network: &Network,
    field: &Field,
    budget_nodes: Option<u64>,
    workers: usize,
    symmetry: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = config(budget_nodes, workers, symmetry, None)?;
    let r = py.detach(|| solver::search_scalar_network_code(&network.inner, &field.inner, &cfg)).map_err(value_error)?;
    let found = r.result.clone().map(|inner| Bound::new(py, NetworkCode { inner })).transpose()?;
    report(py, &r, found.map(Bound::into_any))
}

/// Linear index code search of length `l`; `result` is an IndexCode or None.
#[pyfunction]
#[pyo3(signature = (instance, field, n, l, budget_nodes = None, workers = 1, symmetry = true))]
#[allow(clippy::too_many_arguments)]
fn search_indexcode<'py>(
    py: Python<'py>,
    instance: &IndexInstance,
    field: &Field,
    n: usize,
    l: usize,
    budget_nodes: Option<u64>,
    workers: usize,
    symmetry: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = config(budget_nodes, workers, symmetry, None)?;
    let r = py.detach(|| solver::search_linear_index_code(&instance.inner, &field.inner, n, l, &cfg)).map_err(value_error)?;
    let found = r.result.clone().map(|inner| Bound::new(py, IndexCode { inner })).transpose()?;
    report(py, &r, found.map(Bound::into_any))
}

/// Shortest linear index code from `n mu` up to `l_max` (default `n k`).
#[pyfunction]
#[pyo3(signature = (instance, field, n, l_max = None, budget_nodes = None))]
fn min_length<'py>(
    py: Python<'py>,
    instance: &IndexInstance,
    field: &Field,
    n: usize,
    l_max: Option<usize>,
    budget_nodes: Option<u64>,
) -> PyResult<(Bound<'py, PyAny>, Option<IndexCode>)> {
    let cfg = config(budget_nodes, 1, true, l_max)?;
    let r = py.detach(|| solver::min_linear_index_length(&instance.inner, &field.inner, n, &cfg)).map_err(value_error)?;
    Ok((to_py(py, &r)?, r.code.map(|inner| IndexCode { inner })))
}

/// Representation search for a packaged matroid name or matroid JSON text.
#[pyfunction]
#[pyo3(signature = (matroid, field, budget_nodes = None, symmetry = true))]
fn matroid_rep<'py>(
    py: Python<'py>,
    matroid: &str,
    field: &Field,
    budget_nodes: Option<u64>,
    symmetry: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = match builtin_matroid(matroid) {
        Some(spec) => spec,
        None => {
            let raw: RawMatroidSpec = from_json(matroid)?;
            MatroidSpec::new(&raw).map_err(value_error)?
        }
    };
    let cfg = config(budget_nodes, 1, symmetry, None)?;
    let r = py.detach(|| solver::search_matroid_representation(&spec, &field.inner, &cfg)).map_err(value_error)?;
    let vectors = r.result.as_ref().map(|v| to_py(py, v)).transpose()?;
    report(py, &r, vectors)
}

/// Packaged instance by name: a Network or an IndexInstance.
#[pyfunction]
fn instance(py: Python<'_>, name: &str) -> PyResult<Py<PyAny>> {
    match builtin_instance(name) {
        Ok(BuiltinInstance::Network(inner)) => Ok(Py::new(py, Network { inner })?.into_any()),
        Ok(BuiltinInstance::Index(inner)) => Ok(Py::new(py, IndexInstance { inner })?.into_any()),
        Err(netindex::error::InstanceError::UnknownInstance(n)) => Err(PyKeyError::new_err(n)),
        Err(e) => Err(value_error(e)),
    }
}

/// Rank check of the packaged non-Pappus subspace maps.
#[pyfunction]
fn multilinear_check(py: Python<'_>) -> PyResult<Bound<'_, PyAny>> {
    let report = check_multilinear_representation(&non_pappus_functions(), &NonPappusLines::standard());
    let holds = report.holds();
    let d = to_py(py, &report)?;
    d.set_item("holds", holds)?;
    Ok(d)
}

/// Seeded random network together with a linear code that solves it.
#[pyfunction]
fn random_network(seed: u64, field: &Field, n: usize) -> PyResult<(Network, NetworkCode)> {
    let (net, code) = solver::generate_random_solvable_network(seed, &RandomNetworkParams::default(), &field.inner, n)
        .map_err(value_error)?;
    Ok((Network { inner: net }, NetworkCode { inner: code }))
}

#[pymodule]
#[pyo3(name = "netindex")]
fn netindex_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Field>()?;
    m.add_class::<Network>()?;
    m.add_class::<IndexInstance>()?;
    m.add_class::<NetworkCode>()?;
    m.add_class::<IndexCode>()?;
    m.add_function(wrap_pyfunction!(lift, m)?)?;
    m.add_function(wrap_pyfunction!(lower, m)?)?;
    m.add_function(wrap_pyfunction!(search_netcode, m)?)?;
    m.add_function(wrap_pyfunction!(search_indexcode, m)?)?;
    m.add_function(wrap_pyfunction!(min_length, m)?)?;
    m.add_function(wrap_pyfunction!(matroid_rep, m)?)?;
    m.add_function(wrap_pyfunction!(instance, m)?)?;
    m.add_function(wrap_pyfunction!(multilinear_check, m)?)?;
    m.add_function(wrap_pyfunction!(random_network, m)?)?;
    Ok(())
}
