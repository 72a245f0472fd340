use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use serde_json::json;

use ::tangleforge::cert::{self, Certificate, ReportArgs, CERT_VERSION};
use ::tangleforge::family::FamilySpec;
use ::tangleforge::graph::Format;
use ::tangleforge::limits::TruncationFamily;
use ::tangleforge::Error;

create_exception!(tangleforge, TangleforgeError, PyException, "Raised for parse errors, refusals and failed checks.");

fn err(e: Error) -> PyErr {
    TangleforgeError::new_err(e.to_string())
}

/// A finite simple graph on vertices `0..n`.
#[pyclass(name = "Graph", frozen)]
struct PyGraph {
    inner: ::tangleforge::Graph,
}

#[pymethods]
impl PyGraph {
    #[new]
    fn new(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        Ok(PyGraph { inner: ::tangleforge::Graph::new(n, &edges).map_err(err)? })
    }

    /// Parses edge-list text ("n m" then one "u v" per line) or graph6.
    #[staticmethod]
    #[pyo3(signature = (text, format = "edgelist"))]
    fn parse(text: &str, format: &str) -> PyResult<Self> {
        let f = match format {
            "edgelist" => Format::EdgeList,
            "graph6" => Format::Graph6,
            other => return Err(TangleforgeError::new_err(format!("unknown format {other}"))),
        };
        Ok(PyGraph { inner: ::tangleforge::Graph::parse(text, f).map_err(err)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().to_vec()
    }

    fn graph_hash(&self) -> String {
        self.inner.hash()
    }

    fn to_edge_list(&self) -> String {
        self.inner.to_edge_list()
    }

    fn to_graph6(&self) -> String {
        self.inner.to_graph6()
    }

    fn __repr__(&self) -> String {
        format!("Graph(n={}, m={})", self.inner.n(), self.inner.m())
    }
}

fn family(name: &str, k: usize) -> PyResult<FamilySpec> {
    FamilySpec::from_name(name, k).map_err(err)
}

fn out(c: Result<Certificate, Error>) -> PyResult<String> {
    c.map(|c| c.to_json()).map_err(err)
}

/// Certificate listing `S_k`.
#[pyfunction]
fn separations(g: &PyGraph, k: usize) -> PyResult<String> {
    out(cert::separations_certificate(&g.inner, k))
}

/// Certificate with up to `limit` tangles avoiding the family.
#[pyfunction]
#[pyo3(signature = (g, k, family_name = "tk", limit = 16))]
fn tangles(g: &PyGraph, k: usize, family_name: &str, limit: usize) -> PyResult<String> {
    out(cert::tangles_certificate(&g.inner, &family(family_name, k)?, limit))
}

/// Certificate holding a tangle or an S-tree over the family.
#[pyfunction]
#[pyo3(signature = (g, k, family_name = "tstar"))]
fn duality(g: &PyGraph, k: usize, family_name: &str) -> PyResult<String> {
    out(cert::duality_certificate(&g.inner, &family(family_name, k)?))
}

/// Certificate with an optimal tree-decomposition.
#[pyfunction]
fn treewidth(g: &PyGraph) -> PyResult<String> {
    out(cert::treewidth_certificate(&g.inner))
}

#[pyfunction]
#[pyo3(signature = (g, k, exhaustive = false))]
fn bramble(g: &PyGraph, k: usize, exhaustive: bool) -> PyResult<String> {
    out(cert::bramble_certificate(&g.inner, k, exhaustive))
}

/// Report comparing tangle, bramble, S-tree and treewidth at order `k`.
#[pyfunction]
fn theorem4(g: &PyGraph, k: usize) -> PyResult<String> {
    out(cert::report_certificate(Some(&g.inner), ReportArgs::Theorem4 { k }))
}

#[pyfunction]
#[pyo3(signature = (name, n, param = None, k = None))]
fn limits(name: &str, n: usize, param: Option<usize>, k: Option<usize>) -> PyResult<String> {
    let family = TruncationFamily::parse(name, param).map_err(err)?;
    out(cert::report_certificate(None, ReportArgs::Limits { family, n, k }))
}

/// Re-checks a certificate; raises on failure.
#[pyfunction]
#[pyo3(signature = (certificate, g = None))]
fn verify(certificate: &str, g: Option<&PyGraph>) -> PyResult<String> {
    let c = Certificate::from_json(certificate).map_err(err)?;
    cert::verify(&c, g.map(|g| &g.inner)).map_err(err)?;
    let doc = json!({"version": CERT_VERSION, "verified": true, "kind": c.kind, "digest": c.digest});
    Ok(serde_json::to_string_pretty(&doc).expect("verdict serializes"))
}

#[pymodule]
fn tangleforge(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("TangleforgeError", m.py().get_type::<TangleforgeError>())?;
    m.add_class::<PyGraph>()?;
    m.add_function(wrap_pyfunction!(separations, m)?)?;
    m.add_function(wrap_pyfunction!(tangles, m)?)?;
    m.add_function(wrap_pyfunction!(duality, m)?)?;
    m.add_function(wrap_pyfunction!(treewidth, m)?)?;
    m.add_function(wrap_pyfunction!(bramble, m)?)?;
    m.add_function(wrap_pyfunction!(theorem4, m)?)?;
    m.add_function(wrap_pyfunction!(limits, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
