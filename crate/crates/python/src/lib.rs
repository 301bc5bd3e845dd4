//! Python bindings: schemas, graphs, metrics, scheme enumeration, feature extraction and
//! full pipeline runs. Vertices are passed as `"entity=value"` strings.

use std::path::PathBuf;
use std::sync::Arc;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use gf::features::{extract_all_features, extract_subgraph_features, GeneratorRegistry, LabeledPair};
use gf::graph::{HeteroGraph, VertexId};
use gf::metrics::{MetricEngine, MetricValue, PageRankParams};
use gf::scheme::SchemeMask;
use graphfeat_core as gf;

create_exception!(
    graphfeat,
    GraphfeatError,
    PyException,
    "Base class of graphfeat errors."
);
create_exception!(
    graphfeat,
    ConfigError,
    GraphfeatError,
    "Invalid schema, config or arguments."
);
create_exception!(graphfeat, DataError, GraphfeatError, "Unusable input data.");
create_exception!(graphfeat, InternalError, GraphfeatError, "Internal invariant failure.");

fn to_py(err: gf::Error) -> PyErr {
    let msg = err.to_string();
    match err.exit_code() {
        2 => ConfigError::new_err(msg),
        3 => DataError::new_err(msg),
        _ => InternalError::new_err(msg),
    }
}

trait IntoPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for gf::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

fn value(v: MetricValue) -> Option<f64> {
    v.value()
}

/// A validated dataset schema.
#[pyclass(frozen, module = "graphfeat")]
struct Schema {
    inner: gf::schema::DatasetSchema,
}

#[pymethods]
impl Schema {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Schema {
            inner: gf::schema::load_schema(path).py_err()?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Schema {
            inner: gf::schema::DatasetSchema::from_json(text).py_err()?,
        })
    }

    #[getter]
    fn relationships(&self) -> Vec<String> {
        self.inner.relationship_names().into_iter().map(String::from).collect()
    }

    #[getter]
    fn predicted(&self) -> String {
        self.inner.predicted().name.clone()
    }

    #[getter]
    fn entity_types(&self) -> Vec<String> {
        self.inner.entity_types().into_iter().map(String::from).collect()
    }

    #[pyo3(signature = (max_schemes = gf::scheme::DEFAULT_MAX_SCHEMES))]
    fn scheme_ids(&self, max_schemes: usize) -> PyResult<Vec<String>> {
        gf::scheme::scheme_ids(&self.inner, max_schemes).py_err()
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }
}

/// An immutable heterogeneous graph.
#[pyclass(frozen, module = "graphfeat")]
struct Graph {
    inner: Arc<HeteroGraph>,
}

impl Graph {
    fn vertex(&self, id: &str) -> PyResult<u32> {
        let id = VertexId::parse(id).py_err()?;
        self.inner.require_vertex(&id).py_err()
    }

    fn masks(&self, removed: Option<Vec<String>>) -> PyResult<Vec<SchemeMask>> {
        let names: Vec<&str> = self.inner.edge_types().iter().map(|d| d.name.as_str()).collect();
        let pred = self.predicted_name()?;
        let masks = gf::scheme::generate_edge_combinations(&names, &pred).py_err()?;
        Ok(match removed {
            None => masks,
            Some(r) => {
                let r: std::collections::BTreeSet<String> = r.into_iter().collect();
                masks.into_iter().filter(|m| *m.removed_edge_types() == r).collect()
            }
        })
    }

    fn predicted_name(&self) -> PyResult<String> {
        let p = self
            .inner
            .predicted_type()
            .ok_or_else(|| ConfigError::new_err("graph has no predicted edge type"))?;
        Ok(self.inner.edge_types()[p as usize].name.clone())
    }

    fn with_engine<T>(
        &self,
        removed: Option<Vec<String>>,
        damping: f64,
        f: impl FnOnce(&MetricEngine<'_>) -> gf::Result<T>,
    ) -> PyResult<T> {
        let params = PageRankParams {
            damping,
            ..Default::default()
        };
        params.validate().py_err()?;
        let base = self.inner.view();
        let view = match removed {
            None => base,
            Some(r) => {
                let masks = self.masks(Some(r.clone()))?;
                let mask = masks
                    .first()
                    .ok_or_else(|| ConfigError::new_err(format!("no scheme removes exactly {r:?}")))?;
                gf::scheme::remove_edges(&base, mask).py_err()?
            }
        };
        let engine = MetricEngine::new(&view, params);
        f(&engine).py_err()
    }
}

#[pymethods]
impl Graph {
    /// Parses a tab-separated edge list: type, vertex, vertex, label.
    #[staticmethod]
    #[pyo3(signature = (text, predicted = None))]
    fn from_edge_list(text: &str, predicted: Option<&str>) -> PyResult<Self> {
        Ok(Graph {
            inner: Arc::new(gf::graph::parse_edge_list(text, predicted).py_err()?),
        })
    }

    /// Builds the complete graph of a dataset directory.
    #[staticmethod]
    fn from_dataset(schema: PathBuf, data_dir: PathBuf) -> PyResult<Self> {
        let schema = gf::schema::load_schema(schema).py_err()?;
        let ds = gf::dataset::ingest_tables(&schema, data_dir).py_err()?;
        let ds = ds.discretize(&schema).py_err()?;
        Ok(Graph {
            inner: Arc::new(gf::graph::build_complete_graph(&ds, &schema).py_err()?),
        })
    }

    #[getter]
    fn vertex_count(&self) -> usize {
        self.inner.vertex_count()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    #[getter]
    fn edge_types(&self) -> Vec<String> {
        self.inner.edge_types().iter().map(|d| d.name.clone()).collect()
    }

    fn vertices(&self) -> Vec<String> {
        self.inner.vertices().iter().map(|v| v.to_string()).collect()
    }

    fn edge_list(&self) -> String {
        gf::graph::export_edge_list(&self.inner.view())
    }

    fn is_bipartite(&self) -> bool {
        gf::graph::is_bipartite(&self.inner.view().topology()).bipartite
    }

    /// PageRank of every vertex in the (optionally reduced) graph.
    #[pyo3(signature = (removed = None, damping = 0.85))]
    fn pagerank<'py>(
        &self,
        py: Python<'py>,
        removed: Option<Vec<String>>,
        damping: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let scores = self.with_engine(removed, damping, |e| e.pagerank_scores())?;
        let d = PyDict::new(py);
        for (v, s) in scores {
            d.set_item(v.to_string(), value(s))?;
        }
        Ok(d)
    }

    /// One metric by generator name; `None` means missing.
    #[pyo3(signature = (op, vertex, vertex2 = None, entity_type = None, removed = None, damping = 0.85))]
    fn metric(
        &self,
        op: &str,
        vertex: &str,
        vertex2: Option<&str>,
        entity_type: Option<&str>,
        removed: Option<Vec<String>>,
        damping: f64,
    ) -> PyResult<Option<f64>> {
        let v = self.vertex(vertex)?;
        let t = vertex2.map(|s| self.vertex(s)).transpose()?;
        let x = match entity_type {
            Some(name) => Some(
                self.inner
                    .entity_type_index(name)
                    .ok_or_else(|| DataError::new_err(format!("unknown entity type `{name}`")))?,
            ),
            None => None,
        };
        let need_t = || t.ok_or_else(|| ConfigError::new_err(format!("{op} needs vertex2")));
        let out = match op {
            "degree_centrality" => self.with_engine(removed, damping, |e| e.degree(v))?,
            "avg_neighbor_degree" => self.with_engine(removed, damping, |e| e.avg_neighbor_degree(v))?,
            "pagerank" => self.with_engine(removed, damping, |e| e.pagerank_of(v))?,
            "clustering_coefficient" => self.with_engine(removed, damping, |e| e.clustering_coefficient(v))?,
            "node_redundancy" => self.with_engine(removed, damping, |e| e.node_redundancy(v))?,
            "shortest_path_excluding" => {
                let t = need_t()?;
                self.with_engine(removed, damping, |e| Ok(e.shortest_path(v, t)?.into()))?
            }
            "shared_neighbors_ratio" => {
                let t = need_t()?;
                self.with_engine(removed, damping, |e| e.shared_neighbors_ratio(v, t))?
            }
            "shared_neighbors_of_type" => {
                let t = need_t()?;
                let x = x.ok_or_else(|| ConfigError::new_err("shared_neighbors_of_type needs entity_type"))?;
                self.with_engine(removed, damping, |e| e.shared_neighbors_of_type(v, t, x))?
            }
            other => return Err(ConfigError::new_err(format!("unknown metric `{other}`"))),
        };
        Ok(value(out))
    }

    /// Scheme ids with their removed edge types, in enumeration order.
    fn schemes(&self) -> PyResult<Vec<(String, Vec<String>)>> {
        Ok(self
            .masks(None)?
            .into_iter()
            .map(|m| {
                (
                    m.scheme_id().to_string(),
                    m.removed_edge_types().iter().cloned().collect(),
                )
            })
            .collect())
    }

    /// Features of `(source, target)` pairs over every scheme, or over the full graph
    /// alone under the id `scheme_id` when `all_schemes` is false.
    #[pyo3(signature = (pairs, all_schemes = true, scheme_id = "BL", damping = 0.85))]
    fn extract_features(
        &self,
        py: Python<'_>,
        pairs: Vec<(String, String)>,
        all_schemes: bool,
        scheme_id: &str,
        damping: f64,
    ) -> PyResult<FeatureTable> {
        let pairs = pairs
            .into_iter()
            .map(|(s, t)| {
                Ok(LabeledPair::new(
                    VertexId::parse(&s).py_err()?,
                    VertexId::parse(&t).py_err()?,
                    None,
                ))
            })
            .collect::<PyResult<Vec<_>>>()?;
        let params = PageRankParams {
            damping,
            ..Default::default()
        };
        let masks = if all_schemes { self.masks(None)? } else { Vec::new() };
        let graph = Arc::clone(&self.inner);
        let scheme_id = scheme_id.to_string();
        let table = py.detach(move || {
            let registry = GeneratorRegistry::default();
            if all_schemes {
                let fm = gf::graph::FoldMaskedGraph::unmasked(&graph);
                extract_all_features(&fm, &masks, &pairs, &registry, &params)
            } else {
                extract_subgraph_features(&graph.view(), &scheme_id, &pairs, &registry, &params)
            }
        });
        Ok(FeatureTable { inner: table.py_err()? })
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(vertices={}, edges={}, edge_types={:?})",
            self.inner.vertex_count(),
            self.inner.edge_count(),
            self.edge_types()
        )
    }
}

/// Extracted features; missing cells are `None`.
#[pyclass(frozen, module = "graphfeat")]
struct FeatureTable {
    inner: gf::features::FeatureTable,
}

#[pymethods]
impl FeatureTable {
    #[getter]
    fn columns(&self) -> Vec<String> {
        self.inner.columns().to_vec()
    }

    /// `(source, target, label)` per row, in row order.
    fn keys(&self) -> Vec<(String, String, Option<String>)> {
        self.inner
            .rows()
            .iter()
            .map(|p| (p.source.to_string(), p.target.to_string(), p.label.clone()))
            .collect()
    }

    fn values(&self) -> Vec<Vec<Option<f64>>> {
        (0..self.inner.row_count())
            .map(|i| self.inner.row_values(i).iter().map(|&v| value(v)).collect())
            .collect()
    }

    fn get(&self, source: &str, target: &str, column: &str) -> PyResult<Option<f64>> {
        let s = VertexId::parse(source).py_err()?;
        let t = VertexId::parse(target).py_err()?;
        self.inner
            .get(&s, &t, column)
            .map(value)
            .ok_or_else(|| DataError::new_err(format!("no cell ({source}, {target}, {column})")))
    }

    fn to_csv(&self) -> PyResult<String> {
        self.inner.to_csv_string().py_err()
    }

    fn __len__(&self) -> usize {
        self.inner.row_count()
    }
}

/// Runs the pipeline from a config file and returns the manifest as a dict.
#[pyfunction]
#[pyo3(signature = (config, seed = None, jobs = None, output_dir = None))]
fn run_pipeline<'py>(
    py: Python<'py>,
    config: PathBuf,
    seed: Option<u64>,
    jobs: Option<usize>,
    output_dir: Option<PathBuf>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut cfg = gf::pipeline::RunConfig::load(config).py_err()?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if jobs.is_some() {
        cfg.jobs = jobs;
    }
    if let Some(o) = output_dir {
        cfg.output_dir = o;
    }
    let manifest = py.detach(|| gf::pipeline::run_pipeline(&cfg)).py_err()?;
    let d = PyDict::new(py);
    d.set_item("seed", manifest.seed)?;
    d.set_item("n_folds", manifest.n_folds)?;
    d.set_item("schemes", manifest.schemes.clone())?;
    let files = manifest
        .files
        .iter()
        .map(|f| {
            let e = PyDict::new(py);
            e.set_item("path", &f.path)?;
            e.set_item("rows", f.rows)?;
            e.set_item("columns", f.columns)?;
            e.set_item("sha256", &f.sha256)?;
            Ok(e)
        })
        .collect::<PyResult<Vec<_>>>()?;
    d.set_item("files", files)?;
    Ok(d)
}

/// `(scheme_id, removed types)` for every scheme keeping `predicted`.
#[pyfunction]
fn generate_edge_combinations(edge_types: Vec<String>, predicted: &str) -> PyResult<Vec<(String, Vec<String>)>> {
    let masks = gf::scheme::generate_edge_combinations(&edge_types, predicted).py_err()?;
    Ok(masks
        .into_iter()
        .map(|m| {
            (
                m.scheme_id().to_string(),
                m.removed_edge_types().iter().cloned().collect(),
            )
        })
        .collect())
}

#[pyfunction]
fn expected_feature_count(m: u32, f1: u64, f2: u64) -> u128 {
    gf::scheme::expected_feature_count(m, f1, f2)
}

#[pyfunction]
fn expected_scheme_count(m: u32) -> u128 {
    gf::scheme::expected_scheme_count(m)
}

/// Writes a synthetic dataset and returns the schema path.
#[pyfunction]
#[pyo3(signature = (directory, users = 30, items = 40, seed = 7))]
fn write_toy_dataset(directory: PathBuf, users: usize, items: usize, seed: u64) -> PyResult<PathBuf> {
    let params = gf::toy::ToyParams {
        users,
        items,
        seed,
        ..Default::default()
    };
    Ok(params.write(directory).py_err()?.schema)
}

#[pymodule]
fn graphfeat(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("GraphfeatError", py.get_type::<GraphfeatError>())?;
    m.add("ConfigError", py.get_type::<ConfigError>())?;
    m.add("DataError", py.get_type::<DataError>())?;
    m.add("InternalError", py.get_type::<InternalError>())?;
    m.add_class::<Schema>()?;
    m.add_class::<Graph>()?;
    m.add_class::<FeatureTable>()?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(generate_edge_combinations, m)?)?;
    m.add_function(wrap_pyfunction!(expected_feature_count, m)?)?;
    m.add_function(wrap_pyfunction!(expected_scheme_count, m)?)?;
    m.add_function(wrap_pyfunction!(write_toy_dataset, m)?)?;
    Ok(())
}
