//! Python bindings for cbm-core: boolean transaction databases, weighted
//! itemset mining, and sparse models over conjunctions trained with GRAB.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use cbm_core::datakit::{
    apply_binarizer, parse_libsvm, render_libsvm, Transaction, TransactionDatabase,
};
use cbm_core::grab::{train as grab_train, GrabConfig, StopReason};
use cbm_core::loss::LossKind;
use cbm_core::miner::{mine_signed, rank_candidates, Itemset, TransactionWeights};
use cbm_core::model::{
    accuracy, deserialize, predict_label, predict_score, serialize, SparseModel,
};
use cbm_core::{CbmError, DegreeCap};

fn to_py(e: CbmError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn cap_from(k: Option<u32>) -> PyResult<DegreeCap> {
    match k {
        None => Ok(DegreeCap::Unbounded),
        Some(k) if k >= 1 => Ok(DegreeCap::Cap(k)),
        Some(_) => Err(PyValueError::new_err("k must be at least 1, or None for no cap")),
    }
}

fn loss_from(name: &str) -> PyResult<LossKind> {
    name.parse().map_err(PyValueError::new_err)
}

fn transaction_from(items: Vec<u32>) -> PyResult<Transaction> {
    Transaction::new(items).map_err(to_py)
}

/// A set of boolean transactions with +-1 labels.
#[pyclass]
struct Database {
    inner: TransactionDatabase,
}

#[pymethods]
impl Database {
    /// Builds a database from item lists (1-based attribute indices) and
    /// labels. `d` defaults to the largest index present.
    #[new]
    #[pyo3(signature = (transactions, labels, d=None))]
    fn new(transactions: Vec<Vec<u32>>, labels: Vec<i8>, d: Option<u32>) -> PyResult<Self> {
        let txs: Vec<Transaction> = transactions
            .into_iter()
            .map(transaction_from)
            .collect::<PyResult<_>>()?;
        let d = d.unwrap_or_else(|| txs.iter().filter_map(Transaction::max_item).max().unwrap_or(0));
        let inner = TransactionDatabase::new(d, txs, labels).map_err(to_py)?;
        Ok(Database { inner })
    }

    /// Parses LIBSVM text (`label idx:val ...`, nonzero values become items).
    #[staticmethod]
    #[pyo3(signature = (text, d=None))]
    fn parse_libsvm(text: &str, d: Option<u32>) -> PyResult<Self> {
        let inner = parse_libsvm(text.as_bytes(), d).map_err(to_py)?;
        Ok(Database { inner })
    }

    fn to_libsvm(&self) -> String {
        render_libsvm(&self.inner)
    }

    #[getter]
    fn d(&self) -> u32 {
        self.inner.d()
    }

    fn labels(&self) -> Vec<i8> {
        self.inner.labels().to_vec()
    }

    fn transactions(&self) -> Vec<Vec<u32>> {
        self.inner.transactions().iter().map(|t| t.items().to_vec()).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Database(m={}, d={})", self.inner.len(), self.inner.d())
    }
}

/// A sparse linear model over conjunctions of attributes.
#[pyclass]
struct Model {
    inner: SparseModel,
}

#[pymethods]
impl Model {
    /// Parses the `cbm v1` text format.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Model { inner: deserialize(text).map_err(to_py)? })
    }

    fn serialize(&self) -> String {
        serialize(&self.inner)
    }

    #[getter]
    fn d(&self) -> u32 {
        self.inner.d()
    }

    /// Conjunction size cap, or None when unbounded.
    #[getter]
    fn k(&self) -> Option<u32> {
        match self.inner.degree_cap() {
            DegreeCap::Cap(k) => Some(k),
            DegreeCap::Unbounded => None,
        }
    }

    #[getter]
    fn loss(&self) -> String {
        self.inner.loss().to_string()
    }

    #[getter]
    fn c(&self) -> f64 {
        self.inner.c()
    }

    /// Nonzero weights as (items, weight) pairs in itemset order; the empty
    /// list is the constant term.
    fn weights(&self) -> Vec<(Vec<u32>, f64)> {
        self.inner.weights().map(|(p, w)| (p.items().to_vec(), w)).collect()
    }

    fn predict_score(&self, items: Vec<u32>) -> PyResult<f64> {
        Ok(predict_score(&self.inner, &transaction_from(items)?))
    }

    fn predict_label(&self, items: Vec<u32>) -> PyResult<i8> {
        Ok(predict_label(&self.inner, &transaction_from(items)?))
    }

    fn predict_labels(&self, db: &Database) -> Vec<i8> {
        db.inner.transactions().iter().map(|t| predict_label(&self.inner, t)).collect()
    }

    fn accuracy(&self, db: &Database) -> f64 {
        accuracy(&self.inner, &db.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(d={}, k={}, loss={}, C={}, nonzero={})",
            self.inner.d(),
            self.inner.degree_cap(),
            self.inner.loss(),
            self.inner.c(),
            self.inner.len()
        )
    }
}

/// Per-iteration training record.
#[pyclass]
struct Trace {
    /// (iteration, active features, violation total, objective) per round.
    #[pyo3(get)]
    rows: Vec<(usize, usize, f64, f64)>,
    /// Why training stopped: converged, no_candidates, or iteration_cap.
    #[pyo3(get)]
    stop: String,
    /// Violation total of the first round, the convergence yardstick.
    #[pyo3(get)]
    v0: f64,
}

#[pymethods]
impl Trace {
    fn __repr__(&self) -> String {
        format!("Trace(rounds={}, stop={})", self.rows.len(), self.stop)
    }
}

/// Trains a model on `db`; returns (model, trace). `k=None` means unbounded
/// conjunctions, `emission_cap=None` the default mining budget.
#[pyfunction]
#[pyo3(signature = (db, c=1.0, loss="logistic", k=None, batch=10, epsilon=0.01,
                    max_iters=10_000, emission_cap=None))]
#[allow(clippy::too_many_arguments)]
fn train(
    db: &Database,
    c: f64,
    loss: &str,
    k: Option<u32>,
    batch: usize,
    epsilon: f64,
    max_iters: usize,
    emission_cap: Option<usize>,
) -> PyResult<(Model, Trace)> {
    let cfg = GrabConfig {
        c,
        loss: loss_from(loss)?,
        k: cap_from(k)?,
        batch,
        epsilon,
        max_outer: max_iters,
        emission_cap,
        ..GrabConfig::default()
    };
    let (model, trace) = grab_train(&db.inner, &cfg).map_err(to_py)?;
    let rows = trace
        .rows
        .iter()
        .map(|r| (r.iter, r.active, r.v, r.objective))
        .collect();
    let stop = match trace.stop {
        StopReason::Converged => "converged",
        StopReason::NoCandidates => "no_candidates",
        StopReason::IterationCap => "iteration_cap",
    };
    Ok((Model { inner: model }, Trace { rows, stop: stop.to_string(), v0: trace.v0 }))
}

/// Mines itemsets whose weighted frequency magnitude beats `theta`, ranked
/// best first. `weights=None` counts every transaction once.
#[pyfunction]
#[pyo3(signature = (db, weights=None, theta=1.0, k=None))]
fn mine(
    db: &Database,
    weights: Option<Vec<f64>>,
    theta: f64,
    k: Option<u32>,
) -> PyResult<Vec<(f64, Vec<u32>)>> {
    let alpha = match weights {
        Some(values) => TransactionWeights::new(values).map_err(to_py)?,
        None => TransactionWeights::uniform(db.inner.len()),
    };
    let mut candidates = mine_signed(&db.inner, &alpha, theta, cap_from(k)?).map_err(to_py)?;
    rank_candidates(&mut candidates);
    Ok(candidates
        .into_iter()
        .map(|c| (c.weighted_frequency, c.itemset.items().to_vec()))
        .collect())
}

/// Equal-width cut points that turn real-valued rows into boolean attributes.
#[pyclass]
struct Binarizer {
    inner: cbm_core::datakit::Binarizer,
}

#[pymethods]
impl Binarizer {
    /// Restores cut points saved with `to_sidecar`.
    #[staticmethod]
    fn from_sidecar(text: &str) -> PyResult<Self> {
        Ok(Binarizer { inner: cbm_core::datakit::Binarizer::from_sidecar(text).map_err(to_py)? })
    }

    fn to_sidecar(&self) -> String {
        self.inner.to_sidecar()
    }

    #[getter]
    fn attribute_count(&self) -> u32 {
        self.inner.attribute_count()
    }

    /// Maps one real-valued row to its item list.
    fn apply(&self, row: Vec<f64>) -> PyResult<Vec<u32>> {
        Ok(apply_binarizer(&self.inner, &row).map_err(to_py)?.items().to_vec())
    }
}

/// Fits equal-width bins, one indicator attribute per (column, bin).
#[pyfunction]
#[pyo3(signature = (rows, bins=30))]
fn fit_binarizer(rows: Vec<Vec<f64>>, bins: u32) -> PyResult<Binarizer> {
    Ok(Binarizer { inner: cbm_core::datakit::fit_binarizer(&rows, bins).map_err(to_py)? })
}

/// Weighted frequency of one itemset under the given weights.
#[pyfunction]
#[pyo3(signature = (db, items, weights=None))]
fn weighted_frequency(db: &Database, items: Vec<u32>, weights: Option<Vec<f64>>) -> PyResult<f64> {
    let alpha = match weights {
        Some(values) => TransactionWeights::new(values).map_err(to_py)?,
        None => TransactionWeights::uniform(db.inner.len()),
    };
    let p = Itemset::new(items).map_err(to_py)?;
    cbm_core::miner::weighted_frequency(&db.inner, &alpha, &p).map_err(to_py)
}

#[pymodule]
fn cbm_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Database>()?;
    m.add_class::<Model>()?;
    m.add_class::<Trace>()?;
    m.add_class::<Binarizer>()?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(mine, m)?)?;
    m.add_function(wrap_pyfunction!(fit_binarizer, m)?)?;
    m.add_function(wrap_pyfunction!(weighted_frequency, m)?)?;
    Ok(())
}
