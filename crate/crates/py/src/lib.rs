//! Python bindings. Reports come back as plain dicts decoded from the same
//! JSON the CLI emits; exact rationals travel as `"p/q"` strings.

use kxt_core::balance::{
    check_balance2_exact, check_balance_exact, check_balance_naive, check_balance_sampled, WorkBudget,
};
use kxt_core::bounds::{self, advice_length_check};
use kxt_core::construct::{
    chernoff_feasibility, chernoff_feasibility_2src, estimate_balanced_fraction, find_balanced_table,
    precision_digits, sample_random_table, sample_random_table2, Strategy,
};
use kxt_core::extract::{self, FlatSource};
use kxt_core::nwgen::{self, Design, HardFunction};
use kxt_core::params::ParamSpec;
use kxt_core::ratio::{format_rational, parse_exponent, parse_rational};
use kxt_core::soi::{self, SoiExperiment, SoiInputs};
use kxt_core::{Error, Params, Shape, Table, Table2, Thresholds2};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;
use serde::Serialize;

create_exception!(kxt, KxtError, PyException, "A search or premise failed (not-found, infeasible).");

fn err(e: Error) -> PyErr {
    if e.is_domain() {
        KxtError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn to_py<'py>(py: Python<'py>, v: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    PyModule::import(py, "json")?.call_method1("loads", (text,))
}

fn exponent(s: &str) -> PyResult<kxt_core::ratio::Exponent> {
    parse_exponent(s).map_err(err)
}

fn rational(s: &str) -> PyResult<num_rational::BigRational> {
    parse_rational(s).map_err(err)
}

fn budget(b: Option<u64>) -> WorkBudget {
    b.map_or_else(WorkBudget::default, WorkBudget)
}

/// Table parameters. `k`, `d`, `delta` are base-2 exponents given as
/// strings such as `"3"` or `"5/2"`.
#[pyclass(name = "Params", module = "kxt", frozen)]
struct PyParams {
    inner: Params,
}

#[pymethods]
impl PyParams {
    #[new]
    fn new(n: u32, n1: u32, m: u32, k: &str, d: &str, delta: &str) -> PyResult<Self> {
        let raw = ParamSpec { n, n1, m, k: exponent(k)?, d: exponent(d)?, delta: exponent(delta)? };
        Ok(PyParams { inner: raw.validate().map_err(err)? })
    }

    /// Direct sizes: `K` rows, factors `D` and `delta` as rationals.
    #[staticmethod]
    fn from_sizes(n: u32, n1: u32, m: u32, k_rows: u64, d: &str, delta: &str) -> PyResult<Self> {
        let shape = Shape::new(n, n1, m).map_err(err)?;
        let inner = Params::from_factors(shape, k_rows, rational(d)?, rational(delta)?).map_err(err)?;
        Ok(PyParams { inner })
    }

    #[getter]
    fn n(&self) -> u32 {
        self.inner.shape.n
    }

    #[getter]
    fn n1(&self) -> u32 {
        self.inner.shape.n1
    }

    #[getter]
    fn m(&self) -> u32 {
        self.inner.shape.m
    }

    #[getter]
    fn k_rows(&self) -> u64 {
        self.inner.k_rows()
    }

    #[getter]
    fn d_factor(&self) -> String {
        format_rational(self.inner.d())
    }

    #[getter]
    fn delta_factor(&self) -> String {
        format_rational(self.inner.delta())
    }

    #[getter]
    fn min_heavy_size(&self) -> u64 {
        self.inner.min_heavy_size()
    }

    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.summary())
    }

    fn __repr__(&self) -> String {
        let s = self.inner.shape;
        format!(
            "Params(n={}, n1={}, m={}, K={}, D={}, Delta={})",
            s.n,
            s.n1,
            s.m,
            self.inner.k_rows(),
            self.d_factor(),
            self.delta_factor()
        )
    }
}

#[pyclass(name = "Table", module = "kxt", frozen)]
struct PyTable {
    inner: Table,
}

#[pymethods]
impl PyTable {
    #[new]
    fn new(n: u32, n1: u32, m: u32, cells: Vec<u32>) -> PyResult<Self> {
        let shape = Shape::new(n, n1, m).map_err(err)?;
        Ok(PyTable { inner: Table::new(shape, cells).map_err(err)? })
    }

    /// Uniform random table for `params`, fixed by `seed`.
    #[staticmethod]
    #[pyo3(signature = (params, seed=0))]
    fn random(params: &PyParams, seed: u64) -> Self {
        PyTable { inner: sample_random_table(&params.inner, seed) }
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        Ok(PyTable { inner: Table::from_bytes(data).map_err(err)? })
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.inner.to_bytes())
    }

    #[getter]
    fn shape(&self) -> (u32, u32, u32) {
        let s = self.inner.shape();
        (s.n, s.n1, s.m)
    }

    #[getter]
    fn cells(&self) -> Vec<u32> {
        self.inner.cells().to_vec()
    }

    fn row(&self, x: usize) -> PyResult<Vec<u32>> {
        if x >= self.inner.shape().rows() {
            return Err(PyValueError::new_err(format!("row {x} out of range")));
        }
        Ok(self.inner.row(x).to_vec())
    }

    /// `E(x, y)`.
    fn extract(&self, x: u32, y: u32) -> PyResult<u32> {
        extract::extract(&self.inner, x, y).map_err(err)
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        let (n, n1, m) = self.shape();
        format!("Table(n={n}, n1={n1}, m={m})")
    }
}

#[pyclass(name = "Table2", module = "kxt", frozen)]
struct PyTable2 {
    inner: Table2,
}

#[pymethods]
impl PyTable2 {
    #[new]
    fn new(n: u32, m: u32, cells: Vec<u32>) -> PyResult<Self> {
        Ok(PyTable2 { inner: Table2::new(n, m, cells).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (n, m, seed=0))]
    fn random(n: u32, m: u32, seed: u64) -> PyResult<Self> {
        Ok(PyTable2 { inner: sample_random_table2(n, m, seed).map_err(err)? })
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        Ok(PyTable2 { inner: Table2::from_bytes(data).map_err(err)? })
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.inner.to_bytes())
    }

    #[getter]
    fn shape(&self) -> (u32, u32) {
        (self.inner.n(), self.inner.m())
    }

    #[getter]
    fn cells(&self) -> Vec<u32> {
        self.inner.cells().to_vec()
    }

    fn __repr__(&self) -> String {
        format!("Table2(n={}, m={})", self.inner.n(), self.inner.m())
    }
}

/// Balance report for a one-source table. `mode` is `exact`, `naive` or
/// `sampled`.
#[pyfunction]
#[pyo3(signature = (table, params, mode="exact", trials=1000, seed=0, work_budget=None))]
fn check_balance<'py>(
    py: Python<'py>,
    table: &PyTable,
    params: &PyParams,
    mode: &str,
    trials: u64,
    seed: u64,
    work_budget: Option<u64>,
) -> PyResult<Bound<'py, PyAny>> {
    let (t, p, b) = (&table.inner, &params.inner, budget(work_budget));
    match mode {
        "exact" => to_py(py, &py.detach(|| check_balance_exact(t, p, b)).map_err(err)?),
        "naive" => to_py(py, &py.detach(|| check_balance_naive(t, p, b)).map_err(err)?),
        "sampled" => to_py(py, &py.detach(|| check_balance_sampled(t, p, trials, seed)).map_err(err)?),
        other => Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    }
}

/// Two-source balance with row and column thresholds `kx`, `ky` and color
/// factor `d` given as exponents.
#[pyfunction]
#[pyo3(signature = (table, kx, ky, d, factor="2", work_budget=None))]
fn check_balance2<'py>(
    py: Python<'py>,
    table: &PyTable2,
    kx: &str,
    ky: &str,
    d: &str,
    factor: &str,
    work_budget: Option<u64>,
) -> PyResult<Bound<'py, PyAny>> {
    let th = Thresholds2::from_exponents(table.inner.n(), exponent(kx)?, exponent(ky)?, exponent(d)?).map_err(err)?;
    let factor = rational(factor)?;
    let report = py.detach(|| check_balance2_exact(&table.inner, &th, &factor, budget(work_budget))).map_err(err)?;
    to_py(py, &report)
}

#[pyfunction]
#[pyo3(signature = (params, digits=None))]
fn feasibility<'py>(py: Python<'py>, params: &PyParams, digits: Option<usize>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &chernoff_feasibility(&params.inner, digits.unwrap_or_else(precision_digits)))
}

#[pyfunction]
#[pyo3(signature = (n, m, kx, ky, d, digits=None))]
fn feasibility2<'py>(
    py: Python<'py>,
    n: u32,
    m: u32,
    kx: &str,
    ky: &str,
    d: &str,
    digits: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let th = Thresholds2::from_exponents(n, exponent(kx)?, exponent(ky)?, exponent(d)?).map_err(err)?;
    to_py(py, &chernoff_feasibility_2src(n, m, &th, digits.unwrap_or_else(precision_digits)))
}

/// Searches for a balanced table; returns `(table, attempts)`.
#[pyfunction]
#[pyo3(signature = (params, strategy="random-retry", max_candidates=1000, seed=0, work_budget=None))]
fn find_table(
    py: Python<'_>,
    params: &PyParams,
    strategy: &str,
    max_candidates: u64,
    seed: u64,
    work_budget: Option<u64>,
) -> PyResult<(PyTable, u64)> {
    let strategy = match strategy {
        "random-retry" => Strategy::RandomRetry,
        "exhaustive" => Strategy::Exhaustive,
        other => return Err(PyValueError::new_err(format!("unknown strategy {other:?}"))),
    };
    let p = &params.inner;
    let found = py
        .detach(|| find_balanced_table(p, strategy, max_candidates, seed, budget(work_budget)))
        .map_err(err)?;
    Ok((PyTable { inner: found.table }, found.attempts))
}

#[pyfunction]
#[pyo3(signature = (params, trials=200, seed=0, work_budget=None))]
fn balanced_fraction<'py>(
    py: Python<'py>,
    params: &PyParams,
    trials: u64,
    seed: u64,
    work_budget: Option<u64>,
) -> PyResult<Bound<'py, PyAny>> {
    let p = &params.inner;
    let est = py.detach(|| estimate_balanced_fraction(p, trials, seed, budget(work_budget))).map_err(err)?;
    to_py(py, &est)
}

/// Seeds `y` whose output avoids `colors`.
#[pyfunction]
fn good_seeds(table: &PyTable, x: u32, colors: Vec<u32>) -> PyResult<Vec<u32>> {
    extract::good_seeds(&table.inner, x, &colors).map_err(err)
}

/// Least good seed of row `x` and its output.
#[pyfunction]
fn advice(table: &PyTable, x: u32, colors: Vec<u32>) -> PyResult<(u32, u32)> {
    extract::advice_extract(&table.inner, x, &colors).map_err(err)
}

/// Rows with more than `factor·|A|/M·N1` cells in `colors`.
#[pyfunction]
fn bad_rows(table: &PyTable, colors: Vec<u32>, factor: &str) -> PyResult<Vec<u32>> {
    extract::count_bad_rows(&table.inner, &colors, &rational(factor)?).map_err(err)
}

fn distribution(table: &PyTable, rows: Vec<u32>) -> PyResult<extract::OutputDist> {
    let source = FlatSource::new(rows, table.inner.shape().rows()).map_err(err)?;
    extract::output_distribution(&table.inner, &source).map_err(err)
}

/// Color counts of `E(X, Y)` with `X` flat on `rows`.
#[pyfunction]
fn output_counts(table: &PyTable, rows: Vec<u32>) -> PyResult<Vec<u64>> {
    Ok(distribution(table, rows)?.counts().to_vec())
}

#[pyfunction]
fn heavy_set_mass(table: &PyTable, rows: Vec<u32>, size: usize) -> PyResult<String> {
    let dist = distribution(table, rows)?;
    Ok(format_rational(&extract::heavy_set_mass(&dist, size).map_err(err)?))
}

#[pyfunction]
fn smooth_min_entropy<'py>(py: Python<'py>, table: &PyTable, rows: Vec<u32>, eps: &str) -> PyResult<Bound<'py, PyAny>> {
    let dist = distribution(table, rows)?;
    to_py(py, &extract::smooth_min_entropy(&dist, &rational(eps)?).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (n, tx, ty, tyx, c2x=1, c2y=1, c2yx=1, c0=0))]
#[allow(clippy::too_many_arguments)]
fn soi_ledger<'py>(
    py: Python<'py>,
    n: i64,
    tx: i64,
    ty: i64,
    tyx: i64,
    c2x: i64,
    c2y: i64,
    c2yx: i64,
    c0: i64,
) -> PyResult<Bound<'py, PyAny>> {
    let inp = SoiInputs { n, tx, ty, tyx, c2x, c2y, c2yx, c0 };
    to_py(py, &soi::soi_ledger(&inp).map_err(err)?)
}

/// Builds a two-source table passing balance and probes the bad-row bound.
#[pyfunction]
#[pyo3(signature = (n, m, kx, ky, d, seed=0, factor="2", samples=16, construction_budget=100))]
#[allow(clippy::too_many_arguments)]
fn soi_experiment<'py>(
    py: Python<'py>,
    n: u32,
    m: u32,
    kx: &str,
    ky: &str,
    d: &str,
    seed: u64,
    factor: &str,
    samples: u64,
    construction_budget: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let th = Thresholds2::from_exponents(n, exponent(kx)?, exponent(ky)?, exponent(d)?).map_err(err)?;
    let mut exp = SoiExperiment::new(n, m, th, seed);
    exp.factor = rational(factor)?;
    exp.column_samples = samples;
    exp.construction_budget = construction_budget;
    to_py(py, &py.detach(|| exp.run()).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (n, m, h, sigma, slack=kxt_core::bounds::DEFAULT_SLACK))]
fn epsilon_lower_bound<'py>(py: Python<'py>, n: u64, m: u64, h: u32, sigma: f64, slack: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &bounds::epsilon_lower_bound(n, m, h, sigma, slack).map_err(err)?)
}

#[pyfunction]
fn advice_check<'py>(py: Python<'py>, n: u64, m: u64, h: u32, ratio: &str) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &advice_length_check(n, m, h, &rational(ratio)?).map_err(err)?)
}

/// Greedy design: `t` sets of size `l` pairwise meeting in at most `a`
/// positions. Returns `(seed_len, sets)`.
#[pyfunction]
fn nw_design(t: usize, l: usize, a: usize, seed_len_budget: usize) -> PyResult<(usize, Vec<Vec<u32>>)> {
    let d = nwgen::design_greedy(t, l, a, seed_len_budget).map_err(err)?;
    Ok((d.seed_len, d.sets))
}

fn hard(kind: &str, arity: usize, seed: u64) -> PyResult<HardFunction> {
    match kind {
        "random" => Ok(HardFunction::random(arity, seed)),
        "parity" => Ok(HardFunction::parity(arity)),
        other => Err(PyValueError::new_err(format!("unknown hard function {other:?}"))),
    }
}

fn bits(s: &str) -> PyResult<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(PyValueError::new_err("bits must be a string of 0 and 1")),
        })
        .collect()
}

fn bit_string(b: &[bool]) -> String {
    b.iter().map(|&v| if v { '1' } else { '0' }).collect()
}

/// Generator output on `seed_bits` (a `"0110"` string) over `sets`.
#[pyfunction]
#[pyo3(signature = (sets, seed_bits, max_intersect=None, hard_function="parity", seed=0))]
fn nw_expand(
    sets: Vec<Vec<u32>>,
    seed_bits: &str,
    max_intersect: Option<usize>,
    hard_function: &str,
    seed: u64,
) -> PyResult<String> {
    let s = bits(seed_bits)?;
    let set_size = sets.first().map_or(0, Vec::len);
    let d = Design { seed_len: s.len(), set_size, max_intersect: max_intersect.unwrap_or(set_size), sets };
    d.validate().map_err(err)?;
    let f = hard(hard_function, set_size, seed)?;
    Ok(bit_string(&nwgen::nw_expand(&f, &d, &s).map_err(err)?))
}

/// First seed whose expansion is a balanced table for `params`. Returns
/// `(seed_index, seed_bits, table)`; raises `KxtError` when none is found.
#[pyfunction]
#[pyo3(signature = (params, l, a, seed_len_budget, hard_function="random", seed=0, seed_budget=65536))]
#[allow(clippy::too_many_arguments)]
fn nw_search(
    py: Python<'_>,
    params: &PyParams,
    l: usize,
    a: usize,
    seed_len_budget: usize,
    hard_function: &str,
    seed: u64,
    seed_budget: u64,
) -> PyResult<(u64, String, PyTable)> {
    let p = &params.inner;
    let d = nwgen::design_greedy(p.shape.cells() * p.shape.m as usize, l, a, seed_len_budget).map_err(err)?;
    let f = hard(hard_function, l, seed)?;
    match py.detach(|| nwgen::nw_table_search(p, &f, &d, seed_budget, WorkBudget::default())).map_err(err)? {
        Ok(found) => Ok((found.seed_index, bit_string(&found.seed), PyTable { inner: found.table })),
        Err(nf) => Err(KxtError::new_err(format!(
            "no balanced table among {} seeds (best load {})",
            nf.scanned,
            nf.best_load_string().unwrap_or_else(|| "n/a".into())
        ))),
    }
}

#[pymodule]
pub fn kxt(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", kxt_core::VERSION)?;
    m.add("KxtError", m.py().get_type::<KxtError>())?;
    m.add_class::<PyParams>()?;
    m.add_class::<PyTable>()?;
    m.add_class::<PyTable2>()?;
    m.add_function(wrap_pyfunction!(check_balance, m)?)?;
    m.add_function(wrap_pyfunction!(check_balance2, m)?)?;
    m.add_function(wrap_pyfunction!(feasibility, m)?)?;
    m.add_function(wrap_pyfunction!(feasibility2, m)?)?;
    m.add_function(wrap_pyfunction!(find_table, m)?)?;
    m.add_function(wrap_pyfunction!(balanced_fraction, m)?)?;
    m.add_function(wrap_pyfunction!(good_seeds, m)?)?;
    m.add_function(wrap_pyfunction!(advice, m)?)?;
    m.add_function(wrap_pyfunction!(bad_rows, m)?)?;
    m.add_function(wrap_pyfunction!(output_counts, m)?)?;
    m.add_function(wrap_pyfunction!(heavy_set_mass, m)?)?;
    m.add_function(wrap_pyfunction!(smooth_min_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(soi_ledger, m)?)?;
    m.add_function(wrap_pyfunction!(soi_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(epsilon_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(advice_check, m)?)?;
    m.add_function(wrap_pyfunction!(nw_design, m)?)?;
    m.add_function(wrap_pyfunction!(nw_expand, m)?)?;
    m.add_function(wrap_pyfunction!(nw_search, m)?)?;
    Ok(())
}
