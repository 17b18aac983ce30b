//! Python bindings. Import as `tradeoff_ann`.

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use std::path::PathBuf;

use tradeoff_ann::bench::{self, BenchConfig, Structure, Workload};
use tradeoff_ann::dd_tree::{DDTree as CoreDd, DdNode};
use tradeoff_ann::filter_tree::{FilterTree as CoreDi, QueryOptions};
use tradeoff_ann::io::{read_tree, write_tree, AnyTree};
use tradeoff_ann::{gaussian_caps, instance, lower_bounds as lb, tradeoff, Error};

fn err(e: Error) -> PyErr {
    match e {
        Error::Io(m) => PyIOError::new_err(m),
        Error::Invariant(_) | Error::NoConvergence(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn space_of(name: &str) -> PyResult<tradeoff_ann::Space> {
    use tradeoff_ann::Space::*;
    match name {
        "sphere" => Ok(Sphere),
        "hamming" => Ok(Hamming),
        "euclidean" => Ok(Euclidean),
        _ => Err(PyValueError::new_err(format!("unknown space {name:?}"))),
    }
}

fn space_name(s: tradeoff_ann::Space) -> &'static str {
    match s {
        tradeoff_ann::Space::Sphere => "sphere",
        tradeoff_ann::Space::Hamming => "hamming",
        tradeoff_ann::Space::Euclidean => "euclidean",
    }
}

#[pyclass(frozen, skip_from_py_object, name = "PointSet")]
#[derive(Clone)]
struct PointSet(tradeoff_ann::PointSet);

#[pymethods]
impl PointSet {
    #[new]
    #[pyo3(signature = (rows, space = "sphere"))]
    fn new(rows: Vec<Vec<f64>>, space: &str) -> PyResult<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        tradeoff_ann::PointSet::from_rows(dim, space_of(space)?, &rows).map(PointSet).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn space(&self) -> &'static str {
        space_name(self.0.space())
    }

    fn row(&self, i: usize) -> PyResult<Vec<f64>> {
        if i >= self.0.len() {
            return Err(PyValueError::new_err(format!("row {i} out of range")));
        }
        Ok(self.0.row(i).to_vec())
    }

    fn to_list(&self) -> Vec<Vec<f64>> {
        self.0.rows().map(<[f64]>::to_vec).collect()
    }

    fn __repr__(&self) -> String {
        format!("PointSet(n={}, dim={}, space={})", self.0.len(), self.0.dim(), self.space())
    }
}

#[pyclass(frozen, name = "Instance")]
struct Instance(instance::Instance);

#[pymethods]
impl Instance {
    #[getter]
    fn points(&self) -> PointSet {
        PointSet(self.0.points.clone())
    }

    #[getter]
    fn queries(&self) -> PointSet {
        PointSet(self.0.queries.clone())
    }

    #[getter]
    fn planted_pairs(&self) -> Vec<(u32, u32)> {
        self.0.truth.planted_pairs.clone()
    }

    #[getter]
    fn r(&self) -> f64 {
        self.0.truth.r
    }

    #[getter]
    fn cr(&self) -> f64 {
        self.0.truth.cr
    }

    #[getter]
    fn accept_radius(&self) -> f64 {
        self.0.truth.accept_radius()
    }
}

#[pyfunction]
fn gen_sphere(n: usize, d: usize, c: f64, q_count: usize, seed: u64) -> PyResult<Instance> {
    instance::gen_sphere(n, d, c, q_count, seed).map(Instance).map_err(err)
}

#[pyfunction]
fn gen_hamming(n: usize, d: usize, c: f64, q_count: usize, seed: u64) -> PyResult<Instance> {
    instance::gen_hamming(n, d, c, q_count, seed).map(Instance).map_err(err)
}

#[pyfunction]
fn gen_clustered(
    n: usize,
    d: usize,
    c: f64,
    n_clusters: usize,
    radius_factor: f64,
    q_count: usize,
    seed: u64,
) -> PyResult<Instance> {
    instance::gen_clustered(n, d, c, n_clusters, radius_factor, q_count, seed).map(Instance).map_err(err)
}

#[pyclass(frozen, skip_from_py_object, name = "TradeoffPoint")]
#[derive(Clone)]
struct TradeoffPoint(tradeoff::TradeoffPoint);

#[pymethods]
impl TradeoffPoint {
    #[getter]
    fn c(&self) -> f64 {
        self.0.c
    }
    #[getter]
    fn r(&self) -> f64 {
        self.0.r
    }
    #[getter]
    fn rho_q(&self) -> f64 {
        self.0.rho_q
    }
    #[getter]
    fn rho_u(&self) -> f64 {
        self.0.rho_u
    }
    #[getter]
    fn eta_u(&self) -> f64 {
        self.0.eta_u
    }
    #[getter]
    fn eta_q(&self) -> f64 {
        self.0.eta_q
    }
    #[getter]
    fn t(&self) -> u64 {
        self.0.t
    }
    #[getter]
    fn k(&self) -> u32 {
        self.0.k
    }

    fn space_exponent(&self) -> f64 {
        1.0 + self.0.rho_u
    }

    fn __repr__(&self) -> String {
        let p = &self.0;
        format!(
            "TradeoffPoint(c={}, r={}, rho_q={}, rho_u={}, eta_u={}, eta_q={}, T={}, K={})",
            p.c, p.r, p.rho_q, p.rho_u, p.eta_u, p.eta_q, p.t, p.k
        )
    }
}

fn target(rho_q: Option<f64>, rho_u: Option<f64>) -> PyResult<tradeoff::Target> {
    match (rho_q, rho_u) {
        (None, None) => Ok(tradeoff::Target::Balanced),
        (Some(q), None) => Ok(tradeoff::Target::RhoQ(q)),
        (None, Some(u)) => Ok(tradeoff::Target::RhoU(u)),
        _ => Err(PyValueError::new_err("give at most one of rho_q, rho_u")),
    }
}

/// Point on the trade-off curve for near distance `r` and far distance `c·r`
/// on the unit sphere. With neither target given, the balanced point.
#[pyfunction]
#[pyo3(signature = (c, r, rho_q = None, rho_u = None))]
fn curve_point(c: f64, r: f64, rho_q: Option<f64>, rho_u: Option<f64>) -> PyResult<TradeoffPoint> {
    tradeoff::curve_point(c, r, target(rho_q, rho_u)?).map(TradeoffPoint).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (point, n, k = None, success_const = tradeoff::DEFAULT_SUCCESS_CONST))]
fn solve_thresholds(point: &TradeoffPoint, n: usize, k: Option<u32>, success_const: f64) -> PyResult<TradeoffPoint> {
    let k = k.unwrap_or_else(|| tradeoff::default_k(n));
    tradeoff::solve_thresholds_with(&point.0, n, k, success_const).map(TradeoffPoint).map_err(err)
}

#[pyfunction]
fn random_curve(c: f64, grid: usize) -> PyResult<Vec<(f64, f64)>> {
    tradeoff::random_curve(c, grid).map_err(err)
}

#[pyfunction]
fn worst_case_curve(c: f64, grid: usize) -> PyResult<Vec<(f64, f64)>> {
    tradeoff::worst_case_curve(c, grid).map_err(err)
}

#[pyfunction]
fn alpha_beta(s: f64) -> PyResult<(f64, f64)> {
    gaussian_caps::alpha_beta(s).map_err(err)
}

#[pyfunction]
fn cap_prob(eta: f64) -> f64 {
    gaussian_caps::cap_prob(eta)
}

#[pyfunction]
fn joint_cap_prob(s: f64, eta_u: f64, eta_q: f64) -> PyResult<f64> {
    gaussian_caps::joint_cap_prob(s, eta_u, eta_q).map_err(err)
}

#[pyfunction]
fn list_of_points_rho_q(c: f64, rho_u: f64) -> PyResult<f64> {
    lb::list_of_points_rho_q(c, rho_u).map_err(err)
}

#[pyfunction]
fn one_probe_space_exponent(c: f64) -> PyResult<f64> {
    lb::one_probe_space_exponent(c).map_err(err)
}

#[pyfunction]
fn one_probe_schedule_exponent(c: f64, n: f64) -> PyResult<f64> {
    lb::one_probe_schedule_exponent(c, n).map_err(err)
}

#[pyfunction]
fn noise_operator_apply(f: Vec<f64>, sigma: f64) -> PyResult<Vec<f64>> {
    lb::noise_operator_apply(&f, sigma).map_err(err)
}

/// `(lhs, rhs, holds)` for indicator tables `a`, `b` and the Hölder pair with the given `p`.
#[pyfunction]
fn hypercontractive_check(a: Vec<f64>, b: Vec<f64>, sigma: f64, p: f64) -> PyResult<(f64, f64, bool)> {
    let np = lb::NoiseParams::from_p(sigma, p).map_err(err)?;
    let r = lb::hypercontractive_check(&a, &b, &np).map_err(err)?;
    Ok((r.lhs, r.rhs, r.holds))
}

fn stats_dict<'py>(py: Python<'py>, items: &[(&str, u64)]) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for (k, v) in items {
        d.set_item(*k, *v)?;
    }
    Ok(d)
}

#[pyclass(frozen, name = "FilterTree")]
struct FilterTree(CoreDi);

#[pymethods]
impl FilterTree {
    /// `params` must come from `solve_thresholds`.
    #[staticmethod]
    #[pyo3(signature = (points, params, seed = 0))]
    fn build(py: Python<'_>, points: &PointSet, params: &TradeoffPoint, seed: u64) -> PyResult<Self> {
        let (p, t) = (&points.0, &params.0);
        py.detach(|| CoreDi::build(p, t, seed)).map(FilterTree).map_err(err)
    }

    /// Returns `(index or None, stats)`.
    #[pyo3(signature = (points, q, radius, full_walk = false))]
    fn query<'py>(
        &self,
        py: Python<'py>,
        points: &PointSet,
        q: Vec<f64>,
        radius: f64,
        full_walk: bool,
    ) -> PyResult<(Option<u32>, Bound<'py, PyDict>)> {
        self.0.check_dataset(&points.0).map_err(err)?;
        let opts = QueryOptions { eta_q: None, stop_at_first: !full_walk };
        let o = self.0.query_with(&points.0, &q, radius, opts);
        let s = o.stats;
        let d = stats_dict(
            py,
            &[
                ("nodes_visited", s.nodes_visited),
                ("leaves_visited", s.leaves_visited),
                ("points_scanned", s.points_scanned),
                ("far_scanned", s.far_scanned),
                ("inner_products", s.inner_products),
            ],
        )?;
        Ok((o.found, d))
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.0.node_count()
    }

    #[getter]
    fn stored_points(&self) -> usize {
        self.0.stored_points()
    }

    #[getter]
    fn params(&self) -> TradeoffPoint {
        TradeoffPoint(self.0.params().clone())
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        write_tree(&path, &AnyTree::Di(self.0.clone())).map_err(err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        match read_tree(&path).map_err(err)? {
            AnyTree::Di(t) => Ok(FilterTree(t)),
            AnyTree::Dd(_) => Err(PyValueError::new_err("file holds a data-dependent tree")),
        }
    }
}

#[pyclass(frozen, name = "DDTree")]
struct DDTree(CoreDd);

#[pymethods]
impl DDTree {
    /// Parameters follow the CLI: library defaults with `eps` raised for low dimensions.
    #[staticmethod]
    #[pyo3(signature = (points, c, r, seed = 0, k = None, success_const = 3.0, rho_q = None))]
    fn build(
        py: Python<'_>,
        points: &PointSet,
        c: f64,
        r: f64,
        seed: u64,
        k: Option<u32>,
        success_const: f64,
        rho_q: Option<f64>,
    ) -> PyResult<Self> {
        let p = &points.0;
        let dp = bench::dd_params(p.dim(), k, rho_q, success_const);
        py.detach(|| CoreDd::build(p, c, r, &dp, seed)).map(DDTree).map_err(err)
    }

    fn query<'py>(
        &self,
        py: Python<'py>,
        points: &PointSet,
        q: Vec<f64>,
        radius: f64,
    ) -> PyResult<(Option<u32>, Bound<'py, PyDict>)> {
        self.0.check_dataset(&points.0).map_err(err)?;
        let o = self.0.query(&points.0, &q, radius);
        let s = o.stats;
        let d = stats_dict(
            py,
            &[
                ("nodes_visited", s.nodes_visited),
                ("balls_entered", s.balls_entered),
                ("clusters_probed", s.clusters_probed),
                ("points_scanned", s.points_scanned),
                ("inner_products", s.inner_products),
            ],
        )?;
        Ok((o.found, d))
    }

    /// Node counts by kind.
    fn node_kinds<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        for n in self.0.nodes() {
            let k = n.kind();
            let v: usize = d.get_item(k)?.map_or(Ok(0), |x| x.extract())?;
            d.set_item(k, v + 1)?;
        }
        Ok(d)
    }

    #[getter]
    fn clusters_carved(&self) -> usize {
        self.0.stats().clusters_carved
    }

    #[getter]
    fn stored_points(&self) -> usize {
        self.0.stats().stored_points
    }

    /// Whether the first root extracted at least one cluster ball.
    fn root_has_cluster(&self) -> bool {
        let Some(&root) = self.0.roots().values().next() else { return false };
        match &self.0.nodes()[root as usize] {
            DdNode::SphereInner { clusters, .. } => {
                clusters.iter().any(|&b| matches!(self.0.nodes()[b as usize], DdNode::BallInner { .. }))
            }
            _ => false,
        }
    }

    /// `(ok, violations)` at the given relative tolerance.
    #[pyo3(signature = (tol = 0.05))]
    fn check_invariants(&self, tol: f64) -> (bool, Vec<String>) {
        let r = self.0.check_invariants(tol);
        (r.ok(), r.violations)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        write_tree(&path, &AnyTree::Dd(self.0.clone())).map_err(err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        match read_tree(&path).map_err(err)? {
            AnyTree::Dd(t) => Ok(DDTree(t)),
            AnyTree::Di(_) => Err(PyValueError::new_err("file holds a data-independent tree")),
        }
    }
}

/// Run the bench and return the report without the timing section.
#[pyfunction]
#[pyo3(signature = (structure, n, c = 2.0, seed = 0, d = 128, q_count = 200, workload = "sphere", k = None, success_const = 3.0))]
#[allow(clippy::too_many_arguments)]
fn run_bench(
    py: Python<'_>,
    structure: &str,
    n: usize,
    c: f64,
    seed: u64,
    d: usize,
    q_count: usize,
    workload: &str,
    k: Option<u32>,
    success_const: f64,
) -> PyResult<String> {
    let structure = match structure {
        "di" => Structure::Di,
        "dd" => Structure::Dd,
        _ => return Err(PyValueError::new_err("structure must be 'di' or 'dd'")),
    };
    let workload = match workload {
        "sphere" => Workload::Sphere,
        "hamming" => Workload::Hamming,
        _ => return Err(PyValueError::new_err("workload must be 'sphere' or 'hamming'")),
    };
    let cfg = BenchConfig { d, q_count, workload, k, success_const, ..BenchConfig::new(structure, n, c, seed) };
    let rep = py.detach(|| bench::run_bench(&cfg)).map_err(err)?;
    Ok(rep.render_deterministic())
}

#[pymodule]
#[pyo3(name = "tradeoff_ann")]
fn py_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PointSet>()?;
    m.add_class::<Instance>()?;
    m.add_class::<TradeoffPoint>()?;
    m.add_class::<FilterTree>()?;
    m.add_class::<DDTree>()?;
    m.add_function(wrap_pyfunction!(gen_sphere, m)?)?;
    m.add_function(wrap_pyfunction!(gen_hamming, m)?)?;
    m.add_function(wrap_pyfunction!(gen_clustered, m)?)?;
    m.add_function(wrap_pyfunction!(curve_point, m)?)?;
    m.add_function(wrap_pyfunction!(solve_thresholds, m)?)?;
    m.add_function(wrap_pyfunction!(random_curve, m)?)?;
    m.add_function(wrap_pyfunction!(worst_case_curve, m)?)?;
    m.add_function(wrap_pyfunction!(alpha_beta, m)?)?;
    m.add_function(wrap_pyfunction!(cap_prob, m)?)?;
    m.add_function(wrap_pyfunction!(joint_cap_prob, m)?)?;
    m.add_function(wrap_pyfunction!(list_of_points_rho_q, m)?)?;
    m.add_function(wrap_pyfunction!(one_probe_space_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(one_probe_schedule_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(noise_operator_apply, m)?)?;
    m.add_function(wrap_pyfunction!(hypercontractive_check, m)?)?;
    m.add_function(wrap_pyfunction!(run_bench, m)?)?;
    Ok(())
}
