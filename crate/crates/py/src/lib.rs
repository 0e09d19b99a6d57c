//! Python bindings: scenarios, the known-cost game, price-of-anarchy
//! numbers, learning schedules and regret curves.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use flowsched_core::dsee::{self, GBoundOptions};
use flowsched_core::game;
use flowsched_core::model::expected_total_cost;
use flowsched_core::regret::{default_checkpoints, regret_run};
use flowsched_core::{poa, Scenario, DEFAULT_CAP};

fn err(e: flowsched_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A network with edge cost models and commodities.
#[pyclass(name = "Instance", frozen)]
struct PyInstance {
    inner: flowsched_core::Instance,
}

#[pymethods]
impl PyInstance {
    /// Builds an instance from scenario TOML text.
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let inner = Scenario::parse(text).and_then(|s| s.build_instance()).map_err(err)?;
        Ok(PyInstance { inner })
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        let inner = Scenario::load(&path).and_then(|s| s.build_instance()).map_err(err)?;
        Ok(PyInstance { inner })
    }

    #[getter]
    fn num_vertices(&self) -> usize {
        self.inner.num_vertices()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.num_edges()
    }

    #[getter]
    fn num_commodities(&self) -> usize {
        self.inner.num_commodities()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed()
    }

    fn digest(&self) -> String {
        self.inner.digest()
    }

    fn expected_edge_cost(&self, edge: usize, load: i64) -> PyResult<f64> {
        self.inner.expected_edge_cost(edge, load).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(vertices={}, edges={}, commodities={})",
            self.inner.num_vertices(),
            self.inner.num_edges(),
            self.inner.num_commodities()
        )
    }
}

/// Outcome of the known-cost game.
#[pyclass(get_all, frozen)]
struct Equilibrium {
    /// Edge ids of each commodity's path.
    paths: Vec<Vec<usize>>,
    cost: f64,
    circles: usize,
    moves: usize,
    is_nash: bool,
}

#[pyfunction]
fn run_known(inst: &PyInstance) -> PyResult<Equilibrium> {
    let inst = &inst.inner;
    let (flow, circles, moves) = game::run_to_equilibrium(inst).map_err(err)?;
    Ok(Equilibrium {
        paths: flow
            .assignments()
            .iter()
            .map(|p| p.as_ref().map(|p| p.edges.clone()).unwrap_or_default())
            .collect(),
        cost: expected_total_cost(inst, &flow).map_err(err)?,
        circles,
        moves: moves.len(),
        is_nash: game::is_nash(inst, &flow).map_err(err)?,
    })
}

/// Cost at the game's equilibrium over the brute-force optimum.
#[pyfunction]
#[pyo3(signature = (inst, cap = DEFAULT_CAP))]
fn price_of_anarchy(inst: &PyInstance, cap: u64) -> PyResult<f64> {
    let (ne, _, _) = game::run_to_equilibrium(&inst.inner).map_err(err)?;
    poa::price_of_anarchy(&inst.inner, &ne, cap).map_err(err)
}

#[pyfunction]
fn poa_upper_bound(inst: &PyInstance) -> PyResult<f64> {
    poa::poa_upper_bound(&inst.inner).map_err(err)
}

/// Upper bound on circles with moves, `ceil(S_M / S_m)`.
#[pyfunction]
#[pyo3(signature = (inst, cap = DEFAULT_CAP))]
fn convergence_bound(inst: &PyInstance, cap: u64) -> PyResult<u64> {
    game::convergence_bound(&inst.inner, cap).map_err(err)
}

/// `(explore, bellman_ford, exploit)` slot counts.
#[pyfunction]
fn schedule_counts(g: f64, n: u32, k: u32, horizon: u64) -> PyResult<(u64, u64, u64)> {
    let c = dsee::build_schedule(g, n, k, horizon).map_err(err)?.counts();
    Ok((c.explore, c.bellman_ford, c.exploit))
}

/// `(t, source)` for every exploration period.
#[pyfunction]
fn exploration_starts(g: f64, n: u32, k: u32, horizon: u64) -> PyResult<Vec<(u64, u32)>> {
    Ok(dsee::build_schedule(g, n, k, horizon).map_err(err)?.exploration_starts())
}

/// `(T, regret, regret / ln T)` at each checkpoint of one learning run.
#[pyfunction]
#[pyo3(signature = (inst, g, horizon, seed, checkpoints = None))]
fn regret_curve(
    inst: &PyInstance,
    g: f64,
    horizon: u64,
    seed: u64,
    checkpoints: Option<Vec<u64>>,
) -> PyResult<Vec<(u64, u64, f64)>> {
    let cps = checkpoints.unwrap_or_else(|| default_checkpoints(horizon));
    let curve = regret_run(&inst.inner, g, horizon, seed, &cps).map_err(err)?;
    Ok(curve.points.iter().map(|p| (p.t, p.regret, p.regret_over_log)).collect())
}

/// Sufficient `G` and the quantities it is built from.
#[pyclass(get_all, frozen)]
struct GBound {
    g_star: f64,
    d: usize,
    sigma2: f64,
    r: f64,
    r_half_width: f64,
    c: f64,
}

#[pyfunction]
#[pyo3(signature = (inst, seed, periods_per_source = 20_000))]
fn g_bound(inst: &PyInstance, seed: u64, periods_per_source: u64) -> PyResult<GBound> {
    let opts = GBoundOptions {
        periods_per_source,
        ..GBoundOptions::default()
    };
    let (p, g_star) = dsee::compute_g_bound(&inst.inner, &opts, seed).map_err(err)?;
    Ok(GBound {
        g_star,
        d: p.d,
        sigma2: p.sigma2,
        r: p.r,
        r_half_width: p.r_half_width,
        c: p.c,
    })
}

#[pymodule]
fn flowsched(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_class::<Equilibrium>()?;
    m.add_class::<GBound>()?;
    m.add_function(wrap_pyfunction!(run_known, m)?)?;
    m.add_function(wrap_pyfunction!(price_of_anarchy, m)?)?;
    m.add_function(wrap_pyfunction!(poa_upper_bound, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_bound, m)?)?;
    m.add_function(wrap_pyfunction!(schedule_counts, m)?)?;
    m.add_function(wrap_pyfunction!(exploration_starts, m)?)?;
    m.add_function(wrap_pyfunction!(regret_curve, m)?)?;
    m.add_function(wrap_pyfunction!(g_bound, m)?)?;
    Ok(())
}
