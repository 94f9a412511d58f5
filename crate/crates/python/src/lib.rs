//! Python bindings. Reports come back as plain dicts and densities as lists
//! of floats sampled on the model's grid nodes.

use flocstab::criteria::{characteristic_function, nontrivial_verdict, zero_report};
use flocstab::linearization::{assemble_matrix, build_coefficients, spectral_abscissa};
use flocstab::model::{constant_kernel_with_cutoff, example1, validate_assumptions, Example2, Grid, RateSet, RateTables};
use flocstab::simulator::{perturbation_experiment, run, SimOptions};
use flocstab::steady_state::{solve_fixed_point, SolverOptions};
use flocstab::sweep::{run_sweep, SweepConfig};
use flocstab::{FlocError, Samples};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde_json::json;

fn err(e: FlocError) -> PyErr {
    match e {
        FlocError::EigenFailure(_) | FlocError::BracketExhausted { .. } | FlocError::NonFinite(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Hands a serializable value to Python through its `json` module.
fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// A rate model tabulated on a uniform grid.
#[pyclass(module = "flocstab_py", frozen)]
struct Model {
    rates: RateSet,
    grid: Grid,
    tables: RateTables,
    example2: Option<Example2>,
}

impl Model {
    fn build(rates: RateSet, n: usize, example2: Option<Example2>) -> PyResult<Self> {
        let grid = Grid::new(rates.domain(), n).map_err(err)?;
        let tables = rates.tabulate(&grid).map_err(err)?;
        Ok(Self { rates, grid, tables, example2 })
    }

    fn samples(&self, values: Vec<f64>) -> PyResult<Samples> {
        Samples::new(self.grid, values).map_err(err)
    }

    fn point(&self, p_star: Option<Vec<f64>>) -> PyResult<Samples> {
        match p_star {
            Some(v) => self.samples(v),
            None => Ok(Samples::zeros(self.grid)),
        }
    }

    /// Tables at `p_star`; only the Example 2 kernel depends on it.
    fn bound(&self, p_star: &Samples) -> PyResult<RateTables> {
        match &self.example2 {
            Some(ex) => ex.bind(p_star).and_then(|r| r.tabulate(&self.grid)).map_err(err),
            None => Ok(self.tables.clone()),
        }
    }
}

#[pymethods]
impl Model {
    /// `g = x + 1`, `mu = 1`, `q = b (x + 1)`, `kf = 2x` on `[0, 1]`, with an
    /// optional constant aggregation kernel `k0` cut off at `x + y = 1`.
    #[staticmethod]
    #[pyo3(signature = (b, n = 100, k0 = None))]
    fn example1(b: f64, n: usize, k0: Option<f64>) -> PyResult<Self> {
        let mut rates = example1(b).map_err(err)?;
        if let Some(k0) = k0 {
            rates = rates.with_aggregation(constant_kernel_with_cutoff(k0, 1.0));
        }
        Self::build(rates, n, None)
    }

    /// `g = exp(-a x)`, `q = b (x + 1)`, `kf = c x`, `mu = c x / 2` and the
    /// kernel `d (1-x)(1-y) / (p*(x) p*(y))` bound at each steady state.
    #[staticmethod]
    #[pyo3(signature = (a, b, c, d = 0.0, n = 100))]
    fn example2(a: f64, b: f64, c: f64, d: f64, n: usize) -> PyResult<Self> {
        let ex = Example2::new(a, b, c, d).map_err(err)?;
        Self::build(ex.phase1(), n, Some(ex))
    }

    #[getter]
    fn n_cells(&self) -> usize {
        self.grid.n_cells()
    }

    fn nodes(&self) -> Vec<f64> {
        self.grid.nodes()
    }

    #[pyo3(signature = (tol = 1e-10))]
    fn assumptions<'py>(&self, py: Python<'py>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
        let r = validate_assumptions(&self.rates, &self.grid, tol);
        to_py(py, &json!({"all_passed": r.all_passed(), "report": r}))
    }

    /// Criteria and spectral abscissa for the zero steady state.
    fn zero_report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &zero_report(&self.tables, true).map_err(err)?)
    }

    #[pyo3(signature = (damping = 0.5, tol = 1e-10, max_iter = 10000, f0_scale = 0.05))]
    fn steady_state<'py>(
        &self,
        py: Python<'py>,
        damping: f64,
        tol: f64,
        max_iter: usize,
        f0_scale: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let opts = SolverOptions { damping, tol, max_iter, f0_scale, ..SolverOptions::default() };
        let r = py.detach(|| solve_fixed_point(&self.tables, &opts)).map_err(err)?;
        to_py(
            py,
            &json!({"summary": r.summary(), "f_star": r.f_star.values(), "p_star": r.p_star.values()}),
        )
    }

    /// Verdict at `p_star` (zero when omitted).
    #[pyo3(signature = (p_star = None))]
    fn check_steady<'py>(&self, py: Python<'py>, p_star: Option<Vec<f64>>) -> PyResult<Bound<'py, PyAny>> {
        let p = self.point(p_star)?;
        let t = self.bound(&p)?;
        to_py(py, &py.detach(|| nontrivial_verdict(&t, &p)).map_err(err)?)
    }

    /// `A_ij(λ)` and `K(λ)` at `p_star` with `c1` from the bound.
    #[pyo3(signature = (lam, p_star = None))]
    fn characteristic<'py>(&self, py: Python<'py>, lam: f64, p_star: Option<Vec<f64>>) -> PyResult<Bound<'py, PyAny>> {
        let p = self.point(p_star)?;
        let t = self.bound(&p)?;
        let coeffs = build_coefficients(&t, &p).map_err(err)?;
        let c1 = flocstab::criteria::c1_bound(&t, &p).map_err(err)?;
        to_py(py, &characteristic_function(lam, &t, &coeffs, c1).map_err(err)?)
    }

    #[pyo3(signature = (p_star = None))]
    fn spectrum<'py>(&self, py: Python<'py>, p_star: Option<Vec<f64>>) -> PyResult<Bound<'py, PyAny>> {
        let p = self.point(p_star)?;
        let t = self.bound(&p)?;
        let m = assemble_matrix(&build_coefficients(&t, &p).map_err(err)?, &t);
        to_py(py, &py.detach(|| spectral_abscissa(&m)).map_err(err)?)
    }

    /// Integrates from `p0`; `p_star` selects the Example 2 kernel.
    #[pyo3(signature = (p0, t_end = 1.0, cfl = 0.4, record_every = 10, p_star = None))]
    fn simulate<'py>(
        &self,
        py: Python<'py>,
        p0: Vec<f64>,
        t_end: f64,
        cfl: f64,
        record_every: usize,
        p_star: Option<Vec<f64>>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let t = self.bound(&self.point(p_star)?)?;
        let p0 = self.samples(p0)?;
        let opts = SimOptions { t_end, cfl, record_every, ..SimOptions::default() };
        let traj = py.detach(|| run(&p0, &t, &opts)).map_err(err)?;
        let last = traj.states.last().map(|s| s.values().to_vec()).unwrap_or_default();
        to_py(
            py,
            &json!({
                "times": traj.times,
                "diagnostics": traj.diagnostics,
                "final_state": last,
                "dt": traj.dt,
                "steps": traj.steps,
                "blow_up": traj.blow_up,
                "worst_negativity": traj.worst_negativity,
            }),
        )
    }

    /// Exponential rate of a small perturbation of `p_star`.
    #[pyo3(signature = (p_star = None, t_end = 5.0, epsilon = None))]
    fn perturbation<'py>(
        &self,
        py: Python<'py>,
        p_star: Option<Vec<f64>>,
        t_end: f64,
        epsilon: Option<f64>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let p = self.point(p_star)?;
        let t = self.bound(&p)?;
        let opts = SimOptions { t_end, ..SimOptions::default() };
        to_py(py, &py.detach(|| perturbation_experiment(&p, &t, epsilon, None, &opts)).map_err(err)?)
    }

    fn __repr__(&self) -> String {
        match &self.example2 {
            Some(e) => format!("Model.example2(a={}, b={}, c={}, d={}, n={})", e.a, e.b, e.c, e.d, self.grid.n_cells()),
            None => format!("Model(x1={}, n={})", self.grid.x1(), self.grid.n_cells()),
        }
    }
}

/// Example 2 stability-region sweep; returns the per-`a` summaries, the cell
/// area and one record per point.
#[pyfunction]
#[pyo3(signature = (a_values, b_values, c_values, d = 0.0, n = 100, jobs = 0))]
fn sweep<'py>(
    py: Python<'py>,
    a_values: Vec<f64>,
    b_values: Vec<f64>,
    c_values: Vec<f64>,
    d: f64,
    n: usize,
    jobs: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = SweepConfig { a_values, b_values, c_values, d, n_cells: n, jobs, ..SweepConfig::default() };
    to_py(py, &py.detach(|| run_sweep(&cfg)).map_err(err)?)
}

#[pymodule]
fn flocstab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}
