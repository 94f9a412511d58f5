//! The JSON run configuration and its resolution into rate tables.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use flocstab::model::{constant_kernel_with_cutoff, example1, Example2, Grid, RateSet, RateTables, SizeDomain};
use flocstab::simulator::{Scheme, SimOptions};
use flocstab::steady_state::SolverOptions;
use flocstab::sweep::linspace;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const MIN_GRID: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    /// `example1` or `example2`; exclusive with `custom`.
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub custom: Option<CustomTables>,
    /// Extra aggregation on top of a preset without its own kernel.
    #[serde(default)]
    pub aggregation: Option<AggregationSpec>,
    /// Number of grid cells.
    #[serde(default)]
    pub grid: Option<usize>,
    #[serde(default)]
    pub solver: SolverOptions,
    /// Initial scales for the multi-start steady-state solve.
    #[serde(default = "default_starts")]
    pub starts: Vec<f64>,
    #[serde(default)]
    pub simulation: SimulationSpec,
    #[serde(default)]
    pub perturbation: Option<PerturbationSpec>,
    #[serde(default)]
    pub sweep: SweepSpec,
    /// Steady state to use instead of solving, as written by `steady`.
    #[serde(default)]
    pub pstar_csv: Option<PathBuf>,
    /// Also write the full spectrum of the discretized linearization.
    #[serde(default)]
    pub spectrum_csv: bool,
    /// Values of λ at which to tabulate the characteristic function.
    #[serde(default)]
    pub k_trace: Option<Vec<f64>>,
}

fn default_starts() -> Vec<f64> {
    vec![0.05, 0.2]
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            preset: Some("example2".into()),
            params: [("a", 0.5), ("b", 0.05), ("c", 0.1), ("d", 0.0)]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            custom: None,
            aggregation: None,
            grid: None,
            solver: SolverOptions::default(),
            starts: default_starts(),
            simulation: SimulationSpec::default(),
            perturbation: None,
            sweep: SweepSpec::default(),
            pstar_csv: None,
            spectrum_csv: false,
            k_trace: None,
        }
    }
}

/// Rate tables sampled on the nodes `x_i = i x1 / n`, `i = 0..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomTables {
    pub x1: f64,
    pub g: Vec<f64>,
    pub mu: Vec<f64>,
    pub q: Vec<f64>,
    pub kf: Vec<f64>,
    /// `ka[i][j] = ka(x_i, x_j)`; zero when absent.
    #[serde(default)]
    pub ka: Option<Vec<Vec<f64>>>,
    /// `gamma[i][j] = Γ(x_i; x_j)`; uniform daughters when absent.
    #[serde(default)]
    pub gamma: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
pub enum AggregationSpec {
    /// `ka ≡ k0` on `x + y < x1`.
    Constant(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Initial {
    #[default]
    Bump,
    Zero,
    /// The steady state plus `amplitude` times the bump.
    Steady,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSpec {
    pub t_end: f64,
    pub cfl: f64,
    pub record_every: usize,
    pub max_dt: f64,
    pub blowup_ceiling: f64,
    pub initial: Initial,
    /// L1 norm of the bump.
    pub amplitude: f64,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        let o = SimOptions::default();
        Self {
            t_end: o.t_end,
            cfl: o.cfl,
            record_every: o.record_every,
            max_dt: o.max_dt,
            blowup_ceiling: o.blowup_ceiling,
            initial: Initial::Bump,
            amplitude: 1.0,
        }
    }
}

impl SimulationSpec {
    pub fn options(&self) -> SimOptions {
        SimOptions {
            t_end: self.t_end,
            cfl: self.cfl,
            record_every: self.record_every,
            scheme: Scheme::Upwind1,
            blowup_ceiling: self.blowup_ceiling,
            max_dt: self.max_dt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbationSpec {
    /// Defaults to `1e-3 ‖p*‖₁`, or `1e-3` at the zero state.
    pub epsilon: Option<f64>,
    pub t_end: f64,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        Self { epsilon: None, t_end: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub a_values: Vec<f64>,
    pub b_values: Vec<f64>,
    pub c_values: Vec<f64>,
    pub d: f64,
    /// Values of `b` for the Example 1 zero-solution sweep.
    pub example1_b_values: Vec<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        let s = flocstab::sweep::SweepConfig::default();
        Self {
            a_values: s.a_values,
            b_values: s.b_values,
            c_values: s.c_values,
            d: s.d,
            example1_b_values: linspace(0.0, 3.0, 31),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    Example1 { b: f64 },
    Example2(Example2),
    Custom,
}

/// A configuration resolved against the command line.
#[derive(Debug, Clone)]
pub struct Problem {
    pub kind: ModelKind,
    pub grid: Grid,
    /// Tables the steady-state solver runs on. For Example 2 this is the
    /// first phase without aggregation.
    pub tables: RateTables,
}

impl Problem {
    /// Tables for the dynamics at `p_star`; only Example 2 depends on it.
    pub fn bound_tables(&self, p_star: &flocstab::Samples) -> flocstab::Result<RateTables> {
        match self.kind {
            ModelKind::Example2(ex) => ex.bind(p_star)?.tabulate(&self.grid),
            _ => Ok(self.tables.clone()),
        }
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub fn load(path: Option<&Path>) -> Result<RunConfig, CliError> {
    let cfg: RunConfig = match path {
        None => RunConfig::default(),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| config_err(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", p.display())))?
        }
    };
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(config_err(format!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            cfg.schema_version
        )));
    }
    Ok(cfg)
}

fn finite_nonempty(name: &str, v: &[f64]) -> Result<(), CliError> {
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return Err(config_err(format!("{name} must be a nonempty list of finite numbers")));
    }
    Ok(())
}

fn take_params(params: &BTreeMap<String, f64>, allowed: &[(&str, Option<f64>)]) -> Result<Vec<f64>, CliError> {
    if let Some(k) = params.keys().find(|k| !allowed.iter().any(|(a, _)| a == k)) {
        return Err(config_err(format!("unknown parameter `{k}`")));
    }
    allowed
        .iter()
        .map(|&(name, default)| {
            params.get(name).copied().or(default).ok_or_else(|| config_err(format!("missing parameter `{name}`")))
        })
        .collect()
}

fn matrix(name: &str, rows: &[Vec<f64>], m: usize) -> Result<DMatrix<f64>, CliError> {
    if rows.len() != m || rows.iter().any(|r| r.len() != m) {
        return Err(config_err(format!("custom.{name} must be a {m}x{m} matrix")));
    }
    Ok(DMatrix::from_fn(m, m, |i, j| rows[i][j]))
}

fn custom_tables(c: &CustomTables, n_override: Option<usize>) -> Result<RateTables, CliError> {
    let m = c.g.len();
    if m < MIN_GRID + 1 {
        return Err(config_err(format!("custom tables need at least {} nodes", MIN_GRID + 1)));
    }
    if let Some(n) = n_override.filter(|&n| n + 1 != m) {
        return Err(config_err(format!("grid {n} does not match the {m} custom table nodes")));
    }
    let grid = Grid::new(SizeDomain::new(c.x1).map_err(|e| config_err(e.to_string()))?, m - 1)
        .map_err(|e| config_err(e.to_string()))?;
    let ka = match &c.ka {
        Some(rows) => matrix("ka", rows, m)?,
        None => DMatrix::zeros(m, m),
    };
    let gamma = match &c.gamma {
        Some(rows) => matrix("gamma", rows, m)?,
        None => DMatrix::from_fn(m, m, |i, j| if j > 0 && i <= j { 1.0 / grid.node(j) } else { 0.0 }),
    };
    RateTables::from_values(grid, c.g.clone(), c.mu.clone(), c.q.clone(), c.kf.clone(), ka, gamma)
        .map_err(|e| config_err(format!("custom tables: {e}")))
}

/// Builds the rate tables and checks every range the commands may use.
pub fn resolve(cfg: &RunConfig, grid_override: Option<usize>) -> Result<Problem, CliError> {
    finite_nonempty("starts", &cfg.starts)?;
    if cfg.starts.iter().any(|s| *s <= 0.0) {
        return Err(config_err("starts must be positive"));
    }
    finite_nonempty("sweep.a_values", &cfg.sweep.a_values)?;
    finite_nonempty("sweep.b_values", &cfg.sweep.b_values)?;
    finite_nonempty("sweep.c_values", &cfg.sweep.c_values)?;
    finite_nonempty("sweep.example1_b_values", &cfg.sweep.example1_b_values)?;
    if let Some(l) = &cfg.k_trace {
        finite_nonempty("k_trace", l)?;
    }
    let n = grid_override.or(cfg.grid);
    if let Some(n) = n.filter(|&n| n < MIN_GRID) {
        return Err(config_err(format!("grid must be at least {MIN_GRID}, got {n}")));
    }
    let err = |e: flocstab::FlocError| config_err(e.to_string());
    let with_aggregation = |rates: RateSet| match cfg.aggregation {
        Some(AggregationSpec::Constant(k0)) => {
            let x1 = rates.domain().x1();
            rates.with_aggregation(constant_kernel_with_cutoff(k0, x1))
        }
        None => rates,
    };
    match (&cfg.preset, &cfg.custom) {
        (Some(_), Some(_)) => Err(config_err("`preset` and `custom` are exclusive")),
        (None, None) => Err(config_err("one of `preset` or `custom` is required")),
        (None, Some(c)) => {
            if !cfg.params.is_empty() || cfg.aggregation.is_some() {
                return Err(config_err("`params` and `aggregation` apply to presets only"));
            }
            let tables = custom_tables(c, n)?;
            Ok(Problem { kind: ModelKind::Custom, grid: *tables.grid(), tables })
        }
        (Some(name), None) => {
            let n = n.unwrap_or(100);
            let (kind, rates) = match name.as_str() {
                "example1" => {
                    let p = take_params(&cfg.params, &[("b", None)])?;
                    (ModelKind::Example1 { b: p[0] }, with_aggregation(example1(p[0]).map_err(err)?))
                }
                "example2" => {
                    if cfg.aggregation.is_some() {
                        return Err(config_err("example2 carries its own aggregation kernel"));
                    }
                    let p = take_params(&cfg.params, &[("a", None), ("b", None), ("c", None), ("d", Some(0.0))])?;
                    let ex = Example2::new(p[0], p[1], p[2], p[3]).map_err(err)?;
                    (ModelKind::Example2(ex), ex.phase1())
                }
                other => return Err(config_err(format!("unknown preset `{other}`"))),
            };
            let grid = Grid::new(rates.domain(), n).map_err(err)?;
            let tables = rates.tabulate(&grid).map_err(err)?;
            Ok(Problem { kind, grid, tables })
        }
    }
}
