//! Parameter sweeps: the Example 2 stability region over `(a, b, c)` and
//! the Example 1 zero-solution verdicts over `b`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::{nontrivial_verdict, zero_report, Verdict, ZeroSolutionReport};
use crate::error::{FlocError, Result};
use crate::model::{example1, Example2, Grid};
use crate::steady_state::{solve_fixed_point, SolverOptions};

/// `n` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub a_values: Vec<f64>,
    pub b_values: Vec<f64>,
    pub c_values: Vec<f64>,
    pub d: f64,
    pub n_cells: usize,
    pub solver: SolverOptions,
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            a_values: vec![0.5, 1.0, 2.0],
            b_values: linspace(0.0, 0.6, 20),
            c_values: linspace(0.0, 1.5, 20),
            d: 0.0,
            n_cells: 100,
            solver: SolverOptions::default(),
            jobs: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub index: usize,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub c1_holds: bool,
    pub c1_margin: f64,
    pub c2_holds: bool,
    pub c2_sup: f64,
    pub converged: bool,
    pub trivial: bool,
    pub sup_p_star: f64,
    pub verdict: Option<Verdict>,
    pub instability_integral: Option<f64>,
    pub k_0: Option<f64>,
    pub a12_0: Option<f64>,
    pub a21_0: Option<f64>,
    pub spectral_abscissa: Option<f64>,
    pub negative_root: Option<f64>,
    /// Both existence conditions hold and the verdict at the computed
    /// steady state is stable.
    pub feasible: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionSummary {
    pub a: f64,
    pub feasible_count: usize,
    pub area: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub records: Vec<SweepRecord>,
    pub summaries: Vec<RegionSummary>,
    /// Area attributed to one `(b, c)` grid point; a singleton axis counts as
    /// unit width.
    pub cell_area: f64,
}

fn spacing(v: &[f64]) -> f64 {
    if v.len() < 2 {
        1.0
    } else {
        (v[v.len() - 1] - v[0]).abs() / (v.len() - 1) as f64
    }
}

/// Existence check, steady-state solve on the first phase, kernel binding
/// and the full verdict at one parameter point.
pub fn sweep_point(index: usize, a: f64, b: f64, c: f64, d: f64, n_cells: usize, solver: &SolverOptions) -> SweepRecord {
    let mut rec = SweepRecord {
        index,
        a,
        b,
        c,
        c1_holds: false,
        c1_margin: f64::NAN,
        c2_holds: false,
        c2_sup: f64::NAN,
        converged: false,
        trivial: false,
        sup_p_star: f64::NAN,
        verdict: None,
        instability_integral: None,
        k_0: None,
        a12_0: None,
        a21_0: None,
        spectral_abscissa: None,
        negative_root: None,
        feasible: false,
        error: None,
    };
    if let Err(e) = fill(&mut rec, d, n_cells, solver) {
        rec.error = Some(e.to_string());
    }
    rec
}

fn fill(rec: &mut SweepRecord, d: f64, n_cells: usize, solver: &SolverOptions) -> Result<()> {
    let ex = Example2::new(rec.a, rec.b, rec.c, d)?;
    let phase1 = ex.phase1();
    let grid = Grid::new(phase1.domain(), n_cells)?;
    let tables = phase1.tabulate(&grid)?;
    let ss = solve_fixed_point(&tables, solver)?;
    let e = ss.existence;
    rec.c1_holds = e.c1_holds;
    rec.c1_margin = e.c1_margin;
    rec.c2_holds = e.c2_holds;
    rec.c2_sup = e.c2_sup;
    rec.converged = ss.converged;
    rec.trivial = ss.trivial;
    rec.sup_p_star = ss.p_star.sup_norm();
    if !ss.converged {
        return Ok(());
    }
    let bound = ex.bind(&ss.p_star)?.tabulate(&grid)?;
    let report = nontrivial_verdict(&bound, &ss.p_star)?;
    rec.verdict = Some(report.verdict);
    rec.instability_integral = Some(report.instability_integral);
    rec.k_0 = Some(report.k_0);
    rec.a12_0 = Some(report.a12_0);
    rec.a21_0 = Some(report.a21_0);
    rec.spectral_abscissa = Some(report.spectral_abscissa);
    rec.negative_root = report.negative_root;
    rec.feasible = e.c1_holds && e.c2_holds && report.verdict == Verdict::Stable;
    Ok(())
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| FlocError::InvalidParameter(format!("thread pool: {e}")))
}

fn check_axis(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return Err(FlocError::InvalidParameter(format!("{name} range must be nonempty and finite")));
    }
    Ok(())
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    check_axis("a", &cfg.a_values)?;
    check_axis("b", &cfg.b_values)?;
    check_axis("c", &cfg.c_values)?;
    let mut points = Vec::new();
    for &a in &cfg.a_values {
        for &b in &cfg.b_values {
            for &c in &cfg.c_values {
                points.push((points.len(), a, b, c));
            }
        }
    }
    let records: Vec<SweepRecord> = pool(cfg.jobs)?.install(|| {
        points
            .par_iter()
            .map(|&(k, a, b, c)| sweep_point(k, a, b, c, cfg.d, cfg.n_cells, &cfg.solver))
            .collect()
    });
    let cell_area = spacing(&cfg.b_values) * spacing(&cfg.c_values);
    let summaries = cfg
        .a_values
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            let per = cfg.b_values.len() * cfg.c_values.len();
            let count = records[k * per..(k + 1) * per].iter().filter(|r| r.feasible).count();
            RegionSummary { a, feasible_count: count, area: count as f64 * cell_area }
        })
        .collect();
    Ok(SweepResult { records, summaries, cell_area })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroSweepRecord {
    pub b: f64,
    pub report: ZeroSolutionReport,
}

/// Zero-solution criteria and spectral abscissa for Example 1 at each `b`.
pub fn run_zero_sweep(b_values: &[f64], n_cells: usize, jobs: usize) -> Result<Vec<ZeroSweepRecord>> {
    check_axis("b", b_values)?;
    pool(jobs)?.install(|| {
        b_values
            .par_iter()
            .map(|&b| {
                let rates = example1(b)?;
                let t = rates.tabulate(&Grid::new(rates.domain(), n_cells)?)?;
                Ok(ZeroSweepRecord { b, report: zero_report(&t, true)? })
            })
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_endpoints() {
        assert_eq!(linspace(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
        assert_eq!(linspace(2.0, 5.0, 1), vec![2.0]);
        assert!(linspace(0.0, 1.0, 0).is_empty());
    }

    #[test]
    fn singleton_sweep() {
        let cfg = SweepConfig {
            a_values: vec![0.5],
            b_values: vec![0.05],
            c_values: vec![0.1],
            n_cells: 32,
            ..Default::default()
        };
        let r = run_sweep(&cfg).unwrap();
        assert_eq!(r.records.len(), 1);
        assert_eq!(r.cell_area, 1.0);
        assert!(r.records[0].converged);
    }

    #[test]
    fn zero_b_row_is_infeasible() {
        let cfg = SweepConfig {
            a_values: vec![1.0],
            b_values: vec![0.0],
            c_values: linspace(0.0, 1.0, 4),
            n_cells: 32,
            ..Default::default()
        };
        let r = run_sweep(&cfg).unwrap();
        assert!(r.records.iter().all(|x| !x.c1_holds && !x.feasible));
        assert_eq!(r.summaries[0].feasible_count, 0);
        assert_eq!(r.summaries[0].area, 0.0);
    }

    #[test]
    fn empty_axis_rejected() {
        let cfg = SweepConfig { a_values: vec![], ..Default::default() };
        assert!(run_sweep(&cfg).is_err());
    }

    #[test]
    fn invalid_point_is_recorded_not_dropped() {
        let cfg = SweepConfig {
            a_values: vec![-1.0],
            b_values: vec![0.1],
            c_values: vec![0.1],
            n_cells: 16,
            ..Default::default()
        };
        let r = run_sweep(&cfg).unwrap();
        assert!(r.records[0].error.is_some());
    }
}
