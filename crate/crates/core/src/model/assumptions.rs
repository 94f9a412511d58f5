use serde::Serialize;

use super::grid::{Grid, SizeDomain};
use super::rates::RateSet;
use crate::error::{FlocError, Result};
use crate::quadrature::{integrate, Rule, Samples};

/// Outcome of one sampled check. `worst_violation` is zero when nothing
/// exceeded the tolerance; `x`/`y` locate the worst sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub passed: bool,
    pub worst_violation: f64,
    pub x: Option<f64>,
    pub y: Option<f64>,
}

impl CheckOutcome {
    pub(crate) fn new() -> Self {
        Self { passed: true, worst_violation: 0.0, x: None, y: None }
    }

    pub(crate) fn record(&mut self, violation: f64, x: f64, y: Option<f64>) {
        if violation > self.worst_violation || (self.x.is_none() && violation > 0.0) {
            self.worst_violation = violation;
            self.x = Some(x);
            self.y = y;
        }
    }

    /// Marks a failure even when the violation magnitude is zero, as for
    /// `g = 0` where strict positivity fails without a negative value.
    fn fail_at(&mut self, violation: f64, x: f64, y: Option<f64>) {
        if self.passed || violation > self.worst_violation {
            self.worst_violation = self.worst_violation.max(violation);
            self.x = Some(x);
            self.y = y;
        }
        self.passed = false;
    }

    pub(crate) fn finish(mut self, tol: f64) -> Self {
        if self.worst_violation > tol {
            self.passed = false;
        }
        self
    }
}

/// Pointwise audit of the standing assumptions on the grid nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    /// `g > 0`.
    pub a1_growth: CheckOutcome,
    /// `ka >= 0`, symmetric, zero for `x + y >= x1`.
    pub a2_aggregation: CheckOutcome,
    /// `mu >= 0`.
    pub a3_removal: CheckOutcome,
    /// `q >= 0`.
    pub a4_renewal: CheckOutcome,
    /// `kf >= 0`, `kf(0) = 0`.
    pub a5_fragmentation: CheckOutcome,
    /// `gamma(x; y) >= 0` for `x <= y`, zero for `x > y`.
    pub a6_daughters: CheckOutcome,
    /// Integral of `gamma(.; y)` equals one.
    pub normalization: CheckOutcome,
    /// First moment of `gamma(.; y)` equals `y/2`, which makes fragmentation
    /// conserve mass. Reported separately and not part of [`Self::all_passed`].
    pub first_moment: CheckOutcome,
    pub warnings: Vec<String>,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        [
            &self.a1_growth,
            &self.a2_aggregation,
            &self.a3_removal,
            &self.a4_renewal,
            &self.a5_fragmentation,
            &self.a6_daughters,
            &self.normalization,
        ]
        .iter()
        .all(|c| c.passed)
    }
}

pub fn validate_assumptions(rates: &RateSet, grid: &Grid, tol: f64) -> AssumptionReport {
    let nodes = grid.nodes();
    let n = grid.n_cells();
    let x1 = grid.x1();

    let mut a1 = CheckOutcome::new();
    for &x in &nodes {
        let g = rates.g(x);
        if !(g > 0.0) {
            a1.fail_at(if g.is_nan() { f64::INFINITY } else { -g }, x, None);
        }
    }

    let nonneg = |f: &dyn Fn(f64) -> f64| {
        let mut c = CheckOutcome::new();
        for &x in &nodes {
            let v = f(x);
            c.record(if v.is_nan() { f64::INFINITY } else { -v }, x, None);
        }
        c
    };
    let a3 = nonneg(&|x| rates.mu(x)).finish(tol);
    let a4 = nonneg(&|x| rates.q(x)).finish(tol);
    let mut a5 = nonneg(&|x| rates.kf(x));
    a5.record(rates.kf(0.0).abs(), 0.0, None);
    let a5 = a5.finish(tol);

    let mut a2 = CheckOutcome::new();
    let mut a6 = CheckOutcome::new();
    for (i, &x) in nodes.iter().enumerate() {
        for (j, &y) in nodes.iter().enumerate() {
            let k = rates.ka(x, y);
            let mut v = (k - rates.ka(y, x)).abs().max(-k);
            if i + j >= n {
                v = v.max(k.abs());
            }
            a2.record(if v.is_nan() { f64::INFINITY } else { v }, x, Some(y));
            if j > 0 {
                let gm = rates.gamma(x, y);
                let v = if i > j { gm.abs() } else { -gm };
                a6.record(if v.is_nan() { f64::INFINITY } else { v }, x, Some(y));
            }
        }
    }

    let mut norm = CheckOutcome::new();
    let mut moment = CheckOutcome::new();
    for &y in &nodes[1..] {
        match parent_integrals(rates, y, n) {
            Ok((total, first)) => {
                norm.record((total - 1.0).abs(), y, None);
                moment.record((first - 0.5 * y).abs(), y, None);
            }
            Err(_) => {
                norm.record(f64::INFINITY, y, None);
                moment.record(f64::INFINITY, y, None);
            }
        }
    }

    let mut warnings = Vec::new();
    let delta = 1e-9 * x1;
    if nodes[1..n].iter().any(|&x| rates.ka(x, x1 - x - delta).abs() > 1e-6) {
        warnings.push(format!(
            "aggregation kernel is discontinuous at x + y = {x1}; admitted with a sharp cutoff"
        ));
    }
    if nodes[1..].iter().any(|&y| (rates.gamma(y - delta, y) - rates.gamma(y + delta, y)).abs() > 1e-6) {
        warnings.push("daughter density is discontinuous at x = y; admitted".into());
    }

    AssumptionReport {
        a1_growth: a1,
        a2_aggregation: a2.finish(tol),
        a3_removal: a3,
        a4_renewal: a4,
        a5_fragmentation: a5,
        a6_daughters: a6.finish(tol),
        normalization: norm.finish(tol),
        first_moment: moment.finish(tol),
        warnings,
    }
}

/// Trapezoid values of `∫₀^y Γ(x;y) dx` and `∫₀^y x Γ(x;y) dx` on `n` cells.
fn parent_integrals(rates: &RateSet, y: f64, n: usize) -> Result<(f64, f64)> {
    let sub = Grid::new(SizeDomain::new(y)?, n)?;
    let total = Samples::from_fn(sub, |x| rates.gamma(x, y));
    let first = Samples::from_fn(sub, |x| x * rates.gamma(x, y));
    Ok((integrate(&total, Rule::Trapezoid)?, integrate(&first, Rule::Trapezoid)?))
}

/// `∫₀^y x Γ(x;y) dx` by trapezoid on as many cells as `grid` has.
pub fn gamma_first_moment(rates: &RateSet, y: f64, grid: &Grid) -> Result<f64> {
    if !(y > 0.0 && y <= grid.x1()) {
        return Err(FlocError::Domain(format!("parent size {y} not in (0, {}]", grid.x1())));
    }
    Ok(parent_integrals(rates, y, grid.n_cells())?.1)
}
