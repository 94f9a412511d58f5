//! The fixed-point map Φ, the existence conditions and a damped Picard
//! solver for steady states.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FlocError, Result};
use crate::kinetics::{renewal_inflow, sources};
use crate::model::RateTables;
use crate::quadrature::{trap_weight, Samples};
use crate::simulator::rhs;

/// A density `p` or the auxiliary `f = g p` on the grid.
pub type DensityField = Samples;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExistenceCheck {
    pub c1_holds: bool,
    /// `min (q + kf/2 − μ)` over the nodes.
    pub c1_margin: f64,
    pub c2_holds: bool,
    /// `max` over the nodes of the second condition's left-hand side.
    pub c2_sup: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Initial iterate is `f0_scale · max(q/g)`, or `f0_scale` when `q ≡ 0`.
    pub f0_scale: f64,
    pub divergence_ceiling: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { damping: 0.5, tol: 1e-10, max_iter: 10_000, f0_scale: 0.05, divergence_ceiling: 1e8 }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(FlocError::InvalidParameter(what.to_string()));
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad("damping must lie in (0, 1]");
        }
        if !(self.tol > 0.0) {
            return bad("tolerance must be positive");
        }
        if !(self.f0_scale >= 0.0 && self.f0_scale.is_finite()) {
            return bad("f0_scale must be nonnegative");
        }
        if !(self.divergence_ceiling > 0.0) {
            return bad("divergence ceiling must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateResult {
    pub f_star: DensityField,
    pub p_star: DensityField,
    /// `‖f − Φ[f]‖_u` at the returned iterate.
    pub phi_residual: f64,
    /// Trapezoid L1 norm of the time integrator's right-hand side at `p_star`.
    pub f_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Converged to (numerically) the zero field.
    pub trivial: bool,
    pub diverged: bool,
    /// Converged but still clamping more than 1e-8 of mass per sweep.
    pub suspect: bool,
    /// Clamped mass in the last sweep and summed over all sweeps.
    pub last_clamp: f64,
    pub total_clamp: f64,
    pub existence: ExistenceCheck,
}

/// Scalar part of a [`SteadyStateResult`], for reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyStateSummary {
    pub phi_residual: f64,
    pub f_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trivial: bool,
    pub diverged: bool,
    pub suspect: bool,
    pub last_clamp: f64,
    pub total_clamp: f64,
    pub sup_f_star: f64,
    pub l1_p_star: f64,
    pub existence: ExistenceCheck,
}

impl SteadyStateResult {
    pub fn summary(&self) -> SteadyStateSummary {
        SteadyStateSummary {
            phi_residual: self.phi_residual,
            f_residual: self.f_residual,
            iterations: self.iterations,
            converged: self.converged,
            trivial: self.trivial,
            diverged: self.diverged,
            suspect: self.suspect,
            last_clamp: self.last_clamp,
            total_clamp: self.total_clamp,
            sup_f_star: self.f_star.sup_norm(),
            l1_p_star: self.p_star.l1_norm(),
            existence: self.existence,
        }
    }
}

fn phi_values(t: &RateTables, f: &[f64]) -> Vec<f64> {
    let p: Vec<f64> = f.iter().zip(t.g()).map(|(f, g)| f / g).collect();
    let r = sources(t, &p);
    let h = t.grid().h();
    let mut out = Vec::with_capacity(f.len());
    let mut acc = renewal_inflow(t, &p);
    out.push(acc);
    for w in r.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// `Φ[f](x) = ∫ (q/g) f + ∫₀^x R(f/g)` where `R` collects removal,
/// fragmentation and aggregation; every integral is a trapezoid sum.
pub fn phi_apply(f: &DensityField, t: &RateTables) -> Result<DensityField> {
    f.grid().ensure_same(t.grid(), "phi_apply")?;
    Samples::new(*t.grid(), phi_values(t, f.values()))
}

pub fn check_existence(t: &RateTables) -> ExistenceCheck {
    let grid = t.grid();
    let n = grid.n_cells();
    let h = grid.h();
    let (g, q, kf, mu) = (t.g(), t.q(), t.kf(), t.mu());
    let margin: Vec<f64> = (0..=n).map(|i| q[i] + 0.5 * kf[i] - mu[i]).collect();
    let c1_margin = margin.iter().copied().fold(f64::INFINITY, f64::min);

    // cum[(i, j)] = ∫₀^{x_i} Γ(z; y_j) dz
    let gamma = t.gamma();
    let mut cum = vec![vec![0.0; n + 1]; n + 1];
    for j in 0..=n {
        for i in 1..=n {
            cum[i][j] = cum[i - 1][j] + 0.5 * h * (gamma[(i - 1, j)] + gamma[(i, j)]);
        }
    }
    let mut c2_sup = f64::NEG_INFINITY;
    let mut lower = 0.0;
    for i in 0..=n {
        if i > 0 {
            lower += 0.5 * h * (margin[i - 1] / g[i - 1] + margin[i] / g[i]);
        }
        let upper: f64 = (i..=n)
            .map(|j| trap_weight(j, i, n, h) * (kf[j] * cum[i][j] + q[j]) / g[j])
            .sum();
        c2_sup = c2_sup.max(upper + lower);
    }
    ExistenceCheck { c1_holds: c1_margin > 0.0, c1_margin, c2_holds: c2_sup <= 1.0, c2_sup }
}

/// Damped Picard iteration `f ← max(0, (1−ω) f + ω Φ[f])` from a constant
/// initial iterate.
pub fn solve_fixed_point(t: &RateTables, opts: &SolverOptions) -> Result<SteadyStateResult> {
    opts.validate()?;
    let grid = *t.grid();
    let h = grid.h();
    let scale = t.q().iter().zip(t.g()).map(|(q, g)| q / g).fold(0.0, f64::max);
    let f0 = opts.f0_scale * if scale > 0.0 { scale } else { 1.0 };
    let mut f = vec![f0; grid.n_nodes()];
    let w = opts.damping;

    let mut phi_residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    let mut diverged = false;
    let mut last_clamp = 0.0;
    let mut total_clamp = 0.0;
    while iterations < opts.max_iter {
        let phi = phi_values(t, &f);
        phi_residual = f.iter().zip(&phi).fold(0.0, |m, (a, b)| m.max((a - b).abs()));
        if !phi_residual.is_finite() {
            diverged = true;
            break;
        }
        if phi_residual < opts.tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut clamp = 0.0;
        for (k, (fk, pk)) in f.iter_mut().zip(&phi).enumerate() {
            let v = (1.0 - w) * *fk + w * pk;
            if v < 0.0 {
                clamp -= trap_weight(k, 0, grid.n_cells(), h) * v;
                *fk = 0.0;
            } else {
                *fk = v;
            }
        }
        last_clamp = clamp;
        total_clamp += clamp;
        if f.iter().any(|v| *v > opts.divergence_ceiling) {
            diverged = true;
            phi_residual = f64::INFINITY;
            break;
        }
    }

    let p: Vec<f64> = f.iter().zip(t.g()).map(|(f, g)| f / g).collect();
    let f_star = Samples::new(grid, f)?;
    let p_star = Samples::new(grid, p)?;
    let f_residual = if p_star.is_finite() { rhs(&p_star, t)?.l1_norm() } else { f64::INFINITY };
    Ok(SteadyStateResult {
        trivial: converged && f_star.sup_norm() < 10.0 * opts.tol,
        suspect: converged && last_clamp > 1e-8,
        f_star,
        p_star,
        phi_residual,
        f_residual,
        iterations,
        converged,
        diverged,
        last_clamp,
        total_clamp,
        existence: check_existence(t),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiStartResult {
    /// One result per requested `f0_scale`, in input order.
    pub runs: Vec<SteadyStateResult>,
    /// Indices into `runs` of pairwise distinct converged fixed points.
    pub distinct: Vec<usize>,
}

/// Runs the solver from several initial scales concurrently. Two fixed points
/// are distinct when their uniform distance exceeds `100 · tol`.
pub fn solve_multi_start(t: &RateTables, opts: &SolverOptions, scales: &[f64]) -> Result<MultiStartResult> {
    let runs = scales
        .par_iter()
        .map(|&s| solve_fixed_point(t, &SolverOptions { f0_scale: s, ..*opts }))
        .collect::<Result<Vec<_>>>()?;
    let mut distinct: Vec<usize> = Vec::new();
    for (k, r) in runs.iter().enumerate() {
        if !r.converged {
            continue;
        }
        let new = distinct.iter().all(|&d| {
            let other = runs[d].f_star.values();
            let dist = r.f_star.values().iter().zip(other).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            dist > 100.0 * opts.tol
        });
        if new {
            distinct.push(k);
        }
    }
    Ok(MultiStartResult { runs, distinct })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{example1, scalar, Example2, Grid, RateSet, SizeDomain};

    fn tables(rates: &RateSet, n: usize) -> RateTables {
        rates.tabulate(&Grid::new(rates.domain(), n).unwrap()).unwrap()
    }

    fn simple(q0: f64, mu0: f64, x1: f64) -> RateSet {
        RateSet::new(
            SizeDomain::new(x1).unwrap(),
            scalar(|_| 1.0),
            scalar(move |_| mu0),
            scalar(move |_| q0),
            scalar(|_| 0.0),
        )
    }

    #[test]
    fn phi_of_zero_is_zero() {
        let t = tables(&example1(2.0).unwrap(), 30);
        let z = phi_apply(&Samples::zeros(*t.grid()), &t).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn phi_hand_example() {
        let t = tables(&simple(0.7, 0.3, 2.0), 16);
        let one = Samples::from_fn(*t.grid(), |_| 1.0);
        let phi = phi_apply(&one, &t).unwrap();
        for (v, x) in phi.values().iter().zip(t.grid().nodes()) {
            assert!((v - (0.7 * 2.0 - 0.3 * x)).abs() < 1e-13);
        }
    }

    #[test]
    fn phi_grid_mismatch() {
        let t = tables(&example1(2.0).unwrap(), 30);
        let other = Grid::new(SizeDomain::new(1.0).unwrap(), 31).unwrap();
        assert!(phi_apply(&Samples::zeros(other), &t).is_err());
    }

    #[test]
    fn existence_examples() {
        let ex = Example2::new(0.5, 0.05, 0.1, 0.0).unwrap();
        let e = check_existence(&tables(&ex.phase1(), 100));
        assert!(e.c1_holds);
        assert!((e.c1_margin - 0.05).abs() < 1e-15);

        let e = check_existence(&tables(&simple(0.0, 1.0, 1.0), 10));
        assert!(!e.c1_holds);
        assert_eq!(e.c1_margin, -1.0);
    }

    #[test]
    fn c2_hand_example() {
        // g ≡ 1, q ≡ q0, kf ≡ 0, μ ≡ 0: C2(x) = q0 (x1 − x) + q0 x = q0 x1
        let t = tables(&simple(0.2, 0.0, 3.0), 12);
        let e = check_existence(&t);
        assert!((e.c2_sup - 0.6).abs() < 1e-14);
        assert!(e.c2_holds);
    }

    #[test]
    fn contraction_to_zero_is_flagged_trivial() {
        let t = tables(&simple(0.0, 1.0, 1.0), 40);
        let r = solve_fixed_point(&t, &SolverOptions::default()).unwrap();
        assert!(r.converged && r.trivial && !r.diverged);
        assert!(r.phi_residual < 1e-10);
        assert!(r.f_residual < 1e-8);
    }

    #[test]
    fn bad_options_are_rejected() {
        let t = tables(&simple(0.0, 1.0, 1.0), 8);
        let o = SolverOptions { damping: 0.0, ..Default::default() };
        assert!(solve_fixed_point(&t, &o).is_err());
        let o = SolverOptions { tol: -1.0, ..Default::default() };
        assert!(solve_fixed_point(&t, &o).is_err());
    }

    #[test]
    fn runaway_growth_is_reported_as_divergence() {
        // renewal far above removal and no aggregation: Φ is expanding
        let t = tables(&simple(5.0, 0.0, 1.0), 20);
        let r = solve_fixed_point(&t, &SolverOptions::default()).unwrap();
        assert!(r.diverged && !r.converged && !r.trivial);
    }

    #[test]
    fn multi_start_collapses_identical_fixed_points() {
        let t = tables(&simple(0.0, 1.0, 1.0), 20);
        let m = solve_multi_start(&t, &SolverOptions::default(), &[0.05, 0.2, 1.0]).unwrap();
        assert_eq!(m.runs.len(), 3);
        assert_eq!(m.distinct, vec![0]);
    }
}
