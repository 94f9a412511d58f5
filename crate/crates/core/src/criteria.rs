//! Stability and instability criteria for the zero and the nontrivial
//! steady states, the characteristic function `K(λ)` and its negative root.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{FlocError, Result};
use crate::linearization::{
    assemble_matrix, build_coefficients, check_positivity, spectral_abscissa, LinearizedCoefficients,
    PositivityCheck,
};
use crate::model::RateTables;
use crate::quadrature::{integrating_factor, trap_weight, trapezoid, Samples};
use crate::steady_state::DensityField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Stable,
    Unstable,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeroSolutionReport {
    pub instability_integral: f64,
    pub instability_triggered: bool,
    pub stability_margin: f64,
    pub stability_triggered: bool,
    pub verdict: Verdict,
    /// Largest real part of the discretized linearization at zero.
    pub spectral_abscissa: Option<f64>,
}

fn g_samples(t: &RateTables) -> Samples {
    Samples::new(*t.grid(), t.g().to_vec()).expect("table length")
}

fn over_g(t: &RateTables, v: &[f64]) -> Vec<f64> {
    v.iter().zip(t.g()).map(|(v, g)| v / g).collect()
}

/// `∫ (q/g) exp(−∫₀^x (μ + kf/2)/g) dx`.
pub fn zero_instability_criterion(t: &RateTables) -> f64 {
    let a: Vec<f64> = t.mu().iter().zip(t.kf()).map(|(m, k)| m + 0.5 * k).collect();
    let a = Samples::new(*t.grid(), a).expect("table length");
    let factor = integrating_factor(0.0, &a, &g_samples(t)).expect("tables have positive g");
    factor.decay_integral(&over_g(t, t.q()))
}

/// `max (q + kf/2 − μ)` over the nodes; negative means stable.
pub fn zero_stability_criterion(t: &RateTables) -> f64 {
    (0..t.g().len()).map(|i| t.q()[i] + 0.5 * t.kf()[i] - t.mu()[i]).fold(f64::NEG_INFINITY, f64::max)
}

/// Both zero-solution criteria and, when asked, the spectral abscissa of the
/// discretized linearization at zero.
pub fn zero_report(t: &RateTables, with_spectrum: bool) -> Result<ZeroSolutionReport> {
    let instability_integral = zero_instability_criterion(t);
    let stability_margin = zero_stability_criterion(t);
    let instability_triggered = instability_integral > 1.0;
    let stability_triggered = stability_margin < 0.0;
    let verdict = if instability_triggered {
        Verdict::Unstable
    } else if stability_triggered {
        Verdict::Stable
    } else {
        Verdict::Inconclusive
    };
    let spectral_abscissa = if with_spectrum {
        let m = crate::linearization::OperatorMatrix { matrix: zero_solution_matrix(t) };
        Some(spectral_abscissa(&m)?.abscissa)
    } else {
        None
    };
    Ok(ZeroSolutionReport {
        instability_integral,
        instability_triggered,
        stability_margin,
        stability_triggered,
        verdict,
        spectral_abscissa,
    })
}

/// Linearization at `p ≡ 0` assembled directly from the rate tables, without
/// going through [`build_coefficients`]. Aggregation drops out entirely.
pub fn zero_solution_matrix(t: &RateTables) -> DMatrix<f64> {
    let grid = t.grid();
    let n = grid.n_cells();
    let h = grid.h();
    let (g, q, kf, mu) = (t.g(), t.q(), t.kf(), t.mu());
    DMatrix::from_fn(n + 1, n + 1, |i, k| {
        let mut v = 0.0;
        if i == 0 {
            v += q[k] * if k == 0 || k == n { 0.5 } else { 1.0 };
        }
        if k == i {
            v -= g[i] / h + mu[i] + 0.5 * kf[i];
        }
        if i > 0 && k + 1 == i {
            v += g[k] / h;
        }
        if k >= i {
            v += trap_weight(k, i, n, h) * t.gamma()[(i, k)] * kf[k];
        }
        v
    })
}

/// `∫ (q/g) exp(−∫₀^x (μ + kf/2 + ∫₀^{x1−s} ka(s,y) p*(y) dy)/g ds) dx`.
pub fn nontrivial_instability_criterion(t: &RateTables, p_star: &DensityField) -> Result<f64> {
    p_star.grid().ensure_same(t.grid(), "nontrivial_instability_criterion")?;
    let grid = *t.grid();
    let n = grid.n_cells();
    let h = grid.h();
    let p = p_star.values();
    let a: Vec<f64> = (0..=n)
        .map(|s| {
            let row: Vec<f64> = (0..=n - s).map(|y| t.ka()[(s, y)] * p[y]).collect();
            t.mu()[s] + 0.5 * t.kf()[s] + trapezoid(&row, h, 0, n - s, |v| v)
        })
        .collect();
    let factor = integrating_factor(0.0, &Samples::new(grid, a)?, &g_samples(t))?;
    Ok(factor.decay_integral(&over_g(t, t.q())))
}

/// `c1 = max E + max Γ kf`, the second maximum over parents `y > 0`.
pub fn c1_bound(t: &RateTables, p_star: &DensityField) -> Result<f64> {
    p_star.grid().ensure_same(t.grid(), "c1_bound")?;
    let m = t.g().len();
    let p = p_star.values();
    let mut agg: f64 = 0.0;
    let mut frag: f64 = 0.0;
    for j in 0..m {
        for i in 0..m {
            agg = agg.max(t.ka()[(i, j)] * p[i]);
            if j > 0 && i <= j {
                frag = frag.max(t.gamma()[(i, j)] * t.kf()[j]);
            }
        }
    }
    Ok(agg + frag)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharacteristicEvaluation {
    pub lambda: f64,
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
    /// `A11 A22 − (1 − A12)(1 − A21)`.
    pub k: f64,
}

fn mul0(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

pub fn characteristic_function(
    lambda: f64,
    t: &RateTables,
    c: &LinearizedCoefficients,
    c1: f64,
) -> Result<CharacteristicEvaluation> {
    c.a.grid().ensure_same(t.grid(), "characteristic_function")?;
    if !(c1 >= 0.0) {
        return Err(FlocError::InvalidParameter(format!("c1 must be nonnegative, got {c1}")));
    }
    let grid = t.grid();
    let n = grid.n_cells();
    let factor = integrating_factor(lambda, &c.a, &g_samples(t))?;
    let inv_g: Vec<f64> = t.g().iter().map(|g| 1.0 / g).collect();
    let q_g = over_g(t, t.q());
    let a11 = factor.decay_integral(&inv_g);
    let a21 = factor.decay_integral(&q_g);
    let mem = factor.memory();
    let i_g: Vec<f64> = mem.iter().zip(&inv_g).map(|(m, w)| mul0(*m, *w)).collect();
    let iq_g: Vec<f64> = mem.iter().zip(&q_g).map(|(m, w)| mul0(*m, *w)).collect();
    let a12 = mul0(c1, trapezoid(&i_g, grid.h(), 0, n, |v| v));
    let a22 = mul0(c1, trapezoid(&iq_g, grid.h(), 0, n, |v| v));
    let k = mul0(a11, a22) - mul0(1.0 - a12, 1.0 - a21);
    Ok(CharacteristicEvaluation { lambda, a11, a12, a21, a22, k })
}

/// `K` at each requested `λ`.
pub fn characteristic_trace(
    t: &RateTables,
    c: &LinearizedCoefficients,
    c1: f64,
    lambdas: &[f64],
) -> Result<Vec<CharacteristicEvaluation>> {
    lambdas.iter().map(|&l| characteristic_function(l, t, c, c1)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RootOptions {
    /// `|K(λ0)|` must fall below this.
    pub tol: f64,
    /// Number of times the left end of the bracket may be doubled.
    pub max_doublings: usize,
    /// Samples of `K` per bracket when looking for a sign change.
    pub scan_points: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_doublings: 40, scan_points: 64 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NegativeRoot {
    pub lambda0: f64,
    pub k_at_root: f64,
    /// `K(λ0 ∓ δ)` with `δ = 1e-4 |λ0|`; opposite signs certify the crossing.
    pub k_left: f64,
    pub k_right: f64,
}

impl NegativeRoot {
    pub fn sign_change_verified(&self) -> bool {
        self.k_left * self.k_right < 0.0
    }
}

/// Rightmost sign change of `K` on `[λ_lo, 0]`, refined by bisection. The
/// bracket starts at `λ_lo = −10 (max A + max g)` and doubles leftward.
pub fn find_negative_root(
    t: &RateTables,
    c: &LinearizedCoefficients,
    c1: f64,
    opts: &RootOptions,
) -> Result<NegativeRoot> {
    let kf = |l: f64| characteristic_function(l, t, c, c1).map(|e| e.k);
    let amax = c.a.values().iter().copied().fold(0.0, f64::max);
    let gmax = t.g().iter().copied().fold(0.0, f64::max);
    let mut lo = -10.0 * (amax + gmax);
    let m = opts.scan_points.max(2);
    let k0 = kf(0.0)?;
    for _ in 0..=opts.max_doublings {
        let mut right = (0.0, k0);
        let mut bracket = None;
        for s in 1..=m {
            let l = lo * s as f64 / m as f64;
            let k = kf(l)?;
            if !k.is_finite() {
                break;
            }
            if right.1.is_finite() && (k == 0.0 || k.signum() != right.1.signum()) {
                bracket = Some(((l, k), right));
                break;
            }
            right = (l, k);
        }
        if let Some(((mut a, ka), (mut b, _))) = bracket {
            let mut best = (a, ka);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                let km = kf(mid)?;
                if km.abs() < best.1.abs() {
                    best = (mid, km);
                }
                if km.abs() < opts.tol || mid == a || mid == b {
                    break;
                }
                if km.signum() == ka.signum() {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            let (l0, k_at) = best;
            if k_at.abs() >= opts.tol {
                return Err(FlocError::BracketExhausted { lambda_lo: lo });
            }
            let d = 1e-4 * l0.abs();
            return Ok(NegativeRoot { lambda0: l0, k_at_root: k_at, k_left: kf(l0 - d)?, k_right: kf(l0 + d)? });
        }
        if !kf(lo)?.is_finite() {
            break;
        }
        lo *= 2.0;
    }
    Err(FlocError::BracketExhausted { lambda_lo: lo })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NontrivialReport {
    pub instability_integral: f64,
    pub instability_triggered: bool,
    pub c1: f64,
    pub a12_0: f64,
    pub a21_0: f64,
    pub k_0: f64,
    pub stability_triggered: bool,
    pub positivity_ok: bool,
    pub positivity: PositivityCheck,
    pub verdict: Verdict,
    pub spectral_abscissa: f64,
    /// Negative real root of `K`, searched only when the stability
    /// inequalities hold.
    pub negative_root: Option<f64>,
}

/// Evaluates all criteria at `p_star`. Stability requires `K(0) < 0`,
/// `A12(0) < 1`, `A21(0) < 1` and both positivity conditions; instability
/// requires the integral above one and both positivity conditions.
pub fn nontrivial_verdict(t: &RateTables, p_star: &DensityField) -> Result<NontrivialReport> {
    let c = build_coefficients(t, p_star)?;
    let positivity = check_positivity(&c, t);
    let positivity_ok = positivity.ok();
    let c1 = c1_bound(t, p_star)?;
    let instability_integral = nontrivial_instability_criterion(t, p_star)?;
    let ev = characteristic_function(0.0, t, &c, c1)?;
    let inequalities = ev.k < 0.0 && ev.a12 < 1.0 && ev.a21 < 1.0;
    let stability_triggered = inequalities && positivity_ok;
    let instability_triggered = instability_integral > 1.0 && positivity_ok;
    let verdict = if instability_triggered {
        Verdict::Unstable
    } else if stability_triggered {
        Verdict::Stable
    } else {
        Verdict::Inconclusive
    };
    let spectrum = spectral_abscissa(&assemble_matrix(&c, t))?;
    let negative_root = if stability_triggered {
        find_negative_root(t, &c, c1, &RootOptions::default()).ok().map(|r| r.lambda0)
    } else {
        None
    };
    Ok(NontrivialReport {
        instability_integral,
        instability_triggered,
        c1,
        a12_0: ev.a12,
        a21_0: ev.a21,
        k_0: ev.k,
        stability_triggered,
        positivity_ok,
        positivity,
        verdict,
        spectral_abscissa: spectrum.abscissa,
        negative_root,
    })
}
