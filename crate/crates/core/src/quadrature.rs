//! Quadrature on the uniform grid and log-space integrating factors.

use serde::{Deserialize, Serialize};

use crate::error::{FlocError, Result};
use crate::model::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    Trapezoid,
    Simpson,
}

/// Values at the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    grid: Grid,
    values: Vec<f64>,
}

impl Samples {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(FlocError::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.n_nodes()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.n_nodes()).map(|i| f(grid.node(i))).collect();
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { values: vec![0.0; grid.n_nodes()], grid }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Piecewise-linear interpolant, clamped to the grid's interval.
    pub fn interpolate(&self, x: f64) -> f64 {
        let h = self.grid.h();
        let n = self.grid.n_cells();
        let s = (x / h).clamp(0.0, n as f64);
        let k = (s.floor() as usize).min(n - 1);
        let t = s - k as f64;
        (1.0 - t) * self.values[k] + t * self.values[k + 1]
    }

    /// Uniform norm.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Trapezoid L1 norm.
    pub fn l1_norm(&self) -> f64 {
        trapezoid(&self.values, self.grid.h(), 0, self.grid.n_cells(), |v| v.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Weight of node `k` in the trapezoid rule over nodes `lo..=hi`.
#[inline]
pub(crate) fn trap_weight(k: usize, lo: usize, hi: usize, h: f64) -> f64 {
    if hi == lo {
        0.0
    } else if k == lo || k == hi {
        0.5 * h
    } else {
        h
    }
}

/// Trapezoid sum of `f(values[k])` over nodes `lo..=hi`.
pub(crate) fn trapezoid(values: &[f64], h: f64, lo: usize, hi: usize, f: impl Fn(f64) -> f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let inner: f64 = values[lo + 1..hi].iter().map(|&v| f(v)).sum();
    h * (inner + 0.5 * (f(values[lo]) + f(values[hi])))
}

pub fn integrate(s: &Samples, rule: Rule) -> Result<f64> {
    let n = s.grid.n_cells();
    let h = s.grid.h();
    let v = &s.values;
    match rule {
        Rule::Trapezoid => Ok(trapezoid(v, h, 0, n, |x| x)),
        Rule::Simpson => {
            if n % 2 != 0 {
                return Err(FlocError::OddCellCount(n));
            }
            let mut sum = v[0] + v[n];
            for (k, &x) in v.iter().enumerate().take(n).skip(1) {
                sum += if k % 2 == 1 { 4.0 * x } else { 2.0 * x };
            }
            Ok(sum * h / 3.0)
        }
    }
}

/// Running trapezoid integral from 0.
pub fn cumulative_integral(s: &Samples) -> Samples {
    let h = s.grid.h();
    let mut out = Vec::with_capacity(s.values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in s.values.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]);
        out.push(acc);
    }
    Samples { grid: s.grid, values: out }
}

/// `logT(x) = ∫₀^x (λ + A)/g`. `T` itself is never formed.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegratingFactor {
    pub lambda: f64,
    pub log_t: Samples,
}

pub fn integrating_factor(lambda: f64, a: &Samples, g: &Samples) -> Result<IntegratingFactor> {
    a.grid.ensure_same(&g.grid, "integrating factor")?;
    if let Some((node, &value)) = g.values.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Err(FlocError::NonpositiveGrowth { node, value });
    }
    let rate = Samples {
        grid: a.grid,
        values: a.values.iter().zip(&g.values).map(|(a, g)| (lambda + a) / g).collect(),
    };
    Ok(IntegratingFactor { lambda, log_t: cumulative_integral(&rate) })
}

/// `∫₀¹ (1-t) e^{-Δt} dt` and `∫₀¹ t e^{-Δt} dt`, each multiplied by
/// `e^{-La}`, where `Δ = Lb - La`.
fn fitted_weights(la: f64, lb: f64) -> (f64, f64) {
    let d = lb - la;
    if d.abs() < 0.5 {
        // (−Δ)^m / (m+1)! and (−Δ)^m / (m! (m+2))
        let mut term = 1.0;
        let mut p0 = 0.0;
        let mut p1 = 0.0;
        for m in 0..24 {
            let mf = m as f64;
            p0 += term / (mf + 1.0);
            p1 += term / (mf + 2.0);
            term *= -d / (mf + 1.0);
        }
        let ea = (-la).exp();
        (ea * (p0 - p1), ea * p1)
    } else {
        let ea = (-la).exp();
        let eb = (-lb).exp();
        let w0 = (ea - eb) / d;
        let w1 = (ea - (1.0 + d) * eb) / (d * d);
        (w0 - w1, w1)
    }
}

impl IntegratingFactor {
    /// `∫₀^{x1} φ(x) e^{-logT(x)} dx`, exact for `φ` and `logT` piecewise
    /// linear between nodes.
    pub fn decay_integral(&self, phi: &[f64]) -> f64 {
        let l = &self.log_t.values;
        let h = self.log_t.grid.h();
        let mut sum = 0.0;
        for k in 0..l.len() - 1 {
            let (wa, wb) = fitted_weights(l[k], l[k + 1]);
            let (a, b) = (phi[k], phi[k + 1]);
            // keep 0·inf out of the sum
            if a != 0.0 {
                sum += h * a * wa;
            }
            if b != 0.0 {
                sum += h * b * wb;
            }
        }
        sum
    }

    /// `I(x_i) = ∫₀^{x_i} e^{logT(s) - logT(x_i)} ds` at every node.
    pub fn memory(&self) -> Vec<f64> {
        let l = &self.log_t.values;
        let h = self.log_t.grid.h();
        let mut out = Vec::with_capacity(l.len());
        out.push(0.0);
        let mut acc = 0.0;
        for k in 1..l.len() {
            let d = l[k] - l[k - 1];
            let decay = (-d).exp();
            // h ∫₀¹ e^{-Δ(1-t)} dt
            let cell = if d.abs() < 1e-12 { h * (1.0 - 0.5 * d) } else { -h * (-d).exp_m1() / d };
            acc = if acc == 0.0 { cell } else { decay * acc + cell };
            out.push(acc);
        }
        out
    }
}

/// `∫₀^{x_i} kernel(x_i - y, y) f(x_i - y) f(y) dy` by trapezoid on the nodes.
pub fn convolution_integral(f: &Samples, kernel: impl Fn(f64, f64) -> f64, x_index: usize) -> f64 {
    let h = f.grid.h();
    let v = &f.values;
    (0..=x_index)
        .map(|j| {
            let w = trap_weight(j, 0, x_index, h);
            if w == 0.0 {
                0.0
            } else {
                w * kernel(f.grid.node(x_index - j), f.grid.node(j)) * v[x_index - j] * v[j]
            }
        })
        .sum()
}
