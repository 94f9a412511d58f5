//! Reaction terms of the model evaluated on tabulated rates. Shared by the
//! fixed-point map, the time integrator and the conservation diagnostics.

use crate::model::RateTables;
use crate::quadrature::{trap_weight, trapezoid};

/// Renewal inflow `∫ q p dx`.
pub fn renewal_inflow(t: &RateTables, p: &[f64]) -> f64 {
    let n = t.grid().n_cells();
    let qp: Vec<f64> = t.q().iter().zip(p).map(|(q, p)| q * p).collect();
    trapezoid(&qp, t.grid().h(), 0, n, |v| v)
}

/// `∫ₓ^{x1} Γ(x;y) kf(y) p(y) dy` at every node.
pub fn fragmentation_gain(t: &RateTables, p: &[f64]) -> Vec<f64> {
    let n = t.grid().n_cells();
    let h = t.grid().h();
    let gamma = t.gamma();
    let u: Vec<f64> = t.kf().iter().zip(p).map(|(k, p)| k * p).collect();
    let mut out = vec![0.0; n + 1];
    for j in 1..=n {
        if u[j] == 0.0 {
            continue;
        }
        let col = gamma.column(j);
        for (i, o) in out.iter_mut().enumerate().take(j + 1) {
            *o += trap_weight(j, i, n, h) * col[i] * u[j];
        }
    }
    out
}

/// `½ ∫₀^x ka(x−y,y) p(x−y) p(y) dy` at every node.
pub fn aggregation_gain(t: &RateTables, p: &[f64]) -> Vec<f64> {
    let n = t.grid().n_cells();
    let h = t.grid().h();
    let ka = t.ka();
    (0..=n)
        .map(|i| {
            let s: f64 = (0..=i)
                .map(|j| trap_weight(j, 0, i, h) * ka[(i - j, j)] * p[i - j] * p[j])
                .sum();
            0.5 * s
        })
        .collect()
}

/// `∫₀^{x1−x} ka(x,y) p(y) dy` at every node; the loss rate is this times `p(x)`.
pub fn aggregation_loss_rate(t: &RateTables, p: &[f64]) -> Vec<f64> {
    let n = t.grid().n_cells();
    let h = t.grid().h();
    let ka = t.ka();
    (0..=n)
        .map(|i| (0..=n - i).map(|j| trap_weight(j, 0, n - i, h) * ka[(i, j)] * p[j]).sum())
        .collect()
}

/// Everything except transport: removal, fragmentation loss and gain,
/// aggregation gain and loss.
pub fn sources(t: &RateTables, p: &[f64]) -> Vec<f64> {
    let frag = fragmentation_gain(t, p);
    let mut out: Vec<f64> = (0..p.len())
        .map(|i| -(t.mu()[i] + 0.5 * t.kf()[i]) * p[i] + frag[i])
        .collect();
    if t.has_aggregation() {
        let gain = aggregation_gain(t, p);
        let loss = aggregation_loss_rate(t, p);
        for i in 0..out.len() {
            out[i] += gain[i] - p[i] * loss[i];
        }
    }
    out
}
