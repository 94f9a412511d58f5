//! Method-of-lines time integration of the full nonlinear model, with
//! number and mass budgets and perturbation experiments.
//!
//! Every node, including `x = 0`, is an upwind cell. The flux entering the
//! first cell is the renewal inflow `∫ q p dx`, so the boundary condition is
//! imposed through the flux rather than by overwriting `p(0)`.

use serde::{Deserialize, Serialize};

use crate::error::{FlocError, Result};
use crate::kinetics::{renewal_inflow, sources};
use crate::model::RateTables;
use crate::quadrature::{trapezoid, Samples};
use crate::steady_state::DensityField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[default]
    Upwind1,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimOptions {
    pub t_end: f64,
    pub cfl: f64,
    /// Steps between recorded states.
    pub record_every: usize,
    pub scheme: Scheme,
    /// The run stops once the total number exceeds this.
    pub blowup_ceiling: f64,
    /// Upper bound on the step, so that records stay closely spaced when the
    /// transport and reaction bounds are both loose.
    pub max_dt: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { t_end: 1.0, cfl: 0.4, record_every: 10, scheme: Scheme::Upwind1, blowup_ceiling: 1e12, max_dt: 0.01 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    pub t: f64,
    /// `N = ∫ p dx`.
    pub number: f64,
    /// `M = ∫ x p dx`.
    pub mass: f64,
    /// Flux through `x = 0`: mean of the renewal inflow and `g(0) p(0)`.
    pub influx: f64,
    /// Flux through `x = x1`: mean of the last two nodal fluxes.
    pub outflux: f64,
    pub number_balance_residual: f64,
    pub mass_balance_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityField>,
    pub diagnostics: Vec<Diagnostics>,
    pub dt: f64,
    pub steps: usize,
    pub blow_up: bool,
    /// Largest `max(0, −min p) / max p` over the recorded states.
    pub worst_negativity: f64,
}

/// Semi-discrete right-hand side at every node.
pub fn rhs(p: &DensityField, t: &RateTables) -> Result<DensityField> {
    p.grid().ensure_same(t.grid(), "rhs")?;
    Samples::new(*t.grid(), rhs_values(t, p.values()))
}

pub(crate) fn rhs_values(t: &RateTables, p: &[f64]) -> Vec<f64> {
    let h = t.grid().h();
    let g = t.g();
    let mut r = sources(t, p);
    r[0] -= (g[0] * p[0] - renewal_inflow(t, p)) / h;
    for i in 1..r.len() {
        r[i] -= (g[i] * p[i] - g[i - 1] * p[i - 1]) / h;
    }
    r
}

/// `cfl · min(h / max g, 1 / L)` with `L` a bound on the reaction rates at
/// the initial state.
pub fn time_step(t: &RateTables, p0: &[f64], cfl: f64) -> f64 {
    let grid = t.grid();
    let n = grid.n_cells();
    let gmax = t.g().iter().copied().fold(0.0, f64::max);
    let decay = (0..=n).map(|i| t.mu()[i] + 0.5 * t.kf()[i]).fold(0.0, f64::max);
    let mut frag: f64 = 0.0;
    let mut kamax: f64 = 0.0;
    for j in 0..=n {
        for i in 0..=n {
            frag = frag.max(t.gamma()[(i, j)] * t.kf()[j]);
            kamax = kamax.max(t.ka()[(i, j)]);
        }
    }
    let mass = trapezoid(p0, grid.h(), 0, n, |v| v.abs());
    let rate = decay + frag * grid.x1() + 2.0 * kamax * mass;
    let transport = grid.h() / gmax;
    cfl * if rate > 0.0 { transport.min(1.0 / rate) } else { transport }
}

struct Budget {
    number: f64,
    mass: f64,
    influx: f64,
    outflux: f64,
    number_rate: f64,
    mass_rate: f64,
}

fn budget(t: &RateTables, p: &[f64]) -> Budget {
    let grid = t.grid();
    let n = grid.n_cells();
    let h = grid.h();
    let x = grid.nodes();
    let g = t.g();
    let f: Vec<f64> = p.iter().zip(g).map(|(p, g)| p * g).collect();
    let trap = |v: &[f64]| trapezoid(v, h, 0, n, |s| s);
    let prod = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(a, b)| a * b).collect::<Vec<_>>();

    let number = trap(p);
    let xp = prod(&x, p);
    let mass = trap(&xp);
    let influx = 0.5 * (renewal_inflow(t, p) + f[0]);
    let outflux = 0.5 * (f[n - 1] + f[n]);

    let mup = prod(t.mu(), p);
    let kfp = prod(t.kf(), p);
    let loss = crate::kinetics::aggregation_loss_rate(t, p);
    let agg = trap(&prod(&loss, p));
    let number_rate = influx - outflux - trap(&mup) + 0.5 * trap(&kfp) - 0.5 * agg;

    // first moment of the daughter density on the grid, minus y/2
    let gamma = t.gamma();
    let excess: Vec<f64> = (0..=n)
        .map(|j| {
            let col: Vec<f64> = (0..=j).map(|i| x[i] * gamma[(i, j)]).collect();
            trapezoid(&col, h, 0, j, |s| s) - 0.5 * x[j]
        })
        .collect();
    let mass_rate =
        trap(&f) - grid.x1() * outflux - trap(&prod(&x, &mup)) + trap(&prod(&kfp, &excess));
    Budget { number, mass, influx, outflux, number_rate, mass_rate }
}

fn derivative(ts: &[f64], ys: &[f64], k: usize) -> f64 {
    let m = ts.len();
    match (k, m) {
        (_, 0 | 1) => f64::NAN,
        (_, 2) => (ys[1] - ys[0]) / (ts[1] - ts[0]),
        (0, _) => {
            let (h1, h2) = (ts[1] - ts[0], ts[2] - ts[1]);
            // one-sided three-point
            -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * ys[0] + (h1 + h2) / (h1 * h2) * ys[1]
                - h1 / (h2 * (h1 + h2)) * ys[2]
        }
        (k, m) if k == m - 1 => {
            let (h1, h2) = (ts[k - 1] - ts[k - 2], ts[k] - ts[k - 1]);
            h2 / (h1 * (h1 + h2)) * ys[k - 2] - (h1 + h2) / (h1 * h2) * ys[k - 1]
                + (2.0 * h2 + h1) / (h2 * (h1 + h2)) * ys[k]
        }
        (k, _) => {
            let (h1, h2) = (ts[k] - ts[k - 1], ts[k + 1] - ts[k]);
            -h2 / (h1 * (h1 + h2)) * ys[k - 1] + (h2 - h1) / (h1 * h2) * ys[k]
                + h1 / (h2 * (h1 + h2)) * ys[k + 1]
        }
    }
}

/// Classical four-stage explicit integration from `p0` to `opts.t_end`.
pub fn run(p0: &DensityField, t: &RateTables, opts: &SimOptions) -> Result<Trajectory> {
    p0.grid().ensure_same(t.grid(), "run")?;
    if !(opts.t_end > 0.0 && opts.t_end.is_finite()) {
        return Err(FlocError::InvalidParameter("t_end must be positive".into()));
    }
    if !(opts.cfl > 0.0 && opts.cfl < 1.0) {
        return Err(FlocError::InvalidParameter("cfl must lie in (0, 1)".into()));
    }
    if !(opts.max_dt > 0.0) {
        return Err(FlocError::InvalidParameter("max_dt must be positive".into()));
    }
    if opts.record_every == 0 {
        return Err(FlocError::InvalidParameter("record_every must be positive".into()));
    }
    if !p0.is_finite() {
        return Err(FlocError::NonFinite("initial state".into()));
    }
    let grid = *t.grid();
    let k = opts.record_every;
    let dt_max = time_step(t, p0.values(), opts.cfl).min(opts.max_dt);
    let blocks = ((opts.t_end / dt_max) / k as f64).ceil().max(1.0) as usize;
    let steps = blocks * k;
    let dt = opts.t_end / steps as f64;

    let m = grid.n_nodes();
    let mut p = p0.values().to_vec();
    let mut stage = vec![0.0; m];
    let mut times = vec![0.0];
    let mut states = vec![p0.clone()];
    let mut blow_up = false;
    let mut taken = 0;
    for step in 1..=steps {
        let k1 = rhs_values(t, &p);
        for i in 0..m {
            stage[i] = p[i] + 0.5 * dt * k1[i];
        }
        let k2 = rhs_values(t, &stage);
        for i in 0..m {
            stage[i] = p[i] + 0.5 * dt * k2[i];
        }
        let k3 = rhs_values(t, &stage);
        for i in 0..m {
            stage[i] = p[i] + dt * k3[i];
        }
        let k4 = rhs_values(t, &stage);
        for i in 0..m {
            p[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        taken = step;
        let number = trapezoid(&p, grid.h(), 0, grid.n_cells(), |v| v);
        let exploded = !number.is_finite() || number.abs() > opts.blowup_ceiling;
        if step % k == 0 || exploded {
            if p.iter().all(|v| v.is_finite()) {
                times.push(step as f64 * dt);
                states.push(Samples::new(grid, p.clone())?);
            }
            if exploded {
                blow_up = true;
                break;
            }
        }
    }

    let budgets: Vec<Budget> = states.iter().map(|s| budget(t, s.values())).collect();
    let ns: Vec<f64> = budgets.iter().map(|b| b.number).collect();
    let ms: Vec<f64> = budgets.iter().map(|b| b.mass).collect();
    let diagnostics = budgets
        .iter()
        .enumerate()
        .map(|(r, b)| Diagnostics {
            t: times[r],
            number: b.number,
            mass: b.mass,
            influx: b.influx,
            outflux: b.outflux,
            number_balance_residual: (derivative(&times, &ns, r) - b.number_rate).abs(),
            mass_balance_residual: (derivative(&times, &ms, r) - b.mass_rate).abs(),
        })
        .collect();
    let worst_negativity = states
        .iter()
        .map(|s| {
            let v = s.values();
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(0.0, f64::max);
            if lo < 0.0 {
                -lo / hi.max(f64::MIN_POSITIVE)
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max);
    Ok(Trajectory { times, states, diagnostics, dt, steps: taken, blow_up, worst_negativity })
}

/// `sin(π x / x1)` scaled to unit trapezoid L1 norm.
pub fn default_shape(grid: &crate::model::Grid) -> DensityField {
    let x1 = grid.x1();
    let s = Samples::from_fn(*grid, |x| (std::f64::consts::PI * x / x1).sin());
    let norm = s.l1_norm();
    Samples::from_fn(*grid, |x| (std::f64::consts::PI * x / x1).sin() / norm)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub epsilon: f64,
    pub times: Vec<f64>,
    /// `‖p(t) − p*‖₁` at each record.
    pub norms: Vec<f64>,
    /// Least-squares slope of `ln ‖p(t) − p*‖₁` over the records after the
    /// first 20%. Zero when the fit is degenerate.
    pub rate: f64,
    pub r_squared: f64,
    pub degenerate: bool,
    pub blow_up: bool,
}

/// Runs from `p* + ε · shape` and fits the exponential rate of the deviation.
/// `epsilon` defaults to `1e-3 ‖p*‖₁` (or `1e-3` for `p* ≡ 0`), `shape` to
/// [`default_shape`].
pub fn perturbation_experiment(
    p_star: &DensityField,
    t: &RateTables,
    epsilon: Option<f64>,
    shape: Option<&DensityField>,
    opts: &SimOptions,
) -> Result<DecayFit> {
    p_star.grid().ensure_same(t.grid(), "perturbation_experiment")?;
    let grid = *t.grid();
    let shape = match shape {
        Some(s) => {
            s.grid().ensure_same(&grid, "perturbation shape")?;
            if (s.l1_norm() - 1.0).abs() > 1e-9 {
                return Err(FlocError::InvalidParameter("perturbation shape must have unit L1 norm".into()));
            }
            s.clone()
        }
        None => default_shape(&grid),
    };
    let norm = p_star.l1_norm();
    let epsilon = epsilon.unwrap_or(if norm > 0.0 { 1e-3 * norm } else { 1e-3 });
    let p0: Vec<f64> =
        p_star.values().iter().zip(shape.values()).map(|(p, s)| p + epsilon * s).collect();
    let traj = run(&Samples::new(grid, p0)?, t, opts)?;
    let norms: Vec<f64> = traj
        .states
        .iter()
        .map(|s| {
            let d: Vec<f64> = s.values().iter().zip(p_star.values()).map(|(a, b)| a - b).collect();
            trapezoid(&d, grid.h(), 0, grid.n_cells(), |v| v.abs())
        })
        .collect();

    let start = (0.2 * norms.len() as f64).ceil() as usize;
    let window: Vec<(f64, f64)> = traj.times[start..]
        .iter()
        .zip(&norms[start..])
        .map(|(&t, &n)| (t, n))
        .collect();
    let usable = epsilon != 0.0 && window.len() >= 3 && window.iter().all(|(_, n)| *n > 0.0 && n.is_finite());
    let (rate, r_squared) = if usable { log_linear_fit(&window) } else { (0.0, 0.0) };
    Ok(DecayFit {
        epsilon,
        times: traj.times,
        norms,
        rate,
        r_squared,
        degenerate: !usable,
        blow_up: traj.blow_up,
    })
}

fn log_linear_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let m = points.len() as f64;
    let (st, sy) = points.iter().fold((0.0, 0.0), |(a, b), (t, n)| (a + t, b + n.ln()));
    let (mt, my) = (st / m, sy / m);
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for (t, n) in points {
        let (dt, dy) = (t - mt, n.ln() - my);
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    let slope = sty / stt;
    let r2 = if syy > 0.0 { sty * sty / (stt * syy) } else { 1.0 };
    (slope, r2)
}
