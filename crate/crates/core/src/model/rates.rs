use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::grid::{Grid, SizeDomain};
use crate::error::{FlocError, Result};

pub type ScalarRate = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type PairRate = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

pub fn scalar(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> ScalarRate {
    Arc::new(f)
}

pub fn pair(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> PairRate {
    Arc::new(f)
}

/// Daughter density `1/y` on `[0, y]`.
pub fn uniform_daughters() -> PairRate {
    pair(|x, y| if y > 0.0 && x <= y { 1.0 / y } else { 0.0 })
}

pub fn zero_kernel() -> PairRate {
    pair(|_, _| 0.0)
}

/// `k0` for `x + y < x1`, zero beyond. The comparison carries a relative
/// slack so that node pairs summing to `x1` fall on the zero side.
pub fn constant_kernel_with_cutoff(k0: f64, x1: f64) -> PairRate {
    let edge = x1 * (1.0 - 1e-12);
    pair(move |x, y| if x + y < edge { k0 } else { 0.0 })
}

/// Growth `g`, removal `mu`, renewal `q`, fragmentation `kf`, aggregation
/// `ka(x, y)` and daughter density `gamma(x; y)` on `[0, x1]`.
#[derive(Clone)]
pub struct RateSet {
    domain: SizeDomain,
    g: ScalarRate,
    mu: ScalarRate,
    q: ScalarRate,
    kf: ScalarRate,
    ka: PairRate,
    gamma: PairRate,
}

impl fmt::Debug for RateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RateSet").field("x1", &self.domain.x1()).finish_non_exhaustive()
    }
}

impl RateSet {
    /// Rates without aggregation and with uniform daughters.
    pub fn new(
        domain: SizeDomain,
        g: ScalarRate,
        mu: ScalarRate,
        q: ScalarRate,
        kf: ScalarRate,
    ) -> Self {
        Self { domain, g, mu, q, kf, ka: zero_kernel(), gamma: uniform_daughters() }
    }

    pub fn with_aggregation(mut self, ka: PairRate) -> Self {
        self.ka = ka;
        self
    }

    pub fn with_daughters(mut self, gamma: PairRate) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn domain(&self) -> SizeDomain {
        self.domain
    }

    pub fn g(&self, x: f64) -> f64 {
        (self.g)(x)
    }

    pub fn mu(&self, x: f64) -> f64 {
        (self.mu)(x)
    }

    pub fn q(&self, x: f64) -> f64 {
        (self.q)(x)
    }

    pub fn kf(&self, x: f64) -> f64 {
        (self.kf)(x)
    }

    pub fn ka(&self, x: f64, y: f64) -> f64 {
        (self.ka)(x, y)
    }

    pub fn gamma(&self, x: f64, y: f64) -> f64 {
        (self.gamma)(x, y)
    }

    /// Samples every rate on the grid nodes.
    ///
    /// The aggregation table is zeroed for node pairs with `i + j >= n` and
    /// the daughter table for `i > j` or `j = 0`, so the discrete supports are
    /// exact regardless of rounding in the node coordinates.
    pub fn tabulate(&self, grid: &Grid) -> Result<RateTables> {
        self.domain_matches(grid)?;
        let nodes = grid.nodes();
        let sample = |f: &ScalarRate| nodes.iter().map(|&x| f(x)).collect::<Vec<_>>();
        let m = nodes.len();
        let ka = DMatrix::from_fn(m, m, |i, j| (self.ka)(nodes[i], nodes[j]));
        let gamma = DMatrix::from_fn(m, m, |i, j| (self.gamma)(nodes[i], nodes[j]));
        RateTables::from_values(
            *grid,
            sample(&self.g),
            sample(&self.mu),
            sample(&self.q),
            sample(&self.kf),
            ka,
            gamma,
        )
    }

    pub(crate) fn domain_matches(&self, grid: &Grid) -> Result<()> {
        if grid.domain() == self.domain {
            Ok(())
        } else {
            Err(FlocError::GridMismatch(format!(
                "grid covers [0, {}] but rates are defined on [0, {}]",
                grid.x1(),
                self.domain.x1()
            )))
        }
    }
}

/// Rates sampled on a grid. This is what every numerical module consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTables {
    grid: Grid,
    g: Vec<f64>,
    mu: Vec<f64>,
    q: Vec<f64>,
    kf: Vec<f64>,
    ka: DMatrix<f64>,
    gamma: DMatrix<f64>,
}

impl RateTables {
    pub fn from_values(
        grid: Grid,
        g: Vec<f64>,
        mu: Vec<f64>,
        q: Vec<f64>,
        kf: Vec<f64>,
        mut ka: DMatrix<f64>,
        mut gamma: DMatrix<f64>,
    ) -> Result<Self> {
        let m = grid.n_nodes();
        for (name, v) in [("g", &g), ("mu", &mu), ("q", &q), ("kf", &kf)] {
            if v.len() != m {
                return Err(FlocError::GridMismatch(format!(
                    "{name} has {} samples for {m} nodes",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(FlocError::NonFinite(format!("rate table {name}")));
            }
        }
        for (name, t) in [("ka", &ka), ("gamma", &gamma)] {
            if t.nrows() != m || t.ncols() != m {
                return Err(FlocError::GridMismatch(format!(
                    "{name} is {}x{} for {m} nodes",
                    t.nrows(),
                    t.ncols()
                )));
            }
        }
        if let Some((node, &value)) = g.iter().enumerate().find(|(_, &v)| v <= 0.0) {
            return Err(FlocError::NonpositiveGrowth { node, value });
        }
        let n = grid.n_cells();
        for j in 0..m {
            for i in 0..m {
                if i + j >= n {
                    ka[(i, j)] = 0.0;
                }
                if i > j || j == 0 {
                    gamma[(i, j)] = 0.0;
                }
            }
        }
        if ka.iter().chain(gamma.iter()).any(|x| !x.is_finite()) {
            return Err(FlocError::NonFinite("kernel table".into()));
        }
        Ok(Self { grid, g, mu, q, kf, ka, gamma })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn kf(&self) -> &[f64] {
        &self.kf
    }

    /// `ka[(i, j)] = ka(x_i, x_j)`.
    pub fn ka(&self) -> &DMatrix<f64> {
        &self.ka
    }

    /// `gamma[(i, j)] = gamma(x_i; x_j)`, daughter `i`, parent `j`.
    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn has_aggregation(&self) -> bool {
        self.ka.iter().any(|&v| v != 0.0)
    }

    /// Same rates with a different aggregation table.
    pub fn with_ka(&self, ka: DMatrix<f64>) -> Result<Self> {
        Self::from_values(
            self.grid,
            self.g.clone(),
            self.mu.clone(),
            self.q.clone(),
            self.kf.clone(),
            ka,
            self.gamma.clone(),
        )
    }
}
