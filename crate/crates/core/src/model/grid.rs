use serde::{Deserialize, Serialize};

use crate::error::{FlocError, Result};

/// The size interval `[0, x1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeDomain {
    x1: f64,
}

impl SizeDomain {
    pub fn new(x1: f64) -> Result<Self> {
        if !(x1.is_finite() && x1 > 0.0) {
            return Err(FlocError::InvalidParameter(format!(
                "maximal size must be positive and finite, got {x1}"
            )));
        }
        Ok(Self { x1 })
    }

    pub fn x1(&self) -> f64 {
        self.x1
    }
}

/// Uniform grid with `n_cells + 1` nodes on `[0, x1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    domain: SizeDomain,
    n_cells: usize,
}

impl Grid {
    pub fn new(domain: SizeDomain, n_cells: usize) -> Result<Self> {
        if n_cells == 0 {
            return Err(FlocError::InvalidParameter("grid needs at least one cell".into()));
        }
        Ok(Self { domain, n_cells })
    }

    pub fn domain(&self) -> SizeDomain {
        self.domain
    }

    pub fn x1(&self) -> f64 {
        self.domain.x1
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    pub fn h(&self) -> f64 {
        self.domain.x1 / self.n_cells as f64
    }

    /// Node `i`; the last node is exactly `x1`.
    pub fn node(&self, i: usize) -> f64 {
        self.domain.x1 * (i as f64 / self.n_cells as f64)
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_nodes()).map(|i| self.node(i)).collect()
    }

    pub(crate) fn ensure_same(&self, other: &Grid, what: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(FlocError::GridMismatch(format!(
                "{what}: {} cells on [0, {}] vs {} cells on [0, {}]",
                self.n_cells,
                self.x1(),
                other.n_cells,
                other.x1()
            )))
        }
    }
}
