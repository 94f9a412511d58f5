#![allow(dead_code)]

use flocstab::model::{constant_kernel_with_cutoff, example1, scalar, Grid, RateSet, RateTables, SizeDomain};
use flocstab::quadrature::Samples;
use flocstab::steady_state::{solve_fixed_point, SolverOptions};
use proptest::prelude::*;

pub fn tab(rates: &RateSet, n: usize) -> RateTables {
    rates.tabulate(&Grid::new(rates.domain(), n).unwrap()).unwrap()
}

pub fn unit_grid(n: usize) -> Grid {
    Grid::new(SizeDomain::new(1.0).unwrap(), n).unwrap()
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Example 1 at `b = 2.5` with a constant cutoff kernel, which has a
/// positive steady state.
pub fn saturated_example1(k0: f64) -> RateSet {
    example1(2.5).unwrap().with_aggregation(constant_kernel_with_cutoff(k0, 1.0))
}

pub fn nontrivial_state(n: usize) -> (RateTables, Samples) {
    let t = tab(&saturated_example1(5.0), n);
    let r = solve_fixed_point(&t, &SolverOptions::default()).unwrap();
    assert!(r.converged && !r.trivial, "{:?}", r.summary());
    (t, r.p_star)
}

/// Coefficients of an admissible rate set: linear growth, removal and
/// renewal, quadratic fragmentation, constant cutoff aggregation.
#[derive(Debug, Clone, Copy)]
pub struct RateParams {
    pub x1: f64,
    pub g0: f64,
    pub g1: f64,
    pub m0: f64,
    pub m1: f64,
    pub q0: f64,
    pub q1: f64,
    pub k1: f64,
    pub k2: f64,
    pub ka: f64,
}

impl RateParams {
    pub fn rates(&self) -> RateSet {
        let p = *self;
        RateSet::new(
            SizeDomain::new(p.x1).unwrap(),
            scalar(move |x| p.g0 + p.g1 * x),
            scalar(move |x| p.m0 + p.m1 * x),
            scalar(move |x| p.q0 + p.q1 * x),
            scalar(move |x| p.k1 * x + p.k2 * x * x),
        )
        .with_aggregation(constant_kernel_with_cutoff(p.ka, p.x1))
    }
}

pub fn rate_params() -> impl Strategy<Value = RateParams> {
    (
        (0.5f64..2.0, 0.2f64..2.0, 0.0f64..1.0, 0.0f64..1.5, 0.0f64..1.0),
        (0.0f64..2.0, 0.0f64..1.0, 0.0f64..2.0, 0.0f64..1.0, 0.0f64..3.0),
    )
        .prop_map(|((x1, g0, g1, m0, m1), (q0, q1, k1, k2, ka))| RateParams {
            x1,
            g0,
            g1,
            m0,
            m1,
            q0,
            q1,
            k1,
            k2,
            ka,
        })
}
