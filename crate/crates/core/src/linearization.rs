//! Linearization of the model around a steady state, the positivity
//! conditions, the matrix discretization and its spectrum.

use nalgebra::{DMatrix, Schur};
use serde::Serialize;

use crate::error::{FlocError, Result};
use crate::model::{CheckOutcome, RateTables};
use crate::quadrature::{trap_weight, Samples};
use crate::steady_state::DensityField;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedCoefficients {
    /// `A(x) = kf/2 + μ + ∫₀^{x1−x} E(y,x) dy`.
    pub a: Samples,
    /// `E(x,y) = ka(x,y) p*(x)`, zero for `x + y >= x1`.
    pub e: DMatrix<f64>,
    pub p_star: DensityField,
}

pub fn build_coefficients(t: &RateTables, p_star: &DensityField) -> Result<LinearizedCoefficients> {
    p_star.grid().ensure_same(t.grid(), "build_coefficients")?;
    if let Some(v) = p_star.values().iter().find(|v| !(**v >= 0.0)) {
        return Err(FlocError::InvalidParameter(format!("linearization point has value {v}")));
    }
    let grid = *t.grid();
    let n = grid.n_cells();
    let h = grid.h();
    let p = p_star.values();
    let e = DMatrix::from_fn(n + 1, n + 1, |i, j| t.ka()[(i, j)] * p[i]);
    let a = (0..=n)
        .map(|i| {
            let tail: f64 = (0..=n - i).map(|j| trap_weight(j, 0, n - i, h) * e[(j, i)]).sum();
            0.5 * t.kf()[i] + t.mu()[i] + tail
        })
        .collect();
    Ok(LinearizedCoefficients { a: Samples::new(grid, a)?, e, p_star: p_star.clone() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityCheck {
    /// `∂x E(x,y) <= 0` for `y < x`.
    pub cond1: CheckOutcome,
    /// `Γ(x;y) kf(y) >= E(x,y)` for `y >= x`.
    pub cond2: CheckOutcome,
}

impl PositivityCheck {
    pub fn ok(&self) -> bool {
        self.cond1.passed && self.cond2.passed
    }
}

/// Samples both positivity conditions on node pairs. The derivative in the
/// first uses centered differences at interior nodes; the second skips the
/// parent size `y = 0` where the daughter density is undefined.
pub fn check_positivity(c: &LinearizedCoefficients, t: &RateTables) -> PositivityCheck {
    let grid = t.grid();
    let n = grid.n_cells();
    let h = grid.h();
    let e = &c.e;
    let scale = 1.0 + e.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-12 * scale;

    let mut cond1 = CheckOutcome::new();
    for i in 1..n {
        for j in 0..i {
            let d = (e[(i + 1, j)] - e[(i - 1, j)]) / (2.0 * h);
            cond1.record(d, grid.node(i), Some(grid.node(j)));
        }
    }
    let mut cond2 = CheckOutcome::new();
    for i in 0..n {
        for j in i.max(1)..n {
            let v = e[(i, j)] - t.gamma()[(i, j)] * t.kf()[j];
            cond2.record(v, grid.node(i), Some(grid.node(j)));
        }
    }
    PositivityCheck { cond1: cond1.finish(tol / h), cond2: cond2.finish(tol) }
}

/// Dense discretization of the linearized operator with the renewal
/// condition folded into the inflow of the first cell.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub matrix: DMatrix<f64>,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Row `i` is the derivative of the time integrator's right-hand side at
/// node `i`: upwind transport, `−A`, fragmentation gain, aggregation loss
/// `−∫E(x,y)h(y)` and gain `∫E(x−y,y)h(y)`, with `∫ q h` entering row 0.
pub fn assemble_matrix(c: &LinearizedCoefficients, t: &RateTables) -> OperatorMatrix {
    let grid = t.grid();
    let n = grid.n_cells();
    let h = grid.h();
    let g = t.g();
    let mut m = DMatrix::zeros(n + 1, n + 1);
    for k in 0..=n {
        m[(0, k)] += trap_weight(k, 0, n, h) * t.q()[k] / h;
    }
    m[(0, 0)] -= g[0] / h;
    for i in 1..=n {
        m[(i, i)] -= g[i] / h;
        m[(i, i - 1)] += g[i - 1] / h;
    }
    for i in 0..=n {
        m[(i, i)] -= c.a.values()[i];
        for k in i..=n {
            m[(i, k)] += trap_weight(k, i, n, h) * t.gamma()[(i, k)] * t.kf()[k];
        }
        for k in 0..=n - i {
            m[(i, k)] -= trap_weight(k, 0, n - i, h) * c.e[(i, k)];
        }
        for k in 0..=i {
            m[(i, k)] += trap_weight(k, 0, i, h) * c.e[(i - k, k)];
        }
    }
    OperatorMatrix { matrix: m }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralResult {
    pub abscissa: f64,
    pub rightmost: Eigenvalue,
    pub eigenvalues: Vec<Eigenvalue>,
}

/// All eigenvalues from a real Schur decomposition; the abscissa is the
/// largest real part.
pub fn spectral_abscissa(m: &OperatorMatrix) -> Result<SpectralResult> {
    let dim = m.dim();
    if dim == 0 {
        return Err(FlocError::InvalidParameter("empty matrix".into()));
    }
    if m.matrix.iter().any(|v| !v.is_finite()) {
        return Err(FlocError::NonFinite("operator matrix".into()));
    }
    let schur = Schur::try_new(m.matrix.clone(), 1e-14, 1000 * dim).ok_or(FlocError::EigenFailure(dim))?;
    let eigenvalues: Vec<Eigenvalue> =
        schur.complex_eigenvalues().iter().map(|z| Eigenvalue { re: z.re, im: z.im }).collect();
    let rightmost = *eigenvalues
        .iter()
        .max_by(|a, b| a.re.total_cmp(&b.re).then(a.im.abs().total_cmp(&b.im.abs()).reverse()))
        .expect("nonempty spectrum");
    Ok(SpectralResult { abscissa: rightmost.re, rightmost, eigenvalues })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{constant_kernel_with_cutoff, example1, pair, scalar, Grid, RateSet, SizeDomain};

    fn grid(n: usize) -> Grid {
        Grid::new(SizeDomain::new(1.0).unwrap(), n).unwrap()
    }

    #[test]
    fn zero_point_gives_zero_kernel() {
        let g = grid(20);
        let t = example1(2.0).unwrap().with_aggregation(constant_kernel_with_cutoff(3.0, 1.0)).tabulate(&g).unwrap();
        let c = build_coefficients(&t, &Samples::zeros(g)).unwrap();
        assert!(c.e.iter().all(|&v| v == 0.0));
        for (a, x) in c.a.values().iter().zip(g.nodes()) {
            assert!((a - (1.0 + x)).abs() < 1e-15);
        }
        let pos = check_positivity(&c, &t);
        assert!(pos.ok());
        assert_eq!(pos.cond1.worst_violation, 0.0);
    }

    #[test]
    fn constant_kernel_constant_point() {
        let g = grid(40);
        let (k0, p0) = (1.5, 0.4);
        let t = example1(1.0).unwrap().with_aggregation(constant_kernel_with_cutoff(k0, 1.0)).tabulate(&g).unwrap();
        let c = build_coefficients(&t, &Samples::from_fn(g, |_| p0)).unwrap();
        for (i, (a, x)) in c.a.values().iter().zip(g.nodes()).enumerate() {
            // the node x_j = x1 − x_i sits on the cutoff and carries no weight
            let want = 1.0 + x + k0 * p0 * (1.0 - x) - if i < 40 { 0.5 * g.h() * k0 * p0 } else { 0.0 };
            assert!((a - want).abs() < 1e-13, "{i}");
        }
        assert!(c.e.iter().all(|v| *v >= 0.0));
        assert_eq!(c.e[(10, 30)], 0.0);
    }

    #[test]
    fn increasing_kernel_violates_condition_one() {
        let g = grid(20);
        let t = example1(1.0)
            .unwrap()
            .with_aggregation(pair(|x, y| if x + y < 0.999 { 1.0 + x + y } else { 0.0 }))
            .tabulate(&g)
            .unwrap();
        let c = build_coefficients(&t, &Samples::from_fn(g, |_| 1.0)).unwrap();
        let pos = check_positivity(&c, &t);
        assert!(!pos.cond1.passed);
        assert!(pos.cond1.worst_violation > 0.9);
    }

    #[test]
    fn negative_point_rejected() {
        let g = grid(4);
        let t = example1(1.0).unwrap().tabulate(&g).unwrap();
        let p = Samples::new(g, vec![0.0, -1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(build_coefficients(&t, &p).is_err());
    }

    #[test]
    fn hand_assembled_three_by_three() {
        let rates = RateSet::new(
            SizeDomain::new(1.0).unwrap(),
            scalar(|_| 1.0),
            scalar(|_| 1.0),
            scalar(|_| 0.0),
            scalar(|_| 0.0),
        );
        let g = grid(2);
        let t = rates.tabulate(&g).unwrap();
        let c = build_coefficients(&t, &Samples::zeros(g)).unwrap();
        let m = assemble_matrix(&c, &t).matrix;
        let want = DMatrix::from_row_slice(3, 3, &[-3.0, 0.0, 0.0, 2.0, -3.0, 0.0, 0.0, 2.0, -3.0]);
        assert_eq!(m, want);
    }

    #[test]
    fn constants_are_transported_trivially_inside() {
        let rates = RateSet::new(
            SizeDomain::new(1.0).unwrap(),
            scalar(|_| 1.0),
            scalar(|_| 0.0),
            scalar(|_| 0.0),
            scalar(|_| 0.0),
        );
        let g = grid(10);
        let t = rates.tabulate(&g).unwrap();
        let c = build_coefficients(&t, &Samples::zeros(g)).unwrap();
        let m = assemble_matrix(&c, &t).matrix;
        let v = &m * nalgebra::DVector::from_element(11, 1.0);
        assert!(v.iter().skip(1).all(|x| x.abs() < 1e-13));
        assert!(v[0] < 0.0);
    }

    #[test]
    fn spectra_of_small_matrices() {
        let d = OperatorMatrix { matrix: DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, -2.0, -3.0])) };
        assert_eq!(spectral_abscissa(&d).unwrap().abscissa, -1.0);
        let r = OperatorMatrix { matrix: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]) };
        let s = spectral_abscissa(&r).unwrap();
        assert!(s.abscissa.abs() < 1e-15);
        assert!((s.rightmost.im.abs() - 1.0).abs() < 1e-14);
        let bad = OperatorMatrix { matrix: DMatrix::from_element(2, 2, f64::NAN) };
        assert!(spectral_abscissa(&bad).is_err());
    }
}
