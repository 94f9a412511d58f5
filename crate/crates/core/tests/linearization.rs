mod common;

use common::{nontrivial_state, tab, unit_grid};
use flocstab::criteria::zero_solution_matrix;
use flocstab::linearization::{assemble_matrix, build_coefficients, check_positivity, spectral_abscissa};
use flocstab::model::{constant_kernel_with_cutoff, example1, Example2};
use flocstab::quadrature::Samples;
use flocstab::simulator::rhs;

#[test]
fn zero_point_matrix_matches_independent_assembly() {
    for b in [0.3, 1.0, 2.5] {
        let t = tab(&example1(b).unwrap(), 60);
        let c = build_coefficients(&t, &Samples::zeros(*t.grid())).unwrap();
        let m = assemble_matrix(&c, &t).matrix;
        assert!((m - zero_solution_matrix(&t)).amax() <= 1e-12);
    }
}

#[test]
fn zero_point_matrix_ignores_aggregation() {
    let base = example1(2.0).unwrap();
    let t0 = tab(&base, 40);
    let t1 = tab(&base.clone().with_aggregation(constant_kernel_with_cutoff(7.0, 1.0)), 40);
    let zero = Samples::zeros(*t0.grid());
    let m0 = assemble_matrix(&build_coefficients(&t0, &zero).unwrap(), &t0).matrix;
    let m1 = assemble_matrix(&build_coefficients(&t1, &zero).unwrap(), &t1).matrix;
    assert!((m0 - m1).amax() <= 1e-14);
}

#[test]
fn zero_point_abscissa_is_stable_under_refinement() {
    for b in [0.3, 2.5] {
        let s: Vec<f64> = [100, 200, 400]
            .iter()
            .map(|&n| {
                let t = tab(&example1(b).unwrap(), n);
                let c = build_coefficients(&t, &Samples::zeros(*t.grid())).unwrap();
                spectral_abscissa(&assemble_matrix(&c, &t)).unwrap().abscissa
            })
            .collect();
        for w in s.windows(2) {
            assert!(((w[1] - w[0]) / w[1]).abs() < 0.05, "b={b}: {s:?}");
        }
        assert_eq!(s[2] > 0.0, b > 1.0);
    }
}

#[test]
fn matrix_is_the_derivative_of_the_right_hand_side() {
    let (t, p) = nontrivial_state(60);
    let grid = *t.grid();
    let m = assemble_matrix(&build_coefficients(&t, &p).unwrap(), &t).matrix;
    let dir = Samples::from_fn(grid, |x| (3.0 * x).cos() + x);
    let base = rhs(&p, &t).unwrap();
    let mh = &m * nalgebra::DVector::from_column_slice(dir.values());
    let residual = |eps: f64| {
        let shifted = Samples::new(grid, p.values().iter().zip(dir.values()).map(|(a, b)| a + eps * b).collect()).unwrap();
        let f = rhs(&shifted, &t).unwrap();
        let diff: Vec<f64> =
            (0..f.values().len()).map(|i| f.values()[i] - base.values()[i] - eps * mh[i]).collect();
        Samples::new(grid, diff).unwrap().l1_norm()
    };
    let ratio = residual(1e-3) / residual(1e-4);
    assert!((80.0..=120.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn example2_kernel_satisfies_condition_two_below_the_threshold() {
    let grid = unit_grid(40);
    let p = Samples::from_fn(grid, |x| 1.0 + x);
    let (c, d) = (0.5, 0.4);
    let t = Example2::new(0.5, 0.1, c, d).unwrap().bind(&p).unwrap().tabulate(&grid).unwrap();
    let pos = check_positivity(&build_coefficients(&t, &p).unwrap(), &t);
    assert!(pos.cond2.passed, "{:?}", pos.cond2);
    assert!(pos.cond1.passed, "{:?}", pos.cond1);

    let t = Example2::new(0.5, 0.1, 0.1, 0.4).unwrap().bind(&p).unwrap().tabulate(&grid).unwrap();
    assert!(!check_positivity(&build_coefficients(&t, &p).unwrap(), &t).cond2.passed);
}

#[test]
fn coefficient_a_is_nonnegative_at_a_positive_state() {
    let (t, p) = nontrivial_state(50);
    let c = build_coefficients(&t, &p).unwrap();
    assert!(c.a.values().iter().all(|&a| a >= 0.0));
    for i in 0..=50 {
        for j in 0..=50 {
            if i + j >= 50 {
                assert_eq!(c.e[(i, j)], 0.0);
            }
        }
    }
}
