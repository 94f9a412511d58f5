use flocstab::model::{Grid, SizeDomain};
use flocstab::quadrature::{cumulative_integral, integrate, integrating_factor, Rule, Samples};
use proptest::prelude::*;

fn grid(x1: f64, n: usize) -> Grid {
    Grid::new(SizeDomain::new(x1).unwrap(), n).unwrap()
}

#[test]
fn trapezoid_error_quarters_on_refinement() {
    let err = |n: usize| {
        let s = Samples::from_fn(grid(1.0, n), f64::exp);
        (integrate(&s, Rule::Trapezoid).unwrap() - (1f64.exp() - 1.0)).abs()
    };
    for n in [4, 8, 16, 32, 64] {
        let r = err(n) / err(2 * n);
        assert!((3.6..=4.4).contains(&r), "n={n} ratio {r}");
    }
}

proptest! {
    #[test]
    fn simpson_is_exact_on_cubics(c in prop::array::uniform4(-5.0f64..5.0), x1 in 0.1f64..3.0, half in 1usize..40) {
        let s = Samples::from_fn(grid(x1, 2 * half), |x| c[0] + c[1] * x + c[2] * x * x + c[3] * x * x * x);
        let exact = c[0] * x1 + c[1] * x1.powi(2) / 2.0 + c[2] * x1.powi(3) / 3.0 + c[3] * x1.powi(4) / 4.0;
        prop_assert!((integrate(&s, Rule::Simpson).unwrap() - exact).abs() <= 1e-12 * (1.0 + exact.abs()));
    }

    #[test]
    fn cumulative_endpoint_matches_trapezoid(v in prop::collection::vec(-10.0f64..10.0, 2..80), x1 in 0.1f64..5.0) {
        let s = Samples::new(grid(x1, v.len() - 1), v).unwrap();
        let c = cumulative_integral(&s);
        let last = c.values()[c.values().len() - 1] - c.values()[0];
        prop_assert!((last - integrate(&s, Rule::Trapezoid).unwrap()).abs() <= 1e-14 * (1.0 + last.abs()) * s.values().len() as f64);
    }

    #[test]
    fn log_t_is_monotone_in_lambda(
        a in prop::collection::vec(0.0f64..5.0, 2..50),
        gs in prop::collection::vec(0.1f64..3.0, 50),
        l1 in -20.0f64..20.0,
        dl in 0.0f64..20.0,
    ) {
        let gr = grid(1.0, a.len() - 1);
        let g = Samples::new(gr, gs[..a.len()].to_vec()).unwrap();
        let a = Samples::new(gr, a).unwrap();
        let lo = integrating_factor(l1, &a, &g).unwrap();
        let hi = integrating_factor(l1 + dl, &a, &g).unwrap();
        prop_assert_eq!(lo.log_t.values()[0], 0.0);
        for (x, y) in lo.log_t.values().iter().zip(hi.log_t.values()) {
            prop_assert!(x <= y);
        }
        prop_assert!(lo.log_t.values().windows(2).all(|w| l1 < 0.0 || w[1] >= w[0]));
    }
}
