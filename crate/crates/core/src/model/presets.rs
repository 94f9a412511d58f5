use super::grid::SizeDomain;
use super::rates::{pair, scalar, zero_kernel, PairRate, RateSet};
use crate::error::{FlocError, Result};
use crate::quadrature::Samples;

/// Lower bound for the interpolated steady state inside the Example 2 kernel.
pub const PSTAR_FLOOR: f64 = 1e-8;

fn check(name: &str, v: f64, positive: bool) -> Result<()> {
    let ok = v.is_finite() && if positive { v > 0.0 } else { v >= 0.0 };
    if ok {
        Ok(())
    } else {
        let need = if positive { "positive" } else { "nonnegative" };
        Err(FlocError::InvalidParameter(format!("{name} must be {need}, got {v}")))
    }
}

/// `x1 = 1`, `mu = 1`, `q = b(x + 1)`, `g = x + 1`, `kf = 2x`, no aggregation,
/// uniform daughters.
pub fn example1(b: f64) -> Result<RateSet> {
    check("b", b, false)?;
    Ok(RateSet::new(
        SizeDomain::new(1.0)?,
        scalar(|x| x + 1.0),
        scalar(|_| 1.0),
        scalar(move |x| b * (x + 1.0)),
        scalar(|x| 2.0 * x),
    ))
}

/// `x1 = 1`, `g = exp(-a x)`, `q = b(x + 1)`, `kf = c x`, `mu = c x / 2`,
/// uniform daughters, and `ka = d (1-x)(1-y) / (p*(x) p*(y))` on `x + y < 1`.
///
/// The kernel needs the steady state it helps determine, so the construction
/// has two phases: [`Example2::phase1`] has no aggregation and is what the
/// steady-state solver runs on; [`Example2::bind`] attaches the kernel built
/// from a tabulated `p*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Example2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Example2 {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        check("a", a, true)?;
        check("b", b, false)?;
        check("c", c, false)?;
        check("d", d, false)?;
        Ok(Self { a, b, c, d })
    }

    pub fn phase1(&self) -> RateSet {
        let Self { a, b, c, .. } = *self;
        RateSet::new(
            SizeDomain::new(1.0).expect("unit domain"),
            scalar(move |x| (-a * x).exp()),
            scalar(move |x| 0.5 * c * x),
            scalar(move |x| b * (x + 1.0)),
            scalar(move |x| c * x),
        )
    }

    pub fn bind(&self, p_star: &Samples) -> Result<RateSet> {
        Ok(self.phase1().with_aggregation(example2_kernel(self.d, p_star)?))
    }
}

/// `d (1-x)(1-y) / (p(x) p(y))` for `x + y < 1`, with `p` the linear
/// interpolant of `p_star` floored at `max(PSTAR_FLOOR, min p_star)`.
pub fn example2_kernel(d: f64, p_star: &Samples) -> Result<PairRate> {
    check("d", d, false)?;
    if d == 0.0 {
        return Ok(zero_kernel());
    }
    if (p_star.grid().x1() - 1.0).abs() > 0.0 {
        return Err(FlocError::GridMismatch("Example 2 lives on [0, 1]".into()));
    }
    let floor = p_star.values().iter().copied().fold(f64::INFINITY, f64::min).max(PSTAR_FLOOR);
    let p = p_star.clone();
    let edge = 1.0 - 1e-12;
    Ok(pair(move |x, y| {
        if x + y < edge {
            let px = p.interpolate(x).max(floor);
            let py = p.interpolate(y).max(floor);
            d * (1.0 - x) * (1.0 - y) / (px * py)
        } else {
            0.0
        }
    }))
}

/// Builds a preset by name: `example1` takes `[b]`, `example2` takes
/// `[a, b, c, d]` and returns its first phase.
pub fn build_preset(name: &str, params: &[f64]) -> Result<RateSet> {
    let arity = |k: usize| {
        if params.len() == k {
            Ok(())
        } else {
            Err(FlocError::InvalidParameter(format!(
                "{name} takes {k} parameters, got {}",
                params.len()
            )))
        }
    };
    match name {
        "example1" => {
            arity(1)?;
            example1(params[0])
        }
        "example2" => {
            arity(4)?;
            Ok(Example2::new(params[0], params[1], params[2], params[3])?.phase1())
        }
        other => Err(FlocError::UnknownPreset(other.to_string())),
    }
}
