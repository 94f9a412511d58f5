//! Model ingredients: the size grid, the six rate functions and their
//! tabulation, assumption audits, and the two preset parameterizations.

mod assumptions;
mod grid;
mod presets;
mod rates;

pub use assumptions::{gamma_first_moment, validate_assumptions, AssumptionReport, CheckOutcome};
pub use grid::{Grid, SizeDomain};
pub use presets::{build_preset, example1, example2_kernel, Example2, PSTAR_FLOOR};
pub use rates::{
    constant_kernel_with_cutoff, pair, scalar, uniform_daughters, zero_kernel, PairRate,
    RateSet, RateTables, ScalarRate,
};
