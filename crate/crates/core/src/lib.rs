//! Numerical toolkit for a size-structured flocculation model with growth,
//! removal, renewal, aggregation and fragmentation.
//!
//! The crate computes steady states through a fixed-point map, evaluates
//! existence and stability criteria, and cross-checks every verdict against
//! the spectrum of the discretized linearization and direct time simulation.

pub mod criteria;
pub mod error;
pub mod kinetics;
pub mod linearization;
pub mod model;
pub mod quadrature;
pub mod simulator;
pub mod steady_state;
pub mod sweep;

pub use criteria::{
    CharacteristicEvaluation, NontrivialReport, Verdict, ZeroSolutionReport,
};
pub use error::{FlocError, Result};
pub use linearization::{LinearizedCoefficients, OperatorMatrix, SpectralResult};
pub use model::{build_preset, Grid, RateSet, RateTables, SizeDomain};
pub use quadrature::{IntegratingFactor, Rule, Samples};
pub use simulator::{DecayFit, SimOptions, Trajectory};
pub use steady_state::{DensityField, ExistenceCheck, SolverOptions, SteadyStateResult};
