//! Averaged mean-return-time machinery on the annulus: stationary
//! Fokker-Planck density, probability current and mean flux, the
//! jump-periodic mean-return-time PDE, the isophase field, and the
//! Monte-Carlo cross-checks against the pathwise random-period theory.

pub mod banded;
pub mod compare;
pub mod density;
pub mod grid;
pub mod operators;
pub mod pde;

pub use banded::BandedMatrix;
pub use compare::{
    expected_period_compare, period_ensemble, probe_double_expectation, DoubleExpectationRow,
    EnsembleConfig, PeriodCompareReport,
};
pub use density::{stationary_density, stationary_density_with_tol, DensityField};
pub use grid::AnnulusGrid;
pub use operators::{build_operators, DiscreteOperators};
pub use pde::{mean_flux_period, solve_mrt, FluxReport, MrtFields};
