//! Newton solver for the translator equation, its linearizations, and the
//! clamped-plate replacement.

pub mod biharmonic;
pub(crate) mod flux;
pub mod linearize;
pub mod newton;
pub mod sparse;

pub use biharmonic::{biharmonic_energy_check, biharmonic_solve, ClampedPlate, EnergyCheck};
pub use linearize::{
    coefficients_at, l_subsolution, l_subsolution_with_margin, linearize, newton_ellipticity, q_subsolution,
    q_subsolution_with_margin, quasilinear_self, Ellipticity, Flavor, LinearizedCoefficients, SubsolutionReport,
};
pub use newton::{
    harmonic_extension, newton_from, newton_solve, residual, NewtonSettings, SolveReport, TranslatorProblem,
};
