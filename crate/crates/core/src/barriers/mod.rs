//! Exact translators, the modified Bessel function `K0`, and the barrier
//! functions built from them.

pub mod barrier;
pub mod bessel;
pub mod exact;

pub use barrier::{
    comparison_check, composite_recipe, eval_barrier, scan_r0, supersolution_check, BarrierSpec, ComparisonReport,
    Operator, R0Scan, ScanOperator, SupersolutionReport,
};
pub use exact::{eval_exact, ExactSolution};
