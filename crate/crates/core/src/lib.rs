//! Optimal trace-preserving completely-positive maps.
//!
//! Given a desired transformation between pure states `psi_in(x) -> psi_out(x)`,
//! [`target`] builds the positive operator `R` whose overlap with a channel's Choi
//! operator is the mean fidelity, [`solver`] iterates the extremal equation to find the
//! fidelity-optimal channel, and [`channel`] turns the result into Kraus operators or an
//! isometric dilation. [`models`] carries the closed-form test cases (universal NOT,
//! symmetric cloner, two entanglers, polar-angle shifter) and [`analysis`] the
//! validation and scan utilities.
//!
//! ```
//! use cpmap::{analytic_r, solve, ModelSpec, SolverOptions};
//!
//! let r = analytic_r(&ModelSpec::cloner(2).unwrap());
//! let res = solve(&r, &SolverOptions::default()).unwrap();
//! assert!((res.fidelity - 2.0 / 3.0).abs() < 1e-10);
//! ```

pub mod analysis;
pub mod channel;
pub mod error;
pub mod io;
pub mod matcore;
pub mod models;
pub mod solver;
pub mod target;

pub use analysis::{
    alpha_scan, estimate_alpha0, mc_fidelity, paper_values, ppt_check, state_fidelity_curve,
    McEstimate, PaperValue, PptReport, ScanRow,
};
pub use channel::{
    apply, dilation, fidelity, kraus_from_choi, validate_choi, ChoiOperator, ChoiReport,
    DensityMatrix, KrausSet,
};
pub use error::{Error, Result};
pub use matcore::{ComplexMatrix, EigenDecomposition, Subsystem, C64};
pub use models::{
    analytic_r, bloch_state, damping_channel, known_optimum, model_family, shifter_closed_forms,
    shifter_fidelity, KnownOptimum, ModelSpec, ShifterClosedForm,
};
pub use solver::{iterate_once, solve, Init, SolverOptions, SolverResult};
pub use target::{
    build_r_montecarlo, build_r_quadrature, build_r_quadrature_with, fidelity_bound, Provenance,
    QuadratureNodes, StateFamily, TargetOperator,
};
