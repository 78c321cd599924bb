//! Numerical laboratory for pacemakers in oscillator media with local or
//! nonlocal coupling.
//!
//! The library builds defect solutions of phase-dynamics equations three
//! independent ways and checks them against each other:
//!
//! * an asymptotic pipeline (explicit leading order plus a contraction
//!   corrector) that predicts the selected wavenumber and collective
//!   frequency of a pacemaker from the forcing,
//! * a direct time integrator with far-field closure that grows the same
//!   defect from rest,
//! * an independent eigenvalue oracle for the locally coupled model via the
//!   exponential substitution that linearizes it.
//!
//! Everything lives on one uniform grid type; operators act spectrally with
//! zero-padding so that algebraically decaying tails are not wrapped.

pub mod asymptotics;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod grid;
pub mod kernels;
pub mod norms;
pub mod simulator;
pub mod solvers;
pub mod verify;

pub use asymptotics::{
    leading_order_local, leading_order_nonlocal, solve_pacemaker_local, solve_pacemaker_nonlocal,
    CorrectorOptions, Inhomogeneity, LeadingOrder, Pacemaker,
};
pub use diagnostics::{
    far_field_report, frequency_from_series, pacemaker_frequency_oracle, schrodinger_ground_state,
    FarFieldReport, GroundState, OracleOptions,
};
pub use error::{Error, Result};
pub use field::{FarFieldTemplate, Field};
pub use grid::{Grid, SpectralEngine};
pub use kernels::{DerivedSymbols, Kernel, KernelFamily, Medium};
pub use simulator::{
    pacemaker_state, wavetrain_state, SimulationRecord, Simulator, SimulatorOptions, Snapshot,
};
pub use solvers::{BorderedSolution, DriftLaplacian};
pub use verify::{run_verification, CriterionOutcome, ModelKind, SweepRow, VerifyReport};
