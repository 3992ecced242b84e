//! Linear evolution e^{A t} on NT-periodic perturbations and its critical/non-critical splitting.

mod cutoff;
mod decompose;
mod field;
mod fit;
mod localized;
mod propagate;
mod sweep;

pub use cutoff::CutoffProfile;
pub use decompose::{
    decompose, evolve, modulation_gamma, project_p0n, DecompositionReport, Decomposer, ModulationField, Parts,
    Prepared,
};
pub use field::PerturbationField;
pub use fit::{decay_fit, DecayFit, FitModel};
pub use localized::{
    field_leak, localized_fit_start, localized_pipeline, localized_pipeline_leak_free, whitham_compare, whitham_solution,
    LocalizedRun, LocalizedSample, WhithamComparison, LEAK_TOL, LOCALIZED_T_MIN,
};
pub use propagate::{propagate_slice, LatticePropagator, SlicePropagator};
pub use sweep::{
    crossover_time, fit_window, gaussian_bump, off_critical_gap, uniform_sweep, SweepRow, SweepSummary, UniformSweep, FIT_C,
    FIT_T_MIN,
};
