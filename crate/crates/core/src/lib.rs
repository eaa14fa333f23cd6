//! Open-system dynamics of slowly driven quantum systems: a secular Lindblad
//! master equation whose dissipators act in super-adiabatic frames, with
//! Landau–Zener sweep tooling on top.

// `!(x > 0.0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod frames;
pub mod generator;
pub mod integrate;
pub mod invariants;
pub mod linalg;
pub mod model;
pub mod propagation;

pub use error::{Error, Result};
pub use frames::{
    adiabatic_parameter, adiabatic_report, frame_couplings, instantaneous_frames, residual_oscillation, smooth_gauge,
    superadiabatic_frames, AdiabaticReport, Frame, FrameTrajectory, TimeGrid,
};
pub use generator::{BasisMode, LindbladGenerator, LindbladOps};
pub use integrate::{IntegratorConfig, Method};
pub use model::{
    dephasing_spectrum, lz_hamiltonian, ohmic_spectrum, ohmic_spectrum_with, BathSpectrum, CouplingOperator,
    CutoffConvention, LzParams, TimeDependentHamiltonian,
};
pub use propagation::{
    bloch_vector, evolve_lindblad, evolve_trajectories, evolve_unitary, DensityMatrix, StateVector, TrajectoryConfig,
};
