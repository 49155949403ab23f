//! Disturbance models and Monte Carlo validation of synthesized policies.

mod dryden;
mod io;
mod montecarlo;
mod sample;

pub use dryden::{
    autocovariance, dryden_covariance, dryden_psd, toeplitz_covariance, DrydenChannel, DrydenParams, Quadrature,
};
pub use io::{read_noise_csv, write_noise_csv};
pub use montecarlo::{
    empirical_cvar, monte_carlo_report, simulate_closed_loop, simulate_closed_loop_with, terminal_report,
    violation_risk, ConstraintStats, MonteCarloReport, TerminalStats, Trajectories, ViolationStats, CONTAINMENT_TOL,
};
pub use sample::{sample_noise, sample_noise_with, NoiseKind, NoiseModel, Sampler};
