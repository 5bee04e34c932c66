//! Feedback control of a qubit with variable-strength measurements.
//!
//! A qubit prepared in one of two non-orthogonal states suffers random phase
//! flips, is measured with tunable strength `cos χ` and rotated by `±η`
//! depending on the outcome. The crate evaluates this loop exactly and by
//! sampling, gives the closed-form optima, models the photonic gate used to
//! run it and simulates the tomography that scores it.

pub mod channels;
pub mod error;
pub mod optimize;
pub mod photonic;
pub mod protocol;
pub mod qubit;
pub mod sweep;
pub mod tomography;

pub use channels::{dephase, kraus_pair, measure, sample_outcome, KrausPair, MeasurementOutcome};
pub use error::{Error, Result};
pub use photonic::{
    experimental_model_curve, gate_measurement, ppbs_conditional, Correction, MeterState,
    ModelPoint, Ppbs, PostselectedGate,
};
pub use protocol::{
    avg_fidelity_analytic, avg_fidelity_opt, chi_opt, control_map, eta_opt, fidelity_dn,
    fidelity_h, run_protocol_exact, run_protocol_mc, OperatingPoint, ProtocolParams,
    ProtocolResult, SchemeKind,
};
pub use qubit::{
    fidelity, make_input_state, rotation_y, BlochVector, PureQubit, QubitState, Sign, Unitary2,
};
pub use sweep::{
    brute_force_protocol_opt, crossover_curve, find_max_improvement, sweep, GridSpec, SweepCell,
};
pub use tomography::{
    fidelity_with_error, linear_inversion, mix_ensemble_counts, simulate_counts, CountRecord,
    MeasurementSetting, ReconstructedState,
};
