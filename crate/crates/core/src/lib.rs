//! Measurement-device-independent entanglement witnesses for multi-qubit
//! states: witness decomposition over trusted ancilla inputs, outcome
//! probabilities under ideal and arbitrary Bell-state measurements,
//! finite-shot statistics, and sampled checks that the witness stays
//! nonnegative on separable and k-producible classes.

pub mod error;
pub mod io;
pub mod protocol;
pub mod qcore;
pub mod reproduce;
pub mod states;
pub mod stats;
pub mod structure;
pub mod witness;

pub use error::{Error, Result};
pub use protocol::{mdiew_value, probability_table, MeasurementModel, ProbabilityTable};
pub use qcore::{BellOutcome, ComplexMatrix, DensityMatrix};
pub use states::{Seed, GENERATOR_NAME};
pub use structure::Partition;
pub use witness::{
    outcome_coefficients, AncillaBasis, CoefficientTensor, OutcomeCoefficientTable, SeparableClass,
    Witness,
};
