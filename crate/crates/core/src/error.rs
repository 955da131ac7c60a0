use alloc::string::String;

use crate::qstate::Qubit;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("register would exceed three qubits")]
    DimensionOverflow,
    #[error("qubits must follow the (C, N, a) layout order without overlap")]
    QubitOrder,
    #[error("qubit {0:?} is not part of the state")]
    MissingQubit(Qubit),
    #[error("operation needs at least one qubit")]
    EmptySelection,
    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),
    #[error("Kraus operators are not trace preserving (deviation {0:e})")]
    NotTracePreserving(f64),
    #[error("projectors are not a complete orthogonal set (deviation {0:e})")]
    IncompleteProjectors(f64),
    #[error("no outcome labelled {0:?}")]
    UnknownOutcome(String),
    #[error("impossible outcome {label:?}: probability {probability:e}")]
    ImpossibleOutcome { label: String, probability: f64 },
    #[error("not a valid density matrix: {0}")]
    InvalidState(&'static str),
    #[error("target state is not normalized (norm squared {0})")]
    UnnormalizedTarget(f64),
    #[error("parameter {name} = {value} is out of range")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("readout produced no click within {0} probing rounds")]
    ReadoutNotConverged(u32),
    #[error("calibration target {0} is unreachable within parameter bounds")]
    UnreachableTarget(&'static str),
    #[error("degenerate fit design")]
    DegenerateFit,
    #[error("invalid probability distribution (sum {0})")]
    InvalidDistribution(f64),
    #[error("singular linear system")]
    Singular,
    #[error("{0}")]
    Precondition(&'static str),
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange { name, value })
    }
}
