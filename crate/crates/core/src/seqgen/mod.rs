//! Sequential generation of qubit chains by a single ancilla.
//!
//! At step `k` the ancilla interacts with a fresh qubit prepared in
//! `qubit_init`; the step unitary restricted to that initial state is an
//! isometry from the ancilla to ancilla (x) qubit, which is exactly an MPS
//! site tensor. After `n` steps the joint state is an MPS with an open
//! ancilla index, and projecting the ancilla onto the best final state gives
//! the fidelity `F = |<generated|target>|` and the cost `2 (1 - F)`.

mod model;
mod optimize;
mod polish;
mod protocol;
mod simulate;

pub use model::{cnot, GeneratorModel, ModelKind};
pub use optimize::{optimize, optimize_full_local};
pub use protocol::{build_step_unitary, Protocol, Step};
pub use simulate::{fidelity, simulate, FidelityReport, GeneratedState};
