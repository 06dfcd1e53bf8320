//! Dense statevector simulation.

mod gate;
mod matrix;
mod state;

pub use gate::{gate_matrix, Control, Gate, GateKind};
pub use matrix::Matrix;
pub use state::StateVector;
