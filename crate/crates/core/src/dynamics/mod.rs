//! Time-dependent Schrödinger integration for small Hilbert spaces.

mod expm;
mod integrate;
mod operator;
mod state;

pub use expm::{expm, unitary_of_step};
pub use integrate::{
    dyson_first_order, evolve, evolve_converged, propagator, HamiltonianSchedule,
    IntegratorConfig, Scheme,
};
pub use operator::{
    identity, kron, pauli_x, pauli_y, pauli_z, unitarity_defect, CMatrix, CVector,
    HermitianOperator,
};
pub use state::StateVector;

pub use num_complex::Complex64;
