//! Dressed-qubit frames.
//!
//! For a nuclear state `|m>` that is an eigenstate of `h = A_- A_+` with
//! eigenvalue `h_m > 0`, the pair
//!
//! ```text
//! |0>_d = |up>|m>,   |1>_d = |down>|Phi_{m+1}>,   |Phi_{m+1}> = A_+|m> / sqrt(h_m)
//! ```
//!
//! spans a subspace invariant under `H_D = F S_z + A sqrt(2I) V_f`, on which
//! `V_f` acts as `sqrt(h_m) X / 2` and `S_z` as `Z / 2`.

mod frame;
mod pulse;
mod text;
mod two_qubit;

pub use frame::{
    build_frame_general, build_frame_n1, closure_norm, dressing_unitary, matrix_rep, DressedFrame, Selector,
    LEAK_MODE_LIMIT,
};
pub(crate) use frame::{nuclear_part, with_electron};
pub use pulse::{
    compile_gate, compile_gate_with_amplitude, compose, gate_infidelity, pauli, pulse_unitary, u_phi_theta,
    y_conjugated, Mat2, PulseSegment,
};
pub use two_qubit::{makhlin_invariants, two_qubit_phase_check, TwoQubitReport};
