//! Exact numerics for a dressed qubit encoded in an electron spin and its
//! surrounding nuclear spin bath.
//!
//! * [`spin`]: conserved pair-number sectors, sparse spin operators, exact
//!   propagation.
//! * [`hamiltonians`]: Zeeman, hyperfine, dipolar and dominant Hamiltonians,
//!   dipolar couplings from geometry or engineered to constraints.
//! * [`dressed`]: dressed-qubit frames, dressing map, pulse algebra and gate
//!   compilation, two-qubit phase check.
//! * [`leakage`]: leakage coefficients, leakage-elimination operator and
//!   bang-bang suppression.
//! * [`pairing`]: Fröhlich effective interaction, pairing Hamiltonian and the
//!   self-consistent BCS solver.
//!
//! Everything is generic over [`Real`] (`f32` / `f64`); the aliases below fix
//! the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dressed;
pub mod error;
pub mod hamiltonians;
pub mod leakage;
pub mod pairing;
pub mod scalar;
pub mod spin;

pub use error::{Error, Result};
pub use scalar::{Complex, Real, C};

pub type C64 = scalar::C<f64>;
pub type SpinBathSpec64 = spin::SpinBathSpec<f64>;
pub type SpinBathSpec32 = spin::SpinBathSpec<f32>;
pub type LinearOp64 = spin::LinearOp<f64>;
pub type KetState64 = spin::KetState<f64>;
pub type DressedFrame64 = dressed::DressedFrame<f64>;
pub type DressedFrame32 = dressed::DressedFrame<f32>;
pub type PulseSegment64 = dressed::PulseSegment<f64>;
pub type LeakageReport64 = leakage::LeakageReport<f64>;
pub type PairingModel64 = pairing::PairingModel<f64>;
pub type BcsSolution64 = pairing::BcsSolution<f64>;
