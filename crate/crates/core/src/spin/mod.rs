//! Sector machinery, spin operators and exact propagation.

pub mod basis;
pub mod expr;
pub mod ket;
pub mod linalg;
pub mod linop;
pub mod ops;
pub mod propagate;
pub mod spec;

pub use basis::{Basis, BasisKind, Config};
pub use expr::{Component, SpinExpr};
pub use ket::KetState;
pub use linop::LinearOp;
pub use ops::{collective_op, pair_number_ops, spin_op, spin_op_block};
pub use propagate::{propagate, Method, Propagator};
pub use spec::{SpinBathSpec, Zeeman};
