use nalgebra::Matrix4;

use crate::error::{Error, Result};
use crate::scalar::{cabs, Real, C};
use crate::spin::linalg::{expm_hermitian, CMat, CVec};
use crate::spin::ops::spin_expr;
use crate::spin::{Component, LinearOp, SpinBathSpec};

use super::frame::{build_frame_n1, DressedFrame};

pub const PRODUCT_DIM_LIMIT: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct TwoQubitReport<T> {
    pub coupling: T,
    /// Evolution time `pi / J` (zero when `J = 0`).
    pub time: T,
    /// `max |[J S_z^1 S_z^2] - J Z Z / 4|` over the dressed 4-space.
    pub rep_error: T,
    /// `max_d || (1 - P_4) J S_z^1 S_z^2 |d> ||` over the dressed product basis.
    pub leak_residual: T,
    /// Dressed block of the evolution, basis order `00, 01, 10, 11`.
    pub gate: Matrix4<C<T>>,
    pub unitarity_defect: T,
    pub g1: C<T>,
    pub g2: C<T>,
    /// `|G1 - G1(CZ)| + |G2 - G2(CZ)|`.
    pub cz_distance: T,
}

/// Local invariants `(G1, G2)` of a two-qubit gate; `(0, 1)` for CZ/CNOT,
/// `(1, 3)` for local gates.
pub fn makhlin_invariants<T: Real>(u: &Matrix4<C<T>>) -> (C<T>, C<T>) {
    let o = C::new(T::zero(), T::zero());
    let l = C::new(T::one(), T::zero());
    let i = C::new(T::zero(), T::one());
    let s = C::new(T::one() / T::lit(2.0).sqrt(), T::zero());
    #[rustfmt::skip]
    let q = Matrix4::new(
        l, o, o, i,
        o, i, l, o,
        o, i, -l, o,
        l, o, o, -i,
    ) * s;
    let ub = q.adjoint() * u * q;
    let m = ub.transpose() * ub;
    let det = u.determinant();
    let tr = m.trace();
    let g1 = tr * tr / (det * T::lit(16.0));
    let g2 = (tr * tr - (m * m).trace()) / (det * T::lit(4.0));
    (g1, g2)
}

fn kron_vec<T: Real>(a: &CVec<T>, b: &CVec<T>) -> CVec<T> {
    CVec::from_fn(a.len() * b.len(), |r, _| a[r / b.len()] * b[r % b.len()])
}

/// Checks that `J S_z^1 S_z^2` acts as `J Z_d^1 Z_d^2 / 4` on two `N = 1`
/// frames and that evolving for `pi / J` gives a CZ-class gate.
pub fn two_qubit_phase_check<T: Real>(
    spec_a: &SpinBathSpec<T>,
    spec_b: &SpinBathSpec<T>,
    j: T,
) -> Result<TwoQubitReport<T>> {
    let fa = build_frame_n1(spec_a)?;
    let fb = build_frame_n1(spec_b)?;
    let (da, db) = (fa.basis().dim(), fb.basis().dim());
    if da * db > PRODUCT_DIM_LIMIT {
        return Err(Error::DimensionOverflow {
            dim: da * db,
            limit: PRODUCT_DIM_LIMIT,
        });
    }
    let sz = |f: &DressedFrame<T>| -> Result<CMat<T>> {
        Ok(LinearOp::hermitian_from_expr(&spin_expr(0, Component::Z), f.basis())?.to_dense())
    };
    let h = sz(&fa)?.kronecker(&sz(&fb)?) * C::new(j, T::zero());
    let dressed: Vec<CVec<T>> = [fa.ket0(), fa.ket1()]
        .iter()
        .flat_map(|a| [fb.ket0(), fb.ket1()].map(|b| kron_vec(a.amps(), b.amps())))
        .collect();
    let p4 = CMat::from_columns(&dressed);

    let rep = p4.adjoint() * &h * &p4;
    let quarter = j / T::lit(4.0);
    let zz = [T::one(), -T::one(), -T::one(), T::one()];
    let mut rep_error = T::zero();
    for r in 0..4 {
        for c in 0..4 {
            let target = if r == c { quarter * zz[r] } else { T::zero() };
            rep_error = rep_error.max(cabs(rep[(r, c)] - C::new(target, T::zero())));
        }
    }
    let hp = &h * &p4;
    let out = &hp - &p4 * (p4.adjoint() * &hp);
    let leak_residual = out.column_iter().map(|c| c.norm()).fold(T::zero(), |m, v| m.max(v));

    let time = if j == T::zero() { T::zero() } else { T::pi() / j.abs() };
    let u = expm_hermitian(&h, time);
    let block = p4.adjoint() * u * &p4;
    let gate = Matrix4::from_fn(|r, c| block[(r, c)]);
    let unitarity_defect = (gate.adjoint() * gate - Matrix4::identity())
        .iter()
        .fold(T::zero(), |m, &z| m.max(cabs(z)));
    let (g1, g2) = makhlin_invariants(&gate);
    let cz_distance = cabs(g1) + cabs(g2 - C::new(T::one(), T::zero()));
    Ok(TwoQubitReport {
        coupling: j,
        time,
        rep_error,
        leak_residual,
        gate,
        unitarity_defect,
        g1,
        g2,
        cz_distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::spec::normalize_profile;
    use crate::spin::Zeeman;
    use nalgebra::DMatrix;

    fn c(x: f64) -> C<f64> {
        C::new(x, 0.0)
    }

    #[test]
    fn invariants_of_known_gates() {
        let cz = Matrix4::from_diagonal(&nalgebra::Vector4::new(c(1.0), c(1.0), c(1.0), c(-1.0)));
        let (g1, g2) = makhlin_invariants(&cz);
        assert!(g1.norm() < 1e-14 && (g2 - c(1.0)).norm() < 1e-14);
        let (g1, g2) = makhlin_invariants(&Matrix4::<C<f64>>::identity());
        assert!((g1 - c(1.0)).norm() < 1e-14 && (g2 - c(3.0)).norm() < 1e-14);
        #[rustfmt::skip]
        let cnot = Matrix4::new(
            c(1.0), c(0.0), c(0.0), c(0.0),
            c(0.0), c(1.0), c(0.0), c(0.0),
            c(0.0), c(0.0), c(0.0), c(1.0),
            c(0.0), c(0.0), c(1.0), c(0.0),
        );
        let (g1, g2) = makhlin_invariants(&cnot);
        assert!(g1.norm() < 1e-14 && (g2 - c(1.0)).norm() < 1e-14);
    }

    #[test]
    fn zz_coupling_gives_cz_class() {
        let a = SpinBathSpec::<f64>::uniform(2, 1).unwrap();
        let b = SpinBathSpec::new(
            1,
            normalize_profile(&[1.0, 2.0]).unwrap(),
            1.0,
            Zeeman::zero(),
            DMatrix::zeros(2, 2),
        )
        .unwrap();
        let r = two_qubit_phase_check(&a, &b, 0.7).unwrap();
        assert!(r.rep_error < 1e-10);
        assert!(r.leak_residual < 1e-10);
        assert!(r.unitarity_defect < 1e-10);
        assert!(r.cz_distance < 1e-10);
    }

    #[test]
    fn zero_coupling_is_identity() {
        let a = SpinBathSpec::<f64>::uniform(3, 1).unwrap();
        let r = two_qubit_phase_check(&a, &a, 0.0).unwrap();
        assert!((r.gate - Matrix4::identity()).norm() < 1e-12);
    }

    #[test]
    fn product_dimension_limit() {
        let a = SpinBathSpec::<f64>::uniform(64, 1).unwrap();
        assert!(matches!(
            two_qubit_phase_check(&a, &a, 1.0),
            Err(Error::DimensionOverflow { .. })
        ));
    }
}
