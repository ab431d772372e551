//! Hamiltonian terms of the electron + nuclear-bath system.
//!
//! `H = H_B + H_I + H_nuc` with
//!
//! * `H_B = g* mu_B B S_z + g_n mu_n B I_z`
//! * `H_I = A sqrt(2I) (A_z S_z + V_f)`, `V_f = (A_+ S_- + A_- S_+) / 2`
//! * `H_nuc = sum_{i<j} b_ij (I_+^i I_-^j + I_-^i I_+^j - 4 I_z^i I_z^j)`
//!
//! and the dominant part `H_D = F S_z + A sqrt(2I) V_f`. Every term conserves
//! the total pair number, so each builder can be materialized directly on a
//! sector basis.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spin::ops::{hyperfine_mode_expr, spin_expr, ELECTRON};
use crate::spin::{Basis, Component, LinearOp, SpinBathSpec, SpinExpr};

pub fn zeeman_expr<T: Real>(spec: &SpinBathSpec<T>) -> SpinExpr<T> {
    let z = spec.zeeman();
    let electron = spin_expr(ELECTRON, Component::Z).scale(z.electron_moment() * z.b);
    let nuclear: SpinExpr<T> = (1..=spec.k())
        .map(|i| spin_expr(i, Component::Z))
        .sum::<SpinExpr<T>>()
        .scale(z.nuclear_moment() * z.b);
    electron + nuclear
}

pub fn build_zeeman<T: Real>(spec: &SpinBathSpec<T>, basis: &Arc<Basis>) -> Result<LinearOp<T>> {
    LinearOp::hermitian_from_expr(&zeeman_expr(spec), basis)
}

/// `V_f = (A_+ S_- + A_- S_+) / 2`.
pub fn flipflop_expr<T: Real>(spec: &SpinBathSpec<T>) -> SpinExpr<T> {
    let half = T::lit(0.5);
    (hyperfine_mode_expr(spec, Component::Plus) * spin_expr(ELECTRON, Component::Minus)).scale(half)
        + (hyperfine_mode_expr(spec, Component::Minus) * spin_expr(ELECTRON, Component::Plus)).scale(half)
}

/// `A_z S_z`.
pub fn overhauser_expr<T: Real>(spec: &SpinBathSpec<T>) -> SpinExpr<T> {
    hyperfine_mode_expr(spec, Component::Z) * spin_expr(ELECTRON, Component::Z)
}

#[derive(Clone, Debug)]
pub struct Hyperfine<T: Real> {
    /// `A sqrt(2I) (A_z S_z + V_f)`
    pub full: LinearOp<T>,
    /// `A sqrt(2I) A_z S_z`
    pub zz: LinearOp<T>,
    /// `A sqrt(2I) V_f`
    pub flipflop: LinearOp<T>,
}

pub fn build_hyperfine<T: Real>(spec: &SpinBathSpec<T>, basis: &Arc<Basis>) -> Result<Hyperfine<T>> {
    let c = spec.flip_amplitude();
    let zz_e = overhauser_expr(spec).scale(c);
    let ff_e = flipflop_expr(spec).scale(c);
    let full = LinearOp::hermitian_from_expr(&(zz_e.clone() + ff_e.clone()), basis)?;
    Ok(Hyperfine {
        full,
        zz: LinearOp::hermitian_from_expr(&zz_e, basis)?,
        flipflop: LinearOp::hermitian_from_expr(&ff_e, basis)?,
    })
}

pub fn dipolar_expr<T: Real>(spec: &SpinBathSpec<T>) -> SpinExpr<T> {
    let b = spec.dipolar();
    let mut e = SpinExpr::zero();
    for i in 0..spec.k() {
        for j in (i + 1)..spec.k() {
            let bij = b[(i, j)];
            if bij == T::zero() {
                continue;
            }
            let (si, sj) = (i + 1, j + 1);
            let flip = spin_expr(si, Component::Plus) * spin_expr(sj, Component::Minus)
                + spin_expr(si, Component::Minus) * spin_expr(sj, Component::Plus);
            let zz = (spin_expr(si, Component::Z) * spin_expr(sj, Component::Z)).scale(T::lit(-4.0));
            e = e + (flip + zz).scale(bij);
        }
    }
    e
}

pub fn build_dipolar<T: Real>(spec: &SpinBathSpec<T>, basis: &Arc<Basis>) -> Result<LinearOp<T>> {
    LinearOp::hermitian_from_expr(&dipolar_expr(spec), basis)
}

/// `H_D = F S_z + A sqrt(2I) V_f`; the conserved `g_n mu_n B J_z` is dropped.
pub fn dominant_expr<T: Real>(spec: &SpinBathSpec<T>, f: T) -> SpinExpr<T> {
    spin_expr(ELECTRON, Component::Z).scale(f) + flipflop_expr(spec).scale(spec.flip_amplitude())
}

pub fn build_dominant<T: Real>(spec: &SpinBathSpec<T>, f: T, basis: &Arc<Basis>) -> Result<LinearOp<T>> {
    LinearOp::hermitian_from_expr(&dominant_expr(spec, f), basis)
}

/// `H_B + H_I + H_nuc`.
pub fn total_expr<T: Real>(spec: &SpinBathSpec<T>) -> SpinExpr<T> {
    let c = spec.flip_amplitude();
    zeeman_expr(spec) + (overhauser_expr(spec) + flipflop_expr(spec)).scale(c) + dipolar_expr(spec)
}

pub fn build_total<T: Real>(spec: &SpinBathSpec<T>, basis: &Arc<Basis>) -> Result<LinearOp<T>> {
    LinearOp::hermitian_from_expr(&total_expr(spec), basis)
}

/// Effective field on the electron including the Overhauser shift.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectiveField<T> {
    pub b_eff: T,
    /// `F = g* mu_B B_eff - g_n mu_n B`
    pub f: T,
}

/// `B_eff = B - A sum_i alpha_i (I + alpha_i^2 / 2) / (g* mu_B)` and the
/// corresponding detuning `F`.
pub fn effective_field<T: Real>(spec: &SpinBathSpec<T>) -> Result<EffectiveField<T>> {
    let z = spec.zeeman();
    let ge = z.electron_moment();
    if ge == T::zero() {
        return Err(Error::InvalidSpec("g* mu_B must be nonzero".into()));
    }
    let i = spec.spin();
    let shift = spec
        .alpha()
        .iter()
        .fold(T::zero(), |acc, &a| acc + a * (i + a * a / T::lit(2.0)));
    let b_eff = z.b - spec.a_hf() * shift / ge;
    Ok(EffectiveField {
        b_eff,
        f: ge * b_eff - z.nuclear_moment() * z.b,
    })
}

/// Nuclear positions for geometry-derived dipolar couplings.
#[derive(Clone, Debug, PartialEq)]
pub struct DotGeometry<T> {
    pub positions: Vec<[T; 3]>,
    pub prefactor: T,
}

impl<T: Real> DotGeometry<T> {
    /// Parse `x y z` per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str, prefactor: T) -> Result<Self> {
        let mut positions = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::Parse(format!("line {}: bad number {t:?}", ln + 1)))
                })
                .collect::<Result<_>>()?;
            if vals.len() != 3 {
                return Err(Error::Parse(format!(
                    "line {}: expected 3 coordinates, got {}",
                    ln + 1,
                    vals.len()
                )));
            }
            positions.push([T::lit(vals[0]), T::lit(vals[1]), T::lit(vals[2])]);
        }
        Ok(Self { positions, prefactor })
    }
}

/// `b_ij = prefactor (3 cos^2 theta_ij - 1) / r_ij^3`, with `theta_ij` the
/// zenith angle of `r_j - r_i`.
pub fn dipolar_from_geometry<T: Real>(geom: &DotGeometry<T>) -> Result<DMatrix<T>> {
    let k = geom.positions.len();
    let mut b = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in (i + 1)..k {
            let p = geom.positions[i];
            let q = geom.positions[j];
            let d = [q[0] - p[0], q[1] - p[1], q[2] - p[2]];
            let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
            if !(r2 > T::zero()) {
                return Err(Error::InvalidSpec(format!("nuclei {i} and {j} coincide")));
            }
            let r = r2.sqrt();
            let cos2 = d[2] * d[2] / r2;
            let v = geom.prefactor * (T::lit(3.0) * cos2 - T::one()) / (r2 * r);
            b[(i, j)] = v;
            b[(j, i)] = v;
        }
    }
    Ok(b)
}

/// Dipolar couplings engineered so that every nucleus sees the same mean
/// field (`sum_n b_ni = b_bar`) and the hyperfine profile is an eigenvector
/// (`sum_i b_ni alpha_i = b_tilde alpha_n`).
#[derive(Clone, Debug)]
pub struct ConstrainedDipolar<T> {
    pub b: DMatrix<T>,
    /// Achieved mean-field constant (mean row sum).
    pub b_bar: T,
    /// Achieved eigenvalue `alpha^T b alpha`.
    pub b_tilde: T,
    /// `max_n |sum_i b_ni - b_bar|`
    pub row_residual: T,
    /// `max_n |sum_i b_ni alpha_i - b_bar alpha_n|`
    pub eigen_residual: T,
}

pub const CONSTRAINT_TOL: f64 = 1e-8;

/// Minimum-norm symmetric zero-diagonal solution of both constraint
/// families with `b_tilde = b_bar`.
pub fn constrained_dipolar<T: Real>(alpha: &[T], b_bar: T) -> Result<ConstrainedDipolar<T>> {
    let k = alpha.len();
    project_dipolar(&DMatrix::zeros(k, k), alpha, b_bar)
}

/// Closest (Frobenius on the upper triangle) symmetric zero-diagonal matrix
/// to `prior` that satisfies both constraint families.
pub fn project_dipolar<T: Real>(prior: &DMatrix<T>, alpha: &[T], b_bar: T) -> Result<ConstrainedDipolar<T>> {
    let k = alpha.len();
    if k < 2 || prior.nrows() != k || prior.ncols() != k {
        return Err(Error::InvalidSpec("dipolar constraint dimensions".into()));
    }
    let norm2 = alpha.iter().fold(T::zero(), |a, &x| a + x * x);
    if (norm2 - T::one()).abs() > T::tol(1e-10) {
        return Err(Error::InvalidSpec("alpha must be normalized".into()));
    }
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| ((i + 1)..k).map(move |j| (i, j))).collect();
    let m = pairs.len();
    let mut a = DMatrix::<T>::zeros(2 * k, m);
    for (p, &(i, j)) in pairs.iter().enumerate() {
        a[(i, p)] = T::one();
        a[(j, p)] = T::one();
        a[(k + i, p)] = alpha[j];
        a[(k + j, p)] = alpha[i];
    }
    let mut rhs = DVector::<T>::zeros(2 * k);
    for n in 0..k {
        rhs[n] = b_bar;
        rhs[k + n] = b_bar * alpha[n];
    }
    let x0 = DVector::from_iterator(m, pairs.iter().map(|&(i, j)| prior[(i, j)]));
    // minimum-norm correction A^T (A A^T)^+ r, refined once
    let eig = (&a * a.transpose()).symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    let cut = top * T::tol(1e-12);
    let pinv = |r: &DVector<T>| {
        let mut c = eig.eigenvectors.transpose() * r;
        for (ci, &l) in c.iter_mut().zip(eig.eigenvalues.iter()) {
            *ci = if l > cut { *ci / l } else { T::zero() };
        }
        a.transpose() * (&eig.eigenvectors * c)
    };
    let mut x = x0.clone() + pinv(&(&rhs - &a * &x0));
    x += pinv(&(&rhs - &a * &x));
    let mut b = DMatrix::zeros(k, k);
    for (p, &(i, j)) in pairs.iter().enumerate() {
        b[(i, j)] = x[p];
        b[(j, i)] = x[p];
    }
    let residuals: Vec<T> = (&a * &x - &rhs).iter().map(|r| r.abs()).collect();
    let row_residual = residuals[..k].iter().fold(T::zero(), |m, &r| m.max(r));
    let eigen_residual = residuals[k..].iter().fold(T::zero(), |m, &r| m.max(r));
    let tol = T::tol(CONSTRAINT_TOL) * b_bar.abs().max(T::one());
    if row_residual > tol || eigen_residual > tol {
        return Err(Error::Infeasible {
            tol: CONSTRAINT_TOL,
            residuals: residuals.iter().map(|r| r.to_f64_lossy()).collect(),
        });
    }
    let av = DVector::from_column_slice(alpha);
    let b_tilde = (av.transpose() * &b * &av)[(0, 0)];
    let b_bar_achieved = b.row_sum().iter().fold(T::zero(), |s, &v| s + v) / T::lit(k as f64);
    Ok(ConstrainedDipolar {
        b,
        b_bar: b_bar_achieved,
        b_tilde,
        row_residual,
        eigen_residual,
    })
}
