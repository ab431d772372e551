//! Exact time evolution `exp(-i H t) psi` (hbar = 1).
//!
//! Dense eigendecomposition up to [`EXACT_DIM_LIMIT`], Lanczos/Krylov
//! time stepping above it.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::{cabs, cis, Real, C};
use crate::spin::ket::KetState;
use crate::spin::linalg::{eigh, eigh_real, spectral_apply, vdot, vnorm, CMat, CVec};
use crate::spin::linop::LinearOp;

pub const EXACT_DIM_LIMIT: usize = 4096;
pub const KRYLOV_TOL: f64 = 1e-10;
pub const KRYLOV_MAX_DIM: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Method {
    /// Exact below [`EXACT_DIM_LIMIT`], Krylov above.
    #[default]
    Auto,
    Exact,
    Krylov,
}

/// Reusable propagator; caches the eigendecomposition in exact mode.
#[derive(Clone, Debug)]
pub struct Propagator<T: Real = f64> {
    h: LinearOp<T>,
    spectral: Option<(DVector<T>, CMat<T>)>,
}

impl<T: Real> Propagator<T> {
    pub fn new(h: &LinearOp<T>) -> Result<Self> {
        Self::with_method(h, Method::Auto)
    }

    pub fn with_method(h: &LinearOp<T>, method: Method) -> Result<Self> {
        if !h.is_hermitian() {
            return Err(Error::Contract(
                "propagation requires an operator flagged hermitian".into(),
            ));
        }
        let exact = match method {
            Method::Exact => true,
            Method::Krylov => false,
            Method::Auto => h.nrows() <= EXACT_DIM_LIMIT,
        };
        let spectral = exact.then(|| eigh(h.to_dense()));
        Ok(Self { h: h.clone(), spectral })
    }

    pub fn hamiltonian(&self) -> &LinearOp<T> {
        &self.h
    }

    pub fn eigenvalues(&self) -> Option<&DVector<T>> {
        self.spectral.as_ref().map(|(v, _)| v)
    }

    /// Dense `exp(-i H t)`; exact mode only.
    pub fn unitary(&self, t: T) -> Result<CMat<T>> {
        let (vals, vecs) = self
            .spectral
            .as_ref()
            .ok_or_else(|| Error::Contract("dense unitary needs exact mode".into()))?;
        Ok(spectral_apply(vals, vecs, |l| cis(-l * t)))
    }

    pub fn evolve(&self, psi: &KetState<T>, t: T) -> Result<KetState<T>> {
        self.h.domain().check_same(psi.basis())?;
        if t == T::zero() {
            return Ok(psi.clone());
        }
        let amps = match &self.spectral {
            Some((vals, vecs)) => {
                let mut coef = vecs.adjoint() * psi.amps();
                for (c, &l) in coef.iter_mut().zip(vals.iter()) {
                    *c *= cis(-l * t);
                }
                vecs * coef
            }
            None => krylov_expm(&self.h, psi.amps(), t, T::tol(KRYLOV_TOL), KRYLOV_MAX_DIM)?,
        };
        KetState::new(psi.basis().clone(), amps)
    }
}

/// `exp(-i H t) psi` for a hermitian-flagged `H`.
pub fn propagate<T: Real>(h: &LinearOp<T>, psi: &KetState<T>, t: T) -> Result<KetState<T>> {
    Propagator::new(h)?.evolve(psi, t)
}

/// Lanczos approximation of `exp(-i H t) v` with adaptive time stepping.
///
/// Each step builds a Krylov space of dimension at most `max_dim`; the step
/// is halved until the a-posteriori estimate `beta_m |e_m^T exp(-i T dt) e_1|`
/// falls below `tol * |dt| / |t|`. Invariant-subspace breakdown gives an exact
/// step.
pub fn krylov_expm<T: Real>(h: &LinearOp<T>, v: &CVec<T>, t: T, tol: T, max_dim: usize) -> Result<CVec<T>> {
    let mut x = v.clone();
    let total = t.abs();
    let sign = if t < T::zero() { -T::one() } else { T::one() };
    let mut done = T::zero();
    let mut guard = 0usize;
    while done < total {
        guard += 1;
        if guard > 100_000 {
            return Err(Error::NoConvergence {
                iterations: guard,
                last: f64::NAN,
                history: Vec::new(),
            });
        }
        let beta0 = vnorm(&x);
        if beta0 == T::zero() {
            return Ok(x);
        }
        let m_cap = max_dim.min(x.len()).max(1);
        let mut basis: Vec<CVec<T>> = vec![&x / C::new(beta0, T::zero())];
        let mut alphas: Vec<T> = Vec::new();
        let mut betas: Vec<T> = Vec::new();
        let scale = h.max_abs().max(T::one());
        let mut breakdown = false;
        for j in 0..m_cap {
            let mut w = h.apply(&basis[j]);
            let a = vdot(&basis[j], &w).re;
            alphas.push(a);
            // full reorthogonalization
            for _ in 0..2 {
                for b in &basis {
                    let c = vdot(b, &w);
                    w.axpy(-c, b, C::new(T::one(), T::zero()));
                }
            }
            let bnorm = vnorm(&w);
            if bnorm <= T::tol(1e-13) * scale {
                breakdown = true;
                break;
            }
            betas.push(bnorm);
            if j + 1 < m_cap {
                basis.push(w / C::new(bnorm, T::zero()));
            }
        }
        let m = alphas.len();
        let mut tri = DMatrix::<T>::zeros(m, m);
        for i in 0..m {
            tri[(i, i)] = alphas[i];
            if i + 1 < m {
                tri[(i, i + 1)] = betas[i];
                tri[(i + 1, i)] = betas[i];
            }
        }
        let (lam, q) = eigh_real(tri);
        let coeffs = |dt: T| -> CVec<T> {
            CVec::from_iterator(
                m,
                (0..m).map(|r| {
                    (0..m).fold(C::default(), |acc, c| {
                        acc + cis(-lam[c] * dt * sign) * (q[(r, c)] * q[(0, c)])
                    })
                }),
            )
        };
        let mut dt = total - done;
        let y = loop {
            let y = coeffs(dt);
            if breakdown || m == x.len() {
                break y;
            }
            let err = betas[m - 1] * cabs(y[m - 1]) * beta0;
            if err <= tol * dt / total || dt < total * T::tol(1e-12) {
                break y;
            }
            dt /= T::lit(2.0);
        };
        let mut next = CVec::zeros(x.len());
        for (i, b) in basis.iter().enumerate().take(m) {
            next.axpy(y[i] * beta0, b, C::new(T::one(), T::zero()));
        }
        x = next;
        done += dt;
    }
    Ok(x)
}
