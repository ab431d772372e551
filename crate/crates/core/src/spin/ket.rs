use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::scalar::{cabs2, Real, C};
use crate::spin::basis::Basis;

/// Complex state vector over a basis.
#[derive(Clone, Debug, PartialEq)]
pub struct KetState<T: Real = f64> {
    basis: Arc<Basis>,
    amps: DVector<C<T>>,
}

impl<T: Real> KetState<T> {
    pub fn new(basis: Arc<Basis>, amps: DVector<C<T>>) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(Error::BasisMismatch(format!(
                "{} amplitudes for a basis of dimension {}",
                amps.len(),
                basis.dim()
            )));
        }
        Ok(Self { basis, amps })
    }

    pub fn zero(basis: Arc<Basis>) -> Self {
        let n = basis.dim();
        Self {
            basis,
            amps: DVector::zeros(n),
        }
    }

    pub fn basis_state(basis: Arc<Basis>, index: usize) -> Result<Self> {
        if index >= basis.dim() {
            return Err(crate::error::range(
                "basis index",
                format!("{index} >= {}", basis.dim()),
            ));
        }
        let mut k = Self::zero(basis);
        k.amps[index] = C::new(T::one(), T::zero());
        Ok(k)
    }

    pub fn from_config(basis: Arc<Basis>, config: &[u8]) -> Result<Self> {
        let i = basis
            .index_of(config)
            .ok_or_else(|| Error::BasisMismatch(format!("configuration {config:?} not in basis")))?;
        Self::basis_state(basis, i)
    }

    pub fn from_real(basis: Arc<Basis>, amps: &[T]) -> Result<Self> {
        Self::new(
            basis,
            DVector::from_iterator(amps.len(), amps.iter().map(|&a| C::new(a, T::zero()))),
        )
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn amps(&self) -> &DVector<C<T>> {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut DVector<C<T>> {
        &mut self.amps
    }

    pub fn into_amps(self) -> DVector<C<T>> {
        self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm(&self) -> T {
        self.amps.iter().fold(T::zero(), |a, &z| a + cabs2(z)).sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if !(n > T::tol(1e-300)) {
            return Err(Error::Contract("cannot normalize a zero vector".into()));
        }
        Ok(self.scaled(C::new(T::one() / n, T::zero())))
    }

    pub fn scaled(&self, c: C<T>) -> Self {
        Self {
            basis: self.basis.clone(),
            amps: self.amps.map(|z| z * c),
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Result<C<T>> {
        self.basis.check_same(&other.basis)?;
        Ok(self
            .amps
            .iter()
            .zip(other.amps.iter())
            .fold(C::default(), |a, (x, y)| a + x.conj() * y))
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: C<T>, other: &Self) -> Result<Self> {
        self.basis.check_same(&other.basis)?;
        Ok(Self {
            basis: self.basis.clone(),
            amps: &self.amps + other.amps.map(|z| z * c),
        })
    }

    /// `|<self|other>|^2` for normalized states.
    pub fn fidelity(&self, other: &Self) -> Result<T> {
        Ok(cabs2(self.inner(other)?))
    }

    /// Re-express in another basis with the same slot layout (e.g. sector to
    /// full space). Fails if an occupied configuration is missing.
    pub fn embed(&self, target: &Arc<Basis>) -> Result<Self> {
        if !self.basis.same_layout(target) {
            return Err(Error::BasisMismatch("embedding into a different layout".into()));
        }
        let mut out = Self::zero(target.clone());
        for (i, &a) in self.amps.iter().enumerate() {
            if a == C::default() {
                continue;
            }
            let j = target.index_of(self.basis.config(i)).ok_or_else(|| {
                Error::BasisMismatch(format!(
                    "configuration {} absent from target basis",
                    self.basis.label(i)
                ))
            })?;
            out.amps[j] = a;
        }
        Ok(out)
    }

    /// Orthogonal projection onto the configurations of `target`.
    pub fn project(&self, target: &Arc<Basis>) -> Result<Self> {
        if !self.basis.same_layout(target) {
            return Err(Error::BasisMismatch("projection onto a different layout".into()));
        }
        let mut out = Self::zero(target.clone());
        for (i, &a) in self.amps.iter().enumerate() {
            if let Some(j) = target.index_of(self.basis.config(i)) {
                out.amps[j] = a;
            }
        }
        Ok(out)
    }
}
