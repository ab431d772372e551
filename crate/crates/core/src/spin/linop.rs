//! Sparse complex operators (CSR) between two bases.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::{cabs, cabs2, Real, C};
use crate::spin::basis::Basis;
use crate::spin::expr::SpinExpr;
use crate::spin::ket::KetState;

/// Entries at or below this magnitude are not stored.
pub const DROP_TOL: f64 = 1e-14;

/// Hermiticity tolerance for the `hermitian` flag.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct LinearOp<T: Real = f64> {
    domain: Arc<Basis>,
    codomain: Arc<Basis>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C<T>>,
    hermitian: bool,
}

impl<T: Real> LinearOp<T> {
    /// Assemble from `(row, col, value)` triplets; duplicates are summed and
    /// near-zero results dropped.
    pub fn from_triplets(domain: Arc<Basis>, codomain: Arc<Basis>, mut trip: Vec<(usize, usize, C<T>)>) -> Self {
        trip.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let drop = T::tol(DROP_TOL);
        let nrows = codomain.dim();
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut cols = Vec::with_capacity(trip.len());
        let mut vals: Vec<C<T>> = Vec::with_capacity(trip.len());
        let mut rows = Vec::with_capacity(trip.len());
        let mut it = trip.into_iter().peekable();
        while let Some((r, c, mut v)) = it.next() {
            while let Some(&(r2, c2, v2)) = it.peek() {
                if r2 == r && c2 == c {
                    v += v2;
                    it.next();
                } else {
                    break;
                }
            }
            if cabs(v) > drop {
                rows.push(r);
                cols.push(c);
                vals.push(v);
            }
        }
        for &r in &rows {
            row_ptr[r + 1] += 1;
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            domain,
            codomain,
            row_ptr,
            cols,
            vals,
            hermitian: false,
        }
    }

    /// Materialize `P_codomain * expr * P_domain`. Both bases must share the
    /// slot layout; output configurations outside `codomain` are discarded.
    pub fn from_expr(expr: &SpinExpr<T>, domain: &Arc<Basis>, codomain: &Arc<Basis>) -> Result<Self> {
        if !domain.same_layout(codomain) {
            return Err(Error::BasisMismatch(
                "domain and codomain have different slot layouts".into(),
            ));
        }
        if let Some(bad) = expr
            .terms()
            .iter()
            .flat_map(|t| t.factors.iter())
            .find(|f| f.slot >= domain.slots())
        {
            return Err(crate::error::range(
                "site",
                format!("slot {} but basis has {} slots", bad.slot, domain.slots()),
            ));
        }
        let two_s = domain.two_s();
        let mut trip = Vec::new();
        for (j, cfg) in domain.configs().iter().enumerate() {
            for (out, amp) in expr.apply_config(two_s, cfg) {
                if let Some(i) = codomain.index_of(&out) {
                    trip.push((i, j, amp));
                }
            }
        }
        Ok(Self::from_triplets(domain.clone(), codomain.clone(), trip))
    }

    /// As [`from_expr`](Self::from_expr) on a single basis, then validated
    /// and flagged hermitian.
    pub fn hermitian_from_expr(expr: &SpinExpr<T>, basis: &Arc<Basis>) -> Result<Self> {
        Self::from_expr(expr, basis, basis)?.into_hermitian()
    }

    pub fn from_dense(m: &DMatrix<C<T>>, domain: Arc<Basis>, codomain: Arc<Basis>) -> Result<Self> {
        if m.nrows() != codomain.dim() || m.ncols() != domain.dim() {
            return Err(Error::BasisMismatch(format!(
                "dense {}x{} vs bases {}x{}",
                m.nrows(),
                m.ncols(),
                codomain.dim(),
                domain.dim()
            )));
        }
        let mut trip = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                trip.push((i, j, m[(i, j)]));
            }
        }
        Ok(Self::from_triplets(domain, codomain, trip))
    }

    pub fn zero(domain: Arc<Basis>, codomain: Arc<Basis>) -> Self {
        Self::from_triplets(domain, codomain, Vec::new())
    }

    pub fn identity(basis: Arc<Basis>) -> Self {
        let trip = (0..basis.dim()).map(|i| (i, i, C::new(T::one(), T::zero()))).collect();
        let mut op = Self::from_triplets(basis.clone(), basis, trip);
        op.hermitian = true;
        op
    }

    pub fn domain(&self) -> &Arc<Basis> {
        &self.domain
    }

    pub fn codomain(&self) -> &Arc<Basis> {
        &self.codomain
    }

    pub fn nrows(&self) -> usize {
        self.codomain.dim()
    }

    pub fn ncols(&self) -> usize {
        self.domain.dim()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn is_square(&self) -> bool {
        self.domain == self.codomain
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Iterate stored entries as `(row, col, value)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C<T>)> + '_ {
        (0..self.nrows())
            .flat_map(move |r| (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |p| (r, self.cols[p], self.vals[p])))
    }

    pub fn get(&self, row: usize, col: usize) -> C<T> {
        let lo = self.row_ptr[row];
        let hi = self.row_ptr[row + 1];
        match self.cols[lo..hi].binary_search(&col) {
            Ok(p) => self.vals[lo + p],
            Err(_) => C::default(),
        }
    }

    /// `max |M_ij|`.
    pub fn max_abs(&self) -> T {
        self.vals.iter().fold(T::zero(), |m, &v| m.max(cabs(v)))
    }

    /// Frobenius norm.
    pub fn frobenius(&self) -> T {
        self.vals.iter().fold(T::zero(), |m, &v| m + cabs2(v)).sqrt()
    }

    /// `max |M - M^dagger|`.
    pub fn hermiticity_defect(&self) -> T {
        if !self.is_square() {
            return T::max_value().unwrap_or_else(T::one);
        }
        self.entries()
            .fold(T::zero(), |m, (r, c, v)| m.max(cabs(v - self.get(c, r).conj())))
    }

    /// Validate `max |M - M^dagger| < 1e-12` and set the hermitian flag.
    pub fn into_hermitian(mut self) -> Result<Self> {
        let defect = self.hermiticity_defect();
        if defect < T::tol(HERMITIAN_TOL) {
            self.hermitian = true;
            Ok(self)
        } else {
            Err(Error::Contract(format!(
                "operator is not hermitian (max |M - M^dagger| = {defect:e})"
            )))
        }
    }

    pub fn adjoint(&self) -> Self {
        let trip = self.entries().map(|(r, c, v)| (c, r, v.conj())).collect();
        let mut op = Self::from_triplets(self.codomain.clone(), self.domain.clone(), trip);
        op.hermitian = self.hermitian;
        op
    }

    pub fn apply(&self, x: &DVector<C<T>>) -> DVector<C<T>> {
        assert_eq!(x.len(), self.ncols(), "vector length does not match operator domain");
        DVector::from_iterator(
            self.nrows(),
            (0..self.nrows()).map(|r| {
                let mut acc = C::default();
                for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                    acc += self.vals[p] * x[self.cols[p]];
                }
                acc
            }),
        )
    }

    pub fn apply_ket(&self, ket: &KetState<T>) -> Result<KetState<T>> {
        self.domain.check_same(ket.basis())?;
        KetState::new(self.codomain.clone(), self.apply(ket.amps()))
    }

    /// `<bra| self |ket>`.
    pub fn matrix_element(&self, bra: &KetState<T>, ket: &KetState<T>) -> Result<C<T>> {
        let out = self.apply_ket(ket)?;
        bra.inner(&out)
    }

    pub fn to_dense(&self) -> DMatrix<C<T>> {
        let mut m = DMatrix::zeros(self.nrows(), self.ncols());
        for (r, c, v) in self.entries() {
            m[(r, c)] = v;
        }
        m
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: C<T>, other: &Self, b: C<T>) -> Result<Self> {
        self.domain.check_same(&other.domain)?;
        self.codomain.check_same(&other.codomain)?;
        let trip = self
            .entries()
            .map(|(r, c, v)| (r, c, v * a))
            .chain(other.entries().map(|(r, c, v)| (r, c, v * b)))
            .collect();
        let mut op = Self::from_triplets(self.domain.clone(), self.codomain.clone(), trip);
        op.hermitian = self.hermitian && other.hermitian && a.im == T::zero() && b.im == T::zero();
        Ok(op)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let one = C::new(T::one(), T::zero());
        self.combine(one, other, one)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let one = C::new(T::one(), T::zero());
        self.combine(one, other, -one)
    }

    pub fn scale(&self, a: T) -> Self {
        let trip = self.entries().map(|(r, c, v)| (r, c, v * a)).collect();
        let mut op = Self::from_triplets(self.domain.clone(), self.codomain.clone(), trip);
        op.hermitian = self.hermitian;
        op
    }

    /// Operator product `self * rhs` (rhs acts first).
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        self.domain.check_same(&rhs.codomain)?;
        let mut trip = Vec::new();
        for r in 0..self.nrows() {
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                let k = self.cols[p];
                let a = self.vals[p];
                for q in rhs.row_ptr[k]..rhs.row_ptr[k + 1] {
                    trip.push((r, rhs.cols[q], a * rhs.vals[q]));
                }
            }
        }
        Ok(Self::from_triplets(rhs.domain.clone(), self.codomain.clone(), trip))
    }

    /// `[self, other]` for square operators on the same basis.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.matmul(other)?.sub(&other.matmul(self)?)
    }

    /// Block `P_cod * self * P_dom` for bases sharing this operator's layout
    /// (e.g. a sector block of a full-space operator).
    pub fn restrict(&self, domain: &Arc<Basis>, codomain: &Arc<Basis>) -> Result<Self> {
        if !domain.same_layout(&self.domain) || !codomain.same_layout(&self.codomain) {
            return Err(Error::BasisMismatch("restriction to a different layout".into()));
        }
        let col_map: Vec<Option<usize>> = self.domain.configs().iter().map(|c| domain.index_of(c)).collect();
        let mut trip = Vec::new();
        for (r_old, cfg) in self.codomain.configs().iter().enumerate() {
            let Some(r) = codomain.index_of(cfg) else {
                continue;
            };
            for p in self.row_ptr[r_old]..self.row_ptr[r_old + 1] {
                if let Some(c) = col_map[self.cols[p]] {
                    trip.push((r, c, self.vals[p]));
                }
            }
        }
        let mut op = Self::from_triplets(domain.clone(), codomain.clone(), trip);
        op.hermitian = self.hermitian && domain == codomain;
        Ok(op)
    }

    /// Sum of `|M_ij|^2` over entries that leave `basis` (rows outside it,
    /// columns inside). Zero iff the operator maps `basis` into itself.
    pub fn leakage_out_of(&self, basis: &Basis) -> T {
        let mut acc = T::zero();
        for (r, c, v) in self.entries() {
            let inside_c = basis.index_of(self.domain.config(c)).is_some();
            let inside_r = basis.index_of(self.codomain.config(r)).is_some();
            if inside_c && !inside_r {
                acc += cabs2(v);
            }
        }
        acc.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::expr::Component;
    use crate::spin::spec::SpinBathSpec;

    #[test]
    fn duplicates_summed_and_zeros_dropped() {
        let s = SpinBathSpec::<f64>::uniform(2, 1).unwrap();
        let b = Basis::sector(&s, 1).unwrap();
        let one = C::new(1.0, 0.0);
        let op = LinearOp::from_triplets(
            b.clone(),
            b.clone(),
            vec![
                (0, 1, one),
                (0, 1, one),
                (1, 1, one),
                (1, 1, -one),
                (2, 2, C::new(1e-16, 0.0)),
            ],
        );
        assert_eq!(op.nnz(), 1);
        assert_eq!(op.get(0, 1), C::new(2.0, 0.0));
    }

    #[test]
    fn restrict_then_dense_matches_dense_block() {
        let s = SpinBathSpec::<f64>::uniform(3, 1).unwrap();
        let full = Basis::full(&s);
        let sec = Basis::sector(&s, 2).unwrap();
        let e = SpinExpr::<f64>::single(1, Component::Plus) * SpinExpr::single(2, Component::Minus)
            + SpinExpr::single(0, Component::Z);
        let f = LinearOp::from_expr(&e, &full, &full).unwrap();
        let blk = f.restrict(&sec, &sec).unwrap();
        let direct = LinearOp::from_expr(&e, &sec, &sec).unwrap();
        assert!((blk.to_dense() - direct.to_dense()).norm() < 1e-15);
    }

    #[test]
    fn non_hermitian_is_rejected() {
        let s = SpinBathSpec::<f64>::uniform(2, 1).unwrap();
        let full = Basis::full(&s);
        let e = SpinExpr::<f64>::single(1, Component::Plus);
        assert!(matches!(
            LinearOp::hermitian_from_expr(&e, &full),
            Err(Error::Contract(_))
        ));
    }
}
