//! Dense helpers built on nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::{cabs, cabs2, cis, Real, C};

pub type CMat<T> = DMatrix<C<T>>;
pub type CVec<T> = DVector<C<T>>;

/// Eigendecomposition of a Hermitian matrix with eigenvalues ascending and
/// eigenvectors as columns in the same order.
pub fn eigh<T: Real>(m: CMat<T>) -> (DVector<T>, CMat<T>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vals = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vecs = CMat::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        vecs.set_column(c, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Real symmetric variant of [`eigh`].
pub fn eigh_real<T: Real>(m: DMatrix<T>) -> (DVector<T>, DMatrix<T>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vals = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vecs = DMatrix::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        vecs.set_column(c, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// `V diag(f(lambda)) V^dagger` from a Hermitian eigendecomposition.
pub fn spectral_apply<T: Real>(vals: &DVector<T>, vecs: &CMat<T>, f: impl Fn(T) -> C<T>) -> CMat<T> {
    let mut scaled = vecs.clone();
    for (c, &l) in vals.iter().enumerate() {
        let z = f(l);
        scaled.column_mut(c).apply(|x| *x *= z);
    }
    scaled * vecs.adjoint()
}

/// `exp(-i H t)` for Hermitian `H`.
pub fn expm_hermitian<T: Real>(h: &CMat<T>, t: T) -> CMat<T> {
    let (vals, vecs) = eigh(h.clone());
    spectral_apply(&vals, &vecs, |l| cis(-l * t))
}

/// Largest singular value.
pub fn spectral_norm<T: Real>(m: &CMat<T>) -> T {
    if m.is_empty() {
        return T::zero();
    }
    let g = if m.nrows() >= m.ncols() {
        m.adjoint() * m
    } else {
        m * m.adjoint()
    };
    let (vals, _) = eigh(g);
    vals.iter().fold(T::zero(), |a, &v| a.max(v)).max(T::zero()).sqrt()
}

pub fn max_abs<T: Real>(m: &CMat<T>) -> T {
    m.iter().fold(T::zero(), |a, &z| a.max(cabs(z)))
}

pub fn vdot<T: Real>(a: &CVec<T>, b: &CVec<T>) -> C<T> {
    a.iter().zip(b.iter()).fold(C::default(), |s, (x, y)| s + x.conj() * y)
}

pub fn vnorm<T: Real>(a: &CVec<T>) -> T {
    a.iter().fold(T::zero(), |s, &x| s + cabs2(x)).sqrt()
}

/// Orthogonalize `v` against orthonormal `basis` (two passes).
pub fn orthogonalize<T: Real>(v: &mut CVec<T>, basis: &[CVec<T>]) {
    for _ in 0..2 {
        for b in basis {
            let c = vdot(b, v);
            v.axpy(-c, b, C::new(T::one(), T::zero()));
        }
    }
}

/// Completes `seed` (orthonormal) to an orthonormal basis of `C^n` with
/// unit vectors, choosing at each step the candidate with the largest
/// residual (ties: lowest index). Deterministic.
pub fn complete_basis<T: Real>(seed: &[CVec<T>], n: usize) -> Result<Vec<CVec<T>>> {
    let mut out: Vec<CVec<T>> = seed.to_vec();
    let mut used = vec![false; n];
    while out.len() < n {
        let mut best: Option<(usize, T, CVec<T>)> = None;
        for j in 0..n {
            if used[j] {
                continue;
            }
            let mut e = CVec::zeros(n);
            e[j] = C::new(T::one(), T::zero());
            orthogonalize(&mut e, &out);
            let r = vnorm(&e);
            if best.as_ref().is_none_or(|(_, br, _)| r > *br) {
                best = Some((j, r, e));
            }
        }
        let (j, r, e) = best.ok_or_else(|| Error::Contract("basis completion exhausted".into()))?;
        if r < T::tol(1e-8) {
            return Err(Error::Contract("seed vectors are not independent".into()));
        }
        used[j] = true;
        out.push(e / C::new(r, T::zero()));
    }
    Ok(out)
}

/// Real Gram-Schmidt completion of a unit row to a `K x K` orthogonal matrix
/// whose row 0 is `row`.
pub fn complete_orthogonal_rows<T: Real>(row: &[T]) -> Result<DMatrix<T>> {
    let k = row.len();
    let seed = CVec::from_iterator(k, row.iter().map(|&a| C::new(a, T::zero())));
    let n = vnorm(&seed);
    if (n - T::one()).abs() > T::tol(1e-10) {
        return Err(Error::Contract("mode row must be normalized".into()));
    }
    let cols = complete_basis(&[seed], k)?;
    Ok(DMatrix::from_fn(k, k, |r, c| cols[r][c].re))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigh_reconstructs_and_sorts() {
        let m = CMat::<f64>::from_row_slice(
            2,
            2,
            &[C::new(2.0, 0.0), C::new(0.0, 1.0), C::new(0.0, -1.0), C::new(-1.0, 0.0)],
        );
        let (vals, vecs) = eigh(m.clone());
        assert!(vals[0] <= vals[1]);
        let back = spectral_apply(&vals, &vecs, |l| C::new(l, 0.0));
        assert!(max_abs(&(back - m)) < 1e-13);
    }

    #[test]
    fn orthogonal_completion() {
        let row = [0.6, 0.0, 0.8];
        let m = complete_orthogonal_rows(&row).unwrap();
        assert!((&m * m.transpose() - DMatrix::identity(3, 3)).amax() < 1e-14);
        assert_eq!(m.row(0).iter().copied().collect::<Vec<_>>(), row.to_vec());
    }

    #[test]
    fn spectral_norm_of_rank_one() {
        let v = CVec::<f64>::from_vec(vec![C::new(3.0, 0.0), C::new(0.0, 4.0)]);
        let m = &v * v.adjoint();
        assert!((spectral_norm(&m) - 25.0).abs() < 1e-12);
    }
}
