//! Elementary and collective spin operators.
//!
//! For `I = 1/2` the pair operators of the fermionic representation are the
//! spin operators themselves: `I_+^i` creates the pair `(i, i-bar)`,
//! `I_-^i` removes it and `n_i = I_z^i + 1/2` counts it. For general `I`,
//! `n_i = I_z^i + I` and `[I_-^i, I_+^j] = 2 delta_ij (I - n_i)`. These are
//! realized as spin-algebra identities; no fermionic Fock space is built.

use std::sync::Arc;

use crate::error::{range, Error, Result};
use crate::scalar::Real;
use crate::spin::basis::Basis;
use crate::spin::expr::{Component, SpinExpr};
use crate::spin::linop::LinearOp;
use crate::spin::spec::SpinBathSpec;

/// Slot 0 is the electron, slots `1..=K` are nuclei.
pub const ELECTRON: usize = 0;

pub fn spin_expr<T: Real>(site: usize, comp: Component) -> SpinExpr<T> {
    SpinExpr::single(site, comp)
}

fn check_site<T: Real>(spec: &SpinBathSpec<T>, site: usize) -> Result<()> {
    if site > spec.k() {
        Err(range("site", format!("{site} not in 0..={}", spec.k())))
    } else {
        Ok(())
    }
}

/// Single-site operator on the full space.
pub fn spin_op<T: Real>(spec: &SpinBathSpec<T>, site: usize, comp: Component) -> Result<LinearOp<T>> {
    check_site(spec, site)?;
    let full = Basis::full(spec);
    let op = LinearOp::from_expr(&spin_expr(site, comp), &full, &full)?;
    if comp == Component::Z {
        op.into_hermitian()
    } else {
        Ok(op)
    }
}

/// Single-site operator as a sector-to-sector block: from sector `n_from` to
/// sector `n_from + shift` where the shift is `0`, `+1`, `-1` for `z`, `+`, `-`.
pub fn spin_op_block<T: Real>(
    spec: &SpinBathSpec<T>,
    site: usize,
    comp: Component,
    n_from: usize,
) -> Result<LinearOp<T>> {
    check_site(spec, site)?;
    let n_to = n_from as isize + comp.shift();
    if n_to < 0 {
        return Err(range("pair number", format!("lowering out of sector {n_from}")));
    }
    let dom = Basis::sector(spec, n_from)?;
    let cod = Basis::sector(spec, n_to as usize)?;
    LinearOp::from_expr(&spin_expr(site, comp), &dom, &cod)
}

/// `sum_i row_i I_mu^i / sqrt(2I)` over nuclear slots.
pub fn collective_expr<T: Real>(two_i: u8, row: &[T], comp: Component) -> SpinExpr<T> {
    let scale = T::one() / T::lit(two_i as f64).sqrt();
    row.iter()
        .enumerate()
        .filter(|(_, &r)| r != T::zero())
        .map(|(i, &r)| spin_expr(i + 1, comp).scale(r * scale))
        .sum()
}

fn check_row<T: Real>(spec: &SpinBathSpec<T>, row: &[T]) -> Result<()> {
    if row.len() != spec.k() {
        return Err(Error::InvalidSpec(format!(
            "mode row has length {}, expected K = {}",
            row.len(),
            spec.k()
        )));
    }
    if row.iter().any(|r| !r.is_finite()) {
        return Err(Error::InvalidSpec("mode row not finite".into()));
    }
    Ok(())
}

/// Collective operator `A_{k,mu}` for the mode `row`, materialized between
/// two bases (which may differ in pair number for `+`/`-`).
pub fn collective_op<T: Real>(
    spec: &SpinBathSpec<T>,
    row: &[T],
    comp: Component,
    domain: &Arc<Basis>,
    codomain: &Arc<Basis>,
) -> Result<LinearOp<T>> {
    check_row(spec, row)?;
    LinearOp::from_expr(&collective_expr(spec.two_i(), row, comp), domain, codomain)
}

/// `A_mu` with the hyperfine profile as the mode row.
pub fn hyperfine_mode_expr<T: Real>(spec: &SpinBathSpec<T>, comp: Component) -> SpinExpr<T> {
    collective_expr(spec.two_i(), spec.alpha(), comp)
}

/// `n_i = I_z^i + I`.
pub fn site_pair_expr<T: Real>(spec: &SpinBathSpec<T>, site: usize) -> SpinExpr<T> {
    if site == ELECTRON {
        spin_expr(ELECTRON, Component::Z) + SpinExpr::identity(T::lit(0.5))
    } else {
        spin_expr(site, Component::Z) + SpinExpr::identity(spec.spin())
    }
}

/// Total nuclear pair number `n = sum_i n_i`.
pub fn nuclear_pair_expr<T: Real>(spec: &SpinBathSpec<T>) -> SpinExpr<T> {
    (1..=spec.k()).map(|i| site_pair_expr(spec, i)).sum()
}

/// `N = n + n_0`.
pub fn total_pair_expr<T: Real>(spec: &SpinBathSpec<T>) -> SpinExpr<T> {
    nuclear_pair_expr(spec) + site_pair_expr(spec, ELECTRON)
}

/// `J_z = S_z + sum_i I_z^i`.
pub fn jz_expr<T: Real>(spec: &SpinBathSpec<T>) -> SpinExpr<T> {
    (0..=spec.k()).map(|i| spin_expr(i, Component::Z)).sum()
}

pub struct PairNumberOps<T: Real> {
    pub nuclear: LinearOp<T>,
    pub total: LinearOp<T>,
    pub jz: LinearOp<T>,
}

/// `(n, N, J_z)` on the full space.
pub fn pair_number_ops<T: Real>(spec: &SpinBathSpec<T>) -> Result<PairNumberOps<T>> {
    let full = Basis::full(spec);
    Ok(PairNumberOps {
        nuclear: LinearOp::hermitian_from_expr(&nuclear_pair_expr(spec), &full)?,
        total: LinearOp::hermitian_from_expr(&total_pair_expr(spec), &full)?,
        jz: LinearOp::hermitian_from_expr(&jz_expr(spec), &full)?,
    })
}
