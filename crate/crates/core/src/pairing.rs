//! Induced nuclear pairing and the BCS description (`I = 1/2`).
//!
//! Eliminating the flip-flop term to second order (Fröhlich /
//! Schrieffer-Wolff) with `S = -(A/F) sqrt(I/2) (A_- S_+ - A_+ S_-)` leaves,
//! for the electron down, `V_eff = -(A^2 I / 2F) A_+ A_-`. With
//! `I_+^i I_-^j` read as pair transfer `c_i^dag c_ibar^dag c_jbar c_j` the bath
//! becomes the pairing Hamiltonian
//!
//! ```text
//! H_eff = sum_i eps_i n_i - 2 sum_{i != j} b_ij n_i n_j - sum_{i,j} g_ij P_i^dag P_j
//! eps_i = -A alpha_i / 2 - 2 sum_{j != i} (b_ij + b_ji)
//! g_ij  = (A^2 / 4F) alpha_i alpha_j + b_ij
//! ```
//!
//! Positive `g_ij` is attractive. The pair sum includes `i = j`, matching
//! the diagonal part of `A_+ A_-`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{range, Error, Result};
use crate::hamiltonians::{dipolar_expr, dominant_expr};
use crate::scalar::{Real, C};
use crate::spin::linalg::eigh;
use crate::spin::ops::{hyperfine_mode_expr, spin_expr, ELECTRON};
use crate::spin::{Basis, Component, KetState, LinearOp, SpinBathSpec, SpinExpr};

/// `S` (as printed) and `V_eff`.
#[derive(Clone, Debug)]
pub struct Froehlich<T: Real> {
    pub generator: SpinExpr<T>,
    /// Bath-only operator `-(A^2 I / 2F) A_+ A_-`.
    pub v_eff: SpinExpr<T>,
}

impl<T: Real> Froehlich<T> {
    pub fn v_eff_op(&self, basis: &Arc<Basis>) -> Result<LinearOp<T>> {
        LinearOp::hermitian_from_expr(&self.v_eff, basis)
    }
}

pub fn froehlich_effective<T: Real>(spec: &SpinBathSpec<T>, f: T) -> Result<Froehlich<T>> {
    if f == T::zero() {
        return Err(Error::SingularDetuning);
    }
    let a = spec.a_hf();
    let i = spec.spin();
    let ap = hyperfine_mode_expr(spec, Component::Plus);
    let am = hyperfine_mode_expr(spec, Component::Minus);
    let c = -(a / f) * (i / T::lit(2.0)).sqrt();
    let generator = (am.clone() * spin_expr(ELECTRON, Component::Plus)
        - ap.clone() * spin_expr(ELECTRON, Component::Minus))
    .scale(c);
    let v_eff = (ap * am).scale(-a * a * i / (T::lit(2.0) * f));
    Ok(Froehlich { generator, v_eff })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FroehlichCheck<T> {
    pub a_over_f: T,
    /// Exact low-branch energies of `H_D` minus `-F/2`.
    pub exact_shift: Vec<T>,
    /// Eigenvalues of `V_eff` in the matching bath sector.
    pub effective_shift: Vec<T>,
    /// `max |exact - effective| / max |effective|`.
    pub rel_error: T,
}

/// Compares the `dim(n)` lowest eigenvalues of `H_D` in sector `N` (the
/// electron-down branch for `F > 0`) with `-F/2 + eig(V_eff)` on the bath
/// sector `n = N`.
pub fn froehlich_check<T: Real>(spec: &SpinBathSpec<T>, f: T, n: usize) -> Result<FroehlichCheck<T>> {
    if !(f > T::zero()) {
        return Err(range("detuning", "the comparison needs F > 0"));
    }
    let fr = froehlich_effective(spec, f)?;
    let sector = Basis::sector(spec, n)?;
    let bath = Basis::nuclear_sector(spec, n)?;
    let hd = LinearOp::hermitian_from_expr(&dominant_expr(spec, f), &sector)?;
    let (exact, _) = eigh(hd.to_dense());
    let (eff, _) = eigh(fr.v_eff_op(&bath)?.to_dense());
    let half_f = f / T::lit(2.0);
    let exact_shift: Vec<T> = exact.iter().take(eff.len()).map(|&e| e + half_f).collect();
    let effective_shift: Vec<T> = eff.iter().copied().collect();
    let scale = effective_shift.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    let err = exact_shift
        .iter()
        .zip(&effective_shift)
        .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()));
    Ok(FroehlichCheck {
        a_over_f: spec.a_hf() / f,
        exact_shift,
        effective_shift,
        rel_error: if scale > T::zero() { err / scale } else { err },
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairingModel<T: Real = f64> {
    eps: Vec<T>,
    g: DMatrix<T>,
    b: DMatrix<T>,
    n_target: T,
}

impl<T: Real> PairingModel<T> {
    pub fn new(eps: Vec<T>, g: DMatrix<T>, b: DMatrix<T>, n_target: T) -> Result<Self> {
        let k = eps.len();
        if k < 1 || g.shape() != (k, k) || b.shape() != (k, k) {
            return Err(Error::InvalidSpec("pairing model dimensions".into()));
        }
        if eps.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidSpec("eps must be finite".into()));
        }
        let tol = T::tol(1e-12);
        for i in 0..k {
            for j in 0..k {
                if (g[(i, j)] - g[(j, i)]).abs() > tol || (b[(i, j)] - b[(j, i)]).abs() > tol {
                    return Err(Error::InvalidSpec("g and b must be symmetric".into()));
                }
            }
        }
        Ok(Self { eps, g, b, n_target })
    }

    /// `alpha_i = 1/sqrt(K)` and `b_ij = b`, with the pairing channel
    /// `g_ij = A^2/(4FK) + b` for every `i, j` (diagonal included).
    pub fn uniform(k: usize, a_hf: T, f: T, b: T, n_target: T) -> Result<Self> {
        if f == T::zero() {
            return Err(Error::SingularDetuning);
        }
        let kk = T::lit(k as f64);
        let eps = -a_hf / (T::lit(2.0) * kk.sqrt()) - T::lit(4.0) * (kk - T::one()) * b;
        let g = a_hf * a_hf / (T::lit(4.0) * f * kk) + b;
        let bm = DMatrix::from_fn(k, k, |i, j| if i == j { T::zero() } else { b });
        Self::new(vec![eps; k], DMatrix::from_element(k, k, g), bm, n_target)
    }

    pub fn k(&self) -> usize {
        self.eps.len()
    }

    pub fn eps(&self) -> &[T] {
        &self.eps
    }

    pub fn g(&self) -> &DMatrix<T> {
        &self.g
    }

    pub fn b(&self) -> &DMatrix<T> {
        &self.b
    }

    pub fn n_target(&self) -> T {
        self.n_target
    }

    pub fn with_n_target(mut self, n: T) -> Self {
        self.n_target = n;
        self
    }

    /// `H_eff` built as a spin operator from `n_i = I_z^i + 1/2` and
    /// `P_i^dag P_j = I_+^i I_-^j`.
    pub fn spin_hamiltonian_expr(&self) -> SpinExpr<T> {
        let k = self.k();
        let mut e = SpinExpr::zero();
        for i in 0..k {
            let ni = spin_expr(i + 1, Component::Z) + SpinExpr::identity(T::lit(0.5));
            e = e + ni.clone().scale(self.eps[i]);
            for j in 0..k {
                if i != j && self.b[(i, j)] != T::zero() {
                    let nj = spin_expr(j + 1, Component::Z) + SpinExpr::identity(T::lit(0.5));
                    e = e + (ni.clone() * nj).scale(T::lit(-2.0) * self.b[(i, j)]);
                }
                if self.g[(i, j)] != T::zero() {
                    let pp = spin_expr(i + 1, Component::Plus) * spin_expr(j + 1, Component::Minus);
                    e = e + pp.scale(-self.g[(i, j)]);
                }
            }
        }
        e
    }

    /// `H_eff` assembled directly in the pair-occupation language.
    pub fn pair_hamiltonian(&self, basis: &Arc<Basis>) -> Result<LinearOp<T>> {
        let k = self.k();
        if basis.slots() != k + 1 || basis.two_s()[1..].iter().any(|&s| s != 1) {
            return Err(Error::BasisMismatch("pairing needs a spin-1/2 bath basis".into()));
        }
        let mut trip = Vec::new();
        for (col, cfg) in basis.configs().iter().enumerate() {
            let occ = &cfg[1..];
            let mut diag = T::zero();
            for i in 0..k {
                if occ[i] == 0 {
                    continue;
                }
                diag += self.eps[i] - self.g[(i, i)];
                for (j, &qj) in occ.iter().enumerate() {
                    if j != i && qj == 1 {
                        diag -= T::lit(2.0) * self.b[(i, j)];
                    }
                }
            }
            trip.push((col, col, C::new(diag, T::zero())));
            for j in 0..k {
                if occ[j] != 1 {
                    continue;
                }
                for i in 0..k {
                    if i == j || occ[i] != 0 || self.g[(i, j)] == T::zero() {
                        continue;
                    }
                    let mut to = cfg.to_vec();
                    to[j + 1] = 0;
                    to[i + 1] = 1;
                    if let Some(row) = basis.index_of(&to) {
                        trip.push((row, col, C::new(-self.g[(i, j)], T::zero())));
                    }
                }
            }
        }
        LinearOp::from_triplets(basis.clone(), basis.clone(), trip).into_hermitian()
    }
}

/// Pairing model of a bath: `eps`, `g` from the closed forms (diagonal
/// `g_ii = A^2 alpha_i^2 / 4F`), `n_target = K/2`. Also builds `H_eff` both
/// ways on the full bath space and requires entrywise agreement.
pub fn build_pairing_model<T: Real>(spec: &SpinBathSpec<T>, f: T) -> Result<PairingModel<T>> {
    if spec.two_i() != 1 {
        return Err(Error::Unsupported("pairing model requires I = 1/2".into()));
    }
    if f == T::zero() {
        return Err(Error::SingularDetuning);
    }
    let k = spec.k();
    let a = spec.alpha();
    let b = spec.dipolar();
    let c = spec.a_hf() * spec.a_hf() / (T::lit(4.0) * f);
    let eps: Vec<T> = (0..k)
        .map(|i| {
            let s = (0..k)
                .filter(|&j| j != i)
                .fold(T::zero(), |acc, j| acc + b[(i, j)] + b[(j, i)]);
            -spec.a_hf() * a[i] / T::lit(2.0) - T::lit(2.0) * s
        })
        .collect();
    let g = DMatrix::from_fn(k, k, |i, j| c * a[i] * a[j] + b[(i, j)]);
    let model = PairingModel::new(eps, g, b.clone(), T::lit(k as f64) / T::lit(2.0))?;
    if k <= 12 {
        let basis = Basis::nuclear_full(spec);
        let spin = LinearOp::hermitian_from_expr(&model.spin_hamiltonian_expr(), &basis)?;
        let pair = model.pair_hamiltonian(&basis)?;
        let gap = spin.sub(&pair)?.max_abs();
        if gap > T::tol(1e-12) {
            return Err(Error::Contract(format!(
                "pair and spin constructions of H_eff differ by {gap:e}"
            )));
        }
    }
    Ok(model)
}

/// `H_nuc + V_eff - (A/2) sum_i alpha_i I_z^i`: the bath Hamiltonian seen
/// with the electron down, to second order in `A/F`.
pub fn microscopic_bath_expr<T: Real>(spec: &SpinBathSpec<T>, f: T) -> Result<SpinExpr<T>> {
    let fr = froehlich_effective(spec, f)?;
    let over = hyperfine_mode_expr(spec, Component::Z).scale(-spec.flip_amplitude() / T::lit(2.0));
    Ok(dipolar_expr(spec) + fr.v_eff + over)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BcsSolution<T: Real = f64> {
    pub delta: Vec<T>,
    pub lambda: T,
    pub u: Vec<T>,
    pub v: Vec<T>,
    /// `max_i |Delta_i - 1/2 sum_j g_ij Delta_j / xi_j|`.
    pub residual: T,
    /// `|sum_i v_i^2 - n|`.
    pub number_residual: T,
    pub iterations: usize,
    /// `Delta = 0` (no pairing or collapse).
    pub normal: bool,
}

pub const DAMPING: f64 = 0.5;

fn occupation<T: Real>(e: T, lambda: T, d: T) -> T {
    let x = e - lambda;
    let xi = (x * x + d * d).sqrt();
    if xi == T::zero() {
        T::lit(0.5)
    } else {
        (T::one() - x / xi) / T::lit(2.0)
    }
}

fn count<T: Real>(eps: &[T], delta: &[T], lambda: T) -> T {
    eps.iter()
        .zip(delta)
        .fold(T::zero(), |a, (&e, &d)| a + occupation(e, lambda, d))
}

/// Number equation `sum_i v_i^2 = n` by bisection down to adjacent floats.
fn solve_lambda<T: Real>(eps: &[T], delta: &[T], n: T) -> T {
    let lo_e = eps.iter().copied().fold(eps[0], |a, b| a.min(b));
    let hi_e = eps.iter().copied().fold(eps[0], |a, b| a.max(b));
    let dmax = delta.iter().fold(T::zero(), |a, &d| a.max(d.abs()));
    let mut span = (hi_e - lo_e).max(dmax).max(T::one());
    let (mut lo, mut hi);
    loop {
        lo = lo_e - span;
        hi = hi_e + span;
        if count(eps, delta, lo) < n && count(eps, delta, hi) > n {
            break;
        }
        span *= T::lit(4.0);
        if span > T::lit(1e200) {
            break;
        }
    }
    for _ in 0..400 {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if count(eps, delta, mid) < n {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / T::lit(2.0)
}

/// `(gap residual, number residual)` of `(delta, lambda)`, computed from
/// scratch.
pub fn bcs_residuals<T: Real>(model: &PairingModel<T>, delta: &[T], lambda: T) -> (T, T) {
    let next = gap_map(model, delta, lambda);
    let gap = next
        .iter()
        .zip(delta)
        .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()));
    let num = (count(&model.eps, delta, lambda) - model.n_target).abs();
    (gap, num)
}

fn gap_map<T: Real>(model: &PairingModel<T>, delta: &[T], lambda: T) -> Vec<T> {
    let k = model.k();
    let w: Vec<T> = (0..k)
        .map(|j| {
            let x = model.eps[j] - lambda;
            let xi = (x * x + delta[j] * delta[j]).sqrt();
            if xi == T::zero() {
                T::zero()
            } else {
                delta[j] / xi
            }
        })
        .collect();
    (0..k)
        .map(|i| (0..k).fold(T::zero(), |a, j| a + model.g[(i, j)] * w[j]) / T::lit(2.0))
        .collect()
}

fn finish<T: Real>(
    model: &PairingModel<T>,
    delta: Vec<T>,
    lambda: T,
    iterations: usize,
    normal: bool,
) -> BcsSolution<T> {
    let v2: Vec<T> = model
        .eps
        .iter()
        .zip(&delta)
        .map(|(&e, &d)| occupation(e, lambda, d))
        .collect();
    let (residual, number_residual) = bcs_residuals(model, &delta, lambda);
    let v: Vec<T> = v2
        .iter()
        .zip(&delta)
        .map(|(&x, &d)| {
            let s = x.max(T::zero()).min(T::one()).sqrt();
            if d < T::zero() {
                -s
            } else {
                s
            }
        })
        .collect();
    let u = v2
        .iter()
        .map(|&x| (T::one() - x).max(T::zero()).min(T::one()).sqrt())
        .collect();
    BcsSolution {
        delta,
        lambda,
        u,
        v,
        residual,
        number_residual,
        iterations,
        normal,
    }
}

/// Fill the `n` lowest levels (one level partially for fractional `n`).
pub fn normal_state<T: Real>(model: &PairingModel<T>) -> BcsSolution<T> {
    let k = model.k();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        model.eps[a]
            .partial_cmp(&model.eps[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let n = model.n_target;
    let full = n.floor();
    let nf = full.to_f64_lossy() as usize;
    let frac = n - full;
    let mut v2 = vec![T::zero(); k];
    for (rank, &i) in order.iter().enumerate() {
        if rank < nf {
            v2[i] = T::one();
        } else if rank == nf && nf < k {
            v2[i] = frac;
        }
    }
    let lambda = if frac > T::zero() || nf == 0 || nf >= k {
        model.eps[order[nf.min(k - 1)]]
    } else {
        (model.eps[order[nf - 1]] + model.eps[order[nf]]) / T::lit(2.0)
    };
    let number_residual = (v2.iter().fold(T::zero(), |a, &x| a + x) - n).abs();
    BcsSolution {
        delta: vec![T::zero(); k],
        lambda,
        u: v2.iter().map(|&x| (T::one() - x).sqrt()).collect(),
        v: v2.iter().map(|&x| x.sqrt()).collect(),
        residual: T::zero(),
        number_residual,
        iterations: 0,
        normal: true,
    }
}

/// Damped fixed-point iteration on `(Delta, lambda)`; `lambda` is re-solved
/// by bisection at every step and the damping halves whenever the residual
/// grows.
pub fn solve_bcs<T: Real>(model: &PairingModel<T>, tol: T, max_iter: usize) -> Result<BcsSolution<T>> {
    let k = model.k();
    let n = model.n_target;
    if !(n > T::zero() && n < T::lit(k as f64)) {
        return Err(range("pair number", format!("n = {n} not in (0, {k})")));
    }
    if !model.g.iter().any(|&g| g > T::zero()) {
        return Ok(normal_state(model));
    }
    let kk = T::lit(k as f64);
    let gmean = model.g.iter().fold(T::zero(), |a, &g| a + g) / (kk * kk);
    let scale = model.g.iter().fold(T::zero(), |a, &g| a.max(g.abs()));
    let start = gmean.abs().max(scale * T::lit(1e-3)) * (n * (kk - n)).sqrt();
    let mut delta = vec![start; k];
    let mut beta = T::lit(DAMPING);
    let mut history: Vec<f64> = Vec::new();
    let mut prev = T::max_value().unwrap_or(T::one() / T::default_epsilon());
    let collapse = T::tol(1e-14) * scale.max(T::one());
    for it in 1..=max_iter {
        let lambda = solve_lambda(&model.eps, &delta, n);
        let next = gap_map(model, &delta, lambda);
        let res = next
            .iter()
            .zip(&delta)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()));
        history.push(res.to_f64_lossy());
        let num = (count(&model.eps, &delta, lambda) - n).abs();
        if res < tol && num < tol {
            return Ok(finish(model, delta, lambda, it, false));
        }
        if delta.iter().all(|d| d.abs() < collapse) {
            let mut sol = normal_state(model);
            sol.iterations = it;
            return Ok(sol);
        }
        if res > prev {
            beta = (beta / T::lit(2.0)).max(T::lit(1.0 / 1024.0));
        }
        prev = res;
        for (d, x) in delta.iter_mut().zip(&next) {
            *d = (T::one() - beta) * *d + beta * *x;
        }
    }
    let last = history.last().copied().unwrap_or(f64::NAN);
    let keep = history.len().saturating_sub(32);
    Err(Error::NoConvergence {
        iterations: max_iter,
        last,
        history: history.split_off(keep),
    })
}

pub const BCS_STATE_DIM_LIMIT: usize = 1 << 22;

/// `prod_i (u_i + v_i I_+^i) |0>` on the spin-1/2 bath, optionally
/// projected onto `n_hat = n` and renormalized.
pub fn bcs_state<T: Real>(spec: &SpinBathSpec<T>, sol: &BcsSolution<T>, project: Option<usize>) -> Result<KetState<T>> {
    if spec.two_i() != 1 || spec.k() != sol.u.len() {
        return Err(Error::Unsupported("BCS state needs I = 1/2 and matching K".into()));
    }
    let dim = match project {
        Some(n) => crate::spin::basis::binomial(spec.k() as u64, n as u64),
        None => 1u128 << spec.k().min(127),
    };
    if dim > BCS_STATE_DIM_LIMIT as u128 {
        return Err(Error::DimensionOverflow {
            dim: dim.min(usize::MAX as u128) as usize,
            limit: BCS_STATE_DIM_LIMIT,
        });
    }
    let basis = match project {
        Some(n) => Basis::nuclear_sector(spec, n)?,
        None => Basis::nuclear_full(spec),
    };
    let amps = DVector::from_iterator(
        basis.dim(),
        basis.configs().iter().map(|cfg| {
            let a = cfg[1..]
                .iter()
                .enumerate()
                .fold(T::one(), |acc, (i, &q)| acc * if q == 1 { sol.v[i] } else { sol.u[i] });
            C::new(a, T::zero())
        }),
    );
    KetState::new(basis, amps)?.normalized()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapRow<T> {
    pub n: T,
    pub lambda: T,
    pub delta_min: T,
    pub delta_max: T,
    pub residual: T,
    pub iterations: usize,
}

/// `Delta(n)` for the uniform family over a grid of fillings.
pub fn gap_vs_filling<T: Real>(
    k: usize,
    a_hf: T,
    f: T,
    b: T,
    grid: &[T],
    tol: T,
    max_iter: usize,
) -> Result<Vec<GapRow<T>>> {
    grid.iter()
        .map(|&n| {
            let model = PairingModel::uniform(k, a_hf, f, b, n)?;
            let sol = solve_bcs(&model, tol, max_iter)?;
            let dmin = sol.delta.iter().copied().fold(sol.delta[0], |a, b| a.min(b));
            let dmax = sol.delta.iter().copied().fold(sol.delta[0], |a, b| a.max(b));
            Ok(GapRow {
                n,
                lambda: sol.lambda,
                delta_min: dmin,
                delta_max: dmax,
                residual: sol.residual.max(sol.number_residual),
                iterations: sol.iterations,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactGapRow<T> {
    pub n: usize,
    pub delta: T,
    /// `E_1 - E_0` of `H_eff` within the `n_hat = n` sector.
    pub excitation_gap: T,
    /// `E_0(n+1) + E_0(n-1) - 2 E_0(n)`.
    pub pairing_gap: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactGapReport<T> {
    pub rows: Vec<ExactGapRow<T>>,
    /// Pearson correlation of `delta` with `excitation_gap`; `None` when
    /// either series is constant.
    pub correlation: Option<T>,
}

/// Exact diagonalization of the uniform `H_eff` for `n = 1..K-1`.
pub fn exact_pairing_gap<T: Real>(k: usize, a_hf: T, f: T, b: T, tol: T) -> Result<ExactGapReport<T>> {
    if k > 12 {
        return Err(Error::DimensionOverflow {
            dim: 1 << k,
            limit: 1 << 12,
        });
    }
    let spec = SpinBathSpec::<T>::uniform(k, 1)?;
    let model = PairingModel::uniform(k, a_hf, f, b, T::one())?;
    let expr = model.spin_hamiltonian_expr();
    let mut ground = Vec::with_capacity(k + 1);
    let mut first = Vec::with_capacity(k + 1);
    for n in 0..=k {
        let basis = Basis::nuclear_sector(&spec, n)?;
        let (vals, _) = eigh(LinearOp::hermitian_from_expr(&expr, &basis)?.to_dense());
        ground.push(vals[0]);
        first.push(if vals.len() > 1 { Some(vals[1]) } else { None });
    }
    let mut rows = Vec::new();
    for n in 1..k {
        let sol = solve_bcs(&model.clone().with_n_target(T::lit(n as f64)), tol, 100_000)?;
        rows.push(ExactGapRow {
            n,
            delta: sol.delta.iter().fold(T::zero(), |a, &d| a + d) / T::lit(k as f64),
            excitation_gap: first[n].map(|e| e - ground[n]).unwrap_or(T::zero()),
            pairing_gap: ground[n + 1] + ground[n - 1] - T::lit(2.0) * ground[n],
        });
    }
    let xs: Vec<T> = rows.iter().map(|r| r.delta).collect();
    let ys: Vec<T> = rows.iter().map(|r| r.excitation_gap).collect();
    Ok(ExactGapReport {
        correlation: pearson(&xs, &ys),
        rows,
    })
}

fn pearson<T: Real>(xs: &[T], ys: &[T]) -> Option<T> {
    let n = T::lit(xs.len() as f64);
    let mx = xs.iter().fold(T::zero(), |a, &x| a + x) / n;
    let my = ys.iter().fold(T::zero(), |a, &y| a + y) / n;
    let sxy = xs.iter().zip(ys).fold(T::zero(), |a, (&x, &y)| a + (x - mx) * (y - my));
    let sxx = xs.iter().fold(T::zero(), |a, &x| a + (x - mx) * (x - mx));
    let syy = ys.iter().fold(T::zero(), |a, &y| a + (y - my) * (y - my));
    let tiny = T::tol(1e-20);
    if sxx <= tiny * (T::one() + mx * mx) * n || syy <= tiny * (T::one() + my * my) * n {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dressed::build_frame_n1;
    use crate::spin::spec::normalize_profile;
    use crate::spin::Zeeman;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_half_spec(k: usize, seed: u64, b_scale: f64) -> SpinBathSpec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.0)).collect();
        let mut b = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..i {
                let v = b_scale * rng.random_range(-1.0..1.0);
                b[(i, j)] = v;
                b[(j, i)] = v;
            }
        }
        SpinBathSpec::new(1, normalize_profile(&raw).unwrap(), 0.9, Zeeman::zero(), b).unwrap()
    }

    #[test]
    fn froehlich_zero_coupling_and_singular() {
        let s = SpinBathSpec::<f64>::uniform(3, 1).unwrap().with_a_hf(0.0);
        let fr = froehlich_effective(&s, 1.0).unwrap();
        let basis = Basis::nuclear_full(&s);
        assert_eq!(fr.v_eff_op(&basis).unwrap().nnz(), 0);
        assert!(matches!(froehlich_effective(&s, 0.0), Err(Error::SingularDetuning)));
    }

    #[test]
    fn v_eff_on_collective_excitation() {
        let s = random_half_spec(4, 1, 0.0).with_a_hf(0.7);
        let f = build_frame_n1(&s).unwrap();
        let one = Basis::nuclear_sector(&s, 1).unwrap();
        let ket1 = crate::dressed::nuclear_part(f.ket1(), &one, 0).unwrap();
        let fr = froehlich_effective(&s, 2.0).unwrap();
        let v = fr.v_eff_op(&one).unwrap().matrix_element(&ket1, &ket1).unwrap().re;
        let aa = LinearOp::hermitian_from_expr(
            &(hyperfine_mode_expr(&s, Component::Plus) * hyperfine_mode_expr(&s, Component::Minus)),
            &one,
        )
        .unwrap()
        .matrix_element(&ket1, &ket1)
        .unwrap()
        .re;
        assert!((aa - 1.0).abs() < 1e-12);
        assert!((v + 0.49 * 0.5 / 4.0 * aa).abs() < 1e-12);
    }

    #[test]
    fn generator_eliminates_flipflop() {
        for two_i in [1u8, 2] {
            let s = SpinBathSpec::<f64>::uniform(3, two_i).unwrap().with_a_hf(0.6);
            let f = 1.7;
            let fr = froehlich_effective(&s, f).unwrap();
            let full = Basis::full(&s);
            let h0 = LinearOp::from_expr(&spin_expr(ELECTRON, Component::Z).scale(f), &full, &full).unwrap();
            let v = LinearOp::from_expr(
                &crate::hamiltonians::flipflop_expr(&s).scale(s.flip_amplitude()),
                &full,
                &full,
            )
            .unwrap();
            let sg = LinearOp::from_expr(&fr.generator, &full, &full).unwrap();
            // [S, H0] = V
            assert!(sg.commutator(&h0).unwrap().sub(&v).unwrap().max_abs() < 1e-12);
            // (1/2)[V, S] on the electron-down block equals V_eff
            let second = v.commutator(&sg).unwrap().scale(0.5);
            let veff = LinearOp::from_expr(&fr.v_eff, &full, &full).unwrap();
            for (r, c, val) in second.entries() {
                if full.config(r)[0] == 0 && full.config(c)[0] == 0 {
                    assert!((val - veff.get(r, c)).norm() < 1e-12);
                }
            }
            for (r, c, val) in veff.entries() {
                if full.config(r)[0] == 0 {
                    assert!((val - second.get(r, c)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn froehlich_error_ratio_is_four() {
        let s = random_half_spec(4, 2, 0.0);
        let f = 1.0;
        let errs: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&r| froehlich_check(&s.clone().with_a_hf(r * f), f, 2).unwrap().rel_error)
            .collect();
        for w in errs.windows(2) {
            assert!((w[0] / w[1] - 4.0).abs() < 1.0, "{errs:?}");
        }
    }

    #[test]
    fn model_trivial_and_uniform_inputs() {
        let s = SpinBathSpec::<f64>::uniform(4, 1).unwrap().with_a_hf(0.0);
        let m = build_pairing_model(&s, 1.0).unwrap();
        assert!(m.eps().iter().all(|&e| e == 0.0) && m.g().iter().all(|&g| g == 0.0));
        let k = 5;
        let b = 0.03;
        let bm = DMatrix::from_fn(k, k, |i, j| if i == j { 0.0 } else { b });
        let s = SpinBathSpec::<f64>::uniform(k, 1)
            .unwrap()
            .with_a_hf(0.8)
            .with_dipolar(bm)
            .unwrap();
        let m = build_pairing_model(&s, 1.3).unwrap();
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    assert!((m.g()[(i, j)] - (0.64 / (4.0 * 1.3 * k as f64) + b)).abs() < 1e-12);
                }
            }
        }
        assert!(build_pairing_model(&SpinBathSpec::<f64>::uniform(3, 2).unwrap(), 1.0).is_err());
        assert!(matches!(build_pairing_model(&s, 0.0), Err(Error::SingularDetuning)));
    }

    #[test]
    fn dual_construction_and_number_conservation() {
        let s = random_half_spec(6, 3, 0.05);
        let m = build_pairing_model(&s, 0.8).unwrap();
        let basis = Basis::nuclear_full(&s);
        let h = m.pair_hamiltonian(&basis).unwrap();
        let spin = LinearOp::hermitian_from_expr(&m.spin_hamiltonian_expr(), &basis).unwrap();
        assert!(h.sub(&spin).unwrap().max_abs() < 1e-12);
        let nhat = LinearOp::hermitian_from_expr(&crate::spin::ops::nuclear_pair_expr(&s), &basis).unwrap();
        assert!(h.commutator(&nhat).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn pairing_matches_microscopic_bath_without_dipolar() {
        let s = random_half_spec(5, 4, 0.0);
        let f = 1.4;
        let m = build_pairing_model(&s, f).unwrap();
        let basis = Basis::nuclear_full(&s);
        let h = m.pair_hamiltonian(&basis).unwrap().to_dense();
        let micro = LinearOp::hermitian_from_expr(&microscopic_bath_expr(&s, f).unwrap(), &basis)
            .unwrap()
            .to_dense();
        let diff = h - micro;
        let c0 = diff[(0, 0)];
        let rest = diff - DMatrix::identity(basis.dim(), basis.dim()) * c0;
        assert!(rest.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn quoted_dipolar_terms_differ_from_microscopic_bath() {
        let s = random_half_spec(5, 4, 0.05);
        let f = 1.4;
        let m = build_pairing_model(&s, f).unwrap();
        let basis = Basis::nuclear_full(&s);
        let h = m.pair_hamiltonian(&basis).unwrap().to_dense();
        let micro = LinearOp::hermitian_from_expr(&microscopic_bath_expr(&s, f).unwrap(), &basis)
            .unwrap()
            .to_dense();
        let diff = h - micro;
        let c0 = diff[(0, 0)];
        let rest = diff - DMatrix::identity(basis.dim(), basis.dim()) * c0;
        assert!(rest.iter().any(|z| z.norm() > 1e-3));
    }

    #[test]
    fn uniform_closed_form() {
        for k in [4usize, 8, 16, 32] {
            for n in 1..k {
                let (a, f, b) = (1.0, 1.0, 0.01);
                let m = PairingModel::uniform(k, a, f, b, n as f64).unwrap();
                let sol = solve_bcs(&m, 1e-12, 10_000).unwrap();
                let expect = (a * a / (4.0 * f * k as f64) + b) * ((n * (k - n)) as f64).sqrt();
                assert!(sol.delta.iter().all(|d| (d - expect).abs() < 1e-8), "K={k} n={n}");
                let v = (n as f64 / k as f64).sqrt();
                assert!(sol.v.iter().all(|x| (x - v).abs() < 1e-8));
                assert!(sol
                    .u
                    .iter()
                    .zip(&sol.v)
                    .all(|(u, v)| (u * u + v * v - 1.0).abs() < 1e-12));
            }
        }
        let m = PairingModel::<f64>::uniform(4, 1.0, 1.0, 0.0, 2.0).unwrap();
        let sol = solve_bcs(&m, 1e-12, 1000).unwrap();
        assert!((sol.delta[0] - 0.125).abs() < 1e-10);
    }

    #[test]
    fn random_model_residuals_verified_independently() {
        let s = random_half_spec(8, 5, 0.002);
        let m = build_pairing_model(&s, 0.5).unwrap().with_n_target(3.0);
        let sol = solve_bcs(&m, 1e-11, 100_000).unwrap();
        assert!(!sol.normal);
        // independent residual evaluation
        let mut gap = 0.0f64;
        for i in 0..8 {
            let mut sum = 0.0;
            for j in 0..8 {
                let xi = ((m.eps()[j] - sol.lambda).powi(2) + sol.delta[j].powi(2)).sqrt();
                sum += m.g()[(i, j)] * sol.delta[j] / xi;
            }
            gap = gap.max((sol.delta[i] - sum / 2.0).abs());
        }
        assert!(gap < 1e-10);
        let num: f64 = sol.v.iter().map(|v| v * v).sum();
        assert!((num - 3.0).abs() < 1e-10);
    }

    #[test]
    fn normal_state_when_no_pairing() {
        let eps: Vec<f64> = vec![0.3, -0.1, 0.5, 0.0];
        let m = PairingModel::new(eps, DMatrix::zeros(4, 4), DMatrix::zeros(4, 4), 2.0).unwrap();
        let sol = solve_bcs(&m, 1e-12, 100).unwrap();
        assert!(sol.normal && sol.delta.iter().all(|&d| d == 0.0));
        assert_eq!(sol.v, vec![0.0, 1.0, 0.0, 1.0]);
        assert!((sol.lambda - 0.15).abs() < 1e-15);
        assert!(solve_bcs(&m.clone().with_n_target(0.0), 1e-12, 100).is_err());
    }

    #[test]
    fn no_convergence_reports_history() {
        let m = PairingModel::uniform(8, 1.0, 1.0, 0.0, 1.0).unwrap();
        let mut m2 = m.clone();
        m2.eps[0] = 5.0;
        match solve_bcs(&m2, 1e-15, 3) {
            Err(Error::NoConvergence {
                iterations, history, ..
            }) => {
                assert_eq!(iterations, 3);
                assert_eq!(history.len(), 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bcs_state_examples() {
        let k = 6;
        let s = SpinBathSpec::<f64>::uniform(k, 1).unwrap();
        let zero_sol = normal_state(&PairingModel::uniform(k, 1.0, 1.0, 0.0, 0.0).unwrap());
        let st = bcs_state(&s, &zero_sol, None).unwrap();
        assert!((st.amps()[0].re - 1.0).abs() < 1e-15);
        for n in 1..k {
            let m = PairingModel::uniform(k, 1.0, 1.0, 0.02, n as f64).unwrap();
            let sol = solve_bcs(&m, 1e-12, 10_000).unwrap();
            let proj = bcs_state(&s, &sol, Some(n)).unwrap();
            // normalized (A_+)^n |0>
            let mut psi = KetState::basis_state(Basis::nuclear_sector(&s, 0).unwrap(), 0).unwrap();
            for p in 0..n {
                let from = Basis::nuclear_sector(&s, p).unwrap();
                let to = Basis::nuclear_sector(&s, p + 1).unwrap();
                let ap = LinearOp::from_expr(&hyperfine_mode_expr(&s, Component::Plus), &from, &to).unwrap();
                psi = ap.apply_ket(&psi).unwrap();
            }
            let psi = psi.normalized().unwrap();
            assert!((proj.fidelity(&psi).unwrap() - 1.0).abs() < 1e-10);
            // variational sanity
            let full = Basis::nuclear_full(&s);
            let h = m.pair_hamiltonian(&full).unwrap();
            let bcs = bcs_state(&s, &sol, None).unwrap();
            let e_bcs = h.matrix_element(&bcs, &bcs).unwrap().re;
            let mut cfg = vec![0u8; k + 1];
            for q in cfg.iter_mut().skip(1).take(n) {
                *q = 1;
            }
            let one = KetState::from_config(full.clone(), &cfg).unwrap();
            assert!(e_bcs <= h.matrix_element(&one, &one).unwrap().re + 1e-10);
        }
    }

    #[test]
    fn filling_table() {
        let grid: Vec<f64> = (1..8).map(|n| n as f64).collect();
        let rows = gap_vs_filling(8, 1.0, 1.0, 0.01, &grid, 1e-12, 10_000).unwrap();
        let best = rows
            .iter()
            .max_by(|a, b| a.delta_max.partial_cmp(&b.delta_max).unwrap())
            .unwrap();
        assert_eq!(best.n, 4.0);
        for n in 1..4 {
            assert!((rows[n - 1].delta_max - rows[7 - n].delta_max).abs() < 1e-10);
        }
        let tiny = gap_vs_filling(8, 1.0, 1.0, 0.01, &[1e-6], 1e-14, 100_000).unwrap();
        assert!(tiny[0].delta_max < 1e-3);
    }

    #[test]
    fn exact_gap_is_flat_and_positive() {
        let (a, f, b) = (1.0, 1.0, 0.01);
        for k in [4usize, 6, 8] {
            let rep = exact_pairing_gap(k, a, f, b, 1e-12).unwrap();
            let g = a * a / (4.0 * f * k as f64) + b;
            for r in &rep.rows {
                assert!(r.delta > 0.0 && r.excitation_gap > 0.0);
                assert!((r.excitation_gap - g * k as f64).abs() < 1e-10, "{r:?}");
            }
            assert!(rep.correlation.is_none());
        }
    }
}
