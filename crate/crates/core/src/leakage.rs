//! Leakage out of the dressed subspace and its suppression.
//!
//! On the `N = 1` frame the Overhauser term and the nuclear dipolar term act
//! on `|1> = A_+|0>` as
//!
//! ```text
//! A_z |1>   = (c_z + sum_i alpha_i^3 / sqrt(2I)) |1> + |O>
//! H_nuc |1> = (c_0 + c_1) |1> + |O'>
//! ```
//!
//! with `|O>, |O'>` orthogonal to the frame. The leakage-elimination
//! operator `R_L = exp(-i pi (A_+ S_- + A_- S_+))` is `-1` on the frame and
//! `+1` on the leak modes, so it flips the sign of every leakage term.

use std::fmt;

use crate::dressed::{nuclear_part, with_electron, DressedFrame};
use crate::error::{range, Error, Result};
use crate::hamiltonians::{build_hyperfine, dipolar_expr, flipflop_expr};
use crate::scalar::{cabs, Real, C};
use crate::spin::linalg::{complete_orthogonal_rows, max_abs, CMat};
use crate::spin::ops::{collective_expr, hyperfine_mode_expr};
use crate::spin::{Basis, Component, KetState, LinearOp, Propagator, SpinBathSpec, SpinExpr};

/// Oracle value of a coefficient next to a quoted closed form.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientCheck<T> {
    pub name: String,
    pub oracle: T,
    pub quoted: T,
    pub matches: bool,
}

impl<T: Real> CoefficientCheck<T> {
    pub fn new(name: impl Into<String>, oracle: T, quoted: T) -> Self {
        let scale = oracle.abs().max(quoted.abs()).max(T::one());
        Self {
            name: name.into(),
            oracle,
            quoted,
            matches: (oracle - quoted).abs() <= T::tol(1e-10) * scale,
        }
    }

    pub fn status(&self) -> String {
        if self.matches {
            "matches".to_string()
        } else {
            format!("differs (quoted {:.6e})", self.quoted.to_f64_lossy())
        }
    }
}

impl<T: Real> fmt::Display for CoefficientCheck<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} = {:.12e}: {}",
            self.name,
            self.oracle.to_f64_lossy(),
            self.status()
        )
    }
}

#[derive(Clone, Debug)]
pub struct LeakageReport<T: Real = f64> {
    /// Eigenvalue of the operator on the polarized `|0>` (`c_z` or `c_0`).
    pub ket0_coeff: T,
    /// `|| (op - ket0_coeff) |0> ||`.
    pub ket0_leak: T,
    /// Coefficient of `|1>` in `op |1>`.
    pub diag_coeff: T,
    /// `|down>|O>` in the frame's sector, orthogonal to both frame kets.
    pub leak_vec: KetState<T>,
    pub leak_norm: T,
    /// `leak_norm / |ket0_coeff|`.
    pub ratio: T,
    /// The `alpha / (I sum_j alpha_j)` estimate with `alpha = 1/sqrt(K)`.
    pub estimate: T,
    pub checks: Vec<CoefficientCheck<T>>,
}

fn require_n1<T: Real>(frame: &DressedFrame<T>) -> Result<()> {
    if frame.n() != 1 {
        return Err(Error::Unsupported(format!(
            "needs the N = 1 frame, got N = {}",
            frame.n()
        )));
    }
    Ok(())
}

fn check_normalized<T: Real>(spec: &SpinBathSpec<T>) -> Result<()> {
    let s = spec.alpha().iter().fold(T::zero(), |a, &x| a + x * x);
    if (s - T::one()).abs() > T::tol(1e-12) {
        return Err(Error::InvalidSpec("alpha is not normalized".into()));
    }
    Ok(())
}

/// Applies a bath-only `expr` to `|0>` and `|1>` and splits the result.
fn nuclear_report<T: Real>(
    spec: &SpinBathSpec<T>,
    frame: &DressedFrame<T>,
    expr: &SpinExpr<T>,
) -> Result<LeakageReport<T>> {
    require_n1(frame)?;
    check_normalized(spec)?;
    let vac = Basis::nuclear_sector(spec, 0)?;
    let one = Basis::nuclear_sector(spec, 1)?;
    let op0 = LinearOp::from_expr(expr, &vac, &vac)?;
    let op1 = LinearOp::from_expr(expr, &one, &one)?;
    let zero = frame.m_state().clone();
    let ket1 = nuclear_part(frame.ket1(), &one, 0)?;

    let z0 = op0.apply_ket(&zero)?;
    let ket0_coeff = zero.inner(&z0)?.re;
    let ket0_leak = z0.axpy(C::new(-ket0_coeff, T::zero()), &zero)?.norm();

    let z1 = op1.apply_ket(&ket1)?;
    let diag_coeff = ket1.inner(&z1)?.re;
    let leak = z1.axpy(C::new(-diag_coeff, T::zero()), &ket1)?;
    let leak_norm = leak.norm();
    let leak_vec = with_electron(&leak, 0, frame.basis())?;
    let ratio = if ket0_coeff == T::zero() {
        if leak_norm == T::zero() {
            T::zero()
        } else {
            T::max_value().unwrap_or(T::one() / T::default_epsilon())
        }
    } else {
        leak_norm / ket0_coeff.abs()
    };
    let k = T::lit(spec.k() as f64);
    let sum_alpha = spec.alpha().iter().fold(T::zero(), |a, &x| a + x);
    let estimate = T::one() / (k.sqrt() * spec.spin() * sum_alpha.abs());
    Ok(LeakageReport {
        ket0_coeff,
        ket0_leak,
        diag_coeff,
        leak_vec,
        leak_norm,
        ratio,
        estimate,
        checks: Vec::new(),
    })
}

/// Overhauser leakage `A_z |1>`, plus the phase-gate coefficient of
/// `A sqrt(2I) A_z S_z` against the effective-field closed form.
pub fn overhauser_report<T: Real>(spec: &SpinBathSpec<T>, frame: &DressedFrame<T>) -> Result<LeakageReport<T>> {
    let az = hyperfine_mode_expr(spec, Component::Z);
    let mut rep = nuclear_report(spec, frame, &az)?;
    let i = spec.spin();
    let two_i = T::lit(2.0) * i;
    let alpha = spec.alpha();
    let sum1 = alpha.iter().fold(T::zero(), |a, &x| a + x);
    let sum3 = alpha.iter().fold(T::zero(), |a, &x| a + x * x * x);
    let c_z = -(i / T::lit(2.0)).sqrt() * sum1;
    rep.checks.push(CoefficientCheck::new("c_z", rep.ket0_coeff, c_z));
    rep.checks.push(CoefficientCheck::new(
        "A_z on |1>",
        rep.diag_coeff,
        c_z + sum3 / two_i.sqrt(),
    ));
    // Z_d/2 coefficient of the Overhauser term in the frame
    let zz = build_hyperfine(spec, frame.basis())?.zz;
    let m = crate::dressed::matrix_rep(&zz, frame)?;
    let phase = m[(0, 0)].re - m[(1, 1)].re;
    let quoted = -spec.a_hf() * alpha.iter().fold(T::zero(), |a, &x| a + x * (i + x * x / T::lit(2.0)));
    rep.checks
        .push(CoefficientCheck::new("overhauser phase", phase, quoted));
    Ok(rep)
}

/// `c_0` and `c_1` exactly as printed, summing `n != i` over ordered pairs
/// and over `i < n`.
pub fn quoted_dipolar_coefficients<T: Real>(spec: &SpinBathSpec<T>) -> (T, T, T) {
    let i = spec.spin();
    let b = spec.dipolar();
    let a = spec.alpha();
    let k = spec.k();
    let mut pair_sum = T::zero();
    let mut ordered = T::zero();
    let mut unordered = T::zero();
    for n in 0..k {
        for m in 0..k {
            if n == m {
                continue;
            }
            let term = a[m] * b[(n, m)] * (T::lit(8.0) * a[m] + a[n]);
            ordered += term;
            if m < n {
                unordered += term;
                pair_sum += b[(n, m)];
            }
        }
    }
    let four_i = T::lit(4.0) * i;
    (-T::lit(16.0) * i * i * pair_sum, four_i * ordered, four_i * unordered)
}

/// `c_0 = -4 I^2 sum_{i<j} b_ij` and
/// `c_1 = 4I sum_i r_i alpha_i^2 + 2I alpha^T b alpha` with `r_i` the row
/// sums of `b`; the closed forms of the oracle below.
pub fn derived_dipolar_coefficients<T: Real>(spec: &SpinBathSpec<T>) -> (T, T) {
    let i = spec.spin();
    let b = spec.dipolar();
    let a = spec.alpha();
    let k = spec.k();
    let mut pair_sum = T::zero();
    let mut diag = T::zero();
    let mut quad = T::zero();
    for n in 0..k {
        let mut r = T::zero();
        for m in 0..k {
            r += b[(n, m)];
            quad += a[n] * b[(n, m)] * a[m];
            if m < n {
                pair_sum += b[(n, m)];
            }
        }
        diag += r * a[n] * a[n];
    }
    (
        -T::lit(4.0) * i * i * pair_sum,
        T::lit(4.0) * i * diag + T::lit(2.0) * i * quad,
    )
}

/// Dipolar leakage `H_nuc |1>`; `diag_coeff` is `c_0 + c_1`.
pub fn dipolar_report<T: Real>(spec: &SpinBathSpec<T>, frame: &DressedFrame<T>) -> Result<LeakageReport<T>> {
    let mut rep = nuclear_report(spec, frame, &dipolar_expr(spec))?;
    let c0 = rep.ket0_coeff;
    let c1 = rep.diag_coeff - c0;
    let (q0, q1_ordered, q1_unordered) = quoted_dipolar_coefficients(spec);
    let (d0, d1) = derived_dipolar_coefficients(spec);
    rep.checks.push(CoefficientCheck::new("c_0 (quoted)", c0, q0));
    rep.checks
        .push(CoefficientCheck::new("c_1 (quoted, ordered pairs)", c1, q1_ordered));
    rep.checks
        .push(CoefficientCheck::new("c_1 (quoted, i<n)", c1, q1_unordered));
    rep.checks.push(CoefficientCheck::new("c_0 (derived)", c0, d0));
    rep.checks.push(CoefficientCheck::new("c_1 (derived)", c1, d1));
    Ok(rep)
}

/// `c_1` for a constrained dipolar matrix against the quoted `36 I b_bar`.
pub fn constrained_c1_check<T: Real>(
    spec: &SpinBathSpec<T>,
    frame: &DressedFrame<T>,
    b_bar: T,
) -> Result<CoefficientCheck<T>> {
    let rep = dipolar_report(spec, frame)?;
    Ok(CoefficientCheck::new(
        "c_1 (constrained)",
        rep.diag_coeff - rep.ket0_coeff,
        T::lit(36.0) * spec.spin() * b_bar,
    ))
}

/// `(H_block, H_L)` with `H_block = P H P + Q H Q`, `H_L = P H Q + Q H P`,
/// `P` the frame projector inside the frame's sector. `h` may live on a
/// larger basis; it is restricted to the sector first.
pub fn split_leakage<T: Real>(h: &LinearOp<T>, frame: &DressedFrame<T>) -> Result<(LinearOp<T>, LinearOp<T>)> {
    let sector = frame.basis();
    let h = if h.domain().check_same(sector).is_ok() && h.codomain().check_same(sector).is_ok() {
        h.clone()
    } else {
        let r = h.restrict(sector, sector)?;
        if h.is_hermitian() {
            r.into_hermitian()?
        } else {
            r
        }
    };
    if !h.is_hermitian() {
        return Err(Error::Contract("split_leakage needs a hermitian operator".into()));
    }
    let k = [frame.ket0().amps(), frame.ket1().amps()];
    let hk = [h.apply(k[0]), h.apply(k[1])];
    let mut m = nalgebra::Matrix2::<C<T>>::zeros();
    for a in 0..2 {
        for b in 0..2 {
            m[(a, b)] = k[a].dotc(&hk[b]);
        }
    }
    let d = sector.dim();
    // P H + H P - 2 P H P
    let mut hl = CMat::<T>::zeros(d, d);
    for a in 0..2 {
        hl += k[a] * hk[a].adjoint() + &hk[a] * k[a].adjoint();
        for b in 0..2 {
            hl -= k[a] * k[b].adjoint() * (m[(a, b)] * T::lit(2.0));
        }
    }
    let hl = (&hl + hl.adjoint()) * C::new(T::lit(0.5), T::zero());
    let h_l = LinearOp::from_dense(&hl, sector.clone(), sector.clone())?.into_hermitian()?;
    let h_block = h.sub(&h_l)?.into_hermitian()?;
    Ok((h_block, h_l))
}

/// `exp(-i pi (A_+ S_- + A_- S_+))` on the `N = 1` sector, dense.
pub fn leo_exponential<T: Real>(spec: &SpinBathSpec<T>, frame: &DressedFrame<T>) -> Result<CMat<T>> {
    require_n1(frame)?;
    let g = LinearOp::hermitian_from_expr(&flipflop_expr(spec).scale(T::lit(2.0)), frame.basis())?;
    Propagator::with_method(&g, crate::spin::Method::Exact)?.unitary(T::pi())
}

/// `1 - 2 P` over the frame, dense.
pub fn leo_spectral<T: Real>(frame: &DressedFrame<T>) -> CMat<T> {
    let d = frame.basis().dim();
    let mut r = CMat::<T>::identity(d, d);
    for k in [frame.ket0().amps(), frame.ket1().amps()] {
        r -= k * k.adjoint() * C::new(T::lit(2.0), T::zero());
    }
    r
}

pub const LEO_AGREEMENT_TOL: f64 = 1e-10;

/// `R_L`; both constructions are computed and must agree within
/// [`LEO_AGREEMENT_TOL`].
pub fn leakage_elimination_op<T: Real>(spec: &SpinBathSpec<T>, frame: &DressedFrame<T>) -> Result<LinearOp<T>> {
    let e = leo_exponential(spec, frame)?;
    let s = leo_spectral(frame);
    let gap = max_abs(&(&e - &s));
    if gap > T::tol(LEO_AGREEMENT_TOL) {
        return Err(Error::Contract(format!("R_L constructions disagree by {gap:e}")));
    }
    LinearOp::from_dense(&s, frame.basis().clone(), frame.basis().clone())?.into_hermitian()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BangBangSchedule<T> {
    tau: T,
    cycles: usize,
}

impl<T: Real> BangBangSchedule<T> {
    pub fn new(tau: T, cycles: usize) -> Result<Self> {
        if !(tau > T::zero()) {
            return Err(range("bang-bang tau", format!("{tau} must be positive")));
        }
        Ok(Self { tau, cycles })
    }

    /// `cycles` of length `tau` filling `total`.
    pub fn covering(total: T, cycles: usize) -> Result<Self> {
        if cycles == 0 {
            return Err(range("bang-bang cycles", "need at least one cycle"));
        }
        Self::new(total / T::lit(cycles as f64), cycles)
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    pub fn cycles(&self) -> usize {
        self.cycles
    }

    pub fn total_time(&self) -> T {
        self.tau * T::lit(self.cycles as f64)
    }
}

fn reflect<T: Real>(frame: &DressedFrame<T>, psi: &KetState<T>) -> Result<KetState<T>> {
    let (c0, c1) = frame.coordinates(psi)?;
    let two = C::new(T::lit(-2.0), T::zero());
    psi.axpy(two * c0, frame.ket0())?.axpy(two * c1, frame.ket1())
}

/// Repeats `R_L exp(-i H tau/2) R_L exp(-i H tau/2)`; returns the final
/// state and the leak probability `1 - ||P psi||^2` after each cycle.
pub fn bangbang_evolve<T: Real>(
    h: &LinearOp<T>,
    frame: &DressedFrame<T>,
    sched: &BangBangSchedule<T>,
    psi0: &KetState<T>,
) -> Result<(KetState<T>, Vec<T>)> {
    frame.basis().check_same(psi0.basis())?;
    let (h_block, h_l) = split_leakage(h, frame)?;
    let h = h_block.add(&h_l)?.into_hermitian()?;
    let prop = Propagator::new(&h)?;
    let half = sched.tau / T::lit(2.0);
    let mut psi = psi0.clone();
    let mut trace = Vec::with_capacity(sched.cycles);
    for _ in 0..sched.cycles {
        psi = prop.evolve(&psi, half)?;
        psi = reflect(frame, &psi)?;
        psi = prop.evolve(&psi, half)?;
        psi = reflect(frame, &psi)?;
        trace.push(frame.leak_probability(&psi)?);
    }
    Ok((psi, trace))
}

/// Leak probability after free evolution for time `t`.
pub fn free_leak<T: Real>(h: &LinearOp<T>, frame: &DressedFrame<T>, t: T, psi0: &KetState<T>) -> Result<T> {
    let (h_block, h_l) = split_leakage(h, frame)?;
    let h = h_block.add(&h_l)?.into_hermitian()?;
    frame.leak_probability(&Propagator::new(&h)?.evolve(psi0, t)?)
}

/// `|<psi|[A_{k-}, A_{k'+}]|psi> - delta_{kk'}|` for rows `k, k'` of the
/// mode matrix `[alpha]` (row 0 is `alpha`).
pub fn bosonization_deviation<T: Real>(spec: &SpinBathSpec<T>, psi: &KetState<T>, k: usize, k2: usize) -> Result<T> {
    if k >= spec.k() || k2 >= spec.k() {
        return Err(range("mode index", format!("({k}, {k2}) with K = {}", spec.k())));
    }
    if (psi.norm() - T::one()).abs() > T::tol(1e-10) {
        return Err(Error::Contract("state must be normalized".into()));
    }
    let modes = complete_orthogonal_rows(spec.alpha())?;
    let row = |r: usize| -> Vec<T> { modes.row(r).iter().copied().collect() };
    let minus = collective_expr(spec.two_i(), &row(k), Component::Minus);
    let plus = collective_expr(spec.two_i(), &row(k2), Component::Plus);
    let comm = minus.commutator(&plus);
    let op = LinearOp::from_expr(&comm, psi.basis(), psi.basis())?;
    let v = op.matrix_element(psi, psi)?;
    let delta = if k == k2 { T::one() } else { T::zero() };
    Ok(cabs(v - C::new(delta, T::zero())))
}

/// Least-squares fit of `log y = p log x + c`; returns `(p, exp c)`.
pub fn power_law_fit<T: Real>(xs: &[T], ys: &[T]) -> Result<(T, T)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Contract("power-law fit needs at least two points".into()));
    }
    if xs.iter().chain(ys).any(|&v| !(v > T::zero())) {
        return Err(Error::Contract("power-law fit needs positive data".into()));
    }
    let n = T::lit(xs.len() as f64);
    let lx: Vec<T> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<T> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().fold(T::zero(), |a, &v| a + v) / n;
    let my = ly.iter().fold(T::zero(), |a, &v| a + v) / n;
    let sxy = lx
        .iter()
        .zip(&ly)
        .fold(T::zero(), |a, (&x, &y)| a + (x - mx) * (y - my));
    let sxx = lx.iter().fold(T::zero(), |a, &x| a + (x - mx) * (x - mx));
    let p = sxy / sxx;
    Ok((p, (my - p * mx).exp()))
}

/// `alpha_j ∝ 1 + eps cos(2 pi j / K)`, normalized.
pub fn perturbed_profile<T: Real>(k: usize, eps: T) -> Vec<T> {
    let raw: Vec<T> = (0..k)
        .map(|j| T::one() + eps * (T::two_pi() * T::lit(j as f64) / T::lit(k as f64)).cos())
        .collect();
    let n = raw.iter().fold(T::zero(), |a, &x| a + x * x).sqrt();
    raw.into_iter().map(|x| x / n).collect()
}

/// Dense projector-free helper: `|| R H_L R + H_L ||_max`.
pub fn anticommutation_defect<T: Real>(r: &LinearOp<T>, h_l: &LinearOp<T>) -> Result<T> {
    Ok(r.matmul(h_l)?.matmul(r)?.add(h_l)?.max_abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dressed::build_frame_n1;
    use crate::hamiltonians::{
        build_dipolar, build_dominant, build_total, constrained_dipolar, dipolar_from_geometry, DotGeometry,
    };
    use crate::spin::spec::normalize_profile;
    use crate::spin::Zeeman;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spec(k: usize, two_i: u8, seed: u64) -> SpinBathSpec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.0)).collect();
        let pos: Vec<[f64; 3]> = (0..k)
            .map(|_| {
                [
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ]
            })
            .collect();
        let b = dipolar_from_geometry(&DotGeometry {
            positions: pos,
            prefactor: 0.01,
        })
        .unwrap();
        let z = Zeeman {
            g_star: 1.0,
            mu_b: 1.0,
            g_n: 0.1,
            mu_n: 0.1,
            b: 0.5,
        };
        SpinBathSpec::new(two_i, normalize_profile(&raw).unwrap(), 1.0, z, b).unwrap()
    }

    #[test]
    fn overhauser_uniform_has_no_leak() {
        for k in [2, 5, 9] {
            let s = SpinBathSpec::<f64>::uniform(k, 1).unwrap();
            let f = build_frame_n1(&s).unwrap();
            let r = overhauser_report(&s, &f).unwrap();
            assert!(r.leak_norm < 1e-12);
            assert!(r.ket0_leak < 1e-12);
        }
    }

    #[test]
    fn overhauser_two_nuclei_example() {
        let alpha = vec![0.8f64.sqrt(), 0.2f64.sqrt()];
        let s = SpinBathSpec::new(1, alpha, 1.0, Zeeman::zero(), DMatrix::zeros(2, 2)).unwrap();
        let f = build_frame_n1(&s).unwrap();
        let r = overhauser_report(&s, &f).unwrap();
        let cz = -0.5 * (0.8f64.sqrt() + 0.2f64.sqrt());
        assert!((r.ket0_coeff - cz).abs() < 1e-12);
        assert!((r.diag_coeff - (cz + 0.8f64.powf(1.5) + 0.2f64.powf(1.5))).abs() < 1e-12);
        assert!(r.checks[0].matches && r.checks[1].matches);
        assert!(r.leak_vec.inner(f.ket0()).unwrap().norm() < 1e-12);
        assert!(r.leak_vec.inner(f.ket1()).unwrap().norm() < 1e-12);
    }

    #[test]
    fn overhauser_phase_differs_from_closed_form() {
        // the frame gives -A sum alpha (I - alpha^2/2)
        let s = random_spec(4, 1, 1);
        let f = build_frame_n1(&s).unwrap();
        let r = overhauser_report(&s, &f).unwrap();
        let i = s.spin();
        let oracle: f64 = -s.a_hf() * s.alpha().iter().map(|a| a * (i - a * a / 2.0)).sum::<f64>();
        assert!((r.checks[2].oracle - oracle).abs() < 1e-12);
        assert!(!r.checks[2].matches);
    }

    #[test]
    fn unnormalized_profile_rejected() {
        let alpha = vec![2.0 * 0.8f64.sqrt(), 2.0 * 0.2f64.sqrt()];
        assert!(SpinBathSpec::new(1, alpha, 1.0, Zeeman::zero(), DMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn dipolar_zero_and_derived_forms() {
        let s = SpinBathSpec::<f64>::uniform(4, 1).unwrap();
        let f = build_frame_n1(&s).unwrap();
        let r = dipolar_report(&s, &f).unwrap();
        assert_eq!((r.ket0_coeff, r.diag_coeff, r.leak_norm), (0.0, 0.0, 0.0));
        for (k, two_i) in [(3, 1), (4, 2), (5, 3)] {
            let s = random_spec(k, two_i, 10 + k as u64);
            let f = build_frame_n1(&s).unwrap();
            let r = dipolar_report(&s, &f).unwrap();
            assert!(r.checks[3].matches && r.checks[4].matches, "{:?}", r.checks);
            assert!(!r.checks[0].matches);
            // cross-module: c0 from the polarized-state eigenvalue
            let vac = Basis::nuclear_sector(&s, 0).unwrap();
            let h = build_dipolar(&s, &vac).unwrap();
            assert!((h.get(0, 0).re - r.ket0_coeff).abs() < 1e-12);
        }
    }

    #[test]
    fn constrained_dipolar_kills_leak() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let raw: Vec<f64> = (0..7).map(|_| rng.random_range(0.2..1.0)).collect();
        let alpha = normalize_profile(&raw).unwrap();
        let c = constrained_dipolar(&alpha, 0.1).unwrap();
        for two_i in [1u8, 2] {
            let s = SpinBathSpec::new(two_i, alpha.clone(), 1.0, Zeeman::zero(), c.b.clone()).unwrap();
            let f = build_frame_n1(&s).unwrap();
            let r = dipolar_report(&s, &f).unwrap();
            assert!(r.leak_norm < 1e-8);
            let chk = constrained_c1_check(&s, &f, 0.1).unwrap();
            assert!((chk.oracle - 6.0 * s.spin() * 0.1).abs() < 1e-8);
            assert!(!chk.matches);
            // H_nuc |1> parallel to |1>
            let h = build_dipolar(&s, f.basis()).unwrap();
            let v = h.apply_ket(f.ket1()).unwrap();
            let cos = v.inner(f.ket1()).unwrap().norm() / v.norm();
            assert!(cos.min(1.0).acos() < 1e-6);
        }
    }

    #[test]
    fn split_is_orthogonal_decomposition() {
        let s = random_spec(5, 1, 4);
        let f = build_frame_n1(&s).unwrap();
        let h = build_total(&s, f.basis()).unwrap();
        let (hb, hl) = split_leakage(&h, &f).unwrap();
        assert!(hb.add(&hl).unwrap().sub(&h).unwrap().max_abs() < 1e-12);
        let p = CMat::from_columns(&[f.ket0().amps().clone(), f.ket1().amps().clone()]);
        let proj = &p * p.adjoint();
        let q = CMat::identity(6, 6) - &proj;
        assert!(max_abs(&(&proj * hb.to_dense() * &q)) < 1e-12);
        assert!(max_abs(&(&proj * hl.to_dense() * &proj)) < 1e-12);
        assert!(hl.max_abs() > 1e-6);
        let hd = build_dominant(&s, 0.3, f.basis()).unwrap();
        assert!(split_leakage(&hd, &f).unwrap().1.max_abs() < 1e-12);
    }

    #[test]
    fn total_leak_is_sum_of_parts() {
        let s = random_spec(4, 2, 5);
        let f = build_frame_n1(&s).unwrap();
        let full = Basis::full(&s);
        let h = build_total(&s, &full).unwrap();
        let (_, hl) = split_leakage(&h, &f).unwrap();
        let ov = overhauser_report(&s, &f).unwrap();
        let dp = dipolar_report(&s, &f).unwrap();
        let expect = ov
            .leak_vec
            .scaled(C::new(-0.5 * s.flip_amplitude(), 0.0))
            .axpy(C::new(1.0, 0.0), &dp.leak_vec)
            .unwrap();
        let got = hl.apply_ket(f.ket1()).unwrap();
        assert!((got.amps() - expect.amps()).norm() < 1e-12);
        assert!(hl.apply_ket(f.ket0()).unwrap().norm() < 1e-12);
    }

    #[test]
    fn uniform_constant_dipolar_has_no_leak() {
        let k = 5;
        let b = DMatrix::from_fn(k, k, |i, j| if i == j { 0.0 } else { 0.07 });
        let s = SpinBathSpec::<f64>::uniform(k, 1).unwrap().with_dipolar(b).unwrap();
        let f = build_frame_n1(&s).unwrap();
        let h = build_total(&s, f.basis()).unwrap();
        assert!(split_leakage(&h, &f).unwrap().1.max_abs() < 1e-10);
    }

    #[test]
    fn leo_structure() {
        let s = SpinBathSpec::<f64>::uniform(2, 1).unwrap();
        let f = build_frame_n1(&s).unwrap();
        let r = leakage_elimination_op(&s, &f).unwrap();
        let d = r.to_dense();
        let mut basis = vec![f.ket0().amps().clone(), f.ket1().amps().clone()];
        basis.extend(f.leak_modes().iter().map(|m| m.amps().clone()));
        let u = CMat::from_columns(&basis);
        let rep = u.adjoint() * &d * &u;
        let expect = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C::new(-1.0, 0.0),
            C::new(-1.0, 0.0),
            C::new(1.0, 0.0),
        ]));
        assert!(max_abs(&(rep - expect)) < 1e-10);
        assert!(max_abs(&(&d * &d - CMat::identity(3, 3))) < 1e-10);
    }

    #[test]
    fn leo_anticommutes_with_leakage() {
        for seed in 0..5 {
            let s = random_spec(5, 1 + (seed % 2) as u8, 20 + seed);
            let f = build_frame_n1(&s).unwrap();
            let e = leo_exponential(&s, &f).unwrap();
            assert!(max_abs(&(&e - leo_spectral(&f))) < 1e-10);
            let r = leakage_elimination_op(&s, &f).unwrap();
            let h = build_total(&s, f.basis()).unwrap();
            let (_, hl) = split_leakage(&h, &f).unwrap();
            assert!(anticommutation_defect(&r, &hl).unwrap() < 1e-10);
        }
    }

    #[test]
    fn bangbang_trivial_cases() {
        let s = random_spec(4, 1, 6);
        let f = build_frame_n1(&s).unwrap();
        let psi = f.logical(C::new(0.6, 0.0), C::new(0.0, 0.8));
        let hd = build_dominant(&s, 0.4, f.basis()).unwrap();
        let (_, trace) = bangbang_evolve(&hd, &f, &BangBangSchedule::new(0.3, 20).unwrap(), &psi).unwrap();
        assert!(trace.iter().all(|&p| p < 1e-12));
        let h = build_total(&s, f.basis()).unwrap();
        let (out, trace) = bangbang_evolve(&h, &f, &BangBangSchedule::new(0.3, 0).unwrap(), &psi).unwrap();
        assert_eq!(out, psi);
        assert!(trace.is_empty());
        assert!(BangBangSchedule::new(0.0, 1).is_err());
    }

    #[test]
    fn bangbang_suppresses_quadratically() {
        let s = random_spec(4, 1, 9);
        let f = build_frame_n1(&s).unwrap();
        let h = build_total(&s, f.basis()).unwrap();
        let psi = f.logical(C::new(0.6, 0.0), C::new(0.0, 0.8));
        let total = 2.0;
        let mut taus = Vec::new();
        let mut leaks = Vec::new();
        for m in 3..=8 {
            let sched = BangBangSchedule::covering(total, 1 << m).unwrap();
            let (_, trace) = bangbang_evolve(&h, &f, &sched, &psi).unwrap();
            taus.push(sched.tau());
            leaks.push(*trace.last().unwrap());
        }
        let (p, _) = power_law_fit(&taus, &leaks).unwrap();
        assert!((p - 2.0).abs() < 0.2, "slope {p}, leaks {leaks:?}");
        let free = free_leak(&h, &f, total, &psi).unwrap();
        assert!(free > 1e-4 && leaks[5] * 1e3 < free);
        // leak / tau^2 settles
        let r = |i: usize| leaks[i] / (taus[i] * taus[i]);
        assert!((r(5) / r(4) - 1.0).abs() < 0.2);
    }

    #[test]
    fn bosonization_examples() {
        let s = random_spec(5, 1, 8);
        let vac = Basis::nuclear_sector(&s, 0).unwrap();
        let zero = KetState::basis_state(vac, 0).unwrap();
        assert!(bosonization_deviation(&s, &zero, 0, 0).unwrap() < 1e-12);
        assert!(bosonization_deviation(&s, &zero, 1, 3).unwrap() < 1e-12);
        for k in [3usize, 6] {
            let s = SpinBathSpec::<f64>::uniform(k, 1).unwrap();
            let f = build_frame_n1(&s).unwrap();
            let d = bosonization_deviation(&s, f.ket1(), 0, 0).unwrap();
            assert!((d - 2.0 / k as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn bosonization_matches_occupation_formula() {
        let s = random_spec(4, 2, 9);
        let f = build_frame_n1(&s).unwrap();
        let modes = complete_orthogonal_rows(s.alpha()).unwrap();
        let psi = f.leak_modes()[1].clone();
        for (k, k2) in [(0, 0), (1, 2), (3, 3)] {
            let mut expect = 0.0;
            for i in 0..4 {
                let mut cfg = vec![0u8; 5];
                cfg[i + 1] = 1;
                let idx = f.basis().index_of(&cfg).unwrap();
                let occ = psi.amps()[idx].norm_sqr();
                expect += modes[(k, i)] * modes[(k2, i)] * occ / s.spin();
            }
            let d = bosonization_deviation(&s, &psi, k, k2).unwrap();
            assert!((d - f64::abs(expect)).abs() < 1e-12);
        }
    }

    #[test]
    fn power_law_recovers_exponent() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-1.3)).collect();
        let (p, c) = power_law_fit(&xs, &ys).unwrap();
        assert!((p + 1.3).abs() < 1e-12 && (c - 3.0).abs() < 1e-12);
    }

    #[test]
    fn overhauser_ratio_scales_inverse_k() {
        let ks: Vec<usize> = (4..=12).collect();
        for two_i in [1u8, 2] {
            let mut ratios = Vec::new();
            for &k in &ks {
                let alpha = perturbed_profile(k, 0.3);
                let s = SpinBathSpec::new(two_i, alpha, 1.0, Zeeman::zero(), DMatrix::zeros(k, k)).unwrap();
                let f = build_frame_n1(&s).unwrap();
                ratios.push(overhauser_report(&s, &f).unwrap().ratio);
            }
            let xs: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
            let (p, _) = power_law_fit(&xs, &ratios).unwrap();
            assert!((p + 1.0).abs() < 0.15, "2I = {two_i}: exponent {p}");
        }
    }
}
