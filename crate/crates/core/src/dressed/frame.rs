use std::sync::Arc;

use nalgebra::{DMatrix, Matrix2};

use crate::error::{range, Error, Result};
use crate::scalar::{cabs, cabs2, Real, C};
use crate::spin::linalg::{complete_basis, complete_orthogonal_rows, eigh, vdot, vnorm, CMat, CVec};
use crate::spin::{collective_op, Basis, Component, KetState, LinearOp, SpinBathSpec};

/// Sector dimension above which leak modes of `N > 1` frames are not
/// materialized (the projector onto the frame is still exact).
pub const LEAK_MODE_LIMIT: usize = 512;

/// Which `h` eigenstate to dress.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum Selector<T> {
    #[default]
    MaxH,
    /// Smallest `h_m > 1e-8`.
    MinH,
    /// Requires the sector to have nuclear `I_z = v`; then `MaxH`.
    TargetIz(T),
}

#[derive(Clone, Debug)]
pub struct DressedFrame<T: Real = f64> {
    spec: SpinBathSpec<T>,
    n: usize,
    basis: Arc<Basis>,
    m_state: KetState<T>,
    h_m: T,
    ket0: KetState<T>,
    ket1: KetState<T>,
    leak_modes: Vec<KetState<T>>,
    mode_matrix: DMatrix<T>,
}

impl<T: Real> DressedFrame<T> {
    pub fn spec(&self) -> &SpinBathSpec<T> {
        &self.spec
    }

    /// Total pair number of the sector holding the frame.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn m_state(&self) -> &KetState<T> {
        &self.m_state
    }

    pub fn h_m(&self) -> T {
        self.h_m
    }

    pub fn ket0(&self) -> &KetState<T> {
        &self.ket0
    }

    pub fn ket1(&self) -> &KetState<T> {
        &self.ket1
    }

    /// `|1_k>`, `k = 1..K-1` for `N = 1`; the orthogonal complement of the
    /// pair within the sector otherwise (empty above [`LEAK_MODE_LIMIT`]).
    pub fn leak_modes(&self) -> &[KetState<T>] {
        &self.leak_modes
    }

    /// Orthogonal `K x K` matrix `[alpha]` with row 0 equal to `alpha`.
    pub fn mode_matrix(&self) -> &DMatrix<T> {
        &self.mode_matrix
    }

    /// `c0 |0>_d + c1 |1>_d`.
    pub fn logical(&self, c0: C<T>, c1: C<T>) -> KetState<T> {
        self.ket0
            .scaled(c0)
            .axpy(c1, &self.ket1)
            .expect("frame kets share a basis")
    }

    /// `(<0|psi>, <1|psi>)`.
    pub fn coordinates(&self, psi: &KetState<T>) -> Result<(C<T>, C<T>)> {
        Ok((self.ket0.inner(psi)?, self.ket1.inner(psi)?))
    }

    /// `|| (1 - P_2) psi ||^2`.
    pub fn leak_probability(&self, psi: &KetState<T>) -> Result<T> {
        let (c0, c1) = self.coordinates(psi)?;
        let rest = psi.axpy(-c0, &self.ket0)?.axpy(-c1, &self.ket1)?;
        Ok(rest.norm() * rest.norm())
    }

    /// `(1 - P_2) psi`.
    pub fn leak_component(&self, psi: &KetState<T>) -> Result<KetState<T>> {
        let (c0, c1) = self.coordinates(psi)?;
        psi.axpy(-c0, &self.ket0)?.axpy(-c1, &self.ket1)
    }

    /// `max |<a|b> - delta_ab|` over `{ket0, ket1, leak modes}`.
    pub fn orthonormality_defect(&self) -> T {
        let all: Vec<&KetState<T>> = [&self.ket0, &self.ket1]
            .into_iter()
            .chain(self.leak_modes.iter())
            .collect();
        let mut worst = T::zero();
        for (i, a) in all.iter().enumerate() {
            for (j, b) in all.iter().enumerate().skip(i) {
                let d = vdot(a.amps(), b.amps());
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max(cabs(d - C::new(target, T::zero())));
            }
        }
        worst
    }

    /// `|| A_+|m> - sqrt(h_m) |Phi_{m+1}> ||`.
    pub fn raising_defect(&self) -> Result<T> {
        let up = Basis::nuclear_sector(&self.spec, self.n)?;
        let ap = collective_op(
            &self.spec,
            self.spec.alpha(),
            Component::Plus,
            self.m_state.basis(),
            &up,
        )?;
        let phi = nuclear_part(&self.ket1, &up, 0)?;
        let diff = ap.apply(self.m_state.amps()) - phi.amps() * C::new(self.h_m.sqrt(), T::zero());
        Ok(vnorm(&diff))
    }

    pub(crate) fn from_parts(
        spec: SpinBathSpec<T>,
        n: usize,
        m_state: KetState<T>,
        h_m: T,
        ket0: KetState<T>,
        ket1: KetState<T>,
    ) -> Result<Self> {
        let basis = ket0.basis().clone();
        let mode_matrix = complete_orthogonal_rows(spec.alpha())?;
        let leak_modes = if n == 1 {
            mode_leak_states(&spec, &basis, &mode_matrix)?
        } else if basis.dim() <= LEAK_MODE_LIMIT {
            complement_states(&basis, &ket0, &ket1)?
        } else {
            Vec::new()
        };
        Ok(Self {
            spec,
            n,
            basis,
            m_state,
            h_m,
            ket0,
            ket1,
            leak_modes,
            mode_matrix,
        })
    }
}

/// Put `nuc` (bath-only basis) next to an electron in state `e` (1 = up).
pub(crate) fn with_electron<T: Real>(nuc: &KetState<T>, e: u8, target: &Arc<Basis>) -> Result<KetState<T>> {
    let mut out = KetState::zero(target.clone());
    for (i, &a) in nuc.amps().iter().enumerate() {
        if a == C::default() {
            continue;
        }
        let mut cfg = nuc.basis().config(i).to_vec();
        cfg[0] = e;
        let j = target
            .index_of(&cfg)
            .ok_or_else(|| Error::BasisMismatch("configuration outside the sector".into()))?;
        out.amps_mut()[j] = a;
    }
    Ok(out)
}

/// Nuclear amplitudes of the electron-`e` part of `ket`.
pub(crate) fn nuclear_part<T: Real>(ket: &KetState<T>, nuc: &Arc<Basis>, e: u8) -> Result<KetState<T>> {
    let mut out = KetState::zero(nuc.clone());
    for (i, &a) in ket.amps().iter().enumerate() {
        let cfg = ket.basis().config(i);
        if cfg[0] != e {
            continue;
        }
        let mut n = cfg.to_vec();
        n[0] = 0;
        if let Some(j) = nuc.index_of(&n) {
            out.amps_mut()[j] = a;
        }
    }
    Ok(out)
}

fn mode_leak_states<T: Real>(
    spec: &SpinBathSpec<T>,
    basis: &Arc<Basis>,
    modes: &DMatrix<T>,
) -> Result<Vec<KetState<T>>> {
    let vac = Basis::nuclear_sector(spec, 0)?;
    let one = Basis::nuclear_sector(spec, 1)?;
    let zero = KetState::basis_state(vac.clone(), 0)?;
    (1..spec.k())
        .map(|k| {
            let row: Vec<T> = modes.row(k).iter().copied().collect();
            let ak = collective_op(spec, &row, Component::Plus, &vac, &one)?;
            with_electron(&ak.apply_ket(&zero)?, 0, basis)
        })
        .collect()
}

fn complement_states<T: Real>(basis: &Arc<Basis>, k0: &KetState<T>, k1: &KetState<T>) -> Result<Vec<KetState<T>>> {
    let full = complete_basis(&[k0.amps().clone(), k1.amps().clone()], basis.dim())?;
    full.into_iter()
        .skip(2)
        .map(|v| KetState::new(basis.clone(), v))
        .collect()
}

/// The `N = 1` frame on the polarized bath: `h_m = 1`, `|1>_d = |down> A_+|0>`.
pub fn build_frame_n1<T: Real>(spec: &SpinBathSpec<T>) -> Result<DressedFrame<T>> {
    let basis = Basis::sector(spec, 1)?;
    let vac = Basis::nuclear_sector(spec, 0)?;
    let one = Basis::nuclear_sector(spec, 1)?;
    let m = KetState::basis_state(vac.clone(), 0)?;
    let ap = collective_op(spec, spec.alpha(), Component::Plus, &vac, &one)?;
    let phi = ap.apply_ket(&m)?;
    let h_m = phi.norm() * phi.norm();
    let ket0 = with_electron(&m, 1, &basis)?;
    let ket1 = with_electron(&phi.normalized()?, 0, &basis)?;
    DressedFrame::from_parts(spec.clone(), 1, m, h_m, ket0, ket1)
}

/// Frame in sector `N` built on the `h` eigenstate chosen by `selector`.
///
/// Degenerate eigenspaces are resolved deterministically: the state is the
/// projection of the basis configuration with the largest weight in the
/// eigenspace (lowest index on ties), with its largest amplitude made real
/// and positive.
pub fn build_frame_general<T: Real>(
    spec: &SpinBathSpec<T>,
    n: usize,
    selector: Selector<T>,
) -> Result<DressedFrame<T>> {
    let max = spec.max_pairs();
    if n == 0 || n >= max {
        return Err(range(
            "frame pair number",
            format!("N = {n} must satisfy 0 < N < {max}"),
        ));
    }
    let nuc = Basis::nuclear_sector(spec, n - 1)?;
    let up = Basis::nuclear_sector(spec, n)?;
    if let Selector::TargetIz(v) = selector {
        let iz = T::lit((n - 1) as f64) - T::lit(spec.k() as f64) * spec.spin();
        if (iz - v).abs() > T::tol(1e-9) {
            return Err(range(
                "target I_z",
                format!("sector N = {n} has nuclear I_z = {iz}, not {v}"),
            ));
        }
    }
    let ap = collective_op(spec, spec.alpha(), Component::Plus, &nuc, &up)?;
    let h = ap.adjoint().matmul(&ap)?;
    let (vals, vecs) = eigh(h.to_dense());
    let d = vals.len();
    let cut = T::lit(1e-8);
    let target = match selector {
        Selector::MaxH | Selector::TargetIz(_) => vals[d - 1],
        Selector::MinH => vals
            .iter()
            .copied()
            .find(|&v| v > cut)
            .ok_or_else(|| Error::Contract("no eigenstate with h_m > 0".into()))?,
    };
    if !(target > cut) {
        return Err(Error::Contract("selected eigenstate has h_m = 0".into()));
    }
    let gap = T::tol(1e-9) * target.abs().max(T::one());
    let cols: Vec<usize> = (0..d).filter(|&i| (vals[i] - target).abs() < gap).collect();
    let space = CMat::from_fn(d, cols.len(), |r, c| vecs[(r, cols[c])]);
    let m_amps = pick_representative(&space);
    let m = KetState::new(nuc.clone(), m_amps)?;
    let phi = ap.apply_ket(&m)?;
    let h_m = h.matrix_element(&m, &m)?.re;
    let basis = Basis::sector(spec, n)?;
    let ket0 = with_electron(&m, 1, &basis)?;
    let ket1 = with_electron(&phi.normalized()?, 0, &basis)?;
    DressedFrame::from_parts(spec.clone(), n, m, h_m, ket0, ket1)
}

fn pick_representative<T: Real>(space: &CMat<T>) -> CVec<T> {
    let d = space.nrows();
    let weight = |r: usize| space.row(r).iter().fold(T::zero(), |a, &z| a + cabs2(z));
    let tie = T::tol(1e-12);
    let mut best = 0;
    let mut best_w = weight(0);
    for r in 1..d {
        let w = weight(r);
        if w > best_w + tie {
            best = r;
            best_w = w;
        }
    }
    let mut v = space * space.row(best).adjoint();
    let n = vnorm(&v);
    v /= C::new(n, T::zero());
    let mut lead = 0;
    let mut lead_abs = T::zero();
    for (i, &z) in v.iter().enumerate() {
        if cabs(z) > lead_abs + tie {
            lead = i;
            lead_abs = cabs(z);
        }
    }
    let phase = v[lead] / C::new(lead_abs, T::zero());
    v.map(|z| z * phase.conj())
}

/// `|| (1 - P_2) H P_2 ||_2` with `P_2` the frame projector; `h` may act on
/// the frame's sector or on any larger basis of the same layout.
pub fn closure_norm<T: Real>(frame: &DressedFrame<T>, h: &LinearOp<T>) -> Result<T> {
    let space = h.domain();
    let k0 = frame.ket0.embed(space)?;
    let k1 = frame.ket1.embed(space)?;
    let mut cols = Vec::with_capacity(2);
    for k in [&k0, &k1] {
        let hk = h.apply_ket(k)?;
        let hk = hk.embed(space)?;
        let c0 = k0.inner(&hk)?;
        let c1 = k1.inner(&hk)?;
        cols.push(hk.axpy(-c0, &k0)?.axpy(-c1, &k1)?.into_amps());
    }
    let g = Matrix2::new(
        vdot(&cols[0], &cols[0]),
        vdot(&cols[0], &cols[1]),
        vdot(&cols[1], &cols[0]),
        vdot(&cols[1], &cols[1]),
    );
    // largest eigenvalue of the 2x2 Gram matrix
    let (a, b, c) = (g[(0, 0)].re, g[(0, 1)], g[(1, 1)].re);
    let half = T::lit(0.5);
    let mean = (a + c) * half;
    let disc = (((a - c) * half).powi(2) + cabs2(b)).sqrt();
    Ok((mean + disc).max(T::zero()).sqrt())
}

/// `[[<0|op|0>, <0|op|1>], [<1|op|0>, <1|op|1>]]`.
pub fn matrix_rep<T: Real>(op: &LinearOp<T>, frame: &DressedFrame<T>) -> Result<Matrix2<C<T>>> {
    let dom = [frame.ket0.embed(op.domain())?, frame.ket1.embed(op.domain())?];
    let cod = [frame.ket0.embed(op.codomain())?, frame.ket1.embed(op.codomain())?];
    let images = [op.apply_ket(&dom[0])?, op.apply_ket(&dom[1])?];
    let mut m = Matrix2::zeros();
    for a in 0..2 {
        for b in 0..2 {
            m[(a, b)] = cod[a].inner(&images[b])?;
        }
    }
    Ok(m)
}

/// `W = |up><0|_d + |down><1|_d`, from the frame's sector to the bare
/// electron space.
pub fn dressing_unitary<T: Real>(frame: &DressedFrame<T>) -> Result<LinearOp<T>> {
    let diff = frame.ket0.axpy(-C::new(T::one(), T::zero()), &frame.ket1)?;
    if diff.norm() < T::tol(1e-6) {
        return Err(Error::Contract("degenerate frame".into()));
    }
    let e = Basis::electron();
    let up = e.index_of(&[1]).expect("electron basis has |up>");
    let down = e.index_of(&[0]).expect("electron basis has |down>");
    let mut trip = Vec::new();
    for (row, ket) in [(up, &frame.ket0), (down, &frame.ket1)] {
        for (j, &a) in ket.amps().iter().enumerate() {
            if a != C::default() {
                trip.push((row, j, a.conj()));
            }
        }
    }
    Ok(LinearOp::from_triplets(frame.basis.clone(), e, trip))
}
