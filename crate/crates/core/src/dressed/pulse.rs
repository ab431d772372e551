//! Square pulses on a dressed qubit and single-qubit gate synthesis.
//!
//! In the frame, `[H_D] = F Z/2 + a X/2` with `a = A sqrt(2I)`. A segment of
//! constant `F` lasting `t` therefore applies
//!
//! ```text
//! U(phi, theta) = exp(-i phi (cos theta Z + sin theta X)),
//! phi = t sqrt(F^2 + a^2) / 2,   theta = atan2(a, F).
//! ```

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::scalar::{cabs, cabs2, cis, Real, C};
use crate::spin::SpinBathSpec;

pub type Mat2<T> = Matrix2<C<T>>;

/// Pauli matrix `'I' | 'X' | 'Y' | 'Z'`.
pub fn pauli<T: Real>(which: char) -> Mat2<T> {
    let (o, l, i) = (
        C::new(T::zero(), T::zero()),
        C::new(T::one(), T::zero()),
        C::new(T::zero(), T::one()),
    );
    match which {
        'X' => Matrix2::new(o, l, l, o),
        'Y' => Matrix2::new(o, -i, i, o),
        'Z' => Matrix2::new(l, o, o, -l),
        _ => Matrix2::identity(),
    }
}

/// `exp(-i x P)` for a Pauli `P`.
fn rot<T: Real>(p: char, x: T) -> Mat2<T> {
    Matrix2::identity() * C::new(x.cos(), T::zero()) - pauli::<T>(p) * C::new(T::zero(), x.sin())
}

/// `exp(-i phi (cos theta Z + sin theta X))`.
pub fn u_phi_theta<T: Real>(phi: T, theta: T) -> Mat2<T> {
    let n = pauli::<T>('Z') * C::new(theta.cos(), T::zero()) + pauli::<T>('X') * C::new(theta.sin(), T::zero());
    Matrix2::identity() * C::new(phi.cos(), T::zero()) - n * C::new(T::zero(), phi.sin())
}

/// `exp(-i theta Y/2) exp(-i phi Z) exp(i theta Y/2)`.
pub fn y_conjugated<T: Real>(phi: T, theta: T) -> Mat2<T> {
    let half = theta / T::lit(2.0);
    rot('Y', half) * rot('Z', phi) * rot('Y', -half)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseSegment<T> {
    /// Detuning `F` held during the segment.
    pub f: T,
    pub duration: T,
    /// Flip amplitude `A sqrt(2I)`.
    pub amplitude: T,
}

impl<T: Real> PulseSegment<T> {
    pub fn new(f: T, duration: T, amplitude: T) -> Result<Self> {
        if !(duration >= T::zero()) {
            return Err(crate::error::range("pulse duration", format!("{duration} < 0")));
        }
        Ok(Self { f, duration, amplitude })
    }

    /// Segment realizing `U(phi, theta)`; needs `sin theta` to share the sign
    /// of the amplitude and `phi >= 0`.
    pub fn from_angles(phi: T, theta: T, amplitude: T) -> Result<Self> {
        let s = theta.sin();
        if !(phi >= T::zero()) || amplitude == T::zero() || s * amplitude <= T::zero() {
            return Err(crate::error::range(
                "pulse angles",
                format!("(phi, theta) = ({phi}, {theta}) unreachable with amplitude {amplitude}"),
            ));
        }
        let rate = amplitude / s;
        Self::new(amplitude * theta.cos() / s, T::lit(2.0) * phi / rate, amplitude)
    }

    pub fn rate(&self) -> T {
        (self.f * self.f + self.amplitude * self.amplitude).sqrt()
    }

    pub fn phi(&self) -> T {
        self.duration * self.rate() / T::lit(2.0)
    }

    /// `atan2(a, F)`, in `(0, pi)` for a positive amplitude; `pi/2` at `F = 0`.
    pub fn theta(&self) -> T {
        self.amplitude.atan2(self.f)
    }
}

/// `exp(-i t [H_D])` for one segment.
pub fn pulse_unitary<T: Real>(seg: &PulseSegment<T>) -> Mat2<T> {
    if seg.rate() == T::zero() {
        return Matrix2::identity();
    }
    u_phi_theta(seg.phi(), seg.theta())
}

/// Time-ordered product: the first segment acts first.
pub fn compose<T: Real>(segs: &[PulseSegment<T>]) -> Mat2<T> {
    segs.iter().fold(Matrix2::identity(), |acc, s| pulse_unitary(s) * acc)
}

/// `1 - |tr(a^dag b)|^2 / 4`: zero iff equal up to global phase.
pub fn gate_infidelity<T: Real>(a: &Mat2<T>, b: &Mat2<T>) -> T {
    T::one() - cabs2((a.adjoint() * b).trace()) / T::lit(4.0)
}

fn arg<T: Real>(z: C<T>) -> T {
    z.im.atan2(z.re)
}

fn wrap_pi<T: Real>(x: T) -> T {
    let pi = T::pi();
    let r = x % pi;
    if r < T::zero() {
        r + pi
    } else {
        r
    }
}

pub fn compile_gate<T: Real>(target: &Mat2<T>, spec: &SpinBathSpec<T>) -> Result<Vec<PulseSegment<T>>> {
    compile_gate_with_amplitude(target, spec.flip_amplitude())
}

/// Square-pulse sequence reproducing `target` up to global phase.
///
/// The target is factored as `exp(-i a X) exp(-i b Y) exp(-i c X)`. X
/// rotations are single `F = 0` pulses; a Y rotation uses
/// `U(pi/2, theta) U(pi/2, pi/2) = exp(-i (theta + pi/2) Y)`, split in two
/// when the required `theta` would approach 0 or pi.
pub fn compile_gate_with_amplitude<T: Real>(target: &Mat2<T>, amplitude: T) -> Result<Vec<PulseSegment<T>>> {
    let defect = (target.adjoint() * target - Mat2::<T>::identity())
        .iter()
        .fold(T::zero(), |m, &z| m.max(cabs(z)));
    if defect > T::tol(1e-10) {
        return Err(Error::Contract(format!("target is not unitary (defect {defect:e})")));
    }
    if amplitude == T::zero() {
        return Err(Error::Contract("gate synthesis needs a nonzero flip amplitude".into()));
    }
    let det = target.determinant();
    let w = target * cis(-arg(det) / T::lit(2.0));
    let h = {
        let s = C::new(T::one() / T::lit(2.0).sqrt(), T::zero());
        Matrix2::new(s, s, s, -s)
    };
    let v = h * w * h;
    let eps = T::tol(1e-12);
    let b = cabs(v[(1, 0)]).atan2(cabs(v[(0, 0)]));
    let sum = if cabs(v[(0, 0)]) > eps {
        -arg(v[(0, 0)])
    } else {
        T::zero()
    };
    let diff = if cabs(v[(1, 0)]) > eps {
        arg(v[(1, 0)])
    } else {
        T::zero()
    };
    let alpha = (sum + diff) / T::lit(2.0);
    let gamma = (sum - diff) / T::lit(2.0);

    let mut out = Vec::new();
    if b.sin().abs() < eps {
        x_rotation(alpha + gamma, amplitude, &mut out)?;
    } else {
        x_rotation(gamma, amplitude, &mut out)?;
        y_rotation(-b, amplitude, &mut out)?;
        x_rotation(alpha, amplitude, &mut out)?;
    }
    Ok(out)
}

fn x_rotation<T: Real>(beta: T, amplitude: T, out: &mut Vec<PulseSegment<T>>) -> Result<()> {
    let sign = if amplitude > T::zero() { T::one() } else { -T::one() };
    let phi = wrap_pi(beta * sign);
    if phi.sin().abs() < T::tol(1e-12) {
        return Ok(());
    }
    out.push(PulseSegment::new(
        T::zero(),
        T::lit(2.0) * phi / amplitude.abs(),
        amplitude,
    )?);
    Ok(())
}

fn y_rotation<T: Real>(gamma: T, amplitude: T, out: &mut Vec<PulseSegment<T>>) -> Result<()> {
    let pi = T::pi();
    let half_pi = T::frac_pi_2();
    let r = wrap_pi(gamma);
    if r.sin().abs() < T::tol(1e-12) {
        return Ok(());
    }
    if (r - half_pi).abs() < T::lit(0.2) {
        y_rotation(gamma / T::lit(2.0), amplitude, out)?;
        return y_rotation(gamma / T::lit(2.0), amplitude, out);
    }
    let g = if r > half_pi { r } else { r + pi };
    let mut theta = g - half_pi;
    if amplitude < T::zero() {
        theta -= pi;
    }
    x_rotation(half_pi, amplitude, out)?;
    out.push(PulseSegment::from_angles(half_pi, theta, amplitude)?);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn close(a: &Mat2<f64>, b: &Mat2<f64>, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    fn haar(rng: &mut ChaCha8Rng) -> Mat2<f64> {
        let a = rng.random_range(0.0..2.0 * PI);
        let b = rng.random_range(0.0..PI);
        let c = rng.random_range(0.0..2.0 * PI);
        let g = rng.random_range(0.0..2.0 * PI);
        rot('Z', a) * rot('Y', b) * rot('Z', c) * cis(g)
    }

    #[test]
    fn three_factor_decomposition_on_grid() {
        for i in 0..20 {
            for j in 0..20 {
                let phi = -3.0 + 0.37 * i as f64;
                let theta = -PI + 0.33 * j as f64;
                assert!(close(&u_phi_theta(phi, theta), &y_conjugated(phi, theta), 1e-12));
            }
        }
    }

    #[test]
    fn quoted_pulse_identities() {
        let i = C::new(0.0, 1.0);
        let x = pauli::<f64>('X');
        assert!(close(&u_phi_theta(FRAC_PI_2, FRAC_PI_2), &(x * -i), 1e-15));
        for phi in [0.1, 0.7, 2.0] {
            let fwd = u_phi_theta(phi + PI, FRAC_PI_2);
            assert!(close(&fwd, &(-u_phi_theta(phi, FRAC_PI_2)), 1e-14));
            assert!(close(&u_phi_theta(phi + PI, FRAC_PI_2), &(-rot('X', phi)), 1e-14));
            assert!(close(
                &(u_phi_theta(phi, FRAC_PI_2) * rot('X', -phi)),
                &Mat2::identity(),
                1e-14
            ));
        }
        for theta in [0.2, 1.0, 2.5] {
            let lhs = u_phi_theta(FRAC_PI_2, theta) * x;
            assert!(close(&lhs, &(rot('Y', theta + FRAC_PI_2) * i), 1e-14));
        }
    }

    #[test]
    fn segment_angles_match_evolution() {
        let seg = PulseSegment::new(0.4, 1.3, 0.9).unwrap();
        let h = pauli::<f64>('Z') * C::new(0.2, 0.0) + pauli::<f64>('X') * C::new(0.45, 0.0);
        // exp(-i t h) via eigen-free formula for traceless 2x2
        let r = (0.2f64 * 0.2 + 0.45 * 0.45).sqrt();
        let expect = Mat2::identity() * C::new((r * 1.3).cos(), 0.0) - h * C::new(0.0, (r * 1.3).sin() / r);
        assert!(close(&pulse_unitary(&seg), &expect, 1e-14));
        let zero_f = PulseSegment::new(0.0, 1.0, 2.0).unwrap();
        assert!((zero_f.theta() - FRAC_PI_2).abs() < 1e-15);
        let neg = PulseSegment::new(-1.0, 1.0, 0.5).unwrap();
        assert!(neg.theta() > FRAC_PI_2 && neg.theta() < PI);
        assert!(PulseSegment::new(0.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn from_angles_round_trip() {
        for theta in [0.1, 1.0, FRAC_PI_2, 2.9] {
            let s = PulseSegment::from_angles(0.8, theta, 1.7).unwrap();
            assert!((s.phi() - 0.8).abs() < 1e-12 && (s.theta() - theta).abs() < 1e-12);
        }
        assert!(PulseSegment::from_angles(0.8, -0.5, 1.0).is_err());
    }

    #[test]
    fn trivial_targets() {
        assert!(compile_gate_with_amplitude(&Mat2::<f64>::identity(), 1.0)
            .unwrap()
            .is_empty());
        let segs = compile_gate_with_amplitude(&pauli::<f64>('X'), 1.3).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].f, 0.0);
        assert!((segs[0].phi() - FRAC_PI_2).abs() < 1e-12);
        assert!(compile_gate_with_amplitude(&(pauli::<f64>('X') * C::new(2.0, 0.0)), 1.0).is_err());
        assert!(compile_gate_with_amplitude(&pauli::<f64>('X'), 0.0).is_err());
    }

    #[test]
    fn hadamard_and_paulis() {
        let s = C::new(1.0 / 2f64.sqrt(), 0.0);
        let had = Matrix2::new(s, s, s, -s);
        for target in [had, pauli('Y'), pauli('Z'), rot('Y', FRAC_PI_2), rot('Y', 1e-13)] {
            for amp in [1.0, -0.6] {
                let segs = compile_gate_with_amplitude(&target, amp).unwrap();
                assert!(gate_infidelity(&compose(&segs), &target) < 1e-8);
                assert!(segs.iter().all(|s| s.duration >= 0.0));
            }
        }
    }

    #[test]
    fn random_targets() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let target = haar(&mut rng);
            let segs = compile_gate_with_amplitude(&target, 0.8).unwrap();
            assert!(gate_infidelity(&compose(&segs), &target) < 1e-8);
        }
    }
}
