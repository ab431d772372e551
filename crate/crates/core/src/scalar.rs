//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

pub use nalgebra::Complex;

/// Complex amplitude over a real scalar `T`.
pub type C<T> = Complex<T>;

/// Real floating-point scalar: `f32` or `f64`.
///
/// Tolerances in this crate are written as `f64` literals and pass through
/// [`Real::tol`], which clamps them to a small multiple of machine epsilon so
/// that `1e-12` checks remain meaningful in single precision.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Default {
    fn lit(x: f64) -> Self;

    fn tol(x: f64) -> Self {
        let floor = Self::default_epsilon() * Self::lit(256.0);
        let t = Self::lit(x);
        if t < floor {
            floor
        } else {
            t
        }
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn cplx(re: f64, im: f64) -> C<Self> {
        C::new(Self::lit(re), Self::lit(im))
    }

    fn cre(re: Self) -> C<Self> {
        C::new(re, Self::zero())
    }
}

impl Real for f32 {
    fn lit(x: f64) -> Self {
        x as f32
    }
}

impl Real for f64 {
    fn lit(x: f64) -> Self {
        x
    }
}

/// `|z|` through the nalgebra complex-field interface.
pub fn cabs<T: Real>(z: C<T>) -> T {
    (z.re * z.re + z.im * z.im).sqrt()
}

pub fn cabs2<T: Real>(z: C<T>) -> T {
    z.re * z.re + z.im * z.im
}

/// `e^{i x}`.
pub fn cis<T: Real>(x: T) -> C<T> {
    C::new(x.cos(), x.sin())
}
