use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Zeeman constants. Products such as `g_star * mu_b * b` are energies; no
/// unit system is imposed.
#[derive(Clone, Debug, PartialEq)]
pub struct Zeeman<T> {
    pub g_star: T,
    pub mu_b: T,
    pub g_n: T,
    pub mu_n: T,
    pub b: T,
}

impl<T: Real> Zeeman<T> {
    pub fn zero() -> Self {
        Self {
            g_star: T::one(),
            mu_b: T::one(),
            g_n: T::zero(),
            mu_n: T::one(),
            b: T::zero(),
        }
    }

    /// `g* mu_B`.
    pub fn electron_moment(&self) -> T {
        self.g_star * self.mu_b
    }

    /// `g_n mu_n`.
    pub fn nuclear_moment(&self) -> T {
        self.g_n * self.mu_n
    }
}

impl<T: Real> Default for Zeeman<T> {
    fn default() -> Self {
        Self::zero()
    }
}

/// Static description of one quantum dot: an electron spin coupled to `K`
/// nuclei of spin `I`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinBathSpec<T: Real = f64> {
    two_i: u8,
    alpha: Vec<T>,
    a_hf: T,
    zeeman: Zeeman<T>,
    b: DMatrix<T>,
}

/// Rescales `raw` to unit Euclidean norm.
pub fn normalize_profile<T: Real>(raw: &[T]) -> Result<Vec<T>> {
    let norm = raw.iter().fold(T::zero(), |acc, &a| acc + a * a).sqrt();
    if !(norm > T::zero()) || !norm.is_finite() {
        return Err(Error::InvalidSpec(
            "hyperfine profile has zero or non-finite norm".into(),
        ));
    }
    Ok(raw.iter().map(|&a| a / norm).collect())
}

impl<T: Real> SpinBathSpec<T> {
    /// Validating constructor.
    ///
    /// Requires `K >= 2`, `2I >= 1`, `sum alpha_i^2 = 1` to 1e-12 and a
    /// symmetric zero-diagonal `b`.
    pub fn new(two_i: u8, alpha: Vec<T>, a_hf: T, zeeman: Zeeman<T>, b: DMatrix<T>) -> Result<Self> {
        let k = alpha.len();
        if k < 2 {
            return Err(Error::InvalidSpec(format!("need K >= 2 nuclei, got {k}")));
        }
        if two_i == 0 {
            return Err(Error::InvalidSpec("2I must be a positive integer".into()));
        }
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidSpec("hyperfine profile not finite".into()));
        }
        let norm2 = alpha.iter().fold(T::zero(), |acc, &a| acc + a * a);
        if (norm2 - T::one()).abs() > T::tol(1e-12) {
            return Err(Error::InvalidSpec(format!(
                "sum of alpha_i^2 = {norm2} (must be 1 within 1e-12)"
            )));
        }
        if b.nrows() != k || b.ncols() != k {
            return Err(Error::InvalidSpec(format!(
                "dipolar matrix is {}x{}, expected {k}x{k}",
                b.nrows(),
                b.ncols()
            )));
        }
        for i in 0..k {
            if b[(i, i)] != T::zero() {
                return Err(Error::InvalidSpec(format!("b[{i}][{i}] must be zero")));
            }
            for j in 0..i {
                if b[(i, j)] != b[(j, i)] {
                    return Err(Error::InvalidSpec(format!("b not symmetric at ({i}, {j})")));
                }
            }
        }
        if !a_hf.is_finite() {
            return Err(Error::InvalidSpec("hyperfine constant not finite".into()));
        }
        Ok(Self {
            two_i,
            alpha,
            a_hf,
            zeeman,
            b,
        })
    }

    /// Uniform profile `alpha_i = 1/sqrt(K)`, unit hyperfine constant, no
    /// field and no dipolar coupling.
    pub fn uniform(k: usize, two_i: u8) -> Result<Self> {
        let a = T::one() / T::lit(k as f64).sqrt();
        Self::new(two_i, vec![a; k], T::one(), Zeeman::zero(), DMatrix::zeros(k, k))
    }

    pub fn with_a_hf(mut self, a_hf: T) -> Self {
        self.a_hf = a_hf;
        self
    }

    pub fn with_zeeman(mut self, zeeman: Zeeman<T>) -> Self {
        self.zeeman = zeeman;
        self
    }

    pub fn with_dipolar(self, b: DMatrix<T>) -> Result<Self> {
        Self::new(self.two_i, self.alpha, self.a_hf, self.zeeman, b)
    }

    pub fn with_alpha(self, alpha: Vec<T>) -> Result<Self> {
        let k = alpha.len();
        let b = if k == self.k() { self.b } else { DMatrix::zeros(k, k) };
        Self::new(self.two_i, alpha, self.a_hf, self.zeeman, b)
    }

    pub fn k(&self) -> usize {
        self.alpha.len()
    }

    pub fn two_i(&self) -> u8 {
        self.two_i
    }

    /// Nuclear spin magnitude `I`.
    pub fn spin(&self) -> T {
        T::lit(self.two_i as f64) / T::lit(2.0)
    }

    pub fn alpha(&self) -> &[T] {
        &self.alpha
    }

    pub fn a_hf(&self) -> T {
        self.a_hf
    }

    pub fn zeeman(&self) -> &Zeeman<T> {
        &self.zeeman
    }

    pub fn dipolar(&self) -> &DMatrix<T> {
        &self.b
    }

    /// Largest total pair number, `2KI + 1`.
    pub fn max_pairs(&self) -> usize {
        self.k() * self.two_i as usize + 1
    }

    /// Flip-flop amplitude `A sqrt(2I)`: the X_d coefficient in the dressed frame.
    pub fn flip_amplitude(&self) -> T {
        self.a_hf * T::lit(self.two_i as f64).sqrt()
    }
}
