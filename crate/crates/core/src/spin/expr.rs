//! Symbolic spin operators: sums of products of single-slot `z`, `+`, `-`
//! operators. Expressions are basis-agnostic and are materialized into a
//! [`LinearOp`](crate::spin::LinearOp) between any two bases with the same
//! slot layout.

use std::collections::HashMap;
use std::ops::{Add, Mul, Neg, Sub};

use crate::scalar::{Real, C};
use crate::spin::basis::Config;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Component {
    Z,
    Plus,
    Minus,
}

impl Component {
    pub fn adjoint(self) -> Self {
        match self {
            Component::Z => Component::Z,
            Component::Plus => Component::Minus,
            Component::Minus => Component::Plus,
        }
    }

    /// Change of the pair number under this component.
    pub fn shift(self) -> isize {
        match self {
            Component::Z => 0,
            Component::Plus => 1,
            Component::Minus => -1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Factor {
    pub slot: usize,
    pub comp: Component,
}

/// `coeff * factors[0] * factors[1] * ...`; the last factor acts first.
#[derive(Clone, Debug, PartialEq)]
pub struct Term<T> {
    pub coeff: C<T>,
    pub factors: Vec<Factor>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpinExpr<T> {
    terms: Vec<Term<T>>,
}

/// Action of one component on a single slot with `two_s + 1` levels and
/// excitation count `q` (`m = q - s`). Returns the new `q` and the matrix
/// element, or `None` if the state is annihilated.
pub fn single_slot<T: Real>(comp: Component, two_s: u8, q: u8) -> Option<(u8, T)> {
    match comp {
        Component::Z => {
            let m = T::lit(2.0 * q as f64 - two_s as f64) / T::lit(2.0);
            if m == T::zero() {
                None
            } else {
                Some((q, m))
            }
        }
        Component::Plus => (q < two_s).then(|| (q + 1, T::lit(((two_s - q) as f64) * ((q + 1) as f64)).sqrt())),
        Component::Minus => (q > 0).then(|| (q - 1, T::lit((q as f64) * ((two_s - q + 1) as f64)).sqrt())),
    }
}

impl<T: Real> Term<T> {
    fn apply(&self, two_s: &[u8], cfg: &[u8]) -> Option<(Config, C<T>)> {
        let mut out: Config = cfg.into();
        let mut amp = self.coeff;
        for f in self.factors.iter().rev() {
            let (q, m) = single_slot::<T>(f.comp, two_s[f.slot], out[f.slot])?;
            out[f.slot] = q;
            amp *= m;
        }
        Some((out, amp))
    }
}

impl<T: Real> SpinExpr<T> {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    /// `c * 1`.
    pub fn identity(c: T) -> Self {
        Self {
            terms: vec![Term {
                coeff: T::cre(c),
                factors: Vec::new(),
            }],
        }
    }

    pub fn single(slot: usize, comp: Component) -> Self {
        Self {
            terms: vec![Term {
                coeff: C::new(T::one(), T::zero()),
                factors: vec![Factor { slot, comp }],
            }],
        }
    }

    pub fn terms(&self) -> &[Term<T>] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(mut self, c: T) -> Self {
        for t in &mut self.terms {
            t.coeff *= c;
        }
        self.prune()
    }

    pub fn scale_c(mut self, c: C<T>) -> Self {
        for t in &mut self.terms {
            t.coeff *= c;
        }
        self.prune()
    }

    fn prune(mut self) -> Self {
        self.terms
            .retain(|t| t.coeff.re != T::zero() || t.coeff.im != T::zero());
        self
    }

    pub fn adjoint(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coeff: t.coeff.conj(),
                    factors: t
                        .factors
                        .iter()
                        .rev()
                        .map(|f| Factor {
                            slot: f.slot,
                            comp: f.comp.adjoint(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &Self) -> Self {
        self.clone() * other.clone() - other.clone() * self.clone()
    }

    /// Net change of the pair number if every term shifts it by the same
    /// amount; `None` for mixed expressions.
    pub fn pair_shift(&self) -> Option<isize> {
        let mut shifts = self
            .terms
            .iter()
            .map(|t| t.factors.iter().map(|f| f.comp.shift()).sum::<isize>());
        let first = shifts.next().unwrap_or(0);
        shifts.all(|s| s == first).then_some(first)
    }

    /// Action on one configuration; duplicate output configurations are not
    /// merged.
    pub fn apply_config(&self, two_s: &[u8], cfg: &[u8]) -> Vec<(Config, C<T>)> {
        self.terms.iter().filter_map(|t| t.apply(two_s, cfg)).collect()
    }

    /// Action on a state stored as a configuration map. Useful when the
    /// intermediate sectors of a product are not worth materializing.
    pub fn apply_map(&self, two_s: &[u8], state: &HashMap<Config, C<T>>) -> HashMap<Config, C<T>> {
        let mut out: HashMap<Config, C<T>> = HashMap::new();
        for (cfg, &amp) in state {
            for (c2, a) in self.apply_config(two_s, cfg) {
                *out.entry(c2).or_default() += a * amp;
            }
        }
        out
    }
}

impl<T: Real> Add for SpinExpr<T> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self.terms.extend(rhs.terms);
        self
    }
}

impl<T: Real> Neg for SpinExpr<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

impl<T: Real> Sub for SpinExpr<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<T: Real> Mul for SpinExpr<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for a in &self.terms {
            for b in &rhs.terms {
                let mut factors = a.factors.clone();
                factors.extend_from_slice(&b.factors);
                terms.push(Term {
                    coeff: a.coeff * b.coeff,
                    factors,
                });
            }
        }
        Self { terms }.prune()
    }
}

impl<T: Real> std::iter::Sum for SpinExpr<T> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |a, b| a + b)
    }
}
