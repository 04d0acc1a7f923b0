//! Exact truncated scalar tower: rationals, formal-parameter series in `hbar`,
//! and Laurent polynomials in a second parameter `nu`.
//!
//! All arithmetic is exact over arbitrary-precision rationals. An [`HbarSeries`]
//! keeps powers `0..=order` of the deformation parameter and drops everything
//! beyond (working modulo hbar^(order+1)); the truncation order is explicit on
//! every value, never ambient state.

use num::{BigInt, BigRational, One, Zero};
use std::collections::BTreeMap;
use std::fmt;

/// Exact rational scalar.
pub type Q = BigRational;

/// Build a rational from an integer pair.
pub fn q(num: i64, den: i64) -> Q {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Build an integer rational.
pub fn qi(num: i64) -> Q {
    BigRational::from(BigInt::from(num))
}

/// Default truncation order for the deformation parameter (powers 0..=3 kept).
pub const DEFAULT_HBAR_ORDER: u32 = 3;

/// Truncated polynomial in the formal deformation parameter.
///
/// Invariants: every stored power is `<= order` and every stored coefficient is
/// nonzero; the zero series stores no terms.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HbarSeries {
    order: u32,
    terms: BTreeMap<u32, Q>,
}

impl HbarSeries {
    pub fn zero(order: u32) -> Self {
        HbarSeries { order, terms: BTreeMap::new() }
    }

    pub fn one(order: u32) -> Self {
        Self::monomial(0, qi(1), order)
    }

    /// `c * hbar^pow`, dropped silently if `pow > order`.
    pub fn monomial(pow: u32, c: Q, order: u32) -> Self {
        let mut s = Self::zero(order);
        if pow <= order && !c.is_zero() {
            s.terms.insert(pow, c);
        }
        s
    }

    pub fn constant(c: Q, order: u32) -> Self {
        Self::monomial(0, c, order)
    }

    pub fn from_pairs(pairs: &[(u32, Q)], order: u32) -> Self {
        let mut s = Self::zero(order);
        for (p, c) in pairs {
            s.add_term(*p, c.clone());
        }
        s
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, pow: u32) -> Q {
        self.terms.get(&pow).cloned().unwrap_or_else(Q::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, &Q)> {
        self.terms.iter().map(|(p, c)| (*p, c))
    }

    /// Lowest power with nonzero coefficient; `None` for the zero series
    /// (whose valuation is +infinity at this truncation).
    pub fn valuation(&self) -> Option<u32> {
        self.terms.keys().next().copied()
    }

    pub fn add_term(&mut self, pow: u32, c: Q) {
        if pow > self.order || c.is_zero() {
            return;
        }
        let entry = self.terms.entry(pow).or_insert_with(Q::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&pow);
        }
    }

    /// Retruncate to a (usually lower) order.
    pub fn truncated(&self, order: u32) -> Self {
        let mut s = Self::zero(order);
        for (p, c) in &self.terms {
            if *p <= order {
                s.terms.insert(*p, c.clone());
            }
        }
        s
    }

    pub fn add(&self, other: &Self) -> Self {
        let order = self.order.min(other.order);
        let mut s = self.truncated(order);
        for (p, c) in &other.terms {
            s.add_term(*p, c.clone());
        }
        s
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        let mut s = self.clone();
        for c in s.terms.values_mut() {
            *c = -c.clone();
        }
        s
    }

    pub fn mul(&self, other: &Self) -> Self {
        let order = self.order.min(other.order);
        let mut s = Self::zero(order);
        for (p, c) in &self.terms {
            if *p > order {
                continue;
            }
            for (p2, c2) in &other.terms {
                if p + p2 <= order {
                    s.add_term(p + p2, c * c2);
                }
            }
        }
        s
    }

    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return Self::zero(self.order);
        }
        let mut s = self.clone();
        for v in s.terms.values_mut() {
            *v = v.clone() * c;
        }
        s
    }

    /// Multiply by `hbar^pow`, truncating what falls off the end.
    pub fn shift(&self, pow: u32) -> Self {
        let mut s = Self::zero(self.order);
        for (p, c) in &self.terms {
            if p + pow <= self.order {
                s.terms.insert(p + pow, c.clone());
            }
        }
        s
    }

    /// Multiplicative inverse; defined exactly when the constant term is nonzero.
    pub fn invert(&self) -> Option<Self> {
        let c0 = self.coeff(0);
        if c0.is_zero() {
            return None;
        }
        let c0_inv = Q::one() / c0;
        // Geometric series: (c0 (1 + t))^{-1} = c0^{-1} sum (-t)^k.
        let mut t = self.scale(&c0_inv);
        t.terms.remove(&0); // t now has valuation >= 1
        let mut acc = Self::one(self.order);
        let mut pw = Self::one(self.order);
        for _ in 0..self.order {
            pw = pw.mul(&t).neg();
            acc = acc.add(&pw);
        }
        Some(acc.scale(&c0_inv))
    }
}

impl fmt::Debug for HbarSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0 (mod h^{})", self.order + 1);
        }
        let mut first = true;
        for (p, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match p {
                0 => write!(f, "{}", c)?,
                1 => write!(f, "{}*h", c)?,
                _ => write!(f, "{}*h^{}", c, p)?,
            }
        }
        write!(f, " (mod h^{})", self.order + 1)
    }
}

/// Exact Laurent polynomial in the rescaling parameter `nu` over [`HbarSeries`].
///
/// Rescaling and weighting operations only ever produce finitely many `nu`
/// powers, so no truncation in `nu` is needed; exactness makes every
/// `nu`-order bound hold trivially.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct NuSeries {
    hbar_order: u32,
    terms: BTreeMap<i32, HbarSeries>,
}

impl NuSeries {
    pub fn zero(hbar_order: u32) -> Self {
        NuSeries { hbar_order, terms: BTreeMap::new() }
    }

    pub fn from_hbar(s: HbarSeries) -> Self {
        let mut n = Self::zero(s.order());
        if !s.is_zero() {
            n.terms.insert(0, s);
        }
        n
    }

    pub fn one(hbar_order: u32) -> Self {
        Self::from_hbar(HbarSeries::one(hbar_order))
    }

    pub fn constant(c: Q, hbar_order: u32) -> Self {
        Self::from_hbar(HbarSeries::constant(c, hbar_order))
    }

    pub fn hbar_order(&self) -> u32 {
        self.hbar_order
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, &HbarSeries)> {
        self.terms.iter().map(|(p, c)| (*p, c))
    }

    pub fn coeff(&self, nu_pow: i32) -> HbarSeries {
        self.terms.get(&nu_pow).cloned().unwrap_or_else(|| HbarSeries::zero(self.hbar_order))
    }

    pub fn add_term(&mut self, nu_pow: i32, c: HbarSeries) {
        if c.is_zero() {
            return;
        }
        let order = self.hbar_order;
        let entry = self.terms.entry(nu_pow).or_insert_with(|| HbarSeries::zero(order));
        *entry = entry.add(&c);
        if entry.is_zero() {
            self.terms.remove(&nu_pow);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut s = self.clone();
        s.hbar_order = self.hbar_order.min(other.hbar_order);
        for (p, c) in &other.terms {
            s.add_term(*p, c.clone());
        }
        s
    }

    pub fn neg(&self) -> Self {
        let mut s = self.clone();
        for c in s.terms.values_mut() {
            *c = c.neg();
        }
        s
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut s = Self::zero(self.hbar_order.min(other.hbar_order));
        for (p, c) in &self.terms {
            for (p2, c2) in &other.terms {
                s.add_term(p + p2, c.mul(c2));
            }
        }
        s
    }

    pub fn scale(&self, c: &Q) -> Self {
        let mut s = self.clone();
        for v in s.terms.values_mut() {
            *v = v.scale(c);
        }
        s.terms.retain(|_, v| !v.is_zero());
        s
    }

    /// Multiply by `nu^pow` (negative powers allowed).
    pub fn shift_nu(&self, pow: i32) -> Self {
        let mut s = Self::zero(self.hbar_order);
        for (p, c) in &self.terms {
            s.terms.insert(p + pow, c.clone());
        }
        s
    }
}
