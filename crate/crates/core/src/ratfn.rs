//! Exact multivariate polynomials and rational functions over the
//! rationals, for coefficient fields of parameter-dependent data.
//!
//! Polynomials are sparse maps from exponent vectors to rational
//! coefficients.  Rational functions are stored as reduced fractions:
//! numerator and denominator are cleared of their common rational content,
//! the denominator's lexicographically leading coefficient is normalized
//! positive, and in the univariate case the full polynomial gcd is divided
//! out.  Equality always falls back to cross-multiplication, which is exact
//! in any number of variables.

use std::collections::BTreeMap;
use std::fmt;

use num::{BigInt, Integer, Signed, Zero};

use crate::error::{Error, Result};
use crate::scalars::{qi, Q};

/// Sparse polynomial: exponent vector (one entry per variable) to rational
/// coefficient.  Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, Q>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(c: Q, nvars: usize) -> Self {
        let mut p = Poly::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Poly::constant(qi(1), nvars)
    }

    pub fn var(i: usize, nvars: usize) -> Self {
        assert!(i < nvars, "variable index out of range");
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Poly::zero(nvars);
        p.add_term(e, qi(1));
        p
    }

    pub fn from_terms(terms: Vec<(Vec<u32>, Q)>, nvars: usize) -> Result<Self> {
        let mut p = Poly::zero(nvars);
        for (e, c) in terms {
            if e.len() != nvars {
                return Err(Error::InvalidInput(format!(
                    "exponent vector of length {} in a {}-variable polynomial",
                    e.len(),
                    nvars
                )));
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Q)> {
        self.terms.iter()
    }

    pub fn add_term(&mut self, expo: Vec<u32>, c: Q) {
        debug_assert_eq!(expo.len(), self.nvars);
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(expo);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get().clone() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        debug_assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c.clone())).collect(),
        }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        debug_assert_eq!(self.nvars, other.nvars);
        let mut out = Poly::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1.clone() * c2.clone());
            }
        }
        out
    }

    pub fn scale(&self, c: &Q) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.nvars);
        }
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, k)| (e.clone(), k.clone() * c.clone())).collect(),
        }
    }

    pub fn derivative(&self, i: usize) -> Poly {
        assert!(i < self.nvars, "variable index out of range");
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[i] -= 1;
            out.add_term(e2, c.clone() * qi(e[i] as i64));
        }
        out
    }

    pub fn eval(&self, point: &[Q]) -> Q {
        debug_assert_eq!(point.len(), self.nvars);
        let mut total = Q::zero();
        for (e, c) in &self.terms {
            let mut v = c.clone();
            for (i, &p) in e.iter().enumerate() {
                for _ in 0..p {
                    v = v * point[i].clone();
                }
            }
            total += v;
        }
        total
    }

    /// Lexicographically greatest exponent vector (the leading monomial).
    fn leading(&self) -> Option<(&Vec<u32>, &Q)> {
        self.terms.iter().next_back()
    }

    /// Rational content with the sign of the leading coefficient: dividing
    /// by it leaves coprime integer coefficients with positive leading term.
    fn content(&self) -> Q {
        let Some((_, lead)) = self.leading() else { return qi(1) };
        let mut num_gcd = BigInt::zero();
        let mut den_lcm = BigInt::from(1);
        for c in self.terms.values() {
            num_gcd = num_gcd.gcd(c.numer());
            den_lcm = den_lcm.lcm(c.denom());
        }
        let mut content = Q::new(num_gcd, den_lcm);
        if lead.is_negative() {
            content = -content;
        }
        content
    }

    /// Total degree of the leading monomial in one variable (univariate use).
    fn degree_uni(&self) -> Option<u32> {
        self.terms.keys().map(|e| e[0]).max()
    }

    fn coeff_uni(&self, d: u32) -> Q {
        self.terms.get(&vec![d]).cloned().unwrap_or_else(Q::zero)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        // Highest monomial first reads naturally.
        for (e, c) in self.terms.iter().rev() {
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
                first = false;
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let is_const = e.iter().all(|&p| p == 0);
            if mag != qi(1) || is_const {
                write!(f, "{}", mag)?;
                if !is_const {
                    write!(f, "*")?;
                }
            }
            let mut firstvar = true;
            for (i, &p) in e.iter().enumerate() {
                if p == 0 {
                    continue;
                }
                if !firstvar {
                    write!(f, "*")?;
                }
                firstvar = false;
                write!(f, "l{}", i + 1)?;
                if p > 1 {
                    write!(f, "^{}", p)?;
                }
            }
        }
        Ok(())
    }
}

/// Univariate long division; returns (quotient, remainder).
fn div_rem_uni(a: &Poly, b: &Poly) -> (Poly, Poly) {
    debug_assert!(!b.is_zero());
    let mut rem = a.clone();
    let mut quo = Poly::zero(1);
    let db = b.degree_uni().expect("nonzero divisor");
    let lb = b.coeff_uni(db);
    while let Some(dr) = rem.degree_uni() {
        if dr < db {
            break;
        }
        let factor = rem.coeff_uni(dr) / lb.clone();
        let shift = dr - db;
        quo.add_term(vec![shift], factor.clone());
        for (e, c) in b.terms.clone() {
            rem.add_term(vec![e[0] + shift], -(c * factor.clone()));
        }
    }
    (quo, rem)
}

/// Monic univariate gcd by the Euclidean algorithm.
fn gcd_uni(a: &Poly, b: &Poly) -> Poly {
    let mut x = a.clone();
    let mut y = b.clone();
    while !y.is_zero() {
        let (_, r) = div_rem_uni(&x, &y);
        x = y;
        y = r;
    }
    if let Some(d) = x.degree_uni() {
        let lead = x.coeff_uni(d);
        x = x.scale(&lead.recip());
    }
    x
}

/// Reduced fraction of polynomials.  Always normalized on construction.
#[derive(Clone, Debug)]
pub struct RationalFn {
    num: Poly,
    den: Poly,
}

impl RationalFn {
    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::InvalidInput("zero denominator".into()));
        }
        if num.nvars != den.nvars {
            return Err(Error::InvalidInput(
                "numerator and denominator disagree on the variable count".into(),
            ));
        }
        let mut r = RationalFn { num, den };
        r.reduce();
        Ok(r)
    }

    pub fn from_poly(p: Poly) -> Self {
        let nv = p.nvars;
        RationalFn::new(p, Poly::one(nv)).expect("unit denominator")
    }

    pub fn zero(nvars: usize) -> Self {
        RationalFn::from_poly(Poly::zero(nvars))
    }

    pub fn one(nvars: usize) -> Self {
        RationalFn::from_poly(Poly::one(nvars))
    }

    pub fn constant(c: Q, nvars: usize) -> Self {
        RationalFn::from_poly(Poly::constant(c, nvars))
    }

    pub fn var(i: usize, nvars: usize) -> Self {
        RationalFn::from_poly(Poly::var(i, nvars))
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn nvars(&self) -> usize {
        self.num.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_constant(&self) -> bool {
        self.num.terms.keys().all(|e| e.iter().all(|&p| p == 0))
            && self.den.terms.keys().all(|e| e.iter().all(|&p| p == 0))
    }

    fn reduce(&mut self) {
        if self.num.is_zero() {
            self.den = Poly::one(self.den.nvars);
            return;
        }
        if self.num.nvars == 1 {
            let g = gcd_uni(&self.num, &self.den);
            if g.degree_uni().unwrap_or(0) > 0 {
                let (qn, rn) = div_rem_uni(&self.num, &g);
                let (qd, rd) = div_rem_uni(&self.den, &g);
                debug_assert!(rn.is_zero() && rd.is_zero());
                self.num = qn;
                self.den = qd;
            }
        }
        // Scale so the denominator has coprime integer coefficients and a
        // positive leading term; the numerator absorbs the factor.
        let cd = self.den.content().recip();
        self.num = self.num.scale(&cd);
        self.den = self.den.scale(&cd);
    }

    pub fn add(&self, other: &RationalFn) -> RationalFn {
        RationalFn::new(
            self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            self.den.mul(&other.den),
        )
        .expect("nonzero denominators")
    }

    pub fn neg(&self) -> RationalFn {
        RationalFn { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn sub(&self, other: &RationalFn) -> RationalFn {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &RationalFn) -> RationalFn {
        RationalFn::new(self.num.mul(&other.num), self.den.mul(&other.den))
            .expect("nonzero denominators")
    }

    pub fn div(&self, other: &RationalFn) -> Result<RationalFn> {
        if other.is_zero() {
            return Err(Error::InvalidInput("division by the zero function".into()));
        }
        RationalFn::new(self.num.mul(&other.den), self.den.mul(&other.num))
    }

    pub fn scale(&self, c: &Q) -> RationalFn {
        RationalFn::new(self.num.scale(c), self.den.clone()).expect("nonzero denominator")
    }

    /// Quotient-rule derivative in the `i`-th variable.
    pub fn derivative(&self, i: usize) -> RationalFn {
        let num = self.num.derivative(i).mul(&self.den).sub(&self.num.mul(&self.den.derivative(i)));
        let den = self.den.mul(&self.den);
        RationalFn::new(num, den).expect("nonzero denominator")
    }

    /// Exact evaluation; errors where the denominator vanishes.
    pub fn eval(&self, point: &[Q]) -> Result<Q> {
        let d = self.den.eval(point);
        if d.is_zero() {
            return Err(Error::InvalidInput("evaluation at a pole".into()));
        }
        Ok(self.num.eval(point) / d)
    }
}

impl PartialEq for RationalFn {
    /// Cross-multiplication equality: exact and total in any dimension.
    fn eq(&self, other: &Self) -> bool {
        self.num.mul(&other.den) == other.num.mul(&self.den)
    }
}

impl Eq for RationalFn {}

impl fmt::Display for RationalFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == Poly::one(self.den.nvars) {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) / ({})", self.num, self.den)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::q;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_poly(nvars: usize, rng: &mut ChaCha8Rng) -> Poly {
        let mut p = Poly::zero(nvars);
        for _ in 0..rng.gen_range(1..4) {
            let e: Vec<u32> = (0..nvars).map(|_| rng.gen_range(0..3)).collect();
            p.add_term(e, crate::testgen::small_rational(rng));
        }
        p
    }

    fn random_ratfn(nvars: usize, rng: &mut ChaCha8Rng) -> RationalFn {
        let num = random_poly(nvars, rng);
        let mut den = random_poly(nvars, rng);
        if den.is_zero() {
            den = Poly::one(nvars);
        }
        RationalFn::new(num, den).expect("nonzero denominator")
    }

    #[test]
    fn gcd_reduction_cancels_common_univariate_factors() {
        // (l^2 - 1) / (l - 1) = l + 1.
        let num = Poly::from_terms(vec![(vec![2], qi(1)), (vec![0], qi(-1))], 1).unwrap();
        let den = Poly::from_terms(vec![(vec![1], qi(1)), (vec![0], qi(-1))], 1).unwrap();
        let r = RationalFn::new(num, den).unwrap();
        let expected =
            Poly::from_terms(vec![(vec![1], qi(1)), (vec![0], qi(1))], 1).unwrap();
        assert_eq!(r.num(), &expected);
        assert_eq!(r.den(), &Poly::one(1));
    }

    #[test]
    fn denominator_sign_and_content_are_normalized() {
        // 1 / (-2l) -> (-1/2) / l with positive leading denominator.
        let r = RationalFn::new(
            Poly::one(1),
            Poly::from_terms(vec![(vec![1], qi(-2))], 1).unwrap(),
        )
        .unwrap();
        assert_eq!(r.den(), &Poly::var(0, 1));
        assert_eq!(format!("{}", r), "(-1/2) / (l1)");
        // Equality is cross-multiplied, so unreduced forms still compare.
        let s = RationalFn::new(
            Poly::constant(qi(-1), 1),
            Poly::from_terms(vec![(vec![1], qi(2))], 1).unwrap(),
        )
        .unwrap();
        assert_eq!(r, s);
    }

    #[test]
    fn field_operations_agree_with_pointwise_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let points = [
            vec![qi(2), qi(3)],
            vec![q(1, 2), qi(-1)],
            vec![qi(5), q(-3, 2)],
        ];
        for _ in 0..25 {
            let a = random_ratfn(2, &mut rng);
            let b = random_ratfn(2, &mut rng);
            for pt in &points {
                let (Ok(av), Ok(bv)) = (a.eval(pt), b.eval(pt)) else { continue };
                let Ok(sv) = a.add(&b).eval(pt) else { continue };
                let Ok(pv) = a.mul(&b).eval(pt) else { continue };
                assert_eq!(sv, av.clone() + bv.clone());
                assert_eq!(pv, av * bv);
            }
        }
    }

    #[test]
    fn derivative_follows_the_quotient_rule_and_mixed_partials_commute() {
        // d/dl (1/l) = -1/l^2.
        let inv = RationalFn::new(Poly::one(1), Poly::var(0, 1)).unwrap();
        let expected = RationalFn::new(
            Poly::constant(qi(-1), 1),
            Poly::from_terms(vec![(vec![2], qi(1))], 1).unwrap(),
        )
        .unwrap();
        assert_eq!(inv.derivative(0), expected);

        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let a = random_ratfn(2, &mut rng);
            assert_eq!(a.derivative(0).derivative(1), a.derivative(1).derivative(0));
            let b = random_ratfn(2, &mut rng);
            let lhs = a.mul(&b).derivative(0);
            let rhs = a.derivative(0).mul(&b).add(&a.mul(&b.derivative(0)));
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn zero_denominators_are_rejected_and_poles_detected() {
        assert!(RationalFn::new(Poly::one(1), Poly::zero(1)).is_err());
        let inv = RationalFn::new(Poly::one(1), Poly::var(0, 1)).unwrap();
        assert!(inv.eval(&[qi(0)]).is_err());
        assert_eq!(inv.eval(&[qi(4)]).unwrap(), q(1, 4));
    }
}
