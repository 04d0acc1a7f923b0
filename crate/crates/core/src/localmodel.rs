//! Split local coordinate model: products of polynomial functions on a
//! space with base coordinates (the first block) and group coordinates
//! (the second block), given as explicit bidifferential operators.
//!
//! This is the coordinate realization used to test momentum maps and the
//! block conditions a split product must satisfy; functions are arity-0
//! polyvectors over the combined coordinates.

use crate::error::{Error, Result};
use crate::poly::{schouten_bracket, Expo, PolyVector};
use crate::scalars::{HbarSeries, Q};
use num::{One, Zero};

/// Base/group splitting with the per-base-generator action fields on the
/// group coordinates.
#[derive(Clone, Debug)]
pub struct SplitModel {
    pub base_dim: usize,
    pub group_dim: usize,
    /// One vector field per base generator, using group coordinates only.
    pub action_fields: Vec<PolyVector>,
}

impl SplitModel {
    pub fn new(base_dim: usize, group_dim: usize, action_fields: Vec<PolyVector>) -> Result<Self> {
        if action_fields.len() != base_dim {
            return Err(Error::InvalidInput(
                "one action field per base generator required".into(),
            ));
        }
        let dim = base_dim + group_dim;
        for f in &action_fields {
            if f.dim != dim {
                return Err(Error::InvalidInput("field dimension mismatch".into()));
            }
            for ((e, s), _) in f.terms() {
                let base_part: u32 = e[..base_dim].iter().sum();
                if base_part > 0 || s.len() != 1 || s[0] < base_dim {
                    return Err(Error::InvalidInput(
                        "action fields must be group-coordinate vector fields".into(),
                    ));
                }
            }
        }
        Ok(SplitModel { base_dim, group_dim, action_fields })
    }

    pub fn dim(&self) -> usize {
        self.base_dim + self.group_dim
    }
}

/// One bidifferential term: `hbar^pow * coeff * (d^df f) (d^dg g)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordTerm {
    pub hbar_pow: u32,
    pub coeff: PolyVector,
    pub df: Expo,
    pub dg: Expo,
}

/// A product of polynomial functions in coordinates, as a finite sum of
/// bidifferential terms.
#[derive(Clone, Debug)]
pub struct CoordStar {
    pub dim: usize,
    pub hbar_order: u32,
    pub terms: Vec<CoordTerm>,
}

/// Iterated coordinate derivative.
pub fn derive(p: &PolyVector, expo: &Expo) -> PolyVector {
    let mut out = p.clone();
    for (a, &count) in expo.iter().enumerate() {
        for _ in 0..count {
            let mut next = PolyVector::zero(out.dim, out.hbar_order);
            for ((e, s), c) in out.terms() {
                if e[a] == 0 {
                    continue;
                }
                let mut e2 = e.clone();
                e2[a] -= 1;
                next.add_term(e2, s, c.scale(&Q::from(num::BigInt::from(e[a]))))
                    .expect("canonical terms");
            }
            out = next;
        }
    }
    out
}

/// Applies an arity-1 field to a function: `sum_a f_a * d_a g`.
pub fn apply_field(field: &PolyVector, g: &PolyVector, cap: usize) -> Result<PolyVector> {
    let mut out = PolyVector::zero(g.dim, g.hbar_order.min(field.hbar_order));
    for ((e, s), c) in field.terms() {
        if s.len() != 1 {
            return Err(Error::InvalidInput("vector field expected".into()));
        }
        let mut unit = vec![0u32; g.dim];
        unit[s[0]] = 1;
        let dg = derive(g, &unit);
        let mut factor = PolyVector::zero(g.dim, field.hbar_order);
        factor.add_term(e.clone(), &[], c.clone())?;
        out = out.add(&factor.wedge(&dg, cap)?)?;
    }
    Ok(out)
}

/// Hamiltonian bracket of two functions against a bivector, oriented so
/// that for `pi = d_a ^ d_b`: `{f, g} = d_a f d_b g - d_b f d_a g`.
pub fn poisson_bracket(
    pi: &PolyVector,
    f: &PolyVector,
    g: &PolyVector,
    cap: usize,
) -> Result<PolyVector> {
    let mut out = PolyVector::zero(pi.dim, pi.hbar_order);
    for ((e, s), c) in pi.terms() {
        if s.len() != 2 {
            return Err(Error::InvalidInput("bivector expected".into()));
        }
        let (a, b) = (s[0], s[1]);
        let mut ua = vec![0u32; pi.dim];
        ua[a] = 1;
        let mut ub = vec![0u32; pi.dim];
        ub[b] = 1;
        let mut coeff = PolyVector::zero(pi.dim, pi.hbar_order);
        coeff.add_term(e.clone(), &[], c.clone())?;
        let fwd = derive(f, &ua).wedge(&derive(g, &ub), cap)?;
        let bwd = derive(f, &ub).wedge(&derive(g, &ua), cap)?;
        out = out.add(&coeff.wedge(&fwd.sub(&bwd)?, cap)?)?;
    }
    Ok(out)
}

impl CoordStar {
    pub fn apply(&self, f: &PolyVector, g: &PolyVector, cap: usize) -> Result<PolyVector> {
        if f.dim != self.dim || g.dim != self.dim {
            return Err(Error::InvalidInput("dimension mismatch".into()));
        }
        let mut out = PolyVector::zero(self.dim, self.hbar_order);
        for t in &self.terms {
            if t.hbar_pow > self.hbar_order {
                continue;
            }
            let df = derive(f, &t.df);
            let dg = derive(g, &t.dg);
            let prod = t.coeff.wedge(&df.wedge(&dg, cap)?, cap)?;
            let scaled =
                prod.scale_series(&HbarSeries::monomial(t.hbar_pow, Q::one(), self.hbar_order))?;
            out = out.add(&scaled)?;
        }
        Ok(out)
    }

    /// Exponential model product for a constant bivector:
    /// `sum_k hbar^k / (2^k k!) * pi-pairing^k`.
    pub fn exponential(dim: usize, pi: &PolyVector, order: u32) -> Result<CoordStar> {
        // Directed coefficient table of the bivector.
        let mut directed: Vec<(usize, usize, Q)> = Vec::new();
        for ((e, s), c) in pi.terms() {
            if s.len() != 2 {
                return Err(Error::InvalidInput("bivector expected".into()));
            }
            if e.iter().any(|&p| p > 0) {
                return Err(Error::InvalidInput("constant bivector expected".into()));
            }
            let q = c.coeff(0);
            directed.push((s[0], s[1], q.clone()));
            directed.push((s[1], s[0], -q));
        }
        let mut terms = Vec::new();
        let mut unit = PolyVector::zero(dim, order);
        unit.add_term(vec![0; dim], &[], HbarSeries::one(order))?;
        // tuples[(df, dg)] accumulated per power
        let mut tuples: Vec<(Expo, Expo, Q)> = vec![(vec![0; dim], vec![0; dim], Q::one())];
        for k in 0..=order.min(order) {
            let factor = {
                let mut f = Q::one();
                for j in 1..=k as i64 {
                    f = f * crate::scalars::q(1, 2 * j);
                }
                f
            };
            for (df, dg, c) in &tuples {
                let mut coeff = PolyVector::zero(dim, order);
                coeff.add_term(vec![0; dim], &[], HbarSeries::constant(c * &factor, order))?;
                terms.push(CoordTerm { hbar_pow: k, coeff, df: df.clone(), dg: dg.clone() });
            }
            if k == order {
                break;
            }
            let mut next: Vec<(Expo, Expo, Q)> = Vec::new();
            for (df, dg, c) in &tuples {
                for (a, b, q) in &directed {
                    let mut df2 = df.clone();
                    df2[*a] += 1;
                    let mut dg2 = dg.clone();
                    dg2[*b] += 1;
                    next.push((df2, dg2, c * q));
                }
            }
            // merge duplicates
            next.sort_by(|x, y| (&x.0, &x.1).cmp(&(&y.0, &y.1)));
            let mut merged: Vec<(Expo, Expo, Q)> = Vec::new();
            for (df, dg, c) in next {
                if let Some(last) = merged.last_mut() {
                    if last.0 == df && last.1 == dg {
                        last.2 = &last.2 + &c;
                        continue;
                    }
                }
                merged.push((df, dg, c));
            }
            merged.retain(|(_, _, c)| !c.is_zero());
            tuples = merged;
        }
        Ok(CoordStar { dim, hbar_order: order, terms })
    }
}

/// All coordinate monomials of total degree `1..=max_deg`, restricted to the
/// index range `[lo, hi)`.
pub fn monomials(dim: usize, lo: usize, hi: usize, max_deg: u32) -> Vec<Expo> {
    let mut out: Vec<Expo> = Vec::new();
    let mut frontier: Vec<Expo> = vec![vec![0; dim]];
    for _ in 0..max_deg {
        let mut next = Vec::new();
        for e in &frontier {
            for i in lo..hi {
                let mut e2 = e.clone();
                e2[i] += 1;
                next.push(e2);
            }
        }
        next.sort();
        next.dedup();
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out.sort();
    out.dedup();
    out
}

fn monomial_poly(dim: usize, e: &Expo, order: u32) -> PolyVector {
    let mut p = PolyVector::zero(dim, order);
    p.add_term(e.clone(), &[], HbarSeries::one(order)).expect("valid monomial");
    p
}

/// Strong-invariance residual of a momentum assignment: for each generator
/// `x`, the defect `[M(x), f]_star - hbar {mu* x, f}` over a basis of test
/// monomials. Empty iff the identity holds at the working order.
pub fn momentum_residual(
    star: &CoordStar,
    m_map: &[PolyVector],
    mu_star: &[PolyVector],
    pi: &PolyVector,
    max_deg: u32,
    cap: usize,
) -> Result<Vec<(usize, Expo, PolyVector)>> {
    if m_map.len() != mu_star.len() {
        return Err(Error::InvalidInput(
            "momentum and comoment assignments must align".into(),
        ));
    }
    let hbar = HbarSeries::monomial(1, Q::one(), star.hbar_order);
    let mut out = Vec::new();
    for (gi, (m_x, mu_x)) in m_map.iter().zip(mu_star).enumerate() {
        for f_expo in monomials(star.dim, 0, star.dim, max_deg) {
            let f = monomial_poly(star.dim, &f_expo, star.hbar_order);
            let comm = star.apply(m_x, &f, cap)?.sub(&star.apply(&f, m_x, cap)?)?;
            let target = poisson_bracket(pi, mu_x, &f, cap)?.scale_series(&hbar)?;
            let res = comm.sub(&target)?;
            if !res.is_zero() {
                out.push((gi, f_expo, res));
            }
        }
    }
    Ok(out)
}

/// Block-condition report for a split product: pointwise products on the
/// base, pointwise group-by-base products, the base-derivative shift
/// formula, and the extracted group-group block.
#[derive(Clone, Debug)]
pub struct SplitReport {
    pub base_pointwise_failures: Vec<(Expo, Expo, PolyVector)>,
    pub group_base_pointwise_failures: Vec<(Expo, Expo, PolyVector)>,
    pub shift_formula_failures: Vec<(Expo, Expo, PolyVector)>,
    pub group_block: Vec<(Expo, Expo, PolyVector)>,
    pub group_block_base_free: bool,
}

impl SplitReport {
    pub fn conditions_pass(&self) -> bool {
        self.base_pointwise_failures.is_empty()
            && self.group_base_pointwise_failures.is_empty()
            && self.shift_formula_failures.is_empty()
            && self.group_block_base_free
    }
}

/// Checks the four split-product conditions over monomial test functions of
/// degree at most `max_deg`.
pub fn split_conditions_check(
    star: &CoordStar,
    model: &SplitModel,
    max_deg: u32,
    cap: usize,
) -> Result<SplitReport> {
    if star.dim != model.dim() {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    // The shift formula iterates the action fields; require a commuting
    // family so the iterated application is unambiguous.
    for i in 0..model.action_fields.len() {
        for j in (i + 1)..model.action_fields.len() {
            let br = schouten_bracket(&model.action_fields[i], &model.action_fields[j], cap)?;
            if !br.is_zero() {
                return Err(Error::Precondition(
                    "action fields must commute for the shift formula".into(),
                ));
            }
        }
    }
    let dim = star.dim;
    let order = star.hbar_order;
    let base = monomials(dim, 0, model.base_dim, max_deg);
    let group = monomials(dim, model.base_dim, dim, max_deg);
    let mut report = SplitReport {
        base_pointwise_failures: Vec::new(),
        group_base_pointwise_failures: Vec::new(),
        shift_formula_failures: Vec::new(),
        group_block: Vec::new(),
        group_block_base_free: true,
    };
    // (1) base x base: pointwise
    for ef in &base {
        for eg in &base {
            let f = monomial_poly(dim, ef, order);
            let g = monomial_poly(dim, eg, order);
            let res = star.apply(&f, &g, cap)?.sub(&f.wedge(&g, cap)?)?;
            if !res.is_zero() {
                report.base_pointwise_failures.push((ef.clone(), eg.clone(), res));
            }
        }
    }
    // (2) group x base: pointwise
    for ef in &group {
        for eg in &base {
            let f = monomial_poly(dim, ef, order);
            let g = monomial_poly(dim, eg, order);
            let res = star.apply(&f, &g, cap)?.sub(&f.wedge(&g, cap)?)?;
            if !res.is_zero() {
                report.group_base_pointwise_failures.push((ef.clone(), eg.clone(), res));
            }
        }
    }
    // (3) base x group: the derivative shift formula
    for ef in &base {
        for eg in &group {
            let f = monomial_poly(dim, ef, order);
            let g = monomial_poly(dim, eg, order);
            let lhs = star.apply(&f, &g, cap)?;
            let mut rhs = PolyVector::zero(dim, order);
            // k = 0 term
            rhs = rhs.add(&f.wedge(&g, cap)?)?;
            let mut tuples: Vec<(PolyVector, PolyVector)> = vec![(f.clone(), g.clone())];
            let mut factor = Q::one();
            for k in 1..=order {
                factor = factor * crate::scalars::q(1, k as i64);
                let mut next = Vec::new();
                for (df, hg) in &tuples {
                    for (i, field) in model.action_fields.iter().enumerate() {
                        let mut unit = vec![0u32; dim];
                        unit[i] = 1;
                        let df2 = derive(df, &unit);
                        if df2.is_zero() {
                            continue;
                        }
                        let hg2 = apply_field(field, hg, cap)?;
                        next.push((df2, hg2));
                    }
                }
                tuples = next;
                let hbar_k = HbarSeries::monomial(k, factor.clone(), order);
                for (df, hg) in &tuples {
                    rhs = rhs.add(&df.wedge(hg, cap)?.scale_series(&hbar_k)?)?;
                }
            }
            let res = lhs.sub(&rhs)?;
            if !res.is_zero() {
                report.shift_formula_failures.push((ef.clone(), eg.clone(), res));
            }
        }
    }
    // (4) group x group block extraction
    for ef in &group {
        for eg in &group {
            let f = monomial_poly(dim, ef, order);
            let g = monomial_poly(dim, eg, order);
            let val = star.apply(&f, &g, cap)?;
            for ((e, _), _) in val.terms() {
                if e[..model.base_dim].iter().any(|&p| p > 0) {
                    report.group_block_base_free = false;
                }
            }
            report.group_block.push((ef.clone(), eg.clone(), val));
        }
    }
    Ok(report)
}
