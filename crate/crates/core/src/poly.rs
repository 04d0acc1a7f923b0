//! Polynomial-coefficient polyvector fields on a coordinate space: the
//! Schouten bracket, action maps, pushforwards of exterior Lie tensors,
//! invariance and quasi-Poisson residuals, and Maurer-Cartan residuals.
//!
//! A polyvector is a sum of terms `f(x) * d_{i_1} ^ ... ^ d_{i_k}` with
//! `i_1 < ... < i_k`; coefficients are truncated series. The Schouten
//! bracket is fixed so that on vector fields it is the commutator and
//! `[X, P] = L_X P`; the convention is pinned by regression tests.

use crate::error::{Error, Result};
use crate::graded::{GradedTensor, Symmetry};
use crate::lie::LieAlgebra;
use crate::scalars::{HbarSeries, Q};
use num::Zero;
use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

/// Monomial exponents (dense, length = ambient dimension).
pub type Expo = Vec<u32>;
/// Strictly increasing derivative-slot indices.
pub type Slots = Vec<usize>;

#[derive(Clone, PartialEq, Eq)]
pub struct PolyVector {
    pub dim: usize,
    pub hbar_order: u32,
    terms: BTreeMap<(Expo, Slots), HbarSeries>,
}

/// Sorts an odd word, returning `None` on a repeated index.
fn sort_slots(word: &[usize]) -> Option<(Slots, i64)> {
    let mut w = word.to_vec();
    let mut sign = 1i64;
    for i in 1..w.len() {
        let mut j = i;
        while j > 0 && w[j - 1] > w[j] {
            w.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    for i in 1..w.len() {
        if w[i - 1] == w[i] {
            return None;
        }
    }
    Some((w, sign))
}

impl PolyVector {
    pub fn zero(dim: usize, hbar_order: u32) -> Self {
        PolyVector { dim, hbar_order, terms: BTreeMap::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &BTreeMap<(Expo, Slots), HbarSeries> {
        &self.terms
    }

    /// Adds a term; the slot word may be unordered and picks up its sign.
    pub fn add_term(&mut self, expo: Expo, slots: &[usize], c: HbarSeries) -> Result<()> {
        if expo.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "exponent vector has length {} but dimension is {}",
                expo.len(),
                self.dim
            )));
        }
        if slots.iter().any(|&s| s >= self.dim) {
            return Err(Error::InvalidInput("derivative slot out of range".into()));
        }
        let Some((sorted, sign)) = sort_slots(slots) else {
            return Ok(()); // repeated slot: term vanishes
        };
        let mut c = c.truncated(self.hbar_order);
        if sign < 0 {
            c = c.neg();
        }
        if c.is_zero() {
            return Ok(());
        }
        match self.terms.entry((expo, sorted)) {
            Entry::Occupied(mut e) => {
                let v = e.get().add(&c);
                if v.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
            Entry::Vacant(e) => {
                e.insert(c);
            }
        }
        Ok(())
    }

    pub fn add(&self, other: &PolyVector) -> Result<PolyVector> {
        if self.dim != other.dim {
            return Err(Error::InvalidInput("dimension mismatch".into()));
        }
        let mut out = PolyVector::zero(self.dim, self.hbar_order.min(other.hbar_order));
        for (k, c) in &self.terms {
            out.add_term(k.0.clone(), &k.1, c.clone())?;
        }
        for (k, c) in &other.terms {
            out.add_term(k.0.clone(), &k.1, c.clone())?;
        }
        Ok(out)
    }

    pub fn neg(&self) -> PolyVector {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = c.neg();
        }
        out
    }

    pub fn sub(&self, other: &PolyVector) -> Result<PolyVector> {
        self.add(&other.neg())
    }

    pub fn scale(&self, q: &Q) -> PolyVector {
        if q.is_zero() {
            return PolyVector::zero(self.dim, self.hbar_order);
        }
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = c.scale(q);
        }
        out
    }

    pub fn scale_series(&self, s: &HbarSeries) -> Result<PolyVector> {
        let mut out = PolyVector::zero(self.dim, self.hbar_order.min(s.order()));
        for (k, c) in &self.terms {
            out.add_term(k.0.clone(), &k.1, c.mul(s))?;
        }
        Ok(out)
    }

    pub fn truncated(&self, order: u32) -> PolyVector {
        let mut out = PolyVector::zero(self.dim, order);
        for (k, c) in &self.terms {
            out.add_term(k.0.clone(), &k.1, c.clone()).expect("canonical terms");
        }
        out
    }

    pub fn valuation(&self) -> Option<u32> {
        self.terms.values().filter_map(|c| c.valuation()).min()
    }

    /// Exterior product, with a polynomial-degree cap enforced as an error.
    pub fn wedge(&self, other: &PolyVector, cap: usize) -> Result<PolyVector> {
        if self.dim != other.dim {
            return Err(Error::InvalidInput("dimension mismatch".into()));
        }
        let mut out = PolyVector::zero(self.dim, self.hbar_order.min(other.hbar_order));
        for ((ea, sa), ca) in &self.terms {
            for ((eb, sb), cb) in &other.terms {
                let expo: Expo = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                check_degree(&expo, cap)?;
                let mut slots = sa.clone();
                slots.extend_from_slice(sb);
                out.add_term(expo, &slots, ca.mul(cb))?;
            }
        }
        Ok(out)
    }

    pub fn render(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for ((e, s), c) in &self.terms {
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0)
                .map(|(i, &p)| if p == 1 { format!("x{}", i + 1) } else { format!("x{}^{}", i + 1, p) })
                .collect();
            let ders: Vec<String> = s.iter().map(|i| format!("d{}", i + 1)).collect();
            let mut piece = format!("({:?})", c);
            if !mono.is_empty() {
                piece.push_str(&format!(" {}", mono.join(" ")));
            }
            if !ders.is_empty() {
                piece.push_str(&format!(" {}", ders.join("^")));
            }
            parts.push(piece);
        }
        parts.join(" + ")
    }
}

impl std::fmt::Debug for PolyVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.render())
    }
}

fn check_degree(expo: &[u32], cap: usize) -> Result<()> {
    let deg: u32 = expo.iter().sum();
    if deg as usize > cap {
        return Err(Error::FiltrationOverflow {
            len: deg as usize,
            bound: cap,
            context: "polynomial degree cap".into(),
        });
    }
    Ok(())
}

/// `x` coordinate derivative of one term's monomial part.
fn d_x(expo: &Expo, a: usize) -> Option<(Expo, Q)> {
    if expo[a] == 0 {
        return None;
    }
    let mut e = expo.clone();
    e[a] -= 1;
    Some((e, Q::from(num::BigInt::from(expo[a]))))
}

/// Right derivative in the odd slot `a`: sign counts the slots after `a`.
fn d_slot_right(slots: &Slots, a: usize) -> Option<(Slots, i64)> {
    let pos = slots.iter().position(|&s| s == a)?;
    let sign = if (slots.len() - 1 - pos) % 2 == 0 { 1 } else { -1 };
    let mut rest = slots.clone();
    rest.remove(pos);
    Some((rest, sign))
}

/// Half-bracket `P . Q = sum_a (right-slot-derivative_a P) ^ (x_a-derivative Q)`.
fn half_bracket(p: &PolyVector, q: &PolyVector, cap: usize) -> Result<PolyVector> {
    let mut out = PolyVector::zero(p.dim, p.hbar_order.min(q.hbar_order));
    for ((ep, sp), cp) in &p.terms {
        for ((eq, sq), cq) in &q.terms {
            for a in 0..p.dim {
                let Some((sp2, sgn)) = d_slot_right(sp, a) else { continue };
                let Some((eq2, factor)) = d_x(eq, a) else { continue };
                let expo: Expo = ep.iter().zip(&eq2).map(|(x, y)| x + y).collect();
                check_degree(&expo, cap)?;
                let mut slots = sp2.clone();
                slots.extend_from_slice(sq);
                let mut c = cp.mul(cq).scale(&factor);
                if sgn < 0 {
                    c = c.neg();
                }
                out.add_term(expo, &slots, c)?;
            }
        }
    }
    Ok(out)
}

/// Schouten bracket, computed termwise as
/// `[P, Q] = P.Q - (-1)^{(p-1)(q-1)} Q.P` with the per-term arities.
pub fn schouten_bracket(p: &PolyVector, q: &PolyVector, cap: usize) -> Result<PolyVector> {
    if p.dim != q.dim {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    let order = p.hbar_order.min(q.hbar_order);
    let mut out = PolyVector::zero(p.dim, order);
    for ((ep, sp), cp) in &p.terms {
        let mut pt = PolyVector::zero(p.dim, order);
        pt.add_term(ep.clone(), sp, cp.clone())?;
        for ((eq, sq), cq) in &q.terms {
            let mut qt = PolyVector::zero(q.dim, order);
            qt.add_term(eq.clone(), sq, cq.clone())?;
            let fwd = half_bracket(&pt, &qt, cap)?;
            let bwd = half_bracket(&qt, &pt, cap)?;
            let sign_flip = ((sp.len() as i64 - 1) * (sq.len() as i64 - 1)) % 2 != 0;
            out = out.add(&fwd)?;
            out = if sign_flip { out.add(&bwd)? } else { out.sub(&bwd)? };
        }
    }
    Ok(out)
}

/// Pairing of an arity-`k` polyvector with `k` exact differentials of
/// polynomial functions: `sum coeff * (-1)^{k(k-1)/2} det(d_{i_a} f_b)`.
/// The sign makes the cyclic Jacobiator of the induced bracket equal the
/// pairing of `[pi, pi]/2` with three differentials, coefficient one.
pub fn contract_with_differentials(
    p: &PolyVector,
    funcs: &[&PolyVector],
    cap: usize,
) -> Result<PolyVector> {
    for f in funcs {
        if f.terms.keys().any(|(_, s)| !s.is_empty()) {
            return Err(Error::InvalidInput("contraction arguments must be functions".into()));
        }
    }
    let k = funcs.len();
    let mut out = PolyVector::zero(p.dim, p.hbar_order);
    let perms = crate::lie::permutations(k);
    for ((ep, sp), cp) in &p.terms {
        if sp.len() != k {
            continue;
        }
        // determinant expansion over permutations
        for perm in &perms {
            let mut parity = 0usize;
            for i in 0..k {
                for j in i + 1..k {
                    if perm[i] > perm[j] {
                        parity += 1;
                    }
                }
            }
            // product of d_{sp[a]} f_{perm[a]}
            let mut acc = PolyVector::zero(p.dim, p.hbar_order);
            acc.add_term(ep.clone(), &[], cp.clone())?;
            let mut dead = false;
            for a in 0..k {
                let mut next = PolyVector::zero(p.dim, p.hbar_order);
                let func = funcs[perm[a]];
                for ((ea, _), ca) in &acc.terms {
                    for ((ef, _), cf) in &func.terms {
                        if let Some((ef2, factor)) = d_x(ef, sp[a]) {
                            let expo: Expo =
                                ea.iter().zip(&ef2).map(|(x, y)| x + y).collect();
                            check_degree(&expo, cap)?;
                            next.add_term(expo, &[], ca.mul(cf).scale(&factor))?;
                        }
                    }
                }
                if next.is_zero() {
                    dead = true;
                    break;
                }
                acc = next;
            }
            if dead {
                continue;
            }
            let mut total_sign = parity;
            total_sign += k * (k - 1) / 2;
            if total_sign % 2 != 0 {
                acc = acc.neg();
            }
            out = out.add(&acc)?;
        }
    }
    Ok(out)
}

/// One polynomial vector field per Lie-algebra generator.
#[derive(Clone, Debug)]
pub struct ActionMap {
    pub dim: usize,
    pub fields: Vec<PolyVector>,
}

impl ActionMap {
    pub fn new(dim: usize, fields: Vec<PolyVector>) -> Result<Self> {
        for f in &fields {
            if f.dim != dim {
                return Err(Error::InvalidInput("field dimension mismatch".into()));
            }
            if f.terms.keys().any(|(_, s)| s.len() != 1) {
                return Err(Error::InvalidInput("action fields must have arity 1".into()));
            }
        }
        Ok(ActionMap { dim, fields })
    }

    /// Homomorphism residuals: `gamma([x_i, x_j]) - [gamma x_i, gamma x_j]`
    /// for all generator pairs. Empty iff the action is a homomorphism.
    pub fn hom_residuals(
        &self,
        lie: &LieAlgebra,
        cap: usize,
    ) -> Result<Vec<((u32, u32), PolyVector)>> {
        if self.fields.len() != lie.dim() {
            return Err(Error::InvalidInput(
                "action must assign one field per generator".into(),
            ));
        }
        let order = self.fields.first().map(|f| f.hbar_order).unwrap_or(3);
        let mut out = Vec::new();
        for i in 0..lie.dim() as u32 {
            for j in (i + 1)..lie.dim() as u32 {
                let mut lhs = PolyVector::zero(self.dim, order);
                for (g, c) in lie.bracket_gens(i, j) {
                    lhs = lhs.add(&self.fields[g as usize].scale(&c))?;
                }
                let rhs = schouten_bracket(
                    &self.fields[i as usize],
                    &self.fields[j as usize],
                    cap,
                )?;
                let res = lhs.sub(&rhs)?;
                if !res.is_zero() {
                    out.push(((i, j), res));
                }
            }
        }
        Ok(out)
    }
}

/// Pushforward of an exterior Lie tensor: each generator is replaced by its
/// action field and the slots are wedged. Rejects non-homomorphism actions.
pub fn gamma_push(
    t: &GradedTensor,
    lie: &LieAlgebra,
    act: &ActionMap,
    cap: usize,
) -> Result<PolyVector> {
    if t.kind != Symmetry::Exterior {
        return Err(Error::InvalidInput("pushforward expects an exterior tensor".into()));
    }
    if !act.hom_residuals(lie, cap)?.is_empty() {
        return Err(Error::Precondition(
            "action map is not a Lie-algebra homomorphism".into(),
        ));
    }
    let mut out = PolyVector::zero(act.dim, t.hbar_order);
    for (w, c) in t.terms() {
        let mut acc = PolyVector::zero(act.dim, t.hbar_order);
        acc.add_term(vec![0; act.dim], &[], HbarSeries::one(t.hbar_order))?;
        for &g in w {
            acc = acc.wedge(&act.fields[g as usize], cap)?;
        }
        out = out.add(&acc.scale_series(c)?)?;
    }
    Ok(out)
}

/// Schouten bracket of each action field with `p`; empty iff invariant.
pub fn invariance_residuals(
    p: &PolyVector,
    act: &ActionMap,
    cap: usize,
) -> Result<Vec<(u32, PolyVector)>> {
    let mut out = Vec::new();
    for (g, field) in act.fields.iter().enumerate() {
        let r = schouten_bracket(field, p, cap)?;
        if !r.is_zero() {
            out.push((g as u32, r));
        }
    }
    Ok(out)
}

/// Result of the quasi-Poisson check: the defining residual
/// `[pi, pi] - push(Z)` plus the (reported, non-blocking) invariance data.
#[derive(Clone, Debug)]
pub struct QuasiPoissonReport {
    pub residual: PolyVector,
    pub invariance: Vec<(u32, PolyVector)>,
}

pub fn quasi_poisson_residual(
    pi: &PolyVector,
    z: &GradedTensor,
    lie: &LieAlgebra,
    act: &ActionMap,
    cap: usize,
) -> Result<QuasiPoissonReport> {
    if pi.terms.keys().any(|(_, s)| s.len() != 2) {
        return Err(Error::InvalidInput("bivector expected".into()));
    }
    let bracket = schouten_bracket(pi, pi, cap)?;
    let push = gamma_push(z, lie, act, cap)?;
    let residual = bracket.sub(&push)?;
    let invariance = invariance_residuals(pi, act, cap)?;
    Ok(QuasiPoissonReport { residual, invariance })
}

/// Maurer-Cartan residual `[r, pi_h] + [pi_h, pi_h]/2` for a deformation
/// direction with positive formal-parameter valuation.
pub fn mc_residual(pi_h: &PolyVector, r_field: &PolyVector, cap: usize) -> Result<PolyVector> {
    match pi_h.valuation() {
        Some(0) => {
            return Err(Error::Precondition(
                "deformation term must vanish at order zero".into(),
            ))
        }
        _ => {}
    }
    let first = schouten_bracket(r_field, pi_h, cap)?;
    let second = schouten_bracket(pi_h, pi_h, cap)?.scale(&crate::scalars::q(1, 2));
    first.add(&second)
}
