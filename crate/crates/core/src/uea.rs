//! Universal enveloping algebras over a graded structure-constant Lie
//! algebra, with truncated-series coefficients: PBW straightening under a
//! filtration bound, tensor powers with Koszul slotwise products, pluggable
//! coproducts (primitive and twist-conjugated), iterated and reduced
//! coproducts, and coproduct insertions along block partitions.

use crate::error::{Error, Result};
use crate::graded::{koszul_sign, BlockPartition, GradedTensor, Symmetry};
use crate::lie::LieAlgebra;
use crate::scalars::{HbarSeries, Q};
use num::{One, Zero};
use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

/// A PBW monomial: weakly increasing word of generator ids, with odd
/// generators never repeated. The empty word is the unit.
pub type Monomial = Vec<u32>;

/// Element of the `arity`-th tensor power of the enveloping algebra, sparse
/// over tuples of PBW monomials.
#[derive(Clone, PartialEq, Eq)]
pub struct UTensor {
    pub arity: usize,
    pub hbar_order: u32,
    terms: BTreeMap<Vec<Monomial>, HbarSeries>,
}

impl UTensor {
    pub fn zero(arity: usize, hbar_order: u32) -> Self {
        UTensor { arity, hbar_order, terms: BTreeMap::new() }
    }

    /// The unit `1 x ... x 1`.
    pub fn one(arity: usize, hbar_order: u32) -> Self {
        let mut t = Self::zero(arity, hbar_order);
        t.terms.insert(vec![Vec::new(); arity], HbarSeries::one(hbar_order));
        t
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &BTreeMap<Vec<Monomial>, HbarSeries> {
        &self.terms
    }

    pub fn coeff(&self, word: &[Monomial]) -> HbarSeries {
        self.terms.get(word).cloned().unwrap_or_else(|| HbarSeries::zero(self.hbar_order))
    }

    /// Adds a term whose slots are already canonical PBW monomials.
    pub fn add_canonical_term(&mut self, word: Vec<Monomial>, c: HbarSeries) {
        debug_assert_eq!(word.len(), self.arity);
        let c = c.truncated(self.hbar_order);
        if c.is_zero() {
            return;
        }
        match self.terms.entry(word) {
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
    }

    pub fn add(&self, other: &UTensor) -> UTensor {
        debug_assert_eq!(self.arity, other.arity);
        let order = self.hbar_order.min(other.hbar_order);
        let mut out = UTensor::zero(self.arity, order);
        for (w, c) in &self.terms {
            out.add_canonical_term(w.clone(), c.clone());
        }
        for (w, c) in &other.terms {
            out.add_canonical_term(w.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> UTensor {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = c.neg();
        }
        out
    }

    pub fn sub(&self, other: &UTensor) -> UTensor {
        self.add(&other.neg())
    }

    pub fn scale(&self, q: &Q) -> UTensor {
        if q.is_zero() {
            return UTensor::zero(self.arity, self.hbar_order);
        }
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = c.scale(q);
        }
        out
    }

    pub fn scale_series(&self, s: &HbarSeries) -> UTensor {
        let mut out = UTensor::zero(self.arity, self.hbar_order.min(s.order()));
        for (w, c) in &self.terms {
            out.add_canonical_term(w.clone(), c.mul(s));
        }
        out
    }

    pub fn truncated(&self, order: u32) -> UTensor {
        let mut out = UTensor::zero(self.arity, order);
        for (w, c) in &self.terms {
            out.add_canonical_term(w.clone(), c.clone());
        }
        out
    }

    /// Minimal formal-parameter order appearing in any coefficient; `None`
    /// for the zero tensor.
    pub fn valuation(&self) -> Option<u32> {
        self.terms.values().filter_map(|c| c.valuation()).min()
    }

    /// Coefficient of the all-units word (applies the counit in every slot,
    /// since nonempty PBW monomials have vanishing counit).
    pub fn counit_all(&self) -> HbarSeries {
        self.coeff(&vec![Vec::new(); self.arity])
    }

    pub fn render(&self, lie: &LieAlgebra) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (w, c) in &self.terms {
            let slots: Vec<String> = w
                .iter()
                .map(|m| {
                    if m.is_empty() {
                        "1".into()
                    } else {
                        m.iter().map(|&g| lie.basis().name(g)).collect::<Vec<_>>().join("")
                    }
                })
                .collect();
            parts.push(format!("({:?})*{}", c, slots.join("|")));
        }
        parts.join(" + ")
    }
}

impl std::fmt::Debug for UTensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "UTensor(arity={}, {} terms)", self.arity, self.terms.len())
    }
}

/// Enveloping algebra of a structure-constant Lie algebra, with a filtration
/// bound limiting monomial length and an arity bound limiting tensor power.
#[derive(Clone, Debug)]
pub struct Uea {
    lie: LieAlgebra,
    filtration_bound: usize,
    arity_bound: usize,
}

impl Uea {
    pub fn new(lie: LieAlgebra, filtration_bound: usize, arity_bound: usize) -> Self {
        Uea { lie, filtration_bound, arity_bound }
    }

    pub fn lie(&self) -> &LieAlgebra {
        &self.lie
    }

    pub fn filtration_bound(&self) -> usize {
        self.filtration_bound
    }

    pub fn arity_bound(&self) -> usize {
        self.arity_bound
    }

    pub fn check_arity(&self, arity: usize, context: &str) -> Result<()> {
        if arity > self.arity_bound {
            return Err(Error::ArityOverflow {
                arity,
                bound: self.arity_bound,
                context: context.into(),
            });
        }
        Ok(())
    }

    fn monomial_degree(&self, m: &[u32]) -> i64 {
        m.iter().map(|&g| self.lie.degree(g)).sum()
    }

    /// Rewrites an arbitrary word into the PBW basis: adjacent descents
    /// `y x` with `id(y) > id(x)` become `(-1)^{|x||y|} x y + [y, x]`, and a
    /// repeated odd generator `x x` becomes `[x, x] / 2`.
    pub fn straighten(&self, word: &[u32]) -> Result<BTreeMap<Monomial, Q>> {
        if word.len() > self.filtration_bound {
            return Err(Error::FiltrationOverflow {
                len: word.len(),
                bound: self.filtration_bound,
                context: "straightening".into(),
            });
        }
        let mut out: BTreeMap<Monomial, Q> = BTreeMap::new();
        let mut stack: Vec<(Vec<u32>, Q)> = vec![(word.to_vec(), Q::one())];
        while let Some((w, c)) = stack.pop() {
            let mut bad = None;
            for p in 0..w.len().saturating_sub(1) {
                if w[p] > w[p + 1] || (w[p] == w[p + 1] && self.lie.degree(w[p]) % 2 != 0) {
                    bad = Some(p);
                    break;
                }
            }
            let Some(p) = bad else {
                match out.entry(w) {
                    std::collections::btree_map::Entry::Occupied(mut e) => {
                        *e.get_mut() += c;
                        if e.get().is_zero() {
                            e.remove();
                        }
                    }
                    std::collections::btree_map::Entry::Vacant(e) => {
                        if !c.is_zero() {
                            e.insert(c);
                        }
                    }
                }
                continue;
            };
            let (y, x) = (w[p], w[p + 1]);
            if y == x {
                // x x = [x, x] / 2 for odd x
                for (g, cb) in self.lie.bracket_gens(x, x) {
                    let mut nw = Vec::with_capacity(w.len() - 1);
                    nw.extend_from_slice(&w[..p]);
                    nw.push(g);
                    nw.extend_from_slice(&w[p + 2..]);
                    stack.push((nw, &c * cb / Q::from(num::BigInt::from(2))));
                }
                continue;
            }
            let sign = if self.lie.degree(x) % 2 != 0 && self.lie.degree(y) % 2 != 0 {
                Q::from(num::BigInt::from(-1))
            } else {
                Q::one()
            };
            let mut swapped = w.clone();
            swapped.swap(p, p + 1);
            stack.push((swapped, &c * sign));
            for (g, cb) in self.lie.bracket_gens(y, x) {
                let mut nw = Vec::with_capacity(w.len() - 1);
                nw.extend_from_slice(&w[..p]);
                nw.push(g);
                nw.extend_from_slice(&w[p + 2..]);
                stack.push((nw, &c * cb));
            }
        }
        out.retain(|_, v| !v.is_zero());
        Ok(out)
    }

    /// Single generator as an arity-1 tensor.
    pub fn gen_tensor(&self, g: u32, hbar_order: u32) -> UTensor {
        let mut t = UTensor::zero(1, hbar_order);
        t.add_canonical_term(vec![vec![g]], HbarSeries::one(hbar_order));
        t
    }

    /// Arity-1 tensor from a raw (not necessarily canonical) word.
    pub fn word_tensor(&self, word: &[u32], c: HbarSeries) -> Result<UTensor> {
        let mut t = UTensor::zero(1, c.order());
        for (m, q) in self.straighten(word)? {
            t.add_canonical_term(vec![m], c.scale(&q));
        }
        Ok(t)
    }

    /// Lifts a free graded tensor (each letter a generator) into the tensor
    /// power, letter by letter.
    pub fn from_free(&self, t: &GradedTensor) -> Result<UTensor> {
        if t.kind != Symmetry::Free {
            return Err(Error::InvalidInput("from_free expects a free tensor".into()));
        }
        let mut out = UTensor::zero(t.arity, t.hbar_order);
        for (w, c) in t.terms() {
            let word: Vec<Monomial> = w.iter().map(|&g| vec![g]).collect();
            out.add_canonical_term(word, c.clone());
        }
        Ok(out)
    }

    /// Lifts an exterior tensor via the full alternating embedding.
    pub fn from_exterior(&self, t: &GradedTensor) -> Result<UTensor> {
        self.from_free(&self.lie.alt_embed(t)?)
    }

    /// Slotwise product with the Koszul interchange sign
    /// `prod_{s<t} (-1)^{|b_s||a_t|}`.
    pub fn mul(&self, a: &UTensor, b: &UTensor) -> Result<UTensor> {
        if a.arity != b.arity {
            return Err(Error::InvalidInput(format!(
                "product arity mismatch: {} vs {}",
                a.arity, b.arity
            )));
        }
        let order = a.hbar_order.min(b.hbar_order);
        let mut out = UTensor::zero(a.arity, order);
        for (wa, ca) in &a.terms {
            let da: Vec<i64> = wa.iter().map(|m| self.monomial_degree(m)).collect();
            // suffix parity of a-degrees beyond each slot
            let mut suffix_odd = vec![0i64; a.arity + 1];
            for s in (0..a.arity).rev() {
                suffix_odd[s] = suffix_odd[s + 1] + if da[s] % 2 != 0 { 1 } else { 0 };
            }
            for (wb, cb) in &b.terms {
                let mut parity = 0i64;
                for s in 0..a.arity {
                    if self.monomial_degree(&wb[s]) % 2 != 0 {
                        parity += suffix_odd[s + 1];
                    }
                }
                let mut coeff = ca.mul(cb);
                if coeff.is_zero() {
                    continue; // dies under truncation; skip straightening
                }
                if parity % 2 != 0 {
                    coeff = coeff.neg();
                }
                // per-slot straightening, then cartesian combination
                let mut partial: Vec<(Vec<Monomial>, Q)> = vec![(Vec::new(), Q::one())];
                for s in 0..a.arity {
                    let mut cat = wa[s].clone();
                    cat.extend_from_slice(&wb[s]);
                    let pieces = self.straighten(&cat)?;
                    let mut next = Vec::new();
                    for (prefix, q) in &partial {
                        for (m, qm) in &pieces {
                            let mut word = prefix.clone();
                            word.push(m.clone());
                            next.push((word, q * qm));
                        }
                    }
                    partial = next;
                    if partial.is_empty() {
                        break;
                    }
                }
                for (word, q) in partial {
                    out.add_canonical_term(word, coeff.scale(&q));
                }
            }
        }
        Ok(out)
    }

    /// Inverse of a tensor of the form `unit + (valuation >= 1)`, by the
    /// truncated geometric series.
    pub fn invert(&self, t: &UTensor) -> Result<UTensor> {
        let one = UTensor::one(t.arity, t.hbar_order);
        let s = one.sub(t);
        if let Some(v) = s.valuation() {
            if v < 1 {
                return Err(Error::Precondition(
                    "inverse requires constant term equal to the unit".into(),
                ));
            }
        }
        let mut inv = one.clone();
        let mut pow = one.clone();
        for _ in 1..=t.hbar_order {
            pow = self.mul(&pow, &s)?;
            if pow.is_zero() {
                break;
            }
            inv = inv.add(&pow);
        }
        Ok(inv)
    }

    /// Applies a coproduct to one slot, expanding arity by one.
    pub fn apply_delta_slot(
        &self,
        t: &UTensor,
        slot: usize,
        cop: &dyn Coproduct,
    ) -> Result<UTensor> {
        if slot >= t.arity {
            return Err(Error::InvalidInput(format!("slot {} out of range", slot)));
        }
        let mut out = UTensor::zero(t.arity + 1, t.hbar_order);
        for (w, c) in &t.terms {
            let expanded = self.delta_monomial(&w[slot], t.hbar_order, cop)?;
            for (pair, c2) in expanded.terms() {
                let mut word = Vec::with_capacity(t.arity + 1);
                word.extend_from_slice(&w[..slot]);
                word.push(pair[0].clone());
                word.push(pair[1].clone());
                word.extend_from_slice(&w[slot + 1..]);
                out.add_canonical_term(word, c.mul(c2));
            }
        }
        Ok(out)
    }

    /// Coproduct of a single monomial, as the product of generator coproducts.
    fn delta_monomial(
        &self,
        m: &[u32],
        hbar_order: u32,
        cop: &dyn Coproduct,
    ) -> Result<UTensor> {
        let mut acc = UTensor::one(2, hbar_order);
        for &g in m {
            let d = cop.delta_gen(self, g, hbar_order)?;
            acc = self.mul(&acc, &d)?;
        }
        Ok(acc)
    }

    /// Iterated coproduct into `n` slots: identity for `n = 1`, then repeated
    /// application to the last slot.
    pub fn multi_delta(&self, a: &UTensor, n: usize, cop: &dyn Coproduct) -> Result<UTensor> {
        if a.arity != 1 {
            return Err(Error::InvalidInput("multi_delta expects an arity-1 tensor".into()));
        }
        if n == 0 {
            return Err(Error::InvalidInput("multi_delta needs n >= 1".into()));
        }
        self.check_arity(n, "iterated coproduct")?;
        let mut t = a.clone();
        while t.arity < n {
            let last = t.arity - 1;
            t = self.apply_delta_slot(&t, last, cop)?;
        }
        Ok(t)
    }

    /// Coproduct insertion along a block partition: slot `s` of `a` is spread
    /// by the iterated coproduct over the positions of block `s` (ascending),
    /// uncovered positions receive the unit, and the factor rearrangement
    /// contributes its Koszul sign.
    pub fn insert(
        &self,
        a: &UTensor,
        blocks: &BlockPartition,
        cop: &dyn Coproduct,
    ) -> Result<UTensor> {
        if blocks.blocks.len() != a.arity {
            return Err(Error::InvalidInput(format!(
                "partition has {} blocks but tensor arity is {}",
                blocks.blocks.len(),
                a.arity
            )));
        }
        let n = blocks.n;
        self.check_arity(n, "coproduct insertion")?;
        let mut sorted_blocks: Vec<Vec<usize>> = blocks.blocks.to_vec();
        for b in &mut sorted_blocks {
            b.sort_unstable();
        }
        let positions: Vec<usize> = sorted_blocks.iter().flatten().copied().collect();
        let mut out = UTensor::zero(n, a.hbar_order);
        for (w, c) in &a.terms {
            // spread each slot by the iterated coproduct over its block size
            let mut partial: Vec<(Vec<Monomial>, HbarSeries)> = vec![(Vec::new(), c.clone())];
            for (s, block) in sorted_blocks.iter().enumerate() {
                let mut slot = UTensor::zero(1, a.hbar_order);
                slot.add_canonical_term(vec![w[s].clone()], HbarSeries::one(a.hbar_order));
                let spread = self.multi_delta(&slot, block.len(), cop)?;
                let mut next = Vec::new();
                for (prefix, cs) in &partial {
                    for (piece, c2) in spread.terms() {
                        let mut factors = prefix.clone();
                        factors.extend(piece.iter().cloned());
                        next.push((factors, cs.mul(c2)));
                    }
                }
                partial = next;
            }
            for (factors, coeff) in partial {
                // rearrange factors into ascending target positions
                let mut idx: Vec<usize> = (0..factors.len()).collect();
                idx.sort_by_key(|&i| positions[i]);
                let degrees: Vec<i64> =
                    factors.iter().map(|m| self.monomial_degree(m)).collect();
                let sign = koszul_sign(&idx, &degrees)?;
                let mut word = vec![Vec::new(); n];
                for (rank, &i) in idx.iter().enumerate() {
                    let _ = rank;
                    word[positions[i] - 1] = factors[i].clone();
                }
                let mut cc = coeff;
                if sign < 0 {
                    cc = cc.neg();
                }
                out.add_canonical_term(word, cc);
            }
        }
        Ok(out)
    }

    /// Reduced iterated coproduct, computed directly: the terms of the
    /// iterated coproduct in which every slot is a nonempty monomial.
    pub fn delta_reduced(&self, a: &UTensor, n: usize, cop: &dyn Coproduct) -> Result<UTensor> {
        let full = self.multi_delta(a, n, cop)?;
        let mut out = UTensor::zero(n, full.hbar_order);
        for (w, c) in full.terms() {
            if w.iter().all(|m| !m.is_empty()) {
                out.add_canonical_term(w.clone(), c.clone());
            }
        }
        Ok(out)
    }

    /// Reduced iterated coproduct by inclusion-exclusion over position
    /// subsets. Agrees with [`Uea::delta_reduced`]; kept as an independent
    /// cross-check.
    pub fn delta_reduced_subsets(
        &self,
        a: &UTensor,
        n: usize,
        cop: &dyn Coproduct,
    ) -> Result<UTensor> {
        if a.arity != 1 {
            return Err(Error::InvalidInput("expects an arity-1 tensor".into()));
        }
        let mut out = UTensor::zero(n, a.hbar_order);
        for mask in 0u32..(1 << n) {
            let subset: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| i + 1).collect();
            let parity = (n - subset.len()) % 2 == 1;
            let term = if subset.is_empty() {
                UTensor::one(n, a.hbar_order).scale_series(&a.counit_all())
            } else {
                let part = BlockPartition::new(n, vec![subset])?;
                self.insert(a, &part, cop)?
            };
            out = if parity { out.sub(&term) } else { out.add(&term) };
        }
        Ok(out)
    }

    /// Orders `n` in `1..=n_max` at which the reduced coproduct has
    /// formal-parameter valuation below `n` (the divided-power membership
    /// defect list; empty means membership holds up to `n_max`).
    pub fn divided_power_defects(
        &self,
        a: &UTensor,
        n_max: usize,
        cop: &dyn Coproduct,
    ) -> Result<Vec<(usize, u32)>> {
        let mut out = Vec::new();
        for n in 1..=n_max {
            let d = self.delta_reduced(a, n, cop)?;
            if let Some(v) = d.valuation() {
                if (v as usize) < n {
                    out.push((n, v));
                }
            }
        }
        Ok(out)
    }
}

/// A coproduct, specified on generators and extended as an algebra map.
pub trait Coproduct {
    fn delta_gen(&self, uea: &Uea, g: u32, hbar_order: u32) -> Result<UTensor>;
}

/// The standard coproduct: every generator is primitive.
pub struct PrimitiveCoproduct;

impl Coproduct for PrimitiveCoproduct {
    fn delta_gen(&self, _uea: &Uea, g: u32, hbar_order: u32) -> Result<UTensor> {
        let mut t = UTensor::zero(2, hbar_order);
        let one = HbarSeries::one(hbar_order);
        t.add_canonical_term(vec![vec![g], Vec::new()], one.clone());
        t.add_canonical_term(vec![Vec::new(), vec![g]], one);
        Ok(t)
    }
}

/// Conjugated coproduct `x -> J (x' x 1 + 1 x x') J^{-1}` for an invertible
/// twist-shaped tensor `J` (unit constant term). Generator values are
/// precomputed at construction.
pub struct TwistedCoproduct {
    hbar_order: u32,
    table: Vec<UTensor>,
}

impl TwistedCoproduct {
    pub fn new(uea: &Uea, j: &UTensor) -> Result<Self> {
        if j.arity != 2 {
            return Err(Error::InvalidInput("twist must have arity 2".into()));
        }
        let j_inv = uea.invert(j)?;
        let mut table = Vec::new();
        for g in 0..uea.lie().dim() as u32 {
            let prim = PrimitiveCoproduct.delta_gen(uea, g, j.hbar_order)?;
            let conj = uea.mul(&uea.mul(j, &prim)?, &j_inv)?;
            table.push(conj);
        }
        Ok(TwistedCoproduct { hbar_order: j.hbar_order, table })
    }
}

impl Coproduct for TwistedCoproduct {
    fn delta_gen(&self, _uea: &Uea, g: u32, hbar_order: u32) -> Result<UTensor> {
        if hbar_order > self.hbar_order {
            return Err(Error::Precondition(format!(
                "twisted coproduct built at order {} but order {} requested",
                self.hbar_order, hbar_order
            )));
        }
        let t = self
            .table
            .get(g as usize)
            .ok_or_else(|| Error::InvalidInput(format!("generator {} out of range", g)))?;
        Ok(t.truncated(hbar_order))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{build_tilde_g, sl2};
    use crate::scalars::{q, qi};

    fn uea_sl2() -> Uea {
        Uea::new(sl2(), 8, 6)
    }

    #[test]
    fn straighten_fe_gives_ef_minus_h() {
        let u = uea_sl2();
        // ids: e=0, f=1, h=2; f e = e f + [f, e] = e f - h
        let s = u.straighten(&[1, 0]).unwrap();
        assert_eq!(s.get(&vec![0, 1]), Some(&qi(1)));
        assert_eq!(s.get(&vec![2]), Some(&qi(-1)));
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn straighten_is_associative_on_sample_words() {
        let u = uea_sl2();
        let words: Vec<Vec<u32>> = vec![vec![2, 0], vec![1, 1], vec![2, 1, 0], vec![0, 2]];
        for a in &words {
            for b in &words {
                let mut ab = a.clone();
                ab.extend_from_slice(b);
                let left = u.straighten(&ab).unwrap();
                // straighten(a) * straighten(b) via the arity-1 product
                let ta = u.word_tensor(a, HbarSeries::one(3)).unwrap();
                let tb = u.word_tensor(b, HbarSeries::one(3)).unwrap();
                let prod = u.mul(&ta, &tb).unwrap();
                let mut expect = UTensor::zero(1, 3);
                for (m, c) in left {
                    expect.add_canonical_term(vec![m], HbarSeries::constant(c, 3));
                }
                assert_eq!(prod, expect);
            }
        }
    }

    #[test]
    fn odd_generator_squares_to_zero() {
        let g = sl2();
        let (tg, idx) = build_tilde_g(2, &g).unwrap();
        let u = Uea::new(tg, 8, 6);
        let s = u.straighten(&[idx.v[0], idx.v[0]]).unwrap();
        assert!(s.is_empty());
        // v1 v0 = -v0 v1
        let s2 = u.straighten(&[idx.v[1], idx.v[0]]).unwrap();
        assert_eq!(s2.get(&vec![idx.v[0], idx.v[1]]), Some(&qi(-1)));
        assert_eq!(s2.len(), 1);
    }

    #[test]
    fn filtration_bound_overflows() {
        let u = Uea::new(sl2(), 3, 6);
        let err = u.straighten(&[0, 0, 0, 0]).unwrap_err();
        assert!(matches!(err, Error::FiltrationOverflow { len: 4, bound: 3, .. }));
    }

    #[test]
    fn primitive_coproduct_of_odd_product() {
        let g = sl2();
        let (tg, idx) = build_tilde_g(2, &g).unwrap();
        let u = Uea::new(tg, 8, 6);
        let (v0, v1) = (idx.v[0], idx.v[1]);
        let a = u.word_tensor(&[v0, v1], HbarSeries::one(3)).unwrap();
        let d = u.apply_delta_slot(&a, 0, &PrimitiveCoproduct).unwrap();
        let one = HbarSeries::one(3);
        let mut expect = UTensor::zero(2, 3);
        expect.add_canonical_term(vec![vec![v0, v1], vec![]], one.clone());
        expect.add_canonical_term(vec![vec![v0], vec![v1]], one.clone());
        expect.add_canonical_term(vec![vec![v1], vec![v0]], one.neg());
        expect.add_canonical_term(vec![vec![], vec![v0, v1]], one.clone());
        assert_eq!(d, expect);
    }

    #[test]
    fn coproduct_is_coassociative() {
        let u = uea_sl2();
        let a = u.word_tensor(&[0, 1, 2], HbarSeries::one(3)).unwrap();
        let d = u.apply_delta_slot(&a, 0, &PrimitiveCoproduct).unwrap();
        let left = u.apply_delta_slot(&d, 0, &PrimitiveCoproduct).unwrap();
        let right = u.apply_delta_slot(&d, 1, &PrimitiveCoproduct).unwrap();
        assert_eq!(left, right);
    }

    #[test]
    fn coproduct_is_algebra_map() {
        let u = uea_sl2();
        let a = u.word_tensor(&[0, 2], HbarSeries::one(3)).unwrap();
        let b = u.word_tensor(&[1], HbarSeries::one(3)).unwrap();
        let ab = u.mul(&a, &b).unwrap();
        let cop = PrimitiveCoproduct;
        let da = u.apply_delta_slot(&a, 0, &cop).unwrap();
        let db = u.apply_delta_slot(&b, 0, &cop).unwrap();
        let dab = u.apply_delta_slot(&ab, 0, &cop).unwrap();
        assert_eq!(dab, u.mul(&da, &db).unwrap());
    }

    #[test]
    fn insertion_matches_basic_cases() {
        let u = uea_sl2();
        let cop = PrimitiveCoproduct;
        let a = u.word_tensor(&[0], HbarSeries::one(3)).unwrap();
        // a^{(2)} in two slots = 1 x a
        let p = BlockPartition::new(2, vec![vec![2]]).unwrap();
        let t = u.insert(&a, &p, &cop).unwrap();
        let mut expect = UTensor::zero(2, 3);
        expect.add_canonical_term(vec![vec![], vec![0]], HbarSeries::one(3));
        assert_eq!(t, expect);
        // a^{(1,2)} = coproduct
        let p2 = BlockPartition::new(2, vec![vec![1, 2]]).unwrap();
        let t2 = u.insert(&a, &p2, &cop).unwrap();
        assert_eq!(t2, u.multi_delta(&a, 2, &cop).unwrap());
    }

    #[test]
    fn insertion_swap_picks_up_koszul_sign() {
        let g = sl2();
        let (tg, idx) = build_tilde_g(2, &g).unwrap();
        let u = Uea::new(tg, 8, 6);
        let (v0, v1) = (idx.v[0], idx.v[1]);
        let mut a = UTensor::zero(2, 3);
        a.add_canonical_term(vec![vec![v0], vec![v1]], HbarSeries::one(3));
        // swap the two slots: blocks {2}, {1}
        let p = BlockPartition::new(2, vec![vec![2], vec![1]]).unwrap();
        let t = u.insert(&a, &p, &PrimitiveCoproduct).unwrap();
        let mut expect = UTensor::zero(2, 3);
        expect.add_canonical_term(vec![vec![v1], vec![v0]], HbarSeries::one(3).neg());
        assert_eq!(t, expect);
    }

    #[test]
    fn reduced_coproduct_definitions_agree() {
        let u = uea_sl2();
        let cop = PrimitiveCoproduct;
        let mut a = u.word_tensor(&[0, 1], HbarSeries::one(3)).unwrap();
        a = a.add(&u.word_tensor(&[2], HbarSeries::monomial(1, q(1, 2), 3)).unwrap());
        a = a.add(&UTensor::one(1, 3).scale(&qi(7)));
        for n in 1..=3 {
            let d1 = u.delta_reduced(&a, n, &cop).unwrap();
            let d2 = u.delta_reduced_subsets(&a, n, &cop).unwrap();
            assert_eq!(d1, d2, "n = {}", n);
        }
    }

    #[test]
    fn divided_power_membership() {
        let u = uea_sl2();
        let cop = PrimitiveCoproduct;
        // 1 + hbar e + hbar^2 e^2/2 is a member to depth 3
        let mut a = UTensor::one(1, 3);
        a = a.add(&u.word_tensor(&[0], HbarSeries::monomial(1, qi(1), 3)).unwrap());
        a = a.add(&u.word_tensor(&[0, 0], HbarSeries::monomial(2, q(1, 2), 3)).unwrap());
        assert!(u.divided_power_defects(&a, 3, &cop).unwrap().is_empty());
        // a bare generator fails at depth 1
        let b = u.gen_tensor(0, 3);
        let defects = u.divided_power_defects(&b, 3, &cop).unwrap();
        assert_eq!(defects, vec![(1, 0)]);
    }

    #[test]
    fn twisted_coproduct_first_order() {
        let u = uea_sl2();
        // J = 1 x 1 + (hbar/2) e x f
        let mut j = UTensor::one(2, 3);
        let mut r = UTensor::zero(2, 3);
        r.add_canonical_term(vec![vec![0], vec![1]], HbarSeries::monomial(1, q(1, 2), 3));
        j = j.add(&r);
        let cop = TwistedCoproduct::new(&u, &j).unwrap();
        let de = cop.delta_gen(&u, 0, 3).unwrap();
        let prim = PrimitiveCoproduct.delta_gen(&u, 0, 3).unwrap();
        let diff = de.sub(&prim).truncated(1);
        // first-order part is -(1/2) e x h
        let mut expect = UTensor::zero(2, 1);
        expect.add_canonical_term(vec![vec![0], vec![2]], HbarSeries::monomial(1, q(-1, 2), 1));
        assert_eq!(diff, expect);
        // counit axiom survives twisting
        let d = u.apply_delta_slot(&u.gen_tensor(2, 3), 0, &cop).unwrap();
        let mut left = UTensor::zero(1, 3);
        for (w, c) in d.terms() {
            if w[0].is_empty() {
                left.add_canonical_term(vec![w[1].clone()], c.clone());
            }
        }
        assert_eq!(left, u.gen_tensor(2, 3));
    }
}
