//! Graded words, Koszul signs and sparse tensors with a symmetry kind.
//!
//! Every sign in the crate is produced by [`koszul_sign`]; symmetric
//! canonicalization calls it with the stored degrees and exterior
//! canonicalization with the degrees shifted by one (an exterior algebra is
//! the symmetric algebra on the shift), so degree-0 generators anticommute
//! under the exterior kind and a repeated generator survives exactly when the
//! graded rules allow it.

use crate::error::{Error, Result};
use crate::scalars::{HbarSeries, Q};
use std::collections::BTreeMap;

/// Ordered list of generators with integer degrees; generator ids are indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedBasis {
    gens: Vec<(String, i64)>,
}

impl GradedBasis {
    pub fn new(gens: Vec<(String, i64)>) -> Self {
        GradedBasis { gens }
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    pub fn degree(&self, id: u32) -> i64 {
        self.gens[id as usize].1
    }

    pub fn name(&self, id: u32) -> &str {
        &self.gens[id as usize].0
    }

    pub fn id_of(&self, name: &str) -> Option<u32> {
        self.gens.iter().position(|(n, _)| n == name).map(|i| i as u32)
    }

    pub fn word_degree(&self, word: &[u32]) -> i64 {
        word.iter().map(|&g| self.degree(g)).sum()
    }
}

/// Koszul sign of rearranging homogeneous factors: `new[i] = old[perm[i]]`.
///
/// Returns the product over inversions of `(-1)^(deg_a * deg_b)` for the pairs
/// of factors that cross. `perm` must be a permutation of `0..degrees.len()`.
pub fn koszul_sign(perm: &[usize], degrees: &[i64]) -> Result<i64> {
    if perm.len() != degrees.len() {
        return Err(Error::InvalidInput("permutation/degree length mismatch".into()));
    }
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || seen[p] {
            return Err(Error::InvalidInput("not a permutation".into()));
        }
        seen[p] = true;
    }
    let mut sign = 1i64;
    for i in 0..perm.len() {
        for j in (i + 1)..perm.len() {
            if perm[i] > perm[j] {
                let d1 = degrees[perm[i]];
                let d2 = degrees[perm[j]];
                if (d1 % 2 != 0) && (d2 % 2 != 0) {
                    sign = -sign;
                }
            }
        }
    }
    Ok(sign)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    Free,
    Symmetric,
    Exterior,
}

/// Canonicalize a word under the given symmetry: returns the sorted word and
/// the Koszul sign of sorting, or `None` when the word vanishes (a repeated
/// generator forbidden by the graded rules).
pub fn canonicalize_word(
    word: &[u32],
    basis: &GradedBasis,
    kind: Symmetry,
) -> Result<Option<(Vec<u32>, i64)>> {
    if matches!(kind, Symmetry::Free) {
        return Ok(Some((word.to_vec(), 1)));
    }
    // Effective degrees: stored for symmetric, stored+1 for exterior.
    let degs: Vec<i64> = word
        .iter()
        .map(|&g| {
            let d = basis.degree(g);
            match kind {
                Symmetry::Exterior => d + 1,
                _ => d,
            }
        })
        .collect();
    // Stable sort by generator id; perm[i] = original index of i-th smallest.
    let mut perm: Vec<usize> = (0..word.len()).collect();
    perm.sort_by_key(|&i| (word[i], i));
    let sign = koszul_sign(&perm, &degs)?;
    let sorted: Vec<u32> = perm.iter().map(|&i| word[i]).collect();
    // A repeated generator of odd effective degree squares to zero.
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            let d = match kind {
                Symmetry::Exterior => basis.degree(w[0]) + 1,
                _ => basis.degree(w[0]),
            };
            if d % 2 != 0 {
                return Ok(None);
            }
        }
    }
    Ok(Some((sorted, sign)))
}

/// Sparse linear combination of fixed-length generator words with series
/// coefficients, canonical under the chosen symmetry kind.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedTensor {
    pub kind: Symmetry,
    pub arity: usize,
    pub hbar_order: u32,
    terms: BTreeMap<Vec<u32>, HbarSeries>,
}

impl GradedTensor {
    pub fn zero(kind: Symmetry, arity: usize, hbar_order: u32) -> Self {
        GradedTensor { kind, arity, hbar_order, terms: BTreeMap::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &HbarSeries)> {
        self.terms.iter()
    }

    pub fn coeff(&self, word: &[u32]) -> HbarSeries {
        self.terms.get(word).cloned().unwrap_or_else(|| HbarSeries::zero(self.hbar_order))
    }

    /// Add `coeff * word`, canonicalizing the word first.
    pub fn add_term(&mut self, word: &[u32], coeff: HbarSeries, basis: &GradedBasis) -> Result<()> {
        if word.len() != self.arity {
            return Err(Error::InvalidInput(format!(
                "word length {} does not match arity {}",
                word.len(),
                self.arity
            )));
        }
        if coeff.is_zero() {
            return Ok(());
        }
        if let Some((canon, sign)) = canonicalize_word(word, basis, self.kind)? {
            let c = if sign < 0 { coeff.neg() } else { coeff };
            use std::collections::btree_map::Entry;
            match self.terms.entry(canon) {
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
        Ok(())
    }

    pub fn add(&self, other: &Self, basis: &GradedBasis) -> Result<Self> {
        if self.kind != other.kind || self.arity != other.arity {
            return Err(Error::InvalidInput("tensor kind/arity mismatch in add".into()));
        }
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w, c.clone(), basis)?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self, basis: &GradedBasis) -> Result<Self> {
        self.add(&other.neg(), basis)
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = c.neg();
        }
        out
    }

    pub fn scale(&self, c: &Q) -> Self {
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v = v.scale(c);
        }
        out.terms.retain(|_, v| !v.is_zero());
        out
    }

    pub fn scale_series(&self, s: &HbarSeries) -> Self {
        let mut out = Self::zero(self.kind, self.arity, self.hbar_order.min(s.order()));
        for (w, c) in &self.terms {
            let prod = c.mul(s);
            if !prod.is_zero() {
                out.terms.insert(w.clone(), prod);
            }
        }
        out
    }

    pub fn truncated(&self, order: u32) -> Self {
        let mut out = Self::zero(self.kind, self.arity, order);
        for (w, c) in &self.terms {
            let t = c.truncated(order);
            if !t.is_zero() {
                out.terms.insert(w.clone(), t);
            }
        }
        out
    }

    /// Graded product concatenating words (wedge for exterior, symmetric
    /// product for symmetric, concatenation for free).
    pub fn product(&self, other: &Self, basis: &GradedBasis) -> Result<Self> {
        if self.kind != other.kind {
            return Err(Error::InvalidInput("tensor kind mismatch in product".into()));
        }
        let mut out =
            Self::zero(self.kind, self.arity + other.arity, self.hbar_order.min(other.hbar_order));
        for (w1, c1) in &self.terms {
            for (w2, c2) in &other.terms {
                let mut w = w1.clone();
                w.extend_from_slice(w2);
                out.add_term(&w, c1.mul(c2), basis)?;
            }
        }
        Ok(out)
    }

    /// Map each generator word to a rendered string (diagnostics).
    pub fn render(&self, basis: &GradedBasis) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let sep = match self.kind {
            Symmetry::Exterior => "^",
            Symmetry::Symmetric => ".",
            Symmetry::Free => "@",
        };
        let mut parts = Vec::new();
        for (w, c) in &self.terms {
            let word =
                w.iter().map(|&g| basis.name(g).to_string()).collect::<Vec<_>>().join(sep);
            parts.push(format!("({:?})*{}", c, word));
        }
        parts.join(" + ")
    }
}

/// Ordered disjoint blocks of tensor positions (1-based), with union contained
/// in `{1, ..., n}`; the data of a coproduct-insertion pattern.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPartition {
    pub n: usize,
    pub blocks: Vec<Vec<usize>>,
}

impl BlockPartition {
    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n + 1];
        for b in &blocks {
            if b.is_empty() {
                return Err(Error::InvalidInput("empty block in partition".into()));
            }
            for &p in b {
                if p == 0 || p > n {
                    return Err(Error::InvalidInput(format!(
                        "position {} outside 1..={}",
                        p, n
                    )));
                }
                if seen[p] {
                    return Err(Error::InvalidInput(format!("position {} repeated", p)));
                }
                seen[p] = true;
            }
        }
        Ok(BlockPartition { n, blocks })
    }

    /// Consecutive singleton blocks `{1},...,{n}`.
    pub fn singletons(n: usize) -> Self {
        BlockPartition { n, blocks: (1..=n).map(|i| vec![i]).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::qi;

    fn basis() -> GradedBasis {
        GradedBasis::new(vec![
            ("a".into(), 0),
            ("b".into(), 0),
            ("u".into(), 1),
            ("v".into(), 1),
            ("w".into(), -1),
        ])
    }

    #[test]
    fn koszul_identity_swap_cycle() {
        assert_eq!(koszul_sign(&[0, 1], &[1, 1]).unwrap(), 1);
        assert_eq!(koszul_sign(&[1, 0], &[1, 1]).unwrap(), -1);
        assert_eq!(koszul_sign(&[1, 2, 0], &[1, 1, 1]).unwrap(), 1);
        assert_eq!(koszul_sign(&[1, 0], &[2, 1]).unwrap(), 1);
    }

    #[test]
    fn koszul_rejects_non_permutations() {
        assert!(koszul_sign(&[0, 0], &[1, 1]).is_err());
        assert!(koszul_sign(&[0], &[1, 1]).is_err());
    }

    #[test]
    fn exterior_degree_zero_anticommutes() {
        let b = basis();
        let mut t = GradedTensor::zero(Symmetry::Exterior, 2, 3);
        t.add_term(&[1, 0], HbarSeries::one(3), &b).unwrap(); // b ^ a
        assert_eq!(t.coeff(&[0, 1]), HbarSeries::one(3).neg());
    }

    #[test]
    fn exterior_even_degree_square_vanishes() {
        let b = basis();
        let mut t = GradedTensor::zero(Symmetry::Exterior, 2, 3);
        t.add_term(&[0, 0], HbarSeries::one(3), &b).unwrap(); // a ^ a = 0
        assert!(t.is_zero());
        // odd stored degree: allowed in the exterior kind (symmetric direction)
        let mut t2 = GradedTensor::zero(Symmetry::Exterior, 2, 3);
        t2.add_term(&[2, 2], HbarSeries::one(3), &b).unwrap(); // u ^ u
        assert!(!t2.is_zero());
    }

    #[test]
    fn symmetric_odd_square_vanishes_and_even_commutes() {
        let b = basis();
        let mut t = GradedTensor::zero(Symmetry::Symmetric, 2, 3);
        t.add_term(&[2, 2], HbarSeries::one(3), &b).unwrap(); // u.u with |u|=1
        assert!(t.is_zero());
        let mut t2 = GradedTensor::zero(Symmetry::Symmetric, 2, 3);
        t2.add_term(&[1, 0], HbarSeries::one(3), &b).unwrap();
        assert_eq!(t2.coeff(&[0, 1]), HbarSeries::one(3));
    }

    #[test]
    fn symmetric_odd_swap_sign() {
        let b = basis();
        let mut t = GradedTensor::zero(Symmetry::Symmetric, 2, 3);
        t.add_term(&[3, 2], HbarSeries::one(3), &b).unwrap(); // v.u -> -u.v
        assert_eq!(t.coeff(&[2, 3]), HbarSeries::one(3).neg());
    }

    #[test]
    fn cancellation_removes_term() {
        let b = basis();
        let mut t = GradedTensor::zero(Symmetry::Exterior, 2, 3);
        t.add_term(&[0, 1], HbarSeries::one(3), &b).unwrap();
        t.add_term(&[1, 0], HbarSeries::one(3), &b).unwrap();
        assert!(t.is_zero());
    }

    #[test]
    fn partition_validation() {
        assert!(BlockPartition::new(3, vec![vec![1, 3], vec![2]]).is_ok());
        assert!(BlockPartition::new(3, vec![vec![1], vec![1]]).is_err());
        assert!(BlockPartition::new(3, vec![vec![4]]).is_err());
        assert!(BlockPartition::new(3, vec![vec![]]).is_err());
        assert!(BlockPartition::new(2, vec![vec![2]]).is_ok()); // union need not cover
    }

    #[test]
    fn wedge_product_reorders_with_sign() {
        let b = basis();
        let mut x = GradedTensor::zero(Symmetry::Exterior, 1, 3);
        x.add_term(&[1], HbarSeries::one(3), &b).unwrap();
        let mut y = GradedTensor::zero(Symmetry::Exterior, 1, 3);
        y.add_term(&[0], HbarSeries::constant(qi(2), 3), &b).unwrap();
        let xy = x.product(&y, &b).unwrap();
        assert_eq!(xy.coeff(&[0, 1]), HbarSeries::constant(qi(-2), 3));
    }
}
