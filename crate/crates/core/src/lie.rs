//! Finite-dimensional graded Lie algebras given by structure constants, the
//! exterior tensors over them, and the algebraic Schouten calculus: graded
//! Jacobi checking, adjoint invariance, coboundary cobrackets with their
//! co-Jacobi residual, and the centrally extended algebra
//! `R + V[1] + V* + g` used by the local models.

use crate::error::{Error, Result};
use crate::graded::{GradedBasis, GradedTensor, Symmetry};
use crate::scalars::{HbarSeries, Q};
use num::Zero;
use std::collections::BTreeMap;

/// Sparse linear combination of generators with rational coefficients.
pub type LinComb = BTreeMap<u32, Q>;

fn lincomb_add(acc: &mut LinComb, gen: u32, c: Q) {
    if c.is_zero() {
        return;
    }
    let e = acc.entry(gen).or_insert_with(Q::zero);
    *e += c;
    if e.is_zero() {
        acc.remove(&gen);
    }
}

/// Structure-constant descriptor. Brackets are stored only for generator pairs
/// `i < j`; the rest follow from graded antisymmetry (so `[x, x] = 0` by
/// convention, which all shipped models satisfy).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LieAlgebra {
    basis: GradedBasis,
    brackets: BTreeMap<(u32, u32), LinComb>,
}

impl LieAlgebra {
    pub fn new(
        gens: Vec<(String, i64)>,
        bracket_list: Vec<(u32, u32, Vec<(u32, Q)>)>,
    ) -> Result<Self> {
        let basis = GradedBasis::new(gens);
        let n = basis.len() as u32;
        let mut brackets = BTreeMap::new();
        for (i, j, terms) in bracket_list {
            if i >= j {
                return Err(Error::InvalidInput(format!(
                    "bracket pair ({}, {}) must satisfy i < j",
                    i, j
                )));
            }
            if j >= n {
                return Err(Error::InvalidInput(format!("generator {} out of range", j)));
            }
            let mut lc = LinComb::new();
            for (k, c) in terms {
                if k >= n {
                    return Err(Error::InvalidInput(format!("generator {} out of range", k)));
                }
                lincomb_add(&mut lc, k, c);
            }
            if !lc.is_empty() {
                brackets.insert((i, j), lc);
            }
        }
        Ok(LieAlgebra { basis, brackets })
    }

    pub fn basis(&self) -> &GradedBasis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn degree(&self, g: u32) -> i64 {
        self.basis.degree(g)
    }

    pub fn stored_brackets(&self) -> impl Iterator<Item = (&(u32, u32), &LinComb)> {
        self.brackets.iter()
    }

    /// `[x_i, x_j]` for arbitrary index order, with graded antisymmetry.
    pub fn bracket_gens(&self, i: u32, j: u32) -> LinComb {
        if i == j {
            return LinComb::new();
        }
        if i < j {
            self.brackets.get(&(i, j)).cloned().unwrap_or_default()
        } else {
            let base = self.brackets.get(&(j, i)).cloned().unwrap_or_default();
            // [x_i, x_j] = -(-1)^{|x_i||x_j|} [x_j, x_i]
            let s = if self.degree(i) % 2 != 0 && self.degree(j) % 2 != 0 { 1 } else { -1 };
            base.into_iter().map(|(k, c)| (k, c * Q::from(num::BigInt::from(s)))).collect()
        }
    }

    pub fn bracket_elems(&self, a: &LinComb, b: &LinComb) -> LinComb {
        let mut out = LinComb::new();
        for (&i, ca) in a {
            for (&j, cb) in b {
                for (k, c) in self.bracket_gens(i, j) {
                    lincomb_add(&mut out, k, c * ca * cb);
                }
            }
        }
        out
    }

    /// Graded Jacobiator residual on a generator triple:
    /// `[x,[y,z]] - [[x,y],z] - (-1)^{|x||y|} [y,[x,z]]`.
    pub fn jacobiator(&self, i: u32, j: u32, k: u32) -> LinComb {
        let one = |g: u32| -> LinComb { [(g, Q::from(num::BigInt::from(1)))].into_iter().collect() };
        let mut res = self.bracket_elems(&one(i), &self.bracket_gens(j, k));
        for (g, c) in self.bracket_elems(&self.bracket_gens(i, j), &one(k)) {
            lincomb_add(&mut res, g, -c);
        }
        let s = if self.degree(i) % 2 != 0 && self.degree(j) % 2 != 0 { -1 } else { 1 };
        for (g, c) in self.bracket_elems(&one(j), &self.bracket_gens(i, k)) {
            lincomb_add(&mut res, g, c * Q::from(num::BigInt::from(-s)));
        }
        res
    }

    /// All generator triples with nonzero Jacobiator. Empty iff the descriptor
    /// is a graded Lie algebra.
    pub fn check_jacobi(&self) -> Vec<JacobiViolation> {
        let n = self.dim() as u32;
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let r = self.jacobiator(i, j, k);
                    if !r.is_empty() {
                        out.push(JacobiViolation { triple: (i, j, k), residual: r });
                    }
                }
            }
        }
        out
    }

    /// A zero exterior tensor over this algebra's basis.
    pub fn tensor(&self, arity: usize, hbar_order: u32) -> GradedTensor {
        GradedTensor::zero(Symmetry::Exterior, arity, hbar_order)
    }

    /// Exterior tensor from a single word with rational coefficient.
    pub fn wedge(&self, word: &[u32], c: Q, hbar_order: u32) -> Result<GradedTensor> {
        let mut t = self.tensor(word.len(), hbar_order);
        t.add_term(word, HbarSeries::constant(c, hbar_order), &self.basis)?;
        Ok(t)
    }

    /// Adjoint action of a generator on an exterior tensor, extended as a
    /// degree-`|x|` derivation (Koszul passage signs on stored degrees).
    pub fn adjoint_action(&self, x: u32, t: &GradedTensor) -> Result<GradedTensor> {
        let mut out = self.tensor(t.arity, t.hbar_order);
        let dx = self.degree(x);
        for (w, coeff) in t.terms() {
            let mut passed: i64 = 0;
            for (slot, &g) in w.iter().enumerate() {
                let sign = if dx % 2 != 0 && passed % 2 != 0 { -1 } else { 1 };
                for (target, c) in self.bracket_gens(x, g) {
                    let mut word = w.clone();
                    word[slot] = target;
                    let mut cc = coeff.scale(&c);
                    if sign < 0 {
                        cc = cc.neg();
                    }
                    out.add_term(&word, cc, &self.basis)?;
                }
                passed += self.degree(g);
            }
        }
        Ok(out)
    }

    /// Generators whose adjoint action on `t` is nonzero, with residuals.
    /// Empty iff `t` is ad-invariant.
    pub fn adjoint_invariance(&self, t: &GradedTensor) -> Result<Vec<(u32, GradedTensor)>> {
        let mut out = Vec::new();
        for x in 0..self.dim() as u32 {
            let r = self.adjoint_action(x, t)?;
            if !r.is_zero() {
                out.push((x, r));
            }
        }
        Ok(out)
    }

    /// Algebraic Schouten bracket on the exterior algebra, extending the Lie
    /// bracket by graded Leibniz. For canonical words
    /// `[x_1^...^x_p, y_1^...^y_q] = sum_{i,j} a_i b_j
    ///  (x_1^..^{x_i}-omitted..^x_p) ^ [x_i,y_j] ^ (y_1^..^{y_j}-omitted..^y_q)`
    /// with `a_i` the sign moving `x_i` rightwards out of the first word and
    /// `b_j` the sign moving `y_j` leftwards out of the second (exterior
    /// Koszul signs throughout).
    pub fn schouten_algebraic(
        &self,
        a: &GradedTensor,
        b: &GradedTensor,
    ) -> Result<GradedTensor> {
        if a.arity == 0 || b.arity == 0 {
            return Err(Error::Precondition(
                "algebraic Schouten bracket needs arities >= 1".into(),
            ));
        }
        let order = a.hbar_order.min(b.hbar_order);
        let mut out = self.tensor(a.arity + b.arity - 1, order);
        let eff = |g: u32| self.degree(g) + 1;
        for (wa, ca) in a.terms() {
            for (wb, cb) in b.terms() {
                let coeff = ca.mul(cb);
                for i in 0..wa.len() {
                    // sign moving x_i past x_{i+1..p}
                    let mut sa = 1i64;
                    if eff(wa[i]) % 2 != 0 {
                        for &g in &wa[i + 1..] {
                            if eff(g) % 2 != 0 {
                                sa = -sa;
                            }
                        }
                    }
                    for j in 0..wb.len() {
                        let mut sb = 1i64;
                        if eff(wb[j]) % 2 != 0 {
                            for &g in &wb[..j] {
                                if eff(g) % 2 != 0 {
                                    sb = -sb;
                                }
                            }
                        }
                        for (target, c) in self.bracket_gens(wa[i], wb[j]) {
                            let mut word: Vec<u32> = Vec::with_capacity(out.arity);
                            word.extend(wa.iter().take(i));
                            word.extend(wa.iter().skip(i + 1));
                            word.push(target);
                            word.extend(wb.iter().take(j));
                            word.extend(wb.iter().skip(j + 1));
                            let mut cc = coeff.scale(&c);
                            if sa * sb < 0 {
                                cc = cc.neg();
                            }
                            out.add_term(&word, cc, &self.basis)?;
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Coboundary cobracket `delta_r(x) = ad_x(r)` for an arity-2 tensor.
    pub fn coboundary_cobracket(&self, r: &GradedTensor) -> Result<Cobracket> {
        if r.arity != 2 {
            return Err(Error::Precondition("cobracket source must have arity 2".into()));
        }
        let mut values = Vec::new();
        for x in 0..self.dim() as u32 {
            values.push(self.adjoint_action(x, r)?);
        }
        Ok(Cobracket { values })
    }

    /// Cyclic co-Jacobi residual of a cobracket on one generator, computed in
    /// the free tensor cube: `(1 + rot + rot^2) (delta tensor id) delta (x)`
    /// where `rot` rotates tensor slots with Koszul signs.
    pub fn cojacobi_residual(&self, delta: &Cobracket, x: u32) -> Result<GradedTensor> {
        let order = delta
            .values
            .first()
            .map(|t| t.hbar_order)
            .unwrap_or(crate::scalars::DEFAULT_HBAR_ORDER);
        // (delta @ id) delta(x) in the free cube; the exterior values are
        // expanded through the alternating embedding, and delta has degree
        // zero so no Koszul sign appears when it is applied to the first leg.
        let hx = self.alt_embed(&delta.values[x as usize])?;
        let mut cube = GradedTensor::zero(Symmetry::Free, 3, order);
        for (w, c) in hx.terms() {
            let inner = self.alt_embed(&delta.values[w[0] as usize])?;
            for (wi, ci) in inner.terms() {
                cube.add_term(&[wi[0], wi[1], w[1]], c.mul(ci), &self.basis)?;
            }
        }
        // cyclic sum with Koszul rotation signs
        let mut total = GradedTensor::zero(Symmetry::Free, 3, order);
        for (w, c) in cube.terms() {
            let d: Vec<i64> = w.iter().map(|&g| self.degree(g)).collect();
            // identity
            total.add_term(w, c.clone(), &self.basis)?;
            // rot: (a,b,c) -> (c,a,b), sign" moving c past a,b
            let s1 = if d[2] % 2 != 0 && (d[0] + d[1]) % 2 != 0 { -1 } else { 1 };
            let mut c1 = c.clone();
            if s1 < 0 {
                c1 = c1.neg();
            }
            total.add_term(&[w[2], w[0], w[1]], c1, &self.basis)?;
            // rot^2: (a,b,c) -> (b,c,a), sign moving a past b,c
            let s2 = if d[0] % 2 != 0 && (d[1] + d[2]) % 2 != 0 { -1 } else { 1 };
            let mut c2 = c.clone();
            if s2 < 0 {
                c2 = c2.neg();
            }
            total.add_term(&[w[1], w[2], w[0]], c2, &self.basis)?;
        }
        Ok(total)
    }

    /// Embed an exterior tensor into the free tensor power by the full
    /// alternating sum (no 1/k! normalization).
    pub fn alt_embed(&self, t: &GradedTensor) -> Result<GradedTensor> {
        if t.kind != Symmetry::Exterior {
            return Err(Error::InvalidInput("alt_embed expects an exterior tensor".into()));
        }
        let mut out = GradedTensor::zero(Symmetry::Free, t.arity, t.hbar_order);
        let perms = permutations(t.arity);
        for (w, c) in t.terms() {
            let degs: Vec<i64> = w.iter().map(|&g| self.degree(g) + 1).collect();
            for p in &perms {
                let sign = crate::graded::koszul_sign(p, &degs)?;
                let word: Vec<u32> = p.iter().map(|&i| w[i]).collect();
                let mut cc = c.clone();
                if sign < 0 {
                    cc = cc.neg();
                }
                out.add_term(&word, cc, &self.basis)?;
            }
        }
        Ok(out)
    }
}

pub(crate) fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    let rest = permutations(n - 1);
    for p in rest {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

#[derive(Clone, Debug)]
pub struct JacobiViolation {
    pub triple: (u32, u32, u32),
    pub residual: LinComb,
}

/// A cobracket tabulated on generators (values are arity-2 exterior tensors).
#[derive(Clone, Debug)]
pub struct Cobracket {
    pub values: Vec<GradedTensor>,
}

/// The standard 3-dimensional simple algebra: `[h,e]=2e, [h,f]=-2f, [e,f]=h`
/// with basis order `e, f, h`.
pub fn sl2() -> LieAlgebra {
    use crate::scalars::qi;
    LieAlgebra::new(
        vec![("e".into(), 0), ("f".into(), 0), ("h".into(), 0)],
        vec![
            (0, 1, vec![(2, qi(1))]),  // [e,f] = h
            (0, 2, vec![(0, qi(-2))]), // [e,h] = -2e
            (1, 2, vec![(1, qi(2))]),  // [f,h] = 2f
        ],
    )
    .expect("sl2 descriptor is valid")
}

/// Abelian algebra of the given dimension, all generators in degree 0.
pub fn abelian(dim: usize) -> LieAlgebra {
    LieAlgebra::new(
        (0..dim).map(|i| (format!("x{}", i), 0)).collect(),
        Vec::new(),
    )
    .expect("abelian descriptor is valid")
}

/// Index bookkeeping for the centrally extended algebra built by
/// [`build_tilde_g`]: one central generator, `v_dim` odd generators `v_i`
/// (degree -1), their duals `v*_i` (degree 0), then the original generators.
#[derive(Clone, Debug)]
pub struct TildeIndices {
    pub central: u32,
    pub v: Vec<u32>,
    pub v_star: Vec<u32>,
    pub g_offset: u32,
}

/// Extended algebra `R c + V[1] + V* + g` with `[v*_i, v_j] = delta_ij c`,
/// `c` central, `V[1]` and `V*` abelian, and `g` carried over verbatim.
/// Degrees: `c` at 0, `V[1]` at -1, `V*` at 0.
pub fn build_tilde_g(v_dim: usize, g: &LieAlgebra) -> Result<(LieAlgebra, TildeIndices)> {
    use crate::scalars::qi;
    let mut gens: Vec<(String, i64)> = vec![("c".into(), 0)];
    for i in 0..v_dim {
        gens.push((format!("v{}", i), -1));
    }
    for i in 0..v_dim {
        gens.push((format!("v*{}", i), 0));
    }
    let g_offset = gens.len() as u32;
    for k in 0..g.dim() {
        let id = k as u32;
        gens.push((format!("g:{}", g.basis().name(id)), g.degree(id)));
    }
    let mut brackets = Vec::new();
    // [v_j, v*_i] = -<v*_i, v_j> c  (stored for the smaller id first)
    for i in 0..v_dim {
        let vj = (1 + i) as u32;
        let vsi = (1 + v_dim + i) as u32;
        brackets.push((vj, vsi, vec![(0u32, qi(-1))]));
    }
    for (&(i, j), lc) in g.stored_brackets() {
        let terms: Vec<(u32, Q)> =
            lc.iter().map(|(&k, c)| (k + g_offset, c.clone())).collect();
        brackets.push((i + g_offset, j + g_offset, terms));
    }
    let algebra = LieAlgebra::new(gens, brackets)?;
    let idx = TildeIndices {
        central: 0,
        v: (0..v_dim).map(|i| (1 + i) as u32).collect(),
        v_star: (0..v_dim).map(|i| (1 + v_dim + i) as u32).collect(),
        g_offset,
    };
    Ok((algebra, idx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::qi;

    #[test]
    fn sl2_satisfies_jacobi() {
        assert!(sl2().check_jacobi().is_empty());
    }

    #[test]
    fn perturbed_sl2_fails_jacobi() {
        use crate::scalars::q;
        let bad = LieAlgebra::new(
            vec![("e".into(), 0), ("f".into(), 0), ("h".into(), 0)],
            vec![
                (0, 1, vec![(2, qi(1))]),
                (0, 2, vec![(0, q(-5, 2))]), // [e,h] = -5/2 e breaks Jacobi
                (1, 2, vec![(1, qi(2))]),
            ],
        )
        .unwrap();
        assert!(!bad.check_jacobi().is_empty());
    }

    #[test]
    fn bracket_antisymmetry() {
        let g = sl2();
        let ef = g.bracket_gens(0, 1);
        let fe = g.bracket_gens(1, 0);
        assert_eq!(ef.get(&2), Some(&qi(1)));
        assert_eq!(fe.get(&2), Some(&qi(-1)));
    }

    #[test]
    fn top_wedge_is_invariant() {
        let g = sl2();
        let t = g.wedge(&[0, 1, 2], qi(1), 3).unwrap();
        assert!(g.adjoint_invariance(&t).unwrap().is_empty());
    }

    #[test]
    fn r_ef_is_not_invariant() {
        let g = sl2();
        let r = g.wedge(&[0, 1], qi(1), 3).unwrap();
        assert!(!g.adjoint_invariance(&r).unwrap().is_empty());
    }

    #[test]
    fn schouten_degree_one_is_bracket() {
        let g = sl2();
        let e = g.wedge(&[0], qi(1), 3).unwrap();
        let f = g.wedge(&[1], qi(1), 3).unwrap();
        let ef = g.schouten_algebraic(&e, &f).unwrap();
        let h = g.wedge(&[2], qi(1), 3).unwrap();
        assert_eq!(ef, h);
    }

    #[test]
    fn schouten_r_r_is_twice_top_wedge() {
        let g = sl2();
        let r = g.wedge(&[0, 1], qi(1), 3).unwrap();
        let rr = g.schouten_algebraic(&r, &r).unwrap();
        let expect = g.wedge(&[0, 1, 2], qi(2), 3).unwrap();
        assert_eq!(rr, expect);
    }

    #[test]
    fn tilde_g_passes_jacobi() {
        let g = sl2();
        let (tg, idx) = build_tilde_g(2, &g).unwrap();
        assert!(tg.check_jacobi().is_empty());
        assert_eq!(tg.degree(idx.v[0]), -1);
        assert_eq!(tg.degree(idx.v_star[0]), 0);
        // [v*_0, v_0] = c
        let br = tg.bracket_gens(idx.v_star[0], idx.v[0]);
        assert_eq!(br.get(&idx.central), Some(&qi(1)));
        // [v*_0, v_1] = 0
        assert!(tg.bracket_gens(idx.v_star[0], idx.v[1]).is_empty());
    }
}
