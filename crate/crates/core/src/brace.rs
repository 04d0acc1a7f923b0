//! The tensor coalgebra over nonempty Hopf-algebra cochains, with its
//! insertion operations, the deformed shuffle product (a coalgebra map), the
//! differential (a coderivation), the formal-parameter rescaling morphism,
//! and an axiom suite exercising the differential-bialgebra structure.
//!
//! Carrier: linear combinations of outer words `w_1 x ... x w_p` where each
//! inner word `w_i` is a basis word of `H^{(x) k_i}` (one PBW monomial per
//! slot), with coefficients Laurent in the outer parameter over truncated
//! series in the deformation parameter.
//!
//! Grading: an inner word of arity `k` and internal degree `g` contributes
//! `k + g - 1`; outer words add contributions. All Koszul signs below use
//! this shifted degree. The cogenerator operations carry suspension signs
//! fixed by the square-zero requirement for the extended differential and
//! the Leibniz rule against the product: the one-slot component is
//! `(-1)^{deg} * hochschild_diff` (the textbook coboundary), the two-slot
//! component is `(alpha, beta) -> (-1)^{1 + deg alpha} alpha (x) beta`.

use crate::cochain::{brace_b1m, gerstenhaber_bracket, hochschild_diff};
use crate::error::{Error, Result};
use crate::scalars::{HbarSeries, NuSeries};
use crate::uea::{Coproduct, Monomial, UTensor, Uea};
use std::collections::BTreeMap;

/// One inner word: a basis word of `H^{(x) k}`.
pub type InnerWord = Vec<Monomial>;
/// One outer word.
pub type OuterWord = Vec<InnerWord>;

#[derive(Clone, Debug, PartialEq)]
pub struct BraceElement {
    hbar_order: u32,
    terms: BTreeMap<OuterWord, NuSeries>,
}

impl BraceElement {
    pub fn zero(hbar_order: u32) -> Self {
        BraceElement { hbar_order, terms: BTreeMap::new() }
    }

    /// The empty outer word (the product unit).
    pub fn unit(hbar_order: u32) -> Self {
        let mut e = Self::zero(hbar_order);
        e.add_term(Vec::new(), NuSeries::one(hbar_order));
        e
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn hbar_order(&self) -> u32 {
        self.hbar_order
    }

    pub fn terms(&self) -> impl Iterator<Item = (&OuterWord, &NuSeries)> {
        self.terms.iter()
    }

    pub fn add_term(&mut self, word: OuterWord, c: NuSeries) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&word) {
            Some(e) => {
                *e = e.add(&c);
                if e.is_zero() {
                    self.terms.remove(&word);
                }
            }
            None => {
                self.terms.insert(word, c);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.hbar_order = self.hbar_order.min(other.hbar_order);
        for (w, c) in &other.terms {
            out.add_term(w.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = c.neg();
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale_nu(&self, s: &NuSeries) -> Self {
        let mut out = Self::zero(self.hbar_order);
        for (w, c) in &self.terms {
            out.add_term(w.clone(), c.mul(s));
        }
        out
    }

    /// Embeds a plain cochain as single-inner-word outer words of length 1.
    pub fn from_cochain(t: &UTensor) -> Self {
        let mut out = Self::zero(t.hbar_order);
        for (w, c) in t.terms() {
            out.add_term(vec![w.clone()], NuSeries::from_hbar(c.clone()));
        }
        out
    }
}

/// Pairs of outer words: the image space of the deconcatenation coproduct.
pub type TwoSided = BTreeMap<(OuterWord, OuterWord), NuSeries>;

fn two_sided_add(map: &mut TwoSided, key: (OuterWord, OuterWord), c: NuSeries) {
    if c.is_zero() {
        return;
    }
    let order = c.hbar_order();
    let entry = map.entry(key).or_insert_with(|| NuSeries::zero(order));
    *entry = entry.add(&c);
    if entry.is_zero() {
        map.retain(|_, v| !v.is_zero());
    }
}

/// Context for the coalgebra operations: the Hopf model, the coproduct, the
/// outer word-length bound, and the optional outer-parameter weighting that
/// multiplies each `(p, q)`-component by `nu^{p+q-1}` and each `p`-component
/// by `nu^{p-1}`.
pub struct Braces<'a> {
    pub uea: &'a Uea,
    pub cop: &'a dyn Coproduct,
    pub outer_bound: usize,
    pub nu_weighted: bool,
    pub flip_eps: bool,
}

impl<'a> Braces<'a> {
    pub fn new(uea: &'a Uea, cop: &'a dyn Coproduct, outer_bound: usize) -> Self {
        Braces { uea, cop, outer_bound, nu_weighted: false, flip_eps: false }
    }

    pub fn with_nu(&self, nu_weighted: bool) -> Braces<'a> {
        Braces { nu_weighted, ..*self }
    }

    pub fn with_flip(&self, flip_eps: bool) -> Braces<'a> {
        Braces { flip_eps, ..*self }
    }

    fn check_outer(&self, len: usize) -> Result<()> {
        if len > self.outer_bound {
            return Err(Error::FiltrationOverflow {
                len,
                bound: self.outer_bound,
                context: "outer word length".into(),
            });
        }
        Ok(())
    }

    /// The differential-bialgebra axioms hold on the reduced model: every
    /// slot of every inner word must lie in the augmentation ideal, i.e. be
    /// a nonempty monomial. Words with unit slots are degenerate and are
    /// rejected at the entry points.
    fn check_reduced(&self, x: &BraceElement) -> Result<()> {
        for (word, _) in &x.terms {
            for inner in word {
                if inner.iter().any(|m| m.is_empty()) {
                    return Err(Error::Precondition(
                        "inner words must have unit-free slots".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Shifted degree of an inner word: arity + internal - 1.
    pub fn inner_degree(&self, w: &InnerWord) -> i64 {
        let lie = self.uea.lie();
        let mut internal = 0i64;
        for m in w {
            for &g in m {
                internal += lie.degree(g);
            }
        }
        w.len() as i64 + internal - 1
    }

    pub fn outer_degree(&self, w: &OuterWord) -> i64 {
        w.iter().map(|iw| self.inner_degree(iw)).sum()
    }

    fn key_tensor(&self, w: &InnerWord, order: u32) -> UTensor {
        let mut t = UTensor::zero(w.len(), order);
        t.add_canonical_term(w.clone(), HbarSeries::one(order));
        t
    }

    /// One-slot differential component: the standard coboundary, i.e. the
    /// bracket coboundary with the suspension sign.
    fn b1(&self, w: &InnerWord, order: u32) -> Result<UTensor> {
        let t = self.key_tensor(w, order);
        let d = hochschild_diff(self.uea, &t, self.cop)?;
        Ok(if self.inner_degree(w) % 2 != 0 { d.neg() } else { d })
    }

    /// Differential cogenerator component on a `p`-word. Zero except at
    /// `p = 1` (coboundary) and `p = 2` (signed concatenation).
    pub fn brace_d_component(&self, words: &[InnerWord], order: u32) -> Result<BraceElement> {
        let mut out = BraceElement::zero(order);
        match words.len() {
            1 => {
                // one-slot component carries weight nu^0 in either mode
                let b = self.b1(&words[0], order)?;
                for (w, c) in b.terms() {
                    out.add_term(vec![w.clone()], NuSeries::from_hbar(c.clone()));
                }
            }
            2 => {
                let arity = words[0].len() + words[1].len();
                self.uea.check_arity(arity, "inner concatenation")?;
                let mut joined = words[0].clone();
                joined.extend(words[1].iter().cloned());
                // two-slot component: concatenation signed by the degree of
                // the left word (the unique choice consistent with the
                // one-slot component squaring to zero)
                let mut c = NuSeries::one(order);
                if self.inner_degree(&words[0]) % 2 != 0 {
                    c = c.neg();
                }
                if self.nu_weighted {
                    c = c.shift_nu(1);
                }
                out.add_term(vec![joined], c);
            }
            _ => {}
        }
        Ok(out)
    }

    /// Product cogenerator component on a `p`-word and a `q`-word. Identity
    /// for `(1,0)` and `(0,1)`, the insertion sum for `(1,n)`, zero
    /// otherwise.
    pub fn brace_m_component(
        &self,
        a: &[InnerWord],
        b: &[InnerWord],
        order: u32,
    ) -> Result<BraceElement> {
        let mut out = BraceElement::zero(order);
        match (a.len(), b.len()) {
            (1, 0) => out.add_term(vec![a[0].clone()], NuSeries::one(order)),
            (0, 1) => out.add_term(vec![b[0].clone()], NuSeries::one(order)),
            (1, n) if n >= 1 => {
                let alpha = self.key_tensor(&a[0], order);
                let betas: Vec<UTensor> =
                    b.iter().map(|w| self.key_tensor(w, order)).collect();
                let beta_refs: Vec<&UTensor> = betas.iter().collect();
                let mut t = brace_b1m(self.uea, &alpha, &beta_refs, self.cop)?;
                // The insertion sum carries left-counted position signs
                // (-1)^{sum (k_s-1) i_s}; this product orientation (spread
                // slots multiplied on the right) needs the host-slot mirror,
                // an extra offset-independent factor
                // (-1)^{(p-1) sum_s (k_s-1) + sum_{s<t} (k_s-1)(k_t-1)}.
                // This is the normalization for which the one-slot
                // differential is a derivation of the product on the reduced
                // model; its many-argument form is forced by associativity.
                let p1 = a[0].len() - 1;
                let ds: Vec<usize> = b.iter().map(|w| w.len() - 1).collect();
                let mut mirror = p1 * ds.iter().sum::<usize>();
                for s in 0..ds.len() {
                    for dt in &ds[s + 1..] {
                        mirror += ds[s] * dt;
                    }
                }
                if mirror % 2 != 0 {
                    t = t.neg();
                }
                if self.flip_eps {
                    // mutation hook: every insertion sign (-1)^eps flipped
                    t = t.neg();
                }
                let weight = if self.nu_weighted { n as i32 } else { 0 };
                for (w, c) in t.terms() {
                    out.add_term(
                        vec![w.clone()],
                        NuSeries::from_hbar(c.clone()).shift_nu(weight),
                    );
                }
            }
            _ => {}
        }
        Ok(out)
    }

    /// The coderivation extending the one- and two-slot components: acts on
    /// every consecutive block with the Koszul prefix sign.
    pub fn deformed_diff(&self, x: &BraceElement) -> Result<BraceElement> {
        self.check_reduced(x)?;
        let order = x.hbar_order;
        let mut out = BraceElement::zero(order);
        for (word, coeff) in &x.terms {
            let degs: Vec<i64> = word.iter().map(|w| self.inner_degree(w)).collect();
            for start in 0..word.len() {
                for blk in 1..=2usize.min(word.len() - start) {
                    let comp = self.brace_d_component(&word[start..start + blk], order)?;
                    if comp.is_zero() {
                        continue;
                    }
                    let prefix: i64 = degs[..start].iter().sum();
                    for (mid, c) in comp.terms() {
                        let mut new_word: OuterWord = word[..start].to_vec();
                        new_word.extend(mid.iter().cloned());
                        new_word.extend(word[start + blk..].iter().cloned());
                        self.check_outer(new_word.len())?;
                        let mut cc = coeff.mul(c);
                        if prefix % 2 != 0 {
                            cc = cc.neg();
                        }
                        out.add_term(new_word, cc);
                    }
                }
            }
        }
        Ok(out)
    }

    /// The coalgebra-map product extending the cogenerator components: the
    /// sum over interleavings in which each inner word of `x` absorbs a
    /// consecutive (possibly empty) run of inner words of `y`, the rest of
    /// `y` passing through, with Koszul signs for the interleaving.
    pub fn deformed_product(
        &self,
        x: &BraceElement,
        y: &BraceElement,
    ) -> Result<BraceElement> {
        self.check_reduced(x)?;
        self.check_reduced(y)?;
        let order = x.hbar_order.min(y.hbar_order);
        let mut out = BraceElement::zero(order);
        for (xw, xc) in &x.terms {
            for (yw, yc) in &y.terms {
                self.check_outer(xw.len() + yw.len())?;
                let base = xc.mul(yc);
                let xdegs: Vec<i64> = xw.iter().map(|w| self.inner_degree(w)).collect();
                let ydegs: Vec<i64> = yw.iter().map(|w| self.inner_degree(w)).collect();
                self.product_blocks(
                    xw, yw, &xdegs, &ydegs, 0, 0, Vec::new(), base, order, &mut out,
                )?;
            }
        }
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn product_blocks(
        &self,
        xw: &OuterWord,
        yw: &OuterWord,
        xdegs: &[i64],
        ydegs: &[i64],
        i: usize,
        j: usize,
        acc: OuterWord,
        coeff: NuSeries,
        order: u32,
        out: &mut BraceElement,
    ) -> Result<()> {
        if coeff.is_zero() {
            return Ok(());
        }
        if i == xw.len() && j == yw.len() {
            out.add_term(acc, coeff);
            return Ok(());
        }
        // Option 1: the next inner word of y passes through on its own,
        // moving left past all unconsumed inner words of x.
        if j < yw.len() {
            let pass_sign: i64 = ydegs[j] * xdegs[i..].iter().sum::<i64>();
            let mut c = coeff.clone();
            if pass_sign % 2 != 0 {
                c = c.neg();
            }
            let mut acc2 = acc.clone();
            acc2.push(yw[j].clone());
            self.product_blocks(xw, yw, xdegs, ydegs, i, j + 1, acc2, c, order, out)?;
        }
        // Option 2: the next inner word of x absorbs a run of t >= 0 inner
        // words of y; the run moves left past the x-words after this one.
        if i < xw.len() {
            for t in 0..=(yw.len() - j) {
                let run_deg: i64 = ydegs[j..j + t].iter().sum();
                let sign = run_deg * xdegs[i + 1..].iter().sum::<i64>();
                let block = self.brace_m_component(
                    &xw[i..=i],
                    &yw[j..j + t],
                    order,
                )?;
                for (mid, c) in block.terms() {
                    let mut cc = coeff.mul(c);
                    if sign % 2 != 0 {
                        cc = cc.neg();
                    }
                    let mut acc2 = acc.clone();
                    acc2.extend(mid.iter().cloned());
                    self.product_blocks(
                        xw, yw, xdegs, ydegs, i + 1, j + t, acc2, cc, order, out,
                    )?;
                }
            }
        }
        Ok(())
    }

    /// The rescaling morphism: an outer word of length `p` is multiplied by
    /// `nu^{-p}`. Intertwines the unweighted operations with the
    /// `nu`-weighted ones (tested by the axiom suite).
    pub fn rescale_nu(&self, x: &BraceElement) -> BraceElement {
        let mut out = BraceElement::zero(x.hbar_order);
        for (w, c) in &x.terms {
            out.add_term(w.clone(), c.shift_nu(-(w.len() as i32)));
        }
        out
    }

    /// Full deconcatenation coproduct (with empty parts).
    pub fn coproduct(&self, x: &BraceElement) -> TwoSided {
        let mut out = TwoSided::new();
        for (w, c) in &x.terms {
            for cut in 0..=w.len() {
                two_sided_add(
                    &mut out,
                    (w[..cut].to_vec(), w[cut..].to_vec()),
                    c.clone(),
                );
            }
        }
        out
    }

    /// `Delta(x * y) - Delta(x) * Delta(y)`: zero by the coalgebra-map
    /// construction; exercised to pin the sign bookkeeping.
    pub fn compat_residual(&self, x: &BraceElement, y: &BraceElement) -> Result<TwoSided> {
        let order = x.hbar_order.min(y.hbar_order);
        let mut out = self.coproduct(&self.deformed_product(x, y)?);
        let dx = self.coproduct(x);
        let dy = self.coproduct(y);
        for ((xl, xr), cx) in &dx {
            for ((yl, yr), cy) in &dy {
                // middle swap: yl moves past xr
                let sign = self.outer_degree(xr) * self.outer_degree(yl);
                let mut c = cx.mul(cy).neg();
                if sign % 2 != 0 {
                    c = c.neg();
                }
                let mut left = BraceElement::zero(order);
                left.add_term(xl.clone(), NuSeries::one(order));
                let mut right = BraceElement::zero(order);
                right.add_term(xr.clone(), NuSeries::one(order));
                let mut bl = BraceElement::zero(order);
                bl.add_term(yl.clone(), NuSeries::one(order));
                let mut br = BraceElement::zero(order);
                br.add_term(yr.clone(), NuSeries::one(order));
                let l = self.deformed_product(&left, &bl)?;
                let r = self.deformed_product(&right, &br)?;
                for (lw, lc) in l.terms() {
                    for (rw, rc) in r.terms() {
                        two_sided_add(
                            &mut out,
                            (lw.clone(), rw.clone()),
                            c.mul(lc).mul(rc),
                        );
                    }
                }
            }
        }
        Ok(out)
    }

    /// `Delta(dx) - (d (x) 1 + 1 (x) d) Delta(x)` with the Koszul sign on
    /// the right-acting differential.
    pub fn coderivation_residual(&self, x: &BraceElement) -> Result<TwoSided> {
        let mut out = self.coproduct(&self.deformed_diff(x)?);
        let dx = self.coproduct(x);
        let order = x.hbar_order;
        for ((l, r), c) in &dx {
            let mut le = BraceElement::zero(order);
            le.add_term(l.clone(), c.clone());
            let mut re = BraceElement::zero(order);
            re.add_term(r.clone(), c.clone());
            for (lw, lc) in self.deformed_diff(&le)?.terms() {
                two_sided_add(&mut out, (lw.clone(), r.clone()), lc.neg());
            }
            let sign = self.outer_degree(l);
            for (rw, rc) in self.deformed_diff(&re)?.terms() {
                let mut cc = rc.neg();
                if sign % 2 != 0 {
                    cc = cc.neg();
                }
                two_sided_add(&mut out, (l.clone(), rw.clone()), cc);
            }
        }
        Ok(out)
    }

    /// `d(x * y) - dx * y - (-1)^{|x|} x * dy` with the sign taken per
    /// homogeneous term of `x`.
    pub fn leibniz_residual(
        &self,
        x: &BraceElement,
        y: &BraceElement,
    ) -> Result<BraceElement> {
        let order = x.hbar_order.min(y.hbar_order);
        let mut out = self.deformed_diff(&self.deformed_product(x, y)?)?;
        out = out.sub(&self.deformed_product(&self.deformed_diff(x)?, y)?);
        let dy = self.deformed_diff(y)?;
        let mut even = BraceElement::zero(order);
        let mut odd = BraceElement::zero(order);
        for (w, c) in &x.terms {
            if self.outer_degree(w) % 2 != 0 {
                odd.add_term(w.clone(), c.clone());
            } else {
                even.add_term(w.clone(), c.clone());
            }
        }
        out = out.sub(&self.deformed_product(&even, &dy)?);
        out = out.add(&self.deformed_product(&odd, &dy)?);
        Ok(out)
    }

    /// Gerstenhaber bracket of embedded cochains through the one-over-one
    /// component, for cross-checking against the direct construction.
    pub fn derived_bracket(&self, a: &UTensor, b: &UTensor) -> Result<UTensor> {
        gerstenhaber_bracket(self.uea, a, b, self.cop)
    }
}

/// Axiom-suite report: residual witnesses per axiom, empty lists meaning
/// the axiom held on all sampled inputs.
#[derive(Debug, Default)]
pub struct AxiomReport {
    pub assoc_failures: usize,
    pub coassoc_failures: usize,
    pub compat_failures: usize,
    pub d_squared_failures: usize,
    pub coderivation_failures: usize,
    pub leibniz_failures: usize,
    pub rescale_product_failures: usize,
    pub rescale_diff_failures: usize,
    pub trials: usize,
}

impl AxiomReport {
    pub fn all_pass(&self) -> bool {
        self.assoc_failures == 0
            && self.coassoc_failures == 0
            && self.compat_failures == 0
            && self.d_squared_failures == 0
            && self.coderivation_failures == 0
            && self.leibniz_failures == 0
            && self.rescale_product_failures == 0
            && self.rescale_diff_failures == 0
    }
}

/// Runs the differential-bialgebra axioms on seeded random elements.
pub fn bialgebra_axiom_suite(
    braces: &Braces,
    trials: usize,
    seed: u64,
    hbar_order: u32,
) -> Result<AxiomReport> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut report = AxiomReport { trials, ..Default::default() };
    let nu = braces.with_nu(true);
    for _ in 0..trials {
        let a = random_element(braces, &mut rng, hbar_order);
        let b = random_element(braces, &mut rng, hbar_order);
        let c = random_element(braces, &mut rng, hbar_order);
        let ab = braces.deformed_product(&a, &b)?;
        let bc = braces.deformed_product(&b, &c)?;
        if !braces
            .deformed_product(&ab, &c)?
            .sub(&braces.deformed_product(&a, &bc)?)
            .is_zero()
        {
            report.assoc_failures += 1;
        }
        if coassoc_residual_nonzero(braces, &a) {
            report.coassoc_failures += 1;
        }
        if !braces.compat_residual(&a, &b)?.is_empty() {
            report.compat_failures += 1;
        }
        if !braces.deformed_diff(&braces.deformed_diff(&a)?)?.is_zero() {
            report.d_squared_failures += 1;
        }
        if !braces.coderivation_residual(&a)?.is_empty() {
            report.coderivation_failures += 1;
        }
        if !braces.leibniz_residual(&a, &b)?.is_zero() {
            report.leibniz_failures += 1;
        }
        // rescaling intertwiner: I(a * b) = I(a) *_nu I(b), I(da) = d_nu I(a)
        let lhs = braces.rescale_nu(&braces.deformed_product(&a, &b)?);
        let rhs = nu.deformed_product(&braces.rescale_nu(&a), &braces.rescale_nu(&b))?;
        if !lhs.sub(&rhs).is_zero() {
            report.rescale_product_failures += 1;
        }
        let lhs = braces.rescale_nu(&braces.deformed_diff(&a)?);
        let rhs = nu.deformed_diff(&braces.rescale_nu(&a))?;
        if !lhs.sub(&rhs).is_zero() {
            report.rescale_diff_failures += 1;
        }
    }
    Ok(report)
}

fn coassoc_residual_nonzero(braces: &Braces, a: &BraceElement) -> bool {
    // (Delta (x) 1) Delta vs (1 (x) Delta) Delta, each computed by a second
    // pass of the coproduct on one leg.
    let order = a.hbar_order();
    let d = braces.coproduct(a);
    let mut left: BTreeMap<(OuterWord, OuterWord, OuterWord), NuSeries> = BTreeMap::new();
    let mut right = left.clone();
    let wrap = |w: &OuterWord, c: &NuSeries| {
        let mut e = BraceElement::zero(order);
        e.add_term(w.clone(), c.clone());
        e
    };
    for ((l, r), c) in &d {
        for ((l1, l2), c2) in braces.coproduct(&wrap(l, c)) {
            let e = left.entry((l1, l2, r.clone())).or_insert_with(|| NuSeries::zero(order));
            *e = e.add(&c2);
        }
        for ((r1, r2), c2) in braces.coproduct(&wrap(r, c)) {
            let e = right.entry((l.clone(), r1, r2)).or_insert_with(|| NuSeries::zero(order));
            *e = e.add(&c2);
        }
    }
    let keys: std::collections::BTreeSet<_> =
        left.keys().chain(right.keys()).cloned().collect();
    keys.into_iter().any(|k| {
        let lv = left.get(&k).cloned().unwrap_or_else(|| NuSeries::zero(order));
        let rv = right.get(&k).cloned().unwrap_or_else(|| NuSeries::zero(order));
        !lv.sub(&rv).is_zero()
    })
}

fn random_element(
    braces: &Braces,
    rng: &mut rand_chacha::ChaCha8Rng,
    order: u32,
) -> BraceElement {
    use rand::Rng;
    let lie = braces.uea.lie();
    let dim = lie.dim() as u32;
    let mut out = BraceElement::zero(order);
    let n_terms = rng.gen_range(1..=2);
    for _ in 0..n_terms {
        let outer_len = rng.gen_range(1..=2);
        let mut word: OuterWord = Vec::new();
        for _ in 0..outer_len {
            let arity = rng.gen_range(1..=2);
            let mut inner: InnerWord = Vec::new();
            for _ in 0..arity {
                // reduced slots only: one or two letters, never the unit
                if rng.gen_bool(0.7) {
                    inner.push(vec![rng.gen_range(0..dim)]);
                } else {
                    let mut pair = vec![rng.gen_range(0..dim), rng.gen_range(0..dim)];
                    pair.sort_unstable();
                    inner.push(pair);
                }
            }
            word.push(inner);
        }
        let num = rng.gen_range(-2i64..=2);
        if num == 0 {
            continue;
        }
        let hpow = rng.gen_range(0..=1u32);
        out.add_term(
            word,
            NuSeries::from_hbar(HbarSeries::monomial(hpow, crate::scalars::qi(num), order)),
        );
    }
    out
}
