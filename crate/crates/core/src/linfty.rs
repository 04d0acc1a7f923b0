//! Homotopy Lie structures presented by their coderivation components, with
//! structure/morphism residual checking, the explicit homotopy deformation
//! of a morphism, Maurer-Cartan transport, and gauge transformation.
//!
//! A structure on a finite graded basis `A` is a family of component maps
//! `d^k : Λᵏ A -> A` for `k = 1..=K`.  Internally everything lives on the
//! shifted space `W = A[1]`: exterior canonical words over the `A`-degrees
//! coincide with the monomial basis of the free graded-commutative algebra
//! on `W` (the effective-degree convention of the graded kernel *is* the
//! shift), and every component has shifted degree `+1`.  The coderivation
//! extension inserts each component into every subset of a word with
//! unshuffle Koszul signs; a morphism is extended over set partitions.  All
//! signs route through the single Koszul routine.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graded::{canonicalize_word, koszul_sign, GradedBasis, GradedTensor, Symmetry};
use crate::lie::{LieAlgebra, LinComb};
use crate::scalars::{q, HbarSeries, Q};

/// Sparse component map `Λᵏ A -> A`: canonical exterior word to the
/// expansion of its image in the target basis.
pub type ComponentMap = BTreeMap<Vec<u32>, BTreeMap<u32, HbarSeries>>;

/// Element of the free cocommutative coalgebra: one exterior tensor per
/// word length.
#[derive(Clone, Debug)]
pub struct SElement {
    pub parts: BTreeMap<usize, GradedTensor>,
    hbar_order: u32,
}

impl SElement {
    pub fn zero(hbar_order: u32) -> Self {
        SElement { parts: BTreeMap::new(), hbar_order }
    }

    pub fn from_tensor(t: &GradedTensor) -> Self {
        let mut parts = BTreeMap::new();
        let order = t.hbar_order;
        if !t.is_zero() {
            parts.insert(t.arity, t.clone());
        }
        SElement { parts, hbar_order: order }
    }

    pub fn from_word(word: &[u32], basis: &GradedBasis, hbar_order: u32) -> Result<Self> {
        let mut t = GradedTensor::zero(Symmetry::Exterior, word.len(), hbar_order);
        t.add_term(word, HbarSeries::one(hbar_order), basis)?;
        Ok(SElement::from_tensor(&t))
    }

    pub fn add_term(
        &mut self,
        word: &[u32],
        c: HbarSeries,
        basis: &GradedBasis,
    ) -> Result<()> {
        let t = self
            .parts
            .entry(word.len())
            .or_insert_with(|| GradedTensor::zero(Symmetry::Exterior, word.len(), self.hbar_order));
        t.add_term(word, c, basis)
    }

    pub fn part(&self, arity: usize) -> Option<&GradedTensor> {
        self.parts.get(&arity).filter(|t| !t.is_zero())
    }

    pub fn is_zero(&self) -> bool {
        self.parts.values().all(|t| t.is_zero())
    }
}

/// One nonzero piece of a residual expansion: the input basis word it came
/// from and the offending output tensor.
#[derive(Clone, Debug)]
pub struct ResidualEntry {
    pub input: Vec<u32>,
    pub output_arity: usize,
    pub defect: GradedTensor,
}

/// A homotopy Lie structure: graded basis plus component maps `d^k` for
/// `k = 1..=k_bound`, each of shifted degree `+1`
/// (`deg target = Σ deg inputs - k + 2`).
#[derive(Clone, Debug)]
pub struct LInftyStructure {
    basis: GradedBasis,
    components: Vec<ComponentMap>,
    hbar_order: u32,
}

fn validate_component(
    map: &ComponentMap,
    arity: usize,
    src: &GradedBasis,
    dst: &GradedBasis,
    target_degree_offset: i64,
    context: &str,
) -> Result<()> {
    for (word, image) in map {
        if word.len() != arity {
            return Err(Error::InvalidInput(format!(
                "{}: arity-{} component keyed by a word of length {}",
                context,
                arity,
                word.len()
            )));
        }
        match canonicalize_word(word, src, Symmetry::Exterior)? {
            Some((sorted, _)) if sorted == *word => {}
            _ => {
                return Err(Error::InvalidInput(format!(
                    "{}: component key {:?} is not a canonical exterior word",
                    context, word
                )));
            }
        }
        let in_degree: i64 = word.iter().map(|&g| src.degree(g)).sum();
        for (&t, c) in image {
            if t >= dst.len() as u32 {
                return Err(Error::InvalidInput(format!(
                    "{}: target generator {} out of range",
                    context, t
                )));
            }
            if !c.is_zero()
                && dst.degree(t) != in_degree - arity as i64 + target_degree_offset
            {
                return Err(Error::InvalidInput(format!(
                    "{}: image of {:?} is not degree-homogeneous",
                    context, word
                )));
            }
        }
    }
    Ok(())
}

/// Evaluates a sparse component map linearly on an exterior tensor,
/// returning an arity-1 tensor over the target basis.
fn eval_component(
    map: &ComponentMap,
    t: &GradedTensor,
    dst: &GradedBasis,
    hbar_order: u32,
) -> Result<GradedTensor> {
    let mut out = GradedTensor::zero(Symmetry::Exterior, 1, hbar_order);
    for (word, c) in t.terms() {
        if let Some(image) = map.get(word) {
            for (&g, cg) in image {
                out.add_term(&[g], c.mul(cg), dst)?;
            }
        }
    }
    Ok(out)
}

/// All canonical exterior words of the given length over a basis.
pub fn canonical_exterior_words(basis: &GradedBasis, arity: usize) -> Vec<Vec<u32>> {
    let mut out: Vec<Vec<u32>> = vec![Vec::new()];
    for _ in 0..arity {
        let mut next = Vec::new();
        for w in &out {
            let start = w.last().copied().unwrap_or(0);
            for g in start..basis.len() as u32 {
                if w.last() == Some(&g) && (basis.degree(g) + 1) % 2 != 0 {
                    continue;
                }
                let mut v = w.clone();
                v.push(g);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// Subsets of `0..n` of size `k` in lexicographic order.
fn index_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Partitions of `0..n` into nonempty blocks of size at most `max_block`,
/// blocks ordered by least element, elements increasing within a block.
fn set_partitions(n: usize, max_block: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut cur: Vec<Vec<usize>> = Vec::new();
    fn rec(
        item: usize,
        n: usize,
        max_block: usize,
        cur: &mut Vec<Vec<usize>>,
        out: &mut Vec<Vec<Vec<usize>>>,
    ) {
        if item == n {
            out.push(cur.clone());
            return;
        }
        for b in 0..cur.len() {
            if cur[b].len() < max_block {
                cur[b].push(item);
                rec(item + 1, n, max_block, cur, out);
                cur[b].pop();
            }
        }
        cur.push(vec![item]);
        rec(item + 1, n, max_block, cur, out);
        cur.pop();
    }
    rec(0, n, max_block, &mut cur, &mut out);
    out
}

/// Unshuffle Koszul sign of rearranging `word` into the order given by
/// `perm` (output position -> input index), at shifted (effective) degrees.
fn unshuffle_sign(word: &[u32], perm: &[usize], basis: &GradedBasis) -> Result<i64> {
    let degs: Vec<i64> = word.iter().map(|&g| basis.degree(g) + 1).collect();
    koszul_sign(perm, &degs)
}

impl LInftyStructure {
    pub fn new(
        gens: Vec<(String, i64)>,
        components: Vec<ComponentMap>,
        hbar_order: u32,
    ) -> Result<Self> {
        let basis = GradedBasis::new(gens);
        for (idx, map) in components.iter().enumerate() {
            validate_component(map, idx + 1, &basis, &basis, 2, "structure")?;
        }
        Ok(LInftyStructure { basis, components, hbar_order })
    }

    /// Packages a graded Lie algebra with a degree `+1` generator
    /// differential: `d¹` from the differential table and `d^{1,1}` the
    /// bracket with the shift sign, `d^{1,1}(x ∨ y) = (-1)^{deg x} [x, y]`.
    pub fn from_dgla(
        lie: &LieAlgebra,
        differential: &[LinComb],
        hbar_order: u32,
    ) -> Result<Self> {
        if differential.len() != lie.dim() {
            return Err(Error::InvalidInput(format!(
                "differential table has {} entries for a {}-dimensional algebra",
                differential.len(),
                lie.dim()
            )));
        }
        let basis = lie.basis();
        let mut d1: ComponentMap = BTreeMap::new();
        for g in 0..lie.dim() as u32 {
            let image: BTreeMap<u32, HbarSeries> = differential[g as usize]
                .iter()
                .map(|(&t, c)| (t, HbarSeries::constant(c.clone(), hbar_order)))
                .collect();
            if !image.is_empty() {
                d1.insert(vec![g], image);
            }
        }
        let mut d2: ComponentMap = BTreeMap::new();
        for w in canonical_exterior_words(basis, 2) {
            let mut b = lie.bracket_gens(w[0], w[1]);
            if b.is_empty() {
                continue;
            }
            if lie.degree(w[0]) % 2 != 0 {
                for v in b.values_mut() {
                    *v = -v.clone();
                }
            }
            let image: BTreeMap<u32, HbarSeries> = b
                .into_iter()
                .map(|(t, c)| (t, HbarSeries::constant(c, hbar_order)))
                .collect();
            d2.insert(w, image);
        }
        let gens: Vec<(String, i64)> = (0..lie.dim() as u32)
            .map(|g| (basis.name(g).to_string(), basis.degree(g)))
            .collect();
        LInftyStructure::new(gens, vec![d1, d2], hbar_order)
    }

    pub fn basis(&self) -> &GradedBasis {
        &self.basis
    }

    pub fn k_bound(&self) -> usize {
        self.components.len()
    }

    pub fn hbar_order(&self) -> u32 {
        self.hbar_order
    }

    pub fn component(&self, k: usize) -> Option<&ComponentMap> {
        self.components.get(k - 1)
    }

    /// Replaces one entry of a component map (used to build mutations).
    pub fn perturb(&mut self, k: usize, word: Vec<u32>, image: BTreeMap<u32, HbarSeries>) {
        self.components[k - 1].insert(word, image);
    }

    /// Evaluates the arity-`k` component on an exterior tensor.
    pub fn eval(&self, k: usize, t: &GradedTensor) -> Result<GradedTensor> {
        let Some(map) = self.components.get(k - 1) else {
            return Ok(GradedTensor::zero(Symmetry::Exterior, 1, self.hbar_order));
        };
        eval_component(map, t, &self.basis, self.hbar_order)
    }

    /// The full coderivation extension: every component applied to every
    /// subset of every word, the image replacing the subset at the front
    /// with the unshuffle Koszul sign.
    pub fn apply(&self, x: &SElement) -> Result<SElement> {
        let mut out = SElement::zero(self.hbar_order);
        for (&n, tensor) in &x.parts {
            for (word, c) in tensor.terms() {
                for k in 1..=self.components.len().min(n) {
                    let map = &self.components[k - 1];
                    for subset in index_subsets(n, k) {
                        let sub: Vec<u32> = subset.iter().map(|&i| word[i]).collect();
                        let Some(image) = map.get(&sub) else { continue };
                        let rest: Vec<usize> =
                            (0..n).filter(|i| !subset.contains(i)).collect();
                        let mut perm = subset.clone();
                        perm.extend(&rest);
                        let sign = unshuffle_sign(word, &perm, &self.basis)?;
                        for (&g, cg) in image {
                            let mut new_word = vec![g];
                            new_word.extend(rest.iter().map(|&i| word[i]));
                            let mut coeff = c.mul(cg);
                            if sign < 0 {
                                coeff = coeff.neg();
                            }
                            out.add_term(&new_word, coeff, &self.basis)?;
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Expands `d ∘ d` on every canonical word of length `<= max_arity` and
/// reports the nonzero pieces.  Empty report = valid structure.
pub fn check_structure(s: &LInftyStructure, max_arity: usize) -> Result<Vec<ResidualEntry>> {
    if max_arity > s.k_bound() {
        return Err(Error::ArityOverflow {
            arity: max_arity,
            bound: s.k_bound(),
            context: "structure residual scan".into(),
        });
    }
    let mut report = Vec::new();
    for n in 1..=max_arity {
        for word in canonical_exterior_words(&s.basis, n) {
            let x = SElement::from_word(&word, &s.basis, s.hbar_order)?;
            let dd = s.apply(&s.apply(&x)?)?;
            for (&m, t) in &dd.parts {
                if !t.is_zero() {
                    report.push(ResidualEntry {
                        input: word.clone(),
                        output_arity: m,
                        defect: t.clone(),
                    });
                }
            }
        }
    }
    Ok(report)
}

/// A morphism presented by component maps `φᵏ : Λᵏ A₁ -> A₂` of shifted
/// degree `0` (`deg target = Σ deg inputs - k + 1`), extended to the
/// coalgebras as a coalgebra map over set partitions.
#[derive(Clone, Debug)]
pub struct LInftyMorphism {
    src: GradedBasis,
    dst: GradedBasis,
    components: Vec<ComponentMap>,
    hbar_order: u32,
}

impl LInftyMorphism {
    pub fn new(
        src: &GradedBasis,
        dst: &GradedBasis,
        components: Vec<ComponentMap>,
        hbar_order: u32,
    ) -> Result<Self> {
        for (idx, map) in components.iter().enumerate() {
            validate_component(map, idx + 1, src, dst, 1, "morphism")?;
        }
        Ok(LInftyMorphism {
            src: clone_basis(src),
            dst: clone_basis(dst),
            components,
            hbar_order,
        })
    }

    /// The strict identity morphism with the given number of component slots.
    pub fn identity(basis: &GradedBasis, k_bound: usize, hbar_order: u32) -> Self {
        let mut first: ComponentMap = BTreeMap::new();
        for g in 0..basis.len() as u32 {
            first.insert(vec![g], BTreeMap::from([(g, HbarSeries::one(hbar_order))]));
        }
        let mut components = vec![first];
        components.resize(k_bound.max(1), BTreeMap::new());
        LInftyMorphism {
            src: clone_basis(basis),
            dst: clone_basis(basis),
            components,
            hbar_order,
        }
    }

    pub fn k_bound(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, k: usize) -> Option<&ComponentMap> {
        self.components.get(k - 1)
    }

    pub fn src(&self) -> &GradedBasis {
        &self.src
    }

    pub fn dst(&self) -> &GradedBasis {
        &self.dst
    }

    pub fn eval(&self, k: usize, t: &GradedTensor) -> Result<GradedTensor> {
        let Some(map) = self.components.get(k - 1) else {
            return Ok(GradedTensor::zero(Symmetry::Exterior, 1, self.hbar_order));
        };
        eval_component(map, t, &self.dst, self.hbar_order)
    }

    /// Coalgebra-map extension: sum over partitions of the word into
    /// nonempty blocks, one component per block, with unshuffle Koszul
    /// signs (block outputs keep the block order; components have shifted
    /// degree 0 so no further signs appear).
    pub fn apply(&self, x: &SElement) -> Result<SElement> {
        let mut out = SElement::zero(self.hbar_order);
        let kb = self.components.len();
        for (&n, tensor) in &x.parts {
            let partitions = set_partitions(n, kb);
            for (word, c) in tensor.terms() {
                'partition: for blocks in &partitions {
                    let mut factors: Vec<&BTreeMap<u32, HbarSeries>> = Vec::new();
                    for b in blocks {
                        let sub: Vec<u32> = b.iter().map(|&i| word[i]).collect();
                        match self.components[b.len() - 1].get(&sub) {
                            Some(image) => factors.push(image),
                            None => continue 'partition,
                        }
                    }
                    let perm: Vec<usize> = blocks.iter().flatten().copied().collect();
                    let sign = unshuffle_sign(word, &perm, &self.src)?;
                    // distribute over the image expansions of all blocks
                    let mut expansions: Vec<(Vec<u32>, HbarSeries)> =
                        vec![(Vec::new(), if sign < 0 { c.neg() } else { c.clone() })];
                    for image in factors {
                        let mut next = Vec::new();
                        for (w0, c0) in &expansions {
                            for (&g, cg) in image {
                                let mut w1 = w0.clone();
                                w1.push(g);
                                next.push((w1, c0.mul(cg)));
                            }
                        }
                        expansions = next;
                    }
                    for (w1, c1) in expansions {
                        out.add_term(&w1, c1, &self.dst)?;
                    }
                }
            }
        }
        Ok(out)
    }
}

fn clone_basis(b: &GradedBasis) -> GradedBasis {
    GradedBasis::new(
        (0..b.len() as u32)
            .map(|g| (b.name(g).to_string(), b.degree(g)))
            .collect(),
    )
}

/// Residual of `φ ∘ d₁ - d₂ ∘ φ` expanded on every canonical word of
/// length `<= max_arity`.  Empty report = morphism.
pub fn check_morphism(
    phi: &LInftyMorphism,
    s1: &LInftyStructure,
    s2: &LInftyStructure,
    max_arity: usize,
) -> Result<Vec<ResidualEntry>> {
    if s1.basis.len() != phi.src.len() || s2.basis.len() != phi.dst.len() {
        return Err(Error::InvalidInput(
            "morphism bases do not match the structures".into(),
        ));
    }
    let mut report = Vec::new();
    for n in 1..=max_arity {
        for word in canonical_exterior_words(&s1.basis, n) {
            let x = SElement::from_word(&word, &s1.basis, s1.hbar_order)?;
            let lhs = phi.apply(&s1.apply(&x)?)?;
            let rhs = s2.apply(&phi.apply(&x)?)?;
            let mut arities: Vec<usize> =
                lhs.parts.keys().chain(rhs.parts.keys()).copied().collect();
            arities.sort();
            arities.dedup();
            for m in arities {
                let zero = GradedTensor::zero(Symmetry::Exterior, m, s1.hbar_order);
                let l = lhs.part(m).unwrap_or(&zero);
                let r = rhs.part(m).unwrap_or(&zero);
                let diff = l.sub(r, &phi.dst)?;
                if !diff.is_zero() {
                    report.push(ResidualEntry {
                        input: word.clone(),
                        output_arity: m,
                        defect: diff,
                    });
                }
            }
        }
    }
    Ok(report)
}

/// Merges `scale * src` into `dst`, dropping entries that cancel to zero.
fn cm_merge(dst: &mut ComponentMap, src: &ComponentMap, scale: &Q, order: u32) {
    for (word, image) in src {
        let entry = dst.entry(word.clone()).or_default();
        for (&g, c) in image {
            let cur = entry.entry(g).or_insert_with(|| HbarSeries::zero(order));
            *cur = cur.add(&c.scale(scale));
        }
        entry.retain(|_, c| !c.is_zero());
    }
    dst.retain(|_, entry| !entry.is_empty());
}

/// Folds an arity-1 result tensor into the component entry for `word`.
fn cm_accumulate(map: &mut ComponentMap, word: &[u32], image: &GradedTensor) {
    if image.is_zero() {
        return;
    }
    let entry = map.entry(word.to_vec()).or_default();
    for (w, c) in image.terms() {
        let cur = entry.entry(w[0]).or_insert_with(|| HbarSeries::zero(c.order()));
        *cur = cur.add(c);
    }
}

/// Explicit homotopy deformation of a morphism between two-component
/// structures by an arbitrary polylinear map `V : Λᵐ A₁ -> A₂` of shifted
/// degree `-1` (`deg target = Σ deg inputs - m`): the time-one value of the
/// flow `dφ_t/dt = D₂𝒱_t + 𝒱_t D₁`, where `𝒱_t` is the `(φ_t, φ_t)`-
/// coderivation extension of `V`.  The flow preserves both the coalgebra-map
/// and the on-shell chain conditions, so the result is again a morphism.
/// Corestricted to the target, the per-arity derivatives are
///
/// * arity `n < m`: zero (components below the deformation arity never move);
/// * arity `m`: `d₂(V(x)) + V(d₁-extension of x)` — constant in `t`, so
///   `φ̃ᵐ = φᵐ + d₂V + V d₁` exactly;
/// * arity `n > m`: `V(bracket-extension part)` (only at `n = m+1`) plus
///   `d₂^{1,1}( Σ_{|I|=m} ± V(x_I) ∨ φ_tⁿ⁻ᵐ(x_rest) )`.
///
/// The coupling is triangular (`n` depends only on `n - m`), so each
/// component is a polynomial in `t` that is integrated exactly; the
/// rational `1/k!`-type factors on iterated `V`-corrections come out of the
/// integration.
pub fn deform_morphism(
    phi: &LInftyMorphism,
    s1: &LInftyStructure,
    s2: &LInftyStructure,
    v: &ComponentMap,
    m: usize,
) -> Result<LInftyMorphism> {
    if s1.k_bound() > 2 || s2.k_bound() > 2 {
        return Err(Error::Unsupported(
            "morphism deformation is implemented for two-component structures".into(),
        ));
    }
    if m == 0 || m > phi.k_bound() {
        return Err(Error::InvalidInput(format!(
            "deformation arity {} outside the morphism bound {}",
            m,
            phi.k_bound()
        )));
    }
    validate_component(v, m, &phi.src, &phi.dst, 0, "homotopy")?;
    let order = phi.hbar_order;
    let one = Q::from_integer(1.into());
    // Components as polynomials in the flow time: poly[n-1][j] multiplies tʲ.
    let mut poly: Vec<Vec<ComponentMap>> =
        phi.components.iter().map(|c| vec![c.clone()]).collect();
    for n in m..=phi.k_bound() {
        let mut integrand: Vec<ComponentMap> = vec![BTreeMap::new()];
        // Time-independent part: d₂¹(V(x)) at n = m, plus V applied to the
        // arity-m slice of the source coderivation.
        for word in canonical_exterior_words(&phi.src, n) {
            let x = SElement::from_word(&word, &s1.basis, order)?;
            let mut acc = GradedTensor::zero(Symmetry::Exterior, 1, order);
            let dx = s1.apply(&x)?;
            if let Some(part) = dx.part(m) {
                acc = acc.add(&eval_component(v, part, &phi.dst, order)?, &phi.dst)?;
            }
            if n == m {
                let vim = eval_component(v, x.part(m).expect("single word"), &phi.dst, order)?;
                acc = acc.add(&s2.eval(1, &vim)?, &phi.dst)?;
            }
            cm_accumulate(&mut integrand[0], &word, &acc);
        }
        if n > m {
            // Pairing part d₂^{1,1}(V ∨ φ_tⁿ⁻ᵐ), one term per t-power of the
            // already-integrated lower component.
            let lower = poly[n - m - 1].clone();
            for (j, coeff_map) in lower.iter().enumerate() {
                let mut pj: ComponentMap = BTreeMap::new();
                for word in canonical_exterior_words(&phi.src, n) {
                    let mut pairs = GradedTensor::zero(Symmetry::Exterior, 2, order);
                    for subset in index_subsets(n, m) {
                        let sub: Vec<u32> = subset.iter().map(|&i| word[i]).collect();
                        let Some(vim) = v.get(&sub) else { continue };
                        let rest: Vec<usize> =
                            (0..n).filter(|i| !subset.contains(i)).collect();
                        let rest_word: Vec<u32> = rest.iter().map(|&i| word[i]).collect();
                        let Some(pim) = coeff_map.get(&rest_word) else { continue };
                        let mut perm = subset.clone();
                        perm.extend(&rest);
                        let sign = unshuffle_sign(&word, &perm, &phi.src)?;
                        for (&gv, cv) in vim {
                            for (&gp, cp) in pim {
                                let mut c = cv.mul(cp);
                                if sign < 0 {
                                    c = c.neg();
                                }
                                pairs.add_term(&[gv, gp], c, &phi.dst)?;
                            }
                        }
                    }
                    cm_accumulate(&mut pj, &word, &s2.eval(2, &pairs)?);
                }
                if integrand.len() <= j {
                    integrand.resize(j + 1, BTreeMap::new());
                }
                cm_merge(&mut integrand[j], &pj, &one, order);
            }
        }
        // Integrate: tʲ contributes tʲ⁺¹/(j+1).
        for (j, map) in integrand.iter().enumerate() {
            if map.is_empty() {
                continue;
            }
            while poly[n - 1].len() <= j + 1 {
                poly[n - 1].push(BTreeMap::new());
            }
            let scale = Q::from_integer(((j + 1) as i64).into()).recip();
            cm_merge(&mut poly[n - 1][j + 1], map, &scale, order);
        }
    }
    // Evaluate the flow at time one.
    let mut components = Vec::with_capacity(phi.k_bound());
    for coeffs in poly {
        let mut total: ComponentMap = BTreeMap::new();
        for map in &coeffs {
            cm_merge(&mut total, map, &one, order);
        }
        components.push(total);
    }
    LInftyMorphism::new(&phi.src, &phi.dst, components, order)
}

/// Truncates every coefficient series to powers `<= n`.
pub fn truncate_tensor(t: &GradedTensor, n: u32) -> GradedTensor {
    t.truncated(n)
}

/// Maurer-Cartan residual `Σ_k (1/k!) d^k(π, ..., π)` of an arity-1 element.
pub fn mc_residual(s: &LInftyStructure, pi: &GradedTensor) -> Result<GradedTensor> {
    if pi.arity != 1 {
        return Err(Error::InvalidInput("Maurer-Cartan candidates have arity 1".into()));
    }
    let mut out = GradedTensor::zero(Symmetry::Exterior, 1, s.hbar_order);
    let mut power = pi.clone();
    let mut factorial = Q::from_integer(1.into());
    for k in 1..=s.k_bound() {
        factorial = factorial * Q::from_integer((k as i64).into());
        out = out.add(&s.eval(k, &power)?.scale(&factorial.recip()), &s.basis)?;
        if k < s.k_bound() {
            power = power.product(pi, &s.basis)?;
        }
    }
    Ok(out)
}

/// Pushes a Maurer-Cartan element through a morphism:
/// `Σ_k (1/k!) φᵏ(π, ..., π)`.  Requires positive ħ-valuation and a source
/// residual vanishing mod `ħ^{N+1}`.
pub fn mc_transport(
    phi: &LInftyMorphism,
    s1: &LInftyStructure,
    pi: &GradedTensor,
    n_order: u32,
) -> Result<GradedTensor> {
    if pi.terms().any(|(_, c)| c.valuation() == Some(0)) {
        return Err(Error::InvalidInput(
            "Maurer-Cartan candidates must have positive hbar valuation".into(),
        ));
    }
    let res = mc_residual(s1, pi)?;
    if !truncate_tensor(&res, n_order).is_zero() {
        return Err(Error::Precondition(format!(
            "source Maurer-Cartan residual is nonzero at order {}",
            n_order
        )));
    }
    let mut out = GradedTensor::zero(Symmetry::Exterior, 1, phi.hbar_order);
    let mut power = pi.clone();
    let mut factorial = Q::from_integer(1.into());
    for k in 1..=phi.k_bound() {
        factorial = factorial * Q::from_integer((k as i64).into());
        out = out.add(&phi.eval(k, &power)?.scale(&factorial.recip()), &phi.dst)?;
        if k < phi.k_bound() {
            power = power.product(pi, &phi.src)?;
        }
    }
    Ok(out)
}

/// Formal exponential gauge action of a shifted degree `-1` generator `g`
/// (positive ħ-valuation) on an element, for a two-component structure:
///
/// `π ↦ Σ_{k>=0} ad_g^k(π)/k! + Σ_{k>=0} ad_g^k(d¹g)/(k+1)!`
///
/// with `ad_g = d^{1,1}(g ∨ -)`; the flow of `dπ/dt = d¹g + d^{1,1}(g∨π)`
/// at time 1, summed to depth `n_order`.
pub fn gauge_transform(
    pi: &GradedTensor,
    g: &GradedTensor,
    s: &LInftyStructure,
    n_order: u32,
) -> Result<GradedTensor> {
    if s.k_bound() > 2 {
        return Err(Error::Unsupported(
            "gauge transformation is implemented for two-component structures".into(),
        ));
    }
    if g.terms().any(|(_, c)| c.valuation() == Some(0)) {
        return Err(Error::InvalidInput(
            "gauge generators must have positive hbar valuation".into(),
        ));
    }
    let ad = |x: &GradedTensor| -> Result<GradedTensor> {
        s.eval(2, &g.product(x, &s.basis)?)
    };
    let mut out = GradedTensor::zero(Symmetry::Exterior, 1, s.hbar_order);
    let mut term = pi.clone();
    let mut factorial = Q::from_integer(1.into());
    for k in 0..=n_order as i64 {
        if k > 0 {
            factorial = factorial * Q::from_integer(k.into());
            term = ad(&term)?;
        }
        out = out.add(&term.scale(&factorial.recip()), &s.basis)?;
        if term.is_zero() {
            break;
        }
    }
    let mut inhom = s.eval(1, g)?;
    let mut factorial = Q::from_integer(1.into());
    for k in 0..=n_order as i64 {
        factorial = factorial * Q::from_integer((k + 1).into());
        out = out.add(&inhom.scale(&factorial.recip()), &s.basis)?;
        if inhom.is_zero() {
            break;
        }
        inhom = ad(&inhom)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::LinComb;
    use crate::scalars::qi;
    use crate::testgen;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const ORDER: u32 = 3;

    fn inner_dgla() -> LInftyStructure {
        // sl2 tensored with one Grassmann letter, differential ad(h~e0).
        let lie = testgen::tensor_with_grassmann(&crate::lie::sl2(), &[1]);
        let mut xi = LinComb::new();
        xi.insert(5, qi(1)); // h~e0
        let d = testgen::adjoint_differential(&lie, &xi);
        LInftyStructure::from_dgla(&lie, &d, ORDER).expect("valid structure data")
    }

    fn random_homotopy(
        src: &GradedBasis,
        dst: &GradedBasis,
        m: usize,
        rng: &mut ChaCha8Rng,
    ) -> ComponentMap {
        let mut v: ComponentMap = BTreeMap::new();
        for word in canonical_exterior_words(src, m) {
            let in_degree: i64 = word.iter().map(|&g| src.degree(g)).sum();
            let mut image = BTreeMap::new();
            for t in 0..dst.len() as u32 {
                if dst.degree(t) == in_degree - m as i64 && rng.gen_bool(0.4) {
                    image.insert(
                        t,
                        HbarSeries::constant(testgen::small_rational(rng), ORDER),
                    );
                }
            }
            if !image.is_empty() {
                v.insert(word, image);
            }
        }
        v
    }

    #[test]
    fn dgla_structures_validate_and_jacobi_mutations_are_flagged() {
        let zero = LInftyStructure::new(
            vec![("a".into(), 0), ("b".into(), 1)],
            vec![BTreeMap::new(), BTreeMap::new(), BTreeMap::new()],
            ORDER,
        )
        .expect("zero structure");
        assert!(check_structure(&zero, 3).expect("scan").is_empty());

        let s = inner_dgla();
        assert!(check_structure(&s, 2).expect("scan").is_empty());
        // The structure has two component slots; widen with an empty third
        // slot so the square can be scanned on three-letter words.
        let mut with_l3 = s.clone();
        with_l3.components.push(BTreeMap::new());
        assert!(check_structure(&with_l3, 3).expect("scan").is_empty());

        // With a zero differential, breaking one bracket entry surfaces
        // exactly in the three-input, one-output slot.
        let lie = crate::lie::sl2();
        let flat = LInftyStructure::from_dgla(&lie, &vec![LinComb::new(); 3], ORDER)
            .expect("valid structure data");
        let mut broken = flat.clone();
        broken.components.push(BTreeMap::new());
        let mut image = broken.components[1].get(&vec![0, 1]).cloned().unwrap_or_default();
        image.insert(0, HbarSeries::one(ORDER)); // [e, f] picks up +e
        broken.perturb(2, vec![0, 1], image);
        let report = check_structure(&broken, 3).expect("scan");
        assert!(!report.is_empty());
        for entry in &report {
            assert_eq!(entry.input.len(), 3);
            assert_eq!(entry.output_arity, 1);
        }
    }

    #[test]
    fn random_dglas_validate_and_mutations_fail() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..5 {
            let (lie, d) = testgen::random_dgla(&mut rng);
            let mut s =
                LInftyStructure::from_dgla(&lie, &d, ORDER).expect("valid structure data");
            s.components.push(BTreeMap::new());
            assert!(check_structure(&s, 3).expect("scan").is_empty());

            let bad = testgen::jacobi_perturbation(&lie, &mut rng);
            let mut sbad =
                LInftyStructure::from_dgla(&bad, &vec![LinComb::new(); bad.dim()], ORDER)
                    .expect("structure data");
            sbad.components.push(BTreeMap::new());
            assert!(!check_structure(&sbad, 3).expect("scan").is_empty());
        }
    }

    #[test]
    fn identity_morphism_checks_and_bracket_defect_is_flagged() {
        let s = inner_dgla();
        let id = LInftyMorphism::identity(s.basis(), 3, ORDER);
        assert!(check_morphism(&id, &s, &s, 3).expect("scan").is_empty());

        // A strict map with a bracket defect: halving every generator is a
        // chain map but not a bracket map.
        let mut first: ComponentMap = BTreeMap::new();
        for g in 0..s.basis().len() as u32 {
            first.insert(
                vec![g],
                BTreeMap::from([(g, HbarSeries::constant(q(1, 2), ORDER))]),
            );
        }
        let half = LInftyMorphism::new(s.basis(), s.basis(), vec![first], ORDER)
            .expect("degree-preserving map");
        let report = check_morphism(&half, &s, &s, 2).expect("scan");
        assert!(!report.is_empty());
        for entry in &report {
            assert_eq!(entry.input.len(), 2, "defect must sit in the two-input slot");
            assert_eq!(entry.output_arity, 1);
        }
    }

    #[test]
    fn chain_homotopy_deformation_on_a_two_term_complex() {
        // d(u) = w on degrees 0 -> 1, zero bracket.
        let lie = crate::lie::LieAlgebra::new(
            vec![("u".into(), 0), ("w".into(), 1)],
            vec![],
        )
        .expect("abelian complex");
        let d = vec![LinComb::from([(1u32, qi(1))]), LinComb::new()];
        let s = LInftyStructure::from_dgla(&lie, &d, ORDER).expect("structure");
        let id = LInftyMorphism::identity(s.basis(), 2, ORDER);

        // V(w) = u is the only degree-compatible homotopy entry at m = 1.
        let mut v: ComponentMap = BTreeMap::new();
        v.insert(vec![1], BTreeMap::from([(0, HbarSeries::one(ORDER))]));
        let tilde = deform_morphism(&id, &s, &s, &v, 1).expect("deform");
        assert!(check_morphism(&tilde, &s, &s, 2).expect("scan").is_empty());
        // φ̃¹ = id + dV + Vd: on u, V(du) = V(w) = u; on w, d(V(w)) = w.
        let c1 = tilde.component(1).expect("first component");
        assert_eq!(c1[&vec![0u32]][&0].coeff(0), qi(2));
        assert_eq!(c1[&vec![1u32]][&1].coeff(0), qi(2));

        // V = 0 leaves the morphism untouched.
        let same = deform_morphism(&id, &s, &s, &BTreeMap::new(), 1).expect("deform");
        assert_eq!(same.component(1), id.component(1));
        assert_eq!(same.component(2), id.component(2));
    }

    #[test]
    fn randomized_deformations_stay_morphisms_and_keep_lower_arities() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let s = inner_dgla();
        for trial in 0..10 {
            let mut phi = LInftyMorphism::identity(s.basis(), 3, ORDER);
            let m = 1 + (trial % 2) as usize;
            let v = random_homotopy(s.basis(), s.basis(), m, &mut rng);
            let before: Vec<Option<ComponentMap>> =
                (1..=3).map(|k| phi.component(k).cloned()).collect();
            phi = deform_morphism(&phi, &s, &s, &v, m).expect("deform");
            assert!(
                check_morphism(&phi, &s, &s, 3).expect("scan").is_empty(),
                "deformed map fails the morphism residual (trial {trial})"
            );
            for k in 1..m {
                assert_eq!(
                    phi.component(k),
                    before[k - 1].as_ref(),
                    "component below the deformation arity changed"
                );
            }
            // Deform a second time at arity 2 and re-check.
            let v2 = random_homotopy(s.basis(), s.basis(), 2, &mut rng);
            let phi2 = deform_morphism(&phi, &s, &s, &v2, 2).expect("deform");
            assert!(check_morphism(&phi2, &s, &s, 3).expect("scan").is_empty());
            assert_eq!(phi2.component(1), phi.component(1));
        }
    }

    #[test]
    fn homotopy_changes_the_deformation_arity_by_the_stated_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(57);
        let s = inner_dgla();
        let phi = LInftyMorphism::identity(s.basis(), 3, ORDER);
        let v = random_homotopy(s.basis(), s.basis(), 2, &mut rng);
        let tilde = deform_morphism(&phi, &s, &s, &v, 2).expect("deform");
        // φ̃²(x) - φ²(x) = d₂(V(x)) + V(d₁-extension of x) termwise.
        for word in canonical_exterior_words(s.basis(), 2) {
            let x = SElement::from_word(&word, s.basis(), ORDER).expect("word");
            let mut expected = GradedTensor::zero(Symmetry::Exterior, 1, ORDER);
            if let Some(part) = x.part(2) {
                let vx = eval_component(&v, part, s.basis(), ORDER).expect("V");
                expected = expected.add(&s.eval(1, &vx).expect("d2"), s.basis()).expect("add");
            }
            let dx = s.apply(&x).expect("d1 extension");
            if let Some(part) = dx.part(2) {
                expected = expected
                    .add(&eval_component(&v, part, s.basis(), ORDER).expect("V"), s.basis())
                    .expect("add");
            }
            let mut got = GradedTensor::zero(Symmetry::Exterior, 1, ORDER);
            if let Some(image) = tilde.component(2).and_then(|m| m.get(&word)) {
                for (&g, c) in image {
                    got.add_term(&[g], c.clone(), s.basis()).expect("term");
                }
            }
            if let Some(image) = phi.component(2).and_then(|m| m.get(&word)) {
                for (&g, c) in image {
                    got.add_term(&[g], c.neg(), s.basis()).expect("term");
                }
            }
            assert!(got.sub(&expected, s.basis()).expect("diff").is_zero());
        }
    }

    fn hbar_element(s: &LInftyStructure, entries: &[(u32, Q)]) -> GradedTensor {
        let mut t = GradedTensor::zero(Symmetry::Exterior, 1, s.hbar_order());
        for (g, c) in entries {
            t.add_term(&[*g], HbarSeries::monomial(1, c.clone(), s.hbar_order()), s.basis())
                .expect("term");
        }
        t
    }

    #[test]
    fn mc_transport_collapses_for_strict_morphisms_and_respects_the_target() {
        let s = inner_dgla();
        // π = ħ e~e0 (degree 1): d¹π = [h~e0, e~e0] = 0, [π,π] = 0.
        let pi = hbar_element(&s, &[(1, qi(1))]);
        assert!(mc_residual(&s, &pi).expect("residual").is_zero());

        let zero = GradedTensor::zero(Symmetry::Exterior, 1, ORDER);
        let id = LInftyMorphism::identity(s.basis(), 3, ORDER);
        assert!(mc_transport(&id, &s, &zero, 2).expect("transport").is_zero());
        let out = mc_transport(&id, &s, &pi, 2).expect("transport");
        assert!(out.sub(&pi, s.basis()).expect("diff").is_zero());

        // A deformed morphism with a nonzero quadratic component still
        // produces a Maurer-Cartan element mod ħ³.
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let v = random_homotopy(s.basis(), s.basis(), 2, &mut rng);
        let phi = deform_morphism(&id, &s, &s, &v, 2).expect("deform");
        assert!(phi.component(2).map(|m| !m.is_empty()).unwrap_or(false));
        let out = mc_transport(&phi, &s, &pi, 2).expect("transport");
        let res = mc_residual(&s, &out).expect("residual");
        assert!(truncate_tensor(&res, 2).is_zero());

        // A candidate with constant term is rejected.
        let mut bad = pi.clone();
        bad.add_term(&[1], HbarSeries::one(ORDER), s.basis()).expect("term");
        assert!(mc_transport(&id, &s, &bad, 2).is_err());
    }

    #[test]
    fn gauge_action_matches_the_leading_order_and_preserves_mc() {
        let s = inner_dgla();
        let pi = hbar_element(&s, &[(1, qi(1))]); // ħ e~e0
        let zero_g = GradedTensor::zero(Symmetry::Exterior, 1, ORDER);
        let fixed = gauge_transform(&pi, &zero_g, &s, 3).expect("gauge");
        assert!(fixed.sub(&pi, s.basis()).expect("diff").is_zero());

        // g = ħ f (shifted degree -1): leading order π + ħ(d¹g + [g, π]).
        let g = hbar_element(&s, &[(2, qi(1))]);
        let out = gauge_transform(&pi, &g, &s, 3).expect("gauge");
        let mut expected = pi.clone();
        expected = expected.add(&s.eval(1, &g).expect("dg"), s.basis()).expect("add");
        expected = expected
            .add(
                &s.eval(2, &g.product(&pi, s.basis()).expect("pair")).expect("ad"),
                s.basis(),
            )
            .expect("add");
        assert!(truncate_tensor(&out.sub(&expected, s.basis()).expect("diff"), 2).is_zero());

        // The Maurer-Cartan residual stays zero mod ħ⁴ under random gauges.
        let mut rng = ChaCha8Rng::seed_from_u64(97);
        for _ in 0..5 {
            let mut g = GradedTensor::zero(Symmetry::Exterior, 1, ORDER);
            for t in 0..s.basis().len() as u32 {
                if s.basis().degree(t) == 0 && rng.gen_bool(0.5) {
                    g.add_term(
                        &[t],
                        HbarSeries::monomial(1, testgen::small_rational(&mut rng), ORDER),
                        s.basis(),
                    )
                    .expect("term");
                }
            }
            let moved = gauge_transform(&pi, &g, &s, 3).expect("gauge");
            let res = mc_residual(&s, &moved).expect("residual");
            assert!(truncate_tensor(&res, 3).is_zero());
        }
    }

    #[test]
    fn gauge_actions_compose_through_the_bch_formula() {
        let s = inner_dgla();
        let pi = hbar_element(&s, &[(1, qi(1))]);
        let g1 = hbar_element(&s, &[(2, qi(1)), (0, q(1, 2))]);
        let g2 = hbar_element(&s, &[(4, qi(1))]);
        let once = gauge_transform(&pi, &g1, &s, 3).expect("gauge");
        let twice = gauge_transform(&once, &g2, &s, 3).expect("gauge");
        // BCH(g2, g1) = g2 + g1 + ½ d^{1,1}(g2 ∨ g1) mod ħ³.
        let mut combined = g2.add(&g1, s.basis()).expect("sum");
        let cross = s
            .eval(2, &g2.product(&g1, s.basis()).expect("pair"))
            .expect("bracket")
            .scale(&q(1, 2));
        combined = combined.add(&cross, s.basis()).expect("sum");
        let direct = gauge_transform(&pi, &combined, &s, 3).expect("gauge");
        let diff = twice.sub(&direct, s.basis()).expect("diff");
        assert!(truncate_tensor(&diff, 2).is_zero(), "composition deviates from the combined gauge");
    }
}
