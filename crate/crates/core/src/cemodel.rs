//! Graded coalgebra models built from bracket/cobracket data.
//!
//! Given a finite-dimensional graded Lie algebra `h` together with a
//! compatible cobracket and an optional generator differential, this module
//! builds the free supercommutative model on the degree-shifted generators
//! (each generator of degree `d` contributes a carrier generator of degree
//! `d + 1`).  The model carries
//!
//! * the wedge product (carrier multiplication),
//! * the odd bracket of intrinsic degree `-1` extending the bracket of `h`
//!   by the graded Leibniz rule in both slots, and
//! * a total differential of degree `+1` combining the generator
//!   differential and the cobracket, extended as an odd derivation.
//!
//! The constructor [`lg_functor`] validates its input (Jacobi, cyclic
//! co-Jacobi, the cocycle compatibility between bracket and cobracket, and a
//! bounded square-zero sweep) and refuses data that does not form a
//! consistent model.  [`cofree_colie_lift`] realizes a generator inside the
//! cofree coalgebra on the underlying space as the canonical coalgebra-map
//! lift determined by the cobracket.

use std::collections::BTreeMap;

use num::Zero;

use crate::error::{Error, Result};
use crate::graded::{GradedTensor, Symmetry};
use crate::lie::{Cobracket, LieAlgebra, LinComb};
use crate::scalars::{HbarSeries, Q};
use crate::uea::{UTensor, Uea};

/// Input datum for the model: a graded Lie algebra, a cobracket tabulated on
/// generators, and a generator differential of degree `+1` (entry `g` is the
/// expansion of the image of generator `g`; an empty map means zero).
#[derive(Clone, Debug)]
pub struct LieBialgebraData {
    pub lie: LieAlgebra,
    pub cobracket: Cobracket,
    pub differential: Vec<LinComb>,
}

impl LieBialgebraData {
    /// Coboundary datum: cobracket `x -> ad_x(r)` for an arity-2 exterior
    /// tensor `r`, with zero generator differential.
    pub fn from_r_matrix(lie: &LieAlgebra, r: &GradedTensor) -> Result<Self> {
        let cobracket = lie.coboundary_cobracket(r)?;
        let differential = vec![LinComb::new(); lie.dim()];
        Ok(LieBialgebraData { lie: lie.clone(), cobracket, differential })
    }

    /// Datum with zero cobracket and the given generator differential.
    pub fn with_zero_cobracket(
        lie: &LieAlgebra,
        differential: Vec<LinComb>,
        hbar_order: u32,
    ) -> Result<Self> {
        if differential.len() != lie.dim() {
            return Err(Error::InvalidInput(format!(
                "differential table has {} entries for a {}-dimensional algebra",
                differential.len(),
                lie.dim()
            )));
        }
        let zero = GradedTensor::zero(Symmetry::Exterior, 2, hbar_order);
        let cobracket = Cobracket { values: vec![zero; lie.dim()] };
        Ok(LieBialgebraData { lie: lie.clone(), cobracket, differential })
    }
}

/// The free supercommutative model on the shifted generators, together with
/// the extended bracket and the total differential.
#[derive(Clone, Debug)]
pub struct CEModel {
    data: LieBialgebraData,
    carrier: Uea,
    hbar_order: u32,
    /// Image of each carrier generator under the total differential.
    gen_images: Vec<UTensor>,
}

/// Builds the model from the datum, validating it on the way:
///
/// * the bracket satisfies graded Jacobi,
/// * the cobracket satisfies cyclic co-Jacobi on every generator,
/// * degrees line up so the total differential is homogeneous of degree `+1`,
/// * the total differential is a derivation of the extended bracket on
///   generator pairs (this captures the cocycle compatibility and the
///   derivation property of the generator differential), and
/// * the total differential squares to zero on all monomials of word length
///   at most `word_bound`.
pub fn lg_functor(
    data: LieBialgebraData,
    word_bound: usize,
    hbar_order: u32,
) -> Result<CEModel> {
    let dim = data.lie.dim();
    if data.cobracket.values.len() != dim {
        return Err(Error::InvalidInput(format!(
            "cobracket table has {} entries for a {}-dimensional algebra",
            data.cobracket.values.len(),
            dim
        )));
    }
    if data.differential.len() != dim {
        return Err(Error::InvalidInput(format!(
            "differential table has {} entries for a {}-dimensional algebra",
            data.differential.len(),
            dim
        )));
    }
    let violations = data.lie.check_jacobi();
    if !violations.is_empty() {
        return Err(Error::Precondition(format!(
            "bracket fails graded Jacobi on {} generator triples",
            violations.len()
        )));
    }
    for g in 0..dim as u32 {
        // Homogeneity: cobracket terms keep the underlying degree, the
        // generator differential raises it by one.
        let value = &data.cobracket.values[g as usize];
        if value.kind != Symmetry::Exterior || value.arity != 2 {
            return Err(Error::InvalidInput(
                "cobracket entries must be arity-2 exterior tensors".into(),
            ));
        }
        for (w, _) in value.terms() {
            if data.lie.degree(w[0]) + data.lie.degree(w[1]) != data.lie.degree(g) {
                return Err(Error::InvalidInput(format!(
                    "cobracket of generator {} is not homogeneous of degree 0",
                    g
                )));
            }
        }
        for (&k, _) in &data.differential[g as usize] {
            if data.lie.degree(k) != data.lie.degree(g) + 1 {
                return Err(Error::InvalidInput(format!(
                    "differential of generator {} is not homogeneous of degree +1",
                    g
                )));
            }
        }
        let residual = data.lie.cojacobi_residual(&data.cobracket, g)?;
        if !residual.is_zero() {
            return Err(Error::Precondition(format!(
                "cobracket fails cyclic co-Jacobi on generator {}",
                g
            )));
        }
    }

    // Carrier: the free supercommutative algebra on the shifted generators.
    // Shifting makes every even generator odd in the carrier, so monomial
    // straightening supplies exactly the exterior-algebra signs.
    let shifted: Vec<(String, i64)> = (0..dim as u32)
        .map(|g| (data.lie.basis().name(g).to_string(), data.lie.degree(g) + 1))
        .collect();
    let shifted_lie = LieAlgebra::new(shifted, vec![])?;
    let carrier = Uea::new(shifted_lie, word_bound + 3, 4);

    let mut gen_images = Vec::with_capacity(dim);
    for g in 0..dim as u32 {
        let mut image = UTensor::zero(1, hbar_order);
        for (&k, c) in &data.differential[g as usize] {
            image.add_canonical_term(vec![vec![k]], HbarSeries::constant(c.clone(), hbar_order));
        }
        for (w, c) in data.cobracket.values[g as usize].terms() {
            // Exterior canonical words coincide with carrier-canonical
            // monomials, including the sign and repetition conventions.
            image = image.add(&carrier.word_tensor(w, c.truncated(hbar_order))?);
        }
        gen_images.push(image);
    }

    let model = CEModel { data, carrier, hbar_order, gen_images };

    // Cocycle compatibility: the total differential is a bracket derivation.
    for i in 0..dim as u32 {
        for j in 0..dim as u32 {
            let a = model.monomial(&[i])?;
            let b = model.monomial(&[j])?;
            let lhs = model.diff(&model.bracket(&a, &b)?)?;
            let mut rhs = model.bracket(&model.diff(&a)?, &b)?;
            let mut cross = model.bracket(&a, &model.diff(&b)?)?;
            if (model.carrier_degree_gen(i) - 1) % 2 != 0 {
                cross = cross.neg();
            }
            rhs = rhs.add(&cross);
            if !lhs.sub(&rhs).is_zero() {
                return Err(Error::Precondition(format!(
                    "differential is not a bracket derivation on generators ({}, {})",
                    i, j
                )));
            }
        }
    }

    // Bounded square-zero sweep over all canonical monomials.
    for word in model.canonical_words(word_bound) {
        let m = model.monomial(&word)?;
        let dd = model.diff(&model.diff(&m)?)?;
        if !dd.is_zero() {
            return Err(Error::Precondition(format!(
                "total differential does not square to zero on monomial {:?}",
                word
            )));
        }
    }

    Ok(model)
}

impl CEModel {
    pub fn carrier(&self) -> &Uea {
        &self.carrier
    }

    pub fn data(&self) -> &LieBialgebraData {
        &self.data
    }

    pub fn hbar_order(&self) -> u32 {
        self.hbar_order
    }

    /// Unit of the carrier algebra (the empty monomial).
    pub fn one(&self) -> UTensor {
        UTensor::one(1, self.hbar_order)
    }

    /// Carrier element for a raw generator word (straightened as needed).
    pub fn monomial(&self, word: &[u32]) -> Result<UTensor> {
        self.carrier.word_tensor(word, HbarSeries::one(self.hbar_order))
    }

    /// Wedge product of two carrier elements.
    pub fn wedge(&self, a: &UTensor, b: &UTensor) -> Result<UTensor> {
        self.carrier.mul(a, b)
    }

    fn carrier_degree_gen(&self, g: u32) -> i64 {
        self.carrier.lie().degree(g)
    }

    fn carrier_degree_word(&self, w: &[u32]) -> i64 {
        w.iter().map(|&g| self.carrier_degree_gen(g)).sum()
    }

    /// Carrier degree of a monomial word (sum of shifted generator degrees).
    pub fn word_degree(&self, w: &[u32]) -> i64 {
        self.carrier_degree_word(w)
    }

    /// The odd bracket of intrinsic degree `-1` extending the generator
    /// bracket by the graded Leibniz rule in both slots:
    ///
    /// `[a, y w] = [a, y] w + (-1)^{(|a|-1)|y|} y [a, w]` and
    /// `[x u, b] = x [u, b] + (-1)^{(|b|-1)|u|} [x, b] u`
    ///
    /// with all degrees taken in the carrier.
    pub fn bracket(&self, a: &UTensor, b: &UTensor) -> Result<UTensor> {
        let mut out = UTensor::zero(1, self.hbar_order);
        for (wa, ca) in a.terms() {
            for (wb, cb) in b.terms() {
                let t = self.bracket_words(&wa[0], &wb[0])?;
                out = out.add(&t.scale_series(&ca.mul(cb)));
            }
        }
        Ok(out)
    }

    fn bracket_words(&self, wa: &[u32], wb: &[u32]) -> Result<UTensor> {
        if wa.is_empty() || wb.is_empty() {
            return Ok(UTensor::zero(1, self.hbar_order));
        }
        if wa.len() == 1 && wb.len() == 1 {
            let mut out = UTensor::zero(1, self.hbar_order);
            for (k, c) in self.data.lie.bracket_gens(wa[0], wb[0]) {
                out.add_canonical_term(vec![vec![k]], HbarSeries::constant(c, self.hbar_order));
            }
            return Ok(out);
        }
        if wa.len() == 1 {
            let y = wb[0];
            let rest = &wb[1..];
            let t1 = self.carrier.mul(&self.bracket_words(wa, &[y])?, &self.monomial(rest)?)?;
            let mut t2 =
                self.carrier.mul(&self.monomial(&[y])?, &self.bracket_words(wa, rest)?)?;
            let da = self.carrier_degree_word(wa);
            if ((da - 1) * self.carrier_degree_gen(y)) % 2 != 0 {
                t2 = t2.neg();
            }
            return Ok(t1.add(&t2));
        }
        let x = wa[0];
        let u = &wa[1..];
        let t1 = self.carrier.mul(&self.monomial(&[x])?, &self.bracket_words(u, wb)?)?;
        let mut t2 = self.carrier.mul(&self.bracket_words(&[x], wb)?, &self.monomial(u)?)?;
        let dc = self.carrier_degree_word(wb);
        if ((dc - 1) * self.carrier_degree_word(u)) % 2 != 0 {
            t2 = t2.neg();
        }
        Ok(t1.add(&t2))
    }

    /// The total differential (generator differential plus cobracket),
    /// extended to monomials as an odd derivation with prefix Koszul signs.
    pub fn diff(&self, a: &UTensor) -> Result<UTensor> {
        let mut out = UTensor::zero(1, self.hbar_order);
        for (word, c) in a.terms() {
            let w = &word[0];
            let mut prefix_parity = 0i64;
            for i in 0..w.len() {
                let g = w[i];
                let prefix = self.monomial(&w[..i])?;
                let suffix = self.monomial(&w[i + 1..])?;
                let inner = self.carrier.mul(&prefix, &self.gen_images[g as usize])?;
                let mut t = self.carrier.mul(&inner, &suffix)?;
                if prefix_parity % 2 != 0 {
                    t = t.neg();
                }
                out = out.add(&t.scale_series(c));
                prefix_parity += self.carrier_degree_gen(g);
            }
        }
        Ok(out)
    }

    /// All canonical monomial words of length `1..=bound` (weakly increasing,
    /// generators of odd carrier degree never repeated).
    pub fn canonical_words(&self, bound: usize) -> Vec<Vec<u32>> {
        let mut out = Vec::new();
        let dim = self.carrier.lie().dim() as u32;
        let mut stack: Vec<Vec<u32>> = (0..dim).map(|g| vec![g]).collect();
        while let Some(w) = stack.pop() {
            if w.len() < bound {
                let last = *w.last().expect("nonempty by construction");
                for g in last..dim {
                    if g == last && self.carrier_degree_gen(g) % 2 != 0 {
                        continue;
                    }
                    let mut next = w.clone();
                    next.push(g);
                    stack.push(next);
                }
            }
            out.push(w);
        }
        out.sort();
        out
    }
}

/// A degree-preserving algebra map between two models, given by the images
/// of the source generators expanded in the target generators.
#[derive(Clone, Debug)]
pub struct CeAlgebraMap {
    pub images: Vec<LinComb>,
}

impl CeAlgebraMap {
    pub fn new(src: &CEModel, dst: &CEModel, images: Vec<LinComb>) -> Result<Self> {
        if images.len() != src.data.lie.dim() {
            return Err(Error::InvalidInput(format!(
                "map table has {} entries for a {}-dimensional source",
                images.len(),
                src.data.lie.dim()
            )));
        }
        for (g, image) in images.iter().enumerate() {
            for (&k, _) in image {
                if k >= dst.data.lie.dim() as u32 {
                    return Err(Error::InvalidInput(format!(
                        "image of generator {} uses out-of-range generator {}",
                        g, k
                    )));
                }
                if dst.data.lie.degree(k) != src.data.lie.degree(g as u32) {
                    return Err(Error::InvalidInput(format!(
                        "image of generator {} is not degree-preserving",
                        g
                    )));
                }
            }
        }
        Ok(CeAlgebraMap { images })
    }

    /// Multiplicative extension to the carrier: a monomial maps to the
    /// ordered product of its generator images.
    pub fn apply(&self, dst: &CEModel, a: &UTensor) -> Result<UTensor> {
        let mut out = UTensor::zero(1, dst.hbar_order);
        for (word, c) in a.terms() {
            let mut acc = dst.one();
            for &g in &word[0] {
                let mut image = UTensor::zero(1, dst.hbar_order);
                for (&k, q) in &self.images[g as usize] {
                    image.add_canonical_term(
                        vec![vec![k]],
                        HbarSeries::constant(q.clone(), dst.hbar_order),
                    );
                }
                acc = dst.carrier.mul(&acc, &image)?;
            }
            out = out.add(&acc.scale_series(c));
        }
        Ok(out)
    }
}

/// Rank of a rational matrix by Gaussian elimination.
pub fn matrix_rank(mut rows: Vec<Vec<Q>>) -> usize {
    let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
    let mut rank = 0;
    for col in 0..ncols {
        let Some(pivot) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, pivot);
        let inv = rows[rank][col].recip();
        for entry in rows[rank].iter_mut() {
            *entry = &*entry * &inv;
        }
        for r in 0..rows.len() {
            if r != rank && !rows[r][col].is_zero() {
                let factor = rows[r][col].clone();
                for c2 in col..ncols {
                    let delta = &factor * &rows[rank][c2];
                    rows[r][c2] = &rows[r][c2] - &delta;
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

/// Dimensions of the cohomology of the model in carrier degrees
/// `0..=max_degree`, computed from the full monomial basis of each degree
/// slice.  Requires every underlying generator to have nonnegative degree so
/// the slices are finite-dimensional.
pub fn homology_ranks(model: &CEModel, max_degree: i64) -> Result<Vec<(i64, usize)>> {
    let dim = model.data.lie.dim() as u32;
    for g in 0..dim {
        if model.data.lie.degree(g) < 0 {
            return Err(Error::Precondition(
                "cohomology slices need nonnegative generator degrees".into(),
            ));
        }
    }
    // Every carrier generator has degree >= 1, so words of length above
    // max_degree + 1 cannot land in the slices we need.
    let mut slices: BTreeMap<i64, Vec<Vec<u32>>> = BTreeMap::new();
    slices.entry(0).or_default().push(Vec::new());
    for w in model.canonical_words((max_degree + 1).max(0) as usize) {
        let d = model.word_degree(&w);
        if d <= max_degree + 1 {
            slices.entry(d).or_default().push(w);
        }
    }
    let index_of = |slice: &[Vec<u32>], w: &[u32]| slice.iter().position(|v| v == w);
    let mut boundary_rank: BTreeMap<i64, usize> = BTreeMap::new();
    for (&deg, words) in &slices {
        if deg > max_degree {
            continue;
        }
        let target: &[Vec<u32>] = slices.get(&(deg + 1)).map(|v| v.as_slice()).unwrap_or(&[]);
        let mut rows = Vec::new();
        for w in words {
            let image = model.diff(&model.monomial(w)?)?;
            let mut row = vec![Q::zero(); target.len()];
            for (word, c) in image.terms() {
                let Some(idx) = index_of(target, &word[0]) else {
                    return Err(Error::Precondition(
                        "differential image escapes the enumerated slice".into(),
                    ));
                };
                row[idx] = c.coeff(0);
            }
            rows.push(row);
        }
        boundary_rank.insert(deg, matrix_rank(rows));
    }
    let mut out = Vec::new();
    for n in 0..=max_degree {
        let dim_n = slices.get(&n).map(|v| v.len()).unwrap_or(0);
        let out_rank = boundary_rank.get(&n).copied().unwrap_or(0);
        let in_rank = boundary_rank.get(&(n - 1)).copied().unwrap_or(0);
        out.push((n, dim_n - out_rank - in_rank));
    }
    Ok(out)
}

/// Canonical coalgebra-map lift of a generator into the cofree coalgebra on
/// the underlying space, determined by the cobracket: the arity-`k`
/// component is the `k`-fold iterated cobracket with the normalization that
/// makes deconcatenation-antisymmetrization reproduce the cobracket on every
/// pair of legs.  Supported up to arity 3; larger bounds report truncation.
pub fn cofree_colie_lift(
    lie: &LieAlgebra,
    delta: &Cobracket,
    x: u32,
    k_max: usize,
    hbar_order: u32,
) -> Result<Vec<GradedTensor>> {
    if k_max == 0 {
        return Err(Error::InvalidInput("lift needs at least one component".into()));
    }
    if k_max > 3 {
        return Err(Error::ArityOverflow {
            arity: k_max,
            bound: 3,
            context: "cofree coalgebra lift".into(),
        });
    }
    if delta.values.len() != lie.dim() {
        return Err(Error::InvalidInput(format!(
            "cobracket table has {} entries for a {}-dimensional algebra",
            delta.values.len(),
            lie.dim()
        )));
    }
    if x >= lie.dim() as u32 {
        return Err(Error::InvalidInput(format!("generator {} out of range", x)));
    }
    let hat = |g: u32| -> Result<GradedTensor> { lie.alt_embed(&delta.values[g as usize]) };
    let mut components = Vec::with_capacity(k_max);
    let mut l1 = GradedTensor::zero(Symmetry::Free, 1, hbar_order);
    l1.add_term(&[x], HbarSeries::one(hbar_order), lie.basis())?;
    components.push(l1);
    if k_max >= 2 {
        let l2 = hat(x)?.scale(&crate::scalars::q(1, 2));
        components.push(l2);
    }
    if k_max >= 3 {
        // (hat @ 1 + 1 @ hat) applied to hat(x); the cobracket has degree 0,
        // so no Koszul signs appear when it passes a leg.
        let hx = hat(x)?;
        let mut l3 = GradedTensor::zero(Symmetry::Free, 3, hbar_order);
        for (w, c) in hx.terms() {
            for (inner, cc) in hat(w[0])?.terms() {
                l3.add_term(&[inner[0], inner[1], w[1]], c.mul(cc), lie.basis())?;
            }
            for (inner, cc) in hat(w[1])?.terms() {
                l3.add_term(&[w[0], inner[0], inner[1]], c.mul(cc), lie.basis())?;
            }
        }
        components.push(l3.scale(&crate::scalars::q(1, 6)));
    }
    Ok(components)
}

/// Deconcatenation-antisymmetrization residual of a lift: for each leg split
/// `(a, b)` with `a + b <= k`, the difference between
///
/// * splitting the arity-`(a+b)` component after leg `a` minus the Koszul
///   flip of splitting after leg `b`, and
/// * the pairwise lift of the cobracket legs, `sum L_a(u) (x) L_b(v)` over
///   the expansion of the cobracket of `x`,
///
/// stored as a free tensor of arity `a + b`.  A coalgebra-map lift makes
/// every residual vanish.
pub fn cofree_lift_residual(
    lie: &LieAlgebra,
    delta: &Cobracket,
    x: u32,
    a: usize,
    b: usize,
    hbar_order: u32,
) -> Result<GradedTensor> {
    let k = a + b;
    if a == 0 || b == 0 || k > 3 {
        return Err(Error::InvalidInput(
            "residual legs must be positive with total arity at most 3".into(),
        ));
    }
    let components = cofree_colie_lift(lie, delta, x, k, hbar_order)?;
    let mut out = GradedTensor::zero(Symmetry::Free, k, hbar_order);
    // Deconcatenation side, from the arity-k component.
    for (w, c) in components[k - 1].terms() {
        out.add_term(w, c.clone(), lie.basis())?;
        // Koszul flip of the split after leg b (un-shifted degrees).
        let pre = &w[..b];
        let suf = &w[b..];
        let dp: i64 = pre.iter().map(|&g| lie.degree(g)).sum();
        let ds: i64 = suf.iter().map(|&g| lie.degree(g)).sum();
        let mut word: Vec<u32> = suf.to_vec();
        word.extend_from_slice(pre);
        let mut cc = c.neg();
        if (dp * ds) % 2 != 0 {
            cc = cc.neg();
        }
        out.add_term(&word, cc, lie.basis())?;
    }
    // Pairwise-lift side.
    let hx = lie.alt_embed(&delta.values[x as usize])?;
    for (w, c) in hx.terms() {
        let left = cofree_colie_lift(lie, delta, w[0], a, hbar_order)?;
        let right = cofree_colie_lift(lie, delta, w[1], b, hbar_order)?;
        for (wl, cl) in left[a - 1].terms() {
            for (wr, cr) in right[b - 1].terms() {
                let mut word: Vec<u32> = wl.clone();
                word.extend_from_slice(wr);
                out.add_term(&word, c.mul(cl).mul(cr).neg(), lie.basis())?;
            }
        }
    }
    Ok(out)
}
