//! Parameter-dependent antisymmetric two-tensors over a Lie algebra with a
//! distinguished abelian subalgebra, and the residual of the modified
//! dynamical Yang-Baxter equation
//!
//! `-alt_d(rho) + cyb(rho) = Z`,
//!
//! where `cyb(rho) = [rho^{12},rho^{13}] + [rho^{12},rho^{23}] +
//! [rho^{13},rho^{23}]` and `alt_d(rho) = sum_i h_i^1 d rho^{23}/d l_i -
//! sum_i h_i^2 d rho^{13}/d l_i + sum_i h_i^3 d rho^{12}/d l_i`.
//!
//! Everything is classical (all generators in degree zero) with exact
//! rational-function coefficients in the dual coordinates `l_1..l_k` of the
//! chosen subalgebra basis.  Equivariance is checked by the weight method,
//! which requires the subalgebra action to be diagonal on the chosen basis;
//! a reductive complement is implied by that diagonality and validated.
//!
//! Orientation matters: the rational datum `(1/l) e^f` solves the equation
//! with a constant right-hand side exactly when `[e, f] = -h` for the chosen
//! Cartan vector `h` (the lowering-first orientation); with `[e, f] = +h`
//! the same datum leaves the obstruction `2/l^2`.  Both facts are pinned by
//! regression tests.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graded::GradedTensor;
use crate::lie::LieAlgebra;
use crate::ratfn::RationalFn;
use crate::scalars::{q, Q};
use crate::uea::{Monomial, UTensor};
use num::Zero;

/// Antisymmetric rational-coefficient two-tensor over a Lie algebra,
/// together with the abelian subalgebra whose dual coordinates the
/// coefficients depend on.
#[derive(Clone, Debug)]
pub struct DynamicalRMatrix {
    lie: LieAlgebra,
    cartan: Vec<u32>,
    entries: BTreeMap<(u32, u32), RationalFn>,
    /// weights[g][k] = eigenvalue of the k-th subalgebra generator on g.
    weights: Vec<Vec<Q>>,
}

impl DynamicalRMatrix {
    pub fn new(
        lie: LieAlgebra,
        cartan: Vec<u32>,
        entries: Vec<((u32, u32), RationalFn)>,
    ) -> Result<Self> {
        let dim = lie.dim() as u32;
        for g in 0..dim {
            if lie.degree(g) != 0 {
                return Err(Error::InvalidInput(
                    "parameter-dependent two-tensors are classical: all generators must sit in degree zero"
                        .into(),
                ));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for &h in &cartan {
            if h >= dim {
                return Err(Error::InvalidInput(format!("subalgebra index {} out of range", h)));
            }
            if !seen.insert(h) {
                return Err(Error::InvalidInput("repeated subalgebra basis index".into()));
            }
        }
        for &a in &cartan {
            for &b in &cartan {
                if !lie.bracket_gens(a, b).is_empty() {
                    return Err(Error::Unsupported(
                        "the distinguished subalgebra must be abelian".into(),
                    ));
                }
            }
        }
        // Weight method: each subalgebra generator must act diagonally on
        // the chosen basis.  This also certifies the reductive splitting,
        // since eigenvectors outside the subalgebra stay outside it.
        let mut weights = vec![vec![Q::zero(); cartan.len()]; lie.dim()];
        for (k, &h) in cartan.iter().enumerate() {
            for g in 0..dim {
                let b = lie.bracket_gens(h, g);
                for (&target, c) in &b {
                    if target != g && !c.is_zero() {
                        return Err(Error::Unsupported(format!(
                            "the subalgebra action is not diagonal on the chosen basis: [{}, {}] hits {}",
                            lie.basis().name(h),
                            lie.basis().name(g),
                            lie.basis().name(target)
                        )));
                    }
                }
                if let Some(c) = b.get(&g) {
                    weights[g as usize][k] = c.clone();
                }
            }
        }
        let nvars = cartan.len();
        let mut map = BTreeMap::new();
        for ((i, j), c) in entries {
            if i >= j {
                return Err(Error::InvalidInput(
                    "two-tensor entries are keyed by strictly increasing generator pairs".into(),
                ));
            }
            if j >= dim {
                return Err(Error::InvalidInput(format!("generator index {} out of range", j)));
            }
            if c.nvars() != nvars {
                return Err(Error::InvalidInput(format!(
                    "coefficient with {} variables for a {}-coordinate subalgebra",
                    c.nvars(),
                    nvars
                )));
            }
            if c.is_zero() {
                continue;
            }
            let prev = map.insert((i, j), c);
            if prev.is_some() {
                return Err(Error::InvalidInput("duplicate two-tensor entry".into()));
            }
        }
        Ok(DynamicalRMatrix { lie, cartan, entries: map, weights })
    }

    pub fn lie(&self) -> &LieAlgebra {
        &self.lie
    }

    pub fn cartan(&self) -> &[u32] {
        &self.cartan
    }

    pub fn nvars(&self) -> usize {
        self.cartan.len()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(u32, u32), &RationalFn)> {
        self.entries.iter()
    }

    /// Eigenvalue of the k-th subalgebra generator on generator `g`.
    pub fn weight(&self, g: u32, k: usize) -> &Q {
        &self.weights[g as usize][k]
    }

    /// The full antisymmetric coefficient matrix, both orders of each pair.
    fn matrix(&self) -> BTreeMap<(u32, u32), RationalFn> {
        let mut m = BTreeMap::new();
        for (&(i, j), c) in &self.entries {
            m.insert((i, j), c.clone());
            m.insert((j, i), c.neg());
        }
        m
    }
}

/// Defect of the weight-zero condition: entry pair, subalgebra slot, and
/// the offending total weight.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightDefect {
    pub pair: (u32, u32),
    pub cartan_slot: usize,
    pub weight: Q,
}

/// Equivariance residual by the weight method: for an abelian subalgebra
/// acting diagonally, equivariance of the map is exactly weight-zero of
/// every nonzero coefficient.  Empty report = equivariant.
pub fn h_equivariance_residual(rho: &DynamicalRMatrix) -> Vec<WeightDefect> {
    let mut out = Vec::new();
    for (&(i, j), _) in &rho.entries {
        for k in 0..rho.cartan.len() {
            let w = rho.weight(i, k).clone() + rho.weight(j, k).clone();
            if !w.is_zero() {
                out.push(WeightDefect { pair: (i, j), cartan_slot: k, weight: w });
            }
        }
    }
    out
}

/// Totally antisymmetric three-tensor with rational-function coefficients,
/// stored on strictly increasing index triples.
#[derive(Clone, Debug, PartialEq)]
pub struct TriRational {
    nvars: usize,
    entries: BTreeMap<[u32; 3], RationalFn>,
}

impl TriRational {
    pub fn zero(nvars: usize) -> Self {
        TriRational { nvars, entries: BTreeMap::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&[u32; 3], &RationalFn)> {
        self.entries.iter()
    }

    pub fn get(&self, key: [u32; 3]) -> RationalFn {
        self.entries.get(&key).cloned().unwrap_or_else(|| RationalFn::zero(self.nvars))
    }

    /// Adds a raw word: sorts the indices, tracks the permutation parity,
    /// and drops words with repeated indices.
    pub fn add_term(&mut self, word: [u32; 3], c: RationalFn) {
        if word[0] == word[1] || word[0] == word[2] || word[1] == word[2] {
            return;
        }
        if c.is_zero() {
            return;
        }
        let mut sorted = word;
        let mut sign = 1i32;
        for i in 0..2 {
            for j in 0..2 - i {
                if sorted[j] > sorted[j + 1] {
                    sorted.swap(j, j + 1);
                    sign = -sign;
                }
            }
        }
        let signed = if sign < 0 { c.neg() } else { c };
        let entry = self
            .entries
            .entry(sorted)
            .or_insert_with(|| RationalFn::zero(self.nvars));
        *entry = entry.add(&signed);
        if entry.is_zero() {
            self.entries.remove(&sorted);
        }
    }

    pub fn add(&self, other: &TriRational) -> TriRational {
        let mut out = self.clone();
        for (&w, c) in &other.entries {
            out.add_term(w, c.clone());
        }
        out
    }

    pub fn neg(&self) -> TriRational {
        TriRational {
            nvars: self.nvars,
            entries: self.entries.iter().map(|(&w, c)| (w, c.neg())).collect(),
        }
    }

    pub fn sub(&self, other: &TriRational) -> TriRational {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Q) -> TriRational {
        if c.is_zero() {
            return TriRational::zero(self.nvars);
        }
        TriRational {
            nvars: self.nvars,
            entries: self.entries.iter().map(|(&w, f)| (w, f.scale(c))).collect(),
        }
    }
}

/// The three-slot bracket expansion
/// `[rho^{12},rho^{13}] + [rho^{12},rho^{23}] + [rho^{13},rho^{23}]`,
/// collected into antisymmetric coordinates.
///
/// The raw expansion over the full antisymmetric coefficient matrix lands
/// every coordinate on all six slot orders; since the result of the
/// expansion is totally antisymmetric, the signed collection at the sorted
/// key is six times the wedge-basis coefficient, so we divide once at the
/// end.  The half-Schouten oracle in the tests cross-checks this reading.
pub fn cyb(rho: &DynamicalRMatrix) -> TriRational {
    let m = rho.matrix();
    let mut out = TriRational::zero(rho.nvars());
    for (&(a, b), cab) in &m {
        for (&(c, d), ccd) in &m {
            let coeff = cab.mul(ccd);
            if coeff.is_zero() {
                continue;
            }
            for (g, k) in rho.lie.bracket_gens(a, c) {
                out.add_term([g, b, d], coeff.scale(&k));
            }
            for (g, k) in rho.lie.bracket_gens(b, c) {
                out.add_term([a, g, d], coeff.scale(&k));
            }
            for (g, k) in rho.lie.bracket_gens(b, d) {
                out.add_term([a, c, g], coeff.scale(&k));
            }
        }
    }
    out.scale(&q(1, 6))
}

/// The alternating derivative
/// `sum_i h_i^1 d rho^{23}/d l_i - sum_i h_i^2 d rho^{13}/d l_i +
/// sum_i h_i^3 d rho^{12}/d l_i`.
///
/// The three signed slot placements alternate each subalgebra vector
/// against the derivative of the antisymmetric two-tensor, so in
/// wedge-basis coordinates the result is `sum_i h_i ^ d rho / d l_i`:
/// one signed-sorted entry per coefficient derivative.
pub fn alt_d(rho: &DynamicalRMatrix) -> TriRational {
    let mut out = TriRational::zero(rho.nvars());
    for (k, &h) in rho.cartan.iter().enumerate() {
        for (&(i, j), c) in &rho.entries {
            let d = c.derivative(k);
            if d.is_zero() {
                continue;
            }
            out.add_term([h, i, j], d);
        }
    }
    out
}

/// Reads a constant antisymmetric three-tensor into rational coordinates.
/// The input must have constant coefficient series (no formal-parameter
/// dependence).
fn constant_tri(z: &GradedTensor, lie: &LieAlgebra, nvars: usize) -> Result<TriRational> {
    if z.arity != 3 {
        return Err(Error::InvalidInput("right-hand side must have three slots".into()));
    }
    let mut out = TriRational::zero(nvars);
    for (w, c) in z.terms() {
        for (pow, k) in c.terms() {
            if pow > 0 && !k.is_zero() {
                return Err(Error::InvalidInput(
                    "right-hand side must be constant in the formal parameter".into(),
                ));
            }
        }
        let c0 = c.coeff(0);
        if c0.is_zero() {
            continue;
        }
        let _ = lie; // basis validity was checked when z was built
        out.add_term([w[0], w[1], w[2]], RationalFn::constant(c0, nvars));
    }
    Ok(out)
}

/// Residual `-alt_d(rho) + cyb(rho) - Z` of the modified dynamical
/// Yang-Baxter equation.  `Z` must be an invariant constant three-tensor.
pub fn cdybe_residual(rho: &DynamicalRMatrix, z: &GradedTensor) -> Result<TriRational> {
    for g in 0..rho.lie.dim() as u32 {
        if !rho.lie.adjoint_action(g, z)?.is_zero() {
            return Err(Error::Precondition(format!(
                "right-hand side is not invariant: the action of {} moves it",
                rho.lie.basis().name(g)
            )));
        }
    }
    let zt = constant_tri(z, &rho.lie, rho.nvars())?;
    Ok(cyb(rho).sub(&alt_d(rho)).sub(&zt))
}

/// Full slot alternation of a three-slot tensor over single-generator
/// words: the signed sum over all six slot permutations, with no averaging
/// factor.  Defined for classical (degree-zero) carriers, where slot
/// transpositions carry no Koszul signs.
pub fn alt3(t: &UTensor) -> Result<UTensor> {
    const PERMS: [([usize; 3], i64); 6] = [
        ([0, 1, 2], 1),
        ([1, 2, 0], 1),
        ([2, 0, 1], 1),
        ([1, 0, 2], -1),
        ([0, 2, 1], -1),
        ([2, 1, 0], -1),
    ];
    let mut out = UTensor::zero(3, t.hbar_order);
    for (w, c) in t.terms() {
        if w.len() != 3 {
            return Err(Error::InvalidInput("slot alternation expects three slots".into()));
        }
        for (p, s) in PERMS {
            let word: Vec<Monomial> = p.iter().map(|&i| w[i].clone()).collect();
            let coeff = if s < 0 { c.neg() } else { c.clone() };
            out.add_canonical_term(word, coeff);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{sl2, LieAlgebra};
    use crate::ratfn::{Poly, RationalFn};
    use crate::scalars::{q, qi, HbarSeries};
    use crate::uea::Uea;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// sl2 presented with the orientation `[e, f] = -h`, `[h, e] = -2e`,
    /// `[h, f] = 2f` (swap of the raising/lowering names relative to the
    /// other presentation).  Under this orientation the rational datum
    /// below solves the equation with a constant right-hand side.
    fn sl2_lowering_first() -> LieAlgebra {
        LieAlgebra::new(
            vec![("e".into(), 0), ("f".into(), 0), ("h".into(), 0)],
            vec![
                (0, 1, vec![(2, qi(-1))]),
                (0, 2, vec![(0, qi(2))]),
                (1, 2, vec![(1, qi(-2))]),
            ],
        )
        .expect("valid structure constants")
    }

    fn inv_lambda() -> RationalFn {
        RationalFn::new(Poly::one(1), Poly::var(0, 1)).expect("nonzero denominator")
    }

    /// The rational datum rho(l) = (1/l) e^f over the lowering-first
    /// presentation, with the Cartan line as base.
    fn rational_datum() -> DynamicalRMatrix {
        DynamicalRMatrix::new(sl2_lowering_first(), vec![2], vec![((0, 1), inv_lambda())])
            .expect("valid descriptor")
    }

    fn constant_entry(c: Q, nvars: usize) -> RationalFn {
        RationalFn::constant(c, nvars)
    }

    #[test]
    fn descriptor_gates_reject_bad_data() {
        // Non-abelian base.
        let err = DynamicalRMatrix::new(sl2(), vec![0, 1], vec![]);
        assert!(matches!(err, Err(crate::error::Error::Unsupported(_))));
        // Non-diagonal action: in the algebra with [h, x] = y the basis is
        // not a weight basis.
        let skew = LieAlgebra::new(
            vec![("h".into(), 0), ("x".into(), 0), ("y".into(), 0)],
            vec![(0, 1, vec![(2, qi(1))])],
        )
        .expect("valid structure constants");
        let err = DynamicalRMatrix::new(skew, vec![0], vec![]);
        assert!(matches!(err, Err(crate::error::Error::Unsupported(_))));
        // Graded algebras are rejected.
        let graded = LieAlgebra::new(vec![("a".into(), 1)], vec![]).expect("valid");
        assert!(DynamicalRMatrix::new(graded, vec![0], vec![]).is_err());
        // Pair order and range.
        assert!(DynamicalRMatrix::new(
            sl2_lowering_first(),
            vec![2],
            vec![((1, 0), inv_lambda())]
        )
        .is_err());
    }

    #[test]
    fn equivariance_is_weight_bookkeeping() {
        assert!(h_equivariance_residual(&rational_datum()).is_empty());
        // (1/l) e^h has weight -2 under h.
        let bad = DynamicalRMatrix::new(
            sl2_lowering_first(),
            vec![2],
            vec![((0, 2), inv_lambda())],
        )
        .expect("valid descriptor");
        let report = h_equivariance_residual(&bad);
        assert_eq!(report.len(), 1);
        assert_eq!(report[0].pair, (0, 2));
        assert_eq!(report[0].weight, qi(-2));
        // Constant invariant entry: empty.
        let c = DynamicalRMatrix::new(
            sl2_lowering_first(),
            vec![2],
            vec![((0, 1), constant_entry(qi(3), 1))],
        )
        .expect("valid descriptor");
        assert!(h_equivariance_residual(&c).is_empty());
    }

    #[test]
    fn empty_input_gives_zero_brackets_and_derivatives() {
        let zero = DynamicalRMatrix::new(sl2_lowering_first(), vec![2], vec![])
            .expect("valid descriptor");
        assert!(cyb(&zero).is_zero());
        assert!(alt_d(&zero).is_zero());
        // Constant data has zero alternating derivative.
        let c = DynamicalRMatrix::new(
            sl2(),
            vec![2],
            vec![((0, 1), constant_entry(qi(5), 1))],
        )
        .expect("valid descriptor");
        assert!(alt_d(&c).is_zero());
    }

    /// Oracle: for constant data the three-slot expansion equals half the
    /// algebraic Schouten square, coefficient by coefficient.
    fn assert_cyb_halves_schouten(lie: &LieAlgebra, cartan: Vec<u32>, pairs: Vec<((u32, u32), Q)>) {
        let entries: Vec<((u32, u32), RationalFn)> = pairs
            .iter()
            .map(|((i, j), c)| ((*i, *j), constant_entry(c.clone(), cartan.len())))
            .collect();
        let nvars = cartan.len();
        let rho = DynamicalRMatrix::new(lie.clone(), cartan, entries).expect("valid descriptor");
        let got = cyb(&rho);
        let mut wedge = lie.tensor(2, 1);
        for ((i, j), c) in &pairs {
            wedge.add_term(&[*i, *j], HbarSeries::constant(c.clone(), 1), lie.basis())
                .expect("distinct indices");
        }
        let sq = lie.schouten_algebraic(&wedge, &wedge).expect("same algebra");
        let mut expected = TriRational::zero(nvars);
        for (w, c) in sq.terms() {
            expected.add_term(
                [w[0], w[1], w[2]],
                RationalFn::constant(c.coeff(0), nvars).scale(&q(1, 2)),
            );
        }
        assert_eq!(got, expected);
    }

    #[test]
    fn constant_cyb_is_half_the_schouten_square() {
        // Both orientations and a random solvable algebra.
        assert_cyb_halves_schouten(&sl2(), vec![2], vec![((0, 1), qi(1))]);
        assert_cyb_halves_schouten(&sl2_lowering_first(), vec![2], vec![((0, 1), qi(1))]);
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..5 {
            let lie = crate::testgen::solvable4(&mut rng);
            let mut pairs: Vec<((u32, u32), Q)> = Vec::new();
            for i in 0..4u32 {
                for j in (i + 1)..4u32 {
                    if rng.gen_bool(0.5) {
                        pairs.push(((i, j), crate::testgen::small_rational(&mut rng)));
                    }
                }
            }
            assert_cyb_halves_schouten(&lie, vec![0], pairs);
        }
    }

    #[test]
    fn alternating_derivative_matches_the_hand_value_and_is_linear() {
        // alt_d((1/l) e^f) = -(1/l^2) * (alternation of h against e^f):
        // in sorted coordinates the (e,f,h) entry is d/dl (1/l) = -1/l^2.
        let rho = rational_datum();
        let d = alt_d(&rho);
        let expected = RationalFn::new(
            Poly::constant(qi(-1), 1),
            Poly::from_terms(vec![(vec![2], qi(1))], 1).unwrap(),
        )
        .unwrap();
        assert_eq!(d.get([0, 1, 2]), expected);
        assert_eq!(d.entries().count(), 1);

        // Linearity over random rational entries.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..10 {
            let c1 = random_univariate(&mut rng);
            let c2 = random_univariate(&mut rng);
            let r1 = DynamicalRMatrix::new(sl2(), vec![2], vec![((0, 1), c1.clone())])
                .expect("valid");
            let r2 = DynamicalRMatrix::new(sl2(), vec![2], vec![((0, 2), c2.clone())])
                .expect("valid");
            let sum = DynamicalRMatrix::new(
                sl2(),
                vec![2],
                vec![((0, 1), c1), ((0, 2), c2)],
            )
            .expect("valid");
            assert_eq!(alt_d(&sum), alt_d(&r1).add(&alt_d(&r2)));
        }
    }

    fn random_univariate(rng: &mut ChaCha8Rng) -> RationalFn {
        let mut num = Poly::zero(1);
        for _ in 0..rng.gen_range(1..3) {
            num.add_term(vec![rng.gen_range(0..3)], crate::testgen::small_rational(rng));
        }
        let den = match rng.gen_range(0..3) {
            0 => Poly::one(1),
            1 => Poly::var(0, 1),
            _ => Poly::from_terms(vec![(vec![2], qi(1)), (vec![0], qi(1))], 1).unwrap(),
        };
        if num.is_zero() {
            num = Poly::one(1);
        }
        RationalFn::new(num, den).expect("nonzero denominator")
    }

    fn wedge_efh(lie: &LieAlgebra, c: Q) -> GradedTensor {
        lie.wedge(&[0, 1, 2], c, 1).expect("distinct generators")
    }

    #[test]
    fn rational_datum_solves_with_zero_right_hand_side() {
        let rho = rational_datum();
        let lie = rho.lie().clone();
        // Oracle for the constant: the full left-hand side collapses.
        let lhs = cyb(&rho).sub(&alt_d(&rho));
        assert!(lhs.is_zero(), "left-hand side is {:?}", lhs);
        // The pinned regression constant.
        let z_star = wedge_efh(&lie, qi(0));
        let res = cdybe_residual(&rho, &z_star).expect("invariant input");
        assert!(res.is_zero());
        // Any other constant multiple of the invariant line fails.
        for k in [qi(1), qi(-2), q(1, 3)] {
            let z = wedge_efh(&lie, k);
            let res = cdybe_residual(&rho, &z).expect("invariant input");
            assert!(!res.is_zero());
        }
    }

    #[test]
    fn raising_first_orientation_leaves_the_known_obstruction() {
        // Same datum over the [e,f] = +h presentation: the residual at
        // Z = 0 is exactly (2/l^2) e^f^h, so no constant works.
        let rho = DynamicalRMatrix::new(sl2(), vec![2], vec![((0, 1), inv_lambda())])
            .expect("valid descriptor");
        let res = cdybe_residual(&rho, &wedge_efh(&sl2(), qi(0))).expect("invariant input");
        let expected = RationalFn::new(
            Poly::constant(qi(2), 1),
            Poly::from_terms(vec![(vec![2], qi(1))], 1).unwrap(),
        )
        .unwrap();
        assert_eq!(res.get([0, 1, 2]), expected);
        assert_eq!(res.entries().count(), 1);
    }

    #[test]
    fn residual_is_affine_in_the_right_hand_side() {
        let rho = rational_datum();
        let lie = rho.lie().clone();
        for k in [qi(2), q(-1, 2), qi(7)] {
            let z = wedge_efh(&lie, k.clone());
            let r = cdybe_residual(&rho, &z).expect("invariant input");
            let r0 = cdybe_residual(&rho, &wedge_efh(&lie, qi(0))).expect("invariant input");
            let mut shift = TriRational::zero(1);
            shift.add_term([0, 1, 2], RationalFn::constant(k, 1));
            assert_eq!(r.add(&shift), r0);
        }
    }

    #[test]
    fn non_invariant_right_hand_sides_are_rejected() {
        let rho = rational_datum();
        let lie = rho.lie().clone();
        // e^f^h is the invariant line; an arity-3 tensor built from a
        // two-generator wedge against the Cartan is not invariant... use
        // a non-invariant combination by perturbing into a 4-dim algebra.
        let gl2 = gl2();
        let rho2 = DynamicalRMatrix::new(
            gl2.clone(),
            vec![2, 3],
            vec![((0, 1), RationalFn::var(0, 2))],
        )
        .expect("valid descriptor");
        let z = gl2.wedge(&[0, 1, 3], qi(1), 1).expect("distinct");
        assert!(matches!(
            cdybe_residual(&rho2, &z),
            Err(crate::error::Error::Precondition(_))
        ));
        // Formal-parameter-dependent right-hand sides are rejected.
        let mut z = lie.tensor(3, 2);
        z.add_term(&[0, 1, 2], HbarSeries::monomial(1, qi(1), 2), lie.basis())
            .expect("distinct");
        assert!(cdybe_residual(&rho, &z).is_err());
    }

    /// sl2 plus a central generator, with the two-dimensional base
    /// span(h, z) and two dual coordinates.
    fn gl2() -> LieAlgebra {
        LieAlgebra::new(
            vec![
                ("e".into(), 0),
                ("f".into(), 0),
                ("h".into(), 0),
                ("z".into(), 0),
            ],
            vec![
                (0, 1, vec![(2, qi(1))]),
                (0, 2, vec![(0, qi(-2))]),
                (1, 2, vec![(1, qi(2))]),
            ],
        )
        .expect("valid structure constants")
    }

    #[test]
    fn weight_zero_data_produce_weight_zero_residuals() {
        // Two coordinates, entries at the weight-zero pairs e^f and h^z.
        let gl2 = gl2();
        let c_ef = RationalFn::new(Poly::one(2), Poly::var(0, 2)).unwrap();
        let c_hz = RationalFn::new(
            Poly::var(1, 2),
            Poly::from_terms(vec![(vec![2, 0], qi(1)), (vec![0, 0], qi(1))], 2).unwrap(),
        )
        .unwrap();
        let rho = DynamicalRMatrix::new(
            gl2.clone(),
            vec![2, 3],
            vec![((0, 1), c_ef), ((2, 3), c_hz)],
        )
        .expect("valid descriptor");
        assert!(h_equivariance_residual(&rho).is_empty());
        let res = cdybe_residual(&rho, &gl2.wedge(&[0, 1, 2], qi(0), 1).unwrap())
            .expect("invariant input");
        assert!(!res.is_zero());
        for (w, _) in res.entries() {
            for k in 0..2 {
                let total: Q = w.iter().map(|&g| rho.weight(g, k).clone()).sum();
                assert!(total.is_zero(), "residual word {:?} has nonzero weight", w);
            }
        }
    }

    #[test]
    fn slot_alternation_recovers_the_modification_from_the_associator() {
        // Phi = 1 + (h^2/6) Z with Z the alternating embedding of e^f^h:
        // the full slot alternation of (Phi - 1)/h^2 returns Z itself at
        // leading order, pinning the no-averaging normalization.
        let lie = sl2();
        let u = Uea::new(lie.clone(), 3, 4);
        let z_wedge = lie.wedge(&[0, 1, 2], qi(1), 3).expect("distinct");
        let z = u.from_exterior(&z_wedge).expect("arity in range");
        let phi = UTensor::one(3, 3).add(&z.scale_series(&HbarSeries::monomial(2, q(1, 6), 3)));
        // (Phi - 1)/h^2, then alternate.
        let core = phi.sub(&UTensor::one(3, 3));
        let shifted = shift_down(&core, 2);
        let alt = alt3(&shifted).expect("three slots");
        let diff = alt.sub(&z);
        assert!(diff.truncated(0).is_zero(), "normalization mismatch: {:?}", diff);
    }

    /// Divides a tensor by the square of the formal parameter (valuation
    /// permitting), truncating at the stored order.
    fn shift_down(t: &UTensor, pow: u32) -> UTensor {
        let mut out = UTensor::zero(3, t.hbar_order);
        for (w, c) in t.terms() {
            let mut series = HbarSeries::zero(t.hbar_order);
            for (p, k) in c.terms() {
                assert!(p >= pow || k.is_zero(), "valuation too small");
                if !k.is_zero() {
                    series.add_term(p - pow, k.clone());
                }
            }
            out.add_canonical_term(w.clone(), series);
        }
        out
    }

    #[test]
    fn definitional_residual_identities() {
        // rho = 0, Z = 0.
        let zero = DynamicalRMatrix::new(sl2(), vec![2], vec![]).expect("valid");
        let res = cdybe_residual(&zero, &wedge_efh(&sl2(), qi(0))).expect("invariant");
        assert!(res.is_zero());
        // Constant rho with Z = cyb(rho): definitionally zero residual.
        let rho = DynamicalRMatrix::new(
            sl2(),
            vec![2],
            vec![((0, 1), constant_entry(qi(1), 1))],
        )
        .expect("valid");
        let c = cyb(&rho);
        let z = wedge_efh(&sl2(), c.get([0, 1, 2]).num().eval(&[qi(0)]));
        let res = cdybe_residual(&rho, &z).expect("invariant");
        assert!(res.is_zero());
    }
}
