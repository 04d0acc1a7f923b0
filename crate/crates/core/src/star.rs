//! Order-by-order construction and normalization of associative deformed
//! multiplications in the invariant-operator encoding: an arity-2 tensor
//! `m = 1x1 + hbar m_1 + ...` whose associativity defect against a chosen
//! associator vanishes at the working order.
//!
//! Each order reduces to an inhomogeneous linear problem for `m_k` over the
//! monomial-pair basis; the solver fixes gauge freedom by a minimal-degree
//! choice under a deterministic column order (free variables zero), and a
//! separate normal form reduces each order modulo coboundaries so that
//! gauge-equivalent products can be compared by exact equality.

use crate::cochain::{hochschild_diff, place, Associator};
use crate::error::{Error, Result};
use crate::graded::GradedTensor;
use crate::scalars::{HbarSeries, Q};
use crate::uea::{Coproduct, Monomial, UTensor, Uea};
use num::{One, Zero};
use std::collections::BTreeMap;

/// Graded slot swap of an arity-2 tensor: `a x b -> (-1)^{|a||b|} b x a`.
pub fn swap_slots(uea: &Uea, t: &UTensor) -> Result<UTensor> {
    if t.arity != 2 {
        return Err(Error::InvalidInput("slot swap expects arity 2".into()));
    }
    let mut out = UTensor::zero(2, t.hbar_order);
    for (key, c) in t.terms() {
        let d0: i64 = key[0].iter().map(|&g| uea.lie().degree(g) as i64).sum();
        let d1: i64 = key[1].iter().map(|&g| uea.lie().degree(g) as i64).sum();
        let mut c = c.clone();
        if (d0 * d1) % 2 != 0 {
            c = c.neg();
        }
        out.add_canonical_term(vec![key[1].clone(), key[0].clone()], c);
    }
    Ok(out)
}

/// Defect of the commutator condition at first order:
/// `(m_1 - swap m_1) - alternating embedding of pi`.
pub fn star_skew_residual(uea: &Uea, m: &UTensor, pi: &GradedTensor) -> Result<UTensor> {
    if m.arity != 2 {
        return Err(Error::InvalidInput("multiplication element must have arity 2".into()));
    }
    let m1 = hbar_coefficient(m, 1);
    let skew = m1.sub(&swap_slots(uea, &m1)?);
    let target = uea.from_free(&uea.lie().alt_embed(pi)?)?.truncated(0);
    Ok(skew.sub(&target))
}

/// Extracts the order-`k` coefficient as a series-free tensor (order 0).
pub fn hbar_coefficient(t: &UTensor, k: u32) -> UTensor {
    let mut out = UTensor::zero(t.arity, 0);
    for (key, c) in t.terms() {
        out.add_canonical_term(key.clone(), HbarSeries::constant(c.coeff(k), 0));
    }
    out
}

/// Exponential-type model multiplication for a constant bivector:
/// `sum_k hbar^k rho^k / (2^k k!)` with `rho` the alternating embedding.
pub fn exponential_star(uea: &Uea, pi: &GradedTensor, order: u32) -> Result<UTensor> {
    let mut rho = uea.from_free(&uea.lie().alt_embed(pi)?)?;
    rho = rho.truncated(order);
    let mut power = UTensor::one(2, order);
    let mut out = UTensor::zero(2, order);
    let mut factor = Q::one();
    for k in 0..=order {
        if k > 0 {
            power = uea.mul(&power, &rho)?;
            factor = factor * crate::scalars::q(1, 2 * k as i64);
        }
        out = out.add(&power.scale(&factor).scale_series(&HbarSeries::monomial(k, Q::one(), order)));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Exact linear algebra over the rationals.

/// Solves `mat * x = rhs` (rows are equations). Returns the solution with
/// all free variables set to zero under the given column order, or `None`
/// if the system is inconsistent.
pub(crate) fn solve_linear(mat: &[Vec<Q>], rhs: &[Q]) -> Option<Vec<Q>> {
    let nrows = mat.len();
    if nrows == 0 {
        return Some(Vec::new());
    }
    let ncols = mat[0].len();
    let mut a: Vec<Vec<Q>> = mat
        .iter()
        .zip(rhs)
        .map(|(row, b)| {
            let mut r = row.clone();
            r.push(b.clone());
            r
        })
        .collect();
    let mut pivots: Vec<(usize, usize)> = Vec::new(); // (row, col)
    let mut row = 0usize;
    for col in 0..ncols {
        let Some(p) = (row..nrows).find(|&r| !a[r][col].is_zero()) else { continue };
        a.swap(row, p);
        let inv = a[row][col].clone();
        for v in a[row].iter_mut() {
            *v = &*v / &inv;
        }
        for r in 0..nrows {
            if r != row && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in col..=ncols {
                    let delta = &a[row][c] * &f;
                    a[r][c] = &a[r][c] - &delta;
                }
            }
        }
        pivots.push((row, col));
        row += 1;
        if row == nrows {
            break;
        }
    }
    for r in row..nrows {
        if !a[r][ncols].is_zero() {
            return None;
        }
    }
    let mut x = vec![Q::zero(); ncols];
    for (r, c) in pivots {
        x[c] = a[r][ncols].clone();
    }
    Some(x)
}

/// Reduces `v` modulo the row span of `span`, returning the canonical
/// representative and the combination of span rows that was subtracted.
pub(crate) fn reduce_mod_span(span: &[Vec<Q>], v: &[Q]) -> (Vec<Q>, Vec<Q>) {
    let nrows = span.len();
    let ncols = v.len();
    // Augment each span row with lineage coordinates.
    let mut a: Vec<Vec<Q>> = span
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            for j in 0..nrows {
                r.push(if i == j { Q::one() } else { Q::zero() });
            }
            r
        })
        .collect();
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut row = 0usize;
    for col in 0..ncols {
        let Some(p) = (row..nrows).find(|&r| !a[r][col].is_zero()) else { continue };
        a.swap(row, p);
        let inv = a[row][col].clone();
        for vv in a[row].iter_mut() {
            *vv = &*vv / &inv;
        }
        for r in 0..nrows {
            if r != row && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in 0..ncols + nrows {
                    let delta = &a[row][c] * &f;
                    a[r][c] = &a[r][c] - &delta;
                }
            }
        }
        pivots.push((row, col));
        row += 1;
        if row == nrows {
            break;
        }
    }
    let mut reduced = v.to_vec();
    let mut combo = vec![Q::zero(); nrows];
    for (r, c) in pivots {
        if reduced[c].is_zero() {
            continue;
        }
        let f = reduced[c].clone();
        for j in 0..ncols {
            let delta = &a[r][j] * &f;
            reduced[j] = &reduced[j] - &delta;
        }
        for j in 0..nrows {
            let delta = &a[r][ncols + j] * &f;
            combo[j] = &combo[j] + &delta;
        }
    }
    (reduced, combo)
}

// ---------------------------------------------------------------------------
// Basis enumeration.

/// All canonical sorted monomials of length `1..=max_len` (odd generators
/// do not repeat), in (length, lex) order.
pub(crate) fn pbw_monomials(uea: &Uea, max_len: usize) -> Vec<Monomial> {
    let dim = uea.lie().dim() as u32;
    let mut by_len: Vec<Vec<Monomial>> = vec![vec![vec![]]];
    for len in 1..=max_len {
        let mut next = Vec::new();
        for w in &by_len[len - 1] {
            let start = w.last().copied().unwrap_or(0);
            for g in start..dim {
                if w.last() == Some(&g) && uea.lie().degree(g) % 2 != 0 {
                    continue;
                }
                let mut w2 = w.clone();
                w2.push(g);
                next.push(w2);
            }
        }
        by_len.push(next);
    }
    let mut out: Vec<Monomial> = by_len.into_iter().skip(1).flatten().collect();
    out.sort_by(|a, b| (a.len(), a.clone()).cmp(&(b.len(), b.clone())));
    out
}

/// Unital ansatz for one multiplication order: pairs of nonempty monomials
/// with bounded total length, in (total length, lex) order.
fn pair_basis(uea: &Uea, word_bound: usize) -> Vec<Vec<Monomial>> {
    let words = pbw_monomials(uea, word_bound.saturating_sub(1));
    let mut out = Vec::new();
    for w1 in &words {
        for w2 in &words {
            if w1.len() + w2.len() <= word_bound {
                out.push(vec![w1.clone(), w2.clone()]);
            }
        }
    }
    out.sort_by_key(|k| (k[0].len() + k[1].len(), k.clone()));
    out
}

fn tensor_to_map(t: &UTensor, k: u32) -> BTreeMap<Vec<Monomial>, Q> {
    let mut out = BTreeMap::new();
    for (key, c) in t.terms() {
        let v = c.coeff(k);
        if !v.is_zero() {
            out.insert(key.clone(), v);
        }
    }
    out
}

fn basis_tensor(key: &[Monomial]) -> UTensor {
    let mut t = UTensor::zero(key.len(), 0);
    t.add_canonical_term(key.to_vec(), HbarSeries::one(0));
    t
}

// ---------------------------------------------------------------------------
// The order-by-order solver.

#[derive(Clone, Debug)]
pub enum StarOutcome {
    Solved(UTensor),
    Obstructed {
        order: u32,
        /// The inhomogeneous term that could not be matched; always closed
        /// under the arity-raising differential when lower orders solved.
        obstruction: UTensor,
        obstruction_is_cocycle: bool,
    },
}

/// Solves the associativity equation order by order for the multiplication
/// deforming `1x1` with first-order skew part `pi`, against the associator
/// `phi`. `z` is the compatibility trivector: the algebraic Schouten square
/// of `pi` must equal `z`, and when `r` is nonzero its square must too.
pub fn solve_star_order(
    uea: &Uea,
    pi: &GradedTensor,
    r: &GradedTensor,
    z: &GradedTensor,
    phi: &Associator,
    n: u32,
    word_bound: usize,
    cop: &dyn Coproduct,
) -> Result<StarOutcome> {
    let lie = uea.lie();
    let square = lie.schouten_algebraic(pi, pi)?;
    if square != z.truncated(square.hbar_order) && square.truncated(z.hbar_order) != *z {
        return Err(Error::Precondition(
            "bivector is not quasi-Poisson for the supplied trivector".into(),
        ));
    }
    if !r.is_zero() {
        let rr = lie.schouten_algebraic(r, r)?;
        if rr != z.truncated(rr.hbar_order) && rr.truncated(z.hbar_order) != *z {
            return Err(Error::Precondition(
                "classical element square does not match the trivector".into(),
            ));
        }
    }
    let pent = crate::cochain::pentagon_residual(uea, &phi.tensor, cop)?.truncated(n);
    if !pent.is_zero() {
        return Err(Error::Precondition(
            "associator fails the pentagon identity at the working order".into(),
        ));
    }

    let columns = pair_basis(uea, word_bound);
    // Differential images of the unknown basis, computed once.
    let b_images: Vec<UTensor> = columns
        .iter()
        .map(|key| hochschild_diff(uea, &basis_tensor(key), cop))
        .collect::<Result<_>>()?;

    let mut star = UTensor::one(2, n);
    for k in 1..=n {
        let partial = crate::cochain::phi_assoc_residual(uea, &star, phi, cop)?;
        let target = tensor_to_map(&partial, k); // c_k = -this
        // Row space: arity-3 keys from targets and images, plus (at k = 1)
        // the skew-part constraint rows over arity-2 keys.
        let mut row_index: BTreeMap<(u8, Vec<Monomial>), usize> = BTreeMap::new();
        let mut nrows = 0usize;
        let mut mat_cols: Vec<BTreeMap<usize, Q>> = vec![BTreeMap::new(); columns.len()];
        let mut rhs_map: BTreeMap<usize, Q> = BTreeMap::new();
        for (ci, img) in b_images.iter().enumerate() {
            for (key, c) in tensor_to_map(img, 0) {
                let idx = row_idx(&mut row_index, (0, key), &mut nrows);
                mat_cols[ci].insert(idx, c);
            }
        }
        for (key, c) in &target {
            let idx = row_idx(&mut row_index, (0, key.clone()), &mut nrows);
            rhs_map.insert(idx, -c.clone());
        }
        if k == 1 {
            let alt = tensor_to_map(&uea.from_free(&lie.alt_embed(pi)?)?, 0);
            for (ci, key) in columns.iter().enumerate() {
                // skew(x)[key] picks up x[key] - (swap sign) x[swapped key]
                let swapped = swap_slots(uea, &basis_tensor(key))?;
                let mut touched: Vec<(Vec<Monomial>, Q)> =
                    vec![(key.clone(), Q::one())];
                for (skey, sc) in tensor_to_map(&swapped, 0) {
                    touched.push((skey, -sc));
                }
                for (rkey, coeff) in touched {
                    let idx = row_idx(&mut row_index, (1, rkey), &mut nrows);
                    let cur = mat_cols[ci].get(&idx).cloned().unwrap_or_else(Q::zero);
                    let newv = &cur + &coeff;
                    if newv.is_zero() {
                        mat_cols[ci].remove(&idx);
                    } else {
                        mat_cols[ci].insert(idx, newv);
                    }
                }
            }
            for (key, c) in alt {
                let idx = row_idx(&mut row_index, (1, key), &mut nrows);
                rhs_map.insert(idx, c);
            }
        }
        let mut mat = vec![vec![Q::zero(); columns.len()]; nrows];
        for (ci, col) in mat_cols.iter().enumerate() {
            for (&ri, c) in col {
                mat[ri][ci] = c.clone();
            }
        }
        let mut rhs = vec![Q::zero(); nrows];
        for (ri, c) in rhs_map {
            rhs[ri] = c;
        }
        match solve_linear(&mat, &rhs) {
            Some(x) => {
                let mut mk = UTensor::zero(2, n);
                for (ci, key) in columns.iter().enumerate() {
                    if !x[ci].is_zero() {
                        mk.add_canonical_term(
                            key.clone(),
                            HbarSeries::monomial(k, x[ci].clone(), n),
                        );
                    }
                }
                star = star.add(&mk);
            }
            None => {
                let mut obstruction = UTensor::zero(3, n);
                for (key, c) in &target {
                    obstruction
                        .add_canonical_term(key.clone(), HbarSeries::constant(-c.clone(), n));
                }
                let closed = hochschild_diff(uea, &obstruction, cop)?.is_zero();
                return Ok(StarOutcome::Obstructed {
                    order: k,
                    obstruction,
                    obstruction_is_cocycle: closed,
                });
            }
        }
    }
    let check = crate::cochain::phi_assoc_residual(uea, &star, phi, cop)?;
    debug_assert!(check.truncated(n).is_zero());
    Ok(StarOutcome::Solved(star))
}

/// Canonical gauge form: at each order the multiplication coefficient is
/// reduced modulo coboundaries of counit-free arity-1 elements, applying the
/// full (exact) equivalence so associativity is preserved verbatim.
pub fn gauge_normal_form(
    uea: &Uea,
    star: &UTensor,
    n: u32,
    word_bound: usize,
    cop: &dyn Coproduct,
) -> Result<UTensor> {
    if star.arity != 2 {
        return Err(Error::InvalidInput("multiplication element must have arity 2".into()));
    }
    let gauge_words = pbw_monomials(uea, word_bound);
    let span_maps: Vec<BTreeMap<Vec<Monomial>, Q>> = gauge_words
        .iter()
        .map(|w| {
            hochschild_diff(uea, &basis_tensor(std::slice::from_ref(w)), cop)
                .map(|img| tensor_to_map(&img, 0))
        })
        .collect::<Result<_>>()?;
    let mut out = star.clone();
    for k in 1..=n {
        let mk = tensor_to_map(&out, k);
        // Column set: every key touched by the span or the current order,
        // in (total length, lex) order so pivots are deterministic.
        let mut keys: Vec<Vec<Monomial>> =
            span_maps.iter().flat_map(|m| m.keys().cloned()).chain(mk.keys().cloned()).collect();
        keys.sort_by_key(|w| (w.iter().map(Vec::len).sum::<usize>(), w.clone()));
        keys.dedup();
        let col_of: BTreeMap<&Vec<Monomial>, usize> =
            keys.iter().enumerate().map(|(i, w)| (w, i)).collect();
        let span: Vec<Vec<Q>> = span_maps
            .iter()
            .map(|m| {
                let mut row = vec![Q::zero(); keys.len()];
                for (key, c) in m {
                    row[col_of[key]] = c.clone();
                }
                row
            })
            .collect();
        let mut v = vec![Q::zero(); keys.len()];
        for (key, c) in &mk {
            v[col_of[key]] = c.clone();
        }
        let (_, combo) = reduce_mod_span(&span, &v);
        if combo.iter().all(|c| c.is_zero()) {
            continue;
        }
        let mut g = UTensor::zero(1, n);
        for (j, c) in combo.iter().enumerate() {
            if !c.is_zero() {
                g.add_canonical_term(
                    vec![gauge_words[j].clone()],
                    HbarSeries::monomial(k, c.clone(), n),
                );
            }
        }
        let t = UTensor::one(1, n).add(&g);
        let t_inv = uea.invert(&t)?;
        let dt = uea.multi_delta(&t, 2, cop)?;
        let pre = uea.mul(&place(&t_inv, 0, 2), &place(&t_inv, 1, 2))?;
        out = uea.mul(&uea.mul(&dt, &out)?, &pre)?;
    }
    Ok(out)
}

fn row_idx(
    map: &mut BTreeMap<(u8, Vec<Monomial>), usize>,
    key: (u8, Vec<Monomial>),
    nrows: &mut usize,
) -> usize {
    if let Some(&i) = map.get(&key) {
        return i;
    }
    let i = *nrows;
    map.insert(key, i);
    *nrows += 1;
    i
}
