//! Seeded generators of small algebraic test data: graded Lie algebras with
//! guaranteed Jacobi (current algebras over Grassmann factors, diagonal
//! solvable families), inner differentials, Jacobi-breaking perturbations,
//! and random elements.  All randomness flows through a caller-supplied
//! ChaCha generator so every artifact is reproducible from a seed.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::lie::{LieAlgebra, LinComb};
use crate::scalars::{q, Q};

/// A small nonzero rational with numerator in `-3..=3` and denominator 1 or 2.
pub fn small_rational(rng: &mut ChaCha8Rng) -> Q {
    let num = loop {
        let n = rng.gen_range(-3i64..=3);
        if n != 0 {
            break n;
        }
    };
    let den = if rng.gen_bool(0.3) { 2 } else { 1 };
    q(num, den)
}

/// Random element of the span of the generators with the given degree.
pub fn random_element_of_degree(
    lie: &LieAlgebra,
    degree: i64,
    rng: &mut ChaCha8Rng,
) -> LinComb {
    let mut out = LinComb::new();
    for g in 0..lie.dim() as u32 {
        if lie.degree(g) == degree && rng.gen_bool(0.6) {
            out.insert(g, small_rational(rng));
        }
    }
    out
}

/// The current algebra `lie (x) Grassmann[eps_1..eps_k]` with the stated
/// odd-generator degrees: generators are pairs (base generator, subset of
/// Grassmann letters), brackets `[x(x)a, y(x)b] = (-1)^{|a||y|} [x,y](x)ab`.
/// Jacobi holds whenever it holds for the base.
pub fn tensor_with_grassmann(lie: &LieAlgebra, eps_degrees: &[i64]) -> LieAlgebra {
    let k = eps_degrees.len();
    let subsets: Vec<Vec<usize>> = (0..1u32 << k)
        .map(|mask| (0..k).filter(|i| mask & (1 << i) != 0).collect())
        .collect();
    let subset_degree =
        |s: &[usize]| -> i64 { s.iter().map(|&i| eps_degrees[i]).sum::<i64>() };
    let mut gens = Vec::new();
    for g in 0..lie.dim() as u32 {
        for s in &subsets {
            let suffix: String = s.iter().map(|i| format!("~e{}", i)).collect();
            gens.push((
                format!("{}{}", lie.basis().name(g), suffix),
                lie.degree(g) + subset_degree(s),
            ));
        }
    }
    let id = |g: u32, si: usize| -> u32 { g * subsets.len() as u32 + si as u32 };
    // Product of two disjoint subsets as a sorted union, with the sign of the
    // interleaving (every crossing of two odd letters contributes -1).
    let grassmann_mul = |a: &[usize], b: &[usize]| -> Option<(usize, i64)> {
        if a.iter().any(|i| b.contains(i)) {
            return None;
        }
        let mut letters: Vec<usize> = a.iter().chain(b.iter()).copied().collect();
        let mut sign = 1i64;
        for i in 0..letters.len() {
            for j in i + 1..letters.len() {
                if letters[i] > letters[j]
                    && eps_degrees[letters[i]] % 2 != 0
                    && eps_degrees[letters[j]] % 2 != 0
                {
                    sign = -sign;
                }
            }
        }
        letters.sort();
        let si = subsets.iter().position(|s| *s == letters)?;
        Some((si, sign))
    };
    let mut brackets = Vec::new();
    for gi in 0..lie.dim() as u32 {
        for si in 0..subsets.len() {
            for gj in 0..lie.dim() as u32 {
                for sj in 0..subsets.len() {
                    let (i, j) = (id(gi, si), id(gj, sj));
                    if i >= j {
                        continue;
                    }
                    let base = lie.bracket_gens(gi, gj);
                    if base.is_empty() {
                        continue;
                    }
                    let Some((su, mut sign)) = grassmann_mul(&subsets[si], &subsets[sj])
                    else {
                        continue;
                    };
                    if subset_degree(&subsets[si]) % 2 != 0 && lie.degree(gj) % 2 != 0 {
                        sign = -sign;
                    }
                    let terms: Vec<(u32, Q)> = base
                        .into_iter()
                        .map(|(t, c)| (id(t, su), if sign < 0 { -c } else { c }))
                        .collect();
                    brackets.push((i, j, terms));
                }
            }
        }
    }
    LieAlgebra::new(gens, brackets).expect("current algebra data is well-formed")
}

/// A 4-dimensional solvable algebra: `[h, e_i] = lambda_i e_i` with random
/// nonzero eigenvalues (basis order `h, e1, e2, e3`, all degree 0).  Jacobi
/// holds for every eigenvalue choice.
pub fn solvable4(rng: &mut ChaCha8Rng) -> LieAlgebra {
    let gens = vec![
        ("h".to_string(), 0),
        ("e1".to_string(), 0),
        ("e2".to_string(), 0),
        ("e3".to_string(), 0),
    ];
    let brackets = (1..4u32)
        .map(|i| (0u32, i, vec![(i, small_rational(rng))]))
        .collect();
    LieAlgebra::new(gens, brackets).expect("solvable data is well-formed")
}

/// The adjoint differential `d = [xi, -]` tabulated on generators.  When
/// `xi` has degree 1 and `[xi, xi] = 0` this is a square-zero degree `+1`
/// derivation.
pub fn adjoint_differential(lie: &LieAlgebra, xi: &LinComb) -> Vec<LinComb> {
    (0..lie.dim() as u32)
        .map(|g| {
            let mut single = LinComb::new();
            single.insert(g, crate::scalars::qi(1));
            lie.bracket_elems(xi, &single)
        })
        .collect()
}

/// A random DGLA: a guaranteed-Jacobi base (simple, solvable, or abelian)
/// tensored with one or two Grassmann letters, with an inner differential
/// `ad(x ~e0)` for a random degree-0 base element `x` (its self-bracket
/// vanishes because the Grassmann letter squares to zero).
pub fn random_dgla(rng: &mut ChaCha8Rng) -> (LieAlgebra, Vec<LinComb>) {
    let base = match rng.gen_range(0..3) {
        0 => crate::lie::sl2(),
        1 => solvable4(rng),
        _ => crate::lie::abelian(2),
    };
    let eps: &[i64] = if rng.gen_bool(0.5) { &[1] } else { &[1, 1] };
    let lie = tensor_with_grassmann(&base, eps);
    // Generators x ~e0 sit at ids g * 2^k + 1 (subset {0} is index 1).
    let stride = 1u32 << eps.len();
    let mut xi = LinComb::new();
    for g in 0..base.dim() as u32 {
        if base.degree(g) == 0 && rng.gen_bool(0.5) {
            xi.insert(g * stride + 1, small_rational(rng));
        }
    }
    let differential = adjoint_differential(&lie, &xi);
    (lie, differential)
}

/// A single-constant perturbation of one stored bracket that breaks Jacobi,
/// found by rejection sampling (the returned algebra has a nonempty
/// `check_jacobi` report).
pub fn jacobi_perturbation(lie: &LieAlgebra, rng: &mut ChaCha8Rng) -> LieAlgebra {
    let n = lie.dim() as u32;
    loop {
        let i = rng.gen_range(0..n - 1);
        let j = rng.gen_range(i + 1..n);
        let candidates: Vec<u32> = (0..n)
            .filter(|&k| lie.degree(k) == lie.degree(i) + lie.degree(j))
            .collect();
        if candidates.is_empty() {
            continue;
        }
        let k = candidates[rng.gen_range(0..candidates.len())];
        let c = small_rational(rng);
        let mut bracket_list: Vec<(u32, u32, Vec<(u32, Q)>)> = Vec::new();
        for (&(a, b), terms) in lie.stored_brackets() {
            bracket_list.push((a, b, terms.iter().map(|(&t, q)| (t, q.clone())).collect()));
        }
        if let Some(entry) = bracket_list.iter_mut().find(|(a, b, _)| *a == i && *b == j) {
            entry.2.push((k, c));
        } else {
            bracket_list.push((i, j, vec![(k, c)]));
        }
        let gens: Vec<(String, i64)> = (0..n)
            .map(|g| (lie.basis().name(g).to_string(), lie.degree(g)))
            .collect();
        let perturbed = LieAlgebra::new(gens, bracket_list).expect("well-formed");
        if !perturbed.check_jacobi().is_empty() {
            return perturbed;
        }
    }
}
