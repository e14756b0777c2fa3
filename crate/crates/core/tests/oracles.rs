//! Independent brute-force oracles checked against the structured
//! implementations: a standalone integer-lattice solver over the explicit
//! truncated generator matrix for membership, exhaustive root search for
//! free words, elementary divisors for the witness quotient, and the
//! all-subset-pairs rank recursion.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use almostfree_core::freeness::{nonfree_witness, random_element, WitnessConfig};
use almostfree_core::freewords::{enumerate_reduced_words, Symbol, Word};
use almostfree_core::shygroup::{
    member_sum, quotient_parts, Branch, BranchSet, BranchTuple, Generator, GroupElement, Membership,
};
use almostfree_core::stability::{
    contradictory_pairs, order_delta, split_rank, FinModel, RankValue,
};

fn b(text: &str) -> Branch {
    Branch::parse(text).unwrap()
}

mod common;

use common::{oracle_membership, random_set};

#[test]
fn membership_agrees_with_standalone_solver() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut members = 0;
    for trial in 0..120 {
        let k_star = rng.gen_range(0..=2usize);
        let depth = rng.gen_range(3..=5u32);
        let part_count = rng.gen_range(1..=2usize);
        let parts: Vec<BranchSet> = (0..part_count)
            .map(|_| random_set(&mut rng, 2, 3))
            .collect();
        let union = parts
            .iter()
            .fold(BranchSet::default(), |acc, p| acc.union(p));
        let terms = rng.gen_range(1..=3);
        let mut e = random_element(&union, k_star, depth - 1, terms, &mut rng);
        // Mix in occasional fractional scalings to exercise the negative
        // side.
        if rng.gen_bool(0.3) {
            e = e.scale(&BigRational::new(BigInt::one(), BigInt::from(2)));
        }
        let structured = match member_sum(&e, &parts, depth) {
            Ok(Membership::Member(_)) => true,
            Ok(Membership::NotMember(_)) => false,
            Err(_) => continue,
        };
        let brute = oracle_membership(&e, &parts, k_star, depth);
        assert_eq!(structured, brute, "trial {trial}: {e}");
        if structured {
            members += 1;
        }
    }
    // The sample should exercise both outcomes.
    assert!(members > 10);
}

#[test]
fn witness_quotient_has_infinite_order_divisible_coset() {
    // Elementary-divisor cross-check of the divisibility witness: in the
    // truncated quotient lattice, the level-0 y-coset lies outside the
    // rational span of the parts (infinite order) yet is divisible by the
    // factorial ladder.
    let config = WitnessConfig {
        k_star: 1,
        star: BranchTuple::full(vec![b("*0"), b("1*0")]),
        parts: vec![BranchSet::new([b("1*0")]), BranchSet::new([b("*0")])],
    };
    for n_max in 2..=8u32 {
        let cert = nonfree_witness(&config, n_max).unwrap();
        assert_eq!(cert.divisibility.len() as u32, n_max + 1);
        let depth = n_max + 1;
        // Assemble the parts' lattice rows in hull coordinates.
        let mut coords: BTreeSet<Generator> = BTreeSet::new();
        let mut columns: Vec<GroupElement> = Vec::new();
        for part in &config.parts {
            for tuple in part.full_tuples(1) {
                for level in 0..=depth {
                    let col = GroupElement::generator(Generator::y(tuple.clone(), level))
                        .raise_level(depth)
                        .unwrap();
                    for (g, _) in col.terms() {
                        coords.insert(g.clone());
                    }
                    columns.push(col);
                }
            }
        }
        let y0 = GroupElement::generator(Generator::y(config.star.clone(), 0))
            .raise_level(depth)
            .unwrap();
        for (g, _) in y0.terms() {
            coords.insert(g.clone());
        }
        for coord in coords.clone() {
            if let Generator::X { .. } = coord {
                if config.parts.iter().any(|p| coord.in_group_of(p)) {
                    columns.push(GroupElement::generator(coord.clone()));
                }
            }
        }
        let coord_list: Vec<Generator> = coords.into_iter().collect();
        let index: BTreeMap<&Generator, usize> =
            coord_list.iter().enumerate().map(|(i, g)| (g, i)).collect();
        let rows: Vec<Vec<BigInt>> = columns
            .iter()
            .map(|c| {
                let mut row = vec![BigInt::zero(); coord_list.len()];
                for (g, q) in c.terms() {
                    row[index[g]] = q.numer().clone();
                }
                row
            })
            .collect();
        let matrix = almostfree_core::lattice::IntMatrix::from_rows(rows);
        let target: Vec<BigInt> = {
            let mut row = vec![BigInt::zero(); coord_list.len()];
            for (g, q) in y0.terms() {
                row[index[g]] = q.numer().clone();
            }
            row
        };
        // Infinite order: not even rationally spanned by the parts.
        assert!(
            almostfree_core::lattice::solve_rational(&matrix, &target).is_none(),
            "N = {n_max}: the coset must have infinite order"
        );
        // Divisibility by the certified factorial products, via the lattice.
        for (n, product) in &cert.divisibility {
            assert!(
                almostfree_core::lattice::divisible_mod_lattice(&matrix, &target, product),
                "N = {n_max}: divisibility by the level-{n} product fails"
            );
        }
        // The sublattice itself is clean: its invariant factors are all 1,
        // so all the divisibility lives in the coset structure.
        let invariants = almostfree_core::lattice::smith_invariants(&matrix);
        assert!(invariants.iter().all(|d| d.is_one()));
    }
}

#[test]
fn roots_agree_with_exhaustive_search_sampled() {
    // The full length-8 sweep lives in the acceptance suite; here a smaller
    // exhaustive window plus uniqueness. Any root satisfies
    // `len(w) = 2|c| + n·|r|` with the core `r` nonempty, so candidate roots
    // have length between len/n and len − n + 1; the naive len/n cap misses
    // conjugated powers like (a b a⁻¹)² = a b² a⁻¹.
    let symbols = [Symbol::new("a"), Symbol::new("b")];
    let words = enumerate_reduced_words(&symbols, 6);
    for w in &words {
        for n in 2..=3u32 {
            let max_len = if w.is_empty() {
                0
            } else {
                w.length().saturating_sub(n as u64 - 1)
            };
            let candidates = enumerate_reduced_words(&symbols, max_len);
            let found: Vec<&Word> = candidates.iter().filter(|v| v.pow(n) == *w).collect();
            assert!(found.len() <= 1, "{w} has {} {n}-th roots", found.len());
            assert_eq!(
                w.nth_root(n),
                found.first().map(|v| (*v).clone()),
                "root mismatch for {w} at n = {n}"
            );
        }
    }
}

#[test]
fn root_index_set_is_finite() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let symbols = ["a", "b"];
    for _ in 0..50 {
        let len = rng.gen_range(1..=6);
        let mut word = Word::empty();
        while word.length() < len {
            let s = symbols[rng.gen_range(0..2)];
            let e = if rng.gen_bool(0.5) { 1 } else { -1 };
            word = word.mul(&Word::generator(s, e));
        }
        let bound = word.length() as u32;
        for n in (bound + 1)..=(bound + 5) {
            assert!(word.nth_root(n).is_none(), "{word} has an {n}-th root");
        }
    }
}

// ---------------------------------------------------------------------------
// Rank oracles.
// ---------------------------------------------------------------------------

/// Un-memoized recursion with maximal parts.
fn rank_unmemoized(
    set: &BTreeSet<Vec<usize>>,
    pairs: &[almostfree_core::stability::SplitInstance],
) -> RankValue {
    if set.is_empty() {
        return RankValue::MinusOne;
    }
    let mut best = RankValue::Finite(0);
    for (_, sat0, sat1) in pairs {
        let p0: BTreeSet<Vec<usize>> = set.intersection(sat0).cloned().collect();
        let p1: BTreeSet<Vec<usize>> = set.intersection(sat1).cloned().collect();
        if p0.is_empty() || p1.is_empty() {
            continue;
        }
        let r = rank_unmemoized(&p0, pairs).min(rank_unmemoized(&p1, pairs));
        if let RankValue::Finite(v) = r {
            best = best.max(RankValue::Finite(v + 1));
        }
    }
    best
}

/// Recursion over every pair of nonempty subsets of the satisfier parts —
/// the fully literal reading, feasible only on tiny sets.
fn rank_all_subsets(
    set: &BTreeSet<Vec<usize>>,
    pairs: &[almostfree_core::stability::SplitInstance],
) -> RankValue {
    if set.is_empty() {
        return RankValue::MinusOne;
    }
    fn subsets(of: &BTreeSet<Vec<usize>>) -> Vec<BTreeSet<Vec<usize>>> {
        let items: Vec<Vec<usize>> = of.iter().cloned().collect();
        (0..(1usize << items.len()))
            .map(|mask| {
                items
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, t)| t.clone())
                    .collect()
            })
            .collect()
    }
    let mut best = RankValue::Finite(0);
    for (_, sat0, sat1) in pairs {
        let p0: BTreeSet<Vec<usize>> = set.intersection(sat0).cloned().collect();
        let p1: BTreeSet<Vec<usize>> = set.intersection(sat1).cloned().collect();
        for s0 in subsets(&p0) {
            if s0.is_empty() {
                continue;
            }
            for s1 in subsets(&p1) {
                if s1.is_empty() {
                    continue;
                }
                let r = rank_all_subsets(&s0, pairs).min(rank_all_subsets(&s1, pairs));
                if let RankValue::Finite(v) = r {
                    best = best.max(RankValue::Finite(v + 1));
                }
            }
        }
    }
    best
}

#[test]
fn rank_matches_unmemoized_on_all_subsets_up_to_six() {
    for n in 2..=6usize {
        let model = FinModel::chain(n);
        let delta = order_delta(&model);
        let pairs = contradictory_pairs(1, &model, &delta);
        let elements: Vec<Vec<usize>> = (0..n).map(|a| vec![a]).collect();
        for mask in 0..(1usize << n) {
            let set: BTreeSet<Vec<usize>> = elements
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, t)| t.clone())
                .collect();
            assert_eq!(
                split_rank(&set, &model, &delta),
                rank_unmemoized(&set, &pairs),
                "chain {n}, mask {mask:b}"
            );
        }
    }
}

#[test]
fn maximal_parts_equal_all_subset_pairs_on_tiny_sets() {
    for n in 2..=4usize {
        let model = FinModel::chain(n);
        let delta = order_delta(&model);
        let pairs = contradictory_pairs(1, &model, &delta);
        let whole: BTreeSet<Vec<usize>> = (0..n).map(|a| vec![a]).collect();
        assert_eq!(
            rank_unmemoized(&whole, &pairs),
            rank_all_subsets(&whole, &pairs),
            "chain {n}"
        );
    }
}

#[test]
fn type_rank_attained_at_finite_subtype() {
    // Enumerate every subtype of a small type and confirm the minimum rank
    // is attained at the full type.
    let model = FinModel::chain(5);
    let delta = order_delta(&model);
    let instances = vec![(0usize, vec![4usize]), (1usize, vec![0usize])];
    let full = almostfree_core::stability::rank_of_type(&instances, 1, &model, &delta);
    let mut min_over_subtypes = RankValue::Infinity;
    for mask in 0..(1usize << instances.len()) {
        let sub: Vec<(usize, Vec<usize>)> = instances
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, inst)| inst.clone())
            .collect();
        let r = almostfree_core::stability::rank_of_type(&sub, 1, &model, &delta);
        min_over_subtypes = min_over_subtypes.min(r);
    }
    assert_eq!(full, min_over_subtypes);
}

// ---------------------------------------------------------------------------
// Purity at truncation.
// ---------------------------------------------------------------------------

#[test]
fn quotient_subgroup_is_pure_at_truncation() {
    // If a·e lies in the sum of parts for integer a ≠ 0 and e lies in the
    // ambient subgroup, then e lies in the sum of parts.
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let base = BranchSet::new([b("1*0"), b("01*0")]);
    let u = BranchSet::new([b("*0")]);
    let parts = quotient_parts(&base, &u);
    let union = base.union(&BranchSet::new(u.branches().cloned()));
    let mut hits = 0;
    for _ in 0..150 {
        let terms = rng.gen_range(1..=3);
        let e = random_element(&union, 1, 4, terms, &mut rng);
        let a = BigInt::from(rng.gen_range(2..=4i64));
        let scaled = e.scale(&BigRational::from_integer(a));
        let scaled_in = member_sum(&scaled, &parts, 6).unwrap().is_member();
        if scaled_in {
            hits += 1;
            let ambient = member_sum(&e, std::slice::from_ref(&union), 6)
                .unwrap()
                .is_member();
            if ambient {
                assert!(
                    member_sum(&e, &parts, 6).unwrap().is_member(),
                    "purity fails for {e}"
                );
            }
        }
    }
    assert!(hits > 5, "sample never hit the scaled-membership case");
}

#[test]
fn specker_embedding_purity() {
    use almostfree_core::specker::{embed_dense, EmbeddingSpec};
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let universe = BranchSet::new([b("*0"), b("10*0")]);
    let spec = EmbeddingSpec::build(3, &universe, 0, 5).unwrap();
    // Image lattice rows: embeddings of the subgroup generators.
    let mut rows = Vec::new();
    for tuple in universe.full_tuples(0) {
        for level in 0..=4u32 {
            let g = GroupElement::generator(Generator::y(tuple.clone(), level));
            rows.push(embed_dense(&g, std::slice::from_ref(&spec)).unwrap());
        }
    }
    for prefix_len in 0..4usize {
        for bits in 0..(1u32 << prefix_len) {
            let prefix: Vec<u8> = (0..prefix_len).map(|i| ((bits >> i) & 1) as u8).collect();
            let g = GroupElement::generator(Generator::x(
                0,
                BranchTuple::omitting(0, Vec::new()),
                prefix,
            ));
            rows.push(embed_dense(&g, std::slice::from_ref(&spec)).unwrap());
        }
    }
    let matrix = almostfree_core::lattice::IntMatrix::from_rows(rows);
    for _ in 0..60 {
        let terms = rng.gen_range(1..=3);
        let e = random_element(&universe, 0, 4, terms, &mut rng);
        let a = BigInt::from(rng.gen_range(2..=3i64));
        let image = embed_dense(&e, std::slice::from_ref(&spec)).unwrap();
        // Divisibility of the image inside the lattice.
        let divided: Option<Vec<BigInt>> = image
            .iter()
            .map(|v| {
                if (v % &a).is_zero() {
                    Some(v / &a)
                } else {
                    None
                }
            })
            .collect();
        let image_divisible = divided
            .map(|d| almostfree_core::lattice::solve_integer(&matrix, &d).is_some())
            .unwrap_or(false);
        // Divisibility of the element in the subgroup.
        let elem_divisible = member_sum(
            &e.scale(&BigRational::new(BigInt::one(), a.clone())),
            std::slice::from_ref(&universe),
            5,
        )
        .map(|m| m.is_member())
        .unwrap_or(false);
        // Truncation keeps every branch here, so the two sides agree.
        assert_eq!(image_divisible, elem_divisible, "element {e}, divisor {a}");
    }
}
