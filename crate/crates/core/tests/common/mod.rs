//! Shared test support: a standalone integer-lattice membership oracle over
//! the explicit truncated generator matrix, and random instance generators.
//! Nothing here touches the crate's lattice module.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::Rng;

use almostfree_core::shygroup::{Branch, BranchSet, Generator, GroupElement};

/// Solve `x * rows = target` over the integers by gcd-elimination, column by
/// column.
pub fn oracle_solve_integer(rows: &[Vec<BigInt>], target: &[BigInt]) -> bool {
    let mut work: Vec<Vec<BigInt>> = rows.to_vec();
    let mut goal = target.to_vec();
    let cols = target.len();
    let mut used = vec![false; work.len()];
    for col in 0..cols {
        loop {
            let mut actives: Vec<usize> = (0..work.len())
                .filter(|&r| !used[r] && !work[r][col].is_zero())
                .collect();
            if actives.len() <= 1 {
                break;
            }
            actives.sort_by_key(|&r| work[r][col].abs());
            let (small, big) = (actives[0], actives[1]);
            let q = &work[big][col] / &work[small][col];
            let scaled: Vec<BigInt> = work[small].iter().map(|v| &q * v).collect();
            for (cell, delta) in work[big].iter_mut().zip(scaled) {
                *cell -= delta;
            }
        }
        let pivot = (0..work.len()).find(|&r| !used[r] && !work[r][col].is_zero());
        if let Some(p) = pivot {
            let (q, r) = (&goal[col] / &work[p][col], &goal[col] % &work[p][col]);
            if !r.is_zero() {
                return false;
            }
            for c in 0..cols {
                let delta = &q * &work[p][c];
                goal[c] -= delta;
            }
            used[p] = true;
        } else if !goal[col].is_zero() {
            return false;
        }
    }
    goal.iter().all(|v| v.is_zero())
}

/// Decide membership of `e` in the sum of the parts by assembling the
/// explicit truncated generator matrix in level-`depth` hull coordinates and
/// running the standalone solver.
pub fn oracle_membership(e: &GroupElement, parts: &[BranchSet], k_star: usize, depth: u32) -> bool {
    let raised = match e.raise_level(depth) {
        Ok(r) => r,
        Err(_) => return false,
    };
    let mut coords: BTreeSet<Generator> = BTreeSet::new();
    for (g, _) in raised.terms() {
        coords.insert(g.clone());
    }
    let mut columns: Vec<GroupElement> = Vec::new();
    for part in parts {
        for tuple in part.full_tuples(k_star) {
            for level in 0..=depth {
                let raised_y = GroupElement::generator(Generator::y(tuple.clone(), level))
                    .raise_level(depth)
                    .unwrap();
                for (g, _) in raised_y.terms() {
                    coords.insert(g.clone());
                }
                columns.push(raised_y);
            }
        }
    }
    // Unit x-columns for every occupied coordinate covered by some part.
    for coord in coords.clone() {
        if let Generator::X { .. } = coord {
            if parts.iter().any(|p| coord.in_group_of(p)) {
                columns.push(GroupElement::generator(coord.clone()));
            }
        }
    }
    let coord_index: BTreeMap<&Generator, usize> =
        coords.iter().enumerate().map(|(i, g)| (g, i)).collect();
    let to_row = |e: &GroupElement| -> Option<Vec<BigInt>> {
        let mut row = vec![BigInt::zero(); coord_index.len()];
        for (g, q) in e.terms() {
            if !q.denom().is_one() {
                return None;
            }
            row[coord_index[g]] = q.numer().clone();
        }
        Some(row)
    };
    let rows: Vec<Vec<BigInt>> = columns.iter().filter_map(&to_row).collect();
    let Some(target) = to_row(&raised) else {
        return false;
    };
    oracle_solve_integer(&rows, &target)
}

pub fn random_branch<R: Rng>(rng: &mut R, max_prefix: usize) -> Branch {
    let len = rng.gen_range(0..=max_prefix);
    let prefix: Vec<u8> = (0..len).map(|_| rng.gen_range(0..=1)).collect();
    Branch::new(prefix, rng.gen_range(0..=1))
}

pub fn random_set<R: Rng>(rng: &mut R, max_size: usize, max_prefix: usize) -> BranchSet {
    let size = rng.gen_range(1..=max_size);
    BranchSet::new((0..size).map(|_| random_branch(rng, max_prefix)))
}
