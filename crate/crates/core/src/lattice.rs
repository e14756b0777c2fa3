//! Exact integer-lattice kernel: Hermite normal form, Smith normal form,
//! rational solving, kernels, and divisibility queries over arbitrary-
//! precision integers. Shared by the membership, freeness, and embedding
//! modules.
//!
//! Matrices are small and dense at desk scale; everything is row-major
//! `Vec<Vec<BigInt>>` with unimodular transformations tracked where a caller
//! needs certificates.

#![allow(clippy::needless_range_loop)]

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Vec<BigInt>>,
}

impl IntMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            data: alloc::vec![alloc::vec![BigInt::zero(); cols]; rows],
        }
    }

    pub fn from_rows(data: Vec<Vec<BigInt>>) -> Self {
        let rows = data.len();
        let cols = data.first().map_or(0, |r| r.len());
        assert!(data.iter().all(|r| r.len() == cols), "ragged matrix");
        IntMatrix { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMatrix::zero(n, n);
        for i in 0..n {
            m.data[i][i] = BigInt::one();
        }
        m
    }

    pub fn at(&self, r: usize, c: usize) -> &BigInt {
        &self.data[r][c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: BigInt) {
        self.data[r][c] = v;
    }

    pub fn row(&self, r: usize) -> &[BigInt] {
        &self.data[r]
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        self.data.swap(a, b);
    }

    /// row[a] += k * row[b]
    fn add_multiple(&mut self, a: usize, b: usize, k: &BigInt) {
        if k.is_zero() {
            return;
        }
        for c in 0..self.cols {
            let delta = k * &self.data[b][c];
            self.data[a][c] += delta;
        }
    }

    fn negate_row(&mut self, r: usize) {
        for c in 0..self.cols {
            let v = -core::mem::take(&mut self.data[r][c]);
            self.data[r][c] = v;
        }
    }
}

/// Row-style Hermite normal form: returns `(hnf, transform)` with
/// `transform * self = hnf`, `transform` unimodular, `hnf` upper-staircase
/// with positive pivots and reduced entries above each pivot.
pub fn hermite_normal_form(matrix: &IntMatrix) -> (IntMatrix, IntMatrix) {
    let mut h = matrix.clone();
    let mut u = IntMatrix::identity(matrix.rows);
    let mut pivot_row = 0;
    for col in 0..h.cols {
        if pivot_row == h.rows {
            break;
        }
        // Euclidean elimination below the pivot row.
        loop {
            let mut best: Option<usize> = None;
            for r in pivot_row..h.rows {
                if !h.data[r][col].is_zero() {
                    let better = match best {
                        None => true,
                        Some(b) => h.data[r][col].abs() < h.data[b][col].abs(),
                    };
                    if better {
                        best = Some(r);
                    }
                }
            }
            let Some(best) = best else { break };
            h.swap_rows(pivot_row, best);
            u.swap_rows(pivot_row, best);
            let pivot = h.data[pivot_row][col].clone();
            let mut any_left = false;
            for r in (pivot_row + 1)..h.rows {
                if h.data[r][col].is_zero() {
                    continue;
                }
                let q = div_floor_big(&h.data[r][col], &pivot);
                h.add_multiple(r, pivot_row, &-&q);
                u.add_multiple(r, pivot_row, &-&q);
                if !h.data[r][col].is_zero() {
                    any_left = true;
                }
            }
            if !any_left {
                break;
            }
        }
        if h.data[pivot_row][col].is_zero() {
            continue;
        }
        if h.data[pivot_row][col].is_negative() {
            h.negate_row(pivot_row);
            u.negate_row(pivot_row);
        }
        // Reduce the entries above the pivot.
        let pivot = h.data[pivot_row][col].clone();
        for r in 0..pivot_row {
            let q = div_floor_big(&h.data[r][col], &pivot);
            h.add_multiple(r, pivot_row, &-&q);
            u.add_multiple(r, pivot_row, &-&q);
        }
        pivot_row += 1;
    }
    (h, u)
}

fn div_floor_big(a: &BigInt, b: &BigInt) -> BigInt {
    a.div_floor(b)
}

/// The pivot columns of a HNF matrix.
fn hnf_pivots(h: &IntMatrix) -> Vec<(usize, usize)> {
    let mut pivots = Vec::new();
    for r in 0..h.rows {
        if let Some(c) = (0..h.cols).find(|&c| !h.data[r][c].is_zero()) {
            pivots.push((r, c));
        }
    }
    pivots
}

pub fn rank(matrix: &IntMatrix) -> usize {
    let (h, _) = hermite_normal_form(matrix);
    hnf_pivots(&h).len()
}

/// Solve `x * matrix = target` for an integer row vector `x` (i.e. express
/// `target` in the row lattice). Returns the combination if one exists.
pub fn solve_integer(matrix: &IntMatrix, target: &[BigInt]) -> Option<Vec<BigInt>> {
    assert_eq!(matrix.cols, target.len());
    let (h, u) = hermite_normal_form(matrix);
    let mut residue: Vec<BigInt> = target.to_vec();
    let mut hnf_coeffs = alloc::vec![BigInt::zero(); matrix.rows];
    for (r, c) in hnf_pivots(&h) {
        let pivot = &h.data[r][c];
        let (q, rem) = residue[c].div_rem(pivot);
        if !rem.is_zero() {
            return None;
        }
        if !q.is_zero() {
            for col in 0..matrix.cols {
                let delta = &q * &h.data[r][col];
                residue[col] -= delta;
            }
            hnf_coeffs[r] = q;
        }
    }
    if residue.iter().any(|v| !v.is_zero()) {
        return None;
    }
    // x = hnf_coeffs * U expresses the target over the original rows.
    let mut x = alloc::vec![BigInt::zero(); matrix.rows];
    for r in 0..matrix.rows {
        if hnf_coeffs[r].is_zero() {
            continue;
        }
        for k in 0..matrix.rows {
            let delta = &hnf_coeffs[r] * &u.data[r][k];
            x[k] += delta;
        }
    }
    Some(x)
}

/// Solve `x * matrix = target` over the rationals. Returns the combination
/// if the target lies in the rational row span.
pub fn solve_rational(matrix: &IntMatrix, target: &[BigInt]) -> Option<Vec<BigRational>> {
    assert_eq!(matrix.cols, target.len());
    // Gaussian elimination on the transpose system matrixᵀ xᵀ = targetᵀ.
    let rows = matrix.cols;
    let cols = matrix.rows;
    let mut a: Vec<Vec<BigRational>> = (0..rows)
        .map(|r| {
            (0..cols)
                .map(|c| BigRational::from_integer(matrix.data[c][r].clone()))
                .collect()
        })
        .collect();
    let mut b: Vec<BigRational> = target
        .iter()
        .map(|v| BigRational::from_integer(v.clone()))
        .collect();
    let mut pivot_cols = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        let Some(p) = (row..rows).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(row, p);
        b.swap(row, p);
        let pivot = a[row][col].clone();
        for c in 0..cols {
            a[row][c] = &a[row][c] / &pivot;
        }
        b[row] = &b[row] / &pivot;
        for r in 0..rows {
            if r != row && !a[r][col].is_zero() {
                let factor = a[r][col].clone();
                for c in 0..cols {
                    let delta = &factor * &a[row][c];
                    a[r][c] -= delta;
                }
                let delta = &factor * &b[row];
                b[r] -= delta;
            }
        }
        pivot_cols.push(col);
        row += 1;
        if row == rows {
            break;
        }
    }
    // Inconsistent rows?
    for r in row..rows {
        if !b[r].is_zero() {
            return None;
        }
    }
    let mut x = alloc::vec![BigRational::zero(); cols];
    for (r, &col) in pivot_cols.iter().enumerate() {
        x[col] = b[r].clone();
    }
    Some(x)
}

/// Basis of the left integer kernel `{x : x * matrix = 0}`.
pub fn integer_kernel(matrix: &IntMatrix) -> Vec<Vec<BigInt>> {
    let (h, u) = hermite_normal_form(matrix);
    let r = hnf_pivots(&h).len();
    (r..matrix.rows).map(|i| u.data[i].clone()).collect()
}

/// Smith normal form: diagonal invariant factors `d_1 | d_2 | …` of the
/// matrix (zeros excluded), without the transform matrices.
pub fn smith_invariants(matrix: &IntMatrix) -> Vec<BigInt> {
    let mut m = matrix.clone();
    let mut out = Vec::new();
    let mut top = 0;
    let mut left = 0;
    while top < m.rows && left < m.cols {
        // Find a nonzero entry with minimal absolute value.
        let mut best: Option<(usize, usize)> = None;
        for r in top..m.rows {
            for c in left..m.cols {
                if !m.data[r][c].is_zero() {
                    let better = match &best {
                        None => true,
                        Some((br, bc)) => m.data[r][c].abs() < m.data[*br][*bc].abs(),
                    };
                    if better {
                        best = Some((r, c));
                    }
                }
            }
        }
        let Some((br, bc)) = best else { break };
        m.swap_rows(top, br);
        m.data.iter_mut().for_each(|row| row.swap(left, bc));
        // Clear the row and column; restart if a remainder shrinks below the
        // pivot somewhere.
        let mut dirty = true;
        while dirty {
            dirty = false;
            let pivot = m.data[top][left].clone();
            for r in (top + 1)..m.rows {
                if m.data[r][left].is_zero() {
                    continue;
                }
                let q = div_floor_big(&m.data[r][left], &pivot);
                m.add_multiple(r, top, &-&q);
                if !m.data[r][left].is_zero() {
                    m.swap_rows(top, r);
                    dirty = true;
                }
            }
            let pivot = m.data[top][left].clone();
            for c in (left + 1)..m.cols {
                if m.data[top][c].is_zero() {
                    continue;
                }
                let q = div_floor_big(&m.data[top][c], &pivot);
                for r in 0..m.rows {
                    let delta = &q * &m.data[r][left];
                    m.data[r][c] -= delta;
                }
                if !m.data[top][c].is_zero() {
                    m.data.iter_mut().for_each(|row| row.swap(left, c));
                    dirty = true;
                }
            }
        }
        // Divisibility fix-up: the pivot must divide every remaining entry.
        let pivot = m.data[top][left].clone();
        let mut fixed = false;
        'outer: for r in (top + 1)..m.rows {
            for c in (left + 1)..m.cols {
                if !(&m.data[r][c] % &pivot).is_zero() {
                    let one = BigInt::one();
                    m.add_multiple(top, r, &one);
                    fixed = true;
                    break 'outer;
                }
            }
        }
        if fixed {
            continue;
        }
        out.push(pivot.abs());
        top += 1;
        left += 1;
    }
    out
}

/// Divisibility order of `target` in the quotient by the row lattice: the
/// largest `d` among `divisors` such that `target = d·z + lattice` for some
/// integer `z`-vector, i.e. `target` is divisible by `d` modulo the lattice.
pub fn max_divisibility(
    matrix: &IntMatrix,
    target: &[BigInt],
    divisors: &[BigInt],
) -> Option<BigInt> {
    divisors
        .iter()
        .filter(|d| divisible_mod_lattice(matrix, target, d))
        .max()
        .cloned()
}

/// Whether `target ≡ d·z (mod row lattice)` has an integer solution `z`:
/// solved by augmenting the lattice rows with `d·identity`.
pub fn divisible_mod_lattice(matrix: &IntMatrix, target: &[BigInt], d: &BigInt) -> bool {
    let n = matrix.cols;
    let mut rows = matrix.data.clone();
    for i in 0..n {
        let mut row = alloc::vec![BigInt::zero(); n];
        row[i] = d.clone();
        rows.push(row);
    }
    solve_integer(&IntMatrix::from_rows(rows), target).is_some()
}
