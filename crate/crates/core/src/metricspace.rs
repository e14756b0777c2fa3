//! Dyadic ultrametrics on finite windows of permutations, layered by chains
//! of level sets, plus the weak-limit re-representation and the prefix norm
//! on finitely supported branch vectors.
//!
//! The infinite objects these metrics live on are only ever seen through a
//! finite window here. Every distance either comes back certified by the
//! window or as a typed [`MetricError::InsufficientDepth`]; the one blanket
//! exception is that comparing a value with itself is 0 by fiat (the caller
//! holding two equal windows is asserting they name the same object).

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::shygroup::Branch;

/// A dyadic distance value: 0, 2^-n, 1 (= 2^0), or 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DyadicDist {
    Zero,
    /// 2^-n for n >= 1; `pow(0)` is normalized to `One`.
    Pow(u32),
    One,
    Two,
}

impl DyadicDist {
    /// 2^-n, normalizing n = 0 to `One`.
    pub fn pow(n: u32) -> Self {
        if n == 0 {
            DyadicDist::One
        } else {
            DyadicDist::Pow(n)
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, DyadicDist::Zero)
    }

    /// Exact rational value.
    pub fn to_rational(&self) -> BigRational {
        match self {
            DyadicDist::Zero => BigRational::zero(),
            DyadicDist::Pow(n) => BigRational::new(1.into(), num_bigint::BigInt::from(1u8) << *n),
            DyadicDist::One => BigRational::one(),
            DyadicDist::Two => BigRational::from_integer(2.into()),
        }
    }

    fn rank(&self) -> (u8, i64) {
        match self {
            DyadicDist::Zero => (0, 0),
            DyadicDist::Pow(n) => (1, -(*n as i64)),
            DyadicDist::One => (1, 0),
            DyadicDist::Two => (1, 1),
        }
    }
}

impl PartialOrd for DyadicDist {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DyadicDist {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank().cmp(&other.rank())
    }
}

impl fmt::Display for DyadicDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DyadicDist::Zero => f.write_str("0"),
            DyadicDist::Pow(n) => write!(f, "2^-{n}"),
            DyadicDist::One => f.write_str("1"),
            DyadicDist::Two => f.write_str("2"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MetricError {
    /// The window does not certify the requested value.
    InsufficientDepth { detail: String },
    /// A sequence fails to stabilize pointwise on the requested window.
    NotWeaklyConvergent { point: u32 },
    /// A table is not a permutation of its window.
    NotAPermutation,
}

impl fmt::Display for MetricError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricError::InsufficientDepth { detail } => {
                write!(f, "insufficient depth: {detail}")
            }
            MetricError::NotWeaklyConvergent { point } => {
                write!(f, "not weakly convergent on window at point {point}")
            }
            MetricError::NotAPermutation => f.write_str("table is not a permutation"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for MetricError {}

/// A permutation of the window {0..depth-1} together with its inverse table:
/// the finite approximation to an automorphism of a countable structure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialAut {
    fwd: Vec<u32>,
    inv: Vec<u32>,
}

impl PartialAut {
    pub fn identity(depth: u32) -> Self {
        let fwd: Vec<u32> = (0..depth).collect();
        PartialAut {
            inv: fwd.clone(),
            fwd,
        }
    }

    /// Build from a forward table; the inverse is derived. Fails unless the
    /// table is a bijection of {0..len-1}.
    pub fn from_images(fwd: Vec<u32>) -> Result<Self, MetricError> {
        let n = fwd.len();
        let mut inv = alloc::vec![u32::MAX; n];
        for (i, &j) in fwd.iter().enumerate() {
            if (j as usize) >= n || inv[j as usize] != u32::MAX {
                return Err(MetricError::NotAPermutation);
            }
            inv[j as usize] = i as u32;
        }
        Ok(PartialAut { fwd, inv })
    }

    /// Identity outside the listed `i -> j` moves.
    pub fn from_moves(depth: u32, moves: &[(u32, u32)]) -> Result<Self, MetricError> {
        let mut fwd: Vec<u32> = (0..depth).collect();
        for &(i, j) in moves {
            if i >= depth || j >= depth {
                return Err(MetricError::NotAPermutation);
            }
            fwd[i as usize] = j;
        }
        PartialAut::from_images(fwd)
    }

    /// Swap two points, identity elsewhere.
    pub fn swap(depth: u32, a: u32, b: u32) -> Result<Self, MetricError> {
        PartialAut::from_moves(depth, &[(a, b), (b, a)])
    }

    pub fn depth(&self) -> u32 {
        self.fwd.len() as u32
    }

    pub fn image(&self, point: u32) -> u32 {
        self.fwd[point as usize]
    }

    pub fn preimage(&self, point: u32) -> u32 {
        self.inv[point as usize]
    }

    pub fn images(&self) -> &[u32] {
        &self.fwd
    }

    /// (self ∘ other)(x) = self(other(x)); both windows must match.
    pub fn compose(&self, other: &PartialAut) -> PartialAut {
        assert_eq!(self.depth(), other.depth(), "window mismatch");
        let fwd: Vec<u32> = other.fwd.iter().map(|&x| self.fwd[x as usize]).collect();
        PartialAut::from_images(fwd).expect("composition of permutations")
    }

    pub fn inverse(&self) -> PartialAut {
        PartialAut {
            fwd: self.inv.clone(),
            inv: self.fwd.clone(),
        }
    }

    /// Whether the window moves `R(ā) ⇔ R(f ā)` for every listed tuple that
    /// stays inside the window. A hook for restricting to automorphisms of a
    /// structure richer than the pure set.
    pub fn respects_relations(&self, tables: &[RelationTable]) -> bool {
        let depth = self.depth();
        for table in tables {
            for tuple in &table.tuples {
                if tuple.iter().any(|&x| x >= depth) {
                    continue;
                }
                let image: Vec<u32> = tuple.iter().map(|&x| self.image(x)).collect();
                if image.iter().all(|&x| x < depth) && !table.tuples.contains(&image) {
                    return false;
                }
                let pre: Vec<u32> = tuple.iter().map(|&x| self.preimage(x)).collect();
                if pre.iter().all(|&x| x < depth) && !table.tuples.contains(&pre) {
                    return false;
                }
            }
        }
        true
    }
}

/// A finite relation table over the ambient countable set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationTable {
    pub arity: usize,
    pub tuples: alloc::collections::BTreeSet<Vec<u32>>,
}

/// Whether the inverse tables participate in a metric. Dropping them gives
/// the endomorphism-semigroup variant of the same formulas.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricFlavor {
    /// Forward and inverse tables both compared.
    Automorphism,
    /// Forward tables only.
    Endomorphism,
}

/// An increasing chain of level sets `A_n = {0..cutoffs[n]-1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OmegaRep {
    cutoffs: Vec<u32>,
}

impl OmegaRep {
    pub fn new(cutoffs: Vec<u32>) -> Result<Self, MetricError> {
        if cutoffs.is_empty() || cutoffs[0] == 0 || cutoffs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MetricError::InsufficientDepth {
                detail: String::from("cutoffs must be strictly increasing and positive"),
            });
        }
        Ok(OmegaRep { cutoffs })
    }

    /// The canonical representation A_n = {0..n}.
    pub fn unit_steps(levels: u32) -> Self {
        OmegaRep {
            cutoffs: (1..=levels).collect(),
        }
    }

    /// Doubling representation A_n = {0..2^n - 1}.
    pub fn doubling(levels: u32) -> Self {
        OmegaRep {
            cutoffs: (0..levels).map(|n| 1u32 << n).collect(),
        }
    }

    pub fn levels(&self) -> usize {
        self.cutoffs.len()
    }

    pub fn cutoff(&self, level: usize) -> u32 {
        self.cutoffs[level]
    }

    pub fn cutoffs(&self) -> &[u32] {
        &self.cutoffs
    }

    /// Whether some represented level set separates `a` from `b`.
    fn separates(&self, a: u32, b: u32) -> bool {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        self.cutoffs.iter().any(|&c| lo < c && c <= hi)
    }
}

/// First-disagreement metric on permutation windows: sup of 2^-n over points
/// n where forward (or inverse) images differ.
pub fn d_aut(
    f: &PartialAut,
    g: &PartialAut,
    flavor: MetricFlavor,
) -> Result<DyadicDist, MetricError> {
    if f == g {
        return Ok(DyadicDist::Zero);
    }
    let window = f.depth().min(g.depth());
    for n in 0..window {
        if f.image(n) != g.image(n) {
            return Ok(DyadicDist::pow(n));
        }
        if flavor == MetricFlavor::Automorphism && f.preimage(n) != g.preimage(n) {
            return Ok(DyadicDist::pow(n));
        }
    }
    Err(MetricError::InsufficientDepth {
        detail: String::from("tables agree on the common window but are not equal"),
    })
}

enum LevelVerdict {
    Witnessed,
    Silent,
    Undetermined(String),
}

/// Layered metric: sup of 2^-n over levels n admitting a witness a ∈ A_n,
/// via a membership mismatch at some level (clause (a)) or a pointwise
/// disagreement inside A_n itself (clause (b)), for the pair or its inverses.
pub fn d_rep(
    f: &PartialAut,
    g: &PartialAut,
    rep: &OmegaRep,
    flavor: MetricFlavor,
) -> Result<DyadicDist, MetricError> {
    if f == g {
        return Ok(DyadicDist::Zero);
    }
    let window = f.depth().min(g.depth());
    for level in 0..rep.levels() {
        match d_rep_level(f, g, rep, flavor, level, window) {
            LevelVerdict::Witnessed => return Ok(DyadicDist::pow(level as u32)),
            LevelVerdict::Silent => {}
            LevelVerdict::Undetermined(detail) => {
                return Err(MetricError::InsufficientDepth { detail })
            }
        }
    }
    Err(MetricError::InsufficientDepth {
        detail: String::from("no represented level witnesses the pair"),
    })
}

fn d_rep_level(
    f: &PartialAut,
    g: &PartialAut,
    rep: &OmegaRep,
    flavor: MetricFlavor,
    level: usize,
    window: u32,
) -> LevelVerdict {
    let cutoff = rep.cutoff(level);
    let mut witnessed = false;
    let mut undetermined: Option<String> = None;
    let directions: &[bool] = match flavor {
        MetricFlavor::Automorphism => &[false, true],
        MetricFlavor::Endomorphism => &[false],
    };
    for a in 0..cutoff {
        if a >= window {
            undetermined.get_or_insert_with(|| {
                alloc::format!("point {a} of level {level} exceeds the table window")
            });
            continue;
        }
        for &inverse in directions {
            let (fa, ga) = if inverse {
                (f.preimage(a), g.preimage(a))
            } else {
                (f.image(a), g.image(a))
            };
            if fa == ga {
                continue;
            }
            if rep.separates(fa, ga) || (fa < cutoff && ga < cutoff) {
                witnessed = true;
            } else {
                // Images differ but no represented level tells them apart; a
                // deeper cutoff might, so this level's verdict is open.
                undetermined.get_or_insert_with(|| {
                    alloc::format!(
                        "images {fa},{ga} of point {a} are not separated by any represented level"
                    )
                });
            }
        }
    }
    if witnessed {
        LevelVerdict::Witnessed
    } else if let Some(detail) = undetermined {
        LevelVerdict::Undetermined(detail)
    } else {
        LevelVerdict::Silent
    }
}

/// Restriction metric: 2^-n for the least level n whose set A_n already sees
/// a disagreement of the pair (or their inverses).
pub fn d_rep_prime(
    f: &PartialAut,
    g: &PartialAut,
    rep: &OmegaRep,
    flavor: MetricFlavor,
) -> Result<DyadicDist, MetricError> {
    let sets: Vec<Vec<u32>> = rep.cutoffs().iter().map(|&c| (0..c).collect()).collect();
    d_rep_prime_on_sets(f, g, &sets, flavor)
}

/// As [`d_rep_prime`], over explicit level sets (used by derived
/// re-representations, whose sets need not be initial segments).
pub fn d_rep_prime_on_sets(
    f: &PartialAut,
    g: &PartialAut,
    sets: &[Vec<u32>],
    flavor: MetricFlavor,
) -> Result<DyadicDist, MetricError> {
    if f == g {
        return Ok(DyadicDist::Zero);
    }
    let window = f.depth().min(g.depth());
    for (level, set) in sets.iter().enumerate() {
        for &a in set {
            if a >= window {
                return Err(MetricError::InsufficientDepth {
                    detail: alloc::format!("point {a} of level {level} exceeds the table window"),
                });
            }
            let mut differs = f.image(a) != g.image(a);
            if flavor == MetricFlavor::Automorphism {
                differs = differs || f.preimage(a) != g.preimage(a);
            }
            if differs {
                return Ok(DyadicDist::pow(level as u32));
            }
        }
    }
    Err(MetricError::InsufficientDepth {
        detail: String::from("restrictions agree on every represented level"),
    })
}

/// The re-representation extracted from a weakly converging sequence: level n
/// keeps the points of A_n whose forward and inverse images are constant
/// across the tail of the sequence from index n on.
#[derive(Clone, Debug)]
pub struct DerivedRep {
    sets: Vec<Vec<u32>>,
}

impl DerivedRep {
    /// Level sets, increasing with the level.
    pub fn sets(&self) -> &[Vec<u32>] {
        &self.sets
    }

    pub fn levels(&self) -> usize {
        self.sets.len()
    }

    /// Relabelled cutoff view: merges levels with equal sets, so the cutoffs
    /// are strictly increasing. Returns the relabelling along with the chain.
    pub fn to_omega_rep(&self) -> Option<(OmegaRep, Vec<u32>)> {
        // Only available when every set is an initial segment after sorting
        // by first appearance; we relabel points in order of first level.
        let mut label: BTreeMap<u32, u32> = BTreeMap::new();
        let mut next = 0u32;
        let mut cutoffs = Vec::new();
        for set in &self.sets {
            for &a in set {
                label.entry(a).or_insert_with(|| {
                    let l = next;
                    next += 1;
                    l
                });
            }
            if cutoffs.last() != Some(&next) && next > 0 {
                cutoffs.push(next);
            }
        }
        let relabel: Vec<u32> = label.into_keys().collect();
        OmegaRep::new(cutoffs).ok().map(|rep| (rep, relabel))
    }
}

/// Extract the derived representation from a finite window of a weakly
/// converging sequence. `depth` is the set of points that must be covered by
/// some certified level; a point that keeps moving to the end of the window
/// is reported as a convergence failure.
pub fn derive_rep(
    fs: &[PartialAut],
    rep: &OmegaRep,
    depth: u32,
) -> Result<DerivedRep, MetricError> {
    if fs.is_empty() {
        return Err(MetricError::InsufficientDepth {
            detail: String::from("empty sequence"),
        });
    }
    let window = fs.iter().map(|f| f.depth()).min().unwrap();
    if depth > window {
        return Err(MetricError::InsufficientDepth {
            detail: alloc::format!("requested depth {depth} exceeds table window {window}"),
        });
    }
    // Levels beyond len-2 have an empty certified tail.
    let certified_levels = rep.levels().min(fs.len().saturating_sub(1));
    let mut sets = Vec::with_capacity(certified_levels);
    for n in 0..certified_levels {
        let cutoff = rep.cutoff(n).min(window);
        let mut set = Vec::new();
        for a in 0..cutoff {
            let stable = (n + 1..fs.len()).all(|m| {
                fs[m].image(a) == fs[n].image(a) && fs[m].preimage(a) == fs[n].preimage(a)
            });
            if stable {
                set.push(a);
            }
        }
        sets.push(set);
    }
    for a in 0..depth {
        if !sets.iter().any(|s| s.contains(&a)) {
            return Err(MetricError::NotWeaklyConvergent { point: a });
        }
    }
    Ok(DerivedRep { sets })
}

/// Prefix norm on finitely supported rational branch vectors: 2^-n for the
/// least n at which some length-n prefix isolates a nonzero coefficient sum.
pub fn norm121(vector: &BTreeMap<Branch, BigRational>) -> DyadicDist {
    let support: Vec<(&Branch, &BigRational)> =
        vector.iter().filter(|(_, q)| !q.is_zero()).collect();
    if support.is_empty() {
        return DyadicDist::Zero;
    }
    let max_split = support
        .iter()
        .flat_map(|(b1, _)| support.iter().map(move |(b2, _)| b1.split_depth(b2)))
        .max()
        .unwrap_or(0);
    for n in 0..=(max_split + 1) {
        let mut sums: BTreeMap<Vec<u8>, BigRational> = BTreeMap::new();
        for (branch, coeff) in &support {
            let prefix = branch.restrict(n);
            *sums.entry(prefix).or_insert_with(BigRational::zero) += *coeff;
        }
        if sums.values().any(|s| !s.is_zero()) {
            return DyadicDist::pow(n as u32);
        }
    }
    unreachable!("nonzero vector must be isolated once all branches split")
}

/// Ultrametric distance induced by [`norm121`]: ‖x − y‖.
pub fn dist121(x: &BTreeMap<Branch, BigRational>, y: &BTreeMap<Branch, BigRational>) -> DyadicDist {
    let mut diff = x.clone();
    for (branch, coeff) in y {
        let entry = diff.entry(branch.clone()).or_insert_with(BigRational::zero);
        *entry -= coeff;
        if entry.is_zero() {
            diff.remove(branch);
        }
    }
    norm121(&diff)
}

/// Convenience check `dist < tolerance` against an exact rational tolerance.
pub fn dist_lt(dist: DyadicDist, tolerance: &BigRational) -> bool {
    tolerance.is_positive() && dist.to_rational() < *tolerance
}
