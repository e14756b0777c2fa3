//! Staged solving of downward equation chains `d_n = σ_n(d̄_{n+1})` in
//! complete metric algebras, and the minimal-exponent chain builder used to
//! rule out countable retracts of free groups.
//!
//! The stage-`k` table copies targets from level `k` up and evaluates the
//! terms downward; under the chain's perturbation hypotheses the tables
//! stabilize levelwise, the stabilization stage supplied by the chain's
//! modulus. Two complete, exactly computable algebras are built in: the ring
//! of dyadic-limit integers (arithmetic mod 2^precision) with affine terms,
//! and block-layered permutation groups with group-word terms.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;

use crate::freewords::{eval_word, GroupOracle, Symbol, Word};
use crate::metricspace::{dist_lt, DyadicDist, OmegaRep};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EqError {
    IllFormed(String),
    OracleFailure(String),
    /// The supplied modulus needs a deeper chain window than provided.
    ModulusExhausted {
        needed: usize,
        window: usize,
    },
    /// A sampled hypothesis check failed; names the clause.
    ClauseViolation {
        clause: &'static str,
        level: usize,
        detail: String,
    },
    /// A stage entry left the prescribed ball around its target.
    BallViolation {
        stage: usize,
        level: usize,
        slot: usize,
    },
    /// The root oracle cannot rule out any exponent.
    RootOracleUndecided(String),
}

impl fmt::Display for EqError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EqError::IllFormed(s) => write!(f, "ill-formed chain: {s}"),
            EqError::OracleFailure(s) => write!(f, "oracle failure: {s}"),
            EqError::ModulusExhausted { needed, window } => write!(
                f,
                "modulus exhausted: stage {needed} needed but the chain window is {window}"
            ),
            EqError::ClauseViolation {
                clause,
                level,
                detail,
            } => write!(f, "clause {clause} violated at level {level}: {detail}"),
            EqError::BallViolation { stage, level, slot } => write!(
                f,
                "stage {stage} entry at level {level}, slot {slot} leaves its target ball"
            ),
            EqError::RootOracleUndecided(s) => write!(f, "root oracle undecided: {s}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for EqError {}

/// A complete metric algebra presented operationally: exact evaluation of
/// terms at the oracle's working precision, exact dyadic distances, and a
/// sampler for perturbations within a ball.
pub trait MetricAlgebra {
    type Elem: Clone + PartialEq + fmt::Debug;
    type Term: Clone + fmt::Debug;

    fn eval(
        &self,
        term: &Self::Term,
        args: &BTreeMap<usize, Self::Elem>,
    ) -> Result<Self::Elem, EqError>;

    fn distance(&self, x: &Self::Elem, y: &Self::Elem) -> DyadicDist;

    fn sample_ball<R: Rng + ?Sized>(
        &self,
        center: &Self::Elem,
        radius: &BigRational,
        rng: &mut R,
    ) -> Self::Elem;
}

/// One level of a chain: slot ids, one term per slot (over the next level's
/// slots), one target per slot, and the level tolerance.
#[derive(Clone, Debug)]
pub struct ChainLevel<A: MetricAlgebra> {
    pub slots: Vec<usize>,
    pub terms: Vec<A::Term>,
    pub targets: Vec<A::Elem>,
    pub zeta: BigRational,
}

/// The stabilization modulus `(level, ε) → stage`.
pub type Modulus = Box<dyn Fn(usize, &BigRational) -> usize>;

/// A finite window of an equation chain with its stabilization modulus.
pub struct EquationChain<A: MetricAlgebra> {
    pub levels: Vec<ChainLevel<A>>,
    pub modulus: Modulus,
}

impl<A: MetricAlgebra> EquationChain<A> {
    /// The default modulus: the first level whose tolerance drops below ε.
    /// Valid whenever every term is non-expanding levelwise, which holds for
    /// both built-in oracles (integer affine maps contract dyadically; group
    /// words act blockwise).
    pub fn with_default_modulus(levels: Vec<ChainLevel<A>>) -> Self {
        let zetas: Vec<BigRational> = levels.iter().map(|l| l.zeta.clone()).collect();
        EquationChain {
            levels,
            modulus: Box::new(move |n, eps| {
                zetas
                    .iter()
                    .enumerate()
                    .position(|(m, z)| m > n && z < eps)
                    // One past the window marks "not certifiable here".
                    .unwrap_or(zetas.len() + 1)
            }),
        }
    }

    pub fn window(&self) -> usize {
        self.levels.len()
    }

    /// Structural hypotheses: pairwise-disjoint nonempty slot sets, term and
    /// target arities matching, strictly positive strictly decreasing
    /// tolerances.
    pub fn validate(&self) -> Result<(), EqError> {
        let mut seen = alloc::collections::BTreeSet::new();
        for (n, level) in self.levels.iter().enumerate() {
            if level.slots.is_empty() {
                return Err(EqError::IllFormed(alloc::format!("level {n} has no slots")));
            }
            for s in &level.slots {
                if !seen.insert(*s) {
                    return Err(EqError::IllFormed(alloc::format!(
                        "slot {s} reused at level {n}"
                    )));
                }
            }
            if level.terms.len() != level.slots.len() || level.targets.len() != level.slots.len() {
                return Err(EqError::IllFormed(alloc::format!(
                    "level {n} arity mismatch"
                )));
            }
            if !level.zeta.is_positive() {
                return Err(EqError::IllFormed(alloc::format!(
                    "tolerance at level {n} is not positive"
                )));
            }
            if n > 0 && level.zeta >= self.levels[n - 1].zeta {
                return Err(EqError::IllFormed(alloc::format!(
                    "tolerances must strictly decrease at level {n}"
                )));
            }
        }
        Ok(())
    }
}

/// The stage-`k` approximation table.
#[derive(Clone, Debug)]
pub struct StageTable<E> {
    pub stage: usize,
    /// `entries[n][t]` for every level `n` of the window.
    pub entries: Vec<Vec<E>>,
}

/// Build the stage-`k` table: targets from level `k` on, downward evaluation
/// below.
pub fn stage_approx<A: MetricAlgebra>(
    chain: &EquationChain<A>,
    oracle: &A,
    stage: usize,
) -> Result<StageTable<A::Elem>, EqError> {
    let window = chain.window();
    if stage > window {
        return Err(EqError::ModulusExhausted {
            needed: stage,
            window,
        });
    }
    let mut entries: Vec<Vec<A::Elem>> = alloc::vec![Vec::new(); window];
    for n in (0..window).rev() {
        if n >= stage {
            entries[n] = chain.levels[n].targets.clone();
        } else {
            // σ_n consumes the level-(n+1) values; at the top of the window
            // there is nothing to evaluate against, so targets are kept.
            if n + 1 >= window {
                entries[n] = chain.levels[n].targets.clone();
                continue;
            }
            let args: BTreeMap<usize, A::Elem> = chain.levels[n + 1]
                .slots
                .iter()
                .cloned()
                .zip(entries[n + 1].iter().cloned())
                .collect();
            let mut row = Vec::with_capacity(chain.levels[n].slots.len());
            for term in &chain.levels[n].terms {
                row.push(oracle.eval(term, &args)?);
            }
            entries[n] = row;
        }
    }
    Ok(StageTable { stage, entries })
}

/// Check that every table entry stays within its target's tolerance ball.
pub fn check_stage_balls<A: MetricAlgebra>(
    chain: &EquationChain<A>,
    oracle: &A,
    table: &StageTable<A::Elem>,
) -> Result<(), EqError> {
    for (n, row) in table.entries.iter().enumerate() {
        for (t, value) in row.iter().enumerate() {
            let d = oracle.distance(value, &chain.levels[n].targets[t]);
            if !d.is_zero() && !dist_lt(d, &chain.levels[n].zeta) {
                return Err(EqError::BallViolation {
                    stage: table.stage,
                    level: n,
                    slot: t,
                });
            }
        }
    }
    Ok(())
}

/// Options for [`solve_chain`]: how many perturbations to sample per level
/// for the hypothesis checks.
#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub perturbation_samples: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            perturbation_samples: 32,
        }
    }
}

/// A solved window: values per level, with equations certified exact below
/// `certified_levels` and every value inside its target's tolerance ball.
#[derive(Clone, Debug)]
pub struct Solution<E> {
    pub values: Vec<Vec<E>>,
    pub stage: usize,
    pub certified_levels: usize,
}

/// Solve the chain to the requested precision: sample the perturbation
/// hypothesis, take the stage given by the modulus, and certify the ball and
/// equation properties of the result.
pub fn solve_chain<A: MetricAlgebra, R: Rng + ?Sized>(
    chain: &EquationChain<A>,
    oracle: &A,
    precision_goal: &BigRational,
    options: &SolveOptions,
    rng: &mut R,
) -> Result<Solution<A::Elem>, EqError> {
    chain.validate()?;
    let window = chain.window();
    // Sampled check of the perturbation-stability hypothesis: values within
    // the level-(n+1) tolerance of the targets must map into the level-n
    // tolerance ball.
    for n in 0..window.saturating_sub(1) {
        let next = &chain.levels[n + 1];
        for _ in 0..options.perturbation_samples {
            let args: BTreeMap<usize, A::Elem> = next
                .slots
                .iter()
                .cloned()
                .zip(
                    next.targets
                        .iter()
                        .map(|d| oracle.sample_ball(d, &next.zeta, rng)),
                )
                .collect();
            for (t, term) in chain.levels[n].terms.iter().enumerate() {
                let image = oracle.eval(term, &args)?;
                let dist = oracle.distance(&image, &chain.levels[n].targets[t]);
                if !dist.is_zero() && !dist_lt(dist, &chain.levels[n].zeta) {
                    return Err(EqError::ClauseViolation {
                        clause: "(e)",
                        level: n,
                        detail: alloc::format!(
                            "perturbed image at slot {t} has distance {dist} >= {}",
                            chain.levels[n].zeta
                        ),
                    });
                }
            }
        }
    }
    // Per-level stabilization stages; levels whose stage exceeds the window
    // cannot be certified at this precision.
    let mut stage = 0usize;
    let mut certified_levels = 0usize;
    for n in 0..window {
        let m = (chain.modulus)(n, precision_goal);
        if m <= window {
            stage = stage.max(m);
            if certified_levels == n {
                certified_levels = n + 1;
            }
        }
    }
    if certified_levels == 0 {
        return Err(EqError::ModulusExhausted {
            needed: (chain.modulus)(0, precision_goal),
            window,
        });
    }
    let table = stage_approx(chain, oracle, stage)?;
    check_stage_balls(chain, oracle, &table)?;
    // Below the stage the equations hold exactly by construction; certify.
    for n in 0..stage.saturating_sub(1).min(window.saturating_sub(1)) {
        let args: BTreeMap<usize, A::Elem> = chain.levels[n + 1]
            .slots
            .iter()
            .cloned()
            .zip(table.entries[n + 1].iter().cloned())
            .collect();
        for (t, term) in chain.levels[n].terms.iter().enumerate() {
            let value = oracle.eval(term, &args)?;
            if value != table.entries[n][t] {
                return Err(EqError::OracleFailure(alloc::format!(
                    "solution fails its own equation at level {n}, slot {t}"
                )));
            }
        }
    }
    Ok(Solution {
        values: table.entries,
        stage,
        certified_levels: certified_levels.min(stage.saturating_sub(1)),
    })
}

// ---------------------------------------------------------------------------
// Built-in oracle: dyadic-limit integers (arithmetic modulo 2^precision).
// ---------------------------------------------------------------------------

/// The complete dyadic integer ring at a fixed working precision: elements
/// are residues mod 2^precision, distance `2^-v` with `v` the dyadic
/// valuation of the difference.
#[derive(Clone, Debug)]
pub struct DyadicIntOracle {
    pub precision: u32,
}

/// Affine term `coeff · x_slot + constant`.
#[derive(Clone, Debug)]
pub struct AffineTerm {
    pub coeff: BigInt,
    pub constant: BigInt,
    pub slot: usize,
}

impl DyadicIntOracle {
    pub fn new(precision: u32) -> Self {
        DyadicIntOracle { precision }
    }

    pub fn reduce(&self, value: &BigInt) -> BigInt {
        let modulus = BigInt::one() << self.precision;
        let r = value % &modulus;
        if r.is_negative() {
            r + modulus
        } else {
            r
        }
    }

    fn valuation(&self, value: &BigInt) -> Option<u32> {
        if value.is_zero() {
            return None;
        }
        let mut v = 0u32;
        let mut x = value.clone();
        let two = BigInt::from(2);
        while (&x % &two).is_zero() {
            x /= &two;
            v += 1;
        }
        Some(v)
    }
}

impl MetricAlgebra for DyadicIntOracle {
    type Elem = BigInt;
    type Term = AffineTerm;

    fn eval(
        &self,
        term: &Self::Term,
        args: &BTreeMap<usize, Self::Elem>,
    ) -> Result<Self::Elem, EqError> {
        let x = args.get(&term.slot).ok_or_else(|| {
            EqError::OracleFailure(alloc::format!("missing argument for slot {}", term.slot))
        })?;
        Ok(self.reduce(&(&term.coeff * x + &term.constant)))
    }

    fn distance(&self, x: &Self::Elem, y: &Self::Elem) -> DyadicDist {
        let diff = self.reduce(&(x - y));
        match self.valuation(&diff) {
            None => DyadicDist::Zero,
            Some(v) => DyadicDist::pow(v),
        }
    }

    fn sample_ball<R: Rng + ?Sized>(
        &self,
        center: &Self::Elem,
        radius: &BigRational,
        rng: &mut R,
    ) -> Self::Elem {
        // Smallest j with 2^-j < radius: perturbations of valuation >= j.
        let mut j = 0u32;
        while j <= self.precision {
            let weight = BigRational::new(BigInt::one(), BigInt::one() << j);
            if &weight < radius {
                break;
            }
            j += 1;
        }
        if j >= self.precision {
            return center.clone();
        }
        let span = 1u64 << (self.precision - j).min(16);
        let r = BigInt::from(rng.gen_range(0..span));
        self.reduce(&(center + (r << j)))
    }
}

/// Independent closed form for the affine chain `σ_n(x) = 2x + a_n` with a
/// finite coefficient window (zero tail): `Σ_{k≥n} 2^{k−n} a_k`.
pub fn affine_partial_sum(oracle: &DyadicIntOracle, coeffs: &[BigInt], n: usize) -> BigInt {
    let mut acc = BigInt::zero();
    for (k, a) in coeffs.iter().enumerate().skip(n) {
        acc += a << (k - n);
    }
    oracle.reduce(&acc)
}

/// Build the affine chain `σ_n(x) = 2x + a_n` with exact targets (the
/// partial sums) and tolerances `2^-n`.
pub fn affine_chain(oracle: &DyadicIntOracle, coeffs: &[BigInt]) -> EquationChain<DyadicIntOracle> {
    let window = coeffs.len();
    let levels = (0..window)
        .map(|n| ChainLevel {
            slots: alloc::vec![n],
            terms: alloc::vec![AffineTerm {
                coeff: BigInt::from(2),
                constant: coeffs[n].clone(),
                slot: n + 1,
            }],
            targets: alloc::vec![affine_partial_sum(oracle, coeffs, n)],
            zeta: BigRational::new(BigInt::one(), BigInt::one() << (n as u32 + 1)),
        })
        .collect();
    EquationChain::with_default_modulus(levels)
}

// ---------------------------------------------------------------------------
// Built-in oracle: block-layered permutation groups.
// ---------------------------------------------------------------------------

/// A permutation of the window that preserves every block of the layering:
/// the inverse limit of the per-block symmetric groups, truncated to the
/// represented blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPerm {
    pub images: Vec<u32>,
}

impl BlockPerm {
    pub fn identity(size: u32) -> Self {
        BlockPerm {
            images: (0..size).collect(),
        }
    }

    pub fn apply(&self, x: u32) -> u32 {
        self.images[x as usize]
    }
}

/// The block-layered permutation oracle: blocks are the gaps of the chain's
/// cutoffs, and distance is `2^-b` for the first block where two elements
/// differ.
#[derive(Clone, Debug)]
pub struct BlockPermOracle {
    rep: OmegaRep,
}

/// A group-word term: the word's variables are bound to slots or to
/// parameter elements.
#[derive(Clone, Debug)]
pub struct WordTerm {
    pub word: Word,
    pub slot_vars: BTreeMap<Symbol, usize>,
    pub params: BTreeMap<Symbol, BlockPerm>,
}

struct BlockPermGroup;

impl GroupOracle for BlockPermGroup {
    type Elem = BlockPerm;

    fn identity(&self) -> BlockPerm {
        BlockPerm { images: Vec::new() }
    }

    fn multiply(&self, a: &BlockPerm, b: &BlockPerm) -> BlockPerm {
        if a.images.is_empty() {
            return b.clone();
        }
        if b.images.is_empty() {
            return a.clone();
        }
        BlockPerm {
            images: b.images.iter().map(|&x| a.apply(x)).collect(),
        }
    }

    fn invert(&self, a: &BlockPerm) -> BlockPerm {
        let mut inv = alloc::vec![0u32; a.images.len()];
        for (i, &j) in a.images.iter().enumerate() {
            inv[j as usize] = i as u32;
        }
        BlockPerm { images: inv }
    }
}

impl BlockPermOracle {
    pub fn new(rep: OmegaRep) -> Self {
        BlockPermOracle { rep }
    }

    pub fn rep(&self) -> &OmegaRep {
        &self.rep
    }

    pub fn size(&self) -> u32 {
        self.rep.cutoff(self.rep.levels() - 1)
    }

    pub fn blocks(&self) -> usize {
        self.rep.levels()
    }

    fn block_range(&self, b: usize) -> (u32, u32) {
        let start = if b == 0 { 0 } else { self.rep.cutoff(b - 1) };
        (start, self.rep.cutoff(b))
    }

    /// Whether the table is a permutation preserving every block.
    pub fn validate(&self, p: &BlockPerm) -> Result<(), EqError> {
        if p.images.len() != self.size() as usize {
            return Err(EqError::OracleFailure(String::from(
                "permutation size does not match the layering",
            )));
        }
        for b in 0..self.blocks() {
            let (lo, hi) = self.block_range(b);
            let mut seen = alloc::collections::BTreeSet::new();
            for x in lo..hi {
                let y = p.apply(x);
                if y < lo || y >= hi || !seen.insert(y) {
                    return Err(EqError::OracleFailure(alloc::format!(
                        "table does not preserve block {b}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// The transposition of the first two points of a block (identity when
    /// the block is a singleton).
    pub fn block_swap(&self, b: usize) -> BlockPerm {
        let mut p = BlockPerm::identity(self.size());
        let (lo, hi) = self.block_range(b);
        if hi - lo >= 2 {
            p.images.swap(lo as usize, lo as usize + 1);
        }
        p
    }

    /// A uniformly random block-preserving permutation supported on blocks
    /// at or beyond `from_block`.
    pub fn random_deep_perm<R: Rng + ?Sized>(&self, from_block: usize, rng: &mut R) -> BlockPerm {
        let mut p = BlockPerm::identity(self.size());
        for b in from_block..self.blocks() {
            let (lo, hi) = self.block_range(b);
            // Fisher-Yates inside the block.
            for i in (lo + 1..hi).rev() {
                let j = rng.gen_range(lo..=i);
                p.images.swap(i as usize, j as usize);
            }
        }
        p
    }
}

impl MetricAlgebra for BlockPermOracle {
    type Elem = BlockPerm;
    type Term = WordTerm;

    fn eval(
        &self,
        term: &Self::Term,
        args: &BTreeMap<usize, Self::Elem>,
    ) -> Result<Self::Elem, EqError> {
        let mut assignment: BTreeMap<Symbol, BlockPerm> = term.params.clone();
        for (symbol, slot) in &term.slot_vars {
            let value = args.get(slot).ok_or_else(|| {
                EqError::OracleFailure(alloc::format!("missing argument for slot {slot}"))
            })?;
            assignment.insert(symbol.clone(), value.clone());
        }
        let result = eval_word(&term.word, &assignment, &BlockPermGroup)
            .map_err(|e| EqError::OracleFailure(alloc::format!("{e}")))?;
        let full = if result.images.is_empty() {
            BlockPerm::identity(self.size())
        } else {
            result
        };
        self.validate(&full)?;
        Ok(full)
    }

    fn distance(&self, x: &Self::Elem, y: &Self::Elem) -> DyadicDist {
        for b in 0..self.blocks() {
            let (lo, hi) = self.block_range(b);
            if (lo..hi).any(|p| x.apply(p) != y.apply(p)) {
                return DyadicDist::pow(b as u32);
            }
        }
        DyadicDist::Zero
    }

    fn sample_ball<R: Rng + ?Sized>(
        &self,
        center: &Self::Elem,
        radius: &BigRational,
        rng: &mut R,
    ) -> Self::Elem {
        let mut b = 0usize;
        loop {
            let weight = BigRational::new(BigInt::one(), BigInt::one() << (b as u32));
            if &weight < radius {
                break;
            }
            b += 1;
            if b >= self.blocks() {
                return center.clone();
            }
        }
        let deep = self.random_deep_perm(b, rng);
        BlockPermGroup.multiply(center, &deep)
    }
}

/// Build the word chain `σ_n(x) = x²·b_n` over the oracle's layering, with
/// near-identity parameters supported on block `n`, targets computed as the
/// exact backward orbit of the identity, and tolerances `2^-n`.
pub fn square_word_chain(oracle: &BlockPermOracle) -> EquationChain<BlockPermOracle> {
    let window = oracle.blocks();
    let group = BlockPermGroup;
    let x = Symbol::new("x");
    let b_sym = Symbol::new("b");
    let word = Word::from_letters(&[
        crate::freewords::Letter::new("x", 2),
        crate::freewords::Letter::new("b", 1),
    ]);
    // Backward-exact targets: top target is the identity.
    let mut targets: Vec<BlockPerm> = alloc::vec![BlockPerm::identity(oracle.size()); window];
    let params: Vec<BlockPerm> = (0..window)
        .map(|n| {
            if n == 0 {
                BlockPerm::identity(oracle.size())
            } else {
                oracle.block_swap(n)
            }
        })
        .collect();
    for n in (0..window.saturating_sub(1)).rev() {
        let next = targets[n + 1].clone();
        let squared = group.multiply(&next, &next);
        targets[n] = group.multiply(&squared, &params[n]);
    }
    let levels = (0..window)
        .map(|n| {
            let mut slot_vars = BTreeMap::new();
            slot_vars.insert(x.clone(), n + 1);
            let mut param_map = BTreeMap::new();
            param_map.insert(b_sym.clone(), params[n].clone());
            ChainLevel {
                slots: alloc::vec![n],
                terms: alloc::vec![WordTerm {
                    word: word.clone(),
                    slot_vars,
                    params: param_map,
                }],
                targets: alloc::vec![targets[n].clone()],
                zeta: BigRational::new(BigInt::one(), BigInt::one() << (n as u32 + 1)),
            }
        })
        .collect();
    EquationChain::with_default_modulus(levels)
}

// ---------------------------------------------------------------------------
// Minimal-exponent chain builder over free groups.
// ---------------------------------------------------------------------------

/// One stage of the anti-retract chain: the term is `x^exponent · parameter`,
/// chosen so that no element of the obstruction set is hit by any
/// substitution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AntiRetractStage {
    pub exponent: u32,
    pub parameter: Word,
    pub obstruction: Vec<Word>,
}

/// The minimal exponent `n > 1` such that `a·b⁻¹` has no n-th root for any
/// `a` in the obstruction set. Fails when some `a·b⁻¹` is the unit, which
/// has every root.
pub fn minimal_obstructing_exponent(
    obstruction: &[Word],
    parameter: &Word,
) -> Result<u32, EqError> {
    let b_inv = parameter.inverse();
    let shifted: Vec<Word> = obstruction.iter().map(|a| a.mul(&b_inv)).collect();
    if let Some(unit) = shifted.iter().position(|w| w.is_empty()) {
        return Err(EqError::RootOracleUndecided(alloc::format!(
            "obstruction element {} equals the parameter; every exponent has a root",
            obstruction[unit]
        )));
    }
    let bound = shifted.iter().map(|w| w.length()).max().unwrap_or(0) as u32 + 2;
    for n in 2..=bound {
        if shifted.iter().all(|w| w.nth_root(n).is_none()) {
            return Ok(n);
        }
    }
    Err(EqError::RootOracleUndecided(String::from(
        "no exponent within the length bound obstructs every element",
    )))
}

/// Build `stages` chain stages against the enumeration: stage `k`'s
/// obstruction set is the backward orbit of the k-th enumerated element
/// through the already-chosen terms, its parameter the next near-identity
/// element avoiding the obstruction, and its exponent minimal obstructing.
pub fn build_anti_retract_chain(
    enumeration: &[Word],
    near_identity: &[Word],
    stages: usize,
) -> Result<Vec<AntiRetractStage>, EqError> {
    let mut chain: Vec<AntiRetractStage> = Vec::with_capacity(stages);
    let mut cursor = 0usize;
    for k in 0..stages {
        let target = enumeration.get(k).cloned().unwrap_or_default();
        // Backward orbit: c_0 = a_k, c_{m+1} the unique root of c_m·b_m⁻¹.
        let mut current = Some(target);
        for stage in chain.iter() {
            current =
                current.and_then(|c| c.mul(&stage.parameter.inverse()).nth_root(stage.exponent));
        }
        let obstruction: Vec<Word> = current.into_iter().collect();
        let parameter = loop {
            let Some(candidate) = near_identity.get(cursor) else {
                return Err(EqError::RootOracleUndecided(String::from(
                    "near-identity sequence exhausted",
                )));
            };
            cursor += 1;
            if !candidate.is_empty() && !obstruction.contains(candidate) {
                break candidate.clone();
            }
        };
        let exponent = minimal_obstructing_exponent(&obstruction, &parameter)?;
        chain.push(AntiRetractStage {
            exponent,
            parameter,
            obstruction,
        });
    }
    Ok(chain)
}
