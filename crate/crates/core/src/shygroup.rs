//! The branch-indexed abelian group presentations: eventually-constant
//! binary branches, the x/y generator families, the defining relations
//! `(n!)·y_{η̄,n+1} = y_{η̄,n} + Σ_m x_{m,η̄_m,η_m↾n}`, level-canonical normal
//! forms in the divisible hull, and exact membership in the subgroups carved
//! out by finite branch sets.
//!
//! Coefficients are exact rationals throughout; factorial products grow fast
//! enough that nothing narrower would be sound.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// An eventually constant infinite binary sequence, stored canonically as a
/// finite prefix that does not end in the tail bit, plus the tail bit.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Branch {
    prefix: Vec<u8>,
    tail: u8,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ShyError {
    /// The requested decision is not certified at the given truncation.
    DepthTooSmall { detail: String },
    /// Text failed to parse as a branch, generator, or element.
    Malformed(String),
}

impl fmt::Display for ShyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShyError::DepthTooSmall { detail } => write!(f, "depth too small: {detail}"),
            ShyError::Malformed(s) => write!(f, "malformed literal: {s}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ShyError {}

impl Branch {
    /// Canonicalize and build: trailing tail bits are stripped from the
    /// prefix so each branch has exactly one representation.
    pub fn new(mut prefix: Vec<u8>, tail: u8) -> Self {
        assert!(tail <= 1 && prefix.iter().all(|&b| b <= 1), "bits only");
        while prefix.last() == Some(&tail) {
            prefix.pop();
        }
        Branch { prefix, tail }
    }

    /// The constant branch `bit^ω`.
    pub fn constant(bit: u8) -> Self {
        Branch::new(Vec::new(), bit)
    }

    pub fn prefix(&self) -> &[u8] {
        &self.prefix
    }

    pub fn tail(&self) -> u8 {
        self.tail
    }

    pub fn bit_at(&self, i: usize) -> u8 {
        *self.prefix.get(i).unwrap_or(&self.tail)
    }

    /// The first `n` bits as a finite string.
    pub fn restrict(&self, n: usize) -> Vec<u8> {
        (0..n).map(|i| self.bit_at(i)).collect()
    }

    /// Length of the longest common prefix with `other` (the first position
    /// where the two branches differ). Equal branches never split; callers
    /// must not ask.
    pub fn split_depth(&self, other: &Branch) -> usize {
        if self == other {
            return 0;
        }
        let mut i = 0;
        loop {
            if self.bit_at(i) != other.bit_at(i) {
                return i;
            }
            i += 1;
        }
    }

    /// Whether `prefix` is an initial segment of this branch.
    pub fn has_prefix(&self, prefix: &[u8]) -> bool {
        prefix.iter().enumerate().all(|(i, &b)| self.bit_at(i) == b)
    }

    /// Depth from which the branch is constant: the prefix length.
    pub fn settle_depth(&self) -> usize {
        self.prefix.len()
    }

    /// Parse the `101*0` literal (prefix `101`, tail `0`). Non-canonical
    /// literals are accepted and canonicalized.
    pub fn parse(text: &str) -> Result<Self, ShyError> {
        let (prefix_text, tail_text) = text
            .split_once('*')
            .ok_or_else(|| ShyError::Malformed(String::from(text)))?;
        let parse_bits = |s: &str| -> Result<Vec<u8>, ShyError> {
            s.chars()
                .map(|c| match c {
                    '0' => Ok(0),
                    '1' => Ok(1),
                    _ => Err(ShyError::Malformed(String::from(text))),
                })
                .collect()
        };
        let prefix = parse_bits(prefix_text)?;
        let tail = match tail_text {
            "0" => 0,
            "1" => 1,
            _ => return Err(ShyError::Malformed(String::from(text))),
        };
        Ok(Branch::new(prefix, tail))
    }

    /// Whether the literal for this branch is already canonical.
    pub fn is_canonical_literal(text: &str) -> bool {
        match Branch::parse(text) {
            Ok(branch) => alloc::format!("{branch}") == text,
            Err(_) => false,
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.prefix {
            write!(f, "{b}")?;
        }
        write!(f, "*{}", self.tail)
    }
}

/// A tuple of branches indexed by `{0..k*}` (full, for y-generators) or by
/// `{0..k*} \ {m}` (omitting one slot, for x-generators).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BranchTuple {
    entries: Vec<Branch>,
    omitted: Option<usize>,
}

impl BranchTuple {
    /// Full tuple over `{0..k*}`.
    pub fn full(entries: Vec<Branch>) -> Self {
        assert!(!entries.is_empty(), "k* >= 0 means at least one slot");
        BranchTuple {
            entries,
            omitted: None,
        }
    }

    /// Tuple over `{0..k*} \ {m}`; `entries` lists the remaining slots in
    /// increasing index order (possibly empty when k* = 0).
    pub fn omitting(m: usize, entries: Vec<Branch>) -> Self {
        assert!(m <= entries.len(), "omitted index must lie in 0..=k*");
        BranchTuple {
            entries,
            omitted: Some(m),
        }
    }

    pub fn k_star(&self) -> usize {
        match self.omitted {
            None => self.entries.len() - 1,
            Some(_) => self.entries.len(),
        }
    }

    pub fn omitted(&self) -> Option<usize> {
        self.omitted
    }

    pub fn entries(&self) -> &[Branch] {
        &self.entries
    }

    /// The branch at absolute index `i` of the domain.
    pub fn at(&self, i: usize) -> &Branch {
        match self.omitted {
            None => &self.entries[i],
            Some(m) => {
                assert!(i != m, "index {i} is omitted");
                if i < m {
                    &self.entries[i]
                } else {
                    &self.entries[i - 1]
                }
            }
        }
    }

    /// Restrict a full tuple to `{0..k*} \ {m}`.
    pub fn omit(&self, m: usize) -> BranchTuple {
        assert!(self.omitted.is_none(), "already restricted");
        assert!(m <= self.k_star());
        let entries = self
            .entries
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != m)
            .map(|(_, b)| b.clone())
            .collect();
        BranchTuple::omitting(m, entries)
    }

    /// Whether every branch of the tuple belongs to `set`.
    pub fn within(&self, set: &BranchSet) -> bool {
        self.entries.iter().all(|b| set.contains(b))
    }

    pub fn map_branches(&self, f: impl Fn(&Branch) -> Branch) -> BranchTuple {
        BranchTuple {
            entries: self.entries.iter().map(f).collect(),
            omitted: self.omitted,
        }
    }
}

/// Generators of the presentation.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Generator {
    /// `x_{m,η̄,ν}`: slot index, tuple omitting that slot, finite bit string.
    X {
        m: usize,
        tuple: BranchTuple,
        prefix: Vec<u8>,
    },
    /// `y_{η̄,n}`: full tuple and level.
    Y { tuple: BranchTuple, level: u32 },
}

impl Generator {
    pub fn x(m: usize, tuple: BranchTuple, prefix: Vec<u8>) -> Self {
        assert_eq!(tuple.omitted(), Some(m), "x-tuple must omit exactly m");
        Generator::X { m, tuple, prefix }
    }

    pub fn y(tuple: BranchTuple, level: u32) -> Self {
        assert!(tuple.omitted().is_none(), "y-tuple must be full");
        Generator::Y { tuple, level }
    }

    pub fn k_star(&self) -> usize {
        match self {
            Generator::X { tuple, .. } | Generator::Y { tuple, .. } => tuple.k_star(),
        }
    }

    pub fn level(&self) -> Option<u32> {
        match self {
            Generator::X { .. } => None,
            Generator::Y { level, .. } => Some(*level),
        }
    }

    /// Whether the generator is one of the defining generators of `G_U`.
    pub fn in_group_of(&self, set: &BranchSet) -> bool {
        match self {
            Generator::X { tuple, .. } | Generator::Y { tuple, .. } => tuple.within(set),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn bits(prefix: &[u8]) -> String {
            prefix
                .iter()
                .map(|b| if *b == 0 { '0' } else { '1' })
                .collect()
        }
        fn tuple_text(tuple: &BranchTuple) -> String {
            let parts: Vec<String> = tuple
                .entries()
                .iter()
                .map(|b| alloc::format!("{b}"))
                .collect();
            parts.join(",")
        }
        match self {
            Generator::X { m, tuple, prefix } => {
                write!(f, "x[{m}; {}; {}]", tuple_text(tuple), bits(prefix))
            }
            Generator::Y { tuple, level } => {
                write!(f, "y[{}; {level}]", tuple_text(tuple))
            }
        }
    }
}

/// A finite set of branches, optionally carrying a disjoint excluded set `u`
/// (the `(U, u)` pairs of the quotient constructions travel together).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BranchSet {
    branches: BTreeSet<Branch>,
    excluded: Option<BTreeSet<Branch>>,
}

impl BranchSet {
    pub fn new(branches: impl IntoIterator<Item = Branch>) -> Self {
        BranchSet {
            branches: branches.into_iter().collect(),
            excluded: None,
        }
    }

    pub fn with_excluded(
        branches: impl IntoIterator<Item = Branch>,
        excluded: impl IntoIterator<Item = Branch>,
    ) -> Result<Self, ShyError> {
        let branches: BTreeSet<Branch> = branches.into_iter().collect();
        let excluded: BTreeSet<Branch> = excluded.into_iter().collect();
        if branches.intersection(&excluded).next().is_some() {
            return Err(ShyError::Malformed(String::from(
                "excluded set must be disjoint from the branch set",
            )));
        }
        Ok(BranchSet {
            branches,
            excluded: Some(excluded),
        })
    }

    pub fn contains(&self, branch: &Branch) -> bool {
        self.branches.contains(branch)
    }

    pub fn branches(&self) -> impl Iterator<Item = &Branch> {
        self.branches.iter()
    }

    pub fn excluded(&self) -> Option<&BTreeSet<Branch>> {
        self.excluded.as_ref()
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn union(&self, other: &BranchSet) -> BranchSet {
        BranchSet::new(self.branches.iter().chain(other.branches()).cloned())
    }

    pub fn insert(&mut self, branch: Branch) {
        self.branches.insert(branch);
    }

    pub fn sorted(&self) -> Vec<Branch> {
        self.branches.iter().cloned().collect()
    }

    /// All full `(k*+1)`-tuples over the set, in lexicographic order on the
    /// branch literals.
    pub fn full_tuples(&self, k_star: usize) -> Vec<BranchTuple> {
        let base = self.sorted();
        let mut out = Vec::new();
        if base.is_empty() {
            return out;
        }
        let width = k_star + 1;
        let mut idx = alloc::vec![0usize; width];
        loop {
            out.push(BranchTuple::full(
                idx.iter().map(|&i| base[i].clone()).collect(),
            ));
            let mut pos = width;
            loop {
                if pos == 0 {
                    return out;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < base.len() {
                    break;
                }
                idx[pos] = 0;
            }
        }
    }
}

/// The parts whose generated subgroups sum to `G_{U,u}`: one part
/// `U ∪ (u \ {η})` per `η ∈ u`. The degenerate `u = ∅` is read as `G_U`.
pub fn quotient_parts(base: &BranchSet, excluded: &BranchSet) -> Vec<BranchSet> {
    if excluded.is_empty() {
        return alloc::vec![base.clone()];
    }
    excluded
        .branches()
        .map(|eta| {
            BranchSet::new(
                base.branches()
                    .cloned()
                    .chain(excluded.branches().filter(|b| *b != eta).cloned()),
            )
        })
        .collect()
}

/// A finitely supported rational combination of generators: an element of
/// the divisible hull. Mixed y-levels are allowed in transit; the canonical
/// form (all y-generators at one level) is produced by [`GroupElement::raise_level`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroupElement {
    coeffs: BTreeMap<Generator, BigRational>,
}

impl GroupElement {
    pub fn zero() -> Self {
        GroupElement::default()
    }

    pub fn generator(g: Generator) -> Self {
        GroupElement::from_terms([(g, BigRational::one())])
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Generator, BigRational)>) -> Self {
        let mut coeffs = BTreeMap::new();
        for (g, q) in terms {
            if q.is_zero() {
                continue;
            }
            let entry = coeffs.entry(g).or_insert_with(BigRational::zero);
            *entry += q;
        }
        coeffs.retain(|_, q| !q.is_zero());
        GroupElement { coeffs }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Generator, &BigRational)> {
        self.coeffs.iter()
    }

    pub fn coefficient(&self, g: &Generator) -> BigRational {
        self.coeffs
            .get(g)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn support_len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn add(&self, other: &GroupElement) -> GroupElement {
        let mut coeffs = self.coeffs.clone();
        for (g, q) in &other.coeffs {
            let entry = coeffs.entry(g.clone()).or_insert_with(BigRational::zero);
            *entry += q;
        }
        coeffs.retain(|_, q| !q.is_zero());
        GroupElement { coeffs }
    }

    pub fn neg(&self) -> GroupElement {
        GroupElement {
            coeffs: self.coeffs.iter().map(|(g, q)| (g.clone(), -q)).collect(),
        }
    }

    pub fn sub(&self, other: &GroupElement) -> GroupElement {
        self.add(&other.neg())
    }

    pub fn scale(&self, by: &BigRational) -> GroupElement {
        if by.is_zero() {
            return GroupElement::zero();
        }
        GroupElement {
            coeffs: self
                .coeffs
                .iter()
                .map(|(g, q)| (g.clone(), q * by))
                .collect(),
        }
    }

    pub fn scale_int(&self, by: i64) -> GroupElement {
        self.scale(&BigRational::from_integer(by.into()))
    }

    /// Largest y-level occurring (None when no y-generator does).
    pub fn level_bound(&self) -> Option<u32> {
        self.coeffs.keys().filter_map(|g| g.level()).max()
    }

    /// Longest x-prefix occurring.
    pub fn max_prefix_len(&self) -> usize {
        self.coeffs
            .keys()
            .filter_map(|g| match g {
                Generator::X { prefix, .. } => Some(prefix.len()),
                Generator::Y { .. } => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Whether all coefficients are integers.
    pub fn is_integral(&self) -> bool {
        self.coeffs.values().all(|q| q.denom().is_one())
    }

    /// Rewrite every y-generator up to level `target` through the relations
    /// `y_{η̄,n} = n!·y_{η̄,n+1} − Σ_m x_{m,η̄_m,η_m↾n}`, yielding the unique
    /// level-canonical form in the hull basis.
    pub fn raise_level(&self, target: u32) -> Result<GroupElement, ShyError> {
        if let Some(bound) = self.level_bound() {
            if bound > target {
                return Err(ShyError::DepthTooSmall {
                    detail: alloc::format!("element has level {bound}, cannot lower to {target}"),
                });
            }
        }
        let mut out = BTreeMap::new();
        for (g, q) in &self.coeffs {
            match g {
                Generator::X { .. } => {
                    let entry = out.entry(g.clone()).or_insert_with(BigRational::zero);
                    *entry += q;
                }
                Generator::Y { tuple, level } => {
                    // Accumulated factor ∏_{j=level..n-1} j! when reaching
                    // level n; the x-payload at step j carries the factor up
                    // to j.
                    let mut factor = BigRational::one();
                    for j in *level..target {
                        let minus = -(q * &factor);
                        for m in 0..=tuple.k_star() {
                            let x =
                                Generator::x(m, tuple.omit(m), tuple.at(m).restrict(j as usize));
                            let entry = out.entry(x).or_insert_with(BigRational::zero);
                            *entry += &minus;
                        }
                        factor *= BigRational::from_integer(factorial(j));
                    }
                    let y = Generator::y(tuple.clone(), target);
                    let entry = out.entry(y).or_insert_with(BigRational::zero);
                    *entry += q * &factor;
                }
            }
        }
        out.retain(|_, q| !q.is_zero());
        Ok(GroupElement { coeffs: out })
    }

    /// Exact equality in the hull: compare level-canonical forms at a common
    /// level.
    pub fn equals(&self, other: &GroupElement) -> bool {
        let level = self
            .level_bound()
            .into_iter()
            .chain(other.level_bound())
            .max()
            .unwrap_or(0);
        let a = self.raise_level(level).expect("raising to the max level");
        let b = other.raise_level(level).expect("raising to the max level");
        a.coeffs == b.coeffs
    }

    /// Inverse of [`GroupElement::raise_level`]: rewrite the y-generators one
    /// level down via `y_{η̄,n+1} = (y_{η̄,n} + Σ_m x_{m,η̄_m,η_m↾n}) / n!`,
    /// producing coordinates at level `from - 1`. Exercises the relations in
    /// the opposite direction; fractions appear and must cancel for elements
    /// that genuinely live at the lower level.
    pub fn lower_level_once(&self) -> Option<GroupElement> {
        let from = self.level_bound()?;
        if from == 0 {
            return None;
        }
        let n = from - 1;
        let inv_fact = BigRational::new(BigInt::one(), factorial(n));
        let mut out = BTreeMap::new();
        for (g, q) in &self.coeffs {
            match g {
                Generator::Y { tuple, level } if *level == from => {
                    let scaled = q * &inv_fact;
                    let y = Generator::y(tuple.clone(), n);
                    *out.entry(y).or_insert_with(BigRational::zero) += &scaled;
                    for m in 0..=tuple.k_star() {
                        let x = Generator::x(m, tuple.omit(m), tuple.at(m).restrict(n as usize));
                        *out.entry(x).or_insert_with(BigRational::zero) += &scaled;
                    }
                }
                _ => {
                    *out.entry(g.clone()).or_insert_with(BigRational::zero) += q;
                }
            }
        }
        out.retain(|_, q| !q.is_zero());
        Some(GroupElement { coeffs: out })
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return f.write_str("0");
        }
        // y-generators first, then x by slot/tuple/prefix.
        let mut items: Vec<(&Generator, &BigRational)> = self.coeffs.iter().collect();
        items.sort_by_key(|(g, _)| match g {
            Generator::Y { .. } => 0,
            Generator::X { .. } => 1,
        });
        for (i, (g, q)) in items.iter().enumerate() {
            if i == 0 {
                if *q == &BigRational::one() {
                    write!(f, "{g}")?;
                } else {
                    write!(f, "{q} {g}")?;
                }
            } else if q.is_negative() {
                let abs = -(*q).clone();
                if abs.is_one() {
                    write!(f, " - {g}")?;
                } else {
                    write!(f, " - {abs} {g}")?;
                }
            } else if q.is_one() {
                write!(f, " + {g}")?;
            } else {
                write!(f, " + {q} {g}")?;
            }
        }
        Ok(())
    }
}

pub fn factorial(n: u32) -> BigInt {
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= BigInt::from(k);
    }
    acc
}

/// Product of factorials `∏_{j=from}^{to-1} j!` — the coefficient picked up
/// by raising a y-generator from level `from` to level `to`.
pub fn factorial_product(from: u32, to: u32) -> BigInt {
    let mut acc = BigInt::one();
    for j in from..to {
        acc *= factorial(j);
    }
    acc
}

/// The defining relator at `(η̄, n)`:
/// `n!·y_{η̄,n+1} − y_{η̄,n} − Σ_{m≤k*} x_{m,η̄_m,η_m↾n}`, which is 0 in G.
pub fn relation(tuple: &BranchTuple, n: u32) -> GroupElement {
    assert!(tuple.omitted().is_none(), "relators take full tuples");
    let mut terms = alloc::vec![
        (
            Generator::y(tuple.clone(), n + 1),
            BigRational::from_integer(factorial(n)),
        ),
        (Generator::y(tuple.clone(), n), -BigRational::one()),
    ];
    for m in 0..=tuple.k_star() {
        terms.push((
            Generator::x(m, tuple.omit(m), tuple.at(m).restrict(n as usize)),
            -BigRational::one(),
        ));
    }
    GroupElement::from_terms(terms)
}

/// A positive membership certificate: an integer combination of subgroup
/// generators (tagged with the part that contributes each term, for sums).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MemberCert {
    pub combination: Vec<(usize, Generator, BigInt)>,
}

/// A refusal: the first basis coordinate that cannot be produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Obstruction {
    pub coordinate: Generator,
    pub coefficient: BigRational,
    pub reason: ObstructionReason,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ObstructionReason {
    /// No part's branch set covers the coordinate's tuple.
    Uncovered,
    /// The coordinate carries a non-integer coefficient.
    NonIntegral,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Membership {
    Member(MemberCert),
    NotMember(Obstruction),
}

impl Membership {
    pub fn is_member(&self) -> bool {
        matches!(self, Membership::Member(_))
    }
}

/// Decide membership of `element` in `G_U` at the given truncation depth.
///
/// The element is lifted to level-`depth` hull coordinates; since the
/// level-`depth` basis generators are themselves generators of `G_U`, the
/// decision reduces to coverage of every coordinate by `U` and integrality.
/// The truncation is exact as long as the element fits strictly inside the
/// depth (level ≤ depth, prefixes < depth), which the entry guard enforces.
pub fn member_g(
    element: &GroupElement,
    set: &BranchSet,
    depth: u32,
) -> Result<Membership, ShyError> {
    member_sum(element, core::slice::from_ref(set), depth)
}

/// Decide membership of `element` in `G_{U_0} + … + G_{U_r}` at the given
/// truncation depth, with a per-part certificate.
pub fn member_sum(
    element: &GroupElement,
    parts: &[BranchSet],
    depth: u32,
) -> Result<Membership, ShyError> {
    if let Some(bound) = element.level_bound() {
        if bound > depth {
            return Err(ShyError::DepthTooSmall {
                detail: alloc::format!("element level {bound} exceeds depth {depth}"),
            });
        }
    }
    if element.max_prefix_len() >= depth as usize {
        return Err(ShyError::DepthTooSmall {
            detail: alloc::format!(
                "element prefix length {} reaches depth {depth}",
                element.max_prefix_len()
            ),
        });
    }
    let raised = element.raise_level(depth)?;
    let mut combination = Vec::new();
    for (coord, coeff) in raised.terms() {
        let covering = parts.iter().position(|p| coord.in_group_of(p));
        let Some(part) = covering else {
            return Ok(Membership::NotMember(Obstruction {
                coordinate: coord.clone(),
                coefficient: coeff.clone(),
                reason: ObstructionReason::Uncovered,
            }));
        };
        if !coeff.denom().is_one() {
            return Ok(Membership::NotMember(Obstruction {
                coordinate: coord.clone(),
                coefficient: coeff.clone(),
                reason: ObstructionReason::NonIntegral,
            }));
        }
        combination.push((part, coord.clone(), coeff.numer().clone()));
    }
    Ok(Membership::Member(MemberCert { combination }))
}

/// Re-expand a membership certificate and compare with the claimed element.
pub fn verify_member_cert(element: &GroupElement, cert: &MemberCert, parts: &[BranchSet]) -> bool {
    let mut sum = GroupElement::zero();
    for (part, generator, coeff) in &cert.combination {
        if *part >= parts.len() || !generator.in_group_of(&parts[*part]) {
            return false;
        }
        sum = sum.add(
            &GroupElement::generator(generator.clone())
                .scale(&BigRational::from_integer(coeff.clone())),
        );
    }
    sum.equals(element)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(text: &str) -> Branch {
        Branch::parse(text).unwrap()
    }

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn branch_canonicalization() {
        assert_eq!(Branch::parse("1010*0").unwrap(), b("101*0"));
        assert_eq!(Branch::parse("*0").unwrap(), Branch::constant(0));
        assert_eq!(b("101*0").bit_at(2), 1);
        assert_eq!(b("101*0").bit_at(17), 0);
        assert_eq!(b("*1").restrict(3), alloc::vec![1, 1, 1]);
    }

    #[test]
    fn branch_split_depth() {
        assert_eq!(b("*0").split_depth(&b("1*0")), 0);
        assert_eq!(b("01*0").split_depth(&b("00*0")), 1);
        assert_eq!(b("*0").split_depth(&b("0001*0")), 3);
    }

    #[test]
    fn branch_order_matches_literals() {
        let mut branches = alloc::vec![b("1*0"), b("*0"), b("0*1"), b("*1"), b("01*0")];
        branches.sort();
        let literals: Vec<String> = branches.iter().map(|x| alloc::format!("{x}")).collect();
        assert_eq!(literals, ["*0", "*1", "0*1", "01*0", "1*0"]);
    }

    #[test]
    fn relator_k0_examples() {
        // k* = 0, n = 0: y_{η,1} − y_{η,0} − x_{⟨⟩}.
        let eta = BranchTuple::full(alloc::vec![b("*0")]);
        let rel = relation(&eta, 0);
        let expected = GroupElement::from_terms([
            (Generator::y(eta.clone(), 1), q(1)),
            (Generator::y(eta.clone(), 0), q(-1)),
            (Generator::x(0, eta.omit(0), Vec::new()), q(-1)),
        ]);
        assert_eq!(rel, expected);

        // k* = 0, n = 2, η = 0^ω: 2·y_{η,3} − y_{η,2} − x_{⟨0,0⟩}.
        let rel2 = relation(&eta, 2);
        let expected2 = GroupElement::from_terms([
            (Generator::y(eta.clone(), 3), q(2)),
            (Generator::y(eta.clone(), 2), q(-1)),
            (Generator::x(0, eta.omit(0), alloc::vec![0, 0]), q(-1)),
        ]);
        assert_eq!(rel2, expected2);
    }

    #[test]
    fn relator_k1_example() {
        let eta = BranchTuple::full(alloc::vec![b("*0"), b("1*0")]);
        let rel = relation(&eta, 0);
        let expected = GroupElement::from_terms([
            (Generator::y(eta.clone(), 1), q(1)),
            (Generator::y(eta.clone(), 0), q(-1)),
            (Generator::x(0, eta.omit(0), Vec::new()), q(-1)),
            (Generator::x(1, eta.omit(1), Vec::new()), q(-1)),
        ]);
        assert_eq!(rel, expected);
    }

    #[test]
    fn raise_level_examples() {
        let eta = BranchTuple::full(alloc::vec![b("*0")]);
        // x-generators are level-free.
        let x = GroupElement::generator(Generator::x(0, eta.omit(0), alloc::vec![0]));
        assert_eq!(x.raise_level(9).unwrap(), x);

        // raise(y_{η,0}, 2) = y_{η,2} − x_{η↾1} − x_{⟨⟩}.
        let y0 = GroupElement::generator(Generator::y(eta.clone(), 0));
        let raised = y0.raise_level(2).unwrap();
        let expected = GroupElement::from_terms([
            (Generator::y(eta.clone(), 2), q(1)),
            (Generator::x(0, eta.omit(0), alloc::vec![0]), q(-1)),
            (Generator::x(0, eta.omit(0), Vec::new()), q(-1)),
        ]);
        assert_eq!(raised, expected);

        // raise(y_{η,0}, 3) = 2·y_{η,3} − x_{η↾2} − x_{η↾1} − x_{⟨⟩}.
        let raised3 = y0.raise_level(3).unwrap();
        let expected3 = GroupElement::from_terms([
            (Generator::y(eta.clone(), 3), q(2)),
            (Generator::x(0, eta.omit(0), alloc::vec![0, 0]), q(-1)),
            (Generator::x(0, eta.omit(0), alloc::vec![0]), q(-1)),
            (Generator::x(0, eta.omit(0), Vec::new()), q(-1)),
        ]);
        assert_eq!(raised3, expected3);
    }

    #[test]
    fn relators_vanish_at_any_higher_level() {
        let eta = BranchTuple::full(alloc::vec![b("*0"), b("10*1")]);
        for n in 0..4 {
            let rel = relation(&eta, n);
            for target in (n + 1)..6 {
                assert!(rel.raise_level(target).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn lower_level_inverts_raise() {
        let eta = BranchTuple::full(alloc::vec![b("*0"), b("1*0")]);
        let e = GroupElement::from_terms([
            (Generator::y(eta.clone(), 1), q(3)),
            (Generator::x(0, eta.omit(0), alloc::vec![1]), q(-2)),
        ]);
        let raised = e.raise_level(5).unwrap();
        let mut lowered = raised;
        while lowered.level_bound() > e.level_bound() {
            lowered = lowered.lower_level_once().unwrap();
        }
        assert_eq!(lowered, e);
    }

    #[test]
    fn member_g_examples() {
        let eta = b("*0");
        let set = BranchSet::new([eta.clone()]);
        let tuple = BranchTuple::full(alloc::vec![eta.clone()]);

        let y0 = GroupElement::generator(Generator::y(tuple.clone(), 0));
        assert!(member_g(&y0, &set, 4).unwrap().is_member());

        let half = y0.scale(&BigRational::new(1.into(), 2.into()));
        match member_g(&half, &set, 3).unwrap() {
            Membership::NotMember(obstruction) => {
                assert_eq!(obstruction.reason, ObstructionReason::NonIntegral);
            }
            Membership::Member(_) => panic!("half a generator is not a member"),
        }

        let with_x = y0.add(&GroupElement::generator(Generator::x(
            0,
            tuple.omit(0),
            Vec::new(),
        )));
        assert!(member_g(&with_x, &set, 4).unwrap().is_member());
    }

    #[test]
    fn member_certificates_reexpand() {
        let set = BranchSet::new([b("*0"), b("1*0")]);
        let tuple = BranchTuple::full(alloc::vec![b("*0"), b("1*0")]);
        let e = GroupElement::from_terms([
            (Generator::y(tuple.clone(), 1), q(5)),
            (Generator::x(1, tuple.omit(1), alloc::vec![0]), q(-3)),
        ]);
        let parts = [set];
        match member_sum(&e, &parts, 5).unwrap() {
            Membership::Member(cert) => {
                assert!(verify_member_cert(&e, &cert, &parts));
            }
            Membership::NotMember(_) => panic!("expected membership"),
        }
    }

    #[test]
    fn member_sum_examples() {
        // Zero element.
        let parts = [BranchSet::new([b("*0")]), BranchSet::new([b("1*0")])];
        assert!(member_sum(&GroupElement::zero(), &parts, 3)
            .unwrap()
            .is_member());

        // k* = 1: x_{0,⟨η₁⟩,⟨⟩} is a generator of the part containing η₁.
        let x = GroupElement::generator(Generator::x(
            0,
            BranchTuple::omitting(0, alloc::vec![b("1*0")]),
            Vec::new(),
        ));
        let parts2 = [BranchSet::new([b("1*0")]), BranchSet::new([b("*0")])];
        assert!(member_sum(&x, &parts2, 3).unwrap().is_member());

        // y over a tuple no part covers: obstruction at the y-coordinate.
        let star = BranchTuple::full(alloc::vec![b("*0"), b("1*0")]);
        let y = GroupElement::generator(Generator::y(star, 0));
        match member_sum(&y, &parts2, 4).unwrap() {
            Membership::NotMember(obstruction) => {
                assert_eq!(obstruction.reason, ObstructionReason::Uncovered);
                assert!(matches!(
                    obstruction.coordinate,
                    Generator::Y { level: 4, .. }
                ));
            }
            Membership::Member(_) => panic!("uncoverable tuple"),
        }
    }

    #[test]
    fn member_depth_guards() {
        let set = BranchSet::new([b("*0")]);
        let tuple = BranchTuple::full(alloc::vec![b("*0")]);
        let deep_level = GroupElement::generator(Generator::y(tuple.clone(), 9));
        assert!(matches!(
            member_g(&deep_level, &set, 4),
            Err(ShyError::DepthTooSmall { .. })
        ));
        let deep_prefix =
            GroupElement::generator(Generator::x(0, tuple.omit(0), alloc::vec![0, 0, 0, 0]));
        assert!(matches!(
            member_g(&deep_prefix, &set, 4),
            Err(ShyError::DepthTooSmall { .. })
        ));
        assert!(member_g(&deep_prefix, &set, 5).unwrap().is_member());
    }

    #[test]
    fn tuples_enumerate_lexicographically() {
        let set = BranchSet::new([b("*0"), b("1*0")]);
        let tuples = set.full_tuples(1);
        assert_eq!(tuples.len(), 4);
        assert_eq!(tuples[0].entries(), &[b("*0"), b("*0")]);
        assert_eq!(tuples[1].entries(), &[b("*0"), b("1*0")]);
        assert_eq!(tuples[2].entries(), &[b("1*0"), b("*0")]);
        assert_eq!(tuples[3].entries(), &[b("1*0"), b("1*0")]);
    }
}
