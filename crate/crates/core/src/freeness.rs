//! Constructive freeness and non-freeness.
//!
//! The positive side builds explicit free bases for the subgroup over a
//! finite branch set (and for the quotient by a `G_{U,u}`-style subgroup),
//! together with a triangular rewriting of every in-scope generator into the
//! basis. The negative side certifies the divisibility witness: a tuple
//! configuration whose level-0 y-coset is nonzero in the quotient by a sum
//! of parts yet divisible by every factorial product in range.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;

use crate::shygroup::{
    factorial, factorial_product, member_sum, quotient_parts, Branch, BranchSet, BranchTuple,
    Generator, GroupElement, MemberCert, Membership, Obstruction, ShyError,
};

/// Which subgroup a certificate describes.
#[derive(Clone, Debug)]
pub enum CertKind {
    /// Free basis of `G_U` itself.
    Countable { set: BranchSet },
    /// Free basis of the quotient `G_{U∪u} / G_{U,u}`; elements are reduced
    /// modulo the sum of the parts.
    Quotient {
        base: BranchSet,
        excluded: Vec<Branch>,
        parts: Vec<BranchSet>,
    },
}

/// Per-tuple data: the tuple, its separator level, and (for quotients) the
/// avoided slot `m_t`, the slot set `S(t)`, and the witnessing coordinates
/// `r_{t,ℓ}` of the excluded branches.
#[derive(Clone, Debug)]
pub struct TupleInfo {
    pub tuple: BranchTuple,
    pub separator: u32,
    pub m_t: Option<usize>,
    pub s_set: Vec<usize>,
    pub r_witnesses: Vec<usize>,
}

/// A free-basis certificate: tuple list with separators, the three basis
/// families listed to the certificate depth, rewrites for every eliminated
/// in-scope generator, and the elimination order that witnesses
/// unitriangularity.
#[derive(Clone, Debug)]
pub struct FreeBasisCert {
    pub k_star: usize,
    pub depth: u32,
    pub kind: CertKind,
    pub tuples: Vec<TupleInfo>,
    pub basis_y1: Vec<Generator>,
    pub basis_y2: Vec<Generator>,
    pub basis_y3: Vec<Generator>,
    /// Rewrites for eliminated generators (basis members rewrite to
    /// themselves and are not stored; quotient generators that fall into the
    /// modded-out subgroup rewrite to the empty combination).
    pub rewrites: BTreeMap<Generator, Vec<(Generator, BigInt)>>,
    /// Eliminated generators in triangular order, each with the index of the
    /// tuple and the level of the defining relation that resolves it.
    pub elimination: Vec<(Generator, usize, u32)>,
}

impl FreeBasisCert {
    /// Whether a generator is a basis member. The three families are
    /// infinite in prefix length and level; the listed vectors are their
    /// depth-truncated views, so this tests the defining predicate.
    pub fn is_basis(&self, g: &Generator) -> bool {
        match g {
            Generator::X { m, tuple, prefix } => {
                matches!(x_status(self, *m, tuple, prefix), XStatus::Basis(_))
            }
            Generator::Y { tuple, level } => {
                matches!(y_status(self, tuple, *level), YStatus::Basis)
            }
        }
    }

    pub fn basis_len(&self) -> usize {
        self.basis_y1.len() + self.basis_y2.len() + self.basis_y3.len()
    }

    /// The ambient branch set whose generators the certificate covers.
    pub fn ambient(&self) -> BranchSet {
        match &self.kind {
            CertKind::Countable { set } => set.clone(),
            CertKind::Quotient { base, excluded, .. } => {
                let mut s = base.clone();
                for b in excluded {
                    s.insert(b.clone());
                }
                s
            }
        }
    }
}

/// Scope of a certificate: which generators it can rewrite.
fn in_scope(cert: &FreeBasisCert, g: &Generator) -> bool {
    if !g.in_group_of(&cert.ambient()) || g.k_star() != cert.k_star {
        return false;
    }
    match g {
        Generator::X { prefix, .. } => prefix.len() <= cert.depth as usize,
        Generator::Y { level, .. } => *level <= cert.depth,
    }
}

/// Build the free-basis certificate for `G_U`, `U` finite.
///
/// Tuples are listed lexicographically; the separator `s_t` is the minimal
/// level making the tail-prefix ranges of earlier tuples with the same
/// first-`k*` restriction disjoint from this one's.
pub fn build_basis_countable(
    set: &BranchSet,
    k_star: usize,
    depth: u32,
) -> Result<FreeBasisCert, ShyError> {
    let tuples_raw = set.full_tuples(k_star);
    let mut tuples: Vec<TupleInfo> = Vec::with_capacity(tuples_raw.len());
    for tuple in tuples_raw {
        let mut separator = 0u32;
        for earlier in tuples.iter() {
            let same_restriction = (0..k_star).all(|i| earlier.tuple.at(i) == tuple.at(i));
            if !same_restriction {
                continue;
            }
            let split = tuple.at(k_star).split_depth(earlier.tuple.at(k_star)) as u32;
            if earlier.separator <= split {
                separator = separator.max(split + 1);
            }
        }
        tuples.push(TupleInfo {
            tuple,
            separator,
            m_t: None,
            s_set: Vec::new(),
            r_witnesses: Vec::new(),
        });
    }
    let max_split = max_pairwise_split(set);
    let needed = tuples
        .iter()
        .map(|t| t.separator)
        .max()
        .unwrap_or(0)
        .max(max_split);
    if depth < needed {
        return Err(ShyError::DepthTooSmall {
            detail: alloc::format!("depth {depth} below the separator/split requirement {needed}"),
        });
    }
    let mut cert = FreeBasisCert {
        k_star,
        depth,
        kind: CertKind::Countable { set: set.clone() },
        tuples,
        basis_y1: Vec::new(),
        basis_y2: Vec::new(),
        basis_y3: Vec::new(),
        rewrites: BTreeMap::new(),
        elimination: Vec::new(),
    };
    list_basis_and_rewrites(&mut cert, &set.clone())?;
    Ok(cert)
}

fn max_pairwise_split(set: &BranchSet) -> u32 {
    let branches = set.sorted();
    let mut max = 0;
    for (i, a) in branches.iter().enumerate() {
        for b in &branches[..i] {
            max = max.max(a.split_depth(b) as u32);
        }
    }
    max
}

/// Build the free-basis certificate for the quotient `G_{U∪u} / G_{U,u}`,
/// `|u| ≤ k*`: tuples are those whose range contains all of `u`, each with
/// an avoided slot `m_t` chosen as the least member of `S(t)` outside the
/// witness coordinates, and separators per the prefix-avoidance condition.
pub fn build_basis_quotient(
    base: &BranchSet,
    excluded: &BranchSet,
    k_star: usize,
    depth: u32,
) -> Result<FreeBasisCert, ShyError> {
    if excluded.len() > k_star {
        return Err(ShyError::Malformed(alloc::format!(
            "u has {} members, larger than k(*) = {k_star}",
            excluded.len()
        )));
    }
    if base.branches().any(|b| excluded.contains(b)) {
        return Err(ShyError::Malformed(String::from(
            "U and u must be disjoint",
        )));
    }
    let parts = quotient_parts(base, excluded);
    let union = base.union(&BranchSet::new(excluded.branches().cloned()));
    let u_list: Vec<Branch> = excluded.branches().cloned().collect();

    let mut cert = FreeBasisCert {
        k_star,
        depth,
        kind: CertKind::Quotient {
            base: base.clone(),
            excluded: u_list.clone(),
            parts,
        },
        tuples: Vec::new(),
        basis_y1: Vec::new(),
        basis_y2: Vec::new(),
        basis_y3: Vec::new(),
        rewrites: BTreeMap::new(),
        elimination: Vec::new(),
    };
    if u_list.is_empty() {
        // The quotient is trivial; nothing to list.
        return Ok(cert);
    }

    for tuple in union.full_tuples(k_star) {
        let contains_all = u_list
            .iter()
            .all(|nu| tuple.entries().iter().any(|b| b == nu));
        if !contains_all {
            continue;
        }
        let r_witnesses: Vec<usize> = u_list
            .iter()
            .map(|nu| {
                tuple
                    .entries()
                    .iter()
                    .position(|b| b == nu)
                    .expect("witness coordinate")
            })
            .collect();
        // S(t): slots whose removal still leaves every excluded branch in
        // the range.
        let s_set: Vec<usize> = (0..=k_star)
            .filter(|&m| {
                u_list
                    .iter()
                    .all(|nu| (0..=k_star).any(|i| i != m && tuple.at(i) == nu))
            })
            .collect();
        let m_t = s_set
            .iter()
            .copied()
            .find(|m| !r_witnesses.contains(m))
            .ok_or_else(|| ShyError::Malformed(String::from("no admissible avoided slot")))?;
        // Separator: for every earlier tuple agreeing off some slot m, the
        // slot-m prefix from s_t on must avoid the earlier branch entirely.
        let mut separator = 0u32;
        for earlier in cert.tuples.iter() {
            for m in 0..=k_star {
                let agree_off_m = (0..=k_star)
                    .filter(|&i| i != m)
                    .all(|i| earlier.tuple.at(i) == tuple.at(i));
                if agree_off_m && earlier.tuple.at(m) != tuple.at(m) {
                    let split = tuple.at(m).split_depth(earlier.tuple.at(m)) as u32;
                    separator = separator.max(split + 1);
                }
            }
        }
        cert.tuples.push(TupleInfo {
            tuple,
            separator,
            m_t: Some(m_t),
            s_set,
            r_witnesses,
        });
    }
    let needed = cert
        .tuples
        .iter()
        .map(|t| t.separator)
        .max()
        .unwrap_or(0)
        .max(max_pairwise_split(&union));
    if depth < needed {
        return Err(ShyError::DepthTooSmall {
            detail: alloc::format!("depth {depth} below the separator/split requirement {needed}"),
        });
    }
    list_basis_and_rewrites(&mut cert, &union)?;
    Ok(cert)
}

/// Status of an x-generator relative to the basis families.
enum XStatus {
    /// Listed in Y1 (true) or Y2 (false).
    Basis(bool),
    /// Excluded: resolved by the relation of tuple `t` at the prefix length.
    Excluded { t: usize },
    /// (Quotient only) falls into the modded-out subgroup.
    Dropped,
}

fn x_status(cert: &FreeBasisCert, m: usize, tuple: &BranchTuple, prefix: &[u8]) -> XStatus {
    match &cert.kind {
        CertKind::Countable { .. } => {
            if m < cert.k_star {
                return XStatus::Basis(true);
            }
            for (t, info) in cert.tuples.iter().enumerate() {
                if info.tuple.omit(cert.k_star) != *tuple {
                    continue;
                }
                if (prefix.len() as u32) >= info.separator
                    && info.tuple.at(cert.k_star).has_prefix(prefix)
                {
                    return XStatus::Excluded { t };
                }
            }
            XStatus::Basis(false)
        }
        CertKind::Quotient { excluded, .. } => {
            let in_star = excluded
                .iter()
                .all(|nu| tuple.entries().iter().any(|b| b == nu));
            if !in_star {
                return XStatus::Dropped;
            }
            let mut named = false;
            for (t, info) in cert.tuples.iter().enumerate() {
                let m_t = info.m_t.expect("quotient tuples carry m_t");
                if m != m_t || info.tuple.omit(m_t) != *tuple {
                    continue;
                }
                named = true;
                if (prefix.len() as u32) >= info.separator && info.tuple.at(m_t).has_prefix(prefix)
                {
                    return XStatus::Excluded { t };
                }
            }
            XStatus::Basis(!named)
        }
    }
}

/// Status of a y-generator.
enum YStatus {
    /// Listed in Y3.
    Basis,
    /// Below its tuple's separator: eliminated downward.
    Low,
    /// (Quotient only) falls into the modded-out subgroup.
    Dropped,
    /// The tuple is not covered by this certificate at all.
    Foreign,
}

fn y_status(cert: &FreeBasisCert, tuple: &BranchTuple, level: u32) -> YStatus {
    if let CertKind::Quotient { excluded, .. } = &cert.kind {
        let in_star = excluded
            .iter()
            .all(|nu| tuple.entries().iter().any(|b| b == nu));
        if !in_star {
            return YStatus::Dropped;
        }
    }
    let Some(t) = cert.tuples.iter().position(|info| info.tuple == *tuple) else {
        return YStatus::Foreign;
    };
    if level >= cert.tuples[t].separator {
        YStatus::Basis
    } else {
        YStatus::Low
    }
}

fn expand(
    cert: &FreeBasisCert,
    g: &Generator,
    fuel: &mut u32,
) -> Result<Vec<(Generator, BigInt)>, ShyError> {
    let mut acc: BTreeMap<Generator, BigInt> = BTreeMap::new();
    expand_into(cert, g, &BigInt::one(), &mut acc, fuel)?;
    acc.retain(|_, c| !c.is_zero());
    Ok(acc.into_iter().collect())
}

fn expand_into(
    cert: &FreeBasisCert,
    g: &Generator,
    coeff: &BigInt,
    acc: &mut BTreeMap<Generator, BigInt>,
    fuel: &mut u32,
) -> Result<(), ShyError> {
    if *fuel == 0 {
        return Err(ShyError::Malformed(String::from(
            "rewrite recursion exhausted; triangular structure violated",
        )));
    }
    *fuel -= 1;
    match g {
        Generator::X { m, tuple, prefix } => match x_status(cert, *m, tuple, prefix) {
            XStatus::Basis(_) => {
                *acc.entry(g.clone()).or_insert_with(BigInt::zero) += coeff;
                Ok(())
            }
            XStatus::Dropped => Ok(()),
            XStatus::Excluded { t } => {
                // Rearrange the relation at (tuple_t, |prefix|):
                // x = n!·y_{n+1} − y_n − Σ_{j≠m} x_j.
                let info = &cert.tuples[t];
                let n = prefix.len() as u32;
                let full = info.tuple.clone();
                expand_into(
                    cert,
                    &Generator::y(full.clone(), n + 1),
                    &(coeff * factorial(n)),
                    acc,
                    fuel,
                )?;
                expand_into(
                    cert,
                    &Generator::y(full.clone(), n),
                    &-coeff.clone(),
                    acc,
                    fuel,
                )?;
                for j in 0..=cert.k_star {
                    if j == *m {
                        continue;
                    }
                    let xj = Generator::x(j, full.omit(j), full.at(j).restrict(n as usize));
                    expand_into(cert, &xj, &-coeff.clone(), acc, fuel)?;
                }
                Ok(())
            }
        },
        Generator::Y { tuple, level } => match y_status(cert, tuple, *level) {
            YStatus::Basis => {
                *acc.entry(g.clone()).or_insert_with(BigInt::zero) += coeff;
                Ok(())
            }
            YStatus::Dropped => Ok(()),
            YStatus::Foreign => Err(ShyError::DepthTooSmall {
                detail: alloc::format!("generator {g} is outside the certificate scope"),
            }),
            YStatus::Low => {
                // y_n = n!·y_{n+1} − Σ_j x_j.
                let n = *level;
                expand_into(
                    cert,
                    &Generator::y(tuple.clone(), n + 1),
                    &(coeff * factorial(n)),
                    acc,
                    fuel,
                )?;
                for j in 0..=cert.k_star {
                    let xj = Generator::x(j, tuple.omit(j), tuple.at(j).restrict(n as usize));
                    expand_into(cert, &xj, &-coeff.clone(), acc, fuel)?;
                }
                Ok(())
            }
        },
    }
}

/// List the basis families to the certificate depth and precompute the
/// rewrites and the triangular elimination order.
fn list_basis_and_rewrites(cert: &mut FreeBasisCert, ambient: &BranchSet) -> Result<(), ShyError> {
    let depth = cert.depth as usize;
    let k_star = cert.k_star;
    let mut eliminated_x: Vec<(Generator, usize, u32)> = Vec::new();

    let mut x_tuples: Vec<(usize, BranchTuple)> = Vec::new();
    if k_star == 0 {
        x_tuples.push((0, BranchTuple::omitting(0, Vec::new())));
    } else {
        for m in 0..=k_star {
            for tuple in ambient.full_tuples(k_star - 1) {
                x_tuples.push((m, BranchTuple::omitting(m, tuple.entries().to_vec())));
            }
        }
    }
    for (m, tuple) in &x_tuples {
        for prefix in all_prefixes(depth) {
            let g = Generator::x(*m, tuple.clone(), prefix.clone());
            match x_status(cert, *m, tuple, &prefix) {
                XStatus::Basis(is_y1) => {
                    if is_y1 {
                        cert.basis_y1.push(g);
                    } else {
                        cert.basis_y2.push(g);
                    }
                }
                XStatus::Excluded { t } => {
                    eliminated_x.push((g, t, prefix.len() as u32));
                }
                XStatus::Dropped => {}
            }
        }
    }
    // Excluded x's are resolved in prefix-length order.
    eliminated_x.sort_by(|(g1, _, n1), (g2, _, n2)| n1.cmp(n2).then_with(|| g1.cmp(g2)));

    // y-generators: basis from the separator up, eliminated below, walked by
    // distance to the separator.
    let mut eliminated_y: Vec<(Generator, usize, u32)> = Vec::new();
    for (t, info) in cert.tuples.iter().enumerate() {
        for n in info.separator..=cert.depth {
            cert.basis_y3.push(Generator::y(info.tuple.clone(), n));
        }
        for n in (0..info.separator).rev() {
            eliminated_y.push((Generator::y(info.tuple.clone(), n), t, n));
        }
    }
    eliminated_y.sort_by_key(|(_, t, n)| (cert.tuples[*t].separator - n, *t));

    cert.elimination = eliminated_x;
    cert.elimination.extend(eliminated_y);

    let mut fuel_budget = 1_000_000u32;
    let elimination = cert.elimination.clone();
    for (g, _, _) in &elimination {
        let combo = expand(cert, g, &mut fuel_budget)?;
        cert.rewrites.insert(g.clone(), combo);
    }
    Ok(())
}

fn all_prefixes(max_len: usize) -> Vec<Vec<u8>> {
    let mut out = alloc::vec![Vec::new()];
    let mut frontier = alloc::vec![Vec::<u8>::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for p in &frontier {
            for b in [0u8, 1] {
                let mut q = p.clone();
                q.push(b);
                next.push(q);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Rewrite a generator into the certificate's basis as an exact integer
/// combination (empty for quotient generators that vanish modulo the parts).
pub fn express_in_basis(
    g: &Generator,
    cert: &FreeBasisCert,
) -> Result<Vec<(Generator, BigInt)>, ShyError> {
    if !in_scope(cert, g) {
        return Err(ShyError::DepthTooSmall {
            detail: alloc::format!("generator {g} is outside the certificate scope"),
        });
    }
    if cert.is_basis(g) {
        return Ok(alloc::vec![(g.clone(), BigInt::one())]);
    }
    if let Some(combo) = cert.rewrites.get(g) {
        return Ok(combo.clone());
    }
    let mut fuel = 1_000_000u32;
    expand(cert, g, &mut fuel)
}

/// Rewrite a whole element (rational combination of in-scope generators).
pub fn express_element(
    e: &GroupElement,
    cert: &FreeBasisCert,
) -> Result<Vec<(Generator, BigRational)>, ShyError> {
    let mut acc: BTreeMap<Generator, BigRational> = BTreeMap::new();
    for (g, q) in e.terms() {
        for (b, c) in express_in_basis(g, cert)? {
            let entry = acc.entry(b).or_insert_with(BigRational::zero);
            *entry += q * BigRational::from_integer(c);
        }
    }
    acc.retain(|_, q| !q.is_zero());
    Ok(acc.into_iter().collect())
}

/// Re-expand a rewrite and compare with the generator: exactly for countable
/// certificates, modulo the parts for quotient ones.
pub fn verify_rewrite(
    g: &Generator,
    combo: &[(Generator, BigInt)],
    cert: &FreeBasisCert,
) -> Result<bool, ShyError> {
    let sum = GroupElement::from_terms(
        combo
            .iter()
            .map(|(b, c)| (b.clone(), BigRational::from_integer(c.clone()))),
    );
    let diff = GroupElement::generator(g.clone()).sub(&sum);
    match &cert.kind {
        CertKind::Countable { .. } => Ok(diff.raise_level(cert.depth + 2)?.is_zero()),
        CertKind::Quotient { parts, .. } => {
            let verdict = member_sum(&diff, parts, cert.depth + 2)?;
            Ok(verdict.is_member())
        }
    }
}

/// Structural unitriangularity check: walking the elimination order, each
/// eliminated generator's defining relation must mention it with coefficient
/// ±1 and otherwise only basis members, earlier-eliminated generators, or
/// (for quotients) generators that vanish modulo the parts.
pub fn verify_triangular(cert: &FreeBasisCert) -> Result<(), String> {
    let mut seen: alloc::collections::BTreeSet<&Generator> = alloc::collections::BTreeSet::new();
    for (g, t, n) in &cert.elimination {
        let info = &cert.tuples[*t];
        let relator = crate::shygroup::relation(&info.tuple, *n);
        let own = relator.coefficient(g);
        if !(own.denom().is_one() && own.numer().abs().is_one()) {
            return Err(alloc::format!(
                "eliminated generator {g} has coefficient {own} in its relation"
            ));
        }
        for (other, _) in relator.terms() {
            if other == g || cert.is_basis(other) || seen.contains(other) {
                continue;
            }
            let dropped = match (&cert.kind, other) {
                (CertKind::Quotient { excluded, .. }, Generator::X { tuple, .. })
                | (CertKind::Quotient { excluded, .. }, Generator::Y { tuple, .. }) => !excluded
                    .iter()
                    .all(|nu| tuple.entries().iter().any(|b| b == nu)),
                _ => false,
            };
            if !dropped {
                return Err(alloc::format!(
                    "relation for {g} references {other}, which is neither basis nor earlier"
                ));
            }
        }
        seen.insert(g);
    }
    Ok(())
}

/// Full certificate verification: every stored rewrite re-expands, rewrites
/// land in the basis, and the elimination order is unitriangular.
pub fn verify_cert(cert: &FreeBasisCert) -> Result<(), String> {
    verify_triangular(cert)?;
    for (g, combo) in &cert.rewrites {
        match verify_rewrite(g, combo, cert) {
            Ok(true) => {}
            Ok(false) => return Err(alloc::format!("rewrite of {g} does not re-expand")),
            Err(e) => return Err(alloc::format!("rewrite of {g}: {e}")),
        }
        for (b, _) in combo {
            if !cert.is_basis(b) {
                return Err(alloc::format!("rewrite of {g} uses non-basis {b}"));
            }
        }
    }
    Ok(())
}

/// Configuration of the non-freeness witness: a full star tuple and one part
/// per slot, with the star's slot-ℓ branch lying in every part except the
/// ℓ-th.
#[derive(Clone, Debug)]
pub struct WitnessConfig {
    pub k_star: usize,
    pub star: BranchTuple,
    pub parts: Vec<BranchSet>,
}

#[derive(Clone, Debug)]
pub enum WitnessError {
    /// The membership pattern `η*_ℓ ∈ U_m ⇔ ℓ ≠ m` fails at `(ell, m)`.
    ConfigViolation {
        ell: usize,
        m: usize,
    },
    Shy(ShyError),
}

impl core::fmt::Display for WitnessError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            WitnessError::ConfigViolation { ell, m } => write!(
                f,
                "configuration violates the membership pattern at (l,m)=({ell},{m})"
            ),
            WitnessError::Shy(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for WitnessError {}

impl From<ShyError> for WitnessError {
    fn from(e: ShyError) -> Self {
        WitnessError::Shy(e)
    }
}

/// One level of the witness: the rearranged relation
/// `n!·y_{n+1} − y_n = Σ_m x_{m,η̄*_m,η*_m↾n}` with a membership certificate
/// for the whole row.
#[derive(Clone, Debug)]
pub struct WitnessLevel {
    pub n: u32,
    /// Each summand with the index of the part that contains it.
    pub summands: Vec<(Generator, usize)>,
    pub identity_holds: bool,
    pub membership: MemberCert,
}

/// The non-freeness certificate: per-level identities, the obstruction row
/// showing the level-0 y-generator misses the sum of the parts, and the
/// divisibility orders certified in the quotient.
#[derive(Clone, Debug)]
pub struct WitnessCert {
    pub config: WitnessConfig,
    pub levels: Vec<WitnessLevel>,
    pub obstruction: Obstruction,
    /// For each n ≤ N: the factorial product `0!·1!⋯(n-1)!` by which the
    /// coset of `y_{η̄*,0}` is certified divisible.
    pub divisibility: Vec<(u32, BigInt)>,
}

/// Build and check the witness for the first `levels_to_check` levels.
pub fn nonfree_witness(
    config: &WitnessConfig,
    levels_to_check: u32,
) -> Result<WitnessCert, WitnessError> {
    let k = config.k_star;
    assert_eq!(config.star.k_star(), k, "star tuple width");
    assert_eq!(config.parts.len(), k + 1, "one part per slot");
    for ell in 0..=k {
        for m in 0..=k {
            let member = config.parts[m].contains(config.star.at(ell));
            if member != (ell != m) {
                return Err(WitnessError::ConfigViolation { ell, m });
            }
        }
    }
    let depth = levels_to_check + 1;
    let mut levels = Vec::new();
    for n in 0..levels_to_check {
        let lhs = GroupElement::from_terms([
            (
                Generator::y(config.star.clone(), n + 1),
                BigRational::from_integer(factorial(n)),
            ),
            (Generator::y(config.star.clone(), n), -BigRational::one()),
        ]);
        let mut summands = Vec::new();
        let mut rhs = GroupElement::zero();
        for m in 0..=k {
            let x = Generator::x(
                m,
                config.star.omit(m),
                config.star.at(m).restrict(n as usize),
            );
            if !x.in_group_of(&config.parts[m]) {
                return Err(WitnessError::ConfigViolation { ell: m, m });
            }
            rhs = rhs.add(&GroupElement::generator(x.clone()));
            summands.push((x, m));
        }
        let identity_holds = lhs.equals(&rhs);
        let membership = match member_sum(&lhs, &config.parts, depth)? {
            Membership::Member(cert) => cert,
            Membership::NotMember(_) => {
                return Err(WitnessError::Shy(ShyError::Malformed(String::from(
                    "identity row unexpectedly misses the sum of parts",
                ))))
            }
        };
        levels.push(WitnessLevel {
            n,
            summands,
            identity_holds,
            membership,
        });
    }
    let y0 = GroupElement::generator(Generator::y(config.star.clone(), 0));
    let obstruction = match member_sum(&y0, &config.parts, depth)? {
        Membership::NotMember(o) => o,
        Membership::Member(_) => {
            return Err(WitnessError::Shy(ShyError::Malformed(String::from(
                "y-generator of the star tuple lies in the sum of parts",
            ))))
        }
    };
    // Divisibility: y_0 ≡ (0!·1!⋯(n−1)!)·y_n modulo the parts.
    let mut divisibility = Vec::new();
    for n in 0..=levels_to_check {
        let product = factorial_product(0, n);
        let scaled = GroupElement::generator(Generator::y(config.star.clone(), n))
            .scale(&BigRational::from_integer(product.clone()));
        let diff = y0.sub(&scaled);
        match member_sum(&diff, &config.parts, depth)? {
            Membership::Member(_) => divisibility.push((n, product)),
            Membership::NotMember(_) => {
                return Err(WitnessError::Shy(ShyError::Malformed(alloc::format!(
                    "divisibility by the level-{n} factorial product fails"
                ))))
            }
        }
    }
    Ok(WitnessCert {
        config: config.clone(),
        levels,
        obstruction,
        divisibility,
    })
}

/// Sample a random rational combination of generators over `set` within the
/// given prefix/level depth. Coefficients are small integers.
pub fn random_element<R: Rng>(
    set: &BranchSet,
    k_star: usize,
    depth: u32,
    terms: usize,
    rng: &mut R,
) -> GroupElement {
    let branches = set.sorted();
    if branches.is_empty() {
        return GroupElement::zero();
    }
    let mut parts: Vec<(Generator, BigRational)> = Vec::new();
    for _ in 0..terms {
        let coeff = BigRational::from_integer(BigInt::from(rng.gen_range(-9i64..=9)));
        let gen = if rng.gen_bool(0.5) {
            let tuple = BranchTuple::full(
                (0..=k_star)
                    .map(|_| branches[rng.gen_range(0..branches.len())].clone())
                    .collect(),
            );
            Generator::y(tuple, rng.gen_range(0..=depth))
        } else {
            let m = rng.gen_range(0..=k_star);
            let tuple = BranchTuple::omitting(
                m,
                (0..k_star)
                    .map(|_| branches[rng.gen_range(0..branches.len())].clone())
                    .collect(),
            );
            let len = rng.gen_range(0..depth) as usize;
            let prefix = (0..len).map(|_| rng.gen_range(0..=1u8)).collect();
            Generator::x(m, tuple, prefix)
        };
        parts.push((gen, coeff));
    }
    GroupElement::from_terms(parts)
}

/// Randomized check of the quotient-isomorphism property
/// `(G_{U,u} + G_u)/G_{U,u} ≅ G_u / G_{∅,u}`: for sampled `z ∈ G_u`, the two
/// memberships agree.
pub fn check_iso_sum_parts<R: Rng>(
    base: &BranchSet,
    excluded: &BranchSet,
    k_star: usize,
    depth: u32,
    samples: usize,
    rng: &mut R,
) -> Result<(), String> {
    let u_set = BranchSet::new(excluded.branches().cloned());
    let parts_left = quotient_parts(base, excluded);
    let parts_right = quotient_parts(&BranchSet::default(), excluded);
    for _ in 0..samples {
        let terms = rng.gen_range(1..=4);
        let z = random_element(&u_set, k_star, depth, terms, rng);
        let left = member_sum(&z, &parts_left, depth + 2).map_err(err_text)?;
        let right = member_sum(&z, &parts_right, depth + 2).map_err(err_text)?;
        if left.is_member() != right.is_member() {
            return Err(alloc::format!(
                "membership mismatch for {z}: {} vs {}",
                left.is_member(),
                right.is_member()
            ));
        }
    }
    Ok(())
}

/// Randomized check of the step-quotient isomorphism: with `U₂ = U₁ ∪ {η}`
/// inside `U` and `v = u ∪ {η}`, sampled `z ∈ G_{U₂∪u}` lies in
/// `G_{U,u} + G_{U₁∪u}` exactly when it lies in `G_{U₁,v}`.
#[allow(clippy::too_many_arguments)]
pub fn check_iso_step<R: Rng>(
    whole: &BranchSet,
    u1: &BranchSet,
    eta: &Branch,
    excluded: &BranchSet,
    k_star: usize,
    depth: u32,
    samples: usize,
    rng: &mut R,
) -> Result<(), String> {
    let mut u2 = u1.clone();
    u2.insert(eta.clone());
    let mut v = excluded.clone();
    v.insert(eta.clone());
    let u2_cup_u = u2.union(&BranchSet::new(excluded.branches().cloned()));
    // For empty u the G_{U,u} factor degenerates to the empty sum (the
    // trivial subgroup); the `G_{U,∅} = G_U` convention applies to the
    // freeness constructions, not to this isomorphism's hypotheses.
    let mut parts_left = if excluded.is_empty() {
        Vec::new()
    } else {
        quotient_parts(whole, excluded)
    };
    parts_left.push(u1.union(&BranchSet::new(excluded.branches().cloned())));
    let parts_right = quotient_parts(u1, &v);
    for _ in 0..samples {
        let terms = rng.gen_range(1..=4);
        let z = random_element(&u2_cup_u, k_star, depth, terms, rng);
        let left = member_sum(&z, &parts_left, depth + 2).map_err(err_text)?;
        let right = member_sum(&z, &parts_right, depth + 2).map_err(err_text)?;
        if left.is_member() != right.is_member() {
            return Err(alloc::format!(
                "step-quotient mismatch for {z}: {} vs {}",
                left.is_member(),
                right.is_member()
            ));
        }
    }
    Ok(())
}

fn err_text(e: ShyError) -> String {
    alloc::format!("{e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn b(text: &str) -> Branch {
        Branch::parse(text).unwrap()
    }

    #[test]
    fn countable_single_branch() {
        let set = BranchSet::new([Branch::constant(0)]);
        let cert = build_basis_countable(&set, 0, 4).unwrap();
        assert_eq!(cert.tuples.len(), 1);
        assert_eq!(cert.tuples[0].separator, 0);
        assert!(cert.basis_y1.is_empty());
        assert!(cert
            .basis_y3
            .contains(&Generator::y(BranchTuple::full(alloc::vec![b("*0")]), 0)));
        // Prefixes of 0^ω are excluded from Y2; anything else is kept.
        let excluded = Generator::x(0, BranchTuple::omitting(0, Vec::new()), alloc::vec![0, 0]);
        assert!(!cert.is_basis(&excluded));
        let kept = Generator::x(0, BranchTuple::omitting(0, Vec::new()), alloc::vec![1]);
        assert!(cert.is_basis(&kept));
    }

    #[test]
    fn countable_two_branches_separators() {
        let set = BranchSet::new([b("*0"), b("1*0")]);
        let cert = build_basis_countable(&set, 0, 5).unwrap();
        assert_eq!(cert.tuples.len(), 2);
        assert_eq!(cert.tuples[0].separator, 0);
        assert_eq!(cert.tuples[1].separator, 1);
    }

    #[test]
    fn countable_k1_four_tuples() {
        let set = BranchSet::new([b("*0"), b("1*0")]);
        let cert = build_basis_countable(&set, 1, 5).unwrap();
        assert_eq!(cert.tuples.len(), 4);
        verify_cert(&cert).unwrap();
    }

    #[test]
    fn express_excluded_x_via_relation() {
        // U = {0^ω, 10^ω}, k* = 0: x_⟨⟩ = y_{η0,1} − y_{η0,0}.
        let set = BranchSet::new([b("*0"), b("1*0")]);
        let cert = build_basis_countable(&set, 0, 5).unwrap();
        let empty_tuple = BranchTuple::omitting(0, Vec::new());
        let x_empty = Generator::x(0, empty_tuple.clone(), Vec::new());
        let combo = express_in_basis(&x_empty, &cert).unwrap();
        let eta0 = BranchTuple::full(alloc::vec![b("*0")]);
        let expected = alloc::vec![
            (Generator::y(eta0.clone(), 0), BigInt::from(-1)),
            (Generator::y(eta0, 1), BigInt::from(1)),
        ];
        assert_eq!(combo, expected);

        // x_⟨1⟩ = y_{η1,2} − y_{η1,1} (relation at level 1, 1! = 1).
        let x_one = Generator::x(0, empty_tuple, alloc::vec![1]);
        let combo1 = express_in_basis(&x_one, &cert).unwrap();
        let eta1 = BranchTuple::full(alloc::vec![b("1*0")]);
        let expected1 = alloc::vec![
            (Generator::y(eta1.clone(), 1), BigInt::from(-1)),
            (Generator::y(eta1, 2), BigInt::from(1)),
        ];
        assert_eq!(combo1, expected1);
    }

    #[test]
    fn basis_members_express_as_themselves() {
        let set = BranchSet::new([b("*0"), b("1*0")]);
        let cert = build_basis_countable(&set, 0, 5).unwrap();
        for g in cert
            .basis_y1
            .iter()
            .chain(&cert.basis_y2)
            .chain(&cert.basis_y3)
        {
            let combo = express_in_basis(g, &cert).unwrap();
            assert_eq!(combo, alloc::vec![(g.clone(), BigInt::one())]);
        }
    }

    #[test]
    fn all_rewrites_verify_and_are_triangular() {
        let set = BranchSet::new([b("*0"), b("10*0"), b("11*1")]);
        let cert = build_basis_countable(&set, 0, 5).unwrap();
        verify_cert(&cert).unwrap();
        let cert1 = build_basis_countable(&set, 1, 5).unwrap();
        verify_cert(&cert1).unwrap();
    }

    #[test]
    fn quotient_empty_u_is_trivial() {
        let set = BranchSet::new([b("*0")]);
        let cert = build_basis_quotient(&set, &BranchSet::default(), 1, 4).unwrap();
        assert_eq!(cert.basis_len(), 0);
        assert!(cert.tuples.is_empty());
    }

    #[test]
    fn quotient_single_branch_m_selection() {
        // k* = 1, U = ∅, u = {η0}: the only tuple is ⟨η0,η0⟩, witness slot 0,
        // so m_t = 1.
        let empty = BranchSet::default();
        let u = BranchSet::new([b("*0")]);
        let cert = build_basis_quotient(&empty, &u, 1, 4).unwrap();
        assert_eq!(cert.tuples.len(), 1);
        assert_eq!(cert.tuples[0].m_t, Some(1));
        assert_eq!(cert.tuples[0].r_witnesses, alloc::vec![0]);
        assert_eq!(cert.tuples[0].s_set, alloc::vec![0, 1]);
        verify_cert(&cert).unwrap();
    }

    #[test]
    fn quotient_excludes_base_only_generators() {
        // k* = 1, U = {ρ}, u = {η0}: generators not naming η0 vanish.
        let base = BranchSet::new([b("1*0")]);
        let u = BranchSet::new([b("*0")]);
        let cert = build_basis_quotient(&base, &u, 1, 4).unwrap();
        verify_cert(&cert).unwrap();
        let rho_tuple = BranchTuple::full(alloc::vec![b("1*0"), b("1*0")]);
        let combo = express_in_basis(&Generator::y(rho_tuple, 2), &cert).unwrap();
        assert!(combo.is_empty());
    }

    #[test]
    fn quotient_rejects_oversized_u() {
        let base = BranchSet::default();
        let u = BranchSet::new([b("*0"), b("1*0")]);
        assert!(matches!(
            build_basis_quotient(&base, &u, 1, 4),
            Err(ShyError::Malformed(_))
        ));
    }

    #[test]
    fn witness_certificate_passes() {
        let config = WitnessConfig {
            k_star: 1,
            star: BranchTuple::full(alloc::vec![b("*0"), b("1*0")]),
            parts: alloc::vec![BranchSet::new([b("1*0")]), BranchSet::new([b("*0")])],
        };
        let cert = nonfree_witness(&config, 20).unwrap();
        assert_eq!(cert.levels.len(), 20);
        assert!(cert.levels.iter().all(|l| l.identity_holds));
        assert_eq!(cert.divisibility.len(), 21);
        assert_eq!(
            cert.divisibility.last().unwrap().1,
            factorial_product(0, 20)
        );
    }

    #[test]
    fn witness_detects_config_violation() {
        let config = WitnessConfig {
            k_star: 1,
            star: BranchTuple::full(alloc::vec![b("*0"), b("1*0")]),
            parts: alloc::vec![
                BranchSet::new([b("1*0"), b("*0")]), // η*_0 wrongly included
                BranchSet::new([b("*0")]),
            ],
        };
        match nonfree_witness(&config, 5) {
            Err(WitnessError::ConfigViolation { ell: 0, m: 0 }) => {}
            other => panic!("expected (0,0) violation, got {other:?}"),
        }
    }

    #[test]
    fn witness_k0_divisible_quotient() {
        // k* = 0: the quotient by the x-subgroup is divisible; U_0 = ∅.
        let config = WitnessConfig {
            k_star: 0,
            star: BranchTuple::full(alloc::vec![b("*0")]),
            parts: alloc::vec![BranchSet::default()],
        };
        let cert = nonfree_witness(&config, 12).unwrap();
        assert!(cert.levels.iter().all(|l| l.identity_holds));
    }

    #[test]
    fn iso_checks_on_small_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let base = BranchSet::new([b("1*0"), b("01*0")]);
        let u = BranchSet::new([b("*0")]);
        check_iso_sum_parts(&base, &u, 1, 4, 25, &mut rng).unwrap();

        let whole = BranchSet::new([b("1*0"), b("01*0")]);
        let u1 = BranchSet::new([b("1*0")]);
        check_iso_step(
            &whole,
            &u1,
            &b("01*0"),
            &BranchSet::default(),
            1,
            4,
            25,
            &mut rng,
        )
        .unwrap();
    }
}
