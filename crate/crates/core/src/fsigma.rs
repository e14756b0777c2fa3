//! Sequence coding of generators and group elements.
//!
//! A fixed pairing-based bijection `cd` between finite sequences of naturals
//! and naturals drives two injections: generator codes (one natural per
//! stream position, folding the defining data with the branch bits at that
//! position) and the canonical element representation, whose header carries
//! the coefficient signs and magnitudes and whose stream interleaves the
//! witness generators' codes.
//!
//! Codes of infinite objects are emitted as finite prefixes with their depth
//! recorded; two codes are only called equal when a recorded depth separates
//! all inputs under comparison.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::{ToPrimitive, Zero};

use crate::shygroup::{Branch, BranchTuple, Generator, GroupElement, ShyError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CodeError {
    /// The word is not a prefix of any code this module emits.
    NotAValidCodePrefix(String),
    /// The requested depth cannot separate or reconstruct the inputs.
    DepthTooSmall(String),
    /// The element is not an integer combination of generators.
    NotIntegral,
}

impl fmt::Display for CodeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodeError::NotAValidCodePrefix(s) => write!(f, "not a valid code prefix: {s}"),
            CodeError::DepthTooSmall(s) => write!(f, "depth too small: {s}"),
            CodeError::NotIntegral => f.write_str("element has non-integer coefficients"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CodeError {}

impl From<ShyError> for CodeError {
    fn from(e: ShyError) -> Self {
        CodeError::NotAValidCodePrefix(alloc::format!("{e}"))
    }
}

/// Which injection produced a code word. The two generator injections can
/// collide as raw sequences, so the kind travels with the word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CodeKind {
    XGen,
    YGen,
    /// Element representation; remembers each witness generator's kind in
    /// stream order.
    Element {
        witness_kinds: Vec<GenKind>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum GenKind {
    X,
    Y,
}

/// A finite prefix of an infinite code sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeWord {
    pub kind: CodeKind,
    pub entries: Vec<BigUint>,
    pub depth: usize,
}

impl fmt::Display for CodeWord {
    /// `kind:e0,e1,...@depth` with kind `x`, `y`, or `e[xy...]`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            CodeKind::XGen => f.write_str("x:")?,
            CodeKind::YGen => f.write_str("y:")?,
            CodeKind::Element { witness_kinds } => {
                f.write_str("e[")?;
                for k in witness_kinds {
                    f.write_str(match k {
                        GenKind::X => "x",
                        GenKind::Y => "y",
                    })?;
                }
                f.write_str("]:")?;
            }
        }
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "@{}", self.depth)
    }
}

/// Cantor pairing `π(a,b) = (a+b)(a+b+1)/2 + b`.
pub fn pair(a: &BigUint, b: &BigUint) -> BigUint {
    let s = a + b;
    (&s * (&s + 1u32)) / 2u32 + b
}

/// Inverse of [`pair`].
pub fn unpair(z: &BigUint) -> (BigUint, BigUint) {
    // Largest w with w(w+1)/2 <= z.
    let mut w = ((z * 8u32) + 1u32).sqrt();
    w = (&w - 1u32) / 2u32;
    loop {
        let tri = (&w * (&w + 1u32)) / 2u32;
        if &tri > z {
            w -= 1u32;
            continue;
        }
        let next = ((&w + 1u32) * (&w + 2u32)) / 2u32;
        if &next <= z {
            w += 1u32;
            continue;
        }
        let b = z - tri;
        let a = &w - &b;
        return (a, b);
    }
}

/// The sequence coder: `cd(⟨⟩) = 0`, `cd(s⌢⟨a⟩) = π(cd(s), a) + 1`.
pub fn cd(sequence: &[BigUint]) -> BigUint {
    let mut acc = BigUint::zero();
    for a in sequence {
        acc = pair(&acc, a) + 1u32;
    }
    acc
}

/// Convenience wrapper for small entries.
pub fn cd_usize(sequence: &[usize]) -> BigUint {
    let seq: Vec<BigUint> = sequence.iter().map(|&x| BigUint::from(x)).collect();
    cd(&seq)
}

/// Inverse of [`cd`].
pub fn uncd(code: &BigUint) -> Vec<BigUint> {
    let mut out = Vec::new();
    let mut z = code.clone();
    while !z.is_zero() {
        let (rest, last) = unpair(&(&z - 1u32));
        out.push(last);
        z = rest;
    }
    out.reverse();
    out
}

fn branch_bits_entry(tuple: &BranchTuple, i: usize) -> Vec<BigUint> {
    tuple
        .entries()
        .iter()
        .map(|b| BigUint::from(b.bit_at(i)))
        .collect()
}

/// Code of a generator to `depth` stream positions. Entry `i` folds the
/// defining data with every branch's bit at position `i`:
/// `cd(⟨m, cd(ν), …η_ℓ(i)…⟩)` for x-generators, `cd(⟨n, …η_ℓ(i)…⟩)` for
/// y-generators.
pub fn code_gen(g: &Generator, depth: usize) -> CodeWord {
    match g {
        Generator::X { m, tuple, prefix } => {
            let prefix_code = cd(&prefix.iter().map(|&b| BigUint::from(b)).collect::<Vec<_>>());
            let entries = (0..depth)
                .map(|i| {
                    let mut seq = alloc::vec![BigUint::from(*m), prefix_code.clone()];
                    seq.extend(branch_bits_entry(tuple, i));
                    cd(&seq)
                })
                .collect();
            CodeWord {
                kind: CodeKind::XGen,
                entries,
                depth,
            }
        }
        Generator::Y { tuple, level } => {
            let entries = (0..depth)
                .map(|i| {
                    let mut seq = alloc::vec![BigUint::from(*level)];
                    seq.extend(branch_bits_entry(tuple, i));
                    cd(&seq)
                })
                .collect();
            CodeWord {
                kind: CodeKind::YGen,
                entries,
                depth,
            }
        }
    }
}

fn bits_from_biguints(values: &[BigUint], context: &str) -> Result<Vec<u8>, CodeError> {
    values
        .iter()
        .map(|v| {
            v.to_u8().filter(|&b| b <= 1).ok_or_else(|| {
                CodeError::NotAValidCodePrefix(alloc::format!("non-bit value in {context}"))
            })
        })
        .collect()
}

/// Reconstruct a branch from its first bits, reading the final bit as the
/// eventual constant. Exact when the depth passes the settle point.
fn branch_from_bits(bits: &[u8]) -> Result<Branch, CodeError> {
    let Some((&tail, prefix)) = bits.split_last() else {
        return Err(CodeError::DepthTooSmall(String::from(
            "zero-depth branch stream",
        )));
    };
    Ok(Branch::new(prefix.to_vec(), tail))
}

fn decode_generator_entries(kind: GenKind, entries: &[BigUint]) -> Result<Generator, CodeError> {
    if entries.is_empty() {
        return Err(CodeError::DepthTooSmall(String::from("empty code word")));
    }
    let rows: Vec<Vec<BigUint>> = entries.iter().map(uncd).collect();
    let width = rows[0].len();
    let head_count = match kind {
        GenKind::X => 2,
        GenKind::Y => 1,
    };
    if width < head_count || rows.iter().any(|r| r.len() != width) {
        return Err(CodeError::NotAValidCodePrefix(String::from(
            "inconsistent entry widths",
        )));
    }
    for col in 0..head_count {
        if rows.iter().any(|r| r[col] != rows[0][col]) {
            return Err(CodeError::NotAValidCodePrefix(alloc::format!(
                "header column {col} varies across entries"
            )));
        }
    }
    let branch_cols = width - head_count;
    let mut branches = Vec::with_capacity(branch_cols);
    for col in 0..branch_cols {
        let stream: Vec<BigUint> = rows.iter().map(|r| r[head_count + col].clone()).collect();
        let bits = bits_from_biguints(&stream, "branch stream")?;
        branches.push(branch_from_bits(&bits)?);
    }
    match kind {
        GenKind::X => {
            let m = rows[0][0]
                .to_usize()
                .ok_or_else(|| CodeError::NotAValidCodePrefix(String::from("slot overflow")))?;
            if m > branch_cols {
                return Err(CodeError::NotAValidCodePrefix(alloc::format!(
                    "slot {m} exceeds tuple width {branch_cols}"
                )));
            }
            let prefix = bits_from_biguints(&uncd(&rows[0][1]), "x-prefix")?;
            Ok(Generator::x(m, BranchTuple::omitting(m, branches), prefix))
        }
        GenKind::Y => {
            let level = rows[0][0]
                .to_u32()
                .ok_or_else(|| CodeError::NotAValidCodePrefix(String::from("level overflow")))?;
            if branches.is_empty() {
                return Err(CodeError::NotAValidCodePrefix(String::from(
                    "y-code with no branch streams",
                )));
            }
            Ok(Generator::y(BranchTuple::full(branches), level))
        }
    }
}

/// The element representation witness: the ordered combination and the
/// minimal prefix length that separates the witness codes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepresentWitness {
    pub combination: Vec<(Generator, BigInt)>,
    pub separation: usize,
}

fn lex_cmp(a: &CodeWord, b: &CodeWord) -> Ordering {
    for (x, y) in a.entries.iter().zip(&b.entries) {
        match x.cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

fn gen_kind(g: &Generator) -> GenKind {
    match g {
        Generator::X { .. } => GenKind::X,
        Generator::Y { .. } => GenKind::Y,
    }
}

/// Represent an element canonically: y-generators lifted to a common level,
/// witnesses sorted by code, the separation prefix length minimal, and the
/// output stream folding the header (count, signs, magnitudes) with the
/// witness codes positionwise.
pub fn represent(
    e: &GroupElement,
    depth: usize,
) -> Result<(CodeWord, RepresentWitness), CodeError> {
    let level = e.level_bound().unwrap_or(0);
    let canonical = e.raise_level(level)?;
    if !canonical.is_integral() {
        return Err(CodeError::NotIntegral);
    }
    let mut witnesses: Vec<(Generator, BigInt, CodeWord)> = canonical
        .terms()
        .map(|(g, q)| (g.clone(), q.numer().clone(), code_gen(g, depth)))
        .collect();
    // Lexicographic order on the codes; kinds break raw-sequence ties
    // between the two injections.
    witnesses.sort_by(|(g1, _, w1), (g2, _, w2)| {
        lex_cmp(w1, w2).then_with(|| gen_kind(g1).cmp(&gen_kind(g2)))
    });
    for pair in witnesses.windows(2) {
        if lex_cmp(&pair[0].2, &pair[1].2) == Ordering::Equal
            && gen_kind(&pair[0].0) == gen_kind(&pair[1].0)
        {
            return Err(CodeError::DepthTooSmall(alloc::format!(
                "depth {depth} does not separate {} and {}",
                pair[0].0,
                pair[1].0
            )));
        }
    }
    // Minimal prefix length with pairwise-distinct code prefixes.
    let mut separation = 0;
    loop {
        let mut distinct = true;
        'outer: for (i, (g1, _, w1)) in witnesses.iter().enumerate() {
            for (g2, _, w2) in &witnesses[..i] {
                let same_prefix = w1.entries[..separation] == w2.entries[..separation];
                if same_prefix && gen_kind(g1) == gen_kind(g2) {
                    distinct = false;
                    break 'outer;
                }
            }
        }
        if distinct {
            break;
        }
        separation += 1;
        if separation > depth {
            return Err(CodeError::DepthTooSmall(alloc::format!(
                "depth {depth} does not separate the witness codes"
            )));
        }
    }
    let count = witnesses.len();
    let entries: Vec<BigUint> = (0..depth)
        .map(|i| {
            let mut seq = alloc::vec![BigUint::from(count)];
            for (_, a, _) in &witnesses {
                let sign: usize = match a.sign() {
                    num_bigint::Sign::Minus => 0,
                    num_bigint::Sign::NoSign => 1,
                    num_bigint::Sign::Plus => 2,
                };
                seq.push(BigUint::from(sign));
            }
            for (_, a, _) in &witnesses {
                seq.push(a.magnitude().clone());
            }
            for (_, _, w) in &witnesses {
                seq.push(w.entries[i].clone());
            }
            cd(&seq)
        })
        .collect();
    let witness_kinds = witnesses.iter().map(|(g, _, _)| gen_kind(g)).collect();
    Ok((
        CodeWord {
            kind: CodeKind::Element { witness_kinds },
            entries,
            depth,
        },
        RepresentWitness {
            combination: witnesses.into_iter().map(|(g, a, _)| (g, a)).collect(),
            separation,
        },
    ))
}

/// Decoded payload of a code word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decoded {
    Generator(Generator),
    Element(GroupElement),
}

/// Invert [`code_gen`] / [`represent`] on a word produced at sufficient
/// depth.
pub fn decode(word: &CodeWord) -> Result<Decoded, CodeError> {
    match &word.kind {
        CodeKind::XGen => Ok(Decoded::Generator(decode_generator_entries(
            GenKind::X,
            &word.entries,
        )?)),
        CodeKind::YGen => Ok(Decoded::Generator(decode_generator_entries(
            GenKind::Y,
            &word.entries,
        )?)),
        CodeKind::Element { witness_kinds } => {
            if word.entries.is_empty() {
                return Err(CodeError::DepthTooSmall(String::from("empty code word")));
            }
            let rows: Vec<Vec<BigUint>> = word.entries.iter().map(uncd).collect();
            let n = witness_kinds.len();
            let width = 1 + 3 * n;
            if rows.iter().any(|r| r.len() != width) {
                return Err(CodeError::NotAValidCodePrefix(String::from(
                    "element entry width does not match the witness count",
                )));
            }
            for col in 0..(1 + 2 * n) {
                if rows.iter().any(|r| r[col] != rows[0][col]) {
                    return Err(CodeError::NotAValidCodePrefix(alloc::format!(
                        "element header column {col} varies across entries"
                    )));
                }
            }
            if rows[0][0] != BigUint::from(n) {
                return Err(CodeError::NotAValidCodePrefix(String::from(
                    "witness count mismatch",
                )));
            }
            let mut element = GroupElement::zero();
            for (ell, kind) in witness_kinds.iter().enumerate() {
                let sign = rows[0][1 + ell].to_u8();
                let magnitude = rows[0][1 + n + ell].clone();
                let coeff = match sign {
                    Some(0) => -BigInt::from(magnitude),
                    Some(2) => BigInt::from(magnitude),
                    _ => {
                        return Err(CodeError::NotAValidCodePrefix(String::from(
                            "sign column must mark a nonzero coefficient",
                        )))
                    }
                };
                if coeff.is_zero() {
                    return Err(CodeError::NotAValidCodePrefix(String::from(
                        "zero coefficient in a reduced combination",
                    )));
                }
                let sub_entries: Vec<BigUint> =
                    rows.iter().map(|r| r[1 + 2 * n + ell].clone()).collect();
                let generator = decode_generator_entries(*kind, &sub_entries)?;
                element = element.add(
                    &GroupElement::generator(generator)
                        .scale(&num_rational::BigRational::from_integer(coeff)),
                );
            }
            Ok(Decoded::Element(element))
        }
    }
}

/// Depth sufficient to reconstruct and separate every listed generator:
/// beyond every branch settle point, with one spare position.
pub fn sufficient_depth(gens: &[Generator]) -> usize {
    let mut depth = 1;
    for g in gens {
        let tuple = match g {
            Generator::X { tuple, .. } | Generator::Y { tuple, .. } => tuple,
        };
        for b in tuple.entries() {
            depth = depth.max(b.settle_depth() + 1);
        }
    }
    depth
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn b(text: &str) -> Branch {
        Branch::parse(text).unwrap()
    }

    #[test]
    fn cd_fixed_values() {
        assert_eq!(cd_usize(&[]), BigUint::zero());
        assert_eq!(cd_usize(&[0]), BigUint::from(1u32));
        assert_eq!(cd_usize(&[1, 2]), BigUint::from(18u32));
    }

    #[test]
    fn cd_round_trips() {
        for a in 0..50usize {
            assert_eq!(uncd(&cd_usize(&[a])), alloc::vec![BigUint::from(a)]);
            for c in 0..50usize {
                let seq = alloc::vec![BigUint::from(a), BigUint::from(c)];
                assert_eq!(uncd(&cd(&seq)), seq);
            }
        }
        for seq in [
            alloc::vec![3usize, 1, 4],
            alloc::vec![49, 49, 49, 49],
            alloc::vec![0, 0, 0, 0, 0],
        ] {
            let big: Vec<BigUint> = seq.iter().map(|&x| BigUint::from(x)).collect();
            assert_eq!(uncd(&cd(&big)), big);
        }
    }

    #[test]
    fn cd_is_injective_on_a_window() {
        let mut seen = alloc::collections::BTreeSet::new();
        let mut push = |seq: &[usize]| {
            assert!(seen.insert(cd_usize(seq)), "collision at {seq:?}");
        };
        push(&[]);
        for a in 0..30 {
            push(&[a]);
            for c in 0..30 {
                push(&[a, c]);
            }
        }
    }

    #[test]
    fn y_code_entry_matches_formula() {
        // All-zero branches, level 0, k* = 1: entry i is cd(⟨0, 0, 0⟩).
        let tuple = BranchTuple::full(alloc::vec![b("*0"), b("*0")]);
        let word = code_gen(&Generator::y(tuple, 0), 4);
        for e in &word.entries {
            assert_eq!(*e, cd_usize(&[0, 0, 0]));
        }
    }

    #[test]
    fn distinct_slots_differ_at_entry_zero() {
        let t0 = BranchTuple::omitting(0, alloc::vec![b("*0")]);
        let t1 = BranchTuple::omitting(1, alloc::vec![b("*0")]);
        let w0 = code_gen(&Generator::x(0, t0, alloc::vec![1]), 3);
        let w1 = code_gen(&Generator::x(1, t1, alloc::vec![1]), 3);
        assert_ne!(w0.entries[0], w1.entries[0]);
    }

    #[test]
    fn generator_round_trip() {
        let gens = alloc::vec![
            Generator::x(0, BranchTuple::omitting(0, Vec::new()), alloc::vec![0, 1]),
            Generator::x(
                1,
                BranchTuple::omitting(1, alloc::vec![b("10*1")]),
                Vec::new()
            ),
            Generator::y(BranchTuple::full(alloc::vec![b("*0")]), 3),
            Generator::y(BranchTuple::full(alloc::vec![b("110*0"), b("*1")]), 0),
        ];
        let depth = sufficient_depth(&gens);
        for g in &gens {
            let word = code_gen(g, depth.max(8));
            assert_eq!(decode(&word).unwrap(), Decoded::Generator(g.clone()));
        }
    }

    #[test]
    fn decode_rejects_inconsistent_header() {
        let tuple = BranchTuple::omitting(0, Vec::new());
        let mut word = code_gen(&Generator::x(0, tuple, alloc::vec![1]), 4);
        word.entries[2] = cd(&[BigUint::from(7u32), BigUint::from(1u32)]);
        assert!(matches!(
            decode(&word),
            Err(CodeError::NotAValidCodePrefix(_))
        ));
    }

    #[test]
    fn represent_single_negative_generator() {
        let tuple = BranchTuple::full(alloc::vec![b("*0")]);
        let e = GroupElement::generator(Generator::y(tuple, 2))
            .scale(&BigRational::from_integer((-3).into()));
        let (word, witness) = represent(&e, 6).unwrap();
        assert_eq!(witness.combination.len(), 1);
        assert_eq!(witness.combination[0].1, BigInt::from(-3));
        assert_eq!(witness.separation, 0);
        // Header of entry 0: ⟨1, sign 0, magnitude 3, …⟩.
        let row = uncd(&word.entries[0]);
        assert_eq!(row[0], BigUint::from(1u32));
        assert_eq!(row[1], BigUint::zero());
        assert_eq!(row[2], BigUint::from(3u32));
    }

    #[test]
    fn represent_zero_element() {
        let (word, witness) = represent(&GroupElement::zero(), 4).unwrap();
        assert!(witness.combination.is_empty());
        assert_eq!(witness.separation, 0);
        for e in &word.entries {
            assert_eq!(uncd(e), alloc::vec![BigUint::zero()]);
        }
        assert_eq!(
            decode(&word).unwrap(),
            Decoded::Element(GroupElement::zero())
        );
    }

    #[test]
    fn represent_round_trip_and_determinism() {
        let t = BranchTuple::full(alloc::vec![b("*0"), b("10*0")]);
        let e = GroupElement::from_terms([
            (
                Generator::y(t.clone(), 1),
                BigRational::from_integer(2.into()),
            ),
            (
                Generator::x(0, t.omit(0), alloc::vec![1, 0]),
                BigRational::from_integer((-5).into()),
            ),
        ]);
        let (word, _) = represent(&e, 12).unwrap();
        match decode(&word).unwrap() {
            Decoded::Element(back) => assert!(back.equals(&e)),
            other => panic!("expected element, got {other:?}"),
        }
        let (word2, _) = represent(&e, 12).unwrap();
        assert_eq!(word, word2);
    }

    #[test]
    fn separation_is_minimal() {
        // Two y-generators over branches that agree to depth 3: codes first
        // differ at entry 3, so the separating prefix length is 4.
        let e = GroupElement::from_terms([
            (
                Generator::y(BranchTuple::full(alloc::vec![b("*0")]), 0),
                BigRational::from_integer(1.into()),
            ),
            (
                Generator::y(BranchTuple::full(alloc::vec![b("0001*0")]), 0),
                BigRational::from_integer(1.into()),
            ),
        ]);
        let (_, witness) = represent(&e, 10).unwrap();
        assert_eq!(witness.separation, 4);
        let w1 = code_gen(&witness.combination[0].0, 10);
        let w2 = code_gen(&witness.combination[1].0, 10);
        assert_eq!(w1.entries[..3], w2.entries[..3]);
        assert_ne!(w1.entries[..4], w2.entries[..4]);
    }

    #[test]
    fn represent_rejects_fractions() {
        let t = BranchTuple::full(alloc::vec![b("*0")]);
        let e = GroupElement::generator(Generator::y(t, 0))
            .scale(&BigRational::new(1.into(), 2.into()));
        assert!(matches!(represent(&e, 6), Err(CodeError::NotIntegral)));
    }
}
