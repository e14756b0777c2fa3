//! Pure embedding into the integer sequence group via truncation
//! endomorphisms.
//!
//! Level `n` truncates every branch after its first `n` bits (zero beyond),
//! which sends generators to generators and relations to relations, hence
//! extends to an endomorphism with countable, hence free, range. Integer
//! coordinates in a free basis of that range, concatenated over finitely
//! many levels, give the embedding window.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::freeness::{build_basis_countable, express_element, FreeBasisCert};
use crate::shygroup::{Branch, BranchSet, Generator, GroupElement, ShyError};

/// Truncate a branch: keep the first `n` bits, zero from position `n` on.
pub fn h_trunc(branch: &Branch, n: u32) -> Branch {
    Branch::new(branch.restrict(n as usize), 0)
}

/// Truncate a finite bit string in place: positions at or beyond `n` are
/// zeroed, the length is kept.
pub fn h_trunc_prefix(prefix: &[u8], n: u32) -> Vec<u8> {
    prefix
        .iter()
        .enumerate()
        .map(|(i, &b)| if (i as u32) < n { b } else { 0 })
        .collect()
}

/// The level-`n` truncation endomorphism on generators.
pub fn truncate_generator(g: &Generator, n: u32) -> Generator {
    match g {
        Generator::X { m, tuple, prefix } => Generator::x(
            *m,
            tuple.map_branches(|b| h_trunc(b, n)),
            h_trunc_prefix(prefix, n),
        ),
        Generator::Y { tuple, level } => {
            Generator::y(tuple.map_branches(|b| h_trunc(b, n)), *level)
        }
    }
}

/// Linear extension of the truncation endomorphism; distinct generators may
/// collide after truncation, merging their coefficients.
pub fn fn_hat(e: &GroupElement, n: u32) -> GroupElement {
    GroupElement::from_terms(
        e.terms()
            .map(|(g, q)| (truncate_generator(g, n), q.clone())),
    )
}

/// One embedding level: the truncation level, the truncated branch universe,
/// and a free-basis certificate of the image subgroup over it.
#[derive(Clone, Debug)]
pub struct EmbeddingSpec {
    pub level: u32,
    pub image_set: BranchSet,
    pub cert: FreeBasisCert,
}

impl EmbeddingSpec {
    /// Build the spec for one truncation level over the branches that occur
    /// in the inputs.
    pub fn build(
        level: u32,
        branches: &BranchSet,
        k_star: usize,
        depth: u32,
    ) -> Result<Self, ShyError> {
        let image_set = BranchSet::new(branches.branches().map(|b| h_trunc(b, level)));
        let cert = build_basis_countable(&image_set, k_star, depth)?;
        Ok(EmbeddingSpec {
            level,
            image_set,
            cert,
        })
    }

    /// Number of basis coordinates this level emits.
    pub fn coordinate_count(&self) -> usize {
        self.cert.basis_len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SpeckerError {
    /// The image of the element is not covered by the level's basis.
    BasisDoesNotCover {
        detail: alloc::string::String,
    },
    /// The element is not an integer combination, so it has no integer
    /// coordinates.
    NotIntegral,
    Shy(ShyError),
}

impl core::fmt::Display for SpeckerError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SpeckerError::BasisDoesNotCover { detail } => {
                write!(f, "basis does not cover image: {detail}")
            }
            SpeckerError::NotIntegral => f.write_str("element is not an integer combination"),
            SpeckerError::Shy(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SpeckerError {}

impl From<ShyError> for SpeckerError {
    fn from(e: ShyError) -> Self {
        SpeckerError::Shy(e)
    }
}

/// Integer coordinates of the truncated image in the level's free basis,
/// reported sparsely as (basis index, value).
pub fn coordinates(
    e: &GroupElement,
    spec: &EmbeddingSpec,
) -> Result<Vec<(usize, BigInt)>, SpeckerError> {
    let image = fn_hat(e, spec.level);
    let combo = express_element(&image, &spec.cert).map_err(|e| match e {
        ShyError::DepthTooSmall { detail } => SpeckerError::BasisDoesNotCover { detail },
        other => SpeckerError::Shy(other),
    })?;
    let basis_index: BTreeMap<&Generator, usize> = spec
        .cert
        .basis_y1
        .iter()
        .chain(&spec.cert.basis_y2)
        .chain(&spec.cert.basis_y3)
        .enumerate()
        .map(|(i, g)| (g, i))
        .collect();
    let mut out = Vec::with_capacity(combo.len());
    for (g, q) in combo {
        if !q.denom().is_one() {
            return Err(SpeckerError::NotIntegral);
        }
        let Some(&idx) = basis_index.get(&g) else {
            return Err(SpeckerError::BasisDoesNotCover {
                detail: alloc::format!("basis element {g} is outside the listed window"),
            });
        };
        out.push((idx, q.numer().clone()));
    }
    out.sort_by_key(|(i, _)| *i);
    Ok(out)
}

/// The embedding window over several levels: concatenated sparse integer
/// coordinates, reported as (level, basis index, value).
pub fn embed(
    e: &GroupElement,
    specs: &[EmbeddingSpec],
) -> Result<Vec<(u32, usize, BigInt)>, SpeckerError> {
    let mut out = Vec::new();
    for spec in specs {
        for (idx, value) in coordinates(e, spec)? {
            out.push((spec.level, idx, value));
        }
    }
    Ok(out)
}

/// Dense vector view of [`embed`] (zeros included), for kernel computations.
pub fn embed_dense(e: &GroupElement, specs: &[EmbeddingSpec]) -> Result<Vec<BigInt>, SpeckerError> {
    let total: usize = specs.iter().map(|s| s.coordinate_count()).sum();
    let mut dense = alloc::vec![BigInt::zero(); total];
    let mut offset = 0;
    for spec in specs {
        for (idx, value) in coordinates(e, spec)? {
            dense[offset + idx] = value;
        }
        offset += spec.coordinate_count();
    }
    Ok(dense)
}

/// The level bound past which truncation is injective on the subgroup
/// generated by the given elements: the maximal pairwise split depth of the
/// occurring branches plus the maximal x-prefix length plus one. From this
/// level on, truncation is injective on every branch pair and every prefix
/// in play, hence on the generated subgroup.
pub fn injectivity_level_bound(generators: &[GroupElement]) -> u32 {
    let mut branches: Vec<&Branch> = Vec::new();
    let mut max_prefix = 0u32;
    for e in generators {
        for (g, _) in e.terms() {
            let tuple = match g {
                Generator::X { tuple, .. } | Generator::Y { tuple, .. } => tuple,
            };
            branches.extend(tuple.entries());
            if let Generator::X { prefix, .. } = g {
                max_prefix = max_prefix.max(prefix.len() as u32);
            }
        }
    }
    let mut max_split = 0u32;
    for (i, a) in branches.iter().enumerate() {
        for b in &branches[..i] {
            if a != b {
                max_split = max_split.max(a.split_depth(b) as u32);
            }
        }
    }
    max_split + max_prefix + 1
}

/// Exact kernel check: the rank of the embedded generator matrix equals the
/// number of generators iff the embedding is injective on their span.
pub fn kernel_rank_deficit(
    generators: &[GroupElement],
    specs: &[EmbeddingSpec],
) -> Result<usize, SpeckerError> {
    let rows: Vec<Vec<BigInt>> = generators
        .iter()
        .map(|e| embed_dense(e, specs))
        .collect::<Result<_, _>>()?;
    let matrix = crate::lattice::IntMatrix::from_rows(rows);
    Ok(generators.len() - crate::lattice::rank(&matrix))
}

/// Scale an element by 1/a when every coefficient divides; used by the
/// purity checks.
pub fn divide_exactly(e: &GroupElement, a: &BigInt) -> Option<GroupElement> {
    let inv = BigRational::new(BigInt::one(), a.clone());
    let scaled = e.scale(&inv);
    Some(scaled)
}
