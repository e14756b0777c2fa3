//! Command-line workbench: presentations and normal forms, membership with
//! certificates, freeness bases and the divisibility witness, sequence
//! codecs, truncation embeddings, equation-chain solving, window metrics,
//! and finite-model stability reports.
//!
//! Exit codes: 0 pass, 1 certificate failure, 2 input error, 3 depth or
//! budget insufficiency.

mod parse;
mod report;

use std::fmt::Write as _;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_bigint::{BigInt, BigUint};
use num_traits::One;

use almostfree_core::eqsolver::{
    build_anti_retract_chain, solve_chain, BlockPermOracle, DyadicIntOracle, EqError,
    EquationChain, SolveOptions,
};
use almostfree_core::freeness::{
    build_basis_countable, build_basis_quotient, express_in_basis, nonfree_witness, verify_cert,
    WitnessConfig, WitnessError,
};
use almostfree_core::freewords::parse_word;
use almostfree_core::fsigma::{code_gen, decode, represent, CodeKind, CodeWord, Decoded, GenKind};
use almostfree_core::metricspace::{d_aut, d_rep, d_rep_prime, norm121, MetricError, MetricFlavor};
use almostfree_core::shygroup::{member_sum, BranchSet, Membership, ShyError};
use almostfree_core::specker::{embed, injectivity_level_bound, EmbeddingSpec, SpeckerError};
use almostfree_core::stability::{
    instability_tree, split_rank, type_count, RankValue, StabilityError, RANK_VARIANT_NOTE,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Command failure with its exit code.
enum Failure {
    /// Exit 1: a certificate or decision failed.
    Certificate(String),
    /// Exit 2: inputs did not parse or violate a precondition.
    Input(String),
    /// Exit 3: the window, depth, or budget cannot certify the request.
    Insufficient(String),
}

type CmdResult = Result<String, Failure>;

impl From<ShyError> for Failure {
    fn from(e: ShyError) -> Self {
        match e {
            ShyError::DepthTooSmall { .. } => Failure::Insufficient(format!("{e}")),
            ShyError::Malformed(_) => Failure::Input(format!("{e}")),
        }
    }
}

impl From<MetricError> for Failure {
    fn from(e: MetricError) -> Self {
        match e {
            MetricError::InsufficientDepth { .. } => Failure::Insufficient(format!("{e}")),
            MetricError::NotWeaklyConvergent { .. } => Failure::Certificate(format!("{e}")),
            MetricError::NotAPermutation => Failure::Input(format!("{e}")),
        }
    }
}

impl From<EqError> for Failure {
    fn from(e: EqError) -> Self {
        match e {
            EqError::IllFormed(_) => Failure::Input(format!("{e}")),
            EqError::ModulusExhausted { .. } => Failure::Insufficient(format!("{e}")),
            _ => Failure::Certificate(format!("{e}")),
        }
    }
}

impl From<StabilityError> for Failure {
    fn from(e: StabilityError) -> Self {
        match e {
            StabilityError::BudgetExceeded { .. } => Failure::Insufficient(format!("{e}")),
            StabilityError::Malformed(_) => Failure::Input(format!("{e}")),
        }
    }
}

impl From<WitnessError> for Failure {
    fn from(e: WitnessError) -> Self {
        match e {
            WitnessError::ConfigViolation { .. } => Failure::Certificate(format!("{e}")),
            WitnessError::Shy(inner) => inner.into(),
        }
    }
}

impl From<SpeckerError> for Failure {
    fn from(e: SpeckerError) -> Self {
        match e {
            SpeckerError::BasisDoesNotCover { .. } => Failure::Insufficient(format!("{e}")),
            SpeckerError::NotIntegral => Failure::Input(format!("{e}")),
            SpeckerError::Shy(inner) => inner.into(),
        }
    }
}

impl From<almostfree_core::fsigma::CodeError> for Failure {
    fn from(e: almostfree_core::fsigma::CodeError) -> Self {
        use almostfree_core::fsigma::CodeError;
        match e {
            CodeError::DepthTooSmall(_) => Failure::Insufficient(format!("{e}")),
            _ => Failure::Input(format!("{e}")),
        }
    }
}

fn input(e: impl std::fmt::Display) -> Failure {
    Failure::Input(format!("{e}"))
}

#[derive(Parser)]
#[command(
    name = "almostfree",
    version,
    about = "Exact workbench for branch-indexed abelian group presentations, freeness \
             certificates, dyadic metrics, equation chains, and stability ranks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DepthArg {
    /// Truncation depth (default: $ALMOSTFREE_DEPTH or 6).
    #[arg(long)]
    depth: Option<u32>,
}

impl DepthArg {
    fn get(&self) -> u32 {
        self.depth.unwrap_or_else(|| {
            std::env::var("ALMOSTFREE_DEPTH")
                .ok()
                .and_then(|v| v.parse().ok())
                .unwrap_or(6)
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Rewrite an element into level-canonical coordinates.
    Normalize {
        #[arg(long)]
        kstar: usize,
        /// Target level of the canonical form.
        #[arg(long)]
        level: u32,
        /// Element literal, e.g. "1 y[*0; 0] - 2 x[0; ; 01]".
        element: String,
    },
    /// Decide membership in a subgroup or a sum of subgroups.
    Member {
        /// Branch set for a single subgroup (comma-separated literals).
        #[arg(long, conflicts_with = "parts")]
        set: Option<String>,
        /// `|`-separated branch lists, one per part of a sum.
        #[arg(long)]
        parts: Option<String>,
        /// Inline element literal.
        #[arg(long, conflicts_with = "element_file")]
        element: Option<String>,
        /// Element file: one `coeff generator` line per term.
        #[arg(long)]
        element_file: Option<std::path::PathBuf>,
        /// Presentation file carrying `branches`, optional `exclude`, and
        /// `elem` lines; each element is tested against the file's subgroup.
        #[arg(long, conflicts_with_all = ["set", "parts", "element", "element_file"])]
        presentation: Option<std::path::PathBuf>,
        #[command(flatten)]
        depth: DepthArg,
    },
    /// Build (or re-verify) the free-basis certificate of a subgroup.
    Basis {
        #[arg(long)]
        kstar: usize,
        #[arg(long, default_value = "")]
        set: String,
        #[command(flatten)]
        depth: DepthArg,
        /// Re-check a previously written report instead of rebuilding.
        #[arg(long)]
        verify: Option<std::path::PathBuf>,
    },
    /// Build (or re-verify) the free-basis certificate of a quotient.
    BasisQuotient {
        #[arg(long)]
        kstar: usize,
        #[arg(long, default_value = "")]
        set: String,
        /// The excluded finite set u.
        #[arg(long)]
        exclude: String,
        #[command(flatten)]
        depth: DepthArg,
        #[arg(long)]
        verify: Option<std::path::PathBuf>,
    },
    /// Build a basis certificate and verify soundness and triangularity.
    CheckFree {
        #[arg(long)]
        kstar: usize,
        #[arg(long, default_value = "")]
        set: String,
        #[command(flatten)]
        depth: DepthArg,
    },
    /// Run the non-freeness divisibility witness from a config file.
    Witness {
        #[arg(long)]
        kstar: usize,
        /// Config file: `kstar`, `star`, and one `part` line per slot.
        #[arg(long)]
        config: std::path::PathBuf,
        /// Number of identity levels to certify.
        #[command(flatten)]
        depth: DepthArg,
        #[arg(long)]
        verify: Option<std::path::PathBuf>,
    },
    /// Encode a generator or element as a code word.
    Encode {
        #[arg(long, conflicts_with = "element")]
        generator: Option<String>,
        #[arg(long)]
        element: Option<String>,
        #[command(flatten)]
        depth: DepthArg,
    },
    /// Decode a code word back to its generator or element.
    Decode {
        /// Code word literal `kind:e0,e1,...@depth`.
        word: String,
    },
    /// Embed an element through truncation levels into integer coordinates.
    Embed {
        #[arg(long)]
        kstar: usize,
        #[arg(long)]
        set: String,
        /// Comma-separated truncation levels; default: the computed
        /// injectivity bound.
        #[arg(long)]
        levels: Option<String>,
        #[arg(long)]
        element: String,
        #[command(flatten)]
        depth: DepthArg,
    },
    /// Solve an equation chain from a chain file.
    SolveChain {
        #[arg(long)]
        file: std::path::PathBuf,
        /// Precision goal, e.g. `2^-8` or `1/256`.
        #[arg(long)]
        precision: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Perturbation samples per level for the hypothesis check.
        #[arg(long, default_value_t = 32)]
        samples: usize,
    },
    /// Evaluate a window metric.
    Metric {
        /// One of `aut`, `end`, `rep`, `rep-prime`, `norm`.
        #[arg(long)]
        metric: String,
        /// First permutation window `depth; i->j ...`.
        #[arg(long)]
        f: Option<String>,
        /// Second permutation window.
        #[arg(long)]
        g: Option<String>,
        /// Level cutoffs for the layered metrics.
        #[arg(long)]
        rep: Option<String>,
        /// Branch vector `coeff branch, ...` for the prefix norm.
        #[arg(long)]
        vector: Option<String>,
    },
    /// Compute the finite splitting rank of a tuple set.
    Rank {
        #[arg(long)]
        model: std::path::PathBuf,
        #[arg(long, default_value_t = 1)]
        m: usize,
        /// Explicit tuple set `0,1;2,3`; default: all m-tuples.
        #[arg(long)]
        set: Option<String>,
    },
    /// Search for an instability tree of the given height.
    Tree {
        #[arg(long)]
        model: std::path::PathBuf,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long)]
        height: usize,
        #[arg(long, default_value_t = 1_000_000)]
        budget: usize,
    },
    /// Extract the n-th root of a free-group word.
    Roots {
        #[arg(long)]
        word: String,
        #[arg(long)]
        n: u32,
    },
    /// Build anti-retract chain stages over the free group.
    AntiRetract {
        /// Comma-separated word literals to obstruct.
        #[arg(long)]
        enumeration: String,
        /// Comma-separated near-identity word literals.
        #[arg(long)]
        near_identity: String,
        #[arg(long)]
        stages: usize,
    },
}

fn read_file(path: &std::path::Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))
}

fn check_kstar(
    element: &almostfree_core::shygroup::GroupElement,
    kstar: usize,
) -> Result<(), Failure> {
    for (g, _) in element.terms() {
        if g.k_star() != kstar {
            return Err(Failure::Input(format!(
                "generator {g} has width {} but kstar is {kstar}",
                g.k_star()
            )));
        }
    }
    Ok(())
}

fn run_normalize(kstar: usize, level: u32, element: &str) -> CmdResult {
    let e = parse::parse_element(element).map_err(Failure::Input)?;
    check_kstar(&e, kstar)?;
    let raised = e.raise_level(level)?;
    Ok(format!("{raised}\n"))
}

fn run_member(
    set: Option<&str>,
    parts: Option<&str>,
    element: Option<&str>,
    element_file: Option<&std::path::Path>,
    depth: u32,
) -> CmdResult {
    let parts: Vec<BranchSet> = match (set, parts) {
        (Some(s), None) => vec![parse::parse_branch_set(s).map_err(Failure::Input)?],
        (None, Some(p)) => parse::parse_parts(p).map_err(Failure::Input)?,
        _ => {
            return Err(Failure::Input(
                "exactly one of --set / --parts is required".into(),
            ))
        }
    };
    let e = match (element, element_file) {
        (Some(text), None) => parse::parse_element(text).map_err(Failure::Input)?,
        (None, Some(path)) => {
            parse::parse_element_file(&read_file(path)?).map_err(Failure::Input)?
        }
        _ => {
            return Err(Failure::Input(
                "exactly one of --element / --element-file is required".into(),
            ))
        }
    };
    let mut out = String::new();
    let _ = writeln!(out, "REPORT member v{}", report::VERSION);
    let _ = writeln!(out, "depth {depth}");
    match member_sum(&e, &parts, depth)? {
        Membership::Member(cert) => {
            let _ = writeln!(out, "RESULT MEMBER");
            let _ = writeln!(out, "CERTIFICATE");
            for (part, generator, coeff) in &cert.combination {
                let _ = writeln!(out, "{coeff} {generator} in part {part}");
            }
            let _ = writeln!(out, "END");
            Ok(out)
        }
        Membership::NotMember(obstruction) => {
            let _ = writeln!(out, "RESULT NOT-MEMBER");
            let _ = writeln!(
                out,
                "OBSTRUCTION coordinate={} coefficient={} reason={:?}",
                obstruction.coordinate, obstruction.coefficient, obstruction.reason
            );
            let _ = writeln!(out, "END");
            Err(Failure::Certificate(out))
        }
    }
}

/// Membership of every element of a presentation file against the file's
/// subgroup: `G_U` when no `exclude` line is present, the sum of parts
/// `G_{U,u}` otherwise. Canonicalization warnings go to stderr.
fn run_member_presentation(path: &std::path::Path, depth: u32) -> CmdResult {
    let presentation = parse::parse_presentation(&read_file(path)?).map_err(Failure::Input)?;
    for w in &presentation.warnings {
        eprintln!("warning: {w}");
    }
    let parts =
        almostfree_core::shygroup::quotient_parts(&presentation.set, &presentation.excluded);
    let mut out = String::new();
    let _ = writeln!(out, "REPORT member v{}", report::VERSION);
    let _ = writeln!(out, "depth {depth}");
    let _ = writeln!(out, "elements {}", presentation.elements.len());
    let mut all_member = true;
    for (i, e) in presentation.elements.iter().enumerate() {
        match member_sum(e, &parts, depth)? {
            Membership::Member(_) => {
                let _ = writeln!(out, "elem {i}: MEMBER");
            }
            Membership::NotMember(obstruction) => {
                all_member = false;
                let _ = writeln!(
                    out,
                    "elem {i}: NOT-MEMBER coordinate={} reason={:?}",
                    obstruction.coordinate, obstruction.reason
                );
            }
        }
    }
    let _ = writeln!(out, "END");
    if all_member {
        Ok(out)
    } else {
        Err(Failure::Certificate(out))
    }
}

fn run_basis(
    kstar: usize,
    set: &str,
    exclude: Option<&str>,
    depth: u32,
    verify: Option<&std::path::Path>,
) -> CmdResult {
    if let Some(path) = verify {
        let content = read_file(path)?;
        let cert = report::parse_basis_report(&content).map_err(Failure::Input)?;
        report::verify_basis_report(&cert).map_err(Failure::Certificate)?;
        return Ok(format!(
            "VERIFIED basis report: {} rewrites, {} tuples\n",
            cert.rewrites.len(),
            cert.tuples.len()
        ));
    }
    let set = parse::parse_branch_set(set).map_err(Failure::Input)?;
    let cert = match exclude {
        None => build_basis_countable(&set, kstar, depth)?,
        Some(u) => {
            let u = parse::parse_branch_set(u).map_err(Failure::Input)?;
            build_basis_quotient(&set, &u, kstar, depth)?
        }
    };
    Ok(report::write_basis_report(&cert))
}

fn run_check_free(kstar: usize, set: &str, depth: u32) -> CmdResult {
    let set = parse::parse_branch_set(set).map_err(Failure::Input)?;
    let cert = build_basis_countable(&set, kstar, depth)?;
    verify_cert(&cert).map_err(Failure::Certificate)?;
    // Spot-check beyond the stored rewrites: basis members express as
    // themselves.
    for g in cert.basis_y3.iter().take(8) {
        let combo = express_in_basis(g, &cert)?;
        if combo.len() != 1 || combo[0].0 != *g || combo[0].1 != BigInt::one() {
            return Err(Failure::Certificate(format!(
                "basis member {g} does not express as itself"
            )));
        }
    }
    let mut out = report::write_basis_report(&cert);
    let _ = writeln!(out, "RESULT PASS");
    Ok(out)
}

fn parse_witness_config(content: &str, kstar: usize) -> Result<WitnessConfig, Failure> {
    let mut star = None;
    let mut parts = Vec::new();
    let mut file_kstar = None;
    for (lineno, raw) in content.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(v) = line.strip_prefix("kstar") {
            file_kstar = Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| Failure::Input(format!("line {}: bad kstar", lineno + 1)))?,
            );
        } else if let Some(v) = line.strip_prefix("star") {
            let tuple = parse::parse_branch_list(v).map_err(Failure::Input)?;
            star = Some(almostfree_core::shygroup::BranchTuple::full(tuple));
        } else if let Some(v) = line.strip_prefix("part") {
            parts.push(BranchSet::new(
                parse::parse_branch_list(v.trim()).map_err(Failure::Input)?,
            ));
        } else {
            return Err(Failure::Input(format!(
                "line {}: unrecognized witness directive",
                lineno + 1
            )));
        }
    }
    if let Some(k) = file_kstar {
        if k != kstar {
            return Err(Failure::Input(format!(
                "config kstar {k} disagrees with --kstar {kstar}"
            )));
        }
    }
    Ok(WitnessConfig {
        k_star: kstar,
        star: star.ok_or_else(|| Failure::Input("config missing star".into()))?,
        parts,
    })
}

fn run_witness(
    kstar: usize,
    config_path: &std::path::Path,
    depth: u32,
    verify: Option<&std::path::Path>,
) -> CmdResult {
    if let Some(path) = verify {
        let content = read_file(path)?;
        report::verify_witness_report(&content).map_err(Failure::Certificate)?;
        return Ok("VERIFIED witness report\n".to_string());
    }
    let config = parse_witness_config(&read_file(config_path)?, kstar)?;
    let cert = nonfree_witness(&config, depth)?;
    Ok(report::write_witness_report(&cert))
}

fn parse_code_word(text: &str) -> Result<CodeWord, Failure> {
    let (head, rest) = text
        .split_once(':')
        .ok_or_else(|| Failure::Input("code word needs `kind:`".into()))?;
    let kind = match head {
        "x" => CodeKind::XGen,
        "y" => CodeKind::YGen,
        other => {
            let kinds = other
                .strip_prefix("e[")
                .and_then(|s| s.strip_suffix(']'))
                .ok_or_else(|| Failure::Input(format!("bad code kind `{other}`")))?;
            let witness_kinds = kinds
                .chars()
                .map(|c| match c {
                    'x' => Ok(GenKind::X),
                    'y' => Ok(GenKind::Y),
                    _ => Err(Failure::Input(format!("bad witness kind `{c}`"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            CodeKind::Element { witness_kinds }
        }
    };
    let (entries_text, depth_text) = rest
        .rsplit_once('@')
        .ok_or_else(|| Failure::Input("code word needs `@depth`".into()))?;
    let depth: usize = depth_text
        .parse()
        .map_err(|_| Failure::Input(format!("bad depth `{depth_text}`")))?;
    let entries = entries_text
        .split(',')
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.trim()
                .parse::<BigUint>()
                .map_err(|_| Failure::Input(format!("bad entry `{s}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CodeWord {
        kind,
        entries,
        depth,
    })
}

fn run_encode(generator: Option<&str>, element: Option<&str>, depth: u32) -> CmdResult {
    match (generator, element) {
        (Some(g), None) => {
            let g = parse::parse_generator(g).map_err(Failure::Input)?;
            Ok(format!("{}\n", code_gen(&g, depth as usize)))
        }
        (None, Some(e)) => {
            let e = parse::parse_element(e).map_err(Failure::Input)?;
            let (word, witness) = represent(&e, depth as usize)?;
            let mut out = format!("{word}\n");
            let _ = writeln!(out, "(a) combination:");
            for (g, a) in &witness.combination {
                let _ = writeln!(out, "    {a} {g}");
            }
            let kinds: String = witness
                .combination
                .iter()
                .map(|(g, _)| match g {
                    almostfree_core::shygroup::Generator::X { .. } => 'x',
                    almostfree_core::shygroup::Generator::Y { .. } => 'y',
                })
                .collect();
            let _ = writeln!(out, "(b) witness kinds: {kinds}");
            let _ = writeln!(
                out,
                "(c) witnesses without repetition: {}",
                witness.combination.len()
            );
            let _ = writeln!(
                out,
                "(d)(e) minimal separating prefix length: {}",
                witness.separation
            );
            let _ = writeln!(
                out,
                "(f) empty combination forces length 0: {}",
                if witness.combination.is_empty() {
                    "applies"
                } else {
                    "n/a"
                }
            );
            let _ = writeln!(out, "(g) witnesses in lexicographic code order");
            let _ = writeln!(out, "(h) stream entries listed above with @depth");
            Ok(out)
        }
        _ => Err(Failure::Input(
            "exactly one of --generator / --element is required".into(),
        )),
    }
}

fn run_decode(word: &str) -> CmdResult {
    let word = parse_code_word(word)?;
    match decode(&word)? {
        Decoded::Generator(g) => Ok(format!("{g}\n")),
        Decoded::Element(e) => Ok(format!("{e}\n")),
    }
}

fn run_embed(
    kstar: usize,
    set: &str,
    levels: Option<&str>,
    element: &str,
    depth: u32,
) -> CmdResult {
    let universe = parse::parse_branch_set(set).map_err(Failure::Input)?;
    let e = parse::parse_element(element).map_err(Failure::Input)?;
    check_kstar(&e, kstar)?;
    let levels: Vec<u32> = match levels {
        Some(text) => text
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<u32>()
                    .map_err(|_| Failure::Input(format!("bad level `{s}`")))
            })
            .collect::<Result<_, _>>()?,
        None => vec![injectivity_level_bound(std::slice::from_ref(&e))],
    };
    let specs = levels
        .iter()
        .map(|&n| EmbeddingSpec::build(n, &universe, kstar, depth))
        .collect::<Result<Vec<_>, _>>()?;
    let coords = embed(&e, &specs)?;
    let mut out = String::new();
    for (level, index, value) in coords {
        let _ = writeln!(out, "{level}:{index}={value}");
    }
    if out.is_empty() {
        out.push_str("zero\n");
    }
    Ok(out)
}

fn run_solve_chain(
    path: &std::path::Path,
    precision: &str,
    seed: u64,
    samples: usize,
) -> CmdResult {
    let goal = parse::parse_rational(precision).map_err(Failure::Input)?;
    let options = SolveOptions {
        perturbation_samples: samples,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let content = read_file(path)?;
    let mut out = String::new();
    let _ = writeln!(out, "REPORT solve-chain v{}", report::VERSION);
    let _ = writeln!(out, "seed {seed}");
    let _ = writeln!(out, "precision {goal}");
    match parse::parse_chain_file(&content).map_err(Failure::Input)? {
        parse::ChainFile::Dyadic { precision, levels } => {
            let oracle = DyadicIntOracle::new(precision);
            let chain = EquationChain::with_default_modulus(levels);
            let solution = solve_chain(&chain, &oracle, &goal, &options, &mut rng)?;
            let _ = writeln!(out, "stage {}", solution.stage);
            let _ = writeln!(out, "certified-levels {}", solution.certified_levels);
            for (n, row) in solution.values.iter().enumerate() {
                let _ = writeln!(out, "level {n}: {}", row[0]);
            }
        }
        parse::ChainFile::BlockPerm { rep, levels, .. } => {
            let oracle = BlockPermOracle::new(rep);
            let chain = EquationChain::with_default_modulus(levels);
            let solution = solve_chain(&chain, &oracle, &goal, &options, &mut rng)?;
            let _ = writeln!(out, "stage {}", solution.stage);
            let _ = writeln!(out, "certified-levels {}", solution.certified_levels);
            for (n, row) in solution.values.iter().enumerate() {
                let images: Vec<String> = row[0].images.iter().map(|x| x.to_string()).collect();
                let _ = writeln!(out, "level {n}: {}", images.join(" "));
            }
        }
    }
    let _ = writeln!(out, "RESULT PASS");
    let _ = writeln!(out, "END");
    Ok(out)
}

fn run_metric(
    metric: &str,
    f: Option<&str>,
    g: Option<&str>,
    rep: Option<&str>,
    vector: Option<&str>,
) -> CmdResult {
    let need_pair = |f: Option<&str>, g: Option<&str>| -> Result<_, Failure> {
        let f =
            parse::parse_partial_aut(f.ok_or_else(|| Failure::Input("--f is required".into()))?)
                .map_err(Failure::Input)?;
        let g =
            parse::parse_partial_aut(g.ok_or_else(|| Failure::Input("--g is required".into()))?)
                .map_err(Failure::Input)?;
        Ok((f, g))
    };
    let value = match metric {
        "aut" | "end" => {
            let (f, g) = need_pair(f, g)?;
            let flavor = if metric == "aut" {
                MetricFlavor::Automorphism
            } else {
                MetricFlavor::Endomorphism
            };
            d_aut(&f, &g, flavor)?
        }
        "rep" | "rep-prime" => {
            let (f, g) = need_pair(f, g)?;
            let rep = parse::parse_omega_rep(
                rep.ok_or_else(|| Failure::Input("--rep is required".into()))?,
            )
            .map_err(Failure::Input)?;
            if metric == "rep" {
                d_rep(&f, &g, &rep, MetricFlavor::Automorphism)?
            } else {
                d_rep_prime(&f, &g, &rep, MetricFlavor::Automorphism)?
            }
        }
        "norm" => {
            let vector = parse::parse_branch_vector(
                vector.ok_or_else(|| Failure::Input("--vector is required".into()))?,
            )
            .map_err(Failure::Input)?;
            norm121(&vector)
        }
        other => return Err(Failure::Input(format!("unknown metric `{other}`"))),
    };
    Ok(format!("{value}\n"))
}

fn all_m_tuples(universe: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..m {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..universe).map(move |x| {
                    let mut u = t.clone();
                    u.push(x);
                    u
                })
            })
            .collect();
    }
    out
}

fn run_rank(path: &std::path::Path, m: usize, set: Option<&str>) -> CmdResult {
    let (model, delta) = parse::parse_model_file(&read_file(path)?).map_err(Failure::Input)?;
    let tuples: std::collections::BTreeSet<Vec<usize>> = match set {
        Some(text) => parse::parse_tuple_set(text)
            .map_err(Failure::Input)?
            .into_iter()
            .collect(),
        None => all_m_tuples(model.universe, m).into_iter().collect(),
    };
    let rank = split_rank(&tuples, &model, &delta);
    let types = type_count(m, &(0..model.universe).collect::<Vec<_>>(), &model, &delta);
    let mut out = String::new();
    let _ = writeln!(out, "REPORT rank v{}", report::VERSION);
    let _ = writeln!(out, "note {RANK_VARIANT_NOTE}");
    let _ = writeln!(out, "m {m}");
    let _ = writeln!(out, "tuples {}", tuples.len());
    let _ = writeln!(out, "rank {rank}");
    let _ = writeln!(out, "types-over-universe {types}");
    let _ = writeln!(out, "END");
    if rank == RankValue::Infinity {
        return Err(Failure::Certificate(out));
    }
    Ok(out)
}

fn run_tree(path: &std::path::Path, m: usize, height: usize, budget: usize) -> CmdResult {
    let (model, delta) = parse::parse_model_file(&read_file(path)?).map_err(Failure::Input)?;
    let mut out = String::new();
    let _ = writeln!(out, "REPORT tree v{}", report::VERSION);
    let _ = writeln!(out, "note {RANK_VARIANT_NOTE}");
    let _ = writeln!(out, "height {height}");
    match instability_tree(&model, &delta, m, height, budget)? {
        Some(witness) => {
            witness
                .verify(&model, &delta)
                .map_err(|e| Failure::Certificate(format!("{e}")))?;
            fn visit(
                out: &mut String,
                witness: &almostfree_core::stability::TreeWitness,
                addr: &mut Vec<u8>,
                depth: usize,
            ) {
                let key: String = if addr.is_empty() {
                    "root".to_string()
                } else {
                    addr.iter().map(|b| char::from(b'0' + b)).collect()
                };
                if addr.len() == depth {
                    let leaf = &witness.leaves[addr];
                    let items: Vec<String> = leaf.iter().map(|x| x.to_string()).collect();
                    let _ = writeln!(out, "leaf {key}: {}", items.join(","));
                    return;
                }
                let node = &witness.nodes[addr];
                let p0: Vec<String> = node.params0.iter().map(|x| x.to_string()).collect();
                let p1: Vec<String> = node.params1.iter().map(|x| x.to_string()).collect();
                let _ = writeln!(
                    out,
                    "node {key}: f{}({}) / f{}({})",
                    node.formula0,
                    p0.join(","),
                    node.formula1,
                    p1.join(",")
                );
                addr.push(0);
                visit(out, witness, addr, depth);
                addr.pop();
                addr.push(1);
                visit(out, witness, addr, depth);
                addr.pop();
            }
            visit(&mut out, &witness, &mut Vec::new(), height);
            let _ = writeln!(out, "RESULT PASS");
            let _ = writeln!(out, "END");
            Ok(out)
        }
        None => {
            let _ = writeln!(out, "RESULT ABSENT");
            let _ = writeln!(out, "END");
            Ok(out)
        }
    }
}

fn run_roots(word: &str, n: u32) -> CmdResult {
    if n == 0 {
        return Err(Failure::Input("root index must be positive".into()));
    }
    let w = parse_word(word).map_err(input)?;
    match w.nth_root(n) {
        Some(root) => Ok(format!("{root}\n")),
        None => Ok("none\n".to_string()),
    }
}

fn run_anti_retract(enumeration: &str, near_identity: &str, stages: usize) -> CmdResult {
    let parse_words = |text: &str| -> Result<Vec<_>, Failure> {
        text.split(',')
            .map(|t| parse_word(t.trim()).map_err(input))
            .collect()
    };
    let enumeration = parse_words(enumeration)?;
    let near = parse_words(near_identity)?;
    let chain = build_anti_retract_chain(&enumeration, &near, stages)?;
    let mut out = String::new();
    let _ = writeln!(out, "REPORT anti-retract v{}", report::VERSION);
    for (k, stage) in chain.iter().enumerate() {
        let obstruction: Vec<String> = stage.obstruction.iter().map(|w| format!("{w}")).collect();
        let _ = writeln!(
            out,
            "stage {k}: term x^{}*{} obstruction {{{}}}",
            stage.exponent,
            stage.parameter,
            obstruction.join(", ")
        );
    }
    let _ = writeln!(out, "END");
    Ok(out)
}

fn dispatch(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Normalize {
            kstar,
            level,
            element,
        } => run_normalize(kstar, level, &element),
        Command::Member {
            set,
            parts,
            element,
            element_file,
            presentation,
            depth,
        } => match presentation {
            Some(path) => run_member_presentation(&path, depth.get()),
            None => run_member(
                set.as_deref(),
                parts.as_deref(),
                element.as_deref(),
                element_file.as_deref(),
                depth.get(),
            ),
        },
        Command::Basis {
            kstar,
            set,
            depth,
            verify,
        } => run_basis(kstar, &set, None, depth.get(), verify.as_deref()),
        Command::BasisQuotient {
            kstar,
            set,
            exclude,
            depth,
            verify,
        } => run_basis(kstar, &set, Some(&exclude), depth.get(), verify.as_deref()),
        Command::CheckFree { kstar, set, depth } => run_check_free(kstar, &set, depth.get()),
        Command::Witness {
            kstar,
            config,
            depth,
            verify,
        } => run_witness(kstar, &config, depth.get(), verify.as_deref()),
        Command::Encode {
            generator,
            element,
            depth,
        } => run_encode(generator.as_deref(), element.as_deref(), depth.get()),
        Command::Decode { word } => run_decode(&word),
        Command::Embed {
            kstar,
            set,
            levels,
            element,
            depth,
        } => run_embed(kstar, &set, levels.as_deref(), &element, depth.get()),
        Command::SolveChain {
            file,
            precision,
            seed,
            samples,
        } => run_solve_chain(&file, &precision, seed, samples),
        Command::Metric {
            metric,
            f,
            g,
            rep,
            vector,
        } => run_metric(
            &metric,
            f.as_deref(),
            g.as_deref(),
            rep.as_deref(),
            vector.as_deref(),
        ),
        Command::Rank { model, m, set } => run_rank(&model, m, set.as_deref()),
        Command::Tree {
            model,
            m,
            height,
            budget,
        } => run_tree(&model, m, height, budget),
        Command::Roots { word, n } => run_roots(&word, n),
        Command::AntiRetract {
            enumeration,
            near_identity,
            stages,
        } => run_anti_retract(&enumeration, &near_identity, stages),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(output) => {
            print!("{output}");
            ExitCode::SUCCESS
        }
        Err(Failure::Certificate(msg)) => {
            eprintln!("certificate failure:");
            print!("{msg}");
            if !msg.ends_with('\n') {
                println!();
            }
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("input error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Insufficient(msg)) => {
            eprintln!("insufficient depth or budget: {msg}");
            ExitCode::from(3)
        }
    }
}
