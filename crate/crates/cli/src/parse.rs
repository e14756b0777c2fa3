//! Text formats: branch/generator/element literals, permutation windows,
//! level chains, rationals, finite models, and quantifier-free formulas.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use almostfree_core::eqsolver::{AffineTerm, BlockPerm, ChainLevel, WordTerm};
use almostfree_core::freewords::{parse_word, Symbol, Word};
use almostfree_core::metricspace::{OmegaRep, PartialAut};
use almostfree_core::shygroup::{Branch, BranchSet, BranchTuple, Generator, GroupElement};
use almostfree_core::stability::{Ast, FinModel, Formula, Function, Relation, Term};

pub type ParseResult<T> = Result<T, String>;

pub fn parse_branch(text: &str) -> ParseResult<Branch> {
    Branch::parse(text.trim()).map_err(|e| format!("{e}"))
}

/// Comma-separated branch literals; the empty string is the empty set.
pub fn parse_branch_list(text: &str) -> ParseResult<Vec<Branch>> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(',').map(parse_branch).collect()
}

pub fn parse_branch_set(text: &str) -> ParseResult<BranchSet> {
    Ok(BranchSet::new(parse_branch_list(text)?))
}

/// `|`-separated branch lists, one per part.
pub fn parse_parts(text: &str) -> ParseResult<Vec<BranchSet>> {
    text.split('|').map(parse_branch_set).collect()
}

pub fn parse_bits(text: &str) -> ParseResult<Vec<u8>> {
    text.trim()
        .chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(format!("bad bit `{c}`")),
        })
        .collect()
}

/// Generator literals: `y[b0,...,bk; n]` and `x[m; b0,...; nu]`.
pub fn parse_generator(text: &str) -> ParseResult<Generator> {
    let text = text.trim();
    let (head, body) = text
        .split_once('[')
        .ok_or_else(|| format!("generator literal `{text}` missing ["))?;
    let body = body
        .strip_suffix(']')
        .ok_or_else(|| format!("generator literal `{text}` missing ]"))?;
    match head.trim() {
        "y" => {
            let (branches, level) = body
                .rsplit_once(';')
                .ok_or_else(|| format!("y-literal `{text}` needs `; level`"))?;
            let tuple = parse_branch_list(branches)?;
            if tuple.is_empty() {
                return Err(format!("y-literal `{text}` needs at least one branch"));
            }
            let level: u32 = level
                .trim()
                .parse()
                .map_err(|_| format!("bad level in `{text}`"))?;
            Ok(Generator::y(BranchTuple::full(tuple), level))
        }
        "x" => {
            let mut parts = body.splitn(3, ';');
            let m: usize = parts
                .next()
                .unwrap_or("")
                .trim()
                .parse()
                .map_err(|_| format!("bad slot in `{text}`"))?;
            let branches = parse_branch_list(parts.next().unwrap_or(""))?;
            let prefix = parse_bits(parts.next().unwrap_or(""))?;
            if m > branches.len() {
                return Err(format!("slot {m} out of range in `{text}`"));
            }
            Ok(Generator::x(m, BranchTuple::omitting(m, branches), prefix))
        }
        other => Err(format!("unknown generator kind `{other}`")),
    }
}

pub fn parse_rational(text: &str) -> ParseResult<BigRational> {
    let text = text.trim();
    if let Some(exp) = text.strip_prefix("2^-") {
        let e: u32 = exp
            .parse()
            .map_err(|_| format!("bad exponent in `{text}`"))?;
        return Ok(BigRational::new(BigInt::one(), BigInt::one() << e));
    }
    if let Some((num, den)) = text.split_once('/') {
        let n: BigInt = num
            .trim()
            .parse()
            .map_err(|_| format!("bad numerator `{num}`"))?;
        let d: BigInt = den
            .trim()
            .parse()
            .map_err(|_| format!("bad denominator `{den}`"))?;
        if d == BigInt::from(0) {
            return Err(format!("zero denominator in `{text}`"));
        }
        return Ok(BigRational::new(n, d));
    }
    let n: BigInt = text.parse().map_err(|_| format!("bad integer `{text}`"))?;
    Ok(BigRational::from_integer(n))
}

/// Inline element: terms `coeff generator` joined by ` + ` / ` - `, e.g.
/// `2 y[*0; 1] - 1 x[0; ; 01]`. A bare `0` is the zero element.
pub fn parse_element(text: &str) -> ParseResult<GroupElement> {
    let text = text.trim();
    if text == "0" {
        return Ok(GroupElement::zero());
    }
    let mut terms: Vec<(Generator, BigRational)> = Vec::new();
    // Normalize separators so each term starts with an explicit sign.
    let normalized = text.replace(" - ", " + -");
    for chunk in normalized.split(" + ") {
        let chunk = chunk.trim();
        if chunk.is_empty() {
            continue;
        }
        let (coeff_text, gen_text) = chunk
            .split_once(char::is_whitespace)
            .ok_or_else(|| format!("term `{chunk}` needs `coeff generator`"))?;
        let coeff = parse_rational(coeff_text)?;
        let generator = parse_generator(gen_text)?;
        terms.push((generator, coeff));
    }
    Ok(GroupElement::from_terms(terms))
}

/// Element file: one `coeff generator` term per line; blank lines and `#`
/// comments ignored. The whole file is one element.
pub fn parse_element_file(content: &str) -> ParseResult<GroupElement> {
    let mut terms = Vec::new();
    for (lineno, line) in content.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (coeff_text, gen_text) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| format!("line {}: expected `coeff generator`", lineno + 1))?;
        let coeff = parse_rational(coeff_text).map_err(|e| format!("line {}: {e}", lineno + 1))?;
        let generator =
            parse_generator(gen_text).map_err(|e| format!("line {}: {e}", lineno + 1))?;
        terms.push((generator, coeff));
    }
    Ok(GroupElement::from_terms(terms))
}

/// Presentation file: branch literals and element lines. Returns the branch
/// set, the optional excluded set, the elements, and any canonicalization
/// warnings.
pub struct Presentation {
    pub set: BranchSet,
    pub excluded: BranchSet,
    pub elements: Vec<GroupElement>,
    pub warnings: Vec<String>,
}

pub fn parse_presentation(content: &str) -> ParseResult<Presentation> {
    let mut set = BranchSet::default();
    let mut excluded = BranchSet::default();
    let mut elements = Vec::new();
    let mut warnings = Vec::new();
    for (lineno, raw) in content.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let lineno = lineno + 1;
        if let Some(rest) = line.strip_prefix("branches") {
            for lit in rest.split(&[',', ' '][..]).filter(|s| !s.trim().is_empty()) {
                let lit = lit.trim();
                if !Branch::is_canonical_literal(lit) {
                    let canonical = parse_branch(lit)?;
                    warnings.push(format!(
                        "line {lineno}: branch `{lit}` canonicalized to `{canonical}`"
                    ));
                }
                set.insert(parse_branch(lit)?);
            }
        } else if let Some(rest) = line.strip_prefix("exclude") {
            for lit in rest.split(&[',', ' '][..]).filter(|s| !s.trim().is_empty()) {
                let lit = lit.trim();
                if !Branch::is_canonical_literal(lit) {
                    let canonical = parse_branch(lit)?;
                    warnings.push(format!(
                        "line {lineno}: branch `{lit}` canonicalized to `{canonical}`"
                    ));
                }
                excluded.insert(parse_branch(lit)?);
            }
        } else if let Some(rest) = line.strip_prefix("elem") {
            elements.push(parse_element(rest).map_err(|e| format!("line {lineno}: {e}"))?);
        } else {
            return Err(format!("line {lineno}: unrecognized directive"));
        }
    }
    Ok(Presentation {
        set,
        excluded,
        elements,
        warnings,
    })
}

/// Permutation window: `depth; i->j i->j ...` (identity off the moves).
pub fn parse_partial_aut(text: &str) -> ParseResult<PartialAut> {
    let (depth_text, moves_text) = text
        .split_once(';')
        .ok_or_else(|| format!("permutation `{text}` needs `depth; moves`"))?;
    let depth: u32 = depth_text
        .trim()
        .parse()
        .map_err(|_| format!("bad depth `{depth_text}`"))?;
    let mut moves = Vec::new();
    for chunk in moves_text.split_whitespace() {
        let (i, j) = chunk
            .split_once("->")
            .ok_or_else(|| format!("bad move `{chunk}`"))?;
        let i: u32 = i.parse().map_err(|_| format!("bad point `{i}`"))?;
        let j: u32 = j.parse().map_err(|_| format!("bad point `{j}`"))?;
        moves.push((i, j));
    }
    PartialAut::from_moves(depth, &moves).map_err(|e| format!("{e}"))
}

/// Comma-separated strictly increasing cutoffs.
pub fn parse_omega_rep(text: &str) -> ParseResult<OmegaRep> {
    let cutoffs: Result<Vec<u32>, _> = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<u32>()
                .map_err(|_| format!("bad cutoff `{s}`"))
        })
        .collect();
    OmegaRep::new(cutoffs?).map_err(|e| format!("{e}"))
}

/// Branch vector `coeff branch, coeff branch, ...` for the prefix norm.
pub fn parse_branch_vector(text: &str) -> ParseResult<BTreeMap<Branch, BigRational>> {
    let mut out = BTreeMap::new();
    for chunk in text.split(',') {
        let chunk = chunk.trim();
        if chunk.is_empty() {
            continue;
        }
        let (coeff, branch) = chunk
            .split_once(char::is_whitespace)
            .ok_or_else(|| format!("vector term `{chunk}` needs `coeff branch`"))?;
        let coeff = parse_rational(coeff)?;
        let branch = parse_branch(branch)?;
        *out.entry(branch)
            .or_insert_with(|| BigRational::from_integer(0.into())) += coeff;
    }
    Ok(out)
}

/// A parsed chain file, over one of the two built-in oracles.
pub enum ChainFile {
    Dyadic {
        precision: u32,
        levels: Vec<ChainLevel<almostfree_core::eqsolver::DyadicIntOracle>>,
    },
    BlockPerm {
        rep: OmegaRep,
        levels: Vec<ChainLevel<almostfree_core::eqsolver::BlockPermOracle>>,
    },
}

fn parse_affine_term(text: &str, slot: usize) -> ParseResult<AffineTerm> {
    // `a*x+c` / `a*x-c` / `x+c` / `a*x`.
    let text: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let (coeff, rest) = match text.split_once("*x") {
        Some((a, rest)) => (
            a.parse::<BigInt>()
                .map_err(|_| format!("bad coefficient `{a}`"))?,
            rest,
        ),
        None => match text.strip_prefix('x') {
            Some(rest) => (BigInt::one(), rest),
            None => return Err(format!("affine term `{text}` must mention x")),
        },
    };
    let constant = if rest.is_empty() {
        BigInt::from(0)
    } else {
        rest.parse::<BigInt>()
            .map_err(|_| format!("bad constant `{rest}`"))?
    };
    Ok(AffineTerm {
        coeff,
        constant,
        slot,
    })
}

fn parse_block_perm(text: &str, size: u32) -> ParseResult<BlockPerm> {
    let text = text.trim();
    if text == "id" {
        return Ok(BlockPerm::identity(size));
    }
    let mut p = BlockPerm::identity(size);
    for chunk in text.split_whitespace() {
        let (i, j) = chunk
            .split_once("->")
            .ok_or_else(|| format!("bad move `{chunk}`"))?;
        let i: usize = i.parse().map_err(|_| format!("bad point `{i}`"))?;
        let j: u32 = j.parse().map_err(|_| format!("bad point `{j}`"))?;
        if i >= p.images.len() || j >= size {
            return Err(format!("move `{chunk}` outside the window"));
        }
        p.images[i] = j;
    }
    Ok(p)
}

fn parse_word_term(
    text: &str,
    slot: usize,
    params: &BTreeMap<String, BlockPerm>,
) -> ParseResult<WordTerm> {
    let word: Word = parse_word(text).map_err(|e| format!("{e}"))?;
    let mut slot_vars = BTreeMap::new();
    let mut bound = BTreeMap::new();
    for letter in word.letters() {
        let name = letter.symbol.name();
        if name == "x" {
            slot_vars.insert(Symbol::new("x"), slot);
        } else if let Some(p) = params.get(name) {
            bound.insert(Symbol::new(name), p.clone());
        } else {
            return Err(format!("unbound parameter `{name}` in term `{text}`"));
        }
    }
    Ok(WordTerm {
        word,
        slot_vars,
        params: bound,
    })
}

/// Chain file grammar:
/// `oracle dyadic <bits>` or `oracle blockperm <cutoffs>`, optional
/// `param <name>: <moves>` lines, then per-level records
/// `level <n>: term <t>; target <v>; zeta <q>`.
pub fn parse_chain_file(content: &str) -> ParseResult<ChainFile> {
    let mut lines = content
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty());
    let header = lines.next().ok_or("empty chain file")?;
    let header = header
        .strip_prefix("oracle")
        .ok_or("chain file must start with `oracle ...`")?
        .trim();
    if let Some(bits) = header.strip_prefix("dyadic") {
        let precision: u32 = bits
            .trim()
            .parse()
            .map_err(|_| format!("bad precision `{bits}`"))?;
        let mut levels = Vec::new();
        for line in lines {
            let (n, term, target, zeta) = split_level_line(line)?;
            if n != levels.len() {
                return Err(format!("levels must be consecutive; got {n}"));
            }
            levels.push(ChainLevel {
                slots: vec![n],
                terms: vec![parse_affine_term(term, n + 1)?],
                targets: vec![target
                    .trim()
                    .parse::<BigInt>()
                    .map_err(|_| format!("bad target `{target}`"))?],
                zeta: parse_rational(zeta)?,
            });
        }
        Ok(ChainFile::Dyadic { precision, levels })
    } else if let Some(cutoffs) = header.strip_prefix("blockperm") {
        let rep = parse_omega_rep(cutoffs.trim())?;
        let size = rep.cutoff(rep.levels() - 1);
        let mut params: BTreeMap<String, BlockPerm> = BTreeMap::new();
        let mut levels = Vec::new();
        for line in lines {
            if let Some(rest) = line.strip_prefix("param") {
                let (name, moves) = rest
                    .split_once(':')
                    .ok_or_else(|| format!("param line `{line}` needs `name: moves`"))?;
                params.insert(name.trim().to_string(), parse_block_perm(moves, size)?);
                continue;
            }
            let (n, term, target, zeta) = split_level_line(line)?;
            if n != levels.len() {
                return Err(format!("levels must be consecutive; got {n}"));
            }
            levels.push(ChainLevel {
                slots: vec![n],
                terms: vec![parse_word_term(term, n + 1, &params)?],
                targets: vec![parse_block_perm(target, size)?],
                zeta: parse_rational(zeta)?,
            });
        }
        Ok(ChainFile::BlockPerm { rep, levels })
    } else {
        Err(format!("unknown oracle `{header}`"))
    }
}

fn split_level_line(line: &str) -> ParseResult<(usize, &str, &str, &str)> {
    let rest = line
        .strip_prefix("level")
        .ok_or_else(|| format!("expected `level n: ...`, got `{line}`"))?;
    let (n, rest) = rest
        .split_once(':')
        .ok_or_else(|| format!("level line `{line}` needs `:`"))?;
    let n: usize = n.trim().parse().map_err(|_| format!("bad level `{n}`"))?;
    let mut term = None;
    let mut target = None;
    let mut zeta = None;
    for field in rest.split(';') {
        let field = field.trim();
        if let Some(v) = field.strip_prefix("slots") {
            // Singleton slot sets are implied by the level number; an
            // explicit field must agree.
            let slot: usize = v
                .trim()
                .parse()
                .map_err(|_| format!("bad slot `{v}` in level {n}"))?;
            if slot != n {
                return Err(format!("level {n} declares slot {slot}"));
            }
        } else if let Some(v) = field.strip_prefix("term") {
            term = Some(v.trim());
        } else if let Some(v) = field.strip_prefix("target") {
            target = Some(v.trim());
        } else if let Some(v) = field.strip_prefix("zeta") {
            zeta = Some(v.trim());
        } else if !field.is_empty() {
            return Err(format!("unknown field `{field}` in level {n}"));
        }
    }
    Ok((
        n,
        term.ok_or_else(|| format!("level {n} missing term"))?,
        target.ok_or_else(|| format!("level {n} missing target"))?,
        zeta.ok_or_else(|| format!("level {n} missing zeta"))?,
    ))
}

/// Model file: `universe N`, relation blocks `rel NAME ARITY` with tuple
/// rows until `end`, optional function blocks `fun NAME ARITY` with one
/// row-major table line, and `delta FORMULA` lines.
pub fn parse_model_file(content: &str) -> ParseResult<(FinModel, Vec<Formula>)> {
    let mut universe = None;
    let mut relations = Vec::new();
    let mut functions = Vec::new();
    let mut delta_texts: Vec<String> = Vec::new();
    let mut lines = content
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .peekable();
    while let Some(line) = lines.next() {
        if let Some(rest) = line.strip_prefix("universe") {
            universe = Some(
                rest.trim()
                    .parse::<usize>()
                    .map_err(|_| format!("bad universe `{rest}`"))?,
            );
        } else if let Some(rest) = line.strip_prefix("rel") {
            let mut parts = rest.split_whitespace();
            let name = parts.next().ok_or("rel needs a name")?.to_string();
            let arity: usize = parts
                .next()
                .ok_or("rel needs an arity")?
                .parse()
                .map_err(|_| "bad arity".to_string())?;
            let mut tuples = std::collections::BTreeSet::new();
            for row in lines.by_ref() {
                if row == "end" {
                    break;
                }
                let tuple: Result<Vec<usize>, _> = row
                    .split_whitespace()
                    .map(|t| t.parse::<usize>().map_err(|_| format!("bad element `{t}`")))
                    .collect();
                let tuple = tuple?;
                if tuple.len() != arity {
                    return Err(format!("tuple arity mismatch in relation {name}"));
                }
                tuples.insert(tuple);
            }
            relations.push(Relation {
                name,
                arity,
                tuples,
            });
        } else if let Some(rest) = line.strip_prefix("fun") {
            let mut parts = rest.split_whitespace();
            let name = parts.next().ok_or("fun needs a name")?.to_string();
            let arity: usize = parts
                .next()
                .ok_or("fun needs an arity")?
                .parse()
                .map_err(|_| "bad arity".to_string())?;
            let mut table = Vec::new();
            for row in lines.by_ref() {
                if row == "end" {
                    break;
                }
                for t in row.split_whitespace() {
                    table.push(t.parse::<usize>().map_err(|_| format!("bad value `{t}`"))?);
                }
            }
            functions.push(Function { name, arity, table });
        } else if let Some(rest) = line.strip_prefix("delta") {
            delta_texts.push(rest.trim().to_string());
        } else {
            return Err(format!("unrecognized model directive `{line}`"));
        }
    }
    let universe = universe.ok_or("model file missing `universe N`")?;
    let model = FinModel::new(universe, relations, functions).map_err(|e| format!("{e}"))?;
    let delta = delta_texts
        .iter()
        .map(|t| parse_formula(t, &model))
        .collect::<ParseResult<Vec<Formula>>>()?;
    Ok((model, delta))
}

/// Quantifier-free formulas: atoms `rel(args)`, equalities `t = t`, negation
/// `!φ`, conjunction `&`, disjunction `|`, parentheses. Arguments are `x<i>`,
/// `y<j>`, or function applications.
pub fn parse_formula(text: &str, model: &FinModel) -> ParseResult<Formula> {
    let tokens = tokenize(text)?;
    let mut pos = 0;
    let ast = parse_disj(&tokens, &mut pos, model)?;
    if pos != tokens.len() {
        return Err(format!("trailing tokens in formula `{text}`"));
    }
    let (mut xa, mut ya) = (0, 0);
    arities(&ast, &mut xa, &mut ya);
    Ok(Formula {
        name: text.to_string(),
        x_arity: xa,
        y_arity: ya,
        ast,
    })
}

fn arities(ast: &Ast, xa: &mut usize, ya: &mut usize) {
    fn term_arities(t: &Term, xa: &mut usize, ya: &mut usize) {
        match t {
            Term::X(i) => *xa = (*xa).max(i + 1),
            Term::Y(j) => *ya = (*ya).max(j + 1),
            Term::App(_, args) => args.iter().for_each(|a| term_arities(a, xa, ya)),
        }
    }
    match ast {
        Ast::Rel(_, args) => args.iter().for_each(|a| term_arities(a, xa, ya)),
        Ast::Eq(a, b) => {
            term_arities(a, xa, ya);
            term_arities(b, xa, ya);
        }
        Ast::Not(inner) => arities(inner, xa, ya),
        Ast::And(a, b) | Ast::Or(a, b) => {
            arities(a, xa, ya);
            arities(b, xa, ya);
        }
    }
}

#[derive(Debug, PartialEq)]
enum Token {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Bang,
    Amp,
    Pipe,
    Equals,
}

fn tokenize(text: &str) -> ParseResult<Vec<Token>> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            ' ' | '\t' => {
                chars.next();
            }
            '(' => {
                chars.next();
                out.push(Token::LParen);
            }
            ')' => {
                chars.next();
                out.push(Token::RParen);
            }
            ',' => {
                chars.next();
                out.push(Token::Comma);
            }
            '!' => {
                chars.next();
                out.push(Token::Bang);
            }
            '&' => {
                chars.next();
                out.push(Token::Amp);
            }
            '|' => {
                chars.next();
                out.push(Token::Pipe);
            }
            '=' => {
                chars.next();
                out.push(Token::Equals);
            }
            c if c.is_alphanumeric() || c == '_' => {
                let mut ident = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_alphanumeric() || c == '_' {
                        ident.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                out.push(Token::Ident(ident));
            }
            other => return Err(format!("unexpected character `{other}`")),
        }
    }
    Ok(out)
}

fn parse_disj(tokens: &[Token], pos: &mut usize, model: &FinModel) -> ParseResult<Ast> {
    let mut left = parse_conj(tokens, pos, model)?;
    while matches!(tokens.get(*pos), Some(Token::Pipe)) {
        *pos += 1;
        let right = parse_conj(tokens, pos, model)?;
        left = Ast::Or(Box::new(left), Box::new(right));
    }
    Ok(left)
}

fn parse_conj(tokens: &[Token], pos: &mut usize, model: &FinModel) -> ParseResult<Ast> {
    let mut left = parse_atom(tokens, pos, model)?;
    while matches!(tokens.get(*pos), Some(Token::Amp)) {
        *pos += 1;
        let right = parse_atom(tokens, pos, model)?;
        left = Ast::And(Box::new(left), Box::new(right));
    }
    Ok(left)
}

fn parse_atom(tokens: &[Token], pos: &mut usize, model: &FinModel) -> ParseResult<Ast> {
    match tokens.get(*pos) {
        Some(Token::Bang) => {
            *pos += 1;
            Ok(Ast::Not(Box::new(parse_atom(tokens, pos, model)?)))
        }
        Some(Token::LParen) => {
            *pos += 1;
            let inner = parse_disj(tokens, pos, model)?;
            if !matches!(tokens.get(*pos), Some(Token::RParen)) {
                return Err("missing )".to_string());
            }
            *pos += 1;
            Ok(inner)
        }
        Some(Token::Ident(_)) => {
            let term = parse_term(tokens, pos, model)?;
            match (term, tokens.get(*pos)) {
                // A bare relation application.
                (TermOrRel::Rel(r, args), _) => Ok(Ast::Rel(r, args)),
                (TermOrRel::Term(lhs), Some(Token::Equals)) => {
                    *pos += 1;
                    match parse_term(tokens, pos, model)? {
                        TermOrRel::Term(rhs) => Ok(Ast::Eq(lhs, rhs)),
                        TermOrRel::Rel(..) => Err("relation on rhs of =".to_string()),
                    }
                }
                (TermOrRel::Term(_), _) => Err("bare term is not a formula".to_string()),
            }
        }
        other => Err(format!("unexpected token {other:?}")),
    }
}

enum TermOrRel {
    Term(Term),
    Rel(usize, Vec<Term>),
}

fn parse_term(tokens: &[Token], pos: &mut usize, model: &FinModel) -> ParseResult<TermOrRel> {
    let Some(Token::Ident(name)) = tokens.get(*pos) else {
        return Err("expected identifier".to_string());
    };
    *pos += 1;
    if let Some(idx) = name.strip_prefix('x') {
        if let Ok(i) = idx.parse::<usize>() {
            return Ok(TermOrRel::Term(Term::X(i)));
        }
    }
    if let Some(idx) = name.strip_prefix('y') {
        if let Ok(j) = idx.parse::<usize>() {
            return Ok(TermOrRel::Term(Term::Y(j)));
        }
    }
    // Function or relation application.
    if !matches!(tokens.get(*pos), Some(Token::LParen)) {
        return Err(format!("`{name}` needs an argument list"));
    }
    *pos += 1;
    let mut args = Vec::new();
    loop {
        match parse_term(tokens, pos, model)? {
            TermOrRel::Term(t) => args.push(t),
            TermOrRel::Rel(..) => return Err("relation used as a term".to_string()),
        }
        match tokens.get(*pos) {
            Some(Token::Comma) => {
                *pos += 1;
            }
            Some(Token::RParen) => {
                *pos += 1;
                break;
            }
            other => return Err(format!("expected , or ) but found {other:?}")),
        }
    }
    if let Some(r) = model.relation(name) {
        Ok(TermOrRel::Rel(r, args))
    } else if let Some(f) = model.function(name) {
        Ok(TermOrRel::Term(Term::App(f, args)))
    } else {
        Err(format!("unknown symbol `{name}`"))
    }
}

/// Semicolon-separated tuple list `0,1;2,3` for explicit rank sets.
pub fn parse_tuple_set(text: &str) -> ParseResult<Vec<Vec<usize>>> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(';')
        .map(|t| {
            t.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<usize>()
                        .map_err(|_| format!("bad element `{v}`"))
                })
                .collect()
        })
        .collect()
}
