//! Finite-model stability toolkit: quantifier-free types over parameter
//! sets, type counting, the splitting rank driven by contradictory formula
//! pairs, and the finite-depth instability-tree search.
//!
//! The rank here uses only the splitting clause of its definition; the
//! cardinal-indexed union clause is vacuous at finite scale and every
//! consumer of rank reports must carry that note.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// The note that accompanies every rank report.
pub const RANK_VARIANT_NOTE: &str =
    "finite splitting rank: union clause dropped, splitting clause only";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StabilityError {
    Malformed(String),
    /// The tree search ran out of its node budget.
    BudgetExceeded {
        expanded: usize,
    },
}

impl fmt::Display for StabilityError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StabilityError::Malformed(s) => write!(f, "malformed input: {s}"),
            StabilityError::BudgetExceeded { expanded } => {
                write!(f, "search budget exceeded after {expanded} nodes")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for StabilityError {}

/// A finite relational structure with optional function tables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinModel {
    pub universe: usize,
    pub relations: Vec<Relation>,
    pub functions: Vec<Function>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    pub name: String,
    pub arity: usize,
    pub tuples: BTreeSet<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Function {
    pub name: String,
    pub arity: usize,
    /// Row-major table over all argument tuples in lexicographic order.
    pub table: Vec<usize>,
}

impl FinModel {
    pub fn pure_set(universe: usize) -> Self {
        FinModel {
            universe,
            relations: Vec::new(),
            functions: Vec::new(),
        }
    }

    /// The n-element linear order 0 < 1 < … < n−1 with relation `lt`.
    pub fn chain(n: usize) -> Self {
        let mut tuples = BTreeSet::new();
        for a in 0..n {
            for b in (a + 1)..n {
                tuples.insert(alloc::vec![a, b]);
            }
        }
        FinModel {
            universe: n,
            relations: alloc::vec![Relation {
                name: String::from("lt"),
                arity: 2,
                tuples,
            }],
            functions: Vec::new(),
        }
    }

    /// The complete irreflexive graph on n vertices with relation `adj`.
    pub fn complete_graph(n: usize) -> Self {
        let mut tuples = BTreeSet::new();
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    tuples.insert(alloc::vec![a, b]);
                }
            }
        }
        FinModel {
            universe: n,
            relations: alloc::vec![Relation {
                name: String::from("adj"),
                arity: 2,
                tuples,
            }],
            functions: Vec::new(),
        }
    }

    pub fn relation(&self, name: &str) -> Option<usize> {
        self.relations.iter().position(|r| r.name == name)
    }

    pub fn function(&self, name: &str) -> Option<usize> {
        self.functions.iter().position(|f| f.name == name)
    }

    fn validate(&self) -> Result<(), StabilityError> {
        for r in &self.relations {
            for t in &r.tuples {
                if t.len() != r.arity || t.iter().any(|&x| x >= self.universe) {
                    return Err(StabilityError::Malformed(alloc::format!(
                        "relation {} has an out-of-range tuple",
                        r.name
                    )));
                }
            }
        }
        for f in &self.functions {
            let expected = self.universe.pow(f.arity as u32);
            if f.table.len() != expected || f.table.iter().any(|&x| x >= self.universe) {
                return Err(StabilityError::Malformed(alloc::format!(
                    "function {} has a malformed table",
                    f.name
                )));
            }
        }
        Ok(())
    }

    pub fn new(
        universe: usize,
        relations: Vec<Relation>,
        functions: Vec<Function>,
    ) -> Result<Self, StabilityError> {
        let model = FinModel {
            universe,
            relations,
            functions,
        };
        model.validate()?;
        Ok(model)
    }
}

/// A term: a tuple variable `x_i`, a parameter variable `y_j`, or a function
/// application.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Term {
    X(usize),
    Y(usize),
    App(usize, Vec<Term>),
}

/// Quantifier-free formulas over the model's signature, with tuple slots
/// `x_i` and parameter slots `y_j`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Ast {
    Rel(usize, Vec<Term>),
    Eq(Term, Term),
    Not(alloc::boxed::Box<Ast>),
    And(alloc::boxed::Box<Ast>, alloc::boxed::Box<Ast>),
    Or(alloc::boxed::Box<Ast>, alloc::boxed::Box<Ast>),
}

/// A formula with declared slot counts and a display name.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Formula {
    pub name: String,
    pub x_arity: usize,
    pub y_arity: usize,
    pub ast: Ast,
}

fn eval_term(model: &FinModel, term: &Term, xs: &[usize], ys: &[usize]) -> usize {
    match term {
        Term::X(i) => xs[*i],
        Term::Y(j) => ys[*j],
        Term::App(f, args) => {
            let func = &model.functions[*f];
            let mut index = 0usize;
            for a in args {
                index = index * model.universe + eval_term(model, a, xs, ys);
            }
            func.table[index]
        }
    }
}

fn eval_ast(model: &FinModel, ast: &Ast, xs: &[usize], ys: &[usize]) -> bool {
    match ast {
        Ast::Rel(r, args) => {
            let tuple: Vec<usize> = args.iter().map(|t| eval_term(model, t, xs, ys)).collect();
            model.relations[*r].tuples.contains(&tuple)
        }
        Ast::Eq(a, b) => eval_term(model, a, xs, ys) == eval_term(model, b, xs, ys),
        Ast::Not(inner) => !eval_ast(model, inner, xs, ys),
        Ast::And(a, b) => eval_ast(model, a, xs, ys) && eval_ast(model, b, xs, ys),
        Ast::Or(a, b) => eval_ast(model, a, xs, ys) || eval_ast(model, b, xs, ys),
    }
}

impl Formula {
    pub fn satisfied(&self, model: &FinModel, xs: &[usize], ys: &[usize]) -> bool {
        assert_eq!(xs.len(), self.x_arity);
        assert_eq!(ys.len(), self.y_arity);
        eval_ast(model, &self.ast, xs, ys)
    }

    /// Binary atomic formula `rel(x0, y0)` by relation name.
    pub fn atom_xy(model: &FinModel, rel: &str) -> Option<Formula> {
        let r = model.relation(rel)?;
        Some(Formula {
            name: alloc::format!("{rel}(x0,y0)"),
            x_arity: 1,
            y_arity: 1,
            ast: Ast::Rel(r, alloc::vec![Term::X(0), Term::Y(0)]),
        })
    }

    /// Binary atomic formula `rel(y0, x0)` by relation name.
    pub fn atom_yx(model: &FinModel, rel: &str) -> Option<Formula> {
        let r = model.relation(rel)?;
        Some(Formula {
            name: alloc::format!("{rel}(y0,x0)"),
            x_arity: 1,
            y_arity: 1,
            ast: Ast::Rel(r, alloc::vec![Term::Y(0), Term::X(0)]),
        })
    }

    pub fn negated(&self) -> Formula {
        Formula {
            name: alloc::format!("!{}", self.name),
            x_arity: self.x_arity,
            y_arity: self.y_arity,
            ast: Ast::Not(alloc::boxed::Box::new(self.ast.clone())),
        }
    }
}

/// A type record: the set of satisfied formula instances, each a formula
/// index with its parameter tuple.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct TypeRecord {
    pub instances: BTreeSet<(usize, Vec<usize>)>,
}

fn parameter_tuples(parameters: &[usize], arity: usize) -> Vec<Vec<usize>> {
    let mut out = alloc::vec![Vec::new()];
    for _ in 0..arity {
        let mut next = Vec::new();
        for t in &out {
            for &p in parameters {
                let mut u = t.clone();
                u.push(p);
                next.push(u);
            }
        }
        out = next;
    }
    out
}

fn all_tuples(universe: usize, arity: usize) -> Vec<Vec<usize>> {
    let elements: Vec<usize> = (0..universe).collect();
    parameter_tuples(&elements, arity)
}

/// The type of `tuple` over the parameter set: exactly the satisfied
/// instances of the listed formulas.
pub fn tp_delta(
    tuple: &[usize],
    parameters: &[usize],
    model: &FinModel,
    delta: &[Formula],
) -> TypeRecord {
    let mut instances = BTreeSet::new();
    for (idx, formula) in delta.iter().enumerate() {
        if formula.x_arity != tuple.len() {
            continue;
        }
        for params in parameter_tuples(parameters, formula.y_arity) {
            if formula.satisfied(model, tuple, &params) {
                instances.insert((idx, params));
            }
        }
    }
    TypeRecord { instances }
}

/// Number of distinct types of m-tuples over the parameter set.
pub fn type_count(m: usize, parameters: &[usize], model: &FinModel, delta: &[Formula]) -> usize {
    let mut types = BTreeSet::new();
    for tuple in all_tuples(model.universe, m) {
        types.insert(tp_delta(&tuple, parameters, model, delta));
    }
    types.len()
}

/// Rank values: −1 for the empty set, finite naturals, or the unreachable
/// top element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum RankValue {
    MinusOne,
    Finite(u32),
    Infinity,
}

impl fmt::Display for RankValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RankValue::MinusOne => f.write_str("-1"),
            RankValue::Finite(r) => write!(f, "{r}"),
            RankValue::Infinity => f.write_str("infinity"),
        }
    }
}

/// A contradictory instance: two formula instances (the combined parameter
/// tuple splits, each formula consuming its own slice) that no m-tuple
/// satisfies simultaneously.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContradictoryPair {
    pub formula0: usize,
    pub params0: Vec<usize>,
    pub formula1: usize,
    pub params1: Vec<usize>,
}

/// A contradictory pair with the satisfier sets of its two sides.
pub type SplitInstance = (
    ContradictoryPair,
    BTreeSet<Vec<usize>>,
    BTreeSet<Vec<usize>>,
);

/// Enumerate the contradictory pairs of `delta` instances with parameters
/// from the whole model, together with their satisfier sets over m-tuples.
pub fn contradictory_pairs(m: usize, model: &FinModel, delta: &[Formula]) -> Vec<SplitInstance> {
    let tuples = all_tuples(model.universe, m);
    // Satisfier sets of every instance, computed once.
    let mut instances: Vec<(usize, Vec<usize>, BTreeSet<Vec<usize>>)> = Vec::new();
    for (i, formula) in delta.iter().enumerate() {
        if formula.x_arity != m {
            continue;
        }
        for params in all_tuples(model.universe, formula.y_arity) {
            let sat: BTreeSet<Vec<usize>> = tuples
                .iter()
                .filter(|t| formula.satisfied(model, t, &params))
                .cloned()
                .collect();
            instances.push((i, params, sat));
        }
    }
    let mut out = Vec::new();
    for (i0, p0, sat0) in &instances {
        for (i1, p1, sat1) in &instances {
            if sat0.intersection(sat1).next().is_none() {
                out.push((
                    ContradictoryPair {
                        formula0: *i0,
                        params0: p0.clone(),
                        formula1: *i1,
                        params1: p1.clone(),
                    },
                    sat0.clone(),
                    sat1.clone(),
                ));
            }
        }
    }
    out
}

/// The splitting rank of a set of m-tuples, memoized over canonical subset
/// representatives. Empty sets have rank −1; a set exceeds rank β when some
/// contradictory pair splits it into two parts of rank ≥ β.
pub fn split_rank(set: &BTreeSet<Vec<usize>>, model: &FinModel, delta: &[Formula]) -> RankValue {
    let m = match set.iter().next() {
        None => return RankValue::MinusOne,
        Some(t) => t.len(),
    };
    let pairs = contradictory_pairs(m, model, delta);
    let mut memo: BTreeMap<Vec<Vec<usize>>, RankValue> = BTreeMap::new();
    rank_memo(set, &pairs, &mut memo)
}

fn rank_memo(
    set: &BTreeSet<Vec<usize>>,
    pairs: &[SplitInstance],
    memo: &mut BTreeMap<Vec<Vec<usize>>, RankValue>,
) -> RankValue {
    if set.is_empty() {
        return RankValue::MinusOne;
    }
    let key: Vec<Vec<usize>> = set.iter().cloned().collect();
    if let Some(&cached) = memo.get(&key) {
        return cached;
    }
    let mut best = RankValue::Finite(0);
    for (_, sat0, sat1) in pairs {
        let part0: BTreeSet<Vec<usize>> = set.intersection(sat0).cloned().collect();
        let part1: BTreeSet<Vec<usize>> = set.intersection(sat1).cloned().collect();
        if part0.is_empty() || part1.is_empty() {
            continue;
        }
        let r0 = rank_memo(&part0, pairs, memo);
        let r1 = rank_memo(&part1, pairs, memo);
        let min = r0.min(r1);
        if let RankValue::Finite(r) = min {
            best = best.max(RankValue::Finite(r + 1));
        }
    }
    memo.insert(key, best);
    best
}

/// Rank of a type: the minimum rank over the satisfier sets of its finite
/// subtypes; anti-monotone in the type, so attained at the full finite type.
pub fn rank_of_type(
    instances: &[(usize, Vec<usize>)],
    m: usize,
    model: &FinModel,
    delta: &[Formula],
) -> RankValue {
    let mut satisfiers: BTreeSet<Vec<usize>> = all_tuples(model.universe, m).into_iter().collect();
    for (idx, params) in instances {
        satisfiers.retain(|t| delta[*idx].satisfied(model, t, params));
    }
    split_rank(&satisfiers, model, delta)
}

/// A found instability tree of depth `h`: one contradictory pair with
/// parameters per internal node (indexed by the binary string leading to
/// it), and one m-tuple per leaf.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeWitness {
    pub depth: usize,
    /// Internal nodes keyed by their binary address.
    pub nodes: BTreeMap<Vec<u8>, ContradictoryPair>,
    /// Leaves keyed by their full binary address.
    pub leaves: BTreeMap<Vec<u8>, Vec<usize>>,
}

impl TreeWitness {
    /// Re-check the witness clauses: every node pair contradictory, every
    /// leaf satisfying the side-formula of each of its ancestors.
    pub fn verify(&self, model: &FinModel, delta: &[Formula]) -> Result<(), StabilityError> {
        for (addr, pair) in &self.nodes {
            let f0 = &delta[pair.formula0];
            let f1 = &delta[pair.formula1];
            for tuple in all_tuples(model.universe, f0.x_arity) {
                if f0.satisfied(model, &tuple, &pair.params0)
                    && f1.satisfied(model, &tuple, &pair.params1)
                {
                    return Err(StabilityError::Malformed(alloc::format!(
                        "node {addr:?} pair is not contradictory"
                    )));
                }
            }
        }
        for (addr, tuple) in &self.leaves {
            if addr.len() != self.depth {
                return Err(StabilityError::Malformed(String::from(
                    "leaf address length mismatch",
                )));
            }
            for prefix_len in 0..self.depth {
                let node = &self.nodes[&addr[..prefix_len].to_vec()];
                let side = addr[prefix_len];
                let (formula, params) = if side == 0 {
                    (&delta[node.formula0], &node.params0)
                } else {
                    (&delta[node.formula1], &node.params1)
                };
                if !formula.satisfied(model, tuple, params) {
                    return Err(StabilityError::Malformed(alloc::format!(
                        "leaf {addr:?} fails its ancestor at depth {prefix_len}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Depth-first search for an instability tree of depth `h` over m-tuples,
/// with a node budget. Pairs are tried in (formula index, parameter) order,
/// so found witnesses are deterministic.
pub fn instability_tree(
    model: &FinModel,
    delta: &[Formula],
    m: usize,
    h: usize,
    budget: usize,
) -> Result<Option<TreeWitness>, StabilityError> {
    let pairs = contradictory_pairs(m, model, delta);
    let all: BTreeSet<Vec<usize>> = all_tuples(model.universe, m).into_iter().collect();
    let mut expanded = 0usize;
    let mut nodes = BTreeMap::new();
    let mut leaves = BTreeMap::new();
    let found = search_tree(
        &all,
        &pairs,
        h,
        &mut Vec::new(),
        &mut nodes,
        &mut leaves,
        &mut expanded,
        budget,
    )?;
    Ok(if found {
        Some(TreeWitness {
            depth: h,
            nodes,
            leaves,
        })
    } else {
        None
    })
}

#[allow(clippy::too_many_arguments)]
fn search_tree(
    candidates: &BTreeSet<Vec<usize>>,
    pairs: &[SplitInstance],
    remaining: usize,
    address: &mut Vec<u8>,
    nodes: &mut BTreeMap<Vec<u8>, ContradictoryPair>,
    leaves: &mut BTreeMap<Vec<u8>, Vec<usize>>,
    expanded: &mut usize,
    budget: usize,
) -> Result<bool, StabilityError> {
    if candidates.is_empty() {
        return Ok(false);
    }
    if remaining == 0 {
        leaves.insert(address.clone(), candidates.iter().next().unwrap().clone());
        return Ok(true);
    }
    for (pair, sat0, sat1) in pairs {
        *expanded += 1;
        if *expanded > budget {
            return Err(StabilityError::BudgetExceeded {
                expanded: *expanded,
            });
        }
        let part0: BTreeSet<Vec<usize>> = candidates.intersection(sat0).cloned().collect();
        let part1: BTreeSet<Vec<usize>> = candidates.intersection(sat1).cloned().collect();
        if part0.is_empty() || part1.is_empty() {
            continue;
        }
        nodes.insert(address.clone(), pair.clone());
        address.push(0);
        let left = search_tree(
            &part0,
            pairs,
            remaining - 1,
            address,
            nodes,
            leaves,
            expanded,
            budget,
        )?;
        address.pop();
        if !left {
            nodes.remove(address);
            continue;
        }
        address.push(1);
        let right = search_tree(
            &part1,
            pairs,
            remaining - 1,
            address,
            nodes,
            leaves,
            expanded,
            budget,
        )?;
        address.pop();
        if right {
            return Ok(true);
        }
        nodes.remove(address);
        // Clean up the left subtree's contributions before trying the next
        // pair.
        let prefix = address.clone();
        leaves.retain(|k, _| !k.starts_with(&prefix) || k.len() == prefix.len());
        let node_prefix = address.clone();
        nodes.retain(|k, _| !(k.starts_with(&node_prefix) && k.len() > node_prefix.len()));
    }
    Ok(false)
}

/// The order-comparison formula set {x<y, y<x} on a chain model.
pub fn order_delta(model: &FinModel) -> Vec<Formula> {
    alloc::vec![
        Formula::atom_xy(model, "lt").expect("chain has lt"),
        Formula::atom_yx(model, "lt").expect("chain has lt"),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tp_delta_three_chain() {
        let model = FinModel::chain(3);
        let delta = order_delta(&model);
        let params = [0usize, 2];
        let tp1 = tp_delta(&[1], &params, &model, &delta);
        // {x < 2 (formula 0 with parameter 2), 0 < x (formula 1, parameter 0)}
        let expected: BTreeSet<(usize, Vec<usize>)> =
            [(0usize, alloc::vec![2usize]), (1usize, alloc::vec![0usize])]
                .into_iter()
                .collect();
        assert_eq!(tp1.instances, expected);

        let tp0 = tp_delta(&[0], &params, &model, &delta);
        let expected0: BTreeSet<(usize, Vec<usize>)> =
            [(0usize, alloc::vec![2usize])].into_iter().collect();
        assert_eq!(tp0.instances, expected0);
    }

    #[test]
    fn type_count_examples() {
        let model = FinModel::chain(3);
        // Empty delta: one (empty) type.
        assert_eq!(type_count(1, &[0, 2], &model, &[]), 1);
        let delta = order_delta(&model);
        assert_eq!(type_count(1, &[0, 2], &model, &delta), 3);

        // Complete graph with a single parameter: the parameter itself vs
        // everyone adjacent.
        let graph = FinModel::complete_graph(4);
        let adj = alloc::vec![Formula::atom_xy(&graph, "adj").unwrap()];
        assert_eq!(type_count(1, &[1], &graph, &adj), 2);
    }

    #[test]
    fn split_rank_edge_cases() {
        let model = FinModel::chain(4);
        let delta = order_delta(&model);
        let empty: BTreeSet<Vec<usize>> = BTreeSet::new();
        assert_eq!(split_rank(&empty, &model, &delta), RankValue::MinusOne);
        let singleton: BTreeSet<Vec<usize>> = [alloc::vec![2usize]].into_iter().collect();
        assert_eq!(split_rank(&singleton, &model, &delta), RankValue::Finite(0));
    }

    #[test]
    fn split_rank_grows_with_chain_length() {
        // A set of rank r needs at least 2^r elements; on a chain the order
        // formulas realize the maximum.
        for (n, expect) in [(2usize, 1u32), (4, 2), (8, 3)] {
            let model = FinModel::chain(n);
            let delta = order_delta(&model);
            let all: BTreeSet<Vec<usize>> = (0..n).map(|a| alloc::vec![a]).collect();
            assert_eq!(
                split_rank(&all, &model, &delta),
                RankValue::Finite(expect),
                "chain of length {n}"
            );
        }
    }

    #[test]
    fn rank_is_monotone_under_subsets() {
        let model = FinModel::chain(5);
        let delta = order_delta(&model);
        let whole: BTreeSet<Vec<usize>> = (0..5).map(|a| alloc::vec![a]).collect();
        let whole_rank = split_rank(&whole, &model, &delta);
        for drop in 0..5usize {
            let sub: BTreeSet<Vec<usize>> = (0..5)
                .filter(|&a| a != drop)
                .map(|a| alloc::vec![a])
                .collect();
            assert!(split_rank(&sub, &model, &delta) <= whole_rank);
        }
    }

    #[test]
    fn instability_tree_on_chain() {
        let model = FinModel::chain(8);
        let delta = order_delta(&model);
        let witness = instability_tree(&model, &delta, 1, 3, 1_000_000)
            .unwrap()
            .expect("depth-3 tree on the 8-chain");
        witness.verify(&model, &delta).unwrap();
        // A depth-h tree forces rank at least h.
        let all: BTreeSet<Vec<usize>> = (0..8).map(|a| alloc::vec![a]).collect();
        assert!(split_rank(&all, &model, &delta) >= RankValue::Finite(3));
    }

    #[test]
    fn instability_tree_absent_on_complete_graph() {
        // All pairs adjacent: adjacency and its negation split only along
        // equality with the parameter, which cannot sustain depth 2.
        let model = FinModel::complete_graph(5);
        let adj = Formula::atom_xy(&model, "adj").unwrap();
        let delta = alloc::vec![adj.clone(), adj.negated()];
        assert!(instability_tree(&model, &delta, 1, 2, 1_000_000)
            .unwrap()
            .is_none());
        // Depth 1 does exist (split by adjacency to a fixed vertex).
        assert!(instability_tree(&model, &delta, 1, 1, 1_000_000)
            .unwrap()
            .is_some());
    }

    #[test]
    fn single_point_has_no_tree() {
        let model = FinModel::pure_set(1);
        let delta: Vec<Formula> = Vec::new();
        assert!(instability_tree(&model, &delta, 1, 1, 1_000)
            .unwrap()
            .is_none());
    }

    #[test]
    fn budget_exhaustion_reports() {
        let model = FinModel::chain(6);
        let delta = order_delta(&model);
        match instability_tree(&model, &delta, 1, 3, 3) {
            Err(StabilityError::BudgetExceeded { .. }) => {}
            other => panic!("expected budget exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn type_rank_attained_at_full_type() {
        let model = FinModel::chain(6);
        let delta = order_delta(&model);
        // The type of 3 over {0, 5}: 0 < x, x < 5.
        let instances = alloc::vec![(0usize, alloc::vec![5usize]), (1usize, alloc::vec![0usize]),];
        let full = rank_of_type(&instances, 1, &model, &delta);
        // Every subtype has rank at least the full type's.
        for instance in &instances {
            let sub = alloc::vec![instance.clone()];
            assert!(rank_of_type(&sub, 1, &model, &delta) >= full);
        }
    }

    #[test]
    fn type_count_invariant_under_relabeling() {
        let model = FinModel::chain(4);
        let delta = order_delta(&model);
        let base = type_count(1, &[1, 3], &model, &delta);
        // Relabel via the permutation x -> 3 - x (order-reversing still
        // yields an isomorphic order with lt flipped).
        let mut tuples = BTreeSet::new();
        for t in &model.relations[0].tuples {
            tuples.insert(alloc::vec![3 - t[1], 3 - t[0]]);
        }
        let relabeled = FinModel {
            universe: 4,
            relations: alloc::vec![Relation {
                name: String::from("lt"),
                arity: 2,
                tuples,
            }],
            functions: Vec::new(),
        };
        let mapped = type_count(1, &[2, 0], &relabeled, &delta);
        assert_eq!(base, mapped);
    }
}
