//! Cost functions and extraction of the cost-minimal models of a
//! decomposable consequence.
//!
//! Extraction runs in two bottom-up passes over the graph. The first computes
//! the minimal cost below each node and remembers which children of an
//! or-node reach it; the second assembles the minimal terms of each node from
//! those surviving children only. Both write to side tables, so the graph can
//! be reused with another cost function.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Add;

use crate::error::{Error, Result};
use crate::logic::{Instantiation, Literal, VarId, VarSet, Vocabulary};
use crate::nnf::{NnfGraph, NnfNode, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cost {
    Finite(u64),
    Infinite,
}

impl Cost {
    pub const ZERO: Cost = Cost::Finite(0);

    pub fn is_finite(self) -> bool {
        matches!(self, Cost::Finite(_))
    }
}

impl Add for Cost {
    type Output = Cost;

    fn add(self, rhs: Cost) -> Cost {
        match (self, rhs) {
            (Cost::Finite(a), Cost::Finite(b)) => Cost::Finite(a.saturating_add(b)),
            _ => Cost::Infinite,
        }
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cost::Finite(k) => write!(f, "{k}"),
            Cost::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CostKind {
    Cardinality,
    Kappa,
    Custom,
}

/// Non-negative integer costs per literal, combined by addition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostFunction {
    kind: CostKind,
    /// `costs[var][value]`; variables that are not assumables cost nothing.
    costs: Vec<Vec<u64>>,
}

impl CostFunction {
    fn zeros(vocab: &Vocabulary) -> Vec<Vec<u64>> {
        vocab.ids().map(|v| vec![0; vocab.arity(v)]).collect()
    }

    /// One unit per non-healthy value of each assumable.
    pub fn cardinality(vocab: &Vocabulary, assumables: &VarSet) -> Self {
        let mut costs = Self::zeros(vocab);
        for a in assumables.iter() {
            let healthy = vocab.var(a).healthy_value() as usize;
            for (value, c) in costs[a.index()].iter_mut().enumerate() {
                *c = u64::from(value != healthy);
            }
        }
        CostFunction {
            kind: CostKind::Cardinality,
            costs,
        }
    }

    /// Reads ranks from lines `name=value <k>`, `!name <k>` or `name <k>`;
    /// unlisted literals cost 0.
    pub fn kappa(vocab: &Vocabulary, assumables: &VarSet, text: &str) -> Result<Self> {
        let mut costs = Self::zeros(vocab);
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("");
            let toks: Vec<&str> = body.split_whitespace().collect();
            if toks.is_empty() {
                continue;
            }
            if toks.len() != 2 {
                return Err(Error::parse(line, "expected `<literal> <rank>`"));
            }
            let lit = vocab
                .parse_literal(toks[0])
                .map_err(|e| Error::parse(line, e.to_string()))?;
            if !assumables.contains(lit.var) {
                return Err(Error::parse(
                    line,
                    format!("`{}` is not an assumable", toks[0]),
                ));
            }
            let rank: i64 = toks[1]
                .parse()
                .map_err(|_| Error::parse(line, format!("rank `{}` is not an integer", toks[1])))?;
            if rank < 0 {
                return Err(Error::InvalidCost(format!(
                    "negative rank {rank} for `{}`",
                    toks[0]
                )));
            }
            costs[lit.var.index()][lit.value as usize] = rank as u64;
        }
        let cf = CostFunction {
            kind: CostKind::Kappa,
            costs,
        };
        cf.validate(vocab, assumables)?;
        Ok(cf)
    }

    /// Costs given literal by literal; anything not listed costs 0.
    pub fn custom(vocab: &Vocabulary, costs: impl IntoIterator<Item = (Literal, u64)>) -> Self {
        let mut table = Self::zeros(vocab);
        for (l, c) in costs {
            table[l.var.index()][l.value as usize] = c;
        }
        CostFunction {
            kind: CostKind::Custom,
            costs: table,
        }
    }

    pub fn kind(&self) -> &CostKind {
        &self.kind
    }

    /// Every assumable needs a value of cost 0.
    pub fn validate(&self, vocab: &Vocabulary, assumables: &VarSet) -> Result<()> {
        for a in assumables.iter() {
            if !self.costs[a.index()].contains(&0) {
                return Err(Error::InvalidCost(format!(
                    "no value of `{}` has cost 0",
                    vocab.name(a)
                )));
            }
        }
        Ok(())
    }

    pub fn literal_cost(&self, l: Literal) -> u64 {
        self.costs[l.var.index()][l.value as usize]
    }

    pub fn cost_of(&self, inst: &Instantiation) -> u64 {
        inst.literals().iter().map(|&l| self.literal_cost(l)).sum()
    }

    pub fn zero_cost_values(&self, var: VarId) -> impl Iterator<Item = u32> + '_ {
        self.costs[var.index()]
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == 0)
            .map(|(v, _)| v as u32)
    }
}

/// Side tables filled by [`prune`] and [`instantiations`].
#[derive(Clone, Debug)]
pub struct ExtractionState {
    costs: Vec<Option<Cost>>,
    survivors: Vec<Vec<NodeId>>,
    terms: Vec<Option<BTreeSet<Instantiation>>>,
}

impl ExtractionState {
    pub fn cost(&self, node: NodeId) -> Option<Cost> {
        self.costs[node]
    }

    /// Children of `node` kept by pruning.
    pub fn survivors(&self, node: NodeId) -> &[NodeId] {
        &self.survivors[node]
    }

    pub fn terms(&self, node: NodeId) -> Option<&BTreeSet<Instantiation>> {
        self.terms[node].as_ref()
    }
}

/// Minimal cost below every node reachable from the root: literals cost
/// their literal, and-nodes the sum of their children and or-nodes the
/// cheapest child, whose equally cheap siblings survive with it.
pub fn prune(g: &NnfGraph, cf: &CostFunction) -> Result<ExtractionState> {
    if let Some(n) = g.decomposability_violation() {
        return Err(Error::NotDecomposable(n));
    }
    let root = g.root()?;
    let mut costs = vec![None; g.len()];
    let mut survivors = vec![Vec::new(); g.len()];
    for n in g.postorder(&[root]) {
        let cost = match g.node(n) {
            NnfNode::Literal(l) => Cost::Finite(cf.literal_cost(*l)),
            NnfNode::And(kids) => {
                survivors[n] = kids.clone();
                kids.iter()
                    .map(|&k| costs[k].expect("child first"))
                    .fold(Cost::ZERO, |a, b| a + b)
            }
            NnfNode::Or(kids) => {
                let min = kids
                    .iter()
                    .map(|&k| costs[k].expect("child first"))
                    .min()
                    .unwrap_or(Cost::Infinite);
                survivors[n] = kids
                    .iter()
                    .copied()
                    .filter(|&k| costs[k] == Some(min))
                    .collect();
                min
            }
        };
        costs[n] = Some(cost);
    }
    Ok(ExtractionState {
        costs,
        survivors,
        terms: vec![None; g.len()],
    })
}

/// Cross product of `terms` with every zero-cost value of each variable in
/// `vars`.
pub fn extend(
    terms: &BTreeSet<Instantiation>,
    vars: &VarSet,
    cf: &CostFunction,
    vocab: &Vocabulary,
) -> Result<BTreeSet<Instantiation>> {
    let mut out: Vec<Instantiation> = terms.iter().cloned().collect();
    for v in vars.iter() {
        let zeros: Vec<u32> = cf.zero_cost_values(v).collect();
        if zeros.is_empty() {
            return Err(Error::InvalidCost(format!(
                "no value of `{}` has cost 0",
                vocab.name(v)
            )));
        }
        let mut next = Vec::with_capacity(out.len() * zeros.len());
        for t in &out {
            for &z in &zeros {
                next.push(t.with(Literal::new(v, z)).ok_or_else(|| {
                    Error::Extraction(format!("`{}` is already set in a term", vocab.name(v)))
                })?);
            }
        }
        out = next;
    }
    Ok(out.into_iter().collect())
}

/// Minimal terms of every node reachable from the root through surviving
/// children; returns those of the root. Requires [`prune`] first.
pub fn instantiations(
    g: &NnfGraph,
    state: &mut ExtractionState,
    cf: &CostFunction,
    vocab: &Vocabulary,
) -> Result<BTreeSet<Instantiation>> {
    let root = g.root()?;
    // walk only through survivors, and not below nodes of infinite cost
    let mut order = Vec::new();
    let mut seen = vec![0u8; g.len()];
    let mut stack = vec![(root, 0usize)];
    seen[root] = 1;
    while let Some(&mut (n, ref mut i)) = stack.last_mut() {
        let expand = state.costs[n].is_some_and(Cost::is_finite);
        let kids: &[NodeId] = if expand { &state.survivors[n] } else { &[] };
        if *i < kids.len() {
            let k = kids[*i];
            *i += 1;
            if seen[k] == 0 {
                seen[k] = 1;
                stack.push((k, 0));
            }
        } else {
            order.push(n);
            stack.pop();
        }
    }
    for n in order {
        let terms = if state.costs[n] == Some(Cost::Infinite) {
            BTreeSet::new()
        } else {
            match g.node(n) {
                NnfNode::Literal(l) => {
                    BTreeSet::from([Instantiation::from_literals([*l]).unwrap()])
                }
                NnfNode::And(_) => {
                    let mut acc = BTreeSet::from([Instantiation::empty()]);
                    for &k in &state.survivors[n] {
                        let kt = state.terms[k].as_ref().expect("child first");
                        let mut next = BTreeSet::new();
                        for a in &acc {
                            for b in kt {
                                let m = a.merge(b).ok_or_else(|| {
                                    Error::Extraction(format!(
                                        "conjoined terms disagree at and-node {n}"
                                    ))
                                })?;
                                if m.len() != a.len() + b.len() {
                                    return Err(Error::Extraction(format!(
                                        "conjoined terms share variables at and-node {n}"
                                    )));
                                }
                                next.insert(m);
                            }
                        }
                        acc = next;
                    }
                    acc
                }
                NnfNode::Or(_) => {
                    let mut acc = BTreeSet::new();
                    let here = g.atoms_of(n);
                    for &k in &state.survivors[n] {
                        let kt = state.terms[k].as_ref().expect("child first");
                        let missing = here.difference(g.atoms_of(k));
                        acc.extend(extend(kt, &missing, cf, vocab)?);
                    }
                    acc
                }
            }
        };
        if state.costs[n].is_some_and(Cost::is_finite) {
            for &k in &state.survivors[n] {
                let child = state.terms[k].as_ref().map_or(0, BTreeSet::len);
                if child > terms.len() {
                    return Err(Error::Extraction(format!(
                        "child {k} has {child} terms, more than the {} of node {n}",
                        terms.len()
                    )));
                }
            }
        }
        state.terms[n] = Some(terms);
    }
    Ok(state.terms[root].clone().expect("root visited"))
}

/// Checks, for every node with computed terms, that each term satisfies the
/// node, costs exactly the node's cost and sets exactly the node's
/// variables.
pub fn check_terms(g: &NnfGraph, state: &ExtractionState, cf: &CostFunction) -> Result<()> {
    for n in 0..g.len() {
        let Some(terms) = &state.terms[n] else {
            continue;
        };
        let Some(Cost::Finite(cost)) = state.costs[n] else {
            continue;
        };
        for t in terms {
            if &t.vars() != g.atoms_of(n) {
                return Err(Error::Extraction(format!(
                    "a term of node {n} misses its variables"
                )));
            }
            if cf.cost_of(t) != cost {
                return Err(Error::Extraction(format!(
                    "a term of node {n} has the wrong cost"
                )));
            }
            if !g.evaluate_at(n, t)? {
                return Err(Error::Extraction(format!(
                    "a term of node {n} does not satisfy it"
                )));
            }
        }
    }
    Ok(())
}

/// The minimal-cost diagnoses and their shared cost. When the consequence
/// is unsatisfiable the cost is [`Cost::Infinite`] and there are none.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnoses {
    pub cost: Cost,
    pub diagnoses: BTreeSet<Instantiation>,
}

impl Diagnoses {
    pub fn is_none(&self) -> bool {
        self.cost == Cost::Infinite
    }

    /// `cost <k>` followed by one diagnosis per line, lines sorted.
    pub fn to_text(&self, vocab: &Vocabulary) -> String {
        let mut lines: Vec<String> = self
            .diagnoses
            .iter()
            .map(|d| vocab.instantiation_text(d))
            .collect();
        lines.sort();
        let mut out = format!("cost {}\n", self.cost);
        for l in lines {
            out.push_str(&l);
            out.push('\n');
        }
        out
    }
}

/// Extracts the minimal-cost models of `compiled` and completes them over
/// all of `assumables` with zero-cost values.
pub fn minimal_diagnoses(
    compiled: &NnfGraph,
    assumables: &VarSet,
    cf: &CostFunction,
    vocab: &Vocabulary,
) -> Result<Diagnoses> {
    cf.validate(vocab, assumables)?;
    let mut state = prune(compiled, cf)?;
    let root = compiled.root()?;
    let cost = state.cost(root).expect("root priced");
    if cost == Cost::Infinite {
        return Ok(Diagnoses {
            cost,
            diagnoses: BTreeSet::new(),
        });
    }
    let terms = instantiations(compiled, &mut state, cf, vocab)?;
    let rest = assumables.difference(compiled.atoms_of(root));
    Ok(Diagnoses {
        cost,
        diagnoses: extend(&terms, &rest, cf, vocab)?,
    })
}
