//! Compiling consequences: per-component tables, then the system consequence
//! of an observation by recursion over a jointree with sepset-indexed
//! caching.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::error::{check_cap, Error, Result};
use crate::jointree::{ComponentAssignment, Jointree};
use crate::logic::{
    index_of, AssignmentEnv, Clause, Instantiation, Instantiations, Literal, VarId, VarSet,
    Vocabulary,
};
use crate::nnf::{NnfGraph, NodeId};
use crate::ssd::{ComponentDescription, Observation, Ssd};

/// Default bound on the number of port instantiations of one component.
pub const DEFAULT_TABLE_CAP: u128 = 1 << 16;

/// The consequence of every port instantiation of one component, as
/// entries of an NNF graph over the component's assumables. Entry `l`
/// belongs to the port instantiation whose index is `l`.
#[derive(Clone, Debug)]
pub struct ConsequenceTable {
    pub component: VarId,
    pub ports: VarSet,
    graph: NnfGraph,
    entries: Vec<NodeId>,
}

impl ConsequenceTable {
    pub fn graph(&self) -> &NnfGraph {
        &self.graph
    }

    pub fn entry(&self, index: usize) -> NodeId {
        self.entries[index]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Copy of the table graph rooted at entry `index`.
    pub fn entry_graph(&self, index: usize) -> NnfGraph {
        let mut g = NnfGraph::new();
        let mut memo = vec![None; self.graph.len()];
        let r = g.import(&self.graph, self.entries[index], &mut memo);
        g.set_root(r).expect("root exists");
        g
    }

    /// Entry for the port instantiation `ports`.
    pub fn lookup(&self, ports: &Instantiation, vocab: &Vocabulary) -> Result<NodeId> {
        Ok(self.entries[index_of(ports, self.ports.as_slice(), vocab)?])
    }
}

/// Converts a conjunction of clauses into an equivalent disjunction of
/// terms, dropping duplicate, subsumed and contradictory terms. Terms come
/// back sorted.
pub fn cnf_to_dnf(clauses: &[&Clause]) -> Vec<Instantiation> {
    let mut terms = vec![Instantiation::empty()];
    for clause in clauses {
        let mut next: Vec<Instantiation> = Vec::new();
        for t in &terms {
            if clause.satisfied_by(t) {
                next.push(t.clone());
                continue;
            }
            for &l in clause.literals() {
                if let Some(ext) = t.with(l) {
                    next.push(ext);
                }
            }
        }
        terms = minimize_terms(next);
        if terms.is_empty() {
            break;
        }
    }
    terms
}

fn minimize_terms(mut terms: Vec<Instantiation>) -> Vec<Instantiation> {
    terms.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    terms.dedup();
    let mut kept: Vec<Instantiation> = Vec::with_capacity(terms.len());
    for t in terms {
        let subsumed = kept
            .iter()
            .any(|k| k.literals().iter().all(|&l| t.holds(l)));
        if !subsumed {
            kept.push(t);
        }
    }
    kept.sort();
    kept
}

/// Builds the consequence table of one component: for each port
/// instantiation, the assumable parts of the clauses whose port part it
/// falsifies, converted to a DNF.
pub fn component_consequences(
    cd: &ComponentDescription,
    vocab: &Vocabulary,
    cap: u128,
) -> Result<ConsequenceTable> {
    let ports = cd.ports();
    check_cap(vocab.domain_product(&ports), cap)?;
    let mut graph = NnfGraph::new();
    let mut literal_nodes: HashMap<Literal, NodeId> = HashMap::new();
    let mut entries = Vec::new();
    for gamma in Instantiations::new(ports.as_slice(), vocab) {
        let active: Vec<&Clause> = cd
            .clauses
            .iter()
            .filter(|c| c.ports.falsified_by(&gamma))
            .map(|c| &c.assumables)
            .collect();
        let terms = cnf_to_dnf(&active);
        entries.push(add_terms(&mut graph, &mut literal_nodes, &terms));
    }
    Ok(ConsequenceTable {
        component: cd.output,
        ports,
        graph,
        entries,
    })
}

fn add_terms(
    g: &mut NnfGraph,
    literal_nodes: &mut HashMap<Literal, NodeId>,
    terms: &[Instantiation],
) -> NodeId {
    let mut term_node = |g: &mut NnfGraph, t: &Instantiation| -> NodeId {
        let mut lit = |g: &mut NnfGraph, l: Literal| {
            *literal_nodes
                .entry(l)
                .or_insert_with(|| g.new_literal_node(l))
        };
        if t.len() == 1 {
            return lit(g, t.literals()[0]);
        }
        let and = g.new_and_node();
        for &l in t.literals() {
            let n = lit(g, l);
            g.push_child(and, n);
        }
        and
    };
    if terms.len() == 1 {
        return term_node(g, &terms[0]);
    }
    let or = g.new_or_node();
    for t in terms {
        let n = term_node(g, t);
        g.push_child(or, n);
    }
    or
}

/// Tables for every component of `ssd`.
pub fn build_tables(ssd: &Ssd, cap: u128) -> Result<BTreeMap<VarId, ConsequenceTable>> {
    ssd.components()
        .map(|cd| Ok((cd.output, component_consequences(cd, ssd.vocab(), cap)?)))
        .collect()
}

/// Call counts of one directed jointree edge. `parent` is `None` for the
/// edge from the pivot to the empty clique attached to it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeCounter {
    pub clique: usize,
    pub parent: Option<usize>,
    pub sepset: VarSet,
    pub cached: u64,
    pub non_cached: u64,
    /// Number of instantiations of the unobserved part of the sepset.
    pub bound: u128,
}

#[derive(Clone, Debug)]
pub struct Compilation {
    pub graph: NnfGraph,
    pub edges: Vec<EdgeCounter>,
    /// Or-nodes created by the subtree recursion, one per non-cached call.
    pub subtree_nodes: Vec<NodeId>,
    pub clique_calls: u64,
}

impl Compilation {
    /// Whether every edge stayed within its bound on non-cached calls.
    pub fn cache_bound_holds(&self) -> bool {
        self.edges.iter().all(|e| e.non_cached as u128 <= e.bound)
    }

    pub fn stats_text(&self, jt: &Jointree) -> String {
        let mut out = String::new();
        writeln!(out, "nodes {}", self.graph.node_count()).unwrap();
        writeln!(out, "edges {}", self.graph.edge_count()).unwrap();
        for e in &self.edges {
            let parent = e
                .parent
                .map_or("-".to_string(), |p| jt.label(p).to_string());
            writeln!(
                out,
                "edge {} {} sepset {} cached {} non-cached {} bound {}",
                jt.label(e.clique),
                parent,
                e.sepset.len(),
                e.cached,
                e.non_cached,
                e.bound
            )
            .unwrap();
        }
        out
    }
}

type EdgeKey = (usize, Option<usize>);

/// One pending subtree call: the clique, the neighbor it was entered from,
/// and the case being built (its and-node, instantiation and next neighbor).
struct Frame {
    clique: usize,
    parent: Option<usize>,
    key: usize,
    disj: NodeId,
    neighbors: Vec<usize>,
    cases: Vec<Instantiation>,
    current: Option<(NodeId, Instantiation, usize)>,
}

struct Session<'a> {
    ssd: &'a Ssd,
    jt: &'a Jointree,
    asg: &'a ComponentAssignment,
    tables: &'a BTreeMap<VarId, ConsequenceTable>,
    env: AssignmentEnv<'a>,
    out: NnfGraph,
    caches: HashMap<EdgeKey, HashMap<usize, NodeId>>,
    counters: BTreeMap<EdgeKey, (u64, u64)>,
    imports: HashMap<VarId, Vec<Option<NodeId>>>,
    subtree_nodes: Vec<NodeId>,
    clique_calls: u64,
}

impl Session<'_> {
    fn sepset(&self, i: usize, j: Option<usize>) -> VarSet {
        j.map_or_else(VarSet::new, |j| self.jt.sepset(i, j))
    }

    /// Cached disjunction over the instantiations of clique `i` for the
    /// current sepset values, or a fresh frame to fill it in.
    fn enter(&mut self, i: usize, j: Option<usize>) -> Result<std::result::Result<NodeId, Frame>> {
        let sep = self.sepset(i, j);
        let key = self.env.index(sep.as_slice())?;
        if let Some(&n) = self.caches.get(&(i, j)).and_then(|c| c.get(&key)) {
            self.counters.entry((i, j)).or_default().0 += 1;
            return Ok(Ok(n));
        }
        self.counters.entry((i, j)).or_default().1 += 1;
        let disj = self.out.new_or_node();
        self.subtree_nodes.push(disj);
        let neighbors = self
            .jt
            .neighbors(i)
            .iter()
            .copied()
            .filter(|&k| Some(k) != j)
            .collect();
        let mut cases = self
            .env
            .generate_instantiations(self.jt.clique(i).as_slice());
        cases.reverse();
        Ok(Err(Frame {
            clique: i,
            parent: j,
            key,
            disj,
            neighbors,
            cases,
            current: None,
        }))
    }

    /// The consequence of the components assigned to the subtree of `i`
    /// away from `j`, recursing over the jointree with an explicit stack.
    fn subtree_consequence(&mut self, i: usize, j: Option<usize>) -> Result<NodeId> {
        let mut stack = match self.enter(i, j)? {
            Ok(n) => return Ok(n),
            Err(f) => vec![f],
        };
        let mut returned: Option<NodeId> = None;
        loop {
            let top = stack.last_mut().expect("stack is non-empty");
            if let Some(child) = returned.take() {
                let (conj, _, _) = top.current.as_mut().expect("a case is open");
                self.out.push_child(*conj, child);
            }
            match &mut top.current {
                Some((_, _, next)) if *next < top.neighbors.len() => {
                    let k = top.neighbors[*next];
                    *next += 1;
                    let i = top.clique;
                    match self.enter(k, Some(i))? {
                        Ok(n) => returned = Some(n),
                        Err(f) => stack.push(f),
                    }
                }
                Some(_) => {
                    let (conj, alpha, _) = top.current.take().expect("a case is open");
                    self.out.push_child(top.disj, conj);
                    self.env.retract(&alpha)?;
                }
                None => match top.cases.pop() {
                    Some(alpha) => {
                        self.env.assert(&alpha)?;
                        let i = top.clique;
                        let conj = self.out.new_and_node();
                        top.current = Some((conj, alpha, 0));
                        let c = self.clique_consequence(i)?;
                        self.out.push_child(conj, c);
                    }
                    None => {
                        let f = stack.pop().expect("stack is non-empty");
                        self.caches
                            .entry((f.clique, f.parent))
                            .or_default()
                            .insert(f.key, f.disj);
                        if stack.is_empty() {
                            return Ok(f.disj);
                        }
                        returned = Some(f.disj);
                    }
                },
            }
        }
    }

    fn clique_consequence(&mut self, i: usize) -> Result<NodeId> {
        self.clique_calls += 1;
        let conj = self.out.new_and_node();
        for comp in self.asg.components_of(i) {
            let table = &self.tables[&comp];
            let l = self.env.index(table.ports.as_slice())?;
            let memo = self
                .imports
                .entry(comp)
                .or_insert_with(|| vec![None; table.graph.len()]);
            let node = self.out.import(&table.graph, table.entries[l], memo);
            self.out.push_child(conj, node);
        }
        Ok(conj)
    }
}

/// Compiles the consequence of `obs`: attaches an empty clique to `pivot`,
/// asserts the observation and recurses over the jointree from there. The
/// result is a decomposable NNF over the assumables whose models are the
/// diagnoses of `obs`.
pub fn system_consequence(
    ssd: &Ssd,
    jt: &Jointree,
    asg: &ComponentAssignment,
    tables: &BTreeMap<VarId, ConsequenceTable>,
    obs: &Observation,
    pivot: usize,
) -> Result<Compilation> {
    if pivot >= jt.len() {
        return Err(Error::InvalidJointree(format!(
            "pivot {pivot} is not a clique"
        )));
    }
    for cd in ssd.components() {
        if asg.clique_of(cd.output).is_none() {
            return Err(Error::NoCoveringClique(
                ssd.vocab().name(cd.output).to_string(),
            ));
        }
        if !tables.contains_key(&cd.output) {
            return Err(Error::Invalid(format!(
                "no consequence table for `{}`",
                ssd.vocab().name(cd.output)
            )));
        }
    }
    let mut session = Session {
        ssd,
        jt,
        asg,
        tables,
        env: AssignmentEnv::new(ssd.vocab()),
        out: NnfGraph::new(),
        caches: HashMap::new(),
        counters: BTreeMap::new(),
        imports: HashMap::new(),
        subtree_nodes: Vec::new(),
        clique_calls: 0,
    };
    session.env.assert(obs.instantiation())?;
    let root = session.subtree_consequence(pivot, None)?;
    session.out.set_root(root)?;
    let observed = obs.vars();
    let voc = session.ssd.vocab();
    let edges = session
        .counters
        .iter()
        .map(|(&(i, j), &(cached, non_cached))| {
            let sepset = session.sepset(i, j);
            EdgeCounter {
                clique: i,
                parent: j,
                bound: voc.domain_product(&sepset.difference(&observed)),
                sepset,
                cached,
                non_cached,
            }
        })
        .collect();
    Ok(Compilation {
        graph: session.out,
        edges,
        subtree_nodes: session.subtree_nodes,
        clique_calls: session.clique_calls,
    })
}
