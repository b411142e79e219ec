//! Rooted DAGs of literal, and and or nodes.
//!
//! Nodes live in an arena and are addressed by index; sharing a node between
//! several parents is the normal case. `true` is an and-node without children
//! and `false` an or-node without children.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::sync::OnceLock;

use crate::error::{check_cap, Error, Result};
use crate::logic::{Instantiation, Instantiations, Literal, VarSet, Vocabulary};

pub type NodeId = usize;

/// Default bound on the number of instantiations model enumeration visits.
pub const DEFAULT_MODEL_CAP: u128 = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum NnfNode {
    Literal(Literal),
    And(Vec<NodeId>),
    Or(Vec<NodeId>),
}

impl NnfNode {
    pub fn children(&self) -> &[NodeId] {
        match self {
            NnfNode::Literal(_) => &[],
            NnfNode::And(c) | NnfNode::Or(c) => c,
        }
    }

    pub fn is_true(&self) -> bool {
        matches!(self, NnfNode::And(c) if c.is_empty())
    }

    pub fn is_false(&self) -> bool {
        matches!(self, NnfNode::Or(c) if c.is_empty())
    }
}

#[derive(Clone, Debug, Default)]
pub struct NnfGraph {
    nodes: Vec<NnfNode>,
    root: Option<NodeId>,
    atoms: OnceLock<Vec<VarSet>>,
}

impl NnfGraph {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, node: NnfNode) -> NodeId {
        self.atoms = OnceLock::new();
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    pub fn new_literal_node(&mut self, lit: Literal) -> NodeId {
        self.push(NnfNode::Literal(lit))
    }

    pub fn new_and_node(&mut self) -> NodeId {
        self.push(NnfNode::And(Vec::new()))
    }

    pub fn new_or_node(&mut self) -> NodeId {
        self.push(NnfNode::Or(Vec::new()))
    }

    fn check_id(&self, id: NodeId) -> Result<()> {
        if id < self.nodes.len() {
            Ok(())
        } else {
            Err(Error::NoSuchNode(id))
        }
    }

    /// Appends `child` to `parent`, refusing edges that would close a cycle.
    pub fn add_child(&mut self, parent: NodeId, child: NodeId) -> Result<()> {
        self.check_id(parent)?;
        self.check_id(child)?;
        if matches!(self.nodes[parent], NnfNode::Literal(_)) {
            return Err(Error::LiteralParent(parent));
        }
        if self.reaches(child, parent) {
            return Err(Error::Cycle);
        }
        self.push_child(parent, child);
        Ok(())
    }

    /// `add_child` without the cycle check, for builders whose children are
    /// always complete before the parent is attached anywhere.
    pub(crate) fn push_child(&mut self, parent: NodeId, child: NodeId) {
        self.atoms = OnceLock::new();
        match &mut self.nodes[parent] {
            NnfNode::And(c) | NnfNode::Or(c) => c.push(child),
            NnfNode::Literal(_) => panic!("literal node {parent} cannot have children"),
        }
    }

    fn reaches(&self, from: NodeId, target: NodeId) -> bool {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![from];
        while let Some(n) = stack.pop() {
            if n == target {
                return true;
            }
            if std::mem::replace(&mut seen[n], true) {
                continue;
            }
            stack.extend_from_slice(self.nodes[n].children());
        }
        false
    }

    pub fn children(&self, node: NodeId) -> &[NodeId] {
        self.nodes[node].children()
    }

    pub fn node(&self, id: NodeId) -> &NnfNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn set_root(&mut self, root: NodeId) -> Result<()> {
        self.check_id(root)?;
        self.root = Some(root);
        Ok(())
    }

    pub fn root(&self) -> Result<NodeId> {
        self.root.ok_or(Error::NoRoot)
    }

    /// Nodes reachable from `starts`, children before parents.
    pub fn postorder(&self, starts: &[NodeId]) -> Vec<NodeId> {
        let mut state = vec![0u8; self.nodes.len()];
        let mut order = Vec::new();
        for &s in starts {
            if state[s] != 0 {
                continue;
            }
            let mut stack = vec![(s, 0usize)];
            state[s] = 1;
            while let Some(&mut (n, ref mut next)) = stack.last_mut() {
                let kids = self.nodes[n].children();
                if *next < kids.len() {
                    let c = kids[*next];
                    *next += 1;
                    if state[c] == 0 {
                        state[c] = 1;
                        stack.push((c, 0));
                    }
                } else {
                    state[n] = 2;
                    order.push(n);
                    stack.pop();
                }
            }
        }
        order
    }

    fn reachable(&self) -> Vec<NodeId> {
        match self.root {
            Some(r) => self.postorder(&[r]),
            None => self.postorder(&(0..self.nodes.len()).collect::<Vec<_>>()),
        }
    }

    /// Number of nodes reachable from the root.
    pub fn node_count(&self) -> usize {
        self.reachable().len()
    }

    /// Number of parent-child links among nodes reachable from the root.
    pub fn edge_count(&self) -> usize {
        self.reachable()
            .iter()
            .map(|&n| self.nodes[n].children().len())
            .sum()
    }

    fn atoms_table(&self) -> &Vec<VarSet> {
        self.atoms.get_or_init(|| {
            let all: Vec<NodeId> = (0..self.nodes.len()).collect();
            let mut table = vec![VarSet::new(); self.nodes.len()];
            for n in self.postorder(&all) {
                table[n] = match &self.nodes[n] {
                    NnfNode::Literal(l) => VarSet::singleton(l.var),
                    NnfNode::And(c) | NnfNode::Or(c) => {
                        c.iter().fold(VarSet::new(), |acc, &k| acc.union(&table[k]))
                    }
                };
            }
            table
        })
    }

    /// Variables mentioned below `node`.
    pub fn atoms_of(&self, node: NodeId) -> &VarSet {
        &self.atoms_table()[node]
    }

    /// First and-node (reachable from the root) whose children share a
    /// variable.
    pub fn decomposability_violation(&self) -> Option<NodeId> {
        for n in self.reachable() {
            if let NnfNode::And(kids) = &self.nodes[n] {
                let mut seen = VarSet::new();
                for &k in kids {
                    let a = self.atoms_of(k);
                    if !seen.is_disjoint(a) {
                        return Some(n);
                    }
                    seen = seen.union(a);
                }
            }
        }
        None
    }

    pub fn is_decomposable(&self) -> bool {
        self.decomposability_violation().is_none()
    }

    /// Linear-time satisfiability; only sound on decomposable graphs, so that
    /// is checked first.
    pub fn satisfiable(&self) -> Result<bool> {
        if let Some(n) = self.decomposability_violation() {
            return Err(Error::NotDecomposable(n));
        }
        let root = self.root()?;
        let mut sat = vec![false; self.nodes.len()];
        for n in self.postorder(&[root]) {
            sat[n] = match &self.nodes[n] {
                NnfNode::Literal(_) => true,
                NnfNode::And(c) => c.iter().all(|&k| sat[k]),
                NnfNode::Or(c) => c.iter().any(|&k| sat[k]),
            };
        }
        Ok(sat[root])
    }

    /// Truth value of `node` under `inst`, which must assign every variable
    /// below it.
    pub fn evaluate_at(&self, node: NodeId, inst: &Instantiation) -> Result<bool> {
        let mut val = vec![false; self.nodes.len()];
        for n in self.postorder(&[node]) {
            val[n] = match &self.nodes[n] {
                NnfNode::Literal(l) => match inst.get(l.var) {
                    Some(v) => v == l.value,
                    None => return Err(Error::Unassigned(format!("{}", l.var))),
                },
                NnfNode::And(c) => c.iter().all(|&k| val[k]),
                NnfNode::Or(c) => c.iter().any(|&k| val[k]),
            };
        }
        Ok(val[node])
    }

    pub fn evaluate(&self, inst: &Instantiation) -> Result<bool> {
        self.evaluate_at(self.root()?, inst)
    }

    /// All instantiations of `vars` satisfying the root.
    pub fn enumerate_models(
        &self,
        vars: &VarSet,
        vocab: &Vocabulary,
        cap: u128,
    ) -> Result<BTreeSet<Instantiation>> {
        let root = self.root()?;
        if let Some(v) = self.atoms_of(root).difference(vars).iter().next() {
            return Err(Error::Unassigned(vocab.name(v).to_string()));
        }
        check_cap(vocab.domain_product(vars), cap)?;
        let mut models = BTreeSet::new();
        for inst in Instantiations::new(vars.as_slice(), vocab) {
            if self.evaluate_at(root, &inst)? {
                models.insert(inst);
            }
        }
        Ok(models)
    }

    /// Whether two graphs have the same models over `vars`.
    pub fn equivalent(
        &self,
        other: &NnfGraph,
        vars: &VarSet,
        vocab: &Vocabulary,
        cap: u128,
    ) -> Result<bool> {
        Ok(self.enumerate_models(vars, vocab, cap)? == other.enumerate_models(vars, vocab, cap)?)
    }

    /// Copies the sub-DAG of `other` below `node` into this graph. `memo`
    /// maps ids of `other` to ids here and must be sized `other.len()`;
    /// reusing it across calls keeps shared nodes shared.
    pub fn import(
        &mut self,
        other: &NnfGraph,
        node: NodeId,
        memo: &mut [Option<NodeId>],
    ) -> NodeId {
        for n in other.postorder(&[node]) {
            if memo[n].is_some() {
                continue;
            }
            let id = match &other.nodes[n] {
                NnfNode::Literal(l) => self.new_literal_node(*l),
                NnfNode::And(c) => {
                    let kids = c
                        .iter()
                        .map(|&k| memo[k].expect("child imported"))
                        .collect();
                    self.push(NnfNode::And(kids))
                }
                NnfNode::Or(c) => {
                    let kids = c
                        .iter()
                        .map(|&k| memo[k].expect("child imported"))
                        .collect();
                    self.push(NnfNode::Or(kids))
                }
            };
            memo[n] = Some(id);
        }
        memo[node].expect("root imported")
    }

    /// Graph whose root is the conjunction of the roots of `parts`.
    pub fn conjoin(parts: &[NnfGraph]) -> Result<NnfGraph> {
        let mut g = NnfGraph::new();
        let and = g.new_and_node();
        for p in parts {
            let mut memo = vec![None; p.len()];
            let r = g.import(p, p.root()?, &mut memo);
            g.push_child(and, r);
        }
        g.root = Some(and);
        Ok(g)
    }

    /// Equivalent graph with constant children folded away: `true` under an
    /// and-node and `false` under an or-node are dropped, a `false` conjunct
    /// or `true` disjunct absorbs its parent, and single-child internal nodes
    /// are replaced by their child.
    pub fn simplified(&self) -> Result<NnfGraph> {
        let root = self.root()?;
        let mut g = NnfGraph::new();
        let t = g.new_and_node();
        let f = g.new_or_node();
        let mut map: HashMap<NodeId, NodeId> = HashMap::new();
        for n in self.postorder(&[root]) {
            let id = match &self.nodes[n] {
                NnfNode::Literal(l) => g.new_literal_node(*l),
                NnfNode::And(c) => {
                    let kids: Vec<NodeId> = c.iter().map(|k| map[k]).filter(|&k| k != t).collect();
                    if kids.contains(&f) {
                        f
                    } else if kids.is_empty() {
                        t
                    } else if kids.len() == 1 {
                        kids[0]
                    } else {
                        g.push(NnfNode::And(kids))
                    }
                }
                NnfNode::Or(c) => {
                    let kids: Vec<NodeId> = c.iter().map(|k| map[k]).filter(|&k| k != f).collect();
                    if kids.contains(&t) {
                        t
                    } else if kids.is_empty() {
                        f
                    } else if kids.len() == 1 {
                        kids[0]
                    } else {
                        g.push(NnfNode::Or(kids))
                    }
                }
            };
            map.insert(n, id);
        }
        g.root = Some(map[&root]);
        // drop the unused constants by re-serializing through the reachable part
        Ok(g.compacted())
    }

    /// Copy containing only the nodes reachable from the root, renumbered in
    /// post-order.
    pub fn compacted(&self) -> NnfGraph {
        let Some(root) = self.root else {
            return self.clone();
        };
        let mut g = NnfGraph::new();
        let mut memo = vec![None; self.nodes.len()];
        let r = g.import(self, root, &mut memo);
        g.root = Some(r);
        g
    }

    /// Text form: a header `nnf <nodes> <edges> <vars>`, then one node per
    /// line in post-order (`L <var> <value>`, `A <k> <ids>`, `O <k> <ids>`),
    /// the root last.
    pub fn serialize(&self, vocab: &Vocabulary) -> Result<String> {
        let root = self.root()?;
        let order = self.postorder(&[root]);
        let mut pos = vec![usize::MAX; self.nodes.len()];
        for (i, &n) in order.iter().enumerate() {
            pos[n] = i;
        }
        let edges: usize = order.iter().map(|&n| self.nodes[n].children().len()).sum();
        let mut out = format!("nnf {} {} {}\n", order.len(), edges, vocab.len());
        for &n in &order {
            match &self.nodes[n] {
                NnfNode::Literal(l) => {
                    writeln!(out, "L {} {}", vocab.name(l.var), l.value).unwrap();
                }
                NnfNode::And(c) | NnfNode::Or(c) => {
                    out.push(if matches!(self.nodes[n], NnfNode::And(_)) {
                        'A'
                    } else {
                        'O'
                    });
                    write!(out, " {}", c.len()).unwrap();
                    for k in c {
                        write!(out, " {}", pos[*k]).unwrap();
                    }
                    out.push('\n');
                }
            }
        }
        Ok(out)
    }

    pub fn parse(text: &str, vocab: &Vocabulary) -> Result<NnfGraph> {
        let mut g = NnfGraph::new();
        let mut header: Option<(usize, usize)> = None;
        let mut edges = 0usize;
        let mut last_line = 0;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            last_line = line;
            let l = raw.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = l.split_whitespace().collect();
            let num = |s: &str| -> Result<usize> {
                s.parse::<usize>()
                    .map_err(|_| Error::parse(line, format!("expected a number, found `{s}`")))
            };
            if header.is_none() {
                if toks.len() != 4 || toks[0] != "nnf" {
                    return Err(Error::parse(
                        line,
                        "expected header `nnf <nodes> <edges> <vars>`",
                    ));
                }
                header = Some((num(toks[1])?, num(toks[2])?));
                continue;
            }
            match toks[0] {
                "L" => {
                    if toks.len() != 3 {
                        return Err(Error::parse(line, "expected `L <var> <value>`"));
                    }
                    let var = vocab.lookup(toks[1]).ok_or_else(|| {
                        Error::parse(line, format!("unknown variable `{}`", toks[1]))
                    })?;
                    let value = num(toks[2])?;
                    if value >= vocab.arity(var) {
                        return Err(Error::parse(
                            line,
                            format!("value {value} out of range for `{}`", toks[1]),
                        ));
                    }
                    g.new_literal_node(Literal::new(var, value as u32));
                }
                kind @ ("A" | "O") => {
                    if toks.len() < 2 {
                        return Err(Error::parse(line, "missing child count"));
                    }
                    let k = num(toks[1])?;
                    if toks.len() != 2 + k {
                        return Err(Error::parse(
                            line,
                            format!("declared {k} children but listed {}", toks.len() - 2),
                        ));
                    }
                    let mut kids = Vec::with_capacity(k);
                    for t in &toks[2..] {
                        let c = num(t)?;
                        if c >= g.nodes.len() {
                            return Err(Error::parse(line, format!("child {c} not yet defined")));
                        }
                        kids.push(c);
                    }
                    edges += k;
                    g.push(if kind == "A" {
                        NnfNode::And(kids)
                    } else {
                        NnfNode::Or(kids)
                    });
                }
                other => return Err(Error::parse(line, format!("unknown node kind `{other}`"))),
            }
        }
        let Some((n, e)) = header else {
            return Err(Error::parse(last_line.max(1), "missing header"));
        };
        if g.nodes.is_empty() {
            return Err(Error::parse(last_line.max(1), "no nodes"));
        }
        if n != g.nodes.len() || e != edges {
            return Err(Error::parse(
                last_line,
                format!(
                    "header announces {n} nodes and {e} edges, found {} and {edges}",
                    g.nodes.len()
                ),
            ));
        }
        g.root = Some(g.nodes.len() - 1);
        Ok(g)
    }

    /// Builds a DNF over `terms` rooted at a fresh or-node. Each term becomes
    /// an and-node of literal nodes; the empty term is `true`.
    pub fn add_dnf(&mut self, terms: &[Instantiation]) -> NodeId {
        let or = self.new_or_node();
        for t in terms {
            let and = self.new_and_node();
            for &l in t.literals() {
                let lit = self.new_literal_node(l);
                self.push_child(and, lit);
            }
            self.push_child(or, and);
        }
        or
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{VarKind, Variable};

    fn vocab(names: &[&str]) -> Vocabulary {
        let mut v = Vocabulary::new();
        for n in names {
            v.declare(Variable::binary(*n, VarKind::Assumable)).unwrap();
        }
        v
    }

    fn lit(v: &Vocabulary, t: &str) -> Literal {
        v.parse_literal(t).unwrap()
    }

    #[test]
    fn constants() {
        let voc = vocab(&["x"]);
        let mut g = NnfGraph::new();
        let t = g.new_and_node();
        let f = g.new_or_node();
        let e = Instantiation::empty();
        assert!(g.evaluate_at(t, &e).unwrap());
        assert!(!g.evaluate_at(f, &e).unwrap());
        assert!(g.atoms_of(t).is_empty());
        g.set_root(f).unwrap();
        assert!(!g.satisfiable().unwrap());
        g.set_root(t).unwrap();
        let all: VarSet = voc.ids().collect();
        assert_eq!(
            g.enumerate_models(&all, &voc, DEFAULT_MODEL_CAP)
                .unwrap()
                .len(),
            2
        );
    }

    #[test]
    fn cycles_and_literal_parents_rejected() {
        let voc = vocab(&["x"]);
        let mut g = NnfGraph::new();
        let a = g.new_and_node();
        let o = g.new_or_node();
        let l = g.new_literal_node(lit(&voc, "x"));
        g.add_child(a, o).unwrap();
        assert_eq!(g.add_child(o, a), Err(Error::Cycle));
        assert_eq!(g.add_child(a, a), Err(Error::Cycle));
        assert_eq!(g.add_child(l, a), Err(Error::LiteralParent(l)));
        assert_eq!(g.add_child(a, 17), Err(Error::NoSuchNode(17)));
    }

    #[test]
    fn shared_atoms_not_decomposable() {
        let voc = vocab(&["x"]);
        let mut g = NnfGraph::new();
        let a = g.new_and_node();
        let p = g.new_literal_node(lit(&voc, "x"));
        let n = g.new_literal_node(lit(&voc, "!x"));
        g.add_child(a, p).unwrap();
        g.add_child(a, n).unwrap();
        g.set_root(a).unwrap();
        assert!(!g.is_decomposable());
        assert_eq!(g.satisfiable(), Err(Error::NotDecomposable(a)));
    }

    #[test]
    fn evaluate_needs_assignment() {
        let voc = vocab(&["x", "y"]);
        let mut g = NnfGraph::new();
        let o = g.new_or_node();
        let x = g.new_literal_node(lit(&voc, "!x"));
        let y = g.new_literal_node(lit(&voc, "!y"));
        g.add_child(o, x).unwrap();
        g.add_child(o, y).unwrap();
        g.set_root(o).unwrap();
        let partial = Instantiation::from_literals([lit(&voc, "x")]).unwrap();
        assert!(matches!(g.evaluate(&partial), Err(Error::Unassigned(_))));
        let both = Instantiation::from_literals([lit(&voc, "x"), lit(&voc, "y")]).unwrap();
        assert!(!g.evaluate(&both).unwrap());
        let narrow = VarSet::singleton(voc.resolve("x").unwrap());
        assert!(g
            .enumerate_models(&narrow, &voc, DEFAULT_MODEL_CAP)
            .is_err());
        let all: VarSet = voc.ids().collect();
        assert!(g
            .enumerate_models(&all, &voc, 3)
            .unwrap_err()
            .is_cap_exceeded());
    }

    #[test]
    fn parse_errors_carry_line() {
        let voc = vocab(&["x"]);
        let bad = "nnf 2 1 1\nL x 0\nA 1 5\n";
        assert!(matches!(
            NnfGraph::parse(bad, &voc),
            Err(Error::Parse { line: 3, .. })
        ));
        let unknown = "nnf 1 0 1\nL q 1\n";
        assert!(matches!(
            NnfGraph::parse(unknown, &voc),
            Err(Error::Parse { line: 2, .. })
        ));
        let counts = "nnf 3 0 1\nL x 1\n";
        assert!(matches!(
            NnfGraph::parse(counts, &voc),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            NnfGraph::parse("", &voc),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn simplify_folds_constants() {
        let voc = vocab(&["x", "y"]);
        let mut g = NnfGraph::new();
        let root = g.new_or_node();
        let a = g.new_and_node();
        let t = g.new_and_node();
        let f = g.new_or_node();
        let x = g.new_literal_node(lit(&voc, "x"));
        let y = g.new_literal_node(lit(&voc, "y"));
        g.add_child(a, x).unwrap();
        g.add_child(a, t).unwrap();
        g.add_child(root, a).unwrap();
        g.add_child(root, f).unwrap();
        let b = g.new_and_node();
        g.add_child(b, y).unwrap();
        g.add_child(b, f).unwrap();
        g.add_child(root, b).unwrap();
        g.set_root(root).unwrap();
        let s = g.simplified().unwrap();
        assert_eq!(s.node_count(), 1);
        let all: VarSet = voc.ids().collect();
        assert!(g.equivalent(&s, &all, &voc, DEFAULT_MODEL_CAP).unwrap());
    }
}
