//! Jointrees over the system structure and the assignment of components to
//! cliques.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::logic::{VarId, VarSet, Vocabulary};
use crate::ssd::Ssd;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Jointree {
    cliques: Vec<VarSet>,
    labels: Vec<usize>,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum JointreeViolation {
    NotATree(String),
    UnknownVariable {
        clique: usize,
        var: String,
    },
    UncoveredPorts {
        component: String,
    },
    Disconnected {
        var: String,
        path: Vec<usize>,
        missing_at: usize,
    },
}

impl fmt::Display for JointreeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JointreeViolation::NotATree(why) => write!(f, "not a tree: {why}"),
            JointreeViolation::UnknownVariable { clique, var } => {
                write!(f, "clique {clique} mentions `{var}`, which is not a node")
            }
            JointreeViolation::UncoveredPorts { component } => {
                write!(f, "no clique contains the ports of component {component}")
            }
            JointreeViolation::Disconnected {
                var,
                path,
                missing_at,
            } => {
                let p: Vec<String> = path.iter().map(|c| c.to_string()).collect();
                write!(
                    f,
                    "jointree property fails for {var}: clique {missing_at} on path {} lacks it",
                    p.join(" - ")
                )
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct JointreeReport {
    pub violations: Vec<JointreeViolation>,
}

impl JointreeReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct JointreeStats {
    pub width: usize,
    pub predicted_cost: u128,
}

/// Which clique each component's description is attached to.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ComponentAssignment {
    map: BTreeMap<VarId, usize>,
}

impl ComponentAssignment {
    pub fn clique_of(&self, component: VarId) -> Option<usize> {
        self.map.get(&component).copied()
    }

    /// Components attached to `clique`, in global order.
    pub fn components_of(&self, clique: usize) -> Vec<VarId> {
        self.map
            .iter()
            .filter(|&(_, &c)| c == clique)
            .map(|(&v, _)| v)
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, usize)> + '_ {
        self.map.iter().map(|(&v, &c)| (v, c))
    }
}

/// A jointree read from a file, possibly with explicit component placements.
#[derive(Clone, Debug)]
pub struct JointreeFile {
    pub jointree: Jointree,
    pub assignment: BTreeMap<VarId, usize>,
}

impl Jointree {
    /// Creates a jointree from cliques and edges between clique indices.
    /// Nothing is checked; see [`Jointree::validate`].
    pub fn new(cliques: Vec<VarSet>, edges: Vec<(usize, usize)>) -> Self {
        let labels = (0..cliques.len()).collect();
        Self::with_labels(cliques, labels, edges)
    }

    fn with_labels(cliques: Vec<VarSet>, labels: Vec<usize>, edges: Vec<(usize, usize)>) -> Self {
        let mut neighbors = vec![Vec::new(); cliques.len()];
        for &(a, b) in &edges {
            if a < cliques.len() && b < cliques.len() {
                neighbors[a].push(b);
                neighbors[b].push(a);
            }
        }
        for n in &mut neighbors {
            n.sort_unstable();
        }
        Jointree {
            cliques,
            labels,
            edges,
            neighbors,
        }
    }

    pub fn cliques(&self) -> &[VarSet] {
        &self.cliques
    }

    pub fn clique(&self, i: usize) -> &VarSet {
        &self.cliques[i]
    }

    pub fn len(&self) -> usize {
        self.cliques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cliques.is_empty()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn sepset(&self, i: usize, j: usize) -> VarSet {
        self.cliques[i].intersection(&self.cliques[j])
    }

    /// The name a clique had in its source file (its index otherwise).
    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn index_of_label(&self, label: usize) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    /// Lowest-index clique among the largest ones.
    pub fn default_pivot(&self) -> usize {
        let max = self.cliques.iter().map(VarSet::len).max().unwrap_or(0);
        self.cliques
            .iter()
            .position(|c| c.len() == max)
            .unwrap_or(0)
    }

    /// Builds a jointree for the structure of `ssd`. Structures whose
    /// undirected skeleton has no cycles get one clique per family, with
    /// cliques contained in a neighbour absorbed into it. Anything else is
    /// moralised, triangulated by min-fill and connected by a maximum-weight
    /// spanning tree over sepset sizes.
    pub fn build(ssd: &Ssd) -> Jointree {
        let nodes = ssd.nodes();
        if nodes.is_empty() {
            return Jointree::new(vec![VarSet::new()], Vec::new());
        }
        if skeleton_is_forest(ssd) {
            build_from_families(ssd)
        } else {
            build_by_min_fill(ssd)
        }
    }

    pub fn validate(&self, ssd: &Ssd) -> JointreeReport {
        let voc = ssd.vocab();
        let mut report = JointreeReport::default();
        let n = self.cliques.len();
        if n == 0 {
            report
                .violations
                .push(JointreeViolation::NotATree("no cliques".into()));
            return report;
        }
        let mut tree_ok = true;
        let mut seen = BTreeSet::new();
        for &(a, b) in &self.edges {
            if a >= n || b >= n {
                report.violations.push(JointreeViolation::NotATree(format!(
                    "edge {a} - {b} names a missing clique"
                )));
                tree_ok = false;
            } else if a == b {
                report.violations.push(JointreeViolation::NotATree(format!(
                    "self loop at clique {a}"
                )));
                tree_ok = false;
            } else if !seen.insert((a.min(b), a.max(b))) {
                report.violations.push(JointreeViolation::NotATree(format!(
                    "edge {a} - {b} repeated"
                )));
                tree_ok = false;
            }
        }
        if tree_ok {
            if self.edges.len() != n - 1 {
                report.violations.push(JointreeViolation::NotATree(format!(
                    "{} cliques need {} edges, found {}",
                    n,
                    n - 1,
                    self.edges.len()
                )));
                tree_ok = false;
            } else if self.component_from(0, |_| true).len() != n {
                report.violations.push(JointreeViolation::NotATree(
                    "cliques are not connected".into(),
                ));
                tree_ok = false;
            }
        }
        let nodes = ssd.nodes();
        for (i, c) in self.cliques.iter().enumerate() {
            for v in c.iter() {
                if !nodes.contains(v) {
                    report.violations.push(JointreeViolation::UnknownVariable {
                        clique: self.labels[i],
                        var: voc.name(v).to_string(),
                    });
                }
            }
        }
        for cd in ssd.components() {
            let ports = cd.ports();
            if !self.cliques.iter().any(|c| ports.is_subset(c)) {
                report.violations.push(JointreeViolation::UncoveredPorts {
                    component: voc.name(cd.output).to_string(),
                });
            }
        }
        if tree_ok {
            let all: VarSet = self.cliques.iter().fold(VarSet::new(), |a, c| a.union(c));
            for v in all.iter() {
                let holders: Vec<usize> = (0..n).filter(|&i| self.cliques[i].contains(v)).collect();
                let reach = self.component_from(holders[0], |i| self.cliques[i].contains(v));
                if let Some(&other) = holders.iter().find(|h| !reach.contains(h)) {
                    let path = self.path(holders[0], other);
                    let missing = *path
                        .iter()
                        .find(|&&c| !self.cliques[c].contains(v))
                        .expect("a gap exists on the path");
                    report.violations.push(JointreeViolation::Disconnected {
                        var: voc.name(v).to_string(),
                        path: path.iter().map(|&c| self.labels[c]).collect(),
                        missing_at: self.labels[missing],
                    });
                }
            }
        }
        report
    }

    fn component_from(&self, start: usize, keep: impl Fn(usize) -> bool) -> BTreeSet<usize> {
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            for &k in &self.neighbors[c] {
                if keep(k) && seen.insert(k) {
                    queue.push_back(k);
                }
            }
        }
        seen
    }

    fn path(&self, from: usize, to: usize) -> Vec<usize> {
        let mut prev = vec![usize::MAX; self.cliques.len()];
        prev[from] = from;
        let mut queue = VecDeque::from([from]);
        while let Some(c) = queue.pop_front() {
            for &k in &self.neighbors[c] {
                if prev[k] == usize::MAX {
                    prev[k] = c;
                    queue.push_back(k);
                }
            }
        }
        let mut path = vec![to];
        let mut c = to;
        while c != from {
            c = prev[c];
            path.push(c);
        }
        path.reverse();
        path
    }

    /// Attaches each component to the smallest clique containing its ports,
    /// preferring the lowest index among equals.
    pub fn assign_components(&self, ssd: &Ssd) -> Result<ComponentAssignment> {
        self.assign_with(ssd, &BTreeMap::new())
    }

    /// Like [`Jointree::assign_components`], but `fixed` pins some
    /// components to given cliques; pinned cliques must cover the ports.
    pub fn assign_with(
        &self,
        ssd: &Ssd,
        fixed: &BTreeMap<VarId, usize>,
    ) -> Result<ComponentAssignment> {
        let mut map = BTreeMap::new();
        for cd in ssd.components() {
            let ports = cd.ports();
            let name = || ssd.vocab().name(cd.output).to_string();
            let clique = match fixed.get(&cd.output) {
                Some(&c) => {
                    if c >= self.cliques.len() || !ports.is_subset(&self.cliques[c]) {
                        return Err(Error::NoCoveringClique(name()));
                    }
                    c
                }
                None => (0..self.cliques.len())
                    .filter(|&i| ports.is_subset(&self.cliques[i]))
                    .min_by_key(|&i| (self.cliques[i].len(), i))
                    .ok_or_else(|| Error::NoCoveringClique(name()))?,
            };
            map.insert(cd.output, clique);
        }
        Ok(ComponentAssignment { map })
    }

    /// Width and the predicted compilation cost, the sum over cliques of
    /// `|C|` times the number of instantiations of the unobserved part of C.
    pub fn stats(&self, observed: &VarSet, vocab: &Vocabulary) -> JointreeStats {
        let width = self
            .cliques
            .iter()
            .map(VarSet::len)
            .max()
            .unwrap_or(0)
            .saturating_sub(1);
        let predicted_cost = self
            .cliques
            .iter()
            .map(|c| {
                (c.len() as u128).saturating_mul(vocab.domain_product(&c.difference(observed)))
            })
            .fold(0u128, u128::saturating_add);
        JointreeStats {
            width,
            predicted_cost,
        }
    }

    /// Parses `clique <id> <var>...`, `edge <id> <id>` and optional
    /// `assign <component> <id>` lines.
    pub fn parse(text: &str, vocab: &Vocabulary) -> Result<JointreeFile> {
        let mut cliques = Vec::new();
        let mut labels: Vec<usize> = Vec::new();
        let mut raw_edges = Vec::new();
        let mut raw_assign = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("");
            let toks: Vec<&str> = body.split_whitespace().collect();
            let Some(&head) = toks.first() else { continue };
            let num = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::parse(line, format!("expected a clique id, found `{s}`")))
            };
            match head {
                "clique" => {
                    let id = num(toks
                        .get(1)
                        .ok_or_else(|| Error::parse(line, "missing clique id"))?)?;
                    if labels.contains(&id) {
                        return Err(Error::parse(line, format!("clique {id} defined twice")));
                    }
                    let mut c = VarSet::new();
                    for t in &toks[2..] {
                        let v = vocab
                            .lookup(t)
                            .ok_or_else(|| Error::parse(line, format!("unknown variable `{t}`")))?;
                        c.insert(v);
                    }
                    labels.push(id);
                    cliques.push(c);
                }
                "edge" => {
                    if toks.len() != 3 {
                        return Err(Error::parse(line, "expected `edge <id> <id>`"));
                    }
                    raw_edges.push((line, num(toks[1])?, num(toks[2])?));
                }
                "assign" => {
                    if toks.len() != 3 {
                        return Err(Error::parse(line, "expected `assign <component> <id>`"));
                    }
                    let v = vocab.lookup(toks[1]).ok_or_else(|| {
                        Error::parse(line, format!("unknown variable `{}`", toks[1]))
                    })?;
                    raw_assign.push((line, v, num(toks[2])?));
                }
                other => return Err(Error::parse(line, format!("unknown keyword `{other}`"))),
            }
        }
        let index = |line: usize, id: usize| {
            labels
                .iter()
                .position(|&l| l == id)
                .ok_or_else(|| Error::parse(line, format!("no clique {id}")))
        };
        let mut edges = Vec::new();
        for (line, a, b) in raw_edges {
            edges.push((index(line, a)?, index(line, b)?));
        }
        let mut assignment = BTreeMap::new();
        for (line, v, c) in raw_assign {
            if assignment.insert(v, index(line, c)?).is_some() {
                return Err(Error::parse(
                    line,
                    format!("`{}` assigned twice", vocab.name(v)),
                ));
            }
        }
        if cliques.is_empty() {
            return Err(Error::InvalidJointree("no cliques".into()));
        }
        Ok(JointreeFile {
            jointree: Jointree::with_labels(cliques, labels, edges),
            assignment,
        })
    }

    pub fn to_text(&self, vocab: &Vocabulary, assignment: Option<&ComponentAssignment>) -> String {
        let mut out = String::new();
        for (i, c) in self.cliques.iter().enumerate() {
            write!(out, "clique {}", self.labels[i]).unwrap();
            for v in c.iter() {
                write!(out, " {}", vocab.name(v)).unwrap();
            }
            out.push('\n');
        }
        for &(a, b) in &self.edges {
            writeln!(out, "edge {} {}", self.labels[a], self.labels[b]).unwrap();
        }
        if let Some(asg) = assignment {
            for (v, c) in asg.iter() {
                writeln!(out, "assign {} {}", vocab.name(v), self.labels[c]).unwrap();
            }
        }
        out
    }
}

fn family(ssd: &Ssd, n: VarId) -> VarSet {
    let mut f = ssd.parents(n).clone();
    f.insert(n);
    f
}

/// Whether the structure, with directions dropped, has no cycles.
pub fn skeleton_is_forest(ssd: &Ssd) -> bool {
    let nodes = ssd.nodes();
    let pos: BTreeMap<VarId, usize> = nodes.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let mut parent: Vec<usize> = (0..nodes.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for n in nodes.iter() {
        for q in ssd.parents(n).iter() {
            let (a, b) = (find(&mut parent, pos[&n]), find(&mut parent, pos[&q]));
            if a == b {
                return false;
            }
            parent[a] = b;
        }
    }
    true
}

fn build_from_families(ssd: &Ssd) -> Jointree {
    let nodes: Vec<VarId> = ssd.nodes().iter().collect();
    let pos: BTreeMap<VarId, usize> = nodes.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut cliques: Vec<Option<VarSet>> = nodes.iter().map(|&n| Some(family(ssd, n))).collect();
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); nodes.len()];
    for &n in &nodes {
        for q in ssd.parents(n).iter() {
            adj[pos[&n]].insert(pos[&q]);
            adj[pos[&q]].insert(pos[&n]);
        }
    }
    // absorb cliques contained in a neighbour until none is left
    loop {
        let mut changed = false;
        for i in 0..cliques.len() {
            let Some(ci) = cliques[i].clone() else {
                continue;
            };
            let target = adj[i]
                .iter()
                .copied()
                .find(|&j| cliques[j].as_ref().is_some_and(|cj| ci.is_subset(cj)));
            if let Some(j) = target {
                let others: Vec<usize> = adj[i].iter().copied().filter(|&k| k != j).collect();
                for k in others {
                    adj[k].remove(&i);
                    adj[k].insert(j);
                    adj[j].insert(k);
                }
                adj[j].remove(&i);
                adj[i].clear();
                cliques[i] = None;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let kept: Vec<usize> = (0..cliques.len())
        .filter(|&i| cliques[i].is_some())
        .collect();
    let new_index: BTreeMap<usize, usize> = kept.iter().enumerate().map(|(n, &o)| (o, n)).collect();
    let mut edges = Vec::new();
    for &i in &kept {
        for &j in &adj[i] {
            if i < j {
                edges.push((new_index[&i], new_index[&j]));
            }
        }
    }
    let cliques: Vec<VarSet> = kept.iter().map(|&i| cliques[i].clone().unwrap()).collect();
    join_forest(cliques, edges)
}

/// Links the trees of a forest into one tree with empty-sepset edges.
fn join_forest(cliques: Vec<VarSet>, mut edges: Vec<(usize, usize)>) -> Jointree {
    let n = cliques.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(a, b) in &edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra.max(rb)] = ra.min(rb);
    }
    for i in 1..n {
        let (r0, ri) = (find(&mut parent, 0), find(&mut parent, i));
        if r0 != ri {
            edges.push((0, i));
            parent[ri.max(r0)] = ri.min(r0);
        }
    }
    Jointree::new(cliques, edges)
}

fn build_by_min_fill(ssd: &Ssd) -> Jointree {
    let nodes: Vec<VarId> = ssd.nodes().iter().collect();
    let pos: BTreeMap<VarId, usize> = nodes.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let n = nodes.len();
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for &v in &nodes {
        let fam: Vec<usize> = family(ssd, v).iter().map(|u| pos[&u]).collect();
        for &a in &fam {
            for &b in &fam {
                if a != b {
                    adj[a].insert(b);
                }
            }
        }
    }
    let mut alive = vec![true; n];
    let mut elim_cliques: Vec<VarSet> = Vec::new();
    for _ in 0..n {
        let fill = |v: usize, adj: &Vec<BTreeSet<usize>>| {
            let nb: Vec<usize> = adj[v].iter().copied().collect();
            let mut count = 0usize;
            for (i, &a) in nb.iter().enumerate() {
                for &b in &nb[i + 1..] {
                    if !adj[a].contains(&b) {
                        count += 1;
                    }
                }
            }
            count
        };
        let v = (0..n)
            .filter(|&v| alive[v])
            .min_by_key(|&v| (fill(v, &adj), v))
            .expect("a vertex is left");
        let nb: Vec<usize> = adj[v].iter().copied().collect();
        for &a in &nb {
            for &b in &nb {
                if a != b {
                    adj[a].insert(b);
                }
            }
        }
        let mut clique: VarSet = nb.iter().map(|&u| nodes[u]).collect();
        clique.insert(nodes[v]);
        for &a in &nb {
            adj[a].remove(&v);
        }
        adj[v].clear();
        alive[v] = false;
        elim_cliques.push(clique);
    }
    let mut cliques: Vec<VarSet> = Vec::new();
    for (i, c) in elim_cliques.iter().enumerate() {
        let dominated = elim_cliques
            .iter()
            .enumerate()
            .any(|(j, d)| j != i && c.is_subset(d) && (c.len() < d.len() || j < i));
        if !dominated {
            cliques.push(c.clone());
        }
    }
    // maximum-weight spanning tree, heavier sepsets first, then lower indices
    let mut candidates = Vec::new();
    for i in 0..cliques.len() {
        for j in i + 1..cliques.len() {
            candidates.push((cliques[i].intersection(&cliques[j]).len(), i, j));
        }
    }
    candidates.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut parent: Vec<usize> = (0..cliques.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut edges = Vec::new();
    for (_, i, j) in candidates {
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        if a != b {
            parent[a.max(b)] = a.min(b);
            edges.push((i, j));
        }
    }
    Jointree::new(cliques, edges)
}
