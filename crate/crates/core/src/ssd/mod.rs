//! Structured system descriptions: a DAG over the non-assumable variables
//! with one component description per node.

mod parse;
mod rewrite;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{check_cap, Error, Result};
use crate::logic::{Clause, Instantiation, Instantiations, Literal, VarId, VarSet, Vocabulary};

pub use rewrite::Piece;

/// One clause of a component description, split into the part over the
/// component's ports and the part over its assumables.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SplitClause {
    pub ports: Clause,
    pub assumables: Clause,
}

impl SplitClause {
    pub fn new(ports: Clause, assumables: Clause) -> Self {
        SplitClause { ports, assumables }
    }

    pub fn vars(&self) -> VarSet {
        self.ports.vars().union(&self.assumables.vars())
    }

    pub fn literals(&self) -> impl Iterator<Item = Literal> + '_ {
        self.ports
            .literals()
            .iter()
            .chain(self.assumables.literals())
            .copied()
    }

    pub fn satisfied_by(&self, inst: &Instantiation) -> bool {
        self.ports.satisfied_by(inst) || self.assumables.satisfied_by(inst)
    }

    pub fn falsified_by(&self, inst: &Instantiation) -> bool {
        self.ports.falsified_by(inst) && self.assumables.falsified_by(inst)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentDescription {
    pub output: VarId,
    pub inputs: VarSet,
    pub clauses: Vec<SplitClause>,
}

impl ComponentDescription {
    pub fn new(output: VarId, inputs: VarSet, clauses: Vec<SplitClause>) -> Self {
        ComponentDescription {
            output,
            inputs,
            clauses,
        }
    }

    pub fn root(output: VarId) -> Self {
        Self::new(output, VarSet::new(), Vec::new())
    }

    /// Inputs and output in global order.
    pub fn ports(&self) -> VarSet {
        let mut p = self.inputs.clone();
        p.insert(self.output);
        p
    }

    /// Assumables mentioned by the clauses.
    pub fn assumables(&self) -> VarSet {
        self.clauses
            .iter()
            .flat_map(|c| c.assumables.literals().iter().map(|l| l.var))
            .collect()
    }

    pub fn satisfied_by(&self, inst: &Instantiation) -> bool {
        self.clauses.iter().all(|c| c.satisfied_by(inst))
    }
}

/// A system observation: a consistent conjunction of non-assumable literals.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Observation(Instantiation);

impl Observation {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(inst: Instantiation, ssd: &Ssd) -> Result<Self> {
        for l in inst.literals() {
            if !ssd.nodes().contains(l.var) {
                let name = ssd.vocab().name(l.var);
                return Err(if ssd.vocab().var(l.var).is_assumable() {
                    Error::Invalid(format!("observation mentions assumable `{name}`"))
                } else {
                    Error::Invalid(format!(
                        "observation mentions `{name}`, which is not a node"
                    ))
                });
            }
        }
        Ok(Observation(inst))
    }

    pub fn instantiation(&self) -> &Instantiation {
        &self.0
    }

    pub fn vars(&self) -> VarSet {
        self.0.vars()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValidationLevel {
    Structural,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    Cycle,
    Scope,
    SharedAssumable,
    Inconsistent,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub component: String,
    pub detail: String,
    pub witness: Option<String>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "component {}: {}", self.component, self.detail)?;
        if let Some(w) = &self.witness {
            write!(f, " (witness: {w})")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ssd {
    vocab: Arc<Vocabulary>,
    assumables: VarSet,
    components: BTreeMap<VarId, ComponentDescription>,
}

impl Ssd {
    /// Builds a description over every non-assumable of `vocab`. Nodes
    /// without a description become roots with no clauses.
    pub fn new(vocab: Arc<Vocabulary>, components: Vec<ComponentDescription>) -> Result<Self> {
        let nodes = vocab.non_assumables();
        let assumables = vocab.assumables();
        Self::with_nodes(vocab, &nodes, assumables, components)
    }

    pub(crate) fn with_nodes(
        vocab: Arc<Vocabulary>,
        nodes: &VarSet,
        assumables: VarSet,
        components: Vec<ComponentDescription>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for cd in components {
            let name = vocab.name(cd.output).to_string();
            if !nodes.contains(cd.output) {
                return Err(Error::Invalid(format!(
                    "`{name}` cannot be a component output"
                )));
            }
            if cd.inputs.contains(cd.output) {
                return Err(Error::Invalid(format!("`{name}` lists itself as a parent")));
            }
            if let Some(p) = cd.inputs.iter().find(|&p| !nodes.contains(p)) {
                return Err(Error::Invalid(format!(
                    "component `{name}` has parent `{}`, which is not a node",
                    vocab.name(p)
                )));
            }
            if map.insert(cd.output, cd).is_some() {
                return Err(Error::Invalid(format!("component `{name}` declared twice")));
            }
        }
        for v in nodes {
            map.entry(*v)
                .or_insert_with(|| ComponentDescription::root(*v));
        }
        let ssd = Ssd {
            vocab,
            assumables,
            components: map,
        };
        if let Some(cycle) = ssd.find_cycle() {
            return Err(Error::Invalid(format!("structure has a cycle: {cycle}")));
        }
        Ok(ssd)
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn vocab_arc(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    /// The non-assumable variables, one node each.
    pub fn nodes(&self) -> VarSet {
        self.components.keys().copied().collect()
    }

    pub fn assumables(&self) -> &VarSet {
        &self.assumables
    }

    pub fn component(&self, node: VarId) -> Option<&ComponentDescription> {
        self.components.get(&node)
    }

    pub fn components(&self) -> impl Iterator<Item = &ComponentDescription> {
        self.components.values()
    }

    pub fn parents(&self, node: VarId) -> &VarSet {
        &self.components[&node].inputs
    }

    pub fn children(&self, node: VarId) -> Vec<VarId> {
        self.components
            .values()
            .filter(|cd| cd.inputs.contains(node))
            .map(|cd| cd.output)
            .collect()
    }

    pub fn parse(text: &str) -> Result<Self> {
        parse::parse_ssd(text)
    }

    pub fn parse_observation(&self, text: &str) -> Result<Observation> {
        parse::parse_observation(text, self)
    }

    pub fn to_text(&self) -> String {
        parse::write_ssd(self)
    }

    /// Assumables mentioned by more than one component, with the components
    /// that mention them.
    pub fn shared_assumables(&self) -> Vec<(VarId, Vec<VarId>)> {
        let mut users: BTreeMap<VarId, Vec<VarId>> = BTreeMap::new();
        for cd in self.components.values() {
            for a in cd.assumables().iter() {
                users.entry(a).or_default().push(cd.output);
            }
        }
        users.into_iter().filter(|(_, u)| u.len() > 1).collect()
    }

    fn find_cycle(&self) -> Option<String> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state: BTreeMap<VarId, u8> = BTreeMap::new();
        for &start in self.components.keys() {
            if state.get(&start).copied().unwrap_or(0) != 0 {
                continue;
            }
            let mut stack: Vec<(VarId, usize)> = vec![(start, 0)];
            state.insert(start, 1);
            while let Some(&mut (n, ref mut i)) = stack.last_mut() {
                let parents = self.components[&n].inputs.as_slice();
                if *i < parents.len() {
                    let p = parents[*i];
                    *i += 1;
                    match state.get(&p).copied().unwrap_or(0) {
                        0 => {
                            state.insert(p, 1);
                            stack.push((p, 0));
                        }
                        1 => {
                            let pos = stack.iter().position(|&(m, _)| m == p).unwrap();
                            let mut names: Vec<&str> = stack[pos..]
                                .iter()
                                .map(|&(m, _)| self.vocab.name(m))
                                .collect();
                            names.push(self.vocab.name(p));
                            names.reverse();
                            return Some(names.join(" -> "));
                        }
                        _ => {}
                    }
                } else {
                    state.insert(n, 2);
                    stack.pop();
                }
            }
        }
        None
    }

    /// Nodes ordered so that parents come before children.
    pub fn topological_order(&self) -> Vec<VarId> {
        let mut order = Vec::with_capacity(self.components.len());
        let mut done: BTreeMap<VarId, bool> = BTreeMap::new();
        fn visit(ssd: &Ssd, n: VarId, done: &mut BTreeMap<VarId, bool>, order: &mut Vec<VarId>) {
            if done.insert(n, true).is_some() {
                return;
            }
            for p in ssd.parents(n).iter() {
                visit(ssd, p, done, order);
            }
            order.push(n);
        }
        for &n in self.components.keys() {
            visit(self, n, &mut done, &mut order);
        }
        order
    }

    /// Checks the structural conditions and, at [`ValidationLevel::Full`],
    /// that every instantiation of a component's inputs and assumables is
    /// consistent with its description. `cap` bounds the per-component
    /// enumeration.
    pub fn validate(&self, level: ValidationLevel, cap: u128) -> Result<ValidationReport> {
        let voc = &*self.vocab;
        let mut report = ValidationReport::default();
        if let Some(cycle) = self.find_cycle() {
            report.violations.push(Violation {
                kind: ViolationKind::Cycle,
                component: cycle.split(' ').next().unwrap_or("").to_string(),
                detail: format!("structure has a cycle {cycle}"),
                witness: None,
            });
        }
        for cd in self.components.values() {
            let name = voc.name(cd.output);
            let ports = cd.ports();
            for (i, c) in cd.clauses.iter().enumerate() {
                for l in c.ports.literals() {
                    if !ports.contains(l.var) {
                        report.violations.push(Violation {
                            kind: ViolationKind::Scope,
                            component: name.to_string(),
                            detail: format!(
                                "clause {} mentions `{}`, which is not a port",
                                i + 1,
                                voc.name(l.var)
                            ),
                            witness: None,
                        });
                    }
                }
                for l in c.assumables.literals() {
                    if !self.assumables.contains(l.var) {
                        report.violations.push(Violation {
                            kind: ViolationKind::Scope,
                            component: name.to_string(),
                            detail: format!(
                                "clause {} uses `{}` as an assumable",
                                i + 1,
                                voc.name(l.var)
                            ),
                            witness: None,
                        });
                    }
                }
            }
        }
        for (a, users) in self.shared_assumables() {
            let names: Vec<&str> = users.iter().map(|&u| voc.name(u)).collect();
            report.violations.push(Violation {
                kind: ViolationKind::SharedAssumable,
                component: names.join(","),
                detail: format!("shared assumable {}", voc.name(a)),
                witness: None,
            });
        }
        if level == ValidationLevel::Full && report.is_valid() {
            for cd in self.components.values() {
                if let Some(w) = self.inconsistency_witness(cd, cap)? {
                    report.violations.push(Violation {
                        kind: ViolationKind::Inconsistent,
                        component: voc.name(cd.output).to_string(),
                        detail:
                            "an instantiation of inputs and assumables has no consistent output"
                                .to_string(),
                        witness: Some(if w.is_empty() {
                            "true".to_string()
                        } else {
                            voc.instantiation_text(&w)
                        }),
                    });
                }
            }
        }
        Ok(report)
    }

    fn inconsistency_witness(
        &self,
        cd: &ComponentDescription,
        cap: u128,
    ) -> Result<Option<Instantiation>> {
        let voc = &*self.vocab;
        let free = cd.inputs.union(&cd.assumables());
        check_cap(
            voc.domain_product(&free)
                .saturating_mul(voc.arity(cd.output) as u128),
            cap,
        )?;
        for inst in Instantiations::new(free.as_slice(), voc) {
            let extends = (0..voc.arity(cd.output) as u32).any(|o| {
                let full = inst
                    .with(Literal::new(cd.output, o))
                    .expect("output is free");
                cd.satisfied_by(&full)
            });
            if !extends {
                return Ok(Some(inst));
            }
        }
        Ok(None)
    }
}
