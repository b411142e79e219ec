use std::collections::BTreeMap;
use std::sync::Arc;

use super::{ComponentDescription, Observation, SplitClause, Ssd};
use crate::error::{Error, Result};
use crate::logic::{Clause, Literal, VarId, VarKind, VarSet, Variable};

/// One connected part of a system after arc cutting, with the observation
/// restricted to its nodes.
#[derive(Clone, Debug)]
pub struct Piece {
    pub ssd: Ssd,
    pub observation: Observation,
}

impl Ssd {
    /// Gives every assumable that several components mention its own
    /// auxiliary root node, made equivalent to the assumable, and rewrites
    /// the sharing components to read that node instead. Auxiliary nodes are
    /// named after the assumable with a trailing `'` and are appended to the
    /// variable order, so existing ids keep their meaning.
    pub fn deshare_assumables(&self) -> Ssd {
        let shared = self.shared_assumables();
        if shared.is_empty() {
            return self.clone();
        }
        let mut vocab = (*self.vocab).clone();
        let mut comps = self.components.clone();
        let mut nodes = self.nodes();
        for (a, users) in shared {
            let var = vocab.var(a).clone();
            let mut name = format!("{}'", var.name());
            while vocab.lookup(&name).is_some() {
                name.push('\'');
            }
            let domain = (!var.has_default_domain()).then(|| var.domain().to_vec());
            let aux = vocab
                .declare(Variable::new(name, domain, VarKind::NonAssumable).expect("copied domain"))
                .expect("fresh name");
            nodes.insert(aux);
            let arity = var.arity();
            let clauses = (0..arity as u32)
                .rev()
                .map(|v| {
                    SplitClause::new(
                        Clause::new([Literal::new(aux, v)]),
                        Clause::negation(a, v, arity),
                    )
                })
                .collect();
            comps.insert(aux, ComponentDescription::new(aux, VarSet::new(), clauses));
            for u in users {
                let cd = comps.get_mut(&u).expect("user is a node");
                cd.inputs.insert(aux);
                for c in &mut cd.clauses {
                    let moved: Vec<Literal> = c
                        .assumables
                        .literals()
                        .iter()
                        .filter(|l| l.var == a)
                        .map(|l| Literal::new(aux, l.value))
                        .collect();
                    if moved.is_empty() {
                        continue;
                    }
                    c.ports = Clause::new(c.ports.literals().iter().copied().chain(moved));
                    c.assumables = Clause::new(
                        c.assumables
                            .literals()
                            .iter()
                            .copied()
                            .filter(|l| l.var != a),
                    );
                }
            }
        }
        Ssd::with_nodes(
            Arc::new(vocab),
            &nodes,
            self.assumables.clone(),
            comps.into_values().collect(),
        )
        .expect("desharing keeps the structure acyclic")
    }

    /// Removes the outgoing arcs of every observed node, substituting the
    /// observed values into the children's descriptions, and splits the
    /// result into connected pieces. Observed nodes keep their own
    /// descriptions. Fails when the substitution empties a clause entirely,
    /// since the observation then contradicts the description outright.
    pub fn cut_arcs(&self, obs: &Observation) -> Result<Vec<Piece>> {
        if obs.is_empty() {
            return Ok(vec![Piece {
                ssd: self.clone(),
                observation: obs.clone(),
            }]);
        }
        let inst = obs.instantiation();
        let observed = obs.vars();
        let mut comps: BTreeMap<VarId, ComponentDescription> = BTreeMap::new();
        for cd in self.components.values() {
            let cut = cd.inputs.intersection(&observed);
            if cut.is_empty() {
                comps.insert(cd.output, cd.clone());
                continue;
            }
            let mut clauses = Vec::with_capacity(cd.clauses.len());
            for c in &cd.clauses {
                let mut satisfied = false;
                let mut kept = Vec::new();
                for &l in c.ports.literals() {
                    if cut.contains(l.var) {
                        satisfied |= inst.holds(l);
                    } else {
                        kept.push(l);
                    }
                }
                if satisfied {
                    continue;
                }
                if kept.is_empty() && c.assumables.is_empty() {
                    return Err(Error::Invalid(format!(
                        "observation contradicts component `{}` in every mode",
                        self.vocab.name(cd.output)
                    )));
                }
                clauses.push(SplitClause::new(Clause::new(kept), c.assumables.clone()));
            }
            comps.insert(
                cd.output,
                ComponentDescription::new(cd.output, cd.inputs.difference(&observed), clauses),
            );
        }

        // connected components of the undirected remaining structure
        let ids: Vec<VarId> = comps.keys().copied().collect();
        let pos: BTreeMap<VarId, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut parent: Vec<usize> = (0..ids.len()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for cd in comps.values() {
            let a = pos[&cd.output];
            for p in cd.inputs.iter() {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, pos[&p]));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
        let mut groups: BTreeMap<usize, Vec<VarId>> = BTreeMap::new();
        for (i, &v) in ids.iter().enumerate() {
            groups.entry(find(&mut parent, i)).or_default().push(v);
        }
        let mut pieces = Vec::with_capacity(groups.len());
        for members in groups.into_values() {
            let nodes: VarSet = members.iter().copied().collect();
            let descs: Vec<ComponentDescription> =
                members.iter().map(|v| comps[v].clone()).collect();
            let assumables = descs
                .iter()
                .fold(VarSet::new(), |acc, cd| acc.union(&cd.assumables()));
            let ssd = Ssd::with_nodes(self.vocab.clone(), &nodes, assumables, descs)?;
            let observation = Observation(inst.project(&nodes));
            pieces.push(Piece { ssd, observation });
        }
        Ok(pieces)
    }
}
