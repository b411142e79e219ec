//! Brute-force reference answers.
//!
//! Everything here works by plain enumeration so that it can be checked by
//! eye; the caps keep it to small systems.

use std::collections::BTreeSet;

use crate::diagnose::{Cost, CostFunction, Diagnoses};
use crate::error::{check_cap, Result};
use crate::logic::{Clause, Instantiation, Instantiations, Literal, VarId, VarSet, Vocabulary};
use crate::ssd::{Observation, Ssd};

/// Default bound on the enumeration space of the diagnosis oracle.
pub const DEFAULT_ORACLE_CAP: u128 = 1 << 22;

/// Default bound on the number of candidate terms or clauses.
pub const DEFAULT_PRIME_CAP: u128 = 1 << 20;

struct Search<'a> {
    vocab: &'a Vocabulary,
    order: Vec<VarId>,
    values: Vec<Option<u32>>,
    /// clauses to check right after position `d` of `order` is assigned
    due: Vec<Vec<&'a [Literal]>>,
}

impl Search<'_> {
    fn ok(&self, clause: &[Literal]) -> bool {
        clause
            .iter()
            .any(|l| self.values[l.var.index()] == Some(l.value))
    }

    fn consistent_at(&self, d: usize) -> bool {
        self.due[d].iter().all(|c| self.ok(c))
    }

    /// Whether positions `d..` can be completed without violating a clause.
    fn extends(&mut self, d: usize) -> bool {
        if d == self.order.len() {
            return true;
        }
        let v = self.order[d];
        for value in 0..self.vocab.arity(v) as u32 {
            self.values[v.index()] = Some(value);
            if self.consistent_at(d) && self.extends(d + 1) {
                self.values[v.index()] = None;
                return true;
            }
        }
        self.values[v.index()] = None;
        false
    }

    fn collect(&mut self, d: usize, prefix: usize, found: &mut BTreeSet<Instantiation>) {
        if d == prefix {
            if self.extends(d) {
                let lits = self.order[..prefix]
                    .iter()
                    .map(|&v| Literal::new(v, self.values[v.index()].unwrap()));
                found.insert(Instantiation::from_literals(lits).unwrap());
            }
            return;
        }
        let v = self.order[d];
        for value in 0..self.vocab.arity(v) as u32 {
            self.values[v.index()] = Some(value);
            if self.consistent_at(d) {
                self.collect(d + 1, prefix, found);
            }
        }
        self.values[v.index()] = None;
    }
}

/// Every instantiation of the assumables that, together with `obs`, some
/// assignment of the remaining nodes extends to a model of all component
/// descriptions. `cap` bounds the number of instantiations of the
/// assumables and unobserved nodes.
pub fn brute_diagnoses(ssd: &Ssd, obs: &Observation, cap: u128) -> Result<BTreeSet<Instantiation>> {
    let vocab = ssd.vocab();
    let assumables: Vec<VarId> = ssd.assumables().iter().collect();
    let free: Vec<VarId> = ssd.nodes().difference(&obs.vars()).iter().collect();
    let order: Vec<VarId> = assumables.iter().chain(&free).copied().collect();
    check_cap(vocab.domain_product(&order), cap)?;

    let mut position = vec![None; vocab.len()];
    for (d, v) in order.iter().enumerate() {
        position[v.index()] = Some(d);
    }
    let mut values = vec![None; vocab.len()];
    for l in obs.instantiation().literals() {
        values[l.var.index()] = Some(l.value);
    }
    let clauses: Vec<Vec<Literal>> = ssd
        .components()
        .flat_map(|cd| cd.clauses.iter().map(|c| c.literals().collect()))
        .collect();
    let mut due: Vec<Vec<&[Literal]>> = vec![Vec::new(); order.len()];
    let mut search = Search {
        vocab,
        order,
        values,
        due: Vec::new(),
    };
    for c in &clauses {
        match c.iter().filter_map(|l| position[l.var.index()]).max() {
            Some(d) => due[d].push(c),
            None => {
                if !search.ok(c) {
                    return Ok(BTreeSet::new());
                }
            }
        }
    }
    search.due = due;
    let mut found = BTreeSet::new();
    search.collect(0, assumables.len(), &mut found);
    Ok(found)
}

/// The diagnoses of least cost.
pub fn brute_minimal(
    ssd: &Ssd,
    obs: &Observation,
    cf: &CostFunction,
    cap: u128,
) -> Result<Diagnoses> {
    let all = brute_diagnoses(ssd, obs, cap)?;
    let Some(min) = all.iter().map(|d| cf.cost_of(d)).min() else {
        return Ok(Diagnoses {
            cost: Cost::Infinite,
            diagnoses: BTreeSet::new(),
        });
    };
    Ok(Diagnoses {
        cost: Cost::Finite(min),
        diagnoses: all.into_iter().filter(|d| cf.cost_of(d) == min).collect(),
    })
}

/// Every partial instantiation of `vars`, fewest literals first.
fn partial_instantiations(vars: &VarSet, vocab: &Vocabulary) -> Vec<Instantiation> {
    let vs = vars.as_slice();
    let mut masks: Vec<u32> = (0..1u32 << vs.len()).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    let mut out = Vec::new();
    for m in masks {
        let chosen: Vec<VarId> = (0..vs.len())
            .filter(|&i| m >> i & 1 == 1)
            .map(|i| vs[i])
            .collect();
        out.extend(Instantiations::new(&chosen, vocab));
    }
    out
}

fn check_prime_space(vars: &VarSet, vocab: &Vocabulary, cap: u128) -> Result<()> {
    let space = vars
        .iter()
        .map(|v| 1u128 << vocab.arity(v).min(100))
        .fold(1u128, |a, b| a.saturating_mul(b));
    check_cap(space, cap)
}

/// Prime implicants of the set `models` of full instantiations of `vars`:
/// the partial instantiations all of whose completions are models, none of
/// which contains another.
pub fn prime_implicants(
    models: &BTreeSet<Instantiation>,
    vars: &VarSet,
    vocab: &Vocabulary,
    cap: u128,
) -> Result<BTreeSet<Instantiation>> {
    check_prime_space(vars, vocab, cap)?;
    let mut kept: Vec<Instantiation> = Vec::new();
    for t in partial_instantiations(vars, vocab) {
        if kept
            .iter()
            .any(|k| k.literals().iter().all(|&l| t.holds(l)))
        {
            continue;
        }
        let completions = vocab.domain_product(&vars.difference(&t.vars()));
        let covered = models.iter().filter(|m| t.is_consistent_with(m)).count() as u128;
        if covered == completions {
            kept.push(t);
        }
    }
    Ok(kept.into_iter().collect())
}

/// Every non-tautological clause over `vars`: per variable, either nothing
/// or a proper non-empty subset of its values. Fewest literals first.
fn candidate_clauses(vars: &VarSet, vocab: &Vocabulary) -> Vec<Clause> {
    let mut clauses: Vec<Vec<Literal>> = vec![Vec::new()];
    for v in vars.iter() {
        let arity = vocab.arity(v) as u32;
        let mut next = Vec::new();
        for c in &clauses {
            next.push(c.clone());
            for subset in 1..(1u32 << arity) - 1 {
                let mut e = c.clone();
                e.extend(
                    (0..arity)
                        .filter(|&w| subset >> w & 1 == 1)
                        .map(|w| Literal::new(v, w)),
                );
                next.push(e);
            }
        }
        clauses = next;
    }
    let mut out: Vec<Clause> = clauses.into_iter().map(Clause::new).collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// Prime implicates of the set `models`: clauses satisfied by every model,
/// none of which contains another.
pub fn prime_implicates(
    models: &BTreeSet<Instantiation>,
    vars: &VarSet,
    vocab: &Vocabulary,
    cap: u128,
) -> Result<BTreeSet<Clause>> {
    check_prime_space(vars, vocab, cap)?;
    let mut kept: Vec<Clause> = Vec::new();
    for c in candidate_clauses(vars, vocab) {
        if kept.iter().any(|k| {
            k.literals()
                .iter()
                .all(|l| c.literals().binary_search(l).is_ok())
        }) {
            continue;
        }
        if models.iter().all(|m| c.satisfied_by(m)) {
            kept.push(c);
        }
    }
    Ok(kept.into_iter().collect())
}

/// Models over `vars` of a disjunction of terms.
pub fn models_of_terms(
    terms: &BTreeSet<Instantiation>,
    vars: &VarSet,
    vocab: &Vocabulary,
) -> BTreeSet<Instantiation> {
    Instantiations::new(vars.as_slice(), vocab)
        .filter(|m| {
            terms
                .iter()
                .any(|t| t.literals().iter().all(|&l| m.holds(l)))
        })
        .collect()
}

/// Models over `vars` of a conjunction of clauses.
pub fn models_of_clauses(
    clauses: &BTreeSet<Clause>,
    vars: &VarSet,
    vocab: &Vocabulary,
) -> BTreeSet<Instantiation> {
    Instantiations::new(vars.as_slice(), vocab)
        .filter(|m| clauses.iter().all(|c| c.satisfied_by(m)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{VarKind, Variable};

    fn two() -> (Vocabulary, VarSet) {
        let mut v = Vocabulary::new();
        v.declare(Variable::binary("okX", VarKind::Assumable))
            .unwrap();
        v.declare(Variable::binary("okY", VarKind::Assumable))
            .unwrap();
        let a = v.assumables();
        (v, a)
    }

    fn inst(v: &Vocabulary, s: &str) -> Instantiation {
        Instantiation::from_literals(s.split_whitespace().map(|t| v.parse_literal(t).unwrap()))
            .unwrap()
    }

    #[test]
    fn primes_of_a_binary_clause() {
        let (v, a) = two();
        let models: BTreeSet<Instantiation> = Instantiations::new(a.as_slice(), &v)
            .filter(|m| {
                !(m.holds(v.parse_literal("okX").unwrap())
                    && m.holds(v.parse_literal("okY").unwrap()))
            })
            .collect();
        assert_eq!(models.len(), 3);
        let pis = prime_implicants(&models, &a, &v, DEFAULT_PRIME_CAP).unwrap();
        assert_eq!(pis, BTreeSet::from([inst(&v, "!okX"), inst(&v, "!okY")]));
        let pcs = prime_implicates(&models, &a, &v, DEFAULT_PRIME_CAP).unwrap();
        let clause = Clause::new([
            v.parse_literal("!okX").unwrap(),
            v.parse_literal("!okY").unwrap(),
        ]);
        assert_eq!(pcs, BTreeSet::from([clause]));
        assert_eq!(models_of_terms(&pis, &a, &v), models);
        assert_eq!(models_of_clauses(&pcs, &a, &v), models);
    }

    #[test]
    fn unsatisfiable_and_valid_sets() {
        let (v, a) = two();
        let none = BTreeSet::new();
        assert!(prime_implicants(&none, &a, &v, DEFAULT_PRIME_CAP)
            .unwrap()
            .is_empty());
        assert_eq!(
            prime_implicates(&none, &a, &v, DEFAULT_PRIME_CAP).unwrap(),
            BTreeSet::from([Clause::default()])
        );
        let all: BTreeSet<Instantiation> = Instantiations::new(a.as_slice(), &v).collect();
        assert_eq!(
            prime_implicants(&all, &a, &v, DEFAULT_PRIME_CAP).unwrap(),
            BTreeSet::from([Instantiation::empty()])
        );
        assert!(prime_implicates(&all, &a, &v, DEFAULT_PRIME_CAP)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn inconsistent_observation_has_no_diagnoses() {
        let text = "var A\nvar B\ncomponent B : A\nclause B : !A B |\n";
        let ssd = Ssd::parse(text).unwrap();
        let obs = ssd.parse_observation("A !B").unwrap();
        assert!(brute_diagnoses(&ssd, &obs, DEFAULT_ORACLE_CAP)
            .unwrap()
            .is_empty());
        let cf = CostFunction::cardinality(ssd.vocab(), ssd.assumables());
        assert!(brute_minimal(&ssd, &obs, &cf, DEFAULT_ORACLE_CAP)
            .unwrap()
            .is_none());
    }
}
