//! Multivalued propositional substrate.
//!
//! Variables carry an ordered domain of value names; internally a value is its
//! position in that domain. Binary atoms are the special case of a two-value
//! domain, so there is a single code path for both. The global variable order
//! is the declaration order in the [`Vocabulary`], and every ordered structure
//! (variable sets, instantiations, clauses, indices) follows it.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Position of a variable in the global order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(u32);

impl VarId {
    pub fn new(index: usize) -> Self {
        VarId(u32::try_from(index).expect("too many variables"))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VarKind {
    Assumable,
    NonAssumable,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    name: String,
    domain: Vec<String>,
    kind: VarKind,
    default_domain: bool,
}

impl Variable {
    /// Creates a variable. `None` gives the default binary domain `0 1`.
    pub fn new(
        name: impl Into<String>,
        domain: Option<Vec<String>>,
        kind: VarKind,
    ) -> Result<Self> {
        let name = name.into();
        let default_domain = domain.is_none();
        let domain = domain.unwrap_or_else(|| vec!["0".to_string(), "1".to_string()]);
        if domain.len() < 2 {
            return Err(Error::InvalidDomain {
                var: name,
                reason: "a domain needs at least two values".into(),
            });
        }
        for (i, v) in domain.iter().enumerate() {
            if domain[..i].contains(v) {
                return Err(Error::InvalidDomain {
                    var: name,
                    reason: format!("value `{v}` listed twice"),
                });
            }
        }
        Ok(Variable {
            name,
            domain,
            kind,
            default_domain,
        })
    }

    pub fn binary(name: impl Into<String>, kind: VarKind) -> Self {
        Self::new(name, None, kind).expect("default domain is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &[String] {
        &self.domain
    }

    pub fn arity(&self) -> usize {
        self.domain.len()
    }

    pub fn kind(&self) -> VarKind {
        self.kind
    }

    pub fn is_assumable(&self) -> bool {
        self.kind == VarKind::Assumable
    }

    pub fn is_binary(&self) -> bool {
        self.domain.len() == 2
    }

    pub fn has_default_domain(&self) -> bool {
        self.default_domain
    }

    /// The conventional healthy value of an assumable: `1` for the default
    /// binary domain, otherwise the first listed value.
    pub fn healthy_value(&self) -> u32 {
        if self.default_domain {
            1
        } else {
            0
        }
    }

    pub fn value_index(&self, value: &str) -> Option<u32> {
        self.domain
            .iter()
            .position(|v| v == value)
            .map(|i| i as u32)
    }
}

/// The declared variables of a system, in global order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocabulary {
    vars: Vec<Variable>,
    by_name: HashMap<String, VarId>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(&mut self, var: Variable) -> Result<VarId> {
        if self.by_name.contains_key(var.name()) {
            return Err(Error::DuplicateVariable(var.name().to_string()));
        }
        let id = VarId::new(self.vars.len());
        self.by_name.insert(var.name().to_string(), id);
        self.vars.push(var);
        Ok(id)
    }

    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn resolve(&self, name: &str) -> Result<VarId> {
        self.lookup(name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id.index()]
    }

    pub fn name(&self, id: VarId) -> &str {
        self.vars[id.index()].name()
    }

    pub fn arity(&self, id: VarId) -> usize {
        self.vars[id.index()].arity()
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = VarId> + '_ {
        (0..self.vars.len()).map(VarId::new)
    }

    pub fn assumables(&self) -> VarSet {
        self.ids().filter(|&v| self.var(v).is_assumable()).collect()
    }

    pub fn non_assumables(&self) -> VarSet {
        self.ids()
            .filter(|&v| !self.var(v).is_assumable())
            .collect()
    }

    /// Number of instantiations of `vars`.
    pub fn domain_product<'a>(&self, vars: impl IntoIterator<Item = &'a VarId>) -> u128 {
        vars.into_iter()
            .map(|&v| self.arity(v) as u128)
            .fold(1u128, |acc, a| acc.saturating_mul(a))
    }

    /// Parses `name`, `!name` (binary only) or `name=value`.
    pub fn parse_literal(&self, token: &str) -> Result<Literal> {
        if let Some((name, value)) = token.split_once('=') {
            let var = self.resolve(name)?;
            let idx = self
                .var(var)
                .value_index(value)
                .ok_or_else(|| Error::UnknownValue {
                    var: name.to_string(),
                    value: value.to_string(),
                })?;
            return Ok(Literal::new(var, idx));
        }
        let (name, value) = match token.strip_prefix('!') {
            Some(rest) => (rest, 0),
            None => (token, 1),
        };
        let var = self.resolve(name)?;
        if !self.var(var).is_binary() {
            return Err(Error::NotBinary(name.to_string()));
        }
        Ok(Literal::new(var, value))
    }

    /// Inverse of [`Vocabulary::parse_literal`]. Default-domain binaries use
    /// the `name` / `!name` shorthand.
    pub fn literal_text(&self, lit: Literal) -> String {
        let var = self.var(lit.var);
        if var.has_default_domain() {
            if lit.value == 1 {
                var.name().to_string()
            } else {
                format!("!{}", var.name())
            }
        } else {
            format!("{}={}", var.name(), var.domain()[lit.value as usize])
        }
    }

    pub fn instantiation_text(&self, inst: &Instantiation) -> String {
        inst.literals()
            .iter()
            .map(|&l| self.literal_text(l))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn clause_text(&self, clause: &Clause) -> String {
        clause
            .literals()
            .iter()
            .map(|&l| self.literal_text(l))
            .collect::<Vec<_>>()
            .join(" | ")
    }
}

/// A `(variable, value)` pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub var: VarId,
    pub value: u32,
}

impl Literal {
    pub fn new(var: VarId, value: u32) -> Self {
        Literal { var, value }
    }
}

/// An ordered set of variables.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarSet(Vec<VarId>);

impl VarSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(v: VarId) -> Self {
        VarSet(vec![v])
    }

    pub fn as_slice(&self) -> &[VarId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = VarId> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, v: VarId) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn insert(&mut self, v: VarId) -> bool {
        match self.0.binary_search(&v) {
            Ok(_) => false,
            Err(pos) => {
                self.0.insert(pos, v);
                true
            }
        }
    }

    pub fn remove(&mut self, v: VarId) -> bool {
        match self.0.binary_search(&v) {
            Ok(pos) => {
                self.0.remove(pos);
                true
            }
            Err(_) => false,
        }
    }

    pub fn union(&self, other: &VarSet) -> VarSet {
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => {
                    out.push(self.0[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(other.0[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(self.0[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        VarSet(out)
    }

    pub fn intersection(&self, other: &VarSet) -> VarSet {
        VarSet(
            self.0
                .iter()
                .copied()
                .filter(|&v| other.contains(v))
                .collect(),
        )
    }

    pub fn difference(&self, other: &VarSet) -> VarSet {
        VarSet(
            self.0
                .iter()
                .copied()
                .filter(|&v| !other.contains(v))
                .collect(),
        )
    }

    pub fn is_subset(&self, other: &VarSet) -> bool {
        self.0.iter().all(|&v| other.contains(v))
    }

    pub fn is_disjoint(&self, other: &VarSet) -> bool {
        let (small, big) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small.0.iter().all(|&v| !big.contains(v))
    }
}

impl FromIterator<VarId> for VarSet {
    fn from_iter<I: IntoIterator<Item = VarId>>(iter: I) -> Self {
        let mut v: Vec<VarId> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        VarSet(v)
    }
}

impl<'a> IntoIterator for &'a VarSet {
    type Item = &'a VarId;
    type IntoIter = std::slice::Iter<'a, VarId>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// A consistent conjunction of literals, at most one per variable, ordered by
/// the global variable order.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Instantiation(Vec<Literal>);

impl Instantiation {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds an instantiation; repeated identical literals collapse, two
    /// values for one variable are a [`Error::Conflict`].
    pub fn from_literals(
        lits: impl IntoIterator<Item = Literal>,
    ) -> std::result::Result<Self, VarId> {
        let mut v: Vec<Literal> = lits.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        for w in v.windows(2) {
            if w[0].var == w[1].var {
                return Err(w[0].var);
            }
        }
        Ok(Instantiation(v))
    }

    pub fn literals(&self) -> &[Literal] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, var: VarId) -> Option<u32> {
        self.0
            .binary_search_by_key(&var, |l| l.var)
            .ok()
            .map(|i| self.0[i].value)
    }

    pub fn vars(&self) -> VarSet {
        VarSet(self.0.iter().map(|l| l.var).collect())
    }

    pub fn holds(&self, lit: Literal) -> bool {
        self.get(lit.var) == Some(lit.value)
    }

    /// Conjunction of the literals whose variable is in `vars`.
    pub fn project(&self, vars: &VarSet) -> Instantiation {
        Instantiation(
            self.0
                .iter()
                .copied()
                .filter(|l| vars.contains(l.var))
                .collect(),
        )
    }

    /// Union of two instantiations, `None` if they disagree on a variable.
    pub fn merge(&self, other: &Instantiation) -> Option<Instantiation> {
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            let (a, b) = (self.0[i], other.0[j]);
            match a.var.cmp(&b.var) {
                std::cmp::Ordering::Less => {
                    out.push(a);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    if a.value != b.value {
                        return None;
                    }
                    out.push(a);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Some(Instantiation(out))
    }

    pub fn is_consistent_with(&self, other: &Instantiation) -> bool {
        self.0
            .iter()
            .all(|l| other.get(l.var).is_none_or(|v| v == l.value))
    }

    pub fn with(&self, lit: Literal) -> Option<Instantiation> {
        self.merge(&Instantiation(vec![lit]))
    }
}

/// A disjunction of literals. Several values of one variable may appear,
/// which is how the negation of a multivalued literal is written.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Clause(Vec<Literal>);

impl Clause {
    pub fn new(lits: impl IntoIterator<Item = Literal>) -> Self {
        let mut v: Vec<Literal> = lits.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Clause(v)
    }

    /// The clause `¬(var = value)`: every other value of `var`.
    pub fn negation(var: VarId, value: u32, arity: usize) -> Self {
        Clause(
            (0..arity as u32)
                .filter(|&w| w != value)
                .map(|w| Literal::new(var, w))
                .collect(),
        )
    }

    pub fn literals(&self) -> &[Literal] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn vars(&self) -> VarSet {
        self.0.iter().map(|l| l.var).collect()
    }

    /// Disjunction of the literals whose variable is in `vars`.
    pub fn project(&self, vars: &VarSet) -> Clause {
        Clause(
            self.0
                .iter()
                .copied()
                .filter(|l| vars.contains(l.var))
                .collect(),
        )
    }

    pub fn satisfied_by(&self, inst: &Instantiation) -> bool {
        self.0.iter().any(|&l| inst.holds(l))
    }

    /// True when every literal's variable is assigned by `inst` to some other
    /// value. The empty clause is falsified by everything.
    pub fn falsified_by(&self, inst: &Instantiation) -> bool {
        self.0
            .iter()
            .all(|l| matches!(inst.get(l.var), Some(v) if v != l.value))
    }
}

/// Mixed-radix index of the values `value_of` gives to `vars`; the first
/// variable is the least significant digit. For binary variables this is
/// `VALUE_OF(HEAD) + 2 * INDEX(REST)`.
pub fn index_with(
    vars: &[VarId],
    vocab: &Vocabulary,
    mut value_of: impl FnMut(VarId) -> Option<u32>,
) -> Result<usize> {
    let mut index = 0usize;
    let mut base = 1usize;
    for &v in vars {
        let value = value_of(v).ok_or_else(|| Error::Unassigned(vocab.name(v).to_string()))?;
        index += value as usize * base;
        base *= vocab.arity(v);
    }
    Ok(index)
}

/// Index of `inst` restricted to `vars`.
pub fn index_of(inst: &Instantiation, vars: &[VarId], vocab: &Vocabulary) -> Result<usize> {
    index_with(vars, vocab, |v| inst.get(v))
}

/// Enumerates every instantiation of a variable list in index order
/// (the first variable varies fastest).
#[derive(Clone, Debug)]
pub struct Instantiations {
    vars: Vec<VarId>,
    arities: Vec<u32>,
    digits: Vec<u32>,
    done: bool,
}

impl Instantiations {
    pub fn new(vars: &[VarId], vocab: &Vocabulary) -> Self {
        Instantiations {
            vars: vars.to_vec(),
            arities: vars.iter().map(|&v| vocab.arity(v) as u32).collect(),
            digits: vec![0; vars.len()],
            done: false,
        }
    }
}

impl Iterator for Instantiations {
    type Item = Instantiation;

    fn next(&mut self) -> Option<Instantiation> {
        if self.done {
            return None;
        }
        let mut lits: Vec<Literal> = self
            .vars
            .iter()
            .zip(&self.digits)
            .map(|(&v, &d)| Literal::new(v, d))
            .collect();
        lits.sort_unstable();
        let item = Instantiation(lits);
        // advance the odometer
        let mut k = 0;
        loop {
            if k == self.digits.len() {
                self.done = true;
                break;
            }
            self.digits[k] += 1;
            if self.digits[k] < self.arities[k] {
                break;
            }
            self.digits[k] = 0;
            k += 1;
        }
        Some(item)
    }
}

/// Current variable assignment during compilation. Assertions are undone by
/// retracting the same instantiation.
#[derive(Clone, Debug)]
pub struct AssignmentEnv<'v> {
    vocab: &'v Vocabulary,
    values: Vec<Option<u32>>,
}

impl<'v> AssignmentEnv<'v> {
    pub fn new(vocab: &'v Vocabulary) -> Self {
        AssignmentEnv {
            vocab,
            values: vec![None; vocab.len()],
        }
    }

    pub fn vocab(&self) -> &'v Vocabulary {
        self.vocab
    }

    pub fn value_of(&self, var: VarId) -> Option<u32> {
        self.values[var.index()]
    }

    pub fn is_instantiated(&self, var: VarId) -> bool {
        self.values[var.index()].is_some()
    }

    /// Asserts every literal of `inst`. Fails, leaving the environment
    /// untouched, if any of its variables is already assigned.
    pub fn assert(&mut self, inst: &Instantiation) -> Result<()> {
        for l in inst.literals() {
            match self.values[l.var.index()] {
                None => {}
                Some(v) if v == l.value => {
                    return Err(Error::AlreadyAssigned(self.vocab.name(l.var).to_string()))
                }
                Some(_) => return Err(Error::Conflict(self.vocab.name(l.var).to_string())),
            }
        }
        for l in inst.literals() {
            self.values[l.var.index()] = Some(l.value);
        }
        Ok(())
    }

    /// Removes exactly the literals of `inst`. Fails, leaving the environment
    /// untouched, if one of them is not currently asserted.
    pub fn retract(&mut self, inst: &Instantiation) -> Result<()> {
        for l in inst.literals() {
            if self.values[l.var.index()] != Some(l.value) {
                return Err(Error::NotAsserted(self.vocab.name(l.var).to_string()));
            }
        }
        for l in inst.literals() {
            self.values[l.var.index()] = None;
        }
        Ok(())
    }

    pub fn index(&self, vars: &[VarId]) -> Result<usize> {
        index_with(vars, self.vocab, |v| self.value_of(v))
    }

    /// Every instantiation of the unassigned variables in `vars`, in index
    /// order. When all are assigned this is the single empty instantiation.
    pub fn generate_instantiations(&self, vars: &[VarId]) -> Vec<Instantiation> {
        let free: Vec<VarId> = vars
            .iter()
            .copied()
            .filter(|&v| !self.is_instantiated(v))
            .collect();
        Instantiations::new(&free, self.vocab).collect()
    }

    pub fn current(&self) -> Instantiation {
        Instantiation(
            self.values
                .iter()
                .enumerate()
                .filter_map(|(i, v)| v.map(|v| Literal::new(VarId::new(i), v)))
                .collect(),
        )
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}
