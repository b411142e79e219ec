use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use super::{ComponentDescription, Observation, SplitClause, Ssd};
use crate::error::{Error, Result};
use crate::logic::{Clause, Instantiation, Literal, VarId, VarKind, VarSet, Variable, Vocabulary};

fn tokens(raw: &str) -> Vec<String> {
    let body = raw.split('#').next().unwrap_or("");
    body.replace(':', " : ")
        .replace('|', " | ")
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

fn node(vocab: &Vocabulary, name: &str, line: usize) -> Result<VarId> {
    let v = vocab
        .lookup(name)
        .ok_or_else(|| Error::parse(line, format!("unknown variable `{name}`")))?;
    if vocab.var(v).is_assumable() {
        return Err(Error::parse(
            line,
            format!("`{name}` is an assumable, expected a node"),
        ));
    }
    Ok(v)
}

fn literal(vocab: &Vocabulary, tok: &str, line: usize) -> Result<Literal> {
    vocab
        .parse_literal(tok)
        .map_err(|e| Error::parse(line, e.to_string()))
}

struct Pending {
    inputs: VarSet,
    clauses: Vec<SplitClause>,
}

pub(super) fn parse_ssd(text: &str) -> Result<Ssd> {
    let mut vocab = Vocabulary::new();
    let mut comps: BTreeMap<VarId, Pending> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let toks = tokens(raw);
        let Some(head) = toks.first() else { continue };
        match head.as_str() {
            kw @ ("var" | "assumable") => {
                let name = toks
                    .get(1)
                    .ok_or_else(|| Error::parse(line, format!("`{kw}` needs a name")))?;
                if name == ":" || name == "|" || name.contains('=') || name.starts_with('!') {
                    return Err(Error::parse(
                        line,
                        format!("invalid variable name `{name}`"),
                    ));
                }
                let domain = (toks.len() > 2).then(|| toks[2..].to_vec());
                let kind = if kw == "var" {
                    VarKind::NonAssumable
                } else {
                    VarKind::Assumable
                };
                let var = Variable::new(name.clone(), domain, kind)
                    .map_err(|e| Error::parse(line, e.to_string()))?;
                vocab
                    .declare(var)
                    .map_err(|e| Error::parse(line, e.to_string()))?;
            }
            "component" => {
                let name = toks
                    .get(1)
                    .ok_or_else(|| Error::parse(line, "`component` needs an output"))?;
                let out = node(&vocab, name, line)?;
                let mut inputs = VarSet::new();
                match toks.get(2).map(String::as_str) {
                    None => {}
                    Some(":") => {
                        for p in &toks[3..] {
                            let v = node(&vocab, p, line)?;
                            if v == out {
                                return Err(Error::parse(
                                    line,
                                    format!("`{name}` lists itself as a parent"),
                                ));
                            }
                            inputs.insert(v);
                        }
                    }
                    Some(t) => {
                        return Err(Error::parse(line, format!("expected `:`, found `{t}`")))
                    }
                }
                if comps.contains_key(&out) {
                    return Err(Error::parse(line, format!("duplicate component `{name}`")));
                }
                comps.insert(
                    out,
                    Pending {
                        inputs,
                        clauses: Vec::new(),
                    },
                );
            }
            "clause" => {
                let name = toks
                    .get(1)
                    .ok_or_else(|| Error::parse(line, "`clause` needs a component"))?;
                let out = node(&vocab, name, line)?;
                if toks.get(2).map(String::as_str) != Some(":") {
                    return Err(Error::parse(
                        line,
                        "expected `clause <output> : <ports> | <assumables>`",
                    ));
                }
                let rest = &toks[3..];
                let bars: Vec<usize> = (0..rest.len()).filter(|&k| rest[k] == "|").collect();
                if bars.len() != 1 {
                    return Err(Error::parse(line, "a clause needs exactly one `|`"));
                }
                let comp = comps.get_mut(&out).ok_or_else(|| {
                    Error::parse(line, format!("clause for undeclared component `{name}`"))
                })?;
                let mut ports = Vec::new();
                for t in &rest[..bars[0]] {
                    let l = literal(&vocab, t, line)?;
                    if vocab.var(l.var).is_assumable() {
                        return Err(Error::parse(
                            line,
                            format!("assumable literal `{t}` left of `|`"),
                        ));
                    }
                    if l.var != out && !comp.inputs.contains(l.var) {
                        return Err(Error::parse(
                            line,
                            format!(
                                "`{}` is not a port of component `{name}`",
                                vocab.name(l.var)
                            ),
                        ));
                    }
                    ports.push(l);
                }
                let mut assumables = Vec::new();
                for t in &rest[bars[0] + 1..] {
                    let l = literal(&vocab, t, line)?;
                    if !vocab.var(l.var).is_assumable() {
                        return Err(Error::parse(
                            line,
                            format!("non-assumable literal `{t}` right of `|`"),
                        ));
                    }
                    assumables.push(l);
                }
                comp.clauses.push(SplitClause::new(
                    Clause::new(ports),
                    Clause::new(assumables),
                ));
            }
            other => return Err(Error::parse(line, format!("unknown keyword `{other}`"))),
        }
    }
    let components = comps
        .into_iter()
        .map(|(out, p)| ComponentDescription::new(out, p.inputs, p.clauses))
        .collect();
    Ssd::new(Arc::new(vocab), components)
}

pub(super) fn parse_observation(text: &str, ssd: &Ssd) -> Result<Observation> {
    let vocab = ssd.vocab();
    let nodes = ssd.nodes();
    let mut lits: Vec<Literal> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        for t in tokens(raw) {
            let l = literal(vocab, &t, line)?;
            if vocab.var(l.var).is_assumable() {
                return Err(Error::parse(
                    line,
                    format!("observation mentions assumable `{t}`"),
                ));
            }
            if !nodes.contains(l.var) {
                return Err(Error::parse(
                    line,
                    format!("`{t}` is not a node of this system"),
                ));
            }
            if lits.iter().any(|o| o.var == l.var && o.value != l.value) {
                return Err(Error::parse(
                    line,
                    format!("conflicting values for `{}`", vocab.name(l.var)),
                ));
            }
            lits.push(l);
        }
    }
    let inst = Instantiation::from_literals(lits).expect("conflicts rejected above");
    Observation::new(inst, ssd)
}

fn declaration(out: &mut String, var: &Variable) {
    let kw = if var.is_assumable() {
        "assumable"
    } else {
        "var"
    };
    write!(out, "{kw} {}", var.name()).unwrap();
    if !var.has_default_domain() {
        for v in var.domain() {
            write!(out, " {v}").unwrap();
        }
    }
    out.push('\n');
}

pub(super) fn write_ssd(ssd: &Ssd) -> String {
    let vocab = ssd.vocab();
    let nodes = ssd.nodes();
    let mut out = String::new();
    for v in vocab.ids() {
        if nodes.contains(v) || ssd.assumables().contains(v) {
            declaration(&mut out, vocab.var(v));
        }
    }
    let lits = |c: &Clause| {
        c.literals()
            .iter()
            .map(|&l| vocab.literal_text(l))
            .collect::<Vec<_>>()
            .join(" ")
    };
    for cd in ssd.components() {
        if cd.inputs.is_empty() && cd.clauses.is_empty() {
            continue;
        }
        write!(out, "component {}", vocab.name(cd.output)).unwrap();
        if !cd.inputs.is_empty() {
            out.push_str(" :");
            for p in cd.inputs.iter() {
                write!(out, " {}", vocab.name(p)).unwrap();
            }
        }
        out.push('\n');
        for c in &cd.clauses {
            let p = lits(&c.ports);
            let a = lits(&c.assumables);
            let mut line = format!("clause {} :", vocab.name(cd.output));
            if !p.is_empty() {
                write!(line, " {p}").unwrap();
            }
            line.push_str(" |");
            if !a.is_empty() {
                write!(line, " {a}").unwrap();
            }
            out.push_str(&line);
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn syntax_errors_have_lines() {
        let cases = [
            ("var A\nvar A\n", 2),
            ("var A\ncomponent B\n", 2),
            ("var A\nassumable ok\ncomponent A\ncomponent A\n", 4),
            ("var A\nclause A : A |\n", 2),
            ("var A\nvar B\ncomponent A\nclause A : B |\n", 4),
            ("var A\nassumable ok\ncomponent A\nclause A : ok |\n", 4),
            ("var A\nassumable ok\ncomponent A\nclause A : A | A\n", 4),
            ("var A\ncomponent A\nclause A : A\n", 3),
            ("var A x\n", 1),
            ("frobnicate\n", 1),
            ("var A\nassumable ok\ncomponent ok\n", 3),
        ];
        for (text, line) in cases {
            match parse_ssd(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text:?} gave {other:?}"),
            }
        }
    }

    #[test]
    fn cycles_rejected() {
        let text = "var A\nvar B\ncomponent A : B\ncomponent B : A\n";
        assert!(matches!(parse_ssd(text), Err(Error::Invalid(m)) if m.contains("cycle")));
    }

    #[test]
    fn text_round_trip() {
        let text = "\
var A
var M lo mid hi
assumable okM ok stuck
assumable okN
component M : A
clause M : !A M=lo | okM=stuck
clause M : A | !okN
";
        let ssd = parse_ssd(text).unwrap();
        let again = parse_ssd(&write_ssd(&ssd)).unwrap();
        assert_eq!(ssd, again);
        assert_eq!(write_ssd(&again), write_ssd(&ssd));
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# header\n\nvar A # input\nvar B\ncomponent B: A\nclause B: A B|\n";
        let ssd = parse_ssd(text).unwrap();
        assert_eq!(ssd.nodes().len(), 2);
    }
}
