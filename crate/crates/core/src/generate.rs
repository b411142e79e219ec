//! Deterministic circuit generators, written in the native system format.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::logic::{Literal, VarId, VarSet, Vocabulary};
use crate::nnf::{NnfGraph, NodeId};

/// A generated system with one observation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generated {
    pub ssd: String,
    pub observation: String,
}

fn lit(name: &str, value: bool) -> String {
    if value {
        name.to_string()
    } else {
        format!("!{name}")
    }
}

/// Clauses of a gate `out = f(ins)` that holds while `ok` is set.
fn gate(out: &mut String, output: &str, inputs: &[&str], ok: &str, f: impl Fn(&[bool]) -> bool) {
    writeln!(out, "component {output} : {}", inputs.join(" ")).unwrap();
    for row in 0..1u32 << inputs.len() {
        let bits: Vec<bool> = (0..inputs.len()).map(|i| row >> i & 1 == 1).collect();
        let mut ports: Vec<String> = inputs
            .iter()
            .zip(&bits)
            .map(|(name, &b)| lit(name, !b))
            .collect();
        ports.push(lit(output, f(&bits)));
        writeln!(out, "clause {output} : {} | !{ok}", ports.join(" ")).unwrap();
    }
}

/// Inverters `X1 .. Xn`, each negating its predecessor, fed by the root
/// `X0`. The observation is empty.
pub fn inverter_chain(n: usize) -> Generated {
    let mut s = String::new();
    for i in 0..=n {
        writeln!(s, "var X{i}").unwrap();
    }
    for i in 1..=n {
        writeln!(s, "assumable ok{i}").unwrap();
    }
    for i in 1..=n {
        let (prev, cur) = (format!("X{}", i - 1), format!("X{i}"));
        writeln!(s, "component {cur} : {prev}").unwrap();
        writeln!(s, "clause {cur} : !{prev} !{cur} | !ok{i}").unwrap();
        writeln!(s, "clause {cur} : {prev} {cur} | !ok{i}").unwrap();
    }
    Generated {
        ssd: s,
        observation: String::new(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdderObservation {
    /// Every bit low except the first sum bit.
    FirstSumHigh,
    /// Every sum bit high, everything else low.
    AllSumsHigh,
    /// Everything low, which is what a healthy adder does.
    AllLow,
}

/// An `n`-bit ripple-carry adder. Bit `i` adds `a{i}` and `b{i}` to the
/// carry `c{i}` through two xor gates (`x{i}`, `s{i}`), two and gates
/// (`y{i}`, `z{i}`) and an or gate producing `c{i+1}`; each gate has its own
/// health assumable `ok` followed by the gate's name. The observation fixes
/// the inputs, the sums and every carry.
pub fn ripple_adder(n: usize, obs: AdderObservation) -> Generated {
    let mut s = String::new();
    for i in 0..n {
        for v in ["a", "b", "c", "x", "y", "z", "s"] {
            writeln!(s, "var {v}{i}").unwrap();
        }
    }
    writeln!(s, "var c{n}").unwrap();
    for i in 0..n {
        for v in ["x", "y", "z", "s", "c"] {
            writeln!(s, "assumable ok{v}{i}").unwrap();
        }
    }
    let xor = |b: &[bool]| b[0] ^ b[1];
    let and = |b: &[bool]| b[0] && b[1];
    let or = |b: &[bool]| b[0] || b[1];
    for i in 0..n {
        let (a, b, c) = (format!("a{i}"), format!("b{i}"), format!("c{i}"));
        let (x, y, z, sum, carry) = (
            format!("x{i}"),
            format!("y{i}"),
            format!("z{i}"),
            format!("s{i}"),
            format!("c{}", i + 1),
        );
        gate(&mut s, &x, &[&a, &b], &format!("okx{i}"), xor);
        gate(&mut s, &sum, &[&x, &c], &format!("oks{i}"), xor);
        gate(&mut s, &y, &[&a, &b], &format!("oky{i}"), and);
        gate(&mut s, &z, &[&x, &c], &format!("okz{i}"), and);
        gate(&mut s, &carry, &[&y, &z], &format!("okc{i}"), or);
    }
    let mut o = Vec::new();
    for i in 0..n {
        o.push(lit(&format!("a{i}"), false));
        o.push(lit(&format!("b{i}"), false));
        o.push(lit(&format!("c{i}"), false));
        let high = match obs {
            AdderObservation::FirstSumHigh => i == 0,
            AdderObservation::AllSumsHigh => true,
            AdderObservation::AllLow => false,
        };
        o.push(lit(&format!("s{i}"), high));
    }
    o.push(lit(&format!("c{n}"), false));
    Generated {
        ssd: s,
        observation: o.join(" ") + "\n",
    }
}

/// Knobs for [`random_system`].
#[derive(Clone, Copy, Debug)]
pub struct RandomParams {
    pub max_nodes: usize,
    pub max_atoms: usize,
    pub max_fan_in: usize,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams {
            max_nodes: 6,
            max_atoms: 10,
            max_fan_in: 3,
        }
    }
}

enum Health {
    Hard,
    Ok(String),
    Pair(String, String),
    Modes(String),
}

/// A random circuit: nodes in topological order, each non-root a random
/// function of up to `max_fan_in` earlier nodes. Gates are healthy-or-free,
/// two-assumable, three-mode (ok, stuck at the first value, stuck at the
/// last), hard, or share another gate's assumable; some nodes are
/// three-valued. The observation is either a simulated run with random
/// faults or arbitrary values, on a random subset of nodes.
pub fn random_system(seed: u64, params: RandomParams) -> Generated {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=params.max_nodes.max(2));
    let mut budget = params.max_atoms.saturating_sub(n);
    let arity: Vec<usize> = (0..n)
        .map(|_| if rng.gen_bool(0.15) { 3 } else { 2 })
        .collect();
    let names: Vec<String> = (0..n).map(|i| format!("N{i}")).collect();
    let value_name = |node: usize, v: usize| -> String {
        if arity[node] == 2 {
            v.to_string()
        } else {
            ["lo", "mid", "hi"][v].to_string()
        }
    };
    let lit_text = |node: usize, v: usize| -> String {
        if arity[node] == 2 {
            lit(&names[node], v == 1)
        } else {
            format!("{}={}", names[node], value_name(node, v))
        }
    };
    // all values of `node` except `v`
    let not_text = |node: usize, v: usize| -> Vec<String> {
        (0..arity[node])
            .filter(|&w| w != v)
            .map(|w| lit_text(node, w))
            .collect()
    };

    let mut decls = String::new();
    for i in 0..n {
        if arity[i] == 2 {
            writeln!(decls, "var {}", names[i]).unwrap();
        } else {
            writeln!(decls, "var {} lo mid hi", names[i]).unwrap();
        }
    }
    let mut body = String::new();
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut functions: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut health: Vec<Option<Health>> = (0..n).map(|_| None).collect();
    let mut assumables: Vec<String> = Vec::new();
    let roots = rng.gen_range(1..=n.clamp(1, 2));
    for i in roots..n {
        let k = rng.gen_range(1..=params.max_fan_in.min(i));
        let mut ps: Vec<usize> = (0..i).collect();
        ps.shuffle(&mut rng);
        ps.truncate(k);
        ps.sort_unstable();
        let rows: usize = ps.iter().map(|&p| arity[p]).product();
        functions[i] = (0..rows).map(|_| rng.gen_range(0..arity[i])).collect();
        parents[i] = ps;
        let roll: f64 = rng.gen();
        let h = if roll < 0.1 {
            Health::Hard
        } else if roll < 0.2 && !assumables.is_empty() {
            Health::Ok(assumables.choose(&mut rng).unwrap().clone())
        } else if roll < 0.35 && budget >= 2 {
            budget -= 2;
            let (a, b) = (format!("ok{i}"), format!("pw{i}"));
            writeln!(decls, "assumable {a}").unwrap();
            writeln!(decls, "assumable {b}").unwrap();
            assumables.push(a.clone());
            assumables.push(b.clone());
            Health::Pair(a, b)
        } else if roll < 0.5 && budget >= 1 {
            budget -= 1;
            let m = format!("m{i}");
            writeln!(decls, "assumable {m} ok stuck_lo stuck_hi").unwrap();
            Health::Modes(m)
        } else if budget >= 1 {
            budget -= 1;
            let a = format!("ok{i}");
            writeln!(decls, "assumable {a}").unwrap();
            assumables.push(a.clone());
            Health::Ok(a)
        } else {
            Health::Hard
        };
        health[i] = Some(h);
    }
    for i in roots..n {
        let ps = &parents[i];
        let ptxt: Vec<&str> = ps.iter().map(|&p| names[p].as_str()).collect();
        writeln!(body, "component {} : {}", names[i], ptxt.join(" ")).unwrap();
        let h = health[i].as_ref().unwrap();
        let guard = match h {
            Health::Hard => String::new(),
            Health::Ok(a) => format!("!{a}"),
            Health::Pair(a, b) => format!("!{a} !{b}"),
            Health::Modes(m) => format!("m{i}=stuck_lo m{i}=stuck_hi").replace(&format!("m{i}"), m),
        };
        let mut row_values = vec![0usize; ps.len()];
        for (row, &f) in functions[i].iter().enumerate() {
            let mut r = row;
            for (k, &p) in ps.iter().enumerate() {
                row_values[k] = r % arity[p];
                r /= arity[p];
            }
            let mut port: Vec<String> = Vec::new();
            for (k, &p) in ps.iter().enumerate() {
                port.extend(not_text(p, row_values[k]));
            }
            port.push(lit_text(i, f));
            writeln!(body, "clause {} : {} | {guard}", names[i], port.join(" ")).unwrap();
        }
        if let Health::Modes(m) = h {
            let last = arity[i] - 1;
            writeln!(
                body,
                "clause {} : {} | {m}=ok {m}=stuck_hi",
                names[i],
                lit_text(i, 0)
            )
            .unwrap();
            writeln!(
                body,
                "clause {} : {} | {m}=ok {m}=stuck_lo",
                names[i],
                lit_text(i, last)
            )
            .unwrap();
        }
    }

    // observation
    let simulate = rng.gen_bool(0.5);
    let mut values = vec![0usize; n];
    for i in 0..n {
        values[i] = if i < roots || !simulate {
            rng.gen_range(0..arity[i])
        } else {
            let mut row = 0;
            let mut base = 1;
            for &p in &parents[i] {
                row += values[p] * base;
                base *= arity[p];
            }
            if rng.gen_bool(0.2) {
                rng.gen_range(0..arity[i])
            } else {
                functions[i][row]
            }
        };
    }
    let observed: Vec<String> = (0..n)
        .filter(|_| rng.gen_bool(0.5))
        .map(|i| lit_text(i, values[i]))
        .collect();
    Generated {
        ssd: decls + &body,
        observation: observed.join(" ") + "\n",
    }
}

/// A random decomposable graph over `vars`: and-nodes split their variables
/// into disjoint parts, or-nodes reuse them, and some nodes are shared.
pub fn random_dnnf(seed: u64, vars: &VarSet, vocab: &Vocabulary, depth: usize) -> NnfGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = NnfGraph::new();
    let mut pool: Vec<(Vec<VarId>, NodeId)> = Vec::new();
    let vs: Vec<VarId> = vars.iter().collect();
    let root = dnnf_node(&mut rng, &mut g, &mut pool, &vs, vocab, depth);
    g.set_root(root).expect("root exists");
    g
}

fn dnnf_node(
    rng: &mut ChaCha8Rng,
    g: &mut NnfGraph,
    pool: &mut Vec<(Vec<VarId>, NodeId)>,
    vars: &[VarId],
    vocab: &Vocabulary,
    depth: usize,
) -> NodeId {
    // reuse an earlier node over a subset of these variables
    if rng.gen_bool(0.2) {
        let fits: Vec<NodeId> = pool
            .iter()
            .filter(|(vs, _)| vs.iter().all(|v| vars.contains(v)))
            .map(|&(_, id)| id)
            .collect();
        if let Some(&id) = fits.choose(rng) {
            return id;
        }
    }
    let leaf = depth == 0 || vars.is_empty() || rng.gen_bool(0.2);
    let id = if leaf {
        match vars.choose(rng) {
            Some(&v) if rng.gen_bool(0.9) => {
                g.new_literal_node(Literal::new(v, rng.gen_range(0..vocab.arity(v)) as u32))
            }
            _ => {
                if rng.gen_bool(0.5) {
                    g.new_and_node()
                } else {
                    g.new_or_node()
                }
            }
        }
    } else if rng.gen_bool(0.5) {
        let parts = rng.gen_range(2..=3);
        let mut buckets: Vec<Vec<VarId>> = vec![Vec::new(); parts];
        for &v in vars {
            buckets[rng.gen_range(0..parts)].push(v);
        }
        let and = g.new_and_node();
        for b in buckets {
            let c = dnnf_node(rng, g, pool, &b, vocab, depth - 1);
            g.add_child(and, c).expect("fresh parent");
        }
        and
    } else {
        let or = g.new_or_node();
        for _ in 0..rng.gen_range(1..=3) {
            let c = dnnf_node(rng, g, pool, vars, vocab, depth - 1);
            g.add_child(or, c).expect("fresh parent");
        }
        or
    };
    pool.push((vars.to_vec(), id));
    id
}
