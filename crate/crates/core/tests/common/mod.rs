#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ssdiag::diagnose::CostFunction;
use ssdiag::generate::{random_system, RandomParams};
use ssdiag::logic::{Instantiation, Instantiations, Literal, VarSet, Vocabulary};
use ssdiag::ssd::{Observation, Ssd};

/// An inverter `C` and an and-gate `D` sharing the input `A`.
pub const TWO_GATES: &str = "\
var A
var B
var C
var D
assumable okX
assumable okY
component C : A
clause C : !A !C | !okX
clause C : A C | !okX
component D : A B
clause D : !A !B D | !okY
clause D : A !D | !okY
clause D : B !D | !okY
";

/// `C = not A`, `D = A or B`, `E = C and D`.
pub const THREE_GATES: &str = "\
var A
var B
var C
var D
var E
assumable okX
assumable okY
assumable okZ
component C : A
clause C : !A !C | !okX
clause C : A C | !okX
component D : A B
clause D : A B !D | !okY
clause D : !A D | !okY
clause D : !B D | !okY
component E : C D
clause E : !C !D E | !okZ
clause E : C !E | !okZ
clause E : D !E | !okZ
";

/// The three-clique chain for [`THREE_GATES`] with its component placement.
pub const THREE_GATE_JOINTREE: &str = "\
clique 1 A B D
clique 2 A C D
clique 3 C D E
edge 1 2
edge 2 3
assign A 1
assign B 1
assign D 1
assign C 2
assign E 3
";

/// An inverter and an and-gate that both need the power supply `Pwr`.
pub const SHARED_PWR: &str = "\
var A
var B
var C
var D
assumable Pwr
assumable okX
assumable okY
component C : A
clause C : !A !C | !Pwr !okX
clause C : A C | !Pwr !okX
clause C : !C | Pwr
component D : A B
clause D : !A !B D | !Pwr !okY
clause D : A !D | !Pwr !okY
clause D : B !D | !Pwr !okY
clause D : !D | Pwr
";

pub fn inst(vocab: &Vocabulary, text: &str) -> Instantiation {
    Instantiation::from_literals(
        text.split_whitespace()
            .map(|t| vocab.parse_literal(t).unwrap()),
    )
    .unwrap()
}

pub fn insts(vocab: &Vocabulary, texts: &[&str]) -> BTreeSet<Instantiation> {
    texts.iter().map(|t| inst(vocab, t)).collect()
}

/// Instantiations of `vars` accepted by `keep`.
pub fn models_where(
    vars: &VarSet,
    vocab: &Vocabulary,
    keep: impl Fn(&Instantiation) -> bool,
) -> BTreeSet<Instantiation> {
    Instantiations::new(vars.as_slice(), vocab)
        .filter(|m| keep(m))
        .collect()
}

pub fn var_set(vocab: &Vocabulary, names: &[&str]) -> VarSet {
    names.iter().map(|n| vocab.resolve(n).unwrap()).collect()
}

/// The random systems of seeds `0..n` with their observations.
pub fn random_corpus(n: u64) -> Vec<(u64, Ssd, Observation)> {
    (0..n)
        .map(|seed| {
            let g = random_system(seed, RandomParams::default());
            let ssd = Ssd::parse(&g.ssd).unwrap();
            let obs = ssd.parse_observation(&g.observation).unwrap();
            (seed, ssd, obs)
        })
        .collect()
}

/// Ranks for every assumable: one random value is free, the others cost
/// up to 4.
pub fn random_kappa(seed: u64, ssd: &Ssd) -> CostFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let v = ssd.vocab();
    let mut text = String::new();
    for a in ssd.assumables().iter() {
        let free = rng.gen_range(0..v.arity(a)) as u32;
        for value in 0..v.arity(a) as u32 {
            let rank = if value == free {
                0
            } else {
                rng.gen_range(0..5)
            };
            text.push_str(&format!(
                "{} {rank}\n",
                v.literal_text(Literal::new(a, value))
            ));
        }
    }
    CostFunction::kappa(v, ssd.assumables(), &text).unwrap()
}
