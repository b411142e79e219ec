mod common;

use std::collections::BTreeSet;

use common::*;
use ssdiag::compile::{build_tables, component_consequences};
use ssdiag::diagnose::{prune, Cost, CostFunction};
use ssdiag::generate::{inverter_chain, ripple_adder, AdderObservation};
use ssdiag::jointree::{skeleton_is_forest, Jointree};
use ssdiag::logic::{index_of, AssignmentEnv, Instantiation, Literal, VarSet, Vocabulary};
use ssdiag::nnf::{NnfGraph, NnfNode, DEFAULT_MODEL_CAP};
use ssdiag::oracle::{brute_diagnoses, brute_minimal, DEFAULT_ORACLE_CAP};
use ssdiag::pipeline::{compile_system, diagnose, Options};
use ssdiag::ssd::{Observation, Ssd, ValidationLevel, ViolationKind};

fn supplied_jointree(ssd: &Ssd) -> Options {
    Options {
        jointree: Some(Jointree::parse(THREE_GATE_JOINTREE, ssd.vocab()).unwrap()),
        pivot: Some(1),
        ..Options::default()
    }
}

/// Checks every entry of `name`'s table against `(index, expected models)`.
fn check_table(ssd: &Ssd, name: &str, expected: &[BTreeSet<Instantiation>]) {
    let vocab = ssd.vocab();
    let cd = ssd.component(vocab.resolve(name).unwrap()).unwrap();
    let table = component_consequences(cd, vocab, 1 << 10).unwrap();
    assert_eq!(table.len(), expected.len());
    for (i, want) in expected.iter().enumerate() {
        let got = table
            .entry_graph(i)
            .enumerate_models(ssd.assumables(), vocab, DEFAULT_MODEL_CAP)
            .unwrap();
        assert_eq!(&got, want, "{name} entry {i}");
    }
}

#[test]
fn observing_c_and_d_blames_one_of_two_gates() {
    let ssd = Ssd::parse(TWO_GATES).unwrap();
    let v = ssd.vocab();
    let obs = ssd.parse_observation("C D").unwrap();
    let compiled = compile_system(&ssd, &obs, &Options::default()).unwrap();
    let expected = models_where(ssd.assumables(), v, |m| {
        !(m.holds(lit(v, "okX")) && m.holds(lit(v, "okY")))
    });
    let models = compiled
        .consequence
        .enumerate_models(ssd.assumables(), v, DEFAULT_MODEL_CAP)
        .unwrap();
    assert_eq!(models, expected);
    let brute = brute_diagnoses(&ssd, &obs, DEFAULT_ORACLE_CAP).unwrap();
    assert_eq!(brute, insts(v, &["okX !okY", "!okX okY", "!okX !okY"]));
    let cf = CostFunction::cardinality(v, ssd.assumables());
    let min = brute_minimal(&ssd, &obs, &cf, DEFAULT_ORACLE_CAP).unwrap();
    assert_eq!(min.cost, Cost::Finite(1));
    assert_eq!(min.diagnoses, insts(v, &["okX !okY", "!okX okY"]));
}

fn lit(v: &Vocabulary, s: &str) -> Literal {
    v.parse_literal(s).unwrap()
}

#[test]
fn two_gate_component_consequences() {
    let ssd = Ssd::parse(TWO_GATES).unwrap();
    let v = ssd.vocab();
    let tables = build_tables(&ssd, 1 << 10).unwrap();
    let entry = |name: &str, ports: &str| {
        let t = &tables[&v.resolve(name).unwrap()];
        let node = t.lookup(&inst(v, ports), v).unwrap();
        let mut memo = vec![None; t.graph().len()];
        let mut g = NnfGraph::new();
        let r = g.import(t.graph(), node, &mut memo);
        g.set_root(r).unwrap();
        g.enumerate_models(ssd.assumables(), v, DEFAULT_MODEL_CAP)
            .unwrap()
    };
    let all = models_where(ssd.assumables(), v, |_| true);
    let not_x = models_where(ssd.assumables(), v, |m| m.holds(lit(v, "!okX")));
    let not_y = models_where(ssd.assumables(), v, |m| m.holds(lit(v, "!okY")));
    assert_eq!(entry("C", "A C"), not_x);
    assert_eq!(entry("C", "A !C"), all);
    assert_eq!(entry("D", "A B D"), all);
    assert_eq!(entry("D", "A !B D"), not_y);
}

#[test]
fn or_gate_table() {
    let text = "var A\nvar B\nvar D\nassumable okY\ncomponent D : A B\n\
                clause D : A B !D | !okY\nclause D : !A D | !okY\nclause D : !B D | !okY\n";
    let ssd = Ssd::parse(text).unwrap();
    let v = ssd.vocab();
    let healthy = insts(v, &["okY"]);
    let broken = insts(v, &["!okY"]);
    let all: BTreeSet<_> = healthy.union(&broken).cloned().collect();
    let want: Vec<_> = (0..8)
        .map(|i| {
            if [0, 5, 6, 7].contains(&i) {
                all.clone()
            } else {
                broken.clone()
            }
        })
        .collect();
    check_table(&ssd, "D", &want);
}

#[test]
fn three_gate_component_tables() {
    let ssd = Ssd::parse(THREE_GATES).unwrap();
    let v = ssd.vocab();
    let a = ssd.assumables();
    let all = models_where(a, v, |_| true);
    let without = |name: &str| models_where(a, v, |m| m.holds(lit(v, &format!("!{name}"))));
    let pick = |trues: &[usize], n: usize, name: &str| -> Vec<_> {
        (0..n)
            .map(|i| {
                if trues.contains(&i) {
                    all.clone()
                } else {
                    without(name)
                }
            })
            .collect()
    };
    check_table(&ssd, "C", &pick(&[1, 2], 4, "okX"));
    check_table(&ssd, "D", &pick(&[0, 5, 6, 7], 8, "okY"));
    check_table(&ssd, "E", &pick(&[0, 1, 2, 7], 8, "okZ"));
}

#[test]
fn three_gate_consequence_of_a_and_e() {
    let ssd = Ssd::parse(THREE_GATES).unwrap();
    let v = ssd.vocab();
    let obs = ssd.parse_observation("A E").unwrap();
    let opts = supplied_jointree(&ssd);
    let compiled = compile_system(&ssd, &obs, &opts).unwrap();
    let piece = &compiled.pieces[0];
    assert_eq!(piece.jointree.label(piece.pivot), 1);
    let asg = &piece.assignment;
    let clique = |n: &str| {
        piece
            .jointree
            .label(asg.clique_of(v.resolve(n).unwrap()).unwrap())
    };
    assert_eq!(["A", "B", "C", "D", "E"].map(clique), [1, 1, 2, 1, 3]);
    let g = &compiled.consequence;
    assert!(g.is_decomposable());
    let expected = models_where(ssd.assumables(), v, |m| {
        m.holds(lit(v, "!okX")) || m.holds(lit(v, "!okZ"))
    });
    assert_eq!(
        g.enumerate_models(ssd.assumables(), v, DEFAULT_MODEL_CAP)
            .unwrap(),
        expected
    );
    assert!(compiled.cache_bound_holds());
}

#[test]
fn three_gate_minimal_instantiations() {
    let ssd = Ssd::parse(THREE_GATES).unwrap();
    let v = ssd.vocab();
    let obs = ssd.parse_observation("A E").unwrap();
    let cf = CostFunction::cardinality(v, ssd.assumables());
    let (compiled, found) = diagnose(&ssd, &obs, &cf, &supplied_jointree(&ssd)).unwrap();
    let state = prune(&compiled.consequence, &cf).unwrap();
    assert_eq!(
        state.cost(compiled.consequence.root().unwrap()),
        Some(Cost::Finite(1))
    );
    assert_eq!(found.cost, Cost::Finite(1));
    assert_eq!(found.diagnoses, insts(v, &["okX okY !okZ", "!okX okY okZ"]));
    assert_eq!(found.to_text(v), "cost 1\n!okX okY okZ\nokX okY !okZ\n");
}

#[test]
fn stronger_observations_never_grow_the_consequence() {
    let ssd = Ssd::parse(THREE_GATES).unwrap();
    let opts = supplied_jointree(&ssd);
    let counts: Vec<(usize, usize)> = ["A E", "A B E", "A B C E", "A B C !D E"]
        .iter()
        .map(|o| {
            let obs = ssd.parse_observation(o).unwrap();
            let g = compile_system(&ssd, &obs, &opts).unwrap().consequence;
            (g.node_count(), g.edge_count())
        })
        .collect();
    for w in counts.windows(2) {
        assert!(w[1].0 <= w[0].0 && w[1].1 <= w[0].1, "{counts:?}");
    }
    assert!(counts[3].1 < counts[0].1, "{counts:?}");
}

#[test]
fn full_observation_leaves_single_child_or_nodes() {
    let ssd = Ssd::parse(THREE_GATES).unwrap();
    let obs = ssd.parse_observation("A B !C D E").unwrap();
    let compiled = compile_system(&ssd, &obs, &supplied_jointree(&ssd)).unwrap();
    let piece = &compiled.pieces[0];
    let g = &piece.compilation.graph;
    for &n in &piece.compilation.subtree_nodes {
        assert_eq!(g.children(n).len(), 1);
    }
    // one subtree call per edge plus one into the pivot, one clique call per clique
    assert_eq!(piece.compilation.subtree_nodes.len(), piece.jointree.len());
    assert_eq!(
        piece.compilation.clique_calls as usize,
        piece.jointree.len()
    );
}

#[test]
fn small_dnnf_graph() {
    let mut v = Vocabulary::new();
    use ssdiag::logic::{VarKind, Variable};
    let okx = v
        .declare(Variable::binary("okX", VarKind::Assumable))
        .unwrap();
    let okz = v
        .declare(Variable::binary("okZ", VarKind::Assumable))
        .unwrap();
    let mut g = NnfGraph::new();
    let n1 = g.new_literal_node(Literal::new(okz, 0));
    let n2 = g.new_or_node();
    let n3 = g.new_or_node();
    g.add_child(n3, n1).unwrap();
    g.add_child(n3, n2).unwrap();
    let n4 = g.new_literal_node(Literal::new(okx, 0));
    let n5 = g.new_and_node();
    g.add_child(n5, n3).unwrap();
    g.add_child(n5, n4).unwrap();
    let n6 = g.new_and_node();
    let n7 = g.new_and_node();
    g.add_child(n7, n3).unwrap();
    g.add_child(n7, n6).unwrap();
    let n8 = g.new_or_node();
    g.add_child(n8, n5).unwrap();
    g.add_child(n8, n7).unwrap();
    g.set_root(n8).unwrap();
    assert!(g.node(n2).is_false() && g.node(n6).is_true());
    assert!(matches!(g.node(n8), NnfNode::Or(_)));
    assert_eq!(g.node_count(), 8);
    assert_eq!(g.edge_count(), 8);
    assert!(g.is_decomposable());
    // (¬okX ∧ (¬okZ ∨ false)) ∨ ((¬okZ ∨ false) ∧ true) is ¬okZ
    let vars: VarSet = [okx, okz].into_iter().collect();
    let models = g.enumerate_models(&vars, &v, 16).unwrap();
    assert_eq!(models, insts(&v, &["okX !okZ", "!okX !okZ"]));
}

#[test]
fn index_and_generation() {
    let ssd = Ssd::parse(THREE_GATES).unwrap();
    let v = ssd.vocab();
    let l = inst(v, "A !B D");
    let mut env = AssignmentEnv::new(v);
    env.assert(&l).unwrap();
    assert!(env.is_instantiated(v.resolve("A").unwrap()));
    assert_eq!(env.value_of(v.resolve("B").unwrap()), Some(0));
    let abd = var_set(v, &["A", "B", "D"]);
    assert_eq!(env.index(abd.as_slice()).unwrap(), 5);
    assert_eq!(index_of(&l, abd.as_slice(), v).unwrap(), 5);
    let cde = var_set(v, &["C", "D", "E"]);
    let got: BTreeSet<_> = env
        .generate_instantiations(cde.as_slice())
        .into_iter()
        .collect();
    assert_eq!(got, insts(v, &["C E", "!C E", "C !E", "!C !E"]));
}

#[test]
fn mixed_radix_index() {
    let text = "var V1\nvar V2 0 1 2\nvar V3\n";
    let ssd = Ssd::parse(text).unwrap();
    let v = ssd.vocab();
    // the table lists V1 as the most significant digit
    let order = [
        v.resolve("V3").unwrap(),
        v.resolve("V2").unwrap(),
        v.resolve("V1").unwrap(),
    ];
    let mut row = 0;
    for v1 in 0..2 {
        for v2 in 0..3 {
            for v3 in 0..2 {
                let i = inst(v, &format!("V1={v1} V2={v2} V3={v3}"));
                assert_eq!(index_of(&i, &order, v).unwrap(), row);
                row += 1;
            }
        }
    }
    assert_eq!(row, 12);
}

#[test]
fn desharing_keeps_diagnoses() {
    let ssd = Ssd::parse(SHARED_PWR).unwrap();
    let v = ssd.vocab();
    assert!(skeleton_is_forest(&ssd));
    let report = ssd.validate(ValidationLevel::Full, 1 << 16).unwrap();
    assert!(report.has(ViolationKind::SharedAssumable));
    let fixed = ssd.deshare_assumables();
    assert!(fixed
        .validate(ValidationLevel::Full, 1 << 16)
        .unwrap()
        .is_valid());
    assert!(!skeleton_is_forest(&fixed));
    assert_eq!(fixed.deshare_assumables().to_text(), fixed.to_text());
    let pwr = fixed.vocab().resolve("Pwr'").unwrap();
    assert_eq!(fixed.parents(v.resolve("C").unwrap()).len(), 2);
    assert!(fixed.parents(v.resolve("D").unwrap()).contains(pwr));
    let cf = CostFunction::cardinality(v, ssd.assumables());
    for o in ["", "C D", "A C", "!A !C", "A B D", "!A C !D", "A B !C !D"] {
        let obs = ssd.parse_observation(o).unwrap();
        let (compiled, found) = diagnose(&ssd, &obs, &cf, &Options::default()).unwrap();
        let models = compiled
            .consequence
            .enumerate_models(ssd.assumables(), v, DEFAULT_MODEL_CAP)
            .unwrap();
        assert_eq!(
            models,
            brute_diagnoses(&ssd, &obs, DEFAULT_ORACLE_CAP).unwrap(),
            "{o}"
        );
        assert_eq!(
            found,
            brute_minimal(&ssd, &obs, &cf, DEFAULT_ORACLE_CAP).unwrap(),
            "{o}"
        );
    }
}

#[test]
fn cutting_arcs_at_a_and_e() {
    let ssd = Ssd::parse(THREE_GATES).unwrap();
    let v = ssd.vocab();
    assert!(!skeleton_is_forest(&ssd));
    let obs = ssd.parse_observation("!A !E").unwrap();
    let pieces = ssd.cut_arcs(&obs).unwrap();
    for p in &pieces {
        assert!(skeleton_is_forest(&p.ssd));
        let jt = Jointree::build(&p.ssd);
        assert!(jt.validate(&p.ssd).is_valid());
        for &(i, j) in jt.edges() {
            assert!(jt.sepset(i, j).len() <= 1);
        }
    }
    // D no longer depends on A
    let d = v.resolve("D").unwrap();
    let with_d = pieces
        .iter()
        .find(|p| p.ssd.component(d).is_some())
        .unwrap();
    assert!(!with_d.ssd.parents(d).contains(v.resolve("A").unwrap()));
    let cut = compile_system(
        &ssd,
        &obs,
        &Options {
            cut_arcs: true,
            ..Options::default()
        },
    )
    .unwrap();
    let uncut = compile_system(&ssd, &obs, &Options::default()).unwrap();
    assert!(cut.consequence.is_decomposable());
    assert!(cut
        .consequence
        .equivalent(&uncut.consequence, ssd.assumables(), v, DEFAULT_MODEL_CAP)
        .unwrap());
    let brute = brute_diagnoses(&ssd, &obs, DEFAULT_ORACLE_CAP).unwrap();
    assert_eq!(
        cut.consequence
            .enumerate_models(ssd.assumables(), v, DEFAULT_MODEL_CAP)
            .unwrap(),
        brute
    );
}

#[test]
fn adder_observations() {
    for (obs_kind, cost, count) in [
        (AdderObservation::FirstSumHigh, 1, 2),
        (AdderObservation::AllSumsHigh, 3, 8),
        (AdderObservation::AllLow, 0, 1),
    ] {
        let g = ripple_adder(3, obs_kind);
        let ssd = Ssd::parse(&g.ssd).unwrap();
        let obs = ssd.parse_observation(&g.observation).unwrap();
        let cf = CostFunction::cardinality(ssd.vocab(), ssd.assumables());
        let (_, found) = diagnose(&ssd, &obs, &cf, &Options::default()).unwrap();
        assert_eq!(found.cost, Cost::Finite(cost));
        assert_eq!(found.diagnoses.len(), count);
        if obs_kind == AdderObservation::FirstSumHigh {
            // one of the first adder's xor gates is broken
            assert_eq!(
                found
                    .diagnoses
                    .iter()
                    .map(|d| d.literals().iter().filter(|l| l.value == 0).count())
                    .sum::<usize>(),
                2
            );
            let v = ssd.vocab();
            for d in &found.diagnoses {
                assert!(d.holds(lit(v, "!okx0")) || d.holds(lit(v, "!oks0")));
            }
        }
    }
}

#[test]
fn inverter_chain_is_a_tree() {
    let g = inverter_chain(8);
    let ssd = Ssd::parse(&g.ssd).unwrap();
    assert!(skeleton_is_forest(&ssd));
    let jt = Jointree::build(&ssd);
    assert_eq!(jt.stats(&VarSet::new(), ssd.vocab()).width, 1);
    assert_eq!(jt.len(), 8);
    for &(i, j) in jt.edges() {
        assert_eq!(jt.sepset(i, j).len(), 1);
    }
    let compiled = compile_system(&ssd, &Observation::empty(), &Options::default()).unwrap();
    let v = ssd.vocab();
    let models = compiled
        .consequence
        .enumerate_models(ssd.assumables(), v, DEFAULT_MODEL_CAP)
        .unwrap();
    assert_eq!(models.len(), 256);
}
