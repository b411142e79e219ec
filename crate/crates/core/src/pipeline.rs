//! End-to-end runs: from a system and an observation to a compiled
//! consequence, its minimal diagnoses, and cross-checks against the oracle.

use std::collections::BTreeMap;

use crate::compile::{build_tables, system_consequence, Compilation, DEFAULT_TABLE_CAP};
use crate::diagnose::{self, CostFunction, Diagnoses};
use crate::error::{Error, Result};
use crate::jointree::{ComponentAssignment, Jointree, JointreeFile};
use crate::logic::VarId;
use crate::nnf::{NnfGraph, DEFAULT_MODEL_CAP};
use crate::oracle;
use crate::ssd::{Observation, Ssd};

#[derive(Clone, Debug)]
pub struct Options {
    /// Jointree and pinned assignments to use instead of building one.
    pub jointree: Option<JointreeFile>,
    /// Label of the pivot clique; defaults to the first largest clique.
    pub pivot: Option<usize>,
    pub cut_arcs: bool,
    pub simplify: bool,
    pub table_cap: u128,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            jointree: None,
            pivot: None,
            cut_arcs: false,
            simplify: false,
            table_cap: DEFAULT_TABLE_CAP,
        }
    }
}

/// Compilation of one connected piece of the system.
#[derive(Clone, Debug)]
pub struct PieceRun {
    pub ssd: Ssd,
    pub observation: Observation,
    pub jointree: Jointree,
    pub assignment: ComponentAssignment,
    pub pivot: usize,
    pub compilation: Compilation,
}

#[derive(Clone, Debug)]
pub struct CompiledSystem {
    /// The system actually compiled, after desharing assumables.
    pub ssd: Ssd,
    pub pieces: Vec<PieceRun>,
    pub consequence: NnfGraph,
}

impl CompiledSystem {
    pub fn cache_bound_holds(&self) -> bool {
        self.pieces
            .iter()
            .all(|p| p.compilation.cache_bound_holds())
    }
}

/// Compiles the consequence of `obs`. Shared assumables are removed first;
/// with `cut_arcs` each connected piece is compiled on its own and the
/// results are conjoined.
pub fn compile_system(ssd: &Ssd, obs: &Observation, opts: &Options) -> Result<CompiledSystem> {
    let ssd = ssd.deshare_assumables();
    let obs = Observation::new(obs.instantiation().clone(), &ssd)?;
    let parts = if opts.cut_arcs {
        if opts.jointree.is_some() || opts.pivot.is_some() {
            return Err(Error::Invalid(
                "a jointree or pivot cannot be combined with arc cutting".into(),
            ));
        }
        ssd.cut_arcs(&obs)?
    } else {
        vec![crate::ssd::Piece {
            ssd: ssd.clone(),
            observation: obs.clone(),
        }]
    };
    let mut pieces = Vec::with_capacity(parts.len());
    for part in parts {
        let (jointree, fixed) = match &opts.jointree {
            Some(f) => (f.jointree.clone(), f.assignment.clone()),
            None => (Jointree::build(&part.ssd), BTreeMap::<VarId, usize>::new()),
        };
        let report = jointree.validate(&part.ssd);
        if !report.is_valid() {
            let msgs: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
            return Err(Error::InvalidJointree(msgs.join("; ")));
        }
        let assignment = jointree.assign_with(&part.ssd, &fixed)?;
        let pivot = match opts.pivot {
            Some(label) => jointree
                .index_of_label(label)
                .ok_or_else(|| Error::InvalidJointree(format!("no clique {label} to pivot on")))?,
            None => jointree.default_pivot(),
        };
        let tables = build_tables(&part.ssd, opts.table_cap)?;
        let compilation = system_consequence(
            &part.ssd,
            &jointree,
            &assignment,
            &tables,
            &part.observation,
            pivot,
        )?;
        pieces.push(PieceRun {
            ssd: part.ssd,
            observation: part.observation,
            jointree,
            assignment,
            pivot,
            compilation,
        });
    }
    let mut consequence = if pieces.len() == 1 {
        pieces[0].compilation.graph.clone()
    } else {
        let graphs: Vec<NnfGraph> = pieces.iter().map(|p| p.compilation.graph.clone()).collect();
        NnfGraph::conjoin(&graphs)?
    };
    if opts.simplify {
        consequence = consequence.simplified()?;
    }
    Ok(CompiledSystem {
        ssd,
        pieces,
        consequence,
    })
}

/// Compiles and extracts the minimal diagnoses.
pub fn diagnose(
    ssd: &Ssd,
    obs: &Observation,
    cf: &CostFunction,
    opts: &Options,
) -> Result<(CompiledSystem, Diagnoses)> {
    let compiled = compile_system(ssd, obs, opts)?;
    let d = diagnose::minimal_diagnoses(
        &compiled.consequence,
        ssd.assumables(),
        cf,
        compiled.ssd.vocab(),
    )?;
    Ok((compiled, d))
}

/// Outcome of comparing a compiled run against the oracle.
#[derive(Clone, Debug, Default)]
pub struct CheckReport {
    pub checks: Vec<(String, bool)>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|(_, ok)| *ok)
    }

    pub fn to_text(&self) -> String {
        self.checks
            .iter()
            .map(|(name, ok)| format!("{} {name}\n", if *ok { "ok  " } else { "FAIL" }))
            .collect()
    }
}

/// Compiles, extracts, and compares with brute force: decomposability,
/// models against diagnoses, minimal diagnoses against the brute-force
/// minimum, the per-edge cache bound and the per-node term invariants.
pub fn check(
    ssd: &Ssd,
    obs: &Observation,
    cf: &CostFunction,
    opts: &Options,
    oracle_cap: u128,
) -> Result<CheckReport> {
    let (compiled, found) = diagnose(ssd, obs, cf, opts)?;
    let g = &compiled.consequence;
    let vocab = compiled.ssd.vocab();
    let mut report = CheckReport::default();
    report
        .checks
        .push(("consequence is decomposable".into(), g.is_decomposable()));
    let models = g.enumerate_models(ssd.assumables(), vocab, DEFAULT_MODEL_CAP.max(oracle_cap))?;
    let brute = oracle::brute_diagnoses(ssd, obs, oracle_cap)?;
    report
        .checks
        .push(("models equal brute-force diagnoses".into(), models == brute));
    let minimal = oracle::brute_minimal(ssd, obs, cf, oracle_cap)?;
    report.checks.push((
        "extracted diagnoses equal brute-force minimum".into(),
        minimal == found,
    ));
    report.checks.push((
        "non-cached calls within sepset bound".into(),
        compiled.cache_bound_holds(),
    ));
    let terms_ok = match diagnose::prune(g, cf) {
        Ok(mut state) => {
            diagnose::instantiations(g, &mut state, cf, vocab).is_ok()
                && diagnose::check_terms(g, &state, cf).is_ok()
        }
        Err(_) => false,
    };
    report.checks.push((
        "node terms are minimal models of their nodes".into(),
        terms_ok,
    ));
    Ok(report)
}
