use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ssdiag::diagnose::CostFunction;
use ssdiag::generate::{self, AdderObservation, Generated, RandomParams};
use ssdiag::jointree::{Jointree, JointreeFile};
use ssdiag::oracle;
use ssdiag::pipeline::{self, Options};
use ssdiag::ssd::{Observation, Ssd, ValidationLevel};
use ssdiag::Error;

#[derive(Parser)]
#[command(
    name = "ssdiag",
    version,
    about = "Diagnose structured system descriptions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a system description for structural and semantic errors.
    Validate {
        ssd: PathBuf,
        #[arg(long)]
        cap: Option<u128>,
    },
    /// Jointree width and predicted compilation cost.
    Stats {
        ssd: PathBuf,
        #[arg(long)]
        obs: Option<PathBuf>,
    },
    /// Compile the consequence of an observation to a DNNF file.
    Compile {
        #[command(flatten)]
        run: RunArgs,
        /// Where to write the DNNF; per-edge statistics go to stdout.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Compile, then print the minimal diagnoses.
    Diagnose {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value = "card")]
        cost: CostSpec,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Diagnoses by exhaustive search; only the minimal ones with --cost.
    Oracle {
        ssd: PathBuf,
        #[arg(long)]
        obs: Option<PathBuf>,
        #[arg(long)]
        cost: Option<CostSpec>,
        #[arg(long)]
        cap: Option<u128>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compare compiled results against exhaustive search.
    Check {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value = "card")]
        cost: CostSpec,
    },
    /// Write a generated system to `<prefix>.ssd` and `<prefix>.obs`.
    Gen {
        kind: GenKind,
        /// Chain length or adder width.
        #[arg(short, default_value_t = 3)]
        n: usize,
        /// Adder observation.
        #[arg(long, default_value = "phi1")]
        phi: AdderPhi,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        prefix: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    ssd: PathBuf,
    #[arg(long)]
    obs: Option<PathBuf>,
    #[arg(long, conflicts_with = "cut_arcs")]
    jointree: Option<PathBuf>,
    /// Clique id to root the compilation at.
    #[arg(long, conflicts_with = "cut_arcs")]
    pivot: Option<usize>,
    #[arg(long)]
    cut_arcs: bool,
    #[arg(long)]
    simplify: bool,
    #[arg(long)]
    cap: Option<u128>,
}

#[derive(Clone, Debug)]
enum CostSpec {
    Card,
    Kappa(PathBuf),
}

impl std::str::FromStr for CostSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once(':') {
            None if s == "card" => Ok(CostSpec::Card),
            Some(("kappa", path)) if !path.is_empty() => Ok(CostSpec::Kappa(path.into())),
            _ => Err(format!("expected `card` or `kappa:<path>`, got `{s}`")),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    ChainInverters,
    Adder,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum AdderPhi {
    Phi1,
    Phi2,
    Zero,
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_ssd(path: &Path) -> anyhow::Result<Ssd> {
    Ssd::parse(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn load_obs(ssd: &Ssd, path: Option<&Path>) -> anyhow::Result<Observation> {
    match path {
        None => Ok(Observation::empty()),
        Some(p) => ssd
            .parse_observation(&read(p)?)
            .with_context(|| format!("in {}", p.display())),
    }
}

fn load_cost(ssd: &Ssd, spec: &CostSpec) -> anyhow::Result<CostFunction> {
    match spec {
        CostSpec::Card => Ok(CostFunction::cardinality(ssd.vocab(), ssd.assumables())),
        CostSpec::Kappa(p) => CostFunction::kappa(ssd.vocab(), ssd.assumables(), &read(p)?)
            .with_context(|| format!("in {}", p.display())),
    }
}

/// Writes every file or none: contents go to temporaries first, which are
/// renamed into place once all of them are written.
fn write_all(files: &[(&Path, &str)]) -> anyhow::Result<()> {
    let mut staged = Vec::new();
    for (path, text) in files {
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d,
            _ => Path::new("."),
        };
        let mut name = path
            .file_name()
            .context("output path has no file name")?
            .to_os_string();
        name.push(format!(".{}.tmp", std::process::id()));
        let tmp = dir.join(name);
        let written = fs::File::create(&tmp).and_then(|mut f| f.write_all(text.as_bytes()));
        if let Err(e) = written {
            let _ = fs::remove_file(&tmp);
            for (t, _) in &staged {
                let _ = fs::remove_file(t);
            }
            return Err(e).with_context(|| format!("writing {}", path.display()));
        }
        staged.push((tmp, *path));
    }
    for (tmp, path) in staged {
        fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn emit(out: &mut String, output: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match output {
        Some(p) => write_all(&[(p, text)]),
        None => {
            out.push_str(text);
            Ok(())
        }
    }
}

fn options(run: &RunArgs, ssd: &Ssd) -> anyhow::Result<Options> {
    let mut opts = Options {
        pivot: run.pivot,
        cut_arcs: run.cut_arcs,
        simplify: run.simplify,
        ..Options::default()
    };
    if let Some(cap) = run.cap {
        opts.table_cap = cap;
    }
    if let Some(p) = &run.jointree {
        let file: JointreeFile = Jointree::parse(&read(p)?, ssd.vocab())
            .with_context(|| format!("in {}", p.display()))?;
        opts.jointree = Some(file);
    }
    Ok(opts)
}

/// Runs a command, returning whether its outcome is a success.
fn run(cli: Cli, out: &mut String) -> anyhow::Result<bool> {
    match cli.command {
        Command::Validate { ssd, cap } => {
            let ssd = load_ssd(&ssd)?;
            let report = ssd.validate(
                ValidationLevel::Full,
                cap.unwrap_or(oracle::DEFAULT_ORACLE_CAP),
            )?;
            if report.is_valid() {
                writeln!(out, "valid")?;
            }
            for v in &report.violations {
                writeln!(out, "{v}")?;
            }
            Ok(report.is_valid())
        }
        Command::Stats { ssd, obs } => {
            let ssd = load_ssd(&ssd)?;
            let obs = load_obs(&ssd, obs.as_deref())?;
            let ssd = ssd.deshare_assumables();
            let obs = Observation::new(obs.instantiation().clone(), &ssd)?;
            let observed = obs.vars();
            let whole = Jointree::build(&ssd).stats(&observed, ssd.vocab());
            writeln!(out, "width {}", whole.width)?;
            writeln!(out, "predicted-cost {}", whole.predicted_cost)?;
            let (mut width, mut cost) = (0, 0u128);
            for piece in ssd.cut_arcs(&obs)? {
                let s = Jointree::build(&piece.ssd).stats(&observed, piece.ssd.vocab());
                width = width.max(s.width);
                cost = cost.saturating_add(s.predicted_cost);
            }
            writeln!(out, "cut-arcs-width {width}")?;
            writeln!(out, "cut-arcs-predicted-cost {cost}")?;
            Ok(true)
        }
        Command::Compile { run, output } => {
            let ssd = load_ssd(&run.ssd)?;
            let obs = load_obs(&ssd, run.obs.as_deref())?;
            let opts = options(&run, &ssd)?;
            let compiled = pipeline::compile_system(&ssd, &obs, &opts)?;
            let text = compiled.consequence.serialize(compiled.ssd.vocab())?;
            write_all(&[(&output, &text)])?;
            if compiled.pieces.len() > 1 {
                write!(
                    out,
                    "nodes {}\nedges {}\n",
                    compiled.consequence.node_count(),
                    compiled.consequence.edge_count()
                )?;
            }
            for (i, piece) in compiled.pieces.iter().enumerate() {
                if compiled.pieces.len() > 1 {
                    writeln!(out, "piece {i}")?;
                }
                write!(out, "{}", piece.compilation.stats_text(&piece.jointree))?;
            }
            Ok(true)
        }
        Command::Diagnose { run, cost, output } => {
            let ssd = load_ssd(&run.ssd)?;
            let obs = load_obs(&ssd, run.obs.as_deref())?;
            let cf = load_cost(&ssd, &cost)?;
            let opts = options(&run, &ssd)?;
            let (_, found) = pipeline::diagnose(&ssd, &obs, &cf, &opts)?;
            emit(out, output.as_deref(), &found.to_text(ssd.vocab()))?;
            Ok(true)
        }
        Command::Oracle {
            ssd,
            obs,
            cost,
            cap,
            output,
        } => {
            let ssd = load_ssd(&ssd)?;
            let obs = load_obs(&ssd, obs.as_deref())?;
            let cap = cap.unwrap_or(oracle::DEFAULT_ORACLE_CAP);
            let text = match cost {
                Some(spec) => {
                    let cf = load_cost(&ssd, &spec)?;
                    oracle::brute_minimal(&ssd, &obs, &cf, cap)?.to_text(ssd.vocab())
                }
                None => {
                    let mut lines: Vec<String> = oracle::brute_diagnoses(&ssd, &obs, cap)?
                        .iter()
                        .map(|d| ssd.vocab().instantiation_text(d))
                        .collect();
                    lines.sort();
                    lines.iter().map(|l| format!("{l}\n")).collect()
                }
            };
            emit(out, output.as_deref(), &text)?;
            Ok(true)
        }
        Command::Check { run, cost } => {
            let ssd = load_ssd(&run.ssd)?;
            let obs = load_obs(&ssd, run.obs.as_deref())?;
            let cf = load_cost(&ssd, &cost)?;
            let opts = options(&run, &ssd)?;
            let report = pipeline::check(
                &ssd,
                &obs,
                &cf,
                &opts,
                run.cap.unwrap_or(oracle::DEFAULT_ORACLE_CAP),
            )?;
            write!(out, "{}", report.to_text())?;
            Ok(report.passed())
        }
        Command::Gen {
            kind,
            n,
            phi,
            seed,
            prefix,
        } => {
            let g: Generated = match kind {
                GenKind::ChainInverters => generate::inverter_chain(n),
                GenKind::Adder => {
                    if n == 0 {
                        bail!("an adder needs at least one bit");
                    }
                    let phi = match phi {
                        AdderPhi::Phi1 => AdderObservation::FirstSumHigh,
                        AdderPhi::Phi2 => AdderObservation::AllSumsHigh,
                        AdderPhi::Zero => AdderObservation::AllLow,
                    };
                    generate::ripple_adder(n, phi)
                }
                GenKind::Random => generate::random_system(seed, RandomParams::default()),
            };
            let mut ssd_path = prefix.clone().into_os_string();
            ssd_path.push(".ssd");
            let mut obs_path = prefix.into_os_string();
            obs_path.push(".obs");
            write_all(&[
                (Path::new(&ssd_path), &g.ssd),
                (Path::new(&obs_path), &g.observation),
            ])?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = String::new();
    let outcome = run(cli, &mut out);
    if let Err(e) = io::stdout().lock().write_all(out.as_bytes()) {
        if e.kind() != io::ErrorKind::BrokenPipe {
            eprintln!("error: writing output: {e}");
            return ExitCode::from(1);
        }
    }
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            let capped = e.chain().any(|c| {
                c.downcast_ref::<Error>()
                    .is_some_and(Error::is_cap_exceeded)
            });
            ExitCode::from(if capped { 3 } else { 1 })
        }
    }
}
