use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use spectra_lab::atoms::{parse_atom_list, Atom};
use spectra_lab::experiment::{self, ExperimentKind, ExperimentSpec, Table};
use spectra_lab::ihara::ihara_check;
use spectra_lab::lifts::{random_instance, InstanceGraph, NegationKind, NegationModel};
use spectra_lab::nomadic::build_nomadic;
use spectra_lab::waves::{self, BallOptions, WitnessConfig};
use spectra_lab::{sdp, Error, Result};

#[derive(Parser)]
#[command(name = "spectra-lab", version, about = "Random lifts of two-eigenvalue atoms: nomadic spectra and SDP witnesses")]
struct Cli {
    /// Base seed for lifts, signs and sample points.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = "SPECTRA_LAB_THREADS")]
    threads: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Validate an atom and print its constants.
    Atom(AtomArgs),
    #[command(subcommand)]
    Lift(LiftCommand),
    #[command(subcommand)]
    Nomadic(NomadicCommand),
    #[command(subcommand)]
    Ihara(IharaCommand),
    #[command(subcommand)]
    Waves(WavesCommand),
    #[command(subcommand)]
    Sdp(SdpCommand),
    /// Batch experiments as CSV or JSON tables.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct AtomArgs {
    /// edge | sort4 | chsh | complete:R | forrelation:K
    #[arg(long, default_value = "sort4")]
    atom: String,
    /// Number of groups for the derived constants.
    #[arg(long, default_value_t = 2)]
    c: usize,
}

#[derive(Subcommand)]
enum LiftCommand {
    /// Sample a random lift and write the instance as JSON.
    Gen {
        /// Checked against the atom arity when given.
        #[arg(long)]
        r: Option<usize>,
        #[arg(long)]
        c: usize,
        #[arg(long)]
        n: usize,
        /// One token for every group, or `c` comma-separated tokens.
        #[arg(long)]
        atoms: String,
        #[arg(long, default_value = "variable")]
        negation: NegationKind,
    },
}

#[derive(Subcommand)]
enum NomadicCommand {
    /// Write `B` in Matrix Market coordinate format.
    Dump {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

#[derive(Subcommand)]
enum IharaCommand {
    /// Identity residuals and matched spectrum of `B`.
    Check {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 1e-6)]
        spectrum_tol: f64,
        /// Full JSON report.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum WavesCommand {
    /// Product ball around one vertex.
    Ball {
        #[arg(long, default_value = "sort4")]
        atoms: String,
        #[arg(long, default_value_t = 2)]
        c: usize,
        #[arg(long, default_value_t = 12)]
        radius: usize,
        /// Keep zero-product branches.
        #[arg(long)]
        full: bool,
    },
    /// Witness Rayleigh quotient on the largest affordable ball.
    Rayleigh {
        #[arg(long, default_value = "sort4")]
        atoms: String,
        #[arg(long, default_value_t = 2)]
        c: usize,
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        s: i8,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        /// Truncation depth; the deepest affordable one when absent.
        #[arg(long = "L")]
        l: Option<usize>,
    },
}

#[derive(Subcommand)]
enum SdpCommand {
    /// OPT, witness lower bound, eigenvalue upper bound and closed form.
    Sandwich {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        s: i8,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long = "L", default_value_t = 6)]
        l: usize,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON experiment description; overrides the flags below.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value = "spectrum_B")]
    kind: ExperimentKind,
    #[arg(long, default_value = "sort4")]
    atoms: String,
    /// `6`, `2,3,5` or `2..8` (inclusive).
    #[arg(long, default_value = "2")]
    c: String,
    #[arg(long, default_value = "15")]
    n: String,
    #[arg(long, default_value_t = 1)]
    seeds: usize,
    /// Defaults to `--seed`.
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long, default_value = "variable")]
    negation: NegationKind,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long = "L", default_value_t = 2)]
    l: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Highest Forrelation order in the threshold table.
    #[arg(long, default_value_t = 4)]
    max_k: u32,
    #[arg(long, default_value_t = 10)]
    max_c: usize,
    /// Also write a gnuplot script next to the CSV.
    #[arg(long)]
    gnuplot: bool,
}

fn parse_list(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::Invalid(format!("cannot parse `{s}` as a list of integers"));
    if let Some((lo, hi)) = s.split_once("..") {
        let hi = hi.trim_start_matches('=');
        let (lo, hi): (usize, usize) = (lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?);
        return Ok((lo..=hi).collect());
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    emit(out, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn read_instance(path: &Path) -> Result<InstanceGraph> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn atoms_for(spec: &str, c: usize) -> Result<Vec<Atom>> {
    let list = parse_atom_list(spec)?;
    match list.len() {
        1 => Ok(vec![list[0].clone(); c]),
        k if k == c => Ok(list),
        k => Err(Error::Invalid(format!("{k} atoms given for c = {c}"))),
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

/// Exit status: `Ok(false)` marks a check that ran but did not pass.
fn run(cli: Cli) -> Result<bool> {
    let out = cli.out.as_deref();
    let json = cli.format == Some(Format::Json);
    match cli.command {
        Command::Atom(a) => {
            let atom = Atom::from_token(&a.atom)?;
            let profile = atom.profile(a.c)?;
            emit_json(out, &serde_json::json!({ "atom": atom, "bipartite": atom.is_bipartite(), "profile": profile }))?;
        }
        Command::Lift(LiftCommand::Gen { r, c, n, atoms, negation }) => {
            let atoms = atoms_for(&atoms, c)?;
            if let Some(r) = r {
                if atoms[0].r() != r {
                    return Err(Error::ArityMismatch { expected: r, got: atoms[0].r() });
                }
            }
            let inst = random_instance(&atoms, n, cli.seed, NegationModel { kind: negation, seed: cli.seed })?;
            emit_json(out, &inst)?;
        }
        Command::Nomadic(NomadicCommand::Dump { input }) => {
            let inst = read_instance(&input)?;
            emit(out, &build_nomadic(&inst).to_matrix_market())?;
        }
        Command::Ihara(IharaCommand::Check { input, samples, tol, spectrum_tol, report }) => {
            let inst = read_instance(&input)?;
            let check = ihara_check(&inst, cli.seed, samples, tol, spectrum_tol)?;
            if let Some(p) = report {
                emit_json(Some(&p), &check)?;
            }
            let mult_ok = check.spectrum.multiplicities.iter().all(|m| m.ok());
            let summary = serde_json::json!({
                "max_identity_residual": check.max_identity_residual,
                "identity_pass": check.identity_pass,
                "max_spectrum_distance": check.spectrum.max_residual,
                "spectrum_pass": check.spectrum.pass,
                "multiplicities_pass": mult_ok,
                "rho_a": check.spectrum.rho_a,
                "rho_b": check.spectrum.rho_b,
            });
            emit_json(out, &summary)?;
            return Ok(check.identity_pass && check.spectrum.pass && mult_ok);
        }
        Command::Waves(WavesCommand::Ball { atoms, c, radius, full }) => {
            let atoms = atoms_for(&atoms, c)?;
            let ball = waves::build_product_ball_with(&atoms, c, radius, BallOptions { prune_zero: !full, ..Default::default() })?;
            emit_json(out, &ball)?;
        }
        Command::Waves(WavesCommand::Rayleigh { atoms, c, s, delta, l }) => {
            let atoms = atoms_for(&atoms, c)?;
            let cfg = WitnessConfig::new(s, delta, l.unwrap_or(0))?;
            let opts = BallOptions { prune_zero: true, ..Default::default() };
            let ball = match l {
                Some(l) => waves::build_product_ball_with(&atoms, c, l + 1, opts)?,
                None => largest_ball(&atoms, c, opts)?,
            };
            let l = ball.radius - 1;
            let f = waves::witness_vector(&ball, &cfg);
            let g = waves::truncate_normalize(&ball, &f, l)?;
            let q = waves::rayleigh_quotient(&ball, &g)?;
            let (l1, l2) = (atoms[0].lambda1(), atoms[0].lambda2());
            let r_x = 2.0 * ball.growth().sqrt();
            let report = serde_json::json!({
                "s": s,
                "delta": delta,
                "L": l,
                "ball_vertices": ball.len(),
                "quotient": q,
                "tail_mass": waves::tail_mass(c, delta, l),
                "band_edge": l1 + l2 + s as f64 * r_x,
                "untruncated_quotient": waves::infinite_rayleigh(l1, l2, c, delta, s),
            });
            if json {
                emit_json(out, &report)?;
            } else {
                emit(out, &format!("quotient {q}\ntail_mass {}\nL {l}\n", waves::tail_mass(c, delta, l)))?;
            }
        }
        Command::Sdp(SdpCommand::Sandwich { input, s, delta, l }) => {
            let inst = read_instance(&input)?;
            let rep = sdp::sandwich(&inst, s, delta, l)?;
            emit_json(out, &rep)?;
            return Ok(rep.chain_holds() && rep.witness_valid());
        }
        Command::Experiment(a) => return run_experiment(a, cli.seed, cli.threads.unwrap_or(0), out, json),
    }
    Ok(true)
}

fn largest_ball(atoms: &[Atom], c: usize, opts: BallOptions) -> Result<waves::ProductBall> {
    let mut best = waves::build_product_ball_with(atoms, c, 1, opts)?;
    for radius in 2.. {
        match waves::build_product_ball_with(atoms, c, radius, opts) {
            Ok(b) => best = b,
            Err(Error::BallTooLarge(_)) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(best)
}

fn render(table: &Table, kind: &str, json: bool) -> Result<String> {
    if json {
        table.to_json(kind)
    } else {
        Ok(table.to_csv(kind))
    }
}

fn run_experiment(a: ExperimentArgs, seed: u64, threads: usize, out: Option<&Path>, json: bool) -> Result<bool> {
    let spec = match &a.spec {
        Some(p) => serde_json::from_str(&fs::read_to_string(p)?)?,
        None => ExperimentSpec {
            kind: a.kind,
            atoms: a.atoms.clone(),
            c: parse_list(&a.c)?,
            n: parse_list(&a.n)?,
            seeds: a.seeds,
            base_seed: a.base_seed.unwrap_or(seed),
            negation: a.negation,
            delta: a.delta,
            l: a.l,
            tol: a.tol,
        },
    };
    let kind = spec.kind.name();
    let (table, extra, ok) = experiment::with_threads(threads, || -> Result<_> {
        Ok(match spec.kind {
            ExperimentKind::SpectrumB => {
                let run = experiment::run_spectrum_b(&spec)?;
                (run.table, None, run.pass)
            }
            ExperimentKind::Boxplot => {
                let run = experiment::run_boxplot(&spec)?;
                (run.summary, Some(run.samples), true)
            }
            ExperimentKind::SandwichSweep => (experiment::run_sandwich_sweep(&spec)?, None, true),
            ExperimentKind::ThresholdTable => (experiment::run_threshold_table(a.max_k, a.max_c)?, None, true),
        })
    })??;
    emit(out, &render(&table, kind, json)?)?;
    if let (Some(samples), Some(p)) = (extra, out) {
        emit(Some(&sibling(p, if json { ".samples.json" } else { ".samples.csv" })), &render(&samples, kind, json)?)?;
    }
    if a.gnuplot {
        let data = out.map_or("data.csv".to_string(), |p| p.display().to_string());
        let script = experiment::gnuplot_script(spec.kind, &data);
        match out {
            Some(p) => fs::write(sibling(p, ".gp"), script)?,
            None => eprint!("{script}"),
        }
    }
    Ok(ok)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::NoConvergence(_) => 3,
                Error::Io(_) => 1,
                _ => 2,
            })
        }
    }
}
