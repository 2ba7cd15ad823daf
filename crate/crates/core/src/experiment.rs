//! Batch experiments: spectrum tables for `B`, spectral-radius box plots,
//! witness sandwiches across lift sizes and the SDP-value threshold table.
//! Every row carries the seed that produced it; output is a pure function
//! of the [`ExperimentSpec`].

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atoms::{parse_atom_list, Atom};
use crate::error::{Error, Result};
use crate::ihara::{spectrum_report, PredictedSource};
use crate::lifts::{random_instance, NegationKind, NegationModel};
use crate::sdp::{sandwich, sdp_value_formula};
use crate::spectra::eig_symmetric;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    SpectrumB,
    Boxplot,
    SandwichSweep,
    ThresholdTable,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::SpectrumB => "spectrum_B",
            Self::Boxplot => "boxplot",
            Self::SandwichSweep => "sandwich_sweep",
            Self::ThresholdTable => "threshold_table",
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectrum_B" | "spectrum_b" | "spectrum-b" => Ok(Self::SpectrumB),
            "boxplot" => Ok(Self::Boxplot),
            "sandwich_sweep" | "sandwich-sweep" => Ok(Self::SandwichSweep),
            "threshold_table" | "threshold-table" => Ok(Self::ThresholdTable),
            _ => Err(Error::Invalid(format!("unknown experiment kind `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    /// One atom token used for every group, or one token per group.
    pub atoms: String,
    pub c: Vec<usize>,
    pub n: Vec<usize>,
    pub seeds: usize,
    pub base_seed: u64,
    pub negation: NegationKind,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_l")]
    pub l: usize,
    /// Matching tolerance for spectrum tables.
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_delta() -> f64 {
    0.05
}

fn default_l() -> usize {
    2
}

fn default_tol() -> f64 {
    1e-6
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            atoms: "sort4".into(),
            c: vec![2],
            n: vec![15],
            seeds: 1,
            base_seed: 0,
            negation: NegationKind::Variable,
            delta: default_delta(),
            l: default_l(),
            tol: default_tol(),
        }
    }

    pub fn seed(&self, k: usize) -> u64 {
        self.base_seed.wrapping_add(k as u64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == ExperimentKind::ThresholdTable {
            return Ok(());
        }
        if self.c.is_empty() || self.n.is_empty() || self.seeds == 0 {
            return Err(Error::Invalid("need at least one c, one n and one seed".into()));
        }
        if let Some(&n) = self.n.iter().find(|&&n| n == 0) {
            return Err(Error::Invalid(format!("lift size n = {n} is empty")));
        }
        for &c in &self.c {
            self.atoms_for(c)?;
        }
        Ok(())
    }

    pub fn atoms_for(&self, c: usize) -> Result<Vec<Atom>> {
        let list = parse_atom_list(&self.atoms)?;
        match list.len() {
            1 => Ok(vec![list[0].clone(); c]),
            k if k == c => Ok(list),
            k => Err(Error::Invalid(format!("{k} atoms given for c = {c}"))),
        }
    }

    fn negation_for(&self, seed: u64) -> NegationModel {
        NegationModel { kind: self.negation, seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
    Empty(Option<()>),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v:?}"),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty(_) => String::new(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(v) => Some(*v as f64),
            Cell::Float(v) => Some(*v),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty(None), Cell::Float)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Header row plus data rows.
    pub fn data_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.iter().map(Cell::render).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self, kind: &str) -> String {
        format!("# spectra-lab {VERSION} {kind}\n{}", self.data_csv())
    }

    pub fn to_json(&self, kind: &str) -> Result<String> {
        let rows: Vec<serde_json::Map<String, serde_json::Value>> = self
            .rows
            .iter()
            .map(|row| {
                self.columns
                    .iter()
                    .zip(row)
                    .map(|(k, v)| Ok((k.clone(), serde_json::to_value(v)?)))
                    .collect::<std::result::Result<_, serde_json::Error>>()
            })
            .collect::<std::result::Result<_, _>>()?;
        let doc = serde_json::json!({ "version": VERSION, "kind": kind, "rows": rows });
        Ok(serde_json::to_string_pretty(&doc)? + "\n")
    }
}

/// Strips the version header so two outputs can be compared.
pub fn data_section(output: &str) -> &str {
    match output.strip_prefix("# ") {
        Some(rest) => rest.split_once('\n').map_or("", |(_, data)| data),
        None => output,
    }
}

/// Runs `f` on a pool of `threads` workers (0 = rayon default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumBRun {
    pub table: Table,
    pub sqrt_gr: f64,
    pub max_residual: f64,
    pub pass: bool,
}

/// Eigenvalues of `B` classified against the predicted multiset, one block
/// of rows per `(c, n, seed)`.
pub fn run_spectrum_b(spec: &ExperimentSpec) -> Result<SpectrumBRun> {
    spec.validate()?;
    let mut jobs = Vec::new();
    for &c in &spec.c {
        for &n in &spec.n {
            for k in 0..spec.seeds {
                jobs.push((c, n, spec.seed(k)));
            }
        }
    }
    let results: Vec<Result<_>> = jobs
        .par_iter()
        .map(|&(c, n, seed)| {
            let inst = random_instance(&spec.atoms_for(c)?, n, seed, spec.negation_for(seed))?;
            let rep = spectrum_report(&inst, spec.tol)?;
            let gr = (c as f64 - 1.0) * (-inst.lambda1() * inst.lambda2());
            Ok((c, n, seed, gr.sqrt(), rep))
        })
        .collect();
    let mut table = Table::new(&["c", "n", "seed", "re", "im", "class", "predicted_re", "predicted_im", "distance", "sqrt_gr"]);
    let mut max_residual: f64 = 0.0;
    let mut sqrt_gr = 0.0;
    let mut pass = true;
    for r in results {
        let (c, n, seed, sg, rep) = r?;
        sqrt_gr = sg;
        max_residual = max_residual.max(rep.max_residual);
        pass &= rep.pass && rep.multiplicities.iter().all(|m| m.ok());
        for p in &rep.table {
            table.push(vec![
                c.into(),
                n.into(),
                seed.into(),
                p.re.into(),
                p.im.into(),
                source_name(p.predicted_source).into(),
                p.predicted_re.into(),
                p.predicted_im.into(),
                p.distance.into(),
                sg.into(),
            ]);
        }
    }
    Ok(SpectrumBRun { table, sqrt_gr, max_residual, pass })
}

pub fn source_name(s: PredictedSource) -> &'static str {
    match s {
        PredictedSource::Lambda1 => "lambda1",
        PredictedSource::Lambda2 => "lambda2",
        PredictedSource::Zero => "zero",
        PredictedSource::Quadratic => "quadratic",
    }
}

/// Quartile summary with linear interpolation between order statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let h = p * (v.len() - 1) as f64;
            let lo = h.floor() as usize;
            let hi = h.ceil() as usize;
            v[lo] + (h - lo as f64) * (v[hi] - v[lo])
        };
        Some(Self { min: v[0], q1: q(0.25), median: q(0.5), q3: q(0.75), max: v[v.len() - 1] })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxplotRun {
    /// One row per `(c, seed)`.
    pub samples: Table,
    /// One row per `c` with quartiles and the reference lines.
    pub summary: Table,
}

/// `ρ(A)` and `ρ(B)` per seed for each `c`, with quartile summaries against
/// `λ₁+λ₂+2√gr` and `√gr`.
pub fn run_boxplot(spec: &ExperimentSpec) -> Result<BoxplotRun> {
    spec.validate()?;
    let n = spec.n[0];
    let mut samples = Table::new(&["c", "n", "seed", "rho_a", "rho_b"]);
    let mut summary = Table::new(&[
        "c", "n", "count", "rho_a_min", "rho_a_q1", "rho_a_median", "rho_a_q3", "rho_a_max", "a_bound", "rho_b_min",
        "rho_b_q1", "rho_b_median", "rho_b_q3", "rho_b_max", "sqrt_gr",
    ]);
    for &c in &spec.c {
        let atoms = spec.atoms_for(c)?;
        let seeds: Vec<u64> = (0..spec.seeds).map(|k| spec.seed(k)).collect();
        let radii: Vec<Result<(u64, f64, f64)>> = seeds
            .par_iter()
            .map(|&seed| {
                let inst = random_instance(&atoms, n, seed, spec.negation_for(seed))?;
                let rho_a = eig_symmetric(&inst.adjacency_f64())?.iter().map(|x| x.abs()).fold(0.0, f64::max);
                let rho_b = crate::nomadic::nomadic_spectral_radius(&inst)?;
                Ok((seed, rho_a, rho_b))
            })
            .collect();
        let mut ra = Vec::new();
        let mut rb = Vec::new();
        for r in radii {
            let (seed, a, b) = r?;
            samples.push(vec![c.into(), n.into(), seed.into(), a.into(), b.into()]);
            ra.push(a);
            rb.push(b);
        }
        let (l1, l2) = (atoms[0].lambda1(), atoms[0].lambda2());
        let sqrt_gr = ((c as f64 - 1.0) * (-l1 * l2)).sqrt();
        let sa = Summary::of(&ra).expect("seeds > 0");
        let sb = Summary::of(&rb).expect("seeds > 0");
        summary.push(vec![
            c.into(),
            n.into(),
            ra.len().into(),
            sa.min.into(),
            sa.q1.into(),
            sa.median.into(),
            sa.q3.into(),
            sa.max.into(),
            (l1 + l2 + 2.0 * sqrt_gr).into(),
            sb.min.into(),
            sb.q1.into(),
            sb.median.into(),
            sb.q3.into(),
            sb.max.into(),
            sqrt_gr.into(),
        ]);
    }
    Ok(BoxplotRun { samples, summary })
}

/// Witness lower bound against the eigenvalue bound for each `(n, seed)`.
pub fn run_sandwich_sweep(spec: &ExperimentSpec) -> Result<Table> {
    spec.validate()?;
    let mut table = Table::new(&[
        "c", "n", "seed", "bad_vertices", "opt", "sdp_lower", "sdp_upper", "gap", "formula", "slack", "tail_mass",
    ]);
    for &c in &spec.c {
        let atoms = spec.atoms_for(c)?;
        for &n in &spec.n {
            let seeds: Vec<u64> = (0..spec.seeds).map(|k| spec.seed(k)).collect();
            let reps: Vec<Result<_>> = seeds
                .par_iter()
                .map(|&seed| {
                    let inst = random_instance(&atoms, n, seed, spec.negation_for(seed))?;
                    Ok((seed, sandwich(&inst, 1, spec.delta, spec.l)?))
                })
                .collect();
            for r in reps {
                let (seed, rep) = r?;
                table.push(vec![
                    c.into(),
                    n.into(),
                    seed.into(),
                    rep.bad_vertex_count.into(),
                    rep.opt.into(),
                    rep.sdp_lower.into(),
                    rep.sdp_upper.into(),
                    (rep.sdp_upper - rep.sdp_lower).into(),
                    rep.formula.into(),
                    rep.slack.into(),
                    rep.tail_mass.into(),
                ]);
            }
        }
    }
    Ok(table)
}

/// Closed form with a real-valued number of groups.
fn formula_real(lambda1: f64, lambda2: f64, c: f64) -> f64 {
    let neg = -lambda1 * lambda2;
    (lambda1 + lambda2 + 2.0 * ((c - 1.0) * neg).sqrt()) / (c * neg)
}

/// Root of `½ + value(±√2, c) = 1` in `c`, by bisection on `[6, 7]`.
pub fn sort4_threshold() -> f64 {
    let s = std::f64::consts::SQRT_2;
    let g = |c: f64| 0.5 + formula_real(s, -s, c) - 1.0;
    let (mut lo, mut hi) = (6.0, 7.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Forrelation family `k = 0..=max_k` over `c = 2..=max_c`. For `k = 1`
/// (the SORT4/CHSH atom) the table also reports `½ + value` and whether it
/// falls below 1.
pub fn run_threshold_table(max_k: u32, max_c: usize) -> Result<Table> {
    let mut table = Table::new(&["k", "c", "formula", "half_plus", "certifies_unsat"]);
    for k in 0..=max_k {
        let atom = crate::atoms::make_forrelation(k)?;
        for c in 2..=max_c {
            let v = sdp_value_formula(atom.lambda1(), atom.lambda2(), c)?;
            let (half, cert) = if k == 1 { (Cell::Float(0.5 + v), Cell::Bool(0.5 + v < 1.0)) } else { (Cell::Empty(None), Cell::Empty(None)) };
            table.push(vec![Cell::from(k as usize), c.into(), v.into(), half, cert]);
        }
    }
    table.push(vec!["root".into(), sort4_threshold().into(), Cell::Float(1.0), Cell::Float(1.0), Cell::Empty(None)]);
    Ok(table)
}

/// Plain gnuplot script for a CSV written by the experiment driver.
pub fn gnuplot_script(kind: ExperimentKind, csv_path: &str) -> String {
    let mut s = String::from("set datafile separator ','\nset key autotitle columnhead\n");
    match kind {
        ExperimentKind::SpectrumB => {
            let _ = write!(
                s,
                "set size ratio -1\nset xlabel 'Re'\nset ylabel 'Im'\nset parametric\nr = system(\"awk -F, 'NR==3{{print $10}}' {csv_path}\")\n\
                 plot '{csv_path}' using 4:5 with points pt 7 ps 0.4 title 'eig(B)', \\\n     [0:2*pi] r*cos(t), r*sin(t) dt 2 title 'sqrt(gr)'\n"
            );
        }
        ExperimentKind::Boxplot => {
            let _ = write!(
                s,
                "set xlabel 'c'\nplot '{csv_path}' using 1:6:5:8:7 with candlesticks title 'rho(A)' whiskerbars, \\\n     '' using 1:9 with lines dt 2 title '2 sqrt(gr) + lambda1 + lambda2', \\\n     '' using 1:12:11:14:13 with candlesticks title 'rho(B)' whiskerbars, \\\n     '' using 1:15 with lines dt 2 title 'sqrt(gr)'\n"
            );
        }
        ExperimentKind::SandwichSweep => {
            let _ = write!(s, "set xlabel 'n'\nset logscale x\nplot '{csv_path}' using 2:8 with points title 'eig - witness'\n");
        }
        ExperimentKind::ThresholdTable => {
            let _ = write!(s, "set xlabel 'c'\nplot '{csv_path}' using 2:($1 == 1 ? $4 : 1/0) with linespoints title '1/2 + value (k=1)', 1 dt 2 notitle\n");
        }
    }
    s
}
