//! Command-line front end.
//!
//! Exit codes: 0 when everything was computed, 1 when `verify` finds a
//! check outside tolerance, 2 for input or validation errors, 3 when a
//! solver did not converge.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::Serialize;

use crate::asymptotics::{verify_wilks, WilksCheck};
use crate::baselines::{
    anderson_darling_ksample, kruskal_wallis, permutation_energy_test, univariate, PermutationConfig,
    Reduction,
};
use crate::data::pairwise_distances;
use crate::dataset::{read_dataset, ColumnRef, Dataset, ReadOptions};
use crate::error::{JelError, Result};
use crate::jel::{jel_analyze, JelSolution, SolverConfig};
use crate::sim::{parse_config, run_grid, write_csv, write_markdown};
use crate::stats::RngStream;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

/// Smallest p-value printed as a number.
pub const P_DISPLAY_FLOOR: f64 = 1e-15;

pub const DEFAULT_BANKNOTE_PATH: &str = "data/data_banknote_authentication.txt";

#[derive(Debug, Parser)]
#[command(name = "jelk", version, about = "K-sample homogeneity tests by jackknife empirical likelihood")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test whether the groups of a dataset share one distribution.
    Test(TestArgs),
    /// Run a Monte Carlo grid from a scenario file.
    Simulate(SimulateArgs),
    /// Check the matrix identities behind the chi-square limit.
    Verify(VerifyArgs),
    /// Per-variable and joint tests on the banknote authentication data.
    Banknote(BanknoteArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Jel,
    Energy,
    Kw,
    Ad,
    All,
}

#[derive(Debug, Args)]
pub struct TestOptions {
    /// Significance level.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Methods to run (comma separated).
    #[arg(long, value_enum, value_delimiter = ',', default_value = "jel")]
    pub method: Vec<MethodArg>,
    /// Label shuffles for the energy permutation test.
    #[arg(long, default_value_t = PermutationConfig::DEFAULT_PERMUTATIONS)]
    pub permutations: usize,
    /// Seed of the permutation test.
    #[arg(long, env = "JELK_SEED", default_value_t = 1)]
    pub seed: u64,
    /// How the rank tests reduce multivariate rows to one value.
    #[arg(long, default_value = "norm")]
    pub reduce: Reduction,
    /// Print the report as JSON.
    #[arg(long)]
    pub json: bool,
    /// Also write the JSON report to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// Delimited text file, one observation per row.
    pub file: PathBuf,
    /// Label column, by name or 0-based index (default: last column).
    #[arg(long)]
    pub label_col: Option<ColumnRef>,
    /// Coordinate columns to use, by name or index (default: all others).
    #[arg(long, value_delimiter = ',')]
    pub cols: Option<Vec<ColumnRef>>,
    /// Column names for a file without a header.
    #[arg(long, value_delimiter = ',')]
    pub names: Option<Vec<String>>,
    /// Read the file as the headerless banknote layout (VW,SW,KW,EI,class).
    #[arg(long)]
    pub banknote: bool,
    #[command(flatten)]
    pub opts: TestOptions,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output path prefix; `.csv` and `.md` are appended.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Seed for every scenario, overriding the file.
    #[arg(long, env = "JELK_SEED")]
    pub seed: Option<u64>,
    /// Replications for every scenario, overriding the file.
    #[arg(long)]
    pub reps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Number of groups; with no `--alpha` the fractions are equal.
    #[arg(long)]
    pub k: Option<usize>,
    /// Group fractions, decimals or p/q, comma separated.
    #[arg(long)]
    pub alpha: Option<String>,
    /// Check this many random fraction vectors with K in 2..=6.
    #[arg(long)]
    pub random: Option<usize>,
    #[arg(long, env = "JELK_SEED", default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct BanknoteArgs {
    /// The UCI banknote authentication file.
    #[arg(long, env = "JELK_BANKNOTE", default_value = DEFAULT_BANKNOTE_PATH)]
    pub file: PathBuf,
    #[command(flatten)]
    pub opts: TestOptions,
}

/// `p < 1e-15` is shown as `< 1e-15`.
pub fn format_p(p: f64) -> String {
    if p < P_DISPLAY_FLOOR {
        format!("< {P_DISPLAY_FLOOR:e}")
    } else {
        format!("{p:.6}")
    }
}

pub fn exit_code(e: &JelError) -> i32 {
    if e.is_convergence() {
        EXIT_SOLVER
    } else {
        EXIT_INPUT
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodReport {
    pub method: &'static str,
    pub statistic: Option<f64>,
    pub df: Option<u32>,
    pub p_value: Option<f64>,
    pub p_display: Option<String>,
    pub reject: Option<bool>,
    pub solver: Option<JelSolution>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupInfo {
    pub label: String,
    pub size: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DatasetReport {
    pub columns: Vec<String>,
    pub label_column: String,
    pub n: usize,
    pub groups: Vec<GroupInfo>,
    pub alpha: f64,
    pub results: Vec<MethodReport>,
}

impl DatasetReport {
    fn worst_exit(&self, errors: &[JelError]) -> i32 {
        errors.iter().map(exit_code).max().unwrap_or(EXIT_OK)
    }
}

fn selected(methods: &[MethodArg]) -> Vec<MethodArg> {
    let all = [MethodArg::Jel, MethodArg::Energy, MethodArg::Ad, MethodArg::Kw];
    if methods.contains(&MethodArg::All) {
        return all.to_vec();
    }
    all.into_iter().filter(|m| methods.contains(m)).collect()
}

/// Runs the selected tests on a dataset. Per-method failures are kept in
/// the report and also returned.
pub fn analyze_dataset(ds: &Dataset, opts: &TestOptions) -> Result<(DatasetReport, Vec<JelError>)> {
    let pooled = ds.to_pooled()?;
    let mut results = Vec::new();
    let mut errors = Vec::new();
    for m in selected(&opts.method) {
        let (name, outcome) = match m {
            MethodArg::Jel => (
                "JEL-S",
                jel_analyze(&pooled, opts.alpha, &SolverConfig::default()).map(|r| (r.result, Some(r.solution))),
            ),
            MethodArg::Energy => (
                "ET",
                PermutationConfig::new(opts.permutations, RngStream::new(opts.seed, 0)).and_then(|cfg| {
                    let dm = pairwise_distances(pooled.points())?;
                    permutation_energy_test(&pooled, &dm, &cfg, opts.alpha).map(|t| (t, None))
                }),
            ),
            MethodArg::Ad => {
                let (v, l) = univariate(&pooled, opts.reduce);
                ("AD", anderson_darling_ksample(&v, &l, opts.alpha).map(|t| (t, None)))
            }
            MethodArg::Kw => {
                let (v, l) = univariate(&pooled, opts.reduce);
                ("KW", kruskal_wallis(&v, &l, opts.alpha).map(|t| (t, None)))
            }
            MethodArg::All => unreachable!("expanded by selected()"),
        };
        results.push(match outcome {
            Ok((t, solver)) => MethodReport {
                method: name,
                statistic: Some(t.statistic),
                df: Some(t.df),
                p_value: Some(t.p_value),
                p_display: Some(format_p(t.p_value)),
                reject: Some(t.reject),
                solver,
                error: None,
            },
            Err(e) => {
                let r = MethodReport {
                    method: name,
                    statistic: None,
                    df: None,
                    p_value: None,
                    p_display: None,
                    reject: None,
                    solver: None,
                    error: Some(e.to_string()),
                };
                errors.push(e);
                r
            }
        });
    }
    let report = DatasetReport {
        columns: ds.columns.clone(),
        label_column: ds.label_column.clone(),
        n: pooled.n(),
        groups: ds
            .groups
            .iter()
            .map(|g| GroupInfo {
                label: g.label.clone(),
                size: g.len(),
            })
            .collect(),
        alpha: opts.alpha,
        results,
    };
    Ok((report, errors))
}

fn print_report(r: &DatasetReport, w: &mut dyn Write) -> std::io::Result<()> {
    let groups: Vec<String> = r.groups.iter().map(|g| format!("{}={}", g.label, g.size)).collect();
    writeln!(
        w,
        "columns: {}  label: {}  n = {}  groups: {}",
        r.columns.join(","),
        r.label_column,
        r.n,
        groups.join(" ")
    )?;
    for m in &r.results {
        match (&m.error, m.statistic) {
            (Some(e), _) => writeln!(w, "{:<6} error: {e}", m.method)?,
            (None, Some(stat)) => {
                writeln!(
                    w,
                    "{:<6} statistic = {:.6}  df = {}  p = {}  {} at alpha = {}",
                    m.method,
                    stat,
                    m.df.unwrap_or(0),
                    m.p_display.as_deref().unwrap_or(""),
                    if m.reject == Some(true) { "reject" } else { "do not reject" },
                    r.alpha
                )?;
                if let Some(s) = &m.solver {
                    let lg: Vec<String> = s.lambda_group.iter().map(|l| format!("{l:.6e}")).collect();
                    writeln!(
                        w,
                        "       theta = {:.6}  lambda = {:.6e}  lambda_k = [{}]  max residual = {:.2e}  iterations = {}",
                        s.theta,
                        s.lambda_pooled,
                        lg.join(", "),
                        s.max_residual(),
                        s.iterations
                    )?;
                }
            }
            (None, None) => {}
        }
    }
    Ok(())
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let f = File::create(path)
        .map_err(|e| JelError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| JelError::Io(std::io::Error::other(e)))?;
    writeln!(w)?;
    Ok(())
}

fn emit<T: Serialize>(value: &T, json: bool, out: Option<&Path>, text: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    if json {
        serde_json::to_writer_pretty(&mut lock, value).map_err(|e| JelError::Io(std::io::Error::other(e)))?;
        writeln!(lock)?;
    } else {
        text(&mut lock)?;
    }
    if let Some(p) = out {
        write_json(value, p)?;
    }
    Ok(())
}

fn cmd_test(a: &TestArgs) -> Result<i32> {
    let mut ro = if a.banknote {
        ReadOptions::banknote()
    } else {
        ReadOptions::default()
    };
    if let Some(l) = &a.label_col {
        ro.label = Some(l.clone());
    }
    if a.names.is_some() {
        ro.names = a.names.clone();
        ro.header = Some(false);
    }
    ro.columns = a.cols.clone();
    let ds = read_dataset(&a.file, &ro)?;
    let (report, errors) = analyze_dataset(&ds, &a.opts)?;
    emit(&report, a.opts.json, a.opts.out.as_deref(), |w| print_report(&report, w))?;
    for e in &errors {
        eprintln!("jelk: {e}");
    }
    Ok(report.worst_exit(&errors))
}

fn cmd_simulate(a: &SimulateArgs) -> Result<i32> {
    let text = std::fs::read_to_string(&a.config).map_err(|e| {
        JelError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", a.config.display())))
    })?;
    let mut scenarios = parse_config(&text)?;
    for s in &mut scenarios {
        if let Some(seed) = a.seed {
            s.base_seed = seed;
        }
        if let Some(r) = a.reps {
            s.replications = r;
        }
        s.validate()?;
    }
    let total = scenarios.len();
    let table = run_grid(&scenarios, a.workers, |i, row, secs| {
        let summary: Vec<String> = row
            .rates
            .iter()
            .map(|r| format!("{} {:.3}", r.method, r.rate))
            .collect();
        match &row.error {
            Some(e) => eprintln!("[{}/{total}] {}: error: {e}", i + 1, row.scenario.name),
            None => eprintln!("[{}/{total}] {}: {} ({secs:.1}s)", i + 1, row.scenario.name, summary.join(", ")),
        }
    })?;
    eprintln!("grid finished in {:.1}s", table.wall_time);

    let prefix = a.out.clone().unwrap_or_else(|| {
        PathBuf::from(a.config.file_stem().unwrap_or_default()).with_extension("")
    });
    let with_ext = |ext: &str| {
        let mut p = prefix.clone().into_os_string();
        p.push(ext);
        PathBuf::from(p)
    };
    let create = |p: &Path| {
        File::create(p)
            .map(BufWriter::new)
            .map_err(|e| JelError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", p.display()))))
    };
    let csv_path = with_ext(".csv");
    let md_path = with_ext(".md");
    write_csv(&table, create(&csv_path)?)?;
    write_markdown(&table, create(&md_path)?)?;
    println!("wrote {} and {}", csv_path.display(), md_path.display());
    Ok(if table.errors().count() > 0 { EXIT_INPUT } else { EXIT_OK })
}

fn parse_fraction(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || JelError::Domain(format!("cannot parse group fraction '{s}'"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            let q: f64 = q.trim().parse().map_err(|_| bad())?;
            Ok(p / q)
        }
        None => s.parse().map_err(|_| bad()),
    }
}

/// Parses `"1/3,1/3,1/3"` style fraction lists.
pub fn parse_fractions(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(parse_fraction).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyRow {
    pub alpha: Vec<f64>,
    pub check: WilksCheck,
    pub eigen_error: f64,
    pub trace_error: f64,
    pub pass: bool,
}

pub const EIGEN_TOL: f64 = 1e-8;
pub const TRACE_TOL: f64 = 1e-10;

/// Runs the Wilks matrix checks for one fraction vector.
pub fn verify_row(alpha: &[f64]) -> Result<VerifyRow> {
    let check = verify_wilks(alpha)?;
    let k = alpha.len();
    let eigen_error = check
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, e)| (e - if i < 2 { 0.0 } else { 1.0 }).abs())
        .fold(0.0, f64::max);
    let trace_error = (check.trace - (k as f64 - 1.0)).abs();
    let pass = eigen_error <= EIGEN_TOL && trace_error <= TRACE_TOL && check.identity_ok;
    Ok(VerifyRow {
        alpha: alpha.to_vec(),
        check,
        eigen_error,
        trace_error,
        pass,
    })
}

/// A random fraction vector with `k` entries, each at least 0.02 before
/// normalizing.
pub fn random_fractions<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.02..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut a: Vec<f64> = raw.iter().map(|v| v / total).collect();
    let head: f64 = a[..k - 1].iter().sum();
    a[k - 1] = 1.0 - head;
    a
}

fn cmd_verify(a: &VerifyArgs) -> Result<i32> {
    let mut alphas: Vec<Vec<f64>> = Vec::new();
    if let Some(s) = &a.alpha {
        let v = parse_fractions(s)?;
        if let Some(k) = a.k {
            if k != v.len() {
                return Err(JelError::Domain(format!("--k {k} but {} fractions given", v.len())));
            }
        }
        alphas.push(v);
    } else if let Some(k) = a.k {
        if k < 2 {
            return Err(JelError::Domain(format!("--k must be at least 2, got {k}")));
        }
        alphas.push(vec![1.0 / k as f64; k]);
    }
    if let Some(n) = a.random {
        let mut rng = RngStream::new(a.seed, 0).rng();
        for _ in 0..n {
            let k = rng.random_range(2..=6);
            alphas.push(random_fractions(k, &mut rng));
        }
    }
    if alphas.is_empty() {
        return Err(JelError::Domain("give --k, --alpha or --random".into()));
    }
    let rows = alphas.iter().map(|al| verify_row(al)).collect::<Result<Vec<_>>>()?;
    let all_pass = rows.iter().all(|r| r.pass);
    emit(&rows, a.json, None, |w| {
        for r in &rows {
            let al: Vec<String> = r.alpha.iter().map(|v| format!("{v:.4}")).collect();
            let ev: Vec<String> = r.check.eigenvalues.iter().map(|v| format!("{v:.3e}")).collect();
            writeln!(
                w,
                "{} K={} alpha=({}) eigenvalues=[{}] trace={:.12} |A'WA-A|={:.2e}",
                if r.pass { "PASS" } else { "FAIL" },
                r.alpha.len(),
                al.join(", "),
                ev.join(", "),
                r.check.trace,
                r.check.identity_residual
            )?;
        }
        let passed = rows.iter().filter(|r| r.pass).count();
        writeln!(w, "{passed}/{} passed", rows.len())
    })?;
    Ok(if all_pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

#[derive(Debug, Clone, Serialize)]
pub struct BanknoteRow {
    pub variables: String,
    pub report: DatasetReport,
}

/// Joint and per-variable tests between the two note classes.
pub fn banknote_reports(ds: &Dataset, opts: &TestOptions) -> Result<(Vec<BanknoteRow>, Vec<JelError>)> {
    let mut sets: Vec<Vec<String>> = vec![ds.columns.clone()];
    sets.extend(ds.columns.iter().map(|c| vec![c.clone()]));
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for cols in sets {
        let refs: Vec<ColumnRef> = cols.iter().map(|c| ColumnRef::Name(c.clone())).collect();
        let sub = ds.select(&refs)?;
        let (report, errs) = analyze_dataset(&sub, opts)?;
        errors.extend(errs);
        rows.push(BanknoteRow {
            variables: if cols.len() > 1 { "all".into() } else { cols[0].clone() },
            report,
        });
    }
    Ok((rows, errors))
}

fn cmd_banknote(a: &BanknoteArgs) -> Result<i32> {
    if !a.file.exists() {
        return Err(JelError::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!(
                "{} not found; run scripts/fetch_banknote.sh or pass --file",
                a.file.display()
            ),
        )));
    }
    let ds = read_dataset(&a.file, &ReadOptions::banknote())?;
    let (rows, errors) = banknote_reports(&ds, &a.opts)?;
    emit(&rows, a.opts.json, a.opts.out.as_deref(), |w| {
        let methods: Vec<&str> = rows[0].report.results.iter().map(|m| m.method).collect();
        write!(w, "{:<8}", "variable")?;
        for m in &methods {
            write!(w, " {m:>12}")?;
        }
        writeln!(w)?;
        for r in &rows {
            write!(w, "{:<8}", r.variables)?;
            for m in &r.report.results {
                let cell = m.p_display.clone().unwrap_or_else(|| "error".into());
                write!(w, " {cell:>12}")?;
            }
            writeln!(w)?;
        }
        writeln!(w, "p-values; groups {:?}", rows[0].report.groups.iter().map(|g| (&g.label, g.size)).collect::<Vec<_>>())
    })?;
    for e in &errors {
        eprintln!("jelk: {e}");
    }
    Ok(errors.iter().map(exit_code).max().unwrap_or(EXIT_OK))
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let outcome = match &cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Banknote(a) => cmd_banknote(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("jelk: {e}");
            exit_code(&e)
        }
    }
}
