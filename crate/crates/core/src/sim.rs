//! Monte Carlo size and power experiments.
//!
//! A [`Scenario`] fixes a distribution family, its group parameters, the
//! group sizes and the methods to compare. Replication `r` draws its data
//! from `RngStream(base_seed, r)`, so results do not depend on how the
//! replications are scheduled across workers.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use ndarray::Array2;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{
    anderson_darling_ksample, kruskal_wallis, permutation_energy_test, univariate, PermutationConfig,
    Reduction,
};
use crate::data::{pairwise_distances, PooledData, Sample};
use crate::error::{JelError, Result};
use crate::jackknife::all_pseudo_values;
use crate::jel::{jel_test_pseudo, SolverConfig};
use crate::stats::{sample_mvexp, sample_mvnormal, sample_mvt, RngStream};

pub const DEFAULT_REPLICATIONS: usize = 2000;
pub const MIN_REPLICATIONS: usize = 100;

/// Data-generating family. Group 1 is always the standard member; the
/// deltas describe groups 2..K.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Family {
    /// N(0, δ² I): δ multiplies the standard deviation.
    NormalScale,
    /// N(δ 1_d, I).
    NormalLocation,
    /// N(μ 1_d, σ² I) with deltas `(μ_2..μ_K, σ_2..σ_K)`.
    NormalScaleLocation,
    /// Multivariate t_5 with scale matrix δ I.
    T5Scale,
    /// Independent exponential coordinates with mean δ.
    ExpScale,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::NormalScale,
        Family::NormalLocation,
        Family::NormalScaleLocation,
        Family::T5Scale,
        Family::ExpScale,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Family::NormalScale => "normal-scale",
            Family::NormalLocation => "normal-location",
            Family::NormalScaleLocation => "normal-scale-location",
            Family::T5Scale => "t5-scale",
            Family::ExpScale => "exp-scale",
        }
    }

    /// Number of deltas for K groups.
    pub fn num_deltas(&self, k: usize) -> usize {
        match self {
            Family::NormalScaleLocation => 2 * (k - 1),
            _ => k - 1,
        }
    }

    /// Parameters of group `g` (0-based): (location, scale multiplier).
    fn group_params(&self, deltas: &[f64], k: usize, g: usize) -> (f64, f64) {
        if g == 0 {
            return (0.0, 1.0);
        }
        match self {
            Family::NormalLocation => (deltas[g - 1], 1.0),
            Family::NormalScaleLocation => (deltas[g - 1], deltas[k - 1 + g - 1]),
            _ => (0.0, deltas[g - 1]),
        }
    }

    fn draw<R: Rng + ?Sized>(&self, loc: f64, scale: f64, m: usize, dim: usize, rng: &mut R) -> Result<Array2<f64>> {
        match self {
            Family::NormalScale | Family::NormalLocation | Family::NormalScaleLocation => {
                sample_mvnormal(&vec![loc; dim], scale * scale, m, rng)
            }
            Family::T5Scale => sample_mvt(5, scale, dim, m, rng),
            Family::ExpScale => sample_mvexp(1.0 / scale, dim, m, rng),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = JelError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Family::ALL.iter().map(|f| f.name()).collect();
                JelError::Validation(format!("unknown family '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Method {
    JelS,
    Et,
    Ad,
    Kw,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::JelS, Method::Et, Method::Ad, Method::Kw];

    pub fn name(&self) -> &'static str {
        match self {
            Method::JelS => "JEL-S",
            Method::Et => "ET",
            Method::Ad => "AD",
            Method::Kw => "KW",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = JelError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "jel-s" | "jel" => Ok(Method::JelS),
            "et" | "energy" => Ok(Method::Et),
            "ad" => Ok(Method::Ad),
            "kw" => Ok(Method::Kw),
            other => Err(JelError::Validation(format!(
                "unknown method '{other}' (jel-s, et, ad, kw)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub name: String,
    pub family: Family,
    pub deltas: Vec<f64>,
    pub sizes: Vec<usize>,
    pub dim: usize,
    pub alpha: f64,
    pub replications: usize,
    pub methods: Vec<Method>,
    pub base_seed: u64,
    pub permutations: usize,
    pub reduction: Reduction,
}

impl Scenario {
    /// A scenario with default level, replications, methods and seed.
    pub fn new(family: Family, deltas: Vec<f64>, sizes: Vec<usize>, dim: usize) -> Self {
        Self {
            name: String::new(),
            family,
            deltas,
            sizes,
            dim,
            alpha: 0.05,
            replications: DEFAULT_REPLICATIONS,
            methods: Method::ALL.to_vec(),
            base_seed: 1,
            permutations: PermutationConfig::DEFAULT_PERMUTATIONS,
            reduction: Reduction::Norm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.sizes.len();
        if k < 2 {
            return Err(JelError::Validation(format!("need at least 2 groups, got {k}")));
        }
        if let Some(m) = self.sizes.iter().find(|&&m| m < 3) {
            return Err(JelError::Validation(format!("group size {m} is below 3")));
        }
        let want = self.family.num_deltas(k);
        if self.deltas.len() != want {
            return Err(JelError::Validation(format!(
                "family {} with {k} groups takes {want} deltas, got {}",
                self.family,
                self.deltas.len()
            )));
        }
        if self.deltas.iter().any(|d| !d.is_finite()) {
            return Err(JelError::Validation("deltas must be finite".into()));
        }
        let scales: &[f64] = match self.family {
            Family::NormalLocation => &[],
            Family::NormalScaleLocation => &self.deltas[k - 1..],
            _ => &self.deltas,
        };
        if let Some(s) = scales.iter().find(|&&s| s <= 0.0) {
            return Err(JelError::Validation(format!(
                "scale parameters of {} must be positive, got {s}",
                self.family
            )));
        }
        if self.dim == 0 {
            return Err(JelError::Validation("dimension must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(JelError::Validation(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.replications < MIN_REPLICATIONS {
            return Err(JelError::Validation(format!(
                "at least {MIN_REPLICATIONS} replications are required, got {}",
                self.replications
            )));
        }
        if self.methods.is_empty() {
            return Err(JelError::Validation("no methods selected".into()));
        }
        if self.methods.contains(&Method::Et) {
            PermutationConfig::new(self.permutations, RngStream::new(0, 0))?;
        }
        Ok(())
    }

    /// Short human description: family, deltas, sizes and dimension.
    pub fn describe(&self) -> String {
        format!(
            "{} deltas=({}) sizes={} d={}",
            self.family,
            join(&self.deltas, ", "),
            join(&self.sizes, "/"),
            self.dim
        )
    }

    /// The pooled sample of replication `r`.
    pub fn generate(&self, replication: u64) -> Result<PooledData> {
        let mut rng = RngStream::new(self.base_seed, replication).rng();
        let k = self.sizes.len();
        let samples = self
            .sizes
            .iter()
            .enumerate()
            .map(|(g, &m)| {
                let (loc, scale) = self.family.group_params(&self.deltas, k, g);
                let pts = self.family.draw(loc, scale, m, self.dim, &mut rng)?;
                Ok(Sample::new(format!("group{}", g + 1), pts))
            })
            .collect::<Result<Vec<_>>>()?;
        PooledData::new(samples)
    }
}

fn join<T: fmt::Display>(v: &[T], sep: &str) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(sep)
}

/// Per-method outcome of one replication: `Some(reject)` or `None` when the
/// method failed on that data set.
fn replicate(s: &Scenario, r: u64, solver: &SolverConfig) -> Result<Vec<Option<bool>>> {
    let pooled = s.generate(r)?;
    let need_dm = s.methods.iter().any(|m| matches!(m, Method::JelS | Method::Et));
    let dm = if need_dm {
        Some(pairwise_distances(pooled.points())?)
    } else {
        None
    };
    let uni = if s.methods.iter().any(|m| matches!(m, Method::Ad | Method::Kw)) {
        Some(univariate(&pooled, s.reduction))
    } else {
        None
    };
    let out = s
        .methods
        .iter()
        .map(|m| {
            let res = match m {
                Method::JelS => {
                    let dm = dm.as_ref().expect("distance matrix built");
                    all_pseudo_values(&pooled, dm).and_then(|pv| jel_test_pseudo(&pv, s.alpha, solver).map(|t| t.0))
                }
                Method::Et => {
                    let cfg = PermutationConfig::new(s.permutations, RngStream::new(s.base_seed, r).substream(1))?;
                    permutation_energy_test(&pooled, dm.as_ref().expect("distance matrix built"), &cfg, s.alpha)
                }
                Method::Ad => {
                    let (v, l) = uni.as_ref().expect("univariate values built");
                    anderson_darling_ksample(v, l, s.alpha)
                }
                Method::Kw => {
                    let (v, l) = uni.as_ref().expect("univariate values built");
                    kruskal_wallis(v, l, s.alpha)
                }
            };
            Ok(res.ok().map(|t| t.reject))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(out)
}

/// Rejection rate of one method over a scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodRate {
    pub method: Method,
    pub rejections: usize,
    /// Replications where the method produced a decision.
    pub valid: usize,
    /// Replications where the method failed; excluded from the rate.
    pub failures: usize,
    pub rate: f64,
    /// `sqrt(rate (1 − rate) / valid)`.
    pub std_error: f64,
}

impl MethodRate {
    fn new(method: Method, rejections: usize, valid: usize, failures: usize) -> Self {
        let rate = if valid > 0 {
            rejections as f64 / valid as f64
        } else {
            f64::NAN
        };
        let std_error = if valid > 0 {
            (rate * (1.0 - rate) / valid as f64).sqrt()
        } else {
            f64::NAN
        };
        Self {
            method,
            rejections,
            valid,
            failures,
            rate,
            std_error,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioRow {
    pub scenario: Scenario,
    pub rates: Vec<MethodRate>,
    /// Set when the scenario could not be run at all.
    pub error: Option<String>,
}

impl ScenarioRow {
    pub fn rate(&self, method: Method) -> Option<&MethodRate> {
        self.rates.iter().find(|r| r.method == method)
    }
}

/// Runs every replication of a scenario with the default solver settings.
pub fn run_scenario(s: &Scenario) -> Result<ScenarioRow> {
    run_scenario_with(s, &SolverConfig::default())
}

pub fn run_scenario_with(s: &Scenario, solver: &SolverConfig) -> Result<ScenarioRow> {
    s.validate()?;
    let outcomes = (0..s.replications as u64)
        .into_par_iter()
        .map(|r| replicate(s, r, solver))
        .collect::<Result<Vec<_>>>()?;
    let rates = s
        .methods
        .iter()
        .enumerate()
        .map(|(j, &m)| {
            let mut rej = 0;
            let mut valid = 0;
            let mut failed = 0;
            for o in &outcomes {
                match o[j] {
                    Some(true) => {
                        rej += 1;
                        valid += 1;
                    }
                    Some(false) => valid += 1,
                    None => failed += 1,
                }
            }
            MethodRate::new(m, rej, valid, failed)
        })
        .collect();
    Ok(ScenarioRow {
        scenario: s.clone(),
        rates,
        error: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultTable {
    pub rows: Vec<ScenarioRow>,
    /// Seconds spent on the grid; not part of the written tables.
    pub wall_time: f64,
}

impl ResultTable {
    pub fn errors(&self) -> impl Iterator<Item = (&Scenario, &str)> {
        self.rows
            .iter()
            .filter_map(|r| r.error.as_deref().map(|e| (&r.scenario, e)))
    }
}

/// Runs the scenarios in order on a pool of `workers` threads (all cores
/// when `None`). A scenario that fails is recorded in its row and the grid
/// continues. `progress` is called after each row.
pub fn run_grid(
    scenarios: &[Scenario],
    workers: Option<usize>,
    mut progress: impl FnMut(usize, &ScenarioRow, f64),
) -> Result<ResultTable> {
    if scenarios.is_empty() {
        return Err(JelError::Validation("no scenarios to run".into()));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(JelError::Validation("worker count must be positive".into()));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| JelError::Validation(format!("cannot start worker pool: {e}")))?;
    let start = Instant::now();
    let mut rows = Vec::with_capacity(scenarios.len());
    for (i, s) in scenarios.iter().enumerate() {
        let t0 = Instant::now();
        let row = pool.install(|| run_scenario(s)).unwrap_or_else(|e| ScenarioRow {
            scenario: s.clone(),
            rates: Vec::new(),
            error: Some(e.to_string()),
        });
        progress(i, &row, t0.elapsed().as_secs_f64());
        rows.push(row);
    }
    Ok(ResultTable {
        rows,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

#[derive(Serialize)]
struct CsvRecord<'a> {
    scenario: &'a str,
    family: &'a str,
    deltas: String,
    sizes: String,
    dim: usize,
    alpha: f64,
    replications: usize,
    seed: u64,
    method: &'a str,
    rate: String,
    std_error: String,
    rejections: usize,
    valid: usize,
    failures: usize,
    error: &'a str,
}

/// One CSV record per scenario and method.
pub fn write_csv<W: Write>(table: &ResultTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| JelError::Io(std::io::Error::other(e));
    for row in &table.rows {
        let s = &row.scenario;
        let base = |method: &'static str, r: Option<&MethodRate>| CsvRecord {
            scenario: &s.name,
            family: s.family.name(),
            deltas: join(&s.deltas, " "),
            sizes: join(&s.sizes, " "),
            dim: s.dim,
            alpha: s.alpha,
            replications: s.replications,
            seed: s.base_seed,
            method,
            rate: r.map_or(String::new(), |r| format!("{:.4}", r.rate)),
            std_error: r.map_or(String::new(), |r| format!("{:.4}", r.std_error)),
            rejections: r.map_or(0, |r| r.rejections),
            valid: r.map_or(0, |r| r.valid),
            failures: r.map_or(0, |r| r.failures),
            error: row.error.as_deref().unwrap_or(""),
        };
        if row.error.is_some() {
            w.serialize(base("", None)).map_err(csv_err)?;
        }
        for r in &row.rates {
            w.serialize(base(r.method.name(), Some(r))).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// A Markdown table with one row per scenario and one `rate (se)` column
/// per method.
pub fn write_markdown<W: Write>(table: &ResultTable, mut out: W) -> Result<()> {
    let mut methods: Vec<Method> = table
        .rows
        .iter()
        .flat_map(|r| r.scenario.methods.iter().copied())
        .collect();
    methods.sort();
    methods.dedup();

    write!(out, "| scenario | family | d | sizes | deltas |")?;
    for m in &methods {
        write!(out, " {m} |")?;
    }
    writeln!(out, " failures |")?;
    write!(out, "|---|---|---|---|---|")?;
    for _ in &methods {
        write!(out, "---|")?;
    }
    writeln!(out, "---|")?;

    for row in &table.rows {
        let s = &row.scenario;
        write!(
            out,
            "| {} | {} | {} | {} | ({}) |",
            s.name,
            s.family,
            s.dim,
            join(&s.sizes, "/"),
            join(&s.deltas, ", ")
        )?;
        for m in &methods {
            match row.rate(*m) {
                Some(r) => write!(out, " {:.3} ({:.3}) |", r.rate, r.std_error)?,
                None => write!(out, " |")?,
            }
        }
        let fails: Vec<String> = row
            .rates
            .iter()
            .filter(|r| r.failures > 0)
            .map(|r| format!("{} {}", r.method, r.failures))
            .collect();
        match &row.error {
            Some(e) => writeln!(out, " error: {} |", e.replace('|', "/"))?,
            None => writeln!(out, " {} |", fails.join(", "))?,
        }
    }
    if let Some(first) = table.rows.first() {
        writeln!(
            out,
            "\nRates are rejection frequencies at level {} over {} replications, seed {}; Monte Carlo standard errors in parentheses.",
            first.scenario.alpha, first.scenario.replications, first.scenario.base_seed
        )?;
    }
    Ok(())
}

fn parse_list<T: FromStr>(value: &str, line: usize, what: &str) -> Result<Vec<T>> {
    value
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<T>().map_err(|_| JelError::Parse {
                line,
                message: format!("cannot parse '{t}' in {what}"),
            })
        })
        .collect()
}

fn parse_one<T: FromStr>(value: &str, line: usize, what: &str) -> Result<T> {
    value.trim().parse::<T>().map_err(|_| JelError::Parse {
        line,
        message: format!("cannot parse '{}' as {what}", value.trim()),
    })
}

/// Parses a scenario file.
///
/// Each scenario is a block of `key = value` lines; blocks are separated by
/// blank lines and `#` starts a comment. Keys: `name`, `family`, `deltas`,
/// `sizes` (required: family, deltas, sizes), `dim`, `alpha`, `reps`,
/// `methods`, `seed`, `permutations`, `reduce`. Lists are comma or space
/// separated.
pub fn parse_config(text: &str) -> Result<Vec<Scenario>> {
    let mut scenarios = Vec::new();
    let mut block: Vec<(usize, String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            // a comment-only line does not end a block
            if raw.trim().is_empty() && !block.is_empty() {
                scenarios.push(build_scenario(&block, scenarios.len())?);
                block.clear();
            }
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| JelError::Parse {
            line,
            message: format!("expected key = value, got '{content}'"),
        })?;
        let key = key.trim().to_ascii_lowercase();
        if block.iter().any(|(_, k, _)| *k == key) {
            return Err(JelError::Parse {
                line,
                message: format!("duplicate key '{key}'"),
            });
        }
        block.push((line, key, value.trim().to_string()));
    }
    if !block.is_empty() {
        scenarios.push(build_scenario(&block, scenarios.len())?);
    }
    if scenarios.is_empty() {
        return Err(JelError::Parse {
            line: text.lines().count().max(1),
            message: "no scenarios found".into(),
        });
    }
    Ok(scenarios)
}

fn build_scenario(block: &[(usize, String, String)], index: usize) -> Result<Scenario> {
    let start = block[0].0;
    let mut family = None;
    let mut deltas = None;
    let mut sizes = None;
    let mut s = Scenario::new(Family::NormalScale, Vec::new(), Vec::new(), 1);
    s.name = format!("scenario{}", index + 1);
    for (line, key, value) in block {
        let line = *line;
        match key.as_str() {
            "name" => s.name = value.clone(),
            "family" => {
                family = Some(value.parse::<Family>().map_err(|e| JelError::Parse {
                    line,
                    message: e.to_string(),
                })?)
            }
            "deltas" => deltas = Some(parse_list::<f64>(value, line, "deltas")?),
            "sizes" => sizes = Some(parse_list::<usize>(value, line, "sizes")?),
            "dim" => s.dim = parse_one(value, line, "dimension")?,
            "alpha" => s.alpha = parse_one(value, line, "alpha")?,
            "reps" | "replications" => s.replications = parse_one(value, line, "replication count")?,
            "seed" => s.base_seed = parse_one(value, line, "seed")?,
            "permutations" => s.permutations = parse_one(value, line, "permutation count")?,
            "methods" => {
                s.methods = value
                    .split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|t| !t.is_empty())
                    .map(|t| {
                        t.parse::<Method>().map_err(|e| JelError::Parse {
                            line,
                            message: e.to_string(),
                        })
                    })
                    .collect::<Result<_>>()?
            }
            "reduce" => {
                s.reduction = value.parse().map_err(|e: JelError| JelError::Parse {
                    line,
                    message: e.to_string(),
                })?
            }
            other => {
                return Err(JelError::Parse {
                    line,
                    message: format!("unknown key '{other}'"),
                })
            }
        }
    }
    let missing = |what: &str| JelError::Parse {
        line: start,
        message: format!("scenario '{}' has no {what}", s.name),
    };
    s.family = family.ok_or_else(|| missing("family"))?;
    s.deltas = deltas.ok_or_else(|| missing("deltas"))?;
    s.sizes = sizes.ok_or_else(|| missing("sizes"))?;
    s.validate().map_err(|e| JelError::Parse {
        line: start,
        message: format!("scenario '{}': {e}", s.name),
    })?;
    Ok(s)
}
