//! Comparison tests: a label-permutation energy test, Kruskal–Wallis, and
//! the Scholz–Stephens k-sample Anderson–Darling test.

use std::collections::BTreeMap;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::{DistanceMatrix, PooledData};
use crate::error::{JelError, Result};
use crate::stats::RngStream;
use crate::test_result::{check_alpha, TestResult};

/// Settings of the permutation energy test.
#[derive(Debug, Clone, Copy)]
pub struct PermutationConfig {
    pub num_permutations: usize,
    pub rng: RngStream,
}

impl PermutationConfig {
    pub const DEFAULT_PERMUTATIONS: usize = 199;

    pub fn new(num_permutations: usize, rng: RngStream) -> Result<Self> {
        if num_permutations < 19 {
            return Err(JelError::Domain(format!(
                "at least 19 permutations are needed, got {num_permutations}"
            )));
        }
        Ok(Self {
            num_permutations,
            rng,
        })
    }
}

/// `n · (U_n − Σ α̂_k U_{n_k})` for groups given as consecutive chunks of
/// `order` with the given sizes.
fn gini_energy_statistic(dm: &DistanceMatrix, order: &[usize], sizes: &[usize], u_pooled: f64) -> f64 {
    let n = order.len() as f64;
    let mut start = 0;
    let mut weighted = 0.0;
    for &m in sizes {
        let idx = &order[start..start + m];
        let pairs = m as f64 * (m as f64 - 1.0) / 2.0;
        weighted += (m as f64 / n) * dm.restricted_total(idx) / pairs;
        start += m;
    }
    n * (u_pooled - weighted)
}

/// Permutation test of homogeneity with the Gini form of the energy
/// statistic. Labels are shuffled over the fixed distance matrix.
pub fn permutation_energy_test(
    pooled: &PooledData,
    dm: &DistanceMatrix,
    cfg: &PermutationConfig,
    alpha: f64,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    if dm.n() != pooled.n() {
        return Err(JelError::Validation("distance matrix does not match the data".into()));
    }
    let sizes = pooled.group_sizes();
    if sizes.iter().any(|&m| m < 2) {
        return Err(JelError::Validation("permutation test needs groups of at least 2".into()));
    }
    let n = pooled.n();
    let u_pooled = dm.total() / (n as f64 * (n as f64 - 1.0) / 2.0);
    let identity: Vec<usize> = (0..n).collect();
    let observed = gini_energy_statistic(dm, &identity, &sizes, u_pooled);
    let slack = 1e-12 * observed.abs().max(1e-300);

    let exceed = (0..cfg.num_permutations as u64)
        .into_par_iter()
        .filter(|&j| {
            let mut rng = cfg.rng.substream(j).rng();
            let mut order = identity.clone();
            order.shuffle(&mut rng);
            gini_energy_statistic(dm, &order, &sizes, u_pooled) >= observed - slack
        })
        .count();

    let p_value = (1 + exceed) as f64 / (cfg.num_permutations + 1) as f64;
    let df = (pooled.k() - 1) as u32;
    Ok(TestResult::from_p_value(observed, df, p_value, alpha))
}

/// How multivariate observations are reduced to one number for the rank
/// tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Reduction {
    /// Euclidean norm of each observation.
    #[default]
    Norm,
    /// First coordinate only.
    First,
}

impl FromStr for Reduction {
    type Err = JelError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "norm" => Ok(Reduction::Norm),
            "first" => Ok(Reduction::First),
            other => Err(JelError::Domain(format!("unknown reduction '{other}' (norm|first)"))),
        }
    }
}

/// Univariate values and group labels of the pooled data. One-dimensional
/// data passes through unchanged.
pub fn univariate(pooled: &PooledData, reduction: Reduction) -> (Vec<f64>, Vec<usize>) {
    let points = pooled.points();
    let values = if pooled.dim() == 1 {
        points.column(0).to_vec()
    } else {
        match reduction {
            Reduction::Norm => points
                .rows()
                .into_iter()
                .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
                .collect(),
            Reduction::First => points.column(0).to_vec(),
        }
    };
    (values, pooled.labels())
}

/// Relabels arbitrary group ids to 0..K in order of first appearance and
/// returns group sizes.
fn dense_labels(labels: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut map = BTreeMap::new();
    let mut sizes = Vec::new();
    let dense = labels
        .iter()
        .map(|l| {
            let next = map.len();
            let k = *map.entry(*l).or_insert(next);
            if k == sizes.len() {
                sizes.push(0);
            }
            sizes[k] += 1;
            k
        })
        .collect();
    (dense, sizes)
}

fn check_univariate(values: &[f64], labels: &[usize]) -> Result<()> {
    if values.len() != labels.len() {
        return Err(JelError::Validation(format!(
            "{} values but {} labels",
            values.len(),
            labels.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(JelError::Validation("non-finite value".into()));
    }
    Ok(())
}

/// Midranks (1-based) and the tie sizes of the sorted values.
fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j + 1) as f64 / 2.0;
        for &o in &order[i..j] {
            ranks[o] = r;
        }
        ties.push(j - i);
        i = j;
    }
    (ranks, ties)
}

/// Kruskal–Wallis H with midranks and the usual tie correction, referred to
/// χ²_{K−1}.
pub fn kruskal_wallis(values: &[f64], labels: &[usize], alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    check_univariate(values, labels)?;
    let (groups, sizes) = dense_labels(labels);
    let k = sizes.len();
    let n = values.len();
    if k < 2 || n < k {
        return Err(JelError::Validation(format!(
            "Kruskal–Wallis needs at least 2 groups and n >= K (K = {k}, n = {n})"
        )));
    }
    let df = (k - 1) as u32;
    let (ranks, ties) = midranks(values);
    let nf = n as f64;
    let tie_sum: f64 = ties.iter().map(|&t| (t as f64).powi(3) - t as f64).sum();
    let correction = 1.0 - tie_sum / (nf.powi(3) - nf);
    if correction <= 0.0 {
        // every value identical
        return Ok(TestResult::from_p_value(0.0, df, 1.0, alpha));
    }
    let mut rank_sums = vec![0.0; k];
    for (g, r) in groups.iter().zip(&ranks) {
        rank_sums[*g] += r;
    }
    let centre = (nf + 1.0) / 2.0;
    let h: f64 = rank_sums
        .iter()
        .zip(&sizes)
        .map(|(s, &m)| m as f64 * (s / m as f64 - centre).powi(2))
        .sum::<f64>()
        * 12.0
        / (nf * (nf + 1.0));
    TestResult::from_chi_square(h / correction, df, alpha)
}

/// Raw and standardized k-sample Anderson–Darling statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdStatistic {
    /// Midrank (discrete) version A²_akN.
    pub a2: f64,
    /// `(A² − (K − 1)) / σ_N`.
    pub standardized: f64,
    pub sigma: f64,
}

/// A²_akN of Scholz and Stephens (midrank version) and its standardization.
pub fn anderson_darling_statistic(values: &[f64], labels: &[usize]) -> Result<AdStatistic> {
    check_univariate(values, labels)?;
    let (groups, sizes) = dense_labels(labels);
    let k = sizes.len();
    if k < 2 {
        return Err(JelError::Validation("Anderson–Darling needs at least 2 groups".into()));
    }
    let n = values.len();
    let nf = n as f64;

    let mut z: Vec<f64> = values.to_vec();
    z.sort_by(f64::total_cmp);
    let mut distinct: Vec<f64> = z.clone();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(JelError::Domain("all observations are tied".into()));
    }

    // per distinct value: multiplicity l_j and midrank position B_j
    let mut lj = Vec::with_capacity(distinct.len());
    let mut bj = Vec::with_capacity(distinct.len());
    let mut pos = 0usize;
    for &v in &distinct {
        let start = pos;
        while pos < n && z[pos] == v {
            pos += 1;
        }
        let l = (pos - start) as f64;
        lj.push(l);
        bj.push(start as f64 + l / 2.0);
    }

    let mut a2 = 0.0;
    for g in 0..k {
        let mut s: Vec<f64> = values
            .iter()
            .zip(&groups)
            .filter(|(_, &gg)| gg == g)
            .map(|(v, _)| *v)
            .collect();
        s.sort_by(f64::total_cmp);
        let ni = s.len() as f64;
        let mut inner = 0.0;
        let mut below = 0usize;
        for (j, &v) in distinct.iter().enumerate() {
            while below < s.len() && s[below] < v {
                below += 1;
            }
            let mut at = below;
            while at < s.len() && s[at] == v {
                at += 1;
            }
            let fij = (at - below) as f64;
            let mij = at as f64 - fij / 2.0;
            let num = (nf * mij - bj[j] * ni).powi(2);
            let den = bj[j] * (nf - bj[j]) - nf * lj[j] / 4.0;
            inner += lj[j] / nf * num / den;
        }
        a2 += inner / ni;
    }
    a2 *= (nf - 1.0) / nf;

    // variance of A² under the null (Scholz & Stephens)
    let kf = k as f64;
    let h_big: f64 = sizes.iter().map(|&m| 1.0 / m as f64).sum();
    let h: f64 = (1..n).map(|i| 1.0 / i as f64).sum();
    let mut g = 0.0;
    for i in 1..n.saturating_sub(1) {
        let mut inner = 0.0;
        for j in (i + 1)..n {
            inner += 1.0 / ((n - i) as f64 * j as f64);
        }
        g += inner;
    }
    let a = (4.0 * g - 6.0) * (kf - 1.0) + (10.0 - 6.0 * g) * h_big;
    let b = (2.0 * g - 4.0) * kf * kf + 8.0 * h * kf + (2.0 * g - 14.0 * h - 4.0) * h_big - 8.0 * h
        + 4.0 * g
        - 6.0;
    let c = (6.0 * h + 2.0 * g - 2.0) * kf * kf + (4.0 * h - 4.0 * g + 6.0) * kf + (2.0 * h - 6.0) * h_big
        + 4.0 * h;
    let d = (2.0 * h + 6.0) * kf * kf - 4.0 * h * kf;
    let var = (a * nf.powi(3) + b * nf.powi(2) + c * nf + d) / ((nf - 1.0) * (nf - 2.0) * (nf - 3.0));
    let sigma = var.sqrt();
    Ok(AdStatistic {
        a2,
        standardized: (a2 - (kf - 1.0)) / sigma,
        sigma,
    })
}

const AD_LEVELS: [f64; 7] = [0.25, 0.1, 0.05, 0.025, 0.01, 0.005, 0.001];
const AD_B0: [f64; 7] = [0.675, 1.281, 1.645, 1.96, 2.326, 2.573, 3.085];
const AD_B1: [f64; 7] = [-0.245, 0.25, 0.678, 1.149, 1.822, 2.364, 3.615];
const AD_B2: [f64; 7] = [-0.105, -0.305, -0.362, -0.391, -0.396, -0.345, -0.154];

/// Asymptotic p-value of the standardized statistic: log p is fitted by a
/// quadratic in the tabulated critical values for `m = K − 1`, and
/// continued linearly from the end of the table outside its range.
pub fn anderson_darling_pvalue(standardized: f64, m: usize) -> f64 {
    let mf = m as f64;
    let crit: Vec<f64> = (0..7)
        .map(|i| AD_B0[i] + AD_B1[i] / mf.sqrt() + AD_B2[i] / mf)
        .collect();
    // least squares for log(level) = c0 + c1 t + c2 t²
    let mut ata = Matrix3::zeros();
    let mut aty = Vector3::zeros();
    for (t, lvl) in crit.iter().zip(AD_LEVELS) {
        let row = Vector3::new(1.0, *t, t * t);
        ata += row * row.transpose();
        aty += row * lvl.ln();
    }
    let coef = ata.lu().solve(&aty).expect("critical values are distinct");
    let poly = |t: f64| coef[0] + coef[1] * t + coef[2] * t * t;
    let slope = |t: f64| coef[1] + 2.0 * coef[2] * t;
    let (lo, hi) = (crit[0], crit[6]);
    let log_p = if standardized < lo {
        poly(lo) + slope(lo) * (standardized - lo)
    } else if standardized > hi {
        poly(hi) + slope(hi) * (standardized - hi)
    } else {
        poly(standardized)
    };
    log_p.exp().min(1.0)
}

/// k-sample Anderson–Darling test; the reported statistic is the
/// standardized A²_akN.
pub fn anderson_darling_ksample(values: &[f64], labels: &[usize], alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    let stat = anderson_darling_statistic(values, labels)?;
    let m = dense_labels(labels).1.len() - 1;
    let p = anderson_darling_pvalue(stat.standardized, m);
    Ok(TestResult::from_p_value(stat.standardized, m as u32, p, alpha))
}
