//! Distance-kernel U-statistics, the Gini statistic S and the categorical
//! Gini correlation, plus the two-sample energy distance.

use ndarray::ArrayView2;

use crate::data::{DistanceMatrix, PooledData};
use crate::error::{JelError, Result};

fn pairs(m: usize) -> f64 {
    let m = m as f64;
    m * (m - 1.0) / 2.0
}

/// Estimates of the pooled and per-group Gini distances and of S and ρ_g.
#[derive(Debug, Clone, PartialEq)]
pub struct GiniStats {
    pub u_pooled: f64,
    pub u_group: Vec<f64>,
    pub s_hat: f64,
    /// `s_hat / u_pooled`; NaN when every pooled distance is zero.
    pub rho_hat: f64,
}

/// Mean pairwise distance, the unbiased estimate of E‖X₁ − X₂‖.
pub fn u_statistic(dm: &DistanceMatrix) -> Result<f64> {
    if dm.n() < 2 {
        return Err(JelError::Domain("U-statistic needs at least 2 points".into()));
    }
    Ok(dm.total() / pairs(dm.n()))
}

/// U-statistic of the points at `indices` read from the pooled matrix.
pub fn u_statistic_on(dm: &DistanceMatrix, indices: &[usize]) -> Result<f64> {
    if indices.len() < 2 {
        return Err(JelError::Domain("U-statistic needs at least 2 points".into()));
    }
    Ok(dm.restricted_total(indices) / pairs(indices.len()))
}

/// S estimate `U_n − Σ α̂_k U_{n_k}` with group statistics taken from the
/// pooled matrix.
pub fn gini_statistic(pooled: &PooledData, dm: &DistanceMatrix) -> Result<GiniStats> {
    if dm.n() != pooled.n() {
        return Err(JelError::Validation(format!(
            "distance matrix has {} rows but pooled data has {}",
            dm.n(),
            pooled.n()
        )));
    }
    let u_pooled = u_statistic(dm)?;
    let u_group = (0..pooled.k())
        .map(|k| {
            let idx: Vec<usize> = pooled.group_range(k).collect();
            u_statistic_on(dm, &idx)
        })
        .collect::<Result<Vec<_>>>()?;
    let weighted: f64 = pooled
        .alpha_hat()
        .iter()
        .zip(&u_group)
        .map(|(a, u)| a * u)
        .sum();
    let s_hat = u_pooled - weighted;
    let rho_hat = if u_pooled > 0.0 { s_hat / u_pooled } else { f64::NAN };
    Ok(GiniStats {
        u_pooled,
        u_group,
        s_hat,
        rho_hat,
    })
}

fn mean_within(x: ArrayView2<'_, f64>) -> f64 {
    let n = x.nrows();
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            total += dist(x.row(i), x.row(j));
        }
    }
    total / pairs(n)
}

fn dist(a: ndarray::ArrayView1<'_, f64>, b: ndarray::ArrayView1<'_, f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// U-statistic plug-in for 2E‖X − Y‖ − E‖X − X′‖ − E‖Y − Y′‖.
pub fn energy_distance(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<f64> {
    if x.nrows() < 2 || y.nrows() < 2 {
        return Err(JelError::Domain(format!(
            "energy distance needs at least 2 points per sample (got {} and {})",
            x.nrows(),
            y.nrows()
        )));
    }
    if x.ncols() != y.ncols() {
        return Err(JelError::Validation("samples differ in dimension".into()));
    }
    let mut cross = 0.0;
    for xi in x.rows() {
        for yj in y.rows() {
            cross += dist(xi, yj);
        }
    }
    let cross = cross / (x.nrows() * y.nrows()) as f64;
    Ok(2.0 * cross - mean_within(x) - mean_within(y))
}
