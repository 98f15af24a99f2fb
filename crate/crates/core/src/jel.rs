//! Jackknife empirical likelihood for the K-sample problem.
//!
//! The empirical likelihood puts weights on the pooled pseudo-values and on
//! every group's pseudo-values, each weighted mean constrained to a common
//! `theta`. With Lagrange multipliers the weights are
//! `p_i = 1 / (n (1 + λ (V_i − θ)))` and likewise per group, and the
//! multipliers solve K + 2 estimating equations.
//!
//! The system is solved by nesting: for a fixed `theta` each multiplier is
//! the unique root of a strictly decreasing function on its feasibility
//! interval, and the remaining equation `G(theta) = 0` is one-dimensional.
//! `G` is the derivative of the profile log-likelihood in `theta` and is
//! increasing on the feasibility interval, so its root is bracketed by the
//! interval ends, where `G` tends to ∓∞.

use serde::Serialize;

use crate::data::{pairwise_distances, PooledData};
use crate::error::{JelError, Result};
use crate::jackknife::{all_pseudo_values, PseudoValues};
use crate::roots::brent;
use crate::test_result::{check_alpha, TestResult};

/// Tolerances for the nested solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Root tolerance of each multiplier equation, per observation.
    pub inner_tol: f64,
    /// Bound on every residual of the estimating equations (1/n scaled).
    pub outer_tol: f64,
    /// Iteration cap of every root search.
    pub max_iter: usize,
    /// Relative inward offset of the `theta` bracket from the poles.
    pub bracket_margin: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            inner_tol: 1e-12,
            outer_tol: 1e-10,
            max_iter: 200,
            bracket_margin: 1e-9,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.inner_tol > 0.0 && self.outer_tol > 0.0) {
            return Err(JelError::Domain("solver tolerances must be positive".into()));
        }
        if !(self.bracket_margin > 0.0 && self.bracket_margin < 0.5) {
            return Err(JelError::Domain(format!(
                "bracket margin must lie in (0, 0.5), got {}",
                self.bracket_margin
            )));
        }
        if self.max_iter == 0 {
            return Err(JelError::Domain("max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// Solved multipliers and the likelihood ratio statistic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JelSolution {
    pub theta: f64,
    pub lambda_pooled: f64,
    pub lambda_group: Vec<f64>,
    /// −2 log R.
    pub neg2_log_r: f64,
    /// The K + 2 estimating functions at the solution, each divided by n:
    /// pooled, groups 1..K, then the `theta` equation.
    pub residuals: Vec<f64>,
    pub converged: bool,
    /// Total inner plus outer iterations.
    pub iterations: usize,
}

impl JelSolution {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()))
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// `Σ (v_i − θ) / (1 + λ (v_i − θ))`.
pub fn lambda_equation(v: &[f64], theta: f64, lambda: f64) -> f64 {
    v.iter()
        .map(|&x| {
            let d = x - theta;
            d / (1.0 + lambda * d)
        })
        .sum()
}

fn inner_solve(v: &[f64], theta: f64, cfg: &SolverConfig) -> Result<(f64, usize)> {
    let (vmin, vmax) = min_max(v);
    if !(vmin < theta && theta < vmax) {
        return Err(JelError::InfeasibleTheta {
            theta,
            min: vmin,
            max: vmax,
        });
    }
    let n = v.len() as f64;
    let tol = cfg.inner_tol * n;
    // open feasibility interval of λ
    let mut lo = -1.0 / (vmax - theta);
    let mut hi = 1.0 / (theta - vmin);
    let mut lambda = 0.0;

    for iter in 1..=cfg.max_iter {
        let mut f = 0.0;
        let mut df = 0.0;
        for &x in v {
            let d = x - theta;
            let q = 1.0 / (1.0 + lambda * d);
            f += d * q;
            df -= d * d * q * q;
        }
        if f.abs() <= tol {
            return Ok((lambda, iter));
        }
        // f is strictly decreasing in λ
        if f > 0.0 {
            lo = lambda;
        } else {
            hi = lambda;
        }
        let newton = lambda - f / df;
        let next = if df < 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if next == lambda || hi - lo <= 4.0 * f64::EPSILON * lambda.abs().max(f64::MIN_POSITIVE) {
            // bracket exhausted at machine precision
            return Ok((next, iter));
        }
        lambda = next;
    }
    Err(JelError::NonConvergence {
        iterations: cfg.max_iter,
        lo,
        hi,
        detail: format!("multiplier equation at theta = {theta}"),
    })
}

/// The multiplier λ solving `Σ (v_i − θ) / (1 + λ (v_i − θ)) = 0` inside
/// its feasibility interval `(−1 / (max v − θ), 1 / (θ − min v))`.
pub fn inner_lambda(v: &[f64], theta: f64, cfg: &SolverConfig) -> Result<f64> {
    inner_solve(v, theta, cfg).map(|(l, _)| l)
}

/// The open interval of `theta` where every pseudo-value vector straddles
/// `theta`: (max of minima, min of maxima).
pub fn feasibility_interval(pv: &PseudoValues) -> Result<(f64, f64)> {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for v in pv.vectors() {
        let (a, b) = min_max(v);
        lo = lo.max(a);
        hi = hi.min(b);
    }
    if !(lo < hi) {
        return Err(JelError::DegenerateData(format!(
            "empty feasibility interval for theta: [{lo}, {hi}] \
             (some pseudo-value vector has no spread or the vectors do not overlap)"
        )));
    }
    Ok((lo, hi))
}

struct Profile {
    lambdas: Vec<f64>,
    g: f64,
    iterations: usize,
}

/// Multipliers at `theta` and the `theta` equation
/// `−λ Σ 1/(1+λ d_i) − Σ_k λ_k Σ_l 1/(1+λ_k d_kl)`.
fn profile_at(pv: &PseudoValues, theta: f64, cfg: &SolverConfig) -> Result<Profile> {
    let mut lambdas = Vec::with_capacity(pv.k() + 1);
    let mut g = 0.0;
    let mut iterations = 0;
    for v in pv.vectors() {
        let (lambda, it) = inner_solve(v, theta, cfg)?;
        iterations += it;
        let s: f64 = v.iter().map(|&x| 1.0 / (1.0 + lambda * (x - theta))).sum();
        g -= lambda * s;
        lambdas.push(lambda);
    }
    Ok(Profile {
        lambdas,
        g,
        iterations,
    })
}

fn log_ratio_terms(v: &[f64], theta: f64, lambda: f64) -> Result<f64> {
    let mut acc = 0.0;
    for &x in v {
        let arg = lambda * (x - theta);
        if !(1.0 + arg > 0.0) {
            return Err(JelError::Feasibility(format!(
                "1 + λ(V − θ) = {} at λ = {lambda}, θ = {theta}",
                1.0 + arg
            )));
        }
        acc += arg.ln_1p();
    }
    Ok(2.0 * acc)
}

fn neg2_log_r_at(pv: &PseudoValues, theta: f64, lambdas: &[f64]) -> Result<f64> {
    pv.vectors()
        .zip(lambdas)
        .map(|(v, &l)| log_ratio_terms(v, theta, l))
        .sum()
}

/// Evaluates all K + 2 estimating functions (each divided by n) at a point.
pub fn estimating_equations(
    pv: &PseudoValues,
    theta: f64,
    lambda_pooled: f64,
    lambda_group: &[f64],
) -> Vec<f64> {
    let n = pv.pooled.len() as f64;
    let mut out = Vec::with_capacity(pv.k() + 2);
    out.push(lambda_equation(&pv.pooled, theta, lambda_pooled) / n);
    for (g, &l) in pv.groups.iter().zip(lambda_group) {
        out.push(lambda_equation(g, theta, l) / n);
    }
    let inv_sum = |v: &[f64], l: f64| v.iter().map(|&x| 1.0 / (1.0 + l * (x - theta))).sum::<f64>();
    let mut g = -lambda_pooled * inv_sum(&pv.pooled, lambda_pooled);
    for (v, &l) in pv.groups.iter().zip(lambda_group) {
        g -= l * inv_sum(v, l);
    }
    out.push(g / n);
    out
}

fn build_solution(pv: &PseudoValues, theta: f64, prof: Profile, iterations: usize, cfg: &SolverConfig) -> Result<JelSolution> {
    let neg2 = neg2_log_r_at(pv, theta, &prof.lambdas)?;
    let lambda_pooled = prof.lambdas[0];
    let lambda_group = prof.lambdas[1..].to_vec();
    let residuals = estimating_equations(pv, theta, lambda_pooled, &lambda_group);
    let mut sol = JelSolution {
        theta,
        lambda_pooled,
        lambda_group,
        neg2_log_r: neg2.max(0.0),
        residuals,
        converged: false,
        iterations,
    };
    sol.converged = sol.max_residual() <= cfg.outer_tol;
    Ok(sol)
}

/// Solves the K + 2 Lagrange equations for `(θ, λ, λ_1..λ_K)`.
pub fn solve_system(pv: &PseudoValues, cfg: &SolverConfig) -> Result<JelSolution> {
    cfg.validate()?;
    if pv.k() < 1 {
        return Err(JelError::Validation("no groups".into()));
    }
    let (lo, hi) = feasibility_interval(pv)?;
    let n = pv.pooled.len() as f64;
    let ftol = cfg.outer_tol * n;
    let mut iterations = 0usize;

    let mut margin = cfg.bracket_margin;
    let mut bracket = None;
    // G → −∞ at the lower end and +∞ at the upper end; shrink the margin if
    // rounding hides that at the first attempt.
    for _ in 0..4 {
        let width = hi - lo;
        let a = lo + margin * width;
        let b = hi - margin * width;
        if a < b {
            let pa = profile_at(pv, a, cfg)?;
            let pb = profile_at(pv, b, cfg)?;
            iterations += pa.iterations + pb.iterations;
            if pa.g <= 0.0 && pb.g >= 0.0 {
                bracket = Some((a, b, pa.g, pb.g));
                break;
            }
        }
        margin *= 1e-3;
    }

    let theta = match bracket {
        Some((a, b, ga, gb)) => {
            let mut inner_iters = 0usize;
            let root = brent(
                |t| {
                    let p = profile_at(pv, t, cfg)?;
                    inner_iters += p.iterations;
                    Ok(p.g)
                },
                a,
                b,
                ga,
                gb,
                0.0,
                ftol,
                cfg.max_iter,
            )?;
            iterations += inner_iters + root.iterations;
            root.x
        }
        None => minimize_abs_g(pv, lo, hi, cfg, &mut iterations)?,
    };

    let prof = profile_at(pv, theta, cfg)?;
    iterations += prof.iterations;
    let sol = build_solution(pv, theta, prof, iterations, cfg)?;
    if !sol.converged && bracket.is_none() {
        return Err(JelError::NonConvergence {
            iterations,
            lo,
            hi,
            detail: format!(
                "theta equation has no sign change and min |residual| = {:e} exceeds {:e}",
                sol.max_residual(),
                cfg.outer_tol
            ),
        });
    }
    Ok(sol)
}

/// Golden-section search for the smallest |G| on the feasibility interval.
fn minimize_abs_g(pv: &PseudoValues, lo: f64, hi: f64, cfg: &SolverConfig, iterations: &mut usize) -> Result<f64> {
    let width = hi - lo;
    let mut a = lo + 1e-3 * width;
    let mut b = hi - 1e-3 * width;
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut eval = |t: f64| -> Result<f64> {
        let p = profile_at(pv, t, cfg)?;
        *iterations += p.iterations + 1;
        Ok(p.g.abs())
    };
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    for _ in 0..cfg.max_iter {
        if (b - a).abs() <= 4.0 * f64::EPSILON * (a.abs() + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = eval(d)?;
        }
    }
    Ok(if fc < fd { c } else { d })
}

/// −2 log R from a solution: `2 Σ log(1 + λ(V_i − θ)) + 2 Σ_k Σ_l log(1 + λ_k(V_kl − θ))`.
pub fn neg2_log_likelihood(pv: &PseudoValues, sol: &JelSolution) -> Result<f64> {
    if sol.lambda_group.len() != pv.k() {
        return Err(JelError::Validation("solution does not match the pseudo-values".into()));
    }
    let mut lambdas = Vec::with_capacity(pv.k() + 1);
    lambdas.push(sol.lambda_pooled);
    lambdas.extend_from_slice(&sol.lambda_group);
    neg2_log_r_at(pv, sol.theta, &lambdas)
}

/// Empirical likelihood weights implied by a solution: the pooled vector
/// and one vector per group.
pub fn weights(pv: &PseudoValues, sol: &JelSolution) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    if sol.lambda_group.len() != pv.k() {
        return Err(JelError::Validation("solution does not match the pseudo-values".into()));
    }
    let w = |v: &[f64], l: f64| -> Result<Vec<f64>> {
        let m = v.len() as f64;
        v.iter()
            .map(|&x| {
                let denom = 1.0 + l * (x - sol.theta);
                if denom > 0.0 {
                    Ok(1.0 / (m * denom))
                } else {
                    Err(JelError::Feasibility(format!(
                        "non-positive weight denominator {denom} at V = {x}"
                    )))
                }
            })
            .collect()
    };
    let pooled = w(&pv.pooled, sol.lambda_pooled)?;
    let groups = pv
        .groups
        .iter()
        .zip(&sol.lambda_group)
        .map(|(g, &l)| w(g, l))
        .collect::<Result<Vec<_>>>()?;
    Ok((pooled, groups))
}

/// A JEL test with the solver diagnostics that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct JelReport {
    pub result: TestResult,
    pub solution: JelSolution,
    pub group_sizes: Vec<usize>,
}

fn describe(pooled: &PooledData) -> String {
    format!(
        "n = {}, K = {}, d = {}, group sizes = {:?}",
        pooled.n(),
        pooled.k(),
        pooled.dim(),
        pooled.group_sizes()
    )
}

/// Runs the JEL test on pseudo-values already computed.
pub fn jel_test_pseudo(pv: &PseudoValues, alpha: f64, cfg: &SolverConfig) -> Result<(TestResult, JelSolution)> {
    check_alpha(alpha)?;
    let sol = solve_system(pv, cfg)?;
    if !sol.converged {
        return Err(JelError::NonConvergence {
            iterations: sol.iterations,
            lo: sol.theta,
            hi: sol.theta,
            detail: format!(
                "max residual {:e} exceeds tolerance {:e}",
                sol.max_residual(),
                cfg.outer_tol
            ),
        });
    }
    let df = (pv.k() as u32).saturating_sub(1).max(1);
    let result = TestResult::from_chi_square(sol.neg2_log_r, df, alpha)?;
    Ok((result, sol))
}

/// Full JEL K-sample test with diagnostics.
pub fn jel_analyze(pooled: &PooledData, alpha: f64, cfg: &SolverConfig) -> Result<JelReport> {
    let dm = pairwise_distances(pooled.points())?;
    let pv = all_pseudo_values(pooled, &dm)?;
    let (result, solution) = jel_test_pseudo(&pv, alpha, cfg).map_err(|e| match e {
        JelError::NonConvergence {
            iterations,
            lo,
            hi,
            detail,
        } => JelError::NonConvergence {
            iterations,
            lo,
            hi,
            detail: format!("{detail}; {}", describe(pooled)),
        },
        JelError::DegenerateData(m) => JelError::DegenerateData(format!("{m}; {}", describe(pooled))),
        other => other,
    })?;
    Ok(JelReport {
        result,
        solution,
        group_sizes: pooled.group_sizes(),
    })
}

/// JEL K-sample homogeneity test, calibrated by χ²_{K−1}.
pub fn jel_test(pooled: &PooledData, alpha: f64, cfg: &SolverConfig) -> Result<TestResult> {
    jel_analyze(pooled, alpha, cfg).map(|r| r.result)
}
