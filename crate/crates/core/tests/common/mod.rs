//! Independent reference implementations used by the integration tests.
//! None of these call into the library's solvers.

#![allow(dead_code)]

use rand::Rng;
use rand_distr::StandardNormal;

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Mean pairwise distance over all unordered pairs.
pub fn naive_u(points: &[Vec<f64>]) -> f64 {
    let m = points.len();
    let mut s = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            s += dist(&points[i], &points[j]);
        }
    }
    s / (m * (m - 1) / 2) as f64
}

/// Pseudo-values by recomputing every leave-one-out U-statistic.
pub fn naive_pseudo_values(points: &[Vec<f64>]) -> Vec<f64> {
    let m = points.len() as f64;
    let u = naive_u(points);
    (0..points.len())
        .map(|i| {
            let rest: Vec<Vec<f64>> = points
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, p)| p.clone())
                .collect();
            m * u - (m - 1.0) * naive_u(&rest)
        })
        .collect()
}

/// λ solving Σ d/(1+λd) = 0 by plain bisection on the open feasibility
/// interval, to an absolute width of `tol`.
pub fn bisect_lambda(v: &[f64], theta: f64, tol: f64) -> f64 {
    let lo_v = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi_v = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut lo = -1.0 / (hi_v - theta);
    let mut hi = 1.0 / (theta - lo_v);
    let f = |l: f64| v.iter().map(|x| (x - theta) / (1.0 + l * (x - theta))).sum::<f64>();
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid == lo || mid == hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// −2 log of the profile likelihood ratio at a fixed θ.
pub fn profile_neg2(vectors: &[Vec<f64>], theta: f64) -> f64 {
    vectors
        .iter()
        .map(|v| {
            let l = bisect_lambda(v, theta, 1e-14);
            2.0 * v.iter().map(|x| (l * (x - theta)).ln_1p()).sum::<f64>()
        })
        .sum()
}

/// Minimum of the θ-profile by a coarse grid over the feasibility interval
/// followed by a grid of step 1e-4 (relative to the interval width)
/// around the best coarse point.
pub fn grid_profile_oracle(vectors: &[Vec<f64>]) -> Option<(f64, f64)> {
    let lo = vectors
        .iter()
        .map(|v| v.iter().cloned().fold(f64::INFINITY, f64::min))
        .fold(f64::NEG_INFINITY, f64::max);
    let hi = vectors
        .iter()
        .map(|v| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        .fold(f64::INFINITY, f64::min);
    if !(lo < hi) {
        return None;
    }
    let width = hi - lo;
    let coarse = 400;
    let mut best = (f64::INFINITY, lo);
    for i in 1..coarse {
        let t = lo + width * i as f64 / coarse as f64;
        let val = profile_neg2(vectors, t);
        if val < best.0 {
            best = (val, t);
        }
    }
    let step = 1e-4 * width;
    let from = (best.1 - width / coarse as f64).max(lo + step);
    let to = (best.1 + width / coarse as f64).min(hi - step);
    let mut t = from;
    while t <= to {
        let val = profile_neg2(vectors, t);
        if val < best.0 {
            best = (val, t);
        }
        t += step;
    }
    Some(best)
}

pub fn normal_points<R: Rng>(m: usize, d: usize, sd: f64, shift: f64, rng: &mut R) -> Vec<Vec<f64>> {
    (0..m)
        .map(|_| {
            (0..d)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    shift + sd * z
                })
                .collect()
        })
        .collect()
}

/// Kolmogorov–Smirnov distance between a sample and a CDF.
pub fn ks_distance(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}
