use ndarray::Array2;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Exp, StandardNormal};

use crate::error::{JelError, Result};

fn check_count(n: usize, dim: usize) -> Result<()> {
    if n == 0 || dim == 0 {
        return Err(JelError::Domain(format!(
            "sample size and dimension must be positive (n = {n}, d = {dim})"
        )));
    }
    Ok(())
}

/// `n` draws from N(mean, scale · I).
///
/// `scale` is the common variance of every coordinate.
pub fn sample_mvnormal<R: Rng + ?Sized>(
    mean: &[f64],
    scale: f64,
    n: usize,
    rng: &mut R,
) -> Result<Array2<f64>> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(JelError::Domain(format!("normal scale must be positive, got {scale}")));
    }
    check_count(n, mean.len())?;
    let sd = scale.sqrt();
    let dim = mean.len();
    let mut out = Array2::zeros((n, dim));
    for mut row in out.rows_mut() {
        for (j, x) in row.iter_mut().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            *x = mean[j] + sd * z;
        }
    }
    Ok(out)
}

/// `n` draws from the centred multivariate t with `df` degrees of freedom
/// and scale matrix `scale · I`: `sqrt(scale) · Z / sqrt(W / df)` with one
/// chi-square `W` shared across the coordinates of each observation.
pub fn sample_mvt<R: Rng + ?Sized>(
    df: u32,
    scale: f64,
    dim: usize,
    n: usize,
    rng: &mut R,
) -> Result<Array2<f64>> {
    if df < 3 {
        return Err(JelError::Domain(format!(
            "multivariate t needs df >= 3 for finite variance, got {df}"
        )));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(JelError::Domain(format!("t scale must be positive, got {scale}")));
    }
    check_count(n, dim)?;
    let chi = ChiSquared::new(df as f64).map_err(|e| JelError::Domain(e.to_string()))?;
    let sd = scale.sqrt();
    let mut out = Array2::zeros((n, dim));
    for mut row in out.rows_mut() {
        for x in row.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *x = z;
        }
        let w: f64 = chi.sample(rng);
        let factor = sd / (w / df as f64).sqrt();
        row.mapv_inplace(|z| z * factor);
    }
    Ok(out)
}

/// `n` draws of `dim` independent exponential components with the given
/// rate (mean `1 / rate`).
pub fn sample_mvexp<R: Rng + ?Sized>(
    rate: f64,
    dim: usize,
    n: usize,
    rng: &mut R,
) -> Result<Array2<f64>> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(JelError::Domain(format!("exponential rate must be positive, got {rate}")));
    }
    check_count(n, dim)?;
    let exp = Exp::new(rate).map_err(|e| JelError::Domain(e.to_string()))?;
    let mut out = Array2::zeros((n, dim));
    for x in out.iter_mut() {
        // Exp can return exactly 0 only with probability ~2^-53; resample
        let mut v: f64 = exp.sample(rng);
        while v <= 0.0 {
            v = exp.sample(rng);
        }
        *x = v;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::RngStream;
    use ndarray::Axis;

    fn col_mean_var(x: &Array2<f64>) -> Vec<(f64, f64)> {
        x.axis_iter(Axis(1))
            .map(|c| {
                let n = c.len() as f64;
                let m = c.sum() / n;
                let v = c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
                (m, v)
            })
            .collect()
    }

    #[test]
    fn normal_moments() {
        let mut rng = RngStream::new(11, 0).rng();
        let x = sample_mvnormal(&[0.0; 3], 1.0, 100_000, &mut rng).unwrap();
        for (m, _) in col_mean_var(&x) {
            assert!(m.abs() < 0.02, "mean {m}");
        }
        let x = sample_mvnormal(&[0.0; 3], 2.0, 100_000, &mut rng).unwrap();
        for (_, v) in col_mean_var(&x) {
            assert!((v - 2.0).abs() < 0.06, "var {v}");
        }
    }

    #[test]
    fn normal_is_repeatable() {
        let a = sample_mvnormal(&[0.0], 1.0, 1, &mut RngStream::new(5, 3).rng()).unwrap();
        let b = sample_mvnormal(&[0.0], 1.0, 1, &mut RngStream::new(5, 3).rng()).unwrap();
        assert_eq!(a[[0, 0]].to_bits(), b[[0, 0]].to_bits());
    }

    #[test]
    fn normal_rejects_bad_scale() {
        let mut rng = RngStream::new(0, 0).rng();
        assert!(sample_mvnormal(&[0.0], 0.0, 5, &mut rng).is_err());
        assert!(sample_mvnormal(&[0.0], -1.0, 5, &mut rng).is_err());
    }

    #[test]
    fn t_moments() {
        let mut rng = RngStream::new(12, 0).rng();
        let x = sample_mvt(5, 1.0, 2, 200_000, &mut rng).unwrap();
        for (m, v) in col_mean_var(&x) {
            assert!(m.abs() < 0.02, "mean {m}");
            assert!((v - 5.0 / 3.0).abs() < 0.05, "var {v}");
        }
    }

    #[test]
    fn t_requires_finite_variance() {
        let mut rng = RngStream::new(0, 0).rng();
        assert!(sample_mvt(2, 1.0, 1, 10, &mut rng).is_err());
    }

    #[test]
    fn exponential_rate_convention() {
        let mut rng = RngStream::new(13, 0).rng();
        let x = sample_mvexp(1.0, 1, 200_000, &mut rng).unwrap();
        assert!(x.iter().all(|&v| v > 0.0));
        assert!((x.mean().unwrap() - 1.0).abs() < 0.01);
        let y = sample_mvexp(2.0, 1, 200_000, &mut rng).unwrap();
        assert!((y.mean().unwrap() - 0.5).abs() < 0.01);
        assert!(sample_mvexp(0.0, 1, 10, &mut rng).is_err());
    }
}
