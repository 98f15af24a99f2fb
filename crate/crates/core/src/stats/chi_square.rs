use crate::error::{JelError, Result};

const EPS: f64 = 1e-16;
const FPMIN: f64 = 1e-300;
const MAX_TERMS: usize = 10_000;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function (Lanczos approximation, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).abs().ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Lower regularized incomplete gamma P(a, x) by its power series.
fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..MAX_TERMS {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Upper regularized incomplete gamma Q(a, x) by continued fraction
/// (modified Lentz).
fn gamma_q_cf(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_TERMS {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

fn check_df(df: u32) -> Result<()> {
    if df == 0 {
        return Err(JelError::Domain("chi-square df must be at least 1".into()));
    }
    Ok(())
}

/// Survival function P(χ²_df > x).
pub fn chi_square_sf(x: f64, df: u32) -> Result<f64> {
    check_df(df)?;
    if !(x >= 0.0) {
        return Err(JelError::Domain(format!(
            "chi-square argument must be non-negative, got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    let a = 0.5 * df as f64;
    let xg = 0.5 * x;
    // series below the mean, continued fraction above it
    let sf = if x < df as f64 {
        1.0 - gamma_p_series(a, xg)
    } else {
        gamma_q_cf(a, xg)
    };
    Ok(sf.clamp(0.0, 1.0))
}

fn chi_square_pdf(x: f64, df: u32) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let a = 0.5 * df as f64;
    let xg = 0.5 * x;
    0.5 * ((a - 1.0) * xg.ln() - xg - ln_gamma(a)).exp()
}

/// The value x with P(χ²_df ≤ x) = p.
pub fn chi_square_quantile(p: f64, df: u32) -> Result<f64> {
    check_df(df)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(JelError::Domain(format!(
            "quantile probability must lie in (0, 1), got {p}"
        )));
    }
    let target = 1.0 - p;
    let f = |x: f64| chi_square_sf(x, df).map(|s| s - target);

    let mut lo = 0.0;
    let mut hi = (df as f64).max(1.0);
    while f(hi)? > 0.0 {
        lo = hi;
        hi *= 2.0;
    }

    // Newton on the survival function, falling back to bisection whenever
    // a step leaves the bracket.
    let mut x = 0.5 * (lo + hi);
    for _ in 0..500 {
        let fx = f(x)?;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let pdf = chi_square_pdf(x, df);
        let newton = x + fx / pdf;
        let next = if pdf > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 1e-15 * x.max(1e-300) || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Chi-square distribution with a positive integer number of degrees of
/// freedom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChiSquare {
    df: u32,
}

impl ChiSquare {
    pub fn new(df: u32) -> Result<Self> {
        check_df(df)?;
        Ok(Self { df })
    }

    pub fn df(&self) -> u32 {
        self.df
    }

    pub fn sf(&self, x: f64) -> Result<f64> {
        chi_square_sf(x, self.df)
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        Ok(1.0 - chi_square_sf(x, self.df)?)
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        chi_square_quantile(p, self.df)
    }
}
