//! Bracketed scalar root finding (Brent's method).

use crate::error::{JelError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
}

/// Brent's method on `[a, b]` given `f(a)` and `f(b)` of opposite sign.
///
/// Stops when `|f(x)| <= ftol`, when the bracket is narrower than
/// `xtol` plus a few ulps, or after `max_iter` evaluations.
pub fn brent<F>(
    mut f: F,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    xtol: f64,
    ftol: f64,
    max_iter: usize,
) -> Result<Root>
where
    F: FnMut(f64) -> Result<f64>,
{
    if fa == 0.0 {
        return Ok(Root { x: a, fx: fa, iterations: 0 });
    }
    if fb == 0.0 {
        return Ok(Root { x: b, fx: fb, iterations: 0 });
    }
    if fa.signum() == fb.signum() {
        return Err(JelError::NonConvergence {
            iterations: 0,
            lo: a,
            hi: b,
            detail: format!("no sign change: f(lo) = {fa:e}, f(hi) = {fb:e}"),
        });
    }

    let (mut a, mut b, mut fa, mut fb) = (a, b, fa, fb);
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;

    for iter in 1..=max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 || fb.abs() <= ftol {
            return Ok(Root { x: b, fx: fb, iterations: iter });
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b)?;
    }
    Err(JelError::NonConvergence {
        iterations: max_iter,
        lo: b.min(c),
        hi: b.max(c),
        detail: format!("Brent iteration limit, |f| = {:e}", fb.abs()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(f: impl Fn(f64) -> f64, a: f64, b: f64) -> Root {
        brent(|x| Ok(f(x)), a, b, f(a), f(b), 0.0, 0.0, 200).unwrap()
    }

    #[test]
    fn sqrt_two() {
        let r = solve(|x| x * x - 2.0, 0.0, 2.0);
        assert!((r.x - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn steep_monotone() {
        let r = solve(|x| (x - 0.3).powi(3) * 1e6 + (x - 0.3), -5.0, 5.0);
        assert!((r.x - 0.3).abs() < 1e-12);
    }

    #[test]
    fn endpoint_root() {
        let r = solve(|x| x - 1.0, 1.0, 3.0);
        assert_eq!(r.x, 1.0);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn no_sign_change() {
        let f = |x: f64| x * x + 1.0;
        assert!(brent(|x| Ok(f(x)), -1.0, 1.0, f(-1.0), f(1.0), 0.0, 0.0, 50).is_err());
    }

    #[test]
    fn iteration_limit() {
        let f = |x: f64| x.powi(3) - 0.123;
        let err = brent(|x| Ok(f(x)), -10.0, 10.0, f(-10.0), f(10.0), 0.0, 0.0, 2).unwrap_err();
        assert!(matches!(err, JelError::NonConvergence { .. }));
    }
}
