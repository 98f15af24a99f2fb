//! Matrix algebra behind the χ²_{K−1} limit of the JEL statistic.
//!
//! With group fractions α the quadratic form of the limiting statistic has
//! matrix `Σ₀^{1/2} Aᵀ W₀ A Σ₀^{1/2}`. Since `Aᵀ W₀ A = A` and A is
//! symmetric, its eigenvalues are those of `Σ₀ A`, which are `{0, 0, 1, …, 1}`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{JelError, Result};

/// `Σ₀`, `A` and `W₀` for given group fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct WilksMatrices {
    pub sigma0: DMatrix<f64>,
    pub a_mat: DMatrix<f64>,
    pub w0: DMatrix<f64>,
}

fn check_fractions(alpha: &[f64]) -> Result<()> {
    if alpha.len() < 2 {
        return Err(JelError::Domain(format!(
            "need at least 2 group fractions, got {}",
            alpha.len()
        )));
    }
    if let Some(a) = alpha.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
        return Err(JelError::Domain(format!("group fractions must be positive, got {a}")));
    }
    let total: f64 = alpha.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(JelError::Domain(format!(
            "group fractions must sum to 1, got {total}"
        )));
    }
    Ok(())
}

pub fn build_wilks_matrices(alpha: &[f64]) -> Result<WilksMatrices> {
    check_fractions(alpha)?;
    let k = alpha.len();
    let diag: Vec<f64> = std::iter::once(1.0).chain(alpha.iter().copied()).collect();

    let mut sigma0 = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag.clone()));
    for (i, &a) in alpha.iter().enumerate() {
        sigma0[(0, i + 1)] = a;
        sigma0[(i + 1, 0)] = a;
    }

    let mut a_mat = DMatrix::from_element(k + 1, k + 1, -0.5);
    a_mat[(0, 0)] = 0.5;
    for (i, &a) in alpha.iter().enumerate() {
        a_mat[(i + 1, i + 1)] = 1.0 / a - 0.5;
    }

    let w0 = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag));
    Ok(WilksMatrices { sigma0, a_mat, w0 })
}

/// Outcome of the numerical check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WilksCheck {
    /// Eigenvalues of `Σ₀ A`, ascending.
    pub eigenvalues: Vec<f64>,
    pub trace: f64,
    /// `max |Aᵀ W₀ A − A|`.
    pub identity_residual: f64,
    pub identity_ok: bool,
}

/// Symmetric square root of a positive semidefinite matrix; eigenvalues
/// below zero from rounding are clamped.
fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let root = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&root) * eig.eigenvectors.transpose()
}

/// Eigenvalues of `Σ₀ A` computed on the symmetric similar matrix
/// `Σ₀^{1/2} A Σ₀^{1/2}`. Σ₀ is only semidefinite (its Schur complement
/// `diag(α) − α αᵀ` annihilates the ones vector), so its PSD root is used.
pub fn sigma_a_eigenvalues(m: &WilksMatrices) -> Vec<f64> {
    let root = psd_sqrt(&m.sigma0);
    let sym = &root * &m.a_mat * &root;
    let sym = (&sym + sym.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn verify_wilks(alpha: &[f64]) -> Result<WilksCheck> {
    let m = build_wilks_matrices(alpha)?;
    let eigenvalues = sigma_a_eigenvalues(&m);
    let trace = (&m.sigma0 * &m.a_mat).trace();
    let lhs = m.a_mat.transpose() * &m.w0 * &m.a_mat;
    let identity_residual = (lhs - &m.a_mat).amax();
    Ok(WilksCheck {
        eigenvalues,
        trace,
        identity_residual,
        identity_ok: identity_residual <= 1e-10,
    })
}

/// The (K+2)×(K+2) Jacobian of the estimating equations at the truth, with
/// pooled variance `sigma2` and group variances `sigma2_groups`.
pub fn jacobian_matrix(alpha: &[f64], sigma2: f64, sigma2_groups: &[f64]) -> Result<DMatrix<f64>> {
    check_fractions(alpha)?;
    let k = alpha.len();
    if sigma2_groups.len() != k {
        return Err(JelError::Domain(format!(
            "{} group variances for {k} groups",
            sigma2_groups.len()
        )));
    }
    let mut b = DMatrix::zeros(k + 2, k + 2);
    b[(0, 0)] = sigma2;
    b[(0, k + 1)] = 1.0;
    b[(k + 1, 0)] = 1.0;
    for i in 0..k {
        b[(i + 1, i + 1)] = alpha[i] * sigma2_groups[i];
        b[(i + 1, k + 1)] = alpha[i];
        b[(k + 1, i + 1)] = alpha[i];
    }
    Ok(b)
}

/// Ratio of smallest to largest singular value of the Jacobian; zero means
/// singular.
pub fn jacobian_conditioning(alpha: &[f64], sigma2: f64, sigma2_groups: &[f64]) -> Result<f64> {
    let b = jacobian_matrix(alpha, sigma2, sigma2_groups)?;
    let sv = b.singular_values();
    Ok(sv.min() / sv.max())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_halves() {
        let m = build_wilks_matrices(&[0.5, 0.5]).unwrap();
        assert_eq!(m.a_mat.shape(), (3, 3));
        let d: Vec<f64> = m.a_mat.diagonal().iter().copied().collect();
        assert_eq!(d, vec![0.5, 1.5, 1.5]);
    }

    #[test]
    fn thirds_weight_matrix() {
        let third = 1.0 / 3.0;
        let m = build_wilks_matrices(&[third, third, 1.0 - 2.0 * third]).unwrap();
        let d: Vec<f64> = m.w0.diagonal().iter().copied().collect();
        assert_eq!(d[0], 1.0);
        assert!(d[1..].iter().all(|v| (v - third).abs() < 1e-15));
        assert_eq!(m.sigma0.row(0).iter().copied().collect::<Vec<_>>(), d);
    }

    #[test]
    fn bad_fractions() {
        assert!(build_wilks_matrices(&[0.5, 0.4]).is_err());
        assert!(build_wilks_matrices(&[1.2, -0.2]).is_err());
        assert!(build_wilks_matrices(&[1.0]).is_err());
    }

    #[test]
    fn eigenvalues_three_groups() {
        let third = 1.0 / 3.0;
        let c = verify_wilks(&[third, third, 1.0 - 2.0 * third]).unwrap();
        let want = [0.0, 0.0, 1.0, 1.0];
        for (g, w) in c.eigenvalues.iter().zip(want) {
            assert!((g - w).abs() < 1e-8, "{:?}", c.eigenvalues);
        }
        assert!((c.trace - 2.0).abs() < 1e-10);
        assert!(c.identity_ok);
    }

    #[test]
    fn eigenvalues_unbalanced_pair() {
        let c = verify_wilks(&[0.4, 0.6]).unwrap();
        for (g, w) in c.eigenvalues.iter().zip([0.0, 0.0, 1.0]) {
            assert!((g - w).abs() < 1e-8, "{:?}", c.eigenvalues);
        }
        assert!((c.trace - 1.0).abs() < 1e-10);
    }

    #[test]
    fn symmetric_route_agrees_with_general_solver() {
        let alpha = [0.1, 0.25, 0.3, 0.35];
        let m = build_wilks_matrices(&alpha).unwrap();
        let sym = sigma_a_eigenvalues(&m);
        let mut general: Vec<f64> = (&m.sigma0 * &m.a_mat)
            .complex_eigenvalues()
            .iter()
            .map(|z| {
                assert!(z.im.abs() < 1e-8);
                z.re
            })
            .collect();
        general.sort_by(f64::total_cmp);
        for (a, b) in sym.iter().zip(&general) {
            assert!((a - b).abs() < 1e-8, "{sym:?} vs {general:?}");
        }
    }

    #[test]
    fn jacobian_is_nonsingular_for_positive_variances() {
        let c = jacobian_conditioning(&[0.3, 0.7], 2.0, &[1.5, 2.5]).unwrap();
        assert!(c > 1e-6);
        let b = jacobian_matrix(&[0.3, 0.7], 2.0, &[1.5, 2.5]).unwrap();
        assert_eq!(b.shape(), (4, 4));
        assert_eq!(b[(3, 2)], 0.7);
    }
}
