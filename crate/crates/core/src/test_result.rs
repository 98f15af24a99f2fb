use serde::Serialize;

use crate::error::{JelError, Result};
use crate::stats::chi_square_sf;

/// Outcome of one hypothesis test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
    pub alpha: f64,
    /// `p_value < alpha`; a statistic exactly at the critical value does
    /// not reject.
    pub reject: bool,
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(JelError::Domain(format!(
            "significance level must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

impl TestResult {
    /// Calibrates `statistic` against χ²_df.
    pub fn from_chi_square(statistic: f64, df: u32, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let p_value = chi_square_sf(statistic.max(0.0), df)?;
        Ok(Self::from_p_value(statistic, df, p_value, alpha))
    }

    pub fn from_p_value(statistic: f64, df: u32, p_value: f64, alpha: f64) -> Self {
        Self {
            statistic,
            df,
            p_value,
            alpha,
            reject: p_value < alpha,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::chi_square_quantile;

    #[test]
    fn reject_matches_critical_value() {
        let crit = chi_square_quantile(0.95, 2).unwrap();
        for stat in [0.0, 1.0, crit - 1e-6, crit + 1e-6, 12.0] {
            let t = TestResult::from_chi_square(stat, 2, 0.05).unwrap();
            assert_eq!(t.reject, stat > crit, "stat {stat}");
        }
    }

    #[test]
    fn bad_alpha() {
        assert!(TestResult::from_chi_square(1.0, 1, 0.0).is_err());
        assert!(TestResult::from_chi_square(1.0, 1, 1.5).is_err());
    }
}
