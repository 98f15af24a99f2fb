//! Jackknife pseudo-values of the distance U-statistics.
//!
//! Leave-one-out statistics come from the cached row sums:
//! `U^(-i) = (T - r_i) / C(m-1, 2)`, so a whole vector costs O(m) once the
//! O(m²) aggregates exist.

use crate::data::{DistanceMatrix, PooledData};
use crate::error::{JelError, Result};

/// Pseudo-values for the pooled sample and for each group.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoValues {
    pub pooled: Vec<f64>,
    pub groups: Vec<Vec<f64>>,
    pub u_pooled: f64,
    pub u_group: Vec<f64>,
}

impl PseudoValues {
    /// Assembles pseudo-values from raw vectors; the U-statistics are the
    /// vector means.
    pub fn from_vectors(pooled: Vec<f64>, groups: Vec<Vec<f64>>) -> Self {
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let u_pooled = mean(&pooled);
        let u_group = groups.iter().map(|g| mean(g)).collect();
        Self {
            pooled,
            groups,
            u_pooled,
            u_group,
        }
    }

    pub fn k(&self) -> usize {
        self.groups.len()
    }

    /// The pooled vector followed by every group vector.
    pub fn vectors(&self) -> impl Iterator<Item = &[f64]> {
        std::iter::once(self.pooled.as_slice()).chain(self.groups.iter().map(Vec::as_slice))
    }
}

fn from_aggregates(row_sums: &[f64], total: f64) -> Result<Vec<f64>> {
    let m = row_sums.len();
    if m < 3 {
        return Err(JelError::Domain(format!(
            "pseudo-values need at least 3 points, got {m}"
        )));
    }
    let mf = m as f64;
    let full_pairs = mf * (mf - 1.0) / 2.0;
    let loo_pairs = (mf - 1.0) * (mf - 2.0) / 2.0;
    let u = total / full_pairs;
    Ok(row_sums
        .iter()
        .map(|r| {
            let u_loo = (total - r) / loo_pairs;
            mf * u - (mf - 1.0) * u_loo
        })
        .collect())
}

/// Pseudo-values `V_i = m U_m − (m−1) U^(−i)` over the whole matrix, or over
/// the subset `indices` when given.
pub fn pseudo_values(dm: &DistanceMatrix, indices: Option<&[usize]>) -> Result<Vec<f64>> {
    match indices {
        None => from_aggregates(dm.row_sums(), dm.total()),
        Some(idx) => {
            if idx.len() < 3 {
                return Err(JelError::Domain(format!(
                    "pseudo-values need at least 3 points, got {}",
                    idx.len()
                )));
            }
            let (rows, total) = dm.restricted_aggregates(idx);
            from_aggregates(&rows, total)
        }
    }
}

/// Pooled and per-group pseudo-values. Pooled values use all pairs,
/// cross-group ones included.
pub fn all_pseudo_values(pooled: &PooledData, dm: &DistanceMatrix) -> Result<PseudoValues> {
    if dm.n() != pooled.n() {
        return Err(JelError::Validation(format!(
            "distance matrix has {} rows but pooled data has {}",
            dm.n(),
            pooled.n()
        )));
    }
    let pairs = |m: usize| m as f64 * (m as f64 - 1.0) / 2.0;
    let pooled_v = pseudo_values(dm, None)?;
    let mut groups = Vec::with_capacity(pooled.k());
    let mut u_group = Vec::with_capacity(pooled.k());
    for k in 0..pooled.k() {
        let idx: Vec<usize> = pooled.group_range(k).collect();
        if idx.len() < 3 {
            return Err(JelError::Validation(format!(
                "group '{}' has {} observations; pseudo-values need at least 3",
                pooled.samples()[k].label,
                idx.len()
            )));
        }
        let (rows, total) = dm.restricted_aggregates(&idx);
        groups.push(from_aggregates(&rows, total)?);
        u_group.push(total / pairs(idx.len()));
    }
    let u_pooled = dm.total() / pairs(dm.n());
    Ok(PseudoValues {
        pooled: pooled_v,
        groups,
        u_pooled,
        u_group,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{pairwise_distances, Sample};
    use ndarray::Array2;

    fn dm_of(values: &[f64]) -> DistanceMatrix {
        let pts = Array2::from_shape_vec((values.len(), 1), values.to_vec()).unwrap();
        pairwise_distances(pts.view()).unwrap()
    }

    #[test]
    fn hand_pseudo_values() {
        let v = pseudo_values(&dm_of(&[0.0, 1.0, 3.0]), None).unwrap();
        let want = [2.0, 0.0, 4.0];
        for (a, b) in v.iter().zip(want) {
            assert!((a - b).abs() < 1e-12, "{v:?}");
        }
        let mean = v.iter().sum::<f64>() / 3.0;
        assert!((mean - 2.0).abs() < 1e-12);
    }

    #[test]
    fn size_two_rejected() {
        assert!(pseudo_values(&dm_of(&[0.0, 2.0]), None).is_err());
        assert!(pseudo_values(&dm_of(&[0.0, 2.0, 5.0]), Some(&[0, 2])).is_err());
    }

    #[test]
    fn subset_matches_standalone() {
        let dm = dm_of(&[0.0, 9.0, 1.0, 7.0, 3.0]);
        let sub = pseudo_values(&dm, Some(&[0, 2, 4])).unwrap();
        let alone = pseudo_values(&dm_of(&[0.0, 1.0, 3.0]), None).unwrap();
        assert_eq!(sub, alone);
    }

    #[test]
    fn group_of_two_fails_whole_call() {
        let pooled = PooledData::with_min_group_size(
            vec![
                Sample::from_values("a", &[0.0, 1.0, 3.0]),
                Sample::from_values("b", &[0.0, 2.0]),
            ],
            2,
        )
        .unwrap();
        let dm = pairwise_distances(pooled.points()).unwrap();
        let err = all_pseudo_values(&pooled, &dm).unwrap_err();
        assert!(err.to_string().contains("'b'"));
    }

    #[test]
    fn pooled_mean_is_pooled_u() {
        let pooled = PooledData::new(vec![
            Sample::from_values("a", &[0.0, 1.0, 3.0]),
            Sample::from_values("b", &[0.0, 2.0, 5.0]),
        ])
        .unwrap();
        let dm = pairwise_distances(pooled.points()).unwrap();
        let pv = all_pseudo_values(&pooled, &dm).unwrap();
        // enumeration over the 15 pairs of {0,1,3,0,2,5}
        let xs: [f64; 6] = [0.0, 1.0, 3.0, 0.0, 2.0, 5.0];
        let mut s = 0.0;
        for i in 0..6 {
            for j in (i + 1)..6 {
                s += (xs[i] - xs[j]).abs();
            }
        }
        let u6 = s / 15.0;
        let mean = pv.pooled.iter().sum::<f64>() / 6.0;
        assert!((mean - u6).abs() < 1e-12);
        assert!((pv.u_pooled - u6).abs() < 1e-12);
        assert_eq!(pv.groups[0], vec![2.0, 0.0, 4.0]);
    }

    #[test]
    fn constant_data_gives_constant_pseudo_values() {
        let pooled = PooledData::new(vec![
            Sample::from_values("a", &[1.0; 3]),
            Sample::from_values("b", &[1.0; 4]),
        ])
        .unwrap();
        let dm = pairwise_distances(pooled.points()).unwrap();
        let pv = all_pseudo_values(&pooled, &dm).unwrap();
        assert!(pv.pooled.iter().all(|&v| v == pv.pooled[0]));
    }
}
