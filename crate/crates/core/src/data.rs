//! Labeled samples, the pooled view over them, and the Euclidean distance
//! matrix every U-statistic is read from.

use std::ops::Range;

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{JelError, Result};

/// Smallest group the jackknife can handle: leave-one-out needs C(m-1, 2) > 0.
pub const MIN_GROUP_SIZE: usize = 3;

/// One labeled sample of `n_k` points in `d` dimensions.
#[derive(Debug, Clone)]
pub struct Sample {
    pub label: String,
    pub points: Array2<f64>,
}

impl Sample {
    pub fn new(label: impl Into<String>, points: Array2<f64>) -> Self {
        Self {
            label: label.into(),
            points,
        }
    }

    /// Univariate convenience constructor.
    pub fn from_values(label: impl Into<String>, values: &[f64]) -> Self {
        let points = Array2::from_shape_vec((values.len(), 1), values.to_vec())
            .expect("column vector shape");
        Self::new(label, points)
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }
}

/// K samples concatenated in order, with sample fractions `n_k / n`.
#[derive(Debug, Clone)]
pub struct PooledData {
    samples: Vec<Sample>,
    points: Array2<f64>,
    offsets: Vec<usize>,
    alpha_hat: Vec<f64>,
}

impl PooledData {
    /// Pools samples for the jackknife test (every group needs at least
    /// three points).
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        Self::with_min_group_size(samples, MIN_GROUP_SIZE)
    }

    /// Pools samples with a caller-chosen minimum group size.
    pub fn with_min_group_size(samples: Vec<Sample>, min_group: usize) -> Result<Self> {
        if samples.len() < 2 {
            return Err(JelError::Validation(format!(
                "need at least 2 groups, got {}",
                samples.len()
            )));
        }
        let dim = samples[0].dim();
        if dim == 0 {
            return Err(JelError::Validation("points must have at least one coordinate".into()));
        }
        for s in &samples {
            if s.dim() != dim {
                return Err(JelError::Validation(format!(
                    "group '{}' has dimension {}, expected {dim}",
                    s.label,
                    s.dim()
                )));
            }
            if s.len() < min_group.max(1) {
                return Err(JelError::Validation(format!(
                    "group '{}' has {} observations; at least {} required",
                    s.label,
                    s.len(),
                    min_group.max(1)
                )));
            }
            if s.points.iter().any(|v| !v.is_finite()) {
                return Err(JelError::Validation(format!(
                    "group '{}' contains non-finite coordinates",
                    s.label
                )));
            }
        }

        let n: usize = samples.iter().map(Sample::len).sum();
        let mut offsets = Vec::with_capacity(samples.len() + 1);
        offsets.push(0);
        let mut points = Array2::zeros((n, dim));
        for s in &samples {
            let start = *offsets.last().unwrap();
            let end = start + s.len();
            points.slice_mut(ndarray::s![start..end, ..]).assign(&s.points);
            offsets.push(end);
        }

        let k = samples.len();
        let mut alpha_hat: Vec<f64> = samples[..k - 1]
            .iter()
            .map(|s| s.len() as f64 / n as f64)
            .collect();
        let head: f64 = alpha_hat.iter().sum();
        alpha_hat.push(1.0 - head);

        Ok(Self {
            samples,
            points,
            offsets,
            alpha_hat,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    /// Pooled points, rows in sample order then within-sample order.
    pub fn points(&self) -> ArrayView2<'_, f64> {
        self.points.view()
    }

    pub fn n(&self) -> usize {
        self.points.nrows()
    }

    pub fn k(&self) -> usize {
        self.samples.len()
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn alpha_hat(&self) -> &[f64] {
        &self.alpha_hat
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.samples.iter().map(Sample::len).collect()
    }

    /// Pooled row indices belonging to group `k`.
    pub fn group_range(&self, k: usize) -> Range<usize> {
        self.offsets[k]..self.offsets[k + 1]
    }

    /// Maps a pooled row index to `(group, index within group)`.
    pub fn group_of(&self, i: usize) -> Option<(usize, usize)> {
        if i >= self.n() {
            return None;
        }
        let k = self.offsets.partition_point(|&o| o <= i) - 1;
        Some((k, i - self.offsets[k]))
    }

    /// Group label of every pooled row.
    pub fn labels(&self) -> Vec<usize> {
        (0..self.k())
            .flat_map(|k| std::iter::repeat_n(k, self.samples[k].len()))
            .collect()
    }
}

/// Convenience wrapper matching the data-model operation name.
pub fn build_pooled(samples: Vec<Sample>) -> Result<PooledData> {
    PooledData::new(samples)
}

fn euclidean(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        let d = x - y;
        acc += d * d;
    }
    acc.sqrt()
}

/// Symmetric pairwise Euclidean distances with cached row sums and total.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    n: usize,
    values: Vec<f64>,
    row_sums: Vec<f64>,
    total: f64,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn row_sums(&self) -> &[f64] {
        &self.row_sums
    }

    /// Sum over unordered pairs i < j.
    pub fn total(&self) -> f64 {
        self.total
    }

    /// Row sums and pair total of the submatrix on `indices`.
    pub fn restricted_aggregates(&self, indices: &[usize]) -> (Vec<f64>, f64) {
        let mut rows = vec![0.0; indices.len()];
        let mut total = 0.0;
        for (a, &i) in indices.iter().enumerate() {
            let row = self.row(i);
            for (b, &j) in indices.iter().enumerate().skip(a + 1) {
                let d = row[j];
                rows[a] += d;
                rows[b] += d;
                total += d;
            }
        }
        (rows, total)
    }

    /// Pair total of the submatrix on `indices`.
    pub fn restricted_total(&self, indices: &[usize]) -> f64 {
        let mut total = 0.0;
        for (a, &i) in indices.iter().enumerate() {
            let row = self.row(i);
            for &j in &indices[a + 1..] {
                total += row[j];
            }
        }
        total
    }
}

/// Euclidean distance matrix of the rows of `points`.
pub fn pairwise_distances(points: ArrayView2<'_, f64>) -> Result<DistanceMatrix> {
    let n = points.nrows();
    if n < 2 {
        return Err(JelError::Domain(format!(
            "distance matrix needs at least 2 points, got {n}"
        )));
    }
    let mut values = vec![0.0; n * n];
    let mut row_sums = vec![0.0; n];
    let mut total = 0.0;
    for i in 0..n {
        let xi = points.row(i);
        for j in (i + 1)..n {
            let d = euclidean(xi, points.row(j));
            values[i * n + j] = d;
            values[j * n + i] = d;
            row_sums[i] += d;
            row_sums[j] += d;
            total += d;
        }
    }
    Ok(DistanceMatrix {
        n,
        values,
        row_sums,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn col(values: &[f64]) -> Array2<f64> {
        Array2::from_shape_vec((values.len(), 1), values.to_vec()).unwrap()
    }

    #[test]
    fn too_small_group_is_named() {
        let err = PooledData::new(vec![
            Sample::from_values("a", &[0.0, 1.0, 2.0]),
            Sample::from_values("b", &[0.0, 1.0]),
        ])
        .unwrap_err();
        assert!(err.to_string().contains("'b'"), "{err}");
    }

    #[test]
    fn alpha_hat_unbalanced() {
        let sizes = [40usize, 60, 50];
        let samples = sizes
            .iter()
            .enumerate()
            .map(|(k, &m)| Sample::from_values(k.to_string(), &vec![k as f64; m]))
            .collect();
        let pooled = PooledData::new(samples).unwrap();
        assert_eq!(pooled.n(), 150);
        assert_eq!(pooled.alpha_hat()[0], 40.0 / 150.0);
        assert_eq!(pooled.alpha_hat()[1], 60.0 / 150.0);
        assert!((pooled.alpha_hat()[2] - 50.0 / 150.0).abs() < 1e-15);
        assert_eq!(pooled.alpha_hat().iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn alpha_hat_balanced() {
        let samples = (0..3)
            .map(|k| Sample::from_values(k.to_string(), &[0.0, 1.0, 2.0]))
            .collect();
        let pooled = PooledData::new(samples).unwrap();
        for a in pooled.alpha_hat() {
            assert!((a - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn validation_failures() {
        let one = vec![Sample::from_values("a", &[0.0, 1.0, 2.0])];
        assert!(PooledData::new(one).is_err());
        let mixed = vec![
            Sample::from_values("a", &[0.0, 1.0, 2.0]),
            Sample::new("b", array![[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]),
        ];
        assert!(PooledData::new(mixed).is_err());
        let nan = vec![
            Sample::from_values("a", &[0.0, 1.0, f64::NAN]),
            Sample::from_values("b", &[0.0, 1.0, 2.0]),
        ];
        assert!(PooledData::new(nan).is_err());
    }

    #[test]
    fn pooled_order_and_group_lookup() {
        let pooled = PooledData::new(vec![
            Sample::from_values("a", &[0.0, 1.0, 3.0]),
            Sample::from_values("b", &[10.0, 20.0, 30.0, 40.0]),
        ])
        .unwrap();
        assert_eq!(pooled.points()[[3, 0]], 10.0);
        assert_eq!(pooled.group_range(1), 3..7);
        assert_eq!(pooled.group_of(2), Some((0, 2)));
        assert_eq!(pooled.group_of(3), Some((1, 0)));
        assert_eq!(pooled.group_of(6), Some((1, 3)));
        assert_eq!(pooled.group_of(7), None);
        assert_eq!(pooled.labels(), vec![0, 0, 0, 1, 1, 1, 1]);
    }

    #[test]
    fn hand_distances() {
        let dm = pairwise_distances(col(&[0.0, 1.0, 3.0]).view()).unwrap();
        assert_eq!(dm.get(0, 1), 1.0);
        assert_eq!(dm.get(0, 2), 3.0);
        assert_eq!(dm.get(1, 2), 2.0);
        assert_eq!(dm.total(), 6.0);
        assert_eq!(dm.row_sums(), &[4.0, 3.0, 5.0]);

        let dm = pairwise_distances(array![[0.0, 0.0], [3.0, 4.0]].view()).unwrap();
        assert_eq!(dm.get(1, 0), 5.0);

        let dm = pairwise_distances(col(&[2.0, 2.0, 5.0]).view()).unwrap();
        assert_eq!(dm.get(0, 1), 0.0);
    }

    #[test]
    fn single_point_rejected() {
        assert!(pairwise_distances(col(&[1.0]).view()).is_err());
    }

    #[test]
    fn restricted_aggregates_match_full() {
        let dm = pairwise_distances(col(&[0.0, 1.0, 3.0, 7.0]).view()).unwrap();
        let (rows, total) = dm.restricted_aggregates(&[0, 1, 2, 3]);
        assert_eq!(rows, dm.row_sums());
        assert_eq!(total, dm.total());
        let (rows, total) = dm.restricted_aggregates(&[0, 2]);
        assert_eq!(rows, vec![3.0, 3.0]);
        assert_eq!(total, 3.0);
        assert_eq!(dm.restricted_total(&[1, 3, 2]), 6.0 + 2.0 + 4.0);
    }
}
