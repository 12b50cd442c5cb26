use log::warn;

use super::functionals::mean_std;
use crate::error::{Error, Result};

/// Standard deviations below this are treated as zero variance.
const MIN_STD: f64 = 1e-12;

/// Per-dimension z-score parameters fitted on one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizationStats {
    pub dataset_id: String,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Dimensions whose variance was zero; their std was replaced by 1.
    pub degenerate: Vec<usize>,
}

pub fn fit_standardizer<'a, I>(dataset_id: &str, vectors: I) -> Result<StandardizationStats>
where
    I: IntoIterator<Item = &'a [f64]>,
    I::IntoIter: Clone,
{
    let rows: Vec<&[f64]> = vectors.into_iter().collect();
    if rows.len() < 2 {
        return Err(Error::Input(format!(
            "standardizer for `{dataset_id}` needs at least 2 vectors, got {}",
            rows.len()
        )));
    }
    let dim = rows[0].len();
    if let Some(bad) = rows.iter().position(|r| r.len() != dim) {
        return Err(Error::Shape(format!(
            "vector {bad} has {} dims, expected {dim}",
            rows[bad].len()
        )));
    }
    let mut mean = Vec::with_capacity(dim);
    let mut std = Vec::with_capacity(dim);
    let mut degenerate = Vec::new();
    for d in 0..dim {
        let (m, s) = mean_std(rows.iter().map(|r| r[d]));
        mean.push(m);
        if s < MIN_STD {
            degenerate.push(d);
            std.push(1.0);
        } else {
            std.push(s);
        }
    }
    if !degenerate.is_empty() {
        warn!(
            "dataset `{dataset_id}`: {} zero-variance dimension(s) {:?}, std set to 1",
            degenerate.len(),
            degenerate
        );
    }
    Ok(StandardizationStats {
        dataset_id: dataset_id.to_owned(),
        mean,
        std,
        degenerate,
    })
}

impl StandardizationStats {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(Error::Shape(format!(
                "vector has {} dims, stats have {}",
                v.len(),
                self.dim()
            )));
        }
        Ok(v.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| (x - m) / s)
            .collect())
    }
}

pub fn apply_standardizer(stats: &StandardizationStats, v: &[f64]) -> Result<Vec<f64>> {
    stats.apply(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_point_z_score() {
        let data = [vec![0.0], vec![2.0]];
        let stats = fit_standardizer("d", data.iter().map(Vec::as_slice)).unwrap();
        assert_eq!(stats.mean, vec![1.0]);
        assert_eq!(stats.std, vec![1.0]);
        assert_eq!(stats.apply(&[0.0]).unwrap(), vec![-1.0]);
    }

    #[test]
    fn identical_vectors_are_degenerate() {
        let data = vec![vec![3.0, -1.0]; 4];
        let stats = fit_standardizer("d", data.iter().map(Vec::as_slice)).unwrap();
        assert_eq!(stats.std, vec![1.0, 1.0]);
        assert_eq!(stats.degenerate, vec![0, 1]);
        for row in &data {
            assert_eq!(stats.apply(row).unwrap(), vec![0.0, 0.0]);
        }
    }

    #[test]
    fn needs_two_vectors() {
        let one = [vec![1.0]];
        assert!(fit_standardizer("d", one.iter().map(Vec::as_slice)).is_err());
    }

    proptest! {
        #[test]
        fn standardized_columns_are_unit(rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 2..40)) {
            let stats = fit_standardizer("d", rows.iter().map(Vec::as_slice)).unwrap();
            let z: Vec<Vec<f64>> = rows.iter().map(|r| stats.apply(r).unwrap()).collect();
            let again = fit_standardizer("d", z.iter().map(Vec::as_slice)).unwrap();
            for d in 0..3 {
                prop_assert!(again.mean[d].abs() < 1e-9);
                if !stats.degenerate.contains(&d) {
                    prop_assert!((again.std[d] - 1.0).abs() < 1e-9);
                }
            }
        }
    }
}
