use std::collections::HashMap;

use crate::data::{FeatureVector, NUM_EMOTIONS};
use crate::error::{Error, Result};

/// Per-sample selection likelihoods `pi`, all starting at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodTable {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    pi: Vec<f64>,
    iteration: usize,
    lambda: f64,
}

impl LikelihoodTable {
    pub fn new<I, S>(ids: I, lambda: f64) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        let ids: Vec<String> = ids.into_iter().map(Into::into).collect();
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::Schema(format!("duplicate utterance id `{id}`")));
            }
        }
        Ok(Self {
            pi: vec![1.0; ids.len()],
            ids,
            index,
            iteration: 0,
            lambda,
        })
    }

    /// Table whose positions follow the order of `samples`.
    pub fn for_samples(samples: &[FeatureVector], lambda: f64) -> Result<Self> {
        Self::new(samples.iter().map(|v| v.utterance_id.as_str()), lambda)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Completed sweeps.
    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// Likelihoods in table order.
    pub fn values(&self) -> &[f64] {
        &self.pi
    }

    pub fn position(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownSample(id.to_owned()))
    }

    pub fn pi(&self, id: &str) -> Result<f64> {
        Ok(self.pi[self.position(id)?])
    }

    /// `pi += lambda * |prediction - target|_1`; returns the new value.
    pub fn update_likelihood(&mut self, id: &str, prediction: &[f64], target: &[f64]) -> Result<f64> {
        let i = self.position(id)?;
        self.update_at(i, prediction, target)
    }

    pub fn update_at(&mut self, i: usize, prediction: &[f64], target: &[f64]) -> Result<f64> {
        if prediction.len() != NUM_EMOTIONS || target.len() != NUM_EMOTIONS {
            return Err(Error::Shape(format!(
                "prediction and target need {NUM_EMOTIONS} values, got {} and {}",
                prediction.len(),
                target.len()
            )));
        }
        let err: f64 = prediction.iter().zip(target).map(|(p, y)| (p - y).abs()).sum();
        if !err.is_finite() {
            return Err(Error::Input("non-finite prediction in likelihood update".into()));
        }
        let pi = self
            .pi
            .get_mut(i)
            .ok_or_else(|| Error::UnknownSample(format!("#{i}")))?;
        *pi += self.lambda * err;
        Ok(*pi)
    }

    /// Marks the end of a sweep.
    pub fn advance(&mut self) {
        self.iteration += 1;
    }
}

/// Normalized likelihoods over a pool of sample ids.
pub fn selection_prob(table: &LikelihoodTable, pool: &[&str]) -> Result<Vec<f64>> {
    if pool.is_empty() {
        return Err(Error::Sampling("empty selection pool".into()));
    }
    let pis = pool
        .iter()
        .map(|id| table.pi(id))
        .collect::<Result<Vec<f64>>>()?;
    let total: f64 = pis.iter().sum();
    Ok(pis.into_iter().map(|p| p / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn update_examples() {
        let mut t = LikelihoodTable::new(["a", "b"], 0.1).unwrap();
        let v = t.update_likelihood("a", &[0.8, 0.1, 0.1], &[1.0, 0.0, 0.0]).unwrap();
        assert!((v - 1.04).abs() < 1e-15);
        assert_eq!(t.pi("b").unwrap(), 1.0);
        assert_eq!(t.update_likelihood("b", &[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]).unwrap(), 1.0);

        let mut z = LikelihoodTable::new(["a"], 0.0).unwrap();
        assert_eq!(z.update_likelihood("a", &[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(t.update_likelihood("zz", &[0.0; 3], &[0.0; 3]).unwrap_err().category(), "key");
        assert_eq!(t.update_likelihood("a", &[0.0; 2], &[0.0; 3]).unwrap_err().category(), "shape");
    }

    #[test]
    fn selection_examples() {
        let mut t = LikelihoodTable::new(["a", "b", "c"], 1.0).unwrap();
        assert_eq!(selection_prob(&t, &["a", "b"]).unwrap(), vec![0.5, 0.5]);
        // pi(b): 1 + 2 = 3
        t.update_likelihood("b", &[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(selection_prob(&t, &["a", "b"]).unwrap(), vec![0.25, 0.75]);
        assert_eq!(selection_prob(&t, &["c"]).unwrap(), vec![1.0]);
        assert_eq!(selection_prob(&t, &[]).unwrap_err().category(), "sampling");
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(LikelihoodTable::new(["a", "a"], 0.1).is_err());
        assert!(LikelihoodTable::new(["a"], -0.1).is_err());
    }
}
