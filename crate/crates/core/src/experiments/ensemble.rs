//! Disorder averages over independent, individually seeded realizations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{self, Stream};

/// Grid coordinates of one ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointKey {
    pub n: usize,
    pub ratio: f64,
    pub depth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub key: PointKey,
    pub mean: f64,
    pub std: f64,
    pub stderr: f64,
    /// Finite values entering the mean.
    pub count: usize,
    pub non_finite: usize,
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

impl EnsembleResult {
    /// Summary of `values`; non-finite entries are counted, not averaged.
    pub fn from_values(key: PointKey, values: &[f64]) -> Result<Self> {
        let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
        let non_finite = values.len() - finite.len();
        if finite.is_empty() {
            return Err(Error::AllNonFinite);
        }
        let count = finite.len();
        let mean = compensated_sum(finite.iter().copied()) / count as f64;
        let std = if count > 1 {
            (compensated_sum(finite.iter().map(|v| (v - mean).powi(2))) / (count - 1) as f64).sqrt()
        } else {
            0.0
        };
        Ok(Self { key, mean, std, stderr: std / (count as f64).sqrt(), count, non_finite })
    }
}

/// Run `observable(index, stream)` for every realization; it returns one value
/// per key. Realization `i` always draws from `rng::stream(seed, i)`.
pub fn disorder_average_many<F>(keys: &[PointKey], realizations: usize, seed: u64, observable: F) -> Result<Vec<EnsembleResult>>
where
    F: Fn(usize, &mut Stream) -> Result<Vec<f64>> + Sync,
{
    if realizations == 0 {
        return Err(invalid("need at least one realization"));
    }
    let samples: Vec<Vec<f64>> = (0..realizations)
        .into_par_iter()
        .map(|i| {
            let values = observable(i, &mut rng::stream(seed, i as u64))?;
            if values.len() != keys.len() {
                return Err(invalid(format!("observable returned {} values for {} keys", values.len(), keys.len())));
            }
            Ok(values)
        })
        .collect::<Result<_>>()?;
    keys.iter()
        .enumerate()
        .map(|(k, &key)| {
            let column: Vec<f64> = samples.iter().map(|s| s[k]).collect();
            EnsembleResult::from_values(key, &column)
        })
        .collect()
}

pub fn disorder_average<F>(key: PointKey, realizations: usize, seed: u64, observable: F) -> Result<EnsembleResult>
where
    F: Fn(usize, &mut Stream) -> Result<f64> + Sync,
{
    let mut out = disorder_average_many(&[key], realizations, seed, |i, r| Ok(vec![observable(i, r)?]))?;
    Ok(out.remove(0))
}
