//! Output distributions, linear cross-entropy scores and mitigated fidelities.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;

use super::density::DensityMatrix;
use super::evolve::{replay, Channels, GateRecord};
use crate::circuit::{GateSchedule, MitigationSpec, NoiseField};
use crate::error::{invalid, Error, Result};
use crate::rng::Stream;

const CLAMP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistributionKind {
    Probability,
    QuasiProbability,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    pub values: Vec<f64>,
    pub kind: DistributionKind,
}

impl OutcomeDistribution {
    pub fn n_qubits(&self) -> usize {
        self.values.len().trailing_zeros() as usize
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Computational-basis diagonal. Entries within `1e-12` below zero are clamped;
/// anything more negative makes it a quasi-probability.
pub fn output_distribution(rho: &DensityMatrix) -> OutcomeDistribution {
    let mut values = rho.diagonal();
    if values.iter().all(|&v| v >= -CLAMP_TOL) {
        values.iter_mut().for_each(|v| *v = v.max(0.0));
        OutcomeDistribution { values, kind: DistributionKind::Probability }
    } else {
        OutcomeDistribution { values, kind: DistributionKind::QuasiProbability }
    }
}

/// `m` i.i.d. outcomes, as basis indices.
pub fn sample_outcomes(dist: &OutcomeDistribution, m: usize, rng: &mut Stream) -> Result<Vec<usize>> {
    if dist.kind == DistributionKind::QuasiProbability {
        return Err(Error::QuasiProbability);
    }
    let index = WeightedIndex::new(&dist.values).map_err(|e| invalid(format!("cannot sample: {e}")))?;
    Ok((0..m).map(|_| index.sample(rng)).collect())
}

fn check_lengths(a: &[f64], b: &[f64], n: usize) -> Result<()> {
    if a.len() != b.len() || a.len() != 1 << n {
        return Err(invalid(format!(
            "distribution lengths {} and {} do not match 2^{n}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Linear XEB `2^n Σ_x p_n(x) p_0(x) - 1`.
pub fn xeb(p_n: &[f64], p_0: &[f64], n: usize) -> Result<f64> {
    check_lengths(p_n, p_0, n)?;
    let dot: f64 = p_n.iter().zip(p_0).map(|(a, b)| a * b).sum();
    Ok((1u64 << n) as f64 * dot - 1.0)
}

/// Mitigated linear XEB `2^n Σ_x p_n(x) p_a(x) - 1`, with `p_a` the
/// antinoise-only quasi-probability of the same circuit.
pub fn xeb_mitigated(p_n: &[f64], p_a: &[f64], n: usize) -> Result<f64> {
    xeb(p_n, p_a, n)
}

/// Sampling estimator `(2^n / M) Σ_i p_a(x_i) - 1`.
pub fn estimate_xeb_from_samples(samples: &[usize], p_a: &[f64], n: usize) -> Result<f64> {
    if samples.is_empty() {
        return Err(invalid("need at least one sample"));
    }
    if p_a.len() != 1 << n {
        return Err(invalid(format!("p_a has {} entries, expected 2^{n}", p_a.len())));
    }
    let mut total = 0.0;
    for &x in samples {
        total += *p_a.get(x).ok_or_else(|| invalid(format!("sample {x} out of range")))?;
    }
    Ok((1u64 << n) as f64 * total / samples.len() as f64 - 1.0)
}

/// `Tr[rho_a rho_n]` for the antinoise-only and noise-only branches of one sampled circuit.
pub fn fidelity_f_m(
    schedule: &GateSchedule,
    field: &NoiseField,
    mitigation: &MitigationSpec,
    rho0: &DensityMatrix,
    rng: &mut Stream,
) -> Result<f64> {
    let record = GateRecord::sample(schedule, rng);
    let anti = replay(rho0, &record, Channels::antinoise_only(mitigation.q_a))?;
    let noisy = replay(rho0, &record, Channels::noise_only(field))?;
    Ok(anti.overlap(&noisy).re)
}

/// Every fidelity benchmark for one sampled circuit started in `|0...0>`.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityReport {
    /// Noiseless probabilities.
    pub p_0: OutcomeDistribution,
    /// Noisy probabilities.
    pub p_n: OutcomeDistribution,
    /// Antinoise in place of noise.
    pub p_a: OutcomeDistribution,
    /// Noise followed by antinoise.
    pub p_an: OutcomeDistribution,
    pub xeb: f64,
    pub xeb_mitigated: f64,
    /// `2^n Σ p_0 p_an - 1`.
    pub xeb_mitigated_same_copy: f64,
    pub f_m: f64,
}

impl FidelityReport {
    pub fn from_record(record: &GateRecord, field: &NoiseField, q_a: f64) -> Result<Self> {
        let n = record.n_qubits;
        let rho0 = DensityMatrix::zero_state(n)?;
        let ideal = replay(&rho0, record, Channels::noiseless())?;
        let noisy = replay(&rho0, record, Channels::noise_only(field))?;
        let anti = replay(&rho0, record, Channels::antinoise_only(q_a))?;
        let both = replay(&rho0, record, Channels::mitigated(field, q_a))?;
        let (p_0, p_n, p_a, p_an) = (
            output_distribution(&ideal),
            output_distribution(&noisy),
            output_distribution(&anti),
            output_distribution(&both),
        );
        Ok(Self {
            xeb: xeb(&p_n.values, &p_0.values, n)?,
            xeb_mitigated: xeb_mitigated(&p_n.values, &p_a.values, n)?,
            xeb_mitigated_same_copy: xeb(&p_0.values, &p_an.values, n)?,
            f_m: anti.overlap(&noisy).re,
            p_0,
            p_n,
            p_a,
            p_an,
        })
    }

    pub fn compute(schedule: &GateSchedule, field: &NoiseField, q_a: f64, rng: &mut Stream) -> Result<Self> {
        Self::from_record(&GateRecord::sample(schedule, rng), field, q_a)
    }
}
