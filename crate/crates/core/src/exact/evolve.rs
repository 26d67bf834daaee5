//! Layer-by-layer evolution of single circuit realizations, with the sampled
//! gates kept so the same circuit can be replayed under different channels.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::density::{DensityMatrix, Unitary4};
use super::gates::sample_haar_2q;
use crate::circuit::{GateSchedule, MitigationSpec, NoiseField, Pair};
use crate::error::{invalid, Error, Result};
use crate::rng::Stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordedGate {
    pub pair: Pair,
    /// Row-major `[re, im]` entries of the 4x4 unitary.
    pub coefficients: [[f64; 2]; 16],
}

impl RecordedGate {
    pub fn new(pair: Pair, u: &Unitary4) -> Self {
        Self { pair, coefficients: u.map(|z| [z.re, z.im]) }
    }

    pub fn unitary(&self) -> Unitary4 {
        self.coefficients.map(|[re, im]| Complex64::new(re, im))
    }
}

/// Every gate of one sampled circuit, layer by layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateRecord {
    pub n_qubits: usize,
    pub layers: Vec<Vec<RecordedGate>>,
}

impl GateRecord {
    /// Draw an independent Haar gate for every pair of `schedule`.
    pub fn sample(schedule: &GateSchedule, rng: &mut Stream) -> Self {
        let layers = schedule
            .layers()
            .iter()
            .map(|layer| layer.iter().map(|&p| RecordedGate::new(p, &sample_haar_2q(rng))).collect())
            .collect();
        Self { n_qubits: schedule.n_qubits(), layers }
    }

    /// Put the same gate on every pair.
    pub fn uniform(schedule: &GateSchedule, u: &Unitary4) -> Self {
        let layers = schedule
            .layers()
            .iter()
            .map(|layer| layer.iter().map(|&p| RecordedGate::new(p, u)).collect())
            .collect();
        Self { n_qubits: schedule.n_qubits(), layers }
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("gate record serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| invalid(format!("malformed gate record: {e}")))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(Error::from)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Single-site channels applied after each gate layer: noise from `noise`
/// (if any), then antinoise of strength `q_a` on every site.
#[derive(Debug, Clone, Copy)]
pub struct Channels<'a> {
    pub noise: Option<&'a NoiseField>,
    pub q_a: f64,
}

impl<'a> Channels<'a> {
    pub fn noiseless() -> Self {
        Self { noise: None, q_a: 0.0 }
    }

    pub fn noise_only(field: &'a NoiseField) -> Self {
        Self { noise: Some(field), q_a: 0.0 }
    }

    pub fn antinoise_only(q_a: f64) -> Self {
        Self { noise: None, q_a }
    }

    pub fn mitigated(field: &'a NoiseField, q_a: f64) -> Self {
        Self { noise: Some(field), q_a }
    }
}

/// Replay `record` on `rho0`, calling `observe(t, rho)` after every layer.
pub fn replay_with(
    rho0: &DensityMatrix,
    record: &GateRecord,
    channels: Channels<'_>,
    mut observe: impl FnMut(usize, &DensityMatrix),
) -> Result<DensityMatrix> {
    let n = rho0.n_qubits();
    if record.n_qubits != n {
        return Err(invalid(format!("record has {} qubits, state has {n}", record.n_qubits)));
    }
    if let Some(field) = channels.noise {
        if field.n_qubits() != n || field.depth() < record.depth() {
            return Err(invalid("noise field does not cover the circuit"));
        }
    }
    let mut rho = rho0.clone();
    for (t, layer) in record.layers.iter().enumerate() {
        apply_layer(&mut rho, layer, channels, t)?;
        observe(t, &rho);
    }
    Ok(rho)
}

/// One layer `t`: the recorded gates, then the channels on every site.
pub fn apply_layer(rho: &mut DensityMatrix, layer: &[RecordedGate], channels: Channels<'_>, t: usize) -> Result<()> {
    for gate in layer {
        rho.apply_2q_unitary(&gate.unitary(), gate.pair.0, gate.pair.1)?;
    }
    for x in 0..rho.n_qubits() {
        if let Some(field) = channels.noise {
            rho.apply_depolarizing(x, field.rate(x, t))?;
        }
        if channels.q_a != 0.0 {
            rho.apply_antinoise_map(x, channels.q_a)?;
        }
    }
    Ok(())
}

pub fn replay(rho0: &DensityMatrix, record: &GateRecord, channels: Channels<'_>) -> Result<DensityMatrix> {
    replay_with(rho0, record, channels, |_, _| {})
}

/// Sample Haar gates for `schedule` and run the noisy, mitigated circuit.
pub fn evolve_circuit(
    rho0: &DensityMatrix,
    schedule: &GateSchedule,
    field: &NoiseField,
    mitigation: &MitigationSpec,
    rng: &mut Stream,
) -> Result<(DensityMatrix, GateRecord)> {
    let record = GateRecord::sample(schedule, rng);
    let rho = replay(rho0, &record, Channels::mitigated(field, mitigation.q_a))?;
    Ok((rho, record))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_all_to_all_schedule, build_brickwork_schedule, DisorderMode, DisorderSpec};
    use crate::rng;

    #[test]
    fn noiseless_pure_state_stays_pure() {
        let schedule = build_brickwork_schedule(4, 6).unwrap();
        let record = GateRecord::sample(&schedule, &mut rng::stream(1, 0));
        let rho0 = DensityMatrix::zero_state(4).unwrap();
        replay_with(&rho0, &record, Channels::noiseless(), |_, rho| {
            assert!((rho.purity() - 1.0).abs() < 1e-12);
        })
        .unwrap();
    }

    #[test]
    fn uniform_noise_with_matched_antinoise_is_noiseless() {
        let schedule = build_all_to_all_schedule(4, 5, &mut rng::stream(2, 0)).unwrap();
        let field = NoiseField::uniform(4, 5, 0.15).unwrap();
        let rho0 = DensityMatrix::zero_state(4).unwrap();
        let (rho, record) =
            evolve_circuit(&rho0, &schedule, &field, &MitigationSpec::fixed(0.15).unwrap(), &mut rng::stream(2, 1)).unwrap();
        let clean = replay(&rho0, &record, Channels::noiseless()).unwrap();
        assert!(rho.max_abs_diff(&clean) < 1e-9);
    }

    #[test]
    fn trace_and_hermiticity_every_layer() {
        let spec = DisorderSpec::new(0.5, 0.02, 0.3, DisorderMode::Spacetime, 3).unwrap();
        let schedule = build_brickwork_schedule(4, 8).unwrap();
        let field = NoiseField::sample(&spec, 4, 8).unwrap();
        let record = GateRecord::sample(&schedule, &mut rng::stream(3, 0));
        let q_a = spec.zero_mean_field_rate();
        replay_with(&DensityMatrix::zero_state(4).unwrap(), &record, Channels::mitigated(&field, q_a), |_, rho| {
            assert!((rho.trace().re - 1.0).abs() < 1e-9);
            assert!(rho.trace().im.abs() < 1e-12);
            assert!(rho.hermiticity_residual() < 1e-10);
        })
        .unwrap();
    }

    #[test]
    fn noise_only_stays_physical() {
        let spec = DisorderSpec::new(0.5, 0.02, 0.3, DisorderMode::Spacetime, 4).unwrap();
        let schedule = build_all_to_all_schedule(4, 10, &mut rng::stream(4, 0)).unwrap();
        let field = NoiseField::sample(&spec, 4, 10).unwrap();
        let record = GateRecord::sample(&schedule, &mut rng::stream(4, 1));
        replay_with(&DensityMatrix::zero_state(4).unwrap(), &record, Channels::noise_only(&field), |_, rho| {
            assert!(*rho.eigenvalues().last().unwrap() >= -1e-10);
        })
        .unwrap();
    }

    #[test]
    fn gate_record_round_trips_through_json() {
        let schedule = build_brickwork_schedule(4, 3).unwrap();
        let record = GateRecord::sample(&schedule, &mut rng::stream(5, 0));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("record.json");
        record.write(&path).unwrap();
        assert_eq!(GateRecord::read(&path).unwrap(), record);
        assert!(GateRecord::from_json("{").is_err());
    }
}
