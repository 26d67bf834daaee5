//! Depth and size scaling of mitigated and unmitigated fidelities.

use serde::{Deserialize, Serialize};

use super::analysis::power_law_fit;
use super::ensemble::{disorder_average_many, EnsembleResult, PointKey};
use super::sweep::Realization;
use crate::circuit::{DisorderMode, DisorderSpec, Topology, TopologyKind};
use crate::error::{invalid, Result};
use crate::exact::{apply_layer, Channels, DensityMatrix, GateRecord};
use crate::replica::{ReplicaState, SiteMap};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FidelitySpec {
    pub sizes: Vec<usize>,
    /// Checkpoint depths; one evolution per realization serves all of them.
    pub depths: Vec<usize>,
    pub ratios: Vec<f64>,
    pub p: f64,
    pub q_bar: f64,
    pub realizations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_topology")]
    pub topology: TopologyKind,
    #[serde(default = "default_disorder")]
    pub disorder: DisorderMode,
    /// Also run exact density-matrix simulations for `F_M` and `F`.
    #[serde(default)]
    pub exact: bool,
    /// Antinoise strength; zero-mean-field when absent.
    #[serde(default)]
    pub q_a: Option<f64>,
}

fn default_topology() -> TopologyKind {
    TopologyKind::AllToAll
}

fn default_disorder() -> DisorderMode {
    DisorderMode::Spacetime
}

impl FidelitySpec {
    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() || self.depths.is_empty() || self.ratios.is_empty() {
            return Err(invalid("fidelity grids must be nonempty"));
        }
        if self.depths.windows(2).any(|w| w[1] <= w[0]) || self.depths[0] == 0 {
            return Err(invalid("depths must be positive and strictly increasing"));
        }
        if self.realizations == 0 {
            return Err(invalid("realizations must be at least 1"));
        }
        for &n in &self.sizes {
            Topology::new(self.topology, n)?;
        }
        if self.exact && self.sizes.iter().any(|&n| n > 10) {
            return Err(invalid("exact fidelities are limited to n <= 10"));
        }
        for &r in &self.ratios {
            self.disorder_spec(r)?;
        }
        Ok(())
    }

    pub fn disorder_spec(&self, ratio: f64) -> Result<DisorderSpec> {
        if ratio == 0.0 {
            return DisorderSpec::new(self.p, self.q_bar, self.q_bar, self.disorder, self.seed);
        }
        DisorderSpec::from_sigma_ratio(self.p, self.q_bar, ratio, self.disorder, self.seed)
    }
}

/// Statistics of natural logs at one `(N, ratio, depth)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityRow {
    /// `ln F̄_XEB_M` of the circuit-averaged mitigated XEB.
    pub log_xeb_mitigated: EnsembleResult,
    /// `ln F_M` for single circuits (exact runs only).
    pub log_f_mitigated: Option<EnsembleResult>,
    /// `ln Tr[rho_0 rho_n]` without mitigation (exact runs only).
    pub log_f_unmitigated: Option<EnsembleResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaFit {
    pub n: usize,
    pub ratio: f64,
    pub beta: f64,
    pub prefactor: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityTable {
    pub rows: Vec<FidelityRow>,
    /// `std(ln F̄_XEB_M) = c d^beta` per size and ratio.
    pub beta: Vec<BetaFit>,
}

fn ln_or_nan(v: f64) -> f64 {
    if v > 0.0 {
        v.ln()
    } else {
        f64::NAN
    }
}

pub fn fidelity_scaling(spec: &FidelitySpec) -> Result<FidelityTable> {
    spec.validate()?;
    let d_max = *spec.depths.last().expect("nonempty");
    let mut rows = Vec::new();
    let mut beta = Vec::new();
    for &n in &spec.sizes {
        for &ratio in &spec.ratios {
            let disorder = spec.disorder_spec(ratio)?;
            let q_a = spec.q_a.unwrap_or_else(|| disorder.zero_mean_field_rate());
            let keys: Vec<PointKey> = spec.depths.iter().map(|&depth| PointKey { n, ratio, depth }).collect();
            let per_depth = spec.depths.len();
            let width = if spec.exact { 3 } else { 1 } * per_depth;
            let mut all_keys = Vec::with_capacity(width);
            for _ in 0..width / per_depth {
                all_keys.extend_from_slice(&keys);
            }
            let results = disorder_average_many(&all_keys, spec.realizations, rng::derive_seed(spec.seed, n as u64), |_, r| {
                let real = Realization::draw(spec.topology, &disorder, n, d_max, r)?;
                let mut values = vec![f64::NAN; width];
                let mut replica = ReplicaState::init_product_state(n)?;
                let mut exact = if spec.exact {
                    let rho0 = DensityMatrix::zero_state(n)?;
                    Some((GateRecord::sample(&real.schedule, r), rho0.clone(), rho0.clone(), rho0))
                } else {
                    None
                };
                let mut slot = 0;
                for (t, layer) in real.schedule.layers().iter().enumerate() {
                    let maps = real.field.row(t).iter().map(|&q| SiteMap::one_sided(q, q_a)).collect::<Result<Vec<_>>>()?;
                    replica.step_layer_with(layer, &maps)?;
                    if let Some((record, ideal, noisy, anti)) = exact.as_mut() {
                        apply_layer(ideal, &record.layers[t], Channels::noiseless(), t)?;
                        apply_layer(noisy, &record.layers[t], Channels::noise_only(&real.field), t)?;
                        apply_layer(anti, &record.layers[t], Channels::antinoise_only(q_a), t)?;
                    }
                    if spec.depths.get(slot) == Some(&(t + 1)) {
                        values[slot] = ln_or_nan(replica.collision_score() - 1.0);
                        if let Some((_, ideal, noisy, anti)) = exact.as_ref() {
                            values[per_depth + slot] = ln_or_nan(anti.overlap(noisy).re);
                            values[2 * per_depth + slot] = ln_or_nan(ideal.overlap(noisy).re);
                        }
                        slot += 1;
                    }
                }
                Ok(values)
            })?;
            let stds: Vec<f64> = results[..per_depth].iter().map(|r| r.std).collect();
            let depths: Vec<f64> = spec.depths.iter().map(|&d| d as f64).collect();
            if let Ok((b, c, r2)) = power_law_fit(&depths, &stds) {
                beta.push(BetaFit { n, ratio, beta: b, prefactor: c, r2 });
            }
            for k in 0..per_depth {
                rows.push(FidelityRow {
                    log_xeb_mitigated: results[k],
                    log_f_mitigated: spec.exact.then(|| results[per_depth + k]),
                    log_f_unmitigated: spec.exact.then(|| results[2 * per_depth + k]),
                });
            }
        }
    }
    Ok(FidelityTable { rows, beta })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> FidelitySpec {
        FidelitySpec {
            sizes: vec![4],
            depths: vec![2, 4, 8],
            ratios: vec![0.0, 0.4],
            p: 0.5,
            q_bar: 0.05,
            realizations: 16,
            seed: 5,
            topology: TopologyKind::AllToAll,
            disorder: DisorderMode::Spacetime,
            exact: true,
            q_a: None,
        }
    }

    #[test]
    fn perfect_mitigation_at_zero_disorder() {
        let table = fidelity_scaling(&spec()).unwrap();
        assert_eq!(table.rows.len(), 6);
        for row in table.rows.iter().filter(|r| r.log_xeb_mitigated.key.ratio == 0.0) {
            let f = row.log_f_mitigated.unwrap();
            assert!(f.mean.abs() < 1e-9 && f.std < 1e-9);
            assert!(row.log_f_unmitigated.unwrap().mean < 0.0);
            assert!(row.log_xeb_mitigated.count == 16);
        }
    }

    #[test]
    fn unmitigated_decays_and_disorder_spreads() {
        let table = fidelity_scaling(&FidelitySpec { realizations: 200, ..spec() }).unwrap();
        let unmitigated: Vec<f64> = table.rows[..3].iter().map(|r| r.log_f_unmitigated.unwrap().mean).collect();
        assert!(unmitigated.windows(2).all(|w| w[1] < w[0]));
        // Gate-pairing fluctuations fade with depth; disorder fluctuations do not.
        let (clean, dirty) = (&table.rows[2].log_xeb_mitigated, &table.rows[5].log_xeb_mitigated);
        assert!(dirty.std > 2.0 * clean.std);
        assert_eq!(table.beta.len(), 2);
    }

    #[test]
    fn deep_noiseless_collision_score_approaches_haar() {
        let s = FidelitySpec { depths: vec![30], ratios: vec![0.0], exact: false, q_bar: 0.0, ..spec() };
        let row = &fidelity_scaling(&s).unwrap().rows[0];
        let haar = ((16.0 - 1.0) / (16.0 + 1.0f64)).ln();
        assert!((row.log_xeb_mitigated.mean - haar).abs() < 1e-6);
    }

    #[test]
    fn validation() {
        let mut s = spec();
        s.depths = vec![4, 2];
        assert!(fidelity_scaling(&s).is_err());
        let mut s = spec();
        s.sizes = vec![12];
        assert!(fidelity_scaling(&s).is_err());
    }
}
