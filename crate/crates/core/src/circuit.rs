//! Circuit topologies, gate schedules, the binary noise-rate disorder model and
//! antinoise calibration. Shared by the replica engine and the exact simulator.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopologyKind {
    /// Brickwork chain with periodic boundary.
    #[serde(alias = "chain-1d-periodic", alias = "chain")]
    Chain1dPeriodic,
    /// Random perfect matchings drawn from all pairs.
    AllToAll,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    pub kind: TopologyKind,
    pub n_qubits: usize,
}

impl Topology {
    pub fn new(kind: TopologyKind, n_qubits: usize) -> Result<Self> {
        if n_qubits < 2 {
            return Err(invalid(format!("need at least 2 qubits, got {n_qubits}")));
        }
        if n_qubits % 2 != 0 {
            return Err(invalid(format!(
                "{kind:?} pairing needs an even qubit count, got {n_qubits}"
            )));
        }
        Ok(Self { kind, n_qubits })
    }

    /// Build a depth-`depth` schedule. The chain ignores `rng`.
    pub fn schedule(&self, depth: usize, rng: &mut Stream) -> Result<GateSchedule> {
        match self.kind {
            TopologyKind::Chain1dPeriodic => build_brickwork_schedule(self.n_qubits, depth),
            TopologyKind::AllToAll => build_all_to_all_schedule(self.n_qubits, depth, rng),
        }
    }
}

pub type Pair = (usize, usize);
pub type Layer = Vec<Pair>;

/// Layers of disjoint qubit pairs, each acted on by a two-qubit gate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateSchedule {
    n: usize,
    layers: Vec<Layer>,
}

impl GateSchedule {
    pub fn new(n: usize, layers: Vec<Layer>) -> Result<Self> {
        for (t, layer) in layers.iter().enumerate() {
            let mut seen = vec![false; n];
            for &(i, j) in layer {
                if i >= n || j >= n {
                    return Err(invalid(format!("layer {t}: pair ({i},{j}) out of range for n={n}")));
                }
                if i == j {
                    return Err(invalid(format!("layer {t}: pair ({i},{j}) acts on one qubit")));
                }
                if seen[i] || seen[j] {
                    return Err(invalid(format!("layer {t}: qubit reused in ({i},{j})")));
                }
                seen[i] = true;
                seen[j] = true;
            }
        }
        Ok(Self { n, layers })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layer(&self, t: usize) -> &[Pair] {
        &self.layers[t]
    }

    /// True when every layer touches every qubit exactly once.
    pub fn is_perfect_matching(&self) -> bool {
        self.layers.iter().all(|l| 2 * l.len() == self.n)
    }
}

pub fn build_brickwork_schedule(n: usize, depth: usize) -> Result<GateSchedule> {
    if n < 2 || n % 2 != 0 {
        return Err(invalid(format!("brickwork needs an even qubit count >= 2, got {n}")));
    }
    if depth == 0 {
        return Err(invalid("depth must be at least 1"));
    }
    let layers = (0..depth)
        .map(|t| {
            if n == 2 {
                return vec![(0, 1)];
            }
            let offset = t % 2;
            (0..n / 2)
                .map(|k| (2 * k + offset, (2 * k + 1 + offset) % n))
                .collect()
        })
        .collect();
    GateSchedule::new(n, layers)
}

/// Each layer is a uniformly random perfect matching: shuffle, then pair
/// consecutive entries.
pub fn build_all_to_all_schedule(n: usize, depth: usize, rng: &mut Stream) -> Result<GateSchedule> {
    if n < 2 || n % 2 != 0 {
        return Err(invalid(format!("all-to-all pairing needs an even qubit count >= 2, got {n}")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let layers = (0..depth)
        .map(|_| {
            perm.shuffle(rng);
            perm.chunks_exact(2)
                .map(|c| (c[0].min(c[1]), c[0].max(c[1])))
                .collect()
        })
        .collect();
    GateSchedule::new(n, layers)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisorderMode {
    /// Independent rate at every (site, layer).
    Spacetime,
    /// One rate per site, constant in time.
    Quenched,
}

/// Binary disorder: rate `q1` with probability `p`, `q2` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderSpec {
    pub p: f64,
    pub q1: f64,
    pub q2: f64,
    pub mode: DisorderMode,
    #[serde(default)]
    pub seed: u64,
}

impl DisorderSpec {
    pub fn new(p: f64, q1: f64, q2: f64, mode: DisorderMode, seed: u64) -> Result<Self> {
        let spec = Self { p, q1, q2, mode, seed };
        spec.validate()?;
        Ok(spec)
    }

    /// Uniform rate `q` everywhere (no disorder).
    pub fn uniform(q: f64, mode: DisorderMode, seed: u64) -> Result<Self> {
        Self::new(1.0, q, q, mode, seed)
    }

    /// Parametrize by mean rate and relative spread `sigma / q_bar` at fixed `p`.
    pub fn from_sigma_ratio(p: f64, q_bar: f64, ratio: f64, mode: DisorderMode, seed: u64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(invalid(format!("p must lie in (0,1) to carry disorder, got {p}")));
        }
        if !(ratio >= 0.0) {
            return Err(invalid(format!("sigma/q_bar must be non-negative, got {ratio}")));
        }
        let gap = ratio * q_bar / (p * (1.0 - p)).sqrt();
        let q1 = q_bar - (1.0 - p) * gap;
        let q2 = q_bar + p * gap;
        Self::new(p, q1, q2, mode, seed)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(invalid(format!("p = {} outside [0,1]", self.p)));
        }
        if !(self.q1 >= 0.0 && self.q1 <= self.q2 && self.q2 < 1.0) {
            return Err(invalid(format!(
                "need 0 <= q1 <= q2 < 1, got q1 = {}, q2 = {}",
                self.q1, self.q2
            )));
        }
        Ok(())
    }

    pub fn sigma(&self) -> f64 {
        disorder_sigma(self.p, self.q1, self.q2).sigma
    }

    pub fn q_bar(&self) -> f64 {
        disorder_sigma(self.p, self.q1, self.q2).q_bar
    }

    pub fn zero_mean_field_rate(&self) -> f64 {
        zero_mean_field_rate(self.p, self.q1, self.q2)
    }

    fn draw(&self, rng: &mut Stream) -> f64 {
        // Always consume one uniform so that fields with different (q1, q2)
        // but the same seed share their site assignment.
        let u: f64 = rng.random();
        if u < self.p {
            self.q1
        } else {
            self.q2
        }
    }
}

/// Depolarizing rates `q[x, t]`, stored layer-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseField {
    n: usize,
    depth: usize,
    rates: Vec<f64>,
    quenched: bool,
}

impl NoiseField {
    /// Sample using the spec's own seed.
    pub fn sample(spec: &DisorderSpec, n: usize, depth: usize) -> Result<Self> {
        let mut rng = rng::stream(spec.seed, 0);
        Self::sample_with(spec, n, depth, &mut rng)
    }

    pub fn sample_with(spec: &DisorderSpec, n: usize, depth: usize, rng: &mut Stream) -> Result<Self> {
        spec.validate()?;
        let (rates, quenched) = match spec.mode {
            DisorderMode::Spacetime => ((0..n * depth).map(|_| spec.draw(rng)).collect(), false),
            DisorderMode::Quenched => {
                let row: Vec<f64> = (0..n).map(|_| spec.draw(rng)).collect();
                (row.iter().copied().cycle().take(n * depth).collect(), true)
            }
        };
        Ok(Self { n, depth, rates, quenched })
    }

    /// Same rate everywhere.
    pub fn uniform(n: usize, depth: usize, q: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&q) {
            return Err(invalid(format!("rate {q} outside [0,1)")));
        }
        Ok(Self { n, depth, rates: vec![q; n * depth], quenched: true })
    }

    /// Build from explicit rows, one per layer.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let depth = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(invalid("noise-field rows have unequal lengths"));
        }
        if rows.iter().flatten().any(|q| !(0.0..=1.0).contains(q)) {
            return Err(invalid("noise rate outside [0,1]"));
        }
        let quenched = rows.windows(2).all(|w| w[0] == w[1]);
        Ok(Self { n, depth, rates: rows.concat(), quenched })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn is_quenched(&self) -> bool {
        self.quenched
    }

    pub fn rate(&self, site: usize, t: usize) -> f64 {
        self.rates[t * self.n + site]
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.rates[t * self.n..(t + 1) * self.n]
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MitigationMode {
    ZeroMeanField,
    Fixed,
}

/// Antinoise strength applied uniformly after every noise layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MitigationSpec {
    pub mode: MitigationMode,
    pub q_a: f64,
}

impl MitigationSpec {
    pub fn zero_mean_field(spec: &DisorderSpec) -> Self {
        Self { mode: MitigationMode::ZeroMeanField, q_a: spec.zero_mean_field_rate() }
    }

    pub fn fixed(q_a: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&q_a) {
            return Err(invalid(format!("antinoise strength {q_a} outside [0,1)")));
        }
        Ok(Self { mode: MitigationMode::Fixed, q_a })
    }

    /// No antinoise.
    pub fn none() -> Self {
        Self { mode: MitigationMode::Fixed, q_a: 0.0 }
    }
}

/// Antinoise rate with `(1 - q_a) = (1 - q1)^p (1 - q2)^(1 - p)`.
pub fn zero_mean_field_rate(p: f64, q1: f64, q2: f64) -> f64 {
    let log_keep = p * (1.0 - q1).ln() + (1.0 - p) * (1.0 - q2).ln();
    -log_keep.exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisorderMoments {
    pub sigma: f64,
    pub q_bar: f64,
}

impl DisorderMoments {
    pub fn ratio(&self) -> f64 {
        self.sigma / self.q_bar
    }
}

/// Standard deviation and mean of the binary rate distribution.
pub fn disorder_sigma(p: f64, q1: f64, q2: f64) -> DisorderMoments {
    DisorderMoments {
        sigma: (p * (1.0 - p)).sqrt() * (q2 - q1),
        q_bar: p * q1 + (1.0 - p) * q2,
    }
}
