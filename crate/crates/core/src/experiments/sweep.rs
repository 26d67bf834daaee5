//! Probe sweeps over disorder strength and system size.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ensemble::{disorder_average, EnsembleResult, PointKey};
use crate::circuit::{DisorderMode, DisorderSpec, GateSchedule, NoiseField, Topology, TopologyKind};
use crate::error::{invalid, Result};
use crate::exact::{self, apply_layer, Channels, DensityMatrix, GateRecord};
use crate::replica::{ReplicaState, SiteMap};
use crate::rng::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    Replica,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Probe {
    /// Replica `Ĩ_ab` from averaged purities of two sites.
    CorrelationMetric,
    /// Exact `I_ab = S_a + S_b - S_ab`.
    MutualInformation,
    /// `-log2` of the single-site purity, averaged over sites.
    Renyi2,
    /// `ln Tr rho_2^+` in signed mode.
    SignTraces,
    /// Replica: circuit-averaged mitigated XEB. Exact: `F_M`.
    Fidelity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    /// Global Haar-random state.
    Haar,
    /// `|0...0>`, equivalently a random product state.
    Product,
}

/// Circuit depth as a function of system size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DepthRule {
    /// `d = factor * N`, rounded, at least 1.
    Linear(f64),
    Fixed(usize),
}

impl DepthRule {
    pub fn depth(&self, n: usize) -> usize {
        match *self {
            Self::Linear(f) => ((f * n as f64).round() as usize).max(1),
            Self::Fixed(d) => d,
        }
    }
}

impl Default for DepthRule {
    fn default() -> Self {
        Self::Linear(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub engine: Engine,
    pub topology: TopologyKind,
    pub disorder: DisorderMode,
    #[serde(default)]
    pub depth: DepthRule,
    pub p: f64,
    pub q_bar: f64,
    /// `sigma / q_bar` grid.
    pub ratios: Vec<f64>,
    pub sizes: Vec<usize>,
    pub realizations: usize,
    #[serde(default)]
    pub seed: u64,
    pub probe: Probe,
    #[serde(default = "default_initial")]
    pub initial: InitialState,
}

fn default_initial() -> InitialState {
    InitialState::Haar
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.ratios.is_empty() || self.sizes.is_empty() {
            return Err(invalid("sweep grids must be nonempty"));
        }
        if self.realizations == 0 {
            return Err(invalid("realizations must be at least 1"));
        }
        let max_n = match self.engine {
            Engine::Replica => crate::replica::MAX_QUBITS,
            Engine::Exact => 12,
        };
        for &n in &self.sizes {
            Topology::new(self.topology, n)?;
            if n > max_n {
                return Err(invalid(format!("N = {n} too large for this engine (max {max_n})")));
            }
            if self.depth.depth(n) == 0 {
                return Err(invalid("depth must be at least 1"));
            }
        }
        for &r in &self.ratios {
            self.disorder_spec(r)?;
        }
        let supported = match self.engine {
            Engine::Replica => !matches!(self.probe, Probe::MutualInformation),
            Engine::Exact => !matches!(self.probe, Probe::CorrelationMetric | Probe::SignTraces),
        };
        if !supported {
            return Err(invalid(format!("probe {:?} is not available on the {:?} engine", self.probe, self.engine)));
        }
        Ok(())
    }

    pub fn disorder_spec(&self, ratio: f64) -> Result<DisorderSpec> {
        if ratio == 0.0 {
            return DisorderSpec::new(self.p, self.q_bar, self.q_bar, self.disorder, self.seed);
        }
        DisorderSpec::from_sigma_ratio(self.p, self.q_bar, ratio, self.disorder, self.seed)
    }

    /// Seed for every realization at size `n`; shared across the ratio grid.
    pub fn size_seed(&self, n: usize) -> u64 {
        rng::derive_seed(self.seed, n as u64)
    }
}

/// The random ingredients of one realization, drawn in a fixed order so that
/// realizations at different ratios share their randomness.
pub struct Realization {
    pub schedule: GateSchedule,
    pub field: NoiseField,
    pub q_a: f64,
    /// The probe pair; for 1D the second site is the antipode of the first.
    pub sites: (usize, usize),
}

impl Realization {
    pub fn draw(topology: TopologyKind, disorder: &DisorderSpec, n: usize, depth: usize, rng: &mut Stream) -> Result<Self> {
        let schedule = Topology::new(topology, n)?.schedule(depth, rng)?;
        let field = NoiseField::sample_with(disorder, n, depth, rng)?;
        let a = rng.random_range(0..n);
        let b = match topology {
            TopologyKind::Chain1dPeriodic => (a + n / 2) % n,
            TopologyKind::AllToAll => (a + rng.random_range(1..n)) % n,
        };
        Ok(Self { schedule, field, q_a: disorder.zero_mean_field_rate(), sites: (a, b) })
    }
}

fn replica_initial(n: usize, initial: InitialState) -> Result<ReplicaState> {
    match initial {
        InitialState::Haar => ReplicaState::init_haar_global(n),
        InitialState::Product => ReplicaState::init_product_state(n),
    }
}

fn mean_renyi2_replica(state: &ReplicaState) -> Result<f64> {
    let n = state.n_qubits();
    let mut total = 0.0;
    for x in 0..n {
        total += state.renyi2_probe(x)?;
    }
    Ok(total / n as f64)
}

/// Probe value for one replica realization.
pub fn replica_probe(real: &Realization, probe: Probe, initial: InitialState) -> Result<f64> {
    let n = real.field.n_qubits();
    let mut state = replica_initial(n, initial)?;
    match probe {
        Probe::Fidelity => {
            for (t, layer) in real.schedule.layers().iter().enumerate() {
                let maps = real.field.row(t).iter().map(|&q| SiteMap::one_sided(q, real.q_a)).collect::<Result<Vec<_>>>()?;
                state.step_layer_with(layer, &maps)?;
            }
            return Ok(state.collision_score() - 1.0);
        }
        Probe::SignTraces => state = state.with_sign_tracking(),
        _ => {}
    }
    state.evolve(&real.schedule, &real.field, real.q_a, |_, _| {})?;
    match probe {
        Probe::CorrelationMetric => state.correlation_metric(real.sites.0, real.sites.1),
        Probe::Renyi2 => mean_renyi2_replica(&state),
        Probe::SignTraces => Ok(state.sign_resolved_traces()?.0.ln()),
        Probe::MutualInformation | Probe::Fidelity => Err(invalid("probe not available on the replica engine")),
    }
}

fn exact_initial(n: usize, initial: InitialState, rng: &mut Stream) -> Result<DensityMatrix> {
    match initial {
        InitialState::Haar => DensityMatrix::from_pure(&exact::sample_haar_state(n, rng)),
        InitialState::Product => DensityMatrix::zero_state(n),
    }
}

/// Probe value for one exact realization; draws the initial state and gates from `rng`.
pub fn exact_probe(real: &Realization, probe: Probe, initial: InitialState, rng: &mut Stream) -> Result<f64> {
    let n = real.field.n_qubits();
    let rho0 = exact_initial(n, initial, rng)?;
    let record = GateRecord::sample(&real.schedule, rng);
    match probe {
        Probe::Fidelity => {
            let mut anti = rho0.clone();
            let mut noisy = rho0;
            for (t, layer) in record.layers.iter().enumerate() {
                apply_layer(&mut anti, layer, Channels::antinoise_only(real.q_a), t)?;
                apply_layer(&mut noisy, layer, Channels::noise_only(&real.field), t)?;
            }
            Ok(anti.overlap(&noisy).re)
        }
        Probe::MutualInformation | Probe::Renyi2 => {
            let rho = exact::replay(&rho0, &record, Channels::mitigated(&real.field, real.q_a))?;
            if probe == Probe::MutualInformation {
                return exact::mutual_information(&rho, real.sites.0, real.sites.1);
            }
            let mut total = 0.0;
            for x in 0..n {
                let p = rho.reduced(&[x])?.purity();
                total += if p > 0.0 { -p.log2() } else { f64::NAN };
            }
            Ok(total / n as f64)
        }
        Probe::CorrelationMetric | Probe::SignTraces => Err(invalid("probe not available on the exact engine")),
    }
}

/// Ensemble for one grid point.
pub fn sweep_point(spec: &SweepSpec, n: usize, ratio: f64) -> Result<EnsembleResult> {
    let disorder = spec.disorder_spec(ratio)?;
    let depth = spec.depth.depth(n);
    let key = PointKey { n, ratio, depth };
    disorder_average(key, spec.realizations, spec.size_seed(n), |_, rng| {
        let real = Realization::draw(spec.topology, &disorder, n, depth, rng)?;
        match spec.engine {
            Engine::Replica => replica_probe(&real, spec.probe, spec.initial),
            Engine::Exact => exact_probe(&real, spec.probe, spec.initial, rng),
        }
    })
}

/// Every `(N, ratio)` point, sizes outermost.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<EnsembleResult>> {
    spec.validate()?;
    let mut rows = Vec::with_capacity(spec.sizes.len() * spec.ratios.len());
    for &n in &spec.sizes {
        for &ratio in &spec.ratios {
            rows.push(sweep_point(spec, n, ratio)?);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(engine: Engine, probe: Probe) -> SweepSpec {
        SweepSpec {
            engine,
            topology: TopologyKind::AllToAll,
            disorder: DisorderMode::Spacetime,
            depth: DepthRule::default(),
            p: 0.5,
            q_bar: 0.1,
            ratios: vec![0.0, 0.5],
            sizes: vec![4, 6],
            realizations: 8,
            seed: 11,
            probe,
            initial: InitialState::Haar,
        }
    }

    #[test]
    fn validation() {
        assert!(spec(Engine::Replica, Probe::MutualInformation).validate().is_err());
        assert!(spec(Engine::Exact, Probe::CorrelationMetric).validate().is_err());
        let mut s = spec(Engine::Replica, Probe::Renyi2);
        s.sizes = vec![5];
        assert!(s.validate().is_err());
        s.sizes = vec![];
        assert!(s.validate().is_err());
        let mut s = spec(Engine::Replica, Probe::Renyi2);
        s.ratios = vec![1.5];
        assert!(s.validate().is_err());
        assert_eq!(DepthRule::Linear(1.0).depth(12), 12);
        assert_eq!(DepthRule::Fixed(3).depth(12), 3);
    }

    #[test]
    fn sweep_is_reproducible_and_complete() {
        let s = spec(Engine::Replica, Probe::CorrelationMetric);
        let a = sweep(&s).unwrap();
        assert_eq!(a.len(), 4);
        assert!(a.iter().all(|r| r.count + r.non_finite == 8));
        assert_eq!(a, sweep(&s).unwrap());
    }

    #[test]
    fn zero_disorder_probes() {
        // Perfect mitigation at sigma = 0: the state is the noiseless one.
        let s = spec(Engine::Replica, Probe::SignTraces);
        for row in sweep(&s).unwrap().iter().filter(|r| r.key.ratio == 0.0) {
            assert!(row.mean.abs() < 1e-12 && row.std < 1e-12);
        }
        let mut s = spec(Engine::Exact, Probe::Fidelity);
        s.initial = InitialState::Product;
        for row in sweep(&s).unwrap().iter().filter(|r| r.key.ratio == 0.0) {
            assert!((row.mean - 1.0).abs() < 1e-9);
        }
        let mut s = spec(Engine::Replica, Probe::Renyi2);
        s.sizes = vec![8];
        s.ratios = vec![0.0];
        let row = sweep(&s).unwrap()[0];
        // Haar page value of a single site, for a noiseless circuit.
        let page = -((2.0 + 128.0) / 257.0f64).log2();
        assert!((row.mean - page).abs() < 1e-9);
    }

    #[test]
    fn exact_mutual_information_matches_replica_scale() {
        let mut s = spec(Engine::Exact, Probe::MutualInformation);
        s.ratios = vec![0.0];
        s.sizes = vec![6];
        let row = sweep(&s).unwrap()[0];
        assert!(row.mean >= 0.0 && row.mean < 0.5);
    }
}
