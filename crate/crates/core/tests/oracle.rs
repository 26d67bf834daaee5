//! Replica averages checked against Monte Carlo over the exact simulator.

use pecthresh::circuit::{build_all_to_all_schedule, DisorderMode, DisorderSpec, NoiseField};
use pecthresh::exact::{replay, sample_haar_state, Channels, DensityMatrix, GateRecord};
use pecthresh::experiments::instability_experiment;
use pecthresh::replica::{InitForm, Region, ReplicaState};
use pecthresh::rng;

struct Moments {
    sum: f64,
    sum_sq: f64,
    count: usize,
}

impl Moments {
    fn new() -> Self {
        Self { sum: 0.0, sum_sq: 0.0, count: 0 }
    }

    fn push(&mut self, x: f64) {
        self.sum += x;
        self.sum_sq += x * x;
        self.count += 1;
    }

    fn z_score(&self, expected: f64) -> f64 {
        let n = self.count as f64;
        let mean = self.sum / n;
        let var = (self.sum_sq / n - mean * mean) * n / (n - 1.0);
        (mean - expected).abs() / (var / n).sqrt()
    }
}

#[test]
fn haar_purity_matches_sampled_states() {
    let n = 4;
    let replica = ReplicaState::init_haar_global(n).unwrap();
    let regions = [vec![0], vec![0, 1], vec![1, 3], vec![0, 1, 2]];
    let mut stats: Vec<Moments> = regions.iter().map(|_| Moments::new()).collect();
    let mut rng = rng::stream(41, 0);
    for _ in 0..10_000 {
        let rho = DensityMatrix::from_pure(&sample_haar_state(n, &mut rng)).unwrap();
        for (m, r) in stats.iter_mut().zip(&regions) {
            m.push(rho.reduced(r).unwrap().purity());
        }
    }
    for (m, r) in stats.iter().zip(&regions) {
        let want = replica.avg_purity(&Region::new(r.clone())).unwrap();
        let z = m.z_score(want);
        assert!(z < 3.0, "region {r:?}: {z:.2} standard errors from {want}");
    }
}

#[test]
fn all_to_all_mitigated_purities_match_exact_average() {
    let (n, depth) = (4, 3);
    let spec = DisorderSpec::new(0.5, 0.05, 0.25, DisorderMode::Spacetime, 8).unwrap();
    let field = NoiseField::sample(&spec, n, depth).unwrap();
    let q_a = spec.zero_mean_field_rate();
    let mut rng = rng::stream(43, 0);
    let schedule = build_all_to_all_schedule(n, depth, &mut rng).unwrap();

    let mut replica = ReplicaState::init_haar_global(n).unwrap();
    replica.evolve(&schedule, &field, q_a, |_, _| {}).unwrap();

    let regions = [vec![0], vec![2], vec![0, 1], vec![1, 3]];
    let mut stats: Vec<Moments> = regions.iter().map(|_| Moments::new()).collect();
    for _ in 0..10_000 {
        let rho0 = DensityMatrix::from_pure(&sample_haar_state(n, &mut rng)).unwrap();
        let record = GateRecord::sample(&schedule, &mut rng);
        let rho = replay(&rho0, &record, Channels::mitigated(&field, q_a)).unwrap();
        for (m, r) in stats.iter_mut().zip(&regions) {
            m.push(rho.reduced(r).unwrap().purity());
        }
    }
    for (m, r) in stats.iter().zip(&regions) {
        let want = replica.avg_purity(&Region::new(r.clone())).unwrap();
        let z = m.z_score(want);
        assert!(z < 3.0, "region {r:?}: {z:.2} standard errors from {want}");
    }
}

#[test]
fn instability_regression_n16() {
    let spec = DisorderSpec::new(0.5, 0.02, 0.3, DisorderMode::Quenched, 1).unwrap();
    let fit = instability_experiment(16, &spec, 64, InitForm::ProductOnRegion).unwrap();
    assert_eq!(fit.region_len, 6);
    assert!((fit.slope - 3.149_983_037_676_620_7).abs() < 1e-9, "{}", fit.slope);
    assert!(fit.r2 > 0.9);
}
