//! Circuit-averaged two-copy state in the `{I, S}^N` operator basis.
//!
//! The averaged state `E_U[rho ⊗ rho]` is expanded as `Σ_c w(c) ⊗_x O_{c_x}`,
//! where `O = I` (identity on the two copies of a qubit) or `O = S` (swap of
//! the two copies). Bit `x` of the configuration index is 1 when site `x`
//! carries `S`. Per site, `Tr I = 4` and `Tr S = 2`.
//!
//! Haar two-qubit gates act as `II -> II`, `SS -> SS`, `IS, SI -> 2/5 (II + SS)`.
//! Any single-site channel that is unital on one copy acts as
//! `S -> (1 - r)/2 I + r S` for some retention factor `r` (see [`SiteMap`]).

use std::borrow::Cow;

use crate::circuit::{GateSchedule, NoiseField, Pair};
use crate::error::{check_site, invalid, Error, Result};

const GATE_MIX: f64 = 2.0 / 5.0;
pub const MAX_QUBITS: usize = 30;

/// A set of sites.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    sites: Vec<usize>,
}

impl Region {
    pub fn new(mut sites: Vec<usize>) -> Self {
        sites.sort_unstable();
        sites.dedup();
        Self { sites }
    }

    pub fn empty() -> Self {
        Self { sites: Vec::new() }
    }

    /// Sites `start, start+1, ..., start+len-1` modulo `n`.
    pub fn contiguous(start: usize, len: usize, n: usize) -> Self {
        Self::new((0..len).map(|k| (start + k) % n).collect())
    }

    pub fn all(n: usize) -> Self {
        Self::new((0..n).collect())
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    fn mask(&self, n: usize) -> Result<usize> {
        self.sites.iter().try_fold(0usize, |m, &x| {
            check_site(x, n)?;
            Ok(m | (1 << x))
        })
    }
}

impl From<&[usize]> for Region {
    fn from(sites: &[usize]) -> Self {
        Self::new(sites.to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitForm {
    /// `I^{|A|} + S^{|A|}` on the region: a Haar-random state there.
    HaarOnRegion,
    /// `(I + S)/6` on every site of the region: a random product state there.
    ProductOnRegion,
}

/// Single-site transfer map `I -> I`, `S -> (1 - r)/2 I + r S`.
///
/// Trace preserving for every `r`, since `Tr S = 2 = 4 (1 - r)/2 + 2 r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteMap {
    pub retention: f64,
}

impl SiteMap {
    pub const IDENTITY: SiteMap = SiteMap { retention: 1.0 };

    /// Depolarizing noise on both copies.
    pub fn noise(q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(invalid(format!("noise rate {q} outside [0,1]")));
        }
        Ok(Self { retention: (1.0 - q).powi(2) })
    }

    /// Antinoise on both copies.
    pub fn antinoise(q_a: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&q_a) {
            return Err(invalid(format!("antinoise strength {q_a} outside [0,1)")));
        }
        Ok(Self { retention: (1.0 - q_a).powi(-2) })
    }

    /// Noise followed by antinoise on both copies.
    pub fn mitigated(q: f64, q_a: f64) -> Result<Self> {
        Ok(Self::noise(q)?.then(Self::antinoise(q_a)?))
    }

    /// Noise on one copy and antinoise on the other (or both on the same
    /// copy): the map behind circuit-averaged mitigated fidelities.
    pub fn one_sided(q: f64, q_a: f64) -> Result<Self> {
        let keep = Self::noise(q)?.retention.sqrt();
        let boost = Self::antinoise(q_a)?.retention.sqrt();
        Ok(Self { retention: keep * boost })
    }

    /// `self` followed by `next`.
    pub fn then(self, next: SiteMap) -> SiteMap {
        SiteMap { retention: self.retention * next.retention }
    }

    fn identity_coefficient(self) -> f64 {
        (1.0 - self.retention) / 2.0
    }

    fn matrix(self) -> [[f64; 2]; 2] {
        [[1.0, self.identity_coefficient()], [0.0, self.retention]]
    }
}

type Mat4 = [[f64; 4]; 4];

fn mat4_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            out[r][c] = (0..4).map(|k| a[r][k] * b[k][c]).sum();
        }
    }
    out
}

// Local ordering for a pair (i, j): index = bit_i + 2 bit_j.
fn gate_matrix() -> Mat4 {
    [
        [1.0, GATE_MIX, GATE_MIX, 0.0],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, GATE_MIX, GATE_MIX, 1.0],
    ]
}

fn first_site_matrix(m: SiteMap) -> Mat4 {
    let (a, r) = (m.identity_coefficient(), m.retention);
    [[1.0, a, 0.0, 0.0], [0.0, r, 0.0, 0.0], [0.0, 0.0, 1.0, a], [0.0, 0.0, 0.0, r]]
}

fn second_site_matrix(m: SiteMap) -> Mat4 {
    let (a, r) = (m.identity_coefficient(), m.retention);
    [[1.0, 0.0, a, 0.0], [0.0, 1.0, 0.0, a], [0.0, 0.0, r, 0.0], [0.0, 0.0, 0.0, r]]
}

#[inline]
fn insert_zero(k: usize, pos: usize) -> usize {
    ((k >> pos) << (pos + 1)) | (k & ((1 << pos) - 1))
}

fn apply_pair_kernel(w: &mut [f64], n: usize, i: usize, j: usize, m: &Mat4) {
    let (bi, bj) = (1usize << i, 1usize << j);
    let (lo, hi) = (i.min(j), i.max(j));
    for k in 0..(1usize << (n - 2)) {
        let b = insert_zero(insert_zero(k, lo), hi);
        let idx = [b, b | bi, b | bj, b | bi | bj];
        let v = [w[idx[0]], w[idx[1]], w[idx[2]], w[idx[3]]];
        for r in 0..4 {
            w[idx[r]] = m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2] + m[r][3] * v[3];
        }
    }
}

fn apply_pair_kernel_signed(plus: &mut [f64], minus: &mut [f64], n: usize, i: usize, j: usize, m: &Mat4) {
    let mut pos = [[0.0; 4]; 4];
    let mut neg = [[0.0; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            pos[r][c] = m[r][c].max(0.0);
            neg[r][c] = (-m[r][c]).max(0.0);
        }
    }
    let (bi, bj) = (1usize << i, 1usize << j);
    let (lo, hi) = (i.min(j), i.max(j));
    for k in 0..(1usize << (n - 2)) {
        let b = insert_zero(insert_zero(k, lo), hi);
        let idx = [b, b | bi, b | bj, b | bi | bj];
        let p = [plus[idx[0]], plus[idx[1]], plus[idx[2]], plus[idx[3]]];
        let q = [minus[idx[0]], minus[idx[1]], minus[idx[2]], minus[idx[3]]];
        for r in 0..4 {
            let mut np = 0.0;
            let mut nm = 0.0;
            for c in 0..4 {
                np += pos[r][c] * p[c] + neg[r][c] * q[c];
                nm += pos[r][c] * q[c] + neg[r][c] * p[c];
            }
            plus[idx[r]] = np;
            minus[idx[r]] = nm;
        }
    }
}

fn apply_site_kernel(w: &mut [f64], n: usize, x: usize, m: [[f64; 2]; 2]) {
    let bx = 1usize << x;
    for k in 0..(1usize << (n - 1)) {
        let b = insert_zero(k, x);
        let (vi, vs) = (w[b], w[b | bx]);
        w[b] = m[0][0] * vi + m[0][1] * vs;
        w[b | bx] = m[1][0] * vi + m[1][1] * vs;
    }
}

fn apply_site_kernel_signed(plus: &mut [f64], minus: &mut [f64], n: usize, x: usize, m: [[f64; 2]; 2]) {
    let bx = 1usize << x;
    let pos = m.map(|row| row.map(|v| v.max(0.0)));
    let neg = m.map(|row| row.map(|v| (-v).max(0.0)));
    for k in 0..(1usize << (n - 1)) {
        let b = insert_zero(k, x);
        let p = [plus[b], plus[b | bx]];
        let q = [minus[b], minus[b | bx]];
        for (r, idx) in [b, b | bx].into_iter().enumerate() {
            plus[idx] = pos[r][0] * p[0] + pos[r][1] * p[1] + neg[r][0] * q[0] + neg[r][1] * q[1];
            minus[idx] = pos[r][0] * q[0] + pos[r][1] * q[1] + neg[r][0] * p[0] + neg[r][1] * p[1];
        }
    }
}

/// `Σ_c w(c) Π_x f_x(c_x)` with `f_x = 4` when site `x` "matches" (I outside
/// `mask`, S inside) and 2 otherwise.
fn swap_weighted_sum(w: &[f64], n: usize, mask: usize) -> f64 {
    let full = (1usize << n) - 1;
    let table: Vec<f64> = (0..=n).map(|k| 2f64.powi((n + k) as i32)).collect();
    w.iter()
        .enumerate()
        .map(|(c, &v)| v * table[(!(c ^ mask) & full).count_ones() as usize])
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
enum Weights {
    Plain(Vec<f64>),
    Signed { plus: Vec<f64>, minus: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaState {
    n: usize,
    weights: Weights,
}

impl ReplicaState {
    fn check_n(n: usize) -> Result<()> {
        if n == 0 || n > MAX_QUBITS {
            Err(invalid(format!("replica state needs 1..={MAX_QUBITS} qubits, got {n}")))
        } else {
            Ok(())
        }
    }

    pub fn from_weights(n: usize, weights: Vec<f64>) -> Result<Self> {
        Self::check_n(n)?;
        if weights.len() != 1 << n {
            return Err(invalid(format!("expected {} weights, got {}", 1usize << n, weights.len())));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(invalid("weights must be finite"));
        }
        Ok(Self { n, weights: Weights::Plain(weights) })
    }

    /// Global Haar-random pure state: `α (I^N + S^N)` with `α = 1/(2^N (2^N + 1))`.
    pub fn init_haar_global(n: usize) -> Result<Self> {
        Self::check_n(n)?;
        let dim = 2f64.powi(n as i32);
        let mut w = vec![0.0; 1 << n];
        let alpha = 1.0 / (dim * (dim + 1.0));
        w[0] = alpha;
        w[(1 << n) - 1] = alpha;
        Ok(Self { n, weights: Weights::Plain(w) })
    }

    /// Random product state: `((I + S)/6)^N`.
    pub fn init_product_state(n: usize) -> Result<Self> {
        Self::check_n(n)?;
        let w = vec![6f64.powi(-(n as i32)); 1 << n];
        Ok(Self { n, weights: Weights::Plain(w) })
    }

    /// Maximally mixed outside `region`, and the chosen random state on it.
    pub fn init_simple(n: usize, region: &Region, form: InitForm) -> Result<Self> {
        Self::check_n(n)?;
        if region.is_empty() {
            return Err(Error::EmptyRegion);
        }
        let mask = region.mask(n)?;
        let k = region.len() as i32;
        let outside = 4f64.powi(-(n as i32 - k));
        let mut w = vec![0.0; 1 << n];
        match form {
            InitForm::HaarOnRegion => {
                let dim = 2f64.powi(k);
                let alpha = outside / (dim * (dim + 1.0));
                w[0] = alpha;
                w[mask] = alpha;
            }
            InitForm::ProductOnRegion => {
                let weight = outside * 6f64.powi(-k);
                // Enumerate the subsets of `mask`.
                let mut sub = mask;
                loop {
                    w[sub] = weight;
                    if sub == 0 {
                        break;
                    }
                    sub = (sub - 1) & mask;
                }
            }
        }
        Ok(Self { n, weights: Weights::Plain(w) })
    }

    /// Switch to sign-resolved storage `w = w_plus - w_minus`.
    pub fn with_sign_tracking(self) -> Self {
        match self.weights {
            Weights::Plain(w) => {
                let plus = w.iter().map(|v| v.max(0.0)).collect();
                let minus = w.iter().map(|v| (-v).max(0.0)).collect();
                Self { n: self.n, weights: Weights::Signed { plus, minus } }
            }
            signed => Self { n: self.n, weights: signed },
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn is_signed(&self) -> bool {
        matches!(self.weights, Weights::Signed { .. })
    }

    /// Net weights (computed as `w_plus - w_minus` in signed mode).
    pub fn weights(&self) -> Cow<'_, [f64]> {
        match &self.weights {
            Weights::Plain(w) => Cow::Borrowed(w),
            Weights::Signed { plus, minus } => {
                Cow::Owned(plus.iter().zip(minus).map(|(p, m)| p - m).collect())
            }
        }
    }

    pub fn signed_parts(&self) -> Option<(&[f64], &[f64])> {
        match &self.weights {
            Weights::Signed { plus, minus } => Some((plus, minus)),
            Weights::Plain(_) => None,
        }
    }

    fn apply_pair(&mut self, i: usize, j: usize, m: &Mat4) -> Result<()> {
        check_site(i, self.n)?;
        check_site(j, self.n)?;
        if i == j {
            return Err(invalid(format!("gate needs two distinct sites, got ({i},{j})")));
        }
        match &mut self.weights {
            Weights::Plain(w) => apply_pair_kernel(w, self.n, i, j, m),
            Weights::Signed { plus, minus } => apply_pair_kernel_signed(plus, minus, self.n, i, j, m),
        }
        Ok(())
    }

    /// Haar-averaged two-qubit gate on `(i, j)`.
    pub fn apply_gate(&mut self, i: usize, j: usize) -> Result<()> {
        self.apply_pair(i, j, &gate_matrix())
    }

    pub fn apply_site_map(&mut self, site: usize, map: SiteMap) -> Result<()> {
        check_site(site, self.n)?;
        match &mut self.weights {
            Weights::Plain(w) => apply_site_kernel(w, self.n, site, map.matrix()),
            Weights::Signed { plus, minus } => {
                apply_site_kernel_signed(plus, minus, self.n, site, map.matrix())
            }
        }
        Ok(())
    }

    pub fn apply_noise(&mut self, site: usize, q: f64) -> Result<()> {
        self.apply_site_map(site, SiteMap::noise(q)?)
    }

    pub fn apply_antinoise(&mut self, site: usize, q_a: f64) -> Result<()> {
        self.apply_site_map(site, SiteMap::antinoise(q_a)?)
    }

    /// Gates on every pair of `layer`, then one site map per site.
    ///
    /// Each gate is fused with the maps of its two sites into a single pass.
    /// In signed mode the fused map decides the sign routing, so a site whose
    /// noise and antinoise cancel exactly contributes no negative weight.
    pub fn step_layer_with(&mut self, layer: &[Pair], maps: &[SiteMap]) -> Result<()> {
        if maps.len() != self.n {
            return Err(invalid(format!("expected {} site maps, got {}", self.n, maps.len())));
        }
        let mut covered = vec![false; self.n];
        for &(i, j) in layer {
            check_site(i, self.n)?;
            check_site(j, self.n)?;
            if covered[i] || covered[j] {
                return Err(invalid(format!("qubit reused within layer at ({i},{j})")));
            }
            covered[i] = true;
            covered[j] = true;
            let fused = mat4_mul(
                &second_site_matrix(maps[j]),
                &mat4_mul(&first_site_matrix(maps[i]), &gate_matrix()),
            );
            self.apply_pair(i, j, &fused)?;
        }
        for (x, &map) in maps.iter().enumerate() {
            if !covered[x] && map != SiteMap::IDENTITY {
                self.apply_site_map(x, map)?;
            }
        }
        Ok(())
    }

    /// One circuit layer: gates, then noise `rates[x]` and antinoise `q_a` on every site.
    pub fn step_layer(&mut self, layer: &[Pair], rates: &[f64], q_a: f64) -> Result<()> {
        if rates.len() != self.n {
            return Err(invalid(format!("expected {} noise rates, got {}", self.n, rates.len())));
        }
        let maps = rates
            .iter()
            .map(|&q| SiteMap::mitigated(q, q_a))
            .collect::<Result<Vec<_>>>()?;
        self.step_layer_with(layer, &maps)
    }

    /// Run a whole schedule, calling `observe(t, state)` after each layer.
    pub fn evolve(
        &mut self,
        schedule: &GateSchedule,
        field: &NoiseField,
        q_a: f64,
        mut observe: impl FnMut(usize, &ReplicaState),
    ) -> Result<()> {
        if field.depth() < schedule.depth() || field.n_qubits() != self.n || schedule.n_qubits() != self.n {
            return Err(invalid("schedule, noise field and state sizes disagree"));
        }
        for (t, layer) in schedule.layers().iter().enumerate() {
            self.step_layer(layer, field.row(t), q_a)?;
            observe(t, self);
        }
        Ok(())
    }

    fn weighted(&self, mask: usize) -> f64 {
        match &self.weights {
            Weights::Plain(w) => swap_weighted_sum(w, self.n, mask),
            Weights::Signed { plus, minus } => {
                swap_weighted_sum(plus, self.n, mask) - swap_weighted_sum(minus, self.n, mask)
            }
        }
    }

    /// Trace of the two-copy operator.
    pub fn trace(&self) -> f64 {
        self.weighted(0)
    }

    /// Circuit-averaged purity `E_U[Tr rho_A^2] = Tr[(rho ⊗ rho) S_A]`.
    pub fn avg_purity(&self, region: &Region) -> Result<f64> {
        Ok(self.weighted(region.mask(self.n)?))
    }

    /// `-log2 P_a - log2 P_b + log2 P_ab`. NaN when a purity is not positive.
    pub fn correlation_metric(&self, a: usize, b: usize) -> Result<f64> {
        if a == b {
            return Err(invalid(format!("correlation metric needs distinct sites, got {a} twice")));
        }
        let pa = self.avg_purity(&Region::new(vec![a]))?;
        let pb = self.avg_purity(&Region::new(vec![b]))?;
        let pab = self.avg_purity(&Region::new(vec![a, b]))?;
        if pa > 0.0 && pb > 0.0 && pab > 0.0 {
            Ok(-pa.log2() - pb.log2() + pab.log2())
        } else {
            Ok(f64::NAN)
        }
    }

    /// Single-site Renyi-2 probe `-log2 E_U[Tr rho_x^2]`. NaN when the purity is not positive.
    pub fn renyi2_probe(&self, site: usize) -> Result<f64> {
        let p = self.avg_purity(&Region::new(vec![site]))?;
        Ok(if p > 0.0 { -p.log2() } else { f64::NAN })
    }

    /// `(Tr rho_2^+, Tr rho_2^-)`.
    pub fn sign_resolved_traces(&self) -> Result<(f64, f64)> {
        match &self.weights {
            Weights::Signed { plus, minus } => {
                Ok((swap_weighted_sum(plus, self.n, 0), swap_weighted_sum(minus, self.n, 0)))
            }
            Weights::Plain(_) => Err(Error::SignedModeDisabled),
        }
    }

    /// Trace carried by configurations other than all-I.
    pub fn s_sector_weight(&self) -> f64 {
        let w = self.weights();
        self.trace() - w[0] * 4f64.powi(self.n as i32)
    }

    /// `2^N Σ_x E[p(x) p'(x)]` for computational-basis outcome distributions
    /// of the two copies; minus one this is the linear XEB score.
    pub fn collision_score(&self) -> f64 {
        let total: f64 = self.weights().iter().sum();
        4f64.powi(self.n as i32) * total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn random_state(n: usize, seed: u64) -> ReplicaState {
        use rand::Rng;
        let mut rng = crate::rng::stream(seed, 0);
        let mut w: Vec<f64> = (0..1 << n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s = ReplicaState::from_weights(n, w.clone()).unwrap();
        let t = s.trace();
        w.iter_mut().for_each(|v| *v /= t);
        ReplicaState::from_weights(n, w).unwrap()
    }

    #[test]
    fn haar_init_normalization() {
        let s = ReplicaState::init_haar_global(1).unwrap();
        assert_eq!(s.weights().as_ref(), &[1.0 / 6.0, 1.0 / 6.0]);
        assert_abs_diff_eq!(s.trace(), 1.0, epsilon = 1e-15);
        let s = ReplicaState::init_haar_global(2).unwrap();
        assert_abs_diff_eq!(s.weights()[0], 1.0 / 20.0, epsilon = 1e-16);
        assert_abs_diff_eq!(s.trace(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.avg_purity(&Region::all(2)).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn product_init_normalization() {
        assert_eq!(ReplicaState::init_product_state(1).unwrap(), ReplicaState::init_haar_global(1).unwrap());
        let s = ReplicaState::init_product_state(2).unwrap();
        assert!(s.weights().iter().all(|&w| (w - 1.0 / 36.0).abs() < 1e-17));
        assert_abs_diff_eq!(s.trace(), 1.0, epsilon = 1e-15);
        let s = ReplicaState::init_product_state(5).unwrap();
        for x in 0..5 {
            assert_abs_diff_eq!(s.avg_purity(&Region::new(vec![x])).unwrap(), 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn simple_init() {
        let n = 6;
        let haar = ReplicaState::init_simple(n, &Region::all(n), InitForm::HaarOnRegion).unwrap();
        assert_eq!(haar, ReplicaState::init_haar_global(n).unwrap());

        let s = ReplicaState::init_simple(2, &Region::new(vec![0]), InitForm::ProductOnRegion).unwrap();
        assert_abs_diff_eq!(s.weights()[0b00], 1.0 / 24.0, epsilon = 1e-17);
        assert_abs_diff_eq!(s.weights()[0b01], 1.0 / 24.0, epsilon = 1e-17);
        assert_eq!(s.weights()[0b10], 0.0);
        assert_abs_diff_eq!(s.trace(), 1.0, epsilon = 1e-15);

        for (n, len) in [(5, 2), (8, 3), (10, 10)] {
            let region = Region::contiguous(n - 1, len, n);
            let s = ReplicaState::init_simple(n, &region, InitForm::ProductOnRegion).unwrap();
            let denom = 2f64.powi(2 * n as i32 - len as i32) * 3f64.powi(len as i32);
            assert_abs_diff_eq!(s.weights()[0] * denom, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(s.trace(), 1.0, epsilon = 1e-12);
            let h = ReplicaState::init_simple(n, &region, InitForm::HaarOnRegion).unwrap();
            assert_abs_diff_eq!(h.trace(), 1.0, epsilon = 1e-12);
        }
        assert_eq!(
            ReplicaState::init_simple(3, &Region::empty(), InitForm::HaarOnRegion),
            Err(Error::EmptyRegion)
        );
    }

    #[test]
    fn gate_on_domain_wall() {
        // Weight 1 on I at site 0, S at site 1.
        let mut w = vec![0.0; 4];
        w[0b10] = 1.0;
        let mut s = ReplicaState::from_weights(2, w).unwrap();
        s.apply_gate(0, 1).unwrap();
        assert_eq!(s.weights().as_ref(), &[GATE_MIX, 0.0, 0.0, GATE_MIX]);
    }

    #[test]
    fn gate_fixed_points() {
        for n in [2, 5] {
            for config in [0usize, (1 << n) - 1] {
                let mut w = vec![0.0; 1 << n];
                w[config] = 0.3;
                let mut s = ReplicaState::from_weights(n, w.clone()).unwrap();
                s.apply_gate(0, n - 1).unwrap();
                s.apply_gate(1, 0).unwrap();
                assert_eq!(s.weights().as_ref(), w.as_slice());
            }
        }
    }

    #[test]
    fn gate_errors() {
        let mut s = ReplicaState::init_product_state(3).unwrap();
        assert!(matches!(s.apply_gate(0, 3), Err(Error::SiteOutOfRange { .. })));
        assert!(s.apply_gate(1, 1).is_err());
        assert!(s.apply_noise(0, 1.5).is_err());
        assert!(s.apply_antinoise(0, 1.0).is_err());
    }

    #[test]
    fn noise_extremes() {
        let mut s = ReplicaState::from_weights(1, vec![0.0, 0.5]).unwrap();
        s.apply_noise(0, 0.0).unwrap();
        assert_eq!(s.weights().as_ref(), &[0.0, 0.5]);
        s.apply_noise(0, 1.0).unwrap();
        assert_eq!(s.weights().as_ref(), &[0.25, 0.0]);
        s.apply_antinoise(0, 0.0).unwrap();
        assert_eq!(s.weights().as_ref(), &[0.25, 0.0]);
    }

    #[test]
    fn noise_then_matched_antinoise_is_identity() {
        for q in [0.0, 0.05, 0.1, 0.3] {
            let mut s = random_state(6, 17);
            let before = s.weights().into_owned();
            for x in 0..6 {
                s.apply_noise(x, q).unwrap();
                s.apply_antinoise(x, q).unwrap();
            }
            for (a, b) in s.weights().iter().zip(&before) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn antinoise_routes_negative_weight() {
        let mut s = ReplicaState::init_product_state(3).unwrap().with_sign_tracking();
        s.apply_antinoise(1, 0.2).unwrap();
        let (_, minus) = s.signed_parts().unwrap();
        assert!(minus.iter().any(|&m| m > 0.0));
        let (tp, tm) = s.sign_resolved_traces().unwrap();
        assert_abs_diff_eq!(tp - tm, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn signed_mode_requires_opt_in() {
        let s = ReplicaState::init_product_state(2).unwrap();
        assert_eq!(s.sign_resolved_traces(), Err(Error::SignedModeDisabled));
    }

    #[test]
    fn haar_purity_closed_form() {
        let n = 7;
        let s = ReplicaState::init_haar_global(n).unwrap();
        for k in 0..=n {
            let expected = (2f64.powi(k as i32) + 2f64.powi((n - k) as i32)) / (2f64.powi(n as i32) + 1.0);
            let region = Region::new((0..k).collect());
            assert_abs_diff_eq!(s.avg_purity(&region).unwrap(), expected, epsilon = 1e-12);
        }
        let s2 = ReplicaState::init_haar_global(2).unwrap();
        assert_abs_diff_eq!(s2.avg_purity(&Region::new(vec![1])).unwrap(), 0.8, epsilon = 1e-15);
    }

    #[test]
    fn maximally_mixed_site_purity() {
        let s = ReplicaState::from_weights(3, {
            let mut w = vec![0.0; 8];
            w[0] = 1.0 / 64.0;
            w
        })
        .unwrap();
        assert_abs_diff_eq!(s.avg_purity(&Region::new(vec![2])).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.renyi2_probe(2).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn correlation_metric_examples() {
        let p = ReplicaState::init_product_state(4).unwrap();
        assert_abs_diff_eq!(p.correlation_metric(0, 3).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.renyi2_probe(1).unwrap(), 0.0, epsilon = 1e-12);
        let h = ReplicaState::init_haar_global(2).unwrap();
        assert_abs_diff_eq!(h.correlation_metric(0, 1).unwrap(), 2.0 * (1.25f64).log2(), epsilon = 1e-12);
        assert_abs_diff_eq!(h.correlation_metric(0, 1).unwrap(), 0.643856, epsilon = 1e-6);
        assert!(h.correlation_metric(1, 1).is_err());
    }

    #[test]
    fn trace_examples() {
        assert_eq!(ReplicaState::from_weights(3, vec![0.0; 8]).unwrap().trace(), 0.0);
    }

    #[test]
    fn strong_antinoise_gives_negative_probe() {
        // Antinoise alone on a pure product site pushes purity above one.
        let mut s = ReplicaState::init_product_state(2).unwrap();
        s.apply_antinoise(0, 0.3).unwrap();
        assert!(s.renyi2_probe(0).unwrap() < 0.0);
    }

    #[test]
    fn layer_with_zero_mean_field_uniform_noise_is_noiseless() {
        let mut a = ReplicaState::init_haar_global(6).unwrap();
        let mut b = a.clone();
        let layer = vec![(0, 3), (1, 5), (2, 4)];
        a.step_layer(&layer, &[0.12; 6], 0.12).unwrap();
        for &(i, j) in &layer {
            b.apply_gate(i, j).unwrap();
        }
        for (x, y) in a.weights().iter().zip(b.weights().iter()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn fused_layer_matches_sequential_ops() {
        let rates = [0.02, 0.3, 0.3, 0.02, 0.3, 0.02];
        let q_a = 0.17;
        let layer = vec![(1, 2), (3, 4), (5, 0)];
        let mut fused = random_state(6, 5);
        let mut seq = fused.clone();
        fused.step_layer(&layer, &rates, q_a).unwrap();
        for &(i, j) in &layer {
            seq.apply_gate(i, j).unwrap();
        }
        for (x, &q) in rates.iter().enumerate() {
            seq.apply_noise(x, q).unwrap();
            seq.apply_antinoise(x, q_a).unwrap();
        }
        for (x, y) in fused.weights().iter().zip(seq.weights().iter()) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn partial_layer_applies_maps_to_idle_sites() {
        let mut a = random_state(4, 8);
        let mut b = a.clone();
        a.step_layer(&[(0, 2)], &[0.1, 0.2, 0.0, 0.4], 0.05).unwrap();
        b.apply_gate(0, 2).unwrap();
        for (x, q) in [0.1, 0.2, 0.0, 0.4].into_iter().enumerate() {
            b.apply_site_map(x, SiteMap::mitigated(q, 0.05).unwrap()).unwrap();
        }
        for (x, y) in a.weights().iter().zip(b.weights().iter()) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn noise_only_damps_s_sector() {
        let mut s = ReplicaState::init_haar_global(6).unwrap();
        let schedule = crate::circuit::build_brickwork_schedule(6, 12).unwrap();
        let mut last = s.s_sector_weight();
        for layer in schedule.layers() {
            s.step_layer(layer, &[0.08; 6], 0.0).unwrap();
            let now = s.s_sector_weight();
            assert!(now <= last + 1e-15);
            last = now;
        }
    }

    #[test]
    fn one_sided_retention_is_square_root() {
        let two = SiteMap::mitigated(0.2, 0.1).unwrap().retention;
        let one = SiteMap::one_sided(0.2, 0.1).unwrap().retention;
        assert_abs_diff_eq!(one * one, two, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn maps_preserve_trace(seed in 0u64..1000, q in 0.0f64..1.0, qa in 0.0f64..0.9, i in 0usize..5, j in 0usize..5) {
            prop_assume!(i != j);
            let mut s = random_state(5, seed);
            s.apply_gate(i, j).unwrap();
            prop_assert!((s.trace() - 1.0).abs() < 1e-12);
            s.apply_noise(i, q).unwrap();
            prop_assert!((s.trace() - 1.0).abs() < 1e-12);
            s.apply_antinoise(j, qa).unwrap();
            prop_assert!((s.trace() - 1.0).abs() < 1e-11);
        }

        #[test]
        fn signed_evolution_matches_plain(seed in 0u64..500, q1 in 0.0f64..0.2, gap in 0.0f64..0.4) {
            let q2 = q1 + gap;
            let q_a = crate::circuit::zero_mean_field_rate(0.5, q1, q2);
            let mut plain = ReplicaState::init_haar_global(6).unwrap();
            let mut signed = plain.clone().with_sign_tracking();
            let mut rng = crate::rng::stream(seed, 0);
            let schedule = crate::circuit::build_all_to_all_schedule(6, 6, &mut rng).unwrap();
            for layer in schedule.layers() {
                let rates: Vec<f64> = (0..6).map(|_| if rand::Rng::random::<bool>(&mut rng) { q1 } else { q2 }).collect();
                plain.step_layer(layer, &rates, q_a).unwrap();
                signed.step_layer(layer, &rates, q_a).unwrap();
                let (plus, minus) = signed.signed_parts().unwrap();
                prop_assert!(plus.iter().chain(minus).all(|&v| v >= 0.0));
                let scale = plus.iter().chain(minus).fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
                for (x, y) in plain.weights().iter().zip(signed.weights().iter()) {
                    prop_assert!((x - y).abs() <= 1e-9 * scale);
                }
                let (tp, tm) = signed.sign_resolved_traces().unwrap();
                prop_assert!((tp - tm - 1.0).abs() < 1e-9);
            }
        }
    }
}
