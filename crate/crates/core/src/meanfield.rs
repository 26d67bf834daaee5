//! Mean-field dynamics of a Brownian all-to-all circuit with two noise populations.
//!
//! Per-site deviations `δ_i` from infinite temperature obey
//! `dδ_i/dt = -4 [Δ_i + (J/N) Σ_{j≠i} (3 + 4 δ_j)] δ_i` with `Δ_i = γ_i - γ_a`.
//! With population sums `S_1`, `S_2` the large-`N` system closes on
//! `G_+ = (S_1 + S_2)/N` and `G_- = (S_1 - S_2)/N`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng;

pub const DIVERGENCE_CUTOFF: f64 = 10.0;
pub const DEFAULT_PERTURBATION: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanFieldParams {
    pub j: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub p: f64,
    pub gamma_a: f64,
    pub n_sites: usize,
}

impl MeanFieldParams {
    pub fn new(j: f64, gamma1: f64, gamma2: f64, p: f64, gamma_a: f64, n_sites: usize) -> Result<Self> {
        let params = Self { j, gamma1, gamma2, p, gamma_a, n_sites };
        params.validate()?;
        Ok(params)
    }

    /// `γ_a = p γ_1 + (1 - p) γ_2`.
    pub fn zero_mean_field(j: f64, gamma1: f64, gamma2: f64, p: f64, n_sites: usize) -> Result<Self> {
        Self::new(j, gamma1, gamma2, p, p * gamma1 + (1.0 - p) * gamma2, n_sites)
    }

    /// Zero-mean-field rates with antinoise rate `gamma_a` and `|Δ_1| = delta1`.
    pub fn from_delta1(j: f64, delta1: f64, p: f64, gamma_a: f64, n_sites: usize) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(invalid(format!("p = {p} must lie in (0,1)")));
        }
        let gamma1 = gamma_a - delta1.abs();
        let gamma2 = gamma_a + p * delta1.abs() / (1.0 - p);
        Self::new(j, gamma1, gamma2, p, gamma_a, n_sites)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.j > 0.0 && self.j.is_finite()) {
            return Err(invalid(format!("J = {} must be positive", self.j)));
        }
        for (name, rate) in [("gamma1", self.gamma1), ("gamma2", self.gamma2), ("gamma_a", self.gamma_a)] {
            if !(rate >= 0.0 && rate.is_finite()) {
                return Err(invalid(format!("{name} = {rate} must be a nonnegative rate")));
            }
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(invalid(format!("p = {} outside [0,1]", self.p)));
        }
        Ok(())
    }

    pub fn delta1(&self) -> f64 {
        self.gamma1 - self.gamma_a
    }

    pub fn delta2(&self) -> f64 {
        self.gamma2 - self.gamma_a
    }

    /// Number of sites in population 1, `round(p N)`.
    pub fn n_population1(&self) -> usize {
        (self.p * self.n_sites as f64).round() as usize
    }

    /// `Δ_i` per site, population 1 first.
    pub fn site_detunings(&self) -> Vec<f64> {
        let n1 = self.n_population1();
        (0..self.n_sites).map(|i| if i < n1 { self.delta1() } else { self.delta2() }).collect()
    }

    fn coupling(&self) -> f64 {
        4.0 * self.delta1().abs() / (2.0 * (1.0 - self.p))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MeanFieldState {
    Delta(Vec<f64>),
    Reduced { g_plus: f64, g_minus: f64 },
}

impl MeanFieldState {
    pub fn is_finite(&self) -> bool {
        match self {
            Self::Delta(d) => d.iter().all(|v| v.is_finite()),
            Self::Reduced { g_plus, g_minus } => g_plus.is_finite() && g_minus.is_finite(),
        }
    }

    /// All `δ_i ≥ -3/4`. Always true for the reduced form.
    pub fn is_physical(&self) -> bool {
        match self {
            Self::Delta(d) => d.iter().all(|&v| v >= -0.75),
            Self::Reduced { .. } => true,
        }
    }

    /// Reduce a per-site state, population 1 being the first `round(pN)` sites.
    pub fn reduce(delta: &[f64], n_population1: usize) -> Self {
        let n = delta.len() as f64;
        let s1: f64 = delta[..n_population1].iter().sum();
        let s2: f64 = delta[n_population1..].iter().sum();
        Self::Reduced { g_plus: (s1 + s2) / n, g_minus: (s1 - s2) / n }
    }
}

/// Per-site right-hand side with explicit detunings.
pub fn delta_rhs_with(delta: &[f64], detunings: &[f64], j: f64) -> Result<Vec<f64>> {
    if delta.len() != detunings.len() || delta.is_empty() {
        return Err(invalid(format!(
            "state has {} sites but {} detunings",
            delta.len(),
            detunings.len()
        )));
    }
    let n = delta.len() as f64;
    let total: f64 = delta.iter().map(|d| 3.0 + 4.0 * d).sum();
    Ok(delta
        .iter()
        .zip(detunings)
        .map(|(&d, &det)| {
            let field = (total - (3.0 + 4.0 * d)) * j / n;
            -4.0 * (det + field) * d
        })
        .collect())
}

pub fn delta_rhs(delta: &[f64], params: &MeanFieldParams) -> Result<Vec<f64>> {
    if delta.len() != params.n_sites {
        return Err(invalid(format!("state has {} sites, params expect {}", delta.len(), params.n_sites)));
    }
    delta_rhs_with(delta, &params.site_detunings(), params.j)
}

/// Large-`N` reduced right-hand side for general `p`.
pub fn gpm_rhs(g_plus: f64, g_minus: f64, params: &MeanFieldParams) -> Result<(f64, f64)> {
    let p = params.p;
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid(format!("reduced equations need p in (0,1), got {p}")));
    }
    let k = params.coupling();
    let damping = -4.0 * params.j * (3.0 + 4.0 * g_plus);
    Ok((
        damping * g_plus + k * (g_minus - (2.0 * p - 1.0) * g_plus),
        damping * g_minus + k * (g_plus - (2.0 * p - 1.0) * g_minus),
    ))
}

/// The `p = 1/2` form, `p` in `params` ignored.
pub fn gpm_rhs_half(g_plus: f64, g_minus: f64, params: &MeanFieldParams) -> (f64, f64) {
    let damping = -4.0 * params.j * (3.0 + 4.0 * g_plus);
    let k = 4.0 * params.delta1().abs();
    (damping * g_plus + k * g_minus, damping * g_minus + k * g_plus)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Max-norm difference to a run at `dt/2`, over 15.
    pub error_estimate: f64,
    /// Stopped early on a non-finite state or one beyond the cutoff.
    pub diverged: bool,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn final_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }
}

fn rk4_step<F>(rhs: &mut F, y: &[f64], dt: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let axpy = |a: &[f64], b: &[f64], s: f64| a.iter().zip(b).map(|(x, k)| x + s * k).collect::<Vec<_>>();
    let k1 = rhs(y)?;
    let k2 = rhs(&axpy(y, &k1, dt / 2.0))?;
    let k3 = rhs(&axpy(y, &k2, dt / 2.0))?;
    let k4 = rhs(&axpy(y, &k3, dt))?;
    Ok((0..y.len()).map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect())
}

fn escaped(y: &[f64], cutoff: f64) -> bool {
    y.iter().any(|v| !v.is_finite() || v.abs() > cutoff)
}

fn run_fixed<F>(rhs: &mut F, y0: &[f64], steps: usize, dt: f64, cutoff: f64, keep_every: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>, bool)>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let mut times = vec![0.0];
    let mut states = vec![y0.to_vec()];
    let mut y = y0.to_vec();
    for step in 1..=steps {
        y = rk4_step(rhs, &y, dt)?;
        if escaped(&y, cutoff) {
            times.push(step as f64 * dt);
            states.push(y);
            return Ok((times, states, true));
        }
        if step % keep_every == 0 || step == steps {
            times.push(step as f64 * dt);
            states.push(y.clone());
        }
    }
    Ok((times, states, false))
}

/// Fixed-step RK4 from `y0` to `t_end`, stopping once any component exceeds `cutoff`.
pub fn integrate_with<F>(mut rhs: F, y0: &[f64], t_end: f64, dt: f64, cutoff: f64) -> Result<Trajectory>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid(format!("dt = {dt} must be positive")));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(invalid(format!("t_end = {t_end} must be nonnegative")));
    }
    let steps = (t_end / dt).round() as usize;
    let keep_every = (steps / 2000).max(1);
    let (times, states, diverged) = run_fixed(&mut rhs, y0, steps, dt, cutoff, keep_every)?;

    let last = times.last().copied().unwrap_or(0.0);
    let coarse_steps = (last / dt).round() as usize;
    let (_, fine, _) = run_fixed(&mut rhs, y0, 2 * coarse_steps, dt / 2.0, f64::INFINITY, usize::MAX)?;
    let fine_end = fine.last().expect("at least the initial state");
    let coarse_end = states.last().expect("at least the initial state");
    let error_estimate = coarse_end
        .iter()
        .zip(fine_end)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / 15.0;
    Ok(Trajectory { times, states, error_estimate, diverged })
}

pub fn integrate<F>(rhs: F, y0: &[f64], t_end: f64, dt: f64) -> Result<Trajectory>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    integrate_with(rhs, y0, t_end, dt, DIVERGENCE_CUTOFF)
}

/// Integrate the reduced system; states are `[G_+, G_-]`.
pub fn integrate_reduced(params: &MeanFieldParams, g0: (f64, f64), t_end: f64, dt: f64) -> Result<Trajectory> {
    integrate(
        |y| {
            let (a, b) = gpm_rhs(y[0], y[1], params)?;
            Ok(vec![a, b])
        },
        &[g0.0, g0.1],
        t_end,
        dt,
    )
}

pub fn integrate_sites(params: &MeanFieldParams, delta0: &[f64], t_end: f64, dt: f64) -> Result<Trajectory> {
    let detunings = params.site_detunings();
    if delta0.len() != detunings.len() {
        return Err(invalid(format!("state has {} sites, params expect {}", delta0.len(), params.n_sites)));
    }
    integrate(|y| delta_rhs_with(y, &detunings, params.j), delta0, t_end, dt)
}

/// Default step `1e-3 / J`.
pub fn default_dt(params: &MeanFieldParams) -> f64 {
    1e-3 / params.j
}

/// Integrate the reduced system from a seeded uniform perturbation of the origin
/// of size `DEFAULT_PERTURBATION`.
pub fn probe_origin(params: &MeanFieldParams, t_end: f64, dt: f64, seed: u64) -> Result<Trajectory> {
    let mut r = rng::stream(seed, 0);
    let g0 = (
        r.random_range(-DEFAULT_PERTURBATION..=DEFAULT_PERTURBATION),
        r.random_range(-DEFAULT_PERTURBATION..=DEFAULT_PERTURBATION),
    );
    integrate_reduced(params, g0, t_end, dt)
}

/// Analytic Jacobian of `gpm_rhs`, row-major.
pub fn jacobian(g_plus: f64, g_minus: f64, params: &MeanFieldParams) -> Result<[[f64; 2]; 2]> {
    let p = params.p;
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid(format!("reduced equations need p in (0,1), got {p}")));
    }
    let (j, k) = (params.j, params.coupling());
    let shift = k * (2.0 * p - 1.0);
    Ok([
        [-12.0 * j - 32.0 * j * g_plus - shift, k],
        [-16.0 * j * g_minus + k, -4.0 * j * (3.0 + 4.0 * g_plus) - shift],
    ])
}

fn eigenvalues_2x2(m: [[f64; 2]; 2]) -> [Complex64; 2] {
    let half_trace = 0.5 * (m[0][0] + m[1][1]);
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = Complex64::new(half_trace * half_trace - det, 0.0).sqrt();
    let a = Complex64::new(half_trace, 0.0) + disc;
    let b = Complex64::new(half_trace, 0.0) - disc;
    if a.re >= b.re {
        [a, b]
    } else {
        [b, a]
    }
}

/// Jacobian eigenvalues at `(g_plus, g_minus)`, largest real part first.
pub fn linear_stability(g_plus: f64, g_minus: f64, params: &MeanFieldParams) -> Result<[Complex64; 2]> {
    Ok(eigenvalues_2x2(jacobian(g_plus, g_minus, params)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPoint {
    pub g_plus: f64,
    pub g_minus: f64,
    pub eigenvalues: [Complex64; 2],
    pub stable: bool,
}

/// The origin, the `G_- = G_+` branch at `-(3 - |Δ_1|/J)/4` and the
/// `G_- = -G_+` branch at `-(3 + Δ_2/J)/4`.
pub fn fixed_points(params: &MeanFieldParams) -> Result<Vec<FixedPoint>> {
    let j = params.j;
    let g1 = -(3.0 - params.delta1().abs() / j) / 4.0;
    let g2 = -(3.0 + params.delta2() / j) / 4.0;
    [(0.0, 0.0), (g1, g1), (g2, -g2)]
        .into_iter()
        .map(|(g_plus, g_minus)| {
            let eigenvalues = linear_stability(g_plus, g_minus, params)?;
            Ok(FixedPoint { g_plus, g_minus, eigenvalues, stable: eigenvalues[0].re < 0.0 })
        })
        .collect()
}

/// Critical `|Δ_1|` where the origin's largest eigenvalue crosses zero, by bisection
/// with `J`, `p` and `γ_a` from `params`.
pub fn stability_threshold(params: &MeanFieldParams) -> Result<f64> {
    params.validate()?;
    let growth = |delta1: f64| -> Result<f64> {
        let trial = MeanFieldParams::from_delta1(params.j, delta1, params.p, params.gamma_a.max(delta1), params.n_sites)?;
        Ok(linear_stability(0.0, 0.0, &trial)?[0].re)
    };
    let mut lo = 0.0;
    let mut hi = params.j;
    while growth(hi)? < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 * params.j {
            return Err(invalid("origin never destabilizes"));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if growth(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
