//! Growth of the positive trace sector from a simple initial condition placed
//! on the longest low-noise run of a quenched 1D chain.

use rayon::prelude::*;
use serde::Serialize;

use super::analysis::{linear_fit, LinearFit};
use super::ensemble::compensated_sum;
use crate::circuit::{build_brickwork_schedule, DisorderMode, DisorderSpec, NoiseField};
use crate::error::{invalid, Error, Result};
use crate::replica::{InitForm, Region, ReplicaState};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthFit {
    /// Per layer, of `ln Tr rho_2^+`.
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub slope_stderr: f64,
    /// Inclusive depth window of the fit.
    pub window: (usize, usize),
    pub region_start: usize,
    pub region_len: usize,
    /// `ln Tr rho_2^+` after layers `1..=d_max`.
    pub log_trace_plus: Vec<f64>,
}

/// Longest run of sites with rate `q1` on a ring, as `(start, len)`.
pub fn longest_run(rates: &[f64], q1: f64) -> Option<(usize, usize)> {
    let n = rates.len();
    let hit: Vec<bool> = rates.iter().map(|&q| q == q1).collect();
    if !hit.iter().any(|&h| h) {
        return None;
    }
    if hit.iter().all(|&h| h) {
        return Some((0, n));
    }
    // Start scanning just after a miss so runs crossing the wrap are whole.
    let first_miss = hit.iter().position(|&h| !h).expect("some miss");
    let mut best = (0, 0);
    let mut run = (0, 0);
    for k in 1..=n {
        let x = (first_miss + k) % n;
        if hit[x] {
            if run.1 == 0 {
                run.0 = x;
            }
            run.1 += 1;
            if run.1 > best.1 {
                best = run;
            }
        } else {
            run.1 = 0;
        }
    }
    Some(best)
}

/// Fit window: the upper half of `1..=d_max`.
pub fn growth_window(d_max: usize) -> (usize, usize) {
    ((d_max / 2).max(1), d_max)
}

pub fn instability_experiment(n: usize, disorder: &DisorderSpec, d_max: usize, form: InitForm) -> Result<GrowthFit> {
    if disorder.mode != DisorderMode::Quenched {
        return Err(invalid("instability runs need quenched disorder"));
    }
    if d_max < 3 {
        return Err(invalid("need at least three layers to fit a growth rate"));
    }
    let schedule = build_brickwork_schedule(n, d_max)?;
    let field = NoiseField::sample(disorder, n, d_max)?;
    let (start, len) = longest_run(field.row(0), disorder.q1)
        .ok_or_else(|| Error::Degenerate("no site carries the low noise rate".into()))?;
    let region = Region::contiguous(start, len, n);
    let mut state = ReplicaState::init_simple(n, &region, form)?.with_sign_tracking();
    let mut log_trace_plus = Vec::with_capacity(d_max);
    let mut failure = None;
    state.evolve(&schedule, &field, disorder.zero_mean_field_rate(), |_, s| match s.sign_resolved_traces() {
        Ok((plus, _)) => log_trace_plus.push(plus.ln()),
        Err(e) => failure = Some(e),
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let window = growth_window(d_max);
    let xs: Vec<f64> = (window.0..=window.1).map(|d| d as f64).collect();
    let ys: Vec<f64> = (window.0..=window.1).map(|d| log_trace_plus[d - 1]).collect();
    let fit = linear_fit(&xs, &ys)?;
    Ok(GrowthFit {
        slope: fit.slope,
        intercept: fit.intercept,
        r2: fit.r2,
        slope_stderr: fit.slope_stderr,
        window,
        region_start: start,
        region_len: len,
        log_trace_plus,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthSummary {
    pub fits: Vec<GrowthFit>,
    pub mean_slope: f64,
    pub slope_stderr: f64,
    pub mean_r2: f64,
    /// Fit of the draw-averaged `ln Tr rho_2^+` over the common window.
    pub pooled: LinearFit,
}

/// `draws` independent quenched fields; draw `k` uses seed `derive_seed(disorder.seed, k)`.
pub fn instability_ensemble(n: usize, disorder: &DisorderSpec, d_max: usize, form: InitForm, draws: usize) -> Result<GrowthSummary> {
    if draws == 0 {
        return Err(invalid("need at least one draw"));
    }
    let fits: Vec<GrowthFit> = (0..draws)
        .into_par_iter()
        .map(|k| {
            let spec = DisorderSpec { seed: rng::derive_seed(disorder.seed, k as u64), ..*disorder };
            instability_experiment(n, &spec, d_max, form)
        })
        .collect::<Result<_>>()?;
    let count = fits.len() as f64;
    let mean_slope = compensated_sum(fits.iter().map(|f| f.slope)) / count;
    let var = if fits.len() > 1 {
        compensated_sum(fits.iter().map(|f| (f.slope - mean_slope).powi(2))) / (count - 1.0)
    } else {
        0.0
    };
    let mean_r2 = compensated_sum(fits.iter().map(|f| f.r2)) / count;
    let window = growth_window(d_max);
    let xs: Vec<f64> = (window.0..=window.1).map(|d| d as f64).collect();
    let ys: Vec<f64> =
        (window.0..=window.1).map(|d| compensated_sum(fits.iter().map(|f| f.log_trace_plus[d - 1])) / count).collect();
    let pooled = linear_fit(&xs, &ys)?;
    Ok(GrowthSummary { mean_slope, slope_stderr: (var / count).sqrt(), mean_r2, pooled, fits })
}
