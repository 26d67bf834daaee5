//! Identity-gate and SWAP-gate circuits where noise/antinoise cancellation
//! can be followed in closed form.

use super::density::{DensityMatrix, Pauli};
use super::gates;
use crate::error::{invalid, Error, Result};

const PRODUCT_LAW_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrefactorCheck {
    /// `<sigma>_final / <sigma>_initial` from the simulation.
    pub ratio: f64,
    /// `Π_t (1 - q_t) / (1 - q_a)`.
    pub predicted: f64,
}

/// Apply rounds of noise `q_t` and antinoise `q_a` on site 0 of `rho0` with
/// no gates, and compare the Pauli-expectation ratio to the product law.
pub fn pauli_prefactor_check(q_schedule: &[f64], q_a: f64, pauli: Pauli, rho0: &DensityMatrix) -> Result<PrefactorCheck> {
    let initial = rho0.pauli_expectation(0, pauli)?;
    if initial.abs() < 1e-12 {
        return Err(invalid("initial Pauli expectation vanishes"));
    }
    let mut rho = rho0.clone();
    for &q in q_schedule {
        rho.apply_depolarizing(0, q)?;
        rho.apply_antinoise_map(0, q_a)?;
    }
    let ratio = rho.pauli_expectation(0, pauli)? / initial;
    let predicted: f64 = q_schedule.iter().map(|q| (1.0 - q) / (1.0 - q_a)).product();
    if (ratio - predicted).abs() > PRODUCT_LAW_TOL * predicted.abs().max(1.0) {
        return Err(Error::InvariantViolated(format!(
            "Pauli prefactor {ratio} differs from product law {predicted}"
        )));
    }
    Ok(PrefactorCheck { ratio, predicted })
}

/// Log of the product-law prefactor, without simulating.
pub fn log_prefactor(q_schedule: &[f64], q_a: f64) -> f64 {
    q_schedule.iter().map(|q| ((1.0 - q) / (1.0 - q_a)).ln()).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwapToyRow {
    pub depth: usize,
    /// Measured `<sigma>` over its noiseless value, for a Pauli that started on L.
    pub left_ratio: f64,
    /// Same for a Pauli that started on R.
    pub right_ratio: f64,
    /// Factors left over from the unpaired final layer, for the Pauli from L and from R.
    pub predicted: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwapToyReport {
    pub q_left: f64,
    pub q_right: f64,
    pub q_a: f64,
    pub rows: Vec<SwapToyRow>,
    /// True when every ratio equals its final-layer residual to 1e-10.
    pub canceled: bool,
}

/// Two sites with fixed rates, SWAP gates every layer and zero-mean-field
/// antinoise `1 - q_a = sqrt((1 - q_L)(1 - q_R))`. Pairs of layers cancel
/// exactly; only an odd final layer leaves a residual factor.
pub fn swap_toy_model(q_left: f64, q_right: f64, depths: impl IntoIterator<Item = usize>) -> Result<SwapToyReport> {
    for q in [q_left, q_right] {
        if !(0.0..1.0).contains(&q) {
            return Err(invalid(format!("rate {q} outside [0,1)")));
        }
    }
    let q_a = 1.0 - ((1.0 - q_left) * (1.0 - q_right)).sqrt();
    let f_left = (1.0 - q_left) / (1.0 - q_a);
    let f_right = (1.0 - q_right) / (1.0 - q_a);

    // Distinct Bloch vectors on the two sites, X component nonzero on both.
    let bloch = |theta: f64| {
        DensityMatrix::from_pure(&[
            num_complex::Complex64::new(theta.cos(), 0.0),
            num_complex::Complex64::new(theta.sin(), 0.0),
        ])
    };
    let rho0 = DensityMatrix::product(&[bloch(0.3)?, bloch(0.9)?])?;
    let swap = gates::swap();

    let mut rows = Vec::new();
    let mut canceled = true;
    for depth in depths {
        let mut noisy = rho0.clone();
        let mut ideal = rho0.clone();
        for _ in 0..depth {
            noisy.apply_2q_unitary(&swap, 0, 1)?;
            ideal.apply_2q_unitary(&swap, 0, 1)?;
            noisy.apply_depolarizing(0, q_left)?;
            noisy.apply_depolarizing(1, q_right)?;
            noisy.apply_antinoise_map(0, q_a)?;
            noisy.apply_antinoise_map(1, q_a)?;
        }
        // After `depth` swaps, the Pauli from L sits on R when depth is odd.
        let (site_of_left, site_of_right) = if depth % 2 == 1 { (1, 0) } else { (0, 1) };
        let ratio = |site: usize| -> Result<f64> {
            Ok(noisy.pauli_expectation(site, Pauli::X)? / ideal.pauli_expectation(site, Pauli::X)?)
        };
        let predicted = if depth % 2 == 1 { (f_right, f_left) } else { (1.0, 1.0) };
        let row = SwapToyRow {
            depth,
            left_ratio: ratio(site_of_left)?,
            right_ratio: ratio(site_of_right)?,
            predicted,
        };
        canceled &= (row.left_ratio - predicted.0).abs() < 1e-10 && (row.right_ratio - predicted.1).abs() < 1e-10;
        rows.push(row);
    }
    Ok(SwapToyReport { q_left, q_right, q_a, rows, canceled })
}
