use super::density::DensityMatrix;
use crate::error::{invalid, Result};

/// Eigenvalues of a (possibly unphysical) density matrix, descending.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomp {
    pub eigenvalues: Vec<f64>,
}

impl SpectralDecomp {
    pub fn of(rho: &DensityMatrix) -> Self {
        Self { eigenvalues: rho.eigenvalues() }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn is_physical(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol
    }

    /// `-Σ λ log2 |λ|`, see [`entropy_from_eigenvalues`].
    pub fn entropy(&self) -> f64 {
        entropy_from_eigenvalues(&self.eigenvalues)
    }
}

/// Von Neumann entropy extended to unphysical spectra as `-Σ λ log2 |λ|`.
/// Coincides with the usual entropy when every eigenvalue is non-negative.
pub fn entropy_from_eigenvalues(eigenvalues: &[f64]) -> f64 {
    -eigenvalues
        .iter()
        .filter(|l| l.abs() > 1e-14)
        .map(|&l| l * l.abs().log2())
        .sum::<f64>()
}

pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    SpectralDecomp::of(rho).entropy()
}

/// `I_ab = S_a + S_b - S_ab`.
pub fn mutual_information(rho: &DensityMatrix, a: usize, b: usize) -> Result<f64> {
    if a == b {
        return Err(invalid(format!("mutual information needs distinct sites, got {a} twice")));
    }
    let sa = von_neumann_entropy(&rho.reduced(&[a])?);
    let sb = von_neumann_entropy(&rho.reduced(&[b])?);
    let sab = von_neumann_entropy(&rho.reduced(&[a, b])?);
    Ok(sa + sb - sab)
}
