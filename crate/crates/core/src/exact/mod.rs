//! Exact density-matrix simulation of single noisy, mitigated circuits.

mod benchmarks;
mod density;
mod entropy;
mod evolve;
pub mod gates;
mod toy;

pub use benchmarks::{
    estimate_xeb_from_samples, fidelity_f_m, output_distribution, sample_outcomes, xeb, xeb_mitigated,
    DistributionKind, FidelityReport, OutcomeDistribution,
};
pub use density::{DensityMatrix, Pauli, Unitary4};
pub use entropy::{entropy_from_eigenvalues, mutual_information, von_neumann_entropy, SpectralDecomp};
pub use evolve::{apply_layer, evolve_circuit, replay, replay_with, Channels, GateRecord, RecordedGate};
pub use gates::{sample_haar_2q, sample_haar_state};
pub use toy::{log_prefactor, pauli_prefactor_check, swap_toy_model, PrefactorCheck, SwapToyReport, SwapToyRow};
