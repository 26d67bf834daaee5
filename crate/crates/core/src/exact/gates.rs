//! Two-qubit gates: Haar sampling and a few fixed gates.

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use super::density::Unitary4;
use crate::rng::Stream;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn from_real(m: [[f64; 4]; 4]) -> Unitary4 {
    std::array::from_fn(|k| Complex64::new(m[k / 4][k % 4], 0.0))
}

pub fn identity() -> Unitary4 {
    std::array::from_fn(|k| if k / 4 == k % 4 { ONE } else { ZERO })
}

pub fn swap() -> Unitary4 {
    from_real([[1., 0., 0., 0.], [0., 0., 1., 0.], [0., 1., 0., 0.], [0., 0., 0., 1.]])
}

/// Controlled-NOT with the first qubit of the pair as control.
pub fn cnot() -> Unitary4 {
    from_real([[1., 0., 0., 0.], [0., 1., 0., 0.], [0., 0., 0., 1.], [0., 0., 1., 0.]])
}

/// Haar-random U(4): Gram-Schmidt on a complex Ginibre matrix. Orthonormalizing
/// columns in order gives an R factor with positive real diagonal, which is
/// the phase convention that makes Q Haar distributed.
pub fn sample_haar_2q(rng: &mut Stream) -> Unitary4 {
    let mut cols = [[ZERO; 4]; 4];
    for col in cols.iter_mut() {
        for z in col.iter_mut() {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            *z = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
        }
    }
    for k in 0..4 {
        // Two passes keep the residual at machine precision.
        for _ in 0..2 {
            for prev in 0..k {
                let proj: Complex64 = (0..4).map(|r| cols[prev][r].conj() * cols[k][r]).sum();
                for r in 0..4 {
                    let p = cols[prev][r];
                    cols[k][r] -= proj * p;
                }
            }
        }
        let norm = cols[k].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        cols[k].iter_mut().for_each(|z| *z /= norm);
    }
    std::array::from_fn(|k| cols[k % 4][k / 4])
}

/// Haar-random pure state on `n` qubits: a normalized complex Gaussian vector.
pub fn sample_haar_state(n: usize, rng: &mut Stream) -> Vec<Complex64> {
    let mut psi: Vec<Complex64> = (0..1usize << n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re, im)
        })
        .collect();
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    psi.iter_mut().for_each(|z| *z /= norm);
    psi
}

/// Largest entry of `|U^dagger U - 1|`.
pub fn unitarity_residual(u: &Unitary4) -> f64 {
    let mut worst = 0.0f64;
    for a in 0..4 {
        for b in 0..4 {
            let dot: Complex64 = (0..4).map(|r| u[r * 4 + a].conj() * u[r * 4 + b]).sum();
            let target = if a == b { ONE } else { ZERO };
            worst = worst.max((dot - target).norm());
        }
    }
    worst
}
