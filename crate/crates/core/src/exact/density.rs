use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{check_site, invalid, Result};

/// Row-major 4x4 two-qubit unitary. For a gate on `(i, j)` the local basis
/// index is `2 * bit_i + bit_j`.
pub type Unitary4 = [Complex64; 16];

const MAX_QUBITS: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

/// Dense `2^n x 2^n` density matrix. Site `x` is bit `x` of the basis index.
///
/// Physicality is not enforced: antinoise maps are trace preserving and
/// Hermiticity preserving but not completely positive.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    dim: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    fn check_n(n: usize) -> Result<()> {
        if n == 0 || n > MAX_QUBITS {
            Err(invalid(format!("density matrix needs 1..={MAX_QUBITS} qubits, got {n}")))
        } else {
            Ok(())
        }
    }

    /// `|basis><basis|`.
    pub fn basis_state(n: usize, basis: usize) -> Result<Self> {
        Self::check_n(n)?;
        let dim = 1 << n;
        if basis >= dim {
            return Err(invalid(format!("basis index {basis} out of range")));
        }
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        data[basis * dim + basis] = Complex64::new(1.0, 0.0);
        Ok(Self { n, dim, data })
    }

    pub fn zero_state(n: usize) -> Result<Self> {
        Self::basis_state(n, 0)
    }

    pub fn maximally_mixed(n: usize) -> Result<Self> {
        Self::check_n(n)?;
        let dim = 1 << n;
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for k in 0..dim {
            data[k * dim + k] = Complex64::new(1.0 / dim as f64, 0.0);
        }
        Ok(Self { n, dim, data })
    }

    /// `|psi><psi|`; `psi` need not be normalized.
    pub fn from_pure(psi: &[Complex64]) -> Result<Self> {
        let dim = psi.len();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(invalid(format!("state vector length {dim} is not a power of two")));
        }
        let n = dim.trailing_zeros() as usize;
        Self::check_n(n)?;
        let norm: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        let data = (0..dim * dim)
            .map(|k| psi[k / dim] * psi[k % dim].conj() / norm)
            .collect();
        Ok(Self { n, dim, data })
    }

    pub fn from_matrix(n: usize, data: Vec<Complex64>) -> Result<Self> {
        Self::check_n(n)?;
        let dim = 1 << n;
        if data.len() != dim * dim {
            return Err(invalid(format!("expected {} entries, got {}", dim * dim, data.len())));
        }
        Ok(Self { n, dim, data })
    }

    /// Tensor product of single-qubit states; `states[x]` sits on site `x`.
    pub fn product(states: &[DensityMatrix]) -> Result<Self> {
        if states.iter().any(|s| s.n != 1) {
            return Err(invalid("product expects single-qubit factors"));
        }
        let n = states.len();
        Self::check_n(n)?;
        let dim = 1 << n;
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                data[r * dim + c] = states
                    .iter()
                    .enumerate()
                    .map(|(x, s)| s.get((r >> x) & 1, (c >> x) & 1))
                    .product();
            }
        }
        Ok(Self { n, dim, data })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.dim + c]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|k| self.data[k * self.dim + k]).sum()
    }

    /// `Tr rho^2`, assuming Hermiticity.
    pub fn purity(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `Tr[self · other]`.
    pub fn overlap(&self, other: &DensityMatrix) -> Complex64 {
        let d = self.dim;
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..d {
            for c in 0..d {
                acc += self.data[r * d + c] * other.data[c * d + r];
            }
        }
        acc
    }

    /// Largest `|rho - rho^dagger|` entry.
    pub fn hermiticity_residual(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in r..d {
                worst = worst.max((self.data[r * d + c] - self.data[c * d + r].conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `rho <- U rho U^dagger` with `U` acting on sites `(i, j)`.
    pub fn apply_2q_unitary(&mut self, u: &Unitary4, i: usize, j: usize) -> Result<()> {
        check_site(i, self.n)?;
        check_site(j, self.n)?;
        if i == j {
            return Err(invalid(format!("two-qubit gate needs distinct sites, got ({i},{j})")));
        }
        let d = self.dim;
        let (bi, bj) = (1usize << i, 1usize << j);
        let (lo, hi) = (i.min(j), i.max(j));
        let locals = |b: usize| [b, b | bj, b | bi, b | bi | bj];
        let udag: Unitary4 = std::array::from_fn(|k| u[(k % 4) * 4 + k / 4].conj());

        // Left multiplication, four rows at a time.
        for k in 0..d / 4 {
            let rows = locals(insert_zero(insert_zero(k, lo), hi));
            for c in 0..d {
                let v = rows.map(|r| self.data[r * d + c]);
                for (a, &r) in rows.iter().enumerate() {
                    self.data[r * d + c] =
                        u[a * 4] * v[0] + u[a * 4 + 1] * v[1] + u[a * 4 + 2] * v[2] + u[a * 4 + 3] * v[3];
                }
            }
        }
        // Right multiplication by U^dagger, four columns at a time.
        for r in 0..d {
            let row = &mut self.data[r * d..(r + 1) * d];
            for k in 0..d / 4 {
                let cols = locals(insert_zero(insert_zero(k, lo), hi));
                let v = cols.map(|c| row[c]);
                for (b, &c) in cols.iter().enumerate() {
                    row[c] = v[0] * udag[b] + v[1] * udag[4 + b] + v[2] * udag[8 + b] + v[3] * udag[12 + b];
                }
            }
        }
        Ok(())
    }

    /// `rho <- f rho + (1 - f) Tr_x[rho] ⊗ I/2`: scales every Pauli on `site` by `f`.
    pub fn apply_site_map(&mut self, site: usize, f: f64) -> Result<()> {
        check_site(site, self.n)?;
        let d = self.dim;
        let bx = 1usize << site;
        let keep = 0.5 * (1.0 + f);
        let swap = 0.5 * (1.0 - f);
        for r in (0..d).filter(|r| r & bx == 0) {
            for c in 0..d {
                let (a, b) = (r * d + c, (r | bx) * d + (c ^ bx));
                if c & bx == 0 {
                    let (va, vb) = (self.data[a], self.data[b]);
                    self.data[a] = va * keep + vb * swap;
                    self.data[b] = vb * keep + va * swap;
                } else {
                    self.data[a] *= f;
                    self.data[b] *= f;
                }
            }
        }
        Ok(())
    }

    /// Depolarizing channel `(1 - q) rho + q Tr_x[rho] ⊗ I/2`.
    pub fn apply_depolarizing(&mut self, site: usize, q: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&q) {
            return Err(invalid(format!("noise rate {q} outside [0,1]")));
        }
        self.apply_site_map(site, 1.0 - q)
    }

    /// Antinoise `(rho - q_a Tr_x[rho] ⊗ I/2) / (1 - q_a)`.
    pub fn apply_antinoise_map(&mut self, site: usize, q_a: f64) -> Result<()> {
        if !(0.0..1.0).contains(&q_a) {
            return Err(invalid(format!("antinoise strength {q_a} outside [0,1)")));
        }
        self.apply_site_map(site, 1.0 / (1.0 - q_a))
    }

    /// Reduced density matrix on `sites`, ordered so `sites[k]` becomes bit `k`.
    pub fn reduced(&self, sites: &[usize]) -> Result<DensityMatrix> {
        for (k, &s) in sites.iter().enumerate() {
            check_site(s, self.n)?;
            if sites[..k].contains(&s) {
                return Err(invalid(format!("site {s} listed twice")));
            }
        }
        let k = sites.len();
        Self::check_n(k)?;
        let dk = 1usize << k;
        let keep_mask: usize = sites.iter().map(|&s| 1usize << s).sum();
        let sub = |idx: usize| -> usize {
            sites.iter().enumerate().map(|(b, &s)| ((idx >> s) & 1) << b).sum()
        };
        let d = self.dim;
        let mut out = vec![Complex64::new(0.0, 0.0); dk * dk];
        let env_mask = !keep_mask & (d - 1);
        for r in 0..d {
            let (sr, er) = (sub(r), r & env_mask);
            for ka in 0..dk {
                // Column shares the environment bits with the row.
                let c = er | sites.iter().enumerate().map(|(b, &s)| ((ka >> b) & 1) << s).sum::<usize>();
                out[sr * dk + ka] += self.data[r * d + c];
            }
        }
        Ok(DensityMatrix { n: k, dim: dk, data: out })
    }

    /// Eigenvalues in descending order (Hermitian part).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let d = self.dim;
        let m = DMatrix::from_fn(d, d, |r, c| 0.5 * (self.data[r * d + c] + self.data[c * d + r].conj()));
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }

    pub fn pauli_expectation(&self, site: usize, pauli: Pauli) -> Result<f64> {
        check_site(site, self.n)?;
        let d = self.dim;
        let bx = 1usize << site;
        let value: Complex64 = (0..d)
            .map(|r| {
                let flipped = self.data[(r ^ bx) * d + r];
                let up = r & bx == 0;
                match pauli {
                    Pauli::X => flipped,
                    // Tr[Y rho] = Σ_r Y[r, r^x] rho[r^x, r], Y[0,1] = -i, Y[1,0] = i.
                    Pauli::Y => flipped * if up { Complex64::new(0.0, -1.0) } else { Complex64::new(0.0, 1.0) },
                    Pauli::Z => self.data[r * d + r] * if up { 1.0 } else { -1.0 },
                }
            })
            .sum();
        Ok(value.re)
    }

    /// Real diagonal in the computational basis.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|k| self.data[k * self.dim + k].re).collect()
    }
}

#[inline]
fn insert_zero(k: usize, pos: usize) -> usize {
    ((k >> pos) << (pos + 1)) | (k & ((1 << pos) - 1))
}
