//! Exact diagonalization of
//!
//! ```text
//! H = -(Ω/2) σx + a†a + g [(a†)² + a²] σz
//! ```
//!
//! in a truncated photon Fock basis. This module is the ground truth the
//! G-function, the overlap formulas and the finite-order approximations are
//! checked against, so it uses only [`crate::linalg`] and the model
//! parameters.
//!
//! Photon-number parity splits the space into the q = 1/4 (even) and
//! q = 3/4 (odd) sectors. Within one of them the parity operator
//! `Π = −σx (−1)^j`, with `j` the index of photon number `2j + 2(q−1/4)`,
//! commutes with H.
//!
//! Truncated bases only ever approximate the spectrum for g < 1/2; the
//! continuum that forms at g = 1/2 has no finite-basis representation.
//! Close to critical coupling the required cutoff grows quickly, which is
//! why every reported level can carry a cutoff-doubling delta.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{jacobi_symmetric_eigen, jacobi_symmetric_eigenvectors, tridiagonal_lowest_eigenvalues, DenseMatrix};
use crate::model::{BargmannIndex, ModelParams, Parity, Sector};

/// Smallest accepted photon cutoff.
pub const MIN_CUTOFF: usize = 4;

/// Levels closer than this are treated as one degenerate cluster when
/// parity labels are assigned.
const DEGENERACY_TOL: f64 = 1e-8;

/// Hamiltonian of one Bargmann sector in the spin-boson basis.
///
/// Basis ordering: index `2j + s` is photon number `2j + 2(q−1/4)` with
/// `s = 0` for σz = +1 (↑) and `s = 1` for σz = −1 (↓).
#[derive(Debug, Clone)]
pub struct FockHamiltonian {
    pub params: ModelParams,
    pub q: BargmannIndex,
    pub fock_cutoff: usize,
    pub photons: Vec<usize>,
    pub matrix: DenseMatrix,
}

pub fn build_hamiltonian(params: &ModelParams, q: BargmannIndex, fock_cutoff: usize) -> FockHamiltonian {
    let cutoff = fock_cutoff.max(MIN_CUTOFF);
    let photons: Vec<usize> = (q.offset() as usize..=cutoff).step_by(2).collect();
    let count = photons.len();
    let g = params.g();
    let half_omega = 0.5 * params.omega();
    let mut h = DenseMatrix::zeros(2 * count);
    for (j, &p) in photons.iter().enumerate() {
        let up = 2 * j;
        let down = 2 * j + 1;
        h[(up, up)] = p as f64;
        h[(down, down)] = p as f64;
        h[(up, down)] = -half_omega;
        h[(down, up)] = -half_omega;
        if j + 1 < count {
            // ⟨p+2| a†² |p⟩ = √((p+1)(p+2))
            let pf = p as f64;
            let c = g * ((pf + 1.0) * (pf + 2.0)).sqrt();
            h[(up + 2, up)] = c;
            h[(up, up + 2)] = c;
            h[(down + 2, down)] = -c;
            h[(down, down + 2)] = -c;
        }
    }
    FockHamiltonian {
        params: *params,
        q,
        fock_cutoff: cutoff,
        photons,
        matrix: h,
    }
}

impl FockHamiltonian {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// `⟨ψ| Π |ψ⟩` for a vector in this basis.
    pub fn parity_expectation(&self, psi: &[f64]) -> f64 {
        self.parity_form(psi, psi)
    }

    fn parity_form(&self, a: &[f64], b: &[f64]) -> f64 {
        // Π = −σx (−1)^j; σx swaps ↑ and ↓
        let mut sum = 0.0;
        for j in 0..self.photons.len() {
            let sign = if j % 2 == 0 { -1.0 } else { 1.0 };
            sum += sign * (a[2 * j] * b[2 * j + 1] + a[2 * j + 1] * b[2 * j]);
        }
        sum
    }

    /// H restricted to one parity, in the basis `|2j + 2(q−1/4)⟩ ⊗ |σx = s_j⟩`
    /// with `s_j = −Π(−1)^j`. The result is tridiagonal.
    pub fn parity_block(&self, parity: Parity) -> DenseMatrix {
        let count = self.photons.len();
        let pi = parity.sign();
        // columns of the orthogonal transform: (|↑⟩ + s|↓⟩)/√2 at photon j
        let s = |j: usize| -pi * if j % 2 == 0 { 1.0 } else { -1.0 };
        let h = &self.matrix;
        DenseMatrix::from_fn(count, |i, j| {
            let (si, sj) = (s(i), s(j));
            0.5 * (h[(2 * i, 2 * j)]
                + sj * h[(2 * i, 2 * j + 1)]
                + si * h[(2 * i + 1, 2 * j)]
                + si * sj * h[(2 * i + 1, 2 * j + 1)])
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleLevel {
    pub energy: f64,
    pub parity: Parity,
    /// Expectation of Π in the eigenvector; ±1 up to rounding.
    pub parity_expectation: f64,
}

/// The `k` lowest eigenvalues of the full sector Hamiltonian with parity
/// labels read off the eigenvectors.
pub fn eigen_spectrum(ham: &FockHamiltonian, k: usize) -> Result<Vec<OracleLevel>> {
    let eig = jacobi_symmetric_eigenvectors(&ham.matrix)?;
    let vectors = eig.vectors.as_ref().expect("requested eigenvectors");
    let n = eig.values.len();
    let k = k.min(n);
    let columns: Vec<Vec<f64>> = (0..n).map(|c| vectors.column(c)).collect();

    let mut levels = Vec::with_capacity(k);
    let mut i = 0;
    while i < k {
        // cluster of (near-)degenerate eigenvalues: diagonalize Π inside it
        let mut end = i + 1;
        while end < n && (eig.values[end] - eig.values[end - 1]).abs() < DEGENERACY_TOL * eig.values[end].abs().max(1.0) {
            end += 1;
        }
        let size = end - i;
        if size == 1 {
            let p = ham.parity_expectation(&columns[i]);
            levels.push(OracleLevel {
                energy: eig.values[i],
                parity: Parity::from_sign(p),
                parity_expectation: p,
            });
        } else {
            let block = DenseMatrix::from_fn(size, |a, b| ham.parity_form(&columns[i + a], &columns[i + b]));
            let pvals = jacobi_symmetric_eigen(&block)?;
            for (offset, p) in pvals.into_iter().enumerate() {
                levels.push(OracleLevel {
                    energy: eig.values[i + offset],
                    parity: Parity::from_sign(p),
                    parity_expectation: p,
                });
            }
        }
        i = end;
    }
    levels.truncate(k);
    Ok(levels)
}

/// The `k` lowest eigenvalues of one (q, Π) sector from its tridiagonal
/// parity block, by Sturm bisection.
pub fn sector_spectrum(params: &ModelParams, sector: Sector, fock_cutoff: usize, k: usize) -> Result<Vec<f64>> {
    let (diag, off) = parity_tridiagonal(params, sector, fock_cutoff);
    Ok(tridiagonal_lowest_eigenvalues(&diag, &off, k))
}

/// Diagonal and off-diagonal of [`FockHamiltonian::parity_block`] without
/// forming the dense matrix: `p_j + Π(Ω/2)(−1)^j` and `g√((p_j+1)(p_j+2))`.
pub fn parity_tridiagonal(params: &ModelParams, sector: Sector, fock_cutoff: usize) -> (Vec<f64>, Vec<f64>) {
    let cutoff = fock_cutoff.max(MIN_CUTOFF);
    let photons: Vec<usize> = (sector.q.offset() as usize..=cutoff).step_by(2).collect();
    let half = 0.5 * params.omega() * sector.parity.sign();
    let diag = photons
        .iter()
        .enumerate()
        .map(|(j, &p)| p as f64 + if j % 2 == 0 { half } else { -half })
        .collect();
    let off = photons[..photons.len() - 1]
        .iter()
        .map(|&p| {
            let pf = p as f64;
            params.g() * ((pf + 1.0) * (pf + 2.0)).sqrt()
        })
        .collect();
    (diag, off)
}

/// Eigenvalue paired with the shift it underwent when the cutoff doubled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergedLevel {
    pub energy: f64,
    pub doubling_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorOracle {
    pub sector: Sector,
    pub fock_cutoff: usize,
    /// Values from the doubled cutoff.
    pub levels: Vec<ConvergedLevel>,
}

impl SectorOracle {
    /// Levels whose doubling delta is below `tol`.
    pub fn converged(&self, tol: f64) -> impl Iterator<Item = &ConvergedLevel> {
        self.levels.iter().filter(move |l| l.doubling_delta < tol)
    }

    pub fn in_window(&self, e_lo: f64, e_hi: f64) -> impl Iterator<Item = &ConvergedLevel> {
        self.levels.iter().filter(move |l| l.energy >= e_lo && l.energy <= e_hi)
    }
}

/// Sector spectrum at `fock_cutoff` and `2·fock_cutoff`; each of the `k`
/// lowest levels records the difference.
pub fn converged_sector_spectrum(params: &ModelParams, sector: Sector, fock_cutoff: usize, k: usize) -> Result<SectorOracle> {
    let coarse = sector_spectrum(params, sector, fock_cutoff, k)?;
    let fine = sector_spectrum(params, sector, 2 * fock_cutoff, k)?;
    let levels = fine
        .iter()
        .enumerate()
        .map(|(i, &e)| ConvergedLevel {
            energy: e,
            doubling_delta: coarse.get(i).map_or(f64::INFINITY, |c| (c - e).abs()),
        })
        .collect();
    Ok(SectorOracle {
        sector,
        fock_cutoff,
        levels,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundState {
    pub energy: f64,
    pub fock_cutoff: usize,
    pub doubling_delta: f64,
}

/// Ground state (q = 1/4, Π = −1), doubling the cutoff from `start_cutoff`
/// until two successive values agree within `tol` or `max_cutoff` is reached.
pub fn ground_state(params: &ModelParams, start_cutoff: usize, tol: f64, max_cutoff: usize) -> Result<GroundState> {
    let mut cutoff = start_cutoff.max(MIN_CUTOFF);
    let mut prev = sector_spectrum(params, Sector::GROUND, cutoff, 1)?[0];
    loop {
        let next_cutoff = 2 * cutoff;
        let next = sector_spectrum(params, Sector::GROUND, next_cutoff, 1)?[0];
        let delta = (next - prev).abs();
        if delta < tol || next_cutoff >= max_cutoff {
            return Ok(GroundState {
                energy: next,
                fock_cutoff: next_cutoff,
                doubling_delta: delta,
            });
        }
        prev = next;
        cutoff = next_cutoff;
    }
}

/// Lowest `k` eigenvalues of H on all photon numbers `0..=cutoff` with
/// both spin states, no symmetry used.
pub fn unrestricted_spectrum(params: &ModelParams, fock_cutoff: usize, k: usize) -> Result<Vec<f64>> {
    let n = fock_cutoff + 1;
    let g = params.g();
    let half_omega = 0.5 * params.omega();
    let mut h = DenseMatrix::zeros(2 * n);
    for p in 0..n {
        let (up, down) = (2 * p, 2 * p + 1);
        h[(up, up)] = p as f64;
        h[(down, down)] = p as f64;
        h[(up, down)] = -half_omega;
        h[(down, up)] = -half_omega;
        if p + 2 < n {
            let pf = p as f64;
            let c = g * ((pf + 1.0) * (pf + 2.0)).sqrt();
            h[(up + 4, up)] = c;
            h[(up, up + 4)] = c;
            h[(down + 4, down)] = -c;
            h[(down, down + 4)] = -c;
        }
    }
    let mut values = jacobi_symmetric_eigen(&h)?;
    values.truncate(k);
    Ok(values)
}
