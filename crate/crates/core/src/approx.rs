//! Finite-order approximations built from a window of the `D` matrix.
//!
//! Keeping the coefficients `u_m, …, u_{m+N}` of the expansion in the
//! `c`-frame number states turns the Schrödinger equation into the
//! (N+1)-dimensional problem
//!
//! ```text
//! A_ij = β(2(m+i) + 2(q−1/4) − v²) δ_ij + Π D[m+i][m+j]
//! ```
//!
//! N = 0 and N = 1 have closed forms. Every fixed N sends the ground state
//! to −1/2 as g → 1/2, unlike the exact spectrum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{qr_nonsymmetric_eigen, DenseMatrix};
use crate::melem::{d_element, DMatrix};
use crate::model::{BargmannIndex, ModelParams, Parity, Sector};

/// Largest imaginary part tolerated in an eigenvalue of `A`.
pub const IMAG_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct TruncatedProblem {
    pub sector: Sector,
    /// Number of retained indices beyond `base`; the matrix has size N+1.
    pub order: usize,
    pub base: usize,
    pub matrix: DenseMatrix,
}

impl TruncatedProblem {
    pub fn new(params: &ModelParams, sector: Sector, base: usize, order: usize) -> Self {
        let frame = params.frame();
        let d = DMatrix::block(params, sector.q, base, order + 1);
        let pi = sector.parity.sign();
        let matrix = DenseMatrix::from_fn(order + 1, |i, j| {
            let diag = if i == j { frame.pole_energy(sector.q, base + i) } else { 0.0 };
            diag + pi * d.entries[(i, j)]
        });
        Self {
            sector,
            order,
            base,
            matrix,
        }
    }

    pub fn dim(&self) -> usize {
        self.order + 1
    }

    /// All eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let mut values = Vec::with_capacity(self.dim());
        for ev in qr_nonsymmetric_eigen(&self.matrix)? {
            if ev.im.abs() > IMAG_TOL {
                return Err(Error::ComplexEigenvalue { re: ev.re, im: ev.im });
            }
            values.push(ev.re);
        }
        values.sort_by(f64::total_cmp);
        Ok(values)
    }
}

/// All eigenvalues of the order-N problem at base index `m`.
pub fn diagonalize_truncated(params: &ModelParams, sector: Sector, m: usize, order: usize) -> Result<Vec<f64>> {
    TruncatedProblem::new(params, sector, m, order).eigenvalues()
}

/// Ground state at order N: lowest eigenvalue for q = 1/4, Π = −1, m = 0.
pub fn ground_state_order(params: &ModelParams, order: usize) -> Result<f64> {
    Ok(diagonalize_truncated(params, Sector::GROUND, 0, order)?[0])
}

pub fn zeroth_order_energy(params: &ModelParams, sector: Sector, m: usize) -> f64 {
    params.frame().pole_energy(sector.q, m) + sector.parity.sign() * d_element(params, sector.q, m, m)
}

/// Both roots of the 2×2 problem on `m, m+1` with Π = (−1)^m, lower first.
pub fn first_order_energies(params: &ModelParams, q: BargmannIndex, m: usize) -> Result<(f64, f64)> {
    let pi = Parity::of_index(m).sign();
    let frame = params.frame();
    let a0 = frame.pole_energy(q, m) + pi * d_element(params, q, m, m);
    let a1 = frame.pole_energy(q, m + 1) + pi * d_element(params, q, m + 1, m + 1);
    let product = d_element(params, q, m, m + 1) * d_element(params, q, m + 1, m);
    let (mean, root) = two_level(a0, a1, product)?;
    Ok((mean - root, mean + root))
}

/// First-order ground-state energy.
pub fn ground_state_first_order(params: &ModelParams) -> Result<f64> {
    let q = BargmannIndex::Quarter;
    let beta = params.frame().beta;
    let d00 = d_element(params, q, 0, 0);
    let d11 = d_element(params, q, 1, 1);
    let d01 = d_element(params, q, 0, 1);
    let d10 = d_element(params, q, 1, 0);
    let disc = (d11 - d00 - 2.0 * beta).powi(2) + 4.0 * d10 * d01;
    if disc < 0.0 {
        return Err(Error::NegativeDiscriminant(disc));
    }
    Ok(-0.5 + 1.5 * beta - 0.5 * (d00 + d11) - 0.5 * disc.sqrt())
}

fn two_level(a0: f64, a1: f64, product: f64) -> Result<(f64, f64)> {
    let disc = (a1 - a0).powi(2) + 4.0 * product;
    if disc < 0.0 {
        return Err(Error::NegativeDiscriminant(disc));
    }
    Ok((0.5 * (a0 + a1), 0.5 * disc.sqrt()))
}

/// Ground-state energies for several orders at one coupling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderRow {
    pub g: f64,
    pub order: usize,
    pub energy: f64,
}

pub fn ground_state_orders(params: &ModelParams, orders: &[usize]) -> Result<Vec<OrderRow>> {
    orders
        .iter()
        .map(|&order| {
            Ok(OrderRow {
                g: params.g(),
                order,
                energy: ground_state_order(params, order)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::decoupled_levels;
    use crate::oracle;
    use proptest::prelude::*;

    fn params(omega: f64, g: f64) -> ModelParams {
        ModelParams::new(omega, g).unwrap()
    }

    #[test]
    fn decoupled_zeroth_order() {
        for omega in [0.5, 1.0, 3.0] {
            let p = params(omega, 0.0);
            assert!((zeroth_order_energy(&p, Sector::GROUND, 0) + 0.5 * omega).abs() < 1e-14);
            for s in Sector::ALL {
                let exact = decoupled_levels(&p, s, 6);
                for m in 0..6 {
                    let e = zeroth_order_energy(&p, s, m);
                    assert!(exact.iter().any(|x| (x - e).abs() < 1e-12));
                }
            }
        }
    }

    #[test]
    fn decoupled_first_order() {
        let p = params(1.0, 0.0);
        let q = BargmannIndex::Quarter;
        let (lo, hi) = first_order_energies(&p, q, 0).unwrap();
        // Π = +1 on m = 0, 1: 0 + 1/2 and 2 − 1/2
        assert!((lo - 0.5).abs() < 1e-12 && (hi - 1.5).abs() < 1e-12);
        assert!((ground_state_first_order(&p).unwrap() + 0.5).abs() < 1e-12);
    }

    #[test]
    fn ground_state_first_order_matches_solver() {
        for g in [0.05, 0.1, 0.2, 0.3, 0.4, 0.45, 0.49, 0.4999] {
            let p = params(1.0, g);
            let closed = ground_state_first_order(&p).unwrap();
            let solved = ground_state_order(&p, 1).unwrap();
            assert!((closed - solved).abs() < 1e-10, "g={g}");
        }
    }

    #[test]
    fn diagonal_spacing_is_two_beta() {
        let p = params(1.7, 0.35);
        let beta = p.frame().beta;
        let prob = TruncatedProblem::new(&p, Sector::new(BargmannIndex::ThreeQuarters, Parity::Plus), 3, 6);
        let d = DMatrix::block(&p, BargmannIndex::ThreeQuarters, 3, 7);
        for i in 1..prob.dim() {
            let h = |k: usize| prob.matrix[(k, k)] - d.entries[(k, k)];
            assert!((h(i) - h(i - 1) - 2.0 * beta).abs() < 1e-13);
        }
    }

    #[test]
    fn zeroth_order_tracks_oracle_at_moderate_coupling() {
        let p = params(1.0, 0.25);
        for s in Sector::ALL {
            let exact = oracle::sector_spectrum(&p, s, 200, 12).unwrap();
            for m in 0..5 {
                let e = zeroth_order_energy(&p, s, m);
                let nearest = exact.iter().map(|x| (x - e).abs()).fold(f64::INFINITY, f64::min);
                assert!(nearest < 0.1, "{s:?} m={m}: {nearest}");
            }
        }
    }

    #[test]
    fn first_order_improves_on_zeroth() {
        let p = params(1.0, 0.25);
        let exact = oracle::sector_spectrum(&p, Sector::GROUND, 200, 1).unwrap()[0];
        let zeroth = zeroth_order_energy(&p, Sector::GROUND, 0);
        let first = ground_state_first_order(&p).unwrap();
        assert!((first - exact).abs() < (zeroth - exact).abs());
    }

    #[test]
    fn orders_approach_oracle_ground_state() {
        for g in [0.1, 0.2, 0.3, 0.4] {
            let p = params(1.0, g);
            let exact = oracle::sector_spectrum(&p, Sector::GROUND, 200, 1).unwrap()[0];
            let mut prev = f64::INFINITY;
            for order in [0, 1, 2, 4, 8] {
                let err = (ground_state_order(&p, order).unwrap() - exact).abs();
                assert!(err <= prev + 1e-10, "g={g} N={order}: {err} > {prev}");
                prev = err;
            }
        }
    }

    #[test]
    fn every_order_rises_toward_collapse() {
        // the approach is slow: |E + 1/2| shrinks like √β
        for order in [0, 1, 4, 8] {
            let mut prev = f64::NEG_INFINITY;
            for g in [0.49, 0.499, 0.4999, 0.49999] {
                let p = params(1.0, g);
                let e = ground_state_order(&p, order).unwrap();
                assert!(e > prev && e < -0.5, "N={order} g={g}: {e}");
                let ratio = (e + 0.5).abs() / p.frame().beta.sqrt();
                if g >= 0.4999 {
                    assert!(ratio < 2.0, "N={order} g={g}: {ratio}");
                }
                prev = e;
            }
        }
    }

    proptest! {
        #[test]
        fn first_order_pair_matches_solver(omega in 0.2f64..4.0, g in 0.0f64..0.499, m in 0usize..8, odd in any::<bool>()) {
            let p = params(omega, g);
            let q = if odd { BargmannIndex::ThreeQuarters } else { BargmannIndex::Quarter };
            let (lo, hi) = first_order_energies(&p, q, m).unwrap();
            let solved = diagonalize_truncated(&p, Sector::new(q, Parity::of_index(m)), m, 1).unwrap();
            prop_assert!((lo - solved[0]).abs() < 1e-10);
            prop_assert!((hi - solved[1]).abs() < 1e-10);
        }

        #[test]
        fn order_zero_is_zeroth_energy(omega in 0.2f64..4.0, g in 0.0f64..0.499, m in 0usize..10, minus in any::<bool>()) {
            let p = params(omega, g);
            let parity = if minus { Parity::Minus } else { Parity::Plus };
            let s = Sector::new(BargmannIndex::Quarter, parity);
            let solved = diagonalize_truncated(&p, s, m, 0).unwrap();
            prop_assert!((solved[0] - zeroth_order_energy(&p, s, m)).abs() < 1e-12);
        }

        #[test]
        fn truncated_eigenvalues_are_real(omega in 0.2f64..4.0, g in 0.0f64..0.4999, order in 0usize..12) {
            let p = params(omega, g);
            let values = diagonalize_truncated(&p, Sector::GROUND, 0, order).unwrap();
            prop_assert_eq!(values.len(), order + 1);
            prop_assert!(values.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
