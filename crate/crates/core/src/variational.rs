//! Squeezed-state variational estimate of the ground state.
//!
//! The trial family has energy
//!
//! ```text
//! E(r) = −(Ω/2) [1 − tanh²(2r)]^{1/4} + sinh² r − g sinh 2r
//! ```
//!
//! Unlike any finite-order truncation, its minimum stays below −1/2 all
//! the way to g = 1/2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;

pub const DEFAULT_TOL: f64 = 1e-10;

const STARTS: [f64; 5] = [0.0, 0.5, 1.0, 2.0, 4.0];
const MAX_EXPANSIONS: usize = 60;
const MAX_ITERATIONS: usize = 500;
const FD_STEP: f64 = 1e-6;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

pub fn variational_energy(params: &ModelParams, r: f64) -> f64 {
    // [1 − tanh²(2r)]^{1/4} = √sech(2r)
    let sech = 1.0 / (2.0 * r).cosh();
    -0.5 * params.omega() * sech.sqrt() + r.sinh().powi(2) - params.g() * (2.0 * r).sinh()
}

pub fn variational_derivative(params: &ModelParams, r: f64) -> f64 {
    let t = 2.0 * r;
    let sech = 1.0 / t.cosh();
    0.5 * params.omega() * sech.sqrt() * t.tanh() + t.sinh() - 2.0 * params.g() * t.cosh()
}

/// Central finite difference of [`variational_energy`].
pub fn finite_difference_derivative(params: &ModelParams, r: f64) -> f64 {
    (variational_energy(params, r + FD_STEP) - variational_energy(params, r - FD_STEP)) / (2.0 * FD_STEP)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationalResult {
    pub r_opt: f64,
    pub energy: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl VariationalResult {
    pub fn derivative(&self, params: &ModelParams) -> f64 {
        variational_derivative(params, self.r_opt)
    }
}

/// Minimize E(r) over r ≥ 0.
///
/// Each start in `bracket` plus a fixed set of seeds is expanded into a
/// bracket with an interior minimum, refined by golden section to `tol`
/// and polished on the derivative. The lowest of the local minima wins.
/// A bracket that keeps expanding without finding a minimum gives
/// [`Error::NoInteriorMinimum`].
pub fn minimize_variational(params: &ModelParams, bracket: (f64, f64), tol: f64) -> Result<VariationalResult> {
    let (a, b) = (bracket.0.max(0.0), bracket.1.max(0.0));
    let mut starts: Vec<f64> = STARTS.to_vec();
    starts.push(0.5 * (a + b));
    let mut best: Option<VariationalResult> = None;
    let mut last_err = None;
    for start in starts {
        match local_minimum(params, start, tol) {
            Ok(res) => {
                if best.map_or(true, |b| res.energy < b.energy) {
                    best = Some(res);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    match (best, last_err) {
        (Some(res), _) => Ok(res),
        (None, Some(e)) => Err(e),
        (None, None) => unreachable!("at least one start"),
    }
}

fn local_minimum(params: &ModelParams, start: f64, tol: f64) -> Result<VariationalResult> {
    let e = |r: f64| variational_energy(params, r);
    let de = |r: f64| variational_derivative(params, r);
    let mut iterations = 0;

    // walk downhill with growing steps until E turns up, or r = 0 is reached
    let dir = if de(start) > 0.0 { -1.0 } else { 1.0 };
    let mut step = 0.1;
    let (mut prev, mut cur) = (start, start);
    let (mut a, mut b);
    loop {
        let next = (cur + dir * step).max(0.0);
        if next == cur {
            // stuck at the boundary: the minimum lies in [0, prev]
            (a, b) = (0.0, prev.max(cur));
            break;
        }
        if e(next) >= e(cur) {
            (a, b) = if dir > 0.0 { (prev, next) } else { (next, prev) };
            break;
        }
        iterations += 1;
        if iterations > MAX_EXPANSIONS {
            return Err(Error::NoInteriorMinimum { r: next });
        }
        prev = cur;
        cur = next;
        step *= 1.618;
    }

    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (e(c), e(d));
    while b - a > tol && iterations < MAX_ITERATIONS {
        iterations += 1;
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = e(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = e(d);
        }
    }
    let mut r = 0.5 * (a + b);

    // E is flat at the minimum, so golden section alone only fixes r to
    // about √ε; bisect on the analytic derivative to finish
    let mut width = tol.max(1e-12);
    let (mut lo, mut hi) = ((r - width).max(0.0), r + width);
    while (de(lo) >= 0.0 && lo > 0.0 || de(hi) <= 0.0) && width < 1.0 {
        width *= 2.0;
        lo = (r - width).max(0.0);
        hi = r + width;
    }
    if lo == 0.0 && de(0.0) >= 0.0 {
        r = 0.0;
    } else if de(lo) < 0.0 && de(hi) > 0.0 {
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if m <= lo || m >= hi {
                break;
            }
            if de(m) < 0.0 {
                lo = m;
            } else {
                hi = m;
            }
            iterations += 1;
        }
        r = 0.5 * (lo + hi);
    }

    let stationary = if r == 0.0 { de(0.0) >= 0.0 } else { finite_difference_derivative(params, r).abs() < 1e-8 };
    Ok(VariationalResult {
        r_opt: r,
        energy: e(r),
        iterations,
        converged: iterations < MAX_ITERATIONS && stationary,
    })
}

/// Minimum with the default bracket and tolerance.
pub fn variational_ground_state(params: &ModelParams) -> Result<VariationalResult> {
    minimize_variational(params, (0.0, 1.0), DEFAULT_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::ground_state_first_order;
    use crate::oracle;
    use proptest::prelude::*;

    fn params(omega: f64, g: f64) -> ModelParams {
        ModelParams::new(omega, g).unwrap()
    }

    #[test]
    fn unsqueezed_value() {
        for omega in [0.3, 1.0, 3.0] {
            assert!((variational_energy(&params(omega, 0.2), 0.0) + 0.5 * omega).abs() < 1e-15);
        }
    }

    #[test]
    fn decoupled_minimum_at_origin() {
        let res = variational_ground_state(&params(1.0, 0.0)).unwrap();
        assert_eq!(res.r_opt, 0.0);
        assert!((res.energy + 0.5).abs() < 1e-15);
        assert!(res.converged);
    }

    #[test]
    fn critical_tail_approaches_collapse_from_below() {
        let p = params(1.0, 0.5 - 1e-12);
        for r in [4.0, 6.0, 8.0] {
            let e = variational_energy(&p, r);
            assert!(e < -0.5 && e > -0.5 - 2e-2, "r={r}: {e}");
        }
        let interior = (1..200).map(|i| variational_energy(&p, i as f64 * 0.02)).fold(f64::INFINITY, f64::min);
        assert!(interior < -0.5);
    }

    #[test]
    fn gap_survives_near_critical_coupling() {
        let res = variational_ground_state(&params(1.0, 0.4999)).unwrap();
        assert!(res.converged);
        assert!(res.energy < -0.5 - 0.01, "{res:?}");
    }

    #[test]
    fn sandwiched_by_oracle_and_first_order() {
        for g in [0.1, 0.2, 0.3, 0.4, 0.45, 0.49] {
            let p = params(1.0, g);
            let var = variational_ground_state(&p).unwrap();
            let exact = oracle::ground_state(&p, 100, 1e-12, 6400).unwrap().energy;
            let first = ground_state_first_order(&p).unwrap();
            assert!(exact - 1e-9 <= var.energy, "g={g}: {exact} > {}", var.energy);
            assert!(var.energy <= first + 1e-9, "g={g}: {} > {first}", var.energy);
        }
    }

    #[test]
    fn continuous_in_coupling() {
        let mut prev = variational_ground_state(&params(1.0, 0.0)).unwrap().energy;
        for i in 1..=499 {
            let e = variational_ground_state(&params(1.0, i as f64 * 1e-3)).unwrap().energy;
            // dE/dg = −sinh 2r, bounded well away from g = 1/2
            assert!((e - prev).abs() < 20.0 * 1e-3, "g={}", i as f64 * 1e-3);
            assert!(e <= prev + 1e-12);
            prev = e;
        }
    }

    proptest! {
        #[test]
        fn derivative_matches_finite_difference(omega in 0.1f64..5.0, g in 0.0f64..0.5, r in 0.0f64..5.0) {
            let p = params(omega, g);
            let a = variational_derivative(&p, r);
            let fd = finite_difference_derivative(&p, r);
            prop_assert!((a - fd).abs() < 1e-6 * (1.0 + a.abs()));
        }

        #[test]
        fn minimum_is_stationary_and_lowest(omega in 0.1f64..5.0, g in 0.0f64..0.4999) {
            let p = params(omega, g);
            let res = variational_ground_state(&p).unwrap();
            prop_assert!(res.converged);
            prop_assert!(res.r_opt >= 0.0);
            if res.r_opt > 0.0 {
                prop_assert!(finite_difference_derivative(&p, res.r_opt).abs() < 1e-8);
            }
            for i in 0..400 {
                prop_assert!(res.energy <= variational_energy(&p, i as f64 * 0.02) + 1e-12);
            }
        }
    }
}
