//! Overlaps between the two squeezed bases and the matrix elements
//!
//! ```text
//! D_mn = (Ω/2)(−1)ⁿ ⟨q,m|_b |q,n⟩_c
//!      = (Ω/2)(−1)^m β^{1/2} √([2(n+q−1/4)]! / [2(m+q−1/4)]!) P^{m−n}_{m+n+2(q−1/4)}(β)
//! ```
//!
//! `P_ℓ^k` carries the Condon–Shortley phase. With the basis phases fixed by
//! the ladder convention (`|k+1⟩ ∝ b†|k⟩` with a positive coefficient and
//! `⟨0_a|0_b⟩ > 0`), this closed form reproduces the numerically computed
//! overlap exactly, including the `(−1)^m` prefactor. [`OverlapOracle`] is
//! that numerical computation.

use crate::error::{Error, Result};
use crate::linalg::{jacobi_symmetric_eigenvectors, log_gamma, DenseMatrix};
use crate::model::{BargmannIndex, ModelParams};

/// A real number as sign and natural log of its magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LogValue {
    pub sign: f64,
    pub ln_abs: f64,
}

impl LogValue {
    const ZERO: LogValue = LogValue {
        sign: 0.0,
        ln_abs: f64::NEG_INFINITY,
    };

    fn value(self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * self.ln_abs.exp()
        }
    }
}

fn ln_factorial(n: u64) -> f64 {
    log_gamma(n as f64 + 1.0).expect("factorial argument is positive")
}

/// Associated Legendre function `P_ℓ^k(x)` with the Condon–Shortley phase.
///
/// Negative orders use `P_ℓ^{−k} = (−1)^k (ℓ−k)!/(ℓ+k)! P_ℓ^k`; `|k| > ℓ`
/// gives exactly zero. `x = ±1` is accepted as the endpoint limit.
pub fn legendre_assoc(l: u32, k: i32, x: f64) -> Result<f64> {
    legendre_assoc_log(l, k, x).map(LogValue::value)
}

pub(crate) fn legendre_assoc_log(l: u32, k: i32, x: f64) -> Result<LogValue> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Domain(x));
    }
    let order = k.unsigned_abs();
    if order > l {
        return Ok(LogValue::ZERO);
    }
    let base = legendre_nonneg_order_log(l, order, x);
    if k >= 0 || base.sign == 0.0 {
        return Ok(base);
    }
    let sign = if order % 2 == 0 { base.sign } else { -base.sign };
    let ratio = ln_factorial((l - order) as u64) - ln_factorial((l + order) as u64);
    Ok(LogValue {
        sign,
        ln_abs: base.ln_abs + ratio,
    })
}

fn legendre_nonneg_order_log(l: u32, k: u32, x: f64) -> LogValue {
    let one_minus_x2 = (1.0 - x) * (1.0 + x);
    if k > 0 && one_minus_x2 == 0.0 {
        return LogValue::ZERO;
    }
    // P_k^k = (−1)^k (2k−1)!! (1−x²)^{k/2}; recurse on the ratio P_ℓ^k / P_k^k
    let kf = k as f64;
    let ln_double_factorial = ln_factorial(2 * k as u64) - kf * std::f64::consts::LN_2 - ln_factorial(k as u64);
    let ln_seed = ln_double_factorial + if k > 0 { 0.5 * kf * one_minus_x2.ln() } else { 0.0 };
    let seed_sign = if k % 2 == 0 { 1.0 } else { -1.0 };

    let mut prev = 0.0;
    let mut cur = 1.0;
    for ell in (k + 1)..=l {
        let ellf = ell as f64;
        let next = ((2.0 * ellf - 1.0) * x * cur - (ellf - 1.0 + kf) * prev) / (ellf - kf);
        prev = cur;
        cur = next;
    }
    if cur == 0.0 {
        return LogValue::ZERO;
    }
    LogValue {
        sign: seed_sign * cur.signum(),
        ln_abs: ln_seed + cur.abs().ln(),
    }
}

/// Closed-form matrix element `D_mn` in sector q.
pub fn d_element(params: &ModelParams, q: BargmannIndex, m: usize, n: usize) -> f64 {
    let frame = params.frame();
    let offset = q.offset() as u64;
    let degree = (m + n) as u32 + q.offset();
    let order = m as i32 - n as i32;
    let p = legendre_assoc_log(degree, order, frame.beta).expect("β lies in (0, 1]");
    if p.sign == 0.0 {
        return 0.0;
    }
    let ln_ratio = 0.5 * (ln_factorial(2 * n as u64 + offset) - ln_factorial(2 * m as u64 + offset));
    let ln_abs = (0.5 * params.omega()).ln() + 0.5 * frame.beta.ln() + ln_ratio + p.ln_abs;
    let phase = if m % 2 == 0 { 1.0 } else { -1.0 };
    phase * p.sign * ln_abs.exp()
}

/// Square block of `D` with indices `start..start+size` in both directions.
#[derive(Debug, Clone)]
pub struct DMatrix {
    pub q: BargmannIndex,
    pub omega: f64,
    pub g: f64,
    pub start: usize,
    pub entries: DenseMatrix,
}

impl DMatrix {
    /// Leading block `0 ≤ m, n ≤ last`.
    pub fn new(params: &ModelParams, q: BargmannIndex, last: usize) -> Self {
        Self::block(params, q, 0, last + 1)
    }

    pub fn block(params: &ModelParams, q: BargmannIndex, start: usize, size: usize) -> Self {
        let entries = DenseMatrix::from_fn(size, |i, j| d_element(params, q, start + i, start + j));
        Self {
            q,
            omega: params.omega(),
            g: params.g(),
            start,
            entries,
        }
    }

    pub fn size(&self) -> usize {
        self.entries.dim()
    }

    /// Element `D[m][n]` by absolute index.
    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.entries[(m - self.start, n - self.start)]
    }

    pub fn max_abs(&self) -> f64 {
        let n = self.size();
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| self.entries[(i, j)].abs())
            .fold(0.0, f64::max)
    }
}

/// Tolerance for the cutoff-doubling check of the overlap oracle.
pub const OVERLAP_DOUBLING_TOL: f64 = 1e-9;

/// Numerical overlaps `⟨q,m|_b |q,n⟩_c` from diagonalizing
/// `a†a ± g(a†² + a²)` in a truncated Fock basis.
#[derive(Debug, Clone)]
pub struct OverlapOracle {
    pub q: BargmannIndex,
    pub omega: f64,
    pub fock_cutoff: usize,
    /// `overlaps[(m, n)] = ⟨q,m|_b |q,n⟩_c`.
    pub overlaps: DenseMatrix,
    /// Largest change of any overlap when the cutoff was doubled.
    pub doubling_delta: f64,
}

impl OverlapOracle {
    /// Overlaps for `0 ≤ m, n ≤ last`, checked by doubling the cutoff.
    pub fn new(params: &ModelParams, q: BargmannIndex, last: usize, fock_cutoff: usize) -> Result<Self> {
        let coarse = overlap_block(params, q, last, fock_cutoff)?;
        let fine = overlap_block(params, q, last, 2 * fock_cutoff)?;
        let n = last + 1;
        let mut delta: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                delta = delta.max((coarse[(i, j)] - fine[(i, j)]).abs());
            }
        }
        if delta > OVERLAP_DOUBLING_TOL {
            return Err(Error::OverlapNotConverged { delta });
        }
        Ok(Self {
            q,
            omega: params.omega(),
            fock_cutoff,
            overlaps: fine,
            doubling_delta: delta,
        })
    }

    /// Overlap scaled by `(Ω/2)(−1)ⁿ`, directly comparable with [`d_element`].
    pub fn d_value(&self, m: usize, n: usize) -> f64 {
        let phase = if n % 2 == 0 { 1.0 } else { -1.0 };
        0.5 * self.omega * phase * self.overlaps[(m, n)]
    }
}

/// Single-element convenience wrapper around [`OverlapOracle`].
pub fn overlap_oracle(
    params: &ModelParams,
    q: BargmannIndex,
    m: usize,
    n: usize,
    fock_cutoff: usize,
) -> Result<f64> {
    Ok(OverlapOracle::new(params, q, m.max(n), fock_cutoff)?.d_value(m, n))
}

/// Which squeezed frame: `b = ua + va†` (upper block) or `c = ua − va†`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Frame {
    B,
    C,
}

impl Frame {
    fn sign(self) -> f64 {
        match self {
            Frame::B => 1.0,
            Frame::C => -1.0,
        }
    }
}

fn overlap_block(params: &ModelParams, q: BargmannIndex, last: usize, cutoff: usize) -> Result<DenseMatrix> {
    let b = squeezed_states(params, q, last, cutoff, Frame::B)?;
    let c = squeezed_states(params, q, last, cutoff, Frame::C)?;
    Ok(DenseMatrix::from_fn(last + 1, |m, n| dot(&b[m], &c[n])))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fock-space vectors (over all photon numbers `0..=cutoff`) of the squeezed
/// number states `|2m + 2(q−1/4)⟩` for `m = 0..=last` in the given frame.
fn squeezed_states(
    params: &ModelParams,
    q: BargmannIndex,
    last: usize,
    cutoff: usize,
    frame: Frame,
) -> Result<Vec<Vec<f64>>> {
    let frame_data = params.frame();
    let (u, v) = (frame_data.u, frame.sign() * frame_data.v);
    let coupling = frame.sign() * params.g();

    let even = parity_eigenvectors(coupling, 0, cutoff)?;
    let mut vacuum = even[0].clone();
    if vacuum[0] < 0.0 {
        negate(&mut vacuum);
    }

    let basis = match q {
        BargmannIndex::Quarter => even,
        BargmannIndex::ThreeQuarters => parity_eigenvectors(coupling, 1, cutoff)?,
    };
    if basis.len() <= last + 1 {
        return Err(Error::InvalidParams(format!(
            "Fock cutoff {cutoff} too small for squeezed index {last}"
        )));
    }

    let raise = |x: &[f64]| creation_in_frame(x, u, v);
    let mut states: Vec<Vec<f64>> = Vec::with_capacity(last + 1);
    let mut reference = match q {
        BargmannIndex::Quarter => vacuum,
        BargmannIndex::ThreeQuarters => raise(&vacuum),
    };
    for m in 0..=last {
        let mut state = basis[m].clone();
        if dot(&state, &reference) < 0.0 {
            negate(&mut state);
        }
        reference = raise(&raise(&state));
        states.push(state);
    }
    Ok(states)
}

fn negate(x: &mut [f64]) {
    x.iter_mut().for_each(|c| *c = -*c);
}

/// Applies `u a† + v a` on the truncated Fock space.
fn creation_in_frame(x: &[f64], u: f64, v: f64) -> Vec<f64> {
    let dim = x.len();
    let mut out = vec![0.0; dim];
    for k in 0..dim {
        if k + 1 < dim {
            out[k + 1] += u * ((k + 1) as f64).sqrt() * x[k];
        }
        if k >= 1 {
            out[k - 1] += v * (k as f64).sqrt() * x[k];
        }
    }
    out
}

/// Eigenvectors of `a†a + coupling (a†² + a²)` restricted to photon numbers
/// of the given parity, ascending, embedded in the full `0..=cutoff` space.
fn parity_eigenvectors(coupling: f64, parity_offset: usize, cutoff: usize) -> Result<Vec<Vec<f64>>> {
    let photons: Vec<usize> = (parity_offset..=cutoff).step_by(2).collect();
    let dim = photons.len();
    let h = DenseMatrix::from_fn(dim, |i, j| {
        let p = photons[i] as f64;
        if i == j {
            p
        } else if j == i + 1 {
            coupling * ((p + 1.0) * (p + 2.0)).sqrt()
        } else if i == j + 1 {
            let p = photons[j] as f64;
            coupling * ((p + 1.0) * (p + 2.0)).sqrt()
        } else {
            0.0
        }
    });
    let eig = jacobi_symmetric_eigenvectors(&h)?;
    let vectors = eig.vectors.expect("requested eigenvectors");
    Ok((0..dim)
        .map(|k| {
            let mut full = vec![0.0; cutoff + 1];
            for (i, &p) in photons.iter().enumerate() {
                full[p] = vectors[(i, k)];
            }
            full
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(omega: f64, g: f64) -> ModelParams {
        ModelParams::new(omega, g).unwrap()
    }

    /// P_ℓ^k for k ≥ 0 from the explicit sum of the Rodrigues derivative:
    /// P_ℓ^k(x) = (−1)^k (1−x²)^{k/2} d^{ℓ+k}/dx^{ℓ+k} (x²−1)^ℓ / (2^ℓ ℓ!).
    fn rodrigues(l: u32, k: u32, x: f64) -> f64 {
        let mut coeffs = vec![0.0f64; (2 * l + 1) as usize];
        // (x² − 1)^ℓ = Σ_j C(ℓ,j) x^{2j} (−1)^{ℓ−j}
        let mut binom = 1.0;
        for j in 0..=l {
            let sign = if (l - j) % 2 == 0 { 1.0 } else { -1.0 };
            coeffs[(2 * j) as usize] = sign * binom;
            binom = binom * (l - j) as f64 / (j + 1) as f64;
        }
        let d = (l + k) as usize;
        let mut sum = 0.0;
        for (p, c) in coeffs.iter().enumerate() {
            if p < d || *c == 0.0 {
                continue;
            }
            let falling: f64 = ((p - d + 1)..=p).map(|t| t as f64).product();
            sum += c * falling * x.powi((p - d) as i32);
        }
        let fact: f64 = (1..=l).map(|t| t as f64).product();
        let norm = 2f64.powi(l as i32) * fact;
        let cs = if k % 2 == 0 { 1.0 } else { -1.0 };
        cs * (1.0 - x * x).powf(k as f64 / 2.0) * sum / norm
    }

    #[test]
    fn low_order_values() {
        for x in [-0.9, 0.0, 0.3, 0.77] {
            assert_eq!(legendre_assoc(0, 0, x).unwrap(), 1.0);
            assert!((legendre_assoc(1, 0, x).unwrap() - x).abs() < 1e-15);
            assert!((legendre_assoc(1, 1, x).unwrap() + (1.0 - x * x).sqrt()).abs() < 1e-15);
        }
        assert_eq!(legendre_assoc(2, 3, 0.4).unwrap(), 0.0);
        assert_eq!(legendre_assoc(2, -3, 0.4).unwrap(), 0.0);
    }

    #[test]
    fn domain_checked() {
        assert!(matches!(legendre_assoc(3, 1, 1.2), Err(Error::Domain(_))));
        assert_eq!(legendre_assoc(4, 0, 1.0).unwrap(), 1.0);
        assert_eq!(legendre_assoc(4, 2, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn matches_rodrigues() {
        for l in 0..=10u32 {
            for k in 0..=l {
                for x in [0.1, 0.45, 0.7, 0.93] {
                    let got = legendre_assoc(l, k as i32, x).unwrap();
                    let want = rodrigues(l, k, x);
                    assert!((got - want).abs() < 1e-10 * want.abs().max(1.0), "l={l} k={k} x={x}: {got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn negative_order_relation() {
        // P_5^{-3}(0.7) = (−1)³ (2!/8!) P_5^3(0.7)
        let p53 = rodrigues(5, 3, 0.7);
        let want = -(2.0 / 40320.0) * p53;
        let got = legendre_assoc(5, -3, 0.7).unwrap();
        assert!((got - want).abs() < 1e-14 * want.abs().max(1e-300));
        assert!((got - want).abs() / want.abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn degree_recurrence(l in 1u32..40, kfrac in 0.0f64..1.0, neg in any::<bool>(), x in 0.01f64..0.99) {
            let kabs = (kfrac * l as f64).floor() as i32;
            let k = if neg { -kabs } else { kabs };
            let lf = l as f64;
            let kf = k as f64;
            let p_next = legendre_assoc(l + 1, k, x).unwrap();
            let p = legendre_assoc(l, k, x).unwrap();
            let p_prev = legendre_assoc(l - 1, k, x).unwrap();
            let lhs = (lf - kf + 1.0) * p_next;
            let rhs = (2.0 * lf + 1.0) * x * p - (lf + kf) * p_prev;
            let scale = lhs.abs().max(((2.0 * lf + 1.0) * x * p).abs()).max(((lf + kf) * p_prev).abs()).max(1e-300);
            prop_assert!((lhs - rhs).abs() < 1e-11 * scale, "lhs {} rhs {}", lhs, rhs);
        }
    }

    #[test]
    fn identity_at_zero_coupling() {
        let p = params(1.7, 0.0);
        for q in BargmannIndex::ALL {
            let d = DMatrix::new(&p, q, 6);
            for m in 0..=6 {
                for n in 0..=6 {
                    let want = if m == n { 0.85 * if n % 2 == 0 { 1.0 } else { -1.0 } } else { 0.0 };
                    assert!((d.get(m, n) - want).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn vanishes_toward_critical_coupling() {
        let mut last = f64::INFINITY;
        for g in [0.3, 0.4, 0.45, 0.49, 0.499, 0.4999, 0.499999] {
            let d = DMatrix::new(&params(1.0, g), BargmannIndex::Quarter, 5).max_abs();
            assert!(d < last, "g={g}");
            last = d;
        }
        assert!(last < 0.05);
    }

    #[test]
    fn matches_overlap_oracle_small_block() {
        let p = params(1.0, 0.25);
        let oracle = OverlapOracle::new(&p, BargmannIndex::Quarter, 2, 200).unwrap();
        for m in 0..=2 {
            for n in 0..=2 {
                let d = d_element(&p, BargmannIndex::Quarter, m, n);
                assert!((d - oracle.d_value(m, n)).abs() < 1e-8, "({m},{n})");
            }
        }
    }

    #[test]
    fn overlap_matrix_rows_are_orthonormal() {
        // a wide block (m ≤ 40) captures nearly all weight of rows m ≤ 3
        let p = params(1.0, 0.3);
        for q in BargmannIndex::ALL {
            let o = OverlapOracle::new(&p, q, 40, 300).unwrap().overlaps;
            for m in 0..=3 {
                for n in 0..=3 {
                    let s: f64 = (0..=40).map(|k| o[(m, k)] * o[(n, k)]).sum();
                    let want = if m == n { 1.0 } else { 0.0 };
                    assert!((s - want).abs() < 1e-9, "q={q} ({m},{n}) {s}");
                }
            }
        }
    }

    #[test]
    fn overlap_oracle_identity_at_zero_coupling() {
        let p = params(1.0, 0.0);
        for q in BargmannIndex::ALL {
            for m in 0..3 {
                let v = overlap_oracle(&p, q, m, m, 40).unwrap();
                assert!((v - 0.5 * if m % 2 == 0 { 1.0 } else { -1.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn product_of_transposed_elements_nonnegative() {
        for g in [0.05, 0.1, 0.2, 0.3, 0.4, 0.45, 0.49, 0.499] {
            for q in BargmannIndex::ALL {
                let p = params(1.0, g);
                for m in 0..8 {
                    for n in 0..8 {
                        assert!(d_element(&p, q, m, n) * d_element(&p, q, n, m) >= 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn large_indices_stay_finite() {
        let p = params(1.0, 0.45);
        for (m, n) in [(0, 90), (90, 0), (60, 61), (120, 120)] {
            let d = d_element(&p, BargmannIndex::ThreeQuarters, m, n);
            assert!(d.is_finite() && d.abs() <= 0.5 + 1e-12, "({m},{n}) {d}");
        }
    }
}
