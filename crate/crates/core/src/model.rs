//! Model parameters, symmetry sectors and the Bogoliubov frame.
//!
//! The squeezing transform `b = u a + v a†` with `β = √(1 − 4g²)`,
//! `u = √((1+β)/(2β))`, `v = √((1−β)/(2β))` diagonalizes the upper spin
//! block. Its poles sit at `E = 2β(n + q) − 1/2`, so every pole ladder
//! shrinks onto `−1/2` as `g → 1/2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The energy every excited level collapses onto at critical coupling.
pub const COLLAPSE_ENERGY: f64 = -0.5;

/// Critical coupling `g_c`; excluded from [`ModelParams`].
pub const CRITICAL_COUPLING: f64 = 0.5;

/// Qubit splitting Ω and coupling g; the cavity frequency is fixed to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    omega: f64,
    g: f64,
}

impl ModelParams {
    pub fn new(omega: f64, g: f64) -> Result<Self> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::InvalidParams(format!("qubit splitting must be > 0, got {omega}")));
        }
        if !(0.0..CRITICAL_COUPLING).contains(&g) {
            return Err(Error::InvalidParams(format!("coupling must lie in [0, 1/2), got {g}")));
        }
        Ok(Self { omega, g })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn with_g(&self, g: f64) -> Result<Self> {
        Self::new(self.omega, g)
    }

    pub fn frame(&self) -> BogoliubovFrame {
        BogoliubovFrame::new(self)
    }
}

/// Bargmann index q of the su(1,1) representation: photon-number parity.
///
/// Stored as a tag so combinations like `2(n + q − 1/4)` stay exact integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BargmannIndex {
    /// q = 1/4, even photon numbers.
    #[serde(rename = "1/4")]
    Quarter,
    /// q = 3/4, odd photon numbers.
    #[serde(rename = "3/4")]
    ThreeQuarters,
}

impl BargmannIndex {
    pub const ALL: [BargmannIndex; 2] = [BargmannIndex::Quarter, BargmannIndex::ThreeQuarters];

    pub fn value(self) -> f64 {
        match self {
            Self::Quarter => 0.25,
            Self::ThreeQuarters => 0.75,
        }
    }

    /// `2(q − 1/4)`: the photon number of the lowest state, 0 or 1.
    pub fn offset(self) -> u32 {
        match self {
            Self::Quarter => 0,
            Self::ThreeQuarters => 1,
        }
    }

    /// Photon number `2n + 2(q − 1/4)` of the n-th state in this sector.
    pub fn photon_number(self, n: usize) -> usize {
        2 * n + self.offset() as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Quarter => "1/4",
            Self::ThreeQuarters => "3/4",
        }
    }
}

impl std::fmt::Display for BargmannIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Parity Π. With the convention used throughout, the decoupled ground
/// state `|↑x⟩|0⟩` (σx = +1) carries Π = −1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Parity {
    #[serde(rename = "+1")]
    Plus,
    #[serde(rename = "-1")]
    Minus,
}

impl Parity {
    pub const ALL: [Parity; 2] = [Parity::Plus, Parity::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Self::Plus => 1.0,
            Self::Minus => -1.0,
        }
    }

    pub fn as_i32(self) -> i32 {
        match self {
            Self::Plus => 1,
            Self::Minus => -1,
        }
    }

    pub fn from_sign(sign: f64) -> Self {
        if sign >= 0.0 {
            Self::Plus
        } else {
            Self::Minus
        }
    }

    /// Parity `(−1)^m`, the weak-coupling label of level m.
    pub fn of_index(m: usize) -> Self {
        if m % 2 == 0 {
            Self::Plus
        } else {
            Self::Minus
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Plus => "+1",
            Self::Minus => "-1",
        }
    }
}

impl std::fmt::Display for Parity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Sector {
    pub q: BargmannIndex,
    pub parity: Parity,
}

impl Sector {
    pub const ALL: [Sector; 4] = [
        Sector::new(BargmannIndex::Quarter, Parity::Plus),
        Sector::new(BargmannIndex::Quarter, Parity::Minus),
        Sector::new(BargmannIndex::ThreeQuarters, Parity::Plus),
        Sector::new(BargmannIndex::ThreeQuarters, Parity::Minus),
    ];

    /// The ground-state sector, q = 1/4 and Π = −1.
    pub const GROUND: Sector = Sector::new(BargmannIndex::Quarter, Parity::Minus);

    pub const fn new(q: BargmannIndex, parity: Parity) -> Self {
        Self { q, parity }
    }
}

impl std::fmt::Display for Sector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "q={} Π={}", self.q, self.parity)
    }
}

/// Derived constants of the squeezing transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BogoliubovFrame {
    pub g: f64,
    pub beta: f64,
    pub u: f64,
    pub v: f64,
    /// `v / (2u)`, the geometric weight of the G-function series.
    pub squeeze_ratio: f64,
}

impl BogoliubovFrame {
    pub fn new(params: &ModelParams) -> Self {
        let g = params.g;
        let beta = (1.0 - 4.0 * g * g).sqrt();
        // 1 − β written without cancellation for small g
        let one_minus_beta = 4.0 * g * g / (1.0 + beta);
        let u = ((1.0 + beta) / (2.0 * beta)).sqrt();
        let v = (one_minus_beta / (2.0 * beta)).sqrt();
        Self {
            g,
            beta,
            u,
            v,
            squeeze_ratio: v / (2.0 * u),
        }
    }

    /// `E = 2β(n + q) − 1/2`, the n-th pole of the G-function.
    pub fn pole_energy(&self, q: BargmannIndex, n: usize) -> f64 {
        2.0 * self.beta * (n as f64 + q.value()) + COLLAPSE_ENERGY
    }

    /// The zeroth baseline `2√(1−4g²)·q − 1/2`.
    pub fn first_baseline(&self, q: BargmannIndex) -> f64 {
        self.pole_energy(q, 0)
    }

    pub fn pole_spacing(&self) -> f64 {
        2.0 * self.beta
    }

    pub fn x_to_energy(&self, q: BargmannIndex, x: f64) -> f64 {
        2.0 * self.beta * (x + q.value()) + COLLAPSE_ENERGY
    }

    /// `x = E/(2β) + v²/2 − q + 1/4`.
    pub fn energy_to_x(&self, q: BargmannIndex, energy: f64) -> f64 {
        energy / (2.0 * self.beta) + 0.5 * self.v * self.v - q.value() + 0.25
    }
}

/// Decoupled (g = 0) levels `Π(Ω/2)(−1)ⁿ + 2(n + q − 1/4)` for n = 0..=n_max.
pub fn decoupled_levels(params: &ModelParams, sector: Sector, n_max: usize) -> Vec<f64> {
    (0..=n_max).map(|n| decoupled_level(params.omega, sector, n)).collect()
}

pub(crate) fn decoupled_level(omega: f64, sector: Sector, n: usize) -> f64 {
    let alternating = if n % 2 == 0 { 1.0 } else { -1.0 };
    sector.parity.sign() * 0.5 * omega * alternating + sector.q.photon_number(n) as f64
}

/// Outcome of the below-baseline criterion `n < −Π(Ω/4)(−1)ⁿ`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineCount {
    /// Indices satisfying the strict inequality.
    pub below: Vec<usize>,
    /// Indices where equality holds (a decoupled level exactly on the
    /// zeroth baseline); not counted in `below`.
    pub on_baseline: Vec<usize>,
}

impl BaselineCount {
    pub fn count(&self) -> usize {
        self.below.len()
    }
}

/// Decoupled levels that start strictly below the zeroth baseline.
pub fn below_baseline_count(params: &ModelParams, sector: Sector) -> BaselineCount {
    let quarter = 0.25 * params.omega;
    let mut below = Vec::new();
    let mut on_baseline = Vec::new();
    // the bound is at most Ω/4, so n never exceeds it
    let n_limit = quarter.floor() as usize + 1;
    for n in 0..=n_limit {
        let alternating = if n % 2 == 0 { 1.0 } else { -1.0 };
        let bound = -sector.parity.sign() * quarter * alternating;
        let n_f = n as f64;
        if n_f < bound {
            below.push(n);
        } else if n_f == bound {
            on_baseline.push(n);
        }
    }
    BaselineCount { below, on_baseline }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(omega: f64, g: f64) -> ModelParams {
        ModelParams::new(omega, g).unwrap()
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(ModelParams::new(1.0, 0.5).is_err());
        assert!(ModelParams::new(1.0, 0.6).is_err());
        assert!(ModelParams::new(1.0, -0.1).is_err());
        assert!(ModelParams::new(0.0, 0.1).is_err());
        assert!(ModelParams::new(f64::NAN, 0.1).is_err());
        assert!(ModelParams::new(1.0, 0.0).is_ok());
    }

    #[test]
    fn frame_at_zero_coupling_is_identity() {
        let f = params(1.0, 0.0).frame();
        assert_eq!((f.beta, f.u, f.v, f.squeeze_ratio), (1.0, 1.0, 0.0, 0.0));
    }

    #[test]
    fn frame_at_quarter_coupling() {
        let f = params(1.0, 0.25).frame();
        assert!((f.beta - 0.75f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn frame_near_critical() {
        let f = params(1.0, 0.5 - 1e-6).frame();
        assert!(f.beta < 2e-3);
        assert!(f.u > 10.0 && f.v > 10.0);
        assert!(f.squeeze_ratio < 0.5 && f.squeeze_ratio > 0.49);
    }

    #[test]
    fn pole_and_baseline_examples() {
        let f0 = params(1.0, 0.0).frame();
        assert_eq!(f0.pole_energy(BargmannIndex::Quarter, 0), 0.0);
        assert_eq!(f0.first_baseline(BargmannIndex::Quarter), 0.0);
        assert_eq!(f0.first_baseline(BargmannIndex::ThreeQuarters), 1.0);
        let fc = params(1.0, 0.5 - 1e-12).frame();
        for q in BargmannIndex::ALL {
            assert!((fc.first_baseline(q) + 0.5).abs() < 1e-5);
            assert!((fc.pole_energy(q, 7) + 0.5).abs() < 1e-4);
        }
    }

    #[test]
    fn decoupled_examples() {
        let p1 = params(1.0, 0.0);
        let q14 = BargmannIndex::Quarter;
        assert_eq!(decoupled_levels(&p1, Sector::new(q14, Parity::Plus), 0), vec![0.5]);
        assert_eq!(decoupled_levels(&p1, Sector::new(q14, Parity::Minus), 0), vec![-0.5]);
        let p3 = params(3.0, 0.0);
        assert_eq!(decoupled_levels(&p3, Sector::new(q14, Parity::Minus), 0), vec![-1.5]);
        let lv = decoupled_levels(&p1, Sector::new(BargmannIndex::ThreeQuarters, Parity::Minus), 3);
        assert_eq!(lv, vec![0.5, 3.5, 4.5, 7.5]);
    }

    #[test]
    fn baseline_count_examples() {
        let p1 = params(1.0, 0.1);
        assert_eq!(below_baseline_count(&p1, Sector::GROUND).below, vec![0]);
        for q in BargmannIndex::ALL {
            assert_eq!(below_baseline_count(&p1, Sector::new(q, Parity::Plus)).count(), 0);
        }
        let p3 = params(3.0, 0.1);
        assert!(below_baseline_count(&p3, Sector::GROUND).count() >= 1);
        // Ω = 4: n = 1 sits exactly on the baseline for Π = +1
        let p4 = params(4.0, 0.1);
        let c = below_baseline_count(&p4, Sector::new(BargmannIndex::Quarter, Parity::Plus));
        assert_eq!(c.below, Vec::<usize>::new());
        assert_eq!(c.on_baseline, vec![1]);
    }

    #[test]
    fn baseline_count_matches_decoupled_levels() {
        for omega in [0.5, 1.0, 2.5, 3.0, 5.0, 9.7, 13.0] {
            let p = params(omega, 0.0);
            let f = p.frame();
            for s in Sector::ALL {
                let base = f.first_baseline(s.q);
                let below = decoupled_levels(&p, s, 40).iter().filter(|&&e| e < base).count();
                assert_eq!(below_baseline_count(&p, s).count(), below, "Ω={omega} {s}");
            }
        }
    }

    #[test]
    fn x_map_fixed_points() {
        let f = params(1.0, 0.0).frame();
        assert_eq!(f.energy_to_x(BargmannIndex::Quarter, 0.0), 0.0);
        let f = params(1.3, 0.37).frame();
        for q in BargmannIndex::ALL {
            for n in 0..5 {
                assert!((f.x_to_energy(q, n as f64) - f.pole_energy(q, n)).abs() < 1e-14);
            }
        }
    }

    proptest! {
        #[test]
        fn frame_identities(g in 0.0f64..0.4999) {
            let f = params(1.0, g).frame();
            prop_assert!((f.beta * f.beta + 4.0 * g * g - 1.0).abs() < 1e-13);
            prop_assert!((f.u * f.u - f.v * f.v - 1.0).abs() < 1e-13 * f.u * f.u);
            prop_assert!(f.u >= 1.0 && f.v >= 0.0);
            prop_assert!((0.0..0.5).contains(&f.squeeze_ratio));
        }

        #[test]
        fn pole_spacing_is_two_beta(g in 0.0f64..0.4999, n in 0usize..200) {
            let f = params(1.0, g).frame();
            for q in BargmannIndex::ALL {
                let d = f.pole_energy(q, n + 1) - f.pole_energy(q, n);
                prop_assert!((d - 2.0 * f.beta).abs() < 1e-13);
            }
        }

        #[test]
        fn x_map_round_trip(g in 0.0f64..0.49, e in -5.0f64..50.0) {
            let f = params(2.0, g).frame();
            for q in BargmannIndex::ALL {
                let back = f.x_to_energy(q, f.energy_to_x(q, e));
                prop_assert!((back - e).abs() < 1e-13 * e.abs().max(1.0));
            }
        }
    }
}
