//! The two-photon G-function and its zeros.
//!
//! For sector (q, Π) and spectral variable `x = E/(2β) + v²/2 − q + 1/4`
//!
//! ```text
//! G_Π^(q)(x) = Σ_n f_n [1 + Π Ω / (4β(n − x))] w_n,
//! w_n = [2(n + q − 1/4)]! / n! · (v/2u)ⁿ,
//! ```
//!
//! with `f_n` from the three-term recurrence seeded by `f_0 = 1`,
//! `f_{−1} = 0`. Zeros of G are the regular spectrum; its poles sit at
//! integer x. The series is accumulated through the products `f_n w_n`,
//! which stay bounded, while `f_n` and `w_n` separately over- and
//! underflow within a few hundred terms.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{decoupled_levels, BogoliubovFrame, ModelParams, Sector};

/// Distance in x below which an evaluation point counts as sitting on a pole.
pub const POLE_TOL: f64 = 1e-12;

/// Energy distance from a pole below which a zero is flagged as a possible
/// exceptional solution.
pub const EXCEPTIONAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GOptions {
    /// Relative size of the last accumulated terms against the largest one.
    pub tol: f64,
    pub n_max: usize,
}

impl Default for GOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            n_max: 500,
        }
    }
}

impl GOptions {
    /// Raises `n_max` so the geometric tail `(1 + β)^{−n}` can fall below
    /// `tol` even close to critical coupling.
    pub fn for_frame(self, frame: &BogoliubovFrame) -> Self {
        let needed = (-self.tol.ln() + 10.0) / (1.0 + frame.beta).ln();
        Self {
            n_max: self.n_max.max((1.5 * needed).ceil() as usize),
            ..self
        }
    }
}

/// Raw recurrence coefficients `f_n` and the factors `e_n / f_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceSeries {
    pub sector: Sector,
    pub x: f64,
    /// `f_0 ..= f_{n_max}`. Unscaled, so at large n these may overflow.
    pub f: Vec<f64>,
    /// `Ω / (4β(n − x))`, the ratio `e_n / f_n`.
    pub e_scale: Vec<f64>,
    pub n_terms: usize,
}

struct RecurrenceCoefficients {
    omega: f64,
    g: f64,
    beta: f64,
    q: f64,
    x: f64,
    offset: f64,
    squeeze_ratio: f64,
}

impl RecurrenceCoefficients {
    fn new(params: &ModelParams, sector: Sector, x: f64) -> Self {
        let frame = params.frame();
        Self {
            omega: params.omega(),
            g: params.g(),
            beta: frame.beta,
            q: sector.q.value(),
            x,
            offset: sector.q.offset() as f64,
            squeeze_ratio: frame.squeeze_ratio,
        }
    }

    /// `(A_n, B_n)` in `f_{n+1} = A_n f_n − B_n f_{n−1}`.
    fn step(&self, n: usize) -> (f64, f64) {
        let nq = n as f64 + self.q;
        let denom = (nq + 0.75) * (nq + 0.25);
        let numer = (1.0 + 4.0 * self.g * self.g) * nq
            - self.beta * self.beta * (self.x + self.q)
            - self.omega * self.omega / (16.0 * (n as f64 - self.x));
        (numer / (4.0 * self.g * denom), 1.0 / (4.0 * denom))
    }

    fn e_scale(&self, n: usize) -> f64 {
        self.omega / (4.0 * self.beta * (n as f64 - self.x))
    }

    /// `w_{n+1} / w_n`.
    fn weight_ratio(&self, n: usize) -> f64 {
        let k = 2.0 * n as f64 + self.offset;
        (k + 2.0) * (k + 1.0) / (n as f64 + 1.0) * self.squeeze_ratio
    }
}

fn check_pole(x: f64, n_max: usize) -> Result<()> {
    let nearest = x.round();
    if nearest >= 0.0 && nearest <= n_max as f64 && (x - nearest).abs() < POLE_TOL {
        return Err(Error::PoleProximity {
            n: nearest as usize,
            x,
            tol: POLE_TOL,
        });
    }
    Ok(())
}

fn check_coupling(params: &ModelParams) -> Result<()> {
    if params.g() == 0.0 {
        return Err(Error::InvalidParams(
            "the G-function series needs g > 0 (at g = 0 use the decoupled levels)".into(),
        ));
    }
    Ok(())
}

/// Coefficients `f_0 ..= f_{n_max}` of the three-term recurrence at `x`.
pub fn recurrence_coeffs(params: &ModelParams, sector: Sector, x: f64, n_max: usize) -> Result<RecurrenceSeries> {
    check_coupling(params)?;
    if n_max < 1 {
        return Err(Error::InvalidParams("n_max must be at least 1".into()));
    }
    check_pole(x, n_max)?;
    let rc = RecurrenceCoefficients::new(params, sector, x);
    let mut f = Vec::with_capacity(n_max + 1);
    let mut e_scale = Vec::with_capacity(n_max + 1);
    let (mut prev, mut cur) = (0.0, 1.0);
    for n in 0..=n_max {
        f.push(cur);
        e_scale.push(rc.e_scale(n));
        let (a, b) = rc.step(n);
        let next = a * cur - b * prev;
        prev = cur;
        cur = next;
    }
    Ok(RecurrenceSeries {
        sector,
        x,
        f,
        e_scale,
        n_terms: n_max + 1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GValue {
    pub value: f64,
    pub n_terms_used: usize,
    pub converged: bool,
    /// `min_n |n − x|` over the poles `n ≥ 0`.
    pub nearest_pole_distance: f64,
    /// Largest single term magnitude; `value / scale` is the normalized G.
    pub scale: f64,
}

impl GValue {
    pub fn normalized(&self) -> f64 {
        if self.scale > 0.0 {
            self.value / self.scale
        } else {
            self.value
        }
    }
}

pub fn nearest_pole_distance(x: f64) -> f64 {
    if x <= 0.0 {
        -x
    } else {
        (x - x.round()).abs()
    }
}

/// G at energy `E`.
pub fn g_eval(params: &ModelParams, sector: Sector, energy: f64, opts: &GOptions) -> Result<GValue> {
    let x = params.frame().energy_to_x(sector.q, energy);
    g_eval_x(params, sector, x, opts)
}

/// G at spectral variable `x`.
pub fn g_eval_x(params: &ModelParams, sector: Sector, x: f64, opts: &GOptions) -> Result<GValue> {
    check_coupling(params)?;
    check_pole(x, opts.n_max)?;
    let rc = RecurrenceCoefficients::new(params, sector, x);
    let parity = sector.parity.sign();

    // h_n = f_n w_n obeys h_{n+1} = r_n (A_n h_n − B_n r_{n−1} h_{n−1})
    let mut h_prev = 0.0;
    let mut h = 1.0;
    let mut r_prev = 0.0;
    let mut sum = 0.0;
    let mut scale: f64 = 0.0;
    let mut small_run = 0;
    let min_terms = (x.max(0.0).ceil() as usize) + 3;

    for n in 0..=opts.n_max {
        let term = h * (1.0 + parity * rc.e_scale(n));
        sum += term;
        scale = scale.max(term.abs());
        if !sum.is_finite() {
            break;
        }
        if term.abs() <= opts.tol * scale {
            small_run += 1;
        } else {
            small_run = 0;
        }
        if small_run >= 2 && n >= min_terms {
            return Ok(GValue {
                value: sum,
                n_terms_used: n + 1,
                converged: true,
                nearest_pole_distance: nearest_pole_distance(x),
                scale,
            });
        }
        let (a, b) = rc.step(n);
        let r = rc.weight_ratio(n);
        let next = r * (a * h - b * r_prev * h_prev);
        h_prev = h;
        h = next;
        r_prev = r;
    }
    Ok(GValue {
        value: sum,
        n_terms_used: opts.n_max + 1,
        converged: false,
        nearest_pole_distance: nearest_pole_distance(x),
        scale,
    })
}

/// Where a level sits relative to the pole ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PoleInterval {
    /// Below the zeroth baseline (first pole).
    BelowFirstPole,
    /// Between pole `n − 1` and pole `n`, `n ≥ 1`.
    Between(usize),
}

impl PoleInterval {
    pub fn index(self) -> usize {
        match self {
            Self::BelowFirstPole => 0,
            Self::Between(n) => n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LevelSource {
    GFunction,
    Approx(usize),
    Oracle,
    Variational,
}

impl std::fmt::Display for LevelSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::GFunction => f.write_str("gfunction"),
            Self::Approx(n) => write!(f, "approx-{n}"),
            Self::Oracle => f.write_str("oracle"),
            Self::Variational => f.write_str("variational"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LevelFlag {
    /// The zero sits within [`EXCEPTIONAL_TOL`] of a pole.
    ExceptionalCandidate,
    /// A bracket endpoint evaluation hit `n_max` before converging.
    NotConverged,
}

impl std::fmt::Display for LevelFlag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::ExceptionalCandidate => "exceptional-candidate",
            Self::NotConverged => "not-converged",
        })
    }
}

/// A G-function zero refined by bisection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zero {
    pub energy: f64,
    pub bracket: (f64, f64),
    pub interval: PoleInterval,
    pub flags: Vec<LevelFlag>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    /// Samples per unit of x (one pole interval); never fewer than 64.
    pub grid_points: usize,
    /// Bisection stops once the energy bracket is narrower than this.
    pub root_tol: f64,
    pub series: GOptions,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            grid_points: 64,
            root_tol: 1e-12,
            series: GOptions::default(),
        }
    }
}

const MIN_GRID_POINTS: usize = 64;
const REFINE_DEPTH: usize = 3;
const REFINE_FACTOR: usize = 8;
/// Offset (in x) of the first and last samples from a pole.
const POLE_OFFSET: f64 = 1e-9;

struct Sample {
    x: f64,
    g: GValue,
}

/// All zeros of G with energies in `[e_lo, e_hi]`, the interval being split
/// at poles first.
pub fn find_zeros_in_interval(
    params: &ModelParams,
    sector: Sector,
    e_lo: f64,
    e_hi: f64,
    opts: &ScanOptions,
) -> Result<Vec<Zero>> {
    check_coupling(params)?;
    if !(e_lo < e_hi) {
        return Ok(Vec::new());
    }
    let frame = params.frame();
    let x_lo = frame.energy_to_x(sector.q, e_lo);
    let x_hi = frame.energy_to_x(sector.q, e_hi);
    let series = opts.series;

    let mut zeros = Vec::new();
    // pole-free pieces of [x_lo, x_hi]
    let mut pieces = Vec::new();
    // an endpoint within POLE_OFFSET of a pole is pulled off it
    let first_pole = (x_lo - POLE_OFFSET).max(0.0).ceil() as i64;
    let last_pole = (x_hi + POLE_OFFSET).floor() as i64;
    let mut left = x_lo;
    let mut interval = interval_of(x_lo);
    for pole in first_pole.max(0)..=last_pole {
        let p = pole as f64;
        if p - POLE_OFFSET > left {
            pieces.push((left, p - POLE_OFFSET, interval));
        }
        left = p + POLE_OFFSET;
        interval = PoleInterval::Between(pole as usize + 1);
    }
    if x_hi > left {
        pieces.push((left, x_hi, interval));
    }

    let x_tol = opts.root_tol / (2.0 * frame.beta);
    for (a, b, interval) in pieces {
        if !(b > a) {
            continue;
        }
        let per_unit = opts.grid_points.max(MIN_GRID_POINTS);
        let count = ((b - a) * per_unit as f64).ceil().max(per_unit as f64) as usize;
        let samples = sample_grid(params, sector, a, b, count, &series)?;
        for (lo, hi) in sign_change_brackets(params, sector, &samples, &series, REFINE_DEPTH)? {
            zeros.push(bisect(params, sector, &frame, lo, hi, x_tol, interval, &series)?);
        }
    }
    Ok(zeros)
}

fn interval_of(x: f64) -> PoleInterval {
    if x < 0.0 {
        PoleInterval::BelowFirstPole
    } else {
        PoleInterval::Between(x.floor() as usize + 1)
    }
}

fn sample_grid(
    params: &ModelParams,
    sector: Sector,
    a: f64,
    b: f64,
    count: usize,
    opts: &GOptions,
) -> Result<Vec<Sample>> {
    (0..=count)
        .map(|i| {
            let x = if i == count { b } else { a + (b - a) * i as f64 / count as f64 };
            g_eval_x(params, sector, x, opts).map(|g| Sample { x, g })
        })
        .collect()
}

/// Sign-change brackets on a sampled grid. A local minimum of |G| that does
/// not change sign is resampled more finely in case it hides a close pair.
fn sign_change_brackets(
    params: &ModelParams,
    sector: Sector,
    samples: &[Sample],
    opts: &GOptions,
    depth: usize,
) -> Result<Vec<(Sample, Sample)>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i + 1 < samples.len() {
        let (s0, s1) = (&samples[i], &samples[i + 1]);
        if s0.g.value == 0.0 {
            out.push((copy(s0), copy(s0)));
        } else if s0.g.value.signum() != s1.g.value.signum() && s1.g.value != 0.0 {
            out.push((copy(s0), copy(s1)));
        } else if depth > 0 && i + 2 < samples.len() {
            let s2 = &samples[i + 2];
            let (v0, v1, v2) = (s0.g.value.abs(), s1.g.value.abs(), s2.g.value.abs());
            let same_sign = s0.g.value.signum() == s1.g.value.signum() && s1.g.value.signum() == s2.g.value.signum();
            if same_sign && v1 < v0 && v1 < v2 {
                let fine = sample_grid(params, sector, s0.x, s2.x, 2 * REFINE_FACTOR, opts)?;
                let found = sign_change_brackets(params, sector, &fine, opts, depth - 1)?;
                if !found.is_empty() {
                    out.extend(found);
                    i += 2;
                    continue;
                }
            }
        }
        i += 1;
    }
    Ok(out)
}

fn copy(s: &Sample) -> Sample {
    Sample { x: s.x, g: s.g }
}

#[allow(clippy::too_many_arguments)]
fn bisect(
    params: &ModelParams,
    sector: Sector,
    frame: &BogoliubovFrame,
    lo: Sample,
    hi: Sample,
    x_tol: f64,
    interval: PoleInterval,
    opts: &GOptions,
) -> Result<Zero> {
    let mut flags = Vec::new();
    let (mut a, mut b) = (lo, hi);
    let mut unconverged = !a.g.converged || !b.g.converged;
    for _ in 0..200 {
        if b.x - a.x <= x_tol || a.g.value == 0.0 {
            break;
        }
        let mid = 0.5 * (a.x + b.x);
        if mid <= a.x || mid >= b.x {
            break;
        }
        let gm = g_eval_x(params, sector, mid, opts)?;
        unconverged |= !gm.converged;
        let sm = Sample { x: mid, g: gm };
        if gm.value == 0.0 {
            a = copy(&sm);
            b = sm;
            break;
        }
        if gm.value.signum() == a.g.value.signum() {
            a = sm;
        } else {
            b = sm;
        }
    }
    debug_assert!(a.g.value == 0.0 || a.g.value.signum() != b.g.value.signum());
    if unconverged {
        flags.push(LevelFlag::NotConverged);
    }
    let x = 0.5 * (a.x + b.x);
    let e_a = frame.x_to_energy(sector.q, a.x);
    let e_b = frame.x_to_energy(sector.q, b.x);
    if nearest_pole_distance(x) * 2.0 * frame.beta < EXCEPTIONAL_TOL
        || nearest_pole_distance(a.x).min(nearest_pole_distance(b.x)) <= POLE_OFFSET * 1.0001
    {
        flags.push(LevelFlag::ExceptionalCandidate);
    }
    Ok(Zero {
        energy: frame.x_to_energy(sector.q, x),
        bracket: (e_a, e_b),
        interval,
        flags,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub energy: f64,
    pub bracket: (f64, f64),
    pub source: LevelSource,
    pub interval: PoleInterval,
    pub flags: Vec<LevelFlag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub omega: f64,
    pub g: f64,
    pub sector: Sector,
    /// Strictly increasing in energy.
    pub levels: Vec<Level>,
    pub flags: Vec<String>,
}

impl SpectrumTable {
    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.energy).collect()
    }

    pub fn in_interval(&self, interval: PoleInterval) -> impl Iterator<Item = &Level> {
        self.levels.iter().filter(move |l| l.interval == interval)
    }

    pub fn lowest(&self) -> Option<&Level> {
        self.levels.first()
    }
}

/// Default lower edge of the scan window: `min(decoupled levels) − Ω`.
pub fn default_lower_bound(params: &ModelParams, sector: Sector) -> f64 {
    let lowest = decoupled_levels(params, sector, 1).into_iter().fold(f64::INFINITY, f64::min);
    lowest - params.omega()
}

/// Regular spectrum of one sector in the energy window `[e_lo, e_hi]`.
pub fn spectrum(params: &ModelParams, sector: Sector, e_lo: f64, e_hi: f64, opts: &ScanOptions) -> Result<SpectrumTable> {
    let zeros = find_zeros_in_interval(params, sector, e_lo, e_hi, opts)?;
    let mut flags = Vec::new();
    let mut levels: Vec<Level> = zeros
        .into_iter()
        .map(|z| Level {
            energy: z.energy,
            bracket: z.bracket,
            source: LevelSource::GFunction,
            interval: z.interval,
            flags: z.flags,
        })
        .collect();
    levels.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    levels.dedup_by(|b, a| b.energy == a.energy);
    if levels.iter().any(|l| l.flags.contains(&LevelFlag::NotConverged)) {
        flags.push("series not converged at some bracket points".to_string());
    }
    if levels.iter().any(|l| l.flags.contains(&LevelFlag::ExceptionalCandidate)) {
        flags.push("pole-zero proximity".to_string());
    }
    Ok(SpectrumTable {
        omega: params.omega(),
        g: params.g(),
        sector,
        levels,
        flags,
    })
}

/// Energy window of a sweep. `lower: None` uses [`default_lower_bound`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyWindow {
    pub lower: Option<f64>,
    pub upper: f64,
}

/// One spectrum per coupling; invalid couplings and solver failures are
/// recorded as table flags, never aborting the sweep.
pub fn spectrum_sweep(
    omega: f64,
    couplings: &[f64],
    sector: Sector,
    window: EnergyWindow,
    opts: &ScanOptions,
) -> Vec<SpectrumTable> {
    couplings
        .par_iter()
        .map(|&g| {
            let failed = |msg: String| SpectrumTable {
                omega,
                g,
                sector,
                levels: Vec::new(),
                flags: vec![msg],
            };
            let params = match ModelParams::new(omega, g) {
                Ok(p) => p,
                Err(e) => return failed(e.to_string()),
            };
            let frame = params.frame();
            let scan = ScanOptions {
                series: opts.series.for_frame(&frame),
                ..*opts
            };
            let lower = window.lower.unwrap_or_else(|| default_lower_bound(&params, sector));
            spectrum(&params, sector, lower, window.upper, &scan).unwrap_or_else(|e| failed(e.to_string()))
        })
        .collect()
}
