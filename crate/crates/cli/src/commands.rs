use rayon::prelude::*;

use twophoton::approx::{diagonalize_truncated, ground_state_order};
use twophoton::gfunc::{default_lower_bound, g_eval, spectrum, GOptions, Level, ScanOptions};
use twophoton::model::below_baseline_count;
use twophoton::oracle::{converged_sector_spectrum, ground_state, sector_spectrum, SectorOracle};
use twophoton::variational::variational_ground_state;
use twophoton::{Error, ModelParams, Parity, Sector};

use crate::config::{Command, Couplings, RunConfig, DEFAULT_COUPLING};
use crate::output::{Cell, Table};

/// A finished table plus the numerical failures met while filling it.
#[derive(Debug)]
pub struct Outcome {
    pub table: Table,
    pub failures: Vec<String>,
}

pub fn execute(config: &RunConfig) -> Outcome {
    match config.command {
        Command::Gcurve => gcurve(config),
        Command::Spectrum => spectrum_cmd(config),
        Command::Baselines => baselines(config),
        Command::Approx => approx(config),
        Command::Variational => variational(config),
        Command::Oracle => oracle(config),
        Command::Compare => compare(config),
        Command::GapReport => gap_report(config),
    }
}

const GAP_LADDER: [f64; 5] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5];
const ORACLE_TOL: f64 = 1e-10;
/// Doublings allowed on top of `--fock-cutoff` when converging the oracle.
const MAX_DOUBLINGS: u32 = 12;

fn params(config: &RunConfig, g: f64) -> ModelParams {
    ModelParams::new(config.omega, g).expect("validated coupling")
}

fn series(config: &RunConfig, p: &ModelParams) -> GOptions {
    GOptions {
        tol: config.tol,
        n_max: config.n_max,
    }
    .for_frame(&p.frame())
}

fn scan(config: &RunConfig, p: &ModelParams) -> ScanOptions {
    ScanOptions {
        series: series(config, p),
        ..ScanOptions::default()
    }
}

fn couplings(config: &RunConfig) -> Vec<f64> {
    config.coupling_grid_or(&[DEFAULT_COUPLING])
}

/// Runs `job` for every coupling in parallel and stitches the rows back in
/// coupling order.
fn per_coupling<F>(config: &RunConfig, grid: &[f64], columns: &[&str], job: F) -> Outcome
where
    F: Fn(&ModelParams) -> (Vec<Vec<Cell>>, Vec<String>) + Sync,
{
    let results: Vec<_> = grid.par_iter().map(|&g| job(&params(config, g))).collect();
    let mut table = Table::new(columns.iter().copied());
    let mut failures = Vec::new();
    for (rows, errs) in results {
        for row in rows {
            table.push(row);
        }
        failures.extend(errs);
    }
    Outcome { table, failures }
}

fn gcurve(config: &RunConfig) -> Outcome {
    let columns = ["g", "q", "E", "G_plus", "G_minus", "nearest_pole", "converged"];
    let e_lo = config.e_min.unwrap_or(-2.0);
    let e_hi = config.e_max;
    let steps = if e_lo < e_hi { config.e_steps } else { 0 };
    per_coupling(config, &couplings(config), &columns, |p| {
        let opts = series(config, p);
        let frame = p.frame();
        let mut rows = Vec::new();
        let mut failures = Vec::new();
        for &q in &config.q {
            for i in 0..steps {
                let e = if steps == 1 { e_lo } else { e_lo + (e_hi - e_lo) * i as f64 / (steps - 1) as f64 };
                let x = frame.energy_to_x(q, e);
                let pole = frame.x_to_energy(q, x.round().max(0.0));
                let mut converged = true;
                let mut value = |parity| match g_eval(p, Sector::new(q, parity), e, &opts) {
                    Ok(v) => {
                        converged &= v.converged;
                        v.normalized()
                    }
                    Err(Error::PoleProximity { .. }) => {
                        converged = false;
                        f64::NAN
                    }
                    Err(err) => {
                        converged = false;
                        failures.push(format!("g={} q={q} E={e}: {err}", p.g()));
                        f64::NAN
                    }
                };
                let plus = value(Parity::Plus);
                let minus = value(Parity::Minus);
                rows.push(vec![
                    p.g().into(),
                    q.label().into(),
                    e.into(),
                    plus.into(),
                    minus.into(),
                    pole.into(),
                    converged.into(),
                ]);
            }
        }
        (rows, failures)
    })
}

fn level_flags(level: &Level) -> String {
    level.flags.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
}

fn spectrum_cmd(config: &RunConfig) -> Outcome {
    let columns = [
        "g",
        "q",
        "parity",
        "level_index",
        "energy",
        "source",
        "pole_interval",
        "first_baseline",
        "flags",
    ];
    per_coupling(config, &couplings(config), &columns, |p| {
        let frame = p.frame();
        let mut rows = Vec::new();
        let mut failures = Vec::new();
        for sector in config.sectors() {
            let lower = config.e_min.unwrap_or_else(|| default_lower_bound(p, sector));
            match spectrum(p, sector, lower, config.e_max, &scan(config, p)) {
                Ok(table) => {
                    for (i, level) in table.levels.iter().enumerate() {
                        rows.push(vec![
                            p.g().into(),
                            sector.q.label().into(),
                            sector.parity.label().into(),
                            i.into(),
                            level.energy.into(),
                            level.source.to_string().into(),
                            level.interval.index().into(),
                            frame.first_baseline(sector.q).into(),
                            level_flags(level).into(),
                        ]);
                    }
                }
                Err(err) => failures.push(format!("g={} {sector}: {err}", p.g())),
            }
        }
        (rows, failures)
    })
}

fn baselines(config: &RunConfig) -> Outcome {
    let columns = [
        "g",
        "q",
        "parity",
        "first_baseline",
        "pole_spacing",
        "below_count",
        "below_indices",
        "on_baseline_indices",
    ];
    let join = |v: &[usize]| v.iter().map(ToString::to_string).collect::<Vec<_>>().join(";");
    per_coupling(config, &couplings(config), &columns, |p| {
        let frame = p.frame();
        let rows = config
            .sectors()
            .into_iter()
            .map(|sector| {
                let count = below_baseline_count(p, sector);
                vec![
                    p.g().into(),
                    sector.q.label().into(),
                    sector.parity.label().into(),
                    frame.first_baseline(sector.q).into(),
                    frame.pole_spacing().into(),
                    count.count().into(),
                    join(&count.below).into(),
                    join(&count.on_baseline).into(),
                ]
            })
            .collect();
        (rows, Vec::new())
    })
}

fn approx(config: &RunConfig) -> Outcome {
    let columns = ["g", "q", "parity", "order", "level_index", "energy", "source"];
    per_coupling(config, &couplings(config), &columns, |p| {
        let mut rows = Vec::new();
        let mut failures = Vec::new();
        for sector in config.sectors() {
            for &order in &config.orders {
                match diagonalize_truncated(p, sector, 0, order) {
                    Ok(values) => {
                        for (i, e) in values.into_iter().enumerate() {
                            rows.push(vec![
                                p.g().into(),
                                sector.q.label().into(),
                                sector.parity.label().into(),
                                order.into(),
                                i.into(),
                                e.into(),
                                format!("approx-{order}").into(),
                            ]);
                        }
                    }
                    Err(err) => failures.push(format!("g={} {sector} N={order}: {err}", p.g())),
                }
            }
        }
        (rows, failures)
    })
}

fn variational(config: &RunConfig) -> Outcome {
    let columns = ["g", "r_opt", "energy", "derivative", "iterations", "converged"];
    per_coupling(config, &couplings(config), &columns, |p| match variational_ground_state(p) {
        Ok(res) => {
            let mut failures = Vec::new();
            if !res.converged {
                failures.push(format!("g={}: variational minimum not converged", p.g()));
            }
            let row = vec![
                p.g().into(),
                res.r_opt.into(),
                res.energy.into(),
                res.derivative(p).into(),
                res.iterations.into(),
                res.converged.into(),
            ];
            (vec![row], failures)
        }
        Err(err) => (Vec::new(), vec![format!("g={}: {err}", p.g())]),
    })
}

/// Smallest level count whose top eigenvalue reaches `e_max`.
fn levels_needed(p: &ModelParams, sector: Sector, cutoff: usize, e_max: f64) -> twophoton::Result<usize> {
    let mut k = 16;
    loop {
        let values = sector_spectrum(p, sector, cutoff, k)?;
        if values.len() < k || values.last().is_some_and(|&e| e > e_max) {
            return Ok(values.len());
        }
        k *= 2;
    }
}

fn oracle(config: &RunConfig) -> Outcome {
    let columns = ["g", "q", "parity", "level_index", "energy", "doubling_delta", "fock_cutoff", "source"];
    per_coupling(config, &couplings(config), &columns, |p| {
        let mut rows = Vec::new();
        let mut failures = Vec::new();
        for sector in config.sectors() {
            let result = levels_needed(p, sector, config.fock_cutoff, config.e_max)
                .and_then(|k| converged_sector_spectrum(p, sector, config.fock_cutoff, k));
            match result {
                Ok(levels) => {
                    for (i, level) in levels.levels.iter().enumerate() {
                        let in_window = config.e_min.map_or(true, |lo| level.energy >= lo) && level.energy <= config.e_max;
                        if !in_window {
                            continue;
                        }
                        rows.push(vec![
                            p.g().into(),
                            sector.q.label().into(),
                            sector.parity.label().into(),
                            i.into(),
                            level.energy.into(),
                            level.doubling_delta.into(),
                            (2 * config.fock_cutoff).into(),
                            "oracle".into(),
                        ]);
                    }
                }
                Err(err) => failures.push(format!("g={} {sector}: {err}", p.g())),
            }
        }
        (rows, failures)
    })
}

fn compare(config: &RunConfig) -> Outcome {
    let mut columns: Vec<String> = ["g", "gfunction", "oracle", "oracle_fock_cutoff"].map(String::from).to_vec();
    columns.extend(config.orders.iter().map(|n| format!("approx-{n}")));
    columns.extend(["variational", "variational_r"].map(String::from));
    let column_refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    per_coupling(config, &couplings(config), &column_refs, |p| {
        let mut failures = Vec::new();
        let mut note = |what: &str, err: Error| failures.push(format!("g={} {what}: {err}", p.g()));
        let sector = Sector::GROUND;
        let gfunc = if p.g() == 0.0 {
            // the G-function is undefined in the decoupled limit
            None
        } else {
            let top = p.frame().pole_energy(sector.q, 1);
            match spectrum(p, sector, default_lower_bound(p, sector), top, &scan(config, p)) {
                Ok(t) => t.lowest().map(|l| l.energy),
                Err(e) => {
                    note("gfunction", e);
                    None
                }
            }
        };
        let max_cutoff = config.fock_cutoff << MAX_DOUBLINGS;
        let (exact, cutoff) = match ground_state(p, config.fock_cutoff, ORACLE_TOL, max_cutoff) {
            Ok(gs) => (Some(gs.energy), gs.fock_cutoff),
            Err(e) => {
                note("oracle", e);
                (None, 0)
            }
        };
        let mut row: Vec<Cell> = vec![p.g().into(), gfunc.into(), exact.into(), cutoff.into()];
        for &order in &config.orders {
            match ground_state_order(p, order) {
                Ok(e) => row.push(e.into()),
                Err(e) => {
                    note("approx", e);
                    row.push(f64::NAN.into());
                }
            }
        }
        match variational_ground_state(p) {
            Ok(v) => {
                row.push(v.energy.into());
                row.push(v.r_opt.into());
            }
            Err(e) => {
                note("variational", e);
                row.push(f64::NAN.into());
                row.push(f64::NAN.into());
            }
        }
        (vec![row], failures)
    })
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

/// Levels per sector taken into the continuum-edge estimate.
const EDGE_LEVELS: usize = 12;
/// Collapsed levels are those under this pole of their own sector.
const EDGE_POLE: usize = 8;

/// Lowest [`EDGE_LEVELS`] of a sector, doubling the cutoff until all of
/// them are stable to [`ORACLE_TOL`] or `max_cutoff` is reached.
fn converged_levels(p: &ModelParams, sector: Sector, start: usize, max_cutoff: usize) -> twophoton::Result<SectorOracle> {
    let mut cutoff = start;
    loop {
        let levels = converged_sector_spectrum(p, sector, cutoff, EDGE_LEVELS)?;
        let stable = levels.levels.iter().all(|l| l.doubling_delta < ORACLE_TOL);
        if stable || 2 * cutoff >= max_cutoff {
            return Ok(levels);
        }
        cutoff *= 2;
    }
}

fn gap_report(config: &RunConfig) -> Outcome {
    let columns = [
        "epsilon",
        "g",
        "beta",
        "ground_energy",
        "fock_cutoff",
        "doubling_delta",
        "continuum_edge",
        "gap",
        "collapsed_levels",
        "below_continuum",
    ];
    let grid: Vec<f64> = match config.couplings {
        Couplings::Default => GAP_LADDER.iter().map(|eps| 0.5 - eps).collect(),
        _ => config.coupling_grid_or(&[]),
    };
    per_coupling(config, &grid, &columns, |p| {
        let frame = p.frame();
        let max_cutoff = config.fock_cutoff << MAX_DOUBLINGS;
        let gs = match ground_state(p, config.fock_cutoff, ORACLE_TOL, max_cutoff) {
            Ok(gs) => gs,
            Err(e) => return (Vec::new(), vec![format!("g={}: {e}", p.g())]),
        };
        let mut failures = Vec::new();
        if gs.doubling_delta >= ORACLE_TOL {
            failures.push(format!("g={}: ground state not converged (delta {:e})", p.g(), gs.doubling_delta));
        }
        let mut collapsed = Vec::new();
        let mut below = Vec::new();
        let mut worst_delta = gs.doubling_delta;
        let mut cutoff = gs.fock_cutoff;
        for sector in config.sectors() {
            let levels = match converged_levels(p, sector, gs.fock_cutoff, max_cutoff) {
                Ok(l) => l,
                Err(e) => {
                    failures.push(format!("g={} {sector}: {e}", p.g()));
                    continue;
                }
            };
            cutoff = cutoff.max(2 * levels.fock_cutoff);
            let baseline = frame.first_baseline(sector.q);
            let top = frame.pole_energy(sector.q, EDGE_POLE);
            for level in &levels.levels {
                worst_delta = worst_delta.max(level.doubling_delta);
                if level.energy < baseline {
                    below.push(format!("{sector}:{:.16e}", level.energy));
                } else if level.energy < top {
                    collapsed.push(level.energy);
                }
            }
        }
        if worst_delta >= ORACLE_TOL {
            failures.push(format!("g={}: oracle levels not converged (delta {worst_delta:e})", p.g()));
        }
        let count = collapsed.len();
        let edge = median(&mut collapsed);
        let row = vec![
            (0.5 - p.g()).into(),
            p.g().into(),
            frame.beta.into(),
            gs.energy.into(),
            cutoff.into(),
            worst_delta.into(),
            edge.into(),
            (edge - gs.energy).into(),
            count.into(),
            below.join(";").into(),
        ];
        (vec![row], failures)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&mut []).is_nan());
    }
}
