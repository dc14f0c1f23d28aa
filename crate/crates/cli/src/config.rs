use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use twophoton::{BargmannIndex, ModelParams, Parity, Sector};

#[derive(Debug, Parser)]
#[command(name = "twophoton", version, about = "Spectral solver for the two-photon quantum Rabi model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandArgs,
}

#[derive(Debug, Subcommand)]
pub enum CommandArgs {
    /// Sample G(E) of both parities on an energy grid
    Gcurve(CommonArgs),
    /// Regular spectrum from G-function zeros
    Spectrum(CommonArgs),
    /// Zeroth baseline, pole ladder and below-baseline counts
    Baselines(CommonArgs),
    /// Eigenvalues of the finite-order truncated problems
    Approx(CommonArgs),
    /// Variational ground state
    Variational(CommonArgs),
    /// Exact diagonalization in a truncated Fock basis
    Oracle(CommonArgs),
    /// Ground-state energy from every method, one row per coupling
    Compare(CommonArgs),
    /// Ground state and continuum edge approaching g = 1/2
    GapReport(CommonArgs),
}

impl CommandArgs {
    fn split(self) -> (Command, CommonArgs) {
        match self {
            Self::Gcurve(a) => (Command::Gcurve, a),
            Self::Spectrum(a) => (Command::Spectrum, a),
            Self::Baselines(a) => (Command::Baselines, a),
            Self::Approx(a) => (Command::Approx, a),
            Self::Variational(a) => (Command::Variational, a),
            Self::Oracle(a) => (Command::Oracle, a),
            Self::Compare(a) => (Command::Compare, a),
            Self::GapReport(a) => (Command::GapReport, a),
        }
    }
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    /// Single coupling
    #[arg(long, conflicts_with_all = ["g_min", "g_max"])]
    pub g: Option<f64>,
    #[arg(long, requires = "g_max")]
    pub g_min: Option<f64>,
    #[arg(long, requires = "g_min")]
    pub g_max: Option<f64>,
    /// Number of couplings in `[g-min, g-max]`, endpoints included
    #[arg(long, default_value_t = 11)]
    pub g_steps: usize,
    #[arg(long, value_enum, default_value_t = QChoice::Both)]
    pub q: QChoice,
    #[arg(long, value_enum, default_value_t = ParityChoice::Both, allow_hyphen_values = true)]
    pub parity: ParityChoice,
    #[arg(long, allow_hyphen_values = true)]
    pub e_min: Option<f64>,
    #[arg(long, default_value_t = 6.0, allow_hyphen_values = true)]
    pub e_max: f64,
    /// Grid points of `gcurve`
    #[arg(long, default_value_t = 801)]
    pub e_steps: usize,
    /// Relative truncation tolerance of the G series
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Minimum number of G-series terms
    #[arg(long, default_value_t = 500)]
    pub n_max: usize,
    #[arg(long, default_value_t = 200)]
    pub fock_cutoff: usize,
    /// Truncation orders N, comma separated
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub order: Vec<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QChoice {
    #[value(name = "1/4")]
    Quarter,
    #[value(name = "3/4")]
    ThreeQuarters,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ParityChoice {
    #[value(name = "+1")]
    Plus,
    #[value(name = "-1")]
    Minus,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Gcurve,
    Spectrum,
    Baselines,
    Approx,
    Variational,
    Oracle,
    Compare,
    GapReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Couplings {
    /// Nothing given: the command picks its default.
    Default,
    Single(f64),
    Range { min: f64, max: f64, steps: usize },
}

/// Everything that determines a run's output. The output path is not part
/// of it, so the same run written to two files is byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub omega: f64,
    pub couplings: Couplings,
    pub q: Vec<BargmannIndex>,
    pub parity: Vec<Parity>,
    pub e_min: Option<f64>,
    pub e_max: f64,
    pub e_steps: usize,
    pub tol: f64,
    pub n_max: usize,
    pub fock_cutoff: usize,
    pub orders: Vec<usize>,
    pub format: Format,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

pub const DEFAULT_COUPLING: f64 = 0.25;

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self, String> {
        let (command, a) = cli.command.split();
        let couplings = match (a.g, a.g_min, a.g_max) {
            (Some(g), _, _) => Couplings::Single(g),
            (None, Some(min), Some(max)) => Couplings::Range {
                min,
                max,
                steps: a.g_steps,
            },
            _ => Couplings::Default,
        };
        let q = match a.q {
            QChoice::Quarter => vec![BargmannIndex::Quarter],
            QChoice::ThreeQuarters => vec![BargmannIndex::ThreeQuarters],
            QChoice::Both => BargmannIndex::ALL.to_vec(),
        };
        let parity = match a.parity {
            ParityChoice::Plus => vec![Parity::Plus],
            ParityChoice::Minus => vec![Parity::Minus],
            ParityChoice::Both => Parity::ALL.to_vec(),
        };
        let mut orders = a.order;
        orders.sort_unstable();
        orders.dedup();
        let config = Self {
            command,
            omega: a.omega,
            couplings,
            q,
            parity,
            e_min: a.e_min,
            e_max: a.e_max,
            e_steps: a.e_steps,
            tol: a.tol,
            n_max: a.n_max,
            fock_cutoff: a.fock_cutoff,
            orders,
            format: a.format,
            out: a.out,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), String> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(format!("--{name} must be finite, got {v}"))
            }
        };
        finite("omega", self.omega)?;
        if self.omega <= 0.0 {
            return Err(format!("--omega must be positive, got {}", self.omega));
        }
        for g in self.coupling_grid_or(&[DEFAULT_COUPLING]) {
            ModelParams::new(self.omega, g).map_err(|e| e.to_string())?;
        }
        if let Couplings::Range { min, max, steps } = self.couplings {
            if steps == 0 {
                return Err("--g-steps must be at least 1".into());
            }
            if min > max {
                return Err(format!("--g-min {min} exceeds --g-max {max}"));
            }
        }
        if let Some(e) = self.e_min {
            finite("e-min", e)?;
        }
        finite("e-max", self.e_max)?;
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(format!("--tol must lie in (0, 1), got {}", self.tol));
        }
        if self.fock_cutoff < 4 {
            return Err(format!("--fock-cutoff must be at least 4, got {}", self.fock_cutoff));
        }
        if self.orders.is_empty() {
            return Err("--order needs at least one value".into());
        }
        Ok(())
    }

    /// Couplings of the run, ascending; `fallback` when none were given.
    pub fn coupling_grid_or(&self, fallback: &[f64]) -> Vec<f64> {
        match self.couplings {
            Couplings::Default => fallback.to_vec(),
            Couplings::Single(g) => vec![g],
            Couplings::Range { min, max, steps } => match steps {
                0 => Vec::new(),
                1 => vec![min],
                _ => (0..steps)
                    .map(|i| min + (max - min) * i as f64 / (steps - 1) as f64)
                    .collect(),
            },
        }
    }

    pub fn sectors(&self) -> Vec<Sector> {
        let mut out = Vec::new();
        for &q in &self.q {
            for &parity in &self.parity {
                out.push(Sector::new(q, parity));
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        Sha256::digest(self.to_json().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
