use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::Deserialize;

use eavesdrop_core::linalg::{haar_random_unitary, CMat, CVec};
use eavesdrop_core::states::{
    computational_setup, fuchs_setup, Basis, ErrorRates, MeasurementSetup,
};
use eavesdrop_core::synth::InitialState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementKind {
    Computational,
    Fuchs,
    Random,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    #[value(name = "delta_hadamard", alias = "delta-hadamard")]
    DeltaHadamard,
    Delta,
    Zero,
    Bell,
    File,
}

/// Flags shared by every command. Each is optional so a config file can fill gaps.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Common {
    /// Error rate of the computational (xy) basis
    #[arg(long, global = true)]
    pub d_xy: Option<f64>,
    /// Error rate of the Hadamard (uv) basis [default: d-xy]
    #[arg(long, global = true)]
    pub d_uv: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of rounds (simulate, chsh)
    #[arg(long, global = true)]
    pub n: Option<u64>,
    /// Output path [default: stdout]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true, value_enum)]
    pub measurement: Option<MeasurementKind>,
    /// JSON measurement setup or 4x4 matrix, for `--measurement file`
    #[arg(long, global = true)]
    pub measurement_file: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub initial_state: Option<StateKind>,
    /// JSON vector of [re, im] pairs, for `--initial-state file`
    #[arg(long, global = true)]
    pub state_file: Option<PathBuf>,
    /// Rotate the bit-1 interaction vectors by this angle (radians) before verifying
    #[arg(long, global = true)]
    pub perturb: Option<f64>,
    /// Residual tolerance for verification
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Grid start (sweep)
    #[arg(long, global = true)]
    pub start: Option<f64>,
    #[arg(long, global = true)]
    pub stop: Option<f64>,
    #[arg(long, global = true)]
    pub step: Option<f64>,
    /// Error rate for chsh and oracle [default: d-xy]
    #[arg(long, global = true)]
    pub d: Option<f64>,
    /// Number of random measurements (oracle)
    #[arg(long, global = true)]
    pub povms: Option<u64>,
    /// Attack unitary JSON to re-verify (verify)
    #[arg(long, global = true)]
    pub unitary: Option<PathBuf>,
    /// Also write the exact-versus-empirical cell table as CSV (simulate)
    #[arg(long, global = true)]
    pub cells: Option<PathBuf>,
    /// JSON file supplying defaults for any of the above
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident, $($f:ident),*) => {
        $( if $dst.$f.is_none() { $dst.$f = $src.$f; } )*
    };
}

impl Common {
    /// Fills unset flags from the config file, if any.
    pub fn resolve(mut self) -> Result<Settings> {
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            let file: Common = serde_json::from_str(&text)
                .with_context(|| format!("parsing config {}", path.display()))?;
            overlay!(
                self,
                file,
                d_xy,
                d_uv,
                seed,
                n,
                out,
                format,
                measurement,
                measurement_file,
                initial_state,
                state_file,
                perturb,
                tol,
                start,
                stop,
                step,
                d,
                povms,
                unitary,
                cells
            );
        }
        let d_xy = self.d_xy.unwrap_or(0.1);
        let rates = ErrorRates::new(d_xy, self.d_uv.unwrap_or(d_xy))?;
        Ok(Settings {
            rates,
            seed: self.seed.unwrap_or(0),
            raw: self,
        })
    }
}

pub struct Settings {
    pub rates: ErrorRates,
    pub seed: u64,
    pub raw: Common,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

impl Settings {
    pub fn format(&self, default: Format) -> Format {
        self.raw.format.unwrap_or(default)
    }

    pub fn tol(&self) -> f64 {
        self.raw.tol.unwrap_or(1e-9)
    }

    pub fn n(&self, default: u64) -> u64 {
        self.raw.n.unwrap_or(default)
    }

    /// Scalar rate for chsh/oracle.
    pub fn d(&self) -> f64 {
        self.raw.d.unwrap_or(self.rates.d_xy())
    }

    /// Eve's computational-basis setup.
    pub fn measurement(&self) -> Result<MeasurementSetup> {
        Ok(
            match self
                .raw
                .measurement
                .unwrap_or(MeasurementKind::Computational)
            {
                MeasurementKind::Computational => computational_setup(),
                MeasurementKind::Fuchs => fuchs_setup(),
                MeasurementKind::Random => MeasurementSetup::from_unitary(
                    &haar_random_unitary(4, self.seed),
                    Basis::Computational,
                )?,
                MeasurementKind::File => {
                    let Some(path) = &self.raw.measurement_file else {
                        bail!("--measurement file requires --measurement-file");
                    };
                    let value: serde_json::Value = read_json(path)?;
                    if value.is_object() {
                        let m: MeasurementSetup = serde_json::from_value(value)
                            .with_context(|| format!("parsing {}", path.display()))?;
                        if m.basis() != Basis::Computational {
                            bail!("measurement file must describe the xy-basis setup");
                        }
                        m
                    } else {
                        let mat: CMat = serde_json::from_value(value)
                            .with_context(|| format!("parsing {}", path.display()))?;
                        MeasurementSetup::from_unitary(&mat, Basis::Computational)?
                    }
                }
            },
        )
    }

    /// Named chain target, or a custom vector.
    pub fn initial_state(&self) -> Result<Target> {
        Ok(
            match self.raw.initial_state.unwrap_or(StateKind::DeltaHadamard) {
                StateKind::DeltaHadamard => Target::Named(InitialState::DeltaHadamard),
                StateKind::Delta => Target::Named(InitialState::Delta),
                StateKind::Zero => Target::Named(InitialState::Zero),
                StateKind::Bell => Target::Named(InitialState::Bell),
                StateKind::File => {
                    let Some(path) = &self.raw.state_file else {
                        bail!("--initial-state file requires --state-file");
                    };
                    Target::Custom(read_json(path)?)
                }
            },
        )
    }
}

pub enum Target {
    Named(InitialState),
    Custom(CVec),
}
