//! The run configuration: one TOML document shared by every subcommand.
//!
//! Each subcommand reads only the sections it needs and reports the first
//! missing one. Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use envforge::envelope::{EnvelopeState, Scheme};
use envforge::recon::{Mode, StudyConfig};
use envforge::spectral::Grid;
use envforge::system::{deepwater_system, polynomial_system, toy_system, Poly, SystemSpec, VProfile};
use envforge::C64;
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub carrier: Option<CarrierConfig>,
    pub domain: Option<DomainConfig>,
    pub initial: Option<InitialCondition>,
    pub envelope: Option<EnvelopeRun>,
    pub direct: Option<DirectRun>,
    pub study: Option<StudyConfig>,
    pub validate: Option<ValidateRun>,
    pub mi: Option<MiScan>,
    #[serde(default)]
    pub output: OutputConfig,
    /// Echoed into the manifest for randomized suites driven by the config.
    pub seed: Option<u64>,
}

/// A single monomial `(re + i im) * prod k_j^powers[j]`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub powers: Vec<u32>,
    #[serde(default)]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase", deny_unknown_fields)]
pub enum SystemConfig {
    Toy {
        #[serde(default)]
        dissipation: VProfile,
    },
    Deepwater {
        #[serde(default = "one")]
        dim: usize,
        #[serde(default)]
        dissipation: VProfile,
    },
    Polynomial {
        linear: Vec<Term>,
        bilinear: Vec<Term>,
        trilinear: Option<Vec<Term>>,
        #[serde(default)]
        dissipation: VProfile,
    },
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarrierConfig {
    pub k: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub length: f64,
    pub points: usize,
    pub length_y: Option<f64>,
    pub points_y: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialCondition {
    Zero,
    /// `a (1 + modulation cos(2 pi sideband x / L))`.
    PlaneWave {
        amplitude: f64,
        #[serde(default)]
        modulation: f64,
        #[serde(default = "one")]
        sideband: usize,
    },
    /// `a exp(-((x - L/2) / width)^2)`, centred in the domain.
    Gaussian { amplitude: f64, width: f64 },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeRun {
    pub dt: f64,
    pub tau_end: f64,
    #[serde(default = "nls")]
    pub equation: Mode,
    #[serde(default = "etd")]
    pub scheme: Scheme,
    #[serde(default = "ten")]
    pub samples: usize,
    #[serde(default)]
    pub snapshots: bool,
}

fn nls() -> Mode {
    Mode::Nls
}

fn etd() -> Scheme {
    Scheme::EtdRk4
}

fn ten() -> usize {
    10
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectRun {
    pub eps: f64,
    pub dt: f64,
    /// Slow time; the direct run ends at `t = tau_end / eps^2`.
    pub tau_end: f64,
    #[serde(default = "sixteen")]
    pub points_per_wavelength: usize,
    #[serde(default = "ten")]
    pub samples: usize,
    #[serde(default)]
    pub snapshots: bool,
}

fn sixteen() -> usize {
    16
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateRun {
    #[serde(default = "both_modes")]
    pub modes: Vec<Mode>,
}

impl Default for ValidateRun {
    fn default() -> Self {
        Self { modes: both_modes() }
    }
}

fn both_modes() -> Vec<Mode> {
    vec![Mode::Nls, Mode::Hnls]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MiScan {
    #[serde(default)]
    pub a: Vec<f64>,
    #[serde(default)]
    pub q: Vec<f64>,
    #[serde(default = "mi_points")]
    pub points: usize,
    #[serde(default = "one")]
    pub periods: usize,
    #[serde(default = "mi_dt")]
    pub dt: f64,
    #[serde(default = "mi_delta")]
    pub delta: f64,
}

fn mi_points() -> usize {
    32
}

fn mi_dt() -> f64 {
    1e-2
}

fn mi_delta() -> f64 {
    1e-7
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("envforge-out"),
        }
    }
}

fn positive(what: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{what} must be positive, got {v}")))
    }
}

fn non_negative(what: &str, v: f64) -> Result<(), CliError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{what} must be non-negative, got {v}")))
    }
}

fn section<'a, T>(s: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    s.as_ref().ok_or_else(|| CliError::Config(format!("missing [{name}] section")))
}

fn poly(arity: usize, terms: &[Term]) -> Result<Poly, CliError> {
    let terms = terms.iter().map(|t| (t.powers.clone(), C64::new(t.re, t.im))).collect();
    Ok(Poly::new(arity, terms)?)
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<(Self, String), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg = Self::parse(&text)?;
        Ok((cfg, text))
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn is_toy(&self) -> bool {
        matches!(self.system, SystemConfig::Toy { .. })
    }

    pub fn system(&self) -> Result<SystemSpec, CliError> {
        Ok(match &self.system {
            SystemConfig::Toy { dissipation } => toy_system().with_dissipation(*dissipation),
            SystemConfig::Deepwater { dim, dissipation } => deepwater_system(*dim)?.with_dissipation(*dissipation),
            SystemConfig::Polynomial {
                linear,
                bilinear,
                trilinear,
                dissipation,
            } => polynomial_system(
                "polynomial",
                poly(1, linear)?,
                poly(2, bilinear)?,
                trilinear.as_deref().map(|t| poly(3, t)).transpose()?,
                *dissipation,
            )?,
        })
    }

    pub fn carrier(&self) -> Result<Vec<f64>, CliError> {
        let k = &section(&self.carrier, "carrier")?.k;
        if k.is_empty() || k.iter().any(|x| !x.is_finite()) {
            return Err(CliError::Config(format!("carrier k must be a finite vector, got {k:?}")));
        }
        Ok(k.clone())
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        let d = section(&self.domain, "domain")?;
        positive("domain.length", d.length)?;
        match (d.length_y, d.points_y) {
            (None, None) => Ok(Grid::new_1d(d.points, d.length)?),
            (Some(ly), Some(ny)) => {
                positive("domain.length_y", ly)?;
                Ok(Grid::new_2d(d.points, ny, d.length, ly)?)
            }
            _ => Err(CliError::Config("domain.length_y and domain.points_y go together".into())),
        }
    }

    pub fn initial_state(&self, grid: &Grid, with_b: bool) -> Result<EnvelopeState, CliError> {
        let lx = grid.lx;
        Ok(match *section(&self.initial, "initial")? {
            InitialCondition::Zero => EnvelopeState::zeros(grid, with_b),
            InitialCondition::PlaneWave {
                amplitude,
                modulation,
                sideband,
            } => {
                non_negative("initial.amplitude", amplitude)?;
                non_negative("initial.modulation", modulation)?;
                let q = 2.0 * std::f64::consts::PI * sideband as f64 / lx;
                EnvelopeState::from_fn(grid, with_b, |x, _| C64::new(amplitude * (1.0 + modulation * (q * x).cos()), 0.0))
            }
            InitialCondition::Gaussian { amplitude, width } => {
                non_negative("initial.amplitude", amplitude)?;
                positive("initial.width", width)?;
                EnvelopeState::from_fn(grid, with_b, |x, _| {
                    C64::new(amplitude * (-((x - lx / 2.0) / width).powi(2)).exp(), 0.0)
                })
            }
        })
    }

    pub fn envelope_run(&self) -> Result<EnvelopeRun, CliError> {
        let run = *section(&self.envelope, "envelope")?;
        positive("envelope.dt", run.dt)?;
        non_negative("envelope.tau_end", run.tau_end)?;
        if run.samples == 0 {
            return Err(CliError::Config("envelope.samples must be at least 1".into()));
        }
        Ok(run)
    }

    pub fn direct_run(&self) -> Result<DirectRun, CliError> {
        let run = *section(&self.direct, "direct")?;
        positive("direct.eps", run.eps)?;
        positive("direct.dt", run.dt)?;
        non_negative("direct.tau_end", run.tau_end)?;
        if run.samples == 0 || run.points_per_wavelength == 0 {
            return Err(CliError::Config("direct.samples and direct.points_per_wavelength must be at least 1".into()));
        }
        Ok(run)
    }

    pub fn study(&self) -> Result<(StudyConfig, Vec<Mode>), CliError> {
        if !self.is_toy() {
            return Err(CliError::Config("validate compares against the toy direct solver; set system.name = \"toy\"".into()));
        }
        let study = section(&self.study, "study")?.clone();
        let modes = self.validate.clone().unwrap_or_default().modes;
        if modes.is_empty() {
            return Err(CliError::Config("validate.modes is empty".into()));
        }
        Ok((study, modes))
    }

    pub fn mi_scan(&self) -> Result<&MiScan, CliError> {
        let mi = section(&self.mi, "mi")?;
        for &a in &mi.a {
            positive("mi.a", a)?;
        }
        for &q in &mi.q {
            positive("mi.q", q)?;
        }
        positive("mi.dt", mi.dt)?;
        positive("mi.delta", mi.delta)?;
        if mi.periods == 0 {
            return Err(CliError::Config("mi.periods must be at least 1".into()));
        }
        Ok(mi)
    }
}
