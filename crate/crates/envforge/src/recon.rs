//! Rebuilding the toy field from envelopes and measuring convergence in eps.
//!
//! The reconstruction is
//!
//! ```text
//! u = (A + eps B) E + eps phi0 A^2 E^2 + c.c. + eps mu |A|^2,   E = exp(i (k x - w t))
//! ```
//!
//! with the envelopes evaluated at `xi = eps (x - c_g t)`, `tau = eps^2 t`.
//! Amplitudes are O(1) because the toy PDE carries `eps` on its nonlinearity.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeffs::coefficient_set;
use crate::direct::{check_commensurate, direct_grid, DirectConfig, DirectField, DirectSolver};
use crate::envelope::{EnvelopeModel, EnvelopeSolver, EnvelopeState, SolverConfig};
use crate::spectral::{signed_index, Grid, Spectral};
use crate::system::{toy_system, VProfile};
use crate::{Error, Result, C64};

/// Largest log-space fit residual still accepted.
pub const FIT_RESIDUAL_LIMIT: f64 = 0.2;

/// Errors below this are treated as round-off, which makes a fit meaningless.
const ERROR_FLOOR: f64 = 1e-10;

/// Carrier data the reconstruction needs. `group_velocity` may be overridden,
/// e.g. by a measured packet speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reconstructor {
    pub k: f64,
    pub omega: f64,
    pub group_velocity: f64,
    pub phi0: C64,
    pub mu: C64,
}

impl Reconstructor {
    pub fn new(model: &EnvelopeModel) -> Result<Self> {
        let unsupported = || Error::UnsupportedSystem("reconstruction needs a scalar 1D system".into());
        if model.carrier.k.len() != 1 {
            return Err(unsupported());
        }
        let phi0 = model.nls.phi0.scalar().ok_or_else(unsupported)?;
        let mu = model.nls.mean_flow.ok_or_else(unsupported)?.mu;
        Ok(Self {
            k: model.carrier.k[0],
            omega: model.carrier.omega,
            group_velocity: model.carrier.group_velocity[0],
            phi0,
            mu,
        })
    }

    pub fn field(&self, env: &EnvelopeState, eps: f64, grid: &Grid, t: f64) -> Result<DirectField> {
        check_commensurate(&env.grid, grid, eps, self.k)?;
        let tau = eps * eps * t;
        if (env.tau - tau).abs() > 1e-9 * tau.abs().max(1.0) {
            return Err(Error::InvalidInput(format!(
                "envelope is at tau = {}, but eps^2 t = {tau}",
                env.tau
            )));
        }
        let shift = eps * self.group_velocity * t;
        let a = upsample(&env.a, &env.grid, grid, shift);
        let b = env.b.as_ref().map(|b| upsample(b, &env.grid, grid, shift));
        let u = (0..grid.nx)
            .map(|i| {
                let e = C64::from_polar(1.0, self.k * grid.x(i) - self.omega * t);
                let ai = a[i];
                let first = ai + b.as_ref().map_or(C64::default(), |b| eps * b[i]);
                let wave = first * e + eps * self.phi0 * ai * ai * e * e;
                2.0 * wave.re + eps * (self.mu * ai.norm_sqr()).re
            })
            .collect();
        Ok(DirectField {
            grid: grid.clone(),
            u,
            t,
            eps,
        })
    }
}

/// Reconstructed field on the direct grid at fast time `t`; the envelope must
/// be at `tau = eps^2 t`.
pub fn reconstruct(env: &EnvelopeState, model: &EnvelopeModel, eps: f64, grid: &Grid, t: f64) -> Result<DirectField> {
    Reconstructor::new(model)?.field(env, eps, grid, t)
}

/// Spectral interpolation of `f(xi - shift)` onto the direct grid, where direct
/// point `x` sits at `xi = eps x`. Envelope mode `m` maps onto direct mode `m`.
fn upsample(values: &[C64], env: &Grid, direct: &Grid, shift: f64) -> Vec<C64> {
    let mut hat = values.to_vec();
    Spectral::new(env).forward(&mut hat);
    let mut out = vec![C64::default(); direct.nx];
    let scale = direct.nx as f64 / env.nx as f64;
    for (i, z) in hat.iter().enumerate() {
        let m = signed_index(i, env.nx);
        if 2 * m.unsigned_abs() as usize == env.nx {
            continue;
        }
        let kk = 2.0 * PI * m as f64 / env.lx;
        let slot = m.rem_euclid(direct.nx as i64) as usize;
        out[slot] = z * C64::from_polar(scale, -kk * shift);
    }
    Spectral::new(direct).inverse(&mut out);
    out
}

/// Root-mean-square and maximum of `u - v`.
pub fn error_norms(u: &[f64], v: &[f64]) -> (f64, f64) {
    let (mut sq, mut max) = (0.0, 0.0f64);
    for (a, b) in u.iter().zip(v) {
        let d = a - b;
        sq += d * d;
        max = max.max(d.abs());
    }
    ((sq / u.len().max(1) as f64).sqrt(), max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// A only.
    Nls,
    /// A and the correction B.
    Hnls,
}

/// Least-squares line through `(ln eps, ln error)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderFit {
    pub order: f64,
    pub intercept: f64,
    /// Root-mean-square residual in natural-log space.
    pub residual: f64,
}

pub fn fit_order(eps: &[f64], errors: &[f64]) -> Option<OrderFit> {
    if eps.len() < 3 || eps.len() != errors.len() || errors.iter().any(|e| !(*e > ERROR_FLOOR)) {
        return None;
    }
    let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let order = sxy / sxx;
    let intercept = my - order * mx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - order * x).powi(2)).sum();
    Some(OrderFit {
        order,
        intercept,
        residual: (rss / n).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructionReport {
    pub mode: Mode,
    pub k: f64,
    pub amplitude: f64,
    pub tau_end: f64,
    pub eps: Vec<f64>,
    pub l2: Vec<f64>,
    pub linf: Vec<f64>,
    /// `None` when the errors are at round-off level or fewer than three.
    pub fit: Option<OrderFit>,
    /// Errors strictly decrease as eps decreases.
    pub monotone: bool,
}

impl ReconstructionReport {
    fn new(mode: Mode, cfg: &StudyConfig, l2: Vec<f64>, linf: Vec<f64>) -> Self {
        let fit = fit_order(&cfg.eps, &l2);
        let mut order: Vec<usize> = (0..cfg.eps.len()).collect();
        order.sort_by(|&i, &j| cfg.eps[j].total_cmp(&cfg.eps[i]));
        let monotone = order.windows(2).all(|w| l2[w[1]] < l2[w[0]] && linf[w[1]] < linf[w[0]]);
        Self {
            mode,
            k: cfg.k,
            amplitude: cfg.amplitude,
            tau_end: cfg.tau_end,
            eps: cfg.eps.clone(),
            l2,
            linf,
            fit,
            monotone,
        }
    }

    pub fn order(&self) -> Option<f64> {
        self.fit.map(|f| f.order)
    }

    /// `Err(FitUnreliable)` for a degenerate fit or one whose residual is over the limit.
    pub fn check_fit(&self) -> Result<OrderFit> {
        match self.fit {
            Some(f) if f.residual <= FIT_RESIDUAL_LIMIT => Ok(f),
            Some(f) => Err(Error::FitUnreliable { residual: f.residual }),
            None => Err(Error::FitUnreliable { residual: f64::NAN }),
        }
    }

    /// `eps,l2,linf` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps,l2,linf\n");
        for i in 0..self.eps.len() {
            out.push_str(&format!("{:e},{:e},{:e}\n", self.eps[i], self.l2[i], self.linf[i]));
        }
        out
    }
}

/// Parameters of a toy-system convergence study. The initial envelope is
/// `A = a (1 + modulation cos(2 pi xi / L_xi))`, `B = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudyConfig {
    pub k: f64,
    pub amplitude: f64,
    pub modulation: f64,
    pub eps: Vec<f64>,
    pub tau_end: f64,
    pub envelope_length: f64,
    pub envelope_points: usize,
    pub envelope_dt: f64,
    pub direct_dt: f64,
    pub points_per_wavelength: usize,
    pub dissipation: VProfile,
}

impl Default for StudyConfig {
    /// The standard scenario: k = 0.5, a = 1, eps in {1/20, 1/40, 1/80}, tau_end = 1.
    fn default() -> Self {
        Self {
            k: 0.5,
            amplitude: 1.0,
            modulation: 0.5,
            eps: vec![1.0 / 20.0, 1.0 / 40.0, 1.0 / 80.0],
            tau_end: 1.0,
            envelope_length: 8.0 * PI,
            envelope_points: 64,
            envelope_dt: 1e-3,
            direct_dt: 0.2,
            points_per_wavelength: 16,
            dissipation: VProfile::None,
        }
    }
}

impl StudyConfig {
    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if self.eps.len() < 3 {
            return bad(format!("a convergence study needs at least 3 eps values, got {}", self.eps.len()));
        }
        if self.eps.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            return bad("eps values must lie in (0, 1)".into());
        }
        if !(self.tau_end >= 0.0 && self.tau_end.is_finite()) {
            return bad(format!("tau_end must be >= 0, got {}", self.tau_end));
        }
        if !(self.amplitude > 0.0) || !(self.modulation >= 0.0) {
            return bad("amplitude must be positive and modulation non-negative".into());
        }
        if !(self.envelope_dt > 0.0) || !(self.direct_dt > 0.0) {
            return bad("time steps must be positive".into());
        }
        Ok(())
    }

    pub fn model(&self) -> Result<EnvelopeModel> {
        let spec = toy_system().with_dissipation(self.dissipation);
        Ok(EnvelopeModel::new(&coefficient_set(&spec, &[self.k])?))
    }

    pub fn envelope_grid(&self) -> Result<Grid> {
        Grid::new_1d(self.envelope_points, self.envelope_length)
    }

    pub fn initial_envelope(&self, mode: Mode) -> Result<EnvelopeState> {
        let grid = self.envelope_grid()?;
        let (a, m, l) = (self.amplitude, self.modulation, self.envelope_length);
        Ok(EnvelopeState::from_fn(&grid, mode == Mode::Hnls, |x, _| {
            C64::new(a * (1.0 + m * (2.0 * PI * x / l).cos()), 0.0)
        }))
    }
}

/// One eps leg of a study: the direct solution at `t = tau_end / eps^2`.
#[derive(Debug, Clone)]
pub struct StudyLeg {
    pub eps: f64,
    pub direct: DirectField,
}

/// Reports plus the raw material needed to re-reconstruct (e.g. with another group velocity).
#[derive(Debug, Clone)]
pub struct StudyOutcome {
    pub config: StudyConfig,
    pub model: EnvelopeModel,
    pub envelopes: Vec<(Mode, EnvelopeState)>,
    pub legs: Vec<StudyLeg>,
    pub reports: Vec<ReconstructionReport>,
}

impl StudyOutcome {
    pub fn report(&self, mode: Mode) -> Option<&ReconstructionReport> {
        self.reports.iter().find(|r| r.mode == mode)
    }

    /// L2 errors of `mode` when the frame moves at `group_velocity` instead of the analytic one.
    pub fn l2_with_group_velocity(&self, mode: Mode, group_velocity: f64) -> Result<Vec<f64>> {
        let mut rec = Reconstructor::new(&self.model)?;
        rec.group_velocity = group_velocity;
        let env = &self
            .envelopes
            .iter()
            .find(|(m, _)| *m == mode)
            .ok_or_else(|| Error::InvalidInput(format!("mode {mode:?} was not run")))?
            .1;
        self.legs
            .iter()
            .map(|leg| {
                let r = rec.field(env, leg.eps, &leg.direct.grid, leg.direct.t)?;
                Ok(error_norms(&leg.direct.u, &r.u).0)
            })
            .collect()
    }
}

/// Runs the study for every requested mode. The envelope equations do not
/// involve eps, so each mode is integrated once; the direct legs run in
/// parallel and share one initial condition per eps.
pub fn run_study(cfg: &StudyConfig, modes: &[Mode]) -> Result<StudyOutcome> {
    cfg.validate()?;
    let model = cfg.model()?;
    let envelopes = modes
        .par_iter()
        .map(|&mode| {
            let mut env = cfg.initial_envelope(mode)?;
            let mut solver = EnvelopeSolver::new(&env.grid, &model, SolverConfig::new(cfg.envelope_dt))?;
            solver.integrate(&mut env, cfg.tau_end)?;
            Ok((mode, env))
        })
        .collect::<Result<Vec<_>>>()?;
    let start = cfg.initial_envelope(Mode::Nls)?;
    let legs = cfg
        .eps
        .par_iter()
        .map(|&eps| {
            let grid = direct_grid(cfg.envelope_length, eps, cfg.k, cfg.points_per_wavelength)?;
            let mut field = reconstruct(&start, &model, eps, &grid, 0.0)?;
            let mut solver = DirectSolver::new(&grid, eps, DirectConfig::new(cfg.direct_dt))?;
            solver.integrate(&mut field, cfg.tau_end / (eps * eps))?;
            Ok(StudyLeg { eps, direct: field })
        })
        .collect::<Result<Vec<_>>>()?;
    let rec = Reconstructor::new(&model)?;
    let mut reports = Vec::with_capacity(modes.len());
    for (mode, env) in &envelopes {
        let (mut l2, mut linf) = (Vec::new(), Vec::new());
        for leg in &legs {
            let r = rec.field(env, leg.eps, &leg.direct.grid, leg.direct.t)?;
            let (e2, einf) = error_norms(&leg.direct.u, &r.u);
            l2.push(e2);
            linf.push(einf);
        }
        reports.push(ReconstructionReport::new(*mode, cfg, l2, linf));
    }
    Ok(StudyOutcome {
        config: cfg.clone(),
        model,
        envelopes,
        legs,
        reports,
    })
}

/// A single-mode study; fails with `FitUnreliable` when the order cannot be trusted.
pub fn convergence_study(cfg: &StudyConfig, mode: Mode) -> Result<ReconstructionReport> {
    let report = run_study(cfg, &[mode])?.reports.remove(0);
    report.check_fit()?;
    Ok(report)
}
