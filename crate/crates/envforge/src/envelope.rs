//! Spectral integration of the NLS and coupled (A, B) envelope equations.
//!
//! Both equations are stored as `d/dtau = L + N` with the diagonal symbol
//! `L(K) = -i alpha |K|^2 - V` shared by A and B, so one ETDRK4 core serves
//! the toy and the deep-water systems. Split-step (Strang) is kept for the
//! NLS alone as an independent cross-check.

use serde::Serialize;

use crate::coeffs::{CoefficientSet, HnlsCoefficients, NlsCoefficients};
use crate::etd::EtdRk4;
use crate::spectral::{apply_mask, max_abs, nan_max, Grid, Spectral};
use crate::system::CarrierSetup;
use crate::water;
use crate::{Error, Result, C64};

pub const BLOWUP_THRESHOLD: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeState {
    pub grid: Grid,
    pub a: Vec<C64>,
    /// Absent in NLS-only runs.
    pub b: Option<Vec<C64>>,
    /// Mean-flow potential, deep-water runs only.
    pub meanflow: Option<Vec<f64>>,
    pub tau: f64,
}

impl EnvelopeState {
    pub fn zeros(grid: &Grid, with_b: bool) -> Self {
        Self {
            grid: grid.clone(),
            a: vec![C64::default(); grid.len()],
            b: with_b.then(|| vec![C64::default(); grid.len()]),
            meanflow: None,
            tau: 0.0,
        }
    }

    /// Samples `f(x, y)` for A; B starts at zero when requested.
    pub fn from_fn(grid: &Grid, with_b: bool, f: impl Fn(f64, f64) -> C64) -> Self {
        let mut s = Self::zeros(grid, with_b);
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                s.a[grid.flat(i, j)] = f(grid.x(i), grid.y(j));
            }
        }
        s
    }

    pub fn is_finite(&self) -> bool {
        let ok = |v: &[C64]| v.iter().all(|z| z.is_finite());
        ok(&self.a) && self.b.as_deref().is_none_or(ok)
    }

    pub fn mass(&self) -> f64 {
        self.a.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell()
    }

    pub fn mass_b(&self) -> f64 {
        self.b
            .as_ref()
            .map_or(0.0, |b| b.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell())
    }
}

/// `A = a (1 + delta cos(q x))`; `q` must be a harmonic of the x-period.
pub fn init_plane_wave(grid: &Grid, a: f64, q: f64, delta: f64, with_b: bool) -> Result<EnvelopeState> {
    if !(a > 0.0) || !(delta >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "plane wave needs a > 0 and delta >= 0, got a = {a}, delta = {delta}"
        )));
    }
    let base = 2.0 * std::f64::consts::PI / grid.lx;
    let m = q / base;
    if (m - m.round()).abs() > 1e-9 * m.abs().max(1.0) {
        return Err(Error::IncommensurateSideband { q, length: grid.lx });
    }
    Ok(EnvelopeState::from_fn(grid, with_b, |x, _| {
        C64::new(a * (1.0 + delta * (q * x).cos()), 0.0)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    EtdRk4,
    SplitStep,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub dealias: bool,
    pub record_stride: usize,
}

impl SolverConfig {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            scheme: Scheme::EtdRk4,
            dealias: true,
            record_stride: 1,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidInput(format!("dt must be positive, got {}", self.dt)));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidInput("record_stride must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    pub tau: f64,
    pub mass: f64,
    pub momentum: f64,
    pub max_abs: f64,
    pub mass_b: f64,
}

/// The coefficients an envelope run needs, taken from one [`CoefficientSet`].
#[derive(Debug, Clone)]
pub struct EnvelopeModel {
    pub carrier: CarrierSetup,
    pub nls: NlsCoefficients,
    pub hnls: HnlsCoefficients,
}

impl EnvelopeModel {
    pub fn new(set: &CoefficientSet) -> Self {
        Self {
            carrier: set.carrier.clone(),
            nls: set.nls.clone(),
            hnls: set.hnls.clone(),
        }
    }

    /// Switches every nonlinear term off, keeping dispersion, damping and the
    /// linear A-to-B forcing.
    pub fn linear_only(mut self) -> Self {
        let zero = C64::default();
        self.nls.nonlinear_coeff = zero;
        let h = &mut self.hnls;
        h.selfsteep_coeff = zero;
        h.conj_steep_coeff = zero;
        h.coupling_ab = zero;
        h.coupling_a2bbar = zero;
        if let Some(m) = h.mean_flow.as_mut() {
            m.kappa = zero;
        }
        if let Some(w) = h.water.as_mut() {
            w.nonlocal_intensity = zero;
            w.nonlocal_meanflow = zero;
        }
        self
    }
}

/// Everything evaluated pointwise or by multipliers, without the diagonal linear part.
pub(crate) struct Forcing {
    grid: Grid,
    sp: Spectral,
    mask: Option<Vec<bool>>,
    kx: Vec<f64>,
    ky: Vec<f64>,
    /// `i d.K`, derivative along the carrier direction.
    dd: Vec<C64>,
    k2: Vec<f64>,
    beta: C64,
    hnls: HnlsCoefficients,
    carrier_k: Vec<f64>,
    /// Last mean flow and its null-mode count (deep water).
    pub(crate) meanflow: Option<(Vec<f64>, usize)>,
}

impl Forcing {
    pub(crate) fn new(grid: &Grid, model: &EnvelopeModel, dealias: bool) -> Result<Self> {
        if grid.dim() != model.carrier.k.len() {
            return Err(Error::GridMismatch(format!(
                "{}D grid for a {}D carrier",
                grid.dim(),
                model.carrier.k.len()
            )));
        }
        let (kx, ky) = grid.wavenumbers();
        let d = model.carrier.direction();
        let dd = kx
            .iter()
            .zip(&ky)
            .map(|(&x, &y)| C64::new(0.0, d[0] * x + d.get(1).copied().unwrap_or(0.0) * y))
            .collect();
        let k2 = kx.iter().zip(&ky).map(|(x, y)| x * x + y * y).collect();
        Ok(Self {
            grid: grid.clone(),
            sp: Spectral::new(grid),
            mask: dealias.then(|| grid.dealias_mask()),
            kx,
            ky,
            dd,
            k2,
            beta: model.nls.nonlinear_coeff,
            hnls: model.hnls.clone(),
            carrier_k: model.carrier.k.clone(),
            meanflow: None,
        })
    }

    fn physical(&mut self, spec: &[C64]) -> Vec<C64> {
        let mut out = spec.to_vec();
        self.sp.inverse(&mut out);
        out
    }

    fn spectral(&mut self, mut phys: Vec<C64>) -> Vec<C64> {
        self.sp.forward(&mut phys);
        if let Some(m) = &self.mask {
            apply_mask(&mut phys, m);
        }
        phys
    }

    /// `N_A` from the spectrum of A.
    pub(crate) fn nls(&mut self, a_hat: &[C64]) -> Vec<C64> {
        let a = self.physical(a_hat);
        let ib = C64::i() * self.beta;
        let n: Vec<C64> = a.iter().map(|z| ib * z.norm_sqr() * z).collect();
        self.spectral(n)
    }

    /// `(N_A, N_B)` from the spectra of A and B.
    pub(crate) fn hnls(&mut self, a_hat: &[C64], b_hat: &[C64]) -> (Vec<C64>, Vec<C64>) {
        let n = a_hat.len();
        let h = self.hnls.clone();
        let a = self.physical(a_hat);
        let b = self.physical(b_hat);
        let ad_hat: Vec<C64> = (0..n).map(|i| self.dd[i] * a_hat[i]).collect();
        let ad = self.physical(&ad_hat);
        let third_hat: Vec<C64> = (0..n).map(|i| -self.k2[i] * ad_hat[i]).collect();
        let third = self.physical(&third_hat);
        let ib = C64::i() * self.beta;
        let iv = C64::i() * h.damping_derivative;

        let na: Vec<C64> = a.iter().map(|z| ib * z.norm_sqr() * z).collect();
        let mut nb: Vec<C64> = (0..n)
            .map(|i| {
                let (z, w) = (a[i], b[i]);
                let i2 = z.norm_sqr();
                h.coupling_ab * i2 * w
                    + h.coupling_a2bbar * z * z * w.conj()
                    + h.selfsteep_coeff * i2 * ad[i]
                    + h.conj_steep_coeff * z * z * ad[i].conj()
                    + h.third_deriv_coeff * third[i]
                    + iv * ad[i]
            })
            .collect();

        let intensity: Vec<C64> = a.iter().map(|z| C64::new(z.norm_sqr(), 0.0)).collect();
        let mut i_hat = intensity;
        self.sp.forward(&mut i_hat);

        if let Some(m) = h.mean_flow {
            if m.kappa != C64::default() {
                // m3' = d_xi^{-1} kappa (|A|^2 - mean)
                let mut m3: Vec<C64> = (0..n)
                    .map(|i| {
                        if self.kx[i] == 0.0 {
                            C64::default()
                        } else {
                            m.kappa * i_hat[i] / C64::new(0.0, self.kx[i])
                        }
                    })
                    .collect();
                self.sp.inverse(&mut m3);
                for i in 0..n {
                    nb[i] -= m.carrier_coupling * m3[i] * a[i];
                }
            }
        }

        if let Some(w) = h.water {
            let (psi_hat, nulled) = water::meanflow_spectrum(&i_hat, &self.kx, &self.ky, &self.carrier_k, w.meanflow_constraint);
            let p1 = self.slope_operator(&i_hat);
            let p2 = self.slope_operator(&psi_hat);
            for i in 0..n {
                nb[i] += w.nonlocal_intensity * a[i] * p1[i] + w.nonlocal_meanflow * b[i] * p2[i];
            }
            let psi = self.physical(&psi_hat).into_iter().map(|z| z.re).collect();
            self.meanflow = Some((psi, nulled));
        }

        (self.spectral(na), self.spectral(nb))
    }

    /// `(D/|D|) . D_xi f` evaluated through the Hilbert-like multipliers, returned in physical space.
    fn slope_operator(&mut self, f_hat: &[C64]) -> Vec<C64> {
        let mut out = water::nonlocal_slope(f_hat, &self.kx, &self.ky, self.grid.dim());
        self.sp.inverse(&mut out);
        out
    }
}

pub struct EnvelopeSolver {
    grid: Grid,
    cfg: SolverConfig,
    linear: Vec<C64>,
    forcing: Forcing,
    etd: Option<(f64, EtdRk4, bool)>,
    sp: Spectral,
    kx: Vec<f64>,
}

impl EnvelopeSolver {
    pub fn new(grid: &Grid, model: &EnvelopeModel, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let (kx, ky) = grid.wavenumbers();
        let alpha = model.nls.dispersion_coeff;
        let v = model.nls.damping;
        let linear = kx
            .iter()
            .zip(&ky)
            .map(|(x, y)| C64::new(0.0, -alpha * (x * x + y * y)) - v)
            .collect();
        Ok(Self {
            grid: grid.clone(),
            cfg,
            linear,
            forcing: Forcing::new(grid, model, cfg.dealias)?,
            etd: None,
            sp: Spectral::new(grid),
            kx,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// Null (transverse) modes dropped by the last mean-flow solve.
    pub fn meanflow_nulls(&self) -> Option<usize> {
        self.forcing.meanflow.as_ref().map(|(_, n)| *n)
    }

    fn etd(&mut self, dt: f64, coupled: bool) -> &EtdRk4 {
        let stale = !matches!(&self.etd, Some((h, _, c)) if *h == dt && *c == coupled);
        if stale {
            let sym = if coupled {
                self.linear.iter().chain(&self.linear).copied().collect::<Vec<_>>()
            } else {
                self.linear.clone()
            };
            self.etd = Some((dt, EtdRk4::new(&sym, dt), coupled));
        }
        &self.etd.as_ref().expect("just built").1
    }

    fn check_grid(&self, state: &EnvelopeState) -> Result<()> {
        if state.grid != self.grid || state.a.len() != self.grid.len() {
            return Err(Error::GridMismatch(format!(
                "state grid {:?} vs solver grid {:?}",
                state.grid, self.grid
            )));
        }
        if state.b.as_ref().is_some_and(|b| b.len() != self.grid.len()) {
            return Err(Error::GridMismatch("B length differs from grid".into()));
        }
        Ok(())
    }

    /// One step of size `cfg.dt`: NLS when `state.b` is absent, otherwise the coupled system.
    pub fn step(&mut self, state: &mut EnvelopeState) -> Result<()> {
        self.step_with(state, self.cfg.dt)
    }

    fn step_with(&mut self, state: &mut EnvelopeState, dt: f64) -> Result<()> {
        self.check_grid(state)?;
        match (&state.b, self.cfg.scheme) {
            (None, Scheme::EtdRk4) => self.etd_nls(state, dt)?,
            (None, Scheme::SplitStep) => self.split_nls(state, dt),
            (Some(_), Scheme::EtdRk4) => self.etd_hnls(state, dt)?,
            (Some(_), Scheme::SplitStep) => {
                return Err(Error::InvalidInput("split-step integrates the NLS only".into()))
            }
        }
        state.tau += dt;
        let peak = nan_max(max_abs(&state.a), state.b.as_deref().map_or(0.0, max_abs));
        if !(peak <= BLOWUP_THRESHOLD) {
            return Err(Error::BlowUp {
                time: state.tau,
                max_amplitude: peak,
            });
        }
        Ok(())
    }

    fn etd_nls(&mut self, state: &mut EnvelopeState, dt: f64) -> Result<()> {
        let mut v = state.a.clone();
        self.sp.forward(&mut v);
        self.etd(dt, false);
        let (_, etd, _) = self.etd.as_ref().expect("built");
        let forcing = &mut self.forcing;
        etd.step(&mut v, |x| Ok(forcing.nls(x)))?;
        self.sp.inverse(&mut v);
        state.a = v;
        Ok(())
    }

    fn etd_hnls(&mut self, state: &mut EnvelopeState, dt: f64) -> Result<()> {
        let n = self.grid.len();
        let mut a = state.a.clone();
        let mut b = state.b.clone().expect("coupled state");
        self.sp.forward(&mut a);
        self.sp.forward(&mut b);
        a.extend(b);
        let mut v = a;
        self.etd(dt, true);
        let (_, etd, _) = self.etd.as_ref().expect("built");
        let forcing = &mut self.forcing;
        etd.step(&mut v, |x| {
            let (na, mut nb) = forcing.hnls(&x[..n], &x[n..]);
            let mut out = na;
            out.append(&mut nb);
            Ok(out)
        })?;
        let mut b = v.split_off(n);
        self.sp.inverse(&mut v);
        self.sp.inverse(&mut b);
        state.a = v;
        state.b = Some(b);
        if self.forcing.hnls.water.is_some() {
            self.refresh_meanflow(state);
        }
        Ok(())
    }

    /// Strang splitting: half linear, exact pointwise nonlinear, half linear.
    fn split_nls(&mut self, state: &mut EnvelopeState, dt: f64) {
        let half: Vec<C64> = self.linear.iter().map(|l| (l * dt / 2.0).exp()).collect();
        let mask = self.cfg.dealias.then(|| self.grid.dealias_mask());
        let mut v = state.a.clone();
        self.sp.forward(&mut v);
        v.iter_mut().zip(&half).for_each(|(z, e)| *z *= e);
        self.sp.inverse(&mut v);
        let beta = self.forcing.beta;
        for z in v.iter_mut() {
            *z = cubic_flow(*z, beta, dt);
        }
        self.sp.forward(&mut v);
        v.iter_mut().zip(&half).for_each(|(z, e)| *z *= e);
        if let Some(m) = &mask {
            apply_mask(&mut v, m);
        }
        self.sp.inverse(&mut v);
        state.a = v;
    }

    /// Recomputes the deep-water mean flow from the current A.
    pub fn refresh_meanflow(&mut self, state: &mut EnvelopeState) {
        let Some(w) = self.forcing.hnls.water else { return };
        let mut i_hat: Vec<C64> = state.a.iter().map(|z| C64::new(z.norm_sqr(), 0.0)).collect();
        self.sp.forward(&mut i_hat);
        let f = &self.forcing;
        let (psi_hat, nulled) = water::meanflow_spectrum(&i_hat, &f.kx, &f.ky, &f.carrier_k, w.meanflow_constraint);
        let mut psi = psi_hat;
        self.sp.inverse(&mut psi);
        let psi: Vec<f64> = psi.into_iter().map(|z| z.re).collect();
        self.forcing.meanflow = Some((psi.clone(), nulled));
        state.meanflow = Some(psi);
    }

    pub fn diagnostics(&mut self, state: &EnvelopeState) -> Diagnostics {
        let mut ah = state.a.clone();
        self.sp.forward(&mut ah);
        let mut ax: Vec<C64> = ah.iter().zip(&self.kx).map(|(z, &k)| z * C64::new(0.0, k)).collect();
        self.sp.inverse(&mut ax);
        let cell = self.grid.cell();
        let momentum = state.a.iter().zip(&ax).map(|(a, d)| (a.conj() * d).im).sum::<f64>() * cell;
        Diagnostics {
            tau: state.tau,
            mass: state.mass(),
            momentum,
            max_abs: max_abs(&state.a),
            mass_b: state.mass_b(),
        }
    }

    /// Steps to `tau_end`, recording diagnostics every `record_stride` steps and at the end.
    ///
    /// When the span is not a whole number of steps the step is shrunk so the
    /// run lands exactly on `tau_end`.
    pub fn integrate(&mut self, state: &mut EnvelopeState, tau_end: f64) -> Result<Vec<Diagnostics>> {
        let span = tau_end - state.tau;
        if span < 0.0 {
            return Err(Error::InvalidInput(format!(
                "tau_end {tau_end} is before the state time {}",
                state.tau
            )));
        }
        let mut series = Vec::new();
        if span == 0.0 {
            return Ok(series);
        }
        let steps = (span / self.cfg.dt - 1e-9).ceil().max(1.0) as usize;
        let dt = span / steps as f64;
        let tau0 = state.tau;
        for s in 1..=steps {
            self.step_with(state, dt)?;
            // avoid accumulated rounding in tau
            state.tau = tau0 + s as f64 * dt;
            if s % self.cfg.record_stride == 0 || s == steps {
                series.push(self.diagnostics(state));
            }
        }
        state.tau = tau_end;
        if let Some(d) = series.last_mut() {
            d.tau = tau_end;
        }
        Ok(series)
    }
}

/// Exact flow of `A_tau = i beta |A|^2 A` over `dt`.
fn cubic_flow(z: C64, beta: C64, dt: f64) -> C64 {
    let s = z.norm_sqr();
    if beta.im.abs() * s * dt < 1e-14 {
        return z * C64::new(0.0, beta.re * s * dt).exp();
    }
    // |A|^2 obeys s' = -2 Im(beta) s^2
    let g = 1.0 + 2.0 * beta.im * s * dt;
    let phase = beta.re / (2.0 * beta.im) * g.ln();
    z / g.sqrt() * C64::from_polar(1.0, phase)
}
