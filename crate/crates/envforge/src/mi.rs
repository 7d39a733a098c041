//! Modulational instability of a plane wave under the NLS
//! `i A_tau + alpha A_xx + beta |A|^2 A = 0`.
//!
//! Linearizing about `a exp(i beta a^2 tau)` gives, for a sideband `q`,
//! `Gamma^2 = q^2 alpha (2 beta a^2 - alpha q^2)`; the wave is unstable where this is positive.

use std::f64::consts::PI;

use serde::Serialize;

use crate::envelope::{init_plane_wave, EnvelopeModel, EnvelopeSolver, SolverConfig};
use crate::spectral::{Grid, Spectral};
use crate::{Error, Result};

/// Growth rate of sideband `q`, or 0 outside the band.
pub fn predicted_growth(alpha: f64, beta: f64, a: f64, q: f64) -> f64 {
    let g2 = q * q * alpha * (2.0 * beta * a * a - alpha * q * q);
    if g2 > 0.0 {
        g2.sqrt()
    } else {
        0.0
    }
}

/// Upper edge of the unstable band, `a sqrt(2 beta / alpha)`, when `alpha beta > 0`.
pub fn band_edge(alpha: f64, beta: f64, a: f64) -> Option<f64> {
    (alpha * beta > 0.0).then(|| a * (2.0 * beta / alpha).sqrt())
}

/// Fastest-growing sideband and its rate `|beta| a^2`.
pub fn band_center(alpha: f64, beta: f64, a: f64) -> Option<(f64, f64)> {
    (alpha * beta > 0.0).then(|| (a * (beta / alpha).sqrt(), beta.abs() * a * a))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthConfig {
    pub points: usize,
    /// Domain length as a multiple of the sideband wavelength.
    pub periods: usize,
    pub dt: f64,
    /// Initial relative sideband amplitude.
    pub delta: f64,
    /// Fit window in units of the reference e-folding time.
    pub window: (f64, f64),
}

impl Default for GrowthConfig {
    fn default() -> Self {
        Self {
            points: 32,
            periods: 1,
            dt: 1e-2,
            delta: 1e-7,
            window: (3.0, 10.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthMeasurement {
    pub k: f64,
    pub a: f64,
    pub q: f64,
    pub measured: f64,
    pub predicted: f64,
    /// Slow-time window of the log-linear fit.
    pub window: (f64, f64),
}

impl GrowthMeasurement {
    pub fn relative_error(&self) -> f64 {
        (self.measured - self.predicted).abs() / self.predicted.abs()
    }
}

/// Runs the NLS from `a (1 + delta cos(q xi))` and fits the exponential growth
/// of the `q` Fourier mode. The window scales with the predicted e-folding time,
/// or with the band-center rate for stable sidebands.
pub fn measure_growth(model: &EnvelopeModel, a: f64, q: f64, cfg: &GrowthConfig) -> Result<GrowthMeasurement> {
    if model.carrier.k.len() != 1 {
        return Err(Error::UnsupportedSystem("growth measurement runs on 1D carriers".into()));
    }
    if !(q > 0.0) || cfg.periods == 0 {
        return Err(Error::InvalidInput(format!("sideband must be positive, got {q}")));
    }
    let alpha = model.nls.dispersion_coeff;
    let beta = model.nls.nonlinear_coeff.re;
    let predicted = predicted_growth(alpha, beta, a, q);
    let reference = if predicted > 0.0 {
        predicted
    } else {
        band_center(alpha, beta, a).map_or(beta.abs() * a * a, |(_, g)| g).max(1e-12)
    };
    let (t0, t1) = (cfg.window.0 / reference, cfg.window.1 / reference);
    let grid = Grid::new_1d(cfg.points, cfg.periods as f64 * 2.0 * PI / q)?;
    let mut state = init_plane_wave(&grid, a, q, cfg.delta, false)?;
    let mut solver = EnvelopeSolver::new(&grid, model, SolverConfig::new(cfg.dt))?;
    let mut sp = Spectral::new(&grid);
    let steps = (t1 / cfg.dt).ceil() as usize;
    let (mut ts, mut ys) = (Vec::new(), Vec::new());
    for s in 1..=steps {
        solver.integrate(&mut state, s as f64 * cfg.dt)?;
        if state.tau + 1e-12 >= t0 {
            let mut hat = state.a.clone();
            sp.forward(&mut hat);
            ts.push(state.tau);
            ys.push(hat[cfg.periods].norm().ln());
        }
    }
    Ok(GrowthMeasurement {
        k: model.carrier.k[0],
        a,
        q,
        measured: slope(&ts, &ys),
        predicted,
        window: (t0, t1),
    })
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
