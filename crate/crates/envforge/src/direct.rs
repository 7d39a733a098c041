//! Pseudo-spectral ETDRK4 integrator for the fifth-order toy PDE
//!
//! ```text
//! u_t + u_xxx + u_xxxxx + eps (u u_x + u u_xxx + u_x u_xx) = 0
//! ```
//!
//! on a periodic domain. This is the ground truth that reconstructed envelopes
//! are compared against.

use std::f64::consts::PI;

use crate::envelope::{EnvelopeModel, EnvelopeState, BLOWUP_THRESHOLD};
use crate::etd::EtdRk4;
use crate::spectral::{nan_max, Grid, Spectral};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct DirectField {
    pub grid: Grid,
    pub u: Vec<f64>,
    pub t: f64,
    pub eps: f64,
}

impl DirectField {
    pub fn zeros(grid: &Grid, eps: f64) -> Self {
        Self {
            grid: grid.clone(),
            u: vec![0.0; grid.len()],
            t: 0.0,
            eps,
        }
    }

    pub fn from_fn(grid: &Grid, eps: f64, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: grid.clone(),
            u: grid.xs().into_iter().map(f).collect(),
            t: 0.0,
            eps,
        }
    }

    /// `sum(u) dx`, conserved by the PDE.
    pub fn integral(&self) -> f64 {
        self.u.iter().sum::<f64>() * self.grid.dx()
    }

    pub fn max_abs(&self) -> f64 {
        self.u.iter().fold(0.0, |m, x| nan_max(m, x.abs()))
    }
}

/// Linear symbol of `-(d_x^3 + d_x^5)`: `-i (K^5 - K^3)`.
pub fn linear_symbol(kx: f64) -> C64 {
    C64::new(0.0, -(kx.powi(5) - kx.powi(3)))
}

/// Direct grid for an envelope domain of length `envelope_length` at `eps`:
/// `L_x = L_xi / eps`, with at least `points_per_wavelength` points per carrier
/// wavelength (rounded up to a power of two).
pub fn direct_grid(envelope_length: f64, eps: f64, k: f64, points_per_wavelength: usize) -> Result<Grid> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    let lx = envelope_length / eps;
    let waves = carrier_harmonic(k, lx).ok_or_else(|| Error::IncommensurateGrids {
        envelope_length,
        direct_length: lx,
        detail: format!("carrier k = {k} is not a harmonic of the direct domain"),
    })?;
    let n = (points_per_wavelength.max(4) * waves.unsigned_abs() as usize).next_power_of_two();
    Grid::new_1d(n, lx)
}

/// Mode number of `k` on a period `lx`, if it is (numerically) an integer.
fn carrier_harmonic(k: f64, lx: f64) -> Option<i64> {
    let m = k * lx / (2.0 * PI);
    let r = m.round();
    ((m - r).abs() <= 1e-9 * r.abs().max(1.0) && r != 0.0).then_some(r as i64)
}

pub(crate) fn check_commensurate(env: &Grid, direct: &Grid, eps: f64, k: f64) -> Result<()> {
    let err = |detail: String| Error::IncommensurateGrids {
        envelope_length: env.lx,
        direct_length: direct.lx,
        detail,
    };
    if env.dim() != 1 || direct.dim() != 1 {
        return Err(err("reconstruction is one-dimensional".into()));
    }
    if (direct.lx - env.lx / eps).abs() > 1e-9 * direct.lx {
        return Err(err(format!("expected L_x = L_xi / eps = {}", env.lx / eps)));
    }
    if carrier_harmonic(k, direct.lx).is_none() {
        return Err(err(format!("carrier k = {k} is not a harmonic of L_x")));
    }
    if direct.nx < env.nx {
        return Err(err(format!(
            "direct grid ({}) is coarser than the envelope grid ({})",
            direct.nx, env.nx
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectConfig {
    pub dt: f64,
    pub dealias: bool,
}

impl DirectConfig {
    pub fn new(dt: f64) -> Self {
        Self { dt, dealias: true }
    }
}

pub struct DirectSolver {
    grid: Grid,
    cfg: DirectConfig,
    eps: f64,
    sp: Spectral,
    kx: Vec<f64>,
    linear: Vec<C64>,
    mask: Vec<bool>,
    etd: Option<(f64, EtdRk4)>,
    imag_residue: f64,
}

impl DirectSolver {
    pub fn new(grid: &Grid, eps: f64, cfg: DirectConfig) -> Result<Self> {
        if grid.dim() != 1 {
            return Err(Error::GridMismatch("the toy PDE is one-dimensional".into()));
        }
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::InvalidInput(format!("eps must be >= 0, got {eps}")));
        }
        if !(cfg.dt > 0.0 && cfg.dt.is_finite()) {
            return Err(Error::InvalidInput(format!("dt must be positive, got {}", cfg.dt)));
        }
        let (kx, _) = grid.wavenumbers();
        let nyquist = grid.nx / 2;
        // the Nyquist mode has no conjugate partner under an odd symbol, so it is dropped
        let mut mask: Vec<bool> = if cfg.dealias {
            grid.dealias_mask()
        } else {
            vec![true; grid.len()]
        };
        mask[nyquist] = false;
        let linear = kx.iter().map(|&k| linear_symbol(k)).collect();
        Ok(Self {
            grid: grid.clone(),
            cfg,
            eps,
            sp: Spectral::new(grid),
            kx,
            linear,
            mask,
            etd: None,
            imag_residue: 0.0,
        })
    }

    /// Largest `|Im u| / |u|_inf` seen after an inverse transform so far.
    pub fn imag_residue(&self) -> f64 {
        self.imag_residue
    }

    fn check(&self, field: &DirectField) -> Result<()> {
        if field.grid != self.grid || field.u.len() != self.grid.len() {
            return Err(Error::GridMismatch(format!(
                "field grid {:?} vs solver grid {:?}",
                field.grid, self.grid
            )));
        }
        if field.eps != self.eps {
            return Err(Error::InvalidInput(format!(
                "field eps {} differs from solver eps {}",
                field.eps, self.eps
            )));
        }
        Ok(())
    }

    pub fn step(&mut self, field: &mut DirectField) -> Result<()> {
        self.step_with(field, self.cfg.dt)
    }

    fn step_with(&mut self, field: &mut DirectField, dt: f64) -> Result<()> {
        self.check(field)?;
        if !matches!(&self.etd, Some((h, _)) if *h == dt) {
            self.etd = Some((dt, EtdRk4::new(&self.linear, dt)));
        }
        let mut v = self.sp.forward_real(&field.u);
        v[self.grid.nx / 2] = C64::default();
        let (_, etd) = self.etd.as_ref().expect("built");
        let (eps, kx, mask, sp) = (self.eps, &self.kx, &self.mask, &mut self.sp);
        etd.step(&mut v, |w| Ok(nonlinear(w, eps, kx, mask, sp)))?;
        self.sp.inverse(&mut v);
        let peak = v.iter().map(|z| z.re.abs()).fold(0.0, nan_max);
        let imag = v.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        if peak > 0.0 {
            self.imag_residue = self.imag_residue.max(imag / peak);
        }
        field.u = v.into_iter().map(|z| z.re).collect();
        field.t += dt;
        if !(peak <= BLOWUP_THRESHOLD) {
            return Err(Error::BlowUp {
                time: field.t,
                max_amplitude: peak,
            });
        }
        Ok(())
    }

    /// Steps to `t_end`, shrinking the step so the run lands on it exactly.
    pub fn integrate(&mut self, field: &mut DirectField, t_end: f64) -> Result<()> {
        let span = t_end - field.t;
        if span < 0.0 {
            return Err(Error::InvalidInput(format!("t_end {t_end} is before the field time {}", field.t)));
        }
        if span == 0.0 {
            return Ok(());
        }
        let steps = (span / self.cfg.dt - 1e-9).ceil().max(1.0) as usize;
        let dt = span / steps as f64;
        let t0 = field.t;
        for s in 1..=steps {
            self.step_with(field, dt)?;
            field.t = t0 + s as f64 * dt;
        }
        field.t = t_end;
        Ok(())
    }
}

/// `-eps (u u_x + u u_xxx + u_x u_xx)` in spectral form, dealiased.
///
/// Real fields are packed in pairs, `u + i u_x` and `u_xx + i u_xxx`, so one
/// evaluation costs three FFTs.
fn nonlinear(v: &[C64], eps: f64, kx: &[f64], mask: &[bool], sp: &mut Spectral) -> Vec<C64> {
    if eps == 0.0 {
        return vec![C64::default(); v.len()];
    }
    let i = C64::i();
    let mut p: Vec<C64> = v.iter().zip(kx).map(|(z, &k)| z + i * (i * k * z)).collect();
    let mut q: Vec<C64> = v
        .iter()
        .zip(kx)
        .map(|(z, &k)| -k * k * z + i * (-i * k * k * k * z))
        .collect();
    sp.inverse(&mut p);
    sp.inverse(&mut q);
    let mut out: Vec<C64> = p
        .iter()
        .zip(&q)
        .map(|(a, b)| {
            let (u, ux, uxx, uxxx) = (a.re, a.im, b.re, b.im);
            C64::new(-eps * (u * ux + u * uxxx + ux * uxx), 0.0)
        })
        .collect();
    sp.forward(&mut out);
    for (z, &keep) in out.iter_mut().zip(mask) {
        if !keep {
            *z = C64::default();
        }
    }
    out
}

/// Initial data for the direct solver from an envelope state: the
/// reconstruction at `t = 0`.
pub fn init_from_envelope(env: &EnvelopeState, model: &EnvelopeModel, eps: f64, grid: &Grid) -> Result<DirectField> {
    crate::recon::reconstruct(env, model, eps, grid, 0.0)
}

/// Group velocity measured from the linear (eps = 0) motion of a Gaussian
/// packet `exp(-(x - x0)^2 / w^2) cos(k x)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PacketMeasurement {
    pub k: f64,
    /// Energy-centroid speeds at widths `w` and `2w`.
    pub speed_w: f64,
    pub speed_2w: f64,
    /// Richardson combination removing the `1/w^2` spectral-width bias.
    pub speed: f64,
}

/// The packet centroid moves at the spectrum-weighted mean of `w'(K)`, which
/// exceeds `w'(k)` by `w'''(k) / (2 w^2)`; two widths cancel that term.
pub fn measure_group_velocity(k: f64, width: f64, travel_time: f64) -> Result<PacketMeasurement> {
    let centroid_speed = |w: f64| -> Result<f64> {
        // room for +-6 widths plus the travel, an integer number of carrier waves
        let need = 16.0 * w + 2.0 * travel_time * (5.0 * k.powi(4) - 3.0 * k * k).abs();
        let waves = (need * k / (2.0 * PI)).ceil().max(1.0);
        let lx = waves * 2.0 * PI / k;
        let n = (16.0 * waves) as usize;
        let grid = Grid::new_1d(n.next_power_of_two(), lx)?;
        let x0 = lx / 2.0;
        let mut field = DirectField::from_fn(&grid, 0.0, |x| (-((x - x0) / w).powi(2)).exp() * (k * x).cos());
        let c0 = centroid(&field.u, &grid, x0);
        let mut solver = DirectSolver::new(&grid, 0.0, DirectConfig { dt: travel_time, dealias: false })?;
        solver.integrate(&mut field, travel_time)?;
        Ok((centroid(&field.u, &grid, x0) - c0) / travel_time)
    };
    let speed_w = centroid_speed(width)?;
    let speed_2w = centroid_speed(2.0 * width)?;
    Ok(PacketMeasurement {
        k,
        speed_w,
        speed_2w,
        speed: (4.0 * speed_2w - speed_w) / 3.0,
    })
}

/// Energy centroid, positions measured as the nearest image of `x0`.
fn centroid(u: &[f64], grid: &Grid, x0: f64) -> f64 {
    let lx = grid.lx;
    let (mut num, mut den) = (0.0, 0.0);
    for (i, v) in u.iter().enumerate() {
        let mut d = grid.x(i) - x0;
        d -= lx * (d / lx).round();
        num += d * v * v;
        den += v * v;
    }
    x0 + num / den
}
