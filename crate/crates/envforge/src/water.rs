//! Deep-water operator kit: DtN expansion terms, the `D/|D|` multiplier,
//! the mean-flow inversion and the assembled (A, B) right-hand side.
//!
//! Conventions: `D = -i grad` (symbol `K`), `|D|` has symbol `|K|`. All
//! non-local operators act on envelope-scale fields only.

use crate::coeffs::pair_harmonic_multiplier;
use crate::envelope::{EnvelopeModel, Forcing};
use crate::spectral::{apply_mask, Grid, Spectral};
use crate::{Error, Result, C64};

/// Leading-order surface pair `u = A v`, `v = [i w, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfacePairMode {
    pub amplitude: C64,
    pub k: Vec<f64>,
    pub omega: f64,
}

impl SurfacePairMode {
    pub fn new(amplitude: C64, k: &[f64]) -> Self {
        let omega = crate::system::norm(k).sqrt();
        Self {
            amplitude,
            k: k.to_vec(),
            omega,
        }
    }

    /// `[zeta, psi]` amplitudes.
    pub fn state(&self) -> [C64; 2] {
        [self.amplitude * C64::new(0.0, self.omega), self.amplitude]
    }

    /// `|L_1 (A v)|`, zero for an exact linear mode.
    pub fn linear_residual(&self) -> f64 {
        let l = pair_harmonic_multiplier(&self.k, self.omega, 1);
        let u = self.state();
        let r0 = l[0][0] * u[0] + l[0][1] * u[1];
        let r1 = l[1][0] * u[0] + l[1][1] * u[1];
        r0.norm().max(r1.norm())
    }
}

/// Multipliers for the DtN expansion on one grid.
pub struct DtnOperator {
    grid: Grid,
    sp: Spectral,
    kx: Vec<f64>,
    ky: Vec<f64>,
    abs_k: Vec<f64>,
    mask: Vec<bool>,
}

impl DtnOperator {
    pub fn new(grid: &Grid) -> Self {
        let (kx, ky) = grid.wavenumbers();
        let abs_k = kx.iter().zip(&ky).map(|(x, y)| x.hypot(*y)).collect();
        Self {
            grid: grid.clone(),
            sp: Spectral::new(grid),
            kx,
            ky,
            abs_k,
            mask: grid.dealias_mask(),
        }
    }

    fn hat(&mut self, f: &[f64]) -> Vec<C64> {
        self.sp.forward_real(f)
    }

    fn real(&mut self, mut f: Vec<C64>) -> Vec<f64> {
        self.sp.inverse(&mut f);
        f.into_iter().map(|z| z.re).collect()
    }

    fn times(&self, h: &[C64], m: &[f64]) -> Vec<C64> {
        h.iter().zip(m).map(|(z, k)| z * k).collect()
    }

    fn abs_d(&self, h: &[C64]) -> Vec<C64> {
        self.times(h, &self.abs_k)
    }

    fn laplacian(&self, h: &[C64]) -> Vec<C64> {
        h.iter().zip(&self.abs_k).map(|(z, k)| -z * k * k).collect()
    }

    fn partial(&self, h: &[C64], dir: usize) -> Vec<C64> {
        let k = if dir == 0 { &self.kx } else { &self.ky };
        h.iter().zip(k).map(|(z, k)| z * C64::new(0.0, *k)).collect()
    }

    /// Spectrum of the dealiased pointwise product of `a` with the field of spectrum `b`.
    fn product(&mut self, a: &[f64], b: Vec<C64>) -> Vec<C64> {
        let b = self.real(b);
        let p: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        let mut h = self.hat(&p);
        apply_mask(&mut h, &self.mask);
        h
    }

    /// `G_n[zeta] psi` for `n` in 0..=2.
    pub fn apply(&mut self, n: usize, zeta: &[f64], psi: &[f64]) -> Result<Vec<f64>> {
        let terms = self.terms(n, zeta, psi)?;
        let mut out = vec![0.0; self.grid.len()];
        for t in &terms {
            out.iter_mut().zip(t).for_each(|(o, v)| *o += v);
        }
        Ok(out)
    }

    /// The separate terms of `G_n[zeta] psi`, signs and factors included.
    ///
    /// For smooth fields the terms of `G_2` cancel by orders of magnitude, so
    /// their sizes are the right yardstick for round-off.
    pub fn terms(&mut self, n: usize, zeta: &[f64], psi: &[f64]) -> Result<Vec<Vec<f64>>> {
        let len = self.grid.len();
        if zeta.len() != len || psi.len() != len {
            return Err(Error::GridMismatch(format!(
                "grid has {len} points, got zeta {} and psi {}",
                zeta.len(),
                psi.len()
            )));
        }
        // fields stay spectral between multipliers; only products visit physical space
        let ph = self.hat(psi);
        let spectra: Vec<Vec<C64>> = match n {
            0 => vec![self.abs_d(&ph)],
            1 => {
                let zd = self.product(zeta, self.abs_d(&ph));
                let mut out = vec![self.abs_d(&zd).into_iter().map(|z| -z).collect()];
                for dir in 0..self.grid.dim() {
                    let flux = self.product(zeta, self.partial(&ph, dir));
                    out.push(self.partial(&flux, dir).into_iter().map(|z| -z).collect());
                }
                out
            }
            2 => {
                let inner = self.product(zeta, self.abs_d(&ph));
                let inner = self.product(zeta, self.abs_d(&inner));
                let t1 = self.abs_d(&inner);
                let z2: Vec<f64> = zeta.iter().map(|z| z * z).collect();
                let t2 = self.product(&z2, self.abs_d(&ph));
                let t2 = self.laplacian(&t2).into_iter().map(|z| 0.5 * z).collect();
                let t3 = self.product(&z2, self.laplacian(&ph));
                let t3 = self.abs_d(&t3).into_iter().map(|z| 0.5 * z).collect();
                vec![t1, t2, t3]
            }
            _ => return Err(Error::InvalidInput(format!("DtN terms G_0..G_2 only, got G_{n}"))),
        };
        Ok(spectra.into_iter().map(|h| self.real(h)).collect())
    }
}

pub fn apply_dtn_term(grid: &Grid, n: usize, zeta: &[f64], psi: &[f64]) -> Result<Vec<f64>> {
    DtnOperator::new(grid).apply(n, zeta, psi)
}

/// Component `dir` of the symbol `K/|K|`, zero at `K = 0`.
pub fn hilbert_symbol(kx: f64, ky: f64, dir: usize) -> f64 {
    let r = kx.hypot(ky);
    if r == 0.0 {
        0.0
    } else if dir == 0 {
        kx / r
    } else {
        ky / r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HilbertOutput {
    pub field: Vec<C64>,
    /// Mean that was projected out before applying the multiplier.
    pub projected_mean: C64,
}

/// Component `direction` of `D/|D|` applied to a periodic field.
pub fn hilbert_like(grid: &Grid, field: &[C64], direction: usize) -> Result<HilbertOutput> {
    if field.len() != grid.len() {
        return Err(Error::GridMismatch(format!("{} values on a {}-point grid", field.len(), grid.len())));
    }
    if direction >= grid.dim() {
        return Err(Error::InvalidInput(format!("direction {direction} on a {}D grid", grid.dim())));
    }
    let (kx, ky) = grid.wavenumbers();
    let mut sp = Spectral::new(grid);
    let mut h = field.to_vec();
    sp.forward(&mut h);
    let projected_mean = h[0] / grid.len() as f64;
    for (i, z) in h.iter_mut().enumerate() {
        *z *= hilbert_symbol(kx[i], ky[i], direction);
    }
    sp.inverse(&mut h);
    Ok(HilbertOutput { field: h, projected_mean })
}

/// Spectrum of `(D/|D|) . D_xi f`, i.e. `sum_j (K_j/|K|) K_j f_hat = |K| f_hat`.
pub fn nonlocal_slope(f_hat: &[C64], kx: &[f64], ky: &[f64], dim: usize) -> Vec<C64> {
    (0..f_hat.len())
        .map(|i| {
            let mut s = hilbert_symbol(kx[i], ky[i], 0) * kx[i];
            if dim > 1 {
                s += hilbert_symbol(kx[i], ky[i], 1) * ky[i];
            }
            f_hat[i] * s
        })
        .collect()
}

/// Inverts `k . grad psi = c |A|^2` mode by mode from the intensity spectrum.
///
/// The mean of the intensity is dropped (gauge `psi_hat(0) = 0`); modes with
/// `k . K = 0`, `K != 0` are nulled and counted.
pub fn meanflow_spectrum(intensity_hat: &[C64], kx: &[f64], ky: &[f64], k: &[f64], c: f64) -> (Vec<C64>, usize) {
    let (k0, k1) = (k[0], k.get(1).copied().unwrap_or(0.0));
    let scale = k0.hypot(k1) * kx.iter().chain(ky).fold(0.0f64, |m, v| m.max(v.abs()));
    let mut nulled = 0;
    let out = (0..intensity_hat.len())
        .map(|i| {
            if kx[i] == 0.0 && ky[i] == 0.0 {
                return C64::default();
            }
            let kk = k0 * kx[i] + k1 * ky[i];
            if kk.abs() <= 1e-12 * scale {
                nulled += 1;
                return C64::default();
            }
            c * intensity_hat[i] / C64::new(0.0, kk)
        })
        .collect();
    (out, nulled)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanFlow {
    pub psi: Vec<f64>,
    /// Transverse modes set to zero.
    pub nulled_modes: usize,
    /// Mean of `|A|^2` removed before the inversion.
    pub removed_mean: f64,
}

/// `psi1` from `k . grad psi1 = c |A|^2`; `c = -|k|^4/w` for deep water.
pub fn solve_meanflow(grid: &Grid, a: &[C64], k: &[f64], c: f64) -> Result<MeanFlow> {
    if a.len() != grid.len() {
        return Err(Error::GridMismatch(format!("{} values on a {}-point grid", a.len(), grid.len())));
    }
    if k.len() != grid.dim() || k.iter().all(|&x| x == 0.0) {
        return Err(Error::InvalidInput(format!("carrier {k:?} does not fit a {}D grid", grid.dim())));
    }
    let (kx, ky) = grid.wavenumbers();
    let mut sp = Spectral::new(grid);
    let mut ih: Vec<C64> = a.iter().map(|z| C64::new(z.norm_sqr(), 0.0)).collect();
    sp.forward(&mut ih);
    let removed_mean = ih[0].re / grid.len() as f64;
    let (mut psi, nulled_modes) = meanflow_spectrum(&ih, &kx, &ky, k, c);
    sp.inverse(&mut psi);
    Ok(MeanFlow {
        psi: psi.into_iter().map(|z| z.re).collect(),
        nulled_modes,
        removed_mean,
    })
}

/// Per-mode residual of `(D/|D|) D_xi psi = -(k/|k|) D_xi psi` with `D/|D|`
/// taken at the wavenumber `-k + eps K` it meets on the carrier side.
///
/// Zero for every resolved mode with `eps |K| < |k|` aligned with `k`.
pub fn useful_relation_residuals(grid: &Grid, psi: &[f64], k: &[f64], eps: f64) -> Result<Vec<f64>> {
    if psi.len() != grid.len() {
        return Err(Error::GridMismatch(format!("{} values on a {}-point grid", psi.len(), grid.len())));
    }
    let (kx, ky) = grid.wavenumbers();
    let kv = [k[0], k.get(1).copied().unwrap_or(0.0)];
    let kn = kv[0].hypot(kv[1]);
    let mut sp = Spectral::new(grid);
    let ph = sp.forward_real(psi);
    Ok((0..grid.len())
        .map(|i| {
            let q = [-kv[0] + eps * kx[i], -kv[1] + eps * ky[i]];
            let qn = q[0].hypot(q[1]);
            let grad = [ph[i] * kx[i], ph[i] * ky[i]];
            (0..2)
                .map(|j| ((q[j] / qn + kv[j] / kn) * grad[j]).norm())
                .fold(0.0, f64::max)
        })
        .collect())
}

/// Full right-hand sides of the deep-water (A, B) system in physical space.
#[derive(Debug, Clone, PartialEq)]
pub struct WaterRhs {
    pub da: Vec<C64>,
    pub db: Vec<C64>,
    pub meanflow: Vec<f64>,
    pub nulled_modes: usize,
}

pub fn assemble_water_hnls_rhs(grid: &Grid, model: &EnvelopeModel, a: &[C64], b: &[C64]) -> Result<WaterRhs> {
    if model.hnls.water.is_none() {
        return Err(Error::UnsupportedSystem("the water right-hand side needs deep-water coefficients".into()));
    }
    if a.len() != grid.len() || b.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "A has {}, B has {} values on a {}-point grid",
            a.len(),
            b.len(),
            grid.len()
        )));
    }
    let mut f = Forcing::new(grid, model, true)?;
    let mut sp = Spectral::new(grid);
    let (kx, ky) = grid.wavenumbers();
    let mut ah = a.to_vec();
    let mut bh = b.to_vec();
    sp.forward(&mut ah);
    sp.forward(&mut bh);
    let (mut na, mut nb) = f.hnls(&ah, &bh);
    let alpha = model.nls.dispersion_coeff;
    for i in 0..grid.len() {
        let l = C64::new(0.0, -alpha * (kx[i] * kx[i] + ky[i] * ky[i])) - model.nls.damping;
        na[i] += l * ah[i];
        nb[i] += l * bh[i];
    }
    sp.inverse(&mut na);
    sp.inverse(&mut nb);
    let (meanflow, nulled_modes) = f.meanflow.take().unwrap_or_default();
    Ok(WaterRhs {
        da: na,
        db: nb,
        meanflow,
        nulled_modes,
    })
}
