//! Periodic grids and FFT helpers shared by the envelope and direct solvers.
//!
//! Fields are stored row-major with `x` fastest: index `j * nx + i`.
//! The forward transform is unnormalized, the inverse divides by `nx * ny`.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::{Error, Result, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl Grid {
    pub fn new_1d(n: usize, length: f64) -> Result<Self> {
        Self::new_2d(n, 1, length, 1.0)
    }

    /// `ny == 1` gives a 1D grid; `ly` is then ignored.
    pub fn new_2d(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if !nx.is_power_of_two() || !ny.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "grid sizes must be powers of two, got {nx} x {ny}"
            )));
        }
        if nx < 4 {
            return Err(Error::InvalidInput(format!("grid needs at least 4 points, got {nx}")));
        }
        if !(lx > 0.0 && lx.is_finite()) || (ny > 1 && !(ly > 0.0 && ly.is_finite())) {
            return Err(Error::InvalidInput(format!("domain lengths must be positive, got {lx}, {ly}")));
        }
        Ok(Self { nx, ny, lx, ly })
    }

    pub fn dim(&self) -> usize {
        if self.ny > 1 {
            2
        } else {
            1
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    /// Area (length in 1D) of one grid cell.
    pub fn cell(&self) -> f64 {
        if self.ny > 1 {
            self.dx() * self.ly / self.ny as f64
        } else {
            self.dx()
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    pub fn y(&self, j: usize) -> f64 {
        if self.ny > 1 {
            j as f64 * self.ly / self.ny as f64
        } else {
            0.0
        }
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    /// Wavenumber vectors (kx, ky) for every flat index.
    pub fn wavenumbers(&self) -> (Vec<f64>, Vec<f64>) {
        let mut kx = Vec::with_capacity(self.len());
        let mut ky = Vec::with_capacity(self.len());
        for j in 0..self.ny {
            let my = signed_index(j, self.ny);
            let wy = if self.ny > 1 { 2.0 * PI * my as f64 / self.ly } else { 0.0 };
            for i in 0..self.nx {
                kx.push(2.0 * PI * signed_index(i, self.nx) as f64 / self.lx);
                ky.push(wy);
            }
        }
        (kx, ky)
    }

    /// Integer mode numbers (mx, my) for every flat index.
    pub fn mode_numbers(&self) -> Vec<(i64, i64)> {
        let mut out = Vec::with_capacity(self.len());
        for j in 0..self.ny {
            for i in 0..self.nx {
                out.push((signed_index(i, self.nx), signed_index(j, self.ny)));
            }
        }
        out
    }

    /// 2/3-rule mask: `true` for retained modes (|m| < n/3 in every direction).
    pub fn dealias_mask(&self) -> Vec<bool> {
        self.mode_numbers()
            .into_iter()
            .map(|(mx, my)| keep_mode(mx, self.nx) && (self.ny == 1 || keep_mode(my, self.ny)))
            .collect()
    }

    pub fn flat(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
}

/// FFT index to signed mode number; the Nyquist index maps to `-n/2`.
pub fn signed_index(i: usize, n: usize) -> i64 {
    if i < n.div_ceil(2) {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

fn keep_mode(m: i64, n: usize) -> bool {
    3 * m.unsigned_abs() < n as u64
}

type FftPlan = Arc<dyn Fft<f64>>;

/// Forward/inverse transforms on a fixed grid. Not `Sync`: each integration owns its own.
pub struct Spectral {
    grid: Grid,
    fx: FftPlan,
    ix: FftPlan,
    fy: Option<(FftPlan, FftPlan)>,
    scratch: Vec<C64>,
    column: Vec<C64>,
}

impl Spectral {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        let fx = planner.plan_fft_forward(grid.nx);
        let ix = planner.plan_fft_inverse(grid.nx);
        let fy = (grid.ny > 1).then(|| (planner.plan_fft_forward(grid.ny), planner.plan_fft_inverse(grid.ny)));
        let scratch_len = fx
            .get_inplace_scratch_len()
            .max(ix.get_inplace_scratch_len())
            .max(fy.as_ref().map_or(0, |(f, i)| f.get_inplace_scratch_len().max(i.get_inplace_scratch_len())));
        Self {
            grid: grid.clone(),
            fx,
            ix,
            fy,
            scratch: vec![C64::default(); scratch_len],
            column: vec![C64::default(); grid.ny],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn forward(&mut self, data: &mut [C64]) {
        self.transform(data, true);
    }

    pub fn inverse(&mut self, data: &mut [C64]) {
        self.transform(data, false);
        let scale = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|z| *z *= scale);
    }

    pub fn forward_real(&mut self, data: &[f64]) -> Vec<C64> {
        let mut out: Vec<C64> = data.iter().map(|&x| C64::new(x, 0.0)).collect();
        self.forward(&mut out);
        out
    }

    /// Inverse transform returning the real part only.
    pub fn inverse_real(&mut self, spectrum: &[C64]) -> Vec<f64> {
        let mut tmp = spectrum.to_vec();
        self.inverse(&mut tmp);
        tmp.into_iter().map(|z| z.re).collect()
    }

    fn transform(&mut self, data: &mut [C64], forward: bool) {
        assert_eq!(data.len(), self.grid.len(), "field length does not match grid");
        let plan = if forward { &self.fx } else { &self.ix };
        for row in data.chunks_exact_mut(self.grid.nx) {
            plan.process_with_scratch(row, &mut self.scratch);
        }
        if let Some((f, i)) = &self.fy {
            let plan = if forward { f } else { i };
            let nx = self.grid.nx;
            for c in 0..nx {
                for (j, slot) in self.column.iter_mut().enumerate() {
                    *slot = data[j * nx + c];
                }
                plan.process_with_scratch(&mut self.column, &mut self.scratch);
                for (j, slot) in self.column.iter().enumerate() {
                    data[j * nx + c] = *slot;
                }
            }
        }
    }
}

pub fn apply_mask(spectrum: &mut [C64], mask: &[bool]) {
    for (z, &keep) in spectrum.iter_mut().zip(mask) {
        if !keep {
            *z = C64::default();
        }
    }
}

/// Spectrum of the derivative along `dir` (0 = x, 1 = y).
pub fn derivative(spectrum: &[C64], k: &[f64]) -> Vec<C64> {
    spectrum.iter().zip(k).map(|(z, &kk)| z * C64::new(0.0, kk)).collect()
}

/// Largest modulus; NaN if any entry is NaN, so blow-up checks see it.
pub fn max_abs(field: &[C64]) -> f64 {
    field.iter().map(|z| z.norm()).fold(0.0, nan_max)
}

/// `f64::max` that keeps NaN instead of discarding it.
pub(crate) fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_1d_and_2d() {
        for grid in [Grid::new_1d(16, 3.0).unwrap(), Grid::new_2d(8, 4, 2.0, 5.0).unwrap()] {
            let mut sp = Spectral::new(&grid);
            let orig: Vec<C64> = (0..grid.len()).map(|i| C64::new(i as f64 * 0.3, (i * i) as f64 * 0.01)).collect();
            let mut data = orig.clone();
            sp.forward(&mut data);
            sp.inverse(&mut data);
            for (a, b) in data.iter().zip(&orig) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn derivative_of_single_mode() {
        let grid = Grid::new_2d(16, 8, 4.0, 2.0).unwrap();
        let (kx, ky) = grid.wavenumbers();
        let mut sp = Spectral::new(&grid);
        let (wx, wy) = (2.0 * PI * 3.0 / 4.0, 2.0 * PI / 2.0);
        let mut f = vec![C64::default(); grid.len()];
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                f[grid.flat(i, j)] = C64::from_polar(1.0, wx * grid.x(i) + wy * grid.y(j));
            }
        }
        let mut spec = f.clone();
        sp.forward(&mut spec);
        let mut dx = derivative(&spec, &kx);
        let mut dy = derivative(&spec, &ky);
        sp.inverse(&mut dx);
        sp.inverse(&mut dy);
        for idx in 0..grid.len() {
            assert!((dx[idx] - f[idx] * C64::new(0.0, wx)).norm() < 1e-11);
            assert!((dy[idx] - f[idx] * C64::new(0.0, wy)).norm() < 1e-11);
        }
    }

    #[test]
    fn mask_keeps_lower_two_thirds() {
        let grid = Grid::new_1d(12usize.next_power_of_two(), 1.0).unwrap();
        let kept = grid.dealias_mask().iter().filter(|&&b| b).count();
        // n = 16: |m| <= 5 kept
        assert_eq!(kept, 11);
        assert!(Grid::new_1d(12, 1.0).is_err());
    }
}
