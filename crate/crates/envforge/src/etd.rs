//! Fourth-order exponential time differencing (Cox-Matthews ETDRK4) for
//! diagonal linear parts, with coefficients from contour averages
//! (Kassam-Trefethen) so that small |hL| does not cancel.
//!
//! The contour is the full circle: the symbols here are mostly imaginary,
//! and the half-circle shortcut only works for real L.

use std::f64::consts::PI;

use crate::{Result, C64};

const CONTOUR_POINTS: usize = 64;

#[derive(Debug, Clone)]
pub struct EtdRk4 {
    dt: f64,
    e: Vec<C64>,
    e2: Vec<C64>,
    q: Vec<C64>,
    f1: Vec<C64>,
    f2: Vec<C64>,
    f3: Vec<C64>,
}

impl EtdRk4 {
    pub fn new(linear: &[C64], dt: f64) -> Self {
        let roots: Vec<C64> = (0..CONTOUR_POINTS)
            .map(|j| C64::from_polar(1.0, 2.0 * PI * (j as f64 + 0.5) / CONTOUR_POINTS as f64))
            .collect();
        let m = CONTOUR_POINTS as f64;
        let n = linear.len();
        let mut out = Self {
            dt,
            e: Vec::with_capacity(n),
            e2: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
            f1: Vec::with_capacity(n),
            f2: Vec::with_capacity(n),
            f3: Vec::with_capacity(n),
        };
        for &l in linear {
            let z = l * dt;
            out.e.push(z.exp());
            out.e2.push((z / 2.0).exp());
            let (mut q, mut f1, mut f2, mut f3) = (C64::default(), C64::default(), C64::default(), C64::default());
            for r in &roots {
                let lr = z + r;
                let ex = lr.exp();
                let lr3 = lr * lr * lr;
                q += ((lr / 2.0).exp() - 1.0) / lr;
                f1 += (-4.0 - lr + ex * (4.0 - 3.0 * lr + lr * lr)) / lr3;
                f2 += (2.0 + lr + ex * (lr - 2.0)) / lr3;
                f3 += (-4.0 - 3.0 * lr - lr * lr + ex * (4.0 - lr)) / lr3;
            }
            out.q.push(q * dt / m);
            out.f1.push(f1 * dt / m);
            out.f2.push(f2 * dt / m);
            out.f3.push(f3 * dt / m);
        }
        out
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// One step of `v' = L v + N(v)`; `nonlinear` must return N(v) in the same
    /// (spectral) representation as `v`.
    pub fn step<F>(&self, v: &mut [C64], mut nonlinear: F) -> Result<()>
    where
        F: FnMut(&[C64]) -> Result<Vec<C64>>,
    {
        let n = v.len();
        let nv = nonlinear(v)?;
        let a: Vec<C64> = (0..n).map(|i| self.e2[i] * v[i] + self.q[i] * nv[i]).collect();
        let na = nonlinear(&a)?;
        let b: Vec<C64> = (0..n).map(|i| self.e2[i] * v[i] + self.q[i] * na[i]).collect();
        let nb = nonlinear(&b)?;
        let c: Vec<C64> = (0..n)
            .map(|i| self.e2[i] * a[i] + self.q[i] * (2.0 * nb[i] - nv[i]))
            .collect();
        let nc = nonlinear(&c)?;
        for i in 0..n {
            v[i] = self.e[i] * v[i]
                + self.f1[i] * nv[i]
                + 2.0 * self.f2[i] * (na[i] + nb[i])
                + self.f3[i] * nc[i];
        }
        Ok(())
    }
}
