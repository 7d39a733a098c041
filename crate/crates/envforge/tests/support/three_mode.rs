//! Test-only oracle: brute-force Galerkin truncation of the NLS to three modes.

use envforge::C64;

/// Modes {-1, 0, 1} of `A_tau = i (alpha A_xx + beta |A|^2 A)` with wavenumber q,
/// cubic term projected by brute-force enumeration of triads.
pub fn three_mode_growth(alpha: f64, beta: f64, a: f64, q: f64) -> f64 {
    let rhs = |c: &[C64; 3]| -> [C64; 3] {
        let mut out = [C64::default(); 3];
        for (mi, o) in out.iter_mut().enumerate() {
            let m = mi as i32 - 1;
            let mut cubic = C64::default();
            for m1 in -1..=1i32 {
                for m2 in -1..=1i32 {
                    for m3 in -1..=1i32 {
                        if m1 + m2 - m3 == m {
                            cubic += c[(m1 + 1) as usize] * c[(m2 + 1) as usize] * c[(m3 + 1) as usize].conj();
                        }
                    }
                }
            }
            let disp = -alpha * (m as f64 * q).powi(2);
            *o = C64::i() * (disp * c[mi] + beta * cubic);
        }
        out
    };
    let mut c = [C64::new(1e-9 * a, 0.0), C64::new(a, 0.0), C64::new(1e-9 * a, 0.0)];
    let h = 1e-3;
    let g_ref = beta.abs() * a * a;
    let (mut ts, mut ys) = (Vec::new(), Vec::new());
    let steps = (12.0 / g_ref / h) as usize;
    for s in 1..=steps {
        let add = |x: &[C64; 3], k: &[C64; 3], f: f64| [x[0] + k[0] * f, x[1] + k[1] * f, x[2] + k[2] * f];
        let k1 = rhs(&c);
        let k2 = rhs(&add(&c, &k1, h / 2.0));
        let k3 = rhs(&add(&c, &k2, h / 2.0));
        let k4 = rhs(&add(&c, &k3, h));
        for i in 0..3 {
            c[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (h / 6.0);
        }
        let t = s as f64 * h;
        if t > 5.0 / g_ref {
            ts.push(t);
            ys.push(c[2].norm().ln());
        }
    }
    let n = ts.len() as f64;
    let mx = ts.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    ts.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / ts.iter().map(|x| (x - mx).powi(2)).sum::<f64>()
}
