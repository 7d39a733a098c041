//! Envelope-equation coefficients from multipliers, with every harmonic
//! inversion recorded and residual-checked.
//!
//! Normalizations. The NLS slots use the form
//! `i A_tau + alpha lap(A) + beta |A|^2 A + i V A = 0`, i.e.
//! `A_tau = i alpha lap(A) + i beta |A|^2 A - V A`.
//! The B-equation slots are stored as right-hand-side coefficients of
//! `B_tau = i alpha lap(B) - V B + (slots)`, where first and third derivatives
//! are taken along the carrier direction `d = k/|k|`.
//!
//! Scalar systems carry an induced mean flow `m2 = mu |A|^2` at zero
//! harmonic, driven by the slow operator `d0 = w'(0) - c_g`; it is folded
//! into `beta` and into the steepening slots.

use serde::Serialize;

use crate::system::{carrier_setup, norm, water_bilinear, water_linear, CarrierSetup, Model, ScalarMultipliers, SystemSpec};
use crate::{Error, Result, C64};

const RESIDUAL_TOL: f64 = 1e-12;
const SINGULAR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Amplitude {
    Scalar(C64),
    Pair([C64; 2]),
}

impl Amplitude {
    pub fn norm(&self) -> f64 {
        match self {
            Amplitude::Scalar(z) => z.norm(),
            Amplitude::Pair(v) => (v[0].norm_sqr() + v[1].norm_sqr()).sqrt(),
        }
    }

    pub fn scalar(&self) -> Option<C64> {
        match self {
            Amplitude::Scalar(z) => Some(*z),
            Amplitude::Pair(_) => None,
        }
    }

    pub fn pair(&self) -> Option<[C64; 2]> {
        match self {
            Amplitude::Pair(v) => Some(*v),
            Amplitude::Scalar(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum HarmonicMultiplier {
    Scalar(C64),
    Matrix([[C64; 2]; 2]),
}

impl HarmonicMultiplier {
    pub fn apply(&self, x: &Amplitude) -> Amplitude {
        match (self, x) {
            (HarmonicMultiplier::Scalar(l), Amplitude::Scalar(z)) => Amplitude::Scalar(l * z),
            (HarmonicMultiplier::Matrix(m), Amplitude::Pair(v)) => Amplitude::Pair([
                m[0][0] * v[0] + m[0][1] * v[1],
                m[1][0] * v[0] + m[1][1] * v[1],
            ]),
            _ => panic!("multiplier and amplitude kinds differ"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonicSolveRecord {
    pub label: String,
    /// Harmonic index. Index 0 with a scalar system records the slow
    /// mean-flow inversion, whose multiplier is `w'(0) - c_g`.
    pub n: i32,
    pub multiplier: HarmonicMultiplier,
    pub forcing: Amplitude,
    pub solution: Amplitude,
    pub residual: f64,
}

impl HarmonicSolveRecord {
    pub fn within_tolerance(&self) -> bool {
        self.residual <= RESIDUAL_TOL * self.forcing.norm().max(1.0)
    }
}

fn residual(l: &HarmonicMultiplier, x: &Amplitude, f: &Amplitude) -> f64 {
    match (l.apply(x), f) {
        (Amplitude::Scalar(a), Amplitude::Scalar(b)) => (a - b).norm(),
        (Amplitude::Pair(a), Amplitude::Pair(b)) => ((a[0] - b[0]).norm_sqr() + (a[1] - b[1]).norm_sqr()).sqrt(),
        _ => f64::INFINITY,
    }
}

/// `L_n = -i n w + J(nk)` for a scalar system.
pub fn scalar_harmonic_multiplier(m: &ScalarMultipliers, k: f64, omega: f64, n: i32) -> C64 {
    C64::new(0.0, -(n as f64) * omega) + m.linear.eval(&[n as f64 * k])
}

/// `L_n = -i n w I + J(nk)` for the surface pair.
pub fn pair_harmonic_multiplier(k: &[f64], omega: f64, n: i32) -> [[C64; 2]; 2] {
    let nk: Vec<f64> = k.iter().map(|x| n as f64 * x).collect();
    let mut m = water_linear(&nk);
    let diag = C64::new(0.0, -(n as f64) * omega);
    m[0][0] += diag;
    m[1][1] += diag;
    m
}

pub fn harmonic_solve(
    spec: &SystemSpec,
    carrier: &CarrierSetup,
    n: i32,
    forcing: Amplitude,
) -> Result<HarmonicSolveRecord> {
    labelled_solve(spec, carrier, n, forcing, &format!("harmonic {n}"))
}

fn labelled_solve(
    spec: &SystemSpec,
    carrier: &CarrierSetup,
    n: i32,
    forcing: Amplitude,
    label: &str,
) -> Result<HarmonicSolveRecord> {
    if n == 1 {
        return Err(Error::ResonantHarmonic);
    }
    if n < 0 {
        return Err(Error::InvalidInput(format!("harmonic index must be 0 or >= 2, got {n}")));
    }
    let singular = |magnitude: f64| Error::SingularHarmonic {
        n,
        k: carrier.k.clone(),
        magnitude,
    };
    let w = carrier.omega;
    let (multiplier, solution) = match (&spec.model, forcing) {
        (Model::Scalar(m), Amplitude::Scalar(f)) => {
            let j = m.linear.eval(&[n as f64 * carrier.k[0]]);
            let l = C64::new(0.0, -(n as f64) * w) + j;
            let scale = (n as f64 * w).abs().max(j.norm()).max(1.0);
            if l.norm() < SINGULAR_TOL * scale {
                return Err(singular(l.norm()));
            }
            (HarmonicMultiplier::Scalar(l), Amplitude::Scalar(f / l))
        }
        (Model::DeepWater, Amplitude::Pair(f)) => {
            let m = pair_harmonic_multiplier(&carrier.k, w, n);
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            let scale = (n as f64 * norm(&carrier.k)).max(n as f64 * w).max(1.0);
            if det.norm() < SINGULAR_TOL * scale * scale {
                return Err(singular(det.norm()));
            }
            let x0 = (m[1][1] * f[0] - m[0][1] * f[1]) / det;
            let x1 = (m[0][0] * f[1] - m[1][0] * f[0]) / det;
            (HarmonicMultiplier::Matrix(m), Amplitude::Pair([x0, x1]))
        }
        _ => {
            return Err(Error::InvalidInput(
                "forcing kind does not match the system state kind".into(),
            ))
        }
    };
    let residual = residual(&multiplier, &solution, &forcing);
    Ok(HarmonicSolveRecord {
        label: label.into(),
        n,
        multiplier,
        forcing,
        solution,
        residual,
    })
}

/// Induced mean flow of a scalar system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanFlowCoefficients {
    /// `m2 = mu |A|^2`.
    pub mu: C64,
    /// Slow zero-harmonic operator `w'(0) - c_g`.
    pub d0: f64,
    /// `2 H_s(k, 0)`: how the mean multiplies the carrier amplitude.
    pub carrier_coupling: C64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NlsCoefficients {
    pub k: Vec<f64>,
    pub omega: f64,
    pub group_velocity: Vec<f64>,
    /// `alpha = w''/2` (scalar) or `-1/(8 w^3)` (deep water).
    pub dispersion_coeff: f64,
    /// `beta` in `i A_tau + alpha lap(A) + beta |A|^2 A + i V A = 0`.
    pub nonlinear_coeff: C64,
    pub damping: C64,
    pub phi0: Amplitude,
    pub mean_flow: Option<MeanFlowCoefficients>,
    pub records: Vec<HarmonicSolveRecord>,
}

/// Mean-flow pieces of a scalar B-equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalarMeanFlowTerms {
    /// Next-order mean `m3 = nu1 Im(conj(A) A_xi) + nu2 Re(conj(A) B) + nu3 d_xi |A|^2 (+ non-local part)`.
    pub nu1: C64,
    pub nu2: C64,
    pub nu3: C64,
    /// Damping-driven mean: `d_xi m3' = kappa (|A|^2 - <|A|^2>)`, enters `B_tau` as `-carrier_coupling m3' A`.
    pub kappa: C64,
    pub carrier_coupling: C64,
}

/// Deep-water B-equation terms that have no scalar analogue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaterTerms {
    /// Coefficient of `A |D| |A|^2` in `B_tau` (`D/|D|` contracted with the slow gradient).
    pub nonlocal_intensity: C64,
    /// Coefficient of `B |D| psi1` in `B_tau`.
    pub nonlocal_meanflow: C64,
    /// Right side of `k . grad psi1 = c |A|^2`.
    pub meanflow_constraint: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HnlsCoefficients {
    pub k: Vec<f64>,
    /// Coefficient of `d_d lap(A)` (scalar: `w'''/6`).
    pub third_deriv_coeff: C64,
    /// Second harmonic of `A d_xi A`.
    pub psi1: Amplitude,
    /// Second harmonic of `A B`.
    pub psi2: Amplitude,
    /// Third harmonic of `A^3`.
    pub psi3: Amplitude,
    /// Coefficient of `|A|^2 d_d A`.
    pub selfsteep_coeff: C64,
    /// Coefficient of `A^2 d_d conj(A)`.
    pub conj_steep_coeff: C64,
    /// Coefficient of `|A|^2 B`.
    pub coupling_ab: C64,
    /// Coefficient of `A^2 conj(B)`.
    pub coupling_a2bbar: C64,
    /// `dV/d|k|`; enters as `+ i V' d_d A`.
    pub damping_derivative: C64,
    pub mean_flow: Option<ScalarMeanFlowTerms>,
    pub water: Option<WaterTerms>,
    pub records: Vec<HarmonicSolveRecord>,
}

impl NlsCoefficients {
    pub fn dim(&self) -> usize {
        self.k.len()
    }

    pub fn records_within_tolerance(&self) -> bool {
        self.records.iter().all(HarmonicSolveRecord::within_tolerance)
    }
}

impl HnlsCoefficients {
    pub fn records_within_tolerance(&self) -> bool {
        self.records.iter().all(HarmonicSolveRecord::within_tolerance)
    }
}

/// Derivative helper around a scalar system at a carrier.
struct Scalar<'a> {
    m: &'a ScalarMultipliers,
    k: f64,
}

impl Scalar<'_> {
    fn hs(&self, a: f64, b: f64) -> C64 {
        self.m.bilinear.symmetric(&[a, b])
    }
    fn hd(&self, a: f64, b: f64, o: [u32; 2]) -> C64 {
        self.m.bilinear.symmetric_partial(&[a, b], &o)
    }
    fn ts(&self, x: [f64; 3]) -> C64 {
        self.m.trilinear.as_ref().map_or(C64::default(), |t| t.symmetric(&x))
    }
    fn td(&self, x: [f64; 3], o: [u32; 3]) -> C64 {
        self.m
            .trilinear
            .as_ref()
            .map_or(C64::default(), |t| t.symmetric_partial(&x, &o))
    }
    /// Real `w'(q)`.
    fn sigma1(&self, q: f64) -> f64 {
        (-C64::i() * self.m.linear.partial(&[q], &[1])).re
    }
    fn tol(&self) -> f64 {
        1e-10 * self.hs(self.k, self.k).norm().max(1.0)
    }
}

pub fn nls_coefficients(spec: &SystemSpec, carrier: &CarrierSetup) -> Result<NlsCoefficients> {
    let damping = spec.damping(&carrier.k);
    match &spec.model {
        Model::Scalar(m) => scalar_nls(spec, m, carrier, damping),
        Model::DeepWater => {
            let w = carrier.omega;
            let kn = carrier.k_norm();
            let v = pair_eigenvector(w);
            let k2 = to2(&carrier.k);
            let f = water_bilinear(k2, k2, v, v);
            let phi0 = labelled_solve(spec, carrier, 2, Amplitude::Pair(f), "phi0")?;
            Ok(NlsCoefficients {
                k: carrier.k.clone(),
                omega: w,
                group_velocity: carrier.group_velocity.clone(),
                dispersion_coeff: 0.5 * carrier.dispersion_curvature,
                nonlinear_coeff: C64::new(-kn.powi(4) / w, 0.0),
                damping,
                phi0: phi0.solution,
                mean_flow: None,
                records: vec![phi0],
            })
        }
    }
}

fn scalar_nls(
    spec: &SystemSpec,
    m: &ScalarMultipliers,
    carrier: &CarrierSetup,
    damping: C64,
) -> Result<NlsCoefficients> {
    let k = carrier.k[0];
    let s = Scalar { m, k };
    let tol = s.tol();
    let h0 = s.hs(k, -k);
    if h0.norm() > tol {
        return Err(Error::ZeroHarmonicForcing(format!(
            "H_s(k, -k) = {h0} forces the zero harmonic at leading order"
        )));
    }
    let g1 = s.hd(k, -k, [1, 0]);
    let g2 = s.hd(k, -k, [0, 1]);
    if (g1 - g2).norm() > tol {
        return Err(Error::ZeroHarmonicForcing(format!(
            "mean-flow forcing is not a slow derivative (dH_s/dk1 = {g1}, dH_s/dk2 = {g2} at (k, -k))"
        )));
    }
    let d0 = s.sigma1(0.0) - carrier.group_velocity[0];
    let phi0 = labelled_solve(spec, carrier, 2, Amplitude::Scalar(-s.hs(k, k)), "phi0")?;
    let phi0_v = phi0.solution.scalar().expect("scalar solve");

    let forcing_mu = 2.0 * C64::i() * g1;
    let mu = if forcing_mu.norm() <= tol {
        C64::default()
    } else if d0.abs() < SINGULAR_TOL * carrier.group_velocity[0].abs().max(1.0) {
        return Err(Error::ZeroHarmonicForcing(format!(
            "long waves travel with the group velocity (w'(0) - c_g = {d0:e}); the induced mean flow is resonant"
        )));
    } else {
        forcing_mu / d0
    };
    let mean_record = HarmonicSolveRecord {
        label: "mean_flow".into(),
        n: 0,
        multiplier: HarmonicMultiplier::Scalar(C64::new(d0, 0.0)),
        forcing: Amplitude::Scalar(forcing_mu),
        solution: Amplitude::Scalar(mu),
        residual: (mu * d0 - forcing_mu).norm(),
    };

    let coupling = 2.0 * s.hs(k, 0.0);
    let beta_raw = coupling * mu + 2.0 * s.hs(-k, 2.0 * k) * phi0_v + 3.0 * s.ts([k, k, -k]);
    Ok(NlsCoefficients {
        k: carrier.k.clone(),
        omega: carrier.omega,
        group_velocity: carrier.group_velocity.clone(),
        dispersion_coeff: 0.5 * carrier.dispersion_curvature,
        nonlinear_coeff: C64::i() * beta_raw,
        damping,
        phi0: phi0.solution,
        mean_flow: Some(MeanFlowCoefficients {
            mu,
            d0,
            carrier_coupling: coupling,
        }),
        records: vec![phi0, mean_record],
    })
}

pub fn hnls_coefficients(
    spec: &SystemSpec,
    carrier: &CarrierSetup,
    nls: &NlsCoefficients,
) -> Result<HnlsCoefficients> {
    match &spec.model {
        Model::Scalar(m) => scalar_hnls(spec, m, carrier, nls),
        Model::DeepWater => water_hnls(spec, carrier, nls),
    }
}

fn scalar_hnls(
    spec: &SystemSpec,
    m: &ScalarMultipliers,
    carrier: &CarrierSetup,
    nls: &NlsCoefficients,
) -> Result<HnlsCoefficients> {
    let k = carrier.k[0];
    let dir = k.signum();
    let s = Scalar { m, k };
    let i = C64::i();
    let mf = nls
        .mean_flow
        .ok_or_else(|| Error::InvalidInput("scalar NLS coefficients lack mean-flow data".into()))?;
    let (mu, d0) = (mf.mu, mf.d0);
    let phi0 = nls.phi0.scalar().expect("scalar system");
    let cg = carrier.group_velocity[0];
    let s2 = carrier.dispersion_curvature;

    let d2 = s.sigma1(2.0 * k) - cg;
    let f_psi1 = -(2.0 * d2 * phi0 - 2.0 * i * s.hd(k, k, [1, 0]));
    let psi1 = labelled_solve(spec, carrier, 2, Amplitude::Scalar(f_psi1), "psi1")?;
    let psi2 = labelled_solve(spec, carrier, 2, Amplitude::Scalar(-2.0 * s.hs(k, k)), "psi2")?;
    let f_psi3 = -(2.0 * s.hs(k, 2.0 * k) * phi0 + s.ts([k, k, k]));
    let psi3 = labelled_solve(spec, carrier, 3, Amplitude::Scalar(f_psi3), "psi3")?;
    let psi1_v = psi1.solution.scalar().expect("scalar solve");

    let g = s.hd(k, -k, [1, 0]);
    let h11 = s.hd(k, -k, [2, 0]);
    let h22 = s.hd(k, -k, [0, 2]);
    let h12 = s.hd(k, -k, [1, 1]);
    let uses_mean = mu != C64::default() || g != C64::default() || h11 != C64::default();
    if (h11 - 2.0 * h12 + h22).norm() > s.tol() {
        return Err(Error::ZeroHarmonicForcing(format!(
            "second-order mean forcing contains |A_xi|^2 (H_11 - 2 H_12 + H_22 = {})",
            h11 - 2.0 * h12 + h22
        )));
    }
    let a = (h11 + h22) / 2.0;
    let b = (h11 - h22) / 2.0;
    let (nu1, nu2, nu3) = if uses_mean {
        ((mu * s2 + 2.0 * i * b) / d0, 4.0 * i * g / d0, a / d0)
    } else {
        Default::default()
    };

    let e1 = s.hd(k, 0.0, [1, 0]);
    let e2 = s.hd(k, 0.0, [0, 1]);
    let f1 = s.hd(-k, 2.0 * k, [1, 0]);
    let f2 = s.hd(-k, 2.0 * k, [0, 1]);
    let hk0 = mf.carrier_coupling;
    let x = [k, k, -k];
    let t1 = s.td(x, [1, 0, 0]);
    let t2 = s.td(x, [0, 1, 0]);
    let t3 = s.td(x, [0, 0, 1]);

    let s1 = 2.0 * s.hs(-k, 2.0 * k) * psi1_v - 2.0 * i * ((e1 + e2) * mu + 2.0 * f2 * phi0)
        + hk0 * (nu1 / (2.0 * i) + nu3)
        - 3.0 * i * (t1 + t2);
    let s2c = -2.0 * i * (e2 * mu + f1 * phi0) + hk0 * (-nu1 / (2.0 * i) + nu3) - 3.0 * i * t3;

    let beta = nls.nonlinear_coeff;
    let v_prime = spec.dissipation.derivative(carrier.k_norm());
    let kappa = if uses_mean {
        // d_tau m2 = mu d_tau |A|^2 carries -2 V(k) |A|^2; the mean itself decays with V(0)
        mu * (2.0 * nls.damping.re - spec.dissipation.eval(0.0)) / d0
    } else {
        C64::default()
    };
    Ok(HnlsCoefficients {
        k: carrier.k.clone(),
        third_deriv_coeff: C64::new(dir * carrier.third_derivative / 6.0, 0.0),
        psi1: psi1.solution,
        psi2: psi2.solution,
        psi3: psi3.solution,
        selfsteep_coeff: -s1 * dir,
        conj_steep_coeff: -s2c * dir,
        coupling_ab: 2.0 * i * beta,
        coupling_a2bbar: i * beta,
        damping_derivative: C64::new(v_prime * dir, 0.0),
        mean_flow: Some(ScalarMeanFlowTerms {
            nu1,
            nu2,
            nu3,
            kappa,
            carrier_coupling: hk0,
        }),
        water: None,
        records: vec![psi1, psi2, psi3],
    })
}

fn water_hnls(spec: &SystemSpec, carrier: &CarrierSetup, nls: &NlsCoefficients) -> Result<HnlsCoefficients> {
    let w = carrier.omega;
    let kn = carrier.k_norm();
    let i = C64::i();
    let v = pair_eigenvector(w);
    let k2 = to2(&carrier.k);
    let phi0 = nls.phi0.pair().expect("pair system");

    // A grad A at the second harmonic: transport of phi0 at 2k relative to c_g,
    // plus the slow expansion of H at (k, k); along the carrier only.
    let cg = carrier.group_speed();
    let jprime = [[C64::default(), C64::new(-1.0, 0.0)], [C64::default(), C64::default()]];
    let jp_phi = [jprime[0][1] * phi0[1], C64::default()];
    let dh = [C64::default(), C64::new(2.0 * kn, 0.0)];
    let f_psi1 = [
        2.0 * cg * phi0[0] + 2.0 * i * jp_phi[0] - i * dh[0],
        2.0 * cg * phi0[1] + 2.0 * i * jp_phi[1] - i * dh[1],
    ];
    let psi1 = labelled_solve(spec, carrier, 2, Amplitude::Pair(f_psi1), "psi1")?;
    let f_ab = water_bilinear(k2, k2, v, v);
    let psi2 = labelled_solve(
        spec,
        carrier,
        2,
        Amplitude::Pair([2.0 * f_ab[0], 2.0 * f_ab[1]]),
        "psi2",
    )?;
    let k2x2 = [2.0 * k2[0], 2.0 * k2[1]];
    let a = water_bilinear(k2, k2x2, v, phi0);
    let b = water_bilinear(k2x2, k2, phi0, v);
    let c = crate::system::water_trilinear(k2, k2, k2, v, v, v);
    let psi3 = labelled_solve(
        spec,
        carrier,
        3,
        Amplitude::Pair([a[0] + b[0] + c[0], a[1] + b[1] + c[1]]),
        "psi3",
    )?;

    let r = kn * kn / w;
    let v_prime = spec.dissipation.derivative(kn);
    Ok(HnlsCoefficients {
        k: carrier.k.clone(),
        third_deriv_coeff: i * kn / (24.0 * w.powi(7)),
        psi1: psi1.solution,
        psi2: psi2.solution,
        psi3: psi3.solution,
        selfsteep_coeff: i * 2.0 * r * kn,
        conj_steep_coeff: i * r * kn,
        // linearization of the A nonlinearity: an O(eps) amplitude shift of a
        // plane wave must be an exact unforced B solution
        coupling_ab: 2.0 * i * nls.nonlinear_coeff,
        coupling_a2bbar: i * nls.nonlinear_coeff,
        damping_derivative: C64::new(v_prime, 0.0),
        mean_flow: None,
        water: Some(WaterTerms {
            nonlocal_intensity: i * kn.powi(3) / w,
            nonlocal_meanflow: i * kn,
            meanflow_constraint: meanflow_coefficient(kn, w),
        }),
        records: vec![psi1, psi2, psi3],
    })
}

/// Carrier eigenvector `v = [i w, 1]` of the surface pair.
pub fn pair_eigenvector(omega: f64) -> [C64; 2] {
    [C64::new(0.0, omega), C64::new(1.0, 0.0)]
}

fn to2(k: &[f64]) -> [f64; 2] {
    [k[0], k.get(1).copied().unwrap_or(0.0)]
}

fn meanflow_coefficient(kn: f64, w: f64) -> f64 {
    -kn.powi(4) / w
}

/// Right-side coefficient `c` of `k . grad psi1 = c |A|^2`.
pub fn meanflow_constraint(spec: &SystemSpec, carrier: &CarrierSetup) -> Result<f64> {
    match spec.model {
        Model::DeepWater => Ok(meanflow_coefficient(carrier.k_norm(), carrier.omega)),
        Model::Scalar(_) => Err(Error::UnsupportedSystem(format!(
            "{} is a scalar system; the mean-flow constraint applies to the surface pair",
            spec.name
        ))),
    }
}

/// Everything the engine produces for one carrier.
#[derive(Debug, Clone, Serialize)]
pub struct CoefficientSet {
    pub system: String,
    pub carrier: CarrierSetup,
    pub nls: NlsCoefficients,
    pub hnls: HnlsCoefficients,
}

impl CoefficientSet {
    pub fn records(&self) -> impl Iterator<Item = &HarmonicSolveRecord> {
        self.nls.records.iter().chain(&self.hnls.records)
    }
}

pub fn coefficient_set(spec: &SystemSpec, k: &[f64]) -> Result<CoefficientSet> {
    let carrier = carrier_setup(spec, k)?;
    let nls = nls_coefficients(spec, &carrier)?;
    let hnls = hnls_coefficients(spec, &carrier, &nls)?;
    Ok(CoefficientSet {
        system: spec.name.clone(),
        carrier,
        nls,
        hnls,
    })
}

/// Comparison of the engine against the closed forms printed for the toy
/// system. Engine values are converted to the printed normalization
/// `i B_tau + (coeff) * term + ... = 0`.
#[derive(Debug, Clone, Serialize)]
pub struct ToyPrintedAudit {
    pub k: f64,
    pub phi0_engine: C64,
    pub phi0_printed: f64,
    /// `|L_2 phi0 + H(k, k)|`.
    pub phi0_residual_engine: f64,
    pub phi0_residual_printed: f64,
    pub psi_printed: [f64; 3],
    pub psi_engine: [C64; 3],
    pub psi_residual_printed: [f64; 3],
    pub nonlinear_engine: C64,
    pub nonlinear_printed: f64,
    pub dispersion_engine: f64,
    pub dispersion_printed: f64,
    pub conj_steep_engine: C64,
    pub conj_steep_printed: f64,
    pub intensity_gradient_engine: C64,
    pub intensity_gradient_printed: f64,
    pub third_deriv_engine: C64,
    pub third_deriv_printed: f64,
}

pub fn toy_printed_audit(spec: &SystemSpec, k: f64) -> Result<ToyPrintedAudit> {
    let set = coefficient_set(spec, &[k])?;
    let m = spec
        .scalar()
        .ok_or_else(|| Error::UnsupportedSystem("printed-form audit is for the toy system".into()))?;
    let lambda2 = scalar_harmonic_multiplier(m, k, set.carrier.omega, 2);
    let lambda3 = scalar_harmonic_multiplier(m, k, set.carrier.omega, 3);
    let hkk = m.bilinear.symmetric(&[k, k]);
    let phi0_engine = set.nls.phi0.scalar().expect("scalar");
    let k2 = k * k;
    let phi0_printed = (1.0 - 2.0 * k2) / (2.0 * k2 * (17.0 * k - 5.0));
    let psi_printed = [
        (2.0 * k2 - 1.0) / (2.0 * k * (17.0 * k - 5.0)),
        (2.0 * k2 - 3.0 * k - 1.0) / (2.0 * k * k2 * (17.0 * k - 5.0)),
        2.0 * (1.0 - 6.0 * k2) * phi0_printed / (3.0 * k2 * (41.0 * k2 - 5.0)),
    ];
    let recs = &set.hnls.records;
    let psi_engine = [0, 1, 2].map(|j| recs[j].solution.scalar().expect("scalar"));
    let psi_residual_printed = [0, 1, 2].map(|j| {
        let l = if j == 2 { lambda3 } else { lambda2 };
        let f = recs[j].forcing.scalar().expect("scalar");
        (l * psi_printed[j] - f).norm()
    });
    let to_printed = |c: C64| -C64::i() * c;
    Ok(ToyPrintedAudit {
        k,
        phi0_engine,
        phi0_printed,
        phi0_residual_engine: (lambda2 * phi0_engine + hkk).norm(),
        phi0_residual_printed: (lambda2 * phi0_printed + hkk).norm(),
        psi_printed,
        psi_engine,
        psi_residual_printed,
        nonlinear_engine: set.nls.nonlinear_coeff,
        nonlinear_printed: k * (1.0 - 5.0 * k2 * k2),
        dispersion_engine: set.nls.dispersion_coeff,
        dispersion_printed: k * (20.0 * k2 - 9.0),
        conj_steep_engine: to_printed(set.hnls.conj_steep_coeff * k.signum()),
        conj_steep_printed: 1.0 + 4.0 * k,
        // conj(A) d_xi|A|^2 sits at the -1 harmonic, so no carrier-harmonic slot exists for it.
        intensity_gradient_engine: C64::default(),
        intensity_gradient_printed: 1.0 - 4.0 * k + 3.0 * k2,
        third_deriv_engine: to_printed(set.hnls.third_deriv_coeff * k.signum()),
        third_deriv_printed: 6.0 * k * (10.0 * k - 3.0),
    })
}
