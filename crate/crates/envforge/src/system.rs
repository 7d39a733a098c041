//! Multiplier-level description of dispersive systems.
//!
//! A scalar system is written as `u_t + J(u) + eps H(u, u) + eps^2 T(u, u, u) + eps^2 V(u) = 0`
//! with Fourier symbols `J(k)`, `H(k1, k2)`, `T(k1, k2, k3)` and dissipation `V(k)`.
//! The physical carrier is `exp(i(kx - wt))` with `w = -i J(k)`.
//!
//! The deep-water system is a surface pair `[zeta, psi]` whose linear part is
//! the 2x2 symbol `[[0, -|k|], [1, 0]]`; its interaction symbols come from the
//! Dirichlet-to-Neumann expansion terms G0, G1, G2.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

pub const MAX_POLY_DEGREE: u32 = 8;

/// Polynomial in `arity` real variables with complex coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poly {
    pub arity: usize,
    pub terms: Vec<(Vec<u32>, C64)>,
}

impl Poly {
    pub fn new(arity: usize, terms: Vec<(Vec<u32>, C64)>) -> Result<Self> {
        for (exps, _) in &terms {
            if exps.len() != arity {
                return Err(Error::InvalidInput(format!(
                    "monomial {exps:?} does not have {arity} exponents"
                )));
            }
            if exps.iter().any(|&e| e > MAX_POLY_DEGREE) {
                return Err(Error::InvalidInput(format!(
                    "monomial {exps:?} exceeds degree {MAX_POLY_DEGREE}"
                )));
            }
        }
        Ok(Self { arity, terms })
    }

    pub fn eval(&self, x: &[f64]) -> C64 {
        self.partial(x, &vec![0; self.arity])
    }

    /// Mixed partial derivative with the given order per variable.
    pub fn partial(&self, x: &[f64], orders: &[u32]) -> C64 {
        let mut sum = C64::default();
        'terms: for (exps, c) in &self.terms {
            let mut factor = 1.0;
            for ((&e, &o), &xv) in exps.iter().zip(orders).zip(x) {
                if o > e {
                    continue 'terms;
                }
                let falling: f64 = (0..o).map(|j| (e - j) as f64).product();
                factor *= falling * xv.powi((e - o) as i32);
            }
            sum += c * factor;
        }
        sum
    }

    /// True when `p(-x) = conj(p(x))` holds coefficient-wise.
    pub fn has_reality_symmetry(&self, tol: f64) -> bool {
        self.terms.iter().all(|(exps, c)| {
            let odd = exps.iter().sum::<u32>() % 2 == 1;
            if odd {
                c.re.abs() <= tol
            } else {
                c.im.abs() <= tol
            }
        })
    }
}

type CustomFn = Arc<dyn Fn(&[f64]) -> C64 + Send + Sync>;

/// A Fourier multiplier: either a polynomial (exact derivatives) or an
/// arbitrary closure (derivatives by Richardson-extrapolated differences).
#[derive(Clone)]
pub enum Symbol {
    Poly(Poly),
    Custom { arity: usize, f: CustomFn },
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Poly(p) => f.debug_tuple("Poly").field(p).finish(),
            Symbol::Custom { arity, .. } => write!(f, "Custom(arity = {arity})"),
        }
    }
}

impl Symbol {
    pub fn custom(arity: usize, f: impl Fn(&[f64]) -> C64 + Send + Sync + 'static) -> Self {
        Symbol::Custom { arity, f: Arc::new(f) }
    }

    pub fn arity(&self) -> usize {
        match self {
            Symbol::Poly(p) => p.arity,
            Symbol::Custom { arity, .. } => *arity,
        }
    }

    pub fn eval(&self, x: &[f64]) -> C64 {
        match self {
            Symbol::Poly(p) => p.eval(x),
            Symbol::Custom { f, .. } => f(x),
        }
    }

    pub fn has_closed_form(&self) -> bool {
        matches!(self, Symbol::Poly(_))
    }

    pub fn partial(&self, x: &[f64], orders: &[u32]) -> C64 {
        match self {
            Symbol::Poly(p) => p.partial(x, orders),
            Symbol::Custom { f, .. } => numeric_partial(f.as_ref(), x, orders),
        }
    }

    /// Symbol symmetrized over its arguments (average over all permutations).
    pub fn symmetric(&self, x: &[f64]) -> C64 {
        let perms = permutations(x.len());
        let n = perms.len() as f64;
        perms
            .iter()
            .map(|p| {
                let y: Vec<f64> = p.iter().map(|&i| x[i]).collect();
                self.eval(&y)
            })
            .sum::<C64>()
            / n
    }

    /// Partial derivative of the symmetrized symbol.
    pub fn symmetric_partial(&self, x: &[f64], orders: &[u32]) -> C64 {
        let perms = permutations(x.len());
        let n = perms.len() as f64;
        perms
            .iter()
            .map(|p| {
                // d/dx_i of s(x_p(0), ..., x_p(m)) moves to the slot where x_i lands.
                let y: Vec<f64> = p.iter().map(|&i| x[i]).collect();
                let mut o = vec![0u32; x.len()];
                for (slot, &src) in p.iter().enumerate() {
                    o[slot] = orders[src];
                }
                self.partial(&y, &o)
            })
            .sum::<C64>()
            / n
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    match n {
        1 => vec![vec![0]],
        2 => vec![vec![0, 1], vec![1, 0]],
        3 => vec![
            vec![0, 1, 2],
            vec![0, 2, 1],
            vec![1, 0, 2],
            vec![1, 2, 0],
            vec![2, 0, 1],
            vec![2, 1, 0],
        ],
        _ => unreachable!("symbols have arity 1..=3"),
    }
}

fn numeric_partial(f: &(dyn Fn(&[f64]) -> C64 + Send + Sync), x: &[f64], orders: &[u32]) -> C64 {
    let Some(dim) = orders.iter().position(|&o| o > 0) else {
        return f(x);
    };
    let order = orders[dim];
    let mut rest = orders.to_vec();
    rest[dim] = 0;
    let line = |t: f64| {
        let mut y = x.to_vec();
        y[dim] = t;
        numeric_partial(f, &y, &rest)
    };
    richardson_derivative(&line, x[dim], order)
}

/// Central-difference derivative of order 1..=3 with a four-level Richardson table.
pub fn richardson_derivative(f: &dyn Fn(f64) -> C64, x: f64, order: u32) -> C64 {
    let stencil = |h: f64| -> C64 {
        match order {
            1 => (f(x + h) - f(x - h)) / (2.0 * h),
            2 => (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h),
            3 => (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h)) / (2.0 * h * h * h),
            _ => panic!("derivative order {order} not supported"),
        }
    };
    const LEVELS: usize = 4;
    let h0 = 0.1 * x.abs().max(1.0);
    let mut table: Vec<C64> = (0..LEVELS).map(|i| stencil(h0 / 2f64.powi(i as i32))).collect();
    for level in 1..LEVELS {
        let factor = 4f64.powi(level as i32);
        for i in (level..LEVELS).rev() {
            table[i] = (factor * table[i] - table[i - 1]) / (factor - 1.0);
        }
    }
    table[LEVELS - 1]
}

/// Dissipation profile V(|k|), real-valued.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum VProfile {
    #[default]
    None,
    Constant { delta: f64 },
    Power { delta: f64, p: f64 },
}

impl VProfile {
    pub fn eval(&self, k: f64) -> f64 {
        match *self {
            VProfile::None => 0.0,
            VProfile::Constant { delta } => delta,
            VProfile::Power { delta, p } => delta * k.abs().powf(p),
        }
    }

    /// dV/dk at signed wavenumber `k`.
    pub fn derivative(&self, k: f64) -> f64 {
        match *self {
            VProfile::None | VProfile::Constant { .. } => 0.0,
            VProfile::Power { delta, p } => delta * p * k.abs().powf(p - 1.0) * k.signum(),
        }
    }

    /// True when the profile grows rather than damps for some wavenumber.
    pub fn amplifies(&self) -> bool {
        match *self {
            VProfile::None => false,
            VProfile::Constant { delta } | VProfile::Power { delta, .. } => delta < 0.0,
        }
    }

    pub fn is_none(&self) -> bool {
        match *self {
            VProfile::None => true,
            VProfile::Constant { delta } | VProfile::Power { delta, .. } => delta == 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateKind {
    Scalar,
    SurfacePair,
}

#[derive(Debug, Clone)]
pub struct ScalarMultipliers {
    pub linear: Symbol,
    pub bilinear: Symbol,
    pub trilinear: Option<Symbol>,
}

#[derive(Debug, Clone)]
pub enum Model {
    Scalar(ScalarMultipliers),
    DeepWater,
}

#[derive(Debug, Clone)]
pub struct SystemSpec {
    pub name: String,
    pub dim: usize,
    pub dissipation: VProfile,
    pub model: Model,
}

impl SystemSpec {
    pub fn state_kind(&self) -> StateKind {
        match self.model {
            Model::Scalar(_) => StateKind::Scalar,
            Model::DeepWater => StateKind::SurfacePair,
        }
    }

    pub fn with_dissipation(mut self, v: VProfile) -> Self {
        self.dissipation = v;
        self
    }

    pub fn scalar(&self) -> Option<&ScalarMultipliers> {
        match &self.model {
            Model::Scalar(m) => Some(m),
            Model::DeepWater => None,
        }
    }

    /// Frequency w(k) of the undamped linearization (complex so that a
    /// non-conservative user symbol shows up as an imaginary part).
    pub fn frequency(&self, k: &[f64]) -> C64 {
        match &self.model {
            Model::Scalar(m) => -C64::i() * m.linear.eval(&[k[0]]),
            Model::DeepWater => C64::new(norm(k).sqrt(), 0.0),
        }
    }

    /// V(k) evaluated at the carrier.
    pub fn damping(&self, k: &[f64]) -> C64 {
        let kk = if k.len() == 1 { k[0] } else { norm(k) };
        C64::new(self.dissipation.eval(kk), 0.0)
    }
}

pub fn norm(k: &[f64]) -> f64 {
    k.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// The fifth-order toy: `J(k) = i k^3 (k^2 - 1)`, `H(k1, k2) = i k2 (1 - k1 k2 - k2^2)`, no `T`.
pub fn toy_system() -> SystemSpec {
    let i = C64::i();
    let linear = Poly::new(1, vec![(vec![5], i), (vec![3], -i)]).expect("static polynomial");
    let bilinear = Poly::new(
        2,
        vec![(vec![0, 1], i), (vec![1, 2], -i), (vec![0, 3], -i)],
    )
    .expect("static polynomial");
    SystemSpec {
        name: "toy".into(),
        dim: 1,
        dissipation: VProfile::None,
        model: Model::Scalar(ScalarMultipliers {
            linear: Symbol::Poly(linear),
            bilinear: Symbol::Poly(bilinear),
            trilinear: None,
        }),
    }
}

pub fn deepwater_system(dim: usize) -> Result<SystemSpec> {
    if !(1..=2).contains(&dim) {
        return Err(Error::InvalidInput(format!("deep-water dimension must be 1 or 2, got {dim}")));
    }
    Ok(SystemSpec {
        name: "deepwater".into(),
        dim,
        dissipation: VProfile::None,
        model: Model::DeepWater,
    })
}

/// Scalar system from polynomial coefficient tables.
pub fn polynomial_system(
    name: &str,
    linear: Poly,
    bilinear: Poly,
    trilinear: Option<Poly>,
    dissipation: VProfile,
) -> Result<SystemSpec> {
    let check = |p: &Poly, arity: usize, what: &str| -> Result<()> {
        if p.arity != arity {
            return Err(Error::InvalidInput(format!("{what} must have {arity} variables")));
        }
        if !p.has_reality_symmetry(1e-14) {
            return Err(Error::InvalidInput(format!(
                "{what} violates the reality symmetry S(-k) = conj(S(k)): even-degree terms must be real, odd-degree terms imaginary"
            )));
        }
        Ok(())
    };
    check(&linear, 1, "linear symbol J")?;
    check(&bilinear, 2, "bilinear symbol H")?;
    if let Some(t) = &trilinear {
        check(t, 3, "trilinear symbol T")?;
    }
    Ok(SystemSpec {
        name: name.into(),
        dim: 1,
        dissipation,
        model: Model::Scalar(ScalarMultipliers {
            linear: Symbol::Poly(linear),
            bilinear: Symbol::Poly(bilinear),
            trilinear: trilinear.map(Symbol::Poly),
        }),
    })
}

/// Deep-water linear symbol `[[0, -|k|], [1, 0]]` (so that `L_n = -i n w I + J(nk)`).
pub fn water_linear(k: &[f64]) -> [[C64; 2]; 2] {
    let z = C64::default();
    [[z, C64::new(-norm(k), 0.0)], [C64::new(1.0, 0.0), z]]
}

fn dot(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn add(a: &[f64; 2], b: &[f64; 2]) -> [f64; 2] {
    [a[0] + b[0], a[1] + b[1]]
}

fn len2(a: &[f64; 2]) -> f64 {
    a[0].hypot(a[1])
}

/// Quadratic surface-pair interaction `H(u_i, u_j)` for modes `u_i e^{i k1 x}`, `u_j e^{i k2 x}`:
/// `[G1[zeta_i] psi_j, -grad psi_i . grad psi_j / 2 + G0 psi_i G0 psi_j / 2]`.
pub fn water_bilinear(k1: [f64; 2], k2: [f64; 2], ui: [C64; 2], uj: [C64; 2]) -> [C64; 2] {
    let s = add(&k1, &k2);
    let g1 = -len2(&s) * len2(&k2) + dot(&s, &k2);
    let kin = 0.5 * dot(&k1, &k2) + 0.5 * len2(&k1) * len2(&k2);
    [ui[0] * uj[1] * g1, ui[1] * uj[1] * kin]
}

/// Cubic surface-pair interaction `T(u_i, u_j, u_k)`:
/// `[G2[zeta_i, zeta_j] psi_k, G0 psi_i (G1[zeta_j] psi_k + grad zeta_j . grad psi_k)]`.
pub fn water_trilinear(
    k1: [f64; 2],
    k2: [f64; 2],
    k3: [f64; 2],
    u1: [C64; 2],
    u2: [C64; 2],
    u3: [C64; 2],
) -> [C64; 2] {
    let s23 = add(&k2, &k3);
    let s = add(&k1, &s23);
    let (a3, a23, a) = (len2(&k3), len2(&s23), len2(&s));
    let g2 = a * a23 * a3 - 0.5 * a * a * a3 - 0.5 * a * a3 * a3;
    let second = len2(&k1) * (-a23 * a3 + dot(&s23, &k3) - dot(&k2, &k3));
    [u1[0] * u2[0] * u3[1] * g2, u1[1] * u2[0] * u3[1] * second]
}

/// Carrier data derived from the dispersion relation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CarrierSetup {
    pub k: Vec<f64>,
    pub omega: f64,
    pub group_velocity: Vec<f64>,
    /// Second derivative of w along the carrier (1D), or the Laplacian-style
    /// coefficient `-1/(4 w^3)` used by the deep-water envelope equation.
    pub dispersion_curvature: f64,
    /// Third derivative of w along the carrier direction.
    pub third_derivative: f64,
    /// `true` when the derivatives came from closed forms.
    pub closed_form: bool,
}

impl CarrierSetup {
    pub fn k_norm(&self) -> f64 {
        norm(&self.k)
    }

    /// Carrier direction k/|k|.
    pub fn direction(&self) -> Vec<f64> {
        let n = self.k_norm();
        self.k.iter().map(|x| x / n).collect()
    }

    /// Group speed along the carrier direction.
    pub fn group_speed(&self) -> f64 {
        self.group_velocity
            .iter()
            .zip(self.direction())
            .map(|(c, d)| c * d)
            .sum()
    }
}

pub fn carrier_setup(spec: &SystemSpec, k: &[f64]) -> Result<CarrierSetup> {
    if k.len() != spec.dim {
        return Err(Error::InvalidInput(format!(
            "carrier has {} components but the system is {}-dimensional",
            k.len(),
            spec.dim
        )));
    }
    if k.iter().any(|x| !x.is_finite()) || norm(k) == 0.0 {
        return Err(Error::DegenerateCarrier {
            k: k.to_vec(),
            reason: "carrier wavenumber must be nonzero and finite".into(),
        });
    }
    let setup = match &spec.model {
        Model::Scalar(m) => scalar_carrier(m, k[0])?,
        Model::DeepWater => water_carrier(k),
    };
    if setup.omega.abs() < 1e-12 {
        return Err(Error::DegenerateCarrier {
            k: k.to_vec(),
            reason: "carrier frequency vanishes".into(),
        });
    }
    if let Model::Scalar(m) = &spec.model {
        let lambda2 = crate::coeffs::scalar_harmonic_multiplier(m, k[0], setup.omega, 2);
        let scale = (2.0 * setup.omega).abs().max(m.linear.eval(&[2.0 * k[0]]).norm()).max(1.0);
        if lambda2.norm() < 1e-10 * scale {
            return Err(Error::DegenerateCarrier {
                k: k.to_vec(),
                reason: format!("second-harmonic operator is singular (|L_2| = {:e})", lambda2.norm()),
            });
        }
    }
    Ok(setup)
}

fn scalar_carrier(m: &ScalarMultipliers, k: f64) -> Result<CarrierSetup> {
    let sigma = |order: u32| -> C64 { -C64::i() * m.linear.partial(&[k], &[order]) };
    let w = sigma(0);
    if w.im.abs() > 1e-12 * w.re.abs().max(1.0) {
        return Err(Error::InvalidInput(format!(
            "dispersion relation is not real at k = {k}: w = {w}"
        )));
    }
    Ok(CarrierSetup {
        k: vec![k],
        omega: w.re,
        group_velocity: vec![sigma(1).re],
        dispersion_curvature: sigma(2).re,
        third_derivative: sigma(3).re,
        closed_form: m.linear.has_closed_form(),
    })
}

fn water_carrier(k: &[f64]) -> CarrierSetup {
    let kn = norm(k);
    let w = kn.sqrt();
    let w3 = w * w * w;
    CarrierSetup {
        k: k.to_vec(),
        omega: w,
        group_velocity: k.iter().map(|x| x / (2.0 * w3)).collect(),
        dispersion_curvature: -1.0 / (4.0 * w3),
        third_derivative: 3.0 / (8.0 * w3 * w * w),
        closed_form: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_multiplier_values() {
        let s = toy_system();
        let m = s.scalar().unwrap();
        assert!((m.linear.eval(&[0.5]) - C64::new(0.0, -0.09375)).norm() < 1e-15);
        assert!((m.bilinear.eval(&[0.5, 0.5]) - C64::new(0.0, 0.25)).norm() < 1e-15);
        assert_eq!(m.linear.eval(&[0.0]), C64::default());
        assert!(m.trilinear.is_none());
    }

    #[test]
    fn poly_partials_match_richardson() {
        let s = toy_system();
        let h = &s.scalar().unwrap().bilinear;
        let p = match h {
            Symbol::Poly(p) => p.clone(),
            _ => unreachable!(),
        };
        let custom = Symbol::custom(2, move |x| p.eval(x));
        for orders in [[1, 0], [0, 1], [2, 0], [1, 1], [0, 2]] {
            let x = [0.37, -0.81];
            let a = h.partial(&x, &orders);
            let b = custom.partial(&x, &orders);
            assert!((a - b).norm() < 1e-9 * a.norm().max(1.0), "{orders:?}: {a} vs {b}");
        }
    }

    #[test]
    fn symmetric_partial_is_partial_of_symmetrization() {
        let h = toy_system().scalar().unwrap().bilinear.clone();
        let hs = {
            let h = h.clone();
            Symbol::custom(2, move |x| h.symmetric(x))
        };
        let x = [0.6, 1.1];
        for orders in [[1, 0], [0, 1], [1, 1], [2, 0]] {
            let a = h.symmetric_partial(&x, &orders);
            let b = hs.partial(&x, &orders);
            assert!((a - b).norm() < 1e-9, "{orders:?}");
        }
    }

    #[test]
    fn carrier_examples() {
        let toy = toy_system();
        let c = carrier_setup(&toy, &[0.5]).unwrap();
        assert!((c.omega + 0.09375).abs() < 1e-15);
        assert!((c.group_velocity[0] + 0.4375).abs() < 1e-15);
        assert!(matches!(
            carrier_setup(&toy, &[1.0]),
            Err(Error::DegenerateCarrier { .. })
        ));
        let water = deepwater_system(1).unwrap();
        let c = carrier_setup(&water, &[1.0]).unwrap();
        assert_eq!(c.omega, 1.0);
        assert_eq!(c.group_velocity[0], 0.5);
        assert_eq!(c.dispersion_curvature, -0.25);
        let c = carrier_setup(&water, &[4.0]).unwrap();
        assert_eq!(c.omega, 2.0);
    }

    #[test]
    fn second_harmonic_resonance_is_degenerate() {
        // sigma(2k) = 2 sigma(k) at k^2 = 1/5
        let toy = toy_system();
        let err = carrier_setup(&toy, &[0.2f64.sqrt()]).unwrap_err();
        assert!(matches!(err, Error::DegenerateCarrier { .. }), "{err}");
    }

    #[test]
    fn polynomial_tables_reject_unphysical_terms() {
        let j = Poly::new(1, vec![(vec![3], C64::new(1.0, 0.0))]).unwrap();
        let h = Poly::new(2, vec![(vec![0, 1], C64::i())]).unwrap();
        assert!(polynomial_system("bad", j, h.clone(), None, VProfile::None).is_err());
        let j = Poly::new(1, vec![(vec![3], C64::i())]).unwrap();
        assert!(polynomial_system("kdv", j, h, None, VProfile::None).is_ok());
        assert!(Poly::new(1, vec![(vec![9], C64::i())]).is_err());
    }

    #[test]
    fn dissipation_profiles() {
        let v = VProfile::Power { delta: 0.02, p: 2.0 };
        assert!((v.eval(-3.0) - 0.18).abs() < 1e-15);
        assert!((v.derivative(-3.0) + 0.12).abs() < 1e-15);
        assert!(VProfile::Constant { delta: -0.1 }.amplifies());
        assert!(!VProfile::Constant { delta: 0.01 }.amplifies());
    }
}
