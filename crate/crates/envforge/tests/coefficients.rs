//! Engine coefficients against closed forms derived independently (symbolic
//! algebra on the toy multipliers, then frozen here).

use envforge::coeffs::{coefficient_set, harmonic_solve, toy_printed_audit, Amplitude};
use envforge::system::{carrier_setup, deepwater_system, polynomial_system, toy_system, Poly, VProfile};
use envforge::{Error, C64};
use rand::{Rng, SeedableRng};

struct ToyOracle {
    omega: f64,
    cg: f64,
    alpha: f64,
    beta: f64,
    phi0: f64,
    mu: f64,
    third: f64,
    s1: f64,
    s2: f64,
    psi1_im: f64,
    psi3: f64,
    nu1: f64,
    nu2: f64,
}

fn toy_oracle(k: f64) -> ToyOracle {
    let k2 = k * k;
    let a = 5.0 * k2 - 3.0;
    let b = 5.0 * k2 - 1.0;
    let mu = -(2.0 * k2 - 1.0) / (k2 * a);
    let s1 = -(250.0 * k2.powi(4) - 485.0 * k2.powi(3) + 345.0 * k2 * k2 - 99.0 * k2 + 9.0) / (3.0 * k2 * a * a * b);
    let s2 = -(450.0 * k2.powi(4) - 1045.0 * k2.powi(3) + 827.0 * k2 * k2 - 267.0 * k2 + 27.0) / (6.0 * k2 * a * a * b);
    ToyOracle {
        omega: k.powi(5) - k.powi(3),
        cg: 5.0 * k2 * k2 - 3.0 * k2,
        alpha: k * (10.0 * k2 - 3.0),
        beta: -(k2 - 3.0) * (2.0 * k2 - 1.0) / (6.0 * k * a),
        phi0: (2.0 * k2 - 1.0) / (6.0 * k2 * b),
        mu,
        third: 10.0 * k2 - 1.0,
        s1,
        s2,
        psi1_im: (10.0 * k2 * k2 - 10.0 * k2 + 1.0) / (3.0 * k2 * k * b * b),
        psi3: (2.0 * k2 - 1.0) / (48.0 * k2 * k2 * (10.0 * k2 - 1.0)),
        nu1: 2.0 * (10.0 * k2 * k2 - 10.0 * k2 + 3.0) / (k2 * k * a * a),
        nu2: 2.0 * mu,
    }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1.0)
}

#[test]
fn toy_values_at_half() {
    let set = coefficient_set(&toy_system(), &[0.5]).unwrap();
    assert!(close(set.carrier.omega, -0.09375, 1e-15));
    assert!(close(set.carrier.group_velocity[0], -0.4375, 1e-15));
    assert!(close(set.nls.dispersion_coeff, -0.25, 1e-14));
    assert!(close(set.nls.nonlinear_coeff.re, 0.261904761904762, 1e-13));
    assert!(set.nls.nonlinear_coeff.im.abs() < 1e-14);
    assert!((set.nls.phi0.scalar().unwrap() + 4.0 / 3.0).norm() < 1e-14);
    let mf = set.nls.mean_flow.unwrap();
    assert!(close(mf.mu.re, -1.142857142857143, 1e-13));
    let h = &set.hnls;
    assert!(close(h.third_deriv_coeff.re, 1.5, 1e-13));
    assert!(close(h.selfsteep_coeff.re, 1.374149659863946, 1e-12));
    assert!(close(h.conj_steep_coeff.re, 2.292517006802721, 1e-12));
    assert!((h.psi1.scalar().unwrap() - C64::new(0.0, -37.333333333333336)).norm() < 1e-10);
    assert!(close(h.psi3.scalar().unwrap().re, -0.111111111111111, 1e-12));
    let m = h.mean_flow.unwrap();
    assert!(close(m.nu1.re, 5.877551020408163, 1e-12));
    assert!(close(m.nu2.re, -2.285714285714286, 1e-12));
    assert!(m.nu3.norm() < 1e-14);
}

#[test]
fn toy_random_carriers_match_symbolic_closed_forms() {
    let toy = toy_system();
    let mut rng = rand::rngs::StdRng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 20 {
        let k: f64 = rng.gen_range(0.2..0.9);
        // stay clear of the second-harmonic and mean-flow resonances
        if (k * k - 0.2).abs() < 0.02 || (k * k - 0.6).abs() < 0.02 || (k * k - 0.1).abs() < 0.01 {
            continue;
        }
        let o = toy_oracle(k);
        let set = coefficient_set(&toy, &[k]).unwrap();
        assert!(close(set.carrier.omega, o.omega, 1e-13));
        assert!(close(set.carrier.group_velocity[0], o.cg, 1e-13));
        assert!(close(set.nls.dispersion_coeff, o.alpha, 1e-13));
        assert!(close(set.nls.nonlinear_coeff.re, o.beta, 1e-10), "beta at {k}");
        assert!(close(set.nls.phi0.scalar().unwrap().re, o.phi0, 1e-10));
        assert!(close(set.nls.mean_flow.unwrap().mu.re, o.mu, 1e-10));
        assert!(close(set.hnls.third_deriv_coeff.re, o.third, 1e-12));
        assert!(close(set.hnls.selfsteep_coeff.re, o.s1, 1e-9), "s1 at {k}");
        assert!(close(set.hnls.conj_steep_coeff.re, o.s2, 1e-9), "s2 at {k}");
        assert!(close(set.hnls.psi1.scalar().unwrap().im, o.psi1_im, 1e-10));
        assert!(close(set.hnls.psi3.scalar().unwrap().re, o.psi3, 1e-10));
        assert!(close(set.hnls.mean_flow.unwrap().nu1.re, o.nu1, 1e-9), "nu1 at {k}");
        assert!(close(set.hnls.mean_flow.unwrap().nu2.re, o.nu2, 1e-10));
        // conservative system: all slots real in their normalizations
        assert!(set.nls.nonlinear_coeff.im.abs() < 1e-12);
        assert!(set.hnls.selfsteep_coeff.im.abs() < 1e-10);
        assert!(set.records().all(|r| r.within_tolerance()));
        checked += 1;
    }
}

#[test]
fn negative_carrier_mirrors_positive() {
    let toy = toy_system();
    let p = coefficient_set(&toy, &[0.6]).unwrap();
    let n = coefficient_set(&toy, &[-0.6]).unwrap();
    // the -k envelope is the conjugate of the +k one, so every slot of the
    // i A_tau / B_tau equations changes sign
    assert!((p.nls.nonlinear_coeff + n.nls.nonlinear_coeff).norm() < 1e-12);
    assert!((p.nls.dispersion_coeff + n.nls.dispersion_coeff).abs() < 1e-12);
    assert!((p.hnls.selfsteep_coeff + n.hnls.selfsteep_coeff).norm() < 1e-10);
    assert!((p.hnls.conj_steep_coeff + n.hnls.conj_steep_coeff).norm() < 1e-10);
    assert!((p.hnls.third_deriv_coeff + n.hnls.third_deriv_coeff).norm() < 1e-10);
}

#[test]
fn printed_phi0_fails_its_residual() {
    let audit = toy_printed_audit(&toy_system(), 0.5).unwrap();
    assert!(audit.phi0_residual_engine < 1e-12);
    assert!(audit.phi0_residual_printed >= 1e-3);
    assert!((audit.phi0_printed - 2.0 / 7.0).abs() < 1e-15);
}

#[test]
fn damping_slots() {
    let toy = toy_system().with_dissipation(VProfile::Constant { delta: 0.01 });
    let set = coefficient_set(&toy, &[0.5]).unwrap();
    assert_eq!(set.nls.damping, C64::new(0.01, 0.0));
    assert_eq!(set.hnls.damping_derivative, C64::default());
    let toy = toy_system().with_dissipation(VProfile::Power { delta: 0.01, p: 2.0 });
    let set = coefficient_set(&toy, &[0.5]).unwrap();
    assert!((set.hnls.damping_derivative.re - 0.01).abs() < 1e-15);
    assert!(set.hnls.mean_flow.unwrap().kappa.norm() > 0.0);
}

#[test]
fn water_random_carriers() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(5);
    for dim in [1, 2] {
        let water = deepwater_system(dim).unwrap();
        for _ in 0..20 {
            let k: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.2..3.0)).collect();
            let set = coefficient_set(&water, &k).unwrap();
            let w = set.carrier.omega;
            assert!((set.nls.dispersion_coeff - 0.5 * (-1.0 / (4.0 * w.powi(3)))).abs() < 1e-10);
            let kn = k.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((set.nls.nonlinear_coeff.re + kn.powi(4) / w).abs() < 1e-10 * kn.powi(4));
            assert!(set.records().all(|r| r.within_tolerance()), "{:?}", set.records().map(|r| r.residual).collect::<Vec<_>>());
        }
    }
}

#[test]
fn pair_forcing_kind_is_checked() {
    let water = deepwater_system(1).unwrap();
    let c = carrier_setup(&water, &[1.0]).unwrap();
    assert!(harmonic_solve(&water, &c, 2, Amplitude::Scalar(C64::new(1.0, 0.0))).is_err());
    let rec = harmonic_solve(&water, &c, 0, Amplitude::Pair([C64::new(1.0, 0.0); 2]));
    assert!(matches!(rec, Err(Error::SingularHarmonic { .. })));
}

#[test]
fn user_system_with_zero_harmonic_forcing_is_rejected() {
    // J = i k^3 (KdV), H(k1, k2) = 1: forces a mean at leading order
    let j = Poly::new(1, vec![(vec![3], -C64::i())]).unwrap();
    let h = Poly::new(2, vec![(vec![0, 0], C64::new(1.0, 0.0))]).unwrap();
    let spec = polynomial_system("forced", j, h, None, VProfile::None).unwrap();
    assert!(matches!(coefficient_set(&spec, &[1.0]), Err(Error::ZeroHarmonicForcing(_))));
}

#[test]
fn user_kdv_system_matches_known_coefficients() {
    // u_t + u_xxx + eps u u_x = 0: J = -i k^3, H(k1, k2) = i k2 -> H_s = i (k1 + k2)/2.
    // w = -k^3, c_g = -3k^2, alpha = -3k, phi0 = 1/(6k^2), induced mean mu = -1/(3k^2)
    let j = Poly::new(1, vec![(vec![3], -C64::i())]).unwrap();
    let h = Poly::new(2, vec![(vec![0, 1], C64::i())]).unwrap();
    let spec = polynomial_system("kdv", j, h, None, VProfile::None).unwrap();
    let k = 0.8;
    let set = coefficient_set(&spec, &[k]).unwrap();
    assert!((set.carrier.omega + k * k * k).abs() < 1e-14);
    assert!((set.nls.dispersion_coeff + 3.0 * k).abs() < 1e-13);
    let phi0 = set.nls.phi0.scalar().unwrap();
    assert!((phi0 - C64::new(1.0 / (6.0 * k * k), 0.0)).norm() < 1e-13, "{phi0}");
    // classical KdV wavetrain: beta = 1/(6k) in i A_tau + alpha A'' + beta |A|^2 A = 0
    let beta = set.nls.nonlinear_coeff;
    assert!((beta - C64::new(1.0 / (6.0 * k), 0.0)).norm() < 1e-12, "{beta}");
    assert!((set.nls.mean_flow.unwrap().mu - C64::new(-1.0 / (3.0 * k * k), 0.0)).norm() < 1e-12);
}
