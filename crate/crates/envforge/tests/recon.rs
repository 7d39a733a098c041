use std::f64::consts::PI;

use envforge::coeffs::coefficient_set;
use envforge::direct::{direct_grid, init_from_envelope};
use envforge::envelope::{EnvelopeModel, EnvelopeState};
use envforge::recon::{fit_order, reconstruct, run_study, Mode, Reconstructor, StudyConfig};
use envforge::spectral::{Grid, Spectral};
use envforge::system::toy_system;
use envforge::{Error, C64};

const EPS: f64 = 1.0 / 20.0;

fn setup() -> (EnvelopeModel, Grid, Grid) {
    let model = EnvelopeModel::new(&coefficient_set(&toy_system(), &[0.5]).unwrap());
    let env = Grid::new_1d(32, 8.0 * PI).unwrap();
    let direct = direct_grid(env.lx, EPS, 0.5, 16).unwrap();
    (model, env, direct)
}

fn modulated(grid: &Grid, with_b: bool) -> EnvelopeState {
    let mut s = EnvelopeState::from_fn(grid, with_b, |x, _| C64::new(1.0 + 0.3 * (x / 4.0).cos(), 0.2 * (x / 2.0).sin()));
    if let Some(b) = s.b.as_mut() {
        for (i, z) in b.iter_mut().enumerate() {
            *z = C64::new(0.1 * (grid.x(i) / 4.0).sin(), 0.0);
        }
    }
    s
}

#[test]
fn t_zero_matches_initialization() {
    let (model, env, direct) = setup();
    let s = modulated(&env, true);
    let a = reconstruct(&s, &model, EPS, &direct, 0.0).unwrap();
    let b = init_from_envelope(&s, &model, EPS, &direct).unwrap();
    assert_eq!(a, b);
}

#[test]
fn absent_b_equals_zero_b() {
    let (model, env, direct) = setup();
    let without = modulated(&env, false);
    let mut with = without.clone();
    with.b = Some(vec![C64::default(); env.len()]);
    let (a, b) = (
        reconstruct(&without, &model, EPS, &direct, 0.0).unwrap(),
        reconstruct(&with, &model, EPS, &direct, 0.0).unwrap(),
    );
    assert_eq!(a.u, b.u);
}

#[test]
fn uniform_envelope_is_a_stokes_like_wave_train() {
    let (model, env, direct) = setup();
    let a = 0.6;
    let t = 37.5;
    let mut s = EnvelopeState::from_fn(&env, false, |_, _| C64::new(a, 0.0));
    s.tau = EPS * EPS * t;
    let f = reconstruct(&s, &model, EPS, &direct, t).unwrap();
    let w = model.carrier.omega;
    for (x, u) in direct.xs().iter().zip(&f.u) {
        let th = 0.5 * x - w * t;
        let want = 2.0 * a * th.cos() - 2.0 * EPS * 4.0 / 3.0 * a * a * (2.0 * th).cos() - EPS * 8.0 / 7.0 * a * a;
        assert!((u - want).abs() < 1e-12);
    }
    // second harmonic amplitude 2 eps |phi0| a^2
    let hat = Spectral::new(&direct).forward_real(&f.u);
    let n = direct.nx as f64;
    let carrier_mode = 40;
    assert!((2.0 * (hat[2 * carrier_mode] / n).norm() - 2.0 * EPS * 4.0 / 3.0 * a * a).abs() < 1e-12);
}

#[test]
fn envelope_is_carried_at_the_group_velocity() {
    // A(xi) = 1 + 0.3 cos(xi / 4): at time t the envelope maximum sits at x = c_g t
    let (model, env, direct) = setup();
    let t = 200.0;
    let mut s = EnvelopeState::from_fn(&env, false, |x, _| C64::new(1.0 + 0.3 * (x / 4.0).cos(), 0.0));
    s.tau = EPS * EPS * t;
    let rec = Reconstructor::new(&model).unwrap();
    let f = rec.field(&s, EPS, &direct, t).unwrap();
    let cg = model.carrier.group_velocity[0];
    let w = model.carrier.omega;
    for (x, u) in direct.xs().iter().zip(&f.u) {
        let amp = 1.0 + 0.3 * (EPS * (x - cg * t) / 4.0).cos();
        let th = 0.5 * x - w * t;
        let want = 2.0 * amp * th.cos() - 2.0 * EPS * 4.0 / 3.0 * amp * amp * (2.0 * th).cos() - EPS * 8.0 / 7.0 * amp * amp;
        assert!((u - want).abs() < 1e-12, "{u} vs {want}");
    }
}

#[test]
fn slow_time_must_match_fast_time() {
    let (model, env, direct) = setup();
    let s = modulated(&env, false);
    assert!(matches!(reconstruct(&s, &model, EPS, &direct, 10.0), Err(Error::InvalidInput(_))));
}

#[test]
fn fit_recovers_a_power_law() {
    let eps = [0.1, 0.05, 0.025, 0.0125];
    let errs: Vec<f64> = eps.iter().map(|e: &f64| 3.0 * e.powf(1.7)).collect();
    let fit = fit_order(&eps, &errs).unwrap();
    assert!((fit.order - 1.7).abs() < 1e-12);
    assert!((fit.intercept - 3.0f64.ln()).abs() < 1e-12);
    assert!(fit.residual < 1e-12);
    assert!(fit_order(&eps[..2], &errs[..2]).is_none());
}

#[test]
fn zero_duration_study_is_exact_and_unfittable() {
    let cfg = StudyConfig {
        tau_end: 0.0,
        ..StudyConfig::default()
    };
    let out = run_study(&cfg, &[Mode::Nls, Mode::Hnls]).unwrap();
    for r in &out.reports {
        assert!(r.l2.iter().chain(&r.linf).all(|&e| e < 1e-10));
        assert!(r.fit.is_none());
        assert!(matches!(r.check_fit(), Err(Error::FitUnreliable { .. })));
    }
    let csv = out.reports[0].to_csv();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("eps,l2,linf\n"));
}

#[test]
fn study_needs_three_eps_values() {
    let cfg = StudyConfig {
        eps: vec![0.05, 0.025],
        ..StudyConfig::default()
    };
    assert!(matches!(run_study(&cfg, &[Mode::Nls]), Err(Error::InvalidInput(_))));
}

#[test]
fn short_study_is_monotone_with_higher_hnls_order() {
    // a cheap version of the standard scenario; the full one is in the acceptance suite
    let cfg = StudyConfig {
        eps: vec![1.0 / 10.0, 1.0 / 20.0, 1.0 / 40.0],
        tau_end: 0.5,
        ..StudyConfig::default()
    };
    let out = run_study(&cfg, &[Mode::Nls, Mode::Hnls]).unwrap();
    let nls = out.report(Mode::Nls).unwrap();
    let hnls = out.report(Mode::Hnls).unwrap();
    assert!(nls.monotone && hnls.monotone, "{nls:?} {hnls:?}");
    assert!(hnls.order().unwrap() > nls.order().unwrap(), "{nls:?} {hnls:?}");
    // re-reconstruction with the analytic speed reproduces the stored errors
    let again = out.l2_with_group_velocity(Mode::Hnls, out.model.carrier.group_velocity[0]).unwrap();
    assert_eq!(again, hnls.l2);
}
