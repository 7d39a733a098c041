use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use envforge::coeffs::coefficient_set;
use envforge::direct::{direct_grid, init_from_envelope, DirectConfig, DirectField, DirectSolver};
use envforge::envelope::{Diagnostics, EnvelopeModel, EnvelopeSolver, SolverConfig};
use envforge::mi::{measure_growth, predicted_growth, GrowthConfig};
use envforge::recon::{run_study, Mode};
use envforge::snapshot;
use envforge::system::VProfile;
use envforge::Error;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{Manifest, OutputDir};

fn warn_if_amplifying(v: VProfile) {
    if v.amplifies() {
        eprintln!(
            "warning: dissipation {v:?} amplifies; V enters as +V A on the left-hand side, so decay needs V > 0"
        );
    }
}

fn failure_record(e: &Error) -> Value {
    match e {
        Error::BlowUp { time, max_amplitude } => json!({
            "error": e.to_string(),
            "time": time,
            "max_amplitude": max_amplitude,
        }),
        _ => json!({ "error": e.to_string() }),
    }
}

fn model(cfg: &RunConfig) -> Result<EnvelopeModel, CliError> {
    let spec = cfg.system()?;
    warn_if_amplifying(spec.dissipation);
    Ok(EnvelopeModel::new(&coefficient_set(&spec, &cfg.carrier()?)?))
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Nls => "nls",
        Mode::Hnls => "hnls",
    }
}

pub fn coeffs(cfg: &RunConfig) -> Result<(), CliError> {
    let spec = cfg.system()?;
    warn_if_amplifying(spec.dissipation);
    let set = coefficient_set(&spec, &cfg.carrier()?)?;
    let mut stdout = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut stdout, &set)?;
    writeln!(stdout).map_err(|source| CliError::Output {
        path: "stdout".into(),
        source,
    })?;
    Ok(())
}

fn envelope_csv(rows: &[Diagnostics]) -> String {
    let mut s = String::from("tau,mass,momentum,max_abs,mass_b\n");
    for d in rows {
        let _ = writeln!(s, "{:e},{:e},{:e},{:e},{:e}", d.tau, d.mass, d.momentum, d.max_abs, d.mass_b);
    }
    s
}

pub fn simulate_envelope(cfg: &RunConfig, text: &str, out_dir: &Path) -> Result<(), CliError> {
    let model = model(cfg)?;
    let grid = cfg.grid()?;
    let run = cfg.envelope_run()?;
    let mut state = cfg.initial_state(&grid, run.equation == Mode::Hnls)?;
    let mut sc = SolverConfig::new(run.dt);
    sc.scheme = run.scheme;
    sc.record_stride = usize::MAX;
    let mut solver = EnvelopeSolver::new(&grid, &model, sc)?;

    let mut out = OutputDir::create(out_dir)?;
    let mut manifest = Manifest::new("simulate-envelope", text, cfg.seed);
    let mut rows = vec![solver.diagnostics(&state)];
    let snap = |out: &mut OutputDir, i: usize, s: &_| -> Result<(), CliError> {
        if run.snapshots {
            out.write_with(&format!("envelope_{i:04}.envf"), |w| {
                snapshot::write_envelope(&mut { w }, s).map_err(std::io::Error::other)
            })?;
        }
        Ok(())
    };
    snap(&mut out, 0, &state)?;
    let mut failure = None;
    manifest.time("integrate", || -> Result<(), CliError> {
        for i in 1..=run.samples {
            let target = run.tau_end * i as f64 / run.samples as f64;
            if let Err(e) = solver.integrate(&mut state, target) {
                failure = Some(e);
                break;
            }
            rows.push(solver.diagnostics(&state));
            snap(&mut out, i, &state)?;
        }
        Ok(())
    })?;
    out.write_bytes("diagnostics.csv", envelope_csv(&rows).as_bytes())?;
    finish(manifest, &mut out, failure)
}

fn finish(manifest: Manifest, out: &mut OutputDir, failure: Option<Error>) -> Result<(), CliError> {
    manifest.finish(out, failure.as_ref().map(failure_record))?;
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn direct_row(s: &mut String, f: &DirectField) {
    let l2 = (f.u.iter().map(|v| v * v).sum::<f64>() * f.grid.dx()).sqrt();
    let _ = writeln!(s, "{:e},{:e},{:e},{:e}", f.t, f.integral(), f.max_abs(), l2);
}

pub fn simulate_direct(cfg: &RunConfig, text: &str, out_dir: &Path) -> Result<(), CliError> {
    if !cfg.is_toy() {
        return Err(CliError::Config("the direct solver integrates the toy PDE only; set system.name = \"toy\"".into()));
    }
    let model = model(cfg)?;
    let env_grid = cfg.grid()?;
    if env_grid.dim() != 1 {
        return Err(CliError::Config("the direct solver is one-dimensional".into()));
    }
    let run = cfg.direct_run()?;
    let k = model.carrier.k[0];
    let grid = direct_grid(env_grid.lx, run.eps, k, run.points_per_wavelength)?;
    let env = cfg.initial_state(&env_grid, false)?;
    let mut field = init_from_envelope(&env, &model, run.eps, &grid)?;
    let mut solver = DirectSolver::new(&grid, run.eps, DirectConfig::new(run.dt))?;

    let mut out = OutputDir::create(out_dir)?;
    let mut manifest = Manifest::new("simulate-direct", text, cfg.seed);
    let mut csv = String::from("t,integral,max_abs,l2\n");
    direct_row(&mut csv, &field);
    let snap = |out: &mut OutputDir, i: usize, f: &DirectField| -> Result<(), CliError> {
        if run.snapshots {
            out.write_with(&format!("direct_{i:04}.dirf"), |w| {
                snapshot::write_direct(&mut { w }, f).map_err(std::io::Error::other)
            })?;
        }
        Ok(())
    };
    snap(&mut out, 0, &field)?;
    let t_end = run.tau_end / (run.eps * run.eps);
    let mut failure = None;
    manifest.time("integrate", || -> Result<(), CliError> {
        for i in 1..=run.samples {
            if let Err(e) = solver.integrate(&mut field, t_end * i as f64 / run.samples as f64) {
                failure = Some(e);
                break;
            }
            direct_row(&mut csv, &field);
            snap(&mut out, i, &field)?;
        }
        Ok(())
    })?;
    out.write_bytes("diagnostics.csv", csv.as_bytes())?;
    finish(manifest, &mut out, failure)
}

pub fn validate(cfg: &RunConfig, text: &str, out_dir: &Path) -> Result<(), CliError> {
    let (study, modes) = cfg.study()?;
    warn_if_amplifying(study.dissipation);
    let mut out = OutputDir::create(out_dir)?;
    let mut manifest = Manifest::new("validate", text, cfg.seed);
    let outcome = match manifest.time("study", || run_study(&study, &modes)) {
        Ok(o) => o,
        Err(e) => return finish(manifest, &mut out, Some(e)),
    };
    for r in &outcome.reports {
        out.write_bytes(&format!("convergence_{}.csv", mode_name(r.mode)), r.to_csv().as_bytes())?;
    }
    let order = |m| outcome.report(m).and_then(|r| r.order());
    let separation = order(Mode::Hnls).zip(order(Mode::Nls)).map(|(h, n)| h - n);
    out.write_json(
        "report.json",
        &json!({ "reports": outcome.reports, "separation": separation }),
    )?;
    let failure = outcome.reports.iter().find_map(|r| r.check_fit().err());
    finish(manifest, &mut out, failure)
}

pub fn mi_scan(cfg: &RunConfig, text: &str, out_dir: &Path) -> Result<(), CliError> {
    let model = model(cfg)?;
    if model.carrier.k.len() != 1 {
        return Err(CliError::Config("mi-scan needs a one-dimensional carrier".into()));
    }
    let mi = cfg.mi_scan()?;
    let gc = GrowthConfig {
        points: mi.points,
        periods: mi.periods,
        dt: mi.dt,
        delta: mi.delta,
        ..GrowthConfig::default()
    };
    let (alpha, beta) = (model.nls.dispersion_coeff, model.nls.nonlinear_coeff.re);
    let k = model.carrier.k[0];
    let runs: Vec<(f64, f64)> = mi.a.iter().flat_map(|&a| mi.q.iter().map(move |&q| (a, q))).collect();

    let mut out = OutputDir::create(out_dir)?;
    let mut manifest = Manifest::new("mi-scan", text, cfg.seed);
    let rows = manifest.time("sweep", || {
        runs.par_iter()
            .map(|&(a, q)| match measure_growth(&model, a, q, &gc) {
                Ok(m) => Ok(format!("{k:e},{a:e},{q:e},{:e},{:e},ok\n", m.measured, m.predicted)),
                Err(Error::BlowUp { .. }) => Ok(format!(
                    "{k:e},{a:e},{q:e},NaN,{:e},blow-up\n",
                    predicted_growth(alpha, beta, a, q)
                )),
                Err(e) => Err(e),
            })
            .collect::<Result<Vec<_>, _>>()
    });
    let rows = match rows {
        Ok(r) => r,
        Err(e) => return finish(manifest, &mut out, Some(e)),
    };
    let mut csv = String::from("k,a,q,measured,predicted,status\n");
    csv.extend(rows);
    out.write_bytes("mi_scan.csv", csv.as_bytes())?;
    finish(manifest, &mut out, None)
}
