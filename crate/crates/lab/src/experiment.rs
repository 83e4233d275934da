//! The three reference studies: decay rate under constant shear (I) and
//! slow-shear convergence for a fast (II) and a small (III) ramp.

use std::path::{Path, PathBuf};

use agekin::dde::{alternate_rate, sharp_rate_b};
use agekin::grid::{self, aligned_params, cfl_time_step, init_grid};
use agekin::macro_ode::{integrate_mac1, integrate_mac2, KappaMode};
use agekin::model::{stationary_density, steady_observables};
use agekin::{InitialDensity, ModelParams, ShearProfile};
use log::{info, warn};
use rayon::prelude::*;

use crate::config::Settings;
use crate::fit::{fit_exponential_rate, fit_loglog_slope, FitResult};
use crate::output::{float, CsvWriter};
use crate::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    I,
    II,
    III,
}

impl Experiment {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "i" | "1" => Some(Self::I),
            "ii" | "2" => Some(Self::II),
            "iii" | "3" => Some(Self::III),
            _ => None,
        }
    }

    /// Ramp slope of the slow-shear studies.
    pub fn ramp_slope(self) -> f64 {
        match self {
            Self::III => 0.01,
            _ => 1.0,
        }
    }
}

/// Default horizon of experiment I.
pub const DECAY_HORIZON: f64 = 40.0;
const SAMPLE_SPACING: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct DecayRun {
    pub gamma_inf: f64,
    pub omega: f64,
    pub t: Vec<f64>,
    /// L² distance to the fixed point of the discrete step.
    pub l2_discrete: Vec<f64>,
    /// L² distance to the continuum stationary density.
    pub l2_continuum: Vec<f64>,
    pub fit: FitResult,
    pub sharp_b: f64,
    pub alternate_b: f64,
}

/// Fit window `[min(5ω, T/2), T]`.
pub fn decay_window(omega: f64, t_end: f64) -> (f64, f64) {
    let lo = 5.0 * omega;
    if lo > 0.5 * t_end {
        warn!(
            "5*omega = {lo} leaves too short a fit window, starting at T/2 = {}",
            0.5 * t_end
        );
        (0.5 * t_end, t_end)
    } else {
        (lo, t_end)
    }
}

fn base_params(s: &Settings, t_end: f64) -> Result<ModelParams, LabError> {
    let p = ModelParams::new(s.sigma_c, s.m_sigma, s.n_cells, s.dt.unwrap_or(1.0), t_end)?;
    Ok(aligned_params(&p)?)
}

/// Outer step actually used by the grid driver for a nominal `dt`.
fn effective_dt(dt: f64, t_end: f64) -> f64 {
    let steps = ((t_end / dt) - 1e-9).ceil().max(1.0);
    t_end / steps
}

pub fn decay_run(s: &Settings, gamma_inf: f64) -> Result<DecayRun, LabError> {
    let t_end = s.t_end.unwrap_or(DECAY_HORIZON);
    let mut params = base_params(s, t_end)?;
    let p0 = InitialDensity::gaussian(s.m_sigma)?;
    let field = init_grid(&params, &p0)?;
    params.dt = s.dt.unwrap_or_else(|| cfl_time_step(field.dsigma(), gamma_inf, s.cfl));
    let dt = effective_dt(params.dt, t_end);
    let target = field.discrete_equilibrium(dt, gamma_inf)?;
    let stride = ((SAMPLE_SPACING / dt).round() as usize).max(1);
    let profile = ShearProfile::constant(gamma_inf);
    let sc = s.sigma_c;

    let (mut t, mut l2d, mut l2c) = (Vec::new(), Vec::new(), Vec::new());
    grid::run_observed(field, &profile, dt, t_end, stride, |f| {
        t.push(f.time());
        l2d.push(f.l2_distance_to_field(&target));
        l2c.push(f.l2_distance(|x| stationary_density(x, gamma_inf, sc).unwrap_or(0.0)));
    })?;

    let omega = sc / gamma_inf;
    let window = decay_window(omega, t_end);
    let floor = 100.0 * f64::EPSILON;
    let usable: Vec<(f64, f64)> = t
        .iter()
        .zip(&l2d)
        .map(|(a, b)| (*a, *b))
        .filter(|(_, y)| *y > floor)
        .collect();
    let fit = fit_exponential_rate(&usable, window)?;
    let rate = sharp_rate_b(omega, 0.0)?;
    let (alternate_b, _) = alternate_rate(omega)?;
    info!(
        "gamma_inf {gamma_inf}: fitted rate {:.6} vs sharp {:.6} on [{}, {}]",
        fit.value, rate.b, window.0, window.1
    );
    Ok(DecayRun {
        gamma_inf,
        omega,
        t,
        l2_discrete: l2d,
        l2_continuum: l2c,
        fit,
        sharp_b: rate.b,
        alternate_b,
    })
}

/// Terminal gaps of one slow-shear run at `θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlowShearRow {
    pub epsilon: f64,
    pub f_gap: f64,
    pub tau_gap: f64,
    pub mac1_tau_gap: f64,
    pub mac2_tau_gap: f64,
    pub mac2_f_gap: f64,
    pub macc_tau_gap: f64,
    /// `|τ_mac2 − τ_macc| / |τ_mac2|`
    pub mac2_macc_rel_gap: f64,
    pub f_kinetic: f64,
    pub tau_kinetic: f64,
}

pub const MACRO_STEPS: f64 = 1e4;

pub fn slow_shear_run(s: &Settings, slope: f64, epsilon: f64) -> Result<SlowShearRow, LabError> {
    let theta = s.theta;
    let t_end = theta / epsilon;
    let mut params = base_params(s, t_end)?;
    let slow = ShearProfile::ramp(slope);
    let kinetic = ShearProfile::time_scaled(slow.clone(), epsilon);
    let p0 = InitialDensity::gaussian(s.m_sigma)?;
    let field = init_grid(&params, &p0)?;
    params.dt =
        s.dt.unwrap_or_else(|| cfl_time_step(field.dsigma(), kinetic.upper_bound(t_end), s.cfl));
    let run = grid::run_observed(field, &kinetic, params.dt, t_end, 100, |_| {})?;
    let end = run.field.observables();

    let steady = steady_observables(slope * theta, s.sigma_c)?;
    let dtheta = theta / MACRO_STEPS;
    let sc = s.sigma_c;
    // closures start from rest; the memory of (τ, f)(0) is gone by θ/ε ≫ 1
    let mac1 = integrate_mac1(epsilon, &slow, sc, 0.0, theta, dtheta)?;
    let mac2 = integrate_mac2(epsilon, &slow, sc, 0.0, 0.0, theta, dtheta, KappaMode::RateDependent)?;
    let macc = integrate_mac2(epsilon, &slow, sc, 0.0, 0.0, theta, dtheta, KappaMode::Constant2)?;
    let last = |v: &Vec<agekin::macro_ode::MacroState>| *v.last().expect("macro trajectory is never empty");
    let (m1, m2, mc) = (last(&mac1), last(&mac2), last(&macc));
    let f2 = m2.f.unwrap_or(f64::NAN);
    Ok(SlowShearRow {
        epsilon,
        f_gap: (end.fluidity - steady.f_inf).abs(),
        tau_gap: (end.stress - steady.tau_inf).abs(),
        mac1_tau_gap: (end.stress - m1.tau).abs(),
        mac2_tau_gap: (end.stress - m2.tau).abs(),
        mac2_f_gap: (end.fluidity - f2).abs(),
        macc_tau_gap: (end.stress - mc.tau).abs(),
        mac2_macc_rel_gap: (m2.tau - mc.tau).abs() / m2.tau.abs(),
        f_kinetic: end.fluidity,
        tau_kinetic: end.stress,
    })
}

/// Log–log slope of one gap column against ε.
#[derive(Debug, Clone)]
pub struct SlopeRecord {
    pub quantity: &'static str,
    pub fit: Result<FitResult, crate::fit::FitError>,
}

#[derive(Debug, Default)]
pub struct Summary {
    pub decay: Vec<DecayRun>,
    pub slow: Vec<SlowShearRow>,
    pub slopes: Vec<SlopeRecord>,
    /// Sweep members that failed, with the parameter value.
    pub failures: Vec<(f64, LabError)>,
    pub files: Vec<PathBuf>,
}

type GapColumn = (&'static str, fn(&SlowShearRow) -> f64);

fn gap_columns(experiment: Experiment) -> Vec<GapColumn> {
    let mut cols: Vec<GapColumn> = vec![
        ("f_gap", |r| r.f_gap),
        ("tau_gap", |r| r.tau_gap),
        ("mac1_tau_gap", |r| r.mac1_tau_gap),
        ("mac2_tau_gap", |r| r.mac2_tau_gap),
        ("mac2_f_gap", |r| r.mac2_f_gap),
    ];
    if experiment == Experiment::III {
        cols.push(("macc_tau_gap", |r| r.macc_tau_gap));
        cols.push(("mac2_macc_rel_gap", |r| r.mac2_macc_rel_gap));
    }
    cols
}

/// Runs one study, writes its CSV files under `s.out` and returns the
/// numbers. Failed sweep members are listed in the summary and skipped in
/// the files.
pub fn run_experiment(experiment: Experiment, s: &Settings) -> Result<Summary, LabError> {
    let mut summary = Summary::default();
    match experiment {
        Experiment::I => {
            let results: Vec<_> = s.gamma_infs.par_iter().map(|&g| (g, decay_run(s, g))).collect();
            for (g, r) in results {
                match r {
                    Ok(run) => summary.decay.push(run),
                    Err(e) => summary.failures.push((g, e)),
                }
            }
            write_decay(&s.out, &mut summary)?;
        }
        Experiment::II | Experiment::III => {
            let slope = experiment.ramp_slope();
            let results: Vec<_> = s
                .epsilons
                .par_iter()
                .map(|&e| (e, slow_shear_run(s, slope, e)))
                .collect();
            for (e, r) in results {
                match r {
                    Ok(row) => summary.slow.push(row),
                    Err(err) => summary.failures.push((e, err)),
                }
            }
            for (name, col) in gap_columns(experiment) {
                let pairs: Vec<(f64, f64)> = summary.slow.iter().map(|r| (r.epsilon, col(r))).collect();
                summary.slopes.push(SlopeRecord {
                    quantity: name,
                    fit: fit_loglog_slope(&pairs),
                });
            }
            write_slow(&s.out, experiment, &mut summary)?;
        }
    }
    for (v, e) in &summary.failures {
        warn!("sweep member {v} failed: {e}");
    }
    Ok(summary)
}

fn write_decay(out: &Path, summary: &mut Summary) -> Result<(), LabError> {
    let path = out.join("rates.csv");
    let mut w = CsvWriter::create(
        &path,
        &[
            "gamma_inf",
            "omega",
            "fitted_rate",
            "sharp_b",
            "alternate_b",
            "fit_residual",
        ],
    )?;
    for r in &summary.decay {
        w.floats(&[
            r.gamma_inf,
            r.omega,
            r.fit.value,
            r.sharp_b,
            r.alternate_b,
            r.fit.residual,
        ])?;
    }
    w.finish()?;
    summary.files.push(path);
    for r in &summary.decay {
        let path = out.join(format!("decay_{}.csv", r.gamma_inf));
        let mut w = CsvWriter::create(&path, &["t", "l2_discrete", "l2_continuum"])?;
        for i in 0..r.t.len() {
            w.floats(&[r.t[i], r.l2_discrete[i], r.l2_continuum[i]])?;
        }
        w.finish()?;
        summary.files.push(path);
    }
    Ok(())
}

fn write_slow(out: &Path, experiment: Experiment, summary: &mut Summary) -> Result<(), LabError> {
    let cols = gap_columns(experiment);
    let name = if experiment == Experiment::III {
        "smallshear.csv"
    } else {
        "eps_convergence.csv"
    };
    let path = out.join(name);
    let mut header = vec!["epsilon"];
    header.extend(cols.iter().map(|(n, _)| *n));
    let mut w = CsvWriter::create(&path, &header)?;
    for r in &summary.slow {
        let mut v = vec![r.epsilon];
        v.extend(cols.iter().map(|(_, c)| c(r)));
        w.floats(&v)?;
    }
    w.finish()?;
    summary.files.push(path);

    let path = out.join("slopes.csv");
    let mut w = CsvWriter::create(&path, &["quantity", "slope", "residual", "n_points"])?;
    for rec in &summary.slopes {
        match &rec.fit {
            Ok(f) => w.row(&[
                rec.quantity.to_string(),
                float(f.value),
                float(f.residual),
                f.n.to_string(),
            ])?,
            Err(e) => warn!("no slope for {}: {e}", rec.quantity),
        }
    }
    w.finish()?;
    summary.files.push(path);
    Ok(())
}
