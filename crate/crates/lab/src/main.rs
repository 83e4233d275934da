#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use agekin::characteristics::{compute_phi, DEFAULT_TOLERANCE};
use agekin::dde::{kernel_k, sharp_rate_b};
use agekin::grid::{self, cfl_time_step, init_grid};
use agekin::macro_ode::{integrate_mac1, integrate_mac2, KappaMode};
use agekin::model::{stationary_density, steady_observables};
use agekin::pdmp::{estimate, PdmpConfig};
use agekin::{InitialDensity, ModelParams};
use agekin_lab::compare::compare;
use agekin_lab::config::{ConfigError, ProfileSpec, Settings};
use agekin_lab::experiment::{run_experiment, Experiment};
use agekin_lab::output::CsvWriter;
use agekin_lab::{LabError, EXIT_INVALID, EXIT_SOLVER, EXIT_TOLERANCE};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "agekin",
    version,
    about = "Kinetic model of aging fluids: solvers and experiments"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// key = value settings file; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    sigma_c: Option<String>,
    #[arg(long, global = true)]
    m_sigma: Option<String>,
    #[arg(long, global = true)]
    n_cells: Option<String>,
    #[arg(long, global = true)]
    dt: Option<String>,
    #[arg(long, global = true)]
    t_end: Option<String>,
    /// constant:<rate> or ramp:<slope>
    #[arg(long, global = true)]
    profile: Option<String>,
    /// Slow-time scaling of the profile (evolve, macro, compare)
    #[arg(long, global = true)]
    epsilon: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    #[arg(long, global = true)]
    out: Option<String>,
    #[arg(long, global = true)]
    paper_scale: bool,
    /// Worker threads for sweeps and ensembles
    #[arg(long, global = true)]
    jobs: Option<String>,
    #[arg(long, global = true)]
    cfl: Option<String>,
    /// Comma-separated ε sweep
    #[arg(long, global = true)]
    epsilons: Option<String>,
    /// Comma-separated γ̇∞ sweep
    #[arg(long, global = true)]
    gamma_inf: Option<String>,
    #[arg(long, global = true)]
    theta: Option<String>,
    #[arg(long, global = true)]
    paths: Option<String>,
    #[arg(long, global = true)]
    omega: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Stationary observables and density for a constant rate
    Steady,
    /// Grid run; writes the observable series and the final density
    Evolve {
        #[arg(long, default_value = "gaussian")]
        initial: String,
        /// Outer steps between samples
        #[arg(long, default_value_t = 10)]
        stride: usize,
    },
    /// Renewal-formula solution: φ table and moments
    Characteristics {
        #[arg(long, default_value = "uniform:0:2")]
        initial: String,
    },
    /// Fundamental solution of the delay equation
    Kernel,
    /// Sharp and alternate decay rates
    Rate,
    /// Macroscopic closures in slow time
    Macro,
    /// Monte Carlo ensemble estimates
    Pdmp {
        #[arg(long, default_value = "gaussian")]
        initial: String,
        #[arg(long, default_value_t = 50)]
        samples: usize,
    },
    /// Reference study i, ii or iii
    Experiment { which: String },
    /// Grid vs characteristics vs Monte Carlo report
    Compare,
}

enum Failure {
    Lab(LabError),
    Tolerance,
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        Self::Lab(e)
    }
}

impl From<agekin::Error> for Failure {
    fn from(e: agekin::Error) -> Self {
        Self::Lab(e.into())
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self::Lab(e.into())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::Lab(e.into())
    }
}

fn settings(c: &Common) -> Result<Settings, ConfigError> {
    let mut s = Settings::default();
    if let Some(path) = &c.config {
        s.apply_file(path)?;
    }
    if c.paper_scale {
        s.paper_scale();
    }
    let flags = [
        ("sigma_c", &c.sigma_c),
        ("m_sigma", &c.m_sigma),
        ("n_cells", &c.n_cells),
        ("dt", &c.dt),
        ("t_end", &c.t_end),
        ("profile", &c.profile),
        ("epsilon", &c.epsilon),
        ("seed", &c.seed),
        ("out", &c.out),
        ("jobs", &c.jobs),
        ("cfl", &c.cfl),
        ("epsilons", &c.epsilons),
        ("gamma_inf", &c.gamma_inf),
        ("theta", &c.theta),
        ("paths", &c.paths),
        ("omega", &c.omega),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            s.set(k, v)?;
        }
    }
    Ok(s)
}

fn parse_initial(spec: &str, s: &Settings) -> Result<InitialDensity, Failure> {
    let bad = |reason: &str| {
        Failure::Lab(
            ConfigError::BadValue {
                key: "initial".into(),
                value: spec.into(),
                reason: reason.into(),
            }
            .into(),
        )
    };
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["gaussian"] => Ok(InitialDensity::gaussian(s.m_sigma)?),
        ["uniform", lo, hi] => {
            let lo: f64 = lo.parse().map_err(|_| bad("lower bound is not a number"))?;
            let hi: f64 = hi.parse().map_err(|_| bad("upper bound is not a number"))?;
            Ok(InitialDensity::uniform(lo, hi)?)
        }
        _ => Err(bad("expected gaussian or uniform:<lo>:<hi>")),
    }
}

fn constant_rate(s: &Settings) -> f64 {
    match s.profile {
        ProfileSpec::Constant(v) => v,
        ProfileSpec::Ramp(a) => a * s.theta,
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let s = settings(&cli.common)?;
    if let Some(j) = s.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| {
                Failure::Lab(
                    ConfigError::BadValue {
                        key: "jobs".into(),
                        value: j.to_string(),
                        reason: e.to_string(),
                    }
                    .into(),
                )
            })?;
    }
    let out = &s.out;
    match cli.command {
        Command::Steady => {
            let rate = constant_rate(&s);
            let st = steady_observables(rate, s.sigma_c)?;
            println!(
                "gamma_rate {rate}\nf_inf {}\ntau_inf {}\nbeta_inf {}\nkappa {}",
                st.f_inf, st.tau_inf, st.beta_inf, st.kappa
            );
            let params = ModelParams::new(s.sigma_c, s.m_sigma, s.n_cells, 1.0, 1.0)?;
            let h = params.dsigma();
            let mut w = CsvWriter::create(&out.join("steady.csv"), &["sigma", "p_inf"])?;
            for i in 0..params.n_cells {
                let x = -s.m_sigma + (i as f64 + 0.5) * h;
                w.floats(&[x, stationary_density(x, rate, s.sigma_c)?])?;
            }
            w.finish()?;
        }
        Command::Evolve { initial, stride } => {
            let t_end = s.t_end.unwrap_or(10.0);
            let profile = s.profile.kinetic(s.epsilon);
            let p0 = parse_initial(&initial, &s)?;
            let params = ModelParams::new(s.sigma_c, s.m_sigma, s.n_cells, 1.0, t_end)?;
            let field = init_grid(&params, &p0)?;
            let dt =
                s.dt.unwrap_or_else(|| cfl_time_step(field.dsigma(), profile.upper_bound(t_end), s.cfl));
            let run = grid::run_observed(field, &profile, dt, t_end, stride.max(1), |_| {})?;
            let mut w = CsvWriter::create(
                &out.join("evolve.csv"),
                &["t", "fluidity", "stress", "tail_moment", "mass", "min"],
            )?;
            for o in &run.series.samples {
                w.floats(&[o.t, o.fluidity, o.stress, o.tail_moment, o.mass, o.min])?;
            }
            w.finish()?;
            let f = &run.field;
            let mut w = CsvWriter::create(&out.join("density.csv"), &["sigma", "p"])?;
            for (i, p) in f.values().iter().enumerate() {
                w.floats(&[f.center(i), *p])?;
            }
            w.finish()?;
            let last = run.series.last().copied().unwrap_or_else(|| f.observables());
            println!(
                "t {} cells {} f {} tau {} mass {}",
                last.t,
                f.n_cells(),
                last.fluidity,
                last.stress,
                last.mass
            );
        }
        Command::Characteristics { initial } => {
            let t_end = s.t_end.unwrap_or(5.0);
            let profile = s.profile.kinetic(s.epsilon);
            let p0 = parse_initial(&initial, &s)?;
            let table = compute_phi(t_end, s.dt, &p0, &profile, s.sigma_c, DEFAULT_TOLERANCE)?;
            let mut w = CsvWriter::create(&out.join("phi.csv"), &["t", "phi", "a"])?;
            for (i, (phi, a)) in table.values().iter().zip(table.a_values()).enumerate() {
                w.floats(&[i as f64 * table.step(), *phi, *a])?;
            }
            w.finish()?;
            let check = table.fluidity_of_density(t_end)?;
            println!(
                "t {t_end} phi {} stress {} mass {} fluidity gap {:e}",
                table.phi(t_end)?,
                table.stress(t_end)?,
                table.mass(t_end)?,
                check.gap
            );
        }
        Command::Kernel => {
            let omega = s.omega.unwrap_or(s.sigma_c / constant_rate(&s));
            let t_end = s.t_end.unwrap_or(40.0);
            let dt = s.dt.unwrap_or(omega / 64.0);
            let k = kernel_k(omega, t_end, dt)?;
            let mut w = CsvWriter::create(&out.join("kernel.csv"), &["t", "k", "k1"])?;
            for (i, (v, v1)) in k.values().iter().zip(k.k1()).enumerate() {
                w.floats(&[k.time(i), *v, v1])?;
            }
            w.finish()?;
            let env = k.envelope_decay_rate(omega, 1e-13);
            println!(
                "omega {omega} limit {} k(t_max) {} envelope rate {}",
                k.limit(),
                k.values().last().copied().unwrap_or(f64::NAN),
                env.map_or("n/a".to_string(), |r| r.to_string())
            );
        }
        Command::Rate => {
            let omega = s.omega.unwrap_or(s.sigma_c / constant_rate(&s));
            let r = sharp_rate_b(omega, 0.0)?;
            println!(
                "omega {}\nroot {}\nb {}\nbeta {}\nresidual {:e}\ncarre_residual {:e}\nsine_relation {}\nb_tilde {}\nc_tilde0 {}",
                r.omega, r.root, r.b, r.beta, r.residual, r.carre_residual, r.sine_relation, r.b_tilde, r.c_tilde0
            );
        }
        Command::Macro => {
            let eps = s.epsilon.unwrap_or(0.05);
            let slow = s.profile.slow();
            let dtheta = s.dt.unwrap_or(s.theta / 1e4);
            let m1 = integrate_mac1(eps, &slow, s.sigma_c, 0.0, s.theta, dtheta)?;
            let m2 = integrate_mac2(
                eps,
                &slow,
                s.sigma_c,
                0.0,
                0.0,
                s.theta,
                dtheta,
                KappaMode::RateDependent,
            )?;
            let mc = integrate_mac2(eps, &slow, s.sigma_c, 0.0, 0.0, s.theta, dtheta, KappaMode::Constant2)?;
            let mut w = CsvWriter::create(
                &out.join("macro.csv"),
                &["theta", "tau_mac1", "tau_mac2", "f_mac2", "tau_macc", "f_macc"],
            )?;
            for ((a, b), c) in m1.iter().zip(&m2).zip(&mc) {
                w.floats(&[
                    a.theta,
                    a.tau,
                    b.tau,
                    b.f.unwrap_or(f64::NAN),
                    c.tau,
                    c.f.unwrap_or(f64::NAN),
                ])?;
            }
            w.finish()?;
            if let (Some(a), Some(b), Some(c)) = (m1.last(), m2.last(), mc.last()) {
                println!("theta {} tau mac1 {} mac2 {} macc {}", a.theta, a.tau, b.tau, c.tau);
            }
        }
        Command::Pdmp { initial, samples } => {
            let t_end = s.t_end.unwrap_or(5.0);
            let n = samples.max(1);
            let times: Vec<f64> = (1..=n).map(|i| t_end * i as f64 / n as f64).collect();
            let config = PdmpConfig {
                paths: s.paths,
                seed: s.seed,
                profile: s.profile.kinetic(s.epsilon),
                sigma_c: s.sigma_c,
                t_end,
                initial: parse_initial(&initial, &s)?,
            };
            let est = estimate(&config, &times)?;
            let mut w = CsvWriter::create(&out.join("pdmp.csv"), &["t", "f_hat", "f_se", "tau_hat", "tau_se"])?;
            for e in &est {
                w.floats(&[e.t, e.f_hat, e.f_se, e.tau_hat, e.tau_se])?;
            }
            w.finish()?;
            if let Some(e) = est.last() {
                println!(
                    "t {} f {} +- {} tau {} +- {}",
                    e.t, e.f_hat, e.f_se, e.tau_hat, e.tau_se
                );
            }
        }
        Command::Experiment { which } => {
            let exp = Experiment::parse(&which).ok_or_else(|| {
                Failure::Lab(
                    ConfigError::BadValue {
                        key: "experiment".into(),
                        value: which.clone(),
                        reason: "expected i, ii or iii".into(),
                    }
                    .into(),
                )
            })?;
            let summary = run_experiment(exp, &s)?;
            for r in &summary.decay {
                println!(
                    "gamma_inf {} omega {} fitted {:.6} sharp {:.6} alternate {:.6}",
                    r.gamma_inf, r.omega, r.fit.value, r.sharp_b, r.alternate_b
                );
            }
            for r in &summary.slopes {
                match &r.fit {
                    Ok(f) => println!("slope {} {:.4}", r.quantity, f.value),
                    Err(e) => println!("slope {} unavailable: {e}", r.quantity),
                }
            }
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
            if let Some((v, e)) = summary.failures.into_iter().next() {
                eprintln!("sweep member {v} failed");
                return Err(Failure::Lab(e));
            }
        }
        Command::Compare => {
            let report = compare(&s)?;
            print!("{}", report.render());
            if !report.passed() {
                return Err(Failure::Tolerance);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Tolerance) => {
            eprintln!("comparison outside tolerance");
            ExitCode::from(EXIT_TOLERANCE as u8)
        }
        Err(Failure::Lab(e)) => {
            eprintln!("error: {e}");
            let code = e.exit_code();
            debug_assert!(code == EXIT_INVALID || code == EXIT_SOLVER);
            ExitCode::from(code as u8)
        }
    }
}
