//! Grid, characteristics and Monte Carlo solutions of the same problem,
//! checked against each other.

use agekin::characteristics::{compute_phi, DEFAULT_TOLERANCE};
use agekin::grid::{self, aligned_cell_count, cfl_time_step, init_grid};
use agekin::pdmp::{estimate, EnsembleEstimate, PdmpConfig};
use agekin::{InitialDensity, ModelParams};

use crate::config::Settings;
use crate::LabError;

pub const L1_GAP_MAX: f64 = 2e-2;
pub const REFINEMENT_RATIO: (f64, f64) = (1.6, 2.6);
pub const STANDARD_ERRORS: f64 = 3.0;
pub const DEFAULT_HORIZON: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridLevel {
    pub n_cells: usize,
    pub dsigma: f64,
    pub l1_gap: f64,
    pub fluidity: f64,
    pub stress: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub bound: String,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub t: f64,
    pub coarse: GridLevel,
    pub fine: GridLevel,
    pub phi: f64,
    pub stress_characteristics: f64,
    pub pdmp: EnsembleEstimate,
    pub checks: Vec<Check>,
}

impl CompareReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn render(&self) -> String {
        let mut s = format!("three-way comparison at t = {}\n", self.t);
        for g in [&self.coarse, &self.fine] {
            s += &format!(
                "  grid {:>7} cells  L1 gap {:.4e}  f {:.6}  tau {:.6}\n",
                g.n_cells, g.l1_gap, g.fluidity, g.stress
            );
        }
        s += &format!(
            "  characteristics  f {:.6}  tau {:.6}\n",
            self.phi, self.stress_characteristics
        );
        s += &format!(
            "  pdmp N={}  f {:.6} +- {:.2e}  tau {:.6} +- {:.2e}\n",
            self.pdmp.n, self.pdmp.f_hat, self.pdmp.f_se, self.pdmp.tau_hat, self.pdmp.tau_se
        );
        for c in &self.checks {
            s += &format!(
                "  {} {:<28} {:.4e}  ({})\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.bound
            );
        }
        s
    }
}

fn grid_level(
    s: &Settings,
    n_cells: usize,
    t_end: f64,
    p0: &InitialDensity,
    table: &agekin::characteristics::PhiTable,
) -> Result<GridLevel, LabError> {
    let profile = s.profile.kinetic(s.epsilon);
    let n = aligned_cell_count(n_cells, s.m_sigma, s.sigma_c)?;
    let mut params = ModelParams::new(s.sigma_c, s.m_sigma, n, 1.0, t_end)?;
    let field = init_grid(&params, p0)?;
    params.dt = cfl_time_step(field.dsigma(), profile.upper_bound(t_end), s.cfl);
    let run = grid::run_observed(field, &profile, params.dt, t_end, 100, |_| {})?;
    let f = &run.field;
    let obs = f.observables();
    Ok(GridLevel {
        n_cells: f.n_cells(),
        dsigma: f.dsigma(),
        l1_gap: table.l1_distance_to_cells(t_end, f.center(0), f.dsigma(), f.values())?,
        fluidity: obs.fluidity,
        stress: obs.stress,
    })
}

/// Uniform(0, 2) initial datum under the configured profile. The refined
/// grid has (about) twice the cells; the time step follows the CFL number.
pub fn compare(s: &Settings) -> Result<CompareReport, LabError> {
    let t = s.t_end.unwrap_or(DEFAULT_HORIZON);
    let p0 = InitialDensity::uniform(0.0, 2.0)?;
    let profile = s.profile.kinetic(s.epsilon);
    let table = compute_phi(t, None, &p0, &profile, s.sigma_c, DEFAULT_TOLERANCE)?;
    let coarse = grid_level(s, s.n_cells, t, &p0, &table)?;
    let fine = grid_level(s, 2 * coarse.n_cells, t, &p0, &table)?;
    let pdmp = estimate(
        &PdmpConfig {
            paths: s.paths,
            seed: s.seed,
            profile: profile.clone(),
            sigma_c: s.sigma_c,
            t_end: t,
            initial: p0,
        },
        &[t],
    )?[0];

    let ratio = coarse.l1_gap / fine.l1_gap;
    let f_dev = (pdmp.f_hat - fine.fluidity).abs() / pdmp.f_se;
    let tau_dev = (pdmp.tau_hat - fine.stress).abs() / pdmp.tau_se;
    let checks = vec![
        Check {
            name: "grid-characteristics L1",
            value: coarse.l1_gap,
            bound: format!("<= {L1_GAP_MAX:e}"),
            pass: coarse.l1_gap <= L1_GAP_MAX,
        },
        Check {
            name: "L1 refinement ratio",
            value: ratio,
            bound: format!("in [{}, {}]", REFINEMENT_RATIO.0, REFINEMENT_RATIO.1),
            pass: (REFINEMENT_RATIO.0..=REFINEMENT_RATIO.1).contains(&ratio),
        },
        Check {
            name: "pdmp fluidity deviation/SE",
            value: f_dev,
            bound: format!("<= {STANDARD_ERRORS}"),
            pass: f_dev <= STANDARD_ERRORS,
        },
        Check {
            name: "pdmp stress deviation/SE",
            value: tau_dev,
            bound: format!("<= {STANDARD_ERRORS}"),
            pass: tau_dev <= STANDARD_ERRORS,
        },
    ];
    Ok(CompareReport {
        t,
        coarse,
        fine,
        phi: table.phi(t)?,
        stress_characteristics: table.stress(t)?,
        pdmp,
        checks,
    })
}
