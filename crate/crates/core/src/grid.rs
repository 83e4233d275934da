//! Splitting scheme on a periodic cell grid: exact decay above threshold with
//! reinjection of the removed mass into the zero-stress cell, then upwind
//! advection at the current shear rate.

use log::{info, warn};

use crate::error::{invalid, Error, Result};
use crate::initial::InitialDensity;
use crate::model::{ModelParams, ShearProfile};

pub const MASS_TOLERANCE: f64 = 1e-10;
pub const TAIL_WARN: f64 = 1e-8;

/// Smallest cell count `>= requested` (searched up to 4x) for which `σ = 0`
/// is a cell center and `±σ_c` are cell boundaries. That needs an odd count
/// with `n σ_c / m_σ` an odd integer.
pub fn aligned_cell_count(requested: usize, m_sigma: f64, sigma_c: f64) -> Result<usize> {
    if !(m_sigma > sigma_c) || !(sigma_c > 0.0) {
        return Err(Error::Geometry(format!(
            "threshold {sigma_c} must lie strictly inside the domain half-width {m_sigma}"
        )));
    }
    let ratio = sigma_c / m_sigma;
    for n in requested.max(8)..=4 * requested.max(8) {
        if n % 2 == 0 {
            continue;
        }
        let k = n as f64 * ratio;
        let kr = k.round();
        if (k - kr).abs() <= 1e-9 * k.max(1.0) && (kr as u64) % 2 == 1 {
            return Ok(n);
        }
    }
    Err(Error::Geometry(format!(
        "no cell count in [{requested}, {}] aligns 0 and ±{sigma_c} on [-{m_sigma}, {m_sigma})",
        4 * requested
    )))
}

/// Copy of `params` with the cell count moved to the next aligned value.
pub fn aligned_params(params: &ModelParams) -> Result<ModelParams> {
    params.validate()?;
    let n = aligned_cell_count(params.n_cells, params.m_sigma, params.sigma_c)?;
    if n != params.n_cells {
        info!("cell count adjusted from {} to {n} for grid alignment", params.n_cells);
    }
    Ok(ModelParams { n_cells: n, ..*params })
}

/// Time step giving CFL number `cfl` at the largest rate.
pub fn cfl_time_step(dsigma: f64, max_rate: f64, cfl: f64) -> f64 {
    if max_rate > 0.0 {
        cfl * dsigma / max_rate
    } else {
        dsigma
    }
}

/// Integrated quantities of a density snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables {
    pub t: f64,
    pub fluidity: f64,
    pub stress: f64,
    pub tail_moment: f64,
    pub mass: f64,
    pub min: f64,
}

#[derive(Debug, Clone, Default)]
pub struct TimeSeries {
    pub stride: usize,
    pub samples: Vec<Observables>,
}

impl TimeSeries {
    pub fn last(&self) -> Option<&Observables> {
        self.samples.last()
    }
}

/// Cell values of the density on `[-m_σ, m_σ)`.
#[derive(Debug, Clone)]
pub struct DensityField {
    m_sigma: f64,
    sigma_c: f64,
    dsigma: f64,
    zero: usize,
    t: f64,
    values: Vec<f64>,
    // scratch for reinjection bookkeeping
    decay_mask: Vec<bool>,
}

/// Builds the grid for `params` (cell count aligned first) and samples `p0`
/// at the cell centers, rescaled to unit discrete mass.
pub fn init_grid(params: &ModelParams, p0: &InitialDensity) -> Result<DensityField> {
    init_grid_with(params, |s| p0.eval(s))
}

pub fn init_grid_with<F: Fn(f64) -> f64>(params: &ModelParams, density: F) -> Result<DensityField> {
    let params = aligned_params(params)?;
    let n = params.n_cells;
    let dsigma = params.dsigma();
    let m = params.m_sigma;
    let mut values: Vec<f64> = (0..n).map(|i| density(-m + (i as f64 + 0.5) * dsigma)).collect();
    if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(invalid("initial density must be finite and nonnegative"));
    }
    let mass = dsigma * values.iter().sum::<f64>();
    if !(mass > 0.0) {
        return Err(invalid("initial density has no mass on the grid"));
    }
    for v in values.iter_mut() {
        *v /= mass;
    }
    let decay_mask = (0..n)
        .map(|i| (-m + (i as f64 + 0.5) * dsigma).abs() > params.sigma_c)
        .collect();
    Ok(DensityField {
        m_sigma: m,
        sigma_c: params.sigma_c,
        dsigma,
        zero: (n - 1) / 2,
        t: 0.0,
        values,
        decay_mask,
    })
}

impl DensityField {
    pub fn n_cells(&self) -> usize {
        self.values.len()
    }

    pub fn dsigma(&self) -> f64 {
        self.dsigma
    }

    pub fn m_sigma(&self) -> f64 {
        self.m_sigma
    }

    pub fn sigma_c(&self) -> f64 {
        self.sigma_c
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn zero_index(&self) -> usize {
        self.zero
    }

    pub fn center(&self, i: usize) -> f64 {
        -self.m_sigma + (i as f64 + 0.5) * self.dsigma
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mass(&self) -> f64 {
        self.dsigma * self.values.iter().sum::<f64>()
    }

    pub fn observables(&self) -> Observables {
        let (mut mass, mut f, mut tau, mut beta) = (0.0, 0.0, 0.0, 0.0);
        let mut min = f64::INFINITY;
        for (i, &p) in self.values.iter().enumerate() {
            let s = self.center(i);
            mass += p;
            tau += s * p;
            if self.decay_mask[i] {
                f += p;
                beta += s * p;
            }
            min = min.min(p);
        }
        let h = self.dsigma;
        Observables {
            t: self.t,
            fluidity: h * f,
            stress: h * tau,
            tail_moment: h * beta,
            mass: h * mass,
            min,
        }
    }

    /// Exact decay `p ← p e^{-dt}` on cells above threshold; the removed mass
    /// goes to the zero cell.
    pub fn source_substep(&mut self, dt: f64) {
        let frac = -(-dt).exp_m1();
        let mut removed = 0.0;
        for (p, &decays) in self.values.iter_mut().zip(&self.decay_mask) {
            if decays {
                let r = *p * frac;
                *p -= r;
                removed += r;
            }
        }
        self.values[self.zero] += removed;
    }

    /// One periodic upwind step at CFL number `nu ∈ [0, 1]`.
    pub fn advect_substep(&mut self, nu: f64) -> Result<()> {
        if nu < 0.0 {
            return Err(Error::NegativeRate(nu));
        }
        if nu > 1.0 + 1e-12 {
            return Err(Error::CflViolation { cfl: nu });
        }
        let nu = nu.min(1.0);
        let keep = 1.0 - nu;
        let n = self.values.len();
        let wrap = self.values[n - 1];
        for i in (1..n).rev() {
            self.values[i] = keep * self.values[i] + nu * self.values[i - 1];
        }
        self.values[0] = keep * self.values[0] + nu * wrap;
        Ok(())
    }

    /// Source then advection over `dt` at `rate`; errors when the CFL number
    /// exceeds one.
    pub fn step(&mut self, dt: f64, rate: f64) -> Result<()> {
        if rate < 0.0 {
            return Err(Error::NegativeRate(rate));
        }
        let nu = rate * dt / self.dsigma;
        if nu > 1.0 + 1e-12 {
            return Err(Error::CflViolation { cfl: nu });
        }
        self.source_substep(dt);
        self.advect_substep(nu)?;
        self.t += dt;
        Ok(())
    }

    /// Like [`step`](Self::step) but splits the advection into
    /// `ceil(ν)` substeps.
    pub fn step_substepped(&mut self, dt: f64, rate: f64) -> Result<()> {
        if !(rate >= 0.0) {
            return Err(Error::NegativeRate(rate));
        }
        let nu = rate * dt / self.dsigma;
        let n_sub = (nu - 1e-12).ceil().max(1.0) as usize;
        self.source_substep(dt);
        for _ in 0..n_sub {
            self.advect_substep(nu / n_sub as f64)?;
        }
        self.t += dt;
        Ok(())
    }

    /// Mass in the band of width `σ_c` along each domain edge.
    pub fn edge_mass(&self) -> f64 {
        let band = (self.sigma_c / self.dsigma).round() as usize;
        let n = self.values.len();
        let left: f64 = self.values[..band].iter().sum();
        let right: f64 = self.values[n - band..].iter().sum();
        self.dsigma * (left + right)
    }

    pub fn check_invariants(&self) -> Result<Observables> {
        let obs = self.observables();
        if !((obs.mass - 1.0).abs() <= MASS_TOLERANCE) {
            return Err(Error::InvariantViolation(format!(
                "mass {} at t = {} (drift {:e})",
                obs.mass,
                self.t,
                obs.mass - 1.0
            )));
        }
        if !(obs.min >= 0.0) {
            return Err(Error::InvariantViolation(format!(
                "negative density {} at t = {}",
                obs.min, self.t
            )));
        }
        Ok(obs)
    }

    /// `√(Δσ Σ (p_i − ref(σ_i))²)`
    pub fn l2_distance<F: Fn(f64) -> f64>(&self, reference: F) -> f64 {
        let ss: f64 = self
            .values
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let d = p - reference(self.center(i));
                d * d
            })
            .sum();
        (self.dsigma * ss).sqrt()
    }

    pub fn l1_distance<F: Fn(f64) -> f64>(&self, reference: F) -> f64 {
        let s: f64 = self
            .values
            .iter()
            .enumerate()
            .map(|(i, p)| (p - reference(self.center(i))).abs())
            .sum();
        self.dsigma * s
    }

    /// L² distance to cell values on the same grid.
    pub fn l2_distance_to_field(&self, other: &[f64]) -> f64 {
        let ss: f64 = self.values.iter().zip(other).map(|(a, b)| (a - b) * (a - b)).sum();
        (self.dsigma * ss).sqrt()
    }

    /// Fixed point of one full step at constant `rate` and step `dt`
    /// (requires CFL number at most one), normalized to unit mass.
    pub fn discrete_equilibrium(&self, dt: f64, rate: f64) -> Result<Vec<f64>> {
        let nu = rate * dt / self.dsigma;
        if !(nu > 0.0) {
            return Err(Error::DegenerateShear(format!(
                "discrete equilibrium needs a positive rate, got {rate}"
            )));
        }
        if nu > 1.0 + 1e-12 {
            return Err(Error::CflViolation { cfl: nu });
        }
        let nu = nu.min(1.0);
        let n = self.values.len();
        let decay = (-dt).exp();
        let e = |i: usize| if self.decay_mask[i] { decay } else { 1.0 };
        let mut p = vec![0.0; n];
        // s = mass held by the zero cell after reinjection, fixed to 1
        let i1 = (self.zero + 1) % n;
        p[i1] = nu / (1.0 - (1.0 - nu) * e(i1));
        let mut i = i1;
        loop {
            let next = (i + 1) % n;
            if next == self.zero {
                break;
            }
            p[next] = nu * e(i) * p[i] / (1.0 - (1.0 - nu) * e(next));
            i = next;
        }
        p[self.zero] = (1.0 - nu) + nu * e(i) * p[i];
        let mass = self.dsigma * p.iter().sum::<f64>();
        for v in p.iter_mut() {
            *v /= mass;
        }
        Ok(p)
    }
}

/// Output of a grid run.
#[derive(Debug, Clone)]
pub struct GridRun {
    pub series: TimeSeries,
    pub field: DensityField,
}

/// Runs from `p0` to `params.t_end` with outer step `params.dt`, sampling
/// every `stride` steps (and at the end).
pub fn run(params: &ModelParams, p0: &InitialDensity, profile: &ShearProfile, stride: usize) -> Result<GridRun> {
    let field = init_grid(params, p0)?;
    run_observed(field, profile, params.dt, params.t_end, stride, |_| {})
}

/// Advances `field` to `t_end`. The rate used on step `n` is
/// `profile.rate(n dt)`; `dt` is shrunk so the horizon is hit exactly.
/// `observer` sees the field at every sample.
pub fn run_observed<F: FnMut(&DensityField)>(
    mut field: DensityField,
    profile: &ShearProfile,
    dt: f64,
    t_end: f64,
    stride: usize,
    mut observer: F,
) -> Result<GridRun> {
    if !(dt > 0.0) || !(t_end > 0.0) || stride == 0 {
        return Err(invalid("run needs dt > 0, t_end > 0 and a positive stride"));
    }
    profile.validate(t_end)?;
    let steps = ((t_end / dt) - 1e-9).ceil().max(1.0) as usize;
    let dt = t_end / steps as f64;
    let t0 = field.t;
    let mut series = TimeSeries {
        stride,
        samples: Vec::with_capacity(steps / stride + 2),
    };
    let mut tail_warned = false;
    let mut sample = |field: &DensityField, series: &mut TimeSeries| -> Result<()> {
        let obs = field.check_invariants()?;
        if !tail_warned {
            let tail = field.edge_mass();
            if tail > TAIL_WARN {
                warn!("mass {tail:e} near the periodic boundary at t = {}", field.t);
                tail_warned = true;
            }
        }
        series.samples.push(obs);
        observer(field);
        Ok(())
    };
    sample(&field, &mut series)?;
    for n in 0..steps {
        let rate = profile.rate(n as f64 * dt);
        field.step_substepped(dt, rate)?;
        field.t = t0 + (n + 1) as f64 * dt;
        if (n + 1) % stride == 0 || n + 1 == steps {
            sample(&field, &mut series)?;
        }
    }
    Ok(GridRun { series, field })
}
