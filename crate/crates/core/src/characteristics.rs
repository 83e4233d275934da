//! Explicit renewal solution along characteristics.
//!
//! Mass that leaves the elastic window restarts at zero stress, so the
//! density is the transported initial datum plus a boundary term fed by the
//! fluidity history `φ`. `φ` is built window by window, each window needing
//! only values at least one threshold-crossing time in the past.

use crate::error::{invalid, Error, Result};
use crate::initial::InitialDensity;
use crate::model::{occupation_unchecked, ShearProfile};
use crate::quadrature::{gauss_legendre4, integrate};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Minimum number of table samples per induction window.
pub const MIN_WINDOW_SAMPLES: usize = 16;

fn require_lower_bound(profile: &ShearProfile, horizon: f64) -> Result<()> {
    profile.validate(horizon)?;
    let m = profile.lower_bound(horizon);
    if m > 0.0 {
        Ok(())
    } else {
        Err(Error::DegenerateShear(format!(
            "characteristics need a positive rate lower bound on [0, {horizon}], got {m}"
        )))
    }
}

/// `∫ χ(σ) p0(σ − γ(t)) exp(−Z(t, σ)) dσ`: mass of the transported initial
/// datum currently above threshold.
pub fn compute_a(t: f64, p0: &InitialDensity, profile: &ShearProfile, sigma_c: f64, tol: f64) -> Result<f64> {
    if !(t >= 0.0) || !(sigma_c > 0.0) {
        return Err(invalid(format!("compute_a needs t >= 0 and sigma_c > 0 (t = {t})")));
    }
    if t > 0.0 {
        require_lower_bound(profile, t)?;
    }
    a_unchecked(t, p0, profile, sigma_c, tol)
}

fn a_unchecked(t: f64, p0: &InitialDensity, profile: &ShearProfile, sigma_c: f64, tol: f64) -> Result<f64> {
    let g = profile.accumulated(t);
    let (lo, hi) = p0.support();
    let (lo, hi) = (lo + g, hi + g);
    let integrand = |s: f64| {
        let v = p0.eval(s - g);
        if v == 0.0 {
            0.0
        } else {
            v * (-occupation_unchecked(profile, 0.0, t, s, sigma_c)).exp()
        }
    };
    let mut br: Vec<f64> = p0.breakpoints().iter().map(|b| b + g).collect();
    br.extend([g - sigma_c, g + sigma_c]);
    let mut total = 0.0;
    if lo < -sigma_c {
        total += integrate(integrand, lo, hi.min(-sigma_c), &br, 0.5 * tol)?.value;
    }
    if hi > sigma_c {
        total += integrate(integrand, lo.max(sigma_c), hi, &br, 0.5 * tol)?.value;
    }
    Ok(total)
}

/// Closed-form `Ȧ + A`: the flux of transported mass through `±σ_c`.
pub fn a_dot_plus_a(t: f64, p0: &InitialDensity, profile: &ShearProfile, sigma_c: f64) -> f64 {
    let g = profile.accumulated(t);
    let q = |s: f64| p0.eval(s - g) * (-occupation_unchecked(profile, 0.0, t, s, sigma_c)).exp();
    profile.rate(t) * (q(sigma_c) - q(-sigma_c))
}

/// Tabulated fluidity history on a uniform time grid.
#[derive(Debug, Clone)]
pub struct PhiTable {
    step: f64,
    values: Vec<f64>,
    a_values: Vec<f64>,
    p0: InitialDensity,
    profile: ShearProfile,
    sigma_c: f64,
    tol: f64,
}

/// `∫χp` from quadrature of the reconstructed density, next to `φ(t)`.
#[derive(Debug, Clone, Copy)]
pub struct FluidityCheck {
    pub integral: f64,
    pub phi: f64,
    pub gap: f64,
}

/// Default table step: `min(γ⁻¹(σ_c)/64, 1e-2)`.
pub fn default_phi_step(profile: &ShearProfile, sigma_c: f64) -> f64 {
    (profile.invert_accumulated(sigma_c) / 64.0).min(1e-2)
}

/// Builds the `φ` table on `[0, t_end]`. `step` defaults to
/// [`default_phi_step`] and is shrunk so that `t_end` is a node.
pub fn compute_phi(
    t_end: f64,
    step: Option<f64>,
    p0: &InitialDensity,
    profile: &ShearProfile,
    sigma_c: f64,
    tol: f64,
) -> Result<PhiTable> {
    if !(t_end > 0.0) || !(sigma_c > 0.0) || !(tol > 0.0) {
        return Err(invalid("compute_phi needs t_end > 0, sigma_c > 0 and tol > 0"));
    }
    require_lower_bound(profile, t_end)?;
    let requested = step.unwrap_or_else(|| default_phi_step(profile, sigma_c));
    if !(requested > 0.0) {
        return Err(invalid(format!("table step {requested} must be > 0")));
    }
    let n = (t_end / requested - 1e-9).ceil().max(1.0) as usize;
    let h = t_end / n as f64;

    // every induction window up to t_end must hold enough samples
    let mut k = 0usize;
    loop {
        let start = profile.invert_accumulated(k as f64 * sigma_c);
        if start >= t_end {
            break;
        }
        let end = profile.invert_accumulated((k + 1) as f64 * sigma_c);
        let samples = ((end - start) / h).floor() as usize;
        if samples < MIN_WINDOW_SAMPLES {
            return Err(Error::WindowResolution {
                step: h,
                window: k,
                samples,
                required: MIN_WINDOW_SAMPLES,
            });
        }
        k += 1;
    }

    let gamma = |t: f64| profile.accumulated(t);
    // time at which the characteristic leaving zero at s reaches σ_c
    let exit = |s: f64| profile.invert_accumulated(gamma(s) + sigma_c);
    let nodes: Vec<f64> = (0..=n).map(|j| j as f64 * h).collect();
    let exits: Vec<f64> = nodes.iter().map(|&s| exit(s)).collect();

    let mut values = Vec::with_capacity(n + 1);
    let mut a_values = Vec::with_capacity(n + 1);
    // prefix[i] = ∫_0^{s_i} φ(s) exp(exit(s) - exit(s_i)) ds, on the interpolant
    let mut prefix = vec![0.0];
    let lin = |vals: &[f64], i: usize, s: f64| {
        let w = (s - nodes[i]) / h;
        (1.0 - w) * vals[i] + w * vals[i + 1]
    };

    for j in 0..=n {
        let t = nodes[j];
        let a = a_unchecked(t, p0, profile, sigma_c, tol)?;
        a_values.push(a);
        let g = gamma(t);
        if g <= sigma_c {
            values.push(a);
            continue;
        }
        let u = profile.invert_accumulated(g - sigma_c).min(t);
        let kc = ((u / h).floor() as usize).min(j.saturating_sub(1));
        while prefix.len() <= kc {
            let i = prefix.len() - 1;
            let (s0, s1) = (nodes[i], nodes[i + 1]);
            let cell = gauss_legendre4(|s| lin(&values, i, s) * (exit(s) - exits[i + 1]).exp(), s0, s1);
            prefix.push(prefix[i] * (exits[i] - exits[i + 1]).exp() + cell);
        }
        let mut memory = prefix[kc] * (exits[kc] - t).exp();
        if u > nodes[kc] {
            memory += gauss_legendre4(|s| lin(&values, kc, s) * (exit(s) - t).exp(), nodes[kc], u);
        }
        values.push(a + memory);
    }

    let table = PhiTable {
        step: h,
        values,
        a_values,
        p0: p0.clone(),
        profile: profile.clone(),
        sigma_c,
        tol,
    };
    let slack = 10.0 * tol;
    if let Some((j, v)) = table
        .values
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v >= -slack && **v <= 1.0 + slack))
    {
        return Err(Error::InvariantViolation(format!(
            "φ({}) = {v} outside [0, 1]",
            j as f64 * h
        )));
    }
    Ok(table)
}

impl PhiTable {
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn t_max(&self) -> f64 {
        self.step * (self.values.len() - 1) as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `A` at the table nodes.
    pub fn a_values(&self) -> &[f64] {
        &self.a_values
    }

    pub fn profile(&self) -> &ShearProfile {
        &self.profile
    }

    pub fn initial(&self) -> &InitialDensity {
        &self.p0
    }

    pub fn sigma_c(&self) -> f64 {
        self.sigma_c
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0) || t > self.t_max() * (1.0 + 1e-12) {
            Err(Error::OutOfRange {
                value: t,
                max: self.t_max(),
            })
        } else {
            Ok(())
        }
    }

    fn phi_unchecked(&self, t: f64) -> f64 {
        let x = t / self.step;
        let i = (x.floor() as usize).min(self.values.len() - 2);
        let w = (x - i as f64).clamp(0.0, 1.0);
        (1.0 - w) * self.values[i] + w * self.values[i + 1]
    }

    /// Linear interpolation of the table.
    pub fn phi(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.phi_unchecked(t))
    }

    /// Density `p(t, σ)` from the renewal formula.
    pub fn evaluate_p(&self, t: f64, sigma: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.p_unchecked(t, sigma))
    }

    fn p_unchecked(&self, t: f64, sigma: f64) -> f64 {
        let prof = &self.profile;
        let g = prof.accumulated(t);
        let mut p = 0.0;
        let v = self.p0.eval(sigma - g);
        if v > 0.0 {
            p += v * (-occupation_unchecked(prof, 0.0, t, sigma, self.sigma_c)).exp();
        }
        if sigma > 0.0 && sigma < g {
            let s = prof.invert_accumulated(g - sigma).clamp(0.0, t);
            let z = occupation_unchecked(prof, s, t, sigma, self.sigma_c);
            p += self.phi_unchecked(s) / prof.rate(s) * (-z).exp();
        }
        p
    }

    /// Non-smooth points of `p(t, ·)`, including the images of table nodes
    /// under the renewal map.
    fn breakpoints(&self, t: f64) -> Vec<f64> {
        let g = self.profile.accumulated(t);
        let sc = self.sigma_c;
        let mut br: Vec<f64> = self.p0.breakpoints().iter().map(|b| b + g).collect();
        br.extend([0.0, g, -sc, sc, g - sc, g + sc]);
        let n = (t / self.step).floor() as usize;
        br.extend((0..=n).map(|i| g - self.profile.accumulated(i as f64 * self.step)));
        br
    }

    fn integrate_p<W: Fn(f64) -> f64>(&self, t: f64, weight: W) -> Result<f64> {
        let g = self.profile.accumulated(t);
        let (lo, hi) = self.p0.support();
        let (a, b) = ((lo + g).min(0.0), (hi + g).max(g));
        let br = self.breakpoints(t);
        Ok(integrate(|s| weight(s) * self.p_unchecked(t, s), a, b, &br, self.tol)?.value)
    }

    /// `∫χp(t, ·)` by quadrature, compared with `φ(t)`.
    pub fn fluidity_of_density(&self, t: f64) -> Result<FluidityCheck> {
        self.check_time(t)?;
        let sc = self.sigma_c;
        let integral = self.integrate_p(t, |s| if s.abs() > sc { 1.0 } else { 0.0 })?;
        let phi = self.phi_unchecked(t);
        Ok(FluidityCheck {
            integral,
            phi,
            gap: (integral - phi).abs(),
        })
    }

    pub fn mass(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        self.integrate_p(t, |_| 1.0)
    }

    /// Mean stress `∫σp(t, ·)`.
    pub fn stress(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        self.integrate_p(t, |s| s)
    }

    /// `L¹` distance between `p(t, ·)` and piecewise-constant cell values.
    pub fn l1_distance_to_cells(&self, t: f64, first_center: f64, dsigma: f64, cells: &[f64]) -> Result<f64> {
        self.check_time(t)?;
        let mut total = 0.0;
        for (i, &v) in cells.iter().enumerate() {
            let c = first_center + i as f64 * dsigma;
            // 2-point Gauss per cell; jumps only cost O(Δσ) each
            let x = 0.5 * dsigma / 3f64.sqrt();
            let p1 = self.p_unchecked(t, c - x);
            let p2 = self.p_unchecked(t, c + x);
            total += 0.5 * dsigma * ((p1 - v).abs() + (p2 - v).abs());
        }
        Ok(total)
    }
}
