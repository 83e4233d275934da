//! Model constants, shear-rate profiles and the closed-form stationary state.
//!
//! Every shear profile used here has an affine rate `c + a t` once time
//! scaling is folded in, so the accumulated shear and its inverse are exact.

use crate::error::{invalid, Error, Result};

/// Physical and discretization constants shared by the solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Stress threshold above which elements relax.
    pub sigma_c: f64,
    /// Half-width of the truncated stress domain `[-m_sigma, m_sigma)`.
    pub m_sigma: f64,
    pub n_cells: usize,
    pub dt: f64,
    pub t_end: f64,
}

impl ModelParams {
    pub fn new(sigma_c: f64, m_sigma: f64, n_cells: usize, dt: f64, t_end: f64) -> Result<Self> {
        let p = Self {
            sigma_c,
            m_sigma,
            n_cells,
            dt,
            t_end,
        };
        p.validate()?;
        Ok(p)
    }

    /// Desk-scale defaults: threshold 2, domain half-width 10, 4000 cells.
    /// The time step is left at a CFL-0.9 value for unit shear.
    pub fn desk() -> Self {
        let m_sigma = 10.0;
        let n_cells = 4000;
        Self {
            sigma_c: 2.0,
            m_sigma,
            n_cells,
            dt: 0.9 * 2.0 * m_sigma / n_cells as f64,
            t_end: 40.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.sigma_c, self.m_sigma, self.dt, self.t_end]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(invalid("model parameters must be finite"));
        }
        if self.sigma_c <= 0.0 {
            return Err(invalid(format!("sigma_c = {} must be > 0", self.sigma_c)));
        }
        if self.m_sigma <= self.sigma_c {
            return Err(Error::Geometry(format!(
                "domain half-width {} must exceed the threshold {}",
                self.m_sigma, self.sigma_c
            )));
        }
        if self.n_cells < 8 {
            return Err(invalid(format!("n_cells = {} must be >= 8", self.n_cells)));
        }
        if self.dt <= 0.0 {
            return Err(invalid(format!("dt = {} must be > 0", self.dt)));
        }
        if self.t_end <= 0.0 {
            return Err(invalid(format!("t_end = {} must be > 0", self.t_end)));
        }
        Ok(())
    }

    pub fn dsigma(&self) -> f64 {
        2.0 * self.m_sigma / self.n_cells as f64
    }
}

/// Driving shear rate as a function of time.
#[derive(Debug, Clone, PartialEq)]
pub enum ShearProfile {
    Constant {
        rate: f64,
    },
    /// `rate(t) = slope * t`
    LinearRamp {
        slope: f64,
    },
    /// `rate(t) = offset + slope * t`
    Affine {
        offset: f64,
        slope: f64,
    },
    /// `rate(t) = inner.rate(epsilon * t)`
    TimeScaled {
        inner: Box<ShearProfile>,
        epsilon: f64,
    },
}

impl ShearProfile {
    pub fn constant(rate: f64) -> Self {
        Self::Constant { rate }
    }

    pub fn ramp(slope: f64) -> Self {
        Self::LinearRamp { slope }
    }

    pub fn time_scaled(inner: ShearProfile, epsilon: f64) -> Self {
        Self::TimeScaled {
            inner: Box::new(inner),
            epsilon,
        }
    }

    /// Coefficients `(c, a)` with `rate(t) = c + a t`.
    pub fn affine_coefficients(&self) -> (f64, f64) {
        match self {
            Self::Constant { rate } => (*rate, 0.0),
            Self::LinearRamp { slope } => (0.0, *slope),
            Self::Affine { offset, slope } => (*offset, *slope),
            Self::TimeScaled { inner, epsilon } => {
                let (c, a) = inner.affine_coefficients();
                (c, a * epsilon)
            }
        }
    }

    pub fn rate(&self, t: f64) -> f64 {
        match self {
            Self::Constant { rate } => *rate,
            Self::LinearRamp { slope } => slope * t,
            Self::Affine { offset, slope } => offset + slope * t,
            Self::TimeScaled { inner, epsilon } => inner.rate(epsilon * t),
        }
    }

    /// Accumulated shear `∫₀ᵗ rate`, closed form per variant.
    pub fn accumulated(&self, t: f64) -> f64 {
        match self {
            Self::Constant { rate } => rate * t,
            Self::LinearRamp { slope } => 0.5 * slope * t * t,
            Self::Affine { offset, slope } => offset * t + 0.5 * slope * t * t,
            Self::TimeScaled { inner, epsilon } => inner.accumulated(epsilon * t) / epsilon,
        }
    }

    /// Infimum of the rate on `[0, horizon]`. The rate is affine, so the
    /// extremes sit at the endpoints.
    pub fn lower_bound(&self, horizon: f64) -> f64 {
        self.rate(0.0).min(self.rate(horizon))
    }

    pub fn upper_bound(&self, horizon: f64) -> f64 {
        self.rate(0.0).max(self.rate(horizon))
    }

    /// Checks finiteness and rejects negative (sign-changing) rates on
    /// `[0, horizon]`.
    pub fn validate(&self, horizon: f64) -> Result<()> {
        if let Self::TimeScaled { epsilon, inner } = self {
            if !(*epsilon > 0.0 && epsilon.is_finite()) {
                return Err(invalid(format!("time-scaling factor {epsilon} must be > 0")));
            }
            inner.validate(epsilon * horizon)?;
        }
        let (lo, hi) = (self.lower_bound(horizon), self.upper_bound(horizon));
        if !lo.is_finite() || !hi.is_finite() {
            return Err(invalid("shear rate is not finite on the horizon"));
        }
        if lo < 0.0 {
            return Err(Error::DegenerateShear(format!(
                "shear rate takes the negative value {lo} on [0, {horizon}]"
            )));
        }
        Ok(())
    }

    /// Inverse of the accumulated shear for a nondecreasing profile.
    /// Returns `f64::INFINITY` if `y` is never reached.
    pub(crate) fn invert_accumulated(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let (c, a) = self.affine_coefficients();
        if a == 0.0 {
            return if c > 0.0 { y / c } else { f64::INFINITY };
        }
        let disc = c * c + 2.0 * a * y;
        if disc < 0.0 {
            return f64::INFINITY;
        }
        let denom = c + disc.sqrt();
        if denom <= 0.0 {
            f64::INFINITY
        } else {
            2.0 * y / denom
        }
    }
}

/// Threshold indicator: 1 outside the closed elastic window `[-sigma_c, sigma_c]`.
pub fn indicator(sigma: f64, sigma_c: f64) -> f64 {
    if sigma.abs() > sigma_c {
        1.0
    } else {
        0.0
    }
}

/// Unique normalized stationary density for a nonzero constant shear rate.
///
/// At the jump `sigma = 0` the midpoint of the one-sided limits is returned.
/// A negative rate is handled by the mirror `sigma -> -sigma`.
pub fn stationary_density(sigma: f64, gamma_inf: f64, sigma_c: f64) -> Result<f64> {
    if gamma_inf == 0.0 {
        return Err(Error::DegenerateShear(
            "stationary state is not unique at zero shear".into(),
        ));
    }
    if !gamma_inf.is_finite() || !(sigma_c > 0.0) {
        return Err(invalid("stationary density needs finite shear and sigma_c > 0"));
    }
    if gamma_inf < 0.0 {
        return stationary_density(-sigma, -gamma_inf, sigma_c);
    }
    let level = 1.0 / (sigma_c + gamma_inf);
    Ok(if sigma < 0.0 {
        0.0
    } else if sigma == 0.0 {
        0.5 * level
    } else if sigma <= sigma_c {
        level
    } else {
        level * (-(sigma - sigma_c) / gamma_inf).exp()
    })
}

/// Closed-form steady fluidity, stress, tail moment and closure coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyObservables {
    pub f_inf: f64,
    pub tau_inf: f64,
    pub beta_inf: f64,
    pub kappa: f64,
}

pub fn steady_observables(gamma_rate: f64, sigma_c: f64) -> Result<SteadyObservables> {
    if !(gamma_rate > 0.0) || !gamma_rate.is_finite() {
        return Err(Error::DegenerateShear(format!(
            "steady observables need a positive shear rate, got {gamma_rate}"
        )));
    }
    if !(sigma_c > 0.0) {
        return Err(invalid("sigma_c must be > 0"));
    }
    let s = sigma_c + gamma_rate;
    Ok(SteadyObservables {
        f_inf: gamma_rate / s,
        tau_inf: 0.5 * (gamma_rate * gamma_rate / s + s),
        beta_inf: gamma_rate,
        kappa: kappa(gamma_rate, sigma_c),
    })
}

/// Closure coefficient `2 / (1 + (rate/(sigma_c+rate))^2)`; tends to 2 at
/// vanishing shear.
pub fn kappa(gamma_rate: f64, sigma_c: f64) -> f64 {
    let r = gamma_rate / (sigma_c + gamma_rate);
    2.0 / (1.0 + r * r)
}

pub fn gamma_accum(profile: &ShearProfile, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(invalid(format!("time {t} must be >= 0")));
    }
    Ok(profile.accumulated(t))
}

/// Time at which the accumulated shear reaches `y`, for a profile with a
/// positive rate lower bound on `[0, horizon]`.
pub fn gamma_inverse(profile: &ShearProfile, y: f64, horizon: f64) -> Result<f64> {
    if !(y >= 0.0) {
        return Err(invalid(format!("accumulated shear {y} must be >= 0")));
    }
    let m = profile.lower_bound(horizon);
    if !(m > 0.0) {
        return Err(Error::DegenerateShear(format!(
            "no positive rate lower bound on [0, {horizon}] (inf = {m})"
        )));
    }
    let max = profile.accumulated(horizon);
    if y > max * (1.0 + 1e-12) {
        return Err(Error::OutOfRange { value: y, max });
    }
    Ok(profile.invert_accumulated(y).min(horizon))
}

/// Time spent outside the elastic window along the characteristic ending at
/// `(t, sigma)`: `∫₀ᵗ χ(σ − γ(t) + γ(u)) du`.
pub fn occupation_time(profile: &ShearProfile, t: f64, sigma: f64, sigma_c: f64) -> Result<f64> {
    occupation_between(profile, 0.0, t, sigma, sigma_c)
}

/// Same as [`occupation_time`] restricted to `u ∈ [s, t]`.
pub fn occupation_between(profile: &ShearProfile, s: f64, t: f64, sigma: f64, sigma_c: f64) -> Result<f64> {
    if !(t >= 0.0) || !(s >= 0.0) || s > t {
        return Err(invalid(format!("occupation window [{s}, {t}] is not valid")));
    }
    if !(profile.lower_bound(t) > 0.0) {
        return Err(Error::DegenerateShear(format!(
            "occupation time needs a positive rate lower bound on [0, {t}]"
        )));
    }
    Ok(occupation_unchecked(profile, s, t, sigma, sigma_c))
}

/// Closed-form occupation time without validation; the profile must be
/// strictly increasing on `[s, t]`.
pub(crate) fn occupation_unchecked(profile: &ShearProfile, s: f64, t: f64, sigma: f64, sigma_c: f64) -> f64 {
    let g_s = profile.accumulated(s);
    let g_t = profile.accumulated(t);
    let clamped_inverse = |y: f64| {
        if y <= g_s {
            s
        } else if y >= g_t {
            t
        } else {
            profile.invert_accumulated(y).clamp(s, t)
        }
    };
    // below -sigma_c while u < γ⁻¹(γ(t) − σ − σ_c); above sigma_c once u > γ⁻¹(γ(t) − σ + σ_c)
    let below = clamped_inverse(g_t - sigma - sigma_c) - s;
    let above = t - clamped_inverse(g_t - sigma + sigma_c);
    below + above
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn indicator_examples() {
        assert_eq!(indicator(0.0, 2.0), 0.0);
        assert_eq!(indicator(2.0, 2.0), 0.0);
        assert_eq!(indicator(-2.0, 2.0), 0.0);
        assert_eq!(indicator(-5.0, 2.0), 1.0);
        assert_eq!(indicator(2.0 + 1e-12, 2.0), 1.0);
    }

    #[test]
    fn stationary_density_branches() {
        assert_eq!(stationary_density(-0.5, 1.0, 2.0).unwrap(), 0.0);
        assert!(close(stationary_density(1.0, 1.0, 2.0).unwrap(), 1.0 / 3.0, 1e-15));
        let expected = (1.0 / 3.0) * (-1.0f64).exp();
        assert!(close(stationary_density(3.0, 1.0, 2.0).unwrap(), expected, 1e-15));
        assert!(close(expected, 0.122626, 1e-6));
        // continuity at the threshold
        assert!(close(stationary_density(2.0, 1.0, 2.0).unwrap(), 1.0 / 3.0, 1e-15));
    }

    #[test]
    fn stationary_density_mirror_and_degenerate() {
        let a = stationary_density(1.5, -0.7, 2.0).unwrap();
        let b = stationary_density(-1.5, 0.7, 2.0).unwrap();
        assert_eq!(a, 0.0);
        assert!(b == 0.0);
        let c = stationary_density(-3.0, -0.7, 2.0).unwrap();
        assert!(close(c, stationary_density(3.0, 0.7, 2.0).unwrap(), 0.0));
        assert!(matches!(
            stationary_density(1.0, 0.0, 2.0),
            Err(Error::DegenerateShear(_))
        ));
    }

    #[test]
    fn steady_observables_examples() {
        let s = steady_observables(1.0, 2.0).unwrap();
        assert!(close(s.f_inf, 1.0 / 3.0, 1e-15));
        assert!(close(s.tau_inf, 5.0 / 3.0, 1e-15));
        assert!(close(s.beta_inf, 1.0, 0.0));
        assert!(close(s.kappa, 1.8, 1e-15));
        assert!(close(s.kappa * s.f_inf * s.tau_inf, 1.0, 1e-15));
        assert!(close(steady_observables(2.0, 2.0).unwrap().kappa, 1.6, 1e-15));
        assert!(close(steady_observables(1e-9, 2.0).unwrap().kappa, 2.0, 1e-15));
        assert!(steady_observables(0.0, 2.0).is_err());
        assert!(steady_observables(-1.0, 2.0).is_err());
    }

    #[test]
    fn kappa_identity_over_log_grid() {
        for k in 0..=60 {
            let g = 10f64.powf(-3.0 + 6.0 * k as f64 / 60.0);
            let s = steady_observables(g, 2.0).unwrap();
            let rel = (s.kappa * s.f_inf * s.tau_inf - g).abs() / g;
            assert!(rel <= 1e-12, "gamma {g}: rel {rel}");
        }
    }

    #[test]
    fn accumulation_examples() {
        assert_eq!(gamma_accum(&ShearProfile::constant(0.5), 4.0).unwrap(), 2.0);
        let eps = 0.3;
        let p = ShearProfile::time_scaled(ShearProfile::ramp(1.0), eps);
        assert_eq!(gamma_accum(&p, 0.0).unwrap(), 0.0);
        assert!(close(gamma_accum(&p, 2.5).unwrap(), eps * 2.5 * 2.5 / 2.0, 1e-14));
        assert!(gamma_accum(&p, -1.0).is_err());
    }

    #[test]
    fn inverse_examples() {
        let c = ShearProfile::constant(0.5);
        assert!(close(gamma_inverse(&c, 2.0, 10.0).unwrap(), 4.0, 1e-14));
        let aff = ShearProfile::Affine {
            offset: 0.1,
            slope: 1.0,
        };
        let expected = -0.1 + (0.01f64 + 2.0).sqrt();
        let got = gamma_inverse(&aff, 1.0, 10.0).unwrap();
        assert!(close(got, expected, 1e-14));
        assert!(close(got, 1.31774, 1e-5));
        // bisection oracle
        let (mut lo, mut hi) = (0.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if aff.accumulated(mid) < 1.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        assert!(close(got, 0.5 * (lo + hi), 1e-12));
    }

    #[test]
    fn inverse_errors() {
        let ramp = ShearProfile::ramp(1.0);
        assert!(matches!(
            gamma_inverse(&ramp, 1.0, 10.0),
            Err(Error::DegenerateShear(_))
        ));
        let c = ShearProfile::constant(1.0);
        assert!(matches!(gamma_inverse(&c, 11.0, 10.0), Err(Error::OutOfRange { .. })));
        assert!(gamma_inverse(&c, -1.0, 10.0).is_err());
    }

    #[test]
    fn validate_rejects_sign_change() {
        let p = ShearProfile::Affine {
            offset: 1.0,
            slope: -1.0,
        };
        assert!(p.validate(0.5).is_ok());
        assert!(matches!(p.validate(2.0), Err(Error::DegenerateShear(_))));
    }

    #[test]
    fn occupation_examples() {
        let c = ShearProfile::constant(1.0);
        assert!(close(occupation_time(&c, 5.0, -3.0, 2.0).unwrap(), 5.0, 1e-14));
        assert!(close(occupation_time(&c, 5.0, 0.0, 2.0).unwrap(), 3.0, 1e-14));
        assert!(close(occupation_time(&c, 5.0, 6.0, 2.0).unwrap(), 4.0, 1e-14));
    }

    #[test]
    fn occupation_matches_case_table() {
        // explicit piecewise table for t > 2 sigma_c / m
        let p = ShearProfile::Affine {
            offset: 0.5,
            slope: 0.2,
        };
        let (t, sc) = (12.0, 2.0);
        let g = p.accumulated(t);
        let inv = |y: f64| p.invert_accumulated(y);
        for &sigma in &[-1.0, 0.0, 1.9, 2.5, 5.0, g - sc - 0.1, g - sc + 0.1, g + 1.0] {
            let table = if sigma <= sc {
                inv(-sc + g - sigma)
            } else if sigma <= g - sc {
                t + inv(-sc + g - sigma) - inv(sc + g - sigma)
            } else {
                t - inv(sc + g - sigma)
            };
            let z = occupation_time(&p, t, sigma, sc).unwrap();
            assert!(close(z, table, 1e-12), "sigma {sigma}: {z} vs {table}");
        }
    }
}
