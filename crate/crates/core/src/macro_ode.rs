//! Macroscopic closures in slow time `θ = εt`, integrated with exponential
//! steps whose coefficients are frozen at the step midpoint.
//!
//! * mac1: `ε τ' = −τ + σ_c²/(2(σ_c+γ̇)) + γ̇`
//! * mac2: `ε τ' = −κ f τ + γ̇`, `ε f' = −f + γ̇/(σ_c+γ̇)`
//! * macc: mac2 with `κ ≡ 2`

use crate::error::{invalid, Result};
use crate::model::{kappa, ShearProfile};
use crate::quadrature::integrate;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Mac1,
    Mac2,
    Macc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KappaMode {
    RateDependent,
    Constant2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroState {
    pub theta: f64,
    pub tau: f64,
    /// Absent for mac1.
    pub f: Option<f64>,
    pub scheme: Scheme,
    pub epsilon: f64,
}

fn check(epsilon: f64, theta_end: f64, dtheta: f64) -> Result<usize> {
    if !(epsilon > 0.0) || !(theta_end > 0.0) || !(dtheta > 0.0) {
        return Err(invalid(format!(
            "macro integration needs epsilon, theta_end, dtheta > 0 (got {epsilon}, {theta_end}, {dtheta})"
        )));
    }
    Ok((theta_end / dtheta - 1e-9).ceil().max(1.0) as usize)
}

/// `−expm1(−x)/x`, equal to 1 at 0.
fn phi1(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - 0.5 * x
    } else {
        -(-x).exp_m1() / x
    }
}

/// Exact step of `y' = (g − y)/ε` over `r = Δθ/ε` when `g` is linear.
struct LinearStep {
    decay: f64,
    w0: f64,
    w1: f64,
}

impl LinearStep {
    fn new(r: f64) -> Self {
        let gain = -(-r).exp_m1();
        let w1 = 1.0 - gain / r;
        Self {
            decay: (-r).exp(),
            w0: gain - w1,
            w1,
        }
    }

    fn apply(&self, y: f64, g0: f64, g1: f64) -> f64 {
        self.decay * y + self.w0 * g0 + self.w1 * g1
    }
}

/// Fixed point of mac1 at shear rate `rate`.
pub fn mac1_forcing(rate: f64, sigma_c: f64) -> f64 {
    sigma_c * sigma_c / (2.0 * (sigma_c + rate)) + rate
}

fn fluidity_target(rate: f64, sigma_c: f64) -> f64 {
    rate / (sigma_c + rate)
}

/// Trajectory of mac1 on `[0, theta_end]`; `dtheta` is shrunk to hit the end.
pub fn integrate_mac1(
    epsilon: f64,
    profile: &ShearProfile,
    sigma_c: f64,
    tau0: f64,
    theta_end: f64,
    dtheta: f64,
) -> Result<Vec<MacroState>> {
    let n = check(epsilon, theta_end, dtheta)?;
    profile.validate(theta_end)?;
    let h = theta_end / n as f64;
    let decay = (-h / epsilon).exp();
    let gain = -(-h / epsilon).exp_m1();
    let mut tau = tau0;
    let mut out = Vec::with_capacity(n + 1);
    let state = |theta, tau| MacroState {
        theta,
        tau,
        f: None,
        scheme: Scheme::Mac1,
        epsilon,
    };
    out.push(state(0.0, tau));
    for i in 0..n {
        let mid = (i as f64 + 0.5) * h;
        tau = decay * tau + gain * mac1_forcing(profile.rate(mid), sigma_c);
        out.push(state((i + 1) as f64 * h, tau));
    }
    Ok(out)
}

/// Trajectory of mac2 (or macc with [`KappaMode::Constant2`]).
///
/// `f` takes the exact step for a target linear over the step; `τ` then takes an
/// exponential step with decay `κ f / ε` frozen at the midpoint, where `f` is
/// the exact half-step value.
#[allow(clippy::too_many_arguments)]
pub fn integrate_mac2(
    epsilon: f64,
    profile: &ShearProfile,
    sigma_c: f64,
    tau0: f64,
    f0: f64,
    theta_end: f64,
    dtheta: f64,
    mode: KappaMode,
) -> Result<Vec<MacroState>> {
    let n = check(epsilon, theta_end, dtheta)?;
    profile.validate(theta_end)?;
    if !(f0 >= 0.0) {
        return Err(invalid(format!("initial fluidity {f0} must be >= 0")));
    }
    let scheme = match mode {
        KappaMode::RateDependent => Scheme::Mac2,
        KappaMode::Constant2 => Scheme::Macc,
    };
    let h = theta_end / n as f64;
    let r = h / epsilon;
    let full = LinearStep::new(r);
    let half = LinearStep::new(0.5 * r);
    let (mut tau, mut f) = (tau0, f0);
    let mut out = Vec::with_capacity(n + 1);
    let state = |theta, tau, f| MacroState {
        theta,
        tau,
        f: Some(f),
        scheme,
        epsilon,
    };
    out.push(state(0.0, tau, f));
    for i in 0..n {
        let mid = (i as f64 + 0.5) * h;
        let rate = profile.rate(mid);
        let g0 = fluidity_target(profile.rate(i as f64 * h), sigma_c);
        let g1 = fluidity_target(profile.rate((i + 1) as f64 * h), sigma_c);
        let f_mid = half.apply(f, g0, fluidity_target(rate, sigma_c));
        f = full.apply(f, g0, g1);
        let k = match mode {
            KappaMode::RateDependent => kappa(rate, sigma_c),
            KappaMode::Constant2 => 2.0,
        };
        let x = k * f_mid * r;
        tau = (-x).exp() * tau + rate * r * phi1(x);
        out.push(state((i + 1) as f64 * h, tau, f));
    }
    Ok(out)
}

/// `f(θ)` of mac2 from the integrated-by-parts Duhamel formula
/// `f0 e^{−θ/ε} + g(θ) − g(0) e^{−θ/ε} − ∫₀^θ e^{−(θ−s)/ε} g'(s) ds`,
/// `g = γ̇/(σ_c+γ̇)`, for affine profiles.
pub fn duhamel_f(epsilon: f64, profile: &ShearProfile, sigma_c: f64, f0: f64, theta: f64) -> Result<f64> {
    if !(epsilon > 0.0) || !(theta >= 0.0) {
        return Err(invalid("duhamel_f needs epsilon > 0 and theta >= 0"));
    }
    let (_, slope) = profile.affine_coefficients();
    let g = |s: f64| fluidity_target(profile.rate(s), sigma_c);
    let dg = |s: f64| {
        let d = sigma_c + profile.rate(s);
        sigma_c * slope / (d * d)
    };
    let e = (-theta / epsilon).exp();
    let tail = integrate(
        |s| (-(theta - s) / epsilon).exp() * dg(s),
        0.0,
        theta,
        &[(theta - 40.0 * epsilon).max(0.0)],
        1e-13,
    )?
    .value;
    Ok(f0 * e + g(theta) - g(0.0) * e - tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::steady_observables;

    #[test]
    fn mac1_fixed_point_and_decay() {
        let prof = ShearProfile::constant(1.0);
        assert!((mac1_forcing(1.0, 2.0) - 5.0 / 3.0).abs() < 1e-15);
        let tr = integrate_mac1(0.1, &prof, 2.0, 5.0 / 3.0, 1.0, 1e-3).unwrap();
        assert!(tr.iter().all(|s| (s.tau - 5.0 / 3.0).abs() < 1e-12));
        let tr = integrate_mac1(0.1, &prof, 2.0, 0.0, 1.0, 1e-3).unwrap();
        for s in tr.iter().step_by(97) {
            let exact = 5.0 / 3.0 * (-(-s.theta / 0.1f64).exp_m1());
            assert!((s.tau - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn mac2_fixed_point() {
        let prof = ShearProfile::constant(1.0);
        let st = steady_observables(1.0, 2.0).unwrap();
        let tr = integrate_mac2(0.05, &prof, 2.0, 0.0, 0.0, 3.0, 1e-3, KappaMode::RateDependent).unwrap();
        let last = tr.last().unwrap();
        assert!((last.f.unwrap() - st.f_inf).abs() < 1e-10);
        assert!((last.tau - st.tau_inf).abs() < 1e-10);
        let tr = integrate_mac2(0.05, &prof, 2.0, 0.0, 1.0 / 3.0, 1.0, 1e-2, KappaMode::RateDependent).unwrap();
        assert!(tr.iter().all(|s| (s.f.unwrap() - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn small_shear_kappa_modes_agree() {
        let prof = ShearProfile::constant(0.02);
        let a = integrate_mac2(0.05, &prof, 2.0, 0.0, 0.0, 1.0, 1e-4, KappaMode::RateDependent).unwrap();
        let b = integrate_mac2(0.05, &prof, 2.0, 0.0, 0.0, 1.0, 1e-4, KappaMode::Constant2).unwrap();
        let (ta, tb) = (a.last().unwrap().tau, b.last().unwrap().tau);
        assert!((ta - tb).abs() <= 0.01 * ta.abs());
        assert_eq!(b[0].scheme, Scheme::Macc);
    }

    #[test]
    fn f_matches_duhamel_on_ramp() {
        let prof = ShearProfile::ramp(1.0);
        let tr = integrate_mac2(0.02, &prof, 2.0, 0.0, 0.4, 1.0, 1e-4, KappaMode::RateDependent).unwrap();
        for s in tr.iter().step_by(1111) {
            let d = duhamel_f(0.02, &prof, 2.0, 0.4, s.theta).unwrap();
            assert!(
                (s.f.unwrap() - d).abs() < 1e-8,
                "theta {}: {} vs {d}",
                s.theta,
                s.f.unwrap()
            );
        }
    }
}
