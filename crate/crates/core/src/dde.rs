//! Fundamental kernel of `u̇ + u − u(t − ω) = 0`, its decay rates, and a
//! general solver for that delay equation with an initial segment and forcing.

use log::warn;

use crate::error::{invalid, Error, Result};
use crate::regression::fit_line;

/// Finest allowed kernel step, as a fraction of the delay.
const MIN_STEPS_PER_DELAY: f64 = 32.0;

/// Kernel `k` on a uniform grid whose step divides `ω`.
#[derive(Debug, Clone)]
pub struct KernelTable {
    omega: f64,
    step: f64,
    values: Vec<f64>,
}

/// Integration weights for one step of `ẏ = −y + g` with `g` linear over the
/// step: `y₁ = E y₀ + w_a g₀ + w_b g₁`.
fn step_weights(h: f64) -> (f64, f64, f64) {
    let e = (-h).exp();
    let one_minus = -(-h).exp_m1();
    let wb = 1.0 - one_minus / h;
    let wa = one_minus - wb;
    (e, wa, wb)
}

fn steps_per_delay(omega: f64, dt: f64) -> Result<usize> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(invalid(format!("delay {omega} must be > 0")));
    }
    if !(dt > 0.0) || dt > omega / MIN_STEPS_PER_DELAY {
        return Err(Error::KernelResolution { omega, step: dt });
    }
    // ω/(ω/m) can land a hair above m
    Ok((omega / dt - 1e-9).ceil().max(1.0) as usize)
}

/// Tabulates `k` on `[0, t_end]`. The step is reduced to `ω / ceil(ω/dt)`.
///
/// On `[0, ω)` the delayed term vanishes and `k = e^{-t}` exactly. Later
/// steps integrate the variation-of-constants formula over one cell with the
/// delayed values interpolated linearly.
pub fn kernel_k(omega: f64, t_end: f64, dt: f64) -> Result<KernelTable> {
    let m = steps_per_delay(omega, dt)?;
    if !(t_end > 0.0) {
        return Err(invalid(format!("kernel horizon {t_end} must be > 0")));
    }
    let h = omega / m as f64;
    let n = (t_end / h - 1e-9).ceil() as usize;
    let (e, wa, wb) = step_weights(h);
    let mut k = Vec::with_capacity(n + 1);
    for i in 0..=n.min(m) {
        k.push((-(i as f64) * h).exp());
    }
    for i in m..n {
        let next = e * k[i] + wa * k[i - m] + wb * k[i + 1 - m];
        k.push(next);
    }
    Ok(KernelTable {
        omega,
        step: h,
        values: k,
    })
}

impl KernelTable {
    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn t_max(&self) -> f64 {
        self.step * (self.values.len() - 1) as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.step
    }

    /// Limit `1/(1+ω)`.
    pub fn limit(&self) -> f64 {
        1.0 / (1.0 + self.omega)
    }

    /// Decaying part `k₁ = k − 1/(1+ω)` at the nodes.
    pub fn k1(&self) -> Vec<f64> {
        let l = self.limit();
        self.values.iter().map(|k| k - l).collect()
    }

    /// Linear interpolation; zero for negative arguments.
    pub fn at(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let x = t / self.step;
        let i = (x.floor() as usize).min(self.values.len() - 2);
        let w = (x - i as f64).min(1.0);
        (1.0 - w) * self.values[i] + w * self.values[i + 1]
    }

    /// Decay rate of `|k₁|` from a log-linear fit through its local maxima
    /// on `[from, t_max]`, skipping maxima below `floor`.
    pub fn envelope_decay_rate(&self, from: f64, floor: f64) -> Option<f64> {
        let k1: Vec<f64> = self.k1().iter().map(|v| v.abs()).collect();
        let (mut ts, mut ys) = (Vec::new(), Vec::new());
        for i in 1..k1.len() - 1 {
            let t = self.time(i);
            if t < from {
                continue;
            }
            if k1[i] >= k1[i - 1] && k1[i] > k1[i + 1] && k1[i] > floor {
                ts.push(t);
                ys.push(k1[i].ln());
            }
        }
        if ts.len() < 3 {
            return None;
        }
        fit_line(&ts, &ys).map(|f| -f.slope)
    }
}

/// Sharp and alternate decay rates for delay `ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub omega: f64,
    /// `−root − η`
    pub b: f64,
    pub root: f64,
    pub b_tilde: f64,
    pub c_tilde0: f64,
    /// `|F(root)|`
    pub residual: f64,
    /// `|e^{2ω x}((x+1)² + β²) − 1|` at the root.
    pub carre_residual: f64,
    /// Imaginary part `β` paired with the root.
    pub beta: f64,
    /// Whether `β = −e^{−ω x} sin(ωβ)` also holds (up to the sign of `β`),
    /// i.e. `x + iβ` is a genuine root of `λ + 1 − e^{−ωλ}`.
    pub sine_relation: bool,
    pub eta: f64,
}

fn beta_of(omega: f64, x: f64) -> f64 {
    ((-2.0 * omega * x).exp() - (x + 1.0) * (x + 1.0)).max(0.0).sqrt()
}

/// `x + 1 − e^{−ωx} cos(ω √max(e^{−2ωx} − (x+1)², 0))`
pub fn rate_function(omega: f64, x: f64) -> f64 {
    x + 1.0 - (-omega * x).exp() * (omega * beta_of(omega, x)).cos()
}

/// Largest negative zero of [`rate_function`], found by scanning a geometric
/// grid downward from `−1e−6` and bisecting the first sign change.
pub fn sharp_rate_b(omega: f64, eta: f64) -> Result<RateEstimate> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(invalid(format!("delay {omega} must be > 0")));
    }
    if !(eta >= 0.0) {
        return Err(invalid(format!("safety margin {eta} must be >= 0")));
    }
    let f = |x: f64| rate_function(omega, x);
    let scan_hi = -1e-6;
    let scan_lo = -(10f64.max(5.0 / omega));
    let points = 4000;
    let ratio = (scan_lo / scan_hi).powf(1.0 / points as f64);
    let mut x_prev = scan_hi;
    let mut f_prev = f(x_prev);
    let mut bracket = None;
    for i in 1..=points {
        let x = scan_hi * ratio.powi(i);
        let fx = f(x);
        if !fx.is_finite() {
            break;
        }
        if fx == 0.0 {
            bracket = Some((x, x));
            break;
        }
        if f_prev.signum() != fx.signum() {
            bracket = Some((x, x_prev));
            break;
        }
        x_prev = x;
        f_prev = fx;
    }
    let (mut lo, mut hi) = bracket.ok_or(Error::NoRootFound {
        omega,
        scan_lo,
        scan_hi,
    })?;
    let f_lo_sign = f(lo).signum();
    while hi - lo > 1e-12 * lo.abs().max(1e-3) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid).signum() == f_lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    let beta = beta_of(omega, root);
    let carre = ((2.0 * omega * root).exp() * ((root + 1.0).powi(2) + beta * beta) - 1.0).abs();
    let sine = (beta + (-omega * root).exp() * (omega * beta).sin()).abs();
    let b = -root - eta;
    if (b - 1.0).abs() < 1e-6 {
        warn!("sharp rate {b} is within 1e-6 of 1 for omega = {omega}");
    }
    let (b_tilde, c_tilde0) = alternate_rate(omega)?;
    Ok(RateEstimate {
        omega,
        b,
        root,
        b_tilde,
        c_tilde0,
        residual: f(root).abs(),
        carre_residual: carre,
        beta,
        sine_relation: sine <= 1e-6 * (1.0 + beta),
        eta,
    })
}

/// `(b̃, C̃₀) = (−ln(1 − e^{−2ω})/(2ω), 2 + ω)`
pub fn alternate_rate(omega: f64) -> Result<(f64, f64)> {
    if !(omega > 0.0) {
        return Err(invalid(format!("delay {omega} must be > 0")));
    }
    let b = -(-(-2.0 * omega).exp()).ln_1p() / (2.0 * omega);
    Ok((b, 2.0 + omega))
}

/// Solution of `u̇ + u − u(t − ω) = μ(t)` for `t > ω` with `u = ν` on `[0, ω]`.
#[derive(Debug, Clone)]
pub struct DdeSolution {
    pub step: f64,
    /// Direct method-of-steps values at `t_i = i * step`.
    pub direct: Vec<f64>,
    /// Values from the kernel convolution formula (equal to `ν` on `[0, ω]`).
    pub convolution: Vec<f64>,
    pub max_gap: f64,
}

impl DdeSolution {
    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.step
    }
}

/// Solves the forced delay equation twice, by direct stepping and by
/// `u(t) = ν(ω) k(t−ω) + ∫₀^ω ν(s) k(t−s−ω) ds + ∫_ω^t μ(s) k(t−s) ds`,
/// and fails with [`Error::Discrepancy`] when they differ by more than `tol`.
pub fn solve_dde<N, M>(omega: f64, nu: N, mu: M, t_end: f64, dt: f64, tol: f64) -> Result<DdeSolution>
where
    N: Fn(f64) -> f64,
    M: Fn(f64) -> f64,
{
    let m = steps_per_delay(omega, dt)?;
    if !(t_end > omega) {
        return Err(invalid(format!("horizon {t_end} must exceed the delay {omega}")));
    }
    let h = omega / m as f64;
    let n = (t_end / h - 1e-9).ceil() as usize;
    let t = |i: usize| i as f64 * h;
    let nus: Vec<f64> = (0..=m).map(|i| nu(t(i))).collect();
    let mus: Vec<f64> = (0..=n).map(|i| if i >= m { mu(t(i)) } else { 0.0 }).collect();

    let (e, wa, wb) = step_weights(h);
    let mut direct = nus.clone();
    for i in m..n {
        let next = e * direct[i] + wa * (direct[i - m] + mus[i]) + wb * (direct[i + 1 - m] + mus[i + 1]);
        direct.push(next);
    }

    let kernel = kernel_k(omega, t(n).max(h), h)?;
    let k = kernel.values();
    let mut conv = nus.clone();
    for i in (m + 1)..=n {
        let mut u = nus[m] * k[i - m];
        // ∫₀^ω ν(s) k(t_i − ω − s) ds; k jumps at 0, so only cells whose
        // arguments are both nonnegative contribute
        let mut hist = 0.0;
        for j in 0..m {
            if i < m + j + 1 {
                break;
            }
            let a0 = i - m - j;
            hist += nus[j] * k[a0] + nus[j + 1] * k[a0 - 1];
        }
        u += 0.5 * h * hist;
        let mut forced = 0.0;
        for j in m..i {
            forced += mus[j] * k[i - j] + mus[j + 1] * k[i - j - 1];
        }
        u += 0.5 * h * forced;
        conv.push(u);
    }

    let max_gap = direct.iter().zip(&conv).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if !(max_gap <= tol) {
        return Err(Error::Discrepancy {
            gap: max_gap,
            tolerance: tol,
        });
    }
    Ok(DdeSolution {
        step: h,
        direct,
        convolution: conv,
        max_gap,
    })
}
