//! Monte Carlo on the jump process behind the kinetic equation: the stress of
//! an element drifts at the shear rate and resets to zero at unit rate while
//! its magnitude exceeds the threshold.
//!
//! The hazard is piecewise 0/1 along a monotone drift, so jump times are
//! sampled exactly by spending an Exp(1) clock on the time spent above
//! threshold.

use rand::distr::{Distribution, Open01};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::initial::{InitialDensity, InverseCdf};
use crate::model::ShearProfile;

#[derive(Debug, Clone)]
pub struct PdmpConfig {
    pub paths: usize,
    pub seed: u64,
    pub profile: ShearProfile,
    pub sigma_c: f64,
    pub t_end: f64,
    pub initial: InitialDensity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleEstimate {
    pub t: f64,
    pub f_hat: f64,
    pub f_se: f64,
    pub tau_hat: f64,
    pub tau_se: f64,
    pub n: usize,
}

/// Strictly positive Exp(1) draw.
pub fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = Open01.sample(rng);
    -u.ln()
}

/// One element: stress, current time and the unspent part of its jump clock.
#[derive(Debug, Clone)]
pub struct Path {
    pub sigma: f64,
    pub t: f64,
    pub jumps: u64,
    clock: f64,
}

impl Path {
    pub fn new<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> Self {
        Self {
            sigma,
            t: 0.0,
            jumps: 0,
            clock: exp1(rng),
        }
    }

    /// Advances to time `until`, resetting to zero whenever the clock runs out.
    pub fn advance<R: Rng + ?Sized>(&mut self, until: f64, profile: &ShearProfile, sigma_c: f64, rng: &mut R) {
        while self.t < until {
            let s = self.t;
            let g_s = profile.accumulated(s);
            // above threshold on [s, u1) (below −σ_c) and from u2 on (above σ_c)
            let u1 = if self.sigma < -sigma_c {
                profile.invert_accumulated(g_s - sigma_c - self.sigma).max(s)
            } else {
                s
            };
            let u2 = if self.sigma > sigma_c {
                s
            } else {
                profile.invert_accumulated(g_s + sigma_c - self.sigma).max(s)
            };
            let first = u1.min(until) - s;
            let jump_at = if self.clock <= first {
                Some(s + self.clock)
            } else if u2 + (self.clock - first) < until {
                Some(u2 + (self.clock - first))
            } else {
                None
            };
            match jump_at {
                Some(tj) => {
                    self.sigma = 0.0;
                    self.t = tj;
                    self.jumps += 1;
                    self.clock = exp1(rng);
                }
                None => {
                    let spent = first + (until - u2).max(0.0);
                    self.clock -= spent;
                    self.sigma += profile.accumulated(until) - g_s;
                    self.t = until;
                }
            }
        }
    }
}

/// Terminal stress and jump count of a single path from `sigma0`.
pub fn simulate_path(seed: u64, profile: &ShearProfile, sigma0: f64, sigma_c: f64, t_end: f64) -> (f64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = Path::new(sigma0, &mut rng);
    p.advance(t_end, profile, sigma_c, &mut rng);
    (p.sigma, p.jumps)
}

fn validate(config: &PdmpConfig, times: &[f64]) -> Result<()> {
    if config.paths == 0 {
        return Err(invalid("path count must be >= 1"));
    }
    if !(config.sigma_c > 0.0) {
        return Err(invalid("sigma_c must be > 0"));
    }
    if times.iter().any(|t| !(*t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("sample times must be nonnegative and sorted"));
    }
    let horizon = times.last().copied().unwrap_or(0.0).max(config.t_end);
    config.profile.validate(horizon)
}

fn path_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

fn run_one(config: &PdmpConfig, sampler: &InverseCdf, i: usize, times: &[f64]) -> (Vec<f64>, u64) {
    let mut rng = path_rng(config.seed, i);
    let u: f64 = Open01.sample(&mut rng);
    let mut p = Path::new(sampler.sample(u), &mut rng);
    let states = times
        .iter()
        .map(|&t| {
            p.advance(t, &config.profile, config.sigma_c, &mut rng);
            p.sigma
        })
        .collect();
    (states, p.jumps)
}

/// States of every path at each sample time (`out[path][k]`) and the jump
/// counts. Paths use independent ChaCha streams keyed by the master seed, so
/// the result does not depend on thread scheduling.
pub fn simulate_ensemble(config: &PdmpConfig, times: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<u64>)> {
    validate(config, times)?;
    let sampler = config.initial.sampler();
    let out: Vec<(Vec<f64>, u64)> = (0..config.paths)
        .into_par_iter()
        .map(|i| run_one(config, &sampler, i, times))
        .collect();
    Ok(out.into_iter().unzip())
}

/// Ensemble means and standard errors of `χ(Σ_t)` and `Σ_t`.
pub fn estimate(config: &PdmpConfig, times: &[f64]) -> Result<Vec<EnsembleEstimate>> {
    let (states, _) = simulate_ensemble(config, times)?;
    let n = config.paths as f64;
    let mut out = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        // ordered sequential reduction keeps results bit-identical
        let (mut sf, mut st, mut st2) = (0.0, 0.0, 0.0);
        for path in &states {
            let s = path[k];
            if s.abs() > config.sigma_c {
                sf += 1.0;
            }
            st += s;
            st2 += s * s;
        }
        let f_hat = sf / n;
        let tau_hat = st / n;
        let denom = (n - 1.0).max(1.0);
        let var_f = (sf - n * f_hat * f_hat).max(0.0) / denom;
        let var_tau = (st2 - n * tau_hat * tau_hat).max(0.0) / denom;
        out.push(EnsembleEstimate {
            t,
            f_hat,
            f_se: (var_f / n).sqrt(),
            tau_hat,
            tau_se: (var_tau / n).sqrt(),
            n: config.paths,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_draws_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!((0..100_000).all(|_| exp1(&mut rng) > 0.0));
    }

    #[test]
    fn first_exit_time_is_omega() {
        // a path from 0 cannot jump before reaching σ_c at t = σ_c / γ̇
        let prof = ShearProfile::constant(0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let mut p = Path::new(0.0, &mut rng);
            p.advance(3.999, &prof, 2.0, &mut rng);
            assert_eq!(p.jumps, 0);
            assert!((p.sigma - 0.5 * 3.999).abs() < 1e-12);
        }
        let mut p = Path::new(0.0, &mut rng);
        p.clock = 0.25;
        p.advance(10.0, &prof, 2.0, &mut rng);
        assert!(p.jumps >= 1);
    }

    #[test]
    fn jump_while_below_negative_threshold() {
        let prof = ShearProfile::constant(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut p = Path::new(-5.0, &mut rng);
        p.clock = 0.5;
        p.advance(0.6, &prof, 2.0, &mut rng);
        assert_eq!(p.jumps, 1);
        assert!((p.sigma - 0.1).abs() < 1e-12);
    }

    #[test]
    fn reproducible() {
        let cfg = PdmpConfig {
            paths: 2000,
            seed: 7,
            profile: ShearProfile::constant(1.0),
            sigma_c: 2.0,
            t_end: 5.0,
            initial: InitialDensity::uniform(0.0, 2.0).unwrap(),
        };
        let a = estimate(&cfg, &[1.0, 5.0]).unwrap();
        let b = estimate(&cfg, &[1.0, 5.0]).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            simulate_path(9, &cfg.profile, 0.0, 2.0, 30.0),
            simulate_path(9, &cfg.profile, 0.0, 2.0, 30.0)
        );
    }
}
