use agekin::grid::{aligned_cell_count, cfl_time_step, init_grid, run_observed};
use agekin::model::{stationary_density, steady_observables};
use agekin::pdmp::{estimate, simulate_ensemble, simulate_path, PdmpConfig};
use agekin::quadrature::integrate;
use agekin::{InitialDensity, ModelParams, ShearProfile};
use proptest::prelude::*;

const SC: f64 = 2.0;

fn config(paths: usize, seed: u64, profile: ShearProfile, t_end: f64) -> PdmpConfig {
    PdmpConfig {
        paths,
        seed,
        profile,
        sigma_c: SC,
        t_end,
        initial: InitialDensity::uniform(0.0, 2.0).unwrap(),
    }
}

#[test]
fn stationary_moments_within_three_standard_errors() {
    let e = &estimate(&config(100_000, 7, ShearProfile::constant(1.0), 40.0), &[40.0]).unwrap()[0];
    let st = steady_observables(1.0, SC).unwrap();
    assert!((e.f_hat - st.f_inf).abs() <= 3.0 * e.f_se, "f {} ± {}", e.f_hat, e.f_se);
    assert!(
        (e.tau_hat - st.tau_inf).abs() <= 3.0 * e.tau_se,
        "tau {} ± {}",
        e.tau_hat,
        e.tau_se
    );
}

#[test]
fn histogram_matches_stationary_density() {
    let n = 100_000;
    let (states, _) = simulate_ensemble(&config(n, 11, ShearProfile::constant(1.0), 40.0), &[40.0]).unwrap();
    let (lo, width, bins) = (-4.0, 0.25, 64);
    let mut counts = vec![0usize; bins + 2];
    for s in &states {
        let b = ((s[0] - lo) / width).floor();
        let idx = if b < 0.0 { 0 } else { (b as usize + 1).min(bins + 1) };
        counts[idx] += 1;
    }
    let p = |s: f64| stationary_density(s, 1.0, SC).unwrap();
    let mut probs = Vec::with_capacity(bins + 2);
    let below = integrate(p, -60.0, lo, &[-SC, 0.0], 1e-13).unwrap().value;
    probs.push(below);
    for k in 0..bins {
        let a = lo + k as f64 * width;
        probs.push(integrate(p, a, a + width, &[-SC, 0.0, SC], 1e-13).unwrap().value);
    }
    let inside: f64 = probs.iter().sum();
    probs.push((1.0 - inside).max(0.0));
    let nf = n as f64;
    let l1: f64 = counts.iter().zip(&probs).map(|(c, q)| (*c as f64 / nf - q).abs()).sum();
    let expected: f64 = probs
        .iter()
        .map(|q| (2.0 * q * (1.0 - q) / (std::f64::consts::PI * nf)).sqrt())
        .sum();
    assert!(l1 <= 3.0 * expected, "L1 {l1} vs expected {expected}");
}

#[test]
fn standard_error_halves_with_four_times_the_paths() {
    let prof = ShearProfile::Affine {
        offset: 0.5,
        slope: 0.1,
    };
    let a = &estimate(&config(20_000, 3, prof.clone(), 5.0), &[5.0]).unwrap()[0];
    let b = &estimate(&config(80_000, 3, prof, 5.0), &[5.0]).unwrap()[0];
    for (x, y) in [(a.f_se, b.f_se), (a.tau_se, b.tau_se)] {
        let ratio = x / y;
        assert!((ratio / 2.0 - 1.0).abs() <= 0.2, "ratio {ratio}");
    }
}

#[test]
fn jump_rate_tends_to_steady_fluidity() {
    let n = 20_000;
    let prof = ShearProfile::constant(0.6);
    let (_, j0) = simulate_ensemble(&config(n, 5, prof.clone(), 40.0), &[40.0]).unwrap();
    let (_, j1) = simulate_ensemble(&config(n, 5, prof, 120.0), &[40.0, 120.0]).unwrap();
    let extra: u64 = j1.iter().sum::<u64>() - j0.iter().sum::<u64>();
    let rate = extra as f64 / (n as f64 * 80.0);
    let f_inf = steady_observables(0.6, SC).unwrap().f_inf;
    // counts are roughly Poisson with mean n·80·f∞
    let se = (f_inf / (n as f64 * 80.0)).sqrt();
    assert!((rate - f_inf).abs() <= 4.0 * se, "rate {rate} vs {f_inf}");
}

#[test]
fn pausing_does_not_change_paths() {
    let c = config(500, 9, ShearProfile::ramp(0.3), 6.0);
    let (a, ja) = simulate_ensemble(&c, &[6.0]).unwrap();
    let (b, jb) = simulate_ensemble(&c, &[1.0, 2.5, 6.0]).unwrap();
    assert_eq!(ja, jb);
    for (x, y) in a.iter().zip(&b) {
        assert!((x[0] - y[2]).abs() <= 1e-12 * (1.0 + x[0].abs()));
    }
}

#[test]
fn grid_brackets_ensemble_at_sample_times() {
    let prof = ShearProfile::Affine {
        offset: 0.4,
        slope: 0.1,
    };
    let times = [1.0, 2.5, 5.0, 10.0];
    let c = config(100_000, 17, prof.clone(), 10.0);
    let est = estimate(&c, &times).unwrap();
    let grid_at = |cells: usize, t: f64| {
        let n = aligned_cell_count(cells, 10.0, SC).unwrap();
        let mut params = ModelParams::new(SC, 10.0, n, 1.0, t).unwrap();
        let field = init_grid(&params, &c.initial).unwrap();
        params.dt = cfl_time_step(field.dsigma(), prof.upper_bound(t), 0.9);
        let obs = run_observed(field, &prof, params.dt, t, 1000, |_| {})
            .unwrap()
            .field
            .observables();
        (obs.fluidity, obs.stress)
    };
    for e in &est {
        let (fc, tc) = grid_at(4000, e.t);
        let (ff, tf) = grid_at(8010, e.t);
        // the fine grid error is about the coarse/fine gap, first order
        let f_tol = 3.0 * e.f_se + 2.0 * (fc - ff).abs();
        let t_tol = 3.0 * e.tau_se + 2.0 * (tc - tf).abs();
        assert!((e.f_hat - ff).abs() <= f_tol, "t {}: f {} vs {ff}", e.t, e.f_hat);
        assert!((e.tau_hat - tf).abs() <= t_tol, "t {}: tau {} vs {tf}", e.t, e.tau_hat);
    }
}

#[test]
fn ensemble_is_reproducible() {
    let c = config(2000, 42, ShearProfile::constant(1.0), 3.0);
    let a = estimate(&c, &[1.0, 3.0]).unwrap();
    let b = estimate(&c, &[1.0, 3.0]).unwrap();
    assert_eq!(a, b);
}

#[test]
fn rejects_empty_ensembles() {
    let mut c = config(0, 1, ShearProfile::constant(1.0), 1.0);
    assert!(estimate(&c, &[1.0]).is_err());
    c.paths = 10;
    assert!(estimate(&c, &[2.0, 1.0]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn single_path_moves_only_by_shear_between_jumps(
        seed in 0u64..1000,
        g in 0.05f64..3.0,
        sigma0 in -3.0f64..3.0,
        t in 0.0f64..10.0,
    ) {
        let (sigma, jumps) = simulate_path(seed, &ShearProfile::constant(g), sigma0, SC, t);
        if jumps == 0 {
            // no reset: pure drift, and never above threshold long enough to fire
            prop_assert!((sigma - (sigma0 + g * t)).abs() <= 1e-9 * (1.0 + sigma.abs()));
        } else {
            // after the last reset the stress is the shear accumulated since
            prop_assert!(sigma >= 0.0 && sigma <= g * t + 1e-9);
        }
    }
}
