use agekin::grid::{init_grid, init_grid_with, run, run_observed, MASS_TOLERANCE};
use agekin::model::{stationary_density, steady_observables};
use agekin::{InitialDensity, ModelParams, ShearProfile};
use proptest::prelude::*;

fn params(n: usize, dt: f64, t_end: f64) -> ModelParams {
    ModelParams::new(2.0, 10.0, n, dt, t_end).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn one_step_conserves_mass_and_sign(
        values in prop::collection::vec(0.0f64..5.0, 30),
        nu in 0.0f64..1.0,
        dt in 1e-4f64..1.0,
    ) {
        prop_assume!(values.iter().sum::<f64>() > 1e-3);
        let p0 = InitialDensity::grid_sampled(-7.0, 0.5, values).unwrap();
        let mut f = init_grid(&params(401, 1.0, 1.0), &p0).unwrap();
        let rate = nu * f.dsigma() / dt;
        for _ in 0..5 {
            f.step(dt, rate).unwrap();
            let m = f.mass();
            prop_assert!((m - 1.0).abs() <= 1e-14, "mass {m}");
            prop_assert!(f.values().iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn substepping_keeps_invariants(rate in 0.01f64..30.0) {
        let mut f = init_grid(&params(401, 1.0, 1.0), &InitialDensity::gaussian(10.0).unwrap()).unwrap();
        for _ in 0..10 {
            f.step_substepped(0.05, rate).unwrap();
        }
        prop_assert!(f.check_invariants().is_ok());
    }
}

#[test]
fn stationary_sample_has_steady_fluidity() {
    let f_inf = steady_observables(1.0, 2.0).unwrap().f_inf;
    // mass beyond M_σ = 10 is cut off and the rest renormalized
    let tail = f_inf * (-8.0f64).exp();
    let truncated = (f_inf - tail) / (1.0 - tail);
    for n in [4000, 8010] {
        let f = init_grid_with(&params(n, 1e-3, 1.0), |s| stationary_density(s, 1.0, 2.0).unwrap()).unwrap();
        let err = (f.observables().fluidity - truncated).abs();
        // aligned cells make this a midpoint rule on each smooth branch
        assert!(err <= f.dsigma() * f.dsigma(), "n {n}: {err}");
    }
}

#[test]
fn run_respects_bounds() {
    // positivity, mass, f ≤ 1 and the max bound ‖p0‖∞ + 1/γ̇ + O(Δσ)
    for rate in [0.3, 1.0, 2.5] {
        let p0 = InitialDensity::uniform(-1.0, 1.0).unwrap();
        let mut p = params(2000, 1.0, 20.0);
        p.dt = 0.9 * p.dsigma() / rate;
        let bound = p0.sup_norm() + 1.0 / rate;
        let mut worst_max = 0.0f64;
        let out = run_observed(
            init_grid(&p, &p0).unwrap(),
            &ShearProfile::constant(rate),
            p.dt,
            20.0,
            10,
            |f| {
                worst_max = worst_max.max(f.values().iter().cloned().fold(0.0, f64::max));
            },
        )
        .unwrap();
        for o in &out.series.samples {
            assert!((o.mass - 1.0).abs() <= MASS_TOLERANCE);
            assert!(o.min >= 0.0);
            assert!(o.fluidity >= 0.0 && o.fluidity <= o.mass);
        }
        assert!(out.series.samples.windows(2).all(|w| w[1].t > w[0].t));
        assert!(worst_max <= bound + 0.05, "rate {rate}: max {worst_max} vs {bound}");
    }
}

#[test]
fn stress_grows_at_most_linearly() {
    // |dτ/dt| ≤ γ̇ + |β| ≤ M_γ̇ + M_σ on the truncated domain
    let prof = ShearProfile::Affine {
        offset: 0.2,
        slope: 0.05,
    };
    let mut p = params(2000, 1.0, 20.0);
    p.dt = 0.9 * p.dsigma() / prof.upper_bound(20.0);
    let out = run(&p, &InitialDensity::gaussian(10.0).unwrap(), &prof, 20).unwrap();
    let tau0 = out.series.samples[0].stress;
    let slope = prof.upper_bound(20.0) + 10.0;
    for o in &out.series.samples {
        assert!((o.stress - tau0).abs() <= slope * o.t + 1e-12);
    }
}

/// L² distance to p∞ at t = 40 from the Gaussian datum under unit shear.
fn relaxed_l2(n: usize) -> f64 {
    let mut p = params(n, 1.0, 40.0);
    let f = init_grid(&p, &InitialDensity::gaussian(10.0).unwrap()).unwrap();
    p.dt = 0.9 * f.dsigma();
    let out = run_observed(f, &ShearProfile::constant(1.0), p.dt, 40.0, 1000, |_| {}).unwrap();
    out.field.l2_distance(|s| stationary_density(s, 1.0, 2.0).unwrap())
}

#[test]
fn relaxes_to_stationary_state() {
    // the upwind smearing of the jumps of p∞ leaves an L² floor ∝ Δσ^½;
    // bound frozen from the refinement study (9.4e-3, 6.7e-3, 4.7e-3)
    let (a, b) = (relaxed_l2(4000), relaxed_l2(8010));
    assert!(a <= 1e-2, "desk L2 {a}");
    let ratio = a / b;
    assert!((1.3..1.6).contains(&ratio), "ratio {ratio}");
    // extrapolated to Δσ = 5e-5
    let fine = a * (0.01f64).sqrt();
    assert!(fine <= 1e-3, "extrapolated {fine}");
}

#[test]
fn l2_to_stationary_decreases_after_transient() {
    let rate = 0.5;
    let mut p = params(4000, 1.0, 60.0);
    let f = init_grid(&p, &InitialDensity::gaussian(10.0).unwrap()).unwrap();
    p.dt = 0.9 * f.dsigma() / rate;
    let target = f
        .discrete_equilibrium(60.0 / (60.0 / p.dt - 1e-9).ceil(), rate)
        .unwrap();
    let mut d = Vec::new();
    run_observed(f, &ShearProfile::constant(rate), p.dt, 60.0, 50, |f| {
        d.push((f.time(), f.l2_distance_to_field(&target)));
    })
    .unwrap();
    // the envelope decays: compare maxima over consecutive windows of one delay
    let omega = 2.0 / rate;
    let window_max = |k: usize| {
        d.iter()
            .filter(|(t, _)| *t >= k as f64 * omega && *t < (k + 1) as f64 * omega)
            .map(|(_, v)| *v)
            .fold(0.0, f64::max)
    };
    for k in 2..14 {
        assert!(window_max(k + 1) < window_max(k), "window {k}");
    }
}

#[test]
fn steady_state_drift_is_first_order() {
    // golden constant: ‖p(T) − p∞‖₁ ≤ C (Δσ + Δt) T with C frozen from the
    // refinement study (drift 2.0e-3 at Δσ = 5e-3, T = 10)
    const C: f64 = 0.025;
    for n in [4000, 8010] {
        let mut p = params(n, 1.0, 10.0);
        let f = init_grid_with(&p, |s| stationary_density(s, 0.5, 2.0).unwrap()).unwrap();
        p.dt = 0.9 * f.dsigma() / 0.5;
        let h = f.dsigma();
        let out = run_observed(f, &ShearProfile::constant(0.5), p.dt, 10.0, 1000, |_| {}).unwrap();
        let drift = out.field.l1_distance(|s| stationary_density(s, 0.5, 2.0).unwrap());
        assert!(drift <= C * (h + p.dt) * 10.0, "n {n}: {drift}");
    }
}
