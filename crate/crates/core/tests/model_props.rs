use agekin::model::{
    gamma_accum, gamma_inverse, indicator, kappa, occupation_time, stationary_density, steady_observables,
};
use agekin::quadrature::integrate;
use agekin::{Error, ShearProfile};
use proptest::prelude::*;

fn profiles() -> impl Strategy<Value = ShearProfile> {
    prop_oneof![
        (0.05f64..5.0).prop_map(ShearProfile::constant),
        ((0.05f64..3.0), (0.0f64..2.0)).prop_map(|(c, a)| ShearProfile::Affine { offset: c, slope: a }),
        ((0.05f64..3.0), (0.0f64..2.0), (0.01f64..1.0))
            .prop_map(|(c, a, e)| { ShearProfile::time_scaled(ShearProfile::Affine { offset: c, slope: a }, e) }),
    ]
}

/// Crossing time of the nondecreasing `u ↦ c(u)` with `level` on `[0, t]`, by bisection.
fn crossing<F: Fn(f64) -> f64>(c: F, level: f64, t: f64) -> f64 {
    if c(0.0) >= level {
        return 0.0;
    }
    if c(t) < level {
        return t;
    }
    let (mut lo, mut hi) = (0.0, t);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if c(mid) < level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn inverse_round_trip(p in profiles(), t in 0.0f64..20.0) {
        let g = gamma_accum(&p, t).unwrap();
        let back = gamma_inverse(&p, g, 20.0).unwrap();
        prop_assert!((back - t).abs() <= 1e-10 * (1.0 + t), "{back} vs {t}");
    }

    #[test]
    fn occupation_matches_bisection(p in profiles(), t in 0.0f64..15.0, sigma in -12.0f64..12.0) {
        let sc = 2.0;
        let gt = p.accumulated(t);
        let c = |u: f64| sigma - gt + p.accumulated(u);
        // above threshold on [0, u_lo) and (u_hi, t]
        let u_lo = crossing(c, -sc, t);
        let u_hi = crossing(c, sc, t);
        let brute = u_lo + (t - u_hi);
        let fast = occupation_time(&p, t, sigma, sc).unwrap();
        prop_assert!((fast - brute).abs() <= 1e-8, "{fast} vs {brute}");
    }

    #[test]
    fn indicator_even_and_monotone(s in -50.0f64..50.0, sc in 0.1f64..10.0, d in 0.0f64..5.0) {
        prop_assert_eq!(indicator(s, sc), indicator(-s, sc));
        prop_assert!(indicator(s.abs() + d, sc) >= indicator(s.abs(), sc));
    }
}

#[test]
fn ramp_has_no_inverse() {
    let p = ShearProfile::ramp(1.0);
    assert!(matches!(
        occupation_time(&p, 1.0, 0.0, 2.0),
        Err(Error::DegenerateShear(_))
    ));
    assert!(matches!(gamma_inverse(&p, 0.1, 1.0), Err(Error::DegenerateShear(_))));
}

#[test]
fn stationary_density_integrates_to_one() {
    let sc = 2.0;
    for g in [0.05, 0.1, 0.5, 1.0, 2.0, 10.0] {
        let m = sc + 20.0 * g;
        let body = integrate(|s| stationary_density(s, g, sc).unwrap(), -m, m, &[0.0, sc], 1e-14)
            .unwrap()
            .value;
        // exponential tail beyond m
        let tail = g / (sc + g) * (-(m - sc) / g).exp();
        assert!((body + tail - 1.0).abs() <= 1e-10, "rate {g}: {}", body + tail);
    }
}

#[test]
fn stationary_density_fixed_point_residual_first_order() {
    // γ̇ p' + χ p = 0 away from 0 and ±σ_c, one-sided differences
    let (g, sc) = (0.7, 2.0);
    let p = |s: f64| stationary_density(s, g, sc).unwrap();
    let residual = |h: f64| {
        [-3.0, -1.0, 0.5, 1.5, 2.5, 4.0, 7.0]
            .iter()
            .map(|&s| (g * (p(s + h) - p(s)) / h + indicator(s, sc) * p(s)).abs())
            .fold(0.0, f64::max)
    };
    let (r1, r2) = (residual(1e-3), residual(5e-4));
    assert!(r1 < 1e-3);
    let ratio = r1 / r2;
    assert!((1.8..2.2).contains(&ratio), "ratio {ratio}");
}

#[test]
fn kappa_identity_log_grid() {
    for k in 0..=60 {
        let g = 10f64.powf(-3.0 + 0.1 * k as f64);
        let st = steady_observables(g, 2.0).unwrap();
        let lhs = kappa(g, 2.0) * st.f_inf * st.tau_inf;
        assert!((lhs - g).abs() <= 1e-12 * g, "rate {g}");
    }
}
