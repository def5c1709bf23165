use gll_core::real_flow::{self, EtaFn, SlopeConvention, Verdict};
use num_rational::Rational64;
use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI};

/// η^{(m)}(x) from d^m sin(x) = sin(x + mπ/2).
fn eta_derivative(n: u32, m: u32, x: f64) -> f64 {
    let big_m = 2.0 * n as f64 - 2.0;
    let shift = m as f64 * FRAC_PI_2;
    big_m * (x + shift).sin() + 0.5 * 2f64.powi(m as i32) * (2.0 * x + shift).sin()
}

fn as_f64(q: Rational64) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

fn simpson(a: f64, b: f64, m: usize, f: &impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / (2 * m) as f64;
    let mut s = f(a) + f(b);
    for j in 1..2 * m {
        s += f(a + j as f64 * h) * if j % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Composite Simpson on a geometric grid over [ε,½] plus uniform grids on [0,ε] and [½,1].
fn own_integral(eps: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut sum = simpson(0.0, eps, 200, &f) + simpson(0.5, 1.0, 200, &f);
    let cuts = 400;
    let ratio = (0.5 / eps).powf(1.0 / cuts as f64);
    // Start just past the kink so the first node sees the interior branch.
    let mut a = eps * (1.0 + 1e-14);
    for j in 0..cuts {
        let b = if j + 1 == cuts { 0.5 } else { a * ratio };
        sum += simpson(a, b, 8, &f);
        a = b;
    }
    sum
}

proptest! {
    #[test]
    fn eta_derivatives_match_the_shift_formula(n in 2u32..30, x in -10.0f64..10.0) {
        let e = EtaFn::new(n).unwrap();
        let scale = 2.0 * n as f64 + 8.0;
        prop_assert!((e.eta(x) - eta_derivative(n, 0, x)).abs() <= 1e-12 * scale);
        prop_assert!((e.eta_prime(x) - eta_derivative(n, 1, x)).abs() <= 1e-12 * scale);
        prop_assert!((e.eta_second(x) - eta_derivative(n, 2, x)).abs() <= 1e-12 * scale);
        prop_assert!((e.eta_third(x) - eta_derivative(n, 3, x)).abs() <= 1e-12 * scale);
    }

    #[test]
    fn exact_derivatives_at_multiples_of_pi(n in 2u32..50, m in 0u32..8, k in -4i64..5) {
        let e = EtaFn::new(n).unwrap();
        let exact = as_f64(e.derivative_at_multiple_of_pi(m, k));
        let float = eta_derivative(n, m, k as f64 * PI);
        prop_assert!((exact - float).abs() <= 1e-9 * (1.0 + float.abs()), "m={m} k={k}: {exact} vs {float}");
    }

    #[test]
    fn gamma_is_an_antiderivative_with_a_stable_gap(n in 2u32..10, y in -3.0f64..3.0) {
        let e = EtaFn::new(n).unwrap();
        let h = 1e-4;
        let x = PI + y;
        let fd = (e.gamma(x + h) - e.gamma(x - h)) / (2.0 * h);
        prop_assert!((fd - e.eta(x)).abs() <= 1e-6 * (1.0 + e.eta(x).abs()));
        prop_assert!((e.gamma_gap(y) - (e.gamma(x) - e.gamma(PI))).abs() <= 1e-12 * (2.0 * n as f64));
    }

    #[test]
    fn stationary_profiles_solve_the_real_ode(alpha in 0.0f64..10.0, n in 2u32..10) {
        let res = real_flow::stationary_residual(alpha, &[0.1, 0.5, 1.0, 3.0, 10.0], n).unwrap();
        prop_assert!(res <= 1e-10 * (1.0 + alpha.powi(3)) * (1.0 + 4.0 * n as f64), "residual {res}");
    }

    #[test]
    fn witness_gap_matches_an_independent_quadrature(le in -6.0f64..-1.0, delta in 0.0f64..PI) {
        let eps = 10f64.powf(le);
        let w = real_flow::nonuniqueness_witness(eps, delta, 64).unwrap();
        let eta = EtaFn::new(2).unwrap();
        let s = 0.5 * delta;
        let kin = own_integral(eps, |r| (s * real_flow::f_eps(eps, r).1).powi(2) * r.powi(3));
        let pot = own_integral(eps, |r| eta.gamma_gap(-s * real_flow::f_eps(eps, r).0) * r);
        let scale = kin.abs() + pot.abs() + 1e-300;
        prop_assert!((w.energy_gap - (kin + pot)).abs() <= 1e-6 * scale, "{} vs {}", w.energy_gap, kin + pot);
        prop_assert!((w.energy_gap_gradient_form - (0.5 * kin + pot)).abs() <= 1e-6 * scale);
        // Closed-form kinetic term (δ/2)² (ln(1/(2ε)) + 15/4).
        let l = (0.5 / eps).ln();
        prop_assert!((kin - s * s * (l + 3.75)).abs() <= 1e-6 * (s * s * (l + 3.75) + 1e-300));
    }

    #[test]
    fn witness_arguments_out_of_range_are_refused(eps in prop_oneof![-1.0f64..=0.0, 0.5f64..2.0], delta in -1.0f64..-1e-9) {
        prop_assert!(real_flow::nonuniqueness_witness(eps, 0.1, 16).is_err());
        prop_assert!(real_flow::nonuniqueness_witness(0.1, delta, 16).is_err());
        prop_assert!(real_flow::nonuniqueness_witness(0.1, PI + 1e-9 - delta, 16).is_err());
    }
}

#[test]
fn pi_is_a_local_maximum_of_eta_prime_for_n_two() {
    let e = EtaFn::new(2).unwrap();
    assert!(e.eta_prime(PI + 0.1) < e.eta_prime(PI));
    assert!(e.eta_prime(PI - 0.1) < e.eta_prime(PI));
    assert_eq!(e.derivative_at_multiple_of_pi(2, 1), Rational64::from_integer(0));
    assert_eq!(e.derivative_at_multiple_of_pi(1, 1), Rational64::from_integer(-1));
}

#[test]
fn classifier_is_unique_from_three_to_fifty() {
    for n in 3..=50 {
        assert_eq!(real_flow::classify_uniqueness(n).unwrap().verdict, Verdict::Unique, "n = {n}");
    }
    let two = real_flow::classify_uniqueness(2).unwrap();
    assert_eq!(two.verdict, Verdict::Borderline);
    assert_eq!(two.eta_prime_at_pi, -1.0);
    assert_eq!(two.threshold, -1.0);
}

#[test]
fn trivial_witness_has_zero_gap() {
    let w = real_flow::nonuniqueness_witness(1e-3, 0.0, 32).unwrap();
    assert_eq!(w.energy_gap, 0.0);
    assert_eq!(w.energy_gap_gradient_form, 0.0);
}

#[test]
fn hardy_saturation_matches_closed_form_and_decreases() {
    let mut last = f64::INFINITY;
    for j in 2..=8 {
        let eps = 10f64.powi(-j);
        let l = (0.5 / eps).ln();
        let exact = (l + 3.75) / (l + 11.0 / 12.0);
        let got = real_flow::hardy_saturation(eps, 64);
        assert!((got - exact).abs() <= 1e-10 * exact, "eps {eps}: {got} vs {exact}");
        assert!(got > 1.0 && got < last);
        last = got;
    }
}

#[test]
fn real_profiles_respect_the_orderings() {
    for n in [3u32, 4] {
        let rep = real_flow::comparison_suite(&[0.0, 0.25, 0.5, 1.0, 2.0, 4.0], n, 30.0, 1e-10).unwrap();
        assert!(rep.passed(), "n = {n}: {:?}", rep.violations.first());
        assert!(!rep.informational);
    }
    let big = real_flow::solve_selfsim_real(SlopeConvention::Doubled.slope(1e3), 3, 30.0, 1e-10).unwrap();
    assert!((PI - big.g.last().unwrap()).abs() <= 0.05, "{}", big.g.last().unwrap());
    let (g1, _) = real_flow::solve_selfsim_real(2.0, 3, 5.0, 1e-10).unwrap().sample(1.0);
    let (g2, _) = real_flow::solve_selfsim_real(4.0, 3, 5.0, 1e-10).unwrap().sample(1.0);
    assert!(g1 < g2);
}


#[test]
fn witness_gap_matches_cosine_integral_values() {
    // ∫cos(a/r) r dr = (r²/2)cos(a/r) − (ar/2)sin(a/r) + (a²/2)Ci(a/r), evaluated offline.
    for (eps, delta, exact) in [
        (0.1, 2.237105010653956, 6.033186504898955),
        (10f64.powf(-5.622059420176371), 1.7406766594885927, 11.60178072276228),
    ] {
        let w = real_flow::nonuniqueness_witness(eps, delta, 64).unwrap();
        assert!((w.energy_gap - exact).abs() <= 1e-9 * exact, "{} vs {exact}", w.energy_gap);
    }
}
