use gll_core::real_flow;
use gll_core::selfsim;
use gll_core::geom::FlowParams;
use gll_core::singular_ode::{self, IvpOptions, SingularIvp};
use num_complex::Complex64 as C;
use proptest::prelude::*;

/// f'' + (k/r) f' − k f/r² + f = 0 with f'(0) = α₀ has the closed form
/// α₀ r Σ (−1)^m ν! (r/2)^{2m} / (m! (m+ν)!), ν = (k+1)/2, for odd k.
fn bessel_oracle(k: u32, alpha0: C, r: f64) -> (C, C) {
    let nu = (k + 1) / 2;
    let (mut s, mut ds) = (0.0, 0.0);
    let mut term = 1.0;
    for m in 0..80u32 {
        if m > 0 {
            term *= -(r / 2.0).powi(2) / (m as f64 * (m + nu) as f64);
        }
        s += term * r;
        ds += term * (2 * m + 1) as f64;
    }
    (alpha0 * s, alpha0 * ds)
}

fn bessel_ivp(k: u32, alpha0: C) -> SingularIvp<'static> {
    SingularIvp::new(k as f64, Box::new(|_fp: C, f: C, _r: f64| -f), Box::new(|_f: C| C::new(0.0, 0.0)), alpha0).unwrap()
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    let mut r = vec![0.0];
    r.extend((0..n).map(|j| (a + (b - a) * j as f64 / (n - 1) as f64).exp()));
    r
}

/// (1 + b r) e^{−(r/a)²} (1 + c sin²(w r)) and its derivative.
fn family(a: f64, b: f64, c: f64, w: f64, r: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let f = r.iter().map(|&x| (1.0 + b * x) * (-(x / a).powi(2)).exp() * (1.0 + c * (w * x).sin().powi(2))).collect();
    let fr = r
        .iter()
        .map(|&x| {
            let e = (-(x / a).powi(2)).exp();
            let s = 1.0 + c * (w * x).sin().powi(2);
            let ds = c * w * (2.0 * w * x).sin();
            e * (b * s - (1.0 + b * x) * 2.0 * x / (a * a) * s + (1.0 + b * x) * ds)
        })
        .collect();
    (f, fr)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn integration_matches_the_bessel_closed_form(k in prop::sample::select(vec![1u32, 3, 5, 7]), re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let alpha0 = C::new(re, im);
        prop_assume!(alpha0.norm() > 1e-3);
        let grid = singular_ode::integrate_adaptive(&bessel_ivp(k, alpha0), 8.0, 1e-11).unwrap();
        for &r in &[0.01, 0.5, 2.0, 5.0, 8.0] {
            let (f, fp) = grid.sample(r);
            let (g, gp) = bessel_oracle(k, alpha0, r);
            prop_assert!((f - g).norm() <= 1e-7 * alpha0.norm(), "k={k} r={r}: {f} vs {g}");
            prop_assert!((fp - gp).norm() <= 1e-7 * alpha0.norm(), "k={k} r={r}: {fp} vs {gp}");
        }
    }

    #[test]
    fn second_derivative_vanishes_at_the_origin(v in (-3.0f64..3.0, -3.0f64..3.0), t in -1.5707f64..1.5707, n in 1u32..4) {
        prop_assume!(v.0.hypot(v.1) > 0.1);
        let p = FlowParams::new(n, t.cos(), t.sin()).unwrap();
        let ivp = selfsim::stereo_ivp([v.0, v.1], p).unwrap();
        let opts = IvpOptions { r0: Some(1e-5), ..Default::default() };
        let g = singular_ode::integrate_with(&ivp, 0.1, &opts).unwrap();
        let fpp: Vec<f64> = [1e-2, 1e-3, 1e-4].iter().map(|&r| {
            let (f, fp) = g.sample(r);
            ivp.second_derivative(r, f, fp).norm()
        }).collect();
        // f'' = 6cr + O(r³): one decade in r is one decade in f''.
        prop_assert!(fpp[1] <= 0.2 * fpp[0] + 1e-8, "{fpp:?}");
        prop_assert!(fpp[2] <= 0.2 * fpp[1] + 1e-8, "{fpp:?}");
    }

    #[test]
    fn real_profile_second_derivative_vanishes_at_the_origin(slope in 0.05f64..4.0, n in 2u32..6) {
        let ivp = real_flow::selfsim_real_ivp(slope, n).unwrap();
        let opts = IvpOptions { r0: Some(1e-5), ..Default::default() };
        let g = singular_ode::integrate_with(&ivp, 0.1, &opts).unwrap();
        let fpp: Vec<f64> = [1e-2, 1e-3, 1e-4].iter().map(|&r| {
            let (f, fp) = g.sample(r);
            ivp.second_derivative(r, f, fp).norm()
        }).collect();
        prop_assert!(fpp[1] <= 0.2 * fpp[0] + 1e-8, "{fpp:?}");
        prop_assert!(fpp[2] <= 0.2 * fpp[1] + 1e-8, "{fpp:?}");
    }

    #[test]
    fn hardy_ratio_stays_below_the_bound(
        dpk in prop::sample::select(vec![(4u32, 2.0, 0.0), (6, 2.0, 0.0), (4, 1.5, 0.0), (6, 2.0, 1.0), (3, 1.0, 0.5)]),
        a in 0.2f64..1.5, b in -2.0f64..2.0, c in 0.0f64..1.0, w in 0.5f64..6.0,
    ) {
        let (d, p, k) = dpk;
        let r = log_grid(1e-6, 15.0, 20_000);
        let (f, fr) = family(a, b, c, w, &r);
        let rep = singular_ode::hardy_check(&r, &f, &fr, d, p, k).unwrap();
        prop_assert_eq!(rep.bound, p / (d as f64 - p * (k + 1.0)));
        prop_assert!(rep.ratio <= rep.bound * (1.0 + 5e-3), "ratio {} bound {}", rep.ratio, rep.bound);
    }

    #[test]
    fn hardy_refuses_outside_the_admissible_range(d in 2u32..8, k in 0.0f64..3.0, excess in 0.0f64..2.0) {
        let p = d as f64 / (k + 1.0) + excess;
        let r = [0.0, 1.0, 2.0];
        prop_assert!(singular_ode::hardy_check(&r, &r, &r, d, p, k).is_err());
    }

    #[test]
    fn adaptive_integration_is_bit_reproducible(re in -2.0f64..2.0, im in -2.0f64..2.0, k in prop::sample::select(vec![1u32, 3])) {
        let alpha0 = C::new(re, im);
        let a = singular_ode::integrate_adaptive(&bessel_ivp(k, alpha0), 5.0, 1e-10).unwrap();
        let b = singular_ode::integrate_adaptive(&bessel_ivp(k, alpha0), 5.0, 1e-10).unwrap();
        prop_assert!(a.r == b.r && a.f == b.f && a.fp == b.fp);
    }
}

#[test]
fn series_start_rejects_large_radius() {
    let ivp = bessel_ivp(1, C::new(1.0, 0.0));
    assert!(singular_ode::series_start(&ivp, 1.0).is_err());
    assert!(singular_ode::series_start(&ivp, 0.0).is_err());
    let s = singular_ode::series_start(&ivp, 1e-3).unwrap();
    // f ≈ α r − α r³/8 for k = 1.
    assert!((s.cubic - C::new(-0.125, 0.0)).norm() <= 1e-7, "{}", s.cubic);
}
