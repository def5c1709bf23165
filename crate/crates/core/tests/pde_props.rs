use gll_core::geom::{e3, FlowParams};
use gll_core::radial_pde::{self as pde, Boundary, EvolveConfig, RadialGrid};
use proptest::prelude::*;
use std::f64::consts::FRAC_PI_2;

fn flow() -> impl Strategy<Value = FlowParams> {
    (1u32..4, 0.0f64..FRAC_PI_2, any::<bool>())
        .prop_map(|(n, t, s)| FlowParams::new(n, t.cos(), if s { t.sin() } else { -t.sin() }).unwrap())
}

fn cfg(save_dt: f64) -> EvolveConfig {
    EvolveConfig { save_dt: Some(save_dt), ..Default::default() }
}

fn orders(errs: &[f64]) -> Vec<f64> {
    errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn origin_stays_pinned_and_norms_stay_unit(amp in 0.2f64..2.0, width in 0.5f64..2.0, theta in 0.0f64..6.28, p in flow()) {
        let grid = RadialGrid::uniform(0.1, 8.0).unwrap();
        let u0 = pde::great_circle_bump(&grid, amp, width, theta).unwrap();
        let tr = pde::evolve(&u0, p, 0.05, &cfg(0.01)).unwrap();
        prop_assert!(tr.max_drift <= 1e-6);
        prop_assert!(tr.frames.len() >= 6);
        for f in &tr.frames {
            prop_assert_eq!(f.u[0].vec(), e3());
            for u in &f.u {
                prop_assert!((u.vec().norm() - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn heat_flow_dissipates_energy(amp in 0.2f64..2.0, width in 0.5f64..2.0, n in 1u32..4) {
        let grid = RadialGrid::uniform(0.05, 8.0).unwrap();
        let u0 = pde::great_circle_bump(&grid, amp, width, 0.0).unwrap();
        let tr = pde::evolve(&u0, FlowParams::heat(n), 0.05, &cfg(0.005)).unwrap();
        let e: Vec<f64> = tr.frames.iter().map(|f| f.energy(n).unwrap()).collect();
        for w in e.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-6, "{e:?}");
        }
        prop_assert!(e[e.len() - 1] < e[0]);
    }

    #[test]
    fn heat_flow_keeps_great_circles(amp in 0.2f64..2.0, theta in 0.0f64..6.28, n in 1u32..4) {
        let grid = RadialGrid::uniform(0.1, 8.0).unwrap();
        let u0 = pde::great_circle_bump(&grid, amp, 1.0, theta).unwrap();
        let tr = pde::evolve(&u0, FlowParams::heat(n), 0.1, &cfg(0.02)).unwrap();
        prop_assert!(pde::great_circle_deviation(&tr, [theta.cos(), theta.sin()]) <= 1e-12);
    }
}

#[test]
fn harmonic_map_is_stationary_to_second_order() {
    let drift: Vec<f64> = [0.1, 0.05]
        .iter()
        .map(|&dr| {
            let grid = RadialGrid::uniform(dr, 20.0).unwrap();
            let u0 = pde::harmonic_field(&grid, [1.0, 0.0]).unwrap();
            pde::drift_from_initial(&pde::evolve(&u0, FlowParams::heat(1), 0.5, &cfg(0.1)).unwrap())
        })
        .collect();
    assert!(drift[0] <= 0.5 * 0.01 && drift[1] <= 0.5 * 0.0025, "{drift:?}");
    assert!(orders(&drift)[0] >= 1.8, "{drift:?}");
}

#[test]
fn residual_converges_at_second_order() {
    let p = FlowParams::new(2, 0.6, 0.8).unwrap();
    let res: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&dr| {
            let grid = RadialGrid::uniform(dr, 8.0).unwrap();
            let u0 = pde::great_circle_bump(&grid, 1.0, 1.0, 0.0).unwrap();
            let tr = pde::evolve(&u0, p, 0.02, &cfg(0.1 * dr)).unwrap();
            pde::residual(&tr, &p).unwrap().iter().map(|x| x.l2).fold(0.0, f64::max)
        })
        .collect();
    assert!(orders(&res).iter().all(|&o| o >= 1.8), "{res:?}");
}

#[test]
fn great_circle_angle_solves_the_real_reduction() {
    let v0 = [0.3f64.cos(), 0.3f64.sin()];
    let res: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&dr| {
            let grid = RadialGrid::uniform(dr, 8.0).unwrap();
            let u0 = pde::great_circle_bump(&grid, 2.0, 1.0, 0.3).unwrap();
            let tr = pde::evolve(&u0, FlowParams::heat(2), 0.02, &cfg(0.1 * dr)).unwrap();
            pde::real_reduction_residual(&tr, v0).unwrap().iter().map(|x| x.l2).fold(0.0, f64::max)
        })
        .collect();
    assert!(res[2] < res[1] && res[1] < res[0], "{res:?}");
    assert!(orders(&res).iter().all(|&o| o >= 1.5), "{res:?}");
}

#[test]
fn boundary_policies_agree_for_localized_heat_data() {
    let grid = RadialGrid::uniform(0.05, 10.0).unwrap();
    let u0 = pde::great_circle_bump(&grid, 1.0, 1.0, 0.0).unwrap();
    let clamp = pde::evolve(&u0, FlowParams::heat(2), 0.1, &cfg(0.1)).unwrap();
    let neumann = pde::evolve(&u0, FlowParams::heat(2), 0.1, &EvolveConfig { boundary: Boundary::Neumann, ..cfg(0.1) }).unwrap();
    let (a, b) = (clamp.frames.last().unwrap(), neumann.frames.last().unwrap());
    let diff = a.u.iter().zip(&b.u).map(|(x, y)| (x.vec() - y.vec()).norm()).fold(0.0, f64::max);
    assert!(diff <= 1e-10, "{diff:e}");
}

#[test]
fn bad_grids_and_configs_are_refused() {
    assert!(RadialGrid::uniform(0.0, 1.0).is_err());
    assert!(RadialGrid::uniform(0.6, 1.0).is_err());
    let grid = RadialGrid::uniform(0.1, 4.0).unwrap();
    let u0 = pde::great_circle_bump(&grid, 1.0, 1.0, 0.0).unwrap();
    let bad = EvolveConfig { dt_factor: 0.5, ..Default::default() };
    assert!(pde::evolve(&u0, FlowParams::heat(2), 0.01, &bad).is_err());
}
