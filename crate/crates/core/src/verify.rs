//! Named invariant suites behind `gll verify`. Every check is deterministic
//! (fixed seeds) and records the measured value next to its tolerance.

use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

use crate::geom::{self, FlowParams, RadialProfile, SpherePoint, TangentVec, Vec3};
use crate::hasimoto;
use crate::radial_pde::{self as pde, EvolveConfig, RadialGrid};
use crate::real_flow::{self, EtaFn, Verdict};
use crate::selfsim;
use crate::singular_ode::{self, IvpOptions};
use crate::GllError;

pub const SUITES: [&str; 6] = ["geom", "singular", "selfsim", "realheat", "pde", "hasimoto"];

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }
}

struct Suite {
    name: &'static str,
    checks: Vec<Check>,
}

impl Suite {
    fn new(name: &'static str) -> Self {
        Suite { name, checks: Vec::new() }
    }

    fn push(&mut self, name: &str, passed: bool, value: f64, tolerance: f64, detail: String) {
        self.checks.push(Check { name: name.into(), passed, value, tolerance, detail });
    }

    fn le(&mut self, name: &str, value: f64, tol: f64) {
        self.push(name, value <= tol, value, tol, String::new());
    }

    fn ge(&mut self, name: &str, value: f64, tol: f64) {
        self.push(name, value >= tol, value, tol, String::new());
    }

    fn truth(&mut self, name: &str, ok: bool, detail: String) {
        self.push(name, ok, if ok { 1.0 } else { 0.0 }, 1.0, detail);
    }

    /// Records an error from a computation as a failed check.
    fn guard<T>(&mut self, name: &str, r: Result<T, GllError>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.push(name, false, f64::NAN, f64::NAN, e.to_string());
                None
            }
        }
    }

    fn finish(self) -> SuiteReport {
        SuiteReport { suite: self.name.into(), checks: self.checks }
    }
}

pub fn run_suite(name: &str) -> Result<SuiteReport, GllError> {
    Ok(match name {
        "geom" => geom_suite(),
        "singular" => singular_suite(),
        "selfsim" => selfsim_suite(),
        "realheat" => realheat_suite(),
        "pde" => pde_suite(),
        "hasimoto" => hasimoto_suite(),
        _ => return Err(GllError::Domain(format!("unknown suite {name}; known: {}", SUITES.join(", ")))),
    })
}

/// Node 0 plus `m` log-spaced nodes on [lo, hi].
pub fn log_grid(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    let mut r = vec![0.0];
    let (a, b) = (lo.ln(), hi.ln());
    r.extend((0..m).map(|j| (a + (b - a) * j as f64 / (m - 1) as f64).exp()));
    r
}

/// Slopes log₂(e_k / e_{k+1}) of successive refinements.
pub fn orders(errs: &[f64]) -> Vec<f64> {
    errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<C> {
    let m = DMatrix::from_fn(n, n, |_, _| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    m.qr().q()
}

fn geom_suite() -> SuiteReport {
    let mut s = Suite::new("geom");
    let mut rng = ChaCha8Rng::seed_from_u64(11);

    let mut worst: f64 = 0.0;
    let mut tangency: f64 = 0.0;
    for n in 1..=3 {
        let p = FlowParams::new(n, 0.6, 0.8).unwrap();
        for _ in 0..20 {
            let v = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            for _ in 0..10 {
                let r = rng.gen_range(1e-3..10.0);
                let (u, ur, urr) = geom::harmonic_map_jet(v, r);
                let t = geom::tension(&u, &ur, &urr, r, n).unwrap();
                let g = geom::gll_rhs(&u, &ur, &urr, r, &p).unwrap();
                worst = worst.max(t.norm()).max(g.norm());
                let urr2 = urr + Vec3::new(rng.gen_range(-1.0..1.0), 0.3, -0.2);
                let g2 = geom::gll_rhs(&u, &ur, &urr2, r, &p).unwrap();
                tangency = tangency.max(g2.tangency_defect(&u) / g2.norm().max(1e-300));
            }
        }
    }
    s.le("harmonic maps are stationary", worst, 1e-10);
    s.le("rhs is tangent", tangency, 1e-12);

    let r = log_grid(1e-6, 1e4, 40_000);
    let prof = RadialProfile::from_fn(r, |x| {
        let (u, ur, _) = geom::harmonic_map_jet([1.0, 0.0], x);
        (u, ur)
    });
    if let Some(e) = s.guard("energy n=1", geom::energy(&prof, 1, 0.0, 1e4)) {
        s.le("energy of degree-one map is 4 pi", (e - 4.0 * PI).abs() / (4.0 * PI), 1e-3);
    }
    let trunc: Vec<f64> =
        [10.0, 20.0, 40.0, 80.0].iter().map(|&rr| geom::energy(&prof, 2, 0.0, rr).unwrap()).collect();
    let incr = trunc.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    s.push("n=2 truncated energy grows", incr > 1.0, incr, 1.0, format!("{trunc:?}"));

    let mut fs: f64 = 0.0;
    for n in 1..=3usize {
        for _ in 0..10 {
            let a = random_unitary(&mut rng, n);
            let mut at = DMatrix::<C>::identity(n + 1, n + 1);
            at.view_mut((1, 1), (n, n)).copy_from(&a);
            let pt = |rng: &mut ChaCha8Rng| {
                geom::CPPoint::new((0..=n).map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
                    .unwrap()
            };
            let (p, q) = (pt(&mut rng), pt(&mut rng));
            let map = |x: &geom::CPPoint| {
                let v = nalgebra::DVector::from_column_slice(x.coords());
                geom::CPPoint::new((&at * v).iter().copied().collect()).unwrap()
            };
            fs = fs.max((geom::fs_distance(&p, &q) - geom::fs_distance(&map(&p), &map(&q))).abs());
            let u = SpherePoint::new(0.3, -0.4, (1.0f64 - 0.25).sqrt()).unwrap();
            let z: Vec<C> = (0..n).map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let az: Vec<C> = (&a * nalgebra::DVector::from_column_slice(&z)).iter().copied().collect();
            let lhs = geom::embed_equivariant(&u, &az).unwrap();
            let rhs = map(&geom::embed_equivariant(&u, &z).unwrap());
            fs = fs.max(geom::fs_distance(&lhs, &rhs));
        }
    }
    s.le("unitary invariance of the Fubini-Study distance", fs, 1e-12);

    let p = FlowParams::new(2, 0.6, 0.8).unwrap();
    let mut chart: f64 = 0.0;
    let mut fd_err = Vec::new();
    for _ in 0..50 {
        let c = |rng: &mut ChaCha8Rng| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let (f, fr, frr) = (c(&mut rng), c(&mut rng), c(&mut rng));
        let r = rng.gen_range(0.1..3.0);
        let big_f = geom::stereo_rhs(f, fr, frr, r, &p).unwrap();
        let (u, ur, urr) = geom::stereo_lift_jet(f, fr, frr);
        let g = geom::gll_rhs(&u, &ur, &urr, r, &p).unwrap().vec();
        chart = chart.max((geom::stereo_lift_differential(f, big_f) - g).norm() / (1.0 + g.norm()));
    }
    let (f, fr, frr) = (C::new(0.3, -0.2), C::new(0.5, 0.1), C::new(-0.4, 0.7));
    let big_f = geom::stereo_rhs(f, fr, frr, 0.7, &p).unwrap();
    let (u, ur, urr) = geom::stereo_lift_jet(f, fr, frr);
    let g = geom::gll_rhs(&u, &ur, &urr, 0.7, &p).unwrap().vec();
    for eps in [1e-2, 1e-3] {
        let d = (geom::stereo_lift(f + big_f * eps).vec() - geom::stereo_lift(f - big_f * eps).vec()) / (2.0 * eps);
        fd_err.push((d - g).norm());
    }
    s.le("stereographic and sphere right-hand sides agree", chart, 1e-12);
    s.ge("chart agreement is second order in the perturbation", orders(&fd_err)[0] / 3.3219, 1.8);

    let v = [0.7, -0.3];
    let mut errs = Vec::new();
    let z = [C::new(0.3, -0.2), C::new(0.4, -0.15)];
    let r = (z[0].norm_sqr() + z[1].norm_sqr()).sqrt();
    let (u, ur, _) = geom::harmonic_map_jet(v, r);
    let dens = 2.0 * geom::energy_density(&u, &ur, r, 2).unwrap();
    for h in [1e-2, 1e-3, 1e-4] {
        let fd = geom::hopf_density_fd(|x| geom::harmonic_map(v, x), &z, h).unwrap();
        errs.push((4.0 * fd - dens).abs());
    }
    let ord = orders(&errs);
    s.push(
        "energy density matches the pulled-back metric",
        errs[2] < 1e-7 && ord.iter().all(|o| *o / 3.3219 > 1.8),
        errs[2],
        1e-7,
        format!("errors {errs:?}"),
    );
    s.truth(
        "south pole is refused by the chart",
        matches!(geom::stereo_project(&SpherePoint::south()), Err(GllError::PoleSingularity)),
        String::new(),
    );
    s.finish()
}

fn hardy_family(rng: &mut ChaCha8Rng, r: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let a = rng.gen_range(0.2..1.0);
    let b = rng.gen_range(-2.0..2.0);
    let w = rng.gen_range(1.0..6.0);
    let f: Vec<f64> = r.iter().map(|&x| (1.0 + b * x) * (-(x / a).powi(2)).exp() * (1.0 + (w * x).sin().powi(2))).collect();
    let fr: Vec<f64> = r
        .iter()
        .map(|&x| {
            let e = (-(x / a).powi(2)).exp();
            let s2 = 1.0 + (w * x).sin().powi(2);
            let ds2 = w * (2.0 * w * x).sin();
            b * e * s2 + (1.0 + b * x) * e * (-2.0 * x / (a * a)) * s2 + (1.0 + b * x) * e * ds2
        })
        .collect();
    (f, fr)
}

fn singular_suite() -> SuiteReport {
    let mut s = Suite::new("singular");
    let s2 = 0.5f64.sqrt();
    for (n, a, b) in [(2u32, 1.0, 0.0), (2, 0.0, 1.0), (3, 1.0, 0.0), (2, s2, s2)] {
        let p = FlowParams::new(n, a, b).unwrap();
        let ivp = selfsim::stereo_ivp([1.0, 0.0], p).unwrap();
        let opts = IvpOptions { r0: Some(1e-5), ..Default::default() };
        if let Some(g) = s.guard("series start", singular_ode::integrate_with(&ivp, 1.0, &opts)) {
            let fpp: Vec<f64> = [1e-2, 1e-3, 1e-4]
                .iter()
                .map(|&r| {
                    let (f, fp) = g.sample(r);
                    ivp.second_derivative(r, f, fp).norm()
                })
                .collect();
            s.push(
                &format!("f'' -> 0 at the origin ({n},{a:.3},{b:.3})"),
                fpp[0] > fpp[1] && fpp[1] > fpp[2],
                fpp[2],
                fpp[1],
                format!("{fpp:?}"),
            );
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let r = log_grid(1e-6, 12.0, 20_000);
    for (d, p, k) in [(4u32, 2.0, 0.0), (6, 2.0, 0.0), (4, 1.5, 0.0)] {
        let mut worst: f64 = 0.0;
        let mut bound = 0.0;
        for _ in 0..50 {
            let (f, fr) = hardy_family(&mut rng, &r);
            let rep = singular_ode::hardy_check(&r, &f, &fr, d, p, k).unwrap();
            worst = worst.max(rep.ratio);
            bound = rep.bound;
        }
        s.le(&format!("Hardy ratio within bound d={d} p={p} k={k}"), worst, bound * (1.0 + 5e-3));
    }
    s.truth(
        "Hardy exponents outside the admissible range are refused",
        singular_ode::hardy_check(&r, &r, &r, 4, 2.0, 1.0).is_err(),
        "p = d/(k+1) for (4,2,1)".into(),
    );

    let p = FlowParams::heat(2);
    let a = selfsim::solve_profile([1.0, 0.0], p, 20.0, 1e-10);
    let b = selfsim::solve_profile([1.0, 0.0], p, 20.0, 1e-10);
    let same = match (&a, &b) {
        (Ok(x), Ok(y)) => x.r == y.r && x.psi == y.psi && x.psi_r == y.psi_r,
        _ => false,
    };
    s.truth("adaptive integration is bit-reproducible", same, String::new());
    let ivp = selfsim::stereo_ivp([1.0, 0.0], p).unwrap();
    s.truth(
        "series start refuses large r0",
        singular_ode::series_start(&ivp, 0.05).is_err(),
        String::new(),
    );
    s.finish()
}

fn selfsim_suite() -> SuiteReport {
    let mut s = Suite::new("selfsim");
    let s2 = 0.5f64.sqrt();
    for (n, a, b) in [(2u32, 1.0, 0.0), (2, 0.0, 1.0), (3, 1.0, 0.0), (2, s2, s2)] {
        let tag = format!("({n},{a:.3},{b:.3})");
        let p = FlowParams::new(n, a, b).unwrap();
        let Some(prof) = s.guard(&format!("solve {tag}"), selfsim::solve_profile([1.0, 0.0], p, 200.0, 1e-10))
        else {
            continue;
        };
        s.le(&format!("A <= 4n {tag}"), prof.max_a(), 4.0 * n as f64);
        s.le(&format!("integrated identity {tag}"), selfsim::apriori_identity_residual(&prof).max_residual, 1e-6);
        if let Some(t) = s.guard(&format!("tail {tag}"), selfsim::tail_limit(&prof)) {
            s.le(&format!("tail rate {tag}"), t.half_gap, t.half_bound);
        }
        let away = prof.psi.iter().skip(1).map(|u| (u.vec() - geom::e3()).norm()).fold(f64::INFINITY, f64::min);
        s.push(&format!("profile leaves e3 {tag}"), away > 0.0, away, 0.0, String::new());
        if a > 0.0 {
            if let Some(fit) = s.guard("decay fit", selfsim::decay_exponent(&prof, 10.0, 40.0)) {
                s.le(&format!("decay slope {tag}"), fit.slope, -2.8);
            }
        } else {
            let w: Vec<f64> = [10.0, 20.0, 40.0].iter().map(|&r| r * prof.sample(r).1.norm()).collect();
            s.push(&format!("r|psi_r| decreasing {tag}"), w[0] > w[1] && w[1] > w[2], w[2], w[1], format!("{w:?}"));
        }
    }

    let p = FlowParams::new(2, 0.6, 0.8).unwrap();
    let v = [0.8, 0.3];
    let base = selfsim::solve_profile(v, p, 30.0, 1e-11).unwrap();
    let mut rot_exact: f64 = 0.0;
    let mut rot_generic: f64 = 0.0;
    for (theta, exact) in [(0.5 * PI, true), (PI, true), (0.7, false)] {
        let (sn, cs) = if exact { (theta.sin().round(), theta.cos().round()) } else { theta.sin_cos() };
        let rv = [cs * v[0] - sn * v[1], sn * v[0] + cs * v[1]];
        let prof = selfsim::solve_profile(rv, p, 30.0, 1e-11).unwrap();
        for &r in &[0.5, 1.0, 3.0, 10.0, 30.0] {
            let a = base.sample(r).0.vec();
            let b = prof.sample(r).0.vec();
            let rotated = Vec3::new(cs * a.x - sn * a.y, sn * a.x + cs * a.y, a.z);
            let d = (rotated - b).norm();
            if exact {
                rot_exact = rot_exact.max(d);
            } else {
                rot_generic = rot_generic.max(d);
            }
        }
    }
    s.le("rotation equivariance (quarter turns)", rot_exact, 1e-10);
    s.le("rotation equivariance (generic angle)", rot_generic, 1e-8);

    let st = selfsim::solve_profile_stereo(v, p, 5.0, 1e-11, singular_ode::Tableau::Dp54).unwrap();
    let chart = [0.5, 1.0, 2.0, 5.0]
        .iter()
        .map(|&r| (geom::stereo_lift(st.sample(r).0).vec() - base.sample(r).0.vec()).norm())
        .fold(0.0, f64::max);
    s.le("sphere and stereographic solves agree", chart, 1e-8);

    let rows = selfsim::limit_map_continuity(
        &(0..=10).map(|k| [0.5 + 0.05 * k as f64, 0.0]).collect::<Vec<_>>(),
        FlowParams::heat(2),
        100.0,
        1e-10,
    );
    if let Some(rows) = s.guard("limit map", rows) {
        let m = selfsim::modulus_of_continuity(&rows);
        s.push("limit map is Lipschitz on samples", m.is_finite() && m < 50.0, m, 50.0, String::new());
    }
    s.finish()
}

fn realheat_suite() -> SuiteReport {
    let mut s = Suite::new("realheat");
    let rep = real_flow::classify_uniqueness(2).unwrap();
    s.truth("n=2 is borderline", rep.verdict == Verdict::Borderline, format!("{:?}", rep.verdict));
    s.truth("eta'(pi) = -1 exactly for n=2", rep.eta_prime_at_pi_exact == "-1", rep.eta_prime_at_pi_exact.clone());
    let e2 = EtaFn::new(2).unwrap();
    let local_max = e2.eta_prime(PI + 0.1) < e2.eta_prime(PI) && e2.eta_prime(PI - 0.1) < e2.eta_prime(PI);
    s.truth("pi is a local maximum of eta' for n=2", local_max, String::new());
    let mut bad = Vec::new();
    let mut worst_min: f64 = 0.0;
    for n in 3..=50 {
        let r = real_flow::classify_uniqueness(n).unwrap();
        if r.verdict != Verdict::Unique {
            bad.push(n);
        }
        worst_min = worst_min.max((r.min_eta_prime + (2.0 * n as f64 - 3.0)).abs());
    }
    s.truth("unique for 3 <= n <= 50", bad.is_empty(), format!("{bad:?}"));
    s.le("min eta' = -(2n-3)", worst_min, 1e-12);
    let mut stat: f64 = 0.0;
    for n in 2..=8 {
        for a in [0.5, 1.0, 2.0] {
            stat = stat.max(real_flow::stationary_residual(a, &[0.1, 1.0, 10.0], n).unwrap());
        }
    }
    s.le("2 arctan(ar) is stationary for every n", stat, 1e-10);
    if let Some(c) = s.guard("comparison", real_flow::comparison_suite(&[0.25, 0.5, 1.0, 2.0, 4.5], 3, 30.0, 1e-10)) {
        s.push("orderings of self-similar profiles (n=3)", c.passed(), c.violations.len() as f64, 0.0, String::new());
    }
    let sat: Vec<f64> = [1e-2, 1e-4, 1e-6, 1e-8].iter().map(|&e| real_flow::hardy_saturation(e, 64)).collect();
    let decreasing = sat.windows(2).all(|w| w[1] < w[0]) && sat.iter().all(|x| *x > 1.0);
    s.truth("f_eps saturates the Hardy inequality", decreasing, format!("{sat:?}"));

    let mut errs = Vec::new();
    for h in [0.1, 0.05, 0.025] {
        let g = RadialGrid::uniform(h, 10.0).unwrap();
        let f = pde::great_circle_bump(&g, 1.0, 1.0, 0.3).unwrap();
        let cfg = EvolveConfig { save_dt: Some(0.1 * h), ..Default::default() };
        let tr = pde::evolve(&f, FlowParams::heat(2), 0.05, &cfg).unwrap();
        let res = pde::real_reduction_residual(&tr, [0.3f64.cos(), 0.3f64.sin()]).unwrap();
        errs.push(res.iter().map(|x| x.l2).fold(0.0, f64::max));
    }
    let ord = orders(&errs);
    s.ge("great-circle reduction converges", ord.iter().cloned().fold(f64::INFINITY, f64::min), 1.8);
    s.finish()
}

fn pde_suite() -> SuiteReport {
    let mut s = Suite::new("pde");
    let p_heat = FlowParams::heat(2);
    let g = RadialGrid::uniform(0.1, 5.0).unwrap();
    let c = pde::RadialField::from_fn(&g, 0.0, |_| SpherePoint::north()).unwrap();
    let cfg = EvolveConfig { save_dt: Some(0.05), ..Default::default() };
    let tr = pde::evolve(&c, FlowParams::new(2, 0.6, 0.8).unwrap(), 0.2, &cfg).unwrap();
    s.le("constant data stays constant", pde::drift_from_initial(&tr), 0.0);

    let mut res = Vec::new();
    let mut dual = Vec::new();
    let mut pinned = true;
    let mut energy_up: f64 = f64::NEG_INFINITY;
    let mut drift: f64 = 0.0;
    for h in [0.1, 0.05, 0.025] {
        let g = RadialGrid::uniform(h, 10.0).unwrap();
        let f = pde::great_circle_bump(&g, 1.0, 1.0, 0.0).unwrap();
        let cfg = EvolveConfig { save_dt: Some(0.1 * h), ..Default::default() };
        let tr = pde::evolve(&f, p_heat, 0.1, &cfg).unwrap();
        res.push(pde::residual(&tr, &p_heat).unwrap().iter().map(|x| x.l2).fold(0.0, f64::max));
        pinned &= tr.frames.iter().all(|fr| fr.u[0] == SpherePoint::north());
        drift = drift.max(tr.max_drift);
        let e: Vec<f64> = tr.frames.iter().map(|fr| fr.energy(2).unwrap()).collect();
        energy_up = energy_up.max(e.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max));
        let st = pde::evolve_stereo(&f, p_heat, 0.1, &cfg).unwrap();
        dual.push(
            st.frames.last().unwrap().u.iter().zip(&tr.frames.last().unwrap().u)
                .map(|(a, b)| (a.vec() - b.vec()).norm())
                .fold(0.0, f64::max),
        );
    }
    s.ge("residual is second order", orders(&res).iter().cloned().fold(f64::INFINITY, f64::min), 1.8);
    s.ge("sphere and stereographic evolutions converge together", orders(&dual).iter().cloned().fold(f64::INFINITY, f64::min), 1.8);
    s.truth("origin stays pinned at e3", pinned, String::new());
    s.le("norm drift before projection", drift, pde::DRIFT_ABORT);
    s.le("heat-flow energy is non-increasing", energy_up, 1e-6);

    let g = RadialGrid::uniform(0.05, 10.0).unwrap();
    let f = pde::great_circle_bump(&g, 1.0, 1.0, 0.0).unwrap();
    let cfg = EvolveConfig { save_dt: Some(0.01), ..Default::default() };
    let heat = pde::evolve(&f, p_heat, 0.1, &cfg).unwrap();
    s.le("heat flow keeps the great circle", pde::great_circle_deviation(&heat, [1.0, 0.0]), 1e-8);
    let sch = pde::evolve(&f, FlowParams::schrodinger(2), 0.1, &cfg).unwrap();
    s.ge("Schrodinger flow leaves the great circle", pde::great_circle_deviation(&sch, [1.0, 0.0]), 1e-3);

    let mut hd = Vec::new();
    for h in [0.2, 0.1] {
        let g = RadialGrid::uniform(h, 20.0).unwrap();
        let f = pde::harmonic_field(&g, [1.0, 0.0]).unwrap();
        let cfg = EvolveConfig { save_dt: Some(0.5), ..Default::default() };
        hd.push(pde::drift_from_initial(&pde::evolve(&f, FlowParams::new(2, 0.6, 0.8).unwrap(), 1.0, &cfg).unwrap()));
    }
    s.ge("harmonic map drift is second order", orders(&hd)[0], 1.8);

    let prof = selfsim::solve_profile([1.0, 0.0], p_heat, 100.0, 1e-10).unwrap();
    let c1 = pde::selfsim_consistency(&prof, 1.0, &p_heat, pde::DerivativeSource::Ode).unwrap();
    let c4 = pde::selfsim_consistency(&prof, 4.0, &p_heat, pde::DerivativeSource::Ode).unwrap();
    s.le("self-similar substitution", c1, 1e-6);
    s.le("substitution check scales like 1/t", (4.0 * c4 - c1).abs(), 1e-6 * c1.max(1e-10));
    s.finish()
}

fn hasimoto_suite() -> SuiteReport {
    let mut s = Suite::new("hasimoto");
    let seed = TangentVec::new(1.0, 0.0, 0.0);
    let g = RadialGrid::uniform(0.005, 8.0).unwrap();
    let harm = pde::harmonic_field(&g, [1.0, 0.0]).unwrap();
    let fr = hasimoto::transport_frame(&harm, seed).unwrap();
    s.le("frame orthonormal and tangent", fr.defect(&harm), hasimoto::FRAME_TOL);
    let q = hasimoto::compute_q(&harm, &fr, &FlowParams::heat(2)).unwrap();
    s.le("|q| = |u_r|", q.isometry_defect(), hasimoto::FRAME_TOL);
    let qh = q.r.iter().zip(&q.q).map(|(r, z)| (z.norm() - 2.0 / (1.0 + r * r)).abs()).fold(0.0, f64::max);
    s.le("harmonic map |q| = 2/(1+r^2)", qh, 1e-6);
    let zero_ut = vec![Vec3::zeros(); harm.u.len()];
    let ip = hasimoto::ip_residual(&harm, &zero_ut, &fr, &q, &FlowParams::heat(2)).unwrap();
    s.le("stationary bracket vanishes", ip.linf, 1e-6);
    s.le("P e3 coordinates", hasimoto::pe3_coordinate_defect(&harm, &fr, &q), 1e-8);

    let b = pde::great_circle_bump(&g, 1.0, 1.0, 0.0).unwrap();
    let frb = hasimoto::transport_frame(&b, seed).unwrap();
    let qb = hasimoto::compute_q(&b, &frb, &FlowParams::heat(2)).unwrap();
    s.le("great-circle q is real", qb.q.iter().map(|z| z.im.abs()).fold(0.0, f64::max), 1e-10);

    let twist = |g: &RadialGrid| {
        pde::RadialField::from_fn(g, 0.0, |r| {
            let a = pde::bump_angle(1.0, 1.0, r);
            let phi = 0.7 * r * r;
            SpherePoint::normalize(Vec3::new(a.sin() * phi.cos(), a.sin() * phi.sin(), a.cos())).unwrap()
        })
        .unwrap()
    };
    let twisted = twist(&g);
    let p = FlowParams::new(2, 0.6, 0.8).unwrap();
    let f0 = hasimoto::transport_frame(&twisted, seed).unwrap();
    let q0 = hasimoto::compute_q(&twisted, &f0, &p).unwrap();
    let theta = 0.9;
    let q1 = hasimoto::compute_q(&twisted, &f0.rotated(theta), &p).unwrap();
    let rot = C::from_polar(1.0, -theta);
    let cov = q0.q.iter().zip(&q1.q).map(|(a, b)| (a * rot - b).norm()).fold(0.0, f64::max)
        + q0.ag.iter().zip(&q1.ag).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    s.le("gauge covariance", cov, 1e-10);
    s.le("frame of twisted data", f0.defect(&twisted), hasimoto::FRAME_TOL);
    let (pe, gd): (Vec<f64>, Vec<f64>) = [0.02, 0.01, 0.005]
        .iter()
        .map(|&h| {
            let f = twist(&RadialGrid::uniform(h, 8.0).unwrap());
            let fr = hasimoto::transport_frame(&f, seed).unwrap();
            let q = hasimoto::compute_q(&f, &fr, &p).unwrap();
            (hasimoto::pe3_coordinate_defect(&f, &fr, &q), hasimoto::gauge_derivative_check(&q, &p))
        })
        .unzip();
    s.ge("P e3 coordinates converge (twisted)", orders(&pe).iter().cloned().fold(f64::INFINITY, f64::min), 1.8);
    s.ge("gauge potential derivative converges (twisted)", orders(&gd).iter().cloned().fold(f64::INFINITY, f64::min), 1.8);

    for (a, bb) in [(0.0, 1.0), (1.0, 0.0)] {
        let p = FlowParams::new(2, a, bb).unwrap();
        let mut eip = Vec::new();
        let mut eq = Vec::new();
        for h in [0.05, 0.025, 0.0125] {
            let g = RadialGrid::uniform(h, 10.0).unwrap();
            let f = pde::great_circle_bump(&g, 0.5, 1.0, 0.0).unwrap();
            let cfg = EvolveConfig { save_dt: Some(0.1 * h), ..Default::default() };
            let tr = pde::evolve(&f, p, 0.05, &cfg).unwrap();
            eip.push(hasimoto::ip_residual_trajectory(&tr, seed).unwrap().iter().map(|x| x.l2).fold(0.0, f64::max));
            eq.push(hasimoto::qpde_residual(&tr, seed).unwrap().iter().map(|x| x.l2).fold(0.0, f64::max));
        }
        let tag = format!("(alpha={a}, beta={bb})");
        s.ge(&format!("frame equation for u_t converges {tag}"), orders(&eip).iter().cloned().fold(f64::INFINITY, f64::min), 1.8);
        s.ge(&format!("q equation converges {tag}"), orders(&eq).iter().cloned().fold(f64::INFINITY, f64::min), 1.8);
    }

    for n in 1..=4 {
        let e = hasimoto::eigenfunction_check(n, 100, 3).unwrap();
        s.le(&format!("eigenvalue -(2n-1), n={n}"), e.max_eigen_defect, 1e-10);
        s.le(&format!("radial Laplacian of q(r) a, n={n}"), e.lapw_defect, 1e-8);
    }
    let t = hasimoto::strichartz_exponents(2.0).unwrap();
    s.truth("r = 12/5 at p = 2", t.r == 2.4 && t.s(1, 1) == Some(t.r), format!("{}", t.r));
    s.truth("s(3,1) = 2 at p = 1", hasimoto::strichartz_exponents(1.0).unwrap().s(3, 1) == Some(2.0), String::new());
    s.truth("Holder compatibility", t.holder_ok, String::new());
    s.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_is_an_error() {
        assert!(run_suite("nope").is_err());
    }

    #[test]
    fn orders_of_halving_errors() {
        assert_eq!(orders(&[4.0, 1.0, 0.25]), vec![2.0, 2.0]);
    }
}
