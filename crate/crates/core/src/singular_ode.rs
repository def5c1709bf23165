//! Radial ODEs singular at the origin,
//!
//!   f'' = A(f', f, r) − k (f'/r − f/r²) + B(f)/r²,   f(0) = 0, f'(0) = α,
//!
//! started from an odd power series and continued by an embedded
//! Runge-Kutta pair with dense Hermite output. Also hosts the radial Hardy
//! ratio used by the real-flow module.

use num_complex::Complex64 as C;
use serde::Serialize;

use crate::GllError;

pub const DEFAULT_R0: f64 = 1e-4;
pub const DEFAULT_REL_TOL: f64 = 1e-10;
pub const ERROR_FLOOR: f64 = 1e-14;
const MAX_SERIES_R0: f64 = 1e-2;

/// Embedded pair used by the adaptive stepper.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Tableau {
    /// Dormand-Prince 5(4).
    Dp54,
    /// Bogacki-Shampine 3(2).
    Bs32,
}

struct Butcher {
    c: &'static [f64],
    a: &'static [&'static [f64]],
    b: &'static [f64],
    e: &'static [f64],
    order: f64,
}

const DP54: Butcher = Butcher {
    c: &[0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0],
    a: &[
        &[],
        &[0.2],
        &[3.0 / 40.0, 9.0 / 40.0],
        &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
        &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
        &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
        &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ],
    b: &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0],
    // b − b̂ with b̂ the fourth-order weights.
    e: &[
        35.0 / 384.0 - 5179.0 / 57600.0,
        0.0,
        500.0 / 1113.0 - 7571.0 / 16695.0,
        125.0 / 192.0 - 393.0 / 640.0,
        -2187.0 / 6784.0 + 92097.0 / 339200.0,
        11.0 / 84.0 - 187.0 / 2100.0,
        -1.0 / 40.0,
    ],
    order: 5.0,
};

const BS32: Butcher = Butcher {
    c: &[0.0, 0.5, 0.75, 1.0],
    a: &[&[], &[0.5], &[0.0, 0.75], &[2.0 / 9.0, 1.0 / 3.0, 4.0 / 9.0]],
    b: &[2.0 / 9.0, 1.0 / 3.0, 4.0 / 9.0, 0.0],
    e: &[2.0 / 9.0 - 7.0 / 24.0, 1.0 / 3.0 - 0.25, 4.0 / 9.0 - 1.0 / 3.0, -0.125],
    order: 3.0,
};

#[derive(Clone, Debug, Serialize)]
pub struct AdaptiveOptions {
    pub rel_tol: f64,
    pub abs_floor: f64,
    pub h0: Option<f64>,
    pub max_steps: usize,
    pub tableau: Tableau,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions {
            rel_tol: DEFAULT_REL_TOL,
            abs_floor: ERROR_FLOOR,
            h0: None,
            max_steps: 2_000_000,
            tableau: Tableau::Dp54,
        }
    }
}

/// Accepted nodes with state and derivative, for Hermite dense output.
#[derive(Clone, Debug, Default)]
pub struct Solution {
    pub t: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    pub dy: Vec<Vec<f64>>,
    pub rejected: usize,
}

impl Solution {
    /// Cubic Hermite interpolation; clamps outside the node range.
    pub fn sample(&self, t: f64) -> Vec<f64> {
        let n = self.t.len();
        if t <= self.t[0] {
            return self.y[0].clone();
        }
        if t >= self.t[n - 1] {
            return self.y[n - 1].clone();
        }
        let j = self.t.partition_point(|&x| x <= t) - 1;
        hermite(
            self.t[j],
            self.t[j + 1],
            &self.y[j],
            &self.y[j + 1],
            &self.dy[j],
            &self.dy[j + 1],
            t,
        )
    }
}

pub(crate) fn hermite(
    t0: f64,
    t1: f64,
    y0: &[f64],
    y1: &[f64],
    d0: &[f64],
    d1: &[f64],
    t: f64,
) -> Vec<f64> {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    (0..y0.len())
        .map(|i| h00 * y0[i] + h10 * h * d0[i] + h01 * y1[i] + h11 * h * d1[i])
        .collect()
}

/// Adaptive embedded Runge-Kutta integration from `t0` to `t_end`.
///
/// `project` runs after every accepted step and may modify the state; an
/// error from it aborts the integration.
pub fn integrate<F, P>(
    t0: f64,
    y0: Vec<f64>,
    t_end: f64,
    rhs: F,
    opts: &AdaptiveOptions,
    mut project: P,
) -> Result<Solution, GllError>
where
    F: Fn(f64, &[f64], &mut [f64]),
    P: FnMut(f64, &mut [f64]) -> Result<(), GllError>,
{
    let tab = match opts.tableau {
        Tableau::Dp54 => &DP54,
        Tableau::Bs32 => &BS32,
    };
    let dim = y0.len();
    let stages = tab.c.len();
    let mut k = vec![vec![0.0; dim]; stages];
    let mut tmp = vec![0.0; dim];
    let mut y = y0;
    let mut t = t0;
    let mut f0 = vec![0.0; dim];
    rhs(t, &y, &mut f0);
    let mut sol = Solution { t: vec![t], y: vec![y.clone()], dy: vec![f0.clone()], rejected: 0 };
    let span = t_end - t0;
    if !(span > 0.0) {
        return Ok(sol);
    }
    let mut h = opts.h0.unwrap_or_else(|| (span * 1e-3).min(t0.abs().max(1e-12)));
    let expo = 1.0 / tab.order;
    let mut steps = 0usize;
    while t < t_end {
        if steps >= opts.max_steps {
            return Err(GllError::Stiffness {
                at: t,
                reason: format!("step budget {} exhausted", opts.max_steps),
                last_state: y,
            });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(GllError::Stiffness {
                at: t,
                reason: format!("step size underflow h = {h:e}"),
                last_state: y,
            });
        }
        k[0].copy_from_slice(&f0);
        for s in 1..stages {
            for i in 0..dim {
                let mut acc = y[i];
                for (m, a) in tab.a[s].iter().enumerate() {
                    acc += h * a * k[m][i];
                }
                tmp[i] = acc;
            }
            rhs(t + tab.c[s] * h, &tmp, &mut k[s]);
        }
        let mut ynew = y.clone();
        let mut err: f64 = 0.0;
        let mut finite = true;
        for i in 0..dim {
            let mut inc = 0.0;
            let mut e = 0.0;
            for s in 0..stages {
                inc += tab.b[s] * k[s][i];
                e += tab.e[s] * k[s][i];
            }
            ynew[i] += h * inc;
            let scale = opts.abs_floor + opts.rel_tol * y[i].abs().max(ynew[i].abs());
            err = err.max((h * e).abs() / scale);
            finite &= ynew[i].is_finite();
        }
        if !finite || !err.is_finite() {
            sol.rejected += 1;
            h *= 0.2;
            continue;
        }
        if err <= 1.0 {
            t = if last { t_end } else { t + h };
            y = ynew;
            project(t, &mut y)?;
            rhs(t, &y, &mut f0);
            sol.t.push(t);
            sol.y.push(y.clone());
            sol.dy.push(f0.clone());
            steps += 1;
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-expo)).clamp(0.2, 5.0) };
            h *= fac;
        } else {
            sol.rejected += 1;
            h *= (0.9 * err.powf(-expo)).clamp(0.1, 0.9);
        }
    }
    Ok(sol)
}

/// Classical fourth-order Runge-Kutta with a fixed number of steps.
pub fn rk4_fixed<F>(t0: f64, y0: Vec<f64>, t_end: f64, steps: usize, rhs: F) -> Solution
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let dim = y0.len();
    let h = (t_end - t0) / steps as f64;
    let mut y = y0;
    let (mut k1, mut k2, mut k3, mut k4) =
        (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
    let mut tmp = vec![0.0; dim];
    let mut sol = Solution::default();
    for s in 0..steps {
        let t = t0 + s as f64 * h;
        rhs(t, &y, &mut k1);
        if s == 0 {
            sol.t.push(t);
            sol.y.push(y.clone());
            sol.dy.push(k1.clone());
        }
        for i in 0..dim {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        rhs(t + 0.5 * h, &tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        rhs(t + 0.5 * h, &tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = y[i] + h * k3[i];
        }
        rhs(t + h, &tmp, &mut k4);
        for i in 0..dim {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let tn = t0 + (s + 1) as f64 * h;
        rhs(tn, &y, &mut k1);
        sol.t.push(tn);
        sol.y.push(y.clone());
        sol.dy.push(k1.clone());
    }
    sol
}

pub type SmoothPart<'a> = Box<dyn Fn(C, C, f64) -> C + Send + Sync + 'a>;
pub type CubicPart<'a> = Box<dyn Fn(C) -> C + Send + Sync + 'a>;

/// f'' = A(f', f, r) − k (f'/r − f/r²) + B(f)/r² with f(0)=0, f'(0)=α₀.
pub struct SingularIvp<'a> {
    pub k: f64,
    pub a: SmoothPart<'a>,
    pub b: CubicPart<'a>,
    pub alpha0: C,
}

impl<'a> SingularIvp<'a> {
    /// Builds the problem and checks A(α₀,0,0) = 0 and cubic vanishing of B.
    pub fn new(k: f64, a: SmoothPart<'a>, b: CubicPart<'a>, alpha0: C) -> Result<Self, GllError> {
        if !(k > 0.0) {
            return Err(GllError::Domain(format!("singular strength k must be positive, got {k}")));
        }
        let ivp = SingularIvp { k, a, b, alpha0 };
        let a00 = (ivp.a)(alpha0, C::new(0.0, 0.0), 0.0);
        if a00.norm() > 1e-12 {
            return Err(GllError::Domain(format!("A(alpha0, 0, 0) = {a00} is not zero")));
        }
        let ratio = |rho: f64| {
            (0..8)
                .map(|j| {
                    let z = C::from_polar(rho, j as f64 * std::f64::consts::FRAC_PI_4);
                    (ivp.b)(z).norm() / rho.powi(3)
                })
                .fold(0.0, f64::max)
        };
        let (m3, m4) = (ratio(1e-3), ratio(1e-4));
        if !(m4 <= 10.0 * m3 + 1.0) {
            return Err(GllError::Domain(format!(
                "B does not vanish cubically: |B|/|z|^3 = {m3:e} at 1e-3, {m4:e} at 1e-4"
            )));
        }
        Ok(ivp)
    }

    pub fn second_derivative(&self, r: f64, f: C, fp: C) -> C {
        (self.a)(fp, f, r) - self.k * (fp / r - f / (r * r)) + (self.b)(f) / (r * r)
    }

    fn rhs(&self, r: f64, y: &[f64], dy: &mut [f64]) {
        let f = C::new(y[0], y[1]);
        let fp = C::new(y[2], y[3]);
        let fpp = self.second_derivative(r, f, fp);
        dy[0] = fp.re;
        dy[1] = fp.im;
        dy[2] = fpp.re;
        dy[3] = fpp.im;
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SeriesStart {
    pub r0: f64,
    #[serde(serialize_with = "ser_c")]
    pub value: C,
    #[serde(serialize_with = "ser_c")]
    pub deriv: C,
    /// Coefficient c of f ≈ αr + c r³.
    #[serde(serialize_with = "ser_c")]
    pub cubic: C,
    /// |c(r0) − c(r0/2)|: the Richardson estimate of the truncation defect.
    pub richardson: f64,
}

fn ser_c<S: serde::Serializer>(c: &C, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&c.re)?;
    t.serialize_element(&c.im)?;
    t.end()
}

fn cubic_coefficient(ivp: &SingularIvp, h: f64) -> C {
    let al = ivp.alpha0;
    // One fixed-point pass picks up the O(h²) shift of f' in A.
    let mut c = C::new(0.0, 0.0);
    for _ in 0..2 {
        let a1 = (ivp.a)(al + 3.0 * c * h * h, al * h + c * h * h * h, h) / h;
        let b = (ivp.b)(al * h) / (h * h * h);
        c = (a1 + b) / (6.0 + 2.0 * ivp.k);
    }
    c
}

/// Odd series start f(r0) = α r0 + c r0³, f'(r0) = α + 3 c r0².
pub fn series_start(ivp: &SingularIvp, r0: f64) -> Result<SeriesStart, GllError> {
    if !(r0 > 0.0) || r0 > MAX_SERIES_R0 {
        return Err(GllError::Domain(format!(
            "series start radius {r0:e} outside (0, {MAX_SERIES_R0:e}]"
        )));
    }
    let zero = C::new(0.0, 0.0);
    if ivp.alpha0 == zero {
        return Ok(SeriesStart { r0, value: zero, deriv: zero, cubic: zero, richardson: 0.0 });
    }
    let c = cubic_coefficient(ivp, r0);
    let c_half = cubic_coefficient(ivp, 0.5 * r0);
    let al = ivp.alpha0;
    Ok(SeriesStart {
        r0,
        value: al * r0 + c * r0 * r0 * r0,
        deriv: al + 3.0 * c * r0 * r0,
        cubic: c,
        richardson: (c - c_half).norm(),
    })
}

/// Nodes r (first node r0 > 0) with values f and derivatives f'.
#[derive(Clone, Debug, Serialize)]
pub struct ProfileGrid {
    pub r: Vec<f64>,
    pub f: Vec<C>,
    pub fp: Vec<C>,
    pub fpp: Vec<C>,
}

impl ProfileGrid {
    fn from_solution(sol: &Solution) -> Self {
        let mut g = ProfileGrid { r: vec![], f: vec![], fp: vec![], fpp: vec![] };
        for ((t, y), dy) in sol.t.iter().zip(&sol.y).zip(&sol.dy) {
            g.r.push(*t);
            g.f.push(C::new(y[0], y[1]));
            g.fp.push(C::new(y[2], y[3]));
            g.fpp.push(C::new(dy[2], dy[3]));
        }
        g
    }

    /// Hermite interpolation of (f, f') at `r`.
    pub fn sample(&self, r: f64) -> (C, C) {
        let n = self.r.len();
        let j = if r <= self.r[0] {
            0
        } else if r >= self.r[n - 1] {
            n - 2
        } else {
            self.r.partition_point(|&x| x <= r) - 1
        };
        if n < 2 {
            return (self.f[0], self.fp[0]);
        }
        let pack = |i: usize| {
            (
                [self.f[i].re, self.f[i].im, self.fp[i].re, self.fp[i].im],
                [self.fp[i].re, self.fp[i].im, self.fpp[i].re, self.fpp[i].im],
            )
        };
        let (y0, d0) = pack(j);
        let (y1, d1) = pack(j + 1);
        let rr = r.clamp(self.r[0], self.r[n - 1]);
        let v = hermite(self.r[j], self.r[j + 1], &y0, &y1, &d0, &d1, rr);
        (C::new(v[0], v[1]), C::new(v[2], v[3]))
    }

    pub fn csv_rows(&self) -> Vec<Vec<f64>> {
        (0..self.r.len())
            .map(|j| vec![self.r[j], self.f[j].re, self.f[j].im, self.fp[j].re, self.fp[j].im])
            .collect()
    }

    pub const CSV_HEADER: [&'static str; 5] = ["r", "re_f", "im_f", "re_fp", "im_fp"];
}

#[derive(Clone, Debug, Serialize)]
pub struct IvpOptions {
    pub r0: Option<f64>,
    pub adaptive: AdaptiveOptions,
}

impl Default for IvpOptions {
    fn default() -> Self {
        IvpOptions { r0: None, adaptive: AdaptiveOptions::default() }
    }
}

/// Start radius used when none is given: the series is accurate once |α| r0 is small.
pub fn default_r0(alpha0: C) -> f64 {
    DEFAULT_R0 / alpha0.norm().max(1.0)
}

pub fn integrate_adaptive(
    ivp: &SingularIvp,
    r_max: f64,
    rel_tol: f64,
) -> Result<ProfileGrid, GllError> {
    let mut opts = IvpOptions::default();
    opts.adaptive.rel_tol = rel_tol;
    integrate_with(ivp, r_max, &opts)
}

pub fn integrate_with(
    ivp: &SingularIvp,
    r_max: f64,
    opts: &IvpOptions,
) -> Result<ProfileGrid, GllError> {
    let r0 = opts.r0.unwrap_or_else(|| default_r0(ivp.alpha0));
    if !(r_max > r0) {
        return Err(GllError::Domain(format!("r_max {r_max} must exceed r0 {r0}")));
    }
    let s = series_start(ivp, r0)?;
    let y0 = vec![s.value.re, s.value.im, s.deriv.re, s.deriv.im];
    let mut ad = opts.adaptive.clone();
    ad.h0.get_or_insert(0.25 * r0);
    let sol = integrate(r0, y0, r_max, |r, y, dy| ivp.rhs(r, y, dy), &ad, |_, _| Ok(()))?;
    Ok(ProfileGrid::from_solution(&sol))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct HardyReport {
    pub ratio: f64,
    pub bound: f64,
    /// Set when both norms vanish and the ratio is reported as 0.
    pub zero_function: bool,
}

/// ‖f/r^{k+1}‖_{L^p} / ‖f_r/r^k‖_{L^p} in the radial measure r^{d−1}dr,
/// composite trapezoid on the samples.
pub fn hardy_check(
    r: &[f64],
    f: &[f64],
    f_r: &[f64],
    d: u32,
    p: f64,
    k: f64,
) -> Result<HardyReport, GllError> {
    let df = d as f64;
    if !(p >= 1.0) || !(k >= 0.0) || !(p < df / (k + 1.0)) {
        return Err(GllError::Domain(format!(
            "Hardy exponents need p >= 1, k >= 0, p < d/(k+1); got d={d}, p={p}, k={k}"
        )));
    }
    if r.len() < 2 || r.len() != f.len() || r.len() != f_r.len() {
        return Err(GllError::EmptyGrid);
    }
    let e_lhs = df - 1.0 - p * (k + 1.0);
    let e_rhs = df - 1.0 - p * k;
    let weight = |x: f64, e: f64, v: f64| {
        if x == 0.0 {
            if e > 0.0 {
                0.0
            } else if e == 0.0 {
                v.abs().powf(p)
            } else {
                f64::NAN
            }
        } else {
            v.abs().powf(p) * x.powf(e)
        }
    };
    let mut lhs: Vec<f64> = r.iter().zip(f).map(|(&x, &v)| weight(x, e_lhs, v)).collect();
    let rhs: Vec<f64> = r.iter().zip(f_r).map(|(&x, &v)| weight(x, e_rhs, v)).collect();
    if lhs[0].is_nan() {
        // Integrable singularity at the origin: drop the endpoint value.
        lhs[0] = 0.0;
    }
    let num = crate::quad::trapezoid(r, &lhs).powf(1.0 / p);
    let den = crate::quad::trapezoid(r, &rhs).powf(1.0 / p);
    let bound = p / (df - p * (k + 1.0));
    if den == 0.0 {
        return Ok(HardyReport { ratio: 0.0, bound, zero_function: num == 0.0 });
    }
    Ok(HardyReport { ratio: num / den, bound, zero_function: false })
}
