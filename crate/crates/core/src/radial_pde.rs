//! Method-of-lines evolution of the reduced GLL equation
//!
//!   u_t = (αP + βu×)(u_rr + ((2n−1)/r)u_r + ((2n−2+u₃)/r²)e₃)
//!
//! on a radial grid with r₀ = 0 pinned to e₃. Classical RK4 in time, three
//! point central differences in r, projection to the sphere after each step.
//! Residual certification evaluates the continuous operator with five point
//! stencils, so the reported residual measures the scheme's truncation error.

use num_complex::Complex64 as C;
use serde::Serialize;
use std::sync::Arc;

use crate::fd::{MirrorStencils, Stencils};
use crate::geom::{
    e3, energy, gll_rhs_raw, stereo_lift, stereo_project, stereo_rhs_raw, FlowParams,
    RadialProfile, SpherePoint, Vec3,
};
use crate::selfsim::{profile_rhs, SelfSimProfile};
use crate::GllError;

pub const DEFAULT_R_MAX: f64 = 50.0;
pub const DEFAULT_DT_FACTOR: f64 = 0.1;
pub const DRIFT_ABORT: f64 = 1e-6;

/// Radial nodes with r[0] = 0.
#[derive(Clone, Debug, Serialize)]
pub struct RadialGrid {
    pub r: Vec<f64>,
    pub spec: GridSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum GridSpec {
    Uniform { dr: f64, r_max: f64 },
    /// r(ξ) = r_max (e^{sξ} − 1)/(e^s − 1) on `intervals` equal ξ-steps.
    Graded { intervals: usize, r_max: f64, stretch: f64 },
}

impl RadialGrid {
    pub fn uniform(dr: f64, r_max: f64) -> Result<Self, GllError> {
        if !(dr > 0.0 && r_max > 2.0 * dr) {
            return Err(GllError::Domain(format!("bad uniform grid dr={dr}, r_max={r_max}")));
        }
        let m = (r_max / dr).round() as usize;
        let r = (0..=m).map(|j| r_max * j as f64 / m as f64).collect();
        Ok(RadialGrid { r, spec: GridSpec::Uniform { dr: r_max / m as f64, r_max } })
    }

    pub fn graded(intervals: usize, r_max: f64, stretch: f64) -> Result<Self, GllError> {
        if intervals < 4 || !(r_max > 0.0) || !(stretch >= 0.0) {
            return Err(GllError::Domain("bad graded grid".into()));
        }
        let map = |x: f64| {
            if stretch == 0.0 {
                r_max * x
            } else {
                r_max * (stretch * x).exp_m1() / stretch.exp_m1()
            }
        };
        let r = (0..=intervals).map(|j| map(j as f64 / intervals as f64)).collect();
        Ok(RadialGrid { r, spec: GridSpec::Graded { intervals, r_max, stretch } })
    }

    pub fn dr_min(&self) -> f64 {
        self.r.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    pub fn r_max(&self) -> f64 {
        *self.r.last().unwrap()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Boundary {
    /// u(r_max, t) = u₀(r_max).
    Clamp,
    /// u_r(r_max, t) = 0 through a mirrored ghost node.
    Neumann,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Scheme {
    Rk4,
}

#[derive(Clone, Debug, Serialize)]
pub struct EvolveConfig {
    /// dt ≤ dt_factor · min Δr².
    pub dt_factor: f64,
    pub scheme: Scheme,
    pub renormalize: bool,
    pub boundary: Boundary,
    /// Spacing of stored frames; `None` stores only the endpoints.
    pub save_dt: Option<f64>,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            dt_factor: DEFAULT_DT_FACTOR,
            scheme: Scheme::Rk4,
            renormalize: true,
            boundary: Boundary::Clamp,
            save_dt: None,
        }
    }
}

impl EvolveConfig {
    pub fn validate(&self) -> Result<(), GllError> {
        if !(self.dt_factor > 0.0 && self.dt_factor <= 0.25) {
            return Err(GllError::Domain(format!(
                "dt factor must lie in (0, 0.25], got {}",
                self.dt_factor
            )));
        }
        if let Some(s) = self.save_dt {
            if !(s > 0.0) {
                return Err(GllError::Domain("save interval must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Field values on a shared grid at one time.
#[derive(Clone, Debug, Serialize)]
pub struct RadialField {
    #[serde(skip)]
    pub r: Arc<Vec<f64>>,
    pub u: Vec<SpherePoint>,
    pub t: f64,
}

impl RadialField {
    /// Samples `map`; the origin node is set to e₃ exactly and must be close to it.
    pub fn from_fn(
        grid: &RadialGrid,
        t: f64,
        map: impl Fn(f64) -> SpherePoint,
    ) -> Result<Self, GllError> {
        let mut u: Vec<SpherePoint> = grid.r.iter().map(|&r| map(r)).collect();
        if (u[0].vec() - e3()).norm() > 1e-12 {
            return Err(GllError::Domain("field must equal e3 at the origin".into()));
        }
        u[0] = SpherePoint::north();
        Ok(RadialField { r: Arc::new(grid.r.clone()), u, t })
    }

    pub fn vecs(&self) -> Vec<Vec3> {
        self.u.iter().map(|p| p.vec()).collect()
    }

    /// Radial derivative from five point stencils, mirrored through the origin.
    pub fn derivative(&self) -> Vec<Vec3> {
        let st = MirrorStencils::new(&self.r, 5);
        let v = self.vecs();
        (0..v.len()).map(|j| st.apply(j, &v, reflect).0).collect()
    }

    pub fn energy(&self, n: u32) -> Result<f64, GllError> {
        let prof = RadialProfile { r: self.r.to_vec(), u: self.u.clone(), u_r: self.derivative() };
        energy(&prof, n, 0.0, *self.r.last().unwrap())
    }
}

/// Parity of equivariant data: (u₁, u₂) odd and u₃ even in r.
pub fn reflect(v: Vec3) -> Vec3 {
    Vec3::new(-v.x, -v.y, v.z)
}

/// Harmonic map data (2rv, 1 − |v|²r²)/(1 + |v|²r²).
pub fn harmonic_field(grid: &RadialGrid, v: [f64; 2]) -> Result<RadialField, GllError> {
    RadialField::from_fn(grid, 0.0, |r| crate::geom::harmonic_map(v, r))
}

/// Great-circle bump u = cos g e₃ + sin g w with g = amp (r/width) e^{−(r/width)²}
/// and w = (cos θ, sin θ, 0).
pub fn bump_angle(amp: f64, width: f64, r: f64) -> f64 {
    let x = r / width;
    amp * x * (-x * x).exp()
}

pub fn great_circle_bump(
    grid: &RadialGrid,
    amp: f64,
    width: f64,
    theta: f64,
) -> Result<RadialField, GllError> {
    let w = Vec3::new(theta.cos(), theta.sin(), 0.0);
    RadialField::from_fn(grid, 0.0, |r| {
        let g = bump_angle(amp, width, r);
        SpherePoint::normalize(e3() * g.cos() + w * g.sin()).expect("unit")
    })
}

/// ψ(r/√t₀) sampled from a self-similar profile.
pub fn selfsim_field(
    grid: &RadialGrid,
    profile: &SelfSimProfile,
    t0: f64,
) -> Result<RadialField, GllError> {
    if !(t0 > 0.0) {
        return Err(GllError::Domain("t0 must be positive".into()));
    }
    let mut f = RadialField::from_fn(grid, t0, |r| profile.sample(r / t0.sqrt()).0)?;
    f.t = t0;
    Ok(f)
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub params: FlowParams,
    pub config: EvolveConfig,
    pub dt: f64,
    pub steps: usize,
    /// Largest | |u| − 1 | seen before projection.
    pub max_drift: f64,
    pub frames: Vec<RadialField>,
}

struct Operator {
    r: Vec<f64>,
    st: Stencils,
    ghost_h: f64,
    boundary: Boundary,
}

impl Operator {
    fn new(r: &[f64], boundary: Boundary) -> Self {
        let st = Stencils::central(r);
        let n = r.len();
        Operator { r: r.to_vec(), st, ghost_h: r[n - 1] - r[n - 2], boundary }
    }

    /// Derivatives at node j with three point stencils (mirrored ghost at the
    /// outer node under the Neumann policy).
    fn jet<T>(&self, j: usize, v: &[T]) -> (T, T)
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T> + std::ops::Sub<Output = T>,
    {
        let last = self.r.len() - 1;
        if j == last {
            let h = self.ghost_h;
            let zero = v[j] * 0.0;
            return (zero, (v[j - 1] - v[j]) * (2.0 / (h * h)));
        }
        self.st.apply(j, v)
    }

    fn evolving(&self, j: usize) -> bool {
        j > 0 && (j < self.r.len() - 1 || self.boundary == Boundary::Neumann)
    }

    fn sphere(&self, p: &FlowParams, u: &[Vec3], out: &mut [Vec3]) {
        for j in 0..u.len() {
            out[j] = if self.evolving(j) {
                let (ur, urr) = self.jet(j, u);
                gll_rhs_raw(&u[j], &ur, &urr, self.r[j], p)
            } else {
                Vec3::zeros()
            };
        }
    }

    fn stereo(&self, p: &FlowParams, f: &[C], out: &mut [C]) {
        for j in 0..f.len() {
            out[j] = if self.evolving(j) {
                let (fr, frr) = self.jet(j, f);
                stereo_rhs_raw(f[j], fr, frr, self.r[j], p)
            } else {
                C::new(0.0, 0.0)
            };
        }
    }
}

fn time_plan(t_span: f64, dt_max: f64, save_dt: Option<f64>) -> (usize, usize, f64) {
    let saves = match save_dt {
        Some(s) => ((t_span / s) - 1e-9).ceil().max(1.0) as usize,
        None => 1,
    };
    let interval = t_span / saves as f64;
    let subs = (interval / dt_max).ceil().max(1.0) as usize;
    (saves, subs, interval / subs as f64)
}

fn rk4_step<T, F>(y: &mut [T], dt: f64, rhs: F, k: &mut [Vec<T>; 4], tmp: &mut Vec<T>)
where
    T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    F: Fn(&[T], &mut [T]),
{
    rhs(y, &mut k[0]);
    for i in 0..y.len() {
        tmp[i] = y[i] + k[0][i] * (0.5 * dt);
    }
    rhs(tmp, &mut k[1]);
    for i in 0..y.len() {
        tmp[i] = y[i] + k[1][i] * (0.5 * dt);
    }
    rhs(tmp, &mut k[2]);
    for i in 0..y.len() {
        tmp[i] = y[i] + k[2][i] * dt;
    }
    rhs(tmp, &mut k[3]);
    for i in 0..y.len() {
        y[i] = y[i] + (k[0][i] + k[1][i] * 2.0 + k[2][i] * 2.0 + k[3][i]) * (dt / 6.0);
    }
}

/// Evolves `field0` for a time span `t_span` in sphere coordinates.
pub fn evolve(
    field0: &RadialField,
    params: FlowParams,
    t_span: f64,
    config: &EvolveConfig,
) -> Result<Trajectory, GllError> {
    config.validate()?;
    if !(t_span > 0.0) {
        return Err(GllError::Domain(format!("evolution time must be positive, got {t_span}")));
    }
    let r = field0.r.clone();
    let op = Operator::new(&r, config.boundary);
    let dt_max = config.dt_factor * RadialGrid { r: r.to_vec(), spec: GridSpec::Uniform { dr: 0.0, r_max: 0.0 } }.dr_min().powi(2);
    let (saves, subs, dt) = time_plan(t_span, dt_max, config.save_dt);
    let mut u = field0.vecs();
    let n = u.len();
    let mut k = [vec![Vec3::zeros(); n], vec![Vec3::zeros(); n], vec![Vec3::zeros(); n], vec![Vec3::zeros(); n]];
    let mut tmp = vec![Vec3::zeros(); n];
    let mut frames = vec![field0.clone()];
    let mut max_drift: f64 = 0.0;
    let mut steps = 0;
    for s in 0..saves {
        for sub in 0..subs {
            rk4_step(&mut u, dt, |y, out| op.sphere(&params, y, out), &mut k, &mut tmp);
            steps += 1;
            let t = field0.t + (s * subs + sub + 1) as f64 * dt;
            for (j, x) in u.iter_mut().enumerate() {
                let drift = (x.norm() - 1.0).abs();
                if !(drift <= DRIFT_ABORT) {
                    return Err(GllError::Instability { t, node: j, drift });
                }
                max_drift = max_drift.max(drift);
                if config.renormalize {
                    *x /= x.norm();
                }
            }
            u[0] = e3();
        }
        let t = field0.t + (s + 1) as f64 * subs as f64 * dt;
        let pts = u.iter().map(|x| SpherePoint::normalize(*x)).collect::<Result<Vec<_>, _>>()?;
        frames.push(RadialField { r: r.clone(), u: pts, t });
    }
    Ok(Trajectory { params, config: config.clone(), dt, steps, max_drift, frames })
}

/// Evolves the same data in the stereographic chart and lifts every frame.
pub fn evolve_stereo(
    field0: &RadialField,
    params: FlowParams,
    t_span: f64,
    config: &EvolveConfig,
) -> Result<Trajectory, GllError> {
    config.validate()?;
    if !(t_span > 0.0) {
        return Err(GllError::Domain(format!("evolution time must be positive, got {t_span}")));
    }
    let r = field0.r.clone();
    let op = Operator::new(&r, config.boundary);
    let dr_min = r.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let (saves, subs, dt) = time_plan(t_span, config.dt_factor * dr_min * dr_min, config.save_dt);
    let mut f = field0.u.iter().map(stereo_project).collect::<Result<Vec<_>, _>>()?;
    let n = f.len();
    let z = C::new(0.0, 0.0);
    let mut k = [vec![z; n], vec![z; n], vec![z; n], vec![z; n]];
    let mut tmp = vec![z; n];
    let mut frames = vec![field0.clone()];
    let mut steps = 0;
    for s in 0..saves {
        for _ in 0..subs {
            rk4_step(&mut f, dt, |y, out| op.stereo(&params, y, out), &mut k, &mut tmp);
            steps += 1;
        }
        let t = field0.t + (s + 1) as f64 * subs as f64 * dt;
        frames.push(RadialField { r: r.clone(), u: f.iter().map(|&x| stereo_lift(x)).collect(), t });
    }
    Ok(Trajectory { params, config: config.clone(), dt, steps, max_drift: 0.0, frames })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ResidualNorm {
    pub t: f64,
    /// L² with the radial measure r^{2n−1} dr of ℝ^{2n}.
    pub l2: f64,
    /// L² with plain dr, dominated near the origin by the O(Δr²/r) truncation.
    pub l2_flat: f64,
    pub linf: f64,
}

/// Norms over nodes 1..N−1 with trapezoid weights in r.
pub fn interior_norms<T: Fn(usize) -> f64>(r: &[f64], t: f64, n: u32, mag: T) -> ResidualNorm {
    let mut l2 = 0.0;
    let mut flat = 0.0;
    let mut linf: f64 = 0.0;
    let k = 2 * n as i32 - 1;
    for j in 1..r.len() - 1 {
        let m = mag(j);
        let w = 0.5 * (r[j + 1] - r[j - 1]) * m * m;
        flat += w;
        l2 += w * r[j].powi(k);
        linf = linf.max(m);
    }
    ResidualNorm { t, l2: l2.sqrt(), l2_flat: flat.sqrt(), linf }
}

/// Centered-in-time u_t minus the continuous right-hand side at every interior frame.
pub fn residual(traj: &Trajectory, params: &FlowParams) -> Result<Vec<ResidualNorm>, GllError> {
    if traj.frames.len() < 3 {
        return Err(GllError::Domain("residual needs at least three frames".into()));
    }
    let r = traj.frames[0].r.clone();
    let st = MirrorStencils::new(&r, 5);
    let mut out = Vec::new();
    for k in 1..traj.frames.len() - 1 {
        let (a, b, c) = (&traj.frames[k - 1], &traj.frames[k], &traj.frames[k + 1]);
        let tau = c.t - a.t;
        let u = b.vecs();
        let res: Vec<f64> = (0..u.len())
            .map(|j| {
                if j == 0 || j == u.len() - 1 {
                    return 0.0;
                }
                let (ur, urr) = st.apply(j, &u, reflect);
                let ut = (c.u[j].vec() - a.u[j].vec()) / tau;
                (ut - gll_rhs_raw(&u[j], &ur, &urr, r[j], params)).norm()
            })
            .collect();
        out.push(interior_norms(&r, b.t, params.n, |j| res[j]));
    }
    Ok(out)
}

/// max over (r, t) of |⟨u, w⟩| with w = v0 × e₃ normalized.
pub fn great_circle_deviation(traj: &Trajectory, v0: [f64; 2]) -> f64 {
    let w = Vec3::new(v0[0], v0[1], 0.0).cross(&e3());
    let w = if w.norm() > 0.0 { w / w.norm() } else { w };
    traj.frames
        .iter()
        .flat_map(|f| f.u.iter().map(move |u| u.vec().dot(&w).abs()))
        .fold(0.0, f64::max)
}

/// Signed angle g from e₃ within the plane spanned by e₃ and v0.
pub fn great_circle_angle(field: &RadialField, v0: [f64; 2]) -> Vec<f64> {
    let w = Vec3::new(v0[0], v0[1], 0.0).normalize();
    field.u.iter().map(|u| u.vec().dot(&w).atan2(u.x3())).collect()
}

/// Residual of g_t = g_rr + ((2n−1)/r) g_r − η(g)/r² for the extracted angle.
pub fn real_reduction_residual(traj: &Trajectory, v0: [f64; 2]) -> Result<Vec<ResidualNorm>, GllError> {
    if traj.frames.len() < 3 {
        return Err(GllError::Domain("residual needs at least three frames".into()));
    }
    let eta = crate::real_flow::EtaFn::new(traj.params.n)?;
    let k = 2.0 * traj.params.nf() - 1.0;
    let r = traj.frames[0].r.clone();
    let st = MirrorStencils::new(&r, 5);
    let mut out = Vec::new();
    for m in 1..traj.frames.len() - 1 {
        let ga = great_circle_angle(&traj.frames[m - 1], v0);
        let g = great_circle_angle(&traj.frames[m], v0);
        let gc = great_circle_angle(&traj.frames[m + 1], v0);
        let tau = traj.frames[m + 1].t - traj.frames[m - 1].t;
        let res: Vec<f64> = (0..g.len())
            .map(|j| {
                if j == 0 || j == g.len() - 1 {
                    return 0.0;
                }
                let (gr, grr) = st.apply(j, &g, |x| -x);
                ((gc[j] - ga[j]) / tau - (grr + k / r[j] * gr - eta.eta(g[j]) / (r[j] * r[j]))).abs()
            })
            .collect();
        out.push(interior_norms(&r, traj.frames[m].t, traj.params.n, |j| res[j]));
    }
    Ok(out)
}

/// max over frames and nodes of |u(t) − u(0)|.
pub fn drift_from_initial(traj: &Trajectory) -> f64 {
    let u0 = &traj.frames[0].u;
    traj.frames
        .iter()
        .flat_map(|f| f.u.iter().zip(u0).map(|(a, b)| (a.vec() - b.vec()).norm()))
        .fold(0.0, f64::max)
}

/// Where ψ_rr comes from in the self-similar substitution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DerivativeSource {
    /// The profile ODE evaluated at the stored (ψ, ψ_r).
    Ode,
    /// Five point differences of the stored ψ_r on the profile grid.
    Differences,
}

/// max over profile nodes of |u_t − rhs| for u(r,t) = ψ(r/√t).
pub fn selfsim_consistency(
    profile: &SelfSimProfile,
    t: f64,
    params: &FlowParams,
    source: DerivativeSource,
) -> Result<f64, GllError> {
    if !(t > 0.0) {
        return Err(GllError::Domain("t must be positive".into()));
    }
    let st = Stencils::new(&profile.r, 5, 0, profile.r.len() - 1);
    let sq = t.sqrt();
    let mut worst: f64 = 0.0;
    for j in 1..profile.r.len() - 1 {
        let rho = profile.r[j];
        let psi = profile.psi[j].vec();
        let pr = profile.psi_r[j];
        let prr = match source {
            DerivativeSource::Ode => profile_rhs(&profile.params, rho, &psi, &pr),
            DerivativeSource::Differences => st.apply(j, &profile.psi_r).0,
        };
        let r = rho * sq;
        let ut = -pr * (rho / (2.0 * t));
        let rhs = gll_rhs_raw(&psi, &(pr / sq), &(prr / t), r, params);
        worst = worst.max((ut - rhs).norm());
    }
    Ok(worst)
}

/// max over nodes with r ≤ r_cmp of |u(r) − ψ(r/√t)|.
pub fn selfsim_tracking_error(field: &RadialField, profile: &SelfSimProfile, r_cmp: f64) -> f64 {
    let sq = field.t.sqrt();
    field
        .r
        .iter()
        .zip(&field.u)
        .filter(|(r, _)| **r <= r_cmp)
        .map(|(r, u)| (u.vec() - profile.sample(r / sq).0.vec()).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_stays_constant() {
        let g = RadialGrid::uniform(0.1, 5.0).unwrap();
        let f = RadialField::from_fn(&g, 0.0, |_| SpherePoint::north()).unwrap();
        let cfg = EvolveConfig { save_dt: Some(0.05), ..Default::default() };
        let tr = evolve(&f, FlowParams::new(2, 0.6, 0.8).unwrap(), 0.2, &cfg).unwrap();
        assert!(tr.frames.iter().all(|fr| fr.u.iter().all(|u| *u == SpherePoint::north())));
        let res = residual(&tr, &tr.params).unwrap();
        assert!(res.iter().all(|x| x.l2 == 0.0 && x.linf == 0.0));
    }

    #[test]
    fn dt_factor_bound() {
        let cfg = EvolveConfig { dt_factor: 0.3, ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn graded_grid_is_monotone() {
        let g = RadialGrid::graded(64, 50.0, 3.0).unwrap();
        assert!(g.r.windows(2).all(|w| w[1] > w[0]));
        assert!((g.r_max() - 50.0).abs() < 1e-12 && g.r[0] == 0.0);
    }
}
