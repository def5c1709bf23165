//! Self-similar profiles u(r,t) = ψ(r/√t) of the GLL flow.
//!
//! The profile ODE is integrated in the explicit sphere form
//!
//!   ψ_rr = −|ψ_r|²ψ − ((2n−1)/r)ψ_r − ((2n−2+ψ₃)/r²)P_ψe₃ − (r/2)(αψ_r − βψ×ψ_r),
//!
//! obtained by inverting (α + βψ×) on the tangent plane. The start at the
//! singular origin uses the stereographic form of the same problem.
//!
//! Slope convention: the data v is the stereographic slope f'(0) = v₁ + iv₂,
//! so ψ_r(0) = 2v, matching the harmonic maps (2rv, 1−|v|²r²)/(1+|v|²r²).

use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde::Serialize;

use crate::geom::{e3, stereo_lift_jet, FlowParams, SpherePoint, Vec3};
use crate::quad::cumulative_hermite;
use crate::singular_ode::{
    default_r0, hermite, integrate, integrate_with, series_start, AdaptiveOptions, IvpOptions,
    ProfileGrid, SingularIvp, Tableau,
};
use crate::GllError;

pub const DEFAULT_R_MAX: f64 = 100.0;
pub const TAIL_RATE_CONSTANT: f64 = 40.0;
const DRIFT_ABORT: f64 = 1e-6;

#[derive(Clone, Debug, Serialize)]
pub struct SelfSimProfile {
    pub params: FlowParams,
    pub v: [f64; 2],
    pub r: Vec<f64>,
    pub psi: Vec<SpherePoint>,
    pub psi_r: Vec<Vec3>,
    pub psi_rr: Vec<Vec3>,
    /// A(r) = r²|ψ_r|².
    pub a: Vec<f64>,
}

/// Explicit second derivative of the profile.
pub fn profile_rhs(p: &FlowParams, r: f64, psi: &Vec3, psi_r: &Vec3) -> Vec3 {
    let k = 2.0 * p.nf() - 1.0;
    let c = (2.0 * p.nf() - 2.0 + psi.z) / (r * r);
    let pe3 = e3() - psi * psi.z;
    let drift = psi_r * p.alpha - psi.cross(psi_r) * p.beta;
    -psi * psi_r.norm_squared() - psi_r * (k / r) - pe3 * c - drift * (0.5 * r)
}

/// The same problem in the stereographic chart as a singular IVP with
/// k = 2n−1, A = −(r/2)(α−iβ)f' + 2f̄f'²/(1+|f|²), B = −2|f|²f/(1+|f|²).
pub fn stereo_ivp(v: [f64; 2], p: FlowParams) -> Result<SingularIvp<'static>, GllError> {
    let conj_factor = p.factor().conj();
    SingularIvp::new(
        2.0 * p.nf() - 1.0,
        Box::new(move |fp: C, f: C, r: f64| {
            -0.5 * r * conj_factor * fp + 2.0 * f.conj() * fp * fp / (1.0 + f.norm_sqr())
        }),
        Box::new(|f: C| -2.0 * f.norm_sqr() * f / (1.0 + f.norm_sqr())),
        C::new(v[0], v[1]),
    )
}

fn check_v(v: [f64; 2], r_max: f64) -> Result<(), GllError> {
    if !(v[0].is_finite() && v[1].is_finite()) {
        return Err(GllError::Domain("v must be finite".into()));
    }
    if !(r_max > 0.0) {
        return Err(GllError::Domain(format!("r_max must be positive, got {r_max}")));
    }
    Ok(())
}

pub fn solve_profile(
    v: [f64; 2],
    params: FlowParams,
    r_max: f64,
    rel_tol: f64,
) -> Result<SelfSimProfile, GllError> {
    solve_profile_with(v, params, r_max, rel_tol, Tableau::Dp54)
}

pub fn solve_profile_with(
    v: [f64; 2],
    params: FlowParams,
    r_max: f64,
    rel_tol: f64,
    tableau: Tableau,
) -> Result<SelfSimProfile, GllError> {
    check_v(v, r_max)?;
    let ivp = stereo_ivp(v, params)?;
    let r0 = default_r0(ivp.alpha0).min(0.5 * r_max);
    let s = series_start(&ivp, r0)?;
    let fpp = ivp.second_derivative(r0, s.value, s.deriv);
    let (psi0, psi_r0, _) = stereo_lift_jet(s.value, s.deriv, fpp);
    let y0 = vec![psi0.x1(), psi0.x2(), psi0.x3(), psi_r0.x, psi_r0.y, psi_r0.z];
    let opts = AdaptiveOptions { rel_tol, h0: Some(0.25 * r0), tableau, ..Default::default() };
    let rhs = |r: f64, y: &[f64], dy: &mut [f64]| {
        let psi = Vec3::new(y[0], y[1], y[2]);
        let pr = Vec3::new(y[3], y[4], y[5]);
        let prr = profile_rhs(&params, r, &psi, &pr);
        dy[..3].copy_from_slice(pr.as_slice());
        dy[3..].copy_from_slice(prr.as_slice());
    };
    let project = |r: f64, y: &mut [f64]| {
        let psi = Vec3::new(y[0], y[1], y[2]);
        let norm = psi.norm();
        if (norm - 1.0).abs() > DRIFT_ABORT {
            return Err(GllError::Instability { t: r, node: 0, drift: (norm - 1.0).abs() });
        }
        let psi = psi / norm;
        let mut pr = Vec3::new(y[3], y[4], y[5]);
        let tang = psi.dot(&pr);
        if tang.abs() > DRIFT_ABORT * (1.0 + pr.norm()) {
            return Err(GllError::Instability { t: r, node: 1, drift: tang.abs() });
        }
        pr -= psi * tang;
        y[..3].copy_from_slice(psi.as_slice());
        y[3..].copy_from_slice(pr.as_slice());
        Ok(())
    };
    let sol = integrate(r0, y0, r_max, rhs, &opts, project)?;

    let mut prof = SelfSimProfile {
        params,
        v,
        r: Vec::with_capacity(sol.t.len() + 1),
        psi: Vec::with_capacity(sol.t.len() + 1),
        psi_r: Vec::with_capacity(sol.t.len() + 1),
        psi_rr: Vec::with_capacity(sol.t.len() + 1),
        a: Vec::with_capacity(sol.t.len() + 1),
    };
    let slope = Vec3::new(2.0 * v[0], 2.0 * v[1], 0.0);
    prof.r.push(0.0);
    prof.psi.push(SpherePoint::north());
    prof.psi_r.push(slope);
    prof.psi_rr.push(Vec3::new(0.0, 0.0, -slope.norm_squared()));
    prof.a.push(0.0);
    for ((t, y), dy) in sol.t.iter().zip(&sol.y).zip(&sol.dy) {
        let psi = Vec3::new(y[0], y[1], y[2]);
        let pr = Vec3::new(y[3], y[4], y[5]);
        prof.r.push(*t);
        prof.psi.push(SpherePoint::normalize(psi)?);
        prof.psi_r.push(pr);
        prof.psi_rr.push(Vec3::new(dy[3], dy[4], dy[5]));
        prof.a.push(t * t * pr.norm_squared());
    }
    Ok(prof)
}

/// The stereographic chart solve, used as an independent cross-check.
pub fn solve_profile_stereo(
    v: [f64; 2],
    params: FlowParams,
    r_max: f64,
    rel_tol: f64,
    tableau: Tableau,
) -> Result<ProfileGrid, GllError> {
    check_v(v, r_max)?;
    let ivp = stereo_ivp(v, params)?;
    let mut opts = IvpOptions::default();
    opts.adaptive.rel_tol = rel_tol;
    opts.adaptive.tableau = tableau;
    integrate_with(&ivp, r_max, &opts)
}

impl SelfSimProfile {
    pub fn r_max(&self) -> f64 {
        *self.r.last().unwrap()
    }

    pub fn max_a(&self) -> f64 {
        self.a.iter().cloned().fold(0.0, f64::max)
    }

    /// Hermite interpolation of (ψ, ψ_r) at ρ, renormalized.
    pub fn sample(&self, rho: f64) -> (SpherePoint, Vec3) {
        let n = self.r.len();
        let rho = rho.clamp(0.0, self.r[n - 1]);
        let j = (self.r.partition_point(|&x| x <= rho).max(1) - 1).min(n - 2);
        let pack = |i: usize| {
            let (p, pr, prr) = (self.psi[i].vec(), self.psi_r[i], self.psi_rr[i]);
            ([p.x, p.y, p.z, pr.x, pr.y, pr.z], [pr.x, pr.y, pr.z, prr.x, prr.y, prr.z])
        };
        let (y0, d0) = pack(j);
        let (y1, d1) = pack(j + 1);
        let y = hermite(self.r[j], self.r[j + 1], &y0, &y1, &d0, &d1, rho);
        let psi = SpherePoint::normalize(Vec3::new(y[0], y[1], y[2])).expect("finite profile");
        let pr = psi.project(&Vec3::new(y[3], y[4], y[5]));
        (psi, pr)
    }

    pub fn csv_rows(&self) -> Vec<Vec<f64>> {
        (0..self.r.len())
            .map(|j| {
                let p = self.psi[j];
                vec![self.r[j], p.x1(), p.x2(), p.x3(), self.psi_r[j].norm(), self.a[j]]
            })
            .collect()
    }

    pub const CSV_HEADER: [&'static str; 6] = ["r", "psi1", "psi2", "psi3", "abs_psi_r", "A"];
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub max_residual: f64,
    pub r_at_max: f64,
    /// Smallest value of the right-hand bracket over nodes with r > 0.
    pub min_bracket: f64,
    /// Left-hand integral evaluated at r = 1 (or the last node below it).
    pub integral_at_one: f64,
}

/// Right-hand side 2(2n−2)(1−ψ₃) + (1−ψ₃²) of the integrated identity.
pub fn identity_bracket(n: u32, psi3: f64) -> f64 {
    2.0 * (2.0 * n as f64 - 2.0) * (1.0 - psi3) + (1.0 - psi3 * psi3)
}

/// Residual of A(r) + ∫₀^r (4(n−1)/s + αs) A ds − [2(2n−2)(1−ψ₃) + (1−ψ₃²)].
///
/// The identity follows from A' = 2r|ψ_r|² + 2r²ψ_rr·ψ_r and the profile ODE.
/// The integral uses the Hermite-corrected trapezoid with the exact A'.
pub fn apriori_identity_residual(profile: &SelfSimProfile) -> IdentityReport {
    let p = &profile.params;
    let n = p.n;
    let c1 = 4.0 * (p.nf() - 1.0);
    let slope2 = profile.psi_r[0].norm_squared();
    let mut g = Vec::with_capacity(profile.r.len());
    let mut dg = Vec::with_capacity(profile.r.len());
    for j in 0..profile.r.len() {
        let r = profile.r[j];
        if r == 0.0 {
            g.push(0.0);
            // A ≈ |ψ_r(0)|² r², so g ≈ c1 |ψ_r(0)|² r near the origin.
            dg.push(c1 * slope2);
            continue;
        }
        let a = profile.a[j];
        let ap = 2.0 * r * profile.psi_r[j].norm_squared()
            + 2.0 * r * r * profile.psi_rr[j].dot(&profile.psi_r[j]);
        let w = c1 / r + p.alpha * r;
        let wp = -c1 / (r * r) + p.alpha;
        g.push(w * a);
        dg.push(wp * a + w * ap);
    }
    let integral = cumulative_hermite(&profile.r, &g, &dg);
    let mut rep = IdentityReport {
        max_residual: 0.0,
        r_at_max: 0.0,
        min_bracket: f64::INFINITY,
        integral_at_one: 0.0,
    };
    for j in 0..profile.r.len() {
        let r = profile.r[j];
        let bracket = identity_bracket(n, profile.psi[j].x3());
        let res = (profile.a[j] + integral[j] - bracket).abs();
        if res > rep.max_residual {
            rep.max_residual = res;
            rep.r_at_max = r;
        }
        if r > 0.0 {
            rep.min_bracket = rep.min_bracket.min(bracket);
        }
        if r <= 1.0 {
            rep.integral_at_one = integral[j];
        }
    }
    rep
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    pub points: usize,
    pub underflow: bool,
}

/// Least-squares slope of log|ψ_r| against log r over nodes in [r_lo, r_hi].
pub fn decay_exponent(profile: &SelfSimProfile, r_lo: f64, r_hi: f64) -> Result<DecayFit, GllError> {
    let pts: Vec<(f64, f64)> = profile
        .r
        .iter()
        .zip(&profile.psi_r)
        .filter(|(r, _)| **r >= r_lo && **r <= r_hi)
        .map(|(r, pr)| (*r, pr.norm()))
        .collect();
    log_slope(&pts)
}

/// Log-log least-squares slope of (x, y) samples.
pub fn log_slope(pts: &[(f64, f64)]) -> Result<DecayFit, GllError> {
    if pts.len() < 2 {
        return Err(GllError::Domain("fit window holds fewer than two nodes".into()));
    }
    let underflow = pts.iter().any(|(_, y)| *y < 1e-14);
    let lp: Vec<(f64, f64)> = pts.iter().map(|(x, y)| (x.ln(), y.max(1e-300).ln())).collect();
    let m = lp.len() as f64;
    let mx = lp.iter().map(|p| p.0).sum::<f64>() / m;
    let my = lp.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = lp.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = lp.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(DecayFit { slope: sxy / sxx, points: pts.len(), underflow })
}

#[derive(Clone, Debug, Serialize)]
pub struct TailReport {
    pub psi_inf: SpherePoint,
    pub r_used: f64,
    /// 40n²/r_used².
    pub rate_bound: f64,
    /// |ψ(r_used/2) − ψ(r_used)|.
    pub half_gap: f64,
    /// Bound checked against half_gap: 40n²/(r_used/2)².
    pub half_bound: f64,
    /// half_gap · (r_used/2)² / n², the constant the data would need.
    pub empirical_constant: f64,
}

pub fn tail_limit(profile: &SelfSimProfile) -> Result<TailReport, GllError> {
    let r_used = profile.r_max();
    if r_used < 10.0 {
        return Err(GllError::Domain(format!("tail needs r_max >= 10, got {r_used}")));
    }
    let n2 = profile.params.nf().powi(2);
    let psi_inf = *profile.psi.last().unwrap();
    let (half, _) = profile.sample(0.5 * r_used);
    let half_gap = (half.vec() - psi_inf.vec()).norm();
    let half_bound = TAIL_RATE_CONSTANT * n2 / (0.25 * r_used * r_used);
    let rep = TailReport {
        psi_inf,
        r_used,
        rate_bound: TAIL_RATE_CONSTANT * n2 / (r_used * r_used),
        half_gap,
        half_bound,
        empirical_constant: half_gap * 0.25 * r_used * r_used / n2,
    };
    if half_gap > half_bound {
        return Err(GllError::NonConverged(format!(
            "|psi(r/2) - psi(r)| = {half_gap:e} exceeds {half_bound:e}; increase r_max"
        )));
    }
    Ok(rep)
}

#[derive(Clone, Debug, Serialize)]
pub struct ContinuityRow {
    pub v: [f64; 2],
    pub psi_inf: SpherePoint,
    pub dist_to_e3: f64,
}

/// ψ∞(v) over the given samples, solved in parallel.
pub fn limit_map_continuity(
    v_samples: &[[f64; 2]],
    params: FlowParams,
    r_max: f64,
    rel_tol: f64,
) -> Result<Vec<ContinuityRow>, GllError> {
    v_samples
        .par_iter()
        .map(|&v| {
            let prof = solve_profile(v, params, r_max, rel_tol)?;
            let psi_inf = *prof.psi.last().unwrap();
            Ok(ContinuityRow { v, psi_inf, dist_to_e3: (psi_inf.vec() - e3()).norm() })
        })
        .collect()
}

/// Largest |ψ∞ difference| divided by |v difference| over consecutive rows.
pub fn modulus_of_continuity(rows: &[ContinuityRow]) -> f64 {
    rows.windows(2)
        .map(|w| {
            let dv = ((w[0].v[0] - w[1].v[0]).powi(2) + (w[0].v[1] - w[1].v[1]).powi(2)).sqrt();
            let dp = (w[0].psi_inf.vec() - w[1].psi_inf.vec()).norm();
            if dv > 0.0 {
                dp / dv
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_data_gives_constant_profile() {
        let p = solve_profile([0.0, 0.0], FlowParams::heat(2), 20.0, 1e-10).unwrap();
        assert!(p.psi.iter().all(|u| *u == SpherePoint::north()));
        assert!(p.a.iter().all(|a| *a == 0.0));
    }

    #[test]
    fn explicit_form_solves_implicit_equation() {
        // −(r/2)(αψ×ψ_r + βψ_r) = ψ × (ψ_rr + ((2n−1)/r)ψ_r + ((2n−2+ψ₃)/r²)e₃)
        let p = FlowParams::new(3, 0.6, -0.8).unwrap();
        let psi = Vec3::new(0.3, -0.4, 0.5).normalize();
        let pr = {
            let w = Vec3::new(0.7, 0.2, -0.1);
            w - psi * psi.dot(&w)
        };
        let r = 1.7;
        let prr = profile_rhs(&p, r, &psi, &pr);
        let lhs = -(psi.cross(&pr) * p.alpha + pr * p.beta) * (0.5 * r);
        let inner = prr + pr * (5.0 / r) + e3() * ((4.0 + psi.z) / (r * r));
        assert!((lhs - psi.cross(&inner)).norm() < 1e-13);
    }
}
