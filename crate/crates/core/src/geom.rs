//! Geometry of the reduced problem: unit vectors in R³, the stereographic
//! chart, the equivariant embedding into CP^n, energy, tension and the GLL
//! right-hand sides in both charts.

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::GllError;

pub type Vec3 = Vector3<f64>;
pub type StereoValue = Complex64;

/// Norm drift tolerated without repair.
pub const NORM_TOL: f64 = 1e-12;
/// Largest drift a constructor will silently project away.
pub const REPAIR_TOL: f64 = 1e-6;
/// Distance to the south pole below which the stereographic chart refuses.
pub const POLE_GUARD: f64 = 1e-8;

pub fn e3() -> Vec3 {
    Vec3::new(0.0, 0.0, 1.0)
}

/// A point of the unit sphere S² ⊂ R³.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint(Vec3);

impl SpherePoint {
    pub fn new(x1: f64, x2: f64, x3: f64) -> Result<Self, GllError> {
        Self::from_vec(Vec3::new(x1, x2, x3))
    }

    /// Projects onto the sphere when the drift is at most `REPAIR_TOL`.
    pub fn from_vec(v: Vec3) -> Result<Self, GllError> {
        let norm = v.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > REPAIR_TOL {
            return Err(GllError::NormDrift { drift: (norm - 1.0).abs() });
        }
        Ok(SpherePoint(if norm == 1.0 { v } else { v / norm }))
    }

    /// Normalizes any nonzero finite vector.
    pub fn normalize(v: Vec3) -> Result<Self, GllError> {
        let norm = v.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(GllError::Domain(format!("cannot normalize {v:?}")));
        }
        Ok(SpherePoint(v / norm))
    }

    pub fn north() -> Self {
        SpherePoint(e3())
    }

    pub fn south() -> Self {
        SpherePoint(-e3())
    }

    pub fn vec(&self) -> Vec3 {
        self.0
    }

    pub fn x1(&self) -> f64 {
        self.0.x
    }

    pub fn x2(&self) -> f64 {
        self.0.y
    }

    pub fn x3(&self) -> f64 {
        self.0.z
    }

    pub fn distance_to_south(&self) -> f64 {
        (self.0 + e3()).norm()
    }

    /// Tangent projection P_u.
    pub fn project(&self, w: &Vec3) -> Vec3 {
        w - self.0 * self.0.dot(w)
    }
}

/// A vector meant to lie in the tangent plane of some base point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentVec(pub Vec3);

impl TangentVec {
    pub fn new(v1: f64, v2: f64, v3: f64) -> Self {
        TangentVec(Vec3::new(v1, v2, v3))
    }

    pub fn vec(&self) -> Vec3 {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// Relative tangency defect |⟨v,u⟩|/|v| (zero for the zero vector).
    pub fn tangency_defect(&self, base: &SpherePoint) -> f64 {
        let n = self.0.norm();
        if n == 0.0 {
            0.0
        } else {
            self.0.dot(&base.vec()).abs() / n
        }
    }
}

/// (n, α, β): complex dimension and the GLL mixing parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    pub n: u32,
    pub alpha: f64,
    pub beta: f64,
}

impl FlowParams {
    /// Rescales (α, β) onto the unit circle when the drift is at most `REPAIR_TOL`.
    pub fn new(n: u32, alpha: f64, beta: f64) -> Result<Self, GllError> {
        if n < 1 {
            return Err(GllError::Domain("n must be at least 1".into()));
        }
        if !(alpha.is_finite() && beta.is_finite()) || alpha < 0.0 {
            return Err(GllError::Domain(format!("need alpha >= 0, got ({alpha}, {beta})")));
        }
        let rho = alpha.hypot(beta);
        let drift = (rho * rho - 1.0).abs();
        if drift > REPAIR_TOL {
            return Err(GllError::Domain(format!(
                "alpha^2 + beta^2 = {} is not 1",
                rho * rho
            )));
        }
        if drift <= NORM_TOL {
            Ok(FlowParams { n, alpha, beta })
        } else {
            Ok(FlowParams { n, alpha: alpha / rho, beta: beta / rho })
        }
    }

    pub fn heat(n: u32) -> Self {
        FlowParams { n, alpha: 1.0, beta: 0.0 }
    }

    pub fn schrodinger(n: u32) -> Self {
        FlowParams { n, alpha: 0.0, beta: 1.0 }
    }

    /// α + iβ, the factor in front of the stereographic equation.
    pub fn factor(&self) -> Complex64 {
        Complex64::new(self.alpha, self.beta)
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }
}

/// Homogeneous coordinates [z₀, …, z_n] with unit Euclidean norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CPPoint(Vec<Complex64>);

impl CPPoint {
    pub fn new(z: Vec<Complex64>) -> Result<Self, GllError> {
        let norm = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if z.is_empty() || !(norm.is_finite() && norm > 0.0) {
            return Err(GllError::Domain("zero homogeneous coordinates".into()));
        }
        Ok(CPPoint(z.into_iter().map(|c| c / norm).collect()))
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.0
    }

    /// Hermitian product Σ conj(p_j) q_j.
    pub fn inner(&self, other: &CPPoint) -> Complex64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a.conj() * b).sum()
    }
}

/// Fubini-Study distance arccos|⟨p,q⟩|, computed as atan2 of the orthogonal
/// and parallel parts so that nearby points keep full accuracy.
pub fn fs_distance(p: &CPPoint, q: &CPPoint) -> f64 {
    let c = q.inner(p);
    let along = c.norm().min(1.0);
    let perp = p
        .0
        .iter()
        .zip(&q.0)
        .map(|(pj, qj)| (pj - c * qj).norm_sqr())
        .sum::<f64>()
        .sqrt();
    perp.atan2(along)
}

pub fn stereo_project(u: &SpherePoint) -> Result<StereoValue, GllError> {
    if u.distance_to_south() <= POLE_GUARD {
        return Err(GllError::PoleSingularity);
    }
    Ok(Complex64::new(u.x1(), u.x2()) / (1.0 + u.x3()))
}

pub fn stereo_lift(f: StereoValue) -> SpherePoint {
    let s = f.norm_sqr();
    if !s.is_finite() {
        return SpherePoint::south();
    }
    let d = 1.0 + s;
    SpherePoint::normalize(Vec3::new(2.0 * f.re / d, 2.0 * f.im / d, (1.0 - s) / d))
        .unwrap_or_else(|_| SpherePoint::south())
}

/// Lift of a 2-jet (f, f_r, f_rr) to (u, u_r, u_rr).
pub fn stereo_lift_jet(f: Complex64, fr: Complex64, frr: Complex64) -> (SpherePoint, Vec3, Vec3) {
    let s = f.norm_sqr();
    let d = 1.0 + s;
    let sr = 2.0 * (f.conj() * fr).re;
    let srr = 2.0 * fr.norm_sqr() + 2.0 * (f.conj() * frr).re;
    let w_r = 2.0 * fr / d - 2.0 * f * sr / (d * d);
    let w_rr = 2.0 * frr / d - 4.0 * fr * sr / (d * d) - 2.0 * f * srr / (d * d)
        + 4.0 * f * sr * sr / (d * d * d);
    let u3_r = -2.0 * sr / (d * d);
    let u3_rr = -2.0 * srr / (d * d) + 4.0 * sr * sr / (d * d * d);
    (
        stereo_lift(f),
        Vec3::new(w_r.re, w_r.im, u3_r),
        Vec3::new(w_rr.re, w_rr.im, u3_rr),
    )
}

/// Differential of the lift applied to a complex increment.
pub fn stereo_lift_differential(f: Complex64, df: Complex64) -> Vec3 {
    stereo_lift_jet(f, df, Complex64::new(0.0, 0.0)).1
}

/// v = (1+u₃, (u₁+iu₂) z/|z|) / (√2 (1+u₃)^{1/2}), normalized.
pub fn embed_equivariant(u: &SpherePoint, z: &[Complex64]) -> Result<CPPoint, GllError> {
    if u.distance_to_south() <= POLE_GUARD {
        return Err(GllError::PoleSingularity);
    }
    let r = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if z.is_empty() || !(r > 0.0) {
        return Err(GllError::Domain("embedding needs z != 0".into()));
    }
    let scale = 1.0 / (2f64.sqrt() * (1.0 + u.x3()).sqrt());
    let w = Complex64::new(u.x1(), u.x2());
    let mut coords = Vec::with_capacity(z.len() + 1);
    coords.push(Complex64::new((1.0 + u.x3()) * scale, 0.0));
    coords.extend(z.iter().map(|zj| w * zj / r * scale));
    CPPoint::new(coords)
}

/// Σ_j |P ∂_j v|² over the 2n real coordinates of z by central differences,
/// with v = embed_equivariant(u(|z|), z) and P w = w − ⟨w,v⟩v.
///
/// This is the pull-back of the quotient metric of S^{2n+1}, under which CP¹ is
/// a sphere of radius ½; four times it equals 2·energy_density.
pub fn hopf_density_fd(
    u_of_r: impl Fn(f64) -> SpherePoint,
    z: &[Complex64],
    h: f64,
) -> Result<f64, GllError> {
    let lift = |w: &[Complex64]| -> Result<Vec<Complex64>, GllError> {
        let r = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        Ok(embed_equivariant(&u_of_r(r), w)?.coords().to_vec())
    };
    let base = lift(z)?;
    let mut total = 0.0;
    for j in 0..2 * z.len() {
        let step = if j % 2 == 0 { Complex64::new(h, 0.0) } else { Complex64::new(0.0, h) };
        let (mut zp, mut zm) = (z.to_vec(), z.to_vec());
        zp[j / 2] += step;
        zm[j / 2] -= step;
        let (a, b) = (lift(&zp)?, lift(&zm)?);
        let w: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * h)).collect();
        let along: Complex64 = w.iter().zip(&base).map(|(x, y)| x * y.conj()).sum();
        total += w.iter().map(|x| x.norm_sqr()).sum::<f64>() - along.norm_sqr();
    }
    Ok(total)
}

fn check_r(r: f64) -> Result<(), GllError> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(GllError::Domain(format!("radius must be positive, got {r}")))
    }
}

/// ½(|u_r|² + [1 − u₃² + 2(2n−2)(1 − u₃)]/r²).
pub fn energy_density(u: &SpherePoint, u_r: &Vec3, r: f64, n: u32) -> Result<f64, GllError> {
    check_r(r)?;
    let u3 = u.x3();
    let m = 2.0 * n as f64 - 2.0;
    Ok(0.5 * (u_r.norm_squared() + (1.0 - u3 * u3 + 2.0 * m * (1.0 - u3)) / (r * r)))
}

/// Same density written as ½(|u_r|² + [u₁² + u₂² + (2n−2)|u − e₃|²]/r²).
pub fn energy_density_l2(u: &SpherePoint, u_r: &Vec3, r: f64, n: u32) -> Result<f64, GllError> {
    check_r(r)?;
    let m = 2.0 * n as f64 - 2.0;
    let v = u.vec();
    let planar = v.x * v.x + v.y * v.y;
    Ok(0.5 * (u_r.norm_squared() + (planar + m * (v - e3()).norm_squared()) / (r * r)))
}

/// Surface measure of the unit sphere S^{d−1} ⊂ R^d, 2π^{d/2}/Γ(d/2).
pub fn unit_sphere_measure(d: u32) -> f64 {
    use std::f64::consts::PI;
    // Γ(d/2) by the half-integer recursion from Γ(1) = 1 or Γ(1/2) = √π.
    let (mut gamma, mut x) = if d % 2 == 0 { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    let target = d as f64 / 2.0;
    while x < target - 0.25 {
        gamma *= x;
        x += 1.0;
    }
    2.0 * PI.powf(target) / gamma
}

/// A radial profile: grid, values and first derivatives.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RadialProfile {
    pub r: Vec<f64>,
    pub u: Vec<SpherePoint>,
    pub u_r: Vec<Vec3>,
}

impl RadialProfile {
    /// Samples a closed-form map with its derivative.
    pub fn from_fn(r: Vec<f64>, map: impl Fn(f64) -> (SpherePoint, Vec3)) -> Self {
        let (u, u_r) = r.iter().map(|&ri| map(ri)).unzip();
        RadialProfile { r, u, u_r }
    }
}

/// σ_{2n−1} ∫ density · r^{2n−1} dr over the grid nodes inside [r_min, r_max],
/// composite trapezoid. The r = 0 node carries zero weight in the integrand.
pub fn energy(profile: &RadialProfile, n: u32, r_min: f64, r_max: f64) -> Result<f64, GllError> {
    if !(r_min >= 0.0 && r_max > r_min) {
        return Err(GllError::Domain(format!("bad range [{r_min}, {r_max}]")));
    }
    let mut pts = Vec::new();
    for ((&r, u), ur) in profile.r.iter().zip(&profile.u).zip(&profile.u_r) {
        if r < r_min || r > r_max {
            continue;
        }
        let g = if r == 0.0 {
            0.0
        } else {
            energy_density(u, ur, r, n)? * r.powi(2 * n as i32 - 1)
        };
        pts.push((r, g));
    }
    if pts.len() < 2 {
        return Err(GllError::EmptyGrid);
    }
    let integral: f64 = pts.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum();
    Ok(unit_sphere_measure(2 * n) * integral)
}

/// Unchecked kernel of the tension field, shared with the PDE stepper.
#[inline]
pub fn tension_raw(u: &Vec3, u_r: &Vec3, u_rr: &Vec3, r: f64, n: u32) -> Vec3 {
    let k = 2.0 * n as f64 - 1.0;
    let c = (2.0 * n as f64 - 2.0 + u.z) / (r * r);
    let x = u_rr + u_r * (k / r) + e3() * c;
    let once = x - u * u.dot(&x);
    once - u * u.dot(&once)
}

/// Unchecked kernel of (αP + βu×)τ.
#[inline]
pub fn gll_rhs_raw(u: &Vec3, u_r: &Vec3, u_rr: &Vec3, r: f64, p: &FlowParams) -> Vec3 {
    let tau = tension_raw(u, u_r, u_rr, r, p.n);
    tau * p.alpha + u.cross(&tau) * p.beta
}

/// P_u(u_rr + ((2n−1)/r) u_r + ((2n−2+u₃)/r²) e₃).
pub fn tension(
    u: &SpherePoint,
    u_r: &Vec3,
    u_rr: &Vec3,
    r: f64,
    n: u32,
) -> Result<TangentVec, GllError> {
    check_r(r)?;
    Ok(TangentVec(tension_raw(&u.vec(), u_r, u_rr, r, n)))
}

pub fn gll_rhs(
    u: &SpherePoint,
    u_r: &Vec3,
    u_rr: &Vec3,
    r: f64,
    params: &FlowParams,
) -> Result<TangentVec, GllError> {
    check_r(r)?;
    Ok(TangentVec(gll_rhs_raw(&u.vec(), u_r, u_rr, r, params)))
}

/// Unchecked kernel of the stereographic right-hand side.
#[inline]
pub fn stereo_rhs_raw(
    f: Complex64,
    fr: Complex64,
    frr: Complex64,
    r: f64,
    p: &FlowParams,
) -> Complex64 {
    let k = 2.0 * p.n as f64 - 1.0;
    let s = f.norm_sqr();
    let d = 1.0 + s;
    let bracket = frr - 2.0 * f.conj() * fr * fr / d + fr * (k / r) - f * (k / (r * r))
        + f * (2.0 * s / (r * r * d));
    p.factor() * bracket
}

pub fn stereo_rhs(
    f: Complex64,
    fr: Complex64,
    frr: Complex64,
    r: f64,
    params: &FlowParams,
) -> Result<Complex64, GllError> {
    check_r(r)?;
    Ok(stereo_rhs_raw(f, fr, frr, r, params))
}

/// (2rv, 1 − |v|²r²)/(1 + |v|²r²) for v in the tangent plane at e₃.
pub fn harmonic_map(v: [f64; 2], r: f64) -> SpherePoint {
    harmonic_map_jet(v, r).0
}

/// Harmonic map with its first two radial derivatives.
pub fn harmonic_map_jet(v: [f64; 2], r: f64) -> (SpherePoint, Vec3, Vec3) {
    let a = v[0] * v[0] + v[1] * v[1];
    if a == 0.0 {
        return (SpherePoint::north(), Vec3::zeros(), Vec3::zeros());
    }
    if !r.is_finite() {
        return (SpherePoint::south(), Vec3::zeros(), Vec3::zeros());
    }
    let ar2 = a * r * r;
    let d = 1.0 + ar2;
    let w = 2.0 * r / d;
    let w_r = 2.0 * (1.0 - ar2) / (d * d);
    let w_rr = -4.0 * a * r * (3.0 - ar2) / (d * d * d);
    let u = Vec3::new(v[0] * w, v[1] * w, 2.0 / d - 1.0);
    let u_r = Vec3::new(v[0] * w_r, v[1] * w_r, -4.0 * a * r / (d * d));
    let u_rr = Vec3::new(v[0] * w_rr, v[1] * w_rr, -4.0 * a * (1.0 - 3.0 * ar2) / (d * d * d));
    (SpherePoint::normalize(u).expect("finite"), u_r, u_rr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pole_maps_to_origin() {
        assert_eq!(stereo_project(&SpherePoint::north()).unwrap(), Complex64::new(0.0, 0.0));
        assert!(matches!(stereo_project(&SpherePoint::south()), Err(GllError::PoleSingularity)));
        let f = stereo_project(&SpherePoint::new(0.6, 0.0, 0.8).unwrap()).unwrap();
        assert!((f.re - 1.0 / 3.0).abs() < 1e-15 && f.im == 0.0);
        let u = stereo_lift(Complex64::new(1.0, 0.0));
        assert!((u.vec() - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn sphere_measures() {
        use std::f64::consts::PI;
        assert!((unit_sphere_measure(2) - 2.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_measure(3) - 4.0 * PI).abs() < 1e-13);
        assert!((unit_sphere_measure(4) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((unit_sphere_measure(6) - PI.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn params_repair_policy() {
        assert!(FlowParams::new(2, 1.0, 1e-2).is_err());
        assert!(FlowParams::new(2, 1.0, 1e-4).is_ok());
        let p = FlowParams::new(2, 1.0 + 1e-8, 0.0).unwrap();
        assert!((p.alpha - 1.0).abs() < 1e-15);
        assert!(FlowParams::new(0, 1.0, 0.0).is_err());
        assert!(FlowParams::new(1, -1.0, 0.0).is_err());
    }

    #[test]
    fn harmonic_map_examples() {
        assert_eq!(harmonic_map([0.0, 0.0], 3.0), SpherePoint::north());
        assert!((harmonic_map([1.0, 0.0], 1.0).vec() - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-15);
        assert!((harmonic_map([1.0, 0.0], 1e3).vec() + e3()).norm() < 2e-3);
    }
}
