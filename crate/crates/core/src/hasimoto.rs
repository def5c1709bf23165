//! Frame coordinates for u_r: parallel transport, the complex field q with
//! its gauge potential, residuals of the scalar equations, the first sphere
//! harmonic x₁/|x| and Strichartz exponent bookkeeping.
//!
//! With u_r = qe, u_t = pe, D_r e = 0 and D_t e = αg·Je one has
//!
//!   p   = (α+iβ) M,        M = q_r + ((2n−1)/r) q − ((2n−2+u₃)/r²) ∫₀^r u₃q ds
//!   q_t = (α+iβ) M_r − i αg q
//!   αg_r = −Im(p q̄),      αg(0) = 0
//!
//! and the frame coordinates of P e₃ are −∫₀^r u₃q ds. For α = 0, β = −1 these
//! are the familiar i p = M and i q_t = M_r + αg q.

use num_complex::Complex64 as C;
use num_dual::{second_derivative, Dual2_64, DualNum};
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::fd::{fornberg, MirrorStencils, Stencils};
use crate::geom::{e3, FlowParams, TangentVec, Vec3};
use crate::quad::{cumulative_hermite, cumulative_trapezoid};
use crate::radial_pde::{interior_norms, RadialField, ResidualNorm, Trajectory};
use crate::GllError;

pub const FRAME_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct Frame {
    pub e: Vec<TangentVec>,
    pub je: Vec<Vec3>,
}

impl Frame {
    /// Largest of | |e| − 1 |, |⟨e,u⟩|, |⟨e,Je⟩| over nodes.
    pub fn defect(&self, field: &RadialField) -> f64 {
        self.e
            .iter()
            .zip(&self.je)
            .zip(&field.u)
            .map(|((e, je), u)| {
                let e = e.vec();
                (e.norm() - 1.0).abs().max(e.dot(&u.vec()).abs()).max(e.dot(je).abs())
            })
            .fold(0.0, f64::max)
    }

    /// The frame turned by θ inside each tangent plane: e ↦ cos θ e + sin θ Je.
    pub fn rotated(&self, theta: f64) -> Frame {
        let (s, c) = theta.sin_cos();
        let e: Vec<TangentVec> =
            self.e.iter().zip(&self.je).map(|(e, je)| TangentVec(e.vec() * c + je * s)).collect();
        let je = e.iter().zip(&self.je).zip(&self.e).map(|((_, je), e)| je * c - e.vec() * s).collect();
        Frame { e, je }
    }
}

/// Rotation about a × b taking the unit vector a to b, applied to x.
fn geodesic_rotate(a: &Vec3, b: &Vec3, x: &Vec3) -> Result<Vec3, GllError> {
    let k = a.cross(b);
    let c = a.dot(b);
    if c <= -1.0 + 1e-12 {
        return Err(GllError::Domain("neighbouring nodes are antipodal".into()));
    }
    Ok(x * c + k.cross(x) + k * (k.dot(x) / (1.0 + c)))
}

/// Discrete parallel transport: each step rotates e along the geodesic chord
/// from u_j to u_{j+1}, then re-orthonormalizes against u_{j+1}.
pub fn transport_frame(field: &RadialField, e_seed: TangentVec) -> Result<Frame, GllError> {
    let s = e_seed.vec();
    if (s.norm() - 1.0).abs() > FRAME_TOL || s.dot(&e3()).abs() > FRAME_TOL {
        return Err(GllError::Domain("seed must be a unit vector orthogonal to e3".into()));
    }
    let u = field.vecs();
    let mut e = Vec::with_capacity(u.len());
    let mut je = Vec::with_capacity(u.len());
    let mut cur = s;
    for j in 0..u.len() {
        if j > 0 {
            cur = geodesic_rotate(&u[j - 1], &u[j], &cur)?;
        }
        cur -= u[j] * cur.dot(&u[j]);
        cur /= cur.norm();
        e.push(TangentVec(cur));
        je.push(u[j].cross(&cur));
    }
    Ok(Frame { e, je })
}

fn coords(w: &Vec3, e: &TangentVec, je: &Vec3) -> C {
    C::new(w.dot(&e.vec()), w.dot(je))
}

#[derive(Clone, Debug, Serialize)]
pub struct QField {
    pub r: Vec<f64>,
    pub q: Vec<C>,
    /// Gauge potential αg with αg(0) = 0.
    pub ag: Vec<f64>,
    /// Tangential part of the five point u_r.
    pub u_r: Vec<Vec3>,
    pub u3: Vec<f64>,
    /// ∫₀^r u₃ q ds.
    pub integral: Vec<C>,
    pub q_r: Vec<C>,
    pub q_rr: Vec<C>,
    /// M at every node; the origin value is extrapolated.
    pub m: Vec<C>,
}

impl QField {
    pub const CSV_HEADER: [&'static str; 5] = ["r", "re_q", "im_q", "ag", "abs_u_r"];

    pub fn csv_rows(&self) -> Vec<Vec<f64>> {
        (0..self.r.len())
            .map(|j| vec![self.r[j], self.q[j].re, self.q[j].im, self.ag[j], self.u_r[j].norm()])
            .collect()
    }

    /// max | |q| − |u_r| |.
    pub fn isometry_defect(&self) -> f64 {
        self.q.iter().zip(&self.u_r).map(|(q, ur)| (q.norm() - ur.norm()).abs()).fold(0.0, f64::max)
    }

    /// M_r from q_rr, q_r, q and the stored integral, at an interior node.
    pub fn m_r(&self, j: usize, n: u32) -> C {
        let k = 2.0 * n as f64 - 1.0;
        let r = self.r[j];
        let b = 2.0 * n as f64 - 2.0 + self.u3[j];
        let c = b / (r * r);
        let c_r = self.u_r[j].z / (r * r) - 2.0 * b / (r * r * r);
        self.q_rr[j] + self.q_r[j] * (k / r) - self.q[j] * (k / (r * r))
            - self.integral[j] * c_r
            - self.q[j] * (c * self.u3[j])
    }
}

/// q = ⟨u_r,e⟩ + i⟨u_r,Je⟩ with u_r from five point differences.
pub fn compute_q(field: &RadialField, frame: &Frame, params: &FlowParams) -> Result<QField, GllError> {
    let u = field.vecs();
    let raw = field.derivative();
    let u_r: Vec<Vec3> = raw.iter().zip(&u).map(|(d, x)| d - x * d.dot(x)).collect();
    compute_q_from(&field.r, &u, &u_r, frame, params)
}

/// Same as [`compute_q`] with caller-supplied tangent derivatives.
pub fn compute_q_from(
    r: &[f64],
    u: &[Vec3],
    u_r: &[Vec3],
    frame: &Frame,
    params: &FlowParams,
) -> Result<QField, GllError> {
    let len = r.len();
    if u.len() != len || u_r.len() != len || frame.e.len() != len || len < 6 {
        return Err(GllError::Domain("grids do not match".into()));
    }
    let q: Vec<C> = (0..len).map(|j| coords(&u_r[j], &frame.e[j], &frame.je[j])).collect();
    // q is even in r for equivariant data.
    let st = MirrorStencils::new(r, 5);
    let (q_r, q_rr): (Vec<C>, Vec<C>) = (0..len).map(|j| st.apply(j, &q, |z| z)).unzip();
    let u3: Vec<f64> = u.iter().map(|x| x.z).collect();
    let f: Vec<C> = (0..len).map(|j| q[j] * u3[j]).collect();
    let df: Vec<C> = (0..len).map(|j| q[j] * u_r[j].z + q_r[j] * u3[j]).collect();
    let integral = cumulative_hermite(r, &f, &df);
    let k = 2.0 * params.nf() - 1.0;
    let mut m = vec![C::new(0.0, 0.0); len];
    for j in 1..len {
        let c = (2.0 * params.nf() - 2.0 + u3[j]) / (r[j] * r[j]);
        m[j] = q_r[j] + q[j] * (k / r[j]) - integral[j] * c;
    }
    let w = fornberg(r[0], &r[1..4], 0);
    m[0] = m[1] * w[0][0] + m[2] * w[0][1] + m[3] * w[0][2];
    let z = params.factor();
    let dag: Vec<f64> = (0..len).map(|j| -(z * m[j] * q[j].conj()).im).collect();
    let ag = cumulative_trapezoid(r, &dag);
    Ok(QField { r: r.to_vec(), q, ag, u_r: u_r.to_vec(), u3, integral, q_r, q_rr, m })
}

/// max |coords(P e₃) + ∫₀^r u₃q| over nodes.
pub fn pe3_coordinate_defect(field: &RadialField, frame: &Frame, qf: &QField) -> f64 {
    field
        .u
        .iter()
        .enumerate()
        .map(|(j, u)| {
            let pe3 = u.project(&e3());
            (coords(&pe3, &frame.e[j], &frame.je[j]) + qf.integral[j]).norm()
        })
        .fold(0.0, f64::max)
}

/// p − (α+iβ)M over interior nodes, with p the frame coordinates of u_t.
pub fn ip_residual(
    field: &RadialField,
    u_t: &[Vec3],
    frame: &Frame,
    qf: &QField,
    params: &FlowParams,
) -> Result<ResidualNorm, GllError> {
    if u_t.len() != field.u.len() {
        return Err(GllError::Domain("u_t does not match the grid".into()));
    }
    let z = params.factor();
    let res: Vec<f64> = (0..u_t.len())
        .map(|j| (coords(&u_t[j], &frame.e[j], &frame.je[j]) - z * qf.m[j]).norm())
        .collect();
    Ok(interior_norms(&field.r, field.t, params.n, |j| res[j]))
}

/// Frames and q for every stored frame, all seeded by the same vector at e₃.
/// Because αg(0) = 0 the constant seed is the time-coherent choice.
pub fn trajectory_q(traj: &Trajectory, seed: TangentVec) -> Result<Vec<(Frame, QField)>, GllError> {
    use rayon::prelude::*;
    traj.frames
        .par_iter()
        .map(|f| {
            let fr = transport_frame(f, seed)?;
            let q = compute_q(f, &fr, &traj.params)?;
            Ok((fr, q))
        })
        .collect()
}

fn need_frames(traj: &Trajectory) -> Result<(), GllError> {
    if traj.frames.len() < 3 {
        return Err(GllError::Domain("need at least three frames".into()));
    }
    Ok(())
}

/// p − (α+iβ)M at every interior frame with u_t from centered differences.
pub fn ip_residual_trajectory(traj: &Trajectory, seed: TangentVec) -> Result<Vec<ResidualNorm>, GllError> {
    need_frames(traj)?;
    let fq = trajectory_q(traj, seed)?;
    (1..traj.frames.len() - 1)
        .map(|k| {
            let (a, b, c) = (&traj.frames[k - 1], &traj.frames[k], &traj.frames[k + 1]);
            let tau = c.t - a.t;
            let u_t: Vec<Vec3> =
                c.u.iter().zip(&a.u).map(|(x, y)| (x.vec() - y.vec()) / tau).collect();
            ip_residual(b, &u_t, &fq[k].0, &fq[k].1, &traj.params)
        })
        .collect()
}

/// q_t − [(α+iβ)M_r − i αg q] with centered q_t, over interior frames and nodes.
pub fn qpde_residual(traj: &Trajectory, seed: TangentVec) -> Result<Vec<ResidualNorm>, GllError> {
    need_frames(traj)?;
    let fq = trajectory_q(traj, seed)?;
    let z = params_factor(traj);
    let n = traj.params.n;
    let r = &traj.frames[0].r;
    Ok((1..traj.frames.len() - 1)
        .map(|k| {
            let tau = traj.frames[k + 1].t - traj.frames[k - 1].t;
            let qf = &fq[k].1;
            let res: Vec<f64> = (0..r.len())
                .map(|j| {
                    if j == 0 || j == r.len() - 1 {
                        return 0.0;
                    }
                    let qt = (fq[k + 1].1.q[j] - fq[k - 1].1.q[j]) / tau;
                    let rhs = z * qf.m_r(j, n) - C::new(0.0, qf.ag[j]) * qf.q[j];
                    (qt - rhs).norm()
                })
                .collect();
            interior_norms(r, traj.frames[k].t, n, |j| res[j])
        })
        .collect())
}

fn params_factor(traj: &Trajectory) -> C {
    traj.params.factor()
}

/// Compares αg from the cumulative integral with ⟨e_t, Je⟩ measured from the
/// transported frames. Returns the weighted L² / max difference per frame.
pub fn gauge_time_check(traj: &Trajectory, seed: TangentVec) -> Result<Vec<ResidualNorm>, GllError> {
    need_frames(traj)?;
    let fq = trajectory_q(traj, seed)?;
    let r = &traj.frames[0].r;
    let n = traj.params.n;
    Ok((1..traj.frames.len() - 1)
        .map(|k| {
            let tau = traj.frames[k + 1].t - traj.frames[k - 1].t;
            let res: Vec<f64> = (0..r.len())
                .map(|j| {
                    let et = (fq[k + 1].0.e[j].vec() - fq[k - 1].0.e[j].vec()) / tau;
                    (et.dot(&fq[k].0.je[j]) - fq[k].1.ag[j]).abs()
                })
                .collect();
            interior_norms(r, traj.frames[k].t, n, |j| res[j])
        })
        .collect())
}

/// max over interior nodes of |αg_r − (−Im(p q̄))| with αg_r by differences.
pub fn gauge_derivative_check(qf: &QField, params: &FlowParams) -> f64 {
    let st = Stencils::new(&qf.r, 5, 0, qf.r.len() - 1);
    let z = params.factor();
    (1..qf.r.len() - 1)
        .map(|j| (st.apply(j, &qf.ag).0 + (z * qf.m[j] * qf.q[j].conj()).im).abs())
        .fold(0.0, f64::max)
}

fn first_harmonic<D: DualNum<Primitive = f64>>(x: &[D]) -> D {
    let r2: D = x.iter().map(|v| v.clone() * v.clone()).sum();
    x[0].clone() / r2.sqrt()
}

/// Euclidean Laplacian of g at x by exact second derivatives along each axis.
fn laplacian<G>(g: G, x: &[f64]) -> f64
where
    G: Fn(&[Dual2_64]) -> Dual2_64,
{
    (0..x.len())
        .map(|i| {
            let (_, _, d2) = second_derivative(
                |t: Dual2_64| {
                    let pt: Vec<Dual2_64> = x
                        .iter()
                        .enumerate()
                        .map(|(k, &v)| if k == i { t + v } else { Dual2_64::from(v) })
                        .collect();
                    g(&pt)
                },
                0.0,
            );
            d2
        })
        .sum()
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenReport {
    pub n: u32,
    pub dimension: u32,
    pub expected: f64,
    pub samples: usize,
    /// max |r²Δa/a − (−(2n−1))| over samples with |a| ≥ 1e-3.
    pub max_eigen_defect: f64,
    /// Value at a point of the x₁-axis, where a = 1.
    pub axis_eigenvalue: f64,
    /// max relative mismatch of Δ(q(r)a) against the radial operator times a.
    pub lapw_defect: f64,
}

/// Checks that a = x₁/|x| restricted to S^{2n−1} has eigenvalue −(2n−1), and the
/// composite identity Δ(q(r)a) = (q_rr + ((2n−1)/r)q_r − ((2n−1)/r²)q)a.
pub fn eigenfunction_check(n: u32, samples: usize, seed: u64) -> Result<EigenReport, GllError> {
    if n < 1 || samples == 0 {
        return Err(GllError::Domain("need n >= 1 and at least one sample".into()));
    }
    let d = 2 * n as usize;
    let k = d as f64 - 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut axis = vec![0.0; d];
    axis[0] = 1.3;
    let axis_eigenvalue = 1.3f64.powi(2) * laplacian(first_harmonic, &axis);
    let mut max_eigen_defect: f64 = 0.0;
    let mut lapw_defect: f64 = 0.0;
    let mut taken = 0;
    while taken < samples {
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let a = x[0] / r;
        if r < 0.2 || a.abs() < 1e-3 {
            continue;
        }
        taken += 1;
        let lam = r * r * laplacian(first_harmonic, &x) / a;
        max_eigen_defect = max_eigen_defect.max((lam + k).abs());
        let c: [f64; 3] = [rng.gen_range(0.5..2.0), rng.gen_range(0.2..1.5), rng.gen_range(-1.0..1.0)];
        let qfun = |s: Dual2_64| (s * c[1]).tanh() * c[0] + s * s * (-s).exp() * c[2];
        let (q, q1, q2) = second_derivative(qfun, r);
        let lhs = laplacian(
            |p: &[Dual2_64]| {
                let rr: Dual2_64 = p.iter().map(|v| *v * *v).sum::<Dual2_64>().sqrt();
                qfun(rr) * first_harmonic(p)
            },
            &x,
        );
        let rhs = (q2 + k / r * q1 - k / (r * r) * q) * a;
        lapw_defect = lapw_defect.max((lhs - rhs).abs() / (1.0 + rhs.abs()));
    }
    Ok(EigenReport {
        n,
        dimension: d as u32,
        expected: -k,
        samples,
        max_eigen_defect,
        axis_eigenvalue,
        lapw_defect,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ExponentEntry {
    pub i: i64,
    pub j: i64,
    pub inv_s: Rational64,
    pub s: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HolderCheck {
    pub left: (i64, i64),
    pub right: (i64, i64),
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExponentTable {
    pub p: f64,
    pub r: f64,
    pub entries: Vec<ExponentEntry>,
    pub holder: Vec<HolderCheck>,
    pub holder_ok: bool,
}

pub const EXPONENT_INDICES: [(i64, i64); 5] = [(1, 0), (1, 1), (2, 0), (2, 1), (3, 1)];

/// 1/s(i,j) = (i+j)/4 − i/(6p) in exact rational arithmetic.
pub fn inverse_index(p: Rational64, i: i64, j: i64) -> Rational64 {
    Rational64::new(i + j, 4) - Rational64::from_integer(i) / (p * 6)
}

pub fn strichartz_exponents(p: f64) -> Result<ExponentTable, GllError> {
    if !(1.0..=2.0).contains(&p) {
        return Err(GllError::Domain(format!("p must lie in [1, 2], got {p}")));
    }
    let pr = Rational64::approximate_float(p)
        .ok_or_else(|| GllError::Domain(format!("p = {p} has no rational form")))?;
    let to_f = |x: Rational64| *x.numer() as f64 / *x.denom() as f64;
    let entries: Vec<ExponentEntry> = EXPONENT_INDICES
        .iter()
        .map(|&(i, j)| {
            let inv = inverse_index(pr, i, j);
            ExponentEntry { i, j, inv_s: inv, s: 1.0 / to_f(inv) }
        })
        .collect();
    let mut holder = Vec::new();
    for &a in &EXPONENT_INDICES {
        for &b in &EXPONENT_INDICES {
            let sum = (a.0 + b.0, a.1 + b.1);
            if EXPONENT_INDICES.contains(&sum) {
                let holds = inverse_index(pr, sum.0, sum.1)
                    == inverse_index(pr, a.0, a.1) + inverse_index(pr, b.0, b.1);
                holder.push(HolderCheck { left: a, right: b, holds });
            }
        }
    }
    let r_inv = Rational64::new(1, 2) - Rational64::from_integer(1) / (pr * 6);
    Ok(ExponentTable {
        p,
        r: 1.0 / to_f(r_inv),
        holder_ok: holder.iter().all(|h| h.holds),
        entries,
        holder,
    })
}

impl ExponentTable {
    pub fn s(&self, i: i64, j: i64) -> Option<f64> {
        self.entries.iter().find(|e| e.i == i && e.j == j).map(|e| e.s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial_pde::{harmonic_field, RadialGrid};

    #[test]
    fn exponents_examples() {
        let t = strichartz_exponents(2.0).unwrap();
        assert_eq!(t.r, 2.4);
        assert_eq!(t.s(1, 1), Some(t.r));
        assert_eq!(strichartz_exponents(1.0).unwrap().s(3, 1), Some(2.0));
        assert!(t.holder_ok && !t.holder.is_empty());
        assert!(strichartz_exponents(2.5).is_err());
    }

    #[test]
    fn constant_field_gives_zero_q() {
        let g = RadialGrid::uniform(0.1, 3.0).unwrap();
        let f = RadialField::from_fn(&g, 0.0, |_| crate::geom::SpherePoint::north()).unwrap();
        let seed = TangentVec::new(1.0, 0.0, 0.0);
        let fr = transport_frame(&f, seed).unwrap();
        assert!(fr.e.iter().all(|e| e.vec() == seed.vec()));
        let q = compute_q(&f, &fr, &FlowParams::heat(2)).unwrap();
        assert!(q.q.iter().all(|z| z.norm() == 0.0) && q.ag.iter().all(|a| *a == 0.0));
    }

    #[test]
    fn harmonic_map_q_modulus() {
        let g = RadialGrid::uniform(0.01, 6.0).unwrap();
        let f = harmonic_field(&g, [1.0, 0.0]).unwrap();
        let fr = transport_frame(&f, TangentVec::new(1.0, 0.0, 0.0)).unwrap();
        assert!(fr.defect(&f) < FRAME_TOL);
        let q = compute_q(&f, &fr, &FlowParams::heat(2)).unwrap();
        let worst = q.r.iter().zip(&q.q).map(|(r, z)| (z.norm() - 2.0 / (1.0 + r * r)).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-6, "{worst}");
        assert!(q.isometry_defect() < FRAME_TOL);
    }

    #[test]
    fn eigenvalue_n2() {
        let rep = eigenfunction_check(2, 20, 7).unwrap();
        assert!(rep.max_eigen_defect < 1e-10 && (rep.axis_eigenvalue + 3.0).abs() < 1e-12);
        assert!(rep.lapw_defect < 1e-8);
    }
}
