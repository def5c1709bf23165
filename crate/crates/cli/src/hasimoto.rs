use anyhow::Result;
use clap::{Subcommand, ValueEnum};
use gll_core::geom::{SpherePoint, TangentVec, Vec3};
use gll_core::hasimoto::{self, QField};
use gll_core::radial_pde::{self as pde, RadialField, RadialGrid};
use rayon::prelude::*;
use serde_json::json;

use crate::run::{mark, Ctx, FlowArgs, Outcome};

#[derive(Subcommand, Debug)]
pub enum Sub {
    /// Exponent table 1/s(i,j) = (i+j)/4 − i/(6p) with Hölder compatibility
    Exponents {
        /// Integrability exponent p ∈ [1, 2] [default: 2]
        #[arg(long)]
        p: Option<f64>,
    },
    /// Transported frame and q for a sampled field
    #[command(allow_negative_numbers = true)]
    Frame {
        /// Field to transform [default: harmonic]
        #[arg(long, value_enum)]
        preset: Option<FramePreset>,
        #[command(flatten)]
        flow: FlowArgs,
        /// Uniform grid spacing [default: 0.005]
        #[arg(long)]
        dr: Option<f64>,
        /// Outer radius [default: 8]
        #[arg(long)]
        r_max: Option<f64>,
        /// Angle of the frame seed in the tangent plane at e3 [default: 0]
        #[arg(long)]
        seed_angle: Option<f64>,
    },
    /// Eigenvalue −(2n−1) of x₁/|x| and the radial Laplacian identity
    Eigen {
        /// Dimensions [default: 1,2,3,4]
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<u32>>,
        /// Random sample points per dimension [default: 100]
        #[arg(long)]
        samples: Option<usize>,
        /// RNG seed [default: 3]
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FramePreset {
    /// Harmonic map with v = (1, 0); |q| = 2/(1+r²)
    Harmonic,
    /// Great-circle bump; q is real
    Bump,
    /// Bump rotating about e3 with angle 0.7r²
    Twisted,
}

impl Sub {
    pub fn name(&self) -> &'static str {
        match self {
            Sub::Exponents { .. } => "exponents",
            Sub::Frame { .. } => "frame",
            Sub::Eigen { .. } => "eigen",
        }
    }
}

pub const EIGEN_TOL: f64 = 1e-10;
pub const LAPW_TOL: f64 = 1e-8;

pub fn run(ctx: &mut Ctx, sub: &Sub) -> Result<Outcome> {
    match sub {
        Sub::Exponents { p } => exponents(ctx, *p),
        Sub::Frame { preset, flow, dr, r_max, seed_angle } => frame(ctx, *preset, flow, *dr, *r_max, *seed_angle),
        Sub::Eigen { n, samples, seed } => eigen(ctx, n.clone(), *samples, *seed),
    }
}

fn exponents(ctx: &mut Ctx, p: Option<f64>) -> Result<Outcome> {
    let p = ctx.cfg.pick(p, "p", 2.0)?;
    ctx.resolved(json!({ "p": p }), json!(null), json!({ "arithmetic": "exact rational" }))?;
    let table = hasimoto::strichartz_exponents(p)?;
    ctx.json("exponents.json", &table)?;
    println!("{}", serde_json::to_string_pretty(&table)?);
    Ok(Outcome { passed: table.holder_ok, residuals: json!({ "r": table.r, "holder_ok": table.holder_ok }) })
}

fn frame(
    ctx: &mut Ctx,
    preset: Option<FramePreset>,
    flow: &FlowArgs,
    dr: Option<f64>,
    r_max: Option<f64>,
    seed_angle: Option<f64>,
) -> Result<Outcome> {
    let c = &ctx.cfg;
    let preset = c.pick(preset, "preset", FramePreset::Harmonic)?;
    let params = flow.resolve(c)?;
    let dr = c.pick(dr, "dr", 0.005)?;
    let r_max = c.pick(r_max, "r-max", 8.0)?;
    let angle = c.pick(seed_angle, "seed-angle", 0.0)?;
    ctx.resolved(
        json!({ "preset": preset, "flow": params, "seed_angle": angle }),
        json!({ "dr": dr, "r_max": r_max, "stencils": "five point, mirrored through the origin" }),
        json!({ "frame": hasimoto::FRAME_TOL, "isometry": hasimoto::FRAME_TOL }),
    )?;
    let grid = RadialGrid::uniform(dr, r_max)?;
    let field: RadialField = match preset {
        FramePreset::Harmonic => pde::harmonic_field(&grid, [1.0, 0.0])?,
        FramePreset::Bump => pde::great_circle_bump(&grid, 1.0, 1.0, 0.0)?,
        FramePreset::Twisted => RadialField::from_fn(&grid, 0.0, |r| {
            let a = pde::bump_angle(1.0, 1.0, r);
            let phi = 0.7 * r * r;
            SpherePoint::normalize(Vec3::new(a.sin() * phi.cos(), a.sin() * phi.sin(), a.cos()))
                .expect("unit by construction")
        })?,
    };
    let seed = TangentVec::new(angle.cos(), angle.sin(), 0.0);
    let fr = hasimoto::transport_frame(&field, seed)?;
    let q: QField = hasimoto::compute_q(&field, &fr, &params)?;
    ctx.csv("q.csv", &QField::CSV_HEADER, &q.csv_rows())?;
    let frame_defect = fr.defect(&field);
    let iso = q.isometry_defect();
    let pe3 = hasimoto::pe3_coordinate_defect(&field, &fr, &q);
    let gauge = hasimoto::gauge_derivative_check(&q, &params);
    let mut report = json!({
        "frame_defect": frame_defect,
        "isometry_defect": iso,
        "pe3_coordinate_defect": pe3,
        "gauge_derivative_defect": gauge,
    });
    if preset == FramePreset::Harmonic {
        let zero = vec![Vec3::zeros(); field.u.len()];
        let ip = hasimoto::ip_residual(&field, &zero, &fr, &q, &params)?;
        let exact = q.r.iter().zip(&q.q).map(|(r, z)| (z.norm() - 2.0 / (1.0 + r * r)).abs()).fold(0.0, f64::max);
        report["stationary_bracket_linf"] = json!(ip.linf);
        report["abs_q_vs_closed_form"] = json!(exact);
    }
    let ok = frame_defect <= hasimoto::FRAME_TOL && iso <= hasimoto::FRAME_TOL;
    println!("frame defect {frame_defect:.3e} [{}]", mark(frame_defect <= hasimoto::FRAME_TOL));
    println!("| |q| - |u_r| | {iso:.3e} [{}]", mark(iso <= hasimoto::FRAME_TOL));
    println!("P e3 frame coordinates defect {pe3:.3e}; gauge derivative defect {gauge:.3e}");
    ctx.json("frame.json", &report)?;
    ctx.plot("plot 'q.csv' using 1:2 with lines, '' using 1:3 with lines, '' using 1:5 with lines\n")?;
    Ok(Outcome { passed: ok, residuals: report })
}

fn eigen(ctx: &mut Ctx, ns: Option<Vec<u32>>, samples: Option<usize>, seed: Option<u64>) -> Result<Outcome> {
    let c = &ctx.cfg;
    let ns = c.pick(ns, "n", vec![1, 2, 3, 4])?;
    let samples = c.pick(samples, "samples", 100)?;
    let seed = c.pick(seed, "seed", 3)?;
    ctx.resolved(
        json!({ "n": ns, "seed": seed }),
        json!({ "samples": samples, "differentiation": "hyper-dual" }),
        json!({ "eigenvalue": EIGEN_TOL, "laplacian": LAPW_TOL }),
    )?;
    let reports = ns
        .par_iter()
        .map(|&n| hasimoto::eigenfunction_check(n, samples, seed))
        .collect::<Result<Vec<_>, _>>()?;
    let mut ok = true;
    for r in &reports {
        let good = r.max_eigen_defect <= EIGEN_TOL && r.lapw_defect <= LAPW_TOL;
        ok &= good;
        println!(
            "n = {}: eigenvalue {} defect {:.3e}, Laplacian identity {:.3e} [{}]",
            r.n, r.expected, r.max_eigen_defect, r.lapw_defect, mark(good)
        );
    }
    ctx.json("eigen.json", &reports)?;
    Ok(Outcome { passed: ok, residuals: json!(reports.iter().map(|r| r.max_eigen_defect).collect::<Vec<_>>()) })
}
