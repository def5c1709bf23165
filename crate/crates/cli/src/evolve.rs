use anyhow::Result;
use clap::ValueEnum;
use gll_core::geom::FlowParams;
use gll_core::radial_pde::{self as pde, Boundary, EvolveConfig, RadialField, RadialGrid, Trajectory};
use gll_core::selfsim::{self, SelfSimProfile};
use serde_json::{json, Value};

use crate::run::{Ctx, FlowArgs, Outcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
pub enum Preset {
    /// Harmonic map (2rv, 1 − |v|²r²)/(1 + |v|²r²); reports stationarity drift
    Harmonic,
    /// Great-circle bump; reports great-circle deviation and energy
    Bump,
    /// ψ(r/√t₀) from a self-similar profile; reports tracking of ψ(r/√t)
    Selfsim,
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Harmonic => "harmonic",
            Preset::Bump => "bump",
            Preset::Selfsim => "selfsim",
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryArg {
    Clamp,
    Neumann,
}

impl From<BoundaryArg> for Boundary {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Clamp => Boundary::Clamp,
            BoundaryArg::Neumann => Boundary::Neumann,
        }
    }
}

#[derive(clap::Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct Args {
    /// Initial data
    #[arg(long, value_enum)]
    pub preset: Preset,
    #[command(flatten)]
    pub flow: FlowArgs,
    /// Uniform grid spacing [default: 0.05]
    #[arg(long)]
    pub dr: Option<f64>,
    /// Outer radius [default: 20 harmonic, 10 otherwise]
    #[arg(long)]
    pub r_max: Option<f64>,
    /// Evolution time span [default: 1 harmonic, 0.1 bump, 0.5 selfsim]
    #[arg(long)]
    pub t: Option<f64>,
    /// Spacing of stored frames [default: t/10]
    #[arg(long)]
    pub save_dt: Option<f64>,
    /// Time step as a fraction of Δr² [default: 0.1]
    #[arg(long)]
    pub dt_factor: Option<f64>,
    /// Outer boundary policy [default: clamp]
    #[arg(long, value_enum)]
    pub boundary: Option<BoundaryArg>,
    /// Rerun with the other boundary policy and report the difference
    #[arg(long)]
    pub compare_boundary: bool,
    /// Harmonic and self-similar data v, first component [default: 1]
    #[arg(long)]
    pub v1: Option<f64>,
    /// Harmonic and self-similar data v, second component [default: 0]
    #[arg(long)]
    pub v2: Option<f64>,
    /// Bump amplitude [default: 1]
    #[arg(long)]
    pub amp: Option<f64>,
    /// Bump width [default: 1]
    #[arg(long)]
    pub width: Option<f64>,
    /// Bump great-circle direction angle [default: 0]
    #[arg(long)]
    pub theta: Option<f64>,
    /// Start time of self-similar data [default: 1]
    #[arg(long)]
    pub t0: Option<f64>,
}

struct Setup {
    preset: Preset,
    params: FlowParams,
    grid: RadialGrid,
    cfg: EvolveConfig,
    v: [f64; 2],
    theta: f64,
    profile: Option<SelfSimProfile>,
}

pub fn run(ctx: &mut Ctx, a: &Args) -> Result<Outcome> {
    let c = &ctx.cfg;
    let params = a.flow.resolve(c)?;
    let dr = c.pick(a.dr, "dr", 0.05)?;
    let r_max = c.pick(a.r_max, "r-max", if a.preset == Preset::Harmonic { 20.0 } else { 10.0 })?;
    let t_default = match a.preset {
        Preset::Harmonic => 1.0,
        Preset::Bump => 0.1,
        Preset::Selfsim => 0.5,
    };
    let t = c.pick(a.t, "t", t_default)?;
    let save_dt = c.pick(a.save_dt, "save-dt", t / 10.0)?;
    let dt_factor = c.pick(a.dt_factor, "dt-factor", pde::DEFAULT_DT_FACTOR)?;
    let boundary: Boundary = c.pick(a.boundary, "boundary", BoundaryArg::Clamp)?.into();
    let compare = a.compare_boundary || c.get::<bool>("compare-boundary")?.unwrap_or(false);
    let v = [c.pick(a.v1, "v1", 1.0)?, c.pick(a.v2, "v2", 0.0)?];
    let amp = c.pick(a.amp, "amp", 1.0)?;
    let width = c.pick(a.width, "width", 1.0)?;
    let theta = c.pick(a.theta, "theta", 0.0)?;
    let t0 = c.pick(a.t0, "t0", 1.0)?;
    let cfg = EvolveConfig { dt_factor, boundary, save_dt: Some(save_dt), ..Default::default() };
    ctx.resolved(
        json!({
            "preset": a.preset, "flow": params, "t": t, "v": v,
            "amp": amp, "width": width, "theta": theta, "t0": t0,
        }),
        json!({ "dr": dr, "r_max": r_max, "dt_factor": dt_factor, "save_dt": save_dt, "scheme": "rk4", "boundary": boundary }),
        json!({ "drift_abort": pde::DRIFT_ABORT }),
    )?;
    let grid = RadialGrid::uniform(dr, r_max)?;
    let (field, profile) = match a.preset {
        Preset::Harmonic => (pde::harmonic_field(&grid, v)?, None),
        Preset::Bump => (pde::great_circle_bump(&grid, amp, width, theta)?, None),
        Preset::Selfsim => {
            let rho_max = (r_max / t0.sqrt()).max(10.0) * 1.05;
            let tol = if params.alpha == 0.0 { 1e-12 } else { 1e-10 };
            let prof = selfsim::solve_profile(v, params, rho_max, tol)?;
            (pde::selfsim_field(&grid, &prof, t0)?, Some(prof))
        }
    };
    let s = Setup { preset: a.preset, params, grid, cfg, v, theta, profile };
    let tr = pde::evolve(&field, params, t, &s.cfg)?;
    write_trajectory(ctx, &tr)?;
    let res = pde::residual(&tr, &params)?;
    let rows: Vec<Vec<f64>> = res.iter().map(|x| vec![x.t, x.l2, x.l2_flat, x.linf]).collect();
    ctx.csv("residual.csv", &["t", "l2", "l2_flat", "linf"], &rows)?;
    let mut report = metric(&s, &tr)?;
    report["residual_max_l2"] = json!(res.iter().map(|x| x.l2).fold(0.0, f64::max));
    report["steps"] = json!(tr.steps);
    report["dt"] = json!(tr.dt);
    report["max_norm_drift"] = json!(tr.max_drift);
    if compare {
        let other = match boundary {
            Boundary::Clamp => Boundary::Neumann,
            Boundary::Neumann => Boundary::Clamp,
        };
        let cfg2 = EvolveConfig { boundary: other, ..s.cfg.clone() };
        let tr2 = pde::evolve(&field, params, t, &cfg2)?;
        let (f1, f2) = (tr.frames.last().unwrap(), tr2.frames.last().unwrap());
        let r_cmp = 0.5 * s.grid.r_max();
        let diff = f1
            .r
            .iter()
            .zip(f1.u.iter().zip(&f2.u))
            .filter(|(r, _)| **r <= r_cmp)
            .map(|(_, (x, y))| (x.vec() - y.vec()).norm())
            .fold(0.0, f64::max);
        report["boundary_comparison"] = json!({
            "other": other,
            "other_metric": metric(&s, &tr2)?,
            "final_frame_difference_inner_half": diff,
        });
        println!("boundary {boundary:?} vs {other:?}: final difference on r <= {r_cmp} is {diff:.3e}");
    }
    ctx.json("report.json", &report)?;
    ctx.plot("set logscale y\nplot 'residual.csv' using 1:2 with linespoints, '' using 1:4 with linespoints\n")?;
    Ok(Outcome { passed: true, residuals: report })
}

/// Preset-specific diagnostic, printed and returned.
fn metric(s: &Setup, tr: &Trajectory) -> Result<Value> {
    let dr2 = s.grid.dr_min().powi(2);
    Ok(match s.preset {
        Preset::Harmonic => {
            let d = pde::drift_from_initial(tr);
            println!("stationarity drift max |u(t) - u(0)| = {d:.3e} ({:.3} dr^2)", d / dr2);
            json!({ "stationarity_drift": d, "drift_over_dr2": d / dr2 })
        }
        Preset::Bump => {
            let dev = pde::great_circle_deviation(tr, [s.theta.cos(), s.theta.sin()]);
            let energy: Vec<[f64; 2]> = tr
                .frames
                .iter()
                .map(|f| Ok([f.t, f.energy(s.params.n)?]))
                .collect::<Result<_, gll_core::GllError>>()?;
            println!("great-circle deviation {dev:.3e}; energy {:.6} -> {:.6}", energy[0][1], energy[energy.len() - 1][1]);
            json!({ "great_circle_deviation": dev, "energy": energy })
        }
        Preset::Selfsim => {
            let prof = s.profile.as_ref().expect("self-similar preset carries its profile");
            let r_cmp = 0.5 * s.grid.r_max();
            let errs: Vec<[f64; 2]> =
                tr.frames.iter().map(|f| [f.t, pde::selfsim_tracking_error(f, prof, r_cmp)]).collect();
            let worst = errs.iter().map(|e| e[1]).fold(0.0, f64::max);
            println!("self-similar tracking error on r <= {r_cmp}: {worst:.3e} ({:.3} dr^2)", worst / dr2);
            json!({ "v": s.v, "r_compare": r_cmp, "tracking_error": errs, "max_tracking_error": worst, "tracking_over_dr2": worst / dr2 })
        }
    })
}

fn write_trajectory(ctx: &mut Ctx, tr: &Trajectory) -> Result<()> {
    let rows: Vec<Vec<f64>> = tr
        .frames
        .iter()
        .flat_map(|f: &RadialField| f.r.iter().zip(&f.u).map(move |(r, u)| vec![f.t, *r, u.x1(), u.x2(), u.x3()]))
        .collect();
    ctx.csv("trajectory.csv", &["t", "r", "u1", "u2", "u3"], &rows)
}
