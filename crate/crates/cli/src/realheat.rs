use anyhow::{bail, Result};
use clap::{Subcommand, ValueEnum};
use gll_core::real_flow::{self, RealProfile, SlopeConvention, Verdict};
use rayon::prelude::*;
use serde_json::json;

use crate::run::{mark, Ctx, Outcome};

#[derive(Subcommand, Debug)]
pub enum Sub {
    /// Uniqueness class of the real flow from η′ against −(d−2)²/4
    Classify {
        /// Complex dimension n ≥ 1 [default: 2]
        #[arg(long)]
        n: Option<u32>,
    },
    /// Residual of 2·arctan(αr) in the stationary equation, swept over n and α
    Stationary {
        /// Dimensions [default: 2,3,4,5,6,7,8]
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<u32>>,
        /// Scales α [default: 0.5,1,2]
        #[arg(long, value_delimiter = ',')]
        alpha: Option<Vec<f64>>,
        /// Sample radii [default: 0.1,1,10]
        #[arg(long, value_delimiter = ',')]
        r: Option<Vec<f64>>,
        /// Largest accepted residual [default: 1e-10]
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Self-similar real profiles φ_β and their comparison orderings
    Selfsim {
        /// Complex dimension [default: 3]
        #[arg(long)]
        n: Option<u32>,
        /// Curve labels β [default: 0.25,0.5,1,2,4.5]
        #[arg(long, value_delimiter = ',')]
        beta: Option<Vec<f64>>,
        /// Outer radius [default: 30]
        #[arg(long)]
        r_max: Option<f64>,
        /// Origin slope convention [default: doubled]
        #[arg(long, value_enum)]
        convention: Option<Convention>,
        /// Integrator relative tolerance [default: 1e-10]
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Energy comparison of h = π − (δ/2)f_ε against the equator map (n = 2)
    Witness {
        /// Values of ε [default: 1e-2,1e-3,1e-4,1e-5,1e-6,1e-7,1e-8]
        #[arg(long, value_delimiter = ',')]
        epsilon: Option<Vec<f64>>,
        /// Values of δ [default: 25 log-spaced points on [1e-3, π]]
        #[arg(long, value_delimiter = ',')]
        delta: Option<Vec<f64>>,
        /// Gauss panels per quadrature interval [default: 64]
        #[arg(long)]
        panels: Option<usize>,
    },
    /// Fit the digitized reference figure over n and the slope convention
    Figure {
        /// Candidate dimensions [default: 2,3,4]
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<u32>>,
        /// Plot-unit tolerance per point [default: 2e-3]
        #[arg(long)]
        tol: Option<f64>,
        /// Integrator relative tolerance [default: 1e-10]
        #[arg(long)]
        rel_tol: Option<f64>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    Label,
    Doubled,
}

impl From<Convention> for SlopeConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::Label => SlopeConvention::Label,
            Convention::Doubled => SlopeConvention::Doubled,
        }
    }
}

impl Sub {
    pub fn name(&self) -> &'static str {
        match self {
            Sub::Classify { .. } => "classify",
            Sub::Stationary { .. } => "stationary",
            Sub::Selfsim { .. } => "selfsim",
            Sub::Witness { .. } => "witness",
            Sub::Figure { .. } => "figure",
        }
    }
}

/// Witness search grid: δ log-spaced on [1e-3, π].
fn default_deltas() -> Vec<f64> {
    let (lo, hi) = (1e-3f64.ln(), std::f64::consts::PI.ln());
    (0..25).map(|j| (lo + (hi - lo) * j as f64 / 24.0).exp().min(std::f64::consts::PI)).collect()
}

pub fn run(ctx: &mut Ctx, sub: &Sub) -> Result<Outcome> {
    match sub {
        Sub::Classify { n } => classify(ctx, *n),
        Sub::Stationary { n, alpha, r, tol } => stationary(ctx, n.clone(), alpha.clone(), r.clone(), *tol),
        Sub::Selfsim { n, beta, r_max, convention, tol } => {
            selfsim(ctx, *n, beta.clone(), *r_max, *convention, *tol)
        }
        Sub::Witness { epsilon, delta, panels } => witness(ctx, epsilon.clone(), delta.clone(), *panels),
        Sub::Figure { n, tol, rel_tol } => figure(ctx, n.clone(), *tol, *rel_tol),
    }
}

fn classify(ctx: &mut Ctx, n: Option<u32>) -> Result<Outcome> {
    let n = ctx.cfg.pick(n, "n", 2)?;
    ctx.resolved(json!({ "n": n }), json!({ "min_search": "closed form in cos x" }), json!(null))?;
    let rep = real_flow::classify_uniqueness(n)?;
    let verdict = match rep.verdict {
        Verdict::Nonunique => "nonunique",
        Verdict::Unique => "unique",
        Verdict::Borderline => "borderline",
    };
    println!("{verdict}");
    println!(
        "eta'(pi) = {} eta'''(pi) = {} min eta' = {:.15} threshold = {}",
        rep.eta_prime_at_pi_exact, rep.eta_third_at_pi_exact, rep.min_eta_prime, rep.threshold
    );
    ctx.json("classification.json", &rep)?;
    Ok(Outcome { passed: true, residuals: json!({ "verdict": verdict }) })
}

fn stationary(
    ctx: &mut Ctx,
    ns: Option<Vec<u32>>,
    alphas: Option<Vec<f64>>,
    rs: Option<Vec<f64>>,
    tol: Option<f64>,
) -> Result<Outcome> {
    let cfg = &ctx.cfg;
    let ns = cfg.pick(ns, "n", (2..=8).collect())?;
    let alphas = cfg.pick(alphas, "alpha", vec![0.5, 1.0, 2.0])?;
    let rs = cfg.pick(rs, "r", vec![0.1, 1.0, 10.0])?;
    let tol = cfg.pick(tol, "tol", 1e-10)?;
    ctx.resolved(json!({ "n": ns, "alpha": alphas }), json!({ "r": rs }), json!({ "residual": tol }))?;
    let jobs: Vec<(u32, f64)> = ns.iter().flat_map(|&n| alphas.iter().map(move |&a| (n, a))).collect();
    let rows: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(n, a)| Ok(vec![n as f64, a, real_flow::stationary_residual(a, &rs, n)?]))
        .collect::<Result<_, gll_core::GllError>>()?;
    let worst = rows.iter().map(|r| r[2]).fold(0.0, f64::max);
    ctx.csv("stationary.csv", &["n", "alpha", "residual"], &rows)?;
    let ok = worst <= tol;
    println!("max stationary residual {worst:.3e} (tol {tol:e}) [{}]", mark(ok));
    Ok(Outcome { passed: ok, residuals: json!({ "max_residual": worst }) })
}

fn selfsim(
    ctx: &mut Ctx,
    n: Option<u32>,
    betas: Option<Vec<f64>>,
    r_max: Option<f64>,
    conv: Option<Convention>,
    tol: Option<f64>,
) -> Result<Outcome> {
    let cfg = &ctx.cfg;
    let n = cfg.pick(n, "n", 3)?;
    let betas = cfg.pick(betas, "beta", vec![0.25, 0.5, 1.0, 2.0, 4.5])?;
    let r_max = cfg.pick(r_max, "r-max", 30.0)?;
    let conv = cfg.pick(conv, "convention", Convention::Doubled)?;
    let tol = cfg.pick(tol, "tol", 1e-10)?;
    ctx.resolved(
        json!({ "n": n, "beta": betas, "convention": conv }),
        json!({ "r_max": r_max }),
        json!({ "rel_tol": tol }),
    )?;
    let sc: SlopeConvention = conv.into();
    let profiles: Vec<RealProfile> = betas
        .par_iter()
        .map(|&b| real_flow::solve_selfsim_real(sc.slope(b), n, r_max, tol))
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for (b, p) in betas.iter().zip(&profiles) {
        rows.extend(p.csv_rows().into_iter().map(|mut row| {
            row.insert(0, *b);
            row
        }));
    }
    ctx.csv("profiles.csv", &["beta", "r", "phi", "phi_r"], &rows)?;
    // The ordering suite is phrased in the doubled convention.
    let doubled: Vec<f64> = betas.iter().map(|&b| 0.5 * sc.slope(b)).collect();
    let ord = real_flow::comparison_suite(&doubled, n, r_max, tol)?;
    ctx.json("ordering.json", &ord)?;
    let ok = ord.passed() || ord.informational;
    println!(
        "orderings (i)-(iv) on {} curves: {} violations{} [{}]",
        betas.len(),
        ord.violations.len(),
        if ord.informational { " (n = 2, informational)" } else { "" },
        mark(ok)
    );
    ctx.plot("plot 'profiles.csv' using 2:3:1 with points pt 7 ps 0.3 palette\n")?;
    Ok(Outcome { passed: ok, residuals: json!({ "violations": ord.violations.len(), "limits": ord.limits }) })
}

fn witness(
    ctx: &mut Ctx,
    eps: Option<Vec<f64>>,
    deltas: Option<Vec<f64>>,
    panels: Option<usize>,
) -> Result<Outcome> {
    let cfg = &ctx.cfg;
    let eps = cfg.pick(eps, "epsilon", vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8])?;
    let deltas = cfg.pick(deltas, "delta", default_deltas())?;
    let panels = cfg.pick(panels, "panels", 64)?;
    if panels == 0 {
        bail!("panels must be positive");
    }
    ctx.resolved(
        json!({ "n": 2, "epsilon": eps, "delta": deltas }),
        json!({ "panels": panels, "rule": "gauss5 on the f_eps breakpoints" }),
        json!({ "gap": 0.0 }),
    )?;
    let search = real_flow::witness_search(&eps, &deltas, panels)?;
    let rows: Vec<Vec<f64>> = search
        .reports
        .iter()
        .map(|w| vec![w.epsilon, w.delta, w.energy_gap, w.energy_gap_gradient_form, w.hardy_saturation])
        .collect();
    ctx.csv("witness.csv", &["epsilon", "delta", "energy_gap", "energy_gap_gradient_form", "hardy_saturation"], &rows)?;
    let mut sat: Vec<(f64, f64)> = eps.iter().map(|&e| (e, real_flow::hardy_saturation(e, panels))).collect();
    sat.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let sat_decreasing = sat.windows(2).all(|w| w[1].1 < w[0].1);
    ctx.json(
        "witness.json",
        &json!({ "search": search, "hardy_saturation": sat, "saturation_decreasing": sat_decreasing }),
    )?;
    let b = &search.best;
    println!(
        "best witness eps = {:e} delta = {:.4}: E(h) - E(pi) = {:.6e}, gradient form {:.6e}",
        b.epsilon, b.delta, b.energy_gap, b.energy_gap_gradient_form
    );
    println!("negative energy gap found: {} [{}]", search.found_negative, mark(search.found_negative));
    println!("Hardy saturation ratio decreasing as eps shrinks: {sat_decreasing} [{}]", mark(sat_decreasing));
    Ok(Outcome {
        passed: search.found_negative && sat_decreasing,
        residuals: json!({ "best_gap": b.energy_gap, "best_gap_gradient_form": b.energy_gap_gradient_form }),
    })
}

/// Curves needed within tolerance, each with at least this many points.
pub const FIGURE_MIN_CURVES: usize = 4;
pub const FIGURE_MIN_POINTS: usize = 20;

fn figure(ctx: &mut Ctx, ns: Option<Vec<u32>>, tol: Option<f64>, rel_tol: Option<f64>) -> Result<Outcome> {
    let cfg = &ctx.cfg;
    let ns = cfg.pick(ns, "n", vec![2, 3, 4])?;
    let tol = cfg.pick(tol, "tol", 2e-3)?;
    let rel_tol = cfg.pick(rel_tol, "rel-tol", 1e-10)?;
    let curves = real_flow::reference_curves()?;
    ctx.resolved(
        json!({ "n": ns, "conventions": ["label", "doubled"], "curves": curves.len() }),
        json!({ "x_per_r": real_flow::FIGURE_X_PER_R, "y_per_phi": real_flow::FIGURE_Y_PER_PHI }),
        json!({ "plot_units": tol, "rel_tol": rel_tol }),
    )?;
    let fit = real_flow::fit_figure(&curves, &ns, tol, rel_tol)?;
    let best = fit.best();
    let mut rows = Vec::new();
    for (c, f) in curves.iter().zip(&best.curves) {
        for (p, m) in c.points.iter().zip(&f.model) {
            rows.push(vec![c.curve as f64, c.label, p.0, p.1, m.1]);
        }
    }
    ctx.csv("figure.csv", &["curve", "label", "x", "y_digitized", "y_model"], &rows)?;
    let summary: Vec<_> = fit
        .candidates
        .iter()
        .map(|c| {
            json!({
                "n": c.n,
                "convention": c.convention,
                "curves_within_tol": c.within_tol,
                "total_error": c.total_error,
                "max_error": c.curves.iter().map(|f| f.max_error).collect::<Vec<_>>(),
            })
        })
        .collect();
    let r_max = curves.iter().flat_map(|c| c.points.iter().map(|p| p.0)).fold(0.0, f64::max)
        / real_flow::FIGURE_X_PER_R;
    let labels: Vec<f64> = curves.iter().map(|c| 0.5 * best.convention.slope(c.label)).collect();
    let ord = real_flow::comparison_suite(&labels, best.n, r_max, rel_tol)?;
    let good = best.curves.iter().filter(|f| f.max_error <= tol && f.points >= FIGURE_MIN_POINTS).count();
    let ok = good >= FIGURE_MIN_CURVES && ord.passed();
    ctx.json(
        "fit.json",
        &json!({
            "best": { "n": best.n, "convention": best.convention },
            "curves_within_tol": good,
            "candidates": summary,
            "ordering": ord,
        }),
    )?;
    println!("fitted n = {} convention {:?}: {good} curves within {tol:e} [{}]", best.n, best.convention, mark(good >= FIGURE_MIN_CURVES));
    println!("orderings on fitted curves: {} violations [{}]", ord.violations.len(), mark(ord.passed()));
    ctx.plot("plot 'figure.csv' using 3:4 with points title 'digitized', '' using 3:5 with lines title 'model'\n")?;
    Ok(Outcome { passed: ok, residuals: json!({ "curves_within_tol": good, "violations": ord.violations.len() }) })
}
