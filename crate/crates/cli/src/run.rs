//! Shared run plumbing: output directory, manifest, diagnostics and exit codes.

use anyhow::{Context, Result};
use gll_core::io::{OutputDir, RunManifest};
use gll_core::GllError;
use serde::Serialize;
use serde_json::{json, Value};
use std::time::Instant;

use crate::config::{self, Section, GLOBAL_KEYS};
use crate::{Cli, Cmd};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_ASSERT: u8 = 1;
pub const EXIT_SOLVER: u8 = 2;

pub struct Ctx {
    pub out: OutputDir,
    pub cfg: Section,
    pub gnuplot: bool,
    params: Value,
    grid: Value,
    tolerances: Value,
}

/// What a command reports back: whether its assertions held, plus the
/// residual summary stored in the manifest.
pub struct Outcome {
    pub passed: bool,
    pub residuals: Value,
}

impl Ctx {
    /// Records the resolved inputs and rejects config keys nobody consumed.
    pub fn resolved(&mut self, params: Value, grid: Value, tolerances: Value) -> Result<()> {
        self.params = params;
        self.grid = grid;
        self.tolerances = tolerances;
        self.cfg.finish()
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        self.out.write_csv(name, header, rows).with_context(|| format!("writing {name}"))
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.out.write_json(name, value).with_context(|| format!("writing {name}"))
    }

    /// Writes plot.gp when --gnuplot is set; `body` holds the plot commands.
    pub fn plot(&mut self, body: &str) -> Result<()> {
        if !self.gnuplot {
            return Ok(());
        }
        let script = format!("set datafile separator ','\nset key autotitle columnhead\n{body}");
        self.out.write_text("plot.gp", &script).context("writing plot.gp")
    }
}

impl Cmd {
    /// Directory tag and config table path.
    fn tag(&self) -> (String, Vec<&'static str>) {
        match self {
            Cmd::Selfsim(_) => ("selfsim".into(), vec!["selfsim"]),
            Cmd::Realheat { sub } => {
                let name = sub.name();
                (format!("realheat-{name}"), vec!["realheat", name])
            }
            Cmd::Evolve(a) => (format!("evolve-{}", a.preset.name()), vec!["evolve"]),
            Cmd::Hasimoto { sub } => {
                let name = sub.name();
                (format!("hasimoto-{name}"), vec!["hasimoto", name])
            }
            Cmd::Verify(a) => (format!("verify-{}", a.suite), vec!["verify"]),
        }
    }
}

pub fn dispatch(cli: Cli) -> u8 {
    let started = Instant::now();
    let (tag, path) = cli.cmd.tag();
    let root = cli.out_dir.clone().unwrap_or_else(|| cli.out_root.join(&tag));
    let out = match OutputDir::create(&root) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: cannot create output directory {}: {e}", root.display());
            return EXIT_SOLVER;
        }
    };
    let mut ctx = Ctx { out, cfg: Section::default(), gnuplot: cli.gnuplot, params: Value::Null, grid: Value::Null, tolerances: Value::Null };
    let result = setup(&cli, &mut ctx, &path).and_then(|()| match &cli.cmd {
        Cmd::Selfsim(a) => crate::selfsim::run(&mut ctx, a),
        Cmd::Realheat { sub } => crate::realheat::run(&mut ctx, sub),
        Cmd::Evolve(a) => crate::evolve::run(&mut ctx, a),
        Cmd::Hasimoto { sub } => crate::hasimoto::run(&mut ctx, sub),
        Cmd::Verify(a) => crate::verify::run(&mut ctx, a),
    });
    let (code, residuals) = match result {
        Ok(o) => (if o.passed { EXIT_PASS } else { EXIT_ASSERT }, o.residuals),
        Err(e) => {
            eprintln!("error: {e:#}");
            let diag = diagnostics(&tag, &e);
            if let Err(w) = ctx.out.write_json("diagnostics.json", &diag) {
                eprintln!("error: cannot write diagnostics: {w}");
            }
            (EXIT_SOLVER, json!({ "error": format!("{e:#}") }))
        }
    };
    let mut manifest = RunManifest::new(&tag, ctx.params, ctx.grid, ctx.tolerances);
    manifest.residuals = residuals;
    manifest.wall_time_s = started.elapsed().as_secs_f64();
    if let Err(e) = ctx.out.finish(manifest) {
        eprintln!("error: cannot write manifest: {e}");
        return EXIT_SOLVER;
    }
    code
}

fn setup(cli: &Cli, ctx: &mut Ctx, path: &[&str]) -> Result<()> {
    let root = config::load(cli.config.as_deref())?;
    for (k, v) in &root {
        if !v.is_table() && !GLOBAL_KEYS.contains(&k.as_str()) {
            anyhow::bail!("unknown top-level config key {k}");
        }
    }
    let globals = Section::new(&root, &[])?;
    let workers: Option<usize> = globals.pick_opt(cli.workers, "workers")?;
    ctx.gnuplot = cli.gnuplot || globals.get::<bool>("gnuplot")?.unwrap_or(false);
    if let Some(w) = workers {
        if w == 0 {
            anyhow::bail!("--workers must be at least 1");
        }
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    ctx.cfg = Section::new(&root, path)?;
    Ok(())
}

fn diagnostics(tag: &str, e: &anyhow::Error) -> Value {
    let mut d = json!({
        "command": tag,
        "error": format!("{e:#}"),
        "chain": e.chain().map(|c| c.to_string()).collect::<Vec<_>>(),
    });
    if let Some(g) = e.downcast_ref::<GllError>() {
        d["kind"] = json!(kind(g));
        match g {
            GllError::Stiffness { at, last_state, .. } => {
                d["at"] = json!(at);
                d["last_state"] = json!(last_state);
            }
            GllError::Instability { t, node, drift } => {
                d["t"] = json!(t);
                d["node"] = json!(node);
                d["drift"] = json!(drift);
            }
            GllError::NormDrift { drift } => d["drift"] = json!(drift),
            _ => {}
        }
    }
    d
}

fn kind(e: &GllError) -> &'static str {
    match e {
        GllError::PoleSingularity => "pole_singularity",
        GllError::Domain(_) => "domain",
        GllError::NormDrift { .. } => "norm_drift",
        GllError::EmptyGrid => "empty_grid",
        GllError::Stiffness { .. } => "stiffness",
        GllError::Instability { .. } => "instability",
        GllError::NonConverged(_) => "non_converged",
        GllError::Io(_) => "io",
    }
}

/// "ok" / "FAIL" marker for printed summary lines.
pub fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

/// (n, α, β) flags shared by the flow commands.
#[derive(clap::Args, Debug, Clone)]
pub struct FlowArgs {
    /// Complex dimension n ≥ 1 [default: 2]
    #[arg(long)]
    pub n: Option<u32>,
    /// Dissipative coefficient α ≥ 0 [default: 1]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Dispersive coefficient β, with α² + β² = 1 [default: 0]
    #[arg(long)]
    pub beta: Option<f64>,
}

impl FlowArgs {
    pub fn resolve(&self, cfg: &Section) -> Result<gll_core::geom::FlowParams> {
        let n = cfg.pick(self.n, "n", 2)?;
        let alpha = cfg.pick(self.alpha, "alpha", 1.0)?;
        let beta = cfg.pick(self.beta, "beta", 0.0)?;
        Ok(gll_core::geom::FlowParams::new(n, alpha, beta)?)
    }
}
