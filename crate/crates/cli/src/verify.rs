use anyhow::{bail, Result};
use gll_core::verify::{self, SuiteReport, SUITES};
use rayon::prelude::*;
use serde_json::json;

use crate::run::{mark, Ctx, Outcome};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Suite name (geom, singular, selfsim, realheat, pde, hasimoto) or all
    #[arg(default_value = "all")]
    pub suite: String,
}

pub fn run(ctx: &mut Ctx, a: &Args) -> Result<Outcome> {
    let names: Vec<&str> = if a.suite == "all" {
        SUITES.to_vec()
    } else if SUITES.contains(&a.suite.as_str()) {
        vec![a.suite.as_str()]
    } else {
        bail!("unknown suite {}; known: all, {}", a.suite, SUITES.join(", "));
    };
    ctx.resolved(json!({ "suites": names }), json!(null), json!("per check, recorded in verify.json"))?;
    // Suites run concurrently; results keep the listed order.
    let reports: Vec<SuiteReport> = names.par_iter().map(|n| verify::run_suite(n)).collect::<Result<_, _>>()?;
    let mut passed = true;
    for r in &reports {
        for c in &r.checks {
            println!("{} {}: {} (value {:e}, tolerance {:e})", mark(c.passed), r.suite, c.name, c.value, c.tolerance);
        }
        if let Some(f) = r.first_failure() {
            passed = false;
            eprintln!("suite {} failed first at {}: value {:e}, tolerance {:e} {}", r.suite, f.name, f.value, f.tolerance, f.detail);
        }
    }
    let total: usize = reports.iter().map(|r| r.checks.len()).sum();
    let failed: usize = reports.iter().map(|r| r.checks.iter().filter(|c| !c.passed).count()).sum();
    println!("{} checks, {failed} failed", total);
    ctx.json("verify.json", &reports)?;
    Ok(Outcome {
        passed,
        residuals: json!(reports.iter().map(|r| json!({ "suite": r.suite, "passed": r.passed() })).collect::<Vec<_>>()),
    })
}
