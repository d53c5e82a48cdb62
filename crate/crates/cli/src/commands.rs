use std::path::Path;

use contest_core::design::{compare_schemes, optimal_general_design, optimal_group_design};
use contest_core::equilibrium::{expected_group_output, solve, GroupTag, Regime, SolverOptions};
use contest_core::verify::{
    best_response_check, expected_target_total, foc_residual, simulate_group_output,
    DeviationCheck, Estimate,
};
use contest_core::EquilibriumF64;
use serde::Serialize;
use serde_json::json;

use crate::error::CliError;
use crate::output::{write_json, Format, Table};
use crate::scenario::{DesignKind, Scenario};

/// Overrides from the command line, applied on top of the scenario.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub grid_size: Option<usize>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
}

const DEFAULT_SAMPLES: usize = 100_000;
const DEFAULT_SEED: u64 = 20_240_601;
const FOC_TOL: f64 = 1e-4;
const FOC_POINTS: usize = 50;
const CHECK_ABILITIES: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

impl RunOptions {
    fn solver(&self, sc: &Scenario) -> SolverOptions<f64> {
        SolverOptions::with_grid(self.grid_size.or(sc.grid_size).unwrap_or(2048))
    }

    fn samples(&self, sc: &Scenario) -> usize {
        self.samples.or(sc.samples).unwrap_or(DEFAULT_SAMPLES)
    }

    fn seed(&self, sc: &Scenario) -> u64 {
        self.seed.or(sc.seed).unwrap_or(DEFAULT_SEED)
    }

    fn format(&self) -> Format {
        self.format.unwrap_or(Format::Csv)
    }
}

fn solve_scenario(
    sc: &Scenario,
    opts: &RunOptions,
) -> Result<(contest_core::ContestSpecF64, EquilibriumF64), CliError> {
    let spec = sc.contest()?;
    let eq = solve(&spec, &opts.solver(sc))?;
    Ok((spec, eq))
}

pub fn cmd_equilibrium(
    sc: &Scenario,
    out: &Path,
    opts: &RunOptions,
) -> Result<serde_json::Value, CliError> {
    let (spec, eq) = solve_scenario(sc, opts)?;
    let pop = spec.population();
    let grid = opts.solver(sc).grid_size;
    let rows = (0..=grid)
        .map(|i| {
            let v = i as f64 / grid as f64;
            vec![v, eq.alpha.output(v), eq.beta.output(v)]
        })
        .collect();
    let table = Table {
        header: vec!["ability", "alpha", "beta"],
        rows,
    };
    let path = table.write(out, &format!("{}_strategy", sc.name), opts.format())?;

    let mut warnings = Vec::new();
    if eq.regime == Regime::NoPrizes {
        warnings.push("all prizes are zero: both groups produce nothing".to_string());
    }
    let mut summary = json!({
        "name": sc.name,
        "regime": eq.regime,
        "n": spec.n(),
        "mu": spec.mu(),
        "expected_target_output": expected_group_output(&eq.alpha, pop.target())?,
        "expected_nontarget_output": expected_group_output(&eq.beta, pop.nontarget())?,
        "strategy_table": path.display().to_string(),
        "warnings": warnings,
    });
    if eq.regime == Regime::Mixed {
        summary["k_at_1"] = json!(eq.link.k_at_1);
    }
    write_json(&out.join(format!("{}_equilibrium.json", sc.name)), &summary)?;
    Ok(summary)
}

pub fn cmd_design(
    sc: &Scenario,
    out: &Path,
    opts: &RunOptions,
) -> Result<serde_json::Value, CliError> {
    let kind = sc.regime.ok_or_else(|| {
        CliError::Config("design needs \"regime\": \"general\" or \"group\"".into())
    })?;
    let pop = sc.population()?;
    let result = match kind {
        DesignKind::General => optimal_general_design(&pop, sc.n)?,
        DesignKind::Group => optimal_group_design(&pop, sc.n)?,
    };
    let rows = result
        .per_j_objective
        .iter()
        .enumerate()
        .map(|(i, &v)| vec![(i + 1) as f64, v])
        .collect();
    Table {
        header: vec!["j", "objective"],
        rows,
    }
    .write(out, &format!("{}_per_j", sc.name), opts.format())?;
    let value = serde_json::to_value(&result)?;
    write_json(&out.join(format!("{}_design.json", sc.name)), &value)?;
    Ok(value)
}

pub fn cmd_compare(
    sc: &Scenario,
    out: &Path,
    opts: &RunOptions,
) -> Result<serde_json::Value, CliError> {
    let f = sc.target()?;
    let g = sc.nontarget()?;
    let grid = sc.mu_grid()?;
    let cmp = compare_schemes(sc.n, &grid, &f, &g)?;
    let rows = cmp.rows.iter().map(|r| vec![r.mu, r.a, r.b, r.c]).collect();
    let path = Table {
        header: vec!["mu", "A", "B", "C"],
        rows,
    }
    .write(out, &format!("{}_compare", sc.name), opts.format())?;
    let summary = json!({
        "name": sc.name,
        "n": sc.n,
        "closed_form": f.is_uniform() && g.is_uniform(),
        "crossing_mu": cmp.crossing,
        "table": path.display().to_string(),
    });
    write_json(
        &out.join(format!("{}_compare_summary.json", sc.name)),
        &summary,
    )?;
    Ok(summary)
}

#[derive(Debug, Serialize)]
struct FocReport {
    label: GroupTag,
    points: usize,
    skipped_flat: usize,
    max_residual: f64,
    tolerance: f64,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct OutputReport {
    estimate: Estimate,
    expected: f64,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    name: String,
    samples: usize,
    seed: u64,
    perturb_scale: Option<f64>,
    best_response: Vec<DeviationCheck>,
    best_response_pass: bool,
    group_output: OutputReport,
    foc: Vec<FocReport>,
    pass: bool,
}

pub fn cmd_verify(
    sc: &Scenario,
    out: &Path,
    opts: &RunOptions,
) -> Result<serde_json::Value, CliError> {
    let (spec, mut eq) = solve_scenario(sc, opts)?;
    if let Some(scale) = sc.perturb_scale {
        eq.alpha = eq.alpha.scaled(scale);
        eq.beta = eq.beta.scaled(scale);
    }
    let samples = opts.samples(sc);
    let seed = opts.seed(sc);
    let pop = spec.population();

    let best_response = best_response_check(&spec, &eq, &CHECK_ABILITIES, samples, seed);
    let best_response_pass = best_response.iter().all(|c| c.pass);

    let estimate =
        simulate_group_output(&spec, (&eq.alpha, &eq.beta), samples, seed.wrapping_add(1));
    let expected = expected_target_total(&spec, expected_group_output(&eq.alpha, pop.target())?);
    let group_output = OutputReport {
        estimate,
        expected,
        pass: estimate.agrees_with(expected, 1e-12),
    };

    let grid: Vec<f64> = (0..FOC_POINTS)
        .map(|i| 0.02 + 0.96 * i as f64 / (FOC_POINTS - 1) as f64)
        .collect();
    let mut foc = Vec::new();
    for (label, strategy, density) in [
        (GroupTag::Target, &eq.alpha, pop.target()),
        (GroupTag::NonTarget, &eq.beta, pop.nontarget()),
    ] {
        if strategy.is_zero() {
            continue;
        }
        // the condition only binds where the strategy is strictly increasing
        let live: Vec<f64> = grid
            .iter()
            .copied()
            .filter(|&v| density.pdf_at(v) > 0.0)
            .collect();
        let r = foc_residual(&spec, &eq, label, &live);
        let max_residual = r.iter().copied().fold(0.0, f64::max);
        foc.push(FocReport {
            label,
            points: live.len(),
            skipped_flat: grid.len() - live.len(),
            max_residual,
            tolerance: FOC_TOL,
            pass: max_residual < FOC_TOL,
        });
    }

    let pass = best_response_pass && group_output.pass && foc.iter().all(|f| f.pass);
    let report = VerifyReport {
        name: sc.name.clone(),
        samples,
        seed,
        perturb_scale: sc.perturb_scale,
        best_response,
        best_response_pass,
        group_output,
        foc,
        pass,
    };
    let value = serde_json::to_value(&report)?;
    write_json(&out.join(format!("{}_verify.json", sc.name)), &value)?;
    if !pass {
        return Err(CliError::Verification(format!(
            "{}: best response {}, group output {}, first-order conditions {}",
            sc.name,
            verdict(report.best_response_pass),
            verdict(report.group_output.pass),
            verdict(report.foc.iter().all(|f| f.pass)),
        )));
    }
    Ok(value)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}
