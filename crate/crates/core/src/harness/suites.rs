//! Monte Carlo suites for the estimators and the likelihood ratio.

use super::config::{ExperimentConfig, ExperimentKind};
use super::report::{Check, ExperimentReport, ReplicationRow, Summary, Table};
use crate::error::{Error, Result};
use crate::fgn::{bm_increments, derive_seed, make_kernels, KernelSet, NoisePair};
use crate::fraccalc::Grid;
use crate::infer::{likelihood_ratio_fm, likelihood_ratio_kinv, mle, SequentialPlan, SequentialRunner};
use crate::reflect::simulate_rfou;
use rayon::prelude::*;
use std::sync::Arc;
use std::time::Instant;

/// Paths used by the pathwise refinement table of the Girsanov suite.
pub const REFINEMENT_PATHS: u64 = 200;

fn expect_kind(cfg: &ExperimentConfig, ok: &[ExperimentKind]) -> Result<()> {
    cfg.validate()?;
    if !ok.contains(&cfg.kind) {
        return Err(Error::Config(format!("suite cannot run kind {:?}", cfg.kind)));
    }
    Ok(())
}

fn seeds(root: u64, reps: usize) -> Vec<(u64, u64)> {
    (0..reps as u64).map(|i| (i, derive_seed(root, i))).collect()
}

fn report(cfg: &ExperimentConfig, start: Instant, rows: Vec<ReplicationRow>, target: f64) -> ExperimentReport {
    let summary = Summary::from_rows(&rows, target);
    ExperimentReport {
        config: cfg.clone(),
        notes: Vec::new(),
        records: rows,
        summary,
        tables: Vec::new(),
        checks: Vec::new(),
        wall_clock_secs: start.elapsed().as_secs_f64(),
    }
}

fn sequential_rows(cfg: &ExperimentConfig, h: f64, root: u64) -> Result<Vec<ReplicationRow>> {
    let plan = SequentialPlan {
        h,
        dt: cfg.dt(),
        max_horizon: cfg.max_horizon.unwrap_or(cfg.horizon),
        initial_horizon: cfg.horizon,
    };
    plan.validate()?;
    let runner = SequentialRunner::new(cfg.model.hurst, plan)?;
    Ok(seeds(root, cfg.reps)
        .into_par_iter()
        .map(|(i, s)| match runner.run(&cfg.model, s) {
            Ok(out) => ReplicationRow::from_estimate(i, s, out.record),
            Err(e) => ReplicationRow::failed(i, s, e),
        })
        .collect())
}

/// M sequential plans at level h, and M more at 2h for the monotonicity
/// proxy. Checks: all runs hit, bias within 3 SE, MSE within 15% of σ²/h,
/// KS of √h(α̂−α)/σ against N(0,1) at 1%, MSE at 2h below MSE at h.
pub fn run_sequential_suite(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    expect_kind(cfg, &[ExperimentKind::Sequential])?;
    let start = Instant::now();
    let h = cfg.h_level.expect("validated");
    let rows = sequential_rows(cfg, h, cfg.seed)?;
    let twice = sequential_rows(cfg, 2.0 * h, derive_seed(cfg.seed, u64::MAX))?;
    let alpha = cfg.model.alpha;
    let s2 = cfg.model.sigma.powi(2);
    let mut rep = report(cfg, start, rows, alpha);
    let s = rep.summary.clone();
    let s_twice = Summary::from_rows(&twice, alpha);

    let mut levels = Table::new("levels", &["h", "mse", "mse_h_over_sigma2", "mean_tau", "hit_fraction"]);
    for (lvl, rows, sm) in [(h, &rep.records, &s), (2.0 * h, &twice, &s_twice)] {
        let taus: Vec<f64> = rows.iter().filter_map(|r| r.estimate.as_ref()).map(|e| e.horizon_or_tau).collect();
        let mean_tau = taus.iter().sum::<f64>() / taus.len().max(1) as f64;
        levels.rows.push(vec![lvl, sm.mse, sm.mse * lvl / s2, mean_tau, sm.hit_fraction.unwrap_or(f64::NAN)]);
    }
    rep.tables.push(levels);

    let hit = s.hit_fraction.unwrap_or(0.0);
    let eff = s.mse * h / s2;
    let p = s.ks_p.unwrap_or(f64::NAN);
    rep.checks = vec![
        Check::new("hit", hit == 1.0 && s.failures == 0, format!("hit fraction {hit}, {} failed", s.failures)),
        Check::new(
            "unbiased",
            s.bias.abs() <= 3.0 * s.se,
            format!("bias {:.5} vs 3·SE {:.5}", s.bias, 3.0 * s.se),
        ),
        Check::new("mse", (eff - 1.0).abs() <= 0.15, format!("MSE {:.5} vs σ²/h {:.5}", s.mse, s2 / h)),
        Check::new("efficiency", (0.85..=1.15).contains(&eff), format!("MSE·h/σ² = {eff:.4}")),
        Check::new("normality", p > 0.01, format!("KS p = {p:.4}")),
        Check::new(
            "mse-decreasing",
            s_twice.mse < s.mse,
            format!("MSE at 2h {:.5} vs at h {:.5}", s_twice.mse, s.mse),
        ),
    ];
    rep.wall_clock_secs = start.elapsed().as_secs_f64();
    Ok(rep)
}

/// Fixed-horizon MLE on M paths, with the error ladder at T/4, T/2, T taken
/// from prefixes of the same paths.
pub fn run_mle_suite(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    expect_kind(cfg, &[ExperimentKind::Consistency, ExperimentKind::Normality])?;
    let start = Instant::now();
    let grid = Grid::new(cfg.horizon, cfg.steps)?;
    let kernels = Arc::new(make_kernels(cfg.model.hurst, grid)?);
    let ladder = [cfg.steps / 4, cfg.steps / 2, cfg.steps];
    if ladder[0] == 0 {
        return Err(Error::Config("need at least 4 steps for the T-ladder".into()));
    }
    let alpha = cfg.model.alpha;
    let results: Vec<(ReplicationRow, Option<[f64; 3]>)> = seeds(cfg.seed, cfg.reps)
        .into_par_iter()
        .map(|(i, s)| match mle_replication(cfg, &kernels, &ladder, s) {
            Ok((rec, errs)) => (ReplicationRow::from_estimate(i, s, rec), Some(errs)),
            Err(e) => (ReplicationRow::failed(i, s, e), None),
        })
        .collect();
    let errs: Vec<[f64; 3]> = results.iter().filter_map(|r| r.1).collect();
    let rows: Vec<ReplicationRow> = results.into_iter().map(|r| r.0).collect();
    let mut rep = report(cfg, start, rows, alpha);

    let mut table = Table::new("ladder", &["T", "median_abs_error"]);
    for (k, &m) in ladder.iter().enumerate() {
        let col: Vec<f64> = errs.iter().map(|e| e[k]).collect();
        table.rows.push(vec![m as f64 * grid.dt(), super::stats::median(&col)]);
    }
    let med = table.column("median_abs_error").expect("column exists");
    rep.tables.push(table);
    let p = rep.summary.ks_p.unwrap_or(f64::NAN);
    rep.checks = vec![
        Check::new(
            "consistency-trend",
            med.windows(2).all(|w| w[1] < w[0]),
            format!("median |α̃−α| along the ladder {med:?}"),
        ),
        Check::new("normality", p > 0.01, format!("KS p = {p:.4} at T = {}", cfg.horizon)),
        Check::new("no-failures", rep.summary.failures == 0, format!("{} failed", rep.summary.failures)),
    ];
    rep.wall_clock_secs = start.elapsed().as_secs_f64();
    Ok(rep)
}

fn mle_replication(
    cfg: &ExperimentConfig,
    kernels: &Arc<KernelSet>,
    ladder: &[usize; 3],
    seed: u64,
) -> Result<(crate::infer::EstimateRecord, [f64; 3])> {
    let path = simulate_rfou(&cfg.model, &NoisePair::sample(kernels, seed))?;
    let mut errs = [0.0; 3];
    for (k, &m) in ladder[..2].iter().enumerate() {
        errs[k] = (mle(&path.prefix(m)?, kernels, None)?.alpha_hat - cfg.model.alpha).abs();
    }
    let rec = mle(&path, kernels, Some(cfg.model.alpha))?;
    errs[2] = (rec.alpha_hat - cfg.model.alpha).abs();
    Ok((rec, errs))
}

/// E[η_T] = 1 by Monte Carlo, the α = 0 row, and the pathwise gap between
/// the two likelihood-ratio formulas on `steps` and `2·steps` cells.
pub fn run_girsanov_suite(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    expect_kind(cfg, &[ExperimentKind::Girsanov])?;
    let start = Instant::now();
    let grid = Grid::new(cfg.horizon, cfg.steps)?;
    let kernels = Arc::new(make_kernels(cfg.model.hurst, grid)?);
    let alpha = cfg.model.alpha;
    let rows: Vec<ReplicationRow> = seeds(cfg.seed, cfg.reps)
        .into_par_iter()
        .map(|(i, s)| {
            let run = || -> Result<(f64, f64)> {
                let path = simulate_rfou(&cfg.model, &NoisePair::sample(&kernels, s))?;
                let eta = likelihood_ratio_fm(&path, alpha, &kernels)?;
                let xi = likelihood_ratio_kinv(&path, alpha, &kernels)?;
                if eta.overflow {
                    return Err(Error::Numerical(format!("η overflowed, log η = {}", eta.log_value)));
                }
                Ok((eta.value, xi.value))
            };
            match run() {
                Ok((eta, xi)) => ReplicationRow {
                    index: i,
                    seed: s,
                    estimate: None,
                    value: Some(eta),
                    standardized: None,
                    aux: Some(xi),
                    error: None,
                },
                Err(e) => ReplicationRow::failed(i, s, e),
            }
        })
        .collect();
    let mut rep = report(cfg, start, rows, 1.0);

    let zero = {
        let mut p = cfg.model;
        p.alpha = 0.0;
        let path = simulate_rfou(&p, &NoisePair::sample(&kernels, derive_seed(cfg.seed, 0)))?;
        (likelihood_ratio_fm(&path, 0.0, &kernels)?.value, likelihood_ratio_kinv(&path, 0.0, &kernels)?.value)
    };

    let table = refinement_table(cfg)?;
    let gaps = table.column("mean_abs_log_gap").expect("column exists");
    let ratio = gaps[0] / gaps[1];
    rep.tables.push(table);
    let xi: Vec<f64> = rep.records.iter().filter_map(|r| r.aux).collect();
    let xi_mean = xi.iter().sum::<f64>() / xi.len().max(1) as f64;
    let s = &rep.summary;
    rep.notes.push(format!("mean ξ_T = {xi_mean:.5}"));
    rep.checks = vec![
        Check::new(
            "eta-mean",
            (s.mean - 1.0).abs() <= 3.0 * s.se,
            format!("mean η_T {:.5} ± {:.5} (SE)", s.mean, s.se),
        ),
        Check::new("alpha-zero", zero == (1.0, 1.0), format!("η, ξ at α = 0: {zero:?}")),
        Check::new(
            "refinement",
            ratio >= 1.3,
            format!("mean |log ξ − log η| {:.3e} → {:.3e}, ratio {ratio:.3}", gaps[0], gaps[1]),
        ),
    ];
    rep.wall_clock_secs = start.elapsed().as_secs_f64();
    Ok(rep)
}

/// |log ξ_T − log η_T| on fixed Brownian paths at n = steps and 2n.
pub fn refinement_table(cfg: &ExperimentConfig) -> Result<Table> {
    let n = cfg.steps;
    let fine_dt = cfg.horizon / (2 * n) as f64;
    let root = derive_seed(cfg.seed, u64::MAX - 1);
    let mut table = Table::new("refinement", &["steps", "mean_abs_log_gap", "max_abs_log_gap"]);
    for m in [n, 2 * n] {
        let grid = Grid::new(cfg.horizon, m)?;
        let kernels = Arc::new(make_kernels(cfg.model.hurst, grid)?);
        let gaps: Vec<f64> = (0..REFINEMENT_PATHS)
            .into_par_iter()
            .map(|i| -> Result<f64> {
                let fine = bm_increments(derive_seed(root, i), 2 * n, fine_dt);
                let incr: Vec<f64> = fine.chunks(2 * n / m).map(|c| c.iter().sum()).collect();
                let noise = NoisePair::from_bm_increments(&kernels, grid, &incr)?;
                let path = simulate_rfou(&cfg.model, &noise)?;
                let eta = likelihood_ratio_fm(&path, cfg.model.alpha, &kernels)?;
                let xi = likelihood_ratio_kinv(&path, cfg.model.alpha, &kernels)?;
                Ok((xi.log_value - eta.log_value).abs())
            })
            .collect::<Result<_>>()?;
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        table.rows.push(vec![m as f64, mean, gaps.iter().cloned().fold(0.0, f64::max)]);
    }
    Ok(table)
}

/// Dispatch on the configured kind.
pub fn run_suite(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    match cfg.kind {
        ExperimentKind::Sequential => run_sequential_suite(cfg),
        ExperimentKind::Consistency | ExperimentKind::Normality => run_mle_suite(cfg),
        ExperimentKind::Girsanov => run_girsanov_suite(cfg),
        ExperimentKind::QueueDemo => super::queue::queue_scaling_demo(cfg),
    }
}
