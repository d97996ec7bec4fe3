//! Monte Carlo driver: rejection-rate tables over a `(delta, beta)` grid and the
//! checks comparing bootstrap power with empirical power.
//!
//! Seed tree: `master_seed -> cell -> run -> {data, test, power}`. Run `r` of cell `c`
//! is a pure function of `master_seed.child(c).child(r)`, so any cell can be re-run
//! alone and results do not depend on the rayon thread count.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dcf::{diagnostics, MultiplierBootstrap, TestConfig};
use crate::error::{DcfError, Result};
use crate::rng::SeedSpec;
use crate::scalar::Real;
use crate::simgen::{PreparedSetting, SettingSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub delta: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCPlan {
    pub setting: SettingSpec,
    pub grid: Vec<GridCell>,
    pub test: TestConfig,
    pub n_mc: usize,
    pub master_seed: SeedSpec,
    /// Replicates for the bootstrap power column; `None` leaves it empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_boot_star: Option<usize>,
}

impl MCPlan {
    pub fn validate(&self) -> Result<()> {
        if self.n_mc == 0 {
            return Err(DcfError::InvalidParameter("n_mc must be at least 1".into()));
        }
        if self.grid.is_empty() {
            return Err(DcfError::InvalidParameter("grid must not be empty".into()));
        }
        if self.n_boot_star == Some(0) {
            return Err(DcfError::InvalidParameter("n_boot_star must be positive".into()));
        }
        self.test.validate()?;
        self.setting.validate()?;
        for cell in &self.grid {
            self.setting.with_cell(cell.delta, cell.beta).validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub delta: f64,
    pub beta: f64,
    pub rejection_rate: f64,
    pub mc_stderr: f64,
    pub mean_power_star: Option<f64>,
    /// seconds
    pub wall_time: f64,
}

/// `sqrt(r (1 - r) / runs)`.
pub fn binomial_stderr(rate: f64, runs: usize) -> f64 {
    (rate * (1.0 - rate) / runs as f64).sqrt()
}

struct RunSeeds {
    data: SeedSpec,
    test: u64,
    star: u64,
}

fn run_seeds(cell_seed: SeedSpec, run: usize) -> RunSeeds {
    let node = cell_seed.child(run as u64);
    RunSeeds {
        data: node.child(0),
        test: node.child(1).master_seed,
        star: node.child(2).master_seed,
    }
}

struct RunOutcome {
    reject: bool,
    power_star: Option<f64>,
}

fn run_once<T: Real>(
    prep: &PreparedSetting<T>,
    test: &TestConfig,
    seeds: RunSeeds,
    power: Option<(&[T], usize)>,
) -> Result<RunOutcome> {
    let (x, y) = prep.gen_pair(seeds.data);
    let boot = MultiplierBootstrap::new(&x, &y)?;
    let config = TestConfig {
        seed: seeds.test,
        ..*test
    };
    let (result, _) = boot.run(&config)?;
    let power_star = match power {
        Some((delta, n_star)) => Some(boot.power_star(result.critical_value, delta, n_star, seeds.star)?),
        None => None,
    };
    Ok(RunOutcome {
        reject: result.reject,
        power_star,
    })
}

fn mean(xs: impl Iterator<Item = f64>) -> (f64, usize) {
    let (sum, count) = xs.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (sum / count.max(1) as f64, count)
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let (m, n) = mean(xs.iter().copied());
    if n < 2 {
        return (m, 0.0);
    }
    let var = xs.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    (m, (var / n as f64).sqrt())
}

/// Rejection rate of the test in every grid cell, plus the mean bootstrap power at
/// the true mean difference when `plan.n_boot_star` is set.
pub fn rejection_table<T: Real>(plan: &MCPlan) -> Result<Vec<CellResult>> {
    plan.validate()?;
    plan.grid
        .iter()
        .enumerate()
        .map(|(c, cell)| {
            let start = Instant::now();
            let spec = plan.setting.with_cell(cell.delta, cell.beta);
            let prep = PreparedSetting::<T>::new(&spec)?;
            let difference: Vec<T> = prep.mu_y().iter().map(|&v| -v).collect();
            let power = plan.n_boot_star.map(|n_star| (difference.as_slice(), n_star));
            let cell_seed = plan.master_seed.child(c as u64);
            let outcomes = (0..plan.n_mc)
                .into_par_iter()
                .map(|r| run_once(&prep, &plan.test, run_seeds(cell_seed, r), power))
                .collect::<Result<Vec<_>>>()?;

            let rejections = outcomes.iter().filter(|o| o.reject).count();
            let rate = rejections as f64 / plan.n_mc as f64;
            let mean_power_star = plan
                .n_boot_star
                .map(|_| mean(outcomes.iter().filter_map(|o| o.power_star)).0);
            Ok(CellResult {
                delta: cell.delta,
                beta: cell.beta,
                rejection_rate: rate,
                mc_stderr: binomial_stderr(rate, plan.n_mc),
                mean_power_star,
                wall_time: start.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem6Report {
    /// fraction of runs rejecting
    pub empirical_power: f64,
    pub empirical_stderr: f64,
    /// average over runs of the bootstrap power at the true mean difference
    pub mean_power_star: f64,
    pub power_star_stderr: f64,
    /// `|mean_power_star - empirical_power|`
    pub discrepancy: f64,
}

/// Compares the averaged bootstrap power with the empirical rejection rate when `Y`
/// has mean `mu_y` (and `X` mean zero).
pub fn theorem6_check<T: Real>(plan: &MCPlan, mu_y: &[T]) -> Result<Theorem6Report> {
    plan.validate()?;
    let prep = PreparedSetting::with_mean_y(&plan.setting, mu_y.to_vec())?;
    let difference: Vec<T> = mu_y.iter().map(|&v| -v).collect();
    let n_star = plan.n_boot_star.unwrap_or(plan.test.n_boot);
    let root = plan.master_seed.child(0);
    let outcomes = (0..plan.n_mc)
        .into_par_iter()
        .map(|r| run_once(&prep, &plan.test, run_seeds(root, r), Some((&difference, n_star))))
        .collect::<Result<Vec<_>>>()?;

    let empirical_power = outcomes.iter().filter(|o| o.reject).count() as f64 / plan.n_mc as f64;
    let stars: Vec<f64> = outcomes.iter().filter_map(|o| o.power_star).collect();
    let (mean_power_star, power_star_stderr) = mean_and_stderr(&stars);
    Ok(Theorem6Report {
        empirical_power,
        empirical_stderr: binomial_stderr(empirical_power, plan.n_mc),
        mean_power_star,
        power_star_stderr,
        discrepancy: (mean_power_star - empirical_power).abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem7Options {
    /// Multiple of the separation boundary `{B log(pn) / n}^{1/2}`.
    pub multiple: f64,
    pub runs: usize,
    pub n_boot_star: usize,
    pub seed: SeedSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem7Report {
    pub mean_power_star: f64,
    pub mc_stderr: f64,
    /// boundary averaged over runs (it depends on the data through `B`)
    pub mean_boundary: f64,
}

/// Bootstrap power at a single-coordinate alternative placed at `multiple` times the
/// separation boundary.
///
/// Each run draws null data from `setting`, estimates `B` by
/// [`Diagnostics::moment_bound`](crate::dcf::Diagnostics::moment_bound), and sets
/// `mu_X - mu_Y = multiple * {B log(pn) / n}^{1/2} e_1`.
pub fn theorem7_check<T: Real>(
    setting: &SettingSpec,
    test: &TestConfig,
    opts: &Theorem7Options,
) -> Result<Theorem7Report> {
    test.validate()?;
    if opts.runs == 0 || opts.n_boot_star == 0 {
        return Err(DcfError::InvalidParameter("runs and n_boot_star must be positive".into()));
    }
    if !(opts.multiple >= 0.0 && opts.multiple.is_finite()) {
        return Err(DcfError::InvalidParameter(format!("invalid multiple {}", opts.multiple)));
    }
    let null = setting.with_cell(0.0, 0.0);
    let prep = PreparedSetting::<T>::new(&null)?;
    let (n, p) = (null.n as f64, null.p as f64);

    let per_run = (0..opts.runs)
        .into_par_iter()
        .map(|r| -> Result<(f64, f64)> {
            let seeds = run_seeds(opts.seed, r);
            let (x, y) = prep.gen_pair(seeds.data);
            let bound = diagnostics(&x, &y)?.moment_bound().as_f64();
            let boundary = (bound * (p * n).ln() / n).sqrt();
            let mut delta = vec![T::zero(); null.p];
            delta[0] = T::of(opts.multiple * boundary);
            let boot = MultiplierBootstrap::new(&x, &y)?;
            let config = TestConfig {
                seed: seeds.test,
                ..*test
            };
            let c = boot.draws(&config)?.critical_value(test.alpha);
            Ok((boot.power_star(c, &delta, opts.n_boot_star, seeds.star)?, boundary))
        })
        .collect::<Result<Vec<_>>>()?;

    let powers: Vec<f64> = per_run.iter().map(|r| r.0).collect();
    let (mean_power_star, mc_stderr) = mean_and_stderr(&powers);
    Ok(Theorem7Report {
        mean_power_star,
        mc_stderr,
        mean_boundary: mean(per_run.iter().map(|r| r.1)).0,
    })
}
