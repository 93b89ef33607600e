//! The train/test evaluation protocol on synthetic correlated bid streams.
//!
//! For each correlation setting `w` and each instance, a training dataset is
//! drawn (with a per-instance log-mean sampled uniformly from `[0, 1]`), the
//! profile LP is solved on a shared equally-spaced grid, the solution is
//! rounded, and the chosen vector is pitted against the greedy baseline on
//! freshly drawn test datasets of the same distribution. Instances own
//! disjoint seed substreams, so they can run in parallel and the assembled
//! result is identical run to run.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::auction::{Dataset, GridMode, ReserveGrid, ReserveVector};
use crate::baselines::greedy_lazy_reserves;
use crate::error::{Error, Result};
use crate::instances::{gen_correlated_lognormal, LogNormalParams};
use crate::model::{solve_profile_lp, LpBuildOptions};
use crate::rng::{derive_seed, substream};
use crate::rounding::{pro_lpr_run, RoundingOptions};
use crate::simplex::SimplexOptions;

/// Solver knobs in configuration form.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iters: usize,
    pub refactor_every: usize,
}

impl Default for SolverConfig {
    fn default() -> SolverConfig {
        let simplex = SimplexOptions::default();
        SolverConfig {
            tol: simplex.tol,
            max_iters: simplex.max_iters,
            refactor_every: simplex.refactor_every,
        }
    }
}

impl SolverConfig {
    pub fn simplex_options(&self) -> SimplexOptions {
        SimplexOptions {
            tol: self.tol,
            max_iters: self.max_iters,
            refactor_every: self.refactor_every,
            ..SimplexOptions::default()
        }
    }
}

/// Full experiment configuration. The defaults mirror the reference
/// protocol: 50 instances per correlation value, 100 training auctions, a
/// 30-point shared grid, 200 rounding draws, and 100 test sets of 100
/// auctions each.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub w_values: Vec<f64>,
    pub instances_per_w: u32,
    pub sigma: f64,
    pub train_auctions: u32,
    pub test_sets: u32,
    pub test_auctions: u32,
    pub grid_points: u32,
    pub samples: u32,
    pub solver: SolverConfig,
}

impl Default for ExperimentConfig {
    fn default() -> ExperimentConfig {
        ExperimentConfig {
            seed: 0,
            w_values: vec![-0.2, 0.0, 0.2],
            instances_per_w: 50,
            sigma: 0.1,
            train_auctions: 100,
            test_sets: 100,
            test_auctions: 100,
            grid_points: 30,
            samples: 200,
            solver: SolverConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.w_values.is_empty() {
            return Err(Error::InvalidArgument("need at least one correlation value".into()));
        }
        for &w in &self.w_values {
            if !(w.abs() < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "correlation value {w} outside (-1, 1)"
                )));
            }
        }
        if self.instances_per_w == 0
            || self.train_auctions == 0
            || self.test_sets == 0
            || self.test_auctions == 0
            || self.samples == 0
        {
            return Err(Error::InvalidArgument("all counts must be at least 1".into()));
        }
        if self.grid_points < 2 {
            return Err(Error::InvalidArgument("grid needs at least 2 points".into()));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::InvalidArgument("sigma must be positive".into()));
        }
        Ok(())
    }

    fn instance_indices(&self) -> Vec<(u32, f64, u32)> {
        let mut out = Vec::new();
        let mut index = 0;
        for &w in &self.w_values {
            for _ in 0..self.instances_per_w {
                out.push((index, w, index));
                index += 1;
            }
        }
        out
    }
}

// seed derivation tags
const TAG_MU: u64 = 1;
const TAG_TRAIN: u64 = 2;
const TAG_ROUND: u64 = 3;
const TAG_TEST: u64 = 4;

fn stream_tag(kind: u64, index: u32) -> u64 {
    (kind << 48) | index as u64
}

/// Evaluation of one trained vector pair on one test dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestRecord {
    pub set: u32,
    pub lp_revenue: f64,
    pub greedy_revenue: f64,
    /// `(lp_revenue - greedy_revenue) / greedy_revenue`; absent when the
    /// greedy revenue is zero.
    pub gain: Option<f64>,
}

/// Everything recorded about one instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub index: u32,
    pub w: f64,
    pub mu: f64,
    /// Empty on success, otherwise the solver diagnostic.
    pub failure: Option<String>,
    pub lp_objective: f64,
    pub zero_revenue: f64,
    /// Mean of the per-draw best-of-zero revenue (headline estimate).
    pub estimate: f64,
    pub estimate_std_error: f64,
    /// Training revenue of the single best vector among the draws and zero.
    pub best_train_revenue: f64,
    pub greedy_train_revenue: f64,
    /// Headline normalized revenue, `estimate / lp_objective`.
    pub ratio_estimate: f64,
    /// Normalized revenue of the selected single vector.
    pub ratio_best: f64,
    pub ratio_greedy: f64,
    pub selected_reserves: ReserveVector,
    pub greedy_reserves: ReserveVector,
    pub tests: Vec<TestRecord>,
}

/// Ordered per-instance records plus the echoed configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub records: Vec<InstanceRecord>,
}

impl ExperimentResult {
    pub fn failed_instances(&self) -> usize {
        self.records.iter().filter(|r| r.failure.is_some()).count()
    }
}

fn training_instance(cfg: &ExperimentConfig, index: u32, w: f64) -> InstanceRecord {
    let mu: f64 = substream(derive_seed(cfg.seed, stream_tag(TAG_MU, index)), 0).random();
    let params = LogNormalParams::new(
        mu,
        cfg.sigma,
        w,
        cfg.train_auctions,
        derive_seed(cfg.seed, stream_tag(TAG_TRAIN, index)),
    )
    .expect("validated configuration");
    let ds = gen_correlated_lognormal(&params);

    let mut record = InstanceRecord {
        index,
        w,
        mu,
        failure: None,
        lp_objective: 0.0,
        zero_revenue: 0.0,
        estimate: 0.0,
        estimate_std_error: 0.0,
        best_train_revenue: 0.0,
        greedy_train_revenue: 0.0,
        ratio_estimate: 0.0,
        ratio_best: 0.0,
        ratio_greedy: 0.0,
        selected_reserves: ReserveVector::zeros(2),
        greedy_reserves: ReserveVector::zeros(2),
        tests: Vec::new(),
    };

    let grid = match ReserveGrid::build(&ds, GridMode::EquallySpaced(cfg.grid_points as usize)) {
        Ok(grid) => grid,
        Err(err) => {
            record.failure = Some(err.to_string());
            return record;
        }
    };
    let solved = solve_profile_lp(
        &ds,
        &grid,
        &LpBuildOptions::default(),
        &cfg.solver.simplex_options(),
    );
    let (sol, _, _) = match solved {
        Ok(parts) => parts,
        Err(err) => {
            record.failure = Some(err.to_string());
            return record;
        }
    };

    let rounding = pro_lpr_run(
        &ds,
        &sol,
        &RoundingOptions::new(
            cfg.samples as usize,
            derive_seed(cfg.seed, stream_tag(TAG_ROUND, index)),
        ),
    );
    let outcome = match rounding {
        Ok(outcome) => outcome,
        Err(err) => {
            record.failure = Some(err.to_string());
            return record;
        }
    };
    let greedy = greedy_lazy_reserves(&ds, &grid);
    let greedy_revenue = ds.total_revenue(&greedy);

    record.lp_objective = sol.objective;
    record.zero_revenue = outcome.zero_revenue;
    record.estimate = outcome.estimate;
    record.estimate_std_error = outcome.standard_error;
    record.best_train_revenue = outcome.best_revenue;
    record.greedy_train_revenue = greedy_revenue;
    record.ratio_estimate = outcome.estimate / sol.objective;
    record.ratio_best = outcome.best_revenue / sol.objective;
    record.ratio_greedy = greedy_revenue / sol.objective;
    record.selected_reserves = outcome.best_vector;
    record.greedy_reserves = greedy;
    record
}

/// Runs the training leg: generate, solve, round, and run the greedy
/// baseline for every instance. Solver trouble marks the instance failed
/// and the run continues.
pub fn run_training_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let records: Vec<InstanceRecord> = cfg
        .instance_indices()
        .par_iter()
        .map(|&(index, w, _)| training_instance(cfg, index, w))
        .collect();
    Ok(ExperimentResult {
        config: cfg.clone(),
        records,
    })
}

/// Runs the test leg: for every trained instance, evaluates the selected
/// vector and the greedy vector on freshly drawn datasets with the same
/// `(mu, w)`. Both vectors see identical test data (paired evaluation).
pub fn run_test_evaluation(cfg: &ExperimentConfig, trained: &mut ExperimentResult) -> Result<()> {
    cfg.validate()?;
    let tests: Vec<Vec<TestRecord>> = trained
        .records
        .par_iter()
        .map(|record| {
            if record.failure.is_some() {
                return Vec::new();
            }
            let mut out = Vec::with_capacity(cfg.test_sets as usize);
            for set in 0..cfg.test_sets {
                let seed = derive_seed(
                    derive_seed(cfg.seed, stream_tag(TAG_TEST, record.index)),
                    set as u64,
                );
                let params = LogNormalParams::new(
                    record.mu,
                    cfg.sigma,
                    record.w,
                    cfg.test_auctions,
                    seed,
                )
                .expect("validated configuration");
                let test_ds: Dataset = gen_correlated_lognormal(&params);
                let lp_revenue = test_ds.total_revenue(&record.selected_reserves);
                let greedy_revenue = test_ds.total_revenue(&record.greedy_reserves);
                let gain = if greedy_revenue > 0.0 {
                    Some((lp_revenue - greedy_revenue) / greedy_revenue)
                } else {
                    None
                };
                out.push(TestRecord {
                    set,
                    lp_revenue,
                    greedy_revenue,
                    gain,
                });
            }
            out
        })
        .collect();
    for (record, t) in trained.records.iter_mut().zip(tests) {
        record.tests = t;
    }
    Ok(())
}

/// Training plus test evaluation.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let mut result = run_training_experiment(cfg)?;
    run_test_evaluation(cfg, &mut result)?;
    Ok(result)
}
