//! The outer training loop: alternate between mining the conjunctions whose
//! weighted frequency under the current loss gradients violates optimality,
//! growing the active feature set by the best few, and re-fitting the active
//! weights. Stops when mining comes back empty or the total violation drops
//! below a fraction of its starting value.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use crate::datakit::TransactionDatabase;
use crate::error::{CbmError, Result};
use crate::loss::{drop_transactions, weights_from_scores, LossKind};
use crate::miner::{default_emission_cap, occurrence_list, Itemset, MinedCandidate, ThresholdSchedule};
use crate::model::SparseModel;
use crate::solver::{
    objective_value, optimize_with_columns, residuals_with_columns, ActiveProblem,
    DEFAULT_MAX_SWEEPS, DEFAULT_TOLERANCE,
};
use crate::DegreeCap;

pub const DEFAULT_EPSILON: f64 = 0.01;
pub const DEFAULT_BATCH: usize = 10;
pub const DEFAULT_MAX_OUTER: usize = 10_000;

#[derive(Debug, Clone)]
pub struct GrabConfig {
    /// Loss scale C in `C * sum_i loss + |w|_1`.
    pub c: f64,
    /// Cap on conjunction size.
    pub k: DegreeCap,
    pub loss: LossKind,
    /// Features added per outer iteration.
    pub batch: usize,
    /// Stop once the violation total falls below `epsilon` times its
    /// starting value.
    pub epsilon: f64,
    pub max_outer: usize,
    /// Starting exponent of the mining threshold schedule.
    pub initial_m: u32,
    /// Cap on itemsets emitted per mining call; `None` means 100 per
    /// requested candidate.
    pub emission_cap: Option<usize>,
    pub solver_tolerance: f64,
    pub solver_max_sweeps: usize,
}

impl Default for GrabConfig {
    fn default() -> Self {
        GrabConfig {
            c: 1.0,
            k: DegreeCap::Unbounded,
            loss: LossKind::Logistic,
            batch: DEFAULT_BATCH,
            epsilon: DEFAULT_EPSILON,
            max_outer: DEFAULT_MAX_OUTER,
            initial_m: 10,
            emission_cap: None,
            solver_tolerance: DEFAULT_TOLERANCE,
            solver_max_sweeps: DEFAULT_MAX_SWEEPS,
        }
    }
}

impl GrabConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(CbmError::InvalidArgument(format!(
                "loss scale C must be a positive real, got {}",
                self.c
            )));
        }
        if self.batch == 0 {
            return Err(CbmError::InvalidArgument("batch must be at least 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(CbmError::InvalidArgument(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        if self.max_outer == 0 {
            return Err(CbmError::InvalidArgument("max_outer must be at least 1".into()));
        }
        if self.emission_cap == Some(0) {
            return Err(CbmError::InvalidArgument("emission cap must be at least 1".into()));
        }
        if !(self.solver_tolerance > 0.0) {
            return Err(CbmError::InvalidArgument(format!(
                "solver tolerance must be positive, got {}",
                self.solver_tolerance
            )));
        }
        if self.solver_max_sweeps == 0 {
            return Err(CbmError::InvalidArgument("solver_max_sweeps must be at least 1".into()));
        }
        Ok(())
    }

    fn emission_budget(&self) -> usize {
        self.emission_cap.unwrap_or_else(|| default_emission_cap(self.batch))
    }
}

/// One completed outer iteration, as written to the training trace.
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub iter: usize,
    /// Active set size after this iteration's additions.
    pub active: usize,
    /// Violation total V at the start of the iteration.
    pub v: f64,
    /// Objective after this iteration's re-fit.
    pub objective: f64,
    /// Candidates surviving mining (before the batch cut).
    pub mined: usize,
    pub wall: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// V fell below epsilon times its starting value.
    Converged,
    /// Mining produced nothing outside the active set.
    NoCandidates,
    /// The outer iteration cap was reached first.
    IterationCap,
}

#[derive(Debug, Clone)]
pub struct TrainTrace {
    pub rows: Vec<TraceRow>,
    pub stop: StopReason,
    /// Violation total at the first iteration.
    pub v0: f64,
}

impl TrainTrace {
    pub fn hit_iteration_cap(&self) -> bool {
        self.stop == StopReason::IterationCap
    }
}

/// Violation total: re-fit residuals over the active features plus
/// `max(|wf| - 1, 0)` over a mined candidate pool outside the model support.
pub fn suboptimality(
    db: &TransactionDatabase,
    cfg: &GrabConfig,
    model: &SparseModel,
    mined: &[MinedCandidate],
) -> Result<f64> {
    cfg.validate()?;
    let active: f64 = crate::solver::active_residual(db, cfg.loss, cfg.c, model)?
        .iter()
        .sum();
    let support: BTreeSet<&Itemset> = model.weights().map(|(p, _)| p).collect();
    let pool: f64 = mined
        .iter()
        .filter(|cand| !support.contains(&cand.itemset))
        .map(|cand| (cand.weighted_frequency.abs() - 1.0).max(0.0))
        .sum();
    Ok(active + pool + 0.0)
}

pub fn train(db: &TransactionDatabase, cfg: &GrabConfig) -> Result<(SparseModel, TrainTrace)> {
    cfg.validate()?;
    if db.is_empty() {
        return Err(CbmError::InvalidArgument("training needs at least one transaction".into()));
    }
    let labels = db.labels();
    let budget = cfg.emission_budget();
    let mut schedule = ThresholdSchedule::new(cfg.initial_m);

    let mut features: Vec<Itemset> = Vec::new();
    let mut fset: BTreeSet<Itemset> = BTreeSet::new();
    let mut columns: Vec<Vec<u32>> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    let mut scores = vec![0.0; db.len()];

    let mut rows: Vec<TraceRow> = Vec::new();
    let mut v0 = 0.0;
    let mut stop = StopReason::IterationCap;

    for iter in 0..cfg.max_outer {
        let t0 = Instant::now();
        let (alpha, zero_set) = weights_from_scores(cfg.loss, cfg.c, &scores, labels)?;

        // Rows with zero gradient cannot move any weighted frequency;
        // dropping them up front shrinks the squared-hinge mining input.
        let batch = if !zero_set.is_empty() {
            let (pruned_db, pruned_alpha) = drop_transactions(db, &alpha, &zero_set)?;
            schedule.top_k_excluding(&pruned_db, &pruned_alpha, cfg.k, cfg.batch, budget, &fset)?
        } else {
            schedule.top_k_excluding(db, &alpha, cfg.k, cfg.batch, budget, &fset)?
        };

        let active_violation: f64 =
            residuals_with_columns(cfg.loss, cfg.c, &columns, labels, &scores, &weights)
                .iter()
                .sum();
        let pool_violation: f64 = batch
            .pool
            .iter()
            .map(|cand| (cand.weighted_frequency.abs() - 1.0).max(0.0))
            .sum();
        // The `+ 0.0` turns an empty-sum negative zero into plain zero.
        let v = active_violation + pool_violation + 0.0;
        if iter == 0 {
            v0 = v;
        }

        if batch.pool.is_empty() {
            let objective = objective_value(cfg.loss, cfg.c, &scores, labels, &weights);
            rows.push(TraceRow { iter, active: features.len(), v, objective, mined: 0, wall: t0.elapsed() });
            stop = StopReason::NoCandidates;
            break;
        }
        if v < cfg.epsilon * v0 {
            let objective = objective_value(cfg.loss, cfg.c, &scores, labels, &weights);
            rows.push(TraceRow {
                iter,
                active: features.len(),
                v,
                objective,
                mined: batch.pool.len(),
                wall: t0.elapsed(),
            });
            stop = StopReason::Converged;
            break;
        }

        for cand in &batch.selected {
            features.push(cand.itemset.clone());
            fset.insert(cand.itemset.clone());
            columns.push(occurrence_list(db, &cand.itemset)?);
            weights.push(0.0);
        }

        let outcome = {
            let problem = ActiveProblem {
                db,
                loss: cfg.loss,
                c: cfg.c,
                features: &features,
                warm_start: &weights,
                tolerance: cfg.solver_tolerance,
                max_sweeps: cfg.solver_max_sweeps,
            };
            optimize_with_columns(&problem, &columns)?
        };
        weights = outcome.weights;
        scores = outcome.scores;

        rows.push(TraceRow {
            iter,
            active: features.len(),
            v,
            objective: outcome.objective,
            mined: batch.pool.len(),
            wall: t0.elapsed(),
        });
    }

    let mut model = SparseModel::with_meta(db.d(), cfg.k, cfg.loss, cfg.c);
    for (p, &w) in features.iter().zip(&weights) {
        if w != 0.0 {
            model.set_weight(p.clone(), w)?;
        }
    }
    Ok((model, TrainTrace { rows, stop, v0 }))
}
