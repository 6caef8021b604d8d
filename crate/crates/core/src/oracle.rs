//! Slow, independent reference implementations used to cross-check the fast
//! paths in tests: exhaustive itemset enumeration, brute-force candidate
//! scoring, fitting over the fully expanded feature space, an accelerated
//! proximal-gradient minimizer, and exact interpolation of scores on the
//! boolean cube.

use std::collections::BTreeSet;

use crate::datakit::{Transaction, TransactionDatabase};
use crate::error::{CbmError, Result};
use crate::loss::{loss_grad, loss_value, LossKind};
use crate::miner::{weighted_frequency, Itemset, MinedCandidate, TransactionWeights};
use crate::model::SparseModel;
use crate::solver::{build_columns, optimize_active, ActiveProblem, SolveOutcome};
use crate::DegreeCap;

/// Hard cap on distinct itemsets the enumerators will materialize.
pub const ENUMERATION_CAP: usize = 1_000_000;

/// Every itemset of size within the cap that is contained in at least one
/// transaction, in itemset order. Errors once the count passes
/// [`ENUMERATION_CAP`].
pub fn enumerate_occurring_itemsets(
    db: &TransactionDatabase,
    k: DegreeCap,
) -> Result<Vec<Itemset>> {
    let mut seen: BTreeSet<Itemset> = BTreeSet::new();
    let mut current: Vec<u32> = Vec::new();
    for t in db.transactions() {
        subsets_into(t.items(), 0, k, &mut current, &mut seen)?;
    }
    Ok(seen.into_iter().collect())
}

fn subsets_into(
    items: &[u32],
    start: usize,
    k: DegreeCap,
    current: &mut Vec<u32>,
    out: &mut BTreeSet<Itemset>,
) -> Result<()> {
    out.insert(Itemset::new(current.clone()).expect("subset of a valid transaction"));
    if out.len() > ENUMERATION_CAP {
        return Err(CbmError::SizeLimit(format!(
            "more than {ENUMERATION_CAP} occurring itemsets"
        )));
    }
    if !k.allows(current.len() + 1) {
        return Ok(());
    }
    for idx in start..items.len() {
        current.push(items[idx]);
        subsets_into(items, idx + 1, k, current, out)?;
        current.pop();
    }
    Ok(())
}

/// Candidate mining by direct enumeration: every occurring itemset within
/// the size cap whose weighted frequency exceeds `theta` in magnitude, in
/// itemset order. The empty itemset participates like any other.
pub fn brute_force_candidates(
    db: &TransactionDatabase,
    alpha: &TransactionWeights,
    k: DegreeCap,
    theta: f64,
) -> Result<Vec<MinedCandidate>> {
    if !(theta > 0.0) {
        return Err(CbmError::InvalidArgument(format!(
            "threshold must be positive, got {theta}"
        )));
    }
    if alpha.len() != db.len() {
        return Err(CbmError::InvalidArgument(format!(
            "{} weights for {} transactions",
            alpha.len(),
            db.len()
        )));
    }
    let mut out = Vec::new();
    for p in enumerate_occurring_itemsets(db, k)? {
        let wf = weighted_frequency(db, alpha, &p)?;
        if wf.abs() > theta {
            out.push(MinedCandidate { itemset: p, weighted_frequency: wf });
        }
    }
    Ok(out)
}

/// An L1 fit over every occurring conjunction at once.
#[derive(Debug, Clone)]
pub struct ExpandedFit {
    pub features: Vec<Itemset>,
    pub weights: Vec<f64>,
    pub objective: f64,
    pub converged: bool,
}

/// Materializes the whole feature space within the size cap and fits it
/// directly, bypassing mining. Feasible only for small instances.
pub fn expand_and_solve(
    db: &TransactionDatabase,
    loss: LossKind,
    c: f64,
    k: DegreeCap,
) -> Result<ExpandedFit> {
    let features = enumerate_occurring_itemsets(db, k)?;
    let warm = vec![0.0; features.len()];
    let mut problem = ActiveProblem::new(db, loss, c, &features, &warm);
    problem.tolerance = 1e-7;
    problem.max_sweeps = 10_000;
    let SolveOutcome { weights, objective, converged, .. } = optimize_active(&problem)?;
    Ok(ExpandedFit { features, weights, objective, converged })
}

#[derive(Debug, Clone)]
pub struct ReferenceFit {
    pub weights: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

/// Accelerated proximal-gradient (soft-thresholding) minimization of the
/// same objective as the coordinate solver, written against the loss
/// functions only. The step size comes from a Frobenius bound on the
/// curvature, momentum restarts whenever the objective rises.
pub fn reference_minimize(
    db: &TransactionDatabase,
    loss: LossKind,
    c: f64,
    features: &[Itemset],
    max_iters: usize,
) -> Result<ReferenceFit> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(CbmError::InvalidArgument(format!(
            "loss scale C must be a positive real, got {c}"
        )));
    }
    let columns = build_columns(db, features)?;
    let labels = db.labels();
    let m = db.len();
    let n = features.len();
    let nnz: usize = columns.iter().map(Vec::len).sum();
    let curvature_bound = match loss {
        LossKind::Logistic => 0.25,
        LossKind::L2Hinge => 2.0,
    };
    let step = 1.0 / (c * curvature_bound * nnz as f64).max(1e-12);

    let scores_of = |w: &[f64]| {
        let mut s = vec![0.0; m];
        for (col, &wj) in columns.iter().zip(w) {
            if wj != 0.0 {
                for &i in col {
                    s[i as usize] += wj;
                }
            }
        }
        s
    };
    let objective_of = |w: &[f64]| {
        let s = scores_of(w);
        let data: f64 = s.iter().zip(labels).map(|(&f, &y)| loss_value(loss, f, y)).sum();
        c * data + w.iter().map(|x| x.abs()).sum::<f64>()
    };

    let mut w = vec![0.0; n];
    let mut z = w.clone();
    let mut momentum = 1.0f64;
    let mut obj = objective_of(&w);
    let mut iterations = 0;
    for it in 0..max_iters {
        iterations = it + 1;
        let s = scores_of(&z);
        let mut next = vec![0.0; n];
        for j in 0..n {
            let g: f64 = columns[j]
                .iter()
                .map(|&i| loss_grad(loss, s[i as usize], labels[i as usize]))
                .sum();
            let moved = z[j] - step * c * g;
            next[j] = if moved > step {
                moved - step
            } else if moved < -step {
                moved + step
            } else {
                0.0
            };
        }
        let next_obj = objective_of(&next);
        if next_obj > obj {
            // Restart momentum from the last good point.
            z = w.clone();
            momentum = 1.0;
            continue;
        }
        let shift = w
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        z = next
            .iter()
            .zip(&w)
            .map(|(nw, ow)| nw + (momentum - 1.0) / next_momentum * (nw - ow))
            .collect();
        momentum = next_momentum;
        w = next;
        obj = next_obj;
        if shift <= 1e-12 * (1.0 + w.iter().fold(0.0f64, |a, &b| a.max(b.abs()))) {
            break;
        }
    }
    Ok(ReferenceFit { weights: w, objective: obj, iterations })
}

/// Largest attribute index the cube interpolation will expand.
pub const INTERPOLATION_MAX_D: u32 = 20;

/// The unique conjunction-weight vector whose scores match the given
/// targets on the listed points of the d-cube, with unlisted points scoring
/// 0. Two listings of the same point with different targets are an error.
pub fn mobius_interpolation(
    d: u32,
    points: &[Transaction],
    targets: &[f64],
) -> Result<SparseModel> {
    if d > INTERPOLATION_MAX_D {
        return Err(CbmError::SizeLimit(format!(
            "interpolation expands 2^d weights; d={d} exceeds {INTERPOLATION_MAX_D}"
        )));
    }
    if points.len() != targets.len() {
        return Err(CbmError::InvalidArgument(format!(
            "{} targets for {} points",
            targets.len(),
            points.len()
        )));
    }
    let size = 1usize << d;
    let mut g = vec![0.0f64; size];
    let mut specified = vec![false; size];
    for (t, &target) in points.iter().zip(targets) {
        if !target.is_finite() {
            return Err(CbmError::Numeric(format!("target {target} is not finite")));
        }
        if let Some(max) = t.max_item() {
            if max > d {
                return Err(CbmError::InvalidArgument(format!(
                    "point {t:?} uses an attribute beyond d={d}"
                )));
            }
        }
        let mask: usize = t.items().iter().map(|&i| 1usize << (i - 1)).sum();
        if specified[mask] {
            if g[mask] != target {
                return Err(CbmError::Inconsistent(format!(
                    "point listed twice with targets {} and {target}",
                    g[mask]
                )));
            }
        } else {
            specified[mask] = true;
            g[mask] = target;
        }
    }

    // In-place subset-sum inversion: after processing every bit, g[mask]
    // holds the alternating-sign sum of the original values over subsets.
    for bit in 0..d {
        let b = 1usize << bit;
        for mask in 0..size {
            if mask & b != 0 {
                g[mask] -= g[mask ^ b];
            }
        }
    }

    let mut model = SparseModel::new(d, DegreeCap::Unbounded);
    for (mask, &w) in g.iter().enumerate() {
        if w != 0.0 {
            let items: Vec<u32> = (0..d).filter(|bit| mask & (1 << bit) != 0).map(|bit| bit + 1).collect();
            model.set_weight(Itemset::new(items)?, w)?;
        }
    }
    Ok(model)
}
