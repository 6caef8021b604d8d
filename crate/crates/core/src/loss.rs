//! Loss functions on the margin, their score derivatives, and the
//! per-transaction mining weights alpha_i = C * dl/df at the current model.

use crate::datakit::{Transaction, TransactionDatabase};
use crate::error::{CbmError, Result};
use crate::miner::TransactionWeights;
use crate::model::{predict_score, SparseModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Logistic,
    L2Hinge,
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LossKind::Logistic => write!(f, "logistic"),
            LossKind::L2Hinge => write!(f, "l2hinge"),
        }
    }
}

impl std::str::FromStr for LossKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "logistic" => Ok(LossKind::Logistic),
            "l2hinge" => Ok(LossKind::L2Hinge),
            other => Err(format!("unknown loss `{other}`; expected `logistic` or `l2hinge`")),
        }
    }
}

/// l(f, y) for y in {-1, +1}.
///
/// Logistic: log(1 + exp(-y*f)), evaluated as log1p(exp(-|z|)) + max(0, -z)
/// with z = y*f so large scores cannot overflow. L2-hinge: (1 - y*f)^2 when
/// the margin is violated (1 - y*f > 0), else 0.
pub fn loss_value(kind: LossKind, f: f64, y: i8) -> f64 {
    debug_assert!(y == 1 || y == -1);
    let z = f64::from(y) * f;
    match kind {
        LossKind::Logistic => (-z.abs()).exp().ln_1p() + (-z).max(0.0),
        LossKind::L2Hinge => {
            let s = 1.0 - z;
            if s > 0.0 {
                s * s
            } else {
                0.0
            }
        }
    }
}

/// dl/df. Logistic: -y / (1 + exp(y*f)). L2-hinge: -2y(1 - y*f) when
/// 1 - y*f > 0, else 0 (the function is differentiable at the kink, both
/// one-sided derivatives are 0).
pub fn loss_grad(kind: LossKind, f: f64, y: i8) -> f64 {
    debug_assert!(y == 1 || y == -1);
    let yf = f64::from(y);
    let z = yf * f;
    match kind {
        LossKind::Logistic => -yf / (1.0 + z.exp()),
        LossKind::L2Hinge => {
            let s = 1.0 - z;
            if s > 0.0 {
                -2.0 * yf * s
            } else {
                0.0
            }
        }
    }
}

/// Second derivative with respect to the score, used by the solver's
/// coordinate Newton steps. The L2-hinge value is the one-sided 2 on the
/// violated side, 0 otherwise.
pub(crate) fn loss_curvature(kind: LossKind, f: f64, y: i8) -> f64 {
    let z = f64::from(y) * f;
    match kind {
        LossKind::Logistic => {
            let p = 1.0 / (1.0 + z.exp());
            p * (1.0 - p)
        }
        LossKind::L2Hinge => {
            if 1.0 - z > 0.0 {
                2.0
            } else {
                0.0
            }
        }
    }
}

/// Mining weights at the current model: alpha_i = C * loss_grad(f(x_i), y_i),
/// plus the indices of zero-gradient transactions. For the L2-hinge the zero
/// set is every i with 1 - y_i*f(x_i) <= 0; dropping those rows before
/// mining changes no weighted frequency. The logistic gradient never
/// vanishes, so its zero set is empty.
pub fn transaction_weights(
    kind: LossKind,
    model: &SparseModel,
    db: &TransactionDatabase,
    c: f64,
) -> Result<(TransactionWeights, Vec<u32>)> {
    if !(c > 0.0) {
        return Err(CbmError::InvalidArgument(format!("C must be > 0, got {c}")));
    }
    let scores: Vec<f64> = db.transactions().iter().map(|t| predict_score(model, t)).collect();
    weights_from_scores(kind, c, &scores, db.labels())
}

/// Same computation when the caller already has the score vector.
pub fn weights_from_scores(
    kind: LossKind,
    c: f64,
    scores: &[f64],
    labels: &[i8],
) -> Result<(TransactionWeights, Vec<u32>)> {
    debug_assert_eq!(scores.len(), labels.len());
    let mut alpha = Vec::with_capacity(scores.len());
    let mut zero_set = Vec::new();
    for (i, (&f, &y)) in scores.iter().zip(labels).enumerate() {
        alpha.push(c * loss_grad(kind, f, y));
        if kind == LossKind::L2Hinge && 1.0 - f64::from(y) * f <= 0.0 {
            zero_set.push(i as u32);
        }
    }
    Ok((TransactionWeights::new(alpha)?, zero_set))
}

/// Copies the database and weights without the given rows (sorted, 0-based).
pub fn drop_transactions(
    db: &TransactionDatabase,
    alpha: &TransactionWeights,
    drop_sorted: &[u32],
) -> Result<(TransactionDatabase, TransactionWeights)> {
    debug_assert!(drop_sorted.windows(2).all(|w| w[0] < w[1]));
    let mut kept_t: Vec<Transaction> = Vec::with_capacity(db.len() - drop_sorted.len());
    let mut kept_y: Vec<i8> = Vec::with_capacity(kept_t.capacity());
    let mut kept_a: Vec<f64> = Vec::with_capacity(kept_t.capacity());
    let mut next_drop = 0;
    for i in 0..db.len() {
        if next_drop < drop_sorted.len() && drop_sorted[next_drop] as usize == i {
            next_drop += 1;
            continue;
        }
        kept_t.push(db.transactions()[i].clone());
        kept_y.push(db.labels()[i]);
        kept_a.push(alpha.as_slice()[i]);
    }
    Ok((
        TransactionDatabase::new(db.d(), kept_t, kept_y)?,
        TransactionWeights::new(kept_a)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::miner::{mine_signed, Itemset};
    use crate::DegreeCap;

    #[test]
    fn logistic_at_zero_score_is_log_two() {
        let v = loss_value(LossKind::Logistic, 0.0, 1);
        assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(v, loss_value(LossKind::Logistic, 0.0, -1));
    }

    #[test]
    fn logistic_is_finite_for_extreme_scores() {
        for f in [-1e6, -750.0, 750.0, 1e6] {
            for y in [-1i8, 1] {
                assert!(loss_value(LossKind::Logistic, f, y).is_finite());
                assert!(loss_grad(LossKind::Logistic, f, y).is_finite());
            }
        }
        // exact tail: a hugely confident correct score has ~zero loss
        assert_eq!(loss_value(LossKind::Logistic, 1e6, 1), 0.0);
        assert!((loss_value(LossKind::Logistic, -1e6, 1) - 1e6).abs() < 1e-9);
    }

    #[test]
    fn hinge_value_is_zero_at_and_beyond_the_margin() {
        assert_eq!(loss_value(LossKind::L2Hinge, 1.0, 1), 0.0);
        assert_eq!(loss_value(LossKind::L2Hinge, 3.0, 1), 0.0);
        assert_eq!(loss_value(LossKind::L2Hinge, 0.5, 1), 0.25);
        assert_eq!(loss_value(LossKind::L2Hinge, -1.0, 1), 4.0);
    }

    #[test]
    fn gradients_at_reference_points() {
        assert_eq!(loss_grad(LossKind::Logistic, 0.0, 1), -0.5);
        assert_eq!(loss_grad(LossKind::Logistic, 0.0, -1), 0.5);
        assert_eq!(loss_grad(LossKind::L2Hinge, 1.0, 1), 0.0);
        assert_eq!(loss_grad(LossKind::L2Hinge, 2.0, 1), 0.0);
        assert_eq!(loss_grad(LossKind::L2Hinge, 0.0, 1), -2.0);
    }

    #[test]
    fn central_differences_match_gradients_on_a_sample() {
        let h = 1e-5;
        let mut x = 0.37;
        for kind in [LossKind::Logistic, LossKind::L2Hinge] {
            for i in 0..200 {
                // cheap deterministic scatter over [-8, 8]
                x = (x * 997.0 + i as f64 * 0.61).rem_euclid(16.0) - 8.0;
                let y: i8 = if i % 2 == 0 { 1 } else { -1 };
                if kind == LossKind::L2Hinge && (1.0 - f64::from(y) * x).abs() < 1e-4 {
                    continue;
                }
                let fd = (loss_value(kind, x + h, y) - loss_value(kind, x - h, y)) / (2.0 * h);
                let g = loss_grad(kind, x, y);
                let rel = (fd - g).abs() / g.abs().max(1e-300);
                assert!(rel < 1e-6, "{kind} f={x} y={y}: fd={fd} grad={g}");
            }
        }
    }

    #[test]
    fn empty_model_logistic_weights_are_half_c_against_the_label() {
        let db = crate::datakit::parse_libsvm("+1 1:1\n-1 2:1\n".as_bytes(), None).unwrap();
        let model = SparseModel::new(db.d(), DegreeCap::Unbounded);
        let (alpha, zero) = transaction_weights(LossKind::Logistic, &model, &db, 1.0).unwrap();
        assert_eq!(alpha.as_slice(), &[-0.5, 0.5]);
        assert!(zero.is_empty());
    }

    #[test]
    fn satisfied_hinge_margins_zero_out_and_report_all_rows() {
        let db = crate::datakit::parse_libsvm("+1 1:1\n+1 2:1\n".as_bytes(), None).unwrap();
        let mut model = SparseModel::new(db.d(), DegreeCap::Unbounded);
        model.set_weight(Itemset::empty(), 2.0).unwrap();
        let (alpha, zero) = transaction_weights(LossKind::L2Hinge, &model, &db, 1.0).unwrap();
        assert_eq!(alpha.as_slice(), &[0.0, 0.0]);
        assert_eq!(zero, vec![0, 1]);
    }

    #[test]
    fn weights_scale_exactly_with_c() {
        let db = crate::datakit::parse_libsvm("+1 1:1\n-1 2:1\n".as_bytes(), None).unwrap();
        let model = SparseModel::new(db.d(), DegreeCap::Unbounded);
        let (a1, _) = transaction_weights(LossKind::Logistic, &model, &db, 1.0).unwrap();
        let (a8, _) = transaction_weights(LossKind::Logistic, &model, &db, 8.0).unwrap();
        for (x, y) in a1.as_slice().iter().zip(a8.as_slice()) {
            assert_eq!(*y, 8.0 * *x);
        }
    }

    #[test]
    fn dropping_the_zero_set_leaves_mining_unchanged() {
        let db = crate::datakit::parse_libsvm(
            "+1 1:1\n-1 1:1 2:1\n+1 2:1\n-1 3:1\n".as_bytes(),
            None,
        )
        .unwrap();
        let mut model = SparseModel::new(db.d(), DegreeCap::Unbounded);
        model.set_weight(Itemset::new(vec![3]).unwrap(), -4.0).unwrap();
        model.set_weight(Itemset::new(vec![1]).unwrap(), 2.0).unwrap();
        let (alpha, zero) = transaction_weights(LossKind::L2Hinge, &model, &db, 2.0).unwrap();
        assert!(!zero.is_empty());
        let (pruned_db, pruned_alpha) = drop_transactions(&db, &alpha, &zero).unwrap();
        let full = mine_signed(&db, &alpha, 1.0, DegreeCap::Unbounded).unwrap();
        let pruned = mine_signed(&pruned_db, &pruned_alpha, 1.0, DegreeCap::Unbounded).unwrap();
        assert_eq!(full, pruned);
    }

    #[test]
    fn loss_kind_parses_and_prints() {
        assert_eq!("logistic".parse::<LossKind>().unwrap(), LossKind::Logistic);
        assert_eq!("l2hinge".parse::<LossKind>().unwrap(), LossKind::L2Hinge);
        assert!("hinge".parse::<LossKind>().is_err());
        assert_eq!(LossKind::Logistic.to_string(), "logistic");
        assert_eq!(LossKind::L2Hinge.to_string(), "l2hinge");
    }
}
