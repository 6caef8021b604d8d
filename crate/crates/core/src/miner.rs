//! Itemset mining over weighted transactions.
//!
//! Frequency and weighted frequency, a depth-first backtracking search with
//! tail extension and per-branch occurrence lists, two-stage mining for
//! signed weights, and top-K candidate extraction with a dynamic threshold
//! schedule. For nonnegative weights the weighted frequency is monotone
//! under itemset extension, which is what makes branch pruning exact.

use std::collections::{BTreeMap, BTreeSet};

use crate::datakit::{Transaction, TransactionDatabase};
use crate::error::{CbmError, Result};
use crate::DegreeCap;

/// A sorted set of attribute indices. The empty itemset is valid and stands
/// for the constant feature (true on every transaction).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Itemset {
    items: Vec<u32>,
}

impl Itemset {
    /// Builds from arbitrary order; sorts and deduplicates. Index 0 is rejected.
    pub fn new(mut items: Vec<u32>) -> Result<Self> {
        if items.contains(&0) {
            return Err(CbmError::InvalidArgument(
                "attribute indices are 1-based; 0 is not a valid item".into(),
            ));
        }
        items.sort_unstable();
        items.dedup();
        Ok(Itemset { items })
    }

    pub fn empty() -> Self {
        Itemset { items: Vec::new() }
    }

    /// Items must already be strictly increasing and nonzero.
    pub(crate) fn from_sorted(items: Vec<u32>) -> Self {
        debug_assert!(items.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(items.first().is_none_or(|&i| i >= 1));
        Itemset { items }
    }

    pub fn items(&self) -> &[u32] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn max_item(&self) -> Option<u32> {
        self.items.last().copied()
    }

    pub fn is_subset_of(&self, t: &Transaction) -> bool {
        is_sorted_subset(&self.items, t.items())
    }
}

/// Itemsets order by size first, then lexicographically; this is the tie
/// order used in rankings and reports (the empty itemset sorts first).
impl Ord for Itemset {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.items
            .len()
            .cmp(&other.items.len())
            .then_with(|| self.items.cmp(&other.items))
    }
}

impl PartialOrd for Itemset {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// `-` for the empty itemset, otherwise comma-separated indices.
impl std::fmt::Display for Itemset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.items.is_empty() {
            return write!(f, "-");
        }
        for (i, item) in self.items.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{item}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Itemset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "-" {
            return Ok(Itemset::empty());
        }
        let mut items = Vec::new();
        for part in s.split(',') {
            let item: u32 = part
                .parse()
                .map_err(|_| format!("bad item `{part}` in itemset `{s}`"))?;
            if item == 0 {
                return Err(format!("item 0 in itemset `{s}`; indices start at 1"));
            }
            if let Some(&prev) = items.last() {
                if item <= prev {
                    return Err(format!("itemset `{s}` is not strictly increasing"));
                }
            }
            items.push(item);
        }
        if items.is_empty() {
            return Err(format!("empty itemset spelled `{s}`; use `-`"));
        }
        Ok(Itemset { items })
    }
}

/// Two-pointer subset test on sorted slices.
pub(crate) fn is_sorted_subset(p: &[u32], t: &[u32]) -> bool {
    let mut ti = 0;
    'outer: for &x in p {
        while ti < t.len() {
            match t[ti].cmp(&x) {
                std::cmp::Ordering::Less => ti += 1,
                std::cmp::Ordering::Equal => {
                    ti += 1;
                    continue 'outer;
                }
                std::cmp::Ordering::Greater => return false,
            }
        }
        return false;
    }
    true
}

/// Per-transaction real weights, aligned with the database's transaction order.
#[derive(Debug, Clone, PartialEq)]
pub struct TransactionWeights {
    alpha: Vec<f64>,
}

impl TransactionWeights {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if let Some(v) = alpha.iter().find(|v| !v.is_finite()) {
            return Err(CbmError::Numeric(format!("non-finite transaction weight {v}")));
        }
        Ok(TransactionWeights { alpha })
    }

    /// All-ones weights, so weighted frequency reduces to plain frequency.
    pub fn uniform(m: usize) -> Self {
        TransactionWeights { alpha: vec![1.0; m] }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.alpha
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }
}

/// An itemset emitted by the miner together with its signed weighted
/// frequency over the full database.
#[derive(Debug, Clone, PartialEq)]
pub struct MinedCandidate {
    pub itemset: Itemset,
    pub weighted_frequency: f64,
}

fn check_itemset(db: &TransactionDatabase, p: &Itemset) -> Result<()> {
    if let Some(max) = p.max_item() {
        if max > db.d() {
            return Err(CbmError::InvalidArgument(format!(
                "itemset contains item {max} but the database has d={}",
                db.d()
            )));
        }
    }
    Ok(())
}

fn check_weights(db: &TransactionDatabase, alpha: &TransactionWeights) -> Result<()> {
    if alpha.len() != db.len() {
        return Err(CbmError::InvalidArgument(format!(
            "{} transaction weights for {} transactions",
            alpha.len(),
            db.len()
        )));
    }
    Ok(())
}

/// Number of transactions containing `p`.
pub fn frequency(db: &TransactionDatabase, p: &Itemset) -> Result<usize> {
    check_itemset(db, p)?;
    Ok(db
        .transactions()
        .iter()
        .filter(|t| is_sorted_subset(p.items(), t.items()))
        .count())
}

/// Sum of weights over the transactions containing `p`.
pub fn weighted_frequency(
    db: &TransactionDatabase,
    alpha: &TransactionWeights,
    p: &Itemset,
) -> Result<f64> {
    check_itemset(db, p)?;
    check_weights(db, alpha)?;
    Ok(rescore(db, alpha.as_slice(), p.items()))
}

fn rescore(db: &TransactionDatabase, alpha: &[f64], items: &[u32]) -> f64 {
    let mut sum = 0.0;
    for (t, &a) in db.transactions().iter().zip(alpha) {
        if is_sorted_subset(items, t.items()) {
            sum += a;
        }
    }
    sum
}

/// Indices (0-based, ascending) of the transactions containing `p`.
pub fn occurrence_list(db: &TransactionDatabase, p: &Itemset) -> Result<Vec<u32>> {
    check_itemset(db, p)?;
    Ok(db
        .transactions()
        .iter()
        .enumerate()
        .filter(|(_, t)| is_sorted_subset(p.items(), t.items()))
        .map(|(i, _)| i as u32)
        .collect())
}

struct Emitter {
    out: Vec<(Vec<u32>, f64)>,
    limit: usize,
    truncated: bool,
}

impl Emitter {
    fn new(limit: usize) -> Self {
        Emitter { out: Vec::new(), limit, truncated: false }
    }

    /// False once the emission budget is exhausted; the attempt that would
    /// exceed it marks the run truncated.
    fn emit(&mut self, items: &[u32], wf: f64) -> bool {
        if self.out.len() >= self.limit {
            self.truncated = true;
            return false;
        }
        self.out.push((items.to_vec(), wf));
        true
    }
}

/// Depth-first tail-extension search over a (sub)database given as item
/// slices plus nonnegative weights. Emits in discovery order: a node first,
/// then its extensions in ascending item order.
fn mine_nonneg_core(
    txs: &[&[u32]],
    alpha: &[f64],
    theta: f64,
    depth_cap: DegreeCap,
    em: &mut Emitter,
) {
    let total: f64 = alpha.iter().sum();
    if !(total > theta) {
        // nothing to emit: by monotonicity no superset can exceed theta either
        return;
    }
    if !em.emit(&[], total) {
        return;
    }
    if !depth_cap.allows(1) {
        return;
    }
    let occ: Vec<u32> = (0..txs.len() as u32).collect();
    let mut prefix = Vec::new();
    descend(txs, alpha, theta, depth_cap, em, &mut prefix, &occ, 0);
}

#[allow(clippy::too_many_arguments)]
fn descend(
    txs: &[&[u32]],
    alpha: &[f64],
    theta: f64,
    depth_cap: DegreeCap,
    em: &mut Emitter,
    prefix: &mut Vec<u32>,
    occ: &[u32],
    last: u32,
) -> bool {
    // occurrence-deliver: one scan of the branch's transactions buckets every
    // extension item with its weight sum and conditional occurrence list
    let mut buckets: BTreeMap<u32, (f64, Vec<u32>)> = BTreeMap::new();
    for &tid in occ {
        let items = txs[tid as usize];
        let start = items.partition_point(|&x| x <= last);
        for &item in &items[start..] {
            let entry = buckets.entry(item).or_insert_with(|| (0.0, Vec::new()));
            entry.0 += alpha[tid as usize];
            entry.1.push(tid);
        }
    }
    for (item, (wf, tids)) in buckets {
        if wf > theta {
            prefix.push(item);
            let emitted = em.emit(prefix, wf);
            let keep_going = emitted
                && (!depth_cap.allows(prefix.len() + 1)
                    || descend(txs, alpha, theta, depth_cap, em, prefix, &tids, item));
            prefix.pop();
            if !keep_going {
                return false;
            }
        }
    }
    true
}

fn validate_limit(limit: Option<usize>) -> Result<usize> {
    match limit {
        Some(0) => Err(CbmError::InvalidArgument("emission limit must be >= 1".into())),
        Some(n) => Ok(n),
        None => Ok(usize::MAX),
    }
}

/// Mines all itemsets with weighted frequency strictly above `theta` under
/// nonnegative weights, up to `depth_cap` items, truncated to `limit`
/// emissions in depth-first discovery order.
pub fn mine_nonneg(
    db: &TransactionDatabase,
    alpha: &TransactionWeights,
    theta: f64,
    depth_cap: DegreeCap,
    limit: Option<usize>,
) -> Result<Vec<MinedCandidate>> {
    check_weights(db, alpha)?;
    if let Some(v) = alpha.as_slice().iter().find(|&&v| v < 0.0) {
        return Err(CbmError::InvalidArgument(format!(
            "mine_nonneg requires nonnegative weights, got {v}"
        )));
    }
    if !(theta > 0.0) {
        return Err(CbmError::InvalidArgument(format!("threshold must be > 0, got {theta}")));
    }
    let limit = validate_limit(limit)?;
    let txs: Vec<&[u32]> = db.transactions().iter().map(|t| t.items()).collect();
    let mut em = Emitter::new(limit);
    mine_nonneg_core(&txs, alpha.as_slice(), theta, depth_cap, &mut em);
    Ok(em
        .out
        .into_iter()
        .map(|(items, wf)| MinedCandidate {
            itemset: Itemset::from_sorted(items),
            weighted_frequency: wf,
        })
        .collect())
}

/// Result of a (possibly truncated) signed mining run.
#[derive(Debug, Clone)]
pub struct SignedMineOutcome {
    /// Candidates with |weighted frequency| > theta over the full database,
    /// in itemset order (size, then lexicographic).
    pub candidates: Vec<MinedCandidate>,
    /// True when the stage-1 emission budget cut the search short.
    pub truncated: bool,
}

/// Signed mining via the two-stage strategy, with a combined stage-1
/// emission budget across the two passes.
///
/// Stage 1 generates candidates by mining the positive-weight transactions
/// with their weights, and the negative-weight transactions with negated
/// weights (both monotone). Stage 2 re-scores every candidate against the
/// full database and keeps those with |weighted frequency| > theta.
pub fn mine_signed_limited(
    db: &TransactionDatabase,
    alpha: &TransactionWeights,
    theta: f64,
    depth_cap: DegreeCap,
    limit: Option<usize>,
) -> Result<SignedMineOutcome> {
    check_weights(db, alpha)?;
    if !(theta > 0.0) {
        return Err(CbmError::InvalidArgument(format!("threshold must be > 0, got {theta}")));
    }
    let budget = validate_limit(limit)?;
    let a = alpha.as_slice();

    let mut pos_txs: Vec<&[u32]> = Vec::new();
    let mut pos_w: Vec<f64> = Vec::new();
    let mut neg_txs: Vec<&[u32]> = Vec::new();
    let mut neg_w: Vec<f64> = Vec::new();
    for (t, &w) in db.transactions().iter().zip(a) {
        if w > 0.0 {
            pos_txs.push(t.items());
            pos_w.push(w);
        } else if w < 0.0 {
            neg_txs.push(t.items());
            neg_w.push(-w);
        }
    }

    let mut em_pos = Emitter::new(budget);
    mine_nonneg_core(&pos_txs, &pos_w, theta, depth_cap, &mut em_pos);
    let mut em_neg = Emitter::new(budget - em_pos.out.len());
    mine_nonneg_core(&neg_txs, &neg_w, theta, depth_cap, &mut em_neg);
    let truncated = em_pos.truncated || em_neg.truncated;

    let mut seen: BTreeSet<Itemset> = BTreeSet::new();
    for (items, _) in em_pos.out.into_iter().chain(em_neg.out) {
        seen.insert(Itemset::from_sorted(items));
    }
    let mut candidates = Vec::new();
    for p in seen {
        let wf = rescore(db, a, p.items());
        if wf.abs() > theta {
            candidates.push(MinedCandidate { itemset: p, weighted_frequency: wf });
        }
    }
    Ok(SignedMineOutcome { candidates, truncated })
}

/// Unbudgeted signed mining: every itemset of size <= depth_cap whose
/// weighted frequency exceeds theta in absolute value.
pub fn mine_signed(
    db: &TransactionDatabase,
    alpha: &TransactionWeights,
    theta: f64,
    depth_cap: DegreeCap,
) -> Result<Vec<MinedCandidate>> {
    Ok(mine_signed_limited(db, alpha, theta, depth_cap, None)?.candidates)
}

/// Ranking used for candidate lists: |weighted frequency| descending, ties
/// broken by smaller itemset size, then lexicographic item order.
pub fn rank_candidates(candidates: &mut [MinedCandidate]) {
    candidates.sort_by(|a, b| {
        b.weighted_frequency
            .abs()
            .total_cmp(&a.weighted_frequency.abs())
            .then_with(|| a.itemset.cmp(&b.itemset))
    });
}

/// Default stage-1 emission budget for a top-K extraction.
pub fn default_emission_cap(k: usize) -> usize {
    100 * k
}

/// One extraction round: the ranked batch plus the full candidate pool it
/// was cut from.
#[derive(Debug, Clone)]
pub struct MiningBatch {
    /// The top candidates, at most K of them.
    pub selected: Vec<MinedCandidate>,
    /// Every candidate of the accepted run (after exclusions), ranked;
    /// `selected` is its prefix.
    pub pool: Vec<MinedCandidate>,
    /// True when the run's emission budget was exhausted, so the batch is
    /// best-effort rather than the exact global top K.
    pub best_effort: bool,
    /// The threshold of the accepted run.
    pub theta: f64,
}

/// The dynamic threshold schedule: theta = 2^M with M persistent across
/// calls, starting at 10 and never increasing. Each call decrements M until
/// it has K candidates or theta reaches 1.
#[derive(Debug, Clone)]
pub struct ThresholdSchedule {
    m: u32,
}

impl Default for ThresholdSchedule {
    fn default() -> Self {
        ThresholdSchedule { m: 10 }
    }
}

impl ThresholdSchedule {
    pub fn new(initial_m: u32) -> Self {
        ThresholdSchedule { m: initial_m }
    }

    /// The current exponent M (theta = 2^M on the next run).
    pub fn m(&self) -> u32 {
        self.m
    }

    /// Extracts the top K candidates by |weighted frequency|.
    pub fn top_k_candidates(
        &mut self,
        db: &TransactionDatabase,
        alpha: &TransactionWeights,
        depth_cap: DegreeCap,
        k: usize,
        emission_cap: usize,
    ) -> Result<MiningBatch> {
        self.top_k_excluding(db, alpha, depth_cap, k, emission_cap, &BTreeSet::new())
    }

    /// Top-K extraction that ignores `exclude` itemsets entirely: they are
    /// dropped before ranking and before the "found K yet?" count, so the
    /// schedule keeps descending until it has K fresh candidates or bottoms
    /// out at theta = 1.
    pub fn top_k_excluding(
        &mut self,
        db: &TransactionDatabase,
        alpha: &TransactionWeights,
        depth_cap: DegreeCap,
        k: usize,
        emission_cap: usize,
        exclude: &BTreeSet<Itemset>,
    ) -> Result<MiningBatch> {
        if k < 1 {
            return Err(CbmError::InvalidArgument("K must be >= 1".into()));
        }
        if emission_cap < 1 {
            return Err(CbmError::InvalidArgument("emission cap must be >= 1".into()));
        }
        loop {
            let theta = f64::max(2f64.powi(self.m as i32), 1.0);
            let outcome = mine_signed_limited(db, alpha, theta, depth_cap, Some(emission_cap))?;
            let mut pool: Vec<MinedCandidate> = outcome
                .candidates
                .into_iter()
                .filter(|c| !exclude.contains(&c.itemset))
                .collect();
            rank_candidates(&mut pool);
            if pool.len() >= k || self.m == 0 || outcome.truncated {
                let selected = pool[..k.min(pool.len())].to_vec();
                return Ok(MiningBatch {
                    selected,
                    pool,
                    best_effort: outcome.truncated,
                    theta,
                });
            }
            self.m -= 1;
        }
    }
}
