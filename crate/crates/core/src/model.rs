//! The sparse predictor: a weight per conjunction feature (itemset), scoring
//! by summing weights of features contained in a transaction, top-weight
//! reporting, and a plain-text serialization format.

use std::collections::BTreeMap;

use crate::datakit::{Transaction, TransactionDatabase};
use crate::error::{CbmError, Result};
use crate::loss::LossKind;
use crate::miner::Itemset;
use crate::DegreeCap;

/// f(x) = sum over stored (p, w) of w * [p is contained in x].
///
/// Only nonzero weights are stored. `loss` and `c` record how the model was
/// trained and ride along in the serialized form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseModel {
    d: u32,
    k: DegreeCap,
    loss: LossKind,
    c: f64,
    weights: BTreeMap<Itemset, f64>,
}

impl SparseModel {
    pub fn new(d: u32, k: DegreeCap) -> Self {
        SparseModel::with_meta(d, k, LossKind::Logistic, 1.0)
    }

    pub fn with_meta(d: u32, k: DegreeCap, loss: LossKind, c: f64) -> Self {
        SparseModel { d, k, loss, c, weights: BTreeMap::new() }
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn degree_cap(&self) -> DegreeCap {
        self.k
    }

    pub fn loss(&self) -> LossKind {
        self.loss
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Sets (or, for weight 0, removes) a feature weight. The itemset must
    /// respect the degree cap and the attribute range.
    pub fn set_weight(&mut self, p: Itemset, w: f64) -> Result<()> {
        if !w.is_finite() {
            return Err(CbmError::Numeric(format!("weight {w} for feature {p}")));
        }
        if !self.k.allows(p.len()) {
            return Err(CbmError::InvalidArgument(format!(
                "feature {p} has {} items, degree cap is {}",
                p.len(),
                self.k
            )));
        }
        if let Some(max) = p.max_item() {
            if max > self.d {
                return Err(CbmError::InvalidArgument(format!(
                    "feature {p} exceeds attribute count d={}",
                    self.d
                )));
            }
        }
        if w == 0.0 {
            self.weights.remove(&p);
        } else {
            self.weights.insert(p, w);
        }
        Ok(())
    }

    pub fn weight(&self, p: &Itemset) -> f64 {
        self.weights.get(p).copied().unwrap_or(0.0)
    }

    /// Stored (feature, weight) pairs in itemset order (size, then lex).
    pub fn weights(&self) -> impl Iterator<Item = (&Itemset, f64)> {
        self.weights.iter().map(|(p, &w)| (p, w))
    }

    /// Number of stored (nonzero) weights.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// 1 iff p is contained in t; the empty itemset is the constant feature.
pub fn feature_value(p: &Itemset, t: &Transaction) -> u8 {
    u8::from(p.is_subset_of(t))
}

pub fn predict_score(model: &SparseModel, t: &Transaction) -> f64 {
    let mut score = 0.0;
    for (p, w) in model.weights() {
        if p.is_subset_of(t) {
            score += w;
        }
    }
    score
}

/// Sign of the score; an exact 0 maps to +1.
pub fn predict_label(model: &SparseModel, t: &Transaction) -> i8 {
    if predict_score(model, t) >= 0.0 {
        1
    } else {
        -1
    }
}

/// Fraction of database rows whose predicted label matches.
pub fn accuracy(model: &SparseModel, db: &TransactionDatabase) -> f64 {
    if db.is_empty() {
        return 0.0;
    }
    let correct = db
        .transactions()
        .iter()
        .zip(db.labels())
        .filter(|(t, &y)| predict_label(model, t) == y)
        .count();
    correct as f64 / db.len() as f64
}

/// One row of the interpretability report.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightReportRow {
    pub weight: f64,
    pub itemset: Itemset,
    /// One label per item: the supplied attribute name, or the raw index
    /// when no table is given or the index is past its end. Empty for the
    /// bias feature.
    pub names: Vec<String>,
}

/// The `n` largest weights by absolute value, ties broken by itemset order
/// (smaller size, then lexicographic).
pub fn top_weights(model: &SparseModel, n: usize, names: Option<&[String]>) -> Vec<WeightReportRow> {
    let mut entries: Vec<(&Itemset, f64)> = model.weights().collect();
    entries.sort_by(|a, b| {
        b.1.abs()
            .total_cmp(&a.1.abs())
            .then_with(|| a.0.cmp(b.0))
    });
    entries
        .into_iter()
        .take(n)
        .map(|(p, w)| {
            let labels = p
                .items()
                .iter()
                .map(|&i| match names.and_then(|ns| ns.get(i as usize - 1)) {
                    Some(name) => name.clone(),
                    None => i.to_string(),
                })
                .collect();
            WeightReportRow { weight: w, itemset: p.clone(), names: labels }
        })
        .collect()
}

const MODEL_MAGIC: &str = "cbm";
const MODEL_VERSION: &str = "v1";

/// Plain-text form: a header line
/// `cbm v1 d=<d> k=<k|inf> loss=<name> C=<val>`, then one line per weight,
/// `<weight>\t<items>` with the empty itemset written `-`. Reals carry 17
/// significant digits so the round trip is exact.
pub fn serialize(model: &SparseModel) -> String {
    let mut out = format!(
        "{MODEL_MAGIC} {MODEL_VERSION} d={} k={} loss={} C={:.16e}\n",
        model.d, model.k, model.loss, model.c
    );
    for (p, w) in model.weights() {
        out.push_str(&format!("{w:.16e}\t{p}\n"));
    }
    out
}

pub fn deserialize(text: &str) -> Result<SparseModel> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| CbmError::parse(1, "empty model file"))?;
    let mut model = parse_header(header)?;
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let (w_str, p_str) = line
            .split_once('\t')
            .ok_or_else(|| CbmError::parse(line_no, "expected `<weight>\\t<items>`"))?;
        let w: f64 = w_str
            .parse()
            .map_err(|_| CbmError::parse(line_no, format!("bad weight `{w_str}`")))?;
        if !w.is_finite() || w == 0.0 {
            return Err(CbmError::parse(line_no, format!("weight must be finite and nonzero, got {w}")));
        }
        let p: Itemset = p_str
            .parse()
            .map_err(|e| CbmError::parse(line_no, e))?;
        if model.weights.contains_key(&p) {
            return Err(CbmError::parse(line_no, format!("duplicate feature {p}")));
        }
        model
            .set_weight(p, w)
            .map_err(|e| CbmError::parse(line_no, e.to_string()))?;
    }
    Ok(model)
}

fn parse_header(header: &str) -> Result<SparseModel> {
    let header = header.trim_end_matches('\r');
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 6 || tokens[0] != MODEL_MAGIC {
        return Err(CbmError::parse(1, format!("not a model file: `{header}`")));
    }
    if tokens[1] != MODEL_VERSION {
        return Err(CbmError::parse(
            1,
            format!("unsupported model version `{}`, expected {MODEL_VERSION}", tokens[1]),
        ));
    }
    let field = |tok: &str, key: &str| -> Result<String> {
        tok.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix('='))
            .map(str::to_owned)
            .ok_or_else(|| CbmError::parse(1, format!("expected `{key}=...`, got `{tok}`")))
    };
    let d: u32 = field(tokens[2], "d")?
        .parse()
        .map_err(|_| CbmError::parse(1, "bad d"))?;
    let k: DegreeCap = field(tokens[3], "k")?
        .parse()
        .map_err(|e| CbmError::parse(1, e))?;
    let loss: LossKind = field(tokens[4], "loss")?
        .parse()
        .map_err(|e| CbmError::parse(1, e))?;
    let c: f64 = field(tokens[5], "C")?
        .parse()
        .map_err(|_| CbmError::parse(1, "bad C"))?;
    if !c.is_finite() || c <= 0.0 {
        return Err(CbmError::parse(1, format!("C must be a positive real, got {c}")));
    }
    Ok(SparseModel::with_meta(d, k, loss, c))
}
