//! Data ingestion: LIBSVM text parsing, the transaction encoding of boolean
//! attribute vectors, and equal-width binarization of real-valued columns.
//!
//! A data point x in {0,1}^d is stored as the set of attribute indices that
//! are 1 (its transaction). Labels are restricted to {-1, +1}.

use std::io::BufRead;

use crate::error::{CbmError, Result};

/// A single data point: the sorted set of attribute indices set to 1.
/// Indices are 1-based and strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transaction {
    items: Vec<u32>,
}

impl Transaction {
    /// Builds a transaction from arbitrary item order; sorts and deduplicates.
    /// Index 0 is rejected (attributes are 1-based).
    pub fn new(mut items: Vec<u32>) -> Result<Self> {
        if items.contains(&0) {
            return Err(CbmError::InvalidArgument(
                "attribute indices are 1-based; 0 is not a valid item".into(),
            ));
        }
        items.sort_unstable();
        items.dedup();
        Ok(Transaction { items })
    }

    pub fn empty() -> Self {
        Transaction { items: Vec::new() }
    }

    /// Items must already be strictly increasing and nonzero.
    pub(crate) fn from_sorted(items: Vec<u32>) -> Self {
        debug_assert!(items.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(items.first().is_none_or(|&i| i >= 1));
        Transaction { items }
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
}

/// The m transactions plus their labels and the attribute count d.
#[derive(Debug, Clone, PartialEq)]
pub struct TransactionDatabase {
    d: u32,
    transactions: Vec<Transaction>,
    labels: Vec<i8>,
}

impl TransactionDatabase {
    /// Validates that labels are +-1, lengths agree, and all items lie in [1, d].
    pub fn new(d: u32, transactions: Vec<Transaction>, labels: Vec<i8>) -> Result<Self> {
        if transactions.len() != labels.len() {
            return Err(CbmError::InvalidArgument(format!(
                "{} transactions but {} labels",
                transactions.len(),
                labels.len()
            )));
        }
        if let Some(&y) = labels.iter().find(|&&y| y != 1 && y != -1) {
            return Err(CbmError::InvalidArgument(format!("label must be +1 or -1, got {y}")));
        }
        for t in &transactions {
            if let Some(max) = t.max_item() {
                if max > d {
                    return Err(CbmError::InvalidArgument(format!(
                        "item {max} exceeds attribute count d={d}"
                    )));
                }
            }
        }
        Ok(TransactionDatabase { d, transactions, labels })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    /// Number of transactions m.
    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    /// Total size ||T|| = sum of transaction lengths.
    pub fn size(&self) -> usize {
        self.transactions.iter().map(Transaction::len).sum()
    }
}

/// Parses LIBSVM text: each nonempty line is `label idx:val idx:val ...`.
///
/// Indices with nonzero value become the transaction, and must be strictly
/// increasing within a line. Labels may be +1, -1, or, when the whole file
/// uses the {0, 1} alphabet, 0/1 (mapped to -1/+1). `#` starts a comment that
/// runs to end of line; both `\n` and `\r\n` endings are accepted.
///
/// The attribute count is the maximum index seen, or `d_override` if larger.
pub fn parse_libsvm<R: BufRead>(reader: R, d_override: Option<u32>) -> Result<TransactionDatabase> {
    let mut raw_labels: Vec<(usize, i8)> = Vec::new();
    let mut transactions: Vec<Transaction> = Vec::new();
    let mut max_index: u32 = 0;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let content = match line.find('#') {
            Some(pos) => &line[..pos],
            None => &line[..],
        };
        let content = content.trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label_tok = tokens.next().expect("nonempty line has a first token");
        let label = parse_label(label_tok, line_no)?;

        let mut items: Vec<u32> = Vec::new();
        let mut last_index: u32 = 0;
        for tok in tokens {
            let (idx_str, val_str) = tok.split_once(':').ok_or_else(|| {
                CbmError::parse(line_no, format!("expected `index:value`, got `{tok}`"))
            })?;
            let index: u32 = idx_str.parse().map_err(|_| {
                CbmError::parse(line_no, format!("bad attribute index `{idx_str}`"))
            })?;
            if index == 0 {
                return Err(CbmError::parse(line_no, "attribute indices start at 1"));
            }
            let value: f64 = val_str
                .parse()
                .map_err(|_| CbmError::parse(line_no, format!("bad value `{val_str}`")))?;
            if index <= last_index {
                return Err(CbmError::parse(
                    line_no,
                    format!("indices must be strictly increasing, {index} follows {last_index}"),
                ));
            }
            last_index = index;
            max_index = max_index.max(index);
            if value != 0.0 {
                items.push(index);
            }
        }
        raw_labels.push((line_no, label));
        transactions.push(Transaction::from_sorted(items));
    }

    let labels = map_label_alphabet(&raw_labels)?;
    let d = max_index.max(d_override.unwrap_or(0));
    TransactionDatabase::new(d, transactions, labels)
}

fn parse_label(tok: &str, line_no: usize) -> Result<i8> {
    let v: f64 = tok
        .parse()
        .map_err(|_| CbmError::parse(line_no, format!("bad label `{tok}`")))?;
    if v == 1.0 {
        Ok(1)
    } else if v == -1.0 {
        Ok(-1)
    } else if v == 0.0 {
        Ok(0)
    } else {
        Err(CbmError::parse(line_no, format!("label must be +1, -1, 0 or 1, got `{tok}`")))
    }
}

/// 0 labels are only legal when the file's alphabet is {0, 1}; they then map
/// to -1. Mixing 0 with -1 in one file is rejected.
fn map_label_alphabet(raw: &[(usize, i8)]) -> Result<Vec<i8>> {
    let has_zero = raw.iter().any(|&(_, y)| y == 0);
    if !has_zero {
        return Ok(raw.iter().map(|&(_, y)| y).collect());
    }
    if let Some(&(line, _)) = raw.iter().find(|&&(_, y)| y == -1) {
        return Err(CbmError::parse(
            line,
            "file mixes 0 and -1 labels; use either {0,1} or {-1,+1}",
        ));
    }
    Ok(raw.iter().map(|&(_, y)| if y == 0 { -1 } else { 1 }).collect())
}

/// Renders a database back to LIBSVM text (labels as +1/-1, values as 1).
pub fn render_libsvm(db: &TransactionDatabase) -> String {
    let mut out = String::new();
    for (t, &y) in db.transactions().iter().zip(db.labels()) {
        out.push_str(if y > 0 { "+1" } else { "-1" });
        for &item in t.items() {
            out.push(' ');
            out.push_str(&item.to_string());
            out.push_str(":1");
        }
        out.push('\n');
    }
    out
}

/// Per-column equal-width binning spec.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnBins {
    pub min: f64,
    pub max: f64,
    pub bins: u32,
}

/// Maps rows of real values to one-hot binary attributes, one block of
/// `bins` attributes per column.
#[derive(Debug, Clone, PartialEq)]
pub struct Binarizer {
    columns: Vec<ColumnBins>,
}

impl Binarizer {
    pub fn columns(&self) -> &[ColumnBins] {
        &self.columns
    }

    /// Total binary attribute count: the sum of per-column bin counts.
    pub fn attribute_count(&self) -> u32 {
        self.columns.iter().map(|c| c.bins).sum()
    }

    /// Sidecar text: one line per column, `min max bins`.
    pub fn to_sidecar(&self) -> String {
        let mut out = String::new();
        for c in &self.columns {
            out.push_str(&format!("{:.16e} {:.16e} {}\n", c.min, c.max, c.bins));
        }
        out
    }

    pub fn from_sidecar(text: &str) -> Result<Binarizer> {
        let mut columns = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(CbmError::parse(line_no, "expected `min max bins`"));
            }
            let min: f64 = parts[0]
                .parse()
                .map_err(|_| CbmError::parse(line_no, format!("bad min `{}`", parts[0])))?;
            let max: f64 = parts[1]
                .parse()
                .map_err(|_| CbmError::parse(line_no, format!("bad max `{}`", parts[1])))?;
            let bins: u32 = parts[2]
                .parse()
                .map_err(|_| CbmError::parse(line_no, format!("bad bin count `{}`", parts[2])))?;
            if bins < 1 || !min.is_finite() || !max.is_finite() || min > max {
                return Err(CbmError::parse(line_no, "need finite min <= max and bins >= 1"));
            }
            columns.push(ColumnBins { min, max, bins });
        }
        if columns.is_empty() {
            return Err(CbmError::parse(1, "empty binarizer sidecar"));
        }
        Ok(Binarizer { columns })
    }
}

/// Fits per-column min/max over `rows` (an m x c matrix) with `bins` equal
/// cells per column.
pub fn fit_binarizer(rows: &[Vec<f64>], bins: u32) -> Result<Binarizer> {
    if bins < 1 {
        return Err(CbmError::InvalidArgument("bin count must be >= 1".into()));
    }
    let c = match rows.first() {
        Some(r) if !r.is_empty() => r.len(),
        _ => return Err(CbmError::InvalidArgument("empty matrix".into())),
    };
    let mut columns = vec![
        ColumnBins { min: f64::INFINITY, max: f64::NEG_INFINITY, bins };
        c
    ];
    for (i, row) in rows.iter().enumerate() {
        if row.len() != c {
            return Err(CbmError::InvalidArgument(format!(
                "row {i} has {} columns, expected {c}",
                row.len()
            )));
        }
        for (col, &v) in columns.iter_mut().zip(row) {
            if !v.is_finite() {
                return Err(CbmError::Numeric(format!("non-finite value {v} in row {i}")));
            }
            col.min = col.min.min(v);
            col.max = col.max.max(v);
        }
    }
    Ok(Binarizer { columns })
}

/// One-hot encodes a real row: exactly one attribute per column fires.
///
/// Bin index is floor((v - min) * B / (max - min)) clamped to [0, B-1];
/// values outside the fitted range clamp to the first/last bin, and a
/// constant column maps everything to bin 0.
pub fn apply_binarizer(b: &Binarizer, row: &[f64]) -> Result<Transaction> {
    if row.len() != b.columns.len() {
        return Err(CbmError::InvalidArgument(format!(
            "row has {} columns, binarizer was fitted on {}",
            row.len(),
            b.columns.len()
        )));
    }
    let mut items = Vec::with_capacity(row.len());
    let mut base: u32 = 0;
    for (col, &v) in b.columns.iter().zip(row) {
        if !v.is_finite() {
            return Err(CbmError::Numeric(format!("non-finite value {v}")));
        }
        let bin = if col.max > col.min {
            let raw = ((v - col.min) * col.bins as f64 / (col.max - col.min)).floor();
            if raw < 0.0 {
                0
            } else if raw >= col.bins as f64 {
                col.bins - 1
            } else {
                raw as u32
            }
        } else {
            0
        };
        items.push(base + bin + 1);
        base += col.bins;
    }
    Ok(Transaction::from_sorted(items))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_str(s: &str) -> Result<TransactionDatabase> {
        parse_libsvm(s.as_bytes(), None)
    }

    #[test]
    fn parses_a_plain_line() {
        let db = parse_str("+1 3:1 7:1\n").unwrap();
        assert_eq!(db.len(), 1);
        assert_eq!(db.labels(), &[1]);
        assert_eq!(db.transactions()[0].items(), &[3, 7]);
        assert_eq!(db.d(), 7);
    }

    #[test]
    fn label_only_line_is_an_empty_transaction() {
        let db = parse_str("-1\n").unwrap();
        assert_eq!(db.labels(), &[-1]);
        assert!(db.transactions()[0].is_empty());
        assert_eq!(db.d(), 0);
    }

    #[test]
    fn counts_lines_and_takes_max_index_as_d() {
        let db = parse_str("+1 3:1\n-1 5:1 9:1\n").unwrap();
        assert_eq!(db.len(), 2);
        assert_eq!(db.d(), 9);
    }

    #[test]
    fn d_override_only_grows() {
        let db = parse_libsvm("+1 3:1\n".as_bytes(), Some(10)).unwrap();
        assert_eq!(db.d(), 10);
        let db = parse_libsvm("+1 3:1\n".as_bytes(), Some(2)).unwrap();
        assert_eq!(db.d(), 3);
    }

    #[test]
    fn zero_valued_entries_are_absent() {
        let db = parse_str("+1 2:0 3:1\n").unwrap();
        assert_eq!(db.transactions()[0].items(), &[3]);
        // the zero-valued index still counts toward d
        assert_eq!(db.d(), 3);
    }

    #[test]
    fn zero_one_label_alphabet_maps_to_signs() {
        let db = parse_str("0 1:1\n1 2:1\n").unwrap();
        assert_eq!(db.labels(), &[-1, 1]);
    }

    #[test]
    fn mixing_zero_and_minus_one_labels_is_rejected() {
        let err = parse_str("-1 1:1\n0 2:1\n").unwrap_err();
        match err {
            CbmError::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn bad_label_reports_its_line() {
        let err = parse_str("+1 1:1\n2 1:1\n").unwrap_err();
        match err {
            CbmError::Parse { line, msg } => {
                assert_eq!(line, 2);
                assert!(msg.contains("label"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn malformed_pair_reports_its_line() {
        let err = parse_str("+1 3:1\n+1 junk\n").unwrap_err();
        match err {
            CbmError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn non_increasing_indices_are_rejected() {
        assert!(parse_str("+1 3:1 3:1\n").is_err());
        assert!(parse_str("+1 5:1 2:1\n").is_err());
    }

    #[test]
    fn comments_and_crlf_are_ignored() {
        let db = parse_str("# header\r\n+1 2:1 # trailing\r\n\r\n-1 1:1\r\n").unwrap();
        assert_eq!(db.len(), 2);
        assert_eq!(db.transactions()[0].items(), &[2]);
    }

    #[test]
    fn render_then_parse_round_trips() {
        let db = parse_str("+1 1:1 4:1\n-1\n-1 2:1\n").unwrap();
        let again = parse_libsvm(render_libsvm(&db).as_bytes(), Some(db.d())).unwrap();
        assert_eq!(db, again);
    }

    #[test]
    fn database_validates_labels_and_items() {
        let t = Transaction::new(vec![3]).unwrap();
        assert!(TransactionDatabase::new(2, vec![t.clone()], vec![1]).is_err());
        assert!(TransactionDatabase::new(3, vec![t.clone()], vec![2]).is_err());
        assert!(TransactionDatabase::new(3, vec![t], vec![1, -1]).is_err());
    }

    #[test]
    fn transaction_ctor_sorts_and_rejects_zero() {
        let t = Transaction::new(vec![5, 2, 5, 1]).unwrap();
        assert_eq!(t.items(), &[1, 2, 5]);
        assert!(Transaction::new(vec![0, 1]).is_err());
    }

    #[test]
    fn eight_columns_times_thirty_bins_gives_240_attributes() {
        let rows = vec![vec![0.0; 8], vec![1.0; 8]];
        let b = fit_binarizer(&rows, 30).unwrap();
        assert_eq!(b.attribute_count(), 240);
        let t = apply_binarizer(&b, &rows[0]).unwrap();
        assert_eq!(t.len(), 8);
    }

    #[test]
    fn constant_column_maps_to_bin_zero() {
        let rows = vec![vec![7.0], vec![7.0]];
        let b = fit_binarizer(&rows, 30).unwrap();
        let t = apply_binarizer(&b, &[7.0]).unwrap();
        assert_eq!(t.items(), &[1]);
    }

    #[test]
    fn interior_value_bins_by_floor_and_max_clamps_into_last_cell() {
        let rows: Vec<Vec<f64>> = (0..=30).map(|v| vec![v as f64]).collect();
        let b = fit_binarizer(&rows, 30).unwrap();
        assert_eq!(apply_binarizer(&b, &[15.0]).unwrap().items(), &[16]); // bin 15
        assert_eq!(apply_binarizer(&b, &[30.0]).unwrap().items(), &[30]); // bin 29
    }

    #[test]
    fn out_of_range_values_clamp_to_edge_bins() {
        let rows = vec![vec![0.0], vec![10.0]];
        let b = fit_binarizer(&rows, 5).unwrap();
        assert_eq!(apply_binarizer(&b, &[-3.0]).unwrap().items(), &[1]);
        assert_eq!(apply_binarizer(&b, &[99.0]).unwrap().items(), &[5]);
    }

    #[test]
    fn one_hot_blocks_per_column() {
        let rows = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let b = fit_binarizer(&rows, 4).unwrap();
        let t = apply_binarizer(&b, &[0.3, 0.9]).unwrap();
        assert_eq!(t.len(), 2);
        let items = t.items();
        assert!((1..=4).contains(&items[0]));
        assert!((5..=8).contains(&items[1]));
    }

    #[test]
    fn fit_rejects_empty_and_ragged_input() {
        assert!(fit_binarizer(&[], 30).is_err());
        assert!(fit_binarizer(&[vec![]], 30).is_err());
        assert!(fit_binarizer(&[vec![1.0], vec![1.0, 2.0]], 30).is_err());
        assert!(fit_binarizer(&[vec![1.0]], 0).is_err());
    }

    #[test]
    fn apply_rejects_column_mismatch() {
        let b = fit_binarizer(&[vec![0.0, 1.0]], 3).unwrap();
        assert!(apply_binarizer(&b, &[0.5]).is_err());
    }

    #[test]
    fn sidecar_round_trips() {
        let b = fit_binarizer(&[vec![0.0, -2.5], vec![10.0, 3.5]], 7).unwrap();
        let again = Binarizer::from_sidecar(&b.to_sidecar()).unwrap();
        assert_eq!(b, again);
    }
}
