//! Loading real-valued labeled matrices for binarization. Two layouts are
//! accepted: dense CSV (`label,v1,...,vc`) and LIBSVM-style sparse lines
//! with real values, densified with zeros for missing indices.

/// Returns (labels, rows). Labels follow the usual alphabet rules: +1/-1,
/// or 0/1 with 0 read as the negative class; mixing 0 and -1 is an error.
pub fn load_real_matrix(text: &str) -> Result<(Vec<i8>, Vec<Vec<f64>>), String> {
    let mut raw: Vec<(usize, f64)> = Vec::new(); // (line number, label)
    let mut sparse: Vec<Vec<(u32, f64)>> = Vec::new();
    let mut dense: Vec<Vec<f64>> = Vec::new();
    let mut is_sparse: Option<bool> = None;
    let mut max_index = 0u32;

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let sparse_line = *is_sparse.get_or_insert_with(|| line.contains(':'));
        if sparse_line {
            let mut tokens = line.split_whitespace();
            let label_tok = tokens.next().unwrap();
            raw.push((line_no, parse_label(label_tok, line_no)?));
            let mut row = Vec::new();
            let mut last = 0u32;
            for tok in tokens {
                let (i_str, v_str) = tok
                    .split_once(':')
                    .ok_or_else(|| format!("line {line_no}: expected `index:value`, got `{tok}`"))?;
                let i: u32 = i_str
                    .parse()
                    .map_err(|_| format!("line {line_no}: bad index `{i_str}`"))?;
                if i == 0 {
                    return Err(format!("line {line_no}: indices start at 1"));
                }
                if i <= last {
                    return Err(format!("line {line_no}: indices must increase, {i} after {last}"));
                }
                last = i;
                let v: f64 = v_str
                    .parse()
                    .map_err(|_| format!("line {line_no}: bad value `{v_str}`"))?;
                if !v.is_finite() {
                    return Err(format!("line {line_no}: value {v} is not finite"));
                }
                row.push((i, v));
                max_index = max_index.max(i);
            }
            sparse.push(row);
        } else {
            let mut tokens = line.split(',');
            let label_tok = tokens.next().unwrap().trim();
            raw.push((line_no, parse_label(label_tok, line_no)?));
            let mut row = Vec::new();
            for tok in tokens {
                let tok = tok.trim();
                let v: f64 = tok
                    .parse()
                    .map_err(|_| format!("line {line_no}: bad value `{tok}`"))?;
                if !v.is_finite() {
                    return Err(format!("line {line_no}: value {v} is not finite"));
                }
                row.push(v);
            }
            if row.is_empty() {
                return Err(format!("line {line_no}: no values after the label"));
            }
            dense.push(row);
        }
    }

    if raw.is_empty() {
        return Err("no data rows".into());
    }
    let labels = map_labels(&raw)?;
    let rows = if is_sparse == Some(true) {
        sparse
            .into_iter()
            .map(|pairs| {
                let mut row = vec![0.0; max_index as usize];
                for (i, v) in pairs {
                    row[i as usize - 1] = v;
                }
                row
            })
            .collect()
    } else {
        dense
    };
    Ok((labels, rows))
}

fn parse_label(tok: &str, line_no: usize) -> Result<f64, String> {
    let v: f64 = tok
        .parse()
        .map_err(|_| format!("line {line_no}: bad label `{tok}`"))?;
    if v == 1.0 || v == -1.0 || v == 0.0 {
        Ok(v)
    } else {
        Err(format!("line {line_no}: label must be +1, -1, or 0, got `{tok}`"))
    }
}

fn map_labels(raw: &[(usize, f64)]) -> Result<Vec<i8>, String> {
    let has_zero = raw.iter().any(|&(_, v)| v == 0.0);
    if has_zero {
        if let Some(&(line, _)) = raw.iter().find(|&&(_, v)| v == -1.0) {
            return Err(format!("line {line}: labels mix 0 and -1; use one negative class"));
        }
    }
    Ok(raw
        .iter()
        .map(|&(_, v)| if v == 1.0 { 1 } else { -1 })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rows_parse_with_spaces_and_comments() {
        let text = "1, 0.5, -2.0\n# comment\n-1,1.5,3.25 # trailing\n";
        let (labels, rows) = load_real_matrix(text).unwrap();
        assert_eq!(labels, vec![1, -1]);
        assert_eq!(rows, vec![vec![0.5, -2.0], vec![1.5, 3.25]]);
    }

    #[test]
    fn sparse_rows_densify_to_the_largest_index() {
        let text = "1 2:0.5 4:1.0\n0 1:-3.0\n";
        let (labels, rows) = load_real_matrix(text).unwrap();
        assert_eq!(labels, vec![1, -1]);
        assert_eq!(rows, vec![vec![0.0, 0.5, 0.0, 1.0], vec![-3.0, 0.0, 0.0, 0.0]]);
    }

    #[test]
    fn zero_and_minus_one_labels_cannot_mix() {
        assert!(load_real_matrix("0,1.0\n-1,2.0\n").is_err());
        let (labels, _) = load_real_matrix("0,1.0\n1,2.0\n").unwrap();
        assert_eq!(labels, vec![-1, 1]);
    }

    #[test]
    fn malformed_lines_name_their_line_number() {
        let err = load_real_matrix("1,1.0\n-1,oops\n").unwrap_err();
        assert!(err.contains("line 2"), "{err}");
        let err = load_real_matrix("1 3:1.0 2:1.0\n").unwrap_err();
        assert!(err.contains("must increase"), "{err}");
        assert!(load_real_matrix("2,1.0\n").is_err(), "label out of alphabet");
        assert!(load_real_matrix("").is_err(), "empty input");
    }
}
