use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

/// Category assigned to empty categorical cells.
pub const MISSING_CATEGORY: &str = "missing";

const MISSING_TOKENS: [&str; 3] = ["", "?", "NA"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvOptions {
    pub label_column: String,
    #[serde(default)]
    pub categorical_columns: Vec<String>,
}

impl CsvOptions {
    pub fn new(label_column: impl Into<String>, categorical_columns: &[&str]) -> Self {
        Self {
            label_column: label_column.into(),
            categorical_columns: categorical_columns.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// How one input column maps onto feature columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnEncoding {
    Numeric {
        column: String,
    },
    /// One indicator feature `column_eq_value` per value, in order of first appearance.
    OneHot {
        column: String,
        values: Vec<String>,
    },
}

impl ColumnEncoding {
    pub fn feature_names(&self) -> Vec<String> {
        match self {
            ColumnEncoding::Numeric { column } => vec![column.clone()],
            ColumnEncoding::OneHot { column, values } => values.iter().map(|v| format!("{column}_eq_{v}")).collect(),
        }
    }
}

pub fn load_csv(path: &Path, label_column: &str, categorical_columns: &[&str]) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    let mut ds = parse_csv(&text, path, &CsvOptions::new(label_column, categorical_columns))?;
    ds.source = path.display().to_string();
    Ok(ds)
}

fn is_missing(cell: &str) -> bool {
    MISSING_TOKENS.contains(&cell)
}

/// Parse headed, comma-separated text. `origin` only labels error messages.
///
/// Classes are numbered in order of first appearance. Empty numeric cells
/// become NaN; empty categorical cells become the [`MISSING_CATEGORY`] value.
pub fn parse_csv(text: &str, origin: &Path, opts: &CsvOptions) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let label_idx = header.iter().position(|h| *h == opts.label_column).ok_or_else(|| {
        Error::Schema(format!(
            "label column `{}` not found in header {header:?}",
            opts.label_column
        ))
    })?;
    for c in &opts.categorical_columns {
        if !header.contains(c) {
            return Err(Error::Schema(format!("categorical column `{c}` not found in header")));
        }
        if *c == opts.label_column {
            return Err(Error::Schema(format!("`{c}` cannot be both label and categorical")));
        }
    }
    let input_cols: Vec<usize> = (0..header.len()).filter(|&i| i != label_idx).collect();
    if input_cols.is_empty() {
        return Err(Error::Schema("no feature columns besides the label".into()));
    }
    let categorical: Vec<bool> = input_cols
        .iter()
        .map(|&i| opts.categorical_columns.contains(&header[i]))
        .collect();

    let parse_err = |row: usize, col: usize, message: String| Error::Parse {
        path: PathBuf::from(origin),
        row,
        column: header[col].clone(),
        message,
    };

    let mut class_names: Vec<String> = Vec::new();
    let mut labels = Vec::new();
    // per input column: parsed numbers, or category indices
    let mut numeric: Vec<Vec<f64>> = vec![Vec::new(); input_cols.len()];
    let mut levels: Vec<Vec<String>> = vec![Vec::new(); input_cols.len()];
    let mut codes: Vec<Vec<usize>> = vec![Vec::new(); input_cols.len()];

    for (r, record) in reader.records().enumerate() {
        let row = r + 1;
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::Parse {
                path: PathBuf::from(origin),
                row,
                column: String::new(),
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        let label = &record[label_idx];
        if is_missing(label) {
            return Err(parse_err(row, label_idx, "missing label".into()));
        }
        let class = match class_names.iter().position(|c| c == label) {
            Some(c) => c,
            None => {
                class_names.push(label.to_string());
                class_names.len() - 1
            }
        };
        labels.push(class);
        for (k, &col) in input_cols.iter().enumerate() {
            let cell = &record[col];
            if categorical[k] {
                let value = if is_missing(cell) { MISSING_CATEGORY } else { cell };
                let code = match levels[k].iter().position(|v| v == value) {
                    Some(c) => c,
                    None => {
                        levels[k].push(value.to_string());
                        levels[k].len() - 1
                    }
                };
                codes[k].push(code);
            } else if is_missing(cell) {
                numeric[k].push(f64::NAN);
            } else {
                let v: f64 = cell
                    .parse()
                    .map_err(|_| parse_err(row, col, format!("`{cell}` is not a number")))?;
                if !v.is_finite() {
                    return Err(parse_err(row, col, format!("`{cell}` is not finite")));
                }
                numeric[k].push(v);
            }
        }
    }
    let n = labels.len();
    if n == 0 {
        return Err(Error::Input(format!("{} has no data rows", origin.display())));
    }

    let encoding: Vec<ColumnEncoding> = input_cols
        .iter()
        .enumerate()
        .map(|(k, &col)| {
            if categorical[k] {
                ColumnEncoding::OneHot {
                    column: header[col].clone(),
                    values: levels[k].clone(),
                }
            } else {
                ColumnEncoding::Numeric {
                    column: header[col].clone(),
                }
            }
        })
        .collect();
    let feature_names: Vec<String> = encoding.iter().flat_map(ColumnEncoding::feature_names).collect();
    let mut x = Array2::zeros((n, feature_names.len()));
    let mut offset = 0;
    for k in 0..input_cols.len() {
        if categorical[k] {
            for (i, &code) in codes[k].iter().enumerate() {
                x[[i, offset + code]] = 1.0;
            }
            offset += levels[k].len();
        } else {
            for (i, &v) in numeric[k].iter().enumerate() {
                x[[i, offset]] = v;
            }
            offset += 1;
        }
    }
    let ds = Dataset {
        x,
        y: labels,
        n_classes: class_names.len(),
        feature_names,
        class_names,
        source: origin.display().to_string(),
        encoding,
    };
    ds.validate()?;
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, label: &str, cats: &[&str]) -> Result<Dataset> {
        parse_csv(text, Path::new("inline.csv"), &CsvOptions::new(label, cats))
    }

    #[test]
    fn numeric_and_labels() {
        let ds = parse("a,b,class\n1,2,yes\n3,4.5,no\n5,6,yes\n", "class", &[]).unwrap();
        assert_eq!(ds.x, ndarray::array![[1.0, 2.0], [3.0, 4.5], [5.0, 6.0]]);
        assert_eq!(ds.y, vec![0, 1, 0]);
        assert_eq!(ds.class_names, vec!["yes", "no"]);
        assert_eq!(ds.feature_names, vec!["a", "b"]);
    }

    #[test]
    fn one_hot_groups_sum_to_one() {
        let ds = parse(
            "odor,w,label\nnone,1,e\nfoul,2,p\nalmond,3,e\nnone,4,p\n,5,e\n",
            "label",
            &["odor"],
        )
        .unwrap();
        assert_eq!(
            ds.feature_names,
            vec!["odor_eq_none", "odor_eq_foul", "odor_eq_almond", "odor_eq_missing", "w"]
        );
        for row in ds.x.rows() {
            assert_eq!(row.iter().take(4).sum::<f64>(), 1.0);
        }
        assert_eq!(ds.x[[4, 3]], 1.0);
    }

    #[test]
    fn missing_numeric_becomes_nan() {
        let ds = parse("a,b,y\n1,,p\n2,3,q\n", "y", &[]).unwrap();
        assert!(ds.x[[0, 1]].is_nan());
        assert!(ds.has_missing());
    }

    #[test]
    fn parse_error_names_row_and_column() {
        match parse("a,b,y\n1,2,p\n3,oops,q\n", "y", &[]) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "b");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_label_column_is_schema_error() {
        assert!(matches!(parse("a,b\n1,2\n", "y", &[]), Err(Error::Schema(_))));
        assert!(matches!(parse("a,y\n1,p\n", "y", &["z"]), Err(Error::Schema(_))));
    }

    #[test]
    fn quoted_fields() {
        let ds = parse("name,v,y\n\"a, b\",1,p\n", "y", &["name"]).unwrap();
        assert_eq!(ds.feature_names, vec!["name_eq_a, b", "v"]);
    }
}
