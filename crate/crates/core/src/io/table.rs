use std::fs::File;
use std::io::Write;
use std::path::Path;

use ndarray::{Array2, ArrayView2};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::eval::LabeledDataset;

/// Which column holds the 0/1 labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

/// A numeric CSV table with the label column split out.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub features: Array2<f64>,
    pub labels: Option<Vec<bool>>,
    pub column_names: Option<Vec<String>>,
}

impl Table {
    pub fn into_dataset(self) -> Result<Dataset> {
        Dataset::new(self.features)
    }

    pub fn into_labeled(self) -> Result<LabeledDataset> {
        let labels = self
            .labels
            .ok_or_else(|| Error::param("table has no label column"))?;
        LabeledDataset::new(Dataset::new(self.features)?, labels)
    }
}

/// Reads a rectangular numeric CSV. Line numbers in errors are 1-based file
/// lines; column numbers are 1-based positions in the row.
pub fn load_csv(path: &Path, has_header: bool, label: Option<&LabelColumn>) -> Result<Table> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let header: Option<Vec<String>> = if has_header {
        let h = reader
            .headers()
            .map_err(|e| parse_err(1, e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect::<Vec<_>>();
        if h.is_empty() || (h.len() == 1 && h[0].is_empty()) {
            return Err(parse_err(1, "empty file".into()));
        }
        Some(h)
    } else {
        None
    };
    let label_idx = match (label, &header) {
        (None, _) => None,
        (Some(LabelColumn::Index(i)), _) => Some(*i),
        (Some(LabelColumn::Name(name)), Some(h)) => Some(
            h.iter()
                .position(|c| c == name)
                .ok_or_else(|| parse_err(1, format!("no column named `{name}` in header")))?,
        ),
        (Some(LabelColumn::Name(name)), None) => {
            return Err(Error::param(format!(
                "label column `{name}` given by name but the file has no header"
            )))
        }
    };

    let mut width = header.as_ref().map(Vec::len);
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut n_rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(parse_err(
                line,
                format!("expected {w} fields, found {}", record.len()),
            ));
        }
        if let Some(li) = label_idx {
            if li >= w {
                return Err(parse_err(line, format!("label column {} out of range", li + 1)));
            }
        }
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                parse_err(line, format!("column {}: cannot parse `{cell}` as a number", col + 1))
            })?;
            if Some(col) == label_idx {
                labels.push(match v {
                    0.0 => false,
                    1.0 => true,
                    _ => {
                        return Err(parse_err(
                            line,
                            format!("column {}: label must be 0 or 1, got `{cell}`", col + 1),
                        ))
                    }
                });
            } else {
                if !v.is_finite() {
                    return Err(parse_err(line, format!("column {}: non-finite value `{cell}`", col + 1)));
                }
                values.push(v);
            }
        }
        n_rows += 1;
    }
    if n_rows == 0 {
        return Err(parse_err(if has_header { 2 } else { 1 }, "no data rows".into()));
    }
    let d = width.unwrap_or(0) - usize::from(label_idx.is_some());
    if d == 0 {
        return Err(parse_err(1, "no feature columns".into()));
    }
    let features = Array2::from_shape_vec((n_rows, d), values).expect("row widths checked");
    let column_names = header.map(|h| {
        h.into_iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != label_idx)
            .map(|(_, c)| c)
            .collect()
    });
    Ok(Table {
        features,
        labels: label_idx.map(|_| labels),
        column_names,
    })
}

/// Writes `x` with a header row, one matrix row per line, at full precision.
pub fn write_matrix_csv(
    path: &Path,
    header: &[String],
    x: ArrayView2<'_, f64>,
    labels: Option<&[bool]>,
) -> Result<()> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for (i, row) in x.rows().into_iter().enumerate() {
        let mut cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        if let Some(l) = labels {
            cells.push(if l[i] { "1" } else { "0" }.to_string());
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    File::create(path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(|e| Error::io(path, e))
}
