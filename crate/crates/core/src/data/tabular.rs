//! CSV and JSON-lines dataset files.
//!
//! CSV: comma separated, header row, `.` decimal point, UTF-8. Label and
//! group cells may be text. Distinct values map to dense indices: if every
//! value in the column is a non-negative integer they are ordered
//! numerically, otherwise by first appearance.
//!
//! JSONL: one `{"id", "features": [...], "label", "group"}` object per line
//! with integer labels and groups.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Dataset, Sample};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TabularSchema {
    /// Empty means every column other than the label, group and id columns.
    #[serde(default)]
    pub feature_columns: Vec<String>,
    pub label_column: String,
    pub group_column: String,
    /// Without an id column, ids are 0-based row numbers.
    #[serde(default)]
    pub id_column: Option<String>,
}

impl TabularSchema {
    pub fn new(label_column: &str, group_column: &str) -> Self {
        Self {
            feature_columns: vec![],
            label_column: label_column.into(),
            group_column: group_column.into(),
            id_column: None,
        }
    }
}

/// Dense index assignment for a categorical column.
fn index_table(values: &[String]) -> (Vec<String>, HashMap<String, usize>) {
    let mut names: Vec<String> = Vec::new();
    for v in values {
        if !names.contains(v) {
            names.push(v.clone());
        }
    }
    if names.iter().all(|n| n.parse::<u64>().is_ok()) {
        names.sort_by_key(|n| n.parse::<u64>().expect("checked"));
    }
    let lookup = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), i))
        .collect();
    (names, lookup)
}

pub fn load_tabular(path: impl AsRef<Path>, schema: &TabularSchema) -> Result<Dataset> {
    read_csv(File::open(path)?, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &TabularSchema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let label_col = find(&schema.label_column)?;
    let group_col = find(&schema.group_column)?;
    let id_col = schema.id_column.as_deref().map(find).transpose()?;
    let feature_cols: Vec<usize> = if schema.feature_columns.is_empty() {
        (0..headers.len())
            .filter(|&i| i != label_col && i != group_col && Some(i) != id_col)
            .collect()
    } else {
        schema
            .feature_columns
            .iter()
            .map(|c| find(c))
            .collect::<Result<_>>()?
    };
    if feature_cols.is_empty() {
        return Err(Error::MissingColumn("<feature columns>".into()));
    }

    struct Row {
        id: u64,
        features: Vec<f64>,
        label: String,
        group: String,
    }
    let mut rows = Vec::new();
    for (row_idx, record) in rdr.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(row_idx as u64 + 2, |p| p.line());
        let cell = |col: usize| -> Result<&str> {
            match record.get(col).map(str::trim) {
                Some(v) if !v.is_empty() => Ok(v),
                _ => Err(Error::MissingValue {
                    line,
                    column: headers[col].clone(),
                }),
            }
        };
        let parse_err = |col: usize, v: &str| Error::Parse {
            line,
            column: headers[col].clone(),
            value: v.to_string(),
        };
        let mut features = Vec::with_capacity(feature_cols.len());
        for &c in &feature_cols {
            let v = cell(c)?;
            let x: f64 = v.parse().map_err(|_| parse_err(c, v))?;
            if !x.is_finite() {
                return Err(parse_err(c, v));
            }
            features.push(x);
        }
        let id = match id_col {
            Some(c) => {
                let v = cell(c)?;
                v.parse().map_err(|_| parse_err(c, v))?
            }
            None => row_idx as u64,
        };
        rows.push(Row {
            id,
            features,
            label: cell(label_col)?.to_string(),
            group: cell(group_col)?.to_string(),
        });
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile);
    }

    let labels: Vec<String> = rows.iter().map(|r| r.label.clone()).collect();
    let groups: Vec<String> = rows.iter().map(|r| r.group.clone()).collect();
    let (mut class_names, class_idx) = index_table(&labels);
    let (group_names, group_idx) = index_table(&groups);
    // A single observed class still describes a binary problem.
    if class_names.len() == 1 {
        class_names.push(format!("not_{}", class_names[0]));
    }
    let samples = rows
        .into_iter()
        .map(|r| Sample {
            id: r.id,
            label: class_idx[&r.label],
            group: group_idx[&r.group],
            features: r.features,
        })
        .collect();
    Dataset::new(samples, class_names, group_names)
}

/// Header `id,x0..x{d-1},label,group`, label and group as dense indices.
pub fn write_csv<W: Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["id".to_string()];
    header.extend((0..ds.feature_dim()).map(|j| format!("x{j}")));
    header.push("label".into());
    header.push("group".into());
    w.write_record(&header)?;
    for s in ds.samples() {
        let mut row = vec![s.id.to_string()];
        row.extend(s.features.iter().map(|v| v.to_string()));
        row.push(s.label.to_string());
        row.push(s.group.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Schema matching the files produced by [`write_csv`].
pub fn written_schema() -> TabularSchema {
    TabularSchema {
        feature_columns: vec![],
        label_column: "label".into(),
        group_column: "group".into(),
        id_column: Some("id".into()),
    }
}

pub fn save_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_csv(ds, BufWriter::new(File::create(path)?))
}

pub fn write_jsonl<W: Write>(ds: &Dataset, mut writer: W) -> Result<()> {
    for s in ds.samples() {
        serde_json::to_writer(&mut writer, s)?;
        writeln!(writer)?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Dataset> {
    let mut samples: Vec<Sample> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let s: Sample = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i as u64 + 1,
            column: "<json>".into(),
            value: e.to_string(),
        })?;
        samples.push(s);
    }
    if samples.is_empty() {
        return Err(Error::EmptyFile);
    }
    let classes = samples.iter().map(|s| s.label).max().unwrap_or(0).max(1) + 1;
    let groups = samples.iter().map(|s| s.group).max().unwrap_or(0) + 1;
    Dataset::with_indexed_names(samples, classes, groups)
}

pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Dataset> {
    read_jsonl(BufReader::new(File::open(path)?))
}
