//! Delimited text datasets: one observation per row, one label column and
//! numeric coordinate columns.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;

use crate::data::{PooledData, Sample};
use crate::error::{JelError, Result};

/// Column names of the banknote authentication file, which has no header.
pub const BANKNOTE_COLUMNS: [&str; 5] = ["VW", "SW", "KW", "EI", "class"];

/// A column given by name or by 0-based index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnRef {
    Name(String),
    Index(usize),
}

impl FromStr for ColumnRef {
    type Err = JelError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(JelError::Validation("empty column reference".into()));
        }
        Ok(match s.parse::<usize>() {
            Ok(i) => ColumnRef::Index(i),
            Err(_) => ColumnRef::Name(s.to_string()),
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct ReadOptions {
    /// Field delimiter; detected from the first line when `None`.
    pub delimiter: Option<u8>,
    /// Label column; the last column when `None`.
    pub label: Option<ColumnRef>,
    /// Coordinate columns; every non-label column when `None`.
    pub columns: Option<Vec<ColumnRef>>,
    /// Column names for files without a header.
    pub names: Option<Vec<String>>,
    /// Force (`Some(true)`) or forbid a header; detected when `None`.
    pub header: Option<bool>,
}

impl ReadOptions {
    /// Settings for the headerless banknote file.
    pub fn banknote() -> Self {
        Self {
            delimiter: Some(b','),
            label: Some(ColumnRef::Name("class".into())),
            names: Some(BANKNOTE_COLUMNS.iter().map(|s| s.to_string()).collect()),
            header: Some(false),
            ..Self::default()
        }
    }
}

/// Parsed dataset: groups in order of first appearance.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub columns: Vec<String>,
    pub label_column: String,
    pub groups: Vec<Sample>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.groups.iter().map(Sample::len).sum()
    }

    pub fn to_pooled(&self) -> Result<PooledData> {
        PooledData::new(self.groups.clone())
    }

    /// The dataset restricted to the named coordinate columns.
    pub fn select(&self, columns: &[ColumnRef]) -> Result<Dataset> {
        let idx = columns
            .iter()
            .map(|c| resolve(c, &self.columns))
            .collect::<Result<Vec<_>>>()?;
        let groups = self
            .groups
            .iter()
            .map(|g| Sample::new(g.label.clone(), g.points.select(ndarray::Axis(1), &idx)))
            .collect();
        Ok(Dataset {
            columns: idx.iter().map(|&i| self.columns[i].clone()).collect(),
            label_column: self.label_column.clone(),
            groups,
        })
    }
}

fn resolve(c: &ColumnRef, names: &[String]) -> Result<usize> {
    match c {
        ColumnRef::Index(i) if *i < names.len() => Ok(*i),
        ColumnRef::Index(i) => Err(JelError::Validation(format!(
            "column index {i} out of range (file has {} columns)",
            names.len()
        ))),
        ColumnRef::Name(n) => names.iter().position(|x| x == n).ok_or_else(|| {
            JelError::Validation(format!("no column named '{n}' (columns: {})", names.join(", ")))
        }),
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> JelError {
    JelError::Parse {
        line,
        message: message.into(),
    }
}

pub fn read_dataset(path: &Path, opts: &ReadOptions) -> Result<Dataset> {
    let mut text = String::new();
    File::open(path)
        .map_err(|e| JelError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?
        .read_to_string(&mut text)?;
    parse_dataset(&text, opts)
}

pub fn parse_dataset(text: &str, opts: &ReadOptions) -> Result<Dataset> {
    let delimiter = opts.delimiter.unwrap_or_else(|| {
        let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
        if first.contains('\t') {
            b'\t'
        } else {
            b','
        }
    });
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut rows: Vec<(usize, Vec<String>)> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        rows.push((line, rec.iter().map(str::to_string).collect()));
    }
    if rows.is_empty() {
        return Err(parse_err(1, "no data rows"));
    }
    let width = rows[0].1.len();
    if width < 2 {
        return Err(parse_err(rows[0].0, "need a label column and at least one numeric column"));
    }

    let header = match opts.header {
        Some(h) => h,
        // a header row has a field that is not a number outside the label
        None => {
            let label_guess = match &opts.label {
                Some(ColumnRef::Index(i)) => Some(*i),
                Some(ColumnRef::Name(_)) if opts.names.is_none() => None,
                _ => Some(width - 1),
            };
            rows[0]
                .1
                .iter()
                .enumerate()
                .any(|(i, f)| Some(i) != label_guess && f.parse::<f64>().is_err())
        }
    };
    let names: Vec<String> = if header {
        let (_, h) = rows.remove(0);
        h
    } else if let Some(n) = &opts.names {
        n.clone()
    } else {
        (0..width).map(|i| format!("x{}", i + 1)).collect()
    };
    if names.len() != width {
        return Err(parse_err(
            1,
            format!("{} column names for {width} columns", names.len()),
        ));
    }

    let label_idx = match &opts.label {
        Some(c) => resolve(c, &names)?,
        None => width - 1,
    };
    let coord_idx: Vec<usize> = match &opts.columns {
        Some(cols) => cols.iter().map(|c| resolve(c, &names)).collect::<Result<_>>()?,
        None => (0..width).filter(|&i| i != label_idx).collect(),
    };
    if coord_idx.is_empty() {
        return Err(JelError::Validation("no coordinate columns selected".into()));
    }
    if coord_idx.contains(&label_idx) {
        return Err(JelError::Validation(format!(
            "column '{}' is the label and cannot be a coordinate",
            names[label_idx]
        )));
    }

    let mut labels: Vec<String> = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    for (line, fields) in &rows {
        if fields.len() != width {
            return Err(parse_err(
                *line,
                format!("expected {width} fields, found {}", fields.len()),
            ));
        }
        let label = &fields[label_idx];
        if label.is_empty() {
            return Err(parse_err(*line, "missing label"));
        }
        let k = match labels.iter().position(|l| l == label) {
            Some(k) => k,
            None => {
                labels.push(label.clone());
                values.push(Vec::new());
                labels.len() - 1
            }
        };
        for &c in &coord_idx {
            let f = &fields[c];
            if f.is_empty() {
                return Err(parse_err(*line, format!("missing value in column '{}'", names[c])));
            }
            let v: f64 = f
                .parse()
                .map_err(|_| parse_err(*line, format!("'{f}' in column '{}' is not a number", names[c])))?;
            if !v.is_finite() {
                return Err(parse_err(*line, format!("non-finite value in column '{}'", names[c])));
            }
            values[k].push(v);
        }
    }
    if labels.len() < 2 {
        return Err(JelError::Validation(format!(
            "label column '{}' has {} distinct value(s); at least 2 groups are needed",
            names[label_idx],
            labels.len()
        )));
    }
    let d = coord_idx.len();
    let groups = labels
        .into_iter()
        .zip(values)
        .map(|(l, v)| {
            let m = v.len() / d;
            Sample::new(l, Array2::from_shape_vec((m, d), v).expect("row-major values"))
        })
        .collect();
    Ok(Dataset {
        columns: coord_idx.iter().map(|&i| names[i].clone()).collect(),
        label_column: names[label_idx].clone(),
        groups,
    })
}

/// Writes a dataset with a header, coordinates first and the label last.
/// Values use the shortest representation that parses back exactly.
pub fn write_dataset<W: Write>(ds: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| JelError::Io(std::io::Error::other(e));
    let mut header = ds.columns.clone();
    header.push(ds.label_column.clone());
    w.write_record(&header).map_err(io)?;
    for g in &ds.groups {
        for row in g.points.rows() {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            rec.push(g.label.clone());
            w.write_record(&rec).map_err(io)?;
        }
    }
    w.flush()?;
    Ok(())
}
