//! Dataset files.
//!
//! Tables are plain CSV (UTF-8, LF, '.' decimal): a header `x1,…,xp[,y]`,
//! one numeric row per record, and an optional leading comment
//! `# bounds: lo..hi, …` giving per-dimension input ranges in natural
//! units. Posterior samples travel as `log_phi1,…,log_phip,z_delta,h`.
//! All floats are written with Rust's shortest round-trip formatting, so a
//! write/read cycle reproduces values bit for bit.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use ta2s2::gp::TrainingSet;

use crate::design::rescale_to_unit;
use crate::error::Error;

/// A parsed table: inputs, optional outputs, optional natural-unit bounds.
#[derive(Debug, Clone)]
pub struct Table {
    pub x: DMatrix<f64>,
    pub y: Option<DVector<f64>>,
    pub bounds: Option<Vec<(f64, f64)>>,
}

/// Train/test split with inputs living on the unit hypercube.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub train: TrainingSet,
    pub test: TrainingSet,
    pub input_bounds: Vec<(f64, f64)>,
}

impl Dataset {
    /// Splits a table into the first `n_train` rows for training and the
    /// next `n_test` for testing, rescaling inputs to `[0,1]^p` when bounds
    /// are present (inputs must already be in the unit cube otherwise).
    pub fn from_table(table: &Table, n_train: usize, n_test: usize) -> Result<Self, Error> {
        let y = table
            .y
            .as_ref()
            .ok_or_else(|| Error::BadSpec("dataset needs a y column".into()))?;
        let rows = table.x.nrows();
        if rows < n_train + n_test {
            return Err(Error::NotEnoughRows {
                rows,
                need: n_train + n_test,
                train: n_train,
                test: n_test,
            });
        }
        let p = table.x.ncols();
        let (u, input_bounds) = match &table.bounds {
            Some(b) => (rescale_to_unit(&table.x, b)?, b.clone()),
            None => (table.x.clone(), vec![(0.0, 1.0); p]),
        };
        for c in 0..p {
            for r in 0..u.nrows() {
                let v = u[(r, c)];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::OutsideUnitCube { dim: c + 1, value: v });
                }
            }
        }
        let slice = |from: usize, len: usize| {
            (
                u.rows(from, len).into_owned(),
                DVector::from_iterator(len, (from..from + len).map(|r| y[r])),
            )
        };
        let (train_x, train_y) = slice(0, n_train);
        let (test_x, test_y) = slice(n_train, n_test);
        Ok(Self {
            train: TrainingSet::new(train_x, train_y)?,
            test: TrainingSet::new(test_x, test_y)?,
            input_bounds,
        })
    }
}

fn parse_bounds_comment(path: &Path, text: &str) -> Result<Option<Vec<(f64, f64)>>, Error> {
    let layout = |what: String| Error::CsvLayout {
        path: path.to_path_buf(),
        what,
    };
    for line in text.lines() {
        let Some(rest) = line.trim().strip_prefix('#') else {
            continue;
        };
        let Some(spec) = rest.trim().strip_prefix("bounds:") else {
            continue;
        };
        let mut bounds = Vec::new();
        for (i, pair) in spec.split(',').enumerate() {
            let (lo, hi) = pair
                .split_once("..")
                .ok_or_else(|| layout(format!("bounds entry {} lacks '..'", i + 1)))?;
            let lo: f64 = lo.trim().parse().map_err(|_| {
                layout(format!("bounds entry {}: bad lower value '{}'", i + 1, lo.trim()))
            })?;
            let hi: f64 = hi.trim().parse().map_err(|_| {
                layout(format!("bounds entry {}: bad upper value '{}'", i + 1, hi.trim()))
            })?;
            bounds.push((lo, hi));
        }
        if bounds.is_empty() {
            return Err(layout("empty bounds comment".into()));
        }
        return Ok(Some(bounds));
    }
    Ok(None)
}

fn numeric_cell(path: &Path, line: u64, col: usize, cell: &str) -> Result<f64, Error> {
    let v: f64 = cell.parse().map_err(|_| Error::CsvCell {
        path: path.to_path_buf(),
        line,
        col,
        what: format!("'{cell}' is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::CsvCell {
            path: path.to_path_buf(),
            line,
            col,
            what: format!("non-finite value '{cell}'"),
        });
    }
    Ok(v)
}

fn read_rows(
    path: &Path,
    text: &str,
    expected_header: &[String],
) -> Result<Vec<Vec<f64>>, Error> {
    let layout = |what: String| Error::CsvLayout {
        path: path.to_path_buf(),
        what,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| layout(e.to_string()))?;
    let got: Vec<&str> = headers.iter().collect();
    if got != expected_header.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(layout(format!(
            "header is '{}', expected '{}'",
            got.join(","),
            expected_header.join(",")
        )));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| layout(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let row = rec
            .iter()
            .enumerate()
            .map(|(j, cell)| numeric_cell(path, line, j + 1, cell))
            .collect::<Result<Vec<f64>, Error>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(layout("no data rows".into()));
    }
    Ok(rows)
}

fn sniff_header(text: &str) -> Result<(usize, bool), String> {
    let header = text
        .lines()
        .find(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .ok_or("empty file")?;
    let cells: Vec<&str> = header.split(',').map(str::trim).collect();
    let has_y = cells.last() == Some(&"y");
    let p = cells.len() - usize::from(has_y);
    if p == 0 {
        return Err("no input columns in header".into());
    }
    Ok((p, has_y))
}

fn x_header(p: usize) -> Vec<String> {
    (1..=p).map(|i| format!("x{i}")).collect()
}

/// Reads a design or dataset file; the `y` column and the bounds comment
/// are both optional.
pub fn read_table(path: &Path) -> Result<Table, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bounds = parse_bounds_comment(path, &text)?;
    let (p, has_y) = sniff_header(&text).map_err(|what| Error::CsvLayout {
        path: path.to_path_buf(),
        what,
    })?;
    let mut header = x_header(p);
    if has_y {
        header.push("y".into());
    }
    let rows = read_rows(path, &text, &header)?;
    let n = rows.len();
    let x = DMatrix::from_fn(n, p, |r, c| rows[r][c]);
    let y = has_y.then(|| DVector::from_iterator(n, rows.iter().map(|row| row[p])));
    if let Some(b) = &bounds {
        if b.len() != p {
            return Err(Error::BoundsDimensionMismatch {
                got: b.len(),
                expected: p,
            });
        }
    }
    Ok(Table { x, y, bounds })
}

fn create(path: &Path) -> Result<File, Error> {
    File::create(path).map_err(|e| Error::io(path, e))
}

fn write_csv(
    file: &mut File,
    path: &Path,
    header: &[String],
    rows: impl Iterator<Item = Vec<f64>>,
) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header).map_err(|e| Error::CsvLayout {
        path: path.to_path_buf(),
        what: e.to_string(),
    })?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(f64::to_string).collect();
        w.write_record(&cells).map_err(|e| Error::CsvLayout {
            path: path.to_path_buf(),
            what: e.to_string(),
        })?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes inputs only (`x1,…,xp`).
pub fn write_design(path: &Path, x: &DMatrix<f64>) -> Result<(), Error> {
    let mut f = create(path)?;
    write_csv(
        &mut f,
        path,
        &x_header(x.ncols()),
        (0..x.nrows()).map(|r| x.row(r).iter().copied().collect()),
    )
}

/// Writes a full dataset (`x1,…,xp,y`), with a bounds comment when given.
pub fn write_data(
    path: &Path,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    bounds: Option<&[(f64, f64)]>,
) -> Result<(), Error> {
    let mut f = create(path)?;
    if let Some(b) = bounds {
        let spec: Vec<String> = b.iter().map(|(lo, hi)| format!("{lo}..{hi}")).collect();
        writeln!(f, "# bounds: {}", spec.join(", ")).map_err(|e| Error::io(path, e))?;
    }
    let mut header = x_header(x.ncols());
    header.push("y".into());
    write_csv(
        &mut f,
        path,
        &header,
        (0..x.nrows()).map(|r| x.row(r).iter().copied().chain([y[r]]).collect()),
    )
}

fn sample_header(p: usize) -> Vec<String> {
    let mut h: Vec<String> = (1..=p).map(|i| format!("log_phi{i}")).collect();
    h.push("z_delta".into());
    h.push("h".into());
    h
}

/// Writes posterior hyper-parameter samples with their energies.
pub fn write_samples(
    path: &Path,
    samples: &[DVector<f64>],
    h_values: &[f64],
) -> Result<(), Error> {
    let p = samples.first().map_or(0, |s| s.len().saturating_sub(1));
    let mut f = create(path)?;
    write_csv(
        &mut f,
        path,
        &sample_header(p),
        samples
            .iter()
            .zip(h_values)
            .map(|(s, &h)| s.iter().copied().chain([h]).collect()),
    )
}

/// Reads posterior samples written by [`write_samples`].
pub fn read_samples(path: &Path) -> Result<(Vec<DVector<f64>>, Vec<f64>), Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (cols, _) = sniff_header(&text).map_err(|what| Error::CsvLayout {
        path: path.to_path_buf(),
        what,
    })?;
    // header is log_phi1..p,z_delta,h: p = cols - 2
    let p = cols.checked_sub(2).filter(|&p| p > 0).ok_or_else(|| {
        Error::CsvLayout {
            path: path.to_path_buf(),
            what: "sample file needs log_phi1…, z_delta and h columns".into(),
        }
    })?;
    let rows = read_rows(path, &text, &sample_header(p))?;
    let samples = rows
        .iter()
        .map(|row| DVector::from_row_slice(&row[..p + 1]))
        .collect();
    let h_values = rows.iter().map(|row| row[p + 1]).collect();
    Ok((samples, h_values))
}
