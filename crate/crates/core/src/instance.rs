//! Boosting instances: the `m × n` matrix `A` with `A[i][j] = -y_i h_j(x_i)`.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// An `m × n` instance matrix with entries in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoostInstance {
    a: Matrix,
}

/// Labels in `{-1, +1}` and weak-learner predictions in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub labels: Vec<f64>,
    pub predictions: Matrix,
}

#[derive(Deserialize)]
struct InstanceFile {
    m: usize,
    n: usize,
    entries: Vec<Vec<f64>>,
}

impl BoostInstance {
    /// Validates and wraps a matrix. Entries are checked, never clipped.
    pub fn new(a: Matrix) -> Result<Self> {
        if a.rows() == 0 || a.cols() == 0 {
            return Err(Error::Domain(format!(
                "instance must be at least 1x1, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let offending = out_of_box(&a);
        if !offending.is_empty() {
            return Err(Error::Validation { offending });
        }
        Ok(BoostInstance { a })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    /// `Aλ`. The loss consumes this vector; classifier margins are its negation.
    pub fn margins(&self, lambda: &[f64]) -> Result<Vec<f64>> {
        check_lambda(self, lambda)?;
        self.a.mul_vec(lambda)
    }

    /// Fraction of examples with `(Aλ)_i ≥ 0`; ties count as errors.
    pub fn training_error(&self, lambda: &[f64]) -> Result<TrainingError> {
        let margins = self.margins(lambda)?;
        Ok(TrainingError {
            errors: margins.iter().filter(|&&x| x >= 0.0).count(),
            total: self.m(),
        })
    }

    /// Instance restricted to the given rows, `None` when `rows` is empty.
    pub fn select_rows(&self, rows: &[usize]) -> Option<BoostInstance> {
        if rows.is_empty() {
            None
        } else {
            Some(BoostInstance {
                a: self.a.select_rows(rows),
            })
        }
    }

    /// JSON text `{"m":..,"n":..,"entries":[[..],..]}` with every entry
    /// written to 17 significant digits.
    pub fn to_json(&self) -> String {
        let mut s = format!("{{\"m\":{},\"n\":{},\"entries\":[", self.m(), self.n());
        for i in 0..self.m() {
            if i > 0 {
                s.push(',');
            }
            s.push('[');
            for (j, v) in self.a.row(i).iter().enumerate() {
                if j > 0 {
                    s.push(',');
                }
                write!(s, "{}", fmt_f64(*v)).unwrap();
            }
            s.push(']');
        }
        s.push_str("]}\n");
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        if file.entries.len() != file.m {
            return Err(Error::Dimension {
                expected: file.m,
                got: file.entries.len(),
            });
        }
        if let Some(r) = file.entries.iter().find(|r| r.len() != file.n) {
            return Err(Error::Dimension {
                expected: file.n,
                got: r.len(),
            });
        }
        Self::from_rows(&file.entries)
    }

    /// One matrix row per line, comma separated, no header.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for i in 0..self.m() {
            let row: Vec<String> = self.a.row(i).iter().map(|v| fmt_f64(*v)).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|e| Error::Parse(format!("bad entry {f:?}: {e}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Self::from_rows(&rows)
    }

    /// Reads `.csv` files as CSV and everything else as JSON.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        if path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
        {
            Self::from_csv(&text)
        } else {
            Self::from_json(&text)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainingError {
    pub errors: usize,
    pub total: usize,
}

impl TrainingError {
    pub fn rate(&self) -> f64 {
        self.errors as f64 / self.total as f64
    }
}

/// Builds `A` with `A[i][j] = -labels[i] * predictions[i][j]`.
pub fn build_instance(sample: &LabeledSample) -> Result<BoostInstance> {
    let p = &sample.predictions;
    if sample.labels.len() != p.rows() {
        return Err(Error::Dimension {
            expected: p.rows(),
            got: sample.labels.len(),
        });
    }
    let mut offending: Vec<(usize, usize)> = out_of_box(p);
    for (i, &y) in sample.labels.iter().enumerate() {
        if y != 1.0 && y != -1.0 {
            offending.extend((0..p.cols()).map(|j| (i, j)));
        }
    }
    if !offending.is_empty() {
        offending.sort_unstable();
        offending.dedup();
        return Err(Error::Validation { offending });
    }
    let mut a = Matrix::zeros(p.rows(), p.cols());
    for i in 0..p.rows() {
        for j in 0..p.cols() {
            a[(i, j)] = -sample.labels[i] * p[(i, j)];
        }
    }
    BoostInstance::new(a)
}

fn out_of_box(a: &Matrix) -> Vec<(usize, usize)> {
    let mut bad = Vec::new();
    for i in 0..a.rows() {
        for (j, v) in a.row(i).iter().enumerate() {
            if !(-1.0..=1.0).contains(v) {
                bad.push((i, j));
            }
        }
    }
    bad
}

fn check_lambda(inst: &BoostInstance, lambda: &[f64]) -> Result<()> {
    if lambda.len() != inst.n() {
        return Err(Error::Dimension {
            expected: inst.n(),
            got: lambda.len(),
        });
    }
    if lambda.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("lambda must be finite".into()));
    }
    Ok(())
}

/// Scientific notation with 17 significant digits; parses back bit-exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
