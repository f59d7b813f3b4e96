//! The `SampleSet` container and its CSV form.

use std::fmt::Write as _;
use std::io::{self, Write};

use crate::error::{Error, Result};

/// `count` points in `dim` dimensions, stored row-major.
///
/// Row `i` is the sample `z_i`; column `j` is the feature `z^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    data: Vec<f64>,
    count: usize,
    dim: usize,
}

impl SampleSet {
    pub fn new(data: Vec<f64>, count: usize, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Degenerate("dimension must be >= 1".into()));
        }
        if count < 2 {
            return Err(Error::Degenerate(format!("need at least 2 samples, got {count}")));
        }
        if data.len() != count * dim {
            return Err(Error::Shape(format!(
                "{} values cannot fill {count} x {dim}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite entry at row {}, column {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Self { data, count, dim })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Shape("rows have differing lengths".into()));
        }
        Self::new(rows.concat(), rows.len(), dim)
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        column_means(&self.data, self.count, self.dim)
    }

    /// Unbiased (N-1) covariance, row-major `dim x dim`.
    pub fn covariance(&self) -> Vec<f64> {
        covariance(&self.data, self.count, self.dim)
    }

    /// Euclidean norm of each row.
    pub fn radii(&self) -> Vec<f64> {
        self.rows().map(norm).collect()
    }

    /// Keeps the rows selected by `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self::new(data, indices.len(), self.dim)
    }

    /// Applies `f` to every coordinate.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.data.iter().map(|&v| f(v)).collect(), self.count, self.dim)
    }

    /// Writes the CSV form: optional `# ` comment lines, a header
    /// `x0,...,x{d-1}`, then one row per sample with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W, comments: &[String]) -> io::Result<()> {
        out.write_all(self.to_csv_string(comments).as_bytes())
    }

    pub fn to_csv_string(&self, comments: &[String]) -> String {
        let mut s = String::with_capacity(self.data.len() * 26 + 64);
        for c in comments {
            for line in c.lines() {
                let _ = write!(s, "# {line}\r\n");
            }
        }
        let header: Vec<String> = (0..self.dim).map(|j| format!("x{j}")).collect();
        s.push_str(&header.join(","));
        s.push_str("\r\n");
        for row in self.rows() {
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    s.push(',');
                }
                push_float(&mut s, *v);
            }
            s.push_str("\r\n");
        }
        s
    }

    /// Parses the CSV form. Lines starting with `#` before the header are skipped.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (header_line, header) = loop {
            match lines.next() {
                None => {
                    return Err(Error::Parse {
                        line: 1,
                        message: "missing header row".into(),
                    })
                }
                Some((_, l)) if l.starts_with('#') => continue,
                Some((n, l)) => break (n, l),
            }
        };
        let dim = header.split(',').count();
        for (j, name) in header.split(',').enumerate() {
            if name.trim() != format!("x{j}") {
                return Err(Error::Parse {
                    line: header_line,
                    message: format!("expected column name x{j}, found {name:?}"),
                });
            }
        }
        let mut data = Vec::new();
        let mut count = 0;
        for (n, line) in lines {
            if line.is_empty() {
                continue;
            }
            let mut fields = 0;
            for field in line.split(',') {
                let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                    line: n,
                    message: format!("invalid number {field:?}"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        line: n,
                        message: format!("non-finite value {field:?}"),
                    });
                }
                data.push(v);
                fields += 1;
            }
            if fields != dim {
                return Err(Error::Parse {
                    line: n,
                    message: format!("expected {dim} fields, found {fields}"),
                });
            }
            count += 1;
        }
        if count < 2 {
            return Err(Error::Parse {
                line: header_line,
                message: format!("need at least 2 data rows, found {count}"),
            });
        }
        Self::new(data, count, dim)
    }
}

/// 17 significant digits in scientific notation; round-trips exactly.
pub fn push_float(s: &mut String, v: f64) {
    let _ = write!(s, "{v:.16e}");
}

pub fn format_float(v: f64) -> String {
    let mut s = String::new();
    push_float(&mut s, v);
    s
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn column_means(data: &[f64], count: usize, dim: usize) -> Vec<f64> {
    let mut mean = vec![0.0; dim];
    for row in data.chunks_exact(dim) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= count as f64;
    }
    mean
}

pub(crate) fn covariance(data: &[f64], count: usize, dim: usize) -> Vec<f64> {
    let mean = column_means(data, count, dim);
    let mut cov = vec![0.0; dim * dim];
    let mut centred = vec![0.0; dim];
    for row in data.chunks_exact(dim) {
        for j in 0..dim {
            centred[j] = row[j] - mean[j];
        }
        for a in 0..dim {
            for b in a..dim {
                cov[a * dim + b] += centred[a] * centred[b];
            }
        }
    }
    let denom = (count - 1) as f64;
    for a in 0..dim {
        for b in a..dim {
            let v = cov[a * dim + b] / denom;
            cov[a * dim + b] = v;
            cov[b * dim + a] = v;
        }
    }
    cov
}
