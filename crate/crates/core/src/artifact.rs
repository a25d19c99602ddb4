//! Versioned key-value text format with row-major matrix blocks.
//!
//! ```text
//! ampc-artifact 1
//! scalar gamma 9.0000000000000002e-1
//! matrix K 2 2
//! 3.6...e-1 -6.5...e-2
//! -3.3...e-1 2.8...e-1
//! ```
//!
//! Floats are written with 17 significant digits so that parsing returns
//! the exact values that were written.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub const HEADER: &str = "ampc-artifact";
pub const VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArtifactError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported artifact version {0}")]
    Version(u32),
    #[error("missing entry `{0}`")]
    Missing(String),
    #[error("entry `{0}` has the wrong kind or shape")]
    Kind(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Entry {
    Scalar(f64),
    Text(String),
    Matrix(DMatrix<f64>),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifact {
    order: Vec<String>,
    entries: BTreeMap<String, Entry>,
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

impl Artifact {
    pub fn new() -> Self {
        Self::default()
    }

    fn insert(&mut self, key: &str, e: Entry) {
        assert!(
            !key.is_empty() && !key.contains(char::is_whitespace),
            "artifact keys are single tokens"
        );
        if self.entries.insert(key.to_string(), e).is_none() {
            self.order.push(key.to_string());
        }
    }

    pub fn put_scalar(&mut self, key: &str, v: f64) {
        self.insert(key, Entry::Scalar(v));
    }

    pub fn put_text(&mut self, key: &str, v: &str) {
        assert!(!v.contains('\n'));
        self.insert(key, Entry::Text(v.to_string()));
    }

    pub fn put_matrix(&mut self, key: &str, m: &DMatrix<f64>) {
        self.insert(key, Entry::Matrix(m.clone()));
    }

    pub fn put_vector(&mut self, key: &str, v: &DVector<f64>) {
        self.put_matrix(key, &DMatrix::from_column_slice(v.len(), 1, v.as_slice()));
    }

    pub fn put_list(&mut self, key: &str, v: &[f64]) {
        self.put_vector(key, &DVector::from_row_slice(v));
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.order.iter().map(String::as_str)
    }

    pub fn get(&self, key: &str) -> Result<&Entry, ArtifactError> {
        self.entries
            .get(key)
            .ok_or_else(|| ArtifactError::Missing(key.to_string()))
    }

    pub fn scalar(&self, key: &str) -> Result<f64, ArtifactError> {
        match self.get(key)? {
            Entry::Scalar(v) => Ok(*v),
            _ => Err(ArtifactError::Kind(key.to_string())),
        }
    }

    pub fn text(&self, key: &str) -> Result<&str, ArtifactError> {
        match self.get(key)? {
            Entry::Text(v) => Ok(v),
            _ => Err(ArtifactError::Kind(key.to_string())),
        }
    }

    pub fn matrix(&self, key: &str) -> Result<&DMatrix<f64>, ArtifactError> {
        match self.get(key)? {
            Entry::Matrix(m) => Ok(m),
            _ => Err(ArtifactError::Kind(key.to_string())),
        }
    }

    pub fn vector(&self, key: &str) -> Result<DVector<f64>, ArtifactError> {
        let m = self.matrix(key)?;
        if m.ncols() != 1 {
            return Err(ArtifactError::Kind(key.to_string()));
        }
        Ok(m.column(0).into_owned())
    }

    pub fn list(&self, key: &str) -> Result<Vec<f64>, ArtifactError> {
        Ok(self.vector(key)?.iter().copied().collect())
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{HEADER} {VERSION}\n");
        for key in &self.order {
            match &self.entries[key] {
                Entry::Scalar(v) => writeln!(s, "scalar {key} {}", fmt_f64(*v)).unwrap(),
                Entry::Text(v) => writeln!(s, "text {key} {v}").unwrap(),
                Entry::Matrix(m) => {
                    writeln!(s, "matrix {key} {} {}", m.nrows(), m.ncols()).unwrap();
                    for r in 0..m.nrows() {
                        let row: Vec<String> = (0..m.ncols()).map(|c| fmt_f64(m[(r, c)])).collect();
                        writeln!(s, "{}", row.join(" ")).unwrap();
                    }
                }
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, ArtifactError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let err = |line: usize, msg: &str| ArtifactError::Parse {
            line: line + 1,
            msg: msg.to_string(),
        };
        let (ln, head) = lines.next().ok_or_else(|| err(0, "empty artifact"))?;
        let mut parts = head.split_whitespace();
        if parts.next() != Some(HEADER) {
            return Err(err(ln, "missing header"));
        }
        let version: u32 = parts
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| err(ln, "bad version"))?;
        if version != VERSION {
            return Err(ArtifactError::Version(version));
        }
        let mut art = Artifact::new();
        while let Some((ln, line)) = lines.next() {
            let mut tok = line.split_whitespace();
            let kind = tok.next().unwrap_or_default();
            let key = tok.next().ok_or_else(|| err(ln, "missing key"))?;
            match kind {
                "scalar" => {
                    let v = tok
                        .next()
                        .and_then(|t| t.parse::<f64>().ok())
                        .ok_or_else(|| err(ln, "bad scalar"))?;
                    art.put_scalar(key, v);
                }
                "text" => {
                    let rest = line
                        .splitn(3, char::is_whitespace)
                        .nth(2)
                        .unwrap_or_default();
                    art.put_text(key, rest);
                }
                "matrix" => {
                    let mut dim = || -> Result<usize, ArtifactError> {
                        tok.next()
                            .and_then(|t| t.parse().ok())
                            .ok_or_else(|| err(ln, "bad matrix shape"))
                    };
                    let (r, c) = (dim()?, dim()?);
                    let mut data = Vec::with_capacity(r * c);
                    for _ in 0..r {
                        let (rl, row) = lines.next().ok_or_else(|| err(ln, "truncated matrix"))?;
                        let vals: Result<Vec<f64>, _> = row.split_whitespace().map(str::parse).collect();
                        let vals = vals.map_err(|_| err(rl, "bad matrix entry"))?;
                        if vals.len() != c {
                            return Err(err(rl, "wrong row length"));
                        }
                        data.extend(vals);
                    }
                    art.put_matrix(key, &DMatrix::from_row_slice(r, c, &data));
                }
                _ => return Err(err(ln, "unknown entry kind")),
            }
        }
        Ok(art)
    }
}
