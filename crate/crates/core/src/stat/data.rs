use std::collections::HashSet;
use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{PepError, Result};

/// Response vector plus the full pool of candidate covariates.
///
/// The candidate matrix never carries an intercept column; every model gets
/// one from [`build_design`].
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: DVector<f64>,
    x: DMatrix<f64>,
    names: Vec<String>,
}

impl Dataset {
    pub fn new(y: DVector<f64>, x: DMatrix<f64>, names: Vec<String>) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(PepError::InvalidData("no observations".into()));
        }
        if x.nrows() != n {
            return Err(PepError::InvalidData(format!(
                "response has {n} rows but covariates have {}",
                x.nrows()
            )));
        }
        if names.len() != x.ncols() {
            return Err(PepError::InvalidData(format!(
                "{} names for {} covariates",
                names.len(),
                x.ncols()
            )));
        }
        if y.iter().chain(x.iter()).any(|v| !v.is_finite()) {
            return Err(PepError::InvalidData("non-finite entry".into()));
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(PepError::InvalidData(format!("duplicate column name {name:?}")));
            }
        }
        Ok(Self { y, x, names })
    }

    /// Builds a dataset with default names `X1..Xp`.
    pub fn unnamed(y: DVector<f64>, x: DMatrix<f64>) -> Result<Self> {
        let names = (1..=x.ncols()).map(|j| format!("X{j}")).collect();
        Self::new(y, x, names)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Keeps the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let y = DVector::from_iterator(rows.len(), rows.iter().map(|&i| self.y[i]));
        let x = self.x.select_rows(rows);
        Dataset {
            y,
            x,
            names: self.names.clone(),
        }
    }

    /// Keeps the given covariate columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Dataset {
        let x = self.x.select_columns(cols);
        let names = cols.iter().map(|&j| self.names[j].clone()).collect();
        Dataset {
            y: self.y.clone(),
            x,
            names,
        }
    }

    /// Centers each covariate and scales it to unit sample standard deviation.
    /// Constant columns are only centered.
    pub fn standardized(&self) -> Dataset {
        let n = self.n() as f64;
        let mut x = self.x.clone();
        for mut col in x.column_iter_mut() {
            let mean = col.sum() / n;
            col.add_scalar_mut(-mean);
            if self.y.len() > 1 {
                let sd = (col.norm_squared() / (n - 1.0)).sqrt();
                if sd > 0.0 {
                    col /= sd;
                }
            }
        }
        Dataset {
            y: self.y.clone(),
            x,
            names: self.names.clone(),
        }
    }
}

/// Inclusion indicators over the candidate covariates. The intercept is
/// implicit and always present.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModelSpec {
    gamma: Vec<bool>,
}

impl serde::Serialize for ModelSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.bit_string())
    }
}

impl ModelSpec {
    pub fn new(gamma: Vec<bool>) -> Self {
        Self { gamma }
    }

    /// The constant model.
    pub fn null(p: usize) -> Self {
        Self::new(vec![false; p])
    }

    pub fn full(p: usize) -> Self {
        Self::new(vec![true; p])
    }

    /// Model including the zero-based covariate indices in `included`.
    pub fn from_indices(p: usize, included: &[usize]) -> Result<Self> {
        let mut gamma = vec![false; p];
        for &j in included {
            if j >= p {
                return Err(PepError::DimensionMismatch(format!(
                    "covariate index {j} out of range for p = {p}"
                )));
            }
            gamma[j] = true;
        }
        Ok(Self::new(gamma))
    }

    /// Bit `j` of `bits` switches covariate `j` on. Requires `p <= 64`.
    pub fn from_bits(p: usize, bits: u64) -> Self {
        debug_assert!(p <= 64);
        Self::new((0..p).map(|j| bits >> j & 1 == 1).collect())
    }

    /// Parses a `0`/`1` string such as `"1000101"`.
    pub fn parse_bits(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(PepError::InvalidData(format!(
                    "model string may only contain 0/1, found {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }

    pub fn p(&self) -> usize {
        self.gamma.len()
    }

    pub fn gamma(&self) -> &[bool] {
        &self.gamma
    }

    /// Number of regression coefficients, intercept included.
    pub fn dim(&self) -> usize {
        1 + self.gamma.iter().filter(|&&g| g).count()
    }

    pub fn is_null(&self) -> bool {
        self.gamma.iter().all(|&g| !g)
    }

    pub fn contains(&self, j: usize) -> bool {
        self.gamma[j]
    }

    pub fn included(&self) -> Vec<usize> {
        (0..self.p()).filter(|&j| self.gamma[j]).collect()
    }

    pub fn flipped(&self, j: usize) -> Self {
        let mut gamma = self.gamma.clone();
        gamma[j] = !gamma[j];
        Self::new(gamma)
    }

    /// Packs the indicators into 64-bit words (stream keys, hashing).
    pub fn words(&self) -> Vec<u64> {
        let mut words = vec![0u64; self.p().div_ceil(64).max(1)];
        for j in self.included() {
            words[j / 64] |= 1 << (j % 64);
        }
        words
    }

    pub fn bit_string(&self) -> String {
        self.gamma.iter().map(|&g| if g { '1' } else { '0' }).collect()
    }

    /// Human-readable label such as `X1+X5+X7`.
    pub fn label(&self, names: &[String]) -> String {
        let inc = self.included();
        if inc.is_empty() {
            "(constant)".to_string()
        } else {
            inc.iter()
                .map(|&j| names[j].as_str())
                .collect::<Vec<_>>()
                .join("+")
        }
    }

    /// Lifts a model over a subset of candidates back to the full space.
    /// `columns[k]` is the full-space index of reduced covariate `k`.
    pub fn lift(&self, columns: &[usize], p_full: usize) -> Self {
        let mut gamma = vec![false; p_full];
        for j in self.included() {
            gamma[columns[j]] = true;
        }
        Self::new(gamma)
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.bit_string())
    }
}

/// Design matrix of `model`: a leading column of ones followed by the
/// selected covariates in ascending index order.
pub fn build_design(dataset: &Dataset, model: &ModelSpec) -> Result<DMatrix<f64>> {
    design_from(dataset.x(), model)
}

fn design_from(x: &DMatrix<f64>, model: &ModelSpec) -> Result<DMatrix<f64>> {
    if model.p() != x.ncols() {
        return Err(PepError::DimensionMismatch(format!(
            "model has {} indicators, dataset has {} covariates",
            model.p(),
            x.ncols()
        )));
    }
    let inc = model.included();
    let n = x.nrows();
    let mut design = DMatrix::from_element(n, 1 + inc.len(), 1.0);
    for (k, &j) in inc.iter().enumerate() {
        design.set_column(k + 1, &x.column(j));
    }
    Ok(design)
}
