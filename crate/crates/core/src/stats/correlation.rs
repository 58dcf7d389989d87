use super::StatsError;
use crate::num::Scalar;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pearson,
    Spearman,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Pearson => "pearson",
            Method::Spearman => "spearman",
        })
    }
}

fn check_pair<T: Scalar>(x: &[T], y: &[T]) -> Result<(), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(StatsError::TooFew { need: 2, got: x.len() });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::DegenerateInput("non-finite value".into()));
    }
    Ok(())
}

/// Sample Pearson correlation.
pub fn pearson<T: Scalar>(x: &[T], y: &[T]) -> Result<T, StatsError> {
    check_pair(x, y)?;
    let n = T::from_count(x.len());
    let mx = x.iter().fold(T::zero(), |a, &v| a + v) / n;
    let my = y.iter().fold(T::zero(), |a, &v| a + v) / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    if sxx == T::zero() || syy == T::zero() {
        return Err(StatsError::DegenerateInput("constant vector".into()));
    }
    let r = sxy / (sxx * syy).sqrt();
    Ok(r.max(-T::one()).min(T::one()))
}

/// 1-based ranks; tied values share the mean of their positions.
pub fn ranks<T: Scalar>(x: &[T]) -> Vec<T> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap_or(Ordering::Equal));
    let mut out = vec![T::zero(); x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && x[idx[j]] == x[idx[i]] {
            j += 1;
        }
        let avg = T::from_count(i + j + 1) / T::from_count(2);
        for &k in &idx[i..j] {
            out[k] = avg;
        }
        i = j;
    }
    out
}

/// Pearson correlation of average-tied ranks.
pub fn spearman<T: Scalar>(x: &[T], y: &[T]) -> Result<T, StatsError> {
    check_pair(x, y)?;
    pearson(&ranks(x), &ranks(y))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRow<T> {
    pub model_id: String,
    /// Ordered (column name, value) pairs.
    pub columns: Vec<(String, T)>,
}

impl<T: Scalar> ModelRow<T> {
    pub fn new(model_id: &str, columns: Vec<(String, T)>) -> Self {
        ModelRow {
            model_id: model_id.to_string(),
            columns,
        }
    }

    pub fn labels(&self) -> Vec<String> {
        self.columns.iter().map(|(k, _)| k.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix<T> {
    pub method: Method,
    pub labels: Vec<String>,
    /// `None` marks a cell whose correlation is undefined (constant column).
    pub values: Vec<Vec<Option<T>>>,
}

impl<T: Scalar> CorrelationMatrix<T> {
    pub fn get(&self, a: &str, b: &str) -> Option<T> {
        let i = self.labels.iter().position(|l| l == a)?;
        let j = self.labels.iter().position(|l| l == b)?;
        self.values[i][j]
    }

    /// (row label, column label, value) triples in row-major order.
    pub fn long_form(&self) -> Vec<(String, String, Option<T>)> {
        let mut out = Vec::with_capacity(self.labels.len() * self.labels.len());
        for (i, a) in self.labels.iter().enumerate() {
            for (j, b) in self.labels.iter().enumerate() {
                out.push((a.clone(), b.clone(), self.values[i][j]));
            }
        }
        out
    }
}

/// Correlations between columns across models. A constant column yields
/// missing cells in its whole row and column.
pub fn correlation_matrix<T: Scalar>(
    rows: &[ModelRow<T>],
    method: Method,
) -> Result<CorrelationMatrix<T>, StatsError> {
    if rows.len() < 3 {
        return Err(StatsError::TooFew { need: 3, got: rows.len() });
    }
    let labels = rows[0].labels();
    for r in rows {
        let found = r.labels();
        if found != labels {
            return Err(StatsError::ColumnMismatch {
                model_id: r.model_id.clone(),
                expected: labels,
                found,
            });
        }
    }
    let cols: Vec<Vec<T>> = (0..labels.len())
        .map(|j| rows.iter().map(|r| r.columns[j].1).collect())
        .collect();
    let k = labels.len();
    let mut values = vec![vec![None; k]; k];
    for i in 0..k {
        for j in i..k {
            let cell = match method {
                Method::Pearson => pearson(&cols[i], &cols[j]),
                Method::Spearman => spearman(&cols[i], &cols[j]),
            };
            let cell = match cell {
                Ok(_) if i == j => Some(T::one()),
                Ok(v) => Some(v),
                Err(StatsError::DegenerateInput(_)) => None,
                Err(e) => return Err(e),
            };
            values[i][j] = cell;
            values[j][i] = cell;
        }
    }
    Ok(CorrelationMatrix {
        method,
        labels,
        values,
    })
}
