//! Sample containers: one test's grouped samples and the m × n dataset.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TdError};

/// The `n` observations of a single test. Positions `0..n1` are cases and
/// `n1..n` are controls.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedSamples {
    values: Vec<f64>,
    n1: usize,
}

impl GroupedSamples {
    pub fn new(values: Vec<f64>, n1: usize) -> Result<Self> {
        let n = values.len();
        if n1 < 2 || n < n1 + 2 {
            return Err(TdError::InvalidGroups(format!(
                "need at least 2 cases and 2 controls, got n1 = {n1}, n0 = {}",
                n.saturating_sub(n1)
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(TdError::InvalidGroups(format!("non-finite sample value {bad}")));
        }
        Ok(Self { values, n1 })
    }

    pub fn from_groups(cases: &[f64], controls: &[f64]) -> Result<Self> {
        let mut values = Vec::with_capacity(cases.len() + controls.len());
        values.extend_from_slice(cases);
        values.extend_from_slice(controls);
        Self::new(values, cases.len())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cases(&self) -> &[f64] {
        &self.values[..self.n1]
    }

    pub fn controls(&self) -> &[f64] {
        &self.values[self.n1..]
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n0(&self) -> usize {
        self.values.len() - self.n1
    }
}

/// m tests observed on the same n samples, with the case/control design given
/// by column index sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedDataset {
    ids: Vec<String>,
    column_names: Vec<String>,
    /// Row-major m × n.
    samples: Vec<f64>,
    case_columns: Vec<usize>,
    control_columns: Vec<usize>,
}

impl GroupedDataset {
    pub fn new(
        ids: Vec<String>,
        column_names: Vec<String>,
        samples: Vec<f64>,
        case_columns: Vec<usize>,
        control_columns: Vec<usize>,
    ) -> Result<Self> {
        let n = column_names.len();
        let m = ids.len();
        if m == 0 {
            return Err(TdError::EmptyDataset);
        }
        if samples.len() != m * n {
            return Err(TdError::InvalidGroups(format!(
                "expected {m} × {n} = {} values, got {}",
                m * n,
                samples.len()
            )));
        }
        if case_columns.len() < 2 || control_columns.len() < 2 {
            return Err(TdError::InvalidGroups(
                "need at least 2 case and 2 control columns".into(),
            ));
        }
        let mut seen = vec![false; n];
        for &c in case_columns.iter().chain(&control_columns) {
            if c >= n {
                return Err(TdError::InvalidGroups(format!("column {c} out of range")));
            }
            if seen[c] {
                return Err(TdError::InvalidGroups(format!(
                    "column {} is assigned twice",
                    column_names[c]
                )));
            }
            seen[c] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(TdError::InvalidGroups(
                "every column must be either a case or a control".into(),
            ));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(TdError::InvalidGroups("non-finite sample value".into()));
        }
        Ok(Self {
            ids,
            column_names,
            samples,
            case_columns,
            control_columns,
        })
    }

    /// Dataset whose first `n1` columns are cases, with synthesized names.
    pub fn from_rows(rows: Vec<Vec<f64>>, n1: usize) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(TdError::InvalidGroups("rows have different lengths".into()));
        }
        let ids = (1..=rows.len()).map(|j| format!("test{j}")).collect();
        let names = (0..n)
            .map(|i| if i < n1 { format!("case{}", i + 1) } else { format!("control{}", i + 1 - n1) })
            .collect();
        let samples = rows.into_iter().flatten().collect();
        Self::new(ids, names, samples, (0..n1).collect(), (n1..n).collect())
    }

    pub fn m(&self) -> usize {
        self.ids.len()
    }

    pub fn n(&self) -> usize {
        self.column_names.len()
    }

    pub fn n1(&self) -> usize {
        self.case_columns.len()
    }

    pub fn n0(&self) -> usize {
        self.control_columns.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn case_columns(&self) -> &[usize] {
        &self.case_columns
    }

    pub fn control_columns(&self) -> &[usize] {
        &self.control_columns
    }

    pub fn row(&self, j: usize) -> &[f64] {
        let n = self.n();
        &self.samples[j * n..(j + 1) * n]
    }

    /// Test `j` with cases first, in column-set order.
    pub fn test(&self, j: usize) -> GroupedSamples {
        let row = self.row(j);
        let values = self
            .case_columns
            .iter()
            .chain(&self.control_columns)
            .map(|&c| row[c])
            .collect();
        GroupedSamples {
            values,
            n1: self.n1(),
        }
    }
}
