use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of observations accepted anywhere in the crate.
pub const MIN_LEN: usize = 3;

/// A named vector of observations.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

impl Column {
    /// Builds a column after checking length and finiteness.
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if values.len() < MIN_LEN {
            return Err(Error::TooShort {
                column: name,
                len: values.len(),
                min: MIN_LEN,
            });
        }
        if let Some(row) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { column: name, row });
        }
        Ok(Self { name, values })
    }

    pub(crate) fn from_parts(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Sample variance with divisor n - 1.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let ss: f64 = self.values.iter().map(|v| (v - m) * (v - m)).sum();
        ss / (self.len() as f64 - 1.0)
    }

    /// Elementwise product, named `{a}{b}`.
    pub fn product(&self, other: &Column) -> Column {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        Column::from_parts(format!("{}{}", self.name, other.name), values)
    }

    pub fn scaled(&self, factor: f64) -> Column {
        Column::from_parts(
            self.name.clone(),
            self.values.iter().map(|v| v * factor).collect(),
        )
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Column {
        self.name = name.into();
        self
    }
}

/// Column-aligned table.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dataset {
    columns: Vec<Column>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends or replaces a column; all columns must share one length.
    pub fn insert(&mut self, column: Column) -> Result<()> {
        if let Some(first) = self.columns.first() {
            if first.len() != column.len() {
                return Err(Error::LengthMismatch {
                    expected: first.len(),
                    found: column.len(),
                    column: column.name,
                });
            }
        }
        match self.columns.iter_mut().find(|c| c.name == column.name) {
            Some(slot) => *slot = column,
            None => self.columns.push(column),
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&Column> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Column::len)
    }
}

impl FromIterator<Column> for Dataset {
    fn from_iter<I: IntoIterator<Item = Column>>(iter: I) -> Self {
        let mut ds = Dataset::new();
        for c in iter {
            ds.insert(c).expect("columns of equal length");
        }
        ds
    }
}

/// Assignment of dataset columns to the roles used by the sensitivity analysis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roles {
    pub outcome: String,
    pub exposure: String,
    pub instrument: String,
    pub covariates: Vec<String>,
    /// Unmeasured confounder, only present for oracle runs on simulated data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confounder: Option<String>,
}

impl Roles {
    /// Roles of a generated scenario dataset.
    pub fn simulated(with_confounder: bool) -> Self {
        Self {
            outcome: "Y".into(),
            exposure: "X".into(),
            instrument: "Z".into(),
            covariates: vec!["W".into()],
            confounder: with_confounder.then(|| "U".into()),
        }
    }

    /// Checks that roles are distinct and exist in `data`.
    pub fn validate(&self, data: &Dataset) -> Result<()> {
        let mut seen: Vec<&str> = Vec::new();
        let all = [&self.outcome, &self.exposure, &self.instrument]
            .into_iter()
            .chain(self.covariates.iter())
            .chain(self.confounder.iter());
        for name in all {
            data.get(name)?;
            if seen.contains(&name.as_str()) {
                return Err(Error::InvalidSpec(format!(
                    "column `{name}` is assigned to more than one role"
                )));
            }
            seen.push(name);
        }
        if self.covariates.is_empty() {
            return Err(Error::NoCovariates);
        }
        Ok(())
    }
}
