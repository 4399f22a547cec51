use crate::data::{Column, Dataset, Roles};
use crate::error::Result;
use crate::regression::{center, dot, residualize, standardize};

use super::composite::{composite_w, CompositeW};

/// Standardized role columns shared by every stage of one analysis.
pub(crate) struct Prepared {
    pub y: Column,
    pub x: Column,
    pub z: Column,
    pub ws: Vec<Column>,
    pub composite: CompositeW,
    pub u: Option<Column>,
}

impl Prepared {
    pub fn new(data: &Dataset, roles: &Roles) -> Result<Self> {
        roles.validate(data)?;
        let s = |name: &str, role: &str| -> Result<Column> {
            Ok(standardize(data.get(name)?)?.renamed(role))
        };
        let ws: Vec<Column> = roles
            .covariates
            .iter()
            .map(|c| standardize(data.get(c)?))
            .collect::<Result<_>>()?;
        let refs: Vec<&Column> = ws.iter().collect();
        let composite = composite_w(&refs)?;
        let composite = CompositeW {
            column: composite.column.clone().renamed("W"),
            ..composite
        };
        Ok(Self {
            y: s(&roles.outcome, "Y")?,
            x: s(&roles.exposure, "X")?,
            z: s(&roles.instrument, "Z")?,
            u: roles.confounder.as_deref().map(|u| s(u, "U")).transpose()?,
            ws,
            composite,
        })
    }

    pub fn w(&self) -> &Column {
        &self.composite.column
    }

    pub fn denom(&self) -> f64 {
        self.y.len() as f64 - 1.0
    }

    /// Sample variance of a centered column.
    pub fn var(&self, c: &Column) -> f64 {
        dot(&c.values, &c.values) / self.denom()
    }

    /// Variance of `target` left after projecting on `on`.
    pub fn resvar(&self, target: &Column, on: &[&Column]) -> Result<f64> {
        Ok(self.var(&residualize(target, on)?))
    }
}

/// Centered elementwise product.
pub(crate) fn inter(a: &Column, b: &Column) -> Column {
    center(&a.product(b))
}
