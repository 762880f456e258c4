//! Impact characterization.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::solver::InventoryVector;
use crate::units::{convert_amount, Dimension, Unit};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LciaError {
    #[error("method `{method}` defines category `{category}` twice")]
    DuplicateCategory { method: String, category: String },
    #[error("category `{category}` has a non-finite factor for `{flow}`")]
    NonfiniteFactor { category: String, flow: String },
    #[error("category `{category}` is expressed in `{unit}`, which is not an energy unit")]
    NotEnergy { category: String, unit: String },
}

impl LciaError {
    pub fn code(&self) -> &'static str {
        match self {
            LciaError::DuplicateCategory { .. } => "DUPLICATE_CATEGORY",
            LciaError::NonfiniteFactor { .. } => "NONFINITE_FACTOR",
            LciaError::NotEnergy { .. } => "NOT_ENERGY",
        }
    }
}

/// One midpoint indicator: a linear map from elementary flows (per base unit)
/// to the category unit. Flows without a factor contribute nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpactCategory {
    pub id: String,
    pub name: String,
    pub unit: String,
    pub factors: BTreeMap<String, f64>,
}

impl ImpactCategory {
    pub fn new(id: impl Into<String>, name: impl Into<String>, unit: impl Into<String>) -> Self {
        ImpactCategory {
            id: id.into(),
            name: name.into(),
            unit: unit.into(),
            factors: BTreeMap::new(),
        }
    }

    pub fn with_factor(mut self, flow: impl Into<String>, factor: f64) -> Self {
        self.factors.insert(flow.into(), factor);
        self
    }

    pub fn factor(&self, flow: &str) -> f64 {
        self.factors.get(flow).copied().unwrap_or(0.0)
    }

    /// `Σ factor(flow) · g(flow)`, summed in flow-id order.
    pub fn evaluate(&self, g: &InventoryVector) -> f64 {
        g.iter().fold(0.0, |acc, (flow, amount)| match self.factors.get(flow) {
            Some(cf) => acc + cf * amount,
            None => acc,
        })
    }

    fn validate(&self) -> Result<(), LciaError> {
        match self.factors.iter().find(|(_, v)| !v.is_finite()) {
            Some((flow, _)) => Err(LciaError::NonfiniteFactor {
                category: self.id.clone(),
                flow: flow.clone(),
            }),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpactMethod {
    pub id: String,
    pub name: String,
    categories: Vec<ImpactCategory>,
}

impl ImpactMethod {
    pub fn new(
        id: impl Into<String>,
        name: impl Into<String>,
        categories: Vec<ImpactCategory>,
    ) -> Result<Self, LciaError> {
        let id = id.into();
        let mut seen = BTreeSet::new();
        for c in &categories {
            if !seen.insert(c.id.as_str()) {
                return Err(LciaError::DuplicateCategory {
                    method: id,
                    category: c.id.clone(),
                });
            }
            c.validate()?;
        }
        Ok(ImpactMethod {
            id,
            name: name.into(),
            categories,
        })
    }

    pub fn categories(&self) -> &[ImpactCategory] {
        &self.categories
    }

    pub fn category(&self, id: &str) -> Option<&ImpactCategory> {
        self.categories.iter().find(|c| c.id == id)
    }

    pub fn category_ids(&self) -> impl Iterator<Item = &str> {
        self.categories.iter().map(|c| c.id.as_str())
    }
}

/// Category indicator values for one functional unit.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ImpactResult {
    pub method: String,
    pub per_category: BTreeMap<String, f64>,
    /// Fraction of the inventory's nonzero flows that carry a factor in the
    /// category (1 when the inventory is empty).
    pub coverage: BTreeMap<String, f64>,
}

impl ImpactResult {
    pub fn value(&self, category: &str) -> Option<f64> {
        self.per_category.get(category).copied()
    }
}

pub fn characterize(g: &InventoryVector, method: &ImpactMethod) -> ImpactResult {
    let present: Vec<&str> = g.iter().filter(|(_, v)| *v != 0.0).map(|(k, _)| k).collect();
    let mut result = ImpactResult {
        method: method.id.clone(),
        ..Default::default()
    };
    for category in method.categories() {
        result.per_category.insert(category.id.clone(), category.evaluate(g));
        let covered = present.iter().filter(|f| category.factors.contains_key(**f)).count();
        let coverage = if present.is_empty() {
            1.0
        } else {
            covered as f64 / present.len() as f64
        };
        result.coverage.insert(category.id.clone(), coverage);
    }
    result
}

/// Cumulative energy demand in Wh: the category's value converted from its
/// (energy) unit.
pub fn ced(g: &InventoryVector, energy_factors: &ImpactCategory) -> Result<f64, LciaError> {
    let not_energy = || LciaError::NotEnergy {
        category: energy_factors.id.clone(),
        unit: energy_factors.unit.clone(),
    };
    let unit = Unit::lookup(energy_factors.unit.trim()).map_err(|_| not_energy())?;
    if unit.dimension() != Dimension::Energy {
        return Err(not_energy());
    }
    let value = energy_factors.evaluate(g);
    Ok(convert_amount(value, &unit, &Dimension::Energy.base()).expect("energy to energy"))
}
