//! Contribution (hot-spot) analysis.
//!
//! The foreground processes are split into labelled groups. Each group is
//! charged with its own direct elementary flows plus the background supply
//! chains it induces: the background demand created by a group's scaled
//! product inputs is solved through the background sub-system on its own.
//! Because that solve is linear, background processes shared by several
//! groups (one electricity market feeding every component, say) are split in
//! proportion to each group's demand on them, and the group totals add up to
//! the full result.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::inventory::InventoryDatabase;
use crate::lcia::{characterize, ImpactMethod};
use crate::solver::{assemble, BlockFactorization, DemandVector, InventoryVector, SolveError};

/// Label of the pseudo-group holding final demand placed directly on
/// background products.
pub const BACKGROUND_DEMAND_LABEL: &str = "background demand";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContributionError {
    #[error("process `{process}` appears in groups `{first}` and `{second}`")]
    OverlappingGroups {
        process: String,
        first: String,
        second: String,
    },
    #[error("foreground process `{0}` is not in any group")]
    UngroupedForeground(String),
    #[error("group `{group}` references unknown process `{process}`")]
    UnknownProcess { group: String, process: String },
    #[error("group label `{0}` is used twice")]
    DuplicateLabel(String),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

impl ContributionError {
    pub fn code(&self) -> &'static str {
        match self {
            ContributionError::OverlappingGroups { .. } => "OVERLAPPING_GROUPS",
            ContributionError::UngroupedForeground(_) => "UNGROUPED_FOREGROUND",
            ContributionError::UnknownProcess { .. } => "UNKNOWN_PROCESS",
            ContributionError::DuplicateLabel(_) => "DUPLICATE_LABEL",
            ContributionError::Solve(e) => e.code(),
        }
    }
}

/// Partition of a declared foreground into labelled groups.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Grouping {
    foreground: BTreeSet<String>,
    groups: Vec<(String, BTreeSet<String>)>,
}

impl Grouping {
    /// Foreground is the union of the groups.
    pub fn new<L, P, I>(groups: impl IntoIterator<Item = (L, I)>) -> Self
    where
        L: Into<String>,
        P: Into<String>,
        I: IntoIterator<Item = P>,
    {
        let groups: Vec<(String, BTreeSet<String>)> = groups
            .into_iter()
            .map(|(l, ps)| (l.into(), ps.into_iter().map(Into::into).collect()))
            .collect();
        let foreground = groups.iter().flat_map(|(_, ps)| ps.iter().cloned()).collect();
        Grouping { foreground, groups }
    }

    /// Explicit foreground; every member must end up in exactly one group.
    pub fn with_foreground<L, P, I>(
        foreground: impl IntoIterator<Item = impl Into<String>>,
        groups: impl IntoIterator<Item = (L, I)>,
    ) -> Self
    where
        L: Into<String>,
        P: Into<String>,
        I: IntoIterator<Item = P>,
    {
        let mut g = Grouping::new(groups);
        g.foreground = foreground.into_iter().map(Into::into).collect();
        g
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.groups.iter().map(|(l, _)| l.as_str())
    }

    pub fn groups(&self) -> &[(String, BTreeSet<String>)] {
        &self.groups
    }

    pub fn foreground(&self) -> &BTreeSet<String> {
        &self.foreground
    }

    fn check(&self, db: &InventoryDatabase) -> Result<(), ContributionError> {
        let mut owner: BTreeMap<&str, &str> = BTreeMap::new();
        let mut labels = BTreeSet::new();
        for (label, processes) in &self.groups {
            if !labels.insert(label.as_str()) {
                return Err(ContributionError::DuplicateLabel(label.clone()));
            }
            for p in processes {
                if db.process(p).is_none() {
                    return Err(ContributionError::UnknownProcess {
                        group: label.clone(),
                        process: p.clone(),
                    });
                }
                if let Some(first) = owner.insert(p, label) {
                    return Err(ContributionError::OverlappingGroups {
                        process: p.clone(),
                        first: first.to_string(),
                        second: label.clone(),
                    });
                }
            }
        }
        for p in &self.foreground {
            if !owner.contains_key(p.as_str()) {
                return Err(ContributionError::UngroupedForeground(p.clone()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContributionRow {
    pub value: f64,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContributionTable {
    pub method: String,
    pub categories: Vec<String>,
    /// Group labels in grouping order, plus [`BACKGROUND_DEMAND_LABEL`] when
    /// the demand reaches background products directly.
    pub labels: Vec<String>,
    pub rows: BTreeMap<(String, String), ContributionRow>,
    pub totals: BTreeMap<String, f64>,
    /// Categories whose total is exactly zero; their shares are reported as 0.
    pub zero_total: BTreeSet<String>,
    /// Elementary-flow inventory charged to each label.
    pub inventories: BTreeMap<String, InventoryVector>,
}

impl ContributionTable {
    pub fn row(&self, category: &str, label: &str) -> Option<ContributionRow> {
        self.rows.get(&(category.to_string(), label.to_string())).copied()
    }

    pub fn value_sum(&self, category: &str) -> f64 {
        self.labels.iter().filter_map(|l| self.row(category, l)).map(|r| r.value).sum()
    }

    pub fn share_sum(&self, category: &str) -> f64 {
        self.labels.iter().filter_map(|l| self.row(category, l)).map(|r| r.share).sum()
    }

    /// Group with the largest value in the category; ties go to the earlier label.
    pub fn hot_spot(&self, category: &str) -> Option<&str> {
        let mut best: Option<(&str, f64)> = None;
        for label in &self.labels {
            let Some(row) = self.row(category, label) else { continue };
            if best.map_or(true, |(_, v)| row.value > v) {
                best = Some((label, row.value));
            }
        }
        best.map(|(l, _)| l)
    }
}

pub fn contributions(
    db: &InventoryDatabase,
    demand: &DemandVector,
    method: &ImpactMethod,
    grouping: &Grouping,
) -> Result<ContributionTable, ContributionError> {
    grouping.check(db)?;
    let sys = assemble(db)?;
    let n = sys.process_order().len();
    let f = sys.demand_column(demand)?;
    let s = sys.factorize()?.solve_dense(&f)?;
    let a = sys.technosphere();

    let is_foreground: Vec<bool> = sys
        .process_order()
        .iter()
        .map(|p| grouping.foreground.contains(p))
        .collect();
    let background: Vec<usize> = (0..n).filter(|&i| !is_foreground[i]).collect();
    let background_factor = if background.is_empty() {
        None
    } else {
        Some(
            BlockFactorization::new(&a.principal_submatrix(&background))
                .map_err(|e| sys.map_linear_error(e))?,
        )
    };

    // Background demand vector (in background-local indices) -> full-length
    // scaling vector over the background processes.
    let expand_background = |rhs: Vec<f64>, into: &mut Vec<f64>| -> Result<(), ContributionError> {
        if let Some(factor) = &background_factor {
            let local = factor.solve(&rhs).map_err(|e| sys.map_linear_error(e))?;
            for (k, &i) in background.iter().enumerate() {
                into[i] = local[k];
            }
        }
        Ok(())
    };

    let mut labels = Vec::new();
    let mut inventories = BTreeMap::new();
    for (label, members) in &grouping.groups {
        let mut scaling = vec![0.0; n];
        let mut rhs = vec![0.0; background.len()];
        for (j, process) in sys.process_order().iter().enumerate() {
            if !members.contains(process) {
                continue;
            }
            scaling[j] = s[j];
            for (k, &i) in background.iter().enumerate() {
                rhs[k] -= a.get(i, j) * s[j];
            }
        }
        expand_background(rhs, &mut scaling)?;
        labels.push(label.clone());
        inventories.insert(label.clone(), sys.inventory_from_dense(&scaling));
    }

    let direct: Vec<f64> = background.iter().map(|&i| f[i]).collect();
    if direct.iter().any(|v| *v != 0.0) {
        let mut scaling = vec![0.0; n];
        expand_background(direct, &mut scaling)?;
        labels.push(BACKGROUND_DEMAND_LABEL.to_string());
        inventories.insert(BACKGROUND_DEMAND_LABEL.to_string(), sys.inventory_from_dense(&scaling));
    }

    let totals = characterize(&sys.inventory_from_dense(&s), method).per_category;
    let mut rows = BTreeMap::new();
    let mut zero_total = BTreeSet::new();
    for category in method.categories() {
        let total = totals[&category.id];
        if total == 0.0 {
            zero_total.insert(category.id.clone());
        }
        for label in &labels {
            let value = category.evaluate(&inventories[label]);
            let share = if total == 0.0 { 0.0 } else { value / total };
            rows.insert((category.id.clone(), label.clone()), ContributionRow { value, share });
        }
    }

    Ok(ContributionTable {
        method: method.id.clone(),
        categories: method.category_ids().map(str::to_string).collect(),
        labels,
        rows,
        totals,
        zero_total,
        inventories,
    })
}
