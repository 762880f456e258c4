//! Overrides on a modeled system, batch sweeps and cross-chemistry comparison.
//!
//! Overrides are applied in listed order to copies of the inputs, so a later
//! override sees the effect of earlier ones.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::battery::{pack_energy_density, CellDesign, PackDesign, Role};
use crate::inventory::{Direction, InventoryDatabase};
use crate::lcia::{ImpactMethod, ImpactResult};
use crate::model::{assess, ModelError};

#[derive(Debug, Clone, PartialEq)]
pub enum Override {
    /// Every input of `flow` is rewired to the reference product of
    /// `new_process`, as are cell components made of `flow`.
    ReplaceProvider { flow: String, new_process: String },
    /// Multiplies the non-reference exchanges of `flow` in `process`.
    ScaleExchange { process: String, flow: String, factor: f64 },
    SetComponentMass { cell: String, role: Role, mass_mg: f64 },
}

impl Override {
    pub fn kind(&self) -> &'static str {
        match self {
            Override::ReplaceProvider { .. } => "replace_provider",
            Override::ScaleExchange { .. } => "scale_exchange",
            Override::SetComponentMass { .. } => "set_component_mass",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scenario {
    pub id: String,
    pub overrides: Vec<Override>,
}

impl Scenario {
    pub fn new(id: impl Into<String>, overrides: Vec<Override>) -> Self {
        Scenario {
            id: id.into(),
            overrides,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("override {index} of scenario `{scenario}`: `{id}` does not resolve")]
    Unresolved { scenario: String, index: usize, id: String },
    #[error("override {index} of scenario `{scenario}`: {reason}")]
    Invalid { scenario: String, index: usize, reason: String },
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("entry `{entry}` was computed with method `{found}`, expected `{expected}`")]
    MethodMismatch { entry: String, found: String, expected: String },
    #[error("comparison entry `{0}` has a non-positive density")]
    InvalidEntry(String),
    #[error("no cell named `{0}`")]
    UnknownCell(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl ScenarioError {
    pub fn code(&self) -> &'static str {
        match self {
            ScenarioError::Unresolved { .. } => "UNRESOLVED_OVERRIDE",
            ScenarioError::Invalid { .. } => "INVALID_OVERRIDE",
            ScenarioError::UnknownScenario(_) => "UNKNOWN_SCENARIO",
            ScenarioError::MethodMismatch { .. } => "METHOD_MISMATCH",
            ScenarioError::InvalidEntry(_) => "INVALID_ENTRY",
            ScenarioError::UnknownCell(_) => "UNKNOWN_CELL",
            ScenarioError::Model(e) => e.code(),
        }
    }
}

/// Applies `sc` to copies of `db` and `cells`; the inputs are not touched.
pub fn apply_scenario(
    db: &InventoryDatabase,
    cells: &[CellDesign],
    sc: &Scenario,
) -> Result<(InventoryDatabase, Vec<CellDesign>), ScenarioError> {
    let mut db = db.clone();
    let mut cells = cells.to_vec();
    for (index, ov) in sc.overrides.iter().enumerate() {
        let unresolved = |id: &str| ScenarioError::Unresolved {
            scenario: sc.id.clone(),
            index,
            id: id.to_string(),
        };
        let invalid = |reason: String| ScenarioError::Invalid {
            scenario: sc.id.clone(),
            index,
            reason,
        };
        match ov {
            Override::ReplaceProvider { flow, new_process } => {
                let old = db.flow(flow).ok_or_else(|| unresolved(flow))?;
                let target = db.process(new_process).ok_or_else(|| unresolved(new_process))?;
                let new_flow = target.reference_product.flow.clone();
                let new_dim = db.flow(&new_flow).ok_or_else(|| unresolved(&new_flow))?.unit.dimension();
                if old.unit.dimension() != new_dim {
                    return Err(invalid(format!(
                        "`{new_process}` supplies {} but `{flow}` is measured in {}",
                        new_dim.as_str(),
                        old.unit.dimension().as_str()
                    )));
                }
                for process in db.processes_mut() {
                    if process.id == *new_process {
                        continue;
                    }
                    for ex in process.exchanges.iter_mut() {
                        if ex.direction == Direction::Input && ex.flow == *flow {
                            ex.flow = new_flow.clone();
                        }
                    }
                }
                for cell in cells.iter_mut() {
                    for c in cell.components_mut() {
                        if c.material == *flow {
                            c.material = new_flow.clone();
                        }
                    }
                }
            }
            Override::ScaleExchange { process, flow, factor } => {
                if !(factor.is_finite() && *factor >= 0.0) {
                    return Err(invalid(format!("scale factor {factor} must be finite and >= 0")));
                }
                let p = db.process_mut(process).ok_or_else(|| unresolved(process))?;
                if p.reference_product.flow == *flow {
                    return Err(invalid(format!("`{flow}` is the reference product of `{process}`")));
                }
                let mut hit = false;
                for ex in p.exchanges.iter_mut().filter(|e| e.flow == *flow) {
                    ex.amount *= factor;
                    hit = true;
                }
                if !hit {
                    return Err(unresolved(flow));
                }
            }
            Override::SetComponentMass { cell, role, mass_mg } => {
                let slot = cells
                    .iter_mut()
                    .find(|c| c.name() == cell)
                    .ok_or_else(|| unresolved(cell))?;
                *slot = slot.with_component_mass(*role, *mass_mg).map_err(|e| match e {
                    crate::battery::BatteryError::MissingRole(r) => unresolved(r.as_str()),
                    other => invalid(other.to_string()),
                })?;
            }
        }
    }
    Ok((db, cells))
}

/// Per-Wh impacts of one cell under one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scenario: String,
    pub cell: String,
    pub impacts: ImpactResult,
}

/// Runs every scenario against every cell in parallel. Rows come back
/// ordered by scenario id, then by the order of `cells`; an empty scenario
/// id is the unmodified baseline.
pub fn run_sweep(
    db: &InventoryDatabase,
    cells: &[CellDesign],
    pack: &PackDesign,
    method: &ImpactMethod,
    scenarios: &[Scenario],
) -> Result<Vec<SweepRow>, ScenarioError> {
    let mut runs: Vec<&Scenario> = scenarios.iter().collect();
    runs.sort_by(|a, b| a.id.cmp(&b.id));

    let results: Vec<Result<Vec<SweepRow>, ScenarioError>> = runs
        .par_iter()
        .map(|sc| {
            let (db, cells) = apply_scenario(db, cells, sc)?;
            cells
                .iter()
                .map(|cell| {
                    Ok(SweepRow {
                        scenario: sc.id.clone(),
                        cell: cell.name().to_string(),
                        impacts: assess(&db, cell, pack, method)?.impacts,
                    })
                })
                .collect()
        })
        .collect();

    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(rows)
}

/// Pack energy density of cells at `cell_density` in the layout of `pack`.
/// A generic helper; it does not reproduce published adjusted densities.
pub fn repack_density(cell_density: f64, pack: &PackDesign) -> f64 {
    pack_energy_density(cell_density, pack)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonEntry {
    pub name: String,
    /// Wh/kg as published.
    pub original_density: f64,
    /// Wh/kg after normalization to a common housing and pack layout.
    pub adjusted_density: f64,
    pub per_wh_impacts: ImpactResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonCell {
    pub value: f64,
    /// Value over the best (lowest) value in the category; 1 for the best.
    /// Infinite when the best is zero and this value is not.
    pub ratio_to_best: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryRanking {
    /// The lowest-impact system; ties go to the first name in sort order.
    pub best: String,
    pub tie: bool,
}

/// Rows are systems sorted by name, columns the method's categories.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub method: String,
    pub categories: Vec<String>,
    pub systems: Vec<String>,
    pub cells: BTreeMap<(String, String), ComparisonCell>,
    pub rankings: BTreeMap<String, CategoryRanking>,
}

impl ComparisonTable {
    pub fn cell(&self, system: &str, category: &str) -> Option<&ComparisonCell> {
        self.cells.get(&(system.to_string(), category.to_string()))
    }
}

impl fmt::Display for ComparisonTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for category in &self.categories {
            writeln!(f, "{category}")?;
            for system in &self.systems {
                if let Some(c) = self.cell(system, category) {
                    writeln!(f, "  {system:<24} {:>14.6e} {:>10.4}", c.value, c.ratio_to_best)?;
                }
            }
        }
        Ok(())
    }
}

pub fn compare(entries: &[ComparisonEntry], method: &ImpactMethod) -> Result<ComparisonTable, ScenarioError> {
    for e in entries {
        if !(e.original_density > 0.0 && e.adjusted_density > 0.0) {
            return Err(ScenarioError::InvalidEntry(e.name.clone()));
        }
        let complete = method.category_ids().all(|c| e.per_wh_impacts.per_category.contains_key(c));
        if e.per_wh_impacts.method != method.id || !complete {
            return Err(ScenarioError::MethodMismatch {
                entry: e.name.clone(),
                found: e.per_wh_impacts.method.clone(),
                expected: method.id.clone(),
            });
        }
    }

    let mut sorted: Vec<&ComparisonEntry> = entries.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    let categories: Vec<String> = method.category_ids().map(str::to_string).collect();

    let mut table = ComparisonTable {
        method: method.id.clone(),
        categories: categories.clone(),
        systems: sorted.iter().map(|e| e.name.clone()).collect(),
        cells: BTreeMap::new(),
        rankings: BTreeMap::new(),
    };
    for category in &categories {
        let value = |e: &ComparisonEntry| e.per_wh_impacts.per_category[category];
        let Some(best) = sorted.iter().copied().min_by(|a, b| value(a).total_cmp(&value(b))) else {
            continue;
        };
        let best_value = value(best);
        let ties = sorted.iter().filter(|e| value(e) == best_value).count();
        table.rankings.insert(
            category.clone(),
            CategoryRanking {
                best: best.name.clone(),
                tie: ties > 1,
            },
        );
        for e in &sorted {
            let v = value(e);
            let ratio_to_best = if v == best_value {
                1.0
            } else if best_value == 0.0 {
                f64::INFINITY
            } else {
                v / best_value
            };
            table
                .cells
                .insert((e.name.clone(), category.clone()), ComparisonCell { value: v, ratio_to_best });
        }
    }
    Ok(table)
}
