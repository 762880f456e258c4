//! Battery product systems: a cell in a pack, evaluated per Wh of pack capacity.

use thiserror::Error;

use crate::battery::{per_wh_bom, BatteryError, CellDesign, PackDesign};
use crate::contribution::{contributions, ContributionError, ContributionTable, Grouping};
use crate::inventory::InventoryDatabase;
use crate::lcia::{characterize, ImpactMethod, ImpactResult};
use crate::solver::{compute_inventory, DemandVector, InventoryVector, SolveError};

pub const GROUP_CELL_MANUFACTURE: &str = "cell manufacture";
pub const GROUP_PACK_HOUSING: &str = "pack housing";
pub const GROUP_BMS: &str = "BMS";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Battery(#[from] BatteryError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Contribution(#[from] ContributionError),
    #[error("no process supplies `{0}`")]
    NoProvider(String),
}

impl ModelError {
    pub fn code(&self) -> &'static str {
        match self {
            ModelError::Battery(e) => e.code(),
            ModelError::Solve(e) => e.code(),
            ModelError::Contribution(e) => e.code(),
            ModelError::NoProvider(_) => "MISSING_PROVIDER",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatteryAssessment {
    pub demand: DemandVector,
    pub inventory: InventoryVector,
    pub impacts: ImpactResult,
}

/// Inventory and impacts of 1 Wh of pack capacity.
pub fn assess(
    db: &InventoryDatabase,
    cell: &CellDesign,
    pack: &PackDesign,
    method: &ImpactMethod,
) -> Result<BatteryAssessment, ModelError> {
    let demand = per_wh_bom(cell, pack)?;
    let inventory = compute_inventory(db, &demand)?;
    let impacts = characterize(&inventory, method);
    Ok(BatteryAssessment {
        demand,
        inventory,
        impacts,
    })
}

/// Groups the providers of the pack's materials by component: anode,
/// cathode, separator, electrolyte, cell housing, cell manufacture, pack
/// housing and BMS. Components without mass are skipped.
pub fn component_grouping(db: &InventoryDatabase, cell: &CellDesign, pack: &PackDesign) -> Result<Grouping, ModelError> {
    let provider = |flow: &str| {
        db.provider_of(flow)
            .map(|p| p.id.clone())
            .ok_or_else(|| ModelError::NoProvider(flow.to_string()))
    };

    let mut groups: Vec<(String, Vec<String>)> = Vec::new();
    let mut push = |label: &str, process: String| match groups.iter_mut().find(|(l, _)| l == label) {
        Some((_, members)) => {
            if !members.contains(&process) {
                members.push(process)
            }
        }
        None => groups.push((label.to_string(), vec![process])),
    };

    for component in cell.components() {
        if component.mass_mg > 0.0 {
            push(component.role.component_group(), provider(&component.material)?);
        }
    }
    if let Some(flow) = &pack.cell_manufacturing {
        push(GROUP_CELL_MANUFACTURE, provider(flow)?);
    }
    push(GROUP_PACK_HOUSING, provider(&pack.housing_material)?);
    push(GROUP_BMS, provider(&pack.bms_material)?);
    Ok(Grouping::new(groups))
}

/// Hot-spot table of the pack by component group.
pub fn component_contributions(
    db: &InventoryDatabase,
    cell: &CellDesign,
    pack: &PackDesign,
    method: &ImpactMethod,
) -> Result<ContributionTable, ModelError> {
    let demand = per_wh_bom(cell, pack)?;
    let grouping = component_grouping(db, cell, pack)?;
    Ok(contributions(db, &demand, method, &grouping)?)
}
