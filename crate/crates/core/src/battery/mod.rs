//! Battery cell and pack mass/energy model.
//!
//! Cell component masses are held in milligrams (the scale at which pouch
//! cell compositions are usually reported) and cell energy in Wh. Pack
//! layouts are mass shares of cells, pack housing and BMS.

mod anode;
mod evolution;
mod lifetime;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::solver::DemandVector;

pub use anode::{
    capacity_match, collector_min, collector_thickness, optimized_anode_mass, size_anode, AnodeSizing,
    AnodeSizingInput,
};
pub use evolution::{derive_evolution, EvolutionSpec};
pub use lifetime::break_even_cycles;

/// Tolerance on pack shares summing to one.
pub const PACK_SHARE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BatteryError {
    #[error("cell `{0}` has zero total mass")]
    EmptyCell(String),
    #[error("target and preserved shares sum to {0}, leaving no room for fixed components")]
    SharesExceedOne(f64),
    #[error("role `{0}` is not present in the base cell")]
    MissingRole(Role),
    #[error("invalid evolution spec: {0}")]
    InvalidSpec(String),
    #[error("role `{role}` appears twice in cell `{cell}`")]
    DuplicateRole { cell: String, role: Role },
    #[error("component `{role}` of cell `{cell}` has invalid mass {mass}")]
    InvalidMass { cell: String, role: Role, mass: f64 },
    #[error("cell `{cell}` has non-positive energy {energy}")]
    NonpositiveEnergy { cell: String, energy: f64 },
    #[error("invalid pack `{pack}`: {reason}")]
    InvalidPack { pack: String, reason: String },
    #[error("energy return per cycle must be positive, got {0}")]
    NonpositiveReturn(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unknown component role `{0}`")]
    UnknownRole(String),
}

impl BatteryError {
    pub fn code(&self) -> &'static str {
        match self {
            BatteryError::EmptyCell(_) => "EMPTY_CELL",
            BatteryError::SharesExceedOne(_) => "SHARES_EXCEED_ONE",
            BatteryError::MissingRole(_) => "MISSING_ROLE",
            BatteryError::InvalidSpec(_) => "INVALID_SPEC",
            BatteryError::DuplicateRole { .. } => "DUPLICATE_ROLE",
            BatteryError::InvalidMass { .. } => "INVALID_MASS",
            BatteryError::NonpositiveEnergy { .. } => "NONPOSITIVE_ENERGY",
            BatteryError::InvalidPack { .. } => "INVALID_PACK",
            BatteryError::NonpositiveReturn(_) => "NONPOSITIVE_RETURN",
            BatteryError::InvalidInput(_) => "INVALID_INPUT",
            BatteryError::UnknownRole(_) => "UNKNOWN_ROLE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Anode,
    CathodeActive,
    Binder,
    ConductiveAdditive,
    CathodeCollector,
    Separator,
    Electrolyte,
    Housing,
}

impl Role {
    pub const ALL: [Role; 8] = [
        Role::Anode,
        Role::CathodeActive,
        Role::Binder,
        Role::ConductiveAdditive,
        Role::CathodeCollector,
        Role::Separator,
        Role::Electrolyte,
        Role::Housing,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Anode => "anode",
            Role::CathodeActive => "cathode_active",
            Role::Binder => "binder",
            Role::ConductiveAdditive => "conductive_additive",
            Role::CathodeCollector => "cathode_collector",
            Role::Separator => "separator",
            Role::Electrolyte => "electrolyte",
            Role::Housing => "housing",
        }
    }

    /// Component group used in hot-spot reports; the cathode's four
    /// ingredients report together.
    pub fn component_group(self) -> &'static str {
        match self {
            Role::Anode => "anode",
            Role::CathodeActive | Role::Binder | Role::ConductiveAdditive | Role::CathodeCollector => "cathode",
            Role::Separator => "separator",
            Role::Electrolyte => "electrolyte",
            Role::Housing => "housing",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = BatteryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Role::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| BatteryError::UnknownRole(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellComponent {
    pub role: Role,
    /// Product flow supplying the component material.
    pub material: String,
    pub mass_mg: f64,
}

impl CellComponent {
    pub fn new(role: Role, material: impl Into<String>, mass_mg: f64) -> Self {
        CellComponent {
            role,
            material: material.into(),
            mass_mg,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellDesign {
    name: String,
    components: Vec<CellComponent>,
    cell_energy_wh: f64,
}

impl CellDesign {
    pub fn new(
        name: impl Into<String>,
        components: Vec<CellComponent>,
        cell_energy_wh: f64,
    ) -> Result<Self, BatteryError> {
        let name = name.into();
        let mut seen = BTreeSet::new();
        for c in &components {
            if !seen.insert(c.role) {
                return Err(BatteryError::DuplicateRole { cell: name, role: c.role });
            }
            if !(c.mass_mg.is_finite() && c.mass_mg >= 0.0) {
                return Err(BatteryError::InvalidMass {
                    cell: name,
                    role: c.role,
                    mass: c.mass_mg,
                });
            }
        }
        if !(cell_energy_wh.is_finite() && cell_energy_wh > 0.0) {
            return Err(BatteryError::NonpositiveEnergy {
                cell: name,
                energy: cell_energy_wh,
            });
        }
        Ok(CellDesign {
            name,
            components,
            cell_energy_wh,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn components(&self) -> &[CellComponent] {
        &self.components
    }

    pub fn cell_energy_wh(&self) -> f64 {
        self.cell_energy_wh
    }

    pub fn component(&self, role: Role) -> Option<&CellComponent> {
        self.components.iter().find(|c| c.role == role)
    }

    pub fn mass_of(&self, role: Role) -> Option<f64> {
        self.component(role).map(|c| c.mass_mg)
    }

    pub fn roles(&self) -> BTreeSet<Role> {
        self.components.iter().map(|c| c.role).collect()
    }

    pub fn total_mass_mg(&self) -> f64 {
        self.components.iter().map(|c| c.mass_mg).sum()
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Copy with one component's mass replaced.
    pub fn with_component_mass(&self, role: Role, mass_mg: f64) -> Result<CellDesign, BatteryError> {
        if !(mass_mg.is_finite() && mass_mg >= 0.0) {
            return Err(BatteryError::InvalidMass {
                cell: self.name.clone(),
                role,
                mass: mass_mg,
            });
        }
        let mut next = self.clone();
        let component = next
            .components
            .iter_mut()
            .find(|c| c.role == role)
            .ok_or(BatteryError::MissingRole(role))?;
        component.mass_mg = mass_mg;
        Ok(next)
    }

    pub(crate) fn components_mut(&mut self) -> &mut [CellComponent] {
        &mut self.components
    }
}

/// Mass fraction of every component in the cell.
pub fn mass_shares(cell: &CellDesign) -> Result<BTreeMap<Role, f64>, BatteryError> {
    let total = cell.total_mass_mg();
    if !(total > 0.0) {
        return Err(BatteryError::EmptyCell(cell.name.clone()));
    }
    Ok(cell.components.iter().map(|c| (c.role, c.mass_mg / total)).collect())
}

/// Cell specific energy in Wh/kg.
pub fn cell_energy_density(cell: &CellDesign) -> Result<f64, BatteryError> {
    let total = cell.total_mass_mg();
    if !(total > 0.0) {
        return Err(BatteryError::EmptyCell(cell.name.clone()));
    }
    Ok(cell.cell_energy_wh / (total * 1e-6))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PackDesign {
    pub id: String,
    pub cell_share: f64,
    pub housing_share: f64,
    pub bms_share: f64,
    pub pack_mass_kg: f64,
    pub housing_material: String,
    pub bms_material: String,
    /// Product flow for cell manufacturing (assembly energy and the like),
    /// demanded per kg of cell.
    pub cell_manufacturing: Option<String>,
}

impl PackDesign {
    pub fn validate(&self) -> Result<(), BatteryError> {
        let fail = |reason: String| {
            Err(BatteryError::InvalidPack {
                pack: self.id.clone(),
                reason,
            })
        };
        for (label, share) in [
            ("cell", self.cell_share),
            ("housing", self.housing_share),
            ("bms", self.bms_share),
        ] {
            if !(share.is_finite() && share > 0.0) {
                return fail(format!("{label} share {share} must be > 0"));
            }
        }
        let sum = self.cell_share + self.housing_share + self.bms_share;
        if (sum - 1.0).abs() > PACK_SHARE_TOLERANCE {
            return fail(format!("shares sum to {sum}, expected 1"));
        }
        if !(self.pack_mass_kg.is_finite() && self.pack_mass_kg > 0.0) {
            return fail(format!("pack mass {} must be > 0", self.pack_mass_kg));
        }
        Ok(())
    }

    /// Pack mass split into cells / housing / BMS, in kg.
    pub fn masses_kg(&self) -> (f64, f64, f64) {
        (
            self.cell_share * self.pack_mass_kg,
            self.housing_share * self.pack_mass_kg,
            self.bms_share * self.pack_mass_kg,
        )
    }
}

/// Pack specific energy for cells of the given density; the cell mass share
/// of the pack is held fixed.
pub fn pack_energy_density(cell_density: f64, pack: &PackDesign) -> f64 {
    cell_density * pack.cell_share
}

/// One line of a per-Wh bill of materials.
#[derive(Debug, Clone, PartialEq)]
pub struct BomLine {
    /// Cell role, `pack_housing`, `bms` or `cell_manufacturing`.
    pub item: String,
    pub material: String,
    pub kg_per_wh: f64,
}

/// Per-Wh (pack level) material requirements, one line per cell component
/// plus pack housing, BMS and, when the pack names one, cell manufacturing.
pub fn per_wh_bom_lines(cell: &CellDesign, pack: &PackDesign) -> Result<Vec<BomLine>, BatteryError> {
    pack.validate()?;
    let shares = mass_shares(cell)?;
    let pack_density = pack_energy_density(cell_energy_density(cell)?, pack);
    if !(pack_density > 0.0) {
        return Err(BatteryError::InvalidPack {
            pack: pack.id.clone(),
            reason: "pack energy density is not positive".into(),
        });
    }

    let mut lines: Vec<BomLine> = cell
        .components
        .iter()
        .map(|c| BomLine {
            item: c.role.as_str().to_string(),
            material: c.material.clone(),
            kg_per_wh: shares[&c.role] * pack.cell_share / pack_density,
        })
        .collect();
    lines.push(BomLine {
        item: "pack_housing".into(),
        material: pack.housing_material.clone(),
        kg_per_wh: pack.housing_share / pack_density,
    });
    lines.push(BomLine {
        item: "bms".into(),
        material: pack.bms_material.clone(),
        kg_per_wh: pack.bms_share / pack_density,
    });
    if let Some(flow) = &pack.cell_manufacturing {
        lines.push(BomLine {
            item: "cell_manufacturing".into(),
            material: flow.clone(),
            kg_per_wh: pack.cell_share / pack_density,
        });
    }
    Ok(lines)
}

/// Per-Wh bill of materials as a demand vector (kg per Wh of pack capacity).
pub fn per_wh_bom(cell: &CellDesign, pack: &PackDesign) -> Result<DemandVector, BatteryError> {
    let lines = per_wh_bom_lines(cell, pack)?;
    DemandVector::new(lines.into_iter().map(|l| (l.material, l.kg_per_wh)))
        .map_err(|e| BatteryError::InvalidInput(e.to_string()))
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn baseline_shares() {
        let shares = mass_shares(&baseline()).unwrap();
        assert!((shares[&Role::Anode] - 427.0 / 6706.0).abs() < 1e-15);
        assert!((shares[&Role::Anode] * 100.0 - 6.4).abs() < 0.05);
        assert!((shares[&Role::Housing] * 100.0 - 44.7).abs() < 0.05);
        assert!((shares.values().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_component_cell() {
        let cell = CellDesign::new("x", vec![CellComponent::new(Role::Anode, "m", 5.0)], 1.0).unwrap();
        assert_eq!(mass_shares(&cell).unwrap()[&Role::Anode], 1.0);
    }

    #[test]
    fn empty_cell() {
        let cell = CellDesign::new("x", vec![CellComponent::new(Role::Anode, "m", 0.0)], 1.0).unwrap();
        assert_eq!(mass_shares(&cell).unwrap_err().code(), "EMPTY_CELL");
        assert_eq!(cell_energy_density(&cell).unwrap_err().code(), "EMPTY_CELL");
    }

    #[test]
    fn construction_checks() {
        let dup = vec![CellComponent::new(Role::Anode, "m", 1.0), CellComponent::new(Role::Anode, "n", 1.0)];
        assert_eq!(CellDesign::new("x", dup, 1.0).unwrap_err().code(), "DUPLICATE_ROLE");
        let neg = vec![CellComponent::new(Role::Anode, "m", -1.0)];
        assert_eq!(CellDesign::new("x", neg, 1.0).unwrap_err().code(), "INVALID_MASS");
        let ok = vec![CellComponent::new(Role::Anode, "m", 1.0)];
        assert_eq!(CellDesign::new("x", ok, 0.0).unwrap_err().code(), "NONPOSITIVE_ENERGY");
    }

    #[test]
    fn densities() {
        let cell = cell_energy_density(&baseline()).unwrap();
        assert!((cell - 57.0).abs() < 1e-9);
        assert!((pack_energy_density(cell, &pack()) - 45.6).abs() < 1e-9);
    }

    #[test]
    fn bom_per_wh() {
        let bom = per_wh_bom(&baseline(), &pack()).unwrap();
        // 0.055 kg/kg ÷ 45.6 Wh/kg
        assert!((bom.get("bms") * 1e3 - 1.206).abs() < 5e-4);
        // 6.37 % of 0.80 ÷ 45.6
        assert!((bom.get("mg_foil") * 1e3 - 1.117).abs() < 5e-4);
        assert!((bom.get("cell_manufacturing") - 0.80 / 45.6).abs() < 1e-12);
    }

    #[test]
    fn zero_mass_component_has_zero_demand() {
        let cell = baseline().with_component_mass(Role::Binder, 0.0).unwrap();
        assert_eq!(per_wh_bom(&cell, &pack()).unwrap().get("binder"), 0.0);
    }

    #[test]
    fn doubling_density_halves_masses() {
        let base = baseline();
        let doubled = CellDesign::new("x", base.components().to_vec(), 2.0 * base.cell_energy_wh()).unwrap();
        let a = per_wh_bom_lines(&base, &pack()).unwrap();
        let b = per_wh_bom_lines(&doubled, &pack()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.kg_per_wh, 2.0 * y.kg_per_wh, "{}", x.item);
        }
    }

    #[test]
    fn pack_validation() {
        let mut p = pack();
        p.bms_share = 0.06;
        assert_eq!(p.validate().unwrap_err().code(), "INVALID_PACK");
        let mut p = pack();
        p.housing_share = 0.0;
        p.cell_share = 0.945;
        assert!(p.validate().is_err());
    }

    #[test]
    fn role_round_trip() {
        for r in Role::ALL {
            assert_eq!(r.as_str().parse::<Role>().unwrap(), r);
        }
        assert_eq!("lid".parse::<Role>().unwrap_err().code(), "UNKNOWN_ROLE");
    }
}
