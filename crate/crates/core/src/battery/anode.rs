//! Electrochemical sizing of a metal-foil anode that doubles as its own
//! current collector.
//!
//! The foil must (a) hold enough active metal to match the cathode's
//! capacity and (b) keep a residual thickness in the fully discharged state
//! that conducts as well as the cathode's aluminium collector. The residual
//! thickness scales the reference collector by the inverse conductivity ratio.

use crate::units::convert_symbols;

use super::BatteryError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnodeSizingInput {
    pub electrode_area_cm2: f64,
    pub cathode_active_mass_mg: f64,
    /// Practical specific capacity of the cathode active material, Ah/g.
    pub cathode_specific_capacity: f64,
    /// Theoretical specific capacity of the anode metal, Ah/g.
    pub anode_specific_capacity: f64,
    pub reference_collector_thickness_um: f64,
    /// Conductivity of the anode metal relative to the reference collector.
    pub conductivity_ratio: f64,
    pub anode_density_g_cm3: f64,
}

impl AnodeSizingInput {
    /// Mg–S pouch prototype: 74 cm² electrodes, 421 mg sulfur at 1.67 Ah/g,
    /// Mg at 2.205 Ah/g and 1.738 g/cm³, a 4.4 µm Al collector as reference
    /// and Mg conducting about half as well as Al.
    pub fn mgs_prototype() -> Self {
        AnodeSizingInput {
            electrode_area_cm2: 74.0,
            cathode_active_mass_mg: 421.0,
            cathode_specific_capacity: 1.67,
            anode_specific_capacity: 2.205,
            reference_collector_thickness_um: 4.4,
            conductivity_ratio: 0.5,
            anode_density_g_cm3: 1.738,
        }
    }

    pub fn validate(&self) -> Result<(), BatteryError> {
        let positive = [
            ("electrode_area_cm2", self.electrode_area_cm2),
            ("cathode_specific_capacity", self.cathode_specific_capacity),
            ("anode_specific_capacity", self.anode_specific_capacity),
            ("reference_collector_thickness_um", self.reference_collector_thickness_um),
            ("conductivity_ratio", self.conductivity_ratio),
            ("anode_density_g_cm3", self.anode_density_g_cm3),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(BatteryError::InvalidInput(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.conductivity_ratio > 1.0 {
            return Err(BatteryError::InvalidInput(format!(
                "conductivity_ratio must be in (0, 1], got {}",
                self.conductivity_ratio
            )));
        }
        if !(self.cathode_active_mass_mg.is_finite() && self.cathode_active_mass_mg >= 0.0) {
            return Err(BatteryError::InvalidInput(format!(
                "cathode_active_mass_mg must be >= 0, got {}",
                self.cathode_active_mass_mg
            )));
        }
        Ok(())
    }
}

fn foil_mass_mg(thickness_um: f64, area_cm2: f64, density_g_cm3: f64) -> f64 {
    let thickness_cm = convert_symbols(thickness_um, "µm", "cm").expect("length units");
    let grams = thickness_cm * area_cm2 * density_g_cm3;
    convert_symbols(grams, "g", "mg").expect("mass units")
}

/// Thickness in µm of a foil of the given mass, area and density.
pub fn collector_thickness(mass_mg: f64, area_cm2: f64, density_g_cm3: f64) -> f64 {
    let grams = convert_symbols(mass_mg, "mg", "g").expect("mass units");
    let thickness_cm = grams / (density_g_cm3 * area_cm2);
    convert_symbols(thickness_cm, "cm", "µm").expect("length units")
}

/// Minimum residual foil thickness (µm) and the metal mass it takes (mg).
pub fn collector_min(input: &AnodeSizingInput) -> Result<(f64, f64), BatteryError> {
    input.validate()?;
    let thickness = input.reference_collector_thickness_um / input.conductivity_ratio;
    let mass = foil_mass_mg(thickness, input.electrode_area_cm2, input.anode_density_g_cm3);
    Ok((thickness, mass))
}

/// Anode active mass (mg) storing the same charge as the cathode.
pub fn capacity_match(cathode_mass_mg: f64, cathode_capacity: f64, anode_capacity: f64) -> Result<f64, BatteryError> {
    if !(cathode_capacity.is_finite() && cathode_capacity > 0.0 && anode_capacity.is_finite() && anode_capacity > 0.0)
    {
        return Err(BatteryError::InvalidInput(format!(
            "specific capacities must be > 0, got {cathode_capacity} and {anode_capacity}"
        )));
    }
    Ok(cathode_mass_mg * cathode_capacity / anode_capacity)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnodeSizing {
    pub collector_thickness_um: f64,
    pub collector_mass_mg: f64,
    pub active_mass_mg: f64,
    pub total_mass_mg: f64,
}

impl AnodeSizing {
    pub fn exceeds(&self, prototype_mass_mg: f64) -> bool {
        self.total_mass_mg >= prototype_mass_mg
    }
}

pub fn size_anode(input: &AnodeSizingInput) -> Result<AnodeSizing, BatteryError> {
    let (collector_thickness_um, collector_mass_mg) = collector_min(input)?;
    let active_mass_mg = capacity_match(
        input.cathode_active_mass_mg,
        input.cathode_specific_capacity,
        input.anode_specific_capacity,
    )?;
    Ok(AnodeSizing {
        collector_thickness_um,
        collector_mass_mg,
        active_mass_mg,
        total_mass_mg: active_mass_mg + collector_mass_mg,
    })
}

/// Capacity-matched active mass plus the residual collector mass, in mg.
pub fn optimized_anode_mass(input: &AnodeSizingInput) -> Result<f64, BatteryError> {
    size_anode(input).map(|s| s.total_mass_mg)
}
