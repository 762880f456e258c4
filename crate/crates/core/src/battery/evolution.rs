use std::collections::{BTreeMap, BTreeSet};

use super::{mass_shares, BatteryError, CellDesign, Role};

/// How a derived cell layout relates to its base.
///
/// Fixed roles keep their absolute mass. Targeted roles are resized to a
/// given mass fraction of the new cell, and preserved roles keep the mass
/// fraction they had in the base cell. The new total follows from the fixed
/// mass and the remaining share: `T = F / (1 − σ)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvolutionSpec {
    pub fixed_roles: BTreeSet<Role>,
    pub target_shares: BTreeMap<Role, f64>,
    pub preserved_share_roles: BTreeSet<Role>,
}

impl EvolutionSpec {
    /// Every role fixed: derivation returns the base layout.
    pub fn identity(base: &CellDesign) -> Self {
        EvolutionSpec {
            fixed_roles: base.roles(),
            ..Default::default()
        }
    }

    fn check_against(&self, base: &CellDesign) -> Result<(), BatteryError> {
        let targeted: BTreeSet<Role> = self.target_shares.keys().copied().collect();
        let overlaps = [
            (&self.fixed_roles, &targeted, "fixed", "targeted"),
            (&self.fixed_roles, &self.preserved_share_roles, "fixed", "preserved"),
            (&targeted, &self.preserved_share_roles, "targeted", "preserved"),
        ];
        for (a, b, la, lb) in overlaps {
            if let Some(role) = a.intersection(b).next() {
                return Err(BatteryError::InvalidSpec(format!("role `{role}` is both {la} and {lb}")));
            }
        }

        let present = base.roles();
        for role in self
            .fixed_roles
            .iter()
            .chain(targeted.iter())
            .chain(self.preserved_share_roles.iter())
        {
            if !present.contains(role) {
                return Err(BatteryError::MissingRole(*role));
            }
        }
        for role in &present {
            if !self.fixed_roles.contains(role)
                && !targeted.contains(role)
                && !self.preserved_share_roles.contains(role)
            {
                return Err(BatteryError::InvalidSpec(format!(
                    "role `{role}` of `{}` is neither fixed, targeted nor preserved",
                    base.name()
                )));
            }
        }
        for (role, share) in &self.target_shares {
            if !(share.is_finite() && *share >= 0.0) {
                return Err(BatteryError::InvalidSpec(format!("target share {share} for `{role}`")));
            }
        }
        Ok(())
    }
}

/// Derives an optimized cell layout from `base`. The cell energy is carried
/// over unchanged; the result keeps the base's name.
pub fn derive_evolution(base: &CellDesign, spec: &EvolutionSpec) -> Result<CellDesign, BatteryError> {
    spec.check_against(base)?;
    let base_shares = mass_shares(base)?;

    let fixed_mass: f64 = base
        .components()
        .iter()
        .filter(|c| spec.fixed_roles.contains(&c.role))
        .map(|c| c.mass_mg)
        .sum();
    let sigma: f64 = spec.target_shares.values().sum::<f64>()
        + spec
            .preserved_share_roles
            .iter()
            .map(|r| base_shares[r])
            .sum::<f64>();
    if !(sigma < 1.0) {
        return Err(BatteryError::SharesExceedOne(sigma));
    }
    if !(fixed_mass > 0.0) {
        return Err(BatteryError::EmptyCell(base.name().to_string()));
    }
    let total = fixed_mass / (1.0 - sigma);

    let mut derived = base.clone();
    for component in derived.components_mut() {
        if let Some(share) = spec.target_shares.get(&component.role) {
            component.mass_mg = share * total;
        } else if spec.preserved_share_roles.contains(&component.role) {
            component.mass_mg = base_shares[&component.role] * total;
        }
    }
    Ok(derived)
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::baseline;
    use super::super::{cell_energy_density, mass_shares};
    use super::*;
    use proptest::prelude::*;

    fn evo1() -> EvolutionSpec {
        EvolutionSpec {
            fixed_roles: Role::ALL.into_iter().filter(|r| *r != Role::Housing).collect(),
            target_shares: [(Role::Housing, 0.03)].into(),
            preserved_share_roles: BTreeSet::new(),
        }
    }

    fn evo2() -> EvolutionSpec {
        EvolutionSpec {
            fixed_roles: [
                Role::Anode,
                Role::CathodeActive,
                Role::Binder,
                Role::ConductiveAdditive,
                Role::CathodeCollector,
            ]
            .into(),
            target_shares: [(Role::Separator, 0.02), (Role::Housing, 0.03)].into(),
            preserved_share_roles: [Role::Electrolyte].into(),
        }
    }

    #[test]
    fn first_evolution_closed_form() {
        let cell = derive_evolution(&baseline(), &evo1()).unwrap();
        // T = 3706 / 0.97
        let total = 3706.0 / 0.97;
        assert!((cell.total_mass_mg() - total).abs() < 1e-9);
        assert!((cell.mass_of(Role::Housing).unwrap() - 0.03 * total).abs() < 1e-9);
        assert_eq!(cell.mass_of(Role::Electrolyte), Some(2060.0));
        assert_eq!(cell.cell_energy_wh(), baseline().cell_energy_wh());
        assert!((cell_energy_density(&cell).unwrap() - 100.0).abs() < 0.1);
    }

    #[test]
    fn second_evolution_closed_form() {
        let cell = derive_evolution(&baseline(), &evo2()).unwrap();
        let electrolyte_share = 2060.0 / 6706.0;
        let total = 946.0 / (1.0 - 0.05 - electrolyte_share);
        assert!((cell.total_mass_mg() - total).abs() < 1e-9);
        assert!((cell.mass_of(Role::Separator).unwrap() - 29.4).abs() < 1.0);
        assert!((cell.mass_of(Role::Housing).unwrap() - 44.1).abs() < 1.0);
        assert!((cell.mass_of(Role::Electrolyte).unwrap() - 451.7).abs() < 1.0);
        assert_eq!(cell.mass_of(Role::Anode), Some(427.0));
    }

    #[test]
    fn identity_spec_returns_base() {
        let base = baseline();
        assert_eq!(derive_evolution(&base, &EvolutionSpec::identity(&base)).unwrap(), base);
    }

    #[test]
    fn spec_errors() {
        let base = baseline();
        let mut s = evo1();
        s.target_shares.insert(Role::Housing, 1.0);
        assert_eq!(derive_evolution(&base, &s).unwrap_err().code(), "SHARES_EXCEED_ONE");

        let mut s = evo2();
        s.preserved_share_roles.insert(Role::Anode);
        assert_eq!(derive_evolution(&base, &s).unwrap_err().code(), "INVALID_SPEC");

        let mut s = evo1();
        s.fixed_roles.remove(&Role::Separator);
        assert_eq!(derive_evolution(&base, &s).unwrap_err().code(), "INVALID_SPEC");

        let small = CellDesign::new("s", vec![super::super::CellComponent::new(Role::Anode, "m", 1.0)], 1.0).unwrap();
        assert_eq!(derive_evolution(&small, &evo1()).unwrap_err().code(), "MISSING_ROLE");
    }

    proptest! {
        #[test]
        fn derived_cell_hits_its_targets(
            housing in 0.0f64..0.4,
            separator in 0.0f64..0.1,
        ) {
            let mut spec = evo2();
            spec.target_shares = [(Role::Separator, separator), (Role::Housing, housing)].into();
            let base = baseline();
            let cell = derive_evolution(&base, &spec).unwrap();
            let shares = mass_shares(&cell).unwrap();
            prop_assert!((shares[&Role::Housing] - housing).abs() < 1e-9);
            prop_assert!((shares[&Role::Separator] - separator).abs() < 1e-9);
            let base_shares = mass_shares(&base).unwrap();
            prop_assert!((shares[&Role::Electrolyte] - base_shares[&Role::Electrolyte]).abs() < 1e-9);
        }

        #[test]
        fn lower_targets_never_add_mass(
            housing in 0.0f64..0.447,
        ) {
            let mut spec = evo1();
            spec.target_shares = [(Role::Housing, housing)].into();
            let base = baseline();
            let cell = derive_evolution(&base, &spec).unwrap();
            for (a, b) in cell.components().iter().zip(base.components()) {
                prop_assert!(a.mass_mg <= b.mass_mg * (1.0 + 1e-12));
            }
        }
    }
}
