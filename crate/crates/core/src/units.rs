//! Units of measure.
//!
//! Every quantity in the engine is stored against one of six base units
//! (kg, Wh, m², m, m³, item). A [`Unit`] carries the factor that takes one
//! of its own units to that base, so conversion between two units of the
//! same dimension is a single multiply/divide.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dimension {
    Mass,
    Energy,
    Area,
    Length,
    Volume,
    Amount,
}

impl Dimension {
    pub fn base_symbol(self) -> &'static str {
        match self {
            Dimension::Mass => "kg",
            Dimension::Energy => "Wh",
            Dimension::Area => "m2",
            Dimension::Length => "m",
            Dimension::Volume => "m3",
            Dimension::Amount => "item",
        }
    }

    pub fn base(self) -> Unit {
        Unit::lookup(self.base_symbol()).expect("base units are registered")
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Mass => "mass",
            Dimension::Energy => "energy",
            Dimension::Area => "area",
            Dimension::Length => "length",
            Dimension::Volume => "volume",
            Dimension::Amount => "amount",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UnitError {
    #[error("unknown unit symbol `{0}`")]
    UnknownUnit(String),
    #[error("cannot convert {from} ({from_dim}) to {to} ({to_dim})")]
    DimensionMismatch {
        from: &'static str,
        from_dim: Dimension,
        to: &'static str,
        to_dim: Dimension,
    },
}

impl UnitError {
    pub fn code(&self) -> &'static str {
        match self {
            UnitError::UnknownUnit(_) => "UNKNOWN_UNIT",
            UnitError::DimensionMismatch { .. } => "DIMENSION_MISMATCH",
        }
    }
}

/// A unit of measure with its conversion factor to the dimension's base unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unit {
    symbol: &'static str,
    dimension: Dimension,
    to_base: f64,
}

const MJ_IN_WH: f64 = 1.0e6 / 3600.0;

// (accepted symbols, canonical symbol, dimension, to_base)
const REGISTRY: &[(&[&str], &str, Dimension, f64)] = &[
    (&["kg"], "kg", Dimension::Mass, 1.0),
    (&["g"], "g", Dimension::Mass, 1.0e-3),
    (&["mg"], "mg", Dimension::Mass, 1.0e-6),
    (&["µg", "μg", "ug"], "µg", Dimension::Mass, 1.0e-9),
    (&["t"], "t", Dimension::Mass, 1.0e3),
    (&["Wh"], "Wh", Dimension::Energy, 1.0),
    (&["mWh"], "mWh", Dimension::Energy, 1.0e-3),
    (&["kWh"], "kWh", Dimension::Energy, 1.0e3),
    (&["MWh"], "MWh", Dimension::Energy, 1.0e6),
    (&["J"], "J", Dimension::Energy, 1.0 / 3600.0),
    (&["kJ"], "kJ", Dimension::Energy, 1.0e3 / 3600.0),
    (&["MJ"], "MJ", Dimension::Energy, MJ_IN_WH),
    (&["GJ"], "GJ", Dimension::Energy, 1.0e9 / 3600.0),
    (&["m2", "m²"], "m2", Dimension::Area, 1.0),
    (&["cm2", "cm²"], "cm2", Dimension::Area, 1.0e-4),
    (&["mm2", "mm²"], "mm2", Dimension::Area, 1.0e-6),
    (&["m"], "m", Dimension::Length, 1.0),
    (&["km"], "km", Dimension::Length, 1.0e3),
    (&["cm"], "cm", Dimension::Length, 1.0e-2),
    (&["mm"], "mm", Dimension::Length, 1.0e-3),
    (&["µm", "μm", "um"], "µm", Dimension::Length, 1.0e-6),
    (&["nm"], "nm", Dimension::Length, 1.0e-9),
    (&["m3", "m³"], "m3", Dimension::Volume, 1.0),
    (&["l", "L"], "l", Dimension::Volume, 1.0e-3),
    (&["ml", "mL"], "ml", Dimension::Volume, 1.0e-6),
    (&["cm3", "cm³"], "cm3", Dimension::Volume, 1.0e-6),
    (&["item", "p"], "item", Dimension::Amount, 1.0),
];

impl Unit {
    /// Defines a unit outside the built-in registry.
    ///
    /// Returns `None` when `to_base` is not a positive finite number.
    pub fn custom(symbol: &'static str, dimension: Dimension, to_base: f64) -> Option<Unit> {
        (to_base.is_finite() && to_base > 0.0).then_some(Unit {
            symbol,
            dimension,
            to_base,
        })
    }

    /// Looks a unit up by symbol. Unicode and ASCII spellings (`µm`/`um`,
    /// `cm²`/`cm2`) resolve to the same canonical unit.
    pub fn lookup(symbol: &str) -> Result<Unit, UnitError> {
        REGISTRY
            .iter()
            .find(|(aliases, ..)| aliases.contains(&symbol))
            .map(|&(_, canonical, dimension, to_base)| Unit {
                symbol: canonical,
                dimension,
                to_base,
            })
            .ok_or_else(|| UnitError::UnknownUnit(symbol.to_string()))
    }

    pub fn symbol(&self) -> &'static str {
        self.symbol
    }

    pub fn dimension(&self) -> Dimension {
        self.dimension
    }

    pub fn to_base(&self) -> f64 {
        self.to_base
    }

    /// Expresses `x` of this unit in the dimension's base unit.
    pub fn base_amount(&self, x: f64) -> f64 {
        x * self.to_base
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol)
    }
}

/// Converts `x` expressed in `from` into `to`.
pub fn convert_amount(x: f64, from: &Unit, to: &Unit) -> Result<f64, UnitError> {
    if from.dimension != to.dimension {
        return Err(UnitError::DimensionMismatch {
            from: from.symbol,
            from_dim: from.dimension,
            to: to.symbol,
            to_dim: to.dimension,
        });
    }
    if from.to_base == to.to_base {
        return Ok(x);
    }
    Ok(x * from.to_base / to.to_base)
}

/// Convenience wrapper over [`convert_amount`] taking unit symbols.
pub fn convert_symbols(x: f64, from: &str, to: &str) -> Result<f64, UnitError> {
    convert_amount(x, &Unit::lookup(from)?, &Unit::lookup(to)?)
}
