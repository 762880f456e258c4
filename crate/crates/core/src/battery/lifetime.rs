use super::BatteryError;

/// Cycles needed before the energy delivered over the battery's life repays
/// the energy invested in making it.
///
/// Both arguments are per Wh of storage capacity: the cumulative energy
/// demand of production, and the energy credited per full cycle.
pub fn break_even_cycles(ced_per_wh: f64, energy_return_per_cycle: f64) -> Result<u64, BatteryError> {
    if !(energy_return_per_cycle.is_finite() && energy_return_per_cycle > 0.0) {
        return Err(BatteryError::NonpositiveReturn(energy_return_per_cycle));
    }
    if !(ced_per_wh.is_finite() && ced_per_wh >= 0.0) {
        return Err(BatteryError::InvalidInput(format!(
            "cumulative energy demand must be >= 0, got {ced_per_wh}"
        )));
    }
    Ok((ced_per_wh / energy_return_per_cycle).ceil() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mgs_threshold() {
        assert_eq!(break_even_cycles(1583.0, 4.059).unwrap(), 390);
    }

    #[test]
    fn trivial_cases() {
        assert_eq!(break_even_cycles(0.0, 4.0).unwrap(), 0);
        assert_eq!(break_even_cycles(100.0, 1.0).unwrap(), 100);
        assert_eq!(break_even_cycles(100.5, 1.0).unwrap(), 101);
    }

    #[test]
    fn nonpositive_return() {
        assert_eq!(break_even_cycles(1.0, 0.0).unwrap_err().code(), "NONPOSITIVE_RETURN");
        assert_eq!(break_even_cycles(1.0, -2.0).unwrap_err().code(), "NONPOSITIVE_RETURN");
        assert_eq!(break_even_cycles(-1.0, 2.0).unwrap_err().code(), "INVALID_INPUT");
    }
}
