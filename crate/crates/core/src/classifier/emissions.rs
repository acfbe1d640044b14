use rust_decimal::prelude::{FromPrimitive, ToPrimitive};
use rust_decimal::Decimal;

use crate::{Error, Result};

/// Grams of CO2 for a run: rate (g/s) times runtime (s).
///
/// The product is formed in decimal arithmetic from the shortest decimal
/// representation of each input, so `0.000032 * 89911` is `2.877152`.
pub fn estimate_emissions(co2_per_second: f64, runtime_seconds: f64) -> Result<f64> {
    for (name, v) in [("co2_per_second", co2_per_second), ("runtime", runtime_seconds)] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidInput(format!("{name} must be a non-negative finite number, got {v}")));
        }
    }
    let exact = || -> Option<f64> {
        let rate = Decimal::from_f64(co2_per_second)?;
        let time = Decimal::from_f64(runtime_seconds)?;
        rate.checked_mul(time)?.to_f64()
    };
    Ok(exact().unwrap_or(co2_per_second * runtime_seconds))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_rows() {
        assert_eq!(estimate_emissions(0.000032, 89911.0).unwrap(), 2.877152);
        assert_eq!(estimate_emissions(0.00351, 77116.0).unwrap(), 270.67716);
        assert_eq!(estimate_emissions(0.00351, 44581.0).unwrap(), 156.47931);
        assert_eq!(estimate_emissions(1.5, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn negative_rejected() {
        assert!(estimate_emissions(-1.0, 3.0).is_err());
        assert!(estimate_emissions(1.0, -3.0).is_err());
    }
}
