//! Free-space transmission range.

use super::PhyError;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn dbi_to_linear(gain_dbi: f64) -> f64 {
    10f64.powf(gain_dbi / 10.0)
}

pub fn wavelength(carrier_freq_hz: f64) -> f64 {
    SPEED_OF_LIGHT / carrier_freq_hz
}

/// Largest distance at which the received power still meets `rx_sensitivity`:
/// `(lambda / 4 pi) * sqrt(P_t G_t G_r (1 - |Gamma|^2) / P_r)`.
pub fn friis_max_range(
    tx_power: f64,
    rx_sensitivity: f64,
    gain_tx_dbi: f64,
    gain_rx_dbi: f64,
    reflection_sq: f64,
    carrier_freq_hz: f64,
) -> Result<f64, PhyError> {
    if rx_sensitivity <= 0.0 {
        return Err(PhyError::NonPositive("rx_sensitivity"));
    }
    if tx_power <= 0.0 {
        return Err(PhyError::NonPositive("tx_power"));
    }
    if carrier_freq_hz <= 0.0 {
        return Err(PhyError::NonPositive("carrier_freq"));
    }
    if !(0.0..1.0).contains(&reflection_sq) {
        return Err(PhyError::Reflection(reflection_sq));
    }
    let budget = tx_power * dbi_to_linear(gain_tx_dbi) * dbi_to_linear(gain_rx_dbi) * (1.0 - reflection_sq);
    Ok(wavelength(carrier_freq_hz) / (4.0 * std::f64::consts::PI) * (budget / rx_sensitivity).sqrt())
}

/// Receiver sensitivity at which [`friis_max_range`] returns `range`.
pub fn rx_sensitivity_for_range(
    range: f64,
    tx_power: f64,
    gain_tx_dbi: f64,
    gain_rx_dbi: f64,
    reflection_sq: f64,
    carrier_freq_hz: f64,
) -> f64 {
    let ratio = wavelength(carrier_freq_hz) / (4.0 * std::f64::consts::PI * range);
    tx_power * dbi_to_linear(gain_tx_dbi) * dbi_to_linear(gain_rx_dbi) * (1.0 - reflection_sq) * ratio * ratio
}
