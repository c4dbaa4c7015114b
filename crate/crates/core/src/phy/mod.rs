//! Radio energy, link budget, connectivity and channel access.

pub mod energy;
pub mod friis;
pub mod mac;

use thiserror::Error;

use crate::geom::Vec2;

pub use energy::{charge_packet, mean_power_index, tx_energy_per_bit, EnergyLedger};
pub use friis::friis_max_range;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhyError {
    #[error("distance must be non-negative, got {0}")]
    NegativeDistance(f64),
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("reflection coefficient must lie in [0, 1), got {0}")]
    Reflection(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkModel {
    pub max_range: f64,
    pub path_loss_alpha: f64,
}

impl LinkModel {
    pub fn new(max_range: f64, path_loss_alpha: f64) -> Result<Self, PhyError> {
        if !(max_range > 0.0) {
            return Err(PhyError::NonPositive("max_range"));
        }
        Ok(LinkModel { max_range, path_loss_alpha })
    }
}

/// Closed-disc connectivity: `true` iff the distance is at most `max_range`.
pub fn in_range(a: Vec2, b: Vec2, link: &LinkModel) -> bool {
    a.distance(b) <= link.max_range
}
