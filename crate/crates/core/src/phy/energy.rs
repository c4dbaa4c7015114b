//! First-order radio energy model and the per-node battery ledger.

use serde::{Deserialize, Serialize};

use super::PhyError;
use crate::engine::config::{ChargingMode, ScenarioConfig};

/// Energy to push one bit over `distance` metres: `e_elec + e_amp * d^alpha`.
pub fn tx_energy_per_bit(distance: f64, e_elec: f64, e_amp: f64, alpha: f64) -> Result<f64, PhyError> {
    if !(distance >= 0.0) {
        return Err(PhyError::NegativeDistance(distance));
    }
    Ok(e_elec + e_amp * distance.powf(alpha))
}

/// Normalised mean power consumption index of a node.
///
/// `e_s` and `e_g` are powers (W), `e_r` and `e_ij` energies per bit (J/bit),
/// `r_i` and `r_j` traffic rates (bit/s). The bracket is therefore in watts
/// and the result in 1/s. It ranks nodes; it is never debited from a battery.
pub fn mean_power_index(
    e_s: f64,
    e_g: f64,
    e_r: f64,
    e_ij: f64,
    r_i: f64,
    r_j: f64,
    initial_energy: f64,
) -> Result<f64, PhyError> {
    if initial_energy <= 0.0 {
        return Err(PhyError::NonPositive("initial_energy"));
    }
    Ok((e_s + e_g * r_i + e_r * r_j + r_i * e_ij) / initial_energy)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Category {
    Tx,
    Rx,
    Sense,
    Idle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChargeOutcome {
    Charged,
    /// This charge exhausted the battery.
    Died,
    /// The node was already dead; nothing was debited.
    AlreadyDead,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub initial: f64,
    pub consumed_tx: f64,
    pub consumed_rx: f64,
    pub consumed_sense: f64,
    pub consumed_idle: f64,
    dead: bool,
}

impl EnergyLedger {
    pub fn new(initial: f64) -> Self {
        EnergyLedger {
            initial,
            consumed_tx: 0.0,
            consumed_rx: 0.0,
            consumed_sense: 0.0,
            consumed_idle: 0.0,
            dead: initial <= 0.0,
        }
    }

    pub fn consumed(&self) -> f64 {
        self.consumed_tx + self.consumed_rx + self.consumed_sense + self.consumed_idle
    }

    pub fn surplus(&self) -> f64 {
        if self.dead {
            0.0
        } else {
            (self.initial - self.consumed()).max(0.0)
        }
    }

    pub fn is_alive(&self) -> bool {
        !self.dead
    }

    /// Debits `joules` from `category`, clamping at empty.
    pub fn charge(&mut self, category: Category, joules: f64) -> ChargeOutcome {
        if self.dead {
            return ChargeOutcome::AlreadyDead;
        }
        if joules <= 0.0 {
            return ChargeOutcome::Charged;
        }
        let available = self.surplus();
        let (amount, died) = if joules >= available { (available, true) } else { (joules, false) };
        let slot = match category {
            Category::Tx => &mut self.consumed_tx,
            Category::Rx => &mut self.consumed_rx,
            Category::Sense => &mut self.consumed_sense,
            Category::Idle => &mut self.consumed_idle,
        };
        *slot += amount;
        if died {
            self.dead = true;
            ChargeOutcome::Died
        } else {
            ChargeOutcome::Charged
        }
    }

    /// Relative conservation error `|initial - surplus - consumed| / initial`.
    pub fn conservation_error(&self) -> f64 {
        (self.initial - self.surplus() - self.consumed()).abs() / self.initial
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Direction {
    Tx { distance: f64 },
    Rx,
}

/// Radio constants needed to price a frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams {
    pub e_elec: f64,
    pub e_amp: f64,
    pub path_loss_alpha: f64,
    pub mode: ChargingMode,
    pub tx_power_watts: f64,
    pub rx_power_watts: f64,
    pub data_rate_bps: f64,
}

impl RadioParams {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        RadioParams {
            e_elec: cfg.e_elec,
            e_amp: cfg.e_amp,
            path_loss_alpha: cfg.path_loss_alpha,
            mode: cfg.charging_mode,
            tx_power_watts: cfg.tx_power_watts,
            rx_power_watts: cfg.rx_power_watts,
            data_rate_bps: cfg.data_rate_bps,
        }
    }

    /// Energy in joules for moving `bits` in `direction`.
    pub fn frame_energy(&self, direction: Direction, bits: u64) -> Result<f64, PhyError> {
        let bits_f = bits as f64;
        match (self.mode, direction) {
            (ChargingMode::PerBit, Direction::Tx { distance }) => {
                Ok(bits_f * tx_energy_per_bit(distance, self.e_elec, self.e_amp, self.path_loss_alpha)?)
            }
            (ChargingMode::PerBit, Direction::Rx) => Ok(bits_f * self.e_elec),
            (ChargingMode::Duration, Direction::Tx { distance }) => {
                if distance < 0.0 {
                    return Err(PhyError::NegativeDistance(distance));
                }
                Ok(self.tx_power_watts * bits_f / self.data_rate_bps)
            }
            (ChargingMode::Duration, Direction::Rx) => Ok(self.rx_power_watts * bits_f / self.data_rate_bps),
        }
    }
}

/// Debits a frame transmission or reception from `ledger`.
pub fn charge_packet(
    ledger: &mut EnergyLedger,
    direction: Direction,
    bits: u64,
    radio: &RadioParams,
) -> Result<ChargeOutcome, PhyError> {
    let joules = radio.frame_energy(direction, bits)?;
    let category = match direction {
        Direction::Tx { .. } => Category::Tx,
        Direction::Rx => Category::Rx,
    };
    Ok(ledger.charge(category, joules))
}
