//! Clock, event queue, random streams, scenario configuration and the run loop.

pub mod config;
pub mod rng;
pub mod scheduler;
pub mod sim;

pub use config::{ChargingMode, ConfigError, Protocol, ScenarioConfig};
pub use scheduler::{ScheduleError, Scheduler, SimEvent};
