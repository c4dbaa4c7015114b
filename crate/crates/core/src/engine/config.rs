//! Scenario configuration and its flat `key = value` file grammar.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! # comment until end of line
//! key = value        # trailing comments are allowed too
//! ```
//!
//! Keys are the snake_case field names of [`ScenarioConfig`]. Every key is
//! optional; missing keys take their default. Unknown or repeated keys are
//! errors. Numbers use Rust float syntax (`5`, `0.3`, `50e-9`), `protocol`
//! takes `e2rp` or `aodv`, `charging_mode` takes `per_bit` or `duration`.
//!
//! Three defaults are derived from other keys when absent: `rx_sensitivity`
//! (inverse Friis at `radio_range`), `r_threshold` (precinct cell diagonal)
//! and `m_threshold` (mean of `speed_min` and `speed_max`).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::phy::friis;

/// Routing protocol under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    E2rp,
    Aodv,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::E2rp => "e2rp",
            Protocol::Aodv => "aodv",
        })
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "e2rp" => Ok(Protocol::E2rp),
            "aodv" => Ok(Protocol::Aodv),
            other => Err(format!("unknown protocol `{other}` (expected e2rp or aodv)")),
        }
    }
}

/// How radio activity is charged against the battery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChargingMode {
    /// First-order radio model: `bits * (e_elec + e_amp * d^alpha)` on transmit,
    /// `bits * e_elec` on receive.
    PerBit,
    /// Constant radio power for the frame airtime (`tx_power_watts`,
    /// `rx_power_watts`).
    Duration,
}

impl fmt::Display for ChargingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChargingMode::PerBit => "per_bit",
            ChargingMode::Duration => "duration",
        })
    }
}

impl FromStr for ChargingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per_bit" => Ok(ChargingMode::PerBit),
            "duration" => Ok(ChargingMode::Duration),
            other => Err(format!("unknown charging mode `{other}` (expected per_bit or duration)")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: key `{key}`: {message}")]
    BadValue { line: usize, key: String, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice (first on line {first})")]
    DuplicateKey { line: usize, key: String, first: usize },
    #[error("invalid `{key}`: {message}")]
    Invalid { key: &'static str, message: String },
}

impl ConfigError {
    fn invalid(key: &'static str, message: impl Into<String>) -> Self {
        ConfigError::Invalid { key, message: message.into() }
    }
}

/// Every tunable of a run. Units are SI throughout (m, s, J, W, Hz).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub node_count: usize,
    pub field_side: f64,
    pub sim_duration: f64,
    pub pause_time: f64,
    pub speed_min: f64,
    pub speed_max: f64,
    pub initial_energy: f64,
    pub e_elec: f64,
    pub e_amp: f64,
    pub path_loss_alpha: f64,
    pub tx_power_watts: f64,
    pub rx_power_watts: f64,
    pub e_g: f64,
    pub e_s: f64,
    pub radio_range: f64,
    pub antenna_gain_dbi: f64,
    pub reflection_coeff_sq: f64,
    pub carrier_freq_hz: f64,
    pub rx_sensitivity: f64,
    pub data_rate_bps: f64,
    pub control_packet_bytes: u32,
    pub data_packet_bytes: u32,
    pub protocol: Protocol,
    pub rng_seed: u64,
    pub charging_mode: ChargingMode,

    pub mobility_tick: f64,
    pub metrics_tick: f64,
    pub hello_period: f64,
    pub election_check_period: f64,
    pub drain_sample_period: f64,
    pub drain_ewma_alpha: f64,

    pub e_threshold: f64,
    pub r_threshold: f64,
    pub m_threshold: f64,
    pub p_threshold: f64,
    pub precinct_grid_dim: usize,

    pub aggregation_ratio: f64,
    pub aggregation_window: f64,

    pub mac_slot: f64,
    pub mac_max_retries: u32,
    pub mac_backoff_slots: u32,
    pub mac_queue_limit: usize,

    pub max_paths: usize,
    pub route_lifetime: f64,
    pub flood_state_ttl: f64,
    pub discovery_timeout: f64,
    pub rreq_retries: u32,
    pub buffer_ttl: f64,

    pub traffic_period: f64,
    pub events_per_period: u32,
    pub sink_node: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let mut cfg = ScenarioConfig {
            node_count: 100,
            field_side: 25.0,
            sim_duration: 500.0,
            pause_time: 30.0,
            speed_min: 5.0,
            speed_max: 20.0,
            initial_energy: 5.0,
            e_elec: 50e-9,
            e_amp: 100e-12,
            path_loss_alpha: 2.0,
            tx_power_watts: 0.66,
            rx_power_watts: 0.395,
            e_g: 50e-3,
            e_s: 28.36e-3,
            radio_range: 250.0,
            antenna_gain_dbi: 1.2,
            reflection_coeff_sq: 0.3,
            carrier_freq_hz: 900e6,
            rx_sensitivity: 0.0,
            data_rate_bps: 1000.0,
            control_packet_bytes: 36,
            data_packet_bytes: 64,
            protocol: Protocol::E2rp,
            rng_seed: 1,
            charging_mode: ChargingMode::PerBit,
            mobility_tick: 1.0,
            metrics_tick: 1.0,
            hello_period: 1.0,
            election_check_period: 5.0,
            drain_sample_period: 5.0,
            drain_ewma_alpha: 0.3,
            e_threshold: 1.0,
            r_threshold: 0.0,
            m_threshold: 0.0,
            p_threshold: 0.5,
            precinct_grid_dim: 5,
            aggregation_ratio: 0.25,
            aggregation_window: 1.0,
            mac_slot: 1e-3,
            mac_max_retries: 3,
            mac_backoff_slots: 8,
            mac_queue_limit: 64,
            max_paths: 3,
            route_lifetime: 10.0,
            flood_state_ttl: 2.0,
            discovery_timeout: 2.0,
            rreq_retries: 2,
            buffer_ttl: 5.0,
            traffic_period: 10.0,
            events_per_period: 5,
            sink_node: 0,
        };
        cfg.rx_sensitivity = cfg.derived_rx_sensitivity();
        cfg.r_threshold = cfg.derived_r_threshold();
        cfg.m_threshold = cfg.derived_m_threshold();
        cfg
    }
}

impl ScenarioConfig {
    pub fn derived_rx_sensitivity(&self) -> f64 {
        friis::rx_sensitivity_for_range(
            self.radio_range,
            self.tx_power_watts,
            self.antenna_gain_dbi,
            self.antenna_gain_dbi,
            self.reflection_coeff_sq,
            self.carrier_freq_hz,
        )
    }

    pub fn derived_r_threshold(&self) -> f64 {
        self.cell_side() * std::f64::consts::SQRT_2
    }

    pub fn derived_m_threshold(&self) -> f64 {
        0.5 * (self.speed_min + self.speed_max)
    }

    /// Side length of one precinct cell.
    pub fn cell_side(&self) -> f64 {
        self.field_side / self.precinct_grid_dim.max(1) as f64
    }

    pub fn control_bits(&self) -> u64 {
        u64::from(self.control_packet_bytes) * 8
    }

    pub fn data_bits(&self) -> u64 {
        u64::from(self.data_packet_bytes) * 8
    }

    pub fn airtime(&self, bits: u64) -> f64 {
        bits as f64 / self.data_rate_bps
    }

    /// Parses a config document, applies defaults and validates the result.
    pub fn parse(source: &str) -> Result<Self, ConfigError> {
        let mut entries = Entries::collect(source)?;
        let mut cfg = ScenarioConfig::default();

        entries.take(&mut cfg.node_count, "node_count")?;
        entries.take(&mut cfg.field_side, "field_side")?;
        entries.take(&mut cfg.sim_duration, "sim_duration")?;
        entries.take(&mut cfg.pause_time, "pause_time")?;
        entries.take(&mut cfg.speed_min, "speed_min")?;
        entries.take(&mut cfg.speed_max, "speed_max")?;
        entries.take(&mut cfg.initial_energy, "initial_energy")?;
        entries.take(&mut cfg.e_elec, "e_elec")?;
        entries.take(&mut cfg.e_amp, "e_amp")?;
        entries.take(&mut cfg.path_loss_alpha, "path_loss_alpha")?;
        entries.take(&mut cfg.tx_power_watts, "tx_power_watts")?;
        entries.take(&mut cfg.rx_power_watts, "rx_power_watts")?;
        entries.take(&mut cfg.e_g, "e_g")?;
        entries.take(&mut cfg.e_s, "e_s")?;
        entries.take(&mut cfg.radio_range, "radio_range")?;
        entries.take(&mut cfg.antenna_gain_dbi, "antenna_gain_dbi")?;
        entries.take(&mut cfg.reflection_coeff_sq, "reflection_coeff_sq")?;
        entries.take(&mut cfg.carrier_freq_hz, "carrier_freq_hz")?;
        let rx_given = entries.take(&mut cfg.rx_sensitivity, "rx_sensitivity")?;
        entries.take(&mut cfg.data_rate_bps, "data_rate_bps")?;
        entries.take(&mut cfg.control_packet_bytes, "control_packet_bytes")?;
        entries.take(&mut cfg.data_packet_bytes, "data_packet_bytes")?;
        entries.take(&mut cfg.protocol, "protocol")?;
        entries.take(&mut cfg.rng_seed, "rng_seed")?;
        entries.take(&mut cfg.charging_mode, "charging_mode")?;
        entries.take(&mut cfg.mobility_tick, "mobility_tick")?;
        entries.take(&mut cfg.metrics_tick, "metrics_tick")?;
        entries.take(&mut cfg.hello_period, "hello_period")?;
        entries.take(&mut cfg.election_check_period, "election_check_period")?;
        entries.take(&mut cfg.drain_sample_period, "drain_sample_period")?;
        entries.take(&mut cfg.drain_ewma_alpha, "drain_ewma_alpha")?;
        entries.take(&mut cfg.e_threshold, "e_threshold")?;
        let r_given = entries.take(&mut cfg.r_threshold, "r_threshold")?;
        let m_given = entries.take(&mut cfg.m_threshold, "m_threshold")?;
        entries.take(&mut cfg.p_threshold, "p_threshold")?;
        entries.take(&mut cfg.precinct_grid_dim, "precinct_grid_dim")?;
        entries.take(&mut cfg.aggregation_ratio, "aggregation_ratio")?;
        entries.take(&mut cfg.aggregation_window, "aggregation_window")?;
        entries.take(&mut cfg.mac_slot, "mac_slot")?;
        entries.take(&mut cfg.mac_max_retries, "mac_max_retries")?;
        entries.take(&mut cfg.mac_backoff_slots, "mac_backoff_slots")?;
        entries.take(&mut cfg.mac_queue_limit, "mac_queue_limit")?;
        entries.take(&mut cfg.max_paths, "max_paths")?;
        entries.take(&mut cfg.route_lifetime, "route_lifetime")?;
        entries.take(&mut cfg.flood_state_ttl, "flood_state_ttl")?;
        entries.take(&mut cfg.discovery_timeout, "discovery_timeout")?;
        entries.take(&mut cfg.rreq_retries, "rreq_retries")?;
        entries.take(&mut cfg.buffer_ttl, "buffer_ttl")?;
        entries.take(&mut cfg.traffic_period, "traffic_period")?;
        entries.take(&mut cfg.events_per_period, "events_per_period")?;
        entries.take(&mut cfg.sink_node, "sink_node")?;
        entries.finish()?;

        if !rx_given {
            cfg.rx_sensitivity = cfg.derived_rx_sensitivity();
        }
        if !r_given {
            cfg.r_threshold = cfg.derived_r_threshold();
        }
        if !m_given {
            cfg.m_threshold = cfg.derived_m_threshold();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Renders every key in canonical order. `parse(to_config_string())`
    /// reproduces `self` exactly.
    pub fn to_config_string(&self) -> String {
        let mut out = String::from("# mwsn scenario\n");
        let mut put = |key: &str, value: &dyn fmt::Display| {
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(&value.to_string());
            out.push('\n');
        };
        put("node_count", &self.node_count);
        put("field_side", &self.field_side);
        put("sim_duration", &self.sim_duration);
        put("pause_time", &self.pause_time);
        put("speed_min", &self.speed_min);
        put("speed_max", &self.speed_max);
        put("initial_energy", &self.initial_energy);
        put("e_elec", &self.e_elec);
        put("e_amp", &self.e_amp);
        put("path_loss_alpha", &self.path_loss_alpha);
        put("tx_power_watts", &self.tx_power_watts);
        put("rx_power_watts", &self.rx_power_watts);
        put("e_g", &self.e_g);
        put("e_s", &self.e_s);
        put("radio_range", &self.radio_range);
        put("antenna_gain_dbi", &self.antenna_gain_dbi);
        put("reflection_coeff_sq", &self.reflection_coeff_sq);
        put("carrier_freq_hz", &self.carrier_freq_hz);
        put("rx_sensitivity", &self.rx_sensitivity);
        put("data_rate_bps", &self.data_rate_bps);
        put("control_packet_bytes", &self.control_packet_bytes);
        put("data_packet_bytes", &self.data_packet_bytes);
        put("protocol", &self.protocol);
        put("rng_seed", &self.rng_seed);
        put("charging_mode", &self.charging_mode);
        put("mobility_tick", &self.mobility_tick);
        put("metrics_tick", &self.metrics_tick);
        put("hello_period", &self.hello_period);
        put("election_check_period", &self.election_check_period);
        put("drain_sample_period", &self.drain_sample_period);
        put("drain_ewma_alpha", &self.drain_ewma_alpha);
        put("e_threshold", &self.e_threshold);
        put("r_threshold", &self.r_threshold);
        put("m_threshold", &self.m_threshold);
        put("p_threshold", &self.p_threshold);
        put("precinct_grid_dim", &self.precinct_grid_dim);
        put("aggregation_ratio", &self.aggregation_ratio);
        put("aggregation_window", &self.aggregation_window);
        put("mac_slot", &self.mac_slot);
        put("mac_max_retries", &self.mac_max_retries);
        put("mac_backoff_slots", &self.mac_backoff_slots);
        put("mac_queue_limit", &self.mac_queue_limit);
        put("max_paths", &self.max_paths);
        put("route_lifetime", &self.route_lifetime);
        put("flood_state_ttl", &self.flood_state_ttl);
        put("discovery_timeout", &self.discovery_timeout);
        put("rreq_retries", &self.rreq_retries);
        put("buffer_ttl", &self.buffer_ttl);
        put("traffic_period", &self.traffic_period);
        put("events_per_period", &self.events_per_period);
        put("sink_node", &self.sink_node);
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn positive(key: &'static str, v: f64) -> Result<(), ConfigError> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::invalid(key, format!("must be finite and > 0, got {v}")))
            }
        }
        fn unit_interval(key: &'static str, v: f64) -> Result<(), ConfigError> {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(ConfigError::invalid(key, format!("must lie in [0, 1], got {v}")))
            }
        }

        if self.node_count == 0 {
            return Err(ConfigError::invalid("node_count", "must be at least 1"));
        }
        for (key, v) in [
            ("field_side", self.field_side),
            ("sim_duration", self.sim_duration),
            ("speed_min", self.speed_min),
            ("speed_max", self.speed_max),
            ("initial_energy", self.initial_energy),
            ("e_elec", self.e_elec),
            ("e_amp", self.e_amp),
            ("path_loss_alpha", self.path_loss_alpha),
            ("tx_power_watts", self.tx_power_watts),
            ("rx_power_watts", self.rx_power_watts),
            ("e_g", self.e_g),
            ("e_s", self.e_s),
            ("radio_range", self.radio_range),
            ("carrier_freq_hz", self.carrier_freq_hz),
            ("rx_sensitivity", self.rx_sensitivity),
            ("data_rate_bps", self.data_rate_bps),
            ("mobility_tick", self.mobility_tick),
            ("metrics_tick", self.metrics_tick),
            ("hello_period", self.hello_period),
            ("election_check_period", self.election_check_period),
            ("drain_sample_period", self.drain_sample_period),
            ("e_threshold", self.e_threshold),
            ("r_threshold", self.r_threshold),
            ("m_threshold", self.m_threshold),
            ("aggregation_ratio", self.aggregation_ratio),
            ("aggregation_window", self.aggregation_window),
            ("mac_slot", self.mac_slot),
            ("route_lifetime", self.route_lifetime),
            ("flood_state_ttl", self.flood_state_ttl),
            ("discovery_timeout", self.discovery_timeout),
            ("buffer_ttl", self.buffer_ttl),
            ("traffic_period", self.traffic_period),
        ] {
            positive(key, v)?;
        }
        if !(self.pause_time.is_finite() && self.pause_time >= 0.0) {
            return Err(ConfigError::invalid("pause_time", format!("must be >= 0, got {}", self.pause_time)));
        }
        if !self.antenna_gain_dbi.is_finite() {
            return Err(ConfigError::invalid("antenna_gain_dbi", "must be finite"));
        }
        if self.speed_min > self.speed_max {
            return Err(ConfigError::invalid(
                "speed_min",
                format!("speed_min ({}) exceeds speed_max ({})", self.speed_min, self.speed_max),
            ));
        }
        if !(0.0..1.0).contains(&self.reflection_coeff_sq) {
            return Err(ConfigError::invalid(
                "reflection_coeff_sq",
                format!("must lie in [0, 1), got {}", self.reflection_coeff_sq),
            ));
        }
        unit_interval("drain_ewma_alpha", self.drain_ewma_alpha)?;
        unit_interval("p_threshold", self.p_threshold)?;
        if self.aggregation_ratio > 1.0 {
            return Err(ConfigError::invalid("aggregation_ratio", "must not exceed 1"));
        }
        if self.precinct_grid_dim == 0 {
            return Err(ConfigError::invalid("precinct_grid_dim", "must be at least 1"));
        }
        if self.control_packet_bytes == 0 {
            return Err(ConfigError::invalid("control_packet_bytes", "must be at least 1"));
        }
        if self.data_packet_bytes == 0 {
            return Err(ConfigError::invalid("data_packet_bytes", "must be at least 1"));
        }
        if self.mac_backoff_slots == 0 {
            return Err(ConfigError::invalid("mac_backoff_slots", "must be at least 1"));
        }
        if self.mac_queue_limit == 0 {
            return Err(ConfigError::invalid("mac_queue_limit", "must be at least 1"));
        }
        if self.max_paths == 0 {
            return Err(ConfigError::invalid("max_paths", "must be at least 1"));
        }
        if self.sink_node >= self.node_count {
            return Err(ConfigError::invalid(
                "sink_node",
                format!("sink {} is not a node id below node_count {}", self.sink_node, self.node_count),
            ));
        }
        Ok(())
    }
}

struct Entry {
    line: usize,
    value: String,
}

struct Entries {
    map: BTreeMap<String, Entry>,
}

impl Entries {
    fn collect(source: &str) -> Result<Self, ConfigError> {
        let mut map: BTreeMap<String, Entry> = BTreeMap::new();
        for (idx, raw) in source.lines().enumerate() {
            let line = idx + 1;
            let text = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if text.is_empty() {
                continue;
            }
            let Some((key, value)) = text.split_once('=') else {
                return Err(ConfigError::Syntax { line, message: format!("expected `key = value`, got `{text}`") });
            };
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_') {
                return Err(ConfigError::Syntax { line, message: format!("malformed key `{key}`") });
            }
            if value.is_empty() {
                return Err(ConfigError::BadValue { line, key: key.to_owned(), message: "missing value".into() });
            }
            if let Some(prev) = map.get(key) {
                return Err(ConfigError::DuplicateKey { line, key: key.to_owned(), first: prev.line });
            }
            map.insert(key.to_owned(), Entry { line, value: value.to_owned() });
        }
        Ok(Entries { map })
    }

    /// Overwrites `slot` when `key` is present. Returns whether it was.
    fn take<T>(&mut self, slot: &mut T, key: &str) -> Result<bool, ConfigError>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        let Some(entry) = self.map.remove(key) else {
            return Ok(false);
        };
        *slot = entry.value.parse().map_err(|e: T::Err| ConfigError::BadValue {
            line: entry.line,
            key: key.to_owned(),
            message: format!("cannot parse `{}`: {e}", entry.value),
        })?;
        Ok(true)
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.map.into_iter().min_by_key(|(_, e)| e.line) {
            Some((key, entry)) => Err(ConfigError::UnknownKey { line: entry.line, key }),
            None => Ok(()),
        }
    }
}
