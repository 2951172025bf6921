//! Simulator configuration: plain `key = value` text files with defaults
//! calibrated against the published silicon measurements.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Result, SimError};

/// Environment variable consulted when no `--config` flag is given.
pub const CONFIG_ENV_VAR: &str = "NOC_SIM_CONFIG";

/// All tunable parameters of the simulator.
///
/// The energy coefficients and pipeline calibration ship as data, not code:
/// `SimConfig::default()` mirrors `config/default.cfg`, and any field can be
/// overridden from a config file.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Core and router clock, used to convert cycles to seconds.
    pub freq_mhz: f64,
    /// Dynamic energy charged per synaptic operation (pJ).
    pub e_sop_pj: f64,
    /// Overhead energy charged per active core cycle (pJ).
    pub e_cycle_active_pj: f64,
    /// Energy charged per idle (enabled but waiting) core cycle (pJ).
    pub e_cycle_idle_pj: f64,
    /// Energy charged per clock-gated cycle (pJ).
    pub e_cycle_gated_pj: f64,
    /// Router hop energy in P2P mode (pJ per forwarded flit).
    pub e_hop_p2p_pj: f64,
    /// Router hop energy in broadcast mode (pJ per delivered copy).
    pub e_hop_bcast_pj: f64,
    /// Router port buffer depth, in flits.
    pub buffer_depth: usize,
    /// Concurrent transfer slots per router (arbiter grants per cycle).
    pub grants_per_cycle: usize,
    /// Cycles one granted transfer occupies its slot end-to-end.
    pub handshake_cycles: u64,
    /// Neuron capacity per core (desk-scale default; silicon holds 8192).
    pub neurons_per_core: usize,
    /// Fabric watchdog: abort a timestep after this many cycles without
    /// progress.
    pub watchdog_cycles: u64,
    /// Calibrated fraction of extra SPE cycles per weight-lookup group,
    /// modeling pipeline bubbles between the zero-skip scanner and the
    /// synapse engines.
    pub spe_stall_frac: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            freq_mhz: 200.0,
            e_sop_pj: 0.4027,
            e_cycle_active_pj: 0.7,
            e_cycle_idle_pj: 0.0,
            e_cycle_gated_pj: 0.0,
            e_hop_p2p_pj: 0.026,
            e_hop_bcast_pj: 0.009,
            buffer_depth: 4,
            grants_per_cycle: 2,
            handshake_cycles: 5,
            neurons_per_core: 256,
            watchdog_cycles: 1_000_000,
            spe_stall_frac: 0.276,
        }
    }
}

impl SimConfig {
    /// Parse a `key = value` config file. Unknown keys are rejected so a
    /// typo cannot silently fall back to a default. `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = SimConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                SimError::Parse(format!("config line {}: expected key = value", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            cfg.set(key, value).map_err(|e| {
                SimError::Parse(format!("config line {}: {e}", lineno + 1))
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::io(path.display().to_string(), e))?;
        Self::from_text(&text)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn f64_of(key: &str, v: &str) -> Result<f64> {
            v.parse::<f64>()
                .map_err(|_| SimError::Parse(format!("{key}: not a number: {v:?}")))
        }
        fn usize_of(key: &str, v: &str) -> Result<usize> {
            v.parse::<usize>()
                .map_err(|_| SimError::Parse(format!("{key}: not an integer: {v:?}")))
        }
        match key {
            "freq_mhz" => self.freq_mhz = f64_of(key, value)?,
            "e_sop_pj" => self.e_sop_pj = f64_of(key, value)?,
            "e_cycle_active_pj" => self.e_cycle_active_pj = f64_of(key, value)?,
            "e_cycle_idle_pj" => self.e_cycle_idle_pj = f64_of(key, value)?,
            "e_cycle_gated_pj" => self.e_cycle_gated_pj = f64_of(key, value)?,
            "e_hop_p2p_pj" => self.e_hop_p2p_pj = f64_of(key, value)?,
            "e_hop_bcast_pj" => self.e_hop_bcast_pj = f64_of(key, value)?,
            "buffer_depth" => self.buffer_depth = usize_of(key, value)?,
            "grants_per_cycle" => self.grants_per_cycle = usize_of(key, value)?,
            "handshake_cycles" => self.handshake_cycles = usize_of(key, value)? as u64,
            "neurons_per_core" => self.neurons_per_core = usize_of(key, value)?,
            "watchdog_cycles" => self.watchdog_cycles = usize_of(key, value)? as u64,
            "spe_stall_frac" => self.spe_stall_frac = f64_of(key, value)?,
            other => return Err(SimError::Parse(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.freq_mhz <= 0.0 {
            return Err(SimError::invalid("freq_mhz must be positive"));
        }
        if self.buffer_depth == 0 {
            return Err(SimError::invalid("buffer_depth must be at least 1"));
        }
        if self.grants_per_cycle == 0 {
            return Err(SimError::invalid("grants_per_cycle must be at least 1"));
        }
        if self.handshake_cycles == 0 {
            return Err(SimError::invalid("handshake_cycles must be at least 1"));
        }
        if self.neurons_per_core == 0 {
            return Err(SimError::invalid("neurons_per_core must be at least 1"));
        }
        if self.spe_stall_frac < 0.0 {
            return Err(SimError::invalid("spe_stall_frac must be non-negative"));
        }
        Ok(())
    }

    /// Render the resolved configuration in the same `key = value` format,
    /// used by run manifests.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "freq_mhz = {}", self.freq_mhz);
        let _ = writeln!(s, "e_sop_pj = {}", self.e_sop_pj);
        let _ = writeln!(s, "e_cycle_active_pj = {}", self.e_cycle_active_pj);
        let _ = writeln!(s, "e_cycle_idle_pj = {}", self.e_cycle_idle_pj);
        let _ = writeln!(s, "e_cycle_gated_pj = {}", self.e_cycle_gated_pj);
        let _ = writeln!(s, "e_hop_p2p_pj = {}", self.e_hop_p2p_pj);
        let _ = writeln!(s, "e_hop_bcast_pj = {}", self.e_hop_bcast_pj);
        let _ = writeln!(s, "buffer_depth = {}", self.buffer_depth);
        let _ = writeln!(s, "grants_per_cycle = {}", self.grants_per_cycle);
        let _ = writeln!(s, "handshake_cycles = {}", self.handshake_cycles);
        let _ = writeln!(s, "neurons_per_core = {}", self.neurons_per_core);
        let _ = writeln!(s, "watchdog_cycles = {}", self.watchdog_cycles);
        let _ = writeln!(s, "spe_stall_frac = {}", self.spe_stall_frac);
        s
    }

    /// Hard throughput ceiling of one router, in flits per cycle.
    pub fn router_throughput_ceiling(&self) -> f64 {
        self.grants_per_cycle as f64 / self.handshake_cycles as f64
    }
}
