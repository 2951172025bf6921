//! Spike trace and telemetry CSV I/O.
//!
//! Spike traces are `timestep,core,neuron` rows with a header; cores are
//! fabric ids (12..31), neurons core-local indexes. Every CSV this crate
//! writes has a header row and a stable column set.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Result, SimError};
use crate::fabric::{OutputRecord, RunTelemetry};

pub const TRACE_HEADER: &str = "timestep,core,neuron";

/// Parse a spike trace CSV.
pub fn read_trace(text: &str) -> Result<Vec<(u32, u8, u16)>> {
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if idx == 0 {
            if line != TRACE_HEADER {
                return Err(SimError::Parse(format!(
                    "trace line 1: expected header {TRACE_HEADER:?}, found {line:?}"
                )));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(SimError::Parse(format!("trace line {}: expected 3 columns", idx + 1)));
        }
        let parse = |s: &str, what: &str| -> Result<u32> {
            s.trim()
                .parse::<u32>()
                .map_err(|_| SimError::Parse(format!("trace line {}: bad {what} {s:?}", idx + 1)))
        };
        rows.push((
            parse(fields[0], "timestep")?,
            parse(fields[1], "core")? as u8,
            parse(fields[2], "neuron")? as u16,
        ));
    }
    Ok(rows)
}

pub fn read_trace_file(path: &Path) -> Result<Vec<(u32, u8, u16)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SimError::io(path.display().to_string(), e))?;
    read_trace(&text)
}

/// Render a spike trace (input form).
pub fn write_trace(rows: &[(u32, u8, u16)]) -> String {
    let mut s = String::from(TRACE_HEADER);
    s.push('\n');
    for &(t, c, n) in rows {
        let _ = writeln!(s, "{t},{c},{n}");
    }
    s
}

/// Render an output spike trace with the same column contract.
pub fn write_output_trace(records: &[OutputRecord]) -> String {
    let mut s = String::from(TRACE_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(s, "{},{},{}", r.timestep, r.core, r.neuron);
    }
    s
}

pub const TELEMETRY_HEADER: &str =
    "sops,hops_p2p,bcast_deliveries,hops_merge,drops,cycles,energy_pj,gsops,pj_per_sop";

/// Render run telemetry totals as a one-row CSV.
pub fn write_telemetry(t: &RunTelemetry) -> String {
    format!(
        "{TELEMETRY_HEADER}\n{},{},{},{},{},{},{},{},{}\n",
        t.sops,
        t.hops_p2p,
        t.bcast_deliveries,
        t.hops_merge,
        t.drops,
        t.cycles,
        t.energy_pj,
        t.gsops,
        t.pj_per_sop
    )
}

pub fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| SimError::io(parent.display().to_string(), e))?;
        }
    }
    std::fs::write(path, content).map_err(|e| SimError::io(path.display().to_string(), e))
}
