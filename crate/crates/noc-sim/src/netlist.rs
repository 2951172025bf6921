//! The textual netlist: everything the fabric needs to instantiate and
//! route one compiled network.
//!
//! Line-oriented format, one directive per line, `#` comments:
//!
//! ```text
//! topology fullerene
//! network <id>
//! core <id> N <4|8|16> W <4|8|16> threshold <int> leak <int> reset <zero|sub>
//! codebook <core> v0 v1 ...
//! scale <core> <f64>
//! axon <core> <idx> <src_core> <src_neuron>
//! syn <core> <pre> <post> <index>
//! route <router> <in_core> <slot> <dest_core> <p2p|bcast|merge>
//! relay <core> <src_core> <via_router>
//! input <core> <local_neuron> <global_neuron>
//! output <core> <local_neuron> <global_neuron> <buffer>
//! ```
//!
//! Core ids are topology ids (12..31), router ids 0..11. `axon` lines give
//! each core's mapping from (source core, source neuron) to its local axon
//! slot; `relay` lines tell a core which router ports forward flits of a
//! given source onward. `emit` followed by `parse` reproduces the model
//! exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Result, SimError};
use crate::neurocore::ResetMode;
use crate::router::TransmissionMode;

/// Number of independent output buffers (concurrently resident networks).
pub const OUTPUT_BUFFERS: usize = 4;

/// Per-core section of the netlist.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreSection {
    pub id: u8,
    pub n: u8,
    pub w: u8,
    pub threshold: i32,
    pub leak: u32,
    pub reset: ResetMode,
    pub codebook: Vec<i32>,
    /// Real-valued weight per codebook unit (quantizer metadata).
    pub scale: f64,
    /// (local axon, source core, source neuron)
    pub axons: Vec<(u32, u8, u16)>,
    /// (pre axon, post neuron, weight index)
    pub synapses: Vec<(u32, u16, u8)>,
}

impl CoreSection {
    pub fn new(id: u8, n: u8, w: u8) -> Self {
        CoreSection {
            id,
            n,
            w,
            threshold: 1,
            leak: 0,
            reset: ResetMode::ToZero,
            codebook: Vec::new(),
            scale: 1.0,
            axons: Vec::new(),
            synapses: Vec::new(),
        }
    }

    pub fn axon_count(&self) -> u32 {
        let from_axons = self.axons.iter().map(|&(a, _, _)| a + 1).max().unwrap_or(0);
        let from_syn = self.synapses.iter().map(|&(p, _, _)| p + 1).max().unwrap_or(0);
        from_axons.max(from_syn)
    }

    pub fn neuron_count_hint(&self) -> u16 {
        self.synapses.iter().map(|&(_, p, _)| p + 1).max().unwrap_or(0)
    }
}

/// `route` line: router matrix cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RouteLine {
    pub router: u8,
    pub in_core: u8,
    pub slot: u8,
    pub dest_core: u8,
    pub mode: TransmissionMode,
}

/// `relay` line: core-side forwarding of a source's flits via a router.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RelayLine {
    pub core: u8,
    pub src_core: u8,
    pub via_router: u8,
}

/// `input` / `output` placement mapping lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IoLine {
    pub core: u8,
    pub local_neuron: u16,
    pub global_neuron: u32,
    /// Output buffer id; inputs carry no buffer.
    pub buffer: Option<u8>,
}

/// Complete parsed netlist.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Netlist {
    pub network_id: u8,
    pub cores: BTreeMap<u8, CoreSection>,
    pub routes: Vec<RouteLine>,
    pub relays: Vec<RelayLine>,
    pub inputs: Vec<IoLine>,
    pub outputs: Vec<IoLine>,
}

fn reset_str(r: ResetMode) -> &'static str {
    match r {
        ResetMode::ToZero => "zero",
        ResetMode::Subtract => "sub",
    }
}

fn parse_reset(s: &str) -> Result<ResetMode> {
    match s {
        "zero" => Ok(ResetMode::ToZero),
        "sub" => Ok(ResetMode::Subtract),
        other => Err(SimError::Parse(format!("unknown reset mode {other:?}"))),
    }
}

impl Netlist {
    /// Render to the canonical textual form.
    pub fn emit(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "topology fullerene");
        let _ = writeln!(s, "network {}", self.network_id);
        for core in self.cores.values() {
            let _ = writeln!(
                s,
                "core {} N {} W {} threshold {} leak {} reset {}",
                core.id,
                core.n,
                core.w,
                core.threshold,
                core.leak,
                reset_str(core.reset)
            );
            let values: Vec<String> = core.codebook.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(s, "codebook {} {}", core.id, values.join(" "));
            let _ = writeln!(s, "scale {} {}", core.id, core.scale);
            for &(axon, src_core, src_neuron) in &core.axons {
                let _ = writeln!(s, "axon {} {} {} {}", core.id, axon, src_core, src_neuron);
            }
            for &(pre, post, index) in &core.synapses {
                let _ = writeln!(s, "syn {} {} {} {}", core.id, pre, post, index);
            }
        }
        for r in &self.routes {
            let _ = writeln!(
                s,
                "route {} {} {} {} {}",
                r.router,
                r.in_core,
                r.slot,
                r.dest_core,
                r.mode.as_str()
            );
        }
        for r in &self.relays {
            let _ = writeln!(s, "relay {} {} {}", r.core, r.src_core, r.via_router);
        }
        for io in &self.inputs {
            let _ = writeln!(s, "input {} {} {}", io.core, io.local_neuron, io.global_neuron);
        }
        for io in &self.outputs {
            let _ = writeln!(
                s,
                "output {} {} {} {}",
                io.core,
                io.local_neuron,
                io.global_neuron,
                io.buffer.unwrap_or(0)
            );
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut nl = Netlist::default();
        let mut saw_topology = false;
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let ctx = |msg: String| SimError::Parse(format!("netlist line {lineno}: {msg}"));
            let need = |n: usize| -> Result<()> {
                if fields.len() != n {
                    Err(ctx(format!("expected {n} fields, found {}", fields.len())))
                } else {
                    Ok(())
                }
            };
            macro_rules! num {
                ($i:expr, $t:ty) => {
                    fields[$i]
                        .parse::<$t>()
                        .map_err(|_| ctx(format!("bad number {:?}", fields[$i])))?
                };
            }
            match fields[0] {
                "topology" => {
                    need(2)?;
                    if fields[1] != "fullerene" {
                        return Err(ctx(format!("unsupported topology {:?}", fields[1])));
                    }
                    saw_topology = true;
                }
                "network" => {
                    need(2)?;
                    let id = num!(1, u8);
                    if id as usize >= OUTPUT_BUFFERS {
                        return Err(ctx(format!(
                            "network id {id} exceeds {OUTPUT_BUFFERS} buffers"
                        )));
                    }
                    nl.network_id = id;
                }
                "core" => {
                    need(12)?;
                    if fields[2] != "N"
                        || fields[4] != "W"
                        || fields[6] != "threshold"
                        || fields[8] != "leak"
                        || fields[10] != "reset"
                    {
                        return Err(ctx("malformed core line".into()));
                    }
                    let id = num!(1, u8);
                    let mut core = CoreSection::new(id, num!(3, u8), num!(5, u8));
                    core.threshold = num!(7, i32);
                    core.leak = num!(9, u32);
                    core.reset = parse_reset(fields[11]).map_err(|e| ctx(e.to_string()))?;
                    if nl.cores.insert(id, core).is_some() {
                        return Err(ctx(format!("duplicate core {id}")));
                    }
                }
                "codebook" => {
                    if fields.len() < 3 {
                        return Err(ctx("codebook needs a core id and values".into()));
                    }
                    let id = num!(1, u8);
                    let core = nl
                        .cores
                        .get_mut(&id)
                        .ok_or_else(|| ctx(format!("codebook before core {id}")))?;
                    core.codebook = fields[2..]
                        .iter()
                        .map(|v| {
                            v.parse::<i32>()
                                .map_err(|_| ctx(format!("bad codebook value {v:?}")))
                        })
                        .collect::<Result<_>>()?;
                }
                "scale" => {
                    need(3)?;
                    let id = num!(1, u8);
                    let core = nl
                        .cores
                        .get_mut(&id)
                        .ok_or_else(|| ctx(format!("scale before core {id}")))?;
                    core.scale = num!(2, f64);
                }
                "axon" => {
                    need(5)?;
                    let id = num!(1, u8);
                    let core = nl
                        .cores
                        .get_mut(&id)
                        .ok_or_else(|| ctx(format!("axon before core {id}")))?;
                    core.axons.push((num!(2, u32), num!(3, u8), num!(4, u16)));
                }
                "syn" => {
                    need(5)?;
                    let id = num!(1, u8);
                    let core = nl
                        .cores
                        .get_mut(&id)
                        .ok_or_else(|| ctx(format!("syn before core {id}")))?;
                    core.synapses.push((num!(2, u32), num!(3, u16), num!(4, u8)));
                }
                "route" => {
                    need(6)?;
                    nl.routes.push(RouteLine {
                        router: num!(1, u8),
                        in_core: num!(2, u8),
                        slot: num!(3, u8),
                        dest_core: num!(4, u8),
                        mode: TransmissionMode::parse(fields[5]).map_err(|e| ctx(e.to_string()))?,
                    });
                }
                "relay" => {
                    need(4)?;
                    nl.relays.push(RelayLine {
                        core: num!(1, u8),
                        src_core: num!(2, u8),
                        via_router: num!(3, u8),
                    });
                }
                "input" => {
                    need(4)?;
                    nl.inputs.push(IoLine {
                        core: num!(1, u8),
                        local_neuron: num!(2, u16),
                        global_neuron: num!(3, u32),
                        buffer: None,
                    });
                }
                "output" => {
                    need(5)?;
                    let buffer = num!(4, u8);
                    if buffer as usize >= OUTPUT_BUFFERS {
                        return Err(ctx(format!("output buffer {buffer} out of range")));
                    }
                    nl.outputs.push(IoLine {
                        core: num!(1, u8),
                        local_neuron: num!(2, u16),
                        global_neuron: num!(3, u32),
                        buffer: Some(buffer),
                    });
                }
                other => {
                    return Err(ctx(format!("unknown directive {other:?}")));
                }
            }
        }
        if !saw_topology {
            return Err(SimError::Parse("netlist missing the topology line".into()));
        }
        Ok(nl)
    }

    pub fn parse_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::io(path.display().to_string(), e))?;
        Self::parse(&text).map_err(|e| match e {
            SimError::Parse(msg) => SimError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.emit()).map_err(|e| SimError::io(path.display().to_string(), e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Netlist {
        let mut nl = Netlist { network_id: 1, ..Default::default() };
        let mut core = CoreSection::new(12, 4, 8);
        core.threshold = 3;
        core.leak = 1;
        core.reset = ResetMode::Subtract;
        core.codebook = vec![-8, -2, 3, 7];
        core.scale = 0.125;
        core.axons = vec![(0, 12, 0), (1, 13, 4)];
        core.synapses = vec![(0, 0, 2), (1, 1, 0)];
        nl.cores.insert(12, core);
        let mut other = CoreSection::new(13, 4, 8);
        other.codebook = vec![1, 2, 3, 4];
        nl.cores.insert(13, other);
        nl.routes.push(RouteLine {
            router: 0,
            in_core: 12,
            slot: 0,
            dest_core: 13,
            mode: TransmissionMode::P2P,
        });
        nl.relays.push(RelayLine { core: 13, src_core: 12, via_router: 1 });
        nl.inputs.push(IoLine { core: 12, local_neuron: 0, global_neuron: 0, buffer: None });
        nl.outputs.push(IoLine { core: 13, local_neuron: 1, global_neuron: 9, buffer: Some(1) });
        nl
    }

    #[test]
    fn emit_parse_roundtrip_is_identity() {
        let nl = sample();
        let parsed = Netlist::parse(&nl.emit()).unwrap();
        assert_eq!(nl, parsed);
    }

    #[test]
    fn empty_network_is_valid() {
        let nl = Netlist::default();
        let parsed = Netlist::parse(&nl.emit()).unwrap();
        assert_eq!(parsed.cores.len(), 0);
    }

    #[test]
    fn unknown_directive_reports_line_number() {
        let err = Netlist::parse("topology fullerene\nbogus 1 2 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2"), "{msg}");
        assert!(msg.contains("bogus"), "{msg}");
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let text = "# header\ntopology fullerene\n\nnetwork 2 # trailing\n";
        let nl = Netlist::parse(text).unwrap();
        assert_eq!(nl.network_id, 2);
    }

    #[test]
    fn bad_mode_and_missing_core_rejected() {
        assert!(Netlist::parse("topology fullerene\nroute 0 12 0 13 zigzag\n").is_err());
        assert!(Netlist::parse("topology fullerene\ncodebook 12 1 2\n").is_err());
        assert!(Netlist::parse("topology fullerene\noutput 12 0 0 7\n").is_err());
        assert!(Netlist::parse("network 0\n").is_err()); // missing topology
    }

    #[test]
    fn scale_roundtrips_exactly() {
        let mut nl = Netlist::default();
        let mut core = CoreSection::new(20, 4, 4);
        core.codebook = vec![0, 1, 2, 3];
        core.scale = 0.030517578125_f64 * 1.7; // arbitrary non-terminating value
        nl.cores.insert(20, core);
        let parsed = Netlist::parse(&nl.emit()).unwrap();
        assert_eq!(parsed.cores[&20].scale, nl.cores[&20].scale);
    }
}
