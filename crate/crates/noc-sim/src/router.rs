//! Cycle-level model of the multi-mode connection-matrix router (CMRouter).
//!
//! A router faces its five neighbor cores through independent input and
//! output port buffers. Routing needs no packet headers: a 5x5 connection
//! matrix maps each input port to the neighbor cores its flits forward to,
//! in P2P, broadcast or merge mode. A round-robin channel arbiter moves
//! head flits into one of `grants_per_cycle` transfer slots; each granted
//! transfer occupies its slot for `handshake_cycles`, which pins the
//! router's hard throughput ceiling at
//! `grants_per_cycle / handshake_cycles` flits per cycle (0.4 at the
//! defaults). The link controller hangs an input port up when its target
//! output is full or its head flit runs ahead of the committed timestep.

use std::collections::VecDeque;

use crate::config::SimConfig;
use crate::energy::EnergyLedger;
use crate::error::{Result, SimError};

/// Ports per router: one per neighbor core.
pub const ROUTER_PORTS: usize = 5;
/// Connection matrix capacity in cells.
pub const MATRIX_CELLS: usize = ROUTER_PORTS * ROUTER_PORTS;

/// The unit of on-chip traffic: one spike, identified by its source.
/// Destinations come from the connection matrices along the path, not
/// from the flit itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpikeFlit {
    /// Topology id of the core whose neuron fired (12..31 in a domain).
    pub src_core: u8,
    /// Neuron index within the source core.
    pub src_neuron: u16,
    /// Timestep the spike belongs to; never decreases along a path.
    pub timestep: u32,
    /// Optional merge-group id for many-to-one flows.
    pub tag: Option<u32>,
}

/// Forwarding mode of one matrix cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransmissionMode {
    P2P,
    Broadcast,
    Merge,
}

impl TransmissionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TransmissionMode::P2P => "p2p",
            TransmissionMode::Broadcast => "bcast",
            TransmissionMode::Merge => "merge",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "p2p" => Ok(TransmissionMode::P2P),
            "bcast" => Ok(TransmissionMode::Broadcast),
            "merge" => Ok(TransmissionMode::Merge),
            other => Err(SimError::Parse(format!("unknown transmission mode {other:?}"))),
        }
    }
}

/// Per-hop transmission energy in picojoules. Broadcast is charged per
/// delivered copy; merge is port convergence and costs a P2P hop.
pub fn hop_energy(mode: TransmissionMode, fanout: usize, cfg: &SimConfig) -> Result<f64> {
    if fanout == 0 {
        return Err(SimError::invalid("hop fanout must be at least 1"));
    }
    Ok(match mode {
        TransmissionMode::P2P => cfg.e_hop_p2p_pj,
        TransmissionMode::Broadcast => fanout as f64 * cfg.e_hop_bcast_pj,
        TransmissionMode::Merge => cfg.e_hop_p2p_pj,
    })
}

/// The 5x5 routing table: row = input port, column = routing slot, each
/// occupied cell holding a destination core id (5 bits on silicon) and a
/// mode. Payload storage is `N_c x N_c x W_cid` = 125 bits per router.
#[derive(Debug, Clone, Default)]
pub struct ConnectionMatrix {
    cells: [[Option<(u8, TransmissionMode)>; ROUTER_PORTS]; ROUTER_PORTS],
}

impl ConnectionMatrix {
    pub fn cell(&self, in_port: usize, slot: usize) -> Option<(u8, TransmissionMode)> {
        self.cells[in_port][slot]
    }

    pub fn row(&self, in_port: usize) -> impl Iterator<Item = (u8, TransmissionMode)> + '_ {
        self.cells[in_port].iter().flatten().copied()
    }

    pub fn occupied_cells(&self) -> usize {
        self.cells.iter().flatten().filter(|c| c.is_some()).count()
    }
}

/// FIFO flit buffer on one port.
#[derive(Debug, Clone)]
pub struct PortBuffer {
    fifo: VecDeque<SpikeFlit>,
    capacity: usize,
    pub hung_up: bool,
}

impl PortBuffer {
    pub fn new(capacity: usize) -> Self {
        PortBuffer { fifo: VecDeque::with_capacity(capacity), capacity, hung_up: false }
    }

    pub fn len(&self) -> usize {
        self.fifo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fifo.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.fifo.len() >= self.capacity
    }

    pub fn head(&self) -> Option<&SpikeFlit> {
        self.fifo.front()
    }

    fn push(&mut self, flit: SpikeFlit) {
        debug_assert!(!self.is_full());
        self.fifo.push_back(flit);
    }

    fn pop(&mut self) -> Option<SpikeFlit> {
        self.fifo.pop_front()
    }
}

/// One matrix entry for configuration: `(in_port, slot, dest_core, mode)`.
pub type MatrixEntry = (usize, usize, u8, TransmissionMode);

#[derive(Debug, Clone)]
struct InFlight {
    flit: SpikeFlit,
    targets: Vec<(usize, TransmissionMode)>,
    remaining: u64,
}

/// Full state of one CMRouter.
#[derive(Debug, Clone)]
pub struct RouterState {
    /// Topology id of this router (0..11 in a domain).
    pub id: u8,
    /// Register table: the five neighbor core ids, port-indexed.
    neighbors: [u8; ROUTER_PORTS],
    matrix: ConnectionMatrix,
    inputs: Vec<PortBuffer>,
    outputs: Vec<PortBuffer>,
    /// Output space promised to in-flight transfers, per port.
    reserved: [usize; ROUTER_PORTS],
    slots: Vec<Option<InFlight>>,
    handshake_cycles: u64,
    arbiter_pos: usize,
    pub clock_gated: bool,
    pub ledger: EnergyLedger,
    /// Flits accepted into input buffers.
    pub injected: u64,
    /// Transfers granted by the arbiter.
    pub grants: u64,
    /// Transfers completed (one per flit, regardless of fan-out).
    pub completed: u64,
    /// Copies placed into output buffers.
    pub deliveries: u64,
}

impl RouterState {
    pub fn new(id: u8, neighbors: [u8; ROUTER_PORTS], cfg: &SimConfig) -> Self {
        RouterState {
            id,
            neighbors,
            matrix: ConnectionMatrix::default(),
            inputs: (0..ROUTER_PORTS).map(|_| PortBuffer::new(cfg.buffer_depth)).collect(),
            outputs: (0..ROUTER_PORTS).map(|_| PortBuffer::new(cfg.buffer_depth)).collect(),
            reserved: [0; ROUTER_PORTS],
            slots: vec![None; cfg.grants_per_cycle],
            handshake_cycles: cfg.handshake_cycles,
            arbiter_pos: 0,
            clock_gated: true,
            ledger: EnergyLedger::new(),
            injected: 0,
            grants: 0,
            completed: 0,
            deliveries: 0,
        }
    }

    pub fn neighbors(&self) -> &[u8; ROUTER_PORTS] {
        &self.neighbors
    }

    /// Port index of a neighbor core id.
    pub fn port_of(&self, core: u8) -> Option<usize> {
        self.neighbors.iter().position(|&c| c == core)
    }

    pub fn matrix(&self) -> &ConnectionMatrix {
        &self.matrix
    }

    /// Install matrix entries. Every destination must be one of this
    /// router's neighbors, every (in_port, slot) cell at most once.
    pub fn configure_matrix(&mut self, entries: &[MatrixEntry]) -> Result<()> {
        if entries.len() > MATRIX_CELLS {
            return Err(SimError::Configuration(format!(
                "router {}: {} entries exceed the {MATRIX_CELLS}-cell matrix",
                self.id,
                entries.len()
            )));
        }
        let mut cells = ConnectionMatrix::default();
        for &(in_port, slot, dest, mode) in entries {
            if in_port >= ROUTER_PORTS || slot >= ROUTER_PORTS {
                return Err(SimError::Configuration(format!(
                    "router {}: cell ({in_port},{slot}) out of range",
                    self.id
                )));
            }
            if self.port_of(dest).is_none() {
                return Err(SimError::Configuration(format!(
                    "router {}: destination core {dest} is not a neighbor",
                    self.id
                )));
            }
            if cells.cells[in_port][slot].is_some() {
                return Err(SimError::Configuration(format!(
                    "router {}: duplicate matrix cell ({in_port},{slot})",
                    self.id
                )));
            }
            cells.cells[in_port][slot] = Some((dest, mode));
        }
        self.matrix = cells;
        Ok(())
    }

    /// Destination ports for a flit arriving on `in_port`. An empty result
    /// models an unconfigured link; the flit will be dropped and counted.
    pub fn route_lookup(&self, in_port: usize, _flit: &SpikeFlit) -> Vec<(usize, TransmissionMode)> {
        self.matrix
            .row(in_port)
            .map(|(dest, mode)| (self.port_of(dest).expect("validated at configure"), mode))
            .collect()
    }

    /// Offer a flit to an input port. Returns false (back-pressure) when
    /// the buffer is full or hung up.
    pub fn accept_flit(&mut self, in_port: usize, flit: SpikeFlit) -> bool {
        let buf = &mut self.inputs[in_port];
        if buf.is_full() || buf.hung_up {
            return false;
        }
        buf.push(flit);
        self.injected += 1;
        self.clock_gated = false;
        true
    }

    fn output_has_space(&self, port: usize) -> bool {
        self.outputs[port].len() + self.reserved[port] < self.outputs[port].capacity
    }

    /// Hang-up control: an input port is hung when its head flit cannot
    /// move — a target output buffer is full, or the flit carries a
    /// timestep beyond the committed one. Hung ports accept no new flits.
    pub fn hangup_check(&mut self, committed_timestep: u32) -> Vec<usize> {
        let mut hung = Vec::new();
        for port in 0..ROUTER_PORTS {
            let is_hung = match self.inputs[port].head() {
                Some(flit) => {
                    if flit.timestep > committed_timestep {
                        true
                    } else {
                        let targets = self.route_lookup(port, flit);
                        !targets.is_empty()
                            && targets.iter().any(|&(p, _)| !self.output_has_space(p))
                    }
                }
                None => false,
            };
            self.inputs[port].hung_up = is_hung;
            if is_hung {
                hung.push(port);
            }
        }
        hung
    }

    /// Advance one cycle: complete due transfers, then let the round-robin
    /// arbiter grant head flits into free transfer slots. Completed
    /// transfers land in output buffers and are charged hop energy by
    /// mode.
    pub fn tick(&mut self, committed_timestep: u32) {
        // transfers completing this cycle
        for slot in self.slots.iter_mut() {
            if let Some(fl) = slot {
                fl.remaining -= 1;
                if fl.remaining == 0 {
                    let fl = slot.take().unwrap();
                    let fanout = fl.targets.len() as u64;
                    for &(port, mode) in &fl.targets {
                        self.reserved[port] -= 1;
                        self.outputs[port].push(fl.flit);
                        self.deliveries += 1;
                        match mode {
                            TransmissionMode::P2P => self.ledger.hops_p2p += 1,
                            TransmissionMode::Broadcast => self.ledger.bcast_deliveries += 1,
                            TransmissionMode::Merge => self.ledger.hops_merge += 1,
                        }
                    }
                    debug_assert!(fanout >= 1);
                    self.completed += 1;
                }
            }
        }

        self.hangup_check(committed_timestep);

        // arbitration: scan ports round-robin, one grant per port per cycle
        let mut free_slots: Vec<usize> =
            self.slots.iter().enumerate().filter(|(_, s)| s.is_none()).map(|(i, _)| i).collect();
        if !free_slots.is_empty() {
            let start = self.arbiter_pos;
            for step in 0..ROUTER_PORTS {
                if free_slots.is_empty() {
                    break;
                }
                let port = (start + step) % ROUTER_PORTS;
                if self.inputs[port].hung_up {
                    continue;
                }
                let Some(head) = self.inputs[port].head().copied() else { continue };
                let targets = self.route_lookup(port, &head);
                if targets.is_empty() {
                    // unconfigured link: drop and count, do not abort the run
                    self.inputs[port].pop();
                    self.ledger.drops += 1;
                    continue;
                }
                if head.timestep > committed_timestep
                    || targets.iter().any(|&(p, _)| !self.output_has_space(p))
                {
                    continue;
                }
                let flit = self.inputs[port].pop().unwrap();
                for &(p, _) in &targets {
                    self.reserved[p] += 1;
                }
                let slot = free_slots.remove(0);
                self.slots[slot] =
                    Some(InFlight { flit, targets, remaining: self.handshake_cycles });
                self.grants += 1;
                self.arbiter_pos = (port + 1) % ROUTER_PORTS;
            }
        }

        self.clock_gated = self.inputs.iter().all(|b| b.is_empty())
            && self.outputs.iter().all(|b| b.is_empty())
            && self.slots.iter().all(|s| s.is_none());
    }

    /// Drain one flit from an output port (the downstream core side).
    pub fn pop_output(&mut self, port: usize) -> Option<SpikeFlit> {
        let f = self.outputs[port].pop();
        if f.is_some() {
            self.clock_gated = self.inputs.iter().all(|b| b.is_empty())
                && self.outputs.iter().all(|b| b.is_empty())
                && self.slots.iter().all(|s| s.is_none());
        }
        f
    }

    pub fn output_len(&self, port: usize) -> usize {
        self.outputs[port].len()
    }

    pub fn input_len(&self, port: usize) -> usize {
        self.inputs[port].len()
    }

    /// Flits currently buffered or in flight.
    pub fn occupancy(&self) -> usize {
        self.inputs.iter().map(|b| b.len()).sum::<usize>()
            + self.outputs.iter().map(|b| b.len()).sum::<usize>()
            + self.slots.iter().flatten().count()
    }

    pub fn is_idle(&self) -> bool {
        self.occupancy() == 0
    }
}
