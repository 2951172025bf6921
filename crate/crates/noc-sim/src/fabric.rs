//! System integration: the ENU instruction set, DMA configuration loading,
//! the global timestep barrier, output buffers, and the end-to-end
//! inference loop over cores and routers.
//!
//! Spike timing follows the hardware's barrier discipline: stimulus-trace
//! events for timestep `t` are loaded into the ping-pong caches before `t`
//! begins (the host injects them over the neuromorphic bus), while spikes
//! fired by neurons during `t` travel the NoC and integrate at `t + 1`.
//! The barrier commits `t` once every enabled core has finished computing
//! and every in-flight flit has landed in a staging bank.

use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;

use crate::config::SimConfig;
use crate::energy::EnergyLedger;
use crate::error::{Result, SimError};
use crate::netlist::{IoLine, Netlist, OUTPUT_BUFFERS};
use crate::neurocore::{CoreRegisterTable, CoreState, WeightCodebook};
use crate::router::{RouterState, SpikeFlit};
use crate::topology::{self, CORE_ID_BASE, DOMAIN_CORES, DOMAIN_ROUTERS};

// ---------------------------------------------------------------------------
// Neuromorphic instructions
// ---------------------------------------------------------------------------

/// DMA channel kind: synapse indexes or membrane potentials.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DmaKind {
    Idma,
    Mpdma,
}

/// The ENU's dedicated instruction set. Core operands use the ENU's core
/// index space 0..20 (fabric core id minus 12).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeuromorphicInstruction {
    /// Load network parameters into a core over a DMA channel:
    /// `len` bytes from host address `addr`.
    InitParams { channel: DmaKind, core: u8, addr: u16, len: u16 },
    CoreEnable { core: u8 },
    /// Start the networks named by the 4-bit mask.
    NetworkStart { mask: u8 },
    /// Halt the host clock domain until a wake signal.
    Sleep,
    /// Arm a wake on the barrier committing the given timestep.
    WakeOnTimestep { timestep: u32 },
    /// Arm a wake on network-computing-finish (the default).
    WakeOnFinish,
    /// Drain one output buffer.
    ReadOutput { buffer: u8 },
}

const OP_INIT_PARAMS: u8 = 1;
const OP_CORE_ENABLE: u8 = 2;
const OP_NETWORK_START: u8 = 3;
const OP_SLEEP: u8 = 4;
const OP_WAKE_ON_TIMESTEP: u8 = 5;
const OP_WAKE_ON_FINISH: u8 = 6;
const OP_READ_OUTPUT: u8 = 7;

fn pack(opcode: u8, a: u8, b: u16, c: u32) -> u64 {
    (opcode as u64) << 56 | (a as u64) << 48 | (b as u64) << 32 | c as u64
}

/// Encode an instruction into its 64-bit word:
/// `[63:56] opcode | [55:48] a | [47:32] b | [31:0] c`, unused fields zero.
pub fn encode(instr: NeuromorphicInstruction) -> u64 {
    use NeuromorphicInstruction::*;
    match instr {
        InitParams { channel, core, addr, len } => {
            let ch = match channel {
                DmaKind::Idma => 0u8,
                DmaKind::Mpdma => 1u8,
            };
            pack(OP_INIT_PARAMS, ch, core as u16, (addr as u32) << 16 | len as u32)
        }
        CoreEnable { core } => pack(OP_CORE_ENABLE, 0, core as u16, 0),
        NetworkStart { mask } => pack(OP_NETWORK_START, mask, 0, 0),
        Sleep => pack(OP_SLEEP, 0, 0, 0),
        WakeOnTimestep { timestep } => pack(OP_WAKE_ON_TIMESTEP, 0, 0, timestep),
        WakeOnFinish => pack(OP_WAKE_ON_FINISH, 0, 0, 0),
        ReadOutput { buffer } => pack(OP_READ_OUTPUT, buffer, 0, 0),
    }
}

/// Decode one instruction word. Opcode 0 is reserved; unknown opcodes and
/// nonzero bits in unused fields are rejected, so `encode(decode(w)) == w`
/// on every accepted word.
pub fn decode(word: u64) -> Result<NeuromorphicInstruction> {
    use NeuromorphicInstruction::*;
    let opcode = (word >> 56) as u8;
    let a = (word >> 48) as u8;
    let b = (word >> 32) as u16;
    let c = word as u32;
    let strict = |cond: bool, instr: NeuromorphicInstruction| {
        if cond {
            Ok(instr)
        } else {
            Err(SimError::Decode(format!("nonzero operand padding in word {word:#018x}")))
        }
    };
    match opcode {
        0 => Err(SimError::Decode(format!("reserved opcode 0 in word {word:#018x}"))),
        OP_INIT_PARAMS => {
            let channel = match a {
                0 => DmaKind::Idma,
                1 => DmaKind::Mpdma,
                _ => {
                    return Err(SimError::Decode(format!(
                        "bad DMA channel {a} in word {word:#018x}"
                    )))
                }
            };
            if b > u8::MAX as u16 {
                return Err(SimError::Decode(format!("bad core field in word {word:#018x}")));
            }
            Ok(InitParams {
                channel,
                core: b as u8,
                addr: (c >> 16) as u16,
                len: c as u16,
            })
        }
        OP_CORE_ENABLE => strict(
            a == 0 && c == 0 && b <= u8::MAX as u16,
            CoreEnable { core: b as u8 },
        ),
        OP_NETWORK_START => strict(b == 0 && c == 0 && a < 16, NetworkStart { mask: a }),
        OP_SLEEP => strict(a == 0 && b == 0 && c == 0, Sleep),
        OP_WAKE_ON_TIMESTEP => strict(a == 0 && b == 0, WakeOnTimestep { timestep: c }),
        OP_WAKE_ON_FINISH => strict(a == 0 && b == 0 && c == 0, WakeOnFinish),
        OP_READ_OUTPUT => strict(
            b == 0 && c == 0 && (a as usize) < OUTPUT_BUFFERS,
            ReadOutput { buffer: a },
        ),
        other => Err(SimError::Decode(format!("unknown opcode {other} in word {word:#018x}"))),
    }
}

// ---------------------------------------------------------------------------
// DMA and output buffers
// ---------------------------------------------------------------------------

/// One DMA descriptor: destination core plus the bytes to copy.
#[derive(Debug, Clone)]
pub struct DmaChannel<'a> {
    pub kind: DmaKind,
    /// Fabric core id (12..31).
    pub core: u8,
    /// Destination offset: bytes for IDMA, neurons for MPDMA.
    pub offset: usize,
    pub bytes: &'a [u8],
}

/// Capacity of one output buffer in bytes (0.2 KB).
pub const OUTPUT_BUFFER_BYTES: usize = 204;
/// Bytes per output record: 13-bit output index + 16-bit timestep,
/// little-endian in a 4-byte word.
pub const OUTPUT_RECORD_BYTES: usize = 4;
/// Records one buffer holds.
pub const OUTPUT_BUFFER_RECORDS: usize = OUTPUT_BUFFER_BYTES / OUTPUT_RECORD_BYTES;

/// One of the four result FIFOs. Overflow drops the newest record and
/// latches a sticky flag; earlier records are never disturbed.
#[derive(Debug, Clone, Default)]
pub struct OutputBuffer {
    records: VecDeque<(u16, u16)>,
    pub overflowed: bool,
}

impl OutputBuffer {
    pub fn push(&mut self, out_index: u16, timestep: u16) {
        debug_assert!(out_index < 1 << 13);
        if self.records.len() >= OUTPUT_BUFFER_RECORDS {
            self.overflowed = true;
            return;
        }
        self.records.push_back((out_index, timestep));
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Drain all records in FIFO order.
    pub fn drain(&mut self) -> Vec<(u16, u16)> {
        self.records.drain(..).collect()
    }

    /// Drain into the packed little-endian dump format.
    pub fn drain_bytes(&mut self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.records.len() * OUTPUT_RECORD_BYTES);
        for (idx, t) in self.records.drain(..) {
            let word: u32 = (idx as u32 & 0x1FFF) | ((t as u32) << 13);
            out.extend_from_slice(&word.to_le_bytes());
        }
        out
    }
}

/// Decode a packed buffer dump back into (output index, timestep) records.
pub fn decode_output_dump(bytes: &[u8]) -> Result<Vec<(u16, u16)>> {
    if !bytes.len().is_multiple_of(OUTPUT_RECORD_BYTES) {
        return Err(SimError::Parse("output dump length not a record multiple".into()));
    }
    Ok(bytes
        .chunks_exact(OUTPUT_RECORD_BYTES)
        .map(|c| {
            let w = u32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            ((w & 0x1FFF) as u16, (w >> 13) as u16)
        })
        .collect())
}

/// Global timestep synchronization state.
#[derive(Debug, Clone, Default)]
pub struct TimestepBarrier {
    /// Timestep currently being processed; flits tagged beyond it hang.
    pub current_timestep: u32,
    /// Per-core done flags for the current timestep.
    pub core_done: Vec<bool>,
    /// True while the host clock domain is gated.
    pub host_asleep: bool,
}

// ---------------------------------------------------------------------------
// The fabric
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct FabricCore {
    id: u8,
    state: CoreState,
    /// (source core, source neuron) -> local axon slot
    axon_map: BTreeMap<(u8, u16), u32>,
    /// source core -> routers this core forwards that source's flits to
    relay: BTreeMap<u8, Vec<u8>>,
    /// outbound queue per adjacent router
    relay_queues: BTreeMap<u8, VecDeque<SpikeFlit>>,
}

/// One resolved output spike.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutputRecord {
    pub timestep: u32,
    pub core: u8,
    pub neuron: u16,
    pub global_neuron: u32,
}

/// Aggregate run telemetry.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunTelemetry {
    pub sops: u64,
    pub hops_p2p: u64,
    pub bcast_deliveries: u64,
    pub hops_merge: u64,
    pub drops: u64,
    pub cycles: u64,
    pub energy_pj: f64,
    pub gsops: f64,
    pub pj_per_sop: f64,
}

/// Result of a full inference run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<OutputRecord>,
    pub telemetry: RunTelemetry,
    pub overflowed: [bool; OUTPUT_BUFFERS],
}

/// The whole chip: 20 cores and 12 routers on the fullerene domain, plus
/// the controller-side state the ENU drives.
pub struct Fabric {
    cfg: SimConfig,
    network_id: u8,
    cores: Vec<FabricCore>,
    core_index: BTreeMap<u8, usize>,
    routers: Vec<RouterState>,
    /// (source core, source neuron) -> [(core index, axon)] for stimulus
    /// injection over the host bus.
    delivery: BTreeMap<(u8, u16), Vec<(usize, u32)>>,
    output_index: BTreeMap<(u8, u16), u16>,
    output_meta: Vec<IoLine>,
    buffers: [OutputBuffer; OUTPUT_BUFFERS],
    /// ENU core-enable flags, indexed 0..20.
    enabled: [bool; DOMAIN_CORES],
    started_mask: u8,
    barrier: TimestepBarrier,
    trace_by_t: BTreeMap<u32, Vec<(u8, u16)>>,
    total_timesteps: u32,
    collected: Vec<OutputRecord>,
    ledger: EnergyLedger,
    cycles_total: u64,
    threads: usize,
}

impl Fabric {
    /// Instantiate the fabric from a netlist. Cores come up disabled; a
    /// run (or an ENU script) enables them.
    pub fn from_netlist(netlist: &Netlist, cfg: &SimConfig) -> Result<Self> {
        let graph = topology::build_fullerene_domain();

        let mut routers = Vec::with_capacity(DOMAIN_ROUTERS);
        for r in 0..DOMAIN_ROUTERS {
            let node = topology::NodeId(r as u32);
            let mut neighbors = [0u8; 5];
            for (i, &n) in graph.neighbors(node).iter().enumerate() {
                neighbors[i] = n.0 as u8;
            }
            routers.push(RouterState::new(r as u8, neighbors, cfg));
        }

        let mut cores = Vec::new();
        let mut core_index = BTreeMap::new();
        for section in netlist.cores.values() {
            let id = section.id;
            if (id as usize) < DOMAIN_ROUTERS || (id as usize) >= DOMAIN_ROUTERS + DOMAIN_CORES {
                return Err(SimError::Configuration(format!(
                    "core id {id} outside the domain's core range 12..32"
                )));
            }
            let mut neurons = section.neuron_count_hint() as usize;
            for io in netlist.inputs.iter().chain(&netlist.outputs) {
                if io.core == id {
                    neurons = neurons.max(io.local_neuron as usize + 1);
                }
            }
            if neurons > cfg.neurons_per_core {
                return Err(SimError::Configuration(format!(
                    "core {id} needs {neurons} neurons, capacity is {}",
                    cfg.neurons_per_core
                )));
            }
            let mut params = CoreRegisterTable::new(id, section.n, section.w)?;
            params.threshold = section.threshold;
            params.leak = section.leak;
            params.reset_mode = section.reset;
            let codebook = WeightCodebook::new(section.codebook.clone(), section.w)?;
            let axon_count = section.axon_count() as usize;
            let mut state = CoreState::new(params, codebook, axon_count, neurons)?;
            for &(pre, post, index) in &section.synapses {
                state.synapses.set(pre as usize, post as usize, index, section.n)?;
            }
            let mut axon_map = BTreeMap::new();
            for &(axon, src_core, src_neuron) in &section.axons {
                if axon as usize >= axon_count {
                    return Err(SimError::Configuration(format!(
                        "core {id}: axon {axon} beyond table size {axon_count}"
                    )));
                }
                if axon_map.insert((src_core, src_neuron), axon).is_some() {
                    return Err(SimError::Configuration(format!(
                        "core {id}: duplicate axon mapping for ({src_core},{src_neuron})"
                    )));
                }
            }
            let idx = cores.len();
            cores.push(FabricCore {
                id,
                state,
                axon_map,
                relay: BTreeMap::new(),
                relay_queues: BTreeMap::new(),
            });
            core_index.insert(id, idx);
        }

        // relay tables and per-router outbound queues
        for relay in &netlist.relays {
            let Some(&ci) = core_index.get(&relay.core) else {
                return Err(SimError::Configuration(format!(
                    "relay line references unconfigured core {}",
                    relay.core
                )));
            };
            let node = topology::NodeId(relay.core as u32);
            let adjacent = graph
                .neighbors(node)
                .iter()
                .any(|n| n.0 as u8 == relay.via_router);
            if !adjacent {
                return Err(SimError::Configuration(format!(
                    "relay: router {} is not adjacent to core {}",
                    relay.via_router, relay.core
                )));
            }
            let entry = cores[ci].relay.entry(relay.src_core).or_default();
            if !entry.contains(&relay.via_router) {
                entry.push(relay.via_router);
                entry.sort_unstable();
            }
        }
        for core in &mut cores {
            let node = topology::NodeId(core.id as u32);
            for &r in graph.neighbors(node) {
                core.relay_queues.insert(r.0 as u8, VecDeque::new());
            }
        }

        // router matrices
        let mut per_router: BTreeMap<u8, Vec<crate::router::MatrixEntry>> = BTreeMap::new();
        for route in &netlist.routes {
            if route.router as usize >= DOMAIN_ROUTERS {
                return Err(SimError::Configuration(format!(
                    "route references router {} beyond 0..12",
                    route.router
                )));
            }
            let router = &routers[route.router as usize];
            let in_port = router.port_of(route.in_core).ok_or_else(|| {
                SimError::Configuration(format!(
                    "route: core {} is not a neighbor of router {}",
                    route.in_core, route.router
                ))
            })?;
            per_router.entry(route.router).or_default().push((
                in_port,
                route.slot as usize,
                route.dest_core,
                route.mode,
            ));
        }
        for (rid, entries) in per_router {
            routers[rid as usize].configure_matrix(&entries)?;
        }

        // stimulus delivery map and output index
        let mut delivery: BTreeMap<(u8, u16), Vec<(usize, u32)>> = BTreeMap::new();
        for (idx, core) in cores.iter().enumerate() {
            for (&(src_core, src_neuron), &axon) in &core.axon_map {
                delivery.entry((src_core, src_neuron)).or_default().push((idx, axon));
            }
        }
        let mut output_index = BTreeMap::new();
        for (i, io) in netlist.outputs.iter().enumerate() {
            if i >= 1 << 13 {
                return Err(SimError::Configuration(
                    "more than 8192 output neurons".into(),
                ));
            }
            if output_index.insert((io.core, io.local_neuron), i as u16).is_some() {
                return Err(SimError::Configuration(format!(
                    "duplicate output mapping for core {} neuron {}",
                    io.core, io.local_neuron
                )));
            }
        }

        Ok(Fabric {
            cfg: cfg.clone(),
            network_id: netlist.network_id,
            cores,
            core_index,
            routers,
            delivery,
            output_index,
            output_meta: netlist.outputs.clone(),
            buffers: Default::default(),
            enabled: [false; DOMAIN_CORES],
            started_mask: 0,
            barrier: TimestepBarrier::default(),
            trace_by_t: BTreeMap::new(),
            total_timesteps: 0,
            collected: Vec::new(),
            ledger: EnergyLedger::new(),
            cycles_total: 0,
            threads: 1,
        })
    }

    /// ENU core-enable: `core` is the instruction-operand index 0..20.
    pub fn enable_core(&mut self, core: u8) -> Result<()> {
        if core as usize >= DOMAIN_CORES {
            return Err(SimError::invalid(format!(
                "core index {core} out of range on a {DOMAIN_CORES}-core fabric"
            )));
        }
        self.enabled[core as usize] = true;
        if let Some(&ci) = self.core_index.get(&(core + CORE_ID_BASE as u8)) {
            self.cores[ci].state.params.enabled = true;
        }
        Ok(())
    }

    pub fn disable_core(&mut self, core: u8) -> Result<()> {
        if core as usize >= DOMAIN_CORES {
            return Err(SimError::invalid(format!("core index {core} out of range")));
        }
        self.enabled[core as usize] = false;
        if let Some(&ci) = self.core_index.get(&(core + CORE_ID_BASE as u8)) {
            self.cores[ci].state.params.enabled = false;
        }
        Ok(())
    }

    fn core_by_id(&mut self, id: u8) -> Result<&mut FabricCore> {
        let Some(&ci) = self.core_index.get(&id) else {
            return Err(SimError::Bounds(format!("core {id} is not configured")));
        };
        Ok(&mut self.cores[ci])
    }

    /// DMA load into a core's synapse index memory (IDMA) or membrane
    /// potentials (MPDMA). The destination core must be disabled.
    pub fn dma_load(&mut self, channel: DmaChannel<'_>) -> Result<()> {
        let core = self.core_by_id(channel.core)?;
        if core.state.params.enabled {
            return Err(SimError::Busy(format!(
                "core {} is enabled; disable it before DMA",
                channel.core
            )));
        }
        match channel.kind {
            DmaKind::Idma => {
                let n = core.state.params.weight_count;
                core.state.synapses.load_bytes(channel.offset, channel.bytes, n)
            }
            DmaKind::Mpdma => core.state.load_mps(channel.offset, channel.bytes),
        }
    }

    /// Read a core's synapse memory image (IDMA readback).
    pub fn synapse_image(&self, core: u8) -> Result<&[u8]> {
        let Some(&ci) = self.core_index.get(&core) else {
            return Err(SimError::Bounds(format!("core {core} is not configured")));
        };
        Ok(self.cores[ci].state.synapses.as_bytes())
    }

    /// Load the stimulus trace and arm a run of `timesteps` steps.
    pub fn load_run(
        &mut self,
        trace: &[(u32, u8, u16)],
        timesteps: u32,
        threads: usize,
    ) -> Result<()> {
        if timesteps > u16::MAX as u32 + 1 {
            return Err(SimError::invalid(
                "timestep count exceeds the 16-bit record range",
            ));
        }
        let mut by_t: BTreeMap<u32, Vec<(u8, u16)>> = BTreeMap::new();
        for &(t, core, neuron) in trace {
            if t >= timesteps {
                return Err(SimError::invalid(format!(
                    "trace event at timestep {t} beyond the {timesteps}-step run"
                )));
            }
            by_t.entry(t).or_default().push((core, neuron));
        }
        for events in by_t.values_mut() {
            events.sort_unstable();
        }
        self.trace_by_t = by_t;
        self.total_timesteps = timesteps;
        self.barrier = TimestepBarrier {
            current_timestep: 0,
            core_done: vec![false; self.cores.len()],
            host_asleep: false,
        };
        self.collected.clear();
        self.cycles_total = 0;
        self.ledger = EnergyLedger::new();
        self.threads = threads.max(1);
        Ok(())
    }

    pub fn started(&self) -> bool {
        self.started_mask & (1 << self.network_id) != 0
    }

    pub fn finished(&self) -> bool {
        self.barrier.current_timestep >= self.total_timesteps
    }

    pub fn current_timestep(&self) -> u32 {
        self.barrier.current_timestep
    }

    /// Advance one timestep: stage stimulus, swap the ping-pong banks,
    /// compute every enabled core, transport fired spikes until quiescent,
    /// then commit the barrier and drain the output buffers.
    pub fn step_timestep(&mut self) -> Result<()> {
        let t = self.barrier.current_timestep;
        self.barrier.core_done.iter_mut().for_each(|d| *d = false);

        // stimulus events for t arrive over the host bus into the staging
        // banks, then the banks swap at the timestep boundary
        if let Some(events) = self.trace_by_t.remove(&t) {
            for (core, neuron) in events {
                if let Some(targets) = self.delivery.get(&(core, neuron)) {
                    for &(ci, axon) in targets {
                        self.cores[ci].state.cache.stage(axon as usize)?;
                    }
                }
            }
        }
        for core in &mut self.cores {
            core.state.cache.swap();
        }

        // compute phase: enabled cores advance in parallel, results merge
        // in core-id order
        let cfg = self.cfg.clone();
        let results: Vec<Option<crate::neurocore::CoreTimestepResult>> = if self.threads > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(self.threads)
                .build()
                .map_err(|e| SimError::invalid(format!("thread pool: {e}")))?;
            pool.install(|| {
                self.cores
                    .par_iter_mut()
                    .map(|core| {
                        if core.state.params.enabled && core.state.neuron_count() > 0 {
                            Some(core.state.run_timestep(&cfg).expect("enabled core"))
                        } else {
                            None
                        }
                    })
                    .collect()
            })
        } else {
            self.cores
                .iter_mut()
                .map(|core| {
                    if core.state.params.enabled && core.state.neuron_count() > 0 {
                        Some(core.state.run_timestep(&cfg).expect("enabled core"))
                    } else {
                        None
                    }
                })
                .collect()
        };

        // collect fired spikes in canonical (core, neuron) order
        let mut compute_cycles_max = 0u64;
        for (ci, result) in results.iter().enumerate() {
            let Some(result) = result else { continue };
            compute_cycles_max = compute_cycles_max.max(result.cycles);
            self.ledger.add(&result.ledger);
            self.barrier.core_done[ci] = true;
            let core_id = self.cores[ci].id;
            for &neuron in &result.fired {
                if let Some(&out_idx) = self.output_index.get(&(core_id, neuron)) {
                    self.buffers[self.output_meta[out_idx as usize].buffer.unwrap_or(0) as usize]
                        .push(out_idx, t as u16);
                }
                let flit =
                    SpikeFlit { src_core: core_id, src_neuron: neuron, timestep: t, tag: None };
                // intra-core feedback stages directly
                if let Some(&axon) = self.cores[ci].axon_map.get(&(core_id, neuron)) {
                    self.cores[ci].state.cache.stage(axon as usize)?;
                }
                if let Some(routers) = self.cores[ci].relay.get(&core_id).cloned() {
                    for r in routers {
                        self.cores[ci]
                            .relay_queues
                            .get_mut(&r)
                            .expect("adjacent router")
                            .push_back(flit);
                    }
                }
            }
        }

        // transport: cores feed routers, routers tick, outputs land in the
        // next cores, until the NoC drains
        let transport_cycles = self.run_transport(t)?;

        // barrier commit
        let step_cycles = compute_cycles_max.max(transport_cycles);
        self.cycles_total += step_cycles;
        for (ci, result) in results.iter().enumerate() {
            match result {
                Some(r) => {
                    self.ledger.idle_cycles += step_cycles - r.cycles.min(step_cycles);
                }
                None => {
                    let _ = ci;
                    self.ledger.gated_cycles += step_cycles;
                }
            }
        }

        self.barrier.current_timestep = t + 1;
        Ok(())
    }

    /// Resolve and append all buffered output records to the collected
    /// trace. The run loop calls this every timestep; host-driven scripts
    /// leave the buffers for ReadOutput instead.
    pub fn drain_buffers_to_records(&mut self) {
        let mut rows: Vec<OutputRecord> = Vec::new();
        for b in 0..OUTPUT_BUFFERS {
            for (out_idx, ts) in self.buffers[b].drain() {
                let io = &self.output_meta[out_idx as usize];
                rows.push(OutputRecord {
                    timestep: ts as u32,
                    core: io.core,
                    neuron: io.local_neuron,
                    global_neuron: io.global_neuron,
                });
            }
        }
        rows.sort_unstable_by_key(|r| (r.timestep, r.core, r.neuron));
        self.collected.extend(rows);
    }

    /// Drive flits through the NoC until every queue and router is empty.
    /// Returns the cycles elapsed; aborts with the hung-port set if no
    /// progress is made within the watchdog budget.
    fn run_transport(&mut self, t: u32) -> Result<u64> {
        let mut cycles = 0u64;
        let mut stuck = 0u64;
        loop {
            let quiescent = self.cores.iter().all(|c| c.relay_queues.values().all(|q| q.is_empty()))
                && self.routers.iter().all(|r| r.is_idle());
            if quiescent {
                break;
            }

            let mut progress = 0u64;
            // cores push one flit per adjacent router per cycle
            for core in &mut self.cores {
                for (&rid, queue) in &mut core.relay_queues {
                    if let Some(&flit) = queue.front() {
                        let router = &mut self.routers[rid as usize];
                        let port = router.port_of(core.id).expect("core faces its router");
                        if router.accept_flit(port, flit) {
                            queue.pop_front();
                            progress += 1;
                        }
                    }
                }
            }
            // routers advance one cycle
            let before: u64 =
                self.routers.iter().map(|r| r.completed + r.grants + r.ledger.drops).sum();
            for router in &mut self.routers {
                router.tick(t);
            }
            let after: u64 =
                self.routers.iter().map(|r| r.completed + r.grants + r.ledger.drops).sum();
            progress += after - before;

            // router outputs land in the facing cores, one flit per port
            for rid in 0..self.routers.len() {
                for port in 0..crate::router::ROUTER_PORTS {
                    let dest_core = self.routers[rid].neighbors()[port];
                    let Some(&ci) = self.core_index.get(&dest_core) else {
                        // a router port may face an unconfigured core; any
                        // flit sent there is counted dropped
                        if self.routers[rid].pop_output(port).is_some() {
                            self.routers[rid].ledger.drops += 1;
                            progress += 1;
                        }
                        continue;
                    };
                    if let Some(flit) = self.routers[rid].pop_output(port) {
                        progress += 1;
                        let core = &mut self.cores[ci];
                        if let Some(&axon) =
                            core.axon_map.get(&(flit.src_core, flit.src_neuron))
                        {
                            core.state.cache.stage(axon as usize)?;
                        }
                        if let Some(routers) = core.relay.get(&flit.src_core).cloned() {
                            for r in routers {
                                core.relay_queues
                                    .get_mut(&r)
                                    .expect("adjacent router")
                                    .push_back(flit);
                            }
                        }
                    }
                }
            }

            cycles += 1;
            if progress == 0 {
                stuck += 1;
                if stuck > self.cfg.watchdog_cycles {
                    let mut hung = Vec::new();
                    for router in &mut self.routers {
                        for port in router.hangup_check(t) {
                            hung.push((router.id, port));
                        }
                    }
                    return Err(SimError::Deadlock(format!(
                        "no transport progress for {} cycles at timestep {t}; hung ports: {hung:?}",
                        self.cfg.watchdog_cycles
                    )));
                }
            } else {
                stuck = 0;
            }
        }
        Ok(cycles)
    }

    fn finish_output(&mut self) -> RunOutput {
        let router_ledger = self.routers.iter().fold(EnergyLedger::new(), |mut acc, r| {
            acc.add(&r.ledger);
            acc
        });
        let mut ledger = self.ledger;
        ledger.add(&router_ledger);
        let energy = ledger.total_energy_pj(&self.cfg);
        let telemetry = RunTelemetry {
            sops: ledger.sops,
            hops_p2p: ledger.hops_p2p,
            bcast_deliveries: ledger.bcast_deliveries,
            hops_merge: ledger.hops_merge,
            drops: ledger.drops,
            cycles: self.cycles_total,
            energy_pj: energy,
            gsops: if self.cycles_total == 0 {
                0.0
            } else {
                ledger.sops as f64 / self.cycles_total as f64 * self.cfg.freq_mhz / 1000.0
            },
            pj_per_sop: if ledger.sops == 0 { f64::NAN } else { energy / ledger.sops as f64 },
        };
        RunOutput {
            records: std::mem::take(&mut self.collected),
            telemetry,
            overflowed: std::array::from_fn(|i| self.buffers[i].overflowed),
        }
    }

    /// Full inference run: enable every configured core, start the
    /// netlist's network, advance all timesteps, and report the collected
    /// spikes and telemetry. Deterministic for any `threads` count.
    pub fn run_inference(
        &mut self,
        trace: &[(u32, u8, u16)],
        timesteps: u32,
        threads: usize,
    ) -> Result<RunOutput> {
        self.load_run(trace, timesteps, threads)?;
        for i in 0..self.cores.len() {
            let idx = self.cores[i].id - CORE_ID_BASE as u8;
            self.enable_core(idx)?;
        }
        self.started_mask |= 1 << self.network_id;
        while !self.finished() {
            self.step_timestep()?;
            self.drain_buffers_to_records();
        }
        Ok(self.finish_output())
    }
}

// ---------------------------------------------------------------------------
// Host program execution
// ---------------------------------------------------------------------------

/// Host memory image the InitParams DMA descriptors read from.
#[derive(Debug, Clone, Default)]
pub struct HostMemory(pub Vec<u8>);

/// What a host script run produced.
#[derive(Debug, Clone, Default)]
pub struct HostReport {
    /// Raw dumps collected by ReadOutput, in execution order.
    pub outputs: Vec<(u8, Vec<u8>)>,
    /// Timesteps at which the host woke from sleep.
    pub wakes: Vec<u32>,
}

enum WakeFilter {
    OnFinish,
    OnTimestep(u32),
}

/// Execute a script of neuromorphic instructions against the fabric.
/// `Sleep` gates the host clock until the armed wake signal: a
/// timestep-switch at the armed timestep, or network-computing-finish
/// (the default). Sleeping with no started network can never wake and is
/// reported as a watchdog error.
pub fn host_program(
    fabric: &mut Fabric,
    script: &[NeuromorphicInstruction],
    host_mem: &HostMemory,
    trace: &[(u32, u8, u16)],
    timesteps: u32,
) -> Result<HostReport> {
    use NeuromorphicInstruction::*;
    fabric.load_run(trace, timesteps, 1)?;
    let mut report = HostReport::default();
    let mut filter = WakeFilter::OnFinish;
    for &instr in script {
        match instr {
            InitParams { channel, core, addr, len } => {
                if core as usize >= DOMAIN_CORES {
                    return Err(SimError::invalid(format!("core index {core} out of range")));
                }
                let end = addr as usize + len as usize;
                if end > host_mem.0.len() {
                    return Err(SimError::Bounds(format!(
                        "InitParams reads host memory [{addr}, {end}) beyond {}",
                        host_mem.0.len()
                    )));
                }
                fabric.dma_load(DmaChannel {
                    kind: channel,
                    core: core + CORE_ID_BASE as u8,
                    offset: 0,
                    bytes: &host_mem.0[addr as usize..end],
                })?;
            }
            CoreEnable { core } => fabric.enable_core(core)?,
            NetworkStart { mask } => fabric.started_mask |= mask,
            WakeOnTimestep { timestep } => filter = WakeFilter::OnTimestep(timestep),
            WakeOnFinish => filter = WakeFilter::OnFinish,
            Sleep => {
                if !fabric.started() {
                    return Err(SimError::Deadlock(
                        "host slept with no started network; watchdog fired".into(),
                    ));
                }
                fabric.barrier.host_asleep = true;
                loop {
                    if fabric.finished() {
                        break;
                    }
                    fabric.step_timestep()?;
                    if let WakeFilter::OnTimestep(t) = filter {
                        if fabric.current_timestep() > t {
                            break;
                        }
                    }
                }
                fabric.barrier.host_asleep = false;
                report.wakes.push(fabric.current_timestep());
            }
            ReadOutput { buffer } => {
                if buffer as usize >= OUTPUT_BUFFERS {
                    return Err(SimError::invalid(format!("output buffer {buffer} out of range")));
                }
                // reading an empty buffer yields an empty dump, not an error
                let bytes = fabric.buffers[buffer as usize].drain_bytes();
                report.outputs.push((buffer, bytes));
            }
        }
    }
    Ok(report)
}
