//! Cycle-approximate simulator for a heterogeneous neuromorphic SoC built
//! around a fullerene-like network-on-chip: 20 spiking-neural-network cores
//! and 12 connection-matrix routers, plus the offline toolchain that
//! quantizes and maps networks onto the fabric.
//!
//! The crate is organized along the hardware boundaries:
//!
//! * [`topology`] — interconnect graph construction and metrics
//! * [`router`] — the multi-mode connection-matrix router (CMRouter)
//! * [`neurocore`] — one neuromorphic core: zero-skip scan, codebook
//!   synapse accumulation, LIF neuron update, pipeline timing
//! * [`fabric`] — system integration: instruction decode, DMA, timestep
//!   barrier, output buffers, and the end-to-end run loop
//! * [`compiler`] — weight quantization, placement, route synthesis,
//!   netlist emission, and the golden sequential evaluator
//! * [`traffic`] — synthetic traffic harness for router measurements
//!
//! The `noc-sim` binary exposes all of it as subcommands; see [`cli`].

pub mod cli;
pub mod compiler;
pub mod config;
pub mod energy;
pub mod error;
pub mod fabric;
pub mod netlist;
pub mod neurocore;
pub mod router;
pub mod topology;
pub mod trace;
pub mod traffic;

pub use config::SimConfig;
pub use energy::EnergyLedger;
pub use error::SimError;

/// Crate version string, echoed into run manifests and the FFI surface.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
