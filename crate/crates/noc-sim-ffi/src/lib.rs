//! C ABI for the noc-sim simulator: opaque handles, status codes, and a
//! thread-local last-error message. The header `include/noc_sim.h` is
//! generated by cbindgen at build time.
//!
//! Conventions: every function is null-safe and returns a `NocStatus`
//! (or null for constructors); on failure the message is retrievable via
//! [`noc_sim_last_error`]. Paths are NUL-terminated UTF-8.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::path::{Path, PathBuf};

use noc_sim::compiler;
use noc_sim::config::SimConfig;
use noc_sim::error::SimError;
use noc_sim::fabric::Fabric;
use noc_sim::netlist::Netlist;
use noc_sim::topology;
use noc_sim::trace;

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NocStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    ModelError = 4,
    IoError = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &SimError) -> NocStatus {
    match err {
        SimError::InvalidArgument(_) => NocStatus::InvalidArgument,
        SimError::Parse(_) => NocStatus::ParseError,
        SimError::Io { .. } => NocStatus::IoError,
        _ => NocStatus::ModelError,
    }
}

fn fail(err: SimError) -> NocStatus {
    let code = status_of(&err);
    set_error(err.to_string());
    code
}

/// Copy the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `cap`). Returns the full message length in
/// bytes, so callers can size a retry; 0 means no pending error.
///
/// # Safety
/// `buf` must point to `cap` writable bytes, or be null (query mode).
#[no_mangle]
pub unsafe extern "C" fn noc_sim_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Crate version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn noc_sim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Topology metrics of the fullerene routing domain.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NocTopologyStats {
    pub nodes: u32,
    pub edges: u32,
    pub mean_degree: f64,
    pub degree_variance: f64,
    pub mean_core_pair_hops: f64,
    pub diameter_hops: u32,
}

/// Fill `out` with the fullerene domain's published metrics.
///
/// # Safety
/// `out` must point to a writable `NocTopologyStats`.
#[no_mangle]
pub unsafe extern "C" fn noc_topology_fullerene_stats(out: *mut NocTopologyStats) -> NocStatus {
    if out.is_null() {
        set_error("null stats pointer");
        return NocStatus::NullPointer;
    }
    let g = topology::build_fullerene_domain();
    let degrees = topology::degree_stats(&g).expect("non-empty domain");
    let latency = topology::latency_stats(&g).expect("connected domain");
    *out = NocTopologyStats {
        nodes: g.node_count() as u32,
        edges: g.edge_count() as u32,
        mean_degree: *degrees.mean_degree.numer() as f64 / *degrees.mean_degree.denom() as f64,
        degree_variance: *degrees.degree_variance.numer() as f64
            / *degrees.degree_variance.denom() as f64,
        mean_core_pair_hops: *latency.mean_core_pair_hops.numer() as f64
            / *latency.mean_core_pair_hops.denom() as f64,
        diameter_hops: latency.diameter_hops,
    };
    NocStatus::Ok
}

/// Opaque simulator handle: a parsed netlist plus its configuration.
pub struct NocSim {
    cfg: SimConfig,
    netlist: Netlist,
}

unsafe fn path_arg(ptr: *const c_char, what: &str) -> Result<PathBuf, NocStatus> {
    if ptr.is_null() {
        set_error(format!("null {what} path"));
        return Err(NocStatus::NullPointer);
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => {
            set_error(format!("{what} path is not valid UTF-8"));
            Err(NocStatus::InvalidArgument)
        }
    }
}

/// Create a simulator from a netlist file. `config_path` may be null for
/// the shipped defaults. Returns null on failure; see
/// [`noc_sim_last_error`].
///
/// # Safety
/// Both pointers must be null or NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn noc_sim_new(
    netlist_path: *const c_char,
    config_path: *const c_char,
) -> *mut NocSim {
    let netlist_path = match path_arg(netlist_path, "netlist") {
        Ok(p) => p,
        Err(_) => return std::ptr::null_mut(),
    };
    let cfg = if config_path.is_null() {
        SimConfig::default()
    } else {
        let p = match path_arg(config_path, "config") {
            Ok(p) => p,
            Err(_) => return std::ptr::null_mut(),
        };
        match SimConfig::from_file(&p) {
            Ok(c) => c,
            Err(e) => {
                fail(e);
                return std::ptr::null_mut();
            }
        }
    };
    let netlist = match Netlist::parse_file(&netlist_path) {
        Ok(n) => n,
        Err(e) => {
            fail(e);
            return std::ptr::null_mut();
        }
    };
    // validate eagerly so construction errors surface here, not at run
    if let Err(e) = Fabric::from_netlist(&netlist, &cfg) {
        fail(e);
        return std::ptr::null_mut();
    }
    Box::into_raw(Box::new(NocSim { cfg, netlist }))
}

/// Destroy a simulator handle. Null is tolerated.
///
/// # Safety
/// `sim` must be null or a pointer from [`noc_sim_new`], freed once.
#[no_mangle]
pub unsafe extern "C" fn noc_sim_free(sim: *mut NocSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Run telemetry totals, C-friendly.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NocRunTelemetry {
    pub sops: u64,
    pub hops_p2p: u64,
    pub bcast_deliveries: u64,
    pub hops_merge: u64,
    pub drops: u64,
    pub cycles: u64,
    pub energy_pj: f64,
    pub gsops: f64,
    pub pj_per_sop: f64,
    pub output_spikes: u64,
}

/// Run inference: read the input trace CSV, advance `timesteps`, write
/// the output spike trace and telemetry CSVs, and optionally report the
/// totals through `telemetry_out` (nullable).
///
/// # Safety
/// `sim` must come from [`noc_sim_new`]; path pointers must be
/// NUL-terminated; `telemetry_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn noc_sim_run(
    sim: *mut NocSim,
    trace_path: *const c_char,
    timesteps: u32,
    threads: u32,
    spikes_out_path: *const c_char,
    telemetry_out_path: *const c_char,
    telemetry_out: *mut NocRunTelemetry,
) -> NocStatus {
    let Some(sim) = sim.as_mut() else {
        set_error("null simulator handle");
        return NocStatus::NullPointer;
    };
    let trace_path = match path_arg(trace_path, "trace") {
        Ok(p) => p,
        Err(s) => return s,
    };
    let spikes_path = match path_arg(spikes_out_path, "spikes output") {
        Ok(p) => p,
        Err(s) => return s,
    };
    let telem_path = match path_arg(telemetry_out_path, "telemetry output") {
        Ok(p) => p,
        Err(s) => return s,
    };

    let input = match trace::read_trace_file(&trace_path) {
        Ok(t) => t,
        Err(e) => return fail(e),
    };
    let mut fabric = match Fabric::from_netlist(&sim.netlist, &sim.cfg) {
        Ok(f) => f,
        Err(e) => return fail(e),
    };
    let output = match fabric.run_inference(&input, timesteps, threads.max(1) as usize) {
        Ok(o) => o,
        Err(e) => return fail(e),
    };
    if let Err(e) = trace::write_file(&spikes_path, &trace::write_output_trace(&output.records)) {
        return fail(e);
    }
    if let Err(e) = trace::write_file(&telem_path, &trace::write_telemetry(&output.telemetry)) {
        return fail(e);
    }
    if !telemetry_out.is_null() {
        let t = &output.telemetry;
        *telemetry_out = NocRunTelemetry {
            sops: t.sops,
            hops_p2p: t.hops_p2p,
            bcast_deliveries: t.bcast_deliveries,
            hops_merge: t.hops_merge,
            drops: t.drops,
            cycles: t.cycles,
            energy_pj: t.energy_pj,
            gsops: t.gsops,
            pj_per_sop: t.pj_per_sop,
            output_spikes: output.records.len() as u64,
        };
    }
    NocStatus::Ok
}

/// Lloyd-Max quantization of `len` weights into an `n`-entry codebook of
/// `w`-bit integers. `out_levels` receives `n` values; `out_scale` the
/// real weight per integer unit.
///
/// # Safety
/// `weights` must point to `len` doubles and `out_levels` to `n` writable
/// i32 slots; `out_scale` to one writable double.
#[no_mangle]
pub unsafe extern "C" fn noc_quantize(
    weights: *const f64,
    len: usize,
    n: u8,
    w: u8,
    out_levels: *mut i32,
    out_scale: *mut f64,
) -> NocStatus {
    if weights.is_null() || out_levels.is_null() || out_scale.is_null() {
        set_error("null buffer");
        return NocStatus::NullPointer;
    }
    let slice = std::slice::from_raw_parts(weights, len);
    match compiler::quantize_codebook(slice, n, w) {
        Ok(q) => {
            std::ptr::copy_nonoverlapping(q.codebook_int.as_ptr(), out_levels, n as usize);
            *out_scale = q.scale;
            NocStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Compile a network description file straight to a netlist file.
///
/// # Safety
/// Both paths must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn noc_compile(
    network_path: *const c_char,
    netlist_out_path: *const c_char,
    n: u8,
    w: u8,
    neurons_per_core: u32,
) -> NocStatus {
    let net_path = match path_arg(network_path, "network") {
        Ok(p) => p,
        Err(s) => return s,
    };
    let out_path = match path_arg(netlist_out_path, "netlist output") {
        Ok(p) => p,
        Err(s) => return s,
    };
    let text = match std::fs::read_to_string(&net_path) {
        Ok(t) => t,
        Err(e) => return fail(SimError::io(net_path.display().to_string(), e)),
    };
    let net = match compiler::NetworkDescription::parse(&text) {
        Ok(n) => n,
        Err(e) => return fail(e),
    };
    let compiled = match compiler::compile(&net, n, w, neurons_per_core as usize, 0) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    match compiled.netlist.write_file(Path::new(&out_path)) {
        Ok(()) => NocStatus::Ok,
        Err(e) => fail(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    fn repo_file(name: &str) -> CString {
        let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(name);
        CString::new(p.to_str().unwrap()).unwrap()
    }

    #[test]
    fn version_is_nul_terminated() {
        let v = unsafe { CStr::from_ptr(noc_sim_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }

    #[test]
    fn topology_stats_match_published_values() {
        let mut stats = NocTopologyStats {
            nodes: 0,
            edges: 0,
            mean_degree: 0.0,
            degree_variance: 0.0,
            mean_core_pair_hops: 0.0,
            diameter_hops: 0,
        };
        let status = unsafe { noc_topology_fullerene_stats(&mut stats) };
        assert_eq!(status, NocStatus::Ok);
        assert_eq!(stats.nodes, 32);
        assert_eq!(stats.edges, 60);
        assert_eq!(stats.mean_degree, 3.75);
        assert_eq!(stats.degree_variance, 0.9375);
        assert!((stats.mean_core_pair_hops - 60.0 / 19.0).abs() < 1e-12);
        assert_eq!(stats.diameter_hops, 6);
        assert_eq!(
            unsafe { noc_topology_fullerene_stats(std::ptr::null_mut()) },
            NocStatus::NullPointer
        );
    }

    #[test]
    fn full_run_through_the_c_surface() {
        let dir = tempfile::tempdir().unwrap();
        let netlist = repo_file("data/example.net");
        let trace_file = repo_file("data/example-trace.csv");
        let spikes = CString::new(dir.path().join("spikes.csv").to_str().unwrap()).unwrap();
        let telem = CString::new(dir.path().join("telem.csv").to_str().unwrap()).unwrap();

        let sim = unsafe { noc_sim_new(netlist.as_ptr(), std::ptr::null()) };
        assert!(!sim.is_null());
        let mut t = NocRunTelemetry {
            sops: 0,
            hops_p2p: 0,
            bcast_deliveries: 0,
            hops_merge: 0,
            drops: 0,
            cycles: 0,
            energy_pj: 0.0,
            gsops: 0.0,
            pj_per_sop: 0.0,
            output_spikes: 0,
        };
        let status = unsafe {
            noc_sim_run(sim, trace_file.as_ptr(), 12, 2, spikes.as_ptr(), telem.as_ptr(), &mut t)
        };
        assert_eq!(status, NocStatus::Ok);
        assert!(t.sops > 0);
        assert!(t.output_spikes > 0);
        unsafe { noc_sim_free(sim) };

        // byte-identical to the committed golden file
        let got = std::fs::read_to_string(dir.path().join("spikes.csv")).unwrap();
        let golden_path = Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("../..")
            .join("data/example-spikes-golden.csv");
        let expected = std::fs::read_to_string(golden_path).unwrap();
        assert_eq!(got, expected);
    }

    #[test]
    fn errors_surface_through_last_error() {
        let missing = CString::new("/nonexistent/netlist.net").unwrap();
        let sim = unsafe { noc_sim_new(missing.as_ptr(), std::ptr::null()) };
        assert!(sim.is_null());
        let mut buf = vec![0u8; 256];
        let len = unsafe { noc_sim_last_error(buf.as_mut_ptr() as *mut c_char, buf.len()) };
        assert!(len > 0);
        let msg = CStr::from_bytes_until_nul(&buf).unwrap().to_str().unwrap();
        assert!(msg.contains("netlist.net"), "{msg}");
        // null handle is caught, not dereferenced
        assert_eq!(
            unsafe {
                noc_sim_run(
                    std::ptr::null_mut(),
                    missing.as_ptr(),
                    1,
                    1,
                    missing.as_ptr(),
                    missing.as_ptr(),
                    std::ptr::null_mut(),
                )
            },
            NocStatus::NullPointer
        );
    }

    #[test]
    fn quantize_through_the_c_surface() {
        let weights: Vec<f64> = (0..100).map(|i| (i as f64 * 0.13).sin()).collect();
        let mut levels = vec![0i32; 16];
        let mut scale = 0.0f64;
        let status = unsafe {
            noc_quantize(weights.as_ptr(), weights.len(), 16, 8, levels.as_mut_ptr(), &mut scale)
        };
        assert_eq!(status, NocStatus::Ok);
        assert!(scale > 0.0);
        assert!(levels.iter().any(|&v| v != 0));
        // invalid N is rejected with a status, not a crash
        let status = unsafe {
            noc_quantize(weights.as_ptr(), weights.len(), 5, 8, levels.as_mut_ptr(), &mut scale)
        };
        assert_eq!(status, NocStatus::InvalidArgument);
    }

    #[test]
    fn compile_through_the_c_surface() {
        let dir = tempfile::tempdir().unwrap();
        let net = repo_file("data/example-net.txt");
        let out = CString::new(dir.path().join("out.net").to_str().unwrap()).unwrap();
        let status = unsafe { noc_compile(net.as_ptr(), out.as_ptr(), 16, 8, 256) };
        assert_eq!(status, NocStatus::Ok);
        let emitted = std::fs::read_to_string(dir.path().join("out.net")).unwrap();
        let committed_path =
            Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join("data/example.net");
        assert_eq!(emitted, std::fs::read_to_string(committed_path).unwrap());
    }

    #[test]
    fn generated_header_exists_and_names_the_surface() {
        let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/noc_sim.h");
        let text = std::fs::read_to_string(&header).expect("cbindgen header generated at build");
        for symbol in [
            "noc_sim_new",
            "noc_sim_free",
            "noc_sim_run",
            "noc_sim_last_error",
            "noc_quantize",
            "noc_compile",
            "noc_topology_fullerene_stats",
            "NocStatus",
            "NocRunTelemetry",
        ] {
            assert!(text.contains(symbol), "header missing {symbol}");
        }
    }
}
