//! Command implementations behind the `noc-sim` binary.
//!
//! Exit-code contract: 0 success, 1 model/runtime errors, 2 usage errors.
//! Every command writes a `manifest.txt` beside its outputs echoing the
//! resolved configuration, the seed, and the crate version.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::compiler::{self, NetworkDescription};
use crate::config::{SimConfig, CONFIG_ENV_VAR};
use crate::error::SimError;
use crate::fabric::Fabric;
use crate::netlist::Netlist;
use crate::neurocore;
use crate::topology::{self, TopologyGraph};
use crate::trace;
use crate::traffic::{self, TrafficPattern};

/// CLI-level error, carrying the exit code distinction.
#[derive(Debug)]
pub enum CliError {
    /// Bad invocation: exit code 2.
    Usage(String),
    /// Model or I/O failure: exit code 1.
    Model(SimError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Model(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Model(e) => write!(f, "{e}"),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InvalidArgument(msg) => CliError::Usage(msg),
            other => CliError::Model(other),
        }
    }
}

type CliResult = Result<(), CliError>;

/// Flags shared by every subcommand.
#[derive(Debug, Clone)]
pub struct GlobalArgs {
    pub config: Option<PathBuf>,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl GlobalArgs {
    /// Resolve the configuration: `--config`, then `NOC_SIM_CONFIG`, then
    /// the shipped defaults.
    pub fn load_config(&self) -> Result<SimConfig, CliError> {
        let path = self
            .config
            .clone()
            .or_else(|| std::env::var_os(CONFIG_ENV_VAR).map(PathBuf::from));
        match path {
            Some(p) => Ok(SimConfig::from_file(&p).map_err(CliError::Model)?),
            None => Ok(SimConfig::default()),
        }
    }

    fn out_path(&self, name: &Path) -> PathBuf {
        if name.is_absolute() {
            name.to_path_buf()
        } else {
            self.out_dir.join(name)
        }
    }

    fn write_manifest(&self, cfg: &SimConfig, command: &str) -> CliResult {
        let mut s = String::new();
        let _ = writeln!(s, "version = {}", crate::VERSION);
        let _ = writeln!(s, "command = {command}");
        let _ = writeln!(s, "seed = {}", self.seed);
        s.push_str(&cfg.to_text());
        trace::write_file(&self.out_path(Path::new("manifest.txt")), &s)
            .map_err(CliError::Model)
    }
}

fn parse_dims(dims: &Option<String>, what: &str) -> Result<(usize, usize), CliError> {
    let Some(d) = dims else {
        return Err(CliError::Usage(format!("--dims WxH is required for {what}")));
    };
    let parts: Vec<&str> = d.split('x').collect();
    if parts.len() != 2 {
        return Err(CliError::Usage(format!("--dims must look like 4x5, got {d:?}")));
    }
    let w = parts[0].parse().map_err(|_| CliError::Usage(format!("bad dims {d:?}")))?;
    let h = parts[1].parse().map_err(|_| CliError::Usage(format!("bad dims {d:?}")))?;
    Ok((w, h))
}

/// Selectable topology kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopoKind {
    Fullerene,
    Mesh,
    Tree,
    Torus,
}

/// `topo-stats`: build a topology, measure it, emit the stats CSV plus
/// degree/hop histograms, and optionally export the graph itself.
#[allow(clippy::too_many_arguments)]
pub fn cmd_topo_stats(
    global: &GlobalArgs,
    kind: TopoKind,
    dims: Option<String>,
    level2: bool,
    attach_cores: bool,
    export: Option<String>,
    out: PathBuf,
) -> CliResult {
    let cfg = global.load_config()?;
    let mut graph: TopologyGraph = match kind {
        TopoKind::Fullerene => topology::build_fullerene_domain(),
        TopoKind::Mesh => {
            let (w, h) = parse_dims(&dims, "mesh")?;
            topology::build_mesh(w, h)?
        }
        TopoKind::Tree => {
            let (fanout, depth) = parse_dims(&dims, "tree (fanout x depth)")?;
            topology::build_tree(fanout, depth)?
        }
        TopoKind::Torus => {
            let (w, h) = parse_dims(&dims, "torus")?;
            topology::build_torus(w, h)?
        }
    };
    if attach_cores {
        if kind == TopoKind::Fullerene {
            return Err(CliError::Usage(
                "--attach-cores applies to the baseline topologies only".into(),
            ));
        }
        graph = topology::attach_cores(&graph);
    }
    if level2 {
        if kind != TopoKind::Fullerene {
            return Err(CliError::Usage("--level2 applies to the fullerene topology".into()));
        }
        graph = topology::attach_level2(&graph)?;
    }

    let degrees = topology::degree_stats(&graph)?;
    let latency = topology::latency_stats(&graph)?;

    let mut csv = String::from(
        "name,nodes,edges,mean_degree,degree_variance,mean_core_pair_hops,diameter_hops,\
         mean_degree_exact,degree_variance_exact,mean_core_pair_hops_exact\n",
    );
    let to_f = |r: &num_rational::Ratio<i64>| *r.numer() as f64 / *r.denom() as f64;
    let _ = writeln!(
        csv,
        "{},{},{},{},{},{},{},{}/{},{}/{},{}/{}",
        graph.name(),
        graph.node_count(),
        graph.edge_count(),
        to_f(&degrees.mean_degree),
        to_f(&degrees.degree_variance),
        to_f(&latency.mean_core_pair_hops),
        latency.diameter_hops,
        degrees.mean_degree.numer(),
        degrees.mean_degree.denom(),
        degrees.degree_variance.numer(),
        degrees.degree_variance.denom(),
        latency.mean_core_pair_hops.numer(),
        latency.mean_core_pair_hops.denom(),
    );
    trace::write_file(&global.out_path(&out), &csv).map_err(CliError::Model)?;

    let mut hist = String::from("degree,count\n");
    for (d, c) in &degrees.degree_histogram {
        let _ = writeln!(hist, "{d},{c}");
    }
    trace::write_file(&global.out_path(Path::new("degree_hist.csv")), &hist)
        .map_err(CliError::Model)?;
    let mut hist = String::from("hops,pairs\n");
    for (h, c) in &latency.histogram {
        let _ = writeln!(hist, "{h},{c}");
    }
    trace::write_file(&global.out_path(Path::new("hops_hist.csv")), &hist)
        .map_err(CliError::Model)?;

    if let Some(prefix) = export {
        trace::write_file(
            &global.out_path(Path::new(&format!("{prefix}.edges"))),
            &graph.to_edge_list(),
        )
        .map_err(CliError::Model)?;
        trace::write_file(
            &global.out_path(Path::new(&format!("{prefix}.kinds"))),
            &graph.to_kind_list(),
        )
        .map_err(CliError::Model)?;
    }
    global.write_manifest(&cfg, "topo-stats")
}

/// `traffic`: synthetic traffic sweep over the router fabric.
pub fn cmd_traffic(
    global: &GlobalArgs,
    pattern: TrafficPattern,
    rate: f64,
    cycles: u64,
    out_prefix: String,
) -> CliResult {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(CliError::Usage(format!("--rate must be in (0, 1], got {rate}")));
    }
    if cycles == 0 {
        return Err(CliError::Usage("--cycles must be positive".into()));
    }
    let cfg = global.load_config()?;
    let sample_every = (cycles / 200).max(1);
    let report = traffic::run_traffic(pattern, rate, cycles, global.seed, &cfg, sample_every)
        .map_err(CliError::from)?;

    let mut csv = String::from("cycle,router_id,grants,drops,occupancy,energy_pj\n");
    for s in &report.samples {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            s.cycle, s.router_id, s.grants, s.drops, s.occupancy, s.energy_pj
        );
    }
    trace::write_file(&global.out_path(Path::new(&format!("{out_prefix}_cycles.csv"))), &csv)
        .map_err(CliError::Model)?;

    let mut csv = String::from("router_id,throughput,grants,drops,energy_pj\n");
    for r in &report.routers {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            r.router_id, r.throughput, r.grants, r.drops, r.energy_pj
        );
    }
    let _ = writeln!(
        csv,
        "aggregate,{},{},{},{}",
        report.aggregate_throughput, report.injected, report.delivered, report.total_energy_pj
    );
    let _ = writeln!(csv, "mean_latency,{},,,", report.mean_latency);
    trace::write_file(&global.out_path(Path::new(&format!("{out_prefix}_summary.csv"))), &csv)
        .map_err(CliError::Model)?;
    global.write_manifest(&cfg, "traffic")
}

/// `sweep-sparsity`: the core efficiency curve at 1% steps.
pub fn cmd_sweep_sparsity(global: &GlobalArgs, out: PathBuf) -> CliResult {
    let cfg = global.load_config()?;
    let points = neurocore::efficiency_curve(&cfg).map_err(CliError::from)?;
    let mut csv = String::from(
        "sparsity_pct,sops,cycles,baseline_cycles,gsops,pj_per_sop,baseline_pj_per_sop,energy_ratio\n",
    );
    for p in &points {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            p.sparsity_pct,
            p.sops,
            p.cycles,
            p.baseline_cycles,
            p.gsops,
            p.pj_per_sop,
            p.baseline_pj_per_sop,
            p.energy_ratio
        );
    }
    trace::write_file(&global.out_path(&out), &csv).map_err(CliError::Model)?;
    global.write_manifest(&cfg, "sweep-sparsity")
}

/// `quantize`: weights file in, codebook CSV out.
pub fn cmd_quantize(
    global: &GlobalArgs,
    input: PathBuf,
    n: u8,
    w: u8,
    out: PathBuf,
) -> CliResult {
    let cfg = global.load_config()?;
    let text = std::fs::read_to_string(&input)
        .map_err(|e| CliError::Model(SimError::io(input.display().to_string(), e)))?;
    let mut weights = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| {
            CliError::Model(SimError::Parse(format!(
                "{} line {}: bad weight {line:?}",
                input.display(),
                idx + 1
            )))
        })?;
        weights.push(v);
    }
    let q = compiler::quantize_codebook(&weights, n, w).map_err(CliError::from)?;
    let mut csv = String::from("index,level,scale,dequantized\n");
    for (i, &v) in q.codebook_int.iter().enumerate() {
        let _ = writeln!(csv, "{i},{v},{},{}", q.scale, v as f64 * q.scale);
    }
    trace::write_file(&global.out_path(&out), &csv).map_err(CliError::Model)?;
    let mut manifest_note = format!(
        "quantize --in {} --N {n} --W {w}: mse = {}, kmeans_mse = {}, uniform_mse = {}, occupancy = {}",
        input.display(),
        q.mse,
        q.kmeans_mse,
        q.uniform_mse,
        q.occupancy
    );
    manifest_note.truncate(512);
    global.write_manifest(&cfg, &manifest_note)
}

/// `compile`: network description in, netlist out.
#[allow(clippy::too_many_arguments)]
pub fn cmd_compile(
    global: &GlobalArgs,
    net_path: PathBuf,
    topology_name: String,
    out: PathBuf,
    n: u8,
    w: u8,
    neurons_per_core: usize,
    network: u8,
) -> CliResult {
    if topology_name != "fullerene" {
        return Err(CliError::Usage(format!(
            "only the fullerene topology is compilable, got {topology_name:?}"
        )));
    }
    let cfg = global.load_config()?;
    let text = std::fs::read_to_string(&net_path)
        .map_err(|e| CliError::Model(SimError::io(net_path.display().to_string(), e)))?;
    let net = NetworkDescription::parse(&text).map_err(CliError::Model)?;
    let compiled =
        compiler::compile(&net, n, w, neurons_per_core, network).map_err(CliError::Model)?;
    compiled.netlist.write_file(&global.out_path(&out)).map_err(CliError::Model)?;
    global.write_manifest(&cfg, "compile")
}

/// `run`: netlist plus input trace in, spike trace plus telemetry out.
#[allow(clippy::too_many_arguments)]
pub fn cmd_run(
    global: &GlobalArgs,
    netlist_path: PathBuf,
    trace_path: PathBuf,
    timesteps: u32,
    out: PathBuf,
    telemetry_out: PathBuf,
    threads: usize,
) -> CliResult {
    let cfg = global.load_config()?;
    let netlist = Netlist::parse_file(&netlist_path).map_err(CliError::Model)?;
    let input = trace::read_trace_file(&trace_path).map_err(CliError::Model)?;
    let mut fabric = Fabric::from_netlist(&netlist, &cfg).map_err(CliError::Model)?;
    let output = fabric.run_inference(&input, timesteps, threads).map_err(CliError::Model)?;
    trace::write_file(&global.out_path(&out), &trace::write_output_trace(&output.records))
        .map_err(CliError::Model)?;
    trace::write_file(
        &global.out_path(&telemetry_out),
        &trace::write_telemetry(&output.telemetry),
    )
    .map_err(CliError::Model)?;
    global.write_manifest(&cfg, "run")
}
