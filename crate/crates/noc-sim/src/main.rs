use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use noc_sim::cli::{self, GlobalArgs, TopoKind};
use noc_sim::traffic::TrafficPattern;

#[derive(Parser)]
#[command(
    name = "noc-sim",
    version,
    about = "Neuromorphic SoC simulator: fullerene NoC, zero-skip SNN cores, \
             compiler toolchain and telemetry"
)]
struct Cli {
    /// Config file (key = value); NOC_SIM_CONFIG is the fallback.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for every randomized input.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Directory receiving outputs and the run manifest.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TopologyArg {
    Fullerene,
    Mesh,
    Tree,
    Torus,
}

#[derive(Clone, Copy, ValueEnum)]
enum PatternArg {
    UniformRandom,
    Hotspot,
    Neighbor,
}

#[derive(Subcommand)]
enum Command {
    /// Topology metrics: node degrees, core-pair hop distances, histograms.
    TopoStats {
        #[arg(long, value_enum)]
        topology: TopologyArg,
        /// Dimensions as WxH (mesh/torus) or fanout x depth (tree).
        #[arg(long)]
        dims: Option<String>,
        /// Attach the level-2 scale-up router (fullerene only).
        #[arg(long)]
        level2: bool,
        /// Rebuild a baseline as a router grid with one core per router.
        #[arg(long)]
        attach_cores: bool,
        /// Also export <prefix>.edges and <prefix>.kinds files.
        #[arg(long)]
        export: Option<String>,
        #[arg(long, default_value = "stats.csv")]
        out: PathBuf,
    },
    /// Synthetic traffic measurement over the router fabric.
    Traffic {
        #[arg(long, value_enum)]
        pattern: PatternArg,
        /// Injection rate per core per cycle, in (0, 1].
        #[arg(long)]
        rate: f64,
        #[arg(long, default_value_t = 20_000)]
        cycles: u64,
        #[arg(long, default_value = "traffic")]
        out_prefix: String,
    },
    /// Core efficiency sweep over spike sparsity 0..100%.
    SweepSparsity {
        #[arg(long, default_value = "curve.csv")]
        out: PathBuf,
    },
    /// Non-uniform weight quantization into a shared codebook.
    Quantize {
        /// Weights file, one value per line.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "N")]
        n: u8,
        #[arg(long = "W")]
        w: u8,
        #[arg(long, default_value = "codebook.csv")]
        out: PathBuf,
    },
    /// Compile a network description onto the fabric.
    Compile {
        #[arg(long)]
        net: PathBuf,
        #[arg(long, default_value = "fullerene")]
        topology: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "N", default_value_t = 16)]
        n: u8,
        #[arg(long = "W", default_value_t = 8)]
        w: u8,
        #[arg(long, default_value_t = 256)]
        neurons_per_core: usize,
        /// Network id selecting the output buffer.
        #[arg(long, default_value_t = 0)]
        network: u8,
    },
    /// Run inference: netlist + input trace -> output spikes + telemetry.
    Run {
        #[arg(long)]
        netlist: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        timesteps: u32,
        #[arg(long, default_value = "spikes.csv")]
        out: PathBuf,
        #[arg(long, default_value = "telemetry.csv")]
        telemetry: PathBuf,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
}

fn main() {
    let args = Cli::parse();
    let global = GlobalArgs { config: args.config, seed: args.seed, out_dir: args.out_dir };
    let result = match args.command {
        Command::TopoStats { topology, dims, level2, attach_cores, export, out } => {
            let kind = match topology {
                TopologyArg::Fullerene => TopoKind::Fullerene,
                TopologyArg::Mesh => TopoKind::Mesh,
                TopologyArg::Tree => TopoKind::Tree,
                TopologyArg::Torus => TopoKind::Torus,
            };
            cli::cmd_topo_stats(&global, kind, dims, level2, attach_cores, export, out)
        }
        Command::Traffic { pattern, rate, cycles, out_prefix } => {
            let pattern = match pattern {
                PatternArg::UniformRandom => TrafficPattern::UniformRandom,
                PatternArg::Hotspot => TrafficPattern::Hotspot,
                PatternArg::Neighbor => TrafficPattern::Neighbor,
            };
            cli::cmd_traffic(&global, pattern, rate, cycles, out_prefix)
        }
        Command::SweepSparsity { out } => cli::cmd_sweep_sparsity(&global, out),
        Command::Quantize { input, n, w, out } => cli::cmd_quantize(&global, input, n, w, out),
        Command::Compile { net, topology, out, n, w, neurons_per_core, network } => {
            cli::cmd_compile(&global, net, topology, out, n, w, neurons_per_core, network)
        }
        Command::Run { netlist, trace, timesteps, out, telemetry, threads } => {
            cli::cmd_run(&global, netlist, trace, timesteps, out, telemetry, threads)
        }
    };
    match result {
        Ok(()) => {}
        Err(e) => {
            eprintln!("noc-sim: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
