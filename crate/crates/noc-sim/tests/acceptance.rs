//! Acceptance suite: one test per criterion, each printing a PASS line
//! with the measured values. Expected values come from independent
//! oracles computed in this file (Floyd-Warshall distances, naive bit
//! loops, direct sums), never from the implementation path under test.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use noc_sim::compiler::{self, LayerSpec, NetworkDescription};
use noc_sim::config::SimConfig;
use noc_sim::fabric::Fabric;
use noc_sim::neurocore::{self, ResetMode, SpikeWindow};
use noc_sim::router::{MatrixEntry, RouterState, SpikeFlit, TransmissionMode};
use noc_sim::topology::{self, NodeKind};
use noc_sim::traffic;

/// Independent all-pairs oracle sharing nothing with the BFS the library
/// uses: Floyd-Warshall over the raw edge list.
fn floyd_warshall(g: &topology::TopologyGraph) -> Vec<Vec<u32>> {
    let n = g.node_count();
    const INF: u32 = u32::MAX / 4;
    let mut d = vec![vec![INF; n]; n];
    for i in 0..n {
        d[i][i] = 0;
    }
    for &(a, b) in g.edges() {
        d[a.index()][b.index()] = 1;
        d[b.index()][a.index()] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k].saturating_add(d[k][j]);
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

fn core_pair_mean_and_diameter(g: &topology::TopologyGraph) -> (i64, i64, u32) {
    let d = floyd_warshall(g);
    let cores = g.nodes_of_kind(NodeKind::Core);
    let mut total = 0i64;
    let mut pairs = 0i64;
    let mut diameter = 0u32;
    for (i, &a) in cores.iter().enumerate() {
        for &b in &cores[i + 1..] {
            let dist = d[a.index()][b.index()];
            total += dist as i64;
            pairs += 1;
            diameter = diameter.max(dist);
        }
    }
    (total, pairs, diameter)
}

#[test]
fn criterion_1_topology_exactness() {
    let start = Instant::now();
    let g = topology::build_fullerene_domain();
    let degrees = topology::degree_stats(&g).unwrap();
    let latency = topology::latency_stats(&g).unwrap();

    // exact rationals
    assert_eq!(degrees.mean_degree, num_rational::Ratio::new(15, 4), "mean degree 3.75");
    assert_eq!(
        degrees.degree_variance,
        num_rational::Ratio::new(15, 16),
        "degree variance 0.9375"
    );
    assert_eq!(latency.mean_core_pair_hops, num_rational::Ratio::new(60, 19));
    assert_eq!(latency.diameter_hops, 6);

    // independent brute-force oracle agrees
    let (total, pairs, diameter) = core_pair_mean_and_diameter(&g);
    assert_eq!(num_rational::Ratio::new(total, pairs), num_rational::Ratio::new(60, 19));
    assert_eq!(diameter, 6);
    let degree_sum: usize = g.nodes().map(|(id, _)| g.degree(id)).sum();
    assert_eq!(degree_sum * 4, 15 * g.node_count()); // 2|E|/|V| = 15/4 cross-check

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "runtime {elapsed:?} exceeds 1 s");
    println!(
        "acceptance criterion 1 (topology exactness): PASS \
         [degree 3.75, variance 0.9375, mean hops 60/19, diameter 6, {elapsed:?}]"
    );
}

#[test]
fn criterion_2_topology_comparison() {
    let start = Instant::now();
    let fullerene = topology::latency_stats(&topology::build_fullerene_domain()).unwrap();
    // baselines as router fabrics: a 4x5 router grid and a fanout-4 tree,
    // one core per router (20 and 21 cores)
    let mesh = topology::attach_cores(&topology::build_mesh(4, 5).unwrap());
    let tree = topology::attach_cores(&topology::build_tree(4, 2).unwrap());
    assert_eq!(mesh.nodes_of_kind(NodeKind::Core).len(), 20);
    assert!(tree.nodes_of_kind(NodeKind::Core).len() >= 20);
    let mesh_stats = topology::latency_stats(&mesh).unwrap();
    let tree_stats = topology::latency_stats(&tree).unwrap();

    assert!(fullerene.mean_core_pair_hops < mesh_stats.mean_core_pair_hops);
    assert!(fullerene.mean_core_pair_hops < tree_stats.mean_core_pair_hops);

    let to_f =
        |r: &num_rational::Ratio<i64>| *r.numer() as f64 / *r.denom() as f64;
    let mesh_margin = 1.0 - to_f(&fullerene.mean_core_pair_hops) / to_f(&mesh_stats.mean_core_pair_hops);
    let tree_margin = 1.0 - to_f(&fullerene.mean_core_pair_hops) / to_f(&tree_stats.mean_core_pair_hops);
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "runtime {elapsed:?} exceeds 1 s");
    println!(
        "acceptance criterion 2 (topology comparison): PASS \
         [fullerene {:.4} < mesh {:.4} ({:.1}% better, reported) and < tree {:.4} ({:.1}% better, reported), {elapsed:?}]",
        to_f(&fullerene.mean_core_pair_hops),
        to_f(&mesh_stats.mean_core_pair_hops),
        mesh_margin * 100.0,
        to_f(&tree_stats.mean_core_pair_hops),
        tree_margin * 100.0,
    );
}

#[test]
fn criterion_3_zero_skip_oracle() {
    let start = Instant::now();
    for w in 0..=u16::MAX {
        // naive bit-loop oracle
        let naive: Vec<u8> = (0..16).filter(|b| w & (1u16 << b) != 0).collect();
        let (positions, cost) = neurocore::zspe_scan(SpikeWindow(w));
        assert_eq!(positions, naive, "window {w:#06x}");
        assert_eq!(cost, (naive.len() as u64).max(1), "window {w:#06x}");
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "runtime {elapsed:?} exceeds 1 s");
    println!(
        "acceptance criterion 3 (zero-skip oracle, 65536 windows): PASS [{elapsed:?}]"
    );
}

/// Random 3-layer network in 64..=256 total neurons with seeded
/// parameters, plus a matching input trace.
fn random_net_and_trace(seed: u64) -> (NetworkDescription, Vec<(u32, u32)>, u8, u8) {
    let mut rng = StdRng::seed_from_u64(seed);
    let n_in = rng.gen_range(16..=48u32);
    let n_hidden = rng.gen_range(32..=160u32);
    let n_out = rng.gen_range(8..=32u32);
    let choices = [4u8, 8, 16];
    let n = choices[rng.gen_range(0..3)];
    let w = choices[rng.gen_range(0..3)];

    let layers = vec![
        LayerSpec { neurons: n_in, threshold: 1, leak: 0, reset: ResetMode::ToZero },
        LayerSpec {
            neurons: n_hidden,
            threshold: rng.gen_range(1..=6),
            leak: rng.gen_range(0..=2),
            reset: if rng.gen_bool(0.5) { ResetMode::ToZero } else { ResetMode::Subtract },
        },
        LayerSpec {
            neurons: n_out,
            threshold: rng.gen_range(1..=4),
            leak: rng.gen_range(0..=1),
            reset: if rng.gen_bool(0.5) { ResetMode::ToZero } else { ResetMode::Subtract },
        },
    ];
    let total = n_in + n_hidden + n_out;
    assert!((64..=256).contains(&total), "generator keeps nets in 64..=256 neurons");

    let mut connections = Vec::new();
    for pre in 0..n_in {
        for post in n_in..n_in + n_hidden {
            if rng.gen_bool(0.3) {
                connections.push((pre, post, rng.gen_range(-3.0..3.0)));
            }
        }
    }
    for pre in n_in..n_in + n_hidden {
        for post in n_in + n_hidden..total {
            if rng.gen_bool(0.3) {
                connections.push((pre, post, rng.gen_range(-3.0..3.0)));
            }
        }
    }
    let net = NetworkDescription { layers, connections };

    let mut trace = Vec::new();
    for t in 0..100u32 {
        for g in 0..n_in {
            if rng.gen_bool(0.25) {
                trace.push((t, g));
            }
        }
    }
    (net, trace, n, w)
}

fn run_equivalence_seed(seed: u64, threads: usize) -> (String, String, String) {
    let (net, global_trace, n, w) = random_net_and_trace(seed);
    let compiled = compiler::compile(&net, n, w, 256, 0).unwrap();
    let cfg = SimConfig::default();
    let mut fabric = Fabric::from_netlist(&compiled.netlist, &cfg).unwrap();
    let fabric_trace: Vec<(u32, u8, u16)> = global_trace
        .iter()
        .map(|&(t, g)| {
            let (c, nn) = compiled.placement.core_of(g);
            (t, c, nn)
        })
        .collect();
    let out = fabric.run_inference(&fabric_trace, 100, threads).unwrap();

    let golden = compiler::golden_eval_quantized(&compiled.quantized, &global_trace, 100);
    let out_range = {
        let total: u32 = net.layers.iter().map(|l| l.neurons).sum();
        (total - net.layers[2].neurons)..total
    };
    let golden_csv: String = golden
        .iter()
        .filter(|&&(_, g)| out_range.contains(&g))
        .map(|&(t, g)| format!("{t},{g}\n"))
        .collect();
    let fabric_csv: String =
        out.records.iter().map(|r| format!("{},{}\n", r.timestep, r.global_neuron)).collect();
    let telemetry_csv = noc_sim::trace::write_telemetry(&out.telemetry);
    (fabric_csv, golden_csv, telemetry_csv)
}

#[test]
fn criterion_4_core_equivalence_twenty_seeds() {
    let start = Instant::now();
    let mut total_spikes = 0usize;
    for seed in 0..20u64 {
        let (fabric_csv, golden_csv, _) = run_equivalence_seed(seed, 1);
        assert_eq!(
            fabric_csv, golden_csv,
            "seed {seed}: fabric and golden spike trains differ"
        );
        total_spikes += fabric_csv.lines().count();
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "runtime {elapsed:?} exceeds 60 s");
    println!(
        "acceptance criterion 4 (core equivalence, 20 seeds x 100 timesteps): PASS \
         [{total_spikes} output spikes byte-identical, {elapsed:?}]"
    );
}

#[test]
fn criterion_5_efficiency_curve_calibration() {
    let start = Instant::now();
    let cfg = SimConfig::default();
    let points = neurocore::efficiency_curve(&cfg).unwrap();
    assert_eq!(points.len(), 101);

    let peak_gsops = points.iter().map(|p| p.gsops).fold(0.0f64, f64::max);
    let min_pj = points
        .iter()
        .filter(|p| p.sops > 0)
        .map(|p| p.pj_per_sop)
        .fold(f64::INFINITY, f64::min);
    assert!(
        (peak_gsops - 0.627).abs() / 0.627 <= 0.05,
        "peak computing efficiency {peak_gsops} outside 0.627 +/- 5%"
    );
    assert!(
        (min_pj - 0.627).abs() / 0.627 <= 0.05,
        "peak energy efficiency {min_pj} outside 0.627 +/- 5%"
    );

    // sparsity > 40% envelope; the 100% grid point runs zero SOPs, so its
    // per-SOP metrics are undefined and vacuously excluded
    for p in points.iter().filter(|p| p.sparsity_pct > 40 && p.sops > 0) {
        assert!(
            p.pj_per_sop <= 1.196,
            "sparsity {}%: {} pJ/SOP exceeds 1.196",
            p.sparsity_pct,
            p.pj_per_sop
        );
        assert!(
            p.gsops >= 0.426,
            "sparsity {}%: {} GSOP/s below 0.426",
            p.sparsity_pct,
            p.gsops
        );
    }

    let max_ratio = points
        .iter()
        .filter(|p| p.sops > 0)
        .map(|p| p.energy_ratio)
        .fold(0.0f64, f64::max);
    assert!(max_ratio >= 2.69, "zero-skip vs baseline energy ratio peaked at {max_ratio}");

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "runtime {elapsed:?} exceeds 30 s");
    println!(
        "acceptance criterion 5 (efficiency calibration): PASS \
         [peak {peak_gsops:.4} GSOP/s, best {min_pj:.4} pJ/SOP, \
          zero-skip ratio up to {max_ratio:.2}x, {elapsed:?}]"
    );
}

#[test]
fn criterion_6_router_throughput_envelope() {
    let start = Instant::now();
    let cfg = SimConfig::default();
    let ceiling = cfg.router_throughput_ceiling();
    assert_eq!(ceiling, 0.4);

    // saturated single router: the plateau
    let saturated = traffic::saturated_single_router_throughput(&cfg, 25_000);
    assert!(saturated <= ceiling + 1e-12, "throughput {saturated} exceeds the hard ceiling");
    assert!(
        (0.2..=0.4).contains(&saturated),
        "saturated throughput {saturated} outside the published band"
    );

    // full-fabric saturation never exceeds the ceiling on any router
    let report =
        traffic::run_traffic(traffic::TrafficPattern::Neighbor, 1.0, 20_000, 11, &cfg, 5_000)
            .unwrap();
    for r in &report.routers {
        assert!(
            r.throughput <= ceiling + 1e-12,
            "router {} at {} flits/cycle",
            r.router_id,
            r.throughput
        );
    }

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "runtime {elapsed:?} exceeds 30 s");
    println!(
        "acceptance criterion 6 (router throughput envelope): PASS \
         [saturated plateau {saturated:.4} flits/cycle within [0.2, 0.4], {elapsed:?}]"
    );
}

#[test]
fn criterion_7_energy_ledger_arithmetic() {
    let start = Instant::now();
    let cfg = SimConfig::default();
    // behavioral scenario: one router forwards exactly 1000 P2P flits and
    // 100 1-to-3 broadcasts (300 deliveries)
    let mut router = RouterState::new(0, [12, 13, 14, 15, 16], &cfg);
    let entries: Vec<MatrixEntry> = vec![
        (0, 0, 13, TransmissionMode::P2P),
        (1, 0, 13, TransmissionMode::Broadcast),
        (1, 1, 14, TransmissionMode::Broadcast),
        (1, 2, 15, TransmissionMode::Broadcast),
    ];
    router.configure_matrix(&entries).unwrap();
    let mut sent_p2p = 0u64;
    let mut sent_bcast = 0u64;
    let mut cycle = 0u64;
    while router.ledger.hops_p2p < 1000 || router.ledger.bcast_deliveries < 300 {
        if sent_p2p < 1000 {
            let f = SpikeFlit { src_core: 12, src_neuron: 0, timestep: 0, tag: None };
            if router.accept_flit(0, f) {
                sent_p2p += 1;
            }
        }
        if sent_bcast < 100 {
            let f = SpikeFlit { src_core: 13, src_neuron: 1, timestep: 0, tag: None };
            if router.accept_flit(1, f) {
                sent_bcast += 1;
            }
        }
        router.tick(0);
        for port in 0..5 {
            while router.pop_output(port).is_some() {}
        }
        cycle += 1;
        assert!(cycle < 100_000, "scenario did not converge");
    }
    assert_eq!(router.ledger.hops_p2p, 1000);
    assert_eq!(router.ledger.bcast_deliveries, 300);

    let energy = router.ledger.router_energy_pj(&cfg);
    let expected = 1000.0 * 0.026 + 300.0 * 0.009;
    assert_eq!(energy, expected, "ledger arithmetic must match the closed form exactly");
    assert!((energy - 28.7).abs() < 1e-9, "28.7 pJ from the published coefficients");

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "runtime {elapsed:?} exceeds 5 s");
    println!(
        "acceptance criterion 7 (energy ledger arithmetic): PASS \
         [1000 x 0.026 + 300 x 0.009 = {energy} pJ, {elapsed:?}]"
    );
}

#[test]
fn criterion_8_quantizer_property_fifty_sets() {
    let start = Instant::now();
    for seed in 0..50u64 {
        let mut rng = StdRng::seed_from_u64(1000 + seed);
        let len = rng.gen_range(30..2000usize);
        // mix of distributions: uniform, gaussian-ish sums, bimodal
        let weights: Vec<f64> = (0..len)
            .map(|_| match seed % 3 {
                0 => rng.gen_range(-4.0..4.0),
                1 => (0..6).map(|_| rng.gen_range(-1.0..1.0)).sum(),
                _ => {
                    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                    sign * rng.gen_range(1.0..2.0)
                }
            })
            .collect();
        let choices = [4u8, 8, 16];
        let n = choices[rng.gen_range(0..3)];
        let q = compiler::quantize_codebook(&weights, n, 16).unwrap();
        assert!(
            q.kmeans_mse <= q.uniform_mse + 1e-12,
            "seed {seed}: Lloyd-Max {} worse than uniform grid {}",
            q.kmeans_mse,
            q.uniform_mse
        );
        for pair in q.objective_history.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-9,
                "seed {seed}: objective increased {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "runtime {elapsed:?} exceeds 10 s");
    println!(
        "acceptance criterion 8 (quantizer property, 50 random sets): PASS [{elapsed:?}]"
    );
}

#[test]
fn criterion_9_thread_determinism() {
    let start = Instant::now();
    for seed in [0u64, 7, 13] {
        let (out1, golden1, telem1) = run_equivalence_seed(seed, 1);
        let (out4, golden4, telem4) = run_equivalence_seed(seed, 4);
        assert_eq!(out1, out4, "seed {seed}: outputs differ across thread counts");
        assert_eq!(telem1, telem4, "seed {seed}: telemetry differs across thread counts");
        assert_eq!(golden1, golden4);
        assert_eq!(out1, golden1);
    }
    let elapsed = start.elapsed();
    println!(
        "acceptance criterion 9 (determinism, threads 1 vs 4): PASS [{elapsed:?}]"
    );
}

#[test]
fn criterion_10_desk_scale_exclusions() {
    // Not reproducible at desk scale, by design: silicon power
    // (2.8-113 mW), 0.52 mW/mm^2 power density, 30.23 K/mm^2 neuron
    // density, and the trained-network accuracy and application pJ/SOP
    // figures (0.96/1.17/1.24). The energy model is calibrated to the
    // published coefficients, not derived from silicon measurement.
    let cfg = SimConfig::default();
    // the calibrated coefficients the model IS pinned to:
    assert_eq!(cfg.e_hop_p2p_pj, 0.026);
    assert_eq!(cfg.e_hop_bcast_pj, 0.009);
    assert_eq!(cfg.freq_mhz, 200.0);
    println!(
        "acceptance criterion 10 (desk-scale exclusions): PASS \
         [silicon power/density/accuracy figures documented as out of scope]"
    );
}

/// The full-window exhaustive check doubles as the spec's cycle-savings
/// monotonicity property: baseline cost is constant 16, zero-skip cost is
/// max(1, popcount), so savings grow monotonically with sparsity.
#[test]
fn zero_skip_savings_envelope() {
    let mut by_popcount = vec![BTreeSet::new(); 17];
    for w in [0u16, 1, 3, 0xF, 0xFF, 0xFFF, 0xFFFF, 0x8000, 0xAAAA] {
        let (_, cost) = neurocore::zspe_scan(SpikeWindow(w));
        by_popcount[w.count_ones() as usize].insert(cost);
    }
    let mut last_saving = None;
    for (pop, costs) in by_popcount.iter().enumerate().rev() {
        for &cost in costs {
            assert_eq!(cost, (pop as u64).max(1));
            let saving = 16 - cost;
            if let Some(prev) = last_saving {
                assert!(saving >= prev);
            }
            last_saving = Some(saving);
        }
    }
}
