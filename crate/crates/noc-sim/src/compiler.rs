//! Offline toolchain: weight quantization into shared codebooks, neuron
//! placement across cores, route synthesis into connection matrices,
//! netlist emission, and the golden sequential evaluator that defines
//! ground truth for the fabric.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Result, SimError};
use crate::netlist::{CoreSection, IoLine, Netlist, RelayLine, RouteLine};
use crate::neurocore::{self, ResetMode};
use crate::router::TransmissionMode;
use crate::topology::{self, NodeId, NodeKind, TopologyGraph};

/// One layer of a feedforward network description. Layer 0 is the input
/// layer: its neurons fire exogenously from the stimulus trace and carry
/// no dynamics of their own.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerSpec {
    pub neurons: u32,
    pub threshold: i32,
    pub leak: u32,
    pub reset: ResetMode,
}

/// A trained network, weights still real-valued.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NetworkDescription {
    pub layers: Vec<LayerSpec>,
    /// (pre global id, post global id, weight)
    pub connections: Vec<(u32, u32, f64)>,
}

impl NetworkDescription {
    pub fn total_neurons(&self) -> u32 {
        self.layers.iter().map(|l| l.neurons).sum()
    }

    /// Layer index of a global neuron id.
    pub fn layer_of(&self, neuron: u32) -> Option<usize> {
        let mut base = 0;
        for (i, l) in self.layers.iter().enumerate() {
            if neuron < base + l.neurons {
                return Some(i);
            }
            base += l.neurons;
        }
        None
    }

    /// Global id range of one layer.
    pub fn layer_range(&self, layer: usize) -> std::ops::Range<u32> {
        let base: u32 = self.layers[..layer].iter().map(|l| l.neurons).sum();
        base..base + self.layers[layer].neurons
    }

    pub fn validate(&self) -> Result<()> {
        let total = self.total_neurons();
        let input_count = self.layers.first().map(|l| l.neurons).unwrap_or(0);
        for l in &self.layers {
            if l.threshold < 1 {
                return Err(SimError::invalid("layer thresholds must be at least 1"));
            }
        }
        for &(pre, post, w) in &self.connections {
            if pre >= total || post >= total {
                return Err(SimError::invalid(format!(
                    "connection {pre}->{post} references a neuron beyond {total}"
                )));
            }
            if post < input_count {
                return Err(SimError::invalid(format!(
                    "connection {pre}->{post} targets an input-layer neuron; \
                     input neurons fire from the stimulus trace only"
                )));
            }
            if !w.is_finite() {
                return Err(SimError::invalid(format!(
                    "connection {pre}->{post} has a non-finite weight"
                )));
            }
        }
        Ok(())
    }

    /// Parse the line-oriented network text:
    /// `layer <neurons> <threshold> <leak> <zero|sub>` and
    /// `conn <pre> <post> <weight>` records.
    pub fn parse(text: &str) -> Result<Self> {
        let mut net = NetworkDescription::default();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let ctx = |m: String| SimError::Parse(format!("network line {lineno}: {m}"));
            match f[0] {
                "layer" => {
                    if f.len() != 5 {
                        return Err(ctx("layer needs: neurons threshold leak reset".into()));
                    }
                    let reset = match f[4] {
                        "zero" => ResetMode::ToZero,
                        "sub" => ResetMode::Subtract,
                        o => return Err(ctx(format!("unknown reset {o:?}"))),
                    };
                    net.layers.push(LayerSpec {
                        neurons: f[1].parse().map_err(|_| ctx("bad neuron count".into()))?,
                        threshold: f[2].parse().map_err(|_| ctx("bad threshold".into()))?,
                        leak: f[3].parse().map_err(|_| ctx("bad leak".into()))?,
                        reset,
                    });
                }
                "conn" => {
                    if f.len() != 4 {
                        return Err(ctx("conn needs: pre post weight".into()));
                    }
                    net.connections.push((
                        f[1].parse().map_err(|_| ctx("bad pre id".into()))?,
                        f[2].parse().map_err(|_| ctx("bad post id".into()))?,
                        f[3].parse().map_err(|_| ctx("bad weight".into()))?,
                    ));
                }
                o => return Err(ctx(format!("unknown directive {o:?}"))),
            }
        }
        net.validate()?;
        Ok(net)
    }
}

// ---------------------------------------------------------------------------
// Non-uniform weight quantization (Lloyd-Max / 1-D k-means)
// ---------------------------------------------------------------------------

/// Outcome of quantizing one weight set into an N-entry, W-bit codebook.
#[derive(Debug, Clone)]
pub struct QuantizeResult {
    /// Converged real-valued centroids, ascending.
    pub codebook_real: Vec<f64>,
    /// Centroids scaled and rounded into W-bit two's complement.
    pub codebook_int: Vec<i32>,
    /// Real weight represented by one integer unit.
    pub scale: f64,
    /// Nearest-centroid index per input weight (ties to the lower index).
    pub assignments: Vec<u8>,
    /// Mean squared error of the final integer codebook.
    pub mse: f64,
    /// Mean squared error of the converged real centroids.
    pub kmeans_mse: f64,
    /// Mean squared error of the uniform-grid initializer (the oracle
    /// baseline the iteration must never lose to).
    pub uniform_mse: f64,
    /// Sum-of-squared-error objective after each assignment step.
    pub objective_history: Vec<f64>,
    /// Number of codebook entries actually referenced.
    pub occupancy: usize,
}

fn nearest_index(centroids: &[f64], w: f64) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, &c) in centroids.iter().enumerate() {
        let d = (w - c) * (w - c);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

fn sse(weights: &[f64], centroids: &[f64], assignments: &[usize]) -> f64 {
    weights
        .iter()
        .zip(assignments)
        .map(|(&w, &a)| (w - centroids[a]) * (w - centroids[a]))
        .sum()
}

const KMEANS_TOLERANCE: f64 = 1e-9;
const KMEANS_MAX_ITERATIONS: usize = 200;

/// Lloyd-Max scalar quantization: start from the uniform-grid quantizer
/// over `[min, max]`, iterate nearest-assignment / centroid-mean steps to
/// convergence, then scale and round the centroids into W-bit integers.
pub fn quantize_codebook(weights: &[f64], n: u8, w: u8) -> Result<QuantizeResult> {
    neurocore::validate_weight_param("weight count N", n)?;
    neurocore::validate_weight_param("weight width W", w)?;
    if weights.is_empty() {
        return Err(SimError::invalid("cannot quantize an empty weight list"));
    }
    if weights.iter().any(|v| !v.is_finite()) {
        return Err(SimError::invalid("weights must be finite"));
    }
    let n = n as usize;

    let mut distinct: Vec<f64> = weights.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();

    let lo = distinct[0];
    let hi = *distinct.last().unwrap();

    // degenerate case: at most N distinct values are represented exactly
    let (mut centroids, history, uniform_mse) = if distinct.len() <= n {
        let mut c = distinct.clone();
        c.resize(n, hi);
        let uniform = uniform_grid(lo, hi, n);
        let ua: Vec<usize> = weights.iter().map(|&v| nearest_index(&uniform, v)).collect();
        (c, vec![0.0], sse(weights, &uniform, &ua) / weights.len() as f64)
    } else {
        let mut centroids = uniform_grid(lo, hi, n);
        let mut history = Vec::new();
        let mut uniform_mse = 0.0;
        for iter in 0..KMEANS_MAX_ITERATIONS {
            let assignments: Vec<usize> =
                weights.iter().map(|&v| nearest_index(&centroids, v)).collect();
            let objective = sse(weights, &centroids, &assignments);
            if iter == 0 {
                uniform_mse = objective / weights.len() as f64;
            }
            history.push(objective);

            // centroid update: mean of each cluster
            let mut sums = vec![0.0f64; n];
            let mut counts = vec![0usize; n];
            for (&v, &a) in weights.iter().zip(&assignments) {
                sums[a] += v;
                counts[a] += 1;
            }
            let mut next = centroids.clone();
            let mut moved: f64 = 0.0;
            for i in 0..n {
                if counts[i] > 0 {
                    next[i] = sums[i] / counts[i] as f64;
                    moved = moved.max((next[i] - centroids[i]).abs());
                }
            }
            // reseed empty cells at the worst-represented points; moving an
            // unused centroid leaves the current objective untouched
            let mut errors: Vec<(f64, usize)> = weights
                .iter()
                .zip(&assignments)
                .enumerate()
                .map(|(j, (&v, &a))| ((v - next[a]) * (v - next[a]), j))
                .collect();
            for i in 0..n {
                if counts[i] == 0 {
                    errors.sort_by(|a, b| {
                        b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1))
                    });
                    let (err, j) = errors[0];
                    if err > 0.0 {
                        next[i] = weights[j];
                        moved = moved.max((next[i] - centroids[i]).abs());
                        errors[0].0 = 0.0;
                    }
                }
            }
            centroids = next;
            if moved < KMEANS_TOLERANCE {
                break;
            }
        }
        (centroids, history, uniform_mse)
    };

    // canonical order: ascending centroids
    centroids.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let max_abs = centroids.iter().fold(0.0f64, |m, &c| m.max(c.abs()));
    let int_max = ((1i64 << (w - 1)) - 1) as f64;
    let scale = if max_abs == 0.0 { 1.0 } else { max_abs / int_max };
    let codebook_int: Vec<i32> =
        centroids.iter().map(|&c| (c / scale).round().clamp(-int_max, int_max) as i32).collect();

    let assignments: Vec<u8> =
        weights.iter().map(|&v| nearest_index(&centroids, v) as u8).collect();
    let occupancy = assignments.iter().collect::<BTreeSet<_>>().len();
    let kmeans_mse = weights
        .iter()
        .zip(&assignments)
        .map(|(&v, &a)| (v - centroids[a as usize]) * (v - centroids[a as usize]))
        .sum::<f64>()
        / weights.len() as f64;
    let mse = weights
        .iter()
        .zip(&assignments)
        .map(|(&v, &a)| {
            let deq = codebook_int[a as usize] as f64 * scale;
            (v - deq) * (v - deq)
        })
        .sum::<f64>()
        / weights.len() as f64;

    Ok(QuantizeResult {
        codebook_real: centroids,
        codebook_int,
        scale,
        assignments,
        mse,
        kmeans_mse,
        uniform_mse,
        objective_history: history,
        occupancy,
    })
}

/// The uniform-grid quantizer levels over `[lo, hi]` (cell midpoints).
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if hi <= lo {
        return vec![lo; n];
    }
    let step = (hi - lo) / n as f64;
    (0..n).map(|i| lo + (i as f64 + 0.5) * step).collect()
}

// ---------------------------------------------------------------------------
// Placement
// ---------------------------------------------------------------------------

/// Register parameters a core must share across all its neurons.
pub type CoreParams = (i32, u32, ResetMode);

/// Mapping of every network neuron onto a (core, local index) slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    /// global neuron id -> (core id, local index)
    pub assignment: BTreeMap<u32, (u8, u16)>,
    /// core id -> neurons placed there
    pub core_loads: BTreeMap<u8, u16>,
    /// core id -> (threshold, leak, reset) its register table carries
    pub core_params: BTreeMap<u8, CoreParams>,
    /// core id -> parameter-group index, bounding improvement swaps
    pub core_group: BTreeMap<u8, usize>,
    /// placed connections crossing core boundaries
    pub inter_core_edges: usize,
}

impl Placement {
    pub fn core_of(&self, neuron: u32) -> (u8, u16) {
        self.assignment[&neuron]
    }
}

fn count_inter_core(net: &NetworkDescription, core_of: &BTreeMap<u32, (u8, u16)>) -> usize {
    net.connections
        .iter()
        .filter(|&&(pre, post, _)| core_of[&pre].0 != core_of[&post].0)
        .count()
}

/// Block size used by the local-improvement pass.
const PLACE_BLOCK: usize = 16;

/// Default register parameters for cores holding only input-layer neurons.
const INPUT_ONLY_PARAMS: CoreParams = (1, 0, ResetMode::ToZero);

/// Greedy layer-contiguous placement balanced across the cores each
/// parameter group needs, followed by a local-improvement pass that swaps
/// equal-sized neuron blocks between cores of the same group whenever that
/// strictly reduces the inter-core connection count.
///
/// Threshold, leak and reset live in the per-core register table, so
/// layers share a core only when those parameters agree. The input layer
/// is parameter-agnostic: its neurons fire from the stimulus trace and
/// never touch the registers.
pub fn place(
    net: &NetworkDescription,
    neurons_per_core: usize,
    available_cores: &[u8],
) -> Result<Placement> {
    net.validate()?;

    // parameter signature per layer; the input layer is a wildcard
    let signature = |idx: usize| -> Option<CoreParams> {
        if idx == 0 {
            None
        } else {
            let l = &net.layers[idx];
            Some((l.threshold, l.leak, l.reset))
        }
    };

    // consecutive layers fold into a group while their signatures agree
    struct Group {
        params: Option<CoreParams>,
        neurons: Vec<u32>,
    }
    let mut groups: Vec<Group> = Vec::new();
    for idx in 0..net.layers.len() {
        let sig = signature(idx);
        let range = net.layer_range(idx);
        let compatible = groups
            .last()
            .map(|g| sig.is_none() || g.params.is_none() || g.params == sig)
            .unwrap_or(false);
        if compatible {
            let g = groups.last_mut().unwrap();
            if g.params.is_none() {
                g.params = sig;
            }
            g.neurons.extend(range);
        } else {
            groups.push(Group { params: sig, neurons: range.collect() });
        }
    }

    let cores_needed: usize =
        groups.iter().map(|g| g.neurons.len().div_ceil(neurons_per_core)).sum();
    if cores_needed > available_cores.len() {
        let capacity = available_cores.len() * neurons_per_core;
        return Err(SimError::Placement(format!(
            "network needs {cores_needed} cores but only {} exist \
             ({} neurons over {} capacity)",
            available_cores.len(),
            net.total_neurons(),
            capacity
        )));
    }

    let mut assignment: BTreeMap<u32, (u8, u16)> = BTreeMap::new();
    let mut core_loads: BTreeMap<u8, u16> = BTreeMap::new();
    let mut core_params: BTreeMap<u8, CoreParams> = BTreeMap::new();
    let mut core_group: BTreeMap<u8, usize> = BTreeMap::new();
    let mut next_core = 0usize;
    for (gi, group) in groups.iter().enumerate() {
        let count = group.neurons.len();
        if count == 0 {
            continue;
        }
        let cores_for_group = count.div_ceil(neurons_per_core);
        // balance the group across its cores instead of filling greedily
        let per_core = count.div_ceil(cores_for_group);
        let mut placed = 0usize;
        for _ in 0..cores_for_group {
            let core = available_cores[next_core];
            next_core += 1;
            core_params.insert(core, group.params.unwrap_or(INPUT_ONLY_PARAMS));
            core_group.insert(core, gi);
            let take = per_core.min(count - placed);
            for i in 0..take {
                assignment.insert(group.neurons[placed + i], (core, i as u16));
            }
            core_loads.insert(core, take as u16);
            placed += take;
        }
    }

    // local improvement: swap equal-sized blocks between cores of the same
    // group, accepting only strict reductions of the inter-core edge count
    let mut current = count_inter_core(net, &assignment);
    let blocks = collect_blocks(&assignment);
    for _pass in 0..3 {
        let mut improved = false;
        for i in 0..blocks.len() {
            for j in (i + 1)..blocks.len() {
                let (ca, na) = (&blocks[i].0, &blocks[i].1);
                let (cb, nb) = (&blocks[j].0, &blocks[j].1);
                if ca == cb || na.len() != nb.len() {
                    continue;
                }
                if core_group[ca] != core_group[cb] {
                    continue;
                }
                let mut candidate = assignment.clone();
                for (x, y) in na.iter().zip(nb) {
                    let a = candidate[x];
                    let b = candidate[y];
                    candidate.insert(*x, b);
                    candidate.insert(*y, a);
                }
                let cost = count_inter_core(net, &candidate);
                if cost < current {
                    assignment = candidate;
                    current = cost;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }

    // renumber local indexes by global order within each core
    let mut by_core: BTreeMap<u8, Vec<u32>> = BTreeMap::new();
    for (&g, &(core, _)) in &assignment {
        by_core.entry(core).or_default().push(g);
    }
    for (core, neurons) in &by_core {
        for (local, &g) in neurons.iter().enumerate() {
            assignment.insert(g, (*core, local as u16));
        }
    }

    Ok(Placement { assignment, core_loads, core_params, core_group, inter_core_edges: current })
}

fn collect_blocks(assignment: &BTreeMap<u32, (u8, u16)>) -> Vec<(u8, Vec<u32>)> {
    let mut by_core: BTreeMap<u8, Vec<u32>> = BTreeMap::new();
    for (&g, &(core, _)) in assignment {
        by_core.entry(core).or_default().push(g);
    }
    let mut blocks = Vec::new();
    for (core, neurons) in by_core {
        for chunk in neurons.chunks(PLACE_BLOCK) {
            blocks.push((core, chunk.to_vec()));
        }
    }
    blocks
}

// ---------------------------------------------------------------------------
// Route synthesis
// ---------------------------------------------------------------------------

/// Connection-matrix programs plus core relay tables for a set of
/// source-core to destination-core flows.
#[derive(Debug, Clone, Default)]
pub struct RoutingProgram {
    pub routes: Vec<RouteLine>,
    pub relays: Vec<RelayLine>,
    /// src core -> dest core -> path length in hops
    pub flow_hops: BTreeMap<u8, BTreeMap<u8, u32>>,
}

/// Synthesize shortest-path multicast trees for every flow and lower them
/// to matrix entries and relay lines. BFS ties break toward the lowest
/// next-hop node id. Destinations sharing a row become broadcast entries
/// at the divergence router; rows from several input ports converging on
/// one destination are marked merge.
pub fn synthesize_routes(
    flows: &BTreeMap<u8, BTreeSet<u8>>,
    graph: &TopologyGraph,
) -> Result<RoutingProgram> {
    // matrix cells per router: in_core -> set of dest cores
    let mut rows: BTreeMap<u8, BTreeMap<u8, BTreeSet<u8>>> = BTreeMap::new();
    let mut relays: BTreeSet<(u8, u8, u8)> = BTreeSet::new();
    let mut flow_hops: BTreeMap<u8, BTreeMap<u8, u32>> = BTreeMap::new();

    for (&src, dests) in flows {
        let src_node = NodeId(src as u32);
        if src_node.index() >= graph.node_count()
            || graph.kind(src_node) != NodeKind::Core
        {
            return Err(SimError::Routing(format!("flow source {src} is not a core")));
        }
        // BFS parents with ascending neighbor order: first discovery wins,
        // which is the lowest-id parent at the previous level
        let mut parent: Vec<Option<NodeId>> = vec![None; graph.node_count()];
        let mut dist: Vec<u32> = vec![u32::MAX; graph.node_count()];
        dist[src_node.index()] = 0;
        let mut queue = std::collections::VecDeque::from([src_node]);
        while let Some(u) = queue.pop_front() {
            for &v in graph.neighbors(u) {
                if dist[v.index()] == u32::MAX {
                    dist[v.index()] = dist[u.index()] + 1;
                    parent[v.index()] = Some(u);
                    queue.push_back(v);
                }
            }
        }
        for &dest in dests {
            if dest == src {
                continue;
            }
            let dest_node = NodeId(dest as u32);
            if dest_node.index() >= graph.node_count()
                || graph.kind(dest_node) != NodeKind::Core
            {
                return Err(SimError::Routing(format!("flow destination {dest} is not a core")));
            }
            if dist[dest_node.index()] == u32::MAX {
                return Err(SimError::Routing(format!("no path from core {src} to {dest}")));
            }
            flow_hops.entry(src).or_default().insert(dest, dist[dest_node.index()]);
            // walk the parent chain dest -> src, programming each hop
            let mut node = dest_node;
            while let Some(p) = parent[node.index()] {
                match graph.kind(node) {
                    NodeKind::Core => {
                        // p is a router delivering into this core
                        if graph.kind(p) != NodeKind::Core {
                            let up_core = parent[p.index()]
                                .expect("router on a path always has a core parent");
                            rows.entry(p.0 as u8)
                                .or_default()
                                .entry(up_core.0 as u8)
                                .or_default()
                                .insert(node.0 as u8);
                        }
                    }
                    _ => {
                        // node is a router reached from core p: p relays
                        // this flow's flits into it
                        relays.insert((p.0 as u8, src, node.0 as u8));
                    }
                }
                node = p;
            }
        }
    }

    // lower rows to slot-addressed entries; derive modes
    let mut routes = Vec::new();
    for (&router, in_rows) in &rows {
        let mut cells = 0usize;
        // merge detection: single-entry rows converging on one dest
        let mut single_dest_count: BTreeMap<u8, usize> = BTreeMap::new();
        for dests in in_rows.values() {
            if dests.len() == 1 {
                *single_dest_count.entry(*dests.iter().next().unwrap()).or_insert(0) += 1;
            }
        }
        for (&in_core, dests) in in_rows {
            if dests.len() > crate::router::ROUTER_PORTS {
                return Err(SimError::Routing(format!(
                    "router {router}: row for core {in_core} needs {} slots",
                    dests.len()
                )));
            }
            cells += dests.len();
            for (slot, &dest) in dests.iter().enumerate() {
                let mode = if dests.len() > 1 {
                    TransmissionMode::Broadcast
                } else if single_dest_count.get(&dest).copied().unwrap_or(0) >= 2 {
                    TransmissionMode::Merge
                } else {
                    TransmissionMode::P2P
                };
                routes.push(RouteLine {
                    router,
                    in_core,
                    slot: slot as u8,
                    dest_core: dest,
                    mode,
                });
            }
        }
        if cells > crate::router::MATRIX_CELLS {
            return Err(SimError::Routing(format!(
                "router {router}: {cells} cells exceed the matrix budget"
            )));
        }
    }

    Ok(RoutingProgram {
        routes,
        relays: relays
            .into_iter()
            .map(|(core, src_core, via_router)| RelayLine { core, src_core, via_router })
            .collect(),
        flow_hops,
    })
}

// ---------------------------------------------------------------------------
// Quantized network and full compilation
// ---------------------------------------------------------------------------

/// A placed network with integer weights resolved through per-core
/// codebooks.
#[derive(Debug, Clone)]
pub struct QuantizedNetwork {
    pub layers: Vec<LayerSpec>,
    /// (pre, post, weight index, resolved integer weight)
    pub connections: Vec<(u32, u32, u8, i32)>,
    /// core id -> (integer codebook, scale)
    pub codebooks: BTreeMap<u8, (Vec<i32>, f64)>,
    /// total quantization MSE over all connections
    pub mse: f64,
    /// codebook entries referenced, per core
    pub occupancy: BTreeMap<u8, usize>,
}

/// Everything `compile` produces.
#[derive(Debug, Clone)]
pub struct CompileOutput {
    pub netlist: Netlist,
    pub placement: Placement,
    pub quantized: QuantizedNetwork,
}

/// Compile a network onto the fullerene fabric: place neurons, quantize
/// each core's incoming weights into its shared codebook, synthesize
/// routes for every inter-core flow, and assemble the netlist.
pub fn compile(
    net: &NetworkDescription,
    n: u8,
    w: u8,
    neurons_per_core: usize,
    network_id: u8,
) -> Result<CompileOutput> {
    let graph = topology::build_fullerene_domain();
    let cores: Vec<u8> = graph
        .nodes_of_kind(NodeKind::Core)
        .iter()
        .map(|id| id.0 as u8)
        .collect();
    let placement = place(net, neurons_per_core, &cores)?;

    // group incoming connections per destination core
    let mut incoming: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
    for (ci, &(_, post, _)) in net.connections.iter().enumerate() {
        incoming.entry(placement.core_of(post).0).or_default().push(ci);
    }

    let mut netlist = Netlist { network_id, ..Default::default() };
    let mut q_connections: Vec<(u32, u32, u8, i32)> =
        Vec::with_capacity(net.connections.len());
    let mut codebooks = BTreeMap::new();
    let mut occupancy = BTreeMap::new();
    let mut total_se = 0.0f64;

    // every used core gets a section, even connection-less ones
    let mut used_cores: BTreeSet<u8> = placement.core_loads.keys().copied().collect();
    used_cores.extend(incoming.keys().copied());

    for &core_id in &used_cores {
        let (threshold, leak, reset) =
            placement.core_params.get(&core_id).copied().unwrap_or(INPUT_ONLY_PARAMS);
        let mut section = CoreSection::new(core_id, n, w);
        section.threshold = threshold;
        section.leak = leak;
        section.reset = reset;

        let conn_ids = incoming.get(&core_id).cloned().unwrap_or_default();
        let weights: Vec<f64> = conn_ids.iter().map(|&ci| net.connections[ci].2).collect();
        let quant = if weights.is_empty() {
            None
        } else {
            Some(quantize_codebook(&weights, n, w)?)
        };
        match &quant {
            Some(q) => {
                section.codebook = q.codebook_int.clone();
                section.scale = q.scale;
                total_se += q.mse * weights.len() as f64;
                codebooks.insert(core_id, (q.codebook_int.clone(), q.scale));
                occupancy.insert(core_id, q.occupancy);
            }
            None => {
                section.codebook = vec![0; n as usize];
                section.scale = 1.0;
                codebooks.insert(core_id, (section.codebook.clone(), 1.0));
                occupancy.insert(core_id, 0);
            }
        }

        // axon table: every distinct source neuron feeding this core,
        // ordered by (source core, source neuron)
        let mut sources: BTreeSet<(u8, u16)> = BTreeSet::new();
        for &ci in &conn_ids {
            let (pre, _, _) = net.connections[ci];
            sources.insert(placement.core_of(pre));
        }
        let axon_of: BTreeMap<(u8, u16), u32> =
            sources.iter().enumerate().map(|(i, &s)| (s, i as u32)).collect();
        for (&(src_core, src_neuron), &axon) in &axon_of {
            section.axons.push((axon, src_core, src_neuron));
        }

        for (k, &ci) in conn_ids.iter().enumerate() {
            let (pre, post, _) = net.connections[ci];
            let q = quant.as_ref().expect("connections imply a codebook");
            let index = q.assignments[k];
            let weight_int = q.codebook_int[index as usize];
            let axon = axon_of[&placement.core_of(pre)];
            let local_post = placement.core_of(post).1;
            section.synapses.push((axon, local_post, index));
            q_connections.push((pre, post, index, weight_int));
        }
        section.synapses.sort_unstable();
        netlist.cores.insert(core_id, section);
    }

    // flows: source core -> set of remote destination cores
    let mut flows: BTreeMap<u8, BTreeSet<u8>> = BTreeMap::new();
    for &(pre, post, _) in &net.connections {
        let src = placement.core_of(pre).0;
        let dst = placement.core_of(post).0;
        if src != dst {
            flows.entry(src).or_default().insert(dst);
        }
    }
    let routing = synthesize_routes(&flows, &graph)?;
    netlist.routes = routing.routes;
    netlist.relays = routing.relays;

    // input layer mapping (layer 0), output layer mapping (last layer)
    for g in net.layer_range(0) {
        let (core, local) = placement.core_of(g);
        netlist.inputs.push(IoLine { core, local_neuron: local, global_neuron: g, buffer: None });
    }
    if net.layers.len() > 1 {
        for g in net.layer_range(net.layers.len() - 1) {
            let (core, local) = placement.core_of(g);
            netlist.outputs.push(IoLine {
                core,
                local_neuron: local,
                global_neuron: g,
                buffer: Some(network_id),
            });
        }
    }

    q_connections.sort_unstable();
    let quantized = QuantizedNetwork {
        layers: net.layers.clone(),
        connections: q_connections,
        codebooks,
        mse: if net.connections.is_empty() {
            0.0
        } else {
            total_se / net.connections.len() as f64
        },
        occupancy,
    };

    Ok(CompileOutput { netlist, placement, quantized })
}

// ---------------------------------------------------------------------------
// Golden sequential evaluator
// ---------------------------------------------------------------------------

/// Sequential reference evaluation of a quantized network: exact integer
/// semantics, no pipelining or routing. Input trace records are
/// `(timestep, global input neuron)` events delivered at their timestep;
/// spikes fired by network neurons reach their targets one timestep later.
/// Returns every fired spike as `(timestep, global neuron)`.
pub fn golden_eval_quantized(
    net: &QuantizedNetwork,
    input_trace: &[(u32, u32)],
    timesteps: u32,
) -> Vec<(u32, u32)> {
    let total: u32 = net.layers.iter().map(|l| l.neurons).sum();
    let params: Vec<&LayerSpec> = {
        let mut v = Vec::with_capacity(total as usize);
        for l in &net.layers {
            for _ in 0..l.neurons {
                v.push(l);
            }
        }
        v
    };
    let input_count = net.layers.first().map(|l| l.neurons).unwrap_or(0);
    let mut outgoing: BTreeMap<u32, Vec<(u32, i32)>> = BTreeMap::new();
    for &(pre, post, _, weight) in &net.connections {
        outgoing.entry(pre).or_default().push((post, weight));
    }

    let mut mp = vec![0i32; total as usize];
    let mut fired_prev: Vec<u32> = Vec::new();
    let mut out = Vec::new();

    for t in 0..timesteps {
        let mut contributions = vec![0i64; total as usize];
        for &(ts, g) in input_trace {
            if ts == t {
                if let Some(targets) = outgoing.get(&g) {
                    for &(post, weight) in targets {
                        contributions[post as usize] += weight as i64;
                    }
                }
            }
        }
        for &g in &fired_prev {
            if let Some(targets) = outgoing.get(&g) {
                for &(post, weight) in targets {
                    contributions[post as usize] += weight as i64;
                }
            }
        }

        let mut fired_now = Vec::new();
        // input-layer neurons fire exogenously only; they carry no dynamics
        for g in input_count..total {
            let p = params[g as usize];
            let mut state = neurocore::NeuronState { mp: mp[g as usize], fired_this_step: false };
            let reg = CoreRegParams { threshold: p.threshold, leak: p.leak, reset: p.reset };
            if reg.update(&mut state, contributions[g as usize]) {
                fired_now.push(g);
                out.push((t, g));
            }
            mp[g as usize] = state.mp;
        }
        fired_prev = fired_now;
    }
    out
}

/// Same reference loop over real-valued weights, for pre-quantization
/// sanity checks. Membrane potentials stay in f64 with the same
/// saturation bounds and integrate-leak-fire ordering.
pub fn golden_eval_real(
    net: &NetworkDescription,
    input_trace: &[(u32, u32)],
    timesteps: u32,
) -> Vec<(u32, u32)> {
    let total = net.total_neurons();
    let mut params = Vec::with_capacity(total as usize);
    for l in &net.layers {
        for _ in 0..l.neurons {
            params.push(*l);
        }
    }
    let input_count = net.layers.first().map(|l| l.neurons).unwrap_or(0);
    let mut outgoing: BTreeMap<u32, Vec<(u32, f64)>> = BTreeMap::new();
    for &(pre, post, w) in &net.connections {
        outgoing.entry(pre).or_default().push((post, w));
    }

    let (lo, hi) = (neurocore::MP_MIN as f64, neurocore::MP_MAX as f64);
    let mut mp = vec![0.0f64; total as usize];
    let mut fired_prev: Vec<u32> = Vec::new();
    let mut out = Vec::new();
    for t in 0..timesteps {
        let mut contributions = vec![0.0f64; total as usize];
        for &(ts, g) in input_trace.iter().filter(|&&(ts, _)| ts == t) {
            let _ = ts;
            if let Some(targets) = outgoing.get(&g) {
                for &(post, w) in targets {
                    contributions[post as usize] += w;
                }
            }
        }
        for &g in &fired_prev {
            if let Some(targets) = outgoing.get(&g) {
                for &(post, w) in targets {
                    contributions[post as usize] += w;
                }
            }
        }
        let mut fired_now = Vec::new();
        for g in input_count..total {
            let p = params[g as usize];
            let i = g as usize;
            if contributions[i] != 0.0 {
                mp[i] = (mp[i] + contributions[i]).clamp(lo, hi);
            }
            mp[i] = (mp[i] - p.leak as f64).clamp(lo, hi);
            if mp[i] >= p.threshold as f64 {
                mp[i] = match p.reset {
                    ResetMode::ToZero => 0.0,
                    ResetMode::Subtract => (mp[i] - p.threshold as f64).clamp(lo, hi),
                };
                fired_now.push(g);
                out.push((t, g));
            }
        }
        fired_prev = fired_now;
    }
    out
}

struct CoreRegParams {
    threshold: i32,
    leak: u32,
    reset: ResetMode,
}

impl CoreRegParams {
    fn update(&self, state: &mut neurocore::NeuronState, contribution: i64) -> bool {
        let mut table = neurocore::CoreRegisterTable::new(0, 4, 8).expect("static params");
        table.threshold = self.threshold;
        table.leak = self.leak;
        table.reset_mode = self.reset;
        neurocore::neuron_update(state, contribution, &table)
    }
}
