//! Interconnect topology graphs and their metrics.
//!
//! The routing domain is the vertex-face incidence graph of the
//! icosahedron: 12 level-1 routers on the vertices, 20 cores on the
//! triangular faces, one edge per incidence. That adjacency reproduces all
//! three published figures at once — mean degree 3.75, degree variance
//! 15/16, mean core-pair distance 60/19 hops — so it is fixed here as the
//! canonical construction. Mesh, tree and torus builders provide
//! comparison baselines.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use num_rational::Ratio;

use crate::error::{Result, SimError};

/// Dense node index within one graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Role of a node in the interconnect.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Core,
    RouterL1,
    RouterL2,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Core => "core",
            NodeKind::RouterL1 => "router_l1",
            NodeKind::RouterL2 => "router_l2",
        }
    }
}

/// Undirected interconnect graph with typed nodes.
#[derive(Debug, Clone)]
pub struct TopologyGraph {
    name: String,
    kinds: Vec<NodeKind>,
    edges: Vec<(NodeId, NodeId)>,
    adjacency: Vec<Vec<NodeId>>,
}

impl TopologyGraph {
    fn new(name: impl Into<String>, kinds: Vec<NodeKind>) -> Self {
        let n = kinds.len();
        TopologyGraph {
            name: name.into(),
            kinds,
            edges: Vec::new(),
            adjacency: vec![Vec::new(); n],
        }
    }

    fn add_edge(&mut self, a: NodeId, b: NodeId) {
        debug_assert!(a != b, "self loop");
        debug_assert!(!self.adjacency[a.index()].contains(&b), "duplicate edge");
        let (lo, hi) = if a.0 <= b.0 { (a, b) } else { (b, a) };
        self.edges.push((lo, hi));
        self.adjacency[a.index()].push(b);
        self.adjacency[b.index()].push(a);
    }

    /// Keep adjacency lists sorted so traversal order is deterministic.
    fn finish(mut self) -> Self {
        for list in &mut self.adjacency {
            list.sort_unstable();
        }
        self.edges.sort_unstable();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn node_count(&self) -> usize {
        self.kinds.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn kind(&self, id: NodeId) -> NodeKind {
        self.kinds[id.index()]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, NodeKind)> + '_ {
        self.kinds.iter().enumerate().map(|(i, &k)| (NodeId(i as u32), k))
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    /// Neighbors in ascending id order.
    pub fn neighbors(&self, id: NodeId) -> &[NodeId] {
        &self.adjacency[id.index()]
    }

    pub fn degree(&self, id: NodeId) -> usize {
        self.adjacency[id.index()].len()
    }

    pub fn nodes_of_kind(&self, kind: NodeKind) -> Vec<NodeId> {
        self.nodes().filter(|&(_, k)| k == kind).map(|(id, _)| id).collect()
    }

    /// BFS hop distances from `src` to every node (`u32::MAX` if unreachable).
    pub fn bfs_distances(&self, src: NodeId) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.node_count()];
        dist[src.index()] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u.index()];
            for &v in self.neighbors(u) {
                if dist[v.index()] == u32::MAX {
                    dist[v.index()] = du + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        if self.node_count() == 0 {
            return true;
        }
        self.bfs_distances(NodeId(0)).iter().all(|&d| d != u32::MAX)
    }

    /// Render as an edge-list text file: `# name |V| |E|` then `u v` lines.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("# {} {} {}\n", self.name, self.node_count(), self.edge_count());
        for &(a, b) in &self.edges {
            s.push_str(&format!("{a} {b}\n"));
        }
        s
    }

    /// Render the node-kind annotation file: `id kind` lines.
    pub fn to_kind_list(&self) -> String {
        let mut s = String::new();
        for (id, kind) in self.nodes() {
            s.push_str(&format!("{id} {}\n", kind.as_str()));
        }
        s
    }
}

/// Number of level-1 routers in one fullerene domain.
pub const DOMAIN_ROUTERS: usize = 12;
/// Number of cores in one fullerene domain.
pub const DOMAIN_CORES: usize = 20;
/// First core id in a domain (routers occupy 0..12).
pub const CORE_ID_BASE: u32 = DOMAIN_ROUTERS as u32;

/// Icosahedron faces as vertex triples, in the fixed numbering used
/// everywhere in this crate: vertex 0 is the north pole, 1..=5 the upper
/// ring, 6..=10 the lower ring, 11 the south pole.
pub fn icosahedron_faces() -> [[u32; 3]; DOMAIN_CORES] {
    let mut faces = [[0u32; 3]; DOMAIN_CORES];
    let upper = |i: u32| 1 + i % 5;
    let lower = |i: u32| 6 + i % 5;
    for i in 0..5u32 {
        // top cap, upper band, lower band, bottom cap
        faces[i as usize] = [0, upper(i), upper(i + 1)];
        faces[5 + i as usize] = [upper(i), upper(i + 1), lower(i)];
        faces[10 + i as usize] = [upper(i + 1), lower(i), lower(i + 1)];
        faces[15 + i as usize] = [lower(i), lower(i + 1), 11];
    }
    faces
}

/// Build the level-1 fullerene-like routing domain: 12 level-1 routers
/// (icosahedron vertices, ids 0..12) and 20 cores (faces, ids 12..32),
/// one edge per vertex-face incidence. Every router ends with degree 5,
/// every core with degree 3. Construction is deterministic.
pub fn build_fullerene_domain() -> TopologyGraph {
    let mut kinds = vec![NodeKind::RouterL1; DOMAIN_ROUTERS];
    kinds.extend(std::iter::repeat_n(NodeKind::Core, DOMAIN_CORES));
    let mut g = TopologyGraph::new("fullerene", kinds);
    for (face_idx, verts) in icosahedron_faces().iter().enumerate() {
        let core = NodeId(CORE_ID_BASE + face_idx as u32);
        for &v in verts {
            g.add_edge(NodeId(v), core);
        }
    }
    g.finish()
}

/// `width x height` grid of core nodes with 4-neighbor links.
pub fn build_mesh(width: usize, height: usize) -> Result<TopologyGraph> {
    if width == 0 || height == 0 {
        return Err(SimError::invalid("mesh dimensions must be at least 1x1"));
    }
    let kinds = vec![NodeKind::Core; width * height];
    let mut g = TopologyGraph::new(format!("mesh{width}x{height}"), kinds);
    let id = |x: usize, y: usize| NodeId((y * width + x) as u32);
    for y in 0..height {
        for x in 0..width {
            if x + 1 < width {
                g.add_edge(id(x, y), id(x + 1, y));
            }
            if y + 1 < height {
                g.add_edge(id(x, y), id(x, y + 1));
            }
        }
    }
    Ok(g.finish())
}

/// Complete `fanout`-ary tree of the given depth (depth 0 = root only).
pub fn build_tree(fanout: usize, depth: usize) -> Result<TopologyGraph> {
    if fanout < 2 {
        return Err(SimError::invalid("tree fanout must be at least 2"));
    }
    if depth < 1 {
        return Err(SimError::invalid("tree depth must be at least 1"));
    }
    let mut total = 1usize;
    let mut level = 1usize;
    for _ in 0..depth {
        level *= fanout;
        total += level;
    }
    let kinds = vec![NodeKind::Core; total];
    let mut g = TopologyGraph::new(format!("tree{fanout}d{depth}"), kinds);
    // children of node i are fanout*i+1 ..= fanout*i+fanout
    for i in 0..total {
        for c in 1..=fanout {
            let child = fanout * i + c;
            if child < total {
                g.add_edge(NodeId(i as u32), NodeId(child as u32));
            }
        }
    }
    Ok(g.finish())
}

/// 2D torus (grid with wraparound links). Requires both sides >= 3 so the
/// wrap edges stay distinct from grid edges.
pub fn build_torus(width: usize, height: usize) -> Result<TopologyGraph> {
    if width < 3 || height < 3 {
        return Err(SimError::invalid("torus dimensions must be at least 3x3"));
    }
    let kinds = vec![NodeKind::Core; width * height];
    let mut g = TopologyGraph::new(format!("torus{width}x{height}"), kinds);
    let id = |x: usize, y: usize| NodeId((y * width + x) as u32);
    for y in 0..height {
        for x in 0..width {
            g.add_edge(id(x, y), id((x + 1) % width, y));
            g.add_edge(id(x, y), id(x, (y + 1) % height));
        }
    }
    Ok(g.finish())
}

/// Rebuild a core-only baseline as a router fabric: every node becomes a
/// level-1 router and one core is attached to each. This is the
/// apples-to-apples form for comparing core-pair latency against the
/// fullerene domain, where transit always passes through routers.
pub fn attach_cores(g: &TopologyGraph) -> TopologyGraph {
    let n = g.node_count();
    let mut kinds = vec![NodeKind::RouterL1; n];
    kinds.extend(std::iter::repeat_n(NodeKind::Core, n));
    let mut out = TopologyGraph::new(format!("{}+cores", g.name()), kinds);
    for &(a, b) in g.edges() {
        out.add_edge(a, b);
    }
    for i in 0..n {
        out.add_edge(NodeId(i as u32), NodeId((n + i) as u32));
    }
    out.finish()
}

/// Attach the level-2 scale-up router: one node adjacent to all 12 level-1
/// routers of a fullerene domain. Rejects graphs that are not exactly one
/// unexpanded domain (12 level-1 routers, no level-2 router yet).
pub fn attach_level2(domain: &TopologyGraph) -> Result<TopologyGraph> {
    let routers = domain.nodes_of_kind(NodeKind::RouterL1);
    if routers.len() != DOMAIN_ROUTERS {
        return Err(SimError::invalid(format!(
            "attach_level2 expects {} level-1 routers, found {}",
            DOMAIN_ROUTERS,
            routers.len()
        )));
    }
    if !domain.nodes_of_kind(NodeKind::RouterL2).is_empty() {
        return Err(SimError::invalid("domain already has a level-2 router"));
    }
    let mut kinds = domain.kinds.clone();
    kinds.push(NodeKind::RouterL2);
    let l2 = NodeId(domain.node_count() as u32);
    let mut g = TopologyGraph::new(format!("{}+l2", domain.name()), kinds);
    for &(a, b) in domain.edges() {
        g.add_edge(a, b);
    }
    for r in routers {
        g.add_edge(r, l2);
    }
    Ok(g.finish())
}

/// Pattern linking the level-2 routers of composed domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterLink {
    Chain,
    FullMesh,
}

/// Compose `k` fullerene domains, each with its level-2 router, joining
/// the level-2 routers per `inter_link`.
pub fn compose_domains(k: usize, inter_link: InterLink) -> Result<TopologyGraph> {
    if k == 0 {
        return Err(SimError::invalid("compose_domains requires k >= 1"));
    }
    let domain = attach_level2(&build_fullerene_domain())?;
    let per = domain.node_count(); // 33
    let mut kinds = Vec::with_capacity(per * k);
    for _ in 0..k {
        kinds.extend_from_slice(&domain.kinds);
    }
    let mut g = TopologyGraph::new(format!("fullerene-x{k}"), kinds);
    for d in 0..k {
        let base = (d * per) as u32;
        for &(a, b) in domain.edges() {
            g.add_edge(NodeId(base + a.0), NodeId(base + b.0));
        }
    }
    let l2_of = |d: usize| NodeId((d * per + per - 1) as u32);
    match inter_link {
        InterLink::Chain => {
            for d in 1..k {
                g.add_edge(l2_of(d - 1), l2_of(d));
            }
        }
        InterLink::FullMesh => {
            for i in 0..k {
                for j in (i + 1)..k {
                    g.add_edge(l2_of(i), l2_of(j));
                }
            }
        }
    }
    Ok(g.finish())
}

/// Exact degree statistics over all nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeStats {
    /// `2|E| / |V|`.
    pub mean_degree: Ratio<i64>,
    /// Population variance of node degree.
    pub degree_variance: Ratio<i64>,
    pub degree_histogram: BTreeMap<usize, usize>,
}

pub fn degree_stats(g: &TopologyGraph) -> Result<DegreeStats> {
    let n = g.node_count();
    if n == 0 {
        return Err(SimError::invalid("degree_stats of an empty graph"));
    }
    let mut histogram = BTreeMap::new();
    let mut sum: i64 = 0;
    let mut sum_sq: i64 = 0;
    for (id, _) in g.nodes() {
        let d = g.degree(id);
        *histogram.entry(d).or_insert(0) += 1;
        sum += d as i64;
        sum_sq += (d * d) as i64;
    }
    let n = n as i64;
    let mean = Ratio::new(sum, n);
    // population variance: E[d^2] - (E[d])^2
    let variance = Ratio::new(sum_sq, n) - mean * mean;
    Ok(DegreeStats { mean_degree: mean, degree_variance: variance, degree_histogram: histogram })
}

/// Exact shortest-path statistics over unordered pairs of distinct cores.
/// Routers are transit nodes and do not form pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct LatencyStats {
    pub mean_core_pair_hops: Ratio<i64>,
    pub diameter_hops: u32,
    /// hop count -> number of core pairs at that distance
    pub histogram: BTreeMap<u32, u64>,
}

pub fn latency_stats(g: &TopologyGraph) -> Result<LatencyStats> {
    let cores = g.nodes_of_kind(NodeKind::Core);
    if cores.len() < 2 {
        return Err(SimError::invalid("latency_stats needs at least 2 core nodes"));
    }
    let mut histogram: BTreeMap<u32, u64> = BTreeMap::new();
    let mut total: i64 = 0;
    let mut diameter = 0u32;
    for (i, &src) in cores.iter().enumerate() {
        let dist = g.bfs_distances(src);
        for &dst in &cores[i + 1..] {
            let d = dist[dst.index()];
            if d == u32::MAX {
                return Err(SimError::invalid(format!(
                    "graph is disconnected: no path from core {src} to core {dst}"
                )));
            }
            *histogram.entry(d).or_insert(0) += 1;
            total += d as i64;
            diameter = diameter.max(d);
        }
    }
    let pairs = (cores.len() * (cores.len() - 1) / 2) as i64;
    Ok(LatencyStats {
        mean_core_pair_hops: Ratio::new(total, pairs),
        diameter_hops: diameter,
        histogram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent all-pairs oracle: Floyd-Warshall over the edge list,
    /// sharing nothing with the BFS path used by `latency_stats`.
    fn floyd_warshall(g: &TopologyGraph) -> Vec<Vec<u32>> {
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

    #[test]
    fn fullerene_counts() {
        let g = build_fullerene_domain();
        assert_eq!(g.node_count(), 32);
        assert_eq!(g.edge_count(), 60);
        for (id, kind) in g.nodes() {
            match kind {
                NodeKind::RouterL1 => assert_eq!(g.degree(id), 5, "router {id}"),
                NodeKind::Core => assert_eq!(g.degree(id), 3, "core {id}"),
                NodeKind::RouterL2 => panic!("no level-2 router in the bare domain"),
            }
        }
        assert!(g.is_connected());
    }

    #[test]
    fn fullerene_is_deterministic() {
        let a = build_fullerene_domain();
        let b = build_fullerene_domain();
        assert_eq!(a.edges(), b.edges());
    }

    #[test]
    fn fullerene_is_bipartite_core_router() {
        let g = build_fullerene_domain();
        for &(a, b) in g.edges() {
            let kinds = (g.kind(a), g.kind(b));
            assert!(
                matches!(kinds, (NodeKind::Core, NodeKind::RouterL1))
                    || matches!(kinds, (NodeKind::RouterL1, NodeKind::Core)),
                "edge {a}-{b} joins {kinds:?}"
            );
        }
    }

    #[test]
    fn fullerene_degree_stats_exact() {
        let g = build_fullerene_domain();
        let s = degree_stats(&g).unwrap();
        assert_eq!(s.mean_degree, Ratio::new(15, 4)); // 3.75
        assert_eq!(s.degree_variance, Ratio::new(15, 16)); // 0.9375
        assert_eq!(s.degree_histogram[&3], 20);
        assert_eq!(s.degree_histogram[&5], 12);
    }

    #[test]
    fn fullerene_latency_exact() {
        let g = build_fullerene_domain();
        let s = latency_stats(&g).unwrap();
        assert_eq!(s.mean_core_pair_hops, Ratio::new(60, 19)); // ~3.158
        assert_eq!(s.diameter_hops, 6);
        // per-core neighborhoods: 9 pairs at 2 hops, 9 at 4, 1 at 6
        assert_eq!(s.histogram[&2], 90);
        assert_eq!(s.histogram[&4], 90);
        assert_eq!(s.histogram[&6], 10);
    }

    #[test]
    fn latency_matches_floyd_warshall_oracle() {
        let g = build_fullerene_domain();
        let d = floyd_warshall(&g);
        let cores = g.nodes_of_kind(NodeKind::Core);
        let mut total = 0i64;
        let mut count = 0i64;
        for (i, &a) in cores.iter().enumerate() {
            for &b in &cores[i + 1..] {
                total += d[a.index()][b.index()] as i64;
                count += 1;
            }
        }
        let s = latency_stats(&g).unwrap();
        assert_eq!(s.mean_core_pair_hops, Ratio::new(total, count));
    }

    #[test]
    fn cores_sharing_a_router_are_two_hops_apart() {
        let g = build_fullerene_domain();
        let router = NodeId(0);
        let faces = g.neighbors(router);
        assert_eq!(faces.len(), 5);
        let d = g.bfs_distances(faces[0]);
        assert_eq!(d[faces[1].index()], 2);
    }

    #[test]
    fn antipodal_cores_are_six_hops_apart() {
        let g = build_fullerene_domain();
        let faces = icosahedron_faces();
        let d = g.bfs_distances(NodeId(CORE_ID_BASE));
        let at_six: Vec<usize> = (0..DOMAIN_CORES)
            .filter(|&f| d[NodeId(CORE_ID_BASE + f as u32).index()] == 6)
            .collect();
        // exactly one antipodal face, sharing no vertex with face 0
        assert_eq!(at_six.len(), 1);
        let far = faces[at_six[0]];
        assert!(faces[0].iter().all(|v| !far.contains(v)));
    }

    #[test]
    fn degree_sum_is_twice_edge_count() {
        for g in [
            build_fullerene_domain(),
            build_mesh(4, 5).unwrap(),
            build_tree(4, 2).unwrap(),
            build_torus(3, 3).unwrap(),
            attach_level2(&build_fullerene_domain()).unwrap(),
            compose_domains(3, InterLink::FullMesh).unwrap(),
        ] {
            let sum: usize = g.nodes().map(|(id, _)| g.degree(id)).sum();
            assert_eq!(sum, 2 * g.edge_count(), "{}", g.name());
        }
    }

    #[test]
    fn mesh_examples() {
        let g = build_mesh(1, 1).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (1, 0));
        let g = build_mesh(4, 5).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (20, 31));
        let g = build_mesh(2, 2).unwrap();
        assert_eq!(degree_stats(&g).unwrap().mean_degree, Ratio::new(2, 1));
        assert!(build_mesh(0, 3).is_err());
    }

    #[test]
    fn tree_and_torus_examples() {
        let g = build_tree(2, 2).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (7, 6));
        let g = build_torus(3, 3).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (9, 18));
        let s = degree_stats(&g).unwrap();
        assert_eq!(s.mean_degree, Ratio::new(4, 1));
        assert_eq!(s.degree_variance, Ratio::new(0, 1));
        let s = degree_stats(&build_torus(4, 4).unwrap()).unwrap();
        assert_eq!(s.degree_variance, Ratio::new(0, 1));
        assert!(build_tree(1, 2).is_err());
        assert!(build_torus(2, 3).is_err());
    }

    #[test]
    fn level2_attachment() {
        let g = attach_level2(&build_fullerene_domain()).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (33, 72));
        let l2 = g.nodes_of_kind(NodeKind::RouterL2);
        assert_eq!(l2.len(), 1);
        assert_eq!(g.degree(l2[0]), 12);
        // applying twice is rejected
        assert!(attach_level2(&g).is_err());
        // and a mesh lacks the 12 level-1 routers
        assert!(attach_level2(&build_mesh(4, 5).unwrap()).is_err());
    }

    #[test]
    fn level2_never_increases_core_distances() {
        let base = build_fullerene_domain();
        let ext = attach_level2(&base).unwrap();
        let cores = base.nodes_of_kind(NodeKind::Core);
        for &src in &cores {
            let d0 = base.bfs_distances(src);
            let d1 = ext.bfs_distances(src);
            for &dst in &cores {
                assert!(d1[dst.index()] <= d0[dst.index()]);
            }
        }
    }

    #[test]
    fn compose_examples() {
        let one = compose_domains(1, InterLink::Chain).unwrap();
        let direct = attach_level2(&build_fullerene_domain()).unwrap();
        assert_eq!(one.edges(), direct.edges());
        let two = compose_domains(2, InterLink::Chain).unwrap();
        assert_eq!((two.node_count(), two.edge_count()), (66, 145));
        let three = compose_domains(3, InterLink::FullMesh).unwrap();
        let l2s = three.nodes_of_kind(NodeKind::RouterL2);
        assert_eq!(l2s.len(), 3);
        for &a in &l2s {
            for &b in &l2s {
                if a != b {
                    assert!(three.neighbors(a).contains(&b));
                }
            }
        }
        assert!(three.is_connected());
        assert!(compose_domains(0, InterLink::Chain).is_err());
    }

    #[test]
    fn attached_mesh_baseline_is_slower_than_fullerene() {
        let fullerene = latency_stats(&build_fullerene_domain()).unwrap();
        let mesh = latency_stats(&attach_cores(&build_mesh(4, 5).unwrap())).unwrap();
        let tree = latency_stats(&attach_cores(&build_tree(4, 2).unwrap())).unwrap();
        assert_eq!(mesh.mean_core_pair_hops, Ratio::new(5, 1));
        assert!(fullerene.mean_core_pair_hops < mesh.mean_core_pair_hops);
        assert!(fullerene.mean_core_pair_hops < tree.mean_core_pair_hops);
    }

    #[test]
    fn disconnected_latency_names_a_pair() {
        // two isolated cores
        let kinds = vec![NodeKind::Core, NodeKind::Core];
        let g = TopologyGraph::new("split", kinds).finish();
        let err = latency_stats(&g).unwrap_err();
        assert!(err.to_string().contains("core 0"));
        assert!(err.to_string().contains("core 1"));
    }

    #[test]
    fn edge_list_export_format() {
        let g = build_mesh(2, 1).unwrap();
        assert_eq!(g.to_edge_list(), "# mesh2x1 2 1\n0 1\n");
        assert_eq!(g.to_kind_list(), "0 core\n1 core\n");
    }
}
