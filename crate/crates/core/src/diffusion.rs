//! SIR cascade simulation on scale-free broadcast networks: power-law
//! audience sizes wired to uniformly random followers, discrete-generation
//! contagion, diffusion trees, and popularity/virality statistics.
//!
//! The network is directed in the broadcast sense: an edge u → v means v
//! receives what u shares. Audience sizes follow the truncated power law,
//! while followers attach uniformly at random, so the expected number of
//! secondary infections stays k̄·β in every generation (no size-biased
//! explosion through hubs). Popular cascades are the rare runs that reach a
//! large audience anyway.
//!
//! Graphs are immutable after construction and shared read-only across
//! cascade workers; each cascade owns its stream, so batch aggregation is
//! independent of scheduling order.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use crate::error::{config_err, domain_err, Error, Result};
use crate::numerics::rng::RngStream;
use crate::numerics::sample::sample_power_law_degrees;
use crate::numerics::stats::pearson;

/// Broadcast graph in CSR form: `neighbors(u)` is u's audience. No
/// self-loops, no duplicate edges.
#[derive(Clone, Debug)]
pub struct DiffusionNetwork {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    pub alpha: f64,
    /// Mean audience size recomputed from the final edge set (after
    /// cleanup), not the raw degree sequence.
    pub mean_degree: f64,
}

impl DiffusionNetwork {
    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn num_edges(&self) -> usize {
        self.neighbors.len()
    }

    pub fn neighbors(&self, node: u32) -> &[u32] {
        &self.neighbors[self.offsets[node as usize]..self.offsets[node as usize + 1]]
    }

    pub fn from_edges(n: usize, mut edges: Vec<(u32, u32)>, alpha: f64) -> Self {
        // Drop self-loops, dedup (u, v) pairs.
        edges.retain(|(u, v)| u != v);
        edges.sort_unstable();
        edges.dedup();

        let mut degrees = vec![0usize; n];
        for &(u, _) in &edges {
            degrees[u as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degrees {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets.clone();
        let mut neighbors = vec![0u32; edges.len()];
        for &(u, v) in &edges {
            neighbors[cursor[u as usize]] = v;
            cursor[u as usize] += 1;
        }
        let mean_degree = edges.len() as f64 / n.max(1) as f64;
        DiffusionNetwork {
            offsets,
            neighbors,
            alpha,
            mean_degree,
        }
    }

    /// Sorted whitespace edge list, "u v" per line (u broadcasts to v),
    /// 0-based ids.
    pub fn save_edge_list(&self, path: &Path) -> std::io::Result<()> {
        let mut out = String::new();
        for u in 0..self.num_nodes() as u32 {
            for &v in self.neighbors(u) {
                writeln!(out, "{u} {v}").expect("string write");
            }
        }
        std::fs::write(path, out)
    }

    /// Load an edge list written by [`Self::save_edge_list`]; the node count
    /// is 1 + the largest id seen.
    pub fn load_edge_list(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("read {}: {e}", path.display())))?;
        let mut edges = Vec::new();
        let mut max_node = 0u32;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<u32> {
                tok.ok_or_else(|| {
                    Error::Config(format!("edge list line {} malformed", lineno + 1))
                })?
                .parse::<u32>()
                .map_err(|e| Error::Config(format!("edge list line {}: {e}", lineno + 1)))
            };
            let u = parse(parts.next())?;
            let v = parse(parts.next())?;
            max_node = max_node.max(u).max(v);
            edges.push((u, v));
        }
        if edges.is_empty() {
            return config_err("edge list is empty");
        }
        Ok(Self::from_edges(max_node as usize + 1, edges, f64::NAN))
    }
}

/// Configuration-model wiring of a truncated power-law audience-size
/// sequence: each node's audience slots are filled with uniformly random
/// other nodes. Self-loops and duplicate edges are removed afterwards.
pub fn build_graph(n: usize, alpha: f64, stream: RngStream) -> Result<DiffusionNetwork> {
    if n < 100 {
        return config_err("build_graph: need at least 100 nodes");
    }
    let mut rng = stream.rng();
    let degrees = sample_power_law_degrees(n, alpha, &mut rng)?;
    let mut edges: Vec<(u32, u32)> = Vec::with_capacity(degrees.iter().sum());
    for (node, &d) in degrees.iter().enumerate() {
        let node = node as u32;
        for _ in 0..d {
            let target = rng.random_range(0..n as u32);
            edges.push((node, target));
        }
    }
    Ok(DiffusionNetwork::from_edges(n, edges, alpha))
}

/// Infection probability for a target basic reproduction number r = k̄·β,
/// clamped to [0,1] with a warning.
pub fn beta_for_r(graph: &DiffusionNetwork, r: f64) -> Result<f64> {
    if graph.mean_degree == 0.0 {
        return domain_err("beta_for_r: graph has mean degree 0");
    }
    if r <= 0.0 {
        return domain_err("beta_for_r: r must be positive");
    }
    let beta = r / graph.mean_degree;
    if beta > 1.0 {
        log::warn!(
            "beta {beta:.4} for r={r} exceeds 1 on a graph with mean degree {:.4}; clamped",
            graph.mean_degree
        );
        return Ok(1.0);
    }
    Ok(beta)
}

/// Infection tree of one cascade: nodes in infection order, each with the
/// node that first infected it.
#[derive(Clone, Debug)]
pub struct DiffusionTree {
    pub root: u32,
    /// (node, parent) pairs in infection order; parents always precede
    /// their children.
    pub infections: Vec<(u32, u32)>,
}

impl DiffusionTree {
    pub fn size(&self) -> usize {
        self.infections.len() + 1
    }
}

/// Reusable cascade scratch space. The visited array is allocated once and
/// reset by stamping, so each cascade only touches memory proportional to
/// the nodes it actually reaches.
pub struct CascadeWorkspace {
    stamp: Vec<u32>,
    current: u32,
}

impl CascadeWorkspace {
    pub fn new(num_nodes: usize) -> Self {
        CascadeWorkspace {
            stamp: vec![0; num_nodes],
            current: 0,
        }
    }
}

/// Discrete-generation SIR cascade from one seed.
///
/// Newly infected nodes attempt each susceptible neighbor once with
/// probability `beta`, then recover permanently. A node's parent is its
/// first infector; simultaneous infectors within one generation resolve to
/// the lowest node id because the frontier is processed in ascending order.
pub fn simulate_cascade<R: Rng + ?Sized>(
    graph: &DiffusionNetwork,
    seed_node: u32,
    beta: f64,
    rng: &mut R,
) -> DiffusionTree {
    let mut ws = CascadeWorkspace::new(graph.num_nodes());
    simulate_cascade_in(graph, seed_node, beta, rng, &mut ws)
}

/// As [`simulate_cascade`] but reusing scratch space across cascades.
pub fn simulate_cascade_in<R: Rng + ?Sized>(
    graph: &DiffusionNetwork,
    seed_node: u32,
    beta: f64,
    rng: &mut R,
    ws: &mut CascadeWorkspace,
) -> DiffusionTree {
    assert!(
        (seed_node as usize) < graph.num_nodes(),
        "seed out of range"
    );
    assert_eq!(ws.stamp.len(), graph.num_nodes(), "workspace size mismatch");
    ws.current = ws.current.checked_add(1).expect("cascade stamp overflow");
    let mark = ws.current;

    let mut infections = Vec::new();
    ws.stamp[seed_node as usize] = mark;
    let mut frontier = vec![seed_node];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &u in &frontier {
            for &v in graph.neighbors(u) {
                if ws.stamp[v as usize] == mark {
                    continue; // already infected or recovered
                }
                if rng.random_bool(beta) {
                    ws.stamp[v as usize] = mark;
                    infections.push((v, u));
                    next.push(v);
                }
            }
        }
        frontier = next;
    }
    DiffusionTree {
        root: seed_node,
        infections,
    }
}

/// Structural virality: mean path distance over all unordered node pairs of
/// the diffusion tree, via O(size) subtree aggregation (the total pairwise
/// distance equals Σ over edges of s·(n−s) for subtree size s).
pub fn structural_virality(tree: &DiffusionTree) -> Result<f64> {
    let n = tree.size();
    if n < 2 {
        return domain_err("structural virality undefined for trees below 2 nodes");
    }
    let mut index = std::collections::HashMap::with_capacity(n);
    index.insert(tree.root, 0usize);
    for (k, &(node, _)) in tree.infections.iter().enumerate() {
        index.insert(node, k + 1);
    }
    let mut subtree = vec![1u64; n];
    // Children appear after parents in infection order, so one reverse pass
    // accumulates subtree sizes bottom-up.
    let mut dist_sum = 0u128;
    for &(node, parent) in tree.infections.iter().rev() {
        let ni = index[&node];
        let pi = index[&parent];
        let s = subtree[ni];
        subtree[pi] += s;
        dist_sum += (s as u128) * ((n as u64 - s) as u128);
    }
    let pairs = (n as u128) * ((n - 1) as u128) / 2;
    Ok(dist_sum as f64 / pairs as f64)
}

/// Per-batch cascade statistics. Only popular cascades (size ≥ threshold)
/// keep per-run records.
#[derive(Clone, Debug, serde::Serialize)]
pub struct CascadeStats {
    pub trials: usize,
    pub popularity_threshold: usize,
    pub popular_count: usize,
    pub p_popular: f64,
    pub mean_virality: f64,
    pub sd_virality: f64,
    pub size_virality_correlation: f64,
    /// (trial, size, virality) for each popular cascade, in trial order.
    #[serde(skip)]
    pub popular: Vec<(usize, usize, f64)>,
}

/// Run `trials` cascades with uniformly random seed nodes, round-robin over
/// the provided graphs, with β = r / k̄ per graph.
pub fn run_cascade_batch(
    graphs: &[DiffusionNetwork],
    r: f64,
    trials: usize,
    popularity_threshold: usize,
    stream: RngStream,
) -> Result<CascadeStats> {
    if graphs.is_empty() {
        return config_err("cascade batch: need at least one graph");
    }
    if trials < 1 {
        return config_err("cascade batch: trials must be at least 1");
    }
    let betas: Vec<f64> = graphs
        .iter()
        .map(|g| beta_for_r(g, r))
        .collect::<Result<_>>()?;
    let mut workspaces: Vec<CascadeWorkspace> = graphs
        .iter()
        .map(|g| CascadeWorkspace::new(g.num_nodes()))
        .collect();
    let mut popular = Vec::new();
    for trial in 0..trials {
        let which = trial % graphs.len();
        let tree = run_one_cascade(
            &graphs[which],
            betas[which],
            trial,
            stream,
            &mut workspaces[which],
        );
        if tree.size() >= popularity_threshold {
            let v = structural_virality(&tree)?;
            popular.push((trial, tree.size(), v));
        }
    }
    Ok(summarize_batch(trials, popularity_threshold, popular))
}

/// One trial of a batch: seed choice and infection draws come from the
/// trial-indexed substream, so results are identical however trials are
/// scheduled.
pub fn run_one_cascade(
    graph: &DiffusionNetwork,
    beta: f64,
    trial: usize,
    stream: RngStream,
    ws: &mut CascadeWorkspace,
) -> DiffusionTree {
    let mut rng = stream.derive(trial as u64).rng();
    let seed_node = rng.random_range(0..graph.num_nodes() as u32);
    simulate_cascade_in(graph, seed_node, beta, &mut rng, ws)
}

/// Aggregate popular-cascade records into batch statistics.
pub fn summarize_batch(
    trials: usize,
    popularity_threshold: usize,
    popular: Vec<(usize, usize, f64)>,
) -> CascadeStats {
    let popular_count = popular.len();
    let p_popular = popular_count as f64 / trials as f64;
    let viralities: Vec<f64> = popular.iter().map(|(_, _, v)| *v).collect();
    let sizes: Vec<f64> = popular.iter().map(|(_, s, _)| *s as f64).collect();
    let mean_virality = if viralities.is_empty() {
        0.0
    } else {
        viralities.iter().sum::<f64>() / viralities.len() as f64
    };
    let sd_virality = if viralities.len() < 2 {
        0.0
    } else {
        let m = mean_virality;
        (viralities.iter().map(|v| (v - m) * (v - m)).sum::<f64>()
            / (viralities.len() - 1) as f64)
            .sqrt()
    };
    CascadeStats {
        trials,
        popularity_threshold,
        popular_count,
        p_popular,
        mean_virality,
        sd_virality,
        size_virality_correlation: pearson(&sizes, &viralities),
        popular,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(n: u64) -> RngStream {
        RngStream::new(2024, n)
    }

    /// Brute-force mean pairwise distance by BFS from every node.
    fn bfs_virality(tree: &DiffusionTree) -> f64 {
        let mut nodes: Vec<u32> = vec![tree.root];
        nodes.extend(tree.infections.iter().map(|(n, _)| *n));
        let index: std::collections::HashMap<u32, usize> =
            nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let n = nodes.len();
        let mut adj = vec![Vec::new(); n];
        for &(node, parent) in &tree.infections {
            let a = index[&node];
            let b = index[&parent];
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut total = 0u64;
        for start in 0..n {
            let mut dist = vec![u64::MAX; n];
            dist[start] = 0;
            let mut queue = std::collections::VecDeque::from([start]);
            while let Some(x) = queue.pop_front() {
                for &y in &adj[x] {
                    if dist[y] == u64::MAX {
                        dist[y] = dist[x] + 1;
                        queue.push_back(y);
                    }
                }
            }
            total += dist.iter().sum::<u64>();
        }
        total as f64 / (n * (n - 1)) as f64
    }

    fn tree_from_parents(parents: &[(u32, u32)]) -> DiffusionTree {
        DiffusionTree {
            root: 0,
            infections: parents.to_vec(),
        }
    }

    #[test]
    fn virality_two_node_tree() {
        let tree = tree_from_parents(&[(1, 0)]);
        assert_eq!(structural_virality(&tree).unwrap(), 1.0);
    }

    #[test]
    fn virality_star_five_nodes() {
        let tree = tree_from_parents(&[(1, 0), (2, 0), (3, 0), (4, 0)]);
        let v = structural_virality(&tree).unwrap();
        assert!((v - 1.6).abs() < 1e-12);
        assert!((v - bfs_virality(&tree)).abs() < 1e-12);
    }

    #[test]
    fn virality_path_four_nodes() {
        let tree = tree_from_parents(&[(1, 0), (2, 1), (3, 2)]);
        let v = structural_virality(&tree).unwrap();
        assert!((v - 5.0 / 3.0).abs() < 1e-12);
        assert!((v - bfs_virality(&tree)).abs() < 1e-12);
    }

    #[test]
    fn virality_single_node_is_error() {
        let tree = DiffusionTree {
            root: 4,
            infections: vec![],
        };
        assert!(structural_virality(&tree).is_err());
    }

    #[test]
    fn virality_matches_bfs_on_random_trees() {
        for rep in 0..200u64 {
            let mut rng = stream(rep).rng();
            let n = 2 + (rng.random_range(0..199) as usize);
            let mut infections = Vec::new();
            for node in 1..n as u32 {
                let parent = rng.random_range(0..node);
                infections.push((node, parent));
            }
            let tree = DiffusionTree {
                root: 0,
                infections,
            };
            let fast = structural_virality(&tree).unwrap();
            let slow = bfs_virality(&tree);
            assert!(
                (fast - slow).abs() < 1e-9,
                "rep {rep}: {fast} vs {slow} (n={n})"
            );
        }
    }

    #[test]
    fn graph_generation_reproducible() {
        let a = build_graph(500, 2.3, stream(1)).unwrap();
        let b = build_graph(500, 2.3, stream(1)).unwrap();
        assert_eq!(a.neighbors, b.neighbors);
        assert_eq!(a.offsets, b.offsets);
    }

    #[test]
    fn graph_has_no_self_loops_or_multi_edges() {
        let g = build_graph(2000, 2.1, stream(2)).unwrap();
        for u in 0..g.num_nodes() as u32 {
            let neigh = g.neighbors(u);
            assert!(neigh.iter().all(|&v| v != u), "self-loop at {u}");
            assert!(
                neigh.windows(2).all(|w| w[0] < w[1]),
                "duplicate edge at {u}"
            );
        }
    }

    #[test]
    fn steep_alpha_mean_degree_near_one() {
        let g = build_graph(10_000, 10.0, stream(3)).unwrap();
        assert!(
            (1.0..=1.1).contains(&g.mean_degree),
            "mean degree {}",
            g.mean_degree
        );
    }

    #[test]
    fn degree_tail_follows_alpha() {
        // Discrete MLE on the tail (k ≥ kmin) of the generated degree
        // sequence: alpha_hat = 1 + m / Σ ln(k/(kmin−0.5)).
        let n = 100_000;
        let alpha = 2.3;
        let mut rng = stream(4).rng();
        let degrees = sample_power_law_degrees(n, alpha, &mut rng).unwrap();
        let kmin = 10usize;
        let tail: Vec<f64> = degrees
            .iter()
            .filter(|&&k| k >= kmin)
            .map(|&k| k as f64)
            .collect();
        assert!(tail.len() > 100, "tail too small to fit");
        let denom: f64 = tail.iter().map(|k| (k / (kmin as f64 - 0.5)).ln()).sum();
        let alpha_hat = 1.0 + tail.len() as f64 / denom;
        assert!(
            (alpha_hat - alpha).abs() < 0.2,
            "MLE exponent {alpha_hat} vs {alpha}"
        );
    }

    #[test]
    fn beta_for_r_formula_and_clamp() {
        let mut g = build_graph(500, 2.5, stream(5)).unwrap();
        g.mean_degree = 5.0;
        assert!((beta_for_r(&g, 0.5).unwrap() - 0.1).abs() < 1e-12);
        g.mean_degree = 2.0;
        assert!((beta_for_r(&g, 0.9).unwrap() - 0.45).abs() < 1e-12);
        g.mean_degree = 0.5;
        assert_eq!(beta_for_r(&g, 0.9).unwrap(), 1.0);
        g.mean_degree = 0.0;
        assert!(beta_for_r(&g, 0.5).is_err());
    }

    #[test]
    fn cascade_beta_zero_is_seed_only() {
        let g = build_graph(300, 2.5, stream(6)).unwrap();
        let mut rng = stream(7).rng();
        let tree = simulate_cascade(&g, 17, 0.0, &mut rng);
        assert_eq!(tree.size(), 1);
        assert_eq!(tree.root, 17);
    }

    #[test]
    fn cascade_beta_one_covers_component() {
        let g = build_graph(300, 2.1, stream(8)).unwrap();
        let mut rng = stream(9).rng();
        let seed = 5u32;
        let tree = simulate_cascade(&g, seed, 1.0, &mut rng);
        let mut seen = std::collections::BTreeSet::new();
        seen.insert(seed);
        let mut queue = std::collections::VecDeque::from([seed]);
        while let Some(u) = queue.pop_front() {
            for &v in g.neighbors(u) {
                if seen.insert(v) {
                    queue.push_back(v);
                }
            }
        }
        assert_eq!(tree.size(), seen.len());
    }

    #[test]
    fn star_graph_expected_cascade_size() {
        // Star with center 0 and 4 leaves: E[size | seed=0] = 1 + 4β.
        let edges = vec![(0u32, 1u32), (0, 2), (0, 3), (0, 4)];
        let g = DiffusionNetwork::from_edges(5, edges, f64::NAN);
        let runs = 10_000;
        let mut total = 0usize;
        for rep in 0..runs {
            let mut rng = stream(100).derive(rep).rng();
            total += simulate_cascade(&g, 0, 0.5, &mut rng).size();
        }
        let mean = total as f64 / runs as f64;
        assert!((mean - 3.0).abs() < 0.1, "mean cascade size {mean}");
    }

    #[test]
    fn no_reinfection_each_node_once() {
        let g = build_graph(500, 2.3, stream(10)).unwrap();
        let mut rng = stream(11).rng();
        let tree = simulate_cascade(&g, 3, 0.8, &mut rng);
        let mut seen = std::collections::BTreeSet::new();
        seen.insert(tree.root);
        for &(node, parent) in &tree.infections {
            assert!(seen.contains(&parent), "parent {parent} infected late");
            assert!(seen.insert(node), "node {node} infected twice");
        }
    }

    #[test]
    fn batch_statistics_and_determinism() {
        let graphs: Vec<DiffusionNetwork> = (0..2)
            .map(|i| build_graph(2000, 2.3, stream(20 + i)).unwrap())
            .collect();
        let a = run_cascade_batch(&graphs, 0.9, 4000, 50, stream(30)).unwrap();
        let b = run_cascade_batch(&graphs, 0.9, 4000, 50, stream(30)).unwrap();
        assert_eq!(a.popular_count, b.popular_count);
        assert_eq!(a.popular, b.popular);
        assert!(a.p_popular >= 0.0 && a.p_popular <= 1.0);
        if a.popular_count >= 2 {
            assert!(a.sd_virality >= 0.0);
            assert!(a.size_virality_correlation.abs() <= 1.0);
        }
    }

    #[test]
    fn edge_list_round_trip() {
        let g = build_graph(300, 2.5, stream(40)).unwrap();
        let dir = std::env::temp_dir().join("simrec-edge-list-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("graph.txt");
        g.save_edge_list(&path).unwrap();
        let loaded = DiffusionNetwork::load_edge_list(&path).unwrap();
        assert_eq!(loaded.num_edges(), g.num_edges());
        assert_eq!(loaded.neighbors, g.neighbors);
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn tiny_edge_list_mean_degree() {
        let dir = std::env::temp_dir().join("simrec-edge-list-test2");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("tiny.txt");
        std::fs::write(&path, "0 1\n2 3\n").unwrap();
        let g = DiffusionNetwork::load_edge_list(&path).unwrap();
        assert_eq!(g.num_nodes(), 4);
        // 2 directed edges over 4 nodes: the beta-clamp regime.
        assert_eq!(g.mean_degree, 0.5);
        assert_eq!(beta_for_r(&g, 0.9).unwrap(), 1.0);
        std::fs::remove_file(&path).unwrap();
    }
}
