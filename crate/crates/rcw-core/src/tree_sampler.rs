//! Weighted sampling of arbitrary connected networks.
//!
//! One-time preprocessing builds a spanning tree and aggregates node weights
//! over it with a distributed leaf-to-leaf protocol, leaving each node one
//! value `T_i(x)` per incident tree edge: the total weight of the subtree
//! behind that edge. After that, any node can source walks that follow the
//! tree away from it, stopping at node `i` with probability
//! `w(i) / (w(i) + sum of T_i over the remaining candidates)` — which makes
//! every node's selection probability exactly `w(i) / eta`.

use rand::Rng;

use crate::error::{RcwError, Result};
use crate::oracle_stats::{dag_oracle, ExactLaw, TopoOrder};
use crate::simnet::{Ctx, NodeTask, Payload, SimEngine};
use crate::topology::{Network, NodeId};

/// Spanning tree rooted at a minimum-eccentricity node.
#[derive(Debug, Clone)]
pub struct SpanningTree {
    adj: Vec<Vec<NodeId>>,
    root: NodeId,
    diameter: usize,
}

impl SpanningTree {
    pub fn neighbors(&self, x: NodeId) -> &[NodeId] {
        &self.adj[x]
    }

    pub fn adjacency(&self) -> &[Vec<NodeId>] {
        &self.adj
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn diameter(&self) -> usize {
        self.diameter
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }
}

/// Builds a BFS spanning tree rooted at a center of the network (a node of
/// minimum eccentricity, found by all-pairs BFS; ties broken by lowest id).
/// The tree choice never affects correctness of the sampling, only the walk
/// length bound, which equals the tree diameter.
pub fn build_spanning_tree(net: &Network) -> SpanningTree {
    let n = net.len();
    let mut best: (usize, NodeId) = (usize::MAX, 0);
    for x in 0..n {
        let ecc = net
            .bfs_distances(x)
            .into_iter()
            .max()
            .expect("network is nonempty");
        if ecc < best.0 {
            best = (ecc, x);
        }
    }
    let root = best.1;

    let mut adj = vec![Vec::new(); n];
    let mut seen = vec![false; n];
    seen[root] = true;
    let mut queue = std::collections::VecDeque::from([root]);
    while let Some(x) = queue.pop_front() {
        for &y in net.neighbors(x) {
            if !seen[y] {
                seen[y] = true;
                adj[x].push(y);
                adj[y].push(x);
                queue.push_back(y);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    let diameter = tree_diameter(&adj);
    SpanningTree {
        adj,
        root,
        diameter,
    }
}

fn tree_diameter(adj: &[Vec<NodeId>]) -> usize {
    let far = |s: NodeId| -> (NodeId, usize) {
        let mut dist = vec![usize::MAX; adj.len()];
        dist[s] = 0;
        let mut queue = std::collections::VecDeque::from([s]);
        let mut best = (s, 0);
        while let Some(x) = queue.pop_front() {
            if dist[x] > best.1 {
                best = (x, dist[x]);
            }
            for &y in &adj[x] {
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        best
    };
    let (u, _) = far(0);
    far(u).1
}

#[derive(Clone)]
struct WeightMsg(f64);

impl Payload for WeightMsg {
    fn kind(&self) -> &'static str {
        "weight"
    }
}

/// Per-node handler for the aggregation protocol: a leaf opens by sending its
/// weight to its only neighbor; every node that has heard from all neighbors
/// but `y` sends `y` its weight plus everything it heard from the others.
struct AggTask {
    weight: f64,
    neighbors: Vec<NodeId>,
    received: Vec<Option<f64>>,
    sent: Vec<bool>,
    received_count: usize,
}

impl AggTask {
    fn flush_ready(&mut self, ctx: &mut Ctx<'_, WeightMsg>) {
        let deg = self.neighbors.len();
        for j in 0..deg {
            if self.sent[j] {
                continue;
            }
            let heard_all_but_j = self.received_count >= deg - 1
                && self
                    .received
                    .iter()
                    .enumerate()
                    .all(|(i, r)| i == j || r.is_some());
            if heard_all_but_j {
                let total: f64 = self.weight
                    + self
                        .received
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != j)
                        .filter_map(|(_, r)| *r)
                        .sum::<f64>();
                ctx.send(self.neighbors[j], WeightMsg(total));
                self.sent[j] = true;
            }
        }
    }
}

impl NodeTask for AggTask {
    type Msg = WeightMsg;

    fn on_start(&mut self, ctx: &mut Ctx<'_, WeightMsg>) {
        if self.neighbors.len() == 1 {
            ctx.send(self.neighbors[0], WeightMsg(self.weight));
            self.sent[0] = true;
        }
    }

    fn on_message(&mut self, ctx: &mut Ctx<'_, WeightMsg>, from: NodeId, msg: WeightMsg) {
        let i = self
            .neighbors
            .iter()
            .position(|&y| y == from)
            .expect("message from non-neighbor");
        debug_assert!(self.received[i].is_none(), "duplicate aggregate from {from}");
        self.received[i] = Some(msg.0);
        self.received_count += 1;
        self.flush_ready(ctx);
    }
}

/// Message and round counters of an engine run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimStats {
    pub rounds: u64,
    pub messages: u64,
}

/// Spanning tree plus the aggregated subtree weights `T_i(x)`.
#[derive(Debug, Clone)]
pub struct AggregatedTree {
    tree: SpanningTree,
    weights: Vec<f64>,
    /// `t[i][j]` pairs with `tree.neighbors(i)[j]`.
    t: Vec<Vec<f64>>,
    eta: f64,
    stats: SimStats,
}

/// Runs the distributed aggregation over the tree on the simulated engine.
/// Completes within `2(n-1)` messages and at most `diameter` rounds.
pub fn aggregate_weights(
    net: &Network,
    tree: &SpanningTree,
    seed: u64,
) -> Result<AggregatedTree> {
    aggregate_weights_traced(net, tree, seed, false).map(|(agg, _)| agg)
}

/// Same as [`aggregate_weights`], optionally capturing the delivery trace.
pub fn aggregate_weights_traced(
    net: &Network,
    tree: &SpanningTree,
    seed: u64,
    trace: bool,
) -> Result<(AggregatedTree, Vec<crate::simnet::TraceRecord>)> {
    assert_eq!(net.len(), tree.len(), "tree must span the network");
    let tasks: Vec<AggTask> = (0..net.len())
        .map(|x| AggTask {
            weight: net.weight(x),
            neighbors: tree.neighbors(x).to_vec(),
            received: vec![None; tree.neighbors(x).len()],
            sent: vec![false; tree.neighbors(x).len()],
            received_count: 0,
        })
        .collect();
    let mut engine = SimEngine::new(tree.adjacency().to_vec(), tasks, seed);
    if trace {
        engine.enable_trace();
    }
    let max_rounds = 4 * net.len().max(1) as u64;
    let (rounds, messages) = engine.run_until_quiescent(max_rounds)?;
    let records = engine.trace().map(|t| t.to_vec()).unwrap_or_default();
    let tasks = engine.into_tasks();

    let t: Vec<Vec<f64>> = tasks
        .iter()
        .map(|task| {
            task.received
                .iter()
                .map(|r| r.expect("aggregation left an edge unfilled"))
                .collect()
        })
        .collect();
    let agg = AggregatedTree {
        tree: tree.clone(),
        weights: net.weights().to_vec(),
        t,
        eta: net.eta(),
        stats: SimStats { rounds, messages },
    };
    debug_assert!(agg.check_totals() < 1e-9);
    Ok((agg, records))
}

/// Outcome of a single walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Walk {
    pub selected: NodeId,
    pub hops: usize,
}

impl AggregatedTree {
    pub fn tree(&self) -> &SpanningTree {
        &self.tree
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn weight(&self, x: NodeId) -> f64 {
        self.weights[x]
    }

    pub fn stats(&self) -> SimStats {
        self.stats
    }

    /// Aggregated weight of the subtree reached from `i` through neighbor `x`.
    pub fn t_value(&self, i: NodeId, x: NodeId) -> f64 {
        let j = self
            .tree
            .neighbors(i)
            .iter()
            .position(|&y| y == x)
            .expect("not a tree edge");
        self.t[i][j]
    }

    /// Worst relative deviation of `w(i) + sum_x T_i(x)` from `eta`.
    pub fn check_totals(&self) -> f64 {
        (0..self.weights.len())
            .map(|i| {
                let total: f64 = self.weights[i] + self.t[i].iter().sum::<f64>();
                ((total - self.eta) / self.eta).abs()
            })
            .fold(0.0, f64::max)
    }

    /// One walk from `source`, selecting every node with probability
    /// `w(i) / eta`.
    pub fn sample<R: Rng + ?Sized>(&self, source: NodeId, rng: &mut R) -> NodeId {
        self.walk(source, false, rng)
            .expect("include-source walks cannot fail")
            .selected
    }

    /// One walk from `source` that never selects the source itself; every
    /// other node is selected with probability `w(x) / (eta - w(source))`.
    pub fn sample_excluding_source<R: Rng + ?Sized>(
        &self,
        source: NodeId,
        rng: &mut R,
    ) -> Result<NodeId> {
        Ok(self.walk(source, true, rng)?.selected)
    }

    /// Walk driver shared by both modes.
    pub fn walk<R: Rng + ?Sized>(
        &self,
        source: NodeId,
        exclude_source: bool,
        rng: &mut R,
    ) -> Result<Walk> {
        if exclude_source && self.weights.len() == 1 {
            return Err(RcwError::DegenerateNetwork);
        }
        let mut current = source;
        let mut arrived_from: Option<NodeId> = None;
        let mut hops = 0usize;
        loop {
            let neighbors = self.tree.neighbors(current);
            let cand: Vec<usize> = (0..neighbors.len())
                .filter(|&j| Some(neighbors[j]) != arrived_from)
                .collect();
            let t_sum: f64 = cand.iter().map(|&j| self.t[current][j]).sum();
            let q = if current == source && exclude_source {
                0.0
            } else {
                self.weights[current] / (self.weights[current] + t_sum)
            };
            if rng.random_bool(q.clamp(0.0, 1.0)) {
                return Ok(Walk {
                    selected: current,
                    hops,
                });
            }
            // Hop toward a candidate subtree, proportionally to its weight.
            let mut pick = rng.random_range(0.0..t_sum);
            let mut next = neighbors[*cand.last().expect("non-stay implies candidates")];
            for &j in &cand {
                if pick < self.t[current][j] {
                    next = neighbors[j];
                    break;
                }
                pick -= self.t[current][j];
            }
            arrived_from = Some(current);
            current = next;
            hops += 1;
        }
    }
}

/// Exact selection law of the tree walk, by propagating visit probabilities
/// outward from `source` through the tree. In include-source mode the result
/// equals `w(i) / eta` for every node; in exclude-source mode it is
/// `w(x) / (eta - w(source))` with zero at the source.
pub fn walk_oracle(agg: &AggregatedTree, source: NodeId, exclude_source: bool) -> Vec<f64> {
    let n = agg.weights.len();
    let mut parent: Vec<Option<NodeId>> = vec![None; n];
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    seen[source] = true;
    let mut queue = std::collections::VecDeque::from([source]);
    while let Some(x) = queue.pop_front() {
        order.push(x);
        for &y in agg.tree.neighbors(x) {
            if !seen[y] {
                seen[y] = true;
                parent[y] = Some(x);
                queue.push_back(y);
            }
        }
    }

    let mut visit = vec![0.0f64; n];
    visit[source] = 1.0;
    let mut probs = vec![0.0f64; n];
    for &x in &order {
        let neighbors = agg.tree.neighbors(x);
        let cand: Vec<usize> = (0..neighbors.len())
            .filter(|&j| Some(neighbors[j]) != parent[x])
            .collect();
        let t_sum: f64 = cand.iter().map(|&j| agg.t[x][j]).sum();
        let q = if x == source && exclude_source {
            0.0
        } else {
            agg.weights[x] / (agg.weights[x] + t_sum)
        };
        probs[x] = visit[x] * q;
        let rem = visit[x] * (1.0 - q);
        for &j in &cand {
            visit[neighbors[j]] += rem * agg.t[x][j] / t_sum;
        }
    }
    debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    probs
}

/// The same law through the generic DAG propagation; used to cross-check
/// [`walk_oracle`].
pub fn walk_oracle_via_dag(
    agg: &AggregatedTree,
    source: NodeId,
    exclude_source: bool,
    order: TopoOrder,
) -> Result<ExactLaw> {
    let n = agg.weights.len();
    let mut parent: Vec<Option<NodeId>> = vec![None; n];
    let mut seen = vec![false; n];
    seen[source] = true;
    let mut queue = std::collections::VecDeque::from([source]);
    while let Some(x) = queue.pop_front() {
        for &y in agg.tree.neighbors(x) {
            if !seen[y] {
                seen[y] = true;
                parent[y] = Some(x);
                queue.push_back(y);
            }
        }
    }
    let cand_info = |x: NodeId| -> (Vec<(NodeId, f64)>, f64) {
        let neighbors = agg.tree.neighbors(x);
        let cand: Vec<(NodeId, f64)> = (0..neighbors.len())
            .filter(|&j| Some(neighbors[j]) != parent[x])
            .map(|j| (neighbors[j], agg.t[x][j]))
            .collect();
        let t_sum = cand.iter().map(|&(_, t)| t).sum();
        (cand, t_sum)
    };
    let stay = |x: NodeId| -> f64 {
        if x == source && exclude_source {
            return 0.0;
        }
        let (_, t_sum) = cand_info(x);
        agg.weights[x] / (agg.weights[x] + t_sum)
    };
    let hops = |x: NodeId| -> Vec<(NodeId, f64)> {
        let (cand, t_sum) = cand_info(x);
        cand.into_iter().map(|(y, t)| (y, t / t_sum)).collect()
    };
    dag_oracle(n, source, &stay, &hops, order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk_rng;

    fn path(weights: &[f64]) -> Network {
        let edges: Vec<(usize, usize)> = (1..weights.len()).map(|i| (i - 1, i)).collect();
        Network::from_edges(weights.len(), &edges, weights.to_vec()).unwrap()
    }

    fn star(center_plus_leaves: usize) -> Network {
        let edges: Vec<(usize, usize)> = (1..center_plus_leaves).map(|i| (0, i)).collect();
        Network::from_edges(
            center_plus_leaves,
            &edges,
            vec![1.0; center_plus_leaves],
        )
        .unwrap()
    }

    #[test]
    fn spanning_tree_of_path_is_rooted_at_middle() {
        let net = path(&[1.0, 1.0, 1.0]);
        let tree = build_spanning_tree(&net);
        assert_eq!(tree.root(), 1);
        assert_eq!(tree.diameter(), 2);
        assert_eq!(tree.neighbors(1), &[0, 2]);
    }

    #[test]
    fn spanning_tree_of_cycle_has_min_eccentricity() {
        let net = Network::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)], vec![1.0; 4]).unwrap();
        let tree = build_spanning_tree(&net);
        // Every node of a 4-cycle has eccentricity 2, so the lowest id wins
        // the tie; any spanning tree of the cycle is a 4-path (diameter 3).
        assert_eq!(tree.root(), 0);
        assert_eq!(tree.diameter(), 3);
        let edge_count: usize = (0..4).map(|x| tree.neighbors(x).len()).sum();
        assert_eq!(edge_count, 6); // 3 undirected edges
    }

    #[test]
    fn spanning_tree_of_star_is_the_star() {
        let net = star(5);
        let tree = build_spanning_tree(&net);
        assert_eq!(tree.diameter(), 2);
        assert_eq!(tree.neighbors(0).len(), 4);
    }

    #[test]
    fn aggregation_on_weighted_path() {
        let net = path(&[1.0, 2.0, 3.0]);
        let tree = build_spanning_tree(&net);
        let agg = aggregate_weights(&net, &tree, 0).unwrap();
        assert_eq!(agg.t_value(1, 0), 1.0);
        assert_eq!(agg.t_value(1, 2), 3.0);
        assert_eq!(agg.t_value(0, 1), 5.0);
        assert_eq!(agg.t_value(2, 1), 3.0);
    }

    #[test]
    fn aggregation_on_unit_star() {
        let net = star(5);
        let tree = build_spanning_tree(&net);
        let agg = aggregate_weights(&net, &tree, 0).unwrap();
        for leaf in 1..5 {
            assert_eq!(agg.t_value(0, leaf), 1.0);
            assert_eq!(agg.t_value(leaf, 0), 4.0);
        }
    }

    #[test]
    fn aggregation_cost_on_path_of_five() {
        let net = path(&[1.0; 5]);
        let tree = build_spanning_tree(&net);
        let agg = aggregate_weights(&net, &tree, 0).unwrap();
        assert_eq!(agg.stats(), SimStats { rounds: 4, messages: 8 });
    }

    #[test]
    fn aggregation_message_count_is_twice_edges() {
        for seed in 0..5u64 {
            let net = random_connected(30, seed);
            let tree = build_spanning_tree(&net);
            let agg = aggregate_weights(&net, &tree, seed).unwrap();
            assert_eq!(agg.stats().messages, 2 * (net.len() as u64 - 1));
            assert!(agg.stats().rounds <= tree.diameter() as u64);
            assert!(agg.check_totals() < 1e-12);
        }
    }

    #[test]
    fn single_node_aggregation_is_trivial() {
        let net = Network::from_edges(1, &[], vec![2.0]).unwrap();
        let tree = build_spanning_tree(&net);
        let agg = aggregate_weights(&net, &tree, 0).unwrap();
        assert_eq!(agg.stats(), SimStats { rounds: 0, messages: 0 });
        let mut rng = walk_rng(1, 0);
        let walk = agg.walk(0, false, &mut rng).unwrap();
        assert_eq!(walk, Walk { selected: 0, hops: 0 });
    }

    #[test]
    fn oracle_on_unit_path_is_uniform() {
        let net = path(&[1.0, 1.0, 1.0]);
        let tree = build_spanning_tree(&net);
        let agg = aggregate_weights(&net, &tree, 0).unwrap();
        let law = walk_oracle(&agg, 0, false);
        for p in law {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    /// Random connected network: a random tree plus a few extra edges.
    fn random_connected(n: usize, seed: u64) -> Network {
        use rand::Rng;
        let mut rng = walk_rng(seed ^ 0xA5A5, 0);
        let mut edges = Vec::new();
        for v in 1..n {
            edges.push((rng.random_range(0..v), v));
        }
        for _ in 0..n / 3 {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a != b && !edges.contains(&(a.min(b), a.max(b))) {
                edges.push((a.min(b), a.max(b)));
            }
        }
        let weights = (0..n).map(|_| rng.random_range(0.01..10.0)).collect();
        Network::from_edges(n, &edges, weights).unwrap()
    }

    #[test]
    fn oracle_matches_weight_law_on_random_networks() {
        for seed in 0..20u64 {
            let net = random_connected(5 + (seed as usize * 7) % 45, seed);
            let tree = build_spanning_tree(&net);
            let agg = aggregate_weights(&net, &tree, seed).unwrap();
            for source in [0, net.len() / 2, net.len() - 1] {
                let law = walk_oracle(&agg, source, false);
                for x in 0..net.len() {
                    let expected = net.weight(x) / net.eta();
                    assert!(
                        (law[x] - expected).abs() < 1e-12,
                        "seed {seed} node {x}: {} vs {expected}",
                        law[x]
                    );
                }
            }
        }
    }

    #[test]
    fn exclude_source_law_and_modes_agree_with_dag() {
        for seed in 0..10u64 {
            let net = random_connected(20, seed);
            let tree = build_spanning_tree(&net);
            let agg = aggregate_weights(&net, &tree, seed).unwrap();
            let source = (seed as usize) % net.len();
            let eta_s = net.eta() - net.weight(source);
            let law = walk_oracle(&agg, source, true);
            assert_eq!(law[source], 0.0);
            for x in 0..net.len() {
                if x != source {
                    assert!((law[x] - net.weight(x) / eta_s).abs() < 1e-12);
                }
            }
            for order in [TopoOrder::SmallestIdFirst, TopoOrder::LargestIdFirst] {
                let via_dag = walk_oracle_via_dag(&agg, source, true, order).unwrap();
                for x in 0..net.len() {
                    assert!((via_dag.probs[x] - law[x]).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn exclude_source_on_pair_always_selects_the_other() {
        let net = path(&[1.0, 1.0]);
        let tree = build_spanning_tree(&net);
        let agg = aggregate_weights(&net, &tree, 0).unwrap();
        for i in 0..50 {
            let mut rng = walk_rng(3, i);
            assert_eq!(agg.sample_excluding_source(0, &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn degenerate_network_is_rejected() {
        let net = Network::from_edges(1, &[], vec![1.0]).unwrap();
        let tree = build_spanning_tree(&net);
        let agg = aggregate_weights(&net, &tree, 0).unwrap();
        let mut rng = walk_rng(0, 0);
        assert!(matches!(
            agg.sample_excluding_source(0, &mut rng),
            Err(RcwError::DegenerateNetwork)
        ));
    }

    #[test]
    fn walks_never_exceed_tree_diameter() {
        let net = random_connected(40, 9);
        let tree = build_spanning_tree(&net);
        let agg = aggregate_weights(&net, &tree, 9).unwrap();
        for i in 0..2000 {
            let mut rng = walk_rng(11, i);
            let walk = agg.walk(i as usize % net.len(), false, &mut rng).unwrap();
            assert!(walk.hops <= tree.diameter());
        }
    }
}
