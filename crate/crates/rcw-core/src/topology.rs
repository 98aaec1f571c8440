//! Network substrates: arbitrary weighted connected graphs, lattice-distance
//! grids, and concentric-rings networks (regular or geometric-random).
//!
//! All constructors validate their invariants up front; the resulting values
//! are immutable and safe to share across threads.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{RcwError, Result};

/// Dense node identifier in `0..n`.
pub type NodeId = usize;

/// Undirected connected graph with strictly positive node weights.
#[derive(Debug, Clone)]
pub struct Network {
    adjacency: Vec<Vec<NodeId>>,
    weights: Vec<f64>,
    eta: f64,
}

impl Network {
    /// Builds a network from per-node adjacency lists and weights.
    ///
    /// Adjacency must be symmetric, loop-free and duplicate-free, and the
    /// graph connected; weights must be finite and positive. Lists are
    /// normalized to ascending order.
    pub fn new(mut adjacency: Vec<Vec<NodeId>>, weights: Vec<f64>) -> Result<Self> {
        let n = adjacency.len();
        if n == 0 {
            return Err(RcwError::InvalidNetwork("network has no nodes".into()));
        }
        if weights.len() != n {
            return Err(RcwError::InvalidNetwork(format!(
                "{} nodes but {} weights",
                n,
                weights.len()
            )));
        }
        for (x, &w) in weights.iter().enumerate() {
            if !(w.is_finite() && w > 0.0) {
                return Err(RcwError::InvalidNetwork(format!(
                    "node {x} has non-positive weight {w}"
                )));
            }
        }
        for (x, list) in adjacency.iter_mut().enumerate() {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(RcwError::InvalidNetwork(format!(
                    "node {x} has a duplicate edge"
                )));
            }
            if list.contains(&x) {
                return Err(RcwError::InvalidNetwork(format!("node {x} has a self-loop")));
            }
            if list.iter().any(|&y| y >= n) {
                return Err(RcwError::InvalidNetwork(format!(
                    "node {x} references a node outside 0..{n}"
                )));
            }
        }
        for x in 0..n {
            for &y in &adjacency[x] {
                if adjacency[y].binary_search(&x).is_err() {
                    return Err(RcwError::InvalidNetwork(format!(
                        "edge {x}-{y} is not symmetric"
                    )));
                }
            }
        }
        let net = Network {
            eta: weights.iter().sum(),
            adjacency,
            weights,
        };
        if !net.is_connected() {
            return Err(RcwError::InvalidNetwork("network is not connected".into()));
        }
        Ok(net)
    }

    /// Convenience constructor from an undirected edge list.
    pub fn from_edges(n: usize, edges: &[(NodeId, NodeId)], weights: Vec<f64>) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(RcwError::InvalidNetwork(format!(
                    "edge {u}-{v} references a node outside 0..{n}"
                )));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        Network::new(adjacency, weights)
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction rejects empty networks
    }

    pub fn neighbors(&self, x: NodeId) -> &[NodeId] {
        &self.adjacency[x]
    }

    pub fn weight(&self, x: NodeId) -> f64 {
        self.weights[x]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Total weight over all nodes.
    pub fn eta(&self) -> f64 {
        self.eta
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.len()];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(x) = stack.pop() {
            for &y in &self.adjacency[x] {
                if !seen[y] {
                    seen[y] = true;
                    count += 1;
                    stack.push(y);
                }
            }
        }
        count == self.len()
    }

    /// BFS hop distances from `source` (neighbors visited in ascending id
    /// order, so the result is deterministic).
    pub fn bfs_distances(&self, source: NodeId) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.len()];
        dist[source] = 0;
        let mut queue = std::collections::VecDeque::from([source]);
        while let Some(x) = queue.pop_front() {
            for &y in &self.adjacency[x] {
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        dist
    }
}

/// Concentric-rings network: nodes partitioned by hop distance from a single
/// source into rings `0..=R`, with adjacency split into inward and outward
/// edge lists (and optional ring-skipping lists at distance 2).
#[derive(Debug, Clone)]
pub struct RingNetwork {
    rings: Vec<Vec<NodeId>>,
    ring_of: Vec<usize>,
    up: Vec<Vec<NodeId>>,
    down: Vec<Vec<NodeId>>,
    up2: Option<Vec<Vec<NodeId>>>,
    down2: Option<Vec<Vec<NodeId>>>,
    /// Grid coordinates, when the network is a lattice grid.
    coords: Option<Vec<(i32, i32)>>,
    /// Node angles in degrees, when the network is a geometric deployment.
    angles: Option<Vec<f64>>,
}

impl RingNetwork {
    fn validate(&self) -> Result<()> {
        let n = self.ring_of.len();
        if self.rings.is_empty() || self.rings[0].len() != 1 {
            return Err(RcwError::InvalidNetwork(
                "ring 0 must hold exactly the source".into(),
            ));
        }
        let mut seen = vec![false; n];
        for (k, ring) in self.rings.iter().enumerate() {
            if ring.is_empty() {
                return Err(RcwError::InvalidNetwork(format!("ring {k} is empty")));
            }
            for &x in ring {
                if x >= n || seen[x] {
                    return Err(RcwError::InvalidNetwork(format!(
                        "node {x} missing or repeated in ring partition"
                    )));
                }
                seen[x] = true;
                if self.ring_of[x] != k {
                    return Err(RcwError::InvalidNetwork(format!(
                        "node {x} ring index mismatch"
                    )));
                }
            }
        }
        if !seen.iter().all(|&s| s) {
            return Err(RcwError::InvalidNetwork(
                "some node belongs to no ring".into(),
            ));
        }
        let radius = self.radius();
        for x in 0..n {
            let k = self.ring_of[x];
            for &y in &self.up[x] {
                if self.ring_of[y] != k + 1 {
                    return Err(RcwError::InvalidNetwork(format!(
                        "outward edge {x}-{y} does not advance one ring"
                    )));
                }
                if !self.down[y].contains(&x) {
                    return Err(RcwError::InvalidNetwork(format!(
                        "edge {x}-{y} is not symmetric"
                    )));
                }
            }
            for &y in &self.down[x] {
                if self.ring_of[y] + 1 != k || !self.up[y].contains(&x) {
                    return Err(RcwError::InvalidNetwork(format!(
                        "inward edge {x}-{y} is inconsistent"
                    )));
                }
            }
            if k >= 1 && self.down[x].is_empty() {
                return Err(RcwError::DisconnectedRing {
                    node: x,
                    ring: k,
                    outward: false,
                });
            }
            if k < radius && self.up[x].is_empty() {
                return Err(RcwError::DisconnectedRing {
                    node: x,
                    ring: k,
                    outward: true,
                });
            }
        }
        Ok(())
    }

    /// Largest ring index `R`.
    pub fn radius(&self) -> usize {
        self.rings.len() - 1
    }

    pub fn num_nodes(&self) -> usize {
        self.ring_of.len()
    }

    pub fn source(&self) -> NodeId {
        self.rings[0][0]
    }

    pub fn ring(&self, k: usize) -> &[NodeId] {
        &self.rings[k]
    }

    pub fn ring_sizes(&self) -> Vec<usize> {
        self.rings.iter().map(|r| r.len()).collect()
    }

    pub fn ring_of(&self, x: NodeId) -> usize {
        self.ring_of[x]
    }

    /// Neighbors of `x` in ring `k+1`.
    pub fn up_edges(&self, x: NodeId) -> &[NodeId] {
        &self.up[x]
    }

    /// Neighbors of `x` in ring `k-1`.
    pub fn down_edges(&self, x: NodeId) -> &[NodeId] {
        &self.down[x]
    }

    pub fn has_distance2(&self) -> bool {
        self.up2.is_some()
    }

    /// Distance-2 neighbors of `x` in ring `k+2`, when present.
    pub fn up2_edges(&self, x: NodeId) -> Option<&[NodeId]> {
        self.up2.as_ref().map(|u| u[x].as_slice())
    }

    pub fn down2_edges(&self, x: NodeId) -> Option<&[NodeId]> {
        self.down2.as_ref().map(|d| d[x].as_slice())
    }

    /// Outward degree `delta_k(x)`.
    pub fn delta(&self, x: NodeId) -> usize {
        self.up[x].len()
    }

    /// Inward degree `gamma_k(x)`.
    pub fn gamma(&self, x: NodeId) -> usize {
        self.down[x].len()
    }

    /// Grid coordinate of `x`, when the network is a lattice grid.
    pub fn coord_of(&self, x: NodeId) -> Option<(i32, i32)> {
        self.coords.as_ref().map(|c| c[x])
    }

    /// Node id at grid coordinate `(i, j)`, when the network is a grid.
    pub fn node_at(&self, coord: (i32, i32)) -> Option<NodeId> {
        let coords = self.coords.as_ref()?;
        coords.iter().position(|&c| c == coord)
    }

    /// Deployment angle of `x` in degrees, when geometric.
    pub fn angle_of(&self, x: NodeId) -> Option<f64> {
        self.angles.as_ref().map(|a| a[x])
    }

    /// Derives ring-skipping adjacency by composing two consecutive layers of
    /// outward edges: `y` is a distance-2 neighbor of `x` iff some outward
    /// neighbor of `x` has `y` as an outward neighbor.
    pub fn compose_distance2(mut self) -> Self {
        let n = self.num_nodes();
        let mut up2 = vec![Vec::new(); n];
        let mut down2 = vec![Vec::new(); n];
        for x in 0..n {
            let mut targets: Vec<NodeId> = self.up[x]
                .iter()
                .flat_map(|&y| self.up[y].iter().copied())
                .collect();
            targets.sort_unstable();
            targets.dedup();
            for &y in &targets {
                down2[y].push(x);
            }
            up2[x] = targets;
        }
        for list in &mut down2 {
            list.sort_unstable();
        }
        self.up2 = Some(up2);
        self.down2 = Some(down2);
        self
    }

    /// Flattens the ring structure into a plain [`Network`] with the given
    /// node weights.
    pub fn to_network(&self, weights: Vec<f64>) -> Result<Network> {
        let adjacency = (0..self.num_nodes())
            .map(|x| {
                let mut list = self.up[x].clone();
                list.extend_from_slice(&self.down[x]);
                list
            })
            .collect();
        Network::new(adjacency, weights)
    }
}

/// Diamond-shaped lattice grid of the given radius: all integer points
/// `(i, j)` with `|i| + |j| <= R`, ring index `|i| + |j|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub radius: usize,
}

impl GridSpec {
    pub fn new(radius: usize) -> Result<Self> {
        if radius < 1 {
            return Err(RcwError::InvalidNetwork("grid radius must be >= 1".into()));
        }
        Ok(GridSpec { radius })
    }

    /// Number of nodes in ring `k`: 1 at the source, `4k` beyond.
    pub fn ring_size(&self, k: usize) -> usize {
        if k == 0 {
            1
        } else {
            4 * k
        }
    }

    pub fn ring_sizes(&self) -> Vec<usize> {
        (0..=self.radius).map(|k| self.ring_size(k)).collect()
    }

    pub fn num_nodes(&self) -> usize {
        self.ring_sizes().iter().sum()
    }
}

/// Random geometric deployment on concentric rings: `per_ring` nodes per ring
/// at uniform random angles, connected across consecutive rings whenever the
/// circular angular distance is at most `beta / 2` degrees.
#[derive(Debug, Clone, Copy)]
pub struct GeometricDeployment {
    pub rings: usize,
    pub per_ring: usize,
    /// Connectivity angle in degrees, in `(0, 360]`.
    pub beta: f64,
    pub seed: u64,
}

/// Circular distance between two angles in degrees, in `[0, 180]`.
fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    d.min(360.0 - d)
}

/// Builds the lattice grid as a rings network; node coordinates are
/// retrievable through [`RingNetwork::coord_of`].
pub fn build_grid(spec: GridSpec) -> RingNetwork {
    let radius = spec.radius as i32;
    let mut coords = Vec::new();
    for i in -radius..=radius {
        for j in -radius..=radius {
            if i.abs() + j.abs() <= radius {
                coords.push((i, j));
            }
        }
    }
    coords.sort_by_key(|&(i, j)| (i.abs() + j.abs(), i, j));
    let index: HashMap<(i32, i32), usize> = coords
        .iter()
        .enumerate()
        .map(|(id, &c)| (c, id))
        .collect();

    let n = coords.len();
    let mut rings = vec![Vec::new(); spec.radius + 1];
    let mut ring_of = vec![0; n];
    let mut up = vec![Vec::new(); n];
    let mut down = vec![Vec::new(); n];
    for (id, &(i, j)) in coords.iter().enumerate() {
        let k = (i.abs() + j.abs()) as usize;
        rings[k].push(id);
        ring_of[id] = k;
        for (di, dj) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
            let c = (i + di, j + dj);
            if let Some(&other) = index.get(&c) {
                let ko = (c.0.abs() + c.1.abs()) as usize;
                if ko == k + 1 {
                    up[id].push(other);
                } else if ko + 1 == k {
                    down[id].push(other);
                }
            }
        }
    }
    for list in up.iter_mut().chain(down.iter_mut()) {
        list.sort_unstable();
    }
    let net = RingNetwork {
        rings,
        ring_of,
        up,
        down,
        up2: None,
        down2: None,
        coords: Some(coords),
        angles: None,
    };
    net.validate().expect("grid construction is always valid");
    net
}

/// Builds a concentric-rings network in which every node of ring `k` has
/// exactly `delta[k]` outward and `gamma[k-1]` inward neighbors, by circulant
/// wiring: node `j` of ring `k` connects outward to nodes
/// `(j * delta[k] + t) mod n_{k+1}` for `t = 0..delta[k]`.
///
/// `delta[k]` is the outward degree of ring `k` for `k = 0..R`;
/// `gamma[k-1]` is the inward degree of ring `k` for `k = 1..=R`.
pub fn build_uniform_rings(
    ring_sizes: &[usize],
    delta: &[usize],
    gamma: &[usize],
) -> Result<RingNetwork> {
    if ring_sizes.is_empty() || ring_sizes[0] != 1 {
        return Err(RcwError::InvalidNetwork(
            "ring sizes must start with a single source".into(),
        ));
    }
    if ring_sizes.iter().any(|&s| s == 0) {
        return Err(RcwError::InvalidNetwork("empty ring".into()));
    }
    let radius = ring_sizes.len() - 1;
    if delta.len() != radius || gamma.len() != radius {
        return Err(RcwError::InvalidNetwork(format!(
            "radius {radius} needs {radius} delta and gamma entries, got {} and {}",
            delta.len(),
            gamma.len()
        )));
    }
    for k in 0..radius {
        let (nk, nk1) = (ring_sizes[k] as u64, ring_sizes[k + 1] as u64);
        let (dk, gk1) = (delta[k] as u64, gamma[k] as u64);
        if gk1 < 1 || dk < 1 {
            return Err(RcwError::InconsistentDegrees {
                ring: k,
                detail: "degrees across a ring boundary must be at least 1".into(),
            });
        }
        if nk * dk != nk1 * gk1 {
            return Err(RcwError::InconsistentDegrees {
                ring: k,
                detail: format!(
                    "{nk} * delta {dk} = {} outward endpoints but {nk1} * gamma {gk1} = {} inward",
                    nk * dk,
                    nk1 * gk1
                ),
            });
        }
        if dk > nk1 || gk1 > nk {
            return Err(RcwError::InconsistentDegrees {
                ring: k,
                detail: "degree exceeds the opposite ring size (duplicate edges required)".into(),
            });
        }
    }

    let n: usize = ring_sizes.iter().sum();
    let mut rings = Vec::with_capacity(radius + 1);
    let mut next_id = 0;
    for &size in ring_sizes {
        rings.push((next_id..next_id + size).collect::<Vec<_>>());
        next_id += size;
    }
    let mut ring_of = vec![0; n];
    for (k, ring) in rings.iter().enumerate() {
        for &x in ring {
            ring_of[x] = k;
        }
    }
    let mut up = vec![Vec::new(); n];
    let mut down = vec![Vec::new(); n];
    for k in 0..radius {
        let nk1 = ring_sizes[k + 1];
        for (j, &x) in rings[k].iter().enumerate() {
            for t in 0..delta[k] {
                let y = rings[k + 1][(j * delta[k] + t) % nk1];
                up[x].push(y);
                down[y].push(x);
            }
        }
    }
    for list in up.iter_mut().chain(down.iter_mut()) {
        list.sort_unstable();
    }
    let net = RingNetwork {
        rings,
        ring_of,
        up,
        down,
        up2: None,
        down2: None,
        coords: None,
        angles: None,
    };
    net.validate()?;
    Ok(net)
}

/// Builds a geometric deployment. Fails with [`RcwError::DisconnectedRing`]
/// when the angle leaves some node without an inward neighbor, or without an
/// outward neighbor below the last ring.
pub fn build_geometric(dep: &GeometricDeployment) -> Result<RingNetwork> {
    if dep.rings < 1 || dep.per_ring < 1 {
        return Err(RcwError::InvalidNetwork(
            "geometric deployment needs at least one ring and one node per ring".into(),
        ));
    }
    if !(dep.beta > 0.0 && dep.beta <= 360.0) {
        return Err(RcwError::InvalidNetwork(format!(
            "connectivity angle {} outside (0, 360]",
            dep.beta
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(dep.seed);
    let n = 1 + dep.rings * dep.per_ring;
    let mut angles = vec![0.0f64; n];
    let mut rings = vec![vec![0usize]];
    for k in 1..=dep.rings {
        let start = 1 + (k - 1) * dep.per_ring;
        rings.push((start..start + dep.per_ring).collect());
        for x in start..start + dep.per_ring {
            angles[x] = rng.random::<f64>() * 360.0;
        }
    }
    let mut ring_of = vec![0; n];
    for (k, ring) in rings.iter().enumerate() {
        for &x in ring {
            ring_of[x] = k;
        }
    }

    let mut up = vec![Vec::new(); n];
    let mut down = vec![Vec::new(); n];
    // The source sits at the common center: every ring-1 node attaches to it.
    for &x in &rings[1] {
        up[0].push(x);
        down[x].push(0);
    }
    let half = dep.beta / 2.0;
    for k in 1..dep.rings {
        for &x in &rings[k] {
            for &y in &rings[k + 1] {
                if angular_distance(angles[x], angles[y]) <= half {
                    up[x].push(y);
                    down[y].push(x);
                }
            }
        }
    }
    let net = RingNetwork {
        rings,
        ring_of,
        up,
        down,
        up2: None,
        down2: None,
        coords: None,
        angles: Some(angles),
    };
    net.validate()?;
    Ok(net)
}

/// True iff within every ring all nodes share one outward degree and one
/// inward degree.
pub fn check_uniform_connectivity(net: &RingNetwork) -> bool {
    (1..=net.radius()).all(|k| {
        let ring = net.ring(k);
        let delta = net.delta(ring[0]);
        let gamma = net.gamma(ring[0]);
        ring.iter()
            .all(|&x| net.delta(x) == delta && net.gamma(x) == gamma)
    })
}

/// True iff the distance-2 adjacency is present and uniform per ring, in both
/// directions.
pub fn check_uniform_connectivity_d2(net: &RingNetwork) -> bool {
    if !net.has_distance2() {
        return false;
    }
    check_uniform_connectivity(net)
        && (0..=net.radius()).all(|k| {
            let ring = net.ring(k);
            let up2 = net.up2_edges(ring[0]).unwrap().len();
            let down2 = net.down2_edges(ring[0]).unwrap().len();
            ring.iter().all(|&x| {
                net.up2_edges(x).unwrap().len() == up2
                    && net.down2_edges(x).unwrap().len() == down2
            })
        })
}
