//! Preprocessing-free sampling of the diamond grid with distance-based
//! distributions.
//!
//! A walk starts at the origin and moves strictly outward, one lattice ring
//! per hop. The stay probability at ring `k` is
//! `q_k = n_k p_k / (1 - sum_{j<k} n_j p_j)`, with the cumulative mass
//! carried along by the walk, so nodes need no precomputed state. Hop
//! probabilities depend on the position: axis edges keep `k/(k+1)` of the
//! outgoing mass, off-axis edges split the rest so that every node of a ring
//! ends up with the same visit probability.

use rand::Rng;

use crate::distributions::{validate_for_sizes, DistanceDistribution};
use crate::error::{RcwError, Result};
use crate::oracle_stats::{dag_oracle, ExactLaw, RingLaw, TopoOrder};
use crate::topology::{build_grid, GridSpec, NodeId};

/// Stay probability at ring `k`, given the selection mass
/// `cum_mass = sum_{j<k} n_j p_j` already accounted for by earlier rings.
///
/// `q_0 = p_0` and `q_R = 1`; in between the stay probability is
/// `n_k p_k / (1 - cum_mass)`.
pub fn stay_probability(
    k: usize,
    dist: &DistanceDistribution,
    cum_mass: f64,
) -> Result<f64> {
    let radius = dist.radius();
    if k == 0 {
        return Ok(dist.p(0));
    }
    if k == radius {
        return Ok(1.0);
    }
    let pk = dist.p(k);
    let nk = (4 * k) as f64;
    let denom = 1.0 - cum_mass;
    if denom <= 0.0 {
        if pk == 0.0 {
            return Ok(0.0);
        }
        return Err(RcwError::MassExhausted { ring: k });
    }
    Ok((nk * pk / denom).min(1.0))
}

/// Hop probability of the outward grid edge `from -> to`.
///
/// The formulas are stated on the non-negative quadrant and applied to any
/// position by reflecting coordinates onto it: an edge along an axis keeps
/// probability `k/(k+1)`; an off-axis step that increases the first
/// (reflected) coordinate gets `(2|i|+1) / (2(k+1))`, one that increases the
/// second gets `(2|j|+1) / (2(k+1))`.
pub fn hop_probability(from: (i32, i32), to: (i32, i32)) -> Result<f64> {
    let k = from.0.abs() + from.1.abs();
    let k_to = to.0.abs() + to.1.abs();
    let step = (to.0 - from.0).abs() + (to.1 - from.1).abs();
    if from == (0, 0) || k_to != k + 1 || step != 1 {
        return Err(RcwError::NotOutwardNeighbor { from, to });
    }
    let (i, j) = (from.0.abs(), from.1.abs());
    let k = k as f64;
    // Axis edge: both endpoints on the same axis.
    if (from.0 == 0 && to.0 == 0) || (from.1 == 0 && to.1 == 0) {
        return Ok(k / (k + 1.0));
    }
    // Off-axis edge; find which reflected coordinate grew.
    let grew_i = to.0.abs() == i + 1;
    let numer = if grew_i { 2 * i + 1 } else { 2 * j + 1 } as f64;
    Ok(numer / (2.0 * (k + 1.0)))
}

/// Outward neighbors of a grid position, with their hop probabilities.
fn outward_hops(pos: (i32, i32), radius: usize) -> Vec<((i32, i32), f64)> {
    let k = pos.0.abs() + pos.1.abs();
    if k as usize >= radius {
        return Vec::new();
    }
    let mut hops = Vec::new();
    for (di, dj) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
        let to = (pos.0 + di, pos.1 + dj);
        if to.0.abs() + to.1.abs() == k + 1 {
            let h = hop_probability(pos, to).expect("outward neighbor");
            hops.push((to, h));
        }
    }
    hops
}

/// One walk over the grid. The distribution must validate against the grid's
/// ring sizes; walks take at most `R` hops.
pub fn sample_grid<R: Rng + ?Sized>(
    spec: &GridSpec,
    dist: &DistanceDistribution,
    rng: &mut R,
) -> (i32, i32) {
    walk_grid(spec, dist, rng).0
}

/// Walk driver returning the selected position and the hop count.
pub fn walk_grid<R: Rng + ?Sized>(
    spec: &GridSpec,
    dist: &DistanceDistribution,
    rng: &mut R,
) -> ((i32, i32), usize) {
    debug_assert!(validate_for_sizes(dist, &spec.ring_sizes()));
    let mut cum_mass = 0.0f64;
    let mut pos = (0i32, 0i32);
    let mut hops = 0usize;
    loop {
        let k = (pos.0.abs() + pos.1.abs()) as usize;
        let q = stay_probability(k, dist, cum_mass).expect("validated distribution");
        if rng.random_bool(q.clamp(0.0, 1.0)) {
            return (pos, hops);
        }
        cum_mass += spec.ring_size(k) as f64 * dist.p(k);
        pos = if k == 0 {
            // The first hop picks one of the four axis neighbors uniformly.
            [(1, 0), (-1, 0), (0, 1), (0, -1)][rng.random_range(0..4)]
        } else {
            let hops_out = outward_hops(pos, spec.radius);
            let mut pick = rng.random::<f64>();
            let mut chosen = hops_out[hops_out.len() - 1].0;
            for &(to, h) in &hops_out {
                if pick < h {
                    chosen = to;
                    break;
                }
                pick -= h;
            }
            chosen
        };
        hops += 1;
    }
}

/// Exact per-node law of the grid walk, by forward propagation ring by ring,
/// aligned with the node ids of [`build_grid`]. Also certifies that all
/// nodes of a ring share one visit probability and reports the stay ladder.
pub fn grid_oracle(spec: &GridSpec, dist: &DistanceDistribution) -> Result<RingLaw> {
    let sizes = spec.ring_sizes();
    if !validate_for_sizes(dist, &sizes) {
        return Err(RcwError::InvalidDistribution(
            "distribution does not validate against the grid".into(),
        ));
    }
    let net = build_grid(*spec);
    let n = net.num_nodes();
    let mut visit = vec![0.0f64; n];
    visit[net.source()] = 1.0;
    let mut probs = vec![0.0f64; n];
    let mut stay = Vec::with_capacity(spec.radius + 1);
    let mut ring_visit = Vec::with_capacity(spec.radius + 1);
    let mut ring_spread = Vec::with_capacity(spec.radius + 1);
    let mut cum_mass = 0.0f64;
    for k in 0..=spec.radius {
        let q = stay_probability(k, dist, cum_mass)?;
        stay.push(q);
        let ring = net.ring(k);
        let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for &x in ring {
            let v = visit[x];
            lo = lo.min(v);
            hi = hi.max(v);
            sum += v;
            probs[x] = v * q;
            let rem = v * (1.0 - q);
            if k == 0 {
                for &y in net.up_edges(x) {
                    visit[y] += rem * 0.25;
                }
            } else if k < spec.radius {
                let pos = net.coord_of(x).expect("grid has coordinates");
                for (to, h) in outward_hops(pos, spec.radius) {
                    let y = net.node_at(to).expect("outward neighbor exists");
                    visit[y] += rem * h;
                }
            }
        }
        ring_visit.push(sum / ring.len() as f64);
        ring_spread.push(hi - lo);
        cum_mass += sizes[k] as f64 * dist.p(k);
    }
    Ok(RingLaw {
        probs,
        ring_visit,
        ring_spread,
        stay,
    })
}

/// The grid law through the generic DAG propagation, for cross-checking.
pub fn grid_oracle_via_dag(
    spec: &GridSpec,
    dist: &DistanceDistribution,
    order: TopoOrder,
) -> Result<ExactLaw> {
    let net = build_grid(*spec);
    let law = grid_oracle(spec, dist)?; // reuse the certified stay ladder
    let stay = |x: NodeId| law.stay[net.ring_of(x)];
    let hops = |x: NodeId| -> Vec<(NodeId, f64)> {
        let k = net.ring_of(x);
        if k >= spec.radius {
            return Vec::new();
        }
        if k == 0 {
            return net.up_edges(x).iter().map(|&y| (y, 0.25)).collect();
        }
        let pos = net.coord_of(x).unwrap();
        outward_hops(pos, spec.radius)
            .into_iter()
            .map(|(to, h)| (net.node_at(to).unwrap(), h))
            .collect()
    };
    dag_oracle(net.num_nodes(), net.source(), &stay, &hops, order)
}

/// Batch of grid walks tallied by node id of [`build_grid`].
pub fn tally_grid_walks(
    spec: &GridSpec,
    dist: &DistanceDistribution,
    samples: u64,
    seed: u64,
) -> Vec<u64> {
    let net = build_grid(*spec);
    crate::oracle_stats::tally_walks(net.num_nodes(), samples, seed, spec.radius, |rng| {
        let (pos, hops) = walk_grid(spec, dist, rng);
        (net.node_at(pos).expect("walk stays on the grid"), hops)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{inverse_distance_for_sizes, uniform_for_sizes};
    use crate::walk_rng;

    fn uni(radius: usize) -> DistanceDistribution {
        uniform_for_sizes(&GridSpec { radius }.ring_sizes())
    }

    #[test]
    fn stay_probability_boundaries() {
        let dist = DistanceDistribution::explicit(vec![0.3, 0.7 / 4.0]).unwrap();
        assert_eq!(stay_probability(0, &dist, 0.0).unwrap(), 0.3);
        assert_eq!(stay_probability(1, &dist, 0.3).unwrap(), 1.0);
    }

    #[test]
    fn stay_probability_uniform_r2() {
        // 13 nodes, p = 1/13 everywhere: q_1 = (4/13) / (12/13) = 1/3.
        let dist = uni(2);
        let q1 = stay_probability(1, &dist, 1.0 / 13.0).unwrap();
        assert!((q1 - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn stay_probability_exhausted_mass() {
        let dist = DistanceDistribution::explicit(vec![0.5, 0.1, 0.01]).unwrap();
        let err = stay_probability(1, &dist, 1.0).unwrap_err();
        assert!(matches!(err, RcwError::MassExhausted { ring: 1 }));
        // Zero mass at the ring passes through instead.
        let pass = DistanceDistribution::explicit(vec![0.5, 0.0, 0.01]).unwrap();
        assert_eq!(stay_probability(1, &pass, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn hop_probability_cases() {
        assert!((hop_probability((1, 0), (2, 0)).unwrap() - 0.5).abs() < 1e-15);
        assert!((hop_probability((1, 1), (2, 1)).unwrap() - 0.5).abs() < 1e-15);
        assert!((hop_probability((1, 1), (1, 2)).unwrap() - 0.5).abs() < 1e-15);
        assert!((hop_probability((2, 1), (3, 1)).unwrap() - 5.0 / 8.0).abs() < 1e-15);
        assert!((hop_probability((2, 1), (2, 2)).unwrap() - 3.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn hop_probability_rejects_non_outward() {
        assert!(hop_probability((1, 0), (0, 0)).is_err());
        assert!(hop_probability((1, 0), (1, 1)).is_ok());
        assert!(hop_probability((1, 1), (2, 2)).is_err());
        assert!(hop_probability((0, 0), (1, 0)).is_err());
    }

    #[test]
    fn outgoing_mass_sums_to_one_in_every_quadrant() {
        for radius in [3usize, 6] {
            let net = build_grid(GridSpec { radius });
            for x in 0..net.num_nodes() {
                let k = net.ring_of(x);
                if k == 0 || k == radius {
                    continue;
                }
                let pos = net.coord_of(x).unwrap();
                let total: f64 = outward_hops(pos, radius).iter().map(|&(_, h)| h).sum();
                assert!(
                    (total - 1.0).abs() < 1e-12,
                    "position {pos:?} sums to {total}"
                );
            }
        }
    }

    #[test]
    fn point_mass_at_source_never_leaves() {
        let spec = GridSpec::new(1).unwrap();
        let dist = DistanceDistribution::explicit(vec![0.9999999999, 0.25e-10]).unwrap();
        // p_0 = 1 exactly is rejected by validation (p_R would carry no
        // mass), so drive the equivalent walk with p_0 ~ 1.
        let mut rng = walk_rng(0, 0);
        for _ in 0..100 {
            let (pos, hops) = walk_grid(&spec, &dist, &mut rng);
            assert_eq!(pos, (0, 0));
            assert_eq!(hops, 0);
        }
    }

    #[test]
    fn first_ring_split_is_uniform() {
        let spec = GridSpec::new(1).unwrap();
        let dist = DistanceDistribution::explicit(vec![0.0, 0.25]).unwrap();
        let mut counts = std::collections::HashMap::new();
        for i in 0..40_000u64 {
            let mut rng = walk_rng(2, i);
            let (pos, hops) = walk_grid(&spec, &dist, &mut rng);
            assert_eq!(hops, 1);
            *counts.entry(pos).or_insert(0u64) += 1;
        }
        for (&pos, &c) in &counts {
            let dev = (c as f64 - 10_000.0).abs() / 10_000.0;
            assert!(dev < 0.05, "{pos:?}: {c}");
        }
    }

    #[test]
    fn oracle_uniform_law_small_radii() {
        for radius in 1..=8 {
            let spec = GridSpec { radius };
            let dist = uni(radius);
            let law = grid_oracle(&spec, &dist).unwrap();
            let expected = 1.0 / spec.num_nodes() as f64;
            for &p in &law.probs {
                assert!((p - expected).abs() < 1e-12);
            }
            assert!(law.max_ring_spread() < 1e-12);
            assert!((law.total_mass() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn oracle_visit_probability_identity() {
        let spec = GridSpec { radius: 2 };
        let dist = uni(2);
        let law = grid_oracle(&spec, &dist).unwrap();
        // v_1 = (12/13) / 4 = 3/13.
        assert!((law.ring_visit[1] - 3.0 / 13.0).abs() < 1e-15);
        let sizes = spec.ring_sizes();
        let mut cum = 0.0;
        for k in 0..=2 {
            let expected = (1.0 - cum) / sizes[k] as f64;
            assert!((law.ring_visit[k] - expected).abs() < 1e-15);
            cum += sizes[k] as f64 * dist.p(k);
        }
    }

    #[test]
    fn oracle_matches_dag_for_pid() {
        let spec = GridSpec { radius: 7 };
        let dist = inverse_distance_for_sizes(&spec.ring_sizes(), 0.05).unwrap();
        let law = grid_oracle(&spec, &dist).unwrap();
        for order in [TopoOrder::SmallestIdFirst, TopoOrder::LargestIdFirst] {
            let dag = grid_oracle_via_dag(&spec, &dist, order).unwrap();
            for (a, b) in law.probs.iter().zip(&dag.probs) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }
}
