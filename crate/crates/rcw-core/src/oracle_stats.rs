//! Exact selection-probability oracles and the statistics used to compare
//! empirical draws against them.
//!
//! Every sampler in this crate walks an outward DAG: hops strictly increase
//! the distance to the source, so visit probabilities can be propagated in
//! topological order and the selection law read off exactly. [`dag_oracle`]
//! is that propagation in its most general form; the per-sampler oracles are
//! specialized instantiations with ring bookkeeping attached.

use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{RcwError, Result};
use crate::topology::NodeId;
use crate::walk_rng;

/// Exact per-node selection probabilities.
#[derive(Debug, Clone)]
pub struct ExactLaw {
    pub probs: Vec<f64>,
}

impl ExactLaw {
    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// Exact law over a rings network, with the per-ring visit bookkeeping the
/// ring oracles additionally certify.
#[derive(Debug, Clone)]
pub struct RingLaw {
    /// Selection probability per node.
    pub probs: Vec<f64>,
    /// Mean visit probability per ring.
    pub ring_visit: Vec<f64>,
    /// Max minus min visit probability within each ring; zero (up to float
    /// noise) exactly when the sampler is unbiased.
    pub ring_spread: Vec<f64>,
    /// Stay probability used at each ring.
    pub stay: Vec<f64>,
}

impl RingLaw {
    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn max_ring_spread(&self) -> f64 {
        self.ring_spread.iter().cloned().fold(0.0, f64::max)
    }
}

/// Tie-breaking order for the topological propagation; the law must not
/// depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopoOrder {
    SmallestIdFirst,
    LargestIdFirst,
}

/// Propagates visit probabilities from `source` through the outward hop
/// graph and returns the exact selection law.
///
/// `stay(x)` is the probability that a walk visiting `x` stops there;
/// `hops(x)` lists `(target, probability)` pairs for a walk leaving `x`.
/// Fails with [`RcwError::CyclicHopGraph`] if the reachable hop graph has a
/// cycle.
pub fn dag_oracle(
    n: usize,
    source: NodeId,
    stay: &dyn Fn(NodeId) -> f64,
    hops: &dyn Fn(NodeId) -> Vec<(NodeId, f64)>,
    order: TopoOrder,
) -> Result<ExactLaw> {
    // Reachable subgraph and in-degrees.
    let mut edges: Vec<Vec<(NodeId, f64)>> = vec![Vec::new(); n];
    let mut indegree = vec![0usize; n];
    let mut reachable = vec![false; n];
    let mut stack = vec![source];
    reachable[source] = true;
    let mut reach_count = 1usize;
    while let Some(x) = stack.pop() {
        edges[x] = hops(x);
        for &(y, _) in &edges[x] {
            indegree[y] += 1;
            if !reachable[y] {
                reachable[y] = true;
                reach_count += 1;
                stack.push(y);
            }
        }
    }

    let mut ready: std::collections::BinaryHeap<i64> = std::collections::BinaryHeap::new();
    let push_key = |x: NodeId| match order {
        TopoOrder::SmallestIdFirst => -(x as i64),
        TopoOrder::LargestIdFirst => x as i64,
    };
    for x in 0..n {
        if reachable[x] && indegree[x] == 0 {
            ready.push(push_key(x));
        }
    }
    let mut visit = vec![0.0f64; n];
    visit[source] = 1.0;
    let mut probs = vec![0.0f64; n];
    let mut processed = 0usize;
    while let Some(key) = ready.pop() {
        let x = match order {
            TopoOrder::SmallestIdFirst => (-key) as usize,
            TopoOrder::LargestIdFirst => key as usize,
        };
        processed += 1;
        let q = stay(x);
        probs[x] = visit[x] * q;
        let rem = visit[x] * (1.0 - q);
        if rem > 0.0 {
            debug_assert!(
                (edges[x].iter().map(|&(_, h)| h).sum::<f64>() - 1.0).abs() < 1e-9,
                "hop probabilities at {x} do not sum to 1"
            );
        }
        for &(y, h) in &edges[x] {
            visit[y] += rem * h;
            indegree[y] -= 1;
            if indegree[y] == 0 {
                ready.push(push_key(y));
            }
        }
    }
    if processed < reach_count {
        return Err(RcwError::CyclicHopGraph);
    }
    Ok(ExactLaw { probs })
}

/// Exact per-node law over a rings network: ring-by-ring forward propagation
/// with per-ring stay probabilities and arbitrary outward hop distributions.
/// Rings are already a topological order, so no sorting is needed.
pub fn propagate_ring_law(
    net: &crate::topology::RingNetwork,
    stay: &[f64],
    hops: &dyn Fn(NodeId) -> Vec<(NodeId, f64)>,
) -> RingLaw {
    assert_eq!(stay.len(), net.radius() + 1);
    let n = net.num_nodes();
    let mut visit = vec![0.0f64; n];
    visit[net.source()] = 1.0;
    let mut probs = vec![0.0f64; n];
    let mut ring_visit = Vec::with_capacity(stay.len());
    let mut ring_spread = Vec::with_capacity(stay.len());
    for k in 0..=net.radius() {
        let q = stay[k];
        let ring = net.ring(k);
        let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for &x in ring {
            let v = visit[x];
            lo = lo.min(v);
            hi = hi.max(v);
            sum += v;
            probs[x] = v * q;
            let rem = v * (1.0 - q);
            if rem > 0.0 {
                for (y, h) in hops(x) {
                    visit[y] += rem * h;
                }
            }
        }
        ring_visit.push(sum / ring.len() as f64);
        ring_spread.push(hi - lo);
    }
    RingLaw {
        probs,
        ring_visit,
        ring_spread,
        stay: stay.to_vec(),
    }
}

/// Empirical counts against an exact law, with the error statistics used in
/// the experiments.
#[derive(Debug, Clone)]
pub struct SelectionReport {
    pub counts: Vec<u64>,
    pub samples: u64,
    /// Relative error per node; `None` where the expected count is below the
    /// chi-square validity threshold of 5.
    pub rel_error: Vec<Option<f64>>,
    /// Mean relative error over nodes with a defined value.
    pub mean_rel_error: f64,
    pub max_rel_error: f64,
    pub chi2: f64,
    pub p_value: f64,
    pub dof: usize,
}

/// Minimum expected count for a node to enter the chi-square statistic (and
/// the per-node relative errors) unpooled.
pub const CHI2_MIN_EXPECTED: f64 = 5.0;

/// Builds a [`SelectionReport`] from empirical counts.
///
/// The relative error of node `x` is `|count_x - f_x| / f_x` with
/// `f_x = p_x * samples`. Nodes whose expected count falls below
/// [`CHI2_MIN_EXPECTED`] are pooled into a single chi-square bucket.
pub fn relative_error(counts: &[u64], law: &ExactLaw, samples: u64) -> SelectionReport {
    assert_eq!(counts.len(), law.probs.len());
    assert_eq!(
        counts.iter().sum::<u64>(),
        samples,
        "counts must total the sample size"
    );
    let mut rel_error = Vec::with_capacity(counts.len());
    let mut sum = 0.0;
    let mut included = 0usize;
    let mut max = 0.0f64;
    for (&c, &p) in counts.iter().zip(&law.probs) {
        let expected = p * samples as f64;
        if expected >= CHI2_MIN_EXPECTED {
            let e = (c as f64 - expected).abs() / expected;
            sum += e;
            included += 1;
            max = max.max(e);
            rel_error.push(Some(e));
        } else {
            rel_error.push(None);
        }
    }
    let (chi2, p_value, dof) = chi_square_gof(counts, &law.probs);
    SelectionReport {
        counts: counts.to_vec(),
        samples,
        rel_error,
        mean_rel_error: if included > 0 { sum / included as f64 } else { 0.0 },
        max_rel_error: max,
        chi2,
        p_value,
        dof,
    }
}

/// Chi-square goodness of fit of `counts` against `probs`, pooling buckets
/// with expected count below [`CHI2_MIN_EXPECTED`]. Returns
/// `(statistic, p_value, degrees_of_freedom)`.
pub fn chi_square_gof(counts: &[u64], probs: &[f64]) -> (f64, f64, usize) {
    assert_eq!(counts.len(), probs.len());
    let samples: u64 = counts.iter().sum();
    let mut stat = 0.0;
    let mut buckets = 0usize;
    let mut pooled_count = 0.0f64;
    let mut pooled_expected = 0.0f64;
    for (&c, &p) in counts.iter().zip(probs) {
        let expected = p * samples as f64;
        if expected >= CHI2_MIN_EXPECTED {
            let d = c as f64 - expected;
            stat += d * d / expected;
            buckets += 1;
        } else {
            pooled_count += c as f64;
            pooled_expected += expected;
        }
    }
    if pooled_expected > 0.0 {
        let d = pooled_count - pooled_expected;
        stat += d * d / pooled_expected;
        buckets += 1;
    }
    if buckets < 2 {
        // Degenerate law (single bucket): the fit is exact by construction.
        return (0.0, 1.0, 0);
    }
    let dof = buckets - 1;
    let dist = ChiSquared::new(dof as f64).expect("dof >= 1");
    let p_value = 1.0 - dist.cdf(stat);
    (stat, p_value, dof)
}

/// Draws `samples` independent categorical samples from the exact law: the
/// reference sampler the walk algorithms are measured against.
pub fn ideal_sampler(law: &ExactLaw, samples: u64, seed: u64) -> Vec<u64> {
    let alias =
        WeightedAliasIndex::new(law.probs.clone()).expect("law probabilities must be valid");
    let mut rng = walk_rng(seed, 0);
    let mut counts = vec![0u64; law.probs.len()];
    for _ in 0..samples {
        counts[alias.sample(&mut rng)] += 1;
    }
    counts
}

/// Two-sample Kolmogorov-Smirnov test. Returns `(statistic, p_value)` with
/// the usual asymptotic tail probability.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert!(!xs.is_empty() && !ys.is_empty());
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < n && j < m {
        let v = a[i].min(b[j]);
        while i < n && a[i] <= v {
            i += 1;
        }
        while j < m && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n as f64 * m as f64) / (n as f64 + m as f64);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    (d, kolmogorov_tail(lambda))
}

/// Tail probability of the Kolmogorov distribution,
/// `Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2)`.
fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = (-2.0 * (j as f64) * (j as f64) * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-12 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Samples each walk of a batch with an independent RNG stream and tallies
/// selections. `walk` returns `(selected, hops)`; `max_hops` is asserted on
/// every draw.
pub fn tally_walks<F>(n: usize, samples: u64, seed: u64, max_hops: usize, mut walk: F) -> Vec<u64>
where
    F: FnMut(&mut rand_chacha::ChaCha12Rng) -> (NodeId, usize),
{
    let mut counts = vec![0u64; n];
    for i in 0..samples {
        let mut rng = walk_rng(seed, i);
        let (node, hops) = walk(&mut rng);
        assert!(
            hops <= max_hops,
            "walk took {hops} hops, bound is {max_hops}"
        );
        counts[node] += 1;
    }
    counts
}

/// Mean and standard error of a sample.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
