//! Preprocessing-free sampling of concentric-rings networks with uniform
//! connectivity.
//!
//! A walk carries everything a node needs as piggybacked message state. In
//! the distance-1 variant the node receives `(v_{k-1}, p_{k-1}, n_{k-1},
//! delta_{k-1})` and derives its own ring size, visit probability, and stay
//! probability:
//!
//! ```text
//! n_k = n_{k-1} * delta_{k-1} / gamma_k
//! v_k = n_{k-1} * (v_{k-1} - p_{k-1}) / n_k
//! q_k = p_k / v_k
//! ```
//!
//! The distance-2 variant lets a walk skip a ring. A hop policy gives the
//! probability `s_k` of a distance-1 hop at ring `k`; the visit probability
//! then mixes inflow from the two rings below, and the message carries both
//! predecessor tuples. Skipping reduces the average number of hops without
//! changing the selection law.

use rand::Rng;

use crate::distributions::{validate, DistanceDistribution};
use crate::error::{RcwError, Result};
use crate::oracle_stats::{propagate_ring_law, RingLaw};
use crate::topology::{check_uniform_connectivity_d2, NodeId, RingNetwork};
use crate::tree_sampler::Walk;

/// Tolerance above 1 before a computed stay probability counts as
/// infeasible rather than float noise.
const STAY_TOL: f64 = 1e-12;

/// Payload of a distance-1 walk message.
#[derive(Debug, Clone, Copy)]
pub struct WalkMessage1 {
    pub source: NodeId,
    pub v_prev: f64,
    pub p_prev: f64,
    pub n_prev: f64,
    pub delta_prev: usize,
}

/// Per-ring values piggybacked by the distance-2 walk.
#[derive(Debug, Clone, Copy)]
pub struct RingTuple {
    pub v: f64,
    pub p: f64,
    pub n: f64,
    pub s: f64,
}

impl RingTuple {
    /// Placeholder for the ring below the source (`n = 0` silences its term
    /// in the recurrence).
    pub fn absent() -> Self {
        RingTuple {
            v: 0.0,
            p: 0.0,
            n: 0.0,
            s: 1.0,
        }
    }
}

/// Payload of a distance-2 walk message: tuples for rings `k-1` and `k-2`.
#[derive(Debug, Clone, Copy)]
pub struct WalkMessage2 {
    pub source: NodeId,
    pub prev1: RingTuple,
    pub prev2: RingTuple,
}

/// Values a node derives when the walk reaches it.
#[derive(Debug, Clone, Copy)]
pub struct StepValues {
    /// Ring size as the node computes it.
    pub n: f64,
    /// Visit probability of the node's ring.
    pub v: f64,
    /// Stay probability.
    pub q: f64,
}

fn stay_from(p: f64, v: f64, ring: usize) -> Result<f64> {
    if v <= 0.0 {
        return if p == 0.0 {
            Ok(0.0)
        } else {
            Err(RcwError::InfeasibleStay {
                ring,
                stay: f64::INFINITY,
            })
        };
    }
    let q = p / v;
    if q > 1.0 + STAY_TOL {
        return Err(RcwError::InfeasibleStay { ring, stay: q });
    }
    Ok(q.min(1.0))
}

/// Distance-1 step with the ring size supplied (used when a global `n_k` is
/// forced onto a network that cannot compute it locally).
pub fn step_rules_d1_with_n(msg: &WalkMessage1, n: f64, p: f64, ring: usize) -> Result<StepValues> {
    let v = msg.n_prev * (msg.v_prev - msg.p_prev) / n;
    Ok(StepValues {
        n,
        v,
        q: stay_from(p, v, ring)?,
    })
}

/// The only data a node must know up front: its outward degree, inward
/// degree, and selection probability. The outward degree is not needed to
/// compute the step; it travels in the next message.
#[derive(Debug, Clone, Copy)]
pub struct LocalRing {
    pub delta: usize,
    pub gamma: usize,
    pub p: f64,
}

/// Distance-1 step: derives `(n_k, v_k, q_k)` from the received message and
/// the node's local knowledge.
pub fn step_rules_d1(msg: &WalkMessage1, local: LocalRing, ring: usize) -> Result<StepValues> {
    let n = msg.n_prev * msg.delta_prev as f64 / local.gamma as f64;
    step_rules_d1_with_n(msg, n, local.p, ring)
}

/// Distance-2 step: mixes inflow from the two rings below,
/// `v_k n_k = n_{k-1}(v_{k-1}-p_{k-1}) s_{k-1} + n_{k-2}(v_{k-2}-p_{k-2})(1-s_{k-2})`.
pub fn step_rules_d2(msg: &WalkMessage2, p: f64, n: f64, ring: usize) -> Result<StepValues> {
    let inflow1 = msg.prev1.n * (msg.prev1.v - msg.prev1.p) * msg.prev1.s;
    let inflow2 = msg.prev2.n * (msg.prev2.v - msg.prev2.p) * (1.0 - msg.prev2.s);
    let v = (inflow1 + inflow2) / n;
    Ok(StepValues {
        n,
        v,
        q: stay_from(p, v, ring)?,
    })
}

/// Distance-1 hop probabilities `s_1..s_{R-1}`, each in `(0, 1]`.
///
/// The effective probability at ring `k` is forced to 1 when no ring `k+2`
/// exists, and `s_0 = 1` always: the first hop leaves the source at
/// distance 1.
#[derive(Debug, Clone)]
pub struct HopPolicy {
    s: Vec<f64>,
    radius: usize,
}

impl HopPolicy {
    pub fn from_values(radius: usize, s: Vec<f64>) -> Result<Self> {
        let expected = radius.saturating_sub(1);
        if s.len() != expected {
            return Err(RcwError::InvalidDistribution(format!(
                "radius {radius} needs {expected} hop probabilities, got {}",
                s.len()
            )));
        }
        if let Some(bad) = s.iter().find(|v| !(**v > 0.0 && **v <= 1.0)) {
            return Err(RcwError::InvalidDistribution(format!(
                "hop probabilities must lie in (0, 1], got {bad}"
            )));
        }
        Ok(HopPolicy { s, radius })
    }

    /// The always-distance-1 policy; reduces the walk to the distance-1
    /// variant exactly.
    pub fn all_distance1(radius: usize) -> Self {
        HopPolicy {
            s: vec![1.0; radius.saturating_sub(1)],
            radius,
        }
    }

    pub fn constant(radius: usize, s: f64) -> Result<Self> {
        HopPolicy::from_values(radius, vec![s; radius.saturating_sub(1)])
    }

    /// Raw policy value at ring `k` (1 at the source).
    pub fn s(&self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.s[k - 1]
        }
    }

    /// Policy value actually used at ring `k`: 1 whenever ring `k+2` does
    /// not exist.
    pub fn effective_s(&self, k: usize) -> f64 {
        if k + 2 > self.radius {
            1.0
        } else {
            self.s(k)
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.s
    }

    /// Greedy feasible policy: walking up from ring 1, pick the smallest
    /// `s_k` (by bisection) that keeps the next ring's visit probability
    /// above its selection probability, then take `max(s_min, 0.5)`.
    pub fn feasible_default(ring_sizes: &[usize], dist: &DistanceDistribution) -> Result<Self> {
        let radius = ring_sizes.len() - 1;
        let mut policy = HopPolicy::all_distance1(radius);
        if radius < 3 {
            return Ok(policy);
        }
        // out[k] = mass forwarded from ring k; rebuilt as s values are fixed.
        for k in 1..=radius - 2 {
            let ladder = d2_ladder_partial(ring_sizes, dist, &policy, k)?;
            let out_k = ring_sizes[k] as f64 * (ladder[k].v - dist.p(k));
            let locked = ladder[k + 1].carried_d2_inflow;
            let need = ring_sizes[k + 1] as f64 * dist.p(k + 1);
            // Leave relative slack so the downstream stay probabilities do
            // not land exactly on 1.
            let margin = need * 1e-9 + 1e-15;
            let feasible = |s: f64| out_k * s + locked >= need + margin;
            let s_min = if feasible(0.0) {
                0.0
            } else if !feasible(1.0) {
                return Err(RcwError::InfeasibleStay {
                    ring: k + 1,
                    stay: need / (out_k + locked),
                });
            } else {
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if feasible(mid) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                hi
            };
            policy.s[k - 1] = s_min.max(0.5).min(1.0);
        }
        // Certify the completed policy.
        d2_ladder(ring_sizes, dist, &policy)?;
        Ok(policy)
    }
}

/// Intermediate ladder entry: step values plus the distance-2 inflow already
/// committed to this ring by the policy prefix.
struct LadderEntry {
    v: f64,
    carried_d2_inflow: f64,
}

/// Ladder of visit probabilities under a partially-fixed policy, up to ring
/// `upto + 1`; entries beyond the fixed prefix assume `s = 1`.
fn d2_ladder_partial(
    ring_sizes: &[usize],
    dist: &DistanceDistribution,
    policy: &HopPolicy,
    upto: usize,
) -> Result<Vec<LadderEntry>> {
    let radius = ring_sizes.len() - 1;
    let mut entries: Vec<LadderEntry> = Vec::with_capacity(radius + 1);
    entries.push(LadderEntry {
        v: 1.0,
        carried_d2_inflow: 0.0,
    });
    let mut out_prev2: f64 = 0.0; // (1 - s) share leaving ring k-2
    let mut s_prev2: f64 = 1.0;
    for k in 1..=upto.min(radius - 1) + 1 {
        let s_prev1 = if k - 1 == 0 {
            1.0
        } else {
            policy.effective_s(k - 1)
        };
        let out_prev1 = ring_sizes[k - 1] as f64 * (entries[k - 1].v - dist.p(k - 1));
        let locked = out_prev2 * (1.0 - s_prev2);
        let v = (out_prev1 * s_prev1 + locked) / ring_sizes[k] as f64;
        if v + STAY_TOL < dist.p(k) {
            return Err(RcwError::InfeasibleStay {
                ring: k,
                stay: dist.p(k) / v,
            });
        }
        entries.push(LadderEntry {
            v,
            carried_d2_inflow: locked,
        });
        out_prev2 = out_prev1;
        s_prev2 = s_prev1;
    }
    Ok(entries)
}

/// Full `(n, v, q)` ladder of the distance-2 walk under `policy`.
pub fn d2_ladder(
    ring_sizes: &[usize],
    dist: &DistanceDistribution,
    policy: &HopPolicy,
) -> Result<Vec<StepValues>> {
    let radius = ring_sizes.len() - 1;
    let mut ladder = vec![StepValues {
        n: 1.0,
        v: 1.0,
        q: dist.p(0).min(1.0),
    }];
    let mut msg = WalkMessage2 {
        source: 0,
        prev1: RingTuple {
            v: 1.0,
            p: dist.p(0),
            n: 1.0,
            s: 1.0,
        },
        prev2: RingTuple::absent(),
    };
    for k in 1..=radius {
        let n = ring_sizes[k] as f64;
        let step = step_rules_d2(&msg, dist.p(k), n, k)?;
        let step = if k == radius {
            finalize_last_ring(step, k)?
        } else {
            step
        };
        ladder.push(step);
        msg = WalkMessage2 {
            source: 0,
            prev1: RingTuple {
                v: step.v,
                p: dist.p(k),
                n,
                s: policy.effective_s(k),
            },
            prev2: msg.prev1,
        };
    }
    Ok(ladder)
}

/// `(n, v, q)` ladder of the distance-1 walk. With `forced_sizes` the ring
/// sizes come from global knowledge instead of the local recurrence (the
/// bias-demonstration mode for networks without uniform connectivity, where
/// the local computation would be invalid).
pub fn d1_ladder(
    net: &RingNetwork,
    dist: &DistanceDistribution,
    forced: bool,
) -> Result<Vec<StepValues>> {
    let radius = net.radius();
    let mut ladder = vec![StepValues {
        n: 1.0,
        v: 1.0,
        q: dist.p(0).min(1.0),
    }];
    let mut msg = WalkMessage1 {
        source: net.source(),
        v_prev: 1.0,
        p_prev: dist.p(0),
        n_prev: 1.0,
        delta_prev: net.delta(net.source()),
    };
    for k in 1..=radius {
        let rep = net.ring(k)[0];
        let step = if forced {
            step_rules_d1_with_n(&msg, net.ring(k).len() as f64, dist.p(k), k)?
        } else {
            step_rules_d1(&msg, LocalRing { delta: net.delta(rep), gamma: net.gamma(rep), p: dist.p(k) }, k)?
        };
        let step = if k == radius {
            finalize_last_ring(step, k)?
        } else {
            step
        };
        ladder.push(step);
        msg = WalkMessage1 {
            source: net.source(),
            v_prev: step.v,
            p_prev: dist.p(k),
            n_prev: step.n,
            delta_prev: net.delta(rep),
        };
    }
    Ok(ladder)
}

/// At the outermost ring the stay probability must come out as 1; anything
/// else means the distribution and the walk disagree about the leftover mass.
fn finalize_last_ring(step: StepValues, ring: usize) -> Result<StepValues> {
    if (step.q - 1.0).abs() > 1e-6 {
        return Err(RcwError::InfeasibleStay {
            ring,
            stay: step.q,
        });
    }
    Ok(StepValues { q: 1.0, ..step })
}

fn first_nonuniform_ring(net: &RingNetwork) -> Option<usize> {
    (1..=net.radius()).find(|&k| {
        let ring = net.ring(k);
        let delta = net.delta(ring[0]);
        let gamma = net.gamma(ring[0]);
        ring.iter()
            .any(|&x| net.delta(x) != delta || net.gamma(x) != gamma)
    })
}

/// Distance-1 walk sampler.
#[derive(Debug)]
pub struct RingsD1Sampler<'a> {
    net: &'a RingNetwork,
    dist: &'a DistanceDistribution,
    forced: bool,
}

impl<'a> RingsD1Sampler<'a> {
    /// Requires uniform connectivity and a valid distribution.
    pub fn new(net: &'a RingNetwork, dist: &'a DistanceDistribution) -> Result<Self> {
        if !validate(dist, net) {
            return Err(RcwError::InvalidDistribution(
                "distribution does not validate against the network".into(),
            ));
        }
        if let Some(ring) = first_nonuniform_ring(net) {
            return Err(RcwError::NotUniformlyConnected { ring, distance: 1 });
        }
        Ok(RingsD1Sampler {
            net,
            dist,
            forced: false,
        })
    }

    /// Bias-demonstration mode: runs the distance-1 rules on any rings
    /// network, taking every `n_k` from global knowledge. On a network
    /// without uniform connectivity the resulting law is *not* the requested
    /// distribution; that is the point.
    pub fn new_forced(net: &'a RingNetwork, dist: &'a DistanceDistribution) -> Result<Self> {
        if !validate(dist, net) {
            return Err(RcwError::InvalidDistribution(
                "distribution does not validate against the network".into(),
            ));
        }
        Ok(RingsD1Sampler {
            net,
            dist,
            forced: true,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<NodeId> {
        Ok(self.walk(rng)?.selected)
    }

    pub fn walk<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Walk> {
        let net = self.net;
        let dist = self.dist;
        let source = net.source();
        let radius = net.radius();
        if radius == 0 || rng.random_bool(dist.p(0).clamp(0.0, 1.0)) {
            return Ok(Walk {
                selected: source,
                hops: 0,
            });
        }
        let mut msg = WalkMessage1 {
            source,
            v_prev: 1.0,
            p_prev: dist.p(0),
            n_prev: 1.0,
            delta_prev: net.delta(source),
        };
        let ups = net.up_edges(source);
        let mut current = ups[rng.random_range(0..ups.len())];
        let mut hops = 1usize;
        for k in 1..=radius {
            let step = if self.forced {
                step_rules_d1_with_n(&msg, net.ring(k).len() as f64, dist.p(k), k)?
            } else {
                step_rules_d1(
                    &msg,
                    LocalRing {
                        delta: net.delta(current),
                        gamma: net.gamma(current),
                        p: dist.p(k),
                    },
                    k,
                )?
            };
            if k == radius || rng.random_bool(step.q.clamp(0.0, 1.0)) {
                return Ok(Walk {
                    selected: current,
                    hops,
                });
            }
            msg = WalkMessage1 {
                source,
                v_prev: step.v,
                p_prev: dist.p(k),
                n_prev: step.n,
                delta_prev: net.delta(current),
            };
            let ups = net.up_edges(current);
            current = ups[rng.random_range(0..ups.len())];
            hops += 1;
        }
        unreachable!("walk terminates at the outermost ring");
    }
}

/// One distance-1 walk on a uniformly connected network.
pub fn sample_rings_d1<R: Rng + ?Sized>(
    net: &RingNetwork,
    dist: &DistanceDistribution,
    rng: &mut R,
) -> Result<NodeId> {
    RingsD1Sampler::new(net, dist)?.sample(rng)
}

/// Distance-2 walk sampler.
#[derive(Debug)]
pub struct RingsD2Sampler<'a> {
    net: &'a RingNetwork,
    dist: &'a DistanceDistribution,
    policy: &'a HopPolicy,
    ring_sizes: Vec<usize>,
}

impl<'a> RingsD2Sampler<'a> {
    /// Requires distance-2 adjacency with uniform connectivity at both
    /// distances, a feasible policy, and (unless `source_stay`) zero mass at
    /// the source, matching the walk's initial values.
    pub fn new(
        net: &'a RingNetwork,
        dist: &'a DistanceDistribution,
        policy: &'a HopPolicy,
        source_stay: bool,
    ) -> Result<Self> {
        if !validate(dist, net) {
            return Err(RcwError::InvalidDistribution(
                "distribution does not validate against the network".into(),
            ));
        }
        if !source_stay && dist.p(0) != 0.0 {
            return Err(RcwError::InvalidDistribution(
                "the distance-2 walk fixes p_0 = 0; enable source_stay to allow source mass"
                    .into(),
            ));
        }
        if !net.has_distance2() || !check_uniform_connectivity_d2(net) {
            let ring = first_nonuniform_ring(net).unwrap_or(0);
            return Err(RcwError::NotUniformlyConnected { ring, distance: 2 });
        }
        let ring_sizes = net.ring_sizes();
        for k in 1..=net.radius().saturating_sub(2) {
            if net.up2_edges(net.ring(k)[0]).unwrap().is_empty() {
                return Err(RcwError::NotUniformlyConnected { ring: k, distance: 2 });
            }
        }
        if policy.radius != net.radius() {
            return Err(RcwError::InvalidDistribution(
                "policy radius does not match the network".into(),
            ));
        }
        // Reject infeasible policies before any walk runs.
        d2_ladder(&ring_sizes, dist, policy)?;
        Ok(RingsD2Sampler {
            net,
            dist,
            policy,
            ring_sizes,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<NodeId> {
        Ok(self.walk(rng)?.selected)
    }

    pub fn walk<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Walk> {
        let net = self.net;
        let dist = self.dist;
        let source = net.source();
        let radius = net.radius();
        if radius == 0 || rng.random_bool(dist.p(0).clamp(0.0, 1.0)) {
            return Ok(Walk {
                selected: source,
                hops: 0,
            });
        }
        // s_0 = 1: the first hop is always of length 1.
        let mut msg = WalkMessage2 {
            source,
            prev1: RingTuple {
                v: 1.0,
                p: dist.p(0),
                n: 1.0,
                s: 1.0,
            },
            prev2: RingTuple::absent(),
        };
        let ups = net.up_edges(source);
        let mut current = ups[rng.random_range(0..ups.len())];
        let mut k = 1usize;
        let mut hops = 1usize;
        loop {
            let n = self.ring_sizes[k] as f64;
            let step = step_rules_d2(&msg, dist.p(k), n, k)?;
            if k == radius || rng.random_bool(step.q.clamp(0.0, 1.0)) {
                return Ok(Walk {
                    selected: current,
                    hops,
                });
            }
            let here = RingTuple {
                v: step.v,
                p: dist.p(k),
                n,
                s: self.policy.effective_s(k),
            };
            if rng.random_bool(here.s) {
                msg = WalkMessage2 {
                    source,
                    prev1: here,
                    prev2: msg.prev1,
                };
                let ups = net.up_edges(current);
                current = ups[rng.random_range(0..ups.len())];
                k += 1;
            } else {
                // Skipping a ring: the sender reconstructs the skipped ring's
                // tuple (its visit probability in particular) so the receiver
                // can run the same recurrence.
                let n_mid = self.ring_sizes[k + 1] as f64;
                let mid_msg = WalkMessage2 {
                    source,
                    prev1: here,
                    prev2: msg.prev1,
                };
                let v_mid = step_rules_d2(&mid_msg, dist.p(k + 1), n_mid, k + 1)?.v;
                let mid = RingTuple {
                    v: v_mid,
                    p: dist.p(k + 1),
                    n: n_mid,
                    s: self.policy.effective_s(k + 1),
                };
                msg = WalkMessage2 {
                    source,
                    prev1: mid,
                    prev2: here,
                };
                let ups2 = net.up2_edges(current).expect("validated distance-2 net");
                current = ups2[rng.random_range(0..ups2.len())];
                k += 2;
            }
            hops += 1;
        }
    }
}

/// One distance-2 walk; `source_stay = false` keeps the literal initial
/// values (zero source mass).
pub fn sample_rings_d2<R: Rng + ?Sized>(
    net: &RingNetwork,
    dist: &DistanceDistribution,
    policy: &HopPolicy,
    rng: &mut R,
) -> Result<NodeId> {
    RingsD2Sampler::new(net, dist, policy, false)?.sample(rng)
}

/// Which walk variant an oracle should describe.
pub enum RingsMode<'a> {
    /// Distance-1 rules with locally computed ring sizes; requires uniform
    /// connectivity.
    Distance1,
    /// Distance-1 rules with ring sizes supplied globally; valid on any
    /// rings network, biased whenever connectivity is not uniform.
    Distance1Forced,
    /// Distance-2 rules under a hop policy.
    Distance2 { policy: &'a HopPolicy },
}

/// Exact per-node law of the chosen walk variant, with per-ring visit
/// bookkeeping. On uniformly connected networks the law equals `p_k` on
/// every node of ring `k` and the per-ring spread is zero; in forced mode on
/// a non-uniform network the spread exposes the bias.
pub fn rings_oracle(
    net: &RingNetwork,
    dist: &DistanceDistribution,
    mode: RingsMode,
) -> Result<RingLaw> {
    if !validate(dist, net) {
        return Err(RcwError::InvalidDistribution(
            "distribution does not validate against the network".into(),
        ));
    }
    match mode {
        RingsMode::Distance1 => {
            if let Some(ring) = first_nonuniform_ring(net) {
                return Err(RcwError::NotUniformlyConnected { ring, distance: 1 });
            }
            let ladder = d1_ladder(net, dist, false)?;
            for (k, step) in ladder.iter().enumerate() {
                debug_assert_eq!(step.n, net.ring(k).len() as f64);
            }
            let stay: Vec<f64> = ladder.iter().map(|s| s.q).collect();
            Ok(propagate_ring_law(net, &stay, &|x| uniform_up_hops(net, x)))
        }
        RingsMode::Distance1Forced => {
            let ladder = d1_ladder(net, dist, true)?;
            let stay: Vec<f64> = ladder.iter().map(|s| s.q).collect();
            Ok(propagate_ring_law(net, &stay, &|x| uniform_up_hops(net, x)))
        }
        RingsMode::Distance2 { policy } => {
            if !net.has_distance2() || !check_uniform_connectivity_d2(net) {
                let ring = first_nonuniform_ring(net).unwrap_or(0);
                return Err(RcwError::NotUniformlyConnected { ring, distance: 2 });
            }
            let ladder = d2_ladder(&net.ring_sizes(), dist, policy)?;
            let stay: Vec<f64> = ladder.iter().map(|s| s.q).collect();
            let hops = |x: NodeId| -> Vec<(NodeId, f64)> {
                let k = net.ring_of(x);
                if k == 0 {
                    return uniform_up_hops(net, x);
                }
                let s = policy.effective_s(k);
                let mut out = Vec::new();
                let ups = net.up_edges(x);
                for &y in ups {
                    out.push((y, s / ups.len() as f64));
                }
                if s < 1.0 {
                    let ups2 = net.up2_edges(x).expect("distance-2 adjacency present");
                    for &y in ups2 {
                        out.push((y, (1.0 - s) / ups2.len() as f64));
                    }
                }
                out
            };
            Ok(propagate_ring_law(net, &stay, &hops))
        }
    }
}

fn uniform_up_hops(net: &RingNetwork, x: NodeId) -> Vec<(NodeId, f64)> {
    let ups = net.up_edges(x);
    ups.iter().map(|&y| (y, 1.0 / ups.len() as f64)).collect()
}

/// Locally computed ring sizes along the distance-1 ladder; on a uniformly
/// connected network these match the true sizes exactly.
pub fn d1_local_ring_sizes(net: &RingNetwork, dist: &DistanceDistribution) -> Result<Vec<f64>> {
    Ok(d1_ladder(net, dist, false)?.iter().map(|s| s.n).collect())
}
