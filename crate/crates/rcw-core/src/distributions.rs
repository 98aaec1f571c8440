//! Target sampling distributions: per-node weights for arbitrary networks and
//! distance-based `p_k` vectors for ring networks.

use crate::error::{RcwError, Result};
use crate::topology::{Network, RingNetwork};

/// Tolerance on `sum_k n_k * p_k = 1`; loose enough to absorb accumulation
/// over thousands of rings, tight enough to catch a mis-specified vector.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Per-node positive weights with their cached total.
#[derive(Debug, Clone)]
pub struct WeightDistribution {
    weights: Vec<f64>,
    eta: f64,
}

impl WeightDistribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(RcwError::InvalidDistribution("no weights".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(RcwError::InvalidDistribution(format!(
                "weights must be positive, got {w}"
            )));
        }
        let eta = weights.iter().sum();
        Ok(WeightDistribution { weights, eta })
    }

    pub fn from_network(net: &Network) -> Self {
        WeightDistribution {
            weights: net.weights().to_vec(),
            eta: net.eta(),
        }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn weight(&self, x: usize) -> f64 {
        self.weights[x]
    }

    /// Selection probability `w(x) / eta`.
    pub fn probability(&self, x: usize) -> f64 {
        self.weights[x] / self.eta
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Distance-based distribution: one selection probability per ring.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceDistribution {
    p: Vec<f64>,
}

impl DistanceDistribution {
    /// Wraps an explicit `p_0..p_R` vector. Structural validation against a
    /// concrete network happens in [`validate`].
    pub fn explicit(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(RcwError::InvalidDistribution("empty p vector".into()));
        }
        if let Some(bad) = p.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(RcwError::InvalidDistribution(format!(
                "p values must be nonnegative, got {bad}"
            )));
        }
        Ok(DistanceDistribution { p })
    }

    pub fn p(&self, k: usize) -> f64 {
        self.p[k]
    }

    pub fn values(&self) -> &[f64] {
        &self.p
    }

    /// Largest ring index the distribution covers.
    pub fn radius(&self) -> usize {
        self.p.len() - 1
    }
}

/// The uniform distribution: every node selected with probability
/// `1 / total node count`.
pub fn uniform(net: &RingNetwork) -> DistanceDistribution {
    uniform_for_sizes(&net.ring_sizes())
}

pub fn uniform_for_sizes(ring_sizes: &[usize]) -> DistanceDistribution {
    let total: usize = ring_sizes.iter().sum();
    DistanceDistribution {
        p: vec![1.0 / total as f64; ring_sizes.len()],
    }
}

/// Distribution proportional to the inverse of the distance: `p_k = c / k`
/// for `k >= 1`, with `c` normalizing the mass left after assigning `p0` to
/// the source.
pub fn inverse_distance(net: &RingNetwork, p0: f64) -> Result<DistanceDistribution> {
    inverse_distance_for_sizes(&net.ring_sizes(), p0)
}

pub fn inverse_distance_for_sizes(ring_sizes: &[usize], p0: f64) -> Result<DistanceDistribution> {
    if !(0.0..1.0).contains(&p0) {
        return Err(RcwError::InvalidDistribution(format!(
            "source mass {p0} outside [0, 1)"
        )));
    }
    if ring_sizes.len() < 2 {
        return Err(RcwError::InvalidDistribution(
            "inverse-distance needs at least one ring beyond the source".into(),
        ));
    }
    let harmonic: f64 = ring_sizes
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &nk)| nk as f64 / k as f64)
        .sum();
    let c = (1.0 - p0) / harmonic;
    let mut p = vec![p0];
    p.extend((1..ring_sizes.len()).map(|k| c / k as f64));
    Ok(DistanceDistribution { p })
}

/// True iff the distribution matches the network radius, normalizes to 1
/// within [`NORMALIZATION_TOL`], and keeps positive mass on the last ring
/// (without which the walk could fail to terminate).
pub fn validate(dist: &DistanceDistribution, net: &RingNetwork) -> bool {
    validate_for_sizes(dist, &net.ring_sizes())
}

pub fn validate_for_sizes(dist: &DistanceDistribution, ring_sizes: &[usize]) -> bool {
    if dist.p.len() != ring_sizes.len() {
        return false;
    }
    if dist.p.iter().any(|&v| !(v.is_finite() && v >= 0.0)) {
        return false;
    }
    if dist.p[dist.radius()] <= 0.0 {
        return false;
    }
    let mass: f64 = dist
        .p
        .iter()
        .zip(ring_sizes)
        .map(|(&pk, &nk)| pk * nk as f64)
        .sum();
    (mass - 1.0).abs() <= NORMALIZATION_TOL
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build_grid, build_uniform_rings, GridSpec};

    #[test]
    fn uniform_on_small_grid() {
        let net = build_grid(GridSpec::new(1).unwrap());
        let dist = uniform(&net);
        assert_eq!(dist.values(), &[0.2, 0.2]);
        assert!(validate(&dist, &net));
    }

    #[test]
    fn uniform_on_rings() {
        let dist = uniform_for_sizes(&[1, 4, 4]);
        for k in 0..=2 {
            assert!((dist.p(k) - 1.0 / 9.0).abs() < 1e-15);
        }
        let big = uniform_for_sizes(&vec![100; 101].iter().enumerate().map(|(k, &v)| if k == 0 { 1 } else { v }).collect::<Vec<_>>());
        assert!((big.p(5) - 1.0 / 10001.0).abs() < 1e-18);
    }

    #[test]
    fn inverse_distance_small_case() {
        let dist = inverse_distance_for_sizes(&[1, 2, 2], 0.0).unwrap();
        assert!((dist.p(0)).abs() < 1e-15);
        assert!((dist.p(1) - 1.0 / 3.0).abs() < 1e-15);
        assert!((dist.p(2) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn inverse_distance_rejects_full_source_mass() {
        assert!(inverse_distance_for_sizes(&[1, 4], 1.0).is_err());
    }

    #[test]
    fn inverse_distance_with_source_mass() {
        let dist = inverse_distance_for_sizes(&[1, 4], 0.2).unwrap();
        assert!((dist.p(1) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn validate_rejects_bad_mass_and_zero_tail() {
        let net = build_uniform_rings(&[1, 4], &[4], &[1]).unwrap();
        let bad = DistanceDistribution::explicit(vec![0.5, 0.5]).unwrap();
        assert!(!validate(&bad, &net));
        let zero_tail = DistanceDistribution::explicit(vec![1.0, 0.0]).unwrap();
        assert!(!validate(&zero_tail, &net));
    }

    #[test]
    fn generators_always_validate_and_pid_is_inverse_linear() {
        for sizes in [vec![1usize, 4, 4], vec![1, 3, 6, 6], vec![1, 8]] {
            let uni = uniform_for_sizes(&sizes);
            let pid = inverse_distance_for_sizes(&sizes, 0.1).unwrap();
            assert!(validate_for_sizes(&uni, &sizes));
            assert!(validate_for_sizes(&pid, &sizes));
            for k in 1..sizes.len() {
                assert!((pid.p(k) * k as f64 - pid.p(1)).abs() < 1e-12);
            }
        }
    }
}
