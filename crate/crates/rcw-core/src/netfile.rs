//! Plain-text network description files.
//!
//! Every file opens with the header line `rcw-net v1` followed by a `type`
//! line and type-specific parameters. Blank lines and `#` comments are
//! skipped.
//!
//! ```text
//! rcw-net v1
//! type grid
//! radius 10
//! ```
//!
//! ```text
//! rcw-net v1
//! type uniform_rings
//! sizes 1 4 4
//! delta 4 1
//! gamma 1 1
//! ```
//!
//! ```text
//! rcw-net v1
//! type geometric
//! rings 30
//! per_ring 30
//! beta 90
//! seed 7
//! ```
//!
//! ```text
//! rcw-net v1
//! type edge_list
//! edges
//! 0 1
//! 1 2
//! weights
//! 0 1.0
//! 1 2.5
//! 2 0.5
//! ```
//!
//! Edge-list weights default to 1 for nodes without an entry.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{RcwError, Result};
use crate::topology::{
    build_geometric, build_grid, build_uniform_rings, GeometricDeployment, GridSpec, Network,
    RingNetwork,
};

/// A parsed network: rings networks carry ring structure, edge lists carry
/// weights.
pub enum LoadedNetwork {
    Rings(RingNetwork),
    Weighted(Network),
}

impl LoadedNetwork {
    pub fn as_rings(&self) -> Result<&RingNetwork> {
        match self {
            LoadedNetwork::Rings(net) => Ok(net),
            LoadedNetwork::Weighted(_) => Err(RcwError::Parse(
                "this operation needs a rings network (grid, uniform_rings, or geometric)".into(),
            )),
        }
    }

    pub fn as_weighted(&self) -> Result<&Network> {
        match self {
            LoadedNetwork::Weighted(net) => Ok(net),
            LoadedNetwork::Rings(_) => Err(RcwError::Parse(
                "this operation needs an edge_list network with weights".into(),
            )),
        }
    }
}

pub fn load(path: &Path) -> Result<LoadedNetwork> {
    parse(&std::fs::read_to_string(path)?)
}

pub fn parse(text: &str) -> Result<LoadedNetwork> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (_, header) = lines
        .next()
        .ok_or_else(|| RcwError::Parse("empty network file".into()))?;
    if header != "rcw-net v1" {
        return Err(RcwError::Parse(format!(
            "expected header 'rcw-net v1', found '{header}'"
        )));
    }
    let (line_no, type_line) = lines
        .next()
        .ok_or_else(|| RcwError::Parse("missing 'type' line".into()))?;
    let kind = type_line
        .strip_prefix("type")
        .map(str::trim)
        .ok_or_else(|| RcwError::Parse(format!("line {line_no}: expected 'type <kind>'")))?;

    let rest: Vec<(usize, &str)> = lines.collect();
    match kind {
        "grid" => {
            let fields = key_values(&rest)?;
            let radius = get_usize(&fields, "radius")?;
            Ok(LoadedNetwork::Rings(build_grid(GridSpec::new(radius)?)))
        }
        "uniform_rings" => {
            let fields = key_values(&rest)?;
            let sizes = get_usize_list(&fields, "sizes")?;
            let delta = get_usize_list(&fields, "delta")?;
            let gamma = get_usize_list(&fields, "gamma")?;
            Ok(LoadedNetwork::Rings(build_uniform_rings(
                &sizes, &delta, &gamma,
            )?))
        }
        "geometric" => {
            let fields = key_values(&rest)?;
            let dep = GeometricDeployment {
                rings: get_usize(&fields, "rings")?,
                per_ring: get_usize(&fields, "per_ring")?,
                beta: get_f64(&fields, "beta")?,
                seed: get_usize(&fields, "seed")? as u64,
            };
            Ok(LoadedNetwork::Rings(build_geometric(&dep)?))
        }
        "edge_list" => parse_edge_list(&rest),
        other => Err(RcwError::Parse(format!("unknown network type '{other}'"))),
    }
}

fn key_values<'a>(lines: &[(usize, &'a str)]) -> Result<HashMap<&'a str, &'a str>> {
    let mut map = HashMap::new();
    for &(line_no, line) in lines {
        let (key, value) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| RcwError::Parse(format!("line {line_no}: expected 'key value'")))?;
        map.insert(key, value.trim());
    }
    Ok(map)
}

fn get<'a>(fields: &HashMap<&str, &'a str>, key: &str) -> Result<&'a str> {
    fields
        .get(key)
        .copied()
        .ok_or_else(|| RcwError::Parse(format!("missing field '{key}'")))
}

fn get_usize(fields: &HashMap<&str, &str>, key: &str) -> Result<usize> {
    get(fields, key)?
        .parse()
        .map_err(|e| RcwError::Parse(format!("field '{key}': {e}")))
}

fn get_f64(fields: &HashMap<&str, &str>, key: &str) -> Result<f64> {
    get(fields, key)?
        .parse()
        .map_err(|e| RcwError::Parse(format!("field '{key}': {e}")))
}

fn get_usize_list(fields: &HashMap<&str, &str>, key: &str) -> Result<Vec<usize>> {
    get(fields, key)?
        .split_whitespace()
        .map(|tok| {
            tok.parse()
                .map_err(|e| RcwError::Parse(format!("field '{key}': {e}")))
        })
        .collect()
}

fn parse_edge_list(lines: &[(usize, &str)]) -> Result<LoadedNetwork> {
    #[derive(PartialEq)]
    enum Section {
        None,
        Edges,
        Weights,
    }
    let mut section = Section::None;
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut weight_entries: Vec<(usize, f64)> = Vec::new();
    for &(line_no, line) in lines {
        match line {
            "edges" => section = Section::Edges,
            "weights" => section = Section::Weights,
            _ => {
                let mut toks = line.split_whitespace();
                match section {
                    Section::Edges => {
                        let parse = |t: Option<&str>| -> Result<usize> {
                            t.ok_or_else(|| {
                                RcwError::Parse(format!("line {line_no}: expected 'u v'"))
                            })?
                            .parse()
                            .map_err(|e| RcwError::Parse(format!("line {line_no}: {e}")))
                        };
                        edges.push((parse(toks.next())?, parse(toks.next())?));
                    }
                    Section::Weights => {
                        let node: usize = toks
                            .next()
                            .ok_or_else(|| {
                                RcwError::Parse(format!("line {line_no}: expected 'node weight'"))
                            })?
                            .parse()
                            .map_err(|e| RcwError::Parse(format!("line {line_no}: {e}")))?;
                        let weight: f64 = toks
                            .next()
                            .ok_or_else(|| {
                                RcwError::Parse(format!("line {line_no}: expected 'node weight'"))
                            })?
                            .parse()
                            .map_err(|e| RcwError::Parse(format!("line {line_no}: {e}")))?;
                        weight_entries.push((node, weight));
                    }
                    Section::None => {
                        return Err(RcwError::Parse(format!(
                            "line {line_no}: data before an 'edges' or 'weights' section"
                        )))
                    }
                }
            }
        }
    }
    if edges.is_empty() {
        return Err(RcwError::Parse("edge_list network has no edges".into()));
    }
    let n = edges
        .iter()
        .flat_map(|&(u, v)| [u, v])
        .chain(weight_entries.iter().map(|&(x, _)| x))
        .max()
        .unwrap()
        + 1;
    let mut weights = vec![1.0; n];
    for (node, w) in weight_entries {
        weights[node] = w;
    }
    Ok(LoadedNetwork::Weighted(Network::from_edges(
        n, &edges, weights,
    )?))
}

/// Parses a distribution file: one `p_k` value per line.
pub fn parse_distribution(text: &str) -> Result<crate::distributions::DistanceDistribution> {
    let values: Vec<f64> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.parse()
                .map_err(|e| RcwError::Parse(format!("distribution value '{l}': {e}")))
        })
        .collect::<Result<_>>()?;
    crate::distributions::DistanceDistribution::explicit(values)
}

/// Parses a hop-policy file: one `s_k` value per line for `k = 1..R-1`.
pub fn parse_policy(text: &str, radius: usize) -> Result<crate::ring_sampler::HopPolicy> {
    let values: Vec<f64> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.parse()
                .map_err(|e| RcwError::Parse(format!("policy value '{l}': {e}")))
        })
        .collect::<Result<_>>()?;
    crate::ring_sampler::HopPolicy::from_values(radius, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_grid() {
        let net = parse("rcw-net v1\ntype grid\nradius 3\n").unwrap();
        assert_eq!(net.as_rings().unwrap().num_nodes(), 25);
    }

    #[test]
    fn parses_uniform_rings_with_comments() {
        let text = "# comment\nrcw-net v1\ntype uniform_rings\nsizes 1 4 4  # three rings\ndelta 4 1\ngamma 1 1\n";
        let net = parse(text).unwrap();
        assert_eq!(net.as_rings().unwrap().ring_sizes(), vec![1, 4, 4]);
    }

    #[test]
    fn parses_edge_list_with_default_weights() {
        let text = "rcw-net v1\ntype edge_list\nedges\n0 1\n1 2\nweights\n1 2.5\n";
        let net = parse(text).unwrap();
        let net = net.as_weighted().unwrap();
        assert_eq!(net.len(), 3);
        assert_eq!(net.weight(0), 1.0);
        assert_eq!(net.weight(1), 2.5);
    }

    #[test]
    fn rejects_bad_header_and_unknown_type() {
        assert!(matches!(parse("nope"), Err(RcwError::Parse(_))));
        assert!(matches!(
            parse("rcw-net v1\ntype hexagon\n"),
            Err(RcwError::Parse(_))
        ));
    }

    #[test]
    fn geometric_roundtrip_is_deterministic() {
        let text = "rcw-net v1\ntype geometric\nrings 5\nper_ring 8\nbeta 180\nseed 11\n";
        let a = parse(text).unwrap();
        let b = parse(text).unwrap();
        let (a, b) = (a.as_rings().unwrap(), b.as_rings().unwrap());
        for x in 0..a.num_nodes() {
            assert_eq!(a.up_edges(x), b.up_edges(x));
        }
    }

    #[test]
    fn parses_distribution_and_policy_files() {
        let dist = parse_distribution("0.2\n0.4\n# tail\n0.1\n").unwrap();
        assert_eq!(dist.values(), &[0.2, 0.4, 0.1]);
        let policy = parse_policy("0.5\n0.75\n", 3).unwrap();
        assert_eq!(policy.values(), &[0.5, 0.75]);
    }
}
