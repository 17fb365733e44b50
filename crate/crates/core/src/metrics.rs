//! Cohesion, coupling and slice-level statistics.
//!
//! Cohesion is a size-weighted mean of directive relevances. Coupling between
//! two nodes averages, over all cross pairs of their directives, the change
//! probability of the target directive divided by the undirected distance
//! between the two directives.
//!
//! Every sum runs in `NodeId` order so results do not depend on evaluation
//! order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{FdGraph, GraphError, NodeId, NodeKind};
use crate::slicer::Slice;

/// Absolute tolerance for comparing computed reals.
pub const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("relevance undefined for function edges (raw weight 0)")]
    FunctionEdge,
    #[error("invalid raw weight {0} (expected 1, 3, 7 or 10)")]
    InvalidWeight(i64),
    #[error("cohesion is undefined for directive `{0}`")]
    DirectiveCohesion(NodeId),
    #[error("`{0}` is not a directive")]
    NotADirective(NodeId),
    #[error("`{0}` is a directive; coupling is defined between functions")]
    DirectiveCoupling(NodeId),
    #[error("identical directives `{0}`")]
    IdenticalDirectives(NodeId),
    #[error("directive `{directive}` is not under `{node}`")]
    NotUnder { directive: NodeId, node: NodeId },
    #[error("directive sets of `{0}` and `{1}` overlap; resolve the assignment first")]
    Overlap(NodeId, NodeId),
    #[error("identical nodes `{0}`")]
    IdenticalNodes(NodeId),
    #[error("correlation needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("correlation undefined: zero variance")]
    ZeroVariance,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Normalized impact of a directive on its parent function.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Relevance(f64);

impl Relevance {
    pub fn from_raw(raw: u8) -> Result<Self, MetricsError> {
        relevance_from_raw(i64::from(raw))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Catastrophic 10 → 1.0, critical 7 → 0.7, marginal 3 → 0.3, negligible 1 → 0.1.
pub fn relevance_from_raw(raw: i64) -> Result<Relevance, MetricsError> {
    match raw {
        10 => Ok(Relevance(1.0)),
        7 => Ok(Relevance(0.7)),
        3 => Ok(Relevance(0.3)),
        1 => Ok(Relevance(0.1)),
        0 => Err(MetricsError::FunctionEdge),
        other => Err(MetricsError::InvalidWeight(other)),
    }
}

/// Cohesion of every non-directive node, filled bottom-up. Function children
/// contribute with their size, directive children with size 1 and the
/// relevance of the connecting edge.
pub(crate) fn cohesion_table(g: &FdGraph, topo: &[usize]) -> Vec<Option<f64>> {
    let mut table = vec![None; g.len()];
    for &v in topo.iter().rev() {
        if g.is_leaf(v) {
            continue;
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for &(c, w) in g.children_ix(v) {
            if g.is_leaf(c) {
                num += Relevance::from_raw(w).expect("validated weight").value();
                den += 1.0;
            } else {
                let size = g.size_ix(c) as f64;
                num += size * table[c].expect("children are computed first");
                den += size;
            }
        }
        table[v] = Some(num / den);
    }
    table
}

pub fn node_cohesion(g: &FdGraph, node: &str) -> Result<f64, MetricsError> {
    let v = g.require(node)?;
    g.cohesion_ix(v)
        .ok_or_else(|| MetricsError::DirectiveCohesion(g.id(v).clone()))
}

/// P(d_j): uniform change probability of a directive among those of `q`.
pub fn change_probability(g: &FdGraph, directive: &str, q: &str) -> Result<f64, MetricsError> {
    let d = g.require(directive)?;
    let qv = g.require(q)?;
    if g.kind(d) != NodeKind::Directive {
        return Err(MetricsError::NotADirective(g.id(d).clone()));
    }
    if !g.directives_ix(qv).contains(d) {
        return Err(MetricsError::NotUnder {
            directive: g.id(d).clone(),
            node: g.id(qv).clone(),
        });
    }
    Ok(1.0 / g.size_ix(qv) as f64)
}

/// Cp(d_i, d_j) = P(d_j) / dist(d_i, d_j), with P taken relative to `q`.
pub fn directive_coupling(
    g: &FdGraph,
    d_i: &str,
    d_j: &str,
    q: &str,
) -> Result<f64, MetricsError> {
    let a = g.require(d_i)?;
    if g.kind(a) != NodeKind::Directive {
        return Err(MetricsError::NotADirective(g.id(a).clone()));
    }
    let p = change_probability(g, d_j, q)?;
    let b = g.require(d_j)?;
    if a == b {
        return Err(MetricsError::IdenticalDirectives(g.id(a).clone()));
    }
    Ok(p / f64::from(g.leaf_distance(a, b)))
}

/// Cp(p, q) over the full directive sets of two nodes. The sets must be
/// disjoint.
pub fn node_coupling(g: &FdGraph, p: &str, q: &str) -> Result<f64, MetricsError> {
    let pv = g.require(p)?;
    let qv = g.require(q)?;
    for v in [pv, qv] {
        if g.kind(v) == NodeKind::Directive {
            return Err(MetricsError::DirectiveCoupling(g.id(v).clone()));
        }
    }
    if pv == qv {
        return Err(MetricsError::IdenticalNodes(g.id(pv).clone()));
    }
    if !g.directives_ix(pv).is_disjoint(g.directives_ix(qv)) {
        return Err(MetricsError::Overlap(g.id(pv).clone(), g.id(qv).clone()));
    }
    let dp: Vec<usize> = g.directives_ix(pv).ones().collect();
    let dq: Vec<usize> = g.directives_ix(qv).ones().collect();
    Ok(set_coupling(g, &dp, &dq))
}

/// Coupling between two disjoint, sorted directive sets.
pub(crate) fn set_coupling(g: &FdGraph, dp: &[usize], dq: &[usize]) -> f64 {
    let prob = 1.0 / dq.len() as f64;
    let mut sum = 0.0;
    for &a in dp {
        for &b in dq {
            sum += prob / f64::from(g.leaf_distance(a, b));
        }
    }
    sum / (dp.len() as f64 * dq.len() as f64)
}

/// Mean of `matrix[order[i]][order[j]]` over i < j; 0 for a single node.
pub(crate) fn ordered_pair_mean(matrix: &[f64], k: usize, order: &[usize]) -> f64 {
    if k < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for i in 0..k {
        let row = order[i] * k;
        for &b in &order[i + 1..] {
            sum += matrix[row + b];
        }
    }
    sum / (k * (k - 1) / 2) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceMetrics {
    #[serde(serialize_with = "crate::report::sig6")]
    pub cohesion: f64,
    #[serde(serialize_with = "crate::report::sig6")]
    pub coupling: f64,
    #[serde(serialize_with = "crate::report::sig6")]
    pub avg_size: f64,
    #[serde(serialize_with = "crate::report::sig6")]
    pub avg_depth: f64,
    #[serde(serialize_with = "crate::report::sig6_map")]
    pub node_cohesion: BTreeMap<NodeId, f64>,
}

/// Order-independent part of a slice's statistics: cohesion, mean assigned
/// size and mean depth of its members.
pub(crate) fn set_statistics(g: &FdGraph, members: &[usize], assigned: &[Vec<usize>]) -> (f64, f64, f64) {
    let k = members.len() as f64;
    let cohesion = members
        .iter()
        .map(|&m| g.cohesion_ix(m).expect("slice members are functions"))
        .sum::<f64>()
        / k;
    let avg_size = assigned.iter().map(|a| a.len() as f64).sum::<f64>() / k;
    let avg_depth = members.iter().map(|&m| f64::from(g.depth_ix(m))).sum::<f64>() / k;
    (cohesion, avg_size, avg_depth)
}

/// Pairwise coupling matrix over the assigned directive sets of a basic set;
/// entry (i, j) is Cp(member i, member j).
pub(crate) fn coupling_matrix(g: &FdGraph, assigned: &[Vec<usize>]) -> Vec<f64> {
    let k = assigned.len();
    let mut m = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            if i != j {
                m[i * k + j] = set_coupling(g, &assigned[i], &assigned[j]);
            }
        }
    }
    m
}

pub fn slice_statistics(g: &FdGraph, slice: &Slice<'_>) -> SliceMetrics {
    let basic = slice.basic_set();
    let members = basic.member_ixs();
    let assigned = basic.assigned_ixs();
    let (cohesion, avg_size, avg_depth) = set_statistics(g, members, assigned);
    let matrix = coupling_matrix(g, assigned);
    let coupling = ordered_pair_mean(&matrix, members.len(), slice.positions());
    let node_cohesion = members
        .iter()
        .map(|&m| (g.id(m).clone(), g.cohesion_ix(m).expect("function")))
        .collect();
    SliceMetrics {
        cohesion,
        coupling,
        avg_size,
        avg_depth,
        node_cohesion,
    }
}

/// Pearson product-moment correlation.
pub fn pearson_correlation(points: &[(f64, f64)]) -> Result<f64, MetricsError> {
    if points.len() < 2 {
        return Err(MetricsError::TooFewPoints(points.len()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    // spread below 1e-12 (relative) is rounding noise from the mean
    let flat = |ss: f64, m: f64| ss <= n * (1e-12 * m.abs().max(1.0)).powi(2);
    if flat(sxx, mx) || flat(syy, my) {
        return Err(MetricsError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::graph::parse_fd_graph;
    use crate::slicer::{enumerate_basic_slice_sets, DEFAULT_MAX_BASIC_SETS};

    const EPS: f64 = 1e-9;

    fn toy6() -> FdGraph {
        parse_fd_graph(fixtures::TOY6).unwrap()
    }

    #[test]
    fn relevance_scale() {
        assert_eq!(relevance_from_raw(10).unwrap().value(), 1.0);
        assert_eq!(relevance_from_raw(7).unwrap().value(), 0.7);
        assert_eq!(relevance_from_raw(3).unwrap().value(), 0.3);
        assert_eq!(relevance_from_raw(1).unwrap().value(), 0.1);
        let err = relevance_from_raw(0).unwrap_err();
        assert!(err.to_string().contains("relevance undefined for function edges"));
        assert!(matches!(relevance_from_raw(5), Err(MetricsError::InvalidWeight(5))));
    }

    #[test]
    fn toy6_cohesion() {
        let g = toy6();
        assert!((node_cohesion(&g, "na").unwrap() - 0.85).abs() < EPS);
        assert!((node_cohesion(&g, "nb").unwrap() - 1.4 / 3.0).abs() < EPS);
        assert!((node_cohesion(&g, "r").unwrap() - 0.62).abs() < EPS);
        assert!(matches!(
            node_cohesion(&g, "d1"),
            Err(MetricsError::DirectiveCohesion(_))
        ));
    }

    #[test]
    fn all_catastrophic_is_one() {
        let g = parse_fd_graph(
            r#"{"nodes":[{"id":"r"},{"id":"a"},{"id":"d1"},{"id":"d2"}],
                "edges":[{"from":"r","to":"a","weight":0},
                         {"from":"a","to":"d1","weight":10},
                         {"from":"a","to":"d2","weight":10}]}"#,
        )
        .unwrap();
        assert_eq!(node_cohesion(&g, "a").unwrap(), 1.0);
        // refinement: the mission inherits its only child's cohesion
        assert_eq!(node_cohesion(&g, "r").unwrap(), 1.0);
    }

    #[test]
    fn toy6_directive_coupling() {
        let g = toy6();
        let v = directive_coupling(&g, "d1", "d3", "nb").unwrap();
        assert!((v - 1.0 / 12.0).abs() < EPS);
        let v = directive_coupling(&g, "d1", "d2", "na").unwrap();
        assert!((v - 0.25).abs() < EPS);
        assert!(matches!(
            directive_coupling(&g, "d1", "d3", "na"),
            Err(MetricsError::NotUnder { .. })
        ));
        assert!(matches!(
            directive_coupling(&g, "d1", "d1", "na"),
            Err(MetricsError::IdenticalDirectives(_))
        ));
    }

    #[test]
    fn maximal_directive_coupling() {
        // q has a single directive, siblings at distance 2
        let g = parse_fd_graph(
            r#"{"nodes":[{"id":"r"},{"id":"a"},{"id":"b"},{"id":"d1"},{"id":"d2"},{"id":"d3"}],
                "edges":[{"from":"r","to":"a","weight":0},{"from":"r","to":"b","weight":0},
                         {"from":"a","to":"d1","weight":1},{"from":"a","to":"d2","weight":3},
                         {"from":"b","to":"d2","weight":7},{"from":"b","to":"d3","weight":7}]}"#,
        )
        .unwrap();
        assert_eq!(directive_coupling(&g, "d1", "d2", "d2").unwrap(), 0.5);
    }

    #[test]
    fn toy6_node_coupling_is_asymmetric() {
        let g = toy6();
        assert!((node_coupling(&g, "na", "nb").unwrap() - 1.0 / 12.0).abs() < EPS);
        assert!((node_coupling(&g, "nb", "na").unwrap() - 0.125).abs() < EPS);
        assert!(matches!(
            node_coupling(&g, "r", "na"),
            Err(MetricsError::Overlap(..))
        ));
    }

    #[test]
    fn single_directive_nodes() {
        let g = parse_fd_graph(
            r#"{"nodes":[{"id":"r"},{"id":"a"},{"id":"b"},{"id":"d1"},{"id":"d2"}],
                "edges":[{"from":"r","to":"a","weight":0},{"from":"r","to":"b","weight":0},
                         {"from":"a","to":"d1","weight":1},{"from":"b","to":"d2","weight":3},
                         {"from":"a","to":"d2","weight":3}]}"#,
        )
        .unwrap();
        // d1-a-d2 has length 2; `b` only owns d2.
        let dp = vec![g.ix("d1").unwrap()];
        let dq = vec![g.ix("d2").unwrap()];
        assert_eq!(set_coupling(&g, &dp, &dq), 0.5);
        assert_eq!(set_coupling(&g, &dq, &dp), 0.5);
    }

    #[test]
    fn toy6_slice_statistics() {
        let g = toy6();
        let sets = enumerate_basic_slice_sets(&g, DEFAULT_MAX_BASIC_SETS).unwrap();
        let slices: Vec<_> = sets[0].permutations(None).collect();
        assert_eq!(slices.len(), 2);
        let ab = slice_statistics(&g, &slices[0]);
        let ba = slice_statistics(&g, &slices[1]);
        let cohesion = (0.85 + 1.4 / 3.0) / 2.0;
        assert!((ab.cohesion - cohesion).abs() < EPS);
        assert!((ab.cohesion - 0.658333).abs() < 1e-6);
        assert!((ab.coupling - 1.0 / 12.0).abs() < EPS);
        assert_eq!(ab.avg_size, 2.5);
        assert_eq!(ab.avg_depth, 1.0);
        assert_eq!(ab.cohesion, ba.cohesion);
        assert!((ba.coupling - 0.125).abs() < EPS);
    }

    #[test]
    fn single_node_slice_has_zero_coupling() {
        let g = parse_fd_graph(
            r#"{"nodes":[{"id":"r"},{"id":"n1"},{"id":"d1"},{"id":"d2"}],
                "edges":[{"from":"r","to":"n1","weight":0},
                         {"from":"n1","to":"d1","weight":3},{"from":"n1","to":"d2","weight":7}]}"#,
        )
        .unwrap();
        let sets = enumerate_basic_slice_sets(&g, DEFAULT_MAX_BASIC_SETS).unwrap();
        let slice = sets[0].permutations(None).next().unwrap();
        assert_eq!(slice_statistics(&g, &slice).coupling, 0.0);
    }

    #[test]
    fn pearson() {
        let r = pearson_correlation(&[(10.0, 1.0), (7.5, 1.5), (6.0, 2.0)]).unwrap();
        // numpy.corrcoef on the same points
        assert!((r - -0.989743318610787).abs() < 1e-12);
        let r = pearson_correlation(&[(1.0, 2.0), (2.0, 4.0), (3.0, 6.0)]).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        assert!(matches!(
            pearson_correlation(&[(1.0, 1.0)]),
            Err(MetricsError::TooFewPoints(1))
        ));
        assert!(matches!(
            pearson_correlation(&[(2.5, 1.0), (2.5, 1.0)]),
            Err(MetricsError::ZeroVariance)
        ));
    }
}
