//! Slice ranking and the composite selection algorithm.
//!
//! Selection seeds with the most cohesive basic set and then descends one
//! abstraction level at a time, replacing a member by its function children
//! while the candidate stays valid, keeps every directive linkage intact and
//! satisfies the cohesion and coupling guards.

use std::cmp::Ordering;

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{FdGraph, GraphError, NodeId};
use crate::metrics::{coupling_matrix, ordered_pair_mean, set_statistics, SliceMetrics, TOLERANCE};
use crate::par::Execution;
use crate::slicer::{
    enumerate_basic_slice_sets, ordered_slice_count, BasicSliceSet, Slice, SliceError,
    DEFAULT_MAX_BASIC_SETS,
};

/// Sets smaller than this are ordered by exhaustive search.
pub const EXHAUSTIVE_BELOW: usize = 9;
pub const DEFAULT_MAX_ORDERED_SLICES: u64 = 5_000_000;
pub const DEFAULT_MAX_EXPANSIONS: u64 = 50_000_000;

#[derive(Debug, Error)]
pub enum CompositeError {
    #[error("no basic slice set exists for this graph")]
    EmptyEnumeration,
    #[error("every basic slice set breaks a directive linkage")]
    NoUnbrokenSet,
    #[error("{count} ordered slices exceed the ranking cap of {cap}")]
    TooManySlices { count: u64, cap: u64 },
    #[error("ordering search gave up after {cap} expansions")]
    SearchExhausted { cap: u64 },
    #[error("`{0}` has no function children")]
    NoFunctionChildren(NodeId),
    #[error("`{0}` is not a member of the slice")]
    NotAMember(NodeId),
    #[error(transparent)]
    Slice(#[from] SliceError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatSummary {
    #[serde(serialize_with = "crate::report::sig6")]
    pub max: f64,
    #[serde(serialize_with = "crate::report::sig6")]
    pub min: f64,
    #[serde(serialize_with = "crate::report::sig6")]
    pub median: f64,
}

impl StatSummary {
    /// Median is the lower-middle element for even counts.
    fn from_values(mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        StatSummary {
            max: values[values.len() - 1],
            min: values[0],
            median: values[(values.len() - 1) / 2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSummary {
    pub slices: u64,
    pub cohesion: StatSummary,
    pub coupling: StatSummary,
    pub avg_size: StatSummary,
    pub avg_depth: StatSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedSlice {
    /// `S{set}.{permutation}`, both 1-based.
    pub slice_id: String,
    pub order: Vec<NodeId>,
    /// Index into the enumerated basic sets.
    pub basic_set: usize,
    /// 1-based position in the set's lexicographic permutation order.
    pub permutation: usize,
    pub broken_linkage: bool,
    #[serde(serialize_with = "crate::report::sig6")]
    pub cohesion: f64,
    #[serde(serialize_with = "crate::report::sig6")]
    pub coupling: f64,
    #[serde(serialize_with = "crate::report::sig6")]
    pub avg_size: f64,
    #[serde(serialize_with = "crate::report::sig6")]
    pub avg_depth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub summary: RankSummary,
    /// Descending cohesion, then ascending coupling, then order.
    pub table: Vec<RankedSlice>,
}

struct SetProfile {
    cohesion: f64,
    avg_size: f64,
    avg_depth: f64,
    matrix: Vec<f64>,
}

fn profile(g: &FdGraph, set: &BasicSliceSet) -> SetProfile {
    let (cohesion, avg_size, avg_depth) = set_statistics(g, set.member_ixs(), set.assigned_ixs());
    SetProfile {
        cohesion,
        avg_size,
        avg_depth,
        matrix: coupling_matrix(g, set.assigned_ixs()),
    }
}

/// Couplings of every permutation of a set, in lexicographic order.
fn permutation_couplings(matrix: &[f64], k: usize, exec: Execution) -> Vec<(Vec<usize>, f64)> {
    let firsts: Vec<usize> = (0..k).collect();
    exec.map_collect(&firsts, |&first| {
        (0..k)
            .filter(|&p| p != first)
            .permutations(k - 1)
            .map(|rest| {
                let mut order = Vec::with_capacity(k);
                order.push(first);
                order.extend(rest);
                let c = ordered_pair_mean(matrix, k, &order);
                (order, c)
            })
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Name of permutation `perm` (0-based) of basic set `set` (0-based).
pub fn slice_id(set: usize, perm: usize) -> String {
    format!("S{}.{}", set + 1, perm + 1)
}

/// Name of basic set `set` (0-based).
pub fn basic_set_id(set: usize) -> String {
    format!("S{}", set + 1)
}

fn check_slice_cap(basic_sets: &[BasicSliceSet], cap: u64) -> Result<u64, CompositeError> {
    let count = ordered_slice_count(basic_sets)?;
    if count > cap {
        return Err(CompositeError::TooManySlices { count, cap });
    }
    Ok(count)
}

/// Metrics for every ordered slice plus summary statistics.
pub fn rank_slices(
    g: &FdGraph,
    basic_sets: &[BasicSliceSet],
    exec: Execution,
) -> Result<Ranking, CompositeError> {
    rank_slices_capped(g, basic_sets, exec, DEFAULT_MAX_ORDERED_SLICES)
}

pub fn rank_slices_capped(
    g: &FdGraph,
    basic_sets: &[BasicSliceSet],
    exec: Execution,
    max_ordered_slices: u64,
) -> Result<Ranking, CompositeError> {
    if basic_sets.is_empty() {
        return Err(CompositeError::EmptyEnumeration);
    }
    let count = check_slice_cap(basic_sets, max_ordered_slices)?;
    let indexed: Vec<(usize, &BasicSliceSet)> = basic_sets.iter().enumerate().collect();
    let per_set = exec.map_collect(&indexed, |&(i, set)| {
        let p = profile(g, set);
        permutation_couplings(&p.matrix, set.len(), exec)
            .into_iter()
            .enumerate()
            .map(|(j, (order, coupling))| RankedSlice {
                slice_id: slice_id(i, j),
                order: order.iter().map(|&pos| set.nodes()[pos].clone()).collect(),
                basic_set: i,
                permutation: j + 1,
                broken_linkage: set.broken_linkage(),
                cohesion: p.cohesion,
                coupling,
                avg_size: p.avg_size,
                avg_depth: p.avg_depth,
            })
            .collect::<Vec<_>>()
    });
    let mut table: Vec<RankedSlice> = per_set.into_iter().flatten().collect();
    debug_assert_eq!(table.len() as u64, count);

    let column = |f: fn(&RankedSlice) -> f64| table.iter().map(f).collect::<Vec<_>>();
    let summary = RankSummary {
        slices: count,
        cohesion: StatSummary::from_values(column(|r| r.cohesion)),
        coupling: StatSummary::from_values(column(|r| r.coupling)),
        avg_size: StatSummary::from_values(column(|r| r.avg_size)),
        avg_depth: StatSummary::from_values(column(|r| r.avg_depth)),
    };
    table.sort_by(|a, b| {
        b.cohesion
            .total_cmp(&a.cohesion)
            .then(a.coupling.total_cmp(&b.coupling))
            .then_with(|| a.order.cmp(&b.order))
    });
    Ok(Ranking { summary, table })
}

/// Positions of the minimum-coupling permutation and its coupling. Ties
/// within [`TOLERANCE`] go to the lexicographically first permutation.
fn best_order(matrix: &[f64], k: usize, max_expansions: u64) -> Result<(Vec<usize>, f64), CompositeError> {
    if k < EXHAUSTIVE_BELOW {
        Ok(exhaustive_order(matrix, k))
    } else {
        branch_and_bound_order(matrix, k, max_expansions)
    }
}

fn exhaustive_order(matrix: &[f64], k: usize) -> (Vec<usize>, f64) {
    let mut best: Option<(Vec<usize>, f64)> = None;
    for order in (0..k).permutations(k) {
        let c = ordered_pair_mean(matrix, k, &order);
        if best.as_ref().is_none_or(|(_, b)| c < b - TOLERANCE) {
            best = Some((order, c));
        }
    }
    best.expect("at least one permutation")
}

struct Search<'m> {
    matrix: &'m [f64],
    k: usize,
    pairs: f64,
    /// min(M[a][b], M[b][a]) per unordered pair
    pair_min: Vec<f64>,
    expansions: u64,
    cap: u64,
    best: Option<(Vec<usize>, f64)>,
}

impl Search<'_> {
    fn bound(&self, inner: f64, placed: &[bool]) -> f64 {
        let mut total = inner;
        for u in 0..self.k {
            for w in 0..self.k {
                if u == w || placed[w] {
                    continue;
                }
                if placed[u] {
                    total += self.matrix[u * self.k + w];
                } else if u < w {
                    total += self.pair_min[u * self.k + w];
                }
            }
        }
        total / self.pairs
    }

    fn descend(&mut self, order: &mut Vec<usize>, placed: &mut [bool], inner: f64) -> Result<(), CompositeError> {
        if order.len() == self.k {
            let c = ordered_pair_mean(self.matrix, self.k, order);
            if self.best.as_ref().is_none_or(|(_, b)| c < b - TOLERANCE) {
                self.best = Some((order.clone(), c));
            }
            return Ok(());
        }
        self.expansions += 1;
        if self.expansions > self.cap {
            return Err(CompositeError::SearchExhausted { cap: self.cap });
        }
        if let Some((_, b)) = &self.best {
            // leaf values may sit a few ulps under the bound
            if self.bound(inner, placed) - 1e-12 >= b - TOLERANCE {
                return Ok(());
            }
        }
        for v in 0..self.k {
            if placed[v] {
                continue;
            }
            let added: f64 = order.iter().map(|&u| self.matrix[u * self.k + v]).sum();
            placed[v] = true;
            order.push(v);
            self.descend(order, placed, inner + added)?;
            order.pop();
            placed[v] = false;
        }
        Ok(())
    }
}

fn branch_and_bound_order(matrix: &[f64], k: usize, cap: u64) -> Result<(Vec<usize>, f64), CompositeError> {
    let mut pair_min = vec![0.0; k * k];
    for a in 0..k {
        for b in a + 1..k {
            pair_min[a * k + b] = matrix[a * k + b].min(matrix[b * k + a]);
        }
    }
    let mut search = Search {
        matrix,
        k,
        pairs: (k * (k - 1) / 2) as f64,
        pair_min,
        expansions: 0,
        cap,
        best: None,
    };
    search.descend(&mut Vec::with_capacity(k), &mut vec![false; k], 0.0)?;
    Ok(search.best.expect("search reaches a leaf"))
}

/// The minimum-coupling permutation of `basic_set`.
pub fn implementation_order<'a>(
    g: &FdGraph,
    basic_set: &'a BasicSliceSet,
) -> Result<Slice<'a>, CompositeError> {
    implementation_order_capped(g, basic_set, DEFAULT_MAX_EXPANSIONS)
}

pub fn implementation_order_capped<'a>(
    g: &FdGraph,
    basic_set: &'a BasicSliceSet,
    max_expansions: u64,
) -> Result<Slice<'a>, CompositeError> {
    let matrix = coupling_matrix(g, basic_set.assigned_ixs());
    let (positions, _) = best_order(&matrix, basic_set.len(), max_expansions)?;
    Ok(Slice::from_positions(basic_set, positions))
}

#[doc(hidden)]
pub fn order_by_branch_and_bound<'a>(
    g: &FdGraph,
    basic_set: &'a BasicSliceSet,
) -> Result<Slice<'a>, CompositeError> {
    let matrix = coupling_matrix(g, basic_set.assigned_ixs());
    let (positions, _) = branch_and_bound_order(&matrix, basic_set.len(), DEFAULT_MAX_EXPANSIONS)?;
    Ok(Slice::from_positions(basic_set, positions))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    BrokenLinkage,
    CouplingGuard,
    CohesionGuard,
    InvalidSlice,
}

impl RejectReason {
    pub fn code(self) -> &'static str {
        match self {
            RejectReason::BrokenLinkage => "broken_linkage",
            RejectReason::CouplingGuard => "coupling_guard",
            RejectReason::CohesionGuard => "cohesion_guard",
            RejectReason::InvalidSlice => "invalid_slice",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Refinement {
    Accepted(BasicSliceSet),
    Rejected {
        candidate: Vec<NodeId>,
        reason: RejectReason,
        detail: String,
    },
}

/// Replace `node` by its function children. The candidate is accepted when
/// it is a valid slice without broken linkage.
pub fn refine_slice(
    g: &FdGraph,
    current: &BasicSliceSet,
    node: &str,
) -> Result<Refinement, CompositeError> {
    let v = g.require(node)?;
    if !current.member_ixs().contains(&v) {
        return Err(CompositeError::NotAMember(g.id(v).clone()));
    }
    let children: Vec<usize> = g.function_children(v).collect();
    if children.is_empty() {
        return Err(CompositeError::NoFunctionChildren(g.id(v).clone()));
    }
    let mut members: Vec<usize> = current
        .member_ixs()
        .iter()
        .copied()
        .filter(|&m| m != v)
        .chain(children)
        .collect();
    members.sort_unstable();
    members.dedup();
    let candidate: Vec<NodeId> = members.iter().map(|&m| g.id(m).clone()).collect();
    Ok(match BasicSliceSet::from_ixs(g, members) {
        Err(e) => Refinement::Rejected {
            candidate,
            reason: RejectReason::InvalidSlice,
            detail: e.to_string(),
        },
        Ok(set) if set.broken_linkage() => Refinement::Rejected {
            detail: format!(
                "shared directives: {}",
                set.shared_directives().iter().join(", ")
            ),
            candidate,
            reason: RejectReason::BrokenLinkage,
        },
        Ok(set) => Refinement::Accepted(set),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GuardMode {
    #[default]
    Median,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Guards {
    pub cohesion: GuardMode,
    pub coupling: GuardMode,
}

#[derive(Debug, Clone, Copy)]
pub struct SelectOptions {
    pub max_basic_sets: usize,
    pub max_ordered_slices: u64,
    pub max_expansions: u64,
    pub exec: Execution,
}

impl Default for SelectOptions {
    fn default() -> Self {
        SelectOptions {
            max_basic_sets: DEFAULT_MAX_BASIC_SETS,
            max_ordered_slices: DEFAULT_MAX_ORDERED_SLICES,
            max_expansions: DEFAULT_MAX_EXPANSIONS,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateMetrics {
    #[serde(serialize_with = "crate::report::sig6")]
    pub cohesion: f64,
    /// Coupling of the candidate's implementation order.
    #[serde(serialize_with = "crate::report::sig6")]
    pub coupling: f64,
    #[serde(serialize_with = "crate::report::sig6")]
    pub avg_size: f64,
    #[serde(serialize_with = "crate::report::sig6")]
    pub avg_depth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub replaced: NodeId,
    pub children: Vec<NodeId>,
    pub candidate: Vec<NodeId>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reason: Option<RejectReason>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub detail: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub metrics: Option<CandidateMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    /// Round 0 holds the seed.
    pub round: usize,
    pub from: Vec<NodeId>,
    pub metrics: CandidateMetrics,
    #[serde(serialize_with = "crate::report::sig6_opt")]
    pub cohesion_threshold: Option<f64>,
    #[serde(serialize_with = "crate::report::sig6_opt")]
    pub coupling_threshold: Option<f64>,
    pub candidates: Vec<Candidate>,
    pub chosen: Option<Vec<NodeId>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub round: usize,
    pub replaced: NodeId,
    pub candidate: Vec<NodeId>,
    pub reason: RejectReason,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapabilityReport {
    pub selected: Vec<NodeId>,
    pub order: Vec<NodeId>,
    pub metrics: SliceMetrics,
    pub trace: Vec<TraceStep>,
    pub rejected: Vec<Rejection>,
}

fn candidate_metrics(g: &FdGraph, set: &BasicSliceSet, max_expansions: u64) -> Result<CandidateMetrics, CompositeError> {
    let p = profile(g, set);
    let (_, coupling) = best_order(&p.matrix, set.len(), max_expansions)?;
    Ok(CandidateMetrics {
        cohesion: p.cohesion,
        coupling,
        avg_size: p.avg_size,
        avg_depth: p.avg_depth,
    })
}

fn approx_cmp(a: f64, b: f64) -> Ordering {
    if (a - b).abs() <= TOLERANCE {
        Ordering::Equal
    } else {
        a.total_cmp(&b)
    }
}

/// Run the composite algorithm on the graph's basic slice sets.
pub fn select_capability_set(
    g: &FdGraph,
    guards: Guards,
    opts: SelectOptions,
) -> Result<CapabilityReport, CompositeError> {
    let sets = enumerate_basic_slice_sets(g, opts.max_basic_sets)?;
    select_from(g, &sets, guards, opts)
}

pub fn select_from(
    g: &FdGraph,
    sets: &[BasicSliceSet],
    guards: Guards,
    opts: SelectOptions,
) -> Result<CapabilityReport, CompositeError> {
    if sets.is_empty() {
        return Err(CompositeError::EmptyEnumeration);
    }
    let (cohesion_threshold, coupling_threshold) =
        if guards.cohesion == GuardMode::Median || guards.coupling == GuardMode::Median {
            let summary = rank_slices_capped(g, sets, opts.exec, opts.max_ordered_slices)?.summary;
            (
                (guards.cohesion == GuardMode::Median).then_some(summary.cohesion.median),
                (guards.coupling == GuardMode::Median).then_some(summary.coupling.median),
            )
        } else {
            (None, None)
        };

    let unbroken: Vec<&BasicSliceSet> = sets.iter().filter(|s| !s.broken_linkage()).collect();
    let scored = opts
        .exec
        .map_collect(&unbroken, |s| candidate_metrics(g, s, opts.max_expansions))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let (seed, seed_metrics) = unbroken
        .iter()
        .zip(scored)
        .min_by(|(a, ma), (b, mb)| {
            approx_cmp(mb.cohesion, ma.cohesion)
                .then(approx_cmp(ma.coupling, mb.coupling))
                .then_with(|| a.nodes().cmp(b.nodes()))
        })
        .ok_or(CompositeError::NoUnbrokenSet)?;

    let mut current: BasicSliceSet = (*seed).clone();
    let mut current_metrics = seed_metrics;
    let mut trace = Vec::new();
    let mut rejected = Vec::new();

    for round in 0.. {
        let refinable: Vec<usize> = current
            .member_ixs()
            .iter()
            .copied()
            .filter(|&m| g.function_children(m).next().is_some())
            .collect();
        let evaluated = opts
            .exec
            .map_collect(&refinable, |&m| evaluate(g, &current, m, cohesion_threshold, coupling_threshold, opts))
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;

        let mut chosen: Option<(usize, &BasicSliceSet, &CandidateMetrics)> = None;
        for (i, (cand, set)) in evaluated.iter().enumerate() {
            if let (true, Some(set), Some(m)) = (cand.passed, set, &cand.metrics) {
                let better = chosen.is_none_or(|(_, bs, bm)| {
                    approx_cmp(m.avg_size, bm.avg_size)
                        .then_with(|| set.nodes().cmp(bs.nodes()))
                        .is_lt()
                });
                if better {
                    chosen = Some((i, set, m));
                }
            }
        }
        for (cand, _) in &evaluated {
            if let Some(reason) = cand.reason {
                rejected.push(Rejection {
                    round,
                    replaced: cand.replaced.clone(),
                    candidate: cand.candidate.clone(),
                    reason,
                    detail: cand.detail.clone().unwrap_or_default(),
                });
            }
        }
        let next = chosen.map(|(_, set, m)| (set.clone(), m.clone()));
        trace.push(TraceStep {
            round,
            from: current.nodes().to_vec(),
            metrics: current_metrics.clone(),
            cohesion_threshold,
            coupling_threshold,
            candidates: evaluated.into_iter().map(|(c, _)| c).collect(),
            chosen: next.as_ref().map(|(s, _)| s.nodes().to_vec()),
        });
        match next {
            Some((set, m)) => {
                current = set;
                current_metrics = m;
            }
            None => break,
        }
    }

    let order = implementation_order_capped(g, &current, opts.max_expansions)?;
    let metrics = crate::metrics::slice_statistics(g, &order);
    Ok(CapabilityReport {
        selected: current.nodes().to_vec(),
        order: order.order().into_iter().cloned().collect(),
        metrics,
        trace,
        rejected,
    })
}

fn evaluate(
    g: &FdGraph,
    current: &BasicSliceSet,
    member: usize,
    cohesion_threshold: Option<f64>,
    coupling_threshold: Option<f64>,
    opts: SelectOptions,
) -> Result<(Candidate, Option<BasicSliceSet>), CompositeError> {
    let replaced = g.id(member).clone();
    let children = g.function_children(member).map(|c| g.id(c).clone()).collect();
    let outcome = refine_slice(g, current, replaced.as_str())?;
    let reject = |candidate, reason, detail, metrics| Candidate {
        replaced: replaced.clone(),
        children: Vec::clone(&children),
        candidate,
        passed: false,
        reason: Some(reason),
        detail: Some(detail),
        metrics,
    };
    let set = match outcome {
        Refinement::Rejected {
            candidate,
            reason,
            detail,
        } => return Ok((reject(candidate, reason, detail, None), None)),
        Refinement::Accepted(set) => set,
    };
    let m = candidate_metrics(g, &set, opts.max_expansions)?;
    let candidate = set.nodes().to_vec();
    if let Some(t) = coupling_threshold.filter(|&t| m.coupling > t + TOLERANCE) {
        let detail = format!("coupling {} above median {}", crate::report::fmt6(m.coupling), crate::report::fmt6(t));
        return Ok((reject(candidate, RejectReason::CouplingGuard, detail, Some(m)), None));
    }
    if let Some(t) = cohesion_threshold.filter(|&t| m.cohesion < t - TOLERANCE) {
        let detail = format!("cohesion {} below median {}", crate::report::fmt6(m.cohesion), crate::report::fmt6(t));
        return Ok((reject(candidate, RejectReason::CohesionGuard, detail, Some(m)), None));
    }
    Ok((
        Candidate {
            replaced,
            children,
            candidate,
            passed: true,
            reason: None,
            detail: None,
            metrics: Some(m),
        },
        Some(set),
    ))
}
