//! Slice enumeration.
//!
//! A basic slice set is an antichain of function nodes that covers every
//! directive, after shared directives have been bound to exactly one member
//! each, with no member left empty. Ordered slices are the permutations of a
//! basic set.
//!
//! Enumeration descends from the mission: a frontier node is replaced by its
//! function children as long as the frontier still reaches every directive.
//! Every valid antichain is reachable this way, so the state search is
//! complete without scanning all subsets of functions.

use std::collections::{BTreeMap, HashSet};

use fixedbitset::FixedBitSet;
use itertools::Itertools;
use thiserror::Error;

use crate::graph::{FdGraph, GraphError, NodeId, NodeKind};

pub const DEFAULT_MAX_BASIC_SETS: usize = 100_000;

#[derive(Debug, Error)]
pub enum SliceError {
    #[error("enumeration exceeded the cap of {cap} basic slice sets (raise --max-basic-sets)")]
    CapExceeded { cap: usize },
    #[error("directive `{0}` is not reachable from any member")]
    Uncovered(NodeId),
    #[error("ordered slice count exceeds 2^63-1")]
    CountOverflow,
    #[error("`{0}` is not a function node")]
    NotAFunction(NodeId),
    #[error("`{0}` is listed more than once")]
    Repeated(NodeId),
    #[error("members `{0}` and `{1}` are nested (ancestor and descendant)")]
    Nested(NodeId, NodeId),
    #[error("member `{0}` keeps no directive after shared directives are bound")]
    EmptyMember(NodeId),
    #[error("a slice needs at least one member")]
    Empty,
    #[error("order is not a permutation of the basic set")]
    NotAPermutation,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Binding of every directive to exactly one member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resolution {
    /// directive → owning member
    pub assignment: BTreeMap<NodeId, NodeId>,
    pub broken_linkage: bool,
    /// Directives that were reachable from two or more members.
    pub shared: Vec<NodeId>,
}

struct IxResolution {
    owner_of_leaf: Vec<(usize, usize)>,
    shared: Vec<usize>,
}

/// Strength of `member`'s association with `leaf`: the highest raw weight on
/// an edge into `leaf` from `member` or one of its descendants.
fn strength(g: &FdGraph, member: usize, leaf: usize) -> u8 {
    g.parents_ix(leaf)
        .iter()
        .filter(|&&(p, _)| p == member || g.descendants_ix(member).contains(p))
        .map(|&(_, w)| w)
        .max()
        .unwrap_or(0)
}

/// `members` must be sorted. Returns the uncovered leaf on failure.
fn resolve_ix(g: &FdGraph, members: &[usize]) -> Result<IxResolution, usize> {
    let mut owner_of_leaf = Vec::with_capacity(g.leaf_count());
    let mut shared = Vec::new();
    for &leaf in g.leaf_ixs() {
        let mut reaching = members
            .iter()
            .copied()
            .filter(|&m| g.directives_ix(m).contains(leaf));
        let first = reaching.next().ok_or(leaf)?;
        let mut best = (strength(g, first, leaf), first);
        let mut count = 1;
        for m in reaching {
            count += 1;
            let s = strength(g, m, leaf);
            // members ascend, so `>` keeps the smaller id on ties
            if s > best.0 {
                best = (s, m);
            }
        }
        if count > 1 {
            shared.push(leaf);
        }
        owner_of_leaf.push((leaf, best.1));
    }
    Ok(IxResolution {
        owner_of_leaf,
        shared,
    })
}

pub fn resolve_shared_directives<S: AsRef<str>>(
    g: &FdGraph,
    nodes: &[S],
) -> Result<Resolution, SliceError> {
    let mut members = nodes
        .iter()
        .map(|n| g.require(n.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    members.sort_unstable();
    members.dedup();
    let res = resolve_ix(g, &members).map_err(|leaf| SliceError::Uncovered(g.id(leaf).clone()))?;
    Ok(Resolution {
        assignment: res
            .owner_of_leaf
            .iter()
            .map(|&(l, m)| (g.id(l).clone(), g.id(m).clone()))
            .collect(),
        broken_linkage: !res.shared.is_empty(),
        shared: res.shared.iter().map(|&l| g.id(l).clone()).collect(),
    })
}

/// An unordered valid slice together with its directive assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasicSliceSet {
    nodes: Vec<NodeId>,
    members: Vec<usize>,
    /// Assigned directive indices per member, ascending.
    assigned: Vec<Vec<usize>>,
    assignment: BTreeMap<NodeId, NodeId>,
    broken_linkage: bool,
    shared: Vec<NodeId>,
    permutation_count: u128,
}

fn factorial(k: usize) -> u128 {
    (1..=k as u128).try_fold(1u128, |acc, x| acc.checked_mul(x)).unwrap_or(u128::MAX)
}

impl BasicSliceSet {
    /// Check a candidate member set against the slice constraints.
    pub fn from_nodes<S: AsRef<str>>(g: &FdGraph, nodes: &[S]) -> Result<Self, SliceError> {
        let mut members = Vec::with_capacity(nodes.len());
        for n in nodes {
            let ix = g.require(n.as_ref())?;
            if members.contains(&ix) {
                return Err(SliceError::Repeated(g.id(ix).clone()));
            }
            members.push(ix);
        }
        members.sort_unstable();
        Self::from_ixs(g, members)
    }

    pub(crate) fn from_ixs(g: &FdGraph, members: Vec<usize>) -> Result<Self, SliceError> {
        if members.is_empty() {
            return Err(SliceError::Empty);
        }
        for &m in &members {
            if g.kind(m) != NodeKind::Function {
                return Err(SliceError::NotAFunction(g.id(m).clone()));
            }
        }
        for &a in &members {
            if let Some(&b) = members.iter().find(|&&b| g.descendants_ix(a).contains(b)) {
                return Err(SliceError::Nested(g.id(a).clone(), g.id(b).clone()));
            }
        }
        let res = resolve_ix(g, &members).map_err(|l| SliceError::Uncovered(g.id(l).clone()))?;
        let mut assigned = vec![Vec::new(); members.len()];
        for &(leaf, owner) in &res.owner_of_leaf {
            let pos = members.binary_search(&owner).expect("owner is a member");
            assigned[pos].push(leaf);
        }
        if let Some(pos) = assigned.iter().position(Vec::is_empty) {
            return Err(SliceError::EmptyMember(g.id(members[pos]).clone()));
        }
        Ok(BasicSliceSet {
            nodes: members.iter().map(|&m| g.id(m).clone()).collect(),
            assignment: res
                .owner_of_leaf
                .iter()
                .map(|&(l, m)| (g.id(l).clone(), g.id(m).clone()))
                .collect(),
            broken_linkage: !res.shared.is_empty(),
            shared: res.shared.iter().map(|&l| g.id(l).clone()).collect(),
            permutation_count: factorial(members.len()),
            members,
            assigned,
        })
    }

    /// Members in id order.
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.nodes.binary_search_by(|n| n.as_str().cmp(id)).is_ok()
    }

    /// directive → owning member
    pub fn assignment(&self) -> &BTreeMap<NodeId, NodeId> {
        &self.assignment
    }

    /// Directives bound to the member at `position` (in id order).
    pub fn assigned_to(&self, position: usize) -> impl Iterator<Item = &NodeId> + '_ {
        let owner = &self.nodes[position];
        self.assignment
            .iter()
            .filter(move |(_, o)| *o == owner)
            .map(|(d, _)| d)
    }

    pub fn broken_linkage(&self) -> bool {
        self.broken_linkage
    }

    pub fn shared_directives(&self) -> &[NodeId] {
        &self.shared
    }

    /// |nodes|!, saturating at `u128::MAX`.
    pub fn permutation_count(&self) -> u128 {
        self.permutation_count
    }

    /// Ordered slices of this set in lexicographic order of node ids.
    pub fn permutations(&self, limit: Option<usize>) -> Permutations<'_> {
        enumerate_permutations(self, limit)
    }

    pub(crate) fn member_ixs(&self) -> &[usize] {
        &self.members
    }

    pub(crate) fn assigned_ixs(&self) -> &[Vec<usize>] {
        &self.assigned
    }
}

/// One ordered slice: a permutation of a basic set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slice<'a> {
    basic: &'a BasicSliceSet,
    /// Positions into `basic.nodes()`.
    positions: Vec<usize>,
}

impl<'a> Slice<'a> {
    pub fn new<S: AsRef<str>>(basic: &'a BasicSliceSet, order: &[S]) -> Result<Self, SliceError> {
        let mut positions = Vec::with_capacity(order.len());
        for id in order {
            let pos = basic
                .nodes
                .binary_search_by(|n| n.as_str().cmp(id.as_ref()))
                .map_err(|_| SliceError::NotAPermutation)?;
            if positions.contains(&pos) {
                return Err(SliceError::NotAPermutation);
            }
            positions.push(pos);
        }
        if positions.len() != basic.len() {
            return Err(SliceError::NotAPermutation);
        }
        Ok(Slice { basic, positions })
    }

    pub(crate) fn from_positions(basic: &'a BasicSliceSet, positions: Vec<usize>) -> Self {
        debug_assert_eq!(positions.len(), basic.len());
        Slice { basic, positions }
    }

    pub fn basic_set(&self) -> &'a BasicSliceSet {
        self.basic
    }

    pub fn order(&self) -> Vec<&'a NodeId> {
        self.positions.iter().map(|&p| &self.basic.nodes[p]).collect()
    }

    pub(crate) fn positions(&self) -> &[usize] {
        &self.positions
    }
}

/// Lexicographic permutation stream with an optional limit.
pub struct Permutations<'a> {
    basic: &'a BasicSliceSet,
    inner: itertools::Permutations<std::ops::Range<usize>>,
    limit: Option<usize>,
    emitted: usize,
    truncated: bool,
}

impl Permutations<'_> {
    /// True once the limit stopped the stream before it was exhausted.
    pub fn truncated(&self) -> bool {
        self.truncated
    }
}

impl<'a> Iterator for Permutations<'a> {
    type Item = Slice<'a>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.limit.is_some_and(|l| self.emitted >= l) {
            if !self.truncated && self.inner.next().is_some() {
                self.truncated = true;
            }
            return None;
        }
        let positions = self.inner.next()?;
        self.emitted += 1;
        Some(Slice::from_positions(self.basic, positions))
    }
}

pub fn enumerate_permutations(basic: &BasicSliceSet, limit: Option<usize>) -> Permutations<'_> {
    let k = basic.len();
    Permutations {
        basic,
        inner: (0..k).permutations(k),
        limit,
        emitted: 0,
        truncated: false,
    }
}

/// Σ |nodes|! without materializing any permutation.
pub fn ordered_slice_count(basic_sets: &[BasicSliceSet]) -> Result<u64, SliceError> {
    let total = basic_sets
        .iter()
        .try_fold(0u128, |acc, b| acc.checked_add(b.permutation_count))
        .ok_or(SliceError::CountOverflow)?;
    if total > i64::MAX as u128 {
        return Err(SliceError::CountOverflow);
    }
    Ok(total as u64)
}

/// All basic slice sets, sorted by size and then by member ids.
pub fn enumerate_basic_slice_sets(
    g: &FdGraph,
    max_basic_sets: usize,
) -> Result<Vec<BasicSliceSet>, SliceError> {
    let n = g.len();
    let leaf_total = g.leaf_count();
    let covers = |frontier: &FixedBitSet| {
        let mut reach = FixedBitSet::with_capacity(n);
        for v in frontier.ones() {
            reach.union_with(g.directives_ix(v));
        }
        reach.count_ones(..) == leaf_total
    };

    let mut start = FixedBitSet::with_capacity(n);
    start.insert(g.root_ix());
    let mut visited: HashSet<FixedBitSet> = HashSet::new();
    visited.insert(start.clone());
    let mut stack = vec![start];
    let mut found = Vec::new();

    while let Some(frontier) = stack.pop() {
        if !frontier.contains(g.root_ix()) && is_antichain(g, &frontier) {
            if let Ok(set) = BasicSliceSet::from_ixs(g, frontier.ones().collect()) {
                if found.len() == max_basic_sets {
                    return Err(SliceError::CapExceeded {
                        cap: max_basic_sets,
                    });
                }
                found.push(set);
            }
        }
        for v in frontier.ones() {
            let mut next = frontier.clone();
            next.set(v, false);
            for c in g.function_children(v) {
                next.insert(c);
            }
            if next.is_clear() || !covers(&next) || visited.contains(&next) {
                continue;
            }
            visited.insert(next.clone());
            stack.push(next);
        }
    }

    found.sort_by(|a, b| (a.len(), &a.members).cmp(&(b.len(), &b.members)));
    Ok(found)
}

fn is_antichain(g: &FdGraph, set: &FixedBitSet) -> bool {
    set.ones().all(|v| g.descendants_ix(v).is_disjoint(set))
}

/// Function nodes that appear in no basic set, in id order.
pub fn orphan_nodes(g: &FdGraph, basic_sets: &[BasicSliceSet]) -> Vec<NodeId> {
    let mut used = FixedBitSet::with_capacity(g.len());
    for set in basic_sets {
        for &m in &set.members {
            used.insert(m);
        }
    }
    (0..g.len())
        .filter(|&v| g.kind(v) == NodeKind::Function && !used.contains(v))
        .map(|v| g.id(v).clone())
        .collect()
}
