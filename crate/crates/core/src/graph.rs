//! Function decomposition graphs.
//!
//! An FD graph is an acyclic directed graph rooted at the system mission.
//! Leaves are directives, everything in between is a system function. Node
//! and edge kinds are never declared in the input; they are derived from
//! degrees when the graph is built.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use fixedbitset::FixedBitSet;
use petgraph::graphmap::DiGraphMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Raw weights accepted on directive edges.
pub const DIRECTIVE_WEIGHTS: [u8; 4] = [1, 3, 7, 10];

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("unknown endpoint `{endpoint}` on edge {from} -> {to}")]
    UnknownEndpoint {
        endpoint: String,
        from: String,
        to: String,
    },
    #[error("invalid weight {weight} on edge {from} -> {to}")]
    InvalidWeight { from: String, to: String, weight: i64 },
    #[error("graph validation failed: {0}")]
    Invalid(ValidationReport),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("unknown edge {0} -> {1}")]
    UnknownEdge(String, String),
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid node id `{0}`: expected a non-empty token of letters, digits, `_` or `-`")]
pub struct InvalidNodeId(pub String);

/// Identifier of a node. Ordering is lexicographic by code point.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Result<Self, InvalidNodeId> {
        let id = id.into();
        if is_valid_token(&id) {
            Ok(NodeId(id))
        } else {
            Err(InvalidNodeId(id))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for NodeId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl PartialEq<str> for NodeId {
    fn eq(&self, other: &str) -> bool {
        self.0 == other
    }
}

impl PartialEq<&str> for NodeId {
    fn eq(&self, other: &&str) -> bool {
        self.0 == *other
    }
}

fn is_valid_token(s: &str) -> bool {
    !s.is_empty()
        && s
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

impl TryFrom<String> for NodeId {
    type Error = InvalidNodeId;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        NodeId::new(value)
    }
}

impl From<NodeId> for String {
    fn from(id: NodeId) -> Self {
        id.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::borrow::Borrow<str> for NodeId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Mission,
    Function,
    Directive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    Decomposition,
    Refinement,
    Intersection,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FdNode {
    pub id: NodeId,
    pub label: String,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FdEdge {
    pub parent: NodeId,
    pub child: NodeId,
    pub raw_weight: u8,
    pub kind: EdgeKind,
}

// ---------------------------------------------------------------------------
// Document format
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub from: String,
    pub to: String,
    pub weight: i64,
}

/// On-disk JSON form of an FD graph. `notes` is free text that analysis
/// ignores; fixtures use it to document how they were built.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDocument {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub nodes: Vec<NodeSpec>,
    pub edges: Vec<EdgeSpec>,
}

impl GraphDocument {
    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        serde_json::from_str(text).map_err(|e| GraphError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph documents always serialize")
    }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Locus {
    Graph,
    Node { id: String },
    Edge { from: String, to: String },
}

impl Locus {
    /// Sort key; graph-level diagnostics come first.
    pub fn key(&self) -> String {
        match self {
            Locus::Graph => String::new(),
            Locus::Node { id } => id.clone(),
            Locus::Edge { from, to } => format!("{from}->{to}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub locus: Locus,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        match &self.locus {
            Locus::Graph => write!(f, "{sev}: {}", self.message),
            locus => write!(f, "{sev} [{}]: {}", locus.key(), self.message),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub diagnostics: Vec<Diagnostic>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.diagnostics.is_empty()
    }

    pub fn has_errors(&self) -> bool {
        self.diagnostics
            .iter()
            .any(|d| d.severity == Severity::Error)
    }

    fn push(&mut self, severity: Severity, locus: Locus, message: impl Into<String>) {
        self.diagnostics.push(Diagnostic {
            severity,
            locus,
            message: message.into(),
        });
    }

    fn finish(mut self) -> Self {
        self.diagnostics.sort_by(|a, b| {
            (a.severity, a.locus.key(), &a.message).cmp(&(b.severity, b.locus.key(), &b.message))
        });
        self.diagnostics.dedup();
        self
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.diagnostics.iter().map(|d| d.to_string()).collect();
        f.write_str(&parts.join("; "))
    }
}

/// Check every well-formedness rule of an FD graph document. All findings are
/// reported; an empty report means [`FdGraph::from_document`] will succeed.
pub fn validate_document(doc: &GraphDocument) -> ValidationReport {
    let mut report = ValidationReport::default();

    if doc.nodes.is_empty() {
        report.push(Severity::Error, Locus::Graph, "empty graph");
        return report.finish();
    }

    let mut known: BTreeSet<&str> = BTreeSet::new();
    for node in &doc.nodes {
        if !is_valid_token(&node.id) {
            report.push(
                Severity::Error,
                Locus::Node {
                    id: node.id.clone(),
                },
                "invalid node id",
            );
        }
        if !known.insert(node.id.as_str()) {
            report.push(
                Severity::Error,
                Locus::Node {
                    id: node.id.clone(),
                },
                "duplicate node id",
            );
        }
    }

    // Keep only edges whose endpoints exist; the rest are reported.
    let mut structure: DiGraphMap<&str, i64> = DiGraphMap::new();
    for id in &known {
        structure.add_node(id);
    }
    for edge in &doc.edges {
        let locus = Locus::Edge {
            from: edge.from.clone(),
            to: edge.to.clone(),
        };
        let mut ok = true;
        for endpoint in [&edge.from, &edge.to] {
            if !known.contains(endpoint.as_str()) {
                report.push(
                    Severity::Error,
                    locus.clone(),
                    format!("unknown endpoint `{endpoint}`"),
                );
                ok = false;
            }
        }
        if !ok {
            continue;
        }
        if edge.from == edge.to {
            report.push(Severity::Error, locus, "cycle detected (self loop)");
            continue;
        }
        if structure.contains_edge(&edge.from, &edge.to) {
            report.push(Severity::Error, locus, "parallel edge");
            continue;
        }
        structure.add_edge(&edge.from, &edge.to, edge.weight);
    }

    if let Err(cycle) = petgraph::algo::toposort(&structure, None) {
        report.push(
            Severity::Error,
            Locus::Node {
                id: cycle.node_id().to_string(),
            },
            "cycle detected",
        );
    }

    let roots: Vec<&str> = structure
        .nodes()
        .filter(|n| {
            structure
                .neighbors_directed(n, petgraph::Direction::Incoming)
                .next()
                .is_none()
        })
        .collect();
    match roots.len() {
        0 => report.push(Severity::Error, Locus::Graph, "no root (no node with indegree 0)"),
        1 => {
            let root = roots[0];
            if structure.neighbors(root).next().is_none() {
                report.push(
                    Severity::Error,
                    Locus::Node {
                        id: root.to_string(),
                    },
                    "mission has no children",
                );
            }
            let mut bfs = petgraph::visit::Bfs::new(&structure, root);
            let mut seen = BTreeSet::new();
            while let Some(n) = bfs.next(&structure) {
                seen.insert(n);
            }
            for n in structure.nodes() {
                if !seen.contains(n) {
                    report.push(
                        Severity::Error,
                        Locus::Node { id: n.to_string() },
                        "unreachable from mission",
                    );
                }
            }
        }
        _ => {
            let mut sorted = roots.clone();
            sorted.sort_unstable();
            report.push(
                Severity::Error,
                Locus::Graph,
                format!("multiple roots: {}", sorted.join(", ")),
            );
        }
    }

    for (from, to, &weight) in structure.all_edges() {
        let locus = Locus::Edge {
            from: from.to_string(),
            to: to.to_string(),
        };
        let child_is_leaf = structure.neighbors(to).next().is_none();
        if weight != 0 && !DIRECTIVE_WEIGHTS.iter().any(|&w| i64::from(w) == weight) {
            report.push(
                Severity::Error,
                locus,
                format!("invalid weight {weight} (expected 0, 1, 3, 7 or 10)"),
            );
        } else if child_is_leaf && weight == 0 {
            report.push(Severity::Error, locus, "zero weight on directive edge");
        } else if !child_is_leaf && weight != 0 {
            report.push(Severity::Error, locus, "nonzero weight on function edge");
        }
    }

    report.finish()
}

// ---------------------------------------------------------------------------
// The validated graph
// ---------------------------------------------------------------------------

/// A validated FD graph with all derived data precomputed.
///
/// Nodes are stored in `NodeId` order, so index order and id order agree.
/// The graph is immutable once built.
#[derive(Debug, Clone)]
pub struct FdGraph {
    nodes: Vec<FdNode>,
    edges: Vec<FdEdge>,
    index: BTreeMap<NodeId, usize>,
    children: Vec<Vec<(usize, u8)>>,
    parents: Vec<Vec<(usize, u8)>>,
    root: usize,
    leaves: Vec<usize>,
    leaf_pos: Vec<Option<usize>>,
    depth: Vec<u32>,
    descendants: Vec<FixedBitSet>,
    directives: Vec<FixedBitSet>,
    size: Vec<usize>,
    size_multiset: Vec<u64>,
    cohesion: Vec<Option<f64>>,
    /// Undirected unit-length distances between leaves, `leaves.len()` squared.
    leaf_dist: Vec<u32>,
    notes: BTreeMap<NodeId, Vec<String>>,
}

/// Parse and validate an FD graph document. Either the whole graph is valid
/// or an error is returned.
pub fn parse_fd_graph(text: &str) -> Result<FdGraph, GraphError> {
    let doc = GraphDocument::from_json(text)?;
    FdGraph::from_document(&doc)
}

impl FdGraph {
    pub fn from_document(doc: &GraphDocument) -> Result<Self, GraphError> {
        let mut seen = BTreeSet::new();
        for node in &doc.nodes {
            if !seen.insert(node.id.as_str()) {
                return Err(GraphError::DuplicateNode(node.id.clone()));
            }
        }
        for edge in &doc.edges {
            for endpoint in [&edge.from, &edge.to] {
                if !seen.contains(endpoint.as_str()) {
                    return Err(GraphError::UnknownEndpoint {
                        endpoint: endpoint.clone(),
                        from: edge.from.clone(),
                        to: edge.to.clone(),
                    });
                }
            }
            if edge.weight != 0 && !DIRECTIVE_WEIGHTS.iter().any(|&w| i64::from(w) == edge.weight)
            {
                return Err(GraphError::InvalidWeight {
                    from: edge.from.clone(),
                    to: edge.to.clone(),
                    weight: edge.weight,
                });
            }
        }
        let report = validate_document(doc);
        if report.has_errors() {
            return Err(GraphError::Invalid(report));
        }
        Ok(Self::build(doc))
    }

    fn build(doc: &GraphDocument) -> Self {
        let mut specs: Vec<&NodeSpec> = doc.nodes.iter().collect();
        specs.sort_by(|a, b| a.id.cmp(&b.id));
        let n = specs.len();
        let index: BTreeMap<NodeId, usize> = specs
            .iter()
            .enumerate()
            .map(|(i, s)| (NodeId(s.id.clone()), i))
            .collect();

        let mut children = vec![Vec::new(); n];
        let mut parents = vec![Vec::new(); n];
        for e in &doc.edges {
            let p = index[e.from.as_str()];
            let c = index[e.to.as_str()];
            let w = e.weight as u8;
            children[p].push((c, w));
            parents[c].push((p, w));
        }
        for list in children.iter_mut().chain(parents.iter_mut()) {
            list.sort_unstable();
        }

        let kind_of = |i: usize| {
            if parents[i].is_empty() {
                NodeKind::Mission
            } else if children[i].is_empty() {
                NodeKind::Directive
            } else {
                NodeKind::Function
            }
        };
        let nodes: Vec<FdNode> = specs
            .iter()
            .enumerate()
            .map(|(i, s)| FdNode {
                id: NodeId(s.id.clone()),
                label: s.label.clone().unwrap_or_default(),
                kind: kind_of(i),
            })
            .collect();
        let root = (0..n)
            .find(|&i| parents[i].is_empty())
            .expect("validated graph has a root");

        let mut edges = Vec::with_capacity(doc.edges.len());
        let mut notes: BTreeMap<NodeId, Vec<String>> = BTreeMap::new();
        for p in 0..n {
            for &(c, w) in &children[p] {
                let refinement = children[p].len() == 1;
                let intersection = parents[c].len() > 1;
                let kind = if intersection {
                    if refinement {
                        notes.entry(nodes[p].id.clone()).or_default().push(format!(
                            "refinement parent of shared child {}; edge classified as intersection",
                            nodes[c].id
                        ));
                    }
                    EdgeKind::Intersection
                } else if refinement {
                    EdgeKind::Refinement
                } else {
                    EdgeKind::Decomposition
                };
                edges.push(FdEdge {
                    parent: nodes[p].id.clone(),
                    child: nodes[c].id.clone(),
                    raw_weight: w,
                    kind,
                });
            }
        }

        // Kahn's algorithm, smallest index first for determinism.
        let mut indeg: Vec<usize> = parents.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            topo.push(v);
            for &(c, _) in &children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }

        let mut depth = vec![u32::MAX; n];
        depth[root] = 0;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &(c, _) in &children[v] {
                if depth[c] == u32::MAX {
                    depth[c] = depth[v] + 1;
                    queue.push_back(c);
                }
            }
        }

        let leaves: Vec<usize> = (0..n).filter(|&i| children[i].is_empty()).collect();
        let mut leaf_pos = vec![None; n];
        for (pos, &l) in leaves.iter().enumerate() {
            leaf_pos[l] = Some(pos);
        }
        let mut leaf_mask = FixedBitSet::with_capacity(n);
        for &l in &leaves {
            leaf_mask.insert(l);
        }

        let mut descendants = vec![FixedBitSet::with_capacity(n); n];
        let mut size_multiset = vec![0u64; n];
        for &v in topo.iter().rev() {
            let mut desc = FixedBitSet::with_capacity(n);
            let mut multi = 0u64;
            for &(c, _) in &children[v] {
                desc.insert(c);
                desc.union_with(&descendants[c]);
                multi = multi.saturating_add(size_multiset[c]);
            }
            descendants[v] = desc;
            size_multiset[v] = if children[v].is_empty() { 1 } else { multi };
        }
        let directives: Vec<FixedBitSet> = (0..n)
            .map(|v| {
                if children[v].is_empty() {
                    let mut own = FixedBitSet::with_capacity(n);
                    own.insert(v);
                    own
                } else {
                    let mut d = descendants[v].clone();
                    d.intersect_with(&leaf_mask);
                    d
                }
            })
            .collect();
        let size = directives.iter().map(|d| d.count_ones(..)).collect();

        let leaf_dist = leaf_distances(&children, &parents, &leaves, &leaf_pos);

        let mut graph = FdGraph {
            nodes,
            edges,
            index,
            children,
            parents,
            root,
            leaves,
            leaf_pos,
            depth,
            descendants,
            directives,
            size,
            size_multiset,
            cohesion: Vec::new(),
            leaf_dist,
            notes,
        };
        graph.cohesion = crate::metrics::cohesion_table(&graph, &topo);
        graph
    }

    /// Re-run document validation against this graph. Always empty for a
    /// graph obtained through [`FdGraph::from_document`].
    pub fn validate(&self) -> ValidationReport {
        validate_document(&self.to_document())
    }

    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            notes: Vec::new(),
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeSpec {
                    id: n.id.0.clone(),
                    label: (!n.label.is_empty()).then(|| n.label.clone()),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeSpec {
                    from: e.parent.0.clone(),
                    to: e.child.0.clone(),
                    weight: i64::from(e.raw_weight),
                })
                .collect(),
        }
    }

    pub fn nodes(&self) -> &[FdNode] {
        &self.nodes
    }

    /// Edges sorted by (parent, child).
    pub fn edges(&self) -> &[FdEdge] {
        &self.edges
    }

    pub fn node(&self, id: &str) -> Option<&FdNode> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn root(&self) -> &NodeId {
        &self.nodes[self.root].id
    }

    /// All directives in id order.
    pub fn leaves(&self) -> impl Iterator<Item = &NodeId> + '_ {
        self.leaves.iter().map(|&i| &self.nodes[i].id)
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    /// Function nodes (neither mission nor directive) in id order.
    pub fn functions(&self) -> impl Iterator<Item = &NodeId> + '_ {
        self.nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Function)
            .map(|n| &n.id)
    }

    /// Node-level remarks produced during classification.
    pub fn notes(&self) -> &BTreeMap<NodeId, Vec<String>> {
        &self.notes
    }

    pub fn classify_edge(&self, parent: &str, child: &str) -> Result<EdgeKind, GraphError> {
        let unknown = || GraphError::UnknownEdge(parent.to_string(), child.to_string());
        let p = self.ix(parent).ok_or_else(unknown)?;
        let c = self.ix(child).ok_or_else(unknown)?;
        let pos = self.children[p]
            .binary_search_by_key(&c, |&(v, _)| v)
            .map_err(|_| unknown())?;
        let before: usize = (0..p).map(|i| self.children[i].len()).sum();
        Ok(self.edges[before + pos].kind)
    }

    /// Directives reachable from `node`, in id order.
    pub fn directive_set(&self, node: &str) -> Result<Vec<&NodeId>, GraphError> {
        let v = self.require(node)?;
        Ok(self.directives[v].ones().map(|i| &self.nodes[i].id).collect())
    }

    /// Number of distinct directives under `node`.
    pub fn node_size(&self, node: &str) -> Result<usize, GraphError> {
        Ok(self.size[self.require(node)?])
    }

    /// Size by the plain recursion (sum over children, leaf = 1). Counts a
    /// shared directive once per path, so it can exceed [`FdGraph::node_size`].
    pub fn size_multiset(&self, node: &str) -> Result<u64, GraphError> {
        Ok(self.size_multiset[self.require(node)?])
    }

    /// Shortest directed distance from the mission.
    pub fn node_depth(&self, node: &str) -> Result<u32, GraphError> {
        Ok(self.depth[self.require(node)?])
    }

    pub(crate) fn require(&self, node: &str) -> Result<usize, GraphError> {
        self.ix(node)
            .ok_or_else(|| GraphError::UnknownNode(node.to_string()))
    }

    // -- index-level accessors used by the analysis modules --

    pub(crate) fn ix(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub(crate) fn len(&self) -> usize {
        self.nodes.len()
    }

    pub(crate) fn id(&self, ix: usize) -> &NodeId {
        &self.nodes[ix].id
    }

    pub(crate) fn kind(&self, ix: usize) -> NodeKind {
        self.nodes[ix].kind
    }

    pub(crate) fn root_ix(&self) -> usize {
        self.root
    }

    pub(crate) fn leaf_ixs(&self) -> &[usize] {
        &self.leaves
    }

    pub(crate) fn children_ix(&self, ix: usize) -> &[(usize, u8)] {
        &self.children[ix]
    }

    pub(crate) fn parents_ix(&self, ix: usize) -> &[(usize, u8)] {
        &self.parents[ix]
    }

    pub(crate) fn function_children(&self, ix: usize) -> impl Iterator<Item = usize> + '_ {
        self.children[ix]
            .iter()
            .map(|&(c, _)| c)
            .filter(move |&c| !self.children[c].is_empty())
    }

    pub(crate) fn descendants_ix(&self, ix: usize) -> &FixedBitSet {
        &self.descendants[ix]
    }

    pub(crate) fn directives_ix(&self, ix: usize) -> &FixedBitSet {
        &self.directives[ix]
    }

    pub(crate) fn size_ix(&self, ix: usize) -> usize {
        self.size[ix]
    }

    pub(crate) fn depth_ix(&self, ix: usize) -> u32 {
        self.depth[ix]
    }

    pub(crate) fn cohesion_ix(&self, ix: usize) -> Option<f64> {
        self.cohesion[ix]
    }

    /// Undirected distance between two directives (node indices).
    pub(crate) fn leaf_distance(&self, a: usize, b: usize) -> u32 {
        let (pa, pb) = (
            self.leaf_pos[a].expect("directive"),
            self.leaf_pos[b].expect("directive"),
        );
        self.leaf_dist[pa * self.leaves.len() + pb]
    }

    pub(crate) fn is_leaf(&self, ix: usize) -> bool {
        self.children[ix].is_empty()
    }
}

fn leaf_distances(
    children: &[Vec<(usize, u8)>],
    parents: &[Vec<(usize, u8)>],
    leaves: &[usize],
    leaf_pos: &[Option<usize>],
) -> Vec<u32> {
    let n = children.len();
    let l = leaves.len();
    let mut out = vec![u32::MAX; l * l];
    let mut dist = vec![u32::MAX; n];
    let mut queue = VecDeque::new();
    for (row, &src) in leaves.iter().enumerate() {
        dist.iter_mut().for_each(|d| *d = u32::MAX);
        dist[src] = 0;
        queue.push_back(src);
        while let Some(v) = queue.pop_front() {
            let next = dist[v] + 1;
            for &(u, _) in children[v].iter().chain(parents[v].iter()) {
                if dist[u] == u32::MAX {
                    dist[u] = next;
                    queue.push_back(u);
                }
            }
        }
        for (v, &d) in dist.iter().enumerate() {
            if let Some(col) = leaf_pos[v] {
                out[row * l + col] = d;
            }
        }
    }
    out
}
