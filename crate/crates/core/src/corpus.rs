//! Seeded random FD graphs for property checks and benchmarks.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{EdgeSpec, FdGraph, GraphDocument, NodeSpec, DIRECTIVE_WEIGHTS};
use crate::synthesis::{SynthFunction, SynthInput};

#[derive(Debug, Clone, Copy)]
pub struct CorpusConfig {
    /// Function nodes, excluding the mission.
    pub max_functions: usize,
    pub max_leaves: usize,
    /// Chance that a function or leaf gets an extra parent.
    pub share_probability: f64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            max_functions: 8,
            max_leaves: 12,
            share_probability: 0.2,
        }
    }
}

/// A valid random FD graph document. Identical seeds give identical
/// documents.
pub fn random_document(seed: u64, cfg: CorpusConfig) -> GraphDocument {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let functions = rng.random_range(1..=cfg.max_functions);
    let leaves = rng.random_range(2..=cfg.max_leaves.max(2));

    // internal nodes in topological order: 0 is the mission
    let internal: Vec<String> = std::iter::once("r".to_string())
        .chain((1..=functions).map(|i| format!("n{i}")))
        .collect();
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    for child in 1..=functions {
        let parent = rng.random_range(0..child);
        edges.insert((parent, child));
        if child > 1 && rng.random_bool(cfg.share_probability) {
            edges.insert((rng.random_range(0..child), child));
        }
    }
    let has_children = |edges: &BTreeSet<(usize, usize)>, v: usize| edges.iter().any(|&(p, _)| p == v);

    // leaves live at offset `functions + 1`; mostly under functions
    let leaf0 = functions + 1;
    let mut leaf_edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut childless: Vec<usize> = (1..=functions).filter(|&v| !has_children(&edges, v)).collect();
    for l in 0..leaves {
        let parent = match childless.pop() {
            Some(v) => v,
            None if rng.random_bool(0.05) => 0,
            None => rng.random_range(1..=functions),
        };
        leaf_edges.insert((parent, leaf0 + l));
        if rng.random_bool(cfg.share_probability) {
            leaf_edges.insert((rng.random_range(1..=functions), leaf0 + l));
        }
    }
    // functions still without children share an existing leaf
    for v in childless {
        leaf_edges.insert((v, leaf0 + rng.random_range(0..leaves)));
    }

    let name = |i: usize| {
        if i < leaf0 {
            internal[i].clone()
        } else {
            format!("d{}", i - leaf0 + 1)
        }
    };
    let nodes = (0..leaf0 + leaves)
        .map(|i| NodeSpec {
            id: name(i),
            label: None,
        })
        .collect();
    let mut specs: Vec<EdgeSpec> = edges
        .iter()
        .map(|&(p, c)| EdgeSpec {
            from: name(p),
            to: name(c),
            weight: 0,
        })
        .collect();
    specs.extend(leaf_edges.iter().map(|&(p, c)| EdgeSpec {
        from: name(p),
        to: name(c),
        weight: i64::from(*DIRECTIVE_WEIGHTS.choose(&mut rng).expect("non-empty")),
    }));
    GraphDocument {
        notes: Vec::new(),
        nodes,
        edges: specs,
    }
}

pub fn random_graph(seed: u64, cfg: CorpusConfig) -> FdGraph {
    FdGraph::from_document(&random_document(seed, cfg)).expect("generator emits valid graphs")
}

/// A random synthesis input over a twelve-element universe.
pub fn random_synth_input(seed: u64) -> SynthInput {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let universe: Vec<String> = ('a'..='l').map(String::from).collect();
    let functions: Vec<SynthFunction> = (0..rng.random_range(1..=10))
        .map(|i| {
            let k = rng.random_range(1..=4);
            SynthFunction {
                id: format!("f{i}"),
                members: universe.choose_multiple(&mut rng, k).cloned().collect(),
            }
        })
        .collect();
    let directives: Vec<String> = (1..=rng.random_range(1..=4)).map(|d| format!("d{d}")).collect();
    let associations = directives
        .iter()
        .map(|d| {
            let k = rng.random_range(1..=functions.len());
            let mut fs: Vec<String> = functions.choose_multiple(&mut rng, k).map(|f| f.id.clone()).collect();
            fs.sort();
            (d.clone(), fs)
        })
        .collect();
    SynthInput {
        directives,
        functions,
        associations,
        relevance: Default::default(),
    }
}
