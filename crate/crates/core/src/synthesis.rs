//! Bottom-up synthesis of core function sets.
//!
//! Functions are sets over an abstract element universe, so containment and
//! overlap between functions are plain set relations. Per directive the
//! candidate functions are reduced to the maximal ones, and overlapping
//! maximal functions are merged into core functions.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par::Execution;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SynthError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{locus}: {message}")]
    Schema { locus: String, message: String },
    #[error("unknown directive `{0}`")]
    UnknownDirective(String),
}

fn schema(locus: impl Into<String>, message: impl Into<String>) -> SynthError {
    SynthError::Schema {
        locus: locus.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthFunction {
    pub id: String,
    pub members: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthInput {
    pub directives: Vec<String>,
    pub functions: Vec<SynthFunction>,
    pub associations: BTreeMap<String, Vec<String>>,
    /// directive → function → relevance in [0, 1]
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub relevance: BTreeMap<String, BTreeMap<String, f64>>,
}

impl SynthInput {
    pub fn from_json(text: &str) -> Result<Self, SynthError> {
        let input: SynthInput = serde_json::from_str(text).map_err(|e| SynthError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        input.validate()?;
        Ok(input)
    }

    /// First schema violation, with a field locus.
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.functions.is_empty() {
            return Err(schema("functions", "must not be empty"));
        }
        if self.directives.is_empty() {
            return Err(schema("directives", "must not be empty"));
        }
        let mut ids = BTreeSet::new();
        for (i, f) in self.functions.iter().enumerate() {
            if f.id.is_empty() {
                return Err(schema(format!("functions[{i}].id"), "must not be empty"));
            }
            if !ids.insert(f.id.as_str()) {
                return Err(schema(format!("functions[{i}].id"), format!("duplicate function id `{}`", f.id)));
            }
            if f.members.is_empty() {
                return Err(schema(format!("functions[{i}].members"), "must not be empty"));
            }
        }
        let mut directives = BTreeSet::new();
        for (i, d) in self.directives.iter().enumerate() {
            if d.is_empty() {
                return Err(schema(format!("directives[{i}]"), "must not be empty"));
            }
            if !directives.insert(d.as_str()) {
                return Err(schema(format!("directives[{i}]"), format!("duplicate directive `{d}`")));
            }
        }
        for (d, fs) in &self.associations {
            if !directives.contains(d.as_str()) {
                return Err(schema(format!("associations.{d}"), "not a listed directive"));
            }
            for (j, f) in fs.iter().enumerate() {
                if !ids.contains(f.as_str()) {
                    return Err(schema(format!("associations.{d}[{j}]"), format!("unknown function `{f}`")));
                }
            }
        }
        for d in &self.directives {
            if self.associations.get(d).is_none_or(Vec::is_empty) {
                return Err(schema(format!("associations.{d}"), "directive has no associated function"));
            }
        }
        for (d, per) in &self.relevance {
            let assoc = self
                .associations
                .get(d)
                .ok_or_else(|| schema(format!("relevance.{d}"), "not a listed directive"))?;
            for (f, &v) in per {
                if !assoc.contains(f) {
                    return Err(schema(format!("relevance.{d}.{f}"), "function is not associated with the directive"));
                }
                if !(0.0..=1.0).contains(&v) {
                    return Err(schema(format!("relevance.{d}.{f}"), format!("relevance {v} outside [0, 1]")));
                }
            }
        }
        Ok(())
    }

    fn function(&self, id: &str) -> Option<&SynthFunction> {
        self.functions.iter().find(|f| f.id == id)
    }
}

/// Functions associated with directive `d`, sorted by id.
pub fn build_initial_set<'a>(input: &'a SynthInput, d: &str) -> Result<Vec<&'a SynthFunction>, SynthError> {
    if !input.directives.iter().any(|x| x == d) {
        return Err(SynthError::UnknownDirective(d.to_string()));
    }
    let mut set: Vec<&SynthFunction> = input
        .associations
        .get(d)
        .into_iter()
        .flatten()
        .filter_map(|f| input.function(f))
        .collect();
    set.sort();
    set.dedup_by(|a, b| a.id == b.id);
    Ok(set)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Duplicate {
    pub kept: String,
    pub dropped: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Maximal {
    pub functions: Vec<SynthFunction>,
    pub duplicates: Vec<Duplicate>,
}

/// Drop every function whose members are a proper subset of another's.
/// Among functions with equal members only the smallest id survives.
pub fn maximal_functions<'a, I>(initial: I) -> Maximal
where
    I: IntoIterator<Item = &'a SynthFunction>,
{
    let mut all: Vec<&SynthFunction> = initial.into_iter().collect();
    all.sort_by(|a, b| a.id.cmp(&b.id));
    let mut functions = Vec::new();
    let mut duplicates = Vec::new();
    for f in &all {
        let dominated = all
            .iter()
            .any(|g| f.members.len() < g.members.len() && f.members.is_subset(&g.members));
        if dominated {
            continue;
        }
        match all.iter().find(|g| g.members == f.members) {
            Some(first) if first.id != f.id => duplicates.push(Duplicate {
                kept: first.id.clone(),
                dropped: f.id.clone(),
            }),
            _ => functions.push((*f).clone()),
        }
    }
    Maximal {
        functions,
        duplicates,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoreFunction {
    pub id: String,
    pub members: BTreeSet<String>,
    pub constituents: Vec<String>,
}

/// Connected components of the overlap graph, each merged into one core
/// function. Components are sorted by their smallest constituent id and
/// named `F1`, `F2`, ...
pub fn aggregate_overlapping(subset: &[SynthFunction]) -> Vec<CoreFunction> {
    let mut order: Vec<&SynthFunction> = subset.iter().collect();
    order.sort_by(|a, b| a.id.cmp(&b.id));
    let n = order.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in i + 1..n {
            if !order[i].members.is_disjoint(&order[j].members) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                // keep the smaller index as representative
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    groups
        .into_values()
        .enumerate()
        .map(|(j, members)| CoreFunction {
            id: format!("F{}", j + 1),
            members: members.iter().flat_map(|&i| order[i].members.iter().cloned()).collect(),
            constituents: members.iter().map(|&i| order[i].id.clone()).collect(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreFunctionSet {
    pub directive: String,
    pub initial: Vec<String>,
    pub maximal: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub duplicates: Vec<Duplicate>,
    pub core_functions: Vec<CoreFunction>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub relevance: BTreeMap<String, f64>,
}

/// One core function set per directive. Core function ids are
/// `F{directive position}.{component}`, both 1-based.
pub fn core_function_sets(input: &SynthInput) -> Result<BTreeMap<String, CoreFunctionSet>, SynthError> {
    core_function_sets_with(input, Execution::default())
}

pub fn core_function_sets_with(
    input: &SynthInput,
    exec: Execution,
) -> Result<BTreeMap<String, CoreFunctionSet>, SynthError> {
    input.validate()?;
    let indexed: Vec<(usize, &String)> = input.directives.iter().enumerate().collect();
    exec.map_collect(&indexed, |&(i, d)| {
        let initial = build_initial_set(input, d)?;
        let maximal = maximal_functions(initial.iter().copied());
        let core_functions = aggregate_overlapping(&maximal.functions)
            .into_iter()
            .enumerate()
            .map(|(j, mut cf)| {
                cf.id = format!("F{}.{}", i + 1, j + 1);
                cf
            })
            .collect();
        Ok((
            d.clone(),
            CoreFunctionSet {
                directive: d.clone(),
                initial: initial.iter().map(|f| f.id.clone()).collect(),
                maximal: maximal.functions.iter().map(|f| f.id.clone()).collect(),
                duplicates: maximal.duplicates,
                core_functions,
                relevance: input.relevance.get(d).cloned().unwrap_or_default(),
            },
        ))
    })
    .into_iter()
    .collect()
}
