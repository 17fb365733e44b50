use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use capslice_core::composite::{
    basic_set_id, rank_slices_capped, select_from, slice_id, GuardMode, Guards, RankedSlice,
    SelectOptions, DEFAULT_MAX_ORDERED_SLICES,
};
use capslice_core::graph::{validate_document, Diagnostic, GraphDocument, Locus, Severity};
use capslice_core::report::{fmt6, round6};
use capslice_core::slicer::{enumerate_basic_slice_sets, ordered_slice_count, orphan_nodes};
use capslice_core::synthesis::{core_function_sets_with, SynthInput};
use capslice_core::{
    node_cohesion, pearson_correlation, slice_statistics, BasicSliceSet, FdGraph, GraphError,
    NodeId, NodeKind, Slice, SliceMetrics, ValidationReport,
};
use serde::Serialize;

use crate::output::{csv, findings, join_ids, json, Failure, Success, EXIT_FINDINGS};
use crate::{dot, Context, Format};

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load_graph(path: &Path) -> Result<FdGraph, Failure> {
    let text = read(path)?;
    capslice_core::parse_fd_graph(&text).map_err(|e| match e {
        GraphError::Invalid(report) => {
            let lines: Vec<String> = report.diagnostics.iter().map(ToString::to_string).collect();
            Failure::Findings(format!("{}: graph validation failed\n{}", path.display(), lines.join("\n")))
        }
        other => Failure::Findings(format!("{}: {other}", path.display())),
    })
}

fn basic_sets(ctx: &Context, g: &FdGraph) -> Result<(Vec<BasicSliceSet>, Vec<String>), Failure> {
    let sets = enumerate_basic_slice_sets(g, ctx.max_basic_sets).map_err(findings)?;
    let orphans = orphan_nodes(g, &sets);
    let mut notes = Vec::new();
    if !orphans.is_empty() {
        notes.push(format!(
            "warning: function nodes in no slice: {}",
            orphans.iter().map(NodeId::as_str).collect::<Vec<_>>().join(", ")
        ));
    }
    Ok((sets, notes))
}

#[derive(Serialize)]
struct ValidateOut<'a> {
    valid: bool,
    diagnostics: &'a [Diagnostic],
}

pub fn validate(ctx: &Context, path: &Path) -> Result<Success, Failure> {
    let text = read(path)?;
    let report = match GraphDocument::from_json(&text) {
        Err(e) => ValidationReport {
            diagnostics: vec![Diagnostic {
                severity: Severity::Error,
                locus: Locus::Graph,
                message: e.to_string(),
            }],
        },
        Ok(doc) => {
            let report = validate_document(&doc);
            match (report.is_empty(), FdGraph::from_document(&doc)) {
                (true, Err(e)) => ValidationReport {
                    diagnostics: vec![Diagnostic {
                        severity: Severity::Error,
                        locus: Locus::Graph,
                        message: e.to_string(),
                    }],
                },
                _ => report,
            }
        }
    };
    let stdout = match ctx.format {
        Format::Json => json(&ValidateOut {
            valid: report.is_empty(),
            diagnostics: &report.diagnostics,
        }),
        Format::Csv => csv(
            &["severity", "locus", "message"],
            report.diagnostics.iter().map(|d| {
                let sev = match d.severity {
                    Severity::Error => "error",
                    Severity::Warning => "warning",
                };
                [sev.to_string(), d.locus.key(), d.message.clone()]
            }),
        ),
    };
    let code = if report.is_empty() { 0 } else { EXIT_FINDINGS };
    Ok(Success::new(stdout).with_code(code))
}

#[derive(Serialize)]
struct NodeOut<'a> {
    id: &'a str,
    #[serde(skip_serializing_if = "str::is_empty")]
    label: &'a str,
    kind: NodeKind,
    size: usize,
    size_multiset: u64,
    depth: u32,
    #[serde(serialize_with = "capslice_core::report::sig6_opt")]
    cohesion: Option<f64>,
    directives: Vec<&'a NodeId>,
    #[serde(skip_serializing_if = "<[String]>::is_empty")]
    notes: &'a [String],
}

#[derive(Serialize)]
struct EdgeOut<'a> {
    parent: &'a NodeId,
    child: &'a NodeId,
    raw_weight: u8,
    kind: capslice_core::EdgeKind,
}

#[derive(Serialize)]
struct InspectOut<'a> {
    root: &'a NodeId,
    nodes: Vec<NodeOut<'a>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    edges: Vec<EdgeOut<'a>>,
}

pub fn inspect(ctx: &Context, path: &Path, only: Option<&str>) -> Result<Success, Failure> {
    let g = load_graph(path)?;
    if let Some(id) = only {
        if g.node(id).is_none() {
            return Err(Failure::Findings(format!("unknown node `{id}`")));
        }
    }
    let no_notes: &[String] = &[];
    let nodes: Vec<NodeOut> = g
        .nodes()
        .iter()
        .filter(|n| only.is_none_or(|id| n.id == id))
        .map(|n| {
            let id = n.id.as_str();
            NodeOut {
                id,
                label: &n.label,
                kind: n.kind,
                size: g.node_size(id).expect("known node"),
                size_multiset: g.size_multiset(id).expect("known node"),
                depth: g.node_depth(id).expect("known node"),
                cohesion: node_cohesion(&g, id).ok(),
                directives: g.directive_set(id).expect("known node"),
                notes: g.notes().get(&n.id).map_or(no_notes, Vec::as_slice),
            }
        })
        .collect();
    let stdout = match ctx.format {
        Format::Json => {
            let edges = if only.is_some() {
                Vec::new()
            } else {
                g.edges()
                    .iter()
                    .map(|e| EdgeOut {
                        parent: &e.parent,
                        child: &e.child,
                        raw_weight: e.raw_weight,
                        kind: e.kind,
                    })
                    .collect()
            };
            json(&InspectOut {
                root: g.root(),
                nodes,
                edges,
            })
        }
        Format::Csv => csv(
            &["id", "kind", "size", "size_multiset", "depth", "cohesion", "directives"],
            nodes.iter().map(|n| {
                [
                    n.id.to_string(),
                    format!("{:?}", n.kind).to_lowercase(),
                    n.size.to_string(),
                    n.size_multiset.to_string(),
                    n.depth.to_string(),
                    n.cohesion.map(fmt6).unwrap_or_default(),
                    join_ids(&n.directives.iter().map(|d| d.as_str()).collect::<Vec<_>>()),
                ]
            }),
        ),
    };
    Ok(Success::new(stdout))
}

#[derive(Serialize)]
struct BasicSetOut<'a> {
    id: String,
    nodes: &'a [NodeId],
    broken_linkage: bool,
    shared: &'a [NodeId],
    permutation_count: u128,
    assignment: &'a BTreeMap<NodeId, NodeId>,
}

#[derive(Serialize)]
struct SlicesOut<'a> {
    basic_sets: Vec<BasicSetOut<'a>>,
    ordered_slices: u64,
    orphans: Vec<NodeId>,
    truncated: bool,
}

#[derive(Serialize)]
struct OrderedRow<'a> {
    slice_id: String,
    basic_set: String,
    order: Vec<&'a NodeId>,
}

#[derive(Serialize)]
struct OrderedOut<'a> {
    slices: Vec<OrderedRow<'a>>,
    ordered_slices: u64,
    truncated: bool,
}

pub fn slices(ctx: &Context, path: &Path, ordered: bool, limit: Option<usize>) -> Result<Success, Failure> {
    let g = load_graph(path)?;
    let (sets, mut notes) = basic_sets(ctx, &g)?;
    let total = ordered_slice_count(&sets).map_err(findings)?;
    let limit = limit.unwrap_or(usize::MAX);

    let (stdout, truncated) = if ordered {
        let mut rows = Vec::new();
        'sets: for (i, set) in sets.iter().enumerate() {
            for (j, slice) in set.permutations(None).enumerate() {
                if rows.len() == limit {
                    break 'sets;
                }
                rows.push(OrderedRow {
                    slice_id: slice_id(i, j),
                    basic_set: basic_set_id(i),
                    order: slice.order(),
                });
            }
        }
        let truncated = (rows.len() as u64) < total;
        let stdout = match ctx.format {
            Format::Json => json(&OrderedOut {
                truncated,
                ordered_slices: total,
                slices: rows,
            }),
            Format::Csv => csv(
                &["slice_id", "basic_set", "order"],
                rows.iter().map(|r| [r.slice_id.clone(), r.basic_set.clone(), join_ids(&r.order)]),
            ),
        };
        (stdout, truncated)
    } else {
        let shown = &sets[..sets.len().min(limit)];
        let truncated = shown.len() < sets.len();
        let stdout = match ctx.format {
            Format::Json => json(&SlicesOut {
                basic_sets: shown
                    .iter()
                    .enumerate()
                    .map(|(i, s)| BasicSetOut {
                        id: basic_set_id(i),
                        nodes: s.nodes(),
                        broken_linkage: s.broken_linkage(),
                        shared: s.shared_directives(),
                        permutation_count: s.permutation_count(),
                        assignment: s.assignment(),
                    })
                    .collect(),
                ordered_slices: total,
                orphans: orphan_nodes(&g, &sets),
                truncated,
            }),
            Format::Csv => csv(
                &["set_id", "nodes", "size", "broken_linkage", "shared", "permutation_count"],
                shown.iter().enumerate().map(|(i, s)| {
                    [
                        basic_set_id(i),
                        join_ids(s.nodes()),
                        s.len().to_string(),
                        s.broken_linkage().to_string(),
                        join_ids(s.shared_directives()),
                        s.permutation_count().to_string(),
                    ]
                }),
            ),
        };
        (stdout, truncated)
    };
    if truncated {
        notes.push(format!("note: output truncated at {limit} rows"));
    }
    notes.push(format!("ordered slices: {total}"));
    let mut out = Success::new(stdout);
    out.notes = notes;
    Ok(out)
}

#[derive(Serialize)]
struct MetricsOut<'a> {
    order: Vec<&'a NodeId>,
    broken_linkage: bool,
    assignment: &'a BTreeMap<NodeId, NodeId>,
    metrics: SliceMetrics,
}

pub fn metrics(ctx: &Context, path: &Path, order: &[String]) -> Result<Success, Failure> {
    let g = load_graph(path)?;
    let set = BasicSliceSet::from_nodes(&g, order).map_err(|e| Failure::Findings(format!("invalid slice: {e}")))?;
    let slice = Slice::new(&set, order).map_err(findings)?;
    let m = slice_statistics(&g, &slice);
    let stdout = match ctx.format {
        Format::Json => json(&MetricsOut {
            order: slice.order(),
            broken_linkage: set.broken_linkage(),
            assignment: set.assignment(),
            metrics: m,
        }),
        Format::Csv => csv(
            &["order", "broken_linkage", "cohesion", "coupling", "avg_size", "avg_depth"],
            [[
                join_ids(&slice.order()),
                set.broken_linkage().to_string(),
                fmt6(m.cohesion),
                fmt6(m.coupling),
                fmt6(m.avg_size),
                fmt6(m.avg_depth),
            ]],
        ),
    };
    Ok(Success::new(stdout))
}

fn ranked_rows(rows: &[RankedSlice]) -> impl Iterator<Item = [String; 7]> + '_ {
    rows.iter().map(|r| {
        [
            r.slice_id.clone(),
            join_ids(&r.order),
            r.broken_linkage.to_string(),
            fmt6(r.cohesion),
            fmt6(r.coupling),
            fmt6(r.avg_size),
            fmt6(r.avg_depth),
        ]
    })
}

pub fn rank(ctx: &Context, path: &Path) -> Result<Success, Failure> {
    let g = load_graph(path)?;
    let (sets, notes) = basic_sets(ctx, &g)?;
    let ranking = rank_slices_capped(&g, &sets, ctx.exec, DEFAULT_MAX_ORDERED_SLICES).map_err(findings)?;
    let mut out = match ctx.format {
        Format::Json => Success::new(json(&ranking)),
        Format::Csv => {
            let s = &ranking.summary;
            let mut out = Success::new(csv(
                &["slice_id", "order", "broken_linkage", "cohesion", "coupling", "avg_size", "avg_depth"],
                ranked_rows(&ranking.table),
            ));
            for (name, st) in [
                ("cohesion", &s.cohesion),
                ("coupling", &s.coupling),
                ("avg_size", &s.avg_size),
                ("avg_depth", &s.avg_depth),
            ] {
                out = out.note(format!(
                    "{name}: max {} min {} median {}",
                    fmt6(st.max),
                    fmt6(st.min),
                    fmt6(st.median)
                ));
            }
            out
        }
    };
    out.notes.splice(0..0, notes);
    Ok(out)
}

pub fn select(ctx: &Context, path: &Path, cohesion: GuardMode, coupling: GuardMode) -> Result<Success, Failure> {
    let g = load_graph(path)?;
    let (sets, notes) = basic_sets(ctx, &g)?;
    let opts = SelectOptions {
        max_basic_sets: ctx.max_basic_sets,
        exec: ctx.exec,
        ..SelectOptions::default()
    };
    let report = select_from(&g, &sets, Guards { cohesion, coupling }, opts).map_err(findings)?;
    let stdout = match ctx.format {
        Format::Json => json(&report),
        Format::Csv => {
            let rows = report.trace.iter().flat_map(|step| {
                step.candidates.iter().map(move |c| {
                    let m = c.metrics.as_ref();
                    [
                        step.round.to_string(),
                        c.replaced.to_string(),
                        join_ids(&c.candidate),
                        c.passed.to_string(),
                        c.reason.map(|r| r.code().to_string()).unwrap_or_default(),
                        m.map(|m| fmt6(m.cohesion)).unwrap_or_default(),
                        m.map(|m| fmt6(m.coupling)).unwrap_or_default(),
                        m.map(|m| fmt6(m.avg_size)).unwrap_or_default(),
                    ]
                })
            });
            csv(
                &["round", "replaced", "candidate", "passed", "reason", "cohesion", "coupling", "avg_size"],
                rows,
            )
        }
    };
    let mut out = Success::new(stdout);
    out.notes = notes;
    if ctx.format == Format::Csv {
        out = out.note(format!("selected: {}", join_ids(&report.selected)));
        out = out.note(format!("order: {}", join_ids(&report.order)));
    }
    Ok(out)
}

#[derive(Serialize)]
struct ScatterOut {
    output: String,
    rows: usize,
    correlation: serde_json::Value,
    distinct_points: usize,
}

fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::Usage(format!("cannot write {}: {e}", path.display()));
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(parent).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(parent).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn scatter(ctx: &Context, path: &Path, output: &Path) -> Result<Success, Failure> {
    let g = load_graph(path)?;
    let (sets, notes) = basic_sets(ctx, &g)?;
    let mut table = rank_slices_capped(&g, &sets, ctx.exec, DEFAULT_MAX_ORDERED_SLICES)
        .map_err(findings)?
        .table;
    table.sort_by_key(|r| (r.basic_set, r.permutation));
    let data = csv(
        &["slice_id", "avg_size", "avg_depth", "cohesion", "coupling"],
        table.iter().map(|r| {
            [
                r.slice_id.clone(),
                fmt6(r.avg_size),
                fmt6(r.avg_depth),
                fmt6(r.cohesion),
                fmt6(r.coupling),
            ]
        }),
    );
    write_atomic(output, data.as_bytes())?;

    let points: Vec<(f64, f64)> = table.iter().map(|r| (r.avg_size, r.avg_depth)).collect();
    let distinct: BTreeSet<(u64, u64)> = points
        .iter()
        .map(|&(x, y)| (round6(x).to_bits(), round6(y).to_bits()))
        .collect();
    let correlation = pearson_correlation(&points).ok().map(round6);
    let shown = correlation.map_or_else(|| "n/a".to_string(), fmt6);
    let stdout = match ctx.format {
        Format::Json => json(&ScatterOut {
            output: output.display().to_string(),
            rows: table.len(),
            correlation: correlation.map_or_else(|| serde_json::Value::from("n/a"), serde_json::Value::from),
            distinct_points: distinct.len(),
        }),
        Format::Csv => csv(
            &["rows", "correlation", "distinct_points"],
            [[table.len().to_string(), shown, distinct.len().to_string()]],
        ),
    };
    let mut out = Success::new(stdout);
    out.notes = notes;
    Ok(out)
}

pub fn synth(ctx: &Context, path: &Path) -> Result<Success, Failure> {
    let text = read(path)?;
    let input = SynthInput::from_json(&text).map_err(|e| Failure::Findings(format!("{}: {e}", path.display())))?;
    let cfs = core_function_sets_with(&input, ctx.exec).map_err(findings)?;
    let stdout = match ctx.format {
        Format::Json => json(&cfs),
        Format::Csv => csv(
            &["directive", "core_function", "members", "constituents"],
            cfs.values().flat_map(|set| {
                set.core_functions.iter().map(move |cf| {
                    [
                        set.directive.clone(),
                        cf.id.clone(),
                        join_ids(&cf.members.iter().collect::<Vec<_>>()),
                        join_ids(&cf.constituents),
                    ]
                })
            }),
        ),
    };
    Ok(Success::new(stdout))
}

pub fn export_dot(path: &Path) -> Result<Success, Failure> {
    let g = load_graph(path)?;
    Ok(Success::new(dot::render(&g)))
}
