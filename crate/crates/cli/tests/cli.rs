mod common;

use std::fs;

use common::{capslice, fixture, ids, json, stderr, stdout};

fn path(name: &str) -> String {
    fixture(name).display().to_string()
}

fn write_temp(dir: &tempfile::TempDir, name: &str, body: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p.display().to_string()
}

const CYCLIC: &str = r#"{"nodes":[{"id":"r"},{"id":"a"},{"id":"b"},{"id":"d1"}],
  "edges":[{"from":"r","to":"a","weight":0},{"from":"a","to":"b","weight":0},
           {"from":"b","to":"a","weight":0},{"from":"b","to":"d1","weight":3}]}"#;

const CHAIN: &str = r#"{"nodes":[{"id":"r"},{"id":"n1"},{"id":"n2"},{"id":"d1"},{"id":"d2"}],
  "edges":[{"from":"r","to":"n1","weight":0},{"from":"n1","to":"n2","weight":0},
           {"from":"n2","to":"d1","weight":7},{"from":"n2","to":"d2","weight":3}]}"#;

#[test]
fn validate_exit_codes() {
    let ok = capslice(&["validate", &path("library30.json")]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(json(&ok)["valid"], true);

    let dir = tempfile::tempdir().unwrap();
    let cyclic = write_temp(&dir, "cyclic.json", CYCLIC);
    let bad = capslice(&["validate", &cyclic]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("cycle detected"));

    let missing = capslice(&["validate", "/definitely/not/here.json"]);
    assert_eq!(missing.status.code(), Some(2));

    let csv = capslice(&["--format", "csv", "validate", &cyclic]);
    assert!(stdout(&csv).starts_with("severity,locus,message\n"));
}

#[test]
fn analysis_on_invalid_graph_is_a_finding() {
    let dir = tempfile::tempdir().unwrap();
    let cyclic = write_temp(&dir, "cyclic.json", CYCLIC);
    let out = capslice(&["slices", &cyclic]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("cycle detected"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(capslice(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(capslice(&["--format", "xml", "validate", "x"]).status.code(), Some(2));
    assert_eq!(capslice(&["metrics", &path("toy6.json")]).status.code(), Some(2));
}

#[test]
fn slices_library30() {
    let out = capslice(&["slices", &path("library30.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["basic_sets"].as_array().unwrap().len(), 6);
    assert_eq!(v["ordered_slices"], 1014);
    assert_eq!(ids(&v["orphans"]), ["n6", "n7"]);
    assert!(stderr(&out).contains("ordered slices: 1014"));
    assert!(stderr(&out).contains("warning: function nodes in no slice: n6, n7"));
    let s3 = &v["basic_sets"][3];
    assert_eq!(ids(&s3["nodes"]), ["n1", "n3", "n4", "n8", "n9"]);
    assert_eq!(s3["broken_linkage"], true);
    assert_eq!(s3["assignment"]["d2"], "n8");

    let csv = capslice(&["--format", "csv", "slices", &path("library30.json")]);
    let text = stdout(&csv);
    assert_eq!(text.lines().count(), 7);
    assert!(text.starts_with("set_id,nodes,size,broken_linkage,shared,permutation_count\n"));
}

#[test]
fn ordered_slices_and_limits() {
    let out = capslice(&["--format", "csv", "slices", "--ordered", &path("toy6.json")]);
    assert_eq!(stdout(&out), "slice_id,basic_set,order\nS1.1,S1,na nb\nS1.2,S1,nb na\n");

    let out = capslice(&["--format", "csv", "slices", "--ordered", "--limit", "0", &path("library30.json")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "slice_id,basic_set,order\n");
    assert!(stderr(&out).contains("truncated"));

    let out = capslice(&["slices", "--ordered", "--limit", "3", &path("library30.json")]);
    let v = json(&out);
    assert_eq!(v["truncated"], true);
    assert_eq!(v["slices"].as_array().unwrap().len(), 3);
    assert_eq!(ids(&v["slices"][2]["order"]), ["n2", "n1", "n3"]);
}

#[test]
fn enumeration_cap() {
    let out = capslice(&["--max-basic-sets", "5", "slices", &path("library30.json")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("cap of 5"));

    let out = std::process::Command::new(env!("CARGO_BIN_EXE_capslice"))
        .args(["slices", &path("library30.json")])
        .env("CAPSLICE_MAX_BASIC_SETS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // the flag wins over the environment
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_capslice"))
        .args(["--max-basic-sets", "6", "slices", &path("library30.json")])
        .env("CAPSLICE_MAX_BASIC_SETS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn metrics_command() {
    let out = capslice(&["metrics", "--slice", "nb,na", &path("toy6.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["metrics"]["cohesion"], 0.658333);
    assert_eq!(v["metrics"]["coupling"], 0.125);
    assert_eq!(v["metrics"]["avg_size"], 2.5);

    let bad = capslice(&["metrics", "--slice", "na", &path("toy6.json")]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stderr(&bad).contains("invalid slice"));
}

#[test]
fn rank_command() {
    let v = json(&capslice(&["rank", &path("toy6.json")]));
    assert_eq!(v["summary"]["slices"], 2);
    assert_eq!(v["summary"]["coupling"]["min"], 0.0833333);
    assert_eq!(v["summary"]["coupling"]["max"], 0.125);
    assert_eq!(v["table"].as_array().unwrap().len(), 2);

    let csv = capslice(&["--format", "csv", "rank", &path("library30.json")]);
    assert_eq!(stdout(&csv).lines().count(), 1015);
    assert!(stderr(&csv).contains("cohesion: max"));
}

#[test]
fn select_command() {
    let v = json(&capslice(&["select", &path("toy6.json")]));
    assert_eq!(ids(&v["selected"]), ["na", "nb"]);
    assert_eq!(ids(&v["order"]), ["na", "nb"]);

    let dir = tempfile::tempdir().unwrap();
    let chain = write_temp(&dir, "chain.json", CHAIN);
    let v = json(&capslice(&["select", "--cohesion-guard", "none", "--coupling-guard", "none", &chain]));
    assert_eq!(ids(&v["selected"]), ["n2"]);

    let out = capslice(&["select", &path("library30.json")]);
    let text = stdout(&out);
    let keys = ["\"selected\"", "\"order\"", "\"metrics\"", "\"trace\"", "\"rejected\""];
    let positions: Vec<usize> = keys.iter().map(|k| text.find(k).unwrap()).collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]), "key order");
    let v = json(&out);
    assert_eq!(ids(&v["selected"]), ["n1", "n3", "n4", "n5"]);
}

#[test]
fn scatter_command() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("nested/deeper/points.csv");
    let out = capslice(&["scatter", &path("library30.json"), "-o", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&out);
    assert!(v["correlation"].as_f64().unwrap() <= -0.9);
    assert!(v["distinct_points"].as_u64().unwrap() <= 6);
    let data = fs::read_to_string(&target).unwrap();
    assert!(data.starts_with("slice_id,avg_size,avg_depth,cohesion,coupling\n"));
    assert_eq!(data.lines().count(), 1015);
    // nothing but the target is left behind
    assert_eq!(fs::read_dir(target.parent().unwrap()).unwrap().count(), 1);

    let toy = dir.path().join("toy.csv");
    let v = json(&capslice(&["scatter", &path("toy6.json"), "-o", toy.to_str().unwrap()]));
    assert_eq!(v["correlation"], "n/a");
    assert_eq!(v["rows"], 2);

    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let under_file = blocker.join("out.csv");
    let out = capslice(&["scatter", &path("toy6.json"), "-o", under_file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn synth_command() {
    let out = capslice(&["synth", &path("synth_d1.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let core = v["d1"]["core_functions"].as_array().unwrap();
    assert_eq!(core.len(), 2);
    assert_eq!(ids(&core[0]["constituents"]), ["f11", "f13", "f14", "f15"]);

    let dir = tempfile::tempdir().unwrap();
    let empty = write_temp(&dir, "empty.json", r#"{"directives":["d1"],"functions":[],"associations":{"d1":["f1"]}}"#);
    let out = capslice(&["synth", &empty]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("functions: must not be empty"));

    let disjoint = write_temp(
        &dir,
        "disjoint.json",
        r#"{"directives":["d1"],"functions":[{"id":"a","members":["x"]},{"id":"b","members":["y"]},{"id":"c","members":["z"]}],
            "associations":{"d1":["a","b","c"]}}"#,
    );
    let v = json(&capslice(&["synth", &disjoint]));
    assert_eq!(v["d1"]["core_functions"].as_array().unwrap().len(), 3);
}

#[test]
fn export_dot_command() {
    let text = stdout(&capslice(&["export-dot", &path("toy6.json")]));
    assert_eq!(text.lines().filter(|l| l.contains("[shape=")).count(), 8);
    assert_eq!(text.lines().filter(|l| l.contains(" -> ")).count(), 7);
    assert!(text.contains("\"r\" [shape=doubleoctagon"));

    let lib = stdout(&capslice(&["export-dot", &path("library30.json")]));
    assert!(lib.contains("\"n8\" -> \"d2\" [label=\"10\", style=dashed]"));

    let dir = tempfile::tempdir().unwrap();
    let chain = write_temp(&dir, "chain.json", CHAIN);
    let text = stdout(&capslice(&["export-dot", &chain]));
    assert!(text.contains("\"r\" -> \"n1\" [label=\"0\", style=dotted]"));
}

#[test]
fn inspect_command() {
    let v = json(&capslice(&["inspect", "--node", "n2", &path("library30.json")]));
    let n2 = &v["nodes"][0];
    assert_eq!(n2["size"], 14);
    assert_eq!(n2["depth"], 1);
    let csv = stdout(&capslice(&["--format", "csv", "inspect", &path("toy6.json")]));
    assert!(csv.contains("na,function,2,2,1,0.85,d1 d2"));
}

#[test]
fn inputs_are_not_modified() {
    let before = fs::read(fixture("library30.json")).unwrap();
    for cmd in ["validate", "inspect", "slices", "rank", "select", "export-dot"] {
        capslice(&[cmd, &path("library30.json")]);
    }
    assert_eq!(fs::read(fixture("library30.json")).unwrap(), before);
}
