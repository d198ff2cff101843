//! The command line, run in-process.

mod common;

use comm_analysis::cli::run_cli;
use common::corpus;

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("ca").chain(args.iter().copied());
    let code = run_cli(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn path(rel: &str) -> String {
    corpus(rel).to_string_lossy().into_owned()
}

#[test]
fn lint_clean_workspace() {
    let (code, out, err) = run(&["lint", &path("superstationery")]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out, "0 errors, 0 warnings, 0 infos\n");
}

#[test]
fn lint_seeded_error() {
    let (code, out, _) = run(&["lint", &path("seeded/c01")]);
    assert_eq!(code, 1);
    let lines: Vec<&str> = out.lines().filter(|l| l.contains("[CA-")).collect();
    assert_eq!(lines.len(), 1);
    assert!(lines[0].starts_with("model.ced:5:3: error[CA-C01]"), "{}", lines[0]);
}

#[test]
fn infos_and_warnings_do_not_fail() {
    assert_eq!(run(&["lint", &path("seeded/g01")]).0, 0);
    assert_eq!(run(&["lint", &path("seeded/g04")]).0, 0);
}

#[test]
fn json_findings_follow_the_schema() {
    let (code, out, _) = run(&["lint", "--format", "json", &path("seeded/p01")]);
    assert_eq!(code, 1);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let items = v.as_array().unwrap();
    assert_eq!(items.len(), 1);
    let obj = items[0].as_object().unwrap();
    let keys: Vec<&str> = obj.keys().map(String::as_str).collect();
    assert_eq!(keys, ["code", "column", "element", "file", "line", "message", "severity"]);
    assert_eq!(obj["code"], "CA-P01");
    assert_eq!(obj["severity"], "error");
    assert_eq!(obj["file"], "b.ced");
    assert!(obj["line"].as_u64().unwrap() > 0);
}

#[test]
fn order_places_sale_1_before_sale_2() {
    let (code, out, _) = run(&["order", &path("superstationery")]);
    assert_eq!(code, 0);
    let ids: Vec<&str> = out.lines().map(|l| l.split('\t').next().unwrap()).collect();
    let pos = |id: &str| ids.iter().position(|x| *x == id).unwrap();
    assert!(pos("SALE 1") < pos("SALE 2"));
    assert!(out.contains("SALE 1\tA client places an order\n"));
}

#[test]
fn render_has_legend_and_interaction_styles() {
    let (code, out, _) = run(&["render", "--dot", &path("superstationery")]);
    assert_eq!(code, 0);
    assert!(out.starts_with("// Legend"));
    assert!(out.contains("\"role:Client\" -> \"SALE 1\" [style=bold"));
    assert!(out.contains("\"SALE 1\" -> \"role:Sales manager\" [style=dotted"));
    assert!(out.contains("\"SALE 3.2\" -> \"SALE 2\" [style=dashed, constraint=false];"));
}

#[test]
fn derive_exports() {
    let (code, json, _) = run(&["derive", "--json", &path("superstationery")]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert!(v["classes"].as_array().unwrap().iter().any(|c| c["name"] == "Order"));
    let (code, dot, _) = run(&["derive", "--dot", &path("superstationery")]);
    assert_eq!(code, 0);
    assert!(dot.starts_with("digraph classes"));
    assert!(dot.contains("\"Order\" -> \"Destination\" [dir=back, arrowtail=diamond"));
    assert_eq!(run(&["derive", "--dot", "--json", &path("superstationery")]).0, 2);
}

#[test]
fn template_commands() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("sale2.cet");
    let (code, out, err) = run(&["template", "gen", "SALE 2", &path("superstationery"), "-o", target.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(out.is_empty());
    let text = std::fs::read_to_string(&target).unwrap();
    assert!(text.starts_with("event \"SALE 2\"\n"));
    assert!(text.contains("structure: SUPPLIER ASSIGNMENT"));

    let (code, out, _) = run(&["template", "check", &path("superstationery")]);
    assert_eq!((code, out.as_str()), (0, "0 errors, 0 warnings, 0 infos\n"));
    let (code, out, _) = run(&["template", "check", &path("seeded/t01")]);
    assert_eq!(code, 1);
    assert!(out.contains("CA-T01"));

    let (code, out, _) = run(&["template", "render", "SALE 1", &path("superstationery")]);
    assert_eq!(code, 0);
    assert!(out.starts_with("# SALE 1. A client places an order\n"));
    let (code, _, err) = run(&["template", "gen", "SALE 99", &path("superstationery")]);
    assert_eq!(code, 2);
    assert!(err.contains("unknown event `SALE 99`"));
}

#[test]
fn parse_summary() {
    let (code, out, _) = run(&["parse", &path("superstationery")]);
    assert_eq!(code, 0);
    assert!(out.starts_with("processes: 6\nevents: 14\n"));
    let (_, json, _) = run(&["parse", "--format=json", &path("superstationery")]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["message_structures"], 14);
}

#[test]
fn failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.ced"), "process A { event 1 \"a\" { primary } }").unwrap();
    let (code, out, err) = run(&["lint", dir.path().to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.starts_with("error: bad.ced:1:"), "{err}");

    assert_eq!(run(&["lint", "--stage", "deployment", &path("superstationery")]).0, 2);
    assert_eq!(run(&[]).0, 2);
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("template"));
}

#[test]
fn config_file_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("strict.conf");
    std::fs::write(&conf, "severity.CA-P01 = warning\n").unwrap();
    let (code, out, _) = run(&["lint", "--config", conf.to_str().unwrap(), &path("seeded/p01")]);
    assert_eq!(code, 0);
    assert!(out.contains("warning[CA-P01]"));
    std::fs::write(&conf, "disable = CA-P01\n").unwrap();
    let (code, out, _) = run(&["lint", "--config", conf.to_str().unwrap(), &path("seeded/p01")]);
    assert_eq!((code, out.as_str()), (0, "0 errors, 0 warnings, 0 infos\n"));
    std::fs::write(&conf, "stage = sometime\n").unwrap();
    let (code, _, err) = run(&["lint", "--config", conf.to_str().unwrap(), &path("seeded/p01")]);
    assert_eq!(code, 2);
    assert!(err.contains("strict.conf:1"), "{err}");

    // The fixture's own ca.conf selects design-memory; the flag overrides it.
    let (code, out, _) = run(&["lint", "--stage", "analysis", &path("seeded/s02")]);
    assert_eq!(code, 1);
    assert!(out.contains("CA-S01"));
}

#[test]
fn strict_or_node_reading() {
    let dir = tempfile::tempdir().unwrap();
    let src = std::fs::read_to_string(corpus("seeded/c04/model.ced")).unwrap();
    let src = src.replace("start -> 1 -> J -> 2 -> end", "start -> 1 -> J -> 2 -> end\n  J -> \"ITEM 3\"");
    let src = src.replace("  node or J", "  event 3 \"Clerk archives item\" { primary Clerk; in \"Archive\" message=ARCHIVE; out \"Archived\" to Manager }\n  node or J");
    std::fs::write(dir.path().join("model.ced"), src).unwrap();
    std::fs::copy(corpus("seeded/c04/messages.msl"), dir.path().join("messages.msl")).unwrap();
    let root = dir.path().to_str().unwrap();
    let (code, out, _) = run(&["lint", root]);
    assert_eq!(code, 1, "{out}");
    let (code, out, _) = run(&["lint", "--strict-table9-c4", root]);
    assert_eq!(code, 0, "{out}");
}
