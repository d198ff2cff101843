use std::collections::{BTreeMap, BTreeSet};

use super::{LintConfig, LintContext};
use crate::ced::graph::{NodeKind, PrecedenceGraph};
use crate::ced::{AndKind, EventVariant, ModelRepository};
use crate::diagnostic::{Code, Diagnostic};
use crate::exec::Execution;
use crate::msl::{AcquisitionOp, MessageStructure};

/// Metamodel constraints CA-C01..C11 over the whole repository.
pub fn check_metamodel(repo: &ModelRepository, cfg: &LintConfig) -> Vec<Diagnostic> {
    let cx = LintContext {
        repo,
        graph: PrecedenceGraph::build(repo),
        cfg,
        exec: Execution::Sequential,
    };
    let mut out = graph_pass(&cx);
    out.extend(event_pass(&cx));
    for ms in &repo.message_structures {
        let found = crate::msl::validate_structure(&crate::msl::desugar(ms), cfg.stage);
        out.extend(found.into_iter().filter(|d| d.code.is_metamodel_constraint()));
    }
    out.retain(|d| d.code.is_metamodel_constraint());
    out.sort();
    out
}

/// C01..C04 on the merged graph, plus unreachable nodes (G05).
pub(super) fn graph_pass(cx: &LintContext<'_>) -> Vec<Diagnostic> {
    let g = &cx.graph;
    let mut out = Vec::new();
    for e in g.edges() {
        let (s, t) = (&g.nodes()[e.source], &g.nodes()[e.target]);
        if t.kind == NodeKind::Start {
            out.push(
                Diagnostic::new(Code::C01, &e.loc, format!("start node has an incoming precedence from {}", s.key))
                    .with_element(format!("{} -> start", s.key)),
            );
        }
        if s.kind == NodeKind::End {
            out.push(
                Diagnostic::new(Code::C02, &e.loc, format!("end node has an outgoing precedence to {}", t.key))
                    .with_element(format!("end -> {}", t.key)),
            );
        }
    }
    for (i, n) in g.nodes().iter().enumerate() {
        let (ins, outs) = (g.incoming(i).count(), g.outgoing(i).count());
        let join = ins >= 2 && outs == 1;
        let fork = ins == 1 && outs >= 2;
        let arity = format!("{ins} incoming, {outs} outgoing");
        match n.kind {
            NodeKind::And(kind) => {
                let problem = match kind {
                    Some(AndKind::Join) if !join => Some("an and-join needs two or more incoming and exactly one outgoing precedence"),
                    Some(AndKind::Fork) if !fork => Some("an and-fork needs exactly one incoming and two or more outgoing precedences"),
                    None if !join && !fork => Some("an and node must be a join (two or more in, one out) or a fork (one in, two or more out)"),
                    _ => None,
                };
                if let Some(p) = problem {
                    out.push(
                        Diagnostic::new(Code::C03, &n.loc, format!("{p}; `{}` has {arity}", n.key))
                            .with_element(n.key.to_string()),
                    );
                }
            }
            NodeKind::Or => {
                let (ok, rule) = if cx.cfg.strict_table9_c4 {
                    (fork, "exactly one incoming and two or more outgoing")
                } else {
                    (join, "two or more incoming and exactly one outgoing")
                };
                if !ok {
                    out.push(
                        Diagnostic::new(
                            Code::C04,
                            &n.loc,
                            format!("or node `{}` has {arity}; it needs {rule} precedences", n.key),
                        )
                        .with_element(n.key.to_string()),
                    );
                }
            }
            _ => {}
        }
    }
    let depths = g.depths();
    for key in depths.unreachable() {
        if let Some(n) = g.node(key) {
            out.push(
                Diagnostic::new(Code::G05, &n.loc, format!("{key} cannot be reached from any start"))
                    .with_element(key.to_string()),
            );
        }
    }
    out
}

fn check_variants(event_id: &str, variants: &[EventVariant], level: usize, out: &mut Vec<Diagnostic>) {
    let mut seen: BTreeSet<u32> = BTreeSet::new();
    for v in variants {
        if !seen.insert(v.number) {
            out.push(
                Diagnostic::new(
                    Code::C06,
                    &v.loc,
                    format!("variant number {} is repeated within {event_id}", v.number),
                )
                .with_element(v.id.clone()),
            );
        }
        if level == 3 {
            out.push(
                Diagnostic::new(Code::G06, &v.loc, format!("{} is nested {level} levels deep", v.id))
                    .with_element(v.id.clone()),
            );
        }
        check_variants(&v.id, &v.variants, level + 1, out);
    }
}

/// C05, C06, C07 and deep nesting (G06).
pub(super) fn event_pass(cx: &LintContext<'_>) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut numbers: BTreeMap<&str, usize> = BTreeMap::new();
    for e in &cx.repo.events {
        let n = numbers.entry(e.id.as_str()).or_insert(0);
        *n += 1;
        if *n == 2 {
            out.push(
                Diagnostic::new(
                    Code::C05,
                    &e.loc,
                    format!("event number {} is repeated within process {}", e.number, e.process),
                )
                .with_element(e.id.clone()),
            );
        }
        check_variants(&e.id, &e.variants, 1, &mut out);
    }
    for ms in &cx.repo.message_structures {
        formula_roles(ms, &mut out);
    }
    out
}

/// C07: a formula is an initialisation of a non-derived field or the
/// derivation of a derived one, never both.
fn formula_roles(ms: &MessageStructure, out: &mut Vec<Diagnostic>) {
    for (path, f) in ms.fields() {
        let p = &f.props;
        let derived = p.op == AcquisitionOp::Derivation;
        let problem = match (p.init_formula.is_some(), p.derivation_formula.is_some()) {
            (true, true) => Some("has both an initialisation and a derivation formula"),
            (false, true) if !derived => Some("has a derivation formula but its acquisition operation is not d"),
            (true, false) if derived => Some("is derived but has an initialisation formula"),
            _ => None,
        };
        if let Some(problem) = problem {
            out.push(
                Diagnostic::new(Code::C07, &f.loc, format!("field `{}` {problem}", f.name))
                    .with_element(format!("{}/{}", ms.name, path.segments[1..].join("/"))),
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ced::{parse_model, SourceFile};

    fn codes(src: &str, cfg: &LintConfig) -> Vec<Code> {
        let repo = parse_model(&[SourceFile::new("m.ced", src)]).unwrap();
        check_metamodel(&repo, cfg).into_iter().map(|d| d.code).collect()
    }

    fn dflt(src: &str) -> Vec<Code> {
        codes(src, &LintConfig::default())
    }

    const EV: &str = "event 1 \"a\" {} event 2 \"b\" {} event 3 \"c\" {}";

    #[test]
    fn start_and_end() {
        assert_eq!(dflt(&format!("process A {{ {EV} start -> 1 -> end 2 -> start }}")), [Code::C01]);
        assert_eq!(dflt(&format!("process A {{ {EV} start -> 1 -> end end -> 2 }}")), [Code::C02]);
    }

    #[test]
    fn and_nodes() {
        let join = format!("process A {{ {EV} node and-join J 1 -> J 2 -> J J -> 3 }}");
        assert!(dflt(&join).is_empty());
        let bad = format!("process A {{ {EV} node and-join J 1 -> J J -> 3 }}");
        assert_eq!(dflt(&bad), [Code::C03]);
        let inferred_fork = format!("process A {{ {EV} node and F 1 -> F F -> 2 F -> 3 }}");
        assert!(dflt(&inferred_fork).is_empty());
        let ambiguous = format!("process A {{ {EV} node and X 1 -> X X -> 2 }}");
        assert_eq!(dflt(&ambiguous), [Code::C03]);
    }

    #[test]
    fn or_nodes_both_readings() {
        let merge = format!("process A {{ {EV} node or M 1 -> M 2 -> M M -> 3 }}");
        assert!(dflt(&merge).is_empty());
        let strict = LintConfig {
            strict_table9_c4: true,
            ..LintConfig::default()
        };
        assert_eq!(codes(&merge, &strict), [Code::C04]);
        let branch = format!("process A {{ {EV} node or B 1 -> B B -> 2 B -> 3 }}");
        assert_eq!(dflt(&branch), [Code::C04]);
        assert!(codes(&branch, &strict).is_empty());
    }

    #[test]
    fn numbering() {
        assert_eq!(dflt("process A { event 1 \"a\" {} event 1 \"b\" {} }"), [Code::C05]);
        let v = "process A { variant-event 1 \"a\" { variant 1 \"x\" {} variant 1 \"y\" {} } }";
        assert_eq!(dflt(v), [Code::C06]);
    }

    #[test]
    fn formulas() {
        let both = "messages { A = < p:i:number + t:d:number >\nfield t { formula=\"(:p)\" init=\"0\" } }";
        assert_eq!(dflt(both), [Code::C07]);
        let wrong_op = "messages { A = < p:i:number + t:i:number >\nfield t { formula=\"(:p)\" } }";
        assert_eq!(dflt(wrong_op), [Code::C07]);
        let ok = "messages { A = < p:i:number + t:d:number + q:i:number >\nfield t { formula=\"(:p)\" }\nfield q { init=\"1\" } }";
        assert!(dflt(ok).is_empty());
    }

    #[test]
    fn structural_constraints_are_included() {
        assert_eq!(dflt("messages { A = [ x | y ] }"), [Code::C08]);
        assert_eq!(dflt("messages { A = < x + x > }"), [Code::C09]);
    }
}
