use std::collections::BTreeSet;

use super::{LintConfig, LintContext};
use crate::ced::graph::PrecedenceGraph;
use crate::ced::{Direction, EventVariant, ModelRepository, Node, NodeKey};
use crate::diagnostic::{Code, Diagnostic, Loc};
use crate::exec::Execution;

const ARTICLES: &[&str] = &["a", "an", "the"];

/// Shallow check of the naming guideline: an optional article, an actor
/// noun phrase, a verb in the third person within the next three words,
/// then an object. `A client places an order` passes; `Order entry` fails.
pub fn follows_naming_pattern(name: &str) -> bool {
    let words: Vec<&str> = name.split_whitespace().collect();
    let first = match words.first() {
        Some(w) if ARTICLES.contains(&w.to_lowercase().as_str()) => 1,
        Some(_) => 0,
        None => return false,
    };
    (first + 1..=first + 3).any(|v| {
        words.get(v).is_some_and(|w| {
            w.chars().next().is_some_and(char::is_lowercase)
                && w.ends_with('s')
                && w.chars().all(char::is_alphabetic)
                && v + 1 < words.len()
        })
    })
}

/// Naming (G01), variant paths (G02), diagram size (G03) and interaction
/// naming (G04).
pub fn check_guidelines(repo: &ModelRepository, cfg: &LintConfig) -> Vec<Diagnostic> {
    let cx = LintContext {
        repo,
        graph: PrecedenceGraph::build(repo),
        cfg,
        exec: Execution::Sequential,
    };
    let mut out = pass(&cx);
    out.sort();
    out
}

fn squash(s: &str) -> String {
    s.split_whitespace().collect::<String>().to_lowercase()
}

fn variant_groups<'a>(
    owner: &'a str,
    owner_loc: &'a Loc,
    variants: &'a [EventVariant],
    out: &mut Vec<(&'a str, &'a Loc, &'a [EventVariant])>,
) {
    if !variants.is_empty() {
        out.push((owner, owner_loc, variants));
    }
    for v in variants {
        variant_groups(&v.id, &v.loc, &v.variants, out);
    }
}

pub(super) fn pass(cx: &LintContext<'_>) -> Vec<Diagnostic> {
    let mut out = cx.exec.flat_map(&cx.repo.events, |e| {
        let mut found = Vec::new();
        if !follows_naming_pattern(&e.name) {
            found.push(
                Diagnostic::new(
                    Code::G01,
                    &e.loc,
                    format!("event name \"{}\" does not read as actor + action + object", e.name),
                )
                .with_element(e.id.clone()),
            );
        }
        let mut groups = Vec::new();
        variant_groups(&e.id, &e.loc, &e.variants, &mut groups);
        for (owner, loc, variants) in groups {
            // Repeated variant numbers (C06) name one node; compare it once.
            let ids: BTreeSet<&str> = variants.iter().map(|v| v.id.as_str()).collect();
            let paths: Vec<BTreeSet<NodeKey>> = ids
                .iter()
                .map(|id| cx.graph.direct_successors(&NodeKey::Event(id.to_string())).into_iter().collect())
                .collect();
            let shared = (0..paths.len()).any(|i| (i + 1..paths.len()).any(|j| paths[i] == paths[j]));
            if shared {
                found.push(
                    Diagnostic::new(
                        Code::G02,
                        loc,
                        format!("variants of {owner} lead to the same successors; each variant should lead to a different temporal path"),
                    )
                    .with_element(owner.to_string()),
                );
            }
        }
        for i in e.all_interactions() {
            if let (Direction::Ingoing, Some(m)) = (i.direction, &i.message_ref) {
                if squash(&i.name) != squash(m) {
                    found.push(
                        Diagnostic::new(
                            Code::G04,
                            &i.loc,
                            format!("ingoing interaction \"{}\" conveys message structure `{m}`; use the same name", i.name),
                        )
                        .with_element(e.id.clone()),
                    );
                }
            }
        }
        found
    });
    for d in &cx.repo.diagrams {
        let mut count = d.edges.len();
        for m in &d.members {
            match &m.node {
                Node::Event(id) => {
                    count += 1;
                    if let Some(e) = cx.repo.event(id) {
                        count += e.all_interactions().len();
                    }
                }
                Node::Variant(_) | Node::And { .. } | Node::Or(_) => count += 1,
                _ => {}
            }
        }
        if count > cx.cfg.max_diagram_elements {
            out.push(
                Diagnostic::new(
                    Code::G03,
                    &d.loc,
                    format!(
                        "diagram \"{}\" has {count} elements (limit {}); consider splitting it",
                        d.name, cx.cfg.max_diagram_elements
                    ),
                )
                .with_element(d.name.clone()),
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ced::{parse_model, SourceFile};

    fn codes(src: &str, cfg: &LintConfig) -> Vec<Code> {
        let repo = parse_model(&[SourceFile::new("m.ced", src)]).unwrap();
        check_guidelines(&repo, cfg).into_iter().map(|d| d.code).collect()
    }

    #[test]
    fn naming_pattern() {
        for ok in [
            "A client places an order",
            "Supplier evaluates order",
            "The sales manager assigns a supplier",
            "Logistics department ships goods",
        ] {
            assert!(follows_naming_pattern(ok), "{ok}");
        }
        for bad in ["Order entry", "Client accepts", "", "Registration of new supplier"] {
            assert!(!follows_naming_pattern(bad), "{bad}");
        }
    }

    #[test]
    fn variants_sharing_a_path() {
        let same = "process A { event 1 \"Client places order\" {} variant-event 2 \"Client chooses option\" { \
            variant 1 \"x\" {} variant 2 \"y\" {} } event 3 \"Client receives goods\" {} 1 -> 2 2.1 -> 3 2.2 -> 3 }";
        assert_eq!(codes(same, &LintConfig::default()), [Code::G02]);
        let distinct = same.replace("2.2 -> 3", "2.2 -> 1");
        assert!(codes(&distinct, &LintConfig::default()).is_empty());
    }

    #[test]
    fn diagram_size() {
        let mut src = String::from("process A {");
        for n in 1..=30 {
            src.push_str(&format!(" event {n} \"Client places order\" {{}}"));
        }
        for n in 1..30 {
            src.push_str(&format!(" {n} -> {}", n + 1));
        }
        src.push('}');
        assert_eq!(codes(&src, &LintConfig::default()), [Code::G03]);
        let roomy = LintConfig {
            max_diagram_elements: 59,
            ..LintConfig::default()
        };
        assert!(codes(&src, &roomy).is_empty());
    }

    #[test]
    fn interaction_naming() {
        let ok = "process A { event 1 \"Client places order\" { in \"Order\" message=ORDER } }";
        assert!(codes(ok, &LintConfig::default()).is_empty());
        let bad = ok.replace("\"Order\"", "\"Purchase\"");
        assert_eq!(codes(&bad, &LintConfig::default()), [Code::G04]);
    }
}
