//! The lint engine: metamodel constraints, unity criteria, methodological
//! guidelines, partition consistency, templates and derivation findings,
//! merged into one deterministic report.

mod guidelines;
mod metamodel;
mod unity;

use std::collections::{BTreeMap, BTreeSet};

use crate::ced::graph::PrecedenceGraph;
use crate::ced::ModelRepository;
use crate::diagnostic::{Code, Diagnostic, Severity};
use crate::exec::Execution;
use crate::msl::Stage;

pub use guidelines::{check_guidelines, follows_naming_pattern};
pub use metamodel::check_metamodel;
pub use unity::check_unity;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LintConfig {
    pub stage: Stage,
    pub severity_overrides: BTreeMap<Code, Severity>,
    pub disabled: BTreeSet<Code>,
    pub max_diagram_elements: usize,
    /// Read the or-node constraint literally: one incoming, two or more
    /// outgoing precedence relations.
    pub strict_table9_c4: bool,
}

impl Default for LintConfig {
    fn default() -> Self {
        LintConfig {
            stage: Stage::Analysis,
            severity_overrides: BTreeMap::new(),
            disabled: BTreeSet::new(),
            max_diagram_elements: 50,
            strict_table9_c4: false,
        }
    }
}

impl LintConfig {
    /// Severity a code is reported at. Metamodel constraints never drop
    /// below warning.
    pub fn severity_of(&self, code: Code) -> Severity {
        let sev = self
            .severity_overrides
            .get(&code)
            .copied()
            .unwrap_or_else(|| code.default_severity());
        if code.is_metamodel_constraint() {
            sev.max(Severity::Warning)
        } else {
            sev
        }
    }

    /// Filter, re-grade and sort findings produced outside [`run_lints`].
    pub fn report(&self, diags: Vec<Diagnostic>) -> LintReport {
        LintReport {
            diagnostics: self.apply(diags),
        }
    }

    fn apply(&self, mut diags: Vec<Diagnostic>) -> Vec<Diagnostic> {
        diags.retain(|d| !self.disabled.contains(&d.code));
        for d in &mut diags {
            if let Some(&sev) = self.severity_overrides.get(&d.code) {
                d.severity = if d.code.is_metamodel_constraint() {
                    sev.max(Severity::Warning)
                } else {
                    sev
                };
            }
        }
        diags.sort();
        diags.dedup();
        diags
    }
}

/// Sorted findings of one lint run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LintReport {
    pub diagnostics: Vec<Diagnostic>,
}

impl LintReport {
    pub fn count(&self, severity: Severity) -> usize {
        self.diagnostics.iter().filter(|d| d.severity == severity).count()
    }

    pub fn has_errors(&self) -> bool {
        self.count(Severity::Error) > 0
    }

    pub fn codes(&self) -> Vec<Code> {
        self.diagnostics.iter().map(|d| d.code).collect()
    }

    pub fn summary(&self) -> String {
        let plural = |n: usize, word: &str| format!("{n} {word}{}", if n == 1 { "" } else { "s" });
        format!(
            "{}, {}, {}",
            plural(self.count(Severity::Error), "error"),
            plural(self.count(Severity::Warning), "warning"),
            plural(self.count(Severity::Info), "info")
        )
    }

    /// One line per finding followed by a summary line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for d in &self.diagnostics {
            out.push_str(&d.to_string());
            out.push('\n');
        }
        out.push_str(&self.summary());
        out.push('\n');
        out
    }

    /// JSON array of findings.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.diagnostics).expect("diagnostics serialise") + "\n"
    }
}

/// Read-only inputs shared by every pass.
pub(crate) struct LintContext<'a> {
    pub repo: &'a ModelRepository,
    pub graph: PrecedenceGraph,
    pub cfg: &'a LintConfig,
    pub exec: Execution,
}

type Pass = fn(&LintContext<'_>) -> Vec<Diagnostic>;

fn structure_pass(cx: &LintContext<'_>) -> Vec<Diagnostic> {
    cx.exec.flat_map(&cx.repo.message_structures, |ms| {
        crate::msl::validate_structure(&crate::msl::desugar(ms), cx.cfg.stage)
    })
}

fn partition_pass(cx: &LintContext<'_>) -> Vec<Diagnostic> {
    crate::partition::check_partition_graph(cx.repo, &cx.graph)
}

fn template_pass(cx: &LintContext<'_>) -> Vec<Diagnostic> {
    cx.repo
        .templates
        .iter()
        .flat_map(|t| crate::templates::check_template(t, cx.repo))
        .collect()
}

fn derive_pass(cx: &LintContext<'_>) -> Vec<Diagnostic> {
    // A cyclic residue cannot arise from depth-based classification; if it
    // ever did there is no temporal order to derive in.
    crate::derive::derive_class_model_with(cx.repo, Execution::Sequential)
        .map(|d| d.diagnostics)
        .unwrap_or_default()
}

const PASSES: &[Pass] = &[
    metamodel::graph_pass,
    metamodel::event_pass,
    structure_pass,
    unity::pass,
    guidelines::pass,
    partition_pass,
    template_pass,
    derive_pass,
];

pub fn run_lints(repo: &ModelRepository, cfg: &LintConfig) -> LintReport {
    run_lints_with(repo, cfg, Execution::default())
}

/// Run every pass (concurrently under [`Execution::Parallel`]) and merge the
/// findings into one sorted report.
pub fn run_lints_with(repo: &ModelRepository, cfg: &LintConfig, exec: Execution) -> LintReport {
    let cx = LintContext {
        repo,
        graph: PrecedenceGraph::build(repo),
        cfg,
        exec,
    };
    cfg.report(exec.flat_map(PASSES, |pass| pass(&cx)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ced::{parse_model, SourceFile};

    const CLEAN: &str = r#"
process SALE "Sales" {
  event 1 "A client places an order" {
    primary Client; interface Salesman
    in "Order" message=ORDER
    out "New order" to "Sales manager"
  }
  start -> 1 -> end
}
messages {
  ORDER = < Order number : g : number + Request date : i : date >
}
"#;

    fn report(src: &str, cfg: &LintConfig) -> LintReport {
        let repo = parse_model(&[SourceFile::new("m.ced", src)]).unwrap();
        run_lints(&repo, cfg)
    }

    #[test]
    fn clean_model_has_no_findings() {
        let r = report(CLEAN, &LintConfig::default());
        assert!(r.diagnostics.is_empty(), "{}", r.to_text());
        assert_eq!(r.summary(), "0 errors, 0 warnings, 0 infos");
    }

    #[test]
    fn disable_and_override() {
        let src = CLEAN.replace("start -> 1 -> end", "start -> 1 -> end 1 -> start");
        let r = report(&src, &LintConfig::default());
        assert_eq!(r.codes(), [Code::C01]);
        let mut cfg = LintConfig::default();
        cfg.disabled.insert(Code::C01);
        assert!(report(&src, &cfg).diagnostics.is_empty());
        let mut cfg = LintConfig::default();
        cfg.severity_overrides.insert(Code::C01, Severity::Info);
        assert_eq!(report(&src, &cfg).diagnostics[0].severity, Severity::Warning);
        assert_eq!(cfg.severity_of(Code::C01), Severity::Warning);
        cfg.severity_overrides.insert(Code::G03, Severity::Error);
        assert_eq!(cfg.severity_of(Code::G03), Severity::Error);
    }

    #[test]
    fn strategies_agree() {
        let src = CLEAN.replace("start -> 1 -> end", "start -> 1 -> end 1 -> start end -> 1");
        let repo = parse_model(&[SourceFile::new("m.ced", src)]).unwrap();
        let cfg = LintConfig::default();
        let a = run_lints_with(&repo, &cfg, Execution::Sequential);
        let b = run_lints_with(&repo, &cfg, Execution::Parallel);
        assert_eq!(a, b);
        assert_eq!(a.to_text(), b.to_text());
        let json: serde_json::Value = serde_json::from_str(&a.to_json()).unwrap();
        assert_eq!(json.as_array().unwrap().len(), a.diagnostics.len());
    }
}
