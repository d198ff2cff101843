//! The `ca` command line.
//!
//! Exit status: 0 when no error-severity finding is reported, 1 when one
//! is, 2 for parse, I/O and usage failures.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::ced::{parse_model, ModelRepository};
use crate::diagnostic::{Diagnostic, Severity};
use crate::lint::{run_lints, LintConfig, LintReport};
use crate::msl::Stage;
use crate::workspace::Workspace;

#[derive(Debug, Parser)]
#[command(name = "ca", version, about = "Check and transform Communication Analysis requirements models")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Development stage that decides which field properties are mandatory
    #[arg(long, global = true, value_parser = parse_stage)]
    stage: Option<Stage>,
    /// Output format for findings
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Configuration file (defaults to ROOT/ca.conf when present)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Or nodes must have one incoming and at least two outgoing precedences
    #[arg(long, global = true)]
    strict_table9_c4: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

fn parse_stage(s: &str) -> Result<Stage, String> {
    s.parse()
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse every model file and print a summary
    Parse(Root),
    /// Run all checks and print the findings
    Lint(Root),
    /// Print the merged diagram
    Render {
        /// Graphviz output (the only renderer)
        #[arg(long, default_value_t = true)]
        dot: bool,
        #[command(flatten)]
        root: Root,
    },
    /// Derive the class diagram
    Derive {
        /// Graphviz output
        #[arg(long, conflicts_with = "json")]
        dot: bool,
        /// JSON output (default)
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        root: Root,
    },
    /// Event specification templates
    #[command(subcommand)]
    Template(TemplateCommand),
    /// Print fully defined events in temporal order
    Order(Root),
}

#[derive(Debug, Subcommand)]
enum TemplateCommand {
    /// Generate a skeleton template for an event
    Gen {
        id: String,
        #[command(flatten)]
        root: Root,
        /// Write to a file instead of standard output
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check every template in the workspace against the model
    Check(Root),
    /// Render an event's template (or a generated skeleton) as Markdown
    Render {
        id: String,
        #[command(flatten)]
        root: Root,
    },
}

#[derive(Debug, Args)]
struct Root {
    /// Workspace directory
    #[arg(default_value = ".")]
    root: PathBuf,
}

struct Ctx<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    color: bool,
}

/// Failure that ends the command with status 2.
struct Fatal(String);

impl<E: std::fmt::Display> From<E> for Fatal {
    fn from(e: E) -> Self {
        Fatal(e.to_string())
    }
}

/// Run the CLI without colour.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_cli_with(args, out, err, false)
}

/// Run the CLI, colouring severities when `color` is set.
pub fn run_cli_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write, color: bool) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    2
                }
            };
        }
    };
    let mut cx = Ctx { out, err, color };
    match execute(&cli, &mut cx) {
        Ok(code) => code,
        Err(Fatal(msg)) => {
            let _ = writeln!(cx.err, "error: {msg}");
            2
        }
    }
}

fn load(root: &Path, g: &Global) -> Result<(ModelRepository, LintConfig), Fatal> {
    let ws = Workspace::load(root, g.config.as_deref())?;
    let mut cfg = ws.config;
    if let Some(stage) = g.stage {
        cfg.stage = stage;
    }
    cfg.strict_table9_c4 |= g.strict_table9_c4;
    let repo = parse_model(&ws.sources)?;
    Ok((repo, cfg))
}

fn paint(sev: Severity, color: bool) -> String {
    if !color {
        return sev.to_string();
    }
    let code = match sev {
        Severity::Error => "31",
        Severity::Warning => "33",
        Severity::Info => "36",
    };
    format!("\x1b[1;{code}m{sev}\x1b[0m")
}

fn diagnostic_line(d: &Diagnostic, color: bool) -> String {
    let mut s = format!("{}: {}[{}]: {}", d.loc, paint(d.severity, color), d.code, d.message);
    if let Some(el) = &d.element {
        s.push_str(&format!(" ({el})"));
    }
    s
}

fn print_report(report: &LintReport, g: &Global, cx: &mut Ctx<'_>) -> Result<i32, Fatal> {
    match g.format {
        Format::Json => write!(cx.out, "{}", report.to_json())?,
        Format::Text => {
            for d in &report.diagnostics {
                writeln!(cx.out, "{}", diagnostic_line(d, cx.color))?;
            }
            writeln!(cx.out, "{}", report.summary())?;
        }
    }
    Ok(i32::from(report.has_errors()))
}

fn execute(cli: &Cli, cx: &mut Ctx<'_>) -> Result<i32, Fatal> {
    let g = &cli.global;
    match &cli.command {
        Command::Parse(r) => {
            let (repo, _) = load(&r.root, g)?;
            let counts = [
                ("processes", repo.processes.len()),
                ("events", repo.events.len()),
                ("diagrams", repo.diagrams.len()),
                ("message_structures", repo.message_structures.len()),
                ("templates", repo.templates.len()),
            ];
            match g.format {
                Format::Json => {
                    let map: serde_json::Map<String, serde_json::Value> =
                        counts.iter().map(|(k, v)| (k.to_string(), (*v).into())).collect();
                    writeln!(cx.out, "{}", serde_json::to_string_pretty(&map)?)?;
                }
                Format::Text => {
                    for (k, v) in counts {
                        writeln!(cx.out, "{}: {v}", k.replace('_', " "))?;
                    }
                }
            }
            Ok(0)
        }
        Command::Lint(r) => {
            let (repo, cfg) = load(&r.root, g)?;
            print_report(&run_lints(&repo, &cfg), g, cx)
        }
        Command::Render { root, .. } => {
            let (repo, _) = load(&root.root, g)?;
            write!(cx.out, "{}", crate::render::merged_dot(&repo))?;
            Ok(0)
        }
        Command::Derive { dot, root, .. } => {
            let (repo, cfg) = load(&root.root, g)?;
            let derivation = match crate::derive::derive_class_model(&repo) {
                Ok(d) => d,
                Err(e) => {
                    writeln!(cx.err, "error: {e}")?;
                    return Ok(1);
                }
            };
            let text = if *dot {
                crate::derive::to_dot(&derivation.model)
            } else {
                crate::derive::to_json(&derivation.model)
            };
            write!(cx.out, "{text}")?;
            let report = cfg.report(derivation.diagnostics);
            for d in &report.diagnostics {
                writeln!(cx.err, "{}", diagnostic_line(d, cx.color))?;
            }
            Ok(i32::from(report.has_errors()))
        }
        Command::Template(TemplateCommand::Gen { id, root, output }) => {
            let (repo, _) = load(&root.root, g)?;
            let spec = crate::templates::generate_template(&repo, id)?;
            let text = crate::templates::write_template(&spec);
            match output {
                Some(path) => std::fs::write(path, text).map_err(|e| Fatal(format!("{}: {e}", path.display())))?,
                None => write!(cx.out, "{text}")?,
            }
            Ok(0)
        }
        Command::Template(TemplateCommand::Check(r)) => {
            let (repo, cfg) = load(&r.root, g)?;
            let diags = repo
                .templates
                .iter()
                .flat_map(|t| crate::templates::check_template(t, &repo))
                .collect();
            print_report(&cfg.report(diags), g, cx)
        }
        Command::Template(TemplateCommand::Render { id, root }) => {
            let (repo, _) = load(&root.root, g)?;
            let spec = match repo.template_for(repo.resolve_alias(id)) {
                Some(t) => t.clone(),
                None => crate::templates::generate_template(&repo, id)?,
            };
            let structure = spec.message.structure_ref.as_deref().and_then(|n| repo.structure(n));
            write!(cx.out, "{}", crate::templates::render_template(&spec, structure))?;
            Ok(0)
        }
        Command::Order(r) => {
            let (repo, _) = load(&r.root, g)?;
            match crate::ced::topological_order(&repo) {
                Ok(events) => {
                    for e in events {
                        writeln!(cx.out, "{}\t{}", e.id, e.name)?;
                    }
                    Ok(0)
                }
                Err(e) => {
                    writeln!(cx.err, "error: {e}")?;
                    Ok(1)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run_cli(args.iter().copied(), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn help_and_usage() {
        let (code, out, _) = run(&["ca", "--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("lint"));
        let (code, _, err) = run(&["ca", "frobnicate"]);
        assert_eq!(code, 2);
        assert!(!err.is_empty());
    }

    #[test]
    fn missing_root_is_io_failure() {
        let (code, _, err) = run(&["ca", "lint", "/definitely/not/here"]);
        assert_eq!(code, 2);
        assert!(err.starts_with("error:"));
    }

    #[test]
    fn colour_only_on_request() {
        let d = Diagnostic::new(crate::diagnostic::Code::U01, &crate::diagnostic::Loc::default(), "m");
        assert!(!diagnostic_line(&d, false).contains('\x1b'));
        assert!(diagnostic_line(&d, true).contains("\x1b[1;"));
    }
}
