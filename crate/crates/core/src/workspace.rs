//! Model workspaces: recursive source discovery and the `ca.conf` file.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use walkdir::WalkDir;

use crate::ced::SourceFile;
use crate::diagnostic::{Code, Severity};
use crate::lint::LintConfig;

/// Default configuration file name, looked up at the workspace root.
pub const CONFIG_FILE: &str = "ca.conf";

const EXTENSIONS: &[&str] = &["ced", "msl", "cet"];

#[derive(Debug, thiserror::Error)]
pub enum WorkspaceError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}:{line}: {message}", path.display())]
    Config { path: PathBuf, line: usize, message: String },
}

/// A directory of model sources plus optional configuration.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub root: PathBuf,
    pub config: LintConfig,
    /// Sources in lexicographic order of their root-relative path.
    pub sources: Vec<SourceFile>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> WorkspaceError + '_ {
    move |source| WorkspaceError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Model files under `root`, sorted. Hidden entries and `target`
/// directories are skipped.
pub fn discover(root: &Path) -> Result<Vec<PathBuf>, WorkspaceError> {
    let mut files = Vec::new();
    let walker = WalkDir::new(root).sort_by_file_name().into_iter().filter_entry(|e| {
        let name = e.file_name().to_string_lossy();
        e.depth() == 0 || !(name.starts_with('.') || (e.file_type().is_dir() && name == "target"))
    });
    for entry in walker {
        let entry = entry.map_err(|e| WorkspaceError::Io {
            path: e.path().unwrap_or(root).to_path_buf(),
            source: e.into(),
        })?;
        let is_model = entry
            .path()
            .extension()
            .and_then(|x| x.to_str())
            .is_some_and(|x| EXTENSIONS.contains(&x));
        if entry.file_type().is_file() && is_model {
            files.push(entry.into_path());
        }
    }
    files.sort();
    Ok(files)
}

/// Path relative to the root with `/` separators, so reports do not depend
/// on where the workspace lives.
fn display_path(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

impl Workspace {
    /// Load sources under `root`. `config` overrides `root/ca.conf`.
    pub fn load(root: &Path, config: Option<&Path>) -> Result<Workspace, WorkspaceError> {
        let mut sources = Vec::new();
        for path in discover(root)? {
            let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
            sources.push(SourceFile::new(display_path(root, &path), text));
        }
        sources.sort_by(|a, b| a.path.cmp(&b.path));
        let default_config = root.join(CONFIG_FILE);
        let config_path = match config {
            Some(p) => Some(p.to_path_buf()),
            None if default_config.is_file() => Some(default_config),
            None => None,
        };
        let config = match config_path {
            Some(p) => {
                let text = std::fs::read_to_string(&p).map_err(io_err(&p))?;
                parse_config(&text).map_err(|(line, message)| WorkspaceError::Config { path: p, line, message })?
            }
            None => LintConfig::default(),
        };
        Ok(Workspace {
            root: root.to_path_buf(),
            config,
            sources,
        })
    }
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" | "yes" | "on" => Ok(true),
        "false" | "no" | "off" => Ok(false),
        other => Err(format!("expected true or false, found `{other}`")),
    }
}

/// Parse `key = value` configuration text.
///
/// ```text
/// stage = design-memory
/// max_diagram_elements = 60
/// disable = CA-G01, CA-G03
/// severity.CA-U03 = warning
/// strict_table9_c4 = false
/// ```
pub fn parse_config(text: &str) -> Result<LintConfig, (usize, String)> {
    let mut cfg = LintConfig::default();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |m: String| (n + 1, m);
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, found `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "stage" => cfg.stage = value.parse().map_err(err)?,
            "max_diagram_elements" => {
                cfg.max_diagram_elements = value
                    .parse()
                    .map_err(|_| err(format!("expected a non-negative integer, found `{value}`")))?
            }
            "strict_table9_c4" => cfg.strict_table9_c4 = parse_bool(value).map_err(err)?,
            "disable" => {
                for code in value.split(',').map(str::trim).filter(|c| !c.is_empty()) {
                    cfg.disabled.insert(Code::from_str(code).map_err(err)?);
                }
            }
            _ => match key.strip_prefix("severity.") {
                Some(code) => {
                    let code = Code::from_str(code).map_err(err)?;
                    let sev = Severity::from_str(value).map_err(err)?;
                    cfg.severity_overrides.insert(code, sev);
                }
                None => return Err(err(format!("unknown key `{key}`"))),
            },
        }
    }
    Ok(cfg)
}
