//! Coded findings shared by every validation pass.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Serialize, Serializer};

/// A source position. `file` is shared between every node parsed from the
/// same input so cloning a location stays cheap.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Loc {
    pub file: Arc<str>,
    pub line: u32,
    pub column: u32,
}

impl Loc {
    pub fn new(file: &Arc<str>, line: u32, column: u32) -> Self {
        Loc {
            file: Arc::clone(file),
            line,
            column,
        }
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.file.is_empty() {
            write!(f, "{}:{}", self.line, self.column)
        } else {
            write!(f, "{}:{}:{}", self.file, self.line, self.column)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Info,
    Warning,
    Error,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Info => "info",
            Severity::Warning => "warning",
            Severity::Error => "error",
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Severity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "info" => Ok(Severity::Info),
            "warning" | "warn" => Ok(Severity::Warning),
            "error" => Ok(Severity::Error),
            other => Err(format!("unknown severity `{other}`")),
        }
    }
}

macro_rules! codes {
    ($( $variant:ident => $text:literal, $sev:ident, $summary:literal; )*) => {
        /// The published diagnostic code table.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum Code {
            $( $variant, )*
        }

        impl Code {
            pub const ALL: &'static [Code] = &[ $( Code::$variant, )* ];

            pub fn as_str(self) -> &'static str {
                match self {
                    $( Code::$variant => $text, )*
                }
            }

            pub fn default_severity(self) -> Severity {
                match self {
                    $( Code::$variant => Severity::$sev, )*
                }
            }

            pub fn summary(self) -> &'static str {
                match self {
                    $( Code::$variant => $summary, )*
                }
            }
        }
    };
}

codes! {
    C01 => "CA-C01", Error, "start node has incoming precedence relations";
    C02 => "CA-C02", Error, "end node has outgoing precedence relations";
    C03 => "CA-C03", Error, "and node arity is neither a join (>=2 in, 1 out) nor a fork (1 in, >=2 out)";
    C04 => "CA-C04", Error, "or-merge arity violated";
    C05 => "CA-C05", Error, "communicative event number repeated within a process";
    C06 => "CA-C06", Error, "event variant number repeated within a specialised event";
    C07 => "CA-C07", Error, "formula bound to more than one role";
    C08 => "CA-C08", Error, "initial substructure is a specialisation";
    C09 => "CA-C09", Error, "field occurs more than once in its substructure";
    C10 => "CA-C10", Error, "aggregation substructure occurs more than once in its parent";
    C11 => "CA-C11", Error, "specialisation substructure occurs more than once in its parent";
    S01 => "CA-S01", Warning, "field property not recommended at this development stage";
    S02 => "CA-S02", Error, "formula references an unknown field";
    U01 => "CA-U01", Error, "trigger unity: event has no primary role";
    U02 => "CA-U02", Warning, "communication unity: message missing or conveys no input field";
    U03 => "CA-U03", Info, "reaction unity: event has no outgoing interaction nor reaction";
    G01 => "CA-G01", Info, "event name does not follow the actor + action + object pattern";
    G02 => "CA-G02", Warning, "all event variants lead to the same temporal path";
    G03 => "CA-G03", Warning, "diagram has too many elements";
    G04 => "CA-G04", Warning, "ingoing interaction label differs from its message structure name";
    G05 => "CA-G05", Info, "node unreachable from any start";
    G06 => "CA-G06", Info, "event specialisation nested deeper than two levels";
    P01 => "CA-P01", Error, "out-of-scope direct precedent missing from diagram";
    P02 => "CA-P02", Error, "out-of-scope reference has no full definition";
    P03 => "CA-P03", Info, "cross-diagram precedence not referenced";
    T01 => "CA-T01", Error, "template event identifier does not resolve";
    T02 => "CA-T02", Warning, "template primary actor differs from the diagram";
    T03 => "CA-T03", Warning, "template field descriptions do not match the message structure";
    T04 => "CA-T04", Info, "template linked communications miss an outgoing interaction";
    D01 => "CA-D01", Warning, "reference field domain is not a known business object";
    D02 => "CA-D02", Warning, "attribute declared with conflicting domains";
    D03 => "CA-D03", Warning, "class has more than one generated identifier";
}

impl Code {
    /// Metamodel constraints. Overrides never push these below warning.
    pub fn is_metamodel_constraint(self) -> bool {
        self.as_str().starts_with("CA-C")
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Code {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        Code::ALL
            .iter()
            .copied()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown diagnostic code `{s}`"))
    }
}

impl Serialize for Code {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub code: Code,
    pub severity: Severity,
    pub message: String,
    pub loc: Loc,
    pub element: Option<String>,
}

impl Diagnostic {
    /// A finding at the code's default severity.
    pub fn new(code: Code, loc: &Loc, message: impl Into<String>) -> Self {
        let message = message.into();
        debug_assert!(!message.is_empty());
        Diagnostic {
            code,
            severity: code.default_severity(),
            message,
            loc: loc.clone(),
            element: None,
        }
    }

    pub fn with_element(mut self, element: impl Into<String>) -> Self {
        self.element = Some(element.into());
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    fn sort_key(&self) -> (&str, u32, u32, Code, &str, Option<&str>, Severity) {
        (
            &self.loc.file,
            self.loc.line,
            self.loc.column,
            self.code,
            &self.message,
            self.element.as_deref(),
            self.severity,
        )
    }
}

impl PartialOrd for Diagnostic {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Diagnostic {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}[{}]: {}", self.loc, self.severity, self.code, self.message)?;
        if let Some(element) = &self.element {
            write!(f, " ({element})")?;
        }
        Ok(())
    }
}

/// JSON shape of one finding.
#[derive(Serialize)]
struct DiagnosticRecord<'a> {
    code: Code,
    severity: Severity,
    message: &'a str,
    file: &'a str,
    line: u32,
    column: u32,
    element: Option<&'a str>,
}

impl Serialize for Diagnostic {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        DiagnosticRecord {
            code: self.code,
            severity: self.severity,
            message: &self.message,
            file: &self.loc.file,
            line: self.loc.line,
            column: self.loc.column,
            element: self.element.as_deref(),
        }
        .serialize(serializer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn code_table_round_trips_through_text() {
        for code in Code::ALL {
            assert_eq!(code.as_str().parse::<Code>().unwrap(), *code);
        }
        assert!("CA-X99".parse::<Code>().is_err());
    }

    #[test]
    fn json_record_fields() {
        let file: Arc<str> = Arc::from("m.ced");
        let d = Diagnostic::new(Code::C01, &Loc::new(&file, 3, 7), "start has input").with_element("start");
        let v = serde_json::to_value(&d).unwrap();
        assert_eq!(v["code"], "CA-C01");
        assert_eq!(v["severity"], "error");
        assert_eq!(v["file"], "m.ced");
        assert_eq!(v["line"], 3);
        assert_eq!(v["column"], 7);
        assert_eq!(v["element"], "start");
    }
}
