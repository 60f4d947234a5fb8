use std::fmt;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Severity {
    Error,
    Warning,
}

impl Severity {
    pub fn label(self) -> &'static str {
        match self {
            Severity::Error => "ERROR",
            Severity::Warning => "WARNING",
        }
    }
}

/// Stable diagnostic codes. The string form is part of the CLI and HTTP
/// contracts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Code {
    SyntaxError,
    DuplicateRecordName,
    DuplicateField,
    UnknownRecordType,
    UnknownField,
    BrokenLink,
    UnknownModifier,
    MalformedDirective,
    UnknownDirective,
    DuplicateDirective,
    DanglingChain,
    CyclicChain,
    IncludeCycle,
    IncludeNotFound,
    UnknownMenu,
    EmptyRecordType,
    DuplicateRecordType,
    SkippedConstruct,
    UnknownProperty,
    OrphanLayout,
}

impl Code {
    pub fn as_str(self) -> &'static str {
        match self {
            Code::SyntaxError => "SyntaxError",
            Code::DuplicateRecordName => "DuplicateRecordName",
            Code::DuplicateField => "DuplicateField",
            Code::UnknownRecordType => "UnknownRecordType",
            Code::UnknownField => "UnknownField",
            Code::BrokenLink => "BrokenLink",
            Code::UnknownModifier => "UnknownModifier",
            Code::MalformedDirective => "MalformedDirective",
            Code::UnknownDirective => "UnknownDirective",
            Code::DuplicateDirective => "DuplicateDirective",
            Code::DanglingChain => "DanglingChain",
            Code::CyclicChain => "CyclicChain",
            Code::IncludeCycle => "IncludeCycle",
            Code::IncludeNotFound => "IncludeNotFound",
            Code::UnknownMenu => "UnknownMenu",
            Code::EmptyRecordType => "EmptyRecordType",
            Code::DuplicateRecordType => "DuplicateRecordType",
            Code::SkippedConstruct => "SkippedConstruct",
            Code::UnknownProperty => "UnknownProperty",
            Code::OrphanLayout => "OrphanLayout",
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where a diagnostic points: a 1-based source position, or a record /
/// `record.FIELD` path for diagnostics computed on an edited document.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(untagged)]
pub enum Location {
    Position { line: usize, column: usize },
    Path { path: String },
}

impl Location {
    pub fn at(line: usize, column: usize) -> Self {
        Location::Position { line, column }
    }

    pub fn path(path: impl Into<String>) -> Self {
        Location::Path { path: path.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: Code,
    pub message: String,
    pub location: Location,
    /// Source file, when it differs from the file being processed (dbd includes).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
}

impl Diagnostic {
    pub fn error(code: Code, location: Location, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            code,
            message: message.into(),
            location,
            file: None,
        }
    }

    pub fn warning(code: Code, location: Location, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            code,
            message: message.into(),
            location,
            file: None,
        }
    }

    pub fn in_file(mut self, file: impl Into<String>) -> Self {
        self.file = Some(file.into());
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let loc = match &self.location {
            Location::Position { line, column } => format!("{line}:{column}"),
            Location::Path { path } => path.clone(),
        };
        write!(f, "{} {} {} {}", self.severity.label(), self.code, loc, self.message)
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}
