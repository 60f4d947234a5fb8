//! Lossless model of record instance (`.db`) files.
//!
//! A [`Document`] is an ordered list of [`SourceItem`]s. Every item keeps the
//! exact bytes it was parsed from; serialization emits those bytes for every
//! item whose payload still matches what was parsed, and canonical text for
//! anything new or edited.

mod parse;
pub(crate) mod write;

use thiserror::Error;

use crate::dbd::TypeRegistry;
use crate::diag::{Code, Diagnostic, Location};

pub use parse::parse_db;
pub use write::{canonical_text, serialize_db};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LineEnding {
    #[default]
    Lf,
    CrLf,
}

impl LineEnding {
    pub fn as_str(self) -> &'static str {
        match self {
            LineEnding::Lf => "\n",
            LineEnding::CrLf => "\r\n",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ItemKind {
    RecordBlock,
    CommentLine,
    LayoutLine,
    BlankLine,
    OpaqueLine,
}

/// A verbatim piece of source: a comment, blank, layout or opaque line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Line {
    raw: Vec<u8>,
    line: usize,
}

impl Line {
    pub(crate) fn new(raw: Vec<u8>, line: usize) -> Self {
        Line { raw, line }
    }

    /// Builds a line from text; a terminator is added when serialized.
    pub fn from_text(text: &str) -> Self {
        Line { raw: text.as_bytes().to_vec(), line: 0 }
    }

    pub fn raw(&self) -> &[u8] {
        &self.raw
    }

    /// 1-based source line, 0 for lines created after parsing.
    pub fn line(&self) -> usize {
        self.line
    }

    /// The line's text without its terminator.
    pub fn text(&self) -> String {
        let mut end = self.raw.len();
        while end > 0 && matches!(self.raw[end - 1], b'\n' | b'\r') {
            end -= 1;
        }
        String::from_utf8_lossy(&self.raw[..end]).into_owned()
    }
}

#[derive(Debug, Clone)]
pub enum SourceItem {
    Record(RecordInstance),
    Comment(Line),
    Layout(Line),
    Blank(Line),
    Opaque(Line),
}

impl SourceItem {
    pub fn kind(&self) -> ItemKind {
        match self {
            SourceItem::Record(_) => ItemKind::RecordBlock,
            SourceItem::Comment(_) => ItemKind::CommentLine,
            SourceItem::Layout(_) => ItemKind::LayoutLine,
            SourceItem::Blank(_) => ItemKind::BlankLine,
            SourceItem::Opaque(_) => ItemKind::OpaqueLine,
        }
    }

    pub fn as_record(&self) -> Option<&RecordInstance> {
        match self {
            SourceItem::Record(r) => Some(r),
            _ => None,
        }
    }

    pub fn as_line(&self) -> Option<&Line> {
        match self {
            SourceItem::Record(_) => None,
            SourceItem::Comment(l) | SourceItem::Layout(l) | SourceItem::Blank(l) | SourceItem::Opaque(l) => Some(l),
        }
    }

    /// True when serialization will emit canonical text for some part of
    /// this item instead of its original bytes.
    pub fn is_dirty(&self) -> bool {
        match self {
            SourceItem::Record(r) => r.is_dirty(),
            _ => false,
        }
    }
}

/// Original bytes of a syntactic piece together with the payload parsed from
/// them. The bytes are reused only while the payload is unchanged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Origin<T> {
    pub raw: Vec<u8>,
    pub value: T,
}

#[derive(Debug, Clone)]
pub enum BodyItem {
    Field(FieldEntry),
    Comment(Line),
    Blank(Line),
    Opaque(Line),
}

#[derive(Debug, Clone)]
pub struct FieldEntry {
    name: String,
    value: String,
    line: usize,
    /// Trailing `# ...` comment on the field's line, kept on re-emission.
    trail: Option<String>,
    origin: Option<Origin<(String, String)>>,
}

impl FieldEntry {
    pub fn new(name: impl Into<String>, value: impl Into<String>) -> Self {
        FieldEntry {
            name: name.into(),
            value: value.into(),
            line: 0,
            trail: None,
            origin: None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self) -> &str {
        &self.value
    }

    pub fn line(&self) -> usize {
        self.line
    }

    pub fn set_value(&mut self, value: impl Into<String>) {
        self.value = value.into();
    }

    /// The original line text, if this entry was parsed.
    pub fn raw(&self) -> Option<&[u8]> {
        self.origin.as_ref().map(|o| o.raw.as_slice())
    }

    pub fn is_dirty(&self) -> bool {
        match &self.origin {
            Some(o) => o.value.0 != self.name || o.value.1 != self.value,
            None => true,
        }
    }

    pub(crate) fn forget_origin(&mut self) {
        self.origin = None;
        self.line = 0;
    }
}

#[derive(Debug, Clone)]
pub struct RecordInstance {
    record_type: String,
    name: String,
    name_quoted: bool,
    line: usize,
    header_trail: Option<String>,
    header: Option<Origin<(String, String)>>,
    body: Vec<BodyItem>,
    /// `None` for records built in memory; empty for an unterminated block.
    closing: Option<Vec<u8>>,
}

impl RecordInstance {
    pub fn new(record_type: impl Into<String>, name: impl Into<String>) -> Self {
        RecordInstance {
            record_type: record_type.into(),
            name: name.into(),
            name_quoted: false,
            line: 0,
            header_trail: None,
            header: None,
            body: Vec::new(),
            closing: None,
        }
    }

    pub fn record_type(&self) -> &str {
        &self.record_type
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// 1-based line of the `record(` keyword, 0 for records created in memory.
    pub fn line(&self) -> usize {
        self.line
    }

    pub fn body(&self) -> &[BodyItem] {
        &self.body
    }

    pub fn fields(&self) -> impl Iterator<Item = &FieldEntry> {
        self.body.iter().filter_map(|b| match b {
            BodyItem::Field(f) => Some(f),
            _ => None,
        })
    }

    /// Explicit value of a field; the last occurrence wins.
    pub fn field(&self, name: &str) -> Option<&str> {
        self.fields().filter(|f| f.name == name).last().map(|f| f.value.as_str())
    }

    pub fn field_entry(&self, name: &str) -> Option<&FieldEntry> {
        self.fields().filter(|f| f.name == name).last()
    }

    /// Field names and effective values in body order, one entry per name.
    pub fn field_values(&self) -> Vec<(&str, &str)> {
        let mut out: Vec<(&str, &str)> = Vec::new();
        for f in self.fields() {
            match out.iter_mut().find(|(n, _)| *n == f.name) {
                Some(slot) => slot.1 = &f.value,
                None => out.push((&f.name, &f.value)),
            }
        }
        out
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    /// Sets the last occurrence of `name`, or appends a new field after the
    /// last existing field.
    pub fn set_field(&mut self, name: &str, value: impl Into<String>) {
        let value = value.into();
        let existing = self
            .body
            .iter_mut()
            .rev()
            .find_map(|b| match b {
                BodyItem::Field(f) if f.name == name => Some(f),
                _ => None,
            });
        if let Some(f) = existing {
            f.value = value;
            return;
        }
        let at = self
            .body
            .iter()
            .rposition(|b| matches!(b, BodyItem::Field(_)))
            .map_or(self.body.len(), |i| i + 1);
        self.body.insert(at, BodyItem::Field(FieldEntry::new(name, value)));
    }

    /// Removes every entry for `name`; returns whether anything was removed.
    pub fn remove_field(&mut self, name: &str) -> bool {
        let before = self.body.len();
        self.body.retain(|b| !matches!(b, BodyItem::Field(f) if f.name == name));
        before != self.body.len()
    }

    pub fn fields_mut(&mut self) -> impl Iterator<Item = &mut FieldEntry> {
        self.body.iter_mut().filter_map(|b| match b {
            BodyItem::Field(f) => Some(f),
            _ => None,
        })
    }

    pub fn header_is_dirty(&self) -> bool {
        match &self.header {
            Some(o) => o.value.0 != self.record_type || o.value.1 != self.name,
            None => true,
        }
    }

    pub fn is_dirty(&self) -> bool {
        self.header_is_dirty()
            || self.closing.is_none()
            || self.body.iter().any(|b| matches!(b, BodyItem::Field(f) if f.is_dirty()))
    }

    /// Drops all original text so the whole record is emitted canonically.
    pub fn forget_origin(&mut self) {
        self.header = None;
        self.header_trail = None;
        self.closing = None;
        self.line = 0;
        for f in self.fields_mut() {
            f.forget_origin();
        }
    }
}

/// Lossless, ordered representation of one `.db` file.
#[derive(Debug, Clone, Default)]
pub struct Document {
    source_name: String,
    items: Vec<SourceItem>,
    line_ending: LineEnding,
}

impl Document {
    pub fn new(source_name: impl Into<String>) -> Self {
        Document {
            source_name: source_name.into(),
            items: Vec::new(),
            line_ending: LineEnding::Lf,
        }
    }

    pub fn source_name(&self) -> &str {
        &self.source_name
    }

    pub fn set_source_name(&mut self, name: impl Into<String>) {
        self.source_name = name.into();
    }

    pub fn line_ending(&self) -> LineEnding {
        self.line_ending
    }

    pub fn items(&self) -> &[SourceItem] {
        &self.items
    }

    pub fn item(&self, index: usize) -> Option<&SourceItem> {
        self.items.get(index)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn dirty_flags(&self) -> Vec<bool> {
        self.items.iter().map(SourceItem::is_dirty).collect()
    }

    pub fn records(&self) -> impl Iterator<Item = &RecordInstance> {
        self.items.iter().filter_map(SourceItem::as_record)
    }

    pub fn record_count(&self) -> usize {
        self.records().count()
    }

    /// First record block with `name`.
    pub fn get_record(&self, name: &str) -> Option<&RecordInstance> {
        self.records().find(|r| r.name == name)
    }

    pub fn record_index(&self, name: &str) -> Option<usize> {
        self.items
            .iter()
            .position(|i| matches!(i, SourceItem::Record(r) if r.name == name))
    }

    pub fn get_record_mut(&mut self, name: &str) -> Option<&mut RecordInstance> {
        self.items.iter_mut().find_map(|i| match i {
            SourceItem::Record(r) if r.name == name => Some(r),
            _ => None,
        })
    }

    pub fn records_mut(&mut self) -> impl Iterator<Item = &mut RecordInstance> {
        self.items.iter_mut().filter_map(|i| match i {
            SourceItem::Record(r) => Some(r),
            _ => None,
        })
    }

    pub fn insert_item(&mut self, index: usize, item: SourceItem) {
        self.items.insert(index, item);
    }

    pub fn remove_item(&mut self, index: usize) -> SourceItem {
        self.items.remove(index)
    }

    pub fn replace_item(&mut self, index: usize, item: SourceItem) -> SourceItem {
        std::mem::replace(&mut self.items[index], item)
    }

    pub fn push_item(&mut self, item: SourceItem) {
        self.items.push(item);
    }

    /// Position where a new record goes: before the trailing run of layout
    /// lines (and blank lines between them), or at the end.
    pub fn append_position(&self) -> usize {
        let mut idx = self.items.len();
        let mut first_layout = None;
        while idx > 0 {
            match &self.items[idx - 1] {
                SourceItem::Layout(_) => first_layout = Some(idx - 1),
                SourceItem::Blank(_) => {}
                _ => break,
            }
            idx -= 1;
        }
        first_layout.unwrap_or(self.items.len())
    }

    pub fn layout_lines(&self) -> impl Iterator<Item = &Line> {
        self.items.iter().filter_map(|i| match i {
            SourceItem::Layout(l) => Some(l),
            _ => None,
        })
    }

    /// Structural checks that depend only on the document: duplicate record
    /// names and duplicate fields.
    pub fn check(&self) -> Vec<Diagnostic> {
        let mut diags = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for rec in self.records() {
            let loc = |line: usize, path: String| {
                if line > 0 {
                    Location::at(line, 1)
                } else {
                    Location::path(path)
                }
            };
            if !seen.insert(rec.name.as_str()) {
                diags.push(Diagnostic::error(
                    Code::DuplicateRecordName,
                    loc(rec.line, rec.name.clone()),
                    format!("record name '{}' is already defined", rec.name),
                ));
            }
            let mut fields = std::collections::HashSet::new();
            for f in rec.fields() {
                if !fields.insert(f.name.as_str()) {
                    diags.push(Diagnostic::warning(
                        Code::DuplicateField,
                        loc(f.line, format!("{}.{}", rec.name, f.name)),
                        format!("field {} set more than once in '{}'; last value wins", f.name, rec.name),
                    ));
                }
            }
        }
        diags
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("record type '{0}' is not defined")]
    UnknownRecordType(String),
    #[error("field {field} is not defined for record type '{record_type}'")]
    UnknownField { record_type: String, field: String },
}

/// Explicit value when set, otherwise the dbd default. `is_default` compares
/// strings; no numeric normalisation is attempted.
pub fn effective_field_value(
    rec: &RecordInstance,
    field: &str,
    reg: &TypeRegistry,
) -> Result<(String, bool), FieldError> {
    let rt = reg
        .record_type(&rec.record_type)
        .ok_or_else(|| FieldError::UnknownRecordType(rec.record_type.clone()))?;
    let def = rt.field(field).ok_or_else(|| FieldError::UnknownField {
        record_type: rec.record_type.clone(),
        field: field.to_string(),
    })?;
    let value = rec.field(field).unwrap_or(&def.default_value).to_string();
    let is_default = value == def.default_value;
    Ok((value, is_default))
}

/// True when `name` can appear unquoted as a record name.
pub fn is_valid_record_name(name: &str) -> bool {
    !name.is_empty()
        && !name
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '(' | ')' | '{' | '}' | '"' | '.'))
}

/// Record types and field names: `[A-Za-z0-9_]+`.
pub fn is_identifier(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_field_appends_after_last_field() {
        let (mut doc, _) = parse_db(b"record(ai,x) {\n  field(A,\"1\")\n  # tail\n}\n");
        let rec = doc.get_record_mut("x").unwrap();
        rec.set_field("B", "2");
        assert!(matches!(rec.body()[1], BodyItem::Field(ref f) if f.name() == "B"));
        assert_eq!(
            serialize_db(&doc),
            b"record(ai,x) {\n  field(A,\"1\")\n  field(B,\"2\")\n  # tail\n}\n"
        );
    }

    #[test]
    fn record_name_rules() {
        assert!(is_valid_record_name("grp1:ao001"));
        assert!(!is_valid_record_name("a.b"));
        assert!(!is_valid_record_name(""));
        assert!(!is_valid_record_name("a b"));
        assert!(!is_valid_record_name("a\"b"));
    }

    #[test]
    fn duplicate_field_last_wins() {
        let (doc, diags) = parse_db(b"record(ai,x) {\n  field(A,\"1\")\n  field(A,\"2\")\n}\n");
        assert_eq!(doc.get_record("x").unwrap().field("A"), Some("2"));
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, Code::DuplicateField);
        assert_eq!(diags[0].location, Location::at(3, 1));
    }

    #[test]
    fn append_position_skips_trailing_layout() {
        let (doc, _) = parse_db(b"record(a,x) {\n}\n\n#! a\n\n#! b\n");
        assert_eq!(doc.append_position(), 2);
        let (doc, _) = parse_db(b"record(a,x) {\n}\n");
        assert_eq!(doc.append_position(), 1);
    }
}
