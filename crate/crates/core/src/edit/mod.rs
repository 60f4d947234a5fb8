//! Editing sessions: validated commands over a document and its layout,
//! with undo/redo and a copy/paste clipboard.

mod change;
mod command;

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use thiserror::Error;

use crate::db::{is_valid_record_name, parse_db, Document, Line, RecordInstance, SourceItem};
use crate::dbd::{FieldKind, TypeRegistry};
use crate::diag::{Code, Diagnostic, Location};
use crate::layout::{
    auto_layout_with, check_layout, decode_layout, record_of, render_document, resolve_chain, ConnectorLayout,
    FieldNodeLayout, GridConfig, LayoutTable, RecordLayout,
};
use crate::topology::{build_graph, parse_link_value, LinkGraph};

use change::{Change, Tx};
pub use command::Command;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("a record named '{0}' already exists")]
    NameCollision(String),
    #[error("no record named '{0}'")]
    UnknownRecord(String),
    #[error("record type '{0}' is not defined")]
    UnknownRecordType(String),
    #[error("field {field} is not defined for record type '{record_type}'")]
    UnknownField { record_type: String, field: String },
    #[error("'{0}' is not a valid record name")]
    InvalidName(String),
    #[error("'{0}' is not of the form record.FIELD")]
    InvalidFieldId(String),
    #[error("{0} is not a link field")]
    NotALinkField(String),
    #[error("{0} does not link to a record")]
    NoLinkTarget(String),
    #[error("no connector '{0}'")]
    UnknownConnector(String),
    #[error("field {0} is not set")]
    FieldNotSet(String),
    #[error("the clipboard is empty")]
    EmptyClipboard,
}

impl ValidationError {
    pub fn code(&self) -> &'static str {
        match self {
            ValidationError::NameCollision(_) => "NameCollision",
            ValidationError::UnknownRecord(_) => "UnknownRecord",
            ValidationError::UnknownRecordType(_) => "UnknownRecordType",
            ValidationError::UnknownField { .. } => "UnknownField",
            ValidationError::InvalidName(_) => "InvalidName",
            ValidationError::InvalidFieldId(_) => "InvalidFieldId",
            ValidationError::NotALinkField(_) => "NotALinkField",
            ValidationError::NoLinkTarget(_) => "NoLinkTarget",
            ValidationError::UnknownConnector(_) => "UnknownConnector",
            ValidationError::FieldNotSet(_) => "FieldNotSet",
            ValidationError::EmptyClipboard => "EmptyClipboard",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EditError {
    #[error(transparent)]
    Invalid(#[from] ValidationError),
    #[error("nothing to undo")]
    NothingToUndo,
    #[error("nothing to redo")]
    NothingToRedo,
}

impl EditError {
    pub fn code(&self) -> &'static str {
        match self {
            EditError::Invalid(v) => v.code(),
            EditError::NothingToUndo => "NothingToUndo",
            EditError::NothingToRedo => "NothingToRedo",
        }
    }
}

#[derive(Debug, Clone)]
struct LogEntry {
    command: Command,
    changes: Vec<Change>,
}

#[derive(Debug, Clone)]
struct ClipLink {
    field: String,
    connectors: Vec<ConnectorLayout>,
    terminal: String,
}

#[derive(Debug, Clone)]
struct ClipRecord {
    record: RecordInstance,
    layout: Option<RecordLayout>,
    field_nodes: Vec<(String, FieldNodeLayout)>,
    links: Vec<ClipLink>,
}

/// Record type, name and `(field, value)` pairs.
pub type RecordContent = (String, String, Vec<(String, String)>);

/// Content-only snapshot used to compare sessions: record types, names and
/// field values in document order, plus the layout table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticState {
    pub records: Vec<RecordContent>,
    pub layout: LayoutTable,
}

/// An open document with its layout, command history and clipboard.
#[derive(Debug, Clone)]
pub struct Session {
    document: Document,
    layout: LayoutTable,
    baseline: LayoutTable,
    registry: Arc<TypeRegistry>,
    separator: char,
    grid: GridConfig,
    /// Diagnostics tied to the loaded text: syntax errors and defective
    /// layout lines.
    load_diagnostics: Vec<Diagnostic>,
    log: Vec<LogEntry>,
    cursor: usize,
    history_limit: Option<usize>,
    saved_at: Option<usize>,
    clipboard: Vec<ClipRecord>,
}

const LOAD_CODES: [Code; 4] = [
    Code::SyntaxError,
    Code::MalformedDirective,
    Code::UnknownDirective,
    Code::DuplicateDirective,
];

fn split_field_id(id: &str) -> Result<(&str, &str), ValidationError> {
    match id.split_once('.') {
        Some((r, f)) if !r.is_empty() && !f.is_empty() => Ok((r, f)),
        _ => Err(ValidationError::InvalidFieldId(id.to_string())),
    }
}

fn unqualified(name: &str, separator: char) -> &str {
    name.rsplit(separator).next().unwrap_or(name)
}

/// `reference` with a leading `old` record name replaced by `new`, when it
/// is `old` itself or starts with `old.` or `old/`.
fn rename_ref(reference: &str, old: &str, new: &str) -> Option<String> {
    let rest = reference.strip_prefix(old)?;
    if rest.is_empty() || rest.starts_with('.') || rest.starts_with('/') {
        Some(format!("{new}{rest}"))
    } else {
        None
    }
}

impl Session {
    /// Parses `bytes` and decodes its layout. The returned diagnostics are
    /// the same as [`Session::diagnostics`] for the fresh session.
    pub fn open(
        source_name: impl Into<String>,
        bytes: &[u8],
        registry: Arc<TypeRegistry>,
        separator: char,
    ) -> (Session, Vec<Diagnostic>) {
        let (mut document, parse_diags) = parse_db(bytes);
        document.set_source_name(source_name);
        let (layout, layout_diags) = decode_layout(&document);
        let mut load: Vec<Diagnostic> = parse_diags.into_iter().filter(|d| LOAD_CODES.contains(&d.code)).collect();
        load.extend(layout_diags.into_iter().filter(|d| LOAD_CODES.contains(&d.code)));
        let session = Session {
            document,
            baseline: layout.clone(),
            layout,
            registry,
            separator,
            grid: GridConfig::default(),
            load_diagnostics: load,
            log: Vec::new(),
            cursor: 0,
            history_limit: None,
            saved_at: Some(0),
            clipboard: Vec::new(),
        };
        let diags = session.diagnostics();
        (session, diags)
    }

    /// Keeps at most `limit` commands in the undo history.
    pub fn with_history_limit(mut self, limit: usize) -> Self {
        self.history_limit = Some(limit);
        self.enforce_limit();
        self
    }

    pub fn with_grid(mut self, grid: GridConfig) -> Self {
        self.grid = grid;
        self
    }

    pub fn document(&self) -> &Document {
        &self.document
    }

    pub fn layout(&self) -> &LayoutTable {
        &self.layout
    }

    /// The stored layout completed with auto-layout positions for records
    /// that have none.
    pub fn effective_layout(&self) -> LayoutTable {
        auto_layout_with(&self.document, &self.layout, self.separator, &self.grid)
    }

    pub fn registry(&self) -> &TypeRegistry {
        &self.registry
    }

    pub fn separator(&self) -> char {
        self.separator
    }

    pub fn graph(&self) -> LinkGraph {
        build_graph(&self.document, &self.registry, self.separator).0
    }

    /// Load-time syntax and layout-line problems followed by the current
    /// structural, link and layout checks. Position-located diagnostics are
    /// ordered by line; path-located ones follow.
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        let mut out = self.load_diagnostics.clone();
        out.extend(self.document.check());
        out.extend(build_graph(&self.document, &self.registry, self.separator).1);
        out.extend(check_layout(&self.document, &self.registry, &self.layout));
        out.sort_by_key(|d| match d.location {
            Location::Position { line, column } => (0, line, column),
            Location::Path { .. } => (1, 0, 0),
        });
        out
    }

    pub fn can_undo(&self) -> bool {
        self.cursor > 0
    }

    pub fn can_redo(&self) -> bool {
        self.cursor < self.log.len()
    }

    /// Commands currently applied, oldest first.
    pub fn history(&self) -> impl Iterator<Item = &Command> {
        self.log[..self.cursor].iter().map(|e| &e.command)
    }

    pub fn is_dirty(&self) -> bool {
        self.saved_at != Some(self.cursor)
    }

    pub fn clipboard_len(&self) -> usize {
        self.clipboard.len()
    }

    /// Current file contents. Identical to the loaded bytes until something
    /// changes.
    pub fn render(&self) -> Vec<u8> {
        render_document(&self.document, &self.layout, &self.baseline)
    }

    /// Like [`Session::render`], and marks the current state as saved.
    pub fn save(&mut self) -> Vec<u8> {
        self.saved_at = Some(self.cursor);
        self.render()
    }

    pub fn semantic_state(&self) -> SemanticState {
        SemanticState {
            records: self
                .document
                .records()
                .map(|r| {
                    let fields = r.fields().map(|f| (f.name().to_string(), f.value().to_string())).collect();
                    (r.record_type().to_string(), r.name().to_string(), fields)
                })
                .collect(),
            layout: self.layout.clone(),
        }
    }

    /// Validates and applies `command`. On error nothing changes.
    pub fn apply(&mut self, command: Command) -> Result<Vec<Diagnostic>, EditError> {
        let ctx = Ctx {
            registry: self.registry.clone(),
            separator: self.separator,
            grid: self.grid,
        };
        let mut tx = Tx::new(&mut self.document, &mut self.layout);
        let result = run(&mut tx, &ctx, &self.clipboard, &command);
        if let Err(e) = result {
            tx.rollback();
            return Err(e.into());
        }
        let changes = tx.finish();
        self.log.truncate(self.cursor);
        if matches!(self.saved_at, Some(m) if m > self.cursor) {
            self.saved_at = None;
        }
        self.log.push(LogEntry { command, changes });
        self.cursor += 1;
        self.enforce_limit();
        Ok(self.diagnostics())
    }

    fn enforce_limit(&mut self) {
        let Some(limit) = self.history_limit else { return };
        while self.log.len() > limit {
            self.log.remove(0);
            self.cursor = self.cursor.saturating_sub(1);
            self.saved_at = match self.saved_at {
                Some(0) | None => None,
                Some(m) => Some(m - 1),
            };
        }
    }

    pub fn undo(&mut self) -> Result<&Command, EditError> {
        if self.cursor == 0 {
            return Err(EditError::NothingToUndo);
        }
        self.cursor -= 1;
        let entry = &self.log[self.cursor];
        for c in entry.changes.iter().rev() {
            c.inverse().apply(&mut self.document, &mut self.layout);
        }
        Ok(&entry.command)
    }

    pub fn redo(&mut self) -> Result<&Command, EditError> {
        if self.cursor == self.log.len() {
            return Err(EditError::NothingToRedo);
        }
        let entry = &self.log[self.cursor];
        for c in &entry.changes {
            c.apply(&mut self.document, &mut self.layout);
        }
        self.cursor += 1;
        Ok(&entry.command)
    }

    /// Replaces the clipboard with the named records, their layout, and the
    /// link routes that stay within the selection.
    pub fn copy(&mut self, names: &[String]) -> Result<usize, ValidationError> {
        let selected: HashSet<&str> = names.iter().map(String::as_str).collect();
        let mut clip = Vec::new();
        let mut done = HashSet::new();
        for name in names {
            let rec = self
                .document
                .get_record(name)
                .ok_or_else(|| ValidationError::UnknownRecord(name.clone()))?;
            if !done.insert(name.as_str()) {
                continue;
            }
            let prefix = format!("{name}.");
            let field_nodes = self
                .layout
                .field_nodes
                .iter()
                .filter(|(id, _)| id.starts_with(&prefix))
                .map(|(id, f)| (id[prefix.len()..].to_string(), f.clone()))
                .collect();
            let mut links = Vec::new();
            for src in self.layout.links.keys().filter(|s| s.starts_with(&prefix)) {
                let Ok(route) = resolve_chain(&self.layout, src) else { continue };
                if !selected.contains(record_of(&route.terminal)) {
                    continue;
                }
                let connectors = route
                    .waypoints
                    .iter()
                    .filter_map(|w| self.layout.connectors.get(&w.id).cloned())
                    .collect();
                links.push(ClipLink {
                    field: src[prefix.len()..].to_string(),
                    connectors,
                    terminal: route.terminal,
                });
            }
            clip.push(ClipRecord {
                record: rec.clone(),
                layout: self.layout.records.get(name).cloned(),
                field_nodes,
                links,
            });
        }
        self.clipboard = clip;
        Ok(self.clipboard.len())
    }
}

struct Ctx {
    registry: Arc<TypeRegistry>,
    separator: char,
    grid: GridConfig,
}

impl Ctx {
    fn field_kind(&self, record_type: &str, field: &str) -> Option<FieldKind> {
        self.registry.lookup_field(record_type, field).map(|d| d.kind())
    }

    /// Record index and its link field, validating that `source` names one.
    fn link_field<'d>(&self, doc: &'d Document, source: &str) -> Result<(usize, &'d RecordInstance, String), ValidationError> {
        let (rname, fname) = split_field_id(source)?;
        let idx = doc
            .record_index(rname)
            .ok_or_else(|| ValidationError::UnknownRecord(rname.to_string()))?;
        let rec = doc.items()[idx].as_record().expect("record index");
        let rt = self
            .registry
            .record_type(rec.record_type())
            .ok_or_else(|| ValidationError::UnknownRecordType(rec.record_type().to_string()))?;
        let def = rt.field(fname).ok_or_else(|| ValidationError::UnknownField {
            record_type: rec.record_type().to_string(),
            field: fname.to_string(),
        })?;
        if !def.kind().is_link() {
            return Err(ValidationError::NotALinkField(source.to_string()));
        }
        Ok((idx, rec, fname.to_string()))
    }
}

fn record_at<'d>(doc: &'d Document, name: &str) -> Result<(usize, &'d RecordInstance), ValidationError> {
    let idx = doc
        .record_index(name)
        .ok_or_else(|| ValidationError::UnknownRecord(name.to_string()))?;
    Ok((idx, doc.items()[idx].as_record().expect("record index")))
}

fn run(tx: &mut Tx, ctx: &Ctx, clipboard: &[ClipRecord], command: &Command) -> Result<(), ValidationError> {
    match command {
        Command::CreateRecord { record_type, name, x, y } => {
            if ctx.registry.record_type(record_type).is_none() {
                return Err(ValidationError::UnknownRecordType(record_type.clone()));
            }
            check_new_name(tx.doc, name)?;
            insert_record(tx, RecordInstance::new(record_type.clone(), name.clone()));
            match (x, y) {
                (Some(x), Some(y)) => tx.set_record_layout(
                    name,
                    Some(RecordLayout {
                        x: *x,
                        y: *y,
                        flag_a: 0,
                        flag_b: 1,
                        label: unqualified(name, ctx.separator).to_string(),
                    }),
                ),
                _ => materialize_positions(tx, ctx, std::slice::from_ref(name)),
            }
        }
        Command::DeleteRecord { name } => {
            let (idx, _) = record_at(tx.doc, name)?;
            tx.remove_item(idx);
            if tx.doc.get_record(name).is_none() {
                remove_record_layout(tx, name);
            }
        }
        Command::RenameRecord { old, new } => {
            record_at(tx.doc, old)?;
            check_new_name(tx.doc, new)?;
            rename(tx, ctx, old, new);
        }
        Command::SetField { record, field, value } => {
            let (idx, rec) = record_at(tx.doc, record)?;
            let rt = ctx
                .registry
                .record_type(rec.record_type())
                .ok_or_else(|| ValidationError::UnknownRecordType(rec.record_type().to_string()))?;
            if rt.field(field).is_none() {
                return Err(ValidationError::UnknownField {
                    record_type: rec.record_type().to_string(),
                    field: field.clone(),
                });
            }
            let mut rec = rec.clone();
            rec.set_field(field, value.clone());
            tx.replace_item(idx, SourceItem::Record(rec));
        }
        Command::RemoveField { record, field } => {
            let (idx, rec) = record_at(tx.doc, record)?;
            if rec.field(field).is_none() {
                return Err(ValidationError::FieldNotSet(format!("{record}.{field}")));
            }
            let mut rec = rec.clone();
            rec.remove_field(field);
            tx.replace_item(idx, SourceItem::Record(rec));
        }
        Command::MoveRecord { name, dx, dy } => {
            record_at(tx.doc, name)?;
            if !tx.layout.records.contains_key(name) {
                materialize_positions(tx, ctx, std::slice::from_ref(name));
            }
            let mut rl = tx.layout.records[name].clone();
            rl.x += dx;
            rl.y += dy;
            tx.set_record_layout(name, Some(rl));
        }
        Command::SetLink { source, target } => {
            let (idx, rec, fname) = ctx.link_field(tx.doc, source)?;
            let mut rec = rec.clone();
            rec.set_field(&fname, target.clone());
            tx.replace_item(idx, SourceItem::Record(rec));
            if tx.layout.links.contains_key(source) {
                let parsed = parse_link_value(target);
                if parsed.is_record_link() {
                    let terminal = format!("{}.{}", parsed.record_name, parsed.field_name);
                    retarget_chain(tx, source, terminal);
                } else {
                    remove_link_layout(tx, source);
                }
            }
        }
        Command::ClearLink { source } => {
            let (idx, rec, fname) = ctx.link_field(tx.doc, source)?;
            if rec.field(&fname).is_none() && !tx.layout.links.contains_key(source) {
                return Err(ValidationError::FieldNotSet(source.clone()));
            }
            let mut rec = rec.clone();
            if rec.remove_field(&fname) {
                tx.replace_item(idx, SourceItem::Record(rec));
            }
            remove_link_layout(tx, source);
        }
        Command::AddConnector { source, x, y } => {
            let (_, rec, fname) = ctx.link_field(tx.doc, source)?;
            let parsed = parse_link_value(rec.field(&fname).unwrap_or(""));
            if !parsed.is_record_link() {
                return Err(ValidationError::NoLinkTarget(source.clone()));
            }
            let id = tx.layout.next_connector_id(source);
            let chain = tx.layout.chain_ids(source);
            let mut connector = ConnectorLayout {
                id: id.clone(),
                next: String::new(),
                x: *x,
                y: *y,
                mode: 0,
                label: String::new(),
            };
            match chain.last() {
                Some(last) => {
                    let mut prev = tx.layout.connectors[last].clone();
                    connector.next = std::mem::replace(&mut prev.next, id.clone());
                    tx.set_connector(&id, Some(connector));
                    tx.set_connector(last, Some(prev));
                }
                None => {
                    connector.next = match tx.layout.links.get(source) {
                        Some(start) => start.clone(),
                        None => format!("{}.{}", parsed.record_name, parsed.field_name),
                    };
                    tx.set_connector(&id, Some(connector));
                    tx.set_link(source, Some(id));
                }
            }
        }
        Command::MoveConnector { id, dx, dy } => {
            let mut c = tx
                .layout
                .connectors
                .get(id)
                .cloned()
                .ok_or_else(|| ValidationError::UnknownConnector(id.clone()))?;
            c.x += dx;
            c.y += dy;
            tx.set_connector(id, Some(c));
        }
        Command::RemoveConnector { id } => {
            let c = tx
                .layout
                .connectors
                .get(id)
                .cloned()
                .ok_or_else(|| ValidationError::UnknownConnector(id.clone()))?;
            let links: Vec<String> = tx
                .layout
                .links
                .iter()
                .filter(|(_, start)| *start == id)
                .map(|(src, _)| src.clone())
                .collect();
            for src in links {
                tx.set_link(&src, Some(c.next.clone()));
            }
            let preds: Vec<ConnectorLayout> = tx
                .layout
                .connectors
                .values()
                .filter(|p| p.next == *id && p.id != *id)
                .cloned()
                .collect();
            for mut p in preds {
                p.next = c.next.clone();
                let key = p.id.clone();
                tx.set_connector(&key, Some(p));
            }
            tx.set_connector(id, None);
        }
        Command::Paste { dx, dy } => {
            if clipboard.is_empty() {
                return Err(ValidationError::EmptyClipboard);
            }
            paste(tx, ctx, clipboard, *dx, *dy);
        }
    }
    Ok(())
}

fn check_new_name(doc: &Document, name: &str) -> Result<(), ValidationError> {
    if !is_valid_record_name(name) {
        return Err(ValidationError::InvalidName(name.to_string()));
    }
    if doc.get_record(name).is_some() {
        return Err(ValidationError::NameCollision(name.to_string()));
    }
    Ok(())
}

/// Adds a record before any trailing layout block, separated from it by a
/// blank line.
fn insert_record(tx: &mut Tx, rec: RecordInstance) {
    let idx = tx.doc.append_position();
    tx.insert_item(idx, SourceItem::Record(rec));
    if matches!(tx.doc.item(idx + 1), Some(SourceItem::Layout(_))) {
        tx.insert_item(idx + 1, SourceItem::Blank(Line::from_text("")));
    }
}

/// Stores the auto-layout position of every listed record lacking one.
fn materialize_positions(tx: &mut Tx, ctx: &Ctx, names: &[String]) {
    let missing: Vec<&String> = names.iter().filter(|n| !tx.layout.records.contains_key(*n)).collect();
    if missing.is_empty() {
        return;
    }
    let full = auto_layout_with(tx.doc, tx.layout, ctx.separator, &ctx.grid);
    for name in missing {
        if let Some(rl) = full.records.get(name).cloned() {
            tx.set_record_layout(name, Some(rl));
        }
    }
}

fn remove_link_layout(tx: &mut Tx, source: &str) {
    for id in tx.layout.chain_ids(source) {
        tx.set_connector(&id, None);
    }
    tx.set_link(source, None);
}

fn remove_record_layout(tx: &mut Tx, name: &str) {
    tx.set_record_layout(name, None);
    let nodes: Vec<String> = tx
        .layout
        .field_nodes
        .keys()
        .filter(|id| record_of(id) == name)
        .cloned()
        .collect();
    for id in nodes {
        tx.set_field_node(&id, None);
    }
    let links: Vec<String> = tx.layout.links.keys().filter(|s| record_of(s) == name).cloned().collect();
    for src in links {
        remove_link_layout(tx, &src);
    }
}

/// Points the end of `source`'s chain at `terminal`.
fn retarget_chain(tx: &mut Tx, source: &str, terminal: String) {
    match tx.layout.chain_ids(source).last() {
        Some(last) => {
            let mut c = tx.layout.connectors[last].clone();
            c.next = terminal;
            tx.set_connector(last, Some(c));
        }
        None => tx.set_link(source, Some(terminal)),
    }
}

/// Renames a record and rewrites every reference to it: link-kind field
/// values in all records, layout keys, labels and connector routes.
fn rename(tx: &mut Tx, ctx: &Ctx, old: &str, new: &str) {
    let old_short = unqualified(old, ctx.separator).to_string();
    let new_short = unqualified(new, ctx.separator).to_string();

    let mut updates = Vec::new();
    for (idx, item) in tx.doc.items().iter().enumerate() {
        let SourceItem::Record(rec) = item else { continue };
        let mut copy = rec.clone();
        let mut changed = false;
        if rec.name() == old {
            copy.set_name(new);
            changed = true;
        }
        let rtype = rec.record_type().to_string();
        for f in copy.fields_mut() {
            if !ctx.field_kind(&rtype, f.name()).is_some_and(FieldKind::is_link) {
                continue;
            }
            let target = parse_link_value(f.value());
            if target.is_record_link() && target.record_name == old {
                f.set_value(target.with_record(new).render());
                changed = true;
            }
        }
        if changed {
            updates.push((idx, copy));
        }
    }
    for (idx, rec) in updates {
        tx.replace_item(idx, SourceItem::Record(rec));
    }

    if let Some(mut rl) = tx.layout.records.get(old).cloned() {
        if rl.label == old {
            rl.label = new.to_string();
        } else if rl.label == old_short {
            rl.label = new_short.clone();
        }
        tx.set_record_layout(new, None);
        tx.rename_record_layout(old, new, rl);
    }

    let nodes: Vec<(String, FieldNodeLayout)> = tx
        .layout
        .field_nodes
        .iter()
        .filter(|(id, _)| record_of(id) == old)
        .map(|(id, f)| (id.clone(), f.clone()))
        .collect();
    for (id, mut f) in nodes {
        if let Some(l) = rename_ref(&f.label, old, new) {
            f.label = l;
        }
        let new_id = rename_ref(&id, old, new).expect("id of renamed record");
        tx.set_field_node(&new_id, None);
        tx.rename_field_node(&id, &new_id, f);
    }

    let connectors: Vec<ConnectorLayout> = tx.layout.connectors.values().cloned().collect();
    for mut c in connectors {
        let old_id = c.id.clone();
        let new_id = rename_ref(&c.id, old, new);
        let new_next = rename_ref(&c.next, old, new);
        if new_id.is_none() && new_next.is_none() {
            continue;
        }
        if let Some(n) = new_next {
            c.next = n;
        }
        match new_id {
            Some(id) => {
                c.id = id.clone();
                tx.set_connector(&id, None);
                tx.rename_connector(&old_id, &id, c);
            }
            None => tx.set_connector(&old_id, Some(c)),
        }
    }

    let links: Vec<(String, String)> = tx.layout.links.iter().map(|(s, t)| (s.clone(), t.clone())).collect();
    for (src, start) in links {
        let new_src = if record_of(&src) == old { rename_ref(&src, old, new) } else { None };
        let new_start = rename_ref(&start, old, new).unwrap_or(start);
        match new_src {
            Some(ns) => {
                tx.set_link(&ns, None);
                tx.rename_link(&src, &ns, new_start);
            }
            None if tx.layout.links[&src] != new_start => tx.set_link(&src, Some(new_start)),
            None => {}
        }
    }
}

/// Smallest `name_k` (k >= 1) that is free in the document and not yet
/// taken by this paste.
fn paste_name(doc: &Document, taken: &HashSet<String>, name: &str) -> String {
    (1..)
        .map(|k| format!("{name}_{k}"))
        .find(|n| doc.get_record(n).is_none() && !taken.contains(n))
        .expect("unbounded search")
}

fn paste(tx: &mut Tx, ctx: &Ctx, clipboard: &[ClipRecord], dx: i64, dy: i64) {
    let mut mapping: HashMap<&str, String> = HashMap::new();
    let mut taken = HashSet::new();
    for clip in clipboard {
        let name = paste_name(tx.doc, &taken, clip.record.name());
        taken.insert(name.clone());
        mapping.insert(clip.record.name(), name);
    }
    let remap = |reference: &str| -> String {
        let rec = record_of(reference);
        match mapping.get(rec) {
            Some(n) => rename_ref(reference, rec, n).unwrap_or_else(|| reference.to_string()),
            None => reference.to_string(),
        }
    };

    let mut unplaced = Vec::new();
    for clip in clipboard {
        let old = clip.record.name();
        let new = mapping[old].clone();
        let mut rec = clip.record.clone();
        rec.set_name(new.clone());
        let rtype = rec.record_type().to_string();
        for f in rec.fields_mut() {
            if !ctx.field_kind(&rtype, f.name()).is_some_and(FieldKind::is_link) {
                continue;
            }
            let target = parse_link_value(f.value());
            if let Some(n) = mapping.get(target.record_name.as_str()).filter(|_| target.is_record_link()) {
                f.set_value(target.with_record(n).render());
            }
        }
        rec.forget_origin();
        insert_record(tx, rec);

        match &clip.layout {
            Some(rl) => {
                let mut rl = rl.clone();
                rl.x += dx;
                rl.y += dy;
                if rl.label == unqualified(old, ctx.separator) {
                    rl.label = unqualified(&new, ctx.separator).to_string();
                }
                tx.set_record_layout(&new, Some(rl));
            }
            None => unplaced.push(new.clone()),
        }
        for (field, f) in &clip.field_nodes {
            let mut f = f.clone();
            if let Some(l) = rename_ref(&f.label, old, &new) {
                f.label = l;
            }
            tx.set_field_node(&format!("{new}.{field}"), Some(f));
        }
        for link in &clip.links {
            let source = format!("{new}.{field}", field = link.field);
            let terminal = remap(&link.terminal);
            let ids: Vec<String> = link
                .connectors
                .iter()
                .map(|c| {
                    let id = tx.layout.next_connector_id(&source);
                    // Reserve the id so the next one differs.
                    tx.set_connector(
                        &id,
                        Some(ConnectorLayout {
                            id: id.clone(),
                            next: String::new(),
                            x: c.x + dx,
                            y: c.y + dy,
                            mode: c.mode,
                            label: c.label.clone(),
                        }),
                    );
                    id
                })
                .collect();
            for (i, id) in ids.iter().enumerate() {
                let mut c = tx.layout.connectors[id].clone();
                c.next = ids.get(i + 1).cloned().unwrap_or_else(|| terminal.clone());
                tx.set_connector(id, Some(c));
            }
            tx.set_link(&source, Some(ids.first().cloned().unwrap_or(terminal)));
        }
    }
    materialize_positions(tx, ctx, &unplaced);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dbd::parse_dbd;

    const DBD: &str = r#"
recordtype(ai) { field(VAL,DBF_DOUBLE) field(INP,DBF_INLINK) field(DESC,DBF_STRING) field(FLNK,DBF_FWDLINK) }
recordtype(ao) { field(VAL,DBF_DOUBLE) field(OUT,DBF_OUTLINK) field(DOL,DBF_INLINK) field(FLNK,DBF_FWDLINK) }
"#;

    const EXAMPLE: &str = "#! Generated by VisualDCT v2.0\n\
#! Further lines contain data used by VisualDCT\n\
record(ai,ai001) {\n  field(INP,\"ao001.VAL\")\n}\n\n\
record(ao,ao001) {\n}\n\n\
#! Record(ai001,2241,2345,0,1,\"ai001\")\n\
#! Field(\"ai001.INP\",16711731,1,\"ai001.INP\")\n\
#! Link(\"ai001.INP\",\"ai001/INP\")\n\
#! Connector(\"ai001/INP\",\"ao001.VAL\",2505,2495,0,\"\")\n\
#! Record(ao001,2600,2400,0,1,\"ao001\")\n";

    fn registry() -> Arc<TypeRegistry> {
        Arc::new(parse_dbd(DBD.as_bytes()).0)
    }

    fn open(text: &str) -> Session {
        let (s, _) = Session::open("t.db", text.as_bytes(), registry(), ':');
        s
    }

    #[test]
    fn example_opens_clean_and_saves_identically() {
        let (mut s, d) = Session::open("t.db", EXAMPLE.as_bytes(), registry(), ':');
        assert!(d.is_empty(), "{d:?}");
        assert_eq!(s.save(), EXAMPLE.as_bytes());
        assert!(!s.is_dirty());
    }

    #[test]
    fn move_then_undo_restores_bytes() {
        let mut s = open(EXAMPLE);
        s.apply(Command::MoveRecord { name: "ai001".into(), dx: 10, dy: 0 }).unwrap();
        assert!(s.is_dirty());
        let moved = String::from_utf8(s.render()).unwrap();
        assert!(moved.contains("#! Record(ai001,2251,2345,0,1,\"ai001\")"));
        s.undo().unwrap();
        assert_eq!(s.render(), EXAMPLE.as_bytes());
        assert!(!s.is_dirty());
        s.redo().unwrap();
        assert_eq!(s.render(), moved.as_bytes());
    }

    #[test]
    fn rename_rewrites_links_and_layout() {
        let mut s = open(EXAMPLE);
        s.apply(Command::RenameRecord { old: "ao001".into(), new: "ao002".into() }).unwrap();
        let ai = s.document().get_record("ai001").unwrap();
        assert_eq!(ai.field("INP"), Some("ao002.VAL"));
        assert_eq!(s.layout().connectors["ai001/INP"].next, "ao002.VAL");
        assert_eq!(s.layout().records["ao002"].label, "ao002");
        assert!(s.diagnostics().is_empty());

        s.apply(Command::RenameRecord { old: "ai001".into(), new: "ai009".into() }).unwrap();
        assert_eq!(s.layout().links["ai009.INP"], "ai009/INP");
        assert!(s.layout().connectors.contains_key("ai009/INP"));
        assert!(s.layout().field_nodes.contains_key("ai009.INP"));
        assert_eq!(s.layout().field_nodes["ai009.INP"].label, "ai009.INP");
        assert!(s.diagnostics().is_empty());
    }

    #[test]
    fn failed_commands_change_nothing() {
        let mut s = open(EXAMPLE);
        let before = s.semantic_state();
        let bad = [
            Command::CreateRecord { record_type: "nope".into(), name: "x".into(), x: None, y: None },
            Command::CreateRecord { record_type: "ai".into(), name: "ao001".into(), x: None, y: None },
            Command::CreateRecord { record_type: "ai".into(), name: "a b".into(), x: None, y: None },
            Command::RenameRecord { old: "ai001".into(), new: "ao001".into() },
            Command::SetField { record: "ai001".into(), field: "ZZZ".into(), value: "1".into() },
            Command::SetLink { source: "ai001.DESC".into(), target: "x".into() },
            Command::RemoveConnector { id: "nope".into() },
            Command::Paste { dx: 0, dy: 0 },
        ];
        let codes: Vec<&str> = bad.into_iter().map(|c| s.apply(c).unwrap_err().code()).collect();
        assert_eq!(
            codes,
            [
                "UnknownRecordType",
                "NameCollision",
                "InvalidName",
                "NameCollision",
                "UnknownField",
                "NotALinkField",
                "UnknownConnector",
                "EmptyClipboard"
            ]
        );
        assert_eq!(s.semantic_state(), before);
        assert!(!s.can_undo());
        assert_eq!(s.render(), EXAMPLE.as_bytes());
    }

    #[test]
    fn create_inserts_before_layout_block() {
        let mut s = open(EXAMPLE);
        s.apply(Command::CreateRecord { record_type: "ai".into(), name: "ai002".into(), x: Some(0), y: Some(0) })
            .unwrap();
        let text = String::from_utf8(s.render()).unwrap();
        assert!(text.contains("record(ao,ao001) {\n}\n\nrecord(ai,ai002) {\n}\n\n#! Further lines"), "{text}");
        assert!(text.contains("#! Record(ai002,0,0,0,1,\"ai002\")"));
        assert!(text.starts_with("#! Generated by VisualDCT v2.0\n"));
    }

    #[test]
    fn create_without_position_is_auto_placed() {
        let mut s = open("");
        s.apply(Command::CreateRecord { record_type: "ai".into(), name: "a".into(), x: None, y: None }).unwrap();
        s.apply(Command::CreateRecord { record_type: "ai".into(), name: "b".into(), x: None, y: None }).unwrap();
        assert_eq!((s.layout().records["a"].x, s.layout().records["a"].y), (100, 100));
        assert_eq!((s.layout().records["b"].x, s.layout().records["b"].y), (260, 100));
    }

    #[test]
    fn delete_removes_layout() {
        let mut s = open(EXAMPLE);
        s.apply(Command::DeleteRecord { name: "ai001".into() }).unwrap();
        assert!(s.layout().links.is_empty());
        assert!(s.layout().connectors.is_empty());
        assert!(s.layout().field_nodes.is_empty());
        assert_eq!(s.layout().records.len(), 1);
        s.undo().unwrap();
        assert_eq!(s.render(), EXAMPLE.as_bytes());
    }

    #[test]
    fn deleting_a_target_breaks_the_link() {
        let mut s = open(EXAMPLE);
        let d = s.apply(Command::DeleteRecord { name: "ao001".into() }).unwrap();
        assert!(d.iter().any(|d| d.code == Code::BrokenLink && d.is_error()));
    }

    #[test]
    fn connectors_chain_and_unchain() {
        let mut s = open(EXAMPLE);
        s.apply(Command::AddConnector { source: "ai001.INP".into(), x: 1, y: 2 }).unwrap();
        assert_eq!(s.layout().connectors["ai001/INP"].next, "ai001/INP/2");
        assert_eq!(s.layout().connectors["ai001/INP/2"].next, "ao001.VAL");
        s.apply(Command::RemoveConnector { id: "ai001/INP".into() }).unwrap();
        assert_eq!(s.layout().links["ai001.INP"], "ai001/INP/2");
        s.apply(Command::MoveConnector { id: "ai001/INP/2".into(), dx: 5, dy: 5 }).unwrap();
        assert_eq!(s.layout().connectors["ai001/INP/2"].x, 6);
        s.apply(Command::SetLink { source: "ai001.INP".into(), target: "ai001.VAL NPP".into() }).unwrap();
        assert_eq!(s.layout().connectors["ai001/INP/2"].next, "ai001.VAL");
        s.apply(Command::ClearLink { source: "ai001.INP".into() }).unwrap();
        assert!(s.layout().links.is_empty() && s.layout().connectors.is_empty());
        assert_eq!(s.document().get_record("ai001").unwrap().field("INP"), None);
        while s.can_undo() {
            s.undo().unwrap();
        }
        assert_eq!(s.render(), EXAMPLE.as_bytes());
    }

    #[test]
    fn copy_paste_keeps_internal_links() {
        let mut s = open(EXAMPLE);
        assert_eq!(s.copy(&["ai001".into(), "ao001".into()]).unwrap(), 2);
        s.apply(Command::Paste { dx: 50, dy: 0 }).unwrap();
        let pasted = s.document().get_record("ai001_1").unwrap();
        assert_eq!(pasted.field("INP"), Some("ao001_1.VAL"));
        assert_eq!(s.layout().records["ai001_1"].x, 2291);
        assert_eq!(s.layout().links["ai001_1.INP"], "ai001_1/INP");
        assert_eq!(s.layout().connectors["ai001_1/INP"].next, "ao001_1.VAL");
        assert!(s.diagnostics().is_empty(), "{:?}", s.diagnostics());
        s.apply(Command::Paste { dx: 0, dy: 0 }).unwrap();
        assert!(s.document().get_record("ai001_2").is_some());
    }

    #[test]
    fn copy_alone_drops_external_route() {
        let mut s = open(EXAMPLE);
        s.copy(&["ai001".into()]).unwrap();
        s.apply(Command::Paste { dx: 0, dy: 0 }).unwrap();
        assert_eq!(s.document().get_record("ai001_1").unwrap().field("INP"), Some("ao001.VAL"));
        assert!(!s.layout().links.contains_key("ai001_1.INP"));
    }

    #[test]
    fn new_command_discards_redo_and_saved_mark() {
        let mut s = open(EXAMPLE);
        s.apply(Command::MoveRecord { name: "ai001".into(), dx: 1, dy: 0 }).unwrap();
        s.save();
        s.undo().unwrap();
        s.apply(Command::MoveRecord { name: "ai001".into(), dx: 2, dy: 0 }).unwrap();
        assert!(!s.can_redo());
        assert!(s.is_dirty());
        assert_eq!(s.redo().unwrap_err(), EditError::NothingToRedo);
    }

    #[test]
    fn history_limit() {
        let mut s = open(EXAMPLE).with_history_limit(2);
        for _ in 0..5 {
            s.apply(Command::MoveRecord { name: "ai001".into(), dx: 1, dy: 0 }).unwrap();
        }
        s.undo().unwrap();
        s.undo().unwrap();
        assert_eq!(s.undo().unwrap_err(), EditError::NothingToUndo);
        assert_eq!(s.layout().records["ai001"].x, 2244);
    }

    #[test]
    fn move_unplaced_record_starts_from_auto_position() {
        let mut s = open("record(ai,a) {}\n");
        s.apply(Command::MoveRecord { name: "a".into(), dx: 5, dy: 5 }).unwrap();
        assert_eq!((s.layout().records["a"].x, s.layout().records["a"].y), (105, 105));
    }
}
