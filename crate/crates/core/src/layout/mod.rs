//! Visual composition data carried in `#!` comment lines.
//!
//! ```text
//! #! Record(ai001,2241,2345,0,1,"ai001")
//! #! Field("ai001.INP",16711731,1,"ai001.INP")
//! #! Link("ai001.INP","ai001/INP")
//! #! Connector("ai001/INP","ao001.VAL",2505,2495,0,"")
//! ```
//!
//! A link names the start of a chain: either a connector id, or directly
//! the target `record.FIELD`. Each connector names the next hop.

mod auto;
mod codec;

use std::collections::HashSet;

use crate::db::Document;
use crate::dbd::TypeRegistry;
use crate::diag::{Code, Diagnostic, Location};

use indexmap::IndexMap;
use serde::Serialize;
use thiserror::Error;

pub use auto::{auto_layout, auto_layout_with, GridConfig};
pub use codec::{decode_layout, encode_layout, encode_layout_ordered, render_document, DEFAULT_HEADER, DEFAULT_MARKER};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecordLayout {
    pub x: i64,
    pub y: i64,
    /// Opaque; round-tripped unchanged.
    pub flag_a: i64,
    /// Opaque; round-tripped unchanged.
    pub flag_b: i64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldNodeLayout {
    /// 24-bit RGB in decimal.
    pub color: u32,
    pub flag: i64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConnectorLayout {
    pub id: String,
    pub next: String,
    pub x: i64,
    pub y: i64,
    pub mode: i64,
    pub label: String,
}

/// Decoded `#!` directives.
///
/// `header` and `marker` hold the original first two lines only when they
/// differ from the defaults written by [`encode_layout`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LayoutTable {
    pub records: IndexMap<String, RecordLayout>,
    pub field_nodes: IndexMap<String, FieldNodeLayout>,
    pub links: IndexMap<String, String>,
    pub connectors: IndexMap<String, ConnectorLayout>,
    pub header: Option<String>,
    pub marker: Option<String>,
    pub unknown_directives: Vec<String>,
}

impl LayoutTable {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
            && self.field_nodes.is_empty()
            && self.links.is_empty()
            && self.connectors.is_empty()
            && self.unknown_directives.is_empty()
    }

    /// Connector ids along the chain of `source`, stopping at the first
    /// missing or repeated id.
    pub fn chain_ids(&self, source: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        let Some(mut id) = self.links.get(source) else {
            return out;
        };
        while let Some(c) = self.connectors.get(id) {
            if !seen.insert(id.as_str()) {
                break;
            }
            out.push(id.clone());
            id = &c.next;
        }
        out
    }

    /// Smallest unused connector id for a link from `source` (`rec.FLD`):
    /// `rec/FLD`, then `rec/FLD/2`, `rec/FLD/3`, ...
    pub fn next_connector_id(&self, source: &str) -> String {
        let base = source.replacen('.', "/", 1);
        if !self.connectors.contains_key(&base) {
            return base;
        }
        (2..)
            .map(|k| format!("{base}/{k}"))
            .find(|id| !self.connectors.contains_key(id))
            .expect("unbounded search")
    }
}

/// `record.FIELD` with both parts non-empty.
pub fn is_field_id(id: &str) -> bool {
    matches!(id.split_once('.'), Some((r, f)) if !r.is_empty() && !f.is_empty())
}

/// Record-name part of a `record.FIELD` id.
pub fn record_of(id: &str) -> &str {
    id.split_once('.').map_or(id, |(r, _)| r)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Waypoint {
    pub id: String,
    pub x: i64,
    pub y: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainRoute {
    pub terminal: String,
    pub waypoints: Vec<Waypoint>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("no link starts at '{0}'")]
    NoLink(String),
    #[error("chain reference '{0}' is neither a connector nor a field")]
    DanglingChain(String),
    #[error("connector '{0}' appears twice in one chain")]
    CyclicChain(String),
}

/// Follows a link from `source` through its connectors to the target field.
pub fn resolve_chain(table: &LayoutTable, source: &str) -> Result<ChainRoute, ChainError> {
    let mut id = table.links.get(source).ok_or_else(|| ChainError::NoLink(source.to_string()))?;
    let mut waypoints: Vec<Waypoint> = Vec::new();
    let mut seen = HashSet::new();
    loop {
        if let Some(c) = table.connectors.get(id) {
            if !seen.insert(id.as_str()) {
                return Err(ChainError::CyclicChain(id.clone()));
            }
            waypoints.push(Waypoint { id: c.id.clone(), x: c.x, y: c.y });
            id = &c.next;
        } else if is_field_id(id) {
            return Ok(ChainRoute { terminal: id.clone(), waypoints });
        } else {
            return Err(ChainError::DanglingChain(id.clone()));
        }
    }
}

/// Consistency of `table` against an (edited) document: broken chains, and
/// layout entries that no longer match a record, field or link field.
/// Locations are paths since the table may not correspond to source lines.
pub fn check_layout(doc: &Document, reg: &TypeRegistry, table: &LayoutTable) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let orphan = |key: &str, what: &str| {
        Diagnostic::warning(Code::OrphanLayout, Location::path(key), format!("layout data for {what} '{key}' matches nothing in the document"))
    };
    // Some(None): record exists with unknown type; field checks are skipped.
    let field_def = |id: &str| -> Option<Option<bool>> {
        let (rec, field) = id.split_once('.')?;
        let r = doc.get_record(rec)?;
        match reg.record_type(r.record_type()) {
            None => Some(None),
            Some(rt) => rt.field(field).map(|d| Some(d.kind().is_link())),
        }
    };
    for name in table.records.keys() {
        if doc.get_record(name).is_none() {
            diags.push(orphan(name, "record"));
        }
    }
    for id in table.field_nodes.keys() {
        if field_def(id).is_none() {
            diags.push(orphan(id, "field"));
        }
    }
    for src in table.links.keys() {
        match field_def(src) {
            None | Some(Some(false)) => diags.push(orphan(src, "link")),
            _ => {}
        }
        match resolve_chain(table, src) {
            Err(e @ ChainError::DanglingChain(_)) => {
                diags.push(Diagnostic::warning(Code::DanglingChain, Location::path(src.as_str()), format!("link from {src}: {e}")))
            }
            Err(e @ ChainError::CyclicChain(_)) => {
                diags.push(Diagnostic::warning(Code::CyclicChain, Location::path(src.as_str()), format!("link from {src}: {e}")))
            }
            _ => {}
        }
    }
    diags
}

/// RGB components of a 24-bit color.
pub fn color_to_rgb(color: u32) -> (u8, u8, u8) {
    (((color >> 16) & 0xFF) as u8, ((color >> 8) & 0xFF) as u8, (color & 0xFF) as u8)
}

pub fn rgb_to_color(r: u8, g: u8, b: u8) -> u32 {
    (u32::from(r) << 16) | (u32::from(g) << 8) | u32::from(b)
}
