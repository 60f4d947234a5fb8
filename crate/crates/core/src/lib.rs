//! Engineering toolkit for EPICS record instance databases.
//!
//! The crate is organised bottom-up:
//!
//! - [`db`] parses and serializes `.db` files losslessly.
//! - [`dbd`] loads record type definitions from `.dbd` files.
//! - [`layout`] decodes and encodes the `#!` visual directives and places
//!   records that carry no visual data.
//! - [`topology`] interprets link values, builds the link graph and groups
//!   records by name.
//! - [`edit`] applies undoable commands to an editing session.

pub mod db;
pub mod dbd;
pub mod diag;
pub mod edit;
pub mod layout;
pub mod quote;
pub mod topology;

pub use db::{parse_db, serialize_db, Document, FieldEntry, RecordInstance, SourceItem};
pub use dbd::{classify_field, parse_dbd, DbfType, FieldDef, FieldKind, TypeRegistry};
pub use diag::{Code, Diagnostic, Location, Severity};
pub use edit::{Command, EditError, Session, ValidationError};
pub use layout::{auto_layout, decode_layout, encode_layout, LayoutTable};
pub use topology::{build_graph, group_of, group_view, parse_link_value, GroupPath, LinkGraph, LinkTarget};
