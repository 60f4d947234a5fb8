//! Database definition (`.dbd`) registry.

mod parse;

use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::Serialize;

pub use parse::{parse_dbd, parse_dbd_with, FsResolver, IncludeResolver, NoIncludes};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DbfType {
    String,
    Char,
    Uchar,
    Short,
    Ushort,
    Long,
    Ulong,
    Float,
    Double,
    Enum,
    Menu,
    Device,
    Inlink,
    Outlink,
    Fwdlink,
    Noaccess,
}

impl DbfType {
    pub const ALL: [DbfType; 16] = [
        DbfType::String,
        DbfType::Char,
        DbfType::Uchar,
        DbfType::Short,
        DbfType::Ushort,
        DbfType::Long,
        DbfType::Ulong,
        DbfType::Float,
        DbfType::Double,
        DbfType::Enum,
        DbfType::Menu,
        DbfType::Device,
        DbfType::Inlink,
        DbfType::Outlink,
        DbfType::Fwdlink,
        DbfType::Noaccess,
    ];

    pub fn dbf_name(self) -> &'static str {
        match self {
            DbfType::String => "DBF_STRING",
            DbfType::Char => "DBF_CHAR",
            DbfType::Uchar => "DBF_UCHAR",
            DbfType::Short => "DBF_SHORT",
            DbfType::Ushort => "DBF_USHORT",
            DbfType::Long => "DBF_LONG",
            DbfType::Ulong => "DBF_ULONG",
            DbfType::Float => "DBF_FLOAT",
            DbfType::Double => "DBF_DOUBLE",
            DbfType::Enum => "DBF_ENUM",
            DbfType::Menu => "DBF_MENU",
            DbfType::Device => "DBF_DEVICE",
            DbfType::Inlink => "DBF_INLINK",
            DbfType::Outlink => "DBF_OUTLINK",
            DbfType::Fwdlink => "DBF_FWDLINK",
            DbfType::Noaccess => "DBF_NOACCESS",
        }
    }
}

impl fmt::Display for DbfType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.dbf_name())
    }
}

impl FromStr for DbfType {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        DbfType::ALL.into_iter().find(|t| t.dbf_name() == s).ok_or(())
    }
}

/// How a field takes part in data flow; decides the field-node glyph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FieldKind {
    Variable,
    Input,
    Output,
    Forward,
}

impl FieldKind {
    pub fn is_link(self) -> bool {
        self != FieldKind::Variable
    }
}

pub fn classify_field(def: &FieldDef) -> FieldKind {
    match def.data_type {
        DbfType::Inlink => FieldKind::Input,
        DbfType::Outlink => FieldKind::Output,
        DbfType::Fwdlink => FieldKind::Forward,
        _ => FieldKind::Variable,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldDef {
    pub name: String,
    pub data_type: DbfType,
    /// From `initial(...)`, else the empty string.
    pub default_value: String,
    pub menu_name: Option<String>,
    pub prompt: Option<String>,
    pub prompt_group: Option<String>,
    /// Position within the record type, in source order.
    pub prompt_order: usize,
}

impl FieldDef {
    pub fn kind(&self) -> FieldKind {
        classify_field(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecordTypeDef {
    pub name: String,
    pub fields: IndexMap<String, FieldDef>,
}

impl RecordTypeDef {
    pub fn field(&self, name: &str) -> Option<&FieldDef> {
        self.fields.get(name)
    }

    /// Record types without VAL have no default link target.
    pub fn has_val_field(&self) -> bool {
        self.fields.contains_key("VAL")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MenuChoice {
    pub id: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeviceDef {
    pub record_type: String,
    pub link_type: String,
    pub dset: String,
    pub choice: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TypeRegistry {
    pub record_types: IndexMap<String, RecordTypeDef>,
    pub menus: IndexMap<String, Vec<MenuChoice>>,
    pub devices: Vec<DeviceDef>,
}

impl TypeRegistry {
    pub fn record_type(&self, name: &str) -> Option<&RecordTypeDef> {
        self.record_types.get(name)
    }

    pub fn lookup_field(&self, record_type: &str, field: &str) -> Option<&FieldDef> {
        self.record_types.get(record_type)?.fields.get(field)
    }

    pub fn is_empty(&self) -> bool {
        self.record_types.is_empty()
    }
}

pub fn lookup_field<'r>(reg: &'r TypeRegistry, record_type: &str, field: &str) -> Option<&'r FieldDef> {
    reg.lookup_field(record_type, field)
}
