use serde::{Deserialize, Serialize};

/// One user-level edit. The JSON form is tagged by `kind`:
///
/// ```json
/// {"kind": "MoveRecord", "name": "ai001", "dx": 10, "dy": 0}
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Command {
    CreateRecord {
        #[serde(rename = "type")]
        record_type: String,
        name: String,
        /// Canvas position; auto-layout places the record when omitted.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x: Option<i64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        y: Option<i64>,
    },
    DeleteRecord {
        name: String,
    },
    RenameRecord {
        old: String,
        new: String,
    },
    SetField {
        record: String,
        field: String,
        value: String,
    },
    RemoveField {
        record: String,
        field: String,
    },
    MoveRecord {
        name: String,
        dx: i64,
        dy: i64,
    },
    /// `source` is `record.FIELD` of a link-kind field; `target` is the new
    /// field value.
    SetLink {
        source: String,
        target: String,
    },
    ClearLink {
        source: String,
    },
    /// Appends a connector to the end of the link's chain.
    AddConnector {
        source: String,
        x: i64,
        y: i64,
    },
    MoveConnector {
        id: String,
        dx: i64,
        dy: i64,
    },
    RemoveConnector {
        id: String,
    },
    Paste {
        #[serde(default)]
        dx: i64,
        #[serde(default)]
        dy: i64,
    },
}

impl Command {
    pub fn kind(&self) -> &'static str {
        match self {
            Command::CreateRecord { .. } => "CreateRecord",
            Command::DeleteRecord { .. } => "DeleteRecord",
            Command::RenameRecord { .. } => "RenameRecord",
            Command::SetField { .. } => "SetField",
            Command::RemoveField { .. } => "RemoveField",
            Command::MoveRecord { .. } => "MoveRecord",
            Command::SetLink { .. } => "SetLink",
            Command::ClearLink { .. } => "ClearLink",
            Command::AddConnector { .. } => "AddConnector",
            Command::MoveConnector { .. } => "MoveConnector",
            Command::RemoveConnector { .. } => "RemoveConnector",
            Command::Paste { .. } => "Paste",
        }
    }
}
