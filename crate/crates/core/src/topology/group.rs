use std::fmt;

use indexmap::IndexMap;
use serde::Serialize;

use crate::db::Document;

/// Position of a record in the naming hierarchy. The root is the empty path.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct GroupPath {
    pub segments: Vec<String>,
    pub separator: char,
}

impl GroupPath {
    pub fn root(separator: char) -> Self {
        GroupPath { segments: Vec::new(), separator }
    }

    /// Parses a joined path such as `grp1:grp2`; the empty string is the root.
    pub fn parse(path: &str, separator: char) -> Self {
        if path.is_empty() {
            return GroupPath::root(separator);
        }
        GroupPath {
            segments: path.split(separator).map(str::to_string).collect(),
            separator,
        }
    }

    pub fn is_root(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn child(&self, segment: &str) -> Self {
        let mut segments = self.segments.clone();
        segments.push(segment.to_string());
        GroupPath { segments, separator: self.separator }
    }

    pub fn joined(&self) -> String {
        let mut sep = [0u8; 4];
        self.segments.join(self.separator.encode_utf8(&mut sep))
    }
}

impl fmt::Display for GroupPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.joined())
    }
}

/// Every separator-delimited segment except the last.
pub fn group_of(record_name: &str, separator: char) -> GroupPath {
    let mut segments: Vec<String> = record_name.split(separator).map(str::to_string).collect();
    segments.pop();
    GroupPath { segments, separator }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SubgroupSummary {
    pub name: String,
    /// Records anywhere below this subgroup.
    pub member_count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct GroupView {
    pub records: Vec<String>,
    pub subgroups: Vec<SubgroupSummary>,
}

/// Records directly in `path`, plus one entry per immediate child group
/// (in order of first appearance) with its total record count.
pub fn group_view(doc: &Document, path: &GroupPath, separator: char) -> GroupView {
    let depth = path.segments.len();
    let mut view = GroupView::default();
    let mut subgroups: IndexMap<String, usize> = IndexMap::new();
    for rec in doc.records() {
        let group = group_of(rec.name(), separator);
        if group.segments.len() < depth || group.segments[..depth] != path.segments[..] {
            continue;
        }
        if group.segments.len() == depth {
            view.records.push(rec.name().to_string());
        } else {
            *subgroups.entry(group.segments[depth].clone()).or_insert(0) += 1;
        }
    }
    view.subgroups = subgroups
        .into_iter()
        .map(|(name, member_count)| SubgroupSummary { name, member_count })
        .collect();
    view
}
