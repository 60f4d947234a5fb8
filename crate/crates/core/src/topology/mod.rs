//! Link interpretation, the record link graph and name-based grouping.

mod group;
mod link;

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use serde::Serialize;

use crate::db::Document;
use crate::dbd::{FieldKind, TypeRegistry};
use crate::diag::{Code, Diagnostic, Location};

pub use group::{group_of, group_view, GroupPath, GroupView, SubgroupSummary};
pub use link::{parse_link_value, LinkKind, LinkTarget, Modifier};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LinkEdge {
    /// `record.FIELD` of the link field.
    pub source_field: String,
    pub target: LinkTarget,
    pub resolved: bool,
    pub broken: bool,
    pub inter_group: bool,
    pub source_kind: FieldKind,
}

impl LinkEdge {
    pub fn source_record(&self) -> &str {
        crate::layout::record_of(&self.source_field)
    }

    pub fn source_field_name(&self) -> &str {
        self.source_field.split_once('.').map_or("", |(_, f)| f)
    }

    /// `record.FIELD` the link points at.
    pub fn target_id(&self) -> String {
        format!("{}.{}", self.target.record_name, self.target.field_name)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LinkGraph {
    pub records: Vec<GraphNode>,
    pub edges: Vec<LinkEdge>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GraphNode {
    pub name: String,
    pub record_type: String,
}

impl LinkGraph {
    pub fn edges_from<'a>(&'a self, record: &'a str) -> impl Iterator<Item = &'a LinkEdge> + 'a {
        self.edges.iter().filter(move |e| e.source_record() == record)
    }

    pub fn broken_count(&self) -> usize {
        self.edges.iter().filter(|e| e.broken).count()
    }

    /// Graphviz rendering: one node per record, one edge per link labelled
    /// with the source field; broken links are dashed.
    pub fn to_dot(&self) -> String {
        fn esc(s: &str) -> String {
            s.replace('\\', "\\\\").replace('"', "\\\"")
        }
        let mut out = String::from("digraph db {\n");
        for n in &self.records {
            let _ = writeln!(out, "  \"{}\" [label=\"{}\\n({})\"];", esc(&n.name), esc(&n.name), esc(&n.record_type));
        }
        for e in &self.edges {
            let style = if e.broken { ", style=dashed" } else { "" };
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [label=\"{}\"{}];",
                esc(e.source_record()),
                esc(&e.target.record_name),
                esc(e.source_field_name()),
                style
            );
        }
        out.push_str("}\n");
        out
    }
}

fn field_location(line: usize, path: String) -> Location {
    if line > 0 {
        Location::at(line, 1)
    } else {
        Location::path(path)
    }
}

/// Builds an edge for every link-kind field whose value names a record.
/// Unknown record types and fields are reported; broken links are errors.
pub fn build_graph(doc: &Document, reg: &TypeRegistry, separator: char) -> (LinkGraph, Vec<Diagnostic>) {
    let mut graph = LinkGraph::default();
    let mut diags = Vec::new();
    let mut by_name: HashMap<&str, &str> = HashMap::new();
    for rec in doc.records() {
        by_name.entry(rec.name()).or_insert(rec.record_type());
    }
    let mut reported_types: HashSet<&str> = HashSet::new();

    for rec in doc.records() {
        graph.records.push(GraphNode {
            name: rec.name().to_string(),
            record_type: rec.record_type().to_string(),
        });
        let Some(rt) = reg.record_type(rec.record_type()) else {
            if reported_types.insert(rec.name()) {
                diags.push(Diagnostic::error(
                    Code::UnknownRecordType,
                    field_location(rec.line(), rec.name().to_string()),
                    format!("record '{}' has undefined type '{}'", rec.name(), rec.record_type()),
                ));
            }
            continue;
        };
        let source_group = group_of(rec.name(), separator);
        for (fname, value) in rec.field_values() {
            let entry_line = rec.field_entry(fname).map_or(0, |f| f.line());
            let path = format!("{}.{}", rec.name(), fname);
            let Some(def) = rt.field(fname) else {
                diags.push(Diagnostic::error(
                    Code::UnknownField,
                    field_location(entry_line, path),
                    format!("field {fname} is not defined for record type '{}'", rec.record_type()),
                ));
                continue;
            };
            let kind = def.kind();
            if !kind.is_link() {
                continue;
            }
            let target = parse_link_value(value);
            if target.kind != LinkKind::RecordLink {
                continue;
            }
            for m in &target.unknown_modifiers {
                diags.push(Diagnostic::warning(
                    Code::UnknownModifier,
                    field_location(entry_line, path.clone()),
                    format!("unknown link modifier '{m}' in {path}"),
                ));
            }
            let resolved = match by_name.get(target.record_name.as_str()) {
                Some(target_type) => match reg.record_type(target_type) {
                    Some(trt) => trt.field(&target.field_name).is_some(),
                    None => true,
                },
                None => false,
            };
            let inter_group = group_of(&target.record_name, separator) != source_group;
            if !resolved {
                diags.push(Diagnostic::error(
                    Code::BrokenLink,
                    field_location(entry_line, path.clone()),
                    format!(
                        "{path} links to {}.{}, which does not exist",
                        target.record_name, target.field_name
                    ),
                ));
            }
            graph.edges.push(LinkEdge {
                source_field: path,
                target,
                resolved,
                broken: !resolved,
                inter_group,
                source_kind: kind,
            });
        }
    }
    (graph, diags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::db::parse_db;
    use crate::dbd::parse_dbd;

    const DBD: &str = r#"
recordtype(ai) { field(VAL,DBF_DOUBLE) field(INP,DBF_INLINK) field(DESC,DBF_STRING) }
recordtype(ao) { field(VAL,DBF_DOUBLE) field(OUT,DBF_OUTLINK) field(FLNK,DBF_FWDLINK) }
"#;

    fn graph(db: &str) -> (LinkGraph, Vec<Diagnostic>) {
        let (reg, _) = parse_dbd(DBD.as_bytes());
        let (doc, _) = parse_db(db.as_bytes());
        build_graph(&doc, &reg, ':')
    }

    #[test]
    fn variable_fields_make_no_edges() {
        let (g, d) = graph("record(ai,a) { field(DESC,\"b\") }\nrecord(ai,b) {}\n");
        assert!(g.edges.is_empty());
        assert!(d.is_empty());
    }

    #[test]
    fn missing_field_on_existing_record_is_broken() {
        let (g, d) = graph("record(ai,a) { field(INP,\"b.NOPE CP\") }\nrecord(ai,b) {}\n");
        assert!(g.edges[0].broken);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, Code::BrokenLink);
    }

    #[test]
    fn inter_group_and_modifiers() {
        let (g, d) = graph("record(ao,g1:a) { field(OUT,\"g2:b.VAL PP nms\") field(FLNK,\"g1:c\") }\nrecord(ai,g2:b) {}\nrecord(ai,g1:c) {}\n");
        assert_eq!(g.edges.len(), 2);
        assert!(g.edges[0].inter_group);
        assert!(!g.edges[1].inter_group);
        assert_eq!(g.edges[1].source_kind, FieldKind::Forward);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, Code::UnknownModifier);
    }

    #[test]
    fn unknown_type_and_field() {
        let (_, d) = graph("record(bogus,a) { field(X,\"1\") }\nrecord(ai,b) { field(ZZZ,\"1\") }\n");
        let codes: Vec<_> = d.iter().map(|d| d.code).collect();
        assert_eq!(codes, [Code::UnknownRecordType, Code::UnknownField]);
        assert_eq!(d[1].location, Location::at(2, 1));
    }

    #[test]
    fn constants_and_hardware_are_not_links() {
        let (g, _) = graph("record(ai,a) { field(INP,\"1.5e3\") }\nrecord(ai,b) { field(INP,\"@asyn(x)\") }\nrecord(ai,c) { field(INP,\"\") }\n");
        assert!(g.edges.is_empty());
    }

    #[test]
    fn dot_output() {
        let (g, _) = graph("record(ai,a) { field(INP,\"gone\") }\n");
        assert_eq!(
            g.to_dot(),
            "digraph db {\n  \"a\" [label=\"a\\n(ai)\"];\n  \"a\" -> \"gone\" [label=\"INP\", style=dashed];\n}\n"
        );
        assert_eq!(LinkGraph::default().to_dot(), "digraph db {\n}\n");
    }
}
