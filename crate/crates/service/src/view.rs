//! The per-group picture of a session sent to clients.

use std::collections::HashSet;

use dbstudio_core::db::effective_field_value;
use dbstudio_core::layout::{resolve_chain, Waypoint};
use dbstudio_core::{group_of, group_view, Diagnostic, FieldKind, GroupPath, Session};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ViewModel {
    pub group_path: String,
    pub revision: u64,
    pub records: Vec<RecordView>,
    pub links: Vec<LinkView>,
    pub subgroups: Vec<SubgroupView>,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RecordView {
    pub name: String,
    #[serde(rename = "type")]
    pub record_type: String,
    pub x: i64,
    pub y: i64,
    pub non_default_fields: Vec<FieldValue>,
    pub field_nodes: Vec<FieldNodeView>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldValue {
    pub name: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldNodeView {
    pub field: String,
    /// `None` when the record type or field is not in the registry.
    pub kind: Option<FieldKind>,
    pub color: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LinkView {
    pub source: String,
    pub target_label: String,
    pub broken: bool,
    pub inter_group: bool,
    pub waypoints: Vec<WaypointView>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WaypointView {
    pub id: String,
    pub x: i64,
    pub y: i64,
}

impl From<Waypoint> for WaypointView {
    fn from(w: Waypoint) -> Self {
        WaypointView { id: w.id, x: w.x, y: w.y }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SubgroupView {
    pub name: String,
    pub member_count: usize,
    pub bounding_box: BoundingBox,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BoundingBox {
    pub x: i64,
    pub y: i64,
    pub width: i64,
    pub height: i64,
}

/// Field node color used when the layout has none.
const DEFAULT_COLOR: u32 = 0;

pub fn build_view(session: &Session, group: &GroupPath, revision: u64) -> ViewModel {
    let doc = session.document();
    let reg = session.registry();
    let sep = session.separator();
    let layout = session.effective_layout();
    let graph = session.graph();
    let gv = group_view(doc, group, sep);
    let members: HashSet<&str> = gv.records.iter().map(String::as_str).collect();

    let links: Vec<LinkView> = graph
        .edges
        .iter()
        .filter(|e| members.contains(e.source_record()))
        .map(|e| LinkView {
            source: e.source_field.clone(),
            target_label: e.target_id(),
            broken: e.broken,
            inter_group: e.inter_group,
            waypoints: resolve_chain(&layout, &e.source_field)
                .map(|r| r.waypoints.into_iter().map(Into::into).collect())
                .unwrap_or_default(),
        })
        .collect();

    // Field nodes: those with stored layout, link sources, and link targets.
    let mut node_ids: Vec<String> = layout.field_nodes.keys().cloned().collect();
    node_ids.extend(graph.edges.iter().map(|e| e.source_field.clone()));
    node_ids.extend(graph.edges.iter().filter(|e| !e.broken).map(|e| e.target_id()));
    let mut seen = HashSet::new();
    node_ids.retain(|id| seen.insert(id.clone()));

    let records = gv
        .records
        .iter()
        .filter_map(|name| doc.get_record(name))
        .map(|rec| {
            let non_default_fields = rec
                .field_values()
                .into_iter()
                .filter(|(f, _)| match effective_field_value(rec, f, reg) {
                    Ok((_, is_default)) => !is_default,
                    Err(_) => true,
                })
                .map(|(f, v)| FieldValue { name: f.to_string(), value: v.to_string() })
                .collect();
            let prefix = format!("{}.", rec.name());
            let field_nodes = node_ids
                .iter()
                .filter_map(|id| id.strip_prefix(&prefix))
                .map(|field| FieldNodeView {
                    field: field.to_string(),
                    kind: reg.lookup_field(rec.record_type(), field).map(|d| d.kind()),
                    color: layout
                        .field_nodes
                        .get(&format!("{prefix}{field}"))
                        .map_or(DEFAULT_COLOR, |n| n.color),
                })
                .collect();
            let pos = layout.records.get(rec.name());
            RecordView {
                name: rec.name().to_string(),
                record_type: rec.record_type().to_string(),
                x: pos.map_or(0, |p| p.x),
                y: pos.map_or(0, |p| p.y),
                non_default_fields,
                field_nodes,
            }
        })
        .collect();

    let subgroups = gv
        .subgroups
        .iter()
        .map(|sg| {
            let path = group.child(&sg.name);
            let mut bbox: Option<(i64, i64, i64, i64)> = None;
            for rec in doc.records() {
                let g = group_of(rec.name(), sep);
                if !g.segments.starts_with(&path.segments) {
                    continue;
                }
                if let Some(p) = layout.records.get(rec.name()) {
                    let b = bbox.get_or_insert((p.x, p.y, p.x, p.y));
                    *b = (b.0.min(p.x), b.1.min(p.y), b.2.max(p.x), b.3.max(p.y));
                }
            }
            let (x0, y0, x1, y1) = bbox.unwrap_or_default();
            SubgroupView {
                name: sg.name.clone(),
                member_count: sg.member_count,
                bounding_box: BoundingBox { x: x0, y: y0, width: x1 - x0, height: y1 - y0 },
            }
        })
        .collect();

    ViewModel {
        group_path: group.joined(),
        revision,
        records,
        links,
        subgroups,
        diagnostics: session.diagnostics(),
    }
}
