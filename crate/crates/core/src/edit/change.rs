//! Reversible primitive mutations. Every command is recorded as a list of
//! these; undo applies the inverses in reverse order.

use indexmap::IndexMap;

use crate::db::{Document, SourceItem};
use crate::layout::{ConnectorLayout, FieldNodeLayout, LayoutTable, RecordLayout};

#[derive(Debug, Clone)]
pub(crate) struct MapChange<V> {
    key: String,
    before: Option<(usize, V)>,
    after: Option<(usize, V)>,
}

impl<V: Clone> MapChange<V> {
    fn apply(&self, map: &mut IndexMap<String, V>) {
        if self.before.is_some() {
            map.shift_remove(&self.key);
        }
        if let Some((i, v)) = &self.after {
            map.shift_insert(*i, self.key.clone(), v.clone());
        }
    }

    fn inverse(&self) -> Self {
        MapChange {
            key: self.key.clone(),
            before: self.after.clone(),
            after: self.before.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Change {
    Item {
        index: usize,
        before: Option<SourceItem>,
        after: Option<SourceItem>,
    },
    Records(MapChange<RecordLayout>),
    FieldNodes(MapChange<FieldNodeLayout>),
    Links(MapChange<String>),
    Connectors(MapChange<ConnectorLayout>),
}

impl Change {
    pub(crate) fn apply(&self, doc: &mut Document, layout: &mut LayoutTable) {
        match self {
            Change::Item { index, before, after } => match (before, after) {
                (Some(_), Some(item)) => {
                    doc.replace_item(*index, item.clone());
                }
                (Some(_), None) => {
                    doc.remove_item(*index);
                }
                (None, Some(item)) => doc.insert_item(*index, item.clone()),
                (None, None) => {}
            },
            Change::Records(c) => c.apply(&mut layout.records),
            Change::FieldNodes(c) => c.apply(&mut layout.field_nodes),
            Change::Links(c) => c.apply(&mut layout.links),
            Change::Connectors(c) => c.apply(&mut layout.connectors),
        }
    }

    pub(crate) fn inverse(&self) -> Change {
        match self {
            Change::Item { index, before, after } => Change::Item {
                index: *index,
                before: after.clone(),
                after: before.clone(),
            },
            Change::Records(c) => Change::Records(c.inverse()),
            Change::FieldNodes(c) => Change::FieldNodes(c.inverse()),
            Change::Links(c) => Change::Links(c.inverse()),
            Change::Connectors(c) => Change::Connectors(c.inverse()),
        }
    }
}

/// Applies changes immediately while recording them, so a failing command
/// can be rolled back and a succeeding one logged.
pub(crate) struct Tx<'a> {
    pub doc: &'a mut Document,
    pub layout: &'a mut LayoutTable,
    changes: Vec<Change>,
}

/// A key-value edit on one layout map. `Some` sets (keeping the position of
/// an existing key), `None` removes.
fn map_change<V: Clone>(map: &IndexMap<String, V>, key: &str, value: Option<V>) -> Option<MapChange<V>> {
    let before = map.get_full(key).map(|(i, _, v)| (i, v.clone()));
    if before.is_none() && value.is_none() {
        return None;
    }
    let index = before.as_ref().map_or(map.len(), |(i, _)| *i);
    Some(MapChange {
        key: key.to_string(),
        before,
        after: value.map(|v| (index, v)),
    })
}

/// Moves `old` to `new` at the same position.
fn map_rename<V: Clone>(map: &IndexMap<String, V>, old: &str, new: &str, value: V) -> Option<[MapChange<V>; 2]> {
    let (i, _, v) = map.get_full(old)?;
    Some([
        MapChange {
            key: old.to_string(),
            before: Some((i, v.clone())),
            after: None,
        },
        MapChange {
            key: new.to_string(),
            before: None,
            after: Some((i, value)),
        },
    ])
}

impl<'a> Tx<'a> {
    pub fn new(doc: &'a mut Document, layout: &'a mut LayoutTable) -> Self {
        Tx { doc, layout, changes: Vec::new() }
    }

    fn push(&mut self, change: Change) {
        change.apply(self.doc, self.layout);
        self.changes.push(change);
    }

    pub fn finish(self) -> Vec<Change> {
        self.changes
    }

    pub fn rollback(self) {
        for c in self.changes.iter().rev() {
            c.inverse().apply(self.doc, self.layout);
        }
    }

    pub fn insert_item(&mut self, index: usize, item: SourceItem) {
        self.push(Change::Item { index, before: None, after: Some(item) });
    }

    pub fn remove_item(&mut self, index: usize) {
        let before = self.doc.items()[index].clone();
        self.push(Change::Item { index, before: Some(before), after: None });
    }

    pub fn replace_item(&mut self, index: usize, item: SourceItem) {
        let before = self.doc.items()[index].clone();
        self.push(Change::Item { index, before: Some(before), after: Some(item) });
    }

    pub fn set_record_layout(&mut self, key: &str, value: Option<RecordLayout>) {
        if let Some(c) = map_change(&self.layout.records, key, value) {
            self.push(Change::Records(c));
        }
    }

    pub fn set_field_node(&mut self, key: &str, value: Option<FieldNodeLayout>) {
        if let Some(c) = map_change(&self.layout.field_nodes, key, value) {
            self.push(Change::FieldNodes(c));
        }
    }

    pub fn set_link(&mut self, key: &str, value: Option<String>) {
        if let Some(c) = map_change(&self.layout.links, key, value) {
            self.push(Change::Links(c));
        }
    }

    pub fn set_connector(&mut self, key: &str, value: Option<ConnectorLayout>) {
        if let Some(c) = map_change(&self.layout.connectors, key, value) {
            self.push(Change::Connectors(c));
        }
    }

    pub fn rename_record_layout(&mut self, old: &str, new: &str, value: RecordLayout) {
        if let Some(cs) = map_rename(&self.layout.records, old, new, value) {
            cs.into_iter().for_each(|c| self.push(Change::Records(c)));
        }
    }

    pub fn rename_field_node(&mut self, old: &str, new: &str, value: FieldNodeLayout) {
        if let Some(cs) = map_rename(&self.layout.field_nodes, old, new, value) {
            cs.into_iter().for_each(|c| self.push(Change::FieldNodes(c)));
        }
    }

    pub fn rename_link(&mut self, old: &str, new: &str, value: String) {
        if let Some(cs) = map_rename(&self.layout.links, old, new, value) {
            cs.into_iter().for_each(|c| self.push(Change::Links(c)));
        }
    }

    pub fn rename_connector(&mut self, old: &str, new: &str, value: ConnectorLayout) {
        if let Some(cs) = map_rename(&self.layout.connectors, old, new, value) {
            cs.into_iter().for_each(|c| self.push(Change::Connectors(c)));
        }
    }
}
