use std::collections::{HashMap, HashSet};

use super::{LayoutTable, RecordLayout};
use crate::db::Document;
use crate::topology::group_of;

/// Grid used to place records that have no layout data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridConfig {
    pub origin_x: i64,
    pub origin_y: i64,
    pub pitch_x: i64,
    pub pitch_y: i64,
    pub columns: i64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            origin_x: 100,
            origin_y: 100,
            pitch_x: 160,
            pitch_y: 100,
            columns: 8,
        }
    }
}

impl GridConfig {
    fn cell_of(&self, x: i64, y: i64) -> Option<i64> {
        if x < self.origin_x || y < self.origin_y {
            return None;
        }
        let col = (x - self.origin_x) / self.pitch_x;
        if col >= self.columns {
            return None;
        }
        let row = (y - self.origin_y) / self.pitch_y;
        Some(row * self.columns + col)
    }

    fn position(&self, cell: i64) -> (i64, i64) {
        (
            self.origin_x + (cell % self.columns) * self.pitch_x,
            self.origin_y + (cell / self.columns) * self.pitch_y,
        )
    }
}

pub fn auto_layout(doc: &Document, table: &LayoutTable, separator: char) -> LayoutTable {
    auto_layout_with(doc, table, separator, &GridConfig::default())
}

/// Places every record of `doc` that has no entry in `table`. Each group
/// fills its own row-major grid in document order, skipping cells already
/// holding a positioned record of that group. Existing entries are kept.
pub fn auto_layout_with(doc: &Document, table: &LayoutTable, separator: char, grid: &GridConfig) -> LayoutTable {
    let mut out = table.clone();
    let group_key = |name: &str| group_of(name, separator).segments;
    let mut occupied: HashMap<Vec<String>, HashSet<i64>> = HashMap::new();
    for (name, r) in &table.records {
        if let Some(cell) = grid.cell_of(r.x, r.y) {
            occupied.entry(group_key(name)).or_default().insert(cell);
        }
    }
    let mut cursor: HashMap<Vec<String>, i64> = HashMap::new();
    for rec in doc.records() {
        let name = rec.name();
        if out.records.contains_key(name) {
            continue;
        }
        let group = group_key(name);
        let taken = occupied.entry(group.clone()).or_default();
        let next = cursor.entry(group).or_insert(0);
        while taken.contains(next) {
            *next += 1;
        }
        let (x, y) = grid.position(*next);
        taken.insert(*next);
        *next += 1;
        let label = name.rsplit(separator).next().unwrap_or(name).to_string();
        out.records.insert(name.to_string(), RecordLayout { x, y, flag_a: 0, flag_b: 1, label });
    }
    out
}
