#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use dbstudio_core::{parse_dbd, Command, Session, TypeRegistry};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn db_fixture(name: &str) -> Vec<u8> {
    std::fs::read(fixture_dir().join("db").join(name)).unwrap()
}

/// All `.db` fixtures, sorted by file name.
pub fn corpus() -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(fixture_dir().join("db"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "db"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

pub fn registry() -> Arc<TypeRegistry> {
    let text = std::fs::read(fixture_dir().join("dbd").join("fixture.dbd")).unwrap();
    let (reg, diags) = parse_dbd(&text);
    assert!(diags.is_empty(), "{diags:?}");
    Arc::new(reg)
}

pub fn open(name: &str) -> Session {
    Session::open(name, &db_fixture(name), registry(), ':').0
}

const TYPES: [&str; 3] = ["ai", "ao", "calc"];
const LINK_FIELDS: [(&str, &str); 5] = [("ai", "INP"), ("ai", "FLNK"), ("ao", "OUT"), ("ao", "DOL"), ("calc", "INPA")];

/// Turns a few random numbers into a command that is usually valid for the
/// current state of `s`.
pub fn pick_command(s: &Session, op: u8, a: usize, b: usize, dx: i64, dy: i64) -> Command {
    let names: Vec<String> = s.document().records().map(|r| r.name().to_string()).collect();
    let name = |i: usize| names.get(i % names.len().max(1)).cloned().unwrap_or_else(|| "none".into());
    let connectors: Vec<String> = s.layout().connectors.keys().cloned().collect();
    let link_source = |i: usize| -> String {
        let rec = name(i);
        let rtype = s.document().get_record(&rec).map(|r| r.record_type().to_string()).unwrap_or_default();
        let field = LINK_FIELDS
            .iter()
            .filter(|(t, _)| *t == rtype)
            .map(|(_, f)| *f)
            .nth(b % 2)
            .or_else(|| LINK_FIELDS.iter().find(|(t, _)| *t == rtype).map(|(_, f)| *f))
            .unwrap_or("INP");
        format!("{rec}.{field}")
    };
    match op % 13 {
        0 => Command::CreateRecord {
            record_type: TYPES[b % 3].into(),
            name: format!("n{a}"),
            x: b.is_multiple_of(2).then_some(dx),
            y: b.is_multiple_of(2).then_some(dy),
        },
        1 => Command::DeleteRecord { name: name(a) },
        2 => Command::RenameRecord { old: name(a), new: format!("m{b}") },
        3 => Command::SetField { record: name(a), field: "DESC".into(), value: format!("d{b}") },
        4 => Command::RemoveField { record: name(a), field: "DESC".into() },
        5 => Command::MoveRecord { name: name(a), dx, dy },
        6 => Command::SetLink { source: link_source(a), target: format!("{} PP", name(b)) },
        7 => Command::ClearLink { source: link_source(a) },
        8 => Command::AddConnector { source: link_source(a), x: dx, y: dy },
        9 => Command::MoveConnector {
            id: connectors.get(a % connectors.len().max(1)).cloned().unwrap_or_default(),
            dx,
            dy,
        },
        10 => Command::RemoveConnector {
            id: connectors.get(a % connectors.len().max(1)).cloned().unwrap_or_default(),
        },
        11 => Command::Paste { dx, dy },
        _ => Command::SetField { record: name(a), field: "EGU".into(), value: "mm".into() },
    }
}
