use std::collections::{HashMap, HashSet};

use indexmap::IndexSet;

use super::{record_of, resolve_chain, ChainError, ConnectorLayout, FieldNodeLayout, LayoutTable, RecordLayout};
use crate::db::{is_valid_record_name, serialize_db, Document, SourceItem};
use crate::diag::{Code, Diagnostic, Location};
use crate::quote;

pub const DEFAULT_HEADER: &str = "#! Generated by dbstudio (VisualDCT-compatible layout v1)";
pub const DEFAULT_MARKER: &str = "#! Further lines contain layout data used by dbstudio";

/// Text of a `#!` line after the prefix and any blanks.
fn directive_body(text: &str) -> &str {
    text.trim_start().strip_prefix("#!").unwrap_or(text).trim_start()
}

pub(crate) fn is_header_line(text: &str) -> bool {
    directive_body(text).starts_with("Generated by")
}

fn is_marker_line(text: &str) -> bool {
    directive_body(text).starts_with("Further lines contain")
}

#[derive(Debug, Clone, PartialEq)]
enum Arg {
    Quoted(String),
    Bare(String),
}

impl Arg {
    fn text(&self) -> &str {
        match self {
            Arg::Quoted(s) | Arg::Bare(s) => s,
        }
    }

    fn int(&self) -> Option<i64> {
        match self {
            Arg::Bare(s) => s.parse().ok(),
            Arg::Quoted(_) => None,
        }
    }
}

/// Splits `NAME(args)` into name and arguments. `None` when the body is not
/// a call, or its arguments do not lex.
fn split_call(body: &str) -> Option<(&str, Result<Vec<Arg>, String>)> {
    let open = body.find('(')?;
    let name = body[..open].trim_end();
    if name.is_empty() || !name.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_') {
        return None;
    }
    Some((name, lex_args(&body[open + 1..])))
}

fn lex_args(s: &str) -> Result<Vec<Arg>, String> {
    let mut args = Vec::new();
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    loop {
        while i < chars.len() && chars[i].is_whitespace() {
            i += 1;
        }
        if i >= chars.len() {
            return Err("missing ')'".into());
        }
        if chars[i] == ')' && args.is_empty() {
            i += 1;
            break;
        }
        if chars[i] == '"' {
            let mut j = i + 1;
            let mut body = String::new();
            loop {
                match chars.get(j) {
                    None => return Err("unterminated quoted argument".into()),
                    Some('\\') if j + 1 < chars.len() => {
                        body.push('\\');
                        body.push(chars[j + 1]);
                        j += 2;
                    }
                    Some('"') => break,
                    Some(&c) => {
                        body.push(c);
                        j += 1;
                    }
                }
            }
            args.push(Arg::Quoted(quote::unescape(&body)));
            i = j + 1;
        } else {
            let start = i;
            while i < chars.len() && !matches!(chars[i], ',' | ')' | '"') {
                i += 1;
            }
            let tok: String = chars[start..i].iter().collect();
            args.push(Arg::Bare(tok.trim().to_string()));
        }
        while i < chars.len() && chars[i].is_whitespace() {
            i += 1;
        }
        match chars.get(i) {
            Some(',') => i += 1,
            Some(')') => {
                i += 1;
                break;
            }
            _ => return Err("expected ',' or ')' between arguments".into()),
        }
    }
    if chars[i..].iter().any(|c| !c.is_whitespace()) {
        return Err("unexpected text after ')'".into());
    }
    Ok(args)
}

fn ints<const N: usize>(args: &[Arg], at: [usize; N]) -> Option<[i64; N]> {
    let mut out = [0; N];
    for (slot, &k) in out.iter_mut().zip(at.iter()) {
        *slot = args[k].int()?;
    }
    Some(out)
}

enum Decoded {
    Record(String, RecordLayout),
    Field(String, FieldNodeLayout),
    Link(String, String),
    Connector(ConnectorLayout),
}

fn decode_call(name: &str, args: &[Arg]) -> Result<Option<Decoded>, String> {
    let arity = match name {
        "Record" | "Connector" => 6,
        "Field" => 4,
        "Link" => 2,
        _ => return Ok(None),
    };
    if args.len() != arity {
        return Err(format!("{name} takes {arity} arguments, found {}", args.len()));
    }
    let bad_int = || format!("{name} has a non-integer numeric argument");
    let decoded = match name {
        "Record" => {
            let [x, y, flag_a, flag_b] = ints(args, [1, 2, 3, 4]).ok_or_else(bad_int)?;
            Decoded::Record(
                args[0].text().to_string(),
                RecordLayout { x, y, flag_a, flag_b, label: args[5].text().to_string() },
            )
        }
        "Field" => {
            let [color, flag] = ints(args, [1, 2]).ok_or_else(bad_int)?;
            if !(0..=0xFF_FFFF).contains(&color) {
                return Err(format!("field color {color} is outside 0..16777215"));
            }
            Decoded::Field(
                args[0].text().to_string(),
                FieldNodeLayout { color: color as u32, flag, label: args[3].text().to_string() },
            )
        }
        "Link" => Decoded::Link(args[0].text().to_string(), args[1].text().to_string()),
        _ => {
            let [x, y, mode] = ints(args, [2, 3, 4]).ok_or_else(bad_int)?;
            let (id, next) = (args[0].text().to_string(), args[1].text().to_string());
            if id == next {
                return Err(format!("connector '{id}' points at itself"));
            }
            Decoded::Connector(ConnectorLayout { id, next, x, y, mode, label: args[5].text().to_string() })
        }
    };
    Ok(Some(decoded))
}

/// Reads every layout line of `doc`. Never fails; defective lines are kept
/// in `unknown_directives` with a warning.
pub fn decode_layout(doc: &Document) -> (LayoutTable, Vec<Diagnostic>) {
    let mut table = LayoutTable::default();
    let mut diags = Vec::new();
    let mut link_lines: HashMap<String, usize> = HashMap::new();
    let mut seen_header = false;
    let mut seen_marker = false;
    for line in doc.layout_lines() {
        let text = line.text();
        let loc = Location::at(line.line(), 1);
        if !seen_header && is_header_line(&text) {
            seen_header = true;
            table.header = (text != DEFAULT_HEADER).then(|| text.clone());
            continue;
        }
        if !seen_marker && is_marker_line(&text) {
            seen_marker = true;
            table.marker = (text != DEFAULT_MARKER).then(|| text.clone());
            continue;
        }
        let body = directive_body(&text);
        let outcome = match split_call(body) {
            None => Ok(None),
            Some((name, Err(e))) => match name {
                "Record" | "Field" | "Link" | "Connector" => Err(format!("{name}: {e}")),
                _ => Ok(None),
            },
            Some((name, Ok(args))) => decode_call(name, &args),
        };
        let duplicate = match outcome {
            Ok(Some(Decoded::Record(name, rl))) => insert_new(&mut table.records, name, rl),
            Ok(Some(Decoded::Field(id, f))) => insert_new(&mut table.field_nodes, id, f),
            Ok(Some(Decoded::Link(src, start))) => {
                link_lines.insert(src.clone(), line.line());
                insert_new(&mut table.links, src, start)
            }
            Ok(Some(Decoded::Connector(c))) => insert_new(&mut table.connectors, c.id.clone(), c),
            Ok(None) => {
                diags.push(Diagnostic::warning(
                    Code::UnknownDirective,
                    loc,
                    format!("unrecognized layout line '{text}' preserved"),
                ));
                table.unknown_directives.push(text);
                continue;
            }
            Err(message) => {
                diags.push(Diagnostic::warning(Code::MalformedDirective, loc, message));
                table.unknown_directives.push(text);
                continue;
            }
        };
        if let Some(key) = duplicate {
            diags.push(Diagnostic::warning(
                Code::DuplicateDirective,
                loc,
                format!("'{key}' already has layout data; later line preserved but ignored"),
            ));
            table.unknown_directives.push(text);
        }
    }
    for src in table.links.keys() {
        let loc = Location::at(link_lines.get(src).copied().unwrap_or(0), 1);
        match resolve_chain(&table, src) {
            Ok(_) => {}
            Err(e @ ChainError::DanglingChain(_)) => {
                diags.push(Diagnostic::warning(Code::DanglingChain, loc, format!("link from {src}: {e}")))
            }
            Err(e @ ChainError::CyclicChain(_)) => {
                diags.push(Diagnostic::warning(Code::CyclicChain, loc, format!("link from {src}: {e}")))
            }
            Err(ChainError::NoLink(_)) => {}
        }
    }
    (table, diags)
}

fn insert_new<V>(map: &mut indexmap::IndexMap<String, V>, key: String, value: V) -> Option<String> {
    if map.contains_key(&key) {
        Some(key)
    } else {
        map.insert(key, value);
        None
    }
}

fn name_arg(name: &str) -> String {
    if is_valid_record_name(name) && !name.contains(',') {
        name.to_string()
    } else {
        quote::quoted(name)
    }
}

fn record_line(name: &str, r: &RecordLayout) -> String {
    format!("#! Record({},{},{},{},{},{})", name_arg(name), r.x, r.y, r.flag_a, r.flag_b, quote::quoted(&r.label))
}

fn field_line(id: &str, f: &FieldNodeLayout) -> String {
    format!("#! Field({},{},{},{})", quote::quoted(id), f.color, f.flag, quote::quoted(&f.label))
}

fn link_line(src: &str, start: &str) -> String {
    format!("#! Link({},{})", quote::quoted(src), quote::quoted(start))
}

fn connector_line(c: &ConnectorLayout) -> String {
    format!(
        "#! Connector({},{},{},{},{},{})",
        quote::quoted(&c.id),
        quote::quoted(&c.next),
        c.x,
        c.y,
        c.mode,
        quote::quoted(&c.label)
    )
}

/// Encodes in table order.
pub fn encode_layout(table: &LayoutTable) -> Vec<String> {
    encode_layout_ordered(table, std::iter::empty())
}

/// Header, marker, then per record (in `record_order`, then any others in
/// table order): its Record line, its Field lines, and each of its Links
/// followed by the connectors of that chain. Connectors not reached from a
/// link and unknown lines come last.
pub fn encode_layout_ordered<'a>(table: &LayoutTable, record_order: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let mut lines = vec![
        table.header.clone().unwrap_or_else(|| DEFAULT_HEADER.to_string()),
        table.marker.clone().unwrap_or_else(|| DEFAULT_MARKER.to_string()),
    ];
    let mut order: IndexSet<&str> = record_order.into_iter().collect();
    order.extend(table.records.keys().map(String::as_str));
    let mut fields_of: HashMap<&str, Vec<&str>> = HashMap::new();
    for id in table.field_nodes.keys() {
        order.insert(record_of(id));
        fields_of.entry(record_of(id)).or_default().push(id);
    }
    let mut links_of: HashMap<&str, Vec<&str>> = HashMap::new();
    for src in table.links.keys() {
        order.insert(record_of(src));
        links_of.entry(record_of(src)).or_default().push(src);
    }
    let mut emitted: HashSet<&str> = HashSet::new();
    for rec in &order {
        if let Some(r) = table.records.get(*rec) {
            lines.push(record_line(rec, r));
        }
        for id in fields_of.get(rec).into_iter().flatten() {
            lines.push(field_line(id, &table.field_nodes[*id]));
        }
        for src in links_of.get(rec).into_iter().flatten() {
            let start = &table.links[*src];
            lines.push(link_line(src, start));
            let mut next = start.as_str();
            while let Some(c) = table.connectors.get(next) {
                if !emitted.insert(c.id.as_str()) {
                    break;
                }
                lines.push(connector_line(c));
                next = &c.next;
            }
        }
    }
    for c in table.connectors.values() {
        if emitted.insert(c.id.as_str()) {
            lines.push(connector_line(c));
        }
    }
    lines.extend(table.unknown_directives.iter().cloned());
    lines
}

/// Serializes `doc` with `table` as its layout. When `table` equals the one
/// decoded at load (`baseline`), the document bytes are emitted untouched.
/// Otherwise every layout line is dropped and a fresh block is written: the
/// header line stays where a leading header was, the rest goes at the end.
pub fn render_document(doc: &Document, table: &LayoutTable, baseline: &LayoutTable) -> Vec<u8> {
    if table == baseline {
        return serialize_db(doc);
    }
    let nl = doc.line_ending().as_str();
    let first_record = doc
        .items()
        .iter()
        .position(|i| matches!(i, SourceItem::Record(_)))
        .unwrap_or(doc.len());
    let header_slot = doc.items()[..first_record]
        .iter()
        .position(|i| matches!(i, SourceItem::Layout(l) if is_header_line(&l.text())));
    let names: Vec<&str> = doc.records().map(|r| r.name()).collect();
    let encoded = encode_layout_ordered(table, names.iter().copied());
    let (head, rest) = match header_slot {
        Some(_) => (Some(&encoded[0]), &encoded[1..]),
        None => (None, &encoded[..]),
    };

    let mut out = Vec::new();
    for (idx, item) in doc.items().iter().enumerate() {
        if let SourceItem::Layout(_) = item {
            if Some(idx) == header_slot {
                out.extend_from_slice(head.expect("header slot implies header").as_bytes());
                out.extend_from_slice(nl.as_bytes());
            }
            continue;
        }
        crate::db::write::write_item(&mut out, item, nl);
    }
    if !out.is_empty() {
        if !out.ends_with(b"\n") {
            out.extend_from_slice(nl.as_bytes());
        }
        let blank_tail = out.ends_with(b"\n\n") || out.ends_with(b"\n\r\n") || out == b"\n" || out == b"\r\n";
        let only_header = header_slot.is_some() && out.len() == head.map_or(0, |h| h.len() + nl.len());
        if !blank_tail && !only_header {
            out.extend_from_slice(nl.as_bytes());
        }
    }
    for line in rest {
        out.extend_from_slice(line.as_bytes());
        out.extend_from_slice(nl.as_bytes());
    }
    out
}
