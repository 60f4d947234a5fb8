use super::{is_valid_record_name, BodyItem, Document, FieldEntry, Line, RecordInstance, SourceItem};
use crate::quote;

/// Emits original bytes for untouched pieces and canonical text for new or
/// edited ones.
pub fn serialize_db(doc: &Document) -> Vec<u8> {
    let nl = doc.line_ending().as_str();
    let mut out = Vec::with_capacity(doc.items().len() * 48);
    for item in doc.items() {
        write_item(&mut out, item, nl);
    }
    out
}

pub(crate) fn write_item(out: &mut Vec<u8>, item: &SourceItem, nl: &str) {
    match item {
        SourceItem::Record(rec) => write_record(out, rec, nl),
        SourceItem::Comment(l) | SourceItem::Layout(l) | SourceItem::Blank(l) | SourceItem::Opaque(l) => {
            write_line(out, l, "", nl)
        }
    }
}

fn ensure_line_start(out: &mut Vec<u8>, nl: &str) {
    if !out.is_empty() && !out.ends_with(b"\n") {
        out.extend_from_slice(nl.as_bytes());
    }
}

fn write_line(out: &mut Vec<u8>, line: &Line, indent: &str, nl: &str) {
    if line.line() > 0 {
        out.extend_from_slice(line.raw());
    } else {
        ensure_line_start(out, nl);
        out.extend_from_slice(indent.as_bytes());
        out.extend_from_slice(line.raw());
        out.extend_from_slice(nl.as_bytes());
    }
}

fn header_text(rec: &RecordInstance) -> String {
    let name = if rec.name_quoted || !is_valid_record_name(&rec.name) {
        quote::quoted(&rec.name)
    } else {
        rec.name.clone()
    };
    format!("record({},{}) {{", rec.record_type, name)
}

fn field_text(f: &FieldEntry) -> String {
    format!("  field({},{})", f.name, quote::quoted(&f.value))
}

fn write_record(out: &mut Vec<u8>, rec: &RecordInstance, nl: &str) {
    match &rec.header {
        Some(origin) if !rec.header_is_dirty() => out.extend_from_slice(&origin.raw),
        _ => {
            ensure_line_start(out, nl);
            out.extend_from_slice(header_text(rec).as_bytes());
            if let Some(trail) = &rec.header_trail {
                out.extend_from_slice(trail.as_bytes());
            }
            out.extend_from_slice(nl.as_bytes());
        }
    }
    for item in &rec.body {
        match item {
            BodyItem::Field(f) => match &f.origin {
                Some(origin) if !f.is_dirty() => out.extend_from_slice(&origin.raw),
                _ => {
                    ensure_line_start(out, nl);
                    out.extend_from_slice(field_text(f).as_bytes());
                    if let Some(trail) = &f.trail {
                        out.extend_from_slice(trail.as_bytes());
                    }
                    out.extend_from_slice(nl.as_bytes());
                }
            },
            BodyItem::Comment(l) | BodyItem::Blank(l) | BodyItem::Opaque(l) => write_line(out, l, "  ", nl),
        }
    }
    match &rec.closing {
        Some(raw) => out.extend_from_slice(raw),
        None => {
            ensure_line_start(out, nl);
            out.push(b'}');
            out.extend_from_slice(nl.as_bytes());
        }
    }
}

/// Fully canonical rendering of a document: records rebuilt from their
/// payload, other lines trimmed of trailing blanks.
pub fn canonical_text(doc: &Document) -> Vec<u8> {
    let nl = doc.line_ending().as_str();
    let mut out = Vec::new();
    for item in doc.items() {
        match item {
            SourceItem::Record(rec) => {
                out.extend_from_slice(header_text(rec).as_bytes());
                if let Some(trail) = &rec.header_trail {
                    out.extend_from_slice(trail.trim_end().as_bytes());
                }
                out.extend_from_slice(nl.as_bytes());
                for b in &rec.body {
                    match b {
                        BodyItem::Field(f) => {
                            out.extend_from_slice(field_text(f).as_bytes());
                            if let Some(trail) = &f.trail {
                                out.extend_from_slice(trail.trim_end().as_bytes());
                            }
                        }
                        BodyItem::Blank(_) => {}
                        BodyItem::Comment(l) | BodyItem::Opaque(l) => {
                            out.extend_from_slice(b"  ");
                            out.extend_from_slice(l.text().trim().as_bytes());
                        }
                    }
                    out.extend_from_slice(nl.as_bytes());
                }
                out.push(b'}');
                out.extend_from_slice(nl.as_bytes());
            }
            SourceItem::Blank(_) => out.extend_from_slice(nl.as_bytes()),
            SourceItem::Comment(l) | SourceItem::Layout(l) | SourceItem::Opaque(l) => {
                out.extend_from_slice(l.text().trim().as_bytes());
                out.extend_from_slice(nl.as_bytes());
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::db::parse_db;

    #[test]
    fn new_record_is_canonical() {
        let mut doc = Document::new("t");
        let mut rec = RecordInstance::new("ai", "x");
        rec.set_field("INP", "a \"b\"");
        doc.push_item(SourceItem::Record(rec));
        assert_eq!(
            String::from_utf8(serialize_db(&doc)).unwrap(),
            "record(ai,x) {\n  field(INP,\"a \\\"b\\\"\")\n}\n"
        );
    }

    #[test]
    fn edited_field_keeps_trailing_comment_and_line_ending() {
        let (mut doc, _) = parse_db(b"record(ai,x) {\r\n\tfield(INP, \"a\")  # keep\r\n}\r\n");
        doc.get_record_mut("x").unwrap().set_field("INP", "b");
        assert_eq!(
            serialize_db(&doc),
            b"record(ai,x) {\r\n  field(INP,\"b\")  # keep\r\n}\r\n"
        );
    }

    #[test]
    fn restoring_value_restores_bytes() {
        let text = b"record(ai,x) {\n\tfield( INP ,\"a\")\n}\n";
        let (mut doc, _) = parse_db(text);
        let rec = doc.get_record_mut("x").unwrap();
        rec.set_field("INP", "b");
        rec.set_field("INP", "a");
        rec.set_name("y");
        rec.set_name("x");
        assert!(!rec.is_dirty());
        assert_eq!(serialize_db(&doc), text);
    }

    #[test]
    fn canonical_is_stable() {
        let (doc, _) = parse_db(b"record( ai , x )   {  # c\n\tfield(A,\"1\") # t\n\n  info(a,\"b\")\n}\n");
        let once = canonical_text(&doc);
        let (again, diags) = parse_db(&once);
        assert!(diags.is_empty(), "{diags:?}");
        assert_eq!(canonical_text(&again), once);
        assert_eq!(serialize_db(&again), once);
    }
}
