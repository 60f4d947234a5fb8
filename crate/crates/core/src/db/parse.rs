use super::{BodyItem, Document, FieldEntry, LineEnding, Line, Origin, RecordInstance, SourceItem};
use crate::diag::{Code, Diagnostic, Location};
use crate::quote;

/// Parses a `.db` file. Never fails: anything outside the accepted grammar
/// is kept verbatim as an opaque line and reported as a `SyntaxError`.
pub fn parse_db(text: &[u8]) -> (Document, Vec<Diagnostic>) {
    let mut parser = Parser::new(text);
    parser.run();
    let doc = Document {
        source_name: String::new(),
        items: parser.items,
        line_ending: detect_line_ending(text),
    };
    let mut diags = parser.diags;
    diags.extend(doc.check());
    (doc, diags)
}

fn detect_line_ending(text: &[u8]) -> LineEnding {
    let mut crlf = 0usize;
    let mut lf = 0usize;
    for (i, &b) in text.iter().enumerate() {
        if b == b'\n' {
            if i > 0 && text[i - 1] == b'\r' {
                crlf += 1;
            } else {
                lf += 1;
            }
        }
    }
    if crlf > lf {
        LineEnding::CrLf
    } else {
        LineEnding::Lf
    }
}

fn is_hws(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\r' | 0x0b | 0x0c)
}

fn is_ident_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

fn is_name_byte(b: u8) -> bool {
    !(b.is_ascii_whitespace() || matches!(b, b'(' | b')' | b'{' | b'}' | b'"' | b'.'))
}

struct SyntaxErr {
    pos: usize,
    message: String,
}

fn err<T>(pos: usize, message: impl Into<String>) -> Result<T, SyntaxErr> {
    Err(SyntaxErr { pos, message: message.into() })
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    line_starts: Vec<usize>,
    items: Vec<SourceItem>,
    diags: Vec<Diagnostic>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a [u8]) -> Self {
        let mut line_starts = vec![0];
        line_starts.extend(src.iter().enumerate().filter(|(_, &b)| b == b'\n').map(|(i, _)| i + 1));
        Parser {
            src,
            pos: 0,
            line_starts,
            items: Vec::new(),
            diags: Vec::new(),
        }
    }

    fn line_of(&self, pos: usize) -> usize {
        self.line_starts.partition_point(|&s| s <= pos)
    }

    fn location(&self, pos: usize) -> Location {
        let line = self.line_of(pos);
        Location::at(line, pos - self.line_starts[line - 1] + 1)
    }

    fn syntax_error(&mut self, e: SyntaxErr) {
        let loc = self.location(e.pos);
        self.diags.push(Diagnostic::error(Code::SyntaxError, loc, e.message));
    }

    fn peek_at(&self, pos: usize) -> Option<u8> {
        self.src.get(pos).copied()
    }

    /// Index just past the end of the line containing `pos` (after `\n`).
    fn line_end(&self, pos: usize) -> usize {
        match self.src[pos..].iter().position(|&b| b == b'\n') {
            Some(off) => pos + off + 1,
            None => self.src.len(),
        }
    }

    fn skip_hws(&self, mut pos: usize) -> usize {
        while pos < self.src.len() && is_hws(self.src[pos]) {
            pos += 1;
        }
        pos
    }

    fn skip_ws(&self, mut pos: usize) -> usize {
        while pos < self.src.len() && self.src[pos].is_ascii_whitespace() {
            pos += 1;
        }
        pos
    }

    fn ident_end(&self, mut pos: usize) -> usize {
        while pos < self.src.len() && is_ident_byte(self.src[pos]) {
            pos += 1;
        }
        pos
    }

    fn text(&self, from: usize, to: usize) -> String {
        String::from_utf8_lossy(&self.src[from..to]).into_owned()
    }

    fn run(&mut self) {
        while self.pos < self.src.len() {
            let start = self.pos;
            let eol = self.line_end(start);
            let first = self.skip_hws(start);
            let line = self.line_of(start);
            match self.peek_at(first) {
                None | Some(b'\n') => {
                    self.items.push(SourceItem::Blank(Line::new(self.src[start..eol].to_vec(), line)));
                    self.pos = eol;
                }
                Some(b'#') => {
                    let raw = Line::new(self.src[start..eol].to_vec(), line);
                    if self.peek_at(first + 1) == Some(b'!') {
                        self.items.push(SourceItem::Layout(raw));
                    } else {
                        self.items.push(SourceItem::Comment(raw));
                    }
                    self.pos = eol;
                }
                _ if self.starts_record(first) => match self.record(start, first) {
                    Ok((rec, end)) => {
                        self.items.push(SourceItem::Record(rec));
                        self.pos = end;
                    }
                    Err(e) => {
                        let end = self.recover_block(start, eol);
                        self.syntax_error(e);
                        self.items.push(SourceItem::Opaque(Line::new(self.src[start..end].to_vec(), line)));
                        self.pos = end;
                    }
                },
                _ if self.starts_passthrough(first) => {
                    self.items.push(SourceItem::Opaque(Line::new(self.src[start..eol].to_vec(), line)));
                    self.pos = eol;
                }
                Some(_) => {
                    let snippet = self.text(first, eol).trim_end().to_string();
                    self.syntax_error(SyntaxErr {
                        pos: first,
                        message: format!("unexpected content '{snippet}' outside a record"),
                    });
                    self.items.push(SourceItem::Opaque(Line::new(self.src[start..eol].to_vec(), line)));
                    self.pos = eol;
                }
            }
        }
    }

    /// Top-level statements kept verbatim without interpretation:
    /// `alias(...)`, `include "..."`, `path "..."`, `addpath "..."`.
    fn starts_passthrough(&self, pos: usize) -> bool {
        let end = self.ident_end(pos);
        let word = &self.src[pos..end];
        if !matches!(word, b"alias" | b"include" | b"path" | b"addpath") {
            return false;
        }
        matches!(self.peek_at(self.skip_hws(end)), Some(b'(' | b'"'))
    }

    fn starts_record(&self, pos: usize) -> bool {
        let kw = b"record";
        if !self.src[pos..].starts_with(kw) {
            return false;
        }
        let after = pos + kw.len();
        !matches!(self.peek_at(after), Some(b) if is_ident_byte(b))
    }

    /// After a malformed record header, swallow the whole `{ ... }` block
    /// when it opens on the header's first line, so its body lines are not
    /// each reported again.
    fn recover_block(&self, start: usize, eol: usize) -> usize {
        if !self.src[start..eol].contains(&b'{') {
            return eol;
        }
        let mut depth = 0i32;
        let mut in_quote = false;
        let mut i = start;
        while i < self.src.len() {
            let b = self.src[i];
            if in_quote {
                match b {
                    b'\\' => i += 1,
                    b'"' => in_quote = false,
                    b'\n' => in_quote = false,
                    _ => {}
                }
            } else {
                match b {
                    b'"' => in_quote = true,
                    b'{' => depth += 1,
                    b'}' => {
                        depth -= 1;
                        if depth == 0 {
                            return self.line_end(i);
                        }
                    }
                    _ => {}
                }
            }
            i += 1;
        }
        eol
    }

    fn quoted(&self, pos: usize) -> Result<(String, usize), SyntaxErr> {
        debug_assert_eq!(self.src[pos], b'"');
        let mut i = pos + 1;
        while i < self.src.len() {
            match self.src[i] {
                b'\\' if i + 1 < self.src.len() && self.src[i + 1] != b'\n' => i += 2,
                b'"' => {
                    let body = String::from_utf8_lossy(&self.src[pos + 1..i]);
                    return Ok((quote::unescape(&body), i + 1));
                }
                b'\n' => break,
                _ => i += 1,
            }
        }
        err(pos, "unterminated quoted string")
    }

    fn expect(&self, pos: usize, byte: u8, what: &str) -> Result<usize, SyntaxErr> {
        if self.peek_at(pos) == Some(byte) {
            Ok(pos + 1)
        } else {
            err(pos, format!("expected {what}"))
        }
    }

    /// Consumes trailing blanks plus an optional `# comment` and the line
    /// terminator. Returns the new position and the comment with its leading
    /// blanks, if any. Stops before any other content on the same line.
    fn line_tail(&self, pos: usize) -> (usize, Option<String>) {
        let p = self.skip_hws(pos);
        match self.peek_at(p) {
            Some(b'#') => {
                let eol = self.line_end(p);
                let text = self.text(pos, eol);
                let trimmed = text.trim_end_matches(['\n', '\r']).to_string();
                (eol, Some(trimmed))
            }
            Some(b'\n') => (p + 1, None),
            None => (p, None),
            Some(_) => (p, None),
        }
    }

    fn record(&mut self, start: usize, kw: usize) -> Result<(RecordInstance, usize), SyntaxErr> {
        let mut p = self.skip_ws(kw + b"record".len());
        p = self.expect(p, b'(', "'(' after 'record'")?;
        p = self.skip_ws(p);
        let type_end = self.ident_end(p);
        if type_end == p {
            return err(p, "expected record type");
        }
        let record_type = self.text(p, type_end);
        p = self.skip_ws(type_end);
        p = self.expect(p, b',', "',' after record type")?;
        p = self.skip_ws(p);
        let (name, name_quoted) = if self.peek_at(p) == Some(b'"') {
            let (name, end) = self.quoted(p)?;
            p = end;
            (name, true)
        } else {
            let name_start = p;
            while p < self.src.len() && is_name_byte(self.src[p]) {
                p += 1;
            }
            (self.text(name_start, p), false)
        };
        if name.is_empty() {
            return err(p, "expected record name");
        }
        p = self.skip_ws(p);
        if self.peek_at(p) == Some(b'.') {
            return err(p, "record name may not contain '.'");
        }
        p = self.expect(p, b')', "')' after record name")?;
        p = self.skip_ws(p);
        p = self.expect(p, b'{', "'{' to open the record body")?;
        let (p, header_trail) = self.line_tail(p);

        let mut rec = RecordInstance {
            record_type: record_type.clone(),
            name: name.clone(),
            name_quoted,
            line: self.line_of(kw),
            header_trail,
            header: Some(Origin {
                raw: self.src[start..p].to_vec(),
                value: (record_type, name),
            }),
            body: Vec::new(),
            closing: None,
        };
        let end = self.body(&mut rec, p, kw);
        Ok((rec, end))
    }

    fn body(&mut self, rec: &mut RecordInstance, mut pos: usize, kw: usize) -> usize {
        loop {
            let seg = pos;
            let first = self.skip_hws(pos);
            let line = self.line_of(seg);
            match self.peek_at(first) {
                None => {
                    self.syntax_error(SyntaxErr {
                        pos: kw,
                        message: format!("record '{}' is missing its closing '}}'", rec.name),
                    });
                    rec.closing = Some(self.src[seg..].to_vec());
                    return self.release_trailing_layout(rec);
                }
                Some(b'\n') => {
                    pos = first + 1;
                    rec.body.push(BodyItem::Blank(Line::new(self.src[seg..pos].to_vec(), line)));
                }
                Some(b'#') => {
                    pos = self.line_end(first);
                    rec.body.push(BodyItem::Comment(Line::new(self.src[seg..pos].to_vec(), line)));
                }
                Some(b'}') => {
                    let (end, _) = self.line_tail(first + 1);
                    rec.closing = Some(self.src[seg..end].to_vec());
                    return end;
                }
                Some(_) => {
                    pos = self.body_construct(rec, seg, first);
                }
            }
        }
    }

    /// An unterminated record would otherwise swallow the layout block that
    /// follows it. Hand a trailing run of comment and blank lines back to the
    /// top level when it holds `#!` lines, so they are read as layout.
    fn release_trailing_layout(&self, rec: &mut RecordInstance) -> usize {
        let mut cut = None;
        let mut bytes = 0;
        for (i, item) in rec.body.iter().enumerate().rev() {
            match item {
                BodyItem::Blank(l) => bytes += l.raw().len(),
                BodyItem::Comment(l) => {
                    bytes += l.raw().len();
                    if l.raw().starts_with(b"#!") {
                        cut = Some((i, bytes));
                    }
                }
                _ => break,
            }
        }
        match cut {
            Some((i, len)) => {
                rec.body.truncate(i);
                self.src.len() - len
            }
            None => self.src.len(),
        }
    }

    fn body_construct(&mut self, rec: &mut RecordInstance, seg: usize, first: usize) -> usize {
        let word_end = self.ident_end(first);
        let word = &self.src[first..word_end];
        let line = self.line_of(seg);
        if word == b"field" {
            match self.field(word_end) {
                Ok((name, value, after)) => {
                    let (end, trail) = self.line_tail(after);
                    rec.body.push(BodyItem::Field(FieldEntry {
                        name: name.clone(),
                        value: value.clone(),
                        line,
                        trail,
                        origin: Some(Origin {
                            raw: self.src[seg..end].to_vec(),
                            value: (name, value),
                        }),
                    }));
                    return end;
                }
                Err(e) => {
                    let (end, _) = self.scan_opaque(first);
                    self.syntax_error(e);
                    rec.body.push(BodyItem::Opaque(Line::new(self.src[seg..end].to_vec(), line)));
                    return end;
                }
            }
        }
        let (end, balanced) = self.scan_opaque(first);
        let after_word = self.skip_hws(word_end);
        let well_formed = !word.is_empty() && self.peek_at(after_word) == Some(b'(') && balanced;
        if !well_formed {
            let snippet = self.text(first, end).trim_end().to_string();
            self.syntax_error(SyntaxErr {
                pos: first,
                message: format!("unexpected '{snippet}' in record body"),
            });
        }
        rec.body.push(BodyItem::Opaque(Line::new(self.src[seg..end].to_vec(), line)));
        end
    }

    /// Extent of an uninterpreted body construct: to the end of the line, or
    /// up to an unquoted `}` outside parentheses. Also reports whether the
    /// parentheses and quotes balanced.
    fn scan_opaque(&self, from: usize) -> (usize, bool) {
        let mut depth = 0i32;
        let mut saw_paren = false;
        let mut in_quote = false;
        let mut i = from;
        while i < self.src.len() {
            let b = self.src[i];
            if b == b'\n' {
                i += 1;
                break;
            }
            if in_quote {
                match b {
                    b'\\' if i + 1 < self.src.len() && self.src[i + 1] != b'\n' => i += 1,
                    b'"' => in_quote = false,
                    _ => {}
                }
            } else {
                match b {
                    b'"' => in_quote = true,
                    b'(' => {
                        depth += 1;
                        saw_paren = true;
                    }
                    b')' => depth -= 1,
                    b'}' if depth <= 0 => break,
                    _ => {}
                }
            }
            i += 1;
        }
        (i, saw_paren && depth == 0 && !in_quote)
    }

    fn field(&self, mut p: usize) -> Result<(String, String, usize), SyntaxErr> {
        p = self.skip_ws(p);
        p = self.expect(p, b'(', "'(' after 'field'")?;
        p = self.skip_ws(p);
        let name_end = self.ident_end(p);
        if name_end == p {
            return err(p, "expected field name");
        }
        let name = self.text(p, name_end);
        p = self.skip_ws(name_end);
        p = self.expect(p, b',', "',' after field name")?;
        p = self.skip_ws(p);
        if self.peek_at(p) != Some(b'"') {
            return err(p, "expected quoted field value");
        }
        let (value, after) = self.quoted(p)?;
        p = self.skip_ws(after);
        p = self.expect(p, b')', "')' to close the field")?;
        Ok((name, value, p))
    }
}
