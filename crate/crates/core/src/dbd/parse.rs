use std::collections::HashMap;
use std::io;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;

use super::{DbfType, DeviceDef, FieldDef, MenuChoice, RecordTypeDef, TypeRegistry};
use crate::diag::{Code, Diagnostic, Location};

/// Supplies the contents of `include "..."` targets.
pub trait IncludeResolver {
    /// Resolves `path` as included from the file identified by `from`.
    /// Returns an identity for the resolved file (used for cycle detection
    /// and diagnostics) and its contents.
    fn resolve(&self, from: &str, path: &str) -> io::Result<(String, Vec<u8>)>;
}

/// Rejects every include.
pub struct NoIncludes;

impl IncludeResolver for NoIncludes {
    fn resolve(&self, _from: &str, path: &str) -> io::Result<(String, Vec<u8>)> {
        Err(io::Error::new(io::ErrorKind::NotFound, format!("includes are not available: {path}")))
    }
}

/// Resolves includes relative to the directory of the including file.
#[derive(Debug, Default)]
pub struct FsResolver;

impl IncludeResolver for FsResolver {
    fn resolve(&self, from: &str, path: &str) -> io::Result<(String, Vec<u8>)> {
        let base = Path::new(from).parent().map(Path::to_path_buf).unwrap_or_default();
        let full: PathBuf = base.join(path);
        let contents = std::fs::read(&full)?;
        let identity = std::fs::canonicalize(&full).unwrap_or(full);
        Ok((identity.display().to_string(), contents))
    }
}

pub fn parse_dbd(text: &[u8]) -> (TypeRegistry, Vec<Diagnostic>) {
    parse_dbd_with(text, "", &NoIncludes)
}

/// Parses a dbd file named `name`, splicing includes through `resolver`.
pub fn parse_dbd_with(text: &[u8], name: &str, resolver: &dyn IncludeResolver) -> (TypeRegistry, Vec<Diagnostic>) {
    let mut lexer = Expander {
        resolver,
        files: vec![name.to_string()],
        diags: Vec::new(),
    };
    let mut stack = vec![name.to_string()];
    let tokens = lexer.expand(text, 0, &mut stack);
    let mut parser = Parser {
        toks: tokens,
        i: 0,
        files: lexer.files,
        diags: lexer.diags,
        reg: TypeRegistry::default(),
        menu_refs: Vec::new(),
    };
    parser.run();
    parser.check_menus();
    (parser.reg, parser.diags)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Str(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("'{w}'"),
            Tok::Str(s) => format!("\"{s}\""),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::LBrace => "'{'".into(),
            Tok::RBrace => "'}'".into(),
            Tok::Comma => "','".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    file: usize,
    line: usize,
    col: usize,
}

struct Expander<'r> {
    resolver: &'r dyn IncludeResolver,
    files: Vec<String>,
    diags: Vec<Diagnostic>,
}

fn diag_for(files: &[String], file: usize, d: Diagnostic) -> Diagnostic {
    if file == 0 {
        d
    } else {
        d.in_file(files[file].clone())
    }
}

impl Expander<'_> {
    fn report(&mut self, file: usize, d: Diagnostic) {
        let d = diag_for(&self.files, file, d);
        self.diags.push(d);
    }

    fn tokenize(&mut self, text: &[u8], file: usize) -> Vec<Token> {
        let mut toks = Vec::new();
        let mut i = 0;
        let mut line = 1;
        let mut line_start = 0;
        let mut at_line_start = true;
        while i < text.len() {
            let b = text[i];
            let col = i - line_start + 1;
            if b == b'\n' {
                i += 1;
                line += 1;
                line_start = i;
                at_line_start = true;
                continue;
            }
            if b.is_ascii_whitespace() {
                i += 1;
                continue;
            }
            if b == b'#' || (b == b'%' && at_line_start) {
                while i < text.len() && text[i] != b'\n' {
                    i += 1;
                }
                continue;
            }
            at_line_start = false;
            let simple = match b {
                b'(' => Some(Tok::LParen),
                b')' => Some(Tok::RParen),
                b'{' => Some(Tok::LBrace),
                b'}' => Some(Tok::RBrace),
                b',' => Some(Tok::Comma),
                _ => None,
            };
            if let Some(tok) = simple {
                toks.push(Token { tok, file, line, col });
                i += 1;
                continue;
            }
            if b == b'"' {
                let start = i + 1;
                let mut j = start;
                let mut closed = false;
                while j < text.len() && text[j] != b'\n' {
                    match text[j] {
                        b'\\' if j + 1 < text.len() && text[j + 1] != b'\n' => j += 2,
                        b'"' => {
                            closed = true;
                            break;
                        }
                        _ => j += 1,
                    }
                }
                let body = String::from_utf8_lossy(&text[start..j.min(text.len())]);
                if !closed {
                    self.report(
                        file,
                        Diagnostic::error(Code::SyntaxError, Location::at(line, col), "unterminated quoted string"),
                    );
                }
                toks.push(Token { tok: Tok::Str(crate::quote::unescape(&body)), file, line, col });
                i = if closed { j + 1 } else { j };
                continue;
            }
            let start = i;
            while i < text.len() && !text[i].is_ascii_whitespace() && !b"(){},\"#".contains(&text[i]) {
                i += 1;
            }
            let word = String::from_utf8_lossy(&text[start..i]).into_owned();
            toks.push(Token { tok: Tok::Word(word), file, line, col });
        }
        toks
    }

    fn expand(&mut self, text: &[u8], file: usize, stack: &mut Vec<String>) -> Vec<Token> {
        let raw = self.tokenize(text, file);
        let mut out = Vec::with_capacity(raw.len());
        let mut it = raw.into_iter().peekable();
        while let Some(t) = it.next() {
            if t.tok != Tok::Word("include".into()) {
                out.push(t);
                continue;
            }
            let loc = Location::at(t.line, t.col);
            let path = match it.peek() {
                Some(Token { tok: Tok::Str(p), .. }) => p.clone(),
                _ => {
                    self.report(
                        file,
                        Diagnostic::error(Code::SyntaxError, loc, "include must be followed by a quoted path"),
                    );
                    continue;
                }
            };
            it.next();
            let from = self.files[file].clone();
            match self.resolver.resolve(&from, &path) {
                Ok((identity, contents)) => {
                    if stack.contains(&identity) {
                        self.report(
                            file,
                            Diagnostic::error(Code::IncludeCycle, loc, format!("include cycle through '{path}'")),
                        );
                        continue;
                    }
                    self.files.push(identity.clone());
                    let idx = self.files.len() - 1;
                    stack.push(identity);
                    let nested = self.expand(&contents, idx, stack);
                    stack.pop();
                    out.extend(nested);
                }
                Err(e) => self.report(
                    file,
                    Diagnostic::error(Code::IncludeNotFound, loc, format!("cannot include '{path}': {e}")),
                ),
            }
        }
        out
    }
}

struct SynErr {
    at: usize,
    message: String,
}

type PResult<T> = Result<T, SynErr>;

const KNOWN_PROPERTIES: &[&str] = &[
    "prompt", "initial", "promptgroup", "menu", "special", "interest", "size", "pp", "asl", "base", "extra", "prop",
];

const SKIPPED_STATEMENTS: &[&str] = &["driver", "registrar", "variable", "function", "link", "breaktable"];

struct Parser {
    toks: Vec<Token>,
    i: usize,
    files: Vec<String>,
    diags: Vec<Diagnostic>,
    reg: TypeRegistry,
    menu_refs: Vec<(String, String, usize)>,
}

impl Parser {
    fn loc(&self, at: usize) -> (usize, Location) {
        match self.toks.get(at).or_else(|| self.toks.last()) {
            Some(t) => (t.file, Location::at(t.line, t.col)),
            None => (0, Location::at(1, 1)),
        }
    }

    fn push(&mut self, at: usize, make: impl FnOnce(Location) -> Diagnostic) {
        let (file, loc) = self.loc(at);
        let d = diag_for(&self.files, file, make(loc));
        self.diags.push(d);
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|t| &t.tok)
    }

    fn fail<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(SynErr { at: self.i, message: message.into() })
    }

    fn expect(&mut self, want: Tok) -> PResult<()> {
        match self.peek() {
            Some(t) if *t == want => {
                self.i += 1;
                Ok(())
            }
            Some(t) => self.fail(format!("expected {}, found {}", want.describe(), t.describe())),
            None => self.fail(format!("expected {}, found end of file", want.describe())),
        }
    }

    fn word(&mut self, what: &str) -> PResult<String> {
        match self.peek() {
            Some(Tok::Word(w)) => {
                let w = w.clone();
                self.i += 1;
                Ok(w)
            }
            Some(t) => self.fail(format!("expected {what}, found {}", t.describe())),
            None => self.fail(format!("expected {what}, found end of file")),
        }
    }

    fn string(&mut self, what: &str) -> PResult<String> {
        match self.peek() {
            Some(Tok::Str(s)) => {
                let s = s.clone();
                self.i += 1;
                Ok(s)
            }
            Some(t) => self.fail(format!("expected {what}, found {}", t.describe())),
            None => self.fail(format!("expected {what}, found end of file")),
        }
    }

    /// Index just past the token that closes the bracket opened at `open`.
    fn matching_close(&self, open: usize) -> usize {
        let mut depth = 0i32;
        for (k, t) in self.toks.iter().enumerate().skip(open) {
            match t.tok {
                Tok::LParen | Tok::LBrace => depth += 1,
                Tok::RParen | Tok::RBrace => {
                    depth -= 1;
                    if depth == 0 {
                        return k + 1;
                    }
                }
                _ => {}
            }
        }
        self.toks.len()
    }

    /// Skips a word plus an optional `(...)` and `{...}`.
    fn skip_statement(&mut self) {
        self.i += 1;
        if self.peek() == Some(&Tok::LParen) {
            self.i = self.matching_close(self.i);
        }
        if self.peek() == Some(&Tok::LBrace) {
            self.i = self.matching_close(self.i);
        }
    }

    fn syntax(&mut self, e: SynErr) {
        self.push(e.at, |loc| Diagnostic::error(Code::SyntaxError, loc, e.message));
    }

    fn run(&mut self) {
        while let Some(tok) = self.peek().cloned() {
            let start = self.i;
            match tok {
                Tok::Word(w) if w == "menu" => {
                    if let Err(e) = self.menu() {
                        self.syntax(e);
                        self.recover(start);
                    }
                }
                Tok::Word(w) if w == "recordtype" => {
                    if let Err(e) = self.recordtype() {
                        self.syntax(e);
                        self.recover(start);
                    }
                }
                Tok::Word(w) if w == "device" => {
                    if let Err(e) = self.device() {
                        self.syntax(e);
                        self.recover(start);
                    }
                }
                Tok::Word(w) if SKIPPED_STATEMENTS.contains(&w.as_str()) => {
                    self.push(start, |loc| {
                        Diagnostic::warning(Code::SkippedConstruct, loc, format!("'{w}' definitions are not used"))
                    });
                    self.skip_statement();
                }
                other => {
                    let msg = format!("unexpected {} at top level", other.describe());
                    self.push(start, |loc| Diagnostic::error(Code::SyntaxError, loc, msg));
                    self.skip_statement();
                }
            }
        }
    }

    /// After an error inside the statement starting at `start`, continue
    /// after that statement's block.
    fn recover(&mut self, start: usize) {
        let mut k = start + 1;
        if self.toks.get(k).map(|t| &t.tok) == Some(&Tok::LParen) {
            k = self.matching_close(k);
        }
        if self.toks.get(k).map(|t| &t.tok) == Some(&Tok::LBrace) {
            k = self.matching_close(k);
        }
        self.i = k.max(self.i.min(self.toks.len())).max(start + 1);
    }

    fn menu(&mut self) -> PResult<()> {
        self.i += 1;
        self.expect(Tok::LParen)?;
        let name = self.word("menu name")?;
        self.expect(Tok::RParen)?;
        self.expect(Tok::LBrace)?;
        let mut choices = Vec::new();
        loop {
            match self.peek() {
                Some(Tok::RBrace) => {
                    self.i += 1;
                    break;
                }
                Some(Tok::Word(w)) if w == "choice" => {
                    self.i += 1;
                    self.expect(Tok::LParen)?;
                    let id = self.word("choice identifier")?;
                    self.expect(Tok::Comma)?;
                    let label = self.string("choice string")?;
                    self.expect(Tok::RParen)?;
                    choices.push(MenuChoice { id, label });
                }
                Some(t) => return self.fail(format!("expected 'choice' or '}}' in menu, found {}", t.describe())),
                None => return self.fail(format!("menu '{name}' is missing its closing '}}'")),
            }
        }
        self.reg.menus.insert(name, choices);
        Ok(())
    }

    fn device(&mut self) -> PResult<()> {
        self.i += 1;
        self.expect(Tok::LParen)?;
        let record_type = self.word("record type")?;
        self.expect(Tok::Comma)?;
        let link_type = self.word("link type")?;
        self.expect(Tok::Comma)?;
        let dset = self.word("device support name")?;
        self.expect(Tok::Comma)?;
        let choice = self.string("device choice string")?;
        self.expect(Tok::RParen)?;
        self.reg.devices.push(DeviceDef { record_type, link_type, dset, choice });
        Ok(())
    }

    fn recordtype(&mut self) -> PResult<()> {
        let start = self.i;
        self.i += 1;
        self.expect(Tok::LParen)?;
        let name = self.word("record type name")?;
        self.expect(Tok::RParen)?;
        self.expect(Tok::LBrace)?;
        let mut fields: IndexMap<String, FieldDef> = IndexMap::new();
        let mut menu_refs = Vec::new();
        loop {
            let at = self.i;
            match self.peek().cloned() {
                Some(Tok::RBrace) => {
                    self.i += 1;
                    break;
                }
                Some(Tok::Word(w)) if w == "field" => {
                    let def = self.field(fields.len())?;
                    if fields.contains_key(&def.name) {
                        let msg = format!("field {} defined twice in record type '{name}'", def.name);
                        self.push(at, |loc| Diagnostic::warning(Code::DuplicateField, loc, msg));
                        continue;
                    }
                    if def.data_type == DbfType::Menu {
                        menu_refs.push((def.name.clone(), at));
                    }
                    fields.insert(def.name.clone(), def);
                }
                Some(Tok::Word(w)) => {
                    self.push(at, |loc| {
                        Diagnostic::warning(Code::SkippedConstruct, loc, format!("'{w}' in record type is not used"))
                    });
                    self.skip_statement();
                }
                Some(t) => return self.fail(format!("expected 'field' or '}}', found {}", t.describe())),
                None => return self.fail(format!("record type '{name}' is missing its closing '}}'")),
            }
        }
        if fields.is_empty() {
            self.push(start, |loc| {
                Diagnostic::warning(Code::EmptyRecordType, loc, format!("record type '{name}' defines no fields; skipped"))
            });
            return Ok(());
        }
        if self.reg.record_types.contains_key(&name) {
            self.push(start, |loc| {
                Diagnostic::warning(Code::DuplicateRecordType, loc, format!("record type '{name}' redefined"))
            });
        }
        for (field, at) in menu_refs {
            self.menu_refs.push((name.clone(), field, at));
        }
        self.reg.record_types.insert(name.clone(), RecordTypeDef { name, fields });
        Ok(())
    }

    fn field(&mut self, order: usize) -> PResult<FieldDef> {
        self.i += 1;
        self.expect(Tok::LParen)?;
        let name = self.word("field name")?;
        if self.peek() != Some(&Tok::Comma) {
            return self.fail(format!("field {name} is missing its data type"));
        }
        self.i += 1;
        let type_at = self.i;
        let type_name = self.word("field data type")?;
        let data_type: DbfType = type_name.parse().map_err(|_| SynErr {
            at: type_at,
            message: format!("unknown field data type '{type_name}'"),
        })?;
        self.expect(Tok::RParen)?;
        let mut def = FieldDef {
            name,
            data_type,
            default_value: String::new(),
            menu_name: None,
            prompt: None,
            prompt_group: None,
            prompt_order: order,
        };
        if self.peek() != Some(&Tok::LBrace) {
            return Ok(def);
        }
        self.i += 1;
        loop {
            let at = self.i;
            match self.peek().cloned() {
                Some(Tok::RBrace) => {
                    self.i += 1;
                    return Ok(def);
                }
                Some(Tok::Word(prop)) => {
                    self.i += 1;
                    self.expect(Tok::LParen)?;
                    let value = match self.peek().cloned() {
                        Some(Tok::Word(v)) | Some(Tok::Str(v)) => {
                            self.i += 1;
                            v
                        }
                        _ => String::new(),
                    };
                    self.expect(Tok::RParen)?;
                    match prop.as_str() {
                        "initial" => def.default_value = value,
                        "menu" => def.menu_name = Some(value),
                        "prompt" => def.prompt = Some(value),
                        "promptgroup" => def.prompt_group = Some(value),
                        p if KNOWN_PROPERTIES.contains(&p) => {}
                        _ => self.push(at, |loc| {
                            Diagnostic::warning(
                                Code::UnknownProperty,
                                loc,
                                format!("unknown field property '{prop}' ignored"),
                            )
                        }),
                    }
                }
                Some(t) => return self.fail(format!("expected a field property, found {}", t.describe())),
                None => return self.fail("field definition is missing its closing '}'"),
            }
        }
    }

    fn check_menus(&mut self) {
        let refs = std::mem::take(&mut self.menu_refs);
        let mut missing: HashMap<usize, String> = HashMap::new();
        for (rt, field, at) in refs {
            let def = &self.reg.record_types[&rt].fields[&field];
            match &def.menu_name {
                Some(m) if self.reg.menus.contains_key(m) => {}
                Some(m) => {
                    missing.insert(at, format!("field {rt}.{field} refers to undefined menu '{m}'"));
                }
                None => {
                    missing.insert(at, format!("menu field {rt}.{field} names no menu"));
                }
            }
        }
        let mut keys: Vec<_> = missing.into_iter().collect();
        keys.sort();
        for (at, msg) in keys {
            self.push(at, |loc| Diagnostic::warning(Code::UnknownMenu, loc, msg));
        }
    }
}
