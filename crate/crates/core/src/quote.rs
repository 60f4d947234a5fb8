//! Quoted-string escaping shared by `.db` values and layout directives.
//!
//! Only `\"` and `\\` are escapes. Any other backslash sequence is kept as
//! two literal characters.

pub fn unescape(body: &str) -> String {
    let mut out = String::with_capacity(body.len());
    let mut chars = body.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some(n @ ('"' | '\\')) => out.push(n),
                Some(n) => {
                    out.push('\\');
                    out.push(n);
                }
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

pub fn escape(value: &str) -> String {
    let mut out = String::with_capacity(value.len() + 2);
    for c in value.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out
}

/// `"` + escaped value + `"`.
pub fn quoted(value: &str) -> String {
    format!("\"{}\"", escape(value))
}
