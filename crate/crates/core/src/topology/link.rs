use std::fmt;
use std::str::FromStr;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum LinkKind {
    Constant,
    Hardware,
    RecordLink,
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Modifier {
    Pp,
    Npp,
    Ca,
    Cp,
    Cpp,
    Ms,
    Nms,
    Mss,
    Msi,
}

impl Modifier {
    pub const ALL: [Modifier; 9] = [
        Modifier::Pp,
        Modifier::Npp,
        Modifier::Ca,
        Modifier::Cp,
        Modifier::Cpp,
        Modifier::Ms,
        Modifier::Nms,
        Modifier::Mss,
        Modifier::Msi,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Modifier::Pp => "PP",
            Modifier::Npp => "NPP",
            Modifier::Ca => "CA",
            Modifier::Cp => "CP",
            Modifier::Cpp => "CPP",
            Modifier::Ms => "MS",
            Modifier::Nms => "NMS",
            Modifier::Mss => "MSS",
            Modifier::Msi => "MSI",
        }
    }
}

impl FromStr for Modifier {
    type Err = ();

    /// Case-sensitive: only the uppercase spelling is a modifier.
    fn from_str(s: &str) -> Result<Self, ()> {
        Modifier::ALL.into_iter().find(|m| m.as_str() == s).ok_or(())
    }
}

impl fmt::Display for Modifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Interpretation of a link field's value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LinkTarget {
    pub kind: LinkKind,
    /// Set for `RecordLink` only.
    pub record_name: String,
    /// `VAL` when the value names no field.
    pub field_name: String,
    /// Whether the value spelled out `.FIELD`.
    #[serde(skip)]
    pub field_explicit: bool,
    pub modifiers: Vec<Modifier>,
    pub unknown_modifiers: Vec<String>,
    /// Every token after the target, in source order.
    #[serde(skip)]
    tokens: Vec<String>,
    #[serde(skip)]
    raw: String,
}

impl LinkTarget {
    fn other(kind: LinkKind, raw: &str) -> Self {
        LinkTarget {
            kind,
            record_name: String::new(),
            field_name: String::new(),
            field_explicit: false,
            modifiers: Vec::new(),
            unknown_modifiers: Vec::new(),
            tokens: Vec::new(),
            raw: raw.to_string(),
        }
    }

    pub fn record_link(record: &str, field: Option<&str>, tokens: &[&str]) -> Self {
        let mut modifiers = Vec::new();
        let mut unknown_modifiers = Vec::new();
        for t in tokens {
            match t.parse::<Modifier>() {
                Ok(m) => modifiers.push(m),
                Err(()) => unknown_modifiers.push(t.to_string()),
            }
        }
        LinkTarget {
            kind: LinkKind::RecordLink,
            record_name: record.to_string(),
            field_name: field.unwrap_or("VAL").to_string(),
            field_explicit: field.is_some(),
            modifiers,
            unknown_modifiers,
            tokens: tokens.iter().map(|t| t.to_string()).collect(),
            raw: String::new(),
        }
    }

    pub fn is_record_link(&self) -> bool {
        self.kind == LinkKind::RecordLink
    }

    /// Same link pointed at another record, keeping field part and modifiers.
    pub fn with_record(&self, record: &str) -> Self {
        let mut out = self.clone();
        out.record_name = record.to_string();
        out
    }

    /// Value text: the target, then each modifier separated by one space.
    pub fn render(&self) -> String {
        if self.kind != LinkKind::RecordLink {
            return self.raw.clone();
        }
        let mut s = self.record_name.clone();
        if self.field_explicit {
            s.push('.');
            s.push_str(&self.field_name);
        }
        for t in &self.tokens {
            s.push(' ');
            s.push_str(t);
        }
        s
    }
}

impl fmt::Display for LinkTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

fn is_decimal_number(s: &str) -> bool {
    let b = s.as_bytes();
    let mut i = 0;
    if i < b.len() && matches!(b[i], b'+' | b'-') {
        i += 1;
    }
    let int_start = i;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    let mut digits = i - int_start;
    if i < b.len() && b[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        digits += i - frac_start;
    }
    if digits == 0 {
        return false;
    }
    if i < b.len() && matches!(b[i], b'e' | b'E') {
        i += 1;
        if i < b.len() && matches!(b[i], b'+' | b'-') {
            i += 1;
        }
        let exp_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i == exp_start {
            return false;
        }
    }
    i == b.len()
}

/// Total: every string maps to some [`LinkTarget`].
pub fn parse_link_value(value: &str) -> LinkTarget {
    let trimmed = value.trim();
    if trimmed.is_empty() {
        return LinkTarget::other(LinkKind::Empty, value);
    }
    if trimmed.starts_with('#') || trimmed.starts_with('@') {
        return LinkTarget::other(LinkKind::Hardware, value);
    }
    if is_decimal_number(trimmed) {
        return LinkTarget::other(LinkKind::Constant, value);
    }
    let mut tokens = trimmed.split_whitespace();
    let target = tokens.next().expect("non-empty after trim");
    let rest: Vec<&str> = tokens.collect();
    match target.split_once('.') {
        Some((rec, field)) if !rec.is_empty() => LinkTarget::record_link(rec, Some(field), &rest),
        Some(_) => LinkTarget::other(LinkKind::Constant, value),
        None => LinkTarget::record_link(target, None, &rest),
    }
}
