// SPDX-License-Identifier: Apache-2.0

//! Header and annotation parser.
//!
//! Only the module header is read: the parameter list, the ANSI port list
//! and the `AUTOSVA` comment regions. Annotations follow this grammar:
//!
//! ```text
//! TRANSACTION ::= TNAME: RELATION ATTRIB
//! RELATION    ::= P -in> Q | P -out> Q
//! ATTRIB      ::= ATTRIB, ATTRIB | SIG = ASSIGN | input SIG | output SIG
//! SIG         ::= [STR:0] FIELD | STR FIELD
//! FIELD       ::= P_SUFFIX | Q_SUFFIX
//! SUFFIX      ::= val | ack | transid | transid_unique | active | stable | data
//! ```
//!
//! Every attribute definition sits on its own line. Ports whose names follow
//! the `<interface>_<suffix>` convention are picked up later as implicit
//! attributes; everything else in the header is kept but otherwise ignored.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;

use crate::span::{LineIndex, SourceSpan, Warning};

pub const MARKER: &str = "AUTOSVA";

/// Transaction attribute suffixes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Suffix {
    Val,
    Ack,
    Transid,
    TransidUnique,
    Active,
    Stable,
    Data,
}

impl Suffix {
    pub const ALL: [Suffix; 7] = [
        Suffix::Val,
        Suffix::Ack,
        Suffix::Transid,
        Suffix::TransidUnique,
        Suffix::Active,
        Suffix::Stable,
        Suffix::Data,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Suffix::Val => "val",
            Suffix::Ack => "ack",
            Suffix::Transid => "transid",
            Suffix::TransidUnique => "transid_unique",
            Suffix::Active => "active",
            Suffix::Stable => "stable",
            Suffix::Data => "data",
        }
    }

    /// Suffixes ordered longest first, so the first match is the longest.
    fn by_length() -> [Suffix; 7] {
        let mut all = Suffix::ALL;
        all.sort_by_key(|s| std::cmp::Reverse(s.as_str().len()));
        all
    }
}

impl fmt::Display for Suffix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suffix {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Suffix::ALL.into_iter().find(|x| x.as_str() == s).ok_or(())
    }
}

/// A field name split into interface prefix and attribute suffix.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldName {
    pub prefix: String,
    pub suffix: Suffix,
}

impl FieldName {
    pub fn full(&self) -> String {
        format!("{}_{}", self.prefix, self.suffix)
    }
}

impl fmt::Display for FieldName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.prefix, self.suffix)
    }
}

/// Splits `signal_name` into `<prefix>_<suffix>` for a known prefix, taking
/// the longest legal suffix. Returns `None` when no split works.
pub fn classify_field(signal_name: &str, known_prefixes: &BTreeSet<String>) -> Option<FieldName> {
    for suffix in Suffix::by_length() {
        let tail = suffix.as_str();
        let Some(head) = signal_name.strip_suffix(tail) else {
            continue;
        };
        let Some(prefix) = head.strip_suffix('_') else {
            continue;
        };
        if known_prefixes.contains(prefix) {
            return Some(FieldName {
                prefix: prefix.to_string(),
                suffix,
            });
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PortDirection {
    Input,
    Output,
}

impl PortDirection {
    pub fn as_str(self) -> &'static str {
        match self {
            PortDirection::Input => "input",
            PortDirection::Output => "output",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parameter {
    pub name: String,
    /// Verbatim default value; empty when the parameter has none.
    pub value_expr: String,
    /// Verbatim text between the keyword and the name (`int unsigned`, `[7:0]`, ...).
    pub type_text: String,
    pub local: bool,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterfaceSignal {
    pub direction: PortDirection,
    pub name: String,
    /// Verbatim packed range(s), empty for a scalar.
    pub width_expr: String,
    /// User type name for struct- or typedef-typed ports.
    pub type_name: Option<String>,
    pub span: SourceSpan,
}

impl InterfaceSignal {
    /// True for scalars and single `[<expr>:0]` ranges.
    pub fn is_canonical(&self) -> bool {
        self.width_expr.is_empty() || canonical_range(&self.width_expr).is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TxnDirection {
    Incoming,
    Outgoing,
}

impl TxnDirection {
    pub fn arrow(self) -> &'static str {
        match self {
            TxnDirection::Incoming => "-in>",
            TxnDirection::Outgoing => "-out>",
        }
    }
}

impl fmt::Display for TxnDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TxnDirection::Incoming => "incoming",
            TxnDirection::Outgoing => "outgoing",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationDecl {
    pub tname: String,
    pub p: String,
    pub q: String,
    pub direction: TxnDirection,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttribDecl {
    Assign(String),
    Input,
    Output,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplicitAttrib {
    pub field: FieldName,
    pub decl: AttribDecl,
    /// Verbatim `[<expr>:0]` prefix, empty when absent.
    pub width_expr: String,
    pub type_name: Option<String>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnnotationPayload {
    Relation(RelationDecl),
    Attrib(ExplicitAttrib),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub raw_text: String,
    pub span: SourceSpan,
    pub payload: AnnotationPayload,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedModule {
    pub file: String,
    pub module_name: String,
    pub parameters: Vec<Parameter>,
    /// Ports in source order.
    pub signals: Vec<InterfaceSignal>,
    pub annotations: Vec<Annotation>,
    pub warnings: Vec<Warning>,
}

impl ParsedModule {
    pub fn relations(&self) -> impl Iterator<Item = &RelationDecl> {
        self.annotations.iter().filter_map(|a| match &a.payload {
            AnnotationPayload::Relation(r) => Some(r),
            _ => None,
        })
    }

    pub fn attribs(&self) -> impl Iterator<Item = &ExplicitAttrib> {
        self.annotations.iter().filter_map(|a| match &a.payload {
            AnnotationPayload::Attrib(x) => Some(x),
            _ => None,
        })
    }

    pub fn signal(&self, name: &str) -> Option<&InterfaceSignal> {
        self.signals.iter().find(|s| s.name == name)
    }

    /// All interface names mentioned by relations.
    pub fn interface_names(&self) -> BTreeSet<String> {
        self.relations()
            .flat_map(|r| [r.p.clone(), r.q.clone()])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unterminated AUTOSVA block comment")]
    UnterminatedBlockComment { span: SourceSpan },
    #[error("no module header found")]
    NoModuleHeader { span: SourceSpan },
    #[error("cannot classify port declaration: {reason}")]
    MalformedPortDecl {
        span: SourceSpan,
        text: String,
        reason: String,
    },
    #[error("bad relation arrow `{arrow}`, expected `-in>` or `-out>`")]
    BadArrow {
        span: SourceSpan,
        text: String,
        arrow: String,
    },
    #[error("malformed annotation: {reason}")]
    MalformedAnnotation {
        span: SourceSpan,
        text: String,
        reason: String,
    },
    #[error("transaction name `{tname}` is already declared at {first}")]
    DuplicateTransactionName {
        tname: String,
        span: SourceSpan,
        first: SourceSpan,
    },
    #[error("`{field}` does not start with any interface named in a relation")]
    UnknownInterface { span: SourceSpan, field: String },
    #[error("`{field}` has no legal attribute suffix after interface `{prefix}`")]
    BadSuffix {
        span: SourceSpan,
        field: String,
        prefix: String,
    },
    #[error("each attribute definition must be on its own line")]
    MultipleAttribsOnLine { span: SourceSpan, text: String },
}

impl ParseError {
    pub fn span(&self) -> &SourceSpan {
        match self {
            ParseError::UnterminatedBlockComment { span }
            | ParseError::NoModuleHeader { span }
            | ParseError::MalformedPortDecl { span, .. }
            | ParseError::BadArrow { span, .. }
            | ParseError::MalformedAnnotation { span, .. }
            | ParseError::DuplicateTransactionName { span, .. }
            | ParseError::UnknownInterface { span, .. }
            | ParseError::BadSuffix { span, .. }
            | ParseError::MultipleAttribsOnLine { span, .. } => span,
        }
    }

    /// The offending source text, when there is one.
    pub fn text(&self) -> Option<&str> {
        match self {
            ParseError::MalformedPortDecl { text, .. }
            | ParseError::BadArrow { text, .. }
            | ParseError::MalformedAnnotation { text, .. }
            | ParseError::MultipleAttribsOnLine { text, .. } => Some(text),
            ParseError::UnknownInterface { field, .. } | ParseError::BadSuffix { field, .. } => {
                Some(field)
            }
            ParseError::DuplicateTransactionName { tname, .. } => Some(tname),
            _ => None,
        }
    }
}

/// All errors found in one source file.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{} parse error(s)", .0.len())]
pub struct ParseErrors(pub Vec<ParseError>);

/// The payload of one `AUTOSVA` comment. `text` starts right after the
/// marker and `span` points at that position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationRegion {
    pub text: String,
    pub span: SourceSpan,
}

impl AnnotationRegion {
    /// Non-blank payload lines with their own spans.
    pub fn lines(&self) -> Vec<(String, SourceSpan)> {
        let mut out = Vec::new();
        for (i, raw) in self.text.split('\n').enumerate() {
            let trimmed = raw.trim();
            if trimmed.is_empty() {
                continue;
            }
            let lead = raw.chars().take_while(|c| c.is_whitespace()).count() as u32;
            let column = if i == 0 {
                self.span.column + lead
            } else {
                1 + lead
            };
            out.push((
                trimmed.to_string(),
                SourceSpan::new(self.span.file.clone(), self.span.line + i as u32, column),
            ));
        }
        out
    }
}

struct Scanned {
    /// Source with comments and directives blanked; byte offsets unchanged.
    code: String,
    regions: Vec<AnnotationRegion>,
    directives: Vec<SourceSpan>,
}

fn blank_into(out: &mut Vec<u8>, bytes: &[u8]) {
    for &b in bytes {
        out.push(if b == b'\n' { b'\n' } else { b' ' });
    }
}

/// Returns the payload offset (relative to `body`) when the comment body
/// starts with the marker.
fn marker_payload(body: &str) -> Option<usize> {
    let lead = body.len() - body.trim_start().len();
    let rest = &body[lead..];
    let after = rest.strip_prefix(MARKER)?;
    match after.chars().next() {
        None => Some(lead + MARKER.len()),
        Some(c) if c.is_whitespace() => Some(lead + MARKER.len()),
        _ => None,
    }
}

fn scan(source: &str, file: &str) -> (Scanned, Vec<ParseError>) {
    let bytes = source.as_bytes();
    let index = LineIndex::new(source);
    let span_at = |off: usize| {
        let (l, c) = index.locate(source, off);
        SourceSpan::new(file, l, c)
    };
    let mut code = Vec::with_capacity(bytes.len());
    let mut regions = Vec::new();
    let mut directives = Vec::new();
    let mut errors = Vec::new();
    let mut i = 0;
    let mut line_start = true;
    while i < bytes.len() {
        let b = bytes[i];
        if b == b'/' && bytes.get(i + 1) == Some(&b'/') {
            let end = source[i..].find('\n').map_or(bytes.len(), |n| i + n);
            let body = &source[i + 2..end];
            if let Some(off) = marker_payload(body) {
                let start = i + 2 + off;
                regions.push(AnnotationRegion {
                    text: source[start..end].to_string(),
                    span: span_at(start),
                });
            }
            blank_into(&mut code, &bytes[i..end]);
            i = end;
            continue;
        }
        if b == b'/' && bytes.get(i + 1) == Some(&b'*') {
            let close = source[i + 2..].find("*/").map(|n| i + 2 + n);
            let body_end = close.unwrap_or(bytes.len());
            let body = &source[i + 2..body_end];
            if let Some(off) = marker_payload(body) {
                match close {
                    Some(_) => {
                        let start = i + 2 + off;
                        regions.push(AnnotationRegion {
                            text: source[start..body_end].to_string(),
                            span: span_at(start),
                        });
                    }
                    None => errors.push(ParseError::UnterminatedBlockComment { span: span_at(i) }),
                }
            }
            let end = close.map_or(bytes.len(), |c| c + 2);
            blank_into(&mut code, &bytes[i..end]);
            i = end;
            line_start = false;
            continue;
        }
        if b == b'"' {
            let mut j = i + 1;
            while j < bytes.len() && bytes[j] != b'"' && bytes[j] != b'\n' {
                if bytes[j] == b'\\' {
                    j += 1;
                }
                j += 1;
            }
            let end = (j + 1).min(bytes.len());
            code.extend_from_slice(&bytes[i..end]);
            i = end;
            line_start = false;
            continue;
        }
        if b == b'`' && line_start {
            let end = source[i..].find('\n').map_or(bytes.len(), |n| i + n);
            directives.push(span_at(i));
            blank_into(&mut code, &bytes[i..end]);
            i = end;
            continue;
        }
        if b == b'\n' {
            line_start = true;
        } else if !b.is_ascii_whitespace() {
            line_start = false;
        }
        code.push(b);
        i += 1;
    }
    // Only ASCII bytes were replaced, and whole comments at a time, so the
    // result is still valid UTF-8.
    let code = String::from_utf8(code).expect("blanking preserves UTF-8");
    (
        Scanned {
            code,
            regions,
            directives,
        },
        errors,
    )
}

/// Returns every `AUTOSVA` comment region of `source`, in source order.
pub fn extract_annotation_regions(source: &str) -> Result<Vec<AnnotationRegion>, ParseErrors> {
    extract_annotation_regions_in(source, "<input>")
}

pub fn extract_annotation_regions_in(
    source: &str,
    file: &str,
) -> Result<Vec<AnnotationRegion>, ParseErrors> {
    let (scanned, errors) = scan(source, file);
    if errors.is_empty() {
        Ok(scanned.regions)
    } else {
        Err(ParseErrors(errors))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    Range(String),
    Punct(char),
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '$'
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if is_ident_start(c)) && chars.all(is_ident_char)
}

/// Tokenizes a declaration fragment. Returns `(token, byte offset)` pairs.
fn tokenize(text: &str) -> Vec<(Tok, usize)> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut k = 0;
    while k < chars.len() {
        let (off, c) = chars[k];
        if c.is_whitespace() {
            k += 1;
        } else if is_ident_start(c) || c == '$' {
            let mut j = k + 1;
            loop {
                if j < chars.len() && is_ident_char(chars[j].1) {
                    j += 1;
                } else if j + 2 < chars.len()
                    && chars[j].1 == ':'
                    && chars[j + 1].1 == ':'
                    && is_ident_start(chars[j + 2].1)
                {
                    j += 2;
                } else {
                    break;
                }
            }
            let end = chars.get(j).map_or(text.len(), |x| x.0);
            out.push((Tok::Word(text[off..end].to_string()), off));
            k = j;
        } else if c.is_ascii_digit() {
            let mut j = k + 1;
            while j < chars.len() && (chars[j].1.is_ascii_alphanumeric() || chars[j].1 == '\'') {
                j += 1;
            }
            let end = chars.get(j).map_or(text.len(), |x| x.0);
            out.push((Tok::Word(text[off..end].to_string()), off));
            k = j;
        } else if c == '[' {
            let mut depth = 0;
            let mut j = k;
            while j < chars.len() {
                match chars[j].1 {
                    '[' => depth += 1,
                    ']' => {
                        depth -= 1;
                        if depth == 0 {
                            break;
                        }
                    }
                    _ => {}
                }
                j += 1;
            }
            let end = chars.get(j).map_or(text.len(), |x| x.0 + 1);
            out.push((Tok::Range(text[off..end].to_string()), off));
            k = j + 1;
        } else {
            out.push((Tok::Punct(c), off));
            k += 1;
        }
    }
    out
}

/// Splits at top-level commas. Yields `(item, byte offset of item)`.
fn split_top_level(text: &str, sep: char) -> Vec<(&str, usize)> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push((&text[start..i], start));
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    out.push((&text[start..], start));
    out
}

/// Byte offset of the first top-level occurrence of `target`.
fn find_top_level(text: &str, target: char) -> Option<usize> {
    let mut depth = 0i32;
    for (i, c) in text.char_indices() {
        match c {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth -= 1,
            c if c == target && depth == 0 => return Some(i),
            _ => {}
        }
    }
    None
}

/// For `[<msb>:0]` returns the msb expression.
pub fn canonical_range(range: &str) -> Option<&str> {
    let inner = range.trim().strip_prefix('[')?.strip_suffix(']')?;
    let colon = find_top_level(inner, ':')?;
    let (msb, lsb) = (&inner[..colon], &inner[colon + 1..]);
    if lsb.trim() == "0" && !msb.trim().is_empty() && !inner[colon + 1..].contains(':') {
        Some(msb.trim())
    } else {
        None
    }
}

/// Number of bits when the width is a literal (`""` is one bit).
pub fn literal_width(width_expr: &str) -> Option<u32> {
    if width_expr.trim().is_empty() {
        return Some(1);
    }
    let msb = canonical_range(width_expr)?;
    msb.parse::<u32>().ok().map(|m| m + 1)
}

const NET_KEYWORDS: &[&str] = &[
    "wire", "logic", "reg", "var", "tri", "bit", "signed", "unsigned",
];

struct PortShape {
    direction: PortDirection,
    width_expr: String,
    type_name: Option<String>,
}

fn parse_port_item(
    item: &str,
    inherited: Option<&PortShape>,
) -> Result<(PortShape, String), String> {
    let toks = tokenize(item);
    let mut it = toks.iter().map(|(t, _)| t).peekable();
    let direction = match it.peek() {
        Some(Tok::Word(w)) if w == "input" => Some(PortDirection::Input),
        Some(Tok::Word(w)) if w == "output" => Some(PortDirection::Output),
        Some(Tok::Word(w)) if w == "inout" || w == "ref" => {
            return Err(format!("`{w}` ports are not supported"))
        }
        _ => None,
    };
    if direction.is_some() {
        it.next();
    }
    let mut rest: Vec<&Tok> = it.collect();
    let name = match rest.pop() {
        Some(Tok::Word(w)) if is_identifier(w) && !NET_KEYWORDS.contains(&w.as_str()) => w.clone(),
        Some(Tok::Range(_)) => return Err("unpacked dimensions are not supported".into()),
        _ => return Err("expected a port name".into()),
    };
    let mut type_name = None;
    let mut ranges = Vec::new();
    let mut saw_kw = false;
    for t in rest {
        match t {
            Tok::Word(w) if NET_KEYWORDS.contains(&w.as_str()) => saw_kw = true,
            Tok::Word(w) if type_name.is_none() && ranges.is_empty() && is_type_name(w) => {
                type_name = Some(w.clone())
            }
            Tok::Range(r) => ranges.push(r.trim().to_string()),
            Tok::Word(w) => return Err(format!("unexpected `{w}`")),
            Tok::Punct(c) => return Err(format!("unexpected `{c}`")),
        }
    }
    let shape = match direction {
        Some(direction) => PortShape {
            direction,
            width_expr: ranges.concat(),
            type_name,
        },
        None => {
            let Some(prev) = inherited else {
                return Err("missing `input`/`output` direction".into());
            };
            if saw_kw || type_name.is_some() || !ranges.is_empty() {
                PortShape {
                    direction: prev.direction,
                    width_expr: ranges.concat(),
                    type_name,
                }
            } else {
                PortShape {
                    direction: prev.direction,
                    width_expr: prev.width_expr.clone(),
                    type_name: prev.type_name.clone(),
                }
            }
        }
    };
    Ok((shape, name))
}

fn is_type_name(w: &str) -> bool {
    w.split("::").all(is_identifier)
}

/// Finds the byte offset of the delimiter matching the opener at `open`.
fn matching_close(code: &str, open: usize) -> Option<usize> {
    let mut depth = 0i32;
    for (i, c) in code[open..].char_indices() {
        match c {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(open + i);
                }
            }
            _ => {}
        }
    }
    None
}

struct Header {
    name: String,
    params: Option<(usize, usize)>,
    ports: Option<(usize, usize)>,
}

fn find_header(code: &str) -> Option<Header> {
    let toks = tokenize(code);
    let start = toks
        .iter()
        .position(|(t, _)| matches!(t, Tok::Word(w) if w == "module" || w == "macromodule"))?;
    let name = match toks.get(start + 1) {
        Some((Tok::Word(w), _)) if is_identifier(w) => w.clone(),
        _ => return None,
    };
    let name_off = toks[start + 1].1;
    let mut pos = name_off + name.len();
    let skip_ws = |p: usize| p + code[p..].len() - code[p..].trim_start().len();
    pos = skip_ws(pos);
    // package imports between the name and the lists
    while code[pos..].starts_with("import") {
        pos = skip_ws(pos + code[pos..].find(';')? + 1);
    }
    let mut params = None;
    if code[pos..].starts_with('#') {
        pos = skip_ws(pos + 1);
        if !code[pos..].starts_with('(') {
            return None;
        }
        let close = matching_close(code, pos)?;
        params = Some((pos + 1, close));
        pos = skip_ws(close + 1);
    }
    let mut ports = None;
    if code[pos..].starts_with('(') {
        let close = matching_close(code, pos)?;
        ports = Some((pos + 1, close));
        pos = skip_ws(close + 1);
    }
    if !code[pos..].starts_with(';') {
        return None;
    }
    Some(Header {
        name,
        params,
        ports,
    })
}

fn relation_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^([A-Za-z_][\w$]*)\s*:\s*([A-Za-z_][\w$]*)\s*(.*?)\s*([A-Za-z_][\w$]*)\s*$")
            .unwrap()
    })
}

fn looks_like_relation(line: &str) -> bool {
    if line.starts_with('[') {
        return false;
    }
    if let Some(Tok::Word(w)) = tokenize(line).first().map(|t| &t.0) {
        if w == "input" || w == "output" {
            return false;
        }
    }
    match (find_top_level(line, ':'), find_top_level(line, '=')) {
        (Some(c), Some(e)) => c < e,
        (Some(_), None) => true,
        _ => false,
    }
}

/// Parses one relation line such as `lsu: lsu_req -in> lsu_res`.
pub fn parse_relation(line: &str, span: SourceSpan) -> Result<RelationDecl, ParseError> {
    let line = line.trim();
    let Some(c) = relation_re().captures(line) else {
        return Err(ParseError::MalformedAnnotation {
            span,
            text: line.to_string(),
            reason: "expected `TNAME: P -in> Q` or `TNAME: P -out> Q`".into(),
        });
    };
    let direction = match &c[3] {
        "-in>" => TxnDirection::Incoming,
        "-out>" => TxnDirection::Outgoing,
        other => {
            return Err(ParseError::BadArrow {
                span,
                text: line.to_string(),
                arrow: other.to_string(),
            })
        }
    };
    Ok(RelationDecl {
        tname: c[1].to_string(),
        p: c[2].to_string(),
        q: c[4].to_string(),
        direction,
        span,
    })
}

struct RawSig {
    width_expr: String,
    type_name: Option<String>,
    field: String,
}

fn parse_sig(text: &str) -> Result<RawSig, String> {
    let toks = tokenize(text);
    let mut words: Vec<&Tok> = toks.iter().map(|(t, _)| t).collect();
    let field = match words.pop() {
        Some(Tok::Word(w)) if is_identifier(w) => w.clone(),
        _ => return Err("expected a field name".into()),
    };
    let mut width_expr = String::new();
    let mut type_name = None;
    for t in words {
        match t {
            Tok::Word(w) if ["wire", "logic", "reg"].contains(&w.as_str()) => {}
            Tok::Range(r) if width_expr.is_empty() && type_name.is_none() => {
                width_expr = r.trim().to_string()
            }
            Tok::Word(w) if type_name.is_none() && is_type_name(w) => type_name = Some(w.clone()),
            Tok::Word(w) => return Err(format!("unexpected `{w}`")),
            Tok::Range(r) => return Err(format!("unexpected range `{r}`")),
            Tok::Punct(c) => return Err(format!("unexpected `{c}`")),
        }
    }
    Ok(RawSig {
        width_expr,
        type_name,
        field,
    })
}

fn has_top_level_comma(text: &str) -> bool {
    find_top_level(text, ',').is_some()
}

/// First top-level `=` that is a plain assignment (not `==`, `<=`, `!=` ...).
fn find_assign(text: &str) -> Option<usize> {
    let b = text.as_bytes();
    let mut depth = 0i32;
    for (i, &c) in b.iter().enumerate() {
        match c {
            b'(' | b'[' | b'{' => depth += 1,
            b')' | b']' | b'}' => depth -= 1,
            b'=' if depth == 0 => {
                let prev = i.checked_sub(1).map(|k| b[k]);
                let next = b.get(i + 1).copied();
                let compound =
                    matches!(prev, Some(b'=' | b'!' | b'<' | b'>')) || matches!(next, Some(b'='));
                if !compound {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

fn parse_attrib(
    line: &str,
    span: SourceSpan,
    prefixes: &BTreeSet<String>,
) -> Result<ExplicitAttrib, ParseError> {
    let body = line.trim().trim_end_matches([',', ';']).trim_end();
    if has_top_level_comma(body) {
        return Err(ParseError::MultipleAttribsOnLine {
            span,
            text: line.to_string(),
        });
    }
    let malformed = |reason: String| ParseError::MalformedAnnotation {
        span: span.clone(),
        text: line.to_string(),
        reason,
    };
    let first = tokenize(body).into_iter().next().map(|t| t.0);
    let (decl, sig_text) = match first {
        Some(Tok::Word(w)) if w == "input" || w == "output" => {
            let rest = body[w.len()..].trim();
            if find_assign(rest).is_some() {
                return Err(malformed(format!("`{w}` declarations take no assignment")));
            }
            let decl = if w == "input" {
                AttribDecl::Input
            } else {
                AttribDecl::Output
            };
            (decl, rest)
        }
        _ => {
            let Some(eq) = find_assign(body) else {
                return Err(malformed(
                    "expected `SIG = ASSIGN`, `input SIG` or `output SIG`".into(),
                ));
            };
            let expr = body[eq + 1..].trim();
            if expr.is_empty() {
                return Err(malformed("empty assignment".into()));
            }
            (AttribDecl::Assign(expr.to_string()), body[..eq].trim())
        }
    };
    let sig = parse_sig(sig_text).map_err(malformed)?;
    let Some(field) = classify_field(&sig.field, prefixes) else {
        let prefix = prefixes
            .iter()
            .filter(|p| sig.field.starts_with(&format!("{p}_")))
            .max_by_key(|p| p.len());
        return Err(match prefix {
            Some(p) => ParseError::BadSuffix {
                span,
                field: sig.field,
                prefix: p.clone(),
            },
            None => ParseError::UnknownInterface {
                span,
                field: sig.field,
            },
        });
    };
    Ok(ExplicitAttrib {
        field,
        decl,
        width_expr: sig.width_expr,
        type_name: sig.type_name,
        span,
    })
}

/// Parses the module header of `source`.
pub fn parse_module(source: &str) -> Result<ParsedModule, ParseErrors> {
    parse_module_file(source, "<input>")
}

/// Like [`parse_module`], recording `file` in every span.
pub fn parse_module_file(source: &str, file: &str) -> Result<ParsedModule, ParseErrors> {
    let (scanned, mut errors) = scan(source, file);
    let index = LineIndex::new(source);
    let span_at = |off: usize| {
        let (l, c) = index.locate(source, off);
        SourceSpan::new(file, l, c)
    };
    let mut warnings: Vec<Warning> = scanned
        .directives
        .iter()
        .map(|s| Warning::new(Some(s.clone()), "preprocessor directive ignored"))
        .collect();

    let code = &scanned.code;
    let Some(header) = find_header(code) else {
        errors.push(ParseError::NoModuleHeader {
            span: SourceSpan::new(file, 1, 1),
        });
        return Err(ParseErrors(errors));
    };

    let mut parameters = Vec::new();
    if let Some((lo, hi)) = header.params {
        let mut local = false;
        for (item, off) in split_top_level(&code[lo..hi], ',') {
            let trimmed = item.trim();
            if trimmed.is_empty() {
                continue;
            }
            let at = lo + off + (item.len() - item.trim_start().len());
            let mut left = trimmed;
            if let Some(r) = strip_keyword(left, "parameter") {
                local = false;
                left = r;
            } else if let Some(r) = strip_keyword(left, "localparam") {
                local = true;
                left = r;
            }
            let (decl, value) = match find_assign(left) {
                Some(eq) => (left[..eq].trim(), left[eq + 1..].trim()),
                None => (left.trim(), ""),
            };
            let name = tokenize(decl).into_iter().rev().find_map(|(t, o)| match t {
                Tok::Word(w) if is_identifier(&w) => Some((w, o)),
                _ => None,
            });
            match name {
                Some((name, o)) => parameters.push(Parameter {
                    type_text: decl[..o].trim().to_string(),
                    name,
                    value_expr: value.to_string(),
                    local,
                    span: span_at(at),
                }),
                None => warnings.push(Warning::new(
                    Some(span_at(at)),
                    format!("unrecognized parameter declaration `{trimmed}` ignored"),
                )),
            }
        }
    }

    let mut signals = Vec::new();
    if let Some((lo, hi)) = header.ports {
        let mut prev: Option<PortShape> = None;
        for (item, off) in split_top_level(&code[lo..hi], ',') {
            let trimmed = item.trim();
            if trimmed.is_empty() {
                continue;
            }
            let at = lo + off + (item.len() - item.trim_start().len());
            let span = span_at(at);
            match parse_port_item(trimmed, prev.as_ref()) {
                Ok((shape, name)) => {
                    signals.push(InterfaceSignal {
                        direction: shape.direction,
                        name,
                        width_expr: shape.width_expr.clone(),
                        type_name: shape.type_name.clone(),
                        span,
                    });
                    prev = Some(shape);
                }
                Err(reason) => errors.push(ParseError::MalformedPortDecl {
                    span,
                    text: collapse_ws(trimmed),
                    reason,
                }),
            }
        }
    }
    for s in &signals {
        if !s.is_canonical() {
            warnings.push(Warning::new(
                Some(s.span.clone()),
                format!(
                    "port `{}` has non-canonical range `{}`",
                    s.name, s.width_expr
                ),
            ));
        }
        if let Some(t) = &s.type_name {
            if s.width_expr.is_empty() {
                warnings.push(Warning::new(
                    Some(s.span.clone()),
                    format!(
                        "port `{}` has type `{t}`; it is usable only through explicit assignments",
                        s.name
                    ),
                ));
            }
        }
    }

    // Relations first: attribute fields are resolved against their interfaces.
    let lines: Vec<(String, SourceSpan)> = scanned.regions.iter().flat_map(|r| r.lines()).collect();
    let mut annotations: Vec<(usize, Annotation)> = Vec::new();
    let mut prefixes = BTreeSet::new();
    let mut seen: HashMap<String, SourceSpan> = HashMap::new();
    for (i, (line, span)) in lines.iter().enumerate() {
        if !looks_like_relation(line) {
            continue;
        }
        match parse_relation(line, span.clone()) {
            Ok(rel) => {
                prefixes.insert(rel.p.clone());
                prefixes.insert(rel.q.clone());
                if let Some(first) = seen.get(&rel.tname) {
                    errors.push(ParseError::DuplicateTransactionName {
                        tname: rel.tname.clone(),
                        span: span.clone(),
                        first: first.clone(),
                    });
                    continue;
                }
                seen.insert(rel.tname.clone(), span.clone());
                annotations.push((
                    i,
                    Annotation {
                        raw_text: line.clone(),
                        span: span.clone(),
                        payload: AnnotationPayload::Relation(rel),
                    },
                ));
            }
            Err(e) => {
                // keep the interfaces known so their attributes don't cascade
                if let Some(c) = relation_re().captures(line) {
                    prefixes.insert(c[2].to_string());
                    prefixes.insert(c[4].to_string());
                }
                errors.push(e);
            }
        }
    }
    for (i, (line, span)) in lines.iter().enumerate() {
        if looks_like_relation(line) {
            continue;
        }
        match parse_attrib(line, span.clone(), &prefixes) {
            Ok(attrib) => annotations.push((
                i,
                Annotation {
                    raw_text: line.clone(),
                    span: span.clone(),
                    payload: AnnotationPayload::Attrib(attrib),
                },
            )),
            Err(e) => errors.push(e),
        }
    }
    annotations.sort_by_key(|(i, _)| *i);

    if !errors.is_empty() {
        errors.sort_by(|a, b| a.span().cmp(b.span()));
        return Err(ParseErrors(errors));
    }
    Ok(ParsedModule {
        file: file.to_string(),
        module_name: header.name,
        parameters,
        signals,
        annotations: annotations.into_iter().map(|(_, a)| a).collect(),
        warnings,
    })
}

fn strip_keyword<'a>(text: &'a str, kw: &str) -> Option<&'a str> {
    let rest = text.strip_prefix(kw)?;
    match rest.chars().next() {
        Some(c) if is_ident_char(c) => None,
        _ => Some(rest.trim_start()),
    }
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Canonical rendering of a parsed header: one declaration per line and all
/// annotations in a single `AUTOSVA` block.
pub fn render_module(pm: &ParsedModule) -> String {
    let mut out = String::new();
    out.push_str(&format!("module {}", pm.module_name));
    if !pm.parameters.is_empty() {
        out.push_str(" #(\n");
        let items: Vec<String> = pm
            .parameters
            .iter()
            .map(|p| {
                let kw = if p.local { "localparam" } else { "parameter" };
                let mut s = format!("    {kw} ");
                if !p.type_text.is_empty() {
                    s.push_str(&p.type_text);
                    s.push(' ');
                }
                s.push_str(&p.name);
                if !p.value_expr.is_empty() {
                    s.push_str(" = ");
                    s.push_str(&p.value_expr);
                }
                s
            })
            .collect();
        out.push_str(&items.join(",\n"));
        out.push_str("\n)");
    }
    out.push_str(" (\n");
    if !pm.annotations.is_empty() {
        out.push_str("    /*AUTOSVA\n");
        for a in &pm.annotations {
            out.push_str("    ");
            out.push_str(&a.raw_text);
            out.push('\n');
        }
        out.push_str("    */\n");
    }
    let ports: Vec<String> = pm
        .signals
        .iter()
        .map(|s| {
            let mut d = format!("    {}", s.direction.as_str());
            match &s.type_name {
                Some(t) => {
                    d.push(' ');
                    d.push_str(t);
                }
                None => d.push_str(" wire"),
            }
            if !s.width_expr.is_empty() {
                d.push(' ');
                d.push_str(&s.width_expr);
            }
            d.push(' ');
            d.push_str(&s.name);
            d
        })
        .collect();
    out.push_str(&ports.join(",\n"));
    if !ports.is_empty() {
        out.push('\n');
    }
    out.push_str(");\nendmodule\n");
    out
}
