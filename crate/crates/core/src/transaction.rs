// SPDX-License-Identifier: Apache-2.0

//! Transaction builder: resolves each relation's interfaces into attribute
//! bindings and validates the result.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::parser::{
    classify_field, literal_width, AttribDecl, ExplicitAttrib, ParsedModule, Suffix, TxnDirection,
};
use crate::span::{SourceSpan, Warning};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BindingSource {
    /// A port following the `<interface>_<suffix>` convention.
    Implicit(String),
    /// `SIG = ASSIGN`; holds the verbatim expression.
    ExplicitAssign(String),
    /// `input SIG` / `output SIG`; holds the declared signal name.
    ExplicitDecl(String),
}

impl BindingSource {
    fn rank(&self) -> u8 {
        match self {
            BindingSource::ExplicitAssign(_) => 2,
            BindingSource::ExplicitDecl(_) => 1,
            BindingSource::Implicit(_) => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeBinding {
    pub suffix: Suffix,
    pub source: BindingSource,
    /// Verbatim range, empty for a scalar.
    pub width_expr: String,
    pub type_name: Option<String>,
    /// Name the generated code uses to refer to this attribute.
    pub signal: String,
    pub span: SourceSpan,
}

impl AttributeBinding {
    pub fn literal_width(&self) -> Option<u32> {
        if self.type_name.is_some() {
            return None;
        }
        literal_width(&self.width_expr)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterfaceSide {
    pub name: String,
    pub bindings: BTreeMap<Suffix, AttributeBinding>,
}

impl InterfaceSide {
    pub fn get(&self, s: Suffix) -> Option<&AttributeBinding> {
        self.bindings.get(&s)
    }

    pub fn has(&self, s: Suffix) -> bool {
        self.bindings.contains_key(&s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    pub tname: String,
    pub direction: TxnDirection,
    pub p: InterfaceSide,
    pub q: InterfaceSide,
    /// `active` belongs to the transaction, whichever side declared it.
    pub active: Option<AttributeBinding>,
    pub span: SourceSpan,
}

impl Transaction {
    pub fn side(&self, side: Side) -> &InterfaceSide {
        match side {
            Side::P => &self.p,
            Side::Q => &self.q,
        }
    }

    /// Every binding of the transaction, P side first.
    pub fn bindings(&self) -> impl Iterator<Item = &AttributeBinding> {
        self.p
            .bindings
            .values()
            .chain(self.q.bindings.values())
            .chain(self.active.iter())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    P,
    Q,
}

impl Side {
    pub fn tag(self) -> &'static str {
        match self {
            Side::P => "p",
            Side::Q => "q",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TxnKind {
    Untracked,
    Tracked,
}

/// Tracked iff `transid` is bound on both sides.
pub fn transaction_kind(t: &Transaction) -> TxnKind {
    if t.p.has(Suffix::Transid) && t.q.has(Suffix::Transid) {
        TxnKind::Tracked
    } else {
        TxnKind::Untracked
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WidthValue {
    Literal(u32),
    Unknown,
}

impl fmt::Display for WidthValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WidthValue::Literal(n) => write!(f, "{n}"),
            WidthValue::Unknown => f.write_str("?"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TxnError {
    #[error("transaction `{tname}`: interface `{interface}` has no `val` attribute")]
    MissingVal {
        tname: String,
        interface: String,
        span: SourceSpan,
    },
    #[error(
        "transaction `{tname}`: {suffix} must be defined on both interfaces (found only on `{found_on}`)"
    )]
    OneSidedAttr {
        tname: String,
        suffix: Suffix,
        found_on: String,
        span: SourceSpan,
    },
    #[error("transaction `{tname}`: {suffix} widths differ ({wp} vs {wq})")]
    WidthMismatch {
        tname: String,
        suffix: Suffix,
        wp: u32,
        wq: u32,
        span: SourceSpan,
    },
    #[error("interface `{interface}`: `{suffix}` is defined more than once")]
    DuplicateBinding {
        interface: String,
        suffix: Suffix,
        span: SourceSpan,
    },
    #[error("transaction `{tname}`: request and response name the same interface")]
    SelfLoop { tname: String, span: SourceSpan },
    #[error("interface `{interface}`: transid_unique requires transid on the same interface")]
    UniqueWithoutTransid { interface: String, span: SourceSpan },
}

impl TxnError {
    pub fn span(&self) -> &SourceSpan {
        match self {
            TxnError::MissingVal { span, .. }
            | TxnError::OneSidedAttr { span, .. }
            | TxnError::WidthMismatch { span, .. }
            | TxnError::DuplicateBinding { span, .. }
            | TxnError::SelfLoop { span, .. }
            | TxnError::UniqueWithoutTransid { span, .. } => span,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{} transaction error(s)", .0.len())]
pub struct TxnErrors(pub Vec<TxnError>);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransactionModel {
    /// In relation declaration order.
    pub transactions: Vec<Transaction>,
    pub warnings: Vec<Warning>,
}

struct Resolver<'a> {
    pm: &'a ParsedModule,
    prefixes: BTreeSet<String>,
    taken: HashSet<String>,
    cache: HashMap<String, BTreeMap<Suffix, AttributeBinding>>,
    errors: Vec<TxnError>,
    warnings: Vec<Warning>,
}

impl<'a> Resolver<'a> {
    fn new(pm: &'a ParsedModule) -> Self {
        let mut taken: HashSet<String> = pm.signals.iter().map(|s| s.name.clone()).collect();
        taken.extend(pm.parameters.iter().map(|p| p.name.clone()));
        Resolver {
            pm,
            prefixes: pm.interface_names(),
            taken,
            cache: HashMap::new(),
            errors: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn explicit_binding(&mut self, a: &ExplicitAttrib) -> AttributeBinding {
        let field = a.field.full();
        let (source, signal) = match &a.decl {
            AttribDecl::Assign(expr) => {
                let mut name = field.clone();
                if self.pm.signal(&field).is_some() {
                    let mut n = 1;
                    while self.taken.contains(&format!("{field}_{n}")) {
                        n += 1;
                    }
                    name = format!("{field}_{n}");
                    self.warnings.push(Warning::new(
                        Some(a.span.clone()),
                        format!(
                            "explicit definition of `{field}` overrides the port of the same name; \
                             the attribute is generated as `{name}`"
                        ),
                    ));
                }
                self.taken.insert(name.clone());
                (BindingSource::ExplicitAssign(expr.clone()), name)
            }
            AttribDecl::Input | AttribDecl::Output => {
                if self.pm.signal(&field).is_some() {
                    self.warnings.push(Warning::new(
                        Some(a.span.clone()),
                        format!("`{field}` is declared both as a port and in an annotation"),
                    ));
                }
                (BindingSource::ExplicitDecl(field.clone()), field)
            }
        };
        AttributeBinding {
            suffix: a.field.suffix,
            source,
            width_expr: a.width_expr.clone(),
            type_name: a.type_name.clone(),
            signal,
            span: a.span.clone(),
        }
    }

    fn interface(&mut self, iface: &str) -> BTreeMap<Suffix, AttributeBinding> {
        if let Some(b) = self.cache.get(iface) {
            return b.clone();
        }
        let mut found: BTreeMap<Suffix, Vec<AttributeBinding>> = BTreeMap::new();
        let pm = self.pm;
        for s in &pm.signals {
            if let Some(f) = classify_field(&s.name, &self.prefixes) {
                if f.prefix == iface {
                    found.entry(f.suffix).or_default().push(AttributeBinding {
                        suffix: f.suffix,
                        source: BindingSource::Implicit(s.name.clone()),
                        width_expr: s.width_expr.clone(),
                        type_name: s.type_name.clone(),
                        signal: s.name.clone(),
                        span: s.span.clone(),
                    });
                }
            }
        }
        for a in pm.attribs().filter(|a| a.field.prefix == iface) {
            let b = self.explicit_binding(a);
            found.entry(a.field.suffix).or_default().push(b);
        }
        let mut out = BTreeMap::new();
        for (suffix, cands) in found {
            let best = cands.iter().map(|c| c.source.rank()).max().unwrap_or(0);
            let top: Vec<&AttributeBinding> =
                cands.iter().filter(|c| c.source.rank() == best).collect();
            for dup in top.iter().skip(1) {
                self.errors.push(TxnError::DuplicateBinding {
                    interface: iface.to_string(),
                    suffix,
                    span: dup.span.clone(),
                });
            }
            let chosen = top[0].clone();
            for other in cands.iter().filter(|c| c.source.rank() < best) {
                if let BindingSource::Implicit(port) = &other.source {
                    self.warnings.push(Warning::new(
                        Some(chosen.span.clone()),
                        format!("explicit `{iface}_{suffix}` takes precedence over port `{port}`"),
                    ));
                }
            }
            out.insert(suffix, chosen);
        }
        self.cache.insert(iface.to_string(), out.clone());
        out
    }
}

/// Builds one transaction per relation, reporting every validation error.
pub fn build_transactions(pm: &ParsedModule) -> Result<TransactionModel, TxnErrors> {
    let mut r = Resolver::new(pm);
    let mut transactions = Vec::new();
    let relations: Vec<_> = pm.relations().cloned().collect();
    for rel in &relations {
        if rel.p == rel.q {
            r.errors.push(TxnError::SelfLoop {
                tname: rel.tname.clone(),
                span: rel.span.clone(),
            });
            continue;
        }
        let mut p = r.interface(&rel.p);
        let mut q = r.interface(&rel.q);
        let pa = p.remove(&Suffix::Active);
        let qa = q.remove(&Suffix::Active);
        let active = match (pa, qa) {
            (Some(a), Some(b)) => {
                r.errors.push(TxnError::DuplicateBinding {
                    interface: rel.q.clone(),
                    suffix: Suffix::Active,
                    span: b.span.clone(),
                });
                Some(a)
            }
            (a, b) => a.or(b),
        };
        let t = Transaction {
            tname: rel.tname.clone(),
            direction: rel.direction,
            p: InterfaceSide {
                name: rel.p.clone(),
                bindings: p,
            },
            q: InterfaceSide {
                name: rel.q.clone(),
                bindings: q,
            },
            active,
            span: rel.span.clone(),
        };
        validate(&t, &mut r.errors, &mut r.warnings);
        transactions.push(t);
    }
    if !r.errors.is_empty() {
        r.errors.sort_by(|a, b| a.span().cmp(b.span()));
        r.errors.dedup();
        return Err(TxnErrors(r.errors));
    }
    Ok(TransactionModel {
        transactions,
        warnings: r.warnings,
    })
}

fn validate(t: &Transaction, errors: &mut Vec<TxnError>, warnings: &mut Vec<Warning>) {
    for side in [&t.p, &t.q] {
        if !side.has(Suffix::Val) {
            errors.push(TxnError::MissingVal {
                tname: t.tname.clone(),
                interface: side.name.clone(),
                span: t.span.clone(),
            });
        }
        if let Some(u) = side.get(Suffix::TransidUnique) {
            if !side.has(Suffix::Transid) {
                errors.push(TxnError::UniqueWithoutTransid {
                    interface: side.name.clone(),
                    span: u.span.clone(),
                });
            }
        }
    }
    for suffix in [Suffix::Transid, Suffix::Data] {
        match (t.p.get(suffix), t.q.get(suffix)) {
            (Some(a), Some(b)) => {
                if let (Some(wp), Some(wq)) = (a.literal_width(), b.literal_width()) {
                    if wp != wq {
                        errors.push(TxnError::WidthMismatch {
                            tname: t.tname.clone(),
                            suffix,
                            wp,
                            wq,
                            span: b.span.clone(),
                        });
                    }
                }
            }
            (Some(one), None) | (None, Some(one)) => {
                let found_on = if t.p.has(suffix) {
                    &t.p.name
                } else {
                    &t.q.name
                };
                errors.push(TxnError::OneSidedAttr {
                    tname: t.tname.clone(),
                    suffix,
                    found_on: found_on.clone(),
                    span: one.span.clone(),
                });
            }
            (None, None) => {}
        }
    }
    if t.p.has(Suffix::Data) && t.q.has(Suffix::Data) && transaction_kind(t) == TxnKind::Untracked {
        warnings.push(Warning::new(
            Some(t.span.clone()),
            format!(
                "transaction `{}`: data is only checked for integrity when transid is defined",
                t.tname
            ),
        ));
    }
    if let Some(s) = t.q.get(Suffix::Stable) {
        warnings.push(Warning::new(
            Some(s.span.clone()),
            format!(
                "transaction `{}`: stable on the response interface is not checked",
                t.tname
            ),
        ));
    }
    if let Some(s) = t.p.get(Suffix::Stable) {
        if !t.p.has(Suffix::Ack) {
            warnings.push(Warning::new(
                Some(s.span.clone()),
                format!(
                    "transaction `{}`: stable has no effect without ack (requests are always accepted)",
                    t.tname
                ),
            ));
        }
    }
}
