// SPDX-License-Identifier: Apache-2.0

//! Structured form of generated expressions and property bodies.
//!
//! The emitter renders these to SystemVerilog; the trace checker evaluates
//! them directly. Both read the same tree, so the text and the checked
//! semantics cannot drift apart.

use std::collections::BTreeSet;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Sig(String),
    Const(u64),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Eq(Box<Expr>, Box<Expr>),
    /// `x > 0`
    NonZero(Box<Expr>),
    /// `$stable(x)`
    Stable(Box<Expr>),
    /// `!$isunknown({..})`
    Known(Vec<Expr>),
}

pub fn sig(name: impl Into<String>) -> Expr {
    Expr::Sig(name.into())
}

impl Expr {
    pub fn negate(self) -> Expr {
        Expr::Not(Box::new(self))
    }

    pub fn eq(self, other: Expr) -> Expr {
        Expr::Eq(Box::new(self), Box::new(other))
    }

    pub fn nonzero(self) -> Expr {
        Expr::NonZero(Box::new(self))
    }

    pub fn stable(self) -> Expr {
        Expr::Stable(Box::new(self))
    }

    /// Conjunction that flattens nested `And`s and drops the wrapper for
    /// a single operand.
    pub fn all(items: Vec<Expr>) -> Expr {
        let mut flat = Vec::new();
        for e in items {
            match e {
                Expr::And(inner) => flat.extend(inner),
                e => flat.push(e),
            }
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            Expr::And(flat)
        }
    }

    pub fn any(items: Vec<Expr>) -> Expr {
        let mut flat = Vec::new();
        for e in items {
            match e {
                Expr::Or(inner) => flat.extend(inner),
                e => flat.push(e),
            }
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            Expr::Or(flat)
        }
    }

    pub fn signals(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Sig(s) => {
                out.insert(s.clone());
            }
            Expr::Const(_) => {}
            Expr::Not(e) | Expr::NonZero(e) | Expr::Stable(e) => e.signals(out),
            Expr::And(v) | Expr::Or(v) | Expr::Known(v) => v.iter().for_each(|e| e.signals(out)),
            Expr::Eq(a, b) => {
                a.signals(out);
                b.signals(out);
            }
        }
    }

    fn prec(&self) -> u8 {
        match self {
            Expr::Or(_) => 1,
            Expr::And(_) => 2,
            Expr::Eq(..) | Expr::NonZero(_) => 3,
            _ => 4,
        }
    }

    fn render_at(&self, min: u8, out: &mut String) {
        let paren = self.prec() < min;
        if paren {
            out.push('(');
        }
        match self {
            Expr::Sig(s) => out.push_str(s),
            Expr::Const(v) => {
                let _ = write!(out, "{v}");
            }
            Expr::Not(e) => {
                out.push('!');
                e.render_at(4, out);
            }
            Expr::And(v) => join(v, " && ", 3, out),
            Expr::Or(v) => join(v, " || ", 3, out),
            Expr::Eq(a, b) => {
                a.render_at(4, out);
                out.push_str(" == ");
                b.render_at(4, out);
            }
            Expr::NonZero(e) => {
                e.render_at(4, out);
                out.push_str(" > 0");
            }
            Expr::Stable(e) => {
                out.push_str("$stable(");
                e.render_at(0, out);
                out.push(')');
            }
            Expr::Known(v) => {
                out.push_str("!$isunknown(");
                if v.len() == 1 {
                    v[0].render_at(0, out);
                } else {
                    out.push('{');
                    join(v, ", ", 0, out);
                    out.push('}');
                }
                out.push(')');
            }
        }
        if paren {
            out.push(')');
        }
    }

    /// SystemVerilog text.
    pub fn render(&self) -> String {
        let mut s = String::new();
        self.render_at(0, &mut s);
        s
    }
}

fn join(v: &[Expr], sep: &str, min: u8, out: &mut String) {
    for (i, e) in v.iter().enumerate() {
        if i > 0 {
            out.push_str(sep);
        }
        e.render_at(min, out);
    }
}

/// Temporal shape of a property body.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Temporal {
    /// Boolean invariant checked every cycle.
    Always(Expr),
    /// `ante |-> cons`, or `ante |=> cons` when `next` is set.
    Implies { ante: Expr, cons: Expr, next: bool },
    /// `ante |-> s_eventually (cons)`, or `ante |-> ##[0:N] cons` when bounded.
    Eventually {
        ante: Expr,
        cons: Expr,
        bound: Option<u32>,
    },
    /// Conjunction of property bodies (`(a) and (b)`).
    Conj(Vec<Temporal>),
    /// Coverage target.
    Cover(Expr),
}

impl Temporal {
    pub fn render(&self) -> String {
        match self {
            Temporal::Always(e) | Temporal::Cover(e) => e.render(),
            Temporal::Implies { ante, cons, next } => {
                let op = if *next { "|=>" } else { "|->" };
                format!("{} {op} {}", operand(ante), operand(cons))
            }
            Temporal::Eventually { ante, cons, bound } => match bound {
                None => format!("{} |-> s_eventually ({})", operand(ante), cons.render()),
                Some(n) => format!("{} |-> ##[0:{n}] {}", operand(ante), operand(cons)),
            },
            Temporal::Conj(parts) => parts
                .iter()
                .map(|p| format!("({})", p.render()))
                .collect::<Vec<_>>()
                .join(" and "),
        }
    }

    pub fn signals(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut BTreeSet<String>) {
        match self {
            Temporal::Always(e) | Temporal::Cover(e) => e.signals(out),
            Temporal::Implies { ante, cons, .. } | Temporal::Eventually { ante, cons, .. } => {
                ante.signals(out);
                cons.signals(out);
            }
            Temporal::Conj(parts) => parts.iter().for_each(|p| p.collect(out)),
        }
    }

    pub fn is_liveness(&self) -> bool {
        match self {
            Temporal::Eventually { bound: None, .. } => true,
            Temporal::Conj(parts) => parts.iter().any(Temporal::is_liveness),
            _ => false,
        }
    }
}

/// Operands of implications are parenthesized unless atomic.
fn operand(e: &Expr) -> String {
    match e {
        Expr::Sig(_) | Expr::Const(_) | Expr::Stable(_) | Expr::Known(_) => e.render(),
        Expr::Not(inner) if matches!(**inner, Expr::Sig(_)) => e.render(),
        _ => format!("({})", e.render()),
    }
}
