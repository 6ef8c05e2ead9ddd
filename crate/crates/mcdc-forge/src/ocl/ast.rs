//! Abstract syntax for the supported OCL subset.
//!
//! Constraint bodies are normalized at parse time: `implies` and `xor` are
//! expanded into `and`/`or`/`not` and negation is pushed down so that `Not`
//! only ever wraps a boolean leaf. Clauses — the boolean leaves of the
//! `and`/`or` tree — are what the reformulation and similarity machinery
//! operate on.

use std::collections::BTreeSet;

use crate::model::{AttrType, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl RelOp {
    /// The operator whose satisfying set is the exact complement.
    pub fn inverse(self) -> RelOp {
        match self {
            RelOp::Lt => RelOp::Ge,
            RelOp::Le => RelOp::Gt,
            RelOp::Gt => RelOp::Le,
            RelOp::Ge => RelOp::Lt,
            RelOp::Eq => RelOp::Ne,
            RelOp::Ne => RelOp::Eq,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            RelOp::Lt => "<",
            RelOp::Le => "<=",
            RelOp::Gt => ">",
            RelOp::Ge => ">=",
            RelOp::Eq => "=",
            RelOp::Ne => "<>",
        }
    }

    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            RelOp::Lt => lhs < rhs,
            RelOp::Le => lhs <= rhs,
            RelOp::Gt => lhs > rhs,
            RelOp::Ge => lhs >= rhs,
            RelOp::Eq => lhs == rhs,
            RelOp::Ne => lhs != rhs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }

    pub fn apply(self, lhs: f64, rhs: f64) -> f64 {
        match self {
            ArithOp::Add => lhs + rhs,
            ArithOp::Sub => lhs - rhs,
            ArithOp::Mul => lhs * rhs,
            ArithOp::Div => lhs / rhs,
        }
    }
}

/// What a navigation path resolved to in the class model.
#[derive(Debug, Clone, PartialEq)]
pub enum NavTarget {
    Attribute(AttrType),
    /// A class constant; its value is resolved at parse time.
    Constant(Value),
    /// A single-valued association end (receiver of `oclIsUndefined`).
    Object {
        class: String,
        optional: bool,
    },
    /// A many-valued association end (receiver of collection operations).
    Collection {
        class: String,
    },
}

/// Scope a navigation starts from: the constrained object itself or the
/// current element of an enclosing collection operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NavScope {
    SelfObject,
    Element,
}

/// A resolved navigation path (without the leading `self`).
#[derive(Debug, Clone, PartialEq)]
pub struct Nav {
    pub scope: NavScope,
    pub path: Vec<String>,
    pub target: NavTarget,
}

impl Nav {
    /// Canonical symbol key, e.g. `mission.flightDistance`.
    pub fn key(&self) -> String {
        self.path.join(".")
    }
}

/// A collection operation chain: receiver, optional select/reject filters,
/// and a terminal operation. `oclIsUndefined` is the one dotted call form.
#[derive(Debug, Clone, PartialEq)]
pub struct Call {
    pub receiver: Nav,
    pub filters: Vec<Filter>,
    pub op: CollOp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Filter {
    pub reject: bool,
    pub body: OclExpr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CollOp {
    ForAll(OclExpr),
    Exists(OclExpr),
    One(OclExpr),
    Includes(Nav),
    Excludes(Nav),
    IsEmpty,
    NotEmpty,
    Size,
    IsUndefined,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OclExpr {
    And(Box<OclExpr>, Box<OclExpr>),
    Or(Box<OclExpr>, Box<OclExpr>),
    Xor(Box<OclExpr>, Box<OclExpr>),
    Implies(Box<OclExpr>, Box<OclExpr>),
    Not(Box<OclExpr>),
    Rel(RelOp, Box<OclExpr>, Box<OclExpr>),
    Arith(ArithOp, Box<OclExpr>, Box<OclExpr>),
    Nav(Nav),
    Var(String),
    Lit(Value),
    EnumLit { enum_name: String, literal: String },
    Call(Box<Call>),
}

impl OclExpr {
    pub fn and(lhs: OclExpr, rhs: OclExpr) -> OclExpr {
        OclExpr::And(Box::new(lhs), Box::new(rhs))
    }

    pub fn or(lhs: OclExpr, rhs: OclExpr) -> OclExpr {
        OclExpr::Or(Box::new(lhs), Box::new(rhs))
    }

    pub fn negation(inner: OclExpr) -> OclExpr {
        OclExpr::Not(Box::new(inner))
    }

    pub fn rel(op: RelOp, lhs: OclExpr, rhs: OclExpr) -> OclExpr {
        OclExpr::Rel(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn is_bool_op(&self) -> bool {
        matches!(
            self,
            OclExpr::And(..) | OclExpr::Or(..) | OclExpr::Xor(..) | OclExpr::Implies(..)
        )
    }
}

/// Rewrite a type-checked body into normal form: no `implies`/`xor`, and
/// `not` only directly over boolean leaves.
pub fn normalize(expr: OclExpr) -> OclExpr {
    match expr {
        OclExpr::And(l, r) => OclExpr::and(normalize(*l), normalize(*r)),
        OclExpr::Or(l, r) => OclExpr::or(normalize(*l), normalize(*r)),
        OclExpr::Implies(a, b) => OclExpr::or(negate_normalize(*a), normalize(*b)),
        OclExpr::Xor(a, b) => {
            let both = OclExpr::And(a.clone(), b.clone());
            OclExpr::and(
                OclExpr::or(normalize(*a), normalize(*b)),
                negate_normalize(both),
            )
        }
        OclExpr::Not(inner) => negate_normalize(*inner),
        leaf => leaf,
    }
}

fn negate_normalize(expr: OclExpr) -> OclExpr {
    match expr {
        OclExpr::And(l, r) => OclExpr::or(negate_normalize(*l), negate_normalize(*r)),
        OclExpr::Or(l, r) => OclExpr::and(negate_normalize(*l), negate_normalize(*r)),
        OclExpr::Implies(a, b) => OclExpr::and(normalize(*a), negate_normalize(*b)),
        OclExpr::Xor(a, b) => {
            // not (a xor b)  ==  (a and b) or (not a and not b)
            let l = OclExpr::and(normalize(*a.clone()), normalize(*b.clone()));
            let r = OclExpr::and(negate_normalize(*a), negate_normalize(*b));
            OclExpr::or(l, r)
        }
        OclExpr::Not(inner) => normalize(*inner),
        leaf => OclExpr::negation(leaf),
    }
}

/// A boolean leaf of a constraint body, identified by position. Structurally
/// identical leaves (ignoring leaf-level negation) share one clause index.
#[derive(Debug, Clone, PartialEq)]
pub struct Clause {
    pub index: usize,
    pub expr: OclExpr,
    /// Attribute paths and variable names the clause reads (constants excluded).
    pub attrs: BTreeSet<String>,
}

/// The boolean structure of a body with clause leaves abstracted out.
#[derive(Debug, Clone, PartialEq)]
pub enum Skeleton {
    And(Box<Skeleton>, Box<Skeleton>),
    Or(Box<Skeleton>, Box<Skeleton>),
    Leaf { clause: usize, negated: bool },
}

impl Skeleton {
    pub fn eval(&self, truth: &[bool]) -> bool {
        match self {
            Skeleton::And(l, r) => l.eval(truth) && r.eval(truth),
            Skeleton::Or(l, r) => l.eval(truth) || r.eval(truth),
            Skeleton::Leaf { clause, negated } => truth[*clause] != *negated,
        }
    }
}

/// Split a normalized body into its boolean skeleton and clause list.
/// Clause indices are assigned left to right and are stable across runs.
pub fn decompose(body: &OclExpr) -> (Skeleton, Vec<Clause>) {
    let mut clauses: Vec<Clause> = Vec::new();
    let skeleton = walk(body, &mut clauses);
    (skeleton, clauses)
}

fn walk(expr: &OclExpr, clauses: &mut Vec<Clause>) -> Skeleton {
    match expr {
        OclExpr::And(l, r) => Skeleton::And(Box::new(walk(l, clauses)), Box::new(walk(r, clauses))),
        OclExpr::Or(l, r) => Skeleton::Or(Box::new(walk(l, clauses)), Box::new(walk(r, clauses))),
        OclExpr::Not(inner) if !inner.is_bool_op() => leaf(inner, true, clauses),
        leaf_expr => leaf(leaf_expr, false, clauses),
    }
}

fn leaf(expr: &OclExpr, negated: bool, clauses: &mut Vec<Clause>) -> Skeleton {
    let index = match clauses.iter().position(|c| &c.expr == expr) {
        Some(i) => i,
        None => {
            let index = clauses.len();
            clauses.push(Clause {
                index,
                expr: expr.clone(),
                attrs: clause_symbols(expr),
            });
            index
        }
    };
    Skeleton::Leaf {
        clause: index,
        negated,
    }
}

/// The attribute/variable identifiers a clause depends on. Constants resolve
/// to fixed values and are excluded.
pub fn clause_symbols(expr: &OclExpr) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_symbols(expr, None, &mut out);
    out
}

fn collect_symbols(expr: &OclExpr, element_prefix: Option<&str>, out: &mut BTreeSet<String>) {
    match expr {
        OclExpr::And(l, r)
        | OclExpr::Or(l, r)
        | OclExpr::Xor(l, r)
        | OclExpr::Implies(l, r)
        | OclExpr::Rel(_, l, r)
        | OclExpr::Arith(_, l, r) => {
            collect_symbols(l, element_prefix, out);
            collect_symbols(r, element_prefix, out);
        }
        OclExpr::Not(inner) => collect_symbols(inner, element_prefix, out),
        OclExpr::Nav(nav) => {
            if !matches!(nav.target, NavTarget::Constant(_)) {
                match (nav.scope, element_prefix) {
                    (NavScope::Element, Some(prefix)) => {
                        out.insert(format!("{prefix}.{}", nav.key()));
                    }
                    _ => {
                        out.insert(nav.key());
                    }
                }
            }
        }
        OclExpr::Var(name) => {
            out.insert(name.clone());
        }
        OclExpr::Lit(_) | OclExpr::EnumLit { .. } => {}
        OclExpr::Call(call) => {
            let key = call.receiver.key();
            out.insert(key.clone());
            for filter in &call.filters {
                collect_symbols(&filter.body, Some(&key), out);
            }
            match &call.op {
                CollOp::ForAll(body) | CollOp::Exists(body) | CollOp::One(body) => {
                    collect_symbols(body, Some(&key), out)
                }
                CollOp::Includes(nav) | CollOp::Excludes(nav) => {
                    out.insert(nav.key());
                }
                CollOp::IsEmpty | CollOp::NotEmpty | CollOp::Size | CollOp::IsUndefined => {}
            }
        }
    }
}
