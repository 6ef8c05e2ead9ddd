//! Render expressions and constraints back to constraint-file syntax.
//! Rendering is canonical (minimal parentheses, fixed spacing) and
//! re-parses to a structurally equal AST.

use crate::model::Value;

use super::ast::*;
use super::ConstraintKind;

fn prec(expr: &OclExpr) -> u8 {
    match expr {
        OclExpr::Implies(..) => 1,
        OclExpr::Xor(..) => 2,
        OclExpr::Or(..) => 3,
        OclExpr::And(..) => 4,
        OclExpr::Not(..) => 5,
        OclExpr::Rel(..) => 6,
        OclExpr::Arith(ArithOp::Add | ArithOp::Sub, ..) => 7,
        OclExpr::Arith(ArithOp::Mul | ArithOp::Div, ..) => 8,
        OclExpr::Lit(Value::Int(i)) if *i < 0 => 0,
        OclExpr::Lit(Value::Real(r)) if *r < 0.0 => 0,
        _ => 10,
    }
}

pub fn render_expr(expr: &OclExpr) -> String {
    render(expr, 0)
}

fn render(expr: &OclExpr, min_prec: u8) -> String {
    let text = match expr {
        OclExpr::Implies(l, r) => format!("{} implies {}", render(l, 2), render(r, 1)),
        OclExpr::Xor(l, r) => format!("{} xor {}", render(l, 2), render(r, 3)),
        OclExpr::Or(l, r) => format!("{} or {}", render(l, 3), render(r, 4)),
        OclExpr::And(l, r) => format!("{} and {}", render(l, 4), render(r, 5)),
        OclExpr::Not(inner) => format!("not {}", render(inner, 10)),
        OclExpr::Rel(op, l, r) => {
            format!("{}{}{}", render(l, 7), op.symbol(), render(r, 7))
        }
        OclExpr::Arith(op @ (ArithOp::Add | ArithOp::Sub), l, r) => {
            format!("{}{}{}", render(l, 7), op.symbol(), render(r, 8))
        }
        OclExpr::Arith(op, l, r) => {
            format!("{}{}{}", render(l, 8), op.symbol(), render(r, 9))
        }
        OclExpr::Nav(nav) => render_nav(nav),
        OclExpr::Var(name) => name.clone(),
        OclExpr::Lit(value) => render_value(value),
        OclExpr::EnumLit { enum_name, literal } => format!("{enum_name}::{literal}"),
        OclExpr::Call(call) => render_call(call),
    };
    if prec(expr) < min_prec {
        format!("({text})")
    } else {
        text
    }
}

fn render_value(value: &Value) -> String {
    match value {
        Value::Int(i) => i.to_string(),
        Value::Real(r) if r.fract() == 0.0 && r.is_finite() => format!("{r:.1}"),
        Value::Real(r) => format!("{r}"),
        Value::Bool(b) => b.to_string(),
        Value::Enum(s) | Value::Str(s) => s.clone(),
    }
}

fn render_nav(nav: &Nav) -> String {
    match nav.scope {
        NavScope::SelfObject => format!("self.{}", nav.path.join(".")),
        NavScope::Element => nav.path.join("."),
    }
}

fn render_call(call: &Call) -> String {
    if call.op == CollOp::IsUndefined {
        return format!("{}.oclIsUndefined()", render_nav(&call.receiver));
    }
    let mut out = render_nav(&call.receiver);
    for filter in &call.filters {
        let kw = if filter.reject { "reject" } else { "select" };
        out.push_str(&format!("->{kw}({})", render_expr(&filter.body)));
    }
    match &call.op {
        CollOp::ForAll(body) => out.push_str(&format!("->forAll({})", render_expr(body))),
        CollOp::Exists(body) => out.push_str(&format!("->exists({})", render_expr(body))),
        CollOp::One(body) => out.push_str(&format!("->one({})", render_expr(body))),
        CollOp::Includes(nav) => out.push_str(&format!("->includes({})", render_nav(nav))),
        CollOp::Excludes(nav) => out.push_str(&format!("->excludes({})", render_nav(nav))),
        CollOp::IsEmpty => out.push_str("->isEmpty()"),
        CollOp::NotEmpty => out.push_str("->notEmpty()"),
        CollOp::Size => out.push_str("->size()"),
        CollOp::IsUndefined => unreachable!("handled above"),
    }
    out
}

/// Render a full `context` block for the given body.
pub fn render_constraint(context: &str, kind: &ConstraintKind, body: &OclExpr) -> String {
    match kind {
        ConstraintKind::Invariant => {
            format!("context {context} inv: {}", render_expr(body))
        }
        ConstraintKind::Precondition { operation, params } => {
            let params = params
                .iter()
                .map(|(name, ty)| format!("in {name} : {ty}"))
                .collect::<Vec<_>>()
                .join(", ");
            format!(
                "context {context}::{operation}({params}) pre: {}",
                render_expr(body)
            )
        }
    }
}
