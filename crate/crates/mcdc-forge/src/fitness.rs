//! Branch-distance fitness over object configurations.
//!
//! Every clause gets a non-negative distance that is zero exactly when the
//! clause holds, built from the usual relational distances with failure
//! constant k = 1. Clause distances are normalized via d/(d+1) before they
//! are combined: conjunction sums, disjunction takes the minimum. A clause
//! that cannot be evaluated because a navigation is undefined contributes
//! the maximal normalized distance of 1 instead of failing.
//!
//! The module carries two interpreters on purpose: the distance engine in
//! [`evaluate`] and a plain boolean tree-walk in [`truth`]. Tests hold them
//! to the contract `evaluate(e, ...) == 0  <=>  truth(e, ...)`.

use crate::model::{ClassModel, ObjectConfiguration, Value};
use crate::ocl::{Call, Clause, CollOp, NavScope, OclExpr, RelOp};

/// Failure constant added to strict relational distances.
pub const FAILURE_K: f64 = 1.0;

/// Raw stand-in distance when a root-level clause cannot be evaluated.
const UNDEFINED_RAW: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fitness {
    pub value: f64,
    pub solved: bool,
}

/// Everything evaluation needs besides the expression itself.
#[derive(Debug, Clone, Copy)]
pub struct EvalCtx<'a> {
    pub model: &'a ClassModel,
    pub ctx_class: &'a str,
    pub cfg: &'a ObjectConfiguration,
}

impl<'a> EvalCtx<'a> {
    pub fn new(model: &'a ClassModel, ctx_class: &'a str, cfg: &'a ObjectConfiguration) -> Self {
        EvalCtx {
            model,
            ctx_class,
            cfg,
        }
    }

    fn self_id(&self) -> Option<&str> {
        self.cfg
            .object_of_class(self.ctx_class)
            .map(|o| o.id.as_str())
    }

    /// Follow single-valued roles; `None` as soon as a hop is undefined.
    fn walk(&self, start: &str, hops: &[String]) -> Option<String> {
        let mut current = start.to_string();
        for hop in hops {
            current = self.cfg.nav_single(&current, hop)?.to_string();
        }
        Some(current)
    }

    fn attribute(&self, elem: Option<&str>, path: &[String], scope: NavScope) -> Option<Value> {
        let (start, hops, attr) = match scope {
            NavScope::Element => (elem?.to_string(), &path[..0], &path[path.len() - 1]),
            NavScope::SelfObject => {
                let start = self.self_id()?.to_string();
                (start, &path[..path.len() - 1], &path[path.len() - 1])
            }
        };
        let owner = self.walk(&start, hops)?;
        self.cfg.object(&owner)?.attrs.get(attr).cloned()
    }

    /// Element ids of a collection navigation, in link order.
    fn elements(&self, receiver: &crate::ocl::Nav) -> Option<Vec<String>> {
        let start = self.self_id()?.to_string();
        let hops = &receiver.path[..receiver.path.len() - 1];
        let owner = self.walk(&start, hops)?;
        let role = &receiver.path[receiver.path.len() - 1];
        Some(
            self.cfg
                .nav_many(&owner, role)
                .into_iter()
                .map(str::to_string)
                .collect(),
        )
    }

    /// Whether a single-valued navigation is undefined (nulls propagate).
    fn is_undefined(&self, nav: &crate::ocl::Nav) -> bool {
        match self.self_id() {
            Some(start) => self.walk(start, &nav.path).is_none(),
            None => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Scalar {
    Num(f64),
    Bool(bool),
    EnumV(String),
}

fn scalar_eq(a: &Scalar, b: &Scalar) -> Option<bool> {
    match (a, b) {
        (Scalar::Num(x), Scalar::Num(y)) => Some(x == y),
        (Scalar::Bool(x), Scalar::Bool(y)) => Some(x == y),
        (Scalar::EnumV(x), Scalar::EnumV(y)) => Some(x == y),
        _ => None,
    }
}

fn value_scalar(value: &Value) -> Option<Scalar> {
    match value {
        Value::Int(i) => Some(Scalar::Num(*i as f64)),
        Value::Real(r) => Some(Scalar::Num(*r)),
        Value::Bool(b) => Some(Scalar::Bool(*b)),
        Value::Enum(lit) => Some(Scalar::EnumV(lit.clone())),
        Value::Str(_) => None,
    }
}

/// Scalar value of a non-boolean-structured expression; `None` when any
/// navigation along the way is undefined.
fn scalar(ctx: &EvalCtx, elem: Option<&str>, expr: &OclExpr) -> Option<Scalar> {
    match expr {
        OclExpr::Lit(v) => value_scalar(v),
        OclExpr::EnumLit { literal, .. } => Some(Scalar::EnumV(literal.clone())),
        OclExpr::Var(name) => value_scalar(ctx.cfg.params.get(name)?),
        OclExpr::Nav(nav) => match &nav.target {
            crate::ocl::NavTarget::Constant(v) => value_scalar(v),
            crate::ocl::NavTarget::Attribute(_) => {
                value_scalar(&ctx.attribute(elem, &nav.path, nav.scope)?)
            }
            _ => None,
        },
        OclExpr::Arith(op, l, r) => {
            let (Scalar::Num(a), Scalar::Num(b)) = (scalar(ctx, elem, l)?, scalar(ctx, elem, r)?)
            else {
                return None;
            };
            if *op == crate::ocl::ArithOp::Div && b == 0.0 {
                return None;
            }
            Some(Scalar::Num(op.apply(a, b)))
        }
        OclExpr::Call(call) => match call.op {
            CollOp::Size => {
                let filtered = filtered_elements(ctx, call)?;
                Some(Scalar::Num(filtered.len() as f64))
            }
            CollOp::IsUndefined => Some(Scalar::Bool(ctx.is_undefined(&call.receiver))),
            _ => truth_clause(ctx, elem, expr).map(Scalar::Bool),
        },
        _ => None,
    }
}

fn passes_filters(ctx: &EvalCtx, call: &Call, elem: &str) -> Option<bool> {
    for filter in &call.filters {
        let holds = truth_in_scope(ctx, Some(elem), &filter.body)?;
        if holds == filter.reject {
            return Some(false);
        }
    }
    Some(true)
}

fn filtered_elements(ctx: &EvalCtx, call: &Call) -> Option<Vec<String>> {
    let elements = ctx.elements(&call.receiver)?;
    let mut out = Vec::new();
    for elem in elements {
        if passes_filters(ctx, call, &elem)? {
            out.push(elem);
        }
    }
    Some(out)
}

// ── Distance engine ───────────────────────────────────────────────────

fn relational_distance(op: RelOp, a: f64, b: f64) -> f64 {
    match op {
        RelOp::Lt => {
            if a < b {
                0.0
            } else {
                a - b + FAILURE_K
            }
        }
        RelOp::Le => {
            if a <= b {
                0.0
            } else {
                a - b
            }
        }
        RelOp::Gt => {
            if a > b {
                0.0
            } else {
                b - a + FAILURE_K
            }
        }
        RelOp::Ge => {
            if a >= b {
                0.0
            } else {
                b - a
            }
        }
        RelOp::Eq => (a - b).abs(),
        RelOp::Ne => {
            if a != b {
                0.0
            } else {
                FAILURE_K
            }
        }
    }
}

/// Raw distance of one clause; `None` when it cannot be evaluated.
fn clause_raw(ctx: &EvalCtx, elem: Option<&str>, clause: &OclExpr) -> Option<f64> {
    match clause {
        OclExpr::Rel(op, l, r) => {
            let a = scalar(ctx, elem, l)?;
            let b = scalar(ctx, elem, r)?;
            match (&a, &b) {
                (Scalar::Num(x), Scalar::Num(y)) => Some(relational_distance(*op, *x, *y)),
                _ => {
                    let equal = scalar_eq(&a, &b)?;
                    let want_equal = *op == RelOp::Eq;
                    Some(if equal == want_equal { 0.0 } else { FAILURE_K })
                }
            }
        }
        OclExpr::Not(inner) => {
            let holds = truth_clause(ctx, elem, inner)?;
            Some(if holds { FAILURE_K } else { 0.0 })
        }
        OclExpr::Nav(_) | OclExpr::Var(_) | OclExpr::Lit(_) => match scalar(ctx, elem, clause)? {
            Scalar::Bool(true) => Some(0.0),
            Scalar::Bool(false) => Some(FAILURE_K),
            _ => None,
        },
        OclExpr::Call(call) => call_raw(ctx, call),
        _ => None,
    }
}

fn call_raw(ctx: &EvalCtx, call: &Call) -> Option<f64> {
    match &call.op {
        CollOp::IsUndefined => Some(if ctx.is_undefined(&call.receiver) {
            0.0
        } else {
            FAILURE_K
        }),
        CollOp::ForAll(body) => {
            let mut total = 0.0;
            for elem in filtered_elements(ctx, call)? {
                total += branch_value(ctx, Some(&elem), body);
            }
            Some(total)
        }
        CollOp::Exists(body) => {
            let elements = filtered_elements(ctx, call)?;
            if elements.is_empty() {
                return Some(FAILURE_K);
            }
            Some(
                elements
                    .iter()
                    .map(|e| branch_value(ctx, Some(e), body))
                    .fold(f64::INFINITY, f64::min),
            )
        }
        CollOp::One(body) => {
            let elements = filtered_elements(ctx, call)?;
            let mut satisfied = 0usize;
            for elem in &elements {
                if truth_in_scope(ctx, Some(elem), body)? {
                    satisfied += 1;
                }
            }
            Some((satisfied as f64 - 1.0).abs())
        }
        CollOp::Includes(nav) | CollOp::Excludes(nav) => {
            let target = {
                let start = ctx.self_id()?.to_string();
                ctx.walk(&start, &nav.path)?
            };
            let present = filtered_elements(ctx, call)?.contains(&target);
            let want_present = matches!(call.op, CollOp::Includes(_));
            Some(if present == want_present {
                0.0
            } else {
                FAILURE_K
            })
        }
        CollOp::IsEmpty => Some(filtered_elements(ctx, call)?.len() as f64),
        CollOp::NotEmpty => {
            let filtered = filtered_elements(ctx, call)?;
            if !filtered.is_empty() {
                return Some(0.0);
            }
            let raw = ctx.elements(&call.receiver)?;
            if raw.is_empty() {
                return Some(FAILURE_K);
            }
            // Guide toward making some element pass the filters.
            let mut best = f64::INFINITY;
            for elem in &raw {
                let mut d = 0.0;
                for filter in &call.filters {
                    if filter.reject {
                        let holds = truth_in_scope(ctx, Some(elem), &filter.body)?;
                        d += if holds {
                            normalized(Some(FAILURE_K))
                        } else {
                            0.0
                        };
                    } else {
                        d += branch_value(ctx, Some(elem), &filter.body);
                    }
                }
                best = best.min(d.max(f64::MIN_POSITIVE));
            }
            Some(best)
        }
        CollOp::Size => None,
    }
}

fn normalized(raw: Option<f64>) -> f64 {
    match raw {
        Some(d) => d / (d + 1.0),
        None => 1.0,
    }
}

/// Normalized distance of a clause or aggregate of a boolean subtree.
fn branch_value(ctx: &EvalCtx, elem: Option<&str>, expr: &OclExpr) -> f64 {
    match expr {
        OclExpr::And(l, r) => branch_value(ctx, elem, l) + branch_value(ctx, elem, r),
        OclExpr::Or(l, r) => branch_value(ctx, elem, l).min(branch_value(ctx, elem, r)),
        clause => normalized(clause_raw(ctx, elem, clause)),
    }
}

/// Branch-distance fitness of a configuration against an expression.
/// Zero exactly when the configuration satisfies the expression.
pub fn evaluate(expr: &OclExpr, ctx: &EvalCtx) -> Fitness {
    let value = match expr {
        OclExpr::And(..) | OclExpr::Or(..) => branch_value(ctx, None, expr),
        clause => clause_raw(ctx, None, clause).unwrap_or(UNDEFINED_RAW),
    };
    Fitness {
        value,
        solved: value == 0.0,
    }
}

// ── Naive boolean interpreter (the second route) ──────────────────────

fn truth_in_scope(ctx: &EvalCtx, elem: Option<&str>, expr: &OclExpr) -> Option<bool> {
    match expr {
        OclExpr::And(l, r) => Some(
            truth_in_scope(ctx, elem, l).unwrap_or(false)
                && truth_in_scope(ctx, elem, r).unwrap_or(false),
        ),
        OclExpr::Or(l, r) => Some(
            truth_in_scope(ctx, elem, l).unwrap_or(false)
                || truth_in_scope(ctx, elem, r).unwrap_or(false),
        ),
        clause => truth_clause(ctx, elem, clause),
    }
}

fn truth_clause(ctx: &EvalCtx, elem: Option<&str>, clause: &OclExpr) -> Option<bool> {
    match clause {
        OclExpr::Rel(op, l, r) => {
            let a = scalar(ctx, elem, l)?;
            let b = scalar(ctx, elem, r)?;
            match (&a, &b) {
                (Scalar::Num(x), Scalar::Num(y)) => Some(op.holds(*x, *y)),
                _ => {
                    let equal = scalar_eq(&a, &b)?;
                    Some(if *op == RelOp::Eq { equal } else { !equal })
                }
            }
        }
        OclExpr::Not(inner) => truth_clause(ctx, elem, inner).map(|t| !t),
        OclExpr::Nav(_) | OclExpr::Var(_) | OclExpr::Lit(_) => match scalar(ctx, elem, clause)? {
            Scalar::Bool(b) => Some(b),
            _ => None,
        },
        OclExpr::Call(call) => truth_call(ctx, call),
        _ => None,
    }
}

fn truth_call(ctx: &EvalCtx, call: &Call) -> Option<bool> {
    match &call.op {
        CollOp::IsUndefined => Some(ctx.is_undefined(&call.receiver)),
        CollOp::ForAll(body) => {
            let elements = filtered_elements(ctx, call)?;
            for elem in &elements {
                if !truth_in_scope(ctx, Some(elem), body).unwrap_or(false) {
                    return Some(false);
                }
            }
            Some(true)
        }
        CollOp::Exists(body) => {
            let elements = filtered_elements(ctx, call)?;
            for elem in &elements {
                if truth_in_scope(ctx, Some(elem), body).unwrap_or(false) {
                    return Some(true);
                }
            }
            Some(false)
        }
        CollOp::One(body) => {
            let elements = filtered_elements(ctx, call)?;
            let mut count = 0;
            for elem in &elements {
                if truth_in_scope(ctx, Some(elem), body).unwrap_or(false) {
                    count += 1;
                }
            }
            Some(count == 1)
        }
        CollOp::Includes(nav) | CollOp::Excludes(nav) => {
            let start = ctx.self_id()?.to_string();
            let target = ctx.walk(&start, &nav.path)?;
            let present = filtered_elements(ctx, call)?.contains(&target);
            Some(present == matches!(call.op, CollOp::Includes(_)))
        }
        CollOp::IsEmpty => Some(filtered_elements(ctx, call)?.is_empty()),
        CollOp::NotEmpty => Some(!filtered_elements(ctx, call)?.is_empty()),
        CollOp::Size => None,
    }
}

/// Naive boolean evaluation; an unevaluable clause counts as unsatisfied.
pub fn truth(expr: &OclExpr, ctx: &EvalCtx) -> bool {
    truth_in_scope(ctx, None, expr).unwrap_or(false)
}

/// Per-clause boolean evaluation of one origin constraint's clauses.
pub fn clause_truth_vector(clauses: &[Clause], ctx: &EvalCtx) -> Vec<bool> {
    clauses
        .iter()
        .map(|c| truth_clause(ctx, None, &c.expr).unwrap_or(false))
        .collect()
}
