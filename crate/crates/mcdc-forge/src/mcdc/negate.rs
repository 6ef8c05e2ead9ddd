//! Clause negation: relational operators invert, equality against a boolean
//! literal flips the literal, and collection operations follow structural
//! rewrite rules so the negated form stays solvable by search.

use crate::model::Value;
use crate::ocl::{Call, CollOp, Filter, OclExpr, RelOp};

use super::McdcError;

/// Negate one clause. The result is satisfied by exactly the complement of
/// the input's satisfying set.
pub fn negate_clause(expr: &OclExpr) -> Result<OclExpr, McdcError> {
    match expr {
        OclExpr::Rel(RelOp::Eq, l, r) => {
            if let OclExpr::Lit(Value::Bool(b)) = &**r {
                return Ok(OclExpr::rel(
                    RelOp::Eq,
                    (**l).clone(),
                    OclExpr::Lit(Value::Bool(!b)),
                ));
            }
            if let OclExpr::Lit(Value::Bool(b)) = &**l {
                return Ok(OclExpr::rel(
                    RelOp::Eq,
                    OclExpr::Lit(Value::Bool(!b)),
                    (**r).clone(),
                ));
            }
            Ok(OclExpr::Rel(RelOp::Ne, l.clone(), r.clone()))
        }
        OclExpr::Rel(op, l, r) => Ok(OclExpr::Rel(op.inverse(), l.clone(), r.clone())),
        OclExpr::Not(inner) if !inner.is_bool_op() => Ok((**inner).clone()),
        OclExpr::Nav(_) | OclExpr::Var(_) => Ok(OclExpr::negation(expr.clone())),
        OclExpr::Lit(Value::Bool(b)) => Ok(OclExpr::Lit(Value::Bool(!b))),
        OclExpr::Call(call) => negate_call(call),
        other => Err(McdcError::UnsupportedClauseShape(format!("{other:?}"))),
    }
}

fn negate_call(call: &Call) -> Result<OclExpr, McdcError> {
    let rebuilt = |op: CollOp| {
        OclExpr::Call(Box::new(Call {
            receiver: call.receiver.clone(),
            filters: call.filters.clone(),
            op,
        }))
    };
    match &call.op {
        CollOp::ForAll(body) => Ok(rebuilt(CollOp::Exists(negate_predicate(body)?))),
        CollOp::Exists(body) => Ok(rebuilt(CollOp::ForAll(negate_predicate(body)?))),
        CollOp::One(body) => {
            // one(p) fails exactly when the p-selection does not have size 1.
            let mut filters = call.filters.clone();
            filters.push(Filter {
                reject: false,
                body: body.clone(),
            });
            let size = OclExpr::Call(Box::new(Call {
                receiver: call.receiver.clone(),
                filters,
                op: CollOp::Size,
            }));
            Ok(OclExpr::rel(RelOp::Ne, size, OclExpr::Lit(Value::Int(1))))
        }
        CollOp::Includes(nav) => Ok(rebuilt(CollOp::Excludes(nav.clone()))),
        CollOp::Excludes(nav) => Ok(rebuilt(CollOp::Includes(nav.clone()))),
        CollOp::IsEmpty => Ok(rebuilt(CollOp::NotEmpty)),
        CollOp::NotEmpty => Ok(rebuilt(CollOp::IsEmpty)),
        CollOp::Size => Err(McdcError::UnsupportedClauseShape(
            "bare size() is not a boolean clause".into(),
        )),
        CollOp::IsUndefined => Ok(OclExpr::negation(OclExpr::Call(Box::new(call.clone())))),
    }
}

/// Negate a collection-body predicate, pushing the negation to its leaves.
pub fn negate_predicate(body: &OclExpr) -> Result<OclExpr, McdcError> {
    match body {
        OclExpr::And(l, r) => Ok(OclExpr::or(negate_predicate(l)?, negate_predicate(r)?)),
        OclExpr::Or(l, r) => Ok(OclExpr::and(negate_predicate(l)?, negate_predicate(r)?)),
        leaf => negate_clause(leaf),
    }
}
