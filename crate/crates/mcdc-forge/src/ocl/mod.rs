//! Parsing, resolution, and rendering of the supported OCL subset.
//!
//! The surface syntax is `context` blocks with `inv:` invariants or
//! `Class::op(in p : Type, ...) pre:` preconditions, `--` line comments,
//! and an optional `Label:` prefix naming each constraint.

mod ast;
mod lexer;
mod parser;
mod render;

use std::fmt;

use crate::model::AttrType;

pub use ast::{
    clause_symbols, decompose, normalize, ArithOp, Call, Clause, CollOp, Filter, Nav, NavScope,
    NavTarget, OclExpr, RelOp, Skeleton,
};
pub use parser::{parse, parse_expr_str};
pub use render::{render_constraint, render_expr};

/// A parsed, resolved, normalized constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct OclConstraint {
    pub id: String,
    pub context: String,
    pub kind: ConstraintKind,
    pub body: OclExpr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintKind {
    Invariant,
    Precondition {
        operation: String,
        params: Vec<(String, AttrType)>,
    },
}

impl OclConstraint {
    pub fn params(&self) -> &[(String, AttrType)] {
        match &self.kind {
            ConstraintKind::Invariant => &[],
            ConstraintKind::Precondition { params, .. } => params,
        }
    }

    pub fn render(&self) -> String {
        render_constraint(&self.context, &self.kind, &self.body)
    }
}

/// The ordered boolean leaves of a constraint body.
pub fn extract_clauses(constraint: &OclConstraint) -> Vec<Clause> {
    decompose(&constraint.body).1
}

#[derive(Debug)]
pub enum ParseError {
    Lex {
        line: usize,
        col: usize,
        message: String,
    },
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    Resolve {
        name: String,
        line: usize,
        col: usize,
        message: String,
    },
    Unsupported {
        what: String,
        line: usize,
        col: usize,
    },
    Type {
        line: usize,
        col: usize,
        message: String,
    },
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseError::Lex { line, col, message } => {
                write!(f, "lexical error at {line}:{col}: {message}")
            }
            ParseError::Syntax { line, col, message } => {
                write!(f, "syntax error at {line}:{col}: {message}")
            }
            ParseError::Resolve {
                name,
                line,
                col,
                message,
            } => {
                write!(f, "cannot resolve '{name}' at {line}:{col}: {message}")
            }
            ParseError::Unsupported { what, line, col } => {
                write!(f, "unsupported construct at {line}:{col}: {what}")
            }
            ParseError::Type { line, col, message } => {
                write!(f, "type error at {line}:{col}: {message}")
            }
        }
    }
}

impl std::error::Error for ParseError {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{load_model_str, ClassModel, Value};

    fn gcs() -> ClassModel {
        load_model_str(include_str!("../../tests/data/gcs.model.json")).unwrap()
    }

    fn corpus() -> Vec<OclConstraint> {
        parse(include_str!("../../tests/data/gcs.ocl"), &gcs()).unwrap()
    }

    #[test]
    fn corpus_parses_with_stable_ids() {
        let constraints = corpus();
        let ids: Vec<&str> = constraints.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(
            ids,
            ["C1", "C2", "C3", "C4", "C5", "C6", "C7", "C8", "C9", "C10"]
        );
    }

    #[test]
    fn c2_has_one_clause_on_waypoints() {
        let constraints = corpus();
        let c2 = &constraints[1];
        assert_eq!(c2.context, "GCS");
        let clauses = extract_clauses(c2);
        assert_eq!(clauses.len(), 1);
        assert_eq!(
            render_expr(&clauses[0].expr),
            "self.mission.waypoints>self.mission.MIN_WP_LIMIT"
        );
        assert!(clauses[0].attrs.contains("mission.waypoints"));
        assert!(!clauses[0].attrs.contains("mission.MIN_WP_LIMIT"));
    }

    #[test]
    fn c1_decomposes_into_p_and_q_or_r() {
        let constraints = corpus();
        let (skeleton, clauses) = decompose(&constraints[0].body);
        assert_eq!(clauses.len(), 3);
        match skeleton {
            Skeleton::And(l, r) => {
                assert_eq!(
                    *l,
                    Skeleton::Leaf {
                        clause: 0,
                        negated: false
                    }
                );
                match *r {
                    Skeleton::Or(q, r) => {
                        assert_eq!(
                            *q,
                            Skeleton::Leaf {
                                clause: 1,
                                negated: false
                            }
                        );
                        assert_eq!(
                            *r,
                            Skeleton::Leaf {
                                clause: 2,
                                negated: false
                            }
                        );
                    }
                    other => panic!("expected or, got {other:?}"),
                }
            }
            other => panic!("expected and, got {other:?}"),
        }
        let rendered: Vec<String> = clauses.iter().map(|c| render_expr(&c.expr)).collect();
        assert_eq!(
            rendered,
            [
                "self.mission.oclIsUndefined()=false",
                "self.mission.flightTime<self.uav.MAX_TIME",
                "self.mission.flightDistance<self.uav.MAX_RANGE",
            ]
        );
    }

    #[test]
    fn c1_clause_attrs_are_disjoint() {
        let constraints = corpus();
        let clauses = extract_clauses(&constraints[0]);
        for (i, a) in clauses.iter().enumerate() {
            for b in clauses.iter().skip(i + 1) {
                assert!(
                    a.attrs.is_disjoint(&b.attrs),
                    "{:?} vs {:?}",
                    a.attrs,
                    b.attrs
                );
            }
        }
    }

    #[test]
    fn c7_clauses_share_flight_distance() {
        let constraints = corpus();
        let clauses = extract_clauses(&constraints[6]);
        assert_eq!(clauses.len(), 2);
        assert!(clauses[0].attrs.contains("mission.flightDistance"));
        assert_eq!(clauses[0].attrs, clauses[1].attrs);
    }

    #[test]
    fn string_constraint_is_rejected() {
        let err = parse("context GCS inv: self.callSign.concat('x')", &gcs()).unwrap_err();
        assert!(matches!(err, ParseError::Unsupported { .. }), "{err}");
    }

    #[test]
    fn unknown_identifier_is_named_in_error() {
        let err = parse("context GCS inv: self.pilot>0", &gcs()).unwrap_err();
        match err {
            ParseError::Resolve { name, .. } => assert_eq!(name, "pilot"),
            other => panic!("expected resolve error, got {other}"),
        }
    }

    #[test]
    fn implies_expands_to_or_with_negated_lhs() {
        let model = gcs();
        let body = parse_expr_str(
            "self.mission.survey=true implies self.mission.waypoints>10",
            &model,
            "GCS",
            &[],
        )
        .unwrap();
        assert_eq!(
            render_expr(&body),
            "not (self.mission.survey=true) or self.mission.waypoints>10"
        );
        let (_, clauses) = decompose(&body);
        assert_eq!(clauses.len(), 2);
    }

    #[test]
    fn xor_expands_and_shares_clause_indices() {
        let model = gcs();
        let body = parse_expr_str(
            "self.mission.waypoints>10 xor self.mission.survey=true",
            &model,
            "GCS",
            &[],
        )
        .unwrap();
        let (skeleton, clauses) = decompose(&body);
        // (a or b) and (not a or not b) over exactly two distinct clauses.
        assert_eq!(clauses.len(), 2);
        assert!(skeleton.eval(&[true, false]));
        assert!(skeleton.eval(&[false, true]));
        assert!(!skeleton.eval(&[true, true]));
        assert!(!skeleton.eval(&[false, false]));
    }

    #[test]
    fn precedence_binds_and_tighter_than_or() {
        let model = gcs();
        let body = parse_expr_str(
            "self.mission.waypoints>1 or self.mission.waypoints>2 and self.mission.waypoints>3",
            &model,
            "GCS",
            &[],
        )
        .unwrap();
        assert!(matches!(body, OclExpr::Or(..)));
    }

    #[test]
    fn clause_indices_are_deterministic() {
        let text = include_str!("../../tests/data/gcs.ocl");
        let model = gcs();
        let a = parse(text, &model).unwrap();
        let b = parse(text, &model).unwrap();
        for (ca, cb) in a.iter().zip(&b) {
            assert_eq!(extract_clauses(ca), extract_clauses(cb));
        }
    }

    #[test]
    fn parameter_shadowing_is_rejected() {
        let err = parse(
            "context Route::optimize(in distance : Integer) pre: distance>0",
            &gcs(),
        )
        .unwrap_err();
        assert!(matches!(err, ParseError::Resolve { .. }), "{err}");
    }

    #[test]
    fn collection_call_on_single_end_is_rejected() {
        let err = parse("context GCS inv: self.uav->notEmpty()", &gcs()).unwrap_err();
        assert!(matches!(err, ParseError::Type { .. }), "{err}");
    }

    #[test]
    fn corpus_render_round_trips() {
        let model = gcs();
        let constraints = corpus();
        for c in &constraints {
            let again = parse(&c.render(), &model).unwrap();
            assert_eq!(again.len(), 1);
            assert_eq!(again[0].body, c.body, "{}", c.id);
        }
    }

    #[test]
    fn renders_zero_literal() {
        assert_eq!(render_expr(&OclExpr::Lit(Value::Int(0))), "0");
    }

    #[test]
    fn collection_body_round_trips() {
        let model = gcs();
        let text = "self.mission.wps->select(alt>100)->size()>2";
        let body = parse_expr_str(text, &model, "GCS", &[]).unwrap();
        assert_eq!(render_expr(&body), text);
        let explicit = parse_expr_str(
            "self.mission.wps->select(w | w.alt>100)->size()>2",
            &model,
            "GCS",
            &[],
        )
        .unwrap();
        assert_eq!(explicit, body);
    }
}
