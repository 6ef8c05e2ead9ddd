//! Recursive-descent parser that resolves names against the class model,
//! type-checks as it goes, and normalizes bodies before returning them.

use crate::model::{AttrType, ClassModel, Value};

use super::ast::*;
use super::lexer::{lex, TokKind, Token};
use super::{ConstraintKind, OclConstraint, ParseError};

/// Parse a constraint file into resolved, normalized constraints.
pub fn parse(text: &str, model: &ClassModel) -> Result<Vec<OclConstraint>, ParseError> {
    let tokens = lex(text)?;
    let mut parser = Parser::new(tokens, model);
    let mut constraints = Vec::new();
    while !parser.at(&TokKind::Eof) {
        constraints.push(parser.constraint(constraints.len() + 1)?);
    }
    if constraints.is_empty() {
        let t = parser.peek().clone();
        return Err(ParseError::Syntax {
            line: t.line,
            col: t.col,
            message: "expected at least one 'context' block".into(),
        });
    }
    Ok(constraints)
}

/// Parse a single boolean expression in the scope of a context class (used
/// for repository files and tests).
pub fn parse_expr_str(
    text: &str,
    model: &ClassModel,
    context: &str,
    params: &[(String, AttrType)],
) -> Result<OclExpr, ParseError> {
    let tokens = lex(text)?;
    let mut parser = Parser::new(tokens, model);
    parser.ctx_class = context.to_string();
    parser.params = params.to_vec();
    if model.class(context).is_none() {
        return Err(ParseError::Resolve {
            name: context.to_string(),
            line: 1,
            col: 1,
            message: "unknown context class".into(),
        });
    }
    let body = parser.expr()?;
    parser.require_bool(&body, 1, 1)?;
    parser.expect(TokKind::Eof)?;
    Ok(normalize(body))
}

struct ElementScope {
    class: String,
    iterator: Option<String>,
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    model: &'a ClassModel,
    ctx_class: String,
    params: Vec<(String, AttrType)>,
    element: Option<ElementScope>,
}

#[derive(Debug, Clone, PartialEq)]
enum ExprType {
    Int,
    Real,
    Bool,
    Enum(Vec<String>),
    EnumLiteral(String),
}

impl ExprType {
    fn is_numeric(&self) -> bool {
        matches!(self, ExprType::Int | ExprType::Real)
    }
}

impl<'a> Parser<'a> {
    fn new(tokens: Vec<Token>, model: &'a ClassModel) -> Self {
        Parser {
            tokens,
            pos: 0,
            model,
            ctx_class: String::new(),
            params: Vec::new(),
            element: None,
        }
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_at(&self, offset: usize) -> &TokKind {
        let i = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[i].kind
    }

    fn at(&self, kind: &TokKind) -> bool {
        &self.peek().kind == kind
    }

    fn advance(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn eat(&mut self, kind: &TokKind) -> bool {
        if self.at(kind) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokKind) -> Result<Token, ParseError> {
        if self.at(&kind) {
            Ok(self.advance())
        } else {
            let t = self.peek();
            Err(ParseError::Syntax {
                line: t.line,
                col: t.col,
                message: format!("expected {kind}, found {}", t.kind),
            })
        }
    }

    fn expect_ident(&mut self) -> Result<(String, usize, usize), ParseError> {
        let t = self.peek().clone();
        match t.kind {
            TokKind::Ident(name) => {
                self.advance();
                Ok((name, t.line, t.col))
            }
            other => Err(ParseError::Syntax {
                line: t.line,
                col: t.col,
                message: format!("expected identifier, found {other}"),
            }),
        }
    }

    // ── Constraint headers ────────────────────────────────────────────

    fn constraint(&mut self, ordinal: usize) -> Result<OclConstraint, ParseError> {
        // Optional `Label:` prefix before `context`.
        let mut id = format!("C{ordinal}");
        if let TokKind::Ident(label) = &self.peek().kind {
            if self.peek_at(1) == &TokKind::Colon && self.peek_at(2) == &TokKind::KwContext {
                id = label.clone();
                self.advance();
                self.advance();
            }
        }
        self.expect(TokKind::KwContext)?;
        let (context, line, col) = self.expect_ident()?;
        if self.model.class(&context).is_none() {
            return Err(ParseError::Resolve {
                name: context,
                line,
                col,
                message: "unknown context class".into(),
            });
        }
        self.ctx_class = context.clone();
        self.params = Vec::new();
        self.element = None;

        let kind = if self.eat(&TokKind::ColonColon) {
            let (operation, _, _) = self.expect_ident()?;
            self.expect(TokKind::LParen)?;
            let mut params = Vec::new();
            while !self.at(&TokKind::RParen) {
                if !params.is_empty() {
                    self.expect(TokKind::Comma)?;
                }
                self.expect(TokKind::KwIn)?;
                let (name, pline, pcol) = self.expect_ident()?;
                self.expect(TokKind::Colon)?;
                let (ty_name, tline, tcol) = self.expect_ident()?;
                let ty = match ty_name.as_str() {
                    "Integer" => AttrType::Integer,
                    "Real" => AttrType::Real,
                    "Boolean" => AttrType::Boolean,
                    other => {
                        return Err(ParseError::Unsupported {
                            what: format!("parameter type '{other}'"),
                            line: tline,
                            col: tcol,
                        })
                    }
                };
                let class = self.model.class(&context).expect("checked above");
                if class.attribute(&name).is_some() || class.constant(&name).is_some() {
                    return Err(ParseError::Resolve {
                        name,
                        line: pline,
                        col: pcol,
                        message: format!("parameter shadows a member of class '{context}'"),
                    });
                }
                params.push((name, ty));
            }
            self.expect(TokKind::RParen)?;
            self.params = params.clone();
            self.expect(TokKind::KwPre)?;
            self.expect(TokKind::Colon)?;
            ConstraintKind::Precondition { operation, params }
        } else {
            self.expect(TokKind::KwInv)?;
            self.expect(TokKind::Colon)?;
            ConstraintKind::Invariant
        };

        let body_tok = self.peek().clone();
        let body = self.expr()?;
        self.require_bool(&body, body_tok.line, body_tok.col)?;
        Ok(OclConstraint {
            id,
            context,
            kind,
            body: normalize(body),
        })
    }

    // ── Expressions, by descending precedence ─────────────────────────

    fn expr(&mut self) -> Result<OclExpr, ParseError> {
        self.implies_expr()
    }

    fn implies_expr(&mut self) -> Result<OclExpr, ParseError> {
        let lhs = self.xor_expr()?;
        if self.at(&TokKind::KwImplies) {
            let t = self.advance();
            let rhs = self.implies_expr()?;
            self.require_bool(&lhs, t.line, t.col)?;
            self.require_bool(&rhs, t.line, t.col)?;
            return Ok(OclExpr::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn xor_expr(&mut self) -> Result<OclExpr, ParseError> {
        let mut lhs = self.or_expr()?;
        while self.at(&TokKind::KwXor) {
            let t = self.advance();
            let rhs = self.or_expr()?;
            self.require_bool(&lhs, t.line, t.col)?;
            self.require_bool(&rhs, t.line, t.col)?;
            lhs = OclExpr::Xor(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn or_expr(&mut self) -> Result<OclExpr, ParseError> {
        let mut lhs = self.and_expr()?;
        while self.at(&TokKind::KwOr) {
            let t = self.advance();
            let rhs = self.and_expr()?;
            self.require_bool(&lhs, t.line, t.col)?;
            self.require_bool(&rhs, t.line, t.col)?;
            lhs = OclExpr::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<OclExpr, ParseError> {
        let mut lhs = self.not_expr()?;
        while self.at(&TokKind::KwAnd) {
            let t = self.advance();
            let rhs = self.not_expr()?;
            self.require_bool(&lhs, t.line, t.col)?;
            self.require_bool(&rhs, t.line, t.col)?;
            lhs = OclExpr::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> Result<OclExpr, ParseError> {
        if self.at(&TokKind::KwNot) {
            let t = self.advance();
            let inner = self.not_expr()?;
            self.require_bool(&inner, t.line, t.col)?;
            return Ok(OclExpr::negation(inner));
        }
        self.rel_expr()
    }

    fn rel_expr(&mut self) -> Result<OclExpr, ParseError> {
        let lhs = self.add_expr()?;
        let op = match self.peek().kind {
            TokKind::Lt => Some(RelOp::Lt),
            TokKind::Le => Some(RelOp::Le),
            TokKind::Gt => Some(RelOp::Gt),
            TokKind::Ge => Some(RelOp::Ge),
            TokKind::Eq => Some(RelOp::Eq),
            TokKind::Ne => Some(RelOp::Ne),
            _ => None,
        };
        let Some(op) = op else { return Ok(lhs) };
        let t = self.advance();
        let rhs = self.add_expr()?;
        self.check_rel(op, &lhs, &rhs, t.line, t.col)?;
        Ok(OclExpr::rel(op, lhs, rhs))
    }

    fn add_expr(&mut self) -> Result<OclExpr, ParseError> {
        let mut lhs = self.mul_expr()?;
        loop {
            let op = match self.peek().kind {
                TokKind::Plus => ArithOp::Add,
                TokKind::Minus => ArithOp::Sub,
                _ => break,
            };
            let t = self.advance();
            let rhs = self.mul_expr()?;
            self.require_numeric(&lhs, t.line, t.col)?;
            self.require_numeric(&rhs, t.line, t.col)?;
            lhs = OclExpr::Arith(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn mul_expr(&mut self) -> Result<OclExpr, ParseError> {
        let mut lhs = self.unary_expr()?;
        loop {
            let op = match self.peek().kind {
                TokKind::Star => ArithOp::Mul,
                TokKind::Slash => ArithOp::Div,
                _ => break,
            };
            let t = self.advance();
            let rhs = self.unary_expr()?;
            self.require_numeric(&lhs, t.line, t.col)?;
            self.require_numeric(&rhs, t.line, t.col)?;
            lhs = OclExpr::Arith(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary_expr(&mut self) -> Result<OclExpr, ParseError> {
        if self.at(&TokKind::Minus) {
            let t = self.advance();
            let inner = self.unary_expr()?;
            return match inner {
                OclExpr::Lit(Value::Int(i)) => Ok(OclExpr::Lit(Value::Int(-i))),
                OclExpr::Lit(Value::Real(r)) => Ok(OclExpr::Lit(Value::Real(-r))),
                _ => Err(ParseError::Unsupported {
                    what: "unary minus on a non-literal".into(),
                    line: t.line,
                    col: t.col,
                }),
            };
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<OclExpr, ParseError> {
        let t = self.peek().clone();
        match &t.kind {
            TokKind::Int(i) => {
                self.advance();
                Ok(OclExpr::Lit(Value::Int(*i)))
            }
            TokKind::Real(r) => {
                self.advance();
                Ok(OclExpr::Lit(Value::Real(*r)))
            }
            TokKind::KwTrue => {
                self.advance();
                Ok(OclExpr::Lit(Value::Bool(true)))
            }
            TokKind::KwFalse => {
                self.advance();
                Ok(OclExpr::Lit(Value::Bool(false)))
            }
            TokKind::StrLit(_) => Err(ParseError::Unsupported {
                what: "string literal".into(),
                line: t.line,
                col: t.col,
            }),
            TokKind::LParen => {
                self.advance();
                let inner = self.expr()?;
                self.expect(TokKind::RParen)?;
                Ok(inner)
            }
            TokKind::KwSelf => {
                if self.element.is_some() {
                    return Err(ParseError::Unsupported {
                        what: "'self' navigation inside a collection body".into(),
                        line: t.line,
                        col: t.col,
                    });
                }
                self.advance();
                self.expect(TokKind::Dot)?;
                self.navigation(Vec::new())
            }
            TokKind::Ident(name) => {
                // Enumeration literal: `Name::literal`.
                if self.peek_at(1) == &TokKind::ColonColon {
                    let enum_name = name.clone();
                    self.advance();
                    self.advance();
                    let (literal, _, _) = self.expect_ident()?;
                    return Ok(OclExpr::EnumLit { enum_name, literal });
                }
                let name = name.clone();
                self.advance();
                // Iterator-qualified element attribute: `w.attr`.
                if let Some(scope) = &self.element {
                    if scope.iterator.as_deref() == Some(name.as_str()) {
                        self.expect(TokKind::Dot)?;
                        return self.navigation(Vec::new());
                    }
                }
                if self.params.iter().any(|(p, _)| p == &name) {
                    return Ok(OclExpr::Var(name));
                }
                // Implicit-scope navigation (context class or element class).
                self.navigation(vec![(name, t.line, t.col)])
            }
            other => Err(ParseError::Syntax {
                line: t.line,
                col: t.col,
                message: format!("expected an expression, found {other}"),
            }),
        }
    }

    // ── Navigation and collection chains ──────────────────────────────

    /// Parse the rest of a dotted path (the caller has consumed any leading
    /// `self.` or first segment) and any `->` collection chain after it.
    fn navigation(
        &mut self,
        mut segments: Vec<(String, usize, usize)>,
    ) -> Result<OclExpr, ParseError> {
        loop {
            if segments.is_empty() || self.eat(&TokKind::Dot) {
                let (name, line, col) = self.expect_ident()?;
                if self.at(&TokKind::LParen) {
                    // Dotted call: only `oclIsUndefined()` is supported.
                    if name != "oclIsUndefined" {
                        return Err(ParseError::Unsupported {
                            what: format!("operation call '{name}'"),
                            line,
                            col,
                        });
                    }
                    self.advance();
                    self.expect(TokKind::RParen)?;
                    if segments.is_empty() {
                        return Err(ParseError::Unsupported {
                            what: "oclIsUndefined on 'self'".into(),
                            line,
                            col,
                        });
                    }
                    let receiver = self.resolve_nav(&segments)?;
                    if !matches!(receiver.target, NavTarget::Object { .. }) {
                        return Err(ParseError::Type {
                            line,
                            col,
                            message: "oclIsUndefined applies to a single-valued association end"
                                .into(),
                        });
                    }
                    return Ok(OclExpr::Call(Box::new(Call {
                        receiver,
                        filters: Vec::new(),
                        op: CollOp::IsUndefined,
                    })));
                }
                segments.push((name, line, col));
            } else {
                break;
            }
        }
        let nav = self.resolve_nav(&segments)?;
        if self.at(&TokKind::Arrow) {
            let (line, col) = (self.peek().line, self.peek().col);
            if !matches!(nav.target, NavTarget::Collection { .. }) {
                return Err(ParseError::Type {
                    line,
                    col,
                    message: "collection operation on a non-collection navigation".into(),
                });
            }
            return self.call_chain(nav);
        }
        Ok(OclExpr::Nav(nav))
    }

    fn call_chain(&mut self, receiver: Nav) -> Result<OclExpr, ParseError> {
        let element_class = match &receiver.target {
            NavTarget::Collection { class } => class.clone(),
            _ => unreachable!("caller checks the receiver"),
        };
        let mut filters = Vec::new();
        loop {
            self.expect(TokKind::Arrow)?;
            let (name, line, col) = self.expect_ident()?;
            self.expect(TokKind::LParen)?;
            let op = match name.as_str() {
                "select" | "reject" => {
                    let body = self.iterator_body(&element_class)?;
                    self.expect(TokKind::RParen)?;
                    filters.push(Filter {
                        reject: name == "reject",
                        body,
                    });
                    if !self.at(&TokKind::Arrow) {
                        return Err(ParseError::Unsupported {
                            what: format!("'{name}' without a terminal collection operation"),
                            line,
                            col,
                        });
                    }
                    continue;
                }
                "forAll" => CollOp::ForAll(self.closed_body(&element_class)?),
                "exists" => CollOp::Exists(self.closed_body(&element_class)?),
                "one" => CollOp::One(self.closed_body(&element_class)?),
                "includes" | "excludes" => {
                    let arg = self.object_argument()?;
                    self.expect(TokKind::RParen)?;
                    if name == "includes" {
                        CollOp::Includes(arg)
                    } else {
                        CollOp::Excludes(arg)
                    }
                }
                "isEmpty" => {
                    self.expect(TokKind::RParen)?;
                    CollOp::IsEmpty
                }
                "notEmpty" => {
                    self.expect(TokKind::RParen)?;
                    CollOp::NotEmpty
                }
                "size" => {
                    self.expect(TokKind::RParen)?;
                    CollOp::Size
                }
                other => {
                    return Err(ParseError::Unsupported {
                        what: format!("collection operation '{other}'"),
                        line,
                        col,
                    })
                }
            };
            if self.at(&TokKind::Arrow) {
                let t = self.peek().clone();
                return Err(ParseError::Unsupported {
                    what: "collection chain after a terminal operation".into(),
                    line: t.line,
                    col: t.col,
                });
            }
            return Ok(OclExpr::Call(Box::new(Call {
                receiver,
                filters,
                op,
            })));
        }
    }

    fn closed_body(&mut self, element_class: &str) -> Result<OclExpr, ParseError> {
        let body = self.iterator_body(element_class)?;
        self.expect(TokKind::RParen)?;
        Ok(body)
    }

    /// Parse a predicate in element scope, with an optional `x |` iterator.
    fn iterator_body(&mut self, element_class: &str) -> Result<OclExpr, ParseError> {
        if self.element.is_some() {
            let t = self.peek().clone();
            return Err(ParseError::Unsupported {
                what: "nested collection operation".into(),
                line: t.line,
                col: t.col,
            });
        }
        let iterator = match (&self.peek().kind, self.peek_at(1)) {
            (TokKind::Ident(name), TokKind::Pipe) => {
                let name = name.clone();
                self.advance();
                self.advance();
                Some(name)
            }
            _ => None,
        };
        self.element = Some(ElementScope {
            class: element_class.to_string(),
            iterator,
        });
        let t = self.peek().clone();
        let body = self.expr();
        self.element = None;
        let body = body?;
        self.require_bool(&body, t.line, t.col)?;
        Ok(normalize(body))
    }

    /// `includes`/`excludes` argument: an object-valued navigation from self.
    fn object_argument(&mut self) -> Result<Nav, ParseError> {
        let t = self.peek().clone();
        let expr = match &t.kind {
            TokKind::KwSelf => {
                self.advance();
                self.expect(TokKind::Dot)?;
                self.navigation(Vec::new())?
            }
            TokKind::Ident(name) => {
                let name = name.clone();
                self.advance();
                self.navigation(vec![(name, t.line, t.col)])?
            }
            other => {
                return Err(ParseError::Syntax {
                    line: t.line,
                    col: t.col,
                    message: format!("expected an object navigation, found {other}"),
                })
            }
        };
        match expr {
            OclExpr::Nav(nav) if matches!(nav.target, NavTarget::Object { .. }) => Ok(nav),
            _ => Err(ParseError::Type {
                line: t.line,
                col: t.col,
                message: "includes/excludes argument must navigate to a single object".into(),
            }),
        }
    }

    fn resolve_nav(&self, segments: &[(String, usize, usize)]) -> Result<Nav, ParseError> {
        let (scope, start_class) = match &self.element {
            Some(scope) => (NavScope::Element, scope.class.clone()),
            None => (NavScope::SelfObject, self.ctx_class.clone()),
        };
        if scope == NavScope::Element && segments.len() > 1 {
            let (_, line, col) = segments[1];
            return Err(ParseError::Unsupported {
                what: "multi-step navigation inside a collection body".into(),
                line,
                col,
            });
        }
        let mut class_name = start_class;
        let mut path = Vec::new();
        for (i, (seg, line, col)) in segments.iter().enumerate() {
            let last = i + 1 == segments.len();
            let class = self.model.class(&class_name).expect("walk stays in model");
            path.push(seg.clone());
            if last {
                if let Some(ty) = class.attribute(seg) {
                    if *ty == AttrType::Str {
                        return Err(ParseError::Unsupported {
                            what: format!("string attribute '{seg}' in a constraint"),
                            line: *line,
                            col: *col,
                        });
                    }
                    return Ok(Nav {
                        scope,
                        path,
                        target: NavTarget::Attribute(ty.clone()),
                    });
                }
                if let Some(value) = class.constant(seg) {
                    return Ok(Nav {
                        scope,
                        path,
                        target: NavTarget::Constant(value.clone()),
                    });
                }
                if let Some(assoc) = self.model.association(&class_name, seg) {
                    let target = if assoc.is_single() {
                        NavTarget::Object {
                            class: assoc.target.clone(),
                            optional: !assoc.is_mandatory(),
                        }
                    } else {
                        NavTarget::Collection {
                            class: assoc.target.clone(),
                        }
                    };
                    return Ok(Nav {
                        scope,
                        path,
                        target,
                    });
                }
                return Err(ParseError::Resolve {
                    name: seg.clone(),
                    line: *line,
                    col: *col,
                    message: format!("unknown member of class '{class_name}'"),
                });
            }
            // Interior hop: must be a single-valued association end.
            match self.model.association(&class_name, seg) {
                Some(assoc) if assoc.is_single() => class_name = assoc.target.clone(),
                Some(_) => {
                    return Err(ParseError::Unsupported {
                        what: format!("navigation through collection role '{seg}'"),
                        line: *line,
                        col: *col,
                    })
                }
                None => {
                    return Err(ParseError::Resolve {
                        name: seg.clone(),
                        line: *line,
                        col: *col,
                        message: format!("unknown navigation on class '{class_name}'"),
                    })
                }
            }
        }
        unreachable!("segments is never empty")
    }

    // ── Type checking ─────────────────────────────────────────────────

    fn type_of(&self, expr: &OclExpr, line: usize, col: usize) -> Result<ExprType, ParseError> {
        match expr {
            OclExpr::And(..)
            | OclExpr::Or(..)
            | OclExpr::Xor(..)
            | OclExpr::Implies(..)
            | OclExpr::Not(..)
            | OclExpr::Rel(..) => Ok(ExprType::Bool),
            OclExpr::Arith(_, l, _) => {
                // Operands were checked at construction; Int only when both are.
                let lt = self.type_of(l, line, col)?;
                Ok(if lt == ExprType::Int {
                    ExprType::Int
                } else {
                    ExprType::Real
                })
            }
            OclExpr::Nav(nav) => match &nav.target {
                NavTarget::Attribute(AttrType::Integer) => Ok(ExprType::Int),
                NavTarget::Attribute(AttrType::Real) => Ok(ExprType::Real),
                NavTarget::Attribute(AttrType::Boolean) => Ok(ExprType::Bool),
                NavTarget::Attribute(AttrType::Enumeration(lits)) => {
                    Ok(ExprType::Enum(lits.clone()))
                }
                NavTarget::Attribute(AttrType::Str) => unreachable!("rejected at resolution"),
                NavTarget::Constant(Value::Int(_)) => Ok(ExprType::Int),
                NavTarget::Constant(_) => Ok(ExprType::Real),
                NavTarget::Object { .. } | NavTarget::Collection { .. } => Err(ParseError::Type {
                    line,
                    col,
                    message: format!("navigation '{}' denotes an object, not a value", nav.key()),
                }),
            },
            OclExpr::Var(name) => {
                let (_, ty) = self
                    .params
                    .iter()
                    .find(|(p, _)| p == name)
                    .expect("vars originate from the parameter list");
                match ty {
                    AttrType::Integer => Ok(ExprType::Int),
                    AttrType::Real => Ok(ExprType::Real),
                    AttrType::Boolean => Ok(ExprType::Bool),
                    _ => unreachable!("parameter types are restricted at parse"),
                }
            }
            OclExpr::Lit(Value::Int(_)) => Ok(ExprType::Int),
            OclExpr::Lit(Value::Real(_)) => Ok(ExprType::Real),
            OclExpr::Lit(Value::Bool(_)) => Ok(ExprType::Bool),
            OclExpr::Lit(_) => Err(ParseError::Type {
                line,
                col,
                message: "unsupported literal".into(),
            }),
            OclExpr::EnumLit { literal, .. } => Ok(ExprType::EnumLiteral(literal.clone())),
            OclExpr::Call(call) => match call.op {
                CollOp::Size => Ok(ExprType::Int),
                _ => Ok(ExprType::Bool),
            },
        }
    }

    fn require_bool(&self, expr: &OclExpr, line: usize, col: usize) -> Result<(), ParseError> {
        match self.type_of(expr, line, col)? {
            ExprType::Bool => Ok(()),
            other => Err(ParseError::Type {
                line,
                col,
                message: format!("expected a boolean expression, found {other:?}"),
            }),
        }
    }

    fn require_numeric(&self, expr: &OclExpr, line: usize, col: usize) -> Result<(), ParseError> {
        let ty = self.type_of(expr, line, col)?;
        if ty.is_numeric() {
            Ok(())
        } else {
            Err(ParseError::Type {
                line,
                col,
                message: format!("expected a numeric expression, found {ty:?}"),
            })
        }
    }

    fn check_rel(
        &self,
        op: RelOp,
        lhs: &OclExpr,
        rhs: &OclExpr,
        line: usize,
        col: usize,
    ) -> Result<(), ParseError> {
        // oclIsUndefined() must be compared against a boolean literal.
        let is_undef = |e: &OclExpr| matches!(e, OclExpr::Call(c) if c.op == CollOp::IsUndefined);
        if is_undef(lhs) || is_undef(rhs) {
            let other = if is_undef(lhs) { rhs } else { lhs };
            let ok = matches!(other, OclExpr::Lit(Value::Bool(_)))
                && matches!(op, RelOp::Eq | RelOp::Ne);
            return if ok {
                Ok(())
            } else {
                Err(ParseError::Type {
                    line,
                    col,
                    message: "oclIsUndefined() compares to true or false with = or <>".into(),
                })
            };
        }
        let lt = self.type_of(lhs, line, col)?;
        let rt = self.type_of(rhs, line, col)?;
        let ok = match (&lt, &rt) {
            (a, b) if a.is_numeric() && b.is_numeric() => true,
            (ExprType::Bool, ExprType::Bool) => matches!(op, RelOp::Eq | RelOp::Ne),
            (ExprType::Enum(lits), ExprType::EnumLiteral(lit))
            | (ExprType::EnumLiteral(lit), ExprType::Enum(lits)) => {
                if !lits.contains(lit) {
                    return Err(ParseError::Resolve {
                        name: lit.clone(),
                        line,
                        col,
                        message: "literal not in the attribute's enumeration".into(),
                    });
                }
                matches!(op, RelOp::Eq | RelOp::Ne)
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(ParseError::Type {
                line,
                col,
                message: format!("operands of '{}' have incompatible types", op.symbol()),
            })
        }
    }
}
