//! Recursive-descent parser for both program forms.
//!
//! Precedence, loosest to tightest: `or`, `and`, `not`, comparisons,
//! `+ -`, `* /`, unary `-`, `^`. Exponentiation is right-associative and
//! binds tighter than unary minus, so `-x^2` parses as `-(x^2)`.

use std::collections::HashSet;

use super::ast::{
    Aggregator, BinOp, Binding, BoolOp, CmpOp, EvalProgram, Expr, ExprKind, Func, MetricDef,
    RewardProgram, Span,
};
use super::error::{DslError, DslErrorKind};
use super::lexer::{lex, Tok, Token};

/// Parse a reward program: zero or more `let` lines, then one `reward =` line.
pub fn parse_reward(source: &str) -> Result<RewardProgram, DslError> {
    let tokens = lex(source)?;
    let mut p = Parser::new(&tokens);
    let mut bindings: Vec<Binding> = Vec::new();
    let mut reward: Option<Expr> = None;
    let mut seen: HashSet<String> = HashSet::new();

    loop {
        p.skip_newlines();
        let tok = p.peek().clone();
        match tok.tok {
            Tok::Eof => break,
            Tok::Let => {
                if reward.is_some() {
                    return Err(DslError::new(
                        DslErrorKind::ParseError,
                        tok.span,
                        "`let` binding after the reward line; bindings must come first",
                    ));
                }
                p.advance();
                let (name, name_span) = p.expect_ident("binding name")?;
                if !seen.insert(name.clone()) {
                    return Err(DslError::new(
                        DslErrorKind::DuplicateName,
                        name_span,
                        format!("binding `{name}` is defined more than once"),
                    ));
                }
                p.expect_assign()?;
                let expr = p.expression()?;
                p.expect_end_of_line()?;
                bindings.push(Binding { name, name_span, expr });
            }
            Tok::Reward => {
                if reward.is_some() {
                    return Err(DslError::new(
                        DslErrorKind::ParseError,
                        tok.span,
                        "more than one `reward =` line",
                    ));
                }
                p.advance();
                p.expect_assign()?;
                let expr = p.expression()?;
                p.expect_end_of_line()?;
                reward = Some(expr);
            }
            _ => {
                return Err(DslError::new(
                    DslErrorKind::ParseError,
                    tok.span,
                    format!("expected `let` or `reward`, found {}", tok.tok.describe()),
                ));
            }
        }
    }

    match reward {
        Some(reward) => Ok(RewardProgram {
            bindings,
            reward,
            source: source.to_string(),
        }),
        None => Err(DslError::new(
            DslErrorKind::ParseError,
            p.peek().span,
            "program has no `reward =` line",
        )),
    }
}

/// Parse an evaluation program: one or more `metric name = agg(expr)` lines.
pub fn parse_eval(source: &str) -> Result<EvalProgram, DslError> {
    let tokens = lex(source)?;
    let mut p = Parser::new(&tokens);
    let mut metrics: Vec<MetricDef> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();

    loop {
        p.skip_newlines();
        let tok = p.peek().clone();
        match tok.tok {
            Tok::Eof => break,
            Tok::Metric => {
                p.advance();
                let (name, name_span) = p.expect_ident("metric name")?;
                if !seen.insert(name.clone()) {
                    return Err(DslError::new(
                        DslErrorKind::DuplicateName,
                        name_span,
                        format!("metric `{name}` is defined more than once"),
                    ));
                }
                p.expect_assign()?;
                let (agg_name, agg_span) = p.expect_ident("aggregator")?;
                let aggregator = Aggregator::from_name(&agg_name).ok_or_else(|| {
                    DslError::new(
                        DslErrorKind::ParseError,
                        agg_span,
                        format!(
                            "unknown aggregator `{agg_name}` (expected one of mean, sum, min, max, final, std)"
                        ),
                    )
                })?;
                p.expect(Tok::LParen, "`(` after aggregator")?;
                let expr = p.expression()?;
                p.expect(Tok::RParen, "`)` closing the aggregator")?;
                p.expect_end_of_line()?;
                metrics.push(MetricDef {
                    name,
                    name_span,
                    aggregator,
                    expr,
                });
            }
            _ => {
                return Err(DslError::new(
                    DslErrorKind::ParseError,
                    tok.span,
                    format!("expected `metric`, found {}", tok.tok.describe()),
                ));
            }
        }
    }

    if metrics.is_empty() {
        return Err(DslError::new(
            DslErrorKind::ParseError,
            Span::new(1, 1),
            "program defines no metrics; expected at least one `metric name = aggregator(expr)` line",
        ));
    }
    Ok(EvalProgram {
        metrics,
        source: source.to_string(),
    })
}

/// Hard cap on expression nesting. Recursive descent uses the call stack,
/// so unbounded nesting in hostile input (64 KiB of `(` or `-`) would
/// otherwise overflow it.
const MAX_DEPTH: usize = 200;

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    depth: usize,
}

impl<'a> Parser<'a> {
    fn new(tokens: &'a [Token]) -> Self {
        Parser {
            tokens,
            pos: 0,
            depth: 0,
        }
    }

    fn descend(&mut self) -> Result<(), DslError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(DslError::new(
                DslErrorKind::ParseError,
                self.peek().span,
                format!("expression nesting exceeds {MAX_DEPTH} levels"),
            ));
        }
        Ok(())
    }

    fn ascend(&mut self) {
        self.depth -= 1;
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn advance(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn skip_newlines(&mut self) {
        while matches!(self.peek().tok, Tok::Newline) {
            self.advance();
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Token, DslError> {
        let t = self.peek().clone();
        if t.tok == want {
            Ok(self.advance())
        } else {
            Err(DslError::new(
                DslErrorKind::ParseError,
                t.span,
                format!("expected {what}, found {}", t.tok.describe()),
            ))
        }
    }

    fn expect_assign(&mut self) -> Result<(), DslError> {
        let t = self.peek().clone();
        if t.tok == Tok::Eq {
            self.advance();
            Ok(())
        } else {
            Err(DslError::new(
                DslErrorKind::ParseError,
                t.span,
                format!("expected `=`, found {}", t.tok.describe()),
            ))
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, Span), DslError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Ident(name) => {
                self.advance();
                Ok((name, t.span))
            }
            _ => Err(DslError::new(
                DslErrorKind::ParseError,
                t.span,
                format!("expected {what}, found {}", t.tok.describe()),
            )),
        }
    }

    fn expect_end_of_line(&mut self) -> Result<(), DslError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Newline => {
                self.advance();
                Ok(())
            }
            Tok::Eof => Ok(()),
            _ => Err(DslError::new(
                DslErrorKind::ParseError,
                t.span,
                format!("unexpected {} after end of statement", t.tok.describe()),
            )),
        }
    }

    fn expression(&mut self) -> Result<Expr, DslError> {
        self.descend()?;
        let result = self.or_expr();
        self.ascend();
        result
    }

    fn or_expr(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.and_expr()?;
        while self.peek().tok == Tok::Or {
            let span = self.advance().span;
            let rhs = self.and_expr()?;
            lhs = Expr::new(
                ExprKind::Bool {
                    op: BoolOp::Or,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                span,
            );
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.not_expr()?;
        while self.peek().tok == Tok::And {
            let span = self.advance().span;
            let rhs = self.not_expr()?;
            lhs = Expr::new(
                ExprKind::Bool {
                    op: BoolOp::And,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                span,
            );
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> Result<Expr, DslError> {
        if self.peek().tok == Tok::Not {
            let span = self.advance().span;
            self.descend()?;
            let inner = self.not_expr();
            self.ascend();
            return Ok(Expr::new(ExprKind::Not(Box::new(inner?)), span));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.additive()?;
        loop {
            let op = match self.peek().tok {
                Tok::Lt => CmpOp::Lt,
                Tok::Le => CmpOp::Le,
                Tok::Gt => CmpOp::Gt,
                Tok::Ge => CmpOp::Ge,
                Tok::Eq => CmpOp::Eq,
                _ => break,
            };
            let span = self.advance().span;
            let rhs = self.additive()?;
            lhs = Expr::new(
                ExprKind::Compare {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                span,
            );
        }
        Ok(lhs)
    }

    fn additive(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            let span = self.advance().span;
            let rhs = self.term()?;
            lhs = Expr::new(
                ExprKind::Binary {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                span,
            );
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            let span = self.advance().span;
            let rhs = self.unary()?;
            lhs = Expr::new(
                ExprKind::Binary {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                span,
            );
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, DslError> {
        if self.peek().tok == Tok::Minus {
            let span = self.advance().span;
            self.descend()?;
            let inner = self.unary();
            self.ascend();
            return Ok(Expr::new(ExprKind::Neg(Box::new(inner?)), span));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, DslError> {
        let base = self.atom()?;
        if self.peek().tok == Tok::Caret {
            let span = self.advance().span;
            // Right-associative; the exponent may itself carry a unary minus.
            self.descend()?;
            let exponent = self.unary();
            self.ascend();
            return Ok(Expr::new(
                ExprKind::Binary {
                    op: BinOp::Pow,
                    lhs: Box::new(base),
                    rhs: Box::new(exponent?),
                },
                span,
            ));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, DslError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Number(v) => {
                self.advance();
                Ok(Expr::new(ExprKind::Number(v), t.span))
            }
            Tok::Ident(name) => {
                self.advance();
                if self.peek().tok == Tok::LParen {
                    let func = Func::from_name(&name).ok_or_else(|| {
                        DslError::new(
                            DslErrorKind::ParseError,
                            t.span,
                            format!(
                                "unknown function `{name}` (expected one of abs, min, max, exp, log, sqrt, tanh, sin, cos, clip, if)"
                            ),
                        )
                    })?;
                    self.advance(); // consume `(`
                    let mut args = Vec::new();
                    if self.peek().tok != Tok::RParen {
                        loop {
                            args.push(self.expression()?);
                            if self.peek().tok == Tok::Comma {
                                self.advance();
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect(Tok::RParen, "`)` closing the argument list")?;
                    if args.len() != func.arity() {
                        return Err(DslError::new(
                            DslErrorKind::ParseError,
                            t.span,
                            format!(
                                "`{}` expects {} argument{}, got {}",
                                func.name(),
                                func.arity(),
                                if func.arity() == 1 { "" } else { "s" },
                                args.len()
                            ),
                        ));
                    }
                    Ok(Expr::new(ExprKind::Call { func, args }, t.span))
                } else {
                    Ok(Expr::new(ExprKind::Ident(name), t.span))
                }
            }
            Tok::LParen => {
                self.advance();
                let inner = self.expression()?;
                match self.peek().tok {
                    Tok::RParen => {
                        self.advance();
                        Ok(inner)
                    }
                    _ => Err(DslError::new(
                        DslErrorKind::ParseError,
                        t.span,
                        "unclosed parenthesis",
                    )),
                }
            }
            _ => Err(DslError::new(
                DslErrorKind::ParseError,
                t.span,
                format!("expected an expression, found {}", t.tok.describe()),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_program() {
        let p = parse_reward("reward = 1.0").unwrap();
        assert!(p.bindings.is_empty());
        assert!(matches!(p.reward.kind, ExprKind::Number(v) if v == 1.0));
    }

    #[test]
    fn binding_then_reward() {
        let p = parse_reward("let u = cos(theta)\nreward = u - 0.01 * a0^2").unwrap();
        assert_eq!(p.bindings.len(), 1);
        assert_eq!(p.bindings[0].name, "u");
        assert!(matches!(
            p.bindings[0].expr.kind,
            ExprKind::Call { func: Func::Cos, .. }
        ));
    }

    #[test]
    fn unclosed_paren_reports_position() {
        let err = parse_reward("reward = (1.0").unwrap_err();
        assert_eq!(err.kind, DslErrorKind::ParseError);
        assert_eq!(err.span.line, 1);
        assert!(err.message.contains("unclosed parenthesis"));
    }

    #[test]
    fn power_is_right_associative_and_tighter_than_neg() {
        let p = parse_reward("reward = -x^2").unwrap();
        match &p.reward.kind {
            ExprKind::Neg(inner) => {
                assert!(matches!(
                    inner.kind,
                    ExprKind::Binary { op: BinOp::Pow, .. }
                ));
            }
            other => panic!("expected Neg(Pow), got {other:?}"),
        }
        let p = parse_reward("reward = 2^3^2").unwrap();
        match &p.reward.kind {
            ExprKind::Binary { op: BinOp::Pow, rhs, .. } => {
                assert!(matches!(rhs.kind, ExprKind::Binary { op: BinOp::Pow, .. }));
            }
            other => panic!("expected Pow(2, Pow(3, 2)), got {other:?}"),
        }
    }

    #[test]
    fn metric_line_parses() {
        let p = parse_eval("metric mean_vx = mean(vx)").unwrap();
        assert_eq!(p.metrics.len(), 1);
        assert_eq!(p.metrics[0].name, "mean_vx");
        assert_eq!(p.metrics[0].aggregator, Aggregator::Mean);
        assert!(matches!(p.metrics[0].expr.kind, ExprKind::Ident(ref n) if n == "vx"));
    }

    #[test]
    fn duplicate_metric_name() {
        let err = parse_eval("metric a = mean(x)\nmetric a = final(x)").unwrap_err();
        assert_eq!(err.kind, DslErrorKind::DuplicateName);
        assert!(err.message.contains("`a`"));
        assert_eq!(err.span.line, 2);
    }

    #[test]
    fn unknown_aggregator() {
        let err = parse_eval("metric m = median(x)").unwrap_err();
        assert_eq!(err.kind, DslErrorKind::ParseError);
        assert!(err.message.contains("median"));
    }

    #[test]
    fn zero_metrics_rejected() {
        let err = parse_eval("# only a comment\n").unwrap_err();
        assert_eq!(err.kind, DslErrorKind::ParseError);
        assert!(err.message.contains("no metrics"));
    }

    #[test]
    fn duplicate_binding_rejected() {
        let err = parse_reward("let a = 1\nlet a = 2\nreward = a").unwrap_err();
        assert_eq!(err.kind, DslErrorKind::DuplicateName);
    }

    #[test]
    fn wrong_arity_rejected() {
        let err = parse_reward("reward = min(1)").unwrap_err();
        assert!(err.message.contains("expects 2 arguments"));
        let err = parse_reward("reward = clip(1, 2)").unwrap_err();
        assert!(err.message.contains("expects 3 arguments"));
    }

    #[test]
    fn hostile_nesting_is_rejected_not_crashed() {
        // 64 KiB of each pathological run must return an error, not blow
        // the stack.
        for run in ["(", "-", "not ", "if(1<2,", "1^"] {
            let body = run.repeat(64 * 1024 / run.len());
            let source = format!("reward = {body}");
            let err = parse_reward(&source).unwrap_err();
            assert_eq!(err.kind, DslErrorKind::ParseError, "run {run:?}");
        }
        // Deep but legal nesting below the cap still parses.
        let nested = format!("reward = {}1{}", "(".repeat(150), ")".repeat(150));
        parse_reward(&nested).unwrap();
    }
}
