//! Identifier resolution and type checking against an environment schema.
//!
//! A program accepted here can never raise `UnknownIdentifier` or
//! `TypeError` at evaluation time: every name resolves to a schema field
//! (bare = next state, `prev_`-prefixed = previous state), an action
//! component `a0..`, `t`, `dt` or an earlier binding, and every node
//! type-checks. Booleans exist only inside `if` conditions, comparisons and
//! boolean operators; there is no 0/1 coercion.

use std::collections::HashSet;

use crate::envs::EnvSchema;

use super::ast::{Binding, EvalProgram, Expr, ExprKind, Func, RewardProgram, Span};
use super::error::{DslError, DslErrorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ty {
    Num,
    Bool,
}

impl Ty {
    fn name(self) -> &'static str {
        match self {
            Ty::Num => "numeric",
            Ty::Bool => "boolean",
        }
    }
}

/// Resolution scope: schema-provided names plus bindings seen so far.
pub struct Scope<'a> {
    schema: &'a EnvSchema,
    bindings: Vec<String>,
}

impl<'a> Scope<'a> {
    pub fn new(schema: &'a EnvSchema) -> Self {
        Scope {
            schema,
            bindings: Vec::new(),
        }
    }

    fn resolves(&self, name: &str) -> bool {
        if name == "t" || name == "dt" {
            return true;
        }
        if self.schema.field_index(name).is_some() {
            return true;
        }
        if let Some(rest) = name.strip_prefix("prev_") {
            if self.schema.field_index(rest).is_some() {
                return true;
            }
        }
        if let Some(rest) = name.strip_prefix('a') {
            if let Ok(i) = rest.parse::<usize>() {
                // Reject forms like `a01` so each component has one spelling.
                if i < self.schema.action_dim && rest == i.to_string() {
                    return true;
                }
            }
        }
        self.bindings.iter().any(|b| b == name)
    }

    fn available(&self) -> String {
        let mut names = self.schema.identifier_names();
        names.extend(self.bindings.iter().cloned());
        names.join(", ")
    }

    fn unknown(&self, name: &str, span: Span) -> DslError {
        DslError::new(
            DslErrorKind::UnknownIdentifier,
            span,
            format!(
                "unknown identifier `{name}`; available identifiers: {}",
                self.available()
            ),
        )
    }
}

/// Validate a reward program: bindings in order, then the reward expression,
/// which must be numeric.
pub fn validate_reward(program: &RewardProgram, schema: &EnvSchema) -> Result<(), DslError> {
    let mut scope = Scope::new(schema);
    check_bindings(&program.bindings, &mut scope)?;
    let ty = infer(&program.reward, &scope)?;
    if ty != Ty::Num {
        return Err(DslError::new(
            DslErrorKind::TypeError,
            program.reward.span,
            "reward expression must be numeric, not boolean",
        ));
    }
    Ok(())
}

/// Validate an evaluation program: every per-step metric expression must be
/// numeric under the schema scope.
pub fn validate_eval(program: &EvalProgram, schema: &EnvSchema) -> Result<(), DslError> {
    let scope = Scope::new(schema);
    let mut seen: HashSet<&str> = HashSet::new();
    for m in &program.metrics {
        if !seen.insert(m.name.as_str()) {
            return Err(DslError::new(
                DslErrorKind::DuplicateName,
                m.name_span,
                format!("metric `{}` is defined more than once", m.name),
            ));
        }
        let ty = infer(&m.expr, &scope)?;
        if ty != Ty::Num {
            return Err(DslError::new(
                DslErrorKind::TypeError,
                m.expr.span,
                format!("metric `{}` expression must be numeric, not boolean", m.name),
            ));
        }
    }
    Ok(())
}

fn check_bindings(bindings: &[Binding], scope: &mut Scope) -> Result<(), DslError> {
    for b in bindings {
        if scope.resolves(&b.name) {
            return Err(DslError::new(
                DslErrorKind::DuplicateName,
                b.name_span,
                format!(
                    "binding `{}` collides with an existing identifier",
                    b.name
                ),
            ));
        }
        let ty = infer(&b.expr, scope)?;
        if ty != Ty::Num {
            return Err(DslError::new(
                DslErrorKind::TypeError,
                b.expr.span,
                format!("binding `{}` must be numeric, not boolean", b.name),
            ));
        }
        scope.bindings.push(b.name.clone());
    }
    Ok(())
}

/// Infer the type of an expression, reporting the first violation.
pub fn infer(expr: &Expr, scope: &Scope) -> Result<Ty, DslError> {
    match &expr.kind {
        ExprKind::Number(_) => Ok(Ty::Num),
        ExprKind::Ident(name) => {
            if scope.resolves(name) {
                Ok(Ty::Num)
            } else {
                Err(scope.unknown(name, expr.span))
            }
        }
        ExprKind::Neg(inner) => {
            expect_ty(inner, scope, Ty::Num, "operand of unary `-`")?;
            Ok(Ty::Num)
        }
        ExprKind::Not(inner) => {
            expect_ty(inner, scope, Ty::Bool, "operand of `not`")?;
            Ok(Ty::Bool)
        }
        ExprKind::Binary { op, lhs, rhs } => {
            expect_ty(lhs, scope, Ty::Num, &format!("left operand of `{}`", op.symbol()))?;
            expect_ty(rhs, scope, Ty::Num, &format!("right operand of `{}`", op.symbol()))?;
            Ok(Ty::Num)
        }
        ExprKind::Compare { op, lhs, rhs } => {
            expect_ty(lhs, scope, Ty::Num, &format!("left operand of `{}`", op.symbol()))?;
            expect_ty(rhs, scope, Ty::Num, &format!("right operand of `{}`", op.symbol()))?;
            Ok(Ty::Bool)
        }
        ExprKind::Bool { op, lhs, rhs } => {
            expect_ty(lhs, scope, Ty::Bool, &format!("left operand of `{}`", op.symbol()))?;
            expect_ty(rhs, scope, Ty::Bool, &format!("right operand of `{}`", op.symbol()))?;
            Ok(Ty::Bool)
        }
        ExprKind::Call { func, args } => {
            if *func == Func::If {
                expect_ty(&args[0], scope, Ty::Bool, "condition of `if`")?;
                expect_ty(&args[1], scope, Ty::Num, "second argument of `if`")?;
                expect_ty(&args[2], scope, Ty::Num, "third argument of `if`")?;
            } else {
                for (i, a) in args.iter().enumerate() {
                    expect_ty(
                        a,
                        scope,
                        Ty::Num,
                        &format!("argument {} of `{}`", i + 1, func.name()),
                    )?;
                }
            }
            Ok(Ty::Num)
        }
    }
}

fn expect_ty(expr: &Expr, scope: &Scope, want: Ty, what: &str) -> Result<(), DslError> {
    let got = infer(expr, scope)?;
    if got != want {
        return Err(DslError::new(
            DslErrorKind::TypeError,
            expr.span,
            format!("{what} is {}, expected {}", got.name(), want.name()),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parser::{parse_eval, parse_reward};
    use crate::envs;

    fn pm() -> EnvSchema {
        envs::schema("pointmass").unwrap()
    }

    #[test]
    fn unknown_identifier_lists_available_names() {
        let p = parse_reward("reward = torso_height").unwrap();
        let err = validate_reward(&p, &pm()).unwrap_err();
        assert_eq!(err.kind, DslErrorKind::UnknownIdentifier);
        assert!(err.message.contains("torso_height"));
        assert!(err.message.contains("x, vx, prev_x, prev_vx, a0, t, dt"));
    }

    #[test]
    fn conditional_on_comparison_is_ok() {
        let p = parse_reward("reward = if(vx > 0, 1, 0)").unwrap();
        validate_reward(&p, &pm()).unwrap();
    }

    #[test]
    fn boolean_operand_of_plus_is_a_type_error() {
        let p = parse_reward("reward = vx + (vx > 0)").unwrap();
        let err = validate_reward(&p, &pm()).unwrap_err();
        assert_eq!(err.kind, DslErrorKind::TypeError);
        assert!(err.message.contains("boolean"));
    }

    #[test]
    fn prev_fields_and_actions_resolve() {
        let p = parse_reward("reward = (x - prev_x) / dt + a0 * t").unwrap();
        validate_reward(&p, &pm()).unwrap();
    }

    #[test]
    fn out_of_range_action_component_is_unknown() {
        let p = parse_reward("reward = a1").unwrap();
        let err = validate_reward(&p, &pm()).unwrap_err();
        assert_eq!(err.kind, DslErrorKind::UnknownIdentifier);
    }

    #[test]
    fn bindings_extend_scope_in_order() {
        let p = parse_reward("let u = vx * 2\nlet w = u + 1\nreward = w").unwrap();
        validate_reward(&p, &pm()).unwrap();
        let p = parse_reward("let u = w\nlet w = 1\nreward = u").unwrap();
        assert!(validate_reward(&p, &pm()).is_err());
    }

    #[test]
    fn binding_shadowing_schema_field_rejected() {
        let p = parse_reward("let x = 1\nreward = x").unwrap();
        let err = validate_reward(&p, &pm()).unwrap_err();
        assert_eq!(err.kind, DslErrorKind::DuplicateName);
    }

    #[test]
    fn boolean_binding_rejected() {
        let p = parse_reward("let b = vx > 0\nreward = 1").unwrap();
        let err = validate_reward(&p, &pm()).unwrap_err();
        assert_eq!(err.kind, DslErrorKind::TypeError);
    }

    #[test]
    fn boolean_reward_rejected() {
        let p = parse_reward("reward = vx > 0").unwrap();
        let err = validate_reward(&p, &pm()).unwrap_err();
        assert_eq!(err.kind, DslErrorKind::TypeError);
        assert!(err.message.contains("reward expression"));
    }

    #[test]
    fn eval_program_validates() {
        let p = parse_eval("metric m = mean(abs(x))\nmetric f = final(vx)").unwrap();
        validate_eval(&p, &pm()).unwrap();
        let p = parse_eval("metric m = mean(x > 0)").unwrap();
        assert!(validate_eval(&p, &pm()).is_err());
    }
}
