//! Canonical printing. Binary, comparison and boolean nodes are printed
//! fully parenthesized so reparsing is precedence-independent; numbers use
//! the shortest decimal that round-trips to the same f64.

use std::fmt::Write;

use super::ast::{EvalProgram, Expr, ExprKind, RewardProgram};

pub fn print_expr(expr: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, expr);
    out
}

/// Canonical source for a reward program: one `let` line per binding in
/// order, then the `reward =` line, each terminated by a newline.
pub fn print_reward(program: &RewardProgram) -> String {
    let mut out = String::new();
    for b in &program.bindings {
        let _ = writeln!(out, "let {} = {}", b.name, print_expr(&b.expr));
    }
    let _ = writeln!(out, "reward = {}", print_expr(&program.reward));
    out
}

/// Canonical source for an evaluation program.
pub fn print_eval(program: &EvalProgram) -> String {
    let mut out = String::new();
    for m in &program.metrics {
        let _ = writeln!(
            out,
            "metric {} = {}({})",
            m.name,
            m.aggregator.name(),
            print_expr(&m.expr)
        );
    }
    out
}

fn write_expr(out: &mut String, expr: &Expr) {
    match &expr.kind {
        ExprKind::Number(v) => {
            debug_assert!(v.is_finite() && !v.is_sign_negative());
            let _ = write!(out, "{v}");
        }
        ExprKind::Ident(name) => out.push_str(name),
        ExprKind::Neg(inner) => {
            out.push_str("(-");
            write_expr(out, inner);
            out.push(')');
        }
        ExprKind::Not(inner) => {
            out.push_str("(not ");
            write_expr(out, inner);
            out.push(')');
        }
        ExprKind::Binary { op, lhs, rhs } => {
            out.push('(');
            write_expr(out, lhs);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, rhs);
            out.push(')');
        }
        ExprKind::Compare { op, lhs, rhs } => {
            out.push('(');
            write_expr(out, lhs);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, rhs);
            out.push(')');
        }
        ExprKind::Bool { op, lhs, rhs } => {
            out.push('(');
            write_expr(out, lhs);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, rhs);
            out.push(')');
        }
        ExprKind::Call { func, args } => {
            out.push_str(func.name());
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a);
            }
            out.push(')');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parser::{parse_eval, parse_reward};

    #[test]
    fn constant_prints_shortest_form() {
        let p = parse_reward("reward = 1.0").unwrap();
        assert_eq!(print_reward(&p), "reward = 1\n");
    }

    #[test]
    fn binding_precedes_reward() {
        let p = parse_reward("let u = cos(theta)\nreward = u").unwrap();
        assert_eq!(print_reward(&p), "let u = cos(theta)\nreward = u\n");
    }

    #[test]
    fn nested_arithmetic_round_trips() {
        let p = parse_reward("reward = vx - 0.01 * a0^2 + if(x > 1, 0, 1)").unwrap();
        let printed = print_reward(&p);
        let reparsed = parse_reward(&printed).unwrap();
        assert!(p.same_shape(&reparsed), "printed form: {printed}");
    }

    #[test]
    fn eval_program_round_trips() {
        let p = parse_eval("metric a = mean(vx * 2)\nmetric b = final(x)").unwrap();
        let reparsed = parse_eval(&print_eval(&p)).unwrap();
        assert!(p.same_shape(&reparsed));
    }
}
