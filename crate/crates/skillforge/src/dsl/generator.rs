//! Seeded random program generation for property suites and self-checks.
//!
//! Generated programs are valid by construction against the schema they
//! were generated for: identifiers come from the schema scope, expressions
//! are well-typed, and number literals are finite and non-negative (the
//! canonical form), so print/parse round-trips are exact.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::envs::EnvSchema;

use super::ast::{
    Aggregator, BinOp, Binding, BoolOp, CmpOp, EvalProgram, Expr, ExprKind, Func, MetricDef,
    RewardProgram, Span,
};

fn span() -> Span {
    Span::new(0, 0)
}

fn scope_names(schema: &EnvSchema, bindings: &[String]) -> Vec<String> {
    let mut names = schema.identifier_names();
    names.extend(bindings.iter().cloned());
    names
}

fn leaf_number(rng: &mut ChaCha12Rng) -> Expr {
    let v: f64 = match rng.random_range(0..4) {
        0 => rng.random_range(0..10) as f64,
        1 => rng.random_range(0.0..1.0),
        2 => rng.random_range(0.0..100.0),
        _ => f64::from(rng.random::<f32>().abs()),
    };
    Expr::new(ExprKind::Number(v.abs()), span())
}

fn leaf(rng: &mut ChaCha12Rng, scope: &[String]) -> Expr {
    if rng.random_bool(0.5) || scope.is_empty() {
        leaf_number(rng)
    } else {
        let name = scope[rng.random_range(0..scope.len())].clone();
        Expr::new(ExprKind::Ident(name), span())
    }
}

/// Random numeric-typed expression of bounded depth.
pub fn random_numeric_expr(rng: &mut ChaCha12Rng, scope: &[String], depth: usize) -> Expr {
    if depth == 0 {
        return leaf(rng, scope);
    }
    match rng.random_range(0..8) {
        0 | 1 => leaf(rng, scope),
        2 => Expr::new(
            ExprKind::Neg(Box::new(random_numeric_expr(rng, scope, depth - 1))),
            span(),
        ),
        3 | 4 => {
            let op = match rng.random_range(0..5) {
                0 => BinOp::Add,
                1 => BinOp::Sub,
                2 => BinOp::Mul,
                3 => BinOp::Div,
                _ => BinOp::Pow,
            };
            Expr::new(
                ExprKind::Binary {
                    op,
                    lhs: Box::new(random_numeric_expr(rng, scope, depth - 1)),
                    rhs: Box::new(random_numeric_expr(rng, scope, depth - 1)),
                },
                span(),
            )
        }
        5 | 6 => {
            let func = match rng.random_range(0..9) {
                0 => Func::Abs,
                1 => Func::Min,
                2 => Func::Max,
                3 => Func::Exp,
                4 => Func::Log,
                5 => Func::Sqrt,
                6 => Func::Tanh,
                7 => Func::Sin,
                _ => Func::Cos,
            };
            let args = (0..func.arity())
                .map(|_| random_numeric_expr(rng, scope, depth - 1))
                .collect();
            Expr::new(ExprKind::Call { func, args }, span())
        }
        _ => {
            if rng.random_bool(0.5) {
                Expr::new(
                    ExprKind::Call {
                        func: Func::Clip,
                        args: vec![
                            random_numeric_expr(rng, scope, depth - 1),
                            random_numeric_expr(rng, scope, depth - 1),
                            random_numeric_expr(rng, scope, depth - 1),
                        ],
                    },
                    span(),
                )
            } else {
                Expr::new(
                    ExprKind::Call {
                        func: Func::If,
                        args: vec![
                            random_bool_expr(rng, scope, depth - 1),
                            random_numeric_expr(rng, scope, depth - 1),
                            random_numeric_expr(rng, scope, depth - 1),
                        ],
                    },
                    span(),
                )
            }
        }
    }
}

/// Random boolean-typed expression of bounded depth (at least one
/// comparison at the leaves).
pub fn random_bool_expr(rng: &mut ChaCha12Rng, scope: &[String], depth: usize) -> Expr {
    let compare = |rng: &mut ChaCha12Rng, d: usize| {
        let op = match rng.random_range(0..5) {
            0 => CmpOp::Lt,
            1 => CmpOp::Le,
            2 => CmpOp::Gt,
            3 => CmpOp::Ge,
            _ => CmpOp::Eq,
        };
        Expr::new(
            ExprKind::Compare {
                op,
                lhs: Box::new(random_numeric_expr(rng, scope, d)),
                rhs: Box::new(random_numeric_expr(rng, scope, d)),
            },
            span(),
        )
    };
    if depth <= 1 {
        return compare(rng, 0);
    }
    match rng.random_range(0..4) {
        0 | 1 => compare(rng, depth - 1),
        2 => Expr::new(
            ExprKind::Not(Box::new(random_bool_expr(rng, scope, depth - 1))),
            span(),
        ),
        _ => {
            let op = if rng.random_bool(0.5) { BoolOp::And } else { BoolOp::Or };
            Expr::new(
                ExprKind::Bool {
                    op,
                    lhs: Box::new(random_bool_expr(rng, scope, depth - 1)),
                    rhs: Box::new(random_bool_expr(rng, scope, depth - 1)),
                },
                span(),
            )
        }
    }
}

/// Random reward program, valid against `schema` by construction.
pub fn random_reward_program(rng: &mut ChaCha12Rng, schema: &EnvSchema) -> RewardProgram {
    let n_bindings = rng.random_range(0..3);
    let mut bindings = Vec::with_capacity(n_bindings);
    let mut binding_names: Vec<String> = Vec::new();
    for i in 0..n_bindings {
        let name = format!("b{i}");
        let scope = scope_names(schema, &binding_names);
        let depth = rng.random_range(1..4);
        let expr = random_numeric_expr(rng, &scope, depth);
        bindings.push(Binding {
            name: name.clone(),
            name_span: span(),
            expr,
        });
        binding_names.push(name);
    }
    let scope = scope_names(schema, &binding_names);
    let reward_depth = rng.random_range(1..5);
    let reward = random_numeric_expr(rng, &scope, reward_depth);
    let mut program = RewardProgram {
        bindings,
        reward,
        source: String::new(),
    };
    program.source = super::print::print_reward(&program);
    program
}

/// Random evaluation program, valid against `schema` by construction.
pub fn random_eval_program(rng: &mut ChaCha12Rng, schema: &EnvSchema) -> EvalProgram {
    let n = rng.random_range(1..4);
    let scope = scope_names(schema, &[]);
    let metrics = (0..n)
        .map(|i| {
            let aggregator = match rng.random_range(0..6) {
                0 => Aggregator::Mean,
                1 => Aggregator::Sum,
                2 => Aggregator::Min,
                3 => Aggregator::Max,
                4 => Aggregator::Final,
                _ => Aggregator::Std,
            };
            let depth = rng.random_range(1..4);
            MetricDef {
                name: format!("m{i}"),
                name_span: span(),
                aggregator,
                expr: random_numeric_expr(rng, &scope, depth),
            }
        })
        .collect();
    let mut program = EvalProgram {
        metrics,
        source: String::new(),
    };
    program.source = super::print::print_eval(&program);
    program
}

/// Random finite observation/action values conforming to a schema, for
/// evaluation-soundness probes.
pub fn random_context_values(
    rng: &mut ChaCha12Rng,
    schema: &EnvSchema,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let draw = |rng: &mut ChaCha12Rng| -> f64 { rng.random_range(-100.0..100.0) };
    let prev = (0..schema.fields.len()).map(|_| draw(rng)).collect();
    let next = (0..schema.fields.len()).map(|_| draw(rng)).collect();
    let action = (0..schema.action_dim)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    (prev, next, action)
}

/// Random byte soup for fuzzing, biased toward grammar-adjacent content so
/// the parser's deeper paths get exercised, not just the lexer. One mode
/// emits pathological runs (deep nesting, huge literals, unary chains)
/// that would break an unguarded recursive parser.
pub fn random_fuzz_input(rng: &mut ChaCha12Rng, max_len: usize) -> String {
    let len = rng.random_range(0..max_len.max(1));
    let mode = rng.random_range(0..4);
    let mut out = String::with_capacity(len);
    const TOKENS: [&str; 24] = [
        "let ", "reward", "metric", " = ", "(", ")", ",", "+", "-", "*", "/", "^", "<", "<=",
        ">=", "and ", "or ", "not ", "if", "clip", "x", "vx", "1.5", "\n",
    ];
    const RUNS: [&str; 6] = ["(", "-", "not ", "9", "if(", "^2"];
    match mode {
        0 => {
            while out.len() < len {
                out.push(rng.random_range(0x20u8..0x7f) as char);
            }
        }
        1 => {
            while out.len() < len {
                out.push(char::from_u32(rng.random_range(0..0x11_0000)).unwrap_or('?'));
            }
        }
        2 => {
            while out.len() < len {
                out.push_str(TOKENS[rng.random_range(0..TOKENS.len())]);
            }
        }
        _ => {
            out.push_str("reward = ");
            let run = RUNS[rng.random_range(0..RUNS.len())];
            while out.len() < len {
                out.push_str(run);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_eval, parse_reward, print_eval, print_reward, validate_eval, validate_reward};
    use crate::envs;
    use rand_chacha::rand_core::SeedableRng;

    #[test]
    fn generated_programs_validate_and_round_trip() {
        let schema = envs::schema("cartpole").unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        for _ in 0..200 {
            let p = random_reward_program(&mut rng, &schema);
            validate_reward(&p, &schema).expect("generated program validates");
            let reparsed = parse_reward(&print_reward(&p)).expect("canonical form parses");
            assert!(p.same_shape(&reparsed));

            let e = random_eval_program(&mut rng, &schema);
            validate_eval(&e, &schema).expect("generated metrics validate");
            let reparsed = parse_eval(&print_eval(&e)).expect("canonical form parses");
            assert!(e.same_shape(&reparsed));
        }
    }
}
