//! AST for the reward and evaluation-metric languages.
//!
//! Both languages share one expression grammar. A reward program is a list of
//! `let` bindings followed by a single `reward = <expr>` line; an evaluation
//! program is a list of `metric <name> = <aggregator>(<expr>)` lines.

use std::fmt;

/// Source position of a token or expression, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Self {
        Span { line, col }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoolOp {
    And,
    Or,
}

impl BoolOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BoolOp::And => "and",
            BoolOp::Or => "or",
        }
    }
}

/// Built-in functions. `If` is the three-argument conditional
/// `if(cond, then, else)`; everything else is numeric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Abs,
    Min,
    Max,
    Exp,
    Log,
    Sqrt,
    Tanh,
    Sin,
    Cos,
    Clip,
    If,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Tanh => "tanh",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Clip => "clip",
            Func::If => "if",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "tanh" => Func::Tanh,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "clip" => Func::Clip,
            "if" => Func::If,
            _ => return None,
        })
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Abs
            | Func::Exp
            | Func::Log
            | Func::Sqrt
            | Func::Tanh
            | Func::Sin
            | Func::Cos => 1,
            Func::Min | Func::Max => 2,
            Func::Clip | Func::If => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    /// Finite, non-negative numeric literal (minus signs parse as `Neg`).
    Number(f64),
    Ident(String),
    Neg(Box<Expr>),
    Not(Box<Expr>),
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Compare {
        op: CmpOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Bool {
        op: BoolOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Call {
        func: Func,
        args: Vec<Expr>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    /// Structural equality ignoring source spans. Canonical printing changes
    /// positions, so round-trip checks compare with this rather than `==`.
    pub fn same_shape(&self, other: &Expr) -> bool {
        match (&self.kind, &other.kind) {
            (ExprKind::Number(a), ExprKind::Number(b)) => a.to_bits() == b.to_bits(),
            (ExprKind::Ident(a), ExprKind::Ident(b)) => a == b,
            (ExprKind::Neg(a), ExprKind::Neg(b)) | (ExprKind::Not(a), ExprKind::Not(b)) => {
                a.same_shape(b)
            }
            (
                ExprKind::Binary { op: o1, lhs: l1, rhs: r1 },
                ExprKind::Binary { op: o2, lhs: l2, rhs: r2 },
            ) => o1 == o2 && l1.same_shape(l2) && r1.same_shape(r2),
            (
                ExprKind::Compare { op: o1, lhs: l1, rhs: r1 },
                ExprKind::Compare { op: o2, lhs: l2, rhs: r2 },
            ) => o1 == o2 && l1.same_shape(l2) && r1.same_shape(r2),
            (
                ExprKind::Bool { op: o1, lhs: l1, rhs: r1 },
                ExprKind::Bool { op: o2, lhs: l2, rhs: r2 },
            ) => o1 == o2 && l1.same_shape(l2) && r1.same_shape(r2),
            (
                ExprKind::Call { func: f1, args: a1 },
                ExprKind::Call { func: f2, args: a2 },
            ) => {
                f1 == f2
                    && a1.len() == a2.len()
                    && a1.iter().zip(a2).all(|(x, y)| x.same_shape(y))
            }
            _ => false,
        }
    }
}

/// One `let name = expr` line.
#[derive(Debug, Clone, PartialEq)]
pub struct Binding {
    pub name: String,
    pub name_span: Span,
    pub expr: Expr,
}

/// Parsed reward program: ordered bindings plus the final reward expression.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardProgram {
    pub bindings: Vec<Binding>,
    pub reward: Expr,
    pub source: String,
}

impl RewardProgram {
    pub fn same_shape(&self, other: &RewardProgram) -> bool {
        self.bindings.len() == other.bindings.len()
            && self
                .bindings
                .iter()
                .zip(&other.bindings)
                .all(|(a, b)| a.name == b.name && a.expr.same_shape(&b.expr))
            && self.reward.same_shape(&other.reward)
    }
}

/// Per-episode reduction applied to a metric's step values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregator {
    Mean,
    Sum,
    Min,
    Max,
    Final,
    Std,
}

impl Aggregator {
    pub fn name(self) -> &'static str {
        match self {
            Aggregator::Mean => "mean",
            Aggregator::Sum => "sum",
            Aggregator::Min => "min",
            Aggregator::Max => "max",
            Aggregator::Final => "final",
            Aggregator::Std => "std",
        }
    }

    pub fn from_name(name: &str) -> Option<Aggregator> {
        Some(match name {
            "mean" => Aggregator::Mean,
            "sum" => Aggregator::Sum,
            "min" => Aggregator::Min,
            "max" => Aggregator::Max,
            "final" => Aggregator::Final,
            "std" => Aggregator::Std,
            _ => return None,
        })
    }
}

/// One `metric name = aggregator(expr)` line.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricDef {
    pub name: String,
    pub name_span: Span,
    pub aggregator: Aggregator,
    pub expr: Expr,
}

/// Parsed evaluation program: an ordered list of metric definitions.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalProgram {
    pub metrics: Vec<MetricDef>,
    pub source: String,
}

impl EvalProgram {
    pub fn same_shape(&self, other: &EvalProgram) -> bool {
        self.metrics.len() == other.metrics.len()
            && self.metrics.iter().zip(&other.metrics).all(|(a, b)| {
                a.name == b.name && a.aggregator == b.aggregator && a.expr.same_shape(&b.expr)
            })
    }
}
