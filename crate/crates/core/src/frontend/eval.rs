//! Direct evaluation of expression trees over known values.
//!
//! Used for constant folding and parameter elaboration. The simulator has
//! its own compiled evaluator; the two are cross-checked in tests.

use super::ast::{mask, BinaryOp, Expr, UnaryOp};
use super::width::{child_contexts, eval_width, WidthEnv};

/// Values of identifiers, where known.
pub trait ValueEnv: WidthEnv {
    fn value_of(&self, name: &str) -> Option<u64>;
    fn array_value(&self, _name: &str, _index: u64) -> Option<u64> {
        None
    }
}

/// Evaluate `e` in a context of width `ctx` (0 when self-determined).
/// Returns `None` if any needed identifier has no known value.
pub fn eval(e: &Expr, ctx: u32, env: &dyn ValueEnv) -> Option<u64> {
    let w = eval_width(e, ctx, env);
    let ctxs = child_contexts(e, w, env);
    let m = mask(w);
    let sub = |i: usize, x: &Expr| eval(x, ctxs[i], env);
    let v = match e {
        Expr::Ident(n) => env.value_of(n)?,
        Expr::Literal(l) => l.value,
        Expr::Index { base, index } => {
            let idx = sub(1, index)?;
            match base.as_ref() {
                Expr::Ident(n) if env.is_array(n) => env.array_value(n, idx)?,
                b => {
                    let bv = eval(b, 0, env)?;
                    if idx >= 64 {
                        0
                    } else {
                        (bv >> idx) & 1
                    }
                }
            }
        }
        Expr::Slice { base, msb, lsb } => {
            let bv = sub(0, base)?;
            (bv >> lsb) & mask(msb - lsb + 1)
        }
        Expr::Concat(parts) => concat(parts, env)?,
        Expr::Repeat { count, parts } => {
            let unit = concat(parts, env)?;
            let uw: u32 = parts
                .iter()
                .map(|p| eval_width(p, 0, env))
                .sum();
            let mut acc = 0u64;
            for _ in 0..*count {
                acc = shl(acc, uw) | unit;
            }
            acc
        }
        Expr::Unary { op, operand } => {
            let v = sub(0, operand)?;
            let ow = eval_width(operand, ctxs[0], env);
            apply_unary(*op, v, ow, w)
        }
        Expr::Binary { op, lhs, rhs } => {
            if *op == BinaryOp::LogicAnd || *op == BinaryOp::LogicOr {
                let a = sub(0, lhs);
                let b = sub(1, rhs);
                return match (op, a, b) {
                    (BinaryOp::LogicAnd, Some(0), _) | (BinaryOp::LogicAnd, _, Some(0)) => Some(0),
                    (BinaryOp::LogicOr, Some(a), _) if a != 0 => Some(1),
                    (BinaryOp::LogicOr, _, Some(b)) if b != 0 => Some(1),
                    (_, Some(a), Some(b)) => Some(apply_binary(*op, a, b, w)),
                    _ => None,
                };
            }
            let a = sub(0, lhs)?;
            let b = sub(1, rhs)?;
            apply_binary(*op, a, b, w)
        }
        Expr::Ternary {
            cond,
            then_expr,
            else_expr,
        } => {
            if sub(0, cond)? != 0 {
                sub(1, then_expr)?
            } else {
                sub(2, else_expr)?
            }
        }
    };
    Some(v & m)
}

fn concat(parts: &[Expr], env: &dyn ValueEnv) -> Option<u64> {
    let mut acc = 0u64;
    for p in parts {
        let pw = eval_width(p, 0, env);
        acc = shl(acc, pw) | eval(p, 0, env)?;
    }
    Some(acc)
}

fn shl(v: u64, n: u32) -> u64 {
    if n >= 64 {
        0
    } else {
        v << n
    }
}

/// `operand_width` is the width the operand was evaluated at; `w` is the
/// result width.
pub fn apply_unary(op: UnaryOp, v: u64, operand_width: u32, w: u32) -> u64 {
    let m = mask(w);
    match op {
        UnaryOp::Not => !v & m,
        UnaryOp::Neg => v.wrapping_neg() & m,
        UnaryOp::LogicNot => (v == 0) as u64,
        UnaryOp::RedAnd => (v == mask(operand_width)) as u64,
        UnaryOp::RedOr => (v != 0) as u64,
        UnaryOp::RedXor => (v.count_ones() & 1) as u64,
    }
}

/// Operands already evaluated at their context widths; `w` is the result
/// width for arithmetic/bitwise/shift ops.
pub fn apply_binary(op: BinaryOp, a: u64, b: u64, w: u32) -> u64 {
    let m = mask(w);
    match op {
        BinaryOp::Add => a.wrapping_add(b) & m,
        BinaryOp::Sub => a.wrapping_sub(b) & m,
        BinaryOp::Mul => a.wrapping_mul(b) & m,
        BinaryOp::Div => {
            if b == 0 {
                m
            } else {
                (a / b) & m
            }
        }
        BinaryOp::Mod => {
            if b == 0 {
                m
            } else {
                (a % b) & m
            }
        }
        BinaryOp::Shl => {
            if b >= 64 {
                0
            } else {
                (a << b) & m
            }
        }
        BinaryOp::Shr => {
            if b >= 64 {
                0
            } else {
                (a >> b) & m
            }
        }
        BinaryOp::And => a & b,
        BinaryOp::Or => a | b,
        BinaryOp::Xor => a ^ b,
        BinaryOp::LogicAnd => (a != 0 && b != 0) as u64,
        BinaryOp::LogicOr => (a != 0 || b != 0) as u64,
        BinaryOp::Eq => (a == b) as u64,
        BinaryOp::Ne => (a != b) as u64,
        BinaryOp::Lt => (a < b) as u64,
        BinaryOp::Le => (a <= b) as u64,
        BinaryOp::Gt => (a > b) as u64,
        BinaryOp::Ge => (a >= b) as u64,
    }
}

/// A [`ValueEnv`] from closures; handy for tests and one-off folding.
pub struct FnEnv<W, V>
where
    W: Fn(&str) -> Option<u32>,
    V: Fn(&str) -> Option<u64>,
{
    pub width: W,
    pub value: V,
}

impl<W, V> WidthEnv for FnEnv<W, V>
where
    W: Fn(&str) -> Option<u32>,
    V: Fn(&str) -> Option<u64>,
{
    fn width_of(&self, name: &str) -> Option<u32> {
        (self.width)(name)
    }
}

impl<W, V> ValueEnv for FnEnv<W, V>
where
    W: Fn(&str) -> Option<u32>,
    V: Fn(&str) -> Option<u64>,
{
    fn value_of(&self, name: &str) -> Option<u64> {
        (self.value)(name)
    }
}

/// Evaluate an expression that references no identifiers.
pub fn eval_closed(e: &Expr) -> Option<u64> {
    let env = FnEnv {
        width: |_: &str| None,
        value: |_: &str| None,
    };
    eval(e, 0, &env)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env() -> FnEnv<impl Fn(&str) -> Option<u32>, impl Fn(&str) -> Option<u64>> {
        FnEnv {
            width: |n: &str| match n {
                "a" => Some(4),
                "b" => Some(4),
                _ => None,
            },
            value: |n: &str| match n {
                "a" => Some(0xf),
                "b" => Some(0x1),
                _ => None,
            },
        }
    }

    #[test]
    fn carry_survives_in_wider_context() {
        let e = Expr::binary(BinaryOp::Add, Expr::ident("a"), Expr::ident("b"));
        assert_eq!(eval(&e, 0, &env()), Some(0));
        assert_eq!(eval(&e, 5, &env()), Some(0x10));
    }

    #[test]
    fn comparison_operands_sized_to_each_other() {
        // (a + b) == 5'd16 compares at 5 bits, so the carry is kept.
        let e = Expr::binary(
            BinaryOp::Eq,
            Expr::binary(BinaryOp::Add, Expr::ident("a"), Expr::ident("b")),
            Expr::sized(5, 16),
        );
        assert_eq!(eval(&e, 0, &env()), Some(1));
    }

    #[test]
    fn reductions_and_concat() {
        let e = Expr::unary(UnaryOp::RedAnd, Expr::ident("a"));
        assert_eq!(eval(&e, 8, &env()), Some(1));
        let not = Expr::unary(UnaryOp::Not, Expr::ident("b"));
        assert_eq!(eval(&not, 8, &env()), Some(0xfe));
        let cat = Expr::Concat(vec![Expr::ident("b"), Expr::ident("a")]);
        assert_eq!(eval(&cat, 0, &env()), Some(0x1f));
        let rep = Expr::Repeat {
            count: 3,
            parts: vec![Expr::sized(2, 2)],
        };
        assert_eq!(eval(&rep, 0, &env()), Some(0b101010));
    }

    #[test]
    fn division_by_zero_is_all_ones() {
        let e = Expr::binary(BinaryOp::Div, Expr::ident("a"), Expr::sized(4, 0));
        assert_eq!(eval(&e, 0, &env()), Some(0xf));
    }

    #[test]
    fn unknown_identifier_is_not_constant() {
        let e = Expr::binary(BinaryOp::Add, Expr::ident("zz"), Expr::lit(1));
        assert_eq!(eval(&e, 0, &env()), None);
        let t = Expr::ternary(Expr::sized(1, 1), Expr::ident("a"), Expr::ident("zz"));
        assert_eq!(eval(&t, 0, &env()), Some(0xf));
    }
}
